use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gfq_conv::capacity::{capacity_curves, snr_gap_at_rate};
use gfq_conv::decoder::{branch_metrics, max_log_map_decode, DecoderOptions, Termination};
use gfq_conv::search::{search_codes, SearchStrategy};
use gfq_conv::sim::{awgn, noise_variance, run_monte_carlo, Modulation, SimConfig, StopRule};
use gfq_conv::spectrum::{compute_spectrum, verify_truncation, MultiplicityConvention};
use gfq_conv::{Code, CodeDescriptor, Constellation, FieldElement, FieldSpec};
use num_complex::Complex64;

use crate::output::{csv_reader, write_csv, write_json, RunConfig};
use crate::sweep::{parse_count, parse_grid};
use crate::{
    CapacityArgs, CodeArgs, ConstellationArgs, ConventionArg, DecodeArgs, EncodeArgs, FieldArgs, Format, GlobalArgs,
    ModArg, SearchArgs, SimulateArgs, SpectrumArgs, StrategyArg, TerminationArg,
};

fn field_for_q(q: u32, poly: Option<u32>) -> Result<FieldSpec> {
    match poly {
        Some(p) => {
            if !q.is_power_of_two() || q < 4 {
                bail!("q={q} is not a power of two >= 4");
            }
            Ok(FieldSpec::new(q.trailing_zeros(), p)?)
        }
        None => Ok(FieldSpec::default_for_q(q)?),
    }
}

pub fn resolve_field(a: &FieldArgs) -> Result<FieldSpec> {
    match (a.q, a.m, a.poly) {
        (Some(q), _, poly) => field_for_q(q, poly),
        (None, Some(m), Some(poly)) => Ok(FieldSpec::new(m, poly)?),
        _ => bail!("give --q, or --m with --poly"),
    }
}

pub fn resolve_code(a: &CodeArgs) -> Result<Code> {
    if let Some(path) = &a.code {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        return serde_json::from_str::<Code>(&text).with_context(|| format!("bad code descriptor in {}", path.display()));
    }
    let q = a.q.ok_or_else(|| anyhow!("give --code, or --q with --a1 --a2 --a3"))?;
    let (Some(a1), Some(a2), Some(a3)) = (a.a1, a.a2, a.a3) else {
        bail!("--q needs --a1, --a2 and --a3");
    };
    Ok(Code::from_values(field_for_q(q, a.poly)?, a1, a2, a3)?)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct FieldTables {
    m: u32,
    q: u32,
    poly: u32,
    /// `antilog[i] = D^i`
    antilog: Vec<u8>,
    /// `log[x]`, absent for 0
    log: Vec<Option<u16>>,
}

pub fn field_info(g: &GlobalArgs, a: &FieldArgs) -> Result<()> {
    let f = resolve_field(a)?;
    let q = f.size();
    let log: Vec<Option<u16>> = (0..q).map(|x| (x > 0).then(|| f.log_table()[x])).collect();
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(
            g.out.as_deref(),
            &FieldTables { m: f.m(), q: f.q(), poly: f.poly(), antilog: f.antilog_table().to_vec(), log },
        ),
        Format::Csv => write_csv::<()>(
            g.out.as_deref(),
            None,
            &["i", "antilog", "log"],
            (0..q).map(|i| vec![i.to_string(), f.antilog_table()[i].to_string(), fmt_opt(log[i])]),
        ),
    }
}

#[derive(Serialize)]
struct PointRow {
    symbol: u32,
    bits: String,
    i: i32,
    q: i32,
    norm_i: f64,
    norm_q: f64,
}

pub fn constellation(g: &GlobalArgs, a: &ConstellationArgs) -> Result<()> {
    let f = resolve_field(&a.field)?;
    let c = Constellation::qam(&f)?;
    let rows: Vec<PointRow> = f
        .elements()
        .map(|x| {
            let (i, q) = c.lattice_point(x);
            let p = c.point(x);
            PointRow {
                symbol: x.value(),
                bits: format!("{:0w$b}", x.value(), w = f.m() as usize),
                i,
                q,
                norm_i: p.re,
                norm_q: p.im,
            }
        })
        .collect();
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(g.out.as_deref(), &rows),
        Format::Csv => write_csv::<()>(
            g.out.as_deref(),
            None,
            &["symbol", "bits", "I", "Q", "norm_I", "norm_Q"],
            rows.iter().map(|r| {
                vec![
                    r.symbol.to_string(),
                    r.bits.clone(),
                    r.i.to_string(),
                    r.q.to_string(),
                    r.norm_i.to_string(),
                    r.norm_q.to_string(),
                ]
            }),
        ),
    }
}

/// Symbols from a CSV with a `symbol` column or from one integer per line.
fn read_symbols(path: &Path, field: &FieldSpec) -> Result<Vec<FieldElement>> {
    let records = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?
        .into_records();
    let mut out = Vec::new();
    let mut col = 0;
    let mut first = true;
    for rec in records {
        let rec = rec?;
        if first {
            first = false;
            if rec.get(0).is_some_and(|s| s.parse::<u32>().is_err()) {
                col = rec
                    .iter()
                    .position(|h| h == "symbol")
                    .ok_or_else(|| anyhow!("{} has a header but no `symbol` column", path.display()))?;
                continue;
            }
        }
        let s = rec.get(col).ok_or_else(|| anyhow!("short row in {}", path.display()))?;
        let v: u32 = s.parse().with_context(|| format!("bad symbol {s:?}"))?;
        out.push(field.element(v)?);
    }
    Ok(out)
}

pub fn encode(g: &GlobalArgs, a: &EncodeArgs) -> Result<()> {
    let code = resolve_code(&a.code)?;
    let field = code.field().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let inputs: Vec<FieldElement> = match (&a.input, a.random) {
        (Some(p), None) => read_symbols(p, &field)?,
        (None, Some(n)) => (0..n).map(|_| FieldElement(rng.random_range(0..field.size()) as u8)).collect(),
        _ => bail!("give --in or --random"),
    };
    let frame = code.encode_frame(&inputs, a.terminate);
    let config = RunConfig::new("encode", g, a);

    if let Some(snr) = a.channel_snr_db {
        let cons = Constellation::qam(&field)?;
        let var = noise_variance(snr);
        let tx_s: Vec<Complex64> = frame.systematic.iter().map(|&s| cons.point(s)).collect();
        let tx_p: Vec<Complex64> = frame.parity.iter().map(|&p| cons.point(p)).collect();
        let rx_s = awgn(&tx_s, var, &mut rng);
        let rx_p = awgn(&tx_p, var, &mut rng);
        return write_csv(
            g.out.as_deref(),
            Some(&config),
            &["stage", "sys_I", "sys_Q", "par_I", "par_Q"],
            rx_s.iter().zip(&rx_p).enumerate().map(|(i, (s, p))| {
                vec![i.to_string(), s.re.to_string(), s.im.to_string(), p.re.to_string(), p.im.to_string()]
            }),
        );
    }

    let mut state = FieldElement::ZERO;
    let rows: Vec<Vec<String>> = frame
        .systematic
        .iter()
        .zip(&frame.parity)
        .enumerate()
        .map(|(i, (&s, &p))| {
            state = code.step(state, s).0;
            vec![i.to_string(), s.to_string(), p.to_string(), state.to_string()]
        })
        .collect();
    write_csv(g.out.as_deref(), Some(&config), &["stage", "systematic", "parity", "state"], rows)
}

#[derive(Deserialize)]
struct Observation {
    stage: Option<usize>,
    #[serde(rename = "sys_I")]
    sys_i: f64,
    #[serde(rename = "sys_Q")]
    sys_q: f64,
    #[serde(rename = "par_I")]
    par_i: f64,
    #[serde(rename = "par_Q")]
    par_q: f64,
}

#[derive(Serialize)]
struct DecodeRecord<'a, C: Serialize> {
    config: &'a C,
    decisions: Vec<u32>,
    /// Per stage, posteriors shifted so the best symbol scores 0.
    posteriors: Vec<Vec<f64>>,
}

pub fn decode(g: &GlobalArgs, a: &DecodeArgs) -> Result<()> {
    let code = resolve_code(&a.code)?;
    let cons = Constellation::qam(code.field())?;
    let mut rdr = csv_reader(&a.input)?;
    let mut rs = Vec::new();
    let mut rp = Vec::new();
    for (i, rec) in rdr.deserialize::<Observation>().enumerate() {
        let o = rec?;
        if o.stage.is_some_and(|s| s != i) {
            bail!("row {i} has stage {}; stages must run 0, 1, 2, ...", o.stage.unwrap());
        }
        rs.push(Complex64::new(o.sys_i, o.sys_q));
        rp.push(Complex64::new(o.par_i, o.par_q));
    }
    if rs.is_empty() {
        bail!("{} holds no observations", a.input.display());
    }
    let metrics = branch_metrics(&rs, &rp, &cons, noise_variance(a.snr_db))?;
    let termination = match a.termination {
        TerminationArg::Open => Termination::Open,
        TerminationArg::Zero => Termination::Zero,
    };
    let out = max_log_map_decode(&code.trellis(), &metrics, DecoderOptions { termination, normalize: a.normalize });
    let post = out.posteriors.normalized();
    let config = RunConfig::new("decode", g, a);
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(
            g.out.as_deref(),
            &DecodeRecord {
                config: &config,
                decisions: out.decisions.iter().map(|d| d.value()).collect(),
                posteriors: (0..post.num_stages()).map(|i| post.stage(i).to_vec()).collect(),
            },
        ),
        Format::Csv => write_csv(
            g.out.as_deref(),
            Some(&config),
            &["stage", "symbol", "margin"],
            out.decisions.iter().enumerate().map(|(i, d)| {
                let row = post.stage(i);
                let runner_up = row
                    .iter()
                    .enumerate()
                    .filter(|&(u, _)| u != d.index())
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                vec![i.to_string(), d.to_string(), (row[d.index()] - runner_up).to_string()]
            }),
        ),
    }
}

/// JSON schema of `spectrum`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub code: CodeDescriptor,
    pub d1_num: u32,
    pub d2_num: u32,
    pub scale_sq: u32,
    pub n1: u64,
    pub n2: u64,
    pub convention: MultiplicityConvention,
    pub n1_by_length: [u64; 2],
    pub n2_by_length: [u64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_min_num: Option<u32>,
}

#[derive(Serialize)]
struct WithConfig<'a, C: Serialize, T: Serialize> {
    config: &'a C,
    #[serde(flatten)]
    body: T,
}

fn two_places(num: u32, den: u32) -> String {
    let h = num as u64 * 100 / den as u64;
    format!("{}.{:02}", h / 100, h % 100)
}

pub fn spectrum(g: &GlobalArgs, a: &SpectrumArgs) -> Result<()> {
    let code = resolve_code(&a.code)?;
    let cons = Constellation::qam(code.field())?;
    let convention = match a.convention {
        ConventionArg::Unordered => MultiplicityConvention::Unordered,
        ConventionArg::Ordered => MultiplicityConvention::Ordered,
    };
    let s = compute_spectrum(&code, &cons).with_convention(convention);
    let record = SpectrumRecord {
        code: code.descriptor(),
        d1_num: s.d1_num,
        d2_num: s.d2_num,
        scale_sq: s.scale_sq,
        n1: s.n1,
        n2: s.n2,
        convention,
        n1_by_length: s.n1_by_length,
        n2_by_length: s.n2_by_length,
        truncation_min_num: a.truncation.then(|| verify_truncation(&code, &cons).num),
    };
    eprintln!(
        "{} d1^2={} n1={} d2^2={} n2={}",
        code.coeffs(),
        two_places(s.d1_num, s.scale_sq),
        s.n1,
        two_places(s.d2_num, s.scale_sq),
        s.n2
    );
    let config = RunConfig::new("spectrum", g, a);
    match g.format.unwrap_or(Format::Json) {
        Format::Json => write_json(g.out.as_deref(), &WithConfig { config: &config, body: &record }),
        Format::Csv => write_csv(
            g.out.as_deref(),
            Some(&config),
            &["a1", "a2", "a3", "d1_num", "n1", "d2_num", "n2", "scale_sq", "convention", "truncation_min_num"],
            [vec![
                record.code.a1.to_string(),
                record.code.a2.to_string(),
                record.code.a3.to_string(),
                record.d1_num.to_string(),
                record.n1.to_string(),
                record.d2_num.to_string(),
                record.n2.to_string(),
                record.scale_sq.to_string(),
                format!("{convention:?}").to_lowercase(),
                fmt_opt(record.truncation_min_num),
            ]],
        ),
    }
}

/// One ranked row of `search`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRow {
    pub rank: usize,
    /// Index of the `(d1, n1, d2, n2)` equivalence class, 0 for the best.
    pub class: usize,
    pub a1: u32,
    pub a2: u32,
    pub a3: u32,
    pub d1_num: u32,
    pub n1: u64,
    pub d2_num: u32,
    pub n2: u64,
    pub scale_sq: u32,
}

#[derive(Serialize)]
struct SearchRecord<'a, C: Serialize> {
    config: &'a C,
    q: u32,
    strategy: SearchStrategy,
    search_space: usize,
    max_d1_num: u32,
    scale_sq: u32,
    spectra_computed: usize,
    rows: Vec<SearchRow>,
}

pub fn search(g: &GlobalArgs, a: &SearchArgs) -> Result<()> {
    let field = field_for_q(a.q, a.poly)?;
    let cons = Constellation::qam(&field)?;
    let strategy = match a.strategy {
        StrategyArg::Auto => SearchStrategy::default_for_q(a.q),
        StrategyArg::Exhaustive => SearchStrategy::Exhaustive,
        StrategyArg::TwoPhase => SearchStrategy::TwoPhase,
    };
    let report = search_codes(&field, &cons, strategy)?;
    eprintln!(
        "searched {} triples ({:?}) in {} ms; max d1^2 = {}/{}",
        report.search_space, strategy, report.elapsed_ms, report.max_d1_num, report.scale_sq
    );
    let take = if a.top == 0 { usize::MAX } else { a.top };
    let mut class = 0;
    let rows: Vec<SearchRow> = report
        .ranked
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let s = &e.spectrum;
            if i > 0 {
                let p = &report.ranked[i - 1].spectrum;
                if (p.d1_num, p.n1, p.d2_num, p.n2) != (s.d1_num, s.n1, s.d2_num, s.n2) {
                    class += 1;
                }
            }
            SearchRow {
                rank: i + 1,
                class,
                a1: e.coeffs.a1.value(),
                a2: e.coeffs.a2.value(),
                a3: e.coeffs.a3.value(),
                d1_num: s.d1_num,
                n1: s.n1,
                d2_num: s.d2_num,
                n2: s.n2,
                scale_sq: s.scale_sq,
            }
        })
        .take(take)
        .collect();
    let config = RunConfig::new("search", g, a);
    match g.format.unwrap_or(Format::Json) {
        Format::Json => write_json(
            g.out.as_deref(),
            &SearchRecord {
                config: &config,
                q: report.q,
                strategy,
                search_space: report.search_space,
                max_d1_num: report.max_d1_num,
                scale_sq: report.scale_sq,
                spectra_computed: report.ranked.len(),
                rows,
            },
        ),
        Format::Csv => write_csv(
            g.out.as_deref(),
            Some(&config),
            &["rank", "class", "a1", "a2", "a3", "d1_num", "n1", "d2_num", "n2", "scale_sq"],
            rows.iter().map(|r| {
                [r.rank as u64, r.class as u64, r.a1 as u64, r.a2 as u64, r.a3 as u64, r.d1_num as u64, r.n1, r.d2_num as u64, r.n2, r.scale_sq as u64]
                    .iter()
                    .map(u64::to_string)
                    .collect()
            }),
        ),
    }
}

pub const SIM_COLUMNS: [&str; 9] =
    ["eb_n0_db", "es_n0_db", "frames", "sym_err", "bit_err", "frame_err", "ser", "ber", "fer"];

pub fn simulate(g: &GlobalArgs, a: &SimulateArgs) -> Result<()> {
    let code = resolve_code(&a.code)?;
    let mut cfg = SimConfig::new(code, parse_grid(&a.ebn0)?);
    cfg.modulation = match a.modulation {
        ModArg::Qam => Modulation::Qam,
        ModArg::Bpsk => Modulation::Bpsk,
    };
    cfg.frame_len = a.frame_len;
    cfg.terminate = a.terminate;
    cfg.stop = StopRule { min_frame_errors: a.ferr_min, max_frames: parse_count(&a.frames_max)? };
    cfg.seed = g.seed;
    cfg.batch_frames = a.batch;
    let report = run_monte_carlo(&cfg)?;
    for p in &report.points {
        let (lo, hi) = p.ser_ci95();
        eprintln!(
            "Eb/N0 {:>6.2} dB: {} frames, SER {:.3e} [{:.3e}, {:.3e}], stop {:?}",
            p.eb_n0_db, p.frames, p.ser, lo, hi, p.stop
        );
    }
    let config = RunConfig::new("simulate", g, a);
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(g.out.as_deref(), &WithConfig { config: &config, body: &report }),
        Format::Csv => write_csv(
            g.out.as_deref(),
            Some(&config),
            &SIM_COLUMNS,
            report.points.iter().map(|p| {
                vec![
                    p.eb_n0_db.to_string(),
                    p.es_n0_db.to_string(),
                    p.frames.to_string(),
                    p.sym_err.to_string(),
                    p.bit_err.to_string(),
                    p.frame_err.to_string(),
                    p.ser.to_string(),
                    p.ber.to_string(),
                    p.fer.to_string(),
                ]
            }),
        ),
    }
}

#[derive(Serialize)]
struct CapacityRecord<'a, C: Serialize> {
    config: &'a C,
    points: Vec<gfq_conv::CapacityPoint>,
    gaps_db: Vec<(f64, Option<f64>)>,
}

pub fn capacity(g: &GlobalArgs, a: &CapacityArgs) -> Result<()> {
    let field = field_for_q(a.q, a.poly)?;
    let cons = Constellation::qam(&field)?;
    let snrs = parse_grid(&a.snr)?;
    let samples = usize::try_from(parse_count(&a.samples)?)?;
    let (points, cm, bicm) = capacity_curves(&cons, &snrs, samples, g.seed)?;
    let gaps: Vec<(f64, Option<f64>)> =
        a.gap_at.iter().map(|&r| (r, snr_gap_at_rate(&cm, &bicm, r).ok())).collect();
    for (r, gap) in &gaps {
        match gap {
            Some(d) => eprintln!("CM-to-BICM gap at {r} bit/cu: {d:.3} dB"),
            None => eprintln!("CM-to-BICM gap at {r} bit/cu: outside the SNR grid"),
        }
    }
    let config = RunConfig::new("capacity", g, a);
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(g.out.as_deref(), &CapacityRecord { config: &config, points, gaps_db: gaps }),
        Format::Csv => write_csv(
            g.out.as_deref(),
            Some(&config),
            &["snr_db", "cm_bits", "bicm_bits"],
            points.iter().map(|p| vec![p.snr_db.to_string(), p.cm.bits.to_string(), p.bicm.bits.to_string()]),
        ),
    }
}
