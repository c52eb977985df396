//! AWGN channel and the Monte Carlo SER/BER/FER harness.
//!
//! Every frame draws its data and noise from its own ChaCha stream, keyed by
//! the master seed, the SNR point and the frame index, and frames are
//! processed in fixed-size batches. The stop rule is only checked between
//! batches, so a report depends on `(seed, config)` alone and not on the
//! number of worker threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::Code;
use crate::decoder::{branch_metrics, branch_metrics_bpsk, max_log_map_decode, DecoderOptions, Termination};
use crate::error::{Error, Result};
use crate::gf::FieldElement;
use crate::mapping::{BpskImage, Constellation};

/// Adds zero-mean Gaussian noise of variance `variance` to each real dimension.
pub fn awgn<R: Rng + ?Sized>(points: &[Complex64], variance: f64, rng: &mut R) -> Vec<Complex64> {
    let sd = variance.max(0.0).sqrt();
    points
        .iter()
        .map(|p| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            p + Complex64::new(re * sd, im * sd)
        })
        .collect()
}

pub fn awgn_real<R: Rng + ?Sized>(values: &[f64], variance: f64, rng: &mut R) -> Vec<f64> {
    let sd = variance.max(0.0).sqrt();
    values
        .iter()
        .map(|v| {
            let n: f64 = rng.sample(StandardNormal);
            v + n * sd
        })
        .collect()
}

/// `Es/N0` in dB from `Eb/N0` in dB for `rate * log2(q)` information bits per channel symbol.
pub fn snr_convert(eb_n0_db: f64, q: u32, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidRate(rate));
    }
    if q < 2 || !q.is_power_of_two() {
        return Err(Error::InvalidInput(format!("q={q} is not a power of two")));
    }
    Ok(eb_n0_db + 10.0 * (rate * q.trailing_zeros() as f64).log10())
}

/// Noise variance per real dimension, `N0 / 2`, for unit symbol energy.
pub fn noise_variance(es_n0_db: f64) -> f64 {
    10f64.powf(-es_n0_db / 10.0) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// Each coded symbol on one point of the q-ary QAM constellation.
    Qam,
    /// Each coded symbol as `m` antipodal BPSK values.
    Bpsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { min_frame_errors: 100, max_frames: 1_000_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub code: Code,
    pub modulation: Modulation,
    /// Sweep points, Eb/N0 in dB (information bits only).
    pub eb_n0_db: Vec<f64>,
    pub frame_len: usize,
    pub terminate: bool,
    pub stop: StopRule,
    pub seed: u64,
    pub batch_frames: u64,
}

impl SimConfig {
    pub fn new(code: Code, eb_n0_db: Vec<f64>) -> Self {
        SimConfig {
            code,
            modulation: Modulation::Qam,
            eb_n0_db,
            frame_len: 100,
            terminate: false,
            stop: StopRule::default(),
            seed: 42,
            batch_frames: 64,
        }
    }

    /// Information bits per channel use, counting the tail symbol if any.
    pub fn info_bits_per_channel_use(&self) -> f64 {
        let m = self.code.field().m() as f64;
        let n = self.frame_len as f64;
        let sent_symbols = 2.0 * (n + if self.terminate { 1.0 } else { 0.0 });
        let info_bits = n * m;
        match self.modulation {
            Modulation::Qam => info_bits / sent_symbols,
            Modulation::Bpsk => info_bits / (sent_symbols * m),
        }
    }

    pub fn es_n0_db(&self, eb_n0_db: f64) -> f64 {
        eb_n0_db + 10.0 * self.info_bits_per_channel_use().log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FrameErrors,
    MaxFrames,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts {
    pub frames: u64,
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Sum over frames of the squared per-frame symbol error count.
    pub symbol_errors_sq: u64,
}

impl ErrorCounts {
    fn merge(mut self, o: ErrorCounts) -> Self {
        self.frames += o.frames;
        self.symbol_errors += o.symbol_errors;
        self.bit_errors += o.bit_errors;
        self.frame_errors += o.frame_errors;
        self.symbol_errors_sq += o.symbol_errors_sq;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub eb_n0_db: f64,
    pub es_n0_db: f64,
    pub frames: u64,
    pub sym_err: u64,
    pub bit_err: u64,
    pub frame_err: u64,
    pub sym_err_sq: u64,
    pub ser: f64,
    pub ber: f64,
    pub fer: f64,
    pub stop: StopReason,
    pub symbols_per_frame: u64,
}

impl SimPoint {
    /// 95% interval for the SER. Symbol errors are clustered within frames, so
    /// the standard error is estimated from the per-frame error counts rather
    /// than from a binomial model of independent symbols.
    pub fn ser_ci95(&self) -> (f64, f64) {
        let f = self.frames as f64;
        let n = self.symbols_per_frame as f64;
        if self.frames < 2 {
            return (0.0, 1.0);
        }
        let mean = self.sym_err as f64 / f;
        let var = (self.sym_err_sq as f64 - f * mean * mean) / (f - 1.0);
        let se = (var.max(0.0) / f).sqrt() / n;
        let half = 1.959_963_984_540_054 * se;
        ((self.ser - half).max(0.0), (self.ser + half).min(1.0))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub frame_len: usize,
    pub terminate: bool,
    pub modulation: Modulation,
    pub stop: StopRule,
    pub batch_frames: u64,
    pub code: Code,
    pub points: Vec<SimPoint>,
}

/// Per-frame random stream: point index in the high bits, frame index below.
fn frame_rng(seed: u64, point: usize, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 40) | frame);
    rng
}

struct FrameRunner<'a> {
    config: &'a SimConfig,
    constellation: Option<Constellation>,
    image: BpskImage,
    trellis: crate::code::Trellis,
}

impl FrameRunner<'_> {
    fn run(&self, point: usize, frame: u64, es_n0_db: f64) -> ErrorCounts {
        let cfg = self.config;
        let q = cfg.code.field().size();
        let m = cfg.code.field().m();
        let mut rng = frame_rng(cfg.seed, point, frame);
        let inputs: Vec<FieldElement> = (0..cfg.frame_len).map(|_| FieldElement(rng.random_range(0..q) as u8)).collect();
        let enc = cfg.code.encode_frame(&inputs, cfg.terminate);
        let variance = noise_variance(es_n0_db);

        let metrics = match cfg.modulation {
            Modulation::Qam => {
                let cons = self.constellation.as_ref().expect("QAM runner has a constellation");
                let tx_s: Vec<_> = enc.systematic.iter().map(|&s| cons.point(s)).collect();
                let tx_p: Vec<_> = enc.parity.iter().map(|&p| cons.point(p)).collect();
                let rx_s = awgn(&tx_s, variance, &mut rng);
                let rx_p = awgn(&tx_p, variance, &mut rng);
                branch_metrics(&rx_s, &rx_p, cons, variance.max(f64::MIN_POSITIVE))
            }
            Modulation::Bpsk => {
                let mut tx_s = Vec::with_capacity(enc.systematic.len() * m as usize);
                let mut tx_p = Vec::with_capacity(enc.parity.len() * m as usize);
                enc.systematic.iter().for_each(|&s| self.image.modulate_into(s, &mut tx_s));
                enc.parity.iter().for_each(|&p| self.image.modulate_into(p, &mut tx_p));
                let rx_s = awgn_real(&tx_s, variance, &mut rng);
                let rx_p = awgn_real(&tx_p, variance, &mut rng);
                branch_metrics_bpsk(&rx_s, &rx_p, &self.image, variance.max(f64::MIN_POSITIVE))
            }
        }
        .expect("variance is positive and lengths match");

        let termination = if cfg.terminate { Termination::Zero } else { Termination::Open };
        let out = max_log_map_decode(&self.trellis, &metrics, DecoderOptions { termination, normalize: false });
        let mut counts = ErrorCounts { frames: 1, ..Default::default() };
        for (d, s) in out.decisions.iter().zip(&inputs) {
            if d != s {
                counts.symbol_errors += 1;
                counts.bit_errors += (d.0 ^ s.0).count_ones() as u64;
            }
        }
        counts.frame_errors = u64::from(counts.symbol_errors > 0);
        counts.symbol_errors_sq = counts.symbol_errors * counts.symbol_errors;
        counts
    }
}

pub fn run_monte_carlo(config: &SimConfig) -> Result<SimReport> {
    if config.frame_len == 0 {
        return Err(Error::InvalidInput("frame length must be positive".into()));
    }
    if config.batch_frames == 0 || config.stop.max_frames == 0 {
        return Err(Error::InvalidInput("batch size and frame cap must be positive".into()));
    }
    let field = config.code.field();
    let constellation = match config.modulation {
        Modulation::Qam => Some(Constellation::qam(field)?),
        Modulation::Bpsk => None,
    };
    let runner = FrameRunner {
        config,
        constellation,
        image: BpskImage::new(field),
        trellis: config.code.trellis(),
    };

    let mut points = Vec::with_capacity(config.eb_n0_db.len());
    for (pi, &eb) in config.eb_n0_db.iter().enumerate() {
        let es = config.es_n0_db(eb);
        let mut total = ErrorCounts::default();
        let stop = loop {
            let n = config.batch_frames.min(config.stop.max_frames - total.frames);
            let first = total.frames;
            let batch = (first..first + n)
                .into_par_iter()
                .map(|f| runner.run(pi, f, es))
                .reduce(ErrorCounts::default, ErrorCounts::merge);
            total = total.merge(batch);
            if total.frame_errors >= config.stop.min_frame_errors {
                break StopReason::FrameErrors;
            }
            if total.frames >= config.stop.max_frames {
                break StopReason::MaxFrames;
            }
        };
        let symbols = config.frame_len as u64;
        let m = field.m() as u64;
        points.push(SimPoint {
            eb_n0_db: eb,
            es_n0_db: es,
            frames: total.frames,
            sym_err: total.symbol_errors,
            bit_err: total.bit_errors,
            frame_err: total.frame_errors,
            sym_err_sq: total.symbol_errors_sq,
            ser: total.symbol_errors as f64 / (total.frames * symbols) as f64,
            ber: total.bit_errors as f64 / (total.frames * symbols * m) as f64,
            fer: total.frame_errors as f64 / total.frames as f64,
            stop,
            symbols_per_frame: symbols,
        });
    }
    Ok(SimReport {
        seed: config.seed,
        frame_len: config.frame_len,
        terminate: config.terminate,
        modulation: config.modulation,
        stop: config.stop,
        batch_frames: config.batch_frames,
        code: config.code.clone(),
        points,
    })
}

/// Indices of points whose SER rises above the previous point by more than
/// three standard errors.
pub fn monotonicity_violations(report: &SimReport) -> Vec<usize> {
    report
        .points
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let (lo0, hi0) = w[0].ser_ci95();
            let (lo1, hi1) = w[1].ser_ci95();
            let se = ((hi0 - lo0) / 3.92).hypot((hi1 - lo1) / 3.92);
            (w[1].ser - w[0].ser > 3.0 * se).then_some(i + 1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;

    #[test]
    fn zero_variance_is_identity() {
        let pts = vec![Complex64::new(1.0, -3.0), Complex64::new(0.5, 0.25)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(awgn(&pts, 0.0, &mut rng), pts);
    }

    #[test]
    fn db_bookkeeping() {
        assert!((noise_variance(10.0) - 0.05).abs() < 1e-15);
        assert!((snr_convert(3.0, 64, 0.5).unwrap() - 3.0 - 10.0 * 3f64.log10()).abs() < 1e-12);
        assert!((snr_convert(3.0, 64, 0.5).unwrap() - 7.771_212_547).abs() < 1e-6);
        assert!((snr_convert(3.0, 4, 0.5).unwrap() - 3.0).abs() < 1e-12);
        assert!((snr_convert(-1.5, 2, 1.0).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(snr_convert(1.0, 4, 0.0), Err(Error::InvalidRate(0.0)));
        assert_eq!(snr_convert(1.0, 4, 1.5), Err(Error::InvalidRate(1.5)));
    }

    #[test]
    fn empirical_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let zeros = vec![Complex64::new(0.0, 0.0); 1_000_000];
        let y = awgn(&zeros, 0.05, &mut rng);
        let vre = y.iter().map(|c| c.re * c.re).sum::<f64>() / y.len() as f64;
        let vim = y.iter().map(|c| c.im * c.im).sum::<f64>() / y.len() as f64;
        assert!((vre / 0.05 - 1.0).abs() < 0.01, "{vre}");
        assert!((vim / 0.05 - 1.0).abs() < 0.01, "{vim}");
    }

    #[test]
    fn rate_bookkeeping() {
        let code = Code::from_values(FieldSpec::gf16(), 13, 7, 11).unwrap();
        let cfg = SimConfig::new(code, vec![0.0]);
        // 100 symbols of 4 bits = 400 information bits on 200 channel uses
        assert_eq!(cfg.frame_len * cfg.code.field().m() as usize, 400);
        assert!((cfg.info_bits_per_channel_use() - 2.0).abs() < 1e-12);
        let mut bpsk = cfg.clone();
        bpsk.modulation = Modulation::Bpsk;
        assert!((bpsk.info_bits_per_channel_use() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noiseless_point_has_no_errors() {
        let code = Code::from_values(FieldSpec::gf16(), 13, 7, 11).unwrap();
        let mut cfg = SimConfig::new(code, vec![200.0]);
        cfg.stop = StopRule { min_frame_errors: 1, max_frames: 20 };
        cfg.batch_frames = 8;
        let r = run_monte_carlo(&cfg).unwrap();
        let p = &r.points[0];
        assert_eq!((p.frames, p.sym_err, p.frame_err), (20, 0, 0));
        assert_eq!(p.stop, StopReason::MaxFrames);
    }

    #[test]
    fn reproducible_and_bounded() {
        let code = Code::from_values(FieldSpec::gf16(), 12, 4, 0).unwrap();
        let mut cfg = SimConfig::new(code, vec![4.0, 6.0]);
        cfg.stop = StopRule { min_frame_errors: 20, max_frames: 200 };
        cfg.batch_frames = 16;
        let a = run_monte_carlo(&cfg).unwrap();
        let b = run_monte_carlo(&cfg).unwrap();
        assert_eq!(a.points, b.points);
        for p in &a.points {
            assert!(p.ber <= p.ser && p.ser <= 4.0 * p.ber + 1e-15);
            assert!(p.sym_err >= p.frame_err);
        }
    }
}
