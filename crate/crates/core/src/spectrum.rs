//! Truncated Euclidean distance spectrum of a code mapped onto a constellation.
//!
//! Competing paths are enumerated as diverging-converging (DC) pairs of
//! length 2 and 3. A length-3 pair `s0 -> x -> y -> e` / `s0 -> x' -> y' -> e`
//! (with `x != x'`, `y != y'`) splits into three independent terms:
//!
//! * the divergence section, which depends on `(s0, x, x')`,
//! * the middle section, which depends on `(x, y, x', y')`,
//! * the convergence section, which depends on `(y, y', e)`.
//!
//! For each ordered state pair we keep the sorted histogram of divergence
//! (over `s0`) and convergence (over `e`) distances, so the count over all
//! `q^2` choices of `(s0, e)` is a truncated convolution of two short lists.
//! Anything whose lower bound exceeds the current second-smallest distance is
//! skipped. All distances are integer numerators over the constellation's
//! `scale_sq`, so the result does not depend on iteration order or on the
//! number of rayon workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{Code, Trellis};
use crate::mapping::{Constellation, SqDistance};

/// How pairs of competing paths are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicityConvention {
    /// Each unordered pair `{X1, X2}` counted once, summed over all start and end states.
    Unordered,
    /// Each ordered pair `(X1, X2)` counted, i.e. twice the unordered count.
    Ordered,
}

impl MultiplicityConvention {
    fn factor(self) -> u64 {
        match self {
            MultiplicityConvention::Unordered => 1,
            MultiplicityConvention::Ordered => 2,
        }
    }
}

/// First two terms of the distance spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceSpectrum {
    pub scale_sq: u32,
    pub d1_num: u32,
    pub n1: u64,
    pub d2_num: u32,
    pub n2: u64,
    /// `n1` split into length-2 and length-3 contributions.
    pub n1_by_length: [u64; 2],
    pub n2_by_length: [u64; 2],
    pub convention: MultiplicityConvention,
}

impl DistanceSpectrum {
    pub fn d1(&self) -> SqDistance {
        SqDistance { num: self.d1_num, scale_sq: self.scale_sq }
    }

    pub fn d2(&self) -> SqDistance {
        SqDistance { num: self.d2_num, scale_sq: self.scale_sq }
    }

    pub fn with_convention(self, convention: MultiplicityConvention) -> Self {
        let from = self.convention.factor();
        let to = convention.factor();
        let rescale = |n: u64| n / from * to;
        DistanceSpectrum {
            n1: rescale(self.n1),
            n2: rescale(self.n2),
            n1_by_length: self.n1_by_length.map(rescale),
            n2_by_length: self.n2_by_length.map(rescale),
            convention,
            ..self
        }
    }
}

/// Two competing paths with common first and last state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcPair {
    /// State sequences, `len + 1` states each.
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl DcPair {
    pub fn new(first: Vec<usize>, second: Vec<usize>) -> Self {
        DcPair { first, second }
    }

    pub fn len(&self) -> usize {
        self.first.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shares the end states and differs at every interior state.
    pub fn is_valid(&self) -> bool {
        let n = self.first.len();
        n >= 3
            && n == self.second.len()
            && self.first[0] == self.second[0]
            && self.first[n - 1] == self.second[n - 1]
            && (1..n - 1).all(|i| self.first[i] != self.second[i])
    }
}

/// Per-section squared distances between trellis edges, in integer numerators.
#[derive(Debug, Clone)]
pub struct SectionDistances {
    q: usize,
    scale_sq: u32,
    sys: Vec<u8>,
    par: Vec<u8>,
    dist: Vec<u32>,
}

impl SectionDistances {
    pub fn new(trellis: &Trellis, constellation: &Constellation) -> Self {
        assert_eq!(trellis.num_states(), constellation.size(), "trellis and constellation sizes differ");
        SectionDistances {
            q: trellis.num_states(),
            scale_sq: constellation.scale_sq(),
            sys: trellis.systematic_labels().to_vec(),
            par: trellis.parity_labels().to_vec(),
            dist: constellation.distance_table(),
        }
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.q
    }

    /// Distance between edges `a -> b` and `c -> d`, systematic plus parity.
    #[inline]
    pub fn edge_pair(&self, a: usize, b: usize, c: usize, d: usize) -> u32 {
        let q = self.q;
        let e1 = a * q + b;
        let e2 = c * q + d;
        self.dist[self.sys[e1] as usize * q + self.sys[e2] as usize]
            + self.dist[self.par[e1] as usize * q + self.par[e2] as usize]
    }
}

/// Cumulated squared distance of a DC pair. Identical paths give 0.
pub fn cumulated_distance(trellis: &Trellis, constellation: &Constellation, pair: &DcPair) -> SqDistance {
    let sd = SectionDistances::new(trellis, constellation);
    SqDistance { num: cumulated_num(&sd, &pair.first, &pair.second), scale_sq: sd.scale_sq }
}

fn cumulated_num(sd: &SectionDistances, a: &[usize], b: &[usize]) -> u32 {
    a.windows(2).zip(b.windows(2)).map(|(u, v)| sd.edge_pair(u[0], u[1], v[0], v[1])).sum()
}

/// Sorted `(value, count)` histogram.
type Hist = Vec<(u32, u32)>;

fn histogram(mut values: Vec<u32>) -> Hist {
    values.sort_unstable();
    let mut out: Hist = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Divergence and convergence histograms for every ordered state pair.
struct BoundaryTables {
    q: usize,
    diverge: Vec<Hist>,
    converge: Vec<Hist>,
    diverge_min: Vec<u32>,
    converge_min: Vec<u32>,
}

impl BoundaryTables {
    fn new(sd: &SectionDistances) -> Self {
        let q = sd.q;
        let mut diverge = vec![Hist::new(); q * q];
        let mut converge = vec![Hist::new(); q * q];
        let mut diverge_min = vec![u32::MAX; q * q];
        let mut converge_min = vec![u32::MAX; q * q];
        for x in 0..q {
            for x2 in 0..q {
                if x == x2 {
                    continue;
                }
                let i = x * q + x2;
                diverge[i] = histogram((0..q).map(|s0| sd.edge_pair(s0, x, s0, x2)).collect());
                converge[i] = histogram((0..q).map(|e| sd.edge_pair(x, e, x2, e)).collect());
                diverge_min[i] = diverge[i][0].0;
                converge_min[i] = converge[i][0].0;
            }
        }
        BoundaryTables { q, diverge, converge, diverge_min, converge_min }
    }
}

/// The two smallest distinct keys with nonzero count.
fn two_smallest(hist: &[u64]) -> (Option<usize>, Option<usize>) {
    let mut it = hist.iter().enumerate().filter(|(_, &c)| c > 0).map(|(v, _)| v);
    (it.next(), it.next())
}

/// Spectrum with the unordered-pair convention.
pub fn compute_spectrum(code: &Code, constellation: &Constellation) -> DistanceSpectrum {
    spectrum_from_trellis(&code.trellis(), constellation)
}

pub fn spectrum_from_trellis(trellis: &Trellis, constellation: &Constellation) -> DistanceSpectrum {
    let sd = SectionDistances::new(trellis, constellation);
    let tables = BoundaryTables::new(&sd);
    let q = sd.q;

    // Length 2: complete histogram, it is cheap and gives the initial bound.
    let max_len2 = 4 * sd.dist.iter().copied().max().unwrap_or(0) as usize;
    let mut len2 = vec![0u64; max_len2 + 1];
    for x in 0..q {
        for x2 in x + 1..q {
            let i = x * q + x2;
            for &(fv, fc) in &tables.diverge[i] {
                for &(gv, gc) in &tables.converge[i] {
                    len2[(fv + gv) as usize] += fc as u64 * gc as u64;
                }
            }
        }
    }

    let bound0 = match two_smallest(&len2) {
        (_, Some(second)) => second as u32,
        // fewer than two distinct length-2 values: fall back to a generous cap
        _ => 6 * sd.dist.iter().copied().max().unwrap_or(0),
    };

    let len3 = (0..q)
        .into_par_iter()
        .flat_map_iter(|x| (x + 1..q).map(move |x2| (x, x2)))
        .fold(
            || vec![0u64; bound0 as usize + 1],
            |mut local, (x, x2)| {
                let bound = local_bound(&len2, &local, bound0);
                accumulate_len3(&sd, &tables, x, x2, bound, &mut local);
                local
            },
        )
        .reduce(
            || vec![0u64; bound0 as usize + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let mut combined = len2.clone();
    combined.truncate(bound0 as usize + 1);
    combined.resize(bound0 as usize + 1, 0);
    for (c, v) in combined.iter_mut().zip(&len3) {
        *c += v;
    }
    let (d1, d2) = two_smallest(&combined);
    let d1 = d1.expect("every valid code has a length-2 DC pair");
    let d2 = d2.expect("bound always admits a second distance");
    let at = |h: &[u64], v: usize| h.get(v).copied().unwrap_or(0);

    DistanceSpectrum {
        scale_sq: sd.scale_sq,
        d1_num: d1 as u32,
        n1: combined[d1],
        d2_num: d2 as u32,
        n2: combined[d2],
        n1_by_length: [at(&len2, d1), at(&len3, d1)],
        n2_by_length: [at(&len2, d2), at(&len3, d2)],
        convention: MultiplicityConvention::Unordered,
    }
}

/// Second-smallest distinct value seen so far by this worker (len-2 values
/// plus its own len-3 values). Never below the global second-smallest, so
/// every value up to the final `d2` is counted completely.
fn local_bound(len2: &[u64], local: &[u64], cap: u32) -> u32 {
    let mut seen = 0;
    for (v, &c) in local.iter().enumerate().take(cap as usize + 1) {
        if len2.get(v).copied().unwrap_or(0) > 0 || c > 0 {
            seen += 1;
            if seen == 2 {
                return v as u32;
            }
        }
    }
    cap
}

fn accumulate_len3(sd: &SectionDistances, t: &BoundaryTables, x: usize, x2: usize, bound: u32, out: &mut [u64]) {
    let q = t.q;
    let div = &t.diverge[x * q + x2];
    let div_min = t.diverge_min[x * q + x2];
    for y in 0..q {
        for y2 in 0..q {
            if y == y2 {
                continue;
            }
            let mid = sd.edge_pair(x, y, x2, y2);
            let j = y * q + y2;
            let conv_min = t.converge_min[j];
            if div_min + mid + conv_min > bound {
                continue;
            }
            let conv = &t.converge[j];
            for &(fv, fc) in div {
                let base = fv + mid;
                if base + conv_min > bound {
                    break;
                }
                for &(gv, gc) in conv {
                    let v = base + gv;
                    if v > bound {
                        break;
                    }
                    out[v as usize] += fc as u64 * gc as u64;
                }
            }
        }
    }
}

/// Outcome of a minimum-distance evaluation with an abort threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinDistance {
    Exact(u32),
    /// Some DC pair is strictly closer than the threshold.
    Below(u32),
}

/// Minimum cumulated distance `d1` numerator over length-2 and length-3 DC pairs.
/// With `abort_below = Some(b)`, returns as soon as a pair closer than `b` is found.
pub fn min_distance(trellis: &Trellis, constellation: &Constellation, abort_below: Option<u32>) -> MinDistance {
    let sd = SectionDistances::new(trellis, constellation);
    min_distance_with(&sd, abort_below)
}

pub(crate) fn min_distance_with(sd: &SectionDistances, abort_below: Option<u32>) -> MinDistance {
    let q = sd.q;
    let threshold = abort_below.unwrap_or(0);
    // both tables are symmetric in (x, x2)
    let mut div_min = vec![u32::MAX; q * q];
    let mut conv_min = vec![u32::MAX; q * q];
    let mut best = u32::MAX;
    for x in 0..q {
        for x2 in x + 1..q {
            let dm = (0..q).map(|s0| sd.edge_pair(s0, x, s0, x2)).min().unwrap();
            let cm = (0..q).map(|e| sd.edge_pair(x, e, x2, e)).min().unwrap();
            div_min[x * q + x2] = dm;
            div_min[x2 * q + x] = dm;
            conv_min[x * q + x2] = cm;
            conv_min[x2 * q + x] = cm;
            best = best.min(dm + cm);
            if best < threshold {
                return MinDistance::Below(best);
            }
        }
    }
    // cheapest divergences first, so an abort threshold is crossed early
    let conv_floor = conv_min.iter().copied().min().unwrap_or(u32::MAX);
    let mut starts: Vec<(u32, usize, usize)> = Vec::with_capacity(q * (q - 1) / 2);
    for x in 0..q {
        for x2 in x + 1..q {
            starts.push((div_min[x * q + x2], x, x2));
        }
    }
    starts.sort_unstable();
    for (dm, x, x2) in starts {
        if dm.saturating_add(conv_floor) >= best {
            break;
        }
        for y in 0..q {
            for y2 in 0..q {
                if y == y2 {
                    continue;
                }
                let v = dm + sd.edge_pair(x, y, x2, y2) + conv_min[y * q + y2];
                if v < best {
                    best = v;
                    if best < threshold {
                        return MinDistance::Below(best);
                    }
                }
            }
        }
    }
    MinDistance::Exact(best)
}

/// Smallest cumulated distance over pairs of length-3 paths that diverge at
/// the first section and are still apart after the third (prefixes of
/// length-4 and longer DC pairs).
pub fn verify_truncation(code: &Code, constellation: &Constellation) -> SqDistance {
    let trellis = code.trellis();
    let sd = SectionDistances::new(&trellis, constellation);
    let q = sd.q;
    let div_min: Vec<u32> = (0..q * q)
        .map(|i| {
            let (x, x2) = (i / q, i % q);
            if x == x2 {
                u32::MAX
            } else {
                (0..q).map(|s0| sd.edge_pair(s0, x, s0, x2)).min().unwrap()
            }
        })
        .collect();
    // cheapest continuation from an unconverged pair (y, y') to another unconverged pair
    let tail_min: Vec<u32> = (0..q * q)
        .into_par_iter()
        .map(|j| {
            let (y, y2) = (j / q, j % q);
            if y == y2 {
                return u32::MAX;
            }
            let mut m = u32::MAX;
            for z in 0..q {
                for z2 in 0..q {
                    if z != z2 {
                        m = m.min(sd.edge_pair(y, z, y2, z2));
                    }
                }
            }
            m
        })
        .collect();
    let best = (0..q * q)
        .into_par_iter()
        .filter(|i| i / q != i % q)
        .map(|i| {
            let (x, x2) = (i / q, i % q);
            let mut m = u32::MAX;
            for y in 0..q {
                for y2 in 0..q {
                    if y != y2 {
                        m = m.min(div_min[i] + sd.edge_pair(x, y, x2, y2) + tail_min[y * q + y2]);
                    }
                }
            }
            m
        })
        .min()
        .unwrap_or(u32::MAX);
    SqDistance { num: best, scale_sq: sd.scale_sq }
}

/// Gaussian tail probability `Q(x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Two-term union-bound estimate of the symbol error probability at `es_n0_db`
/// (per channel symbol, unit average energy).
///
/// Each DC pair contributes `Q(d / (2 sigma))` with `sigma^2 = N0 / 2`. Pair
/// counts are turned into competitors per transmitted path by dividing the
/// ordered count of each length `L` by the `q^(L+1)` length-`L` paths, and
/// weighted by the `L` symbols such an event can corrupt.
pub fn union_bound_ser(spectrum: &DistanceSpectrum, q: u32, es_n0_db: f64) -> f64 {
    let n0 = 10f64.powf(-es_n0_db / 10.0);
    let sigma = (n0 / 2.0).sqrt();
    if sigma == 0.0 {
        return 0.0;
    }
    let ordered = spectrum.with_convention(MultiplicityConvention::Ordered);
    let q = q as f64;
    let per_path = |by_len: [u64; 2]| {
        let l2 = by_len[0] as f64 / q.powi(3) * 2.0;
        let l3 = by_len[1] as f64 / q.powi(4) * 3.0;
        l2 + l3
    };
    let term = |d: SqDistance, by_len: [u64; 2]| per_path(by_len) * gaussian_q(d.to_f64().sqrt() / (2.0 * sigma));
    // the per-symbol rate is the per-path rate spread over the symbols of the frame
    (term(ordered.d1(), ordered.n1_by_length) + term(ordered.d2(), ordered.n2_by_length)).min(1.0)
}
