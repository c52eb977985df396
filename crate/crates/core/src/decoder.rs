//! Symbol-domain Max-Log-MAP decoding on the q-state trellis.
//!
//! Branch metrics are negative squared Euclidean distances, kept per stage and
//! per symbol: the metric of edge `j' -> j` at stage `i` is
//! `sys[i][s(j',j)] + par[i][p(j',j)]`. Hard decisions from max-only
//! recursions do not change under a common positive scaling of the metrics,
//! so no `1/N0` factor is applied.

use num_complex::Complex64;

use crate::code::Trellis;
use crate::error::{Error, Result};
use crate::gf::FieldElement;
use crate::mapping::{BpskImage, Constellation};

/// Per-stage, per-symbol systematic and parity metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchMetrics {
    q: usize,
    stages: usize,
    sys: Vec<f64>,
    par: Vec<f64>,
}

impl BranchMetrics {
    /// Wraps row-major `stages x q` tables.
    pub fn from_tables(q: usize, sys: Vec<f64>, par: Vec<f64>) -> Result<Self> {
        if q == 0 || !sys.len().is_multiple_of(q) || sys.len() != par.len() {
            return Err(Error::InvalidInput("metric tables must both be stages x q".into()));
        }
        Ok(BranchMetrics { q, stages: sys.len() / q, sys, par })
    }

    pub fn zeros(q: usize, stages: usize) -> Self {
        BranchMetrics { q, stages, sys: vec![0.0; q * stages], par: vec![0.0; q * stages] }
    }

    #[inline]
    pub fn num_stages(&self) -> usize {
        self.stages
    }

    #[inline]
    pub fn num_symbols(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn systematic(&self, stage: usize, symbol: usize) -> f64 {
        self.sys[stage * self.q + symbol]
    }

    #[inline]
    pub fn parity(&self, stage: usize, symbol: usize) -> f64 {
        self.par[stage * self.q + symbol]
    }

    pub fn systematic_row_mut(&mut self, stage: usize) -> &mut [f64] {
        &mut self.sys[stage * self.q..(stage + 1) * self.q]
    }

    pub fn parity_row_mut(&mut self, stage: usize) -> &mut [f64] {
        &mut self.par[stage * self.q..(stage + 1) * self.q]
    }

    /// `gamma_s + gamma_p` of edge `from -> to`.
    pub fn edge(&self, trellis: &Trellis, stage: usize, from: usize, to: usize) -> f64 {
        self.systematic(stage, trellis.systematic(from, to) as usize) + self.parity(stage, trellis.parity(from, to) as usize)
    }

    /// Multiplies every metric by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        BranchMetrics {
            sys: self.sys.iter().map(|v| v * k).collect(),
            par: self.par.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// Metrics for QAM observations of the systematic and parity symbols.
pub fn branch_metrics(
    received_sys: &[Complex64],
    received_par: &[Complex64],
    constellation: &Constellation,
    noise_variance: f64,
) -> Result<BranchMetrics> {
    if noise_variance.is_nan() || noise_variance <= 0.0 {
        return Err(Error::NonPositiveVariance(noise_variance));
    }
    if received_sys.len() != received_par.len() {
        return Err(Error::InvalidInput("systematic and parity observation counts differ".into()));
    }
    let points = constellation.symbol_points();
    let q = points.len();
    let n = received_sys.len();
    let mut m = BranchMetrics::zeros(q, n);
    for i in 0..n {
        for (u, p) in points.iter().enumerate() {
            m.sys[i * q + u] = -(received_sys[i] - p).norm_sqr();
            m.par[i * q + u] = -(received_par[i] - p).norm_sqr();
        }
    }
    Ok(m)
}

/// Metrics for symbols sent as `m` BPSK values each; `received_*` hold
/// `m` reals per stage, in [`BpskImage`] order.
pub fn branch_metrics_bpsk(
    received_sys: &[f64],
    received_par: &[f64],
    image: &BpskImage,
    noise_variance: f64,
) -> Result<BranchMetrics> {
    if noise_variance.is_nan() || noise_variance <= 0.0 {
        return Err(Error::NonPositiveVariance(noise_variance));
    }
    let bits = image.bits_per_symbol() as usize;
    if received_sys.len() != received_par.len() || !received_sys.len().is_multiple_of(bits) {
        return Err(Error::InvalidInput("observation length must be a multiple of the bits per symbol".into()));
    }
    let q = 1usize << bits;
    let n = received_sys.len() / bits;
    let images: Vec<Vec<f64>> = (0..q).map(|u| image.modulate(FieldElement(u as u8))).collect();
    let mut m = BranchMetrics::zeros(q, n);
    for i in 0..n {
        let rs = &received_sys[i * bits..(i + 1) * bits];
        let rp = &received_par[i * bits..(i + 1) * bits];
        for (u, img) in images.iter().enumerate() {
            m.sys[i * q + u] = -rs.iter().zip(img).map(|(r, x)| (r - x) * (r - x)).sum::<f64>();
            m.par[i * q + u] = -rp.iter().zip(img).map(|(r, x)| (r - x) * (r - x)).sum::<f64>();
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    /// Final state unknown: every state starts the backward recursion at 0.
    #[default]
    Open,
    /// Frame ends in state 0.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecoderOptions {
    pub termination: Termination,
    /// Subtract the per-stage maximum from the state metrics.
    pub normalize: bool,
}

/// Forward and backward state metrics, `(stages + 1) x q` each.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMetrics {
    pub q: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// `L_i(u)` for every stage `i` and symbol `u`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPosteriors {
    pub q: usize,
    pub values: Vec<f64>,
}

impl SymbolPosteriors {
    pub fn num_stages(&self) -> usize {
        self.values.len() / self.q
    }

    pub fn stage(&self, i: usize) -> &[f64] {
        &self.values[i * self.q..(i + 1) * self.q]
    }

    /// Argmax per stage, lowest symbol on ties.
    pub fn hard_decisions(&self) -> Vec<FieldElement> {
        (0..self.num_stages())
            .map(|i| {
                let row = self.stage(i);
                let mut best = 0;
                for (u, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = u;
                    }
                }
                FieldElement(best as u8)
            })
            .collect()
    }

    /// Each stage shifted so that its maximum is 0.
    pub fn normalized(&self) -> Self {
        let mut values = self.values.clone();
        for row in values.chunks_mut(self.q) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max.is_finite() {
                row.iter_mut().for_each(|v| *v -= max);
            }
        }
        SymbolPosteriors { q: self.q, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub posteriors: SymbolPosteriors,
    pub decisions: Vec<FieldElement>,
    pub state_metrics: StateMetrics,
}

fn normalize_row(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        row.iter_mut().for_each(|v| *v -= max);
    }
}

pub fn max_log_map_decode(trellis: &Trellis, metrics: &BranchMetrics, options: DecoderOptions) -> DecodeOutput {
    let q = trellis.num_states();
    assert_eq!(metrics.q, q, "metrics and trellis disagree on q");
    let n = metrics.stages;
    let ninf = f64::NEG_INFINITY;

    let mut alpha = vec![ninf; (n + 1) * q];
    alpha[0] = 0.0;
    for i in 0..n {
        let (done, rest) = alpha.split_at_mut((i + 1) * q);
        let prev = &done[i * q..];
        let next = &mut rest[..q];
        let sys = &metrics.sys[i * q..(i + 1) * q];
        let par = &metrics.par[i * q..(i + 1) * q];
        for (from, &a) in prev.iter().enumerate() {
            if a == ninf {
                continue;
            }
            for u in 0..q {
                let to = trellis.next_state(from, u);
                let v = a + sys[u] + par[trellis.parity_for_input(from, u)];
                if v > next[to] {
                    next[to] = v;
                }
            }
        }
        if options.normalize {
            normalize_row(next);
        }
    }

    let mut beta = vec![ninf; (n + 1) * q];
    match options.termination {
        Termination::Open => beta[n * q..].fill(0.0),
        Termination::Zero => beta[n * q] = 0.0,
    }
    for i in (0..n).rev() {
        let (head, tail) = beta.split_at_mut((i + 1) * q);
        let cur = &mut head[i * q..];
        let after = &tail[..q];
        let sys = &metrics.sys[i * q..(i + 1) * q];
        let par = &metrics.par[i * q..(i + 1) * q];
        for (from, slot) in cur.iter_mut().enumerate() {
            let mut best = ninf;
            for u in 0..q {
                let b = after[trellis.next_state(from, u)];
                let v = b + sys[u] + par[trellis.parity_for_input(from, u)];
                if v > best {
                    best = v;
                }
            }
            *slot = best;
        }
        if options.normalize {
            normalize_row(cur);
        }
    }

    let mut post = vec![ninf; n * q];
    for i in 0..n {
        let a = &alpha[i * q..(i + 1) * q];
        let b = &beta[(i + 1) * q..(i + 2) * q];
        let sys = &metrics.sys[i * q..(i + 1) * q];
        let par = &metrics.par[i * q..(i + 1) * q];
        let row = &mut post[i * q..(i + 1) * q];
        for (from, &af) in a.iter().enumerate() {
            if af == ninf {
                continue;
            }
            for u in 0..q {
                let v = af + b[trellis.next_state(from, u)] + sys[u] + par[trellis.parity_for_input(from, u)];
                if v > row[u] {
                    row[u] = v;
                }
            }
        }
    }

    let posteriors = SymbolPosteriors { q, values: post };
    let decisions = posteriors.hard_decisions();
    DecodeOutput { posteriors, decisions, state_metrics: StateMetrics { q, alpha, beta } }
}

/// Scores every input sequence from state 0 and keeps, per stage and symbol,
/// the best total metric of a sequence with that symbol at that stage.
pub fn brute_force_oracle(trellis: &Trellis, metrics: &BranchMetrics, termination: Termination) -> Result<SymbolPosteriors> {
    let q = trellis.num_states();
    let n = metrics.stages;
    let count = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > 1_000_000 {
        return Err(Error::InstanceTooLarge(count));
    }
    let mut post = vec![f64::NEG_INFINITY; n * q];
    let mut inputs = vec![0usize; n];
    for _ in 0..count {
        let mut state = 0usize;
        let mut score = 0.0;
        for (i, &u) in inputs.iter().enumerate() {
            let to = trellis.next_state(state, u);
            score += metrics.edge(trellis, i, state, to);
            state = to;
        }
        if termination == Termination::Open || state == 0 {
            for (i, &u) in inputs.iter().enumerate() {
                let slot = &mut post[i * q + u];
                if score > *slot {
                    *slot = score;
                }
            }
        }
        // odometer increment
        for d in inputs.iter_mut().rev() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
    }
    Ok(SymbolPosteriors { q, values: post })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::Code;
    use crate::gf::FieldSpec;

    fn gf16_setup() -> (Code, Constellation) {
        let f = FieldSpec::gf16();
        let c = Constellation::qam(&f).unwrap();
        (Code::from_values(f, 13, 7, 11).unwrap(), c)
    }

    #[test]
    fn metric_on_point_is_best() {
        let (_, c) = gf16_setup();
        let pts = c.symbol_points();
        let m = branch_metrics(&[pts[5]], &[pts[9]], &c, 0.1).unwrap();
        assert_eq!(m.systematic(0, 5), 0.0);
        assert!((0..16).filter(|&u| u != 5).all(|u| m.systematic(0, u) < 0.0));
        assert_eq!(m.parity(0, 9), 0.0);
        let mid = (pts[0] + pts[1]) / 2.0;
        let m = branch_metrics(&[mid], &[mid], &c, 0.1).unwrap();
        assert!((m.systematic(0, 0) - m.systematic(0, 1)).abs() < 1e-12);
        assert_eq!(branch_metrics(&[mid], &[mid], &c, 0.0), Err(Error::NonPositiveVariance(0.0)));
        assert!(branch_metrics(&[mid], &[mid], &c, -1.0).is_err());
    }

    #[test]
    fn noiseless_frames_decode() {
        let (code, c) = gf16_setup();
        let t = code.trellis();
        let inputs: Vec<_> = (0..40u8).map(|i| FieldElement(i.wrapping_mul(7).wrapping_add(3) % 16)).collect();
        for terminate in [false, true] {
            let enc = code.encode_frame(&inputs, terminate);
            let rs: Vec<_> = enc.systematic.iter().map(|&s| c.point(s)).collect();
            let rp: Vec<_> = enc.parity.iter().map(|&p| c.point(p)).collect();
            let m = branch_metrics(&rs, &rp, &c, 1e-3).unwrap();
            let termination = if terminate { Termination::Zero } else { Termination::Open };
            for normalize in [false, true] {
                let out = max_log_map_decode(&t, &m, DecoderOptions { termination, normalize });
                assert_eq!(out.decisions, enc.systematic);
            }
        }
    }

    #[test]
    fn all_zero_metrics_tie_to_symbol_zero() {
        let (code, _) = gf16_setup();
        let out = max_log_map_decode(&code.trellis(), &BranchMetrics::zeros(16, 5), DecoderOptions::default());
        assert!(out.posteriors.values.iter().all(|&v| v == 0.0));
        assert!(out.decisions.iter().all(|d| d.is_zero()));
    }

    #[test]
    fn single_stage_matches_oracle() {
        let f = FieldSpec::gf4();
        let code = Code::from_values(f, 2, 3, 2).unwrap();
        let t = code.trellis();
        let m = BranchMetrics::from_tables(4, vec![-1.0, -4.0, -2.0, -3.0], vec![-0.5, -1.5, -2.5, -3.5]).unwrap();
        let out = max_log_map_decode(&t, &m, DecoderOptions::default());
        for u in 0..4 {
            let to = t.next_state(0, u);
            assert_eq!(out.posteriors.stage(0)[u], m.edge(&t, 0, 0, to));
        }
        assert_eq!(out.posteriors, brute_force_oracle(&t, &m, Termination::Open).unwrap());
    }

    #[test]
    fn oracle_size_limit() {
        let (code, _) = gf16_setup();
        let m = BranchMetrics::zeros(16, 6);
        assert!(matches!(brute_force_oracle(&code.trellis(), &m, Termination::Open), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn bpsk_metrics() {
        let f = FieldSpec::gf4();
        let img = BpskImage::new(&f);
        let m = branch_metrics_bpsk(&[1.0, -1.0], &[-1.0, -1.0], &img, 0.5).unwrap();
        assert_eq!(m.systematic(0, 1), 0.0);
        assert_eq!(m.parity(0, 3), 0.0);
        assert_eq!(m.systematic(0, 2), -8.0);
        assert!(branch_metrics_bpsk(&[1.0], &[1.0], &img, 0.5).is_err());
    }
}
