//! Monte Carlo CM and BICM mutual information over complex AWGN.
//!
//! `snr_db` is Es/N0 with unit average symbol energy. Both estimators use the
//! same noise draws, and the transmitted symbol cycles through the alphabet,
//! so a CM/BICM comparison at one SNR is not blurred by independent sampling
//! error. Samples are split into fixed chunks with their own ChaCha streams and
//! summed in chunk order, which keeps every estimate independent of the thread
//! count.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::Constellation;

const CHUNK: usize = 4096;
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub bits: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn ci95_half_width(&self) -> f64 {
        1.959_963_984_540_054 * self.std_err
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityPoint {
    pub snr_db: f64,
    pub cm: Estimate,
    pub bicm: Estimate,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: usize,
    cm: (f64, f64),
    bicm: (f64, f64),
}

impl Moments {
    fn add(&mut self, cm: f64, bicm: f64) {
        self.n += 1;
        self.cm.0 += cm;
        self.cm.1 += cm * cm;
        self.bicm.0 += bicm;
        self.bicm.1 += bicm * bicm;
    }

    fn merge(mut self, o: &Moments) -> Self {
        self.n += o.n;
        self.cm.0 += o.cm.0;
        self.cm.1 += o.cm.1;
        self.bicm.0 += o.bicm.0;
        self.bicm.1 += o.bicm.1;
        self
    }

    fn estimate(n: usize, (s, s2): (f64, f64)) -> Estimate {
        let nf = n as f64;
        let mean = s / nf;
        let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
        Estimate { bits: mean, std_err: (var / nf).sqrt(), samples: n }
    }
}

fn ln_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    max + v.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Per-sample information densities, in bits, for symbol `x` received as
/// `points[x] + noise`.
fn densities(points: &[Complex64], bits: u32, x: usize, noise: Complex64, n0: f64, buf: &mut [f64]) -> (f64, f64) {
    let y = points[x] + noise;
    let own = -noise.norm_sqr() / n0;
    for (b, p) in buf.iter_mut().zip(points) {
        *b = -(y - p).norm_sqr() / n0;
    }
    let all = ln_sum_exp(buf.iter().copied());
    let cm = bits as f64 - (all - own) / LN_2;
    let mut bicm = 0.0;
    for i in 0..bits {
        let bit = (x >> i) & 1;
        let same = ln_sum_exp(buf.iter().enumerate().filter(|(u, _)| (u >> i) & 1 == bit).map(|(_, v)| *v));
        bicm += 1.0 - (all - same) / LN_2;
    }
    (cm, bicm)
}

/// CM and BICM estimates at one SNR. Symbol labels are field values; the
/// constellation's mapping places them on points.
pub fn capacity_point(constellation: &Constellation, snr_db: f64, samples: usize, seed: u64) -> Result<CapacityPoint> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("at least {MIN_SAMPLES} samples required, got {samples}")));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidInput(format!("snr {snr_db} dB is not finite")));
    }
    let points = constellation.symbol_points();
    let q = points.len();
    let bits = constellation.bits_per_symbol();
    let n0 = 10f64.powf(-snr_db / 10.0);
    let sd = (n0 / 2.0).sqrt();
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut buf = vec![0.0; q];
            let mut m = Moments::default();
            let end = ((c + 1) * CHUNK).min(samples);
            for i in c * CHUNK..end {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let (cm, bicm) = densities(&points, bits, i % q, Complex64::new(re * sd, im * sd), n0, &mut buf);
                m.add(cm, bicm);
            }
            m
        })
        .collect();
    let total = parts.iter().fold(Moments::default(), |a, b| a.merge(b));
    Ok(CapacityPoint {
        snr_db,
        cm: Moments::estimate(total.n, total.cm),
        bicm: Moments::estimate(total.n, total.bicm),
    })
}

pub fn cm_capacity(constellation: &Constellation, snr_db: f64, samples: usize, seed: u64) -> Result<Estimate> {
    capacity_point(constellation, snr_db, samples, seed).map(|p| p.cm)
}

pub fn bicm_capacity(constellation: &Constellation, snr_db: f64, samples: usize, seed: u64) -> Result<Estimate> {
    capacity_point(constellation, snr_db, samples, seed).map(|p| p.bicm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityCurve {
    pub label: String,
    pub samples: usize,
    /// `(snr_db, bits)` in increasing SNR.
    pub points: Vec<(f64, f64)>,
}

impl CapacityCurve {
    pub fn new(label: impl Into<String>, samples: usize, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        CapacityCurve { label: label.into(), samples, points }
    }

    /// Values after pool-adjacent-violators smoothing to a non-decreasing sequence.
    pub fn isotonic(&self) -> Vec<f64> {
        isotonic_fit(&self.points.iter().map(|p| p.1).collect::<Vec<_>>())
    }

    /// First SNR at which the smoothed curve reaches `rate`, by linear interpolation.
    pub fn snr_at_rate(&self, rate: f64) -> Result<f64> {
        let ys = self.isotonic();
        let lo = ys.first().copied().unwrap_or(f64::NAN);
        let hi = ys.last().copied().unwrap_or(f64::NAN);
        if ys.is_empty() || rate < lo || rate > hi {
            return Err(Error::TargetOutOfRange { target: rate, lo, hi });
        }
        for (i, w) in ys.windows(2).enumerate() {
            if w[1] >= rate && w[0] <= rate {
                let (x0, x1) = (self.points[i].0, self.points[i + 1].0);
                if w[1] == w[0] {
                    return Ok(x0);
                }
                return Ok(x0 + (rate - w[0]) / (w[1] - w[0]) * (x1 - x0));
            }
        }
        Ok(self.points[0].0)
    }
}

/// Least-squares non-decreasing fit.
pub fn isotonic_fit(ys: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(ys.len());
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() > 1 {
            let (m1, n1) = blocks[blocks.len() - 1];
            let (m0, n0) = blocks[blocks.len() - 2];
            if m0 <= m1 {
                break;
            }
            blocks.pop();
            let n = n0 + n1;
            *blocks.last_mut().unwrap() = ((m0 * n0 as f64 + m1 * n1 as f64) / n as f64, n);
        }
    }
    blocks.into_iter().flat_map(|(m, n)| std::iter::repeat_n(m, n)).collect()
}

/// SNR of the BICM crossing minus SNR of the CM crossing at `target_rate`.
pub fn snr_gap_at_rate(cm: &CapacityCurve, bicm: &CapacityCurve, target_rate: f64) -> Result<f64> {
    Ok(bicm.snr_at_rate(target_rate)? - cm.snr_at_rate(target_rate)?)
}

/// CM and BICM curves over `snrs`, each SNR point seeded independently.
pub fn capacity_curves(
    constellation: &Constellation,
    snrs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<(Vec<CapacityPoint>, CapacityCurve, CapacityCurve)> {
    let pts = snrs
        .iter()
        .enumerate()
        .map(|(i, &s)| capacity_point(constellation, s, samples, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let q = constellation.size();
    let cm = CapacityCurve::new(format!("{q}-QAM CM"), samples, pts.iter().map(|p| (p.snr_db, p.cm.bits)).collect());
    let bicm = CapacityCurve::new(
        format!("{q}-QAM BICM"),
        samples,
        pts.iter().map(|p| (p.snr_db, p.bicm.bits)).collect(),
    );
    Ok((pts, cm, bicm))
}
