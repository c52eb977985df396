//! Exhaustive search over coefficient triples, the closed-form counts used to
//! argue that the constellation mapping does not matter, and a brute-force
//! check of that argument on small fields.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{Code, CodeCoefficients};
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldSpec};
use crate::mapping::Constellation;
use crate::spectrum::{min_distance_with, spectrum_from_trellis, DistanceSpectrum, MinDistance, SectionDistances};

/// Every valid triple: `a1, a2` nonzero, any `a3` with `a1*a2 + a3 != 0`, in
/// ascending `(a1, a2, a3)` order.
pub fn valid_triples(field: &FieldSpec) -> Vec<CodeCoefficients> {
    let mut out = Vec::new();
    for a1 in field.nonzero_elements() {
        for a2 in field.nonzero_elements() {
            let forbidden = field.mul(a1, a2);
            for a3 in field.elements() {
                if a3 != forbidden {
                    out.push(CodeCoefficients { a1, a2, a3 });
                }
            }
        }
    }
    out
}

/// Ranking key: larger `d1`, then fewer `n1`, larger `d2`, fewer `n2`, then
/// ascending coefficients.
pub fn rank_order(a: &(CodeCoefficients, DistanceSpectrum), b: &(CodeCoefficients, DistanceSpectrum)) -> Ordering {
    let (ca, sa) = a;
    let (cb, sb) = b;
    sb.d1()
        .cmp(&sa.d1())
        .then(sa.n1.cmp(&sb.n1))
        .then(sb.d2().cmp(&sa.d2()))
        .then(sa.n2.cmp(&sb.n2))
        .then(ca.cmp(cb))
}

fn same_class(a: &DistanceSpectrum, b: &DistanceSpectrum) -> bool {
    a.d1_num == b.d1_num && a.n1 == b.n1 && a.d2_num == b.d2_num && a.n2 == b.n2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Full spectrum for every triple.
    Exhaustive,
    /// Minimum distance for every triple with a shared pruning bound, then full
    /// spectra only for the triples attaining the maximum.
    TwoPhase,
}

impl SearchStrategy {
    pub fn default_for_q(q: u32) -> Self {
        if q <= 16 {
            SearchStrategy::Exhaustive
        } else {
            SearchStrategy::TwoPhase
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub coeffs: CodeCoefficients,
    pub spectrum: DistanceSpectrum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchReport {
    pub q: u32,
    pub strategy: SearchStrategy,
    /// Number of valid triples searched.
    pub search_space: usize,
    /// Largest `d1` numerator over the whole space.
    pub max_d1_num: u32,
    pub scale_sq: u32,
    /// Triples whose full spectrum was computed, best first.
    pub ranked: Vec<SearchEntry>,
    pub elapsed_ms: u128,
}

impl SearchReport {
    /// Entries sharing the best `(d1, n1, d2, n2)`.
    pub fn top_class(&self) -> &[SearchEntry] {
        match self.ranked.first() {
            None => &[],
            Some(first) => {
                let n = self.ranked.iter().take_while(|e| same_class(&e.spectrum, &first.spectrum)).count();
                &self.ranked[..n]
            }
        }
    }

    /// All ranked entries whose `d1` equals the maximum.
    pub fn max_d1_entries(&self) -> impl Iterator<Item = &SearchEntry> {
        self.ranked.iter().filter(move |e| e.spectrum.d1_num == self.max_d1_num)
    }

    pub fn contains(&self, coeffs: CodeCoefficients) -> bool {
        self.ranked.iter().any(|e| e.coeffs == coeffs)
    }
}

/// Searches every valid triple of `field` with `constellation` carrying the symbols.
pub fn search_codes(field: &FieldSpec, constellation: &Constellation, strategy: SearchStrategy) -> Result<SearchReport> {
    search_codes_with(field, constellation, strategy, &[])
}

/// Like [`search_codes`], also computing full spectra for `extra` triples.
pub fn search_codes_with(
    field: &FieldSpec,
    constellation: &Constellation,
    strategy: SearchStrategy,
    extra: &[CodeCoefficients],
) -> Result<SearchReport> {
    if constellation.size() != field.size() {
        return Err(Error::InvalidInput(format!(
            "constellation has {} points, field has {} elements",
            constellation.size(),
            field.q()
        )));
    }
    for c in extra {
        c.validate(field)?;
    }
    let start = Instant::now();
    let triples = valid_triples(field);
    let spectrum_of = |c: &CodeCoefficients| {
        let code = Code::new(field.clone(), *c).expect("triple was validated");
        SearchEntry { coeffs: *c, spectrum: spectrum_from_trellis(&code.trellis(), constellation) }
    };

    let (max_d1_num, mut entries): (u32, Vec<SearchEntry>) = match strategy {
        SearchStrategy::Exhaustive => {
            let entries: Vec<SearchEntry> = triples.par_iter().map(spectrum_of).collect();
            let max = entries.iter().map(|e| e.spectrum.d1_num).max().unwrap_or(0);
            (max, entries)
        }
        SearchStrategy::TwoPhase => {
            let (max, shortlist) = max_d1_shortlist(field, constellation, &triples);
            let mut wanted = shortlist;
            for c in extra {
                if !wanted.contains(c) {
                    wanted.push(*c);
                }
            }
            (max, wanted.par_iter().map(spectrum_of).collect())
        }
    };
    for c in extra {
        if !entries.iter().any(|e| e.coeffs == *c) {
            entries.push(spectrum_of(c));
        }
    }

    let mut keyed: Vec<_> = entries.into_iter().map(|e| (e.coeffs, e.spectrum)).collect();
    keyed.sort_by(rank_order);
    Ok(SearchReport {
        q: field.q(),
        strategy,
        search_space: triples.len(),
        max_d1_num,
        scale_sq: constellation.scale_sq(),
        ranked: keyed.into_iter().map(|(coeffs, spectrum)| SearchEntry { coeffs, spectrum }).collect(),
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Phase 1: exact maximum of `d1` over `triples` and every triple attaining it.
///
/// Workers share a monotone lower bound on the maximum. A triple is dropped as
/// soon as one of its DC pairs is closer than the bound; a stale bound only
/// means less pruning. Triples attaining the maximum are never dropped, so the
/// shortlist does not depend on scheduling.
pub fn max_d1_shortlist(
    field: &FieldSpec,
    constellation: &Constellation,
    triples: &[CodeCoefficients],
) -> (u32, Vec<CodeCoefficients>) {
    let bound = AtomicU32::new(0);
    let exact: Vec<(CodeCoefficients, u32)> = triples
        .par_iter()
        .filter_map(|c| {
            let code = Code::new(field.clone(), *c).expect("valid triple");
            let sd = SectionDistances::new(&code.trellis(), constellation);
            match min_distance_with(&sd, Some(bound.load(AtomicOrdering::Relaxed))) {
                MinDistance::Exact(d) => {
                    bound.fetch_max(d, AtomicOrdering::Relaxed);
                    Some((*c, d))
                }
                MinDistance::Below(_) => None,
            }
        })
        .collect();
    let max = exact.iter().map(|&(_, d)| d).max().unwrap_or(0);
    let mut best: Vec<_> = exact.into_iter().filter(|&(_, d)| d == max).map(|(c, _)| c).collect();
    best.sort_unstable();
    (max, best)
}

/// Closed-form counts of distinct cumulated-distance values for length <= 3
/// DC pairs, with the mapping varied (`n_mu`) or the coefficients varied (`n_a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpaceCounts {
    pub q: u64,
    /// `((C(q,2) + 1)^2 - 1) * C(q,2)^4`
    pub n_mu: u128,
    /// `C(q^2, 2) * C(q,2)^4`
    pub n_a: u128,
    /// Middle-section factor of `n_mu`: `(C(q,2) + 1)^2 - 1`.
    pub mu_factor: u128,
    /// Middle-section factor of `n_a`: `C(q^2, 2)`.
    pub a_factor: u128,
    /// `a_factor - mu_factor`.
    pub delta_n: u128,
}

fn choose2(n: u128) -> u128 {
    n * (n - 1) / 2
}

pub fn search_space_counts(q: u64) -> Result<SearchSpaceCounts> {
    if !(2..=256).contains(&q) {
        return Err(Error::InvalidInput(format!("q={q} outside 2..=256")));
    }
    let qq = q as u128;
    let c = choose2(qq);
    let mu_factor = (c + 1) * (c + 1) - 1;
    let a_factor = choose2(qq * qq);
    let common = c.pow(4);
    Ok(SearchSpaceCounts {
        q,
        n_mu: mu_factor * common,
        n_a: a_factor * common,
        mu_factor,
        a_factor,
        delta_n: a_factor - mu_factor,
    })
}

/// `q (q-1)^2 (q+4) / 4`.
pub fn delta_n_closed_form(q: u64) -> u128 {
    let q = q as u128;
    q * (q - 1) * (q - 1) * (q + 4) / 4
}

/// Best spectrum class found under one mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingOutcome {
    pub permutation: Vec<usize>,
    pub best: (u32, u64, u32, u64),
    pub best_coeffs: CodeCoefficients,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingInvarianceReport {
    pub q: u32,
    pub mappings: usize,
    pub outcomes: Vec<MappingOutcome>,
    /// The best `(d1, n1, d2, n2)` is the same for every mapping.
    pub invariant: bool,
}

/// Runs the full search under every one of the `q!` mappings.
pub fn mapping_invariance_check(field: &FieldSpec, constellation: &Constellation) -> Result<MappingInvarianceReport> {
    let q = field.q();
    if q > 8 {
        return Err(Error::TooManyMappings(q));
    }
    let perms = permutations(field.size());
    let outcomes: Vec<MappingOutcome> = perms
        .par_iter()
        .map(|perm| {
            let c = constellation.permute_mapping(perm).expect("generated permutations are bijective");
            let report = search_codes(field, &c, SearchStrategy::Exhaustive).expect("sizes match");
            let top = &report.ranked[0];
            let s = &top.spectrum;
            MappingOutcome { permutation: perm.clone(), best: (s.d1_num, s.n1, s.d2_num, s.n2), best_coeffs: top.coeffs }
        })
        .collect();
    let invariant = outcomes.windows(2).all(|w| w[0].best == w[1].best);
    Ok(MappingInvarianceReport { q, mappings: outcomes.len(), outcomes, invariant })
}

/// A code and a mapping under which that code's spectrum changes, if any.
pub fn spectrum_changing_remap(field: &FieldSpec, constellation: &Constellation) -> Option<(CodeCoefficients, Vec<usize>)> {
    let perms = permutations(field.size());
    for c in valid_triples(field) {
        let code = Code::new(field.clone(), c).ok()?;
        let base = spectrum_from_trellis(&code.trellis(), constellation);
        for p in &perms {
            let remapped = constellation.permute_mapping(p).ok()?;
            if !same_class(&spectrum_from_trellis(&code.trellis(), &remapped), &base) {
                return Some((c, p.clone()));
            }
        }
    }
    None
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
}

/// Triples as field elements, for callers holding plain integers.
pub fn coeffs(a1: u8, a2: u8, a3: u8) -> CodeCoefficients {
    CodeCoefficients { a1: FieldElement(a1), a2: FieldElement(a2), a3: FieldElement(a3) }
}
