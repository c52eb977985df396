//! Brute-force enumeration of length-2 and length-3 DC pairs, with edge labels
//! solved from the encoder equations and distances taken straight from the
//! lattice points.

use std::collections::BTreeMap;

use gfq_conv::spectrum::{compute_spectrum, verify_truncation};
use gfq_conv::{Code, Constellation, FieldElement, FieldSpec};

struct Labels {
    q: usize,
    /// (systematic, parity) of edge `from -> to`
    edge: Vec<(usize, usize)>,
    lattice: Vec<(i32, i32)>,
}

impl Labels {
    fn new(code: &Code) -> Self {
        let f = code.field();
        let c = code.coeffs();
        let q = f.size();
        let mut edge = Vec::with_capacity(q * q);
        for from in 0..q {
            for to in 0..q {
                let (a, b) = (FieldElement(from as u8), FieldElement(to as u8));
                // E' = s + a1 E  =>  s = E' + a1 E in characteristic 2
                let s = f.add(b, f.mul(c.a1, a));
                let p = f.add(f.mul(c.a2, b), f.mul(c.a3, a));
                edge.push((s.index(), p.index()));
            }
        }
        let cons = Constellation::qam(f).unwrap();
        let lattice = f.elements().map(|x| cons.lattice_point(x)).collect();
        Labels { q, edge, lattice }
    }

    fn sq(&self, u: usize, v: usize) -> u32 {
        let (a, b) = (self.lattice[u], self.lattice[v]);
        ((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as u32
    }

    fn branch(&self, a: usize, b: usize, c: usize, d: usize) -> u32 {
        let (s1, p1) = self.edge[a * self.q + b];
        let (s2, p2) = self.edge[c * self.q + d];
        self.sq(s1, s2) + self.sq(p1, p2)
    }
}

/// distance -> (length-2 count, length-3 count), unordered pairs
fn histogram(code: &Code) -> BTreeMap<u32, [u64; 2]> {
    let l = Labels::new(code);
    let q = l.q;
    let mut h: BTreeMap<u32, [u64; 2]> = BTreeMap::new();
    for s0 in 0..q {
        for e in 0..q {
            for x in 0..q {
                for x2 in x + 1..q {
                    let d = l.branch(s0, x, s0, x2) + l.branch(x, e, x2, e);
                    h.entry(d).or_default()[0] += 1;
                }
            }
            for x in 0..q {
                for y in 0..q {
                    for x2 in 0..q {
                        for y2 in 0..q {
                            if x == x2 || y == y2 || (x, y) >= (x2, y2) {
                                continue;
                            }
                            let d = l.branch(s0, x, s0, x2) + l.branch(x, y, x2, y2) + l.branch(y, e, y2, e);
                            h.entry(d).or_default()[1] += 1;
                        }
                    }
                }
            }
        }
    }
    h
}

fn check(code: &Code) {
    let cons = Constellation::qam(code.field()).unwrap();
    let s = compute_spectrum(code, &cons);
    let h = histogram(code);
    let mut it = h.iter();
    let (&d1, n1) = it.next().unwrap();
    let (&d2, n2) = it.next().unwrap();
    assert_eq!((s.d1_num, s.d2_num), (d1, d2), "{}", code.coeffs());
    assert_eq!(s.n1_by_length, *n1, "{}", code.coeffs());
    assert_eq!(s.n2_by_length, *n2, "{}", code.coeffs());
    assert_eq!(s.n1, n1[0] + n1[1]);
    assert_eq!(s.n2, n2[0] + n2[1]);
}

#[test]
fn every_gf4_code() {
    let f = FieldSpec::gf4();
    let mut n = 0;
    for a1 in 1..4 {
        for a2 in 1..4 {
            for a3 in 0..4 {
                if let Ok(code) = Code::from_values(f.clone(), a1, a2, a3) {
                    check(&code);
                    n += 1;
                }
            }
        }
    }
    assert_eq!(n, 27);
}

#[test]
fn gf16_codes() {
    let f = FieldSpec::gf16();
    for (a1, a2, a3) in [(12, 4, 0), (10, 12, 3), (13, 7, 11), (1, 1, 0), (2, 15, 14), (9, 14, 6), (5, 3, 1)] {
        check(&Code::from_values(f.clone(), a1, a2, a3).unwrap());
    }
}

fn naive_truncation(code: &Code) -> u32 {
    let l = Labels::new(code);
    let q = l.q;
    let mut best = u32::MAX;
    for s0 in 0..q {
        for x in 0..q {
            for x2 in 0..q {
                if x == x2 {
                    continue;
                }
                let d1 = l.branch(s0, x, s0, x2);
                for y in 0..q {
                    for y2 in 0..q {
                        if y == y2 {
                            continue;
                        }
                        let d2 = d1 + l.branch(x, y, x2, y2);
                        for z in 0..q {
                            for z2 in 0..q {
                                if z != z2 {
                                    best = best.min(d2 + l.branch(y, z, y2, z2));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    best
}

#[test]
fn truncation_bound_matches_enumeration() {
    let f4 = FieldSpec::gf4();
    for (a1, a2, a3) in [(1, 2, 3), (2, 2, 1), (3, 1, 0)] {
        let code = Code::from_values(f4.clone(), a1, a2, a3).unwrap();
        let cons = Constellation::qam(&f4).unwrap();
        assert_eq!(verify_truncation(&code, &cons).num, naive_truncation(&code));
    }
    let code = Code::from_values(FieldSpec::gf16(), 13, 7, 11).unwrap();
    let cons = Constellation::qam(code.field()).unwrap();
    assert_eq!(verify_truncation(&code, &cons).num, naive_truncation(&code));
}
