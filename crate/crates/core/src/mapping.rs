//! Square QAM constellations with per-axis Gray labels, plus the BPSK image
//! used to send a q-ary symbol as m antipodal bits.
//!
//! Points live on the odd integer lattice; distances are kept as integers
//! over the unnormalised mean energy `scale_sq`, so spectra compare exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldSpec};

/// Squared distance as an exact fraction `num / scale_sq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SqDistance {
    pub num: u32,
    pub scale_sq: u32,
}

impl SqDistance {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.scale_sq as f64
    }

    /// Value truncated (not rounded) to two decimals, as `floor(100 * num / scale_sq)`.
    pub fn hundredths_truncated(self) -> u64 {
        100 * self.num as u64 / self.scale_sq as u64
    }
}

impl PartialOrd for SqDistance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SqDistance {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u64 * other.scale_sq as u64).cmp(&(other.num as u64 * self.scale_sq as u64))
    }
}

/// Reflected binary Gray code.
#[inline]
pub fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

#[inline]
pub fn gray_inverse(mut g: u32) -> u32 {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constellation {
    bits: u32,
    /// Lattice coordinates `(I, Q)`, indexed by point.
    points: Vec<(i32, i32)>,
    /// Mean of `I^2 + Q^2` over the points.
    scale_sq: u32,
    /// `mapping[x]` is the point carrying field element `x`.
    mapping: Vec<usize>,
}

impl Constellation {
    /// Square QAM for q = 2^m with m even. Point `k` carries binary image `k`:
    /// odd bits form the Q-axis label, even bits the I-axis label, each axis
    /// Gray coded from the most positive level downwards. q = 4 gives QPSK.
    pub fn qam(field: &FieldSpec) -> Result<Self> {
        let m = field.m();
        if !m.is_multiple_of(2) {
            return Err(Error::UnsupportedConstellation(field.q()));
        }
        let q = field.size();
        let per_axis = m / 2;
        let top = (1i32 << per_axis) - 1;
        let level = |label: u32| top - 2 * gray_inverse(label) as i32;

        let points: Vec<(i32, i32)> = (0..q as u32)
            .map(|k| {
                let (mut i_label, mut q_label) = (0u32, 0u32);
                for j in 0..per_axis {
                    i_label |= (k >> (2 * j) & 1) << j;
                    q_label |= (k >> (2 * j + 1) & 1) << j;
                }
                (level(i_label), level(q_label))
            })
            .collect();
        let energy: i64 = points.iter().map(|&(i, q)| (i * i + q * q) as i64).sum();
        debug_assert_eq!(energy % q as i64, 0);
        let scale_sq = (energy / q as i64) as u32;
        Ok(Constellation { bits: m, points, scale_sq, mapping: (0..q).collect() })
    }

    /// Builds from explicit lattice points with identity mapping; `points.len()` must be a power of two.
    pub fn from_points(points: Vec<(i32, i32)>) -> Result<Self> {
        let q = points.len();
        if q < 2 || !q.is_power_of_two() {
            return Err(Error::UnsupportedConstellation(q as u32));
        }
        let energy: i64 = points.iter().map(|&(i, q)| (i * i + q * q) as i64).sum();
        if energy % q as i64 != 0 {
            return Err(Error::InvalidInput("mean energy of the points must be an integer".into()));
        }
        Ok(Constellation {
            bits: q.trailing_zeros(),
            points,
            scale_sq: (energy / q as i64) as u32,
            mapping: (0..q).collect(),
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    pub fn scale_sq(&self) -> u32 {
        self.scale_sq
    }

    pub fn points(&self) -> &[(i32, i32)] {
        &self.points
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// Lattice point carrying symbol `x`.
    #[inline]
    pub fn lattice_point(&self, x: FieldElement) -> (i32, i32) {
        self.points[self.mapping[x.index()]]
    }

    /// Unit-energy complex point carrying symbol `x`.
    pub fn point(&self, x: FieldElement) -> Complex64 {
        let (i, q) = self.lattice_point(x);
        let s = (self.scale_sq as f64).sqrt();
        Complex64::new(i as f64 / s, q as f64 / s)
    }

    /// Unit-energy points indexed by symbol value.
    pub fn symbol_points(&self) -> Vec<Complex64> {
        (0..self.size()).map(|x| self.point(FieldElement(x as u8))).collect()
    }

    /// Integer numerator `dI^2 + dQ^2` between the points carrying `x` and `y`.
    #[inline]
    pub fn squared_distance_num(&self, x: FieldElement, y: FieldElement) -> u32 {
        let (xi, xq) = self.lattice_point(x);
        let (yi, yq) = self.lattice_point(y);
        ((xi - yi) * (xi - yi) + (xq - yq) * (xq - yq)) as u32
    }

    pub fn squared_distance(&self, x: FieldElement, y: FieldElement) -> SqDistance {
        SqDistance { num: self.squared_distance_num(x, y), scale_sq: self.scale_sq }
    }

    /// Row-major `q x q` table of squared-distance numerators between symbols.
    pub fn distance_table(&self) -> Vec<u32> {
        let q = self.size();
        let mut t = vec![0u32; q * q];
        for x in 0..q {
            for y in 0..q {
                t[x * q + y] = self.squared_distance_num(FieldElement(x as u8), FieldElement(y as u8));
            }
        }
        t
    }

    /// Smallest nonzero squared-distance numerator.
    pub fn min_distance_num(&self) -> u32 {
        self.distance_table().into_iter().filter(|&d| d > 0).min().unwrap_or(0)
    }

    /// Relabels symbols: the new mapping is `perm[mapping[x]]`. Points are untouched.
    pub fn permute_mapping(&self, perm: &[usize]) -> Result<Self> {
        let q = self.size();
        if !is_permutation(perm, q) {
            return Err(Error::NotAPermutation(q));
        }
        let mapping = self.mapping.iter().map(|&p| perm[p]).collect();
        Ok(Constellation { mapping, ..self.clone() })
    }

    /// Symbol whose point index is `p`.
    pub fn symbol_at(&self, p: usize) -> FieldElement {
        let x = self.mapping.iter().position(|&v| v == p).expect("mapping is a bijection");
        FieldElement(x as u8)
    }
}

fn is_permutation(perm: &[usize], q: usize) -> bool {
    if perm.len() != q {
        return false;
    }
    let mut seen = vec![false; q];
    for &p in perm {
        if p >= q || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Sends each symbol as `m` BPSK values, most significant bit first, with
/// bit 0 mapped to +1 and bit 1 to -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpskImage {
    bits: u32,
}

impl BpskImage {
    pub fn new(field: &FieldSpec) -> Self {
        BpskImage { bits: field.m() }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    pub fn modulate(&self, x: FieldElement) -> Vec<f64> {
        (0..self.bits).rev().map(|b| if x.value() >> b & 1 == 0 { 1.0 } else { -1.0 }).collect()
    }

    pub fn modulate_into(&self, x: FieldElement, out: &mut Vec<f64>) {
        out.extend((0..self.bits).rev().map(|b| if x.value() >> b & 1 == 0 { 1.0 } else { -1.0 }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: u8) -> FieldElement {
        FieldElement(v)
    }

    #[test]
    fn gray_roundtrip() {
        for i in 0..256 {
            assert_eq!(gray_inverse(gray(i)), i);
        }
        assert_eq!((0..8).map(gray).collect::<Vec<_>>(), vec![0, 1, 3, 2, 6, 7, 5, 4]);
    }

    #[test]
    fn qam16_table_rows() {
        let c = Constellation::qam(&FieldSpec::gf16()).unwrap();
        assert_eq!(c.scale_sq(), 10);
        assert_eq!(c.lattice_point(e(0b0000)), (3, 3));
        assert_eq!(c.lattice_point(e(0b0101)), (-1, 3));
        // b3b1 = 10 -> Q = -3, b2b0 = 01 -> I = +1
        assert_eq!(c.lattice_point(e(0b1001)), (1, -3));
        assert_eq!(c.lattice_point(e(0b1111)), (-1, -1));
    }

    #[test]
    fn qam64_table_rows() {
        let c = Constellation::qam(&FieldSpec::gf64()).unwrap();
        assert_eq!(c.scale_sq(), 42);
        assert_eq!(c.lattice_point(e(0)), (7, 7));
        // b5b3b1 = 110 -> Q = -1; b4b2b0 = 000 -> I = +7
        assert_eq!(c.lattice_point(e(0b101000)), (7, -1));
        // 100100: b5b3b1 = 1,0,0 -> Q = -7; b4b2b0 = 0,1,0 -> I = +1
        assert_eq!(c.lattice_point(e(0b100100)), (1, -7));
        assert_eq!(c.lattice_point(e(0b111111)), (-3, -3));
    }

    #[test]
    fn qpsk_points() {
        let c = Constellation::qam(&FieldSpec::gf4()).unwrap();
        assert_eq!(c.scale_sq(), 2);
        assert_eq!(c.points(), &[(1, 1), (-1, 1), (1, -1), (-1, -1)]);
        assert_eq!(c.min_distance_num() as f64 / c.scale_sq() as f64, 2.0);
    }

    #[test]
    fn distances() {
        let c16 = Constellation::qam(&FieldSpec::gf16()).unwrap();
        let d = c16.squared_distance(e(0b0000), e(0b0001));
        assert_eq!(c16.lattice_point(e(1)), (1, 3));
        assert_eq!(d, SqDistance { num: 4, scale_sq: 10 });
        assert!((d.to_f64() - 0.4).abs() < 1e-12);
        assert_eq!(c16.min_distance_num(), 4);
        let c64 = Constellation::qam(&FieldSpec::gf64()).unwrap();
        assert_eq!(c64.min_distance_num(), 4);
        assert!((c64.squared_distance(e(0), e(1)).to_f64() - 4.0 / 42.0).abs() < 1e-12);
        for x in 0..64u8 {
            assert_eq!(c64.squared_distance_num(e(x), e(x)), 0);
            for y in 0..64u8 {
                assert_eq!(c64.squared_distance_num(e(x), e(y)), c64.squared_distance_num(e(y), e(x)));
                if x != y {
                    assert!(c64.squared_distance_num(e(x), e(y)) > 0);
                }
            }
        }
    }

    #[test]
    fn unit_energy() {
        for f in [FieldSpec::gf4(), FieldSpec::gf16(), FieldSpec::gf64()] {
            let c = Constellation::qam(&f).unwrap();
            let es: f64 = c.symbol_points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.size() as f64;
            assert!((es - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for f in [FieldSpec::gf4(), FieldSpec::gf16(), FieldSpec::gf64()] {
            let c = Constellation::qam(&f).unwrap();
            for x in f.elements() {
                for y in f.elements() {
                    if c.squared_distance_num(x, y) == 4 {
                        assert_eq!((x.0 ^ y.0).count_ones(), 1, "{x} {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn permutation() {
        let c = Constellation::qam(&FieldSpec::gf4()).unwrap();
        let id = c.permute_mapping(&[0, 1, 2, 3]).unwrap();
        assert_eq!(id.distance_table(), c.distance_table());
        let p = c.permute_mapping(&[2, 0, 3, 1]).unwrap();
        let mut a = c.distance_table();
        let mut b = p.distance_table();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        assert_eq!(p.symbol_at(p.mapping()[3]), e(3));
        assert_eq!(c.permute_mapping(&[0, 0, 1, 2]), Err(Error::NotAPermutation(4)));
        assert_eq!(c.permute_mapping(&[0, 1, 2]), Err(Error::NotAPermutation(4)));
    }

    #[test]
    fn rejects_odd_degree() {
        let f8 = FieldSpec::new(3, 0b1011).unwrap();
        assert_eq!(Constellation::qam(&f8), Err(Error::UnsupportedConstellation(8)));
    }

    #[test]
    fn bpsk_image() {
        let b = BpskImage::new(&FieldSpec::gf4());
        assert_eq!(b.modulate(e(0)), vec![1.0, 1.0]);
        assert_eq!(b.modulate(e(3)), vec![-1.0, -1.0]);
        assert_eq!(b.modulate(e(2)), vec![-1.0, 1.0]);
        let b64 = BpskImage::new(&FieldSpec::gf64());
        let v = b64.modulate(e(0b101101));
        assert_eq!(v.len(), 6);
        assert!(v.iter().all(|x| x * x == 1.0));
    }
}
