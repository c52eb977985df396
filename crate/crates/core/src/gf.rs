//! Arithmetic in GF(2^m) for 2 <= m <= 8.
//!
//! Elements use the polynomial basis: bit `i` of the value is the coefficient
//! of `D^i`. Multiplication goes through log/antilog tables built from a
//! primitive polynomial, so a product costs two lookups and one add.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primitive polynomial for GF(4): 1 + D + D^2.
pub const POLY_GF4: u32 = 0b111;
/// Primitive polynomial for GF(16): 1 + D^3 + D^4.
pub const POLY_GF16: u32 = 0b11001;
/// Primitive polynomial for GF(64): 1 + D^2 + D^3 + D^5 + D^6.
pub const POLY_GF64: u32 = 0b1101101;

/// A field element as a polynomial-basis bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u8);

impl FieldElement {
    pub const ZERO: Self = FieldElement(0);
    pub const ONE: Self = FieldElement(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0 as u32
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// JSON form of a field: `{"m": 6, "poly": 109}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub m: u32,
    pub poly: u32,
}

impl FieldDescriptor {
    /// Default descriptor for the fields that ship with the crate.
    pub fn default_for_q(q: u32) -> Option<Self> {
        let poly = match q {
            4 => POLY_GF4,
            16 => POLY_GF16,
            64 => POLY_GF64,
            _ => return None,
        };
        Some(FieldDescriptor { m: q.trailing_zeros(), poly })
    }
}

/// GF(2^m) built from a primitive polynomial. Immutable once constructed.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FieldDescriptor", into = "FieldDescriptor")]
pub struct FieldSpec {
    m: u32,
    q: u32,
    poly: u32,
    log: Vec<u16>,
    // antilog table repeated twice so that log[x] + log[y] never needs a reduction
    exp: Vec<u8>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("m", &self.m)
            .field("q", &self.q)
            .field("poly", &format_args!("{:#b}", self.poly))
            .finish()
    }
}

impl TryFrom<FieldDescriptor> for FieldSpec {
    type Error = Error;

    fn try_from(d: FieldDescriptor) -> Result<Self> {
        FieldSpec::new(d.m, d.poly)
    }
}

impl From<FieldSpec> for FieldDescriptor {
    fn from(f: FieldSpec) -> Self {
        f.descriptor()
    }
}

impl FieldSpec {
    /// Builds GF(2^m) from `poly` and checks that `D` generates every nonzero element.
    pub fn new(m: u32, poly: u32) -> Result<Self> {
        if !(2..=8).contains(&m) {
            return Err(Error::UnsupportedDegree(m));
        }
        if poly >> m != 1 {
            return Err(Error::WrongDegree { m, poly });
        }
        if poly & 1 == 0 {
            return Err(Error::NoConstantTerm(poly));
        }
        let q = 1u32 << m;
        let order = q - 1;

        let d_order = order_of_d(q, poly);
        if d_order != order {
            return Err(Error::NotPrimitive { poly, order: d_order, expected: order });
        }

        let mut log = vec![0u16; q as usize];
        let mut exp = vec![0u8; 2 * order as usize];
        let mut x: u32 = 1;
        for i in 0..order {
            exp[i as usize] = x as u8;
            log[x as usize] = i as u16;
            x = times_d(x, q, poly);
        }
        let (lo, hi) = exp.split_at_mut(order as usize);
        hi.copy_from_slice(lo);

        Ok(FieldSpec { m, q, poly, log, exp })
    }

    /// One of the embedded default fields (q in {4, 16, 64}).
    pub fn default_for_q(q: u32) -> Result<Self> {
        let d = FieldDescriptor::default_for_q(q).ok_or(Error::UnsupportedConstellation(q))?;
        FieldSpec::new(d.m, d.poly)
    }

    pub fn gf4() -> Self {
        FieldSpec::new(2, POLY_GF4).expect("built-in polynomial is primitive")
    }

    pub fn gf16() -> Self {
        FieldSpec::new(4, POLY_GF16).expect("built-in polynomial is primitive")
    }

    pub fn gf64() -> Self {
        FieldSpec::new(6, POLY_GF64).expect("built-in polynomial is primitive")
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.q as usize
    }

    #[inline]
    pub fn poly(&self) -> u32 {
        self.poly
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor { m: self.m, poly: self.poly }
    }

    /// Validated element constructor.
    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value >= self.q {
            return Err(Error::ElementOutOfRange { value, q: self.q });
        }
        Ok(FieldElement(value as u8))
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (0..self.q).map(|v| FieldElement(v as u8))
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (1..self.q).map(|v| FieldElement(v as u8))
    }

    /// `log_table[x]` is the discrete log of `x` to base `D`; entry 0 is unused and set to 0.
    pub fn log_table(&self) -> &[u16] {
        &self.log
    }

    /// `antilog_table[i] = D^i` for `i` in `0..q`, where `D^(q-1) = 1`.
    pub fn antilog_table(&self) -> &[u8] {
        &self.exp[..self.q as usize]
    }

    #[inline]
    pub fn add(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        FieldElement(x.0 ^ y.0)
    }

    #[inline]
    pub fn mul(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if x.0 == 0 || y.0 == 0 {
            return FieldElement::ZERO;
        }
        let i = self.log[x.index()] as usize + self.log[y.index()] as usize;
        FieldElement(self.exp[i])
    }

    pub fn inv(&self, x: FieldElement) -> Result<FieldElement> {
        if x.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let order = (self.q - 1) as usize;
        let l = self.log[x.index()] as usize;
        Ok(FieldElement(self.exp[(order - l) % order]))
    }

    pub fn pow(&self, x: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if x.is_zero() {
            return FieldElement::ZERO;
        }
        let order = (self.q - 1) as u64;
        let l = (self.log[x.index()] as u64 * (e % order)) % order;
        FieldElement(self.exp[l as usize])
    }

    /// Full `q x q` product table, row-major.
    pub fn mul_table(&self) -> Vec<u8> {
        let q = self.size();
        let mut t = vec![0u8; q * q];
        for x in self.elements() {
            for y in self.elements() {
                t[x.index() * q + y.index()] = self.mul(x, y).0;
            }
        }
        t
    }
}

#[inline]
fn times_d(x: u32, q: u32, poly: u32) -> u32 {
    let x = x << 1;
    if x & q != 0 {
        x ^ poly
    } else {
        x
    }
}

/// Multiplicative order of `D` modulo `poly`, or 0 if it exceeds `q - 1`.
fn order_of_d(q: u32, poly: u32) -> u32 {
    let mut x = times_d(1, q, poly);
    for k in 1..q {
        if x == 1 {
            return k;
        }
        x = times_d(x, q, poly);
    }
    0
}

/// Carry-less multiply followed by reduction; independent of the tables.
pub fn clmul_reduce(x: u32, y: u32, m: u32, poly: u32) -> u32 {
    let mut acc = 0u32;
    for i in 0..m {
        if y >> i & 1 == 1 {
            acc ^= x << i;
        }
    }
    for bit in (m..2 * m).rev() {
        if acc >> bit & 1 == 1 {
            acc ^= poly << (bit - m);
        }
    }
    acc
}
