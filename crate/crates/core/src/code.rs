//! Rate-1/2 recursive systematic encoders with a single memory element.
//!
//! State update `E' = s + a1*E`, parity `p = a2*E' + a3*E`. With `a3 = 0` this
//! is the accumulator structure where all edges entering a state share one
//! parity symbol; a nonzero `a3` spreads the entering parities over the whole
//! field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{FieldDescriptor, FieldElement, FieldSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CodeCoefficients {
    pub a1: FieldElement,
    pub a2: FieldElement,
    pub a3: FieldElement,
}

impl CodeCoefficients {
    pub fn new(a1: u8, a2: u8, a3: u8) -> Self {
        CodeCoefficients { a1: FieldElement(a1), a2: FieldElement(a2), a3: FieldElement(a3) }
    }

    /// Checks the coefficient constraints against `field`.
    pub fn validate(&self, field: &FieldSpec) -> Result<()> {
        for (name, c) in [("a1", self.a1), ("a2", self.a2), ("a3", self.a3)] {
            if c.value() >= field.q() {
                return Err(Error::InvalidCode(format!("{name}={} is not an element of GF({})", c, field.q())));
            }
        }
        if self.a1.is_zero() {
            return Err(Error::InvalidCode("a1 == 0 (encoder is not recursive)".into()));
        }
        if self.a2.is_zero() {
            return Err(Error::InvalidCode("a2 == 0".into()));
        }
        if field.add(field.mul(self.a1, self.a2), self.a3).is_zero() {
            return Err(Error::InvalidCode("a1*a2+a3 == 0".into()));
        }
        Ok(())
    }

    pub fn is_accumulator(&self) -> bool {
        self.a3.is_zero()
    }
}

impl std::fmt::Display for CodeCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.a1, self.a2, self.a3)
    }
}

/// JSON form: `{"field": {"m": 4, "poly": 25}, "a1": 13, "a2": 7, "a3": 11}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub field: FieldDescriptor,
    pub a1: u32,
    pub a2: u32,
    pub a3: u32,
}

/// A validated code: field plus coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeDescriptor", into = "CodeDescriptor")]
pub struct Code {
    field: FieldSpec,
    coeffs: CodeCoefficients,
}

impl TryFrom<CodeDescriptor> for Code {
    type Error = Error;

    fn try_from(d: CodeDescriptor) -> Result<Self> {
        let field = FieldSpec::try_from(d.field)?;
        let coeffs = CodeCoefficients {
            a1: field.element(d.a1).map_err(|_| Error::InvalidCode(format!("a1={} out of range", d.a1)))?,
            a2: field.element(d.a2).map_err(|_| Error::InvalidCode(format!("a2={} out of range", d.a2)))?,
            a3: field.element(d.a3).map_err(|_| Error::InvalidCode(format!("a3={} out of range", d.a3)))?,
        };
        Code::new(field, coeffs)
    }
}

impl From<Code> for CodeDescriptor {
    fn from(c: Code) -> Self {
        c.descriptor()
    }
}

/// Output of [`Code::encode_frame`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedFrame {
    pub systematic: Vec<FieldElement>,
    pub parity: Vec<FieldElement>,
    pub final_state: FieldElement,
}

impl Code {
    pub fn new(field: FieldSpec, coeffs: CodeCoefficients) -> Result<Self> {
        coeffs.validate(&field)?;
        Ok(Code { field, coeffs })
    }

    pub fn from_values(field: FieldSpec, a1: u32, a2: u32, a3: u32) -> Result<Self> {
        Code::try_from(CodeDescriptor { field: field.descriptor(), a1, a2, a3 })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn coeffs(&self) -> CodeCoefficients {
        self.coeffs
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            field: self.field.descriptor(),
            a1: self.coeffs.a1.value(),
            a2: self.coeffs.a2.value(),
            a3: self.coeffs.a3.value(),
        }
    }

    /// One trellis step: returns `(next_state, parity)`.
    #[inline]
    pub fn step(&self, state: FieldElement, input: FieldElement) -> (FieldElement, FieldElement) {
        let f = &self.field;
        let CodeCoefficients { a1, a2, a3 } = self.coeffs;
        let next = f.add(input, f.mul(a1, state));
        let parity = f.add(f.mul(a2, next), f.mul(a3, state));
        (next, parity)
    }

    /// Input symbol that drives `state` back to zero in one step.
    pub fn tail_symbol(&self, state: FieldElement) -> FieldElement {
        self.field.mul(self.coeffs.a1, state)
    }

    /// Encodes from state 0. With `terminate`, one tail symbol is appended so
    /// the encoder ends in state 0.
    pub fn encode_frame(&self, inputs: &[FieldElement], terminate: bool) -> EncodedFrame {
        let n = inputs.len() + usize::from(terminate);
        let mut systematic = Vec::with_capacity(n);
        let mut parity = Vec::with_capacity(n);
        let mut state = FieldElement::ZERO;
        for &s in inputs {
            let (next, p) = self.step(state, s);
            systematic.push(s);
            parity.push(p);
            state = next;
        }
        if terminate {
            let s = self.tail_symbol(state);
            let (next, p) = self.step(state, s);
            debug_assert!(next.is_zero());
            systematic.push(s);
            parity.push(p);
            state = next;
        }
        EncodedFrame { systematic, parity, final_state: state }
    }

    pub fn trellis(&self) -> Trellis {
        Trellis::new(self)
    }
}

/// One labelled transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrellisEdge {
    pub from_state: FieldElement,
    pub to_state: FieldElement,
    pub systematic: FieldElement,
    pub parity: FieldElement,
}

/// Fully connected q-state trellis. Labels are stored flat, indexed by
/// `from * q + to`.
#[derive(Debug, Clone)]
pub struct Trellis {
    q: usize,
    coeffs: CodeCoefficients,
    systematic: Vec<u8>,
    parity: Vec<u8>,
    // indexed by state * q + input
    next_by_input: Vec<u8>,
    parity_by_input: Vec<u8>,
}

impl Trellis {
    pub fn new(code: &Code) -> Self {
        let f = code.field();
        let q = f.size();
        let mut systematic = vec![0u8; q * q];
        let mut parity = vec![0u8; q * q];
        let mut next_by_input = vec![0u8; q * q];
        let mut parity_by_input = vec![0u8; q * q];
        for from in f.elements() {
            for input in f.elements() {
                let (to, p) = code.step(from, input);
                let e = from.index() * q + to.index();
                systematic[e] = input.0;
                parity[e] = p.0;
                next_by_input[from.index() * q + input.index()] = to.0;
                parity_by_input[from.index() * q + input.index()] = p.0;
            }
        }
        Trellis { q, coeffs: code.coeffs(), systematic, parity, next_by_input, parity_by_input }
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.q
    }

    pub fn coeffs(&self) -> CodeCoefficients {
        self.coeffs
    }

    #[inline]
    pub fn systematic(&self, from: usize, to: usize) -> u8 {
        self.systematic[from * self.q + to]
    }

    #[inline]
    pub fn parity(&self, from: usize, to: usize) -> u8 {
        self.parity[from * self.q + to]
    }

    #[inline]
    pub fn next_state(&self, from: usize, input: usize) -> usize {
        self.next_by_input[from * self.q + input] as usize
    }

    /// Parity emitted when `input` is applied in state `from`.
    #[inline]
    pub fn parity_for_input(&self, from: usize, input: usize) -> usize {
        self.parity_by_input[from * self.q + input] as usize
    }

    pub fn systematic_labels(&self) -> &[u8] {
        &self.systematic
    }

    pub fn parity_labels(&self) -> &[u8] {
        &self.parity
    }

    pub fn edge(&self, from: usize, to: usize) -> TrellisEdge {
        TrellisEdge {
            from_state: FieldElement(from as u8),
            to_state: FieldElement(to as u8),
            systematic: FieldElement(self.systematic(from, to)),
            parity: FieldElement(self.parity(from, to)),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = TrellisEdge> + '_ {
        (0..self.q * self.q).map(move |i| self.edge(i / self.q, i % self.q))
    }

    pub fn num_edges(&self) -> usize {
        self.q * self.q
    }
}
