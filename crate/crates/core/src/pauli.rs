//! Sparse Pauli strings with a ±1 sign.
//!
//! The global phase `i` is not represented. A product of two anticommuting
//! strings keeps only the real part of its phase (`i → +1`, `-i → -1`).

use serde::{Deserialize, Serialize};
use std::fmt;

/// Single-qubit Pauli letter (identity is represented by absence).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Option<Pauli> {
        match (x, z) {
            (false, false) => None,
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A Pauli operator on `n` qubits stored as a sorted list of non-identity
/// letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    n: usize,
    terms: Vec<(usize, Pauli)>,
    negative: bool,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, terms: Vec::new(), negative: false }
    }

    /// Builds a string from `(qubit, letter)` pairs. Repeated qubits are
    /// multiplied together left to right.
    pub fn from_terms(n: usize, terms: &[(usize, Pauli)]) -> Self {
        let mut out = PauliString::identity(n);
        for &(q, p) in terms {
            assert!(q < n, "qubit {q} outside register of size {n}");
            out = out.mul(&PauliString { n, terms: vec![(q, p)], negative: false });
        }
        out
    }

    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        Self::from_terms(n, &[(q, p)])
    }

    /// Parses a dense string such as `"+XIZY"` or `"-ZZ"`.
    pub fn parse_dense(s: &str) -> Option<Self> {
        let (negative, body) = match s.as_bytes().first()? {
            b'+' => (false, &s[1..]),
            b'-' => (true, &s[1..]),
            _ => (false, s),
        };
        let mut terms = Vec::new();
        for (q, c) in body.chars().enumerate() {
            let p = match c {
                'I' | '_' => continue,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return None,
            };
            terms.push((q, p));
        }
        Some(PauliString { n: body.chars().count(), terms, negative })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(usize, Pauli)] {
        &self.terms
    }

    pub fn weight(&self) -> usize {
        self.terms.len()
    }

    pub fn is_identity(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    pub fn get(&self, q: usize) -> Option<Pauli> {
        self.terms
            .binary_search_by_key(&q, |t| t.0)
            .ok()
            .map(|i| self.terms[i].1)
    }

    /// Same letters with the sign dropped.
    pub fn unsigned(&self) -> Self {
        PauliString { n: self.n, terms: self.terms.clone(), negative: false }
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        let (mut i, mut j) = (0, 0);
        let mut anti = false;
        while i < self.terms.len() && j < other.terms.len() {
            let (qa, pa) = self.terms[i];
            let (qb, pb) = other.terms[j];
            if qa < qb {
                i += 1;
            } else if qb < qa {
                j += 1;
            } else {
                if pa != pb {
                    anti = !anti;
                }
                i += 1;
                j += 1;
            }
        }
        !anti
    }

    /// Group product `self · other` with the sign kept modulo ±1.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n, other.n, "register size mismatch");
        // phase exponent of i, mod 4
        let mut phase: u8 = (2 * self.negative as u8 + 2 * other.negative as u8) % 4;
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let qa = self.terms.get(i).map_or(usize::MAX, |t| t.0);
            let qb = other.terms.get(j).map_or(usize::MAX, |t| t.0);
            if qa < qb {
                terms.push(self.terms[i]);
                i += 1;
            } else if qb < qa {
                terms.push(other.terms[j]);
                j += 1;
            } else {
                let (a, b) = (self.terms[i].1, other.terms[j].1);
                let (p, k) = single_product(a, b);
                phase = (phase + k) % 4;
                if let Some(p) = p {
                    terms.push((qa, p));
                }
                i += 1;
                j += 1;
            }
        }
        PauliString { n: self.n, terms, negative: phase >= 2 }
    }

    /// Symplectic bits `(x, z)` on qubit `q`.
    pub fn bits(&self, q: usize) -> (bool, bool) {
        self.get(q).map_or((false, false), Pauli::bits)
    }

    fn set_bits(&mut self, q: usize, x: bool, z: bool) {
        match self.terms.binary_search_by_key(&q, |t| t.0) {
            Ok(i) => match Pauli::from_bits(x, z) {
                Some(p) => self.terms[i].1 = p,
                None => {
                    self.terms.remove(i);
                }
            },
            Err(i) => {
                if let Some(p) = Pauli::from_bits(x, z) {
                    self.terms.insert(i, (q, p));
                }
            }
        }
    }

    /// Drops the letter on qubit `q`.
    pub fn remove(&mut self, q: usize) {
        self.set_bits(q, false, false);
    }
}

/// Product of two single-qubit letters: resulting letter and the exponent of
/// `i` it carries.
fn single_product(a: Pauli, b: Pauli) -> (Option<Pauli>, u8) {
    use Pauli::*;
    match (a, b) {
        (X, X) | (Y, Y) | (Z, Z) => (None, 0),
        (X, Y) => (Some(Z), 1),
        (Y, X) => (Some(Z), 3),
        (Y, Z) => (Some(X), 1),
        (Z, Y) => (Some(X), 3),
        (Z, X) => (Some(Y), 1),
        (X, Z) => (Some(Y), 3),
    }
}

/// Product of two strings; see [`PauliString::mul`].
pub fn pauli_multiply(a: &PauliString, b: &PauliString) -> PauliString {
    a.mul(b)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        let mut k = 0;
        for q in 0..self.n {
            if k < self.terms.len() && self.terms[k].0 == q {
                write!(f, "{}", self.terms[k].1.as_char())?;
                k += 1;
            } else {
                f.write_str("I")?;
            }
        }
        Ok(())
    }
}

/// Gates a Pauli string can be conjugated through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliffordOp {
    H(usize),
    Cnot(usize, usize),
    R(usize),
    Mz(usize),
    Mx(usize),
}

/// Result of pushing a Pauli through one operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conjugated {
    pub pauli: PauliString,
    /// Set when the Pauli anticommuted with a measurement: the recorded bit
    /// flips and the qubit's frame is randomized afterwards.
    pub randomized: Option<usize>,
}

/// Heisenberg-picture propagation `g P g†` for Clifford gates. A reset
/// absorbs any letter on its qubit; measurements leave the string unchanged
/// but report a randomization event when they anticommute with it.
pub fn conjugate_through_gate(p: &PauliString, gate: CliffordOp) -> Conjugated {
    let mut out = p.clone();
    let mut randomized = None;
    match gate {
        CliffordOp::H(q) => {
            let (x, z) = out.bits(q);
            if x && z {
                out.negative = !out.negative;
            }
            out.set_bits(q, z, x);
        }
        CliffordOp::Cnot(c, t) => {
            assert_ne!(c, t, "CNOT control equals target");
            let (xc, zc) = out.bits(c);
            let (xt, zt) = out.bits(t);
            if xc && zt && (xt == zc) {
                out.negative = !out.negative;
            }
            out.set_bits(t, xt ^ xc, zt);
            out.set_bits(c, xc, zc ^ zt);
        }
        CliffordOp::R(q) => out.remove(q),
        CliffordOp::Mz(q) => {
            if out.bits(q).0 {
                randomized = Some(q);
            }
        }
        CliffordOp::Mx(q) => {
            if out.bits(q).1 {
                randomized = Some(q);
            }
        }
    }
    Conjugated { pauli: out, randomized }
}
