//! Dense statevector checks of measurement teleportation: a joint
//! observable `O_A ⊗ O_B` measured through a shared Bell pair, each half
//! controlling one factor, against the direct projective measurement.
//!
//! Qubit `q` is bit `q` of the amplitude index.

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use nalgebra::DMatrix;
use num_complex::Complex64;

const TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    /// `|0…0⟩` on `n` qubits.
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        DenseState { n, amps }
    }

    /// Normalises `amps`; rejects a zero vector or a length that is not a
    /// power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidSpec(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let n = amps.len().trailing_zeros() as usize;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidSpec("zero state".into()));
        }
        Ok(DenseState { n, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &DenseState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &DenseState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn h(&mut self, q: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = (a + b) * s;
                self.amps[i | bit] = (a - b) * s;
            }
        }
    }

    /// Phase gate `diag(1, i)`.
    pub fn s(&mut self, q: usize) {
        let bit = 1 << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= Complex64::i();
            }
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let (cb, tb) = (1 << c, 1 << t);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    /// Applies `op`, or only on the `control = 1` subspace when a control is
    /// given.
    fn apply_impl(&mut self, op: &Operator, control: Option<usize>) {
        let k = op.qubits.len();
        let mask: usize = op.qubits.iter().map(|&q| 1 << q).sum();
        let mut local = vec![Complex64::new(0.0, 0.0); 1 << k];
        let spread = |base: usize, l: usize| -> usize {
            let mut i = base;
            for (j, &q) in op.qubits.iter().enumerate() {
                if l >> j & 1 == 1 {
                    i |= 1 << q;
                }
            }
            i
        };
        for base in 0..self.amps.len() {
            if base & mask != 0 || control.is_some_and(|c| base >> c & 1 == 0) {
                continue;
            }
            for (l, slot) in local.iter_mut().enumerate() {
                *slot = self.amps[spread(base, l)];
            }
            for r in 0..local.len() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, v) in local.iter().enumerate() {
                    acc += op.matrix[(r, c)] * v;
                }
                self.amps[spread(base, r)] = acc;
            }
        }
    }

    pub fn apply(&mut self, op: &Operator) {
        self.apply_impl(op, None);
    }

    pub fn apply_controlled(&mut self, control: usize, op: &Operator) {
        self.apply_impl(op, Some(control));
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        self.amps.iter().enumerate().filter(|(i, _)| i >> q & 1 == 1).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projects the given qubits onto fixed bits and drops them, returning
    /// the probability and (when it is nonzero) the normalised rest.
    pub fn project_out(&self, fixed: &[(usize, bool)]) -> (f64, Option<DenseState>) {
        let keep: Vec<usize> = (0..self.n).filter(|q| !fixed.iter().any(|f| f.0 == *q)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << keep.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if fixed.iter().any(|&(q, b)| (i >> q & 1 == 1) != b) {
                continue;
            }
            let mut j = 0;
            for (k, &q) in keep.iter().enumerate() {
                j |= (i >> q & 1) << k;
            }
            out[j] = *a;
        }
        let p: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        if p <= 1e-300 {
            return (0.0, None);
        }
        let norm = p.sqrt();
        (p, Some(DenseState { n: keep.len(), amps: out.into_iter().map(|a| a / norm).collect() }))
    }

    /// Appends qubits in `|0⟩` above the current register.
    pub fn extend(&self, extra: usize) -> DenseState {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (self.n + extra)];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        DenseState { n: self.n + extra, amps }
    }
}

/// A Hermitian unitary on a list of qubits; local index bit `j` is
/// `qubits[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    qubits: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

fn pauli_matrix(p: Pauli) -> DMatrix<Complex64> {
    let (o, z, i) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::i());
    match p {
        Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

impl Operator {
    pub fn new(qubits: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << qubits.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidSpec(format!(
                "{}×{} matrix on {} qubits",
                matrix.nrows(),
                matrix.ncols(),
                qubits.len()
            )));
        }
        let mut seen = qubits.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != qubits.len() {
            return Err(Error::InvalidSpec("repeated qubit".into()));
        }
        let adj = matrix.adjoint();
        if (&matrix - &adj).norm() > TOL {
            return Err(Error::InvalidSpec("operator is not Hermitian".into()));
        }
        if (&matrix * &adj - DMatrix::identity(dim, dim)).norm() > TOL {
            return Err(Error::InvalidSpec("operator is not unitary".into()));
        }
        Ok(Operator { qubits, matrix })
    }

    /// Dense form of a Pauli product on its support.
    pub fn pauli(p: &PauliString) -> Self {
        let qubits: Vec<usize> = p.terms().iter().map(|t| t.0).collect();
        // kron puts its left factor on the high bit, so build from the top
        let mut m = DMatrix::from_element(1, 1, Complex64::new(p.sign() as f64, 0.0));
        for &(_, l) in p.terms().iter().rev() {
            m = m.kronecker(&pauli_matrix(l));
        }
        Operator { qubits, matrix: m }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// One outcome of a two-valued measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub state: Option<DenseState>,
}

/// Direct measurement of `Π ops` (disjoint supports): branch `k` is the
/// normalised `(I + (−1)^k O)/2 |ψ⟩`.
pub fn projective_measure(ops: &[&Operator], state: &DenseState) -> [Branch; 2] {
    let mut o = state.clone();
    for op in ops {
        o.apply(op);
    }
    let branch = |sign: f64| {
        let amps: Vec<Complex64> = state.amps.iter().zip(&o.amps).map(|(a, b)| (a + b * sign) / 2.0).collect();
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let st = (p > 1e-300).then(|| DenseState { n: state.n, amps: amps.iter().map(|a| a / p.sqrt()).collect() });
        Branch { probability: p, state: st }
    };
    [branch(1.0), branch(-1.0)]
}

/// Result of a teleported measurement: the joint law of the two Bell-half
/// bits and the system state for each XOR value.
#[derive(Clone, Debug, PartialEq)]
pub struct Teleported {
    /// `joint[m1][m2]`.
    pub joint: [[f64; 2]; 2],
    pub branches: [Branch; 2],
    /// System state for every individual outcome pair, `None` when that
    /// pair has probability zero.
    pub by_outcome: [[Option<DenseState>; 2]; 2],
}

impl Teleported {
    pub fn xor_probability(&self, x: usize) -> f64 {
        self.joint[0][x] + self.joint[1][1 - x]
    }
}

fn check_disjoint(o_a: &Operator, o_b: &Operator, n: usize) -> Result<()> {
    if o_a.qubits.iter().chain(&o_b.qubits).any(|&q| q >= n) {
        return Err(Error::InvalidSpec(format!("operator acts outside the {n} system qubits")));
    }
    if o_a.qubits.iter().any(|q| o_b.qubits.contains(q)) {
        return Err(Error::InvalidSpec("O_A and O_B overlap".into()));
    }
    Ok(())
}

/// Measures `O_A ⊗ O_B` through a Bell pair on two fresh qubits.
pub fn teleported_measure(o_a: &Operator, o_b: &Operator, state: &DenseState) -> Result<Teleported> {
    teleported_measure_with(o_a, o_b, state, None)
}

/// As [`teleported_measure`] with the pair prepared as `(I ⊗ U)|Φ⁺⟩` and
/// `U†` applied to the second half before its controlled gate.
pub fn teleported_measure_with(
    o_a: &Operator,
    o_b: &Operator,
    state: &DenseState,
    u: Option<&DMatrix<Complex64>>,
) -> Result<Teleported> {
    let n = state.n;
    check_disjoint(o_a, o_b, n)?;
    let (q1, q2) = (n, n + 1);
    let mut s = state.extend(2);
    s.h(q1);
    s.cnot(q1, q2);
    if let Some(u) = u {
        if u.nrows() != 2 || u.ncols() != 2 || (u * u.adjoint() - DMatrix::identity(2, 2)).norm() > TOL {
            return Err(Error::InvalidSpec("U must be a 2×2 unitary".into()));
        }
        let gate = |m: DMatrix<Complex64>| Operator { qubits: vec![q2], matrix: m };
        s.apply(&gate(u.clone()));
        s.apply(&gate(u.adjoint()));
    }
    s.apply_controlled(q1, o_a);
    s.apply_controlled(q2, o_b);
    s.h(q1);
    s.h(q2);
    let mut joint = [[0.0; 2]; 2];
    let mut by_outcome: [[Option<DenseState>; 2]; 2] = Default::default();
    for m1 in 0..2 {
        for m2 in 0..2 {
            let (p, st) = s.project_out(&[(q1, m1 == 1), (q2, m2 == 1)]);
            joint[m1][m2] = p;
            by_outcome[m1][m2] = st;
        }
    }
    let branch = |x: usize| {
        let p = joint[0][x] + joint[1][1 - x];
        let st = by_outcome[0][x].clone().or_else(|| by_outcome[1][1 - x].clone());
        Branch { probability: p, state: st }
    };
    let branches = [branch(0), branch(1)];
    Ok(Teleported { joint, branches, by_outcome })
}
