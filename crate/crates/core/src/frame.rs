//! Pauli frames: forward propagation of a single error configuration and the
//! backward sensitivity pass shared by the DEM builder and the determinism
//! check.

use crate::circuit::{Circuit, Instruction};
use crate::pauli::{Pauli, PauliString};

/// Per-qubit X and Z error bits for one shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl PauliFrame {
    pub fn new(n: usize) -> Self {
        PauliFrame { x: vec![false; n], z: vec![false; n] }
    }

    pub fn from_pauli(p: &PauliString) -> Self {
        let mut f = PauliFrame::new(p.num_qubits());
        f.xor_pauli(p);
        f
    }

    pub fn xor_pauli(&mut self, p: &PauliString) {
        for &(q, l) in p.terms() {
            let (x, z) = l.bits();
            self.x[q] ^= x;
            self.z[q] ^= z;
        }
    }

    pub fn is_clear(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    pub fn to_pauli(&self) -> PauliString {
        let terms: Vec<(usize, Pauli)> = (0..self.x.len())
            .filter_map(|q| Pauli::from_bits(self.x[q], self.z[q]).map(|p| (q, p)))
            .collect();
        PauliString::from_terms(self.x.len(), &terms)
    }

    /// Pushes the frame through one instruction; measurement flips are
    /// appended to `flips`. Noise annotations are ignored.
    pub fn apply(&mut self, ins: &Instruction, flips: &mut Vec<bool>) {
        match ins {
            Instruction::H(qs) => {
                for &q in qs {
                    std::mem::swap(&mut self.x[q], &mut self.z[q]);
                }
            }
            Instruction::Cnot(qs) => {
                for p in qs.chunks(2) {
                    let (c, t) = (p[0], p[1]);
                    self.x[t] ^= self.x[c];
                    self.z[c] ^= self.z[t];
                }
            }
            Instruction::R(qs) | Instruction::BellPrep(qs) => {
                for &q in qs {
                    self.x[q] = false;
                    self.z[q] = false;
                }
            }
            Instruction::Mz(qs) => flips.extend(qs.iter().map(|&q| self.x[q])),
            Instruction::Mx(qs) => flips.extend(qs.iter().map(|&q| self.z[q])),
            _ => {}
        }
    }
}

pub use crate::dem::Symptom;

/// Injects `e` right before instruction `at` and propagates it to the end
/// of the circuit, returning the flipped detectors and observables.
pub fn propagate_error(c: &Circuit, at: usize, e: &PauliString) -> Symptom {
    let mut frame = PauliFrame::new(c.num_qubits());
    frame.xor_pauli(e);
    let mut flips = Vec::new();
    let mut before = 0usize;
    for (i, ins) in c.instructions().iter().enumerate() {
        if i < at {
            if let Instruction::Mz(q) | Instruction::Mx(q) = ins {
                before += q.len();
            }
            continue;
        }
        frame.apply(ins, &mut flips);
    }
    let flipped = |m: usize| m >= before && flips[m - before];
    let mut s = Symptom::default();
    for (d, ms) in c.detector_measurements().iter().enumerate() {
        if ms.iter().filter(|&&m| flipped(m)).count() % 2 == 1 {
            s.detectors.push(d as u32);
        }
    }
    for (o, ms) in c.observable_measurements().iter().enumerate() {
        if ms.iter().filter(|&&m| flipped(m)).count() % 2 == 1 {
            s.observables |= 1 << o;
        }
    }
    s
}

/// Symmetric difference of two sorted id lists.
pub(crate) fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn xor_into(dst: &mut Vec<u32>, src: &[u32]) {
    if !src.is_empty() {
        *dst = xor_sorted(dst, src);
    }
}

/// Backward sensitivity state: for each qubit, the detector/observable ids
/// (observables numbered after detectors) flipped by an X or Z error at the
/// current point of the backward sweep.
pub struct Sensitivity {
    pub x: Vec<Vec<u32>>,
    pub z: Vec<Vec<u32>>,
}

impl Sensitivity {
    /// Ids flipped by the Pauli with bits `(x, z)` on qubit `q`.
    pub fn symptom_of(&self, q: usize, x: bool, z: bool) -> Vec<u32> {
        match (x, z) {
            (false, false) => Vec::new(),
            (true, false) => self.x[q].clone(),
            (false, true) => self.z[q].clone(),
            (true, true) => xor_sorted(&self.x[q], &self.z[q]),
        }
    }
}

/// Sweeps the circuit backwards, calling `on_noise(instruction_index,
/// instruction, sensitivity)` at every noise annotation. Returns the ids of
/// detectors/observables found to be non-deterministic.
pub fn backward_sweep<F>(c: &Circuit, mut on_noise: F) -> Vec<u32>
where
    F: FnMut(usize, &Instruction, &Sensitivity),
{
    let n = c.num_qubits();
    let consumers = c.measurement_consumers();
    let mut s = Sensitivity { x: vec![Vec::new(); n], z: vec![Vec::new(); n] };
    let mut bad: Vec<u32> = Vec::new();
    let mut m = c.num_measurements();
    for (idx, ins) in c.instructions().iter().enumerate().rev() {
        match ins {
            Instruction::Noise { .. } => on_noise(idx, ins, &s),
            Instruction::H(qs) => {
                for &q in qs {
                    let (a, b) = (std::mem::take(&mut s.x[q]), std::mem::take(&mut s.z[q]));
                    s.x[q] = b;
                    s.z[q] = a;
                }
            }
            Instruction::Cnot(qs) => {
                for p in qs.chunks(2) {
                    let (ct, tt) = (p[0], p[1]);
                    let xt = s.x[tt].clone();
                    xor_into(&mut s.x[ct], &xt);
                    let zc = s.z[ct].clone();
                    xor_into(&mut s.z[tt], &zc);
                }
            }
            Instruction::R(qs) => {
                for &q in qs {
                    bad.extend_from_slice(&s.z[q]);
                    s.x[q].clear();
                    s.z[q].clear();
                }
            }
            Instruction::BellPrep(qs) => {
                for p in qs.chunks(2) {
                    let (a, b) = (p[0], p[1]);
                    bad.extend(xor_sorted(&s.x[a], &s.x[b]));
                    bad.extend(xor_sorted(&s.z[a], &s.z[b]));
                    for q in [a, b] {
                        s.x[q].clear();
                        s.z[q].clear();
                    }
                }
            }
            Instruction::Mz(qs) => {
                m -= qs.len();
                for (k, &q) in qs.iter().enumerate() {
                    bad.extend_from_slice(&s.z[q]);
                    xor_into(&mut s.x[q], &consumers[m + k]);
                }
            }
            Instruction::Mx(qs) => {
                m -= qs.len();
                for (k, &q) in qs.iter().enumerate() {
                    bad.extend_from_slice(&s.x[q]);
                    xor_into(&mut s.z[q], &consumers[m + k]);
                }
            }
            _ => {}
        }
    }
    // qubits start in |0⟩
    for q in 0..n {
        bad.extend_from_slice(&s.z[q]);
    }
    bad.sort_unstable();
    bad.dedup();
    bad
}

/// Detectors whose noiseless value is not fixed. Observables that are not
/// deterministic are reported with index `num_detectors + k`.
pub fn nondeterministic_detectors(c: &Circuit) -> Vec<usize> {
    backward_sweep(c, |_, _, _| {}).into_iter().map(|d| d as usize).collect()
}
