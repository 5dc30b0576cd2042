//! Aaronson–Gottesman stabilizer tableau with destabilizers, used to compute
//! the noiseless reference record of a circuit.

use crate::circuit::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::frame::nondeterministic_detectors;
use crate::pauli::{Pauli, PauliString};

/// Rows `0..n` are destabilizers, `n..2n` stabilizers, row `2n` is scratch.
#[derive(Clone, Debug)]
pub struct Tableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

#[inline]
fn bit(v: &[u64], q: usize) -> bool {
    (v[q / 64] >> (q % 64)) & 1 == 1
}

impl Tableau {
    /// The state |0…0⟩.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = Tableau { n, words, x: vec![0; rows * words], z: vec![0; rows * words], r: vec![false; rows] };
        for q in 0..n {
            t.x[q * words + q / 64] |= 1 << (q % 64);
            t.z[(n + q) * words + q / 64] |= 1 << (q % 64);
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    fn xr(&self, row: usize) -> &[u64] {
        &self.x[row * self.words..(row + 1) * self.words]
    }

    fn zr(&self, row: usize) -> &[u64] {
        &self.z[row * self.words..(row + 1) * self.words]
    }

    fn row_pauli(&self, row: usize) -> PauliString {
        let mut terms = Vec::new();
        for q in 0..self.n {
            if let Some(p) = Pauli::from_bits(bit(self.xr(row), q), bit(self.zr(row), q)) {
                terms.push((q, p));
            }
        }
        let s = PauliString::from_terms(self.n, &terms);
        if self.r[row] {
            s.negated()
        } else {
            s
        }
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        (self.n..2 * self.n).map(|r| self.row_pauli(r)).collect()
    }

    pub fn destabilizers(&self) -> Vec<PauliString> {
        (0..self.n).map(|r| self.row_pauli(r)).collect()
    }

    pub fn h(&mut self, a: usize) {
        let (w, m) = (a / 64, 1u64 << (a % 64));
        for row in 0..2 * self.n {
            let i = row * self.words + w;
            let (xa, za) = (self.x[i] & m != 0, self.z[i] & m != 0);
            self.r[row] ^= xa && za;
            if xa != za {
                self.x[i] ^= m;
                self.z[i] ^= m;
            }
        }
    }

    pub fn cnot(&mut self, a: usize, b: usize) {
        let (wa, ma) = (a / 64, 1u64 << (a % 64));
        let (wb, mb) = (b / 64, 1u64 << (b % 64));
        for row in 0..2 * self.n {
            let base = row * self.words;
            let xa = self.x[base + wa] & ma != 0;
            let za = self.z[base + wa] & ma != 0;
            let xb = self.x[base + wb] & mb != 0;
            let zb = self.z[base + wb] & mb != 0;
            self.r[row] ^= xa && zb && (xb == za);
            if xa {
                self.x[base + wb] ^= mb;
            }
            if zb {
                self.z[base + wa] ^= ma;
            }
        }
    }

    /// Applies the Pauli gate `p` on qubit `a`.
    pub fn pauli(&mut self, a: usize, p: Pauli) {
        let (px, pz) = p.bits();
        for row in 0..2 * self.n {
            let flip = (pz && bit(self.xr(row), a)) ^ (px && bit(self.zr(row), a));
            self.r[row] ^= flip;
        }
    }

    /// Row `h` ← row `h` · row `i`, with the sign computed from the phase sum.
    fn rowsum(&mut self, h: usize, i: usize) {
        let mut pos = 0u32;
        let mut neg = 0u32;
        for w in 0..self.words {
            let x1 = self.x[i * self.words + w];
            let z1 = self.z[i * self.words + w];
            let x2 = self.x[h * self.words + w];
            let z2 = self.z[h * self.words + w];
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            pos += (y1 & z2 & !x2 | xo & z2 & x2 | zo & x2 & !z2).count_ones();
            neg += (y1 & x2 & !z2 | xo & z2 & !x2 | zo & x2 & z2).count_ones();
        }
        let total = (2 * self.r[h] as u32 + 2 * self.r[i] as u32 + pos + 4 * self.words as u32 * 64 - neg) % 4;
        self.r[h] = total == 2;
        for w in 0..self.words {
            self.x[h * self.words + w] ^= self.x[i * self.words + w];
            self.z[h * self.words + w] ^= self.z[i * self.words + w];
        }
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let (d, s, w) = (dst * self.words, src * self.words, self.words);
        self.x.copy_within(s..s + w, d);
        self.z.copy_within(s..s + w, d);
        self.r[dst] = self.r[src];
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.x[row * w..(row + 1) * w].fill(0);
        self.z[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    /// Measures Z on `a`. Returns `(outcome, was_random)`; a random outcome
    /// takes the value `choice`.
    pub fn measure_z(&mut self, a: usize, choice: bool) -> (bool, bool) {
        let n = self.n;
        let pivot = (n..2 * n).find(|&row| bit(self.xr(row), a));
        match pivot {
            Some(p) => {
                for row in 0..2 * n {
                    if row != p && bit(self.xr(row), a) {
                        self.rowsum(row, p);
                    }
                }
                self.copy_row(p - n, p);
                self.clear_row(p);
                self.z[p * self.words + a / 64] |= 1 << (a % 64);
                self.r[p] = choice;
                (choice, true)
            }
            None => {
                let s = 2 * n;
                self.clear_row(s);
                for i in 0..n {
                    if bit(self.xr(i), a) {
                        self.rowsum(s, i + n);
                    }
                }
                (self.r[s], false)
            }
        }
    }

    pub fn measure_x(&mut self, a: usize, choice: bool) -> (bool, bool) {
        self.h(a);
        let out = self.measure_z(a, choice);
        self.h(a);
        out
    }

    pub fn reset(&mut self, a: usize) {
        let (m, _) = self.measure_z(a, false);
        if m {
            self.pauli(a, Pauli::X);
        }
    }

    pub fn bell_prep(&mut self, a: usize, b: usize) {
        self.reset(a);
        self.reset(b);
        self.h(a);
        self.cnot(a, b);
    }
}

/// Noiseless measurement record of a circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceRecord {
    pub measurements: Vec<bool>,
    /// `true` where the outcome was random (its value was fixed to 0).
    pub random: Vec<bool>,
    pub detectors: Vec<bool>,
    pub observables: Vec<bool>,
}

/// Runs `c` noiselessly. `inject` optionally applies Paulis right before
/// the instruction with the given index (used by propagation checks);
/// random outcomes take values from `choices` (cycled), or 0.
pub fn simulate_tableau(
    c: &Circuit,
    inject: Option<(usize, &PauliString)>,
    choices: &[bool],
) -> ReferenceRecord {
    let mut t = Tableau::new(c.num_qubits());
    let mut meas = Vec::with_capacity(c.num_measurements());
    let mut random = Vec::with_capacity(c.num_measurements());
    let mut k = 0usize;
    let mut next_choice = || {
        let v = if choices.is_empty() { false } else { choices[k % choices.len()] };
        k += 1;
        v
    };
    for (idx, ins) in c.instructions().iter().enumerate() {
        if let Some((at, e)) = inject {
            if at == idx {
                for &(q, p) in e.terms() {
                    t.pauli(q, p);
                }
            }
        }
        match ins {
            Instruction::H(qs) => qs.iter().for_each(|&q| t.h(q)),
            Instruction::Cnot(qs) => qs.chunks(2).for_each(|p| t.cnot(p[0], p[1])),
            Instruction::R(qs) => qs.iter().for_each(|&q| t.reset(q)),
            Instruction::BellPrep(qs) => qs.chunks(2).for_each(|p| t.bell_prep(p[0], p[1])),
            Instruction::Mz(qs) | Instruction::Mx(qs) => {
                let x = matches!(ins, Instruction::Mx(_));
                for &q in qs {
                    let ch = next_choice();
                    let (m, r) = if x { t.measure_x(q, ch) } else { t.measure_z(q, ch) };
                    meas.push(m);
                    random.push(r);
                }
            }
            _ => {}
        }
    }
    let parity = |ms: &[usize]| ms.iter().fold(false, |acc, &m| acc ^ meas[m]);
    let detectors = c.detector_measurements().iter().map(|ms| parity(ms)).collect();
    let observables = c.observable_measurements().iter().map(|ms| parity(ms)).collect();
    ReferenceRecord { measurements: meas, random, detectors, observables }
}

/// Noiseless reference record. Fails if any detector or observable is not
/// deterministic.
pub fn tableau_reference(c: &Circuit) -> Result<ReferenceRecord> {
    let bad = nondeterministic_detectors(c);
    if !bad.is_empty() {
        return Err(Error::NonDeterministic(bad));
    }
    Ok(simulate_tableau(c, None, &[]))
}
