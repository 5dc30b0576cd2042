//! Tick-structured circuit representation with noise annotations.

mod text;

pub use text::{format_circuit, parse_circuit, CIRCUIT_HEADER};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use serde::{Deserialize, Serialize};

/// A noise channel and its probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseChannel {
    /// X, Y, Z each with probability p/3.
    Depol1(f64),
    /// The 15 non-identity two-qubit Paulis each with probability p/15.
    Depol2(f64),
    /// X with probability p.
    ErrX(f64),
    /// Two-qubit depolarizing noise acting on a freshly prepared Bell pair.
    BellDepol2(f64),
}

impl NoiseChannel {
    pub fn probability(self) -> f64 {
        match self {
            NoiseChannel::Depol1(p)
            | NoiseChannel::Depol2(p)
            | NoiseChannel::ErrX(p)
            | NoiseChannel::BellDepol2(p) => p,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            NoiseChannel::Depol1(_) | NoiseChannel::ErrX(_) => 1,
            NoiseChannel::Depol2(_) | NoiseChannel::BellDepol2(_) => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseChannel::Depol1(_) => "DEPOL1",
            NoiseChannel::Depol2(_) => "DEPOL2",
            NoiseChannel::ErrX(_) => "ERRX",
            NoiseChannel::BellDepol2(_) => "BELL_DEPOL2",
        }
    }

    pub fn from_name(name: &str, p: f64) -> Option<NoiseChannel> {
        Some(match name {
            "DEPOL1" => NoiseChannel::Depol1(p),
            "DEPOL2" => NoiseChannel::Depol2(p),
            "ERRX" => NoiseChannel::ErrX(p),
            "BELL_DEPOL2" => NoiseChannel::BellDepol2(p),
            _ => return None,
        })
    }

    pub fn check(self) -> Result<Self> {
        let p = self.probability();
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(self)
    }
}

/// Letter pair for the k-th term (1..=15) of a two-qubit channel.
pub(crate) fn two_qubit_term(k: usize) -> (Option<Pauli>, Option<Pauli>) {
    const L: [Option<Pauli>; 4] = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];
    (L[k / 4], L[k % 4])
}

/// Expands a channel into its Pauli terms on local qubits `0..arity`.
pub fn channel_pauli_terms(c: NoiseChannel) -> Result<Vec<(PauliString, f64)>> {
    let c = c.check()?;
    let p = c.probability();
    Ok(match c {
        NoiseChannel::Depol1(_) => [Pauli::X, Pauli::Y, Pauli::Z]
            .iter()
            .map(|&l| (PauliString::single(1, 0, l), p / 3.0))
            .collect(),
        NoiseChannel::ErrX(_) => vec![(PauliString::single(1, 0, Pauli::X), p)],
        NoiseChannel::Depol2(_) | NoiseChannel::BellDepol2(_) => (1..16)
            .map(|k| {
                let (a, b) = two_qubit_term(k);
                let mut t = Vec::new();
                if let Some(a) = a {
                    t.push((0, a));
                }
                if let Some(b) = b {
                    t.push((1, b));
                }
                (PauliString::from_terms(2, &t), p / 15.0)
            })
            .collect(),
    })
}

/// Representative of `term` modulo the Bell stabilizers {XX, ZZ}, chosen to
/// act only on the first qubit. `None` when the term is itself a stabilizer.
pub fn bell_reduce(term: &PauliString) -> Option<Pauli> {
    let (xa, za) = term.bits(0);
    let (xb, zb) = term.bits(1);
    Pauli::from_bits(xa ^ xb, za ^ zb)
}

/// Reduced view of `BELL_DEPOL2(p)`: X⊗I, Z⊗I, Y⊗I each with mass 4p/15.
pub fn bell_reduced_terms(p: f64) -> Result<Vec<(PauliString, f64)>> {
    let raw = channel_pauli_terms(NoiseChannel::BellDepol2(p))?;
    let order = [Pauli::X, Pauli::Z, Pauli::Y];
    let mut mass = [0.0f64; 3];
    for (t, q) in &raw {
        if let Some(r) = bell_reduce(t) {
            let i = order.iter().position(|&o| o == r).unwrap();
            mass[i] += q;
        }
    }
    Ok(order
        .iter()
        .zip(mass)
        .map(|(&l, m)| (PauliString::single(2, 0, l), m))
        .collect())
}

/// Optional space-time coordinates attached to a detector.
pub type Coords = Vec<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    H(Vec<usize>),
    /// Flat list of (control, target) pairs.
    Cnot(Vec<usize>),
    R(Vec<usize>),
    Mz(Vec<usize>),
    Mx(Vec<usize>),
    /// Flat list of qubit pairs; each pair is reset and entangled into
    /// (|00⟩+|11⟩)/√2 within one tick.
    BellPrep(Vec<usize>),
    Detector { coords: Coords, measurements: Vec<usize> },
    ObservableInclude { index: usize, measurements: Vec<usize> },
    Tick,
    Noise { channel: NoiseChannel, targets: Vec<usize> },
}

impl Instruction {
    pub fn name(&self) -> &'static str {
        match self {
            Instruction::H(_) => "H",
            Instruction::Cnot(_) => "CNOT",
            Instruction::R(_) => "R",
            Instruction::Mz(_) => "MZ",
            Instruction::Mx(_) => "MX",
            Instruction::BellPrep(_) => "BELL_PREP",
            Instruction::Detector { .. } => "DETECTOR",
            Instruction::ObservableInclude { .. } => "OBSERVABLE_INCLUDE",
            Instruction::Tick => "TICK",
            Instruction::Noise { channel, .. } => channel.name(),
        }
    }

    /// Qubits touched by a non-noise operation.
    pub fn gate_qubits(&self) -> &[usize] {
        match self {
            Instruction::H(q)
            | Instruction::Cnot(q)
            | Instruction::R(q)
            | Instruction::Mz(q)
            | Instruction::Mx(q)
            | Instruction::BellPrep(q) => q,
            _ => &[],
        }
    }
}

/// Ordered instruction list. Measurement, detector and observable counts are
/// kept in sync by [`Circuit::push`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    instructions: Vec<Instruction>,
    num_qubits: usize,
    num_measurements: usize,
    num_detectors: usize,
    num_observables: usize,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_measurements(&self) -> usize {
        self.num_measurements
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_observables(&self) -> usize {
        self.num_observables
    }

    /// Appends an instruction and returns the index of the first measurement
    /// it records, if any.
    pub fn push(&mut self, ins: Instruction) -> usize {
        let first = self.num_measurements;
        let touched: &[usize] = match &ins {
            Instruction::Noise { targets, .. } => targets,
            other => other.gate_qubits(),
        };
        if let Some(&m) = touched.iter().max() {
            self.num_qubits = self.num_qubits.max(m + 1);
        }
        match &ins {
            Instruction::Mz(q) | Instruction::Mx(q) => self.num_measurements += q.len(),
            Instruction::Detector { .. } => self.num_detectors += 1,
            Instruction::ObservableInclude { index, .. } => {
                self.num_observables = self.num_observables.max(index + 1)
            }
            _ => {}
        }
        self.instructions.push(ins);
        first
    }

    /// Declares qubits that may never be touched (keeps `num_qubits` honest).
    pub fn reserve_qubits(&mut self, n: usize) {
        self.num_qubits = self.num_qubits.max(n);
    }

    pub fn tick(&mut self) {
        self.push(Instruction::Tick);
    }

    pub fn noise(&mut self, channel: NoiseChannel, targets: Vec<usize>) {
        if channel.probability() > 0.0 && !targets.is_empty() {
            self.push(Instruction::Noise { channel, targets });
        }
    }

    pub fn num_ticks(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Tick)).count()
    }

    /// Copy of the circuit with every noise annotation removed.
    pub fn without_noise(&self) -> Circuit {
        let mut c = Circuit::new();
        c.reserve_qubits(self.num_qubits);
        for ins in &self.instructions {
            if !matches!(ins, Instruction::Noise { .. }) {
                c.push(ins.clone());
            }
        }
        c
    }

    /// Measurement indices feeding each detector, in detector order.
    pub fn detector_measurements(&self) -> Vec<&[usize]> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Detector { measurements, .. } => Some(measurements.as_slice()),
                _ => None,
            })
            .collect()
    }

    pub fn detector_coords(&self) -> Vec<&[f64]> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Detector { coords, .. } => Some(coords.as_slice()),
                _ => None,
            })
            .collect()
    }

    /// Measurement indices feeding each observable.
    pub fn observable_measurements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_observables];
        for ins in &self.instructions {
            if let Instruction::ObservableInclude { index, measurements } = ins {
                out[*index].extend_from_slice(measurements);
            }
        }
        out
    }

    /// For every measurement, the detectors and observables that include it.
    /// Observables are numbered after detectors.
    pub(crate) fn measurement_consumers(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.num_measurements];
        let mut det = 0u32;
        for ins in &self.instructions {
            match ins {
                Instruction::Detector { measurements, .. } => {
                    for &m in measurements {
                        toggle(&mut out[m], det);
                    }
                    det += 1;
                }
                Instruction::ObservableInclude { index, measurements } => {
                    let id = self.num_detectors as u32 + *index as u32;
                    for &m in measurements {
                        toggle(&mut out[m], id);
                    }
                }
                _ => {}
            }
        }
        for v in &mut out {
            v.sort_unstable();
        }
        out
    }
}

fn toggle(v: &mut Vec<u32>, x: u32) {
    if let Some(i) = v.iter().position(|&y| y == x) {
        v.swap_remove(i);
    } else {
        v.push(x);
    }
}

/// A violated circuit invariant and the instruction where it was found.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub instruction: usize,
    pub tick: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "instruction {} (tick {}): {}", self.instruction, self.tick, self.message)
    }
}

/// Checks tick exclusivity, operand shapes, probabilities and detector
/// references. Returns the first violation.
pub fn validate_circuit(c: &Circuit) -> std::result::Result<(), Diagnostic> {
    let mut busy = vec![usize::MAX; c.num_qubits()];
    let mut tick = 0usize;
    let mut measured = 0usize;
    for (idx, ins) in c.instructions().iter().enumerate() {
        let fail = |message: String| Err(Diagnostic { instruction: idx, tick, message });
        match ins {
            Instruction::Tick => {
                tick += 1;
                continue;
            }
            Instruction::Detector { measurements, .. }
            | Instruction::ObservableInclude { measurements, .. } => {
                if let Some(&m) = measurements.iter().find(|&&m| m >= measured) {
                    return fail(format!(
                        "{} references measurement {m} but only {measured} have been recorded",
                        ins.name()
                    ));
                }
                continue;
            }
            Instruction::Noise { channel, targets } => {
                if let Err(e) = channel.check() {
                    return fail(e.to_string());
                }
                if targets.len() % channel.arity() != 0 {
                    return fail(format!("{} needs targets in groups of {}", ins.name(), channel.arity()));
                }
                if channel.arity() == 2 {
                    for pair in targets.chunks(2) {
                        if pair[0] == pair[1] {
                            return fail(format!("{} pair acts twice on qubit {}", ins.name(), pair[0]));
                        }
                    }
                }
                continue;
            }
            Instruction::Cnot(q) | Instruction::BellPrep(q) => {
                if q.len() % 2 != 0 {
                    return fail(format!("{} needs an even number of targets", ins.name()));
                }
                for pair in q.chunks(2) {
                    if pair[0] == pair[1] {
                        return fail(format!("{} on identical qubits {}", ins.name(), pair[0]));
                    }
                }
            }
            _ => {}
        }
        for &q in ins.gate_qubits() {
            if busy[q] == tick {
                return fail(format!("qubit {q} used by more than one operation in tick {tick}"));
            }
            busy[q] = tick;
        }
        if let Instruction::Mz(q) | Instruction::Mx(q) = ins {
            measured += q.len();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_masses() {
        let t = channel_pauli_terms(NoiseChannel::Depol1(0.3)).unwrap();
        assert_eq!(t.len(), 3);
        for (_, p) in &t {
            assert!((p - 0.1).abs() < 1e-15);
        }
        let t = channel_pauli_terms(NoiseChannel::Depol2(0.15)).unwrap();
        assert_eq!(t.len(), 15);
        for (_, p) in &t {
            assert!((p - 0.01).abs() < 1e-15);
        }
        let r = bell_reduced_terms(0.15).unwrap();
        let names: Vec<String> = r.iter().map(|(s, _)| s.to_string()).collect();
        assert_eq!(names, ["+XI", "+ZI", "+YI"]);
        for (_, p) in &r {
            assert!((p - 0.04).abs() < 1e-15);
        }
    }

    #[test]
    fn probability_range() {
        assert!(channel_pauli_terms(NoiseChannel::ErrX(1.0)).is_err());
        assert!(channel_pauli_terms(NoiseChannel::ErrX(-0.1)).is_err());
        assert!(channel_pauli_terms(NoiseChannel::ErrX(0.0)).is_ok());
    }

    #[test]
    fn validation_catches_tick_conflict() {
        let mut c = Circuit::new();
        c.push(Instruction::R(vec![0, 1]));
        c.tick();
        c.push(Instruction::H(vec![0]));
        c.push(Instruction::Cnot(vec![0, 1]));
        let d = validate_circuit(&c).unwrap_err();
        assert_eq!(d.instruction, 3);
        assert_eq!(d.tick, 1);
        assert!(d.message.contains("tick 1"));
    }

    #[test]
    fn validation_catches_future_reference() {
        let mut c = Circuit::new();
        c.push(Instruction::Mz(vec![0]));
        c.push(Instruction::Detector { coords: vec![], measurements: vec![1] });
        let d = validate_circuit(&c).unwrap_err();
        assert_eq!(d.instruction, 1);
        assert!(d.message.contains("measurement 1"));
    }
}
