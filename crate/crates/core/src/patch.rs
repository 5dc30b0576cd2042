//! Memory-experiment circuits for rotated surface-code patches: the plain
//! patch, the distributed patch with a two-column Bell seam, the naive
//! single-column seam and the wide multi-seam patch.
//!
//! Geometry: data qubit `(r, c)` sits in row `r`, column `c`. Plaquette
//! `(i, j)` has corners `(i, j)`, `(i, j+1)`, `(i+1, j)`, `(i+1, j+1)` that
//! fall inside the patch, and is X-type when `i + j` is even. Top and bottom
//! boundaries carry weight-2 X checks, left and right weight-2 Z checks, so
//! X_L runs down a column and Z_L along a row.
//!
//! CNOT order over the four steps (corner names NW, NE, SW, SE):
//!
//! | check | step 1 | step 2 | step 3 | step 4 |
//! |-------|--------|--------|--------|--------|
//! | X     | NW     | NE     | SW     | SE     |
//! | Z     | NW     | SW     | NE     | SE     |
//!
//! Seam plaquettes keep this order; each corner is handled by the Bell half
//! living on the corner's processor. Seam qubit `(r, s)` belongs to the left
//! processor when `r + s` is even, which makes every X-type Bell half that
//! touches three data qubits finish on two qubits of one row.

use crate::circuit::{Circuit, Instruction, NoiseChannel};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Plain,
    Seam,
    NaiveSeam,
    Multiseam,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Seam => "seam",
            Variant::NaiveSeam => "naive_seam",
            Variant::Multiseam => "multiseam",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "plain" => Variant::Plain,
            "seam" => Variant::Seam,
            "naive_seam" => Variant::NaiveSeam,
            "multiseam" => Variant::Multiseam,
            _ => return Err(Error::InvalidSpec(format!("unknown variant `{s}`"))),
        })
    }
}

/// Memory basis: `Z` stores |0⟩ (sensitive to X_L errors), `X` stores |+⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Basis::Z),
            "X" | "x" => Ok(Basis::X),
            _ => Err(Error::InvalidSpec(format!("unknown basis `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub variant: Variant,
    pub d: usize,
    /// Extraction rounds; 3d when absent.
    #[serde(default)]
    pub rounds: Option<usize>,
    pub basis: Basis,
    pub p: f64,
    #[serde(default)]
    pub p_bell: f64,
    /// Data column of the seam (seam variant) or plaquette column of the
    /// Bell column (naive variant). Defaults to the centre.
    #[serde(default)]
    pub seam_column: Option<usize>,
}

impl PatchSpec {
    pub fn new(variant: Variant, d: usize, basis: Basis, p: f64, p_bell: f64) -> Self {
        PatchSpec { variant, d, rounds: None, basis, p, p_bell, seam_column: None }
    }

    pub fn rounds(&self) -> usize {
        self.rounds.unwrap_or(3 * self.d)
    }

    fn check(&self) -> Result<()> {
        if self.d < 3 || self.d % 2 == 0 {
            return Err(Error::InvalidSpec(format!("distance must be odd and ≥ 3, got {}", self.d)));
        }
        if self.rounds() == 0 {
            return Err(Error::InvalidSpec("rounds must be ≥ 1".into()));
        }
        for (name, p) in [("p", self.p), ("p_bell", self.p_bell)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidSpec(format!("{name}={p} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Effective distance of the naive single-column seam.
pub fn naive_seam_effective_distance(d: usize) -> usize {
    2 * ((d + 1) / 2).div_ceil(2) - 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    X,
    Z,
}

/// How a plaquette's ancilla is realised.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ancilla {
    Single(usize),
    /// Two Bell halves; `owner[k]` says which half performs step `k`.
    Bell { halves: [usize; 2], owner: [Option<usize>; 4] },
}

#[derive(Clone, Debug)]
pub struct Plaquette {
    pub i: isize,
    pub j: isize,
    pub kind: CheckKind,
    /// Data qubit handled at each of the four CNOT steps.
    pub steps: [Option<usize>; 4],
    pub ancilla: Ancilla,
}

impl Plaquette {
    pub fn data(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().flatten().copied()
    }

    pub fn is_bell(&self) -> bool {
        matches!(self.ancilla, Ancilla::Bell { .. })
    }

    fn measured_qubits(&self) -> Vec<usize> {
        match &self.ancilla {
            Ancilla::Single(a) => vec![*a],
            Ancilla::Bell { halves, .. } => halves.to_vec(),
        }
    }
}

/// What a detector compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorInfo {
    pub plaquette: usize,
    /// Extraction round (0-based); the final readout counts as `rounds`.
    pub round: usize,
}

/// A built memory experiment with the layout needed by tests and analyses.
#[derive(Clone, Debug)]
pub struct Patch {
    pub spec: PatchSpec,
    pub rows: usize,
    pub cols: usize,
    pub circuit: Circuit,
    pub plaquettes: Vec<Plaquette>,
    /// Instruction index where each round begins; the last entry marks the
    /// start of the final data readout.
    pub round_starts: Vec<usize>,
    pub detectors: Vec<DetectorInfo>,
}

impl Patch {
    pub fn data_qubit(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn data_position(&self, q: usize) -> Option<(usize, usize)> {
        (q < self.rows * self.cols).then(|| (q / self.cols, q % self.cols))
    }

    pub fn bell_pairs(&self) -> Vec<[usize; 2]> {
        self.plaquettes
            .iter()
            .filter_map(|p| match p.ancilla {
                Ancilla::Bell { halves, .. } => Some(halves),
                _ => None,
            })
            .collect()
    }
}

const X_ORDER: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];
const Z_ORDER: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// Where Bell pairs replace single ancillas.
enum SeamKind {
    None,
    /// Two-column seams around the given data columns.
    Double(Vec<usize>),
    /// One Bell column at the given plaquette column.
    Single(usize),
}

fn layout(rows: usize, cols: usize, seams: &SeamKind) -> (Vec<Plaquette>, usize) {
    let rows_i = rows as isize;
    let cols_i = cols as isize;
    let data = |r: isize, c: isize| -> Option<usize> {
        (r >= 0 && r < rows_i && c >= 0 && c < cols_i).then(|| (r * cols_i + c) as usize)
    };
    let mut next = rows * cols;
    let mut out = Vec::new();
    for i in -1..rows_i {
        for j in -1..cols_i {
            let kind = if (i + j).rem_euclid(2) == 0 { CheckKind::X } else { CheckKind::Z };
            let vertical_edge = j == -1 || j == cols_i - 1;
            let horizontal_edge = i == -1 || i == rows_i - 1;
            let keep = match (horizontal_edge, vertical_edge) {
                (false, false) => true,
                (true, false) => kind == CheckKind::X,
                (false, true) => kind == CheckKind::Z,
                (true, true) => false,
            };
            if !keep {
                continue;
            }
            let order = if kind == CheckKind::X { X_ORDER } else { Z_ORDER };
            let steps = order.map(|(di, dj)| data(i + di as isize, j + dj as isize));
            // processor side (0 = left, 1 = right) of each step's data qubit
            let side_of = |k: usize| -> Option<usize> {
                let (di, dj) = order[k];
                let (r, c) = (i + di as isize, j + dj as isize);
                steps[k]?;
                match seams {
                    SeamKind::None => None,
                    SeamKind::Double(cols) => {
                        let s = *cols.iter().find(|&&s| j == s as isize - 1 || j == s as isize)? as isize;
                        Some(if c < s {
                            0
                        } else if c > s {
                            1
                        } else if (r + s) % 2 == 0 {
                            0
                        } else {
                            1
                        })
                    }
                    SeamKind::Single(col) => {
                        (j == *col as isize).then_some(if c <= *col as isize { 0 } else { 1 })
                    }
                }
            };
            let owner: [Option<usize>; 4] = std::array::from_fn(side_of);
            let is_bell = match seams {
                SeamKind::None => false,
                SeamKind::Double(cols) => cols.iter().any(|&s| j == s as isize - 1 || j == s as isize),
                SeamKind::Single(col) => j == *col as isize,
            };
            let ancilla = if is_bell {
                let halves = [next, next + 1];
                next += 2;
                Ancilla::Bell { halves, owner }
            } else {
                next += 1;
                Ancilla::Single(next - 1)
            };
            out.push(Plaquette { i, j, kind, steps, ancilla });
        }
    }
    (out, next)
}

struct Builder {
    c: Circuit,
    p: f64,
    busy: Vec<bool>,
    live: Vec<usize>,
}

impl Builder {
    fn touch(&mut self, qs: &[usize]) {
        for &q in qs {
            debug_assert!(!self.busy[q], "qubit {q} used twice in one tick");
            self.busy[q] = true;
        }
    }

    /// Closes the tick: idle noise on untouched live qubits, then `TICK`.
    fn end_tick(&mut self) {
        let idle: Vec<usize> = self.live.iter().copied().filter(|&q| !self.busy[q]).collect();
        self.c.noise(NoiseChannel::Depol1(self.p), idle);
        self.c.tick();
        self.busy.iter_mut().for_each(|b| *b = false);
    }
}

fn build(spec: &PatchSpec) -> Result<Patch> {
    spec.check()?;
    let d = spec.d;
    let (rows, cols, seams) = match spec.variant {
        Variant::Plain => (d, d, SeamKind::None),
        Variant::Seam => {
            let s = spec.seam_column.unwrap_or((d + 1) / 2);
            if s == 0 || s >= d {
                return Err(Error::InvalidSpec(format!("seam column {s} must be interior")));
            }
            (d, d + 1, SeamKind::Double(vec![s]))
        }
        Variant::NaiveSeam => {
            let s = spec.seam_column.unwrap_or((d - 1) / 2);
            if s >= d - 1 {
                return Err(Error::InvalidSpec(format!("Bell column {s} must be interior")));
            }
            (d, d, SeamKind::Single(s))
        }
        Variant::Multiseam => (d, 4 * d + 3, SeamKind::Double(vec![d, 3 * d + 2])),
    };
    let (plaquettes, nq) = layout(rows, cols, &seams);
    let p = spec.p;
    let pb = spec.p_bell;
    let ndata = rows * cols;
    let data: Vec<usize> = (0..ndata).collect();
    let mut b = Builder { c: Circuit::new(), p, busy: vec![false; nq], live: (0..nq).collect() };
    b.c.reserve_qubits(nq);

    let singles: Vec<usize> = plaquettes
        .iter()
        .filter_map(|pl| match pl.ancilla {
            Ancilla::Single(a) => Some(a),
            _ => None,
        })
        .collect();
    let x_singles: Vec<usize> = plaquettes
        .iter()
        .filter(|pl| pl.kind == CheckKind::X)
        .filter_map(|pl| match pl.ancilla {
            Ancilla::Single(a) => Some(a),
            _ => None,
        })
        .collect();
    let x_halves: Vec<usize> = plaquettes
        .iter()
        .filter(|pl| pl.kind == CheckKind::X)
        .filter_map(|pl| match pl.ancilla {
            Ancilla::Bell { halves, .. } => Some(halves),
            _ => None,
        })
        .flatten()
        .collect();
    let bell_flat: Vec<usize> = plaquettes
        .iter()
        .filter_map(|pl| match pl.ancilla {
            Ancilla::Bell { halves, .. } => Some(halves),
            _ => None,
        })
        .flatten()
        .collect();
    let measured: Vec<usize> = plaquettes.iter().flat_map(|pl| pl.measured_qubits()).collect();
    let memory_kind = match spec.basis {
        Basis::Z => CheckKind::Z,
        Basis::X => CheckKind::X,
    };

    let rounds = spec.rounds();
    let mut round_starts = Vec::with_capacity(rounds + 1);
    let mut detectors = Vec::new();
    // measurement indices of each plaquette in the previous round
    let mut prev: Vec<Vec<usize>> = vec![Vec::new(); plaquettes.len()];

    for round in 0..rounds {
        round_starts.push(b.c.instructions().len());
        // reset tick
        let mut resets = singles.clone();
        if round == 0 {
            resets.extend_from_slice(&data);
        }
        resets.sort_unstable();
        b.touch(&resets);
        b.c.push(Instruction::R(resets.clone()));
        b.c.noise(NoiseChannel::ErrX(p), resets);
        if !bell_flat.is_empty() {
            b.touch(&bell_flat);
            b.c.push(Instruction::BellPrep(bell_flat.clone()));
            b.c.noise(NoiseChannel::BellDepol2(pb), bell_flat.clone());
        }
        b.end_tick();
        // basis change tick
        let mut hs = x_singles.clone();
        if round == 0 && spec.basis == Basis::X {
            hs.extend_from_slice(&data);
        }
        if !hs.is_empty() {
            b.touch(&hs);
            b.c.push(Instruction::H(hs.clone()));
            b.c.noise(NoiseChannel::Depol1(p), hs);
        }
        b.end_tick();
        // four CNOT steps
        for k in 0..4 {
            let mut pairs = Vec::new();
            for pl in &plaquettes {
                let Some(q) = pl.steps[k] else { continue };
                let anc = match &pl.ancilla {
                    Ancilla::Single(a) => *a,
                    Ancilla::Bell { halves, owner } => halves[owner[k].expect("bell step without owner")],
                };
                match pl.kind {
                    CheckKind::X => pairs.extend([anc, q]),
                    CheckKind::Z => pairs.extend([q, anc]),
                }
            }
            b.touch(&pairs);
            b.c.push(Instruction::Cnot(pairs.clone()));
            b.c.noise(NoiseChannel::Depol2(p), pairs);
            b.end_tick();
        }
        // basis change back
        let mut hs = x_singles.clone();
        hs.extend_from_slice(&x_halves);
        if !hs.is_empty() {
            b.touch(&hs);
            b.c.push(Instruction::H(hs.clone()));
            b.c.noise(NoiseChannel::Depol1(p), hs);
        }
        b.end_tick();
        // measurement tick
        b.c.noise(NoiseChannel::ErrX(p), measured.clone());
        b.touch(&measured);
        let first = b.c.push(Instruction::Mz(measured.clone()));
        b.end_tick();
        let mut m = first;
        let mut this: Vec<Vec<usize>> = Vec::with_capacity(plaquettes.len());
        for pl in &plaquettes {
            let k = pl.measured_qubits().len();
            this.push((m..m + k).collect());
            m += k;
        }
        for (idx, pl) in plaquettes.iter().enumerate() {
            let ms = if round == 0 {
                if pl.kind != memory_kind {
                    continue;
                }
                this[idx].clone()
            } else {
                let mut v = prev[idx].clone();
                v.extend_from_slice(&this[idx]);
                v
            };
            b.c.push(Instruction::Detector {
                coords: vec![pl.j as f64 + 0.5, pl.i as f64 + 0.5, round as f64],
                measurements: ms,
            });
            detectors.push(DetectorInfo { plaquette: idx, round });
        }
        prev = this;
    }

    // final transversal readout
    round_starts.push(b.c.instructions().len());
    b.live = data.clone();
    if spec.basis == Basis::X {
        b.touch(&data);
        b.c.push(Instruction::H(data.clone()));
        b.c.noise(NoiseChannel::Depol1(p), data.clone());
        b.end_tick();
    }
    b.c.noise(NoiseChannel::ErrX(p), data.clone());
    b.touch(&data);
    let first = b.c.push(Instruction::Mz(data.clone()));
    b.busy.iter_mut().for_each(|x| *x = false);
    for (idx, pl) in plaquettes.iter().enumerate() {
        if pl.kind != memory_kind {
            continue;
        }
        let mut ms: Vec<usize> = pl.data().map(|q| first + q).collect();
        ms.sort_unstable();
        ms.extend_from_slice(&prev[idx]);
        b.c.push(Instruction::Detector {
            coords: vec![pl.j as f64 + 0.5, pl.i as f64 + 0.5, rounds as f64],
            measurements: ms,
        });
        detectors.push(DetectorInfo { plaquette: idx, round: rounds });
    }
    let logical: Vec<usize> = match spec.basis {
        Basis::Z => (0..cols).map(|c| first + c).collect(),
        Basis::X => (0..rows).map(|r| first + r * cols).collect(),
    };
    b.c.push(Instruction::ObservableInclude { index: 0, measurements: logical });

    Ok(Patch { spec: spec.clone(), rows, cols, circuit: b.c, plaquettes, round_starts, detectors })
}

fn expect_variant(spec: &PatchSpec, v: Variant) -> Result<()> {
    if spec.variant != v {
        return Err(Error::InvalidSpec(format!(
            "expected variant {}, got {}",
            v.name(),
            spec.variant.name()
        )));
    }
    Ok(())
}

/// Builds any variant.
pub fn build_patch(spec: &PatchSpec) -> Result<Patch> {
    build(spec)
}

pub fn build_memory_circuit(spec: &PatchSpec) -> Result<Circuit> {
    expect_variant(spec, Variant::Plain)?;
    Ok(build(spec)?.circuit)
}

pub fn build_distributed_memory_circuit(spec: &PatchSpec) -> Result<Circuit> {
    expect_variant(spec, Variant::Seam)?;
    Ok(build(spec)?.circuit)
}

pub fn build_naive_seam_circuit(spec: &PatchSpec) -> Result<Circuit> {
    expect_variant(spec, Variant::NaiveSeam)?;
    Ok(build(spec)?.circuit)
}

pub fn build_multiseam_circuit(spec: &PatchSpec) -> Result<Circuit> {
    expect_variant(spec, Variant::Multiseam)?;
    Ok(build(spec)?.circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::validate_circuit;

    #[test]
    fn plain_counts() {
        let p = build_patch(&PatchSpec::new(Variant::Plain, 3, Basis::Z, 1e-3, 0.0)).unwrap();
        assert_eq!(p.rows * p.cols, 9);
        assert_eq!(p.plaquettes.len(), 8);
        assert_eq!(p.circuit.num_detectors(), 72);
        assert_eq!(p.circuit.num_observables(), 1);
        validate_circuit(&p.circuit).unwrap();
    }

    #[test]
    fn stabilizer_count_all_variants() {
        for v in [Variant::Plain, Variant::Seam, Variant::NaiveSeam, Variant::Multiseam] {
            for d in [3, 5] {
                let p = build_patch(&PatchSpec::new(v, d, Basis::Z, 1e-3, 1e-2)).unwrap();
                assert_eq!(p.plaquettes.len(), p.rows * p.cols - 1, "{v:?} d={d}");
                validate_circuit(&p.circuit).unwrap();
            }
        }
    }

    #[test]
    fn bell_pair_counts() {
        for d in [3, 5, 7] {
            let s = build_patch(&PatchSpec::new(Variant::Seam, d, Basis::Z, 0.0, 0.01)).unwrap();
            assert_eq!(s.bell_pairs().len(), 2 * d);
            let m = build_patch(&PatchSpec::new(Variant::Multiseam, d, Basis::Z, 0.0, 0.01)).unwrap();
            assert_eq!(m.bell_pairs().len(), 4 * d);
            assert_eq!((m.rows, m.cols), (d, 4 * d + 3));
        }
    }

    #[test]
    fn even_distance_rejected() {
        for v in [Variant::Plain, Variant::Seam, Variant::NaiveSeam, Variant::Multiseam] {
            assert!(build_patch(&PatchSpec::new(v, 4, Basis::Z, 1e-3, 0.0)).is_err());
        }
        let spec = PatchSpec::new(Variant::Plain, 3, Basis::Z, 1e-3, 0.0);
        assert!(build_distributed_memory_circuit(&spec).is_err());
    }

    #[test]
    fn noiseless_detectors_are_zero() {
        use crate::tableau::tableau_reference;
        for v in [Variant::Plain, Variant::Seam, Variant::NaiveSeam, Variant::Multiseam] {
            for basis in [Basis::Z, Basis::X] {
                let p = build_patch(&PatchSpec { rounds: Some(3), ..PatchSpec::new(v, 3, basis, 0.0, 0.0) }).unwrap();
                let r = tableau_reference(&p.circuit).unwrap_or_else(|e| panic!("{v:?} {basis:?}: {e}"));
                assert!(r.detectors.iter().all(|&b| !b), "{v:?} {basis:?}");
                assert!(r.observables.iter().all(|&b| !b), "{v:?} {basis:?}");
                if v != Variant::Plain {
                    assert!(r.random.iter().any(|&b| b));
                }
            }
        }
    }

    #[test]
    fn naive_effective_distance() {
        assert_eq!(naive_seam_effective_distance(3), 1);
        assert_eq!(naive_seam_effective_distance(5), 3);
        assert_eq!(naive_seam_effective_distance(7), 3);
        assert_eq!(naive_seam_effective_distance(9), 5);
    }

    #[test]
    fn spec_json() {
        let s: PatchSpec =
            serde_json::from_str(r#"{"variant":"naive_seam","d":5,"basis":"X","p":0.001,"p_bell":0.02}"#).unwrap();
        assert_eq!(s.variant, Variant::NaiveSeam);
        assert_eq!(s.rounds(), 15);
        assert!(serde_json::from_str::<PatchSpec>(r#"{"variant":"plain","d":5,"basis":"Z","p":0.1,"q":1}"#).is_err());
    }
}
