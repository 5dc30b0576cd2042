//! Detector error models: every Pauli term of every noise annotation is
//! pushed backwards through the circuit to find the detectors and
//! observables it flips. Identical symptoms are merged and each symptom is
//! decomposed into edges touching at most two detectors.

use crate::circuit::{two_qubit_term, Circuit, Instruction, NoiseChannel};
use crate::error::{Error, Result};
use crate::frame::{backward_sweep, xor_sorted, Sensitivity};
use crate::patch::{Patch, Variant};
use crate::pauli::Pauli;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

pub const DEM_HEADER: &str = "# seamqec dem v1";

/// Merged probabilities below this are dropped.
pub const MIN_PROBABILITY: f64 = 1e-15;

/// Probability that exactly one of two independent events fires.
pub fn xor_merge(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

/// Matching weight of an edge with probability `p`.
pub fn edge_weight(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

/// Detectors and observable mask flipped together.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symptom {
    pub detectors: Vec<u32>,
    pub observables: u64,
}

impl Symptom {
    fn from_ids(ids: &[u32], num_detectors: u32) -> Symptom {
        let mut s = Symptom::default();
        for &id in ids {
            if id < num_detectors {
                s.detectors.push(id);
            } else {
                s.observables ^= 1 << (id - num_detectors);
            }
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty() && self.observables == 0
    }

    fn xor(&self, other: &Symptom) -> Symptom {
        Symptom {
            detectors: xor_sorted(&self.detectors, &other.detectors),
            observables: self.observables ^ other.observables,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    pub probability: f64,
    pub symptom: Symptom,
    /// Graph-like pieces whose XOR is `symptom`.
    pub components: Vec<Symptom>,
}

/// An edge between two detectors, or between one detector and the boundary
/// (`b == None`).
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub probability: f64,
    pub a: u32,
    pub b: Option<u32>,
    pub observables: u64,
}

impl Edge {
    pub fn weight(&self) -> f64 {
        edge_weight(self.probability)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorErrorModel {
    pub num_detectors: usize,
    pub num_observables: usize,
    /// Sorted by detector list, then observable mask.
    pub mechanisms: Vec<Mechanism>,
    /// Sorted by `(a, b)`; boundary edges sort before detector pairs.
    pub edges: Vec<Edge>,
}

/// Candidate split of one term: the symptoms of its X part and Z part.
struct Term {
    probability: f64,
    x_part: Symptom,
    z_part: Symptom,
}

fn part(s: &Sensitivity, qubits: &[usize], letters: &[Option<Pauli>], want_x: bool, nd: u32) -> Symptom {
    let mut ids: Vec<u32> = Vec::new();
    for (&q, l) in qubits.iter().zip(letters) {
        if let Some(l) = l {
            let (x, z) = l.bits();
            if want_x && x {
                ids = xor_sorted(&ids, &s.x[q]);
            }
            if !want_x && z {
                ids = xor_sorted(&ids, &s.z[q]);
            }
        }
    }
    Symptom::from_ids(&ids, nd)
}

fn collect_terms(c: &Circuit) -> Vec<Term> {
    let nd = c.num_detectors() as u32;
    let mut terms = Vec::new();
    backward_sweep(c, |_, ins, s| {
        let Instruction::Noise { channel, targets } = ins else { return };
        let p = channel.probability();
        match channel {
            NoiseChannel::Depol1(_) | NoiseChannel::ErrX(_) => {
                let letters: &[Pauli] = if matches!(channel, NoiseChannel::ErrX(_)) {
                    &[Pauli::X]
                } else {
                    &[Pauli::X, Pauli::Y, Pauli::Z]
                };
                let share = p / letters.len() as f64;
                for &q in targets {
                    for &l in letters {
                        terms.push(Term {
                            probability: share,
                            x_part: part(s, &[q], &[Some(l)], true, nd),
                            z_part: part(s, &[q], &[Some(l)], false, nd),
                        });
                    }
                }
            }
            NoiseChannel::Depol2(_) | NoiseChannel::BellDepol2(_) => {
                for pair in targets.chunks(2) {
                    for k in 1..16 {
                        let (a, b) = two_qubit_term(k);
                        let letters = [a, b];
                        terms.push(Term {
                            probability: p / 15.0,
                            x_part: part(s, pair, &letters, true, nd),
                            z_part: part(s, pair, &letters, false, nd),
                        });
                    }
                }
            }
        }
    });
    terms
}

fn graphlike(s: &Symptom) -> bool {
    !s.detectors.is_empty() && s.detectors.len() <= 2
}

/// Splits `target` into known graph-like symptoms, preferring more probable
/// factors. Returns `None` when no factorisation exists.
fn factor(target: &Symptom, known: &BTreeMap<Symptom, f64>, by_det: &HashMap<Vec<u32>, Vec<(u64, f64)>>) -> Option<Vec<Symptom>> {
    if target.detectors.is_empty() {
        return (target.observables == 0).then(Vec::new);
    }
    if graphlike(target) && known.contains_key(target) {
        return Some(vec![target.clone()]);
    }
    let first = target.detectors[0];
    let rest = &target.detectors[1..];
    // candidate pieces containing the first detector
    let mut cands: Vec<(f64, Symptom)> = Vec::new();
    let mut push = |dets: Vec<u32>| {
        if let Some(v) = by_det.get(&dets) {
            for &(obs, p) in v {
                cands.push((p, Symptom { detectors: dets.clone(), observables: obs }));
            }
        }
    };
    push(vec![first]);
    for &o in rest {
        push(vec![first, o]);
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (_, piece) in cands {
        let remaining = target.xor(&piece);
        if remaining.detectors.len() >= target.detectors.len() {
            continue;
        }
        if let Some(mut tail) = factor(&remaining, known, by_det) {
            tail.insert(0, piece);
            return Some(tail);
        }
    }
    None
}

fn merge_into(map: &mut BTreeMap<Symptom, f64>, s: Symptom, p: f64) {
    let e = map.entry(s).or_insert(0.0);
    *e = xor_merge(*e, p);
}

/// Builds the detector error model of a circuit.
pub fn build_dem(c: &Circuit) -> Result<DetectorErrorModel> {
    let terms = collect_terms(c);
    let mut merged: BTreeMap<Symptom, f64> = BTreeMap::new();
    // preferred split per symptom: the X/Z split whenever both parts touch
    // detectors, remembered from the first term that offers one
    let mut splits: HashMap<Symptom, Vec<Symptom>> = HashMap::new();
    for t in &terms {
        let full = t.x_part.xor(&t.z_part);
        if full.is_empty() {
            continue;
        }
        if !t.x_part.detectors.is_empty() && !t.z_part.detectors.is_empty() {
            splits.entry(full.clone()).or_insert_with(|| vec![t.x_part.clone(), t.z_part.clone()]);
        }
        merge_into(&mut merged, full, t.probability);
    }
    merged.retain(|_, p| *p >= MIN_PROBABILITY);

    // split symptoms never serve as factors, so X and Z pieces stay apart
    let known: BTreeMap<Symptom, f64> = merged
        .iter()
        .filter(|(s, _)| graphlike(s) && !splits.contains_key(s))
        .map(|(s, &p)| (s.clone(), p))
        .collect();
    let mut by_det: HashMap<Vec<u32>, Vec<(u64, f64)>> = HashMap::new();
    for (s, &p) in &known {
        by_det.entry(s.detectors.clone()).or_default().push((s.observables, p));
    }

    let mut mechanisms = Vec::with_capacity(merged.len());
    for (s, p) in merged {
        let components = if let Some(split) = splits.get(&s) {
            // pieces of an X/Z split may themselves need factoring
            let mut out = Vec::new();
            for piece in split {
                if known.contains_key(piece) {
                    out.push(piece.clone());
                } else {
                    match factor(piece, &known, &by_det) {
                        Some(f) => out.extend(f),
                        None => out.push(piece.clone()),
                    }
                }
            }
            out
        } else if graphlike(&s) {
            vec![s.clone()]
        } else {
            factor(&s, &known, &by_det).ok_or_else(|| Error::Decomposition(format_symptom(&s)))?
        };
        if components.iter().any(|k| !graphlike(k)) {
            return Err(Error::Decomposition(format_symptom(&s)));
        }
        mechanisms.push(Mechanism { probability: p, symptom: s, components });
    }
    Ok(finish(c.num_detectors(), c.num_observables(), mechanisms))
}

fn finish(nd: usize, no: usize, mut mechanisms: Vec<Mechanism>) -> DetectorErrorModel {
    mechanisms.sort_by(|a, b| a.symptom.cmp(&b.symptom));
    let mut edges: BTreeMap<(Option<u32>, u32, u64), f64> = BTreeMap::new();
    for m in &mechanisms {
        for k in &m.components {
            let (a, b) = match k.detectors.as_slice() {
                [a] => (None, *a),
                [a, b] => (Some(*a), *b),
                _ => unreachable!("non graph-like component"),
            };
            let e = edges.entry((a, b, k.observables)).or_insert(0.0);
            *e = xor_merge(*e, m.probability);
        }
    }
    let mut edges: Vec<Edge> = edges
        .into_iter()
        .filter(|(_, p)| *p >= MIN_PROBABILITY)
        .map(|((a, b, obs), p)| match a {
            None => Edge { probability: p, a: b, b: None, observables: obs },
            Some(a) => Edge { probability: p, a, b: Some(b), observables: obs },
        })
        .collect();
    edges.sort_by(|x, y| (x.a, x.b, x.observables).cmp(&(y.a, y.b, y.observables)));
    DetectorErrorModel { num_detectors: nd, num_observables: no, mechanisms, edges }
}

fn format_symptom(s: &Symptom) -> String {
    let mut out = String::new();
    for d in &s.detectors {
        write!(out, " D{d}").unwrap();
    }
    for o in 0..64 {
        if s.observables >> o & 1 == 1 {
            write!(out, " L{o}").unwrap();
        }
    }
    out.trim_start().to_string()
}

impl DetectorErrorModel {
    /// Text form: one `error(p)` line per mechanism with its graph-like
    /// pieces separated by `^`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{DEM_HEADER}").unwrap();
        writeln!(out, "detectors {}", self.num_detectors).unwrap();
        writeln!(out, "observables {}", self.num_observables).unwrap();
        for m in &self.mechanisms {
            let parts: Vec<String> = m.components.iter().map(format_symptom).collect();
            writeln!(out, "error({}) {}", m.probability, parts.join(" ^ ")).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<DetectorErrorModel> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == DEM_HEADER => {}
            _ => return Err(Error::Parse { line: 1, message: format!("missing header `{DEM_HEADER}`") }),
        }
        let (mut nd, mut no) = (None, None);
        let mut mechanisms = Vec::new();
        for (i, raw) in lines {
            let line = i + 1;
            let bad = |m: String| Error::Parse { line, message: m };
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(v) = s.strip_prefix("detectors ") {
                nd = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?);
                continue;
            }
            if let Some(v) = s.strip_prefix("observables ") {
                no = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?);
                continue;
            }
            let rest = s.strip_prefix("error(").ok_or_else(|| bad(format!("unexpected `{s}`")))?;
            let close = rest.find(')').ok_or_else(|| bad("unclosed error(".into()))?;
            let p: f64 = rest[..close].parse().map_err(|_| bad("bad probability".into()))?;
            let mut components = Vec::new();
            for chunk in rest[close + 1..].split('^') {
                let mut k = Symptom::default();
                for tok in chunk.split_whitespace() {
                    if let Some(d) = tok.strip_prefix('D') {
                        k.detectors.push(d.parse().map_err(|_| bad(format!("bad token `{tok}`")))?);
                    } else if let Some(o) = tok.strip_prefix('L') {
                        let o: u32 = o.parse().map_err(|_| bad(format!("bad token `{tok}`")))?;
                        k.observables ^= 1 << o;
                    } else {
                        return Err(bad(format!("bad token `{tok}`")));
                    }
                }
                k.detectors.sort_unstable();
                components.push(k);
            }
            let symptom = components.iter().fold(Symptom::default(), |acc, k| acc.xor(k));
            mechanisms.push(Mechanism { probability: p, symptom, components });
        }
        let nd = nd.ok_or_else(|| Error::Parse { line: 0, message: "missing detector count".into() })?;
        let no = no.unwrap_or(0);
        Ok(finish(nd, no, mechanisms))
    }

    /// Marginal flip probability of every detector, treating mechanisms as
    /// independent.
    pub fn detector_marginals(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.num_detectors];
        for m in &self.mechanisms {
            for &d in &m.symptom.detectors {
                q[d as usize] = xor_merge(q[d as usize], m.probability);
            }
        }
        q
    }
}

/// Nonzero edge of a seam DEM without bulk noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeamEdgeKind {
    /// Both ends on the same plaquette: a flipped Bell-check outcome.
    Measurement,
    /// Ends on different plaquettes or on the boundary.
    Data,
}

/// The repetition-code-like graph left on the seam when only Bell pairs
/// are noisy.
#[derive(Clone, Debug)]
pub struct SeamGraph {
    pub edges: Vec<(Edge, SeamEdgeKind)>,
}

/// Restricts the DEM of a seam patch built with `p = 0` to its nonzero
/// edges, checking that every one of them touches only Bell-pair checks.
pub fn seam_restriction(patch: &Patch, dem: &DetectorErrorModel) -> Result<SeamGraph> {
    if !matches!(patch.spec.variant, Variant::Seam | Variant::Multiseam) || patch.spec.p != 0.0 {
        return Err(Error::InvalidSpec("seam restriction needs a seam patch with p = 0".into()));
    }
    let on_seam = |d: u32| patch.plaquettes[patch.detectors[d as usize].plaquette].is_bell();
    let mut edges = Vec::new();
    for e in dem.edges.iter().filter(|e| e.probability > 0.0) {
        if !on_seam(e.a) || e.b.is_some_and(|b| !on_seam(b)) {
            let s = Symptom { detectors: [Some(e.a), e.b].into_iter().flatten().collect(), observables: e.observables };
            return Err(Error::OffSeam(format_symptom(&s)));
        }
        let same = e.b.is_some_and(|b| patch.detectors[b as usize].plaquette == patch.detectors[e.a as usize].plaquette);
        let kind = if same { SeamEdgeKind::Measurement } else { SeamEdgeKind::Data };
        edges.push((e.clone(), kind));
    }
    Ok(SeamGraph { edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Instruction as I;

    #[test]
    fn single_errx_mechanism() {
        let mut c = Circuit::new();
        c.push(I::R(vec![0]));
        c.noise(NoiseChannel::ErrX(0.1), vec![0]);
        c.push(I::Mz(vec![0]));
        c.push(I::Detector { coords: vec![], measurements: vec![0] });
        let dem = build_dem(&c).unwrap();
        assert_eq!(dem.mechanisms.len(), 1);
        assert_eq!(dem.mechanisms[0].symptom.detectors, [0]);
        assert!((dem.mechanisms[0].probability - 0.1).abs() < 1e-15);
        assert_eq!(dem.edges.len(), 1);
        assert_eq!(dem.edges[0].b, None);
    }

    #[test]
    fn duplicates_merge() {
        let mut c = Circuit::new();
        c.push(I::R(vec![0]));
        c.noise(NoiseChannel::ErrX(0.1), vec![0]);
        c.noise(NoiseChannel::ErrX(0.1), vec![0]);
        c.push(I::Mz(vec![0]));
        c.push(I::Detector { coords: vec![], measurements: vec![0] });
        let dem = build_dem(&c).unwrap();
        assert_eq!(dem.mechanisms.len(), 1);
        assert!((dem.mechanisms[0].probability - 0.18).abs() < 1e-15);
    }

    #[test]
    fn weight_monotone() {
        assert!(edge_weight(0.01) > edge_weight(0.02));
        assert!(edge_weight(0.499) > 0.0);
    }
}
