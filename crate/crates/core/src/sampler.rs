//! Pauli-frame Monte Carlo: 64 shots per block packed into machine words,
//! noise drawn by geometric skipping, detectors compared against the
//! noiseless tableau reference, and a matching decode per shot.

use crate::circuit::{Circuit, Instruction, NoiseChannel};
use crate::decoder::{Decoder, MatchingGraph};
use crate::dem::build_dem;
use crate::error::{Error, Result};
use crate::par::map_blocks;
use crate::patch::{build_patch, Basis, PatchSpec};
use crate::tableau::tableau_reference;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shots simulated together in one block.
pub const SHOTS_PER_BLOCK: usize = 64;

/// Version of the sample CSV layout.
pub const SAMPLE_CSV_SCHEMA: u32 = 1;

enum Op {
    H(Vec<u32>),
    Cnot(Vec<u32>),
    Reset(Vec<u32>),
    Mz(Vec<u32>),
    Mx(Vec<u32>),
    /// Single-qubit noise; `letters` lists the (x, z) bits to pick from.
    Noise1 { inv_log: f64, letters: &'static [(bool, bool)], targets: Vec<u32> },
    /// Uniform over the 15 non-identity two-qubit Paulis.
    Noise2 { inv_log: f64, pairs: Vec<u32> },
}

const ERRX: &[(bool, bool)] = &[(true, false)];
const DEPOL: &[(bool, bool)] = &[(true, false), (true, true), (false, true)];
const LETTER: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];

/// Compiled circuit ready for frame sampling.
pub struct FrameSampler {
    ops: Vec<Op>,
    num_qubits: usize,
    num_measurements: usize,
    detectors: Vec<Vec<u32>>,
    observables: Vec<Vec<u32>>,
    detector_ref: Vec<bool>,
    observable_ref: Vec<bool>,
}

/// Per-worker buffers for one block.
pub struct BlockScratch {
    x: Vec<u64>,
    z: Vec<u64>,
    meas: Vec<u64>,
    pub detectors: Vec<u64>,
    pub observables: Vec<u64>,
}

fn as_u32(qs: &[usize]) -> Vec<u32> {
    qs.iter().map(|&q| q as u32).collect()
}

impl FrameSampler {
    pub fn new(c: &Circuit) -> Result<Self> {
        crate::circuit::validate_circuit(c).map_err(|d| Error::InvalidCircuit(d.to_string()))?;
        let reference = tableau_reference(c)?;
        let mut ops = Vec::new();
        for ins in c.instructions() {
            let op = match ins {
                Instruction::H(qs) => Op::H(as_u32(qs)),
                Instruction::Cnot(qs) => Op::Cnot(as_u32(qs)),
                Instruction::R(qs) | Instruction::BellPrep(qs) => Op::Reset(as_u32(qs)),
                Instruction::Mz(qs) => Op::Mz(as_u32(qs)),
                Instruction::Mx(qs) => Op::Mx(as_u32(qs)),
                Instruction::Noise { channel, targets } => {
                    let p = channel.probability();
                    if p <= 0.0 || targets.is_empty() {
                        continue;
                    }
                    let inv_log = 1.0 / (1.0 - p).ln();
                    match channel {
                        NoiseChannel::ErrX(_) => Op::Noise1 { inv_log, letters: ERRX, targets: as_u32(targets) },
                        NoiseChannel::Depol1(_) => Op::Noise1 { inv_log, letters: DEPOL, targets: as_u32(targets) },
                        NoiseChannel::Depol2(_) | NoiseChannel::BellDepol2(_) => {
                            Op::Noise2 { inv_log, pairs: as_u32(targets) }
                        }
                    }
                }
                _ => continue,
            };
            ops.push(op);
        }
        let to32 = |v: &[usize]| v.iter().map(|&m| m as u32).collect::<Vec<u32>>();
        Ok(FrameSampler {
            ops,
            num_qubits: c.num_qubits(),
            num_measurements: c.num_measurements(),
            detectors: c.detector_measurements().iter().map(|m| to32(m)).collect(),
            observables: c.observable_measurements().iter().map(|m| to32(m)).collect(),
            detector_ref: reference.detectors,
            observable_ref: reference.observables,
        })
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn scratch(&self) -> BlockScratch {
        BlockScratch {
            x: vec![0; self.num_qubits],
            z: vec![0; self.num_qubits],
            meas: vec![0; self.num_measurements],
            detectors: vec![0; self.detectors.len()],
            observables: vec![0; self.observables.len()],
        }
    }

    /// Simulates 64 shots; bit `l` of each output word belongs to lane `l`.
    pub fn sample_block<R: Rng>(&self, rng: &mut R, s: &mut BlockScratch) {
        s.x.fill(0);
        s.z.fill(0);
        let mut m = 0usize;
        // number of untouched (slot, lane) positions before the next hit
        let skip = |rng: &mut R, inv_log: f64| -> usize {
            let u: f64 = 1.0 - rng.random::<f64>();
            let k = (u.ln() * inv_log).floor();
            if k >= usize::MAX as f64 {
                usize::MAX
            } else {
                k as usize
            }
        };
        for op in &self.ops {
            match op {
                Op::H(qs) => {
                    for &q in qs {
                        let q = q as usize;
                        std::mem::swap(&mut s.x[q], &mut s.z[q]);
                    }
                }
                Op::Cnot(qs) => {
                    for p in qs.chunks_exact(2) {
                        let (c, t) = (p[0] as usize, p[1] as usize);
                        s.x[t] ^= s.x[c];
                        s.z[c] ^= s.z[t];
                    }
                }
                Op::Reset(qs) => {
                    for &q in qs {
                        s.x[q as usize] = 0;
                        s.z[q as usize] = 0;
                    }
                }
                Op::Mz(qs) => {
                    for &q in qs {
                        s.meas[m] = s.x[q as usize];
                        m += 1;
                    }
                }
                Op::Mx(qs) => {
                    for &q in qs {
                        s.meas[m] = s.z[q as usize];
                        m += 1;
                    }
                }
                Op::Noise1 { inv_log, letters, targets } => {
                    let total = targets.len() * SHOTS_PER_BLOCK;
                    let mut pos = skip(rng, *inv_log);
                    while pos < total {
                        let q = targets[pos / SHOTS_PER_BLOCK] as usize;
                        let bit = 1u64 << (pos % SHOTS_PER_BLOCK);
                        let (x, z) = if letters.len() == 1 { letters[0] } else { letters[rng.random_range(0..letters.len())] };
                        if x {
                            s.x[q] ^= bit;
                        }
                        if z {
                            s.z[q] ^= bit;
                        }
                        pos = pos.saturating_add(1).saturating_add(skip(rng, *inv_log));
                    }
                }
                Op::Noise2 { inv_log, pairs } => {
                    let total = pairs.len() / 2 * SHOTS_PER_BLOCK;
                    let mut pos = skip(rng, *inv_log);
                    while pos < total {
                        let k = pos / SHOTS_PER_BLOCK;
                        let bit = 1u64 << (pos % SHOTS_PER_BLOCK);
                        let term = rng.random_range(1..16usize);
                        for (q, letter) in [(pairs[2 * k], term / 4), (pairs[2 * k + 1], term % 4)] {
                            let (x, z) = LETTER[letter];
                            if x {
                                s.x[q as usize] ^= bit;
                            }
                            if z {
                                s.z[q as usize] ^= bit;
                            }
                        }
                        pos = pos.saturating_add(1).saturating_add(skip(rng, *inv_log));
                    }
                }
            }
        }
        let parity = |ms: &[u32], meas: &[u64]| ms.iter().fold(0u64, |acc, &i| acc ^ meas[i as usize]);
        for (d, ms) in self.detectors.iter().enumerate() {
            let flip = if self.detector_ref[d] { !0 } else { 0 };
            s.detectors[d] = parity(ms, &s.meas) ^ flip;
        }
        for (o, ms) in self.observables.iter().enumerate() {
            let flip = if self.observable_ref[o] { !0 } else { 0 };
            s.observables[o] = parity(ms, &s.meas) ^ flip;
        }
    }
}

/// Generator for block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Detector and observable bits, one row per shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMatrix {
    pub shots: usize,
    pub num_detectors: usize,
    pub num_observables: usize,
    detectors: Vec<bool>,
    observables: Vec<bool>,
}

impl SampleMatrix {
    pub fn detector(&self, shot: usize, d: usize) -> bool {
        self.detectors[shot * self.num_detectors + d]
    }

    pub fn observable(&self, shot: usize, o: usize) -> bool {
        self.observables[shot * self.num_observables + o]
    }

    pub fn detector_row(&self, shot: usize) -> &[bool] {
        &self.detectors[shot * self.num_detectors..(shot + 1) * self.num_detectors]
    }
}

/// Samples `shots` shots of `c`, reproducibly from `seed`.
pub fn sample_detectors(c: &Circuit, shots: usize, seed: u64) -> Result<SampleMatrix> {
    let fs = FrameSampler::new(c)?;
    let (nd, no) = (fs.num_detectors(), fs.num_observables());
    let mut out = SampleMatrix {
        shots,
        num_detectors: nd,
        num_observables: no,
        detectors: Vec::with_capacity(shots * nd),
        observables: Vec::with_capacity(shots * no),
    };
    let mut s = fs.scratch();
    for block in 0..shots.div_ceil(SHOTS_PER_BLOCK) {
        fs.sample_block(&mut block_rng(seed, block), &mut s);
        let lanes = (shots - block * SHOTS_PER_BLOCK).min(SHOTS_PER_BLOCK);
        for lane in 0..lanes {
            out.detectors.extend(s.detectors.iter().map(|w| w >> lane & 1 == 1));
            out.observables.extend(s.observables.iter().map(|w| w >> lane & 1 == 1));
        }
    }
    Ok(out)
}

/// Logical error statistics of a memory experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub shots: u64,
    pub rounds: usize,
    pub failures: u64,
    /// Failure fraction over all `rounds`.
    pub p_lk: f64,
    /// Per-round rate 1 − (1 − p_lk)^(1/k).
    pub p_l: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Memory basis; a `Z` memory detects X_L errors.
    pub basis: Basis,
}

impl SampleStats {
    pub fn from_counts(shots: u64, rounds: usize, failures: u64, seed: u64, basis: Basis) -> SampleStats {
        let k = rounds.max(1) as f64;
        let n = shots as f64;
        let p_lk = if shots == 0 { 0.0 } else { failures as f64 / n };
        let p_l = 1.0 - (1.0 - p_lk).powf(1.0 / k);
        let sigma = if shots == 0 {
            f64::INFINITY
        } else {
            (p_lk * (1.0 - p_lk) / n).sqrt() / (k * (1.0 - p_lk).powf(1.0 - 1.0 / k))
        };
        SampleStats { shots, rounds, failures, p_lk, p_l, sigma, seed, basis }
    }

    /// Which logical error the experiment measures: `X` for a `Z` memory.
    pub fn logical_error(&self) -> &'static str {
        match self.basis {
            Basis::Z => "X",
            Basis::X => "Z",
        }
    }
}

/// Sampling knobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleOptions {
    pub shots: u64,
    pub seed: u64,
    /// Worker cap; 0 uses every available core.
    pub threads: usize,
}

/// Failure count of `shots` decoded shots. The circuit must carry exactly
/// one observable.
pub fn count_failures(c: &Circuit, opts: SampleOptions) -> Result<u64> {
    if c.num_observables() != 1 {
        return Err(Error::InvalidCircuit(format!(
            "logical-rate estimation needs exactly one observable, found {}",
            c.num_observables()
        )));
    }
    let fs = FrameSampler::new(c)?;
    let dem = build_dem(c)?;
    let g = MatchingGraph::from_dem(&dem)?;
    let shots = opts.shots as usize;
    let blocks = shots.div_ceil(SHOTS_PER_BLOCK);
    let results = map_blocks(
        blocks,
        opts.threads,
        || (fs.scratch(), Decoder::new(&g), vec![Vec::<u32>::new(); SHOTS_PER_BLOCK]),
        |(s, dec, lanes), block| -> Result<u64> {
            fs.sample_block(&mut block_rng(opts.seed, block), s);
            let live = (shots - block * SHOTS_PER_BLOCK).min(SHOTS_PER_BLOCK);
            let mask = if live == SHOTS_PER_BLOCK { !0u64 } else { (1u64 << live) - 1 };
            lanes.iter_mut().for_each(|l| l.clear());
            for (d, &w) in s.detectors.iter().enumerate() {
                let mut w = w & mask;
                while w != 0 {
                    lanes[w.trailing_zeros() as usize].push(d as u32);
                    w &= w - 1;
                }
            }
            let mut fails = 0u64;
            for (lane, defects) in lanes.iter().enumerate().take(live) {
                let pred = dec.decode_defects(defects, true)?.prediction & 1;
                let actual = s.observables[0] >> lane & 1;
                fails += (pred != actual) as u64;
            }
            Ok(fails)
        },
    );
    results.into_iter().sum()
}

/// Rounds of a patch circuit, read from the time coordinate of the final
/// detectors; 1 when detectors carry no coordinates.
fn rounds_from_coords(c: &Circuit) -> usize {
    c.detector_coords().iter().filter_map(|k| k.get(2)).fold(0.0f64, |a, &t| a.max(t)).round().max(1.0) as usize
}

/// Decodes `shots` shots of `c` and reports per-round statistics. The
/// round count comes from the detector time coordinates.
pub fn estimate_logical_rate(c: &Circuit, shots: u64, seed: u64) -> Result<SampleStats> {
    let failures = count_failures(c, SampleOptions { shots, seed, threads: 0 })?;
    Ok(SampleStats::from_counts(shots, rounds_from_coords(c), failures, seed, Basis::Z))
}

/// Builds, samples and decodes one patch experiment.
pub fn estimate_patch(spec: &PatchSpec, opts: SampleOptions) -> Result<SampleStats> {
    let patch = build_patch(spec)?;
    let failures = count_failures(&patch.circuit, opts)?;
    Ok(SampleStats::from_counts(opts.shots, spec.rounds(), failures, opts.seed, spec.basis))
}

/// One CSV row of simulation output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub schema: u32,
    pub variant: String,
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
    pub p_bell: f64,
    pub basis: String,
    pub shots: u64,
    pub failures: u64,
    pub p_l: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl SampleRow {
    pub fn new(spec: &PatchSpec, stats: &SampleStats) -> Self {
        SampleRow {
            schema: SAMPLE_CSV_SCHEMA,
            variant: spec.variant.name().to_string(),
            d: spec.d,
            rounds: stats.rounds,
            p: spec.p,
            p_bell: spec.p_bell,
            basis: spec.basis.name().to_string(),
            shots: stats.shots,
            failures: stats.failures,
            p_l: stats.p_l,
            sigma: stats.sigma,
            seed: stats.seed,
        }
    }
}

/// Writes rows as CSV with a header line.
pub fn write_sample_csv<W: std::io::Write>(w: W, rows: &[SampleRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sample_csv<R: std::io::Read>(r: R) -> Result<Vec<SampleRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let row: SampleRow = row?;
        if row.schema != SAMPLE_CSV_SCHEMA {
            return Err(Error::InvalidSpec(format!(
                "sample CSV schema {} is not the supported version {SAMPLE_CSV_SCHEMA}",
                row.schema
            )));
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_formulas() {
        let s = SampleStats::from_counts(100, 1, 50, 0, Basis::Z);
        assert!((s.sigma - 0.05).abs() < 1e-15);
        let s = SampleStats::from_counts(10, 3, 3, 0, Basis::Z);
        assert!((s.p_l - 0.112_095_998_257_399_29).abs() < 1e-15);
        let s = SampleStats::from_counts(10, 7, 0, 0, Basis::X);
        assert_eq!(s.p_l, 0.0);
        assert_eq!(s.logical_error(), "Z");
    }
}
