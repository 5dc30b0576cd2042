//! Generators shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use seamqec::fit::*;
use seamqec::patch::Basis;
use seamqec::pauli::{Pauli, PauliString};
use seamqec::sampler::SampleStats;
use seamqec::sv::*;

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// One synthetic memory experiment over 3d rounds with true per-round
/// rate `rate`.
pub fn measure(rng: &mut ChaCha8Rng, d: usize, p: f64, p_bell: f64, rate: f64, shots: u64) -> FitRow {
    let k = 3 * d;
    let p_lk = 1.0 - (1.0 - rate).powi(k as i32);
    let failures = Binomial::new(shots, p_lk).unwrap().sample(rng);
    let s = SampleStats::from_counts(shots, k, failures, 0, Basis::Z);
    FitRow { d, p, p_bell, p_l: s.p_l, sigma: s.sigma }
}

pub fn within_3_sigma(rep: &FitReport, truth: &[f64]) -> bool {
    rep.values.iter().zip(&rep.sigmas).zip(truth).all(|((v, s), t)| (v - t).abs() <= 3.0 * s)
}

pub fn bulk_rows(seed: u64, truth: &BulkParams) -> Vec<FitRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for d in [5, 7, 9, 11] {
        for &p in &logspace(1e-4, 1e-3, 8) {
            rows.push(measure(&mut rng, d, p, 0.0, eval_bulk(d, p, truth), 1_000_000));
        }
    }
    rows
}

pub const SEAM_TRUTH: SeamParams =
    SeamParams { alpha1: 0.15, alpha2: 0.04, alpha3: 0.06, alpha_c: 0.3, p_star: 0.0065, p_bell_star: 0.25 };

pub fn seam_rows(seed: u64) -> Vec<FitRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for d in [3, 5, 7, 9, 11, 13] {
        for &p in &logspace(1e-4, 1e-3, 8) {
            for &pb in &logspace(1e-3, 5e-2, 8) {
                let f = eval_seam(d, p, pb, &SEAM_TRUTH, PseudoThreshold::Linear).unwrap();
                rows.push(measure(&mut rng, d, p, pb, f, 10_000_000));
            }
        }
    }
    rows
}

pub const TOL: f64 = 1e-10;

pub fn stabilizer_state(rng: &mut ChaCha8Rng, n: usize) -> DenseState {
    let mut s = DenseState::zero(n);
    for _ in 0..6 * n {
        let q = rng.random_range(0..n);
        match rng.random_range(0..3) {
            0 => s.h(q),
            1 => s.s(q),
            _ if n > 1 => s.cnot(q, (q + rng.random_range(1..n)) % n),
            _ => s.h(q),
        }
    }
    s
}

pub fn dense_state(rng: &mut ChaCha8Rng, n: usize) -> DenseState {
    let amps = (0..1 << n)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    DenseState::from_amplitudes(amps).unwrap()
}

pub fn random_pauli(rng: &mut ChaCha8Rng, n: usize, qubits: &[usize]) -> Operator {
    let terms: Vec<(usize, Pauli)> =
        qubits.iter().map(|&q| (q, [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)])).collect();
    Operator::pauli(&PauliString::from_terms(n, &terms))
}

pub fn random_unitary(rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let mut v = [0.0f64; 4];
    v.iter_mut().for_each(|x| *x = StandardNormal.sample(rng));
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (a, b) = (Complex64::new(v[0], v[1]) / norm, Complex64::new(v[2], v[3]) / norm);
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    DMatrix::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()]) * phase
}

/// Teleported and direct measurement agree in law and in every branch
/// state, including each individual pair of Bell-half outcomes.
pub fn equivalent(t: &Teleported, direct: &[Branch; 2]) -> bool {
    for x in 0..2 {
        if (t.xor_probability(x) - direct[x].probability).abs() >= TOL {
            return false;
        }
        let Some(want) = &direct[x].state else {
            if t.branches[x].probability >= TOL {
                return false;
            }
            continue;
        };
        for m1 in 0..2 {
            if let Some(got) = &t.by_outcome[m1][m1 ^ x] {
                if got.fidelity(want) < 1.0 - TOL {
                    return false;
                }
            }
        }
        if direct[1 - x].probability > TOL {
            for m1 in 0..2 {
                if (t.joint[m1][0] + t.joint[m1][1] - 0.5).abs() >= TOL {
                    return false;
                }
            }
        }
    }
    true
}

/// One random instance: stabilizer states on even cases, dense states on
/// odd ones, with `O_A` and `O_B` on up to four qubits each.
pub fn random_instance(rng: &mut ChaCha8Rng, case: usize) -> (Operator, Operator, DenseState) {
    let (na, nb) = (rng.random_range(1..=4), rng.random_range(1..=4));
    let n = na + nb;
    let state = if case % 2 == 0 { stabilizer_state(rng, n) } else { dense_state(rng, n) };
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let a = random_pauli(rng, n, &perm[..na]);
    let b = random_pauli(rng, n, &perm[na..]);
    (a, b, state)
}

/// The four-qubit parity `ZZ ⊗ ZZ` on `|+⟩^4`, with the direct branches
/// built by keeping basis states of one parity.
pub fn parity_example() -> (Teleported, [Branch; 2]) {
    let mut s = DenseState::zero(4);
    (0..4).for_each(|q| s.h(q));
    let z = |q| (q, Pauli::Z);
    let a = Operator::pauli(&PauliString::from_terms(4, &[z(0), z(1)]));
    let b = Operator::pauli(&PauliString::from_terms(4, &[z(2), z(3)]));
    let t = teleported_measure(&a, &b, &s).unwrap();
    let branch = |x: u32| {
        let amps: Vec<Complex64> = s
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, &amp)| if (i as u32).count_ones() % 2 == x { amp } else { Complex64::new(0.0, 0.0) })
            .collect();
        let p = amps.iter().map(|a| a.norm_sqr()).sum();
        Branch { probability: p, state: Some(DenseState::from_amplitudes(amps).unwrap()) }
    };
    (t, [branch(0), branch(1)])
}
