use seamqec::circuit::{Circuit, Instruction, NoiseChannel};
use seamqec::dem::build_dem;
use seamqec::patch::*;
use seamqec::sampler::*;

fn binomial_ok(hits: usize, shots: usize, p: f64) -> bool {
    let sigma = (p * (1.0 - p) / shots as f64).sqrt();
    (hits as f64 / shots as f64 - p).abs() <= 3.0 * sigma.max(1.0 / shots as f64)
}

/// Three-qubit repetition code, two ancillas, `rounds` rounds of ZZ checks
/// with circuit-level noise.
fn repetition(rounds: usize, p: f64) -> Circuit {
    let mut c = Circuit::new();
    c.push(Instruction::R((0..5).collect()));
    c.noise(NoiseChannel::ErrX(p), (0..5).collect());
    c.tick();
    let mut prev: Option<usize> = None;
    for _ in 0..rounds {
        c.push(Instruction::R(vec![3, 4]));
        c.noise(NoiseChannel::ErrX(p), vec![3, 4]);
        c.tick();
        for pairs in [vec![0, 3, 1, 4], vec![1, 3, 2, 4]] {
            c.push(Instruction::Cnot(pairs.clone()));
            c.noise(NoiseChannel::Depol2(p), pairs);
            c.tick();
        }
        c.noise(NoiseChannel::ErrX(p), vec![3, 4]);
        let m = c.push(Instruction::Mz(vec![3, 4]));
        c.tick();
        for k in 0..2 {
            let mut ms = vec![m + k];
            if let Some(q) = prev {
                ms.push(q + k);
            }
            c.push(Instruction::Detector { coords: vec![], measurements: ms });
        }
        prev = Some(m);
    }
    c.noise(NoiseChannel::Depol1(p), vec![0, 1, 2]);
    let m = c.push(Instruction::Mz(vec![0, 1, 2]));
    let q = prev.unwrap();
    for k in 0..2 {
        c.push(Instruction::Detector { coords: vec![], measurements: vec![m + k, m + k + 1, q + k] });
    }
    c.push(Instruction::ObservableInclude { index: 0, measurements: vec![m] });
    c
}

#[test]
fn noiseless_patches_fire_nothing() {
    for v in [Variant::Plain, Variant::Seam, Variant::NaiveSeam, Variant::Multiseam] {
        let patch = build_patch(&PatchSpec::new(v, 3, Basis::Z, 0.0, 0.0)).unwrap();
        let s = sample_detectors(&patch.circuit, 1000, 3).unwrap();
        for shot in 0..s.shots {
            assert!(s.detector_row(shot).iter().all(|&b| !b), "{v:?}");
            assert!(!s.observable(shot, 0));
        }
    }
}

#[test]
fn single_mechanism_rate() {
    let mut c = Circuit::new();
    c.push(Instruction::R(vec![0]));
    c.noise(NoiseChannel::ErrX(0.1), vec![0]);
    c.tick();
    c.push(Instruction::Mz(vec![0]));
    c.push(Instruction::Detector { coords: vec![], measurements: vec![0] });
    let shots = 100_000;
    let s = sample_detectors(&c, shots, 11).unwrap();
    let hits = (0..shots).filter(|&k| s.detector(k, 0)).count();
    assert!(binomial_ok(hits, shots, 0.1), "{hits}");
}

#[test]
fn marginals_match_first_order_dem() {
    for (rounds, p) in [(1, 0.01), (2, 0.005), (3, 0.01)] {
        let c = repetition(rounds, p);
        assert!(c.num_qubits() <= 12);
        let q = build_dem(&c).unwrap().detector_marginals();
        let shots = 100_000;
        let s = sample_detectors(&c, shots, 40 + rounds as u64).unwrap();
        for (d, &qd) in q.iter().enumerate() {
            let hits = (0..shots).filter(|&k| s.detector(k, d)).count();
            assert!(binomial_ok(hits, shots, qd), "rounds {rounds} detector {d}: {hits} vs {qd}");
        }
    }
}

#[test]
fn same_seed_same_samples() {
    let patch = build_patch(&PatchSpec::new(Variant::Seam, 3, Basis::X, 5e-3, 0.02)).unwrap();
    let a = sample_detectors(&patch.circuit, 500, 9).unwrap();
    let b = sample_detectors(&patch.circuit, 500, 9).unwrap();
    let c = sample_detectors(&patch.circuit, 500, 10).unwrap();
    let rows = |m: &SampleMatrix| (0..m.shots).map(|k| m.detector_row(k).to_vec()).collect::<Vec<_>>();
    assert_eq!(rows(&a), rows(&b));
    assert_ne!(rows(&a), rows(&c));
}

#[test]
fn failures_do_not_depend_on_threads() {
    let patch = build_patch(&PatchSpec::new(Variant::Seam, 3, Basis::Z, 5e-3, 0.02)).unwrap();
    let run = |threads| count_failures(&patch.circuit, SampleOptions { shots: 5000, seed: 21, threads }).unwrap();
    let one = run(1);
    assert!(one > 0);
    assert_eq!(one, run(2));
    assert_eq!(one, run(4));
}

#[test]
fn larger_distance_is_better_below_threshold() {
    let stats = |d| {
        let spec = PatchSpec::new(Variant::Plain, d, Basis::Z, 1e-3, 0.0);
        estimate_patch(&spec, SampleOptions { shots: 1_000_000, seed: 1, threads: 0 }).unwrap()
    };
    let (five, seven) = (stats(5), stats(7));
    assert!(seven.failures > 0);
    assert!(five.p_l - 2.0 * five.sigma > seven.p_l + 2.0 * seven.sigma, "{five:?} {seven:?}");
}

#[test]
fn csv_round_trips() {
    let spec = PatchSpec::new(Variant::Plain, 3, Basis::Z, 3e-3, 0.0);
    let stats = estimate_patch(&spec, SampleOptions { shots: 2000, seed: 4, threads: 1 }).unwrap();
    let rows = vec![SampleRow::new(&spec, &stats)];
    let mut buf = Vec::new();
    write_sample_csv(&mut buf, &rows).unwrap();
    assert_eq!(read_sample_csv(buf.as_slice()).unwrap(), rows);
}
