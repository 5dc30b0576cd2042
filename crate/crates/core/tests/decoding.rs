use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seamqec::decoder::*;
use seamqec::dem::build_dem;
use seamqec::patch::*;
use seamqec::sampler::sample_detectors;

/// Connected random graph: a spanning path plus extra chords, every node
/// with a boundary edge.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<WeightedEdge> {
    let mut edges = Vec::new();
    let w = |rng: &mut ChaCha8Rng| scale * rng.random_range(0.5..5.0);
    for a in 1..n {
        let b = rng.random_range(0..a);
        edges.push(WeightedEdge { a, b: Some(b), weight: w(rng), observables: rng.random_range(0..4) });
    }
    for _ in 0..n {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.push(WeightedEdge { a, b: Some(b), weight: w(rng), observables: rng.random_range(0..4) });
        }
    }
    for a in 0..n {
        edges.push(WeightedEdge { a, b: None, weight: 2.0 * w(rng), observables: rng.random_range(0..4) });
    }
    edges
}

fn syndrome(rng: &mut ChaCha8Rng, n: usize, max: usize) -> Vec<bool> {
    let mut s = vec![false; n];
    for _ in 0..rng.random_range(0..=max) {
        s[rng.random_range(0..n)] = true;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn blossom_matches_exhaustive_on_random_graphs(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = MatchingGraph::from_edges(n, &random_graph(&mut rng, n, 1.0)).unwrap();
        let (mut dec, brute) = (Decoder::new(&g), BruteForce::new(&g));
        for _ in 0..20 {
            let s = syndrome(&mut rng, n, BRUTE_FORCE_LIMIT);
            let (a, b) = (dec.decode(&s).unwrap(), brute.decode(&s).unwrap());
            prop_assert_eq!(a.weight, b.weight);
            prop_assert_eq!(a.prediction, b.prediction);
        }
    }

    #[test]
    fn power_of_two_rescaling_changes_nothing(seed in any::<u64>(), n in 2usize..30, k in -6i32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_graph(&mut rng, n, 1.0);
        let scaled: Vec<WeightedEdge> =
            edges.iter().map(|e| WeightedEdge { weight: e.weight * 2f64.powi(k), ..*e }).collect();
        let (g, h) = (MatchingGraph::from_edges(n, &edges).unwrap(), MatchingGraph::from_edges(n, &scaled).unwrap());
        for _ in 0..20 {
            let s = syndrome(&mut rng, n, 12);
            let (a, b) = (mwpm_decode(&g, &s).unwrap(), mwpm_decode(&h, &s).unwrap());
            prop_assert_eq!(a.prediction, b.prediction);
            prop_assert_eq!(a.weight * 2f64.powi(k), b.weight);
        }
    }

    #[test]
    fn general_rescaling_keeps_the_matching(seed in any::<u64>(), n in 2usize..30, c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_graph(&mut rng, n, 1.0);
        let scaled: Vec<WeightedEdge> = edges.iter().map(|e| WeightedEdge { weight: e.weight * c, ..*e }).collect();
        let (g, h) = (MatchingGraph::from_edges(n, &edges).unwrap(), MatchingGraph::from_edges(n, &scaled).unwrap());
        for _ in 0..20 {
            let s = syndrome(&mut rng, n, 12);
            let (a, b) = (mwpm_decode(&g, &s).unwrap(), mwpm_decode(&h, &s).unwrap());
            prop_assert_eq!(a.prediction, b.prediction);
            prop_assert!((a.weight * c - b.weight).abs() <= 1e-5 * b.weight.max(1.0));
        }
    }
}

#[test]
fn empty_syndrome_predicts_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = MatchingGraph::from_edges(10, &random_graph(&mut rng, 10, 1.0)).unwrap();
    let d = mwpm_decode(&g, &[false; 10]).unwrap();
    assert_eq!((d.prediction, d.weight), (0, 0.0));
}

fn dem_check(v: Variant, d: usize, p: f64, p_bell: f64, seed: u64) -> usize {
    let patch = build_patch(&PatchSpec::new(v, d, Basis::Z, p, p_bell)).unwrap();
    let g = MatchingGraph::from_dem(&build_dem(&patch.circuit).unwrap()).unwrap();
    let samples = sample_detectors(&patch.circuit, 4000, seed).unwrap();
    let (mut dec, brute) = (Decoder::new(&g), BruteForce::new(&g));
    let mut checked = 0;
    for shot in 0..samples.shots {
        let row = samples.detector_row(shot);
        if row.iter().filter(|&&b| b).count() > 8 {
            continue;
        }
        assert_eq!(dec.decode(row).unwrap().weight, brute.decode(row).unwrap().weight, "shot {shot}");
        checked += 1;
    }
    checked
}

#[test]
fn blossom_matches_exhaustive_on_memory_dems() {
    assert!(dem_check(Variant::Plain, 3, 3e-3, 0.0, 5) > 1000);
    assert!(dem_check(Variant::Plain, 5, 1e-3, 0.0, 6) > 1000);
    assert!(dem_check(Variant::Seam, 3, 1e-3, 0.01, 7) > 1000);
}
