mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seamqec::fit::*;

#[test]
fn bulk_parameters_recovered() {
    let truth = BulkParams::REFERENCE;
    let hits = (0..50)
        .filter(|&rep| {
            let r = fit_least_squares(&bulk_rows(rep, &truth), Model::Bulk, None, FitOptions::default()).unwrap();
            within_3_sigma(&r, &[truth.alpha, truth.p_th])
        })
        .count();
    assert!(hits >= 48, "{hits}/50");
}

#[test]
fn seam_parameters_recovered_from_table_start() {
    let model = Model::Seam(PseudoThreshold::Linear);
    let hits = (0..50)
        .filter(|&rep| {
            let r = fit_least_squares(&seam_rows(100 + rep), model, None, FitOptions::default()).unwrap();
            within_3_sigma(&r, &SEAM_TRUTH.to_vec())
        })
        .count();
    assert!(hits >= 48, "{hits}/50");
}

#[test]
fn optimum_beats_perturbations() {
    let rows = seam_rows(7);
    let model = Model::Seam(PseudoThreshold::Linear);
    let r = fit_least_squares(&rows, model, None, FitOptions::default()).unwrap();
    let kept = filter_rows(&rows, 5).rows;
    assert!((chi_square(model, &r.values, &kept) - r.chi2).abs() <= 1e-9 * r.chi2);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let q: Vec<f64> = r.values.iter().map(|v| v * (1.0 + rng.random_range(-0.1..0.1))).collect();
        assert!(chi_square(model, &q, &kept) >= r.chi2);
    }
}

#[test]
fn report_counts_filtered_rows() {
    let rows = seam_rows(3);
    let r = fit_least_squares(&rows, Model::Seam(PseudoThreshold::Linear), None, FitOptions::default()).unwrap();
    assert_eq!(r.dropped_distance, 64);
    assert_eq!(r.rows_total, rows.len());
    assert_eq!(r.rows_used + r.dropped_sigma + r.dropped_distance, rows.len());
    assert_eq!(r.dof, r.rows_used - 6);
    let json = serde_json::to_string(&r).unwrap();
    let back: FitReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

