//! Logical error rate ansätze and their Levenberg–Marquardt fit.
//!
//! The bulk model is `α (p/p_th)^((d+1)/2)`. The seam model adds a pure
//! Bell term and a mixed sum whose Bell ratio is inflated by bulk noise
//! through the pseudo-threshold `p_Bell**`.

use crate::error::{Error, Result};
use crate::sampler::SampleRow;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkParams {
    pub alpha: f64,
    pub p_th: f64,
}

impl BulkParams {
    /// Bulk fit quoted for the plain patch.
    pub const REFERENCE: BulkParams = BulkParams { alpha: 0.05, p_th: 7.43e-3 };
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeamParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha_c: f64,
    pub p_star: f64,
    pub p_bell_star: f64,
}

impl SeamParams {
    /// Covariance-based fit table values.
    pub const TABLE: SeamParams = SeamParams {
        alpha1: 0.09789,
        alpha2: 0.04507,
        alpha3: 0.05326,
        alpha_c: 0.2057,
        p_star: 0.007176,
        p_bell_star: 0.2983,
    };

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.alpha1, self.alpha2, self.alpha3, self.alpha_c, self.p_star, self.p_bell_star]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        SeamParams { alpha1: v[0], alpha2: v[1], alpha3: v[2], alpha_c: v[3], p_star: v[4], p_bell_star: v[5] }
    }
}

/// How bulk noise lowers the seam threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoThreshold {
    /// `p_Bell** = p_Bell* / (1 + α_c/(1−√(p/p*)))`
    #[default]
    Linear,
    /// Same bracket squared.
    Squared,
}

pub fn eval_bulk(d: usize, p: f64, params: &BulkParams) -> f64 {
    params.alpha * (p / params.p_th).powf((d as f64 + 1.0) / 2.0)
}

/// `p_Bell**` at bulk rate `p`.
pub fn pseudo_threshold(p: f64, params: &SeamParams, form: PseudoThreshold) -> Result<f64> {
    if !(p >= 0.0 && p < params.p_star) {
        return Err(Error::InvalidSpec(format!("p = {p} must lie in [0, p* = {})", params.p_star)));
    }
    let bracket = 1.0 + params.alpha_c / (1.0 - (p / params.p_star).sqrt());
    Ok(match form {
        PseudoThreshold::Linear => params.p_bell_star / bracket,
        PseudoThreshold::Squared => params.p_bell_star / (bracket * bracket),
    })
}

fn mixed_sum(d: usize, p: f64, p_bell: f64, params: &SeamParams, form: PseudoThreshold) -> Result<f64> {
    let b = p_bell / pseudo_threshold(p, params, form)?;
    let q = p / params.p_star;
    Ok((1..=d).map(|i| b.powf(i as f64 / 2.0) * q.powf((d + 1 - i) as f64 / 2.0)).sum())
}

/// X-type logical error rate per round of a patch with one seam.
pub fn eval_seam(d: usize, p: f64, p_bell: f64, params: &SeamParams, form: PseudoThreshold) -> Result<f64> {
    eval_multiseam(d, d, 1, p, p_bell, params, form)
}

/// A `d_x × d_z` patch crossed by `n_seam` well separated seams.
pub fn eval_multiseam(
    d_x: usize,
    d_z: usize,
    n_seam: usize,
    p: f64,
    p_bell: f64,
    params: &SeamParams,
    form: PseudoThreshold,
) -> Result<f64> {
    let e = (d_x as f64 + 1.0) / 2.0;
    let n = n_seam as f64;
    let bell = params.alpha1 * n * (p_bell / params.p_bell_star).powf(e);
    let bulk = params.alpha2 * (d_z as f64 / d_x as f64) * (p / params.p_star).powf(e);
    let mixed = params.alpha3 * n * mixed_sum(d_x, p, p_bell, params, form)?;
    Ok(bell + bulk + mixed)
}

/// One measured point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub d: usize,
    pub p: f64,
    pub p_bell: f64,
    pub p_l: f64,
    pub sigma: f64,
}

/// Which memory experiments feed a fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSelection {
    /// `|0⟩` memories, i.e. `P_L^X`.
    #[default]
    Z,
    X,
    /// `P_L^X + P_L^Z`, with σ added in quadrature. Needs both bases at
    /// every point.
    Combined,
}

/// Turns simulation rows into fit rows, keeping input order.
pub fn rows_from_samples(rows: &[SampleRow], basis: BasisSelection) -> Result<Vec<FitRow>> {
    let fit_row = |r: &SampleRow| FitRow { d: r.d, p: r.p, p_bell: r.p_bell, p_l: r.p_l, sigma: r.sigma };
    let pick = |b: &str| rows.iter().filter(|r| r.basis == b).map(fit_row).collect();
    match basis {
        BasisSelection::Z => Ok(pick("Z")),
        BasisSelection::X => Ok(pick("X")),
        BasisSelection::Combined => {
            let key = |r: &SampleRow| (r.variant.clone(), r.d, r.p.to_bits(), r.p_bell.to_bits());
            let mut out = Vec::new();
            for z in rows.iter().filter(|r| r.basis == "Z") {
                let x = rows.iter().find(|r| r.basis == "X" && key(r) == key(z)).ok_or_else(|| {
                    Error::InsufficientData(format!("no X-basis row for d={} p={} p_bell={}", z.d, z.p, z.p_bell))
                })?;
                out.push(FitRow { p_l: z.p_l + x.p_l, sigma: z.sigma.hypot(x.sigma), ..fit_row(z) });
            }
            Ok(out)
        }
    }
}

/// Rows kept for fitting and the reasons others were dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Filtered {
    pub rows: Vec<FitRow>,
    pub dropped_sigma: usize,
    pub dropped_distance: usize,
}

/// Keeps rows with `σ < p̂_L/2` and `d ≥ min_d`. A row failing both rules
/// is counted under the distance rule.
pub fn filter_rows(rows: &[FitRow], min_d: usize) -> Filtered {
    let mut out = Filtered { rows: Vec::new(), dropped_sigma: 0, dropped_distance: 0 };
    for r in rows {
        if r.d < min_d {
            out.dropped_distance += 1;
        } else if !(r.sigma < r.p_l / 2.0) {
            out.dropped_sigma += 1;
        } else {
            out.rows.push(*r);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Bulk,
    Seam(PseudoThreshold),
}

impl Model {
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            Model::Bulk => &["alpha", "p_th"],
            Model::Seam(_) => &["alpha1", "alpha2", "alpha3", "alpha_c", "p_star", "p_bell_star"],
        }
    }

    /// Model value at `params` (linear scale); `None` outside the domain.
    pub fn eval(&self, params: &[f64], r: &FitRow) -> Option<f64> {
        let v = match self {
            Model::Bulk => eval_bulk(r.d, r.p, &BulkParams { alpha: params[0], p_th: params[1] }),
            Model::Seam(form) => eval_seam(r.d, r.p, r.p_bell, &SeamParams::from_slice(params), *form).ok()?,
        };
        v.is_finite().then_some(v)
    }

    /// Starting point: a log-linear regression for the bulk model, the
    /// table values for the seam model.
    pub fn initial_guess(&self, rows: &[FitRow]) -> Vec<f64> {
        match self {
            Model::Bulk => bulk_regression(rows).unwrap_or(vec![BulkParams::REFERENCE.alpha, BulkParams::REFERENCE.p_th]),
            Model::Seam(_) => SeamParams::TABLE.to_vec(),
        }
    }
}

/// `ln p_L − e ln p = ln α − e ln p_th` with `e = (d+1)/2`, weighted by the
/// relative error of each point.
fn bulk_regression(rows: &[FitRow]) -> Option<Vec<f64>> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        if r.p_l <= 0.0 || r.sigma <= 0.0 {
            continue;
        }
        let e = (r.d as f64 + 1.0) / 2.0;
        let y = r.p_l.ln() - e * r.p.ln();
        let w = (r.p_l / r.sigma).powi(2);
        sw += w;
        sx += w * e;
        sy += w * y;
        sxx += w * e * e;
        sxy += w * e * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() <= 1e-12 * sw * sxx {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let icept = (sy - slope * sx) / sw;
    Some(vec![icept.exp(), (-slope).exp()])
}

/// Outcome of a fit; uncertainties are one standard deviation on the
/// linear scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: Model,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub rows_total: usize,
    pub rows_used: usize,
    pub dropped_sigma: usize,
    pub dropped_distance: usize,
    pub iterations: usize,
}

impl FitReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.sigmas[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub min_d: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { min_d: 5, max_iterations: 200, tolerance: 1e-10 }
    }
}

/// χ² of `params` (linear scale) over `rows`.
pub fn chi_square(model: Model, params: &[f64], rows: &[FitRow]) -> f64 {
    rows.iter()
        .map(|r| match model.eval(params, r) {
            Some(f) => ((r.p_l - f) / r.sigma).powi(2),
            None => f64::INFINITY,
        })
        .sum()
}

fn residuals(model: Model, theta: &[f64], rows: &[FitRow]) -> Option<DVector<f64>> {
    let params: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    let mut r = DVector::zeros(rows.len());
    for (i, row) in rows.iter().enumerate() {
        r[i] = (row.p_l - model.eval(&params, row)?) / row.sigma;
    }
    Some(r)
}

fn jacobian(model: Model, theta: &[f64], rows: &[FitRow]) -> Option<DMatrix<f64>> {
    let h = 1e-6;
    let mut j = DMatrix::zeros(rows.len(), theta.len());
    let mut t = theta.to_vec();
    for k in 0..theta.len() {
        t[k] = theta[k] + h;
        let up = residuals(model, &t, rows)?;
        t[k] = theta[k] - h;
        let down = residuals(model, &t, rows)?;
        t[k] = theta[k];
        j.set_column(k, &((up - down) / (2.0 * h)));
    }
    Some(j)
}

/// Names the parameters dominating the null direction of `jtj`.
fn degenerate_combination(jtj: &DMatrix<f64>, names: &[&str]) -> String {
    let eig = SymmetricEigen::new(jtj.clone());
    let (k, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| {
        if v < acc.1 {
            (i, v)
        } else {
            acc
        }
    });
    let v = eig.eigenvectors.column(k);
    let mut parts: Vec<String> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        if v[i].abs() > 0.1 {
            parts.push(format!("{:+.3}·ln {name}", v[i]));
        }
    }
    parts.join(" ")
}

fn is_singular(jtj: &DMatrix<f64>) -> bool {
    let eig = SymmetricEigen::new(jtj.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    !(max > 0.0) || min <= max * 1e-14
}

/// Minimises χ² over the log parameters by Levenberg–Marquardt.
/// `start` overrides [`Model::initial_guess`].
pub fn fit_least_squares(rows: &[FitRow], model: Model, start: Option<&[f64]>, opts: FitOptions) -> Result<FitReport> {
    let filtered = filter_rows(rows, opts.min_d);
    let data = &filtered.rows;
    let names = model.parameter_names();
    let np = names.len();
    if data.len() < np {
        return Err(Error::InsufficientData(format!(
            "{} rows left after filtering, {} parameters to fit",
            data.len(),
            np
        )));
    }
    let init = start.map(<[f64]>::to_vec).unwrap_or_else(|| model.initial_guess(data));
    if init.len() != np || init.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidSpec(format!("starting point {init:?} must be {np} positive values")));
    }
    let mut theta: Vec<f64> = init.iter().map(|v| v.ln()).collect();
    let mut r = residuals(model, &theta, data)
        .ok_or_else(|| Error::InvalidSpec("starting point outside the model domain".into()))?;
    let mut chi2 = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while !converged && iterations < opts.max_iterations && chi2 > 0.0 {
        iterations += 1;
        let j = jacobian(model, &theta, data)
            .ok_or_else(|| Error::InvalidSpec("model left its domain".into()))?;
        let jtj = j.transpose() * &j;
        if is_singular(&jtj) {
            return Err(Error::Singular(degenerate_combination(&jtj, names)));
        }
        let g = j.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)];
            }
            let step = match a.cholesky() {
                Some(c) => c.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            match residuals(model, &trial, data) {
                Some(rt) if rt.norm_squared() < chi2 => {
                    let new = rt.norm_squared();
                    let rel = (chi2 - new) / chi2;
                    theta = trial;
                    r = rt;
                    chi2 = new;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    converged = rel < opts.tolerance;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            break;
        }
    }
    let j = jacobian(model, &theta, data).ok_or_else(|| Error::InvalidSpec("model left its domain".into()))?;
    let jtj = j.transpose() * &j;
    if is_singular(&jtj) {
        return Err(Error::Singular(degenerate_combination(&jtj, names)));
    }
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::Singular(degenerate_combination(&(j.transpose() * &j), names)))?;
    let values: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    let sigmas: Vec<f64> = (0..np).map(|k| values[k] * cov[(k, k)].max(0.0).sqrt()).collect();
    Ok(FitReport {
        model,
        names: names.iter().map(|s| s.to_string()).collect(),
        values,
        sigmas,
        chi2,
        dof: data.len() - np,
        rows_total: rows.len(),
        rows_used: data.len(),
        dropped_sigma: filtered.dropped_sigma,
        dropped_distance: filtered.dropped_distance,
        iterations,
    })
}
