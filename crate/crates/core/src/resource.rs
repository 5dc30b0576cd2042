//! Layout counting, gate failure and timing models, magic-state factories
//! and the algorithm-level sweep that picks a distance and a factory.

use crate::error::{Error, Result};
use crate::fit::{eval_bulk, eval_multiseam, BulkParams, PseudoThreshold, SeamParams};
use crate::par;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Distributed,
    Monolithic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Distributed => "distributed",
            Mode::Monolithic => "monolithic",
        })
    }
}

/// `(N_data, N_phys)` for one processor holding `2·n_rows` logical qubits.
/// The distributed layout carries one extra data column on the seam side
/// plus its ancillas.
pub fn layout_counts(d: usize, n_rows: usize, mode: Mode) -> (u64, u64) {
    let (d, n) = (d as u64, n_rows as u64);
    let mut data = (3 * d + 2) * ((d + 1) * n - 1) + (2 * d + 1) * (d + 1);
    let mut phys = 2 * data - 1;
    if mode == Mode::Distributed {
        data += d;
        phys = 2 * data - 1 + 2 * d;
    }
    (data, phys)
}

/// Fidelity of the Bell pair to `|Φ+⟩` under the five-outcome channel.
pub fn bell_fidelity(p_bell: f64) -> f64 {
    1.0 - 0.8 * p_bell
}

/// `28 (35 p'^3)^2` with `p' = 2p/3`: the best output a two-level
/// 15-to-1 then 8-to-CCZ factory can reach.
pub fn distillation_floor(p: f64) -> f64 {
    let q = 2.0 * p / 3.0;
    let l1 = 35.0 * q * q * q;
    28.0 * l1 * l1
}

/// Parameters of every logical error model used by the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub bulk: BulkParams,
    pub seam: SeamParams,
    pub pseudo_threshold: PseudoThreshold,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            bulk: BulkParams::REFERENCE,
            seam: SeamParams::TABLE,
            pseudo_threshold: PseudoThreshold::Squared,
        }
    }
}

/// Per-round terms and the resulting CNOT (or CX…X) failure probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnotFailure {
    pub p_logq: f64,
    pub p_xx: f64,
    pub p_zz: f64,
    pub p_cx: f64,
}

fn pow1m(q: f64, n: f64) -> f64 {
    (n * (-q).ln_1p()).exp()
}

/// CNOT failure over its `4d` rounds: idle noise on all `n_log` logical
/// qubits, `d` rounds of the XX routing patch crossing the whole chain and
/// `d` rounds of the ZZ patch spanning one processor height.
///
/// Monolithic mode has no seams, so the XX patch uses the bulk model with
/// the same length prefactor.
#[allow(clippy::too_many_arguments)]
pub fn cnot_failure(
    d: usize,
    p: f64,
    p_bell: f64,
    n_proc: usize,
    n_rows: usize,
    n_log: u64,
    model: &ErrorModel,
    mode: Mode,
) -> Result<CnotFailure> {
    for v in [p, p_bell] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidProbability(v));
        }
    }
    let bulk = eval_bulk(d, p, &model.bulk);
    let p_logq = 1.0 - pow1m(2.0 * bulk, n_log as f64);
    // (2d+2)·n_proc + (d+1)·n_rows is the routing patch length in units of d
    let span = (2 * d + 2) * n_proc + (d + 1) * n_rows;
    let p_xx = match mode {
        Mode::Distributed => {
            let n_seam = n_proc.saturating_sub(1);
            eval_multiseam(d, span, n_seam, p, p_bell, &model.seam, model.pseudo_threshold)? + bulk
        }
        Mode::Monolithic => bulk * span as f64 / d as f64 + bulk,
    };
    let p_zz = bulk * (1.0 + ((d + 1) * n_rows) as f64 / d as f64);
    let dd = d as f64;
    let keep = pow1m(p_logq, 4.0 * dd) * pow1m(p_xx, dd) * pow1m(p_zz, dd);
    Ok(CnotFailure { p_logq, p_xx, p_zz, p_cx: 1.0 - keep })
}

/// Toffoli by CCZ-state teleportation: three interaction CNOTs, then a
/// fixing step that idles for the reaction time and applies on average
/// 1.5 further CNOTs.
pub fn toffoli_failure(p_cx: f64, p_logq: f64, p_factory: f64, t_r: f64, t_c: f64) -> f64 {
    let p_interact = 1.0 - pow1m(p_cx, 3.0);
    let p_fixing = 1.0 - pow1m(p_logq, t_r / t_c) * pow1m(p_cx, 1.5);
    1.0 - (1.0 - p_factory) * (1.0 - p_interact) * (1.0 - p_fixing)
}

/// One row of the two-level synthillation factory table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorySpec {
    pub p_out: f64,
    pub qubitcycles: u64,
    pub qubits: u64,
    pub codecycles: f64,
    pub d_x: u32,
    pub d_z: u32,
    pub d_m: u32,
    pub d_x2: u32,
    pub d_z2: u32,
    pub d_m2: u32,
    pub n_l1: u32,
}

const fn factory(
    p_out: f64,
    qubitcycles: u64,
    qubits: u64,
    codecycles: f64,
    d: [u32; 6],
    n_l1: u32,
) -> FactorySpec {
    FactorySpec {
        p_out,
        qubitcycles,
        qubits,
        codecycles,
        d_x: d[0],
        d_z: d[1],
        d_m: d[2],
        d_x2: d[3],
        d_z2: d[4],
        d_m2: d[5],
        n_l1,
    }
}

/// Factories at p = 1e-3, best output first.
pub const FACTORIES: [FactorySpec; 8] = [
    factory(2.1e-14, 11_394_367, 85_436, 133.4, [21, 11, 11, 35, 21, 21], 4),
    factory(3.0e-14, 8_823_434, 80_700, 109.3, [21, 9, 9, 35, 21, 21], 4),
    factory(9.9e-14, 8_347_167, 76_344, 109.3, [21, 9, 9, 35, 19, 19], 4),
    factory(2.1e-13, 7_620_887, 69_716, 109.3, [19, 9, 9, 33, 19, 19], 4),
    factory(6.6e-13, 7_327_490, 67_032, 109.3, [19, 9, 9, 31, 19, 19], 4),
    factory(1.6e-12, 6_931_679, 63_424, 109.3, [17, 9, 9, 31, 19, 19], 4),
    factory(2.7e-12, 6_896_807, 63_092, 109.3, [19, 9, 9, 31, 17, 17], 4),
    factory(8.1e-12, 6_229_603, 57_000, 109.3, [17, 9, 9, 29, 17, 17], 4),
];

/// Gate counts of one algorithm run. The counts are configuration, not
/// derived here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmCost {
    pub label: String,
    pub n_toffoli: f64,
    pub n_cx: f64,
    pub n_log: u64,
    #[serde(default)]
    pub p_classical: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub d: usize,
    pub n_rows: usize,
    pub n_proc: usize,
    pub n_factory_proc: usize,
    pub t_c: f64,
    pub t_r: f64,
    pub mode: Mode,
}

impl LayoutConfig {
    pub fn logical_per_proc(&self) -> usize {
        2 * self.n_rows
    }

    pub fn n_seam(&self) -> usize {
        self.n_proc.saturating_sub(1)
    }

    /// Smallest layout for `n_log` qubits. Distributed processors are
    /// sized so that a factory fits inside one; monolithic puts every row
    /// on a single chip. Two factories either way.
    pub fn for_cost(d: usize, n_log: u64, factory: &FactorySpec, timing: Timing, mode: Mode) -> LayoutConfig {
        let (n_rows, n_proc) = match mode {
            Mode::Distributed => {
                let n_rows = choose_n_rows(d, factory);
                (n_rows, (n_log as usize).div_ceil(2 * n_rows))
            }
            Mode::Monolithic => ((n_log as usize).div_ceil(2).max(1), 1),
        };
        LayoutConfig { d, n_rows, n_proc, n_factory_proc: 2, t_c: timing.t_c, t_r: timing.t_r, mode }
    }
}

/// Smallest `n_rows` whose distributed processor holds at least as many
/// qubits as the factory.
pub fn choose_n_rows(d: usize, factory: &FactorySpec) -> usize {
    let mut n = 1;
    while layout_counts(d, n, Mode::Distributed).1 < factory.qubits {
        n += 1;
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Syndrome extraction cycle (s).
    pub t_c: f64,
    /// Measurement plus classical reaction (s).
    pub t_r: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing { t_c: 1e-6, t_r: 1e-5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub cost_label: String,
    pub layout: LayoutConfig,
    pub factory: usize,
    pub p_out: f64,
    pub qubits_per_proc: u64,
    pub n_phys: u64,
    pub p_cx: f64,
    pub p_ccx: f64,
    pub duration: f64,
    pub p_fail: f64,
    pub expected_duration: f64,
    pub metric: f64,
}

/// Evaluates one configuration. `factory` indexes into `factories`.
pub fn estimate_algorithm(
    cost: &AlgorithmCost,
    layout: &LayoutConfig,
    factories: &[FactorySpec],
    factory: usize,
    p: f64,
    p_bell: f64,
    model: &ErrorModel,
) -> Result<EstimateResult> {
    let f = factories.get(factory).ok_or_else(|| Error::InvalidSpec(format!("no factory {factory}")))?;
    let cx = cnot_failure(layout.d, p, p_bell, layout.n_proc, layout.n_rows, cost.n_log, model, layout.mode)?;
    let p_ccx = toffoli_failure(cx.p_cx, cx.p_logq, f.p_out, layout.t_r, layout.t_c);
    let t_cx = 4.0 * layout.d as f64 * layout.t_c;
    let duration = cost.n_toffoli * (4.5 * t_cx + layout.t_r) + cost.n_cx * t_cx;
    let ln_success =
        cost.n_toffoli * (-p_ccx).ln_1p() + cost.n_cx * (-cx.p_cx).ln_1p() + (-cost.p_classical).ln_1p();
    let p_success = ln_success.exp();
    if !(p_success > 0.0) {
        return Err(Error::Infeasible(format!(
            "success probability underflows at d = {}, factory {}",
            layout.d,
            factory + 1
        )));
    }
    let qubits_per_proc = layout_counts(layout.d, layout.n_rows, layout.mode).1;
    let n_phys = layout.n_proc as u64 * qubits_per_proc + layout.n_factory_proc as u64 * f.qubits;
    let expected_duration = duration / p_success;
    Ok(EstimateResult {
        cost_label: cost.label.clone(),
        layout: *layout,
        factory,
        p_out: f.p_out,
        qubits_per_proc,
        n_phys,
        p_cx: cx.p_cx,
        p_ccx,
        duration,
        p_fail: -ln_success.exp_m1(),
        expected_duration,
        metric: expected_duration * n_phys as f64,
    })
}

/// Everything `optimize_configuration` searches over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub costs: Vec<AlgorithmCost>,
    pub factories: Vec<FactorySpec>,
    pub d_min: usize,
    pub d_max: usize,
    pub timing: Timing,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub best: EstimateResult,
    /// Every feasible point, in (cost, d, factory) order.
    pub points: Vec<EstimateResult>,
}

fn better(a: &EstimateResult, b: &EstimateResult) -> bool {
    (a.metric, a.layout.d, a.p_out) < (b.metric, b.layout.d, b.p_out)
}

/// Exhaustive sweep over odd distances, factories and cost variants.
/// Ties go to the smaller distance, then the better factory.
pub fn optimize_configuration(space: &SearchSpace, p: f64, p_bell: f64, model: &ErrorModel, threads: usize) -> Result<Sweep> {
    let ds: Vec<usize> = (space.d_min..=space.d_max).filter(|d| d % 2 == 1).collect();
    let nf = space.factories.len();
    let total = space.costs.len() * ds.len() * nf;
    if total == 0 {
        return Err(Error::InvalidSpec("empty search space".into()));
    }
    let per_cost = ds.len() * nf;
    let out = par::map_blocks(
        total,
        threads,
        || (),
        |_, i| {
            let cost = &space.costs[i / per_cost];
            let d = ds[(i % per_cost) / nf];
            let fi = i % nf;
            let layout = LayoutConfig::for_cost(d, cost.n_log, &space.factories[fi], space.timing, space.mode);
            estimate_algorithm(cost, &layout, &space.factories, fi, p, p_bell, model)
        },
    );
    let mut points = Vec::new();
    for r in out {
        match r {
            Ok(e) => points.push(e),
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let best = points
        .iter()
        .fold(None::<&EstimateResult>, |acc, e| match acc {
            Some(a) if !better(e, a) => Some(a),
            _ => Some(e),
        })
        .cloned()
        .ok_or_else(|| Error::Infeasible(format!("no feasible configuration at p = {p}, p_bell = {p_bell}")))?;
    Ok(Sweep { best, points })
}

/// `N_Toffoli` such that the optimized monolithic column of `config`
/// takes `target` seconds. The first cost variant is scaled, keeping its
/// CNOT to Toffoli ratio.
pub fn calibrate_toffoli_count(target: f64, config: &EstimateConfig, threads: usize) -> Result<f64> {
    let base = config.costs.first().ok_or_else(|| Error::InvalidSpec("no cost variant".into()))?;
    let ratio = if base.n_toffoli > 0.0 { base.n_cx / base.n_toffoli } else { 0.0 };
    let mut space = config.space(Mode::Monolithic);
    let mut expected = |n: f64| -> Result<f64> {
        space.costs = vec![AlgorithmCost { n_toffoli: n, n_cx: ratio * n, ..base.clone() }];
        Ok(optimize_configuration(&space, config.p, 0.0, &config.model, threads)?.best.expected_duration)
    };
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while expected(hi)? < target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if expected(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Input of the estimate command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub p: f64,
    pub p_bell: Vec<f64>,
    pub costs: Vec<AlgorithmCost>,
    pub d_min: usize,
    pub d_max: usize,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub model: ErrorModel,
    #[serde(default = "default_true")]
    pub monolithic: bool,
    /// Defaults to the embedded table.
    #[serde(default)]
    pub factories: Option<Vec<FactorySpec>>,
}

fn default_true() -> bool {
    true
}

impl EstimateConfig {
    /// Shipped configuration with the calibrated gate counts.
    pub fn calibrated() -> EstimateConfig {
        serde_json::from_str(CALIBRATED).expect("embedded config parses")
    }

    pub fn factories(&self) -> Vec<FactorySpec> {
        self.factories.clone().unwrap_or_else(|| FACTORIES.to_vec())
    }

    pub fn space(&self, mode: Mode) -> SearchSpace {
        SearchSpace {
            costs: self.costs.clone(),
            factories: self.factories(),
            d_min: self.d_min,
            d_max: self.d_max,
            timing: self.timing,
            mode,
        }
    }
}

pub const CALIBRATED: &str = include_str!("../data/rsa2048_calibrated.json");

/// One column of the resource table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub mode: Mode,
    pub p_bell: f64,
    pub cost: String,
    pub d: usize,
    pub logical_per_proc: usize,
    pub qubits_per_proc: u64,
    pub n_proc: usize,
    pub n_factory_proc: usize,
    pub total_qubits: u64,
    pub duration_s: f64,
    pub duration: String,
    pub factory: usize,
    pub p_out: f64,
    pub p_fail: f64,
    pub space_overhead: Option<f64>,
    pub time_overhead: Option<f64>,
}

/// `23d15h` style rounding to the hour.
pub fn format_duration(seconds: f64) -> String {
    let hours = (seconds / 3600.0).round() as u64;
    format!("{}d{}h", hours / 24, hours % 24)
}

/// Monolithic column (if enabled) followed by one distributed column per
/// `p_Bell`. Overheads are relative to the distributed `p_Bell = 0`
/// column when present.
pub fn resource_table(config: &EstimateConfig, threads: usize) -> Result<Vec<TableRow>> {
    if config.factories().is_empty() {
        return Err(Error::InvalidSpec("factory list is empty".into()));
    }
    let mut cols = Vec::new();
    if config.monolithic {
        let s = optimize_configuration(&config.space(Mode::Monolithic), config.p, 0.0, &config.model, threads)?;
        cols.push((0.0, s.best));
    }
    for &pb in &config.p_bell {
        let s = optimize_configuration(&config.space(Mode::Distributed), config.p, pb, &config.model, threads)?;
        cols.push((pb, s.best));
    }
    let reference = cols
        .iter()
        .find(|(pb, e)| *pb == 0.0 && e.layout.mode == Mode::Distributed)
        .map(|(_, e)| (e.n_phys as f64, e.expected_duration));
    Ok(cols
        .into_iter()
        .map(|(pb, e)| {
            let rel = |x: f64, r: f64| x / r - 1.0;
            let distributed = e.layout.mode == Mode::Distributed;
            TableRow {
                mode: e.layout.mode,
                p_bell: pb,
                cost: e.cost_label.clone(),
                d: e.layout.d,
                logical_per_proc: e.layout.logical_per_proc(),
                qubits_per_proc: if distributed { e.qubits_per_proc } else { e.n_phys },
                n_proc: e.layout.n_proc,
                n_factory_proc: e.layout.n_factory_proc,
                total_qubits: e.n_phys,
                duration_s: e.expected_duration,
                duration: format_duration(e.expected_duration),
                factory: e.factory + 1,
                p_out: e.p_out,
                p_fail: e.p_fail,
                space_overhead: reference.filter(|_| distributed).map(|(q, _)| rel(e.n_phys as f64, q)),
                time_overhead: reference.filter(|_| distributed).map(|(_, t)| rel(e.expected_duration, t)),
            }
        })
        .collect())
}

pub fn write_table_csv<W: std::io::Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_processor_counts() {
        assert_eq!(layout_counts(35, 11, Mode::Distributed).1, 89_781);
        assert_eq!(layout_counts(41, 8, Mode::Distributed).1, 90_885);
        assert_eq!(layout_counts(49, 6, Mode::Distributed).1, 99_197);
    }

    #[test]
    fn rows_chosen_to_fit_factory() {
        assert_eq!(choose_n_rows(35, &FACTORIES[0]), 11);
        assert_eq!(choose_n_rows(41, &FACTORIES[1]), 8);
        assert_eq!(choose_n_rows(49, &FACTORIES[0]), 6);
    }

    #[test]
    fn cnot_example() {
        let m = ErrorModel { pseudo_threshold: PseudoThreshold::Linear, ..ErrorModel::default() };
        let c = cnot_failure(3, 1e-3, 0.01, 2, 1, 4, &m, Mode::Distributed).unwrap();
        assert!((c.p_logq - 7.23e-3).abs() < 1e-5, "{}", c.p_logq);
        assert!((c.p_cx - 0.111).abs() < 1e-3, "{}", c.p_cx);
        let c2 = cnot_failure(3, 1e-3, 0.02, 2, 1, 4, &m, Mode::Distributed).unwrap();
        assert!(c2.p_cx > c.p_cx);
        let z = cnot_failure(3, 0.0, 0.0, 2, 1, 4, &m, Mode::Distributed).unwrap();
        assert_eq!(z.p_cx, 0.0);
    }

    #[test]
    fn toffoli_example() {
        assert!((toffoli_failure(0.1, 0.0, 0.0, 0.0, 1e-6) - 0.37758).abs() < 1e-4);
        assert_eq!(toffoli_failure(0.0, 0.0, 0.0, 1e-5, 1e-6), 0.0);
        assert_eq!(toffoli_failure(0.0, 0.0, 1.0, 1e-5, 1e-6), 1.0);
    }

    #[test]
    fn single_toffoli_duration() {
        let cost = AlgorithmCost { label: "one".into(), n_toffoli: 1.0, n_cx: 0.0, n_log: 4, p_classical: 0.0 };
        let ideal = [FactorySpec { p_out: 0.0, ..FACTORIES[0] }];
        let layout = LayoutConfig::for_cost(35, 4, &ideal[0], Timing::default(), Mode::Distributed);
        let e = estimate_algorithm(&cost, &layout, &ideal, 0, 0.0, 0.0, &ErrorModel::default()).unwrap();
        assert!((e.duration - 6.40e-4).abs() < 1e-12);
        assert_eq!(e.expected_duration, e.duration);
        assert_eq!(e.metric, e.expected_duration * e.n_phys as f64);
    }

    #[test]
    fn calibrated_config_parses() {
        let c = EstimateConfig::calibrated();
        assert_eq!(c.costs.len(), 1);
        assert_eq!(c.costs[0].n_log, 8283);
    }

    #[test]
    fn shipped_count_matches_back_solve() {
        let c = EstimateConfig::calibrated();
        let n = calibrate_toffoli_count((23.0 * 24.0 + 11.0) * 3600.0, &c, 1).unwrap();
        assert!((c.costs[0].n_toffoli / n - 1.0).abs() < 1e-3, "{n}");
    }

    #[test]
    fn floor_scales_as_sixth_power() {
        let f = distillation_floor(1e-3);
        assert!((2.9e-15..=3.1e-15).contains(&f));
        assert!((distillation_floor(2e-3) / f - 64.0).abs() < 1e-9);
        assert!(FACTORIES.iter().all(|x| x.p_out > f));
    }

    #[test]
    fn durations_format_to_the_hour() {
        assert_eq!(format_duration((23.0 * 24.0 + 15.0) * 3600.0 + 100.0), "23d15h");
    }
}
