use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use seamqec::decoder::{BruteForce, Decoder, MatchingGraph, BRUTE_FORCE_LIMIT};
use seamqec::dem::build_dem;
use seamqec::fit::{fit_least_squares, rows_from_samples, BasisSelection, FitOptions, Model, PseudoThreshold};
use seamqec::patch::{build_patch, PatchSpec};
use seamqec::resource::{resource_table, write_table_csv, EstimateConfig};
use seamqec::sampler::{estimate_patch, read_sample_csv, sample_detectors, write_sample_csv, SampleOptions, SampleRow};
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

mod grid;

#[derive(Parser)]
#[command(name = "seamqec", version, about = "Distributed surface code simulation, fitting and resource estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Serialize)]
struct Common {
    /// Output file. A `<out>.manifest.json` is written beside it.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads, 0 for all cores.
    #[arg(long, env = "SEAMQEC_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sample and decode every point of a parameter grid.
    Simulate {
        /// Grid JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the grid's shot count.
        #[arg(long)]
        shots: Option<u64>,
        /// Overrides the grid's master seed. Point i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Least-squares fit of an ansatz to simulation output.
    Fit {
        /// CSV written by `simulate`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelArg::Bulk)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = BasisArg::Z)]
        basis: BasisArg,
        /// Smallest distance kept.
        #[arg(long, default_value_t = 5)]
        min_d: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Resource table for the configured sweep.
    Estimate {
        /// Estimate JSON; the shipped calibration when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Writes the detector error model of one patch.
    Dem {
        /// Patch JSON.
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compares the matching decoder with exhaustive search on sampled
    /// syndromes.
    DecodeTest {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Syndromes with more defects are skipped.
        #[arg(long, default_value_t = 8)]
        max_defects: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    Bulk,
    Seam,
    SeamSquared,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BasisArg {
    Z,
    X,
    Combined,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    version: &'static str,
    outputs: Vec<PathBuf>,
    wall_clock_s: f64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(f)
        .map_err(seamqec::Error::from)
        .with_context(|| format!("parsing {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_manifest(
    common: &Common,
    command: &str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    start: Instant,
) -> anyhow::Result<()> {
    let mut path = common.out.clone().into_os_string();
    path.push(".manifest.json");
    let m = Manifest {
        command,
        parameters,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        outputs: vec![common.out.clone()],
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let mut w = create(Path::new(&path))?;
    serde_json::to_writer_pretty(&mut w, &m)?;
    Ok(())
}

fn simulate(spec: &Path, shots: Option<u64>, seed: Option<u64>, common: &Common) -> anyhow::Result<()> {
    let start = Instant::now();
    let grid: grid::Grid = read_json(spec)?;
    let shots = shots.or(grid.shots).unwrap_or(10_000);
    let seed = seed.or(grid.seed).unwrap_or(0);
    let mut rows = Vec::new();
    for (i, s) in grid.points().iter().enumerate() {
        let opts = SampleOptions { shots, seed: seed.wrapping_add(i as u64), threads: common.threads };
        let stats = estimate_patch(s, opts).with_context(|| format!("point {i} ({s:?})"))?;
        rows.push(SampleRow::new(s, &stats));
    }
    write_sample_csv(create(&common.out)?, &rows)?;
    let params = serde_json::json!({ "grid": grid, "shots": shots, "spec": spec });
    write_manifest(common, "simulate", params, Some(seed), start)
}

fn fit(data: &Path, model: ModelArg, basis: BasisArg, min_d: usize, common: &Common) -> anyhow::Result<()> {
    let start = Instant::now();
    let f = File::open(data).with_context(|| format!("opening {}", data.display()))?;
    let samples = read_sample_csv(f)?;
    let basis_sel = match basis {
        BasisArg::Z => BasisSelection::Z,
        BasisArg::X => BasisSelection::X,
        BasisArg::Combined => BasisSelection::Combined,
    };
    let rows = rows_from_samples(&samples, basis_sel)?;
    let m = match model {
        ModelArg::Bulk => Model::Bulk,
        ModelArg::Seam => Model::Seam(PseudoThreshold::Linear),
        ModelArg::SeamSquared => Model::Seam(PseudoThreshold::Squared),
    };
    let report = fit_least_squares(&rows, m, None, FitOptions { min_d, ..FitOptions::default() })?;
    let mut w = create(&common.out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    let params = serde_json::json!({ "data": data, "model": model, "basis": basis, "min_d": min_d });
    write_manifest(common, "fit", params, None, start)
}

fn estimate(config: Option<&Path>, common: &Common) -> anyhow::Result<()> {
    let start = Instant::now();
    let cfg = match config {
        Some(p) => read_json(p)?,
        None => EstimateConfig::calibrated(),
    };
    let rows = resource_table(&cfg, common.threads)?;
    write_table_csv(&rows, create(&common.out)?)?;
    write_manifest(common, "estimate", serde_json::to_value(&cfg)?, None, start)
}

fn dem(spec: &Path, common: &Common) -> anyhow::Result<()> {
    let start = Instant::now();
    let s: PatchSpec = read_json(spec)?;
    let patch = build_patch(&s)?;
    let dem = build_dem(&patch.circuit)?;
    std::fs::write(&common.out, dem.to_text()).with_context(|| format!("writing {}", common.out.display()))?;
    write_manifest(common, "dem", serde_json::to_value(&s)?, None, start)
}

#[derive(Serialize)]
struct DecodeSummary {
    shots: u64,
    checked: u64,
    skipped: u64,
    mismatches: u64,
}

fn decode_test(spec: &Path, shots: u64, seed: u64, max_defects: usize, common: &Common) -> anyhow::Result<()> {
    let start = Instant::now();
    if max_defects > BRUTE_FORCE_LIMIT {
        bail!(seamqec::Error::InvalidSpec(format!("--max-defects is capped at {BRUTE_FORCE_LIMIT}")));
    }
    let s: PatchSpec = read_json(spec)?;
    let patch = build_patch(&s)?;
    let g = MatchingGraph::from_dem(&build_dem(&patch.circuit)?)?;
    let samples = sample_detectors(&patch.circuit, shots as usize, seed)?;
    let (mut dec, brute) = (Decoder::new(&g), BruteForce::new(&g));
    let mut sum = DecodeSummary { shots, checked: 0, skipped: 0, mismatches: 0 };
    for shot in 0..samples.shots {
        let row = samples.detector_row(shot);
        if row.iter().filter(|&&b| b).count() > max_defects {
            sum.skipped += 1;
            continue;
        }
        let (a, b) = (dec.decode(row)?, brute.decode(row)?);
        sum.checked += 1;
        if (a.weight - b.weight).abs() > 1e-9 * b.weight.abs().max(1.0) {
            sum.mismatches += 1;
        }
    }
    let mut w = create(&common.out)?;
    serde_json::to_writer_pretty(&mut w, &sum)?;
    let params = serde_json::json!({ "patch": s, "shots": shots, "max_defects": max_defects });
    write_manifest(common, "decode-test", params, Some(seed), start)?;
    if sum.mismatches > 0 {
        bail!(seamqec::Error::Infeasible(format!("{} of {} syndromes decoded to a heavier matching", sum.mismatches, sum.checked)));
    }
    Ok(())
}

/// 2 for bad input, 3 when the computation itself is infeasible or
/// degenerate.
fn exit_code(e: &anyhow::Error) -> u8 {
    use seamqec::Error as E;
    match e.chain().find_map(|c| c.downcast_ref::<E>()) {
        Some(E::Singular(_) | E::Infeasible(_) | E::InsufficientData(_) | E::Disconnected(_) | E::Decomposition(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Simulate { spec, shots, seed, common } => simulate(spec, *shots, *seed, common),
        Command::Fit { data, model, basis, min_d, common } => fit(data, *model, *basis, *min_d, common),
        Command::Estimate { config, common } => estimate(config.as_deref(), common),
        Command::Dem { spec, common } => dem(spec, common),
        Command::DecodeTest { spec, shots, seed, max_defects, common } => {
            decode_test(spec, *shots, *seed, *max_defects, common)
        }
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
