//! Experiment orchestration behind the `bebm` binary. Every command reads a
//! recipe, writes CSV/JSON (and optionally SVG) into an output directory
//! under content-addressed names, and returns the paths it wrote.

pub mod plot;
pub mod recipe;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{read_dataset, simulate_measurements, write_dataset, MeasurementDataset};
use crate::error::{Error, Result};
use crate::groundtruth::{
    adiabatic_sweep, locate_critical_point, phase_overlap, sweep_csv, CriticalEstimate, SweepFamily, SweepLine,
};
use crate::io::atomic_write_str;
use crate::metrics::{bases_label, evaluate_with, linear_fit, EvalOptions, LinearFit, MetricsReport, TABLE_HEADER};
use crate::mps::{read_mps, write_mps, Mps, PauliBasis};
use crate::rng::derive_seed;
use crate::training::{init_model, read_checkpoint, train, write_checkpoint, BornMachine, CheckpointMeta, TrainConfig};

pub use recipe::{
    all_cells, parse_bases, CellSpec, DatasetSpec, GridSpec, MatrixSpec, ModelSpec, PhaseMapSpec, PointSpec, Recipe,
    ScalingSpec, SolverSpec, SystemSpec, Units, SCHEMA_VERSION,
};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "BEBM_OUT_DIR";

/// Failure classes mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Resolved settings shared by all commands.
#[derive(Clone, Debug)]
pub struct Context {
    pub recipe: Recipe,
    pub out: PathBuf,
    pub emit_plots: bool,
}

impl Context {
    /// Load a recipe, apply the seed override and pick the output directory
    /// (flag, then environment, then recipe, then `bebm-out`).
    pub fn load(recipe: &Path, seed: Option<u64>, out: Option<&Path>, emit_plots: bool) -> std::result::Result<Self, CliError> {
        let text = std::fs::read_to_string(recipe).map_err(|e| usage(format!("cannot read recipe {}: {e}", recipe.display())))?;
        let mut r = Recipe::from_json(&text).map_err(usage)?;
        if let Some(s) = seed {
            r.seed = s;
        }
        Ok(Self::new(r, out, emit_plots))
    }

    pub fn new(recipe: Recipe, out: Option<&Path>, emit_plots: bool) -> Self {
        let out = out
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| recipe.out_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("bebm-out"));
        Self {
            recipe,
            out,
            emit_plots,
        }
    }

    /// Short digest of the command, the recipe and any input files.
    fn digest(&self, command: &str, inputs: &[&Path]) -> Result<String> {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(serde_json::to_vec(&self.recipe)?);
        for p in inputs {
            h.update(std::fs::read(p)?);
        }
        let d = h.finalize();
        Ok(hex::encode(&d[..6]))
    }

    fn write(&self, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
        let p = self.out.join(name);
        atomic_write_str(&p, text)?;
        written.push(p);
        Ok(())
    }

    fn plot(&self, name: &str, svg: impl FnOnce() -> String, written: &mut Vec<PathBuf>) -> Result<()> {
        if self.emit_plots {
            self.write(name, &svg(), written)?;
        }
        Ok(())
    }
}

/// Fixed-precision float for CSV cells.
fn f(x: f64) -> String {
    format!("{x:.10e}")
}

fn family_and_scale(r: &Recipe) -> Result<(SweepFamily, f64)> {
    r.system()?.family(r.units)
}

/// Sweep along the recipe grid at `n` sites.
pub fn run_sweep(r: &Recipe, n: usize) -> Result<SweepLine> {
    let (fam, scale) = family_and_scale(r)?;
    let grid: Vec<f64> = r.sweep_grid()?.iter().map(|x| x * scale).collect();
    adiabatic_sweep(&fam, &grid, &r.solver.options(n))
}

/// The working point and its ground state.
#[derive(Clone, Debug)]
pub struct ResolvedPoint {
    pub family: SweepFamily,
    /// Scan coordinate in dimensionless units.
    pub x: f64,
    pub state: Mps,
    pub energy: f64,
    pub converged: bool,
    pub overlap: Option<f64>,
    pub critical: Option<CriticalEstimate>,
}

/// Resolve the recipe's `point` at `n` sites and solve for its ground state.
pub fn resolve_point(r: &Recipe, n: usize) -> Result<ResolvedPoint> {
    let (fam, scale) = family_and_scale(r)?;
    let spec = r
        .point
        .as_ref()
        .ok_or_else(|| Error::Validation("recipe has no 'point'".into()))?;
    let from_line = |line: &SweepLine, i: usize, crit: Option<CriticalEstimate>| {
        let p = &line.points[i];
        ResolvedPoint {
            family: fam.clone(),
            x: p.x,
            state: p.state.clone(),
            energy: p.energy,
            converged: p.converged,
            overlap: p.overlap,
            critical: crit,
        }
    };
    match spec {
        PointSpec::Value(v) => {
            let line = adiabatic_sweep(&fam, &[v * scale], &r.solver.options(n))?;
            Ok(from_line(&line, 0, None))
        }
        PointSpec::Named(name) if name == "critical" => {
            let line = run_sweep(r, n)?;
            let est = locate_critical_point(&line)?;
            let x = est.estimate.ok_or_else(|| {
                Error::Validation(format!(
                    "no interior critical point on the sweep grid (maximum at the {} edge)",
                    est.boundary.clone().unwrap_or_default()
                ))
            })?;
            let i = line.points.iter().position(|p| p.x == x).expect("estimate is a grid point");
            Ok(from_line(&line, i, Some(est)))
        }
        PointSpec::Named(other) => Err(Error::Validation(format!("unknown point '{other}'"))),
        PointSpec::Overlap { overlap } => {
            let line = run_sweep(r, n)?;
            let i = line
                .points
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.overlap.map(|o| (i, (o - overlap).abs())))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i)
                .ok_or_else(|| Error::Validation("overlap targets need a Rydberg system with 'order'".into()))?;
            Ok(from_line(&line, i, None))
        }
    }
}

#[derive(Serialize)]
struct GroundTruthMeta<'a> {
    family: &'a SweepFamily,
    x: f64,
    n_sites: usize,
    energy: f64,
    converged: bool,
    overlap: Option<f64>,
}

fn sweep_plot(line: &SweepLine) -> String {
    let name = line.family.axis_name();
    let svn: Vec<(f64, f64)> = line.points.iter().map(|p| (p.x, p.svn)).collect();
    let mag: Vec<(f64, f64)> = line.points.iter().map(|p| (p.x, p.magnetization)).collect();
    plot::line_chart("sweep", name, "value", &[("S_vN".into(), svn), ("M".into(), mag)])
}

pub fn cmd_ground_truth(ctx: &Context) -> Result<Vec<PathBuf>> {
    let r = &ctx.recipe;
    if r.point.is_none() && r.sweep.is_none() {
        return Err(Error::Validation("ground-truth needs a 'point' or a 'sweep'".into()));
    }
    let tag = ctx.digest("ground-truth", &[])?;
    let mut written = Vec::new();
    if r.sweep.is_some() {
        let line = run_sweep(r, r.n_sites)?;
        ctx.write(&format!("sweep-{tag}.csv"), &sweep_csv(&line), &mut written)?;
        ctx.plot(&format!("sweep-{tag}.svg"), || sweep_plot(&line), &mut written)?;
    }
    if r.point.is_some() {
        let p = resolve_point(r, r.n_sites)?;
        let path = ctx.out.join(format!("ground-truth-{tag}.mps"));
        write_mps(&path, &p.state)?;
        written.push(path);
        let meta = GroundTruthMeta {
            family: &p.family,
            x: p.x,
            n_sites: r.n_sites,
            energy: p.energy,
            converged: p.converged,
            overlap: p.overlap,
        };
        ctx.write(&format!("ground-truth-{tag}.json"), &serde_json::to_string_pretty(&meta)?, &mut written)?;
    }
    Ok(written)
}

pub fn cmd_locate_critical(ctx: &Context) -> Result<Vec<PathBuf>> {
    let r = &ctx.recipe;
    let line = run_sweep(r, r.n_sites)?;
    let est = locate_critical_point(&line)?;
    let tag = ctx.digest("locate-critical", &[])?;
    let mut written = Vec::new();
    ctx.write(&format!("sweep-{tag}.csv"), &sweep_csv(&line), &mut written)?;
    ctx.write(&format!("critical-{tag}.json"), &serde_json::to_string_pretty(&est)?, &mut written)?;
    ctx.plot(&format!("sweep-{tag}.svg"), || sweep_plot(&line), &mut written)?;
    Ok(written)
}

pub fn cmd_phase_map(ctx: &Context) -> Result<Vec<PathBuf>> {
    let r = &ctx.recipe;
    let pm = r
        .phase_map
        .as_ref()
        .ok_or_else(|| Error::Validation("recipe has no 'phase_map'".into()))?;
    let axis = match r.system.as_ref() {
        Some(SystemSpec::Rydberg { transverse_axis, .. }) => *transverse_axis,
        _ => crate::models::TransverseAxis::X,
    };
    let deltas = pm.delta_over_omega.values()?;
    let rbs = pm.rb_over_a.values()?;
    let n = r.n_sites;
    let mut opts = r.solver.options(n);
    opts.compute_gap = false;
    let rows: Vec<Vec<String>> = rbs
        .par_iter()
        .map(|&rb| -> Result<Vec<String>> {
            let fam = SweepFamily::Rydberg {
                rb_over_a: rb,
                truncation_range: pm.truncation_range,
                transverse_axis: axis,
                order: None,
            };
            let line = adiabatic_sweep(&fam, &deltas, &opts)?;
            line.points
                .iter()
                .map(|p| {
                    let ov = |k: usize| -> Result<String> {
                        if (n - 1) % k == 0 {
                            Ok(f(phase_overlap(&p.state, k)?))
                        } else {
                            Ok(String::new())
                        }
                    };
                    Ok(format!(
                        "{},{},{},{},{},{},{},{}",
                        f(rb),
                        f(p.x),
                        f(p.energy),
                        f(p.svn),
                        ov(2)?,
                        ov(3)?,
                        ov(4)?,
                        p.converged
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("rb_over_a,delta_over_omega,energy,svn,overlap_z2,overlap_z3,overlap_z4,converged\n");
    for row in rows.iter().flatten() {
        csv.push_str(row);
        csv.push('\n');
    }
    let tag = ctx.digest("phase-map", &[])?;
    let mut written = Vec::new();
    ctx.write(&format!("phase-map-{tag}.csv"), &csv, &mut written)?;
    Ok(written)
}

fn load_state(path: &Path) -> Result<Mps> {
    read_mps(path)
}

/// Datasets for the recipe's bases, drawn from `state` with the master seed.
pub fn sample_datasets(state: &Mps, spec: &DatasetSpec, seed: u64) -> Result<Vec<MeasurementDataset>> {
    spec.bases
        .iter()
        .map(|&b| simulate_measurements(state, b, spec.shots, seed))
        .collect()
}

pub fn cmd_sample(ctx: &Context, state: Option<&Path>) -> Result<Vec<PathBuf>> {
    let r = &ctx.recipe;
    let psi = match state {
        Some(p) => load_state(p)?,
        None => resolve_point(r, r.n_sites)?.state,
    };
    let inputs: Vec<&Path> = state.into_iter().collect();
    let tag = ctx.digest("sample", &inputs)?;
    let mut written = Vec::new();
    for d in sample_datasets(&psi, &r.dataset, r.seed)? {
        let path = ctx.out.join(format!("dataset-{}-{tag}.txt", d.basis));
        write_dataset(&d, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Training configuration for a recipe, restricted to `bases`.
pub fn train_config(r: &Recipe, bases: &[PauliBasis], seed: u64) -> TrainConfig {
    let mut cfg = r.training.clone();
    cfg.bases = bases.to_vec();
    cfg.seed = seed;
    cfg
}

fn checkpoint_meta(cfg: &TrainConfig, model: &BornMachine, hist: &crate::training::TrainHistory) -> CheckpointMeta {
    let last = hist.last();
    CheckpointMeta {
        config: cfg.clone(),
        seed: cfg.seed,
        epoch: last.map(|l| l.epoch).unwrap_or(0),
        loss: last.map(|l| l.loss),
        fidelity: last.and_then(|l| l.fidelity),
        bond_dim: model.bond_dim(),
        complex_valued: model.complex_valued(),
        init: "uniform[0,1) real and imaginary parts".into(),
    }
}

pub fn cmd_train(ctx: &Context, data: &[PathBuf], reference: Option<&Path>) -> Result<Vec<PathBuf>> {
    let r = &ctx.recipe;
    let reference_path = reference;
    let (sets, truth) = if data.is_empty() {
        let p = resolve_point(r, r.n_sites)?;
        (sample_datasets(&p.state, &r.dataset, r.seed)?, Some(p.state))
    } else {
        (data.iter().map(|p| read_dataset(p)).collect::<Result<Vec<_>>>()?, None)
    };
    let reference = match reference {
        Some(p) => Some(load_state(p)?),
        None => truth,
    };
    let n = sets[0].n_sites;
    let bases: Vec<PauliBasis> = sets.iter().map(|d| d.basis).collect();
    let cfg = train_config(r, &bases, r.seed);
    let model = init_model(n, r.model.bond_dim, r.model.complex, r.seed)?;
    let (model, hist) = train(model, &sets, &cfg, reference.as_ref())?;
    let mut inputs: Vec<&Path> = data.iter().map(|p| p.as_path()).collect();
    inputs.extend(reference_path);
    let tag = ctx.digest("train", &inputs)?;
    let mut written = Vec::new();
    let path = ctx.out.join(format!("model-{tag}.mps"));
    write_checkpoint(&path, &model, &checkpoint_meta(&cfg, &model, &hist))?;
    written.push(path.clone());
    written.push(PathBuf::from(format!("{}.json", path.display())));
    ctx.write(&format!("history-{tag}.csv"), &hist.to_csv(), &mut written)?;
    ctx.plot(
        &format!("history-{tag}.svg"),
        || {
            let l: Vec<(f64, f64)> = hist.records.iter().map(|e| (e.epoch as f64, e.loss_minus_entropy)).collect();
            let mut series = vec![("L - S".to_string(), l)];
            if hist.records.iter().all(|e| e.fidelity.is_some()) {
                series.push((
                    "F".into(),
                    hist.records.iter().map(|e| (e.epoch as f64, e.fidelity.unwrap_or(0.0))).collect(),
                ));
            }
            plot::line_chart("training", "epoch", "value", &series)
        },
        &mut written,
    )?;
    Ok(written)
}

fn load_model(path: &Path) -> Result<BornMachine> {
    match read_checkpoint(path) {
        Ok((m, _)) => Ok(m),
        Err(Error::Io(_)) => {
            let psi = read_mps(path)?;
            let d = psi.max_bond();
            BornMachine::from_mps(&psi, d)
        }
        Err(e) => Err(e),
    }
}

fn correlation_plot(rep: &MetricsReport) -> String {
    let m: Vec<(f64, f64)> = rep.correlations.iter().enumerate().map(|(i, g)| ((i + 1) as f64, *g)).collect();
    let t: Vec<(f64, f64)> = rep.reference_correlations.iter().enumerate().map(|(i, g)| ((i + 1) as f64, *g)).collect();
    plot::line_chart("G(r)", "r", "G", &[("model".into(), m), ("reference".into(), t)])
}

pub fn cmd_evaluate(ctx: &Context, model: &Path, reference: &Path, data: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let r = &ctx.recipe;
    let m = load_model(model)?;
    let reference_state = load_state(reference)?;
    let sets = data.iter().map(|p| read_dataset(p)).collect::<Result<Vec<_>>>()?;
    let mut rep = evaluate_with(&m, &reference_state, &sets, &EvalOptions::new(r.eval_shots, r.seed))?;
    if !sets.is_empty() {
        rep.trained_bases = Some(sets.iter().map(|d| d.basis).collect());
    }
    let mut inputs: Vec<&Path> = vec![model, reference];
    inputs.extend(data.iter().map(|p| p.as_path()));
    let tag = ctx.digest("evaluate", &inputs)?;
    let mut written = Vec::new();
    ctx.write(&format!("metrics-{tag}.json"), &rep.to_json()?, &mut written)?;
    ctx.write(&format!("table-{tag}.csv"), &rep.to_table_csv(), &mut written)?;
    ctx.plot(&format!("correlations-{tag}.svg"), || correlation_plot(&rep), &mut written)?;
    Ok(written)
}

/// Outcome of one (cell, trial) pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellOutcome {
    pub cell: CellSpec,
    pub trial: usize,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct MatrixResult {
    pub point: ResolvedPoint,
    pub outcomes: Vec<CellOutcome>,
}

/// Train and evaluate every cell for every trial at the recipe's point.
/// Trials share their datasets across cells.
pub fn run_matrix(r: &Recipe) -> Result<MatrixResult> {
    let point = resolve_point(r, r.n_sites)?;
    run_matrix_at(r, point)
}

pub fn run_matrix_at(r: &Recipe, point: ResolvedPoint) -> Result<MatrixResult> {
    let cells = &r.matrix.cells;
    let trials = r.matrix.trials;
    let data: Vec<Vec<MeasurementDataset>> = (0..trials)
        .map(|t| {
            PauliBasis::ALL
                .iter()
                .map(|&b| simulate_measurements(&point.state, b, r.dataset.shots, derive_seed(r.seed, "matrix-data", t as u64)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..trials).flat_map(|t| (0..cells.len()).map(move |c| (t, c))).collect();
    let outcomes: Vec<CellOutcome> = jobs
        .par_iter()
        .map(|&(t, c)| {
            let cell = &cells[c];
            let run = || -> Result<MetricsReport> {
                let bases = cell.parse_bases()?;
                let sets: Vec<MeasurementDataset> =
                    data[t].iter().filter(|d| bases.contains(&d.basis)).cloned().collect();
                let seed = derive_seed(r.seed, "matrix-train", t as u64);
                let cfg = train_config(r, &bases, seed);
                let model = init_model(r.n_sites, r.model.bond_dim, cell.complex, seed)?;
                let (model, hist) = train(model, &sets, &cfg, Some(&point.state))?;
                let opts = EvalOptions::new(r.eval_shots, derive_seed(r.seed, "matrix-eval", t as u64));
                let mut rep = evaluate_with(&model, &point.state, &sets, &opts)?;
                rep.trained_bases = Some(bases);
                rep.loss_minus_entropy = hist.last().map(|l| l.loss_minus_entropy);
                Ok(rep)
            };
            match run() {
                Ok(rep) => CellOutcome {
                    cell: cell.clone(),
                    trial: t,
                    report: Some(rep),
                    error: None,
                },
                Err(e) => CellOutcome {
                    cell: cell.clone(),
                    trial: t,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(MatrixResult { point, outcomes })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// One row per cell and trial, then `mean` and `std` rows per cell.
pub fn matrix_summary_csv(res: &MatrixResult) -> String {
    let header = TABLE_HEADER.replacen("basis,field,", "basis,field,trial,", 1);
    let mut s = format!("{header},status\n");
    let field = |c: &CellSpec| if c.complex { "complex" } else { "real" };
    let mut cells: Vec<&CellSpec> = Vec::new();
    for o in &res.outcomes {
        if !cells.contains(&&o.cell) {
            cells.push(&o.cell);
        }
    }
    for cell in &cells {
        let label = parse_bases(&cell.bases).map(|b| bases_label(&b)).unwrap_or_else(|_| cell.bases.clone());
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 5];
        for o in res.outcomes.iter().filter(|o| &o.cell == *cell) {
            match &o.report {
                Some(rep) => {
                    let vals = [
                        rep.c_x,
                        rep.c_y,
                        rep.c_z,
                        rep.loss_minus_entropy.unwrap_or(f64::NAN),
                        rep.quantum_fidelity,
                    ];
                    for (c, v) in cols.iter_mut().zip(vals) {
                        c.push(v);
                    }
                    s.push_str(&format!(
                        "{label},{},{},{},ok\n",
                        field(cell),
                        o.trial,
                        vals.iter().map(|v| f(*v)).collect::<Vec<_>>().join(",")
                    ));
                }
                None => {
                    let msg = o.error.clone().unwrap_or_default().replace([',', '\n'], ";");
                    s.push_str(&format!("{label},{},{},,,,,,failed: {msg}\n", field(cell), o.trial));
                }
            }
        }
        if !cols[0].is_empty() {
            let stats: Vec<(f64, f64)> = cols.iter().map(|c| mean_std(c)).collect();
            for (name, pick) in [("mean", 0usize), ("std", 1)] {
                let vals: Vec<String> = stats.iter().map(|p| f(if pick == 0 { p.0 } else { p.1 })).collect();
                s.push_str(&format!("{label},{},{name},{},aggregate\n", field(cell), vals.join(",")));
            }
        }
    }
    s
}

pub fn cmd_matrix(ctx: &Context) -> Result<Vec<PathBuf>> {
    let res = run_matrix(&ctx.recipe)?;
    let tag = ctx.digest("matrix", &[])?;
    let mut written = Vec::new();
    for o in &res.outcomes {
        if let Some(rep) = &o.report {
            let field = if o.cell.complex { "complex" } else { "real" };
            ctx.write(
                &format!("metrics-{}-{field}-t{}-{tag}.json", o.cell.bases, o.trial),
                &rep.to_json()?,
                &mut written,
            )?;
        }
    }
    ctx.write(&format!("matrix-{tag}.csv"), &matrix_summary_csv(&res), &mut written)?;
    ctx.plot(
        &format!("matrix-{tag}.svg"),
        || {
            let bars: Vec<(String, f64)> = res
                .outcomes
                .iter()
                .filter(|o| o.trial == 0)
                .map(|o| {
                    let field = if o.cell.complex { "C" } else { "R" };
                    (format!("{}/{field}", o.cell.bases), o.report.as_ref().map(|r| r.quantum_fidelity).unwrap_or(0.0))
                })
                .collect();
            plot::bar_chart("quantum fidelity", "F", &bars)
        },
        &mut written,
    )?;
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub n_sites: usize,
    pub x: f64,
    pub total_shots: usize,
    pub trial: usize,
    pub infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeFit {
    pub n_sites: usize,
    pub x: f64,
    /// `1 − F` (trial mean) against `|T|^(−1/2)`.
    pub fit: LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub runs: Vec<ScalingRun>,
    pub per_size: Vec<SizeFit>,
    /// Per-size slopes against `N`, with intercept.
    pub slope_fit: LinearFit,
    /// The constant `c` in `1 - F ≈ c · N · |T|^-1/2`: least squares of `slope ≈ c · N`.
    pub c_through_origin: f64,
}

/// Checks that make a scaling fit possible, reported as usage errors.
pub fn check_scaling_grid(s: &ScalingSpec) -> Result<()> {
    let distinct = |v: &[usize]| {
        let mut w = v.to_vec();
        w.sort();
        w.dedup();
        w.len()
    };
    if distinct(&s.n_sites) < 2 || distinct(&s.total_shots) < 2 {
        return Err(Error::Validation(
            "insufficient grid: scaling needs at least two system sizes and two dataset sizes".into(),
        ));
    }
    Ok(())
}

/// Infidelity over (N, |T|, trial) with per-N and across-N line fits.
pub fn run_scaling(r: &Recipe) -> Result<ScalingResult> {
    let s = r
        .scaling
        .as_ref()
        .ok_or_else(|| Error::Validation("recipe has no 'scaling'".into()))?;
    check_scaling_grid(s)?;
    let bases = r.dataset.bases.clone();
    let points: Vec<ResolvedPoint> = s.n_sites.iter().map(|&n| resolve_point(r, n)).collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for (pi, &n) in s.n_sites.iter().enumerate() {
        for &size in &s.total_shots {
            for t in 0..s.trials {
                jobs.push((pi, n, size, t));
            }
        }
    }
    let runs: Vec<ScalingRun> = jobs
        .par_iter()
        .map(|&(pi, n, size, t)| -> Result<ScalingRun> {
            let p = &points[pi];
            let per_basis = (size / bases.len()).max(1);
            let seed = derive_seed(r.seed, &format!("scaling-{n}-{size}"), t as u64);
            let sets: Vec<MeasurementDataset> = bases
                .iter()
                .map(|&b| simulate_measurements(&p.state, b, per_basis, seed))
                .collect::<Result<_>>()?;
            let mut cfg = train_config(r, &bases, seed);
            cfg.epochs = s.steps.div_ceil(per_basis.div_ceil(cfg.batch_size));
            let model = init_model(n, r.model.bond_dim, r.model.complex, seed)?;
            let (_, hist) = train(model, &sets, &cfg, Some(&p.state))?;
            let fid = hist.last().and_then(|l| l.fidelity).expect("reference given");
            Ok(ScalingRun {
                n_sites: n,
                x: p.x,
                total_shots: size,
                trial: t,
                infidelity: 1.0 - fid,
            })
        })
        .collect::<Result<_>>()?;
    let mut per_size = Vec::new();
    for (pi, &n) in s.n_sites.iter().enumerate() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = s
            .total_shots
            .iter()
            .map(|&size| {
                let v: Vec<f64> = runs
                    .iter()
                    .filter(|q| q.n_sites == n && q.total_shots == size)
                    .map(|q| q.infidelity)
                    .collect();
                ((size as f64).powf(-0.5), mean_std(&v).0)
            })
            .unzip();
        per_size.push(SizeFit {
            n_sites: n,
            x: points[pi].x,
            fit: linear_fit(&xs, &ys)?,
        });
    }
    let ns: Vec<f64> = per_size.iter().map(|p| p.n_sites as f64).collect();
    let slopes: Vec<f64> = per_size.iter().map(|p| p.fit.slope).collect();
    let slope_fit = linear_fit(&ns, &slopes)?;
    let c_through_origin =
        ns.iter().zip(&slopes).map(|(n, s)| n * s).sum::<f64>() / ns.iter().map(|n| n * n).sum::<f64>();
    Ok(ScalingResult {
        runs,
        per_size,
        slope_fit,
        c_through_origin,
    })
}

pub fn scaling_runs_csv(res: &ScalingResult) -> String {
    let mut s = String::from("n_sites,x,total_shots,trial,infidelity\n");
    for q in &res.runs {
        s.push_str(&format!("{},{},{},{},{}\n", q.n_sites, f(q.x), q.total_shots, q.trial, f(q.infidelity)));
    }
    s
}

pub fn scaling_fit_csv(res: &ScalingResult) -> String {
    let mut s = String::from("n_sites,x,slope,intercept,r2\n");
    for p in &res.per_size {
        s.push_str(&format!("{},{},{},{},{}\n", p.n_sites, f(p.x), f(p.fit.slope), f(p.fit.intercept), f(p.fit.r2)));
    }
    s.push_str(&format!(
        "slope_vs_n,,{},{},{}\n",
        f(res.slope_fit.slope),
        f(res.slope_fit.intercept),
        f(res.slope_fit.r2)
    ));
    s.push_str(&format!("c_through_origin,,{},,\n", f(res.c_through_origin)));
    s
}

pub fn cmd_scaling(ctx: &Context) -> Result<Vec<PathBuf>> {
    let res = run_scaling(&ctx.recipe)?;
    let tag = ctx.digest("scaling", &[])?;
    let mut written = Vec::new();
    ctx.write(&format!("scaling-{tag}.csv"), &scaling_runs_csv(&res), &mut written)?;
    ctx.write(&format!("scaling-fit-{tag}.csv"), &scaling_fit_csv(&res), &mut written)?;
    ctx.plot(
        &format!("scaling-{tag}.svg"),
        || {
            let series: Vec<(String, Vec<(f64, f64)>)> = res
                .per_size
                .iter()
                .map(|p| {
                    let pts = res
                        .runs
                        .iter()
                        .filter(|q| q.n_sites == p.n_sites && q.trial == 0)
                        .map(|q| ((q.total_shots as f64).powf(-0.5), q.infidelity))
                        .collect();
                    (format!("N={}", p.n_sites), pts)
                })
                .collect();
            plot::line_chart("infidelity", "|T|^-1/2", "1 - F", &series)
        },
        &mut written,
    )?;
    Ok(written)
}

/// Subcommand selection used by the binary.
#[derive(Clone, Debug)]
pub enum Command {
    GroundTruth,
    PhaseMap,
    LocateCritical,
    Sample { state: Option<PathBuf> },
    Train { data: Vec<PathBuf>, reference: Option<PathBuf> },
    Evaluate { model: PathBuf, reference: PathBuf, data: Vec<PathBuf> },
    Matrix,
    Scaling,
}

/// Validation that should fail before any work starts.
fn precheck(ctx: &Context, cmd: &Command) -> std::result::Result<(), CliError> {
    let r = &ctx.recipe;
    let need_system = !matches!(cmd, Command::Evaluate { .. } | Command::PhaseMap);
    let needs_point = match cmd {
        Command::Sample { state } => state.is_none(),
        Command::Train { data, .. } => data.is_empty(),
        Command::Matrix | Command::Scaling => true,
        _ => false,
    };
    if need_system && (needs_point || matches!(cmd, Command::GroundTruth | Command::LocateCritical)) {
        r.system().map_err(usage)?;
    }
    if needs_point && r.point.is_none() {
        return Err(usage("recipe has no 'point'"));
    }
    if let Some(PointSpec::Named(_) | PointSpec::Overlap { .. }) = &r.point {
        if needs_point {
            r.sweep_grid().map_err(usage)?;
        }
    }
    match cmd {
        Command::GroundTruth if r.point.is_none() && r.sweep.is_none() => {
            Err(usage("ground-truth needs a 'point' or a 'sweep'"))
        }
        Command::LocateCritical => r.sweep_grid().map(|_| ()).map_err(usage),
        Command::PhaseMap if r.phase_map.is_none() => Err(usage("recipe has no 'phase_map'")),
        Command::Scaling => {
            let s = r.scaling.as_ref().ok_or_else(|| usage("recipe has no 'scaling'"))?;
            check_scaling_grid(s).map_err(usage)
        }
        _ => Ok(()),
    }
}

pub fn run(ctx: &Context, cmd: &Command) -> std::result::Result<Vec<PathBuf>, CliError> {
    precheck(ctx, cmd)?;
    let out = match cmd {
        Command::GroundTruth => cmd_ground_truth(ctx),
        Command::PhaseMap => cmd_phase_map(ctx),
        Command::LocateCritical => cmd_locate_critical(ctx),
        Command::Sample { state } => cmd_sample(ctx, state.as_deref()),
        Command::Train { data, reference } => cmd_train(ctx, data, reference.as_deref()),
        Command::Evaluate { model, reference, data } => cmd_evaluate(ctx, model, reference, data),
        Command::Matrix => cmd_matrix(ctx),
        Command::Scaling => cmd_scaling(ctx),
    }?;
    Ok(out)
}
