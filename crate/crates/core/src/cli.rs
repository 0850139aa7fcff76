//! Batch command-line front end: `generate`, `train`, `sweep`, `predict`,
//! `evaluate` and `report`.
//!
//! Every setting can come from a TOML run configuration (`--config`); flags
//! given on the command line take precedence over the file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{relative_state_error, write_sweep_table, ErrorReport};
use crate::opinf::{grid_search, Regularization, RegularizationGrid, TrainingProblem};
use crate::parametric::{load_model, save_model};
use crate::pod::{write_spectrum_csv, PodBasis, PodOptions, RandomizedSvdConfig, RankSelection};
use crate::scaling::fit_scaling;
use crate::signal::{InputRamp, InputSignal};
use crate::snapshots::{
    assemble_global, load_snapshot_set, write_snapshot_set, SnapshotSet, MANIFEST_FILE,
};
use crate::synthfom::{generate_grid, linspace, SynthConfig};
use crate::train::{train, RegularizationChoice, TrainOptions};

pub const MODEL_FILE: &str = "model.rom";

#[derive(Debug, Parser)]
#[command(
    name = "opinf",
    version,
    about = "Parametric operator-inference reduced-order models"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct SharedArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the randomized SVD.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (computation is single-threaded; values above 1 are accepted).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the synthetic full-order model over a parameter grid.
    Generate(GenerateArgs),
    /// Fit scaling, POD basis and operators; write a model archive.
    Train(TrainArgs),
    /// Evaluate a regularization grid and write the full table.
    Sweep(TrainArgs),
    /// Predict trajectories at new parameters from a model archive.
    Predict(PredictArgs),
    /// Compare predictions with reference trajectories.
    Evaluate(EvaluateArgs),
    /// Export a model's spectrum, parameters and metadata as CSV.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Grid size as `QxP` (μ_q values × μ_p values).
    #[arg(long)]
    pub grid: Option<String>,
    /// Lower end of both parameter ranges.
    #[arg(long)]
    pub mu_min: Option<f64>,
    /// Upper end of both parameter ranges.
    #[arg(long)]
    pub mu_max: Option<f64>,
    /// Spatial grid points per variable.
    #[arg(long)]
    pub n_x: Option<usize>,
    /// Number of stored snapshots K.
    #[arg(long = "steps")]
    pub k: Option<usize>,
    /// Snapshot spacing δ.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Snapshot set directories, or dataset roots holding one per subdirectory.
    #[arg(long, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Restrict training to these parameters, e.g. `0.5,0.5;1.0,1.5`.
    #[arg(long)]
    pub train_params: Option<String>,
    /// Cumulative-energy threshold for choosing r.
    #[arg(long)]
    pub energy: Option<f64>,
    /// Explicit reduced dimension.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Explicit λ triple `l1,l2,l3`.
    #[arg(long)]
    pub lambda: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Model archive written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Parameters to predict, e.g. `0.75,1.25;1.0,1.0`.
    #[arg(long)]
    pub params: Option<String>,
    /// Take the prediction parameters from these snapshot sets.
    #[arg(long, num_args = 1..)]
    pub like: Vec<PathBuf>,
    /// Snapshot set whose first state replaces the stored reference state.
    #[arg(long)]
    pub initial: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Directory of predicted snapshot sets.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Directory of reference snapshot sets.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the model's singular-value spectrum.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Model archive written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub generate: GenerateSection,
    pub train: TrainSection,
    pub predict: PredictSection,
    pub evaluate: EvaluateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub grid: Option<String>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub model: Option<SynthConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub data: Vec<PathBuf>,
    pub parameters: Option<Vec<Vec<f64>>>,
    pub energy: Option<f64>,
    pub rank: Option<usize>,
    pub lambda: Option<[f64; 3]>,
    pub grid: Option<RegularizationGrid>,
    pub target_rank: Option<usize>,
    pub oversample: Option<usize>,
    pub power_iters: Option<usize>,
    pub deterministic_limit: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub model: Option<PathBuf>,
    pub parameters: Option<Vec<Vec<f64>>>,
    pub like: Vec<PathBuf>,
    pub initial: Option<PathBuf>,
    /// Input ramp replacing the one stored in the model.
    pub input: Option<InputRamp>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub predictions: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Parses the process arguments, runs the command and maps the outcome to
/// an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.shared.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let threads = cli.shared.threads.or(config.threads).unwrap_or(1);
    if threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let out = cli
        .shared
        .out
        .clone()
        .or_else(|| config.out.clone())
        .ok_or_else(|| Error::Config("no output directory; pass --out".into()))?;
    let seed = cli.shared.seed.or(config.seed).unwrap_or(0);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    match cli.command {
        Command::Generate(args) => cmd_generate(&args, &config.generate, &out),
        Command::Train(args) => cmd_train(&args, &config.train, seed, &out),
        Command::Sweep(args) => cmd_sweep(&args, &config.train, seed, &out),
        Command::Predict(args) => cmd_predict(&args, &config.predict, &out),
        Command::Evaluate(args) => cmd_evaluate(&args, &config.evaluate, &out),
        Command::Report(args) => cmd_report(&args, &config.evaluate, &out),
    }
}

fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{what}: `{v}` is not a number")))
        })
        .collect()
}

/// `a,b;c,d` → [[a, b], [c, d]].
pub fn parse_parameter_list(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_numbers(s, "parameter list"))
        .collect()
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("grid `{text}` is not of the form QxP"));
    let (q, p) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let q: usize = q.trim().parse().map_err(|_| bad())?;
    let p: usize = p.trim().parse().map_err(|_| bad())?;
    if q == 0 || p == 0 {
        return Err(bad());
    }
    Ok((q, p))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn fmt_params(p: &[f64]) -> String {
    p.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Expands each path into snapshot set directories: a path holding a
/// manifest is one set, any other directory contributes its subdirectories
/// that hold one, in name order.
pub fn discover_sets(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for path in paths {
        if path.is_file() || path.join(MANIFEST_FILE).is_file() {
            found.push(path.clone());
            continue;
        }
        let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        let mut dirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(MANIFEST_FILE).is_file())
            .collect();
        if dirs.is_empty() {
            return Err(Error::Config(format!(
                "{} holds no snapshot sets",
                path.display()
            )));
        }
        dirs.sort();
        found.extend(dirs);
    }
    Ok(found)
}

fn load_sets(paths: &[PathBuf]) -> Result<Vec<SnapshotSet>> {
    discover_sets(paths)?
        .iter()
        .map(|p| load_snapshot_set(p))
        .collect()
}

fn same_parameter(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0))
}

fn cmd_generate(args: &GenerateArgs, section: &GenerateSection, out: &Path) -> Result<()> {
    let grid = args
        .grid
        .as_deref()
        .or(section.grid.as_deref())
        .unwrap_or("5x5");
    let (q, p) = parse_grid(grid)?;
    let lo = args.mu_min.or(section.mu_min).unwrap_or(0.5);
    let hi = args.mu_max.or(section.mu_max).unwrap_or(1.5);
    if !(lo <= hi) {
        return Err(Error::Config(format!("mu range [{lo}, {hi}] is empty")));
    }
    let mut base = section.model.clone().unwrap_or_default();
    if let Some(n) = args.n_x {
        base.n_x = n;
    }
    if let Some(k) = args.k {
        base.k = k;
    }
    if let Some(d) = args.delta {
        base.delta = d;
    }
    base.validate()?;
    let start = Instant::now();
    let sets = generate_grid(&base, &linspace(lo, hi, q), &linspace(lo, hi, p))?;
    let mut table = String::from("index,mu_q,mu_p,directory\n");
    for (i, set) in sets.iter().enumerate() {
        let name = format!("run_{i:03}");
        write_snapshot_set(set, &out.join(&name))?;
        table.push_str(&format!("{i},{},{name}\n", fmt_params(&set.parameter)));
    }
    write_file(&out.join("grid.csv"), table.as_bytes())?;
    println!(
        "generated {} runs (N = {}, K = {}) in {:.2} s",
        sets.len(),
        base.layout().state_dim(),
        base.k,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Training sets and options resolved from flags and config.
fn training_inputs(
    args: &TrainArgs,
    section: &TrainSection,
    seed: u64,
    require_grid: bool,
) -> Result<(Vec<SnapshotSet>, TrainOptions)> {
    let paths = if args.data.is_empty() {
        &section.data
    } else {
        &args.data
    };
    if paths.is_empty() {
        return Err(Error::Config("no training data; pass --data".into()));
    }
    let mut sets = load_sets(paths)?;
    let filter = match &args.train_params {
        Some(text) => Some(parse_parameter_list(text)?),
        None => section.parameters.clone(),
    };
    if let Some(wanted) = filter {
        let mut chosen = Vec::with_capacity(wanted.len());
        for mu in &wanted {
            let pos = sets
                .iter()
                .position(|s| same_parameter(&s.parameter, mu))
                .ok_or_else(|| Error::Config(format!("no snapshot set has parameter {mu:?}")))?;
            chosen.push(sets.swap_remove(pos));
        }
        sets = chosen;
    }

    // flags replace the config file's choice as a whole
    let (energy, rank) = if args.energy.is_some() || args.rank.is_some() {
        (args.energy, args.rank)
    } else {
        (section.energy, section.rank)
    };
    let rank = match (energy, rank) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either an energy threshold or a rank, not both".into(),
            ))
        }
        (_, Some(r)) => RankSelection::Fixed(r),
        (Some(e), None) => RankSelection::Energy(e),
        (None, None) => RankSelection::Energy(0.99998),
    };
    let (lambda, grid) = match &args.lambda {
        Some(text) => {
            let v = parse_numbers(text, "--lambda")?;
            let triple: [f64; 3] = v
                .try_into()
                .map_err(|_| Error::Config("--lambda takes three values".into()))?;
            (Some(triple), None)
        }
        None => (section.lambda, section.grid.clone()),
    };
    let regularization = match (lambda, grid) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either a λ triple or a λ grid, not both".into(),
            ))
        }
        (Some([a, b, c]), None) => {
            let reg = Regularization::new(a, b, c).map_err(|e| Error::Config(e.to_string()))?;
            if require_grid {
                RegularizationChoice::Search(RegularizationGrid::single(reg))
            } else {
                RegularizationChoice::Fixed(reg)
            }
        }
        (None, Some(grid)) => RegularizationChoice::Search(grid),
        (None, None) => RegularizationChoice::Search(RegularizationGrid::standard()),
    };
    let defaults = RandomizedSvdConfig::default();
    let options = TrainOptions {
        pod: PodOptions {
            rank,
            randomized: RandomizedSvdConfig {
                target_rank: section.target_rank.unwrap_or(defaults.target_rank),
                oversample: section.oversample.unwrap_or(defaults.oversample),
                power_iters: section.power_iters.unwrap_or(defaults.power_iters),
                seed,
            },
            deterministic_limit: section
                .deterministic_limit
                .unwrap_or(PodOptions::default().deterministic_limit),
        },
        regularization,
    };
    Ok((sets, options))
}

fn cmd_train(args: &TrainArgs, section: &TrainSection, seed: u64, out: &Path) -> Result<()> {
    let (sets, options) = training_inputs(args, section, seed, false)?;
    let outcome = train(&sets, &options)?;
    let model_path = out.join(MODEL_FILE);
    save_model(&outcome.rom, &model_path)?;

    let rom = &outcome.rom;
    write_file(
        &out.join("spectrum.csv"),
        &csv_bytes(|w| write_spectrum_csv(rom.basis.singular_values(), w)),
    )?;
    let rows: Vec<(Vec<f64>, ErrorReport)> = sets
        .iter()
        .map(|s| s.parameter.clone())
        .zip(outcome.training_errors.iter().cloned())
        .collect();
    write_file(
        &out.join("training_errors.csv"),
        &csv_bytes(|w| write_sweep_table(&rows, w)),
    )?;
    if let Some(sweep) = &outcome.sweep {
        write_file(&out.join("sweep.csv"), &csv_bytes(|w| sweep.write_csv(w)))?;
    }

    let reg = outcome.regularization;
    println!(
        "trained on {} parameters, N = {}",
        sets.len(),
        rom.layout.state_dim()
    );
    println!("r = {}", rom.rank());
    println!("cumulative energy = {:.10}", outcome.cumulative_energy);
    println!("residual energy = {:.6e}", outcome.residual_energy);
    println!(
        "lambda = ({:e}, {:e}, {:e})",
        reg.lambda1, reg.lambda2, reg.lambda3
    );
    for (mu, report) in &rows {
        println!(
            "training error at [{}]: {:.6e}",
            fmt_params(mu),
            report.average
        );
    }
    println!(
        "offline time {:.2} s (POD {:.2} s, regression {:.2} s)",
        outcome.timings.total, outcome.timings.pod, outcome.timings.regression
    );
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_sweep(args: &TrainArgs, section: &TrainSection, seed: u64, out: &Path) -> Result<()> {
    let (sets, options) = training_inputs(args, section, seed, true)?;
    let RegularizationChoice::Search(grid) = &options.regularization else {
        unreachable!("sweep always resolves to a grid")
    };
    let global = assemble_global(&sets)?;
    let scaling = fit_scaling(&global, &global.layout.mean_subtracted())?;
    let mut scaled = global.matrix;
    scaling.apply_in_place(&mut scaled)?;
    let basis = PodBasis::compute(&scaled, &options.pod)?;
    drop(scaled);
    let problem = TrainingProblem::new(&sets, &basis, &scaling)?;
    let result = grid_search(&problem, grid)?;
    write_file(&out.join("sweep.csv"), &csv_bytes(|w| result.write_csv(w)))?;
    let best = result.best;
    let row = &result.table[result.best_index];
    println!("r = {}, {} candidates", basis.rank(), result.table.len());
    println!(
        "best lambda = ({:e}, {:e}, {:e}) with average error {:.6e}",
        best.lambda1, best.lambda2, best.lambda3, row.average
    );
    Ok(())
}

fn cmd_predict(args: &PredictArgs, section: &PredictSection, out: &Path) -> Result<()> {
    let model_path = args
        .model
        .clone()
        .or_else(|| section.model.clone())
        .ok_or_else(|| Error::Config("no model; pass --model".into()))?;
    let rom = load_model(&model_path)?;
    let mut params = match &args.params {
        Some(text) => parse_parameter_list(text)?,
        None => section.parameters.clone().unwrap_or_default(),
    };
    let like = if args.like.is_empty() {
        &section.like
    } else {
        &args.like
    };
    if !like.is_empty() {
        for path in discover_sets(like)? {
            params.push(load_snapshot_set(&path)?.parameter);
        }
    }
    if params.is_empty() {
        return Err(Error::Config(
            "no prediction parameters; pass --params or --like".into(),
        ));
    }
    // every query is checked before any output is written
    for mu in &params {
        rom.interpolate_operators(mu)?;
    }
    let initial = match args.initial.as_ref().or(section.initial.as_ref()) {
        Some(path) => Some(load_snapshot_set(path)?.states.column(0).into_owned()),
        None => None,
    };
    let ramp = section.input.clone().or_else(|| rom.input_ramp.clone());
    let ramp = ramp.ok_or_else(|| {
        Error::Config("the model stores no input ramp; give [predict.input] in the config".into())
    })?;
    let times = rom.time_grid.times();

    let mut timing = String::from("index,parameter,online_seconds,reconstruct_seconds\n");
    for (i, mu) in params.iter().enumerate() {
        let signal = ramp.instantiate(mu)?;
        let prediction = rom.predict(mu, Some(&signal), initial.as_ref())?;
        let t = Instant::now();
        let states = rom.reconstruct(&prediction.solution)?;
        let reconstruct_seconds = t.elapsed().as_secs_f64();
        let mut inputs = DMatrix::zeros(signal.len(), times.len());
        let mut u = vec![0.0; signal.len()];
        for (k, &tk) in times.iter().enumerate() {
            signal.eval(tk, &mut u);
            inputs.column_mut(k).copy_from_slice(&u);
        }
        let set = SnapshotSet::new(
            mu.clone(),
            times.clone(),
            states,
            inputs,
            rom.layout.clone(),
            Some(ramp.clone()),
        )?;
        write_snapshot_set(&set, &out.join(format!("pred_{i:03}")))?;
        timing.push_str(&format!(
            "{i},\"{}\",{:.6e},{:.6e}\n",
            fmt_params(mu),
            prediction.online_seconds,
            reconstruct_seconds
        ));
        println!(
            "predicted [{}]: online {:.3e} s, reconstruction {:.3e} s",
            fmt_params(mu),
            prediction.online_seconds,
            reconstruct_seconds
        );
    }
    // wall-clock figures vary between runs, so they stay out of the CSV outputs
    write_file(&out.join("timing.log"), timing.as_bytes())?;
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, section: &EvaluateSection, out: &Path) -> Result<()> {
    let pred_dir = args
        .predictions
        .clone()
        .or_else(|| section.predictions.clone())
        .ok_or_else(|| Error::Config("pass --predictions".into()))?;
    let truth_dir = args
        .truth
        .clone()
        .or_else(|| section.truth.clone())
        .ok_or_else(|| Error::Config("pass --truth".into()))?;
    let predictions = load_sets(&[pred_dir])?;
    let truth = load_sets(&[truth_dir])?;
    let mut rows = Vec::with_capacity(predictions.len());
    for pred in &predictions {
        let reference = truth
            .iter()
            .find(|t| same_parameter(&t.parameter, &pred.parameter))
            .ok_or_else(|| Error::Manifest {
                path: PathBuf::from(MANIFEST_FILE),
                message: format!("no reference trajectory for parameter {:?}", pred.parameter),
            })?;
        if reference.layout != pred.layout || reference.times.len() != pred.times.len() {
            return Err(Error::Manifest {
                path: PathBuf::from(MANIFEST_FILE),
                message: format!(
                    "prediction and reference at {:?} have different layouts or time grids",
                    pred.parameter
                ),
            });
        }
        let report = relative_state_error(&reference.states, &pred.states, &reference.layout)?;
        rows.push((pred.parameter.clone(), report));
    }
    write_file(
        &out.join("errors.csv"),
        &csv_bytes(|w| write_sweep_table(&rows, w)),
    )?;
    if let Some(model) = args.model.clone().or_else(|| section.model.clone()) {
        let rom = load_model(&model)?;
        write_file(
            &out.join("spectrum.csv"),
            &csv_bytes(|w| write_spectrum_csv(rom.basis.singular_values(), w)),
        )?;
    }
    let (max_mu, max) = rows
        .iter()
        .max_by(|a, b| a.1.average.total_cmp(&b.1.average))
        .map(|(mu, r)| (mu, r.average))
        .expect("at least one prediction");
    let (min_mu, min) = rows
        .iter()
        .min_by(|a, b| a.1.average.total_cmp(&b.1.average))
        .map(|(mu, r)| (mu, r.average))
        .expect("at least one prediction");
    println!("evaluated {} predictions", rows.len());
    println!("max average error {max:.6e} at [{}]", fmt_params(max_mu));
    println!("min average error {min:.6e} at [{}]", fmt_params(min_mu));
    Ok(())
}

fn cmd_report(args: &ReportArgs, section: &EvaluateSection, out: &Path) -> Result<()> {
    let path = args
        .model
        .clone()
        .or_else(|| section.model.clone())
        .ok_or_else(|| Error::Config("no model; pass --model".into()))?;
    let rom = load_model(&path)?;
    write_file(
        &out.join("spectrum.csv"),
        &csv_bytes(|w| write_spectrum_csv(rom.basis.singular_values(), w)),
    )?;

    let interp = &rom.interpolant;
    let d_p = interp.parameter_dim();
    let mut params = (1..=d_p).map(|i| format!("mu_{i}")).collect::<Vec<_>>();
    params.insert(0, "index".into());
    let mut text = params.join(",") + "\n";
    for (i, mu) in interp.train_params().iter().enumerate() {
        text.push_str(&format!("{i},{}\n", fmt_params(mu)));
    }
    write_file(&out.join("training_parameters.csv"), text.as_bytes())?;

    let mut text = String::from("simplex,vertices\n");
    for (i, s) in interp.triangulation().simplices().iter().enumerate() {
        let v: Vec<String> = s.iter().map(usize::to_string).collect();
        text.push_str(&format!("{i},{}\n", v.join(" ")));
    }
    write_file(&out.join("simplices.csv"), text.as_bytes())?;

    let mut text = String::from("group,shift,scale\n");
    for v in rom.scaling.variables() {
        text.push_str(&format!("{},{:.17e},{:.17e}\n", v.name, v.shift, v.scale));
    }
    write_file(&out.join("scaling.csv"), text.as_bytes())?;

    let mut summary = csv_bytes(|w| {
        writeln!(w, "key,value")?;
        writeln!(w, "N,{}", rom.layout.state_dim())?;
        writeln!(w, "r,{}", rom.rank())?;
        writeln!(w, "m,{}", rom.num_inputs())?;
        writeln!(w, "d,{}", interp.train_params().len())?;
        writeln!(w, "K,{}", rom.time_grid.k)?;
        writeln!(w, "delta,{}", rom.time_grid.delta)?;
        writeln!(
            w,
            "cumulative_energy,{:.17e}",
            rom.basis.cumulative_energy()
        )
    });
    if let Some(reg) = rom.regularization {
        summary.extend(
            format!(
                "lambda1,{:e}\nlambda2,{:e}\nlambda3,{:e}\n",
                reg.lambda1, reg.lambda2, reg.lambda3
            )
            .bytes(),
        );
    }
    write_file(&out.join("summary.csv"), &summary)?;
    print!("{}", String::from_utf8_lossy(&summary));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_lists_parse() {
        assert_eq!(
            parse_parameter_list("0.5,1; 1.5,0.75;").unwrap(),
            vec![vec![0.5, 1.0], vec![1.5, 0.75]]
        );
        assert!(matches!(
            parse_parameter_list("0.5,x"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn grid_spec_parses() {
        assert_eq!(parse_grid("5x5").unwrap(), (5, 5));
        assert_eq!(parse_grid("3X1").unwrap(), (3, 1));
        assert!(parse_grid("0x2").is_err());
        assert!(parse_grid("five").is_err());
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        assert!(toml::from_str::<RunConfig>("[train]\nbogus = 1").is_err());
        let cfg: RunConfig = toml::from_str(
            "seed = 7\n[train]\nrank = 4\nlambda = [1e-3, 1.0, 1e-3]\n[generate.model]\nn_x = 64\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.train.rank, Some(4));
        assert_eq!(cfg.generate.model.unwrap().n_x, 64);
    }
}
