//! Subcommand drivers: load inputs, run the library, write outputs.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::CommandFactory;
use concomitant::io::{
    format_f64, read_json, read_matrix_file, write_json, write_matrix_file,
    write_path_csv, write_table, DatasetMeta, FitRecord,
};
use concomitant::simulate::{
    fit_ratio_path, gen_dataset, mean_auc, rmse_experiment, roc_experiment, trials_experiment,
    RmseRecord, RocRecord, TrialsReport,
};
use concomitant::solver::default_floor;
use concomitant::{fit, lambda_max, ratio_grid, DesignMatrix, Error, SolverKind, TaskMatrix};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Cli, Command, ExperimentArgs, FitArgs, PathArgs, SimulateArgs};
use crate::config::{
    resolve, ExperimentConfig, ExperimentKind, FitConfig, InputOptions, LambdaSpec, PathConfig,
    SimulateConfig,
};

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    /// Results were written but at least one fit hit its epoch budget.
    Unconverged,
}

impl Outcome {
    fn from_flag(all_converged: bool) -> Self {
        if all_converged {
            Outcome::Converged
        } else {
            Outcome::Unconverged
        }
    }
}

/// A mistake in how the program was invoked, reported with usage text.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Path(args) => cmd_path(&args),
        Command::Experiment(args) => cmd_experiment(&args),
    }
}

fn output_dir(out: &Option<PathBuf>, subcommand: &str) -> Result<PathBuf> {
    let Some(dir) = out else {
        let mut cmd = Cli::command();
        cmd.build();
        let usage = cmd
            .find_subcommand_mut(subcommand)
            .map(|c| c.render_usage().to_string())
            .unwrap_or_default();
        return Err(UsageError(format!(
            "I/O error: no output directory given (--out <DIR> is required)\n\n{usage}"
        ))
        .into());
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.clone())
}

fn flags<T: Serialize>(args: &T) -> Result<Value> {
    Ok(serde_json::to_value(args)?)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let cfg: SimulateConfig = resolve(
        &SimulateConfig::default(),
        args.common.config.as_deref(),
        &flags(args)?,
    )?;
    cfg.validate()?;
    let out = output_dir(&args.common.out, "simulate")?;
    let data = gen_dataset(&cfg.data.spec(cfg.seed))?;
    write_matrix_file(&out.join("X.csv"), data.x.values())?;
    write_matrix_file(&out.join("Y.csv"), data.y.values())?;
    write_matrix_file(&out.join("B_star.csv"), data.b_star.values())?;
    write_json(&out.join("meta.json"), &DatasetMeta::from_dataset(&data))?;
    Ok(Outcome::Converged)
}

/// Inputs of `fit` and `path` after validation against the metadata.
struct Problem {
    x: DesignMatrix,
    y: TaskMatrix,
    meta: Option<DatasetMeta>,
}

fn load_problem(input: &InputOptions, kind: SolverKind) -> Result<Problem> {
    let paths = input.paths()?;
    let xv = read_matrix_file(&paths.x)?;
    let yv = read_matrix_file(&paths.y)?;
    let meta: Option<DatasetMeta> = match &paths.meta {
        Some(p) => Some(read_json(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    if let Some(m) = &meta {
        if xv.shape() != (m.n, m.p) {
            bail!(
                "{} is {}x{} but the metadata says {}x{}",
                paths.x.display(),
                xv.nrows(),
                xv.ncols(),
                m.n,
                m.p
            );
        }
        if yv.shape() != (m.n, m.q) {
            bail!(
                "{} is {}x{} but the metadata says {}x{}",
                paths.y.display(),
                yv.nrows(),
                yv.ncols(),
                m.n,
                m.q
            );
        }
    }
    let blocks = match (&input.blocks, &meta) {
        (Some(b), _) => b.clone(),
        (None, Some(m)) => m.block_sizes.clone(),
        (None, None) if kind == SolverKind::Sbhcl => {
            bail!("the block solver needs block sizes (--blocks or a meta.json)")
        }
        (None, None) => vec![xv.nrows()],
    };
    let x = DesignMatrix::new(xv, blocks)?;
    let y = TaskMatrix::new(yv)?;
    concomitant::validate_dataset(&x, &y)?;
    Ok(Problem { x, y, meta })
}

/// The resolved configuration as recorded next to the outputs, with the
/// generating spec of the data when it is known.
fn provenance<T: Serialize>(cfg: &T, meta: Option<&DatasetMeta>) -> Result<Value> {
    let mut v = serde_json::to_value(cfg)?;
    if let (Value::Object(m), Some(meta)) = (&mut v, meta) {
        m.insert("dataset".into(), serde_json::to_value(&meta.spec)?);
    }
    Ok(v)
}

fn cmd_fit(args: &FitArgs) -> Result<Outcome> {
    let mut cfg: FitConfig = resolve(
        &FitConfig::default(),
        args.common.config.as_deref(),
        &flags(args)?,
    )?;
    // A level given on the command line replaces one of the other kind
    // coming from the file.
    if args.lambda.is_some() {
        cfg.lambda_ratio = None;
    } else if args.lambda_ratio.is_some() {
        cfg.lambda = None;
    }
    cfg.validate()?;
    let out = output_dir(&args.common.out, "fit")?;
    let problem = load_problem(&cfg.input, cfg.solver)?;
    let (x, y) = (&problem.x, &problem.y);
    let settings = cfg.options.settings();
    let floor = default_floor(cfg.solver, x, y, settings.floor_alpha)?;
    let lambda = match cfg.lambda_spec()? {
        LambdaSpec::Absolute(l) => l,
        LambdaSpec::Ratio(r) => r * lambda_max(cfg.solver, x, y, &floor)?,
    };
    let result = fit(cfg.solver, x, y, &settings.config(lambda, floor))
        .or_else(Error::into_unconverged)?;
    let record = FitRecord::new(&result, provenance(&cfg, problem.meta.as_ref())?);
    write_json(&out.join("fit.json"), &record)?;
    Ok(Outcome::from_flag(result.converged))
}

fn cmd_path(args: &PathArgs) -> Result<Outcome> {
    let cfg: PathConfig = resolve(
        &PathConfig::default(),
        args.common.config.as_deref(),
        &flags(args)?,
    )?;
    cfg.validate()?;
    let out = output_dir(&args.common.out, "path")?;
    let problem = load_problem(&cfg.input, cfg.solver)?;
    let ratios = ratio_grid(cfg.num, cfg.ratio_min);
    let path = fit_ratio_path(
        &problem.x,
        &problem.y,
        cfg.solver,
        &ratios,
        &cfg.options.settings(),
    )?;
    write_path_csv(
        BufWriter::new(fs::File::create(out.join("path.csv"))?),
        &path.fits,
    )?;
    let sidecar = json!({
        "config": provenance(&cfg, problem.meta.as_ref())?,
        "lambda_max": path.lambda_max,
        "all_converged": path.all_converged(),
    });
    write_json(&out.join("path.json"), &sidecar)?;
    Ok(Outcome::from_flag(path.all_converged()))
}

/// The resolved configuration of `experiment <kind>` for the given flags.
pub fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = resolve(
        &ExperimentConfig::defaults(args.name),
        args.common.config.as_deref(),
        &flags(args)?,
    )?;
    cfg.validate(args.name)?;
    Ok(cfg)
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<Outcome> {
    let cfg = experiment_config(args)?;
    let out = output_dir(&args.common.out, "experiment")?;
    let all_converged = match args.name {
        ExperimentKind::Rmse => write_rmse(&out, &run_rmse(&cfg)?)?,
        ExperimentKind::Roc => write_roc(&out, &cfg, &run_roc(&cfg)?)?,
        ExperimentKind::Trials => write_trials(&out, &run_trials(&cfg)?)?,
    };
    let sidecar = json!({
        "experiment": args.name.name(),
        "config": cfg,
        "all_converged": all_converged,
    });
    write_json(&out.join(format!("{}.json", args.name.name())), &sidecar)?;
    Ok(Outcome::from_flag(all_converged))
}

fn grid(cfg: &ExperimentConfig) -> Vec<f64> {
    ratio_grid(cfg.num, cfg.ratio_min)
}

pub fn run_rmse(cfg: &ExperimentConfig) -> Result<Vec<RmseRecord>> {
    Ok(rmse_experiment(
        &cfg.data.spec(0),
        &cfg.seeds,
        &cfg.solvers,
        &grid(cfg),
        &cfg.options.settings(),
    )?)
}

pub fn run_roc(cfg: &ExperimentConfig) -> Result<Vec<RocRecord>> {
    Ok(roc_experiment(
        &cfg.data.spec(0),
        &cfg.seeds,
        &cfg.solvers,
        &grid(cfg),
        &cfg.options.settings(),
    )?)
}

/// One report per seed, in seed order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialsReport>> {
    let settings = cfg.options.settings();
    cfg.seeds
        .iter()
        .map(|&seed| {
            Ok(trials_experiment(
                &cfg.data.spec(seed),
                &cfg.t_values,
                cfg.lambda_ratio,
                &settings,
            )?)
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// The path point of `(seed, solver)` with the smallest test error averaged
/// over blocks. Ties keep the larger regularization.
pub fn best_by_test<'a>(
    records: &'a [RmseRecord],
    seed: u64,
    solver: SolverKind,
) -> Option<&'a RmseRecord> {
    records
        .iter()
        .filter(|r| r.seed == seed && r.solver == solver)
        .fold(None, |best: Option<&RmseRecord>, r| match best {
            Some(b) if mean(&b.test) <= mean(&r.test) => Some(b),
            _ => Some(r),
        })
}

fn header(fixed: &[&str], numbered: &[(&str, usize)]) -> Vec<String> {
    let mut h: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    for &(prefix, k) in numbered {
        h.extend((1..=k).map(|i| format!("{prefix}_{i}")));
    }
    h
}

fn floats(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|&x| format_f64(x))
}

fn table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    write_table(BufWriter::new(fs::File::create(path)?), header, rows)?;
    Ok(())
}

fn seeds_in_order<T>(records: &[T], seed: impl Fn(&T) -> u64) -> Vec<u64> {
    let mut seeds: Vec<u64> = Vec::new();
    for r in records {
        if !seeds.contains(&seed(r)) {
            seeds.push(seed(r));
        }
    }
    seeds
}

fn solvers_in_order<T>(records: &[T], solver: impl Fn(&T) -> SolverKind) -> Vec<SolverKind> {
    let mut solvers: Vec<SolverKind> = Vec::new();
    for r in records {
        if !solvers.contains(&solver(r)) {
            solvers.push(solver(r));
        }
    }
    solvers
}

fn write_rmse(out: &Path, records: &[RmseRecord]) -> Result<bool> {
    let k = records.first().map_or(0, |r| r.test.len());
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.seed.to_string(),
                r.solver.to_string(),
                format_f64(r.lambda_ratio),
                format_f64(r.lambda),
                r.converged.to_string(),
            ];
            row.extend(floats(&r.train));
            row.extend(floats(&r.test));
            row
        })
        .collect();
    table(
        &out.join("rmse.csv"),
        &header(
            &["seed", "solver", "lambda_ratio", "lambda", "converged"],
            &[("train", k), ("test", k)],
        ),
        &rows,
    )?;

    let mut summary = Vec::new();
    for seed in seeds_in_order(records, |r| r.seed) {
        for solver in solvers_in_order(records, |r| r.solver) {
            if let Some(best) = best_by_test(records, seed, solver) {
                let mut row = vec![
                    seed.to_string(),
                    solver.to_string(),
                    format_f64(best.lambda_ratio),
                    best.converged.to_string(),
                    format_f64(mean(&best.test)),
                ];
                row.extend(floats(&best.test));
                summary.push(row);
            }
        }
    }
    table(
        &out.join("rmse_summary.csv"),
        &header(
            &["seed", "solver", "best_lambda_ratio", "converged", "mean_test"],
            &[("test", k)],
        ),
        &summary,
    )?;
    Ok(records.iter().all(|r| r.converged))
}

fn write_roc(out: &Path, cfg: &ExperimentConfig, records: &[RocRecord]) -> Result<bool> {
    let points: Vec<Vec<String>> = records
        .iter()
        .flat_map(|r| {
            r.curve.points.iter().map(move |p| {
                vec![
                    r.seed.to_string(),
                    r.solver.to_string(),
                    format_f64(p.lambda_ratio),
                    format_f64(p.fpr),
                    format_f64(p.tpr),
                ]
            })
        })
        .collect();
    table(
        &out.join("roc.csv"),
        &header(&["seed", "solver", "lambda_ratio", "fpr", "tpr"], &[]),
        &points,
    )?;
    let aucs: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                r.solver.to_string(),
                format_f64(r.curve.auc),
                r.curve.all_converged.to_string(),
            ]
        })
        .collect();
    table(
        &out.join("roc_auc.csv"),
        &header(&["seed", "solver", "auc", "converged"], &[]),
        &aucs,
    )?;
    let summary: Vec<Vec<String>> = mean_auc(records, &cfg.solvers)
        .into_iter()
        .map(|(solver, auc)| {
            vec![
                solver.to_string(),
                format_f64(auc),
                cfg.seeds.len().to_string(),
            ]
        })
        .collect();
    table(
        &out.join("roc_summary.csv"),
        &header(&["solver", "mean_auc", "seeds"], &[]),
        &summary,
    )?;
    Ok(records.iter().all(|r| r.curve.all_converged))
}

fn write_trials(out: &Path, reports: &[TrialsReport]) -> Result<bool> {
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for rep in reports {
        for (i, &t) in rep.t_values.iter().enumerate() {
            for k in 0..rep.sigma_star.len() {
                rows.push(vec![
                    rep.spec.seed.to_string(),
                    t.to_string(),
                    (k + 1).to_string(),
                    format_f64(rep.sigma_hat[i][k]),
                    format_f64(rep.noise_rms[i][k]),
                    format_f64(rep.sigma_star[k]),
                ]);
            }
        }
        for (k, &s) in rep.slopes.iter().enumerate() {
            slopes.push(vec![
                rep.spec.seed.to_string(),
                (k + 1).to_string(),
                format_f64(rep.spec.noise_multipliers[k]),
                format_f64(s),
            ]);
        }
    }
    table(
        &out.join("trials.csv"),
        &header(
            &["seed", "t", "block", "sigma_hat", "noise_rms", "sigma_star"],
            &[],
        ),
        &rows,
    )?;
    table(
        &out.join("trials_slopes.csv"),
        &header(&["seed", "block", "multiplier", "slope"], &[]),
        &slopes,
    )?;
    Ok(reports.iter().all(|r| r.all_converged))
}
