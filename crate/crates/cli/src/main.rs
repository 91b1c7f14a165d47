//! `mable`: fit, select, evaluate, sample and benchmark Bernstein polynomial
//! density estimates from the command line.
//!
//! Exit status is 0 on success, 1 when a computation or file operation fails
//! and 2 on a usage error.

mod args;
mod io;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use mable::persist::{model_from_json, model_to_json, to_json_string, FORMAT_VERSION};
use mable::sim::{format_table, run_study, DegreePolicy, StudyConfig, DEFAULT_ISE_NODES};
use mable::transform::{auto_box, truncate};
use mable::{
    fit_fixed_degree, sample_model, select_degrees, to_unit, BernsteinModel, DegreeSelection,
    DegreeVector, FitConfig, FitReport, MableError, SupportBox, TargetDistribution,
};
use serde::Serialize;
use serde_json::json;

use args::{BoxSpec, Cli, Command, DataArgs, DegreeSpec, EvalArgs, FitArgs, Quantity, SampleArgs, SelectArgs, SimulateArgs};
use io::{column_names, read_table, read_text, sink, write_text, CsvOut};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Runtime(format!("{}: {e}", path.display()))
    }
}

impl From<MableError> for CliError {
    fn from(e: MableError) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.into())
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Select(a) => select(a),
        Command::Eval(a) => eval(a),
        Command::Sample(a) => sample(a, cli.seed),
        Command::Simulate(a) => simulate(a, cli.seed),
    }
}

/// Data mapped to the unit cube, with what is needed to describe how.
struct Prepared {
    unit: mable::Dataset,
    support: SupportBox,
    columns: Option<Vec<String>>,
    dropped: usize,
    box_mode: serde_json::Value,
}

fn prepare(args: &DataArgs) -> Result<Prepared, CliError> {
    let table = read_table(&args.input, args.header)?;
    let mut data = table.data;
    let (support, box_mode) = match &args.support {
        BoxSpec::Auto { margin } => (auto_box(&data, *margin)?, json!({ "auto": { "margin": margin } })),
        BoxSpec::Explicit { lower, upper } => {
            if lower.len() != data.dim() {
                return Err(CliError::Usage(format!(
                    "box has {} dimensions but the data have {}",
                    lower.len(),
                    data.dim()
                )));
            }
            (SupportBox::new(lower.clone(), upper.clone())?, json!("explicit"))
        }
    };
    let mut dropped = 0;
    if args.truncate {
        let before = data.n();
        data = truncate(&data, &support)?
            .ok_or_else(|| CliError::Runtime("no observations inside the box".into()))?;
        dropped = before - data.n();
        if dropped > 0 {
            log::warn!("dropped {dropped} observations outside the box");
        }
    }
    let unit = to_unit(&data, &support).map_err(|e| match e {
        MableError::RowOutsideBox { row, dim } => CliError::Runtime(format!(
            "observation {} lies outside the box in dimension {}; widen the box or pass --truncate",
            row + 1,
            dim + 1
        )),
        other => other.into(),
    })?;
    Ok(Prepared {
        unit,
        support,
        columns: table.columns,
        dropped,
        box_mode,
    })
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    format_version: u32,
    #[serde(flatten)]
    report: &'a FitReport,
}

#[derive(Serialize)]
struct SelectionDocument<'a> {
    format_version: u32,
    n: usize,
    support: &'a SupportBox,
    #[serde(flatten)]
    selection: &'a DegreeSelection,
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let config = args.fit.config();
    config.validate()?;
    let prepared = prepare(&args.data)?;
    let d = prepared.unit.dim();
    let (degrees, selection) = match &args.degrees {
        DegreeSpec::Explicit(m) => {
            if m.len() != d {
                return Err(CliError::Usage(format!(
                    "{} degrees given for {d}-dimensional data",
                    m.len()
                )));
            }
            (DegreeVector::new(m.clone())?, None)
        }
        DegreeSpec::Auto => {
            let grids = args.fit.grids();
            let selection = select_degrees(&prepared.unit, &grids, &config)?;
            (selection.degrees()?, Some(selection))
        }
    };
    if args.selection.is_some() && selection.is_none() {
        log::warn!("--selection is ignored with explicit degrees");
    }
    let (p, report) = fit_fixed_degree(&degrees, &prepared.unit, &config)?;
    if !report.converged {
        log::warn!("EM stopped after {} iterations without converging", report.iterations);
    }
    let model = BernsteinModel::new(degrees, p, prepared.support.clone())?;
    let provenance = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "n": prepared.unit.n(),
        "dropped": prepared.dropped,
        "columns": prepared.columns,
        "degrees": model.degrees(),
        "degree_selection": if selection.is_some() { "auto" } else { "explicit" },
        "box": prepared.box_mode,
        "config": config_json(&config),
        "final_loglik": report.final_loglik,
        "converged": report.converged,
    });
    write_text(&args.output, &model_to_json(&model, Some(provenance))?)?;
    if let Some(path) = &args.report {
        let doc = ReportDocument { format_version: FORMAT_VERSION, report: &report };
        write_text(path, &to_json_string(&doc)?)?;
    }
    if let (Some(path), Some(selection)) = (&args.selection, &selection) {
        let doc = SelectionDocument {
            format_version: FORMAT_VERSION,
            n: prepared.unit.n(),
            support: &prepared.support,
            selection,
        };
        write_text(path, &to_json_string(&doc)?)?;
    }
    Ok(())
}

fn config_json(config: &FitConfig) -> serde_json::Value {
    json!({
        "tol": config.tol,
        "max_iters": config.max_iters,
        "boundary_eps": config.boundary_eps,
    })
}

fn select(args: SelectArgs) -> Result<(), CliError> {
    let config = args.fit.config();
    config.validate()?;
    let prepared = prepare(&args.data)?;
    let grids = args.fit.grids();
    let selection = select_degrees(&prepared.unit, &grids, &config)?;
    let doc = SelectionDocument {
        format_version: FORMAT_VERSION,
        n: prepared.unit.n(),
        support: &prepared.support,
        selection: &selection,
    };
    let mut out = sink(args.output.as_ref())?;
    out.write_all(to_json_string(&doc)?.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Runtime(e.to_string()))
}

struct LoadedModel {
    model: BernsteinModel,
    columns: Option<Vec<String>>,
}

fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = read_text(path)?;
    let model = model_from_json(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let columns = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| serde_json::from_value(v["provenance"]["columns"].clone()).ok());
    Ok(LoadedModel { model, columns })
}

const EVAL_CHUNK: usize = 1 << 14;
const MAX_GRID_POINTS: usize = 1 << 28;

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let LoadedModel { model, columns } = load_model(&args.model)?;
    let d = model.dim();
    let support = model.support().clone();
    let mut header = column_names(columns.as_deref(), d);
    header.push(match args.what {
        Quantity::Density => "density".into(),
        Quantity::Cdf => "cdf".into(),
    });
    let evaluate = |points: &[Vec<f64>]| -> Result<Vec<f64>, CliError> {
        Ok(match args.what {
            Quantity::Density => model.density_many(points)?,
            Quantity::Cdf => model.cdf_many(points)?,
        })
    };
    let mut out = CsvOut::new(sink(args.output.as_ref())?, &header)?;
    if let Some(r) = args.grid {
        let total = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(r))
            .filter(|&t| t <= MAX_GRID_POINTS)
            .ok_or_else(|| CliError::Usage(format!("a {r}-point grid in {d} dimensions is too large")))?;
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let (a, b) = (support.lower()[j], support.upper()[j]);
                (0..r)
                    .map(|i| if i + 1 == r { b } else { a + (b - a) * i as f64 / (r - 1) as f64 })
                    .collect()
            })
            .collect();
        let mut start = 0;
        while start < total {
            let end = (start + EVAL_CHUNK).min(total);
            let points: Vec<Vec<f64>> = (start..end)
                .map(|mut k| {
                    let mut x = vec![0.0; d];
                    for j in (0..d).rev() {
                        x[j] = axes[j][k % r];
                        k /= r;
                    }
                    x
                })
                .collect();
            for (x, v) in points.iter().zip(evaluate(&points)?) {
                out.row(x.iter().copied().chain([v]))?;
            }
            start = end;
        }
    } else if let Some(path) = &args.points {
        let table = read_table(path, args.header)?;
        if table.data.dim() != d {
            return Err(CliError::Runtime(format!(
                "{}: points have {} columns but the model has {d} dimensions",
                path.display(),
                table.data.dim()
            )));
        }
        let rows = table.data.to_rows();
        let mut outside = 0usize;
        for chunk in rows.chunks(EVAL_CHUNK) {
            let (inside, idx): (Vec<Vec<f64>>, Vec<usize>) = chunk
                .iter()
                .enumerate()
                .filter(|(_, x)| support.contains(x))
                .map(|(i, x)| (x.clone(), i))
                .unzip();
            let mut values = vec![0.0; chunk.len()];
            for (i, v) in idx.into_iter().zip(evaluate(&inside)?) {
                values[i] = v;
            }
            outside += chunk.len() - inside.len();
            for (x, v) in chunk.iter().zip(values) {
                out.row(x.iter().copied().chain([v]))?;
            }
        }
        if outside > 0 {
            eprintln!("warning: {outside} points outside the box were given the value 0");
        }
    }
    out.finish()
}

fn sample(args: SampleArgs, seed: u64) -> Result<(), CliError> {
    let LoadedModel { model, columns } = load_model(&args.model)?;
    let draws = sample_model(&model, args.n, seed)?;
    let mut out = CsvOut::new(sink(args.output.as_ref())?, &column_names(columns.as_deref(), model.dim()))?;
    for x in draws {
        out.row(x)?;
    }
    out.finish()
}

fn simulate(args: SimulateArgs, seed: u64) -> Result<(), CliError> {
    let target = TargetDistribution::by_name(args.target.key())
        .ok_or_else(|| CliError::Usage(format!("unknown target {:?}", args.target.key())))?;
    let degrees = match &args.degrees {
        DegreeSpec::Auto => DegreePolicy::Select(args.fit.grids()),
        DegreeSpec::Explicit(m) => {
            if m.len() != 2 {
                return Err(CliError::Usage(format!("targets are bivariate; got {} degrees", m.len())));
            }
            DegreePolicy::Fixed(DegreeVector::new(m.clone())?)
        }
    };
    let config = StudyConfig {
        n: args.n,
        runs: args.runs,
        seed,
        degrees,
        fit: args.fit.config(),
        ise_nodes: DEFAULT_ISE_NODES,
    };
    config.fit.validate()?;
    let start = Instant::now();
    let result = run_study(&target, &config)?;
    eprintln!(
        "{} runs of n = {} on {} in {:.2} s",
        result.runs,
        result.n,
        result.target,
        start.elapsed().as_secs_f64()
    );
    if result.failed_runs > 0 {
        log::warn!("{} of {} runs failed and were excluded", result.failed_runs, result.runs);
    }
    write_text(&args.output, &to_json_string(&result)?)?;
    let table = format_table(std::slice::from_ref(&result));
    match &args.table {
        Some(path) => write_text(path, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}
