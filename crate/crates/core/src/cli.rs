//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success, 1 on a runtime or data
//! failure, 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::bench::{self, BenchSpec, Cell, DataSource, Scenario, Table};
use crate::dataset::{
    inject_label_noise, load_csv_with_tokens, make_blobs, make_crossplanes, make_two_moons, save_csv, FeatureDataset, LabelMap,
    Standardizer,
};
use crate::kernel::{KernelKind, KernelSpec, WidthConvention};
use crate::linalg::Matrix;
use crate::metrics::{confusion, rate_to_f64, report};
use crate::modelselect::{grid_search, CvResult, GridSpec};
use crate::pingtsvm::{load_model, save_model, train, PinGtsvmModel, PinGtsvmParams};
use crate::qp::QpSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Jsonl,
}

#[derive(Debug, Parser)]
#[command(name = "pingtsvm", version, about = "Pinball-loss twin SVM: synthesize, train, predict, evaluate, tune, benchmark")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Train a model and save it.
    Train(TrainArgs),
    /// Write one predicted label per input row.
    Predict(PredictArgs),
    /// Confusion matrix and metrics of a model on labeled data.
    Evaluate(EvaluateArgs),
    /// Rank a parameter grid by k-fold cross-validation.
    Gridsearch(GridArgs),
    /// Run a benchmark scenario.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Generator {
    Blobs,
    Crossplanes,
    TwoMoons,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(value_enum)]
    generator: Generator,
    /// Points per class.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Dimension (blobs only).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Distance between blob centers.
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    /// Gaussian noise level; defaults to 1 for blobs and 0.1 otherwise.
    #[arg(long)]
    noise: Option<f64>,
    /// Fraction of labels to flip.
    #[arg(long, default_value_t = 0.0)]
    label_noise: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "linear", value_parser = parse_kernel)]
    kernel: KernelKind,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Defaults to `--c1`.
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Overrides `--tau` for the second surface.
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    model_out: PathBuf,
    /// Label token of the positive class.
    #[arg(long, allow_hyphen_values = true)]
    positive_label: Option<String>,
    /// Center and scale features before training; stored in the model.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV rows of features, optionally followed by a label column.
    #[arg(long)]
    data: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Class counted as positive; defaults to the model's positive class.
    #[arg(long, allow_hyphen_values = true)]
    positive_label: Option<String>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "linear", value_parser = parse_kernel)]
    kernel: KernelKind,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Search c1 and c2 independently.
    #[arg(long)]
    untie_c: bool,
    /// Search tau1 and tau2 independently.
    #[arg(long)]
    untie_tau: bool,
    #[arg(long, value_delimiter = ',')]
    c_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sigma_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    tau_values: Option<Vec<f64>>,
    /// How width values are read: `sigma` or `inverse-width`.
    #[arg(long, default_value = "sigma")]
    width: WidthConvention,
    #[arg(long, allow_hyphen_values = true)]
    positive_label: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    scenario: String,
    /// Comma-separated seeds; defaults to 20 seeds starting at `--seed`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Labeled CSV to use instead of the scenario's generator.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    positive_label: Option<String>,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: crate::kernel::KernelError| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl ToString) -> Failure {
    Failure::Usage(msg.to_string())
}

fn runtime(msg: impl ToString) -> Failure {
    Failure::Runtime(msg.to_string())
}

fn io_fail(e: io::Error) -> Failure {
    runtime(format!("write failed: {e}"))
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let ctx = Ctx { seed: cli.seed, format: cli.format, quiet: cli.quiet };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&ctx, a, err),
        Command::Train(a) => cmd_train(&ctx, a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a, out),
        Command::Gridsearch(a) => cmd_gridsearch(&ctx, a, out),
        Command::Bench(a) => cmd_bench(&ctx, a, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Runtime(msg)) = &f;
            let _ = writeln!(err, "error: {msg}");
            f.code()
        }
    }
}

struct Ctx {
    seed: u64,
    format: Format,
    quiet: bool,
}

/// Label table for a file: the default tokens, or `positive` against the
/// one other token the file uses.
fn label_map_for(path: &Path, positive: Option<&str>) -> Result<LabelMap, Failure> {
    let Some(token) = positive else { return Ok(LabelMap::default()) };
    if let Some(map) = LabelMap::with_positive(token) {
        return Ok(map);
    }
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut others: Vec<&str> = Vec::new();
    let mut found = false;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let tok = line.rsplit(',').next().unwrap_or("").trim();
        if tok == token {
            found = true;
        } else if !others.contains(&tok) {
            others.push(tok);
        }
    }
    match (found, others.as_slice()) {
        (true, [other]) => LabelMap::pair(token, other).map_err(usage),
        (false, _) => Err(usage(format!("positive label `{token}` does not occur in {}", path.display()))),
        (true, _) => Err(usage(format!("{} has labels {others:?} besides `{token}`; expected exactly one", path.display()))),
    }
}

fn load_labeled(path: &Path, positive: Option<&str>) -> Result<(FeatureDataset<f64>, LabelMap), Failure> {
    let labels = label_map_for(path, positive)?;
    let (ds, seen) = load_csv_with_tokens(path, &labels).map_err(runtime)?;
    // Echo the file's own tokens in predictions.
    let pos = seen.positive.unwrap_or_else(|| labels.token(1).to_string());
    let neg = seen.negative.unwrap_or_else(|| labels.token(-1).to_string());
    let echo = LabelMap::pair(&pos, &neg).map_err(runtime)?;
    Ok((ds, echo))
}

fn cmd_synth(ctx: &Ctx, a: SynthArgs, err: &mut dyn Write) -> Outcome {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&a.label_noise) {
        return Err(usage(format!("--label-noise {} not in [0, 1]", a.label_noise)));
    }
    let ds = match a.generator {
        Generator::Blobs => make_blobs(a.n, a.d, a.separation, a.noise.unwrap_or(1.0), ctx.seed),
        Generator::Crossplanes => make_crossplanes(a.n, a.noise.unwrap_or(0.1), ctx.seed),
        Generator::TwoMoons => make_two_moons(a.n, a.noise.unwrap_or(0.1), ctx.seed),
    }
    .map_err(usage)?;
    let ds = if a.label_noise > 0.0 { inject_label_noise(&ds, a.label_noise, ctx.seed).map_err(runtime)? } else { ds };
    let labels = LabelMap::pair("+1", "-1").expect("distinct tokens");
    save_csv(&ds, &a.out, &labels).map_err(runtime)?;
    if !ctx.quiet {
        writeln!(err, "wrote {} rows to {}", ds.n(), a.out.display()).map_err(io_fail)?;
    }
    Ok(())
}

fn cmd_train(ctx: &Ctx, a: TrainArgs, out: &mut dyn Write) -> Outcome {
    let kernel = match a.kernel {
        KernelKind::Linear => KernelSpec::linear(),
        KernelKind::Gaussian => KernelSpec::gaussian(a.sigma).map_err(usage)?,
    };
    let params = PinGtsvmParams {
        c1: a.c1,
        c2: a.c2.unwrap_or(a.c1),
        tau1: a.tau,
        tau2: a.tau2.unwrap_or(a.tau),
        kernel,
        ridge: a.ridge.unwrap_or_else(PinGtsvmParams::<f64>::default_ridge),
    };
    params.validate().map_err(usage)?;
    let (ds, tokens) = load_labeled(&a.train, a.positive_label.as_deref())?;
    let standardizer = a.standardize.then(|| Standardizer::fit(&ds));
    let fit = match &standardizer {
        Some(s) => s.apply(&ds).map_err(runtime)?,
        None => ds,
    };
    let start = Instant::now();
    let mut model = train(&fit, &params, &QpSettings::default()).map_err(runtime)?.with_label_map(tokens);
    let wall = start.elapsed().as_secs_f64();
    if let Some(s) = standardizer {
        model = model.with_standardizer(s);
    }
    save_model(&model, &a.model_out).map_err(runtime)?;
    if ctx.quiet {
        return Ok(());
    }
    let table = Table {
        columns: vec!["model", "rows", "features", "wall_time"],
        rows: vec![vec![
            Cell::Text(a.model_out.display().to_string()),
            Cell::Count(fit.n() as u64),
            Cell::Count(fit.d() as u64),
            Cell::Real(wall),
        ]],
    };
    emit(&table, ctx.format, out).map_err(io_fail)
}

/// Feature rows of `path`, dropping a trailing label column when present.
fn read_features(path: &Path, d: usize) -> Result<Matrix<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d && fields.len() != d + 1 {
            return Err(runtime(format!(
                "line {}: model expects {d} features, found {} fields",
                i + 1,
                fields.len()
            )));
        }
        let row = fields[..d]
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| runtime(format!("line {}, field {}: bad number `{f}`", i + 1, j + 1)))
            })
            .collect::<Result<Vec<f64>, Failure>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(runtime(format!("{} has no data rows", path.display())));
    }
    Matrix::from_rows(&rows).map_err(runtime)
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Outcome {
    let model: PinGtsvmModel<f64> = load_model(&a.model).map_err(runtime)?;
    let x = read_features(&a.data, model.d())?;
    let pred = model.predict(&x).map_err(runtime)?;
    let mut text = String::with_capacity(pred.len() * 4);
    for y in pred {
        text.push_str(model.label_map.token(y));
        text.push('\n');
    }
    match a.out {
        Some(path) => fs::write(&path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(io_fail),
    }
}

fn cmd_evaluate(ctx: &Ctx, a: EvaluateArgs, out: &mut dyn Write) -> Outcome {
    let model: PinGtsvmModel<f64> = load_model(&a.model).map_err(runtime)?;
    let positive = match a.positive_label.as_deref() {
        None => 1,
        Some(t) => model
            .label_map
            .resolve(t)
            .ok_or_else(|| usage(format!("positive label `{t}` is not one of the model's labels")))?,
    };
    let (ds, _) = load_csv_with_tokens::<f64>(&a.data, &model.label_map).map_err(runtime)?;
    if ds.d() != model.d() {
        return Err(runtime(format!("model expects {} features, data has {}", model.d(), ds.d())));
    }
    let pred = model.predict(ds.features()).map_err(runtime)?;
    let cm = confusion(ds.labels(), &pred, positive).map_err(runtime)?;
    let rep = report(&cm).map_err(runtime)?;

    let mut rows = vec![];
    for (name, v) in [("tp", cm.tp), ("fp", cm.fp), ("tn", cm.tn), ("fn", cm.fn_)] {
        rows.push(vec![Cell::Text(name.into()), Cell::Count(v), Cell::Text(v.to_string())]);
    }
    for (name, r) in rep.entries() {
        rows.push(match r {
            Some(q) => vec![Cell::Text(name.into()), Cell::Real(rate_to_f64(r).unwrap_or(f64::NAN)), Cell::Text(q.to_string())],
            None => vec![Cell::Text(name.into()), Cell::Missing, Cell::Missing],
        });
    }
    let table = Table { columns: vec!["metric", "value", "exact"], rows };
    if ctx.format == Format::Table {
        let pos = model.label_map.token(positive);
        let neg = model.label_map.token(-positive);
        writeln!(out, "positive class: {pos}").map_err(io_fail)?;
        writeln!(out, "{:>12} {:>10} {:>10}", "", format!("pred {pos}"), format!("pred {neg}")).map_err(io_fail)?;
        writeln!(out, "{:>12} {:>10} {:>10}", format!("true {pos}"), cm.tp, cm.fn_).map_err(io_fail)?;
        writeln!(out, "{:>12} {:>10} {:>10}", format!("true {neg}"), cm.fp, cm.tn).map_err(io_fail)?;
        writeln!(out).map_err(io_fail)?;
        let metrics = Table { columns: table.columns.clone(), rows: table.rows[4..].to_vec() };
        return emit(&metrics, Format::Table, out).map_err(io_fail);
    }
    emit(&table, ctx.format, out).map_err(io_fail)
}

fn width_cell(p: &PinGtsvmParams<f64>) -> Cell {
    match p.kernel.kind {
        KernelKind::Linear => Cell::Missing,
        KernelKind::Gaussian => Cell::Real(p.kernel.sigma),
    }
}

fn grid_table(results: &[CvResult<f64>], with_time: bool) -> Table {
    let mut columns = vec![
        "rank", "grid_index", "c1", "c2", "sigma", "tau1", "tau2", "mean_accuracy", "std_accuracy", "failed_folds",
    ];
    if with_time {
        columns.push("wall_time");
    }
    let rows = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = &r.params;
            let mut row = vec![
                Cell::Count(i as u64 + 1),
                Cell::Count(r.grid_index as u64),
                Cell::Real(p.c1),
                Cell::Real(p.c2),
                width_cell(p),
                Cell::Real(p.tau1),
                Cell::Real(p.tau2),
                Cell::Real(r.mean_accuracy),
                Cell::Real(r.std_accuracy),
                Cell::Count(r.failed_folds() as u64),
            ];
            if with_time {
                row.push(Cell::Real(r.wall_time));
            }
            row
        })
        .collect();
    Table { columns, rows }
}

fn cmd_gridsearch(ctx: &Ctx, a: GridArgs, out: &mut dyn Write) -> Outcome {
    let defaults = GridSpec::<f64>::default_for(a.kernel);
    let grid = GridSpec {
        c_values: a.c_values.unwrap_or(defaults.c_values),
        sigma_values: a.sigma_values.unwrap_or(defaults.sigma_values),
        tau_values: a.tau_values.unwrap_or(defaults.tau_values),
        tie_c: !a.untie_c,
        tie_tau: !a.untie_tau,
        kernel_kind: a.kernel,
        width: a.width,
    };
    grid.validate().map_err(usage)?;
    if a.folds < 2 {
        return Err(usage(format!("--folds must be at least 2, got {}", a.folds)));
    }
    let (ds, _) = load_labeled(&a.train, a.positive_label.as_deref())?;
    let ranked = grid_search(&ds, &grid, a.folds, ctx.seed).map_err(runtime)?;
    let table = grid_table(&ranked, ctx.format == Format::Table);
    emit(&table, ctx.format, out).map_err(io_fail)?;

    let best = &ranked[0].params;
    let sigma = match best.kernel.kind {
        KernelKind::Linear => Value::Null,
        KernelKind::Gaussian => json!(best.kernel.sigma),
    };
    let trailer = match ctx.format {
        Format::Table | Format::Csv => {
            let sigma = if sigma.is_null() { String::new() } else { format!(" --sigma {}", best.kernel.sigma) };
            format!(
                "# best: --kernel {} --c1 {} --c2 {} --tau {} --tau2 {}{sigma}",
                best.kernel.kind, best.c1, best.c2, best.tau1, best.tau2
            )
        }
        Format::Jsonl => json!({"best": {
            "kernel": best.kernel.kind.to_string(),
            "c1": best.c1, "c2": best.c2, "sigma": sigma, "tau1": best.tau1, "tau2": best.tau2,
            "mean_accuracy": ranked[0].mean_accuracy,
        }})
        .to_string(),
    };
    writeln!(out, "{trailer}").map_err(io_fail)
}

fn cmd_bench(ctx: &Ctx, a: BenchArgs, out: &mut dyn Write) -> Outcome {
    let scenario: Scenario = a.scenario.parse().map_err(usage)?;
    let mut spec = BenchSpec::default_for(scenario);
    spec.seeds = a.seeds.unwrap_or_else(|| (0..bench::default_seeds().len() as u64).map(|i| ctx.seed.wrapping_add(i)).collect());
    spec.tune_seed = ctx.seed.wrapping_add(1000);
    if let Some(path) = a.data {
        let labels = label_map_for(&path, a.positive_label.as_deref())?;
        spec.source = DataSource::Csv { path, labels };
    }
    spec.validate().map_err(usage)?;
    let table = bench::run(&spec).map_err(runtime)?;
    match a.out {
        Some(path) => {
            let mut buf = Vec::new();
            emit(&table, ctx.format, &mut buf).map_err(io_fail)?;
            fs::write(&path, buf).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => emit(&table, ctx.format, out).map_err(io_fail),
    }
}

fn cell_text(c: &Cell, exact: bool) -> String {
    match c {
        Cell::Text(s) => s.clone(),
        Cell::Count(n) => n.to_string(),
        Cell::Missing => "n/a".into(),
        Cell::Real(v) if exact => format!("{v}"),
        Cell::Real(v) if *v != 0.0 && v.abs() < 1e-3 => format!("{v:.3e}"),
        Cell::Real(v) => format!("{v:.4}"),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Text(s) => json!(s),
        Cell::Count(n) => json!(n),
        Cell::Real(v) => json!(v),
        Cell::Missing => Value::Null,
    }
}

/// Writes `table` as aligned text, CSV with a header, or one JSON object
/// per row.
pub fn emit(table: &Table, format: Format, out: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Table => {
            let cells: Vec<Vec<String>> = table.rows.iter().map(|r| r.iter().map(|c| cell_text(c, false)).collect()).collect();
            let widths: Vec<usize> = table
                .columns
                .iter()
                .enumerate()
                .map(|(j, h)| cells.iter().map(|r| r[j].len()).chain([h.len()]).max().unwrap_or(0))
                .collect();
            let header: Vec<String> = table.columns.iter().zip(&widths).map(|(h, w)| format!("{h:>w$}")).collect();
            writeln!(out, "{}", header.join("  ").trim_end())?;
            for r in &cells {
                let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                writeln!(out, "{}", line.join("  ").trim_end())?;
            }
        }
        Format::Csv => {
            writeln!(out, "{}", table.columns.join(","))?;
            for r in &table.rows {
                let line: Vec<String> = r.iter().map(|c| cell_text(c, true)).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        Format::Jsonl => {
            for r in &table.rows {
                let obj: Map<String, Value> = table.columns.iter().zip(r).map(|(k, c)| (k.to_string(), cell_json(c))).collect();
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
    }
    Ok(())
}
