//! Command-line front end.
//!
//! Every command writes one report to stdout in JSON (default), Markdown or
//! CSV. Exit codes: 0 no paradox, 10 paradox, 2 error. Stochastic commands
//! echo their seed, and output never depends on `--threads`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::common_cause::{
    compose, matches_target, search_ternary, theorem1_grid, theorem1_scan, SearchOutcome, SearchTarget,
};
use crate::contingency::{alternative_criteria, detect_simpson, necessary_conditions, JointTable, ParadoxReport};
use crate::datasets::{self, coarse_grain, partition_scan, reconstruct_joint, Format, LabeledTable, Labels, PublishedConditionals};
use crate::frequency::{aggregation_ks, estimate_frequency};
use crate::gaussian::{
    self, conditional_cov_a_given_b, detect_continuous_simpson, large_scale_b_conditional, marginal_covariance,
    matrix_from_rows, matrix_identity_suite, minimal_case, theorem2_suite, two_component_counterexample,
    GaussianCauseModel,
};
use crate::{Error, Result};

pub const EXIT_NO_PARADOX: i32 = 0;
pub const EXIT_PARADOX: i32 = 10;
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Md,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "simpson", version, about = "Simpson's paradox detection and common-cause analysis")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Seed for stochastic commands.
    #[arg(long, global = true, env = "SIMPSON_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TableInput {
    /// Table file (JSON or CSV, by extension).
    pub input: PathBuf,
    /// Comma-separated indices of the B levels merged into `b`; required for
    /// tables whose B has more than two levels.
    #[arg(long, value_delimiter = ',')]
    pub b_levels: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Aggregate,
    Fine,
    Mixed,
}

impl From<TargetArg> for SearchTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Aggregate => SearchTarget::AggregateOption,
            TargetArg::Fine => SearchTarget::FineOption,
            TargetArg::Mixed => SearchTarget::MixedSigns,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    #[value(name = "+")]
    Plus,
    #[value(name = "-")]
    Minus,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a table and report necessary conditions and alternative criteria.
    Detect(TableInput),
    /// Scan all two-block partitions of a multi-level B.
    Partitions {
        input: PathBuf,
    },
    /// Rebuild a joint table from published conditionals.
    Reconstruct {
        /// JSON with `labels`, `published` and optional `provenance`.
        input: PathBuf,
    },
    /// Binary kernel scan or ternary cause search on a paradox table.
    #[command(group(clap::ArgGroup::new("mode").required(true).args(["scan", "grid", "search"])))]
    Cause {
        #[command(flatten)]
        table: TableInput,
        /// Number of uniformly sampled binary kernels.
        #[arg(long)]
        scan: Option<u64>,
        /// Kernel grid with this many steps per axis.
        #[arg(long)]
        grid: Option<u32>,
        /// Sign pattern sought for a ternary cause.
        #[arg(long, value_enum)]
        search: Option<TargetArg>,
        /// Number of cause levels for the search.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Candidate evaluations allowed to the search.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Frequency of the paradox under a symmetric Dirichlet prior.
    Freq {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        samples: u64,
    },
    /// KS distance between aggregated 4-dim and direct 2-dim Dirichlet draws.
    AggregationKs {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Gaussian analyses.
    #[command(subcommand)]
    Gauss(GaussCommand),
}

#[derive(Debug, Subcommand)]
pub enum GaussCommand {
    /// Continuous paradox test on a 3x3 covariance of (a1, a2, b).
    Detect { input: PathBuf },
    /// Closed forms for a minimal (scalar) cause model.
    Minimal { input: PathBuf },
    /// Two-component cause model with a paradox and the requested sign of covA[0][1].
    Counterexample {
        #[arg(long, value_enum, allow_hyphen_values = true)]
        sign: SignArg,
        #[arg(long, default_value_t = 1e6)]
        scale: f64,
    },
    /// Matrix identity residuals on random well-conditioned instances.
    Identities {
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 8)]
        max_dim: usize,
    },
    /// Sign check on random minimal models.
    Theorem2 {
        #[arg(long, default_value_t = 100_000)]
        models: u64,
    },
}

/// Report plus exit code.
pub struct Outcome {
    pub command: &'static str,
    pub body: Value,
    /// Rows rendered as a table in Markdown and CSV, when present.
    pub rows: Option<(Vec<String>, Vec<Vec<String>>)>,
    pub exit: i32,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_labeled(path: &Path) -> Result<LabeledTable> {
    let text = read(path)?;
    match Format::from_path(path) {
        Format::Json => LabeledTable::parse_json(&text),
        Format::Csv => LabeledTable::parse_csv(&text),
    }
}

fn load_joint(input: &TableInput) -> Result<(LabeledTable, JointTable)> {
    let labeled = load_labeled(&input.input)?;
    let joint = match &input.b_levels {
        Some(levels) => coarse_grain(&labeled, levels)?,
        None => labeled.to_joint()?,
    };
    Ok((labeled, joint))
}

fn options(labels: &Labels, report: &ParadoxReport) -> Value {
    let (a1, a2, na2) = (&labels.a1[0], &labels.a2[0], &labels.a2[1]);
    let cmp = |gap: f64| if gap > 0.0 { ">" } else if gap < 0.0 { "<" } else { "=" };
    let aggregate = format!("p({a1}|{a2}) {} p({a1}|{na2})", cmp(report.aggregate_gap));
    let fine = if report.fine_gaps[0].signum() == report.fine_gaps[1].signum() {
        format!("p({a1}|{a2},B) {} p({a1}|{na2},B) for both B", cmp(report.fine_gaps[0]))
    } else {
        "strata disagree".to_string()
    };
    let cause = if report.status.is_paradox() {
        format!("follows the fine-grained option: {a1} associates with {} via the cause", if report.fine_gaps[0] > 0.0 { a2 } else { na2 })
    } else {
        "no paradox to resolve".to_string()
    };
    json!({"aggregate": aggregate, "fine_grained": fine, "binary_cause": cause})
}

fn cmd_detect(input: &TableInput) -> Result<Outcome> {
    let (labeled, joint) = load_joint(input)?;
    let report = detect_simpson(&joint)?;
    let body = json!({
        "input": input.input.display().to_string(),
        "b_levels": input.b_levels,
        "labels": labeled.labels(),
        "table": joint.to_flat(),
        "report": report,
        "necessary_conditions": necessary_conditions(&joint)?,
        "alternative_criteria": alternative_criteria(&joint)?,
        "options": options(labeled.labels(), &report),
    });
    let exit = if report.status.is_paradox() { EXIT_PARADOX } else { EXIT_NO_PARADOX };
    Ok(Outcome { command: "detect", body, rows: None, exit })
}

fn cmd_partitions(path: &Path) -> Result<Outcome> {
    let labeled = load_labeled(path)?;
    let scan = partition_scan(&labeled)?;
    let names = &labeled.labels().b;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for r in &scan {
        let b: Vec<&str> = r.b_levels.iter().map(|&j| names[j].as_str()).collect();
        let not_b: Vec<&str> = (0..names.len()).filter(|j| !r.b_levels.contains(j)).map(|j| names[j].as_str()).collect();
        rows.push(vec![
            b.join("|"),
            not_b.join("|"),
            format!("{:?}", r.report.status),
            r.report.aggregate_gap.to_string(),
            r.report.fine_gaps[0].to_string(),
            r.report.fine_gaps[1].to_string(),
        ]);
        entries.push(json!({"b": b, "not_b": not_b, "report": r.report}));
    }
    let n_paradox = scan.iter().filter(|r| r.report.status.is_paradox()).count();
    let body = json!({
        "input": path.display().to_string(),
        "b_marginal": labeled.b_marginal(),
        "n_partitions": scan.len(),
        "n_paradox": n_paradox,
        "partitions": entries,
    });
    let header = ["b", "not_b", "status", "aggregate_gap", "fine_gap_b", "fine_gap_not_b"].map(String::from).to_vec();
    let exit = if n_paradox > 0 { EXIT_PARADOX } else { EXIT_NO_PARADOX };
    Ok(Outcome { command: "partitions", body, rows: Some((header, rows)), exit })
}

#[derive(serde::Deserialize)]
struct ReconstructInput {
    labels: Labels,
    published: PublishedConditionals,
    #[serde(default)]
    provenance: String,
}

fn cmd_reconstruct(path: &Path) -> Result<Outcome> {
    let raw: ReconstructInput = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    let rec = reconstruct_joint(&raw.published)?;
    let table = LabeledTable::from_joint(&rec.table, raw.labels, raw.provenance)?.with_published(raw.published);
    let body = json!({
        "b_given_a2": rec.b_given_a2,
        "p_a2": rec.p_a2,
        "residuals": rec.residuals,
        "max_residual": rec.max_residual(),
        "table": serde_json::from_str::<Value>(&table.to_json_string()).expect("valid json"),
    });
    Ok(Outcome { command: "reconstruct", body, rows: None, exit: EXIT_NO_PARADOX })
}

fn cmd_cause(cli: &Cli, table: &TableInput, scan: Option<u64>, grid: Option<u32>, search: Option<TargetArg>, levels: usize, budget: u64) -> Result<Outcome> {
    let (_, joint) = load_joint(table)?;
    if let Some(n) = scan.or(grid.map(u64::from)) {
        let result = match scan {
            Some(_) => theorem1_scan(&joint, n, cli.seed, cli.threads)?,
            None => theorem1_grid(&joint, n as u32)?,
        };
        let header = ["kind", "p_b_given_c", "p_notb_given_notc", "sign_c", "sign_notc"].map(String::from).to_vec();
        let rows = result
            .counterexamples
            .iter()
            .map(|o| ("interior", o))
            .chain(result.boundary_counterexamples.iter().map(|o| ("boundary", o)))
            .map(|(kind, o)| {
                vec![
                    kind.to_string(),
                    o.kernel.p_b_given_c.to_string(),
                    o.kernel.p_notb_given_notc.to_string(),
                    o.signs[0].to_string(),
                    o.signs[1].to_string(),
                ]
            })
            .collect();
        let body = json!({
            "input": table.input.display().to_string(),
            "mode": if scan.is_some() { "scan" } else { "grid" },
            "seed": cli.seed,
            "holds": result.holds(),
            "n_counterexamples": result.counterexamples.len(),
            "scan": result,
        });
        return Ok(Outcome { command: "cause", body, rows: Some((header, rows)), exit: EXIT_NO_PARADOX });
    }
    let target: SearchTarget = search.expect("clap enforces a mode").into();
    if levels != 3 {
        return Err(Error::InvalidCause(format!("the search supports 3 cause levels, got {levels}")));
    }
    let outcome = search_ternary(&joint, target, budget, cli.seed)?;
    let mut body = json!({
        "input": table.input.display().to_string(),
        "mode": "search",
        "target": target,
        "levels": levels,
        "budget": budget,
        "seed": cli.seed,
        "outcome": outcome,
    });
    if let SearchOutcome::Found { model, gaps, .. } = &outcome {
        let report = detect_simpson(&joint)?;
        let composed = compose(model)?;
        let compose_error = composed
            .to_flat()
            .iter()
            .zip(joint.to_flat())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let agg_sign = crate::sign_with_tol(report.aggregate_gap, crate::PROB_TOL);
        body["verification"] = json!({
            "compose_max_abs_error": compose_error,
            "pattern_matches": matches_target(gaps, target, agg_sign, report.fine_sign()),
        });
    }
    Ok(Outcome { command: "cause", body, rows: None, exit: EXIT_NO_PARADOX })
}

fn cmd_freq(cli: &Cli, alpha: f64, samples: u64) -> Result<Outcome> {
    let est = estimate_frequency(alpha, samples, cli.seed, cli.threads)?;
    Ok(Outcome { command: "freq", body: to_value(&est), rows: None, exit: EXIT_NO_PARADOX })
}

fn cmd_aggregation_ks(cli: &Cli, alpha: f64, samples: u64) -> Result<Outcome> {
    let ks = aggregation_ks(alpha, samples, cli.seed, cli.threads)?;
    let body = json!({"alpha": alpha, "samples": samples, "seed": cli.seed, "ks_statistic": ks});
    Ok(Outcome { command: "aggregation-ks", body, rows: None, exit: EXIT_NO_PARADOX })
}

fn parse_cov3(text: &str) -> Result<nalgebra::DMatrix<f64>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let rows = match &v {
        Value::Object(map) => map.get("cov").cloned().ok_or_else(|| Error::Schema("expected key \"cov\"".into()))?,
        other => other.clone(),
    };
    let rows: Vec<Vec<f64>> = serde_json::from_value(rows).map_err(|e| Error::Schema(e.to_string()))?;
    matrix_from_rows("cov", &rows)
}

fn model_summary(model: &GaussianCauseModel) -> Result<Value> {
    let marginal = marginal_covariance(model);
    let conditional = conditional_cov_a_given_b(model)?;
    Ok(json!({
        "model": model.to_json_value(),
        "marginal_covariance": gaussian::matrix_to_rows(&marginal),
        "conditional_cov_a_given_b": gaussian::matrix_to_rows(&conditional),
    }))
}

fn cmd_gauss(cli: &Cli, sub: &GaussCommand) -> Result<Outcome> {
    match sub {
        GaussCommand::Detect { input } => {
            let report = detect_continuous_simpson(&parse_cov3(&read(input)?)?)?;
            let exit = if report.paradox { EXIT_PARADOX } else { EXIT_NO_PARADOX };
            Ok(Outcome { command: "gauss detect", body: to_value(&report), rows: None, exit })
        }
        GaussCommand::Minimal { input } => {
            let model = GaussianCauseModel::from_json(&read(input)?)?;
            let triple = minimal_case(&model)?;
            let mut body = model_summary(&model)?;
            body["minimal"] = to_value(&triple);
            let exit = if triple.paradox { EXIT_PARADOX } else { EXIT_NO_PARADOX };
            Ok(Outcome { command: "gauss minimal", body, rows: None, exit })
        }
        GaussCommand::Counterexample { sign, scale } => {
            let model = two_component_counterexample(*scale, *sign == SignArg::Plus)?;
            let mut body = model_summary(&model)?;
            let marginal = marginal_covariance(&model)[(0, 1)];
            let conditional = conditional_cov_a_given_b(&model)?[(0, 1)];
            let limit = large_scale_b_conditional(&model);
            let paradox = marginal * conditional < 0.0;
            body["marginal_a1a2"] = json!(marginal);
            body["b_conditional_a1a2"] = json!(conditional);
            body["x_conditional_a1a2"] = json!(model.cov_a()[(0, 1)]);
            body["large_scale_limit"] = json!(limit);
            body["limit_relative_error"] = json!((conditional - limit).abs() / limit.abs());
            body["paradox"] = json!(paradox);
            body["x_conditional_sign_matches_fine"] = json!(model.cov_a()[(0, 1)].signum() == conditional.signum());
            let exit = if paradox { EXIT_PARADOX } else { EXIT_NO_PARADOX };
            Ok(Outcome { command: "gauss counterexample", body, rows: None, exit })
        }
        GaussCommand::Identities { instances, max_dim } => {
            let d = matrix_identity_suite(*instances, *max_dim, cli.seed);
            if !d.pass {
                return Err(Error::InvalidModel(format!("identity residuals above tolerance: {}", to_value(&d))));
            }
            Ok(Outcome { command: "gauss identities", body: to_value(&d), rows: None, exit: EXIT_NO_PARADOX })
        }
        GaussCommand::Theorem2 { models } => {
            let s = theorem2_suite(*models, cli.seed, cli.threads)?;
            let mut body = to_value(&s);
            body["holds"] = json!(s.holds());
            Ok(Outcome { command: "gauss theorem2", body, rows: None, exit: EXIT_NO_PARADOX })
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Detect(input) => cmd_detect(input),
        Command::Partitions { input } => cmd_partitions(input),
        Command::Reconstruct { input } => cmd_reconstruct(input),
        Command::Cause { table, scan, grid, search, levels, budget } => {
            cmd_cause(cli, table, *scan, *grid, *search, *levels, *budget)
        }
        Command::Freq { alpha, samples } => cmd_freq(cli, *alpha, *samples),
        Command::AggregationKs { alpha, samples } => cmd_aggregation_ks(cli, *alpha, *samples),
        Command::Gauss(sub) => cmd_gauss(cli, sub),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            items.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out))
        }
        Value::Array(items) => out.push((prefix.to_string(), items.iter().map(scalar).collect::<Vec<_>>().join(" "))),
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn render_markdown(o: &Outcome) -> String {
    let mut s = format!("# simpson {}\n\n", o.command);
    if let Some(opts) = o.body.get("options") {
        s.push_str("## Options\n\n| aggregate | fine-grained | binary common cause |\n|---|---|---|\n");
        s.push_str(&format!(
            "| {} | {} | {} |\n\n",
            md_escape(&scalar(&opts["aggregate"])),
            md_escape(&scalar(&opts["fine_grained"])),
            md_escape(&scalar(&opts["binary_cause"]))
        ));
    }
    if let Some((header, rows)) = &o.rows {
        if !rows.is_empty() {
            s.push_str(&format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len())));
            for r in rows {
                s.push_str(&format!("| {} |\n", r.iter().map(|c| md_escape(c)).collect::<Vec<_>>().join(" | ")));
            }
            s.push('\n');
        }
    }
    let mut fields = Vec::new();
    flatten("", &o.body, &mut fields);
    s.push_str("| field | value |\n|---|---|\n");
    for (k, v) in fields {
        s.push_str(&format!("| {} | {} |\n", md_escape(&k), md_escape(&v)));
    }
    s
}

fn render_csv(o: &Outcome) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    match &o.rows {
        Some((header, rows)) => {
            w.write_record(header).expect("in-memory write");
            rows.iter().for_each(|r| w.write_record(r).expect("in-memory write"));
        }
        None => {
            w.write_record(["field", "value"]).expect("in-memory write");
            let mut fields = Vec::new();
            flatten("", &o.body, &mut fields);
            fields.iter().for_each(|(k, v)| w.write_record([k, v]).expect("in-memory write"));
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn render(o: &Outcome, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&json!({"command": o.command, "result": o.body})).expect("json");
            s.push('\n');
            s
        }
        OutputFormat::Md => render_markdown(o),
        OutputFormat::Csv => render_csv(o),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_NO_PARADOX;
                }
                _ => EXIT_ERROR,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let _ = out.write_all(render(&outcome, cli.format).as_bytes());
            outcome.exit
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Loads a bundled fixture as a joint table (binary `B` only).
pub fn bundled_joint(name: &str) -> Result<JointTable> {
    datasets::bundled(name)?.to_joint()
}
