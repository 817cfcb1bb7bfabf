// SPDX-License-Identifier: MIT
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use scg_core::identify::{canonical_sets, estimand, qopt, scg_backdoor_check, set_a1, set_a2};
use scg_core::oracle::{completeness_probe, soundness_experiment, CorpusConfig, PastHorizon};
use scg_core::simulate::{generate, sample_linear_model, variance_experiment};
use scg_core::unroll::DEFAULT_TEMPLATE_CAP;
use scg_core::{identify, AdjustmentSet, Error, FtDagTemplate, MicroQuery, Scg, VerdictKind};

const OK: u8 = 0;
const COUNTEREXAMPLES: u8 = 1;
const NOT_IDENTIFIABLE: u8 = 2;
const REJECTED: u8 = 3;
const INPUT_ERROR: u8 = 4;
const OVER_CAP: u8 = 5;

#[derive(Parser)]
#[command(name = "scg", version, about = "Micro causal effects from summary causal graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the effect is identifiable.
    Identify(QueryArgs),
    /// Test an adjustment set against the SCG-back-door criterion.
    Check {
        #[command(flatten)]
        query: QueryArgs,
        /// JSON list of `[series, offset]` pairs, e.g. `[["W",-1]]`.
        #[arg(long)]
        set: String,
    },
    /// List the canonical adjustment sets.
    Sets(QueryArgs),
    /// The quasi-optimal adjustment set and its estimand.
    Qopt(QueryArgs),
    /// Unroll a template over a window of offsets.
    Unroll {
        #[arg(long)]
        template: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lo: i32,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        hi: i32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Soundness experiment over a seeded random corpus.
    Validate(ValidateArgs),
    /// Search for valid sets the criterion rejects.
    Probe {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, env = "SCG_TEMPLATE_CAP", default_value_t = DEFAULT_TEMPLATE_CAP)]
        template_cap: usize,
        #[arg(long, default_value_t = 4)]
        max_subset_size: usize,
    },
    /// Sample a linear-Gaussian model and generate data, or run the variance experiment.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct QueryArgs {
    /// SCG as JSON: `{"nodes": [...], "edges": [[from, to], ...]}`.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    treatment: String,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    gamma: u32,
    #[arg(long, default_value_t = 1)]
    gamma_max: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 200)]
    n_graphs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    min_nodes: usize,
    #[arg(long, default_value_t = 6)]
    max_nodes: usize,
    #[arg(long, default_value_t = 0.3)]
    edge_probability: f64,
    /// Draw acyclic graphs (self-loops still allowed).
    #[arg(long)]
    acyclic: bool,
    #[arg(long, default_value_t = 1)]
    gamma_max: u32,
    #[arg(long, env = "SCG_TEMPLATE_CAP", default_value_t = DEFAULT_TEMPLATE_CAP)]
    template_cap: usize,
    #[arg(long, default_value_t = 5)]
    max_subset_size: usize,
    /// `floor` cuts every template off below the query window.
    #[arg(long, value_enum, default_value_t = Horizon::Unbounded)]
    horizon: Horizon,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Horizon {
    Unbounded,
    Floor,
}

#[derive(Args)]
struct SimulateArgs {
    /// Template as JSON, as printed by the library.
    #[arg(long)]
    template: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    coef_low: f64,
    #[arg(long, default_value_t = 0.9)]
    coef_high: f64,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    #[arg(long, default_value_t = 50)]
    burn_in: usize,
    /// With `--outcome` and `--gamma`, compares qopt, A1 and A2 instead of emitting data.
    #[arg(long, requires_all = ["outcome", "gamma"])]
    treatment: Option<String>,
    #[arg(long, requires = "treatment")]
    outcome: Option<String>,
    #[arg(long, requires = "treatment")]
    gamma: Option<u32>,
    /// Replicates per experiment repetition.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

/// A report ready to print, plus the exit code it implies.
struct Report {
    json: Value,
    csv: Option<String>,
    summary: Option<String>,
    code: u8,
}

impl Report {
    fn json(json: Value, code: u8) -> Self {
        Report {
            json,
            csv: None,
            summary: None,
            code,
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))
}

fn load_query(a: &QueryArgs) -> Result<(Scg, MicroQuery), Error> {
    let g = Scg::from_json(&read(&a.graph)?)?;
    let q = MicroQuery::named(&g, &a.treatment, &a.outcome, a.gamma, a.gamma_max)?;
    Ok((g, q))
}

fn csv_of<T: Serialize>(rows: &[T]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn single_row(fields: &[(&str, String)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields.iter().map(|(k, _)| *k)).expect("in-memory write");
    w.write_record(fields.iter().map(|(_, v)| v.as_str()))
        .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

fn verdict_code(kind: VerdictKind) -> u8 {
    if kind.is_identifiable() {
        OK
    } else {
        NOT_IDENTIFIABLE
    }
}

fn run_identify(a: &QueryArgs) -> Result<Report, Error> {
    let (g, q) = load_query(a)?;
    let v = identify(&g, &q)?;
    let mut json = v.to_json_value();
    json["query"] = serde_json::to_value(q.to_wire(&g)).expect("query serializes");
    let csv = single_row(&[
        ("treatment", a.treatment.clone()),
        ("outcome", a.outcome.clone()),
        ("gamma", a.gamma.to_string()),
        ("verdict", v.kind.to_string()),
        ("witness", v.witness.clone().unwrap_or_default()),
    ]);
    Ok(Report {
        json,
        csv: Some(csv),
        summary: v.witness.clone(),
        code: verdict_code(v.kind),
    })
}

fn run_check(a: &QueryArgs, set: &str) -> Result<Report, Error> {
    let (g, q) = load_query(a)?;
    let z = AdjustmentSet::from_json(&g, set)?;
    let r = scg_backdoor_check(&g, &q, &z)?;
    let mut json = r.to_json_value(&g);
    json["set"] = z.to_json_value(&g);
    if r.satisfied {
        json["estimand"] = serde_json::to_value(estimand(&g, &q, &z, r.verdict)).expect("estimand serializes");
    }
    let summary = match (r.satisfied, r.item) {
        (true, Some(item)) => format!("accepted by item {}", item.label()),
        (true, None) => "accepted: the treatment does not affect the outcome".to_string(),
        (false, _) => format!("rejected: {}", r.violations.join("; ")),
    };
    let csv = single_row(&[
        ("set", z.display(&g)),
        ("satisfied", r.satisfied.to_string()),
        ("verdict", r.verdict.to_string()),
        ("item", r.item.map(|i| i.label().to_string()).unwrap_or_default()),
        ("violations", r.violations.join("; ")),
    ]);
    Ok(Report {
        json,
        csv: Some(csv),
        summary: Some(summary),
        code: if r.satisfied { OK } else { REJECTED },
    })
}

#[derive(Serialize)]
struct SetRow {
    name: String,
    set: String,
}

fn run_sets(a: &QueryArgs) -> Result<Report, Error> {
    let (g, q) = load_query(a)?;
    let v = identify(&g, &q)?;
    if !v.kind.is_identifiable() {
        return Ok(Report::json(v.to_json_value(), NOT_IDENTIFIABLE));
    }
    let sets = canonical_sets(&g, &q)?;
    let rows: Vec<SetRow> = sets
        .iter()
        .map(|(k, z)| SetRow {
            name: k.clone(),
            set: z.display(&g),
        })
        .collect();
    let map: BTreeMap<&String, Value> = sets.iter().map(|(k, z)| (k, z.to_json_value(&g))).collect();
    Ok(Report {
        json: json!({ "verdict": v.kind.as_str(), "sets": map }),
        csv: Some(csv_of(&rows)?),
        summary: None,
        code: OK,
    })
}

fn run_qopt(a: &QueryArgs) -> Result<Report, Error> {
    let (g, q) = load_query(a)?;
    let v = identify(&g, &q)?;
    if !v.kind.is_identifiable() {
        return Ok(Report::json(v.to_json_value(), NOT_IDENTIFIABLE));
    }
    let z = qopt(&g, &q)?;
    let e = estimand(&g, &q, &z, v.kind);
    let csv = single_row(&[
        ("verdict", v.kind.to_string()),
        ("qopt", z.display(&g)),
        ("estimand", e.formula.clone()),
    ]);
    Ok(Report {
        json: json!({
            "verdict": v.kind.as_str(),
            "qopt": z.to_json_value(&g),
            "estimand": e,
        }),
        csv: Some(csv),
        summary: None,
        code: OK,
    })
}

#[derive(Serialize)]
struct EdgeRow {
    source: String,
    target: String,
}

fn run_unroll(template: &Path, lo: i32, hi: i32) -> Result<Report, Error> {
    if lo > hi {
        return Err(Error::InvalidConfig(format!("empty window [{lo}, {hi}]")));
    }
    let t = FtDagTemplate::from_json(&read(template)?)?;
    let u = t.unroll(lo, hi);
    let g = t.scg();
    let nodes: Vec<String> = (0..u.len()).map(|i| u.var(i).label(g)).collect();
    let rows: Vec<EdgeRow> = u
        .edges()
        .iter()
        .map(|(a, b)| EdgeRow {
            source: a.label(g),
            target: b.label(g),
        })
        .collect();
    let edges: Vec<[&str; 2]> = rows.iter().map(|r| [r.source.as_str(), r.target.as_str()]).collect();
    Ok(Report {
        json: json!({ "window": [lo, hi], "nodes": nodes, "edges": edges }),
        csv: Some(csv_of(&rows)?),
        summary: None,
        code: OK,
    })
}

fn run_validate(a: &ValidateArgs) -> Result<Report, Error> {
    let cfg = CorpusConfig {
        n_graphs: a.n_graphs,
        node_count_range: (a.min_nodes, a.max_nodes),
        edge_probability: a.edge_probability,
        allow_cycles: !a.acyclic,
        gamma_max: a.gamma_max,
        template_cap: a.template_cap,
        seed: a.seed,
        max_subset_size: a.max_subset_size,
        horizon: match a.horizon {
            Horizon::Unbounded => PastHorizon::Unbounded,
            Horizon::Floor => PastHorizon::Floor,
        },
    };
    let r = soundness_experiment(&cfg)?;
    let summary = format!(
        "{} graphs tested, {} over cap, {} not identifiable; {}/{} sets sound; {} counterexamples",
        r.graphs_tested,
        r.graphs_skipped_over_cap,
        r.graphs_not_identifiable,
        r.sets_sound,
        r.sets_checked,
        r.counterexamples.len()
    );
    Ok(Report {
        json: serde_json::to_value(&r).expect("report serializes"),
        csv: Some(r.to_csv()?),
        summary: Some(summary),
        code: if r.is_sound() { OK } else { COUNTEREXAMPLES },
    })
}

#[derive(Serialize)]
struct RejectedRow {
    set: String,
}

fn run_probe(a: &QueryArgs, cap: usize, max_subset_size: usize) -> Result<Report, Error> {
    let (g, q) = load_query(a)?;
    let r = completeness_probe(&g, &q, cap, max_subset_size)?;
    let rows: Vec<RejectedRow> = r
        .rejected
        .iter()
        .map(|s| RejectedRow {
            set: format!("{{{}}}", s.join(", ")),
        })
        .collect();
    let summary = format!(
        "{} sets scanned, {} valid in every template, {} rejected by the criterion",
        r.sets_scanned,
        r.common_valid,
        r.rejected.len()
    );
    Ok(Report {
        json: serde_json::to_value(&r).expect("report serializes"),
        csv: Some(csv_of(&rows)?),
        summary: Some(summary),
        code: OK,
    })
}

fn run_simulate(a: &SimulateArgs) -> Result<Report, Error> {
    let t = FtDagTemplate::from_json(&read(&a.template)?)?;
    let model = sample_linear_model(&t, a.coef_low, a.coef_high, a.seed)?;
    let coefficients = serde_json::to_value(model.coefficients_json()).expect("coefficients serialize");
    let g = t.scg();
    if let (Some(x), Some(y), Some(gamma)) = (&a.treatment, &a.outcome, a.gamma) {
        let q = MicroQuery::named(g, x, y, gamma, t.gamma_max())?;
        let v = identify(g, &q)?;
        if !v.kind.is_identifiable() {
            return Ok(Report::json(v.to_json_value(), NOT_IDENTIFIABLE));
        }
        let sets = BTreeMap::from([
            ("qopt".to_string(), qopt(g, &q)?),
            ("a1".to_string(), set_a1(g, &q)?),
            ("a2".to_string(), set_a2(g, &q)?),
        ]);
        let r = variance_experiment(&model, &q, &sets, a.n, a.reps, a.seed)?;
        let mut json = serde_json::to_value(&r).expect("report serializes");
        json["coefficients"] = coefficients;
        json["qopt_le_a1"] = json!(r.ordered("qopt", "a1", 0.0));
        json["qopt_le_a2"] = json!(r.ordered("qopt", "a2", 0.0));
        #[derive(Serialize)]
        struct Row {
            name: String,
            mean: f64,
            empirical_variance: f64,
            bias: f64,
        }
        let csv_rows: Vec<Row> = r
            .sets
            .iter()
            .map(|(k, s)| Row {
                name: k.clone(),
                mean: s.mean,
                empirical_variance: s.empirical_variance,
                bias: s.bias,
            })
            .collect();
        return Ok(Report {
            json,
            csv: Some(csv_of(&csv_rows)?),
            summary: None,
            code: OK,
        });
    }
    let data = generate(&model, a.replicates, a.horizon, a.burn_in, a.seed)?;
    let values: Vec<Vec<Vec<f64>>> = (0..data.replicates)
        .map(|r| {
            (0..data.horizon)
                .map(|t| (0..data.series_count()).map(|s| data.get(r, t, s)).collect())
                .collect()
        })
        .collect();
    Ok(Report {
        json: json!({
            "coefficients": coefficients,
            "noise_sd": model.noise_sd(),
            "series": data.names,
            "replicates": data.replicates,
            "horizon": data.horizon,
            "values": values,
        }),
        csv: Some(data.to_csv()?),
        summary: None,
        code: OK,
    })
}

fn output_args(c: &Command) -> &OutputArgs {
    match c {
        Command::Identify(q) | Command::Sets(q) | Command::Qopt(q) => &q.output,
        Command::Check { query, .. } | Command::Probe { query, .. } => &query.output,
        Command::Unroll { output, .. } => output,
        Command::Validate(v) => &v.output,
        Command::Simulate(s) => &s.output,
    }
}

fn dispatch(c: &Command) -> Result<Report, Error> {
    match c {
        Command::Identify(q) => run_identify(q),
        Command::Check { query, set } => run_check(query, set),
        Command::Sets(q) => run_sets(q),
        Command::Qopt(q) => run_qopt(q),
        Command::Unroll { template, lo, hi, .. } => run_unroll(template, *lo, *hi),
        Command::Validate(v) => run_validate(v),
        Command::Probe {
            query,
            template_cap,
            max_subset_size,
        } => run_probe(query, *template_cap, *max_subset_size),
        Command::Simulate(s) => run_simulate(s),
    }
}

fn emit(out: &OutputArgs, r: &Report) -> std::io::Result<()> {
    let body = match (out.format, &r.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        _ => format!(
            "{}\n",
            serde_json::to_string_pretty(&r.json).expect("json value serializes")
        ),
    };
    match &out.out {
        Some(p) => fs::write(p, body),
        None => std::io::stdout().write_all(body.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { OK });
        }
    };
    let report = match dispatch(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                Error::OverCap { .. } => OVER_CAP,
                Error::NotIdentifiable => NOT_IDENTIFIABLE,
                _ => INPUT_ERROR,
            });
        }
    };
    if let Some(s) = &report.summary {
        eprintln!("{s}");
    }
    if let Err(e) = emit(output_args(&cli.command), &report) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(INPUT_ERROR);
    }
    ExitCode::from(report.code)
}
