//! `otgroups`: exact optimal transport on metric spaces and groups.
//!
//! Exit codes: 0 success, 1 mathematical failure, 2 input or usage error.

mod output;

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use otgroups::config::{ProbeConfig, ProbeRun};
use otgroups::io::{ActionFile, MetricFile};
use otgroups::quotient::{lift, pushforward, quotient_metric};
use otgroups::rational::{format as fmt_q, Rational};
use otgroups::{arens_eells_norm, transport, validate_metric, SignedMeasure};

use output::{add_floats, num, read_input, table, InputDigest, RunManifest};

#[derive(Parser)]
#[command(name = "otgroups", version, about = "Exact optimal transport on metric spaces and groups")]
struct Cli {
    /// Output format; defaults to table on a terminal and json otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also print decimal approximations of exact values.
    #[arg(long, global = true)]
    float: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the metric axioms of a metric-space file.
    MetricCheck { path: PathBuf },
    /// Solve the transport norm of a mean-zero measure.
    OtSolve {
        measure: PathBuf,
        space: PathBuf,
        /// Include the Kantorovich witness and dual value.
        #[arg(long)]
        dual: bool,
        /// Check the certificate; exit 1 if it does not verify.
        #[arg(long)]
        verify: bool,
    },
    /// Evaluate or search for a measure with small translation defect.
    Probe {
        config: PathBuf,
        /// Exit 0 even when the target defect is not reached.
        #[arg(long)]
        allow_fail: bool,
    },
    /// Orbit quotient of a finite isometric action.
    Quotient {
        action: PathBuf,
        measure: Option<PathBuf>,
    },
}

struct Outcome {
    result: Value,
    table: String,
    ok: bool,
    inputs: Vec<InputDigest>,
    config: Value,
}

fn parse_measure(text: &str, path: &Path) -> Result<SignedMeasure> {
    serde_json::from_str(text).with_context(|| format!("invalid measure file {}", path.display()))
}

fn q(x: &Rational, float: bool) -> String {
    num(&fmt_q(x), float)
}

fn metric_check(path: &Path, float: bool) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let text = read_input(path, &mut inputs)?;
    let loaded = MetricFile::from_json(&text)?.load()?;
    let report = validate_metric(&loaded.space);
    let ok = report.is_clean();

    let mut t = format!(
        "points checked: {}\nstatus: {}\n",
        report.points_checked,
        if ok { "clean".to_string() } else { format!("{} violation(s)", report.violations.len()) }
    );
    if !ok {
        let rows: Vec<Vec<String>> = report
            .violations
            .iter()
            .map(|v| {
                let j = serde_json::to_value(v).expect("serializable");
                let axiom = j["axiom"].as_str().unwrap_or_default().to_string();
                let pts: Vec<String> = ["x", "y", "z"]
                    .iter()
                    .filter_map(|k| j.get(*k).and_then(Value::as_str).map(str::to_string))
                    .collect();
                let detail: Vec<String> = j
                    .as_object()
                    .expect("object")
                    .iter()
                    .filter(|(k, _)| !matches!(k.as_str(), "axiom" | "x" | "y" | "z"))
                    .map(|(k, v)| format!("{k}={}", num(v.as_str().unwrap_or_default(), float)))
                    .collect();
                vec![axiom, pts.join(" "), detail.join(" ")]
            })
            .collect();
        t.push_str(&table(&["axiom", "points", "detail"], &rows));
    }
    Ok(Outcome {
        result: json!({ "clean": ok, "report": report }),
        table: t,
        ok,
        inputs,
        config: json!({}),
    })
}

fn ot_solve(measure: &Path, space: &Path, dual: bool, verify: bool, float: bool) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let xi = parse_measure(&read_input(measure, &mut inputs)?, measure)?;
    let loaded = MetricFile::from_json(&read_input(space, &mut inputs)?)?.load()?;
    let cert = transport::solve(&xi, &loaded.space)?;

    let mut result = json!({ "value": fmt_q(&cert.value), "plan": cert.plan });
    let mut t = format!("value: {}\n", q(&cert.value, float));
    let rows: Vec<Vec<String>> = cert
        .plan
        .moves
        .iter()
        .map(|m| vec![m.source.to_string(), m.sink.to_string(), q(&m.mass, float)])
        .collect();
    t.push_str(&table(&["source", "sink", "mass"], &rows));

    if dual {
        let dual_value = cert.witness.pair(&xi)?;
        result["dual_value"] = json!(fmt_q(&dual_value));
        result["witness"] = serde_json::to_value(&cert.witness)?;
        t.push_str(&format!("dual value: {}\n", q(&dual_value, float)));
        let rows: Vec<Vec<String>> = cert
            .witness
            .values
            .iter()
            .map(|(p, v)| vec![p.to_string(), q(v, float)])
            .collect();
        t.push_str(&table(&["point", "phi"], &rows));
    }
    let mut ok = true;
    if verify {
        ok = transport::verify_certificate(&xi, &cert.plan, &cert.witness, &loaded.space);
        result["verified"] = json!(ok);
        t.push_str(&format!("certificate: {}\n", if ok { "verified" } else { "FAILED" }));
    }
    Ok(Outcome {
        result,
        table: t,
        ok,
        inputs,
        config: json!({ "dual": dual, "verify": verify }),
    })
}

fn probe_table(run: &ProbeRun, float: bool) -> String {
    let mut t = format!(
        "generators: {}\nE: {}\nepsilon: {}\n",
        run.generators.join(", "),
        run.elements.join(", "),
        q(&run.epsilon, float)
    );
    let rows: Vec<Vec<String>> = run
        .report
        .per_pair
        .iter()
        .map(|p| {
            vec![
                p.g.clone(),
                p.f.clone(),
                q(&p.value, float),
                if p.verified { "verified" } else { "FAILED" }.to_string(),
            ]
        })
        .collect();
    t.push_str(&table(&["g", "f", "value", "certificate"], &rows));
    t.push_str(&format!(
        "defect: {} (support {})\n",
        q(&run.report.defect, float),
        run.report.beta.len()
    ));
    if let Some(s) = &run.search {
        t.push_str(&format!(
            "search: {:?} after {} evaluations, {} steps, pool {:?} of {}\n",
            s.status,
            s.evaluations,
            s.steps.len(),
            s.pool,
            s.pool_size
        ));
    }
    if let Some(f) = &run.folner {
        t.push_str(&format!(
            "bound (2N^2+2N)/(4M+2) with N={}, M={}: {} ({})\n",
            f.radius,
            f.half_width,
            q(&f.bound, float),
            if f.bound_holds { "holds" } else { "VIOLATED" }
        ));
    }
    if let Some(m) = &run.multiset {
        t.push_str(&format!(
            "multiset n={} perturbation {}: matching {} vs flow {} on ({}, {}) ({})\n",
            m.size,
            q(&m.perturbation, float),
            q(&m.matching_value, float),
            q(&m.flow_value, float),
            m.g,
            m.f,
            if m.agrees { "agree" } else { "DISAGREE" }
        ));
        for c in &m.counts {
            t.push_str(&format!(
                "  threshold {}: count {} <= {} ({})\n",
                q(&c.threshold, float),
                c.count,
                q(&c.markov_bound, float),
                if c.sound { "ok" } else { "VIOLATED" }
            ));
        }
    }
    if let Some(o) = &run.obstruction {
        t.push_str(&format!(
            "lower bound on ({}, {}) from {}: {} <= {} ({})\n",
            o.g,
            o.f,
            o.witness,
            q(&o.lower_bound, float),
            q(&o.pair_value, float),
            if o.certified { "certified" } else { "NOT CERTIFIED" }
        ));
    }
    t.push_str(&format!("status: {}\n", if run.success { "success" } else { "failure" }));
    t
}

fn probe(config: &Path, float: bool) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let cfg = ProbeConfig::from_toml(&read_input(config, &mut inputs)?)?;
    let run = otgroups::config::run_probe(&cfg)?;
    Ok(Outcome {
        table: probe_table(&run, float),
        ok: run.success,
        result: serde_json::to_value(&run)?,
        inputs,
        config: serde_json::to_value(&cfg)?,
    })
}

fn quotient(action: &Path, measure: Option<&Path>, float: bool) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let act = ActionFile::from_json(&read_input(action, &mut inputs)?)?.load()?;
    let qs = quotient_metric(&act);
    let validation = validate_metric(qs.metric());
    let mut ok = validation.is_clean();

    let n = qs.classes().len();
    let ids: Vec<String> = (0..n).map(|c| qs.class_id(c).to_string()).collect();
    let matrix: Vec<Vec<String>> = (0..n)
        .map(|i| (0..n).map(|j| fmt_q(qs.metric().entry(i, j).expect("explicit"))).collect())
        .collect();
    let classes: Vec<Value> = (0..n)
        .map(|c| json!({ "id": ids[c], "points": qs.class_points(c) }))
        .collect();
    let mut result = json!({
        "group_order": act.order(),
        "classes": classes,
        "matrix": matrix,
        "metric_valid": validation.is_clean(),
    });

    let mut t = format!("group order: {}\norbits: {}\n", act.order(), n);
    let mut header = vec!["d_H"];
    header.extend(ids.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            std::iter::once(ids[i].clone())
                .chain(matrix[i].iter().map(|s| num(s, float)))
                .collect()
        })
        .collect();
    t.push_str(&table(&header, &rows));
    t.push_str(&format!(
        "quotient metric: {}\n",
        if validation.is_clean() { "valid" } else { "INVALID" }
    ));

    if let Some(path) = measure {
        let xi = parse_measure(&read_input(path, &mut inputs)?, path)?;
        let pushed = pushforward(&xi, &qs)?;
        let (base_norm, _) = arens_eells_norm(&xi, qs.base())?;
        let (quot_norm, _) = arens_eells_norm(&pushed, qs.metric())?;
        let contraction = quot_norm <= base_norm;
        let lifted = lift(&pushed, &qs, &otgroups::rational::int(0))?;
        let (lift_norm, _) = arens_eells_norm(&lifted, qs.base())?;
        let lift_exact = pushforward(&lifted, &qs)? == pushed && lift_norm == quot_norm;
        ok &= contraction && lift_exact;
        result["measure"] = json!({
            "pushforward": pushed,
            "norm": fmt_q(&base_norm),
            "quotient_norm": fmt_q(&quot_norm),
            "contraction": contraction,
            "lift": lifted,
            "lift_norm": fmt_q(&lift_norm),
            "lift_exact": lift_exact,
        });
        let rows: Vec<Vec<String>> = pushed
            .entries()
            .map(|(p, m)| vec![p.to_string(), q(m, float)])
            .collect();
        t.push_str(&table(&["class", "pushforward"], &rows));
        t.push_str(&format!(
            "norm: {}  quotient norm: {}  contraction: {}\nlift norm: {}  exact lift: {}\n",
            q(&base_norm, float),
            q(&quot_norm, float),
            if contraction { "holds" } else { "VIOLATED" },
            q(&lift_norm, float),
            if lift_exact { "yes" } else { "NO" }
        ));
    }
    Ok(Outcome {
        result,
        table: t,
        ok,
        inputs,
        config: json!({}),
    })
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("OTGROUPS_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("OTGROUPS_THREADS must be a positive integer, got {v:?}"))?;
        anyhow::ensure!(n > 0, "OTGROUPS_THREADS must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(String, bool)> {
    init_threads()?;
    let start = Instant::now();
    let float = cli.float;
    let (name, out, allow_fail) = match &cli.command {
        Command::MetricCheck { path } => ("metric-check", metric_check(path, float)?, false),
        Command::OtSolve { measure, space, dual, verify } => {
            ("ot-solve", ot_solve(measure, space, *dual, *verify, float)?, false)
        }
        Command::Probe { config, allow_fail } => ("probe", probe(config, float)?, *allow_fail),
        Command::Quotient { action, measure } => {
            ("quotient", quotient(action, measure.as_deref(), float)?, false)
        }
    };
    let format = cli.format.unwrap_or(if std::io::stdout().is_terminal() {
        Format::Table
    } else {
        Format::Json
    });
    let mut config = out.config;
    if let Value::Object(m) = &mut config {
        m.insert("float".into(), json!(float));
        m.insert("allow_fail".into(), json!(allow_fail));
    }
    let command: Vec<String> = std::iter::once(name.to_string())
        .chain(out.inputs.iter().map(|d| d.path.clone()))
        .collect();
    let manifest = RunManifest::new(command, out.inputs, config, start.elapsed());

    let text = match format {
        Format::Json => {
            let mut result = out.result;
            if float {
                add_floats(&mut result);
            }
            let doc = json!({ "manifest": manifest, "result": result });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Table => {
            let mut t = out.table;
            t.push_str(&format!(
                "-- otgroups {} {} ({} ms)\n",
                manifest.version,
                manifest.command.join(" "),
                manifest.wall_time_ms
            ));
            for d in &manifest.inputs {
                t.push_str(&format!("   {}  {}\n", d.sha256, d.path));
            }
            t
        }
    };
    Ok((text, out.ok || allow_fail))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
