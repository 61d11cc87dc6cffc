//! Command-line front end: `check`, `solve`, `simulate`, `sweep`, `compare`
//! and `canonical`.
//!
//! Exit status 0 on success, 1 when a check fails (unstable model, z-score
//! above [`Z_LIMIT`]), 2 on usage, parse or I/O errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::Error;
use crate::model::{check_stability, Model, Stability, DEFAULT_SET_CAP};
use crate::sim::{simulate, Estimate, SimulationConfig, SimulationEstimate};
use crate::solver::{analyze, solve_pi, PerformanceReport};
use crate::specfile::{ModelSpec, SpecError};
use crate::transition::TransitionType;

/// `compare` fails when any metric is this many standard errors off.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Parser, Debug)]
#[command(
    name = "matchperf",
    version,
    about = "Performance metrics of FCFM bipartite matching models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Report stability and the smallest margin Δ
    Check {
        spec: PathBuf,
        /// Parameter value for specs with a sweep; defaults to every grid point
        #[arg(long)]
        param: Option<f64>,
    },
    /// Exact stationary metrics, written to report.csv and pi.csv
    Solve {
        spec: PathBuf,
        #[arg(long)]
        param: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Simulated metrics, written to sim_report.csv
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        param: Option<f64>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve at every grid point of the model file's sweep; one CSV per metric
    Sweep {
        spec: PathBuf,
        /// Also simulate each grid point
        #[arg(long)]
        with_sim: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Analytic against simulated values, with z-scores
    Compare {
        spec: PathBuf,
        #[arg(long)]
        param: Option<f64>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Print the model file in canonical form
    Canonical { spec: PathBuf },
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Measured slots per replication
    #[arg(long, default_value_t = 1_000_000)]
    pub slots: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub warmup: u64,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
}

impl SimArgs {
    fn config(&self) -> SimulationConfig {
        SimulationConfig {
            seed: self.seed,
            warmup_slots: self.warmup,
            measured_slots: self.slots,
            replications: self.reps,
            checked: false,
        }
    }
}

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnstableModel { .. } => Failure::check(e.to_string()),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs a parsed command, printing to `out`. Returns the exit status.
pub fn run(cli: Cli, out: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Check { spec, param } => check(&spec, param, out),
        Command::Solve {
            spec,
            param,
            out: dir,
        } => solve(&spec, param, &dir, out),
        Command::Simulate {
            spec,
            param,
            sim,
            out: dir,
        } => simulate_cmd(&spec, param, &sim, &dir, out),
        Command::Sweep {
            spec,
            with_sim,
            sim,
            out: dir,
        } => sweep(&spec, with_sim.then_some(&sim), &dir, out),
        Command::Compare { spec, param, sim } => compare(&spec, param, &sim, out),
        Command::Canonical { spec } => {
            load(&spec).and_then(|s| Ok(write!(out, "{}", s.to_canonical())?))
        }
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> std::result::Result<ModelSpec, Failure> {
    let source =
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    ModelSpec::parse(&source).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn model_for(spec: &ModelSpec, param: Option<f64>) -> std::result::Result<Model, Failure> {
    if param.is_none() && spec.is_parametric() {
        let name = spec
            .sweep
            .as_ref()
            .map_or("parameter", |s| s.parameter.as_str());
        return Err(Failure::usage(format!(
            "this spec depends on `{name}`; pass --param"
        )));
    }
    Ok(spec.model_at(param)?)
}

/// Decimal rendering with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..12).contains(&magnitude) {
        let s = format!("{x:.11e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent");
        return format!("{}e{exponent}", trim_zeros(mantissa));
    }
    let decimals = (11 - magnitude).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn verdict_line(spec: &ModelSpec, verdict: &Stability) -> String {
    match *verdict {
        Stability::Stable {
            tightest: Some((set, delta)),
        } => {
            format!(
                "Stable; min Δ = {} at {}",
                fmt_num(delta),
                spec.set_name(set)
            )
        }
        Stability::Stable { tightest: None } => "Stable; no independent sets".into(),
        Stability::Unstable { witness, delta } => {
            format!(
                "Unstable; Δ = {} at {}",
                fmt_num(delta),
                spec.set_name(witness)
            )
        }
    }
}

fn check(path: &Path, param: Option<f64>, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let points: Vec<Option<f64>> = match (&spec.sweep, param) {
        (_, Some(p)) => vec![Some(p)],
        (Some(sweep), None) if spec.is_parametric() => {
            sweep.grid.iter().map(|&p| Some(p)).collect()
        }
        _ => vec![None],
    };
    let mut all_stable = true;
    for p in points {
        let model = spec.model_at(p)?;
        let verdict = check_stability(&model, DEFAULT_SET_CAP)?;
        all_stable &= verdict.is_stable();
        match p {
            Some(p) if param.is_none() => {
                let name = &spec.sweep.as_ref().expect("sweep").parameter;
                writeln!(
                    out,
                    "{name} = {}: {}",
                    fmt_num(p),
                    verdict_line(&spec, &verdict)
                )?;
            }
            _ => writeln!(out, "{}", verdict_line(&spec, &verdict))?,
        }
    }
    if all_stable {
        Ok(())
    } else {
        Err(Failure::check("model is unstable"))
    }
}

fn csv_writer(path: &Path) -> std::result::Result<csv::Writer<fs::File>, Failure> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))
}

/// Analytic metrics as `(metric, class, value)` rows.
fn report_rows(
    spec: &ModelSpec,
    model: &Model,
    report: &PerformanceReport,
) -> Vec<(String, String, f64)> {
    let mut rows = vec![
        ("pi_empty".to_string(), String::new(), report.pi_empty),
        (
            "set_count".to_string(),
            String::new(),
            report.set_count as f64,
        ),
    ];
    let mut per_class =
        |metric: &str, customers: &[f64], servers: &[f64], c_avg: f64, s_avg: f64| {
            for (name, v) in spec.customers.iter().zip(customers) {
                rows.push((metric.into(), name.clone(), *v));
            }
            for (name, v) in spec.servers.iter().zip(servers) {
                rows.push((metric.into(), name.clone(), *v));
            }
            rows.push((metric.into(), "customers".into(), c_avg));
            rows.push((metric.into(), "servers".into(), s_avg));
        };
    per_class(
        "waiting_probability",
        &report.customer_waiting_prob,
        &report.server_waiting_prob,
        report.customer_average_waiting_prob(model),
        report.server_average_waiting_prob(model),
    );
    per_class(
        "mean_unmatched",
        &report.customer_mean_unmatched,
        &report.server_mean_unmatched,
        report.total_unmatched_customers,
        report.total_unmatched_servers,
    );
    per_class(
        "mean_wait",
        &report.customer_mean_wait,
        &report.server_mean_wait,
        report.customer_average_wait(),
        report.server_average_wait(),
    );
    for t in TransitionType::ALL {
        rows.push((
            "transition_probability".into(),
            t.column().into(),
            report.transitions[t],
        ));
    }
    if let Some((set, delta)) = report.tightest {
        rows.push(("min_delta".into(), spec.set_name(set), delta));
    }
    rows
}

fn solve(path: &Path, param: Option<f64>, dir: &Path, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let model = model_for(&spec, param)?;
    let verdict = check_stability(&model, DEFAULT_SET_CAP)?;
    writeln!(out, "{}", verdict_line(&spec, &verdict))?;
    if let Stability::Unstable { witness, delta } = verdict {
        return Err(Failure::check(format!(
            "refusing to solve an unstable model: Δ({}) = {}",
            spec.set_name(witness),
            fmt_num(delta)
        )));
    }
    let report = analyze(&model)?;
    let pi = solve_pi(&model)?;
    if report.near_unstable {
        eprintln!(
            "warning: smallest margin is below {}; results may be inaccurate",
            crate::solver::NEAR_UNSTABLE_DELTA
        );
    }
    create_dir(dir)?;

    let mut w = csv_writer(&dir.join("report.csv"))?;
    w.write_record(["metric", "class", "value"])?;
    for (metric, class, value) in report_rows(&spec, &model, &report) {
        w.write_record([metric, class, fmt_num(value)])?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("pi.csv"))?;
    w.write_record(["members", "pi", "delta"])?;
    for (set, p) in pi.iter() {
        let delta = if set.is_empty() {
            f64::NAN
        } else {
            model.delta(set)
        };
        let delta = if delta.is_nan() {
            String::new()
        } else {
            fmt_num(delta)
        };
        w.write_record([spec.set_name(set), fmt_num(p), delta])?;
    }
    w.flush()?;

    writeln!(
        out,
        "π(∅) = {}, {} sets; wrote {} and {}",
        fmt_num(report.pi_empty),
        report.set_count,
        dir.join("report.csv").display(),
        dir.join("pi.csv").display()
    )?;
    Ok(())
}

/// Simulated metrics as `(metric, class, estimate)` rows.
fn sim_rows(spec: &ModelSpec, est: &SimulationEstimate) -> Vec<(String, String, Estimate)> {
    let mut rows = Vec::new();
    for (metric, customers, servers) in [
        (
            "waiting_probability",
            &est.customer_waiting_prob,
            &est.server_waiting_prob,
        ),
        ("mean_wait", &est.customer_mean_wait, &est.server_mean_wait),
    ] {
        for (name, e) in spec.customers.iter().zip(customers) {
            rows.push((metric.to_string(), name.clone(), *e));
        }
        for (name, e) in spec.servers.iter().zip(servers) {
            rows.push((metric.to_string(), name.clone(), *e));
        }
    }
    rows.push((
        "mean_unmatched".into(),
        "customers".into(),
        est.mean_unmatched,
    ));
    for t in TransitionType::ALL {
        rows.push((
            "transition_probability".into(),
            t.column().into(),
            est.transitions[t],
        ));
    }
    rows.push(("empty_fraction".into(), String::new(), est.empty_fraction));
    rows.push(("return_time".into(), String::new(), est.mean_return_time));
    rows
}

fn run_simulation(
    model: &Model,
    sim: &SimArgs,
) -> std::result::Result<SimulationEstimate, Failure> {
    let est = simulate(model, &sim.config())?;
    if est.instability_advisory {
        eprintln!("warning: queue lengths look divergent; the model may be unstable");
    }
    Ok(est)
}

fn simulate_cmd(
    path: &Path,
    param: Option<f64>,
    sim: &SimArgs,
    dir: &Path,
    out: &mut dyn Write,
) -> Outcome {
    let spec = load(path)?;
    let model = model_for(&spec, param)?;
    let verdict = check_stability(&model, DEFAULT_SET_CAP)?;
    if !verdict.is_stable() {
        eprintln!("warning: {}", verdict_line(&spec, &verdict));
    }
    let est = run_simulation(&model, sim)?;
    create_dir(dir)?;
    let path = dir.join("sim_report.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["metric", "class", "mean", "stddev"])?;
    for (metric, class, e) in sim_rows(&spec, &est) {
        w.write_record([metric, class, fmt_num(e.mean), fmt_num(e.std_dev)])?;
    }
    w.flush()?;
    writeln!(
        out,
        "{} replications of {} slots; wrote {}",
        sim.reps,
        sim.slots,
        path.display()
    )?;
    Ok(())
}

/// One row per grid point for one metric file.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: impl IntoIterator<Item = String>) -> Self {
        let mut header = vec!["parameter".to_string()];
        header.extend(columns);
        Table {
            header,
            rows: Vec::new(),
        }
    }

    fn write(&self, path: &Path) -> Outcome {
        let mut w = csv_writer(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| fmt_num(v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn with_average(names: &[String]) -> Vec<String> {
    names
        .iter()
        .cloned()
        .chain(["average".to_string()])
        .collect()
}

fn weighted(weights: &[f64], values: impl IntoIterator<Item = f64>) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Per-metric tables shared by the analytic and simulated sweeps.
struct SweepTables {
    customer_waiting: Table,
    server_waiting: Table,
    customer_wait: Table,
    server_wait: Table,
    transitions: Table,
}

impl SweepTables {
    fn new(spec: &ModelSpec) -> Self {
        SweepTables {
            customer_waiting: Table::new(with_average(&spec.customers)),
            server_waiting: Table::new(with_average(&spec.servers)),
            customer_wait: Table::new(with_average(&spec.customers)),
            server_wait: Table::new(with_average(&spec.servers)),
            transitions: Table::new(TransitionType::ALL.iter().map(|t| t.column().to_string())),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        p: f64,
        model: &Model,
        customer_waiting: &[f64],
        server_waiting: &[f64],
        customer_wait: &[f64],
        server_wait: &[f64],
        transitions: [f64; 5],
    ) {
        let row = |values: &[f64], weights: &[f64]| {
            let mut r = vec![p];
            r.extend_from_slice(values);
            r.push(weighted(weights, values.iter().copied()));
            r
        };
        self.customer_waiting
            .rows
            .push(row(customer_waiting, model.lambda()));
        self.server_waiting
            .rows
            .push(row(server_waiting, model.mu()));
        self.customer_wait
            .rows
            .push(row(customer_wait, model.lambda()));
        self.server_wait.rows.push(row(server_wait, model.mu()));
        let mut t = vec![p];
        t.extend_from_slice(&transitions);
        self.transitions.rows.push(t);
    }

    fn write(&self, dir: &Path, prefix: &str) -> std::result::Result<Vec<PathBuf>, Failure> {
        let mut written = Vec::new();
        for (name, table) in [
            ("waiting_probability_customers", &self.customer_waiting),
            ("waiting_probability_servers", &self.server_waiting),
            ("mean_wait_customers", &self.customer_wait),
            ("mean_wait_servers", &self.server_wait),
            ("transition_probabilities", &self.transitions),
        ] {
            let path = dir.join(format!("{prefix}_{name}.csv"));
            table.write(&path)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn sweep(path: &Path, sim: Option<&SimArgs>, dir: &Path, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let Some(sweep) = &spec.sweep else {
        return Err(Failure::usage("spec has no [sweep] table"));
    };
    let models = sweep
        .grid
        .iter()
        .map(|&p| spec.model_at(Some(p)).map(|m| (p, m)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let reports: Vec<_> = models.par_iter().map(|(_, m)| analyze(m)).collect();

    let mut model_tables = SweepTables::new(&spec);
    for ((p, model), report) in models.iter().zip(reports) {
        let report = report.map_err(|e| match e {
            Error::UnstableModel { witness, delta } => Failure::check(format!(
                "unstable at {} = {}: Δ({}) = {}",
                sweep.parameter,
                fmt_num(*p),
                spec.set_name(witness),
                fmt_num(delta)
            )),
            e => e.into(),
        })?;
        model_tables.push(
            *p,
            model,
            &report.customer_waiting_prob,
            &report.server_waiting_prob,
            &report.customer_mean_wait,
            &report.server_mean_wait,
            report.transitions.0,
        );
    }
    create_dir(dir)?;
    let mut written = model_tables.write(dir, "model")?;

    if let Some(sim) = sim {
        let mut sim_tables = SweepTables::new(&spec);
        for (p, model) in &models {
            let est = run_simulation(model, sim)?;
            let means = |v: &[Estimate]| v.iter().map(|e| e.mean).collect::<Vec<_>>();
            sim_tables.push(
                *p,
                model,
                &means(&est.customer_waiting_prob),
                &means(&est.server_waiting_prob),
                &means(&est.customer_mean_wait),
                &means(&est.server_mean_wait),
                est.transitions.0.map(|e| e.mean),
            );
        }
        written.extend(sim_tables.write(dir, "simulation")?);
    }
    writeln!(
        out,
        "{} grid points; wrote {} files to {}",
        models.len(),
        written.len(),
        dir.display()
    )?;
    Ok(())
}

/// Standard score of a simulated estimate against the exact value.
pub fn z_score(exact: f64, estimate: &Estimate, replications: usize) -> f64 {
    let diff = estimate.mean - exact;
    let se = estimate.std_error(replications);
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * exact.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn compare(path: &Path, param: Option<f64>, sim: &SimArgs, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let model = model_for(&spec, param)?;
    let report = analyze(&model)?;
    let est = run_simulation(&model, sim)?;

    let mut exact: Vec<f64> = Vec::new();
    for (c, s) in [
        (&report.customer_waiting_prob, &report.server_waiting_prob),
        (&report.customer_mean_wait, &report.server_mean_wait),
    ] {
        exact.extend(c.iter().chain(s.iter()));
    }
    exact.push(report.total_unmatched_customers);
    exact.extend(report.transitions.0);
    exact.push(report.pi_empty);
    exact.push(1.0 / report.pi_empty);
    let rows = sim_rows(&spec, &est);
    debug_assert_eq!(rows.len(), exact.len());

    writeln!(
        out,
        "{:<24} {:<14} {:>14} {:>14} {:>14} {:>8}",
        "metric", "class", "analytic", "sim_mean", "sim_stddev", "z"
    )?;
    let mut worst = 0.0f64;
    for ((metric, class, e), x) in rows.iter().zip(exact) {
        let z = z_score(x, e, sim.reps);
        worst = worst.max(z.abs());
        writeln!(
            out,
            "{:<24} {:<14} {:>14} {:>14} {:>14} {:>8.2}",
            metric,
            class,
            fmt_num(x),
            fmt_num(e.mean),
            fmt_num(e.std_dev),
            z
        )?;
    }
    writeln!(out, "max |z| = {worst:.2}")?;
    if worst > Z_LIMIT {
        Err(Failure::check(format!(
            "max |z| = {worst:.2} exceeds {Z_LIMIT}"
        )))
    } else {
        Ok(())
    }
}
