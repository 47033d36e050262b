//! Command-line interface: batch access to every module, emitting
//! self-describing tables for external plotting.
//!
//! Every output starts with `#`-prefixed header lines recording the tool
//! version and the fully resolved configuration (measure spec, seed,
//! replica count), so a result file alone identifies the run that made it.
//! The exit status is 0 exactly when every check the subcommand performs
//! passes. There is deliberately no environment-variable override for the
//! seed: reproducibility must be explicit in the invocation.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::census::{RateContext, SeedStream};
use crate::error::{Error, Result};
use crate::measure::{LambdaMeasure, MeasureKind};
use crate::montecarlo::{
    self, aggregate_totals, aggregate_trajectory, run_totals_ensemble, run_trajectory_ensemble,
    ExperimentConfig,
};
use crate::oracle;
use crate::rates;
use crate::theory;

const TOOL: &str = "catcoal";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = TOOL, version, about = "Coalescent caterpillar statistics: simulation and verification")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump merger rates and check their large-b behaviour
    Rates(RatesArgs),
    /// Closed-form limit curves and constants
    Theory(TheoryArgs),
    /// Simulate total caterpillar counts and compare with the limit constants
    Totals(TotalsArgs),
    /// Simulate rescaled trajectories and compare with the limit curves
    Trajectory(TrajectoryArgs),
    /// Run the full property suite: engine equivalence, identities, invariance
    Verify(VerifyArgs),
    /// Fit the scaling exponent of the first-jump variance
    Variance(VarianceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Measure spec, e.g. "kind=beta alpha=1.5 scale=1.0" or "kind=kingman"
    #[arg(long, default_value = "kind=kingman")]
    measure: String,
    /// Master seed; replica j runs on RNG stream (seed, j)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the data table here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format of the data table
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for replica execution (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Block counts to dump
    #[arg(long = "b", default_values_t = vec![10u64, 100, 1000])]
    b_values: Vec<u64>,
    /// Truncation bound on the neglected merger-size tail mass
    #[arg(long, default_value_t = rates::DEFAULT_TAIL_EPS)]
    tail_eps: f64,
    /// Block-count grid for the asymptotic checks
    #[arg(long = "check-b", default_values_t = vec![100u64, 1000, 10000])]
    check_b: Vec<u64>,
    /// Sub-sample fractions x for the asymptotic checks
    #[arg(long = "check-x", default_values_t = vec![0.25f64, 0.5, 1.0])]
    check_x: Vec<f64>,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Stability index in (1, 2]; 2 is the Kingman case
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Caterpillar sizes r to tabulate
    #[arg(long = "r", default_values_t = vec![0u32, 1, 2, 3, 4])]
    r_values: Vec<u32>,
    /// Rescaled times for the curve table
    #[arg(long = "t", default_values_t = vec![0.25f64, 0.5, 1.0, 2.0, 4.0])]
    t_values: Vec<f64>,
}

#[derive(Debug, Args)]
struct TotalsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sample sizes n
    #[arg(long = "n", default_values_t = vec![1000u64])]
    n_values: Vec<u64>,
    /// Largest caterpillar size tracked
    #[arg(long, default_value_t = 4)]
    r_max: u32,
    /// Independent replicas per sample size
    #[arg(long, default_value_t = 100)]
    replicas: u64,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sample size n
    #[arg(long, default_value_t = 10000)]
    n: u64,
    /// Largest caterpillar size tracked
    #[arg(long, default_value_t = 4)]
    r_max: u32,
    /// Independent replicas
    #[arg(long, default_value_t = 50)]
    replicas: u64,
    /// Rescaled snapshot times
    #[arg(long = "t", default_values_t = vec![0.25f64, 0.5, 1.0, 2.0, 4.0])]
    t_values: Vec<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Largest sample size for the oracle-vs-census equivalence sweep
    #[arg(long, default_value_t = 8)]
    small_n: u64,
    /// Seeded runs per sample size in the equivalence sweep
    #[arg(long, default_value_t = 1000)]
    runs: u64,
}

#[derive(Debug, Args)]
struct VarianceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sample-size grid (must span at least two decades)
    #[arg(long = "n", default_values_t = vec![1000u64, 10000, 100000])]
    n_values: Vec<u64>,
    /// Replicas per grid point (default: ~2 n^alpha, tail-noise balanced)
    #[arg(long = "replicas")]
    replicas: Option<Vec<u64>>,
    /// Acceptance band around the reference exponent alpha - 3
    #[arg(long, default_value_t = 0.3)]
    tolerance: f64,
}

/// Parse `argv` and run. Returns the process exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through this path with status 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("{TOOL}: error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Rates(args) => cmd_rates(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Totals(args) => cmd_totals(args),
        Command::Trajectory(args) => cmd_trajectory(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Variance(args) => cmd_variance(args),
    }
}

fn configure_workers(common: &CommonArgs) {
    if let Some(w) = common.workers {
        // Build the global pool once; later calls are no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
}

/// A data table: `#` header lines, a column header, and string rows.
struct Table {
    header_meta: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(command: &str, common: &CommonArgs, measure: Option<&LambdaMeasure>) -> Self {
        let mut header_meta = vec![
            ("tool".to_string(), TOOL.to_string()),
            ("version".to_string(), VERSION.to_string()),
            ("command".to_string(), command.to_string()),
        ];
        if let Some(m) = measure {
            header_meta.push(("measure".to_string(), format!("\"{}\"", m.spec_string())));
        }
        header_meta.push(("seed".to_string(), common.seed.to_string()));
        Self { header_meta, columns: Vec::new(), rows: Vec::new() }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.header_meta.push((key.to_string(), value.to_string()));
    }

    fn columns(&mut self, columns: Vec<&'static str>) {
        self.columns = columns;
    }

    fn row(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        let mut out = String::new();
        let meta: Vec<String> =
            self.header_meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
        match format {
            Format::Csv => {
                writeln!(out, "# {}", meta.join(" ")).unwrap();
                writeln!(out, "{}", self.columns.join(",")).unwrap();
                for row in &self.rows {
                    writeln!(out, "{}", row.join(",")).unwrap();
                }
            }
            Format::Jsonl => {
                let header: serde_json::Map<String, serde_json::Value> = self
                    .header_meta
                    .iter()
                    .map(|(k, v)| {
                        (k.clone(), serde_json::Value::String(v.trim_matches('"').to_string()))
                    })
                    .collect();
                writeln!(out, "{}", serde_json::Value::Object(header)).unwrap();
                for row in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| {
                            let value = if v.is_empty() {
                                serde_json::Value::Null
                            } else if let Ok(x) = v.parse::<i64>() {
                                serde_json::Value::from(x)
                            } else if let Ok(x) = v.parse::<f64>() {
                                serde_json::Value::from(x)
                            } else {
                                serde_json::Value::String(v.clone())
                            };
                            (c.to_string(), value)
                        })
                        .collect();
                    writeln!(out, "{}", serde_json::Value::Object(obj)).unwrap();
                }
            }
        }
        out
    }

    fn emit(&self, common: &CommonArgs) -> Result<()> {
        let text = self.render(common.format);
        match &common.output {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn parse_measure(common: &CommonArgs) -> Result<LambdaMeasure> {
    LambdaMeasure::parse(&common.measure)
}

fn cmd_rates(args: RatesArgs) -> Result<bool> {
    let measure = parse_measure(&args.common)?;
    let mut table = Table::new("rates", &args.common, Some(&measure));
    table.meta("tail_eps", args.tail_eps);
    table.columns(vec!["b", "k", "lambda_bk", "log_block_rate"]);
    for &b in &args.b_values {
        let rt = rates::build_rate_table(&measure, b, args.tail_eps)?;
        for (i, log_rate) in rt.log_block_rates.iter().enumerate() {
            let k = i as u64 + 2;
            let lam = rates::lambda_bk(&measure, b, k)?;
            table.row(vec![
                b.to_string(),
                k.to_string(),
                format!("{lam:.12e}"),
                format!("{log_rate:.12}"),
            ]);
        }
    }
    table.emit(&args.common)?;

    if measure.kind() == MeasureKind::Kingman {
        eprintln!("asymptotic checks: not applicable (Kingman case)");
        return Ok(true);
    }
    let report = rates::asymptotic_validator(&measure, &args.check_b, &args.check_x)?;
    let mut all_pass = true;
    for lemma in &report.lemmas {
        let status = if lemma.monotone_decreasing { "pass" } else { "FAIL" };
        all_pass &= lemma.monotone_decreasing;
        let devs: Vec<String> =
            lemma.deviations.iter().map(|(b, d)| format!("b={b}: {d:.3e}")).collect();
        eprintln!("check {:<32} {status}  sup deviations: {}", lemma.name, devs.join(", "));
        if let Some(note) = &lemma.note {
            eprintln!("    note: {note}");
        }
    }
    Ok(all_pass)
}

fn cmd_theory(args: TheoryArgs) -> Result<bool> {
    let mut table = Table::new("theory", &args.common, None);
    table.meta("alpha", args.alpha);
    table.columns(vec!["alpha", "r", "t", "x_r", "x_up_r"]);
    for &r in &args.r_values {
        for &t in &args.t_values {
            let x = theory::x_r(args.alpha, r, t)?;
            let x_up = if r >= 2 {
                format!("{:.12}", theory::x_up(args.alpha, r, t)?)
            } else {
                String::new()
            };
            table.row(vec![
                args.alpha.to_string(),
                r.to_string(),
                t.to_string(),
                format!("{x:.12}"),
                x_up,
            ]);
        }
    }
    table.emit(&args.common)?;

    for &r in &args.r_values {
        if r >= 2 {
            let c = theory::limit_constant(args.alpha, r)?;
            eprintln!("limit_constant alpha={} r={r}: {c:.12}", args.alpha);
        }
    }
    Ok(true)
}

fn cmd_totals(args: TotalsArgs) -> Result<bool> {
    configure_workers(&args.common);
    let measure = parse_measure(&args.common)?;
    let config = ExperimentConfig {
        measure: measure.clone(),
        n_values: args.n_values.clone(),
        r_max: args.r_max,
        replicas: args.replicas,
        master_seed: args.common.seed,
        time_grid: vec![],
    };
    let results = run_totals_ensemble(&config)?;

    let mut table = Table::new("totals", &args.common, Some(&measure));
    table.meta("replicas", args.replicas);
    table.meta("r_max", args.r_max);
    table.columns(vec!["n", "r", "xi_r", "replica", "seed"]);
    for rep in &results {
        for r in 2..=args.r_max {
            table.row(vec![
                rep.n.to_string(),
                r.to_string(),
                rep.cumulative[r as usize].to_string(),
                rep.replica.to_string(),
                format!("{}:{}", rep.seed.master, rep.seed.replica),
            ]);
        }
    }
    table.emit(&args.common)?;

    let rows = aggregate_totals(&results, &measure)?;
    let mut all_pass = true;
    eprintln!("{:>8} {:>3} {:>12} {:>12} {:>12} {:>12}  status", "n", "r", "mean xi_r/n", "std", "theory", "deviation");
    for row in &rows {
        let pass = check_against_target(row);
        all_pass &= pass;
        eprintln!(
            "{:>8} {:>3} {:>12.6} {:>12.6} {:>12.6} {:>12.6}  {}",
            row.n,
            row.r,
            row.mean,
            row.std_dev,
            row.target.unwrap_or(f64::NAN),
            row.deviation.unwrap_or(f64::NAN),
            if pass { "pass" } else { "FAIL" }
        );
    }
    Ok(all_pass)
}

/// Pass when the deviation from theory is within three standard errors plus
/// a finite-size allowance of 0.02; degenerate (single-replica) rows are
/// informational only.
fn check_against_target(row: &montecarlo::AggregateRow) -> bool {
    if row.degenerate {
        return true;
    }
    let se = row.std_dev / (row.replicas as f64).sqrt();
    row.deviation.map(|d| d <= 3.0 * se + 0.02).unwrap_or(true)
}

fn cmd_trajectory(args: TrajectoryArgs) -> Result<bool> {
    configure_workers(&args.common);
    let measure = parse_measure(&args.common)?;
    let config = ExperimentConfig {
        measure: measure.clone(),
        n_values: vec![args.n],
        r_max: args.r_max,
        replicas: args.replicas,
        master_seed: args.common.seed,
        time_grid: args.t_values.clone(),
    };
    let results = run_trajectory_ensemble(&config)?;

    let mut table = Table::new("trajectory", &args.common, Some(&measure));
    table.meta("n", args.n);
    table.meta("replicas", args.replicas);
    table.meta("r_max", args.r_max);
    table.columns(vec!["t_scaled", "r", "X_r", "replica"]);
    for rep in &results {
        for (gi, &t) in rep.trajectory.grid.iter().enumerate() {
            for (r, &x) in rep.trajectory.states[gi].iter().enumerate() {
                table.row(vec![
                    t.to_string(),
                    r.to_string(),
                    format!("{x:.8}"),
                    rep.replica.to_string(),
                ]);
            }
        }
    }
    table.emit(&args.common)?;

    let rows = aggregate_trajectory(&results, &measure)?;
    let mut all_pass = true;
    eprintln!("{:>8} {:>3} {:>6} {:>12} {:>12} {:>12}  status", "n", "r", "t", "mean X_r", "theory", "deviation");
    for row in &rows {
        let pass = check_against_target(row);
        all_pass &= pass;
        eprintln!(
            "{:>8} {:>3} {:>6} {:>12.6} {:>12.6} {:>12.6}  {}",
            row.n,
            row.r,
            row.t.unwrap_or(f64::NAN),
            row.mean,
            row.target.unwrap_or(f64::NAN),
            row.deviation.unwrap_or(f64::NAN),
            if pass { "pass" } else { "FAIL" }
        );
    }
    Ok(all_pass)
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    configure_workers(&args.common);
    let mut all_pass = true;
    let mut check = |name: &str, result: Result<std::result::Result<(), String>>| {
        let line = match result {
            Ok(Ok(())) => format!("check {name:<44} pass"),
            Ok(Err(detail)) => {
                all_pass = false;
                format!("check {name:<44} FAIL  {detail}")
            }
            Err(e) => {
                all_pass = false;
                format!("check {name:<44} ERROR {e}")
            }
        };
        println!("{line}");
    };

    check("gamma_sum_identities", verify_gamma_sums());
    check("pascal_rate_recursion", verify_pascal());
    check("total_rate_recursion_vs_direct_sum", verify_recursions());
    check("oracle_vs_census_equivalence", verify_equivalence(args.small_n, args.runs, args.common.seed));
    check("time_change_invariance", verify_time_change(args.common.seed));
    check("ode_vs_closed_form", verify_ode());
    check("limit_constant_vs_integral", verify_limit_integral());
    Ok(all_pass)
}

fn verify_gamma_sums() -> Result<std::result::Result<(), String>> {
    for &alpha in &[1.1, 1.25, 1.5, 1.75, 1.9] {
        for b in [2u64, 3, 10, 100, 1000] {
            for order in [0, 1] {
                let lhs = rates::gamma_sum_term_by_term(alpha, b, order)?;
                let rhs = rates::gamma_sum_closed_form(alpha, b, order)?;
                let rel = ((lhs - rhs) / rhs).abs();
                if rel > 1e-10 {
                    return Ok(Err(format!(
                        "alpha={alpha} b={b} order={order}: rel dev {rel:.2e}"
                    )));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn verify_pascal() -> Result<std::result::Result<(), String>> {
    let measures = [
        LambdaMeasure::kingman(1.0)?,
        LambdaMeasure::beta(1.5, 1.0)?,
        LambdaMeasure::parse("kind=density alpha=1.5 density=beta_density")?,
    ];
    for m in &measures {
        let quick = m.kind() != MeasureKind::GeneralDensity;
        let bs: &[u64] = if quick { &[2, 5, 20, 80, 200] } else { &[2, 5, 20] };
        for &b in bs {
            for k in 2..=b {
                let lhs = rates::lambda_bk(m, b, k)?;
                let rhs = rates::lambda_bk(m, b + 1, k)? + rates::lambda_bk(m, b + 1, k + 1)?;
                let tol = if quick { 1e-9 } else { 1e-7 };
                if (lhs - rhs).abs() > tol * lhs.abs().max(1e-300) {
                    return Ok(Err(format!(
                        "{} b={b} k={k}: {lhs:.6e} vs {rhs:.6e}",
                        m.spec_string()
                    )));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn verify_recursions() -> Result<std::result::Result<(), String>> {
    for m in [LambdaMeasure::kingman(1.0)?, LambdaMeasure::beta(1.5, 1.0)?] {
        let totals = rates::TotalRates::build(&m, 300)?;
        for b in [2u64, 10, 100, 300] {
            let table = rates::build_rate_table(&m, b, 0.0)?;
            let scale = m.scale();
            let pairs = [
                (scale * totals.total_rate_unit(b), table.total_rate),
                (scale * totals.first_moment_unit(b), table.first_moment),
                (scale * totals.second_factorial_moment_unit(b), table.second_factorial_moment),
            ];
            for (a, d) in pairs {
                if ((a - d) / d).abs() > 1e-9 {
                    return Ok(Err(format!("{} b={b}: {a:.12e} vs {d:.12e}", m.spec_string())));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn verify_equivalence(small_n: u64, runs: u64, seed: u64) -> Result<std::result::Result<(), String>> {
    if !(2..=oracle::ORACLE_CAP).contains(&small_n) {
        return Err(Error::Config(format!(
            "--small-n must lie in [2, {}]",
            oracle::ORACLE_CAP
        )));
    }
    for m in [LambdaMeasure::kingman(1.0)?, LambdaMeasure::beta(1.5, 1.0)?] {
        let ctx = RateContext::new(&m, small_n)?;
        for n in 2..=small_n {
            for replica in 0..runs {
                let h = oracle::run_oracle_with(&ctx, n, SeedStream::new(seed ^ n, replica))?;
                let replay = oracle::census_replay_from_history(&h);
                for r in 2..=n {
                    let direct = oracle::caterpillars_from_history(&h, r);
                    if direct != replay[r as usize] {
                        return Ok(Err(format!(
                            "{} n={n} replica={replica} r={r}: definition {direct} vs census {}",
                            m.spec_string(),
                            replay[r as usize]
                        )));
                    }
                }
            }
        }
    }
    Ok(Ok(()))
}

fn verify_time_change(seed: u64) -> Result<std::result::Result<(), String>> {
    let unit = LambdaMeasure::beta(1.5, 1.0)?;
    let scaled = unit.with_scale(7.3)?;
    for replica in 0..20 {
        let a = crate::census::run_totals(300, &unit, 4, SeedStream::new(seed, replica))?;
        let b = crate::census::run_totals(300, &scaled, 4, SeedStream::new(seed, replica))?;
        if a.cumulative != b.cumulative {
            return Ok(Err(format!(
                "replica {replica}: {:?} vs {:?}",
                a.cumulative, b.cumulative
            )));
        }
    }
    Ok(Ok(()))
}

fn verify_ode() -> Result<std::result::Result<(), String>> {
    for &alpha in &[1.25, 1.5, 1.75, 2.0] {
        let sol = theory::integrate_drift(alpha, 5, 5.0, 1e-3)?;
        if sol.sup_deviation > 1e-6 {
            return Ok(Err(format!("alpha={alpha}: sup deviation {:.2e}", sol.sup_deviation)));
        }
    }
    Ok(Ok(()))
}

fn verify_limit_integral() -> Result<std::result::Result<(), String>> {
    for &alpha in &[1.2f64, 1.5, 1.9, 2.0] {
        for r in 2..=5u32 {
            let q = alpha / (alpha - 1.0);
            let c_r = 0.5 * alpha.powi(r as i32 - 1)
                / (1..=(r - 2) as u64).map(|i| i as f64).product::<f64>();
            let integral = crate::quad::integrate(
                |u| u.powi(r as i32 - 2) * (1.0 - u).powf(q),
                0.0,
                1.0,
                1e-13,
                1e-12,
            )?;
            let by_gamma = theory::limit_constant(alpha, r)?;
            let rel = ((c_r * integral.value - by_gamma) / by_gamma).abs();
            if rel > 1e-8 {
                return Ok(Err(format!("alpha={alpha} r={r}: rel dev {rel:.2e}")));
            }
        }
    }
    Ok(Ok(()))
}

fn cmd_variance(args: VarianceArgs) -> Result<bool> {
    configure_workers(&args.common);
    let measure = parse_measure(&args.common)?;
    let replicas = args
        .replicas
        .clone()
        .unwrap_or_else(|| montecarlo::default_probe_replicas(&measure, &args.n_values));
    let report =
        montecarlo::variance_scaling_probe(&measure, &args.n_values, &replicas, args.common.seed)?;

    let mut table = Table::new("variance", &args.common, Some(&measure));
    table.meta("slope", format!("{:.6}", report.slope));
    table.meta("slope_se", format!("{:.6}", report.slope_se));
    table.meta("reference_exponent", format!("{:.6}", report.reference_exponent));
    table.columns(vec!["n", "replicas", "variance", "log_n", "log_variance", "se_log_variance"]);
    for p in &report.points {
        table.row(vec![
            p.n.to_string(),
            p.replicas.to_string(),
            format!("{:.8e}", p.variance),
            format!("{:.8}", p.log_n),
            format!("{:.8}", p.log_variance),
            format!("{:.8}", p.se_log_variance),
        ]);
    }
    table.emit(&args.common)?;

    let pass = report.deviation <= args.tolerance;
    eprintln!(
        "fitted slope {:.4} +/- {:.4}; reference exponent {} (= alpha - 3); deviation {:.4} ({})",
        report.slope,
        report.slope_se,
        report.reference_exponent,
        report.deviation,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}
