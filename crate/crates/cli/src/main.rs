//! `wotlab`: order checks, primal/dual solves, order projections and the
//! verification batteries from the command line.
//!
//! Exit codes: 0 success, 1 mathematical negative (order fails, a check
//! fails), 2 usage error, 3 numerical failure.

mod instance;
mod output;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wotlab::dual::{attainment_witness, solve_dual_with, AttainmentReport, DualOptions, DualResult, DualStatus};
use wotlab::orders::{check_order, kernel_residual, ConeSpec, Order, OrderCertificate};
use wotlab::primal::{solve_primal_with, PrimalOptions, PrimalResult, PrimalStatus};
use wotlab::projection::{project_order_with, ProjectionOptions, ProjectionResult};
use wotlab::verify::{run_suite, Suite};
use wotlab::{Error, Result};

use instance::{load_instance, load_measure, InstanceSpec, SCENARIOS};
use output::{emit, Format};

#[derive(Parser)]
#[command(name = "wotlab", version, about = "Discrete weak optimal transport: solvers, certificates and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Solver tolerance (overrides the instance file).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Extra grid points per gap for dual potentials and projections.
    #[arg(long, global = true, value_name = "K")]
    grid_refine: Option<usize>,
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include wall-clock timings (the report is then no longer reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum Side {
    Primal,
    Dual,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Decide `mu ⪯ nu` and emit the kernel or separating-function certificate.
    CheckOrder {
        /// Measure JSON file or inline JSON.
        mu: String,
        nu: String,
        /// `cx`, `icx` or `cone=FILE` with a cone specification.
        #[arg(long, default_value = "cx")]
        order: String,
    },
    /// Solve the primal and/or restricted dual of an instance file or bundled scenario.
    Solve {
        instance: String,
        #[arg(long, value_enum, default_value_t = Side::Both)]
        side: Side,
    },
    /// Run the seeded verification batteries.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Cases per check (defaults to each check's standard count).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Project mu onto the laws dominated by nu and report the three values.
    Project { instance: String },
    /// List the bundled scenarios.
    Scenarios,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OrderViolation(_) => 1,
        Error::Numerical(_) | Error::InvalidProgram(_) | Error::InvalidCoupling(_) => 3,
        _ => 2,
    }
}

/// An extended real that serializes `±∞` as strings.
#[derive(Serialize)]
struct ExtReal(#[serde(with = "wotlab::hulls::ext_real")] f64);

#[derive(Serialize)]
struct CheckOrderReport {
    order: Order,
    verdict: bool,
    certificate: OrderCertificate,
    /// The certificate passed an independent re-check.
    revalidated: bool,
}

#[derive(Serialize)]
struct SolveReport {
    instance: InstanceSpec,
    cost: String,
    side: Side,
    tol: f64,
    grid_refine: usize,
    primal: Option<PrimalResult>,
    dual: Option<DualResult>,
    gap: Option<ExtReal>,
    attainment: Option<AttainmentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<String, f64>>,
}

#[derive(Serialize)]
struct ProjectReport {
    instance: InstanceSpec,
    cost: String,
    grid_refine: usize,
    result: ProjectionResult,
    agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<String, f64>>,
}

fn parse_order(s: &str) -> Result<Order> {
    match s {
        "cx" => Ok(Order::Convex),
        "icx" => Ok(Order::IncreasingConvex),
        _ => {
            let path = s.strip_prefix("cone=").ok_or_else(|| Error::Usage(format!("unknown order {s:?}")))?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("{path}: {e}")))?;
            let cone: ConeSpec = serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{path}: {e}")))?;
            Ok(Order::Cone(cone))
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn check_order_cmd(cli: &Cli, mu: &str, nu: &str, order: &str) -> Result<u8> {
    let order = parse_order(order)?;
    let (mu, nu) = (load_measure(mu)?, load_measure(nu)?);
    let cert = check_order(&mu, &nu, &order)?;
    let revalidated = match (&cert.witness_kernel, &cert.separating_function) {
        (Some(k), _) => kernel_residual(&mu, &nu, k, &order)? <= 1e-9,
        (None, Some(f)) => f.in_cone(&order) && f.integrate(&mu)? - f.integrate(&nu)? > 0.0,
        (None, None) => false,
    };
    let verdict = cert.verdict;
    emit("check-order", &CheckOrderReport { order, verdict, certificate: cert, revalidated }, cli.format, cli.out.as_deref())?;
    Ok(if verdict { 0 } else { 1 })
}

fn solve_cmd(cli: &Cli, arg: &str, side: Side) -> Result<u8> {
    let inst = load_instance(arg)?;
    let cost = inst.cost()?;
    let opts = &inst.spec.options;
    let tol = cli.tol.or(opts.tol).unwrap_or(1e-6);
    let grid_refine = cli.grid_refine.or(opts.grid_refine).unwrap_or(0);
    let mut timings = BTreeMap::new();
    let primal = if side != Side::Dual {
        let t = Instant::now();
        let p = solve_primal_with(&inst.mu, &inst.nu, cost.as_ref(), &PrimalOptions { tol, ..Default::default() })?;
        timings.insert("primal".to_string(), ms(t));
        Some(p)
    } else {
        None
    };
    let class = inst.spec.class.dual_class();
    let dual = if side != Side::Primal {
        let t = Instant::now();
        let d_opts = DualOptions { tol, grid_refine, enforce_class: opts.enforce_class.unwrap_or(true), ..Default::default() };
        let d = solve_dual_with(&inst.mu, &inst.nu, cost.as_ref(), &class, &d_opts)?;
        timings.insert("dual".to_string(), ms(t));
        Some(d)
    } else {
        None
    };
    let monotone = cost.metadata().decreasing_in(&class.order());
    let attainment = match &dual {
        Some(d) if monotone && d.status == DualStatus::Optimal => Some(attainment_witness(d, &inst.mu, &inst.nu, cost.as_ref())?),
        _ => None,
    };
    let gap = match (&primal, &dual) {
        (Some(p), Some(d)) => Some(ExtReal(if p.value == d.value { 0.0 } else { p.value - d.value })),
        _ => None,
    };
    let failed = primal.as_ref().is_some_and(|p| p.status == PrimalStatus::GapNotCertified)
        || dual.as_ref().is_some_and(|d| d.status == DualStatus::GapNotCertified);
    let report = SolveReport {
        cost: cost.name(),
        instance: inst.spec,
        side,
        tol,
        grid_refine,
        primal,
        dual,
        gap,
        attainment,
        timings_ms: cli.timings.then_some(timings),
    };
    emit("solve", &report, cli.format, cli.out.as_deref())?;
    Ok(if failed { 3 } else { 0 })
}

fn project_cmd(cli: &Cli, arg: &str) -> Result<u8> {
    let inst = load_instance(arg)?;
    let cost = inst.cost()?;
    let mut opts = ProjectionOptions::default();
    if let Some(k) = cli.grid_refine.or(inst.spec.options.grid_refine) {
        opts.grid_refine = k;
    }
    if let Some(t) = cli.tol.or(inst.spec.options.tol) {
        opts.dual_tol = t;
    }
    let t = Instant::now();
    let result = project_order_with(&inst.mu, &inst.nu, &cost, &inst.spec.class.order(), &opts)?;
    let timings = BTreeMap::from([("projection".to_string(), ms(t))]);
    let agree = result.max_discrepancy <= 1e-5;
    let report = ProjectReport {
        cost: cost.name(),
        instance: inst.spec,
        grid_refine: opts.grid_refine,
        result,
        agree,
        timings_ms: cli.timings.then_some(timings),
    };
    emit("project", &report, cli.format, cli.out.as_deref())?;
    Ok(if agree { 0 } else { 3 })
}

fn verify_cmd(cli: &Cli, suite: &str, n: Option<usize>) -> Result<u8> {
    let suite: Suite = suite.parse()?;
    let report = run_suite(suite, n, cli.seed.unwrap_or(7))?;
    emit("verify", &report, cli.format, cli.out.as_deref())?;
    Ok(if report.ok() { 0 } else { 1 })
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("WOTLAB_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| Error::Usage(format!("WOTLAB_THREADS={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Usage(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<u8> {
    configure_threads()?;
    match &cli.command {
        Command::CheckOrder { mu, nu, order } => check_order_cmd(cli, mu, nu, order),
        Command::Solve { instance, side } => solve_cmd(cli, instance, *side),
        Command::Verify { suite, n } => verify_cmd(cli, suite, *n),
        Command::Project { instance } => project_cmd(cli, instance),
        Command::Scenarios => {
            for (name, text) in SCENARIOS {
                let spec: InstanceSpec = serde_json::from_str(text)?;
                println!("{name:<28} {}", spec.description.unwrap_or_default());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("wotlab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use instance::ClassSpec;

    #[test]
    fn order_flags() {
        assert_eq!(parse_order("cx").unwrap(), Order::Convex);
        assert_eq!(parse_order("icx").unwrap(), Order::IncreasingConvex);
        assert!(matches!(parse_order("bogus"), Err(Error::Usage(_))));
        assert!(matches!(parse_order("cone=/no/such/file"), Err(Error::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Usage("x".into())), 2);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn class_spec_is_used_for_both_sides() {
        assert_eq!(ClassSpec::Icx.dual_class().order(), Order::IncreasingConvex);
    }
}
