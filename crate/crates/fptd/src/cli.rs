//! Command-line front end: density curves, error reports, coefficient
//! caches, timing comparisons and the acceptance selftest, all emitted
//! as CSV.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bessel::{self, BesselParams, DensityForm};
use crate::coeffs::CoefficientTable;
use crate::curve::{self, DensityCurve, GridSpacing};
use crate::errors::Error;
use crate::laplace::{self, BvpGrid};
use crate::mc::{self, McConfig, McProcess};
use crate::ou::{self, OuParams, ScaledProblem};
use crate::selftest::{self, SelftestConfig};
use crate::Result;

/// Environment variable naming the default coefficient-cache file.
pub const COEFF_CACHE_ENV: &str = "FPTD_COEFF_CACHE";

#[derive(Parser, Debug)]
#[command(
    name = "fptd",
    version,
    about = "First-passage-time densities for mean-reverting and radial diffusions"
)]
struct Cli {
    /// Optional key=value defaults file; explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker-pool size for grid evaluation (default: all cores).
    /// Values are identical for any pool size.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Precompute the coefficient table and save it as CSV.
    Coeffs {
        /// Highest series order to tabulate (>= 1; ~10 is practical).
        #[arg(long)]
        max_order: usize,
        /// Output path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Evaluate density curves to CSV.
    Density(DensityArgs),
    /// Estimate truncation errors along a time grid to CSV.
    Error(ErrorArgs),
    /// Time the density methods against each other.
    Bench(BenchArgs),
    /// Run the acceptance suite; nonzero exit on any failure.
    Selftest {
        /// Run everything except the Monte-Carlo criteria.
        #[arg(long)]
        quick: bool,
        /// Verify this coefficient cache instead of a built-in table.
        #[arg(long, value_name = "PATH")]
        coeffs: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProcessKind {
    Ou,
    Bessel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Closed-form truncated series.
    Perturbed,
    /// Contour inversion of the exact boundary-value transform.
    TalbotExact,
    /// Cited closed form (mean-reverting, barrier at equilibrium only).
    ClosedForm,
    /// Monte-Carlo histogram.
    Mc,
}

impl Method {
    fn tag(self) -> &'static str {
        match self {
            Method::Perturbed => "perturbed",
            Method::TalbotExact => "talbot-exact",
            Method::ClosedForm => "closed-form",
            Method::Mc => "mc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Spacing {
    Linear,
    Log,
}

#[derive(Args, Debug, Clone)]
struct ProcessArgs {
    #[arg(long, value_enum)]
    process: ProcessKind,

    /// Drift strength: mean-reversion rate (ou) or order offset (bessel).
    #[arg(long)]
    eps: f64,

    /// Equilibrium level (ou only).
    #[arg(long)]
    theta: Option<f64>,

    /// Volatility (ou only).
    #[arg(long)]
    sigma: Option<f64>,

    /// Start point.
    #[arg(long)]
    x0: f64,

    /// Barrier: hitting level l (ou) or a (bessel).
    #[arg(long)]
    level: f64,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 0.05)]
    t_start: f64,
    #[arg(long, default_value_t = 5.0)]
    t_stop: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    spacing: Spacing,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Series truncation order.
    #[arg(long, default_value_t = 1)]
    order: usize,

    /// Contour nodes for numerical inversion.
    #[arg(long, default_value_t = 32)]
    talbot_nodes: usize,

    /// Coefficient cache to load (default: $FPTD_COEFF_CACHE if set,
    /// else the table is built in memory).
    #[arg(long, value_name = "PATH")]
    coeffs: Option<PathBuf>,

    /// Output path (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct McArgs {
    #[arg(long, default_value_t = 1000)]
    n_paths: usize,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    antithetic: bool,
}

#[derive(Args, Debug, Clone)]
struct DensityArgs {
    #[command(flatten)]
    process: ProcessArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    mc: McArgs,
    /// Methods to evaluate (repeat or comma-separate).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "perturbed")]
    method: Vec<Method>,
}

#[derive(Args, Debug, Clone)]
struct ErrorArgs {
    #[command(flatten)]
    process: ProcessArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    mc: McArgs,
    /// Oracle for the realized-error column.
    #[arg(long, value_enum, default_value_t = OracleChoice::Auto)]
    oracle: OracleChoice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleChoice {
    /// closed-form when the barrier sits at the equilibrium, else talbot-exact.
    Auto,
    ClosedForm,
    TalbotExact,
}

#[derive(Args, Debug, Clone)]
struct BenchArgs {
    #[command(flatten)]
    process: ProcessArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Load (or build) the coefficient table before starting the timers.
    #[arg(long)]
    preload: bool,
}

/// Validated process selection.
#[derive(Debug)]
enum Problem {
    Ou { scaled: ScaledProblem },
    Bessel { params: BesselParams },
}

impl Problem {
    fn from_args(args: &ProcessArgs) -> Result<Problem> {
        match args.process {
            ProcessKind::Ou => {
                let theta = args.theta.ok_or_else(|| {
                    Error::domain("--theta is required for the ou process")
                })?;
                let sigma = args.sigma.ok_or_else(|| {
                    Error::domain("--sigma is required for the ou process")
                })?;
                let params = OuParams {
                    eps: args.eps,
                    theta,
                    sigma,
                    x0: args.x0,
                    level: args.level,
                };
                Ok(Problem::Ou {
                    scaled: ou::normalize(&params)?,
                })
            }
            ProcessKind::Bessel => {
                if args.theta.is_some() || args.sigma.is_some() {
                    return Err(Error::domain(
                        "--theta/--sigma do not apply to the bessel process",
                    ));
                }
                let params = BesselParams {
                    eps: args.eps,
                    x0: args.x0,
                    a: args.level,
                };
                params.validate()?;
                Ok(Problem::Bessel { params })
            }
        }
    }

    fn is_equilibrium_barrier(&self) -> bool {
        matches!(self, Problem::Ou { scaled } if scaled.theta_hat.abs() < 1e-12)
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let argv = match apply_config_file(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // Pool size only affects wall time, never values.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Merges `key=value` lines from --config into argv as extra long flags;
/// flags already present on the command line take precedence.
fn apply_config_file(mut argv: Vec<String>) -> Result<Vec<String>> {
    let mut config_path: Option<String> = None;
    for (i, arg) in argv.iter().enumerate() {
        if arg == "--config" {
            config_path = argv.get(i + 1).cloned();
        } else if let Some(rest) = arg.strip_prefix("--config=") {
            config_path = Some(rest.to_string());
        }
    }
    let Some(path) = config_path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)?;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected key=value, found {line:?}"),
            });
        };
        let key = key.trim();
        let flag = format!("--{key}");
        let already = argv
            .iter()
            .any(|a| a == &flag || a.starts_with(&format!("{flag}=")));
        if !already {
            argv.push(flag);
            argv.push(value.trim().to_string());
        }
    }
    Ok(argv)
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Coeffs { max_order, out } => cmd_coeffs(max_order, &out),
        Cmd::Density(args) => cmd_density(args),
        Cmd::Error(args) => cmd_error(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Selftest { quick, coeffs, seed } => cmd_selftest(quick, coeffs, seed),
    }
}

fn load_or_build_table(coeffs: &Option<PathBuf>, min_order: usize) -> Result<CoefficientTable> {
    let path = coeffs.clone().or_else(|| {
        std::env::var_os(COEFF_CACHE_ENV).map(PathBuf::from)
    });
    match path {
        Some(p) if p.exists() => {
            let table = CoefficientTable::load(&p)?;
            if table.max_order() < min_order {
                return Err(Error::domain(format!(
                    "coefficient cache {} holds order {}, but order {min_order} was requested",
                    p.display(),
                    table.max_order()
                )));
            }
            Ok(table)
        }
        _ => CoefficientTable::build(min_order),
    }
}

fn write_output(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_coeffs(max_order: usize, out: &Path) -> Result<i32> {
    if max_order == 0 {
        return Err(Error::domain("--max-order must be at least 1"));
    }
    if max_order > crate::coeffs::PRACTICAL_MAX_ORDER {
        eprintln!(
            "note: orders beyond {} grow quickly in entry count and digit \
             size; expect slower builds",
            crate::coeffs::PRACTICAL_MAX_ORDER
        );
    }
    let table = CoefficientTable::build(max_order)?;
    table.save(out)?;
    eprintln!(
        "wrote {} coefficient rows (order {}) to {}",
        table.len(),
        max_order,
        out.display()
    );
    Ok(0)
}

fn grid_from_args(grid: &GridArgs) -> Result<Vec<f64>> {
    curve::time_grid(
        grid.t_start,
        grid.t_stop,
        grid.points,
        match grid.spacing {
            Spacing::Linear => GridSpacing::Linear,
            Spacing::Log => GridSpacing::Log,
        },
    )
}

/// Evaluates one method over the grid; pure per-point work is dispatched
/// to the worker pool and collected in index order.
#[allow(clippy::too_many_arguments)]
fn evaluate_curve(
    problem: &Problem,
    method: Method,
    grid: &[f64],
    order: usize,
    table: &CoefficientTable,
    talbot_nodes: usize,
    mc_args: &McArgs,
    horizon: f64,
) -> Result<DensityCurve> {
    let timed: Result<Vec<(f64, f64)>> = match (problem, method) {
        (Problem::Ou { scaled }, Method::Perturbed) => {
            let h = scaled.weights(order, table)?;
            let y0 = scaled.y0;
            grid.par_iter()
                .map(|&t| timed_point(|| ou::density_with_weights(y0, &h, t)))
                .collect()
        }
        (Problem::Bessel { params }, Method::Perturbed) => {
            if order != 1 {
                return Err(Error::domain(
                    "the radial process supports order 1 only",
                ));
            }
            grid.par_iter()
                .map(|&t| {
                    timed_point(|| bessel::density_first_order(params, t, DensityForm::Combined))
                })
                .collect()
        }
        (Problem::Ou { scaled }, Method::TalbotExact) => {
            let process = scaled.bvp_process();
            let bvp = BvpGrid::for_start(scaled.y0, 0.0);
            let y0 = scaled.y0;
            grid.par_iter()
                .map(|&t| {
                    timed_point(|| {
                        laplace::talbot_invert(
                            &|b: Complex64| laplace::exact_lt(&process, y0, b, &bvp),
                            t,
                            talbot_nodes,
                        )
                    })
                })
                .collect()
        }
        (Problem::Bessel { params }, Method::TalbotExact) => {
            let process = params.bvp_process();
            let bvp = BvpGrid::for_start(params.x0, params.a);
            let x0 = params.x0;
            grid.par_iter()
                .map(|&t| {
                    timed_point(|| {
                        laplace::talbot_invert(
                            &|b: Complex64| laplace::exact_lt(&process, x0, b, &bvp),
                            t,
                            talbot_nodes,
                        )
                    })
                })
                .collect()
        }
        (Problem::Ou { scaled }, Method::ClosedForm) => {
            if !problem.is_equilibrium_barrier() {
                return Err(Error::domain(
                    "method closed-form requires the barrier at the equilibrium \
                     level (level == theta)",
                ));
            }
            // Trust gate: the cited formula must match the exact
            // transform before it is allowed out.
            ou::validate_closed_form(scaled.eps, scaled.y0, talbot_nodes)?;
            let (eps, y0) = (scaled.eps, scaled.y0);
            grid.par_iter()
                .map(|&t| timed_point(|| ou::closed_form_theta_case(eps, y0, t)))
                .collect()
        }
        (Problem::Bessel { .. }, Method::ClosedForm) => {
            return Err(Error::domain(
                "method closed-form applies to the ou process only",
            ));
        }
        (problem, Method::Mc) => {
            let cfg = McConfig {
                n_paths: mc_args.n_paths,
                steps_per_horizon: mc_args.steps,
                seed: mc_args.seed,
                antithetic: mc_args.antithetic,
            };
            let process = match problem {
                Problem::Ou { scaled } => McProcess::Ou {
                    scaled,
                    order,
                    table,
                },
                Problem::Bessel { params } => McProcess::Bessel { params },
            };
            let (curve, fraction) = mc::mc_fptd_histogram(&process, horizon, mc_args.bins, &cfg)?;
            eprintln!("mc crossing fraction: {fraction:.4}");
            return Ok(curve);
        }
    };
    let timed = timed?;
    let (p, micros): (Vec<f64>, Vec<f64>) = timed.into_iter().unzip();
    let mut curve = DensityCurve::new(grid.to_vec(), p, method.tag())?;
    curve.per_point_micros = micros;
    Ok(curve)
}

fn timed_point(f: impl FnOnce() -> Result<f64>) -> Result<(f64, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64() * 1e6))
}

fn cmd_density(args: DensityArgs) -> Result<i32> {
    let problem = Problem::from_args(&args.process)?;
    let grid = grid_from_args(&args.grid)?;
    let table = load_or_build_table(&args.common.coeffs, args.common.order.max(1))?;
    if args.method.is_empty() {
        return Err(Error::domain("at least one --method is required"));
    }

    let mut curves = Vec::new();
    for &method in &args.method {
        curves.push(evaluate_curve(
            &problem,
            method,
            &grid,
            args.common.order,
            &table,
            args.common.talbot_nodes,
            &args.mc,
            args.grid.t_stop,
        )?);
    }

    let mut footer = Vec::new();
    for i in 0..curves.len() {
        for j in (i + 1)..curves.len() {
            if curves[i].t == curves[j].t {
                let gap = curve::max_rel_gap(&curves[i], &curves[j])?;
                footer.push(format!(
                    "max_rel_gap {} vs {}: {:.6e}",
                    curves[i].method, curves[j].method, gap
                ));
            }
        }
    }
    for c in &curves {
        footer.push(format!(
            "method {}: {} points, {:.3} ms total",
            c.method,
            c.len(),
            c.total_micros() / 1e3
        ));
        if c.has_negative_values() {
            footer.push(format!(
                "warning: method {} produced negative values (flagged per point)",
                c.method
            ));
        }
    }

    let mut body = Vec::new();
    write_curves(&mut body, &curves, &footer)?;
    write_output(&args.common.out, std::str::from_utf8(&body).unwrap())?;
    Ok(0)
}

fn write_curves(buf: &mut Vec<u8>, curves: &[DensityCurve], footer: &[String]) -> Result<()> {
    writeln!(buf, "t,p,method,flags")?;
    for c in curves {
        for i in 0..c.len() {
            writeln!(buf, "{:.16e},{:.16e},{},{}", c.t[i], c.p[i], c.method, c.flags[i])?;
        }
    }
    for line in footer {
        writeln!(buf, "# {line}")?;
    }
    Ok(())
}

fn cmd_error(args: ErrorArgs) -> Result<i32> {
    let problem = Problem::from_args(&args.process)?;
    if matches!(problem, Problem::Bessel { .. }) && args.common.order != 1 {
        return Err(Error::domain("the radial process supports order 1 only"));
    }
    let grid = grid_from_args(&args.grid)?;
    let table = load_or_build_table(&args.common.coeffs, args.common.order.max(1))?;

    let mut oracle = match (args.oracle, problem.is_equilibrium_barrier()) {
        (OracleChoice::Auto, true) => OracleChoice::ClosedForm,
        (OracleChoice::Auto, false) => OracleChoice::TalbotExact,
        (OracleChoice::ClosedForm, false) => {
            return Err(Error::domain(
                "closed-form oracle requires the ou process with the barrier at \
                 the equilibrium level",
            ));
        }
        (choice, _) => choice,
    };
    if oracle == OracleChoice::ClosedForm {
        if let Problem::Ou { scaled } = &problem {
            match ou::validate_closed_form(scaled.eps, scaled.y0, args.common.talbot_nodes) {
                Ok(_) => {}
                // Untrusted closed form: an explicit request fails, the
                // automatic choice falls back to the exact transform.
                Err(e) if args.oracle == OracleChoice::ClosedForm => return Err(e),
                Err(e) => {
                    eprintln!("warning: closed form failed its trust gate ({e}); using talbot-exact");
                    oracle = OracleChoice::TalbotExact;
                }
            }
        }
    }

    let cfg = McConfig {
        n_paths: args.mc.n_paths,
        steps_per_horizon: args.mc.steps,
        seed: args.mc.seed,
        antithetic: args.mc.antithetic,
    };

    let mut body = String::from("t,q_hat,std_err,rel_err,realized_rel_err,oracle\n");
    for &t in &grid {
        let oracle_density = match (&problem, oracle) {
            (Problem::Ou { scaled }, OracleChoice::ClosedForm) => {
                Some(ou::closed_form_theta_case(scaled.eps, scaled.y0, t)?)
            }
            (Problem::Ou { scaled }, OracleChoice::TalbotExact) => {
                let process = scaled.bvp_process();
                let bvp = BvpGrid::for_start(scaled.y0, 0.0);
                Some(laplace::talbot_invert(
                    &|b: Complex64| laplace::exact_lt(&process, scaled.y0, b, &bvp),
                    t,
                    args.common.talbot_nodes,
                )?)
            }
            (Problem::Bessel { params }, OracleChoice::TalbotExact) => {
                let process = params.bvp_process();
                let bvp = BvpGrid::for_start(params.x0, params.a);
                Some(laplace::talbot_invert(
                    &|b: Complex64| laplace::exact_lt(&process, params.x0, b, &bvp),
                    t,
                    args.common.talbot_nodes,
                )?)
            }
            (Problem::Bessel { .. }, OracleChoice::ClosedForm) => unreachable!(),
            (_, OracleChoice::Auto) => unreachable!(),
        };
        let process = match &problem {
            Problem::Ou { scaled } => McProcess::Ou {
                scaled,
                order: args.common.order,
                table: &table,
            },
            Problem::Bessel { params } => McProcess::Bessel { params },
        };
        let report = mc::estimate_q(&process, t, &cfg, oracle_density)?;
        let realized = report
            .realized_rel_err
            .map(|v| format!("{v:.16e}"))
            .unwrap_or_default();
        body.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
            report.t,
            report.q_hat,
            report.std_err,
            report.rel_err,
            realized,
            match oracle {
                OracleChoice::ClosedForm => "closed-form",
                OracleChoice::TalbotExact => "talbot-exact",
                OracleChoice::Auto => unreachable!(),
            }
        ));
    }
    write_output(&args.common.out, &body)?;
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let problem = Problem::from_args(&args.process)?;
    let grid = grid_from_args(&args.grid)?;

    // --preload keeps table construction out of the measured window.
    let preloaded = if args.preload {
        Some(load_or_build_table(&args.common.coeffs, args.common.order.max(1))?)
    } else {
        None
    };

    let mc_defaults = McArgs {
        n_paths: 1000,
        steps: 1000,
        seed: 0,
        bins: 50,
        antithetic: false,
    };

    let start = Instant::now();
    let table = match preloaded {
        Some(t) => t,
        None => load_or_build_table(&args.common.coeffs, args.common.order.max(1))?,
    };
    let series_curve = evaluate_curve(
        &problem,
        Method::Perturbed,
        &grid,
        args.common.order,
        &table,
        args.common.talbot_nodes,
        &mc_defaults,
        args.grid.t_stop,
    )?;
    let series_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let exact_curve = evaluate_curve(
        &problem,
        Method::TalbotExact,
        &grid,
        args.common.order,
        &table,
        args.common.talbot_nodes,
        &mc_defaults,
        args.grid.t_stop,
    )?;
    let exact_secs = start.elapsed().as_secs_f64();

    let gap = curve::max_rel_gap(&series_curve, &exact_curve)?;
    let ratio = exact_secs / series_secs.max(1e-12);
    let mut body = String::from("method,points,seconds,ratio_vs_perturbed\n");
    body.push_str(&format!(
        "perturbed,{},{:.6},1.0\n",
        grid.len(),
        series_secs
    ));
    body.push_str(&format!(
        "talbot-exact,{},{:.6},{:.1}\n",
        grid.len(),
        exact_secs,
        ratio
    ));
    body.push_str(&format!("# max_rel_gap perturbed vs talbot-exact: {gap:.3e}\n"));
    body.push_str(&format!(
        "# preload: {} (table construction {} the timed window)\n",
        args.preload,
        if args.preload { "excluded from" } else { "included in" }
    ));
    write_output(&args.common.out, &body)?;
    Ok(0)
}

fn cmd_selftest(quick: bool, coeffs: Option<PathBuf>, seed: u64) -> Result<i32> {
    let cfg = SelftestConfig {
        quick,
        coeffs_path: coeffs,
        seed,
        talbot_nodes: 32,
    };
    let results = selftest::run_all(&cfg);
    let mut all_passed = true;
    for r in &results {
        println!("{}", r.verdict_line());
        all_passed &= r.passed;
    }
    if all_passed {
        println!("selftest: all {} criteria passed", results.len());
        Ok(0)
    } else {
        println!("selftest: FAILURES present");
        Ok(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_fills_missing_flags_only() {
        let dir = std::env::temp_dir().join(format!("fptd-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "points=7\nt-stop=2.0\n").unwrap();
        let argv: Vec<String> = [
            "fptd",
            "density",
            "--config",
            path.to_str().unwrap(),
            "--points",
            "11",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let merged = apply_config_file(argv).unwrap();
        // --points came from the command line, so only t-stop is added.
        assert!(merged.iter().any(|a| a == "--t-stop"));
        assert_eq!(merged.iter().filter(|a| *a == "--points").count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn ou_requires_theta_and_sigma() {
        let args = ProcessArgs {
            process: ProcessKind::Ou,
            eps: 0.1,
            theta: None,
            sigma: Some(0.3),
            x0: 0.5,
            level: 0.3,
        };
        assert!(Problem::from_args(&args).is_err());
    }

    #[test]
    fn bessel_rejects_barrier_above_start() {
        let args = ProcessArgs {
            process: ProcessKind::Bessel,
            eps: 0.1,
            theta: None,
            sigma: None,
            x0: 0.1,
            level: 0.7,
        };
        let err = Problem::from_args(&args).unwrap_err();
        assert!(err.to_string().contains("strictly above"), "{err}");
    }
}
