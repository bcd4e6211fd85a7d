//! Monte-Carlo machinery: Euler-Maruyama paths with discrete barrier
//! detection, the probabilistic truncation-error estimator, and a
//! histogram density estimator used as a crude independent oracle.
//!
//! Reproducibility contract: every path draws from its own counter-based
//! substream keyed by (seed, path index), so results are bit-identical
//! for a fixed seed regardless of thread count. Path aggregation sums a
//! pre-collected, index-ordered buffer with compensated summation.
//!
//! Crossing detection is discrete: a path crosses at the first step whose
//! state reaches or passes the barrier. No bridge correction is applied,
//! which biases crossing times slightly late at coarse steps; the
//! estimator consumers work with standard-error bands that absorb this.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bessel::{self, BesselParams, DensityForm};
use crate::coeffs::CoefficientTable;
use crate::curve::DensityCurve;
use crate::errors::Error;
use crate::ou::{self, ScaledProblem};
use crate::Result;

/// Simulation controls.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_paths: usize,
    pub steps_per_horizon: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 1000,
            steps_per_horizon: 1000,
            seed: 0,
            antithetic: false,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::domain(format!(
                "need at least 2 paths, got {}",
                self.n_paths
            )));
        }
        if self.steps_per_horizon < 10 {
            return Err(Error::domain(format!(
                "need at least 10 steps per horizon, got {}",
                self.steps_per_horizon
            )));
        }
        Ok(())
    }
}

/// A process the simulator understands, bundled with everything the
/// error estimator needs (drift, kernel, truncated density, order).
#[derive(Clone, Copy)]
pub enum McProcess<'a> {
    Ou {
        scaled: &'a ScaledProblem,
        order: usize,
        table: &'a CoefficientTable,
    },
    Bessel {
        params: &'a BesselParams,
    },
}

impl<'a> McProcess<'a> {
    pub fn start(&self) -> f64 {
        match self {
            McProcess::Ou { scaled, .. } => scaled.y0,
            McProcess::Bessel { params } => params.x0,
        }
    }

    pub fn barrier(&self) -> f64 {
        match self {
            McProcess::Ou { .. } => 0.0,
            McProcess::Bessel { params } => params.a,
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            McProcess::Ou { scaled, .. } => scaled.eps,
            McProcess::Bessel { params } => params.eps,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            McProcess::Ou { order, .. } => *order,
            McProcess::Bessel { .. } => 1,
        }
    }

    /// Full drift eps * h(x) of the simulated dynamics.
    fn drift(&self, x: f64) -> f64 {
        match self {
            McProcess::Ou { scaled, .. } => scaled.eps * (scaled.theta_hat - x),
            McProcess::Bessel { params } => params.eps / (2.0 * x),
        }
    }

    /// Unit drift h(x) (the eps-free factor in the error integrand).
    fn h(&self, x: f64) -> f64 {
        match self {
            McProcess::Ou { scaled, .. } => scaled.theta_hat - x,
            McProcess::Bessel { .. } => 1.0 / (2.0 * x),
        }
    }

    fn eta(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            McProcess::Ou { scaled, order, table } => ou::eta(scaled, *order, table, x, t),
            McProcess::Bessel { params } => bessel::eta(params, x, t),
        }
    }

    /// Truncated-series density at t.
    pub fn density(&self, t: f64) -> Result<f64> {
        match self {
            McProcess::Ou { scaled, order, table } => ou::density(scaled, *order, table, t),
            McProcess::Bessel { params } => {
                bessel::density_first_order(params, t, DensityForm::Combined)
            }
        }
    }
}

/// One simulated path: states at step 0..=min(crossing, steps) and the
/// crossing step, if any.
#[derive(Debug, Clone)]
pub struct PathRecord {
    pub crossing_step: Option<usize>,
    pub states: Vec<f64>,
}

/// A batch of paths sharing one grid.
#[derive(Debug)]
pub struct PathSet {
    pub dt: f64,
    pub paths: Vec<PathRecord>,
}

fn path_rng(seed: u64, path: usize, antithetic: bool) -> (ChaCha8Rng, f64) {
    let (stream, sign) = if antithetic {
        ((path / 2) as u64, if path.is_multiple_of(2) { 1.0 } else { -1.0 })
    } else {
        (path as u64, 1.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (rng, sign)
}

fn simulate_one(process: &McProcess, horizon: f64, cfg: &McConfig, path: usize) -> PathRecord {
    let steps = cfg.steps_per_horizon;
    let dt = horizon / steps as f64;
    let sqrt_dt = dt.sqrt();
    let barrier = process.barrier();
    let (mut rng, sign) = path_rng(cfg.seed, path, cfg.antithetic);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = process.start();
    states.push(x);
    for step in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        x += process.drift(x) * dt + sqrt_dt * sign * z;
        states.push(x);
        if x <= barrier {
            return PathRecord {
                crossing_step: Some(step),
                states,
            };
        }
    }
    PathRecord {
        crossing_step: None,
        states,
    }
}

/// Euler-Maruyama simulation with dt = horizon / steps, keeping each
/// trajectory up to min(crossing, horizon).
pub fn simulate_to_barrier(
    process: &McProcess,
    horizon: f64,
    cfg: &McConfig,
) -> Result<PathSet> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(Error::domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let dt = horizon / cfg.steps_per_horizon as f64;
    let paths: Vec<PathRecord> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| simulate_one(process, horizon, cfg, i))
        .collect();
    Ok(PathSet { dt, paths })
}

/// Crossing times only (memory-light variant for large batches).
pub fn crossing_times(process: &McProcess, horizon: f64, cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(Error::domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let steps = cfg.steps_per_horizon;
    let dt = horizon / steps as f64;
    let barrier = process.barrier();
    let times: Vec<Option<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (mut rng, sign) = path_rng(cfg.seed, i, cfg.antithetic);
            let sqrt_dt = dt.sqrt();
            let mut x = process.start();
            for step in 1..=steps {
                let z: f64 = rng.sample(StandardNormal);
                x += process.drift(x) * dt + sqrt_dt * sign * z;
                if x <= barrier {
                    return Some(step as f64 * dt);
                }
            }
            None
        })
        .collect();
    Ok(times.into_iter().flatten().collect())
}

/// Truncation-error estimate at time t.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub t: f64,
    /// eps^{N+1} average of the path integrals of h * eta.
    pub q_hat: f64,
    /// Monte-Carlo standard error of q_hat.
    pub std_err: f64,
    /// |q_hat / (p^{(N)} + q_hat)|.
    pub rel_err: f64,
    /// |p_oracle - p^{(N)}| / |p_oracle| when an oracle density is given.
    pub realized_rel_err: Option<f64>,
}

/// Monte-Carlo estimate of the truncation error
/// q(t) = eps^{N+1} E[ integral_0^{tau ^ t} h(X_u) eta(X_u, t - u) du ],
/// by a left-rectangle sum along each simulated path.
pub fn estimate_q(
    process: &McProcess,
    t: f64,
    cfg: &McConfig,
    oracle_density: Option<f64>,
) -> Result<ErrorReport> {
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    let p_n = process.density(t)?;
    let eps_pow = process.eps().powi(process.order() as i32 + 1);
    if eps_pow == 0.0 {
        return Ok(ErrorReport {
            t,
            q_hat: 0.0,
            std_err: 0.0,
            rel_err: 0.0,
            realized_rel_err: oracle_density.map(|p| (p - p_n).abs() / p.abs()),
        });
    }

    let set = simulate_to_barrier(process, t, cfg)?;
    let dt = set.dt;
    let integrals: Vec<Result<f64>> = set
        .paths
        .par_iter()
        .map(|path| {
            let last = path.crossing_step.unwrap_or(cfg.steps_per_horizon);
            let mut acc = 0.0;
            for (k, &x) in path.states.iter().enumerate().take(last) {
                let u = k as f64 * dt;
                acc += process.h(x) * process.eta(x, t - u)? * dt;
            }
            Ok(acc)
        })
        .collect();

    let mut values = Vec::with_capacity(integrals.len());
    for v in integrals {
        values.push(v?);
    }
    let n = values.len() as f64;
    let mean = kahan_sum(&values) / n;
    let var = kahan_sum(
        &values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .collect::<Vec<_>>(),
    ) / (n - 1.0);
    let q_hat = eps_pow * mean;
    let std_err = eps_pow.abs() * (var / n).sqrt();
    Ok(ErrorReport {
        t,
        q_hat,
        std_err,
        rel_err: (q_hat / (p_n + q_hat)).abs(),
        realized_rel_err: oracle_density.map(|p| (p - p_n).abs() / p.abs()),
    })
}

fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Normalized histogram of crossing times among crossed paths, plus the
/// crossing fraction. Bin heights are per unit time, so the histogram
/// integrates to one over the crossed subpopulation.
pub fn mc_fptd_histogram(
    process: &McProcess,
    horizon: f64,
    bins: usize,
    cfg: &McConfig,
) -> Result<(DensityCurve, f64)> {
    if bins < 10 {
        return Err(Error::domain(format!("need at least 10 bins, got {bins}")));
    }
    let times = crossing_times(process, horizon, cfg)?;
    if times.is_empty() {
        return Err(Error::numerical(
            "no paths crossed the barrier within the horizon; cannot form a density",
        ));
    }
    let width = horizon / bins as f64;
    let mut counts = vec![0usize; bins];
    for &tau in &times {
        let mut idx = (tau / width) as usize;
        if idx >= bins {
            idx = bins - 1;
        }
        counts[idx] += 1;
    }
    let n_crossed = times.len();
    let t: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) * width).collect();
    let p: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (n_crossed as f64 * width))
        .collect();
    let fraction = n_crossed as f64 / cfg.n_paths as f64;
    Ok((DensityCurve::new(t, p, "mc")?, fraction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special;

    fn ou_table() -> CoefficientTable {
        CoefficientTable::build(2).unwrap()
    }

    fn brownian_cdf(d: f64, t: f64) -> f64 {
        // P(tau_d <= t) = erfc(d / sqrt(2 t))
        special::erfc(d / (2.0 * t).sqrt())
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let table = ou_table();
        let scaled = ScaledProblem::new(0.1, 0.0, 2.0 / 3.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let cfg = McConfig {
            n_paths: 16,
            steps_per_horizon: 50,
            seed: 99,
            antithetic: false,
        };
        let a = simulate_to_barrier(&process, 1.0, &cfg).unwrap();
        let b = simulate_to_barrier(&process, 1.0, &cfg).unwrap();
        for (pa, pb) in a.paths.iter().zip(&b.paths) {
            assert_eq!(pa.crossing_step, pb.crossing_step);
            assert_eq!(pa.states, pb.states);
        }
    }

    #[test]
    fn driftless_crossing_fraction_matches_brownian_cdf() {
        let table = ou_table();
        let scaled = ScaledProblem::new(0.0, 0.0, 2.0 / 3.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let cfg = McConfig {
            n_paths: 1000,
            steps_per_horizon: 1000,
            seed: 12345,
            antithetic: false,
        };
        let horizon = 1.0;
        let set = simulate_to_barrier(&process, horizon, &cfg).unwrap();
        let crossed = set
            .paths
            .iter()
            .filter(|p| p.crossing_step.is_some())
            .count() as f64;
        let frac = crossed / cfg.n_paths as f64;
        let want = brownian_cdf(2.0 / 3.0, horizon);
        let se = (want * (1.0 - want) / cfg.n_paths as f64).sqrt();
        assert!(
            (frac - want).abs() <= 3.0 * se + 0.02,
            "fraction {frac} vs CDF {want} (se {se})"
        );
    }

    #[test]
    fn step_refinement_moves_fraction_within_noise() {
        let table = ou_table();
        let scaled = ScaledProblem::new(0.0, 0.0, 2.0 / 3.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let frac = |steps: usize| {
            let cfg = McConfig {
                n_paths: 2000,
                steps_per_horizon: steps,
                seed: 7,
                antithetic: false,
            };
            let times = crossing_times(&process, 1.0, &cfg).unwrap();
            times.len() as f64 / 2000.0
        };
        let f1 = frac(500);
        let f2 = frac(1000);
        let se = (f1 * (1.0 - f1) / 2000.0).sqrt();
        assert!((f1 - f2).abs() <= 3.0 * (2.0 * se) + 0.01, "{f1} vs {f2}");
    }

    #[test]
    fn estimate_q_zero_eps_is_exactly_zero() {
        let table = ou_table();
        let scaled = ScaledProblem::new(0.0, 0.0, 2.0 / 3.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let report = estimate_q(&process, 1.0, &McConfig::default(), None).unwrap();
        assert_eq!(report.q_hat, 0.0);
        assert_eq!(report.std_err, 0.0);
        assert_eq!(report.rel_err, 0.0);
    }

    #[test]
    fn estimate_q_rel_err_formula() {
        let table = ou_table();
        let scaled = ScaledProblem::new(0.1, 0.0, 2.0 / 3.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let cfg = McConfig {
            n_paths: 50,
            steps_per_horizon: 100,
            seed: 3,
            antithetic: false,
        };
        let report = estimate_q(&process, 1.0, &cfg, Some(0.25)).unwrap();
        let p_n = process.density(1.0).unwrap();
        let want = (report.q_hat / (p_n + report.q_hat)).abs();
        assert_eq!(report.rel_err, want);
        let realized = report.realized_rel_err.unwrap();
        assert!((realized - (0.25 - p_n).abs() / 0.25).abs() < 1e-15);
        assert!(report.std_err >= 0.0);
    }

    #[test]
    fn estimate_q_is_stable_under_refinement() {
        // Doubling steps and quadrupling paths moves the estimate by
        // less than 3 combined standard errors.
        let table = ou_table();
        let scaled = ScaledProblem::new(0.1, 0.0, 2.0 / 3.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let coarse_cfg = McConfig {
            n_paths: 500,
            steps_per_horizon: 250,
            seed: 11,
            antithetic: false,
        };
        let fine_cfg = McConfig {
            n_paths: 2000,
            steps_per_horizon: 500,
            seed: 13,
            antithetic: false,
        };
        let coarse = estimate_q(&process, 2.0, &coarse_cfg, None).unwrap();
        let fine = estimate_q(&process, 2.0, &fine_cfg, None).unwrap();
        let band = 3.0 * (coarse.std_err + fine.std_err);
        assert!(
            (coarse.q_hat - fine.q_hat).abs() <= band.max(1e-9),
            "coarse {:e}, fine {:e}, band {band:e}",
            coarse.q_hat,
            fine.q_hat
        );
    }

    #[test]
    fn histogram_requires_crossings_and_bins() {
        let table = ou_table();
        // A start far above the barrier with a tiny horizon: no crossings.
        let scaled = ScaledProblem::new(0.1, 0.0, 50.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let cfg = McConfig {
            n_paths: 50,
            steps_per_horizon: 50,
            seed: 1,
            antithetic: false,
        };
        assert!(mc_fptd_histogram(&process, 0.01, 20, &cfg).is_err());
        assert!(mc_fptd_histogram(&process, 1.0, 5, &cfg).is_err());
    }

    #[test]
    fn histogram_integrates_to_one() {
        let table = ou_table();
        let scaled = ScaledProblem::new(0.1, 0.0, 2.0 / 3.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let cfg = McConfig {
            n_paths: 4000,
            steps_per_horizon: 400,
            seed: 17,
            antithetic: false,
        };
        let (curve, fraction) = mc_fptd_histogram(&process, 3.0, 30, &cfg).unwrap();
        let width = 3.0 / 30.0;
        let mass: f64 = curve.p.iter().map(|p| p * width).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(fraction > 0.3 && fraction <= 1.0);
    }

    #[test]
    fn antithetic_pairs_share_streams() {
        let table = ou_table();
        let scaled = ScaledProblem::new(0.0, 0.0, 2.0).unwrap();
        let process = McProcess::Ou {
            scaled: &scaled,
            order: 1,
            table: &table,
        };
        let cfg = McConfig {
            n_paths: 4,
            steps_per_horizon: 64,
            seed: 5,
            antithetic: true,
        };
        let set = simulate_to_barrier(&process, 0.25, &cfg).unwrap();
        // With zero drift, odd paths mirror even ones around the start
        // until either crosses.
        let a = &set.paths[0].states;
        let b = &set.paths[1].states;
        let n = a.len().min(b.len());
        for k in 0..n {
            let da = a[k] - 2.0;
            let db = b[k] - 2.0;
            assert!((da + db).abs() < 1e-12, "step {k}: {da} vs {db}");
        }
    }
}
