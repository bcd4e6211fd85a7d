//! Numerical Laplace machinery used as oracles and benchmarks:
//!
//! - [`talbot_invert`] — fixed-Talbot contour inversion,
//! - [`exact_lt`] — the exact transform of a hitting problem obtained by
//!   solving its boundary-value ODE with complex tridiagonal finite
//!   differences (Richardson-extrapolated, truncation controlled by
//!   domain doubling),
//! - [`generic_first_order_lt`] — the first-order perturbation integrals
//!   for an arbitrary continuous drift, by nested adaptive quadrature.
//!
//! Inversion deforms the Bromwich line around the negative real axis, so
//! every transform evaluator here accepts any frequency off the branch
//! cut (-inf, 0], not just the right half-plane.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::errors::Error;
use crate::quad;
use crate::special;
use crate::Result;

/// A Laplace-transform evaluator, analytic off the cut (-inf, 0].
///
/// Implementations must be pure: contour nodes are evaluated
/// concurrently and results must not depend on evaluation order.
pub trait LtCallable: Sync {
    fn eval(&self, beta: Complex64) -> Result<Complex64>;
}

impl<F> LtCallable for F
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn eval(&self, beta: Complex64) -> Result<Complex64> {
        self(beta)
    }
}

/// Fixed-Talbot numerical inverse at time `t` with `nodes` contour points.
///
/// Deterministic for fixed inputs; evaluator failures propagate with the
/// offending frequency attached.
pub fn talbot_invert<F: LtCallable + ?Sized>(f: &F, t: f64, nodes: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("inversion time must be > 0, got {t}")));
    }
    if nodes < 16 {
        return Err(Error::domain(format!(
            "contour needs at least 16 nodes, got {nodes}"
        )));
    }
    let m = nodes;
    let r = 2.0 * m as f64 / (5.0 * t);

    let terms: Vec<Result<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                let beta = Complex64::new(r, 0.0);
                let v = f.eval(beta).map_err(|e| Error::LtEval {
                    beta,
                    source: Box::new(e),
                })?;
                Ok(0.5 * (r * t).exp() * v.re)
            } else {
                let theta = k as f64 * core::f64::consts::PI / m as f64;
                let cot = theta.cos() / theta.sin();
                let s = Complex64::new(r * theta * cot, r * theta);
                let sigma = theta + (theta * cot - 1.0) * cot;
                let v = f.eval(s).map_err(|e| Error::LtEval {
                    beta: s,
                    source: Box::new(e),
                })?;
                let w = (s * t).exp() * Complex64::new(1.0, sigma);
                Ok((v * w).re)
            }
        })
        .collect();

    let mut acc = 0.0;
    for term in terms {
        acc += term?;
    }
    Ok(acc * r / m as f64)
}

/// Hitting problems whose exact transform the boundary-value solver can
/// produce: drift eps*h with h(x) = theta_hat - x (mean reversion toward
/// theta_hat, barrier at 0) or h(x) = 1/(2x) (radial drift, barrier a > 0).
#[derive(Debug, Clone, Copy)]
pub enum BvpProcess {
    Ou { eps: f64, theta_hat: f64 },
    Bessel { eps: f64, barrier: f64 },
}

impl BvpProcess {
    pub fn barrier(&self) -> f64 {
        match self {
            BvpProcess::Ou { .. } => 0.0,
            BvpProcess::Bessel { barrier, .. } => *barrier,
        }
    }

    /// Full drift coefficient eps * h(x).
    pub fn drift(&self, x: f64) -> f64 {
        match self {
            BvpProcess::Ou { eps, theta_hat } => eps * (theta_hat - x),
            BvpProcess::Bessel { eps, .. } => eps / (2.0 * x),
        }
    }
}

/// Grid controls for the boundary-value solve. The grid is uniform from
/// the barrier to `x_max`; `m_x` nodes cover the initial domain and the
/// spacing is preserved when the domain doubles.
#[derive(Debug, Clone, Copy)]
pub struct BvpGrid {
    pub x_max: f64,
    pub m_x: usize,
}

impl BvpGrid {
    pub fn for_start(x: f64, barrier: f64) -> Self {
        BvpGrid {
            x_max: barrier + 2.0 * (x - barrier) + 2.0,
            m_x: 2000,
        }
    }
}

const MAX_DOUBLINGS: usize = 12;

/// Exact transform E_x[e^{-beta tau}] of the downward hitting problem,
/// from the second-order finite-difference solve of
/// (1/2) f'' + eps h(x) f' = beta f, f(barrier) = 1, f(x_max) = 0.
///
/// Two grids (h, h/2) are combined by Richardson extrapolation and the
/// truncation point doubles until the value settles to 1e-10 relative.
pub fn exact_lt(
    process: &BvpProcess,
    x: f64,
    beta: Complex64,
    grid: &BvpGrid,
) -> Result<Complex64> {
    if special::on_branch_cut(beta) {
        return Err(Error::domain(format!(
            "exact transform requires beta off the cut (-inf, 0], got {beta}"
        )));
    }
    let a = process.barrier();
    if !(x > a) {
        return Err(Error::domain(format!(
            "start {x} must sit strictly above the barrier {a}"
        )));
    }
    if grid.m_x < 200 {
        return Err(Error::domain(format!(
            "grid needs at least 200 nodes, got {}",
            grid.m_x
        )));
    }
    if !(grid.x_max > x) {
        return Err(Error::domain(format!(
            "truncation point {} must exceed the start {x}",
            grid.x_max
        )));
    }

    // Snap the spacing so the evaluation point lands on a node.
    let h_target = (grid.x_max - a) / grid.m_x as f64;
    let m1 = ((x - a) / h_target).round().max(2.0) as usize;
    let h = (x - a) / m1 as f64;

    let mut n = (((grid.x_max - a) / h).ceil() as usize).max(m1 + 2);
    let mut prev: Option<Complex64> = None;
    for _ in 0..=MAX_DOUBLINGS {
        let coarse = solve_bvp(process, a, h, n, m1, beta)?;
        let fine = solve_bvp(process, a, 0.5 * h, 2 * n, 2 * m1, beta)?;
        let value = (4.0 * fine - coarse) / 3.0;
        if let Some(p) = prev {
            if (value - p).norm() <= 1e-10 * value.norm().max(1e-300) {
                return Ok(value);
            }
        }
        prev = Some(value);
        n *= 2;
    }
    Err(Error::numerical(format!(
        "domain doubling did not settle after {MAX_DOUBLINGS} doublings at beta = {beta}"
    )))
}

/// One tridiagonal solve; returns the solution at node `m1` (= start x).
fn solve_bvp(
    process: &BvpProcess,
    a: f64,
    h: f64,
    n: usize,
    m1: usize,
    beta: Complex64,
) -> Result<Complex64> {
    let interior = n - 1;
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;

    // Thomas elimination on the fly: diag f_i-coefficients are
    // -(1/h^2 + beta), off-diagonals 1/(2h^2) +- drift/(2h).
    let mut c_prime = vec![Complex64::new(0.0, 0.0); interior];
    let mut d_prime = vec![Complex64::new(0.0, 0.0); interior];
    let mut prev_c = Complex64::new(0.0, 0.0);
    let mut prev_d = Complex64::new(0.0, 0.0);
    for i in 1..=interior {
        let xi = a + i as f64 * h;
        let drift = process.drift(xi);
        let lower = Complex64::new(0.5 * inv_h2 - drift * inv_2h, 0.0);
        let diag = Complex64::new(-inv_h2, 0.0) - beta;
        let upper = Complex64::new(0.5 * inv_h2 + drift * inv_2h, 0.0);
        // Boundary values: f_0 = 1 contributes to the first rhs.
        let rhs = if i == 1 { -lower } else { Complex64::new(0.0, 0.0) };
        let denom = if i == 1 { diag } else { diag - lower * prev_c };
        if denom.norm() == 0.0 {
            return Err(Error::numerical(format!(
                "singular tridiagonal system at beta = {beta}"
            )));
        }
        prev_c = upper / denom;
        prev_d = if i == 1 {
            rhs / denom
        } else {
            (rhs - lower * prev_d) / denom
        };
        c_prime[i - 1] = prev_c;
        d_prime[i - 1] = prev_d;
    }
    // Back substitution, keeping only the value at m1.
    let mut f_next = Complex64::new(0.0, 0.0); // f_n = 0
    let mut f_at_m1 = Complex64::new(0.0, 0.0);
    for i in (1..=interior).rev() {
        let f_i = d_prime[i - 1] - c_prime[i - 1] * f_next;
        if !f_i.re.is_finite() || !f_i.im.is_finite() {
            return Err(Error::numerical(format!(
                "boundary-value solve overflowed at beta = {beta}"
            )));
        }
        if i == m1 {
            f_at_m1 = f_i;
        }
        f_next = f_i;
    }
    Ok(f_at_m1)
}

const TAIL_DOUBLINGS: usize = 48;

/// First-order perturbation transform f_0 * g_1 for an arbitrary
/// continuous drift `h` on (a, inf), real beta > 0, by nested adaptive
/// quadrature. Cross-check oracle only; the closed forms are the product
/// code path.
///
/// With w(y) = int_y^inf h(z) e^{-2 gamma (z - y)} dz (the far-field
/// constant folded in), g_1(x) = -2 gamma int_a^x w(y) dy in shifted
/// coordinates, and f_1 = e^{-gamma (x-a)} g_1.
pub fn generic_first_order_lt(
    h: &(dyn Fn(f64) -> f64 + Sync),
    h_name: &str,
    x: f64,
    a: f64,
    beta: f64,
) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::domain(format!(
            "generic first-order engine requires real beta > 0, got {beta}"
        )));
    }
    if !(x > a) {
        return Err(Error::domain(format!(
            "start {x} must sit strictly above the barrier {a}"
        )));
    }
    let gamma = (2.0 * beta).sqrt();

    let diverged = || {
        Error::domain(format!(
            "inner integral for drift '{h_name}' does not converge against the \
             exponential weight"
        ))
    };

    // Exponentially damped tail integral, domain doubled to convergence.
    let tail = |y: f64| -> Result<f64> {
        let g = |u: f64| h(y + u) * (-2.0 * gamma * u).exp();
        let mut upper = 4.0 / (2.0 * gamma);
        let mut acc = quad::adaptive_simpson(g, 0.0, upper, 1e-13);
        for _ in 0..TAIL_DOUBLINGS {
            // A quick magnitude probe keeps a super-exponential drift from
            // dragging the subdivision into enormous finite values.
            let probe = g(upper).abs().max(g(1.5 * upper).abs()) * upper;
            if !probe.is_finite() || probe > 1e8 {
                return Err(diverged());
            }
            let more = quad::adaptive_simpson(g, upper, 2.0 * upper, 1e-13 * probe.max(1.0));
            upper *= 2.0;
            let prev = acc;
            acc += more;
            if !acc.is_finite() {
                return Err(diverged());
            }
            if more.abs() <= 1e-12 * acc.abs().max(1e-30) && acc == prev + more {
                return Ok(acc);
            }
        }
        Err(diverged())
    };

    // Probe the far field once so a divergent drift fails loudly.
    tail(x - a + 1.0)?;

    let dist = x - a;
    let mut failed: Option<Error> = None;
    let outer = quad::adaptive_simpson(
        |y| match tail(a + y) {
            Ok(v) => v,
            Err(e) => {
                failed = Some(e);
                0.0
            }
        },
        0.0,
        dist,
        1e-12 * dist.max(1.0),
    );
    if let Some(e) = failed {
        return Err(e);
    }
    let g1 = -2.0 * gamma * outer;
    Ok((-gamma * dist).exp() * g1)
}
