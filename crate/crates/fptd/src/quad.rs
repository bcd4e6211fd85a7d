//! Quadrature support: adaptive Simpson on finite intervals and
//! Gauss-Laguerre rules for exponentially weighted half-line integrals.

use std::sync::OnceLock;

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// Subdivides until the local Richardson estimate drops below the
/// tolerance, which is split proportionally between halves. `tol` is
/// absolute; callers scale it by the expected magnitude.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    if !whole.is_finite() {
        return whole;
    }
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, 48)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Non-finite values would never meet the tolerance; stop splitting
    // and let the poisoned value surface to the caller.
    if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Nodes and weights of the n-point Gauss-Laguerre rule (weight e^{-x}
/// on [0, inf)). Computed by Newton iteration on the Laguerre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "rule needs at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..n {
            // Stroud-Secrest starting guesses, then Newton.
            if i == 0 {
                z = 3.0 / (1.0 + 2.4 * nf);
            } else if i == 1 {
                z += 15.0 / (1.0 + 2.5 * nf);
            } else {
                let ai = (i - 1) as f64;
                z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2]);
            }
            let mut p1 = 0.0;
            let mut pp = 0.0;
            for _ in 0..120 {
                p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (p1 - p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs() {
                    break;
                }
            }
            // Recompute p2 at the converged node for the weight.
            let mut p1w = 1.0;
            let mut p2w = 0.0;
            for j in 1..=n {
                let p3 = p2w;
                p2w = p1w;
                let jf = j as f64;
                p1w = ((2.0 * jf - 1.0 - z) * p2w - (jf - 1.0) * p3) / jf;
            }
            let _ = p1;
            nodes[i] = z;
            weights[i] = -1.0 / (pp * nf * p2w);
        }
        GaussLaguerre { nodes, weights }
    }

    /// Integral of `f(x) e^{-x}` over [0, inf) by this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn rule_40() -> &'static GaussLaguerre {
    static RULE: OnceLock<GaussLaguerre> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerre::new(40))
}

fn rule_80() -> &'static GaussLaguerre {
    static RULE: OnceLock<GaussLaguerre> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerre::new(80))
}

fn rule_64() -> &'static GaussLaguerre {
    static RULE: OnceLock<GaussLaguerre> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerre::new(64))
}

/// 64-point Gauss-Laguerre rule, shared by the special-function kernels.
pub fn gauss_laguerre_64() -> &'static GaussLaguerre {
    rule_64()
}

/// Integral of `f(s) e^{-s}` over [0, inf).
///
/// Gauss-Laguerre at 40 and 80 nodes; when the two disagree beyond
/// `rel_tol` the integrand is not polynomial-like (typically a pole close
/// to the origin) and the routine falls back to adaptive Simpson on the
/// log-transformed interval.
pub fn exp_weighted<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> f64 {
    let coarse = rule_40().integrate(&f);
    let fine = rule_80().integrate(&f);
    let scale = fine.abs().max(1e-300);
    if (fine - coarse).abs() <= rel_tol * scale {
        return fine;
    }
    exp_weighted_adaptive(f, 0.1 * rel_tol)
}

/// Adaptive evaluation of `int_0^inf f(s) e^{-s} ds` via s = -ln(v),
/// v in (0, 1].
pub fn exp_weighted_adaptive<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> f64 {
    let g = |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            f(-v.ln())
        }
    };
    // Scale the absolute tolerance from a cheap first pass.
    let rough = rule_40().integrate(&f).abs().max(1e-30);
    adaptive_simpson(g, 0.0, 1.0, rel_tol * rough)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_handles_peaked_integrand() {
        // int_0^1 e^{-100(x-1/2)^2} dx = sqrt(pi)/10 * erf(5)
        let v = adaptive_simpson(|x: f64| (-100.0 * (x - 0.5) * (x - 0.5)).exp(), 0.0, 1.0, 1e-12);
        let expect = core::f64::consts::PI.sqrt() / 10.0 * 0.9999999999984626;
        assert!((v - expect).abs() < 1e-10, "got {v}, want {expect}");
    }

    #[test]
    fn laguerre_moments() {
        for &n in &[2usize, 8, 40, 80] {
            let rule = GaussLaguerre::new(n);
            let s0: f64 = rule.weights.iter().sum();
            let s1 = rule.integrate(|x| x);
            let s2 = rule.integrate(|x| x * x);
            assert!((s0 - 1.0).abs() < 1e-12, "n={n} moment 0: {s0}");
            assert!((s1 - 1.0).abs() < 1e-10, "n={n} moment 1: {s1}");
            assert!((s2 - 2.0).abs() < 1e-9, "n={n} moment 2: {s2}");
        }
    }

    #[test]
    fn laguerre_high_degree_exactness() {
        // 40-point rule integrates x^20 exactly: int x^20 e^{-x} = 20!
        let rule = GaussLaguerre::new(40);
        let v = rule.integrate(|x| x.powi(20));
        let expect = 2.43290200817664e18;
        assert!((v - expect).abs() / expect < 1e-10, "got {v}");
    }

    #[test]
    fn exp_weighted_rational_pole_near_origin() {
        // int_0^inf e^{-s}/(s + 0.01) ds = e^{0.01} E1(0.01) = 4.0785114...
        let v = exp_weighted(|s| 1.0 / (s + 0.01), 1e-11);
        let expect = 4.0785114436;
        assert!(
            (v - expect).abs() / expect < 1e-7,
            "got {v}, want {expect}"
        );
    }
}
