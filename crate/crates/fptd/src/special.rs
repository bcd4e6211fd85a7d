//! Scalar special functions used by the density formulas: parabolic
//! cylinder D at integer orders, exponential integral E1 (real and
//! complex-scaled), Gamma densities, the Brownian first-passage density
//! and complex principal-branch helpers.
//!
//! Everything here is pure, deterministic double precision.

// Rational-approximation coefficients are kept at published precision.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

use crate::errors::Error;
use crate::quad;
use crate::Result;

pub const SQRT_2PI: f64 = 2.5066282746310002;
const FRAC_1_SQRT_PI: f64 = 0.5641895835477563;
pub const EULER_GAMMA: f64 = 0.5772156649015329;

// ---------------------------------------------------------------------
// Error function family (Cody rational approximations).
// ---------------------------------------------------------------------

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

fn erf_small(x: f64) -> f64 {
    // |x| <= 0.46875
    let y = x * x;
    let num = (((ERF_A[4] * y + ERF_A[0]) * y + ERF_A[1]) * y + ERF_A[2]) * y + ERF_A[3];
    let den = (((y + ERF_B[0]) * y + ERF_B[1]) * y + ERF_B[2]) * y + ERF_B[3];
    x * num / den
}

fn erfcx_mid(x: f64) -> f64 {
    // 0.46875 < x <= 4
    let mut num = ERF_C[8] * x;
    let mut den = x;
    for i in 0..7 {
        num = (num + ERF_C[i]) * x;
        den = (den + ERF_D[i]) * x;
    }
    (num + ERF_C[7]) / (den + ERF_D[7])
}

fn erfcx_large(x: f64) -> f64 {
    // x > 4
    let y = 1.0 / (x * x);
    let mut num = ERF_P[5] * y;
    let mut den = y;
    for i in 0..4 {
        num = (num + ERF_P[i]) * y;
        den = (den + ERF_Q[i]) * y;
    }
    let r = y * (num + ERF_P[4]) / (den + ERF_Q[4]);
    (FRAC_1_SQRT_PI - r) / x
}

/// Error function, accurate to ~1e-15 relative.
pub fn erf(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.46875 {
        erf_small(x)
    } else {
        let sign = x.signum();
        sign * (1.0 - erfc(ax))
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x < -0.46875 {
        return 2.0 - erfc(-x);
    }
    if x <= 0.46875 {
        return 1.0 - erf_small(x);
    }
    let ex = (-x * x).exp();
    if x <= 4.0 {
        ex * erfcx_mid(x)
    } else {
        ex * erfcx_large(x)
    }
}

/// Scaled complement e^{x^2} erfc(x) for x >= 0; avoids under/overflow.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 0.46875 {
        (x * x).exp() * (1.0 - erf_small(x))
    } else if x <= 4.0 {
        erfcx_mid(x)
    } else {
        erfcx_large(x)
    }
}

// ---------------------------------------------------------------------
// Log-gamma (Lanczos, g = 7, 9 terms).
// ---------------------------------------------------------------------

const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Natural log of the Gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = core::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * core::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

// ---------------------------------------------------------------------
// Parabolic cylinder function D at integer orders <= 1.
// ---------------------------------------------------------------------

/// Parabolic cylinder function D_order(z) for integer order <= 1.
///
/// Orders 1, 0, -1 use the closed forms; lower orders descend the
/// three-term recurrence D_{v-1} = (z D_v - D_{v+1}) / v from the seed
/// pair (D_0, D_{-1}) while it is stable (2 z^2 <= |order|), and switch
/// to a Gauss-Laguerre evaluation of the integral representation
/// otherwise. The split is gated empirically against a quadrature oracle
/// over orders to -18 and z in [0.1, 10].
pub fn pcf_d(order: i32, z: f64) -> Result<f64> {
    if order > 1 {
        return Err(Error::domain(format!(
            "parabolic cylinder order {order} unsupported; supported orders are <= 1"
        )));
    }
    match order {
        1 => Ok(z * (-0.25 * z * z).exp()),
        0 => Ok((-0.25 * z * z).exp()),
        _ => {
            if z < 0.0 {
                return Err(Error::domain(format!(
                    "parabolic cylinder argument must be >= 0 for negative orders, got {z}"
                )));
            }
            let n = (-order) as usize;
            if n == 1 || 2.0 * z * z <= n as f64 {
                Ok(pcf_d_recurrence(n, z))
            } else {
                Ok(pcf_d_laguerre(n, z))
            }
        }
    }
}

fn pcf_d_minus1(z: f64) -> f64 {
    // D_{-1}(z) = sqrt(pi/2) e^{z^2/4} erfc(z/sqrt(2)), via the scaled
    // complement to dodge the exploding exponential.
    let half_pi_sqrt = (core::f64::consts::PI / 2.0).sqrt();
    half_pi_sqrt * erfcx(z / core::f64::consts::SQRT_2) * (-0.25 * z * z).exp()
}

fn pcf_d_recurrence(n: usize, z: f64) -> f64 {
    let mut d_hi = (-0.25 * z * z).exp(); // D_0
    let mut d_lo = pcf_d_minus1(z); // D_{-1}
    if n == 1 {
        return d_lo;
    }
    // D_{v-1} = (z D_v - D_{v+1}) / v, descending from v = -1.
    for m in 1..n {
        let v = -(m as f64);
        let next = (z * d_lo - d_hi) / v;
        d_hi = d_lo;
        d_lo = next;
    }
    d_lo
}

fn pcf_d_laguerre(n: usize, z: f64) -> f64 {
    // D_{-n}(z) = e^{-z^2/4} / Gamma(n) * int_0^inf s^{n-1} e^{-zs - s^2/2} ds,
    // substituted s = w/z so the e^{-w} weight is explicit:
    //   = e^{-z^2/4} z^{-n} / Gamma(n) * int_0^inf w^{n-1} e^{-w^2/(2z^2)} e^{-w} dw.
    let rule = quad::gauss_laguerre_64();
    let nf = n as f64;
    let inv_2z2 = 1.0 / (2.0 * z * z);
    let integral = rule.integrate(|w| {
        if w == 0.0 {
            return 0.0;
        }
        ((nf - 1.0) * w.ln() - w * w * inv_2z2).exp()
    });
    (-0.25 * z * z).exp() * (-nf * z.ln() - ln_gamma(nf)).exp() * integral
}

// ---------------------------------------------------------------------
// Exponential integral E1.
// ---------------------------------------------------------------------

/// Exponential integral E1(x) = int_x^inf e^{-u}/u du for x > 0.
///
/// Convergent series for x <= 1, continued fraction beyond; relative
/// accuracy around 1e-13.
pub fn e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("E1 requires x > 0, got {x}")));
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..=40 {
            let kf = k as f64;
            term *= -x / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() + sum)
    } else {
        Ok((-x).exp() * e1_cf_scaled_real(x))
    }
}

/// e^x E1(x) by the modified Lentz continued fraction, x > 1.
fn e1_cf_scaled_real(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x + 1.0;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let a = -kf * kf;
        let b = x + 1.0 + 2.0 * kf;
        d = b + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    1.0 / f
}

/// Scaled product e^z E1(z) for complex z off the branch cut (-inf, 0].
///
/// Power series for |z| <= 6, Lentz continued fraction beyond. Keeping
/// the product scaled avoids overflow of e^z on inversion contours.
pub fn e1_scaled_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::domain(format!(
            "scaled E1 requires z off the cut (-inf, 0], got {z}"
        )));
    }
    if z.norm() <= 6.0 {
        // e^z (-gamma - ln z + sum (-1)^{k+1} z^k / (k k!))
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..=80 {
            let kf = k as f64;
            term *= -z / kf;
            let add = -term / kf;
            sum += add;
            if add.norm() < 1e-18 * sum.norm().max(1e-300) {
                break;
            }
        }
        Ok(z.exp() * (-EULER_GAMMA - z.ln() + sum))
    } else {
        let tiny = 1e-300;
        let one = Complex64::new(1.0, 0.0);
        let mut f = z + 1.0;
        let mut c = f;
        let mut d = Complex64::new(0.0, 0.0);
        for k in 1..=300 {
            let kf = k as f64;
            let a = Complex64::new(-kf * kf, 0.0);
            let b = z + (1.0 + 2.0 * kf);
            d = b + a * d;
            if d.norm() == 0.0 {
                d = Complex64::new(tiny, 0.0);
            }
            c = b + a / c;
            if c.norm() == 0.0 {
                c = Complex64::new(tiny, 0.0);
            }
            d = one / d;
            let delta = c * d;
            f *= delta;
            if (delta - one).norm() < 1e-15 {
                return Ok(one / f);
            }
        }
        Err(Error::numerical(format!(
            "continued fraction for scaled E1 did not converge at z = {z}"
        )))
    }
}

// ---------------------------------------------------------------------
// Gamma and Brownian first-passage densities.
// ---------------------------------------------------------------------

/// Gamma density rate^shape y^{shape-1} e^{-rate y} / Gamma(shape).
pub fn gamma_density(y: f64, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0) || !(rate > 0.0) {
        return Err(Error::domain(format!(
            "gamma density requires shape > 0 and rate > 0, got shape {shape}, rate {rate}"
        )));
    }
    if y < 0.0 {
        return Err(Error::domain(format!(
            "gamma density requires y >= 0, got {y}"
        )));
    }
    if y == 0.0 {
        return Ok(match shape.partial_cmp(&1.0).unwrap() {
            core::cmp::Ordering::Less => f64::INFINITY,
            core::cmp::Ordering::Equal => rate,
            core::cmp::Ordering::Greater => 0.0,
        });
    }
    Ok((shape * rate.ln() + (shape - 1.0) * y.ln() - rate * y - ln_gamma(shape)).exp())
}

/// First-passage density of standard Brownian motion to a barrier at
/// distance `level`: level / sqrt(2 pi) t^{-3/2} e^{-level^2 / (2t)}.
pub fn inv_gaussian_fptd(level: f64, t: f64) -> Result<f64> {
    if !(level > 0.0) {
        return Err(Error::domain(format!(
            "barrier distance must be positive, got {level}"
        )));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(level / SQRT_2PI * t.powf(-1.5) * (-level * level / (2.0 * t)).exp())
}

// ---------------------------------------------------------------------
// Complex principal-branch helpers.
// ---------------------------------------------------------------------

/// True when `beta` sits on the closed negative real axis, where the
/// principal branches of sqrt and log are discontinuous.
pub fn on_branch_cut(beta: Complex64) -> bool {
    beta.im == 0.0 && beta.re <= 0.0
}

/// Principal square root of 2 beta; the frequency-domain variable used
/// throughout the recursion. Errors on the branch cut, where the real
/// part of the root would vanish.
pub fn complex_sqrt_2beta(beta: Complex64) -> Result<Complex64> {
    if on_branch_cut(beta) {
        return Err(Error::domain(format!(
            "sqrt(2 beta) requires beta off the cut (-inf, 0], got {beta}"
        )));
    }
    Ok((2.0 * beta).sqrt())
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn sqrt_2beta_right_half_plane(re in 1e-6_f64..1e3, im in -1e3_f64..1e3) {
            let g = complex_sqrt_2beta(Complex64::new(re, im)).unwrap();
            prop_assert!(g.re > 0.0, "Re sqrt(2b) = {} for beta = {re}+{im}i", g.re);
            let back = g * g * 0.5;
            prop_assert!((back - Complex64::new(re, im)).norm() <= 1e-12 * (re * re + im * im).sqrt().max(1.0));
        }

        #[test]
        fn e1_positive_on_random_grid(x in 1e-6_f64..200.0) {
            let v = e1(x).unwrap();
            prop_assert!(v > 0.0);
            prop_assert!(v.is_finite());
        }

        #[test]
        fn pcf_d_positive_for_nonneg_argument(n in 1i32..=18, z in 0.0_f64..20.0) {
            // D_{-n}(z) is a positive integral for z >= 0.
            let v = pcf_d(-n, z).unwrap();
            prop_assert!(v > 0.0, "D_(-{n})({z}) = {v}");
        }
    }
}
