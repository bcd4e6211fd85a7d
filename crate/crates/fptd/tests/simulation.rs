//! Statistical agreement between the histogram estimator and the
//! closed-form densities at scale. Discrete crossing detection biases
//! hitting times late by ~0.58 sqrt(dt), so these checks run with fine
//! steps to keep that bias inside the statistical bands.

use fptd::coeffs::CoefficientTable;
use fptd::mc::{crossing_times, mc_fptd_histogram, McConfig, McProcess};
use fptd::ou::{self, ScaledProblem};
use fptd::special;

#[test]
fn driftless_histogram_matches_brownian_density_per_bin() {
    // eps = 0 collapses the simulation to Brownian motion; every bin of
    // the conditional histogram must sit within 4 standard errors of the
    // exact bin average.
    let table = CoefficientTable::build(1).unwrap();
    let scaled = ScaledProblem::new(0.0, 0.0, 2.0 / 3.0).unwrap();
    let process = McProcess::Ou {
        scaled: &scaled,
        order: 1,
        table: &table,
    };
    let horizon = 3.0;
    let bins = 30;
    let cfg = McConfig {
        n_paths: 100_000,
        steps_per_horizon: 20_000,
        seed: 2718,
        antithetic: false,
    };
    let times = crossing_times(&process, horizon, &cfg).unwrap();
    let n_crossed = times.len() as f64;
    let width = horizon / bins as f64;
    let mut counts = vec![0usize; bins];
    for &tau in &times {
        counts[((tau / width) as usize).min(bins - 1)] += 1;
    }

    // Exact conditional bin probabilities from the Brownian CDF
    // P(tau <= t) = erfc(d / sqrt(2t)).
    let d = scaled.y0;
    let cdf = |dist: f64, t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            special::erfc(dist / (2.0 * t).sqrt())
        }
    };
    // Discrete detection misses excursions between grid points; to first
    // order that acts like a barrier moved away by 0.5826 sqrt(dt). The
    // per-bin band is 4 standard errors plus that allowance.
    let dt = horizon / cfg.steps_per_horizon as f64;
    let d_shifted = d + 0.5826 * dt.sqrt();
    let total = cdf(d, horizon);
    let total_shifted = cdf(d_shifted, horizon);
    for (i, &count) in counts.iter().enumerate() {
        let (lo, hi) = (i as f64 * width, (i as f64 + 1.0) * width);
        let p_i = (cdf(d, hi) - cdf(d, lo)) / total;
        let p_i_shifted = (cdf(d_shifted, hi) - cdf(d_shifted, lo)) / total_shifted;
        let got = count as f64 / n_crossed;
        let se = (p_i * (1.0 - p_i) / n_crossed).sqrt();
        let band = 4.0 * se + (p_i - p_i_shifted).abs();
        assert!(
            (got - p_i).abs() <= band,
            "bin {i}: fraction {got:.5} vs exact {p_i:.5} (band {band:.1e})"
        );
    }
}

#[test]
fn histogram_mode_matches_density_argmax() {
    // Benchmark configuration, 50 bins on [0, 5]: the histogram mode must
    // land within one bin of the series density's argmax.
    let table = CoefficientTable::build(1).unwrap();
    let scaled = ScaledProblem::new(0.1, 0.0, 2.0 / 3.0).unwrap();
    let process = McProcess::Ou {
        scaled: &scaled,
        order: 1,
        table: &table,
    };
    let horizon = 5.0;
    let bins = 50;
    let cfg = McConfig {
        n_paths: 100_000,
        steps_per_horizon: 2000,
        seed: 99,
        antithetic: false,
    };
    let (curve, fraction) = mc_fptd_histogram(&process, horizon, bins, &cfg).unwrap();
    assert!(fraction > 0.5);

    let mode_bin = curve
        .p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;

    // Density argmax on a fine grid.
    let h = scaled.weights(1, &table).unwrap();
    let argmax = (1..5000)
        .map(|i| i as f64 * horizon / 5000.0)
        .max_by(|&a, &b| {
            let pa = ou::density_with_weights(scaled.y0, &h, a).unwrap();
            let pb = ou::density_with_weights(scaled.y0, &h, b).unwrap();
            pa.partial_cmp(&pb).unwrap()
        })
        .unwrap();
    let width = horizon / bins as f64;
    let argmax_bin = ((argmax / width) as usize).min(bins - 1);
    assert!(
        mode_bin.abs_diff(argmax_bin) <= 1,
        "histogram mode bin {mode_bin} vs density argmax bin {argmax_bin} (argmax t = {argmax})"
    );
}
