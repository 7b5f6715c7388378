//! Cross-module consistency checks: the three computation routes against
//! each other, reproducibility under varying worker counts, and the
//! defining-identity panels.

use num_complex::Complex64;

use lvr_core::domains::{cardioid_samples, in_cardioid};
use lvr_core::maps::EnumLimits;
use lvr_core::model::{matrix_a, mc_partition, random_psd, sample_gaussian};
use lvr_core::perturbation::perturbative_series;
use lvr_core::series::rational_to_f64;
use lvr_core::weingarten::IntegerPartition;
use lvr_core::ModelParams;

/// Order-by-order Monte-Carlo agreement at (p=2, N=2, λ=0.1): the distance
/// |Z_mc - S_n| decreases through orders 0, 1, 2 and turns around afterwards
/// (asymptotic-series behaviour).
#[test]
fn order_by_order_mc_agreement() {
    let limits = EnumLimits::default();
    let series = perturbative_series(2, 0, 3, &limits).unwrap();
    let empty = IntegerPartition::new(vec![]).unwrap();
    let log_coeffs: Vec<f64> = series
        .coefficients_at(&empty, 2)
        .iter()
        .map(rational_to_f64)
        .collect();
    // exponentiate the log series
    let mut z = vec![0.0f64; 4];
    z[0] = 1.0;
    for n in 1..4 {
        let mut s = 0.0;
        for k in 1..=n {
            s += k as f64 * log_coeffs[k] * z[n - k];
        }
        z[n] = s / n as f64;
    }
    let lam = 0.1f64;
    let params = ModelParams::new(2, 2, Complex64::new(lam, 0.0)).unwrap();
    let est = mc_partition(&params, 99, 1_000_000).unwrap();
    let err = |order: usize| {
        let partial: f64 = (0..=order).map(|m| z[m] * lam.powi(m as i32)).sum();
        (est.estimate.value - Complex64::new(partial, 0.0)).norm()
    };
    assert!(est.estimate.std_error < 1e-3);
    assert!(err(0) > err(1), "order 0 -> 1: {} vs {}", err(0), err(1));
    assert!(err(1) > err(2), "order 1 -> 2: {} vs {}", err(1), err(2));
    assert!(
        err(3) > err(2),
        "turnaround expected: {} vs {}",
        err(3),
        err(2)
    );
}

/// Bit-for-bit reproducibility of Monte-Carlo paths under different worker
/// counts (counter-based streams, order-independent merge).
#[test]
fn mc_reproducible_across_worker_counts() {
    let params = ModelParams::new(2, 2, Complex64::new(0.1, 0.0)).unwrap();
    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = pool1.install(|| mc_partition(&params, 7, 100_000).unwrap());
    let b = pool4.install(|| mc_partition(&params, 7, 100_000).unwrap());
    assert_eq!(a.estimate.value, b.estimate.value);
    assert_eq!(a.estimate.std_error, b.estimate.std_error);
    assert_eq!(a.ess, b.ess);
}

/// Defining-equation panel: ‖X - A - λ A^p‖ < 1e-9 across 100 random PSD
/// draws with λ sampled in the stable half of the cardioid, p ∈ {2, 3}.
#[test]
fn matrix_a_residual_panel() {
    let mut draws = 0u64;
    'outer: for p in [2usize, 3] {
        for (i, lam) in cardioid_samples(p, 140).into_iter().enumerate() {
            if lam.re <= 0.0 {
                continue;
            }
            assert!(in_cardioid(p, lam));
            let n = 2 + (i % 2);
            let x = random_psd(n, 0.6, 7000 + draws);
            let a = matrix_a(p, lam, &x).unwrap();
            let mut apow = a.clone();
            for _ in 1..p {
                apow = &apow * &a;
            }
            let residual = (&x - &a - apow * lam).norm();
            assert!(
                residual < 1e-9 * (1.0 + x.norm()),
                "p={p} λ={lam}: residual {residual:.2e}"
            );
            draws += 1;
            if draws >= 100 {
                break 'outer;
            }
        }
    }
    assert!(draws >= 100, "panel too small: {draws}");
}

/// k = 2 convention check against Monte Carlo: with all indices equal, every
/// delta pattern fires, so the full cumulant K²_{0000,0000} equals the plain
/// diagram sum Σ (-1)^v N^χ / v! (no pattern division). The MC estimate at
/// (p=2, N=2, λ=0.05) must agree within 3σ plus the exact next-order term.
#[test]
fn k2_mc_agrees_with_diagram_sum() {
    use lvr_core::model::mc_cumulant;
    let limits = EnumLimits::default();
    let series = perturbative_series(2, 2, 3, &limits).unwrap();
    let total_at = |order: usize| -> f64 {
        series.orders[order]
            .by_pi
            .values()
            .map(|poly| poly.eval_f64(2.0))
            .sum()
    };
    let lam = 0.05f64;
    let prediction: f64 = (0..=2).map(|v| total_at(v) * lam.powi(v as i32)).sum();
    let next_term = total_at(3).abs() * lam.powi(3);
    let params = ModelParams::new(2, 2, Complex64::new(lam, 0.0)).unwrap();
    let pattern = vec![(0, 0, 0, 0), (0, 0, 0, 0)];
    let est = mc_cumulant(&params, &pattern, 53, 2_000_000).unwrap();
    let gap = (est.value - Complex64::new(prediction, 0.0)).norm();
    let tol = 3.0 * est.std_error + 1.5 * next_term;
    assert!(
        gap < tol,
        "K² MC {} vs diagram prediction {prediction} (gap {gap:.3e}, tol {tol:.3e})",
        est.value
    );
}

/// Tr X_l = Tr X_r on every sampled M (the two one-sided products share
/// their trace exactly).
#[test]
fn left_right_traces_agree() {
    for seed in 0..20u64 {
        let m = sample_gaussian(3, 1.0, 500 + seed);
        let xl = (&m * m.adjoint()).trace();
        let xr = (m.adjoint() * &m).trace();
        assert!((xl - xr).norm() < 1e-12 * (1.0 + xl.norm()));
    }
}
