//! Shared numerical kernels: adaptive Gauss-Kronrod quadrature, Gauss-Legendre
//! rules, complex polynomial roots and a couple of special functions.

use num_complex::Complex64;

use crate::{Error, Result};

// 15-point Kronrod nodes/weights on [-1, 1] with the embedded 7-point Gauss
// rule, symmetric half listed.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let v = f(c);
            kronrod += wk * v;
            gauss += WG[3] * v;
        } else {
            let v1 = f(c - h * x);
            let v2 = f(c + h * x);
            kronrod += wk * (v1 + v2);
            if i % 2 == 1 {
                gauss += WG[i / 2] * (v1 + v2);
            }
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

/// Adaptive Gauss-Kronrod integration of a complex-valued integrand on [a, b].
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    // Interval bisection driven by the embedded error estimate.
    let mut stack = vec![(a, b, tol)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut depth_guard = 0usize;
    while let Some((lo, hi, eps)) = stack.pop() {
        depth_guard += 1;
        if depth_guard > 200_000 {
            return Err(Error::Quadrature("subdivision limit exceeded".into()));
        }
        let (val, err) = gk15(&f, lo, hi);
        if err <= eps || (hi - lo) < 1e-14 * (b - a).abs() {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * eps));
            stack.push((mid, hi, 0.5 * eps));
        }
    }
    Ok(total)
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate(|t| Complex64::new(f(t), 0.0), a, b, tol).map(|v| v.re)
}

/// Integration over [0, ∞) of an exponentially decaying integrand.
///
/// Windows of geometrically growing length are added until their contribution
/// falls below the tolerance relative to the accumulated value.
pub fn integrate_decaying<F: Fn(f64) -> Complex64>(f: F, tol: f64) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut lo = 0.0f64;
    let mut len = 4.0f64;
    for window in 0..64 {
        let hi = lo + len;
        let part = integrate(&f, lo, hi, tol * 0.25)?;
        total += part;
        if window > 2 && part.norm() < tol * (1.0 + total.norm()) {
            return Ok(total);
        }
        lo = hi;
        len *= 1.5;
    }
    Err(Error::Quadrature(
        "integrand did not decay within the window budget".into(),
    ))
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    // Newton iteration on P_n with the usual Chebyshev-like initial guess.
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0f64, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// All roots of a complex polynomial Σ c_i z^i by the Aberth-Ehrlich method.
///
/// Leading zero coefficients are trimmed; the polynomial must have degree ≥ 1
/// after trimming.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while let Some(last) = c.last() {
        if last.norm() < 1e-300 && c.len() > 1 {
            c.pop();
        } else {
            break;
        }
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Err(Error::Singular("polynomial has degree 0".into()));
    }
    let lead = c[deg];
    let radius = 1.0
        + c[..deg]
            .iter()
            .map(|a| (a / lead).norm())
            .fold(0.0f64, f64::max);
    // Staggered starting ring to break symmetry.
    let mut z: Vec<Complex64> = (0..deg)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.35) / deg as f64 + 0.4;
            radius * 0.8 * Complex64::new(th.cos(), th.sin())
        })
        .collect();
    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &ci in c.iter().rev() {
            dp = dp * x + p;
            p = p * x + ci;
        }
        (p, dp)
    };
    for _ in 0..200 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() < 1e-300 {
                continue;
            }
            let newton = p / dp;
            let mut repulse = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    repulse += (z[i] - z[j]).finv();
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulse;
            let step = newton / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-13 * (1.0 + radius) {
            return Ok(z);
        }
    }
    Err(Error::NonConvergence("Aberth iteration stalled".into()))
}

/// Modified Bessel function I_0 by its power series (adequate for |x| ≲ 30).
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for m in 1..200 {
        term *= q / ((m * m) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_gaussian_moment() {
        let v = integrate_real(|t| (-t).exp(), 0.0, 60.0, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
        let m = integrate_decaying(|t| Complex64::new(t * t * (-t).exp(), 0.0), 1e-12).unwrap();
        assert_relative_eq!(m.re, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre_01(8);
        let val: f64 = rule.iter().map(|&(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(val, 1.0 / 11.0, epsilon = 1e-13);
    }

    #[test]
    fn roots_of_quadratic() {
        // (z-1)(z+2) = z^2 + z - 2
        let roots = polynomial_roots(&[
            Complex64::new(-2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let mut res: Vec<f64> = roots.iter().map(|r| r.re).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(res[0], -2.0, epsilon = 1e-10);
        assert_relative_eq!(res[1], 1.0, epsilon = 1e-10);
        assert!(roots.iter().all(|r| r.im.abs() < 1e-10));
    }

    #[test]
    fn bessel_series_matches_reference() {
        // I_0(1) and I_0(4), reference values from the standard tables.
        assert_relative_eq!(bessel_i0(1.0), 1.2660658777520084, epsilon = 1e-12);
        assert_relative_eq!(bessel_i0(4.0), 11.301921952136330, epsilon = 1e-10);
    }
}
