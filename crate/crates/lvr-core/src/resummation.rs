//! Borel-LeRoy summation workbench: the order-q transform, Padé continuation
//! along the positive axis, the inversion integral and remainder-bound fits.
//!
//! For a series Σ a_n z^n obeying |R_n| ≤ σ^n (qn)! |z|^{n+1}, the transform
//! B(t) = Σ a_n t^n / (qn)! is analytic in a strip around ℝ₊ and the function
//! is reconstructed by F(z) = ∫_0^∞ B(z u^q) e^{-u} du (the s-variable form of
//! the inversion integral, smooth at the origin).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use crate::numerics::{integrate_decaying, polynomial_roots};
use crate::series::{rational_to_f64, PowerSeries};
use crate::{Error, Result};

/// Exact Borel-LeRoy transform of order q: coefficient-wise division by (qn)!.
pub fn borel_transform(
    series: &PowerSeries<BigRational>,
    q: usize,
) -> Result<PowerSeries<BigRational>> {
    if q < 1 {
        return Err(Error::InvalidParameter("q must be >= 1".into()));
    }
    let coeffs = series
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let mut fact = BigRational::from_integer(BigInt::from(1));
            for j in 1..=(q * n) {
                fact *= BigRational::from_integer(BigInt::from(j));
            }
            a / fact
        })
        .collect();
    Ok(PowerSeries::new(coeffs, &series.variable))
}

/// Rational [L/M] Padé approximant with its denominator roots.
#[derive(Debug, Clone)]
pub struct PadeApproximant {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub poles: Vec<Complex64>,
}

impl PadeApproximant {
    pub fn eval(&self, t: Complex64) -> Complex64 {
        let horner = |c: &[f64]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &ci in c.iter().rev() {
                acc = acc * t + Complex64::new(ci, 0.0);
            }
            acc
        };
        horner(&self.numerator) / horner(&self.denominator)
    }

    /// Poles within distance `margin` of the positive real axis.
    pub fn poles_near_positive_axis(&self, margin: f64) -> Vec<Complex64> {
        self.poles
            .iter()
            .copied()
            .filter(|z| {
                let dist = if z.re >= 0.0 { z.im.abs() } else { z.norm() };
                dist < margin
            })
            .collect()
    }
}

/// Near-diagonal Padé continuation of a transform from its Taylor
/// coefficients; L + M must not exceed the available order.
pub fn pade_continuation(
    transform: &PowerSeries<BigRational>,
    l: usize,
    m: usize,
) -> Result<PadeApproximant> {
    let c: Vec<f64> = transform.to_f64();
    if l + m + 1 > c.len() {
        return Err(Error::InvalidParameter(format!(
            "need {} coefficients for [{l}/{m}], have {}",
            l + m + 1,
            c.len()
        )));
    }
    // Denominator from the Toeplitz system Σ_j b_j c_{l+i-j} = -c_{l+i}, b_0 = 1.
    let mut b = vec![1.0f64];
    if m > 0 {
        let mut sys = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut rhs = nalgebra::DVector::<f64>::zeros(m);
        for i in 0..m {
            for j in 0..m {
                let idx = l as i64 + i as i64 - j as i64;
                sys[(i, j)] = if idx >= 0 { c[idx as usize] } else { 0.0 };
            }
            rhs[i] = -c[l + i + 1];
        }
        // note: row index i corresponds to matching order l+1+i
        for i in 0..m {
            for j in 0..m {
                let idx = l as i64 + 1 + i as i64 - (j as i64 + 1);
                sys[(i, j)] = if idx >= 0 { c[idx as usize] } else { 0.0 };
            }
        }
        let sol = sys
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("degenerate Padé denominator system".into()))?;
        b.extend(sol.iter());
    }
    // Numerator by convolution.
    let mut a = vec![0.0f64; l + 1];
    for (i, ai) in a.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..=i.min(m) {
            s += b[j] * c[i - j];
        }
        *ai = s;
    }
    let poles = if m > 0 {
        polynomial_roots(
            &b.iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect::<Vec<_>>(),
        )?
    } else {
        Vec::new()
    };
    Ok(PadeApproximant {
        numerator: a,
        denominator: b,
        poles,
    })
}

/// Continuation of the transform along ℝ₊: closed form or Padé.
pub enum Continuation<'a> {
    ClosedForm(&'a dyn Fn(Complex64) -> Complex64),
    Pade(&'a PadeApproximant),
}

impl Continuation<'_> {
    fn eval(&self, t: Complex64) -> Complex64 {
        match self {
            Continuation::ClosedForm(f) => f(t),
            Continuation::Pade(p) => p.eval(t),
        }
    }
}

/// A Borel-LeRoy summation bundle: the series, its order-q transform, a
/// continuation of the transform, and optional fitted domain/strip parameters
/// (R from the growth bound |B| ≤ B₀ e^{|t|/R}, σ from the remainder fit).
pub struct BorelSummation<'a> {
    pub q: usize,
    pub series: PowerSeries<BigRational>,
    pub transform: PowerSeries<BigRational>,
    pub continuation: Continuation<'a>,
    pub r: Option<f64>,
    pub sigma: Option<f64>,
}

impl<'a> BorelSummation<'a> {
    pub fn new(
        q: usize,
        series: PowerSeries<BigRational>,
        continuation: Continuation<'a>,
    ) -> Result<Self> {
        let transform = borel_transform(&series, q)?;
        Ok(BorelSummation {
            q,
            series,
            transform,
            continuation,
            r: None,
            sigma: None,
        })
    }

    pub fn with_fit(mut self, sigma: f64, r: f64) -> Self {
        self.sigma = Some(sigma);
        self.r = Some(r);
        self
    }

    /// Growth parameters (B₀, R) fitted on [0, T]: the smallest B₀ at a given
    /// R such that |B(t)| ≤ B₀ e^{t/R} along the sampled ray.
    pub fn fit_growth(&self, t_max: f64, r: f64) -> f64 {
        let mut b0: f64 = 0.0;
        for i in 0..=400 {
            let t = t_max * i as f64 / 400.0;
            let b = self.continuation.eval(Complex64::new(t, 0.0)).norm();
            b0 = b0.max(b * (-t / r).exp());
        }
        b0
    }
}

/// Reconstructed value with an error estimate (quadrature plus continuation
/// consistency at the origin).
#[derive(Debug, Clone, Copy)]
pub struct BorelValue {
    pub value: Complex64,
    pub error_estimate: f64,
}

/// Evaluates the inversion integral F(z) = ∫_0^∞ B(z u^q) e^{-u} du.
///
/// Signals non-summability evidence if the continuation has poles within
/// 1e-6 of the integration ray.
pub fn borel_sum(summation: &BorelSummation, z: Complex64) -> Result<BorelValue> {
    if let Continuation::Pade(p) = &summation.continuation {
        // poles on the ray {z u^q : u >= 0} obstruct the integral
        let ray_poles: Vec<Complex64> = p
            .poles
            .iter()
            .copied()
            .filter(|pole| {
                if z.norm() == 0.0 {
                    return false;
                }
                let w = pole / z;
                w.im.abs() < 1e-6 * (1.0 + w.re.abs()) && w.re > 0.0
            })
            .collect();
        if !ray_poles.is_empty() {
            return Err(Error::Singular(format!(
                "continuation pole on the integration ray: {:?}",
                ray_poles[0]
            )));
        }
    }
    let q = summation.q as i32;
    let value = integrate_decaying(
        |u| summation.continuation.eval(z * u.powi(q)) * (-u).exp(),
        1e-11,
    )?;
    // continuation residual proxy: transform Taylor polynomial vs continuation
    // near the origin
    let probe = 0.05 * z.norm().min(1.0);
    let taylor: Complex64 = summation
        .transform
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| {
            Complex64::new(rational_to_f64(c), 0.0) * Complex64::new(probe, 0.0).powu(n as u32)
        })
        .sum();
    let cont = summation.continuation.eval(Complex64::new(probe, 0.0));
    let error_estimate = 1e-10 + (taylor - cont).norm();
    Ok(BorelValue {
        value,
        error_estimate,
    })
}

/// One remainder-fit row: |R_n(λ)| against σ^n (qn)! |λ|^{n+1}.
#[derive(Debug, Clone, Copy)]
pub struct FitRow {
    pub order: usize,
    pub lambda: f64,
    pub remainder: f64,
    pub sigma_n: f64,
    /// bound slack at the fitted global σ (≥ 0 everywhere by construction)
    pub slack: f64,
}

#[derive(Debug, Clone)]
pub struct RemainderFit {
    pub q: usize,
    pub sigma: f64,
    pub rows: Vec<FitRow>,
}

/// Fits the smallest σ with |F(λ) - Σ_{m≤n} a_m λ^m| ≤ σ^n (qn)! |λ|^{n+1}
/// across the panel; failure rows are reported rather than erroring.
pub fn remainder_bound_fit(
    oracle: &dyn Fn(f64) -> Complex64,
    series: &PowerSeries<BigRational>,
    q: usize,
    lambdas: &[f64],
    n_max: usize,
) -> RemainderFit {
    let coeffs: Vec<f64> = series.to_f64();
    let n_max = n_max.min(coeffs.len().saturating_sub(1));
    let mut rows = Vec::new();
    let mut sigma = 0.0f64;
    for &lam in lambdas {
        let f = oracle(lam);
        for n in 0..=n_max {
            let partial: f64 = (0..=n).map(|m| coeffs[m] * lam.powi(m as i32)).sum();
            let remainder = (f - Complex64::new(partial, 0.0)).norm();
            let sigma_n = if n == 0 {
                f64::NAN
            } else {
                let fact: f64 = (1..=(q * n)).map(|j| j as f64).product();
                (remainder / (fact * lam.powi(n as i32 + 1))).powf(1.0 / n as f64)
            };
            if sigma_n.is_finite() {
                sigma = sigma.max(sigma_n);
            }
            rows.push(FitRow {
                order: n,
                lambda: lam,
                remainder,
                sigma_n,
                slack: 0.0,
            });
        }
    }
    for row in &mut rows {
        if row.order > 0 {
            let fact: f64 = (1..=(q * row.order)).map(|j| j as f64).product();
            row.slack = sigma.powi(row.order as i32) * fact * row.lambda.powi(row.order as i32 + 1)
                - row.remainder;
        }
    }
    RemainderFit { q, sigma, rows }
}

/// The (-1)^n (pn)!/n! toy series of the N = 1 partition function.
pub fn scalar_partition_series(p: usize, order: usize) -> PowerSeries<BigRational> {
    let mut coeffs = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut c = BigRational::from_integer(BigInt::from(1));
        for j in (n + 1)..=(p * n) {
            c *= BigRational::from_integer(BigInt::from(j));
        }
        if n % 2 == 1 {
            c = -c;
        }
        coeffs.push(c);
    }
    PowerSeries::new(coeffs, "lambda")
}
