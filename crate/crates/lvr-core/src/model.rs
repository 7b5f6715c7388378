//! Ground-truth oracles for the matrix model: Gaussian sampling, quadrature
//! and Monte-Carlo evaluation of Z(λ, N) and the cumulants, the matrix
//! function A(λ, X), the tensor operator Σ and its resolvent.
//!
//! Conventions. The model is written in the rescaled variables where the
//! Gaussian measure has covariance ⟨M_ab M̄_cd⟩ = δ_ac δ_bd / N, the
//! interaction is λ N Tr (MM†)^p and the sources are √N Tr(JM†) + √N Tr(MJ†).
//! At N = 1 this reduces to Z(λ, 1) = ∫_0^∞ e^{-t - λ t^p} dt.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::numerics::{bessel_i0, integrate_decaying};
use crate::series::scalar_a;
use crate::{Error, ModelParams, Result};

/// Monte-Carlo estimate with its standard error; reproducible given the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: Complex64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Partition-function estimate plus the effective sample size of the
/// importance weights (collapse indicator for strongly complex weights).
#[derive(Debug, Clone, Copy)]
pub struct PartitionEstimate {
    pub estimate: McEstimate,
    pub ess: f64,
}

// Fixed word budget per sample so that counter-based streams never overlap
// regardless of the worker count.
const WORDS_PER_SAMPLE: u128 = 1024;

/// Fixed-consumption standard-normal pair (Box-Muller; 2 u64 draws).
fn normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

fn fill_gaussian(m: &mut DMatrix<Complex64>, scale: f64, rng: &mut impl Rng) {
    let s = (0.5 * scale).sqrt();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let (re, im) = normal_pair(rng);
            m[(i, j)] = Complex64::new(s * re, s * im);
        }
    }
}

/// i.i.d. complex Gaussian matrix with per-entry variance `covariance_scale`
/// (1/N for the model measure dμ).
pub fn sample_gaussian(n: usize, covariance_scale: f64, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    fill_gaussian(&mut m, covariance_scale, &mut rng);
    m
}

fn sample_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_word_pos(index as u128 * WORDS_PER_SAMPLE);
    rng
}

fn hermitian_deviation(x: &DMatrix<Complex64>) -> f64 {
    (x - x.adjoint()).norm()
}

/// Tr X^p for X = M M†.
fn tr_xp(m: &DMatrix<Complex64>, p: usize) -> Complex64 {
    let x = m * m.adjoint();
    let mut pow = x.clone();
    for _ in 1..p {
        pow = &pow * &x;
    }
    pow.trace()
}

/// Deterministic pairwise reduction of per-chunk partial sums.
fn pairwise_sum(mut v: Vec<Complex64>) -> Complex64 {
    if v.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] })
            .collect();
    }
    v[0]
}

/// N = 1 partition function by adaptive quadrature:
/// Z(λ, 1) = ∫_0^∞ e^{-t - λ t^p} dt, relative tolerance 1e-10.
pub fn z_quadrature_n1(p: usize, lambda: Complex64) -> Result<Complex64> {
    if p < 2 {
        return Err(Error::InvalidParameter("p must be >= 2".into()));
    }
    if lambda.re < 0.0 {
        return Err(Error::InvalidParameter(
            "quadrature needs Re lambda >= 0".into(),
        ));
    }
    integrate_decaying(
        |t| {
            let tc = Complex64::new(t, 0.0);
            (-tc - lambda * tc.powu(p as u32)).exp()
        },
        1e-11,
    )
}

/// N = 1 connected 2-point function ⟨t⟩ = ∫ t e^{-t-λt^p} / Z(λ,1):
/// the k = 1 scalar cumulant at N = 1.
pub fn cumulant_k1_quadrature_n1(p: usize, lambda: Complex64) -> Result<Complex64> {
    let den = z_quadrature_n1(p, lambda)?;
    let num = integrate_decaying(
        |t| {
            let tc = Complex64::new(t, 0.0);
            tc * (-tc - lambda * tc.powu(p as u32)).exp()
        },
        1e-11,
    )?;
    Ok(num / den)
}

/// Report of a two-route verification (lhs vs rhs and their gap).
#[derive(Debug, Clone, Copy)]
pub struct VerifyReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub diff: f64,
}

/// Verifies the N = 1 loop-vertex change of variables:
/// ∫ e^{-t-λt^p} dt = ∫ e^{-t} / (1 + pλ a(λ,t)^{p-1}) dt.
pub fn verify_prop1_n1(p: usize, lambda: Complex64) -> Result<VerifyReport> {
    let lhs = z_quadrature_n1(p, lambda)?;
    let rhs = integrate_decaying(
        |t| {
            let a = scalar_a(p, lambda, Complex64::new(t, 0.0)).expect("in-domain");
            let jac = Complex64::new(1.0, 0.0) + (p as f64) * lambda * a.powu(p as u32 - 1);
            Complex64::new((-t).exp(), 0.0) / jac
        },
        1e-11,
    )?;
    Ok(VerifyReport {
        lhs,
        rhs,
        diff: (lhs - rhs).norm(),
    })
}

/// A(λ, X) = X T_p(-λ X^{p-1}) for Hermitian PSD X, via eigendecomposition.
///
/// The result satisfies X = A + λ A^p; the residual is checked to 1e-9.
pub fn matrix_a(p: usize, lambda: Complex64, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if hermitian_deviation(x) > 1e-10 * (1.0 + x.norm()) {
        return Err(Error::InvalidParameter("X must be Hermitian".into()));
    }
    let eig = x.clone().symmetric_eigen();
    let n = x.nrows();
    let mut diag = DVector::from_element(n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        let xi = eig.eigenvalues[i];
        if xi < -1e-9 {
            return Err(Error::InvalidParameter(format!(
                "X must be PSD; eigenvalue {xi}"
            )));
        }
        diag[i] = scalar_a(p, lambda, Complex64::new(xi.max(0.0), 0.0))?;
    }
    let u = &eig.eigenvectors;
    let a = u * DMatrix::from_diagonal(&diag) * u.adjoint();
    let mut apow = a.clone();
    for _ in 1..p {
        apow = &apow * &a;
    }
    let residual = (x - &a - apow * lambda).norm();
    if residual > 1e-9 * (1.0 + x.norm()) {
        return Err(Error::NonConvergence(format!(
            "A + λA^p residual {residual:.2e}"
        )));
    }
    Ok(a)
}

/// Finite keyhole contour around a segment of the positive real axis:
/// a small arc of radius `r` around the origin, two rays at angles ±ψ and a
/// closing arc of radius `big_r`.
#[derive(Debug, Clone, Copy)]
pub struct KeyholeContour {
    pub r: f64,
    pub big_r: f64,
    pub psi: f64,
}

impl KeyholeContour {
    /// A contour adapted to the spectrum of X (margin on every side).
    pub fn for_spectrum(max_eig: f64) -> KeyholeContour {
        KeyholeContour {
            r: 0.15,
            big_r: (max_eig + 1.0) * 1.25,
            psi: 0.5,
        }
    }

    fn min_distance_to_real_segment(&self, x: f64) -> f64 {
        // Distance from a real spectral point x >= 0 to the contour pieces:
        // the rays at angles ±ψ (only where they run), the near cap of
        // radius r and the far cap of radius R.
        let to_rays = if x * self.psi.cos() >= self.r {
            x * self.psi.sin()
        } else {
            f64::INFINITY
        };
        let to_near = (x - self.r).abs();
        let to_far = self.big_r - x;
        to_rays.min(to_near).min(to_far)
    }

    fn encloses(&self, x: f64) -> bool {
        x > -0.5 * self.r && x < self.big_r * self.psi.cos()
    }
}

/// A(λ, X) by numeric Cauchy-contour quadrature of
/// (2πi)^{-1} ∮ a(λ, u) (u - X)^{-1} du over a keyhole contour.
///
/// Independent of the eigendecomposition route: the resolvent is obtained by
/// LU solves along the contour.
pub fn matrix_a_via_contour(
    p: usize,
    lambda: Complex64,
    x: &DMatrix<Complex64>,
    contour: &KeyholeContour,
) -> Result<DMatrix<Complex64>> {
    if hermitian_deviation(x) > 1e-10 * (1.0 + x.norm()) {
        return Err(Error::InvalidParameter("X must be Hermitian".into()));
    }
    let eigs = x.clone().symmetric_eigen().eigenvalues;
    for &xi in eigs.iter() {
        if !contour.encloses(xi) {
            return Err(Error::Contour(format!(
                "eigenvalue {xi} is not enclosed by the keyhole"
            )));
        }
        if contour.min_distance_to_real_segment(xi.max(0.0)) < 5e-3 {
            return Err(Error::Contour(format!(
                "eigenvalue {xi} too close to the contour"
            )));
        }
    }
    let n = x.nrows();
    let ident = DMatrix::<Complex64>::identity(n, n);
    let resolvent_term = |u: Complex64, du: Complex64| -> Result<DMatrix<Complex64>> {
        let a_u = scalar_a(p, lambda, u)?;
        let lu = (&ident * u - x).clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Contour("resolvent is singular on the contour".into()))?;
        Ok(inv * (a_u * du))
    };
    // Piecewise Gauss-Legendre, refined until stable.
    let psi = contour.psi;
    let integrate_piece = |nodes: &[(f64, f64)],
                           param: &dyn Fn(f64) -> (Complex64, Complex64)|
     -> Result<DMatrix<Complex64>> {
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for &(s, w) in nodes {
            let (u, du) = param(s);
            acc += resolvent_term(u, du)? * Complex64::new(w, 0.0);
        }
        Ok(acc)
    };
    let mut previous: Option<DMatrix<Complex64>> = None;
    for order in [24usize, 48, 96, 192] {
        let nodes = crate::numerics::gauss_legendre_01(order);
        // Near cap: angle from ψ to 2π-ψ at radius r (counterclockwise around 0).
        let near = integrate_piece(&nodes, &|s| {
            let th = psi + (2.0 * std::f64::consts::PI - 2.0 * psi) * s;
            let u = Complex64::from_polar(contour.r, th);
            let du = Complex64::new(0.0, 1.0) * u * (2.0 * std::f64::consts::PI - 2.0 * psi);
            (u, du)
        })?;
        // Lower ray: radius r -> R at angle -ψ.
        let lower = integrate_piece(&nodes, &|s| {
            let rad = contour.r + (contour.big_r - contour.r) * s;
            let dir = Complex64::from_polar(1.0, -psi);
            (dir * rad, dir * (contour.big_r - contour.r))
        })?;
        // Far cap: angle -ψ -> ψ at radius R.
        let far = integrate_piece(&nodes, &|s| {
            let th = -psi + 2.0 * psi * s;
            let u = Complex64::from_polar(contour.big_r, th);
            let du = Complex64::new(0.0, 1.0) * u * (2.0 * psi);
            (u, du)
        })?;
        // Upper ray: radius R -> r at angle ψ.
        let upper = integrate_piece(&nodes, &|s| {
            let rad = contour.big_r + (contour.r - contour.big_r) * s;
            let dir = Complex64::from_polar(1.0, psi);
            (dir * rad, dir * (contour.r - contour.big_r))
        })?;
        let total = (near + lower + far + upper) / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        if let Some(prev) = &previous {
            if (&total - prev).norm() < 1e-9 * (1.0 + total.norm()) {
                return Ok(total);
            }
        }
        previous = Some(total);
    }
    previous.ok_or_else(|| Error::Quadrature("contour refinement failed".into()))
}

/// Dense linear map on the N²-dimensional tensor space (matrices on C^N),
/// stored in the column-stacking convention vec(A K B) = (Bᵀ ⊗ A) vec(K).
#[derive(Debug, Clone)]
pub struct SuperOperator {
    pub n: usize,
    pub mat: DMatrix<Complex64>,
}

impl SuperOperator {
    pub fn identity(n: usize) -> Self {
        SuperOperator {
            n,
            mat: DMatrix::identity(n * n, n * n),
        }
    }

    pub fn zero(n: usize) -> Self {
        SuperOperator {
            n,
            mat: DMatrix::zeros(n * n, n * n),
        }
    }

    /// Map K ↦ A K B as a dense superoperator.
    pub fn sandwich(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Self {
        let n = a.nrows();
        let bt = b.transpose();
        SuperOperator {
            n,
            mat: kron(&bt, a),
        }
    }

    pub fn apply(&self, k: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let v = DVector::from_column_slice(k.as_slice());
        let w = &self.mat * v;
        DMatrix::from_column_slice(self.n, self.n, w.as_slice())
    }

    pub fn add(&self, other: &SuperOperator) -> SuperOperator {
        SuperOperator {
            n: self.n,
            mat: &self.mat + &other.mat,
        }
    }

    pub fn scale(&self, c: Complex64) -> SuperOperator {
        SuperOperator {
            n: self.n,
            mat: &self.mat * c,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// Solves `(1 + self)[K] = H`.
    pub fn resolvent_apply(&self, h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let dim = self.n * self.n;
        let sys = DMatrix::<Complex64>::identity(dim, dim) + &self.mat;
        let v = DVector::from_column_slice(h.as_slice());
        let sol = sys
            .lu()
            .solve(&v)
            .ok_or_else(|| Error::Singular("1 + Σ is singular".into()))?;
        Ok(DMatrix::from_column_slice(self.n, self.n, sol.as_slice()))
    }
}

/// Kronecker product (standard block convention).
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Σ(λ; X_l, X_r) = λ Σ_{k=0}^{p-1} A^k(X_l) ⊗ A^{p-1-k}(X_r), acting on
/// matrices as K ↦ λ Σ_k A^k(X_l) K A^{p-1-k}(X_r).
pub fn sigma_operator(
    p: usize,
    lambda: Complex64,
    x_left: &DMatrix<Complex64>,
    x_right: &DMatrix<Complex64>,
) -> Result<SuperOperator> {
    let n = x_left.nrows();
    let a_l = matrix_a(p, lambda, x_left)?;
    let a_r = matrix_a(p, lambda, x_right)?;
    let mut pow_l: Vec<DMatrix<Complex64>> = vec![DMatrix::identity(n, n)];
    let mut pow_r: Vec<DMatrix<Complex64>> = vec![DMatrix::identity(n, n)];
    for k in 1..p {
        pow_l.push(&pow_l[k - 1] * &a_l);
        pow_r.push(&pow_r[k - 1] * &a_r);
    }
    let mut sigma = SuperOperator::zero(n);
    for k in 0..p {
        sigma = sigma.add(&SuperOperator::sandwich(&pow_l[k], &pow_r[p - 1 - k]));
    }
    Ok(sigma.scale(lambda))
}

/// Loop vertex action S = -Tr_⊗ log(1 + Σ), with the branch fixed by
/// continuity from Σ = 0 (phase-tracked log-determinant).
///
/// Fails if 1 + tΣ becomes singular along t ∈ [0, 1], i.e. the spectrum of
/// 1 + Σ reaches across the negative real axis.
pub fn loop_vertex_action(sigma: &SuperOperator) -> Result<Complex64> {
    let dim = sigma.n * sigma.n;
    let steps = 24usize;
    let mut phase = 0.0f64;
    let mut last_arg = 0.0f64;
    let mut last_logabs = 0.0f64;
    for j in 1..=steps {
        let t = j as f64 / steps as f64;
        let m = DMatrix::<Complex64>::identity(dim, dim) + &sigma.mat * Complex64::new(t, 0.0);
        let det = m.lu().determinant();
        if det.norm() < 1e-250 {
            return Err(Error::Singular(
                "1 + tΣ singular: spectrum touches the negative axis".into(),
            ));
        }
        let arg = det.arg();
        let mut delta = arg - last_arg;
        while delta > std::f64::consts::PI {
            delta -= 2.0 * std::f64::consts::PI;
        }
        while delta < -std::f64::consts::PI {
            delta += 2.0 * std::f64::consts::PI;
        }
        phase += delta;
        last_arg = arg;
        last_logabs = det.norm().ln();
    }
    Ok(-Complex64::new(last_logabs, phase))
}

/// Loop vertex action from the spectrum of X = MM† (equal to that of M†M):
/// the commuting tensor factors give
/// S = -Σ_{ij} ln(1 + λ Σ_{k=0}^{p-1} a_i^k a_j^{p-1-k}), a_i = a(λ, x_i),
/// with the principal logarithm per factor (the continuous branch from λ = 0,
/// since a factor cannot wind around 0 without crossing the negative axis).
pub fn loop_vertex_action_from_x_eigs(
    p: usize,
    lambda: Complex64,
    x_eigs: &[f64],
) -> Result<Complex64> {
    let a: Vec<Complex64> = x_eigs
        .iter()
        .map(|&x| scalar_a(p, lambda, Complex64::new(x.max(0.0), 0.0)))
        .collect::<Result<_>>()?;
    let mut action = Complex64::new(0.0, 0.0);
    for ai in &a {
        for aj in &a {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..p {
                s += ai.powu(k as u32) * aj.powu((p - 1 - k) as u32);
            }
            let factor = Complex64::new(1.0, 0.0) + lambda * s;
            if factor.re <= 0.0 && factor.im.abs() < 1e-14 {
                return Err(Error::Singular(
                    "loop vertex factor on the negative axis".into(),
                ));
            }
            action -= factor.ln();
        }
    }
    Ok(action)
}

/// Finite-difference check of ∂A/∂X = [1 + Σ(λ, X)]^{-1}:
/// returns the norm of `(A(X+εH) - A(X-εH))/(2ε) - [1+Σ]^{-1}[H]`.
pub fn resolvent_derivative_check(
    p: usize,
    lambda: Complex64,
    x: &DMatrix<Complex64>,
    h: &DMatrix<Complex64>,
) -> Result<f64> {
    let eps = 1e-5;
    let a_plus = matrix_a(p, lambda, &(x + h * Complex64::new(eps, 0.0)))?;
    let a_minus = matrix_a(p, lambda, &(x - h * Complex64::new(eps, 0.0)))?;
    let fd = (a_plus - a_minus) / Complex64::new(2.0 * eps, 0.0);
    let sigma = sigma_operator(p, lambda, x, x)?;
    let op = sigma.resolvent_apply(h)?;
    Ok((fd - op).norm())
}

/// Monte-Carlo estimate of Z(λ, N) = ⟨exp(-λ N Tr X^p)⟩ under the normalized
/// Gaussian with covariance 1/N (importance reweighting for complex λ).
pub fn mc_partition(params: &ModelParams, seed: u64, samples: u64) -> Result<PartitionEstimate> {
    params.require_stable()?;
    let (p, n, lambda) = (params.p, params.n, params.lambda);
    let chunk = 16_384u64;
    let chunks: Vec<u64> = (0..samples.div_ceil(chunk)).collect();
    let partials: Vec<(Complex64, f64, f64, f64)> = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(samples);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sumsq = 0.0f64;
            let mut abs_sum = 0.0f64;
            let mut abs_sq = 0.0f64;
            let mut m = DMatrix::zeros(n, n);
            for i in lo..hi {
                let mut rng = sample_rng(seed, i);
                fill_gaussian(&mut m, 1.0 / n as f64, &mut rng);
                let w = (-lambda * n as f64 * tr_xp(&m, p)).exp();
                sum += w;
                sumsq += w.norm_sqr();
                abs_sum += w.norm();
                abs_sq += w.norm_sqr();
            }
            (sum, sumsq, abs_sum, abs_sq)
        })
        .collect();
    let total = pairwise_sum(partials.iter().map(|t| t.0).collect());
    let sumsq: f64 = partials.iter().map(|t| t.1).sum();
    let abs_sum: f64 = partials.iter().map(|t| t.2).sum();
    let abs_sq: f64 = partials.iter().map(|t| t.3).sum();
    let mean = total / samples as f64;
    let var = (sumsq / samples as f64 - mean.norm_sqr()).max(0.0);
    let ess = if abs_sq > 0.0 {
        abs_sum * abs_sum / abs_sq
    } else {
        0.0
    };
    Ok(PartitionEstimate {
        estimate: McEstimate {
            value: mean,
            std_error: (var / samples as f64).sqrt(),
            samples,
            seed,
        },
        ess,
    })
}

/// Index pattern of one source pair: K^k carries entries (a_j, b_j, c_j, d_j)
/// for M_{a_j b_j} and conj(M_{c_j d_j}).
pub type CumulantPattern = Vec<(usize, usize, usize, usize)>;

/// Scalar cumulant of order 2k via connected correlators of matrix entries:
/// K^1 = N cov(M_ab, M̄_cd), K^2 = N² κ₄(...), assembled by moment-cumulant
/// relations on reweighted samples (no numeric J-differentiation).
///
/// Errors are estimated by batch means (64 batches), which is honest for the
/// ratio estimators involved.
pub fn mc_cumulant(
    params: &ModelParams,
    pattern: &CumulantPattern,
    seed: u64,
    samples: u64,
) -> Result<McEstimate> {
    params.require_stable()?;
    let k = pattern.len();
    if k == 0 || k > 2 {
        return Err(Error::InvalidParameter("k must be 1 or 2".into()));
    }
    let n = params.n;
    for &(a, b, c, d) in pattern {
        if a >= n || b >= n || c >= n || d >= n {
            return Err(Error::InvalidParameter("index out of range".into()));
        }
    }
    let batches = 64u64;
    let per_batch = samples / batches;
    if per_batch == 0 {
        return Err(Error::InvalidParameter("need at least 64 samples".into()));
    }
    let (p, lambda) = (params.p, params.lambda);
    let batch_values: Vec<Complex64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut m = DMatrix::zeros(n, n);
            // Weighted raw moments over every subset of the 2k legs.
            let nlegs = 2 * k;
            let mut mom = vec![Complex64::new(0.0, 0.0); 1 << nlegs];
            let mut wsum = Complex64::new(0.0, 0.0);
            for i in 0..per_batch {
                let idx = b * per_batch + i;
                let mut rng = sample_rng(seed, idx);
                fill_gaussian(&mut m, 1.0 / n as f64, &mut rng);
                let w = (-lambda * n as f64 * tr_xp(&m, p)).exp();
                wsum += w;
                let legs: Vec<Complex64> = pattern
                    .iter()
                    .flat_map(|&(a, bb, c, d)| [m[(a, bb)], m[(c, d)].conj()])
                    .collect();
                for mask in 0..(1usize << nlegs) {
                    let mut v = w;
                    for (l, leg) in legs.iter().enumerate() {
                        if mask & (1 << l) != 0 {
                            v *= leg;
                        }
                    }
                    mom[mask] += v;
                }
            }
            let mu = |mask: usize| mom[mask] / wsum;
            let full = (1usize << nlegs) - 1;
            let kappa = joint_cumulant(&mu, full);
            kappa * (n as f64).powi(k as i32)
        })
        .collect();
    let mean = pairwise_sum(batch_values.clone()) / batches as f64;
    let var = batch_values
        .iter()
        .map(|v| (v - mean).norm_sqr())
        .sum::<f64>()
        / (batches as f64 - 1.0);
    Ok(McEstimate {
        value: mean,
        std_error: (var / batches as f64).sqrt(),
        samples: per_batch * batches,
        seed,
    })
}

/// Joint cumulant of the legs in `mask` from subset moments, by the
/// Möbius formula over set partitions.
fn joint_cumulant(mu: &dyn Fn(usize) -> Complex64, mask: usize) -> Complex64 {
    // κ(S) = Σ over partitions of S: (-1)^{r-1} (r-1)! Π μ(block)
    fn partitions(mask: usize) -> Vec<Vec<usize>> {
        if mask == 0 {
            return vec![vec![]];
        }
        let first = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << first);
        let mut out = Vec::new();
        // Iterate over subsets of `rest` joining `first`.
        let mut sub = rest;
        loop {
            let block = (1 << first) | sub;
            for mut tail in partitions(rest & !sub) {
                let mut p = vec![block];
                p.append(&mut tail);
                out.push(p);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        out
    }
    let mut total = Complex64::new(0.0, 0.0);
    for part in partitions(mask) {
        let r = part.len();
        let mut term = Complex64::new(1.0, 0.0);
        for &block in &part {
            term *= mu(block);
        }
        let sign = if (r - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let fact: f64 = (1..r).map(|j| j as f64).product();
        total += term * sign * fact;
    }
    total
}

/// Verifies the sourced change of variables at N = 1: the direct source
/// integral against the transformed representation with the p-ary tree
/// generating function in the source term. Angular integration is carried out
/// analytically (Bessel I₀), leaving two radial quadratures.
pub fn verify_source_change_of_variables(
    p: usize,
    lambda: Complex64,
    j_modulus: f64,
) -> Result<VerifyReport> {
    if lambda.re < 0.0 {
        return Err(Error::InvalidParameter("need Re lambda >= 0".into()));
    }
    // lhs: ∫ e^{-t-λt^p} I0(2|J|√t) dt / Z
    let den_l = z_quadrature_n1(p, lambda)?;
    let num_l = integrate_decaying(
        |t| {
            let tc = Complex64::new(t, 0.0);
            (-tc - lambda * tc.powu(p as u32)).exp() * bessel_i0(2.0 * j_modulus * t.sqrt())
        },
        1e-11,
    )?;
    let lhs = num_l / den_l;
    // rhs: ∫ e^{-t} (1 + pλ a^{p-1})^{-1} I0(2|J|√a(λ,t)) dt, same normalization.
    let weighted = |f: &dyn Fn(Complex64) -> Complex64| -> Result<Complex64> {
        integrate_decaying(
            |t| {
                let a = scalar_a(p, lambda, Complex64::new(t, 0.0)).expect("in-domain");
                let jac = Complex64::new(1.0, 0.0) + (p as f64) * lambda * a.powu(p as u32 - 1);
                Complex64::new((-t).exp(), 0.0) / jac * f(a)
            },
            1e-11,
        )
    };
    let num_r = weighted(&|a| Complex64::new(bessel_i0(2.0 * j_modulus * a.norm().sqrt()), 0.0))?;
    let den_r = weighted(&|_| Complex64::new(1.0, 0.0))?;
    let rhs = num_r / den_r;
    Ok(VerifyReport {
        lhs,
        rhs,
        diff: (lhs - rhs).norm(),
    })
}

/// Deterministic random Hermitian PSD matrix (test/driver helper).
pub fn random_psd(n: usize, scale: f64, seed: u64) -> DMatrix<Complex64> {
    let g = sample_gaussian(n, scale, seed);
    &g * g.adjoint()
}

/// Deterministic random Hermitian matrix (test/driver helper).
pub fn random_hermitian(n: usize, scale: f64, seed: u64) -> DMatrix<Complex64> {
    let g = sample_gaussian(n, scale, seed);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}
