//! The perturbative engine: coefficients of log Z and of the scalar cumulants
//! as exact sums over ciliated Wick diagrams with weight (-λ)^v N^χ / v!,
//! tree-amplitude Monte Carlo and remainder assembly.
//!
//! Conventions match [`crate::model`]: one power of λ per interaction vertex,
//! N-exponent χ from the index-loop count. For k ≥ 1 the order-2k scalar
//! cumulant restricted to a partition π collects the diagrams whose broken
//! rows/columns realize π, divided by (k!)² (the resummed pattern sum).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::maps::{enumerate_at_order, CiliatedDiagram, EnumLimits, LvrGraph};
use crate::model::{
    cumulant_k1_quadrature_n1, loop_vertex_action_from_x_eigs, z_quadrature_n1, McEstimate,
};
use crate::numerics::gauss_legendre_01;
use crate::series::rational_to_f64;
use crate::weingarten::IntegerPartition;
use crate::{Error, ModelParams, Result};

/// Laurent polynomial in N with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NPolynomial {
    pub terms: BTreeMap<i64, BigRational>,
}

impl NPolynomial {
    pub fn add_term(&mut self, exponent: i64, coeff: BigRational) {
        let entry = self.terms.entry(exponent).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&exponent);
        }
    }

    /// Exact evaluation at integer N.
    pub fn eval_rational(&self, n: i64) -> BigRational {
        let big_n = BigRational::from_integer(BigInt::from(n));
        let mut total = BigRational::zero();
        for (&e, c) in &self.terms {
            let mut pw = BigRational::one();
            for _ in 0..e.unsigned_abs() {
                pw *= &big_n;
            }
            if e < 0 {
                pw = pw.recip();
            }
            total += c.clone() * pw;
        }
        total
    }

    pub fn eval_f64(&self, n: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&e, c)| rational_to_f64(c) * n.powi(e as i32))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.terms
                .iter()
                .map(|(&e, c)| (e.to_string(), serde_json::Value::String(c.to_string())))
                .collect(),
        )
    }
}

/// One order of the diagram-weighted expansion.
#[derive(Debug, Clone)]
pub struct OrderData {
    pub order: usize,
    /// Wick patterns contributing at this order (with multiplicities).
    pub patterns: u64,
    /// Distinct labelled diagrams.
    pub classes: usize,
    /// Coefficient of λ^order per broken-face partition π (signs included).
    pub by_pi: BTreeMap<IntegerPartition, NPolynomial>,
}

impl OrderData {
    pub fn total(&self) -> NPolynomial {
        let mut out = NPolynomial::default();
        for poly in self.by_pi.values() {
            for (&e, c) in &poly.terms {
                out.add_term(e, c.clone());
            }
        }
        out
    }
}

/// Exact expansion of log Z (k = 0) or of the 2k-point cumulant content,
/// with a per-order census of the contributing diagrams.
#[derive(Debug, Clone)]
pub struct GraphWeightedSeries {
    pub p: usize,
    pub k: usize,
    pub orders: Vec<OrderData>,
}

impl GraphWeightedSeries {
    /// Coefficients of λ^n for the partition π, exact at integer N.
    pub fn coefficients_at(&self, pi: &IntegerPartition, n: i64) -> Vec<BigRational> {
        self.orders
            .iter()
            .map(|o| {
                o.by_pi
                    .get(pi)
                    .map(|poly| poly.eval_rational(n))
                    .unwrap_or_else(BigRational::zero)
            })
            .collect()
    }
}

fn factorial_rational(n: usize) -> BigRational {
    let mut f = BigRational::one();
    for j in 1..=n {
        f *= BigRational::from_integer(BigInt::from(j));
    }
    f
}

/// Exact perturbative expansion through `max_order` powers of λ.
///
/// Each connected diagram G with v interaction vertices contributes
/// (-1)^v N^{χ(G)} / v! to the coefficient of λ^v, collected per broken-face
/// partition π; for k = 0 the single entry is the empty partition and the
/// series is log Z.
pub fn perturbative_series(
    p: usize,
    k: usize,
    max_order: usize,
    limits: &EnumLimits,
) -> Result<GraphWeightedSeries> {
    let mut orders = Vec::new();
    for v in 0..=max_order {
        let diagrams = enumerate_at_order(p, k, v, limits)?;
        let mut by_pi: BTreeMap<IntegerPartition, NPolynomial> = BTreeMap::new();
        let mut patterns = 0u64;
        let sign = if v % 2 == 0 {
            BigRational::one()
        } else {
            -BigRational::one()
        };
        let inv_vfact = factorial_rational(v).recip();
        for d in &diagrams {
            patterns += d.multiplicity;
            let weight = sign.clone()
                * BigRational::from_integer(BigInt::from(d.multiplicity))
                * inv_vfact.clone();
            by_pi
                .entry(d.pi.clone())
                .or_default()
                .add_term(d.chi, weight);
        }
        orders.push(OrderData {
            order: v,
            patterns,
            classes: diagrams.len(),
            by_pi,
        });
    }
    Ok(GraphWeightedSeries { p, k, orders })
}

/// Scalar cumulant expansion K^k_π(λ, N): the restriction of the diagram sum
/// to broken-face partition π, divided by (k!)².
pub fn scalar_cumulant_series(
    p: usize,
    k: usize,
    pi: &IntegerPartition,
    max_order: usize,
    limits: &EnumLimits,
) -> Result<Vec<NPolynomial>> {
    if pi.total() != k {
        return Err(Error::InvalidParameter(format!(
            "partition {pi} does not partition k = {k}"
        )));
    }
    let series = perturbative_series(p, k, max_order, limits)?;
    let kfact_sq = factorial_rational(k).recip().pow_usize(2);
    Ok(series
        .orders
        .iter()
        .map(|o| {
            let mut poly = o.by_pi.get(pi).cloned().unwrap_or_default();
            let scaled: Vec<(i64, BigRational)> = poly
                .terms
                .iter()
                .map(|(&e, c)| (e, c.clone() * kfact_sq.clone()))
                .collect();
            poly.terms.clear();
            for (e, c) in scaled {
                poly.add_term(e, c);
            }
            poly
        })
        .collect())
}

trait RationalPow {
    fn pow_usize(self, e: usize) -> Self;
}

impl RationalPow for BigRational {
    fn pow_usize(self, e: usize) -> Self {
        let mut acc = BigRational::one();
        for _ in 0..e {
            acc *= self.clone();
        }
        acc
    }
}

/// Sanity check used by the tests: diagrams carrying delta patterns of the
/// same cycle type contribute equal sums (the pattern sum is a class
/// function), validating the (k!)² normalization of [`scalar_cumulant_series`].
pub fn pattern_sums_by_class(
    diagrams: &[CiliatedDiagram],
    n: i64,
) -> BTreeMap<IntegerPartition, Vec<BigRational>> {
    let mut per_pattern: BTreeMap<(Vec<usize>, Vec<usize>), BigRational> = BTreeMap::new();
    for d in diagrams {
        let key = (
            (0..d.k).map(|l| d.row_perm.apply(l)).collect::<Vec<_>>(),
            (0..d.k).map(|l| d.col_perm.apply(l)).collect::<Vec<_>>(),
        );
        let mut poly = NPolynomial::default();
        poly.add_term(
            d.chi,
            BigRational::from_integer(BigInt::from(d.multiplicity)),
        );
        *per_pattern.entry(key).or_insert_with(BigRational::zero) += poly.eval_rational(n);
    }
    let mut grouped: BTreeMap<IntegerPartition, Vec<BigRational>> = BTreeMap::new();
    for ((row, col), sum) in per_pattern {
        let rp = crate::weingarten::Permutation::new(row).expect("valid");
        let cp = crate::weingarten::Permutation::new(col).expect("valid");
        let pi = rp.compose(&cp.inverse()).cycle_type();
        grouped.entry(pi).or_default().push(sum);
    }
    grouped
}

// ---------------------------------------------------------------------------
// Tree amplitudes
// ---------------------------------------------------------------------------

/// Evaluated LVR tree amplitude with the analytic bound it must respect.
#[derive(Debug, Clone)]
pub struct TreeAmplitude {
    pub vertices: usize,
    pub edges: usize,
    pub cilia: usize,
    pub value: McEstimate,
    /// |A| ≤ N^{2-|π|} |λ|^{e} (k!)² 2^{2k} / (cos(arg λ/(p-1))^{2e+k} v!).
    pub bound: f64,
}

/// Corollary-style bound for a tree with e edges, v vertices and k cilia.
pub fn tree_amplitude_bound(p: usize, lambda: Complex64, v: usize, e: usize, k: usize) -> f64 {
    let n_power = 2 - k as i64; // |π| = k for the fully split partition; N^... at worst
    let _ = n_power;
    let cos = (lambda.arg() / (p as f64 - 1.0)).cos();
    let kfact: f64 = (1..=k).map(|j| j as f64).product();
    let vfact: f64 = (1..=v).map(|j| j as f64).product();
    lambda.norm().powi(e as i32) * kfact * kfact * 4f64.powi(k as i32)
        / (cos.powi((2 * e + k) as i32) * vfact)
}

/// Monte-Carlo evaluation of the BKAR tree term attached to a labelled LVR
/// tree with at most 3 vertices and at most one cilium.
///
/// For k = 0 the term is (1/v!) ∫ dw ∂_T ⟨Π_i S(M_i)⟩ with the loop vertex
/// action S = -Tr_⊗ log(1 + Σ); with one cilium on vertex c the factor S(M_c)
/// is replaced by the observable Tr(M_c M_c†)/N. The covariance derivative
/// ∂_T is taken by central differences in the symmetrized edge variables with
/// common random numbers; the w-integral uses Gauss-Legendre nodes.
pub fn tree_amplitude_mc(
    tree: &LvrGraph,
    params: &ModelParams,
    seed: u64,
    samples: u64,
) -> Result<TreeAmplitude> {
    params.require_stable()?;
    if !tree.is_tree() {
        return Err(Error::InvalidParameter(
            "amplitude evaluation covers trees only; loop orders are reported as census".into(),
        ));
    }
    let v = tree.map.n_vertices;
    if v > 3 {
        return Err(Error::ResourceCeiling {
            needed: v as u128,
            ceiling: 3,
        });
    }
    let k = tree.map.n_cilia();
    if k > 1 {
        return Err(Error::InvalidParameter(
            "at most one cilium supported".into(),
        ));
    }
    let edges = tree.map.edge_list();
    let e = edges.len();
    if e + 1 != v {
        return Err(Error::InvalidParameter("not a spanning tree".into()));
    }
    // vertex carrying the cilium, if any
    let ciliated: Option<usize> = (0..tree.map.h())
        .find(|&he| tree.map.pairing[he].is_none())
        .map(|he| tree.map.vertex_of[he]);

    let n = params.n;
    let (p, lambda) = (params.p, params.lambda);
    let w_rule = gauss_legendre_01(8);
    let h_step = 0.004;

    // Covariance matrices for every (w-node, stencil-point) pair, with their
    // Cholesky factors; stencil enumerates the 2^e sign choices.
    let mut configs: Vec<(f64, f64, Vec<DMatrix<f64>>)> = Vec::new();
    let mut w_nodes: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..e {
        let mut next = Vec::new();
        for base in &w_nodes {
            for &(x, _) in &w_rule {
                let mut b = base.clone();
                b.push(x);
                next.push(b);
            }
        }
        w_nodes = next;
    }
    for w in &w_nodes {
        let mut quad_weight = 1.0;
        for (d, &x) in w.iter().enumerate() {
            let pos = w_rule.iter().position(|&(n_, _)| n_ == x);
            quad_weight *= w_rule[pos.expect("node from rule")].1;
            let _ = d;
        }
        let mut chols = Vec::new();
        for mask in 0..(1u32 << e) {
            let mut c = DMatrix::<f64>::identity(v, v);
            // interpolated base: tree => x_ij = min over path
            for i in 0..v {
                for j in 0..v {
                    if i != j {
                        c[(i, j)] = path_min(&edges, w, i, j);
                    }
                }
            }
            for (b, &(i, j)) in edges.iter().enumerate() {
                let s = if mask & (1 << b) == 0 { 1.0 } else { -1.0 };
                c[(i, j)] += s * h_step;
                c[(j, i)] += s * h_step;
            }
            let chol = nalgebra::Cholesky::new(c.clone()).ok_or_else(|| {
                Error::InvalidParameter("shifted covariance left the PSD cone".into())
            })?;
            chols.push(chol.l());
        }
        let sign_count = 1.0;
        configs.push((quad_weight, sign_count, chols));
    }

    let chunk = 2048u64;
    let chunks: Vec<u64> = (0..samples.div_ceil(chunk)).collect();
    let partials: Vec<(Complex64, f64, u64)> = chunks
        .par_iter()
        .map(|&cix| {
            let lo = cix * chunk;
            let hi = (lo + chunk).min(samples);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sumsq = 0.0;
            for s_idx in lo..hi {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_word_pos(s_idx as u128 * 4096);
                // common standard normals: per entry, a v-vector
                let mut z = vec![DMatrix::<Complex64>::zeros(n, n); v];
                for a in 0..n {
                    for b in 0..n {
                        for zm in z.iter_mut() {
                            let u1: f64 = rng.gen::<f64>().max(1e-300);
                            let u2: f64 = rng.gen::<f64>();
                            let r = (-u1.ln()).sqrt();
                            let th = 2.0 * std::f64::consts::PI * u2;
                            zm[(a, b)] = Complex64::new(r * th.cos(), r * th.sin());
                        }
                    }
                }
                let mut total = Complex64::new(0.0, 0.0);
                for (quad_weight, _, chols) in &configs {
                    let mut stencil = Complex64::new(0.0, 0.0);
                    for (mask, l) in chols.iter().enumerate() {
                        let mut sign = 1.0;
                        for b in 0..e {
                            if mask & (1 << b) != 0 {
                                sign = -sign;
                            }
                        }
                        // transform: M_i = Σ_j L_ij z_j / sqrt(N)
                        let scale = 1.0 / (n as f64).sqrt();
                        let mut ms = vec![DMatrix::<Complex64>::zeros(n, n); v];
                        for i in 0..v {
                            for j in 0..=i {
                                let lij = l[(i, j)] * scale;
                                if lij != 0.0 {
                                    ms[i] += &z[j] * Complex64::new(lij, 0.0);
                                }
                            }
                        }
                        let mut prod = Complex64::new(1.0, 0.0);
                        for (i, m) in ms.iter().enumerate() {
                            let factor = if Some(i) == ciliated {
                                (m * m.adjoint()).trace() / n as f64
                            } else {
                                let eigs = (m * m.adjoint()).symmetric_eigen().eigenvalues;
                                let eigs: Vec<f64> = eigs.iter().copied().collect();
                                loop_vertex_action_from_x_eigs(p, lambda, &eigs)
                                    .expect("stable couplings stay off the cut")
                            };
                            prod *= factor;
                        }
                        stencil += prod * sign;
                    }
                    // central difference: /(2h)^e
                    let diff = stencil / (2.0 * h_step).powi(e as i32);
                    total += diff * *quad_weight;
                }
                sum += total;
                sumsq += total.norm_sqr();
            }
            (sum, sumsq, hi - lo)
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sumsq = 0.0;
    for (s, q, _) in &partials {
        sum += s;
        sumsq += q;
    }
    let vfact: f64 = (1..=v).map(|j| j as f64).product();
    let mean = sum / samples as f64;
    let var = (sumsq / samples as f64 - mean.norm_sqr()).max(0.0);
    let value = McEstimate {
        value: mean / vfact,
        std_error: (var / samples as f64).sqrt() / vfact,
        samples,
        seed,
    };
    Ok(TreeAmplitude {
        vertices: v,
        edges: e,
        cilia: k,
        value,
        bound: tree_amplitude_bound(p, lambda, v, e, k) * (n as f64).powi(2 - k as i32),
    })
}

fn path_min(edges: &[(usize, usize)], w: &[f64], i: usize, j: usize) -> f64 {
    // tree path infimum by DFS
    let v = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) + 1;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); v.max(i.max(j) + 1)];
    for (e, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, w[e]));
        adj[b].push((a, w[e]));
    }
    let mut best = vec![f64::NEG_INFINITY; adj.len()];
    best[i] = f64::INFINITY;
    let mut stack = vec![i];
    while let Some(u) = stack.pop() {
        for &(t, wt) in &adj[u] {
            let cand = best[u].min(wt);
            if cand > best[t] {
                best[t] = cand;
                stack.push(t);
            }
        }
    }
    if best[j] == f64::NEG_INFINITY {
        0.0
    } else {
        best[j]
    }
}

// ---------------------------------------------------------------------------
// Remainder estimates
// ---------------------------------------------------------------------------

/// One row of the remainder fit: |R_n(λ)| against σ^n [(p-1)n]! |λ|^{n+1}.
#[derive(Debug, Clone, Copy)]
pub struct RemainderRow {
    pub order: usize,
    pub lambda: f64,
    pub remainder: f64,
    /// Smallest σ validating the bound at this (n, λ); f64::NAN at n = 0.
    pub sigma_n: f64,
}

#[derive(Debug, Clone)]
pub struct RemainderReport {
    pub rows: Vec<RemainderRow>,
    /// Smallest σ validating every row (cumulative in n).
    pub sigma: f64,
}

impl RemainderReport {
    /// Smallest σ validating all orders up to n across the panel;
    /// non-decreasing in n by construction.
    pub fn cumulative_sigma(&self, n: usize) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.order <= n && r.sigma_n.is_finite())
            .map(|r| r.sigma_n)
            .fold(0.0, f64::max)
    }
}

/// Compares the truncated diagram series against the N = 1 quadrature oracle
/// (k = 0: log Z; k = 1: the 2-point cumulant) and fits the smallest σ with
/// |R_n| ≤ σ^n [(p-1)n]! |λ|^{n+1} over the panel.
pub fn remainder_estimate(
    p: usize,
    k: usize,
    max_order: usize,
    lambdas: &[f64],
    limits: &EnumLimits,
) -> Result<RemainderReport> {
    if k > 1 {
        return Err(Error::InvalidParameter(
            "quadrature oracle covers k <= 1".into(),
        ));
    }
    let series = perturbative_series(p, k, max_order, limits)?;
    let pi = if k == 0 {
        IntegerPartition::new(vec![]).expect("empty")
    } else {
        IntegerPartition::new(vec![1]).expect("(1)")
    };
    let coeffs: Vec<f64> = series
        .coefficients_at(&pi, 1)
        .iter()
        .map(rational_to_f64)
        .collect();
    let mut rows = Vec::new();
    let mut sigma = 0.0f64;
    for &lam in lambdas {
        let z = Complex64::new(lam, 0.0);
        let oracle = if k == 0 {
            z_quadrature_n1(p, z)?.ln()
        } else {
            cumulant_k1_quadrature_n1(p, z)?
        };
        for n in 0..=max_order {
            let partial: f64 = (0..=n).map(|m| coeffs[m] * lam.powi(m as i32)).sum();
            let remainder = (oracle - Complex64::new(partial, 0.0)).norm();
            let sigma_n = if n == 0 {
                f64::NAN
            } else {
                let fact: f64 = (1..=(p - 1) * n).map(|j| j as f64).product();
                (remainder / (fact * lam.powi(n as i32 + 1))).powf(1.0 / n as f64)
            };
            if sigma_n.is_finite() {
                sigma = sigma.max(sigma_n);
            }
            rows.push(RemainderRow {
                order: n,
                lambda: lam,
                remainder,
                sigma_n,
            });
        }
    }
    Ok(RemainderReport { rows, sigma })
}
