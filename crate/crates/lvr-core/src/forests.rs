//! The BKAR Taylor forest formula as executable combinatorics: oriented
//! forests, weakening parameters, the infimum interpolation, covariance
//! positivity and numeric validation of the interpolation identity.
//!
//! The identity expanded by [`bkar_expand`] reads
//!
//!   F(x ≡ 1) = Σ_F ∫ dw_F  ∂_F F | x = x^F(w)
//!
//! over oriented forests on n labelled vertices, where x^F_{ij}(w) is the
//! infimum of the w's along the (undirected) forest path joining i and j, and
//! zero when the path does not exist. Orientations select which of the two
//! variables x_ij, x_ji each edge derivative acts on; the interpolation point
//! itself is orientation-blind.

use nalgebra::DMatrix;

use crate::maps::Dsu;
use crate::numerics::gauss_legendre_01;
use crate::{Error, Result};

/// Forest on n labelled vertices with oriented edges; the undirected support
/// is acyclic, the orientation of each edge is free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedForest {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl OrientedForest {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut dsu = Dsu::new(n);
        for &(i, j) in &edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidParameter(format!("bad edge ({i},{j})")));
            }
            if !dsu.union(i, j) {
                return Err(Error::InvalidParameter(
                    "undirected support contains a cycle".into(),
                ));
            }
        }
        Ok(OrientedForest { n, edges })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Weakening parameters, one value in [0, 1] per forest edge.
#[derive(Debug, Clone)]
pub struct WeakeningAssignment {
    pub w: Vec<f64>,
}

impl WeakeningAssignment {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidParameter("w must lie in [0,1]".into()));
        }
        Ok(WeakeningAssignment { w })
    }
}

/// Default ceiling on the vertex count of forest enumerations.
pub const FOREST_N_MAX: usize = 7;

/// Every oriented forest on n labelled vertices, exactly once
/// (all acyclic undirected edge sets, each with all 2^e orientations).
pub fn oriented_forests(n: usize) -> Result<Vec<OrientedForest>> {
    oriented_forests_bounded(n, FOREST_N_MAX)
}

pub fn oriented_forests_bounded(n: usize, n_max: usize) -> Result<Vec<OrientedForest>> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if n > n_max {
        return Err(Error::ResourceCeiling {
            needed: n as u128,
            ceiling: n_max as u128,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    fn recurse(
        pairs: &[(usize, usize)],
        from: usize,
        n: usize,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<OrientedForest>,
    ) {
        // emit every orientation of the current undirected forest
        let e = chosen.len();
        for mask in 0..(1u32 << e) {
            let edges: Vec<(usize, usize)> = chosen
                .iter()
                .enumerate()
                .map(|(idx, &(i, j))| {
                    if mask & (1 << idx) == 0 {
                        (i, j)
                    } else {
                        (j, i)
                    }
                })
                .collect();
            out.push(OrientedForest { n, edges });
        }
        for (pos, &(i, j)) in pairs.iter().enumerate().skip(from) {
            // acyclicity check against the current selection
            let mut dsu = Dsu::new(n);
            for &(a, b) in chosen.iter() {
                dsu.union(a, b);
            }
            if dsu.union(i, j) {
                chosen.push((i, j));
                recurse(pairs, pos + 1, n, chosen, out);
                chosen.pop();
            }
        }
    }
    recurse(&pairs, 0, n, &mut chosen, &mut out);
    Ok(out)
}

/// Infimum of w along the undirected forest path i ↔ j; 0 when no path
/// exists, 1 on the diagonal (the covariance is untouched there).
pub fn interpolated_x(forest: &OrientedForest, w: &WeakeningAssignment, i: usize, j: usize) -> f64 {
    if i == j {
        return 1.0;
    }
    // BFS over the undirected support tracking the minimum weight.
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); forest.n];
    for (e, &(a, b)) in forest.edges.iter().enumerate() {
        adj[a].push((b, w.w[e]));
        adj[b].push((a, w.w[e]));
    }
    let mut best = vec![f64::NEG_INFINITY; forest.n];
    best[i] = f64::INFINITY;
    let mut stack = vec![i];
    while let Some(v) = stack.pop() {
        for &(u, wt) in &adj[v] {
            let cand = best[v].min(wt);
            if cand > best[u] {
                best[u] = cand;
                stack.push(u);
            }
        }
    }
    if best[j] == f64::NEG_INFINITY {
        0.0
    } else {
        best[j]
    }
}

/// Covariance of the forest-weakened replica measure, with the oriented-edge
/// assignment x_ij = w_e on edges and 0 elsewhere:
/// C_ij = (x_ij + x_ji) / (2N) off-diagonal and 1/N on the diagonal.
/// Returns the matrix together with its minimum eigenvalue.
pub fn covariance_matrix(
    forest: &OrientedForest,
    w: &WeakeningAssignment,
    n_dim: usize,
) -> (DMatrix<f64>, f64) {
    let n = forest.n;
    let scale = 1.0 / n_dim as f64;
    let mut c = DMatrix::<f64>::identity(n, n) * scale;
    for (e, &(i, j)) in forest.edges.iter().enumerate() {
        // symmetrized oriented assignment: each edge feeds x_ij only
        c[(i, j)] += 0.5 * w.w[e] * scale;
        c[(j, i)] += 0.5 * w.w[e] * scale;
    }
    let min_eig = c
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    (c, min_eig)
}

/// Fully interpolated covariance C_ij = x^F_ij(w)/N (path infima), the
/// Gaussian weakening actually used by the expansion.
pub fn interpolated_covariance(
    forest: &OrientedForest,
    w: &WeakeningAssignment,
    n_dim: usize,
) -> DMatrix<f64> {
    let n = forest.n;
    let scale = 1.0 / n_dim as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            scale
        } else {
            interpolated_x(forest, w, i, j) * scale
        }
    })
}

/// Smooth functional of the n(n-1) edge variables with caller-supplied
/// analytic mixed partials.
pub trait BkarIntegrand {
    fn n(&self) -> usize;
    /// Value at the (full, possibly asymmetric) variable matrix x.
    fn eval(&self, x: &DMatrix<f64>) -> f64;
    /// Mixed partial ∂/∂x_{i1 j1} ... applied once per listed oriented edge.
    fn mixed_partial(&self, x: &DMatrix<f64>, edges: &[(usize, usize)]) -> f64;
}

/// Maximum forest-edge count integrated by the exact identity check.
pub const BKAR_EDGE_MAX: usize = 4;

/// Evaluates the BKAR forest expansion Σ_F ∫ dw ∂_F F |_{x^F(w)}.
///
/// Exact forest enumeration, analytic derivatives from the integrand, and
/// per-edge Gauss-Legendre quadrature (tensorized, refined to `tol`). The
/// result equals the integrand at x ≡ 1 by the interpolation identity.
pub fn bkar_expand(n: usize, integrand: &dyn BkarIntegrand, tol: f64) -> Result<f64> {
    if integrand.n() != n {
        return Err(Error::InvalidParameter("integrand size mismatch".into()));
    }
    let forests = oriented_forests(n)?;
    let mut total = 0.0;
    for forest in &forests {
        if forest.n_edges() > BKAR_EDGE_MAX {
            return Err(Error::ResourceCeiling {
                needed: forest.n_edges() as u128,
                ceiling: BKAR_EDGE_MAX as u128,
            });
        }
        total += forest_term(forest, integrand, tol)?;
    }
    Ok(total)
}

fn forest_term(forest: &OrientedForest, integrand: &dyn BkarIntegrand, tol: f64) -> Result<f64> {
    let e = forest.n_edges();
    if e == 0 {
        let x = assemble_x(forest, &WeakeningAssignment { w: vec![] });
        return Ok(integrand.eval(&x));
    }
    // The integrand is smooth except for kinks of the path-infimum on the
    // hyperplanes w_a = w_b. Split [0,1]^e into the e! ordering simplices,
    // map each onto the cube by w_{σ(m)} = Π_{l ≥ m} t_l (Jacobian
    // Π t_l^{l-1}); within a region every infimum is one fixed coordinate and
    // tensor Gauss-Legendre converges spectrally. Doubled orders give the
    // stopping check.
    let mut orderings = vec![vec![0usize; 0]];
    {
        let mut scratch: Vec<usize> = (0..e).collect();
        orderings.clear();
        loop {
            orderings.push(scratch.clone());
            let mut i = e.saturating_sub(1);
            while i > 0 && scratch[i - 1] >= scratch[i] {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            let mut j = e - 1;
            while scratch[j] <= scratch[i - 1] {
                j -= 1;
            }
            scratch.swap(i - 1, j);
            scratch[i..].reverse();
        }
    }
    let eval_region = |sigma: &[usize], order: usize| -> f64 {
        let rule = gauss_legendre_01(order);
        let mut acc = 0.0;
        let mut idx = vec![0usize; e];
        loop {
            let mut weight = 1.0;
            let t: Vec<f64> = idx
                .iter()
                .map(|&i| {
                    weight *= rule[i].1;
                    rule[i].0
                })
                .collect();
            // w_{σ(m)} = t_m t_{m+1} ... t_{e-1}; Jacobian Π_{l} t_l^{l}
            let mut w = vec![0.0f64; e];
            for m in 0..e {
                let mut prod = 1.0;
                for &tl in t.iter().skip(m) {
                    prod *= tl;
                }
                w[sigma[m]] = prod;
            }
            let mut jac = 1.0;
            for (l, &tl) in t.iter().enumerate() {
                jac *= tl.powi(l as i32);
            }
            let x = assemble_x(forest, &WeakeningAssignment { w });
            acc += weight * jac * integrand.mixed_partial(&x, &forest.edges);
            let mut done = true;
            for d in 0..e {
                idx[d] += 1;
                if idx[d] < order {
                    done = false;
                    break;
                }
                idx[d] = 0;
            }
            if done {
                break;
            }
        }
        acc
    };
    let orders: [usize; 4] = [8, 16, 32, 64];
    let mut prev: Option<f64> = None;
    for &order in &orders {
        let total: f64 = orderings.iter().map(|s| eval_region(s, order)).sum();
        if let Some(p) = prev {
            if (total - p).abs() <= tol * (1.0 + total.abs()) {
                return Ok(total);
            }
        }
        prev = Some(total);
    }
    Err(Error::Quadrature(format!(
        "forest term did not stabilize to {tol:e}"
    )))
}

fn assemble_x(forest: &OrientedForest, w: &WeakeningAssignment) -> DMatrix<f64> {
    let n = forest.n;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            interpolated_x(forest, w, i, j)
        }
    })
}
