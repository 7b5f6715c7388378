//! Weingarten functions for the unitary group, Haar-moment Monte Carlo and
//! the permutation/partition combinatorics behind scalar cumulants.
//!
//! Wg(ζ, N) is obtained as a column of the inverse of the k!×k! Gram matrix
//! G_{σ,τ} = N^{|C(στ^{-1})|}, computed in exact rational arithmetic. The
//! paper's table entry for Wg((1,1), N) is −1/(N²−1); the Gram-inverse oracle
//! gives +1/(N²−1), and this crate implements the oracle value (the
//! discrepancy is flagged in the CLI report).

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::model::McEstimate;
use crate::{Error, Result};

/// Integer partition with non-decreasing positive parts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntegerPartition {
    parts: Vec<usize>,
}

impl IntegerPartition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.iter().any(|&k| k == 0) {
            return Err(Error::InvalidParameter(
                "partition parts must be >= 1".into(),
            ));
        }
        parts.sort_unstable();
        Ok(IntegerPartition { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Centralizer order z_π = ∏ j^{m_j} m_j! of the conjugacy class.
    pub fn centralizer_order(&self) -> u64 {
        let mut z = 1u64;
        let mut run = 1u64;
        for i in 0..self.parts.len() {
            z *= self.parts[i] as u64;
            if i > 0 && self.parts[i] == self.parts[i - 1] {
                run += 1;
                z *= run;
            } else {
                run = 1;
            }
        }
        z
    }
}

impl std::fmt::Display for IntegerPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Permutation of {0, .., k-1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(Error::InvalidParameter("not a bijection".into()));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(k: usize) -> Self {
        Permutation {
            images: (0..k).collect(),
        }
    }

    /// Permutation with the cycle structure of the partition, on {0..k-1}.
    pub fn from_cycle_type(pi: &IntegerPartition) -> Self {
        let mut images = vec![0usize; pi.total()];
        let mut base = 0;
        for &len in pi.parts() {
            for j in 0..len {
                images[base + j] = base + (j + 1) % len;
            }
            base += len;
        }
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// self ∘ other (apply other first).
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: (0..self.len())
                .map(|i| self.images[other.images[i]])
                .collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0usize; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Permutation { images }
    }

    pub fn cycle_type(&self) -> IntegerPartition {
        let mut seen = vec![false; self.len()];
        let mut parts = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
                len += 1;
            }
            parts.push(len);
        }
        parts.sort_unstable();
        IntegerPartition { parts }
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_type().len()
    }
}

/// All permutations of {0..k-1} in a deterministic order.
pub fn symmetric_group(k: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut scratch: Vec<usize> = (0..k).collect();
    loop {
        out.push(Permutation {
            images: scratch.clone(),
        });
        if !next_permutation(&mut scratch) {
            break;
        }
    }
    out
}

fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

const WG_K_MAX: usize = 5;

/// Weingarten function Wg(ζ, N) for a cycle type ζ ⊢ k, exact rational.
///
/// Requires k ≤ N (otherwise the Gram matrix is singular) and k ≤ 5.
pub fn weingarten(cycle_type: &IntegerPartition, n: usize) -> Result<BigRational> {
    let k = cycle_type.total();
    if k == 0 {
        return Err(Error::InvalidParameter("empty cycle type".into()));
    }
    if k > WG_K_MAX {
        return Err(Error::ResourceCeiling {
            needed: k as u128,
            ceiling: WG_K_MAX as u128,
        });
    }
    if k > n {
        return Err(Error::Singular(format!(
            "Gram matrix is singular for k = {k} > N = {n}"
        )));
    }
    let table = weingarten_table(k, n)?;
    table
        .into_iter()
        .find(|(pi, _)| pi == cycle_type)
        .map(|(_, wg)| wg)
        .ok_or_else(|| Error::InvalidParameter("cycle type does not partition k".into()))
}

/// Wg for every cycle type of S_k at once (one Gram inversion).
pub fn weingarten_table(k: usize, n: usize) -> Result<Vec<(IntegerPartition, BigRational)>> {
    if k > n {
        return Err(Error::Singular(format!(
            "Gram matrix is singular for k = {k} > N = {n}"
        )));
    }
    let perms = symmetric_group(k);
    let m = perms.len();
    let big_n = BigRational::from_integer(BigInt::from(n));
    let mut gram = vec![vec![BigRational::zero(); m]; m];
    for (i, sigma) in perms.iter().enumerate() {
        for (j, tau) in perms.iter().enumerate() {
            let cycles = sigma.compose(&tau.inverse()).cycle_count();
            gram[i][j] = pow_rational(&big_n, cycles as i64);
        }
    }
    // Solve G x = e_id exactly; x_τ = Wg(C(τ), N).
    let id_index = perms
        .iter()
        .position(|p| *p == Permutation::identity(k))
        .unwrap();
    let mut rhs = vec![BigRational::zero(); m];
    rhs[id_index] = BigRational::one();
    let x = solve_rational(gram, rhs)?;
    // Class-function consistency: entries of equal cycle type must agree.
    let mut out: Vec<(IntegerPartition, BigRational)> = Vec::new();
    for (i, perm) in perms.iter().enumerate() {
        let ct = perm.cycle_type();
        match out.iter().find(|(pi, _)| *pi == ct) {
            Some((_, wg)) => {
                if *wg != x[i] {
                    return Err(Error::Singular(
                        "Gram inverse is not a class function".into(),
                    ));
                }
            }
            None => out.push((ct, x[i].clone())),
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn pow_rational(base: &BigRational, exp: i64) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp.unsigned_abs() {
        acc *= base;
    }
    if exp < 0 {
        acc.recip()
    } else {
        acc
    }
}

fn solve_rational(
    mut a: Vec<Vec<BigRational>>,
    mut b: Vec<BigRational>,
) -> Result<Vec<BigRational>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Singular("zero pivot in rational elimination".into()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone() / p.clone();
                for c in col..n {
                    let sub = factor.clone() * a[col][c].clone();
                    a[r][c] -= sub;
                }
                let sub = factor * b[col].clone();
                b[r] -= sub;
            }
        }
    }
    Ok((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

/// Haar-random unitary via Ginibre + QR with the diagonal phase fix.
pub fn haar_unitary(n: usize, rng: &mut impl rand::Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) / 2f64.sqrt()
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Index pattern for a Haar moment ∫ dU ∏ U_{a_i b_i} ∏ Ū_{c_j d_j}.
#[derive(Debug, Clone)]
pub struct HaarMomentPattern {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub d: Vec<usize>,
}

impl HaarMomentPattern {
    fn validate(&self, n: usize) -> Result<()> {
        if self.a.len() != self.b.len() || self.c.len() != self.d.len() {
            return Err(Error::InvalidParameter("index lists must pair up".into()));
        }
        for &i in self.a.iter().chain(&self.b).chain(&self.c).chain(&self.d) {
            if i >= n {
                return Err(Error::InvalidParameter(format!("index {i} out of range")));
            }
        }
        Ok(())
    }
}

/// Monte-Carlo estimate of a Haar moment over Haar-random unitaries.
pub fn haar_moment_mc(
    pattern: &HaarMomentPattern,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    pattern.validate(n)?;
    let chunk = 8192u64;
    let chunks: Vec<u64> = (0..samples.div_ceil(chunk)).collect();
    let partials: Vec<(Complex64, f64, u64)> = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(samples);
            let mut rng =
                ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(c + 1));
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sumsq = 0.0f64;
            for _ in lo..hi {
                let u = haar_unitary(n, &mut rng);
                let mut v = Complex64::new(1.0, 0.0);
                for (&a, &b) in pattern.a.iter().zip(&pattern.b) {
                    v *= u[(a, b)];
                }
                for (&c_, &d) in pattern.c.iter().zip(&pattern.d) {
                    v *= u[(c_, d)].conj();
                }
                sum += v;
                sumsq += v.norm_sqr();
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
    let mean = sum / samples as f64;
    let var = (sumsq / samples as f64 - mean.norm_sqr()).max(0.0);
    Ok(McEstimate {
        value: mean,
        std_error: (var / samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// Exact Haar moment from the Weingarten relation, as a rational number.
pub fn haar_moment_exact(pattern: &HaarMomentPattern, n: usize) -> Result<BigRational> {
    pattern.validate(n)?;
    if pattern.a.len() != pattern.c.len() {
        // δ_{kl} factor.
        return Ok(BigRational::zero());
    }
    let k = pattern.a.len();
    if k == 0 {
        return Ok(BigRational::one());
    }
    let table = weingarten_table(k, n)?;
    let wg = |ct: &IntegerPartition| -> BigRational {
        table
            .iter()
            .find(|(pi, _)| pi == ct)
            .map(|(_, w)| w.clone())
            .unwrap()
    };
    let perms = symmetric_group(k);
    let mut total = BigRational::zero();
    for tau in &perms {
        // δ_{a_{τ(l)}, c_l} for all l
        if (0..k).any(|l| pattern.a[tau.apply(l)] != pattern.c[l]) {
            continue;
        }
        for sigma in &perms {
            if (0..k).any(|l| pattern.b[sigma.apply(l)] != pattern.d[l]) {
                continue;
            }
            total += wg(&tau.compose(&sigma.inverse()).cycle_type());
        }
    }
    Ok(total)
}

/// Trace invariant Tr_π(X) = ∏_m Tr(X^{k_m}).
pub fn trace_invariant(pi: &IntegerPartition, x: &DMatrix<Complex64>) -> Complex64 {
    assert_eq!(
        x.nrows(),
        x.ncols(),
        "trace invariant needs a square matrix"
    );
    let mut out = Complex64::new(1.0, 0.0);
    for &k in pi.parts() {
        let mut pow = DMatrix::<Complex64>::identity(x.nrows(), x.ncols());
        for _ in 0..k {
            pow = &pow * x;
        }
        out *= pow.trace();
    }
    out
}

/// Kronecker-delta pattern δ_{d_l, a_{ρτσ^{-1}(l)}} δ_{c_l, b_{ρξσ^{-1}(l)}}
/// labelled by the two maps l ↦ ρτσ^{-1}(l) and l ↦ ρξσ^{-1}(l).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeltaPattern {
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
}

/// Index structure of the order-2k cumulant for a partition π and
/// permutations ρ, σ, built from a fixed admissible pair (τ_π, ξ_π).
///
/// τ_π = C(π) and ξ_π = id is the canonical choice; any other admissible pair
/// yields the same assembled tensor after resumming ρ, σ.
pub fn cumulant_index_structure(
    pi: &IntegerPartition,
    rho: &Permutation,
    sigma: &Permutation,
    k: usize,
) -> Result<DeltaPattern> {
    if pi.total() != k || rho.len() != k || sigma.len() != k {
        return Err(Error::InvalidParameter(
            "partition and permutations must act on the same k".into(),
        ));
    }
    let tau = Permutation::from_cycle_type(pi);
    let xi = Permutation::identity(k);
    pattern_from_pair(&tau, &xi, rho, sigma)
}

/// Delta pattern for an arbitrary admissible pair (τ, ξ); τξ^{-1} must have
/// cycle type π for the result to contribute to K^k_π.
pub fn pattern_from_pair(
    tau: &Permutation,
    xi: &Permutation,
    rho: &Permutation,
    sigma: &Permutation,
) -> Result<DeltaPattern> {
    let k = tau.len();
    if xi.len() != k || rho.len() != k || sigma.len() != k {
        return Err(Error::InvalidParameter(
            "mismatched permutation sizes".into(),
        ));
    }
    let si = sigma.inverse();
    let row = rho.compose(tau).compose(&si);
    let col = rho.compose(xi).compose(&si);
    Ok(DeltaPattern {
        row_map: (0..k).map(|l| row.apply(l)).collect(),
        col_map: (0..k).map(|l| col.apply(l)).collect(),
    })
}

/// Assembles the full 4k-index tensor Σ_{ρ,σ} of delta patterns on a given
/// matrix dimension; used to check invariance under the (τ_π, ξ_π) choice.
pub fn assemble_pattern_tensor(
    tau: &Permutation,
    xi: &Permutation,
    n: usize,
) -> Result<std::collections::HashMap<DeltaPattern, u64>> {
    let k = tau.len();
    let _ = n;
    let mut acc: std::collections::HashMap<DeltaPattern, u64> = std::collections::HashMap::new();
    for rho in symmetric_group(k) {
        for sigma in symmetric_group(k) {
            let pat = pattern_from_pair(tau, xi, &rho, &sigma)?;
            *acc.entry(pat).or_insert(0) += 1;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn part(parts: &[usize]) -> IntegerPartition {
        IntegerPartition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn table_values_at_n3() {
        assert_eq!(weingarten(&part(&[1]), 3).unwrap(), rat(1, 3));
        assert_eq!(weingarten(&part(&[2]), 3).unwrap(), rat(-1, 24));
        assert_eq!(weingarten(&part(&[3]), 3).unwrap(), rat(1, 60));
    }

    #[test]
    fn closed_forms_at_n5_and_n7() {
        for &n in &[5i64, 7] {
            let nn = n * n;
            let nu = n as usize;
            assert_eq!(weingarten(&part(&[1]), nu).unwrap(), rat(1, n));
            assert_eq!(weingarten(&part(&[2]), nu).unwrap(), rat(-1, n * (nn - 1)));
            // Gram-inverse oracle value; the sign differs from the published table.
            assert_eq!(weingarten(&part(&[1, 1]), nu).unwrap(), rat(1, nn - 1));
            assert_eq!(
                weingarten(&part(&[3]), nu).unwrap(),
                rat(2, n * (nn - 1) * (nn - 4))
            );
            assert_eq!(
                weingarten(&part(&[1, 2]), nu).unwrap(),
                rat(-1, (nn - 1) * (nn - 4))
            );
            assert_eq!(
                weingarten(&part(&[1, 1, 1]), nu).unwrap(),
                rat(nn - 2, n * (nn - 1) * (nn - 4))
            );
        }
    }

    #[test]
    fn gram_defining_property() {
        // Σ_τ N^{|C(στ^{-1})|} Wg(C(τ)) = δ_{σ,id} for k <= 4.
        for k in 1..=4usize {
            let n = k + 1;
            let table = weingarten_table(k, n).unwrap();
            let wg =
                |ct: &IntegerPartition| table.iter().find(|(pi, _)| pi == ct).unwrap().1.clone();
            let perms = symmetric_group(k);
            let big_n = BigRational::from_integer(BigInt::from(n));
            for sigma in &perms {
                let mut total = BigRational::zero();
                for tau in &perms {
                    let cycles = sigma.compose(&tau.inverse()).cycle_count();
                    total += pow_rational(&big_n, cycles as i64) * wg(&tau.cycle_type());
                }
                let expect = if *sigma == Permutation::identity(k) {
                    BigRational::one()
                } else {
                    BigRational::zero()
                };
                assert_eq!(total, expect, "k={k} sigma={sigma:?}");
            }
        }
    }

    #[test]
    fn singular_when_k_exceeds_n() {
        assert!(matches!(
            weingarten(&part(&[1, 1]), 1),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn haar_moment_small_panel() {
        // ⟨|U_00|^2⟩ = 1/2 at N=2; mismatched k ≠ l gives 0.
        let p1 = HaarMomentPattern {
            a: vec![0],
            b: vec![0],
            c: vec![0],
            d: vec![0],
        };
        let est = haar_moment_mc(&p1, 2, 40_000, 11).unwrap();
        assert!((est.value.re - 0.5).abs() < 3.0 * est.std_error);
        assert_eq!(haar_moment_exact(&p1, 2).unwrap(), rat(1, 2));

        let unmatched = HaarMomentPattern {
            a: vec![0],
            b: vec![0],
            c: vec![],
            d: vec![],
        };
        assert_eq!(haar_moment_exact(&unmatched, 2).unwrap(), rat(0, 1));
        let est = haar_moment_mc(&unmatched, 2, 40_000, 12).unwrap();
        assert!(est.value.norm() < 3.0 * est.std_error + 1e-3);

        // ⟨|U_00|^2 |U_11|^2⟩ = 1/3 at N=2 (single surviving (τ,σ) pair is id,id
        // up to the delta bookkeeping).
        let p2 = HaarMomentPattern {
            a: vec![0, 1],
            b: vec![0, 1],
            c: vec![0, 1],
            d: vec![0, 1],
        };
        assert_eq!(haar_moment_exact(&p2, 2).unwrap(), rat(1, 3));
        let est = haar_moment_mc(&p2, 2, 60_000, 13).unwrap();
        assert!((est.value.re - 1.0 / 3.0).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn trace_invariants_on_identity() {
        let id3 = DMatrix::<Complex64>::identity(3, 3);
        assert!((trace_invariant(&part(&[1]), &id3).re - 3.0).abs() < 1e-14);
        assert!((trace_invariant(&part(&[1, 1]), &id3).re - 9.0).abs() < 1e-14);
        let x = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.3, 0.1),
                Complex64::new(-0.2, 0.4),
                Complex64::new(0.9, -0.5),
                Complex64::new(0.1, 0.0),
            ],
        );
        let direct = (&x * &x).trace();
        assert!((trace_invariant(&part(&[2]), &x) - direct).norm() < 1e-13);
    }

    #[test]
    fn index_structure_examples() {
        // k=1: the only pattern is δ_{d1 a1} δ_{c1 b1}.
        let pat = cumulant_index_structure(
            &part(&[1]),
            &Permutation::identity(1),
            &Permutation::identity(1),
            1,
        )
        .unwrap();
        assert_eq!(pat.row_map, vec![0]);
        assert_eq!(pat.col_map, vec![0]);

        // k=2, π=(2): two admissible (τ,ξ) pairs assemble identical tensors.
        let pi2 = part(&[2]);
        let tau1 = Permutation::from_cycle_type(&pi2);
        let xi1 = Permutation::identity(2);
        let tau2 = Permutation::identity(2);
        let xi2 = Permutation::from_cycle_type(&pi2);
        let t1 = assemble_pattern_tensor(&tau1, &xi1, 3).unwrap();
        let t2 = assemble_pattern_tensor(&tau2, &xi2, 3).unwrap();
        assert_eq!(t1, t2);

        // π=(1,1) vs π=(2): different delta patterns at (ρ,σ) = (id,id).
        let a = cumulant_index_structure(
            &part(&[1, 1]),
            &Permutation::identity(2),
            &Permutation::identity(2),
            2,
        )
        .unwrap();
        let b = cumulant_index_structure(
            &part(&[2]),
            &Permutation::identity(2),
            &Permutation::identity(2),
            2,
        )
        .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn cycle_type_and_centralizer() {
        let p = Permutation::new(vec![1, 0, 2, 4, 3]).unwrap();
        assert_eq!(p.cycle_type(), part(&[1, 2, 2]));
        assert_eq!(part(&[1, 2, 2]).centralizer_order(), 8);
        assert_eq!(part(&[1, 1]).centralizer_order(), 2);
        assert_eq!(part(&[3]).centralizer_order(), 3);
    }
}
