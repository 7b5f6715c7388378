//! Analyticity domains in the coupling plane: the cardioid, the pacman, the
//! Nevanlinna-Sokal domain D_R and the Borel strip Σ_σ.
//!
//! All domains are open and exclude λ = 0; membership uses the principal
//! argument in (-π, π] with the determination |arg λ / (p-1)| < π/2.

use num_complex::Complex64;

use crate::{Error, Result};

/// Cardioid 𝒞: |λ| < (2(p-1))^{-1} cos^{p-1}(arg λ / (p-1)).
#[derive(Debug, Clone, Copy)]
pub struct CardioidSpec {
    pub p: usize,
}

/// Pacman P(ε, η): 0 < |λ| < η, |arg λ| < π/2 + π/(p-1) - ε.
#[derive(Debug, Clone, Copy)]
pub struct PacmanSpec {
    pub p: usize,
    pub eta: f64,
    pub epsilon: f64,
}

/// Sokal domain D_R = {z : Re z^{-1/q} > (2R)^{-1}}
///                  = {z : |z| < (2R)^q cos^q(arg z / q)}.
#[derive(Debug, Clone, Copy)]
pub struct SokalDomainSpec {
    pub q: usize,
    pub r: f64,
}

/// Borel strip Σ_σ = {s : dist(s, ℝ₊) < 1/σ}.
#[derive(Debug, Clone, Copy)]
pub struct BorelStripSpec {
    pub sigma: f64,
}

/// Radius of the cardioid at angle θ (zero outside |θ| < (p-1)π/2).
pub fn cardioid_radius(p: usize, theta: f64) -> f64 {
    let q = (p - 1) as f64;
    if theta.abs() >= q * std::f64::consts::FRAC_PI_2 {
        return 0.0;
    }
    (theta / q).cos().powi(p as i32 - 1) / (2.0 * q)
}

/// Membership in the cardioid; λ = 0 is excluded (strict inequalities).
pub fn in_cardioid(p: usize, lambda: Complex64) -> bool {
    if lambda.norm() == 0.0 {
        return false;
    }
    let theta = lambda.arg();
    let q = (p - 1) as f64;
    if (theta / q).abs() >= std::f64::consts::FRAC_PI_2 {
        return false;
    }
    lambda.norm() < cardioid_radius(p, theta)
}

pub fn in_pacman(spec: &PacmanSpec, lambda: Complex64) -> bool {
    let r = lambda.norm();
    if r == 0.0 || r >= spec.eta {
        return false;
    }
    let opening =
        std::f64::consts::FRAC_PI_2 + std::f64::consts::PI / (spec.p - 1) as f64 - spec.epsilon;
    lambda.arg().abs() < opening
}

pub fn in_sokal_domain(spec: &SokalDomainSpec, z: Complex64) -> bool {
    if z.norm() == 0.0 {
        return false;
    }
    let q = spec.q as f64;
    let phi = z.arg() / q;
    if phi.abs() >= std::f64::consts::FRAC_PI_2 {
        return false;
    }
    z.norm() < (2.0 * spec.r).powi(spec.q as i32) * phi.cos().powi(spec.q as i32)
}

pub fn in_borel_strip(spec: &BorelStripSpec, s: Complex64) -> bool {
    let dist = if s.re >= 0.0 { s.im.abs() } else { s.norm() };
    dist < 1.0 / spec.sigma
}

/// The Sokal-domain parameters that reproduce the cardioid: q = p-1 and
/// R = ½ (2(p-1))^{-1/(p-1)}, so that (2R)^{p-1} = 1/(2(p-1)).
pub fn cardioid_as_sokal(p: usize) -> SokalDomainSpec {
    let q = (p - 1) as f64;
    SokalDomainSpec {
        q: p - 1,
        r: 0.5 * (2.0 * q).powf(-1.0 / q),
    }
}

/// Boundary samples r(θ) e^{iθ}, θ uniform over [-(p-1)π/2, (p-1)π/2].
///
/// Rows are (θ, Re λ, Im λ), ready for CSV emission.
pub fn cardioid_boundary(p: usize, samples: usize) -> Result<Vec<(f64, f64, f64)>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let top = (p - 1) as f64 * std::f64::consts::FRAC_PI_2;
    Ok((0..samples)
        .map(|i| {
            let theta = -top + 2.0 * top * i as f64 / (samples - 1) as f64;
            let r = cardioid_radius(p, theta);
            (theta, r * theta.cos(), r * theta.sin())
        })
        .collect())
}

/// Deterministic interior sample of the cardioid (t-scaled boundary grid).
pub fn cardioid_samples(p: usize, count: usize) -> Vec<Complex64> {
    let top = (p - 1) as f64 * std::f64::consts::FRAC_PI_2;
    let rings = 5usize.max(count / 20);
    let per_ring = count.div_ceil(rings);
    let mut out = Vec::with_capacity(count);
    'outer: for ring in 0..rings {
        let t = 0.15 + 0.8 * ring as f64 / rings.max(1) as f64;
        for j in 0..per_ring {
            let theta = -0.95 * top + 1.9 * top * j as f64 / per_ring.max(1) as f64;
            out.push(Complex64::from_polar(t * cardioid_radius(p, theta), theta));
            if out.len() == count {
                break 'outer;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cardioid_examples_p3() {
        assert!(in_cardioid(3, Complex64::new(0.2, 0.0)));
        assert!(!in_cardioid(3, Complex64::new(0.25, 0.0)));
        assert!(!in_cardioid(3, Complex64::new(0.0, 0.2)));
        assert!(!in_cardioid(3, Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn pacman_examples() {
        let spec = PacmanSpec {
            p: 3,
            eta: 0.1,
            epsilon: 0.1,
        };
        assert!(in_pacman(&spec, Complex64::new(0.05, 0.0)));
        assert!(!in_pacman(&spec, Complex64::new(0.0, 0.0)));
        // A point between the ε = 0.01 and ε = 0.02 opening boundaries.
        let tight = PacmanSpec {
            p: 3,
            eta: 0.1,
            epsilon: 0.01,
        };
        let lam = Complex64::from_polar(0.05, std::f64::consts::PI - 0.015);
        assert!(in_pacman(&tight, lam));
        let tighter = PacmanSpec {
            p: 3,
            eta: 0.1,
            epsilon: 0.02,
        };
        assert!(!in_pacman(&tighter, lam));
    }

    #[test]
    fn sokal_examples() {
        let disk = SokalDomainSpec { q: 1, r: 1.0 };
        assert!(in_sokal_domain(&disk, Complex64::new(1.9, 0.0)));
        assert!(!in_sokal_domain(&disk, Complex64::new(2.1, 0.0)));
        let s2 = SokalDomainSpec { q: 2, r: 0.7 };
        assert!(!in_sokal_domain(&s2, Complex64::new(0.0, 0.0)));
        assert!(!in_sokal_domain(&s2, Complex64::new(-0.01, 0.0)));
    }

    #[test]
    fn cardioid_matches_translated_sokal_on_grid() {
        for p in [2usize, 3, 4, 5] {
            let sokal = cardioid_as_sokal(p);
            for i in -40..=40 {
                for j in -40..=40 {
                    let z = Complex64::new(i as f64 * 0.016, j as f64 * 0.016);
                    assert_eq!(in_cardioid(p, z), in_sokal_domain(&sokal, z), "p={p} z={z}");
                }
            }
        }
    }

    #[test]
    fn cardioid_star_shaped_and_conjugation_symmetric() {
        for p in [2usize, 3, 5] {
            for lam in cardioid_samples(p, 60) {
                assert!(in_cardioid(p, lam), "sample should lie inside, p={p}");
                assert!(in_cardioid(p, lam.conj()));
                for t in [0.25, 0.5, 0.75, 1.0] {
                    assert!(in_cardioid(p, lam * t));
                }
            }
        }
    }

    #[test]
    fn boundary_rows() {
        let rows = cardioid_boundary(3, 3).unwrap();
        assert_eq!(rows.len(), 3);
        // apex at θ = 0
        assert_relative_eq!(rows[1].1, 0.25, epsilon = 1e-14);
        assert!(rows[0].1.hypot(rows[0].2) < 1e-15);
        assert!(rows[2].1.hypot(rows[2].2) < 1e-15);
        let rows2 = cardioid_boundary(2, 3).unwrap();
        assert_relative_eq!(rows2[1].1, 0.5, epsilon = 1e-14);
        assert!(cardioid_boundary(4, 1).is_err());
    }

    #[test]
    fn strip_contains_positive_axis() {
        let spec = BorelStripSpec { sigma: 2.0 };
        assert!(in_borel_strip(&spec, Complex64::new(100.0, 0.0)));
        assert!(in_borel_strip(&spec, Complex64::new(3.0, 0.49)));
        assert!(!in_borel_strip(&spec, Complex64::new(3.0, 0.51)));
        assert!(!in_borel_strip(&spec, Complex64::new(-0.6, 0.0)));
    }
}
