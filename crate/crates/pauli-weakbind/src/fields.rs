//! Piecewise-polynomial radial profiles and the derived magnetic quantities:
//! flux, azimuthal gauge potential b(r), logarithmic potential xi(r), and the
//! zero-mode / virtual-level counts.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Absolute tolerance for detecting integer total flux.
pub const INTEGER_FLUX_TOL: f64 = 1e-9;
/// Below this distance to an integer (but above the detection tolerance) the
/// flux sits numerically on a regime boundary; callers may want to warn.
pub const INTEGER_FLUX_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    Magnetic,
    Electric,
}

/// One polynomial piece on [lo, hi), coefficients in increasing powers of r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }

    /// Exact integral of p(rho) * rho^j over [a, b] within this piece.
    fn moment(&self, a: f64, b: f64, j: u32) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let e = (k as u32 + j + 1) as f64;
            acc += c * (b.powf(e) - a.powf(e)) / e;
        }
        acc
    }

    /// Exact integral of p(rho) * rho * ln(rho) over [a, b] within this piece.
    fn log_moment(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let e = (k + 2) as f64;
            let anti = |r: f64| {
                if r == 0.0 {
                    0.0
                } else {
                    r.powf(e) * (r.ln() / e - 1.0 / (e * e))
                }
            };
            acc += c * (anti(b) - anti(a));
        }
        acc
    }
}

/// A compactly supported radial function given as a piecewise polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pieces: Vec<Piece>,
    support_radius: f64,
    kind: ProfileKind,
}

impl RadialProfile {
    pub fn new(kind: ProfileKind, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Profile("profile needs at least one piece".into()));
        }
        let mut expect = 0.0;
        for (i, p) in pieces.iter().enumerate() {
            if (p.lo - expect).abs() > 1e-12 * (1.0 + expect.abs()) {
                return Err(Error::Profile(format!(
                    "piece {i} starts at {} but previous piece ends at {expect}",
                    p.lo
                )));
            }
            if !(p.hi > p.lo) {
                return Err(Error::Profile(format!(
                    "piece {i} has empty range [{}, {})",
                    p.lo, p.hi
                )));
            }
            if p.coeffs.is_empty() || p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Profile(format!("piece {i} has invalid coefficients")));
            }
            expect = p.hi;
        }
        let profile = RadialProfile {
            support_radius: expect,
            pieces,
            kind,
        };
        // ln_- weighted integrability; finite for any valid piecewise polynomial,
        // so this only rejects pathological coefficient magnitudes
        let check = crate::quad::adaptive_with_breaks(
            |r| profile.eval(r).abs() * (1.0 + (-r.ln()).max(0.0)) * r,
            0.0,
            profile.support_radius,
            &profile.breakpoints(),
            1e-6,
            1e-12,
        )?;
        if !check.is_finite() {
            return Err(Error::Profile("ln-weighted integral diverges".into()));
        }
        Ok(profile)
    }

    /// Constant value on [0, radius].
    pub fn constant(kind: ProfileKind, value: f64, radius: f64) -> Result<Self> {
        Self::new(
            kind,
            vec![Piece {
                lo: 0.0,
                hi: radius,
                coeffs: vec![value],
            }],
        )
    }

    pub fn zero(kind: ProfileKind) -> Self {
        RadialProfile {
            pieces: vec![Piece {
                lo: 0.0,
                hi: 1.0,
                coeffs: vec![0.0],
            }],
            support_radius: 1.0,
            kind,
        }
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pieces.iter().map(|p| p.lo).collect();
        v.push(self.support_radius);
        v
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < 0.0 || r >= self.support_radius {
            return 0.0;
        }
        match self
            .pieces
            .iter()
            .find(|p| r >= p.lo && r < p.hi)
        {
            Some(p) => p.eval(r),
            None => 0.0,
        }
    }

    pub fn negated(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                lo: p.lo,
                hi: p.hi,
                coeffs: p.coeffs.iter().map(|c| -c).collect(),
            })
            .collect();
        RadialProfile {
            pieces,
            support_radius: self.support_radius,
            kind: self.kind,
        }
    }

    /// Exact integral of p(rho) rho^j d rho over [0, r].
    pub fn moment_to(&self, r: f64, j: u32) -> f64 {
        let mut acc = 0.0;
        for p in &self.pieces {
            if r <= p.lo {
                break;
            }
            acc += p.moment(p.lo, r.min(p.hi), j);
        }
        acc
    }

    /// Exact integral of p(rho) rho d rho over [0, r].
    pub fn integral_rho_to(&self, r: f64) -> f64 {
        self.moment_to(r, 1)
    }

    /// Exact integral of p(rho) rho ln(rho) d rho over [r, infinity).
    pub fn log_tail(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.pieces {
            if r >= p.hi {
                continue;
            }
            acc += p.log_moment(r.max(p.lo), p.hi);
        }
        acc
    }
}

/// Total magnetic flux: integral of B(rho) rho d rho over the half-line.
pub fn flux(b: &RadialProfile) -> f64 {
    b.integral_rho_to(b.support_radius)
}

/// Azimuthal gauge potential b(r) = r^{-1} * integral_0^r B(rho) rho d rho.
pub fn azimuthal_potential(b: &RadialProfile, r: f64) -> f64 {
    debug_assert!(r > 0.0);
    b.integral_rho_to(r) / r
}

/// Logarithmic potential xi(r); equals -flux * ln r outside the support.
pub fn xi(b: &RadialProfile, r: f64) -> f64 {
    debug_assert!(r > 0.0);
    -b.integral_rho_to(r) * r.ln() - b.log_tail(r)
}

/// A (B, V) pair with derived scalars.
#[derive(Debug, Clone)]
pub struct FieldSetup {
    b_profile: RadialProfile,
    v_profile: RadialProfile,
    flux: f64,
    /// Common envelope radius: both profiles vanish for r >= radius/2.
    radius: f64,
    n_zero_modes: u32,
    n_prime: u32,
    mu_frac: f64,
    integer_flux: bool,
}

/// Builds the FieldSetup for a (B, V) pair.
pub fn setup(b: RadialProfile, v: RadialProfile) -> Result<FieldSetup> {
    if b.kind() != ProfileKind::Magnetic || v.kind() != ProfileKind::Electric {
        return Err(Error::Profile(
            "setup expects a magnetic and an electric profile".into(),
        ));
    }
    let phi = flux(&b);
    let aphi = phi.abs();
    let integer_flux = (aphi - aphi.round()).abs() <= INTEGER_FLUX_TOL;
    let mu_frac = if integer_flux { 0.0 } else { aphi - aphi.floor() };
    let n_zero_modes = if integer_flux {
        (aphi.round() as i64 - 1).max(0) as u32
    } else {
        aphi.floor() as u32
    };
    let n_prime = if integer_flux {
        n_zero_modes + 2
    } else {
        n_zero_modes + 1
    };
    let radius = 2.0 * b.support_radius().max(v.support_radius());
    Ok(FieldSetup {
        b_profile: b,
        v_profile: v,
        flux: phi,
        radius,
        n_zero_modes,
        n_prime,
        mu_frac,
        integer_flux,
    })
}

impl FieldSetup {
    pub fn b_profile(&self) -> &RadialProfile {
        &self.b_profile
    }

    pub fn v_profile(&self) -> &RadialProfile {
        &self.v_profile
    }

    pub fn flux(&self) -> f64 {
        self.flux
    }

    /// Envelope radius R with B(r) = V(r) = 0 for r >= R/2.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_zero_modes(&self) -> u32 {
        self.n_zero_modes
    }

    pub fn n_prime(&self) -> u32 {
        self.n_prime
    }

    pub fn mu_frac(&self) -> f64 {
        self.mu_frac
    }

    pub fn integer_flux(&self) -> bool {
        self.integer_flux
    }

    /// True when the flux sits suspiciously close to (but not on) an integer.
    pub fn near_integer_flux(&self) -> bool {
        let d = (self.flux.abs() - self.flux.abs().round()).abs();
        !self.integer_flux && d < INTEGER_FLUX_WARN
    }

    pub fn b(&self, r: f64) -> f64 {
        azimuthal_potential(&self.b_profile, r)
    }

    pub fn xi(&self, r: f64) -> f64 {
        xi(&self.b_profile, r)
    }

    /// The setup with B replaced by -B (complex conjugation image).
    pub fn reflected(&self) -> FieldSetup {
        setup(self.b_profile.negated(), self.v_profile.clone())
            .expect("negated profile stays valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub fn uniform_b(b0: f64) -> RadialProfile {
        RadialProfile::constant(ProfileKind::Magnetic, b0, 1.0).unwrap()
    }

    fn unit_v() -> RadialProfile {
        RadialProfile::constant(ProfileKind::Electric, 1.0, 1.0).unwrap()
    }

    #[test]
    fn flux_of_uniform_fields() {
        assert_relative_eq!(flux(&uniform_b(2.0)), 1.0, max_relative = 1e-14);
        assert_relative_eq!(flux(&uniform_b(3.0)), 1.5, max_relative = 1e-14);
    }

    #[test]
    fn flux_of_cancelling_annulus() {
        // B = 2 on [0,1], -2 on [1, sqrt 2]: total flux 0
        let b = RadialProfile::new(
            ProfileKind::Magnetic,
            vec![
                Piece { lo: 0.0, hi: 1.0, coeffs: vec![2.0] },
                Piece { lo: 1.0, hi: 2f64.sqrt(), coeffs: vec![-2.0] },
            ],
        )
        .unwrap();
        assert!(flux(&b).abs() < 1e-14);
    }

    #[test]
    fn azimuthal_potential_uniform() {
        let b = uniform_b(2.0);
        assert_relative_eq!(azimuthal_potential(&b, 0.5), 0.5, max_relative = 1e-14);
        assert_relative_eq!(azimuthal_potential(&b, 2.0), 0.5, max_relative = 1e-14);
        // b(r) -> B(0) r / 2 as r -> 0
        let r = 1e-6;
        assert_relative_eq!(azimuthal_potential(&b, r), r, max_relative = 1e-10);
    }

    #[test]
    fn xi_uniform_field() {
        let b = uniform_b(2.0);
        // inside the support: xi = (1 - r^2)/2
        assert_relative_eq!(xi(&b, 0.5), 0.375, max_relative = 1e-13);
        // outside: -flux ln r
        assert_relative_eq!(xi(&b, std::f64::consts::E), -1.0, max_relative = 1e-13);
        // continuity at the edge
        assert!(xi(&b, 1.0 - 1e-12).abs() < 1e-10);
        assert!(xi(&b, 1.0 + 1e-12).abs() < 1e-10);
    }

    #[test]
    fn xi_exterior_identity_and_linearity() {
        let b = uniform_b(3.0);
        let phi = flux(&b);
        for &r in &[1.0, 1.7, 4.0, 50.0] {
            let x = xi(&b, r);
            assert!((x + phi * r.ln()).abs() <= 1e-12 * (1.0 + (phi * r.ln()).abs()));
        }
        let nb = b.negated();
        for &r in &[0.3, 0.8, 2.5] {
            assert_relative_eq!(xi(&nb, r), -xi(&b, r), max_relative = 1e-13);
            assert_relative_eq!(flux(&nb), -flux(&b), max_relative = 1e-13);
        }
    }

    #[test]
    fn xi_derivative_matches_gauge_potential() {
        let b = uniform_b(2.0);
        let h = 1e-6;
        for &r in &[0.2, 0.7, 1.5, 3.0] {
            let d = (xi(&b, r + h) - xi(&b, r - h)) / (2.0 * h);
            assert!((d + azimuthal_potential(&b, r)).abs() <= 1e-6);
        }
    }

    #[test]
    fn setup_counts() {
        let s = setup(uniform_b(2.0), unit_v()).unwrap(); // flux 1
        assert_eq!(s.n_zero_modes(), 0);
        assert_eq!(s.n_prime(), 2);
        assert_eq!(s.mu_frac(), 0.0);
        assert!(s.integer_flux());

        let s = setup(uniform_b(5.0), unit_v()).unwrap(); // flux 2.5
        assert_eq!(s.n_zero_modes(), 2);
        assert_eq!(s.n_prime(), 3);
        assert_relative_eq!(s.mu_frac(), 0.5, max_relative = 1e-13);

        let b = RadialProfile::new(
            ProfileKind::Magnetic,
            vec![
                Piece { lo: 0.0, hi: 1.0, coeffs: vec![2.0] },
                Piece { lo: 1.0, hi: 2f64.sqrt(), coeffs: vec![-2.0] },
            ],
        )
        .unwrap();
        let s = setup(b, unit_v()).unwrap(); // flux 0
        assert_eq!(s.n_zero_modes(), 0);
        assert_eq!(s.n_prime(), 2);
        assert_relative_eq!(s.radius(), 2.0 * 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_pieces() {
        let overlap = RadialProfile::new(
            ProfileKind::Magnetic,
            vec![
                Piece { lo: 0.0, hi: 1.0, coeffs: vec![1.0] },
                Piece { lo: 0.5, hi: 2.0, coeffs: vec![1.0] },
            ],
        );
        assert!(overlap.is_err());
        let gap = RadialProfile::new(
            ProfileKind::Magnetic,
            vec![
                Piece { lo: 0.0, hi: 1.0, coeffs: vec![1.0] },
                Piece { lo: 1.5, hi: 2.0, coeffs: vec![1.0] },
            ],
        );
        assert!(gap.is_err());
    }
}
