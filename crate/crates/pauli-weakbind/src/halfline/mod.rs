//! Half-line eigenvalue problems T_m^± - alpha V on L2(R+, r dr): two
//! independent solvers (shooting, finite elements), trial-function quotients,
//! and the local energy inequality.

pub mod fem;
pub mod shoot;

pub use fem::{count_negative, fem_spectrum, solve_fem, MeshSpec};
pub use shoot::{mismatch, shoot_eigenvalue, solve_shoot};

use crate::channels::{ChannelPotential, ZeroMode};
use crate::error::{Error, Result};
use crate::fields::RadialProfile;
use crate::quad;
use crate::specfun;
use serde::{Deserialize, Serialize};

/// One channel operator perturbed by -alpha V.
#[derive(Debug, Clone)]
pub struct HalfLineProblem {
    pub potential: ChannelPotential,
    pub v: RadialProfile,
    pub alpha: f64,
}

impl HalfLineProblem {
    pub fn new(potential: ChannelPotential, v: RadialProfile, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("coupling must be >= 0, got {alpha}")));
        }
        let r = potential.radius();
        if 2.0 * v.support_radius() > r * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "V must vanish for r >= R/2 = {}, but its support reaches {}",
                r / 2.0,
                v.support_radius()
            )));
        }
        Ok(HalfLineProblem {
            potential,
            v,
            alpha,
        })
    }

    /// Exterior radius R: W(r) = mu^2/r^2 and V(r) = 0 for r >= R/2.
    pub fn radius(&self) -> f64 {
        self.potential.radius()
    }

    /// W(r) - alpha V(r).
    pub fn effective(&self, r: f64) -> f64 {
        self.potential.eval(r) - self.alpha * self.v.eval(r)
    }

    /// Discontinuity locations of the effective potential.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.potential.breakpoints();
        b.extend(self.v.breakpoints());
        b.push(self.radius());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-14 * (1.0 + y.abs()));
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Shoot,
    Fem,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Shoot => "shoot",
            Method::Fem => "fem",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeshInfo {
    pub truncation: f64,
    pub nodes: usize,
}

/// A converged lowest eigenvalue with its eigenfunction samples.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda: f64,
    pub kappa: f64,
    pub method: Method,
    /// (r, psi(r)) normalized so psi(R) = R^{-mu}.
    pub eigenfunction_samples: Vec<(f64, f64)>,
    pub mesh_info: MeshInfo,
    pub match_residual: f64,
}

/// Form value, norm, and Rayleigh quotient of the trial function phi_kappa
/// (the zero mode glued to K_mu(kappa r) at R).
#[derive(Debug, Clone, Copy)]
pub struct TrialQuotient {
    pub form_value: f64,
    pub norm_sq: f64,
    pub quotient: f64,
}

/// Evaluates the closed-form trial quotient at the given kappa.
///
/// The interior contribution of the form is -mu R^{-2mu} (from T psi0 = 0);
/// the exterior pieces are the closed forms
///   A(k) = (k^2 R^2/2)(K_mu K_{mu+2} - K_{mu+1}^2)(kR) - mu K_mu^2(kR),
///   J(k) = (R^2/2)(K_{1-mu} K_{1+mu} - K_mu^2)(kR).
pub fn trial_quotient(
    problem: &HalfLineProblem,
    kappa: f64,
    psi0: &ZeroMode,
) -> Result<TrialQuotient> {
    let mu = problem.potential.tail_mu();
    let r = problem.radius();
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("trial kappa must be > 0, got {kappa}")));
    }
    let psi_r = psi0.eval(r);
    if (psi_r - r.powf(-mu)).abs() > 1e-6 * r.powf(-mu) {
        return Err(Error::Domain(format!(
            "trial mode is not normalized to r^-mu at R: psi(R) = {psi_r}"
        )));
    }
    let x = kappa * r;
    let kmu = specfun::bessel_k(mu, x)?.value;
    let kmu1 = specfun::bessel_k(mu + 1.0, x)?.value;
    let kmu2 = specfun::bessel_k(mu + 2.0, x)?.value;
    let k1m = specfun::bessel_k((1.0 - mu).abs(), x)?.value;
    let k1p = specfun::bessel_k(1.0 + mu, x)?.value;
    let a = 0.5 * x * x * (kmu * kmu2 - kmu1 * kmu1) - mu * kmu * kmu;
    let j = 0.5 * r * r * (k1m * k1p - kmu * kmu);
    let r2mu = r.powf(-2.0 * mu);
    let form_value = -mu * r2mu + r2mu / (kmu * kmu) * a;
    let interior = quad::adaptive_with_breaks(
        |rho| psi0.eval(rho).powi(2) * rho,
        0.0,
        r,
        &problem.breakpoints(),
        1e-10,
        1e-13,
    )?;
    let norm_sq = interior + r2mu / (kmu * kmu) * j;
    let quotient = (form_value - problem.alpha * psi0.v_coeff()) / norm_sq;
    Ok(TrialQuotient {
        form_value,
        norm_sq,
        quotient,
    })
}

/// Both sides of the local energy inequality
/// int_0^R (|psi'|^2 + W |psi|^2) r dr >= -mu |psi(R)|^2
/// evaluated on the piecewise-linear interpolant (in s = ln r) of the samples.
pub fn local_energy_check(
    problem: &HalfLineProblem,
    samples: &[(f64, f64)],
) -> Result<(f64, f64, bool)> {
    let r = problem.radius();
    let mu = problem.potential.tail_mu();
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(rr, _)| rr > 0.0 && rr <= r * (1.0 + 1e-12))
        .map(|&(rr, p)| (rr.ln(), p))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(
            "local energy check needs at least 3 samples in (0, R]".into(),
        ));
    }
    let psi_r = pts.last().unwrap().1;
    // 4-point Gauss on each element of the interpolant; W only (the check is
    // for the unperturbed form)
    const GX: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const GW: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    let s_breaks: Vec<f64> = problem.breakpoints().iter().map(|b| b.ln()).collect();
    let mut lhs = 0.0;
    for w in pts.windows(2) {
        let (s0, p0) = w[0];
        let (s1, p1) = w[1];
        let h = s1 - s0;
        if h <= 0.0 {
            continue;
        }
        lhs += (p1 - p0) * (p1 - p0) / h;
        // integrate the W term in smooth sub-pieces so a potential jump inside
        // the element cannot bias the quadrature
        let mut cuts = vec![s0];
        cuts.extend(s_breaks.iter().copied().filter(|&b| b > s0 && b < s1));
        cuts.push(s1);
        for c in cuts.windows(2) {
            let hh = c[1] - c[0];
            for (&x, &gw) in GX.iter().zip(GW.iter()) {
                let s = 0.5 * (c[0] + c[1]) + 0.5 * hh * x;
                let t = (s - s0) / h;
                let p = p0 + (p1 - p0) * t;
                let rr = s.exp();
                lhs += 0.5 * hh * gw * problem.potential.eval(rr) * rr * rr * p * p;
            }
        }
    }
    let rhs = -mu * psi_r * psi_r;
    let holds = lhs >= rhs - 1e-8 * rhs.abs();
    Ok((lhs, rhs, holds))
}
