//! Shooting solver: integrate the regular solution in s = ln r and match the
//! exterior Bessel tail K_mu(kappa r) at R.

use super::{EigenResult, HalfLineProblem, MeshInfo, Method};
use crate::error::{Error, Result};
use crate::ode;
use crate::roots;
use crate::specfun;

/// Start of the integration range relative to R.
const R_MIN_FACTOR: f64 = 1e-8;
const ODE_RTOL: f64 = 1e-12;

/// Normalized Wronskian mismatch between the interior regular solution and
/// the decaying exterior solution at R:
///   G(kappa) = (p K - psi x K') / (|(psi,p)| |(K, x K')|),  x = kappa R.
/// G vanishes exactly at eigenvalues lambda = -kappa^2 and, unlike the
/// log-derivative difference, has no poles where psi(R) = 0.
pub fn mismatch(problem: &HalfLineProblem, kappa: f64) -> Result<f64> {
    let (psi, p) = interior_at_r(problem, kappa)?;
    let r = problem.radius();
    let mu = problem.potential.tail_mu();
    let e = specfun::bessel_k(mu, kappa * r)?;
    let k = e.value;
    let xkp = kappa * r * e.derivative;
    Ok((p * k - psi * xkp) / (psi.hypot(p) * k.hypot(xkp)))
}

fn interior_at_r(problem: &HalfLineProblem, kappa: f64) -> Result<(f64, f64)> {
    let r = problem.radius();
    let s0 = (R_MIN_FACTOR * r).ln();
    let idx = problem.potential.origin_index();
    let k2 = kappa * kappa;
    let out = [r.ln()];
    let sol = ode::integrate(
        |s, y| {
            let rr = s.exp();
            [y[1], rr * rr * (problem.effective(rr) + k2) * y[0]]
        },
        s0,
        [1.0, idx],
        &out,
        ODE_RTOL,
    )?;
    Ok((sol.states[0][0], sol.states[0][1]))
}

/// Root-finds the mismatch over ln kappa inside the given bracket.
pub fn shoot_eigenvalue(problem: &HalfLineProblem, bracket: (f64, f64)) -> Result<EigenResult> {
    let (k_lo, k_hi) = bracket;
    if !(k_lo > 0.0 && k_hi > k_lo) {
        return Err(Error::Domain(format!(
            "invalid shooting bracket ({k_lo}, {k_hi})"
        )));
    }
    let mut failure: Option<Error> = None;
    {
        let g = |t: f64| -> f64 {
            match mismatch(problem, t.exp()) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        };
        let t = roots::brent(g, k_lo.ln(), k_hi.ln(), 1e-13, 1e-13, 200)?;
        if let Some(e) = failure {
            return Err(e);
        }
        build_result(problem, t.exp())
    }
}

/// Shooting with the spec bracket [kappa_est/2, 2 kappa_est], widened
/// geometrically up to 2^10 on failure.
pub fn solve_shoot(problem: &HalfLineProblem, kappa_est: f64) -> Result<EigenResult> {
    if !(kappa_est > 0.0) {
        return Err(Error::Domain(format!(
            "kappa estimate must be > 0, got {kappa_est}"
        )));
    }
    let mut widen = 1.0;
    let mut last = Error::NoRoot {
        lo: kappa_est / 2.0,
        hi: kappa_est * 2.0,
    };
    for _ in 0..=10 {
        let lo = (kappa_est / (2.0 * widen)).max(1e-290);
        let hi = kappa_est * 2.0 * widen;
        match shoot_eigenvalue(problem, (lo, hi)) {
            Ok(res) => return Ok(res),
            Err(e @ Error::NoRoot { .. }) => last = e,
            Err(e) => return Err(e),
        }
        widen *= 2.0;
    }
    Err(last)
}

fn build_result(problem: &HalfLineProblem, kappa: f64) -> Result<EigenResult> {
    let r = problem.radius();
    let mu = problem.potential.tail_mu();
    let s0 = (R_MIN_FACTOR * r).ln();
    let s_r = r.ln();
    let s_end = (2.0 * r).ln();
    let n = 240usize;
    let mut grid: Vec<f64> = (0..=n)
        .map(|i| s0 + (s_end - s0) * i as f64 / n as f64)
        .collect();
    grid.push(s_r);
    for bp in problem.breakpoints() {
        if bp > R_MIN_FACTOR * r && bp < 2.0 * r {
            grid.push(bp.ln());
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let k2 = kappa * kappa;
    let idx = problem.potential.origin_index();
    let sol = ode::integrate(
        |s, y| {
            let rr = s.exp();
            [y[1], rr * rr * (problem.effective(rr) + k2) * y[0]]
        },
        s0,
        [1.0, idx],
        &grid,
        ODE_RTOL,
    )?;
    let i_r = grid
        .iter()
        .position(|&s| (s - s_r).abs() < 1e-12)
        .expect("matching radius is on the sample grid");
    let (psi_r, p_r) = (sol.states[i_r][0], sol.states[i_r][1]);
    let sl_r = sol.scale_logs[i_r];
    let e = specfun::bessel_k(mu, kappa * r)?;
    let k = e.value;
    let xkp = kappa * r * e.derivative;
    let residual = (p_r * k - psi_r * xkp) / (psi_r.hypot(p_r) * k.hypot(xkp));

    let scale = r.powf(-mu) / psi_r;
    let samples: Vec<(f64, f64)> = grid
        .iter()
        .zip(sol.states.iter().zip(sol.scale_logs.iter()))
        .map(|(&s, (y, &sl))| (s.exp(), y[0] * (sl - sl_r).exp() * scale))
        .collect();
    Ok(EigenResult {
        lambda: -kappa * kappa,
        kappa,
        method: Method::Shoot,
        eigenfunction_samples: samples,
        mesh_info: MeshInfo {
            truncation: 2.0 * r,
            nodes: grid.len(),
        },
        match_residual: residual.abs(),
    })
}
