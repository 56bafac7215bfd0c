//! Leading-order weak-coupling eigenvalue laws per channel and the optimal
//! trial parameter kappa(alpha).

use crate::channels::{virtual_channels, zero_mode, Channel, Regime};
use crate::error::{Error, Result};
use crate::fields::FieldSetup;
use crate::specfun;

#[derive(Debug, Clone)]
pub struct AsymptoticPrediction {
    pub channel: Option<Channel>,
    pub regime: Regime,
    pub mu: f64,
    pub v: f64,
    /// Zero-mode norm, used only when mu > 1.
    pub norm_sq: Option<f64>,
    pub lambda_leading: f64,
    pub remainder_order: &'static str,
}

/// Four-regime leading eigenvalue for a half-line channel with tail exponent
/// mu, coupling coefficient v and coupling alpha.
pub fn predict_halfline(
    mu: f64,
    v: f64,
    alpha: f64,
    norm_sq: Option<f64>,
) -> Result<AsymptoticPrediction> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotics need v > 0, got {v} (v = 0 is out of scope)"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("coupling must be > 0, got {alpha}")));
    }
    let regime = Regime::of_mu(mu);
    let (lambda, remainder) = match regime {
        Regime::Exponential => ((-2.0 / (alpha * v)).exp().max(f64::MIN_POSITIVE) * -1.0, "O(alpha)"),
        Regime::Power => (
            -specfun::c_mu(mu)? * (alpha * v).powf(1.0 / mu),
            "O(alpha^min{1, 1/mu - 1})",
        ),
        Regime::Log => (
            -2.0 * alpha * v / alpha.ln().abs(),
            "O(ln|ln alpha| / |ln alpha|)",
        ),
        Regime::Linear => {
            let n = norm_sq.ok_or_else(|| {
                Error::Domain("linear regime (mu > 1) requires the zero-mode norm".into())
            })?;
            let tag = if (mu - 2.0).abs() <= 1e-9 {
                "O(alpha |ln alpha|)"
            } else {
                "O(alpha^min{1, mu - 1})"
            };
            (-alpha * v / n, tag)
        }
    };
    Ok(AsymptoticPrediction {
        channel: None,
        regime,
        mu,
        v,
        norm_sq,
        lambda_leading: lambda,
        remainder_order: remainder,
    })
}

/// Predictions for all Nprime weakly bound states of the Pauli operator,
/// sorted by leading eigenvalue ascending.
pub fn predict_pauli(setup: &FieldSetup, alpha: f64) -> Result<Vec<AsymptoticPrediction>> {
    let mut out = Vec::new();
    for vc in virtual_channels(setup) {
        let mode = zero_mode(setup, vc.channel)?;
        let mut p = predict_halfline(vc.mu, mode.v_coeff(), alpha, mode.norm_sq())?;
        p.channel = Some(vc.channel);
        out.push(p);
    }
    out.sort_by(|a, b| a.lambda_leading.partial_cmp(&b.lambda_leading).unwrap());
    Ok(out)
}

/// The near-optimal trial parameter: kappa^2 = C e^{-2/(alpha v)} (mu = 0,
/// C = 1/4), (Gamma(mu) alpha v / (2^{1-2mu} Gamma(1-mu)))^{1/mu}
/// (mu in (0,1)), or 2 alpha v / (-ln alpha) (mu = 1).
pub fn optimal_kappa(mu: f64, v: f64, alpha: f64) -> Result<f64> {
    if !(v > 0.0 && alpha > 0.0) {
        return Err(Error::Domain(format!(
            "optimal_kappa needs v > 0 and alpha > 0, got v = {v}, alpha = {alpha}"
        )));
    }
    let k2 = match Regime::of_mu(mu) {
        Regime::Exponential => 0.25 * (-2.0 / (alpha * v)).exp(),
        Regime::Power => (specfun::gamma(mu)? * alpha * v
            / (2f64.powf(1.0 - 2.0 * mu) * specfun::gamma(1.0 - mu)?))
        .powf(1.0 / mu),
        Regime::Log => {
            if alpha >= 1.0 {
                return Err(Error::Domain(
                    "log-regime kappa needs alpha < 1 so that -ln alpha > 0".into(),
                ));
            }
            2.0 * alpha * v / (-alpha.ln())
        }
        Regime::Linear => {
            return Err(Error::Domain(format!(
                "mu = {mu} > 1: the zero mode itself is the trial function, no kappa needed"
            )))
        }
    };
    Ok(k2.sqrt())
}

/// Inverse of f(t) = -t ln t on (0, 1/e]; Newton iteration.
pub fn invert_tlogt(s: f64) -> Result<f64> {
    let emax = (-1.0f64).exp();
    if !(s > 0.0 && s <= emax * (1.0 + 1e-14)) {
        return Err(Error::Domain(format!(
            "invert_tlogt needs s in (0, 1/e], got {s}"
        )));
    }
    if (s - emax).abs() <= 1e-15 {
        return Ok(emax);
    }
    // f is increasing on (0, 1/e) with f' = -ln t - 1
    let mut t = s / (-s.ln());
    for _ in 0..100 {
        let f = -t * t.ln() - s;
        let fp = -t.ln() - 1.0;
        let step = f / fp;
        t -= step;
        if t <= 0.0 {
            t = 1e-300;
        }
        if step.abs() <= 1e-15 * t {
            break;
        }
    }
    Ok(t)
}
