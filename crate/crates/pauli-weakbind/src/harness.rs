//! Alpha-sweep benchmarks: numeric eigenvalues against the leading
//! asymptotic laws, empirical remainder-exponent fits, and global count and
//! symmetry checks.

use crate::asymptotics::{optimal_kappa, predict_halfline};
use crate::channels::{
    channel_potential, virtual_channels, zero_mode, Channel, Regime, VirtualChannel,
};
use crate::error::{Error, Result};
use crate::fields::FieldSetup;
use crate::halfline::{
    count_negative, solve_fem, solve_shoot, trial_quotient, EigenResult, HalfLineProblem, Method,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One (channel, alpha, method) comparison. Solver failures are recorded
/// in-row (`error` set, numeric fields NaN) and never abort a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub channel_m: i64,
    pub spin: char,
    pub mu: f64,
    pub regime_label: &'static str,
    pub alpha: f64,
    pub lambda_numeric: f64,
    pub lambda_predicted: f64,
    /// lambda_numeric / lambda_predicted, except in the exponential regime
    /// where it is alpha ln|lambda| / (-2/v): the theorem there controls
    /// ln|lambda|, not lambda itself.
    pub ratio: f64,
    pub method: &'static str,
    pub residual: f64,
    /// Rayleigh quotient of the matched trial function; an upper bound on
    /// lambda_numeric whenever present.
    pub upper_bound: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn channel(&self) -> Channel {
        Channel::new(
            self.channel_m,
            if self.spin == '+' {
                crate::channels::Spin::Plus
            } else {
                crate::channels::Spin::Minus
            },
        )
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Least-squares remainder fit for one channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderFit {
    pub channel_m: i64,
    pub spin: char,
    /// Slope of ln|ratio - 1| against the regime's small parameter
    /// (ln alpha, or ln(ln|ln alpha| / |ln alpha|) in the log regime).
    pub exponent: f64,
    pub intercept: f64,
    /// Coefficient of determination of the fit.
    pub goodness: f64,
    pub alpha_range: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountEntry {
    pub alpha: f64,
    pub total: usize,
    pub n_prime: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub flux: f64,
    pub n_prime: u32,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<RemainderFit>,
    pub count_table: Vec<CountEntry>,
}

/// Default geometric alpha grid for a regime: 8 points per decade, over
/// [1e-3, 1e-1] (power/log/linear) or [5e-2, 5e-1] (exponential, keeping
/// kappa representable), decreasing.
pub fn default_alphas(regime: Regime) -> Vec<f64> {
    let (lo, hi) = match regime {
        Regime::Exponential => (5e-2, 5e-1),
        _ => (1e-3, 1e-1),
    };
    let step = 10f64.powf(1.0 / 8.0);
    let mut out = Vec::new();
    let mut a = hi;
    while a >= lo * (1.0 - 1e-12) {
        out.push(a);
        a /= step;
    }
    out
}

fn solve_one(problem: &HalfLineProblem, kappa_est: f64, method: Method) -> Result<EigenResult> {
    match method {
        Method::Shoot => solve_shoot(problem, kappa_est),
        Method::Fem => solve_fem(problem, kappa_est),
    }
}

/// Solves one virtual channel at one coupling and assembles the comparison
/// row. Used by `sweep`; exposed for targeted runs.
pub fn run_row(setup: &FieldSetup, vc: &VirtualChannel, alpha: f64, method: Method) -> SweepRow {
    let mut row = SweepRow {
        channel_m: vc.channel.m,
        spin: vc.channel.spin.symbol(),
        mu: vc.mu,
        regime_label: vc.regime.label(),
        alpha,
        lambda_numeric: f64::NAN,
        lambda_predicted: f64::NAN,
        ratio: f64::NAN,
        method: method.label(),
        residual: f64::NAN,
        upper_bound: None,
        error: None,
    };
    let attempt = || -> Result<(f64, f64, f64, Option<f64>, f64)> {
        let mode = zero_mode(setup, vc.channel)?;
        let pred = predict_halfline(vc.mu, mode.v_coeff(), alpha, mode.norm_sq())?;
        let problem = HalfLineProblem::new(
            channel_potential(setup, vc.channel),
            setup.v_profile().clone(),
            alpha,
        )?;
        let kappa_est = match vc.regime {
            Regime::Linear => (-pred.lambda_leading).sqrt(),
            _ => optimal_kappa(vc.mu, mode.v_coeff(), alpha)?,
        };
        // FEM cannot resolve kappa below ~1e-7/R (truncation would need to
        // reach many decades past R); shooting has no such floor
        if method == Method::Fem && kappa_est < 1e-7 / problem.radius() {
            return Err(Error::Domain(format!(
                "predicted kappa = {kappa_est:.3e} below the FEM-resolvable threshold 1e-7/R"
            )));
        }
        let result = solve_one(&problem, kappa_est, method)?;
        let ratio = match vc.regime {
            Regime::Exponential => {
                alpha * result.lambda.abs().ln() / (-2.0 / mode.v_coeff())
            }
            _ => result.lambda / pred.lambda_leading,
        };
        // variational upper bound from the matched trial function: the glued
        // zero mode for decaying/bounded tails, the zero mode itself beyond
        let upper = match vc.regime {
            Regime::Linear => Some(pred.lambda_leading),
            _ => trial_quotient(&problem, kappa_est, &mode).ok().map(|t| t.quotient),
        };
        Ok((
            result.lambda,
            pred.lambda_leading,
            ratio,
            upper,
            result.match_residual,
        ))
    };
    match attempt() {
        Ok((lambda, pred, ratio, upper, residual)) => {
            row.lambda_numeric = lambda;
            row.lambda_predicted = pred;
            row.ratio = ratio;
            row.upper_bound = upper;
            row.residual = residual;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs the full alpha sweep over the given channels (all virtual channels
/// when `channels` is None) with the given methods. Rows are computed in
/// parallel and merged deterministically, sorted by (channel, alpha
/// descending, method).
pub fn sweep(
    setup: &FieldSetup,
    alphas: &[f64],
    channels: Option<&[Channel]>,
    methods: &[Method],
) -> Result<SweepReport> {
    if alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Domain("sweep couplings must be positive".into()));
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain(
            "sweep couplings must be strictly decreasing".into(),
        ));
    }
    let virt = virtual_channels(setup);
    let selected: Vec<&VirtualChannel> = match channels {
        None => virt.iter().collect(),
        Some(subset) => {
            let mut out = Vec::new();
            for ch in subset {
                let vc = virt.iter().find(|v| v.channel == *ch).ok_or_else(|| {
                    Error::Domain(format!("channel {ch} is not a virtual channel of this setup"))
                })?;
                out.push(vc);
            }
            out
        }
    };
    let tasks: Vec<(&VirtualChannel, f64, Method)> = selected
        .iter()
        .flat_map(|vc| {
            alphas.iter().flat_map(move |&a| {
                methods.iter().map(move |&m| (*vc, a, m))
            })
        })
        .collect();
    let mut rows: Vec<SweepRow> = tasks
        .par_iter()
        .map(|(vc, a, m)| run_row(setup, vc, *a, *m))
        .collect();
    rows.sort_by(|x, y| {
        (x.channel_m, x.spin, x.method)
            .partial_cmp(&(y.channel_m, y.spin, y.method))
            .unwrap()
            .then(y.alpha.partial_cmp(&x.alpha).unwrap())
    });
    let mut fits = Vec::new();
    let mut report = SweepReport {
        flux: setup.flux(),
        n_prime: setup.n_prime(),
        rows,
        fits: Vec::new(),
        count_table: Vec::new(),
    };
    for vc in &selected {
        if let Ok(fit) = fit_remainder(&report, vc.channel) {
            fits.push(fit);
        }
    }
    report.fits = fits;
    Ok(report)
}

/// Fits the empirical remainder exponent for one channel: the slope of
/// ln|ratio - 1| against ln alpha (or against ln(ln|ln alpha|/|ln alpha|)
/// in the log regime, where that is the predicted remainder scale).
pub fn fit_remainder(report: &SweepReport, channel: Channel) -> Result<RemainderFit> {
    let mut pts: Vec<(f64, f64, f64)> = Vec::new(); // (alpha, x, y)
    for row in &report.rows {
        if row.channel() != channel || !row.ok() || !row.ratio.is_finite() {
            continue;
        }
        if pts.iter().any(|p| (p.0 - row.alpha).abs() < 1e-14 * row.alpha) {
            continue; // one point per coupling even when both methods ran
        }
        let dev = (row.ratio - 1.0).abs();
        if dev <= 0.0 {
            continue;
        }
        let x = if row.regime_label == "log" {
            let l = row.alpha.ln().abs();
            (l.ln() / l).ln()
        } else {
            row.alpha.ln()
        };
        pts.push((row.alpha, x, dev.ln()));
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "remainder fit for {channel} needs >= 4 successful rows, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.2 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.2 - slope * p.1 - intercept).powi(2))
        .sum();
    let goodness = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let amin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let amax = pts.iter().map(|p| p.0).fold(0.0f64, f64::max);
    Ok(RemainderFit {
        channel_m: channel.m,
        spin: channel.spin.symbol(),
        exponent: slope,
        intercept,
        goodness,
        alpha_range: (amin, amax),
        points: pts.len(),
    })
}

/// Totals the negative eigenvalue counts over |m| <= m_max, both spins, and
/// returns (total, Nprime). Channels beyond m_max must be covered by a
/// hardy certificate for the total to be meaningful.
pub fn count_check(setup: &FieldSetup, alpha: f64, m_max: i64) -> Result<(usize, u32)> {
    let channels: Vec<Channel> = (-m_max..=m_max)
        .flat_map(|m| {
            [
                Channel::new(m, crate::channels::Spin::Plus),
                Channel::new(m, crate::channels::Spin::Minus),
            ]
        })
        .collect();
    let counts: Vec<Result<usize>> = channels
        .par_iter()
        .map(|&ch| {
            let problem = HalfLineProblem::new(
                channel_potential(setup, ch),
                setup.v_profile().clone(),
                alpha,
            )?;
            count_negative(&problem)
        })
        .collect();
    let mut total = 0usize;
    for c in counts {
        total += c?;
    }
    Ok((total, setup.n_prime()))
}

/// Anti-unitary symmetry: the sorted negative spectra for B and -B agree to
/// relative 1e-8 (channel map (m, s) -> (-m, -s)).
pub fn conjugation_check(setup: &FieldSetup, alpha: f64) -> Result<bool> {
    let spectrum = |s: &FieldSetup| -> Result<Vec<f64>> {
        let mut lams = Vec::new();
        for vc in virtual_channels(s) {
            let row = run_row(s, &vc, alpha, Method::Shoot);
            match row.error {
                None => lams.push(row.lambda_numeric),
                Some(e) => return Err(Error::Domain(e)),
            }
        }
        lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(lams)
    };
    let a = spectrum(setup)?;
    let b = spectrum(&setup.reflected())?;
    Ok(a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(x, y)| (x - y).abs() <= 1e-8 * x.abs().max(y.abs())))
}

/// Midpoint concavity test on a channel's successful rows: for consecutive
/// couplings a > b > c, lambda(b) must lie at or above the chord through
/// (a, lambda(a)) and (c, lambda(c)), up to relative slack.
pub fn concavity_check(report: &SweepReport, channel: Channel) -> bool {
    let rows: Vec<&SweepRow> = report
        .rows
        .iter()
        .filter(|r| r.channel() == channel && r.ok() && r.method == "shoot")
        .collect();
    for w in rows.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let t = (b.alpha - c.alpha) / (a.alpha - c.alpha);
        let chord = t * a.lambda_numeric + (1.0 - t) * c.lambda_numeric;
        if b.lambda_numeric < chord - 1e-7 * chord.abs() {
            return false;
        }
    }
    true
}
