//! Muckenhoupt/Hardy certification: a channel whose zero mode grows at
//! infinity carries no negative eigenvalue for alpha below 1/(4 muck_sup).

use crate::channels::{virtual_channels, zero_mode, Channel, DecayClass, Spin, ZeroMode};
use crate::error::{Error, Result};
use crate::fields::{FieldSetup, RadialProfile};
use crate::quad;

pub const DEFAULT_M_MAX: i64 = 16;

#[derive(Debug, Clone, Copy)]
pub struct HardyCertificate {
    pub channel: Channel,
    /// sup_r int_0^r V omega^2 rho d rho * int_r^inf omega^{-2} rho^{-1} d rho.
    pub muck_sup: f64,
    /// Largest certified coupling, 1/(4 muck_sup); +inf when V vanishes.
    pub alpha_threshold: f64,
}

/// Result of certifying every non-virtual channel of a setup.
#[derive(Debug, Clone)]
pub struct SetupCertificate {
    /// min over certified channels of alpha_threshold.
    pub alpha_c: f64,
    pub per_channel: Vec<HardyCertificate>,
    /// sup over k <= m_max and r of k^{-1} r^{-2k} int_0^r V rho^{2k+1} d rho.
    pub sup_condition_k: f64,
    /// sup over r of |ln r| int_0^r V rho d rho.
    pub sup_condition_log: f64,
}

/// Computes the Muckenhoupt supremum for a growing zero mode.
pub fn muckenhoupt_constant(mode: &ZeroMode, v: &RadialProfile) -> Result<HardyCertificate> {
    if !mode.decay_class().is_growing() {
        return Err(Error::GrowthClass(format!("{:?}", mode.decay_class())));
    }
    let rb = mode.exterior_radius();
    let v_supp = v.support_radius();
    // knots: smooth-piece boundaries of the product N(r) T(r)
    let mut knots: Vec<f64> = v
        .breakpoints()
        .into_iter()
        .filter(|&x| x > 0.0 && x <= v_supp)
        .collect();
    if rb > 0.0 && rb < v_supp {
        knots.push(rb);
    }
    knots.push(v_supp);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (1.0 + b.abs()));

    // cumulative numerator N at the knots
    let mut n_at = vec![0.0f64];
    let mut prev = 0.0;
    let mut acc = 0.0;
    for &k in &knots {
        acc += quad::adaptive(|r| v.eval(r) * mode.eval(r).powi(2) * r, prev, k, 1e-10, 1e-14)?;
        n_at.push(acc);
        prev = k;
    }
    if acc <= 0.0 {
        return Ok(HardyCertificate {
            channel: mode.channel(),
            muck_sup: 0.0,
            alpha_threshold: f64::INFINITY,
        });
    }
    // tail T from each knot: closed form beyond rb, quadrature below
    let t_from = |r: f64| -> Result<f64> {
        if r >= rb {
            mode.inv_square_log_tail(r)
        } else {
            let inner = quad::adaptive(
                |rho| 1.0 / (mode.eval(rho).powi(2) * rho),
                r,
                rb,
                1e-10,
                1e-14,
            )?;
            Ok(inner + mode.inv_square_log_tail(rb)?)
        }
    };
    let product = |r: f64, lo_idx: usize| -> Result<f64> {
        let lo = if lo_idx == 0 { 0.0 } else { knots[lo_idx - 1] };
        let n = n_at[lo_idx]
            + quad::adaptive(|x| v.eval(x) * mode.eval(x).powi(2) * x, lo, r, 1e-10, 1e-14)?;
        Ok(n * t_from(r)?)
    };
    // supremum over (0, v_supp]: the numerator is constant and the tail
    // decreasing beyond v_supp, so nothing is lost by stopping there
    let mut best = 0.0f64;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = 0.0;
    for (i, &hi) in knots.iter().enumerate() {
        // golden-section maximization on the piece, seeded at the endpoints
        let lo_eff = if lo == 0.0 { hi * 1e-6 } else { lo };
        let (mut a, mut b) = (lo_eff, hi);
        for _ in 0..48 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            if product(x1, i)? < product(x2, i)? {
                a = x1;
            } else {
                b = x2;
            }
        }
        let mid = 0.5 * (a + b);
        for &r in &[lo_eff, mid, hi] {
            best = best.max(product(r, i)?);
        }
        lo = hi;
    }
    Ok(HardyCertificate {
        channel: mode.channel(),
        muck_sup: best,
        alpha_threshold: 0.25 / best,
    })
}

/// Certifies all non-virtual channels with |m| <= m_max, both spins, and
/// evaluates the uniform-in-m sup conditions.
pub fn certify_setup(setup: &FieldSetup, m_max: i64) -> Result<SetupCertificate> {
    let aphi = setup.flux().abs();
    if (m_max as f64) < aphi + 2.0 {
        return Err(Error::Domain(format!(
            "m_max = {m_max} must be at least flux + 2 = {}",
            aphi + 2.0
        )));
    }
    let virt: Vec<Channel> = virtual_channels(setup).iter().map(|c| c.channel).collect();
    let v = setup.v_profile();
    let mut per_channel = Vec::new();
    let mut alpha_c = f64::INFINITY;
    for spin in [Spin::Plus, Spin::Minus] {
        for m in -m_max..=m_max {
            let ch = Channel::new(m, spin);
            if virt.contains(&ch) {
                continue;
            }
            let mode = zero_mode(setup, ch)?;
            if mode.decay_class() == DecayClass::BoundedVirtual
                || mode.decay_class() == DecayClass::L2Eigenmode
            {
                return Err(Error::GrowthClass(format!(
                    "channel {ch} outside the virtual list has decay class {:?}",
                    mode.decay_class()
                )));
            }
            let cert = muckenhoupt_constant(&mode, v)?;
            alpha_c = alpha_c.min(cert.alpha_threshold);
            per_channel.push(cert);
        }
    }
    // monotone decay of muck_sup in |m| beyond the virtual window
    let window = aphi.ceil() as i64 + 2;
    for spin in [Spin::Plus, Spin::Minus] {
        for dir in [-1i64, 1] {
            let mut prev: Option<f64> = None;
            let mut m = window * dir;
            while m.abs() <= m_max {
                if let Some(c) = per_channel
                    .iter()
                    .find(|c| c.channel == Channel::new(m, spin))
                {
                    if let Some(p) = prev {
                        if c.muck_sup > p * (1.0 + 1e-9) {
                            return Err(Error::DecayCheck { m: m as i32 });
                        }
                    }
                    prev = Some(c.muck_sup);
                }
                m += dir;
            }
        }
    }
    // uniform-in-m sup conditions on (0, R]
    let r_max = setup.radius();
    let mut grid: Vec<f64> = v
        .breakpoints()
        .into_iter()
        .filter(|&x| x > 0.0 && x <= r_max)
        .collect();
    let mut r = r_max;
    while r > 1e-8 * r_max {
        grid.push(r);
        r *= 0.97;
    }
    let mut sup_k = 0.0f64;
    for k in 1..=m_max.max(1) {
        let kf = k as f64;
        let mut local = 0.0f64;
        for &r in &grid {
            local = local.max(r.powf(-2.0 * kf) * v.moment_to(r, 2 * k as u32 + 1) / kf);
        }
        sup_k = sup_k.max(local);
    }
    let mut sup_log = 0.0f64;
    for &r in &grid {
        sup_log = sup_log.max(r.ln().abs() * v.integral_rho_to(r));
    }
    Ok(SetupCertificate {
        alpha_c,
        per_channel,
        sup_condition_k: sup_k,
        sup_condition_log: sup_log,
    })
}
