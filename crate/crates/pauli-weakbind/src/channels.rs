//! Angular-momentum channels: effective potentials W_m^±, zero-mode functions
//! omega_m^±, their coefficients, and the classification of virtual channels.

use crate::error::{Error, Result};
use crate::fields::FieldSetup;
#[cfg(test)]
use crate::fields::RadialProfile;
use crate::quad;
use serde::{Deserialize, Serialize};

/// Tolerance for snapping the tail exponent of a channel to 0 or 1.
const MU_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Spin::Plus => '+',
            Spin::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub m: i64,
    pub spin: Spin,
}

impl Channel {
    pub fn new(m: i64, spin: Spin) -> Self {
        Channel { m, spin }
    }

    /// Image under complex conjugation (B -> -B): m negated, spin swapped.
    pub fn conjugated(self) -> Self {
        Channel {
            m: -self.m,
            spin: self.spin.flipped(),
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.m, self.spin.symbol())
    }
}

/// Large-r behavior of a zero mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayClass {
    L2Eigenmode,
    BoundedVirtual,
    LogGrowing,
    PowerGrowing,
}

impl DecayClass {
    pub fn is_growing(self) -> bool {
        matches!(self, DecayClass::LogGrowing | DecayClass::PowerGrowing)
    }
}

/// Weak-coupling regime of a channel, determined by the tail exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Exponential,
    Power,
    Log,
    Linear,
}

impl Regime {
    pub fn of_mu(mu: f64) -> Regime {
        if mu.abs() <= MU_TOL {
            Regime::Exponential
        } else if (mu - 1.0).abs() <= MU_TOL {
            Regime::Log
        } else if mu < 1.0 {
            Regime::Power
        } else {
            Regime::Linear
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Exponential => "exponential",
            Regime::Power => "power",
            Regime::Log => "log",
            Regime::Linear => "linear",
        }
    }
}

/// The half-line potential W_m^±(r) = (b(r) + m/r)^2 ± B(r).
#[derive(Debug, Clone)]
pub struct ChannelPotential {
    channel: Channel,
    tail_mu: f64,
    radius: f64,
    kind: PotentialKind,
}

#[derive(Debug, Clone)]
enum PotentialKind {
    Field(FieldSetup),
    /// W(r) = tail_mu^2 / r^2 for all r (no magnetic interior).
    Free,
}

impl ChannelPotential {
    /// Synthetic channel with W = mu^2/r^2 everywhere; used for square-well
    /// style reference problems.
    pub fn free(mu: f64, radius: f64) -> Self {
        ChannelPotential {
            channel: Channel::new(0, Spin::Minus),
            tail_mu: mu,
            radius,
            kind: PotentialKind::Free,
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn tail_mu(&self) -> f64 {
        self.tail_mu
    }

    /// Radius beyond which W(r) = tail_mu^2/r^2 exactly.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Free => self.tail_mu * self.tail_mu / (r * r),
            PotentialKind::Field(s) => {
                if r >= s.b_profile().support_radius() {
                    self.tail_mu * self.tail_mu / (r * r)
                } else {
                    let t = s.b(r) + self.channel.m as f64 / r;
                    t * t + self.channel.spin.sign() * s.b_profile().eval(r)
                }
            }
        }
    }

    /// Power of the regular solution at the origin: psi ~ r^{origin_index}.
    pub fn origin_index(&self) -> f64 {
        match &self.kind {
            PotentialKind::Free => self.tail_mu,
            PotentialKind::Field(_) => self.channel.m.unsigned_abs() as f64,
        }
    }

    /// Interior discontinuity locations (piece boundaries of B).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Free => Vec::new(),
            PotentialKind::Field(s) => s.b_profile().breakpoints(),
        }
    }
}

/// Snapped tail exponent m + Phi of a channel.
fn channel_gamma(setup: &FieldSetup, m: i64) -> f64 {
    if setup.integer_flux() {
        m as f64 + setup.flux().round()
    } else {
        m as f64 + setup.flux()
    }
}

pub fn channel_potential(setup: &FieldSetup, channel: Channel) -> ChannelPotential {
    let gamma = channel_gamma(setup, channel.m);
    ChannelPotential {
        channel,
        tail_mu: gamma.abs(),
        radius: setup.radius(),
        kind: PotentialKind::Field(setup.clone()),
    }
}

/// Exterior closed form of the (unscaled) zero mode for r beyond the support
/// of B: either a r^g + b r^{-g}, or a + ln r when the exponent vanishes.
#[derive(Debug, Clone, Copy)]
enum Exterior {
    Power { a: f64, b: f64, g: f64 },
    Log { a: f64 },
}

impl Exterior {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            Exterior::Power { a, b, g } => a * r.powf(g) + b * r.powf(-g),
            Exterior::Log { a } => a + r.ln(),
        }
    }

    fn eval_derivative(&self, r: f64) -> f64 {
        match *self {
            Exterior::Power { a, b, g } => g * (a * r.powf(g - 1.0) - b * r.powf(-g - 1.0)),
            Exterior::Log { .. } => 1.0 / r,
        }
    }
}

/// A positive solution of the zero-coupling channel equation T omega = 0.
#[derive(Debug, Clone)]
pub struct ZeroMode {
    channel: Channel,
    decay_class: DecayClass,
    /// Decaying-mode tail exponent (omega = r^{-mu} outside the support).
    tail_mu: f64,
    v_coeff: f64,
    norm_sq: Option<f64>,
    scale: f64,
    form: ModeForm,
}

#[derive(Debug, Clone)]
enum ModeForm {
    Field {
        setup: FieldSetup,
        /// base(r) = r^pm e^{sx xi(r)} [ * Q(r) ]
        pm: f64,
        sx: f64,
        /// Q(r) = int_0^r e^{-2 sx xi} rho^qp d rho, present for the integral cases.
        q: Option<QTable>,
        ext: Exterior,
    },
    /// omega = r^mu everywhere (synthetic free-tail mode).
    FreePower { mu: f64 },
}

/// Cumulative values of the Q integral at the B-profile breakpoints.
#[derive(Debug, Clone)]
struct QTable {
    qp: f64,
    cum: Vec<(f64, f64)>,
}

impl ZeroMode {
    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn decay_class(&self) -> DecayClass {
        self.decay_class
    }

    pub fn tail_mu(&self) -> f64 {
        self.tail_mu
    }

    /// v = int V omega^2 r dr.
    pub fn v_coeff(&self) -> f64 {
        self.v_coeff
    }

    /// int omega^2 r dr; None encodes +infinity.
    pub fn norm_sq(&self) -> Option<f64> {
        self.norm_sq
    }

    /// Synthetic mode omega(r) = r^mu for growth-bound experiments.
    pub fn free_power(mu: f64) -> ZeroMode {
        let class = if mu > MU_TOL {
            DecayClass::PowerGrowing
        } else if mu < -1.0 - MU_TOL {
            DecayClass::L2Eigenmode
        } else {
            DecayClass::BoundedVirtual
        };
        ZeroMode {
            channel: Channel::new(0, Spin::Minus),
            decay_class: class,
            tail_mu: (-mu).max(0.0),
            v_coeff: 0.0,
            norm_sq: None,
            scale: 1.0,
            form: ModeForm::FreePower { mu },
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.scale * self.base(r)
    }

    /// Radius beyond which the mode has its exterior closed form.
    pub fn exterior_radius(&self) -> f64 {
        match &self.form {
            ModeForm::FreePower { .. } => 0.0,
            ModeForm::Field { setup, .. } => setup.b_profile().support_radius(),
        }
    }

    /// int_r^infty omega^{-2} rho^{-1} d rho in closed form; requires
    /// r >= exterior_radius. Infinite for bounded or decaying modes.
    pub fn inv_square_log_tail(&self, r: f64) -> Result<f64> {
        if r < self.exterior_radius() * (1.0 - 1e-12) {
            return Err(Error::Domain(format!(
                "tail integral needs r >= {}, got {r}",
                self.exterior_radius()
            )));
        }
        let s2 = self.scale * self.scale;
        match &self.form {
            ModeForm::FreePower { mu } => {
                if *mu > MU_TOL {
                    Ok(r.powf(-2.0 * mu) / (2.0 * mu) / s2)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            ModeForm::Field { ext, .. } => match *ext {
                Exterior::Log { a } => Ok(1.0 / (a + r.ln()) / s2),
                Exterior::Power { a, b, g } => {
                    if g <= MU_TOL || a <= 0.0 {
                        // constant or decaying tail: 1/(rho omega^2) ~ 1/rho or worse
                        Ok(f64::INFINITY)
                    } else {
                        // substitute t = rho^{2g}: integral = 1/(2 g a (a t + b))
                        let t = r.powf(2.0 * g);
                        Ok(1.0 / (2.0 * g * a * (a * t + b)) / s2)
                    }
                }
            },
        }
    }

    pub fn eval_derivative(&self, r: f64) -> f64 {
        self.scale * self.base_derivative(r)
    }

    fn base(&self, r: f64) -> f64 {
        match &self.form {
            ModeForm::FreePower { mu } => r.powf(*mu),
            ModeForm::Field { setup, pm, sx, q, ext } => {
                let rb = setup.b_profile().support_radius();
                if r >= rb {
                    ext.eval(r)
                } else {
                    let core = r.powf(*pm) * (sx * setup.xi(r)).exp();
                    match q {
                        None => core,
                        Some(t) => core * q_value(setup, *sx, t, r),
                    }
                }
            }
        }
    }

    fn base_derivative(&self, r: f64) -> f64 {
        match &self.form {
            ModeForm::FreePower { mu } => mu * r.powf(mu - 1.0),
            ModeForm::Field { setup, pm, sx, q, ext } => {
                let rb = setup.b_profile().support_radius();
                if r >= rb {
                    ext.eval_derivative(r)
                } else {
                    // xi' = -b(r)
                    let core = r.powf(*pm) * (sx * setup.xi(r)).exp();
                    let logd = pm / r - sx * setup.b(r);
                    match q {
                        None => core * logd,
                        Some(t) => {
                            let qv = q_value(setup, *sx, t, r);
                            let qd = (-2.0 * sx * setup.xi(r)).exp() * r.powf(t.qp);
                            core * (logd * qv + qd)
                        }
                    }
                }
            }
        }
    }
}

fn q_integrand(setup: &FieldSetup, sx: f64, qp: f64, rho: f64) -> f64 {
    (-2.0 * sx * setup.xi(rho)).exp() * rho.powf(qp)
}

fn q_value(setup: &FieldSetup, sx: f64, table: &QTable, r: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = 0.0;
    for &(bp, c) in &table.cum {
        if bp <= r {
            acc = c;
            lo = bp;
        } else {
            break;
        }
    }
    if r > lo {
        acc += quad::adaptive(|rho| q_integrand(setup, sx, table.qp, rho), lo, r, 1e-11, 1e-14)
            .unwrap_or(f64::NAN);
    }
    acc
}

/// Builds the zero mode omega_m^± for the given channel.
pub fn zero_mode(setup: &FieldSetup, channel: Channel) -> Result<ZeroMode> {
    let m = channel.m;
    let mf = m as f64;
    let (pm, sx, needs_q) = match channel.spin {
        Spin::Plus => (mf, -1.0, m <= -1),
        Spin::Minus => (-mf, 1.0, m >= 1),
    };
    let rb = setup.b_profile().support_radius();
    let phi = setup.flux();
    let gamma = channel_gamma(setup, m);
    // exterior: base = r^{pm - sx*phi} [* Q], with e^{sx xi} = r^{-sx phi} there
    let ext;
    let q;
    if needs_q {
        // qp such that the exterior integrand is rho^{2 tau - 1}
        let qp = match channel.spin {
            Spin::Plus => -2.0 * mf - 1.0,
            Spin::Minus => 2.0 * mf - 1.0,
        };
        // cumulative integral at the breakpoints of B
        let bps = setup.b_profile().breakpoints();
        let mut cum = Vec::with_capacity(bps.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &bp in &bps {
            if bp > 0.0 {
                acc += quad::adaptive(|rho| q_integrand(setup, sx, qp, rho), prev, bp, 1e-11, 1e-14)?;
            }
            cum.push((bp, acc));
            prev = bp;
        }
        let qb = acc;
        let tau = match channel.spin {
            Spin::Plus => -gamma,
            Spin::Minus => gamma,
        };
        // base = r^{-tau} Q(r) outside the support
        ext = if tau.abs() <= MU_TOL {
            Exterior::Log { a: qb - rb.ln() }
        } else {
            let a = 1.0 / (2.0 * tau);
            let b = qb - rb.powf(2.0 * tau) / (2.0 * tau);
            if tau > 0.0 {
                Exterior::Power { a, b, g: tau }
            } else {
                Exterior::Power { a: b, b: a, g: -tau }
            }
        };
        q = Some(QTable { qp, cum });
    } else {
        let g0 = pm - sx * (if setup.integer_flux() { phi.round() } else { phi });
        ext = if g0 >= 0.0 {
            Exterior::Power { a: 1.0, b: 0.0, g: g0 }
        } else {
            Exterior::Power { a: 0.0, b: 1.0, g: -g0 }
        };
        q = None;
    }

    let (decay_class, tail_mu) = classify(&ext);
    let mut mode = ZeroMode {
        channel,
        decay_class,
        tail_mu,
        v_coeff: 0.0,
        norm_sq: None,
        scale: 1.0,
        form: ModeForm::Field {
            setup: setup.clone(),
            pm,
            sx,
            q,
            ext,
        },
    };

    // normalization: decaying modes are r^{-mu} on the exterior, growing modes
    // are 1 at the envelope radius R
    mode.scale = match decay_class {
        DecayClass::L2Eigenmode | DecayClass::BoundedVirtual => match ext {
            Exterior::Power { a, b, g } => {
                if g <= MU_TOL {
                    1.0 / (a + b)
                } else {
                    1.0 / b
                }
            }
            Exterior::Log { .. } => unreachable!("log exterior is growing"),
        },
        _ => 1.0 / mode.base(setup.radius()),
    };
    if !mode.scale.is_finite() || mode.scale <= 0.0 {
        return Err(Error::GrowthClass(format!(
            "channel {channel} zero mode has non-positive normalization"
        )));
    }

    let (v, n) = integrate_coefficients(setup, &mode)?;
    mode.v_coeff = v;
    mode.norm_sq = n;
    Ok(mode)
}

fn classify(ext: &Exterior) -> (DecayClass, f64) {
    match *ext {
        Exterior::Log { .. } => (DecayClass::LogGrowing, 0.0),
        Exterior::Power { a, b, g } => {
            if g <= MU_TOL {
                (DecayClass::BoundedVirtual, 0.0)
            } else if a.abs() > 1e-13 * (1.0 + b.abs()) {
                (DecayClass::PowerGrowing, 0.0)
            } else if g > 1.0 + MU_TOL {
                (DecayClass::L2Eigenmode, g)
            } else {
                (DecayClass::BoundedVirtual, g)
            }
        }
    }
}

fn integrate_coefficients(setup: &FieldSetup, mode: &ZeroMode) -> Result<(f64, Option<f64>)> {
    let v_prof = setup.v_profile();
    let mut breaks = setup.b_profile().breakpoints();
    breaks.extend(v_prof.breakpoints());
    let v = quad::adaptive_with_breaks(
        |r| v_prof.eval(r) * mode.eval(r).powi(2) * r,
        0.0,
        v_prof.support_radius(),
        &breaks,
        1e-10,
        1e-13,
    )?;
    let norm = if mode.decay_class == DecayClass::L2Eigenmode {
        let rb = setup.b_profile().support_radius();
        let mu = mode.tail_mu;
        let interior = quad::adaptive_with_breaks(
            |r| mode.eval(r).powi(2) * r,
            0.0,
            rb,
            &setup.b_profile().breakpoints(),
            1e-10,
            1e-13,
        )?;
        // exterior omega = r^{-mu}: int_rb^inf r^{1-2mu} dr
        let tail = rb.powf(2.0 - 2.0 * mu) / (2.0 * mu - 2.0);
        Some(interior + tail)
    } else {
        None
    };
    Ok((v, norm))
}

/// v and norm_sq of a zero mode (computed at construction time).
pub fn mode_coefficients(_setup: &FieldSetup, mode: &ZeroMode) -> (f64, Option<f64>) {
    (mode.v_coeff, mode.norm_sq())
}

#[derive(Debug, Clone, Copy)]
pub struct VirtualChannel {
    pub channel: Channel,
    pub regime: Regime,
    pub mu: f64,
}

/// The Nprime channels that carry negative eigenvalues at weak coupling.
pub fn virtual_channels(setup: &FieldSetup) -> Vec<VirtualChannel> {
    let phi = setup.flux();
    let aphi = if setup.integer_flux() {
        phi.abs().round()
    } else {
        phi.abs()
    };
    if setup.integer_flux() && aphi == 0.0 {
        return vec![
            VirtualChannel {
                channel: Channel::new(0, Spin::Plus),
                regime: Regime::Exponential,
                mu: 0.0,
            },
            VirtualChannel {
                channel: Channel::new(0, Spin::Minus),
                regime: Regime::Exponential,
                mu: 0.0,
            },
        ];
    }
    let top = aphi.floor() as i64; // equals round for integer flux
    let mut out = Vec::with_capacity(top as usize + 1);
    for k in 0..=top {
        let mu = aphi - k as f64;
        let channel = if phi > 0.0 {
            Channel::new(-k, Spin::Minus)
        } else {
            Channel::new(k, Spin::Plus)
        };
        out.push(VirtualChannel {
            channel,
            regime: Regime::of_mu(mu),
            mu,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{setup, ProfileKind};
    use approx::assert_relative_eq;

    fn uniform_setup(b0: f64) -> FieldSetup {
        let b = RadialProfile::constant(ProfileKind::Magnetic, b0, 1.0).unwrap();
        let v = RadialProfile::constant(ProfileKind::Electric, 1.0, 1.0).unwrap();
        setup(b, v).unwrap()
    }

    #[test]
    fn channel_potential_uniform_flux_one() {
        let s = uniform_setup(2.0);
        let w = channel_potential(&s, Channel::new(0, Spin::Minus));
        // inside: b(r) = r, so W = r^2 - 2
        assert_relative_eq!(w.eval(0.5), -1.75, max_relative = 1e-13);
        // outside: (m + Phi)^2 / r^2
        assert_relative_eq!(w.eval(2.0), 0.25, max_relative = 1e-13);
        assert_relative_eq!(w.tail_mu(), 1.0, max_relative = 1e-12);
        let w = channel_potential(&s, Channel::new(-1, Spin::Minus));
        assert_eq!(w.tail_mu(), 0.0);
    }

    #[test]
    fn channel_potential_centrifugal_origin() {
        let s = uniform_setup(2.0);
        let w = channel_potential(&s, Channel::new(3, Spin::Plus));
        let r = 1e-5;
        assert_relative_eq!(w.eval(r), 9.0 / (r * r), max_relative = 1e-4);
    }

    #[test]
    fn zero_mode_flux_one_m0() {
        // omega = e^{xi}; xi = (1-r^2)/2 inside, -ln r outside
        let s = uniform_setup(2.0);
        let w = zero_mode(&s, Channel::new(0, Spin::Minus)).unwrap();
        assert_eq!(w.decay_class(), DecayClass::BoundedVirtual);
        assert_relative_eq!(w.tail_mu(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(w.eval(1e-9), (0.5f64).exp(), max_relative = 1e-8);
        assert_relative_eq!(w.eval(2.0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(w.eval(0.5), (0.375f64).exp(), max_relative = 1e-12);
        // v = int_0^1 e^{1-r^2} r dr = (e-1)/2
        assert_relative_eq!(
            w.v_coeff(),
            (std::f64::consts::E - 1.0) / 2.0,
            max_relative = 1e-9
        );
        assert!(w.norm_sq().is_none());
    }

    #[test]
    fn zero_mode_flux_one_m_minus_one() {
        // omega = r e^{xi}: mu = 0, bounded
        let s = uniform_setup(2.0);
        let w = zero_mode(&s, Channel::new(-1, Spin::Minus)).unwrap();
        assert_eq!(w.decay_class(), DecayClass::BoundedVirtual);
        assert_eq!(w.tail_mu(), 0.0);
        assert_relative_eq!(w.eval(5.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            w.v_coeff(),
            (std::f64::consts::E - 2.0) / 2.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn zero_mode_trivial_field() {
        let b = RadialProfile::zero(ProfileKind::Magnetic);
        let v = RadialProfile::constant(ProfileKind::Electric, 1.0, 1.0).unwrap();
        let s = setup(b, v).unwrap();
        for spin in [Spin::Plus, Spin::Minus] {
            let w = zero_mode(&s, Channel::new(0, spin)).unwrap();
            for &r in &[0.1, 1.0, 7.0] {
                assert_relative_eq!(w.eval(r), 1.0, max_relative = 1e-12);
            }
            assert_relative_eq!(w.v_coeff(), 0.5, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_mode_growing_integral_case() {
        // Phi=1, m=1, spin -: omega = r^{-1} e^{xi} int_0^r e^{-2 xi} rho dr,
        // growing like r^{m+Phi} = r^2 at infinity
        let s = uniform_setup(2.0);
        let w = zero_mode(&s, Channel::new(1, Spin::Minus)).unwrap();
        assert_eq!(w.decay_class(), DecayClass::PowerGrowing);
        let g = (w.eval(800.0) / w.eval(400.0)).ln() / 2f64.ln();
        assert_relative_eq!(g, 2.0, max_relative = 1e-6);
        assert_relative_eq!(w.eval(s.radius()), 1.0, max_relative = 1e-12);
        // positivity on a wide sample
        let mut r = 1e-4;
        while r < 10.0 * s.radius() {
            assert!(w.eval(r) > 0.0, "omega({r}) <= 0");
            r *= 1.9;
        }
    }

    #[test]
    fn zero_mode_eigenmode_norm() {
        // Phi=2.5, m=0, spin -: tail exponent 2.5 > 1, finite norm
        let s = uniform_setup(5.0);
        let w = zero_mode(&s, Channel::new(0, Spin::Minus)).unwrap();
        assert_eq!(w.decay_class(), DecayClass::L2Eigenmode);
        assert_relative_eq!(w.tail_mu(), 2.5, max_relative = 1e-12);
        let n = w.norm_sq().expect("finite norm");
        assert!(n.is_finite() && n > 0.0);
        // direct quadrature cross-check of the norm on [0, 40]
        let direct = quad::adaptive_with_breaks(
            |r| w.eval(r).powi(2) * r,
            0.0,
            40.0,
            &[1.0],
            1e-10,
            1e-13,
        )
        .unwrap()
            + 40f64.powf(-3.0) / 3.0;
        assert_relative_eq!(n, direct, max_relative = 1e-7);
    }

    #[test]
    fn zero_mode_solves_channel_equation() {
        // finite-difference residual of u'' = r^2 W u in s = ln r
        let cases = [
            (uniform_setup(2.0), Channel::new(0, Spin::Minus)),
            (uniform_setup(2.0), Channel::new(1, Spin::Minus)),
            (uniform_setup(5.0), Channel::new(0, Spin::Minus)),
            (uniform_setup(5.0), Channel::new(-2, Spin::Minus)),
            (uniform_setup(3.0), Channel::new(-1, Spin::Plus)),
        ];
        for (s, ch) in cases {
            let w = zero_mode(&s, ch).unwrap();
            let pot = channel_potential(&s, ch);
            let h = 1e-4;
            for &r in &[0.31f64, 0.57, 0.83] {
                // avoid breakpoints; r inside the support
                let u = |s_: f64| w.eval(s_.exp());
                let s0 = r.ln();
                let upp = (u(s0 + h) - 2.0 * u(s0) + u(s0 - h)) / (h * h);
                let rhs = r * r * pot.eval(r) * u(s0);
                let scale = upp.abs().max(rhs.abs()).max(w.eval(r));
                assert!(
                    (upp - rhs).abs() <= 1e-5 * scale,
                    "residual at r={r} for {ch}: {} vs {}",
                    upp,
                    rhs
                );
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = uniform_setup(5.0);
        for ch in [
            Channel::new(0, Spin::Minus),
            Channel::new(2, Spin::Minus),
            Channel::new(-1, Spin::Plus),
        ] {
            let w = zero_mode(&s, ch).unwrap();
            for &r in &[0.4, 0.9, 1.5, 3.0] {
                let h = 1e-6 * r;
                let fd = (w.eval(r + h) - w.eval(r - h)) / (2.0 * h);
                let an = w.eval_derivative(r);
                assert_relative_eq!(an, fd, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn virtual_channel_lists() {
        let s = uniform_setup(2.0); // Phi = 1
        let vc = virtual_channels(&s);
        assert_eq!(vc.len(), 2);
        assert_eq!(vc[0].channel, Channel::new(0, Spin::Minus));
        assert_eq!(vc[0].regime, Regime::Log);
        assert_eq!(vc[1].channel, Channel::new(-1, Spin::Minus));
        assert_eq!(vc[1].regime, Regime::Exponential);

        let s = uniform_setup(3.0); // Phi = 1.5
        let vc = virtual_channels(&s);
        assert_eq!(vc.len(), 2);
        assert_eq!(vc[0].regime, Regime::Linear);
        assert_relative_eq!(vc[0].mu, 1.5, max_relative = 1e-12);
        assert_eq!(vc[1].regime, Regime::Power);
        assert_relative_eq!(vc[1].mu, 0.5, max_relative = 1e-12);

        let b = RadialProfile::zero(ProfileKind::Magnetic);
        let v = RadialProfile::constant(ProfileKind::Electric, 1.0, 1.0).unwrap();
        let s = setup(b, v).unwrap(); // Phi = 0
        let vc = virtual_channels(&s);
        assert_eq!(vc.len(), 2);
        assert!(vc.iter().all(|c| c.regime == Regime::Exponential));
        assert_eq!(vc[0].channel.spin, Spin::Plus);
        assert_eq!(vc[1].channel.spin, Spin::Minus);
    }

    #[test]
    fn virtual_channel_count_matches_nprime() {
        for b0 in [0.5, 2.0, 3.0, 4.0, 5.0, 7.3] {
            let s = uniform_setup(b0);
            assert_eq!(
                virtual_channels(&s).len() as u32,
                s.n_prime(),
                "flux {}",
                s.flux()
            );
        }
    }

    #[test]
    fn conjugation_maps_channels() {
        let s = uniform_setup(5.0);
        let r = s.reflected();
        let vc: Vec<_> = virtual_channels(&s).iter().map(|c| c.channel).collect();
        let vr: Vec<_> = virtual_channels(&r).iter().map(|c| c.channel).collect();
        let mapped: Vec<_> = vc.iter().map(|c| c.conjugated()).collect();
        assert_eq!(vr, mapped);
        // coefficients agree under conjugation
        let w = zero_mode(&s, Channel::new(-1, Spin::Minus)).unwrap();
        let wc = zero_mode(&r, Channel::new(1, Spin::Plus)).unwrap();
        assert_relative_eq!(w.v_coeff(), wc.v_coeff(), max_relative = 1e-9);
        assert_eq!(w.decay_class(), wc.decay_class());
    }

    #[test]
    fn frozen_coefficient_oracles() {
        // Phi = 1.5, m = -1 (mu = 0.5)
        let s = uniform_setup(3.0);
        let w = zero_mode(&s, Channel::new(-1, Spin::Minus)).unwrap();
        assert_relative_eq!(w.v_coeff(), 0.440_375_348_964_014_4, max_relative = 1e-8);
        // Phi = 2.5 zero-mode channels
        let s = uniform_setup(5.0);
        let w0 = zero_mode(&s, Channel::new(0, Spin::Minus)).unwrap();
        assert_relative_eq!(w0.v_coeff(), 2.236_498_792_140_694_5, max_relative = 1e-8);
        assert_relative_eq!(
            w0.norm_sq().unwrap(),
            2.569_832_125_474_028,
            max_relative = 1e-7
        );
        let w1 = zero_mode(&s, Channel::new(-1, Spin::Minus)).unwrap();
        assert_relative_eq!(w1.v_coeff(), 0.694_599_516_856_277_9, max_relative = 1e-8);
        assert_relative_eq!(
            w1.norm_sq().unwrap(),
            1.694_599_516_856_278,
            max_relative = 1e-7
        );
    }
}
