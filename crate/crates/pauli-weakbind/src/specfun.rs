//! Self-contained special functions: Gamma, the modified Bessel function
//! K_mu with its derivative, and the weak-coupling constant c_mu.

use crate::error::{Error, Result};

/// Lanczos coefficients, g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the Lanczos argument away from the pole
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + 7.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

/// Taylor coefficients of 1/Gamma(1+v) about v = 0.
const INV_GAMMA1P: [f64; 17] = [
    1.0,
    0.577_215_664_901_532_861,
    -0.655_878_071_520_253_881,
    -0.042_002_635_034_095_235_5,
    0.166_538_611_382_291_49,
    -0.042_197_734_555_544_336_7,
    -0.009_621_971_527_876_973_56,
    0.007_218_943_246_663_099_54,
    -0.001_165_167_591_859_065_11,
    -2.152_416_741_149_509_73e-4,
    1.280_502_823_881_161_86e-4,
    -2.013_485_478_078_823_87e-5,
    -1.250_493_482_142_670_66e-6,
    1.133_027_231_981_695_88e-6,
    -2.056_338_416_977_607_1e-7,
    6.116_095_104_481_415_82e-9,
    5.002_007_644_469_222_93e-9,
];

/// (gam1, gam2) with gam1 = [1/Γ(1-v) - 1/Γ(1+v)]/(2v), gam2 = [1/Γ(1-v) + 1/Γ(1+v)]/2,
/// stable for |v| <= 1/2 including v = 0.
fn temme_gammas(v: f64) -> (f64, f64) {
    let v2 = v * v;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut p = 1.0; // v^{2j}
    for j in 0..8 {
        gam2 += INV_GAMMA1P[2 * j] * p;
        gam1 -= INV_GAMMA1P[2 * j + 1] * p;
        p *= v2;
    }
    gam2 += INV_GAMMA1P[16] * p;
    (gam1, gam2)
}

/// One evaluation of K_order at a positive argument.
#[derive(Debug, Clone, Copy)]
pub struct BesselEval {
    pub order: f64,
    pub argument: f64,
    /// K_order(argument), always positive.
    pub value: f64,
    /// d/dx K_order(x), always negative.
    pub derivative: f64,
}

const MAX_ITER: usize = 20_000;
const EPS: f64 = 1e-16;

/// Temme's series for x <= 2: returns (K_nu, K_{nu+1}) for |nu| <= 1/2.
fn k_temme(nu: f64, x: f64) -> (f64, f64) {
    let x2 = 0.5 * x;
    let pimu = std::f64::consts::PI * nu;
    let fact = if pimu.abs() < 1e-300 { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = nu * d;
    let fact2 = if e.abs() < 1e-150 { 1.0 } else { e.sinh() / e };
    let (gam1, gam2) = temme_gammas(nu);
    let gampl = inv_gamma1p(nu); // 1/Γ(1+ν)
    let gammi = inv_gamma1p(-nu); // 1/Γ(1-ν)
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    // p = 0.5 e^{νd} Γ(1+ν), q = 0.5 e^{-νd} Γ(1-ν)
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let nu2 = nu * nu;
    for i in 1..=MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - nu2);
        c *= dd / fi;
        p /= fi - nu;
        q /= fi + nu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

fn inv_gamma1p(v: f64) -> f64 {
    let mut acc = 0.0;
    let mut p = 1.0;
    for c in INV_GAMMA1P {
        acc += c * p;
        p *= v;
    }
    acc
}

/// Steed/Thompson continued fraction CF2 for x > 2: returns (K_nu, K_{nu+1}), |nu| <= 1/2.
fn k_cf2(nu: f64, x: f64) -> (f64, f64) {
    let nu2 = nu * nu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - nu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..=MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let knu = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let knu1 = knu * (nu + x + 0.5 - h) / x;
    (knu, knu1)
}

/// Modified Bessel function K of real order in [0, 10] with derivative.
pub fn bessel_k(order: f64, x: f64) -> Result<BesselEval> {
    if !(order >= 0.0) || order > 10.0 {
        return Err(Error::Domain(format!(
            "bessel_k order must be in [0, 10], got {order}"
        )));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("bessel_k requires x > 0, got {x}")));
    }
    // order = n + nu with nu in [-1/2, 1/2]
    let n = (order + 0.5).floor() as usize;
    let nu = order - n as f64;
    let (mut km, mut kp) = if x <= 2.0 { k_temme(nu, x) } else { k_cf2(nu, x) };
    // upward recurrence K_{s+1} = K_{s-1} + (2s/x) K_s
    let mut sig = nu;
    for _ in 0..n {
        sig += 1.0;
        let knext = km + 2.0 * sig / x * kp;
        km = kp;
        kp = knext;
        if !kp.is_finite() {
            return Err(Error::BesselOverflow { order, argument: x });
        }
    }
    // now km = K_order, kp = K_{order+1}
    let kminus = kp - 2.0 * order / x * km; // K_{order-1} (= K_{1-order} for order < 1)
    let deriv = -0.5 * (kminus + kp);
    if !km.is_finite() || !deriv.is_finite() {
        return Err(Error::BesselOverflow { order, argument: x });
    }
    Ok(BesselEval {
        order,
        argument: x,
        value: km,
        derivative: deriv,
    })
}

/// Weak-coupling constant c_mu = (2^{2mu-1} Gamma(mu) / Gamma(1-mu))^{1/mu} for mu in (0,1).
pub fn c_mu(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("c_mu requires mu in (0,1), got {mu}")));
    }
    let val = (2f64.powf(2.0 * mu - 1.0) * gamma(mu)? / gamma(1.0 - mu)?).powf(1.0 / mu);
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            gamma(0.5).unwrap(),
            1.772_453_850_905_516_0,
            max_relative = 1e-13
        );
        // high-precision product/series oracle value
        assert_relative_eq!(
            gamma(1.0 / 3.0).unwrap(),
            2.678_938_534_707_747_6,
            max_relative = 1e-13
        );
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
    }

    #[test]
    fn gamma_recurrence() {
        let mut x = 0.1;
        while x <= 20.0 {
            let a = gamma(x + 1.0).unwrap();
            let b = x * gamma(x).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
            x += 0.317;
        }
    }

    #[test]
    fn bessel_half_order_closed_form() {
        // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
        for &x in &[0.1, 0.5, 1.0, 3.0, 8.0] {
            let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x as f64).exp();
            let e = bessel_k(0.5, x).unwrap();
            assert_relative_eq!(e.value, exact, max_relative = 1e-12);
            // K_{1/2}'(x) = -K_{1/2}(x) (1/(2x) + 1)
            let dexact = -exact * (0.5 / x + 1.0);
            assert_relative_eq!(e.derivative, dexact, max_relative = 1e-12);
        }
        let e = bessel_k(0.5, 1.0).unwrap();
        assert_relative_eq!(e.value, 0.461_068_504_447_894_56, max_relative = 1e-12);
    }

    #[test]
    fn bessel_small_argument_asymptotics() {
        // K_0(x) ~ -ln(x/2) - gamma_euler
        let x = 1e-9;
        let e = bessel_k(0.0, x).unwrap();
        let lead = -(x / 2.0f64).ln() - 0.577_215_664_901_532_9;
        assert_relative_eq!(e.value, lead, max_relative = 1e-9);
        // K_mu(x) ~ Gamma(mu)/2 (x/2)^{-mu}; the neglected term is O((x/2)^{2mu})
        for &mu in &[0.3, 0.7, 1.0, 2.5] {
            let x = 1e-8;
            let e = bessel_k(mu, x).unwrap();
            let lead = 0.5 * gamma(mu).unwrap() * (x / 2.0f64).powf(-mu);
            let slack = (x / 2.0f64).powf(2.0 * mu.min(1.0)) * 10.0 + 1e-12;
            assert_relative_eq!(e.value, lead, max_relative = slack);
        }
    }

    #[test]
    fn bessel_recurrence_invariant() {
        for &mu in &[0.0, 0.25, 0.5, 0.9, 1.0, 1.7, 3.3] {
            for &x in &[0.01, 0.3, 1.0, 2.0, 2.5, 7.0] {
                let k0 = bessel_k(mu, x).unwrap().value;
                let k1 = bessel_k(mu + 1.0, x).unwrap().value;
                let k2 = bessel_k(mu + 2.0, x).unwrap().value;
                let rhs = k0 + 2.0 * (mu + 1.0) / x * k1;
                assert_relative_eq!(k2, rhs, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn bessel_monotone_decreasing() {
        for &mu in &[0.0, 0.5, 1.0, 2.2] {
            let mut prev = f64::INFINITY;
            let mut x = 0.05;
            while x < 15.0 {
                let e = bessel_k(mu, x).unwrap();
                assert!(e.value > 0.0);
                assert!(e.derivative < 0.0);
                assert!(e.value < prev);
                prev = e.value;
                x *= 1.37;
            }
        }
    }

    #[test]
    fn bessel_overflow_is_structured() {
        match bessel_k(10.0, 1e-30) {
            Err(Error::BesselOverflow { .. }) => {}
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn bessel_tiny_argument_order_zero() {
        // exponential-regime matching needs K_0 far below any physical scale
        let e = bessel_k(0.0, 1e-250).unwrap();
        let lead = -(1e-250f64 / 2.0).ln() - 0.577_215_664_901_532_9;
        assert_relative_eq!(e.value, lead, max_relative = 1e-12);
        assert!(e.derivative < 0.0);
    }

    #[test]
    fn c_mu_values() {
        assert!((c_mu(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert_relative_eq!(
            c_mu(1.0 / 3.0).unwrap(),
            3.871_584_809_760_696_7,
            max_relative = 1e-12
        );
        assert!(c_mu(0.0).is_err());
        assert!(c_mu(1.0).is_err());
    }

    #[test]
    fn c_mu_defining_identity() {
        let mut mu = 0.05;
        while mu < 1.0 {
            let c = c_mu(mu).unwrap();
            let lhs = c.powf(mu) * gamma(1.0 - mu).unwrap()
                / (2f64.powf(2.0 * mu - 1.0) * gamma(mu).unwrap());
            assert_relative_eq!(lhs, 1.0, max_relative = 1e-12);
            mu += 0.05;
        }
    }
}
