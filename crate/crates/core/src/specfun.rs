//! Theta function and Gaussian tail integrals with error bounds.
//!
//! `theta(x, tau) = sum_k exp(-pi tau k^2 + 2 pi i k x)` is real for real
//! arguments. For `tau >= 1` the defining series converges in a handful of
//! terms; for `tau < 1` the Jacobi identity turns it into the Gaussian comb
//! `tau^{-1/2} sum_k exp(-pi (k - x)^2 / tau)`, which converges just as fast
//! and has no cancellation.

use std::f64::consts::PI;

use crate::ddouble::{self, DD};
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_inf, QuadConfig};

/// Distance from `x` to the nearest integer (ties go to the even integer).
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round_ties_even()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaBranch {
    Direct,
    Dual,
}

#[derive(Debug, Clone, Copy)]
pub struct ThetaValue {
    pub value: f64,
    pub error: f64,
    pub branch: ThetaBranch,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

/// `theta(x, tau)` with the branch chosen by `tau` (crossover at 1).
pub fn theta_eval(x: f64, tau: f64) -> Result<ThetaValue> {
    check_tau(tau)?;
    let (value, error, branch) = if tau >= 1.0 {
        let (v, e) = theta_direct_with_error(x, tau);
        (v, e, ThetaBranch::Direct)
    } else {
        let (c, e) = gaussian_comb_with_error(x, tau);
        let s = tau.sqrt();
        (c / s, e / s, ThetaBranch::Dual)
    };
    Ok(ThetaValue { value, error, branch })
}

/// Defining series, accumulated in double-double so that deep cancellation
/// at small `tau` (values near 1e-6 built from O(1) terms) stays accurate.
pub fn theta_direct(x: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(theta_direct_with_error(x, tau).0)
}

fn theta_direct_with_error(x: f64, tau: f64) -> (f64, f64) {
    let pt = ddouble::PI.mul_f64(tau);
    let xr = x - x.round_ties_even();
    let mut sum = DD::ONE;
    let mut abs_sum = 1.0;
    let mut k = 1i64;
    loop {
        let kf = k as f64;
        let w = (pt.mul_f64(kf * kf)).mul_f64(-1.0).exp();
        // k * xr exactly, then cos(2 pi k xr) with exact reduction.
        let c = DD::from_prod(kf, xr).cos_2pi();
        sum = sum + (w * c).mul_f64(2.0);
        abs_sum += 2.0 * w.hi;
        let tail = 2.0 * gaussian_tail(kf, PI * tau, 0).unwrap_or(f64::INFINITY);
        if tail < 1e-40 * abs_sum || k > 1_000_000 {
            let v = sum.to_f64();
            let err = tail + 1e-30 * abs_sum + 0.5 * f64::EPSILON * v.abs();
            return (v, err);
        }
        k += 1;
    }
}

/// Gaussian comb `sum_k exp(-pi (k - x)^2 / tau)`; equals `sqrt(tau) theta(x, tau)`.
pub fn gaussian_comb(x: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(gaussian_comb_with_error(x, tau).0)
}

fn gaussian_comb_with_error(x: f64, tau: f64) -> (f64, f64) {
    let g = PI / tau;
    let n0 = x.round_ties_even();
    let r = x - n0;
    let mut sum = (-g * r * r).exp();
    let mut j = 1i64;
    loop {
        let jf = j as f64;
        let a = jf - r;
        let b = jf + r;
        sum += (-g * a * a).exp() + (-g * b * b).exp();
        // Remaining terms have |k - x| >= j + 1/2. A comb that underflows
        // stops once its tail does too.
        let tail = 2.0 * gaussian_tail(jf + 0.5, g, 0).unwrap_or(f64::INFINITY);
        if tail < 1e-18 * sum || tail == 0.0 || j > 1_000_000 {
            return (sum, tail + 4.0 * f64::EPSILON * sum);
        }
        j += 1;
    }
}

/// Relative Jacobi-identity residual at real `(x, tau)`.
///
/// Multiplying both sides of the identity by `exp(-pi x^2 / tau)` turns the
/// left side into the Gaussian comb, so the residual is
/// `|comb - sqrt(tau) theta_direct| / comb`.
pub fn jacobi_residual(x: f64, tau: f64) -> Result<f64> {
    let comb = gaussian_comb(x, tau)?;
    let direct = theta_direct(x, tau)?;
    Ok((comb - tau.sqrt() * direct).abs() / comb.abs())
}

/// `Phi(x) = int_x^inf exp(-t^2) dt`.
pub fn phi_tail(x: f64) -> f64 {
    0.5 * PI.sqrt() * libm::erfc(x)
}

/// `int_x^inf t^order exp(-gamma t^2) dt` for `order` in 0..=8.
///
/// Order 2 goes through the differentiation identity
/// `int_x^inf t^2 e^{-t^2} dt = (Phi(x) - x Phi'(x)) / 2` with `Phi'(x) = -e^{-x^2}`,
/// rescaled by `gamma^{-3/2}`. Other orders use the integration-by-parts
/// recursion `I_n = x^{n-1} e^{-gamma x^2} / (2 gamma) + (n-1)/(2 gamma) I_{n-2}`.
pub fn gaussian_tail(x: f64, gamma: f64, order: u32) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidGamma(gamma));
    }
    if order > 8 {
        return Err(crate::error::invalid(format!("gaussian_tail order {order} > 8")));
    }
    let sg = gamma.sqrt();
    let u = sg * x;
    let e = (-gamma * x * x).exp();
    Ok(match order {
        0 => phi_tail(u) / sg,
        1 => e / (2.0 * gamma),
        2 => 0.5 * (phi_tail(u) + u * (-u * u).exp()) / (gamma * sg),
        n => {
            let prev = gaussian_tail(x, gamma, n - 2)?;
            x.powi(n as i32 - 1) * e / (2.0 * gamma) + (n - 1) as f64 / (2.0 * gamma) * prev
        }
    })
}

/// Independent quadrature oracle for [`gaussian_tail`].
pub fn gaussian_tail_quadrature(x: f64, gamma: f64, order: u32) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let cfg = QuadConfig::new(1e-300, 1e-15).with_max_panels(20_000);
    let f = |t: f64| t.powi(order as i32) * (-gamma * t * t).exp();
    // Split off a finite piece so the mapped tail sees a smooth integrand.
    let width = 1.0 / gamma.sqrt();
    let peak = if order == 0 { x } else { x.max((order as f64 / (2.0 * gamma)).sqrt()) };
    let cut = peak.max(x) + 8.0 * width;
    let body = integrate(f, x, cut, &[peak, x + width, x + 3.0 * width], &cfg)?;
    let tail = integrate_to_inf(f, cut, &cfg)?;
    Ok(body.value + tail.value)
}

/// Leading-order reference values of the small-`tau` theta asymptotics, with
/// the remainder magnitudes reported separately.
#[derive(Debug, Clone, Copy)]
pub struct ThetaOracles {
    pub tau: f64,
    pub a: f64,
    /// `1 / (2 pi tau^{3/2})`, the leading term of `sum k^2 e^{-pi tau k^2}`.
    pub sum_k2_leading: f64,
    pub sum_k2_remainder: f64,
    /// Leading term of `int x |theta|^2` over a shifted unit cell (zero).
    pub mean_x_leading: f64,
    pub mean_x_remainder: f64,
    /// `(1 / 4 pi) sqrt(tau / 2)`.
    pub second_x_leading: f64,
    pub second_x_remainder: f64,
}

impl ThetaOracles {
    /// `tau^{-1/2} exp(-pi d(x)^2 / tau)`.
    pub fn envelope(&self, x: f64) -> f64 {
        let d = dist_to_int(x);
        (-PI * d * d / self.tau).exp() / self.tau.sqrt()
    }

    pub fn envelope_remainder(&self, x: f64) -> f64 {
        let d = 1.0 - dist_to_int(x);
        (-PI * d * d / self.tau).exp() / self.tau.sqrt()
    }
}

pub fn theta_asymptotic_oracles(tau: f64, a: f64) -> Result<ThetaOracles> {
    check_tau(tau)?;
    if !(a.abs() < 0.5) {
        return Err(crate::error::invalid(format!("|a| must be < 1/2, got {a}")));
    }
    let lead = 1.0 / (2.0 * PI * tau.powf(1.5));
    let ex = (-(2.0 * PI / tau) * (0.5 - a.abs()).powi(2)).exp();
    Ok(ThetaOracles {
        tau,
        a,
        sum_k2_leading: lead,
        sum_k2_remainder: lead * (-PI / tau).exp(),
        mean_x_leading: 0.0,
        mean_x_remainder: ex,
        second_x_leading: (tau / 2.0).sqrt() / (4.0 * PI),
        second_x_remainder: ex,
    })
}

/// `sum_k k^2 exp(-pi tau k^2)` by direct summation (double-double accumulator).
pub fn theta_k2_sum(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let g = PI * tau;
    let mut sum = DD::ZERO;
    let mut k = 1i64;
    loop {
        let kf = k as f64;
        let t = kf * kf * (-g * kf * kf).exp();
        sum = sum + DD::new(2.0 * t);
        let tail = 2.0 * gaussian_tail(kf, g, 2)?;
        if tail < 1e-20 * sum.hi || k > 10_000_000 {
            return Ok(sum.to_f64());
        }
        k += 1;
    }
}

/// `int_{-1/2-a}^{1/2-a} x^n theta(x, tau)^2 dx` by adaptive quadrature.
pub fn theta_moment_integral(tau: f64, a: f64, n: u32) -> Result<f64> {
    check_tau(tau)?;
    let w = tau.sqrt();
    let cfg = QuadConfig::new(1e-17, 1e-14).with_max_panels(20_000);
    let f = |x: f64| {
        let t = theta_eval(x, tau).map(|v| v.value).unwrap_or(f64::NAN);
        x.powi(n as i32) * t * t
    };
    let bp = [-3.0 * w, -w, 0.0, w, 3.0 * w];
    Ok(integrate(f, -0.5 - a, 0.5 - a, &bp, &cfg)?.value)
}
