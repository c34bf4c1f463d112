//! State families: mollified truncated Gaussian, theta states, discretized
//! momentum densities and the wall-adapted antisymmetrized states for the
//! infinite well. A sharp-cut Gaussian is provided as a negative fixture.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::domain::{
    choose_truncation, ClassicalTarget, CoefficientModel, DensityTag, Family, IntervalGeometry, SpectralSeries,
    StateDescriptor, TailBound, WaveFunction,
};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_to_inf_scaled, QuadConfig};
use crate::specfun::theta_eval;

/// Default certified tail tolerance used by the builders. Gaussian-type tails
/// are cheap, so the builders go well below the position/momentum default.
pub const BUILD_TOL: f64 = 1e-30;
/// Largest truncation order a builder will accept.
pub const K_MAX: i64 = 1 << 20;

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `e^{i pi k t / l}` with the argument reduced before scaling by pi.
fn plane(k: i64, t: f64, l: f64) -> Complex64 {
    let r = k as f64 * (t / l);
    cis(PI * (r - 2.0 * (r / 2.0).round()))
}

// ---------------------------------------------------------------- mollifier

/// `int_{1-u}^{1} e^{-1/w} dw`, the bump mass between 0 and `u` (scaled units).
fn bump_mass(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let u = u.min(1.0);
    let cfg = QuadConfig::new(1e-300, 1e-15);
    integrate(|w: f64| if w > 0.0 { (-1.0 / w).exp() } else { 0.0 }, 1.0 - u, 1.0, &[], &cfg)
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
}

/// Smooth cutoff `eta = chi_[-l+2eps, l-2eps] * omega_eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub l: f64,
    pub epsilon: f64,
    /// Normalization of `omega_eps(x) = C e^{-eps/(eps-|x|)}`.
    pub c_eps: f64,
    half_mass: f64,
}

pub fn build_mollifier(geometry: &IntervalGeometry, epsilon: f64) -> Result<MollifierSpec> {
    let l = geometry.l;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if 3.0 * epsilon >= l {
        return Err(Error::EpsilonTooLarge { epsilon, l });
    }
    // int omega = 2 C eps int_0^1 e^{-1/(1-s)} ds
    let cfg = QuadConfig::new(1e-300, 1e-15);
    let half = integrate(|s: f64| if s < 1.0 { (-1.0 / (1.0 - s)).exp() } else { 0.0 }, 0.0, 1.0, &[0.5, 0.9], &cfg)?.value;
    let c_eps = 1.0 / (2.0 * epsilon * half);
    Ok(MollifierSpec { l, epsilon, c_eps, half_mass: half })
}

impl MollifierSpec {
    pub fn omega(&self, x: f64) -> f64 {
        let a = x.abs();
        if a >= self.epsilon {
            0.0
        } else {
            self.c_eps * (-self.epsilon / (self.epsilon - a)).exp()
        }
    }

    pub fn omega_d1(&self, x: f64) -> f64 {
        let a = x.abs();
        if a >= self.epsilon {
            return 0.0;
        }
        let d = self.epsilon - a;
        -self.c_eps * x.signum() * self.epsilon / (d * d) * (-self.epsilon / d).exp()
    }

    /// `W(y) = int_{-inf}^y omega`.
    fn cdf(&self, y: f64) -> f64 {
        let e = self.epsilon;
        if y <= -e {
            0.0
        } else if y >= e {
            1.0
        } else {
            let m = bump_mass(y.abs() / e) / (2.0 * self.half_mass);
            if y >= 0.0 {
                0.5 + m
            } else {
                0.5 - m
            }
        }
    }

    pub fn eta(&self, x: f64) -> f64 {
        let s = self.l - 2.0 * self.epsilon;
        (self.cdf(x + s) - self.cdf(x - s)).clamp(0.0, 1.0)
    }

    pub fn eta_d1(&self, x: f64) -> f64 {
        let s = self.l - 2.0 * self.epsilon;
        self.omega(x + s) - self.omega(x - s)
    }

    pub fn eta_d2(&self, x: f64) -> f64 {
        let s = self.l - 2.0 * self.epsilon;
        self.omega_d1(x + s) - self.omega_d1(x - s)
    }

    /// `+-(l - eps), +-(l - 2 eps), +-(l - 3 eps)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (l, e) = (self.l, self.epsilon);
        vec![-(l - e), -(l - 2.0 * e), -(l - 3.0 * e), l - 3.0 * e, l - 2.0 * e, l - e]
    }
}

// ----------------------------------------------------------- helper waves

/// Position-space view of a coefficient series.
#[derive(Debug, Clone)]
pub struct SeriesWave {
    pub series: SpectralSeries,
    pub l: f64,
}

impl WaveFunction for SeriesWave {
    fn value(&self, x: f64) -> Complex64 {
        self.series.eval(x, self.l)
    }
    fn derivative(&self, x: f64, order: u32) -> Option<Complex64> {
        let ok = match order {
            1 => self.series.tail.second.is_finite(),
            _ => self.series.tail.fourth.is_finite(),
        };
        ok.then(|| self.series.eval_deriv(x, self.l, order))
    }
}

fn inv_sq_tail(k_lo: i64, k_hi: i64) -> f64 {
    // sum over k < k_lo and k > k_hi of 1/(1+k^2)
    let side = |k: i64| if k >= 0 { PI / 2.0 - (k as f64).atan() } else { PI / (PI.tanh()) };
    side(k_hi) + side(-k_lo)
}

fn quad_cfg() -> QuadConfig {
    QuadConfig::new(1e-18, 1e-14).with_max_panels(20_000)
}

/// Number of samples for the FFT projection of smooth periodic states.
const FFT_N: usize = 1 << 16;

/// Momentum coefficients of a smooth state supported inside `(-l, l)` from the
/// trapezoidal rule (spectrally accurate for smooth periodic integrands).
/// Keeps the smallest window around `center` outside of which
/// `sum (1 + k^2) |a_k|^2` is negligible.
fn project_fft<W: WaveFunction>(w: &W, l: f64, center: i64) -> (i64, Vec<Complex64>) {
    let n = FFT_N;
    let mut buf: Vec<Complex64> = (0..n).into_par_iter().map(|j| w.value(-l + 2.0 * l * j as f64 / n as f64)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let half = (n / 2) as i64;
    let scale = (2.0 * l).sqrt() / n as f64;
    let coef = |k: i64| -> Complex64 {
        let sgn = if k.rem_euclid(2) == 0 { scale } else { -scale };
        buf[k.rem_euclid(n as i64) as usize] * sgn
    };
    let center = center.clamp(-half / 2, half / 2);
    let weight = |k: i64| (1.0 + (k * k) as f64) * coef(k).norm_sqr();
    let total: f64 = (-half..half).map(weight).sum();
    let budget = 1e-15 * (1.0 + total);
    // Grow the window until what is left outside fits the budget.
    let reach = half / 2;
    let mut outside = total - weight(center);
    let mut outside_abs: f64 = (-half..half).map(|k| coef(k).norm()).sum::<f64>() - coef(center).norm();
    let mut j = 0i64;
    while j < reach && (outside > budget || outside_abs > 1e-13) {
        j += 1;
        outside -= weight(center + j) + weight(center - j);
        outside_abs -= coef(center + j).norm() + coef(center - j).norm();
    }
    let coeffs = (center - j..=center + j).map(coef).collect();
    (center - j, coeffs)
}

/// Tail bound from Parseval deficits of a smooth periodic state:
/// `sum_all (pi k / l)^{2d} |a_k|^2 = ||psi^{(d)}||^2`.
fn parseval_tail(series: &SpectralSeries, l: f64, norms: [f64; 3], slack: f64) -> TailBound {
    let s = l / PI;
    let m0 = series.norm2();
    let m2 = series.weighted_sum(|k| (k * k) as f64);
    let m4 = series.weighted_sum(|k| (k as f64).powi(4));
    let d0 = (norms[0] - m0).max(0.0) + slack;
    let d2 = (norms[1] * s * s - m2).max(0.0) + slack * (1.0 + m2);
    let d4 = (norms[2] * s.powi(4) - m4).max(0.0) + slack * (1.0 + m4);
    let abs = ((d0 + d2) * inv_sq_tail(series.k_lo(), series.k_hi())).sqrt();
    TailBound { mass: d0, abs_sum: abs, second: d2, fourth: d4 }
}

// ------------------------------------------------------- truncated Gaussian

#[derive(Debug, Clone)]
pub struct GaussWave {
    pub norm: f64,
    pub beta: f64,
    pub x_star: f64,
    /// `p* / hbar`.
    pub wavenumber: f64,
    pub mollifier: Option<MollifierSpec>,
}

impl GaussWave {
    fn g(&self, x: f64) -> (Complex64, Complex64) {
        let d = x - self.x_star;
        let amp = self.norm * (-d * d / (4.0 * self.beta * self.beta)).exp();
        let g = Complex64::from_polar(amp, x * self.wavenumber);
        let h = Complex64::new(-d / (2.0 * self.beta * self.beta), self.wavenumber);
        (g, h)
    }
}

impl WaveFunction for GaussWave {
    fn value(&self, x: f64) -> Complex64 {
        let (g, _) = self.g(x);
        match &self.mollifier {
            Some(m) => g * m.eta(x),
            None => g,
        }
    }

    fn derivative(&self, x: f64, order: u32) -> Option<Complex64> {
        // The sharp cut is not in the domain of p.
        let m = self.mollifier.as_ref()?;
        let (g, h) = self.g(x);
        let g1 = g * h;
        let g2 = g * (h * h - 1.0 / (2.0 * self.beta * self.beta));
        match order {
            1 => Some(g1 * m.eta(x) + g * m.eta_d1(x)),
            2 => Some(g2 * m.eta(x) + g1 * (2.0 * m.eta_d1(x)) + g * m.eta_d2(x)),
            _ => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.mollifier.map(|m| m.breakpoints()).unwrap_or_default()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("beta must be positive, got {beta}")))
    }
}

pub fn build_truncated_gaussian(geometry: &IntervalGeometry, target: &ClassicalTarget, beta: f64, epsilon: f64) -> Result<StateDescriptor> {
    check_beta(beta)?;
    let moll = build_mollifier(geometry, epsilon)?;
    let l = geometry.l;
    if target.x_star.abs() >= l - 3.0 * epsilon {
        return Err(Error::TargetTooCloseToWall { x_star: target.x_star, l, epsilon });
    }
    let mut w = GaussWave {
        norm: 1.0 / (2.0 * PI * beta * beta).powf(0.25),
        beta,
        x_star: target.x_star,
        wavenumber: target.p_star / geometry.hbar,
        mollifier: Some(moll),
    };
    let (lo, hi) = (-l + epsilon, l - epsilon);
    let mut bps = moll.breakpoints();
    bps.extend(width_breaks(target.x_star, beta));
    let cfg = quad_cfg();
    let n2 = integrate(|x: f64| w.value(x).norm_sqr(), lo, hi, &bps, &cfg)?;
    let b_norm = 1.0 / n2.value.sqrt();
    w.norm *= b_norm;

    let center = target.k_star.round_ties_even() as i64;
    let (k_lo, coeffs) = project_fft(&w, l, center);
    let mut series = SpectralSeries::new(k_lo, coeffs, TailBound::ZERO);
    let d1 = integrate(|x: f64| w.derivative(x, 1).unwrap().norm_sqr(), lo, hi, &bps, &cfg)?;
    let d2 = integrate(|x: f64| w.derivative(x, 2).unwrap().norm_sqr(), lo, hi, &bps, &cfg)?;
    let slack = 1e-13 + d2.error * (l / PI).powi(4);
    series.tail = parseval_tail(&series, l, [1.0, d1.value, d2.value], slack);
    Ok(StateDescriptor {
        family: Family::TruncatedGaussian { beta, epsilon, b_norm },
        target: *target,
        geometry: *geometry,
        series,
        evaluator: Some(Arc::new(w)),
        width_hint: beta,
    })
}

fn width_breaks(x0: f64, w: f64) -> Vec<f64> {
    [1.0, 4.0, 10.0, 30.0].iter().flat_map(|&m| [x0 - m * w, x0 + m * w]).chain([x0]).collect()
}

/// Sharp-cut Gaussian `psi_0beta` on `[-l, l]` (no mollifier). Negative fixture:
/// when `psi(l) != psi(-l)` its coefficients decay like `1/k`, so the
/// momentum dispersion is infinite and the tail bound records that.
pub fn build_sharp_cut_gaussian(geometry: &IntervalGeometry, target: &ClassicalTarget, beta: f64) -> Result<StateDescriptor> {
    check_beta(beta)?;
    let l = geometry.l;
    let mut w = GaussWave {
        norm: 1.0 / (2.0 * PI * beta * beta).powf(0.25),
        beta,
        x_star: target.x_star,
        wavenumber: target.p_star / geometry.hbar,
        mollifier: None,
    };
    let bps = width_breaks(target.x_star, beta);
    let cfg = quad_cfg();
    let n2 = integrate(|x: f64| w.value(x).norm_sqr(), -l, l, &bps, &cfg)?;
    let b_norm = 1.0 / n2.value.sqrt();
    w.norm *= b_norm;
    let center = target.k_star.round_ties_even() as i64;
    let cfg_k = quad_cfg();
    let ks: Vec<i64> = (center - 64..=center + 64).collect();
    let coeffs: Vec<Complex64> = ks
        .par_iter()
        .map(|&k| integrate(|x: f64| w.value(x) * plane(-k, x, l), -l, l, &bps, &cfg_k).map(|r| r.value / (2.0 * l).sqrt()))
        .collect::<Result<_>>()?;
    let mut series = SpectralSeries::new(center - 64, coeffs, TailBound::ZERO);
    // Integration by parts: a_k = (-1)^k l (psi(l) - psi(-l)) / (i pi k sqrt(2l)) + O(1/k^2).
    let jump = (w.value(l) - w.value(-l)).norm();
    let mass = (1.0 - series.norm2()).max(0.0) + 1e-13;
    // Without a jump the coefficients still decay only like 1/k^2 (derivative
    // jump), so the fourth moment diverges either way; the fixture never
    // claims a finite momentum tail.
    let diverges = jump > 1e-12;
    series.tail = TailBound {
        mass,
        abs_sum: if diverges { f64::INFINITY } else { (mass * PI / PI.tanh()).sqrt() },
        second: f64::INFINITY,
        fourth: f64::INFINITY,
    };
    Ok(StateDescriptor {
        family: Family::SharpCutGaussian { beta, b_norm },
        target: *target,
        geometry: *geometry,
        series,
        evaluator: Some(Arc::new(w)),
        width_hint: beta,
    })
}

// --------------------------------------------------------------- theta

#[derive(Debug, Clone)]
pub struct ThetaWave {
    pub a_norm: f64,
    pub alpha: f64,
    pub l: f64,
    pub x_star: f64,
    pub k_bar: i64,
}

impl ThetaWave {
    fn tau(&self) -> f64 {
        1.0 / (4.0 * PI * self.alpha * self.alpha)
    }

    /// Comb sums `(C, C', C'')` in `z`, with `theta = C / sqrt(tau)`.
    fn comb_derivs(&self, z: f64) -> (f64, f64, f64) {
        let g = PI / self.tau();
        let n0 = z.round_ties_even();
        let r = z - n0;
        let (mut c0, mut c1, mut c2) = (0.0, 0.0, 0.0);
        let mut j = 0i64;
        loop {
            let mut shell = 0.0;
            for d in if j == 0 { vec![r] } else { vec![r - j as f64, r + j as f64] } {
                let e = (-g * d * d).exp();
                c0 += e;
                c1 += -2.0 * g * d * e;
                c2 += (4.0 * g * g * d * d - 2.0 * g) * e;
                shell += e * (1.0 + g * d.abs()).powi(2);
            }
            if j > 0 && shell < 1e-18 * c0.abs().max(1e-300) || j > 100_000 {
                return (c0, c1, c2);
            }
            j += 1;
        }
    }
}

impl WaveFunction for ThetaWave {
    fn value(&self, x: f64) -> Complex64 {
        let z = (x - self.x_star) / (2.0 * self.l);
        let th = theta_eval(z, self.tau()).map(|v| v.value).unwrap_or(f64::NAN);
        plane(self.k_bar, x - self.x_star, self.l) * (self.a_norm * th / (2.0 * self.l).sqrt())
    }

    fn derivative(&self, x: f64, order: u32) -> Option<Complex64> {
        let l = self.l;
        let z = (x - self.x_star) / (2.0 * l);
        let (c0, c1, c2) = self.comb_derivs(z);
        let s = self.tau().sqrt();
        let (t0, t1, t2) = (c0 / s, c1 / s, c2 / s);
        let kappa = PI * self.k_bar as f64 / l;
        let e = plane(self.k_bar, x - self.x_star, l) * (self.a_norm / (2.0 * l).sqrt());
        let i = Complex64::new(0.0, 1.0);
        match order {
            1 => Some(e * (t1 / (2.0 * l) + i * kappa * t0)),
            2 => Some(e * (t2 / (4.0 * l * l) + i * kappa * t1 / l - kappa * kappa * t0)),
            _ => None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("alpha must be positive, got {alpha}")))
    }
}

pub fn build_theta_state(geometry: &IntervalGeometry, target: &ClassicalTarget, alpha: f64) -> Result<StateDescriptor> {
    build_theta_state_tol(geometry, target, alpha, BUILD_TOL)
}

pub fn build_theta_state_tol(geometry: &IntervalGeometry, target: &ClassicalTarget, alpha: f64, tol: f64) -> Result<StateDescriptor> {
    check_alpha(alpha)?;
    let l = geometry.l;
    let theta0 = theta_eval(0.0, 1.0 / (2.0 * PI * alpha * alpha))?.value;
    let a_norm = 1.0 / theta0.sqrt();
    let kb = target.k_bar;
    let tr = choose_truncation(&CoefficientModel::Gaussian { center: kb, amplitude: a_norm, alpha }, tol, K_MAX)?;
    let coeffs: Vec<Complex64> = (tr.k_lo..=tr.k_hi)
        .map(|k| {
            let j = (k - kb) as f64;
            plane(-k, target.x_star, l) * (a_norm * (-j * j / (4.0 * alpha * alpha)).exp())
        })
        .collect();
    let series = SpectralSeries::new(tr.k_lo, coeffs, tr.tail);
    let w = ThetaWave { a_norm, alpha, l, x_star: target.x_star, k_bar: kb };
    Ok(StateDescriptor {
        family: Family::Theta { alpha, a_norm },
        target: *target,
        geometry: *geometry,
        series,
        evaluator: Some(Arc::new(w)),
        width_hint: l / (2.0 * PI * alpha),
    })
}

// ------------------------------------------------------------- densities

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Result of the sampled checks on a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityCertificate {
    pub samples: usize,
    pub half_width: f64,
    pub max_asymmetry: f64,
    pub monotone: bool,
    pub total: f64,
    pub mean: f64,
}

/// Even, peaked, non-increasing momentum density with finite second moment.
#[derive(Clone)]
pub struct DensitySpec {
    pub name: String,
    /// Built-in scale parameter (NaN for custom densities).
    pub scale: f64,
    phi: DensityFn,
    pub second_moment: f64,
    pub peak_value: f64,
    /// Finite support half-width, if any.
    pub support: Option<f64>,
    /// Points (in `q`) where `phi` is not smooth.
    pub kinks: Vec<f64>,
    pub certificate: DensityCertificate,
}

impl fmt::Debug for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensitySpec")
            .field("name", &self.name)
            .field("scale", &self.scale)
            .field("second_moment", &self.second_moment)
            .field("peak_value", &self.peak_value)
            .field("support", &self.support)
            .field("certificate", &self.certificate)
            .finish()
    }
}

impl DensitySpec {
    /// `e^{-q^2 / 2 sigma^2} / (sigma sqrt(2 pi))`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        pos("sigma", sigma)?;
        let phi: DensityFn = Arc::new(move |q: f64| (-q * q / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt()));
        Self::certify("gaussian", sigma, phi, Some(sigma * sigma), None, vec![])
    }

    /// `e^{-|q| / b} / (2b)`; continuous but not differentiable at 0.
    pub fn laplace_symmetrized(b: f64) -> Result<Self> {
        pos("b", b)?;
        let phi: DensityFn = Arc::new(move |q: f64| (-q.abs() / b).exp() / (2.0 * b));
        Self::certify("laplace-symmetrized", b, phi, Some(2.0 * b * b), None, vec![0.0])
    }

    /// `(1 - |q| / w) / w` on `|q| < w`.
    pub fn triangular(w: f64) -> Result<Self> {
        pos("w", w)?;
        let phi: DensityFn = Arc::new(move |q: f64| if q.abs() < w { (1.0 - q.abs() / w) / w } else { 0.0 });
        Self::certify("triangular", w, phi, Some(w * w / 6.0), Some(w), vec![-w, 0.0, w])
    }

    pub fn by_name(name: &str, scale: f64) -> Result<Self> {
        match name {
            "gaussian" => Self::gaussian(scale),
            "laplace-symmetrized" | "laplace" => Self::laplace_symmetrized(scale),
            "triangular" => Self::triangular(scale),
            other => Err(invalid(format!("unknown density '{other}' (gaussian | laplace-symmetrized | triangular)"))),
        }
    }

    /// Arbitrary density; the second moment is computed by quadrature.
    pub fn custom(name: &str, phi: impl Fn(f64) -> f64 + Send + Sync + 'static, kinks: Vec<f64>) -> Result<Self> {
        Self::certify(name, f64::NAN, Arc::new(phi), None, None, kinks)
    }

    fn certify(name: &str, scale: f64, phi: DensityFn, m2: Option<f64>, support: Option<f64>, kinks: Vec<f64>) -> Result<Self> {
        let cfg = QuadConfig::new(1e-300, 1e-13).with_max_panels(4000);
        let f = phi.clone();
        let s0 = 1.0 / phi(0.0);
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::DensityNotNormalized(format!("phi(0) = {}", phi(0.0))));
        }
        let line = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
            match support {
                Some(w) => Ok(integrate(g, -w, w, &kinks, &cfg)?.value),
                None => {
                    let right = integrate_to_inf_scaled(g, 0.0, s0, &cfg)?.value;
                    let left = integrate_to_inf_scaled(|q: f64| g(-q), 0.0, s0, &cfg)?.value;
                    Ok(left + right)
                }
            }
        };
        let total = line(&|q| f(q))?;
        let second = match line(&|q| q * q * f(q)) {
            Ok(v) if v.is_finite() => v,
            _ => return Err(Error::InfiniteSecondMoment),
        };
        if support.is_none() {
            // The mapped quadrature can report a finite value for a divergent
            // moment; compare against the mass of q^2 phi far out.
            let bps: Vec<f64> = (4..=18).map(|e| s0 * 2f64.powi(e)).collect();
            let far = |q: f64| q * q * (f(q) + f(-q));
            let cfg_far = QuadConfig::new(1e-300, 1e-6).with_max_panels(4000);
            let grow = integrate(far, s0 * 1e3, s0 * 1e6, &bps, &cfg_far).map(|r| r.value).unwrap_or(f64::INFINITY);
            if !(grow <= 1e-8 * second.max(s0 * s0)) {
                return Err(Error::InfiniteSecondMoment);
            }
        }
        let mean = line(&|q| q * f(q))?;
        if let Some(m) = m2 {
            if (m - second).abs() > 1e-8 * m {
                return Err(Error::DensityNotNormalized(format!("second moment {second} differs from declared {m}")));
            }
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::DensityNotNormalized(format!("integral is {total}")));
        }
        if mean.abs() > 1e-10 * s0 {
            return Err(Error::DensityNotNormalized(format!("mean is {mean}")));
        }
        let sd = second.sqrt();
        let half_width = 8.0 * sd;
        let n = 10_000;
        let mut max_asym: f64 = 0.0;
        let mut prev = f64::INFINITY;
        let mut monotone = true;
        let mut bad_q = 0.0;
        for i in 0..=n {
            let q = half_width * i as f64 / n as f64;
            let (a, b) = (phi(q), phi(-q));
            let scale = a.abs().max(b.abs()).max(1e-300);
            max_asym = max_asym.max((a - b).abs() / scale);
            if a > prev * (1.0 + 1e-12) && monotone {
                monotone = false;
                bad_q = q;
            }
            prev = a;
        }
        if max_asym > 1e-10 {
            return Err(Error::DensityNotEven(max_asym));
        }
        if !monotone {
            return Err(Error::DensityNotMonotone(bad_q));
        }
        let peak_value = phi(0.0);
        Ok(DensitySpec {
            name: name.to_string(),
            scale,
            phi,
            second_moment: m2.unwrap_or(second),
            peak_value,
            support,
            kinks,
            certificate: DensityCertificate { samples: n + 1, half_width, max_asymmetry: max_asym, monotone, total, mean },
        })
    }

    pub fn phi(&self, q: f64) -> f64 {
        (self.phi)(q)
    }

    /// Standard deviation `Delta q`.
    pub fn std_dev(&self) -> f64 {
        self.second_moment.sqrt()
    }

    pub fn tag(&self) -> DensityTag {
        DensityTag { name: self.name.clone(), scale: self.scale, second_moment: self.second_moment, peak_value: self.peak_value }
    }

    /// `int_a^b phi`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        let (a, b) = match self.support {
            Some(w) => (a.max(-w), b.min(w)),
            None => (a, b),
        };
        if a >= b {
            return Ok(0.0);
        }
        let cfg = QuadConfig::new(1e-300, 1e-15).with_max_panels(2000);
        Ok(integrate(|q: f64| self.phi(q), a, b, &self.kinks, &cfg)?.value)
    }

    /// `int_s^inf (q / c + 1/2)^n phi(q) dq`.
    fn upper_tail(&self, s: f64, c: f64, n: i32) -> Result<f64> {
        let f = |q: f64| (q / c + 0.5).powi(n) * self.phi(q);
        let cfg = QuadConfig::new(1e-300, 1e-10).with_max_panels(4000);
        match self.support {
            Some(w) if s >= w => Ok(0.0),
            Some(w) => Ok(integrate(f, s, w, &self.kinks, &cfg)?.value),
            None => {
                let sd = self.std_dev();
                let cut = s.max(0.0) + 10.0 * sd;
                let body = integrate(f, s, cut, &[s + sd, s + 3.0 * sd], &cfg)?.value;
                let rest = integrate_to_inf_scaled(f, cut, sd, &cfg)?.value;
                Ok(body + rest)
            }
        }
    }
}

fn pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

/// One-sided certified tail for bins `j > jj` (absolute-index weights folded in).
fn disc_tail(d: &DensitySpec, c: f64, jj: i64, kb: i64) -> Result<TailBound> {
    let s = c * (jj as f64 + 0.5);
    let t0 = d.upper_tail(s, c, 0)?;
    let t2 = d.upper_tail(s, c, 2)?;
    let t4 = d.upper_tail(s, c, 4)?;
    let k = kb as f64;
    let (second, fourth) = if kb == 0 { (t2, t4) } else { (2.0 * k * k * t0 + 2.0 * t2, 8.0 * k.powi(4) * t0 + 8.0 * t4) };
    let abs = if jj == 0 { (t0 * (1.0 + PI * PI / 6.0)).sqrt() } else { (t2 / jj as f64).sqrt() };
    // both sides
    Ok(TailBound { mass: 2.0 * t0, abs_sum: 2.0 * abs, second: 2.0 * second, fourth: 2.0 * fourth })
}

pub fn build_discretized_state(geometry: &IntervalGeometry, target: &ClassicalTarget, density: &DensitySpec, alpha: f64) -> Result<StateDescriptor> {
    build_discretized_state_tol(geometry, target, density, alpha, BUILD_TOL)
}

pub fn build_discretized_state_tol(geometry: &IntervalGeometry, target: &ClassicalTarget, density: &DensitySpec, alpha: f64, tol: f64) -> Result<StateDescriptor> {
    check_alpha(alpha)?;
    let l = geometry.l;
    let c = PI / (l * alpha);
    let kb = target.k_bar;
    // Smallest J with certified tail below tol (the tail is non-increasing in J).
    let ok = |j: i64| -> Result<bool> { Ok(disc_tail(density, c, j, kb)?.weighted4() < tol) };
    let mut hi = 1i64;
    while !ok(hi)? {
        hi *= 2;
        if hi > K_MAX {
            return Err(Error::NoFiniteTail { what: "discretized density tail".into(), tol, k_max: K_MAX });
        }
    }
    let mut lo = hi / 2;
    if lo == 0 && ok(0)? {
        hi = 0;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let jj = hi;
    let tail = disc_tail(density, c, jj, kb)?;
    let masses: Vec<f64> = (0..=jj)
        .into_par_iter()
        .map(|j| density.mass(c * (j as f64 - 0.5), c * (j as f64 + 0.5)))
        .collect::<Result<_>>()?;
    let coeffs: Vec<Complex64> = (-jj..=jj)
        .map(|j| {
            let k = kb + j;
            plane(-k, target.x_star, l) * masses[j.unsigned_abs() as usize].max(0.0).sqrt()
        })
        .collect();
    let series = SpectralSeries::new(kb - jj, coeffs, tail);
    Ok(StateDescriptor {
        family: Family::Discretized { density: density.tag(), alpha },
        target: *target,
        geometry: *geometry,
        series,
        evaluator: None,
        width_hint: 1.0 / (2.0 * alpha * density.std_dev()),
    })
}

// -------------------------------------------------------- well-adapted

/// Inner family for the wall-adapted construction.
#[derive(Debug, Clone)]
pub enum InnerFamily {
    Theta { alpha: f64 },
    Discretized { density: DensitySpec, alpha: f64 },
}

#[derive(Clone)]
pub struct WellWave {
    pub inner: Arc<dyn WaveFunction>,
    pub l: f64,
    pub norm: f64,
}

impl WaveFunction for WellWave {
    fn value(&self, x: f64) -> Complex64 {
        (self.inner.value(x + self.l) - self.inner.value(-x - self.l)) / self.norm
    }

    fn derivative(&self, x: f64, order: u32) -> Option<Complex64> {
        let a = self.inner.derivative(x + self.l, order)?;
        let b = self.inner.derivative(-x - self.l, order)?;
        match order {
            1 => Some((a + b) / self.norm),
            2 => Some((a - b) / self.norm),
            _ => None,
        }
    }
}

/// Number of momentum modes kept for the wall-adapted state (each side).
pub const WELL_M: i64 = 1 << 15;

/// Antisymmetrized doubled-interval state
/// `Psi(x) = psi2(x + l) - psi2(-x - l)`, where `psi2` is the inner family on
/// `[-2l, 2l]` with target `(x* + l, p*)`; renormalized to unit norm.
pub fn build_well_adapted(geometry: &IntervalGeometry, target: &ClassicalTarget, inner: &InnerFamily) -> Result<StateDescriptor> {
    let l = geometry.l;
    let g2 = geometry.doubled();
    let t2 = ClassicalTarget::new(&g2, target.x_star + l, target.p_star)?;
    let (inner_state, inner_tag) = match inner {
        InnerFamily::Theta { alpha } => (build_theta_state_tol(&g2, &t2, *alpha, 1e-40)?, Family::Theta { alpha: *alpha, a_norm: 0.0 }),
        InnerFamily::Discretized { density, alpha } => {
            let s = build_discretized_state_tol(&g2, &t2, density, *alpha, 1e-40)?;
            (s, Family::Discretized { density: density.tag(), alpha: *alpha })
        }
    };
    let inner_family = match (&inner_state.family, inner_tag) {
        (f @ Family::Theta { .. }, _) => f.clone(),
        (_, t) => t,
    };
    let c = &inner_state.series;
    let kmax = c.truncation_k();
    let d = |k: i64| c.get(k) - c.get(-k);

    // Energy coefficients b_n = i (-1)^n (c_n - c_{-n}); their norm is the raw norm.
    let raw2: f64 = (1..=kmax).map(|n| d(n).norm_sqr()).sum();
    let raw_norm = raw2.sqrt();
    if !(raw_norm > 0.0) {
        return Err(Error::ZeroSeries);
    }

    let h = kmax as f64 / 2.0;
    let m_cap = WELL_M.max(kmax + 16);
    // e_k = i (c_k - c_{-k}) over positive odd k; a_m odd part
    // ((-1)^m / (sqrt2 pi)) sum_{k>0 odd} e_k k / (k^2/4 - m^2).
    let odd: Vec<(f64, Complex64)> = (1..=kmax).step_by(2).map(|k| (k as f64, Complex64::new(0.0, 1.0) * d(k))).collect();
    let e1: f64 = odd.iter().map(|(k, e)| e.norm() * k).sum();
    let s2 = std::f64::consts::SQRT_2;
    let coeffs: Vec<Complex64> = (-m_cap..=m_cap)
        .into_par_iter()
        .map(|m| {
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let mf = m as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(k, e) in &odd {
                acc += e * (k / (k * k / 4.0 - mf * mf));
            }
            let even = if (2 * m).abs() <= kmax { d(2 * m) } else { Complex64::new(0.0, 0.0) };
            (even * sign + acc * (sign / PI)) / s2 / raw_norm
        })
        .collect();
    let dd = e1 / (s2 * PI) / raw_norm;
    let gap = m_cap as f64 - h;
    let inner_tail = c.tail.scaled(1.0 / raw_norm);
    let tail = TailBound {
        mass: 2.0 * dd * dd / (3.0 * gap.powi(3)) + 2.0 * inner_tail.mass,
        abs_sum: 2.0 * dd / gap,
        second: 2.0 * dd * dd / gap,
        fourth: f64::INFINITY,
    };
    let series = SpectralSeries::new(-m_cap, coeffs, tail);

    let inner_wave: Arc<dyn WaveFunction> = match &inner_state.evaluator {
        Some(e) => e.clone(),
        None => Arc::new(SeriesWave { series: inner_state.series.clone(), l: g2.l }),
    };
    let w = WellWave { inner: inner_wave, l, norm: raw_norm };
    Ok(StateDescriptor {
        family: Family::WellAdapted { inner: Box::new(inner_family), raw_norm, inner_series: Box::new(inner_state.series.clone()) },
        target: *target,
        geometry: *geometry,
        series,
        evaluator: Some(Arc::new(w)),
        width_hint: inner_state.width_hint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{boundary_values, evaluate_wave};

    fn dimless() -> IntervalGeometry {
        IntervalGeometry::dimensionless()
    }

    #[test]
    fn mollifier_plateau_and_walls() {
        let m = build_mollifier(&dimless(), 0.1).unwrap();
        assert_eq!(m.eta(0.0), 1.0);
        assert_eq!(m.eta(0.69), 1.0);
        assert_eq!(m.eta(1.0), 0.0);
        assert_eq!(m.eta(-1.0), 0.0);
        assert_eq!(m.eta(0.95), 0.0);
        let mid = m.eta(0.8);
        assert!((mid - 0.5).abs() < 1e-14, "{mid}");
        // int omega = 1 and C_eps = 1/(2 eps E)
        let cfg = QuadConfig::new(1e-300, 1e-14);
        let tot = integrate(|x: f64| m.omega(x), -0.1, 0.1, &[0.0], &cfg).unwrap().value;
        assert!((tot - 1.0).abs() < 1e-12);
        assert!((m.c_eps * 0.2 * 0.148_495_506_775_922 - 1.0).abs() < 1e-9);
        let d = integrate(|x: f64| m.eta_d1(x), -1.0, 1.0, &m.breakpoints(), &cfg).unwrap().value;
        assert!(d.abs() < 1e-13);
    }

    #[test]
    fn mollifier_eps_too_large() {
        assert!(matches!(build_mollifier(&dimless(), 0.34), Err(Error::EpsilonTooLarge { .. })));
    }

    #[test]
    fn eta_derivative_consistent() {
        let m = build_mollifier(&dimless(), 0.1).unwrap();
        // eta' has a kink at +-(l - 2 eps), the centre of the bump.
        for &x in &[0.75, 0.79, 0.83, -0.78] {
            let h = 1e-6;
            let fd = (m.eta(x + h) - m.eta(x - h)) / (2.0 * h);
            assert!((fd - m.eta_d1(x)).abs() < 1e-6, "x = {x}");
            let fd2 = (m.eta_d1(x + h) - m.eta_d1(x - h)) / (2.0 * h);
            assert!((fd2 - m.eta_d2(x)).abs() < 1e-4 * (1.0 + fd2.abs()), "x = {x}");
        }
    }

    #[test]
    fn theta_normalization_and_symmetry() {
        let g = dimless();
        let s = build_theta_state(&g, &ClassicalTarget::origin(), 1.0).unwrap();
        let Family::Theta { a_norm, .. } = s.family else { panic!() };
        let th = theta_eval(0.0, 1.0 / (2.0 * PI)).unwrap().value;
        assert!((a_norm * a_norm * th - 1.0).abs() < 1e-15);
        assert!((s.series.norm2() - 1.0).abs() < 1e-14);
        for k in 1..10 {
            assert_eq!(s.series.get(k), s.series.get(-k));
        }
        let a = evaluate_wave(&s, 0.37).unwrap().value;
        let b = evaluate_wave(&s, -0.37).unwrap().value;
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn theta_series_matches_closed_form() {
        let g = dimless();
        let t = ClassicalTarget::new(&g, 0.3, 7.0).unwrap();
        let s = build_theta_state(&g, &t, 4.0).unwrap();
        let w = s.evaluator.as_ref().unwrap();
        for i in 0..=100 {
            let x = -1.0 + 0.02 * i as f64;
            let a = evaluate_wave(&s, x).unwrap().value;
            assert!((a - w.value(x)).norm() < 1e-12, "x = {x}");
        }
        for &x in &[0.1, 0.35, -0.6] {
            let d1 = s.series.eval_deriv(x, 1.0, 1);
            let d2 = s.series.eval_deriv(x, 1.0, 2);
            assert!((d1 - w.derivative(x, 1).unwrap()).norm() < 1e-10 * d1.norm().max(1.0));
            assert!((d2 - w.derivative(x, 2).unwrap()).norm() < 1e-10 * d2.norm().max(1.0));
        }
    }

    #[test]
    fn theta_boundary_periodic() {
        let g = dimless();
        let t = ClassicalTarget::new(&g, 0.4, 3.0).unwrap();
        let s = build_theta_state(&g, &t, 1.0).unwrap();
        let b = boundary_values(&s).unwrap();
        assert!((b.left - b.right).norm() < 1e-14);
        assert!(b.left.norm() > 1e-6);
        assert!((b.series_value - b.right).norm() < 1e-12);
    }

    #[test]
    fn gaussian_real_even_at_origin() {
        let g = dimless();
        let s = build_truncated_gaussian(&g, &ClassicalTarget::origin(), 0.05, 0.02).unwrap();
        let Family::TruncatedGaussian { b_norm, .. } = s.family else { panic!() };
        assert!((b_norm - 1.0).abs() < 1e-10);
        let w = s.evaluator.as_ref().unwrap();
        for &x in &[0.01, 0.07, 0.2] {
            let a = w.value(x);
            assert!(a.im.abs() < 1e-16);
            assert!((a - w.value(-x)).norm() < 1e-16);
        }
        assert_eq!(w.value(1.0).norm(), 0.0);
        assert_eq!(w.derivative(-1.0, 1).unwrap().norm(), 0.0);
    }

    #[test]
    fn gaussian_target_validation() {
        let g = dimless();
        let t = ClassicalTarget::new(&g, 0.95, 0.0).unwrap();
        assert!(matches!(build_truncated_gaussian(&g, &t, 0.05, 0.02), Err(Error::TargetTooCloseToWall { .. })));
        assert!(matches!(build_truncated_gaussian(&g, &ClassicalTarget::new(&g, 0.5, 0.0).unwrap(), 0.05, 0.2), Err(Error::TargetTooCloseToWall { .. })));
        assert!(matches!(build_truncated_gaussian(&g, &ClassicalTarget::origin(), 0.05, 0.4), Err(Error::EpsilonTooLarge { .. })));
    }

    #[test]
    fn gaussian_series_matches_closed_form() {
        let g = dimless();
        let t = ClassicalTarget::new(&g, -0.2, 5.0).unwrap();
        let s = build_truncated_gaussian(&g, &t, 0.1, 0.05).unwrap();
        let w = s.evaluator.as_ref().unwrap();
        for i in 0..=50 {
            let x = -1.0 + 0.04 * i as f64;
            assert!((s.series.eval(x, 1.0) - w.value(x)).norm() < 1e-10, "x = {x}");
        }
        assert!(s.series.tail.fourth.is_finite());
    }

    #[test]
    fn densities_certify() {
        for d in [DensitySpec::gaussian(1.0).unwrap(), DensitySpec::laplace_symmetrized(0.5).unwrap(), DensitySpec::triangular(2.0).unwrap()] {
            assert!((d.certificate.total - 1.0).abs() < 1e-10);
            assert!(d.certificate.monotone);
        }
        assert!(matches!(DensitySpec::custom("shifted", |q: f64| (-(q - 0.5) * (q - 0.5) / 2.0).exp() / (2.0 * PI).sqrt(), vec![]), Err(_)));
        let bimodal = |q: f64| 0.5 * ((-(q - 2.0).powi(2) / 2.0).exp() + (-(q + 2.0).powi(2) / 2.0).exp()) / (2.0 * PI).sqrt();
        assert!(matches!(DensitySpec::custom("bimodal", bimodal, vec![]), Err(Error::DensityNotMonotone(_))));
        let cauchy = |q: f64| 1.0 / (PI * (1.0 + q * q));
        assert!(matches!(DensitySpec::custom("cauchy", cauchy, vec![]), Err(Error::InfiniteSecondMoment)));
    }

    #[test]
    fn discretized_sums_to_one() {
        let g = dimless();
        let d = DensitySpec::gaussian(1.0).unwrap();
        let t = ClassicalTarget::new(&g, 0.1, 4.0).unwrap();
        let s = build_discretized_state(&g, &t, &d, 10.0).unwrap();
        assert!((s.series.norm2() - 1.0).abs() <= 1e-12 + s.series.tail.mass);
        let kb = t.k_bar;
        for j in 1..20 {
            assert!((s.series.get(kb + j).norm() - s.series.get(kb - j).norm()).abs() < 1e-16);
        }
    }

    #[test]
    fn well_adapted_vanishes_at_walls() {
        let g = dimless();
        let t = ClassicalTarget::new(&g, 0.2, 3.0).unwrap();
        let s = build_well_adapted(&g, &t, &InnerFamily::Theta { alpha: 4.0 }).unwrap();
        let b = boundary_values(&s).unwrap();
        assert!(b.left.norm() < 1e-10 && b.right.norm() < 1e-10);
        let Family::WellAdapted { raw_norm, .. } = &s.family else { panic!() };
        assert!((raw_norm - 1.0).abs() < 1e-3);
        // series agrees with closed form within its certified tail
        let w = s.evaluator.as_ref().unwrap();
        for &x in &[-0.5, 0.0, 0.2, 0.7] {
            let v = s.series.eval(x, 1.0);
            assert!((v - w.value(x)).norm() <= s.series.eval_error(1.0) + 1e-12);
        }
    }
}
