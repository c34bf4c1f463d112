//! Position, momentum and energy moments, uncertainty reports and
//! dispersion-finiteness diagnostics.

use std::f64::consts::{PI, SQRT_2};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::domain::{boundary_values, EnergySeries, Family, MomentReport, Neumaier, StateDescriptor};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, QuadConfig, QuadValue};

/// Quadrature tolerance (dimensionless, after scaling `x = l u`).
const POS_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionMoments {
    pub norm: f64,
    pub mean_x: f64,
    pub dstar_x2: f64,
    pub dx2: f64,
    /// Certified bound on the error of `dstar_x2` (quadrature plus series truncation).
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumMoments {
    pub norm: f64,
    pub mean_p: f64,
    pub dstar_p2: f64,
    pub dp2: f64,
    /// Bound on the contribution of the truncated coefficients to `dstar_p2`.
    pub tail_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMomentum {
    pub mean_p: f64,
    pub dstar_p2: f64,
    /// Imaginary parts of the two matrix elements; zero for a self-adjoint `p`.
    pub mean_p_imag: f64,
    pub dstar_p2_imag: f64,
    pub error: f64,
}

/// Three moments integrated in one adaptive pass.
#[derive(Debug, Clone, Copy)]
struct Triple([f64; 3]);

impl Add for Triple {
    type Output = Triple;
    fn add(self, o: Triple) -> Triple {
        Triple([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}
impl Sub for Triple {
    type Output = Triple;
    fn sub(self, o: Triple) -> Triple {
        Triple([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}
impl Mul<f64> for Triple {
    type Output = Triple;
    fn mul(self, f: f64) -> Triple {
        Triple([self.0[0] * f, self.0[1] * f, self.0[2] * f])
    }
}
impl QuadValue for Triple {
    fn zero() -> Self {
        Triple([0.0; 3])
    }
    fn magnitude(self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn scaled_breaks(s: &StateDescriptor) -> Vec<f64> {
    let l = s.geometry.l;
    s.breakpoints().into_iter().map(|x| x / l).collect()
}

/// `x_bar`, `Delta*x^2` and `Delta x^2 = Delta*x^2 - (x_bar - x*)^2` by adaptive quadrature.
pub fn position_moments(s: &StateDescriptor) -> Result<PositionMoments> {
    let l = s.geometry.l;
    let us = s.target.x_star / l;
    let f = |u: f64| {
        let d = l * s.psi(l * u).norm_sqr();
        Triple([d, u * d, (u - us) * (u - us) * d])
    };
    let cfg = QuadConfig::new(POS_TOL, 1e-14).with_max_panels(20_000);
    let r = integrate(f, -1.0, 1.0, &scaled_breaks(s), &cfg)?;
    let [m0, m1, m2] = r.value.0;
    // Without a closed form, |psi_K|^2 differs from |psi|^2 by at most
    // 2 ||psi - psi_K|| + ||psi - psi_K||^2 in L^1.
    let series_err = if s.evaluator.is_none() {
        let t = s.series.tail.mass.sqrt();
        2.0 * t + t * t
    } else {
        0.0
    };
    let mean_x = l * m1;
    let dstar_x2 = l * l * m2;
    let dev = mean_x - s.target.x_star;
    Ok(PositionMoments {
        norm: m0,
        mean_x,
        dstar_x2,
        dx2: (dstar_x2 - dev * dev).max(0.0),
        error: l * l * (r.error + 4.0 * series_err),
    })
}

/// Coefficient-series momentum moments. Sums run in units of `k`
/// (integers, exact) and are scaled by `pi hbar / l` at the end.
pub fn momentum_moments(s: &StateDescriptor) -> Result<MomentumMoments> {
    let t = s.series.tail;
    if !t.second.is_finite() {
        return Err(Error::NoFiniteTail {
            what: "sum k^2 |a_k|^2 diverges (infinite momentum dispersion)".into(),
            tol: f64::INFINITY,
            k_max: s.series.truncation_k(),
        });
    }
    let kb = s.target.k_bar;
    // k* - k_bar, small; k - k* = (k - k_bar) - this
    let frac = s.target.k_star - kb as f64;
    let (mut n0, mut m1) = (Neumaier::default(), Neumaier::default());
    for (k, a) in s.series.iter() {
        let w = a.norm_sqr();
        n0.add(w);
        m1.add((k - kb) as f64 * w);
    }
    let mean_j = m1.value();
    let (mut d_star, mut d_mean) = (Neumaier::default(), Neumaier::default());
    for (k, a) in s.series.iter() {
        let w = a.norm_sqr();
        let j = (k - kb) as f64;
        d_star.add((j - frac) * (j - frac) * w);
        d_mean.add((j - mean_j) * (j - mean_j) * w);
    }
    let dp = s.geometry.dp();
    let ks = s.target.k_star.abs() + mean_j.abs() + kb.unsigned_abs() as f64;
    let tail_k2 = 2.0 * (t.second + ks * ks * t.mass);
    Ok(MomentumMoments {
        norm: n0.value(),
        mean_p: dp * (kb as f64 * n0.value() + mean_j),
        dstar_p2: dp * dp * d_star.value(),
        dp2: dp * dp * d_mean.value(),
        tail_error: dp * dp * tail_k2,
    })
}

/// `p_bar = <psi, -i hbar psi'>` and `Delta*p^2 = <psi, (-i hbar d/dx - p*)^2 psi>`
/// by quadrature of the closed-form derivatives.
pub fn momentum_moments_quadrature(s: &StateDescriptor) -> Result<QuadratureMomentum> {
    let l = s.geometry.l;
    let hbar = s.geometry.hbar;
    let p = s.target.p_star;
    let ev = s.evaluator.as_ref().ok_or(Error::NotInDomain)?;
    if ev.derivative(0.0, 1).is_none() || ev.derivative(0.0, 2).is_none() {
        return Err(Error::NotInDomain);
    }
    let i = Complex64::new(0.0, 1.0);
    let cfg = QuadConfig::new(POS_TOL, 1e-14).with_max_panels(20_000);
    let bps = scaled_breaks(s);
    // In u = x / l: d/dx = (1/l) d/du; integrands carry the Jacobian l.
    let mean = integrate(
        |u: f64| {
            let x = l * u;
            ev.value(x).conj() * (-i * hbar) * ev.derivative(x, 1).unwrap() * l
        },
        -1.0,
        1.0,
        &bps,
        &cfg,
    )?;
    let disp = integrate(
        |u: f64| {
            let x = l * u;
            let v = ev.value(x);
            let d1 = ev.derivative(x, 1).unwrap();
            let d2 = ev.derivative(x, 2).unwrap();
            v.conj() * (-hbar * hbar * d2 + 2.0 * i * hbar * p * d1 + p * p * v) * l
        },
        -1.0,
        1.0,
        &bps,
        &cfg,
    )?;
    Ok(QuadratureMomentum {
        mean_p: mean.value.re,
        dstar_p2: disp.value.re,
        mean_p_imag: mean.value.im,
        dstar_p2_imag: disp.value.im,
        error: disp.error,
    })
}

/// Well-basis coefficients `b_1..b_N` from the momentum coefficients.
///
/// Even `n = 2m`: `b_n = (-1)^m (i / sqrt 2)(a_m - a_{-m})`.
/// Odd `n`: `b_n = (n / (sqrt 2 pi)) sum_k (-1)^k a_k / (k^2 - n^2 / 4)`.
/// For wall-adapted states the exact doubled-interval coefficients are used.
pub fn energy_expand(s: &StateDescriptor, n_max: usize) -> Result<EnergySeries> {
    if n_max == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let energies: Vec<f64> = (1..=n_max).map(|n| s.geometry.energy(n as u64)).collect();
    if let Family::WellAdapted { raw_norm, inner_series, .. } = &s.family {
        let i = Complex64::new(0.0, 1.0);
        let err = inner_series.tail.mass.sqrt() * 2.0 / raw_norm;
        let coeffs = (1..=n_max as i64)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                i * sign * (inner_series.get(n) - inner_series.get(-n)) / *raw_norm
            })
            .collect();
        return Ok(EnergySeries { coeffs, errors: vec![err; n_max], energies });
    }
    let series = &s.series;
    let tail = series.tail;
    let i = Complex64::new(0.0, 1.0);
    let pairs: Vec<(Complex64, f64)> = (1..=n_max as i64)
        .into_par_iter()
        .map(|n| {
            if n % 2 == 0 {
                let m = n / 2;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let b = (series.get(m) - series.get(-m)) * (i * sign / SQRT_2);
                let inside = m <= series.k_hi() && m >= series.k_lo() && -m >= series.k_lo() && -m <= series.k_hi();
                (b, if inside { 0.0 } else { tail.mass.sqrt() })
            } else {
                let h2 = (n * n) as f64 / 4.0;
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, a) in series.iter() {
                    let sgn = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    acc += a * (sgn / ((k * k) as f64 - h2));
                }
                let pre = n as f64 / (SQRT_2 * PI);
                (acc * pre, pre * 4.0 * tail.abs_sum)
            }
        })
        .collect();
    let (coeffs, errors) = pairs.into_iter().unzip();
    Ok(EnergySeries { coeffs, errors, energies })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    Converged,
    Divergent,
    Inconclusive,
}

impl GrowthClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            GrowthClass::Converged => "CONVERGED",
            GrowthClass::Divergent => "DIVERGENT",
            GrowthClass::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Converged when the last dyadic increment is below `1e-8` relative;
/// divergent when every ratio `S_2N / S_N` exceeds `1.2`.
pub fn classify_dyadic(ladder: &[(usize, f64)]) -> GrowthClass {
    if ladder.len() < 2 {
        return GrowthClass::Inconclusive;
    }
    let (_, top) = ladder[ladder.len() - 1];
    let (_, prev) = ladder[ladder.len() - 2];
    if top == 0.0 || ((top - prev) / top).abs() < 1e-8 {
        return GrowthClass::Converged;
    }
    if ladder.windows(2).all(|w| w[0].1 > 0.0 && w[1].1 / w[0].1 > 1.2) {
        return GrowthClass::Divergent;
    }
    GrowthClass::Inconclusive
}

/// Partial sums of `w(n)` at `N = n0, 2 n0, ...` up to `n_max` (always including `n_max`).
fn dyadic_sums(terms: &[f64], n0: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut acc = Neumaier::default();
    let mut next = n0.max(1);
    for (idx, t) in terms.iter().enumerate() {
        acc.add(*t);
        let n = idx + 1;
        if n == next {
            out.push((n, acc.value()));
            next *= 2;
        }
    }
    out
}

pub const DYADIC_START: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMoments {
    pub mean_e: Option<f64>,
    pub dstar_e2: Option<f64>,
    pub mean_class: GrowthClass,
    pub class: GrowthClass,
    /// `(N, S_N)` for `S_N = sum_{n <= N} (E_n - E*)^2 |b_n|^2`.
    pub ladder: Vec<(usize, f64)>,
    pub parseval: f64,
}

pub fn energy_moments(e: &EnergySeries, e_star: f64) -> EnergyMoments {
    energy_moments_from(e, e_star, DYADIC_START)
}

pub fn energy_moments_from(e: &EnergySeries, e_star: f64, n0: usize) -> EnergyMoments {
    let w: Vec<f64> = e.coeffs.iter().map(|b| b.norm_sqr()).collect();
    let mean_terms: Vec<f64> = w.iter().zip(&e.energies).map(|(w, en)| w * en).collect();
    let disp_terms: Vec<f64> = w.iter().zip(&e.energies).map(|(w, en)| w * (en - e_star) * (en - e_star)).collect();
    let mean_ladder = dyadic_sums(&mean_terms, n0);
    let ladder = dyadic_sums(&disp_terms, n0);
    let mean_class = classify_dyadic(&mean_ladder);
    let class = classify_dyadic(&ladder);
    let total = |t: &[f64]| {
        let mut a = Neumaier::default();
        t.iter().for_each(|v| a.add(*v));
        a.value()
    };
    EnergyMoments {
        mean_e: (mean_class == GrowthClass::Converged).then(|| total(&mean_terms)),
        dstar_e2: (class == GrowthClass::Converged).then(|| total(&disp_terms)),
        mean_class,
        class,
        ladder,
        parseval: e.norm2(),
    }
}

/// Full moment report with the uncertainty-relation checks.
pub fn uncertainty_report(s: &StateDescriptor) -> Result<MomentReport> {
    let x = position_moments(s)?;
    let p = momentum_moments(s)?;
    let l = s.geometry.l;
    let hbar = s.geometry.hbar;
    let product = (x.dx2 * p.dp2).sqrt();
    let upper = ((x.dx2 + x.error) * (p.dp2 + p.tail_error)).sqrt() * (1.0 + 1e-12);
    let shape = 1.0 - 3.0 * x.dx2 / (l * l);
    let slack = 3.0 * x.error / (l * l) + 1e-13;
    let weak = 0.16 * hbar * shape;
    let conj = 0.5 * hbar * shape;
    Ok(MomentReport {
        mean_x: x.mean_x,
        mean_p: p.mean_p,
        dstar_x2: x.dstar_x2,
        dstar_p2: p.dstar_p2,
        dx2: x.dx2,
        dp2: p.dp2,
        product,
        quadrature_error: x.error,
        series_tail_error: p.tail_error,
        weak_bound_rhs: weak,
        weak_bound_ok: upper >= weak - 0.16 * hbar * slack,
        conjectured_rhs: conj,
        conjectured_ok: upper >= conj - 0.5 * hbar * slack,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinitenessReport {
    pub momentum: GrowthClass,
    pub energy: GrowthClass,
    pub left: Complex64,
    pub right: Complex64,
    /// Finite momentum dispersion implies `psi(-l) = psi(l)`.
    pub momentum_implies_periodic: bool,
    /// Finite energy dispersion implies `psi(-l) = psi(l) = 0`.
    pub energy_implies_dirichlet: bool,
}

const BOUNDARY_TOL: f64 = 1e-8;

/// Classifies `sum k^2 |a_k|^2` and `sum n^4 |b_n|^2` and cross-checks the
/// boundary conditions each finiteness requires.
pub fn finiteness_diagnostic(s: &StateDescriptor, n_max: usize) -> Result<FinitenessReport> {
    let momentum = if s.series.tail.second.is_finite() {
        GrowthClass::Converged
    } else {
        // Partial sums over growing windows around the centre of the stored series.
        let c = (s.series.k_lo() + s.series.k_hi()) / 2;
        let reach = (s.series.k_hi() - c).min(c - s.series.k_lo()).max(0) as usize;
        let terms: Vec<f64> = (0..=reach as i64)
            .map(|j| {
                let w = |k: i64| (k * k) as f64 * s.series.get(k).norm_sqr();
                if j == 0 {
                    w(c)
                } else {
                    w(c + j) + w(c - j)
                }
            })
            .collect();
        classify_dyadic(&dyadic_sums(&terms, 32.min(reach.max(1))))
    };
    let e = energy_expand(s, n_max)?;
    let energy = energy_moments(&e, 0.0).class;
    let (left, right) = match &s.evaluator {
        Some(ev) => (ev.value(-s.geometry.l), ev.value(s.geometry.l)),
        None => {
            let b = boundary_values(s)?;
            (b.left, b.right)
        }
    };
    let scale = 1.0 / (2.0 * s.geometry.l).sqrt();
    let periodic = (left - right).norm() <= BOUNDARY_TOL * scale;
    let dirichlet = left.norm() <= BOUNDARY_TOL * scale && right.norm() <= BOUNDARY_TOL * scale;
    Ok(FinitenessReport {
        momentum,
        energy,
        left,
        right,
        momentum_implies_periodic: momentum != GrowthClass::Converged || periodic,
        energy_implies_dirichlet: energy != GrowthClass::Converged || dirichlet,
    })
}
