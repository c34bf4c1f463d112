//! Geometry, classical targets, momentum-coefficient series and state
//! descriptors shared by every other module.
//!
//! Momentum eigenfunctions on `[-l, l]` are `e^{i pi k x / l} / sqrt(2l)` with
//! eigenvalues `p_k = pi hbar k / l`; well eigenfunctions are
//! `sin(pi n (x - l) / 2l) / sqrt(l)` with `E_n = (hbar^2 / 2m)(pi n / 2l)^2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::specfun::gaussian_tail;

/// CODATA reduced Planck constant, J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Mass of a hydrogen atom, kg (default particle in SI mode).
pub const MASS_HYDROGEN_SI: f64 = 1.673_557_5e-27;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitMode {
    Dimensionless,
    Si,
}

impl fmt::Display for UnitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitMode::Dimensionless => "dimensionless",
            UnitMode::Si => "si",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalGeometry {
    pub l: f64,
    pub hbar: f64,
    pub mass: f64,
    pub unit_mode: UnitMode,
}

impl IntervalGeometry {
    pub fn new(l: f64, hbar: f64, mass: f64, unit_mode: UnitMode) -> Result<Self> {
        for (name, v) in [("l", l), ("hbar", hbar), ("mass", mass)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if unit_mode == UnitMode::Dimensionless && (l != 1.0 || hbar != 1.0 || mass != 1.0) {
            return Err(invalid("dimensionless mode requires l = hbar = mass = 1"));
        }
        Ok(IntervalGeometry { l, hbar, mass, unit_mode })
    }

    pub fn dimensionless() -> Self {
        IntervalGeometry { l: 1.0, hbar: 1.0, mass: 1.0, unit_mode: UnitMode::Dimensionless }
    }

    /// SI geometry with CODATA hbar.
    pub fn si(l: f64, mass: f64) -> Result<Self> {
        Self::new(l, HBAR_SI, mass, UnitMode::Si)
    }

    /// Geometry with free scales (used for ladders in `l` or `hbar`).
    pub fn scaled(l: f64, hbar: f64, mass: f64) -> Result<Self> {
        let mode = if l == 1.0 && hbar == 1.0 && mass == 1.0 { UnitMode::Dimensionless } else { UnitMode::Si };
        Self::new(l, hbar, mass, mode)
    }

    /// Momentum quantum `pi hbar / l`.
    pub fn dp(&self) -> f64 {
        PI * self.hbar / self.l
    }

    pub fn p_k(&self, k: i64) -> f64 {
        self.dp() * k as f64
    }

    pub fn energy(&self, n: u64) -> f64 {
        let q = PI * n as f64 / (2.0 * self.l);
        self.hbar * self.hbar / (2.0 * self.mass) * q * q
    }

    /// Same scales on the doubled interval `[-2l, 2l]`.
    pub fn doubled(&self) -> Self {
        IntervalGeometry { l: 2.0 * self.l, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalTarget {
    pub x_star: f64,
    pub p_star: f64,
    pub k_star: f64,
    pub k_bar: i64,
}

impl ClassicalTarget {
    pub fn new(geom: &IntervalGeometry, x_star: f64, p_star: f64) -> Result<Self> {
        if !(x_star.abs() < geom.l) {
            return Err(invalid(format!("|x*| must be < l = {}, got {x_star}", geom.l)));
        }
        if !p_star.is_finite() {
            return Err(invalid("p* must be finite"));
        }
        let k_star = geom.l / PI * p_star / geom.hbar;
        if k_star.abs() > 1e15 {
            return Err(invalid(format!("k* = {k_star:e} is out of range")));
        }
        Ok(ClassicalTarget { x_star, p_star, k_star, k_bar: k_star.round_ties_even() as i64 })
    }

    pub fn origin() -> Self {
        ClassicalTarget { x_star: 0.0, p_star: 0.0, k_star: 0.0, k_bar: 0 }
    }
}

/// Certified bounds on the part of a coefficient series that is not stored:
/// `mass = sum |a_k|^2`, `abs_sum = sum |a_k|`, `second = sum k^2 |a_k|^2`,
/// `fourth = sum k^4 |a_k|^2`, all over the excluded `k`. Infinite entries
/// mean the corresponding sum diverges.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TailBound {
    pub mass: f64,
    pub abs_sum: f64,
    pub second: f64,
    pub fourth: f64,
}

impl TailBound {
    pub const ZERO: TailBound = TailBound { mass: 0.0, abs_sum: 0.0, second: 0.0, fourth: 0.0 };

    /// `sum (1 + k^2) |a_k|^2` over the tail.
    pub fn weighted(&self) -> f64 {
        self.mass + self.second
    }

    /// `sum (1 + k^4) |a_k|^2` over the tail.
    pub fn weighted4(&self) -> f64 {
        self.mass + self.fourth
    }

    pub fn scaled(&self, f: f64) -> Self {
        TailBound { mass: self.mass * f * f, abs_sum: self.abs_sum * f, second: self.second * f * f, fourth: self.fourth * f * f }
    }

    pub fn plus(&self, o: &TailBound) -> Self {
        TailBound { mass: self.mass + o.mass, abs_sum: self.abs_sum + o.abs_sum, second: self.second + o.second, fourth: self.fourth + o.fourth }
    }
}

/// Compensated summation in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Momentum coefficients `a_k` stored densely for `k` in `[k_lo, k_lo + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSeries {
    k_lo: i64,
    coeffs: Vec<Complex64>,
    pub tail: TailBound,
}

impl SpectralSeries {
    pub fn new(k_lo: i64, coeffs: Vec<Complex64>, tail: TailBound) -> Self {
        SpectralSeries { k_lo, coeffs, tail }
    }

    /// Momentum eigenstate `a = {k0: 1}`.
    pub fn single(k0: i64) -> Self {
        SpectralSeries::new(k0, vec![Complex64::new(1.0, 0.0)], TailBound::ZERO)
    }

    /// Builds a series from `(k, a_k)` pairs; gaps are filled with zeros.
    pub fn from_pairs(pairs: &[(i64, Complex64)]) -> Self {
        if pairs.is_empty() {
            return SpectralSeries::new(0, vec![], TailBound::ZERO);
        }
        let lo = pairs.iter().map(|p| p.0).min().unwrap();
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for &(k, a) in pairs {
            c[(k - lo) as usize] += a;
        }
        SpectralSeries::new(lo, c, TailBound::ZERO)
    }

    pub fn k_lo(&self) -> i64 {
        self.k_lo
    }

    pub fn k_hi(&self) -> i64 {
        self.k_lo + self.coeffs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Truncation order `K`: every stored `k` satisfies `|k| <= K`.
    pub fn truncation_k(&self) -> i64 {
        if self.coeffs.is_empty() {
            0
        } else {
            self.k_lo.abs().max(self.k_hi().abs())
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, k: i64) -> Complex64 {
        let i = k - self.k_lo;
        if i >= 0 && (i as usize) < self.coeffs.len() {
            self.coeffs[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &a)| (self.k_lo + i as i64, a))
    }

    /// `sum w(k) |a_k|^2` over stored coefficients, compensated.
    pub fn weighted_sum(&self, w: impl Fn(i64) -> f64) -> f64 {
        let mut s = Neumaier::default();
        for (k, a) in self.iter() {
            s.add(w(k) * a.norm_sqr());
        }
        s.value()
    }

    pub fn norm2(&self) -> f64 {
        self.weighted_sum(|_| 1.0)
    }

    pub fn abs_sum(&self) -> f64 {
        let mut s = Neumaier::default();
        for a in &self.coeffs {
            s.add(a.norm());
        }
        s.value()
    }

    pub fn scaled(&self, f: f64) -> Self {
        SpectralSeries { k_lo: self.k_lo, coeffs: self.coeffs.iter().map(|a| a * f).collect(), tail: self.tail.scaled(f) }
    }

    /// `d`-th derivative of `(1/sqrt(2l)) sum a_k e^{i pi k x / l}`.
    pub fn eval_deriv(&self, x: f64, l: f64, d: u32) -> Complex64 {
        let w = PI / l;
        let mut acc = Complex64::new(0.0, 0.0);
        let step = Complex64::from_polar(1.0, w * x);
        let mut z = Complex64::new(0.0, 0.0);
        for (i, &a) in self.coeffs.iter().enumerate() {
            let k = self.k_lo + i as i64;
            // Re-seed the phase recurrence every 32 terms to bound drift.
            if i % 32 == 0 {
                z = Complex64::from_polar(1.0, phase(k, x, l));
            } else {
                z *= step;
            }
            let mut t = a * z;
            if d > 0 {
                t *= Complex64::new(0.0, w * k as f64).powu(d);
            }
            acc += t;
        }
        acc / (2.0 * l).sqrt()
    }

    pub fn eval(&self, x: f64, l: f64) -> Complex64 {
        self.eval_deriv(x, l, 0)
    }

    /// Bound on `|psi(x) - truncated sum|`.
    pub fn eval_error(&self, l: f64) -> f64 {
        self.tail.abs_sum / (2.0 * l).sqrt() + 1e-15 * self.abs_sum() / (2.0 * l).sqrt()
    }
}

/// `pi k x / l` reduced modulo `2 pi` with the integer part of `k x / (2l)` removed exactly.
fn phase(k: i64, x: f64, l: f64) -> f64 {
    let r = k as f64 * (x / l);
    let r = r - 2.0 * (r / 2.0).round();
    PI * r
}

/// Rescales to unit norm. Phases are unchanged and the tail bound is rescaled.
pub fn normalize_series(s: &SpectralSeries) -> Result<SpectralSeries> {
    let n2 = s.norm2();
    if !(n2 > 0.0) || s.coeffs.iter().all(|a| *a == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroSeries);
    }
    Ok(s.scaled(1.0 / n2.sqrt()))
}

/// Coefficient model handed to [`choose_truncation`].
#[derive(Debug, Clone)]
pub enum CoefficientModel {
    /// `|a_k| = amplitude * exp(-(k - center)^2 / (4 alpha^2))`.
    Gaussian { center: i64, amplitude: f64, alpha: f64 },
    /// Explicit coefficients with their own tail bound (direct summation fallback).
    Series(SpectralSeries),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub k_lo: i64,
    pub k_hi: i64,
    pub tail: TailBound,
}

impl Truncation {
    pub fn k(&self) -> i64 {
        self.k_lo.abs().max(self.k_hi.abs())
    }
}

/// Bound on `sum_{j > J} j^n e^{-gamma j^2}` (one side, `J >= 0`).
///
/// For a unimodal summand the sum is at most the integral from `J` plus the
/// peak value; past the peak the integral alone suffices.
pub fn gauss_poly_tail(j0: f64, gamma: f64, n: u32) -> f64 {
    let integral = gaussian_tail(j0, gamma, n).unwrap_or(f64::INFINITY);
    let peak = (n as f64 / (2.0 * gamma)).sqrt();
    if j0 >= peak {
        integral
    } else {
        integral + peak.powi(n as i32) * (-gamma * peak * peak).exp()
    }
}

/// Tail of `A e^{-j^2/(4 alpha^2)}` over `|j| > J`, weighted in the absolute
/// index `k = center + j` via `k^2 <= 2c^2 + 2j^2`, `k^4 <= 8c^4 + 8j^4`.
pub fn gaussian_coeff_tail(center: i64, amplitude: f64, alpha: f64, j: i64) -> TailBound {
    let g2 = 1.0 / (2.0 * alpha * alpha);
    let g1 = 1.0 / (4.0 * alpha * alpha);
    let jf = j as f64;
    let a2 = amplitude * amplitude;
    let s0 = gauss_poly_tail(jf, g2, 0);
    let s2 = gauss_poly_tail(jf, g2, 2);
    let s4 = gauss_poly_tail(jf, g2, 4);
    let c = center as f64;
    let (second, fourth) = if center == 0 {
        (2.0 * a2 * s2, 2.0 * a2 * s4)
    } else {
        (2.0 * a2 * (2.0 * c * c * s0 + 2.0 * s2), 2.0 * a2 * (8.0 * c.powi(4) * s0 + 8.0 * s4))
    };
    TailBound { mass: 2.0 * a2 * s0, abs_sum: 2.0 * amplitude * gauss_poly_tail(jf, g1, 0), second, fourth }
}

/// Smallest window with certified `sum_{excluded} (1 + k^4) |a_k|^2 < tol`.
pub fn choose_truncation(model: &CoefficientModel, tol: f64, k_max: i64) -> Result<Truncation> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tol must be positive, got {tol}")));
    }
    match model {
        CoefficientModel::Gaussian { center, amplitude, alpha } => {
            if !(*alpha > 0.0) {
                return Err(invalid("alpha must be positive"));
            }
            for j in 0..=k_max {
                let t = gaussian_coeff_tail(*center, *amplitude, *alpha, j);
                if t.weighted4() < tol {
                    return Ok(Truncation { k_lo: center - j, k_hi: center + j, tail: t });
                }
            }
            Err(Error::NoFiniteTail { what: "Gaussian coefficient tail".into(), tol, k_max })
        }
        CoefficientModel::Series(s) => truncate_series(s, tol, k_max).map(|t| Truncation {
            k_lo: t.k_lo(),
            k_hi: t.k_hi(),
            tail: t.tail,
        }),
    }
}

/// Direct-summation fallback: drops outer coefficients (symmetrically in `|k|`)
/// while the accumulated tail `sum (1 + k^4)|a_k|^2` stays below `tol`.
pub fn truncate_series(s: &SpectralSeries, tol: f64, k_max: i64) -> Result<SpectralSeries> {
    let base = s.tail.weighted4();
    if !(base < tol) {
        return Err(Error::NoFiniteTail { what: "existing tail bound".into(), tol, k_max });
    }
    let kk = s.truncation_k();
    // cum[K'] = sum over stored |k| > K' of (1 + k^4)|a_k|^2
    let mut keep = kk;
    let mut acc = base;
    let mut k = kk;
    while k > 0 {
        let shell = [k, -k]
            .iter()
            .map(|&q| (1.0 + (q as f64).powi(4)) * s.get(q).norm_sqr())
            .sum::<f64>();
        if acc + shell >= tol {
            break;
        }
        acc += shell;
        k -= 1;
        keep = k;
    }
    if keep > k_max {
        return Err(Error::NoFiniteTail { what: "direct summation".into(), tol, k_max });
    }
    let lo = s.k_lo().max(-keep);
    let hi = s.k_hi().min(keep);
    let mut tail = s.tail;
    for (q, a) in s.iter() {
        if q < lo || q > hi {
            let m = a.norm_sqr();
            let qf = q as f64;
            tail.mass += m;
            tail.abs_sum += a.norm();
            tail.second += qf * qf * m;
            tail.fourth += qf.powi(4) * m;
        }
    }
    let coeffs = if lo <= hi { (lo..=hi).map(|q| s.get(q)).collect() } else { vec![] };
    Ok(SpectralSeries::new(lo, coeffs, tail))
}

/// Well-basis coefficients `b_1..b_N` with per-coefficient error bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub coeffs: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub energies: Vec<f64>,
}

impl EnergySeries {
    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    /// `b_n` for `n >= 1`.
    pub fn b(&self, n: usize) -> Complex64 {
        self.coeffs[n - 1]
    }

    pub fn norm2(&self) -> f64 {
        let mut s = Neumaier::default();
        for b in &self.coeffs {
            s.add(b.norm_sqr());
        }
        s.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub mean_x: f64,
    pub mean_p: f64,
    pub dstar_x2: f64,
    pub dstar_p2: f64,
    pub dx2: f64,
    pub dp2: f64,
    /// `Delta x Delta p`.
    pub product: f64,
    pub quadrature_error: f64,
    pub series_tail_error: f64,
    /// `0.16 hbar (1 - 3 Delta x^2 / l^2)`.
    pub weak_bound_rhs: f64,
    pub weak_bound_ok: bool,
    /// `(hbar / 2)(1 - 3 Delta x^2 / l^2)`, logged only.
    pub conjectured_rhs: f64,
    pub conjectured_ok: bool,
}

/// Closed-form position-space evaluator.
pub trait WaveFunction: Send + Sync {
    fn value(&self, x: f64) -> Complex64;
    /// First or second derivative; `None` if not available in closed form.
    fn derivative(&self, _x: f64, _order: u32) -> Option<Complex64> {
        None
    }
    /// Points where the integrand loses smoothness or changes scale.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Density used by the discretized family (stored for reports).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTag {
    pub name: String,
    pub scale: f64,
    pub second_moment: f64,
    pub peak_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    TruncatedGaussian { beta: f64, epsilon: f64, b_norm: f64 },
    Theta { alpha: f64, a_norm: f64 },
    Discretized { density: DensityTag, alpha: f64 },
    WellAdapted { inner: Box<Family>, raw_norm: f64, inner_series: Box<SpectralSeries> },
    /// Sharp-cut Gaussian without mollifier (negative fixture only).
    SharpCutGaussian { beta: f64, b_norm: f64 },
    /// Raw coefficient series.
    Series,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::TruncatedGaussian { .. } => "gauss",
            Family::Theta { .. } => "theta",
            Family::Discretized { .. } => "disc",
            Family::WellAdapted { .. } => "well",
            Family::SharpCutGaussian { .. } => "sharp-gauss",
            Family::Series => "series",
        }
    }
}

#[derive(Clone)]
pub struct StateDescriptor {
    pub family: Family,
    pub target: ClassicalTarget,
    pub geometry: IntervalGeometry,
    pub series: SpectralSeries,
    pub evaluator: Option<Arc<dyn WaveFunction>>,
    /// Expected position width, used to place quadrature breakpoints.
    pub width_hint: f64,
}

impl fmt::Debug for StateDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateDescriptor")
            .field("family", &self.family)
            .field("target", &self.target)
            .field("geometry", &self.geometry)
            .field("k_range", &(self.series.k_lo(), self.series.k_hi()))
            .field("tail", &self.series.tail)
            .field("closed_form", &self.evaluator.is_some())
            .finish()
    }
}

impl StateDescriptor {
    /// State given only by its coefficients.
    pub fn from_series(geometry: IntervalGeometry, target: ClassicalTarget, series: SpectralSeries) -> Result<Self> {
        let series = normalize_series(&series)?;
        Ok(StateDescriptor { family: Family::Series, target, geometry, series, evaluator: None, width_hint: geometry.l })
    }

    /// Position-space value, closed form when available.
    pub fn psi(&self, x: f64) -> Complex64 {
        match &self.evaluator {
            Some(e) => e.value(x),
            None => self.series.eval(x, self.geometry.l),
        }
    }

    pub fn psi_deriv(&self, x: f64, order: u32) -> Option<Complex64> {
        match &self.evaluator {
            Some(e) => e.derivative(x, order),
            None => {
                if self.series.tail.fourth.is_finite() {
                    Some(self.series.eval_deriv(x, self.geometry.l, order))
                } else {
                    None
                }
            }
        }
    }

    /// Quadrature breakpoints inside `[-l, l]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let l = self.geometry.l;
        let xs = self.target.x_star;
        let mut v: Vec<f64> = [1.0, 4.0, 10.0, 30.0]
            .iter()
            .flat_map(|&m| [xs - m * self.width_hint, xs + m * self.width_hint])
            .chain(std::iter::once(xs))
            .collect();
        if let Some(e) = &self.evaluator {
            v.extend(e.breakpoints());
        }
        v.retain(|p| p.abs() < l);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveValue {
    pub value: Complex64,
    pub error: f64,
}

/// Series value `(1/sqrt(2l)) sum a_k e^{i pi k x / l}` with its truncation bound.
pub fn evaluate_wave(s: &StateDescriptor, x: f64) -> Result<WaveValue> {
    let l = s.geometry.l;
    if !(x.abs() <= l) {
        return Err(Error::OutOfDomain { x, l });
    }
    Ok(WaveValue { value: s.series.eval(x, l), error: s.series.eval_error(l) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValues {
    pub left: Complex64,
    pub right: Complex64,
    /// Shared endpoint value of the momentum series (`psi(-l) = psi(l)` term by term).
    pub series_value: Complex64,
    pub series_error: f64,
    pub closed_form: bool,
}

/// Endpoint values. The series value is reported always; when a closed-form
/// evaluator exists its endpoint values are reported as `left`/`right`.
pub fn boundary_values(s: &StateDescriptor) -> Result<BoundaryValues> {
    if !s.series.tail.abs_sum.is_finite() {
        return Err(Error::NonSummable);
    }
    let l = s.geometry.l;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, a) in s.series.iter() {
        acc += if k.rem_euclid(2) == 0 { a } else { -a };
    }
    let sv = acc / (2.0 * l).sqrt();
    let err = s.series.eval_error(l);
    let (left, right, closed) = match &s.evaluator {
        Some(e) => (e.value(-l), e.value(l), true),
        None => (sv, sv, false),
    };
    Ok(BoundaryValues { left, right, series_value: sv, series_error: err, closed_form: closed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn geometry_validation() {
        assert!(IntervalGeometry::new(1.0, 1.0, 1.0, UnitMode::Dimensionless).is_ok());
        assert!(IntervalGeometry::new(2.0, 1.0, 1.0, UnitMode::Dimensionless).is_err());
        assert!(IntervalGeometry::new(-1.0, 1.0, 1.0, UnitMode::Si).is_err());
        let g = IntervalGeometry::si(1e-7, MASS_HYDROGEN_SI).unwrap();
        assert_eq!(g.hbar, HBAR_SI);
    }

    #[test]
    fn target_rounding_half_even() {
        let g = IntervalGeometry::dimensionless();
        let t = ClassicalTarget::new(&g, 0.0, 2.5 * PI).unwrap();
        assert_eq!(t.k_bar, 2);
        let t = ClassicalTarget::new(&g, 0.0, -2.5 * PI).unwrap();
        assert_eq!(t.k_bar, -2);
        assert!(ClassicalTarget::new(&g, 1.0, 0.0).is_err());
    }

    #[test]
    fn normalize_trivial() {
        let s = SpectralSeries::single(0);
        assert_eq!(normalize_series(&s).unwrap(), s);
        let s = SpectralSeries::from_pairs(&[(0, c(1.0)), (1, c(1.0))]);
        let n = normalize_series(&s).unwrap();
        assert!((n.get(0).re - 0.5f64.sqrt()).abs() < 4e-16);
        assert!((n.norm2() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_zero_fails() {
        let s = SpectralSeries::from_pairs(&[(0, c(0.0))]);
        assert_eq!(normalize_series(&s), Err(Error::ZeroSeries));
    }

    #[test]
    fn constant_mode_value() {
        let g = IntervalGeometry::dimensionless();
        let st = StateDescriptor::from_series(g, ClassicalTarget::origin(), SpectralSeries::single(0)).unwrap();
        for &x in &[-1.0, -0.3, 0.0, 0.9, 1.0] {
            let v = evaluate_wave(&st, x).unwrap();
            assert!((v.value - c(0.5f64.sqrt())).norm() < 1e-15);
        }
        assert!(matches!(evaluate_wave(&st, 1.5), Err(Error::OutOfDomain { .. })));
        let b = boundary_values(&st).unwrap();
        assert!((b.left - c(0.5f64.sqrt())).norm() < 1e-15);
        assert_eq!(b.left, b.right);
    }

    #[test]
    fn truncation_single_mode() {
        let t = choose_truncation(&CoefficientModel::Series(SpectralSeries::single(0)), 1e-10, 100).unwrap();
        assert_eq!(t.k(), 0);
    }

    #[test]
    fn truncation_gaussian_alpha2() {
        // Frozen from brute-force summation of sum_{|k|>K} (1+k^4) e^{-k^2/8} A^2.
        let a = (1.0 / crate::specfun::theta_eval(0.0, 1.0 / (2.0 * PI * 4.0)).unwrap().value).sqrt();
        let t = choose_truncation(&CoefficientModel::Gaussian { center: 0, amplitude: a, alpha: 2.0 }, 1e-16, 1000).unwrap();
        let brute: f64 = (t.k() + 1..400).map(|k| 2.0 * (1.0 + (k as f64).powi(4)) * a * a * (-(k * k) as f64 / 8.0).exp()).sum();
        assert!(brute < 1e-16);
        assert!(brute <= t.tail.weighted4());
        assert!((19..=22).contains(&t.k()), "K = {}", t.k());
    }

    #[test]
    fn phase_recurrence_accuracy() {
        let n = 300;
        let coeffs: Vec<Complex64> = (0..n).map(|i| c(1.0 / (1.0 + i as f64))).collect();
        let s = SpectralSeries::new(-150, coeffs, TailBound::ZERO);
        let x = 0.3712;
        let direct: Complex64 = s
            .iter()
            .map(|(k, a)| a * Complex64::from_polar(1.0, PI * k as f64 * x))
            .sum::<Complex64>()
            / 2f64.sqrt();
        assert!((s.eval(x, 1.0) - direct).norm() < 1e-13);
    }

    #[test]
    fn tail_scaling() {
        let t = TailBound { mass: 4.0, abs_sum: 2.0, second: 8.0, fourth: 16.0 };
        let s = t.scaled(0.5);
        assert_eq!(s, TailBound { mass: 1.0, abs_sum: 1.0, second: 2.0, fourth: 4.0 });
    }
}
