//! Verifiers for the explicit bounds on discretized states, the momentum
//! discretization window, the monotone cosine-sum bound and the asymptotic
//! remainders of the Gaussian, theta and theta-sum estimates.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::domain::{ClassicalTarget, Family, IntervalGeometry, Neumaier, StateDescriptor};
use crate::error::{invalid, Error, Result};
use crate::families::{build_discretized_state, build_theta_state, build_truncated_gaussian, DensitySpec};
use crate::moments::{momentum_moments, position_moments};
use crate::quad::{integrate, QuadConfig};
use crate::specfun::{theta_asymptotic_oracles, theta_k2_sum, theta_moment_integral};

/// Slack on `O(.)` remainders with unknown constants.
pub const REMAINDER_SLACK: f64 = 100.0;
/// Relative floor below which residuals are numerical noise.
pub const NOISE_FLOOR: f64 = 1e-14;

/// `int_{-1}^{1} (y - a)^2 / sin^2(pi (y - a) / 2) dy`.
pub fn sine_weight_integral(a: f64) -> Result<f64> {
    if !(a.abs() < 1.0) {
        return Err(invalid(format!("need |x*/l| < 1, got {a}")));
    }
    let f = |y: f64| {
        let t = y - a;
        if t.abs() < 1e-5 {
            let c = 2.0 / PI;
            c * c * (1.0 + PI * PI * t * t / 12.0)
        } else {
            let s = (PI * t / 2.0).sin();
            t * t / (s * s)
        }
    };
    Ok(integrate(f, -1.0, 1.0, &[a], &QuadConfig::new(1e-15, 1e-15))?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm3Report {
    pub alpha: f64,
    pub dstar_x2: f64,
    pub x_bound: f64,
    pub x_ok: bool,
    pub mean_x_dev: f64,
    pub meanx_bound: f64,
    pub meanx_ok: bool,
    pub mean_p: f64,
    /// `pi hbar k_bar / l`.
    pub mean_p_expected: f64,
    pub mean_p_rel_err: f64,
    /// Largest `|psi(x)| / envelope(x)` over the grid (must be <= 1).
    pub envelope_max_ratio: f64,
    pub envelope_ok: bool,
    /// `Delta x^2 Delta p` and its upper bound.
    pub product: f64,
    pub product_bound: f64,
    pub product_ok: bool,
}

fn discretized_params(s: &StateDescriptor) -> Result<(f64, f64, f64)> {
    match &s.family {
        Family::Discretized { density, alpha } => Ok((density.peak_value, density.second_moment.sqrt(), *alpha)),
        _ => Err(invalid("bound applies to discretized states only")),
    }
}

pub fn thm3_bounds(s: &StateDescriptor) -> Result<Thm3Report> {
    let (phi0, dq, alpha) = discretized_params(s)?;
    let l = s.geometry.l;
    let hbar = s.geometry.hbar;
    let xs = s.target.x_star;
    let integral = sine_weight_integral(xs / l)?;
    let x = position_moments(s)?;
    let p = momentum_moments(s)?;

    let x_bound = 9.0 * PI * phi0 * l / (2.0 * alpha) * integral;
    let c = (PI * xs / (2.0 * l)).cos();
    let meanx_bound = xs.abs() / (alpha * l) * 18.0 * PI * phi0 / (c * c);
    let mean_x_dev = x.mean_x - xs;
    let expected = s.geometry.p_k(s.target.k_bar);
    let rel = if expected == 0.0 { p.mean_p.abs() / s.geometry.dp() } else { ((p.mean_p - expected) / expected).abs() };

    // Pointwise envelope on a grid that avoids x*.
    let amp = 3.0 * (PI * phi0 / (2.0 * alpha * l * l)).sqrt();
    let err = s.series.eval_error(l);
    let mut ratio: f64 = 0.0;
    for i in 0..=400 {
        let xx = -l + 2.0 * l * (i as f64 + 0.5) / 401.0;
        let sn = (PI * (xx - xs) / (2.0 * l)).sin().abs();
        if sn < 1e-3 {
            continue;
        }
        let v = (s.series.eval(xx, l).norm() - err).max(0.0);
        ratio = ratio.max(v * sn / amp);
    }

    let phi_l0 = PI / l * phi0;
    let delta = 1.0 / 6.0 + phi_l0 / (3.0 * alpha);
    let product_bound = 4.5 * PI * l * hbar * phi0 * dq * integral * (1.0 + (PI / (l * alpha * dq)).powi(2) * delta).sqrt();
    let product = x.dx2 * p.dp2.sqrt();
    Ok(Thm3Report {
        alpha,
        dstar_x2: x.dstar_x2,
        x_bound,
        x_ok: x.dstar_x2 - x.error <= x_bound,
        mean_x_dev,
        meanx_bound,
        meanx_ok: mean_x_dev.abs() <= meanx_bound + x.error.sqrt().max(1e-14 * l),
        mean_p: p.mean_p,
        mean_p_expected: expected,
        mean_p_rel_err: rel,
        envelope_max_ratio: ratio,
        envelope_ok: ratio <= 1.0,
        product,
        product_bound,
        product_ok: product <= product_bound,
    })
}

/// Momentum spread the product bound needs to guarantee `Delta x <= dx`:
/// `Delta p ~ (9/2) pi l hbar phi(0) Delta q I / dx^2` (square-root factor dropped).
pub fn corollary_required_dp(l: f64, hbar: f64, phi0: f64, dq: f64, x_star: f64, dx: f64) -> Result<f64> {
    let i = sine_weight_integral(x_star / l)?;
    Ok(4.5 * PI * l * hbar * phi0 * dq * i / (dx * dx))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemCReport {
    pub alpha: f64,
    pub dstar_p2: f64,
    /// `(hbar alpha Delta q)^2`.
    pub tilde_p2: f64,
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    pub inside: bool,
    /// `delta - (pi hbar / l)^2 / 12`.
    pub refined_residual: f64,
}

pub fn lemc_window(s: &StateDescriptor) -> Result<LemCReport> {
    let (phi0, dq, alpha) = discretized_params(s)?;
    let l = s.geometry.l;
    let hbar = s.geometry.hbar;
    let p = momentum_moments(s)?;
    let tilde = (hbar * alpha * dq).powi(2);
    let unit = (PI * hbar / l).powi(2);
    let w = 1.0 + 2.0 / alpha * (PI / l * phi0);
    let delta = p.dstar_p2 - tilde;
    let lower = -unit / 12.0 * w;
    let upper = unit / 6.0 * w;
    Ok(LemCReport {
        alpha,
        dstar_p2: p.dstar_p2,
        tilde_p2: tilde,
        delta,
        lower,
        upper,
        inside: delta >= lower - p.tail_error && delta <= upper + p.tail_error,
        refined_residual: delta - unit / 12.0,
    })
}

/// Least-squares slope of `log |residual|` against `log alpha`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(a, r)| (a.ln(), r.abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Window reports over an `alpha` ladder (target at the origin) and the
/// log-log slope of the refined residual.
pub fn lemc_ladder(geometry: &IntervalGeometry, density: &DensitySpec, alphas: &[f64]) -> Result<(Vec<LemCReport>, f64)> {
    let t = ClassicalTarget::new(geometry, 0.0, 0.0)?;
    let rows: Vec<LemCReport> = alphas
        .par_iter()
        .map(|&a| build_discretized_state(geometry, &t, density, a).and_then(|s| lemc_window(&s)))
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.refined_residual)).collect();
    Ok((rows, loglog_slope(&pts)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemDReport {
    pub chi: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `chi(x) = sum_{k in Z} a_|k| cos(k x)` for a finite non-negative
/// non-increasing sequence, against `c |a_0| / |sin(x/2)|`.
pub fn lemd_bound(a: &[f64], x: f64, c: f64) -> Result<LemDReport> {
    if a.is_empty() || a[0] == 0.0 {
        return Err(invalid("sequence must be nonzero"));
    }
    for i in 0..a.len() {
        if !(a[i] >= 0.0) || (i > 0 && a[i] > a[i - 1]) {
            return Err(Error::NotMonotone(i));
        }
    }
    let s = (x / 2.0).sin().abs();
    if s < 1e-12 {
        return Err(Error::AtSingularity(x));
    }
    let mut acc = Neumaier::default();
    acc.add(a[0]);
    for (k, &v) in a.iter().enumerate().skip(1) {
        acc.add(2.0 * v * (k as f64 * x).cos());
    }
    let chi = acc.value();
    let bound = c * a[0] / s;
    Ok(LemDReport { chi, bound, ok: chi.abs() <= bound * (1.0 + 1e-12) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub parameter: f64,
    pub measured: f64,
    pub leading: f64,
    pub residual: f64,
    /// Remainder magnitude with the unknown constant set to one.
    pub bound: f64,
    /// Numerical floor for this row.
    pub floor: f64,
    pub ok: bool,
}

impl ResidualRow {
    fn new(parameter: f64, measured: f64, leading: f64, bound: f64, numeric_err: f64) -> Self {
        let residual = measured - leading;
        let floor = NOISE_FLOOR * measured.abs().max(leading.abs()) + numeric_err;
        ResidualRow { parameter, measured, leading, residual, bound, floor, ok: residual.abs() <= REMAINDER_SLACK * bound + floor }
    }
}

/// `|residual|` non-increasing along the ladder, plateaus at the noise floor allowed.
pub fn residuals_monotone(rows: &[ResidualRow]) -> bool {
    rows.windows(2).all(|w| w[1].residual.abs() <= w[0].residual.abs().max(w[1].floor).max(w[0].floor))
}

/// Asymptotic ladders.
#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticLadder {
    /// Truncated Gaussian, `x_bar - x*` as `beta -> 0`.
    GaussMeanX { x_star: f64, epsilon: f64, betas: Vec<f64> },
    /// Truncated Gaussian, `Delta*x^2 - beta^2`.
    GaussStdDevX { x_star: f64, epsilon: f64, betas: Vec<f64> },
    /// Truncated Gaussian, `Delta*p^2 - (hbar / 2 beta)^2`.
    GaussStdDevP { x_star: f64, epsilon: f64, betas: Vec<f64> },
    /// Theta state, `x_bar - x*` as `alpha -> inf`.
    ThetaMeanX { x_star: f64, alphas: Vec<f64> },
    /// Theta state, `Delta*x^2 - (l / 2 pi alpha)^2`.
    ThetaStdDevX { x_star: f64, alphas: Vec<f64> },
    /// Theta state, `Delta*p^2 - (pi hbar alpha / l)^2`.
    ThetaStdDevP { x_star: f64, alphas: Vec<f64> },
    /// `sum k^2 e^{-pi tau k^2} - 1 / (2 pi tau^{3/2})` as `tau -> 0`.
    ThetaSumK2 { taus: Vec<f64> },
    /// `int x^2 theta^2 - sqrt(tau/2) / 4 pi` as `tau -> 0`.
    ThetaSecondX { a: f64, taus: Vec<f64> },
}

pub fn asymptotic_residuals(geometry: &IntervalGeometry, ladder: &AsymptoticLadder) -> Result<Vec<ResidualRow>> {
    let l = geometry.l;
    let hbar = geometry.hbar;
    let gauss_remainder = |xs: f64, eps: f64, b: f64| (-(l - xs.abs() - 3.0 * eps).powi(2) / (2.0 * b * b)).exp();
    let theta_remainder = |xs: f64, a: f64| (-2.0 * (PI * a * (1.0 - xs.abs() / l)).powi(2)).exp();
    match ladder {
        AsymptoticLadder::GaussMeanX { x_star, epsilon, betas }
        | AsymptoticLadder::GaussStdDevX { x_star, epsilon, betas }
        | AsymptoticLadder::GaussStdDevP { x_star, epsilon, betas } => {
            let t = ClassicalTarget::new(geometry, *x_star, 0.0)?;
            betas
                .par_iter()
                .map(|&b| {
                    let s = build_truncated_gaussian(geometry, &t, b, *epsilon)?;
                    let r = gauss_remainder(*x_star, *epsilon, b);
                    Ok(match ladder {
                        AsymptoticLadder::GaussMeanX { .. } => {
                            let x = position_moments(&s)?;
                            ResidualRow::new(b, x.mean_x, *x_star, b * r, x.error.sqrt())
                        }
                        AsymptoticLadder::GaussStdDevX { .. } => {
                            let x = position_moments(&s)?;
                            ResidualRow::new(b, x.dstar_x2, b * b, b * r, x.error)
                        }
                        _ => {
                            let q = crate::moments::momentum_moments_quadrature(&s)?;
                            ResidualRow::new(b, q.dstar_p2, (hbar / (2.0 * b)).powi(2), r / b.powi(3), q.error)
                        }
                    })
                })
                .collect()
        }
        AsymptoticLadder::ThetaMeanX { x_star, alphas }
        | AsymptoticLadder::ThetaStdDevX { x_star, alphas }
        | AsymptoticLadder::ThetaStdDevP { x_star, alphas } => {
            let t = ClassicalTarget::new(geometry, *x_star, 0.0)?;
            alphas
                .par_iter()
                .map(|&a| {
                    let s = build_theta_state(geometry, &t, a)?;
                    Ok(match ladder {
                        AsymptoticLadder::ThetaMeanX { .. } => {
                            let x = position_moments(&s)?;
                            ResidualRow::new(a, x.mean_x, *x_star, l / a * theta_remainder(*x_star, a), x.error.sqrt())
                        }
                        AsymptoticLadder::ThetaStdDevX { .. } => {
                            let x = position_moments(&s)?;
                            ResidualRow::new(a, x.dstar_x2, (l / (2.0 * PI * a)).powi(2), l * l / a * theta_remainder(*x_star, a), x.error)
                        }
                        _ => {
                            let p = momentum_moments(&s)?;
                            let lead = (PI * hbar * a / l).powi(2);
                            ResidualRow::new(a, p.dstar_p2, lead, lead * (-2.0 * (PI * a).powi(2)).exp(), p.tail_error)
                        }
                    })
                })
                .collect()
        }
        AsymptoticLadder::ThetaSumK2 { taus } => taus
            .iter()
            .map(|&tau| {
                let o = theta_asymptotic_oracles(tau, 0.0)?;
                Ok(ResidualRow::new(tau, theta_k2_sum(tau)?, o.sum_k2_leading, o.sum_k2_remainder, 0.0))
            })
            .collect(),
        AsymptoticLadder::ThetaSecondX { a, taus } => taus
            .iter()
            .map(|&tau| {
                let o = theta_asymptotic_oracles(tau, *a)?;
                Ok(ResidualRow::new(tau, theta_moment_integral(tau, *a, 2)?, o.second_x_leading, o.second_x_remainder, 1e-15))
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_integral_worked_value() {
        let i = sine_weight_integral(0.0).unwrap();
        assert!((i - 1.12).abs() < 0.01, "{i}");
    }

    #[test]
    fn lemd_examples() {
        let a: Vec<f64> = (0..100_000).map(|k| 0.9f64.powi(k)).collect();
        let r = lemd_bound(&a, PI / 3.0, 1.0).unwrap();
        assert!(r.ok);
        // geometric series closed form: Re[(1 + r e^{ix}) / (1 - r e^{ix})]
        let z = num_complex::Complex64::from_polar(0.9, PI / 3.0);
        let exact = ((1.0 + z) / (1.0 - z)).re;
        assert!((r.chi - exact).abs() < 1e-12);
        let d = lemd_bound(&[2.0], 1.0, 1.0).unwrap();
        assert_eq!(d.chi, 2.0);
        assert!(matches!(lemd_bound(&[1.0, 2.0], 1.0, 1.0), Err(Error::NotMonotone(1))));
        assert!(matches!(lemd_bound(&[1.0], 2.0 * PI, 1.0), Err(Error::AtSingularity(_))));
    }

    #[test]
    fn thm3_gaussian_alpha50() {
        let g = IntervalGeometry::dimensionless();
        let d = DensitySpec::gaussian(1.0).unwrap();
        let s = build_discretized_state(&g, &ClassicalTarget::origin(), &d, 50.0).unwrap();
        let r = thm3_bounds(&s).unwrap();
        assert!(r.x_ok && r.meanx_ok && r.envelope_ok && r.product_ok, "{r:?}");
        assert_eq!(r.meanx_bound, 0.0);
        assert!(r.mean_x_dev.abs() < 1e-14);
    }

    #[test]
    fn lemc_gaussian_window() {
        let g = IntervalGeometry::dimensionless();
        let d = DensitySpec::gaussian(1.0).unwrap();
        let (rows, _) = lemc_ladder(&g, &d, &[5.0, 10.0, 20.0, 40.0]).unwrap();
        for r in &rows {
            assert!(r.inside, "{r:?}");
        }
        let last = rows.last().unwrap();
        assert!((last.delta / (PI * PI / 12.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn theta_sum_ladder() {
        let g = IntervalGeometry::dimensionless();
        let rows = asymptotic_residuals(&g, &AsymptoticLadder::ThetaSumK2 { taus: vec![0.2, 0.1, 0.05] }).unwrap();
        assert!(residuals_monotone(&rows));
        // Poisson summation gives the remainder exactly:
        // (1 / 2 pi tau^{3/2}) sum_{n != 0} (1 - 2 pi n^2 / tau) e^{-pi n^2 / tau}.
        // Its leading term carries an extra 2 (2 pi / tau - 1) factor over the
        // stated O(.) magnitude, so C = 100 is exceeded once tau < ~0.12.
        for r in &rows[..2] {
            let t = r.parameter;
            let exact: f64 = (1..4)
                .map(|n| {
                    let n2 = (n * n) as f64;
                    2.0 * (1.0 - 2.0 * PI * n2 / t) * (-PI * n2 / t).exp()
                })
                .sum::<f64>()
                / (2.0 * PI * t.powf(1.5));
            assert!((r.residual - exact).abs() <= 1e-13 * r.measured, "{r:?} {exact}");
            assert!((r.residual.abs() / r.bound - 2.0 * (2.0 * PI / t - 1.0)).abs() < 1e-2 * r.residual.abs() / r.bound + 1e-6);
        }
        assert!(rows[0].ok && !rows[1].ok && rows[2].ok);
    }
}
