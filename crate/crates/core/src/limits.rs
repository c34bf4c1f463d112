//! The infinite-interval limit of discretized states and the semiclassical
//! sweep of the theta family.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::domain::{ClassicalTarget, IntervalGeometry};
use crate::error::{invalid, Result};
use crate::families::{build_discretized_state, build_theta_state, DensitySpec};
use crate::moments::{momentum_moments, position_moments, uncertainty_report};
use crate::quad::{integrate, integrate_to_inf_scaled, QuadConfig};

/// Target truncation error of the continuum `q`-integral.
const Q_TAIL_TOL: f64 = 1e-13;

/// Limit packet `psi(x) = (1/sqrt(2 pi)) int sqrt(phi(q)) e^{iq(x - x*)} dq`
/// times `e^{i p* (x - x*) / hbar}`, evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumPacket {
    pub values: Vec<Complex64>,
    /// Cutoff `Q` of the `q`-integral.
    pub cutoff: f64,
    /// Quadrature estimate of the dropped `|q| > Q` part.
    pub tail: f64,
    /// `(int_{|q|>Q} q^2 phi + 2/Q) / (2 sqrt(2 pi))`, from `sqrt(phi) <= (q^2 phi + 1/q^2)/2`.
    pub tail_bound: f64,
    pub quadrature_error: f64,
}

pub fn continuum_packet(density: &DensitySpec, x_star: f64, p_star: f64, hbar: f64, xs: &[f64]) -> Result<ContinuumPacket> {
    let root = |q: f64| density.phi(q).max(0.0).sqrt();
    let cfg = QuadConfig::new(1e-300, 1e-12).with_max_panels(4000);
    let sd = density.std_dev();
    let (cutoff, tail) = match density.support {
        Some(w) => (w, 0.0),
        None => {
            let mut q = 8.0 * sd;
            loop {
                let t = integrate_to_inf_scaled(root, q, sd, &cfg)?.value;
                if t < Q_TAIL_TOL || q > 1e6 * sd {
                    break (q, t);
                }
                q *= 2.0;
            }
        }
    };
    let t2 = match density.support {
        Some(_) => 0.0,
        None => integrate_to_inf_scaled(|q: f64| q * q * density.phi(q), cutoff, sd, &cfg)?.value,
    };
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut breaks: Vec<f64> = density.kinks.iter().copied().filter(|&k| k > 0.0).collect();
    breaks.extend([sd, 2.0 * sd, 4.0 * sd]);
    let rows: Vec<(Complex64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let d = x - x_star;
            let r = integrate(|q: f64| root(q) * (q * d).cos(), 0.0, cutoff, &breaks, &cfg)?;
            let phase = Complex64::from_polar(1.0, p_star * d / hbar);
            Ok((phase * (2.0 * norm * r.value), 2.0 * norm * r.error))
        })
        .collect::<Result<_>>()?;
    Ok(ContinuumPacket {
        quadrature_error: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        values: rows.into_iter().map(|r| r.0).collect(),
        cutoff,
        tail: 2.0 * norm * tail,
        tail_bound: norm * (2.0 * t2 + 2.0 / cutoff) / 2.0,
    })
}

/// `n` equispaced points on `[x* - 3, x* + 3]`.
pub fn default_grid(x_star: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![x_star];
    }
    (0..n).map(|i| x_star - 3.0 + 6.0 * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeLRow {
    pub l: f64,
    pub sup_error: f64,
    pub peak_error: f64,
    /// Series truncation plus continuum quadrature error.
    pub numeric_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeLTable {
    pub rows: Vec<LargeLRow>,
    /// Sup errors strictly decreasing (or both at the 1e-12 floor); `None`
    /// for a single-rung ladder.
    pub decreasing: Option<bool>,
}

/// Sup-norm distance between the `alpha = 1` discretized state at each `l`
/// and the continuum packet, with `hbar = m = 1`.
pub fn large_l_convergence(density: &DensitySpec, x_star: f64, p_star: f64, ls: &[f64], xs: &[f64]) -> Result<LargeLTable> {
    if ls.is_empty() || xs.is_empty() {
        return Err(invalid("empty ladder or grid"));
    }
    let mut grid = xs.to_vec();
    grid.push(x_star);
    let limit = continuum_packet(density, x_star, p_star, 1.0, &grid)?;
    let rows: Vec<LargeLRow> = ls
        .par_iter()
        .map(|&l| {
            if grid.iter().any(|x| x.abs() > l) {
                return Err(invalid(format!("grid leaves [-{l}, {l}]")));
            }
            let g = IntervalGeometry::scaled(l, 1.0, 1.0)?;
            let t = ClassicalTarget::new(&g, x_star, p_star)?;
            let s = build_discretized_state(&g, &t, density, 1.0)?;
            let errs: Vec<f64> = grid.iter().zip(&limit.values).map(|(&x, v)| (s.series.eval(x, l) - v).norm()).collect();
            let peak_error = *errs.last().expect("peak");
            Ok(LargeLRow {
                l,
                sup_error: errs.into_iter().fold(0.0, f64::max),
                peak_error,
                numeric_error: s.series.eval_error(l) + limit.quadrature_error + limit.tail,
            })
        })
        .collect::<Result<_>>()?;
    let decreasing = (rows.len() > 1).then(|| rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error || w[0].sup_error.max(w[1].sup_error) <= 1e-12));
    Ok(LargeLTable { rows, decreasing })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalRow {
    pub hbar: f64,
    pub alpha: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub dx: f64,
    pub dp: f64,
    pub meanx_bound: f64,
    pub meanp_bound: f64,
    pub means_ok: bool,
    pub weak_bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiclassicalTable {
    pub rows: Vec<SemiclassicalRow>,
    pub dx_decreasing: bool,
    pub dp_decreasing: bool,
}

/// Theta states on `[-1, 1]` (m = 1) at `hbar_j = 2^{-j}`, `alpha_j = 2^{j/2}`.
pub fn semiclassical_sweep(x_star: f64, p_star: f64, rungs: usize) -> Result<SemiclassicalTable> {
    let ladder: Vec<(f64, f64)> = (0..rungs).map(|j| (2f64.powi(-(j as i32)), 2f64.powf(j as f64 / 2.0))).collect();
    semiclassical_sweep_with(x_star, p_star, &ladder)
}

pub fn semiclassical_sweep_with(x_star: f64, p_star: f64, ladder: &[(f64, f64)]) -> Result<SemiclassicalTable> {
    let l = 1.0;
    let rows: Vec<SemiclassicalRow> = ladder
        .par_iter()
        .map(|&(hbar, alpha)| {
            let g = IntervalGeometry::scaled(l, hbar, 1.0)?;
            let t = ClassicalTarget::new(&g, x_star, p_star)?;
            let s = build_theta_state(&g, &t, alpha)?;
            let x = position_moments(&s)?;
            let p = momentum_moments(&s)?;
            let rep = uncertainty_report(&s)?;
            let meanx_bound = 100.0 * l / alpha * (-2.0 * (PI * alpha * (1.0 - x_star.abs() / l)).powi(2)).exp() + x.error.sqrt().max(1e-14);
            let meanp_bound = PI * hbar / l;
            Ok(SemiclassicalRow {
                hbar,
                alpha,
                mean_x: x.mean_x,
                mean_p: p.mean_p,
                dx: x.dx2.sqrt(),
                dp: p.dp2.sqrt(),
                meanx_bound,
                meanp_bound,
                means_ok: (x.mean_x - x_star).abs() <= meanx_bound && (p.mean_p - p_star).abs() <= meanp_bound * (1.0 + 1e-12),
                weak_bound_ok: rep.weak_bound_ok,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SemiclassicalTable {
        dx_decreasing: rows.windows(2).all(|w| w[1].dx < w[0].dx),
        dp_decreasing: rows.windows(2).all(|w| w[1].dp < w[0].dp),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_limit_is_gaussian() {
        // sqrt of a unit Gaussian density transforms to psi(x) = (2/pi)^{1/4} e^{-x^2}.
        let d = DensitySpec::gaussian(1.0).unwrap();
        let xs = [0.0, 0.5, 1.3, -2.0];
        let p = continuum_packet(&d, 0.0, 0.0, 1.0, &xs).unwrap();
        for (x, v) in xs.iter().zip(&p.values) {
            let exact = (2.0 / PI).powf(0.25) * (-x * x).exp();
            assert!((v.re - exact).abs() < 1e-12 && v.im.abs() < 1e-15, "{x} {v} {exact}");
        }
    }

    #[test]
    fn triangular_peak_value() {
        // phi = (1 - |q|/w)/w on [-w, w]: int sqrt(phi) = (4/3) sqrt(w).
        let d = DensitySpec::triangular(2.0).unwrap();
        let p = continuum_packet(&d, 0.4, 0.0, 1.0, &[0.4]).unwrap();
        let exact = 4.0 / 3.0 * 2f64.sqrt() / (2.0 * PI).sqrt();
        assert!((p.values[0].re - exact).abs() < 1e-12);
    }

    #[test]
    fn large_l_single_rung() {
        let d = DensitySpec::gaussian(1.0).unwrap();
        let t = large_l_convergence(&d, 0.0, 0.0, &[8.0], &default_grid(0.0, 41)).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.decreasing.is_none());
    }

    #[test]
    fn semiclassical_means() {
        let t = semiclassical_sweep(0.3, 1.0, 3).unwrap();
        assert!(t.dx_decreasing && t.dp_decreasing);
        assert!(t.rows.iter().all(|r| r.means_ok && r.weak_bound_ok), "{:?}", t.rows);
    }
}
