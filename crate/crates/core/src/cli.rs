//! Command-line front end. All SI/dimensionless handling lives here; the
//! library below only sees `(l, hbar, m)`.

use std::f64::consts::PI;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{self, AsymptoticLadder, ResidualRow};
use crate::domain::{ClassicalTarget, IntervalGeometry, StateDescriptor, MASS_HYDROGEN_SI};
use crate::error::{invalid, Error, ErrorClass, Result};
use crate::families::{
    build_discretized_state, build_theta_state, build_truncated_gaussian, build_well_adapted, DensitySpec, InnerFamily,
};
use crate::limits;
use crate::moments::{energy_expand, energy_moments, finiteness_diagnostic, uncertainty_report};
use crate::report::{to_json, Obj, Table, Value};
use crate::specfun::{gaussian_tail, gaussian_tail_quadrature, jacobi_residual, theta_eval};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "sqstates", version, about = "Squeezed states on a finite interval", args_override_self = true)]
struct Cli {
    /// Key-value file, one flag per line; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build a state and report on it.
    #[command(subcommand)]
    State(StateCmd),
    /// Residual tables for the identities and bounds.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Large-interval and semiclassical sweeps.
    #[command(subcommand)]
    Limits(LimitsCmd),
}

#[derive(Subcommand, Debug)]
enum StateCmd {
    Build(StateArgs),
    Moments(StateArgs),
    Energy {
        #[command(flatten)]
        state: StateArgs,
        /// Number of sine modes.
        #[arg(long = "N", default_value_t = 4096)]
        n: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FamilyArg {
    Gauss,
    Theta,
    Disc,
    Well,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Units {
    Dimensionless,
    Si,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum InnerArg {
    Theta,
    Disc,
}

#[derive(Args, Debug, Clone)]
struct GeometryArgs {
    /// Half-length of the interval (meters in SI mode).
    #[arg(long)]
    l: Option<f64>,
    #[arg(long, value_enum, default_value_t = Units::Dimensionless)]
    units: Units,
    /// Particle mass in kg (SI mode; default hydrogen atom).
    #[arg(long)]
    mass: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct DensityArgs {
    /// Momentum density: gaussian, laplace, triangular.
    #[arg(long, default_value = "gaussian")]
    density: String,
    #[arg(long = "density-scale", default_value_t = 1.0)]
    density_scale: f64,
}

#[derive(Args, Debug, Clone)]
struct StateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    xstar: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pstar: f64,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    density: DensityArgs,
    /// Inner family of the well-adapted state.
    #[arg(long, value_enum, default_value_t = InnerArg::Theta)]
    inner: InnerArg,
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Jacobi identity over an 80-point (x, tau) grid.
    Theta,
    /// Closed-form Gaussian tails against quadrature.
    GaussTail,
    /// Truncated-Gaussian asymptotics as beta -> 0.
    Thm1 {
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        xstar: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        betas: Vec<f64>,
    },
    /// Theta-state asymptotics as alpha -> infinity.
    Thm2 {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xstar: f64,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,6,8")]
        alphas: Vec<f64>,
    },
    /// Explicit bounds for discretized states.
    Thm3 {
        #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xstar: f64,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        density: DensityArgs,
    },
    /// Momentum discretization window.
    #[command(name = "lemC")]
    LemC {
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
        alphas: Vec<f64>,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        density: DensityArgs,
    },
    /// Cosine-sum bound for monotone sequences.
    #[command(name = "lemD")]
    LemD {
        /// Explicit sequence a_0, a_1, ...; default a_k = r^k.
        #[arg(long, value_delimiter = ',')]
        seq: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.9)]
        r: f64,
        #[arg(long, default_value_t = 100_000)]
        terms: usize,
        #[arg(long, value_delimiter = ',', default_value = "1.0471975511965976")]
        x: Vec<f64>,
        #[arg(long, default_value_t = 3.0)]
        c: f64,
        /// Run this many random monotone sequences instead.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Theta-sum asymptotics as tau -> 0.
    #[command(name = "lemB")]
    LemB {
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        taus: Vec<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum LimitsCmd {
    /// Discretized states against their infinite-interval limit as l grows
    LargeL {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        ls: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xstar: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        pstar: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[command(flatten)]
        density: DensityArgs,
    },
    /// Theta states as hbar -> 0 with alpha ~ hbar^{-1/2}
    Semiclassical {
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        xstar: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        pstar: f64,
        #[arg(long, default_value_t = 6)]
        rungs: usize,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Output {
    Object(Obj),
    Table { table: Table, summary: Obj },
}

pub fn error_kind(e: &Error) -> String {
    let d = format!("{e:?}");
    d.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

fn error_outcome(kind: &str, message: &str, code: i32) -> Outcome {
    let v: Value = Obj::new().with("error", Obj::new().with("kind", kind).with("message", message)).into();
    Outcome { code, stdout: String::new(), stderr: to_json(&v) + "\n" }
}

/// Turns config-file lines into `--key value` tokens.
pub fn parse_config(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => match line.split_once(char::is_whitespace) {
                Some((k, v)) => (k.trim(), Some(v.trim())),
                None => (line, None),
            },
        };
        let k = k.trim_start_matches('-');
        out.push(format!("--{k}"));
        if let Some(v) = v.filter(|v| !v.is_empty()) {
            out.push(v.to_string());
        }
    }
    out
}

/// Removes `--config` from argv and splices the file's tokens right after
/// the subcommand path, so later command-line flags override them.
fn expand_config(argv: Vec<String>) -> std::result::Result<Vec<String>, Outcome> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| error_outcome("Io", &format!("cannot read config {path}: {e}"), EXIT_VALIDATION))?;
    let tokens = parse_config(&text);
    // argv[0], then two positional subcommand names.
    let mut seen = 0;
    let mut at = rest.len();
    let mut i = 1;
    while i < rest.len() {
        let a = &rest[i];
        if a == "--format" {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            seen += 1;
            if seen == 2 {
                at = i + 1;
                break;
            }
        }
        i += 1;
    }
    rest.splice(at..at, tokens);
    Ok(rest)
}

pub fn run<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(o) => return o,
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Outcome { code: EXIT_OK, stdout: e.to_string(), stderr: String::new() }
                }
                _ => error_outcome("Usage", e.to_string().trim(), EXIT_VALIDATION),
            };
        }
    };
    match dispatch(&cli.cmd) {
        Ok(out) => Outcome { code: EXIT_OK, stdout: render(out, cli.format), stderr: String::new() },
        Err(e) => {
            let code = match e.class() {
                ErrorClass::Validation => EXIT_VALIDATION,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            };
            error_outcome(&error_kind(&e), &e.to_string(), code)
        }
    }
}

fn render(out: Output, format: Format) -> String {
    match (out, format) {
        (Output::Object(o), Format::Json) => to_json(&o.into()) + "\n",
        (Output::Object(o), Format::Csv) => {
            let mut t = Table::new(&["field", "value"]);
            for (k, v) in o.0 {
                let v = match v {
                    Value::Arr(_) | Value::Obj(_) => Value::Str(to_json(&v)),
                    v => v,
                };
                t.push(vec![Value::Str(k), v]);
            }
            t.to_csv()
        }
        (Output::Table { table, summary }, Format::Json) => to_json(&Obj::new().with("rows", table.to_value()).with("summary", summary).into()) + "\n",
        (Output::Table { table, .. }, Format::Csv) => table.to_csv(),
    }
}

fn geometry(g: &GeometryArgs) -> Result<IntervalGeometry> {
    match g.units {
        Units::Dimensionless => {
            if g.l.is_some_and(|l| l != 1.0) || g.mass.is_some_and(|m| m != 1.0) {
                return Err(invalid("dimensionless units fix l = 1 and m = 1; use --units si"));
            }
            Ok(IntervalGeometry::dimensionless())
        }
        Units::Si => {
            let l = g.l.ok_or_else(|| invalid("--l (meters) is required with --units si"))?;
            IntervalGeometry::si(l, g.mass.unwrap_or(MASS_HYDROGEN_SI))
        }
    }
}

fn density(d: &DensityArgs) -> Result<DensitySpec> {
    DensitySpec::by_name(&d.density, d.density_scale)
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| invalid(format!("--{name} is required for this family")))
}

fn build_state(a: &StateArgs) -> Result<StateDescriptor> {
    let g = geometry(&a.geometry)?;
    let t = ClassicalTarget::new(&g, a.xstar, a.pstar)?;
    match a.family {
        FamilyArg::Gauss => build_truncated_gaussian(&g, &t, need(a.beta, "beta")?, need(a.eps, "eps")?),
        FamilyArg::Theta => build_theta_state(&g, &t, need(a.alpha, "alpha")?),
        FamilyArg::Disc => build_discretized_state(&g, &t, &density(&a.density)?, need(a.alpha, "alpha")?),
        FamilyArg::Well => {
            let alpha = need(a.alpha, "alpha")?;
            let inner = match a.inner {
                InnerArg::Theta => InnerFamily::Theta { alpha },
                InnerArg::Disc => InnerFamily::Discretized { density: density(&a.density)?, alpha },
            };
            build_well_adapted(&g, &t, &inner)
        }
    }
}

fn header(s: &StateDescriptor, a: &StateArgs) -> Obj {
    Obj::new()
        .with("family", s.family.name())
        .with("units", if a.geometry.units == Units::Si { "si" } else { "dimensionless" })
        .with("l", s.geometry.l)
        .with("hbar", s.geometry.hbar)
        .with("mass", s.geometry.mass)
        .with("x_star", s.target.x_star)
        .with("p_star", s.target.p_star)
        .with("k_bar", s.target.k_bar)
}

fn dispatch(cmd: &Cmd) -> Result<Output> {
    match cmd {
        Cmd::State(c) => state(c),
        Cmd::Verify(c) => verify(c),
        Cmd::Limits(c) => limits_cmd(c),
    }
}

fn state(c: &StateCmd) -> Result<Output> {
    match c {
        StateCmd::Build(a) => {
            let s = build_state(a)?;
            let tail = s.series.tail;
            let o = header(&s, a)
                .with("k_lo", s.series.k_lo())
                .with("k_hi", s.series.k_hi())
                .with("truncation_k", s.series.truncation_k())
                .with("coefficients", s.series.len())
                .with("norm2", s.series.norm2())
                .with(
                    "tail",
                    Obj::new().with("mass", tail.mass).with("abs_sum", tail.abs_sum).with("second", tail.second).with("fourth", tail.fourth),
                )
                .with("width_hint", s.width_hint);
            Ok(Output::Object(o))
        }
        StateCmd::Moments(a) => {
            let s = build_state(a)?;
            let r = uncertainty_report(&s)?;
            let o = header(&s, a)
                .with("mean_x", r.mean_x)
                .with("mean_p", r.mean_p)
                .with("dstar_x2", r.dstar_x2)
                .with("dstar_p2", r.dstar_p2)
                .with("dx2", r.dx2)
                .with("dp2", r.dp2)
                .with("dx", r.dx2.sqrt())
                .with("dp", r.dp2.sqrt())
                .with("product", r.product)
                .with("quadrature_error", r.quadrature_error)
                .with("series_tail_error", r.series_tail_error)
                .with("weak_bound_rhs", r.weak_bound_rhs)
                .with("weak_bound_ok", r.weak_bound_ok)
                .with("conjectured_rhs", r.conjectured_rhs)
                .with("conjectured_ok", r.conjectured_ok);
            Ok(Output::Object(o))
        }
        StateCmd::Energy { state: a, n } => {
            if *n < 32 {
                return Err(invalid("--N must be at least 32"));
            }
            let s = build_state(a)?;
            let e = energy_expand(&s, *n)?;
            let e_star = s.target.p_star * s.target.p_star / (2.0 * s.geometry.mass);
            let m = energy_moments(&e, e_star);
            let f = finiteness_diagnostic(&s, *n)?;
            let ladder: Vec<Value> = m.ladder.iter().map(|&(k, v)| Value::Arr(vec![k.into(), v.into()])).collect();
            let o = header(&s, a)
                .with("n_max", e.n_max())
                .with("parseval", m.parseval)
                .with("e_star", e_star)
                .with("mean_e", m.mean_e)
                .with("dstar_e2", m.dstar_e2)
                .with("mean_class", m.mean_class.as_str())
                .with("energy_class", m.class.as_str())
                .with("ladder", Value::Arr(ladder))
                .with("momentum_class", f.momentum.as_str())
                .with("psi_left_abs", f.left.norm())
                .with("psi_right_abs", f.right.norm())
                .with("momentum_implies_periodic", f.momentum_implies_periodic)
                .with("energy_implies_dirichlet", f.energy_implies_dirichlet);
            Ok(Output::Object(o))
        }
    }
}

/// The 80-point `(x, tau)` grid of the Jacobi-identity check.
pub fn jacobi_grid() -> Vec<(f64, f64)> {
    let taus = [0.02, 0.05, 0.1, 0.3, 0.7, 1.0, 2.0, 5.0];
    taus.iter().flat_map(|&t| (0..10).map(move |i| (0.05 * i as f64, t))).collect()
}

fn residual_table(rows: &[(String, Vec<ResidualRow>)], param: &str) -> Output {
    let mut t = Table::new(&["quantity", param, "measured", "leading", "residual", "bound", "floor", "ok"]);
    let mut summary = Obj::new();
    for (name, rs) in rows {
        for r in rs {
            t.push(vec![name.as_str().into(), r.parameter.into(), r.measured.into(), r.leading.into(), r.residual.into(), r.bound.into(), r.floor.into(), r.ok.into()]);
        }
        summary = summary.with(&format!("{name}_all_ok"), rs.iter().all(|r| r.ok)).with(&format!("{name}_monotone"), bounds::residuals_monotone(rs));
    }
    Output::Table { table: t, summary }
}

fn verify(c: &VerifyCmd) -> Result<Output> {
    let unit = IntervalGeometry::dimensionless();
    match c {
        VerifyCmd::Theta => {
            let mut t = Table::new(&["x", "tau", "theta", "residual", "ok"]);
            let mut worst: f64 = 0.0;
            for (x, tau) in jacobi_grid() {
                let r = jacobi_residual(x, tau)?;
                worst = worst.max(r);
                t.push(vec![x.into(), tau.into(), theta_eval(x, tau)?.value.into(), r.into(), (r <= 1e-12).into()]);
            }
            Ok(Output::Table { table: t, summary: Obj::new().with("max_residual", worst).with("ok", worst <= 1e-12) })
        }
        VerifyCmd::GaussTail => {
            let mut t = Table::new(&["x", "gamma", "order", "closed_form", "quadrature", "residual", "ok"]);
            let mut worst: f64 = 0.0;
            for &g in &[0.5, 1.0, 2.0] {
                for i in 0..=24 {
                    let x = 0.25 * i as f64;
                    for order in [0, 2] {
                        let a = gaussian_tail(x, g, order)?;
                        let b = gaussian_tail_quadrature(x, g, order)?;
                        let r = (a - b).abs();
                        worst = worst.max(r);
                        t.push(vec![x.into(), g.into(), (order as i64).into(), a.into(), b.into(), r.into(), (r <= 1e-14).into()]);
                    }
                }
            }
            Ok(Output::Table { table: t, summary: Obj::new().with("max_residual", worst).with("ok", worst <= 1e-14) })
        }
        VerifyCmd::Thm1 { xstar, eps, betas } => {
            let (x, e, b) = (*xstar, *eps, betas.clone());
            let rows = vec![
                ("mean_x".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::GaussMeanX { x_star: x, epsilon: e, betas: b.clone() })?),
                ("dstar_x2".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::GaussStdDevX { x_star: x, epsilon: e, betas: b.clone() })?),
                ("dstar_p2".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::GaussStdDevP { x_star: x, epsilon: e, betas: b })?),
            ];
            Ok(residual_table(&rows, "beta"))
        }
        VerifyCmd::Thm2 { xstar, alphas } => {
            let (x, a) = (*xstar, alphas.clone());
            let rows = vec![
                ("mean_x".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::ThetaMeanX { x_star: x, alphas: a.clone() })?),
                ("dstar_x2".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::ThetaStdDevX { x_star: x, alphas: a.clone() })?),
                ("dstar_p2".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::ThetaStdDevP { x_star: x, alphas: a })?),
            ];
            Ok(residual_table(&rows, "alpha"))
        }
        VerifyCmd::LemB { taus } => {
            let rows = vec![
                ("sum_k2".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::ThetaSumK2 { taus: taus.clone() })?),
                ("second_x".to_string(), bounds::asymptotic_residuals(&unit, &AsymptoticLadder::ThetaSecondX { a: 0.0, taus: taus.clone() })?),
            ];
            Ok(residual_table(&rows, "tau"))
        }
        VerifyCmd::Thm3 { alphas, xstar, geometry: ga, density: da } => {
            let g = geometry(ga)?;
            let d = density(da)?;
            let t = ClassicalTarget::new(&g, *xstar, 0.0)?;
            let mut tab = Table::new(&[
                "alpha", "dstar_x2", "x_bound", "x_ok", "mean_x_dev", "meanx_bound", "meanx_ok", "mean_p_rel_err", "envelope_max_ratio", "envelope_ok", "product",
                "product_bound", "product_ok",
            ]);
            let mut all = true;
            for &a in alphas {
                let r = bounds::thm3_bounds(&build_discretized_state(&g, &t, &d, a)?)?;
                all &= r.x_ok && r.meanx_ok && r.envelope_ok && r.product_ok;
                tab.push(vec![
                    a.into(), r.dstar_x2.into(), r.x_bound.into(), r.x_ok.into(), r.mean_x_dev.into(), r.meanx_bound.into(), r.meanx_ok.into(),
                    r.mean_p_rel_err.into(), r.envelope_max_ratio.into(), r.envelope_ok.into(), r.product.into(), r.product_bound.into(), r.product_ok.into(),
                ]);
            }
            Ok(Output::Table { table: tab, summary: Obj::new().with("all_ok", all) })
        }
        VerifyCmd::LemC { alphas, geometry: ga, density: da } => {
            let g = geometry(ga)?;
            let (rows, slope) = bounds::lemc_ladder(&g, &density(da)?, alphas)?;
            let mut t = Table::new(&["alpha", "dstar_p2", "tilde_p2", "delta", "lower", "upper", "inside", "refined_residual"]);
            for r in &rows {
                t.push(vec![r.alpha.into(), r.dstar_p2.into(), r.tilde_p2.into(), r.delta.into(), r.lower.into(), r.upper.into(), r.inside.into(), r.refined_residual.into()]);
            }
            Ok(Output::Table { table: t, summary: Obj::new().with("all_inside", rows.iter().all(|r| r.inside)).with("loglog_slope", slope) })
        }
        VerifyCmd::LemD { seq, r, terms, x, c, random, seed } => {
            let mut t = Table::new(&["case", "length", "x", "chi", "bound", "ok"]);
            let mut violations = 0usize;
            match random {
                Some(n) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    for i in 0..*n {
                        let a = random_monotone(&mut rng);
                        let xx = rng.gen_range(0.1..PI);
                        let rep = bounds::lemd_bound(&a, xx, *c)?;
                        violations += usize::from(!rep.ok);
                        t.push(vec![i.into(), a.len().into(), xx.into(), rep.chi.into(), rep.bound.into(), rep.ok.into()]);
                    }
                }
                None => {
                    let a: Vec<f64> = match seq {
                        Some(s) => s.clone(),
                        None => (0..*terms).map(|k| r.powi(k as i32)).collect(),
                    };
                    for (i, &xx) in x.iter().enumerate() {
                        let rep = bounds::lemd_bound(&a, xx, *c)?;
                        violations += usize::from(!rep.ok);
                        t.push(vec![i.into(), a.len().into(), xx.into(), rep.chi.into(), rep.bound.into(), rep.ok.into()]);
                    }
                }
            }
            Ok(Output::Table { table: t, summary: Obj::new().with("c", *c).with("violations", violations) })
        }
    }
}

/// Non-increasing non-negative sequence with `a_0 = 1` and random length and decay.
pub fn random_monotone(rng: &mut impl Rng) -> Vec<f64> {
    let len = rng.gen_range(1..=2000);
    let mut a = Vec::with_capacity(len);
    let mut v = 1.0;
    for _ in 0..len {
        a.push(v);
        v *= match rng.gen_range(0..4) {
            0 => 1.0,
            1 => rng.gen_range(0.0..1.0),
            _ => rng.gen_range(0.9..1.0),
        };
    }
    a
}

fn limits_cmd(c: &LimitsCmd) -> Result<Output> {
    match c {
        LimitsCmd::LargeL { ls, xstar, pstar, points, density: da } => {
            if *points == 0 {
                return Err(invalid("--points must be positive"));
            }
            let tab = limits::large_l_convergence(&density(da)?, *xstar, *pstar, ls, &limits::default_grid(*xstar, *points))?;
            let mut t = Table::new(&["l", "sup_error", "peak_error", "numeric_error"]);
            for r in &tab.rows {
                t.push(vec![r.l.into(), r.sup_error.into(), r.peak_error.into(), r.numeric_error.into()]);
            }
            Ok(Output::Table { table: t, summary: Obj::new().with("decreasing", tab.decreasing) })
        }
        LimitsCmd::Semiclassical { xstar, pstar, rungs } => {
            let tab = limits::semiclassical_sweep(*xstar, *pstar, *rungs)?;
            let mut t = Table::new(&["hbar", "alpha", "mean_x", "mean_p", "dx", "dp", "meanx_bound", "meanp_bound", "means_ok", "weak_bound_ok"]);
            for r in &tab.rows {
                t.push(vec![
                    r.hbar.into(), r.alpha.into(), r.mean_x.into(), r.mean_p.into(), r.dx.into(), r.dp.into(), r.meanx_bound.into(), r.meanp_bound.into(),
                    r.means_ok.into(), r.weak_bound_ok.into(),
                ]);
            }
            Ok(Output::Table { table: t, summary: Obj::new().with("dx_decreasing", tab.dx_decreasing).with("dp_decreasing", tab.dp_decreasing) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_tokens() {
        let t = parse_config("# comment\nalpha = 8\n--xstar 0.1\nunits si\n\n");
        assert_eq!(t, ["--alpha", "8", "--xstar", "0.1", "--units", "si"]);
    }

    #[test]
    fn usage_error_exit_2() {
        let o = run(["sqstates", "state", "moments", "--family", "nope"]);
        assert_eq!(o.code, EXIT_VALIDATION);
        assert!(o.stderr.starts_with("{\"error\":{\"kind\":\"Usage\""));
    }

    #[test]
    fn missing_parameter() {
        let o = run(["sqstates", "state", "build", "--family", "theta"]);
        assert_eq!(o.code, EXIT_VALIDATION);
        assert!(o.stderr.contains("InvalidParameter"));
    }

    #[test]
    fn grid_has_80_points() {
        assert_eq!(jacobi_grid().len(), 80);
    }
}
