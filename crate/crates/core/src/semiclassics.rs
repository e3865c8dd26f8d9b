//! Semiclassical k-sweeps: concentration of transition amplitudes,
//! delta-sequence tests against smooth observables, Berezin-transform
//! convergence, and log-log rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, GeometryKind, QuadratureRule};
use crate::kernel::{KernelContext, DENSITY_FLOOR};
use crate::numeric::pairwise_sum;
use crate::observables::ScalarField;
use crate::toeplitz::{covariant_symbol, OperatorMatrix};

/// Outcome of a k-sweep with its fitted log-log rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub geometry: String,
    pub test: String,
    pub k_values: Vec<u32>,
    pub errors: Vec<f64>,
    pub fitted_slope: f64,
    pub fit_residual: f64,
    /// Filtering notes (e.g. dropped nonpositive errors).
    pub notes: Vec<String>,
}

impl SweepResult {
    pub fn from_points(geometry: &str, test: &str, points: &[(u32, f64)]) -> Result<Self> {
        let fit_input: Vec<(f64, f64)> =
            points.iter().map(|(k, e)| (*k as f64, *e)).collect();
        let (slope, residual, notes) = rate_fit_with_notes(&fit_input)?;
        Ok(Self {
            geometry: geometry.to_string(),
            test: test.to_string(),
            k_values: points.iter().map(|(k, _)| *k).collect(),
            errors: points.iter().map(|(_, e)| *e).collect(),
            fitted_slope: slope,
            fit_residual: residual,
            notes,
        })
    }
}

/// The default admissible radius sequence r_k = k^{-1/3}: r_k -> 0 while
/// sqrt(k) r_k -> infinity.
pub fn admissible_radius(k: u32) -> f64 {
    (k as f64).powf(-1.0 / 3.0)
}

/// int_{B(x, radius)} psi(x, y) d mu(y).
///
/// Inside the injectivity radius the ball is integrated in geodesic polar
/// coordinates around x (the boundary is then resolved exactly); the radial
/// node count scales with sqrt(k) so the concentration width of psi stays
/// resolved. Beyond the injectivity radius on the torus and the hyperbolic
/// surface the integral falls back to filtering the supplied global rule by
/// geodesic distance.
pub fn concentration_integral(
    ctx: &KernelContext,
    x: ChartPoint,
    radius: f64,
    quad: &QuadratureRule,
) -> Result<f64> {
    if radius < 0.0 {
        return Err(Error::Parameter("radius must be nonnegative".into()));
    }
    if radius == 0.0 {
        return Ok(0.0);
    }
    let eps_x = ctx.coherent_density(x)?;
    if eps_x < DENSITY_FLOOR {
        return Err(Error::Domain("concentration integral requires eps(x) > 0".into()));
    }
    let prep = ctx.prepare(x)?;
    let cap = ctx.geom.max_polar_radius();
    let whole_sphere = matches!(ctx.geom.kind, GeometryKind::Sphere) && radius >= cap;
    if radius >= cap && !whole_sphere {
        // Fallback: indicator-filtered global quadrature.
        let mut terms = Vec::new();
        for (y, w) in quad.nodes.iter().zip(&quad.weights) {
            if ctx.geom.geodesic_distance(x, *y)? < radius {
                terms.push(w * ctx.psi_times_eps(&prep, eps_x, *y)?);
            }
        }
        return Ok(pairwise_sum(&terms));
    }
    let rho_max = radius.min(cap);
    let n_rho = ((8.0 * rho_max * (ctx.k as f64).sqrt()).ceil() as usize).clamp(24, 400);
    let n_phi = 64usize;
    let (rhos, wr) = crate::numeric::gauss_legendre_on(n_rho, 0.0, rho_max);
    let dphi = std::f64::consts::TAU / n_phi as f64;
    let mut terms = Vec::with_capacity(n_rho * n_phi);
    for (rho, w) in rhos.iter().zip(&wr) {
        let density = ctx.geom.polar_density(*rho);
        for m in 0..n_phi {
            let phi = dphi * m as f64;
            let y = ctx.geom.exp_map(x, *rho, phi)?;
            terms.push(w * dphi * density * ctx.psi_times_eps(&prep, eps_x, y)?);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// | int f(y) psi(x, y) d mu(y) - f(x) |.
pub fn delta_test(
    ctx: &KernelContext,
    f: &dyn ScalarField,
    x: ChartPoint,
    quad: &QuadratureRule,
) -> Result<f64> {
    let eps_x = ctx.coherent_density(x)?;
    if eps_x < DENSITY_FLOOR {
        return Err(Error::Domain("delta test requires eps(x) > 0".into()));
    }
    let prep = ctx.prepare(x)?;
    let mut terms = Vec::with_capacity(quad.len());
    for (y, w) in quad.nodes.iter().zip(&quad.weights) {
        terms.push(w * f.eval(*y) * ctx.psi_times_eps(&prep, eps_x, *y)?);
    }
    Ok((pairwise_sum(&terms) - f.eval(x)).abs())
}

/// Berezin-transform error |<x| Q(f) |x> - f(x)| for a prebuilt Toeplitz
/// operator of f.
pub fn berezin_transform_error(
    ctx: &KernelContext,
    op: &OperatorMatrix,
    f: &dyn ScalarField,
    x: ChartPoint,
) -> Result<f64> {
    let s = covariant_symbol(ctx, op, x)?;
    Ok((s.re - f.eval(x)).hypot(s.im))
}

/// Least-squares slope of log(error) against log(k); returns
/// (slope, rms fit residual).
pub fn rate_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let (s, r, _) = rate_fit_with_notes(points)?;
    Ok((s, r))
}

fn rate_fit_with_notes(points: &[(f64, f64)]) -> Result<(f64, f64, Vec<String>)> {
    let mut notes = Vec::new();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, e)| *k > 0.0 && *e > 0.0)
        .cloned()
        .collect();
    let dropped = points.len() - usable.len();
    if dropped > 0 {
        notes.push(format!("dropped {dropped} nonpositive point(s) from the log-log fit"));
    }
    if usable.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 positive points for a slope fit, have {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (k, e) in &usable {
        let lx = k.ln();
        let ly = e.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::Fit("degenerate abscissae in rate fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut ss = 0.0;
    for (k, e) in &usable {
        let resid = e.ln() - (intercept + slope * k.ln());
        ss += resid * resid;
    }
    Ok((slope, (ss / n).sqrt(), notes))
}
