//! Chart-level description of the model geometries: Liouville measure,
//! Hermitian weight of the trivialized prequantum bundle, symplectic
//! potential, metric Laplacian, geodesic distance, and deterministic
//! quadrature rules.
//!
//! Conventions. The Liouville form is eps_omega = omega / 2pi. The chart
//! complex coordinate is z = (u + iv)/sqrt(2) on the plane and the torus
//! (matching the basis and kernel formulas used downstream) and z = u + iv
//! on the sphere and the upper half-plane. The metric is g = omega(., J.),
//! whose density with respect to du^2 + dv^2 equals the omega density
//! 2pi * liouville_density.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{hyperbolic_distance, GroupEnumeration, DOMAIN_CENTER};
use crate::numeric::{gauss_laguerre_modified, gauss_legendre, gauss_legendre_on, pairwise_sum};
use crate::observables::ScalarField;

/// Chart coordinates. On the torus, points are interpreted modulo the
/// lattice Z + lambda Z acting on u + iv; operations reduce internally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub u: f64,
    pub v: f64,
}

impl ChartPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// u + iv (chart complex value, before any sqrt(2) scaling).
    pub fn w(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    pub fn from_w(w: Complex64) -> Self {
        Self { u: w.re, v: w.im }
    }
}

#[derive(Debug, Clone)]
pub enum GeometryKind {
    Plane,
    Sphere,
    Torus { modulus: Complex64 },
    Hyperbolic { group: GroupEnumeration },
}

#[derive(Debug, Clone)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub name: String,
}

/// Metric radius of the sphere (Fubini-Study with total Liouville mass 1).
const SPHERE_RADIUS: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// The hyperbolic metric g = 2 g_{curv=-1}; distances scale by sqrt(2).
const HYPERBOLIC_METRIC_SCALE: f64 = std::f64::consts::SQRT_2;

impl GeometrySpec {
    pub fn plane() -> Self {
        Self { kind: GeometryKind::Plane, name: "plane".into() }
    }

    pub fn sphere() -> Self {
        Self { kind: GeometryKind::Sphere, name: "sphere".into() }
    }

    pub fn torus(modulus: Complex64) -> Result<Self> {
        if !(modulus.im > 0.0) {
            return Err(Error::Parameter(format!(
                "torus modulus must have positive imaginary part, got {modulus}"
            )));
        }
        Ok(Self { kind: GeometryKind::Torus { modulus }, name: "torus".into() })
    }

    pub fn hyperbolic(group: GroupEnumeration) -> Result<Self> {
        for g in &group.generators {
            if !g.is_hyperbolic() {
                return Err(Error::Parameter(
                    "hyperbolic surface requires hyperbolic (|trace| > 2) generators".into(),
                ));
            }
        }
        Ok(Self { kind: GeometryKind::Hyperbolic { group }, name: "genus2".into() })
    }

    pub fn group(&self) -> Option<&GroupEnumeration> {
        match &self.kind {
            GeometryKind::Hyperbolic { group } => Some(group),
            _ => None,
        }
    }

    pub fn is_basis_mode(&self) -> bool {
        !matches!(self.kind, GeometryKind::Hyperbolic { .. })
    }

    pub fn validate_point(&self, x: ChartPoint) -> Result<()> {
        if !x.u.is_finite() || !x.v.is_finite() {
            return Err(Error::Domain("chart point must be finite".into()));
        }
        if let GeometryKind::Hyperbolic { .. } = self.kind {
            if !(x.v > 0.0) {
                return Err(Error::Domain(format!(
                    "upper half-plane point needs v > 0, got v = {}",
                    x.v
                )));
            }
        }
        Ok(())
    }

    /// The complex coordinate in which the section and kernel formulas are
    /// written: (u + iv)/sqrt(2) for plane and torus, u + iv otherwise.
    pub fn complex_coordinate(&self, x: ChartPoint) -> Complex64 {
        x.w() * self.chart_scale()
    }

    /// d z / d(u + iv).
    pub fn chart_scale(&self) -> f64 {
        match self.kind {
            GeometryKind::Plane | GeometryKind::Torus { .. } => std::f64::consts::FRAC_1_SQRT_2,
            _ => 1.0,
        }
    }

    /// Reduces a torus point to the fundamental parallelogram spanned by
    /// 1 and lambda; identity elsewhere.
    pub fn reduce(&self, x: ChartPoint) -> ChartPoint {
        match self.kind {
            GeometryKind::Torus { modulus } => {
                let (s, t) = self.torus_coords(x);
                let s = s - s.floor();
                let t = t - t.floor();
                let w = Complex64::new(s, 0.0) + modulus * t;
                ChartPoint::from_w(w)
            }
            _ => x,
        }
    }

    /// Lattice coordinates (s, t) with u + iv = s + t lambda.
    fn torus_coords(&self, x: ChartPoint) -> (f64, f64) {
        match self.kind {
            GeometryKind::Torus { modulus } => {
                let t = x.v / modulus.im;
                let s = x.u - t * modulus.re;
                (s, t)
            }
            _ => unreachable!("torus_coords on non-torus"),
        }
    }

    /// Density of eps_omega = omega/2pi with respect to du dv.
    pub fn liouville_density(&self, x: ChartPoint) -> Result<f64> {
        self.validate_point(x)?;
        Ok(match &self.kind {
            GeometryKind::Plane => 1.0 / (2.0 * std::f64::consts::PI),
            GeometryKind::Sphere => {
                let r2 = x.u * x.u + x.v * x.v;
                1.0 / (std::f64::consts::PI * (1.0 + r2) * (1.0 + r2))
            }
            GeometryKind::Torus { modulus } => 1.0 / modulus.im,
            GeometryKind::Hyperbolic { .. } => 1.0 / (std::f64::consts::PI * x.v * x.v),
        })
    }

    /// Pointwise Hermitian weight W with h(s1, s2) = W conj(s1~) s2~ in the
    /// chart trivialization: 1 on plane and torus, (1+|z|^2)^{-k} on the
    /// sphere, (Im z)^{2k} on the hyperbolic surface (weight-2k forms).
    pub fn hermitian_weight(&self, k: u32, x: ChartPoint) -> Result<f64> {
        self.validate_point(x)?;
        Ok(match &self.kind {
            GeometryKind::Plane | GeometryKind::Torus { .. } => 1.0,
            GeometryKind::Sphere => {
                let r2 = x.u * x.u + x.v * x.v;
                (-(k as f64) * r2.ln_1p()).exp()
            }
            GeometryKind::Hyperbolic { .. } => x.v.powi(2 * k as i32),
        })
    }

    pub fn sqrt_hermitian_weight(&self, k: u32, x: ChartPoint) -> Result<f64> {
        self.validate_point(x)?;
        Ok(match &self.kind {
            GeometryKind::Plane | GeometryKind::Torus { .. } => 1.0,
            GeometryKind::Sphere => {
                let r2 = x.u * x.u + x.v * x.v;
                (-0.5 * k as f64 * r2.ln_1p()).exp()
            }
            GeometryKind::Hyperbolic { .. } => x.v.powi(k as i32),
        })
    }

    /// Coefficients (of dz, of dz-bar) of the symplectic potential tau with
    /// d tau = omega, in the geometry's complex coordinate.
    ///
    /// On the sphere the potential compatible with the Hermitian weight is
    /// tau = -i z-bar dz / (1 + |z|^2); it satisfies d tau = +omega, which
    /// the finite-difference oracle pins down.
    pub fn symplectic_potential(&self, x: ChartPoint) -> Result<(Complex64, Complex64)> {
        self.validate_point(x)?;
        let z = self.complex_coordinate(x);
        let i = Complex64::i();
        match &self.kind {
            GeometryKind::Plane => Ok((-0.5 * i * z.conj(), 0.5 * i * z)),
            GeometryKind::Sphere => {
                let denom = 1.0 + z.norm_sqr();
                Ok((-i * z.conj() / denom, Complex64::new(0.0, 0.0)))
            }
            GeometryKind::Torus { modulus } => {
                let c = std::f64::consts::PI / modulus.im;
                Ok((-i * c * z.conj(), i * c * z))
            }
            GeometryKind::Hyperbolic { .. } => Err(Error::NotImplemented(
                "no global symplectic potential on the hyperbolic backend".into(),
            )),
        }
    }

    /// Density of omega (equivalently of the metric g = omega(., J.))
    /// with respect to du dv.
    pub fn metric_density(&self, x: ChartPoint) -> Result<f64> {
        Ok(2.0 * std::f64::consts::PI * self.liouville_density(x)?)
    }

    /// Laplacian of f in the metric g = omega(., J.), with the calibrated
    /// sign (nonnegative spectrum): Delta f = -(f_uu + f_vv) / W_g.
    pub fn metric_laplacian(&self, f: &dyn ScalarField, x: ChartPoint) -> Result<f64> {
        self.metric_laplacian_with_sign(f, x, crate::calibrate::LAPLACIAN_SIGN)
    }

    pub fn metric_laplacian_with_sign(
        &self,
        f: &dyn ScalarField,
        x: ChartPoint,
        sign: f64,
    ) -> Result<f64> {
        let wg = self.metric_density(x)?;
        Ok(sign * f.flat_laplacian(x) / wg)
    }

    /// Geodesic distance in g = omega(., J.).
    pub fn geodesic_distance(&self, x: ChartPoint, y: ChartPoint) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        match &self.kind {
            GeometryKind::Plane => Ok(((x.u - y.u).powi(2) + (x.v - y.v).powi(2)).sqrt()),
            GeometryKind::Sphere => {
                let z = x.w();
                let w = y.w();
                let num = (z - w).norm_sqr();
                let den = (1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr());
                let s = (num / den).sqrt().min(1.0);
                Ok(std::f64::consts::SQRT_2 * s.asin())
            }
            GeometryKind::Torus { modulus } => {
                let diff = ChartPoint::from_w(x.w() - y.w());
                let red = self.reduce(diff).w();
                let mut best = f64::INFINITY;
                for m in -2..=2 {
                    for n in -2..=2 {
                        let shift = Complex64::new(m as f64, 0.0) + modulus * n as f64;
                        best = best.min((red - shift).norm());
                    }
                }
                let factor = (2.0 * std::f64::consts::PI / modulus.im).sqrt();
                Ok(factor * best)
            }
            GeometryKind::Hyperbolic { group } => {
                let z = x.w();
                let w = y.w();
                let mut best = f64::INFINITY;
                for g in &group.elements {
                    best = best.min(hyperbolic_distance(z, g.apply_unchecked(w)));
                }
                Ok(HYPERBOLIC_METRIC_SCALE * best)
            }
        }
    }

    /// Total Liouville volume for the compact geometries.
    pub fn total_volume(&self) -> Option<f64> {
        match self.kind {
            GeometryKind::Plane => None,
            GeometryKind::Sphere => Some(1.0),
            GeometryKind::Torus { .. } => Some(1.0),
            // Gauss-Bonnet: hyperbolic area 4 pi (g-1) times the 1/pi
            // relating eps_omega to the hyperbolic area form.
            GeometryKind::Hyperbolic { .. } => Some(4.0),
        }
    }

    /// dim H_k for the compact geometries (None for the plane).
    pub fn hilbert_dim(&self, k: u32) -> Option<usize> {
        match self.kind {
            GeometryKind::Plane => None,
            GeometryKind::Sphere => Some(k as usize + 1),
            GeometryKind::Torus { .. } => Some(k as usize),
            GeometryKind::Hyperbolic { .. } => Some(2 * k as usize - 1),
        }
    }

    /// Geodesic exponential map: the point at metric distance rho from x in
    /// chart direction phi.
    pub fn exp_map(&self, x: ChartPoint, rho: f64, phi: f64) -> Result<ChartPoint> {
        self.validate_point(x)?;
        let dir = Complex64::from_polar(1.0, phi);
        match &self.kind {
            GeometryKind::Plane => Ok(ChartPoint::from_w(x.w() + rho * dir)),
            GeometryKind::Torus { modulus } => {
                let chart_step = rho * (modulus.im / (2.0 * std::f64::consts::PI)).sqrt();
                Ok(self.reduce(ChartPoint::from_w(x.w() + chart_step * dir)))
            }
            GeometryKind::Sphere => {
                let r = (rho / std::f64::consts::SQRT_2).tan();
                let zeta = r * dir;
                let xc = x.w();
                let y = (zeta + xc) / (Complex64::new(1.0, 0.0) - xc.conj() * zeta);
                Ok(ChartPoint::from_w(y))
            }
            GeometryKind::Hyperbolic { .. } => {
                let rho_h = rho / HYPERBOLIC_METRIC_SCALE;
                let w = Complex64::from_polar((0.5 * rho_h).tanh(), phi);
                let xc = x.w();
                let y = (xc - w * xc.conj()) / (Complex64::new(1.0, 0.0) - w);
                Ok(ChartPoint::from_w(y))
            }
        }
    }

    /// eps_omega density in geodesic polar coordinates around any point,
    /// per d rho d phi.
    pub fn polar_density(&self, rho: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        match self.kind {
            GeometryKind::Plane | GeometryKind::Torus { .. } => rho / two_pi,
            GeometryKind::Sphere => SPHERE_RADIUS * (rho / SPHERE_RADIUS).sin() / two_pi,
            GeometryKind::Hyperbolic { .. } => {
                let k = HYPERBOLIC_METRIC_SCALE;
                k * (rho / k).sinh() / two_pi
            }
        }
    }

    /// Largest radius for which the geodesic polar chart at a generic point
    /// is injective (the sphere value covers the whole manifold).
    pub fn max_polar_radius(&self) -> f64 {
        match &self.kind {
            GeometryKind::Plane => f64::INFINITY,
            GeometryKind::Sphere => std::f64::consts::PI * SPHERE_RADIUS,
            GeometryKind::Torus { modulus } => {
                let mut shortest = f64::INFINITY;
                for m in -2..=2i32 {
                    for n in -2..=2i32 {
                        if m == 0 && n == 0 {
                            continue;
                        }
                        let v = Complex64::new(m as f64, 0.0) + modulus * n as f64;
                        shortest = shortest.min(v.norm());
                    }
                }
                0.5 * shortest * (2.0 * std::f64::consts::PI / modulus.im).sqrt()
            }
            GeometryKind::Hyperbolic { .. } => {
                // Half the octagon translation length (the systole).
                let half = (1.0 + std::f64::consts::SQRT_2).acosh();
                HYPERBOLIC_METRIC_SCALE * half
            }
        }
    }

    /// Draws a chart point, approximately uniform for the Liouville measure
    /// on compact geometries; on the plane, uniform on a disc of chart
    /// radius 2.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> ChartPoint {
        match &self.kind {
            GeometryKind::Plane => {
                let r = 2.0 * rng.gen::<f64>().sqrt();
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                ChartPoint::new(r * phi.cos(), r * phi.sin())
            }
            GeometryKind::Sphere => {
                let t: f64 = rng.gen_range(0.0..0.999);
                let r = (t / (1.0 - t)).sqrt();
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                ChartPoint::new(r * phi.cos(), r * phi.sin())
            }
            GeometryKind::Torus { modulus } => {
                let s: f64 = rng.gen();
                let t: f64 = rng.gen();
                ChartPoint::from_w(Complex64::new(s, 0.0) + modulus * t)
            }
            GeometryKind::Hyperbolic { group } => {
                let circ = (3.0 + 2.0 * std::f64::consts::SQRT_2).acosh();
                loop {
                    let u: f64 = rng.gen();
                    let rho_h = ((circ.cosh() - 1.0) * u + 1.0).acosh();
                    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                    let x = self
                        .exp_map(
                            ChartPoint::from_w(DOMAIN_CENTER),
                            HYPERBOLIC_METRIC_SCALE * rho_h,
                            phi,
                        )
                        .expect("polar map from center");
                    if group.in_fundamental_domain(x.w()).unwrap_or(false) {
                        return x;
                    }
                }
            }
        }
    }
}

/// Nodes and positive weights approximating integration against eps_omega
/// in chart coordinates; each weight already contains the Liouville density
/// and all Jacobians.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<ChartPoint>,
    pub weights: Vec<f64>,
    pub resolution: u32,
    pub estimated_error: f64,
    /// Name of the geometry the rule was built for.
    pub geometry: String,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of weights (pairwise, deterministic).
    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Integrates a scalar function against eps_omega.
    pub fn integrate<F: Fn(ChartPoint) -> f64>(&self, f: F) -> f64 {
        let vals: Vec<f64> =
            self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).collect();
        pairwise_sum(&vals)
    }
}

/// Builds the deterministic quadrature rule for a geometry.
///
/// `level` parameterizes the plane rule, whose radial nodes follow the
/// Gaussian decay e^{-k |z|^2} of level-k integrands; it is ignored by the
/// compact geometries.
pub fn build_quadrature(geom: &GeometrySpec, resolution: u32, level: u32) -> Result<QuadratureRule> {
    if resolution < 2 {
        return Err(Error::Parameter(format!("resolution must be >= 2, got {resolution}")));
    }
    let mut rule = match &geom.kind {
        GeometryKind::Sphere => build_sphere(resolution),
        GeometryKind::Torus { modulus } => build_torus(*modulus, resolution),
        GeometryKind::Plane => build_plane(resolution, level.max(1)),
        GeometryKind::Hyperbolic { group } => build_hyperbolic(group, resolution),
    }?;
    rule.geometry = geom.name.clone();
    Ok(rule)
}

/// Tensor rule: Gauss-Legendre in t = r^2/(1+r^2) (so the radial measure
/// becomes dt/2 exactly) times a periodic trapezoid in the angle.
fn build_sphere(resolution: u32) -> Result<QuadratureRule> {
    let n_t = resolution as usize;
    let n_theta = 2 * resolution as usize;
    let (ts, wts) = gauss_legendre_on(n_t, 0.0, 1.0);
    let mut nodes = Vec::with_capacity(n_t * n_theta);
    let mut weights = Vec::with_capacity(n_t * n_theta);
    for (t, wt) in ts.iter().zip(&wts) {
        let r = (t / (1.0 - t)).sqrt();
        for m in 0..n_theta {
            let theta = std::f64::consts::TAU * m as f64 / n_theta as f64;
            nodes.push(ChartPoint::new(r * theta.cos(), r * theta.sin()));
            weights.push(wt / n_theta as f64);
        }
    }
    finish(nodes, weights, resolution, Some(1.0))
}

/// Periodic trapezoid tensor grid on the lattice coordinates; the measure
/// is exactly ds dt there.
fn build_torus(modulus: Complex64, resolution: u32) -> Result<QuadratureRule> {
    let n = resolution as usize;
    let mut nodes = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    let w = 1.0 / (n * n) as f64;
    for i in 0..n {
        for j in 0..n {
            let s = i as f64 / n as f64;
            let t = j as f64 / n as f64;
            nodes.push(ChartPoint::from_w(Complex64::new(s, 0.0) + modulus * t));
            weights.push(w);
        }
    }
    finish(nodes, weights, resolution, Some(1.0))
}

/// Radial Gauss-Laguerre in rho = k |z|^2 (weights corrected by e^{rho}, so
/// the integrand supplies its own Gaussian decay) times a trapezoid angle.
fn build_plane(resolution: u32, level: u32) -> Result<QuadratureRule> {
    let n_r = resolution as usize;
    let n_theta = 2 * resolution as usize;
    let k = level as f64;
    let (rhos, wr) = gauss_laguerre_modified(n_r);
    let mut nodes = Vec::with_capacity(n_r * n_theta);
    let mut weights = Vec::with_capacity(n_r * n_theta);
    for (rho, w) in rhos.iter().zip(&wr) {
        let r_z = (rho / k).sqrt();
        let r_chart = std::f64::consts::SQRT_2 * r_z;
        for m in 0..n_theta {
            let theta = std::f64::consts::TAU * m as f64 / n_theta as f64;
            nodes.push(ChartPoint::new(r_chart * theta.cos(), r_chart * theta.sin()));
            weights.push(w / (k * n_theta as f64));
        }
    }
    finish(nodes, weights, resolution, None)
}

/// Geodesic polar rule over the Dirichlet octagon: per angular ray the
/// domain boundary is located by bisection on the membership test, then
/// Gauss-Legendre is applied radially with the exact measure
/// sinh(rho) d rho d phi / pi. The angle range splits at the eight vertex
/// directions so each arc has a smooth boundary radius.
fn build_hyperbolic(group: &GroupEnumeration, resolution: u32) -> Result<QuadratureRule> {
    let n_phi_per_arc = (resolution as usize / 8).max(3);
    let n_rho = (resolution as usize / 2).max(8);
    let circumradius = (3.0 + 2.0 * std::f64::consts::SQRT_2).acosh();
    let (gl_rho, gl_wrho) = gauss_legendre(n_rho);

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for arc in 0..8 {
        let phi0 = std::f64::consts::FRAC_PI_8 + arc as f64 * std::f64::consts::FRAC_PI_4;
        let phi1 = phi0 + std::f64::consts::FRAC_PI_4;
        let (phis, wphis) = gauss_legendre_on(n_phi_per_arc, phi0, phi1);
        for (phi, wphi) in phis.iter().zip(&wphis) {
            let rho_max = boundary_radius(group, *phi, circumradius)?;
            let half = 0.5 * rho_max;
            for (x, wx) in gl_rho.iter().zip(&gl_wrho) {
                let rho = half * (x + 1.0);
                let z = polar_point(rho, *phi);
                nodes.push(ChartPoint::from_w(z));
                weights.push(wphi * half * wx * rho.sinh() / std::f64::consts::PI);
            }
        }
    }
    finish(nodes, weights, resolution, Some(4.0))
}

/// Point at hyperbolic (curvature -1) distance rho from i, in the disc
/// direction phi.
fn polar_point(rho: f64, phi: f64) -> Complex64 {
    let w = Complex64::from_polar((0.5 * rho).tanh(), phi);
    (DOMAIN_CENTER - w * DOMAIN_CENTER.conj()) / (Complex64::new(1.0, 0.0) - w)
}

fn boundary_radius(group: &GroupEnumeration, phi: f64, circumradius: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = circumradius + 1e-6;
    if group.in_fundamental_domain(polar_point(hi, phi))? {
        return Err(Error::Inconsistent(
            "fundamental domain extends beyond the octagon circumradius".into(),
        ));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if group.in_fundamental_domain(polar_point(mid, phi))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn finish(
    nodes: Vec<ChartPoint>,
    weights: Vec<f64>,
    resolution: u32,
    volume: Option<f64>,
) -> Result<QuadratureRule> {
    debug_assert!(weights.iter().all(|w| *w > 0.0));
    let mut rule = QuadratureRule {
        nodes,
        weights,
        resolution,
        estimated_error: 0.0,
        geometry: String::new(),
    };
    if let Some(v) = volume {
        rule.estimated_error = (rule.total_weight() - v).abs().max(1e-14);
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{enumerate_group, genus2_generators, EnumerationOptions};
    use crate::observables::{Constant, RawField};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn genus2() -> GeometrySpec {
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 2, ..Default::default() };
        GeometrySpec::hyperbolic(enumerate_group(&gens, &opts).unwrap()).unwrap()
    }

    #[test]
    fn sphere_density_at_origin_is_one_over_pi() {
        let g = GeometrySpec::sphere();
        assert_relative_eq!(
            g.liouville_density(ChartPoint::new(0.0, 0.0)).unwrap(),
            1.0 / std::f64::consts::PI,
            epsilon = 1e-15
        );
    }

    #[test]
    fn plane_density_is_constant() {
        let g = GeometrySpec::plane();
        assert_relative_eq!(
            g.liouville_density(ChartPoint::new(0.3, -1.2)).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
    }

    #[test]
    fn hyperbolic_rejects_lower_half_plane() {
        let g = genus2();
        assert!(g.liouville_density(ChartPoint::new(0.0, -0.1)).is_err());
        assert!(g.liouville_density(ChartPoint::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn weight_examples() {
        let sphere = GeometrySpec::sphere();
        assert_relative_eq!(
            sphere.hermitian_weight(2, ChartPoint::new(1.0, 0.0)).unwrap(),
            0.25,
            epsilon = 1e-14
        );
        let torus = GeometrySpec::torus(Complex64::i()).unwrap();
        assert_eq!(torus.hermitian_weight(5, ChartPoint::new(0.3, 0.4)).unwrap(), 1.0);
        let hyp = genus2();
        assert_relative_eq!(
            hyp.hermitian_weight(1, ChartPoint::new(0.0, 1.0)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            hyp.hermitian_weight(2, ChartPoint::new(0.0, 2.0)).unwrap(),
            16.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn plane_potential_components() {
        let g = GeometrySpec::plane();
        // chart point with z = 1: (u, v) = (sqrt2, 0)
        let x = ChartPoint::new(std::f64::consts::SQRT_2, 0.0);
        let (a, b) = g.symplectic_potential(x).unwrap();
        assert_relative_eq!((a - Complex64::new(0.0, -0.5)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((b - Complex64::new(0.0, 0.5)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_potential_vanishes_at_origin() {
        let g = GeometrySpec::sphere();
        let (a, b) = g.symplectic_potential(ChartPoint::new(0.0, 0.0)).unwrap();
        assert_eq!(a, Complex64::new(0.0, 0.0));
        assert_eq!(b, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hyperbolic_potential_not_implemented() {
        let g = genus2();
        assert!(matches!(
            g.symplectic_potential(ChartPoint::new(0.0, 1.0)),
            Err(crate::error::Error::NotImplemented(_))
        ));
    }

    /// d tau = omega, checked with central finite differences of the real
    /// 1-form components on the chart.
    #[test]
    fn exterior_derivative_of_potential_is_omega() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let geoms = [
            GeometrySpec::plane(),
            GeometrySpec::sphere(),
            GeometrySpec::torus(Complex64::new(0.3, 1.1)).unwrap(),
        ];
        for g in &geoms {
            for _ in 0..10 {
                let x = ChartPoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let h = 1e-5;
                let comp = |p: ChartPoint| {
                    let (a, b) = g.symplectic_potential(p).unwrap();
                    let scale = g.chart_scale();
                    // tau = P du + Q dv with dz = scale (du + i dv)
                    let p_coef = scale * (a + b);
                    let q_coef = scale * Complex64::i() * (a - b);
                    (p_coef, q_coef)
                };
                let (_, q_up) = comp(ChartPoint::new(x.u + h, x.v));
                let (_, q_dn) = comp(ChartPoint::new(x.u - h, x.v));
                let (p_up, _) = comp(ChartPoint::new(x.u, x.v + h));
                let (p_dn, _) = comp(ChartPoint::new(x.u, x.v - h));
                let curl = (q_up - q_dn) / (2.0 * h) - (p_up - p_dn) / (2.0 * h);
                assert!(curl.im.abs() < 1e-8, "tau components must give a real curl");
                let omega = g.metric_density(x).unwrap();
                assert_relative_eq!(curl.re, omega, max_relative = 1e-7, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = GeometrySpec::sphere();
        let f = Constant(3.5);
        assert_relative_eq!(
            g.metric_laplacian(&f, ChartPoint::new(0.4, -0.3)).unwrap(),
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn laplacian_of_quadratic_on_plane() {
        // f = u^2 + v^2 has flat Laplacian 4; the plane metric density is 1,
        // and the calibrated sign is -1.
        let g = GeometrySpec::plane();
        let f = RawField::new(|x: ChartPoint| x.u * x.u + x.v * x.v);
        let val = g.metric_laplacian(&f, ChartPoint::new(0.7, -0.2)).unwrap();
        assert_relative_eq!(val, -4.0, max_relative = 1e-7);
    }

    #[test]
    fn laplacian_matches_finite_difference_stencil_on_sphere() {
        let g = GeometrySpec::sphere();
        let f = RawField::new(|x: ChartPoint| 1.0 / (1.0 + x.u * x.u + x.v * x.v));
        let x = ChartPoint::new(0.0, 0.0);
        // Independent 5-point stencil.
        let h = 1e-4;
        let fd = (f.eval(ChartPoint::new(h, 0.0))
            + f.eval(ChartPoint::new(-h, 0.0))
            + f.eval(ChartPoint::new(0.0, h))
            + f.eval(ChartPoint::new(0.0, -h))
            - 4.0 * f.eval(x))
            / (h * h);
        let expected = crate::calibrate::LAPLACIAN_SIGN * fd / g.metric_density(x).unwrap();
        assert_relative_eq!(g.metric_laplacian(&f, x).unwrap(), expected, max_relative = 1e-6);
    }

    #[test]
    fn distances_are_symmetric_and_vanish_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for g in [
            GeometrySpec::plane(),
            GeometrySpec::sphere(),
            GeometrySpec::torus(Complex64::new(0.2, 0.9)).unwrap(),
            genus2(),
        ] {
            for _ in 0..100 {
                let x = g.random_point(&mut rng);
                let y = g.random_point(&mut rng);
                assert_relative_eq!(g.geodesic_distance(x, x).unwrap(), 0.0, epsilon = 1e-9);
                assert_relative_eq!(
                    g.geodesic_distance(x, y).unwrap(),
                    g.geodesic_distance(y, x).unwrap(),
                    max_relative = 1e-10,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for g in [
            GeometrySpec::sphere(),
            GeometrySpec::torus(Complex64::i()).unwrap(),
            genus2(),
        ] {
            for _ in 0..100 {
                let x = g.random_point(&mut rng);
                let y = g.random_point(&mut rng);
                let z = g.random_point(&mut rng);
                let dxy = g.geodesic_distance(x, y).unwrap();
                let dyz = g.geodesic_distance(y, z).unwrap();
                let dxz = g.geodesic_distance(x, z).unwrap();
                assert!(dxz <= dxy + dyz + 1e-9);
            }
        }
    }

    #[test]
    fn hyperbolic_distance_example() {
        let g = genus2();
        let d = g
            .geodesic_distance(ChartPoint::new(0.0, 1.0), ChartPoint::new(0.0, 2.0))
            .unwrap();
        assert_relative_eq!(
            d,
            std::f64::consts::SQRT_2 * (1.25f64).acosh(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn torus_distance_matches_lattice_brute_force() {
        let lambda = Complex64::i();
        let g = GeometrySpec::torus(lambda).unwrap();
        let x = ChartPoint::new(0.0, 0.0);
        let y = ChartPoint::new(0.5, 0.5);
        let factor = (2.0 * std::f64::consts::PI / lambda.im).sqrt();
        let mut best = f64::INFINITY;
        for m in -1..=1 {
            for n in -1..=1 {
                let shift = Complex64::new(m as f64, n as f64);
                best = best.min((y.w() - x.w() - shift).norm());
            }
        }
        assert_relative_eq!(g.geodesic_distance(x, y).unwrap(), factor * best, epsilon = 1e-12);
    }

    #[test]
    fn sphere_distance_matches_radial_integral() {
        // d(0, r) = sqrt(2) arctan r for the Fubini-Study metric used here.
        let g = GeometrySpec::sphere();
        for r in [0.1, 0.7, 2.5] {
            let d = g
                .geodesic_distance(ChartPoint::new(0.0, 0.0), ChartPoint::new(r, 0.0))
                .unwrap();
            assert_relative_eq!(d, std::f64::consts::SQRT_2 * r.atan(), max_relative = 1e-12);
        }
    }

    #[test]
    fn sphere_quadrature_total_is_one() {
        let g = GeometrySpec::sphere();
        let q = build_quadrature(&g, 100, 1).unwrap();
        assert_relative_eq!(q.total_weight(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn torus_quadrature_total_is_liouville_volume() {
        let g = GeometrySpec::torus(Complex64::i()).unwrap();
        let q = build_quadrature(&g, 64, 1).unwrap();
        assert_relative_eq!(q.total_weight(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn hyperbolic_quadrature_matches_gauss_bonnet() {
        let g = genus2();
        let q = build_quadrature(&g, 200, 2).unwrap();
        // 4 pi (g-1) hyperbolic area, divided by pi.
        assert_relative_eq!(q.total_weight(), 4.0, epsilon = 1e-3);
    }

    #[test]
    fn quadrature_totals_converge_or_sit_on_the_floor() {
        // The sphere and torus rules integrate the constant exactly at every
        // resolution; the hyperbolic rule converges as resolution doubles.
        let sphere = GeometrySpec::sphere();
        let torus = GeometrySpec::torus(Complex64::i()).unwrap();
        for res in [25, 50, 100, 200] {
            assert!((build_quadrature(&sphere, res, 1).unwrap().total_weight() - 1.0).abs() < 1e-12);
            assert!((build_quadrature(&torus, res, 1).unwrap().total_weight() - 1.0).abs() < 1e-12);
        }
        let hyp = genus2();
        let errs: Vec<f64> = [25u32, 50, 100, 200]
            .iter()
            .map(|&res| (build_quadrature(&hyp, res, 2).unwrap().total_weight() - 4.0).abs())
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1] && errs[3] < errs[2], "errs {errs:?}");
    }

    #[test]
    fn quadrature_rejects_tiny_resolution() {
        assert!(build_quadrature(&GeometrySpec::sphere(), 1, 1).is_err());
    }

    #[test]
    fn quadrature_weights_and_densities_are_positive() {
        for (g, lvl) in [
            (GeometrySpec::plane(), 4),
            (GeometrySpec::sphere(), 1),
            (GeometrySpec::torus(Complex64::new(0.4, 1.3)).unwrap(), 1),
            (genus2(), 2),
        ] {
            let q = build_quadrature(&g, 24, lvl).unwrap();
            for (x, w) in q.nodes.iter().zip(&q.weights) {
                assert!(*w > 0.0);
                assert!(g.liouville_density(*x).unwrap() > 0.0);
                assert!(g.hermitian_weight(2, *x).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn plane_quadrature_integrates_gaussian_moments() {
        // With z = (u+iv)/sqrt2: int |z|^{2m} e^{-k|z|^2} eps_omega
        //   = m! / k^{m+1}.
        let g = GeometrySpec::plane();
        let k = 3u32;
        let q = build_quadrature(&g, 40, k).unwrap();
        for m in 0..4u32 {
            let val = q.integrate(|x| {
                let z2 = 0.5 * (x.u * x.u + x.v * x.v);
                z2.powi(m as i32) * (-(k as f64) * z2).exp()
            });
            let expect = (1..=m as u64).product::<u64>() as f64 / (k as f64).powi(m as i32 + 1);
            assert_relative_eq!(val, expect, max_relative = 1e-11);
        }
    }

    #[test]
    fn exp_map_respects_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for g in [
            GeometrySpec::plane(),
            GeometrySpec::sphere(),
            GeometrySpec::torus(Complex64::i()).unwrap(),
            genus2(),
        ] {
            for _ in 0..25 {
                let x = g.random_point(&mut rng);
                let rho = rng.gen_range(0.01..0.8) * g.max_polar_radius().min(2.0);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                let y = g.exp_map(x, rho, phi).unwrap();
                assert_relative_eq!(
                    g.geodesic_distance(x, y).unwrap(),
                    rho,
                    max_relative = 1e-9,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn polar_density_recovers_total_volume() {
        // Integrating the polar density over the full sphere gives 1.
        let g = GeometrySpec::sphere();
        let (rs, ws) = crate::numeric::gauss_legendre_on(64, 0.0, g.max_polar_radius());
        let total: f64 = rs
            .iter()
            .zip(&ws)
            .map(|(r, w)| w * g.polar_density(*r) * std::f64::consts::TAU)
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }
}
