//! Scalar observables on chart coordinates, with analytic derivatives where
//! available and finite-difference defaults otherwise.

use crate::geometry::ChartPoint;

/// A real scalar field on the chart.
///
/// `grad` and `flat_laplacian` default to central finite differences; named
/// observables override them with closed forms.
pub trait ScalarField {
    fn eval(&self, x: ChartPoint) -> f64;

    /// (f_u, f_v).
    fn grad(&self, x: ChartPoint) -> (f64, f64) {
        let h = 1e-6;
        let fu = (self.eval(ChartPoint::new(x.u + h, x.v)) - self.eval(ChartPoint::new(x.u - h, x.v)))
            / (2.0 * h);
        let fv = (self.eval(ChartPoint::new(x.u, x.v + h)) - self.eval(ChartPoint::new(x.u, x.v - h)))
            / (2.0 * h);
        (fu, fv)
    }

    /// f_uu + f_vv (flat chart Laplacian; fourth-order stencil by default).
    fn flat_laplacian(&self, x: ChartPoint) -> f64 {
        let h = 1e-3;
        let f = |du: f64, dv: f64| self.eval(ChartPoint::new(x.u + du, x.v + dv));
        let d2u = (-f(2.0 * h, 0.0) + 16.0 * f(h, 0.0) - 30.0 * f(0.0, 0.0) + 16.0 * f(-h, 0.0)
            - f(-2.0 * h, 0.0))
            / (12.0 * h * h);
        let d2v = (-f(0.0, 2.0 * h) + 16.0 * f(0.0, h) - 30.0 * f(0.0, 0.0) + 16.0 * f(0.0, -h)
            - f(0.0, -2.0 * h))
            / (12.0 * h * h);
        d2u + d2v
    }
}

/// Constant observable.
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn eval(&self, _x: ChartPoint) -> f64 {
        self.0
    }
    fn grad(&self, _x: ChartPoint) -> (f64, f64) {
        (0.0, 0.0)
    }
    fn flat_laplacian(&self, _x: ChartPoint) -> f64 {
        0.0
    }
}

/// Wraps a closure, relying on the finite-difference defaults.
pub struct RawField<F: Fn(ChartPoint) -> f64>(F);

impl<F: Fn(ChartPoint) -> f64> RawField<F> {
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F: Fn(ChartPoint) -> f64> ScalarField for RawField<F> {
    fn eval(&self, x: ChartPoint) -> f64 {
        self.0(x)
    }
}

/// |z|^2 / (1 + |z|^2) on the sphere chart (the height function in
/// stereographic coordinates).
pub struct SphereHeight;

impl ScalarField for SphereHeight {
    fn eval(&self, x: ChartPoint) -> f64 {
        let r2 = x.u * x.u + x.v * x.v;
        r2 / (1.0 + r2)
    }
    fn grad(&self, x: ChartPoint) -> (f64, f64) {
        let r2 = x.u * x.u + x.v * x.v;
        let d = (1.0 + r2) * (1.0 + r2);
        (2.0 * x.u / d, 2.0 * x.v / d)
    }
    fn flat_laplacian(&self, x: ChartPoint) -> f64 {
        let r2 = x.u * x.u + x.v * x.v;
        4.0 * (1.0 - r2) / (1.0 + r2).powi(3)
    }
}

/// Re z / (1 + |z|^2) on the sphere chart.
pub struct SphereReal;

impl ScalarField for SphereReal {
    fn eval(&self, x: ChartPoint) -> f64 {
        let r2 = x.u * x.u + x.v * x.v;
        x.u / (1.0 + r2)
    }
    fn grad(&self, x: ChartPoint) -> (f64, f64) {
        let r2 = x.u * x.u + x.v * x.v;
        let d = (1.0 + r2) * (1.0 + r2);
        ((1.0 + r2 - 2.0 * x.u * x.u) / d, -2.0 * x.u * x.v / d)
    }
    fn flat_laplacian(&self, x: ChartPoint) -> f64 {
        let r2 = x.u * x.u + x.v * x.v;
        -8.0 * x.u / (1.0 + r2).powi(3)
    }
}

/// cos(2 pi s) in the first lattice coordinate s = u - (lambda1/lambda2) v,
/// which is periodic on a torus of arbitrary modulus (the chart coordinate
/// u alone is not once lambda1 != 0). `slope` is lambda1/lambda2; zero for
/// rectangular tori and for use on the other geometries.
pub struct CosLattice {
    pub slope: f64,
}

impl CosLattice {
    /// Rectangular form cos(2 pi u).
    pub fn rectangular() -> Self {
        Self { slope: 0.0 }
    }

    fn s(&self, x: ChartPoint) -> f64 {
        x.u - self.slope * x.v
    }
}

impl ScalarField for CosLattice {
    fn eval(&self, x: ChartPoint) -> f64 {
        (std::f64::consts::TAU * self.s(x)).cos()
    }
    fn grad(&self, x: ChartPoint) -> (f64, f64) {
        let t = std::f64::consts::TAU;
        let d = -t * (t * self.s(x)).sin();
        (d, -self.slope * d)
    }
    fn flat_laplacian(&self, x: ChartPoint) -> f64 {
        let t = std::f64::consts::TAU;
        -t * t * (1.0 + self.slope * self.slope) * (t * self.s(x)).cos()
    }
}

/// Gaussian e^{-a |z - c|^2} in the complex coordinate z = (u + iv)/sqrt(2).
pub struct PlaneGaussian {
    pub a: f64,
    /// Center in the complex coordinate z.
    pub center: (f64, f64),
}

impl ScalarField for PlaneGaussian {
    fn eval(&self, x: ChartPoint) -> f64 {
        let zr = x.u * std::f64::consts::FRAC_1_SQRT_2 - self.center.0;
        let zi = x.v * std::f64::consts::FRAC_1_SQRT_2 - self.center.1;
        (-self.a * (zr * zr + zi * zi)).exp()
    }
    fn grad(&self, x: ChartPoint) -> (f64, f64) {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let zr = x.u * c - self.center.0;
        let zi = x.v * c - self.center.1;
        let f = (-self.a * (zr * zr + zi * zi)).exp();
        (-2.0 * self.a * zr * c * f, -2.0 * self.a * zi * c * f)
    }
    fn flat_laplacian(&self, x: ChartPoint) -> f64 {
        // In chart coordinates |z - c|^2 = ((u - cu)^2 + (v - cv)^2)/2.
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let zr = x.u * c - self.center.0;
        let zi = x.v * c - self.center.1;
        let q = zr * zr + zi * zi;
        let f = (-self.a * q).exp();
        // d^2/du^2 + d^2/dv^2 of f with d|z-c|^2/du = (u-cu'), chain factor 1/2 twice
        (-2.0 * self.a * f) * (1.0 - self.a * q)
    }
}

/// Height-like bump sin(pi v / lambda2)^2 usable on any chart; finite
/// differences supply the derivatives.
pub struct BumpV {
    pub scale: f64,
}

impl ScalarField for BumpV {
    fn eval(&self, x: ChartPoint) -> f64 {
        (std::f64::consts::PI * x.v / self.scale).sin().powi(2)
    }
}

/// Looks up a named observable, adapting lattice-coordinate observables to
/// the torus modulus; used by the command-line driver. Names: "one",
/// "height" (sphere), "real" (sphere), "cos-u" (torus lattice coordinate),
/// "gauss" (plane), "bump-v".
pub fn by_name(name: &str, geom: &crate::geometry::GeometrySpec) -> Option<Box<dyn ScalarField>> {
    use crate::geometry::GeometryKind;
    let modulus = match geom.kind {
        GeometryKind::Torus { modulus } => Some(modulus),
        _ => None,
    };
    match name {
        "one" => Some(Box::new(Constant(1.0))),
        "height" => Some(Box::new(SphereHeight)),
        "real" => Some(Box::new(SphereReal)),
        "cos-u" => Some(Box::new(CosLattice {
            slope: modulus.map(|m| m.re / m.im).unwrap_or(0.0),
        })),
        "gauss" => Some(Box::new(PlaneGaussian { a: 1.0, center: (0.0, 0.0) })),
        "bump-v" => Some(Box::new(BumpV { scale: modulus.map(|m| m.im).unwrap_or(1.0) })),
        _ => None,
    }
}

/// The names accepted by [`by_name`].
pub const OBSERVABLE_NAMES: [&str; 6] = ["one", "height", "real", "cos-u", "gauss", "bump-v"];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        struct Fd<'a>(&'a dyn ScalarField);
        impl ScalarField for Fd<'_> {
            fn eval(&self, x: ChartPoint) -> f64 {
                self.0.eval(x)
            }
        }
        let fields: Vec<Box<dyn ScalarField>> = vec![
            Box::new(SphereHeight),
            Box::new(SphereReal),
            Box::new(CosLattice { slope: 0.0 }),
            Box::new(CosLattice { slope: 0.35 }),
            Box::new(PlaneGaussian { a: 0.7, center: (0.2, -0.1) }),
        ];
        for f in &fields {
            for (u, v) in [(0.3, -0.4), (1.1, 0.9), (-0.6, 0.05)] {
                let x = ChartPoint::new(u, v);
                let fd = Fd(f.as_ref());
                let (gu, gv) = f.grad(x);
                let (hu, hv) = fd.grad(x);
                assert_relative_eq!(gu, hu, max_relative = 1e-6, epsilon = 1e-8);
                assert_relative_eq!(gv, hv, max_relative = 1e-6, epsilon = 1e-8);
                assert_relative_eq!(
                    f.flat_laplacian(x),
                    fd.flat_laplacian(x),
                    max_relative = 1e-6,
                    epsilon = 1e-7
                );
            }
        }
    }
}
