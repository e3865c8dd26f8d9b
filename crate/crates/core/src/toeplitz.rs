//! Berezin-Toeplitz operator matrices, covariant symbols, the trace
//! identity, Kostant-Souriau operators, and Tuynman-formula residuals.
//!
//! Sign conventions (covariant derivative d - ik tau, Laplacian with
//! nonnegative spectrum) are the calibrated pair from `calibrate`; the
//! 2x2 discrimination search lives in `tuynman_residual_with_signs`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::calibrate::{CONNECTION_SIGN, LAPLACIAN_SIGN};
use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, QuadratureRule};
use crate::kernel::{KernelContext, DENSITY_FLOOR};
use crate::numeric::pairwise_sum;
use crate::observables::ScalarField;

/// A d_k x d_k operator on H_k in the orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: DMatrix<Complex64>,
    pub k: u32,
    pub geometry: String,
    pub observable: String,
}

/// JSON-facing operator dump: row-major (re, im) entry pairs plus any
/// residuals recorded against it.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct OperatorDump {
    pub geometry: String,
    pub k: u32,
    pub observable: String,
    pub dimension: usize,
    pub entries: Vec<[f64; 2]>,
    pub residuals: std::collections::BTreeMap<String, f64>,
}

impl OperatorMatrix {
    pub fn dump(&self, residuals: std::collections::BTreeMap<String, f64>) -> OperatorDump {
        let d = self.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let e = self.entries[(i, j)];
                entries.push([e.re, e.im]);
            }
        }
        OperatorDump {
            geometry: self.geometry.clone(),
            k: self.k,
            observable: self.observable.clone(),
            dimension: d,
            entries,
            residuals,
        }
    }

    /// Rebuilds a matrix from a dump.
    pub fn from_dump(dump: &OperatorDump) -> Result<Self> {
        let d = dump.dimension;
        if dump.entries.len() != d * d {
            return Err(Error::Parameter(format!(
                "operator dump holds {} entries for dimension {d}",
                dump.entries.len()
            )));
        }
        let entries = DMatrix::from_fn(d, d, |i, j| {
            let [re, im] = dump.entries[i * d + j];
            Complex64::new(re, im)
        });
        Ok(Self {
            entries,
            k: dump.k,
            geometry: dump.geometry.clone(),
            observable: dump.observable.clone(),
        })
    }
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Max entrywise deviation from Hermiticity.
    pub fn hermiticity_gap(&self) -> f64 {
        let d = self.dim();
        let mut gap: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                gap = gap.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        gap
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Largest singular value (operator norm).
    pub fn operator_norm(&self) -> f64 {
        self.entries
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }
}

/// Max |entry| of the difference of two operators.
pub fn max_entry_gap(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    let mut gap: f64 = 0.0;
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            gap = gap.max((a.entries[(i, j)] - b.entries[(i, j)]).norm());
        }
    }
    gap
}

/// Toeplitz quantization Q(f): entries <theta_i, f theta_j> by quadrature.
pub fn toeplitz_matrix(
    ctx: &KernelContext,
    quad: &QuadratureRule,
    f: &dyn ScalarField,
    label: &str,
) -> Result<OperatorMatrix> {
    let basis = ctx
        .basis()
        .ok_or_else(|| Error::NotImplemented("Toeplitz matrices require basis mode".into()))?;
    let d = basis.dim();
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        let v = basis.values_weighted(*x)?;
        let scale = w * f.eval(*x);
        for jj in 0..d {
            let vj = v[jj] * scale;
            for i in 0..d {
                acc[(i, jj)] += v[i].conj() * vj;
            }
        }
    }
    Ok(OperatorMatrix {
        entries: acc,
        k: ctx.k,
        geometry: ctx.geom.name.clone(),
        observable: label.to_string(),
    })
}

/// Covariant symbol A^(x) = <x|A|x> at a point with eps(x) > 0.
pub fn covariant_symbol(ctx: &KernelContext, a: &OperatorMatrix, x: ChartPoint) -> Result<Complex64> {
    let c = ctx.coherent_coefficients(x)?;
    let eps = c.norm_squared();
    if eps < DENSITY_FLOOR {
        return Err(Error::Domain("covariant symbol undefined where eps(x) = 0".into()));
    }
    let ac = &a.entries * &c;
    Ok(c.dotc(&ac) / eps)
}

/// |Tr A - int A^ d mu^(k)| by quadrature. The integrand is assembled as
/// c(x)^* A c(x), which equals A^(x) eps(x) and stays finite on the base
/// locus.
pub fn trace_identity_residual(
    ctx: &KernelContext,
    a: &OperatorMatrix,
    quad: &QuadratureRule,
) -> Result<f64> {
    if ctx.basis().is_none() {
        return Err(Error::NotImplemented("trace identity check requires basis mode".into()));
    }
    let mut terms = Vec::with_capacity(quad.len());
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        let c = ctx.coherent_coefficients(*x)?;
        let ac = &a.entries * &c;
        terms.push(w * c.dotc(&ac).re);
    }
    let integral = pairwise_sum(&terms);
    Ok((a.trace().re - integral).abs())
}

/// Matrix of the projected Kostant-Souriau operator
/// Pi ( -(i/k) nabla_{X_f} + f ) Pi with nabla = d - i k s tau and the
/// Hamiltonian field from X_f . omega = df.
pub fn kostant_souriau_matrix(
    ctx: &KernelContext,
    quad: &QuadratureRule,
    f: &dyn ScalarField,
    label: &str,
    connection_sign: f64,
) -> Result<OperatorMatrix> {
    let basis = ctx
        .basis()
        .ok_or_else(|| Error::NotImplemented("Kostant-Souriau matrices require basis mode".into()))?;
    let d = basis.dim();
    let k = ctx.k as f64;
    let chart = ctx.geom.chart_scale();
    let minus_i_over_k = Complex64::new(0.0, -1.0 / k);
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    let mut qks = vec![Complex64::new(0.0, 0.0); d];
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        let (v, du, dv) = basis.values_and_derivs_weighted(*x)?;
        let fval = f.eval(*x);
        let (fu, fv) = f.grad(*x);
        let w_omega = ctx.geom.metric_density(*x)?;
        // X_f . omega = df in chart coordinates.
        let a_u = fv / w_omega;
        let a_v = -fu / w_omega;
        let (tau_dz, tau_dzbar) = ctx.geom.symplectic_potential(*x)?;
        let xf_z = chart * Complex64::new(a_u, a_v);
        let tau_of_xf = tau_dz * xf_z + tau_dzbar * xf_z.conj();
        let conn = Complex64::new(0.0, -k * connection_sign) * tau_of_xf;
        for j in 0..d {
            let nabla = a_u * du[j] + a_v * dv[j] + conn * v[j];
            qks[j] = minus_i_over_k * nabla + fval * v[j];
        }
        for (jj, q) in qks.iter().enumerate() {
            let scaled = q * *w;
            for i in 0..d {
                acc[(i, jj)] += v[i].conj() * scaled;
            }
        }
    }
    Ok(OperatorMatrix {
        entries: acc,
        k: ctx.k,
        geometry: ctx.geom.name.clone(),
        observable: format!("KS[{label}]"),
    })
}

/// || Pi Q_KS(f) Pi - Q(f - Delta f / 2k) ||_max with the calibrated signs.
pub fn tuynman_residual(ctx: &KernelContext, quad: &QuadratureRule, f: &dyn ScalarField) -> Result<f64> {
    tuynman_residual_with_signs(ctx, quad, f, CONNECTION_SIGN, LAPLACIAN_SIGN)
}

/// Same residual for an arbitrary sign pair; the calibrator minimizes this
/// over the four combinations.
pub fn tuynman_residual_with_signs(
    ctx: &KernelContext,
    quad: &QuadratureRule,
    f: &dyn ScalarField,
    connection_sign: f64,
    laplacian_sign: f64,
) -> Result<f64> {
    let ks = kostant_souriau_matrix(ctx, quad, f, "f", connection_sign)?;
    let k = ctx.k as f64;
    let geom = ctx.geom.clone();
    let corrected = CorrectedField { f, geom: &geom, sign: laplacian_sign, two_k: 2.0 * k };
    let q = toeplitz_matrix(ctx, quad, &corrected, "f - lap f / 2k")?;
    Ok(max_entry_gap(&ks, &q))
}

struct CorrectedField<'a> {
    f: &'a dyn ScalarField,
    geom: &'a crate::geometry::GeometrySpec,
    sign: f64,
    two_k: f64,
}

impl ScalarField for CorrectedField<'_> {
    fn eval(&self, x: ChartPoint) -> f64 {
        let lap = self
            .geom
            .metric_laplacian_with_sign(self.f, x, self.sign)
            .expect("laplacian on quadrature node");
        self.f.eval(x) - lap / self.two_k
    }
}

/// Applies an operator to a coefficient vector.
pub fn apply(a: &OperatorMatrix, v: &DVector<Complex64>) -> DVector<Complex64> {
    &a.entries * v
}
