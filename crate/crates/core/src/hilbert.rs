//! Concrete quantum Hilbert spaces: section bases per geometry, theta
//! function evaluation, quadrature inner products, Gram matrices, and
//! Loewdin orthonormalization.
//!
//! Basis normalizations. Sphere: sqrt((k+1) C(k,j)) z^j with weight
//! (1+|z|^2)^{-k}. Torus: N_{k,j}^{-1/2} e^{k pi z(z - z-bar)/lambda2}
//! theta_j(lambda; z) with N_{k,j} = (2 k lambda2)^{-1/2} e^{2 pi j^2
//! lambda2 / k}. Plane: sqrt(k^{j+1}/j!) z^j e^{-k|z|^2/2} -- the
//! self-consistent normalization fixed by the reproducing property (the
//! calibrator records the gap left by the constant sqrt(k/j!)).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, GeometryKind, GeometrySpec, QuadratureRule};
use crate::numeric::{cis, ln_binomial, pairwise_sum_complex};

/// Truncation controls for the noncompact/series-backed bases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationParams {
    /// Explicit plane monomial degree cap (overrides the tail-mass rule).
    pub plane_degree: Option<usize>,
    /// Largest |z| (complex coordinate) at which the truncated plane basis
    /// must carry all but `plane_tail_mass` of the coherent density.
    pub plane_max_abs_z: f64,
    pub plane_tail_mass: f64,
    /// Relative tail tolerance for theta series.
    pub theta_tail_tol: f64,
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self {
            plane_degree: None,
            plane_max_abs_z: 2.0,
            plane_tail_mass: 1e-13,
            theta_tail_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
enum BasisKind {
    /// ln of sqrt((k+1) C(k,j)).
    Sphere { ln_coeffs: Vec<f64> },
    /// Monomial-times-Gaussian; coefficients built multiplicatively.
    Plane,
    /// Theta sections with closed-form norm constants N_{k,j}.
    Torus { modulus: Complex64, inv_sqrt_norms: Vec<f64>, tail_tol: f64 },
    /// Kernel-direct backend: no evaluators are materialized.
    Hyperbolic,
}

/// An evaluatable trivialized basis of H_k (or the recorded dimension, for
/// the kernel-direct hyperbolic backend).
#[derive(Debug, Clone)]
pub struct SectionBasis {
    pub geometry: GeometrySpec,
    pub k: u32,
    pub labels: Vec<String>,
    d: usize,
    kind: BasisKind,
    /// Optional column mixing M on top of the raw sections:
    /// theta'_j = sum_m theta_m M[m, j].
    mixing: Option<DMatrix<Complex64>>,
}

/// Builds the basis of H_k for a geometry.
///
/// The hyperbolic surface returns an empty evaluator list with d_k = 2k - 1
/// recorded; all its identities are checked kernel-directly.
pub fn basis_sections(geom: &GeometrySpec, k: u32, trunc: &TruncationParams) -> Result<SectionBasis> {
    if k < 1 {
        return Err(Error::Parameter("k must be >= 1".into()));
    }
    match &geom.kind {
        GeometryKind::Sphere => {
            let d = k as usize + 1;
            let ln_coeffs: Vec<f64> = (0..=k)
                .map(|j| 0.5 * (((k + 1) as f64).ln() + ln_binomial(k, j)))
                .collect();
            Ok(SectionBasis {
                geometry: geom.clone(),
                k,
                labels: (0..=k).map(|j| format!("z^{j}")).collect(),
                d,
                kind: BasisKind::Sphere { ln_coeffs },
                mixing: None,
            })
        }
        GeometryKind::Plane => {
            let degree = match trunc.plane_degree {
                Some(j) => j,
                None => plane_truncation_degree(k, trunc.plane_max_abs_z, trunc.plane_tail_mass),
            };
            let d = degree + 1;
            Ok(SectionBasis {
                geometry: geom.clone(),
                k,
                labels: (0..d).map(|j| format!("z^{j} exp(-k|z|^2/2)")).collect(),
                d,
                kind: BasisKind::Plane,
                mixing: None,
            })
        }
        GeometryKind::Torus { modulus } => {
            let lambda2 = modulus.im;
            let d = k as usize;
            let inv_sqrt_norms: Vec<f64> = (0..k)
                .map(|j| {
                    let n = torus_norm_constant(*modulus, k, j);
                    1.0 / n.sqrt()
                })
                .collect();
            let _ = lambda2;
            Ok(SectionBasis {
                geometry: geom.clone(),
                k,
                labels: (0..k).map(|j| format!("theta_{j}")).collect(),
                d,
                kind: BasisKind::Torus {
                    modulus: *modulus,
                    inv_sqrt_norms,
                    tail_tol: trunc.theta_tail_tol,
                },
                mixing: None,
            })
        }
        GeometryKind::Hyperbolic { .. } => {
            if k < 2 {
                return Err(Error::Parameter(
                    "hyperbolic surface requires k >= 2 (dimension formula and Poincare series)"
                        .into(),
                ));
            }
            Ok(SectionBasis {
                geometry: geom.clone(),
                k,
                labels: Vec::new(),
                d: 2 * k as usize - 1,
                kind: BasisKind::Hyperbolic,
                mixing: None,
            })
        }
    }
}

/// Closed-form norm constant N_{k,j} of the raw torus section.
pub fn torus_norm_constant(modulus: Complex64, k: u32, j: u32) -> f64 {
    let lambda2 = modulus.im;
    (2.0 * k as f64 * lambda2).powf(-0.5)
        * (2.0 * std::f64::consts::PI * (j * j) as f64 * lambda2 / k as f64).exp()
}

/// Smallest degree J with Poisson(lambda = k r^2) tail mass below `tail`.
fn plane_truncation_degree(k: u32, max_abs_z: f64, tail: f64) -> usize {
    let lambda = k as f64 * max_abs_z * max_abs_z;
    let mut term = (-lambda).exp();
    let mut cum = term;
    let mut j = 0usize;
    while 1.0 - cum > tail && j < 4000 {
        j += 1;
        term *= lambda / j as f64;
        cum += term;
    }
    j + 8
}

impl SectionBasis {
    /// Dimension d_k (recorded even when no evaluators exist).
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn has_evaluators(&self) -> bool {
        !matches!(self.kind, BasisKind::Hyperbolic)
    }

    fn require_evaluators(&self) -> Result<()> {
        if self.has_evaluators() {
            Ok(())
        } else {
            Err(Error::NotImplemented(
                "hyperbolic backend is kernel-direct; no basis evaluators".into(),
            ))
        }
    }

    /// Trivialized section values at x.
    pub fn values(&self, x: ChartPoint) -> Result<Vec<Complex64>> {
        self.require_evaluators()?;
        self.geometry.validate_point(x)?;
        let raw = self.raw_values(x, false);
        Ok(self.apply_mixing(raw))
    }

    /// Section values times sqrt(W) -- the numerically safe form used by
    /// every quadrature pairing (bounded by Cauchy-Schwarz).
    pub fn values_weighted(&self, x: ChartPoint) -> Result<Vec<Complex64>> {
        self.require_evaluators()?;
        self.geometry.validate_point(x)?;
        let raw = self.raw_values(x, true);
        Ok(self.apply_mixing(raw))
    }

    pub fn value(&self, j: usize, x: ChartPoint) -> Result<Complex64> {
        Ok(self.values(x)?[j])
    }

    /// Weighted values together with weighted chart derivatives
    /// ((d_u s~) sqrt W, (d_v s~) sqrt W), all analytic.
    pub fn values_and_derivs_weighted(
        &self,
        x: ChartPoint,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> {
        self.require_evaluators()?;
        self.geometry.validate_point(x)?;
        let (v, du, dv) = self.raw_derivs(x);
        Ok((self.apply_mixing(v), self.apply_mixing(du), self.apply_mixing(dv)))
    }

    fn apply_mixing(&self, raw: Vec<Complex64>) -> Vec<Complex64> {
        match &self.mixing {
            None => raw,
            Some(m) => {
                let d = self.d;
                let mut out = vec![Complex64::new(0.0, 0.0); d];
                for (jj, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..d {
                        acc += raw[i] * m[(i, jj)];
                    }
                    *o = acc;
                }
                out
            }
        }
    }

    fn raw_values(&self, x: ChartPoint, weighted: bool) -> Vec<Complex64> {
        match &self.kind {
            BasisKind::Sphere { ln_coeffs } => {
                let z = x.w();
                let r = z.norm();
                let k = self.k as f64;
                let half_l1 = if weighted { 0.5 * k * r.powi(2).ln_1p() } else { 0.0 };
                if r == 0.0 {
                    let mut out = vec![Complex64::new(0.0, 0.0); self.d];
                    out[0] = Complex64::new((ln_coeffs[0] - half_l1).exp(), 0.0);
                    return out;
                }
                let lr = r.ln();
                let phi = z.arg();
                (0..self.d)
                    .map(|j| {
                        let mag = (ln_coeffs[j] + j as f64 * lr - half_l1).exp();
                        mag * cis(j as f64 * phi)
                    })
                    .collect()
            }
            BasisKind::Plane => {
                let z = self.geometry.complex_coordinate(x);
                let k = self.k as f64;
                let gauss = (-0.5 * k * z.norm_sqr()).exp();
                let mut out = Vec::with_capacity(self.d);
                let mut v = Complex64::new(k.sqrt() * gauss, 0.0);
                out.push(v);
                for j in 1..self.d {
                    v *= z * (k / j as f64).sqrt();
                    out.push(v);
                }
                out
            }
            BasisKind::Torus { modulus, inv_sqrt_norms, tail_tol } => {
                let xr = self.geometry.reduce(x);
                let z = self.geometry.complex_coordinate(xr);
                let prefactor = torus_prefactor(*modulus, self.k, z);
                (0..self.d)
                    .map(|j| {
                        let (th, _) = theta_series(*modulus, self.k, j as u32, z, *tail_tol)
                            .expect("convergent modulus");
                        inv_sqrt_norms[j] * prefactor * th
                    })
                    .collect()
            }
            BasisKind::Hyperbolic => unreachable!(),
        }
    }

    /// (weighted values, weighted d_u, weighted d_v).
    fn raw_derivs(&self, x: ChartPoint) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let d = self.d;
        match &self.kind {
            BasisKind::Sphere { ln_coeffs } => {
                let z = x.w();
                let r = z.norm();
                let k = self.k as f64;
                let half_l1 = 0.5 * k * r.powi(2).ln_1p();
                let v = self.raw_values(x, true);
                let mut core = vec![Complex64::new(0.0, 0.0); d];
                if r == 0.0 {
                    if d > 1 {
                        core[1] = Complex64::new((ln_coeffs[1] - half_l1).exp(), 0.0);
                    }
                } else {
                    let lr = r.ln();
                    let phi = z.arg();
                    for (j, c) in core.iter_mut().enumerate().skip(1) {
                        let mag =
                            (ln_coeffs[j] + (j as f64).ln() + (j as f64 - 1.0) * lr - half_l1).exp();
                        *c = mag * cis((j as f64 - 1.0) * phi);
                    }
                }
                let dv: Vec<Complex64> = core.iter().map(|c| Complex64::i() * c).collect();
                (v, core, dv)
            }
            BasisKind::Plane => {
                let k = self.k as f64;
                let c = self.geometry.chart_scale();
                let v = self.raw_values(x, true);
                let mut du = Vec::with_capacity(d);
                let mut dvv = Vec::with_capacity(d);
                for j in 0..d {
                    let lower = if j == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        v[j - 1] * (k * j as f64).sqrt()
                    };
                    du.push(c * lower - 0.5 * k * x.u * v[j]);
                    dvv.push(Complex64::i() * c * lower - 0.5 * k * x.v * v[j]);
                }
                (v, du, dvv)
            }
            BasisKind::Torus { modulus, inv_sqrt_norms, tail_tol } => {
                let xr = self.geometry.reduce(x);
                let z = self.geometry.complex_coordinate(xr);
                let lambda2 = modulus.im;
                let kf = self.k as f64;
                let pre = torus_prefactor(*modulus, self.k, z);
                let c = self.geometry.chart_scale();
                let mut v = Vec::with_capacity(d);
                let mut du = Vec::with_capacity(d);
                let mut dvv = Vec::with_capacity(d);
                for (j, n) in inv_sqrt_norms.iter().enumerate().take(d) {
                    let (th, dth) =
                        theta_series_with_derivative(*modulus, self.k, j as u32, z, *tail_tol);
                    let coeff = kf * std::f64::consts::PI / lambda2;
                    let dz = pre * (coeff * (2.0 * z - z.conj()) * th + dth);
                    let dzbar = pre * (-coeff * z) * th;
                    v.push(n * pre * th);
                    du.push(n * c * (dz + dzbar));
                    dvv.push(n * Complex64::i() * c * (dz - dzbar));
                }
                (v, du, dvv)
            }
            BasisKind::Hyperbolic => unreachable!(),
        }
    }

    /// Returns a copy with an additional mixing matrix applied on the right.
    fn with_mixing(&self, m: DMatrix<Complex64>) -> Self {
        let mixing = match &self.mixing {
            None => m,
            Some(old) => old * &m,
        };
        Self { mixing: Some(mixing), ..self.clone() }
    }
}

/// e^{k pi z (z - z-bar) / lambda2}.
fn torus_prefactor(modulus: Complex64, k: u32, z: Complex64) -> Complex64 {
    let lambda2 = modulus.im;
    (Complex64::new(k as f64 * std::f64::consts::PI / lambda2, 0.0) * z * (z - z.conj())).exp()
}

/// theta_j(lambda; z) = sum_n exp(i lambda pi (k n^2 + 2 j n)
///                               + 2 pi i sqrt(2) (j + k n) z).
///
/// The sum is truncated once the next omitted terms on both sides fall
/// below `tail_tol * (|partial sum| + 1)`; the number of retained terms is
/// returned alongside the value.
pub fn theta_eval(
    lambda: Complex64,
    k: u32,
    j: u32,
    z: Complex64,
    tail_tol: f64,
) -> Result<(Complex64, u32)> {
    if !(lambda.im > 0.0) {
        return Err(Error::Domain(format!("theta series needs Im lambda > 0, got {}", lambda.im)));
    }
    if j >= k {
        return Err(Error::Parameter(format!("theta index j = {j} must satisfy 0 <= j < k = {k}")));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::Parameter("tail_tol must be positive".into()));
    }
    theta_series(lambda, k, j, z, tail_tol)
}

fn theta_term(lambda: Complex64, k: u32, j: u32, z: Complex64, n: i64) -> Complex64 {
    let i = Complex64::i();
    let nf = n as f64;
    let kf = k as f64;
    let jf = j as f64;
    let quad = i * lambda * std::f64::consts::PI * (kf * nf * nf + 2.0 * jf * nf);
    let lin = i * 2.0 * std::f64::consts::PI * std::f64::consts::SQRT_2 * (jf + kf * nf) * z;
    (quad + lin).exp()
}

fn theta_series(
    lambda: Complex64,
    k: u32,
    j: u32,
    z: Complex64,
    tail_tol: f64,
) -> Result<(Complex64, u32)> {
    if !(lambda.im > 0.0) {
        return Err(Error::Domain("Im lambda must be positive".into()));
    }
    let mut sum = theta_term(lambda, k, j, z, 0);
    let mut count = 1u32;
    let mut quiet = 0;
    for n in 1..=1200i64 {
        let tp = theta_term(lambda, k, j, z, n);
        let tm = theta_term(lambda, k, j, z, -n);
        sum += tp + tm;
        count += 1;
        if tp.norm().max(tm.norm()) < tail_tol * (sum.norm() + 1.0) {
            quiet += 1;
            // Two consecutive quiet shells guard against the Gaussian peak
            // sitting off-center.
            if quiet >= 2 {
                return Ok((sum, count));
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Inconsistent("theta series failed to converge within 1200 terms".into()))
}

/// Same reduction for the z-derivative of the theta series.
fn theta_series_with_derivative(
    lambda: Complex64,
    k: u32,
    j: u32,
    z: Complex64,
    tail_tol: f64,
) -> (Complex64, Complex64) {
    let factor = |n: i64| {
        Complex64::i()
            * 2.0
            * std::f64::consts::PI
            * std::f64::consts::SQRT_2
            * (j as f64 + k as f64 * n as f64)
    };
    let mut sum = theta_term(lambda, k, j, z, 0);
    let mut dsum = factor(0) * sum;
    let mut quiet = 0;
    for n in 1..=1200i64 {
        let tp = theta_term(lambda, k, j, z, n);
        let tm = theta_term(lambda, k, j, z, -n);
        sum += tp + tm;
        dsum += factor(n) * tp + factor(-n) * tm;
        let scale = 1.0 + n as f64 * k as f64;
        if scale * tp.norm().max(tm.norm()) < tail_tol * (sum.norm() + 1.0) {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (sum, dsum)
}

/// Quadrature inner product <s1, s2> = sum w W conj(s1~) s2~ of two
/// trivialized section evaluators.
pub fn inner_product(
    geom: &GeometrySpec,
    k: u32,
    quad: &QuadratureRule,
    s1: &dyn Fn(ChartPoint) -> Complex64,
    s2: &dyn Fn(ChartPoint) -> Complex64,
) -> Result<Complex64> {
    if quad.geometry != geom.name {
        return Err(Error::Parameter(format!(
            "quadrature built for '{}' used with geometry '{}'",
            quad.geometry, geom.name
        )));
    }
    let mut terms = Vec::with_capacity(quad.len());
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        let weight = geom.hermitian_weight(k, *x)?;
        terms.push(w * weight * s1(*x).conj() * s2(*x));
    }
    Ok(pairwise_sum_complex(&terms))
}

/// Hermitian Gram matrix of a basis under a quadrature rule.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub entries: DMatrix<Complex64>,
    pub quadrature_resolution: u32,
}

impl GramMatrix {
    /// Max |G - I| entry.
    pub fn identity_gap(&self) -> f64 {
        let d = self.entries.nrows();
        let mut gap: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                gap = gap.max((self.entries[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        gap
    }
}

/// Assembles the Gram matrix G_ij = <theta_i, theta_j> from weighted values;
/// only the upper triangle is computed and the rest mirrored, so the result
/// is Hermitian by construction.
pub fn gram(basis: &SectionBasis, quad: &QuadratureRule) -> Result<GramMatrix> {
    basis.require_evaluators()?;
    let d = basis.dim();
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        let v = basis.values_weighted(*x)?;
        for jj in 0..d {
            let scaled = v[jj] * *w;
            for i in 0..=jj {
                acc[(i, jj)] += v[i].conj() * scaled;
            }
        }
    }
    for jj in 0..d {
        for i in 0..jj {
            acc[(jj, i)] = acc[(i, jj)].conj();
        }
        acc[(jj, jj)] = Complex64::new(acc[(jj, jj)].re, 0.0);
    }
    Ok(GramMatrix { entries: acc, quadrature_resolution: quad.resolution })
}

/// Serializable basis/Gram summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisDump {
    pub geometry: String,
    pub k: u32,
    pub dimension: usize,
    pub labels: Vec<String>,
    /// Norm of each section under the quadrature (diagonal of the Gram).
    pub normalizations: Vec<f64>,
    pub quadrature_resolution: u32,
    pub max_offdiagonal_gram_error: f64,
}

/// Assembles the JSON-facing basis summary from a Gram matrix.
pub fn basis_dump(basis: &SectionBasis, g: &GramMatrix) -> BasisDump {
    let d = basis.dim();
    let mut offdiag: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                offdiag = offdiag.max(g.entries[(i, j)].norm());
            }
        }
    }
    BasisDump {
        geometry: basis.geometry.name.clone(),
        k: basis.k,
        dimension: d,
        labels: basis.labels.clone(),
        normalizations: (0..d).map(|j| g.entries[(j, j)].re).collect(),
        quadrature_resolution: g.quadrature_resolution,
        max_offdiagonal_gram_error: offdiag,
    }
}

/// Loewdin (symmetric) orthonormalization: mixes the basis by G^{-1/2}.
/// Errors if the Gram matrix is numerically singular, which signals a
/// quadrature too coarse for the basis or a dependent section list.
pub fn orthonormalize(basis: &SectionBasis, g: &GramMatrix) -> Result<SectionBasis> {
    basis.require_evaluators()?;
    let d = basis.dim();
    let eig = g.entries.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut inv_sqrt = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        let ev = eig.eigenvalues[i];
        if ev <= 1e-12 * max_ev {
            return Err(Error::RankDeficient(format!(
                "Gram eigenvalue {ev:.3e} vs max {max_ev:.3e}"
            )));
        }
        inv_sqrt[(i, i)] = Complex64::new(1.0 / ev.sqrt(), 0.0);
    }
    let m = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    Ok(basis.with_mixing(m))
}
