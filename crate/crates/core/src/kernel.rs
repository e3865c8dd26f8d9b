//! Reproducing kernels, coherent states, coherent density, 2-point
//! functions, Rawnsley states, peak-section identities, and coherent-basis
//! selection.
//!
//! Two backends share one interface. Basis mode (plane, sphere, torus)
//! works through coefficient vectors c_j(x) = sqrt(W(x)) conj(theta_j(x))
//! in the orthonormal basis, so |c(x)|^2 = eps(x) and every pairing is a
//! bounded dot product. The hyperbolic surface is kernel-direct: the
//! reproducing kernel is the truncated Poincare series
//!
//!   K(w, z) = (2k-1)/4 sum_gamma (2i / (gamma z - conj w))^{2k}
//!                                j(gamma, z)^{-2k},
//!
//! whose prefactor and (Im z)^{2k} weight are pinned numerically by the
//! trace identity int eps^(k) eps_omega = 2k - 1.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, GeometrySpec, QuadratureRule};
use crate::hilbert::{basis_sections, SectionBasis, TruncationParams};
use crate::numeric::{pairwise_sum, pairwise_sum_complex};

/// Coherent densities below this floor are treated as exact zeros (base
/// locus); the normalized coherent state there is the zero vector.
pub const DENSITY_FLOOR: f64 = 1e-20;

/// Truncation diagnostics for a Poincare-series evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub word_length: u32,
    pub elements: usize,
    /// Magnitude of the largest term in the outermost word-length shell.
    pub tail_estimate: f64,
    pub warning: bool,
}

/// One kernel evaluation K(x, y); `value` is the trivialized number, and
/// `weighted` is sqrt(W(x) W(y)) K(x, y), the form bounded by
/// sqrt(eps(x) eps(y)). Serializes (with any truncation report) for batch
/// dumps.
#[derive(Debug, Clone, Serialize)]
pub struct KernelValue {
    pub x: ChartPoint,
    pub y: ChartPoint,
    pub value: Complex64,
    pub weighted: Complex64,
    pub truncation: Option<TruncationReport>,
}

#[derive(Debug, Clone)]
pub enum CoherentData {
    /// Coefficients in the orthonormal basis, weighted convention
    /// c_j = sqrt(W(x)) conj(theta_j(x)).
    Coefficients(DVector<Complex64>),
    /// Hyperbolic mode: the state exists only through kernel evaluations.
    KernelBacked,
}

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub base_point: ChartPoint,
    pub k: u32,
    pub data: CoherentData,
    /// |Phi_x|^2 = eps^(k)(x).
    pub norm_sq: f64,
}

impl CoherentState {
    /// Unit-norm coefficient vector; the zero vector on the base locus.
    pub fn normalized_coefficients(&self) -> Option<DVector<Complex64>> {
        match &self.data {
            CoherentData::KernelBacked => None,
            CoherentData::Coefficients(c) => {
                if self.norm_sq < DENSITY_FLOOR {
                    Some(DVector::zeros(c.len()))
                } else {
                    Some(c / Complex64::new(self.norm_sq.sqrt(), 0.0))
                }
            }
        }
    }
}

/// A coherent state (or kernel row) prepared for repeated pairings against
/// many second arguments.
pub enum PreparedState {
    Basis { coeffs: DVector<Complex64> },
    Hyperbolic { gx: Vec<Complex64>, jinv: Vec<Complex64>, shell_start: usize, sqrt_w: f64 },
}

/// Evaluation context for a geometry at level k: owns the basis in basis
/// mode, or drives the Poincare series on the hyperbolic surface.
pub struct KernelContext {
    pub geom: GeometrySpec,
    pub k: u32,
    basis: Option<SectionBasis>,
}

impl KernelContext {
    pub fn new(geom: &GeometrySpec, k: u32, trunc: &TruncationParams) -> Result<Self> {
        let basis = if geom.is_basis_mode() {
            Some(basis_sections(geom, k, trunc)?)
        } else {
            // Validates k >= 2 and records d_k.
            basis_sections(geom, k, trunc)?;
            None
        };
        Ok(Self { geom: geom.clone(), k, basis })
    }

    /// Wraps an existing basis (e.g. an orthonormalized one).
    pub fn with_basis(basis: SectionBasis) -> Self {
        Self { geom: basis.geometry.clone(), k: basis.k, basis: Some(basis) }
    }

    pub fn basis(&self) -> Option<&SectionBasis> {
        self.basis.as_ref()
    }

    pub fn dim(&self) -> usize {
        match &self.basis {
            Some(b) => b.dim(),
            None => 2 * self.k as usize - 1,
        }
    }

    pub fn is_basis_mode(&self) -> bool {
        self.basis.is_some()
    }

    fn require_basis(&self) -> Result<&SectionBasis> {
        self.basis.as_ref().ok_or_else(|| {
            Error::NotImplemented("operation requires basis mode (plane/sphere/torus)".into())
        })
    }

    /// Coefficients of the coherent state at x in the orthonormal basis.
    pub fn coherent_coefficients(&self, x: ChartPoint) -> Result<DVector<Complex64>> {
        let b = self.require_basis()?;
        let vw = b.values_weighted(x)?;
        Ok(DVector::from_iterator(vw.len(), vw.iter().map(|v| v.conj())))
    }

    /// Prepares a state for repeated pairings.
    pub fn prepare(&self, x: ChartPoint) -> Result<PreparedState> {
        match &self.basis {
            Some(_) => Ok(PreparedState::Basis { coeffs: self.coherent_coefficients(x)? }),
            None => {
                self.geom.validate_point(x)?;
                let group = self.geom.group().expect("hyperbolic context has a group");
                let z = x.w();
                let m2k = -2 * self.k as i32;
                let mut gx = Vec::with_capacity(group.elements.len());
                let mut jinv = Vec::with_capacity(group.elements.len());
                for g in &group.elements {
                    gx.push(g.apply_unchecked(z));
                    jinv.push(g.automorphy_factor(z).powi(m2k));
                }
                let max_len = group.word_lengths.iter().copied().max().unwrap_or(0);
                let shell_start = group
                    .word_lengths
                    .iter()
                    .position(|&l| l == max_len)
                    .unwrap_or(0);
                Ok(PreparedState::Hyperbolic {
                    gx,
                    jinv,
                    shell_start,
                    sqrt_w: self.geom.sqrt_hermitian_weight(self.k, x)?,
                })
            }
        }
    }

    /// sqrt(W(x) W(y)) K(x, y) together with a truncation report in
    /// hyperbolic mode. The prepared state must come from `x`.
    pub fn kernel_weighted(&self, prep: &PreparedState, y: ChartPoint) -> Result<(Complex64, Option<TruncationReport>)> {
        match prep {
            PreparedState::Basis { coeffs } => {
                let cy = self.coherent_coefficients(y)?;
                // K_w(x, y) = sum_j c_j(x) conj(c_j(y)).
                Ok((cy.dotc(coeffs), None))
            }
            PreparedState::Hyperbolic { gx, jinv, shell_start, sqrt_w } => {
                self.geom.validate_point(y)?;
                let prefactor = (2.0 * self.k as f64 - 1.0) / 4.0;
                let two_i = Complex64::new(0.0, 2.0);
                let ybar = y.w().conj();
                let p2k = 2 * self.k as i32;
                let mut sum = Complex64::new(0.0, 0.0);
                let mut tail: f64 = 0.0;
                for (idx, (gxi, ji)) in gx.iter().zip(jinv).enumerate() {
                    let term = (two_i / (gxi - ybar)).powi(p2k) * ji;
                    sum += term;
                    if idx >= *shell_start {
                        tail = tail.max(term.norm());
                    }
                }
                // K(x, y) = conj(K(y, x)); the series above runs over gamma x.
                let value = (prefactor * sum).conj();
                let weighted = value * sqrt_w * self.geom.sqrt_hermitian_weight(self.k, y)?;
                let group = self.geom.group().unwrap();
                let tail_scaled = prefactor * tail;
                let report = TruncationReport {
                    word_length: group.word_lengths.iter().copied().max().unwrap_or(0),
                    elements: gx.len(),
                    tail_estimate: tail_scaled,
                    warning: tail_scaled > 1e-3 * value.norm().max(1.0),
                };
                Ok((weighted, Some(report)))
            }
        }
    }

    /// Full kernel evaluation K(x, y).
    pub fn kernel_eval(&self, x: ChartPoint, y: ChartPoint) -> Result<KernelValue> {
        let prep = self.prepare(x)?;
        let (weighted, truncation) = self.kernel_weighted(&prep, y)?;
        let wx = self.geom.sqrt_hermitian_weight(self.k, x)?;
        let wy = self.geom.sqrt_hermitian_weight(self.k, y)?;
        let value = match &self.basis {
            Some(b) => {
                let vx = b.values(x)?;
                let vy = b.values(y)?;
                let terms: Vec<Complex64> =
                    vx.iter().zip(&vy).map(|(a, b)| a.conj() * b).collect();
                pairwise_sum_complex(&terms)
            }
            None => weighted / (wx * wy),
        };
        Ok(KernelValue { x, y, value, weighted, truncation })
    }

    /// Batch evaluation over point pairs.
    pub fn kernel_eval_batch(&self, pairs: &[(ChartPoint, ChartPoint)]) -> Result<Vec<KernelValue>> {
        pairs.iter().map(|(x, y)| self.kernel_eval(*x, *y)).collect()
    }

    /// Coherent density eps^(k)(x) = W(x) K(x, x) >= 0.
    pub fn coherent_density(&self, x: ChartPoint) -> Result<f64> {
        match &self.basis {
            Some(b) => {
                let vw = b.values_weighted(x)?;
                Ok(vw.iter().map(|v| v.norm_sqr()).sum())
            }
            None => {
                let prep = self.prepare(x)?;
                let (kw, _) = self.kernel_weighted(&prep, x)?;
                debug_assert!(kw.im.abs() <= 1e-8 * kw.re.abs().max(1.0));
                Ok(kw.re.max(0.0))
            }
        }
    }

    /// eps^(k) evaluated at every quadrature node.
    pub fn coherent_density_profile(&self, quad: &QuadratureRule) -> Result<Vec<f64>> {
        quad.nodes.iter().map(|x| self.coherent_density(*x)).collect()
    }

    /// int eps^(k) d eps_omega, the trace of the identity on H_k.
    pub fn integrate_density(&self, quad: &QuadratureRule) -> Result<f64> {
        let prof = self.coherent_density_profile(quad)?;
        let terms: Vec<f64> = prof.iter().zip(&quad.weights).map(|(e, w)| e * w).collect();
        Ok(pairwise_sum(&terms))
    }

    /// The coherent state localized at x.
    pub fn coherent_state(&self, x: ChartPoint) -> Result<CoherentState> {
        match &self.basis {
            Some(_) => {
                let coeffs = self.coherent_coefficients(x)?;
                let norm_sq = coeffs.norm_squared();
                Ok(CoherentState { base_point: x, k: self.k, data: CoherentData::Coefficients(coeffs), norm_sq })
            }
            None => Ok(CoherentState {
                base_point: x,
                k: self.k,
                data: CoherentData::KernelBacked,
                norm_sq: self.coherent_density(x)?,
            }),
        }
    }

    /// psi(x, y) eps(y): the transition amplitude times the coherent
    /// density of the second point (the zero-safe combination integrated by
    /// the normalization and concentration checks).
    pub fn psi_times_eps(&self, prep: &PreparedState, eps_x: f64, y: ChartPoint) -> Result<f64> {
        if eps_x < DENSITY_FLOOR {
            return Err(Error::Domain("coherent density vanishes at the base point".into()));
        }
        let (kw, _) = self.kernel_weighted(prep, y)?;
        Ok(kw.norm_sqr() / eps_x)
    }

    /// 2-point function psi(x, y) in [0, 1]. Returns 0 when either density
    /// vanishes. Roundoff excess over 1 (within 1e-12, widened by the
    /// series tail in hyperbolic mode) is clipped; anything past the
    /// consistency threshold 1e-9 is a hard error, never clipped.
    pub fn two_point(&self, x: ChartPoint, y: ChartPoint) -> Result<f64> {
        let eps_x = self.coherent_density(x)?;
        let eps_y = self.coherent_density(y)?;
        if eps_x < DENSITY_FLOOR || eps_y < DENSITY_FLOOR {
            return Ok(0.0);
        }
        let prep = self.prepare(x)?;
        let (kw, trunc) = self.kernel_weighted(&prep, y)?;
        let psi = kw.norm_sqr() / (eps_x * eps_y);
        let clip = match &trunc {
            Some(t) => 1e-12 + 20.0 * t.tail_estimate / eps_x.min(eps_y),
            None => 1e-12,
        };
        let threshold = clip.max(1e-9);
        if psi > 1.0 + threshold {
            return Err(Error::Inconsistent(format!(
                "two-point function {psi} exceeds 1 beyond tolerance {threshold}"
            )));
        }
        if psi > 1.0 + clip {
            return Err(Error::Inconsistent(format!(
                "two-point function {psi} exceeds the roundoff clip window {clip}"
            )));
        }
        Ok(psi.min(1.0))
    }

    /// int psi(x, y) d mu(y) by quadrature; approximately 1.
    pub fn two_point_normalization(&self, x: ChartPoint, quad: &QuadratureRule) -> Result<f64> {
        let eps_x = self.coherent_density(x)?;
        if eps_x < DENSITY_FLOOR {
            return Err(Error::Domain("coherent density vanishes at x".into()));
        }
        let prep = self.prepare(x)?;
        let mut terms = Vec::with_capacity(quad.len());
        for (y, w) in quad.nodes.iter().zip(&quad.weights) {
            terms.push(w * self.psi_times_eps(&prep, eps_x, *y)?);
        }
        Ok(pairwise_sum(&terms))
    }

    /// Rawnsley coherent vector e_q for the unit fiber element at x with the
    /// given phase: coefficients e^{i k phase} sqrt(W(x)) conj(theta_j(x)).
    /// Covariance: scaling q by c multiplies the vector by conj(c)^{-k}.
    pub fn rawnsley_state(&self, x: ChartPoint, fiber_phase: f64) -> Result<DVector<Complex64>> {
        let coeffs = self.coherent_coefficients(x)?;
        let rot = Complex64::from_polar(1.0, self.k as f64 * fiber_phase);
        Ok(coeffs * rot)
    }

    /// Max over quadrature nodes of
    /// | psi(x,y) eps(y) rho(y) - |S_x(y)|^2 rho(y) |, the two sides of the
    /// peak-section identity computed along independent paths.
    pub fn peak_identity_residual(&self, x: ChartPoint, quad: &QuadratureRule) -> Result<f64> {
        let b = self.require_basis()?;
        let eps_x = self.coherent_density(x)?;
        if eps_x < DENSITY_FLOOR {
            return Err(Error::Domain("peak identity requires eps(x) > 0".into()));
        }
        let prep = self.prepare(x)?;
        let state = self.coherent_state(x)?;
        let unit = state.normalized_coefficients().expect("basis mode");
        let mut worst: f64 = 0.0;
        for y in &quad.nodes {
            let lhs = self.psi_times_eps(&prep, eps_x, *y)?;
            // |S_x(y)|^2 = |sum_j a_j theta_j(y)|^2 W(y), via the section
            // evaluator route.
            let vw = b.values_weighted(*y)?;
            let mut s = Complex64::new(0.0, 0.0);
            for (j, v) in vw.iter().enumerate() {
                s += unit[j] * v;
            }
            let rhs = s.norm_sqr();
            let rho = self.geom.liouville_density(*y)?;
            worst = worst.max(((lhs - rhs) * rho).abs());
        }
        Ok(worst)
    }

    /// RKHS self-reproducing residual
    /// | int K(x,z) conj(K(y,z)) W(z) d eps_omega(z) - K(x,y) |
    /// in the weighted normalization, divided by sqrt(eps(x) eps(y)).
    /// This is the basis-free correctness check available in both modes.
    pub fn idempotence_residual(
        &self,
        x: ChartPoint,
        y: ChartPoint,
        quad: &QuadratureRule,
    ) -> Result<f64> {
        let px = self.prepare(x)?;
        let py = self.prepare(y)?;
        let mut terms = Vec::with_capacity(quad.len());
        for (z, w) in quad.nodes.iter().zip(&quad.weights) {
            let (kxz, _) = self.kernel_weighted(&px, *z)?;
            let (kyz, _) = self.kernel_weighted(&py, *z)?;
            terms.push(Complex64::new(*w, 0.0) * kxz * kyz.conj());
        }
        let integral = pairwise_sum_complex(&terms);
        let (kxy, _) = self.kernel_weighted(&px, y)?;
        let eps_x = self.coherent_density(x)?;
        let eps_y = self.coherent_density(y)?;
        Ok((integral - kxy).norm() / (eps_x * eps_y).sqrt().max(DENSITY_FLOOR))
    }

    /// Greedy rank-revealing selection of d_k points whose coherent states
    /// form a basis. Returns the selected points and the condition number of
    /// the coefficient matrix. Deterministic: ties break toward the earlier
    /// candidate.
    pub fn select_coherent_basis(
        &self,
        candidates: &[ChartPoint],
    ) -> Result<(Vec<ChartPoint>, f64)> {
        self.require_basis()?;
        let d = self.dim();
        if candidates.len() < d {
            return Err(Error::Parameter(format!(
                "need at least {d} candidates, got {}",
                candidates.len()
            )));
        }
        let cols: Vec<DVector<Complex64>> = candidates
            .iter()
            .map(|x| self.coherent_coefficients(*x))
            .collect::<Result<_>>()?;
        let mut residual = cols.clone();
        let mut chosen: Vec<usize> = Vec::with_capacity(d);
        for _ in 0..d {
            // Max-residual pivot. Regular quantizations make whole tie
            // classes (eps is constant), so near-ties break on chart
            // coordinates; that keeps the selected set independent of the
            // candidate-list order.
            let mut best = usize::MAX;
            let mut best_norm = 0.0f64;
            for (i, r) in residual.iter().enumerate() {
                if chosen.contains(&i) {
                    continue;
                }
                let n = r.norm_squared();
                if n > best_norm * (1.0 + 1e-10) {
                    best_norm = n;
                    best = i;
                } else if n > best_norm * (1.0 - 1e-10) && best != usize::MAX {
                    let (a, b) = (candidates[i], candidates[best]);
                    if (a.u, a.v) < (b.u, b.v) {
                        best = i;
                        best_norm = best_norm.max(n);
                    }
                }
            }
            if best == usize::MAX || best_norm.sqrt() <= 1e-8 {
                return Err(Error::RankDeficient(format!(
                    "candidates span only {} of {d} dimensions",
                    chosen.len()
                )));
            }
            let q = &residual[best] / Complex64::new(best_norm.sqrt(), 0.0);
            for (i, r) in residual.iter_mut().enumerate() {
                if i != best {
                    let proj = q.dotc(r);
                    *r -= &q * proj;
                }
            }
            chosen.push(best);
        }
        let mut mat = DMatrix::<Complex64>::zeros(d, d);
        for (col, &i) in chosen.iter().enumerate() {
            mat.set_column(col, &cols[i]);
        }
        let svd = mat.svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        if smin <= 1e-8 {
            return Err(Error::RankDeficient(format!("smallest singular value {smin:.3e}")));
        }
        Ok((chosen.iter().map(|&i| candidates[i]).collect(), smax / smin))
    }

    /// Draws `trials` random states with |s|^2 = eps(x) and verifies the
    /// maximal-peaking bound |s(x)|^2 <= eps(x)^2 (attained by the coherent
    /// state). Returns true iff every trial passes.
    pub fn maximal_peaking_check<R: Rng>(
        &self,
        x: ChartPoint,
        trials: usize,
        rng: &mut R,
    ) -> Result<bool> {
        self.require_basis()?;
        let cx = self.coherent_coefficients(x)?;
        let eps_x = cx.norm_squared();
        if eps_x < DENSITY_FLOOR {
            return Err(Error::Domain("maximal peaking requires eps(x) > 0".into()));
        }
        let bound = eps_x * eps_x + 1e-9;
        let d = self.dim();
        for _ in 0..trials {
            let mut a = DVector::<Complex64>::zeros(d);
            for j in 0..d {
                a[j] = Complex64::new(gauss(rng), gauss(rng));
            }
            let scale = (eps_x / a.norm_squared()).sqrt();
            a *= Complex64::new(scale, 0.0);
            let value_sq = cx.dotc(&a).norm_sqr();
            if value_sq > bound {
                return Ok(false);
            }
        }
        // Attainment by the coherent state itself.
        let attained = cx.dotc(&cx).norm_sqr();
        Ok((attained - eps_x * eps_x).abs() <= 1e-9 * (1.0 + eps_x * eps_x))
    }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids a rand_distr dependency for one sampler.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
