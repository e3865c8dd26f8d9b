//! Symplectic coherent states from geometric quantization on four model
//! geometries -- the complex plane, the 2-sphere, 2-tori, and a genus-2
//! hyperbolic surface -- together with the machinery needed to verify
//! their defining identities numerically: reproducing kernels and
//! coherent densities, overcompleteness (Gram identity), 2-point
//! transition amplitudes, Berezin-Toeplitz and Kostant-Souriau
//! quantization with the Tuynman correction, and semiclassical k-sweeps.
//!
//! Layout:
//! - [`geometry`]: charts, Liouville measure, Hermitian weights, metric,
//!   geodesics, quadrature rules;
//! - [`fuchsian`]: Mobius arithmetic and the genus-2 octagon group;
//! - [`hilbert`]: section bases, theta functions, Gram matrices;
//! - [`kernel`]: reproducing kernels and coherent states (basis mode and
//!   the kernel-direct hyperbolic backend);
//! - [`toeplitz`]: operator quantization and the trace/Tuynman identities;
//! - [`semiclassics`]: concentration, delta tests, rate fits;
//! - [`mod@calibrate`]: the numerically pinned convention ledger.

// Validation guards are written `!(x > 0.0)` so NaN inputs fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod error;
pub mod fuchsian;
pub mod geometry;
pub mod hilbert;
pub mod kernel;
pub mod numeric;
pub mod observables;
pub mod semiclassics;
pub mod toeplitz;

pub use calibrate::{calibrate, Conventions, CONNECTION_SIGN, LAPLACIAN_SIGN};
pub use error::{Error, Result};
pub use fuchsian::{
    enumerate_group, genus2_generators, genus2_standard_quadruple, EnumerationOptions,
    GroupEnumeration, GroupFixture, MobiusTransform,
};
pub use geometry::{build_quadrature, ChartPoint, GeometryKind, GeometrySpec, QuadratureRule};
pub use hilbert::{
    basis_dump, basis_sections, gram, inner_product, orthonormalize, theta_eval, BasisDump,
    GramMatrix, SectionBasis, TruncationParams,
};
pub use kernel::{CoherentData, CoherentState, KernelContext, KernelValue, TruncationReport};
pub use semiclassics::{
    admissible_radius, berezin_transform_error, concentration_integral, delta_test, rate_fit,
    SweepResult,
};
pub use toeplitz::{
    covariant_symbol, kostant_souriau_matrix, toeplitz_matrix, trace_identity_residual,
    tuynman_residual, tuynman_residual_with_signs, OperatorDump, OperatorMatrix,
};
