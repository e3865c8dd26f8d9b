//! The identity suite behind `cohq verify`.

use std::time::Instant;

use anyhow::Result;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cohq::geometry::{build_quadrature, ChartPoint, GeometrySpec};
use cohq::hilbert::{basis_dump, gram, inner_product, BasisDump};
use cohq::kernel::KernelContext;
use cohq::observables::{Constant, CosLattice, RawField, ScalarField, SphereHeight};
use cohq::toeplitz::{toeplitz_matrix, trace_identity_residual, tuynman_residual, OperatorMatrix};

use crate::config::RunConfig;
use crate::report::{Report, TestRecord};

struct Recorder {
    records: Vec<TestRecord>,
}

impl Recorder {
    fn run(
        &mut self,
        cfg: &RunConfig,
        name: &str,
        reference: f64,
        body: impl FnOnce() -> Result<f64>,
    ) -> Result<()> {
        let tol = cfg.tolerance(name);
        let t0 = Instant::now();
        let value = body()?;
        let status = if (value - reference).abs() <= tol { "pass" } else { "fail" };
        self.records.push(TestRecord {
            name: name.to_string(),
            status: status.into(),
            value,
            reference,
            tolerance: tol,
            runtime_ms: t0.elapsed().as_millis() as u64,
        });
        Ok(())
    }
}

fn tuynman_observable(geom: &GeometrySpec) -> Box<dyn ScalarField> {
    match &geom.kind {
        cohq::GeometryKind::Sphere => Box::new(SphereHeight),
        cohq::GeometryKind::Torus { modulus } => {
            Box::new(CosLattice { slope: modulus.re / modulus.im })
        }
        _ => Box::new(RawField::new(|x: ChartPoint| 0.5 * (x.u * x.u + x.v * x.v))),
    }
}

pub struct VerifyOutput {
    pub report: Report,
    pub basis: Option<BasisDump>,
    pub operator: Option<cohq::OperatorDump>,
}

pub fn run_verify(cfg: &RunConfig) -> Result<VerifyOutput> {
    let geom = cfg.build_geometry()?;
    let k = cfg.level();
    let trunc = cfg.truncation();
    let ctx = KernelContext::new(&geom, k, &trunc)?;
    let quad = build_quadrature(&geom, cfg.resolution, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder { records: Vec::new() };
    let mut truncation = std::collections::BTreeMap::new();
    let mut basis_summary = None;
    let mut operator_summary = None;

    // Coherent density: pointwise closed form where one exists, the trace
    // of the identity otherwise.
    match geom.name.as_str() {
        "sphere" | "plane" => {
            let expect = if geom.name == "sphere" { k as f64 + 1.0 } else { k as f64 };
            let pts: Vec<ChartPoint> = (0..20).map(|_| geom.random_point(&mut rng)).collect();
            rec.run(cfg, "eps_closed_form", 0.0, || {
                let mut worst = 0.0f64;
                for x in &pts {
                    worst = worst.max((ctx.coherent_density(*x)? - expect).abs() / expect);
                }
                Ok(worst)
            })?;
        }
        _ => {
            let d = geom.hilbert_dim(k).unwrap() as f64;
            rec.run(cfg, "trace_dimension", 0.0, || {
                Ok((ctx.integrate_density(&quad)? - d).abs() / d)
            })?;
        }
    }

    // 2-point range, symmetry and normalization.
    let pair_pts: Vec<(ChartPoint, ChartPoint)> =
        (0..20).map(|_| (geom.random_point(&mut rng), geom.random_point(&mut rng))).collect();
    rec.run(cfg, "psi_range", 0.0, || {
        let mut worst = 0.0f64;
        for (x, y) in &pair_pts {
            let p = ctx.two_point(*x, *y)?;
            worst = worst.max((-p).max(0.0)).max((p - 1.0).max(0.0));
            worst = worst.max((p - ctx.two_point(*y, *x)?).abs());
        }
        Ok(worst)
    })?;
    let norm_pts: Vec<ChartPoint> = (0..5).map(|_| geom.random_point(&mut rng)).collect();
    rec.run(cfg, "psi_normalization", 0.0, || {
        let mut worst = 0.0f64;
        for x in &norm_pts {
            worst = worst.max((ctx.two_point_normalization(*x, &quad)? - 1.0).abs());
        }
        Ok(worst)
    })?;

    if ctx.is_basis_mode() {
        let basis = ctx.basis().unwrap();

        let g = gram(basis, &quad)?;
        basis_summary = Some(basis_dump(basis, &g));
        rec.run(cfg, "gram_identity", 0.0, || Ok(g.identity_gap()))?;

        let rep_pts: Vec<ChartPoint> = (0..3).map(|_| geom.random_point(&mut rng)).collect();
        rec.run(cfg, "reproducing", 0.0, || {
            let mut worst = 0.0f64;
            for x in &rep_pts {
                for j in 0..basis.dim().min(3) {
                    let ip = inner_product(
                        &geom,
                        k,
                        &quad,
                        &|y| ctx.kernel_eval(*x, y).expect("kernel").value,
                        &|y| basis.value(j, y).expect("section"),
                    )?;
                    let expect = basis.value(j, *x)?;
                    worst = worst.max((ip - expect).norm() / (1.0 + expect.norm()));
                }
            }
            Ok(worst)
        })?;

        let peak_pts: Vec<ChartPoint> = (0..3).map(|_| geom.random_point(&mut rng)).collect();
        rec.run(cfg, "peak_identity", 0.0, || {
            let mut worst = 0.0f64;
            for x in &peak_pts {
                worst = worst.max(ctx.peak_identity_residual(*x, &quad)?);
            }
            Ok(worst)
        })?;

        // Rawnsley covariance and eta = eps^(1) live at level one.
        let ctx1 = KernelContext::new(&geom, 1, &trunc)?;
        let quad1 = build_quadrature(&geom, cfg.resolution.min(150), 1)?;
        let eta_pts: Vec<ChartPoint> = (0..3).map(|_| geom.random_point(&mut rng)).collect();
        let phases: Vec<f64> =
            (0..3).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        rec.run(cfg, "rawnsley_eta", 0.0, || {
            let b1 = ctx1.basis().unwrap();
            let mut worst = 0.0f64;
            for (x, phi) in eta_pts.iter().zip(&phases) {
                let e0 = ctx1.rawnsley_state(*x, 0.0)?;
                let e1 = ctx1.rawnsley_state(*x, *phi)?;
                let rot = Complex64::from_polar(1.0, *phi);
                worst = worst.max((&e1 - &e0 * rot).norm());
                let eval = |y: ChartPoint| {
                    let vals = b1.values(y).expect("values");
                    let mut s = Complex64::new(0.0, 0.0);
                    for (j, v) in vals.iter().enumerate() {
                        s += e0[j] * v;
                    }
                    s
                };
                let eta = inner_product(&geom, 1, &quad1, &eval, &eval)?.re;
                let eps = ctx1.coherent_density(*x)?;
                worst = worst.max((eta - eps).abs() / (1.0 + eps));
            }
            Ok(worst)
        })?;

        let d = ctx.dim();
        let raw = DMatrix::<Complex64>::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        let a = OperatorMatrix {
            entries: herm,
            k,
            geometry: geom.name.clone(),
            observable: "random-hermitian".into(),
        };
        rec.run(cfg, "trace_identity", 0.0, || trace_identity_residual(&ctx, &a, &quad).map_err(Into::into))?;

        rec.run(cfg, "toeplitz_identity", 0.0, || {
            let q1 = toeplitz_matrix(&ctx, &quad, &Constant(1.0), "1")?;
            let mut gap = 0.0f64;
            for i in 0..q1.dim() {
                for j in 0..q1.dim() {
                    let t = if i == j { 1.0 } else { 0.0 };
                    gap = gap.max((q1.entries[(i, j)] - Complex64::new(t, 0.0)).norm());
                }
            }
            Ok(gap)
        })?;

        let observable = tuynman_observable(&geom);
        rec.run(cfg, "tuynman", 0.0, || {
            tuynman_residual(&ctx, &quad, observable.as_ref()).map_err(Into::into)
        })?;
        let q = toeplitz_matrix(&ctx, &quad, observable.as_ref(), "observable")?;
        let mut op_residuals = std::collections::BTreeMap::new();
        op_residuals.insert("hermiticity".to_string(), q.hermiticity_gap());
        op_residuals
            .insert("trace_identity".to_string(), trace_identity_residual(&ctx, &q, &quad)?);
        operator_summary = Some(q.dump(op_residuals));

        if geom.name == "torus" {
            let z = geom.complex_coordinate(ChartPoint::new(0.31, 0.17));
            let lambda = Complex64::new(cfg.lambda[0], cfg.lambda[1]);
            let (_, terms) = cohq::theta_eval(lambda, k, 0, z, cfg.tail_tol)?;
            truncation.insert("theta_terms".into(), terms as f64);
        }
    } else {
        // Kernel-direct checks for the hyperbolic backend.
        let idem_pts: Vec<(ChartPoint, ChartPoint)> =
            (0..3).map(|_| (geom.random_point(&mut rng), geom.random_point(&mut rng))).collect();
        rec.run(cfg, "idempotence", 0.0, || {
            let mut worst = 0.0f64;
            for (x, y) in &idem_pts {
                worst = worst.max(ctx.idempotence_residual(*x, *y, &quad)?);
            }
            Ok(worst)
        })?;
        let group = geom.group().unwrap();
        truncation.insert("group_elements".into(), group.element_count() as f64);
        truncation.insert("max_word_length".into(), group.max_word_length as f64);
        let kv = ctx.kernel_eval(ChartPoint::new(0.0, 1.0), ChartPoint::new(0.3, 0.8))?;
        if let Some(t) = kv.truncation {
            truncation.insert("poincare_tail_estimate".into(), t.tail_estimate);
        }
    }

    let conventions = cohq::calibrate(&geom, k.clamp(2, 6), cfg.resolution.min(150), &trunc)?;
    let mut report = Report {
        config: cfg.clone(),
        conventions,
        tests: rec.records,
        truncation,
        overall: String::new(),
    };
    report.finalize();
    Ok(VerifyOutput { report, basis: basis_summary, operator: operator_summary })
}
