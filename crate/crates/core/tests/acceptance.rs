//! Acceptance suite: every criterion below runs at its stated tolerance and
//! prints one PASS/FAIL line (run with `cargo test --test acceptance --
//! --nocapture` to see them all).

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cohq::fuchsian::{enumerate_group, genus2_generators, EnumerationOptions};
use cohq::geometry::{build_quadrature, ChartPoint, GeometrySpec};
use cohq::hilbert::{gram, inner_product, torus_norm_constant, TruncationParams};
use cohq::kernel::KernelContext;
use cohq::observables::{ScalarField, SphereHeight, SphereReal};
use cohq::semiclassics::{concentration_integral, delta_test, SweepResult};
use cohq::toeplitz::{
    toeplitz_matrix, trace_identity_residual, tuynman_residual_with_signs, OperatorMatrix,
};
use cohq::{CONNECTION_SIGN, LAPLACIAN_SIGN};

fn finish(n: u32, name: &str, started: Instant, budget_s: f64, result: Result<String, String>) {
    let dt = started.elapsed().as_secs_f64();
    match result {
        Ok(msg) => {
            println!("criterion {n:2} PASS ({dt:6.2}s): {name}: {msg}");
            assert!(dt < budget_s, "criterion {n} runtime {dt:.2}s exceeds budget {budget_s}s");
        }
        Err(msg) => {
            println!("criterion {n:2} FAIL ({dt:6.2}s): {name}: {msg}");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

fn genus2_geometry(word_length: u32, prune: f64) -> GeometrySpec {
    let opts = EnumerationOptions {
        max_word_length: word_length,
        element_cap: 400_000,
        prune_distance: Some(prune),
    };
    let group = enumerate_group(&genus2_generators(), &opts).expect("genus-2 enumeration");
    GeometrySpec::hyperbolic(group).expect("genus-2 geometry")
}

#[test]
fn criterion_01_sphere_closed_forms() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = GeometrySpec::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst_eps = 0.0f64;
        let mut worst_kernel = 0.0f64;
        for k in 1..=32u32 {
            let ctx = KernelContext::new(&geom, k, &TruncationParams::default())
                .map_err(|e| e.to_string())?;
            for _ in 0..50 {
                let x = geom.random_point(&mut rng);
                let eps = ctx.coherent_density(x).map_err(|e| e.to_string())?;
                worst_eps = worst_eps.max((eps - (k as f64 + 1.0)).abs() / (k as f64 + 1.0));
            }
            for _ in 0..10 {
                let z = geom.random_point(&mut rng);
                let kv = ctx
                    .kernel_eval(ChartPoint::new(0.0, 0.0), z)
                    .map_err(|e| e.to_string())?;
                worst_kernel =
                    worst_kernel.max((kv.value - Complex64::new(k as f64 + 1.0, 0.0)).norm());
            }
        }
        if worst_eps >= 1e-10 {
            return Err(format!("eps relative error {worst_eps:.2e} >= 1e-10"));
        }
        if worst_kernel >= 1e-12 {
            return Err(format!("kernel-at-origin error {worst_kernel:.2e} >= 1e-12"));
        }
        Ok(format!("eps gap {worst_eps:.1e}, kernel gap {worst_kernel:.1e}"))
    })();
    finish(1, "sphere closed forms eps = k+1, K(0, .) = k+1", t0, 1.0, result);
}

#[test]
fn criterion_02_plane_two_point_closed_form() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = GeometrySpec::plane();
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let mut worst = 0.0f64;
        for k in 1..=16u32 {
            let ctx = KernelContext::new(&geom, k, &TruncationParams::default())
                .map_err(|e| e.to_string())?;
            for _ in 0..100 {
                let x = geom.random_point(&mut rng);
                let y = geom.random_point(&mut rng);
                let psi = ctx.two_point(x, y).map_err(|e| e.to_string())?;
                let zx = geom.complex_coordinate(x);
                let zy = geom.complex_coordinate(y);
                let expect = (-(k as f64) * (zx - zy).norm_sqr()).exp();
                worst = worst.max((psi - expect).abs());
            }
        }
        if worst >= 1e-10 {
            return Err(format!("two-point gap {worst:.2e} >= 1e-10"));
        }
        Ok(format!("max |psi - exp(-k|z-w|^2)| = {worst:.1e} over 1600 pairs"))
    })();
    finish(2, "plane 2-point function exp(-k|z-w|^2)", t0, 1.0, result);
}

#[test]
fn criterion_03a_gram_identity_sphere() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = GeometrySpec::sphere();
        let mut worst = 0.0f64;
        for k in 1..=16u32 {
            let basis = cohq::basis_sections(&geom, k, &TruncationParams::default())
                .map_err(|e| e.to_string())?;
            let quad = build_quadrature(&geom, 200, k).map_err(|e| e.to_string())?;
            worst = worst.max(gram(&basis, &quad).map_err(|e| e.to_string())?.identity_gap());
        }
        if worst >= 1e-8 {
            return Err(format!("sphere Gram gap {worst:.2e} >= 1e-8"));
        }
        Ok(format!("max |G - I| = {worst:.1e} for k <= 16 at resolution 200"))
    })();
    finish(3, "overcompleteness / Gram identity (sphere)", t0, 30.0, result);
}

#[test]
fn criterion_03b_gram_identity_torus() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = GeometrySpec::torus(Complex64::i()).map_err(|e| e.to_string())?;
        let trunc = TruncationParams { theta_tail_tol: 1e-12, ..Default::default() };
        let mut worst = 0.0f64;
        for k in 1..=8u32 {
            let basis = cohq::basis_sections(&geom, k, &trunc).map_err(|e| e.to_string())?;
            let quad = build_quadrature(&geom, 128, k).map_err(|e| e.to_string())?;
            worst = worst.max(gram(&basis, &quad).map_err(|e| e.to_string())?.identity_gap());
        }
        if worst >= 1e-6 {
            return Err(format!("torus Gram gap {worst:.2e} >= 1e-6"));
        }
        Ok(format!("max |G - I| = {worst:.1e} for k <= 8 at resolution 128"))
    })();
    finish(3, "overcompleteness / Gram identity (torus)", t0, 30.0, result);
}

#[test]
fn criterion_04_torus_norm_law() {
    let t0 = Instant::now();
    let result = (|| {
        let lambda = Complex64::i();
        let geom = GeometrySpec::torus(lambda).map_err(|e| e.to_string())?;
        let mut worst_ratio = 0.0f64;
        let mut worst_abs = 0.0f64;
        for k in 1..=8u32 {
            let basis = cohq::basis_sections(&geom, k, &TruncationParams::default())
                .map_err(|e| e.to_string())?;
            let quad = build_quadrature(&geom, 128, k).map_err(|e| e.to_string())?;
            // Raw norms: the basis carries N_{k,j}^{-1/2}, so the raw value is
            // the quadrature norm times the closed-form constant.
            let raw_norm = |j: usize| -> Result<f64, String> {
                let ip = inner_product(
                    &geom,
                    k,
                    &quad,
                    &|x| basis.value(j, x).unwrap(),
                    &|x| basis.value(j, x).unwrap(),
                )
                .map_err(|e| e.to_string())?;
                Ok(ip.re * torus_norm_constant(lambda, k, j as u32))
            };
            let n0 = raw_norm(0)?;
            for j in 0..k {
                let nj = raw_norm(j as usize)?;
                let expect_ratio =
                    (2.0 * std::f64::consts::PI * (j * j) as f64 * lambda.im / k as f64).exp();
                worst_ratio = worst_ratio.max((nj / n0 / expect_ratio - 1.0).abs());
                let expect_abs = torus_norm_constant(lambda, k, j);
                worst_abs = worst_abs.max((nj / expect_abs - 1.0).abs());
            }
        }
        if worst_ratio >= 1e-6 {
            return Err(format!("norm ratio gap {worst_ratio:.2e} >= 1e-6"));
        }
        if worst_abs >= 1e-6 {
            return Err(format!("absolute norm gap {worst_abs:.2e} >= 1e-6"));
        }
        Ok(format!("ratio gap {worst_ratio:.1e}, absolute gap {worst_abs:.1e} for k <= 8"))
    })();
    finish(4, "torus norm law N_{k,j}", t0, 30.0, result);
}

#[test]
fn criterion_05_transition_amplitude_normalization() {
    let t0 = Instant::now();
    let result = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        let mut report = Vec::new();

        let sphere = GeometrySpec::sphere();
        let ctx = KernelContext::new(&sphere, 4, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        let quad = build_quadrature(&sphere, 200, 4).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let x = sphere.random_point(&mut rng);
            let v = ctx.two_point_normalization(x, &quad).map_err(|e| e.to_string())?;
            worst = worst.max((v - 1.0).abs());
        }
        if worst >= 1e-7 {
            return Err(format!("sphere normalization gap {worst:.2e} >= 1e-7"));
        }
        report.push(format!("sphere {worst:.1e}"));

        let torus = GeometrySpec::torus(Complex64::i()).map_err(|e| e.to_string())?;
        let ctx = KernelContext::new(&torus, 3, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        let quad = build_quadrature(&torus, 128, 3).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let x = torus.random_point(&mut rng);
            let v = ctx.two_point_normalization(x, &quad).map_err(|e| e.to_string())?;
            worst = worst.max((v - 1.0).abs());
        }
        if worst >= 1e-5 {
            return Err(format!("torus normalization gap {worst:.2e} >= 1e-5"));
        }
        report.push(format!("torus {worst:.1e}"));

        let hyp = genus2_geometry(10, 9.0);
        let ctx =
            KernelContext::new(&hyp, 3, &TruncationParams::default()).map_err(|e| e.to_string())?;
        let quad = build_quadrature(&hyp, 64, 3).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let x = hyp.random_point(&mut rng);
            let v = ctx.two_point_normalization(x, &quad).map_err(|e| e.to_string())?;
            worst = worst.max((v - 1.0).abs());
        }
        if worst >= 1e-2 {
            return Err(format!("genus-2 normalization gap {worst:.2e} >= 1e-2"));
        }
        report.push(format!("genus2 {worst:.1e}"));
        Ok(report.join(", "))
    })();
    finish(5, "int psi(x, .) d mu = 1", t0, 120.0, result);
}

#[test]
fn criterion_06_genus2_trace_and_idempotence() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = genus2_geometry(12, 10.0);
        let quad = build_quadrature(&geom, 96, 4).map_err(|e| e.to_string())?;
        let mut traces = Vec::new();
        for k in [2u32, 3, 4] {
            let ctx = KernelContext::new(&geom, k, &TruncationParams::default())
                .map_err(|e| e.to_string())?;
            let trace = ctx.integrate_density(&quad).map_err(|e| e.to_string())?;
            let d = (2 * k - 1) as f64;
            let gap = (trace - d).abs() / d;
            if gap >= 1e-2 {
                return Err(format!("trace gap {gap:.2e} >= 1e-2 at k = {k} (trace {trace:.4})"));
            }
            traces.push(format!("k={k}: {gap:.1e}"));
        }
        let ctx = KernelContext::new(&geom, 4, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let x = geom.random_point(&mut rng);
            let y = geom.random_point(&mut rng);
            let r = ctx.idempotence_residual(x, y, &quad).map_err(|e| e.to_string())?;
            worst = worst.max(r);
        }
        if worst >= 1e-2 {
            return Err(format!("idempotence residual {worst:.2e} >= 1e-2"));
        }
        Ok(format!("trace gaps [{}], idempotence {worst:.1e}", traces.join(", ")))
    })();
    finish(6, "genus-2 trace = 2k-1 and kernel idempotence", t0, 600.0, result);
}

#[test]
fn criterion_07_toeplitz_spectra_and_trace_identity() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = GeometrySpec::sphere();
        let ctx = KernelContext::new(&geom, 2, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        let quad = build_quadrature(&geom, 200, 2).map_err(|e| e.to_string())?;
        let q = toeplitz_matrix(&ctx, &quad, &SphereHeight, "height").map_err(|e| e.to_string())?;
        let ev = q.hermitian_eigenvalues();
        for (got, expect) in ev.iter().zip([0.25, 0.5, 0.75]) {
            if (got - expect).abs() >= 1e-7 {
                return Err(format!("spectrum {ev:?} misses {expect} by {:.2e}", (got - expect).abs()));
            }
        }
        let one = toeplitz_matrix(&ctx, &quad, &cohq::observables::Constant(1.0), "1")
            .map_err(|e| e.to_string())?;
        let mut idgap = 0.0f64;
        for i in 0..one.dim() {
            for j in 0..one.dim() {
                let t = if i == j { 1.0 } else { 0.0 };
                idgap = idgap.max((one.entries[(i, j)] - Complex64::new(t, 0.0)).norm());
            }
        }
        if idgap >= 1e-8 {
            return Err(format!("Q(1) identity gap {idgap:.2e} >= 1e-8"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let d = ctx.dim();
        let raw = nalgebra::DMatrix::<Complex64>::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        let a = OperatorMatrix { entries: herm, k: 2, geometry: "sphere".into(), observable: "rand".into() };
        let resid = trace_identity_residual(&ctx, &a, &quad).map_err(|e| e.to_string())?;
        if resid >= 1e-7 {
            return Err(format!("trace identity residual {resid:.2e} >= 1e-7"));
        }
        Ok(format!(
            "spectrum = {{1/4, 1/2, 3/4}} to {:.1e}, Q(1) gap {idgap:.1e}, trace residual {resid:.1e}",
            ev.iter().zip([0.25, 0.5, 0.75]).map(|(g, e)| (g - e).abs()).fold(0.0f64, f64::max)
        ))
    })();
    finish(7, "Toeplitz spectra, Q(1) = I, trace identity", t0, 10.0, result);
}

#[test]
fn criterion_08_tuynman_residual_and_sign_discrimination() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = GeometrySpec::sphere();
        let mut worst = 0.0f64;
        for k in 2..=8u32 {
            let ctx = KernelContext::new(&geom, k, &TruncationParams::default())
                .map_err(|e| e.to_string())?;
            let quad = build_quadrature(&geom, 300, k).map_err(|e| e.to_string())?;
            let r = tuynman_residual_with_signs(
                &ctx,
                &quad,
                &SphereHeight,
                CONNECTION_SIGN,
                LAPLACIAN_SIGN,
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max(r);
        }
        if worst >= 1e-5 {
            return Err(format!("calibrated residual {worst:.2e} >= 1e-5"));
        }
        // Discrimination at k = 2.
        let ctx = KernelContext::new(&geom, 2, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        let quad = build_quadrature(&geom, 300, 2).map_err(|e| e.to_string())?;
        let good = tuynman_residual_with_signs(&ctx, &quad, &SphereHeight, CONNECTION_SIGN, LAPLACIAN_SIGN)
            .map_err(|e| e.to_string())?;
        let mut min_factor = f64::INFINITY;
        for (cs, ls) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let bad = tuynman_residual_with_signs(&ctx, &quad, &SphereHeight, cs, ls)
                .map_err(|e| e.to_string())?;
            min_factor = min_factor.min(bad / good.max(1e-300));
        }
        if min_factor <= 100.0 {
            return Err(format!("wrong-sign discrimination factor {min_factor:.1} <= 100"));
        }
        Ok(format!("max residual {worst:.1e} (k = 2..8), discrimination factor {min_factor:.1e}"))
    })();
    finish(8, "Tuynman formula with calibrated signs", t0, 60.0, result);
}

#[test]
fn criterion_09_semiclassical_rates() {
    let t0 = Instant::now();
    let result = (|| {
        let geom = GeometrySpec::sphere();
        let x = ChartPoint::new(0.3, 0.1);
        let observables: [(&str, &dyn ScalarField); 2] =
            [("real", &SphereReal), ("height", &SphereHeight)];
        let mut slopes = Vec::new();
        for (name, f) in observables {
            let mut points = Vec::new();
            for k in [8u32, 16, 32, 64, 128] {
                let ctx = KernelContext::new(&geom, k, &TruncationParams::default())
                    .map_err(|e| e.to_string())?;
                let res = (k + 32).max(96);
                let quad = build_quadrature(&geom, res, k).map_err(|e| e.to_string())?;
                points.push((k, delta_test(&ctx, f, x, &quad).map_err(|e| e.to_string())?));
            }
            let sweep =
                SweepResult::from_points("sphere", "delta", &points).map_err(|e| e.to_string())?;
            if !(-1.3..=-0.7).contains(&sweep.fitted_slope) {
                return Err(format!(
                    "slope {} for observable {name} outside [-1.3, -0.7]; points {points:?}",
                    sweep.fitted_slope
                ));
            }
            slopes.push(format!("{name}: {:.3}", sweep.fitted_slope));
        }

        // Plane concentration against the Gaussian closed form.
        let plane = GeometrySpec::plane();
        let k = 16u32;
        let ctx = KernelContext::new(&plane, k, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        let quad = build_quadrature(&plane, 48, k).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for r in [0.15, 0.3, 0.6, 1.0] {
            let got = concentration_integral(&ctx, ChartPoint::new(0.2, -0.4), r, &quad)
                .map_err(|e| e.to_string())?;
            let expect = 1.0 - (-(k as f64) * r * r / 2.0).exp();
            worst = worst.max((got - expect).abs());
        }
        if worst >= 1e-6 {
            return Err(format!("plane concentration gap {worst:.2e} >= 1e-6"));
        }
        Ok(format!("delta slopes [{}], plane concentration gap {worst:.1e}", slopes.join(", ")))
    })();
    finish(9, "semiclassical delta rate and plane concentration", t0, 300.0, result);
}

#[test]
fn criterion_10_property_suites() {
    let t0 = Instant::now();
    let result = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(110);

        // Maximal peaking: 1000 random states per base point.
        let sphere = GeometrySpec::sphere();
        let ctx3 = KernelContext::new(&sphere, 3, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let x = sphere.random_point(&mut rng);
            if !ctx3.maximal_peaking_check(x, 1000, &mut rng).map_err(|e| e.to_string())? {
                return Err(format!("maximal peaking violated at ({}, {})", x.u, x.v));
            }
        }
        let torus = GeometrySpec::torus(Complex64::i()).map_err(|e| e.to_string())?;
        let ctxt = KernelContext::new(&torus, 3, &TruncationParams::default())
            .map_err(|e| e.to_string())?;
        for _ in 0..2 {
            let x = torus.random_point(&mut rng);
            if !ctxt.maximal_peaking_check(x, 1000, &mut rng).map_err(|e| e.to_string())? {
                return Err(format!("maximal peaking violated on torus at ({}, {})", x.u, x.v));
            }
        }

        // Basic inequality |s(x)| <= |s| sqrt(eps(x)) for all basis sections.
        for ctx in [&ctx3, &ctxt] {
            let basis = ctx.basis().unwrap();
            for _ in 0..100 {
                let x = ctx.geom.random_point(&mut rng);
                let eps = ctx.coherent_density(x).map_err(|e| e.to_string())?;
                for v in basis.values_weighted(x).map_err(|e| e.to_string())? {
                    if v.norm_sqr() > eps + 1e-9 {
                        return Err(format!("basic inequality violated: {} > {eps}", v.norm_sqr()));
                    }
                }
            }
        }

        // Rawnsley covariance and eta = eps^(1) at k = 1.
        for geom in [GeometrySpec::sphere(), GeometrySpec::torus(Complex64::i()).unwrap()] {
            let ctx = KernelContext::new(&geom, 1, &TruncationParams::default())
                .map_err(|e| e.to_string())?;
            let quad = build_quadrature(&geom, 150, 1).map_err(|e| e.to_string())?;
            let basis = ctx.basis().unwrap();
            for _ in 0..5 {
                let x = geom.random_point(&mut rng);
                let e0 = ctx.rawnsley_state(x, 0.0).map_err(|e| e.to_string())?;
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                let e1 = ctx.rawnsley_state(x, phi).map_err(|e| e.to_string())?;
                let rot = Complex64::from_polar(1.0, phi); // k = 1
                if (&e1 - &e0 * rot).norm() > 1e-12 {
                    return Err("Rawnsley covariance violated".into());
                }
                let eval = |y: ChartPoint| {
                    let vals = basis.values(y).unwrap();
                    let mut s = Complex64::new(0.0, 0.0);
                    for (j, v) in vals.iter().enumerate() {
                        s += e0[j] * v;
                    }
                    s
                };
                let eta = inner_product(&geom, 1, &quad, &eval, &eval)
                    .map_err(|e| e.to_string())?
                    .re;
                let eps = ctx.coherent_density(x).map_err(|e| e.to_string())?;
                if (eta - eps).abs() > 1e-9 * (1.0 + eps) {
                    return Err(format!("eta = {eta} but eps^(1) = {eps}"));
                }
            }
        }

        // Coherent-basis selection reaches full rank.
        for (ctx, n_cand) in [(&ctx3, 60usize), (&ctxt, 40)] {
            let candidates: Vec<ChartPoint> =
                (0..n_cand).map(|_| ctx.geom.random_point(&mut rng)).collect();
            let (points, cond) =
                ctx.select_coherent_basis(&candidates).map_err(|e| e.to_string())?;
            if points.len() != ctx.dim() {
                return Err("selection did not return d_k points".into());
            }
            if !cond.is_finite() {
                return Err("selection condition number not finite".into());
            }
        }
        Ok("maximal peaking, basic inequality, Rawnsley covariance + eta = eps^(1), \
            coherent-basis rank: zero violations"
            .into())
    })();
    finish(10, "property suites", t0, 120.0, result);
}
