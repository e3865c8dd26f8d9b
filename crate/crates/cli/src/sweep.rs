//! Semiclassical k-sweeps behind `cohq sweep`.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cohq::geometry::{build_quadrature, ChartPoint};
use cohq::kernel::KernelContext;
use cohq::observables::{by_name, OBSERVABLE_NAMES};
use cohq::semiclassics::{admissible_radius, concentration_integral, SweepResult};
use cohq::toeplitz::toeplitz_matrix;

use crate::config::RunConfig;
use crate::report::write_json;

pub const SWEEP_TESTS: [&str; 3] = ["delta", "concentration", "berezin"];

pub struct SweepOutput {
    pub result: SweepResult,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub plot_path: PathBuf,
}

/// Doubling levels from k_min through k_max.
fn levels(cfg: &RunConfig) -> Vec<u32> {
    let mut ks = Vec::new();
    let mut k = cfg.k_min.max(1);
    while k <= cfg.k_max {
        ks.push(k);
        k *= 2;
    }
    ks
}

pub fn run_sweep(cfg: &RunConfig, test: &str, observable: &str) -> Result<SweepOutput> {
    if !SWEEP_TESTS.contains(&test) {
        bail!("unknown sweep test '{test}'; valid tests: {}", SWEEP_TESTS.join(", "));
    }
    let geom = cfg.build_geometry()?;
    let f = by_name(observable, &geom)
        .ok_or_else(|| anyhow::anyhow!(
            "unknown observable '{observable}'; valid observables: {}",
            OBSERVABLE_NAMES.join(", ")
        ))?;
    let trunc = cfg.truncation();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0 = geom.random_point(&mut rng);

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for k in levels(cfg) {
        let t0 = Instant::now();
        let ctx = KernelContext::new(&geom, k, &trunc)?;
        // Keep polynomial exactness for operator quadrature as k grows.
        let res = cfg.resolution.max(k + 32);
        let quad = build_quadrature(&geom, res, k)?;
        let (value, reference) = match test {
            "delta" => {
                let mut terms = 0.0;
                let prep = ctx.prepare(x0)?;
                let eps = ctx.coherent_density(x0)?;
                for (y, w) in quad.nodes.iter().zip(&quad.weights) {
                    terms += w * f.eval(*y) * ctx.psi_times_eps(&prep, eps, *y)?;
                }
                (terms, f.eval(x0))
            }
            "concentration" => {
                let r = admissible_radius(k);
                (concentration_integral(&ctx, x0, r, &quad)?, 1.0)
            }
            "berezin" => {
                let op = toeplitz_matrix(&ctx, &quad, f.as_ref(), observable)?;
                let s = cohq::covariant_symbol(&ctx, &op, x0)?;
                (s.re, f.eval(x0))
            }
            _ => unreachable!(),
        };
        let abs_error = (value - reference).abs();
        rows.push(SweepRow {
            geometry: geom.name.clone(),
            test: test.to_string(),
            k,
            x: x0,
            value,
            reference,
            abs_error,
            resolution: res,
            runtime_ms: t0.elapsed().as_millis() as u64,
        });
        points.push((k, abs_error));
    }

    let result = SweepResult::from_points(&geom.name, test, &points)?;

    std::fs::create_dir_all(&cfg.out)?;
    let stem = format!("sweep_{}_{}", geom.name, test);
    let csv_path = cfg.out.join(format!("{stem}.csv"));
    let json_path = cfg.out.join(format!("{stem}.json"));
    let plot_path = cfg.out.join(format!("{stem}_plot.dat"));
    write_csv(&csv_path, &rows)?;
    write_json(&json_path, &result)?;
    let mut plot = String::new();
    for (k, e) in &points {
        plot.push_str(&format!("{k} {e:.12e}\n"));
    }
    std::fs::write(&plot_path, plot)?;
    Ok(SweepOutput { result, csv_path, json_path, plot_path })
}

struct SweepRow {
    geometry: String,
    test: String,
    k: u32,
    x: ChartPoint,
    value: f64,
    reference: f64,
    abs_error: f64,
    resolution: u32,
    runtime_ms: u64,
}

fn write_csv(path: &PathBuf, rows: &[SweepRow]) -> Result<()> {
    let mut text = String::from("geometry,test,k,x_u,x_v,value,reference,abs_error,resolution,runtime_ms\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}\n",
            r.geometry,
            r.test,
            r.k,
            r.x.u,
            r.x.v,
            r.value,
            r.reference,
            r.abs_error,
            r.resolution,
            r.runtime_ms
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}
