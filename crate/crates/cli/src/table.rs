//! Closed-form quantity tables behind `cohq table`.

use std::path::PathBuf;

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cohq::geometry::build_quadrature;
use cohq::kernel::KernelContext;
use cohq::observables::SphereHeight;
use cohq::toeplitz::toeplitz_matrix;

use crate::config::RunConfig;

pub const TABLE_TARGETS: [&str; 3] = ["eps", "dk", "toeplitz-spectrum"];

pub struct TableOutput {
    pub text_path: PathBuf,
    pub csv_path: PathBuf,
}

fn levels(cfg: &RunConfig) -> Vec<u32> {
    let lo = if cfg.geometry == "genus2" { cfg.k_min.max(2) } else { cfg.k_min.max(1) };
    let mut ks = Vec::new();
    let mut k = lo;
    while k <= cfg.k_max {
        ks.push(k);
        k *= 2;
    }
    ks
}

pub fn run_table(cfg: &RunConfig, target: &str) -> Result<TableOutput> {
    let geom = cfg.build_geometry()?;
    let trunc = cfg.truncation();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0 = geom.random_point(&mut rng);

    let (header, rows): (Vec<String>, Vec<Vec<String>>) = match target {
        "eps" => {
            let mut rows = Vec::new();
            for k in levels(cfg) {
                let ctx = KernelContext::new(&geom, k, &trunc)?;
                let eps = ctx.coherent_density(x0)?;
                let closed = match geom.name.as_str() {
                    "sphere" => format!("{}", k + 1),
                    "plane" => format!("{k}"),
                    _ => "-".to_string(),
                };
                let dk = geom
                    .hilbert_dim(k)
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "inf".into());
                rows.push(vec![k.to_string(), format!("{eps:.10}"), closed, dk]);
            }
            (
                vec!["k".into(), "eps_at_sample".into(), "closed_form".into(), "d_k".into()],
                rows,
            )
        }
        "dk" => {
            let mut rows = Vec::new();
            for k in levels(cfg) {
                let dk = geom
                    .hilbert_dim(k)
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "inf".into());
                rows.push(vec![k.to_string(), dk]);
            }
            (vec!["k".into(), "d_k".into()], rows)
        }
        "toeplitz-spectrum" => {
            if !geom.is_basis_mode() {
                bail!("toeplitz-spectrum requires a basis-mode geometry");
            }
            let mut rows = Vec::new();
            for k in levels(cfg) {
                let ctx = KernelContext::new(&geom, k, &trunc)?;
                let res = cfg.resolution.max(k + 32);
                let quad = build_quadrature(&geom, res, k)?;
                let q = toeplitz_matrix(&ctx, &quad, &SphereHeight, "height")?;
                let ev: Vec<String> =
                    q.hermitian_eigenvalues().iter().map(|e| format!("{e:.8}")).collect();
                rows.push(vec![k.to_string(), ev.join(";")]);
            }
            (vec!["k".into(), "spectrum".into()], rows)
        }
        other => bail!("unknown table target '{other}'; valid targets: {}", TABLE_TARGETS.join(", ")),
    };

    std::fs::create_dir_all(&cfg.out)?;
    let stem = format!("table_{}_{}", geom.name, target.replace('-', "_"));
    let text_path = cfg.out.join(format!("{stem}.txt"));
    let csv_path = cfg.out.join(format!("{stem}.csv"));

    // Aligned text twin.
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut text = String::new();
    let fmt_row = |cells: &[String], widths: &[usize]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:>width$}", c, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
    };
    text.push_str(&fmt_row(&header, &widths));
    text.push('\n');
    for row in &rows {
        text.push_str(&fmt_row(row, &widths));
        text.push('\n');
    }
    std::fs::write(&text_path, &text)?;

    let mut csv = header.join(",");
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    std::fs::write(&csv_path, csv)?;

    Ok(TableOutput { text_path, csv_path })
}
