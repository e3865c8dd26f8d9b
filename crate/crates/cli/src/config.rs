//! Run configuration: JSON file merged with command-line overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use cohq::fuchsian::{enumerate_group, genus2_generators, EnumerationOptions};
use cohq::geometry::GeometrySpec;
use cohq::hilbert::TruncationParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// "plane" | "sphere" | "torus" | "genus2".
    pub geometry: String,
    /// Torus modulus [re, im].
    pub lambda: [f64; 2],
    /// Word-length bound for the genus-2 enumeration.
    pub word_length: u32,
    pub element_cap: usize,
    /// Translation-distance prune for the enumeration (genus 2).
    pub prune_distance: Option<f64>,
    /// Level for single-k commands; defaults per geometry when absent.
    pub k: Option<u32>,
    /// Sweep range (k doubling from k_min up to k_max).
    pub k_min: u32,
    pub k_max: u32,
    pub resolution: u32,
    pub tail_tol: f64,
    /// Per-test tolerance overrides; keys as in the verify report.
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: "sphere".into(),
            lambda: [0.0, 1.0],
            word_length: 8,
            element_cap: 400_000,
            prune_distance: Some(8.5),
            k: None,
            k_min: 8,
            k_max: 64,
            resolution: 200,
            tail_tol: 1e-12,
            tolerances: BTreeMap::new(),
            seed: 7,
            out: PathBuf::from("out"),
        }
    }
}

/// Command-line overrides; every flag beats the config file.
#[derive(Debug, Clone, Args)]
pub struct Overrides {
    /// Geometry: plane | sphere | torus | genus2
    #[arg(long, global = true)]
    pub geometry: Option<String>,

    /// Torus modulus, real part
    #[arg(long, global = true)]
    pub lambda_re: Option<f64>,

    /// Torus modulus, imaginary part (> 0)
    #[arg(long, global = true)]
    pub lambda_im: Option<f64>,

    /// Level k
    #[arg(long, global = true)]
    pub k: Option<u32>,

    /// Sweep start level
    #[arg(long, global = true)]
    pub k_min: Option<u32>,

    /// Sweep end level
    #[arg(long, global = true)]
    pub k_max: Option<u32>,

    /// Quadrature resolution
    #[arg(long, global = true)]
    pub resolution: Option<u32>,

    /// Theta-series tail tolerance
    #[arg(long, global = true)]
    pub tail_tol: Option<f64>,

    /// Enumeration word length (genus 2)
    #[arg(long, global = true)]
    pub word_length: Option<u32>,

    /// Per-test tolerance override KEY=VALUE (repeatable)
    #[arg(long = "tolerance", global = true, value_name = "KEY=VAL")]
    pub tolerances: Vec<String>,

    /// Random seed (fixes every sampled point)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(g) = &self.geometry {
            cfg.geometry = g.clone();
        }
        if let Some(re) = self.lambda_re {
            cfg.lambda[0] = re;
        }
        if let Some(im) = self.lambda_im {
            cfg.lambda[1] = im;
        }
        if let Some(k) = self.k {
            cfg.k = Some(k);
        }
        if let Some(k) = self.k_min {
            cfg.k_min = k;
        }
        if let Some(k) = self.k_max {
            cfg.k_max = k;
        }
        if let Some(r) = self.resolution {
            cfg.resolution = r;
        }
        if let Some(t) = self.tail_tol {
            cfg.tail_tol = t;
        }
        if let Some(w) = self.word_length {
            cfg.word_length = w;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        for kv in &self.tolerances {
            let (key, val) = kv
                .split_once('=')
                .with_context(|| format!("tolerance override '{kv}' is not KEY=VAL"))?;
            let val: f64 = val.parse().with_context(|| format!("bad tolerance value in '{kv}'"))?;
            cfg.tolerances.insert(key.to_string(), val);
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>, overrides: &Overrides) -> Result<Self> {
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        let cfg = overrides.apply(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            bail!("resolution must be >= 2, got {}", self.resolution);
        }
        if !(self.tail_tol > 0.0) {
            bail!("tail_tol must be positive");
        }
        for (k, v) in &self.tolerances {
            if !(*v > 0.0) {
                bail!("tolerance '{k}' must be positive, got {v}");
            }
        }
        if !(self.lambda[1] > 0.0) {
            bail!("lambda must have positive imaginary part");
        }
        let k = self.level();
        if k < 1 {
            bail!("k must be >= 1");
        }
        if self.geometry == "genus2" && k < 2 {
            bail!("genus2 requires k >= 2");
        }
        match self.geometry.as_str() {
            "plane" | "sphere" | "torus" | "genus2" => Ok(()),
            other => bail!("unknown geometry '{other}' (plane | sphere | torus | genus2)"),
        }
    }

    /// Effective single-k level.
    pub fn level(&self) -> u32 {
        self.k.unwrap_or(match self.geometry.as_str() {
            "genus2" => 3,
            "torus" => 3,
            _ => 4,
        })
    }

    pub fn build_geometry(&self) -> Result<GeometrySpec> {
        match self.geometry.as_str() {
            "plane" => Ok(GeometrySpec::plane()),
            "sphere" => Ok(GeometrySpec::sphere()),
            "torus" => {
                GeometrySpec::torus(Complex64::new(self.lambda[0], self.lambda[1]))
                    .map_err(Into::into)
            }
            "genus2" => {
                let opts = EnumerationOptions {
                    max_word_length: self.word_length,
                    element_cap: self.element_cap,
                    prune_distance: self.prune_distance,
                };
                let group = enumerate_group(&genus2_generators(), &opts)?;
                GeometrySpec::hyperbolic(group).map_err(Into::into)
            }
            other => bail!("unknown geometry '{other}'"),
        }
    }

    pub fn truncation(&self) -> TruncationParams {
        TruncationParams { theta_tail_tol: self.tail_tol, ..Default::default() }
    }

    /// Tolerance for a named test, with per-geometry defaults.
    pub fn tolerance(&self, name: &str) -> f64 {
        if let Some(v) = self.tolerances.get(name) {
            return *v;
        }
        let g = self.geometry.as_str();
        match (name, g) {
            ("gram_identity", "torus") => 1e-6,
            ("gram_identity", _) => 1e-8,
            ("reproducing", "torus") => 1e-6,
            ("reproducing", _) => 1e-7,
            ("eps_closed_form", _) => 1e-10,
            ("trace_dimension", "genus2") => 1e-2,
            ("trace_dimension", "torus") => 1e-6,
            ("trace_dimension", _) => 1e-7,
            ("psi_range", _) => 1e-9,
            ("psi_normalization", "genus2") => 1e-2,
            ("psi_normalization", "torus") => 1e-5,
            ("psi_normalization", _) => 1e-7,
            ("peak_identity", "torus") => 1e-7,
            ("peak_identity", _) => 1e-9,
            ("rawnsley_eta", _) => 1e-9,
            ("trace_identity", _) => 1e-7,
            ("toeplitz_identity", _) => 1e-8,
            ("tuynman", "torus") => 1e-4,
            ("tuynman", _) => 1e-5,
            ("idempotence", "genus2") => 1e-2,
            ("idempotence", _) => 1e-7,
            _ => 1e-6,
        }
    }
}
