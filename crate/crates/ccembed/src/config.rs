//! Pipeline configuration (TOML).
//!
//! ```toml
//! lambda = 1.0
//! out = "out"
//!
//! [manifold]              # only read for inline metrics, and `dim` for builtin disks
//! kind = "disk"           # or "collar-torus"
//! dim = 2
//! r_max = 1.0             # collar-torus only
//! periods = [6.283185307179586]
//! ends = "inner"          # or "both"
//!
//! [metric]
//! builtin = "scaled-disk(4)"
//! # or inline: components = [["4", "0"], ["0", "4"]] and bdf = "1 - y1^2 - y2^2"
//! # or file = "metric.toml" (a file with its own [manifold] and [metric])
//!
//! [bdf]
//! epsilon = 0.5           # requested collar depth
//! margin = 0.05
//! cutoff = "smoothstep5"  # smooth-exp, piecewise-linear, zero
//! collar_nodes = 48
//! boundary_nodes = 48
//! phi_table = 512
//!
//! [embed]
//! ambient_dim = 10
//! max_iters = 100000
//! stop_residual = 1e-3
//! seed = 0
//!
//! [verify]
//! isometry = 1e-3
//! immersion = 1e-3
//! injectivity = 0.1
//! kappa = 2e-3
//! ```

use std::path::{Path, PathBuf};

use ccembed_core::builtins::Builtin;
use ccembed_core::manifold::{BoundaryEnds, ModelManifold};
use ccembed_core::MetricSpec;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid metric: {0}")]
    Metric(#[from] ccembed_core::Error),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub manifold: ManifoldSection,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub bdf: BdfSection,
    #[serde(default)]
    pub embed: EmbedSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldSection {
    pub kind: String,
    pub dim: usize,
    pub r_max: f64,
    pub periods: Vec<f64>,
    pub ends: String,
}

impl Default for ManifoldSection {
    fn default() -> Self {
        ManifoldSection { kind: "disk".into(), dim: 2, r_max: 1.0, periods: Vec::new(), ends: "inner".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSection {
    pub builtin: Option<String>,
    pub components: Option<Vec<Vec<String>>>,
    pub bdf: Option<String>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BdfSection {
    pub epsilon: f64,
    pub margin: f64,
    pub cutoff: String,
    pub collar_nodes: usize,
    pub boundary_nodes: usize,
    pub phi_table: usize,
}

impl Default for BdfSection {
    fn default() -> Self {
        BdfSection { epsilon: 0.5, margin: 0.05, cutoff: "smoothstep5".into(), collar_nodes: 48, boundary_nodes: 48, phi_table: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedSection {
    pub ambient_dim: Option<usize>,
    pub max_iters: usize,
    pub stop_residual: f64,
    pub seed: u64,
    pub memory: usize,
    pub perturbation: f64,
}

impl Default for EmbedSection {
    fn default() -> Self {
        let d = ccembed_core::embed::OptimizerConfig::default();
        EmbedSection {
            ambient_dim: None,
            max_iters: 100_000,
            stop_residual: d.stop_residual,
            seed: d.seed,
            memory: d.memory,
            perturbation: d.perturbation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Max relative compactified isometry residual.
    pub isometry: f64,
    /// Min singular value of the Jacobian of `u`.
    pub immersion: f64,
    /// Min extrinsic / intrinsic distance ratio.
    pub injectivity: f64,
    /// Max `|kappa_induced - kappa_input|`.
    pub kappa: f64,
    /// Min `|dx|` at the boundary.
    pub transversality: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { isometry: 1e-3, immersion: 1e-3, injectivity: 0.1, kappa: 2e-3, transversality: 1e-10 }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(src: &str) -> Result<PipelineConfig, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(src)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; a relative `[metric] file` is resolved against the config's directory.
    pub fn from_path(path: &Path) -> Result<PipelineConfig, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = PipelineConfig::from_toml_str(&src)?;
        if let (Some(file), Some(dir)) = (cfg.metric.file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(cfg)
    }

    /// Default settings around a named builtin metric.
    pub fn builtin(name: &str, lambda: f64) -> PipelineConfig {
        PipelineConfig {
            lambda,
            out: None,
            manifold: ManifoldSection::default(),
            metric: MetricSection { builtin: Some(name.into()), ..Default::default() },
            bdf: BdfSection::default(),
            embed: EmbedSection::default(),
            verify: VerifySection::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.lambda == 0.0 || !self.lambda.is_finite() {
            return bad("lambda must be finite and non-zero");
        }
        if self.bdf.collar_nodes < 8 || self.bdf.boundary_nodes < 8 {
            return bad("grid resolutions must be at least 8");
        }
        if !(self.bdf.epsilon > 0.0) {
            return bad("bdf.epsilon must be positive");
        }
        if !(self.bdf.margin > 0.0 && self.bdf.margin < 1.0) {
            return bad("bdf.margin must lie in (0, 1)");
        }
        let v = &self.verify;
        for (name, t) in [
            ("verify.isometry", v.isometry),
            ("verify.immersion", v.immersion),
            ("verify.injectivity", v.injectivity),
            ("verify.kappa", v.kappa),
            ("verify.transversality", v.transversality),
            ("embed.stop_residual", self.embed.stop_residual),
        ] {
            if !(t > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        let sources = [self.metric.builtin.is_some(), self.metric.components.is_some(), self.metric.file.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return bad("[metric] needs exactly one of builtin, components or file");
        }
        if self.metric.components.is_some() != self.metric.bdf.is_some() {
            return bad("inline metrics need both components and bdf");
        }
        ccembed_core::bdf::CutoffKind::from_name(&self.bdf.cutoff)?;
        Ok(())
    }

    /// Applies a `--tol key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Invalid(format!("expected key=value, got `{assignment}`")))?;
        let value: f64 = value.trim().parse().map_err(|_| ConfigError::Invalid(format!("`{value}` is not a number")))?;
        let slot = match key.trim() {
            "isometry" => &mut self.verify.isometry,
            "immersion" => &mut self.verify.immersion,
            "injectivity" => &mut self.verify.injectivity,
            "kappa" => &mut self.verify.kappa,
            "transversality" => &mut self.verify.transversality,
            "stop_residual" => &mut self.embed.stop_residual,
            "margin" => &mut self.bdf.margin,
            other => return Err(ConfigError::Invalid(format!("unknown tolerance `{other}`"))),
        };
        *slot = value;
        self.validate()
    }

    pub fn metric_spec(&self) -> Result<MetricSpec, ConfigError> {
        if let Some(name) = &self.metric.builtin {
            return Ok(Builtin::from_name(name)?.spec(self.manifold.dim)?);
        }
        if let Some(file) = &self.metric.file {
            let src = std::fs::read_to_string(file).map_err(|source| ConfigError::Io { path: file.clone(), source })?;
            #[derive(Deserialize)]
            struct MetricFile {
                #[serde(default)]
                manifold: ManifoldSection,
                metric: MetricSection,
            }
            let inner: MetricFile = toml::from_str(&src)?;
            if inner.metric.file.is_some() {
                return Err(ConfigError::Invalid("metric files cannot reference further files".into()));
            }
            let mut cfg = self.clone();
            cfg.manifold = inner.manifold;
            cfg.metric = inner.metric;
            cfg.validate()?;
            return cfg.metric_spec();
        }
        let components = self.metric.components.as_ref().expect("validated");
        let bdf = self.metric.bdf.as_ref().expect("validated");
        let manifold = self.manifold_model()?;
        let rows: Vec<Vec<&str>> = components.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
        let rows_ref: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
        Ok(MetricSpec::from_sources(manifold, &rows_ref, bdf)?)
    }

    fn manifold_model(&self) -> Result<ModelManifold, ConfigError> {
        let m = &self.manifold;
        match m.kind.as_str() {
            "disk" => Ok(ModelManifold::disk(m.dim)?),
            "collar-torus" => {
                let ends = match m.ends.as_str() {
                    "inner" => BoundaryEnds::Inner,
                    "both" => BoundaryEnds::Both,
                    _ => return Err(ConfigError::Invalid("manifold.ends must be inner or both".into())),
                };
                let periods = if m.periods.is_empty() { vec![std::f64::consts::TAU; m.dim - 1] } else { m.periods.clone() };
                Ok(ModelManifold::collar_torus(m.dim, m.r_max, &periods, ends)?)
            }
            other => Err(ConfigError::Invalid(format!("unknown manifold kind `{other}`"))),
        }
    }
}
