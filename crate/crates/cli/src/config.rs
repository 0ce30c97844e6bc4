//! Experiment configuration: a single JSON document, with command-line
//! overrides applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use diffusion_core::cascade::DEFAULT_WINDOW_MINUTES;
use diffusion_core::graph::GraphFormat;
use diffusion_core::infer::{DEFAULT_EPS, DEFAULT_MAX_OUTER};
use diffusion_core::{
    EndogenousModel, ExogenousProfile, InfluenceWeighting, ModelKind, OptimizerSpec, ReferralClass,
    ResponsibilityVariant,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSource {
    File {
        path: PathBuf,
        /// Guessed from the extension when absent (`.gml`, else edge list).
        #[serde(default)]
        format: Option<GraphFormat>,
    },
    HolmeKim {
        n: usize,
        m: usize,
        p: f64,
    },
    Configuration {
        #[serde(default)]
        degrees: Option<Vec<usize>>,
        /// One degree per line.
        #[serde(default)]
        degrees_path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CascadeSource {
    /// Session CSV: the seven-column table or `user_id,time_login`.
    Sessions {
        path: PathBuf,
        #[serde(default)]
        horizon: Option<usize>,
    },
    Simulate {
        model: EndogenousModel,
        #[serde(default)]
        profile: Option<ExogenousProfile>,
        /// Single-column CSV with one exogenous probability per window.
        #[serde(default)]
        profile_path: Option<PathBuf>,
        n_seeds: usize,
        horizon: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSettings {
    pub alpha: f64,
    /// Population size in the correction factor; the graph size if absent.
    pub n_all: Option<usize>,
    pub eps: f64,
    pub max_outer: usize,
    pub optimizer: OptimizerSpec,
    /// When non-empty, `infer` runs once per value and writes one result set each.
    pub alpha_sweep: Vec<f64>,
}

impl Default for InferenceSettings {
    fn default() -> Self {
        InferenceSettings {
            alpha: 0.0,
            n_all: None,
            eps: DEFAULT_EPS,
            max_outer: DEFAULT_MAX_OUTER,
            optimizer: OptimizerSpec::default(),
            alpha_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionSettings {
    pub variant: ResponsibilityVariant,
    pub weighting: InfluenceWeighting,
    pub groups: Vec<ReferralClass>,
    pub histogram_bins: usize,
}

impl Default for AttributionSettings {
    fn default() -> Self {
        AttributionSettings {
            variant: ResponsibilityVariant::Ratio,
            weighting: InfluenceWeighting::Uniform,
            groups: vec![ReferralClass::Share, ReferralClass::External, ReferralClass::Ad],
            histogram_bins: 20,
        }
    }
}

fn default_model() -> ModelKind {
    ModelKind::Si
}

fn default_dt() -> f64 {
    DEFAULT_WINDOW_MINUTES
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub cascade: CascadeSource,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default)]
    pub seed: u64,
    /// Window width in minutes.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub inference: InferenceSettings,
    #[serde(default)]
    pub attribution: AttributionSettings,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

/// Command-line values that replace config fields when given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub dt: Option<f64>,
    pub model: Option<ModelKind>,
    pub out: Option<PathBuf>,
    pub alpha_sweep: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "config".to_string() } else { path };
            CliError::Config(format!("{field}: {}", e.inner()))
        })
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.graph {
            GraphSource::File { path, .. } => fix(path),
            GraphSource::Configuration {
                degrees_path: Some(p), ..
            } => fix(p),
            _ => {}
        }
        match &mut self.cascade {
            CascadeSource::Sessions { path, .. } => fix(path),
            CascadeSource::Simulate {
                profile_path: Some(p), ..
            } => fix(p),
            _ => {}
        }
        fix(&mut self.out);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(alpha) = o.alpha {
            self.inference.alpha = alpha;
        }
        if let Some(dt) = o.dt {
            self.dt = dt;
        }
        if let Some(model) = o.model {
            self.model = model;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(sweep) = &o.alpha_sweep {
            self.inference.alpha_sweep = sweep.clone();
        }
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt", format!("{} must be a positive number of minutes", self.dt));
        }
        match &self.graph {
            GraphSource::HolmeKim { n, m, p } => {
                if *m < 1 || *n <= *m {
                    return bad("graph", format!("Holme-Kim needs 1 <= m < n (n = {n}, m = {m})"));
                }
                if !(0.0..=1.0).contains(p) {
                    return bad("graph.p", format!("{p} outside [0, 1]"));
                }
            }
            GraphSource::Configuration { degrees, degrees_path } => {
                if degrees.is_some() == degrees_path.is_some() {
                    return bad("graph", "give exactly one of `degrees` and `degrees_path`".into());
                }
            }
            GraphSource::File { .. } => {}
        }
        if let CascadeSource::Simulate {
            model,
            profile,
            profile_path,
            n_seeds,
            horizon,
        } = &self.cascade
        {
            model
                .validate()
                .map_err(|e| CliError::Config(format!("cascade.model: {e}")))?;
            if profile.is_some() == profile_path.is_some() {
                return bad("cascade", "give exactly one of `profile` and `profile_path`".into());
            }
            if *n_seeds == 0 {
                return bad("cascade.n_seeds", "must be at least 1".into());
            }
            if *horizon == 0 {
                return bad("cascade.horizon", "must be at least 1".into());
            }
        }
        let inf = &self.inference;
        for &a in std::iter::once(&inf.alpha).chain(&inf.alpha_sweep) {
            if !(a >= 0.0) || !a.is_finite() {
                return bad("inference.alpha", format!("{a} must be finite and >= 0"));
            }
        }
        if !(inf.eps > 0.0) {
            return bad("inference.eps", format!("{} must be positive", inf.eps));
        }
        inf.optimizer
            .validate()
            .map_err(|e| CliError::Config(format!("inference.optimizer: {e}")))?;
        if self.attribution.histogram_bins == 0 {
            return bad("attribution.histogram_bins", "must be positive".into());
        }
        if let InfluenceWeighting::ExpDecay { lambda } = self.attribution.weighting {
            if !(lambda >= 0.0) || !lambda.is_finite() {
                return bad(
                    "attribution.weighting.lambda",
                    format!("{lambda} must be finite and >= 0"),
                );
            }
        }
        Ok(())
    }

    /// Seed for the graph generator; the simulation uses a different stream.
    pub fn graph_seed(&self) -> u64 {
        self.seed
    }

    pub fn simulation_seed(&self) -> u64 {
        self.seed ^ 0x5851_f42d_4c95_7f2d
    }
}
