//! Experiment files: flat TOML sections `[model]`, `[kernel]`, `[test]`,
//! `[sim]` and `[output]`.
//!
//! ```toml
//! [model]
//! family = "cir"
//! kappa = 1.0
//! theta = 1.0
//! sigma = 1.0
//! x0 = 1.0
//!
//! [kernel]
//! kind = "sumexp"
//! m = [1.0, 2.0]
//! x = [0.5, 3.0]
//! ```
//!
//! Unknown keys are rejected. [`ExperimentConfig::resolve`] fills every
//! default so the echoed file reproduces a run exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feller::default_eps_shift;
use crate::kernels::KernelSpec;
use crate::scale::{LimitSettings, ModelSpec, ScaleSettings};
use crate::simulate::{
    default_blowup_cap, default_hit_eps, CrosscheckTolerances, Scheme, SimConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Cir {
        kappa: f64,
        theta: f64,
        sigma: f64,
        x0: f64,
    },
    Jacobi {
        a: f64,
        b: f64,
        kappa: f64,
        theta: f64,
        sigma: f64,
        x0: f64,
    },
    Power {
        alpha: f64,
        delta: f64,
        sigma: f64,
        x0: f64,
    },
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        match *self {
            ModelConfig::Cir {
                kappa,
                theta,
                sigma,
                x0,
            } => ModelSpec::cir(kappa, theta, sigma, x0),
            ModelConfig::Jacobi {
                a,
                b,
                kappa,
                theta,
                sigma,
                x0,
            } => ModelSpec::jacobi(a, b, kappa, theta, sigma, x0),
            ModelConfig::Power {
                alpha,
                delta,
                sigma,
                x0,
            } => ModelSpec::power(alpha, delta, sigma, x0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Family,
    Necessary,
    Sufficient,
    BoundedInterval,
    SupInf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub tests: Vec<TestKind>,
    /// Base point `c`; defaults to `x0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_point: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_shift: Option<f64>,
    pub stages: usize,
    /// Grid of the resolvent check for kernels that are not completely
    /// monotone by construction.
    pub resolvent_dt: f64,
    pub resolvent_horizon: f64,
    pub limit_cap: f64,
    pub limit_steps: usize,
    pub limit_max_steps: usize,
    pub divergent_ratio: f64,
    pub finite_ratio: f64,
    pub tail_rel: f64,
    pub closed_form: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        let l = LimitSettings::default();
        TestConfig {
            tests: vec![TestKind::Family],
            base_point: None,
            eps_shift: None,
            stages: 12,
            resolvent_dt: 1e-3,
            resolvent_horizon: 2.0,
            limit_cap: l.cap,
            limit_steps: l.steps,
            limit_max_steps: l.max_steps,
            divergent_ratio: l.divergent_ratio,
            finite_ratio: l.finite_ratio,
            tail_rel: l.tail_rel,
            closed_form: l.closed_form,
        }
    }
}

impl TestConfig {
    pub fn scale_settings(&self) -> ScaleSettings {
        ScaleSettings {
            limits: LimitSettings {
                cap: self.limit_cap,
                steps: self.limit_steps,
                max_steps: self.limit_max_steps,
                divergent_ratio: self.divergent_ratio,
                finite_ratio: self.finite_ratio,
                tail_rel: self.tail_rel,
                closed_form: self.closed_form,
            },
            ..ScaleSettings::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tests.is_empty() {
            return Err(Error::param("test.tests", "name at least one test"));
        }
        if let Some(e) = self.eps_shift {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::param("test.eps_shift", "must be positive"));
            }
        }
        if self.stages == 0 {
            return Err(Error::param("test.stages", "must be positive"));
        }
        if !(self.resolvent_dt > 0.0 && self.resolvent_dt < self.resolvent_horizon) {
            return Err(Error::param(
                "test.resolvent_dt",
                "must be positive and below resolvent_horizon",
            ));
        }
        if !(self.limit_cap > 1.0) {
            return Err(Error::param("test.limit_cap", "must exceed 1"));
        }
        if self.limit_steps < 6 || self.limit_max_steps < self.limit_steps {
            return Err(Error::param(
                "test.limit_steps",
                "needs 6 <= limit_steps <= limit_max_steps",
            ));
        }
        if !(0.0 < self.finite_ratio
            && self.finite_ratio < self.divergent_ratio
            && self.divergent_ratio <= 1.0)
        {
            return Err(Error::param(
                "test.finite_ratio",
                "needs 0 < finite_ratio < divergent_ratio <= 1",
            ));
        }
        if !(self.tail_rel > 0.0) {
            return Err(Error::param("test.tail_rel", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_cap: Option<f64>,
    pub leak_tol: f64,
    pub floor_tol: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let tol = CrosscheckTolerances::default();
        SimSection {
            horizon: 1.0,
            dt: 1e-3,
            n_paths: 1000,
            seed: 0,
            scheme: Scheme::ConvolutionEuler,
            hit_eps: None,
            blowup_cap: None,
            leak_tol: tol.leak_tol,
            floor_tol: tol.floor_tol,
        }
    }
}

impl SimSection {
    pub fn tolerances(&self) -> CrosscheckTolerances {
        CrosscheckTolerances {
            leak_tol: self.leak_tol,
            floor_tol: self.floor_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
    /// Written to standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub test: TestConfig,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parses and validates, naming the offending key on failure.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The `config` object echoed in JSON output.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML, or JSON for a `.json` extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = &self.model {
            m.build()?;
        }
        self.kernel.validate()?;
        self.test.validate()?;
        let (k0, kp0) = self.kernel.k0_kprime0();
        if !(k0 > 0.0 && kp0 <= 0.0) {
            return Err(Error::param("kernel", "needs K(0) > 0 and K'(0) <= 0"));
        }
        let t = self.sim.tolerances();
        if !(0.0..=1.0).contains(&t.leak_tol) || !(0.0..=1.0).contains(&t.floor_tol) {
            return Err(Error::param(
                "sim.leak_tol",
                "tolerances must lie in [0, 1]",
            ));
        }
        if let Ok(sim) = self.sim_config() {
            sim.validate()?;
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Config("missing [model] section".into()))?
            .build()
    }

    /// Fills defaults that depend on the model.
    pub fn resolve(&mut self) -> Result<()> {
        if self.model.is_none() {
            return Ok(());
        }
        let model = self.model_spec()?;
        self.test.base_point.get_or_insert(model.x0);
        self.test.eps_shift.get_or_insert(default_eps_shift(&model));
        self.sim.hit_eps.get_or_insert(default_hit_eps(&model));
        self.sim
            .blowup_cap
            .get_or_insert(default_blowup_cap(&model));
        self.validate()
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let model = self.model_spec()?;
        let mut sim = SimConfig::new(model, self.kernel.clone());
        let s = &self.sim;
        sim.horizon = s.horizon;
        sim.dt = s.dt;
        sim.n_paths = s.n_paths;
        sim.seed = s.seed;
        sim.scheme = s.scheme;
        if let Some(h) = s.hit_eps {
            sim.hit_eps = h;
        }
        if let Some(b) = s.blowup_cap {
            sim.blowup_cap = b;
        }
        Ok(sim)
    }
}
