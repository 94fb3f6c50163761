//! TOML run configuration. Rationals are written as `"p/q"` strings so a
//! config survives a parse/serialize round trip unchanged.
//!
//! ```toml
//! command = "sweep"
//! seed = 7
//!
//! [model]
//! kind = "l96"
//! n = 10
//! q = ["1", "1"]
//! epsilon = 0.1
//! scaling = "fluctuation-dissipation"
//!
//! [integrator]
//! horizon = 2000.0
//! dt = 0.002
//!
//! [sweep]
//! epsilons = [0.5, 0.2, 0.1, 0.05]
//! n_seeds = 4
//! ```

use nalgebra::DMatrix;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{build_gnse, build_l96, BilinearModel, ForcedMode, GnseConfig, ModelError, Scaling};
use crate::rational::{serde_rational, serde_rational_vec, to_f64};
use crate::sde::{default_dt, IntegratorConfig, Scheme};

#[derive(Debug, Error)]
pub enum ConfigError {
    /// TOML syntax or schema error; the message carries line and column.
    #[error("{0}")]
    Parse(String),
    #[error("command `{command}` needs a [{section}] section")]
    MissingSection { command: String, section: &'static str },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Spectrum,
    Sweep,
    Moment,
    FisherCheck,
    VerifyHk,
    VerifyDistinctness,
    VerifyZn,
    ShearCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Moment => "moment",
            Command::FisherCheck => "fisher-check",
            Command::VerifyHk => "verify-hk",
            Command::VerifyDistinctness => "verify-distinctness",
            Command::VerifyZn => "verify-zn",
            Command::ShearCheck => "shear-check",
        }
    }
}

fn fd() -> Scaling {
    Scaling::FluctuationDissipation
}

/// Model section, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// Lorenz-96 with forcing amplitudes `q` on the leading coordinates.
    L96 {
        n: usize,
        #[serde(with = "serde_rational_vec")]
        q: Vec<BigRational>,
        epsilon: f64,
        #[serde(default = "fd")]
        scaling: Scaling,
    },
    Gnse {
        #[serde(rename = "N")]
        truncation: usize,
        #[serde(with = "serde_rational")]
        r: BigRational,
        epsilon: f64,
        #[serde(default = "fd")]
        scaling: Scaling,
        forced: Vec<ForcedMode>,
    },
    /// Linear model with diagonal damping `a` and forcing amplitudes `q`.
    Ou {
        #[serde(with = "serde_rational_vec")]
        a: Vec<BigRational>,
        #[serde(with = "serde_rational_vec")]
        q: Vec<BigRational>,
        epsilon: f64,
        #[serde(default = "fd")]
        scaling: Scaling,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<BilinearModel, ModelError> {
        match self {
            ModelSpec::L96 { n, q, epsilon, scaling } => {
                build_l96(*n, &q.iter().map(to_f64).collect::<Vec<_>>(), *epsilon, *scaling)
            }
            ModelSpec::Gnse { .. } => {
                let (epsilon, scaling) = (self.epsilon(), self.scaling());
                build_gnse(&self.gnse_config().expect("gnse variant"), epsilon, scaling)
            }
            ModelSpec::Ou { a, q, epsilon, scaling } => {
                let a: Vec<f64> = a.iter().map(to_f64).collect();
                let q: Vec<f64> = q.iter().map(to_f64).collect();
                BilinearModel::ornstein_uhlenbeck(&a, &q, *epsilon, *scaling)
            }
        }
    }

    pub fn gnse_config(&self) -> Option<GnseConfig> {
        match self {
            ModelSpec::Gnse {
                truncation, r, forced, ..
            } => Some(GnseConfig::new(*truncation, r.clone(), forced.clone())),
            _ => None,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            ModelSpec::L96 { epsilon, .. } | ModelSpec::Gnse { epsilon, .. } | ModelSpec::Ou { epsilon, .. } => {
                *epsilon
            }
        }
    }

    pub fn set_epsilon(&mut self, eps: f64) {
        match self {
            ModelSpec::L96 { epsilon, .. } | ModelSpec::Gnse { epsilon, .. } | ModelSpec::Ou { epsilon, .. } => {
                *epsilon = eps
            }
        }
    }

    pub fn scaling(&self) -> Scaling {
        match self {
            ModelSpec::L96 { scaling, .. } | ModelSpec::Gnse { scaling, .. } | ModelSpec::Ou { scaling, .. } => {
                *scaling
            }
        }
    }
}

fn default_scheme() -> Scheme {
    Scheme::EulerMaruyama
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub horizon: f64,
    /// Defaults to [`default_dt`] at the typical stationary scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Defaults to 10% of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub record_every: usize,
}

impl IntegratorSection {
    pub fn to_config(&self, model: &BilinearModel, seed: u64) -> IntegratorConfig {
        let dt = self.dt.unwrap_or_else(|| default_dt(model, typical_scale(model)));
        let mut cfg = IntegratorConfig::new(dt, self.horizon, seed).with_scheme(self.scheme);
        if let Some(b) = self.burn_in {
            cfg = cfg.with_burn_in(b);
        }
        cfg.record_every = self.record_every;
        cfg
    }
}

/// Root-mean-square stationary norm predicted by energy balance,
/// `sqrt(s^2 sum |X_k|^2 / (2 eps lambda_min(A)))`; 1 when `eps = 0`.
pub fn typical_scale(model: &BilinearModel) -> f64 {
    let eps = model.epsilon();
    if eps <= 0.0 {
        return 1.0;
    }
    let lam_min = model
        .damping()
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let s2 = model.noise_scale().powi(2);
    let forcing: f64 = model.forcing().iter().map(|f| f.vector.norm_squared()).sum();
    (s2 * forcing / (2.0 * eps * lam_min)).sqrt()
}

fn default_seeds() -> usize {
    4
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Number of exponents; defaults to the full dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_vectors: Option<usize>,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default = "ten")]
    pub reorth_every: usize,
    #[serde(default = "cond")]
    pub cond_trigger: f64,
}

fn ten() -> usize {
    10
}

fn cond() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default = "yes")]
    pub full_spectrum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSection {
    pub p: Vec<f64>,
    pub ensemble: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearSection {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "hundred")]
    pub sample_every: usize,
    /// Initial state; defaults to `e1 + e2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureSection {
    #[serde(default = "depth")]
    pub max_depth: usize,
}

fn depth() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistinctnessSection {
    #[serde(rename = "N")]
    pub truncation: usize,
    #[serde(with = "serde_rational")]
    pub r: BigRational,
    /// Runs with `N > 8` are refused unless this is set.
    #[serde(default)]
    pub allow_large: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "out_dir")]
    pub dir: String,
}

fn out_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: out_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment: Option<MomentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear: Option<ShearSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinctness: Option<DistinctnessSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn missing(&self, section: &'static str) -> ConfigError {
        ConfigError::MissingSection {
            command: self.command.name().into(),
            section,
        }
    }

    /// Sections required by each command must be present, and the model
    /// (when given) must build.
    pub fn validate(&self) -> Result<(), ConfigError> {
        use Command::*;
        let needs_model = !matches!(self.command, VerifyDistinctness);
        if needs_model && self.model.is_none() {
            return Err(self.missing("model"));
        }
        if matches!(self.command, Simulate | Spectrum | Sweep | Moment) && self.integrator.is_none() {
            return Err(self.missing("integrator"));
        }
        match self.command {
            Sweep if self.sweep.is_none() => return Err(self.missing("sweep")),
            Moment if self.moment.is_none() => return Err(self.missing("moment")),
            ShearCheck if self.shear.is_none() => return Err(self.missing("shear")),
            VerifyDistinctness if self.distinctness.is_none() => return Err(self.missing("distinctness")),
            ShearCheck if self.model.as_ref().is_some_and(|m| m.epsilon() != 0.0) => {
                return Err(ConfigError::Invalid("shear-check runs the conservative flow; set epsilon = 0".into()))
            }
            VerifyZn if !matches!(self.model, Some(ModelSpec::Gnse { .. })) => {
                return Err(ConfigError::Invalid("verify-zn needs a gnse model".into()))
            }
            _ => {}
        }
        if let Some(m) = &self.model {
            match m {
                ModelSpec::Gnse { .. } => m.gnse_config().unwrap().validate()?,
                _ => {
                    m.build()?;
                }
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<BilinearModel, ConfigError> {
        let spec = self.model.as_ref().ok_or_else(|| self.missing("model"))?;
        Ok(spec.build()?)
    }

    pub fn integrator_config(&self, model: &BilinearModel) -> Result<IntegratorConfig, ConfigError> {
        let sec = self.integrator.as_ref().ok_or_else(|| self.missing("integrator"))?;
        let cfg = sec.to_config(model, self.seed);
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

/// Damping matrix and per-coordinate forcing amplitudes of a model whose
/// forcing vectors are multiples of coordinate vectors.
pub fn coordinate_amplitudes(model: &BilinearModel) -> Result<(DMatrix<f64>, Vec<f64>), ConfigError> {
    let n = model.dim();
    let mut q = vec![0.0_f64; n];
    for f in model.forcing() {
        let nz: Vec<usize> = (0..n).filter(|&i| f.vector[i] != 0.0).collect();
        if nz.len() != 1 {
            return Err(ConfigError::Invalid(format!(
                "forcing vector {} is not aligned with a coordinate",
                f.label
            )));
        }
        q[nz[0]] = q[nz[0]].hypot(f.vector[nz[0]]);
    }
    Ok((model.damping().clone(), q))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"
command = "sweep"
seed = 7

[model]
kind = "l96"
n = 10
q = ["1", "1"]
epsilon = 0.1

[integrator]
horizon = 200.0
dt = 0.002

[sweep]
epsilons = [0.5, 0.2, 0.1, 0.05]
"#;

    const GNSE: &str = r#"
command = "verify-zn"

[model]
kind = "gnse"
N = 3
r = "3/2"
epsilon = 0.1
scaling = "unscaled"

[[model.forced]]
k = [1, 0]
alpha = "1/3"
beta = "1/3"

[[model.forced]]
k = [1, 1]
alpha = "1"
beta = 2
"#;

    #[test]
    fn parses_and_round_trips() {
        for text in [SWEEP, GNSE] {
            let cfg = RunConfig::from_toml(text).unwrap();
            let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, again);
            assert_eq!(cfg.to_toml(), again.to_toml());
        }
        let cfg = RunConfig::from_toml(SWEEP).unwrap();
        assert_eq!(cfg.sweep.as_ref().unwrap().n_seeds, 4);
        assert_eq!(cfg.build_model().unwrap().dim(), 10);
        assert!(cfg.to_toml().contains("q = [\"1\", \"1\"]"));
        let g = RunConfig::from_toml(GNSE).unwrap();
        assert!(g.to_toml().contains("r = \"3/2\""));
        assert_eq!(g.build_model().unwrap().dim(), 48);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = SWEEP.replace("n = 10", "n = \"ten\"");
        let msg = RunConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn missing_sections_are_reported() {
        let text = SWEEP.replace("[sweep]\nepsilons = [0.5, 0.2, 0.1, 0.05]\n", "");
        assert!(matches!(
            RunConfig::from_toml(&text),
            Err(ConfigError::MissingSection { section: "sweep", .. })
        ));
        assert!(RunConfig::from_toml("command = \"bogus\"").is_err());
    }

    #[test]
    fn default_dt_respects_scale() {
        let cfg = RunConfig::from_toml(&SWEEP.replace("dt = 0.002\n", "")).unwrap();
        let m = cfg.build_model().unwrap();
        let ic = cfg.integrator_config(&m).unwrap();
        assert!(ic.dt <= 1e-3 && ic.dt > 0.0);
        assert_eq!(ic.burn_in, 20.0);
    }

    #[test]
    fn coordinate_amplitudes_of_ou() {
        let m = BilinearModel::ornstein_uhlenbeck(&[1.0, 2.0], &[0.5, 1.0], 0.1, Scaling::Unscaled).unwrap();
        let (a, q) = coordinate_amplitudes(&m).unwrap();
        assert_eq!(q, vec![0.5, 1.0]);
        assert_eq!(a[(1, 1)], 2.0);
    }
}
