//! Scenario files: one TOML document describing the model, the initial
//! function, the solver and the verifier settings. Unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::audit::DEFAULT_SEED;
use crate::analysis::dissipativity::DissipativityConfig;
use crate::error::{Result, SddError};
use crate::exec::Execution;
use crate::history::{HistoryBuffer, InitialShape};
use crate::integrator::{manifold_from_buffer, SolverConfig};
use crate::rhs::{DelayFunctional, DelaySpec, KernelSpec, Nonlinearity, SddRightHandSide};
use crate::spectral::{DomainSpec, SpectralBasis};

/// The shipped default scenario.
pub const NICHOLSON_TOML: &str = include_str!("../scenarios/nicholson.toml");

fn default_name() -> String {
    "scenario".into()
}
fn default_length() -> f64 {
    std::f64::consts::PI
}
fn default_r() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn yes() -> bool {
    true
}
fn default_segments() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default = "default_length")]
    pub length: f64,
    pub n_grid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub shape: InitialShape,
    /// Blend the endpoint derivative onto the solution manifold.
    #[serde(default = "yes")]
    pub manifold: bool,
    #[serde(default = "default_segments")]
    pub n_segments: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "VerifyConfig::lemma1_samples")]
    pub lemma1_samples: usize,
    #[serde(default = "VerifyConfig::continuity_t", rename = "continuity_T")]
    pub continuity_t: f64,
    /// `‖·‖_H` size of the continuity perturbation.
    #[serde(default = "VerifyConfig::perturbation")]
    pub perturbation: f64,
    #[serde(default = "VerifyConfig::manifold_t", rename = "manifold_T")]
    pub manifold_t: f64,
    #[serde(default = "VerifyConfig::semigroup_pairs")]
    pub semigroup_pairs: usize,
}

impl VerifyConfig {
    fn lemma1_samples() -> usize {
        1000
    }
    fn continuity_t() -> f64 {
        2.0
    }
    fn perturbation() -> f64 {
        1e-4
    }
    fn manifold_t() -> f64 {
        3.0
    }
    fn semigroup_pairs() -> usize {
        10
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            lemma1_samples: Self::lemma1_samples(),
            continuity_t: Self::continuity_t(),
            perturbation: Self::perturbation(),
            manifold_t: Self::manifold_t(),
            semigroup_pairs: Self::semigroup_pairs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "StudyConfig::m_list")]
    pub m_list: Vec<usize>,
    /// Horizon of the Galerkin study; the solver `T` when absent.
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Damping values of the sweep.
    #[serde(default = "StudyConfig::d_values")]
    pub d_values: Vec<f64>,
}

impl StudyConfig {
    fn m_list() -> Vec<usize> {
        vec![4, 8, 16, 32]
    }
    fn d_values() -> Vec<f64> {
        vec![0.0, 0.1, 1.0]
    }
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { m_list: Self::m_list(), t_final: None, d_values: Self::d_values() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub m: usize,
    /// Delay bound; histories live on `[-r, 0]`.
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub domain: DomainConfig,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub delay: DelaySpec,
    pub initial: InitialConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub dissipativity: DissipativityConfig,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Scenario {
    pub fn nicholson() -> Self {
        Self::from_toml_str(NICHOLSON_TOML).expect("shipped scenario is valid")
    }

    /// Parses without building anything; see [`Scenario::validate`].
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SddError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SddError::Config(format!("cannot read {}: {e}", path.display())))?;
        let s = Self::from_toml_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form (keys
    /// sorted), so key order in the file does not matter.
    pub fn config_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Cheap structural checks. Building the right-hand side performs the
    /// remaining ones (kernel support and resolution).
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(SddError::InvalidParameter("m must be at least 1".into()));
        }
        self.basis()?;
        let delay = DelayFunctional::new(self.delay.clone(), self.r)?;
        self.nonlinearity.validate()?;
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(SddError::InvalidParameter(format!("damping d must be non-negative, got {}", self.d)));
        }
        validate_steps(&self.solver, &delay)?;
        if self.study.m_list.len() < 2 || self.study.m_list.windows(2).any(|w| w[1] <= w[0]) || self.study.m_list[0] == 0
        {
            return Err(SddError::InvalidParameter("study.m_list must hold at least two ascending orders".into()));
        }
        if self.study.d_values.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(SddError::InvalidParameter("study.d_values must be non-negative".into()));
        }
        let v = &self.verify;
        if !(v.continuity_t > 0.0 && v.manifold_t > 0.0 && v.perturbation > 0.0) {
            return Err(SddError::InvalidParameter("verify horizons and perturbation must be positive".into()));
        }
        let dc = &self.dissipativity;
        if !(dc.eps > 0.0 && dc.t_max > 0.0 && dc.energy_factor > 0.0 && dc.alpha > 0.5 && dc.alpha < 1.0) {
            return Err(SddError::InvalidParameter(
                "dissipativity needs eps, t_max, energy_factor > 0 and alpha in (1/2, 1)".into(),
            ));
        }
        if self.initial.n_segments == 0 {
            return Err(SddError::InvalidParameter("initial.n_segments must be positive".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec { length: self.domain.length, n_grid: self.domain.n_grid }
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        SpectralBasis::new(DomainSpec::new(self.domain.length, self.domain.n_grid)?, self.m)
    }

    pub fn rhs(&self, exec: Execution) -> Result<SddRightHandSide> {
        self.rhs_variant(self.m, self.domain.n_grid, self.d, exec)
    }

    /// Same model at another order, grid or damping.
    pub fn rhs_variant(&self, m: usize, n_grid: usize, d: f64, exec: Execution) -> Result<SddRightHandSide> {
        let basis = SpectralBasis::new(DomainSpec::new(self.domain.length, n_grid)?, m)?;
        let delay = DelayFunctional::new(self.delay.clone(), self.r)?;
        SddRightHandSide::new(basis, &self.kernel, self.nonlinearity.clone(), delay, d, exec)
    }

    /// Grid shared by all orders of the Galerkin study.
    pub fn study_n_grid(&self) -> usize {
        let m_max = self.study.m_list.iter().copied().max().unwrap_or(self.m);
        self.domain.n_grid.max(2 * m_max)
    }

    /// The rendered initial function, moved onto the manifold if requested.
    pub fn initial_history(&self, rhs: &SddRightHandSide) -> Result<HistoryBuffer> {
        let buf = self.initial.shape.render(self.r, rhs.order(), self.initial.n_segments)?;
        if self.initial.manifold {
            manifold_from_buffer(buf, rhs)
        } else {
            Ok(buf)
        }
    }
}

fn validate_steps(cfg: &SolverConfig, delay: &DelayFunctional) -> Result<()> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) || !(cfg.t_final >= 0.0 && cfg.t_final.is_finite()) {
        return Err(SddError::InvalidParameter("solver.dt must be positive and solver.T non-negative".into()));
    }
    let constant_ok = delay.constant_value().map(|tau| tau >= cfg.dt).unwrap_or(false);
    if cfg.dt > delay.r() && !constant_ok {
        return Err(SddError::InvalidParameter(format!(
            "dt = {} exceeds the delay bound r = {}; only a constant delay τ₀ ≥ dt allows this",
            cfg.dt,
            delay.r()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenario_parses_and_validates() {
        let s = Scenario::nicholson();
        s.validate().unwrap();
        assert_eq!(s.m, 16);
        assert_eq!(s.solver.dt, 1e-3);
        assert_eq!(s.nonlinearity, Nonlinearity::Nicholson { p: 2.0 });
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = "m = 2\nr = 0.5\n[domain]\nn_grid = 8\n[initial.shape]\nkind = \"polynomial\"\ncoeffs = [[1.0]]\n[solver]\ndt = 0.01\nT = 1.0\n";
        let b = "r = 0.5\nm = 2\n[solver]\nT = 1.0\ndt = 0.01\n[initial.shape]\ncoeffs = [[1.0]]\nkind = \"polynomial\"\n[domain]\nn_grid = 8\n";
        let sa = Scenario::from_toml_str(a).unwrap();
        let sb = Scenario::from_toml_str(b).unwrap();
        assert_eq!(sa.config_hash(), sb.config_hash());
        let mut sc = sa.clone();
        sc.d = 0.2;
        assert_ne!(sa.config_hash(), sc.config_hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = NICHOLSON_TOML.replace("fp_tol =", "fp_tolerance =");
        assert!(matches!(Scenario::from_toml_str(&text), Err(SddError::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::nicholson();
        assert_eq!(Scenario::from_toml_str(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn validation_errors() {
        let mut s = Scenario::nicholson();
        s.domain.n_grid = 20;
        assert!(matches!(s.validate(), Err(SddError::AntiAliasing { .. })));
        let mut s = Scenario::nicholson();
        s.solver.dt = 2.0;
        assert!(s.validate().unwrap_err().to_string().contains("exceeds the delay bound"));
        s.delay = DelaySpec::Constant { tau0: 1.0 };
        s.solver.dt = 1.0;
        s.validate().unwrap();
    }
}
