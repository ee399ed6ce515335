//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use dgflow_core::flow::{FlowParams, Integrator};
use dgflow_core::{catalog, CatalogParams, InitialData, Manifold, RandomSpec, SpinStructure};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Validate,
    Flow,
    Sweep,
    Spectrum,
    Report,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Validate => "validate",
            Scenario::Flow => "flow",
            Scenario::Sweep => "sweep",
            Scenario::Spectrum => "spectrum",
            Scenario::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// A Fourier mode `k` with complex amplitude `re + i·im`. Spinor modes use
/// the integer label: the frequency is `k` for σ₁ and `k + ½` for σ₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl ModeEntry {
    fn amplitude(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    GreatCircle,
    Latitude {
        z0: f64,
    },
    StationaryPair {
        #[serde(default = "one")]
        chi_re: f64,
        #[serde(default)]
        chi_im: f64,
    },
    TorusWinding {
        p: i64,
        q: i64,
    },
    ExplicitModes {
        #[serde(default)]
        angle: Vec<ModeEntry>,
        #[serde(default)]
        spinor: Vec<ModeEntry>,
    },
    RandomPerturbation {
        amplitude: f64,
        seed: u64,
        #[serde(default = "default_max_mode")]
        max_mode: usize,
        #[serde(default = "default_spinor_amplitude")]
        spinor_amplitude: f64,
        #[serde(default)]
        odd_modes: bool,
    },
}

impl InitialConfig {
    pub fn to_initial_data(&self, spin: SpinStructure) -> InitialData {
        match self {
            InitialConfig::GreatCircle => InitialData::GreatCircle,
            InitialConfig::Latitude { z0 } => InitialData::Latitude { z0: *z0 },
            InitialConfig::StationaryPair { chi_re, chi_im } => InitialData::StationaryPair {
                chi: Complex64::new(*chi_re, *chi_im),
            },
            InitialConfig::TorusWinding { p, q } => InitialData::TorusWinding { p: *p, q: *q },
            InitialConfig::ExplicitModes { angle, spinor } => InitialData::ExplicitModes {
                angle: angle.iter().map(|m| (m.k, m.amplitude())).collect(),
                spinor: spinor
                    .iter()
                    .map(|m| (m.k as f64 + spin.frequency_shift(), m.amplitude()))
                    .collect(),
            },
            InitialConfig::RandomPerturbation {
                amplitude,
                seed,
                max_mode,
                spinor_amplitude,
                odd_modes,
            } => InitialData::RandomPerturbation {
                spec: RandomSpec {
                    amplitude: *amplitude,
                    max_mode: *max_mode,
                    spinor_amplitude: *spinor_amplitude,
                    odd_modes: *odd_modes,
                },
                seed: *seed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Gradient norm below which a state counts as stationary.
    #[serde(default = "default_stationary_tol")]
    pub stationary: f64,
    /// Sup-norm error allowed by the `validate` scenario.
    #[serde(default = "default_stationary_tol")]
    pub validate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stationary: default_stationary_tol(),
            validate: default_stationary_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotInput {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub inputs: Vec<PlotInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_spin")]
    pub spin: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default = "default_integrator")]
    pub integrator: String,
    #[serde(default = "yes")]
    pub rescaled: bool,
    #[serde(default = "one_usize")]
    pub monitor_stride: usize,
    #[serde(default = "yes")]
    pub stop_when_stationary: bool,
    /// Exit with the non-convergence code if a run ends before it is stationary.
    #[serde(default)]
    pub require_convergence: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportConfig>,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_dt() -> f64 {
    1e-3
}
fn default_spin() -> String {
    "sigma1".into()
}
fn default_integrator() -> String {
    "semi_implicit".into()
}
fn default_stationary_tol() -> f64 {
    1e-6
}
fn default_max_mode() -> usize {
    RandomSpec::default().max_mode
}
fn default_spinor_amplitude() -> f64 {
    RandomSpec::default().spinor_amplitude
}

/// Everything a simulation scenario needs, checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub manifold: Manifold,
    pub spin: SpinStructure,
    pub n: usize,
    pub initial: InitialConfig,
    pub params: FlowParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies a seed override to random initial data.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(InitialConfig::RandomPerturbation { seed: s, .. }) = &mut self.initial {
            *s = seed;
        }
    }

    pub fn flow_params(&self, eps: f64) -> Result<FlowParams, CliError> {
        let integrator: Integrator = self.integrator.parse()?;
        let p = FlowParams {
            eps,
            dt: self.dt,
            t_end: self.t_end,
            rescaled: self.rescaled,
            integrator,
            stationary_tol: self.tolerances.stationary,
            stop_when_stationary: self.stop_when_stationary,
            monitor_stride: self.monitor_stride,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the fields every simulation scenario uses and builds the
    /// initial state once, so that bad fixtures fail before any output.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let m = self
            .manifold
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [manifold]".into()))?;
        let manifold = catalog(
            &m.name,
            CatalogParams {
                radius: m.radius,
                dim: m.dim,
            },
        )?;
        let spin: SpinStructure = self.spin.parse()?;
        let n = self.n.ok_or_else(|| CliError::Config("missing grid size `n`".into()))?;
        let initial = self
            .initial
            .clone()
            .ok_or_else(|| CliError::Config("missing [initial]".into()))?;
        if !(self.tolerances.stationary > 0.0 && self.tolerances.validate > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        let params = self.flow_params(self.eps)?;
        initial.to_initial_data(spin).build(&manifold, n, spin)?;
        Ok(Resolved {
            manifold,
            spin,
            n,
            initial,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLOW: &str = r#"
n = 32
eps = 2.0
t_end = 0.5

[manifold]
name = "round_sphere"

[initial]
kind = "random_perturbation"
amplitude = 0.1
seed = 4
"#;

    #[test]
    fn defaults_and_round_trip() {
        let c = RunConfig::parse(FLOW).unwrap();
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.spin, "sigma1");
        assert!(c.rescaled && c.stop_when_stationary && !c.require_convergence);
        assert_eq!(c.tolerances, Tolerances::default());
        let r = c.resolve().unwrap();
        assert_eq!(r.params.eps, 2.0);
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn seed_override() {
        let mut c = RunConfig::parse(FLOW).unwrap();
        c.override_seed(99);
        assert!(matches!(
            c.initial,
            Some(InitialConfig::RandomPerturbation { seed: 99, .. })
        ));
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            "n = 32\n[manifold]\nname = \"round_sphere\"\n[initial]\nkind = \"bogus\"\n",
            "n = 32\nbogus_key = 1\n",
            "n = \"many\"\n",
            &FLOW.replace("round_sphere", "klein_bottle"),
            &FLOW.replace("n = 32", "n = 31"),
            &FLOW.replace("t_end = 0.5", "t_end = 0.5\nintegrator = \"euler\""),
            &FLOW.replace("t_end = 0.5", "t_end = 0.5\ndt = 1.0"),
            &FLOW.replace("amplitude = 0.1", "amplitude = 0.1\nmax_mode = 20"),
        ];
        for text in cases {
            let err = RunConfig::parse(text).and_then(|c| c.resolve().map(|_| ()));
            assert!(matches!(err, Err(CliError::Config(_))), "{text}: {err:?}");
        }
    }

    #[test]
    fn spinor_labels_follow_spin_structure() {
        let init = InitialConfig::ExplicitModes {
            angle: vec![],
            spinor: vec![ModeEntry { k: 1, re: 1.0, im: 0.0 }],
        };
        let InitialData::ExplicitModes { spinor, .. } = init.to_initial_data(SpinStructure::Antiperiodic) else {
            unreachable!()
        };
        assert_eq!(spinor[0].0, 1.5);
    }
}
