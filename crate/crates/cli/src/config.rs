//! Scenario files. One TOML document describes one run:
//!
//! ```toml
//! name = "fig1"
//! n_max = 127
//!
//! [model]
//! kind = "two_qubit"
//! hamiltonian = "full"
//!
//! [model.params]
//! omega = 1.0
//! eps1 = 0.5
//! eps2 = 0.5
//! gamma = 1.0
//! lam1 = 0.8
//! lam2 = 0.7999
//!
//! [initial_state]
//! kind = "pattern"
//! spins = ["up", "down"]
//! alpha = 7.0
//!
//! [grid]
//! points = 2000
//! tau_max = 48.0
//! tau = "lambda_minus"
//! ```

use serde::{Deserialize, Serialize};

use rabi_blocks::hilbert::{poisson_tail, required_n_max, COHERENT_TAIL_TOL};
use rabi_blocks::models::{ChainParams, TwoQubitParams, TwoQutritParams};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Also the stem of every output file.
    pub name: String,
    pub n_max: usize,
    pub model: ModelConfig,
    pub initial_state: InitialState,
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<ComparePair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    TwoQubit {
        hamiltonian: TwoQubitHamiltonian,
        params: TwoQubitParams,
    },
    TwoQutrit {
        hamiltonian: QutritHamiltonian,
        params: TwoQutritParams,
    },
    Chain {
        hamiltonian: ChainHamiltonian,
        /// Sector of an effective run, as a `u`/`d` string.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<String>,
        params: ChainParams,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoQubitHamiltonian {
    Full,
    SectorA,
    SectorB,
    /// Resonant-frame Jaynes-Cummings matrix of sector b.
    Jc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QutritHamiltonian {
    Full,
    Effective,
    Jc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainHamiltonian {
    Full,
    Effective,
}

/// Spin labels are `up`/`down` for qubits and `+1`/`0`/`-1` for qutrits,
/// one per spin factor of the model's space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `|spins> ⊗ |alpha>`.
    Pattern {
        spins: Vec<String>,
        alpha: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        alpha_im: f64,
        /// Apply the Jaynes-Cummings basis change to the fictitious qubit.
        #[serde(default, skip_serializing_if = "is_false")]
        rotated: bool,
    },
    /// `(sum_k c_k |spins_k>) ⊗ |alpha>`, normalized.
    Amplitudes {
        terms: Vec<AmplitudeTerm>,
        alpha: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        alpha_im: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeTerm {
    pub spins: Vec<String>,
    pub re: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// End of the grid in units of `tau`; needs `tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauScale>,
}

/// Rate that turns `t` into the dimensionless `tau` column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauScale {
    LambdaMinus,
    LambdaPlus,
    DeltaEff,
    Omega,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Empty means every observable the model defines.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<String>,
    /// Observables also written in the rotating frame, as `<name>_rot`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rotating: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparePair {
    /// CSV column of the numeric run.
    pub series: String,
    pub closed_form: ClosedForm,
    pub tolerance: f64,
    /// `[lo, hi]` in units of `tau`; the whole grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    SigmaZ,
    Xx,
    Concurrence,
}

impl ClosedForm {
    pub fn column(self) -> &'static str {
        match self {
            ClosedForm::SigmaZ => "sigma_z_closed",
            ClosedForm::Xx => "xx_closed",
            ClosedForm::Concurrence => "concurrence_closed",
        }
    }
}

/// Symmetry-breaking term added to the Hamiltonian, for negative controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    /// Coefficient of the first spin's `S_x`.
    pub spin1_x: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl InitialState {
    pub fn alpha(&self) -> (f64, f64) {
        match self {
            InitialState::Pattern { alpha, alpha_im, .. } | InitialState::Amplitudes { alpha, alpha_im, .. } => {
                (*alpha, *alpha_im)
            }
        }
    }
}

impl ScenarioConfig {
    /// Parses and runs the checks that need no model construction.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::config(format!("cannot serialize {}: {e}", self.name)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(CliError::config(format!(
                "name {:?} must be non-empty and use only letters, digits, '_' and '-'",
                self.name
            )));
        }
        if self.n_max == 0 {
            return Err(CliError::config("n_max must be at least 1"));
        }
        match &self.model {
            ModelConfig::TwoQubit { params, .. } => params.validate()?,
            ModelConfig::TwoQutrit { params, .. } => params.validate()?,
            ModelConfig::Chain { params, .. } => params.validate()?,
        }
        let (re, im) = self.initial_state.alpha();
        if !re.is_finite() || !im.is_finite() {
            return Err(CliError::config("alpha must be finite"));
        }
        let mean = re * re + im * im;
        if poisson_tail(mean, self.n_max) > COHERENT_TAIL_TOL {
            return Err(CliError::config(format!(
                "n_max = {} truncates the coherent state above {COHERENT_TAIL_TOL:.0e}; need n_max >= {}",
                self.n_max,
                required_n_max(mean, COHERENT_TAIL_TOL)
            )));
        }
        self.grid.validate()?;
        for pair in &self.compare {
            if !(pair.tolerance.is_finite() && pair.tolerance > 0.0) {
                return Err(CliError::config(format!(
                    "tolerance for {} must be positive",
                    pair.series
                )));
            }
            if let Some([lo, hi]) = pair.window {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(CliError::config(format!(
                        "window for {} must satisfy lo <= hi",
                        pair.series
                    )));
                }
            }
        }
        if let Some(p) = &self.perturbation {
            if !p.spin1_x.is_finite() {
                return Err(CliError::config("perturbation must be finite"));
            }
        }
        Ok(())
    }
}

impl GridConfig {
    fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(CliError::config(format!(
                "grid needs at least 2 points, got {}",
                self.points
            )));
        }
        let end = match (self.t_max, self.tau_max) {
            (Some(t), None) => t,
            (None, Some(tau)) => {
                if self.tau.is_none() {
                    return Err(CliError::config("tau_max needs a tau scale"));
                }
                tau
            }
            _ => return Err(CliError::config("grid needs exactly one of t_max and tau_max")),
        };
        if !(end.is_finite() && end > 0.0) {
            return Err(CliError::config(format!("grid end must be positive, got {end}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "tiny"
n_max = 20

[model]
kind = "two_qubit"
hamiltonian = "full"

[model.params]
omega = 1.0
eps1 = 0.5
eps2 = 0.5
gamma = 1.0
lam1 = 0.3
lam2 = 0.2

[initial_state]
kind = "pattern"
spins = ["up", "down"]
alpha = 1.5

[grid]
points = 11
t_max = 5.0
"#;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::from_toml_str(text, "test")
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.output, OutputConfig::default());
        assert!(c.compare.is_empty());
        assert_eq!(c.initial_state.alpha(), (1.5, 0.0));
        let again = parse(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("points = 11", "points = 11\nstep = 0.1");
        assert!(matches!(parse(&text), Err(CliError::Parse { .. })));
        let text = MINIMAL.replace("gamma = 1.0", "gamma = 1.0\ngama = 2.0");
        assert!(matches!(parse(&text), Err(CliError::Parse { .. })));
    }

    #[test]
    fn grid_needs_exactly_one_end() {
        let both = MINIMAL.replace("t_max = 5.0", "t_max = 5.0\ntau_max = 1.0\ntau = \"omega\"");
        assert!(matches!(parse(&both), Err(CliError::Config(_))));
        let tau_only = MINIMAL.replace("t_max = 5.0", "tau_max = 1.0");
        assert!(matches!(parse(&tau_only), Err(CliError::Config(_))));
        let one_point = MINIMAL.replace("points = 11", "points = 1");
        assert!(matches!(parse(&one_point), Err(CliError::Config(_))));
    }

    #[test]
    fn truncation_gate_reports_the_needed_cutoff() {
        let text = MINIMAL.replace("alpha = 1.5", "alpha = 7.0");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("need n_max >="), "{err}");
    }

    #[test]
    fn invalid_names_and_params() {
        assert!(parse(&MINIMAL.replace("\"tiny\"", "\"a/b\"")).is_err());
        assert!(parse(&MINIMAL.replace("omega = 1.0", "omega = -1.0")).is_err());
        let text = format!("{MINIMAL}\n[[compare]]\nseries = \"sxx\"\nclosed_form = \"xx\"\ntolerance = 0.0\n");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn closed_form_columns() {
        assert_eq!(ClosedForm::Xx.column(), "xx_closed");
        assert_eq!(ClosedForm::SigmaZ.column(), "sigma_z_closed");
    }
}
