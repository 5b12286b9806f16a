//! Turns a [`ScenarioConfig`] into operators, an initial state and a time grid.

use std::sync::Arc;

use nalgebra::DVector;
use rabi_blocks::analytic::JcPrediction;
use rabi_blocks::dynamics::{diagonalize, sample_trajectory, Frame, Observable, Trajectory, TrajectoryRequest};
use rabi_blocks::hilbert::{
    coherent_amplitudes, embed_product, number_op, spin_ops, tensor_embed, CompositeSpace, FockSpace, Operator,
    SpinKind, StateVector,
};
use rabi_blocks::models::{
    build_chain_effective, build_chain_full, build_qutrit_effective, build_qutrit_jc, build_two_qubit_effective,
    build_two_qubit_full, build_two_qubit_jc, chain_space, fictitious_space, jc_frame_rotation, two_qubit_space,
    two_qutrit_space, Sector, SpinPattern,
};
use rabi_blocks::symmetry::{enumerate_subspaces, ModelKind};
use rabi_blocks::C64;

use crate::config::{
    ChainHamiltonian, InitialState, ModelConfig, QutritHamiltonian, ScenarioConfig, TauScale, TwoQubitHamiltonian,
};
use crate::error::{CliError, Result};

/// A validated scenario, ready to propagate.
#[derive(Debug)]
pub struct Scenario {
    config: ScenarioConfig,
    hamiltonian: Operator,
    psi0: StateVector,
    observables: Vec<Observable>,
    confinement: Option<Vec<usize>>,
    tau_scale: Option<f64>,
    omega_t: Option<f64>,
    grid: Vec<f64>,
}

/// Sampled trajectory plus the optional `omega_t` column.
#[derive(Clone, Debug)]
pub struct Run {
    pub trajectory: Trajectory,
    pub omega_t: Option<Vec<f64>>,
}

impl Scenario {
    pub fn prepare(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let fock = FockSpace::new(config.n_max)?;
        let space = model_space(&config.model, fock)?;
        let mut hamiltonian = build_hamiltonian(&config.model, &space)?;
        if let Some(p) = &config.perturbation {
            let kind = space.spins()[0];
            hamiltonian = hamiltonian + &(tensor_embed(&spin_ops(kind).x, 0, &space)? * p.spin1_x);
        }
        let psi0 = initial_state(config, &space)?;

        let catalog = observable_catalog(&config.model, &space)?;
        let wanted: Vec<String> = if config.output.observables.is_empty() {
            catalog.iter().map(|(name, _)| name.clone()).collect()
        } else {
            config.output.observables.clone()
        };
        let lookup = |name: &str| -> Result<&Operator> {
            catalog
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, op)| op)
                .ok_or_else(|| {
                    let known: Vec<&str> = catalog.iter().map(|(n, _)| n.as_str()).collect();
                    CliError::config(format!(
                        "unknown observable {name:?}; this model defines {}",
                        known.join(", ")
                    ))
                })
        };
        let mut observables = Vec::new();
        for name in &wanted {
            observables.push(Observable::new(name.clone(), lookup(name)?)?);
        }
        if !config.output.rotating.is_empty() {
            let generator = frame_generator(&config.model, &space)?;
            let frame = Arc::new(Frame::new(&generator)?);
            for name in &config.output.rotating {
                let obs = Observable::new(format!("{name}_rot"), lookup(name)?)?;
                observables.push(obs.in_frame(Arc::clone(&frame))?);
            }
        }

        let confinement = match symmetry_kind(&config.model) {
            Some(kind) => Some(occupied_sectors(kind, fock, &psi0)?),
            None => None,
        };
        let tau_scale = match config.grid.tau {
            Some(scale) => Some(tau_rate(config, scale)?),
            None => None,
        };
        let t_max = match (config.grid.t_max, config.grid.tau_max, tau_scale) {
            (Some(t), _, _) => t,
            (None, Some(tau), Some(rate)) if rate != 0.0 => tau / rate.abs(),
            _ => return Err(CliError::config("tau_max needs a nonzero tau rate; use t_max instead")),
        };
        let n = config.grid.points;
        let grid = (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect();
        let omega_t = match &config.model {
            ModelConfig::TwoQutrit { params, .. } => Some(params.omega),
            _ => None,
        };
        Ok(Self {
            config: config.clone(),
            hamiltonian,
            psi0,
            observables,
            confinement,
            tau_scale,
            omega_t,
            grid,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Composite indices of the sectors the initial state occupies, for full models.
    pub fn confinement(&self) -> Option<&[usize]> {
        self.confinement.as_deref()
    }

    pub fn tau_scale(&self) -> Option<f64> {
        self.tau_scale
    }

    pub fn run(&self) -> Result<Run> {
        let prop = diagonalize(&self.hamiltonian)?;
        let request = TrajectoryRequest {
            observables: &self.observables,
            hamiltonian: Some(&self.hamiltonian),
            confinement: self.confinement.as_deref(),
            tau_scale: self.tau_scale,
        };
        let trajectory = sample_trajectory(&prop, &self.psi0, &self.grid, &request)?;
        let omega_t = self.omega_t.map(|w| self.grid.iter().map(|t| w * t).collect());
        Ok(Run { trajectory, omega_t })
    }
}

pub fn model_space(model: &ModelConfig, fock: FockSpace) -> Result<CompositeSpace> {
    Ok(match model {
        ModelConfig::TwoQubit {
            hamiltonian: TwoQubitHamiltonian::Full,
            ..
        } => two_qubit_space(fock),
        ModelConfig::TwoQubit { .. } => fictitious_space(SpinKind::Qubit, fock),
        ModelConfig::TwoQutrit {
            hamiltonian: QutritHamiltonian::Full,
            ..
        } => two_qutrit_space(fock),
        ModelConfig::TwoQutrit { .. } => fictitious_space(SpinKind::Qutrit, fock),
        ModelConfig::Chain {
            hamiltonian: ChainHamiltonian::Full,
            params,
            ..
        } => chain_space(params.n_spins, fock),
        ModelConfig::Chain { .. } => fictitious_space(SpinKind::Qubit, fock),
    })
}

pub fn build_hamiltonian(model: &ModelConfig, space: &CompositeSpace) -> Result<Operator> {
    Ok(match model {
        ModelConfig::TwoQubit { hamiltonian, params } => match hamiltonian {
            TwoQubitHamiltonian::Full => build_two_qubit_full(params, space)?,
            TwoQubitHamiltonian::SectorA => build_two_qubit_effective(params, Sector::A, space)?,
            TwoQubitHamiltonian::SectorB => build_two_qubit_effective(params, Sector::B, space)?,
            TwoQubitHamiltonian::Jc => build_two_qubit_jc(params, space)?,
        },
        ModelConfig::TwoQutrit { hamiltonian, params } => match hamiltonian {
            QutritHamiltonian::Full => rabi_blocks::models::build_two_qutrit_full(params, space)?,
            QutritHamiltonian::Effective => build_qutrit_effective(params, space)?,
            QutritHamiltonian::Jc => build_qutrit_jc(params, space)?,
        },
        ModelConfig::Chain {
            hamiltonian,
            pattern,
            params,
        } => match hamiltonian {
            ChainHamiltonian::Full => {
                if pattern.is_some() {
                    return Err(CliError::config("pattern only applies to the effective chain model"));
                }
                build_chain_full(params, space)?
            }
            ChainHamiltonian::Effective => {
                let pattern = pattern
                    .as_deref()
                    .ok_or_else(|| CliError::config("the effective chain model needs a pattern"))?;
                build_chain_effective(params, &parse_pattern(pattern)?, space)?
            }
        },
    })
}

/// Model family for the symmetry suite; `None` for effective models.
pub fn symmetry_kind(model: &ModelConfig) -> Option<ModelKind> {
    match model {
        ModelConfig::TwoQubit {
            hamiltonian: TwoQubitHamiltonian::Full,
            ..
        } => Some(ModelKind::TwoQubit),
        ModelConfig::TwoQutrit {
            hamiltonian: QutritHamiltonian::Full,
            ..
        } => Some(ModelKind::TwoQutrit),
        ModelConfig::Chain {
            hamiltonian: ChainHamiltonian::Full,
            params,
            ..
        } => Some(ModelKind::Chain {
            n_spins: params.n_spins,
        }),
        _ => None,
    }
}

/// `u`/`d` string to a pattern.
pub fn parse_pattern(text: &str) -> Result<SpinPattern> {
    let signs = text
        .chars()
        .map(|c| match c {
            'u' => Ok(1),
            'd' => Ok(-1),
            _ => Err(CliError::config(format!(
                "pattern {text:?} may only contain 'u' and 'd'"
            ))),
        })
        .collect::<Result<Vec<i8>>>()?;
    Ok(SpinPattern::new(signs)?)
}

fn spin_level(kind: SpinKind, label: &str) -> Result<usize> {
    let level = match (kind, label) {
        (SpinKind::Qubit, "up") => 0,
        (SpinKind::Qubit, "down") => 1,
        (SpinKind::Qutrit, "+1") => 0,
        (SpinKind::Qutrit, "0") => 1,
        (SpinKind::Qutrit, "-1") => 2,
        (SpinKind::Qubit, _) => return Err(CliError::config(format!("qubit level {label:?} is not up or down"))),
        (SpinKind::Qutrit, _) => return Err(CliError::config(format!("qutrit level {label:?} is not +1, 0 or -1"))),
    };
    Ok(level)
}

fn spin_index(space: &CompositeSpace, labels: &[String]) -> Result<usize> {
    let kinds = space.spins();
    if labels.len() != kinds.len() {
        return Err(CliError::config(format!(
            "initial state lists {} spins, the model has {}",
            labels.len(),
            kinds.len()
        )));
    }
    let mut index = 0;
    for (kind, label) in kinds.iter().zip(labels) {
        index = index * kind.dim() + spin_level(*kind, label)?;
    }
    Ok(index)
}

fn initial_state(config: &ScenarioConfig, space: &CompositeSpace) -> Result<StateVector> {
    let (re, im) = config.initial_state.alpha();
    let mode = DVector::from_vec(coherent_amplitudes(C64::new(re, im), config.n_max)?);
    let mut spin = DVector::from_element(space.spin_dim(), C64::new(0.0, 0.0));
    let rotate = match &config.initial_state {
        InitialState::Pattern { spins, rotated, .. } => {
            spin[spin_index(space, spins)?] = C64::new(1.0, 0.0);
            *rotated
        }
        InitialState::Amplitudes { terms, .. } => {
            if terms.is_empty() {
                return Err(CliError::config("amplitude list is empty"));
            }
            for term in terms {
                spin[spin_index(space, &term.spins)?] += C64::new(term.re, term.im);
            }
            false
        }
    };
    if spin.norm() == 0.0 {
        return Err(CliError::config("spin amplitudes have zero norm"));
    }
    let psi = StateVector::product(space, &spin, &mode)?;
    if !rotate {
        return Ok(psi);
    }
    let r = jc_frame_rotation(space).map_err(|_| CliError::config("rotated initial states need a single qubit"))?;
    Ok(StateVector::new(r.apply(&psi)?, space.clone())?)
}

/// Named observables a model defines.
pub fn observable_catalog(model: &ModelConfig, space: &CompositeSpace) -> Result<Vec<(String, Operator)>> {
    let fock = space.mode().expect("model spaces carry a mode");
    let mode_slot = space.len() - 1;
    let n = tensor_embed(&number_op(fock), mode_slot, space)?;
    let q = spin_ops(SpinKind::Qubit);
    let t = spin_ops(SpinKind::Qutrit);
    let mut out: Vec<(String, Operator)> = match model {
        ModelConfig::TwoQubit {
            hamiltonian: TwoQubitHamiltonian::Full,
            ..
        } => vec![
            ("sigma1z".into(), tensor_embed(&q.z, 0, space)?),
            ("sigma2z".into(), tensor_embed(&q.z, 1, space)?),
            ("sigma1x".into(), tensor_embed(&q.x, 0, space)?),
            ("sigma2x".into(), tensor_embed(&q.x, 1, space)?),
            ("sxx".into(), embed_product(&[(0, &q.x), (1, &q.x)], space)?),
        ],
        ModelConfig::TwoQutrit {
            hamiltonian: QutritHamiltonian::Full,
            ..
        } => vec![
            ("Sigma1z".into(), tensor_embed(&t.z, 0, space)?),
            ("Sigma2z".into(), tensor_embed(&t.z, 1, space)?),
            ("Sigma1x".into(), tensor_embed(&t.x, 0, space)?),
            ("Sigma2x".into(), tensor_embed(&t.x, 1, space)?),
            ("SxSx".into(), embed_product(&[(0, &t.x), (1, &t.x)], space)?),
        ],
        ModelConfig::TwoQutrit { .. } => vec![
            ("Sigma_z".into(), tensor_embed(&t.z, 0, space)?),
            ("Sigma_x".into(), tensor_embed(&t.x, 0, space)?),
        ],
        ModelConfig::Chain {
            hamiltonian: ChainHamiltonian::Full,
            params,
            ..
        } => {
            let mut v = Vec::new();
            for k in 0..params.n_spins {
                v.push((format!("sigma{}z", k + 1), tensor_embed(&q.z, k, space)?));
            }
            let flips: Vec<(usize, &Operator)> = (0..params.n_spins).map(|k| (k, &q.x)).collect();
            v.push(("flip".into(), embed_product(&flips, space)?));
            v
        }
        ModelConfig::TwoQubit { .. } | ModelConfig::Chain { .. } => vec![
            ("sigma_z".into(), tensor_embed(&q.z, 0, space)?),
            ("sigma_x".into(), tensor_embed(&q.x, 0, space)?),
            ("sigma_y".into(), tensor_embed(&q.y, 0, space)?),
        ],
    };
    out.push(("n".into(), n));
    Ok(out)
}

/// `omega (a^dagger a + s1x s2x)` for the full two-qubit model and
/// `omega (a^dagger a + s_x)` for its sector models.
pub fn frame_generator(model: &ModelConfig, space: &CompositeSpace) -> Result<Operator> {
    let fock = space.mode().expect("model spaces carry a mode");
    let n = tensor_embed(&number_op(fock), space.len() - 1, space)?;
    let x = spin_ops(SpinKind::Qubit).x;
    match model {
        ModelConfig::TwoQubit {
            hamiltonian: TwoQubitHamiltonian::Full,
            params,
        } => Ok((n + &embed_product(&[(0, &x), (1, &x)], space)?) * params.omega),
        ModelConfig::TwoQubit {
            hamiltonian: TwoQubitHamiltonian::SectorA | TwoQubitHamiltonian::SectorB,
            params,
        } => Ok((n + &tensor_embed(&x, 0, space)?) * params.omega),
        _ => Err(CliError::config(
            "a rotating frame is only defined for the two-qubit full and sector models",
        )),
    }
}

fn occupied_sectors(kind: ModelKind, fock: FockSpace, psi: &StateVector) -> Result<Vec<usize>> {
    let amps = psi.amplitudes();
    let mut inside = Vec::new();
    for sector in enumerate_subspaces(kind, fock)? {
        let idx = sector.indices();
        if idx.iter().any(|&i| amps[i].norm_sqr() > 0.0) {
            inside.extend(idx);
        }
    }
    inside.sort_unstable();
    Ok(inside)
}

fn tau_rate(config: &ScenarioConfig, scale: TauScale) -> Result<f64> {
    let unsupported = || CliError::config(format!("tau scale {scale:?} is not defined for this model"));
    Ok(match (scale, &config.model) {
        (TauScale::Omega, ModelConfig::TwoQubit { params, .. }) => params.omega,
        (TauScale::Omega, ModelConfig::TwoQutrit { params, .. }) => params.omega,
        (TauScale::Omega, ModelConfig::Chain { params, .. }) => params.omega,
        (TauScale::LambdaMinus, ModelConfig::TwoQubit { params, .. }) => params.effective().lam_minus,
        (TauScale::LambdaMinus, ModelConfig::TwoQutrit { params, .. }) => params.lam_minus(),
        (TauScale::LambdaPlus, ModelConfig::TwoQubit { params, .. }) => params.effective().lam_plus,
        (
            TauScale::DeltaEff,
            ModelConfig::Chain {
                hamiltonian,
                pattern,
                params,
            },
        ) => {
            let pattern = match (hamiltonian, pattern, &config.initial_state) {
                (ChainHamiltonian::Effective, Some(p), _) => parse_pattern(p)?,
                (ChainHamiltonian::Full, _, InitialState::Pattern { spins, .. }) => {
                    let letters: String = spins
                        .iter()
                        .map(|s| match s.as_str() {
                            "up" => Ok('u'),
                            "down" => Ok('d'),
                            other => Err(CliError::config(format!("qubit level {other:?} is not up or down"))),
                        })
                        .collect::<Result<_>>()?;
                    parse_pattern(&letters)?
                }
                _ => {
                    return Err(CliError::config(
                        "delta_eff needs a chain pattern or a pattern initial state",
                    ))
                }
            };
            params.effective(&pattern)?.delta_eff
        }
        _ => return Err(unsupported()),
    })
}

/// Closed-form predictions for the scenario, when it admits them: a two-qubit
/// run at `gamma = omega` and `eps1 = eps2`, real `alpha`, `tau = lambda_minus`,
/// starting from `|↑↓> ⊗ |alpha>` (full), `|↑>_b ⊗ |alpha>` (sector b) or its
/// rotated image (Jaynes-Cummings matrix).
pub fn closed_form_prediction(config: &ScenarioConfig) -> Result<JcPrediction> {
    let no = |why: &str| Err(CliError::NoClosedForm(format!("{}: {why}", config.name)));
    let ModelConfig::TwoQubit { hamiltonian, params } = &config.model else {
        return no("closed forms exist only for the two-qubit model");
    };
    let InitialState::Pattern {
        spins,
        alpha,
        alpha_im,
        rotated,
    } = &config.initial_state
    else {
        return no("closed forms need a spin-pattern initial state");
    };
    let spins: Vec<&str> = spins.iter().map(String::as_str).collect();
    let in_sector_a = *hamiltonian == TwoQubitHamiltonian::SectorA
        || (*hamiltonian == TwoQubitHamiltonian::Full && (spins == ["up", "up"] || spins == ["down", "down"]));
    if in_sector_a {
        return no("sector a (anisotropic Rabi model) has no closed form");
    }
    match hamiltonian {
        TwoQubitHamiltonian::Full if spins != ["up", "down"] || *rotated => {
            return no("the full-model closed forms start from |up,down>")
        }
        TwoQubitHamiltonian::SectorB if spins != ["up"] || *rotated => {
            return no("the sector-b closed forms start from the unrotated up state")
        }
        TwoQubitHamiltonian::Jc if spins != ["up"] || !*rotated => {
            return no("the Jaynes-Cummings closed forms start from the rotated up state")
        }
        _ => {}
    }
    if params.gamma != params.omega {
        return no("closed forms are resonant only (gamma = omega)");
    }
    if *hamiltonian != TwoQubitHamiltonian::Jc && params.eps1 != params.eps2 {
        return no("closed forms need eps1 = eps2");
    }
    if *alpha_im != 0.0 {
        return no("closed forms need a real alpha");
    }
    if config.grid.tau != Some(TauScale::LambdaMinus) {
        return no("closed forms are written in tau = lambda_minus * t");
    }
    if config.perturbation.is_some() {
        return no("perturbed Hamiltonians have no closed form");
    }
    if params.effective().lam_minus < 0.0 {
        return no("closed forms assume lam1 >= lam2");
    }
    Ok(JcPrediction::new(*alpha, params.effective().lam_minus, config.n_max)?)
}
