//! `verify`, `simulate` and `compare`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use rabi_blocks::analytic::{concurrence_closed_form, sigma_z_closed_form, xx_closed_form, JcPrediction};
use rabi_blocks::hilbert::{spin_ops, tensor_embed, FockSpace, Operator, SpinKind};
use rabi_blocks::models::{
    build_chain_effective, build_chain_full, build_qutrit_effective, build_two_qubit_effective, build_two_qubit_full,
    build_two_qutrit_full, fictitious_space,
};
use rabi_blocks::symmetry::{
    commutator_norm, conserved_quantities, enumerate_subspaces, project_hamiltonian, qutrit_parity_sectors,
    verify_block_structure, ModelKind, SectorTag, SubspaceBasis, SYMMETRY_TOL,
};

use crate::config::{ClosedForm, ModelConfig, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_json, Table};
use crate::scenario::{closed_form_prediction, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_bool(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

/// What a command produced for one scenario.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub name: String,
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorCheck {
    pub name: String,
    pub norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorEntry {
    pub label: String,
    pub size: usize,
    /// Down spins in a chain representative.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionCheck {
    pub name: String,
    pub sector_count: usize,
    pub sectors: Vec<SectorEntry>,
    pub off_block_max: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionCheck {
    pub sector: String,
    pub max_abs_diff: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub model: String,
    pub n_max: usize,
    pub dim: usize,
    pub tolerance: f64,
    pub commutators: Vec<CommutatorCheck>,
    pub partitions: Vec<PartitionCheck>,
    pub projections: Vec<ProjectionCheck>,
    pub status: Status,
}

/// Runs the symmetry suite on the full Hamiltonian of the configured model
/// family, perturbation included.
pub fn verify_report(config: &ScenarioConfig) -> Result<VerifyReport> {
    config.validate()?;
    let fock = FockSpace::new(config.n_max)?;
    let (kind, label) = match &config.model {
        ModelConfig::TwoQubit { .. } => (ModelKind::TwoQubit, "two_qubit".to_string()),
        ModelConfig::TwoQutrit { .. } => (ModelKind::TwoQutrit, "two_qutrit".to_string()),
        ModelConfig::Chain { params, .. } => (
            ModelKind::Chain {
                n_spins: params.n_spins,
            },
            format!("chain(N={})", params.n_spins),
        ),
    };
    let space = kind.space(fock);
    let mut h = match &config.model {
        ModelConfig::TwoQubit { params, .. } => build_two_qubit_full(params, &space)?,
        ModelConfig::TwoQutrit { params, .. } => build_two_qutrit_full(params, &space)?,
        ModelConfig::Chain { params, .. } => build_chain_full(params, &space)?,
    };
    if let Some(p) = &config.perturbation {
        h = h + &(tensor_embed(&spin_ops(space.spins()[0]).x, 0, &space)? * p.spin1_x);
    }

    let commutators = conserved_quantities(kind, fock)?
        .into_iter()
        .map(|(name, c)| {
            let norm = commutator_norm(&h, &c)?;
            Ok(CommutatorCheck {
                name,
                norm,
                pass: norm <= SYMMETRY_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sectors = enumerate_subspaces(kind, fock)?;
    let mut partitions = vec![partition_check("sectors", &h, &sectors)?];
    if kind == ModelKind::TwoQutrit {
        partitions.push(partition_check("spin_parity", &h, &qutrit_parity_sectors(fock))?);
    }

    let mut projections = Vec::new();
    for basis in &sectors {
        let effective = match (&config.model, &basis.tag) {
            (ModelConfig::TwoQubit { params, .. }, SectorTag::TwoQubit(s)) => {
                build_two_qubit_effective(params, *s, &fictitious_space(SpinKind::Qubit, fock))?
            }
            (ModelConfig::TwoQutrit { params, .. }, SectorTag::QutritTotal(0)) => {
                build_qutrit_effective(params, &fictitious_space(SpinKind::Qutrit, fock))?
            }
            (ModelConfig::Chain { params, .. }, SectorTag::Chain(p)) => {
                build_chain_effective(params, p, &fictitious_space(SpinKind::Qubit, fock))?
            }
            _ => continue,
        };
        let diff = projection_diff(&h, basis, &effective)?;
        projections.push(ProjectionCheck {
            sector: basis.label.clone(),
            max_abs_diff: diff,
            pass: diff <= SYMMETRY_TOL,
        });
    }

    let pass =
        commutators.iter().all(|c| c.pass) && partitions.iter().all(|p| p.pass) && projections.iter().all(|p| p.pass);
    Ok(VerifyReport {
        scenario: config.name.clone(),
        model: label,
        n_max: config.n_max,
        dim: space.dim(),
        tolerance: SYMMETRY_TOL,
        commutators,
        partitions,
        projections,
        status: Status::from_bool(pass),
    })
}

fn partition_check(name: &str, h: &Operator, sectors: &[SubspaceBasis]) -> Result<PartitionCheck> {
    let report = verify_block_structure(h, sectors)?;
    Ok(PartitionCheck {
        name: name.to_string(),
        sector_count: sectors.len(),
        sectors: sectors
            .iter()
            .map(|b| SectorEntry {
                label: b.label.clone(),
                size: b.dim(),
                m: match &b.tag {
                    SectorTag::Chain(p) => Some(p.down_count()),
                    _ => None,
                },
            })
            .collect(),
        off_block_max: report.off_block_max,
        pass: report.pass,
    })
}

fn projection_diff(h: &Operator, basis: &SubspaceBasis, effective: &Operator) -> Result<f64> {
    Ok(project_hamiltonian(h, basis)?.max_abs_diff(effective)?)
}

pub fn verify(config: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    let report = verify_report(config)?;
    let path = ensure_dir(out_dir)?.join(format!("{}_verify.json", config.name));
    write_json(&path, &report)?;
    let failed: Vec<&str> = report
        .commutators
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .chain(report.partitions.iter().filter(|p| !p.pass).map(|p| p.name.as_str()))
        .chain(report.projections.iter().filter(|p| !p.pass).map(|p| p.sector.as_str()))
        .collect();
    let summary = if failed.is_empty() {
        format!(
            "{} sectors, off-block max {:.3e}",
            report.partitions[0].sector_count, report.partitions[0].off_block_max
        )
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Ok(Outcome {
        name: config.name.clone(),
        status: report.status,
        files: vec![path],
        summary,
    })
}

/// Propagates the scenario and returns its CSV table.
pub fn simulate_table(config: &ScenarioConfig) -> Result<Table> {
    let scenario = Scenario::prepare(config)?;
    Ok(Table::from_run(&scenario.run()?))
}

pub fn simulate(config: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    let table = simulate_table(config)?;
    let path = ensure_dir(out_dir)?.join(format!("{}.csv", config.name));
    table.write_csv(&path)?;
    Ok(Outcome {
        name: config.name.clone(),
        status: Status::Pass,
        summary: format!("{} rows, {} columns", table.rows(), table.headers.len()),
        files: vec![path],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub series: String,
    pub closed_form: ClosedForm,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub samples: usize,
    pub max_abs: f64,
    pub rms: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub scenario: String,
    pub pairs: Vec<PairReport>,
    pub status: Status,
}

/// Numeric table, closed-form table and the deviation report.
pub fn compare_tables(config: &ScenarioConfig) -> Result<(Table, Table, CompareReport)> {
    let prediction = closed_form_prediction(config)?;
    if config.compare.is_empty() {
        return Err(CliError::config(format!("{} lists no [[compare]] pairs", config.name)));
    }
    let numeric = simulate_table(config)?;
    let tau = numeric.column("tau").expect("closed-form scenarios carry tau").to_vec();

    let mut analytic = Table::default();
    analytic.push("t", numeric.column("t").expect("t column").to_vec());
    analytic.push("tau", tau.clone());
    let mut pairs = Vec::new();
    for pair in &config.compare {
        let values = numeric
            .column(&pair.series)
            .ok_or_else(|| CliError::config(format!("{} has no column {:?}", config.name, pair.series)))?;
        if analytic.column(pair.closed_form.column()).is_none() {
            analytic.push(
                pair.closed_form.column(),
                evaluate(&prediction, pair.closed_form, &tau)?,
            );
        }
        let reference = analytic.column(pair.closed_form.column()).expect("just added");
        let (lo, hi) = pair
            .window
            .map_or((f64::NEG_INFINITY, f64::INFINITY), |[lo, hi]| (lo, hi));
        let deviations: Vec<f64> = (0..tau.len())
            .filter(|&k| tau[k] >= lo && tau[k] <= hi)
            .map(|k| (values[k] - reference[k]).abs())
            .collect();
        if deviations.is_empty() {
            return Err(CliError::config(format!("window of {} holds no samples", pair.series)));
        }
        let max_abs = deviations.iter().copied().fold(0.0, f64::max);
        let rms = (deviations.iter().map(|d| d * d).sum::<f64>() / deviations.len() as f64).sqrt();
        pairs.push(PairReport {
            series: pair.series.clone(),
            closed_form: pair.closed_form,
            tolerance: pair.tolerance,
            window: pair.window,
            samples: deviations.len(),
            max_abs,
            rms,
            pass: max_abs <= pair.tolerance,
        });
    }
    let status = Status::from_bool(pairs.iter().all(|p| p.pass));
    let report = CompareReport {
        scenario: config.name.clone(),
        pairs,
        status,
    };
    Ok((numeric, analytic, report))
}

fn evaluate(pred: &JcPrediction, form: ClosedForm, tau: &[f64]) -> Result<Vec<f64>> {
    let f = match form {
        ClosedForm::SigmaZ => sigma_z_closed_form,
        ClosedForm::Xx => xx_closed_form,
        ClosedForm::Concurrence => concurrence_closed_form,
    };
    Ok(tau
        .iter()
        .map(|&t| f(pred, t))
        .collect::<rabi_blocks::Result<Vec<_>>>()?)
}

pub fn compare(config: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    let (numeric, analytic, report) = compare_tables(config)?;
    let dir = ensure_dir(out_dir)?;
    let csv = dir.join(format!("{}.csv", config.name));
    let analytic_csv = dir.join(format!("{}_analytic.csv", config.name));
    let json = dir.join(format!("{}_compare.json", config.name));
    numeric.write_csv(&csv)?;
    analytic.write_csv(&analytic_csv)?;
    write_json(&json, &report)?;
    let summary = report
        .pairs
        .iter()
        .map(|p| {
            format!(
                "{} vs {}: max {:.3e} (tol {:.0e})",
                p.series,
                p.closed_form.column(),
                p.max_abs,
                p.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome {
        name: config.name.clone(),
        status: report.status,
        files: vec![csv, analytic_csv, json],
        summary,
    })
}
