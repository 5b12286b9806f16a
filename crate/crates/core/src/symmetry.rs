//! Constants of motion, invariant sectors and block extraction.
//!
//! [`project_hamiltonian`] is the reference against which every effective
//! builder in [`crate::models`] is checked.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{embed_product, spin_ops, tensor_embed, CompositeSpace, FockSpace, Operator, SpinKind};
use crate::models::{chain_space, fictitious_space, two_qubit_space, two_qutrit_space, Sector, SpinPattern};
use crate::C64;

/// Tolerance for exact-symmetry checks (commutators, off-block elements, projections).
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Model family, with the chain length where it matters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    TwoQubit,
    TwoQutrit,
    Chain { n_spins: usize },
}

impl ModelKind {
    pub fn space(self, fock: FockSpace) -> CompositeSpace {
        match self {
            ModelKind::TwoQubit => two_qubit_space(fock),
            ModelKind::TwoQutrit => two_qutrit_space(fock),
            ModelKind::Chain { n_spins } => chain_space(n_spins, fock),
        }
    }
}

/// What a sector is labeled by.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SectorTag {
    TwoQubit(Sector),
    /// Eigenvalue of `S1z + S2z`.
    QutritTotal(i32),
    /// `S1z + S2z` mod 2.
    QutritParity(i32),
    /// Representative pattern (first spin up); the sector also holds its flip.
    Chain(SpinPattern),
}

/// One dynamically invariant subspace: an ordered list of spin levels, each
/// listing its composite-basis indices over all photon numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceBasis {
    pub label: String,
    pub tag: SectorTag,
    pub levels: Vec<Vec<usize>>,
}

impl SubspaceBasis {
    fn from_spin_levels(label: String, tag: SectorTag, space: &CompositeSpace, spin_levels: &[usize]) -> Self {
        let fock = space.mode().expect("model spaces carry a mode");
        let levels = spin_levels
            .iter()
            .map(|&s| (0..fock.dim()).map(|n| space.compose(s, n)).collect())
            .collect();
        Self { label, tag, levels }
    }

    /// All indices, level-major.
    pub fn indices(&self) -> Vec<usize> {
        self.levels.iter().flatten().copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Coordinates of `v` in this subspace (level-major).
    pub fn restrict_vector(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        let idx = self.indices();
        check_indices(&idx, v.len())?;
        Ok(DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i])))
    }

    /// Inverse of [`Self::restrict_vector`], zero outside the subspace.
    pub fn lift_vector(&self, coords: &DVector<C64>, dim: usize) -> Result<DVector<C64>> {
        let idx = self.indices();
        check_indices(&idx, dim)?;
        if coords.len() != idx.len() {
            return Err(Error::DimensionMismatch {
                expected: idx.len(),
                found: coords.len(),
            });
        }
        let mut v = DVector::zeros(dim);
        for (k, &i) in idx.iter().enumerate() {
            v[i] = coords[k];
        }
        Ok(v)
    }
}

fn check_indices(idx: &[usize], dim: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= dim) {
        Some(&index) => Err(Error::IndexOutOfRange { index, dim }),
        None => Ok(()),
    }
}

/// `max |HC - CH|`.
///
/// When either operand is diagonal the commutator is formed entrywise as
/// `H_ij (c_j - c_i)`, avoiding two dense products.
pub fn commutator_norm(h: &Operator, c: &Operator) -> Result<f64> {
    if h.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: c.dim(),
        });
    }
    h.require_same_space(c.space())?;
    let (dense, diag, sign) = if c.is_diagonal() {
        (h, c, 1.0)
    } else if h.is_diagonal() {
        (c, h, -1.0)
    } else {
        let (a, b) = (h.matrix(), c.matrix());
        let comm = a * b - b * a;
        return Ok(comm.iter().fold(0.0_f64, |m, z| m.max(z.norm())));
    };
    let d: Vec<C64> = (0..diag.dim()).map(|i| diag.matrix()[(i, i)]).collect();
    let m = dense.matrix();
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z != C64::new(0.0, 0.0) {
                worst = worst.max((z * (d[j] - d[i]) * sign).norm());
            }
        }
    }
    Ok(worst)
}

/// The invariant sectors of a model.
///
/// Two qubits: sectors a and b. Two qutrits: one sector per eigenvalue of
/// `S1z + S2z` (+2 down to -2). Chain of `N`: `2^(N-1)` pattern pairs.
pub fn enumerate_subspaces(model: ModelKind, fock: FockSpace) -> Result<Vec<SubspaceBasis>> {
    let space = model.space(fock);
    match model {
        ModelKind::TwoQubit => Ok(vec![
            SubspaceBasis::from_spin_levels("a".into(), SectorTag::TwoQubit(Sector::A), &space, &[0, 3]),
            SubspaceBasis::from_spin_levels("b".into(), SectorTag::TwoQubit(Sector::B), &space, &[1, 2]),
        ]),
        ModelKind::TwoQutrit => Ok((-2..=2)
            .rev()
            .map(|total| {
                let levels: Vec<usize> = (0..9).filter(|s| qutrit_total(*s) == total).collect();
                SubspaceBasis::from_spin_levels(
                    format!("Sz_tot={total:+}"),
                    SectorTag::QutritTotal(total),
                    &space,
                    &levels,
                )
            })
            .collect()),
        ModelKind::Chain { n_spins } => {
            if n_spins == 0 || n_spins > crate::models::MAX_CHAIN_SPINS {
                return Err(Error::UnsupportedModel(format!("chain of {n_spins} spins")));
            }
            Ok((0..1usize << (n_spins - 1))
                .map(|bits| {
                    let p = SpinPattern::from_bits(n_spins, bits);
                    let q = p.flipped();
                    SubspaceBasis::from_spin_levels(
                        format!("{p}|{q}"),
                        SectorTag::Chain(p.clone()),
                        &space,
                        &[p.bits(), q.bits()],
                    )
                })
                .collect())
        }
    }
}

/// `S1z + S2z` of a two-qutrit spin index (qutrit levels 0, 1, 2 carry +1, 0, -1).
fn qutrit_total(spin_index: usize) -> i32 {
    2 - (spin_index / 3) as i32 - (spin_index % 3) as i32
}

/// The two sectors of even and odd `S1z + S2z`, which the exchange term
/// `S1x S2x` cannot connect.
pub fn qutrit_parity_sectors(fock: FockSpace) -> Vec<SubspaceBasis> {
    let space = two_qutrit_space(fock);
    [("parity=even", 0), ("parity=odd", 1)]
        .into_iter()
        .map(|(label, parity)| {
            let levels: Vec<usize> = (0..9).filter(|s| qutrit_total(*s).rem_euclid(2) == parity).collect();
            SubspaceBasis::from_spin_levels(label.into(), SectorTag::QutritParity(parity), &space, &levels)
        })
        .collect()
}

/// Named commutants claimed for each model.
///
/// Two qubits: `s1z s2z`. Two qutrits: `S1z + S2z` and the spin parity
/// `exp(i pi (S1z + S2z))`. Chain: `s_i^z s_j^z` for every pair.
pub fn conserved_quantities(model: ModelKind, fock: FockSpace) -> Result<Vec<(String, Operator)>> {
    let space = model.space(fock);
    match model {
        ModelKind::TwoQubit => {
            let z = spin_ops(SpinKind::Qubit).z;
            Ok(vec![(
                "sigma1z*sigma2z".into(),
                embed_product(&[(0, &z), (1, &z)], &space)?,
            )])
        }
        ModelKind::TwoQutrit => {
            let z = spin_ops(SpinKind::Qutrit).z;
            let total = tensor_embed(&z, 0, &space)? + tensor_embed(&z, 1, &space)?;
            let parity: Vec<f64> = (0..space.dim())
                .map(|i| {
                    if qutrit_total(i / fock.dim()).rem_euclid(2) == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            Ok(vec![
                ("Sz_tot".into(), total),
                ("spin_parity".into(), Operator::from_diagonal(&space, &parity)?),
            ])
        }
        ModelKind::Chain { n_spins } => {
            let z = spin_ops(SpinKind::Qubit).z;
            let mut out = Vec::new();
            for i in 0..n_spins {
                for j in i + 1..n_spins {
                    let op = embed_product(&[(i, &z), (j, &z)], &space)?;
                    out.push((format!("sigma{}z*sigma{}z", i + 1, j + 1), op));
                }
            }
            Ok(out)
        }
    }
}

/// Restriction `P^dagger H P` of `h` to the subspace, in the basis order of
/// `basis`. The result lives on `spin ⊗ mode` where the spin has as many
/// levels as the basis (a bare mode for a single level).
pub fn project_hamiltonian(h: &Operator, basis: &SubspaceBasis) -> Result<Operator> {
    let idx = basis.indices();
    check_indices(&idx, h.dim())?;
    let fock = h.space().mode().ok_or_else(|| Error::SpaceShape {
        expected: "spins ⊗ fock".into(),
        found: h.space().to_string(),
    })?;
    if basis.levels.iter().any(|l| l.len() != fock.dim()) {
        return Err(Error::InvalidArgument(format!(
            "every level of sector {} must span all {} photon numbers",
            basis.label,
            fock.dim()
        )));
    }
    let space = match basis.n_levels() {
        1 => CompositeSpace::single(crate::hilbert::Factor::Mode(fock)),
        2 => fictitious_space(SpinKind::Qubit, fock),
        3 => fictitious_space(SpinKind::Qutrit, fock),
        n => {
            return Err(Error::UnsupportedModel(format!(
                "sector {} has {n} levels; projections support at most 3",
                basis.label
            )))
        }
    };
    let m = h.matrix();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
    Operator::new(block, space)
}

/// Outcome of [`verify_block_structure`].
#[derive(Clone, Debug, PartialEq)]
pub struct BlockReport {
    /// `(label, dimension)` per sector.
    pub sectors: Vec<(String, usize)>,
    /// Largest `|<u|H|v>|` with `u`, `v` in different sectors.
    pub off_block_max: f64,
    pub pass: bool,
}

/// Checks that `sectors` partition the space and that `h` has no elements
/// connecting different sectors beyond [`SYMMETRY_TOL`].
pub fn verify_block_structure(h: &Operator, sectors: &[SubspaceBasis]) -> Result<BlockReport> {
    let dim = h.dim();
    let mut owner = vec![usize::MAX; dim];
    for (s, basis) in sectors.iter().enumerate() {
        for i in basis.indices() {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            if owner[i] != usize::MAX {
                return Err(Error::NotAPartition(format!("index {i} belongs to two sectors")));
            }
            owner[i] = s;
        }
    }
    if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::NotAPartition(format!("index {i} belongs to no sector")));
    }
    let m = h.matrix();
    let mut off_block_max = 0.0_f64;
    for c in 0..dim {
        for r in 0..dim {
            if owner[r] != owner[c] {
                off_block_max = off_block_max.max(m[(r, c)].norm());
            }
        }
    }
    Ok(BlockReport {
        sectors: sectors.iter().map(|b| (b.label.clone(), b.dim())).collect(),
        off_block_max,
        pass: off_block_max <= SYMMETRY_TOL,
    })
}
