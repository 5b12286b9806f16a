//! Exact propagation by eigendecomposition and observable evaluation.
//!
//! [`diagonalize`] splits a Hamiltonian into the connected components of its
//! nonzero pattern before diagonalizing, so every invariant sector (and any
//! finer structure such as excitation-number blocks) is handled separately.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{CompositeSpace, Operator, SpinKind, StateVector};
use crate::C64;

/// Tolerance for quantities that pass through propagation.
pub const PROPAGATION_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug)]
enum Vectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl Vectors {
    /// `V^dagger v`
    fn adjoint_mul(&self, v: &DVector<C64>) -> DVector<C64> {
        match self {
            Vectors::Real(m) => {
                let re = m.tr_mul(&v.map(|z| z.re));
                let im = m.tr_mul(&v.map(|z| z.im));
                DVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i]))
            }
            Vectors::Complex(m) => m.ad_mul(v),
        }
    }

    /// `V c`
    fn mul(&self, c: &DVector<C64>) -> DVector<C64> {
        match self {
            Vectors::Real(m) => {
                let re = m * c.map(|z| z.re);
                let im = m * c.map(|z| z.im);
                DVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i]))
            }
            Vectors::Complex(m) => m * c,
        }
    }

    fn column(&self, k: usize) -> DVector<C64> {
        match self {
            Vectors::Real(m) => m.column(k).map(|x| C64::new(x, 0.0)),
            Vectors::Complex(m) => m.column(k).into_owned(),
        }
    }
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: Vectors,
}

impl Block {
    fn gather(&self, v: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| v[i]))
    }
}

/// Eigendecomposition `H = V diag(E) V^dagger`, stored block by block.
#[derive(Clone, Debug)]
pub struct Propagator {
    space: CompositeSpace,
    blocks: Vec<Block>,
}

/// Connected components of the graph whose edges are the exact nonzeros of `m`.
fn components(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in 0..n {
        for r in 0..c {
            if m[(r, c)] != ZERO || m[(c, r)] != ZERO {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

fn diagonalize_block(m: &DMatrix<C64>, indices: Vec<usize>) -> Result<Block> {
    let k = indices.len();
    let failed = |_| Error::EigenFailed(k);
    let real = indices.iter().all(|&r| indices.iter().all(|&c| m[(r, c)].im == 0.0));
    // LAPACK reads the lower triangle only
    let (values, vectors) = if real {
        let sub = Array2::from_shape_fn((k, k).f(), |(r, c)| m[(indices[r], indices[c])].re);
        let (values, vectors) = sub.eigh(UPLO::Lower).map_err(failed)?;
        (values, Vectors::Real(DMatrix::from_fn(k, k, |r, c| vectors[[r, c]])))
    } else {
        let sub = Array2::from_shape_fn((k, k).f(), |(r, c)| m[(indices[r], indices[c])]);
        let (values, vectors) = sub.eigh(UPLO::Lower).map_err(failed)?;
        (values, Vectors::Complex(DMatrix::from_fn(k, k, |r, c| vectors[[r, c]])))
    };
    Ok(Block {
        indices,
        values: values.to_vec(),
        vectors,
    })
}

/// Hermitian eigendecomposition of `h`; errors on non-hermitian input.
pub fn diagonalize(h: &Operator) -> Result<Propagator> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: h.hermiticity_error(),
        });
    }
    let m = h.matrix();
    let blocks = components(m)
        .into_par_iter()
        .map(|idx| diagonalize_block(m, idx))
        .collect::<Result<Vec<_>>>()?;
    Ok(Propagator {
        space: h.space().clone(),
        blocks,
    })
}

impl Propagator {
    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Sizes of the independent blocks found in the Hamiltonian.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    fn order(&self) -> Vec<(usize, usize)> {
        let mut order: Vec<(usize, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(b, block)| (0..block.values.len()).map(move |k| (b, k)))
            .collect();
        order.sort_by(|x, y| self.blocks[x.0].values[x.1].total_cmp(&self.blocks[y.0].values[y.1]));
        order
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.order().iter().map(|&(b, k)| self.blocks[b].values[k]).collect()
    }

    /// Dense eigenvector matrix, columns in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut v = DMatrix::zeros(dim, dim);
        for (col, (b, k)) in self.order().into_iter().enumerate() {
            let block = &self.blocks[b];
            let column = block.vectors.column(k);
            for (local, &row) in block.indices.iter().enumerate() {
                v[(row, col)] = column[local];
            }
        }
        v
    }

    /// `exp(-i H t) v` for an arbitrary vector.
    pub fn apply_exp(&self, v: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let mut out = DVector::zeros(v.len());
        for block in &self.blocks {
            let coeffs = block.vectors.adjoint_mul(&block.gather(v));
            scatter_phased(block, &coeffs, t, &mut out);
        }
        Ok(out)
    }

    /// Precomputes the spectral coefficients of `psi0` for repeated evaluation.
    pub fn spectral(&self, psi0: &StateVector) -> Result<Spectral<'_>> {
        if psi0.space() != &self.space {
            return Err(Error::SpaceMismatch(format!("{} vs {}", psi0.space(), self.space)));
        }
        let parts = self
            .blocks
            .iter()
            .filter_map(|block| {
                let local = block.gather(psi0.amplitudes());
                // blocks the state never touches stay empty for all times
                if local.iter().all(|z| *z == ZERO) {
                    None
                } else {
                    Some((block, block.vectors.adjoint_mul(&local)))
                }
            })
            .collect();
        Ok(Spectral { prop: self, parts })
    }
}

fn scatter_phased(block: &Block, coeffs: &DVector<C64>, t: f64, out: &mut DVector<C64>) {
    let phased = DVector::from_fn(coeffs.len(), |k, _| {
        coeffs[k] * C64::from_polar(1.0, -block.values[k] * t)
    });
    let local = block.vectors.mul(&phased);
    for (k, &i) in block.indices.iter().enumerate() {
        out[i] = local[k];
    }
}

/// A state expanded in the eigenbasis of a [`Propagator`].
pub struct Spectral<'a> {
    prop: &'a Propagator,
    parts: Vec<(&'a Block, DVector<C64>)>,
}

impl Spectral<'_> {
    /// `psi(t) = V exp(-i E t) V^dagger psi0`.
    pub fn at(&self, t: f64) -> StateVector {
        let mut out = DVector::zeros(self.prop.dim());
        for (block, coeffs) in &self.parts {
            scatter_phased(block, coeffs, t, &mut out);
        }
        StateVector::from_raw(out, self.prop.space.clone())
    }
}

/// `exp(-i H t) psi0`.
pub fn evolve(prop: &Propagator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    Ok(prop.spectral(psi0)?.at(t))
}

/// Nonzero entries of an operator, for fast repeated expectation values.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    entries: Vec<(usize, usize, C64)>,
    dim: usize,
}

impl SparseOperator {
    pub fn from_operator(op: &Operator) -> Self {
        let m = op.matrix();
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if z != ZERO {
                    entries.push((r, c, z));
                }
            }
        }
        Self {
            entries,
            dim: m.nrows(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `<v|M|v>`
    pub fn sandwich(&self, v: &DVector<C64>) -> C64 {
        debug_assert_eq!(v.len(), self.dim);
        self.entries.iter().map(|&(r, c, z)| v[r].conj() * z * v[c]).sum()
    }
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > PROPAGATION_TOL {
        return Err(Error::NonRealExpectation { imag: z.im });
    }
    Ok(z.re)
}

/// `<psi|op|psi>` for a hermitian operator.
pub fn expectation(op: &Operator, psi: &StateVector) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: op.hermiticity_error(),
        });
    }
    let v = op.apply(psi)?;
    real_part(psi.amplitudes().dotc(&v))
}

/// Frame rotating with a hermitian generator `G`: states are mapped to
/// `exp(i G t) psi(t)`, the usual interaction picture with respect to `G`.
#[derive(Clone, Debug)]
pub struct Frame {
    generator: Propagator,
}

impl Frame {
    pub fn new(generator: &Operator) -> Result<Self> {
        Ok(Self {
            generator: diagonalize(generator)?,
        })
    }

    pub fn space(&self) -> &CompositeSpace {
        self.generator.space()
    }

    /// `exp(i G t) psi`.
    pub fn to_frame(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.space() != self.space() {
            return Err(Error::SpaceMismatch(format!("{} vs {}", psi.space(), self.space())));
        }
        let v = self.generator.apply_exp(psi.amplitudes(), -t)?;
        Ok(StateVector::from_raw(v, psi.space().clone()))
    }

    pub fn expectation(&self, op: &Operator, psi_t: &StateVector, t: f64) -> Result<f64> {
        expectation(op, &self.to_frame(psi_t, t)?)
    }
}

/// `<psi(t)| exp(-i G t) op exp(i G t) |psi(t)>`, the expectation of `op` in
/// the frame rotating with `G`.
pub fn rotating_frame_expectation(op: &Operator, psi_t: &StateVector, generator: &Operator, t: f64) -> Result<f64> {
    op.require_same_space(generator.space())?;
    Frame::new(generator)?.expectation(op, psi_t, t)
}

/// Reduced density matrix over a subset of factors.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity to [`PROPAGATION_TOL`].
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDensityMatrix("matrix is not square".into()));
        }
        let n = matrix.nrows();
        let herm = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .fold(0.0_f64, |m, (r, c)| {
                m.max((matrix[(r, c)] - matrix[(c, r)].conj()).norm())
            });
        if herm > PROPAGATION_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not hermitian (deviation {herm:.3e})"
            )));
        }
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > PROPAGATION_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} differs from 1")));
        }
        let hermitized = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let lowest = SymmetricEigen::new(hermitized).eigenvalues.min();
        if lowest < -PROPAGATION_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {lowest:.3e}")));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Index bookkeeping for tracing out the complement of `keep`.
#[derive(Clone, Debug)]
struct Reduction {
    keep_dim: usize,
    rest_dim: usize,
    /// `(kept index, traced index)` per composite index.
    split: Vec<(usize, usize)>,
}

impl Reduction {
    fn new(space: &CompositeSpace, keep: &[usize]) -> Result<Self> {
        let n = space.len();
        let valid = !keep.is_empty() && keep.windows(2).all(|w| w[0] < w[1]) && keep.iter().all(|&k| k < n);
        if !valid {
            return Err(Error::InvalidSubset(keep.to_vec()));
        }
        let dims = space.factor_dims();
        let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
        let rest_dim = space.dim() / keep_dim;
        let split = (0..space.dim())
            .map(|i| {
                let multi = space.multi_index(i).expect("index within range");
                let (mut kept, mut rest) = (0, 0);
                for (slot, (&digit, &d)) in multi.iter().zip(&dims).enumerate() {
                    if keep.binary_search(&slot).is_ok() {
                        kept = kept * d + digit;
                    } else {
                        rest = rest * d + digit;
                    }
                }
                (kept, rest)
            })
            .collect();
        Ok(Self {
            keep_dim,
            rest_dim,
            split,
        })
    }

    fn reduce(&self, v: &DVector<C64>) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.keep_dim, self.rest_dim);
        for (i, &(k, r)) in self.split.iter().enumerate() {
            m[(k, r)] = v[i];
        }
        &m * m.adjoint()
    }
}

/// Reduced state of `psi` on the factors listed in `keep` (strictly increasing slots).
pub fn partial_trace(psi: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let reduction = Reduction::new(psi.space(), keep)?;
    DensityMatrix::new(reduction.reduce(psi.amplitudes()))
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// The `mu_i` are the square roots of the eigenvalues of
/// `sqrt(rho) rho~ sqrt(rho)` with `rho~ = (sy⊗sy) rho* (sy⊗sy)`, which share
/// their spectrum with `rho rho~` but form a hermitian matrix.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::InvalidDensityMatrix(format!(
            "concurrence needs a 4x4 matrix, got {}x{}",
            rho.dim(),
            rho.dim()
        )));
    }
    let m = rho.matrix();
    let hermitized = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hermitized);
    let roots = eig.eigenvalues.map(|x| C64::new(x.max(0.0).sqrt(), 0.0));
    let sqrt_rho = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint();
    // sy⊗sy is real: anti-diagonal (-1, 1, 1, -1)
    let flip = DMatrix::from_fn(4, 4, |r, c| {
        if r + c == 3 {
            C64::new(if r == 0 || r == 3 { -1.0 } else { 1.0 }, 0.0)
        } else {
            ZERO
        }
    });
    let tilde = &flip * m.conjugate() * &flip;
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let r = (&r + r.adjoint()) * C64::new(0.5, 0.0);
    let mut mu: Vec<f64> = SymmetricEigen::new(r)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).clamp(0.0, 1.0))
}

/// A named hermitian operator, evaluated in the lab frame or in a rotating frame.
#[derive(Clone, Debug)]
pub struct Observable {
    name: String,
    sparse: SparseOperator,
    space: CompositeSpace,
    frame: Option<Arc<Frame>>,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: &Operator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: op.hermiticity_error(),
            });
        }
        Ok(Self {
            name: name.into(),
            sparse: SparseOperator::from_operator(op),
            space: op.space().clone(),
            frame: None,
        })
    }

    pub fn in_frame(mut self, frame: Arc<Frame>) -> Result<Self> {
        if frame.space() != &self.space {
            return Err(Error::SpaceMismatch(format!("{} vs {}", frame.space(), self.space)));
        }
        self.frame = Some(frame);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_rotating(&self) -> bool {
        self.frame.is_some()
    }

    fn value(&self, psi: &StateVector, t: f64) -> Result<f64> {
        match &self.frame {
            None => real_part(self.sparse.sandwich(psi.amplitudes())),
            Some(frame) => real_part(self.sparse.sandwich(frame.to_frame(psi, t)?.amplitudes())),
        }
    }
}

/// What [`sample_trajectory`] records besides the norm.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrajectoryRequest<'a> {
    pub observables: &'a [Observable],
    /// Adds an `energy` series.
    pub hamiltonian: Option<&'a Operator>,
    /// Composite indices of the sector(s) the initial state lives in; adds a
    /// `leakage` series with the population outside them.
    pub confinement: Option<&'a [usize]>,
    /// Adds a dimensionless time column `tau = tau_scale * t`.
    pub tau_scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub tau: Option<Vec<f64>>,
    pub series: Vec<Series>,
}

impl Trajectory {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Evaluates `request` along `psi(t)` for every `t` in the strictly
/// increasing `grid`. Series order: observables as given, then `norm`,
/// `energy`, `leakage`, and `concurrence` when the spins are two qubits.
pub fn sample_trajectory(
    prop: &Propagator,
    psi0: &StateVector,
    grid: &[f64],
    request: &TrajectoryRequest<'_>,
) -> Result<Trajectory> {
    if let Some(bad) = grid.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {bad} is not finite")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    for obs in request.observables {
        if obs.space != *prop.space() {
            return Err(Error::SpaceMismatch(format!(
                "observable {} lives on {}",
                obs.name, obs.space
            )));
        }
    }
    let energy = match request.hamiltonian {
        Some(h) => {
            h.require_same_space(prop.space())?;
            Some(SparseOperator::from_operator(h))
        }
        None => None,
    };
    let outside: Option<Vec<usize>> = match request.confinement {
        Some(inside) => {
            let mut mask = vec![true; prop.dim()];
            for &i in inside {
                *mask.get_mut(i).ok_or(Error::IndexOutOfRange {
                    index: i,
                    dim: prop.dim(),
                })? = false;
            }
            Some((0..prop.dim()).filter(|&i| mask[i]).collect())
        }
        None => None,
    };
    let two_qubits = prop.space().spins() == [SpinKind::Qubit, SpinKind::Qubit];
    let reduction = if two_qubits {
        Some(Reduction::new(prop.space(), &[0, 1])?)
    } else {
        None
    };

    let mut names: Vec<String> = request.observables.iter().map(|o| o.name.clone()).collect();
    names.push("norm".into());
    if energy.is_some() {
        names.push("energy".into());
    }
    if outside.is_some() {
        names.push("leakage".into());
    }
    if reduction.is_some() {
        names.push("concurrence".into());
    }

    let spectral = prop.spectral(psi0)?;
    let rows = grid
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            let psi = spectral.at(t);
            let amps = psi.amplitudes();
            let mut row = Vec::with_capacity(names.len());
            for obs in request.observables {
                row.push(obs.value(&psi, t)?);
            }
            row.push(psi.norm());
            if let Some(h) = &energy {
                row.push(real_part(h.sandwich(amps))?);
            }
            if let Some(outside) = &outside {
                row.push(outside.iter().map(|&i| amps[i].norm_sqr()).sum());
            }
            if let Some(reduction) = &reduction {
                row.push(concurrence(&DensityMatrix::new(reduction.reduce(amps))?)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let series = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| Series {
            name,
            values: rows.iter().map(|row| row[k]).collect(),
        })
        .collect();
    Ok(Trajectory {
        times: grid.to_vec(),
        tau: request.tau_scale.map(|s| grid.iter().map(|t| s * t).collect()),
        series,
    })
}
