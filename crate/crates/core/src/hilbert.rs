//! Truncated Fock spaces, spin operator sets, composite tensor spaces and
//! the dense operator / state types every other module works with.
//!
//! Basis conventions:
//! - qubit: index 0 is `|up>` (sigma_z = +1), index 1 is `|down>`;
//! - qutrit: indices 0, 1, 2 are the Sigma_z eigenstates `|+1>`, `|0>`, `|-1>`;
//! - composite indices are row-major over the factor list, so the mode
//!   (always the last factor) is the fastest-running index.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest tolerated `max |M - M^dagger|` for an operator to count as hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest Poisson weight a truncated coherent state may discard.
pub const COHERENT_TAIL_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpinKind {
    Qubit,
    Qutrit,
}

impl SpinKind {
    pub const fn dim(self) -> usize {
        match self {
            SpinKind::Qubit => 2,
            SpinKind::Qutrit => 3,
        }
    }
}

impl fmt::Display for SpinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpinKind::Qubit => f.write_str("qubit"),
            SpinKind::Qutrit => f.write_str("qutrit"),
        }
    }
}

/// A bosonic mode truncated to occupations `0..=n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParams("Fock truncation needs n_max >= 1".into()));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(self) -> usize {
        self.n_max
    }

    pub fn dim(self) -> usize {
        self.n_max + 1
    }
}

/// One tensor factor of a composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Spin(SpinKind),
    Mode(FockSpace),
}

impl Factor {
    pub fn dim(self) -> usize {
        match self {
            Factor::Spin(kind) => kind.dim(),
            Factor::Mode(fock) => fock.dim(),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Spin(kind) => write!(f, "{kind}"),
            Factor::Mode(fock) => write!(f, "fock({})", fock.n_max),
        }
    }
}

/// Ordered list of tensor factors: zero or more spins, optionally followed
/// by a single truncated mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompositeSpace {
    factors: Vec<Factor>,
}

impl CompositeSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParams("a space needs at least one factor".into()));
        }
        let modes = factors.iter().filter(|f| matches!(f, Factor::Mode(_))).count();
        if modes > 1 {
            return Err(Error::InvalidParams("at most one bosonic mode is supported".into()));
        }
        if modes == 1 && !matches!(factors.last(), Some(Factor::Mode(_))) {
            return Err(Error::InvalidParams("the bosonic mode must be the last factor".into()));
        }
        Ok(Self { factors })
    }

    /// `spins ⊗ mode`.
    pub fn with_mode(spins: &[SpinKind], mode: FockSpace) -> Self {
        let mut factors: Vec<Factor> = spins.iter().map(|&k| Factor::Spin(k)).collect();
        factors.push(Factor::Mode(mode));
        Self { factors }
    }

    pub fn single(factor: Factor) -> Self {
        Self { factors: vec![factor] }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).product()
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim()).collect()
    }

    pub fn spins(&self) -> Vec<SpinKind> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                Factor::Spin(k) => Some(*k),
                Factor::Mode(_) => None,
            })
            .collect()
    }

    pub fn mode(&self) -> Option<FockSpace> {
        match self.factors.last() {
            Some(Factor::Mode(fock)) => Some(*fock),
            _ => None,
        }
    }

    pub fn mode_slot(&self) -> Option<usize> {
        self.mode().map(|_| self.factors.len() - 1)
    }

    /// Dimension of the spin part (1 when there are no spins).
    pub fn spin_dim(&self) -> usize {
        self.spins().iter().map(|k| k.dim()).product()
    }

    /// Composite index of `(spin block index, photon number)`.
    ///
    /// Panics if the space has no mode or either index is out of range.
    pub fn compose(&self, spin_index: usize, n: usize) -> usize {
        let fock = self.mode().expect("space has no bosonic mode");
        assert!(spin_index < self.spin_dim() && n < fock.dim());
        spin_index * fock.dim() + n
    }

    pub fn index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                found: multi.len(),
            });
        }
        let mut index = 0;
        for (&digit, factor) in multi.iter().zip(&self.factors) {
            let d = factor.dim();
            if digit >= d {
                return Err(Error::IndexOutOfRange { index: digit, dim: d });
            }
            index = index * d + digit;
        }
        Ok(index)
    }

    pub fn multi_index(&self, index: usize) -> Result<Vec<usize>> {
        let dim = self.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut rest = index;
        let mut multi = vec![0; self.factors.len()];
        for (slot, factor) in self.factors.iter().enumerate().rev() {
            let d = factor.dim();
            multi[slot] = rest % d;
            rest /= d;
        }
        Ok(multi)
    }
}

impl fmt::Display for CompositeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊗ ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Dense complex square matrix tied to the space it acts on.
///
/// The hermitian flag is computed at construction: it is set exactly when
/// `max |M - M^dagger| <= HERMITIAN_TOL`.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: DMatrix<C64>,
    space: CompositeSpace,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>, space: CompositeSpace) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self::from_parts(matrix, space))
    }

    fn from_parts(matrix: DMatrix<C64>, space: CompositeSpace) -> Self {
        let hermitian = hermiticity_error(&matrix) <= HERMITIAN_TOL;
        Self {
            matrix,
            space,
            hermitian,
        }
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        let d = space.dim();
        Self::from_parts(DMatrix::identity(d, d), space.clone())
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        let d = space.dim();
        Self::from_parts(DMatrix::zeros(d, d), space.clone())
    }

    pub fn from_diagonal(space: &CompositeSpace, diagonal: &[f64]) -> Result<Self> {
        let d = space.dim();
        if diagonal.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: diagonal.len(),
            });
        }
        let v = DVector::from_iterator(d, diagonal.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self::from_parts(DMatrix::from_diagonal(&v), space.clone()))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|c| (0..d).all(|r| r == c || self.matrix[(r, c)] == ZERO))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.matrix.adjoint(), self.space.clone())
    }

    /// `max |A - B|` entrywise; errors when the spaces differ.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.require_same_space(other.space())?;
        Ok(max_abs(&(&self.matrix - &other.matrix)))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<DVector<C64>> {
        self.require_same_space(psi.space())?;
        Ok(&self.matrix * psi.amplitudes())
    }

    pub(crate) fn require_same_space(&self, space: &CompositeSpace) -> Result<()> {
        if &self.space != space {
            return Err(Error::SpaceMismatch(format!("{} vs {}", self.space, space)));
        }
        Ok(())
    }
}

fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0_f64;
    for c in 0..d {
        for r in 0..=c {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

impl Add<&Operator> for Operator {
    type Output = Operator;

    fn add(mut self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "adding operators on different spaces");
        self.matrix += &rhs.matrix;
        Operator::from_parts(self.matrix, self.space)
    }
}

impl Add for Operator {
    type Output = Operator;

    fn add(self, rhs: Operator) -> Operator {
        self + &rhs
    }
}

impl Sub<&Operator> for Operator {
    type Output = Operator;

    fn sub(mut self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "subtracting operators on different spaces");
        self.matrix -= &rhs.matrix;
        Operator::from_parts(self.matrix, self.space)
    }
}

impl Sub for Operator {
    type Output = Operator;

    fn sub(self, rhs: Operator) -> Operator {
        self - &rhs
    }
}

impl Neg for Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        Operator::from_parts(-self.matrix, self.space)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        Operator::from_parts(self.matrix * C64::new(rhs, 0.0), self.space)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        self.clone() * rhs
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;

    fn mul(self, rhs: C64) -> Operator {
        Operator::from_parts(self.matrix * rhs, self.space)
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "multiplying operators on different spaces");
        Operator::from_parts(&self.matrix * &rhs.matrix, self.space.clone())
    }
}

/// Complex amplitude vector over a composite basis, normalized on construction.
#[derive(Clone, Debug)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    space: CompositeSpace,
}

impl StateVector {
    /// Normalizes `amplitudes`; errors on a dimension mismatch or a zero vector.
    pub fn new(amplitudes: DVector<C64>, space: CompositeSpace) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            amplitudes: amplitudes / C64::new(norm, 0.0),
            space,
        })
    }

    /// Wraps amplitudes that are already normalized (up to propagation roundoff).
    pub(crate) fn from_raw(amplitudes: DVector<C64>, space: CompositeSpace) -> Self {
        debug_assert_eq!(amplitudes.len(), space.dim());
        Self { amplitudes, space }
    }

    pub fn basis(space: &CompositeSpace, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Ok(Self::from_raw(v, space.clone()))
    }

    /// `spin_part ⊗ mode_part` on a space whose last factor is the mode.
    pub fn product(space: &CompositeSpace, spin_part: &DVector<C64>, mode_part: &DVector<C64>) -> Result<Self> {
        let fock = space.mode().ok_or_else(|| Error::SpaceShape {
            expected: "spins ⊗ mode".into(),
            found: space.to_string(),
        })?;
        if spin_part.len() != space.spin_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.spin_dim(),
                found: spin_part.len(),
            });
        }
        if mode_part.len() != fock.dim() {
            return Err(Error::DimensionMismatch {
                expected: fock.dim(),
                found: mode_part.len(),
            });
        }
        Self::new(spin_part.kronecker(mode_part), space.clone())
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!("{} vs {}", self.space, other.space)));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }
}

fn local_space(factor: Factor) -> CompositeSpace {
    CompositeSpace::single(factor)
}

/// Bosonic annihilation operator: `a|n> = sqrt(n)|n-1>`.
pub fn annihilation_op(fock: FockSpace) -> Operator {
    let d = fock.dim();
    let m = DMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    Operator::from_parts(m, local_space(Factor::Mode(fock)))
}

pub fn creation_op(fock: FockSpace) -> Operator {
    annihilation_op(fock).adjoint()
}

/// `a^dagger a`, built directly so the truncation edge stays exact.
pub fn number_op(fock: FockSpace) -> Operator {
    let diag: Vec<f64> = (0..fock.dim()).map(|n| n as f64).collect();
    Operator::from_diagonal(&local_space(Factor::Mode(fock)), &diag).expect("dimension matches by construction")
}

/// `x = a + a^dagger`.
pub fn quadrature_op(fock: FockSpace) -> Operator {
    annihilation_op(fock) + creation_op(fock)
}

/// Cartesian and ladder operators of one spin factor.
#[derive(Clone, Debug)]
pub struct SpinOps {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
    pub plus: Operator,
    pub minus: Operator,
}

/// Pauli matrices with `sigma_± = (sigma_x ± i sigma_y)/2` for qubits;
/// spin-1 matrices with `Sigma_z = diag(1, 0, -1)` and
/// `Sigma_± = Sigma_x ± i Sigma_y` for qutrits.
pub fn spin_ops(kind: SpinKind) -> SpinOps {
    let space = local_space(Factor::Spin(kind));
    let d = kind.dim();
    let build = |m: DMatrix<C64>| Operator::from_parts(m, space.clone());
    match kind {
        SpinKind::Qubit => {
            let x = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
            let y = DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
            let z = DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
            let plus = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
            let minus = plus.transpose();
            SpinOps {
                x: build(x),
                y: build(y),
                z: build(z),
                plus: build(plus),
                minus: build(minus),
            }
        }
        SpinKind::Qutrit => {
            let r2 = C64::new(std::f64::consts::SQRT_2, 0.0);
            let mut plus = DMatrix::zeros(d, d);
            plus[(0, 1)] = r2;
            plus[(1, 2)] = r2;
            let minus = plus.transpose();
            let x = (&plus + &minus) * C64::new(0.5, 0.0);
            let y = (&plus - &minus) * C64::new(0.0, -0.5);
            let z = DMatrix::from_diagonal(&DVector::from_row_slice(&[ONE, ZERO, -ONE]));
            SpinOps {
                x: build(x),
                y: build(y),
                z: build(z),
                plus: build(plus),
                minus: build(minus),
            }
        }
    }
}

/// Embeds a single-factor operator at `slot`, identity elsewhere.
pub fn tensor_embed(op: &Operator, slot: usize, space: &CompositeSpace) -> Result<Operator> {
    embed_product(&[(slot, op)], space)
}

/// Tensor product of single-factor operators placed at distinct slots,
/// identity on the remaining factors. Built by Kronecker products, so the
/// cost is linear in the number of matrix entries.
pub fn embed_product(terms: &[(usize, &Operator)], space: &CompositeSpace) -> Result<Operator> {
    let mut placed: Vec<Option<&Operator>> = vec![None; space.len()];
    for &(slot, op) in terms {
        let target = *space.factors().get(slot).ok_or(Error::IndexOutOfRange {
            index: slot,
            dim: space.len(),
        })?;
        if op.space().len() != 1 || op.space().factors()[0] != target {
            if op.dim() != target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: target.dim(),
                    found: op.dim(),
                });
            }
            return Err(Error::FactorMismatch {
                slot,
                expected: target.to_string(),
                found: op.space().to_string(),
            });
        }
        if placed[slot].replace(op).is_some() {
            return Err(Error::InvalidArgument(format!("slot {slot} used twice")));
        }
    }
    let mut acc = DMatrix::from_element(1, 1, ONE);
    for (factor, op) in space.factors().iter().zip(&placed) {
        acc = match op {
            Some(op) => acc.kronecker(op.matrix()),
            None => acc.kronecker(&DMatrix::<C64>::identity(factor.dim(), factor.dim())),
        };
    }
    Ok(Operator::from_parts(acc, space.clone()))
}

/// Poisson tail `P(N > n_max)` for mean `mean`, summed term by term in log space.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut ln_fact: f64 = (1..=n_max + 1).map(|k| (k as f64).ln()).sum();
    let mut k = n_max + 1;
    let mut tail = 0.0;
    loop {
        let term = (-mean + k as f64 * ln_mean - ln_fact).exp();
        tail += term;
        if (k as f64 > mean && term <= tail * 1e-17) || term == 0.0 && k as f64 > mean {
            break;
        }
        k += 1;
        ln_fact += (k as f64).ln();
    }
    tail
}

/// Smallest `n_max` whose Poisson tail is at most `tolerance`.
pub fn required_n_max(mean: f64, tolerance: f64) -> usize {
    let mut n = mean.floor() as usize;
    while poisson_tail(mean, n) > tolerance {
        n += 1;
    }
    n.max(1)
}

/// Renormalized coherent-state amplitudes `c_0..c_{n_max}`.
///
/// `c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!)` is evaluated in log space.
/// Errors when the discarded Poisson weight exceeds [`COHERENT_TAIL_TOL`].
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> Result<Vec<C64>> {
    let mean = alpha.norm_sqr();
    let tail = poisson_tail(mean, n_max);
    if tail > COHERENT_TAIL_TOL {
        return Err(Error::Truncation {
            tail,
            tolerance: COHERENT_TAIL_TOL,
            required_n_max: required_n_max(mean, COHERENT_TAIL_TOL),
        });
    }
    let mut amps = vec![ZERO; n_max + 1];
    if mean == 0.0 {
        amps[0] = ONE;
        return Ok(amps);
    }
    let (r, phase) = alpha.to_polar();
    let ln_r = r.ln();
    let mut ln_fact = 0.0;
    for (n, amp) in amps.iter_mut().enumerate() {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let magnitude = (-mean / 2.0 + n as f64 * ln_r - 0.5 * ln_fact).exp();
        *amp = C64::from_polar(magnitude, n as f64 * phase);
    }
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for amp in &mut amps {
        *amp /= norm;
    }
    Ok(amps)
}

/// Glauber coherent state on a bare mode space.
pub fn coherent_state(alpha: C64, fock: FockSpace) -> Result<StateVector> {
    let amps = coherent_amplitudes(alpha, fock.n_max())?;
    Ok(StateVector::from_raw(
        DVector::from_vec(amps),
        local_space(Factor::Mode(fock)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fock(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    #[test]
    fn annihilation_lowers_with_sqrt_n() {
        let a = annihilation_op(fock(2));
        let m = a.matrix();
        assert_eq!(m[(0, 1)], ONE);
        assert!((m[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        // only the first superdiagonal is populated
        for r in 0..3 {
            for c in 0..3 {
                if c != r + 1 {
                    assert_eq!(m[(r, c)], ZERO);
                }
            }
        }
    }

    #[test]
    fn truncated_commutator_has_defect_in_last_entry() {
        for n_max in 1..6 {
            let a = annihilation_op(fock(n_max));
            let ad = creation_op(fock(n_max));
            let comm = &a * &ad - &ad * &a;
            for r in 0..=n_max {
                for c in 0..=n_max {
                    let want = if r != c {
                        0.0
                    } else if r < n_max {
                        1.0
                    } else {
                        -(n_max as f64)
                    };
                    assert!((comm.matrix()[(r, c)] - C64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn number_operator_spectrum() {
        let n = number_op(fock(4));
        for k in 0..5 {
            assert_eq!(n.matrix()[(k, k)].re, k as f64);
        }
        assert!(n.is_hermitian() && n.is_diagonal());
    }

    #[test]
    fn pauli_identities() {
        let s = spin_ops(SpinKind::Qubit);
        let up = DVector::from_row_slice(&[ONE, ZERO]);
        assert_eq!(s.z.matrix() * &up, up);
        let xx = &s.x * &s.x;
        assert!(xx.max_abs_diff(&Operator::identity(s.x.space())).unwrap() == 0.0);
        for op in [&s.x, &s.y, &s.z] {
            assert!(op.is_hermitian());
        }
        assert!(!s.plus.is_hermitian());
        let rebuilt = (s.x.clone() + &(s.y.clone() * I)) * 0.5;
        assert!(rebuilt.max_abs_diff(&s.plus).unwrap() < 1e-15);
    }

    #[test]
    fn spin_one_matrices() {
        let s = spin_ops(SpinKind::Qutrit);
        // Sigma_x |0> = (|1> + |-1>)/sqrt(2)
        let zero = DVector::from_row_slice(&[ZERO, ONE, ZERO]);
        let out = s.x.matrix() * zero;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out[0].re - h).abs() < 1e-15 && (out[2].re - h).abs() < 1e-15 && out[1] == ZERO);
        // [Sx, Sy] = i Sz
        let comm = &s.x * &s.y - &s.y * &s.x;
        assert!(comm.max_abs_diff(&(s.z.clone() * I)).unwrap() < 1e-15);
        let sum = (s.x.clone() + &(s.y.clone() * I)).max_abs_diff(&s.plus).unwrap();
        assert!(sum < 1e-15);
    }

    #[test]
    fn index_round_trip() {
        let space = CompositeSpace::with_mode(&[SpinKind::Qubit, SpinKind::Qutrit], fock(3));
        assert_eq!(space.dim(), 24);
        for i in 0..space.dim() {
            let m = space.multi_index(i).unwrap();
            assert_eq!(space.index(&m).unwrap(), i);
        }
        assert!(space.multi_index(24).is_err());
        assert!(space.index(&[0, 3, 0]).is_err());
    }

    #[test]
    fn mode_must_be_last() {
        let f = Factor::Mode(fock(2));
        assert!(CompositeSpace::new(vec![f, Factor::Spin(SpinKind::Qubit)]).is_err());
        assert!(CompositeSpace::new(vec![Factor::Spin(SpinKind::Qubit), f]).is_ok());
        assert!(CompositeSpace::new(vec![]).is_err());
        assert!(FockSpace::new(0).is_err());
    }

    #[test]
    fn embed_identity_and_shapes() {
        let f1 = fock(1);
        let space = CompositeSpace::with_mode(&[SpinKind::Qubit], f1);
        let a = tensor_embed(&annihilation_op(f1), 1, &space).unwrap();
        assert_eq!(a.dim(), 4);
        // a acts within each spin block only
        assert_eq!(a.matrix()[(0, 1)], ONE);
        assert_eq!(a.matrix()[(2, 3)], ONE);
        assert_eq!(a.matrix()[(0, 3)], ZERO);
        let id = tensor_embed(
            &Operator::identity(&CompositeSpace::single(Factor::Spin(SpinKind::Qubit))),
            0,
            &space,
        )
        .unwrap();
        assert_eq!(id.max_abs_diff(&Operator::identity(&space)).unwrap(), 0.0);
    }

    #[test]
    fn embed_rejects_mismatched_factor() {
        let space = CompositeSpace::with_mode(&[SpinKind::Qubit], fock(2));
        let sz = spin_ops(SpinKind::Qutrit).z;
        assert!(matches!(
            tensor_embed(&sz, 0, &space),
            Err(Error::DimensionMismatch { .. })
        ));
        // same dimension, different factor kind
        assert!(matches!(
            tensor_embed(&sz, 1, &space),
            Err(Error::FactorMismatch { .. })
        ));
        let qz = spin_ops(SpinKind::Qubit).z;
        assert!(tensor_embed(&qz, 5, &space).is_err());
        assert!(embed_product(&[(0, &qz), (0, &qz)], &space).is_err());
    }

    #[test]
    fn embedded_products_match_kron() {
        let space = CompositeSpace::new(vec![Factor::Spin(SpinKind::Qubit), Factor::Spin(SpinKind::Qubit)]).unwrap();
        let s = spin_ops(SpinKind::Qubit);
        let z1 = tensor_embed(&s.z, 0, &space).unwrap();
        let z2 = tensor_embed(&s.z, 1, &space).unwrap();
        let zz = embed_product(&[(0, &s.z), (1, &s.z)], &space).unwrap();
        let kron = s.z.matrix().kronecker(s.z.matrix());
        assert_eq!((&z1 * &z2).matrix(), &kron);
        assert_eq!(zz.matrix(), &kron);
        let x1 = tensor_embed(&s.x, 0, &space).unwrap();
        let y2 = tensor_embed(&s.y, 1, &space).unwrap();
        assert_eq!((&x1 * &y2).matrix(), (&y2 * &x1).matrix());
    }

    #[test]
    fn coherent_vacuum() {
        let psi = coherent_state(ZERO, fock(3)).unwrap();
        assert_eq!(psi.amplitudes()[0], ONE);
        assert!(psi.amplitudes().iter().skip(1).all(|&z| z == ZERO));
    }

    /// Poisson(mean) tail computed by the pmf recurrence p_n = p_{n-1} mean / n.
    fn poisson_tail_oracle(mean: f64, n_max: usize) -> f64 {
        let mut p = (-mean).exp();
        let mut head = 0.0;
        let mut tail = 0.0;
        for n in 0..2000 {
            if n > 0 {
                p *= mean / n as f64;
            }
            if n <= n_max {
                head += p;
            } else {
                tail += p;
            }
        }
        assert!((head + tail - 1.0).abs() < 1e-12);
        tail
    }

    #[test]
    fn coherent_truncation_gate() {
        let alpha = C64::new(7.0, 0.0);
        assert!(poisson_tail_oracle(49.0, 128) < 1e-10);
        assert!(poisson_tail_oracle(49.0, 60) > 1e-10);
        assert!(coherent_state(alpha, fock(128)).is_ok());
        match coherent_state(alpha, fock(60)) {
            Err(Error::Truncation {
                required_n_max, tail, ..
            }) => {
                assert!(poisson_tail_oracle(49.0, required_n_max) <= 1e-10);
                assert!(poisson_tail_oracle(49.0, required_n_max - 1) > 1e-10);
                assert!((tail - poisson_tail_oracle(49.0, 60)).abs() < 1e-12);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn poisson_tail_matches_recurrence() {
        for &(mean, n) in &[(49.0, 80), (49.0, 100), (9.0, 20), (2.25, 10), (100.0, 150)] {
            let got = poisson_tail(mean, n);
            let want = poisson_tail_oracle(mean, n);
            assert!(
                (got - want).abs() <= 1e-12 * want.max(1e-300) + 1e-300,
                "{mean} {n}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn coherent_mean_photon_number() {
        for &(re, im, n_max) in &[(7.0, 0.0, 128), (2.0, 1.5, 50), (-3.0, 0.0, 60)] {
            let alpha = C64::new(re, im);
            let psi = coherent_state(alpha, fock(n_max)).unwrap();
            let mean: f64 = psi
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(n, c)| n as f64 * c.norm_sqr())
                .sum();
            assert!((mean - alpha.norm_sqr()).abs() < 1e-8);
            assert!((psi.norm() - 1.0).abs() < 1e-12);
            // eigenvector of a away from the truncation edge
            let a = annihilation_op(fock(n_max));
            let out = a.matrix() * psi.amplitudes();
            for n in 0..n_max / 2 {
                assert!((out[n] - alpha * psi.amplitudes()[n]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn coherent_amplitudes_finite_and_decreasing_past_peak() {
        let amps = coherent_amplitudes(C64::new(7.0, 0.0), 171).unwrap();
        assert!(amps.iter().all(|c| c.re.is_finite()));
        let start = 49 + 8;
        for n in start..171 {
            assert!(amps[n + 1].norm() < amps[n].norm());
        }
    }

    #[test]
    fn state_normalization() {
        let space = CompositeSpace::with_mode(&[SpinKind::Qubit], fock(1));
        let v = DVector::from_element(4, C64::new(3.0, 0.0));
        let psi = StateVector::new(v, space.clone()).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(
            StateVector::new(DVector::zeros(4), space.clone()),
            Err(Error::ZeroNorm)
        ));
        assert!(StateVector::new(DVector::zeros(3), space).is_err());
    }
}
