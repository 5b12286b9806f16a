//! Parameter records and Hamiltonian builders for the two-qubit, two-qutrit
//! and spin-chain models, in full and effective form.
//!
//! Effective models act on a fictitious spin ⊗ mode space. Level order of
//! the fictitious spin follows the sector basis order from [`crate::symmetry`]:
//! sector a is `[|↑↑>, |↓↓>]`, sector b is `[|↑↓>, |↓↑>]`, the qutrit zero
//! sector is `[|1,-1>, |0,0>, |-1,1>]` and a chain sector is `[|p>, |p̄>]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation_op, creation_op, embed_product, number_op, quadrature_op, spin_ops, tensor_embed, CompositeSpace,
    Factor, FockSpace, Operator, SpinKind,
};

/// Largest chain length accepted by the chain builders.
pub const MAX_CHAIN_SPINS: usize = 8;

fn finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be finite, got {value}")))
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {value}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitParams {
    pub omega: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub gamma: f64,
    pub lam1: f64,
    pub lam2: f64,
}

/// Sum and difference parameters of the two-qubit model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitEffective {
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub lam_plus: f64,
    pub lam_minus: f64,
    /// `gamma - omega`.
    pub detuning: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    /// `{|↑↑>, |↓↓>}`
    A,
    /// `{|↑↓>, |↓↑>}`
    B,
}

impl TwoQubitParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        for (name, v) in [
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("gamma", self.gamma),
            ("lam1", self.lam1),
            ("lam2", self.lam2),
        ] {
            finite(name, v)?;
        }
        Ok(())
    }

    pub fn effective(&self) -> TwoQubitEffective {
        TwoQubitEffective {
            eps_plus: self.eps1 + self.eps2,
            eps_minus: self.eps1 - self.eps2,
            lam_plus: self.lam1 + self.lam2,
            lam_minus: self.lam1 - self.lam2,
            detuning: self.gamma - self.omega,
        }
    }
}

impl TwoQubitEffective {
    /// `(splitting, coupling)` of the fictitious qubit in `sector`.
    pub fn sector(&self, sector: Sector) -> (f64, f64) {
        match sector {
            Sector::A => (self.eps_plus, self.lam_plus),
            Sector::B => (self.eps_minus, self.lam_minus),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQutritParams {
    pub omega: f64,
    /// Common qutrit splitting.
    pub splitting: f64,
    pub gamma_x: f64,
    pub lam1: f64,
    pub lam2: f64,
}

impl TwoQutritParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        for (name, v) in [
            ("splitting", self.splitting),
            ("gamma_x", self.gamma_x),
            ("lam1", self.lam1),
            ("lam2", self.lam2),
        ] {
            finite(name, v)?;
        }
        Ok(())
    }

    pub fn lam_minus(&self) -> f64 {
        self.lam1 - self.lam2
    }

    /// Level spacing of the effective qutrit: `gamma_x / sqrt(2)`.
    ///
    /// With spin-1 matrices, `<1,-1| Sx⊗Sx |0,0> = 1/2`, so the projected
    /// exchange term is `gamma_x/2 * (sqrt(2) Sx) = (gamma_x/sqrt(2)) Sx`.
    pub fn effective_gap(&self) -> f64 {
        self.gamma_x * std::f64::consts::FRAC_1_SQRT_2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub n_spins: usize,
    /// Common qubit splitting.
    pub splitting: f64,
    pub gamma: f64,
    pub omega: f64,
    pub deltas: Vec<f64>,
}

/// Parameters of the fictitious qubit describing one chain sector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainEffective {
    /// `splitting * (N - 2m)`, `m` = number of down spins in the pattern.
    pub splitting: f64,
    /// `<p| sum_k delta_k sigma_k^z |p>`.
    pub delta_eff: f64,
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_spins;
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "chain needs an even number of spins >= 2, got {n}"
            )));
        }
        if n > MAX_CHAIN_SPINS {
            return Err(Error::InvalidParams(format!(
                "chain length {n} exceeds the limit of {MAX_CHAIN_SPINS}"
            )));
        }
        if self.deltas.len() != n {
            return Err(Error::InvalidParams(format!(
                "expected {n} couplings, got {}",
                self.deltas.len()
            )));
        }
        positive("omega", self.omega)?;
        finite("splitting", self.splitting)?;
        finite("gamma", self.gamma)?;
        for (k, &d) in self.deltas.iter().enumerate() {
            finite(&format!("deltas[{k}]"), d)?;
        }
        Ok(())
    }

    pub fn effective(&self, pattern: &SpinPattern) -> Result<ChainEffective> {
        self.validate()?;
        if pattern.len() != self.n_spins {
            return Err(Error::InvalidPattern(format!(
                "pattern has {} spins, chain has {}",
                pattern.len(),
                self.n_spins
            )));
        }
        let m = pattern.down_count();
        let delta_eff = self
            .deltas
            .iter()
            .zip(pattern.signs())
            .map(|(d, &s)| d * f64::from(s))
            .sum();
        Ok(ChainEffective {
            splitting: self.splitting * (self.n_spins as f64 - 2.0 * m as f64),
            delta_eff,
        })
    }
}

/// Sequence of sigma_z eigenvalues (+1 up, -1 down), one per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinPattern(Vec<i8>);

impl SpinPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidPattern("empty pattern".into()));
        }
        if let Some(bad) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidPattern(format!("entry {bad} is not +1 or -1")));
        }
        Ok(Self(signs))
    }

    /// Bit `k` (counting from the first spin as the most significant) set means spin `k` is down.
    pub fn from_bits(n: usize, bits: usize) -> Self {
        Self(
            (0..n)
                .map(|k| if bits >> (n - 1 - k) & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    /// Index of the pattern in the qubit product basis (up = 0, down = 1).
    pub fn bits(&self) -> usize {
        self.0.iter().fold(0, |acc, &s| acc << 1 | usize::from(s < 0))
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn down_count(&self) -> usize {
        self.0.iter().filter(|&&s| s < 0).count()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }
}

impl std::fmt::Display for SpinPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "u" } else { "d" })?;
        }
        Ok(())
    }
}

pub fn two_qubit_space(fock: FockSpace) -> CompositeSpace {
    CompositeSpace::with_mode(&[SpinKind::Qubit, SpinKind::Qubit], fock)
}

pub fn two_qutrit_space(fock: FockSpace) -> CompositeSpace {
    CompositeSpace::with_mode(&[SpinKind::Qutrit, SpinKind::Qutrit], fock)
}

pub fn chain_space(n_spins: usize, fock: FockSpace) -> CompositeSpace {
    CompositeSpace::with_mode(&vec![SpinKind::Qubit; n_spins], fock)
}

/// Single spin ⊗ mode, the home of every effective model.
pub fn fictitious_space(kind: SpinKind, fock: FockSpace) -> CompositeSpace {
    CompositeSpace::with_mode(&[kind], fock)
}

fn require_spins(space: &CompositeSpace, spins: &[SpinKind]) -> Result<FockSpace> {
    match space.mode() {
        Some(fock) if space.spins() == spins => Ok(fock),
        _ => {
            let expected: Vec<String> = spins.iter().map(|k| k.to_string()).collect();
            Err(Error::SpaceShape {
                expected: format!("{} ⊗ fock", expected.join(" ⊗ ")),
                found: space.to_string(),
            })
        }
    }
}

fn mode_terms(space: &CompositeSpace, fock: FockSpace) -> Result<(Operator, Operator)> {
    let slot = space.len() - 1;
    Ok((
        tensor_embed(&number_op(fock), slot, space)?,
        tensor_embed(&quadrature_op(fock), slot, space)?,
    ))
}

/// `splitting S_z + tunnel S_x + omega a^dagger a + coupling (a + a^dagger) S_z`
/// on a single spin ⊗ mode.
fn single_spin_rabi(
    kind: SpinKind,
    space: &CompositeSpace,
    splitting: f64,
    tunnel: f64,
    omega: f64,
    coupling: f64,
) -> Result<Operator> {
    let fock = require_spins(space, &[kind])?;
    let s = spin_ops(kind);
    let (number, _) = mode_terms(space, fock)?;
    let sz = tensor_embed(&s.z, 0, space)?;
    let sx = tensor_embed(&s.x, 0, space)?;
    let zx = embed_product(&[(0, &s.z), (1, &quadrature_op(fock))], space)?;
    Ok(number * omega + &(sz * splitting) + &(sx * tunnel) + &(zx * coupling))
}

/// `omega a^dagger a + eps1 s1z + eps2 s2z + gamma s1x s2x + (lam1 s1z + lam2 s2z)(a + a^dagger)`.
pub fn build_two_qubit_full(p: &TwoQubitParams, space: &CompositeSpace) -> Result<Operator> {
    p.validate()?;
    let fock = require_spins(space, &[SpinKind::Qubit, SpinKind::Qubit])?;
    let s = spin_ops(SpinKind::Qubit);
    let x = quadrature_op(fock);
    let (number, _) = mode_terms(space, fock)?;
    let h = number * p.omega
        + &(tensor_embed(&s.z, 0, space)? * p.eps1)
        + &(tensor_embed(&s.z, 1, space)? * p.eps2)
        + &(embed_product(&[(0, &s.x), (1, &s.x)], space)? * p.gamma)
        + &(embed_product(&[(0, &s.z), (2, &x)], space)? * p.lam1)
        + &(embed_product(&[(1, &s.z), (2, &x)], space)? * p.lam2);
    Ok(h)
}

/// Fictitious-qubit Rabi model of one sector:
/// `omega a^dagger a + eps_± s_z + gamma s_x + lam_± (a + a^dagger) s_z`.
pub fn build_two_qubit_effective(p: &TwoQubitParams, sector: Sector, space: &CompositeSpace) -> Result<Operator> {
    p.validate()?;
    let (splitting, coupling) = p.effective().sector(sector);
    single_spin_rabi(SpinKind::Qubit, space, splitting, p.gamma, p.omega, coupling)
}

/// Jaynes-Cummings form of sector b in the frame rotating with
/// `omega (a^dagger a + s_z)` after the basis change [`jc_frame_rotation`]:
/// `-Delta s_z + lam_- (a s_+ + a^dagger s_-)`.
pub fn build_two_qubit_jc(p: &TwoQubitParams, space: &CompositeSpace) -> Result<Operator> {
    p.validate()?;
    let fock = require_spins(space, &[SpinKind::Qubit])?;
    let eff = p.effective();
    let s = spin_ops(SpinKind::Qubit);
    let a = annihilation_op(fock);
    let ad = creation_op(fock);
    let jc = embed_product(&[(0, &s.plus), (1, &a)], space)? + embed_product(&[(0, &s.minus), (1, &ad)], space)?;
    Ok(tensor_embed(&s.z, 0, space)? * (-eff.detuning) + &(jc * eff.lam_minus))
}

/// `splitting (S1z + S2z) + gamma_x S1x S2x + omega a^dagger a + (lam1 S1z + lam2 S2z)(a + a^dagger)`
/// with spin-1 matrices.
pub fn build_two_qutrit_full(p: &TwoQutritParams, space: &CompositeSpace) -> Result<Operator> {
    p.validate()?;
    let fock = require_spins(space, &[SpinKind::Qutrit, SpinKind::Qutrit])?;
    let s = spin_ops(SpinKind::Qutrit);
    let x = quadrature_op(fock);
    let (number, _) = mode_terms(space, fock)?;
    let h = number * p.omega
        + &((tensor_embed(&s.z, 0, space)? + tensor_embed(&s.z, 1, space)?) * p.splitting)
        + &(embed_product(&[(0, &s.x), (1, &s.x)], space)? * p.gamma_x)
        + &(embed_product(&[(0, &s.z), (2, &x)], space)? * p.lam1)
        + &(embed_product(&[(1, &s.z), (2, &x)], space)? * p.lam2);
    Ok(h)
}

/// Restriction of the two-qutrit model to `[|1,-1>, |0,0>, |-1,1>] ⊗ mode`:
/// `(gamma_x/sqrt 2) S_x + omega a^dagger a + lam_- (a + a^dagger) S_z`.
pub fn build_qutrit_effective(p: &TwoQutritParams, space: &CompositeSpace) -> Result<Operator> {
    p.validate()?;
    single_spin_rabi(SpinKind::Qutrit, space, 0.0, p.effective_gap(), p.omega, p.lam_minus())
}

/// Jaynes-Cummings form of the effective qutrit after a quarter turn about y:
/// `(gamma_x/sqrt 2) S_z + omega a^dagger a - (lam_-/2)(a^dagger S_- + a S_+)`.
///
/// The quarter turn sends `S_z` to `S_x = (S_+ + S_-)/2`, which is where the
/// factor 1/2 on the coupling comes from.
pub fn build_qutrit_jc(p: &TwoQutritParams, space: &CompositeSpace) -> Result<Operator> {
    p.validate()?;
    let fock = require_spins(space, &[SpinKind::Qutrit])?;
    let s = spin_ops(SpinKind::Qutrit);
    let (number, _) = mode_terms(space, fock)?;
    let a = annihilation_op(fock);
    let ad = creation_op(fock);
    let jc = embed_product(&[(0, &s.minus), (1, &ad)], space)? + embed_product(&[(0, &s.plus), (1, &a)], space)?;
    Ok(tensor_embed(&s.z, 0, space)? * p.effective_gap() + &(number * p.omega) - &(jc * (p.lam_minus() / 2.0)))
}

/// `splitting sum_k s_k^z + gamma prod_k s_k^x + omega a^dagger a + sum_k delta_k (a + a^dagger) s_k^z`.
pub fn build_chain_full(p: &ChainParams, space: &CompositeSpace) -> Result<Operator> {
    p.validate()?;
    let fock = require_spins(space, &vec![SpinKind::Qubit; p.n_spins])?;
    let s = spin_ops(SpinKind::Qubit);
    let x = quadrature_op(fock);
    let (number, _) = mode_terms(space, fock)?;
    let flips: Vec<(usize, &Operator)> = (0..p.n_spins).map(|k| (k, &s.x)).collect();
    let mut h = number * p.omega + &(embed_product(&flips, space)? * p.gamma);
    for (k, &delta) in p.deltas.iter().enumerate() {
        h = h + &(tensor_embed(&s.z, k, space)? * p.splitting);
        h = h + &(embed_product(&[(k, &s.z), (p.n_spins, &x)], space)? * delta);
    }
    Ok(h)
}

/// Fictitious-qubit model of the chain sector `{|pattern>, |flipped>}`.
pub fn build_chain_effective(p: &ChainParams, pattern: &SpinPattern, space: &CompositeSpace) -> Result<Operator> {
    let eff = p.effective(pattern)?;
    single_spin_rabi(SpinKind::Qubit, space, eff.splitting, p.gamma, p.omega, eff.delta_eff)
}

/// Basis change taking the sector-b fictitious qubit to the frame of
/// [`build_two_qubit_jc`]: `R = (s_x + s_z)/sqrt 2` on the spin, identity on
/// the mode. `R` is real, symmetric and its own inverse; it swaps `s_x` and
/// `s_z`, so `|↑>_b` maps to `(|↑> + |↓>)/sqrt 2`. This sign choice makes the
/// rotated `s_x` and `s_z` expectations reproduce the resonant closed forms.
pub fn jc_frame_rotation(space: &CompositeSpace) -> Result<Operator> {
    require_spins(space, &[SpinKind::Qubit])?;
    let s = spin_ops(SpinKind::Qubit);
    let r = (s.x + &s.z) * std::f64::consts::FRAC_1_SQRT_2;
    tensor_embed(&r, 0, space)
}

/// Excitation number of a single spin ⊗ mode: `a^dagger a + (s_z + 1)/2`
/// for a qubit and `a^dagger a + S_z` for a qutrit.
pub fn excitation_number(space: &CompositeSpace) -> Result<Operator> {
    let (kind, fock) = match space.factors() {
        [Factor::Spin(kind), Factor::Mode(fock)] => (*kind, *fock),
        _ => {
            return Err(Error::SpaceShape {
                expected: "spin ⊗ fock".into(),
                found: space.to_string(),
            })
        }
    };
    let s = spin_ops(kind);
    let (number, _) = mode_terms(space, fock)?;
    let spin = tensor_embed(&s.z, 0, space)?;
    Ok(match kind {
        SpinKind::Qubit => number + &((spin + Operator::identity(space)) * 0.5),
        SpinKind::Qutrit => number + &spin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn fock(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    fn fig1() -> TwoQubitParams {
        TwoQubitParams {
            omega: 1.0,
            eps1: 0.5,
            eps2: 0.5,
            gamma: 1.0,
            lam1: 0.8,
            lam2: 0.7999,
        }
    }

    fn comm(a: &Operator, b: &Operator) -> f64 {
        (a * b - b * a).max_abs()
    }

    #[test]
    fn effective_parameter_identities() {
        let p = TwoQubitParams {
            omega: 1.3,
            eps1: 0.4,
            eps2: 0.1,
            gamma: 0.9,
            lam1: 0.8,
            lam2: 0.7999,
        };
        let e = p.effective();
        assert_eq!(e.eps_plus, 0.4 + 0.1);
        assert_eq!(e.eps_minus, 0.4 - 0.1);
        assert_eq!(e.lam_plus, 0.8 + 0.7999);
        assert_eq!(e.lam_minus, 0.8 - 0.7999);
        assert_eq!(e.detuning, 0.9 - 1.3);
    }

    #[test]
    fn sector_couplings_from_captions() {
        let (_, b) = fig1().effective().sector(Sector::B);
        assert!((b - 1e-4).abs() < 1e-15);
        let fig3 = TwoQubitParams {
            lam1: 0.8,
            lam2: 0.7999,
            ..fig1()
        };
        let (_, a) = fig3.effective().sector(Sector::A);
        assert!((a - 1.5999).abs() < 1e-15);
        let equal = TwoQubitParams { lam2: 0.8, ..fig1() };
        assert_eq!(equal.effective().lam_minus, 0.0);
    }

    #[test]
    fn bare_mode_limit() {
        let p = TwoQubitParams {
            omega: 1.0,
            eps1: 0.0,
            eps2: 0.0,
            gamma: 0.0,
            lam1: 0.0,
            lam2: 0.0,
        };
        let space = two_qubit_space(fock(3));
        let h = build_two_qubit_full(&p, &space).unwrap();
        let n = tensor_embed(&number_op(fock(3)), 2, &space).unwrap();
        assert_eq!(h.max_abs_diff(&n).unwrap(), 0.0);
    }

    #[test]
    fn uncoupled_spectrum_is_diagonal() {
        let p = TwoQubitParams {
            omega: 1.0,
            eps1: 0.3,
            eps2: 0.2,
            gamma: 0.0,
            lam1: 0.0,
            lam2: 0.0,
        };
        let space = two_qubit_space(fock(2));
        let h = build_two_qubit_full(&p, &space).unwrap();
        assert!(h.is_diagonal());
        for i in 0..space.dim() {
            let m = space.multi_index(i).unwrap();
            let s = |k: usize| if m[k] == 0 { 1.0 } else { -1.0 };
            let want = 0.3 * s(0) + 0.2 * s(1) + m[2] as f64;
            assert!((h.matrix()[(i, i)].re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn full_two_qubit_is_hermitian_and_conserves_parity() {
        let space = two_qubit_space(fock(10));
        let h = build_two_qubit_full(&fig1(), &space).unwrap();
        assert!(h.is_hermitian());
        let z = spin_ops(SpinKind::Qubit).z;
        let zz = embed_product(&[(0, &z), (1, &z)], &space).unwrap();
        assert!(comm(&h, &zz) <= 1e-12);
        assert!(comm(&h, &tensor_embed(&z, 0, &space).unwrap()) > 0.1);
    }

    #[test]
    fn builders_reject_wrong_spaces() {
        let f = fock(3);
        assert!(matches!(
            build_two_qubit_full(&fig1(), &two_qutrit_space(f)),
            Err(Error::SpaceShape { .. })
        ));
        assert!(build_two_qubit_effective(&fig1(), Sector::A, &two_qubit_space(f)).is_err());
        assert!(build_two_qubit_jc(&fig1(), &fictitious_space(SpinKind::Qutrit, f)).is_err());
        let bad = TwoQubitParams { omega: 0.0, ..fig1() };
        assert!(matches!(
            build_two_qubit_full(&bad, &two_qubit_space(f)),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn jc_conserves_excitations() {
        let space = fictitious_space(SpinKind::Qubit, fock(12));
        let p = TwoQubitParams { gamma: 0.7, ..fig1() };
        let h = build_two_qubit_jc(&p, &space).unwrap();
        assert!(h.is_hermitian());
        assert!(comm(&h, &excitation_number(&space).unwrap()) <= 1e-12);
    }

    #[test]
    fn jc_resonance_and_null_limits() {
        let space = fictitious_space(SpinKind::Qubit, fock(4));
        let h = build_two_qubit_jc(&fig1(), &space).unwrap();
        // gamma = omega: the diagonal vanishes
        assert!((0..space.dim()).all(|i| h.matrix()[(i, i)] == C64::new(0.0, 0.0)));
        let null = TwoQubitParams { lam2: 0.8, ..fig1() };
        assert_eq!(build_two_qubit_jc(&null, &space).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn jc_is_rotated_sector_b_without_counter_rotating_terms() {
        // In the JC frame the sector-b coupling becomes lam_- (a + a^dagger) s_x.
        // Its co-rotating half is the JC coupling; the rest has support only on
        // a^dagger s_+ and a s_-.
        let f = fock(6);
        let space = fictitious_space(SpinKind::Qubit, f);
        let p = TwoQubitParams {
            omega: 1.0,
            eps1: 0.0,
            eps2: 0.0,
            gamma: 1.0,
            lam1: 0.3,
            lam2: 0.1,
        };
        let lam = p.effective().lam_minus;
        let r = jc_frame_rotation(&space).unwrap();
        let s = spin_ops(SpinKind::Qubit);
        let coupling = embed_product(&[(0, &s.z), (1, &quadrature_op(f))], &space).unwrap() * lam;
        let rotated = &(&r * &coupling) * &r;
        let jc = build_two_qubit_jc(&p, &space).unwrap();
        let counter = rotated - &jc;
        let expected = (embed_product(&[(0, &s.plus), (1, &creation_op(f))], &space).unwrap()
            + embed_product(&[(0, &s.minus), (1, &annihilation_op(f))], &space).unwrap())
            * lam;
        assert!(counter.max_abs_diff(&expected).unwrap() < 1e-15);
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let nz_counter = counter.matrix()[(i, j)].norm() > 1e-14;
                let nz_jc = jc.matrix()[(i, j)].norm() > 0.0;
                assert!(!(nz_counter && nz_jc), "supports overlap at ({i},{j})");
            }
        }
    }

    #[test]
    fn frame_rotation_is_involutive_and_swaps_axes() {
        let space = fictitious_space(SpinKind::Qubit, fock(2));
        let r = jc_frame_rotation(&space).unwrap();
        assert!((&r * &r).max_abs_diff(&Operator::identity(&space)).unwrap() < 1e-15);
        let s = spin_ops(SpinKind::Qubit);
        let sx = tensor_embed(&s.x, 0, &space).unwrap();
        let sz = tensor_embed(&s.z, 0, &space).unwrap();
        assert!((&(&r * &sz) * &r).max_abs_diff(&sx).unwrap() < 1e-15);
    }

    fn qutrit_params() -> TwoQutritParams {
        TwoQutritParams {
            omega: 1.0,
            splitting: 0.5,
            gamma_x: 1.0,
            lam1: 1.0,
            lam2: 0.95,
        }
    }

    #[test]
    fn qutrit_full_is_hermitian_and_keeps_spin_parity() {
        let space = two_qutrit_space(fock(6));
        let h = build_two_qutrit_full(&qutrit_params(), &space).unwrap();
        assert!(h.is_hermitian());
        // Sx⊗Sx changes the total Sz by 0 or ±2, so only its parity survives
        let parity: Vec<f64> = (0..space.dim())
            .map(|i| {
                let m = space.multi_index(i).unwrap();
                if (m[0] + m[1]).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let parity = Operator::from_diagonal(&space, &parity).unwrap();
        assert!(comm(&h, &parity) <= 1e-12);
    }

    #[test]
    fn qutrit_uncoupled_spectrum() {
        let p = TwoQutritParams {
            gamma_x: 0.0,
            lam1: 0.0,
            lam2: 0.0,
            ..qutrit_params()
        };
        let space = two_qutrit_space(fock(2));
        let h = build_two_qutrit_full(&p, &space).unwrap();
        assert!(h.is_diagonal());
        for i in 0..space.dim() {
            let m = space.multi_index(i).unwrap();
            let want = 0.5 * ((1.0 - m[0] as f64) + (1.0 - m[1] as f64)) + m[2] as f64;
            assert!((h.matrix()[(i, i)].re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn qutrit_jc_conserves_excitations() {
        let space = fictitious_space(SpinKind::Qutrit, fock(10));
        let p = TwoQutritParams {
            gamma_x: std::f64::consts::SQRT_2,
            ..qutrit_params()
        };
        let h = build_qutrit_jc(&p, &space).unwrap();
        assert!(h.is_hermitian());
        assert!(comm(&h, &excitation_number(&space).unwrap()) <= 1e-12);
        let eff = build_qutrit_effective(&p, &space).unwrap();
        assert!(eff.is_hermitian());
        let decoupled = TwoQutritParams { lam2: 1.0, ..p };
        let eff = build_qutrit_effective(&decoupled, &space).unwrap();
        // lam_- = 0: only the free qutrit and the free mode are left
        let free = tensor_embed(&spin_ops(SpinKind::Qutrit).x, 0, &space).unwrap() * decoupled.effective_gap()
            + &tensor_embed(&number_op(fock(10)), 1, &space).unwrap();
        assert_eq!(eff.max_abs_diff(&free).unwrap(), 0.0);
    }

    fn chain(deltas: Vec<f64>) -> ChainParams {
        ChainParams {
            n_spins: deltas.len(),
            splitting: 0.5,
            gamma: 1.0,
            omega: 1.0,
            deltas,
        }
    }

    #[test]
    fn chain_validation() {
        assert!(chain(vec![0.1; 3]).validate().is_err());
        assert!(chain(vec![0.1; 10]).validate().is_err());
        assert!(chain(vec![0.1; 4]).validate().is_ok());
        let mut p = chain(vec![0.1; 4]);
        p.deltas.pop();
        assert!(p.validate().is_err());
        assert!(SpinPattern::new(vec![1, 0, -1]).is_err());
    }

    #[test]
    fn chain_of_two_is_the_two_qubit_model() {
        let f = fock(5);
        let c = ChainParams {
            n_spins: 2,
            splitting: 0.3,
            gamma: 0.7,
            omega: 1.1,
            deltas: vec![0.4, 0.25],
        };
        let q = TwoQubitParams {
            omega: 1.1,
            eps1: 0.3,
            eps2: 0.3,
            gamma: 0.7,
            lam1: 0.4,
            lam2: 0.25,
        };
        let hc = build_chain_full(&c, &chain_space(2, f)).unwrap();
        let hq = build_two_qubit_full(&q, &two_qubit_space(f)).unwrap();
        assert!(hc.max_abs_diff(&hq).unwrap() < 1e-15);
    }

    #[test]
    fn chain_flip_term() {
        let f = fock(1);
        let space = chain_space(4, f);
        let p = ChainParams {
            splitting: 0.0,
            omega: 1.0,
            ..chain(vec![0.0; 4])
        };
        let h = build_chain_full(&p, &space).unwrap() - &tensor_embed(&number_op(f), 4, &space).unwrap();
        let uudd = SpinPattern::new(vec![1, 1, -1, -1]).unwrap();
        let dduu = uudd.flipped();
        let from = space.compose(uudd.bits(), 0);
        let to = space.compose(dduu.bits(), 0);
        assert_eq!(h.matrix()[(to, from)], C64::new(1.0, 0.0));
        let column_weight: f64 = (0..space.dim()).map(|r| h.matrix()[(r, from)].norm()).sum();
        assert_eq!(column_weight, 1.0);
    }

    #[test]
    fn chain_effective_parameters() {
        let p = chain(vec![0.1, 0.2, 0.3, 0.4]);
        let e = p.effective(&SpinPattern::new(vec![1, 1, -1, -1]).unwrap()).unwrap();
        assert!((e.delta_eff + 0.4).abs() < 1e-15);
        assert_eq!(e.splitting, 0.0);
        let aligned = chain(vec![0.01; 4]);
        let e = aligned.effective(&SpinPattern::new(vec![1; 4]).unwrap()).unwrap();
        assert!((e.delta_eff - 0.04).abs() < 1e-15);
        assert_eq!(e.splitting, 4.0 * 0.5);
        let dfs = chain(vec![0.3; 4]);
        let e = dfs.effective(&SpinPattern::new(vec![1, -1, 1, -1]).unwrap()).unwrap();
        assert_eq!(e.delta_eff, 0.0);
        assert!(p.effective(&SpinPattern::new(vec![1, 1]).unwrap()).is_err());
    }

    #[test]
    fn pattern_bits_round_trip() {
        for n in 1..=8 {
            for bits in 0..1usize << n {
                let p = SpinPattern::from_bits(n, bits);
                assert_eq!(p.bits(), bits);
                assert_eq!(p.flipped().bits(), !bits & ((1 << n) - 1));
            }
        }
        assert_eq!(SpinPattern::new(vec![1, -1, -1]).unwrap().to_string(), "udd");
    }
}
