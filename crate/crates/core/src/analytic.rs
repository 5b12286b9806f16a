//! Resonant Jaynes-Cummings closed forms for a coherent field with real
//! amplitude, written in the dimensionless time `tau = lam_minus * t`.

use crate::error::{Error, Result};
use crate::hilbert::{coherent_amplitudes, poisson_tail};
use crate::C64;

/// Photon-number weights of a real coherent state, truncated at `n_terms`.
#[derive(Clone, Debug, PartialEq)]
pub struct JcPrediction {
    alpha: f64,
    lam_minus: f64,
    /// Renormalized `c_0..=c_{n_terms}`.
    c: Vec<f64>,
    tail_bound: f64,
}

impl JcPrediction {
    /// Errors if the Poisson weight beyond `n_terms` exceeds the coherent-state tolerance.
    pub fn new(alpha: f64, lam_minus: f64, n_terms: usize) -> Result<Self> {
        if !alpha.is_finite() || !lam_minus.is_finite() {
            return Err(Error::InvalidParams("alpha and lam_minus must be finite".into()));
        }
        let c = coherent_amplitudes(C64::new(alpha, 0.0), n_terms)?
            .into_iter()
            .map(|z| z.re)
            .collect();
        Ok(Self {
            alpha,
            lam_minus,
            c,
            tail_bound: poisson_tail(alpha * alpha, n_terms),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lam_minus(&self) -> f64 {
        self.lam_minus
    }

    pub fn n_terms(&self) -> usize {
        self.c.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn weights(&self) -> &[f64] {
        &self.c
    }

    /// `tau = lam_minus * t`.
    pub fn tau(&self, t: f64) -> f64 {
        self.lam_minus * t
    }

    fn coeff(&self, n: usize) -> f64 {
        self.c.get(n).copied().unwrap_or(0.0)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tau must be finite and non-negative, got {tau}"
        )))
    }
}

fn root(n: usize) -> f64 {
    (n as f64).sqrt()
}

/// `sum_n c_n^2 cos(sqrt(n+1) tau) cos(sqrt(n) tau) + c_{n+2} c_n sin(sqrt(n+2) tau) sin(sqrt(n+1) tau)`,
/// the first spin's `sigma_z` for the initial state `|↑↓> ⊗ |alpha>` in the
/// frame rotating with the free Hamiltonian.
pub fn sigma_z_closed_form(pred: &JcPrediction, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok((0..pred.c.len())
        .map(|n| {
            let cn = pred.c[n];
            cn * cn * (root(n + 1) * tau).cos() * (root(n) * tau).cos()
                + pred.coeff(n + 2) * cn * (root(n + 2) * tau).sin() * (root(n + 1) * tau).sin()
        })
        .sum())
}

/// `1/2 sum_n c_n^2 [cos^2(sqrt(n+1) tau) - cos^2(sqrt(n) tau)] + (c_{n+1}^2 - c_n^2) sin^2(sqrt(n+1) tau)`,
/// the expectation of `s1x s2x` for the same initial state.
///
/// The overall 1/2 matches exact Jaynes-Cummings evolution of the rotated
/// sector-b qubit, where `s1x s2x` becomes the fictitious `s_z`.
pub fn xx_closed_form(pred: &JcPrediction, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let sum: f64 = (0..pred.c.len())
        .map(|n| {
            let cn2 = pred.c[n] * pred.c[n];
            let next = pred.coeff(n + 1);
            let up = (root(n + 1) * tau).cos();
            let here = (root(n) * tau).cos();
            cn2 * (up * up - here * here) + (next * next - cn2) * (root(n + 1) * tau).sin().powi(2)
        })
        .sum();
    Ok(0.5 * sum)
}

/// `sum_n c_n^2 cos(2 sqrt(n) tau)`, the collapse-and-revival signal that
/// drives the concurrence.
pub fn inversion(pred: &JcPrediction, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(pred
        .c
        .iter()
        .enumerate()
        .map(|(n, cn)| cn * cn * (2.0 * root(n) * tau).cos())
        .sum())
}

/// `|1 - sum_n c_n^2 cos(2 sqrt(n) tau)| / 2`.
pub fn concurrence_closed_form(pred: &JcPrediction, tau: f64) -> Result<f64> {
    Ok(0.5 * (1.0 - inversion(pred, tau)?).abs())
}

/// Standard Jaynes-Cummings time scales in units of `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevivalScales {
    /// Gaussian collapse scale: the inversion envelope is `exp(-tau^2 / collapse^2)`.
    pub collapse: f64,
    /// First revival, `2 pi |alpha|`.
    pub revival: f64,
}

/// Window-placement estimates only; the closed forms above are the reference.
pub fn collapse_revival_times(alpha: f64) -> RevivalScales {
    RevivalScales {
        collapse: std::f64::consts::SQRT_2,
        revival: 2.0 * std::f64::consts::PI * alpha.abs(),
    }
}
