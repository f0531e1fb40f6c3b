//! Admissibility constants for the cross-diffusion strength: the Poincaré
//! constant `C_P`, the estimate constant `C_Ω(T)` and the resulting
//! threshold `δ_max = 1/sqrt(C_F² C_Ω)`.
//!
//! The constant of the smoothing operator acting on the cross term is taken as 1.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::system::{PotentialSpec, Problem};

/// Poincaré–Wirtinger constant `(|Ω|/π)²` of an interval.
pub fn poincare_constant(omega_len: f64) -> f64 {
    (omega_len / PI).powi(2)
}

/// `C_Ω = 2 max{1 + C_P, T/|Ω| + 2|Ω|(1 + C_P)(e⁻¹ + 2T C_L²)}`
pub fn c_omega(t_final: f64, c_l: f64, omega_len: f64, c_p: f64) -> Result<f64> {
    if !(omega_len > 0.0) {
        return Err(Error::config(format!(
            "domain length must be positive, got {omega_len}"
        )));
    }
    if t_final < 0.0 || c_l < 0.0 || c_p < 0.0 {
        return Err(Error::config("T, C_L and C_P must be non-negative"));
    }
    let first = 1.0 + c_p;
    let second =
        t_final / omega_len + 2.0 * omega_len * (1.0 + c_p) * (1.0 / E + 2.0 * t_final * c_l * c_l);
    Ok(2.0 * first.max(second))
}

/// `1 / sqrt(C_F² C_Ω)`
pub fn delta_max(c_omega: f64, c_f: f64) -> f64 {
    1.0 / (c_f * c_f * c_omega).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub t_final: f64,
    pub c_l: f64,
    pub omega_len: f64,
    pub c_p: f64,
    pub c_f: f64,
    pub c_omega: f64,
    pub delta_max: f64,
}

impl BoundsReport {
    /// `c_p` defaults to the interval Poincaré constant and `c_f` to 1.
    pub fn new(
        t_final: f64,
        c_l: f64,
        omega_len: f64,
        c_p: Option<f64>,
        c_f: Option<f64>,
    ) -> Result<Self> {
        let c_p = c_p.unwrap_or_else(|| poincare_constant(omega_len));
        let c_f = c_f.unwrap_or(1.0);
        if !(c_f > 0.0) {
            return Err(Error::config(format!("C_F must be positive, got {c_f}")));
        }
        let c_omega = c_omega(t_final, c_l, omega_len, c_p)?;
        Ok(Self {
            t_final,
            c_l,
            omega_len,
            c_p,
            c_f,
            c_omega,
            delta_max: delta_max(c_omega, c_f),
        })
    }
}

/// Candidate values of `C_L` for a set of potentials under different norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftBoundCandidates {
    /// `max_i ‖V_i‖_{L²(Ω)}`
    pub l2: f64,
    /// `max_i ‖V_i‖_{C⁰}`
    pub c0: f64,
    /// `max_i max(‖V_i‖_{C⁰}, ‖V_i′‖_{C⁰}, ‖V_i″‖_{C⁰})`
    pub c2: f64,
}

/// Evaluate the `C_L` candidates. Quadratic potentials are evaluated exactly
/// on the closed domain; tabulated ones from their samples and finite differences.
pub fn c_l_from_potentials(problem: &Problem) -> DriftBoundCandidates {
    let grid = problem.grid();
    let edge = grid.x_min().abs().max(grid.x_max().abs());
    let dx = grid.dx();
    let mut out = DriftBoundCandidates {
        l2: 0.0,
        c0: 0.0,
        c2: 0.0,
    };
    for (i, s) in problem.spec().species.iter().enumerate() {
        let samples = problem.potential(i);
        let l2 = crate::diagnostics::l2_norm(samples, grid);
        let (c0, c1, c2) = match &s.potential {
            PotentialSpec::Zero => (0.0, 0.0, 0.0),
            PotentialSpec::Quadratic { a } => {
                let a = a.abs();
                (a * edge * edge, 2.0 * a * edge, 2.0 * a)
            }
            PotentialSpec::Tabulated(v) => {
                let c0 = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let c1 = v
                    .windows(2)
                    .fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs() / dx));
                let c2 = v.windows(3).fold(0.0f64, |m, w| {
                    m.max((w[2] - 2.0 * w[1] + w[0]).abs() / (dx * dx))
                });
                (c0, c1, c2)
            }
        };
        out.l2 = out.l2.max(l2);
        out.c0 = out.c0.max(c0);
        out.c2 = out.c2.max(c0.max(c1).max(c2));
    }
    out
}
