//! Spectral-gap profiles of the interpolated Hamiltonian
//! `H̃(s) = (1 − s) H_I + s H_P` and the adiabatic run-time bound built on them.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionSpec, Schedule};
use crate::quantum::{eigendecompose, ground_state, HermitianOperator};

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralProfile {
    pub s_grid: Vec<f64>,
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    /// `λ(s) = E_1(s) − E_0(s)`.
    pub gap: Vec<f64>,
    /// `‖dH̃/ds‖`, constant `‖H_P − H_I‖` along the linear path.
    pub dh_norm: Vec<f64>,
    pub lambda_min: f64,
    /// Grid point where `lambda_min` is attained.
    pub s_at_min: f64,
}

impl SpectralProfile {
    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    /// CSV with columns `s,E0,E1,gap,dH_norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "s,E0,E1,gap,dH_norm")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.s_grid[i], self.e0[i], self.e1[i], self.gap[i], self.dh_norm[i]
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

pub fn gap_profile(
    h_initial: &HermitianOperator,
    h_problem: &HermitianOperator,
    grid_points: usize,
) -> Result<SpectralProfile> {
    gap_profile_with_tol(h_initial, h_problem, grid_points, DEGENERACY_TOL)
}

/// Lowest two eigenvalues of `H̃(s)` on `grid_points` equally spaced values of
/// `s ∈ [0, 1]`. Fails with [`Error::GapClosure`] if the gap drops to
/// `degeneracy_tol` anywhere on the grid.
pub fn gap_profile_with_tol(
    h_initial: &HermitianOperator,
    h_problem: &HermitianOperator,
    grid_points: usize,
    degeneracy_tol: f64,
) -> Result<SpectralProfile> {
    if grid_points < 2 {
        return Err(Error::Validation(format!("grid_points must be at least 2, got {grid_points}")));
    }
    if h_initial.dim() != h_problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_initial.dim(),
            found: h_problem.dim(),
        });
    }
    if h_initial.dim() < 2 {
        return Err(Error::Validation("a gap needs at least two levels".into()));
    }
    let derivative = h_problem.sub(h_initial)?.norm();
    let last = (grid_points - 1) as f64;
    let s_grid: Vec<f64> = (0..grid_points).map(|i| i as f64 / last).collect();
    let mut e0 = Vec::with_capacity(grid_points);
    let mut e1 = Vec::with_capacity(grid_points);
    let mut gap = Vec::with_capacity(grid_points);
    for &s in &s_grid {
        let h = h_initial.combine(1.0 - s, h_problem, s)?;
        let eig = eigendecompose(&h);
        let g = eig.eigenvalues[1] - eig.eigenvalues[0];
        if g <= degeneracy_tol {
            return Err(Error::GapClosure { s, gap: g });
        }
        e0.push(eig.eigenvalues[0]);
        e1.push(eig.eigenvalues[1]);
        gap.push(g);
    }
    let (imin, &lambda_min) = gap
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    Ok(SpectralProfile {
        s_at_min: s_grid[imin],
        s_grid,
        e0,
        e1,
        gap,
        dh_norm: vec![derivative; grid_points],
        lambda_min,
    })
}

/// Right-hand side of the adiabatic run-time condition
///
/// `τ ≥ (4/ε)[‖H̃′(0)‖/λ(0)² + ‖H̃′(1)‖/λ(1)² + ∫₀¹ (10‖H̃′(s)‖/λ³ + ‖H̃′(s)‖/λ) ds]`
///
/// with `λ = min_s λ(s)` inside the integral. The integral is evaluated with
/// the trapezoid rule on the profile grid.
pub fn adiabatic_time_bound(profile: &SpectralProfile, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Validation(format!("epsilon must be in (0, 1), got {epsilon}")));
    }
    if profile.len() < 2 {
        return Err(Error::Validation("profile needs at least two grid points".into()));
    }
    if let Some(i) = profile.gap.iter().position(|&g| g <= 0.0) {
        return Err(Error::GapClosure {
            s: profile.s_grid[i],
            gap: profile.gap[i],
        });
    }
    let lam = profile.lambda_min;
    let n = profile.len();
    let boundary = profile.dh_norm[0] / profile.gap[0].powi(2)
        + profile.dh_norm[n - 1] / profile.gap[n - 1].powi(2);
    let integrand: Vec<f64> = profile
        .dh_norm
        .iter()
        .map(|&d| 10.0 * d / lam.powi(3) + d / lam)
        .collect();
    let integral = trapezoid(&profile.s_grid, &integrand);
    Ok(4.0 / epsilon * (boundary + integral))
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub lambda_min: f64,
    pub tau_min: f64,
    pub steps: usize,
    /// `‖ψ(τ) − ground(H_P)‖` minimized over a global phase.
    pub achieved_distance: f64,
    pub within_bound: bool,
}

/// Evolves the ground state of `H_I` with the linear schedule for
/// `τ = adiabatic_time_bound(ε)` and measures the phase-minimized distance to
/// the ground state of `H_P`.
pub fn verify_bound(
    h_initial: &HermitianOperator,
    h_problem: &HermitianOperator,
    epsilon: f64,
) -> Result<BoundReport> {
    verify_bound_on_grid(h_initial, h_problem, epsilon, DEFAULT_GRID_POINTS)
}

pub fn verify_bound_on_grid(
    h_initial: &HermitianOperator,
    h_problem: &HermitianOperator,
    epsilon: f64,
    grid_points: usize,
) -> Result<BoundReport> {
    let profile = gap_profile(h_initial, h_problem, grid_points)?;
    let tau_min = adiabatic_time_bound(&profile, epsilon)?;
    let start = ground_state(h_initial, DEGENERACY_TOL)?;
    let target = ground_state(h_problem, DEGENERACY_TOL)?;
    let spec = EvolutionSpec::new(h_initial, h_problem, Schedule::Linear, tau_min)?;
    let psi = evolve(&spec, &start.state)?;
    let achieved_distance = psi.phase_distance(&target.state)?;
    Ok(BoundReport {
        epsilon,
        lambda_min: profile.lambda_min,
        tau_min,
        steps: spec.steps,
        achieved_distance,
        within_bound: achieved_distance <= epsilon,
    })
}
