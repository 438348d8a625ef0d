//! Adiabatic Grover search: `H_I = 𝕀 − |Φ0⟩⟨Φ0|`, `H_P = 𝕀 − |x̂⟩⟨x̂|`, and
//! the minimal run time a schedule needs to reach a target success
//! probability.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionSpec, Schedule};
use crate::hamiltonians::grover_initial_capped;
use crate::quantum::{register_dimension, HermitianOperator, StateVector};

/// Largest register the schedule comparison accepts.
pub const MAX_QUBITS: usize = 6;

pub fn grover_problem(n_qubits: usize, target: usize) -> Result<HermitianOperator> {
    let dim = register_dimension(n_qubits, 1 << MAX_QUBITS)?;
    let marked = StateVector::basis(dim, target)?;
    HermitianOperator::identity(dim).sub(&HermitianOperator::projector(&marked))
}

/// `|⟨x̂|ψ(τ)⟩|²` after evolving the uniform superposition.
pub fn success_probability(n_qubits: usize, schedule: &Schedule, tau: f64) -> Result<f64> {
    let initial = grover_initial_capped(n_qubits, 1 << MAX_QUBITS)?;
    let target = 0;
    let h_p = grover_problem(n_qubits, target)?;
    let spec = EvolutionSpec::new(&initial.operator, &h_p, *schedule, tau)?;
    let psi = evolve(&spec, &initial.ground)?;
    Ok(psi.probabilities()[target])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSearch {
    pub tau_start: f64,
    /// Doubling stops here; beyond it the result is censored.
    pub tau_cap: f64,
    /// Bisection stops once `(hi − lo)/hi` is below this.
    pub rel_tol: f64,
}

impl Default for TimeSearch {
    fn default() -> Self {
        Self {
            tau_start: 0.5,
            tau_cap: 1e4,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "tau")]
pub enum TauNeeded {
    Found(f64),
    /// Target not reached at the cap.
    Censored(f64),
}

impl TauNeeded {
    pub fn value(&self) -> Option<f64> {
        match *self {
            TauNeeded::Found(t) => Some(t),
            TauNeeded::Censored(_) => None,
        }
    }
}

/// Smallest `τ` (to `rel_tol`) with success probability at least `target`:
/// doubling from `tau_start` to bracket the first success, then bisection
/// inside the bracket.
pub fn minimal_time(n_qubits: usize, schedule: &Schedule, target: f64, search: &TimeSearch) -> Result<TauNeeded> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Validation(format!("target must be in (0, 1), got {target}")));
    }
    if !(search.tau_start > 0.0 && search.tau_cap >= search.tau_start && search.rel_tol > 0.0) {
        return Err(Error::Validation("invalid time-search settings".into()));
    }
    let reached = |tau: f64| success_probability(n_qubits, schedule, tau).map(|p| p >= target);

    let mut lo = 0.0;
    let mut hi = search.tau_start;
    while !reached(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > search.tau_cap {
            return Ok(TauNeeded::Censored(search.tau_cap));
        }
    }
    while (hi - lo) / hi > search.rel_tol {
        let mid = 0.5 * (lo + hi);
        if reached(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(TauNeeded::Found(hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub n: usize,
    pub schedule: String,
    pub tau_needed: TauNeeded,
}

/// One row per `(n, schedule)`, `n` in `n_range`.
pub fn compare_schedules(
    n_range: std::ops::RangeInclusive<usize>,
    schedules: &[Schedule],
    target: f64,
    search: &TimeSearch,
) -> Result<Vec<ScheduleRow>> {
    if *n_range.end() > MAX_QUBITS || *n_range.start() == 0 {
        return Err(Error::Validation(format!("n must lie in 1..={MAX_QUBITS}")));
    }
    let mut rows = Vec::new();
    for n in n_range {
        for s in schedules {
            rows.push(ScheduleRow {
                n,
                schedule: s.id(),
                tau_needed: minimal_time(n, s, target, search)?,
            });
        }
    }
    Ok(rows)
}

/// `τ(n)/τ(n−1)` for consecutive rows of one schedule; pairs with a censored
/// side are skipped.
pub fn growth_ratios(rows: &[ScheduleRow], schedule_id: &str) -> Vec<(usize, f64)> {
    let mut taus: Vec<(usize, Option<f64>)> = rows
        .iter()
        .filter(|r| r.schedule == schedule_id)
        .map(|r| (r.n, r.tau_needed.value()))
        .collect();
    taus.sort_by_key(|t| t.0);
    taus.windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            ((n0, Some(a)), (n1, Some(b))) if n1 == n0 + 1 => Some((n1, b / a)),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ground_state;

    #[test]
    fn problem_ground_state_is_marked() {
        let h = grover_problem(3, 5).unwrap();
        let g = ground_state(&h, 1e-9).unwrap();
        assert!(g.energy.abs() < 1e-12);
        assert!((g.state.probabilities()[5] - 1.0).abs() < 1e-12);
        assert!(grover_problem(2, 4).is_err());
    }

    #[test]
    fn slow_evolution_succeeds() {
        let p = success_probability(2, &Schedule::Linear, 200.0).unwrap();
        assert!(p > 0.99, "{p}");
        let sudden = success_probability(2, &Schedule::Linear, 1e-3).unwrap();
        assert!((sudden - 0.25).abs() < 1e-3);
    }

    #[test]
    fn minimal_time_reaches_target() {
        let search = TimeSearch::default();
        for s in [Schedule::Linear, Schedule::tanh_like(3.0).unwrap()] {
            let tau = minimal_time(1, &s, 0.9, &search).unwrap().value().unwrap();
            assert!(tau.is_finite() && tau > 0.0);
            assert!(success_probability(1, &s, tau).unwrap() >= 0.9);
        }
    }

    #[test]
    fn cap_censors() {
        let search = TimeSearch {
            tau_start: 0.1,
            tau_cap: 0.5,
            rel_tol: 1e-3,
        };
        assert_eq!(
            minimal_time(4, &Schedule::Linear, 0.99, &search).unwrap(),
            TauNeeded::Censored(0.5)
        );
    }

    #[test]
    fn ratios_skip_censored() {
        let row = |n, t| ScheduleRow {
            n,
            schedule: "linear".into(),
            tau_needed: t,
        };
        let rows = vec![
            row(1, TauNeeded::Found(1.0)),
            row(2, TauNeeded::Found(2.5)),
            row(3, TauNeeded::Censored(10.0)),
            row(4, TauNeeded::Found(9.0)),
        ];
        assert_eq!(growth_ratios(&rows, "linear"), vec![(2, 2.5)]);
    }
}
