//! Evolution schedules, the time-dependent Schrödinger integrator and the
//! quantum candidate-generation step of the search.
//!
//! The integrator is a piecewise-constant midpoint propagator: `[0, τ]` is cut
//! into `steps` equal intervals and each applies `exp(−i H(t_mid) Δt)` through
//! an eigendecomposition of the instantaneous Hamiltonian
//! `H(t) = [1 − s(t;τ)] H_I + s(t;τ) H_P`. Every step is exactly unitary and
//! the scheme is second-order accurate in `Δt`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::InitialHamiltonian;
use crate::quantum::{sample_index, HermitianOperator, StateVector, C64};
use crate::rng::SimRng;

pub const DEFAULT_TANH_STEEPNESS: f64 = 3.0;
pub const MIN_STEPS: usize = 64;
/// Steps per unit of `τ·‖H‖`, keeping the phase per step near 0.05 rad.
pub const STEPS_PER_PHASE: f64 = 20.0;
const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Interpolation `s(t;τ)` with `s(0)=0`, `s(τ)=1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `s = u` with `u = t/τ`.
    #[default]
    Linear,
    /// `s = 3u² − 2u³`.
    Smoothstep,
    /// `s = 1/2 + artanh((2u − 1)·tanh k) / 2k`, i.e. the elapsed fraction of
    /// time is a tanh profile in `s`. The sweep is slowest at `s = 1/2`, where
    /// `ds/du = tanh(k)/k`, and fast near the endpoints.
    TanhLike { steepness: f64 },
}

impl Schedule {
    pub fn tanh_like(steepness: f64) -> Result<Self> {
        let s = Schedule::TanhLike { steepness };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::TanhLike { steepness } if !(steepness > 0.0 && steepness.is_finite()) => Err(
                Error::Validation(format!("tanh_like steepness must be positive, got {steepness}")),
            ),
            _ => Ok(()),
        }
    }

    /// Short identifier used in output files.
    pub fn id(&self) -> String {
        match self {
            Schedule::Linear => "linear".into(),
            Schedule::Smoothstep => "smoothstep".into(),
            Schedule::TanhLike { steepness } => format!("tanh_like(k={steepness})"),
        }
    }

    /// `s` at the normalized time `u = t/τ ∈ [0, 1]` (clamped).
    pub fn at_fraction(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        match *self {
            Schedule::Linear => u,
            Schedule::Smoothstep => u * u * (3.0 - 2.0 * u),
            Schedule::TanhLike { steepness: k } => {
                let s = 0.5 + ((2.0 * u - 1.0) * k.tanh()).atanh() / (2.0 * k);
                s.clamp(0.0, 1.0)
            }
        }
    }
}

/// `s(t;τ)` for `0 ≤ t ≤ τ`.
pub fn schedule_value(schedule: &Schedule, t: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Validation(format!("tau must be positive, got {tau}")));
    }
    if !(0.0..=tau).contains(&t) {
        return Err(Error::Validation(format!("t = {t} outside [0, {tau}]")));
    }
    Ok(schedule.at_fraction(t / tau))
}

/// `max(64, ⌈20·τ·max(‖H_I‖, ‖H_P‖)⌉)`.
pub fn default_steps(tau: f64, h_initial: &HermitianOperator, h_problem: &HermitianOperator) -> usize {
    let max_norm = operator_norm(h_initial).max(operator_norm(h_problem));
    let wanted = (STEPS_PER_PHASE * tau * max_norm).ceil();
    if wanted.is_finite() {
        MIN_STEPS.max(wanted as usize)
    } else {
        MIN_STEPS
    }
}

fn operator_norm(h: &HermitianOperator) -> f64 {
    if h.is_diagonal(0.0) {
        h.diagonal().into_iter().fold(0.0, |m, d| m.max(d.abs()))
    } else {
        h.norm()
    }
}

/// One closed-system evolution: endpoints, schedule, total time and grid.
#[derive(Debug, Clone)]
pub struct EvolutionSpec<'a> {
    pub h_initial: &'a HermitianOperator,
    pub h_problem: &'a HermitianOperator,
    pub schedule: Schedule,
    pub tau: f64,
    pub steps: usize,
}

impl<'a> EvolutionSpec<'a> {
    /// Uses [`default_steps`].
    pub fn new(
        h_initial: &'a HermitianOperator,
        h_problem: &'a HermitianOperator,
        schedule: Schedule,
        tau: f64,
    ) -> Result<Self> {
        let spec = Self {
            h_initial,
            h_problem,
            schedule,
            tau,
            steps: default_steps(tau, h_initial, h_problem),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        self.steps = steps;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Validation(format!("tau must be positive, got {}", self.tau)));
        }
        if self.steps == 0 {
            return Err(Error::Validation("steps must be at least 1".into()));
        }
        if self.h_initial.dim() != self.h_problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.h_initial.dim(),
                found: self.h_problem.dim(),
            });
        }
        self.schedule.validate()
    }
}

/// Integrates `i dψ/dt = H(t)ψ` from `psi0` over `[0, τ]`.
pub fn evolve(spec: &EvolutionSpec<'_>, psi0: &StateVector) -> Result<StateVector> {
    spec.validate()?;
    let dim = spec.h_initial.dim();
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: psi0.dim(),
        });
    }
    let dt = spec.tau / spec.steps as f64;
    let mut psi = psi0.amplitudes().clone();
    let mut coeffs = DVector::from_element(dim, C64::new(0.0, 0.0));

    if spec.h_initial.is_real() && spec.h_problem.is_real() {
        let hi = spec.h_initial.matrix().map(|z| z.re);
        let hp = spec.h_problem.matrix().map(|z| z.re);
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..spec.steps {
            let s = spec.schedule.at_fraction((k as f64 + 0.5) / spec.steps as f64);
            h.zip_zip_apply(&hi, &hp, |out, a, b| *out = (1.0 - s) * a + s * b);
            let eig = SymmetricEigen::new(h.clone());
            step_real(&eig.eigenvectors, eig.eigenvalues.as_slice(), dt, &mut psi, &mut coeffs);
        }
    } else {
        let hi = spec.h_initial.matrix();
        let hp = spec.h_problem.matrix();
        for k in 0..spec.steps {
            let s = spec.schedule.at_fraction((k as f64 + 0.5) / spec.steps as f64);
            let h = hi.scale(1.0 - s) + hp.scale(s);
            let eig = SymmetricEigen::new(h);
            // coeffs = V† ψ
            eig.eigenvectors.ad_mul_to(&psi, &mut coeffs);
            for (c, &e) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
                *c *= C64::from_polar(1.0, -e * dt);
            }
            eig.eigenvectors.mul_to(&coeffs, &mut psi);
        }
    }

    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("evolution"));
    }
    let drift = (psi.norm() - 1.0).abs();
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::Validation(format!("norm drifted by {drift:e} during evolution")));
    }
    Ok(StateVector::from_raw(psi))
}

fn step_real(v: &DMatrix<f64>, energies: &[f64], dt: f64, psi: &mut DVector<C64>, coeffs: &mut DVector<C64>) {
    let dim = psi.len();
    for j in 0..dim {
        let col = v.column(j);
        let mut c = C64::new(0.0, 0.0);
        for i in 0..dim {
            c += psi[i] * col[i];
        }
        coeffs[j] = c * C64::from_polar(1.0, -energies[j] * dt);
    }
    for i in 0..dim {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            acc += coeffs[j] * v[(i, j)];
        }
        psi[i] = acc;
    }
}

/// Which branch of the generator produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `Φ0` measured directly (probability `1 − q`).
    Measure,
    /// `Φ0` evolved adiabatically, then measured (probability `q`).
    Evolve,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Measure => "measure",
            Branch::Evolve => "evolve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub index: usize,
    pub branch: Branch,
}

fn check_probability(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Validation(format!("q must be in [0, 1], got {q}")));
    }
    Ok(())
}

/// One call to the adiabatic machine: with probability `1 − q` measure `Φ0`
/// directly, otherwise evolve `Φ0` under `[1−s]H_I + s·H_P_eff` for time `τ`
/// and measure the final state.
pub fn generate_candidate(
    initial: &InitialHamiltonian,
    h_problem_eff: &HermitianOperator,
    schedule: &Schedule,
    tau: f64,
    q: f64,
    rng: &mut SimRng,
) -> Result<Candidate> {
    check_probability(q)?;
    if initial.dim() != h_problem_eff.dim() {
        return Err(Error::DimensionMismatch {
            expected: initial.dim(),
            found: h_problem_eff.dim(),
        });
    }
    let evolve_branch = rng.random::<f64>() < q;
    if !evolve_branch {
        let index = crate::quantum::measure_computational(&initial.ground, rng)?;
        return Ok(Candidate {
            index,
            branch: Branch::Measure,
        });
    }
    let spec = EvolutionSpec::new(&initial.operator, h_problem_eff, *schedule, tau)?;
    let final_state = evolve(&spec, &initial.ground)?;
    let index = sample_index(&final_state.probabilities(), rng);
    Ok(Candidate {
        index,
        branch: Branch::Evolve,
    })
}

/// Exact outcome law of [`generate_candidate`]:
/// `(1 − q)|b_x|² + q|⟨x|ψ(τ)⟩|²`.
pub fn candidate_distribution(
    initial: &InitialHamiltonian,
    h_problem_eff: &HermitianOperator,
    schedule: &Schedule,
    tau: f64,
    q: f64,
) -> Result<Vec<f64>> {
    check_probability(q)?;
    let direct = initial.ground.probabilities();
    if q == 0.0 {
        return Ok(direct);
    }
    let spec = EvolutionSpec::new(&initial.operator, h_problem_eff, *schedule, tau)?;
    let evolved = evolve(&spec, &initial.ground)?.probabilities();
    Ok(direct
        .iter()
        .zip(&evolved)
        .map(|(b, p)| (1.0 - q) * b + q * p)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::transverse_field_initial;
    use crate::quantum::ground_state;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn all_schedules() -> [Schedule; 4] {
        [
            Schedule::Linear,
            Schedule::Smoothstep,
            Schedule::TanhLike { steepness: 3.0 },
            Schedule::TanhLike { steepness: 0.5 },
        ]
    }

    #[test]
    fn schedule_midpoints_and_boundaries() {
        assert_eq!(schedule_value(&Schedule::Linear, 1.0, 2.0).unwrap(), 0.5);
        assert_eq!(schedule_value(&Schedule::Smoothstep, 1.0, 2.0).unwrap(), 0.5);
        for s in all_schedules() {
            assert_eq!(schedule_value(&s, 0.0, 7.0).unwrap(), 0.0);
            assert_eq!(schedule_value(&s, 7.0, 7.0).unwrap(), 1.0);
            assert_abs_diff_eq!(s.at_fraction(0.5), 0.5, epsilon = 1e-12);
        }
        assert!(schedule_value(&Schedule::Linear, 2.5, 2.0).is_err());
        assert!(schedule_value(&Schedule::Linear, -0.1, 2.0).is_err());
        assert!(Schedule::tanh_like(0.0).is_err());
    }

    #[test]
    fn schedules_are_monotone() {
        for s in all_schedules() {
            let values: Vec<f64> = (0..=1000).map(|k| s.at_fraction(k as f64 / 1000.0)).collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]), "{}", s.id());
        }
    }

    #[test]
    fn tanh_like_is_slowest_at_the_centre() {
        let s = Schedule::TanhLike { steepness: 3.0 };
        let h = 1e-6;
        let slope = |u: f64| (s.at_fraction(u + h) - s.at_fraction(u - h)) / (2.0 * h);
        assert_abs_diff_eq!(slope(0.5), 3f64.tanh() / 3.0, epsilon = 1e-6);
        assert!(slope(0.05) > slope(0.5));
        assert!(slope(0.95) > slope(0.5));
    }

    #[test]
    fn constant_hamiltonian_keeps_its_ground_state() {
        let init = transverse_field_initial(2).unwrap();
        let spec = EvolutionSpec::new(&init.operator, &init.operator, Schedule::Smoothstep, 3.7).unwrap();
        let out = evolve(&spec, &init.ground).unwrap();
        assert!(out.fidelity(&init.ground).unwrap() >= 1.0 - 1e-8);
    }

    #[test]
    fn single_qubit_adiabatic_and_sudden_limits() {
        let hi = HermitianOperator::pauli_x().scale(-1.0);
        let hp = HermitianOperator::pauli_z().scale(-1.0);
        let psi0 = ground_state(&hi, 1e-9).unwrap().state;
        let target = ground_state(&hp, 1e-9).unwrap().state;

        let slow = evolve(&EvolutionSpec::new(&hi, &hp, Schedule::Linear, 50.0).unwrap(), &psi0).unwrap();
        assert!(slow.fidelity(&target).unwrap() >= 0.99);

        let fast = evolve(&EvolutionSpec::new(&hi, &hp, Schedule::Linear, 0.01).unwrap(), &psi0).unwrap();
        // Sudden limit: the state barely moves, so the ground-state
        // probability stays near |⟨0|+⟩|² = 1/2.
        let f = fast.fidelity(&target).unwrap();
        assert!(f * f <= 0.6, "{f}");
        assert_abs_diff_eq!(f * f, 0.5, epsilon = 0.02);
    }

    #[test]
    fn complex_path_matches_real_path() {
        let hi = HermitianOperator::pauli_x().scale(-1.0);
        let hp = HermitianOperator::pauli_z().scale(-0.7);
        // A zero imaginary perturbation routes through the complex branch.
        let hp_c = hp.add(&HermitianOperator::pauli_y().scale(1e-300)).unwrap();
        assert!(!hp_c.is_real());
        let psi0 = ground_state(&hi, 1e-9).unwrap().state;
        let a = evolve(&EvolutionSpec::new(&hi, &hp, Schedule::Smoothstep, 4.0).unwrap(), &psi0).unwrap();
        let b = evolve(&EvolutionSpec::new(&hi, &hp_c, Schedule::Smoothstep, 4.0).unwrap(), &psi0).unwrap();
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn evolve_rejects_mismatched_dimensions() {
        let hi = HermitianOperator::pauli_x();
        let hp = HermitianOperator::identity(4);
        assert!(matches!(
            EvolutionSpec::new(&hi, &hp, Schedule::Linear, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let spec = EvolutionSpec::new(&hi, &hi, Schedule::Linear, 1.0).unwrap();
        let psi = StateVector::basis(4, 0).unwrap();
        assert!(evolve(&spec, &psi).is_err());
        assert!(spec.clone().with_steps(0).is_err());
    }

    #[test]
    fn default_step_rule() {
        let hi = HermitianOperator::pauli_x().scale(-1.0);
        let hp = HermitianOperator::from_diagonal(&[0.0, 3.0]);
        assert_eq!(default_steps(0.1, &hi, &hp), 64);
        assert_eq!(default_steps(10.0, &hi, &hp), 600);
    }

    #[test]
    fn q_zero_is_pure_measurement() {
        let init = transverse_field_initial(2).unwrap();
        let hp = HermitianOperator::from_diagonal(&[0.0, 1.0, 2.0, 3.0]);
        let dist = candidate_distribution(&init, &hp, &Schedule::Linear, 5.0, 0.0).unwrap();
        assert_eq!(dist, init.ground.probabilities());
        let mut r = rng::seeded(5);
        for _ in 0..50 {
            let c = generate_candidate(&init, &hp, &Schedule::Linear, 5.0, 0.0, &mut r).unwrap();
            assert_eq!(c.branch, Branch::Measure);
        }
    }

    #[test]
    fn q_one_long_evolution_finds_the_ground_state() {
        let init = transverse_field_initial(2).unwrap();
        let hp = HermitianOperator::from_diagonal(&[1.0, 2.0, 0.0, 3.0]);
        let mut r = rng::seeded(17);
        let hits = (0..200)
            .filter(|_| {
                let c = generate_candidate(&init, &hp, &Schedule::Smoothstep, 30.0, 1.0, &mut r).unwrap();
                assert_eq!(c.branch, Branch::Evolve);
                c.index == 2
            })
            .count();
        assert!(hits as f64 / 200.0 >= 0.95, "{hits}");
    }

    #[test]
    fn every_outcome_keeps_the_direct_measurement_floor() {
        let init = transverse_field_initial(2).unwrap();
        let hp = HermitianOperator::from_diagonal(&[1.0, 2.0, 0.0, 3.0]);
        for q in [0.0, 0.3, 0.9, 0.99] {
            let dist = candidate_distribution(&init, &hp, &Schedule::Linear, 20.0, q).unwrap();
            assert_abs_diff_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
            for p in dist {
                assert!(p >= (1.0 - q) / 4.0 - 1e-12);
            }
        }
        assert!(candidate_distribution(&init, &hp, &Schedule::Linear, 1.0, 1.5).is_err());
    }
}
