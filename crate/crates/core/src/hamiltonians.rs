//! Initial Hamiltonians, parametrized problem-Hamiltonian families and the
//! tabu penalty operator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    register_dimension, uniform_superposition_capped, HermitianOperator, StateVector,
    DEFAULT_DIMENSION_CAP,
};

/// Shape of a family `w ↦ H_P(w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// One free energy per basis state: `H_P(w) = diag(w)`.
    Diagonal { dim: usize },
    /// `Σ_i θ_i σ_z⁽ⁱ⁾ + Σ_(i,j)∈E θ_ij σ_z⁽ⁱ⁾σ_z⁽ʲ⁾` with `w = (θ_vertices, θ_edges)`.
    Ising {
        n_vertices: usize,
        edges: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFamily {
    pub kind: FamilyKind,
    /// Optional box `[lo, hi]` applied to every coordinate of `w`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
}

impl ProblemFamily {
    pub fn diagonal(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Validation(format!("diagonal family needs dim >= 2, got {dim}")));
        }
        if dim > DEFAULT_DIMENSION_CAP {
            return Err(Error::Capacity {
                requested: dim,
                cap: DEFAULT_DIMENSION_CAP,
            });
        }
        Ok(Self {
            kind: FamilyKind::Diagonal { dim },
            bounds: None,
        })
    }

    pub fn ising(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        register_dimension(n_vertices, DEFAULT_DIMENSION_CAP)?;
        for (k, &(i, j)) in edges.iter().enumerate() {
            if i >= n_vertices || j >= n_vertices {
                return Err(Error::Validation(format!("edge ({i},{j}) references a missing vertex")));
            }
            if i == j {
                return Err(Error::Validation(format!("edge ({i},{j}) is a self-loop")));
            }
            let dup = edges[..k]
                .iter()
                .any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i));
            if dup {
                return Err(Error::Validation(format!("edge ({i},{j}) is repeated")));
            }
        }
        Ok(Self {
            kind: FamilyKind::Ising { n_vertices, edges },
            bounds: None,
        })
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Validation(format!("invalid bounds [{lo}, {hi}]")));
        }
        self.bounds = Some((lo, hi));
        Ok(self)
    }

    /// Re-checks invariants after deserialization.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = match &self.kind {
            FamilyKind::Diagonal { dim } => Self::diagonal(*dim)?,
            FamilyKind::Ising { n_vertices, edges } => Self::ising(*n_vertices, edges.clone())?,
        };
        if let Some((lo, hi)) = self.bounds {
            rebuilt.with_bounds(lo, hi)?;
        }
        Ok(())
    }

    /// Hilbert-space dimension of the operators this family produces.
    pub fn dim(&self) -> usize {
        match &self.kind {
            FamilyKind::Diagonal { dim } => *dim,
            FamilyKind::Ising { n_vertices, .. } => 1 << n_vertices,
        }
    }

    /// Short identifier used in result records.
    pub fn id(&self) -> String {
        match &self.kind {
            FamilyKind::Diagonal { dim } => format!("diagonal(d={dim})"),
            FamilyKind::Ising { n_vertices, edges } => {
                let e: Vec<String> = edges.iter().map(|(i, j)| format!("{i}-{j}")).collect();
                format!("ising(n={n_vertices},edges={})", e.join(" "))
            }
        }
    }

    pub fn parameter_dim(&self) -> usize {
        match &self.kind {
            FamilyKind::Diagonal { dim } => *dim,
            FamilyKind::Ising { n_vertices, edges } => n_vertices + edges.len(),
        }
    }

    pub fn check_parameters(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.parameter_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_dim(),
                found: w.len(),
            });
        }
        if let Some(k) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("parameter w[{k}] is not finite")));
        }
        if let Some((lo, hi)) = self.bounds {
            if let Some((index, &value)) = w.iter().enumerate().find(|(_, &v)| v < lo || v > hi) {
                return Err(Error::OutOfBounds { index, value, lo, hi });
            }
        }
        Ok(())
    }

    /// Diagonal of `H_P(w)` in the computational basis; both built-in kinds
    /// are diagonal.
    pub fn energies(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_parameters(w)?;
        Ok(match &self.kind {
            FamilyKind::Diagonal { .. } => w.to_vec(),
            FamilyKind::Ising { n_vertices, edges } => {
                let n = *n_vertices;
                let (fields, couplings) = w.split_at(n);
                (0..1usize << n)
                    .map(|x| {
                        let z = |i: usize| spin(x, i, n);
                        let field: f64 = fields.iter().enumerate().map(|(i, t)| t * z(i)).sum();
                        let coupling: f64 = edges
                            .iter()
                            .zip(couplings)
                            .map(|(&(i, j), t)| t * z(i) * z(j))
                            .sum();
                        field + coupling
                    })
                    .collect()
            }
        })
    }

    pub fn build(&self, w: &[f64]) -> Result<HermitianOperator> {
        Ok(HermitianOperator::from_diagonal(&self.energies(w)?))
    }

    /// `L` with `‖H(w) − H(w′)‖ ≤ L‖w − w′‖_∞`: the sum of the operator norms
    /// of the individual terms, each of which is one here.
    pub fn lipschitz_constant(&self) -> f64 {
        match &self.kind {
            // Distinct diagonal terms act on disjoint entries.
            FamilyKind::Diagonal { .. } => 1.0,
            FamilyKind::Ising { .. } => self.parameter_dim() as f64,
        }
    }

    pub fn clip(&self, w: &mut [f64]) {
        if let Some((lo, hi)) = self.bounds {
            for v in w.iter_mut() {
                *v = v.clamp(lo, hi);
            }
        }
    }

    /// A parameter vector whose problem Hamiltonian has `|x⟩` as unique ground
    /// state, with unit-scale parameters (clipped to the box when set).
    pub fn anchor(&self, x: usize) -> Result<Vec<f64>> {
        let dim = self.dim();
        if x >= dim {
            return Err(Error::IndexOutOfRange { index: x, dim });
        }
        let mut w = match &self.kind {
            FamilyKind::Diagonal { dim } => {
                let mut w = vec![0.0; *dim];
                w[x] = -1.0;
                w
            }
            FamilyKind::Ising { n_vertices, edges } => {
                // θ_i z_i is minimized by z_i = -sign(θ_i).
                let mut w: Vec<f64> = (0..*n_vertices).map(|i| -spin(x, i, *n_vertices)).collect();
                w.extend(std::iter::repeat_n(0.0, edges.len()));
                w
            }
        };
        self.clip(&mut w);
        Ok(w)
    }
}

/// `σ_z` eigenvalue of qubit `i` (big-endian) in basis state `x`.
fn spin(x: usize, i: usize, n: usize) -> f64 {
    if (x >> (n - 1 - i)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    TransverseField,
    Grover,
    Custom,
}

/// A fixed initial Hamiltonian together with its known ground state `Φ0`.
#[derive(Debug, Clone)]
pub struct InitialHamiltonian {
    pub kind: InitialKind,
    pub operator: HermitianOperator,
    pub ground: StateVector,
    pub gap_at_start: f64,
}

impl InitialHamiltonian {
    /// Wraps an arbitrary operator, computing its ground state. Every
    /// `|b_x|²` must be at least `amplitude_floor`, and the ground state must
    /// be non-degenerate.
    pub fn from_operator(operator: HermitianOperator, amplitude_floor: f64) -> Result<Self> {
        let eig = crate::quantum::eigendecompose(&operator);
        let gap = eig.gap();
        if gap <= 1e-9 {
            return Err(Error::Validation("initial Hamiltonian has a degenerate ground state".into()));
        }
        let init = Self {
            kind: InitialKind::Custom,
            ground: eig.state(0)?,
            operator,
            gap_at_start: gap,
        };
        let min_b = init.min_amplitude_sqr();
        if min_b < amplitude_floor {
            return Err(Error::Validation(format!(
                "initial ground state has min |b_x|^2 = {min_b:e}, below the floor {amplitude_floor:e}"
            )));
        }
        Ok(init)
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// `min_x |b_x|²` of the ground state.
    pub fn min_amplitude_sqr(&self) -> f64 {
        self.ground
            .probabilities()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `H_I = −Σ_i σ_x⁽ⁱ⁾` with the uniform superposition as ground state.
pub fn transverse_field_initial(n_qubits: usize) -> Result<InitialHamiltonian> {
    transverse_field_initial_capped(n_qubits, DEFAULT_DIMENSION_CAP)
}

pub fn transverse_field_initial_capped(n_qubits: usize, cap: usize) -> Result<InitialHamiltonian> {
    let dim = register_dimension(n_qubits, cap)?;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..dim {
        for i in 0..n_qubits {
            m[(x, x ^ (1 << i))] = -1.0;
        }
    }
    Ok(InitialHamiltonian {
        kind: InitialKind::TransverseField,
        operator: HermitianOperator::from_real(m)?,
        ground: uniform_superposition_capped(n_qubits, cap)?,
        gap_at_start: 2.0,
    })
}

/// `H_I = 𝕀 − |Φ0⟩⟨Φ0|` for the uniform superposition `Φ0`.
pub fn grover_initial(n_qubits: usize) -> Result<InitialHamiltonian> {
    grover_initial_capped(n_qubits, DEFAULT_DIMENSION_CAP)
}

pub fn grover_initial_capped(n_qubits: usize, cap: usize) -> Result<InitialHamiltonian> {
    let ground = uniform_superposition_capped(n_qubits, cap)?;
    let dim = ground.dim();
    let operator = HermitianOperator::identity(dim).sub(&HermitianOperator::projector(&ground))?;
    Ok(InitialHamiltonian {
        kind: InitialKind::Grover,
        operator,
        ground,
        gap_at_start: 1.0,
    })
}

/// Multiset of penalized basis states with unit penalty; the operator is
/// `Σ_k |x_k⟩⟨x_k|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuHamiltonian {
    counts: Vec<u32>,
}

impl TabuHamiltonian {
    pub fn empty(dim: usize) -> Self {
        Self { counts: vec![0; dim] }
    }

    pub fn from_states(dim: usize, states: &[usize]) -> Result<Self> {
        states
            .iter()
            .try_fold(Self::empty(dim), |tabu, &x| tabu.add(x))
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Returns a copy with the multiplicity of `x` raised by one.
    pub fn add(&self, x: usize) -> Result<Self> {
        if x >= self.dim() {
            return Err(Error::IndexOutOfRange { index: x, dim: self.dim() });
        }
        let mut next = self.clone();
        next.counts[x] += 1;
        Ok(next)
    }

    pub fn multiplicity(&self, x: usize) -> u32 {
        self.counts.get(x).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Total multiplicity (size of the multiset).
    pub fn len(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The multiset as a sorted list with repetitions.
    pub fn penalized(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize))
            .collect()
    }

    pub fn operator(&self) -> HermitianOperator {
        let diag: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        HermitianOperator::from_diagonal(&diag)
    }
}

/// `H_P + H_tabu`.
pub fn effective_problem_hamiltonian(
    problem: &HermitianOperator,
    tabu: &TabuHamiltonian,
) -> Result<HermitianOperator> {
    if problem.dim() != tabu.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: tabu.dim(),
        });
    }
    problem.add(&tabu.operator())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{commutator_norm, eigendecompose, ground_state};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_vertex_ising_is_sigma_z() {
        let fam = ProblemFamily::ising(1, vec![]).unwrap();
        assert_eq!(fam.build(&[1.0]).unwrap(), HermitianOperator::pauli_z());
    }

    #[test]
    fn zero_parameters_give_zero_operator() {
        let fams = [
            ProblemFamily::diagonal(4).unwrap(),
            ProblemFamily::ising(3, vec![(0, 1), (1, 2)]).unwrap(),
        ];
        for fam in fams {
            let h = fam.build(&vec![0.0; fam.parameter_dim()]).unwrap();
            assert_eq!(h, HermitianOperator::zeros(fam.dim()));
        }
    }

    #[test]
    fn zz_coupling_spectrum() {
        let fam = ProblemFamily::ising(2, vec![(0, 1)]).unwrap();
        assert_eq!(fam.parameter_dim(), 3);
        assert_eq!(fam.energies(&[0.0, 0.0, 1.0]).unwrap(), vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn ising_field_ordering_is_big_endian() {
        let fam = ProblemFamily::ising(2, vec![]).unwrap();
        // θ on qubit 0 only: |0x⟩ → +1, |1x⟩ → −1.
        assert_eq!(fam.energies(&[1.0, 0.0]).unwrap(), vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn build_errors() {
        let fam = ProblemFamily::diagonal(4).unwrap().with_bounds(-1.0, 1.0).unwrap();
        assert!(matches!(fam.build(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            fam.build(&[0.0, 2.0, 0.0, 0.0]),
            Err(Error::OutOfBounds { index: 1, .. })
        ));
        assert!(ProblemFamily::ising(2, vec![(0, 0)]).is_err());
        assert!(ProblemFamily::ising(2, vec![(0, 1), (1, 0)]).is_err());
        assert!(ProblemFamily::ising(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn transverse_field_one_qubit() {
        let h = transverse_field_initial(1).unwrap();
        assert_eq!(h.operator, HermitianOperator::pauli_x().scale(-1.0));
        let eig = eigendecompose(&h.operator);
        assert_abs_diff_eq!(eig.gap(), h.gap_at_start, epsilon = 1e-12);
        assert_abs_diff_eq!(h.ground.amplitudes()[0].re, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn transverse_field_ground_state_and_gap() {
        for n in 1..=4 {
            let h = transverse_field_initial(n).unwrap();
            let g = ground_state(&h.operator, 1e-9).unwrap();
            assert_abs_diff_eq!(g.energy, -(n as f64), epsilon = 1e-10);
            assert_abs_diff_eq!(g.state.fidelity(&h.ground).unwrap(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(eigendecompose(&h.operator).gap(), 2.0, epsilon = 1e-10);
            let residual = (h.operator.matrix() * h.ground.amplitudes()
                - h.ground.amplitudes().scale(-(n as f64)))
            .norm();
            assert!(residual <= 1e-8);
        }
        let h2 = transverse_field_initial(2).unwrap();
        assert!(h2.ground.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-15));
    }

    #[test]
    fn transverse_field_does_not_commute_with_distinct_diagonal() {
        for n in 1..=4 {
            let h = transverse_field_initial(n).unwrap();
            let diag: Vec<f64> = (0..1 << n).map(|x| x as f64).collect();
            let c = commutator_norm(&h.operator, &HermitianOperator::from_diagonal(&diag)).unwrap();
            assert!(c > 0.5, "n={n}: {c}");
        }
    }

    #[test]
    fn grover_initial_spectrum() {
        let h = grover_initial(1).unwrap();
        let eig = eigendecompose(&h.operator);
        assert_abs_diff_eq!(eig.eigenvalues[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.operator.expectation(&h.ground).unwrap(), 0.0, epsilon = 1e-12);
        let h3 = grover_initial(3).unwrap();
        assert_abs_diff_eq!(eigendecompose(&h3.operator).gap(), 1.0, epsilon = 1e-10);
        assert_eq!(h3.gap_at_start, 1.0);
    }

    #[test]
    fn tabu_examples() {
        let t = TabuHamiltonian::empty(4);
        assert_eq!(t.operator(), HermitianOperator::zeros(4));
        let t1 = t.add(1).unwrap();
        assert_eq!(t1.operator(), HermitianOperator::from_diagonal(&[0.0, 1.0, 0.0, 0.0]));
        let t2 = t1.add(1).unwrap();
        assert_eq!(t2.operator(), HermitianOperator::from_diagonal(&[0.0, 2.0, 0.0, 0.0]));
        assert_eq!(t2.penalized(), vec![1, 1]);
        assert_eq!(t2.len(), 2);
        // the original value is untouched
        assert!(t.is_empty());
        assert!(matches!(t.add(4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn effective_hamiltonian_examples() {
        let hp = HermitianOperator::from_diagonal(&[0.3, -0.2, 1.0]);
        assert_eq!(effective_problem_hamiltonian(&hp, &TabuHamiltonian::empty(3)).unwrap(), hp);

        let zero = HermitianOperator::from_diagonal(&[0.0, 0.0]);
        let tabu = TabuHamiltonian::from_states(2, &[0]).unwrap();
        let eff = effective_problem_hamiltonian(&zero, &tabu).unwrap();
        assert_eq!(eff.diagonal(), vec![1.0, 0.0]);
        let g = ground_state(&eff, 1e-9).unwrap();
        assert_abs_diff_eq!(g.state.probabilities()[1], 1.0, epsilon = 1e-12);

        let mut d = vec![1.0; 8];
        d[6] = 0.0;
        let grover = HermitianOperator::from_diagonal(&d);
        let eff = effective_problem_hamiltonian(&grover, &TabuHamiltonian::from_states(8, &[6]).unwrap()).unwrap();
        let g = ground_state(&eff, 1e-9).unwrap();
        assert!(g.degenerate);

        assert!(effective_problem_hamiltonian(&grover, &TabuHamiltonian::empty(4)).is_err());
    }

    #[test]
    fn anchors_have_unique_ground_state() {
        let fams = [
            ProblemFamily::diagonal(8).unwrap(),
            ProblemFamily::ising(3, vec![(0, 1), (0, 2)]).unwrap(),
        ];
        for fam in fams {
            for x in 0..fam.dim() {
                let h = fam.build(&fam.anchor(x).unwrap()).unwrap();
                let g = ground_state(&h, 1e-9).unwrap();
                assert!(!g.degenerate);
                assert_abs_diff_eq!(g.state.probabilities()[x], 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn custom_initial_requires_full_support() {
        assert!(InitialHamiltonian::from_operator(HermitianOperator::pauli_z(), 1e-6).is_err());
        let h = InitialHamiltonian::from_operator(HermitianOperator::pauli_x().scale(-1.0), 1e-6).unwrap();
        assert_abs_diff_eq!(h.min_amplitude_sqr(), 0.5, epsilon = 1e-12);
    }
}
