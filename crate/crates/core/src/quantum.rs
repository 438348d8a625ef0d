//! Dense complex linear algebra for small quantum systems: normalized state
//! vectors, Hermitian operators, eigendecomposition and Born-rule sampling.
//!
//! Units have ℏ = 1. Basis index `x` of an `n`-qubit register is big-endian:
//! qubit 0 is the most significant bit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub type C64 = Complex64;

/// Largest Hilbert-space dimension accepted by the builders (12 qubits).
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

pub const STATE_NORM_TOL: f64 = 1e-10;
pub const MEASURE_NORM_TOL: f64 = 1e-6;
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dimension of an `n`-qubit register, checked against `cap`.
pub fn register_dimension(n_qubits: usize, cap: usize) -> Result<usize> {
    if n_qubits == 0 {
        return Err(Error::Validation("at least one qubit is required".into()));
    }
    if n_qubits >= usize::BITS as usize - 1 || (1usize << n_qubits) > cap {
        let requested = if n_qubits >= usize::BITS as usize - 1 {
            usize::MAX
        } else {
            1usize << n_qubits
        };
        return Err(Error::Capacity { requested, cap });
    }
    Ok(1usize << n_qubits)
}

/// A pure state over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Wraps `amplitudes`, rejecting vectors that are not unit norm within
    /// [`STATE_NORM_TOL`] or that have fewer than two entries.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::Validation(format!(
                "state dimension must be at least 2, got {}",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state construction"));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::Validation(format!(
                "state is not normalized: squared norm {norm_sqr}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Validation("cannot normalize a zero or non-finite vector".into()));
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&a| C64::new(a, 0.0)),
        ))
    }

    /// The computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut v = DVector::from_element(dim, ZERO);
        v[index] = ONE;
        Self::new(v)
    }

    /// Skips validation; used for propagated states whose drift is checked
    /// separately against a looser tolerance.
    pub(crate) fn from_raw(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Born probabilities `|amplitude_x|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// `min_φ ‖e^{iφ}self − other‖ = √(2 − 2|⟨self|other⟩|)`.
    pub fn phase_distance(&self, other: &StateVector) -> Result<f64> {
        let f = self.fidelity(other)?.min(1.0);
        Ok((2.0 - 2.0 * f).max(0.0).sqrt())
    }
}

/// A dense self-adjoint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates squareness and `M = M†` elementwise within [`HERMITIAN_TOL`]
    /// (scaled by the largest entry when that exceeds one).
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Validation(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("operator construction"));
        }
        let scale = matrix.iter().map(|a| a.norm()).fold(1.0_f64, f64::max);
        let n = matrix.nrows();
        for i in 0..n {
            for j in i..n {
                let diff = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if diff > HERMITIAN_TOL * scale {
                    return Err(Error::Validation(format!(
                        "operator is not Hermitian: |M[{i},{j}] - conj(M[{j},{i}])| = {diff:e}"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|a| C64::new(a, 0.0)))
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Self {
        let d = DVector::from_iterator(diagonal.len(), diagonal.iter().map(|&a| C64::new(a, 0.0)));
        Self {
            matrix: DMatrix::from_diagonal(&d),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::from_element(dim, dim, ZERO),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// The rank-one projector `|ψ⟩⟨ψ|`.
    pub fn projector(state: &StateVector) -> Self {
        let v = state.amplitudes();
        Self {
            matrix: v * v.adjoint(),
        }
    }

    pub fn pauli_x() -> Self {
        Self::from_real(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[ZERO, -C64::i(), C64::i(), ZERO]),
        }
    }

    pub fn pauli_z() -> Self {
        Self::from_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() <= tol))
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|a| a.im == 0.0)
    }

    fn check_dim(&self, other: &HermitianOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &HermitianOperator, b: f64) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            matrix: self.matrix.scale(a) + other.matrix.scale(b),
        })
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let v = state.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)).re)
    }

    /// Operator (spectral) norm, i.e. the largest absolute eigenvalue.
    pub fn norm(&self) -> f64 {
        let eig = eigendecompose(self);
        let lo = eig.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = eig.eigenvalues.last().copied().unwrap_or(0.0);
        lo.abs().max(hi.abs())
    }
}

/// Spectral decomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<C64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `E_1 − E_0`; zero for one-dimensional systems.
    pub fn gap(&self) -> f64 {
        if self.eigenvalues.len() < 2 {
            0.0
        } else {
            self.eigenvalues[1] - self.eigenvalues[0]
        }
    }

    /// The `level`-th eigenvector as a state.
    pub fn state(&self, level: usize) -> Result<StateVector> {
        if level >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: level,
                dim: self.dim(),
            });
        }
        StateVector::normalized(self.eigenvectors.column(level).into_owned())
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = DVector::from_iterator(self.dim(), self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)));
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.eigenvectors[(i, j)] * d[j]);
        scaled * self.eigenvectors.adjoint()
    }
}

/// Diagonalizes `h`. Real symmetric input takes the real-arithmetic path.
pub fn eigendecompose(h: &HermitianOperator) -> EigenSystem {
    let n = h.dim();
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if h.is_real() {
        let eig = SymmetricEigen::new(h.matrix.map(|a| a.re));
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|a| C64::new(a, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(h.matrix.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    EigenSystem {
        eigenvalues: order.iter().map(|&k| values[k]).collect(),
        eigenvectors: DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]),
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    /// Set when `E_1 − E_0 ≤ degeneracy_tol`.
    pub degenerate: bool,
}

pub fn ground_state(h: &HermitianOperator, degeneracy_tol: f64) -> Result<GroundState> {
    let eig = eigendecompose(h);
    Ok(GroundState {
        energy: eig.eigenvalues[0],
        state: eig.state(0)?,
        degenerate: eig.dim() > 1 && eig.gap() <= degeneracy_tol,
    })
}

/// Samples a computational-basis outcome with Born-rule probabilities.
pub fn measure_computational(state: &StateVector, rng: &mut SimRng) -> Result<usize> {
    let probs = state.probabilities();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MEASURE_NORM_TOL {
        return Err(Error::Validation(format!(
            "cannot measure an unnormalized state: squared norm {total}"
        )));
    }
    Ok(sample_index(&probs, rng))
}

/// Inverse-CDF draw from a discrete distribution (weights summing to ~1).
pub(crate) fn sample_index(probs: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (x, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = x;
            acc += p;
            if u < acc {
                return x;
            }
        }
    }
    last_nonzero
}

/// Equal superposition over `2^n` basis states.
pub fn uniform_superposition(n_qubits: usize) -> Result<StateVector> {
    uniform_superposition_capped(n_qubits, DEFAULT_DIMENSION_CAP)
}

pub fn uniform_superposition_capped(n_qubits: usize, cap: usize) -> Result<StateVector> {
    let dim = register_dimension(n_qubits, cap)?;
    let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    StateVector::new(DVector::from_element(dim, a))
}

/// `‖AB − BA‖` in the operator norm.
pub fn commutator_norm(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    a.check_dim(b)?;
    let c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
    // i[A, B] is Hermitian, so its norm is its largest |eigenvalue|.
    let ic = HermitianOperator {
        matrix: c.map(|z| z * C64::i()),
    };
    Ok(ic.norm())
}
