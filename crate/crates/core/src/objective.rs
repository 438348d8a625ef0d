//! Objective functions `f: X → ℝ` over a finite solution set, stored as a
//! table indexed by computational-basis state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{register_dimension, HermitianOperator, DEFAULT_DIMENSION_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub id: String,
    values: Vec<f64>,
}

impl Objective {
    pub fn table(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Validation("objective table needs at least two entries".into()));
        }
        if values.len() > DEFAULT_DIMENSION_CAP {
            return Err(Error::Capacity {
                requested: values.len(),
                cap: DEFAULT_DIMENSION_CAP,
            });
        }
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("objective value f({x}) is not finite")));
        }
        Ok(Self { id: id.into(), values })
    }

    /// `f(x) = 0` at the marked element and `1` elsewhere.
    pub fn grover(n_qubits: usize, target: usize) -> Result<Self> {
        let dim = register_dimension(n_qubits, DEFAULT_DIMENSION_CAP)?;
        if target >= dim {
            return Err(Error::IndexOutOfRange { index: target, dim });
        }
        let mut values = vec![1.0; dim];
        values[target] = 0.0;
        Self::table(format!("grover(n={n_qubits},target={target})"), values)
    }

    /// `f(x) = Σ_i a_i x_i + Σ_(i,j) b_ij x_i x_j` over bit strings, with bit
    /// `i` read big-endian from the basis index.
    pub fn qubo(n_qubits: usize, linear: &[f64], quadratic: &[(usize, usize, f64)]) -> Result<Self> {
        let dim = register_dimension(n_qubits, DEFAULT_DIMENSION_CAP)?;
        if linear.len() != n_qubits {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: linear.len(),
            });
        }
        if let Some(&(i, j, _)) = quadratic.iter().find(|(i, j, _)| *i >= n_qubits || *j >= n_qubits) {
            return Err(Error::Validation(format!("QUBO term ({i},{j}) references a missing variable")));
        }
        let bit = |x: usize, i: usize| ((x >> (n_qubits - 1 - i)) & 1) as f64;
        let values = (0..dim)
            .map(|x| {
                let lin: f64 = linear.iter().enumerate().map(|(i, a)| a * bit(x, i)).sum();
                let quad: f64 = quadratic.iter().map(|&(i, j, b)| b * bit(x, i) * bit(x, j)).sum();
                lin + quad
            })
            .collect();
        Self::table(format!("qubo(n={n_qubits})"), values)
    }

    /// Parses `index,value` rows. Blank lines, `#` comments and a non-numeric
    /// header row are skipped; every index in `0..D` must appear exactly once.
    pub fn parse_table(id: impl Into<String>, text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Validation(format!(
                    "line {}: expected `index,value`",
                    lineno + 1
                )));
            };
            match (a.parse::<usize>(), b.parse::<f64>()) {
                (Ok(x), Ok(v)) => rows.push((x, v)),
                _ if rows.is_empty() && a.parse::<f64>().is_err() => continue,
                _ => {
                    return Err(Error::Validation(format!(
                        "line {}: cannot parse `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        let dim = rows.len();
        let mut values = vec![f64::NAN; dim];
        for (x, v) in rows {
            if x >= dim {
                return Err(Error::IndexOutOfRange { index: x, dim });
            }
            if !values[x].is_nan() {
                return Err(Error::Validation(format!("index {x} appears twice")));
            }
            values[x] = v;
        }
        Self::table(id, values)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// All global minimizers, by brute force over the table.
    pub fn argmin(&self) -> Vec<usize> {
        let m = self.min_value();
        (0..self.dim()).filter(|&x| self.values[x] == m).collect()
    }

    /// `diag(f)`, the direct encoding of the objective as a problem Hamiltonian.
    pub fn native_hamiltonian(&self) -> HermitianOperator {
        HermitianOperator::from_diagonal(&self.values)
    }
}
