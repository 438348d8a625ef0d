//! Persisted description of a learned adiabatic algorithm `(H_I, s, H_P)`.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedAlgorithmRecord {
    pub objective_id: String,
    pub initial_id: String,
    pub schedule_id: String,
    pub family_id: String,
    pub seed: u64,
    pub w_star: Vec<f64>,
    /// Penalized states, repeated by multiplicity.
    pub tabu: Vec<usize>,
    pub tau: f64,
    pub x_star: usize,
    pub f_star: f64,
    pub iterations: usize,
    /// Ground-state index of the returned `H_P(w*) + H_tabu`.
    pub ground_index: usize,
    pub ground_degenerate: bool,
    /// Minimum gap of the path from `H_I` to the returned problem Hamiltonian.
    pub min_gap: f64,
}

/// Append-only JSON-lines file. Each record is written with a single
/// `write_all` under a lock, so records from concurrent runs never mix.
pub struct RecordStore {
    file: Mutex<File>,
}

impl RecordStore {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file: Mutex::new(file) })
    }

    pub fn append(&self, record: &LearnedAlgorithmRecord) -> io::Result<()> {
        let mut line = serde_json::to_string(record).map_err(io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

pub fn read_records(path: &Path) -> io::Result<Vec<LearnedAlgorithmRecord>> {
    BufReader::new(File::open(path)?)
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|l| serde_json::from_str(&l?).map_err(io::Error::other))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let r = LearnedAlgorithmRecord {
            objective_id: "grover(n=2,target=1)".into(),
            initial_id: "transverse_field".into(),
            schedule_id: "tanh_like(k=3)".into(),
            family_id: "diagonal(d=4)".into(),
            seed: 7,
            w_star: vec![0.1, -0.30000000000000004, 1e-17, 2.5],
            tabu: vec![0, 0, 3],
            tau: 12.0,
            x_star: 1,
            f_star: 0.0,
            iterations: 57,
            ground_index: 1,
            ground_degenerate: false,
            min_gap: 0.123456789012345,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<LearnedAlgorithmRecord>(&text).unwrap(), r);
    }
}
