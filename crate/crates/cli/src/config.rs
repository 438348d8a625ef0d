//! TOML experiment configuration.
//!
//! ```toml
//! seeds = [1, 2, 3]
//!
//! [problem]
//! kind = "grover"
//! n_qubits = 3
//! target = 5
//!
//! [family]
//! kind = "diagonal"
//! bounds = [-1.0, 1.0]
//!
//! [search]
//! eta = 0.2
//! ```
//!
//! Every section except `[problem]` is optional; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use aqcls_core::hamiltonians::{grover_initial, transverse_field_initial, InitialHamiltonian, ProblemFamily};
use aqcls_core::markov::AcceptanceRule;
use aqcls_core::{AqclsConfig, Error as CoreError, Objective, Schedule};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Invalid { field: String, message: String },
    Io { path: PathBuf, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            ConfigError::Invalid { field, message } => write!(f, "invalid {field}: {message}"),
            ConfigError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn from_core(section: &str, e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidConfig { field, message } => invalid(&format!("{section}.{field}"), message),
        other => invalid(section, other),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `f = 0` at `target`, `1` elsewhere.
    Grover { n_qubits: usize, target: usize },
    /// `index,value` rows; relative paths resolve against the config file.
    Table { path: PathBuf },
    /// Values listed directly, `f(x) = values[x]`.
    Inline { values: Vec<f64> },
    Qubo {
        n_qubits: usize,
        linear: Vec<f64>,
        #[serde(default)]
        quadratic: Vec<(usize, usize, f64)>,
    },
    /// `f(x) = Σ h_i z_i + Σ J_ij z_i z_j` with `z_i = ±1`.
    Ising {
        n_qubits: usize,
        fields: Vec<f64>,
        #[serde(default)]
        couplings: Vec<(usize, usize, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Diagonal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<(f64, f64)>,
    },
    /// Edges default to every pair of qubits.
    Ising {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(usize, usize)>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<(f64, f64)>,
    },
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec::Diagonal { bounds: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialChoice {
    #[default]
    TransverseField,
    Grover,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub kind: InitialChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSpec {
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Default for EvolveSpec {
    fn default() -> Self {
        Self { tau: 10.0, steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSpec {
    pub grid_points: usize,
}

impl Default for GapSpec {
    fn default() -> Self {
        Self { grid_points: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSpec {
    pub epsilon: Vec<f64>,
    pub grid_points: usize,
}

impl Default for BoundSpec {
    fn default() -> Self {
        Self {
            epsilon: vec![0.1],
            grid_points: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainGenerator {
    /// `a_ij = 1/D`.
    Uniform,
    /// Frozen anchor parameters, outcome law computed from the final state.
    #[default]
    Exact,
    /// Replays the Gaussian step and the adiabatic machine.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSpec {
    pub generator: ChainGenerator,
    pub q: f64,
    pub tau: f64,
    /// Variance ratios `σ²/σ²_max` of the ladder.
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub rule: AcceptanceRule,
    pub zero_tol: f64,
    pub seed: u64,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            generator: ChainGenerator::Exact,
            q: 0.5,
            tau: 2.0,
            ratios: vec![1.0, 0.5, 0.1, 1e-2, 1e-4],
            trials: 10_000,
            rule: AcceptanceRule::VarianceRatio,
            zero_tol: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroverSchedulesSpec {
    pub n_min: usize,
    pub n_max: usize,
    pub target: f64,
    pub steepness: f64,
    pub tau_start: f64,
    pub tau_cap: f64,
    pub rel_tol: f64,
}

impl Default for GroverSchedulesSpec {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 5,
            target: 0.9,
            steepness: 3.0,
            tau_start: 0.5,
            tau_cap: 1e4,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Empty means the single seed `search.seed`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub search: AqclsConfig,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub evolve: EvolveSpec,
    #[serde(default)]
    pub gap: GapSpec,
    #[serde(default)]
    pub bound: BoundSpec,
    #[serde(default)]
    pub chain: ChainSpec,
    #[serde(default)]
    pub grover_schedules: GroverSchedulesSpec,
    /// Directory that relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Parses and validates with relative paths resolved against the working
/// directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_in(text, Path::new("."))
}

pub fn parse_config_in(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1);
        ConfigError::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

/// Everything a command needs, built from the config.
pub struct Resolved {
    pub objective: Objective,
    pub n_qubits: usize,
    pub family: ProblemFamily,
    pub initial: InitialHamiltonian,
    pub initial_id: &'static str,
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.search.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.search.validate().map_err(|e| from_core("search", e))?;
        self.schedule.validate().map_err(|e| from_core("schedule", e))?;
        if !(self.evolve.tau > 0.0 && self.evolve.tau.is_finite()) {
            return Err(invalid("evolve.tau", "must be > 0"));
        }
        if self.evolve.steps == Some(0) {
            return Err(invalid("evolve.steps", "must be >= 1"));
        }
        if self.gap.grid_points < 2 {
            return Err(invalid("gap.grid_points", "must be >= 2"));
        }
        if self.bound.grid_points < 2 {
            return Err(invalid("bound.grid_points", "must be >= 2"));
        }
        if self.bound.epsilon.is_empty() || self.bound.epsilon.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(invalid("bound.epsilon", "every value must be in (0,1)"));
        }
        let c = &self.chain;
        if !(0.0..=1.0).contains(&c.q) {
            return Err(invalid("chain.q", "must be in [0,1]"));
        }
        if !(c.tau > 0.0 && c.tau.is_finite()) {
            return Err(invalid("chain.tau", "must be > 0"));
        }
        if c.ratios.is_empty() || c.ratios.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(invalid("chain.ratios", "every ratio must be in (0,1]"));
        }
        if c.trials == 0 {
            return Err(invalid("chain.trials", "must be >= 1"));
        }
        let g = &self.grover_schedules;
        if g.n_min == 0 || g.n_min > g.n_max || g.n_max > aqcls_core::grover::MAX_QUBITS {
            return Err(invalid(
                "grover_schedules",
                format!("need 1 <= n_min <= n_max <= {}", aqcls_core::grover::MAX_QUBITS),
            ));
        }
        if !(g.target > 0.0 && g.target < 1.0) {
            return Err(invalid("grover_schedules.target", "must be in (0,1)"));
        }
        if !(g.steepness > 0.0) {
            return Err(invalid("grover_schedules.steepness", "must be > 0"));
        }
        if !(g.tau_start > 0.0 && g.tau_cap >= g.tau_start && g.rel_tol > 0.0) {
            return Err(invalid("grover_schedules", "need 0 < tau_start <= tau_cap and rel_tol > 0"));
        }
        let r = self.resolve()?;
        if !self.search.w0.is_empty() && self.search.w0.len() != r.family.parameter_dim() {
            return Err(invalid(
                "search.w0",
                format!("expected {} parameters, found {}", r.family.parameter_dim(), self.search.w0.len()),
            ));
        }
        Ok(())
    }

    fn objective(&self) -> Result<Objective, ConfigError> {
        let core = |e| from_core("problem", e);
        match &self.problem {
            ProblemSpec::Grover { n_qubits, target } => Objective::grover(*n_qubits, *target).map_err(core),
            ProblemSpec::Table { path } => {
                let full = self.base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| ConfigError::Io {
                    path: full.clone(),
                    message: e.to_string(),
                })?;
                Objective::parse_table(path.display().to_string(), &text).map_err(core)
            }
            ProblemSpec::Inline { values } => Objective::table("inline", values.clone()).map_err(core),
            ProblemSpec::Qubo {
                n_qubits,
                linear,
                quadratic,
            } => Objective::qubo(*n_qubits, linear, quadratic).map_err(core),
            ProblemSpec::Ising {
                n_qubits,
                fields,
                couplings,
            } => {
                let edges: Vec<(usize, usize)> = couplings.iter().map(|&(i, j, _)| (i, j)).collect();
                let fam = ProblemFamily::ising(*n_qubits, edges).map_err(core)?;
                let mut w = fields.clone();
                w.extend(couplings.iter().map(|c| c.2));
                let values = fam.energies(&w).map_err(core)?;
                Objective::table(format!("ising(n={n_qubits})"), values).map_err(core)
            }
        }
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let objective = self.objective()?;
        let dim = objective.dim();
        if !dim.is_power_of_two() {
            return Err(invalid("problem", format!("dimension {dim} is not a power of two")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let family = match &self.family {
            FamilySpec::Diagonal { bounds } => {
                let fam = ProblemFamily::diagonal(dim).map_err(|e| from_core("family", e))?;
                with_bounds(fam, *bounds)?
            }
            FamilySpec::Ising { edges, bounds } => {
                let edges = edges.clone().unwrap_or_else(|| {
                    (0..n_qubits)
                        .flat_map(|i| (i + 1..n_qubits).map(move |j| (i, j)))
                        .collect()
                });
                let fam = ProblemFamily::ising(n_qubits, edges).map_err(|e| from_core("family", e))?;
                with_bounds(fam, *bounds)?
            }
        };
        let (initial, initial_id) = match self.initial.kind {
            InitialChoice::TransverseField => (transverse_field_initial(n_qubits), "transverse_field"),
            InitialChoice::Grover => (grover_initial(n_qubits), "grover"),
        };
        Ok(Resolved {
            objective,
            n_qubits,
            family,
            initial: initial.map_err(|e| from_core("initial", e))?,
            initial_id,
        })
    }
}

fn with_bounds(fam: ProblemFamily, bounds: Option<(f64, f64)>) -> Result<ProblemFamily, ConfigError> {
    match bounds {
        Some((lo, hi)) => fam.with_bounds(lo, hi).map_err(|e| invalid("family.bounds", e)),
        None => Ok(fam),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\nkind = \"grover\"\nn_qubits = 3\ntarget = 5\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.search.q, 0.9);
        assert_eq!(cfg.search.eta, 0.1);
        assert_eq!(cfg.search.n_per_level, 10);
        assert_eq!(cfg.search.sigma2_max, 1.0);
        assert_eq!(cfg.search.t_min, 1.0);
        assert_eq!(cfg.search.nu, 1.0);
        assert_eq!(cfg.search.n_max, 50);
        assert_eq!(cfg.search.i_max, 1000);
        assert_eq!(cfg.schedule, Schedule::Linear);
        assert_eq!(cfg.seeds(), vec![0]);
        let r = cfg.resolve().unwrap();
        assert_eq!(r.n_qubits, 3);
        assert_eq!(r.objective.argmin(), vec![5]);
    }

    #[test]
    fn eta_out_of_range_names_the_field() {
        let err = parse_config(&format!("{MINIMAL}[search]\neta = 1.5\n")).unwrap_err();
        match &err {
            ConfigError::Invalid { field, message } => {
                assert_eq!(field, "search.eta");
                assert_eq!(message, "eta must be in (0,1)");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            parse_config(&format!("{MINIMAL}[search]\ntemperature = 3\n")),
            Err(ConfigError::Parse { .. })
        ));
        assert!(parse_config(&format!("{MINIMAL}[extra]\na = 1\n")).is_err());
        assert!(parse_config("[problem]\nkind = \"grover\"\nn_qubits = 3\ntarget = 5\nbogus = 1\n").is_err());
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let text = "seeds = [1]\n\n[problem]\nkind = \"grover\"\nn_qubits = = 3\n";
        match parse_config(text).unwrap_err() {
            ConfigError::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let text = r#"
seeds = [3, 4]

[problem]
kind = "qubo"
n_qubits = 2
linear = [1.0, -2.0]
quadratic = [[0, 1, 3.0]]

[family]
kind = "ising"
bounds = [-2.0, 2.0]

[schedule]
kind = "tanh_like"
steepness = 2.5

[search]
eta = 0.25
init_box = [-1.0, 1.0]

[chain]
generator = "monte_carlo"
rule = "metropolis"
"#;
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.chain.rule, AcceptanceRule::Metropolis);
    }

    #[test]
    fn dimension_and_file_checks() {
        assert!(matches!(
            parse_config("[problem]\nkind = \"inline\"\nvalues = [1.0, 2.0, 3.0]\n"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            parse_config("[problem]\nkind = \"table\"\npath = \"/nonexistent/f.csv\"\n"),
            Err(ConfigError::Io { .. })
        ));
        assert!(parse_config(&format!("{MINIMAL}[search]\nw0 = [1.0]\n")).is_err());
    }

    #[test]
    fn ising_problem_values() {
        let text = "[problem]\nkind = \"ising\"\nn_qubits = 2\nfields = [1.0, 0.0]\ncouplings = [[0, 1, 0.5]]\n";
        let r = parse_config(text).unwrap().resolve().unwrap();
        assert_eq!(r.objective.values(), &[1.5, 0.5, -1.5, -0.5]);
    }
}
