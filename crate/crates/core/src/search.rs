//! The AQCLS hybrid loop.
//!
//! Candidates come from the (simulated) adiabatic machine, initialized with a
//! problem Hamiltonian `H_P(w) + H_tabu` whose parameters `w` are drawn around
//! the parameters `w*` that produced the current solution `x*`. Acceptance is
//! a simulated-annealing rule in which the proposal variance plays the role of
//! temperature, and every improvement pushes the replaced solution into the
//! tabu Hamiltonian.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{generate_candidate, Branch, Schedule};
use crate::hamiltonians::{effective_problem_hamiltonian, InitialHamiltonian, ProblemFamily, TabuHamiltonian};
use crate::objective::Objective;
use crate::quantum::HermitianOperator;
use crate::rng::{self, SimRng};

/// Inputs of one search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AqclsConfig {
    /// Minimum evolution time.
    pub t_min: f64,
    /// Evolution-time increment per level.
    pub nu: f64,
    /// Initial parameters; empty means all zeros.
    #[serde(default)]
    pub w0: Vec<f64>,
    pub sigma2_max: f64,
    /// Variance decay rate per level.
    pub eta: f64,
    /// Iterations per variance/time level.
    pub n_per_level: usize,
    /// Probability of the evolve branch.
    pub q: f64,
    /// Termination threshold on `d + e`.
    pub n_max: usize,
    pub i_max: usize,
    pub seed: u64,
    /// Box for the two random initial parameter vectors. Falls back to the
    /// family bounds, then to `N(w0, σ²_max)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_box: Option<(f64, f64)>,
}

impl Default for AqclsConfig {
    fn default() -> Self {
        Self {
            t_min: 1.0,
            nu: 1.0,
            w0: Vec::new(),
            sigma2_max: 1.0,
            eta: 0.1,
            n_per_level: 10,
            q: 0.9,
            n_max: 50,
            i_max: 1000,
            seed: 0,
            init_box: None,
        }
    }
}

impl AqclsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.t_min) {
            return Err(Error::config("t_min", "must be > 0"));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::config("nu", "must be >= 0"));
        }
        if !positive(self.sigma2_max) {
            return Err(Error::config("sigma2_max", "must be > 0"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::config("eta", "eta must be in (0,1)"));
        }
        if self.n_per_level < 1 {
            return Err(Error::config("n_per_level", "must be >= 1"));
        }
        if !(self.q >= 0.0 && self.q < 1.0) {
            return Err(Error::config("q", "must be in [0,1)"));
        }
        if self.n_max < 1 {
            return Err(Error::config("n_max", "must be >= 1"));
        }
        if self.i_max < 1 {
            return Err(Error::config("i_max", "must be >= 1"));
        }
        if self.w0.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("w0", "must be finite"));
        }
        if let Some((lo, hi)) = self.init_box {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config("init_box", "must satisfy lo < hi"));
            }
        }
        Ok(())
    }

    /// `σ²` after `level` decreases: `σ²_max (1 − η)^level`.
    pub fn variance_at_level(&self, level: u32) -> f64 {
        self.sigma2_max * (1.0 - self.eta).powi(level as i32)
    }

    /// `τ` after `level` increments with the constant step: `t_min + level·ν`.
    pub fn time_at_level(&self, level: u32) -> f64 {
        self.t_min + level as f64 * self.nu
    }
}

/// How `τ` grows at each level change.
#[derive(Clone, Copy)]
pub enum TimeGrowth<'a> {
    /// `τ ← τ + ν` with `ν` from the config.
    Increment,
    /// `τ ← h(τ)` for a monotone increasing `h`.
    Custom(&'a dyn Fn(f64) -> f64),
}

/// Draws `w ~ N(w*, σ²·I)`, clipped to `bounds` when given.
pub fn sample_parameters(
    w_star: &[f64],
    sigma2: f64,
    bounds: Option<(f64, f64)>,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::Validation(format!("sigma2 must be >= 0, got {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    Ok(w_star
        .iter()
        .map(|&mu| {
            let z: f64 = rng.sample(StandardNormal);
            let w = if sigma == 0.0 { mu } else { mu + sigma * z };
            match bounds {
                Some((lo, hi)) => w.clamp(lo, hi),
                None => w,
            }
        })
        .collect())
}

/// `1` if the candidate is better, `(σ²/σ²_max)^(f_new − f_star)` otherwise.
pub fn acceptance_probability(f_new: f64, f_star: f64, sigma2: f64, sigma2_max: f64) -> f64 {
    if f_new < f_star {
        return 1.0;
    }
    let ratio = (sigma2 / sigma2_max).clamp(0.0, 1.0);
    // powf(0, 0) = 1 covers f_new = f_star at vanishing variance.
    ratio.powf(f_new - f_star).clamp(0.0, 1.0)
}

/// Annealing temperature encoded by a variance: `T = −1/ln(σ²/σ²_max)`,
/// infinite at `σ² = σ²_max`.
pub fn temperature_of_variance(sigma2: f64, sigma2_max: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::Validation(format!("sigma2 must be > 0, got {sigma2}")));
    }
    if sigma2 > sigma2_max {
        return Err(Error::Validation(format!(
            "sigma2 = {sigma2} exceeds sigma2_max = {sigma2_max}"
        )));
    }
    let ratio = sigma2 / sigma2_max;
    if ratio >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-1.0 / ratio.ln())
}

/// One row of the search trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub i: usize,
    pub sigma2: f64,
    pub tau: f64,
    pub branch: Branch,
    pub x_candidate: usize,
    pub f_candidate: f64,
    /// The candidate replaced `x*` (improvement or suboptimal acceptance).
    pub accepted: bool,
    /// Improvement events only.
    pub improved: bool,
    pub x_star: usize,
    pub f_star: f64,
    /// Best value seen so far, including the initialization candidates.
    pub f_best: f64,
    pub d: usize,
    pub e: usize,
    pub tabu_size: usize,
}

pub const TRACE_HEADER: &str =
    "i,sigma2,tau,branch,x_candidate,f_candidate,accepted,x_star,f_star,d,e,tabu_size";

pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.i,
            r.sigma2,
            r.tau,
            r.branch.as_str(),
            r.x_candidate,
            r.f_candidate,
            u8::from(r.accepted),
            r.x_star,
            r.f_star,
            r.d,
            r.e,
            r.tabu_size
        )?;
    }
    Ok(())
}

/// Initialization outcome, kept for inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitRecord {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub x1: usize,
    pub x2: usize,
}

#[derive(Debug, Clone)]
pub struct AqclsResult {
    /// `H_P(w*) + H_tabu`.
    pub h_problem: HermitianOperator,
    pub tau: f64,
    pub x_star: usize,
    pub f_star: f64,
    pub w_star: Vec<f64>,
    pub tabu: TabuHamiltonian,
    pub sigma2: f64,
    pub levels: u32,
    pub d: usize,
    pub e: usize,
    pub iterations: usize,
    pub init: InitRecord,
    pub trace: Vec<IterationRecord>,
}

impl AqclsResult {
    pub fn write_trace_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_trace_csv(&self.trace, out)
    }
}

/// Runs the search with the constant time increment `ν`.
pub fn run_aqcls(
    objective: &Objective,
    family: &ProblemFamily,
    initial: &InitialHamiltonian,
    schedule: &Schedule,
    config: &AqclsConfig,
) -> Result<AqclsResult> {
    run_aqcls_with_growth(objective, family, initial, schedule, config, TimeGrowth::Increment)
}

pub fn run_aqcls_with_growth(
    objective: &Objective,
    family: &ProblemFamily,
    initial: &InitialHamiltonian,
    schedule: &Schedule,
    config: &AqclsConfig,
    growth: TimeGrowth<'_>,
) -> Result<AqclsResult> {
    config.validate()?;
    schedule.validate()?;
    let dim = objective.dim();
    for found in [family.dim(), initial.dim()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    let w0 = if config.w0.is_empty() {
        vec![0.0; family.parameter_dim()]
    } else {
        config.w0.clone()
    };
    family.check_parameters(&w0)?;

    let mut rng = rng::seeded(config.seed);
    let f = |x: usize| objective.value(x);

    // Initialization: two random Hamiltonians, two full evolutions at t_min
    // without tabu term.
    let mut tau = config.t_min;
    let mut sigma2 = config.sigma2_max;
    let empty = TabuHamiltonian::empty(dim);
    let w1 = initial_parameters(family, config, &w0, &mut rng)?;
    let w2 = initial_parameters(family, config, &w0, &mut rng)?;
    let x1 = generate_candidate(initial, &family.build(&w1)?, schedule, tau, 1.0, &mut rng)?.index;
    let x2 = generate_candidate(initial, &family.build(&w2)?, schedule, tau, 1.0, &mut rng)?.index;
    let (f1, f2) = (f(x1), f(x2));
    let (mut x_star, mut w_star, mut tabu) = if f1 != f2 {
        let ((xb, wb), xw) = if f1 < f2 { ((x1, &w1), x2) } else { ((x2, &w2), x1) };
        (xb, wb.clone(), empty.add(xw)?)
    } else if x1 != x2 {
        (x1, w1.clone(), empty.add(x2)?)
    } else {
        (x1, w1.clone(), empty)
    };
    let mut f_star = f(x_star);
    let mut f_best = f1.min(f2);

    let (mut d, mut e, mut i) = (0usize, 0usize, 0usize);
    let mut level = 0u32;
    let mut trace = Vec::new();
    loop {
        if i % config.n_per_level == 0 {
            level += 1;
            sigma2 = config.variance_at_level(level);
            tau = match growth {
                TimeGrowth::Increment => config.time_at_level(level),
                TimeGrowth::Custom(h) => h(tau),
            };
            if !(tau >= config.t_min && tau.is_finite()) {
                return Err(Error::Validation(format!("time growth produced tau = {tau}")));
            }
        }
        let w = sample_parameters(&w_star, sigma2, family.bounds, &mut rng)?;
        let h_eff = effective_problem_hamiltonian(&family.build(&w)?, &tabu)?;
        let cand = generate_candidate(initial, &h_eff, schedule, tau, config.q, &mut rng)?;
        let x_new = cand.index;
        let f_new = f(x_new);
        let (mut accepted, mut improved) = (false, false);
        if x_new != x_star {
            if f_new < f_star {
                // The displaced solution is the one that gets penalized.
                tabu = tabu.add(x_star)?;
                x_star = x_new;
                f_star = f_new;
                w_star = w;
                accepted = true;
                improved = true;
            } else {
                d += 1;
                let p = acceptance_probability(f_new, f_star, sigma2, config.sigma2_max);
                if rng.random::<f64>() < p {
                    x_star = x_new;
                    f_star = f_new;
                    w_star = w;
                    accepted = true;
                }
            }
        } else {
            e += 1;
        }
        f_best = f_best.min(f_star);
        trace.push(IterationRecord {
            i,
            sigma2,
            tau,
            branch: cand.branch,
            x_candidate: x_new,
            f_candidate: f_new,
            accepted,
            improved,
            x_star,
            f_star,
            f_best,
            d,
            e,
            tabu_size: tabu.len(),
        });
        i += 1;
        if i == config.i_max || d + e >= config.n_max {
            break;
        }
    }

    let h_problem = effective_problem_hamiltonian(&family.build(&w_star)?, &tabu)?;
    Ok(AqclsResult {
        h_problem,
        tau,
        x_star,
        f_star,
        w_star,
        tabu,
        sigma2,
        levels: level,
        d,
        e,
        iterations: i,
        init: InitRecord { w1, w2, x1, x2 },
        trace,
    })
}

fn initial_parameters(
    family: &ProblemFamily,
    config: &AqclsConfig,
    w0: &[f64],
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    match config.init_box.or(family.bounds) {
        Some((lo, hi)) => {
            let mut w: Vec<f64> = (0..family.parameter_dim())
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect();
            family.clip(&mut w);
            Ok(w)
        }
        None => sample_parameters(w0, config.sigma2_max, family.bounds, rng),
    }
}
