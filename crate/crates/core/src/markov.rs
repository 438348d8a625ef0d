//! Markov-chain view of the search: generation matrices `A(σ²)`, their
//! neighborhood graphs, acceptance-weighted transition matrices and
//! stationary distributions, plus the hypothesis checks that make the
//! zero-temperature limit concentrate on the global minima.

use std::collections::VecDeque;
use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{candidate_distribution, generate_candidate, Schedule};
use crate::hamiltonians::{effective_problem_hamiltonian, InitialHamiltonian, ProblemFamily, TabuHamiltonian};
use crate::objective::Objective;
use crate::rng;
use crate::search::{acceptance_probability, sample_parameters, temperature_of_variance, AqclsConfig};

pub const EXACT_ROW_TOL: f64 = 1e-9;
pub const MONTE_CARLO_ROW_TOL: f64 = 1e-3;
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimation {
    Exact,
    MonteCarlo { trials: usize },
}

/// Row-stochastic matrix of candidate-generation probabilities: `a_ij` is the
/// probability of proposing `x_j` from the current solution `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationMatrix {
    entries: DMatrix<f64>,
    pub sigma2: f64,
    pub estimation: Estimation,
}

impl GenerationMatrix {
    pub fn new(entries: DMatrix<f64>, sigma2: f64, estimation: Estimation) -> Result<Self> {
        check_stochastic(&entries, match estimation {
            Estimation::Exact => EXACT_ROW_TOL,
            Estimation::MonteCarlo { .. } => MONTE_CARLO_ROW_TOL,
        })?;
        Ok(Self {
            entries,
            sigma2,
            estimation,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], sigma2: f64, estimation: Estimation) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("generation matrix must be square".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), sigma2, estimation)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Three-sigma binomial half-width for an estimated entry of value `p`;
    /// zero for exact matrices.
    pub fn margin(&self, p: f64) -> f64 {
        match self.estimation {
            Estimation::Exact => 1e-12,
            Estimation::MonteCarlo { trials } => 3.0 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_matrix_csv(&self.entries, out)
    }
}

fn check_stochastic(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Validation("stochastic matrix must be square and non-empty".into()));
    }
    for i in 0..m.nrows() {
        let row = m.row(i);
        if row.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(Error::Validation(format!("row {i} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::Validation(format!("row {i} sums to {sum}, not 1")));
        }
    }
    Ok(())
}

/// CSV with one matrix row per line and a `j0,j1,…` header.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut out: W) -> io::Result<()> {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("j{j}")).collect();
    writeln!(out, "i,{}", header.join(","))?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{i},{}", row.join(","))?;
    }
    Ok(())
}

/// Everything the generator needs besides the variance: for each current
/// solution `x_i` the parameters `w*_i` it is associated with.
#[derive(Debug, Clone)]
pub struct GeneratorContext<'a> {
    pub initial: &'a InitialHamiltonian,
    pub family: &'a ProblemFamily,
    pub schedule: Schedule,
    pub q: f64,
    pub tabu: TabuHamiltonian,
    pub anchors: Vec<Vec<f64>>,
}

impl<'a> GeneratorContext<'a> {
    /// Anchors every `x_i` at [`ProblemFamily::anchor`], with an empty tabu.
    pub fn new(
        initial: &'a InitialHamiltonian,
        family: &'a ProblemFamily,
        schedule: Schedule,
        q: f64,
    ) -> Result<Self> {
        if initial.dim() != family.dim() {
            return Err(Error::DimensionMismatch {
                expected: initial.dim(),
                found: family.dim(),
            });
        }
        let anchors = (0..family.dim())
            .map(|x| family.anchor(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            initial,
            family,
            schedule,
            q,
            tabu: TabuHamiltonian::empty(family.dim()),
            anchors,
        })
    }

    pub fn with_tabu(mut self, tabu: TabuHamiltonian) -> Result<Self> {
        if tabu.dim() != self.family.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.family.dim(),
                found: tabu.dim(),
            });
        }
        self.tabu = tabu;
        Ok(self)
    }

    pub fn with_anchors(mut self, anchors: Vec<Vec<f64>>) -> Result<Self> {
        if anchors.len() != self.family.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.family.dim(),
                found: anchors.len(),
            });
        }
        for w in &anchors {
            self.family.check_parameters(w)?;
        }
        self.anchors = anchors;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }
}

/// Replays the candidate-generation step `trials` times from every current
/// solution and records empirical frequencies. Row `i` draws from its own
/// stream `(seed, i)`.
pub fn estimate_generation_matrix(
    ctx: &GeneratorContext<'_>,
    sigma2: f64,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<GenerationMatrix> {
    if trials == 0 {
        return Err(Error::Validation("trials must be at least 1".into()));
    }
    let dim = ctx.dim();
    let mut counts = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let mut r = rng::stream(seed, i as u64);
        for _ in 0..trials {
            let w = sample_parameters(&ctx.anchors[i], sigma2, ctx.family.bounds, &mut r)?;
            let h = effective_problem_hamiltonian(&ctx.family.build(&w)?, &ctx.tabu)?;
            let c = generate_candidate(ctx.initial, &h, &ctx.schedule, tau, ctx.q, &mut r)?;
            counts[(i, c.index)] += 1.0;
        }
    }
    GenerationMatrix::new(
        counts.unscale(trials as f64),
        sigma2,
        Estimation::MonteCarlo { trials },
    )
}

/// Generation matrix with frozen parameters (no Gaussian step): row `i` is
/// the exact outcome law for `H_P(w*_i) + H_tabu`.
pub fn exact_generation_matrix(ctx: &GeneratorContext<'_>, tau: f64) -> Result<GenerationMatrix> {
    let dim = ctx.dim();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let h = effective_problem_hamiltonian(&ctx.family.build(&ctx.anchors[i])?, &ctx.tabu)?;
        let row = candidate_distribution(ctx.initial, &h, &ctx.schedule, tau, ctx.q)?;
        for (j, p) in row.into_iter().enumerate() {
            m[(i, j)] = p;
        }
    }
    GenerationMatrix::new(m, 0.0, Estimation::Exact)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphClass {
    Complete,
    StronglyConnected,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodGraph {
    /// `adjacency[i][j]` iff `a_ij > zero_tol`.
    pub adjacency: Vec<Vec<bool>>,
    pub class: GraphClass,
}

impl NeighborhoodGraph {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.adjacency.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                if e {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Directed graph of strictly positive proposal probabilities, classified as
/// complete (every ordered pair `i ≠ j` linked) or strongly connected.
pub fn neighborhood_graph(a: &GenerationMatrix, zero_tol: f64) -> NeighborhoodGraph {
    let adjacency = support(a.entries(), zero_tol);
    let class = classify(&adjacency);
    NeighborhoodGraph { adjacency, class }
}

fn support(m: &DMatrix<f64>, zero_tol: f64) -> Vec<Vec<bool>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] > zero_tol).collect())
        .collect()
}

fn classify(adj: &[Vec<bool>]) -> GraphClass {
    let n = adj.len();
    let complete = (0..n).all(|i| (0..n).all(|j| i == j || adj[i][j]));
    if complete {
        GraphClass::Complete
    } else if strongly_connected(adj) {
        GraphClass::StronglyConnected
    } else {
        GraphClass::Neither
    }
}

fn strongly_connected(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let edge = if forward { adj[u][v] } else { adj[v][u] };
                if edge && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n > 0 && reach_all(true) && reach_all(false)
}

/// Acceptance rule used to weight proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceRule {
    /// `(σ²/σ²_max)^(f_j − f_i)` for non-improving moves.
    VarianceRatio,
    /// `exp(−(f_j − f_i)/T)` with `T = −1/ln(σ²/σ²_max)`.
    Metropolis,
}

/// Classical simulated-annealing acceptance at temperature `t`.
pub fn metropolis_probability(f_new: f64, f_current: f64, temperature: f64) -> f64 {
    if f_new < f_current || temperature.is_infinite() {
        1.0
    } else {
        (-(f_new - f_current) / temperature).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: DMatrix<f64>,
    pub sigma2: f64,
    pub temperature: f64,
}

impl TransitionMatrix {
    pub fn new(entries: DMatrix<f64>, sigma2: f64, temperature: f64) -> Result<Self> {
        check_stochastic(&entries, EXACT_ROW_TOL)?;
        Ok(Self {
            entries,
            sigma2,
            temperature,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_matrix_csv(&self.entries, out)
    }
}

/// `m_ij = a_ij · P(accept x_j | current x_i)` for `i ≠ j`; rejected mass stays
/// on the diagonal.
pub fn build_transition_matrix(
    a: &GenerationMatrix,
    objective: &[f64],
    sigma2: f64,
    sigma2_max: f64,
    rule: AcceptanceRule,
) -> Result<TransitionMatrix> {
    let n = a.dim();
    if objective.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: objective.len(),
        });
    }
    let temperature = temperature_of_variance(sigma2, sigma2_max)?;
    // Monte Carlo rows are only stochastic to ~1e-3; renormalize them first.
    let row_sums: Vec<f64> = (0..n).map(|i| a.entries().row(i).sum()).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let p = match rule {
                AcceptanceRule::VarianceRatio => acceptance_probability(objective[j], objective[i], sigma2, sigma2_max),
                AcceptanceRule::Metropolis => metropolis_probability(objective[j], objective[i], temperature),
            };
            m[(i, j)] = a.get(i, j) / row_sums[i] * p;
            off += m[(i, j)];
        }
        let diag = 1.0 - off;
        assert!(diag >= -1e-12, "rejected mass went negative in row {i}: {diag}");
        m[(i, i)] = diag.max(0.0);
    }
    TransitionMatrix::new(m, sigma2, temperature)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    /// `‖πM − π‖₁`.
    pub residual: f64,
    /// Number of matrix squarings used.
    pub squarings: usize,
}

impl StationaryDistribution {
    pub fn mass_on(&self, states: &[usize]) -> f64 {
        states.iter().map(|&x| self.pi[x]).sum()
    }
}

/// Unique `π` with `πM = π` for an irreducible chain.
///
/// Runs the power method on the lazy chain `(I + M)/2` (same stationary
/// law, aperiodic), advancing by repeated squaring `P ← P²` until all rows
/// agree, then polishes with ordinary vector iterations.
pub fn stationary_distribution(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    let n = m.dim();
    let off_support: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && m.get(i, j) > 0.0).collect())
        .collect();
    if n > 1 && !strongly_connected(&off_support) {
        return Err(Error::Reducible);
    }
    let mut p = (m.entries() + DMatrix::<f64>::identity(n, n)) * 0.5;
    let mut squarings = 0;
    while squarings < 200 {
        let spread = (0..n)
            .map(|j| {
                let col = p.column(j);
                col.max() - col.min()
            })
            .fold(0.0, f64::max);
        if spread <= 1e-15 {
            break;
        }
        p = &p * &p;
        // Keep rows on the simplex despite rounding.
        for i in 0..n {
            let s = p.row(i).sum();
            p.row_mut(i).unscale_mut(s);
        }
        squarings += 1;
    }
    let mut pi: Vec<f64> = (0..n).map(|j| p.column(j).mean()).collect();
    normalize(&mut pi);
    for _ in 0..16 {
        pi = step(&pi, m.entries());
        normalize(&mut pi);
    }
    let next = step(&pi, m.entries());
    let residual: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
    if !(residual <= STATIONARY_RESIDUAL_TOL) {
        return Err(Error::Validation(format!(
            "power iteration did not converge: residual {residual:e}"
        )));
    }
    Ok(StationaryDistribution {
        pi,
        residual,
        squarings,
    })
}

fn step(pi: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let n = pi.len();
    (0..n).map(|j| (0..n).map(|i| pi[i] * m[(i, j)]).sum()).collect()
}

fn normalize(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.max(0.0);
    }
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub passed: bool,
    pub detail: String,
    /// Offending pair `(i, j)`, with the ladder level for graph changes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub levels: usize,
    pub delta_expected: f64,
    pub observed_min_offdiagonal: f64,
    pub combinatorial_symmetry: HypothesisCheck,
    pub uniform_lower_bound: HypothesisCheck,
    pub graph_constancy: HypothesisCheck,
    pub all_passed: bool,
}

/// Checks, over a ladder of generation matrices, (1) combinatorial symmetry,
/// (2) the uniform lower bound `a_ij ≥ δ` on the positive off-diagonal
/// entries (with the estimation margin) for `δ = delta_expected > 0`, and
/// (3) that the neighborhood graph is the same on every level.
pub fn check_convergence_hypotheses(
    ladder: &[GenerationMatrix],
    delta_expected: f64,
    zero_tol: f64,
) -> Result<HypothesisReport> {
    if ladder.len() < 2 {
        return Err(Error::Validation("need at least two variance levels".into()));
    }
    let n = ladder[0].dim();
    if let Some(bad) = ladder.iter().find(|a| a.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }

    let mut symmetry = HypothesisCheck {
        passed: true,
        detail: "a_ij > 0 iff a_ji > 0 on every level".into(),
        witness: None,
    };
    'outer: for (level, a) in ladder.iter().enumerate() {
        let adj = support(a.entries(), zero_tol);
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for j in 0..n {
                if i != j && adj[i][j] && !adj[j][i] {
                    symmetry = HypothesisCheck {
                        passed: false,
                        detail: format!("a[{i}][{j}] > 0 but a[{j}][{i}] = 0 on level {level}"),
                        witness: Some(Witness { level: Some(level), i, j }),
                    };
                    break 'outer;
                }
            }
        }
    }

    let mut observed_min = f64::INFINITY;
    let mut worst: Option<(usize, usize, usize, f64)> = None;
    for (level, a) in ladder.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let v = a.get(i, j);
                if i == j || v <= zero_tol {
                    continue;
                }
                if v < observed_min {
                    observed_min = v;
                }
                let threshold = delta_expected - a.margin(delta_expected);
                if v < threshold && worst.is_none_or(|w| v < w.3) {
                    worst = Some((level, i, j, v));
                }
            }
        }
    }
    let lower_bound = if !(delta_expected > 0.0) {
        HypothesisCheck {
            passed: false,
            detail: format!("delta = {delta_expected} gives no positive lower bound"),
            witness: None,
        }
    } else if let Some((level, i, j, v)) = worst {
        HypothesisCheck {
            passed: false,
            detail: format!("a[{i}][{j}] = {v} below delta = {delta_expected} on level {level}"),
            witness: Some(Witness { level: Some(level), i, j }),
        }
    } else {
        HypothesisCheck {
            passed: true,
            detail: format!("positive off-diagonal entries >= {delta_expected} (min observed {observed_min})"),
            witness: None,
        }
    };

    let base = support(ladder[0].entries(), zero_tol);
    let mut constancy = HypothesisCheck {
        passed: true,
        detail: "same neighborhood graph on every level".into(),
        witness: None,
    };
    'levels: for (level, a) in ladder.iter().enumerate().skip(1) {
        let adj = support(a.entries(), zero_tol);
        for i in 0..n {
            for j in 0..n {
                if i != j && adj[i][j] != base[i][j] {
                    constancy = HypothesisCheck {
                        passed: false,
                        detail: format!("edge ({i},{j}) differs between level 0 and level {level}"),
                        witness: Some(Witness { level: Some(level), i, j }),
                    };
                    break 'levels;
                }
            }
        }
    }

    let all_passed = symmetry.passed && lower_bound.passed && constancy.passed;
    Ok(HypothesisReport {
        levels: ladder.len(),
        delta_expected,
        observed_min_offdiagonal: observed_min,
        combinatorial_symmetry: symmetry,
        uniform_lower_bound: lower_bound,
        graph_constancy: constancy,
        all_passed,
    })
}

/// `δ = (1 − q) min_x |b_x|²`.
pub fn delta_bound(initial: &InitialHamiltonian, q: f64) -> f64 {
    (1.0 - q) * initial.min_amplitude_sqr()
}

/// Temperatures `T_k = −1/ln((1 − η)^k)` for `k = 0..=levels`; `T_0 = ∞`.
pub fn temperature_ladder(config: &AqclsConfig, levels: usize) -> Vec<f64> {
    (0..=levels)
        .map(|k| {
            let ratio = (1.0 - config.eta).powi(k as i32);
            if k == 0 {
                f64::INFINITY
            } else {
                -1.0 / ratio.ln()
            }
        })
        .collect()
}

/// Smallest number of variance levels `k = ⌈ln r / ln(1 − η)⌉` whose
/// temperature is at most `target`, with `r = e^{−1/target}`.
pub fn levels_to_reach_temperature(eta: f64, target: f64) -> usize {
    let ln_r = -1.0 / target;
    (ln_r / (1.0 - eta).ln()).ceil() as usize
}

/// Stationary laws of the chain built from a fixed `A` at each variance ratio
/// `r = σ²/σ²_max`.
pub fn stationary_ladder(
    a: &GenerationMatrix,
    objective: &Objective,
    ratios: &[f64],
    rule: AcceptanceRule,
) -> Result<Vec<StationaryDistribution>> {
    ratios
        .iter()
        .map(|&r| {
            let m = build_transition_matrix(a, objective.values(), r, 1.0, rule)?;
            stationary_distribution(&m)
        })
        .collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
