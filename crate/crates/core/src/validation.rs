//! Self-checks run by the `validate` command: the two exact joint-law methods
//! against each other, and every exact quantity against Monte Carlo.

use serde::{Deserialize, Serialize};

use crate::bell::BellDiagonal;
use crate::dejmps::{build_ladder, IterationLadder};
use crate::error::Result;
use crate::finite::{
    joint_law_iterative, joint_law_markov_capped, BoundMode, FiniteRunSpec, JointLawTable,
};
use crate::montecarlo::{binomial_se, simulate_consumption, simulate_runs, TrialConfig, RNG_NAME};

/// Initial Werner fidelity of the ladder used by every check.
pub const STANDARD_FIDELITY: f64 = 0.7;
/// Pool sizes compared between the two exact methods.
pub const STANDARD_POOLS: [usize; 10] = [1, 2, 3, 5, 16, 37, 64, 101, 128, 200];
/// Mixing probabilities compared between the two exact methods.
pub const STANDARD_P: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
/// Runs compared against simulation: (pair, p_i, N).
pub const STANDARD_RUNS: [((usize, usize), f64, usize); 3] =
    [((1, 2), 0.5, 32), ((0, 2), 0.25, 24), ((1, 3), 0.75, 64)];
/// Consumption checks: (k, number of outputs).
pub const STANDARD_CONSUMPTION: [(usize, usize); 6] = [(1, 1), (1, 4), (2, 1), (2, 4), (3, 1), (3, 4)];

const METHOD_TOLERANCE: f64 = 1e-9;
const SIGMAS: f64 = 3.0;
const MAX_LISTED: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub seed: u64,
    pub trials: u64,
    pub state_cap: u64,
    /// Replace `t_1` by `1 − t_1` on the exact side so that checks must fail.
    pub inject_fault: bool,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 1_000_000,
            state_cap: crate::finite::DEFAULT_STATE_CAP,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub compared: usize,
    /// Largest ratio of discrepancy to tolerance; at most 1 when passing.
    pub worst_ratio: f64,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub rng: String,
    pub seed: u64,
    pub trials: u64,
    pub fault_injected: bool,
    pub checks: Vec<CheckResult>,
}

struct Tally {
    name: &'static str,
    compared: usize,
    worst: f64,
    violations: Vec<String>,
    failures: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            compared: 0,
            worst: 0.0,
            violations: Vec::new(),
            failures: 0,
        }
    }

    fn compare(&mut self, what: impl FnOnce() -> String, got: f64, want: f64, tol: f64) {
        self.compared += 1;
        let diff = (got - want).abs();
        let ratio = if tol > 0.0 {
            diff / tol
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        self.worst = self.worst.max(ratio);
        if !(diff <= tol) {
            self.failures += 1;
            if self.violations.len() < MAX_LISTED {
                self.violations.push(format!("{}: got {got:e}, expected {want:e}, tolerance {tol:e}", what()));
            }
        }
    }

    fn finish(self) -> CheckResult {
        let mut violations = self.violations;
        if self.failures > violations.len() {
            violations.push(format!("… {} more", self.failures - violations.len()));
        }
        CheckResult {
            name: self.name.into(),
            passed: self.failures == 0,
            compared: self.compared,
            worst_ratio: self.worst,
            violations,
        }
    }
}

pub fn standard_ladder() -> IterationLadder {
    build_ladder(&BellDiagonal::werner(STANDARD_FIDELITY).expect("valid fidelity"), 4, true)
        .expect("standard ladder")
}

/// The ladder the exact side sees: the standard one, or with `t_1 → 1 − t_1`.
fn exact_ladder(truth: &IterationLadder, inject_fault: bool) -> Result<IterationLadder> {
    if inject_fault {
        let t1 = truth.levels()[1].t;
        truth.with_success_prob(1, 1.0 - t1)
    } else {
        Ok(truth.clone())
    }
}

/// Markov-chain and iterative tables agree entry-wise within `1e-9`.
pub fn check_methods(
    ladder: &IterationLadder,
    pools: &[usize],
    probs: &[f64],
    state_cap: u64,
) -> Result<CheckResult> {
    let mut tally = Tally::new("markov-vs-iterative");
    for i in 0..=2 {
        for j in i + 1..=3 {
            for &n in pools {
                for &p in probs {
                    let spec = FiniteRunSpec::new(n, (i, j), p, 0.5, BoundMode::Global, ladder)?;
                    let a = joint_law_markov_capped(&spec, ladder, state_cap)?;
                    let b = joint_law_iterative(&spec, ladder)?;
                    let label = || format!("pair ({i},{j}) N={n} p_i={p}");
                    tally.compare(label, a.rows.len() as f64, b.rows.len() as f64, 0.0);
                    tally.compare(label, a.max_difference(&b), 0.0, METHOD_TOLERANCE);
                }
            }
        }
    }
    Ok(tally.finish())
}

fn sigma_band(freq: f64, exact: f64, trials: u64) -> f64 {
    SIGMAS * binomial_se(freq, trials).max(binomial_se(exact, trials)) + 1e-12
}

/// Simulated joint laws agree with the exact ones within three standard errors.
pub fn check_joint_laws(truth: &IterationLadder, exact: &IterationLadder, cfg: &ValidationConfig) -> Result<CheckResult> {
    let mut tally = Tally::new("monte-carlo-joint-law");
    for (idx, &(pair, p, n)) in STANDARD_RUNS.iter().enumerate() {
        let spec = FiniteRunSpec::new(n, pair, p, 0.5, BoundMode::Global, truth)?;
        let law = simulate_runs(
            &TrialConfig {
                seed: cfg.seed.wrapping_add(idx as u64),
                trials: cfg.trials,
                spec,
            },
            truth,
        )?;
        let table: JointLawTable = joint_law_iterative(&spec, exact)?;
        for (e, f) in table.rows.iter().zip(&law.table.rows) {
            for (name, want, got) in [
                ("success", e.success, f.success),
                ("joint_i", e.joint_i, f.joint_i),
                ("joint_j", e.joint_j, f.joint_j),
            ] {
                let label = || format!("pair {pair:?} p_i={p} N={n} m={} {name}", e.m);
                tally.compare(label, got, want, sigma_band(got, want, cfg.trials));
            }
        }
    }
    Ok(tally.finish())
}

/// Simulated consumption means and variances agree with `m μ_k` and `m σ_k²`
/// within three standard errors.
pub fn check_consumption(truth: &IterationLadder, exact: &IterationLadder, cfg: &ValidationConfig) -> Result<CheckResult> {
    let mut tally = Tally::new("monte-carlo-consumption");
    for (idx, &(k, m)) in STANDARD_CONSUMPTION.iter().enumerate() {
        let emp = simulate_consumption(cfg.seed.wrapping_add(100 + idx as u64), cfg.trials, truth, k, m)?;
        let level = exact.level(k)?;
        let (mean, var) = (m as f64 * level.mu, m as f64 * level.sigma2);
        tally.compare(|| format!("k={k} m={m} mean"), emp.mean, mean, SIGMAS * emp.mean_se + 1e-12);
        tally.compare(
            || format!("k={k} m={m} variance"),
            emp.variance,
            var,
            SIGMAS * emp.variance_se + 1e-12,
        );
    }
    Ok(tally.finish())
}

pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport> {
    let truth = standard_ladder();
    let exact = exact_ladder(&truth, cfg.inject_fault)?;
    let checks = vec![
        check_methods(&exact, &STANDARD_POOLS, &STANDARD_P, cfg.state_cap)?,
        check_joint_laws(&truth, &exact, cfg)?,
        check_consumption(&truth, &exact, cfg)?,
    ];
    Ok(ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        rng: RNG_NAME.into(),
        seed: cfg.seed,
        trials: cfg.trials,
        fault_injected: cfg.inject_fault,
        checks,
    })
}
