//! Monte Carlo simulation of purification runs on a finite pool. Each
//! DEJMPS attempt is a Bernoulli draw with the ladder's success probability;
//! no quantum states are sampled.
//!
//! Trials are split into fixed-size chunks. Chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, so results depend only on
//! the seed and trial count, never on how chunks are spread over threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dejmps::IterationLadder;
use crate::error::{Error, Result};
use crate::finite::{FiniteRunSpec, JointLawTable, LawSource};

pub const RNG_NAME: &str = "chacha8/seed_from_u64/stream-per-chunk";
const CHUNK: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trials: u64,
    pub spec: FiniteRunSpec,
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        Ok(())
    }
}

/// Observed joint law with binomial standard errors `√(f(1 − f)/trials)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    pub rng: String,
    pub seed: u64,
    pub trials: u64,
    pub table: JointLawTable,
    pub success_se: Vec<f64>,
    pub joint_i_se: Vec<f64>,
    pub joint_j_se: Vec<f64>,
}

/// Observed pool consumption for a fixed number of outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConsumption {
    pub rng: String,
    pub seed: u64,
    pub trials: u64,
    /// Pool size → number of trials that used exactly that many pairs.
    pub histogram: BTreeMap<u64, u64>,
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
}

pub fn binomial_se(freq: f64, trials: u64) -> f64 {
    (freq * (1.0 - freq) / trials as f64).sqrt()
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `f` over every chunk in parallel and returns the per-chunk results in
/// chunk order.
fn chunked<T: Send>(seed: u64, trials: u64, f: impl Fn(&mut ChaCha8Rng, u64) -> T + Sync) -> Vec<T> {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(trials - c * CHUNK);
            f(&mut chunk_rng(seed, c), len)
        })
        .collect()
}

/// Pool pairs used to make one level-`k` pair depth-first, or `None` once
/// more than `budget` would be needed.
fn sample_cost(ts: &[f64], k: usize, budget: u64, rng: &mut ChaCha8Rng) -> Option<u64> {
    if k == 0 {
        return (budget >= 1).then_some(1);
    }
    let mut used = 0;
    loop {
        used += sample_cost(ts, k - 1, budget - used, rng)?;
        used += sample_cost(ts, k - 1, budget - used, rng)?;
        if rng.random::<f64>() < ts[k - 1] {
            return Some(used);
        }
    }
}

/// Simulates `trials` runs of the mixture described by `config.spec` and
/// records, for each output count `m`, whether `m` outputs fit in the pool
/// and which protocol made the `m`-th.
pub fn simulate_runs(config: &TrialConfig, ladder: &IterationLadder) -> Result<EmpiricalLaw> {
    simulate_runs_with(config, ladder, |ts, _| ts)
}

/// As [`simulate_runs`], with the success probabilities passed through
/// `adjust` first (used by fault-injection checks).
pub fn simulate_runs_with(
    config: &TrialConfig,
    ladder: &IterationLadder,
    adjust: impl Fn(Vec<f64>, usize) -> Vec<f64>,
) -> Result<EmpiricalLaw> {
    config.validate()?;
    let spec = config.spec;
    let (i, j) = spec.pair;
    let ts = [adjust(ladder.success_probs(i)?, i), adjust(ladder.success_probs(j)?, j)];
    let t_max = spec.max_outputs();
    let budget = spec.n as u64;

    let parts = chunked(config.seed, config.trials, |rng, len| {
        let mut counts = vec![[0u64; 2]; t_max];
        for _ in 0..len {
            let mut left = budget;
            for slot in counts.iter_mut() {
                let proto = if rng.random::<f64>() < spec.p_i { 0 } else { 1 };
                let k = [i, j][proto];
                match sample_cost(&ts[proto], k, left, rng) {
                    Some(c) => {
                        left -= c;
                        slot[proto] += 1;
                    }
                    None => break,
                }
            }
        }
        counts
    });
    let mut counts = vec![[0u64; 2]; t_max];
    for part in parts {
        for (acc, c) in counts.iter_mut().zip(part) {
            acc[0] += c[0];
            acc[1] += c[1];
        }
    }

    let n = config.trials as f64;
    let joint: Vec<(f64, f64)> = counts
        .iter()
        .map(|c| (c[0] as f64 / n, c[1] as f64 / n))
        .collect();
    let table = JointLawTable::from_joint(LawSource::Empirical, &spec, joint);
    let se = |f: &dyn Fn(&crate::finite::JointRow) -> f64| -> Vec<f64> {
        table.rows.iter().map(|r| binomial_se(f(r), config.trials)).collect()
    };
    Ok(EmpiricalLaw {
        rng: RNG_NAME.into(),
        seed: config.seed,
        trials: config.trials,
        success_se: se(&|r| r.success),
        joint_i_se: se(&|r| r.joint_i),
        joint_j_se: se(&|r| r.joint_j),
        table,
    })
}

/// Samples the number of pool pairs consumed to make `m` level-`k` pairs
/// from an unlimited pool.
pub fn simulate_consumption(
    seed: u64,
    trials: u64,
    ladder: &IterationLadder,
    k: usize,
    m: usize,
) -> Result<EmpiricalConsumption> {
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are required".into()));
    }
    let ts = ladder.success_probs(k)?;
    let parts = chunked(seed, trials, |rng, len| {
        let mut hist = BTreeMap::new();
        for _ in 0..len {
            let total: u64 = (0..m)
                .map(|_| sample_cost(&ts, k, u64::MAX, rng).expect("unbounded budget"))
                .sum();
            *hist.entry(total).or_insert(0u64) += 1;
        }
        hist
    });
    let mut histogram = BTreeMap::new();
    for part in parts {
        for (v, c) in part {
            *histogram.entry(v).or_insert(0) += c;
        }
    }

    let n = trials as f64;
    let mean = histogram.iter().map(|(&v, &c)| v as f64 * c as f64).sum::<f64>() / n;
    let central = |p: i32| {
        histogram
            .iter()
            .map(|(&v, &c)| (v as f64 - mean).powi(p) * c as f64)
            .sum::<f64>()
            / n
    };
    let m2 = central(2);
    let m4 = central(4);
    let variance = m2 * n / (n - 1.0);
    Ok(EmpiricalConsumption {
        rng: RNG_NAME.into(),
        seed,
        trials,
        histogram,
        mean,
        variance,
        mean_se: (variance / n).sqrt(),
        variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    })
}
