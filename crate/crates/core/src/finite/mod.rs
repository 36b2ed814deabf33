//! Finite-pool analysis: how many output pairs a pool of `N` initial pairs
//! supports when each output is made by a randomly chosen protocol of a
//! pair `(i, j)`, and the resulting bounds on the achievable output count.

mod distributions;
mod iterative;
mod markov;

pub use distributions::{
    expected_pairs, normal_approximation, odd_mass_level_one, pairs_consumed_distribution,
    pairs_consumed_distribution_to, pairs_produced_distribution, DEFAULT_TRUNCATION,
};
pub use iterative::{joint_law_iterative, single_pair_success};
pub use markov::{joint_law_markov, joint_law_markov_capped, markov_state_count, DEFAULT_STATE_CAP};

use serde::{Deserialize, Serialize};

use crate::bell::werner_fidelity;
use crate::dejmps::IterationLadder;
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    /// Infidelity of the whole `M`-pair output.
    Global,
    /// Infidelity per output pair, `1 − (1 − ε)^{1/M}`.
    PerPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteRunSpec {
    pub n: usize,
    pub pair: (usize, usize),
    pub p_i: f64,
    pub epsilon: f64,
    pub mode: BoundMode,
    /// Asymptotic fidelity of the mixture, `p_i F_i + p_j F_j`.
    pub f_prime: f64,
}

impl FiniteRunSpec {
    pub fn new(
        n: usize,
        pair: (usize, usize),
        p_i: f64,
        epsilon: f64,
        mode: BoundMode,
        ladder: &IterationLadder,
    ) -> Result<Self> {
        let (i, j) = pair;
        if i >= j {
            return Err(Error::InvalidArgument(format!("protocol pair ({i}, {j}) needs i < j")));
        }
        if !(0.0..=1.0).contains(&p_i) {
            return Err(Error::InvalidArgument(format!("p_i = {p_i} outside [0, 1]")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {epsilon} outside (0, 1)")));
        }
        let (fi, fj) = (ladder.level(i)?.fidelity, ladder.level(j)?.fidelity);
        let f_prime = if p_i == 1.0 {
            fi
        } else if p_i == 0.0 {
            fj
        } else {
            p_i * fi + (1.0 - p_i) * fj
        };
        Ok(Self {
            n,
            pair,
            p_i,
            epsilon,
            mode,
            f_prime,
        })
    }

    pub fn p_j(&self) -> f64 {
        1.0 - self.p_i
    }

    /// Most outputs any run can produce, `⌊N / 2^i⌋`.
    pub fn max_outputs(&self) -> usize {
        self.n >> self.pair.0
    }

    pub fn is_single_protocol(&self) -> bool {
        self.p_i == 0.0 || self.p_i == 1.0
    }
}

/// A probability mass function on `0..mass.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub mass: Vec<f64>,
    /// Mass beyond the last support point that was dropped, if truncated.
    pub truncated_mass: f64,
}

impl CountDistribution {
    pub fn new(mass: Vec<f64>) -> Self {
        Self {
            mass,
            truncated_mass: 0.0,
        }
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.mass.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().copied().collect::<NeumaierSum>().value()
    }

    pub fn cdf(&self, n: usize) -> f64 {
        self.mass.iter().take(n + 1).copied().collect::<NeumaierSum>().value()
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(n, &p)| n as f64 * p)
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(n, &p)| (n as f64 - mean).powi(2) * p)
            .collect::<NeumaierSum>()
            .value()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawSource {
    Markov,
    Iterative,
    Empirical,
}

/// One row of the joint law: the `m`-th output fits in the pool and was
/// made by protocol `i` or `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    pub m: usize,
    pub joint_i: f64,
    pub joint_j: f64,
    pub success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLawTable {
    pub source: LawSource,
    pub n: usize,
    pub pair: (usize, usize),
    pub p_i: f64,
    /// Rows for `m = 1..=⌊N/2^i⌋`.
    pub rows: Vec<JointRow>,
}

impl JointLawTable {
    pub(crate) fn from_joint(source: LawSource, spec: &FiniteRunSpec, joint: Vec<(f64, f64)>) -> Self {
        let rows = joint
            .into_iter()
            .enumerate()
            .map(|(idx, (ji, jj))| JointRow {
                m: idx + 1,
                joint_i: ji,
                joint_j: jj,
                success: ji + jj,
            })
            .collect();
        Self {
            source,
            n: spec.n,
            pair: spec.pair,
            p_i: spec.p_i,
            rows,
        }
    }

    /// `Pr(Y_m = 1)`, equal to 1 at `m = 0` and 0 past the table.
    pub fn success(&self, m: usize) -> f64 {
        match m {
            0 => 1.0,
            _ => self.rows.get(m - 1).map_or(0.0, |r| r.success),
        }
    }

    pub fn row(&self, m: usize) -> Option<&JointRow> {
        m.checked_sub(1).and_then(|idx| self.rows.get(idx))
    }

    /// Largest entry-wise difference from another table over the union of rows.
    pub fn max_difference(&self, other: &JointLawTable) -> f64 {
        let len = self.rows.len().max(other.rows.len());
        let zero = JointRow {
            m: 0,
            joint_i: 0.0,
            joint_j: 0.0,
            success: 0.0,
        };
        (0..len)
            .map(|idx| {
                let a = self.rows.get(idx).unwrap_or(&zero);
                let b = other.rows.get(idx).unwrap_or(&zero);
                (a.joint_i - b.joint_i)
                    .abs()
                    .max((a.joint_j - b.joint_j).abs())
                    .max((a.success - b.success).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Fidelity of the `m`-th output pair in the worst case where failed runs
/// are replaced by a separable state:
/// `(1 − Pr(Y_m = 1))/2 + Σ_k Pr(X_m = k, Y_m = 1) F_k`.
pub fn f_doubleprime(table: &JointLawTable, ladder: &IterationLadder, m: usize) -> Result<f64> {
    let (fi, fj) = (
        ladder.level(table.pair.0)?.fidelity,
        ladder.level(table.pair.1)?.fidelity,
    );
    if m == 0 || m > table.rows.len() {
        return Err(Error::OutOfRange {
            what: "output count",
            value: m as f64,
            lo: 1.0,
            hi: table.rows.len() as f64,
        });
    }
    let r = table.rows[m - 1];
    Ok(f_doubleprime_from(r.success, r.joint_i, r.joint_j, fi, fj))
}

fn f_doubleprime_from(success: f64, joint_i: f64, joint_j: f64, fi: f64, fj: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    acc += (1.0 - success) / 2.0;
    acc += joint_i * fi;
    acc += joint_j * fj;
    acc.value()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MBounds {
    /// Output count guaranteed by `Pr(Y_M = 1) ≥ √(1 − ε)`.
    pub lower_general: usize,
    /// Output count guaranteed by `Pr(Y_M = 1) ≥ 1 − ε`; single-protocol runs only.
    pub lower_uninterpolated: Option<usize>,
    /// Largest output count not ruled out by the fidelity of the last pair.
    pub upper: usize,
    /// `F″_m` for `m = 1..=⌊N/2^i⌋`.
    pub f_doubleprime: Vec<f64>,
}

/// Lower and upper bounds on the number of outputs deliverable within the
/// infidelity budget of `spec`.
pub fn m_bounds(spec: &FiniteRunSpec, table: &JointLawTable, ladder: &IterationLadder) -> Result<MBounds> {
    if table.pair != spec.pair || table.n != spec.n {
        return Err(Error::InvalidArgument("joint law table does not match the run".into()));
    }
    let (fi, fj) = (
        ladder.level(spec.pair.0)?.fidelity,
        ladder.level(spec.pair.1)?.fidelity,
    );
    let f_dp: Vec<f64> = table
        .rows
        .iter()
        .map(|r| f_doubleprime_from(r.success, r.joint_i, r.joint_j, fi, fj))
        .collect();
    let log_keep = (1.0 - spec.epsilon).ln();
    let threshold = |m: usize| match spec.mode {
        BoundMode::Global => 1.0 - spec.epsilon,
        BoundMode::PerPair => (log_keep * m as f64).exp(),
    };

    let mut lower_general = 0;
    let mut lower_uninterp = 0;
    for m in 1..=table.rows.len() {
        let p = table.success(m);
        let th = threshold(m);
        if p >= th.sqrt() {
            lower_general = m;
        }
        if p >= th {
            lower_uninterp = m;
        }
    }
    let mut upper = 0;
    for m in 1..=spec.n {
        let fdp = f_dp.get(m - 1).copied().unwrap_or(0.5);
        if werner_fidelity(spec.f_prime, fdp) >= threshold(m) {
            upper = m;
        }
    }
    Ok(MBounds {
        lower_general,
        lower_uninterpolated: spec.is_single_protocol().then_some(lower_uninterp),
        upper,
        f_doubleprime: f_dp,
    })
}

/// Single-protocol production as a binary counter: bit `ℓ` of the state
/// says a level-`ℓ` pair is held. Feeding one initial pair into `counter`
/// yields the possible next counters, with `None` meaning a level-`k` pair
/// was completed (and the counter is back to 0). `ts` holds `t_1..t_k`.
pub(crate) fn feed_pair(ts: &[f64], counter: usize) -> Vec<(Option<usize>, f64)> {
    let k = ts.len();
    let mut out = Vec::with_capacity(k + 1);
    let mut state = counter;
    let mut reach = 1.0;
    let mut level = 0;
    loop {
        if level == k {
            out.push((None, reach));
            return out;
        }
        let bit = 1 << level;
        if state & bit == 0 {
            out.push((Some(state | bit), reach));
            return out;
        }
        state &= !bit;
        let t = ts[level];
        if t < 1.0 {
            out.push((Some(state), reach * (1.0 - t)));
        }
        reach *= t;
        if reach == 0.0 {
            return out;
        }
        level += 1;
    }
}
