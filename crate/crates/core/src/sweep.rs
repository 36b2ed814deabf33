//! Per-point computations behind the rate sweeps: the asymptotic rate of the
//! best mixture against the uninterpolated and REE references, and the
//! finite-pool bounds for both the mixture and the uninterpolated protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{apply_channel, bell_diagonal_of, ree_rate_bound, BellDiagonal, ChannelSpec, TOL};
use crate::dejmps::{build_ladder_with, LadderLevels, LadderOptions};
use crate::error::{Error, Result};
use crate::finite::{
    joint_law_iterative, joint_law_markov_capped, m_bounds, BoundMode, FiniteRunSpec,
};
use crate::interpolate::{
    cutoff_threshold, max_rate_at_fidelity, pareto_prune, strictly_improving, InterpolationResult,
    ProtocolPoint,
};

/// One initial state of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepInput {
    /// Channel parameter, or the initial fidelity for Werner inputs.
    pub param: f64,
    pub state: BellDiagonal,
    /// Whether the state is Werner, so that the REE ceiling applies.
    pub werner: bool,
}

impl SweepInput {
    pub fn from_channel(channel: &ChannelSpec) -> Result<Self> {
        let state = bell_diagonal_of(&apply_channel(channel)?)?;
        Ok(Self {
            param: channel.parameter(),
            state,
            werner: matches!(channel, ChannelSpec::Depolarising { .. }),
        })
    }

    pub fn werner(fidelity: f64) -> Result<Self> {
        Ok(Self {
            param: fidelity,
            state: BellDiagonal::werner(fidelity)?,
            werner: true,
        })
    }

    pub fn fidelity(&self) -> f64 {
        self.state.a()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    /// The initial pairs already meet the target.
    AtTarget,
    /// No level up to `k_max` reaches the target.
    Unreachable,
    /// Initial fidelity at most 1/2.
    NoPurification,
    StateCapExceeded,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::AtTarget => "at-target",
            RowStatus::Unreachable => "unreachable",
            RowStatus::NoPurification => "no-purification",
            RowStatus::StateCapExceeded => "state-cap-exceeded",
        }
    }

    pub fn has_rates(&self) -> bool {
        matches!(self, RowStatus::Ok | RowStatus::AtTarget | RowStatus::StateCapExceeded)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub param: f64,
    pub f_initial: f64,
    pub rate_interpolated: Option<f64>,
    pub pair_i: Option<usize>,
    pub pair_j: Option<usize>,
    pub p_i: Option<f64>,
    pub rate_uninterpolated: Option<f64>,
    pub rate_ree_bound: Option<f64>,
    pub status: RowStatus,
}

/// Everything a sweep point needs beyond its output row.
struct Plan {
    row: AsymptoticRow,
    mixture: Option<InterpolationResult>,
    baseline_k: Option<usize>,
}

fn plan(input: &SweepInput, f_target: f64, k_max: usize) -> Result<Plan> {
    if !(f_target > 0.5 && f_target <= 1.0) {
        return Err(Error::InvalidArgument(format!("target fidelity {f_target} outside (1/2, 1]")));
    }
    let f0 = input.fidelity();
    let mut row = AsymptoticRow {
        param: input.param,
        f_initial: f0,
        rate_interpolated: None,
        pair_i: None,
        pair_j: None,
        p_i: None,
        rate_uninterpolated: None,
        rate_ree_bound: None,
        status: RowStatus::Ok,
    };
    let ree = |f_t: f64| {
        if input.werner {
            ree_rate_bound(f0.min(1.0), f_t).ok()
        } else {
            None
        }
    };
    if f0 >= f_target {
        row.status = RowStatus::AtTarget;
        row.rate_interpolated = Some(1.0);
        row.rate_uninterpolated = Some(1.0);
        row.pair_i = Some(0);
        row.pair_j = Some(0);
        row.p_i = Some(1.0);
        row.rate_ree_bound = ree(f_target);
        return Ok(Plan {
            row,
            mixture: None,
            baseline_k: Some(0),
        });
    }
    if f0 <= 0.5 + TOL {
        row.status = RowStatus::NoPurification;
        return Ok(Plan {
            row,
            mixture: None,
            baseline_k: None,
        });
    }

    let mut levels = strictly_improving(LadderLevels::new(&input.state, LadderOptions::permuted()))
        .take(k_max + 1);
    let mut points: Vec<ProtocolPoint> = Vec::new();
    for p in levels.by_ref() {
        let reached = p.fidelity >= f_target;
        points.push(p);
        if reached {
            break;
        }
    }
    let baseline = match points.last() {
        Some(p) if p.fidelity >= f_target => *p,
        _ => {
            row.status = RowStatus::Unreachable;
            return Ok(Plan {
                row,
                mixture: None,
                baseline_k: None,
            });
        }
    };

    let first = max_rate_at_fidelity(&pareto_prune(&points)?, f_target)?;
    // Pull in further levels only while they could still beat `first`.
    let mixture = match cutoff_threshold(&points, f_target, first.achieved_rate) {
        Ok(omega) => {
            let before = points.len();
            points.extend(levels.take_while(|p| p.rate > omega));
            if points.len() > before {
                max_rate_at_fidelity(&pareto_prune(&points)?, f_target)?
            } else {
                first
            }
        }
        Err(Error::CutoffUndefined) => first,
        Err(e) => return Err(e),
    };

    row.rate_interpolated = Some(mixture.achieved_rate);
    row.pair_i = Some(mixture.first.index);
    row.pair_j = Some(mixture.second.index);
    row.p_i = Some(mixture.p_i);
    row.rate_uninterpolated = Some(baseline.rate);
    row.rate_ree_bound = ree(f_target);
    Ok(Plan {
        row,
        mixture: Some(mixture),
        baseline_k: Some(baseline.index),
    })
}

/// Asymptotic rates for one sweep point.
pub fn asymptotic_row(input: &SweepInput, f_target: f64, k_max: usize) -> Result<AsymptoticRow> {
    Ok(plan(input, f_target, k_max)?.row)
}

/// Asymptotic rows in grid order.
pub fn asymptotic_sweep(inputs: &[SweepInput], f_target: f64, k_max: usize) -> Result<Vec<AsymptoticRow>> {
    inputs
        .par_iter()
        .map(|input| asymptotic_row(input, f_target, k_max))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiniteMethod {
    Markov,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSettings {
    pub f_target: f64,
    pub k_max: usize,
    pub epsilon: f64,
    pub mode: BoundMode,
    pub method: FiniteMethod,
    pub state_cap: u64,
}

/// Finite-pool bounds per pool size, as fractions of `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteRow {
    pub param: f64,
    pub f_initial: f64,
    pub n: usize,
    pub pair_i: Option<usize>,
    pub pair_j: Option<usize>,
    pub p_i: Option<f64>,
    pub baseline_k: Option<usize>,
    pub interp_lower: Option<f64>,
    pub interp_upper: Option<f64>,
    pub baseline_lower: Option<f64>,
    pub baseline_upper: Option<f64>,
    pub rate_interpolated: Option<f64>,
    pub rate_uninterpolated: Option<f64>,
    pub status: RowStatus,
}

/// The finite run for a mixture: a genuine pair, or protocol `k` alone
/// written as the pair `(k, k + 1)` with all weight on `k`.
fn run_pair(mixture: Option<&InterpolationResult>, baseline_k: usize) -> ((usize, usize), f64) {
    match mixture {
        Some(m) if m.first.index < m.second.index => ((m.first.index, m.second.index), m.p_i),
        Some(m) => ((m.first.index, m.first.index + 1), 1.0),
        None => ((baseline_k, baseline_k + 1), 1.0),
    }
}

fn bounds_for(
    input: &SweepInput,
    n: usize,
    pair: (usize, usize),
    p_i: f64,
    settings: &FiniteSettings,
) -> Result<(usize, Option<usize>, usize)> {
    let ladder = build_ladder_with(&input.state, pair.1, LadderOptions::permuted())?;
    let spec = FiniteRunSpec::new(n, pair, p_i, settings.epsilon, settings.mode, &ladder)?;
    let table = match settings.method {
        FiniteMethod::Markov => joint_law_markov_capped(&spec, &ladder, settings.state_cap)?,
        FiniteMethod::Iterative => joint_law_iterative(&spec, &ladder)?,
    };
    let b = m_bounds(&spec, &table, &ladder)?;
    Ok((b.lower_general, b.lower_uninterpolated, b.upper))
}

/// Finite-pool bounds for one sweep point and one pool size.
pub fn finite_row(input: &SweepInput, n: usize, settings: &FiniteSettings) -> Result<FiniteRow> {
    let plan = plan(input, settings.f_target, settings.k_max)?;
    let a = plan.row;
    let mut row = FiniteRow {
        param: a.param,
        f_initial: a.f_initial,
        n,
        pair_i: a.pair_i,
        pair_j: a.pair_j,
        p_i: a.p_i,
        baseline_k: plan.baseline_k,
        interp_lower: None,
        interp_upper: None,
        baseline_lower: None,
        baseline_upper: None,
        rate_interpolated: a.rate_interpolated,
        rate_uninterpolated: a.rate_uninterpolated,
        status: a.status,
    };
    let Some(base_k) = plan.baseline_k else {
        return Ok(row);
    };
    let frac = |m: usize| if n == 0 { 0.0 } else { m as f64 / n as f64 };

    let (pair, p_i) = run_pair(plan.mixture.as_ref(), base_k);
    let interp = bounds_for(input, n, pair, p_i, settings);
    let (base_pair, _) = run_pair(None, base_k);
    let base = bounds_for(input, n, base_pair, 1.0, settings);
    match (interp, base) {
        (Ok((lo, _, up)), Ok((_, base_lo, base_up))) => {
            row.interp_lower = Some(frac(lo));
            row.interp_upper = Some(frac(up));
            row.baseline_lower = base_lo.map(frac);
            row.baseline_upper = Some(frac(base_up));
        }
        (Err(Error::StateCapExceeded { .. }), _) | (_, Err(Error::StateCapExceeded { .. })) => {
            row.status = RowStatus::StateCapExceeded;
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    }
    Ok(row)
}

/// Finite rows ordered by sweep point, then pool size.
pub fn finite_sweep(inputs: &[SweepInput], n_grid: &[usize], settings: &FiniteSettings) -> Result<Vec<FiniteRow>> {
    let jobs: Vec<(usize, usize)> = (0..inputs.len())
        .flat_map(|a| (0..n_grid.len()).map(move |b| (a, b)))
        .collect();
    jobs.par_iter()
        .map(|&(a, b)| finite_row(&inputs[a], n_grid[b], settings))
        .collect()
}
