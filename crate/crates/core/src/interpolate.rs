//! Optimal two-protocol mixtures over a family of (rate, fidelity) points.
//!
//! A mixture that picks protocol `k` with probability `p_k` for each output
//! pair has rate `1 / Σ p_k I_k` and fidelity `Σ p_k F_k`. With the weights
//! `q_k = p_k I_k` both become ratios of linear forms, so in the plane
//! `(R, R·F)` the achievable set is the convex hull of the protocol points and
//! the optimum is always reached by mixing at most two of them.

use serde::{Deserialize, Serialize};

use crate::dejmps::{IterationLadder, LadderLevel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPoint {
    /// Protocol index; for DEJMPS ladders, the number of iterations.
    pub index: usize,
    pub rate: f64,
    pub fidelity: f64,
    /// Mean number of initial pairs consumed per output, `1 / rate`.
    pub mean_cost: f64,
}

impl ProtocolPoint {
    pub fn new(index: usize, rate: f64, fidelity: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("rate {rate} must be positive")));
        }
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(Error::InvalidArgument(format!("fidelity {fidelity} outside [0, 1]")));
        }
        Ok(Self {
            index,
            rate,
            fidelity,
            mean_cost: 1.0 / rate,
        })
    }

    pub fn from_level(level: &LadderLevel) -> Self {
        Self {
            index: level.k,
            rate: level.rate,
            fidelity: level.fidelity,
            mean_cost: level.mu,
        }
    }

    /// The point in the plane where mixtures are straight segments.
    fn lifted(&self) -> (f64, f64) {
        (self.rate, self.rate * self.fidelity)
    }
}

/// Protocol points from the retained (strictly improving) levels of a ladder.
pub fn ladder_points(ladder: &IterationLadder) -> Vec<ProtocolPoint> {
    ladder.retained().iter().map(ProtocolPoint::from_level).collect()
}

/// Lazily turns raw ladder levels into protocol points, stopping at the
/// first level whose fidelity fails to improve.
pub fn strictly_improving<I>(levels: I) -> impl Iterator<Item = ProtocolPoint>
where
    I: IntoIterator<Item = LadderLevel>,
{
    let mut last = f64::NEG_INFINITY;
    levels.into_iter().map_while(move |lvl| {
        if lvl.fidelity > last {
            last = lvl.fidelity;
            Some(ProtocolPoint::from_level(&lvl))
        } else {
            None
        }
    })
}

/// Optimal mixture of two protocols. `first` has the higher rate. When the
/// family has a single point both slots hold it and `q_j = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationResult {
    pub first: ProtocolPoint,
    pub second: ProtocolPoint,
    pub q_i: f64,
    pub q_j: f64,
    pub p_i: f64,
    pub p_j: f64,
    pub achieved_rate: f64,
    pub achieved_fidelity: f64,
}

impl InterpolationResult {
    fn from_weights(first: ProtocolPoint, second: ProtocolPoint, q_i: f64, q_j: f64) -> Self {
        let wi = q_i * first.rate;
        let wj = q_j * second.rate;
        let (achieved_rate, achieved_fidelity) = if q_j == 0.0 {
            (first.rate, first.fidelity)
        } else if q_i == 0.0 {
            (second.rate, second.fidelity)
        } else {
            (
                (wi + wj) / (q_i + q_j),
                (wi * first.fidelity + wj * second.fidelity) / (wi + wj),
            )
        };
        let (p_i, p_j) = normalise_probs(first, second, q_i, q_j);
        Self {
            first,
            second,
            q_i,
            q_j,
            p_i,
            p_j,
            achieved_rate,
            achieved_fidelity,
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.first.index, self.second.index)
    }

    /// Whether one of the two protocols carries all the weight.
    pub fn is_single_protocol(&self) -> bool {
        self.p_i == 0.0 || self.p_j == 0.0
    }
}

fn normalise_probs(first: ProtocolPoint, second: ProtocolPoint, q_i: f64, q_j: f64) -> (f64, f64) {
    let ui = q_i / first.mean_cost;
    let uj = q_j / second.mean_cost;
    let total = ui + uj;
    if q_j == 0.0 {
        (1.0, 0.0)
    } else if q_i == 0.0 {
        (0.0, 1.0)
    } else {
        (ui / total, uj / total)
    }
}

/// Selection probabilities `p_k ∝ q_k / I_k` of a mixture.
pub fn mixture_probabilities(result: &InterpolationResult) -> Result<(f64, f64)> {
    if result.q_i < 0.0 || result.q_j < 0.0 || result.q_i + result.q_j <= 0.0 {
        return Err(Error::InvalidArgument(
            "mixture weights must be non-negative and not both zero".into(),
        ));
    }
    Ok(normalise_probs(result.first, result.second, result.q_i, result.q_j))
}

/// Sorts by decreasing rate and drops every point that another point beats
/// on both axes or that lies on or under the segment joining two others.
/// The output has strictly decreasing rates and strictly increasing
/// fidelities.
pub fn pareto_prune(points: &[ProtocolPoint]) -> Result<Vec<ProtocolPoint>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no protocol points supplied".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        b.rate
            .total_cmp(&a.rate)
            .then(b.fidelity.total_cmp(&a.fidelity))
    });
    let mut frontier: Vec<ProtocolPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if frontier.last().is_none_or(|last| p.fidelity > last.fidelity) {
            frontier.push(p);
        }
    }

    // Upper hull in the lifted plane, scanning by increasing rate.
    let mut hull: Vec<ProtocolPoint> = Vec::with_capacity(frontier.len());
    for p in frontier.into_iter().rev() {
        while hull.len() >= 2 {
            let (ox, oy) = hull[hull.len() - 2].lifted();
            let (ax, ay) = hull[hull.len() - 1].lifted();
            let (bx, by) = p.lifted();
            let cross = (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.reverse();
    Ok(hull)
}

fn check_sorted(points: &[ProtocolPoint]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no protocol points supplied".into()));
    }
    for w in points.windows(2) {
        if !(w[0].rate > w[1].rate && w[0].fidelity < w[1].fidelity) {
            return Err(Error::InvalidArgument(
                "protocol points must have strictly decreasing rate and strictly increasing fidelity"
                    .into(),
            ));
        }
    }
    Ok(())
}

/// Highest fidelity reachable at rate `r_target` by mixing two protocols.
pub fn max_fidelity_at_rate(points: &[ProtocolPoint], r_target: f64) -> Result<InterpolationResult> {
    check_sorted(points)?;
    let (lo, hi) = (points[points.len() - 1].rate, points[0].rate);
    if !(lo..=hi).contains(&r_target) {
        return Err(Error::OutOfRange {
            what: "target rate",
            value: r_target,
            lo,
            hi,
        });
    }
    if points.len() == 1 {
        return Ok(InterpolationResult::from_weights(points[0], points[0], 1.0, 0.0));
    }
    let mut best: Option<InterpolationResult> = None;
    for (i, pi) in points.iter().enumerate() {
        for pj in &points[i + 1..] {
            if !(pj.rate <= r_target && r_target <= pi.rate) {
                continue;
            }
            let (q_i, q_j) = if r_target == pi.rate {
                (1.0, 0.0)
            } else if r_target == pj.rate {
                (0.0, 1.0)
            } else {
                let span = pi.rate - pj.rate;
                ((r_target - pj.rate) / span, (pi.rate - r_target) / span)
            };
            let cand = InterpolationResult::from_weights(*pi, *pj, q_i, q_j);
            if best.is_none_or(|b| cand.achieved_fidelity > b.achieved_fidelity) {
                best = Some(cand);
            }
        }
    }
    best.ok_or(Error::OutOfRange {
        what: "target rate",
        value: r_target,
        lo,
        hi,
    })
}

/// Highest rate at which fidelity `f_target` is reachable by mixing two
/// protocols.
pub fn max_rate_at_fidelity(points: &[ProtocolPoint], f_target: f64) -> Result<InterpolationResult> {
    check_sorted(points)?;
    let (lo, hi) = (points[0].fidelity, points[points.len() - 1].fidelity);
    if !(lo..=hi).contains(&f_target) {
        return Err(Error::OutOfRange {
            what: "target fidelity",
            value: f_target,
            lo,
            hi,
        });
    }
    if points.len() == 1 {
        return Ok(InterpolationResult::from_weights(points[0], points[0], 1.0, 0.0));
    }
    let mut best: Option<InterpolationResult> = None;
    for (i, pi) in points.iter().enumerate() {
        for pj in &points[i + 1..] {
            if !(pi.fidelity <= f_target && f_target <= pj.fidelity) {
                continue;
            }
            let (q_i, q_j) = if f_target == pi.fidelity {
                (1.0, 0.0)
            } else if f_target == pj.fidelity {
                (0.0, 1.0)
            } else {
                (
                    pj.rate * (pj.fidelity - f_target),
                    pi.rate * (f_target - pi.fidelity),
                )
            };
            let cand = InterpolationResult::from_weights(*pi, *pj, q_i, q_j);
            if best.is_none_or(|b| cand.achieved_rate > b.achieved_rate) {
                best = Some(cand);
            }
        }
    }
    best.ok_or(Error::OutOfRange {
        what: "target fidelity",
        value: f_target,
        lo,
        hi,
    })
}

/// The rate threshold `Ω` below which no further protocol can raise the
/// best rate at `f_target` above `r_achieved`.
pub fn cutoff_threshold(points_so_far: &[ProtocolPoint], f_target: f64, r_achieved: f64) -> Result<f64> {
    let below: Vec<&ProtocolPoint> = points_so_far
        .iter()
        .take_while(|p| p.fidelity < f_target)
        .collect();
    if below.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "target fidelity {f_target} does not exceed the first protocol's fidelity"
        )));
    }
    if !(f_target < 1.0) {
        return Err(Error::InvalidArgument(format!("target fidelity {f_target} must be below 1")));
    }
    below
        .iter()
        .filter_map(|p| {
            let den = (1.0 - p.fidelity) * p.rate - (1.0 - f_target) * r_achieved;
            (den > 0.0).then(|| (f_target - p.fidelity) * r_achieved * p.rate / den)
        })
        .min_by(f64::total_cmp)
        .ok_or(Error::CutoffUndefined)
}

/// Number of leading protocols worth considering for `f_target`, given a
/// mixture already reaching it at `r_achieved`. Further points are pulled
/// from `tail` only as far as needed; rates must be decreasing.
pub fn protocol_cutoff<I>(
    points_so_far: &[ProtocolPoint],
    f_target: f64,
    r_achieved: f64,
    tail: I,
) -> Result<usize>
where
    I: IntoIterator<Item = ProtocolPoint>,
{
    let omega = cutoff_threshold(points_so_far, f_target, r_achieved)?;
    Ok(points_so_far
        .iter()
        .copied()
        .chain(tail)
        .take_while(|p| p.rate > omega)
        .count())
}
