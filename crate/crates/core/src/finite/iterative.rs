//! Joint law of `(X_m, Y_m)` by convolving the pool cost of single outputs.
//!
//! With `y(n) = Pr(one output fits in n pairs)` for the mixture and
//! `D_m` the law of the pool consumed by `m` outputs,
//! `Pr(X_m = k, Y_m = 1) = p_k Σ_n D_{m−1}(n) Y_k(N − n)`.

use super::{feed_pair, FiniteRunSpec, JointLawTable, LawSource};
use crate::dejmps::IterationLadder;
use crate::error::Result;
use crate::sum::NeumaierSum;

/// Probabilities below this are dropped from the convolution supports. The
/// discarded total stays under `N²·1e-40`, far beneath any threshold used.
const NEGLIGIBLE: f64 = 1e-40;

/// Per-step completion probabilities of one output by protocol `k`:
/// entry `n` is `Pr(I_k^1 = n)` for `n = 0..=n_max`.
fn completion_steps(ladder: &IterationLadder, k: usize, n_max: usize) -> Result<Vec<f64>> {
    let ts = ladder.success_probs(k)?;
    let width = 1usize << k;
    let feeds: Vec<_> = (0..width).map(|c| feed_pair(&ts, c)).collect();
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[0] = 1.0;
    let mut out = vec![0.0; n_max + 1];
    for slot in out.iter_mut().skip(1) {
        next.fill(0.0);
        let mut done = 0.0;
        for (c, &w) in cur.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(target, p) in &feeds[c] {
                match target {
                    Some(t) => next[t] += w * p,
                    None => done += w * p,
                }
            }
        }
        *slot = done;
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(out)
}

/// `Pr(I_k^1 ≤ n)` for `n = 0..=n_max`: the chance that one output by
/// protocol `k` fits in `n` pairs.
pub fn single_pair_success(ladder: &IterationLadder, k: usize, n_max: usize) -> Result<Vec<f64>> {
    let steps = completion_steps(ladder, k, n_max)?;
    let mut acc = NeumaierSum::new();
    Ok(steps
        .into_iter()
        .map(|p| {
            acc += p;
            acc.value().min(1.0)
        })
        .collect())
}

/// A probability vector stored from `offset` on.
struct Sparse {
    offset: usize,
    mass: Vec<f64>,
}

impl Sparse {
    fn trimmed(offset: usize, mass: Vec<f64>) -> Self {
        let first = mass.iter().position(|&p| p > NEGLIGIBLE);
        match first {
            None => Self { offset, mass: Vec::new() },
            Some(lo) => {
                let hi = mass.iter().rposition(|&p| p > NEGLIGIBLE).unwrap();
                Self {
                    offset: offset + lo,
                    mass: mass[lo..=hi].to_vec(),
                }
            }
        }
    }

    /// Convolution restricted to indices `≤ limit`.
    fn convolve(&self, other: &Sparse, limit: usize) -> Sparse {
        let offset = self.offset + other.offset;
        if self.mass.is_empty() || other.mass.is_empty() || offset > limit {
            return Sparse { offset, mass: Vec::new() };
        }
        let len = (self.mass.len() + other.mass.len() - 1).min(limit - offset + 1);
        let mut out = vec![0.0; len];
        for (a, &x) in self.mass.iter().enumerate() {
            if a >= len {
                break;
            }
            for (b, &y) in other.mass.iter().take(len - a).enumerate() {
                out[a + b] += x * y;
            }
        }
        Sparse::trimmed(offset, out)
    }
}

pub fn joint_law_iterative(spec: &FiniteRunSpec, ladder: &IterationLadder) -> Result<JointLawTable> {
    let n = spec.n;
    let (i, j) = spec.pair;
    let probs = [spec.p_i, spec.p_j()];
    let steps = [completion_steps(ladder, i, n)?, completion_steps(ladder, j, n)?];
    let t_max = spec.max_outputs();

    let cumulative: Vec<Vec<f64>> = steps
        .iter()
        .map(|s| {
            let mut acc = NeumaierSum::new();
            s.iter()
                .map(|&p| {
                    acc += p;
                    acc.value().min(1.0)
                })
                .collect()
        })
        .collect();
    let mixture: Vec<f64> = (0..=n)
        .map(|m| probs[0] * steps[0][m] + probs[1] * steps[1][m])
        .collect();
    let one = Sparse::trimmed(0, mixture);

    let mut d = Sparse {
        offset: 0,
        mass: vec![1.0],
    };
    let mut joint = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        if d.mass.is_empty() {
            joint.push((0.0, 0.0));
            continue;
        }
        let mut row = [0.0; 2];
        for (proto, out) in row.iter_mut().enumerate() {
            if probs[proto] == 0.0 {
                continue;
            }
            let mut acc = NeumaierSum::new();
            for (idx, &w) in d.mass.iter().enumerate() {
                let used = d.offset + idx;
                if used > n {
                    break;
                }
                acc += w * cumulative[proto][n - used];
            }
            *out = probs[proto] * acc.value();
        }
        joint.push((row[0], row[1]));
        d = d.convolve(&one, n);
    }
    Ok(JointLawTable::from_joint(LawSource::Iterative, spec, joint))
}
