//! Joint law of `(X_m, Y_m)` from one absorbing Markov chain in which every
//! transition consumes exactly one pool pair.
//!
//! States come in blocks indexed by the number `n` of outputs already made
//! and, for `n ≥ 1`, the protocol that made the `n`-th one. A block holds
//! the production counters of both protocols plus two "just completed"
//! states. The `T`-th completion moves into one of two absorbing states.

use super::{feed_pair, FiniteRunSpec, JointLawTable, LawSource};
use crate::dejmps::IterationLadder;
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Default refusal threshold on the number of chain states.
pub const DEFAULT_STATE_CAP: u64 = 10_000_000;

/// `(2T − 1)(2^i + 2^j + 2) + 2` with `T = ⌊N/2^i⌋`.
pub fn markov_state_count(n: usize, i: usize, j: usize) -> u64 {
    let t = (n >> i) as u64;
    if t == 0 {
        return 0;
    }
    (2 * t - 1) * ((1u64 << i) + (1u64 << j) + 2) + 2
}

pub fn joint_law_markov(spec: &FiniteRunSpec, ladder: &IterationLadder) -> Result<JointLawTable> {
    joint_law_markov_capped(spec, ladder, DEFAULT_STATE_CAP)
}

pub fn joint_law_markov_capped(
    spec: &FiniteRunSpec,
    ladder: &IterationLadder,
    state_cap: u64,
) -> Result<JointLawTable> {
    let (i, j) = spec.pair;
    let feeds = [feed_table(ladder, i)?, feed_table(ladder, j)?];
    let t_max = spec.max_outputs();
    if t_max == 0 {
        return Ok(JointLawTable::from_joint(LawSource::Markov, spec, Vec::new()));
    }
    let states = markov_state_count(spec.n, i, j);
    if states > state_cap {
        return Err(Error::StateCapExceeded { states, cap: state_cap });
    }

    let layout = Layout {
        widths: [1 << i, 1 << j],
        t_max,
    };
    let probs = [spec.p_i, spec.p_j()];
    let total = states as usize;
    let mut cur = vec![0.0f64; total];
    let mut next = vec![0.0f64; total];
    let mut flow = vec![[NeumaierSum::new(), NeumaierSum::new()]; t_max];
    let (final_base, blocks) = (layout.final_base(), layout.blocks());

    for (proto, &p) in probs.iter().enumerate() {
        cur[layout.track(0, proto, 0)] += p;
    }

    for _ in 0..spec.n {
        next.fill(0.0);
        next[final_base] = cur[final_base];
        next[final_base + 1] = cur[final_base + 1];
        for b in 0..blocks {
            let made = layout.made(b);
            let base = b * layout.block_size();
            for slot in 0..layout.block_size() {
                let w = cur[base + slot];
                if w == 0.0 {
                    continue;
                }
                match layout.slot_kind(slot) {
                    Slot::Track(proto, counter) => {
                        layout.feed(&mut next, &mut flow, b, made, proto, &feeds[proto][counter], w);
                    }
                    Slot::Done(last) => {
                        let nb = layout.block(made + 1, last);
                        for (proto, &p) in probs.iter().enumerate() {
                            if p > 0.0 {
                                layout.feed(&mut next, &mut flow, nb, made + 1, proto, &feeds[proto][0], w * p);
                            }
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }

    let joint = flow.into_iter().map(|[a, b]| (a.value(), b.value())).collect();
    Ok(JointLawTable::from_joint(LawSource::Markov, spec, joint))
}

type Feed = Vec<(Option<usize>, f64)>;

fn feed_table(ladder: &IterationLadder, k: usize) -> Result<Vec<Feed>> {
    let ts = ladder.success_probs(k)?;
    Ok((0..1usize << k).map(|c| feed_pair(&ts, c)).collect())
}

enum Slot {
    Track(usize, usize),
    Done(usize),
}

struct Layout {
    widths: [usize; 2],
    t_max: usize,
}

impl Layout {
    fn block_size(&self) -> usize {
        self.widths[0] + self.widths[1] + 2
    }

    fn blocks(&self) -> usize {
        2 * self.t_max - 1
    }

    fn final_base(&self) -> usize {
        self.blocks() * self.block_size()
    }

    fn block(&self, made: usize, last: usize) -> usize {
        if made == 0 { 0 } else { 1 + 2 * (made - 1) + last }
    }

    fn made(&self, block: usize) -> usize {
        if block == 0 { 0 } else { (block - 1) / 2 + 1 }
    }

    fn track(&self, block: usize, proto: usize, counter: usize) -> usize {
        block * self.block_size() + proto * self.widths[0] + counter
    }

    fn slot_kind(&self, slot: usize) -> Slot {
        let [wi, wj] = self.widths;
        if slot < wi {
            Slot::Track(0, slot)
        } else if slot < wi + wj {
            Slot::Track(1, slot - wi)
        } else {
            Slot::Done(slot - wi - wj)
        }
    }

    /// Moves mass `w` held by a `proto` counter in `block` through one
    /// consumed pair, recording completions as flow into row `made + 1`.
    #[allow(clippy::too_many_arguments)]
    fn feed(
        &self,
        next: &mut [f64],
        flow: &mut [[NeumaierSum; 2]],
        block: usize,
        made: usize,
        proto: usize,
        outcomes: &Feed,
        w: f64,
    ) {
        for &(target, p) in outcomes {
            let mass = w * p;
            match target {
                Some(c) => next[self.track(block, proto, c)] += mass,
                None => {
                    flow[made][proto] += mass;
                    let idx = if made + 1 == self.t_max {
                        self.final_base() + proto
                    } else {
                        (block + 1) * self.block_size() - 2 + proto
                    };
                    next[idx] += mass;
                }
            }
        }
    }
}
