//! The DEJMPS recurrence step on Bell-diagonal weights and the ladder of
//! iterated DEJMPS protocols built from it.

use serde::{Deserialize, Serialize};

use crate::bell::{BellDiagonal, TOL};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub success_prob: f64,
    pub output: BellDiagonal,
}

/// One DEJMPS round on two pairs with Bell weights `x` (source) and `y`
/// (target).
pub fn dejmps_step(x: &BellDiagonal, y: &BellDiagonal) -> Result<StepOutcome> {
    let [a, b, c, d] = x.weights();
    let [a2, b2, c2, d2] = y.weights();
    let t = (a + b) * (a2 + b2) + (c + d) * (c2 + d2);
    if t <= 0.0 {
        return Err(Error::DegenerateStep);
    }
    let output = BellDiagonal::from_weights_unchecked([
        (a * a2 + b * b2) / t,
        (c * d2 + c2 * d) / t,
        (c * c2 + d * d2) / t,
        (a * b2 + a2 * b) / t,
    ]);
    Ok(StepOutcome {
        success_prob: t,
        output,
    })
}

fn all_permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for p0 in 0..4 {
        for p1 in 0..4 {
            for p2 in 0..4 {
                for p3 in 0..4 {
                    let p = [p0, p1, p2, p3];
                    let mut seen = [false; 4];
                    p.iter().for_each(|&s| seen[s] = true);
                    if seen.iter().all(|&s| s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Relabelling of the Bell weights of `x` that maximises the Bell fidelity
/// after one successful DEJMPS round on two copies. Ties go to the
/// lexicographically largest relabelled weight tuple.
pub fn optimal_permutation(x: &BellDiagonal) -> BellDiagonal {
    let mut best: Option<(f64, BellDiagonal)> = None;
    for perm in all_permutations() {
        let cand = x.permuted(perm);
        let Ok(step) = dejmps_step(&cand, &cand) else {
            continue;
        };
        let f = step.output.a();
        let better = match &best {
            None => true,
            Some((bf, bs)) => {
                f > *bf || (f == *bf && lex_greater(&cand.weights(), &bs.weights()))
            }
        };
        if better {
            best = Some((f, cand));
        }
    }
    // Two copies of any valid state succeed with probability ≥ 1/2.
    best.map(|(_, s)| s).unwrap_or(*x)
}

fn lex_greater(a: &[f64; 4], b: &[f64; 4]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x > y;
        }
    }
    false
}

/// One rung of the ladder: the state after `k` nested DEJMPS rounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub k: usize,
    pub state: BellDiagonal,
    pub fidelity: f64,
    /// Success probability of the round producing this level; 1 at level 0.
    pub t: f64,
    /// Cumulative product of the success probabilities up to this level.
    pub s: f64,
    pub rate: f64,
    /// Mean number of initial pairs consumed per output pair.
    pub mu: f64,
    /// Variance of the number of initial pairs consumed per output pair.
    pub sigma2: f64,
}

impl LadderLevel {
    fn base(state: BellDiagonal) -> Self {
        Self {
            k: 0,
            state,
            fidelity: state.a(),
            t: 1.0,
            s: 1.0,
            rate: 1.0,
            mu: 1.0,
            sigma2: 0.0,
        }
    }

    /// Level `k+1` from level `k` and the outcome of combining two copies.
    fn next(&self, step: StepOutcome) -> Self {
        let k = self.k + 1;
        let t = step.success_prob;
        let s = self.s * t;
        let pow = (2.0f64).powi(k as i32);
        let (rate, mu) = reciprocal_pair(s / pow);
        Self {
            k,
            state: step.output,
            fidelity: step.output.a(),
            t,
            s,
            rate,
            mu,
            sigma2: 2.0 * self.sigma2 / t + pow * pow * (1.0 - t) / (s * s),
        }
    }
}

/// `(x, 1/x)` with each side moved by at most one ulp so that their
/// product is exactly `1.0`. The shift is below the rounding error already
/// carried by `x`.
fn reciprocal_pair(x: f64) -> (f64, f64) {
    for r in [x, x.next_up(), x.next_down()] {
        let inv = 1.0 / r;
        for m in [inv, inv.next_up(), inv.next_down()] {
            if m * r == 1.0 {
                return (r, m);
            }
        }
    }
    (x, 1.0 / x)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderOptions {
    /// Relabel the initial Bell weights with [`optimal_permutation`].
    pub permute_first: bool,
    /// Also relabel before every later round.
    pub permute_each_level: bool,
}

impl LadderOptions {
    pub fn permuted() -> Self {
        Self {
            permute_first: true,
            permute_each_level: false,
        }
    }
}

/// Lazy, unbounded sequence of ladder levels. Ends early only on a
/// degenerate step.
#[derive(Clone, Debug)]
pub struct LadderLevels {
    current: Option<LadderLevel>,
    options: LadderOptions,
}

impl LadderLevels {
    pub fn new(initial: &BellDiagonal, options: LadderOptions) -> Self {
        let start = if options.permute_first {
            optimal_permutation(initial)
        } else {
            *initial
        };
        Self {
            current: Some(LadderLevel::base(start)),
            options,
        }
    }
}

impl Iterator for LadderLevels {
    type Item = LadderLevel;

    fn next(&mut self) -> Option<LadderLevel> {
        let level = self.current.take()?;
        let input = if self.options.permute_each_level && level.k > 0 {
            optimal_permutation(&level.state)
        } else {
            level.state
        };
        self.current = dejmps_step(&input, &input)
            .ok()
            .map(|step| level.next(step));
        Some(level)
    }
}

/// Levels `0..=k_max` of the iterated DEJMPS family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLadder {
    levels: Vec<LadderLevel>,
    /// Length of the prefix with strictly increasing fidelity.
    retained: usize,
    /// Set when a degenerate step stopped construction before `k_max`.
    pub truncated_at: Option<usize>,
}

impl IterationLadder {
    pub fn from_levels(levels: Vec<LadderLevel>) -> Self {
        let retained = monotone_prefix(&levels);
        Self {
            levels,
            retained,
            truncated_at: None,
        }
    }

    pub fn levels(&self) -> &[LadderLevel] {
        &self.levels
    }

    /// Levels usable as distinct protocols: fidelity strictly increasing.
    pub fn retained(&self) -> &[LadderLevel] {
        &self.levels[..self.retained]
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> Result<&LadderLevel> {
        self.levels.get(k).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "level {k} requested from a ladder of depth {}",
                self.depth()
            ))
        })
    }

    /// Success probabilities `t_1..t_k`.
    pub fn success_probs(&self, k: usize) -> Result<Vec<f64>> {
        self.level(k)?;
        Ok(self.levels[1..=k].iter().map(|l| l.t).collect())
    }

    /// Copy of the ladder with `t_k` replaced, moments recomputed. Used to
    /// inject faults when exercising the validators.
    pub fn with_success_prob(&self, k: usize, t: f64) -> Result<Self> {
        if k == 0 || k > self.depth() {
            return Err(Error::InvalidArgument(format!("no success probability at level {k}")));
        }
        let mut levels = vec![self.levels[0]];
        for (idx, lvl) in self.levels.iter().enumerate().skip(1) {
            let prev = levels[idx - 1];
            let step = StepOutcome {
                success_prob: if idx == k { t } else { lvl.t },
                output: lvl.state,
            };
            levels.push(prev.next(step));
        }
        Ok(Self::from_levels(levels))
    }
}

fn monotone_prefix(levels: &[LadderLevel]) -> usize {
    let mut n = levels.len().min(1);
    while n < levels.len() && levels[n].fidelity > levels[n - 1].fidelity {
        n += 1;
    }
    n
}

pub fn build_ladder(initial: &BellDiagonal, k_max: usize, permute_first: bool) -> Result<IterationLadder> {
    build_ladder_with(
        initial,
        k_max,
        LadderOptions {
            permute_first,
            permute_each_level: false,
        },
    )
}

pub fn build_ladder_with(
    initial: &BellDiagonal,
    k_max: usize,
    options: LadderOptions,
) -> Result<IterationLadder> {
    let levels: Vec<LadderLevel> = LadderLevels::new(initial, options).take(k_max + 1).collect();
    let f0 = levels[0].fidelity;
    if f0 <= 0.5 + TOL {
        return Err(Error::PurificationImpossible(f0));
    }
    let mut ladder = IterationLadder::from_levels(levels);
    if ladder.depth() < k_max {
        ladder.truncated_at = Some(ladder.depth());
    }
    Ok(ladder)
}

/// Variance of the per-output consumption written as a single sum rather
/// than a recurrence. Kept for cross-checking.
pub fn sigma2_closed_form(ladder: &IterationLadder, k: usize) -> Result<f64> {
    let lv = ladder.level(k)?;
    if k == 0 {
        return Ok(0.0);
    }
    let sk = lv.s;
    let inner: f64 = 1.0
        + (1..k)
            .map(|i| (2.0f64).powi(i as i32 - 1) / ladder.levels[i].s)
            .sum::<f64>();
    Ok((2.0f64).powi(k as i32 + 1) * ((2.0f64).powi(k as i32 - 1) - sk * inner) / (sk * sk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reciprocal_pairs_multiply_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200_000 {
            let x: f64 = rng.random_range(1e-6..1.0);
            let (r, m) = reciprocal_pair(x);
            assert_eq!(r * m, 1.0, "{x:e}");
            assert!((r - x).abs() <= f64::EPSILON * x);
        }
    }

    fn random_bd(rng: &mut impl Rng) -> BellDiagonal {
        let w: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
        let s: f64 = w.iter().sum();
        BellDiagonal::from_weights(w.map(|x| x / s)).unwrap()
    }

    #[test]
    fn perfect_pairs_fixed_point() {
        let x = BellDiagonal::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let out = dejmps_step(&x, &x).unwrap();
        assert_eq!(out.success_prob, 1.0);
        assert_eq!(out.output.weights(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn werner_half_keeps_fidelity() {
        let w = BellDiagonal::werner(0.5).unwrap();
        let out = dejmps_step(&w, &w).unwrap();
        assert_abs_diff_eq!(out.success_prob, 5.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.output.a(), 0.5, epsilon = 1e-15);
        // The output is Bell-diagonal but not Werner.
        assert_abs_diff_eq!(out.output.b(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(out.output.d(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn werner_seven_tenths() {
        let w = BellDiagonal::werner(0.7).unwrap();
        let out = dejmps_step(&w, &w).unwrap();
        assert_abs_diff_eq!(out.success_prob, 0.68, epsilon = 1e-15);
        let expect = [0.50 / 0.68, 0.02 / 0.68, 0.02 / 0.68, 0.14 / 0.68];
        for (got, want) in out.output.weights().iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(out.output.a(), 0.735294, epsilon = 1e-6);
        assert_abs_diff_eq!(out.output.d(), 0.205882, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_step_reported() {
        let x = BellDiagonal::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let y = BellDiagonal::new(0.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(dejmps_step(&x, &y), Err(Error::DegenerateStep));
    }

    #[test]
    fn step_outputs_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let (x, y) = (random_bd(&mut rng), random_bd(&mut rng));
            let out = dejmps_step(&x, &y).unwrap();
            let w = out.output.weights();
            assert!(w.iter().all(|&v| v >= 0.0));
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            let [a, b, c, d] = x.weights();
            let [a2, b2, c2, d2] = y.weights();
            assert_abs_diff_eq!(
                out.success_prob,
                (a + b) * (a2 + b2) + (c + d) * (c2 + d2),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn permutation_examples() {
        let w = BellDiagonal::werner(0.7).unwrap();
        assert_eq!(optimal_permutation(&w).weights(), w.weights());

        let x = BellDiagonal::new(0.5 / 0.68, 0.02 / 0.68, 0.02 / 0.68, 0.14 / 0.68).unwrap();
        let p = optimal_permutation(&x);
        assert_abs_diff_eq!(p.a(), 0.5 / 0.68, epsilon = 1e-15);

        let flat = BellDiagonal::new(0.25, 0.25, 0.25, 0.25).unwrap();
        assert_eq!(optimal_permutation(&flat).weights(), flat.weights());
    }

    #[test]
    fn permutation_oracle_by_enumeration() {
        // The chosen relabelling must reach the best one-round fidelity over
        // all 24 relabellings, computed here without the tie-break.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = random_bd(&mut rng);
            let best = all_permutations()
                .into_iter()
                .map(|p| {
                    let c = x.permuted(p);
                    dejmps_step(&c, &c).unwrap().output.a()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let chosen = optimal_permutation(&x);
            assert_eq!(dejmps_step(&chosen, &chosen).unwrap().output.a(), best);
        }
    }

    #[test]
    fn ladder_of_perfect_pairs() {
        let x = BellDiagonal::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let ladder = build_ladder(&x, 3, false).unwrap();
        assert_eq!(ladder.levels().len(), 4);
        for lvl in ladder.levels() {
            assert_eq!(lvl.fidelity, 1.0);
            assert_eq!(lvl.t, 1.0);
            assert_eq!(lvl.rate, (0.5f64).powi(lvl.k as i32));
        }
        assert_eq!(ladder.retained().len(), 1);
    }

    #[test]
    fn ladder_werner_level_one() {
        let w = BellDiagonal::werner(0.7).unwrap();
        let ladder = build_ladder(&w, 1, true).unwrap();
        let l1 = ladder.level(1).unwrap();
        assert_abs_diff_eq!(l1.t, 0.68, epsilon = 1e-15);
        assert_abs_diff_eq!(l1.s, 0.68, epsilon = 1e-15);
        assert_abs_diff_eq!(l1.rate, 0.34, epsilon = 1e-15);
        assert_abs_diff_eq!(l1.mu, 2.941176, epsilon = 1e-6);
        assert_abs_diff_eq!(l1.sigma2, 2.768166, epsilon = 1e-6);
        // Geometric number of attempts with 2 pairs each.
        assert_abs_diff_eq!(l1.sigma2, 4.0 * 0.32 / (0.68 * 0.68), epsilon = 1e-13);
    }

    #[test]
    fn ladder_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 20 {
            let x = random_bd(&mut rng);
            let Ok(ladder) = build_ladder(&x, 6, true) else {
                continue;
            };
            checked += 1;
            let mut prod = 1.0;
            for lvl in ladder.levels() {
                if lvl.k > 0 {
                    prod *= lvl.t;
                }
                assert_abs_diff_eq!(lvl.s, prod, epsilon = 1e-12);
                assert_abs_diff_eq!(lvl.mu * lvl.rate, 1.0, epsilon = 1e-15);
                let closed = sigma2_closed_form(&ladder, lvl.k).unwrap();
                assert!((closed - lvl.sigma2).abs() <= 1e-9 * lvl.sigma2.max(1.0));
            }
        }
    }

    #[test]
    fn ladder_rejects_half_fidelity() {
        let w = BellDiagonal::werner(0.5).unwrap();
        assert!(matches!(
            build_ladder(&w, 3, true),
            Err(Error::PurificationImpossible(_))
        ));
    }

    #[test]
    fn permute_first_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut n = 0;
        while n < 1000 {
            let x = random_bd(&mut rng);
            let on = build_ladder(&x, 1, true);
            let off = build_ladder(&x, 1, false);
            if let (Ok(on), Ok(off)) = (on, off) {
                n += 1;
                assert!(on.level(1).unwrap().fidelity >= off.level(1).unwrap().fidelity);
            }
        }
    }

    #[test]
    fn fault_injection_changes_moments() {
        let w = BellDiagonal::werner(0.7).unwrap();
        let ladder = build_ladder(&w, 3, true).unwrap();
        let faulty = ladder.with_success_prob(1, 0.32).unwrap();
        assert_eq!(faulty.level(1).unwrap().t, 0.32);
        assert_abs_diff_eq!(faulty.level(3).unwrap().mu * faulty.level(3).unwrap().rate, 1.0, epsilon = 1e-15);
        assert!(ladder.with_success_prob(0, 0.5).is_err());
    }
}
