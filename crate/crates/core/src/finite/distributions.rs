//! Exact distributions of the pairs produced from, and consumed out of, a
//! pool when one protocol is iterated breadth-first.

use super::CountDistribution;
use crate::dejmps::IterationLadder;
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Consumption distributions stop once this much mass is left unaccounted for.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// Hard ceiling on the pool size scanned by [`pairs_consumed_distribution`].
const MAX_SCAN: usize = 1 << 16;

/// Rows of the binomial pmf for a fixed success probability, built by
/// Pascal's rule so that every entry is a convex combination.
struct BinomialRows {
    t: f64,
    rows: Vec<Vec<f64>>,
}

impl BinomialRows {
    fn new(t: f64) -> Self {
        Self { t, rows: vec![vec![1.0]] }
    }

    fn row(&mut self, a: usize) -> &[f64] {
        while self.rows.len() <= a {
            let prev = self.rows.last().unwrap();
            let mut next = vec![0.0; prev.len() + 1];
            for (s, &v) in prev.iter().enumerate() {
                next[s] += v * (1.0 - self.t);
                next[s + 1] += v * self.t;
            }
            self.rows.push(next);
        }
        &self.rows[a]
    }
}

/// Reusable state for computing `M_k^n` at many `n`.
struct Producer {
    binomials: Vec<BinomialRows>,
}

impl Producer {
    fn new(ladder: &IterationLadder, k: usize) -> Result<Self> {
        let ts = ladder.success_probs(k)?;
        Ok(Self {
            binomials: ts.into_iter().map(BinomialRows::new).collect(),
        })
    }

    /// Distributions of `M_0^n, …, M_k^n`.
    fn levels(&mut self, n: usize) -> Vec<Vec<f64>> {
        let mut cur = vec![0.0; n + 1];
        cur[n] = 1.0;
        let mut out = vec![cur.clone()];
        for rows in &mut self.binomials {
            let mut next = vec![0.0; cur.len() / 2 + 1];
            for (m, &w) in cur.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (s, &b) in rows.row(m / 2).iter().enumerate() {
                    next[s] += w * b;
                }
            }
            out.push(next.clone());
            cur = next;
        }
        out
    }
}

/// Distribution of the number `M_k^n` of level-`k` pairs obtained from `n`
/// initial pairs.
pub fn pairs_produced_distribution(ladder: &IterationLadder, k: usize, n: usize) -> Result<CountDistribution> {
    let mut producer = Producer::new(ladder, k)?;
    let mass = producer.levels(n).pop().unwrap();
    Ok(CountDistribution::new(mass))
}

/// `Pr(M_1^n odd)` in closed form.
pub fn odd_mass_level_one(t1: f64, n: usize) -> f64 {
    (1.0 - (1.0 - 2.0 * t1).powi((n / 2) as i32)) / 2.0
}

/// `E(M_k^n)` by the mean recurrence, reading odd masses from the
/// distributions of the level below.
pub fn expected_pairs(ladder: &IterationLadder, k: usize, n: usize) -> Result<f64> {
    let ts = ladder.success_probs(k)?;
    let mut producer = Producer::new(ladder, k.saturating_sub(1))?;
    let dists = if k >= 3 { producer.levels(n) } else { Vec::new() };
    let mut mean = n as f64;
    for (idx, &t) in ts.iter().enumerate() {
        let odd = match idx {
            0 => (n % 2) as f64,
            1 => odd_mass_level_one(ts[0], n),
            _ => dists[idx].iter().skip(1).step_by(2).copied().collect::<NeumaierSum>().value(),
        };
        mean = t * (mean - odd) / 2.0;
    }
    Ok(mean)
}

/// Distribution of the pool size `I_k^{m}` needed for `m` level-`k` pairs,
/// from `Pr(I = n) = Pr(M_k^n ≥ m) − Pr(M_k^{n−1} ≥ m)`.
pub fn pairs_consumed_distribution(ladder: &IterationLadder, k: usize, m: usize) -> Result<CountDistribution> {
    pairs_consumed_distribution_to(ladder, k, m, DEFAULT_TRUNCATION)
}

pub fn pairs_consumed_distribution_to(
    ladder: &IterationLadder,
    k: usize,
    m: usize,
    truncation: f64,
) -> Result<CountDistribution> {
    if k == 0 || m == 0 {
        ladder.level(k)?;
        let mut mass = vec![0.0; m + 1];
        mass[m] = 1.0;
        return Ok(CountDistribution::new(mass));
    }
    if !(truncation > 0.0 && truncation < 1.0) {
        return Err(Error::InvalidArgument(format!("truncation {truncation} outside (0, 1)")));
    }
    let mut producer = Producer::new(ladder, k)?;
    let mut mass = Vec::new();
    let mut prev_tail = 0.0;
    let mut total = NeumaierSum::new();
    for n in 0..MAX_SCAN {
        let dist = producer.levels(n).pop().unwrap();
        let tail: f64 = dist.iter().skip(m).copied().collect::<NeumaierSum>().value();
        mass.push((tail - prev_tail).max(0.0));
        total += tail - prev_tail;
        prev_tail = tail;
        if total.value() >= 1.0 - truncation {
            let mut out = CountDistribution::new(mass);
            out.truncated_mass = (1.0 - total.value()).max(0.0);
            return Ok(out);
        }
    }
    Err(Error::InvalidArgument(format!(
        "consumption distribution for k={k}, m={m} did not converge within {MAX_SCAN} pairs"
    )))
}

/// Normal approximation `(m μ_k, m σ_k²)` to `I_k^{m}`.
pub fn normal_approximation(ladder: &IterationLadder, k: usize, m: usize) -> Result<(f64, f64)> {
    let level = ladder.level(k)?;
    Ok((m as f64 * level.mu, m as f64 * level.sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::BellDiagonal;
    use crate::dejmps::build_ladder;
    use approx::assert_abs_diff_eq;

    fn werner_ladder(f: f64, k: usize) -> IterationLadder {
        build_ladder(&BellDiagonal::werner(f).unwrap(), k, true).unwrap()
    }

    #[test]
    fn level_zero_is_point_mass() {
        let l = werner_ladder(0.7, 2);
        let d = pairs_produced_distribution(&l, 0, 7).unwrap();
        assert_eq!(d.mass, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(expected_pairs(&l, 0, 7).unwrap(), 7.0);
    }

    #[test]
    fn level_one_is_binomial() {
        let l = werner_ladder(0.7, 2);
        let d = pairs_produced_distribution(&l, 1, 4).unwrap();
        assert_abs_diff_eq!(d.mass[2], 0.4624, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mass[1], 0.4352, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mass[0], 0.1024, epsilon = 1e-15);
        assert_abs_diff_eq!(expected_pairs(&l, 1, 10).unwrap(), 3.4, epsilon = 1e-14);
        assert_abs_diff_eq!(odd_mass_level_one(0.68, 4), 0.4352, epsilon = 1e-15);
        // Odd mass closed form against direct summation.
        for n in 0..60 {
            let d = pairs_produced_distribution(&l, 1, n).unwrap();
            let odd: f64 = d.mass.iter().skip(1).step_by(2).sum();
            assert_abs_diff_eq!(odd, odd_mass_level_one(0.68, n), epsilon = 1e-13);
        }
        assert!(pairs_produced_distribution(&l, 3, 4).is_err());
    }

    #[test]
    fn normalisation_and_level_two_mean() {
        let l = werner_ladder(0.62, 4);
        let (t1, t2) = (l.levels()[1].t, l.levels()[2].t);
        for n in [0, 1, 2, 3, 17, 64, 255, 256] {
            for k in 0..=4 {
                let d = pairs_produced_distribution(&l, k, n).unwrap();
                assert_abs_diff_eq!(d.total(), 1.0, epsilon = 1e-10);
                assert_abs_diff_eq!(d.mean(), expected_pairs(&l, k, n).unwrap(), epsilon = 1e-10);
            }
            let h = (n / 2) as i32;
            let closed = t2 * (2.0 * h as f64 * t1 + (1.0 - 2.0 * t1).powi(h) - 1.0) / 4.0;
            let d = pairs_produced_distribution(&l, 2, n).unwrap();
            assert_abs_diff_eq!(d.mean(), closed, epsilon = 1e-12);
        }
    }

    #[test]
    fn consumed_level_one_is_geometric() {
        let l = werner_ladder(0.7, 2);
        let d = pairs_consumed_distribution(&l, 1, 1).unwrap();
        for n in 1..20 {
            assert_abs_diff_eq!(d.prob(2 * n), 0.68 * 0.32f64.powi(n as i32 - 1), epsilon = 1e-14);
            assert_eq!(d.prob(2 * n - 1), 0.0);
        }
        assert!(d.total() >= 1.0 - DEFAULT_TRUNCATION);
        assert!(d.truncated_mass <= DEFAULT_TRUNCATION);
        assert_abs_diff_eq!(d.mean(), 2.0 / 0.68, epsilon = 1e-9);
        assert_abs_diff_eq!(l.levels()[1].mu, 2.941176, epsilon = 1e-6);

        let point = pairs_consumed_distribution(&l, 0, 5).unwrap();
        assert_eq!(point.prob(5), 1.0);
        assert_eq!(point.total(), 1.0);
    }

    #[test]
    fn consumed_moments_match_ladder() {
        let l = werner_ladder(0.7, 3);
        for k in 1..=3 {
            for m in [1, 3] {
                let d = pairs_consumed_distribution(&l, k, m).unwrap();
                let (mean, var) = normal_approximation(&l, k, m).unwrap();
                assert_abs_diff_eq!(d.mean(), mean, epsilon = 1e-8 * mean);
                assert_abs_diff_eq!(d.variance(), var, epsilon = 1e-7 * var);
            }
        }
    }

    #[test]
    fn normal_approximation_examples() {
        let l = werner_ladder(0.7, 2);
        assert_eq!(normal_approximation(&l, 0, 9).unwrap(), (9.0, 0.0));
        let (mean, var) = normal_approximation(&l, 1, 100).unwrap();
        assert_abs_diff_eq!(mean, 294.1176, epsilon = 1e-4);
        assert_abs_diff_eq!(var, 276.8166, epsilon = 1e-4);
        let d = pairs_consumed_distribution(&l, 1, 100).unwrap();
        let below = d.cdf(mean.floor() as usize);
        assert!(below > 0.45 && below < 0.55, "{below}");
    }
}
