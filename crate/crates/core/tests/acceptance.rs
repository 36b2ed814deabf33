//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! runtime; the process exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use purify_core::bell::{BellDiagonal, ChannelFamily, TwoQubitDensity};
use purify_core::circuit::dejmps_step_circuit_oracle;
use purify_core::dejmps::{build_ladder, dejmps_step, sigma2_closed_form, IterationLadder};
use purify_core::finite::{
    expected_pairs, joint_law_iterative, joint_law_markov, pairs_produced_distribution, BoundMode,
    FiniteRunSpec,
};
use purify_core::interpolate::{
    ladder_points, max_fidelity_at_rate, max_rate_at_fidelity, pareto_prune, protocol_cutoff,
    ProtocolPoint,
};
use purify_core::sweep::{
    asymptotic_row, finite_sweep, FiniteMethod, FiniteRow, FiniteSettings, RowStatus,
    SweepInput,
};
use purify_core::validation::{run_validation, ValidationConfig};

type Outcome = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond { Ok(()) } else { Err(msg()) }
}

fn random_bd(rng: &mut ChaCha8Rng) -> BellDiagonal {
    let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
    let s: f64 = w.iter().sum();
    BellDiagonal::from_weights(w.map(|v| v / s)).unwrap()
}

/// Random Bell-diagonal state with fidelity in `(lo, hi)`.
fn random_purifiable(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> BellDiagonal {
    let a = rng.random_range(lo..hi);
    let w: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>() + 1e-3);
    let s: f64 = w.iter().sum();
    BellDiagonal::from_weights([a, (1.0 - a) * w[0] / s, (1.0 - a) * w[1] / s, (1.0 - a) * w[2] / s]).unwrap()
}

fn dejmps_step_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let (x, y) = (random_bd(&mut rng), random_bd(&mut rng));
        let closed = dejmps_step(&x, &y).map_err(|e| e.to_string())?;
        let oracle = dejmps_step_circuit_oracle(
            &TwoQubitDensity::from_bell_diagonal(&x),
            &TwoQubitDensity::from_bell_diagonal(&y),
        )
        .map_err(|e| e.to_string())?;
        let worst = closed
            .output
            .weights()
            .iter()
            .zip(oracle.output.weights())
            .map(|(a, b)| (a - b).abs())
            .fold((closed.success_prob - oracle.success_prob).abs(), f64::max);
        ensure(worst <= 1e-10, || format!("case {case}: difference {worst:e}"))?;
    }
    let half = BellDiagonal::werner(0.5).unwrap();
    let out = dejmps_step(&half, &half).unwrap();
    ensure((out.output.a() - 0.5).abs() <= 1e-12, || format!("F=1/2 moved to {}", out.output.a()))?;
    let one = BellDiagonal::werner(1.0).unwrap();
    let out = dejmps_step(&one, &one).unwrap();
    ensure(
        (out.output.a() - 1.0).abs() <= 1e-12 && (out.success_prob - 1.0).abs() <= 1e-12,
        || format!("F=1 moved to {} with t={}", out.output.a(), out.success_prob),
    )
}

fn ladder_moments() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let state = random_purifiable(&mut rng, 0.55, 0.99);
        let ladder = build_ladder(&state, 6, false).map_err(|e| e.to_string())?;
        for lvl in ladder.levels() {
            let closed = sigma2_closed_form(&ladder, lvl.k).map_err(|e| e.to_string())?;
            ensure((closed - lvl.sigma2).abs() <= 1e-9, || {
                format!("case {case} k={}: closed {closed:e} vs recurrence {:e}", lvl.k, lvl.sigma2)
            })?;
            ensure(lvl.mu * lvl.rate == 1.0, || {
                format!("case {case} k={}: mu*R = {:.17}", lvl.k, lvl.mu * lvl.rate)
            })?;
        }
    }
    Ok(())
}

fn distribution_recurrences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ladders = vec![build_ladder(&BellDiagonal::werner(0.7).unwrap(), 4, true).unwrap()];
    ladders.push(build_ladder(&random_purifiable(&mut rng, 0.55, 0.95), 4, false).unwrap());
    for ladder in &ladders {
        let (t1, t2) = (ladder.levels()[1].t, ladder.levels()[2].t);
        for n in 0..=256 {
            for k in 0..=4 {
                let d = pairs_produced_distribution(ladder, k, n).map_err(|e| e.to_string())?;
                let total = d.total();
                ensure((total - 1.0).abs() <= 1e-10, || format!("k={k} n={n}: total {total:.17}"))?;
            }
            let h = (n / 2) as i32;
            let closed = t2 * (2.0 * h as f64 * t1 + (1.0 - 2.0 * t1).powi(h) - 1.0) / 4.0;
            let mean = pairs_produced_distribution(ladder, 2, n).unwrap().mean();
            ensure((mean - closed).abs() <= 1e-12, || format!("n={n}: mean {mean} vs closed {closed}"))?;
            let rec = expected_pairs(ladder, 2, n).unwrap();
            ensure((rec - closed).abs() <= 1e-12, || format!("n={n}: recurrence {rec} vs closed {closed}"))?;
        }
    }
    Ok(())
}

fn cross_method_agreement() -> Outcome {
    let ladder = build_ladder(&BellDiagonal::werner(0.7).unwrap(), 4, true).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=2 {
        for j in i + 1..=3 {
            for n in 0..=200 {
                for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let spec = FiniteRunSpec::new(n, (i, j), p, 0.5, BoundMode::Global, &ladder).unwrap();
                    let a = joint_law_markov(&spec, &ladder).map_err(|e| e.to_string())?;
                    let b = joint_law_iterative(&spec, &ladder).map_err(|e| e.to_string())?;
                    ensure(a.rows.len() == b.rows.len(), || format!("({i},{j}) N={n}: row counts differ"))?;
                    let d = a.max_difference(&b);
                    worst = worst.max(d);
                    ensure(d <= 1e-9, || format!("({i},{j}) N={n} p_i={p}: difference {d:e}"))?;
                }
            }
        }
    }
    println!("      largest entry-wise difference {worst:e}");
    Ok(())
}

fn monte_carlo_concordance() -> Outcome {
    let report = run_validation(&ValidationConfig::default()).map_err(|e| e.to_string())?;
    for c in &report.checks {
        println!(
            "      {}: {} comparisons, worst {:.3} of the 3σ band",
            c.name, c.compared, c.worst_ratio
        );
    }
    ensure(report.passed, || {
        report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.violations.join("; ")))
            .collect::<Vec<_>>()
            .join(" | ")
    })
}

fn optimizer_families(rng: &mut ChaCha8Rng) -> Vec<Vec<ProtocolPoint>> {
    let mut out = Vec::new();
    for f in [0.55, 0.6, 0.65, 0.7, 0.8, 0.9] {
        let ladder = build_ladder(&BellDiagonal::werner(f).unwrap(), 12, true).unwrap();
        out.push(pareto_prune(&ladder_points(&ladder)).unwrap());
    }
    for _ in 0..20 {
        let k = rng.random_range(1..=5);
        let pts: Vec<_> = (0..k)
            .map(|idx| ProtocolPoint::new(idx, rng.random_range(0.01..1.0), rng.random_range(0.5..1.0)).unwrap())
            .collect();
        out.push(pareto_prune(&pts).unwrap());
    }
    out
}

fn optimizer_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let families = optimizer_families(&mut rng);
    for (fi, pts) in families.iter().enumerate() {
        for p in pts {
            let r = max_rate_at_fidelity(pts, p.fidelity).map_err(|e| e.to_string())?;
            ensure(r.achieved_rate == p.rate, || {
                format!("family {fi}: rate {} at F_{} instead of {}", r.achieved_rate, p.index, p.rate)
            })?;
        }
        let (lo, hi) = (pts[0].fidelity, pts[pts.len() - 1].fidelity);
        for s in 0..=200 {
            let f = lo + (hi - lo) * s as f64 / 200.0;
            let r = max_rate_at_fidelity(pts, f).unwrap();
            let back = max_fidelity_at_rate(pts, r.achieved_rate).unwrap();
            ensure((back.achieved_fidelity - f).abs() <= 1e-9, || {
                format!("family {fi}: F {f} -> R {} -> F {}", r.achieved_rate, back.achieved_fidelity)
            })?;
        }
    }
    // Three-way mixtures on a 0.01 simplex grid never beat the best pair.
    for (fi, pts) in families.iter().enumerate().filter(|(_, p)| p.len() <= 5) {
        let n = pts.len();
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    let trio = [pts[a], pts[b], pts[c]];
                    for x in 0..=100 {
                        for y in 0..=100 - x {
                            let p = [x as f64 / 100.0, y as f64 / 100.0, (100 - x - y) as f64 / 100.0];
                            let cost: f64 = (0..3).map(|k| p[k] * trio[k].mean_cost).sum();
                            let fid: f64 = (0..3).map(|k| p[k] * trio[k].fidelity).sum();
                            let rate = (1.0 / cost).clamp(pts[n - 1].rate, pts[0].rate);
                            let best = max_fidelity_at_rate(pts, rate).unwrap().achieved_fidelity;
                            ensure(fid <= best + 1e-6, || {
                                format!("family {fi}: mixture {p:?} of {a},{b},{c} reaches {fid} > {best}")
                            })?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn rate_ordering() -> Outcome {
    let f_target = 0.9;
    let family = ChannelFamily::Depolarising;
    let mut params: Vec<f64> = (0..=120).map(|s| 0.6 * s as f64 / 120.0).collect();
    params.push(2.0 / 15.0);
    let mut checked = 0;
    for p in params {
        let input = SweepInput::from_channel(&family.at(p).unwrap()).unwrap();
        let row = asymptotic_row(&input, f_target, 40).map_err(|e| e.to_string())?;
        if !row.status.has_rates() {
            continue;
        }
        checked += 1;
        let (u, i, r) = (
            row.rate_uninterpolated.unwrap(),
            row.rate_interpolated.unwrap(),
            row.rate_ree_bound.unwrap(),
        );
        ensure(u <= i && i <= r, || format!("p={p}: {u} ≤ {i} ≤ {r} violated"))?;
        if row.status == RowStatus::Ok {
            let ladder = build_ladder(&input.state, 40, true).unwrap();
            let hull = pareto_prune(&ladder_points(&ladder)).unwrap();
            let hit = hull.iter().any(|l| l.fidelity == f_target);
            ensure((u == i) == hit, || format!("p={p}: equality {} but target hit {hit}", u == i))?;
        }
    }
    // A target placed exactly on a level's fidelity gives equal rates when
    // that level is on the upper hull, and a strictly better mixture when a
    // chord between other levels passes above it.
    for f0 in [0.6, 0.7, 0.8] {
        let input = SweepInput::werner(f0).unwrap();
        let ladder = build_ladder(&input.state, 6, true).unwrap();
        let hull = pareto_prune(&ladder_points(&ladder)).unwrap();
        for lvl in &ladder.retained()[1..] {
            let row = asymptotic_row(&input, lvl.fidelity, 40).unwrap();
            let on_hull = hull.iter().any(|p| p.index == lvl.k);
            let (u, i) = (row.rate_uninterpolated.unwrap(), row.rate_interpolated.unwrap());
            ensure((u == i) == on_hull, || {
                format!("F0={f0}: target F_{} = {}: rates {u} / {i}, on hull {on_hull}", lvl.k, lvl.fidelity)
            })?;
            checked += 1;
        }
    }
    println!("      {checked} rows checked");
    Ok(())
}

type Curve = fn(&FiniteRow) -> (Option<f64>, Option<f64>, Option<f64>);

fn interpolated_curve(r: &FiniteRow) -> (Option<f64>, Option<f64>, Option<f64>) {
    (r.interp_lower, r.interp_upper, r.rate_interpolated)
}

fn baseline_curve(r: &FiniteRow) -> (Option<f64>, Option<f64>, Option<f64>) {
    (r.baseline_lower, r.baseline_upper, r.rate_uninterpolated)
}

fn finite_bound_shape() -> Outcome {
    let settings = FiniteSettings {
        f_target: 0.9,
        k_max: 40,
        epsilon: 1e-7,
        mode: BoundMode::Global,
        method: FiniteMethod::Iterative,
        state_cap: purify_core::finite::DEFAULT_STATE_CAP,
    };
    let inputs: Vec<SweepInput> = (0..8)
        .map(|s| SweepInput::werner(0.55 + 0.05 * s as f64).unwrap())
        .collect();
    let n_grid: Vec<usize> = (5..=12).map(|e| 1usize << e).collect();
    let rows = finite_sweep(&inputs, &n_grid, &settings).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    for (panel, chunk) in rows.chunks(n_grid.len()).enumerate() {
        let f0 = inputs[panel].fidelity();
        let curves: [(&str, Curve); 2] = [("interpolated", interpolated_curve), ("uninterpolated", baseline_curve)];
        for (name, get) in curves {
            let vals: Vec<(f64, f64, f64)> = chunk
                .iter()
                .map(|r| {
                    let (l, u, a) = get(r);
                    (l.unwrap_or(f64::NAN), u.unwrap_or(f64::NAN), a.unwrap_or(f64::NAN))
                })
                .collect();
            for (r, &(l, u, _)) in chunk.iter().zip(&vals) {
                if !(l <= u) {
                    problems.push(format!("F0={f0:.2} {name} N={}: lower {l} > upper {u}", r.n));
                }
            }
            for w in chunk.iter().zip(&vals).collect::<Vec<_>>().windows(2) {
                let ((r0, v0), (r1, v1)) = (w[0], w[1]);
                if v1.0 < v0.0 {
                    problems.push(format!(
                        "F0={f0:.2} {name}: lower/N falls {} -> {} from N={} to N={}",
                        v0.0, v1.0, r0.n, r1.n
                    ));
                }
                if v1.1 > v0.1 {
                    problems.push(format!(
                        "F0={f0:.2} {name}: upper/N rises {} -> {} from N={} to N={}",
                        v0.1, v1.1, r0.n, r1.n
                    ));
                }
            }
            let &(l, u, a) = vals.last().unwrap();
            if f0 >= 0.7 - 1e-12 {
                for (which, v) in [("lower", l), ("upper", u)] {
                    let rel = (a - v).abs() / a;
                    if !(rel <= 0.15) {
                        problems.push(format!(
                            "F0={f0:.2} {name}: {which}/N = {v} at N={} is {:.1}% from the asymptotic rate {a}",
                            n_grid[n_grid.len() - 1],
                            100.0 * rel
                        ));
                    }
                }
            }
        }
    }
    for p in &problems {
        println!("      {p}");
    }
    ensure(problems.is_empty(), || format!("{} shape violations", problems.len()))
}

fn cutoff_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let f0 = rng.random_range(0.55..0.95);
        let ladder: IterationLadder = build_ladder(&BellDiagonal::werner(f0).unwrap(), 30, true).unwrap();
        let points = ladder_points(&ladder);
        let f_max = points[points.len() - 1].fidelity;
        let f_target = rng.random_range(f0..f_max.min(0.999_999));
        let reach = points.iter().position(|p| p.fidelity >= f_target).unwrap();
        let head = &points[..=reach];
        let best_head = max_rate_at_fidelity(&pareto_prune(head).unwrap(), f_target).unwrap().achieved_rate;
        let r_achieved = best_head * rng.random_range(0.5..=1.0);
        let k = protocol_cutoff(head, f_target, r_achieved, points[reach + 1..].iter().copied())
            .map_err(|e| format!("case {case}: {e}"))?;
        let cut = max_rate_at_fidelity(&pareto_prune(&points[..k]).unwrap(), f_target)
            .map_err(|e| format!("case {case}: cutoff {k}: {e}"))?;
        let all = max_rate_at_fidelity(&pareto_prune(&points).unwrap(), f_target).unwrap();
        ensure(all.achieved_rate <= cut.achieved_rate + 1e-12, || {
            format!(
                "case {case}: F0={f0} F_t={f_target} cutoff {k} gives {} but all {} levels give {}",
                cut.achieved_rate,
                points.len(),
                all.achieved_rate
            )
        })?;
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("dejmps step correctness", Duration::from_secs(1), dejmps_step_correctness),
        ("ladder moments", Duration::from_secs(1), ladder_moments),
        ("distribution recurrences", Duration::from_secs(10), distribution_recurrences),
        ("markov vs iterative agreement", Duration::from_secs(60), cross_method_agreement),
        ("monte carlo concordance", Duration::from_secs(300), monte_carlo_concordance),
        ("optimizer identities", Duration::from_secs(30), optimizer_identities),
        ("asymptotic rate ordering", Duration::from_secs(10), rate_ordering),
        ("finite bound shape", Duration::from_secs(600), finite_bound_shape),
        ("omega cutoff soundness", Duration::from_secs(10), cutoff_soundness),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            ensure(elapsed <= budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
        });
        match outcome {
            Ok(()) => println!("PASS  {name}  ({elapsed:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}  ({elapsed:.2?}): {msg}");
            }
        }
    }
    println!("{} of 9 acceptance criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
