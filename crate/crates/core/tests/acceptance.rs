use std::process::ExitCode;
use std::time::{Duration, Instant};

use compound_fsc::capacity::{compute_cn, compute_cn_nofeedback, ge_feedback_gap, SolverConfig};
use compound_fsc::causal::{digits, CausalConditioning, ChannelTable, InitialState, JointTable};
use compound_fsc::channel::{bsc, CompoundFamily, FeedbackMap, FscSpec};
use compound_fsc::codetree::Codebook;
use compound_fsc::decoder::{build_ranking, distinct_trees, merge_rankings, ml_decode, universal_decode, Ranking};
use compound_fsc::directed::{
    directed_info_functional, directed_info_steps, kim_from_joint, zero_capacity_witness,
};
use compound_fsc::presets::{bsc_pair, ge_gap_family, zero_capacity_family};
use compound_fsc::sim::{
    empirical_violation_rate, exact_error_probability, example1_demo, run_trials, trial_rng, two_phase_scheme,
    Decoder, DecoderChoice, TrialConfig,
};
use compound_fsc::verify::{random_fsc, random_ge, random_simplex, run_suite};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn h(p: f64) -> f64 {
    let t = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
    t(p) + t(1.0 - p)
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// `P(y^n || x^n, s0)` summed over every state path.
fn path_sum(fsc: &FscSpec, x: &[usize], y: &[usize], s0: usize) -> f64 {
    let ns = fsc.n_states();
    let n = x.len();
    (0..ns.pow(n as u32))
        .map(|path| {
            let states = digits(path, ns, n);
            let mut prev = s0;
            let mut p = 1.0;
            for i in 0..n {
                p *= fsc.prob(prev, x[i], y[i], states[i]);
                prev = states[i];
            }
            p
        })
        .sum()
}

/// `Σ_i I(Y_i; X^i | Y^{i-1})` from a joint table indexed `[x_idx][y_idx]`, binary alphabets.
fn brute_directed_info(joint: &[f64], n: usize) -> f64 {
    let size = 1usize << n;
    let mut total = 0.0;
    for i in 1..=n {
        // Marginals on (x^i, y^i), (x^i, y^{i-1}), (y^i), (y^{i-1}).
        let mut xy_i = vec![0.0; 1 << (2 * i)];
        let mut xy_prev = vec![0.0; 1 << (2 * i - 1)];
        let mut y_i = vec![0.0; 1 << i];
        let mut y_prev = vec![0.0; 1 << (i - 1)];
        for xi in 0..size {
            for yi in 0..size {
                let p = joint[xi * size + yi];
                let xa = xi >> (n - i);
                let ya = yi >> (n - i);
                let yb = yi >> (n - i + 1);
                xy_i[(xa << i) | ya] += p;
                xy_prev[(xa << (i - 1)) | yb] += p;
                y_i[ya] += p;
                y_prev[yb] += p;
            }
        }
        total += entropy(&y_i) - entropy(&y_prev) - entropy(&xy_i) + entropy(&xy_prev);
    }
    total
}

fn identity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut dev = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 3;
        let ns = 1 + (i / 3) % 2;
        let fsc = random_fsc(ns, 2, 2, &mut rng);
        let fb = if i % 2 == 0 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let s0 = rng.gen_range(0..ns);
        let table = ChannelTable::new(&fsc, n, &InitialState::Fixed(s0)).map_err(|e| e.to_string())?;
        let jt = JointTable::new(&q, &table, &fb).map_err(|e| e.to_string())?;
        let functional = directed_info_functional(&jt, &table);
        let steps: f64 = directed_info_steps(&jt).iter().sum();
        let kim = kim_from_joint(&jt);
        let mut joint = vec![0.0; 1 << (2 * n)];
        for xi in 0..1usize << n {
            for yi in 0..1usize << n {
                let (x, y) = (digits(xi, 2, n), digits(yi, 2, n));
                let z: Vec<usize> = y[..n - 1].iter().map(|&v| fb.apply(v)).collect();
                joint[(xi << n) | yi] = q.input_prob(&x, &z).map_err(|e| e.to_string())? * path_sum(&fsc, &x, &y, s0);
            }
        }
        let oracle = brute_directed_info(&joint, n);
        for v in [steps, kim, oracle] {
            dev = dev.max((functional - v).abs());
        }
    }
    Ok((dev < 1e-10, format!("100 instances, max deviation {dev:.2e} nats")))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut fwd, mut chain, mut count) = (0.0f64, 0.0f64, 0);
    for ns in 1..=3 {
        for n in 1..=4 {
            for _ in 0..4 {
                let fsc = random_fsc(ns, 2, 2, &mut rng);
                let fb = FeedbackMap::identity(2);
                let q = CausalConditioning::random(n, 2, 2, &mut rng);
                for s0 in 0..ns {
                    let table = ChannelTable::new(&fsc, n, &InitialState::Fixed(s0)).map_err(|e| e.to_string())?;
                    let jt = JointTable::new(&q, &table, &fb).map_err(|e| e.to_string())?;
                    for xi in 0..1usize << n {
                        for yi in 0..1usize << n {
                            let (x, y) = (digits(xi, 2, n), digits(yi, 2, n));
                            let p = path_sum(&fsc, &x, &y, s0);
                            let rec = compound_fsc::causal::causal_channel_prob(&fsc, &x, &y, s0).map_err(|e| e.to_string())?;
                            fwd = fwd.max((rec - p).abs());
                            let qx = q.input_prob(&x, &y[..n - 1]).map_err(|e| e.to_string())?;
                            chain = chain.max((jt.get(xi, yi) - qx * p).abs());
                        }
                    }
                    count += 1;
                }
            }
        }
    }
    Ok((fwd <= 1e-12 && chain <= 1e-12, format!("{count} instances, forward {fwd:.2e}, chain rule {chain:.2e}")))
}

fn capacity_sanity() -> Outcome {
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for p in [0.05, 0.1, 0.2, 0.3, 0.45] {
        let fam = CompoundFamily::single(bsc(p).unwrap(), "bsc");
        let c = compute_cn(&fam, &FeedbackMap::identity(2), 1, &cfg).map_err(|e| e.to_string())?.c_n;
        worst = worst.max((c - (2f64.ln() - h(p))).abs());
    }
    let c = compute_cn(&bsc_pair(), &FeedbackMap::identity(2), 1, &cfg).map_err(|e| e.to_string())?.c_n;
    let pair = (c - (2f64.ln() - h(0.2))).abs();
    Ok((worst <= 1e-3 && pair <= 1e-3, format!("singletons max deviation {worst:.2e}, pair deviation {pair:.2e} nats")))
}

fn feedback_gap() -> Outcome {
    let fam = ge_gap_family();
    let cfg = SolverConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 1..=3usize {
        let g = ge_feedback_gap(&fam, n, &cfg).map_err(|e| e.to_string())?;
        // Under uniform inputs the output is uniform, so I = n ln 2 - H(noise^n | s0).
        let mut uniform = f64::INFINITY;
        for m in fam.members() {
            for s0 in 0..m.n_states() {
                let noise: Vec<f64> =
                    (0..1usize << n).map(|e| path_sum(m, &vec![0; n], &digits(e, 2, n), s0)).collect();
                uniform = uniform.min((n as f64 * 2f64.ln() - entropy(&noise)) / n as f64);
            }
        }
        ok &= g.gap <= 2e-3 && g.c_fb >= uniform - 1e-9 && g.c_nfb >= uniform - 1e-9;
        parts.push(format!("n={n} gap {:.1e} fb {:.6} nfb {:.6} uniform {:.6}", g.gap, g.c_fb, g.c_nfb, uniform));
    }
    Ok((ok, parts.join("; ")))
}

fn bound_suite() -> Outcome {
    let wanted = [
        ("continuity-lemma", "continuity bound"),
        ("state-gap", "gap within ln|S|"),
        ("exponents", "E0 lower bound"),
        ("exponents", "F super-additivity"),
        ("superadditivity", "normalized capacity"),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for suite in ["continuity-lemma", "state-gap", "exponents", "superadditivity"] {
        for c in run_suite(suite, 0).map_err(|e| e.to_string())? {
            if wanted.contains(&(c.suite.as_str(), c.name.as_str())) {
                ok &= c.pass && c.instances >= 100;
                parts.push(format!("{}: {} violations / {}", c.name, c.violations, c.instances));
            }
        }
    }
    Ok((ok && parts.len() == wanted.len(), parts.join("; ")))
}

/// Counts rank-bound violations without using the library's checker.
fn rank_violations(rankings: &[Ranking], merged: &Ranking) -> usize {
    let kk = rankings.len();
    let b = merged.len();
    let mut seen = vec![false; b];
    let mut bad = 0;
    for &a in merged.order() {
        if std::mem::replace(&mut seen[a], true) {
            bad += 1;
        }
    }
    for (k, r) in rankings.iter().enumerate() {
        for (pos, &a) in r.order().iter().enumerate() {
            let j = pos + 1;
            let m = merged.order().iter().position(|&t| t == a).unwrap() + 1;
            if m > (j - 1) * kk + k + 1 || m > kk * j {
                bad += 1;
            }
        }
    }
    bad
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for v in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..=p.len()).map(move |pos| {
                    let mut q = p.clone();
                    q.insert(pos, v);
                    q
                })
            })
            .collect();
    }
    out
}

fn merge_bounds() -> Outcome {
    let mut bad = 0;
    let mut combos = 0usize;
    for b in 1..=6 {
        let perms = permutations(b);
        let identity: Vec<usize> = (0..b).collect();
        for k in 1..=3usize {
            // The first ranking is fixed to the identity; merging commutes with relabeling.
            for idx in 0..perms.len().pow(k as u32 - 1) {
                let mut rs = vec![Ranking::from_order(identity.clone()).unwrap()];
                for d in digits(idx, perms.len(), k - 1) {
                    rs.push(Ranking::from_order(perms[d].clone()).unwrap());
                }
                let merged = merge_rankings(&rs).map_err(|e| e.to_string())?;
                bad += rank_violations(&rs, &merged);
                combos += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let fb = FeedbackMap::identity(2);
    let mut lik_instances = 0;
    for t in 0..300u64 {
        let n = 1 + (t % 3) as usize;
        let q = CausalConditioning::random(n, 2, 2, &mut rng);
        let cb = Codebook::generate(&q, 1, 2 + t % 5, t).map_err(|e| e.to_string())?;
        let (trees, _) = distinct_trees(&cb);
        let members: Vec<FscSpec> = (0..1 + t % 3).map(|_| random_fsc(2, 2, 2, &mut rng)).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let rs = members
            .iter()
            .map(|m| build_ranking(m, &trees, &y, &fb, &InitialState::uniform(2)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        bad += rank_violations(&rs, &merge_rankings(&rs).map_err(|e| e.to_string())?);
        lik_instances += 1;
    }
    let mut mismatch = 0;
    for t in 0..1000u64 {
        let n = 1 + (t % 3) as usize;
        let fsc = if t % 2 == 0 { random_ge(&mut rng) } else { random_fsc(2, 2, 2, &mut rng) };
        let fb = if t % 3 == 0 { FeedbackMap::none(2) } else { FeedbackMap::identity(2) };
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let cb = Codebook::generate(&q, 1, 2 + t % 4, 1000 + t).map_err(|e| e.to_string())?;
        let mut y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        y.shuffle(&mut rng);
        let prior = InitialState::uniform(2);
        let fam = CompoundFamily::single(fsc.clone(), "only");
        let a = ml_decode(&cb, &y, &fsc, &fb, &prior).map_err(|e| e.to_string())?;
        let b = universal_decode(&cb, &y, &fam, &fb, &prior).map_err(|e| e.to_string())?;
        mismatch += usize::from(a != b);
    }
    Ok((
        bad == 0 && mismatch == 0,
        format!(
            "{combos} ranking combinations and {lik_instances} likelihood rankings, {bad} violations; K=1 mismatches {mismatch}/1000"
        ),
    ))
}

fn example1() -> Outcome {
    let report = example1_demo(&[8], 100_000, 7).map_err(|e| e.to_string())?;
    let row = &report.rows[0];
    let exact = (1.0 - 2f64.powi(-8)).powi(8);
    let state_ok = (row.all_bad_empirical - exact).abs() <= 3.0 * row.all_bad_sigma && row.all_bad_empirical >= 0.5;
    let err_ok = row.error_empirical >= 0.25 - 3.0 * row.error_sigma;
    Ok((
        state_ok && err_ok && (row.all_bad_exact - exact).abs() < 1e-12,
        format!(
            "all-bad {:.5} vs {exact:.5} (sigma {:.1e}); error rate {:.4}",
            row.all_bad_empirical, row.all_bad_sigma, row.error_empirical
        ),
    ))
}

fn zero_capacity() -> Outcome {
    let fam = zero_capacity_family();
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    let mut witness = true;
    for n in 1..=3usize {
        let a = compute_cn(&fam, &FeedbackMap::identity(2), n, &cfg).map_err(|e| e.to_string())?.c_n;
        let b = compute_cn_nofeedback(&fam, n, &cfg).map_err(|e| e.to_string())?.c_n;
        worst = worst.max(a).max(b);
        let w = zero_capacity_witness(&fam.members()[0], &FeedbackMap::identity(2), n).map_err(|e| e.to_string())?;
        witness &= w.witness && w.output_independent;
        let m = &fam.members()[0];
        for yi in 0..1usize << n {
            let y = digits(yi, 2, n);
            let p0 = path_sum(m, &vec![0; n], &y, 0);
            witness &= (0..1usize << n).all(|xi| (path_sum(m, &digits(xi, 2, n), &y, 0) - p0).abs() < 1e-15);
        }
    }
    Ok((worst <= 1e-6 && witness, format!("max C_n {worst:.2e} nats for n <= 3, witness {witness}")))
}

fn estimation() -> Outcome {
    let fsc = bsc(0.3).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (m, eps)) in [(100usize, 0.3f64), (200, 0.2), (500, 0.15)].into_iter().enumerate() {
        let bound = (((m + 1) as f64).powi(2) * (-(m as f64) * eps * eps / 2.0).exp()).min(1.0);
        let (rate, _) = empirical_violation_rate(&fsc, 0, m, eps, 10_000, 90 + i as u64).map_err(|e| e.to_string())?;
        let sigma = (bound * (1.0 - bound) / 10_000.0).sqrt();
        ok &= rate <= bound + 3.0 * sigma;
        parts.push(format!("(m={m}, eps={eps}) {rate:.4} <= {bound:.3}"));
    }
    let fam = bsc_pair();
    for (label, p) in [("bsc0.1", 0.1), ("bsc0.2", 0.2)] {
        let mut total = 0.0;
        for t in 0..100 {
            let r = two_phase_scheme(&fam, label, 2000, 100_000, &mut trial_rng(5, t)).map_err(|e| e.to_string())?;
            total += r.achieved_rate;
        }
        let avg = total / 100.0;
        let target = (1.0 - 2000.0 / 100_000.0) * (2f64.ln() - h(p));
        ok &= (avg - target).abs() <= 0.01;
        parts.push(format!("{label} achieved {avg:.5} target {target:.5}"));
    }
    Ok((ok, parts.join("; ")))
}

fn monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let trials = 4000u64;
    let mut worst = 0.0f64;
    let mut ok = true;
    for i in 0..20u64 {
        let n = 2 + (i % 9) as usize;
        let fsc = match i % 3 {
            0 => random_ge(&mut rng),
            1 => random_fsc(2, 2, 2, &mut rng),
            _ => bsc(rng.gen_range(0.05..0.3)).unwrap(),
        };
        assert!(2usize.pow(n as u32) <= 4096);
        let fb = if i % 2 == 0 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let cb = Codebook::generate(&q, 1, 2 + i % 3, 300 + i).map_err(|e| e.to_string())?;
        let prior = InitialState::Prior(random_simplex(fsc.n_states(), &mut rng));
        let decoder = Decoder { choice: DecoderChoice::Ml(fsc.clone()), prior: InitialState::uniform(fsc.n_states()) };
        let exact = exact_error_probability(&cb, &fsc, &prior, &fb, &decoder).map_err(|e| e.to_string())?;
        let cfg = TrialConfig {
            family: CompoundFamily::single(fsc.clone(), "truth"),
            true_theta: "truth".into(),
            s0: prior,
            codebook: cb,
            feedback: fb,
            decoder,
            trials,
            seed: 400 + i,
        };
        let rate = run_trials(&cfg).map_err(|e| e.to_string())?.error_rate;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let diff = (rate - exact).abs();
        if sigma > 0.0 {
            worst = worst.max(diff / sigma);
            ok &= diff <= 3.0 * sigma;
        } else {
            ok &= diff == 0.0;
        }
    }
    Ok((ok, format!("20 instances, max |empirical - exact| = {worst:.2} sigma")))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("1 directed information identities", 10, identity_suite),
        ("2 forward recursion and chain rule oracles", 60, oracle_equivalence),
        ("3 capacity sanity", 60, capacity_sanity),
        ("4 feedback gap on a Gilbert-Elliot family", 300, feedback_gap),
        ("5 exact bound sweeps", 600, bound_suite),
        ("6 merge rank bounds", 600, merge_bounds),
        ("7 Example-1 bad-state dwell", 60, example1),
        ("8 zero capacity", 120, zero_capacity),
        ("9 estimation", 600, estimation),
        ("10 Monte Carlo vs exact", 600, monte_carlo),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && elapsed <= Duration::from_secs(limit), d),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("[{}] {name}: {detail} ({:.2} s, limit {limit} s)", if pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
