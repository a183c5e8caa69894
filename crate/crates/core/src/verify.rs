//! Named self-check suites over the whole library. Every suite is seeded and
//! deterministic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::{
    blahut_arimoto, compute_cn, compute_cn_nofeedback, concavity_check, ge_feedback_gap, min_max_bound,
    superadditivity_check, Objective, SolverConfig,
};
use crate::causal::{causal_channel_prob, digits, ChannelTable, CausalConditioning, InitialState, JointTable};
use crate::channel::{
    bsc, make_gilbert_elliot, CompoundFamily, FeedbackMap, FscSpec, GilbertElliotParams,
};
use crate::codetree::Codebook;
use crate::decoder::{merge_bound_violations, merge_rankings, ml_decode, separability_check, universal_decode, Ranking};
use crate::directed::{
    continuity_bound_check, directed_info_functional, directed_info_steps, kim_from_joint, mutual_information_joint,
    product_superadditivity, state_gap_check, zero_capacity_witness,
};
use crate::error::{Error, Result};
use crate::math::{bernoulli_sigma, bsc_capacity};
use crate::presets::{bsc_pair, ge_gap_family, zero_capacity_family};
use crate::sim::{
    beta_branches_at_threshold, e0_bound_check, ensemble_error, example1_demo, exact_error_probability,
    f_superadditivity, gallager_e0, mismatch_loss, random_coding_bound, run_trials, sanov_pinsker_bound,
    empirical_violation_rate, two_phase_scheme, Decoder, DecoderChoice, TrialConfig,
};

pub const SUITE_NAMES: [&str; 15] = [
    "kim-identity",
    "causal-oracle",
    "capacity-sanity",
    "feedback-gap",
    "continuity-lemma",
    "state-gap",
    "superadditivity",
    "exponents",
    "merge-bounds",
    "separability",
    "example1",
    "zero-capacity",
    "sanov",
    "two-phase",
    "monte-carlo",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub pass: bool,
    pub instances: usize,
    pub violations: usize,
    /// Largest deviation, or smallest margin, in the check's own units.
    pub worst: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(suite: &str, name: &str, instances: usize, violations: usize, worst: f64, detail: String) -> Self {
        Self { suite: suite.into(), name: name.into(), pass: violations == 0, instances, violations, worst, detail }
    }
}

/// Runs one suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckResult>> {
    if name == "all" {
        let mut out = Vec::new();
        for s in SUITE_NAMES {
            out.extend(run_suite(s, seed)?);
        }
        return Ok(out);
    }
    match name {
        "kim-identity" => kim_identity(seed),
        "causal-oracle" => causal_oracle(seed),
        "capacity-sanity" => capacity_sanity(seed),
        "feedback-gap" => feedback_gap(seed),
        "continuity-lemma" => continuity_lemma(seed),
        "state-gap" => state_gap(seed),
        "superadditivity" => superadditivity(seed),
        "exponents" => exponents(seed),
        "merge-bounds" => merge_bounds(seed),
        "separability" => separability(),
        "example1" => example1(seed),
        "zero-capacity" => zero_capacity(seed),
        "sanov" => sanov(seed),
        "two-phase" => two_phase(seed),
        "monte-carlo" => monte_carlo(seed),
        other => Err(Error::InvalidArgument(format!("unknown suite {other}; known: all, {}", SUITE_NAMES.join(", ")))),
    }
}

fn suite_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(salt);
    rng
}

/// A point drawn from the flat Dirichlet on `len` outcomes.
pub fn random_simplex<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// A finite-state channel whose every `(s, x)` row over `(y, s')` is a flat Dirichlet draw.
pub fn random_fsc<R: Rng + ?Sized>(ns: usize, nx: usize, ny: usize, rng: &mut R) -> FscSpec {
    let mut kernel = Vec::with_capacity(ns * nx * ny * ns);
    for _ in 0..ns * nx {
        kernel.extend(random_simplex(ny * ns, rng));
    }
    FscSpec::from_kernel(ns, nx, ny, kernel).expect("valid kernel")
}

/// A channel whose state moves by a Markov chain independent of the input.
pub fn random_markov_modulated<R: Rng + ?Sized>(ns: usize, nx: usize, ny: usize, rng: &mut R) -> FscSpec {
    let trans: Vec<Vec<f64>> = (0..ns).map(|_| random_simplex(ns, rng)).collect();
    let mut kernel = Vec::with_capacity(ns * nx * ny * ns);
    for s in 0..ns {
        for _ in 0..nx {
            let w = random_simplex(ny, rng);
            for wy in &w {
                kernel.extend(trans[s].iter().map(|t| t * wy));
            }
        }
    }
    FscSpec::from_kernel(ns, nx, ny, kernel).expect("valid kernel")
}

/// A Gilbert-Elliot channel with transition probabilities in `[0.05, 0.95]`.
pub fn random_ge<R: Rng + ?Sized>(rng: &mut R) -> FscSpec {
    let g = rng.gen_range(0.05..0.95);
    let b = rng.gen_range(0.05..0.95);
    let pg = rng.gen_range(0.0..0.2);
    let pb = rng.gen_range(0.2..0.5);
    make_gilbert_elliot(GilbertElliotParams::new(g, b, pg, pb)).expect("valid parameters")
}

/// `P(y^n || x^n, s0)` by summing over every state path.
fn state_path_sum(fsc: &FscSpec, x: &[usize], y: &[usize], s0: usize) -> f64 {
    let n = x.len();
    let ns = fsc.n_states();
    let mut total = 0.0;
    for path in 0..ns.pow(n as u32) {
        let states = digits(path, ns, n);
        let mut p = 1.0;
        let mut prev = s0;
        for i in 0..n {
            p *= fsc.prob(prev, x[i], y[i], states[i]);
            prev = states[i];
        }
        total += p;
    }
    total
}

fn kim_identity(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "kim-identity";
    let mut rng = suite_rng(seed, 1);
    let (mut dev, mut range_bad, mut reduce_dev, mut reduce_count) = (0.0f64, 0, 0.0f64, 0);
    let count = 100;
    for i in 0..count {
        let n = 1 + i % 3;
        let ns = 1 + (i / 3) % 2;
        let fsc = random_fsc(ns, 2, 2, &mut rng);
        let fb = if i % 2 == 0 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let s0 = if i % 5 == 4 { InitialState::Prior(random_simplex(ns, &mut rng)) } else { InitialState::Fixed(rng.gen_range(0..ns)) };
        let table = ChannelTable::new(&fsc, n, &s0)?;
        let joint = JointTable::new(&q, &table, &fb)?;
        let f = directed_info_functional(&joint, &table);
        let st: f64 = directed_info_steps(&joint).iter().sum();
        let k = kim_from_joint(&joint);
        dev = dev.max((f - st).abs()).max((f - k).abs());
        if f < -1e-12 || f > n as f64 * 2f64.ln() + 1e-12 {
            range_bad += 1;
        }
        if fb.z_card() == 1 {
            reduce_dev = reduce_dev.max((f - mutual_information_joint(&joint)).abs());
            reduce_count += 1;
        }
    }
    Ok(vec![
        CheckResult::new(
            S,
            "three-way agreement",
            count,
            usize::from(dev >= 1e-10),
            dev,
            format!("max |functional - steps|, |functional - Kim| = {dev:.3e} nats (tolerance 1e-10)"),
        ),
        CheckResult::new(
            S,
            "no-feedback reduction",
            reduce_count,
            usize::from(reduce_dev >= 1e-10),
            reduce_dev,
            format!("max |I(X->Y) - I(X;Y)| without feedback = {reduce_dev:.3e} nats"),
        ),
        CheckResult::new(S, "range", count, range_bad, 0.0, format!("{range_bad} values outside [0, n ln|Y|]")),
    ])
}

fn causal_oracle(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "causal-oracle";
    let mut rng = suite_rng(seed, 2);
    let (mut dev, mut inst) = (0.0f64, 0);
    let (mut chain_dev, mut chain_inst) = (0.0f64, 0);
    for ns in 1..=3 {
        for n in 1..=4 {
            for _ in 0..3 {
                let fsc = random_fsc(ns, 2, 2, &mut rng);
                for s0 in 0..ns {
                    for xi in 0..1usize << n {
                        for yi in 0..1usize << n {
                            let (x, y) = (digits(xi, 2, n), digits(yi, 2, n));
                            let fwd = causal_channel_prob(&fsc, &x, &y, s0)?;
                            dev = dev.max((fwd - state_path_sum(&fsc, &x, &y, s0)).abs());
                        }
                    }
                    inst += 1;
                    let fb = FeedbackMap::identity(2);
                    let q = CausalConditioning::random(n, 2, 2, &mut rng);
                    let table = ChannelTable::new(&fsc, n, &InitialState::Fixed(s0))?;
                    let joint = JointTable::new(&q, &table, &fb)?;
                    for xi in 0..1usize << n {
                        for yi in 0..1usize << n {
                            let (x, y) = (digits(xi, 2, n), digits(yi, 2, n));
                            let qx = q.input_prob(&x, &y[..n - 1])?;
                            chain_dev = chain_dev.max((joint.get(xi, yi) - qx * state_path_sum(&fsc, &x, &y, s0)).abs());
                        }
                    }
                    chain_inst += 1;
                }
            }
        }
    }
    Ok(vec![
        CheckResult::new(S, "forward recursion", inst, usize::from(dev > 1e-12), dev, format!("max deviation from state-path sum {dev:.3e}")),
        CheckResult::new(S, "chain rule", chain_inst, usize::from(chain_dev > 1e-12), chain_dev, format!("max |P(x,y) - Q P| = {chain_dev:.3e}")),
    ])
}

fn capacity_sanity(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "capacity-sanity";
    let cfg = SolverConfig { seed, ..SolverConfig::default() };
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    let ps = [0.05, 0.1, 0.2, 0.3, 0.45];
    for &p in &ps {
        let fam = CompoundFamily::single(bsc(p)?, "bsc");
        let c = compute_cn(&fam, &FeedbackMap::identity(2), 1, &cfg)?.c_n;
        worst = worst.max((c - bsc_capacity(p)).abs());
    }
    let pair = compute_cn(&bsc_pair(), &FeedbackMap::identity(2), 1, &cfg)?.c_n;
    let pair_dev = (pair - bsc_capacity(0.2)).abs();
    worst = worst.max(pair_dev);
    let bad = ps.len() + 1;
    out.push(CheckResult::new(
        S,
        "binary symmetric closed form",
        bad,
        usize::from(worst > 1e-3),
        worst,
        format!("max |C_1 - (ln 2 - h(p))| = {worst:.3e} nats; pair deviation {pair_dev:.3e}"),
    ));

    // Grid oracle over binary inputs on random two-member memoryless families.
    let mut rng = suite_rng(seed, 3);
    let (mut grid_worst, mut grid_bad) = (0.0f64, 0);
    let grid_count = 10;
    for _ in 0..grid_count {
        let tables: Vec<Vec<Vec<f64>>> = (0..2).map(|_| (0..2).map(|_| random_simplex(2, &mut rng)).collect()).collect();
        let fam = crate::capacity::memoryless_family(&tables)?;
        let grid = (0..=1000)
            .map(|k| {
                let a = k as f64 / 1000.0;
                tables.iter().map(|t| crate::math::mutual_information(&[a, 1.0 - a], t)).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max);
        let c = compute_cn_nofeedback(&fam, 1, &cfg)?.c_n;
        let d = (c - grid).abs();
        grid_worst = grid_worst.max(d);
        grid_bad += usize::from(d > 2e-3);
    }
    out.push(CheckResult::new(S, "grid oracle", grid_count, grid_bad, grid_worst, format!("max |solver - grid| = {grid_worst:.3e} nats")));

    let (mut ba_worst, mut ba_bad) = (0.0f64, 0);
    for _ in 0..grid_count {
        let t: Vec<Vec<f64>> = (0..3).map(|_| random_simplex(3, &mut rng)).collect();
        let fam = crate::capacity::memoryless_family(&[t.clone()])?;
        let (ba, _) = blahut_arimoto(&t, 1e-12, 1_000_000);
        let c = compute_cn_nofeedback(&fam, 1, &cfg)?.c_n;
        let d = (c - ba).abs();
        ba_worst = ba_worst.max(d);
        ba_bad += usize::from(d > 1e-4);
    }
    out.push(CheckResult::new(S, "Blahut-Arimoto", grid_count, ba_bad, ba_worst, format!("max |solver - BA| = {ba_worst:.3e} nats")));

    let (mut cc_bad, mut cc_margin) = (0, f64::INFINITY);
    for i in 0..100 {
        let n = 1 + i % 2;
        let fam = CompoundFamily::unlabeled(vec![random_fsc(2, 2, 2, &mut rng), random_fsc(2, 2, 2, &mut rng)])?;
        let fb = FeedbackMap::identity(2);
        let obj = Objective::compound(&fam, &fb, n, cfg.table_cap)?;
        let q1 = CausalConditioning::random(n, 2, 2, &mut rng);
        let q2 = CausalConditioning::random(n, 2, 2, &mut rng);
        let (lhs, rhs) = concavity_check(&obj, &q1, &q2, rng.gen())?;
        cc_margin = cc_margin.min(lhs - rhs);
        cc_bad += usize::from(lhs < rhs - 1e-12);
    }
    out.push(CheckResult::new(S, "concavity", 100, cc_bad, cc_margin, format!("min J(mix) - mix of J = {cc_margin:.3e}")));

    let (mut mm_bad, mut mono_bad, mut mm_margin) = (0, 0, f64::INFINITY);
    let fams = [bsc_pair(), ge_gap_family()];
    for fam in &fams {
        let fb = FeedbackMap::identity(2);
        for n in 1..=2 {
            let with = compute_cn(fam, &fb, n, &cfg)?;
            let without = compute_cn_nofeedback(fam, n, &cfg)?;
            let mm = min_max_bound(fam, &fb, n, &cfg, Some(&with.argmax_policy))?;
            mm_margin = mm_margin.min(mm - with.c_n);
            mm_bad += usize::from(with.c_n > mm + cfg.solver_slack);
            mono_bad += usize::from(with.c_n < without.c_n - 1e-12);
        }
    }
    out.push(CheckResult::new(S, "min-max dominance", 4, mm_bad, mm_margin, format!("min (min-max - C_n) = {mm_margin:.3e} nats")));
    out.push(CheckResult::new(S, "feedback monotonicity", 4, mono_bad, 0.0, format!("{mono_bad} cases with C_fb < C_nfb")));
    Ok(out)
}

fn feedback_gap(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "feedback-gap";
    let cfg = SolverConfig { seed, ..SolverConfig::default() };
    let fam = ge_gap_family();
    let (mut gap_bad, mut floor_bad, mut worst) = (0, 0, f64::NEG_INFINITY);
    let mut parts = Vec::new();
    for n in 1..=3 {
        let g = ge_feedback_gap(&fam, n, &cfg)?;
        worst = worst.max(g.gap);
        gap_bad += usize::from(g.gap > 2e-3);
        floor_bad += usize::from(g.c_fb < g.uniform_value - 1e-9 || g.c_nfb < g.uniform_value - 1e-9);
        parts.push(format!("n={n}: fb {:.6} nfb {:.6} uniform {:.6}", g.c_fb, g.c_nfb, g.uniform_value));
    }
    Ok(vec![
        CheckResult::new(S, "gap within slack", 3, gap_bad, worst, format!("max C_fb - C_nfb = {worst:.3e} nats; {}", parts.join("; "))),
        CheckResult::new(S, "uniform floor", 3, floor_bad, 0.0, format!("{floor_bad} solves below the uniform-input value")),
    ])
}

fn continuity_lemma(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "continuity-lemma";
    let mut rng = suite_rng(seed, 4);
    let (mut bad, mut margin) = (0, f64::INFINITY);
    let count = 100;
    for i in 0..count {
        let n = 1 + i % 2;
        let ns = 1 + i % 2;
        let fsc = random_fsc(ns, 2, 2, &mut rng);
        let fb = if i % 3 == 0 { FeedbackMap::none(2) } else { FeedbackMap::identity(2) };
        let q1 = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let r = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let mut t: f64 = rng.gen_range(0.0..0.2);
        let s0 = InitialState::Fixed(rng.gen_range(0..ns));
        let (lhs, rhs) = loop {
            let q2 = CausalConditioning::mixture(&r, &q1, t)?;
            if let Some(v) = continuity_bound_check(&q1, &q2, &fsc, &s0, &fb)? {
                break v;
            }
            t *= 0.5;
        };
        margin = margin.min(rhs - lhs);
        bad += usize::from(lhs > rhs + 1e-9);
    }
    Ok(vec![CheckResult::new(S, "continuity bound", count, bad, margin, format!("min (bound - |I1 - I2|) = {margin:.3e} nats"))])
}

fn state_gap(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "state-gap";
    let mut rng = suite_rng(seed, 5);
    let (mut bad, mut ratio) = (0, 0.0f64);
    let count = 100;
    for i in 0..count {
        let n = 1 + i % 3;
        let ns = 2 + i % 2;
        let fsc = if i % 4 == 0 { random_ge(&mut rng) } else { random_fsc(ns, 2, 2, &mut rng) };
        let fb = if i % 2 == 0 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let prior = random_simplex(fsc.n_states(), &mut rng);
        let (gap, bound) = state_gap_check(&q, &fsc, &fb, &prior)?;
        ratio = ratio.max(gap / bound);
        bad += usize::from(gap > bound + 1e-9);
    }
    Ok(vec![CheckResult::new(S, "gap within ln|S|", count, bad, ratio, format!("max gap / ln|S| = {ratio:.3}"))])
}

fn superadditivity(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "superadditivity";
    let mut rng = suite_rng(seed, 6);
    let mut out = Vec::new();

    let (mut bad, mut margin) = (0, f64::INFINITY);
    for i in 0..100 {
        let fsc = if i % 2 == 0 { random_ge(&mut rng) } else { random_markov_modulated(2, 2, 2, &mut rng) };
        let fb = if i % 4 < 2 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let (k, m) = if i % 3 == 0 { (1, 1) } else { (1, 2) };
        let (k, m) = if i % 5 == 0 { (m, k) } else { (k, m) };
        let a = CausalConditioning::random(k, 2, fb.z_card(), &mut rng);
        let b = CausalConditioning::random(m, 2, fb.z_card(), &mut rng);
        let (whole, parts) = product_superadditivity(&fsc, &a, &b, &fb)?;
        margin = margin.min(whole - parts);
        bad += usize::from(whole < parts - 1e-9);
    }
    out.push(CheckResult::new(S, "directed information of product inputs", 100, bad, margin, format!("min I_n - I_k - I_m = {margin:.3e} nats")));

    let cfg = SolverConfig { seed, restarts: 1, max_iters: 1500, ..SolverConfig::default() };
    let instances: Vec<(CompoundFamily, usize, usize)> = (0..100)
        .map(|i| {
            let members = (0..1 + i % 2)
                .map(|j| if (i + j) % 3 == 0 { random_fsc(2, 2, 2, &mut rng) } else { random_ge(&mut rng) })
                .collect();
            let (k, m) = if i % 2 == 0 { (1, 1) } else { (1, 2) };
            (CompoundFamily::unlabeled(members).expect("non-empty"), k, m)
        })
        .collect();
    let results = instances
        .par_iter()
        .map(|(fam, k, m)| superadditivity_check(fam, &FeedbackMap::identity(2), *k, *m, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let bad = results.iter().filter(|c| !c.pass).count();
    let margin = results.iter().map(|c| c.lhs - c.rhs).fold(f64::INFINITY, f64::min);
    out.push(CheckResult::new(
        S,
        "normalized capacity",
        results.len(),
        bad,
        margin,
        format!("min n Ĉ_n - k Ĉ_k - m Ĉ_m = {margin:.3e} nats (slack {})", cfg.solver_slack),
    ));
    Ok(out)
}

fn exponents(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "exponents";
    let mut rng = suite_rng(seed, 7);
    let mut out = Vec::new();

    let (mut bad, mut literal_bad, mut margin) = (0, 0, f64::INFINITY);
    for i in 0..100 {
        let n = 1 + i % 3;
        let ns = 1 + i % 2;
        let fsc = random_fsc(ns, 2, 2, &mut rng);
        let fb = if i % 2 == 0 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let rho = rng.gen_range(0.0..1.0);
        let s0 = InitialState::Fixed(rng.gen_range(0..ns));
        let c = e0_bound_check(rho, &q, &fsc, &s0, &fb)?;
        margin = margin.min(c.e0 - c.bound);
        bad += usize::from(c.e0 < c.bound - 1e-12);
        literal_bad += usize::from(c.e0 < c.bound_single_letter - 1e-12);
    }
    out.push(CheckResult::new(
        S,
        "E0 lower bound",
        100,
        bad,
        margin,
        format!("min E0 - bound = {margin:.3e}; single-letter constant violated on {literal_bad} instances"),
    ));

    let (mut bad, mut margin) = (0, f64::INFINITY);
    for i in 0..100 {
        let fsc = if i % 2 == 0 { random_fsc(2, 2, 2, &mut rng) } else { random_ge(&mut rng) };
        let fb = if i % 4 < 2 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let (k, m) = if i % 3 == 0 { (1, 1) } else { (1, 2) };
        let a = CausalConditioning::random(k, 2, fb.z_card(), &mut rng);
        let b = CausalConditioning::random(m, 2, fb.z_card(), &mut rng);
        let rho = rng.gen_range(0.0..1.0);
        let (lhs, rhs) = f_superadditivity(rho, &a, &b, &fsc, &fb)?;
        margin = margin.min(lhs - rhs);
        bad += usize::from(lhs < rhs - 1e-9);
    }
    out.push(CheckResult::new(S, "F super-additivity", 100, bad, margin, format!("min F^n - mix = {margin:.3e}")));

    let mut bad = 0;
    for _ in 0..20 {
        let fsc = random_fsc(2, 2, 2, &mut rng);
        let fb = FeedbackMap::identity(2);
        let q = CausalConditioning::random(2, 2, 2, &mut rng);
        let vals = (0..=10)
            .map(|k| gallager_e0(k as f64 / 10.0, &q, &fsc, &InitialState::Fixed(0), &fb))
            .collect::<Result<Vec<_>>>()?;
        bad += usize::from(vals.windows(2).any(|w| w[1] < w[0] - 1e-12) || vals[0].abs() > 1e-12);
    }
    out.push(CheckResult::new(S, "E0 monotone in rho", 20, bad, 0.0, format!("{bad} instances not increasing from 0")));

    let mut worst_jump = 0.0f64;
    for m in 1..=50 {
        let (_, lo, hi) = beta_branches_at_threshold(m, 2);
        worst_jump = worst_jump.max((hi - lo).abs());
    }
    out.push(CheckResult::new(
        S,
        "beta continuity",
        50,
        usize::from(worst_jump > 1e-12),
        worst_jump,
        format!("max branch mismatch at the threshold {worst_jump:.3e}"),
    ));

    let mut bad = 0;
    let mut detail = Vec::new();
    let cases: Vec<(FscSpec, usize, FeedbackMap)> = vec![
        (bsc(0.1)?, 4, FeedbackMap::none(2)),
        (make_gilbert_elliot(GilbertElliotParams::new(0.3, 0.2, 0.02, 0.3))?, 3, FeedbackMap::identity(2)),
    ];
    for (fsc, n, fb) in cases {
        let q = CausalConditioning::uniform(n, 2, fb.z_card());
        let rate = (2f64).ln() / n as f64;
        let bound = (0..=10)
            .map(|k| random_coding_bound(k as f64 / 10.0, &q, &fsc, &fb, rate))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(1.0f64, f64::min);
        let (mean, se) = ensemble_error(&q, &fsc, &InitialState::Fixed(0), &fb, 2, 200, seed)?;
        bad += usize::from(mean > bound + 3.0 * se);
        detail.push(format!("n={n}: ensemble {mean:.4} ± {se:.4} vs bound {bound:.4}"));
    }
    out.push(CheckResult::new(S, "random-coding bound", 2, bad, 0.0, detail.join("; ")));
    Ok(out)
}

fn merge_bounds(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "merge-bounds";
    let mut out = Vec::new();

    // Merging commutes with relabeling trees, so the first ranking can be
    // fixed to the identity without losing any combination up to relabeling.
    let mut combos = 0usize;
    let mut bad = 0usize;
    for b in 1..=6usize {
        let perms = permutations(b);
        for k in 1..=3usize {
            let (c, v) = (0..perms.len().pow(k as u32 - 1))
                .into_par_iter()
                .map(|idx| {
                    let mut rankings = vec![Ranking::from_order((0..b).collect()).expect("permutation")];
                    for d in digits(idx, perms.len(), k - 1) {
                        rankings.push(Ranking::from_order(perms[d].clone()).expect("permutation"));
                    }
                    let merged = merge_rankings(&rankings).expect("same domain");
                    (1usize, merge_bound_violations(&rankings, &merged))
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            combos += c;
            bad += v;
        }
    }
    out.push(CheckResult::new(
        S,
        "exhaustive rank bounds",
        combos,
        bad,
        0.0,
        format!("all ranking combinations with |B| <= 6, K <= 3 up to relabeling; {bad} violations"),
    ));

    let mut rng = suite_rng(seed, 8);
    let mut bad = 0;
    let sampled = 20_000;
    for _ in 0..sampled {
        let rankings: Vec<Ranking> = (0..3)
            .map(|_| {
                let mut order: Vec<usize> = (0..8).collect();
                order.shuffle(&mut rng);
                Ranking::from_order(order).expect("permutation")
            })
            .collect();
        let merged = merge_rankings(&rankings)?;
        bad += merge_bound_violations(&rankings, &merged);
    }
    out.push(CheckResult::new(S, "sampled rank bounds", sampled, bad, 0.0, format!("random K=3, |B|=8; {bad} violations")));

    let mut mismatches = 0;
    let trials = 1000;
    for t in 0..trials {
        let n = 1 + t % 3;
        let fsc = if t % 2 == 0 { random_ge(&mut rng) } else { random_fsc(2, 2, 2, &mut rng) };
        let fb = if t % 4 < 2 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let m = 2 + t % 4;
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let cb = Codebook::generate(&q, 1, m as u64, seed.wrapping_add(t as u64))?;
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let prior = if t % 3 == 0 { InitialState::Fixed(1) } else { InitialState::uniform(2) };
        let fam = CompoundFamily::single(fsc.clone(), "only");
        mismatches += usize::from(ml_decode(&cb, &y, &fsc, &fb, &prior)? != universal_decode(&cb, &y, &fam, &fb, &prior)?);
    }
    out.push(CheckResult::new(S, "single-member equivalence", trials, mismatches, 0.0, format!("{mismatches} decisions differ from ML")));
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn separability() -> Result<Vec<CheckResult>> {
    const S: &str = "separability";
    let mu = 1.0 + 2f64.log2();
    let fam = CompoundFamily::new(vec![bsc(0.1)?, bsc(0.3)?], vec!["a".into(), "b".into()])?;
    let own = separability_check(&fam, &fam, 2, 0.0, mu)?;
    let near = separability_check(
        &CompoundFamily::single(bsc(0.3)?, "bsc0.3"),
        &CompoundFamily::single(bsc(0.3 + 1e-4)?, "near"),
        2,
        0.01,
        mu,
    )?;
    let far = separability_check(
        &CompoundFamily::single(bsc(0.3)?, "bsc0.3"),
        &CompoundFamily::single(bsc(0.45)?, "far"),
        2,
        0.001,
        mu,
    )?;
    Ok(vec![
        CheckResult::new(S, "family represents itself", 1, own.total_violations, 0.0, format!("{} violations", own.total_violations)),
        CheckResult::new(S, "close representative", 1, near.total_violations, 0.0, format!("{} violations", near.total_violations)),
        CheckResult::new(
            S,
            "distant representative detected",
            1,
            usize::from(far.total_violations == 0),
            far.total_violations as f64,
            format!("{} violations reported", far.total_violations),
        ),
    ])
}

fn example1(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "example1";
    let report = example1_demo(&[8], 100_000, seed)?;
    let row = &report.rows[0];
    let dev = (row.all_bad_empirical - row.all_bad_exact).abs();
    let state_bad = usize::from(dev > 3.0 * row.all_bad_sigma || row.all_bad_empirical < 0.5);
    let err_bad = usize::from(row.error_empirical < 0.25 - 3.0 * row.error_sigma);
    Ok(vec![
        CheckResult::new(
            S,
            "all-bad frequency",
            1,
            state_bad,
            dev,
            format!("n=8: empirical {:.5}, exact {:.5}, sigma {:.2e}", row.all_bad_empirical, row.all_bad_exact, row.all_bad_sigma),
        ),
        CheckResult::new(
            S,
            "two-message error floor",
            1,
            err_bad,
            row.error_empirical,
            format!("n=8: error rate {:.4} (sigma {:.2e})", row.error_empirical, row.error_sigma),
        ),
    ])
}

fn zero_capacity(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "zero-capacity";
    let cfg = SolverConfig { seed, ..SolverConfig::default() };
    let fam = zero_capacity_family();
    let (mut bad, mut worst) = (0, 0.0f64);
    for n in 1..=3 {
        let a = compute_cn(&fam, &FeedbackMap::identity(2), n, &cfg)?.c_n;
        let b = compute_cn_nofeedback(&fam, n, &cfg)?.c_n;
        worst = worst.max(a).max(b);
        bad += usize::from(a > 1e-6) + usize::from(b > 1e-6);
    }
    let mut bad_w = 0;
    for n in 1..=3 {
        let w = zero_capacity_witness(&fam.members()[0], &FeedbackMap::identity(2), n)?;
        bad_w += usize::from(!(w.witness && w.output_independent));
    }
    let live = zero_capacity_witness(&fam.members()[1], &FeedbackMap::identity(2), 2)?;
    Ok(vec![
        CheckResult::new(S, "capacity vanishes", 6, bad, worst, format!("max C_n over n <= 3 = {worst:.3e} nats")),
        CheckResult::new(S, "witness", 3, bad_w, 0.0, "BSC(0.5) output independent of input".into()),
        CheckResult::new(S, "no false witness", 1, usize::from(live.witness), live.uniform_value, "BSC(0.4) rejected".into()),
    ])
}

fn sanov(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "sanov";
    let fsc = bsc(0.3)?;
    let mut bad = 0;
    let mut parts = Vec::new();
    for (i, &(m, eps)) in [(100usize, 0.3f64), (200, 0.2), (500, 0.15)].iter().enumerate() {
        let bound = sanov_pinsker_bound(m, 2, eps);
        let (rate, _) = empirical_violation_rate(&fsc, 0, m, eps, 10_000, seed.wrapping_add(i as u64))?;
        let sigma = bernoulli_sigma(bound.min(1.0), 10_000);
        bad += usize::from(rate > bound.min(1.0) + 3.0 * sigma);
        parts.push(format!("(m={m}, eps={eps}): empirical {rate:.4} bound {bound:.3e}"));
    }
    Ok(vec![CheckResult::new(S, "estimation deviation", 3, bad, 0.0, parts.join("; "))])
}

fn two_phase(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "two-phase";
    let fam = bsc_pair();
    let (m_train, n_total, trials) = (2000usize, 100_000usize, 100u64);
    let mut bad = 0;
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for (i, label) in fam.labels().iter().enumerate() {
        let reports = (0..trials)
            .into_par_iter()
            .map(|t| two_phase_scheme(&fam, label, m_train, n_total, &mut crate::sim::trial_rng(seed.wrapping_add(i as u64), t)))
            .collect::<Result<Vec<_>>>()?;
        let avg = reports.iter().map(|r| r.achieved_rate).sum::<f64>() / trials as f64;
        let target = (1.0 - m_train as f64 / n_total as f64) * reports[0].true_capacity;
        let d = (avg - target).abs();
        worst = worst.max(d);
        bad += usize::from(d > 0.01);
        parts.push(format!("{label}: achieved {avg:.5} target {target:.5}"));
    }
    let mut rng = suite_rng(seed, 9);
    let (mut cbad, mut count) = (0, 0);
    for _ in 0..100 {
        let p1: Vec<Vec<f64>> = (0..2).map(|_| random_simplex(2, &mut rng)).collect();
        let p2: Vec<Vec<f64>> = p1
            .iter()
            .map(|row| {
                let d = rng.gen_range(-0.05..0.05f64).clamp(-row[0], row[1]);
                vec![row[0] + d, row[1] - d]
            })
            .collect();
        let (loss, delta, eta) = mismatch_loss(&p1, &p2);
        if delta <= 0.5 {
            count += 1;
            cbad += usize::from(loss > eta + 1e-9);
        }
    }
    Ok(vec![
        CheckResult::new(S, "achieved rate", fam.len(), bad, worst, parts.join("; ")),
        CheckResult::new(S, "mismatch continuity", count, cbad, 0.0, format!("{cbad} losses above eta(delta)")),
    ])
}

fn monte_carlo(seed: u64) -> Result<Vec<CheckResult>> {
    const S: &str = "monte-carlo";
    let mut rng = suite_rng(seed, 10);
    let trials = 4000u64;
    let (mut bad, mut worst) = (0, 0.0f64);
    let count = 20;
    let mut first_log = None;
    for i in 0..count {
        let n = 2 + i % 7;
        let fsc = match i % 3 {
            0 => random_ge(&mut rng),
            1 => random_fsc(2, 2, 2, &mut rng),
            _ => bsc(rng.gen_range(0.05..0.3))?,
        };
        let fb = if i % 2 == 0 { FeedbackMap::identity(2) } else { FeedbackMap::none(2) };
        let q = CausalConditioning::random(n, 2, fb.z_card(), &mut rng);
        let cb = Codebook::generate(&q, 1, 2 + (i % 3) as u64, seed.wrapping_add(i as u64))?;
        let s0 = InitialState::uniform(fsc.n_states());
        let family = CompoundFamily::single(fsc.clone(), "truth");
        let decoder = Decoder { choice: DecoderChoice::Ml(fsc.clone()), prior: s0.clone() };
        let exact = exact_error_probability(&cb, &fsc, &s0, &fb, &decoder)?;
        let cfg = TrialConfig {
            family,
            true_theta: "truth".into(),
            s0,
            codebook: cb,
            feedback: fb,
            decoder,
            trials,
            seed: seed.wrapping_add(i as u64),
        };
        let summary = run_trials(&cfg)?;
        let sigma = bernoulli_sigma(exact, trials);
        let diff = (summary.error_rate - exact).abs();
        let z = if sigma > 0.0 { diff / sigma } else if diff > 1e-12 { f64::INFINITY } else { 0.0 };
        worst = worst.max(z);
        bad += usize::from(z > 3.0);
        if i == 0 {
            let single = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .install(|| run_trials(&cfg))?;
            first_log = Some(single.log == summary.log);
        }
    }
    Ok(vec![
        CheckResult::new(S, "simulation vs exact", count, bad, worst, format!("max |empirical - exact| / sigma = {worst:.2}")),
        CheckResult::new(
            S,
            "thread-count determinism",
            1,
            usize::from(first_log != Some(true)),
            0.0,
            "one-thread run reproduces the trial log".into(),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_enumerate() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(run_suite("nope", 0).is_err());
    }

    #[test]
    fn random_channels_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fsc = random_markov_modulated(2, 2, 2, &mut rng);
        assert!(fsc.state_transition().is_ok());
        let _ = random_fsc(3, 2, 2, &mut rng);
    }

    #[test]
    fn quick_suites_pass() {
        for name in ["kim-identity", "separability", "state-gap"] {
            for c in run_suite(name, 0).unwrap() {
                assert!(c.pass, "{} / {}: {}", c.suite, c.name, c.detail);
            }
        }
    }
}
