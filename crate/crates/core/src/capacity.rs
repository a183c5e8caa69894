//! Finite-horizon compound capacity: `max_Q min_{s0, θ} (1/n) I(X^n -> Y^n | s0, θ)`.
//!
//! The program is solved by projected supergradient ascent on the
//! per-history conditionals of the input policy. Every evaluation is exact:
//! the channel tables `P(y^n || x^n)` are precomputed once per law.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::{feedback_paths, CausalConditioning, ChannelTable, InitialState};
use crate::channel::{
    make_memoryless, stationary_distribution, uniform_ergodicity_horizon, CompoundFamily, FeedbackMap, FscSpec,
};
use crate::error::{Error, Result, DEFAULT_TABLE_CAP};
use crate::math::{compensated_sum, mutual_information, project_simplex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Step size at iteration `t` is `initial_step / t^decay`.
    pub initial_step: f64,
    pub decay: f64,
    /// The run stops once the best value has not improved by more than
    /// `tolerance` for `window` consecutive iterations.
    pub tolerance: f64,
    pub window: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Allowance for inexact maximization in solver-dependent inequalities.
    pub solver_slack: f64,
    pub ergodicity_eps: f64,
    pub ergodicity_max_n: usize,
    pub table_cap: u128,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 4000,
            initial_step: 0.5,
            decay: 0.5,
            tolerance: 1e-10,
            window: 300,
            restarts: 3,
            seed: 0,
            solver_slack: 1e-3,
            ergodicity_eps: 0.01,
            ergodicity_max_n: 100_000,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.initial_step > 0.0
            && self.decay > 0.0
            && self.tolerance > 0.0
            && self.window > 0
            && self.solver_slack > 0.0
            && self.ergodicity_eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("solver configuration values must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    /// `None` when the initial state is drawn from the member's stationary law.
    pub s0: Option<usize>,
    pub theta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub iterations: usize,
    pub final_step: f64,
    pub stationarity_norm: f64,
    pub converged: bool,
    /// Which start produced the reported policy: 0 is uniform, then warm starts, then random restarts.
    pub winning_start: usize,
    pub value_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub n: usize,
    #[serde(rename = "C_n_nats_per_symbol")]
    pub c_n: f64,
    #[serde(rename = "hatC_n")]
    pub hat_c_n: f64,
    pub feedback: bool,
    pub argmax_policy: CausalConditioning,
    pub worst_case: WorstCase,
    pub solver: SolverTrace,
}

/// One channel law `P(y^n || x^n)` entering the min.
#[derive(Debug, Clone)]
pub struct Law {
    pub table: ChannelTable,
    pub member: usize,
    pub s0: Option<usize>,
}

/// The concave objective `J(Q) = min_l (1/n) I(Q; P_l)`.
#[derive(Debug, Clone)]
pub struct Objective {
    n: usize,
    x_card: usize,
    z_card: usize,
    laws: Vec<Law>,
    zpaths: Vec<usize>,
}

impl Objective {
    pub fn new(laws: Vec<Law>, feedback: &FeedbackMap) -> Result<Self> {
        let first = laws.first().ok_or_else(|| Error::InvalidFamily("objective needs at least one law".into()))?;
        let (n, x_card, y_card) = (first.table.n(), first.table.x_card(), first.table.y_card());
        if laws.iter().any(|l| l.table.n() != n || l.table.x_card() != x_card || l.table.y_card() != y_card) {
            return Err(Error::InvalidFamily("laws disagree on horizon or alphabets".into()));
        }
        if feedback.y_card() != y_card {
            return Err(Error::AlphabetMismatch("feedback map does not match the output alphabet".into()));
        }
        Ok(Self { n, x_card, z_card: feedback.z_card(), laws, zpaths: feedback_paths(feedback, n) })
    }

    /// Every `(s0, θ)` pair, ordered by `s0` then member.
    pub fn compound(family: &CompoundFamily, feedback: &FeedbackMap, n: usize, cap: u128) -> Result<Self> {
        let mut laws = Vec::new();
        for s in 0..family.shape().n_states() {
            for (m, fsc) in family.members().iter().enumerate() {
                laws.push(Law { table: ChannelTable::with_cap(fsc, n, &InitialState::Fixed(s), cap)?, member: m, s0: Some(s) });
            }
        }
        Self::new(laws, feedback)
    }

    /// One law per member, initial state drawn from its stationary distribution.
    pub fn markovian(family: &CompoundFamily, feedback: &FeedbackMap, n: usize, cap: u128) -> Result<Self> {
        let mut laws = Vec::new();
        for (m, fsc) in family.members().iter().enumerate() {
            let pi = stationary_distribution(fsc)?;
            laws.push(Law { table: ChannelTable::with_cap(fsc, n, &InitialState::Prior(pi), cap)?, member: m, s0: None });
        }
        Self::new(laws, feedback)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn laws(&self) -> &[Law] {
        &self.laws
    }

    pub fn uniform_policy(&self) -> CausalConditioning {
        CausalConditioning::uniform(self.n, self.x_card, self.z_card)
    }

    fn zn1(&self) -> usize {
        self.z_card.pow(self.n as u32 - 1)
    }

    fn output_probs(&self, law: &Law, paths: &[f64]) -> Vec<f64> {
        let zn1 = self.zn1();
        let (xn, yn) = (law.table.x_count(), law.table.y_count());
        (0..yn)
            .map(|y| compensated_sum((0..xn).map(|x| paths[x * zn1 + self.zpaths[y]] * law.table.get(x, y))))
            .collect()
    }

    fn law_value(&self, law: &Law, paths: &[f64]) -> f64 {
        let zn1 = self.zn1();
        let out = self.output_probs(law, paths);
        let (xn, yn) = (law.table.x_count(), law.table.y_count());
        let terms = (0..xn).flat_map(|x| {
            let out = &out;
            (0..yn).filter_map(move |y| {
                let w = law.table.get(x, y);
                let p = paths[x * zn1 + self.zpaths[y]] * w;
                (p > 0.0).then(|| p * (w / out[y]).ln())
            })
        });
        compensated_sum(terms).max(0.0) / self.n as f64
    }

    /// `(1/n) I` for every law at `q`.
    pub fn law_values(&self, q: &CausalConditioning) -> Vec<f64> {
        let paths = q.path_probs();
        self.laws.iter().map(|l| self.law_value(l, &paths)).collect()
    }

    /// `J(q)` and the lexicographically-first active minimizer.
    pub fn evaluate(&self, q: &CausalConditioning) -> (f64, usize) {
        let vals = self.law_values(q);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let idx = vals.iter().position(|&v| v <= min + 1e-12).unwrap_or(0);
        (min, idx)
    }

    /// Supergradient of `(1/n) I(Q; P_law)` with respect to the stored conditionals.
    pub fn gradient(&self, q: &CausalConditioning, law: usize) -> Vec<f64> {
        let paths = q.path_probs();
        let law = &self.laws[law];
        let out = self.output_probs(law, &paths);
        let zn1 = self.zn1();
        let (xn, yn) = (law.table.x_count(), law.table.y_count());
        let inv_n = 1.0 / self.n as f64;
        let mut g = vec![0.0; xn * zn1];
        for x in 0..xn {
            for y in 0..yn {
                let w = law.table.get(x, y);
                if w > 0.0 {
                    g[x * zn1 + self.zpaths[y]] += w * (w.ln() - out[y].max(1e-300).ln() - 1.0) * inv_n;
                }
            }
        }
        let mut grad = vec![0.0; q.conditionals().len()];
        self.chain(q, &g, 1, 0, 0, 1.0, &mut grad);
        grad
    }

    /// Returns `Σ_a q(a|h) V(h, a)` and writes `prefix(h) V(h, a)` into `grad`.
    #[allow(clippy::too_many_arguments)]
    fn chain(&self, q: &CausalConditioning, g: &[f64], level: usize, xi: usize, zi: usize, prefix: f64, grad: &mut [f64]) -> f64 {
        let h = q.history_index(level, xi, zi);
        let row = q.row(level, xi, zi).to_vec();
        let mut total = 0.0;
        for (a, &qa) in row.iter().enumerate() {
            let xa = xi * self.x_card + a;
            let v = if level == self.n {
                g[xa * self.zn1() + zi]
            } else {
                (0..self.z_card).map(|z| self.chain(q, g, level + 1, xa, zi * self.z_card + z, prefix * qa, grad)).sum()
            };
            grad[h * self.x_card + a] = prefix * v;
            total += qa * v;
        }
        total
    }

    fn project(&self, conditionals: &mut [f64]) {
        for row in conditionals.chunks_mut(self.x_card) {
            let p = project_simplex(row);
            row.copy_from_slice(&p);
        }
    }

    /// `‖Π(q + g) - q‖₂` at the active minimizer.
    pub fn stationarity_norm(&self, q: &CausalConditioning) -> f64 {
        let (_, law) = self.evaluate(q);
        let g = self.gradient(q, law);
        let mut moved: Vec<f64> = q.conditionals().iter().zip(&g).map(|(a, b)| a + b).collect();
        self.project(&mut moved);
        moved.iter().zip(q.conditionals()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub policy: CausalConditioning,
    pub value: f64,
    pub law: usize,
    pub trace: SolverTrace,
}

fn run_from(obj: &Objective, start: CausalConditioning, cfg: &SolverConfig, start_index: usize) -> SolveOutcome {
    let mut q = start;
    let (v0, l0) = obj.evaluate(&q);
    let mut best = (q.clone(), v0, l0);
    let mut history = vec![v0];
    let mut last_improve = 0usize;
    let mut converged = false;
    let mut step = cfg.initial_step;
    let mut law = l0;
    let mut avg: Vec<f64> = vec![0.0; q.path_probs().len()];
    let mut avg_count = 0usize;
    let mut epoch_start = 1usize;
    let mut prev_avg: Option<Vec<f64>> = None;
    let mut iters = 0usize;

    for t in 1..=cfg.max_iters {
        iters = t;
        let g = obj.gradient(&q, law);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        step = cfg.initial_step / (t as f64).powf(cfg.decay);
        let scale = step / norm.max(1.0);
        for (c, d) in q.conditionals_mut().iter_mut().zip(&g) {
            *c += scale * d;
        }
        obj.project(q.conditionals_mut());

        let (v, l) = obj.evaluate(&q);
        law = l;
        history.push(v);
        if v > best.1 + cfg.tolerance {
            last_improve = t;
        }
        if v > best.1 {
            best = (q.clone(), v, l);
        }

        // average path probabilities over doubling epochs [2^k, 2^{k+1})
        if t == 2 * epoch_start {
            prev_avg = Some(avg.iter().map(|a| a / avg_count.max(1) as f64).collect());
            avg.iter_mut().for_each(|a| *a = 0.0);
            avg_count = 0;
            epoch_start = t;
        }
        for (a, p) in avg.iter_mut().zip(q.path_probs()) {
            *a += p;
        }
        avg_count += 1;

        if t - last_improve >= cfg.window {
            converged = true;
            break;
        }
    }

    let current_avg: Vec<f64> = avg.iter().map(|a| a / avg_count.max(1) as f64).collect();
    let averaged = match prev_avg {
        Some(p) if avg_count * 2 < epoch_start => p,
        _ => current_avg,
    };
    if let Ok(qa) = CausalConditioning::from_path_probs(q.horizon(), q.x_card(), q.z_card(), &averaged) {
        let (va, la) = obj.evaluate(&qa);
        if va > best.1 {
            best = (qa, va, la);
        }
    }

    let (policy, value, law) = best;
    let stationarity_norm = obj.stationarity_norm(&policy);
    SolveOutcome {
        policy,
        value,
        law,
        trace: SolverTrace {
            iterations: iters,
            final_step: step,
            stationarity_norm,
            converged,
            winning_start: start_index,
            value_history: history,
        },
    }
}

/// Runs the uniform start, the given warm starts and `cfg.restarts` random
/// starts, and keeps the best (earliest on ties).
pub fn solve_with_starts(obj: &Objective, cfg: &SolverConfig, warm: Vec<CausalConditioning>) -> Result<SolveOutcome> {
    cfg.validate()?;
    let mut starts = vec![obj.uniform_policy()];
    for w in warm {
        if w.horizon() != obj.n || w.x_card() != obj.x_card || w.z_card() != obj.z_card {
            return Err(Error::InvalidPolicy("warm start does not match the objective".into()));
        }
        starts.push(w);
    }
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64 + 1);
        starts.push(CausalConditioning::random(obj.n, obj.x_card, obj.z_card, &mut rng));
    }
    let outcomes: Vec<SolveOutcome> =
        starts.into_par_iter().enumerate().map(|(i, s)| run_from(obj, s, cfg, i)).collect();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = i;
        }
    }
    Ok(outcomes.into_iter().nth(best).expect("at least one start"))
}

pub fn solve(obj: &Objective, cfg: &SolverConfig) -> Result<SolveOutcome> {
    solve_with_starts(obj, cfg, Vec::new())
}

fn report(
    obj: &Objective,
    family: &CompoundFamily,
    feedback: bool,
    outcome: SolveOutcome,
) -> CapacityReport {
    let n = obj.n;
    let law = &obj.laws[outcome.law];
    let states = family.shape().n_states() as f64;
    CapacityReport {
        n,
        c_n: outcome.value,
        hat_c_n: outcome.value - states.ln() / n as f64,
        feedback,
        argmax_policy: outcome.policy,
        worst_case: WorstCase { s0: law.s0, theta: family.labels()[law.member].clone() },
        solver: outcome.trace,
    }
}

/// `C_n` without feedback (`|Z| = 1`).
pub fn compute_cn_nofeedback(family: &CompoundFamily, n: usize, cfg: &SolverConfig) -> Result<CapacityReport> {
    compute_cn_nofeedback_with_starts(family, n, cfg, Vec::new())
}

pub fn compute_cn_nofeedback_with_starts(
    family: &CompoundFamily,
    n: usize,
    cfg: &SolverConfig,
    warm: Vec<CausalConditioning>,
) -> Result<CapacityReport> {
    let fb = FeedbackMap::none(family.shape().n_outputs());
    let obj = Objective::compound(family, &fb, n, cfg.table_cap)?;
    let out = solve_with_starts(&obj, cfg, warm)?;
    Ok(report(&obj, family, false, out))
}

/// `C_n` with feedback through `feedback`. The no-feedback optimum, lifted,
/// is always among the starts.
pub fn compute_cn(family: &CompoundFamily, feedback: &FeedbackMap, n: usize, cfg: &SolverConfig) -> Result<CapacityReport> {
    compute_cn_with_starts(family, feedback, n, cfg, Vec::new())
}

pub fn compute_cn_with_starts(
    family: &CompoundFamily,
    feedback: &FeedbackMap,
    n: usize,
    cfg: &SolverConfig,
    mut warm: Vec<CausalConditioning>,
) -> Result<CapacityReport> {
    if feedback.z_card() == 1 {
        return compute_cn_nofeedback_with_starts(family, n, cfg, warm);
    }
    let obj = Objective::compound(family, feedback, n, cfg.table_cap)?;
    let nofb = compute_cn_nofeedback(family, n, cfg)?;
    warm.insert(0, nofb.argmax_policy.lift_feedback(feedback.z_card())?);
    let out = solve_with_starts(&obj, cfg, warm)?;
    Ok(report(&obj, family, true, out))
}

/// `C_n` over members only, the initial state drawn from each member's
/// stationary law. Requires a uniformly ergodic Markov-modulated family.
pub fn compute_cn_markovian(
    family: &CompoundFamily,
    feedback: &FeedbackMap,
    n: usize,
    cfg: &SolverConfig,
) -> Result<CapacityReport> {
    cfg.validate()?;
    if uniform_ergodicity_horizon(family, cfg.ergodicity_eps, cfg.ergodicity_max_n)?.is_none() {
        return Err(Error::NotUniformlyErgodic { eps: cfg.ergodicity_eps, max_n: cfg.ergodicity_max_n });
    }
    let mut warm = Vec::new();
    if feedback.z_card() > 1 {
        let nofb = Objective::markovian(family, &FeedbackMap::none(family.shape().n_outputs()), n, cfg.table_cap)?;
        warm.push(solve(&nofb, cfg)?.policy.lift_feedback(feedback.z_card())?);
    }
    let obj = Objective::markovian(family, feedback, n, cfg.table_cap)?;
    let out = solve_with_starts(&obj, cfg, warm)?;
    Ok(report(&obj, family, feedback.z_card() > 1, out))
}

/// `min_θ max_Q min_{s0} (1/n) I`, each inner max warm-started at `start`.
pub fn min_max_bound(
    family: &CompoundFamily,
    feedback: &FeedbackMap,
    n: usize,
    cfg: &SolverConfig,
    start: Option<&CausalConditioning>,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (member, label) in family.members().iter().zip(family.labels()) {
        let single = CompoundFamily::single(member.clone(), label);
        let obj = Objective::compound(&single, feedback, n, cfg.table_cap)?;
        let warm = start.into_iter().cloned().collect();
        best = best.min(solve_with_starts(&obj, cfg, warm)?.value);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperadditivityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `n Ĉ_n ≥ k Ĉ_k + m Ĉ_m` with `n = k + m`.
pub fn superadditivity_check(
    family: &CompoundFamily,
    feedback: &FeedbackMap,
    k: usize,
    m: usize,
    cfg: &SolverConfig,
) -> Result<SuperadditivityCheck> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidArgument("block lengths must be positive".into()));
    }
    let rk = compute_cn(family, feedback, k, cfg)?;
    let rm = compute_cn(family, feedback, m, cfg)?;
    let product = CausalConditioning::concat(&rk.argmax_policy, &rm.argmax_policy)?;
    let rn = compute_cn_with_starts(family, feedback, k + m, cfg, vec![product])?;
    let lhs = (k + m) as f64 * rn.hat_c_n;
    let rhs = k as f64 * rk.hat_c_n + m as f64 * rm.hat_c_n;
    Ok(SuperadditivityCheck { lhs, rhs, pass: lhs >= rhs - cfg.solver_slack })
}

/// `(J(λ q1 + (1-λ) q2), λ J(q1) + (1-λ) J(q2))`, the mixture taken in path space.
pub fn concavity_check(obj: &Objective, q1: &CausalConditioning, q2: &CausalConditioning, lambda: f64) -> Result<(f64, f64)> {
    let mix = CausalConditioning::mixture(q1, q2, lambda)?;
    let lhs = obj.evaluate(&mix).0;
    let rhs = lambda * obj.evaluate(q1).0 + (1.0 - lambda) * obj.evaluate(q2).0;
    Ok((lhs, rhs))
}

/// `max_{Q_X} I(Q_X; W)` by alternating maximization; stops when the upper
/// and lower capacity bounds are within `tol`.
pub fn blahut_arimoto(cond: &[Vec<f64>], tol: f64, max_iters: usize) -> (f64, Vec<f64>) {
    let nx = cond.len();
    let ny = cond.first().map_or(0, Vec::len);
    let mut q = vec![1.0 / nx as f64; nx];
    let mut lower = 0.0;
    for _ in 0..max_iters {
        let py: Vec<f64> = (0..ny).map(|y| compensated_sum((0..nx).map(|x| q[x] * cond[x][y]))).collect();
        let d: Vec<f64> = cond
            .iter()
            .map(|row| {
                compensated_sum(row.iter().zip(&py).filter(|(w, _)| **w > 0.0).map(|(w, p)| w * (w / p).ln()))
            })
            .collect();
        lower = compensated_sum(q.iter().zip(&d).map(|(a, b)| a * b));
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower <= tol {
            break;
        }
        let w: Vec<f64> = q.iter().zip(&d).map(|(a, b)| a * b.exp()).collect();
        let s: f64 = w.iter().sum();
        q = w.iter().map(|v| v / s).collect();
    }
    (mutual_information(&q, cond).max(lower), q)
}

/// `min_θ max_{Q_X} I(Q_X; P_θ)` for single-state members.
pub fn memoryless_compound_fb_capacity(family: &CompoundFamily) -> Result<f64> {
    let mut best = f64::INFINITY;
    for m in family.members() {
        let cond = m
            .memoryless_table()
            .ok_or_else(|| Error::InvalidFamily("every member must have a single state".into()))?;
        best = best.min(blahut_arimoto(&cond, 1e-10, 1_000_000).0);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGap {
    pub c_fb: f64,
    pub c_nfb: f64,
    pub gap: f64,
    pub uniform_value: f64,
    pub min_max: f64,
}

/// Feedback and no-feedback `C_n` on a Gilbert-Elliot family, with the
/// uniform-input value and the min-max upper bound.
pub fn ge_feedback_gap(family: &CompoundFamily, n: usize, cfg: &SolverConfig) -> Result<FeedbackGap> {
    let shape = family.shape();
    if shape.n_states() != 2 || shape.n_inputs() != 2 || shape.n_outputs() != 2 {
        return Err(Error::InvalidFamily("Gilbert-Elliot members are binary with two states".into()));
    }
    let fb = FeedbackMap::identity(2);
    let nfb = compute_cn_nofeedback(family, n, cfg)?;
    let with_fb = compute_cn(family, &fb, n, cfg)?;
    let obj = Objective::compound(family, &fb, n, cfg.table_cap)?;
    let uniform_value = obj.evaluate(&obj.uniform_policy()).0;
    let min_max = min_max_bound(family, &fb, n, cfg, Some(&with_fb.argmax_policy))?;
    Ok(FeedbackGap { c_fb: with_fb.c_n, c_nfb: nfb.c_n, gap: with_fb.c_n - nfb.c_n, uniform_value, min_max })
}

/// Single-member memoryless family from a conditional table.
pub fn memoryless_family(tables: &[Vec<Vec<f64>>]) -> Result<CompoundFamily> {
    let members = tables.iter().map(|t| make_memoryless(t)).collect::<Result<Vec<FscSpec>>>()?;
    CompoundFamily::unlabeled(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, make_gilbert_elliot, GilbertElliotParams};
    use crate::math::bsc_capacity;
    use std::f64::consts::LN_2;

    fn bsc_family(ps: &[f64]) -> CompoundFamily {
        CompoundFamily::unlabeled(ps.iter().map(|&p| bsc(p).unwrap()).collect()).unwrap()
    }

    #[test]
    fn single_bsc() {
        let r = compute_cn(&bsc_family(&[0.1]), &FeedbackMap::identity(2), 1, &SolverConfig::default()).unwrap();
        assert!((r.c_n - bsc_capacity(0.1)).abs() < 1e-6, "{}", r.c_n);
        assert!((r.hat_c_n - r.c_n).abs() < 1e-12);
    }

    #[test]
    fn bsc_pair_is_worst_member() {
        let r = compute_cn(&bsc_family(&[0.1, 0.2]), &FeedbackMap::identity(2), 1, &SolverConfig::default()).unwrap();
        assert!((r.c_n - bsc_capacity(0.2)).abs() < 1e-6);
        assert_eq!(r.worst_case.theta, "theta1");
    }

    #[test]
    fn useless_channel_is_zero() {
        let r = compute_cn(&bsc_family(&[0.5]), &FeedbackMap::identity(2), 2, &SolverConfig::default()).unwrap();
        assert!(r.c_n.abs() < 1e-6);
        assert!(r.solver.converged);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ch = make_gilbert_elliot(GilbertElliotParams::new(0.3, 0.4, 0.05, 0.3)).unwrap();
        let fam = CompoundFamily::single(ch, "ge");
        let fb = FeedbackMap::identity(2);
        let obj = Objective::compound(&fam, &fb, 2, DEFAULT_TABLE_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = CausalConditioning::random(2, 2, 2, &mut rng);
        let g = obj.gradient(&q, 0);
        let h = 1e-6;
        for i in 0..q.conditionals().len() {
            let mut up = q.clone();
            up.conditionals_mut()[i] += h;
            let mut dn = q.clone();
            dn.conditionals_mut()[i] -= h;
            // evaluate the multilinear extension off the simplex
            let fd = (obj.law_value(&obj.laws[0], &up.path_probs()) - obj.law_value(&obj.laws[0], &dn.path_probs())) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn blahut_arimoto_closed_forms() {
        let (c, _) = blahut_arimoto(&[vec![0.9, 0.1], vec![0.1, 0.9]], 1e-12, 100_000);
        assert!((c - bsc_capacity(0.1)).abs() < 1e-10);
        let id = memoryless_family(&[vec![vec![1.0, 0.0], vec![0.0, 1.0]]]).unwrap();
        assert!((memoryless_compound_fb_capacity(&id).unwrap() - LN_2).abs() < 1e-10);
        let fam = bsc_family(&[0.5, 0.05]);
        assert!(memoryless_compound_fb_capacity(&fam).unwrap().abs() < 1e-10);
        let ge = CompoundFamily::single(make_gilbert_elliot(GilbertElliotParams::new(0.5, 0.5, 0.1, 0.1)).unwrap(), "g");
        assert!(memoryless_compound_fb_capacity(&ge).is_err());
    }

    #[test]
    fn markovian_degenerate_ge() {
        let p = 0.11;
        let fam = CompoundFamily::single(make_gilbert_elliot(GilbertElliotParams::new(0.5, 0.5, p, p)).unwrap(), "g");
        let r = compute_cn_markovian(&fam, &FeedbackMap::identity(2), 1, &SolverConfig::default()).unwrap();
        assert!((r.c_n - bsc_capacity(p)).abs() < 1e-6);
        assert_eq!(r.worst_case.s0, None);
    }

    #[test]
    fn markovian_rejects_input_driven_states() {
        // state copies the input
        let mut kernel = vec![0.0; 2 * 2 * 2 * 2];
        for s in 0..2 {
            for x in 0..2 {
                kernel[((s * 2 + x) * 2 + x) * 2 + x] = 1.0;
            }
        }
        let ch = FscSpec::from_kernel(2, 2, 2, kernel).unwrap();
        let fam = CompoundFamily::single(ch, "copy");
        assert!(matches!(
            compute_cn_markovian(&fam, &FeedbackMap::identity(2), 1, &SolverConfig::default()),
            Err(Error::NotMarkovian)
        ));
    }

    #[test]
    fn report_serializes_with_named_fields() {
        let r = compute_cn(&bsc_family(&[0.2]), &FeedbackMap::identity(2), 1, &SolverConfig::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.get("C_n_nats_per_symbol").is_some());
        assert!(v.get("hatC_n").is_some());
        assert!(v["solver"]["value_history"].is_array());
    }
}
