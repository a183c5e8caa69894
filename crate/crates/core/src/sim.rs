//! Closed-loop simulation, exact error probabilities, random-coding
//! exponents and the training-then-coding scheme for memoryless families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{blahut_arimoto, memoryless_compound_fb_capacity};
use crate::causal::{digits, feedback_paths, CausalConditioning, ChannelTable, InitialState};
use crate::channel::{
    make_gilbert_elliot, nearest_member, CompoundFamily, FeedbackMap, FscSpec, GilbertElliotParams, STATE_BAD,
};
use crate::codetree::{Codebook, CodeTree, ConcatTree};
use crate::decoder::{ml_decode, universal_decode};
use crate::directed::directed_information_table;
use crate::error::{checked_pow, Error, Result, DEFAULT_TABLE_CAP};
use crate::math::{bernoulli_sigma, binary_entropy, compensated_sum, l1_distance, mutual_information, wilson_interval};

/// Per-trial random stream: seeded by `seed`, stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if w > 0.0 && u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Sends `tree` through `fsc` from state `s0`, feeding back `f(y)` after
/// each use. Returns the outputs and the states `s_1..s_n`.
pub fn transmit<R: Rng + ?Sized>(
    fsc: &FscSpec,
    tree: &ConcatTree,
    s0: usize,
    feedback: &FeedbackMap,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = tree.depth();
    let (ns, m) = (fsc.n_states(), tree.block_depth());
    let mut y = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut s = s0;
    let mut z_block = 0usize;
    for i in 0..n {
        let (block, level) = (i / m, i % m + 1);
        if level == 1 {
            z_block = 0;
        }
        let x = tree.blocks()[block].node(level, z_block);
        let k = sample_index(fsc.row(s, x), rng);
        let (yi, s_next) = (k / ns, k % ns);
        y.push(yi);
        states.push(s_next);
        z_block = z_block * feedback.z_card() + feedback.apply(yi);
        s = s_next;
    }
    Ok((y, states))
}

/// Which receiver to run.
#[derive(Debug, Clone)]
pub enum DecoderChoice {
    /// ML tuned to one channel.
    Ml(FscSpec),
    /// Merged rankings over a set of representatives.
    Universal(CompoundFamily),
}

#[derive(Debug, Clone)]
pub struct Decoder {
    pub choice: DecoderChoice,
    /// Initial-state law assumed by the receiver.
    pub prior: InitialState,
}

impl Decoder {
    pub fn decode(&self, cb: &Codebook, y: &[usize], feedback: &FeedbackMap) -> Result<usize> {
        match &self.choice {
            DecoderChoice::Ml(fsc) => ml_decode(cb, y, fsc, feedback, &self.prior),
            DecoderChoice::Universal(fam) => universal_decode(cb, y, fam, feedback, &self.prior),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub family: CompoundFamily,
    pub true_theta: String,
    pub s0: InitialState,
    pub codebook: Codebook,
    pub feedback: FeedbackMap,
    pub decoder: Decoder,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub s0: usize,
    pub message: usize,
    pub decoded: usize,
    pub error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub ci95: (f64, f64),
    pub log: Vec<TrialRecord>,
}

pub fn run_trials(cfg: &TrialConfig) -> Result<TrialSummary> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trial count must be positive".into()));
    }
    let fsc = cfg
        .family
        .get(&cfg.true_theta)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown channel label {}", cfg.true_theta)))?;
    let weights = cfg.s0.weights(fsc.n_states())?;
    let m_count = cfg.codebook.len();
    let log = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let message = rng.gen_range(0..m_count);
            let s0 = sample_index(&weights, &mut rng);
            let (y, _) = transmit(fsc, &cfg.codebook.trees[message], s0, &cfg.feedback, &mut rng)?;
            let decoded = cfg.decoder.decode(&cfg.codebook, &y, &cfg.feedback)?;
            Ok(TrialRecord { trial: t, s0, message, decoded, error: decoded != message })
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = log.iter().filter(|r| r.error).count() as u64;
    Ok(TrialSummary {
        trials: cfg.trials,
        errors,
        error_rate: errors as f64 / cfg.trials as f64,
        ci95: wilson_interval(errors, cfg.trials),
        log,
    })
}

/// Message-averaged error probability, summing over every `y^n`.
pub fn exact_error_probability(
    cb: &Codebook,
    fsc: &FscSpec,
    s0: &InitialState,
    feedback: &FeedbackMap,
    decoder: &Decoder,
) -> Result<f64> {
    let n = cb.depth();
    let ny = fsc.n_outputs();
    let yn = checked_pow(ny, n, "output sequences", DEFAULT_TABLE_CAP)?;
    let decisions = (0..yn)
        .into_par_iter()
        .map(|yi| decoder.decode(cb, &digits(yi, ny, n), feedback))
        .collect::<Result<Vec<_>>>()?;
    let mut per_message = Vec::with_capacity(cb.len());
    for (w, tree) in cb.trees.iter().enumerate() {
        let mut terms = Vec::new();
        for (yi, &d) in decisions.iter().enumerate() {
            if d != w {
                let y = digits(yi, ny, n);
                let z: Vec<usize> = y[..n - 1].iter().map(|&v| feedback.apply(v)).collect();
                let x = tree.path(&z)?;
                let p = crate::causal::causal_channel_log_prob(fsc, &x, &y, s0)?.exp();
                terms.push(p);
            }
        }
        per_message.push(compensated_sum(terms));
    }
    Ok(compensated_sum(per_message) / cb.len() as f64)
}

/// `ln(e |Y|^m) = 1 + m ln |Y|`.
fn log_e_ym(m: usize, y_card: usize) -> f64 {
    1.0 + m as f64 * (y_card as f64).ln()
}

/// The exponent `β(ε, m, |Y|)` of the known-channel achievability bound.
pub fn beta_exponent(eps: f64, m: usize, y_card: usize) -> Result<f64> {
    if !(eps > 0.0) || m == 0 || y_card == 0 {
        return Err(Error::InvalidArgument("need eps > 0, m >= 1, |Y| >= 1".into()));
    }
    let l2 = log_e_ym(m, y_card).powi(2);
    Ok(if eps < l2 / m as f64 { m as f64 * eps * eps / (2.0 * l2) } else { eps - l2 / (2.0 * m as f64) })
}

/// Both branches of `β` at the branch point `ε* = (ln(e|Y|^m))^2 / m`.
pub fn beta_branches_at_threshold(m: usize, y_card: usize) -> (f64, f64, f64) {
    let l2 = log_e_ym(m, y_card).powi(2);
    let eps = l2 / m as f64;
    (eps, m as f64 * eps * eps / (2.0 * l2), eps - l2 / (2.0 * m as f64))
}

/// `ρ = min(1, m ε / (ln(e|Y|^m))^2)`.
pub fn rho_choice(eps: f64, m: usize, y_card: usize) -> f64 {
    (m as f64 * eps / log_e_ym(m, y_card).powi(2)).min(1.0)
}

/// `E_0(ρ, Q, s0) = -(1/n) ln Σ_y [Σ_x Q(x || z(y)) P(y || x, s0)^{1/(1+ρ)}]^{1+ρ}`.
pub fn gallager_e0(
    rho: f64,
    q: &CausalConditioning,
    fsc: &FscSpec,
    s0: &InitialState,
    feedback: &FeedbackMap,
) -> Result<f64> {
    let table = ChannelTable::new(fsc, q.horizon(), s0)?;
    e0_from_table(rho, q, &table, feedback)
}

pub fn e0_from_table(rho: f64, q: &CausalConditioning, table: &ChannelTable, feedback: &FeedbackMap) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument("rho must lie in [0, 1]".into()));
    }
    let n = q.horizon();
    let paths = q.path_probs();
    let zp = feedback_paths(feedback, n);
    let zn1 = q.z_card().pow(n as u32 - 1);
    let (xn, yn) = (table.x_count(), table.y_count());
    let total = compensated_sum((0..yn).map(|y| {
        let inner = compensated_sum((0..xn).map(|x| paths[x * zn1 + zp[y]] * table.get(x, y).powf(1.0 / (1.0 + rho))));
        inner.powf(1.0 + rho)
    }));
    Ok(-total.ln() / n as f64)
}

/// `F^n(ρ, Q) = -ρ ln|S| / n + min_{s0} E_0(ρ, Q, s0)`.
pub fn f_n(rho: f64, q: &CausalConditioning, fsc: &FscSpec, feedback: &FeedbackMap) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s in 0..fsc.n_states() {
        best = best.min(gallager_e0(rho, q, fsc, &InitialState::Fixed(s), feedback)?);
    }
    Ok(best - rho * (fsc.n_states() as f64).ln() / q.horizon() as f64)
}

/// `|S| exp(-n (F^n - ρ R))`.
pub fn random_coding_bound(rho: f64, q: &CausalConditioning, fsc: &FscSpec, feedback: &FeedbackMap, rate: f64) -> Result<f64> {
    let f = f_n(rho, q, fsc, feedback)?;
    Ok(fsc.n_states() as f64 * (-(q.horizon() as f64) * (f - rho * rate)).exp())
}

/// Lower bound on `E_0` from `I(Q; P)`:
/// `(1/n) [ρ I - (ρ^2 / 2) (ln(e |Y|^n))^2]`.
pub fn e0_lower_bound(rho: f64, directed_info: f64, n: usize, y_card: usize) -> f64 {
    (rho * directed_info - 0.5 * rho * rho * log_e_ym(n, y_card).powi(2)) / n as f64
}

/// The same bound with the single-letter constant `(ln(e|Y|))^2`.
pub fn e0_lower_bound_single_letter(rho: f64, directed_info: f64, n: usize, y_card: usize) -> f64 {
    (rho * directed_info - 0.5 * rho * rho * log_e_ym(1, y_card).powi(2)) / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentCheck {
    pub rho: f64,
    pub e0: f64,
    pub bound: f64,
    pub bound_single_letter: f64,
}

/// `E_0` against its lower bounds at one instance.
pub fn e0_bound_check(rho: f64, q: &CausalConditioning, fsc: &FscSpec, s0: &InitialState, feedback: &FeedbackMap) -> Result<ExponentCheck> {
    let table = ChannelTable::new(fsc, q.horizon(), s0)?;
    let e0 = e0_from_table(rho, q, &table, feedback)?;
    let i = directed_information_table(q, &table, feedback)?.value_nats;
    let n = q.horizon();
    let ny = fsc.n_outputs();
    Ok(ExponentCheck { rho, e0, bound: e0_lower_bound(rho, i, n, ny), bound_single_letter: e0_lower_bound_single_letter(rho, i, n, ny) })
}

/// `(F^n(Q_k ⊗ Q_m), (k/n) F^k(Q_k) + (m/n) F^m(Q_m))`.
pub fn f_superadditivity(
    rho: f64,
    first: &CausalConditioning,
    second: &CausalConditioning,
    fsc: &FscSpec,
    feedback: &FeedbackMap,
) -> Result<(f64, f64)> {
    let (k, m) = (first.horizon() as f64, second.horizon() as f64);
    let joint = CausalConditioning::concat(first, second)?;
    let lhs = f_n(rho, &joint, fsc, feedback)?;
    let rhs = k / (k + m) * f_n(rho, first, fsc, feedback)? + m / (k + m) * f_n(rho, second, fsc, feedback)?;
    Ok((lhs, rhs))
}

/// Mean and standard error of the exact error probability over `codebooks`
/// independently sampled codebooks of one depth-`n` tree per message.
pub fn ensemble_error(
    q: &CausalConditioning,
    fsc: &FscSpec,
    s0: &InitialState,
    feedback: &FeedbackMap,
    m_count: u64,
    codebooks: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let decoder = Decoder { choice: DecoderChoice::Ml(fsc.clone()), prior: s0.clone() };
    let errs = (0..codebooks)
        .map(|c| {
            let cb = Codebook::generate(q, 1, m_count, seed.wrapping_add(c.wrapping_mul(0x9E37_79B9_7F4A_7C15)))?;
            exact_error_probability(&cb, fsc, s0, feedback, &decoder)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = errs.len() as f64;
    let mean = errs.iter().sum::<f64>() / k;
    let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    Ok((mean, (var / k).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Row {
    pub n: usize,
    pub theta: u32,
    /// `(1 - 2^-n)^n`.
    pub all_bad_exact: f64,
    pub all_bad_empirical: f64,
    pub all_bad_sigma: f64,
    pub error_empirical: f64,
    pub error_ci95: (f64, f64),
    pub error_sigma: f64,
    pub error_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Report {
    pub rows: Vec<Example1Row>,
    /// `1 - h_b(1/4)` in bits.
    pub fixed_theta_rate_bits: f64,
}

/// Two-message antipodal code over member `θ = n` of the Gilbert-Elliot
/// family with `g = b = 2^-θ`, `pG = 0`, `pB = 1/2`, started in the bad state.
pub fn example1_demo(n_values: &[usize], trials: u64, seed: u64) -> Result<Example1Report> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trial count must be positive".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if n == 0 || n > 62 {
            return Err(Error::InvalidArgument("block length must be in 1..=62".into()));
        }
        let theta = n as u32;
        let fsc = make_gilbert_elliot(GilbertElliotParams::example1(theta))?;
        let fb = FeedbackMap::identity(2);
        let word = |s: usize| ConcatTree::new(vec![CodeTree::new(1, 2, 2, vec![s]).unwrap(); n]);
        let cb = Codebook::new(vec![word(0)?, word(1)?])?;
        let decoder = Decoder { choice: DecoderChoice::Ml(fsc.clone()), prior: InitialState::Fixed(STATE_BAD) };
        let outcomes = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed ^ n as u64, t);
                let message = rng.gen_range(0..2usize);
                let (y, states) = transmit(&fsc, &cb.trees[message], STATE_BAD, &fb, &mut rng)?;
                let decoded = decoder.decode(&cb, &y, &fb)?;
                Ok((states.iter().all(|&s| s == STATE_BAD), decoded != message))
            })
            .collect::<Result<Vec<_>>>()?;
        let bad = outcomes.iter().filter(|o| o.0).count() as u64;
        let errors = outcomes.iter().filter(|o| o.1).count() as u64;
        let all_bad_empirical = bad as f64 / trials as f64;
        let error_empirical = errors as f64 / trials as f64;
        let error_exact = if n <= 16 {
            Some(exact_error_probability(&cb, &fsc, &InitialState::Fixed(STATE_BAD), &fb, &decoder)?)
        } else {
            None
        };
        rows.push(Example1Row {
            n,
            theta,
            all_bad_exact: (1.0 - 0.5f64.powi(n as i32)).powi(n as i32),
            all_bad_empirical,
            all_bad_sigma: bernoulli_sigma(all_bad_empirical, trials),
            error_empirical,
            error_ci95: wilson_interval(errors, trials),
            error_sigma: bernoulli_sigma(error_empirical, trials),
            error_exact,
        });
    }
    let fixed_theta_rate_bits = 1.0 - binary_entropy(0.25) / std::f64::consts::LN_2;
    Ok(Example1Report { rows, fixed_theta_rate_bits })
}

/// Sends `m_per_symbol` copies of each input and returns the empirical
/// conditional `P̂(y | x)`.
pub fn estimate_memoryless_channel<R: Rng + ?Sized>(fsc: &FscSpec, m_per_symbol: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let cond = fsc.memoryless_table().ok_or_else(|| Error::InvalidChannel("channel must have a single state".into()))?;
    if m_per_symbol == 0 {
        return Err(Error::InvalidArgument("need at least one training symbol per input".into()));
    }
    Ok(cond
        .iter()
        .map(|row| {
            let mut counts = vec![0usize; row.len()];
            for _ in 0..m_per_symbol {
                counts[sample_index(row, rng)] += 1;
            }
            counts.iter().map(|&c| c as f64 / m_per_symbol as f64).collect()
        })
        .collect())
}

/// `(m + 1)^{|Y|} exp(-m ε1^2 / 2)`.
pub fn sanov_pinsker_bound(m: usize, y_card: usize, eps1: f64) -> f64 {
    ((m + 1) as f64).powi(y_card as i32) * (-(m as f64) * eps1 * eps1 / 2.0).exp()
}

/// Frequency of `‖P̂_{Y|a} - P_{Y|a}‖₁ ≥ ε1` over `trials` estimates from
/// `m` channel uses with input `a`, and its standard error.
pub fn empirical_violation_rate(fsc: &FscSpec, input: usize, m: usize, eps1: f64, trials: u64, seed: u64) -> Result<(f64, f64)> {
    let cond = fsc.memoryless_table().ok_or_else(|| Error::InvalidChannel("channel must have a single state".into()))?;
    let row = cond.get(input).ok_or_else(|| Error::AlphabetMismatch("input symbol out of range".into()))?;
    if m == 0 || trials == 0 {
        return Err(Error::InvalidArgument("need m >= 1 and trials >= 1".into()));
    }
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut counts = vec![0usize; row.len()];
            for _ in 0..m {
                counts[sample_index(row, &mut rng)] += 1;
            }
            let d: f64 = counts.iter().zip(row).map(|(&c, &p)| (c as f64 / m as f64 - p).abs()).sum();
            u64::from(d >= eps1)
        })
        .sum();
    let rate = hits as f64 / trials as f64;
    Ok((rate, bernoulli_sigma(rate, trials)))
}

/// `τ(Δ) = -2Δ ln(Δ / |Y|)`, a bound on `|I(Q; P1) - I(Q; P2)|` when `‖P1 - P2‖₁ ≤ Δ ≤ 1/2`.
pub fn mi_continuity_tau(delta: f64, y_card: usize) -> f64 {
    if delta <= 0.0 {
        0.0
    } else {
        -2.0 * delta * (delta / y_card as f64).ln()
    }
}

/// Loss `I(Q1*; P1) - I(Q2*; P1)` from using the optimal input of `P2` on
/// `P1`, the distance `Δ` and the bound `η(Δ) = 2τ(Δ)`.
pub fn mismatch_loss(p1: &[Vec<f64>], p2: &[Vec<f64>]) -> (f64, f64, f64) {
    let (c1, _) = blahut_arimoto(p1, 1e-12, 1_000_000);
    let (_, q2) = blahut_arimoto(p2, 1e-12, 1_000_000);
    let loss = c1 - mutual_information(&q2, p1);
    let delta = l1_distance(p1, p2);
    (loss, delta, 2.0 * mi_continuity_tau(delta, p1[0].len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseReport {
    pub true_theta: String,
    pub estimated_theta: String,
    pub estimate: Vec<Vec<f64>>,
    pub estimate_l1_error: f64,
    pub input: Vec<f64>,
    /// `(1 - M/n) I(Q*; P_true)`.
    pub achieved_rate: f64,
    /// `max_Q I(Q; P_true)`.
    pub true_capacity: f64,
    /// `min_θ max_Q I(Q; P_θ)`.
    pub compound_capacity: f64,
}

/// Training phase of `m_train` symbols (split evenly across inputs), then
/// coding at the capacity-achieving input of the nearest family member.
pub fn two_phase_scheme<R: Rng + ?Sized>(
    family: &CompoundFamily,
    true_theta: &str,
    m_train: usize,
    n_total: usize,
    rng: &mut R,
) -> Result<TwoPhaseReport> {
    if !family.is_memoryless() {
        return Err(Error::InvalidFamily("training scheme needs single-state members".into()));
    }
    let truth = family.get(true_theta).ok_or_else(|| Error::InvalidArgument(format!("unknown channel label {true_theta}")))?;
    let nx = truth.n_inputs();
    if m_train < nx || m_train > n_total {
        return Err(Error::InvalidArgument("need |X| <= M <= n".into()));
    }
    let estimate = estimate_memoryless_channel(truth, m_train / nx, rng)?;
    let est_fsc = crate::channel::make_memoryless(&estimate)?;
    let k = nearest_member(family, &est_fsc);
    let chosen = family.members()[k].memoryless_table().expect("memoryless member");
    let true_table = truth.memoryless_table().expect("memoryless member");
    let (_, input) = blahut_arimoto(&chosen, 1e-12, 1_000_000);
    let (true_capacity, _) = blahut_arimoto(&true_table, 1e-12, 1_000_000);
    let achieved_rate = (1.0 - m_train as f64 / n_total as f64) * mutual_information(&input, &true_table);
    Ok(TwoPhaseReport {
        true_theta: true_theta.to_string(),
        estimated_theta: family.labels()[k].clone(),
        estimate_l1_error: l1_distance(&estimate, &true_table),
        estimate,
        input,
        achieved_rate,
        true_capacity,
        compound_capacity: memoryless_compound_fb_capacity(family)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, make_memoryless};

    fn antipodal(n: usize) -> Codebook {
        let word = |s: usize| ConcatTree::new(vec![CodeTree::new(1, 2, 2, vec![s]).unwrap(); n]).unwrap();
        Codebook::new(vec![word(0), word(1)]).unwrap()
    }

    #[test]
    fn single_bit_error_is_crossover() {
        let p = 0.23;
        let ch = bsc(p).unwrap();
        let dec = Decoder { choice: DecoderChoice::Ml(ch.clone()), prior: InitialState::Fixed(0) };
        let e = exact_error_probability(&antipodal(1), &ch, &InitialState::Fixed(0), &FeedbackMap::identity(2), &dec).unwrap();
        assert!((e - p).abs() < 1e-15);
    }

    #[test]
    fn noiseless_has_no_errors() {
        let id = make_memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let fam = CompoundFamily::single(id.clone(), "id");
        let cfg = TrialConfig {
            family: fam,
            true_theta: "id".into(),
            s0: InitialState::Fixed(0),
            codebook: antipodal(3),
            feedback: FeedbackMap::identity(2),
            decoder: Decoder { choice: DecoderChoice::Ml(id), prior: InitialState::Fixed(0) },
            trials: 200,
            seed: 1,
        };
        let r = run_trials(&cfg).unwrap();
        assert_eq!(r.errors, 0);
        assert_eq!(run_trials(&cfg).unwrap(), r);
    }

    #[test]
    fn beta_cases() {
        let l = 1.0 + 2f64.ln();
        assert!((beta_exponent(5.0, 1, 2).unwrap() - (5.0 - l * l / 2.0)).abs() < 1e-12);
        let small = beta_exponent(1e-6, 3, 2).unwrap();
        assert!(small > 0.0 && small < 1e-10);
        let (_, a, b) = beta_branches_at_threshold(4, 3);
        assert!((a - b).abs() < 1e-12);
        assert!(beta_exponent(0.0, 1, 2).is_err());
    }

    #[test]
    fn bsc_e0_closed_form() {
        let p: f64 = 0.1;
        let q = CausalConditioning::uniform(1, 2, 1);
        let e0 = gallager_e0(1.0, &q, &bsc(p).unwrap(), &InitialState::Fixed(0), &FeedbackMap::none(2)).unwrap();
        let expect = std::f64::consts::LN_2 - 2.0 * (p.sqrt() + (1.0 - p).sqrt()).ln();
        assert!((e0 - expect).abs() < 1e-12);
        let tiny = gallager_e0(1e-9, &q, &bsc(p).unwrap(), &InitialState::Fixed(0), &FeedbackMap::none(2)).unwrap();
        assert!(tiny.abs() < 1e-8);
    }

    #[test]
    fn sanov_value() {
        assert!((sanov_pinsker_bound(100, 2, 0.5) - 101f64.powi(2) * (-12.5f64).exp()).abs() < 1e-12);
        let (rate, _) = empirical_violation_rate(&bsc(0.3).unwrap(), 0, 50, 2.0, 100, 3).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn estimation_on_noiseless_and_single_sample() {
        let id = make_memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = trial_rng(0, 0);
        assert_eq!(estimate_memoryless_channel(&id, 1, &mut rng).unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let est = estimate_memoryless_channel(&bsc(0.4).unwrap(), 1, &mut rng).unwrap();
        assert!(est.iter().all(|r| r.iter().any(|&v| v == 1.0)));
    }

    #[test]
    fn example1_inequalities() {
        let r = example1_demo(&[1, 3], 2000, 5).unwrap();
        assert!((r.rows[0].all_bad_exact - 0.5).abs() < 1e-15);
        assert!((r.rows[1].all_bad_exact - (7.0f64 / 8.0).powi(3)).abs() < 1e-15);
        assert!(r.rows[1].all_bad_exact > 1.0 - 3.0 / 8.0);
        assert!((r.fixed_theta_rate_bits - 0.188_721_875_540_867).abs() < 1e-12);
        for row in &r.rows {
            assert!(row.error_exact.unwrap() >= 0.25);
        }
    }
}
