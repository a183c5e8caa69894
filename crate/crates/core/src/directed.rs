//! Directed information `I(X^n -> Y^n)` and the identities around it.

use serde::{Deserialize, Serialize};

use crate::capacity::{compute_cn, SolverConfig};
use crate::causal::{feedback_paths, ChannelTable, CausalConditioning, InitialState, JointTable};
use crate::channel::{stationary_distribution, CompoundFamily, FeedbackMap, FscSpec};
use crate::error::{Error, Result};
use crate::math::{compensated_sum, entropy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedInfoResult {
    pub value_nats: f64,
    /// `I(Y_i; X^i | Y^{i-1})` for `i = 1..n`.
    pub per_step: Vec<f64>,
}

/// The functional `Σ P(x^n, y^n) ln [P(y^n || x^n) / P(y^n)]`.
pub fn directed_info_functional(joint: &JointTable, table: &ChannelTable) -> f64 {
    let yn = table.y_count();
    let out = joint.output();
    compensated_sum(joint.joint().iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, &p)| {
        let (x, y) = (i / yn, i % yn);
        p * (table.get(x, y) / out[y]).ln()
    }))
}

/// Per-step terms `H(Y^i) - H(Y^{i-1}) - H(X^i,Y^i) + H(X^i,Y^{i-1})`.
pub fn directed_info_steps(joint: &JointTable) -> Vec<f64> {
    let n = joint.n();
    let h = |a: usize, b: usize| entropy(&joint.marginal(a, b));
    (1..=n).map(|i| h(0, i) - h(0, i - 1) - h(i, i) + h(i, i - 1)).collect()
}

/// `Σ_i I(X_i; Y_i^n | X^{i-1}, Y^{i-1})`.
pub fn kim_from_joint(joint: &JointTable) -> f64 {
    let n = joint.n();
    let h = |a: usize, b: usize| entropy(&joint.marginal(a, b));
    compensated_sum((1..=n).map(|i| h(i, i - 1) - h(i - 1, i - 1) - h(i, n) + h(i - 1, n)))
}

/// `I(X^n; Y^n)` of the joint table.
pub fn mutual_information_joint(joint: &JointTable) -> f64 {
    let n = joint.n();
    entropy(&joint.marginal(n, 0)) + entropy(joint.output()) - entropy(joint.joint())
}

pub fn directed_information_table(
    q: &CausalConditioning,
    table: &ChannelTable,
    feedback: &FeedbackMap,
) -> Result<DirectedInfoResult> {
    let joint = JointTable::new(q, table, feedback)?;
    Ok(DirectedInfoResult { value_nats: directed_info_functional(&joint, table).max(0.0), per_step: directed_info_steps(&joint) })
}

pub fn directed_information(
    q: &CausalConditioning,
    fsc: &FscSpec,
    s0: &InitialState,
    feedback: &FeedbackMap,
) -> Result<DirectedInfoResult> {
    let table = ChannelTable::new(fsc, q.horizon(), s0)?;
    directed_information_table(q, &table, feedback)
}

pub fn directed_information_kim(
    q: &CausalConditioning,
    fsc: &FscSpec,
    s0: &InitialState,
    feedback: &FeedbackMap,
) -> Result<f64> {
    let table = ChannelTable::new(fsc, q.horizon(), s0)?;
    Ok(kim_from_joint(&JointTable::new(q, &table, feedback)?))
}

/// Gap between directed information with a random initial state and the
/// prior average of the state-conditioned values, with its bound `ln |S|`.
pub fn state_gap_check(
    q: &CausalConditioning,
    fsc: &FscSpec,
    feedback: &FeedbackMap,
    prior: &[f64],
) -> Result<(f64, f64)> {
    if prior.len() != fsc.n_states() || prior.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidArgument("state prior must be strictly positive".into()));
    }
    let mixed = directed_information(q, fsc, &InitialState::Prior(prior.to_vec()), feedback)?.value_nats;
    let mut avg = Vec::with_capacity(prior.len());
    for (s, &w) in prior.iter().enumerate() {
        avg.push(w * directed_information(q, fsc, &InitialState::Fixed(s), feedback)?.value_nats);
    }
    let gap = (mixed - compensated_sum(avg)).abs();
    let bound = (fsc.n_states() as f64).ln();
    Ok((gap, bound))
}

/// `Σ_{x^n, y^n} |Q1(x^n || z^{n-1}) - Q2(x^n || z^{n-1})|`, with `z = f(y)`.
pub fn policy_distance(q1: &CausalConditioning, q2: &CausalConditioning, feedback: &FeedbackMap) -> Result<f64> {
    if q1.horizon() != q2.horizon() || q1.x_card() != q2.x_card() || q1.z_card() != q2.z_card() {
        return Err(Error::InvalidPolicy("policies differ in shape".into()));
    }
    let n = q1.horizon();
    let (p1, p2) = (q1.path_probs(), q2.path_probs());
    let zn1 = q1.z_card().pow(n as u32 - 1);
    let zp = feedback_paths(feedback, n);
    let xn = q1.x_card().pow(n as u32);
    let (p1, p2) = (&p1, &p2);
    Ok(compensated_sum(
        (0..xn).flat_map(|x| zp.iter().map(move |&z| (p1[x * zn1 + z] - p2[x * zn1 + z]).abs())),
    ))
}

/// Continuity bound check: `None` when the policies are farther apart than
/// `1/2`, otherwise `(|I1 - I2|, -Δ ln(Δ / |Y|^{2n}))`.
pub fn continuity_bound_check(
    q1: &CausalConditioning,
    q2: &CausalConditioning,
    fsc: &FscSpec,
    s0: &InitialState,
    feedback: &FeedbackMap,
) -> Result<Option<(f64, f64)>> {
    let delta = policy_distance(q1, q2, feedback)?;
    if delta > 0.5 {
        return Ok(None);
    }
    let table = ChannelTable::new(fsc, q1.horizon(), s0)?;
    let i1 = directed_information_table(q1, &table, feedback)?.value_nats;
    let i2 = directed_information_table(q2, &table, feedback)?.value_nats;
    let rhs = if delta > 0.0 {
        let y2n = (fsc.n_outputs() as f64).ln() * 2.0 * q1.horizon() as f64;
        -delta * (delta.ln() - y2n)
    } else {
        0.0
    };
    Ok(Some(((i1 - i2).abs(), rhs)))
}

/// Directed-information split of a product policy on a Markov-modulated
/// channel started in its stationary law: `(I(X^n->Y^n), I_k + I_m)`.
pub fn product_superadditivity(
    fsc: &FscSpec,
    first: &CausalConditioning,
    second: &CausalConditioning,
    feedback: &FeedbackMap,
) -> Result<(f64, f64)> {
    let pi = InitialState::Prior(stationary_distribution(fsc)?);
    let joint = CausalConditioning::concat(first, second)?;
    let whole = directed_information(&joint, fsc, &pi, feedback)?.value_nats;
    let a = directed_information(first, fsc, &pi, feedback)?.value_nats;
    let b = directed_information(second, fsc, &pi, feedback)?.value_nats;
    Ok((whole, a + b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCapacityCheck {
    /// Directed information under the uniform input, minimized over `s0`.
    pub uniform_value: f64,
    /// Whether `P(y^n || x^n, s0) = P(y^n | s0)` for every `x^n` at the minimizing `s0`.
    pub output_independent: bool,
    /// Maximized `min_{s0} I / n`, computed only when the first two checks pass.
    pub max_value: Option<f64>,
    pub witness: bool,
}

pub fn zero_capacity_witness(fsc: &FscSpec, feedback: &FeedbackMap, n: usize) -> Result<ZeroCapacityCheck> {
    let q = CausalConditioning::uniform(n, fsc.n_inputs(), feedback.z_card());
    let mut best = (f64::INFINITY, 0usize);
    let mut tables = Vec::with_capacity(fsc.n_states());
    for s in 0..fsc.n_states() {
        let table = ChannelTable::new(fsc, n, &InitialState::Fixed(s))?;
        let v = directed_information_table(&q, &table, feedback)?.value_nats;
        if v < best.0 {
            best = (v, s);
        }
        tables.push(table);
    }
    let (uniform_value, s_min) = best;
    if uniform_value > 1e-10 {
        return Ok(ZeroCapacityCheck { uniform_value, output_independent: false, max_value: None, witness: false });
    }
    let table = &tables[s_min];
    let (xn, yn) = (table.x_count(), table.y_count());
    let output_independent = (0..yn).all(|y| {
        let p0 = table.get(0, y);
        (1..xn).all(|x| (table.get(x, y) - p0).abs() <= 1e-12)
    });
    if !output_independent {
        return Ok(ZeroCapacityCheck { uniform_value, output_independent, max_value: None, witness: false });
    }
    let family = CompoundFamily::single(fsc.clone(), "channel");
    let report = compute_cn(&family, feedback, n, &SolverConfig::default())?;
    let max_value = report.c_n;
    Ok(ZeroCapacityCheck { uniform_value, output_independent, max_value: Some(max_value), witness: max_value <= 1e-6 })
}
