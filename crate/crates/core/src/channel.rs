//! Finite-state channels, compound families and feedback maps.
//!
//! A channel is a kernel `P(y, s' | x, s)` stored flat in `[s][x][y][s']`
//! order. Families are explicit finite lists of channels over identical
//! alphabets; continuum families are handled by truncation or by
//! [`quantize_family`].

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-9;

/// Finite-state channel kernel `P(y, s_next | x, s_prev)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FscSpec {
    states: Vec<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    kernel: Vec<f64>,
}

impl FscSpec {
    /// Builds a channel from a flat `[s_prev][x][y][s_next]` kernel and
    /// validates row-stochasticity.
    pub fn new(
        states: Vec<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
        kernel: Vec<f64>,
    ) -> Result<Self> {
        if states.is_empty() || inputs.is_empty() || outputs.is_empty() {
            return Err(Error::InvalidChannel("alphabets must be non-empty".into()));
        }
        let expected = states.len() * inputs.len() * outputs.len() * states.len();
        if kernel.len() != expected {
            return Err(Error::InvalidChannel(format!(
                "kernel has {} entries, expected {expected}",
                kernel.len()
            )));
        }
        let fsc = Self { states, inputs, outputs, kernel };
        fsc.validate()?;
        Ok(fsc)
    }

    /// Builds a channel with alphabets labelled `0..k`.
    pub fn from_kernel(n_states: usize, n_inputs: usize, n_outputs: usize, kernel: Vec<f64>) -> Result<Self> {
        Self::new(labels(n_states), labels(n_inputs), labels(n_outputs), kernel)
    }

    fn validate(&self) -> Result<()> {
        for s in 0..self.n_states() {
            for x in 0..self.n_inputs() {
                let row = self.row(s, x);
                if let Some(bad) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(Error::InvalidChannel(format!(
                        "kernel entry {bad} at (s={s}, x={x}) is not a probability"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOL {
                    return Err(Error::InvalidChannel(format!(
                        "row (s={s}, x={x}) sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// `P(y, s_next | x, s_prev)`.
    #[inline]
    pub fn prob(&self, s_prev: usize, x: usize, y: usize, s_next: usize) -> f64 {
        let (ns, ny) = (self.n_states(), self.n_outputs());
        self.kernel[((s_prev * self.n_inputs() + x) * ny + y) * ns + s_next]
    }

    /// The distribution over `(y, s_next)` for a given `(s_prev, x)`, in
    /// `y`-major order.
    pub fn row(&self, s_prev: usize, x: usize) -> &[f64] {
        let len = self.n_outputs() * self.n_states();
        let start = (s_prev * self.n_inputs() + x) * len;
        &self.kernel[start..start + len]
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// True when both channels have identical alphabet sizes.
    pub fn same_shape(&self, other: &FscSpec) -> bool {
        self.n_states() == other.n_states()
            && self.n_inputs() == other.n_inputs()
            && self.n_outputs() == other.n_outputs()
    }

    /// For a single-state channel, the conditional table `cond[x][y]`.
    pub fn memoryless_table(&self) -> Option<Vec<Vec<f64>>> {
        if self.n_states() != 1 {
            return None;
        }
        Some((0..self.n_inputs()).map(|x| self.row(0, x).to_vec()).collect())
    }

    /// Input-averaged state transition `Σ_y P(y, s'|x, s)` for a fixed `x`.
    pub fn state_transition_for_input(&self, x: usize) -> Vec<Vec<f64>> {
        let ns = self.n_states();
        (0..ns)
            .map(|s| {
                (0..ns)
                    .map(|s2| (0..self.n_outputs()).map(|y| self.prob(s, x, y, s2)).sum())
                    .collect()
            })
            .collect()
    }

    /// The state transition matrix, provided it does not depend on the input.
    pub fn state_transition(&self) -> Result<Vec<Vec<f64>>> {
        let base = self.state_transition_for_input(0);
        for x in 1..self.n_inputs() {
            let other = self.state_transition_for_input(x);
            for (ra, rb) in base.iter().zip(&other) {
                if ra.iter().zip(rb).any(|(a, b)| (a - b).abs() > 1e-9) {
                    return Err(Error::NotMarkovian);
                }
            }
        }
        Ok(base)
    }

    pub fn to_json(&self, label: Option<&str>) -> Value {
        let (ns, nx, ny) = (self.n_states(), self.n_inputs(), self.n_outputs());
        let kernel: Vec<Vec<Vec<Vec<f64>>>> = (0..ns)
            .map(|s| {
                (0..nx)
                    .map(|x| {
                        (0..ny)
                            .map(|y| (0..ns).map(|s2| self.prob(s, x, y, s2)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut obj = serde_json::json!({
            "states": self.states,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "kernel": kernel,
        });
        if let Some(l) = label {
            obj["label"] = Value::String(l.to_string());
        }
        obj
    }

    /// Parses the channel JSON object; returns the channel and its optional
    /// `"label"`.
    pub fn from_json(value: &Value) -> Result<(Self, Option<String>)> {
        let raw: ChannelJson = serde_json::from_value(value.clone())?;
        let states = symbols(&raw.states);
        let inputs = symbols(&raw.inputs);
        let outputs = symbols(&raw.outputs);
        let (ns, nx, ny) = (states.len(), inputs.len(), outputs.len());
        let shape_err = || Error::InvalidChannel(format!("kernel must be shaped [{ns}][{nx}][{ny}][{ns}]"));
        if raw.kernel.len() != ns {
            return Err(shape_err());
        }
        let mut flat = Vec::with_capacity(ns * nx * ny * ns);
        for per_x in &raw.kernel {
            if per_x.len() != nx {
                return Err(shape_err());
            }
            for per_y in per_x {
                if per_y.len() != ny {
                    return Err(shape_err());
                }
                for per_s in per_y {
                    if per_s.len() != ns {
                        return Err(shape_err());
                    }
                    flat.extend_from_slice(per_s);
                }
            }
        }
        Ok((Self::new(states, inputs, outputs, flat)?, raw.label))
    }
}

#[derive(Deserialize)]
struct ChannelJson {
    states: Vec<Value>,
    inputs: Vec<Value>,
    outputs: Vec<Value>,
    kernel: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    label: Option<String>,
}

fn symbols(values: &[Value]) -> Vec<String> {
    values
        .iter()
        .map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect()
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// A finite compound family Θ of channels over common alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundFamily {
    members: Vec<FscSpec>,
    labels: Vec<String>,
}

impl CompoundFamily {
    pub fn new(members: Vec<FscSpec>, labels: Vec<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidFamily("family must be non-empty".into()));
        }
        if members.len() != labels.len() {
            return Err(Error::InvalidFamily("one label per member required".into()));
        }
        let first = &members[0];
        if let Some(i) = members.iter().position(|m| !m.same_shape(first)) {
            return Err(Error::InvalidFamily(format!(
                "member {} ({}) does not share the family alphabets",
                i, labels[i]
            )));
        }
        Ok(Self { members, labels })
    }

    /// Family with labels `theta0, theta1, ...`.
    pub fn unlabeled(members: Vec<FscSpec>) -> Result<Self> {
        let labels = (0..members.len()).map(|i| format!("theta{i}")).collect();
        Self::new(members, labels)
    }

    pub fn single(member: FscSpec, label: &str) -> Self {
        Self { members: vec![member], labels: vec![label.to_string()] }
    }

    pub fn members(&self) -> &[FscSpec] {
        &self.members
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&FscSpec> {
        self.labels.iter().position(|l| l == label).map(|i| &self.members[i])
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Representative channel for alphabet sizes.
    pub fn shape(&self) -> &FscSpec {
        &self.members[0]
    }

    pub fn is_memoryless(&self) -> bool {
        self.members.iter().all(|m| m.n_states() == 1)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.members
                .iter()
                .zip(&self.labels)
                .map(|(m, l)| m.to_json(Some(l)))
                .collect(),
        )
    }

    /// Parses a family file: a JSON array of channel objects with `"label"`.
    pub fn from_json(value: &Value) -> Result<Self> {
        let arr = value
            .as_array()
            .ok_or_else(|| Error::InvalidFamily("family file must be a JSON array".into()))?;
        let mut members = Vec::with_capacity(arr.len());
        let mut labels = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            let (fsc, label) = FscSpec::from_json(item)?;
            members.push(fsc);
            labels.push(label.unwrap_or_else(|| format!("theta{i}")));
        }
        Self::new(members, labels)
    }
}

/// Deterministic time-invariant feedback `z = f(y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMap {
    z_card: usize,
    map: Vec<usize>,
}

impl FeedbackMap {
    pub fn new(z_card: usize, map: Vec<usize>) -> Result<Self> {
        if z_card == 0 || map.is_empty() {
            return Err(Error::InvalidArgument("feedback alphabets must be non-empty".into()));
        }
        if z_card > map.len() {
            return Err(Error::InvalidArgument(format!(
                "|Z|={z_card} exceeds |Y|={}",
                map.len()
            )));
        }
        if let Some(z) = map.iter().find(|&&z| z >= z_card) {
            return Err(Error::InvalidArgument(format!("feedback symbol {z} outside Z")));
        }
        Ok(Self { z_card, map })
    }

    /// Perfect output feedback, `z = y`.
    pub fn identity(y_card: usize) -> Self {
        Self { z_card: y_card, map: (0..y_card).collect() }
    }

    /// No feedback: a single feedback symbol.
    pub fn none(y_card: usize) -> Self {
        Self { z_card: 1, map: vec![0; y_card] }
    }

    pub fn z_card(&self) -> usize {
        self.z_card
    }

    pub fn y_card(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn apply(&self, y: usize) -> usize {
        self.map[y]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }
}

/// Parameters of a Gilbert-Elliot channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GilbertElliotParams {
    /// `P(G | B)`.
    pub g: f64,
    /// `P(B | G)`.
    pub b: f64,
    /// Crossover probability in the good state.
    pub p_good: f64,
    /// Crossover probability in the bad state.
    pub p_bad: f64,
}

impl GilbertElliotParams {
    pub fn new(g: f64, b: f64, p_good: f64, p_bad: f64) -> Self {
        Self { g, b, p_good, p_bad }
    }

    /// Member `theta` of the family with `g = b = 2^-theta`, `pG = 0`, `pB = 1/2`.
    pub fn example1(theta: u32) -> Self {
        let t = 0.5f64.powi(theta as i32);
        Self { g: t, b: t, p_good: 0.0, p_bad: 0.5 }
    }
}

/// `G` is state 0, `B` is state 1.
pub const STATE_GOOD: usize = 0;
pub const STATE_BAD: usize = 1;

/// Gilbert-Elliot channel: `P(s'|s) · BSC_{p(s)}(y|x)`, noise governed by
/// the previous state.
pub fn make_gilbert_elliot(params: GilbertElliotParams) -> Result<FscSpec> {
    let GilbertElliotParams { g, b, p_good, p_bad } = params;
    if [g, b, p_good, p_bad].iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidChannel(format!("Gilbert-Elliot parameters out of [0,1]: {params:?}")));
    }
    let trans = [[1.0 - b, b], [g, 1.0 - g]];
    let cross = [p_good, p_bad];
    let mut kernel = Vec::with_capacity(16);
    for s in 0..2 {
        for x in 0..2 {
            for y in 0..2 {
                let py = if x == y { 1.0 - cross[s] } else { cross[s] };
                for s2 in 0..2 {
                    kernel.push(trans[s][s2] * py);
                }
            }
        }
    }
    FscSpec::new(
        vec!["G".into(), "B".into()],
        labels(2),
        labels(2),
        kernel,
    )
}

/// Single-state channel from a conditional table `cond[x][y]`.
pub fn make_memoryless(cond: &[Vec<f64>]) -> Result<FscSpec> {
    if cond.is_empty() || cond[0].is_empty() {
        return Err(Error::InvalidChannel("empty conditional table".into()));
    }
    let ny = cond[0].len();
    if cond.iter().any(|r| r.len() != ny) {
        return Err(Error::InvalidChannel("ragged conditional table".into()));
    }
    let kernel = cond.iter().flatten().copied().collect();
    FscSpec::new(labels(1), labels(cond.len()), labels(ny), kernel)
}

/// Binary symmetric channel with crossover `p`.
pub fn bsc(p: f64) -> Result<FscSpec> {
    make_memoryless(&[vec![1.0 - p, p], vec![p, 1.0 - p]])
}

/// Snap each kernel entry to the nearest of `k_grid` uniform levels on
/// `[0, 1]`, then renormalize each `(s_prev, x)` row; an all-zero row
/// becomes uniform.
pub fn quantize_channel(fsc: &FscSpec, k_grid: usize) -> Result<FscSpec> {
    if k_grid < 2 {
        return Err(Error::InvalidArgument("K_grid must be at least 2".into()));
    }
    let step = (k_grid - 1) as f64;
    let row_len = fsc.n_outputs() * fsc.n_states();
    let mut kernel = Vec::with_capacity(fsc.kernel.len());
    for row in fsc.kernel.chunks(row_len) {
        let levels: Vec<f64> = row.iter().map(|p| (p * step).round()).collect();
        kernel.extend(normalize_levels(&levels));
    }
    FscSpec::new(fsc.states.clone(), fsc.inputs.clone(), fsc.outputs.clone(), kernel)
}

fn normalize_levels(levels: &[f64]) -> Vec<f64> {
    let total: f64 = levels.iter().sum();
    if total > 0.0 {
        levels.iter().map(|l| l / total).collect()
    } else {
        vec![1.0 / levels.len() as f64; levels.len()]
    }
}

/// Every kernel whose rows are renormalized grid vectors with `k_grid`
/// levels per entry. Members are the quantization cell representatives.
pub fn quantize_family(
    k_grid: usize,
    n_states: usize,
    n_inputs: usize,
    n_outputs: usize,
    member_cap: usize,
) -> Result<CompoundFamily> {
    if k_grid < 2 {
        return Err(Error::InvalidArgument("K_grid must be at least 2".into()));
    }
    let row_len = n_outputs * n_states;
    let grid_points = crate::error::checked_pow(k_grid, row_len, "grid row enumeration", member_cap as u128 * 64)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut digits = vec![0usize; row_len];
    for _ in 0..grid_points {
        let levels: Vec<f64> = digits.iter().map(|&d| d as f64).collect();
        let row = normalize_levels(&levels);
        if !rows.iter().any(|r| r.iter().zip(&row).all(|(a, b)| (a - b).abs() < 1e-12)) {
            rows.push(row);
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < k_grid {
                break;
            }
            *d = 0;
        }
    }
    let n_rows = n_states * n_inputs;
    let count = crate::error::checked_pow(rows.len(), n_rows, "quantized family", member_cap as u128)?;
    let mut members = Vec::with_capacity(count);
    let mut labels_out = Vec::with_capacity(count);
    let mut choice = vec![0usize; n_rows];
    for idx in 0..count {
        let kernel: Vec<f64> = choice.iter().flat_map(|&c| rows[c].iter().copied()).collect();
        members.push(FscSpec::from_kernel(n_states, n_inputs, n_outputs, kernel)?);
        labels_out.push(format!("q{k_grid}_{idx}"));
        for c in choice.iter_mut().rev() {
            *c += 1;
            if *c < rows.len() {
                break;
            }
            *c = 0;
        }
    }
    CompoundFamily::new(members, labels_out)
}

/// Maximum over `(s_prev, x)` rows of the L1 distance between two kernels.
pub fn max_row_l1(a: &FscSpec, b: &FscSpec) -> f64 {
    let row_len = a.n_outputs() * a.n_states();
    a.kernel
        .chunks(row_len)
        .zip(b.kernel.chunks(row_len))
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Index of the member of `family` closest to `fsc` in max-row L1 distance.
pub fn nearest_member(family: &CompoundFamily, fsc: &FscSpec) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, m) in family.members().iter().enumerate() {
        let d = max_row_l1(m, fsc);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// True when some power of the transition graph has a strictly positive
/// column, i.e. one aperiodic recurrent class reachable from everywhere.
fn has_unique_limit(trans: &[Vec<f64>]) -> bool {
    let n = trans.len();
    let adj: Vec<Vec<bool>> = trans.iter().map(|r| r.iter().map(|&p| p > 0.0).collect()).collect();
    let mut power = adj.clone();
    for _ in 0..(n * n + 1) {
        if (0..n).any(|j| (0..n).all(|i| power[i][j])) {
            return true;
        }
        power = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| power[i][k] && adj[k][j])).collect())
            .collect();
    }
    false
}

/// Stationary distribution of the input-independent state chain.
pub fn stationary_distribution(fsc: &FscSpec) -> Result<Vec<f64>> {
    let trans = fsc.state_transition()?;
    let n = trans.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    if !has_unique_limit(&trans) {
        return Err(Error::NoUniqueStationary);
    }
    // Solve pi (P - I) = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for j in 0..n {
            row[j] = trans[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-300 {
            return Err(Error::NoUniqueStationary);
        }
        for j in col..=n {
            a[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in col..=n {
                        a[r][j] -= f * a[col][j];
                    }
                }
            }
        }
    }
    let mut pi: Vec<f64> = a.iter().map(|r| r[n].max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    Ok(pi)
}

/// Smallest `M ≤ max_n` such that `|Pr(S_k = s | s0) - π(s)| ≤ eps` for every
/// `k ≥ M`, every `s0, s` and every member. `None` when no such `M` exists
/// within `max_n` steps. The deviation is non-increasing in `k`, so the
/// first step where it drops below `eps` is the answer.
pub fn uniform_ergodicity_horizon(family: &CompoundFamily, eps: f64, max_n: usize) -> Result<Option<usize>> {
    let mut horizon = 0usize;
    for member in family.members() {
        let trans = member.state_transition()?;
        let pi = stationary_distribution(member)?;
        let n = trans.len();
        let mut power: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let mut found = None;
        for k in 0..=max_n {
            let dev = power
                .iter()
                .flat_map(|row| row.iter().zip(&pi).map(|(p, q)| (p - q).abs()))
                .fold(0.0, f64::max);
            if dev <= eps {
                found = Some(k);
                break;
            }
            power = mat_mul(&power, &trans);
        }
        match found {
            Some(k) => horizon = horizon.max(k),
            None => return Ok(None),
        }
    }
    Ok(Some(horizon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_alternating_ge() {
        let ch = make_gilbert_elliot(GilbertElliotParams::new(1.0, 1.0, 0.0, 0.0)).unwrap();
        for s in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    for s2 in 0..2 {
                        let expect = if x == y && s2 != s { 1.0 } else { 0.0 };
                        assert_eq!(ch.prob(s, x, y, s2), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn state_degenerate_ge_is_bsc_times_half() {
        let p = 0.13;
        let ch = make_gilbert_elliot(GilbertElliotParams::new(0.5, 0.5, p, p)).unwrap();
        for s in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    let bsc = if x == y { 1.0 - p } else { p };
                    for s2 in 0..2 {
                        assert!((ch.prob(s, x, y, s2) - 0.5 * bsc).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn example1_member_three() {
        let params = GilbertElliotParams::example1(3);
        assert_eq!(params.g, 0.125);
        assert_eq!(params.b, 0.125);
        let ch = make_gilbert_elliot(params).unwrap();
        // bad state: BSC(1/2), stay with prob 7/8
        assert!((ch.prob(STATE_BAD, 0, 1, STATE_BAD) - 0.5 * 0.875).abs() < 1e-15);
        assert_eq!(ch.prob(STATE_GOOD, 0, 1, STATE_GOOD), 0.0);
    }

    #[test]
    fn ge_rejects_bad_params() {
        assert!(make_gilbert_elliot(GilbertElliotParams::new(1.2, 0.1, 0.0, 0.0)).is_err());
    }

    #[test]
    fn memoryless_embedding() {
        let ch = bsc(0.2).unwrap();
        assert_eq!(ch.n_states(), 1);
        assert_eq!(ch.row(0, 0), &[0.8, 0.2]);
        assert_eq!(ch.row(0, 1), &[0.2, 0.8]);
        assert!(make_memoryless(&[vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn quantize_binary_grid_two() {
        let fam = quantize_family(2, 1, 2, 2, 1000).unwrap();
        assert_eq!(fam.len(), 9);
        let identity = make_memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let anti = make_memoryless(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(fam.members().iter().any(|m| max_row_l1(m, &identity) < 1e-12));
        assert!(fam.members().iter().any(|m| max_row_l1(m, &anti) < 1e-12));
    }

    #[test]
    fn quantize_bsc_0237_to_bsc_02() {
        let q = quantize_channel(&bsc(0.237).unwrap(), 11).unwrap();
        assert!(max_row_l1(&q, &bsc(0.2).unwrap()) < 1e-12);
    }

    #[test]
    fn quantize_cap_is_enforced() {
        assert!(matches!(quantize_family(5, 2, 2, 2, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn stationary_closed_forms() {
        let sym = make_gilbert_elliot(GilbertElliotParams::new(0.5, 0.5, 0.1, 0.2)).unwrap();
        let pi = stationary_distribution(&sym).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
        let ch = make_gilbert_elliot(GilbertElliotParams::new(0.1, 0.3, 0.0, 0.5)).unwrap();
        let pi = stationary_distribution(&ch).unwrap();
        assert!((pi[STATE_GOOD] - 0.25).abs() < 1e-12);
        assert!((pi[STATE_BAD] - 0.75).abs() < 1e-12);
        assert_eq!(stationary_distribution(&bsc(0.1).unwrap()).unwrap(), vec![1.0]);
    }

    #[test]
    fn stationary_errors() {
        let periodic = make_gilbert_elliot(GilbertElliotParams::new(1.0, 1.0, 0.0, 0.0)).unwrap();
        assert!(matches!(stationary_distribution(&periodic), Err(Error::NoUniqueStationary)));
        let reducible = make_gilbert_elliot(GilbertElliotParams::new(0.0, 0.0, 0.0, 0.5)).unwrap();
        assert!(matches!(stationary_distribution(&reducible), Err(Error::NoUniqueStationary)));
        // state follows the input
        let mut kernel = vec![0.0; 16];
        for s in 0..2 {
            for x in 0..2 {
                kernel[((s * 2 + x) * 2 + x) * 2 + x] = 1.0;
            }
        }
        let driven = FscSpec::from_kernel(2, 2, 2, kernel).unwrap();
        assert!(matches!(stationary_distribution(&driven), Err(Error::NotMarkovian)));
    }

    #[test]
    fn ergodicity_horizon_examples() {
        let single = CompoundFamily::single(bsc(0.1).unwrap(), "bsc");
        assert_eq!(uniform_ergodicity_horizon(&single, 0.01, 100).unwrap(), Some(0));
        let ge = make_gilbert_elliot(GilbertElliotParams::new(0.5, 0.5, 0.0, 0.5)).unwrap();
        let fam = CompoundFamily::single(ge, "ge");
        assert_eq!(uniform_ergodicity_horizon(&fam, 0.01, 100).unwrap(), Some(1));
        let slow = make_gilbert_elliot(GilbertElliotParams::example1(8)).unwrap();
        let fam = CompoundFamily::single(slow, "slow");
        assert_eq!(uniform_ergodicity_horizon(&fam, 0.01, 10).unwrap(), None);
    }

    #[test]
    fn json_round_trip() {
        let ch = make_gilbert_elliot(GilbertElliotParams::new(0.2, 0.3, 0.01, 0.4)).unwrap();
        let v = ch.to_json(Some("ge"));
        let (back, label) = FscSpec::from_json(&v).unwrap();
        assert_eq!(back, ch);
        assert_eq!(label.as_deref(), Some("ge"));
        let bad = serde_json::json!({"states":[0],"inputs":[0,1],"outputs":[0,1],"kernel":[[[[0.5],[0.4]],[[0.0],[1.0]]]]});
        assert!(FscSpec::from_json(&bad).is_err());
    }

    #[test]
    fn feedback_map_validation() {
        assert!(FeedbackMap::new(3, vec![0, 1]).is_err());
        assert!(FeedbackMap::new(2, vec![0, 2]).is_err());
        let f = FeedbackMap::new(1, vec![0, 0, 0]).unwrap();
        assert_eq!(f.apply(2), 0);
    }
}
