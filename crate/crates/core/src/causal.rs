//! Causal-conditioning laws of the channel and of the input.
//!
//! Sequence indices are big-endian mixed-radix integers: `x^n` maps to
//! `Σ x_i |X|^{n-i}`, so the first symbol is the most significant digit.
//! Tables over `(x^n, y^n)` are stored as `x_index * |Y|^n + y_index`.
//!
//! An input policy at time `i` conditions on the history
//! `(x^{i-1}, z^{i-1})`, stored at `x_index * |Z|^{i-1} + z_index` within
//! level `i`; levels follow each other, so a serialized policy is the
//! concatenation of `Σ_i (|X||Z|)^{i-1}` rows of `|X|` probabilities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{FeedbackMap, FscSpec};
use crate::error::{checked_pow, Error, Result, DEFAULT_TABLE_CAP};
use crate::math::compensated_sum;

/// Big-endian digits of `idx` in base `radix`, `len` digits.
pub fn digits(mut idx: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for d in out.iter_mut().rev() {
        *d = idx % radix;
        idx /= radix;
    }
    out
}

/// Inverse of [`digits`].
pub fn encode(symbols: &[usize], radix: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * radix + s)
}

/// How the initial state is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Fixed(usize),
    Prior(Vec<f64>),
}

impl InitialState {
    pub fn uniform(n_states: usize) -> Self {
        InitialState::Prior(vec![1.0 / n_states as f64; n_states])
    }

    /// The initial state distribution as a dense vector.
    pub fn weights(&self, n_states: usize) -> Result<Vec<f64>> {
        match self {
            InitialState::Fixed(s) => {
                if *s >= n_states {
                    return Err(Error::AlphabetMismatch(format!("initial state {s} out of range")));
                }
                let mut w = vec![0.0; n_states];
                w[*s] = 1.0;
                Ok(w)
            }
            InitialState::Prior(p) => {
                if p.len() != n_states || p.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidArgument("initial-state prior has wrong shape".into()));
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("initial-state prior sums to {s}")));
                }
                Ok(p.clone())
            }
        }
    }
}

fn check_sequences(fsc: &FscSpec, x: &[usize], y: &[usize]) -> Result<()> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::AlphabetMismatch(format!(
            "input and output sequences must share a positive length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.iter().any(|&v| v >= fsc.n_inputs()) || y.iter().any(|&v| v >= fsc.n_outputs()) {
        return Err(Error::AlphabetMismatch("symbol outside the channel alphabets".into()));
    }
    Ok(())
}

/// One forward step: `alpha'(s') = Σ_s alpha(s) P(y, s' | x, s)`.
#[inline]
fn forward_step(fsc: &FscSpec, alpha: &[f64], x: usize, y: usize, out: &mut [f64]) {
    let ns = fsc.n_states();
    for (s2, o) in out.iter_mut().enumerate() {
        *o = compensated_sum((0..ns).map(|s| alpha[s] * fsc.prob(s, x, y, s2)));
    }
}

/// Forward weights `alpha_i(s) = P(y^i, s_i = s || x^i, s0)` after the full sequence.
pub fn forward_weights(fsc: &FscSpec, x: &[usize], y: &[usize], s0: &InitialState) -> Result<Vec<f64>> {
    check_sequences(fsc, x, y)?;
    let mut alpha = s0.weights(fsc.n_states())?;
    let mut next = vec![0.0; fsc.n_states()];
    for (&xi, &yi) in x.iter().zip(y) {
        forward_step(fsc, &alpha, xi, yi, &mut next);
        std::mem::swap(&mut alpha, &mut next);
    }
    Ok(alpha)
}

/// `P(y^n || x^n, s0) = Σ_{s^n} Π_i P(y_i, s_i | x_i, s_{i-1})` by forward
/// recursion.
pub fn causal_channel_prob(fsc: &FscSpec, x: &[usize], y: &[usize], s0: usize) -> Result<f64> {
    let alpha = forward_weights(fsc, x, y, &InitialState::Fixed(s0))?;
    Ok(compensated_sum(alpha.iter().copied()))
}

/// Natural log of `Σ_{s0} prior(s0) P(y^n || x^n, s0)`, accumulated with
/// per-step rescaling so long blocks do not underflow. `-inf` for zero.
pub fn causal_channel_log_prob(fsc: &FscSpec, x: &[usize], y: &[usize], s0: &InitialState) -> Result<f64> {
    check_sequences(fsc, x, y)?;
    let mut alpha = s0.weights(fsc.n_states())?;
    let mut next = vec![0.0; fsc.n_states()];
    let mut log_scale = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        forward_step(fsc, &alpha, xi, yi, &mut next);
        let total: f64 = next.iter().sum();
        if total <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_scale += total.ln();
        next.iter_mut().for_each(|v| *v /= total);
        std::mem::swap(&mut alpha, &mut next);
    }
    Ok(log_scale)
}

/// Exhaustive table of `P(y^n || x^n)` for one channel and initial-state law.
#[derive(Debug, Clone)]
pub struct ChannelTable {
    n: usize,
    x_card: usize,
    y_card: usize,
    probs: Vec<f64>,
}

impl ChannelTable {
    pub fn new(fsc: &FscSpec, n: usize, s0: &InitialState) -> Result<Self> {
        Self::with_cap(fsc, n, s0, DEFAULT_TABLE_CAP)
    }

    pub fn with_cap(fsc: &FscSpec, n: usize, s0: &InitialState, cap: u128) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let (nx, ny) = (fsc.n_inputs(), fsc.n_outputs());
        let size = checked_pow(nx * ny, n, "joint (x^n, y^n) table", cap)?;
        let yn = ny.pow(n as u32);
        let mut probs = vec![0.0; size];
        let alpha0 = s0.weights(fsc.n_states())?;
        fill_table(fsc, n, 0, 0, 0, &alpha0, yn, &mut probs);
        Ok(Self { n, x_card: nx, y_card: ny, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    pub fn x_count(&self) -> usize {
        self.x_card.pow(self.n as u32)
    }

    pub fn y_count(&self) -> usize {
        self.y_card.pow(self.n as u32)
    }

    #[inline]
    pub fn get(&self, x_idx: usize, y_idx: usize) -> f64 {
        self.probs[x_idx * self.y_count() + y_idx]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[allow(clippy::too_many_arguments)]
fn fill_table(
    fsc: &FscSpec,
    n: usize,
    depth: usize,
    x_idx: usize,
    y_idx: usize,
    alpha: &[f64],
    yn: usize,
    out: &mut [f64],
) {
    if depth == n {
        out[x_idx * yn + y_idx] = compensated_sum(alpha.iter().copied());
        return;
    }
    let mut next = vec![0.0; fsc.n_states()];
    for x in 0..fsc.n_inputs() {
        for y in 0..fsc.n_outputs() {
            forward_step(fsc, alpha, x, y, &mut next);
            fill_table(fsc, n, depth + 1, x_idx * fsc.n_inputs() + x, y_idx * fsc.n_outputs() + y, &next, yn, out);
        }
    }
}

/// Index of `z^{n-1} = f(y^{n-1})` for every `y^n`.
pub fn feedback_paths(feedback: &FeedbackMap, n: usize) -> Vec<usize> {
    let ny = feedback.y_card();
    let yn = ny.pow(n as u32);
    (0..yn)
        .map(|y_idx| {
            let ys = digits(y_idx, ny, n);
            ys[..n - 1].iter().fold(0, |acc, &y| acc * feedback.z_card() + feedback.apply(y))
        })
        .collect()
}

/// An input law `Q(x^n || z^{n-1}) = Π_i Q(x_i | x^{i-1}, z^{i-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalConditioning {
    horizon: usize,
    x_card: usize,
    z_card: usize,
    conditionals: Vec<f64>,
}

/// Number of stored histories `Σ_{i=1}^{n} (|X||Z|)^{i-1}`.
pub fn history_count(n: usize, x_card: usize, z_card: usize) -> usize {
    (0..n).map(|l| (x_card * z_card).pow(l as u32)).sum()
}

impl CausalConditioning {
    pub fn uniform(horizon: usize, x_card: usize, z_card: usize) -> Self {
        let h = history_count(horizon, x_card, z_card);
        Self { horizon, x_card, z_card, conditionals: vec![1.0 / x_card as f64; h * x_card] }
    }

    pub fn from_conditionals(horizon: usize, x_card: usize, z_card: usize, conditionals: Vec<f64>) -> Result<Self> {
        if horizon == 0 || x_card == 0 || z_card == 0 {
            return Err(Error::InvalidPolicy("horizon and alphabets must be positive".into()));
        }
        let h = history_count(horizon, x_card, z_card);
        if conditionals.len() != h * x_card {
            return Err(Error::InvalidPolicy(format!(
                "expected {} conditionals for {h} histories, got {}",
                h * x_card,
                conditionals.len()
            )));
        }
        for (i, row) in conditionals.chunks(x_card).enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidPolicy(format!("history {i} is not a distribution (sum {s})")));
            }
        }
        Ok(Self { horizon, x_card, z_card, conditionals })
    }

    /// Each conditional drawn from a flat Dirichlet.
    pub fn random<R: Rng + ?Sized>(horizon: usize, x_card: usize, z_card: usize, rng: &mut R) -> Self {
        let h = history_count(horizon, x_card, z_card);
        let mut conditionals = Vec::with_capacity(h * x_card);
        for _ in 0..h {
            let w: Vec<f64> = (0..x_card).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = w.iter().sum();
            conditionals.extend(w.iter().map(|v| v / s));
        }
        Self { horizon, x_card, z_card, conditionals }
    }

    /// Point-mass policy: `choose(i, x^{i-1}, z^{i-1})` gives the symbol sent at time `i`.
    pub fn deterministic<F>(horizon: usize, x_card: usize, z_card: usize, mut choose: F) -> Self
    where
        F: FnMut(usize, &[usize], &[usize]) -> usize,
    {
        let mut q = Self::uniform(horizon, x_card, z_card);
        for level in 1..=horizon {
            let xs = x_card.pow(level as u32 - 1);
            let zs = z_card.pow(level as u32 - 1);
            for xi in 0..xs {
                for zi in 0..zs {
                    let a = choose(level, &digits(xi, x_card, level - 1), &digits(zi, z_card, level - 1));
                    let row = q.row_mut(level, xi, zi);
                    row.iter_mut().enumerate().for_each(|(k, p)| *p = if k == a { 1.0 } else { 0.0 });
                }
            }
        }
        q
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn z_card(&self) -> usize {
        self.z_card
    }

    pub fn conditionals(&self) -> &[f64] {
        &self.conditionals
    }

    pub(crate) fn conditionals_mut(&mut self) -> &mut [f64] {
        &mut self.conditionals
    }

    pub fn history_count(&self) -> usize {
        history_count(self.horizon, self.x_card, self.z_card)
    }

    /// Offset (in histories) of the first history of `level` (1-based).
    pub fn level_offset(&self, level: usize) -> usize {
        history_count(level - 1, self.x_card, self.z_card)
    }

    /// Flat history index for level `level`, past inputs `x_idx`, past feedback `z_idx`.
    #[inline]
    pub fn history_index(&self, level: usize, x_idx: usize, z_idx: usize) -> usize {
        self.level_offset(level) + x_idx * self.z_card.pow(level as u32 - 1) + z_idx
    }

    /// `Q(· | x^{i-1}, z^{i-1})` addressed by prefix indices.
    pub fn row(&self, level: usize, x_idx: usize, z_idx: usize) -> &[f64] {
        let h = self.history_index(level, x_idx, z_idx);
        &self.conditionals[h * self.x_card..(h + 1) * self.x_card]
    }

    pub fn row_mut(&mut self, level: usize, x_idx: usize, z_idx: usize) -> &mut [f64] {
        let h = self.history_index(level, x_idx, z_idx);
        let xc = self.x_card;
        &mut self.conditionals[h * xc..(h + 1) * xc]
    }

    /// `Q(x^n || z^{n-1})` for explicit sequences.
    pub fn input_prob(&self, x: &[usize], z: &[usize]) -> Result<f64> {
        if x.len() != self.horizon || z.len() + 1 != self.horizon {
            return Err(Error::InvalidPolicy(format!(
                "need |x| = {} and |z| = {}",
                self.horizon,
                self.horizon - 1
            )));
        }
        if x.iter().any(|&v| v >= self.x_card) || z.iter().any(|&v| v >= self.z_card) {
            return Err(Error::InvalidPolicy("history symbol out of range".into()));
        }
        let mut p = 1.0;
        let (mut xi, mut zi) = (0usize, 0usize);
        for level in 1..=self.horizon {
            p *= self.row(level, xi, zi)[x[level - 1]];
            xi = xi * self.x_card + x[level - 1];
            if level < self.horizon {
                zi = zi * self.z_card + z[level - 1];
            }
        }
        Ok(p)
    }

    /// All path probabilities `r(x^n, z^{n-1})`, indexed `x_idx * |Z|^{n-1} + z_idx`.
    pub fn path_probs(&self) -> Vec<f64> {
        let zn1 = self.z_card.pow(self.horizon as u32 - 1);
        let mut out = vec![0.0; self.x_card.pow(self.horizon as u32) * zn1];
        self.path_dfs(1, 0, 0, 1.0, zn1, &mut out);
        out
    }

    fn path_dfs(&self, level: usize, xi: usize, zi: usize, prefix: f64, zn1: usize, out: &mut [f64]) {
        let row = self.row(level, xi, zi).to_vec();
        for (a, &qa) in row.iter().enumerate() {
            let x_next = xi * self.x_card + a;
            let p = prefix * qa;
            if level == self.horizon {
                out[x_next * zn1 + zi] = p;
            } else {
                for z in 0..self.z_card {
                    self.path_dfs(level + 1, x_next, zi * self.z_card + z, p, zn1, out);
                }
            }
        }
    }

    /// Re-factorize path probabilities into conditionals; unreachable
    /// histories (0/0) become uniform.
    pub fn from_path_probs(horizon: usize, x_card: usize, z_card: usize, paths: &[f64]) -> Result<Self> {
        let zn1 = z_card.pow(horizon as u32 - 1);
        if paths.len() != x_card.pow(horizon as u32) * zn1 {
            return Err(Error::InvalidPolicy("path table has the wrong size".into()));
        }
        let mut q = Self::uniform(horizon, x_card, z_card);
        for level in 1..=horizon {
            let xs = x_card.pow(level as u32 - 1);
            let zs = z_card.pow(level as u32 - 1);
            let x_rest = x_card.pow((horizon - level) as u32);
            let z_pad = z_card.pow((horizon - level) as u32);
            for xi in 0..xs {
                for zi in 0..zs {
                    // marginal r(x^i || z^{i-1}): later z fixed to 0
                    let z_full = zi * z_pad;
                    let mut marg = vec![0.0; x_card];
                    for (a, m) in marg.iter_mut().enumerate() {
                        let base = (xi * x_card + a) * x_rest;
                        *m = (0..x_rest).map(|t| paths[(base + t) * zn1 + z_full]).sum();
                    }
                    let total: f64 = marg.iter().sum();
                    let row = q.row_mut(level, xi, zi);
                    if total > 0.0 {
                        row.iter_mut().zip(&marg).for_each(|(r, m)| *r = m / total);
                    }
                }
            }
        }
        Ok(q)
    }

    /// Embed a no-feedback policy (`|Z| = 1`) into a feedback alphabet of size `z_card`.
    pub fn lift_feedback(&self, z_card: usize) -> Result<Self> {
        if self.z_card != 1 {
            return Err(Error::InvalidPolicy("only |Z|=1 policies can be lifted".into()));
        }
        let mut q = Self::uniform(self.horizon, self.x_card, z_card);
        for level in 1..=self.horizon {
            let xs = self.x_card.pow(level as u32 - 1);
            let zs = z_card.pow(level as u32 - 1);
            for xi in 0..xs {
                let src = self.row(level, xi, 0).to_vec();
                for zi in 0..zs {
                    q.row_mut(level, xi, zi).copy_from_slice(&src);
                }
            }
        }
        Ok(q)
    }

    /// Product policy `Q_k(x_1^k || z_1^{k-1}) Q_m(x_{k+1}^n || z_{k+1}^{n-1})`.
    pub fn concat(first: &Self, second: &Self) -> Result<Self> {
        if first.x_card != second.x_card || first.z_card != second.z_card {
            return Err(Error::InvalidPolicy("concatenated policies must share alphabets".into()));
        }
        let (k, n) = (first.horizon, first.horizon + second.horizon);
        let (xc, zc) = (first.x_card, first.z_card);
        let mut q = Self::uniform(n, xc, zc);
        for level in 1..=n {
            let xs = xc.pow(level as u32 - 1);
            let zs = zc.pow(level as u32 - 1);
            for xi in 0..xs {
                for zi in 0..zs {
                    let src = if level <= k {
                        first.row(level, xi, zi).to_vec()
                    } else {
                        let inner = level - k;
                        let xm = xi % xc.pow(inner as u32 - 1);
                        let zm = zi % zc.pow(inner as u32 - 1);
                        second.row(inner, xm, zm).to_vec()
                    };
                    q.row_mut(level, xi, zi).copy_from_slice(&src);
                }
            }
        }
        Ok(q)
    }

    /// Convex combination in path-probability space, re-factorized.
    pub fn mixture(a: &Self, b: &Self, lambda: f64) -> Result<Self> {
        if a.horizon != b.horizon || a.x_card != b.x_card || a.z_card != b.z_card {
            return Err(Error::InvalidPolicy("mixture of differently shaped policies".into()));
        }
        let pa = a.path_probs();
        let pb = b.path_probs();
        let mix: Vec<f64> = pa.iter().zip(&pb).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
        Self::from_path_probs(a.horizon, a.x_card, a.z_card, &mix)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("policy serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: CausalConditioning = serde_json::from_value(value.clone())?;
        Self::from_conditionals(raw.horizon, raw.x_card, raw.z_card, raw.conditionals)
    }
}

/// Exact `P(x^n, y^n | s0)` and `P(y^n | s0)` for a policy, channel table and feedback.
#[derive(Debug, Clone)]
pub struct JointTable {
    n: usize,
    x_card: usize,
    y_card: usize,
    joint: Vec<f64>,
    output: Vec<f64>,
}

impl JointTable {
    pub fn new(q: &CausalConditioning, table: &ChannelTable, feedback: &FeedbackMap) -> Result<Self> {
        if q.horizon() != table.n() || q.x_card() != table.x_card() {
            return Err(Error::InvalidPolicy("policy does not match the channel table".into()));
        }
        if q.z_card() != feedback.z_card() || feedback.y_card() != table.y_card() {
            return Err(Error::InvalidPolicy("policy, feedback and channel disagree on alphabets".into()));
        }
        let n = table.n();
        let paths = q.path_probs();
        let zpaths = feedback_paths(feedback, n);
        let zn1 = q.z_card().pow(n as u32 - 1);
        let (xn, yn) = (table.x_count(), table.y_count());
        let mut joint = vec![0.0; xn * yn];
        for x in 0..xn {
            for y in 0..yn {
                joint[x * yn + y] = paths[x * zn1 + zpaths[y]] * table.get(x, y);
            }
        }
        let output = (0..yn)
            .map(|y| compensated_sum((0..xn).map(|x| joint[x * yn + y])))
            .collect();
        Ok(Self { n, x_card: table.x_card(), y_card: table.y_card(), joint, output })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }

    #[inline]
    pub fn get(&self, x_idx: usize, y_idx: usize) -> f64 {
        self.joint[x_idx * self.output.len() + y_idx]
    }

    /// Marginal over `(x^a, y^b)`, indexed `x_prefix * |Y|^b + y_prefix`.
    pub fn marginal(&self, a: usize, b: usize) -> Vec<f64> {
        let yn = self.output.len();
        let x_div = self.x_card.pow((self.n - a) as u32);
        let y_div = self.y_card.pow((self.n - b) as u32);
        let yb = self.y_card.pow(b as u32);
        let mut out = vec![0.0; self.x_card.pow(a as u32) * yb];
        for (i, &p) in self.joint.iter().enumerate() {
            let (x, y) = (i / yn, i % yn);
            out[(x / x_div) * yb + y / y_div] += p;
        }
        out
    }
}

/// Builds the exact joint and output tables.
pub fn joint_and_output_probs(
    q: &CausalConditioning,
    fsc: &FscSpec,
    s0: &InitialState,
    feedback: &FeedbackMap,
) -> Result<JointTable> {
    let table = ChannelTable::new(fsc, q.horizon(), s0)?;
    JointTable::new(q, &table, feedback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, make_gilbert_elliot, make_memoryless, GilbertElliotParams, STATE_GOOD};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_channel_probabilities() {
        let id = make_memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(causal_channel_prob(&id, &[0, 1, 1], &[0, 1, 1], 0).unwrap(), 1.0);
        assert_eq!(causal_channel_prob(&id, &[0, 1, 1], &[0, 0, 1], 0).unwrap(), 0.0);
    }

    #[test]
    fn bsc_one_flip() {
        let p = 0.3;
        let ch = bsc(p).unwrap();
        let v = causal_channel_prob(&ch, &[0, 1], &[1, 1], 0).unwrap();
        assert!((v - p * (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn ge_matches_four_path_sum() {
        let ch = make_gilbert_elliot(GilbertElliotParams::new(0.5, 0.5, 0.0, 0.5)).unwrap();
        let (x, y) = ([0, 0], [0, 1]);
        let mut brute = 0.0;
        for s1 in 0..2 {
            for s2 in 0..2 {
                brute += ch.prob(STATE_GOOD, x[0], y[0], s1) * ch.prob(s1, x[1], y[1], s2);
            }
        }
        let v = causal_channel_prob(&ch, &x, &y, STATE_GOOD).unwrap();
        assert!((v - brute).abs() < 1e-15);
        // first step from G is noiseless, second is BSC(0) or BSC(1/2) by s1
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_sequences() {
        let ch = bsc(0.1).unwrap();
        assert!(causal_channel_prob(&ch, &[0, 1], &[0], 0).is_err());
        assert!(causal_channel_prob(&ch, &[0, 2], &[0, 1], 0).is_err());
        assert!(causal_channel_prob(&ch, &[0], &[0], 1).is_err());
    }

    #[test]
    fn log_prob_matches_linear() {
        let ch = make_gilbert_elliot(GilbertElliotParams::new(0.2, 0.3, 0.05, 0.4)).unwrap();
        let x = [0, 1, 1, 0, 1];
        let y = [0, 1, 0, 0, 1];
        let lin: f64 = (0..2).map(|s| 0.5 * causal_channel_prob(&ch, &x, &y, s).unwrap()).sum();
        let lg = causal_channel_log_prob(&ch, &x, &y, &InitialState::uniform(2)).unwrap();
        assert!((lg - lin.ln()).abs() < 1e-12);
    }

    #[test]
    fn uniform_input_prob() {
        let q = CausalConditioning::uniform(3, 2, 2);
        assert_eq!(q.history_count(), 1 + 4 + 16);
        for x in 0..8 {
            for z in 0..4 {
                let p = q.input_prob(&digits(x, 2, 3), &digits(z, 2, 2)).unwrap();
                assert!((p - 0.125).abs() < 1e-15);
            }
        }
        assert!(q.input_prob(&[0, 0], &[0]).is_err());
    }

    #[test]
    fn deterministic_policy_selects_one_path() {
        // send the previous feedback symbol
        let q = CausalConditioning::deterministic(3, 2, 2, |i, _x, z| if i == 1 { 1 } else { z[i - 2] });
        let z = [0, 1];
        for x in 0..8 {
            let xs = digits(x, 2, 3);
            let p = q.input_prob(&xs, &z).unwrap();
            let expect = if xs == [1, 0, 1] { 1.0 } else { 0.0 };
            assert_eq!(p, expect);
        }
    }

    #[test]
    fn random_policy_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = CausalConditioning::random(3, 2, 2, &mut rng);
        let c = q.conditionals();
        // naive: recompute the flat offsets by hand
        let naive = |x: &[usize], z: &[usize]| {
            let h1 = 0;
            let h2 = 1 + x[0] * 2 + z[0];
            let h3 = 1 + 4 + (x[0] * 2 + x[1]) * 4 + (z[0] * 2 + z[1]);
            c[h1 * 2 + x[0]] * c[h2 * 2 + x[1]] * c[h3 * 2 + x[2]]
        };
        for x in 0..8 {
            for z in 0..4 {
                let (xs, zs) = (digits(x, 2, 3), digits(z, 2, 2));
                assert!((q.input_prob(&xs, &zs).unwrap() - naive(&xs, &zs)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn path_probs_refactorize() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = CausalConditioning::random(3, 2, 3, &mut rng);
        let back = CausalConditioning::from_path_probs(3, 2, 3, &q.path_probs()).unwrap();
        for (a, b) in q.conditionals().iter().zip(back.conditionals()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bsc_single_step_joint() {
        let p = 0.2;
        let q = CausalConditioning::uniform(1, 2, 2);
        let jt = joint_and_output_probs(&q, &bsc(p).unwrap(), &InitialState::Fixed(0), &FeedbackMap::identity(2)).unwrap();
        assert!((jt.get(0, 0) - 0.4).abs() < 1e-15);
        assert!((jt.get(0, 1) - 0.1).abs() < 1e-15);
        assert!((jt.output()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn table_cap_is_enforced() {
        let ch = bsc(0.1).unwrap();
        assert!(matches!(
            ChannelTable::with_cap(&ch, 13, &InitialState::Fixed(0), 1 << 24),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn concat_and_lift_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = CausalConditioning::random(1, 2, 2, &mut rng);
        let b = CausalConditioning::random(2, 2, 2, &mut rng);
        let ab = CausalConditioning::concat(&a, &b).unwrap();
        assert_eq!(ab.horizon(), 3);
        let x = [1, 0, 1];
        let z = [1, 0];
        let expect = a.input_prob(&x[..1], &[]).unwrap() * b.input_prob(&x[1..], &z[1..]).unwrap();
        assert!((ab.input_prob(&x, &z).unwrap() - expect).abs() < 1e-15);

        let nofb = CausalConditioning::random(2, 2, 1, &mut rng);
        let lifted = nofb.lift_feedback(2).unwrap();
        for z in 0..2 {
            assert!((lifted.input_prob(&[1, 1], &[z]).unwrap() - nofb.input_prob(&[1, 1], &[0]).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn policy_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = CausalConditioning::random(2, 2, 2, &mut rng);
        assert_eq!(CausalConditioning::from_json(&q.to_json()).unwrap(), q);
        let bad = serde_json::json!({"horizon": 1, "x_card": 2, "z_card": 1, "conditionals": [0.7, 0.7]});
        assert!(CausalConditioning::from_json(&bad).is_err());
    }
}
