//! Small numeric helpers shared across modules. Everything is in nats.

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `-p ln p` with the `0 ln 0 = 0` convention.
#[inline]
pub fn neg_plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy of a (possibly unnormalized) weight vector, in nats.
pub fn entropy(p: &[f64]) -> f64 {
    compensated_sum(p.iter().map(|&v| neg_plogp(v)))
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    neg_plogp(p) + neg_plogp(1.0 - p)
}

/// Capacity of BSC(p) in nats.
pub fn bsc_capacity(p: f64) -> f64 {
    std::f64::consts::LN_2 - binary_entropy(p)
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        out.iter_mut().for_each(|x| *x /= s);
    } else {
        let k = out.len() as f64;
        out.iter_mut().for_each(|x| *x = 1.0 / k);
    }
    out
}

/// Wilson score interval for `successes` out of `trials` at z = 1.96.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) / n) + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Standard deviation of a Bernoulli(p) frequency over `trials` draws.
pub fn bernoulli_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Mutual information of input law `q` through memoryless channel rows
/// `cond[x][y]`, in nats.
pub fn mutual_information(q: &[f64], cond: &[Vec<f64>]) -> f64 {
    let ny = cond.first().map_or(0, |r| r.len());
    let mut py = vec![0.0; ny];
    for (qx, row) in q.iter().zip(cond) {
        for (acc, &p) in py.iter_mut().zip(row) {
            *acc += qx * p;
        }
    }
    let mut total = 0.0;
    for (qx, row) in q.iter().zip(cond) {
        if *qx <= 0.0 {
            continue;
        }
        for (&p, &pyv) in row.iter().zip(&py) {
            if p > 0.0 {
                total += qx * p * (p / pyv).ln();
            }
        }
    }
    total.max(0.0)
}

/// L1 distance between two conditional tables.
pub fn l1_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_is_feasible_and_idempotent() {
        let p = project_simplex(&[0.3, -0.2, 1.4]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        let again = project_simplex(&p);
        for (a, b) in p.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        let inside = project_simplex(&[0.25, 0.75]);
        assert!((inside[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bsc_capacity(0.5).abs() < 1e-15);
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(v) - 2e-16).abs() < 1e-30);
    }
}
