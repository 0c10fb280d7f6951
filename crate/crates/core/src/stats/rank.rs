use super::special::normal_cdf;
use super::{Alternative, PMethod, TestReport};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Combined sample sizes up to this value get an exact permutation p-value;
/// larger samples use the normal approximation.
pub const EXACT_MAX_TOTAL: usize = 16;

/// Midranks (1-based) of `x`; tied values share the mean of their ranks.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("NaN in rank input"));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Sum of `t^3 - t` over tie groups.
fn tie_term(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

/// Normal-approximation p-value for an observed U of the first sample, with
/// continuity correction. `ties` is the sum of `t^3 - t` over tie groups of
/// the pooled sample (zero when tie-free).
pub fn mann_whitney_normal_p(u: f64, n1: usize, n2: usize, ties: f64, alt: Alternative) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    let n = a + b;
    let mu = 0.5 * a * b;
    let var = a * b / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let p = match alt {
        Alternative::Less => normal_cdf((u + 0.5 - mu) / sd),
        Alternative::Greater => normal_cdf(-(u - 0.5 - mu) / sd),
        Alternative::TwoSided => 2.0 * normal_cdf(-((u - mu).abs() - 0.5).max(0.0) / sd),
    };
    p.min(1.0)
}

/// Null distribution counts of U for tie-free samples: `counts[u]` is the
/// number of the `C(n1+n2, n1)` arrangements yielding that U.
fn exact_counts(n1: usize, n2: usize) -> Vec<f64> {
    // table[j][u] for the current i, built by f(i, j, u) = f(i-1, j, u-j) + f(i, j-1, u)
    let umax = n1 * n2;
    let mut prev: Vec<Vec<f64>> = (0..=n2)
        .map(|_| {
            let mut v = vec![0.0; umax + 1];
            v[0] = 1.0;
            v
        })
        .collect();
    for _i in 1..=n1 {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; umax + 1]; n2 + 1];
        cur[0][0] = 1.0;
        for j in 1..=n2 {
            for u in 0..=umax {
                let from_a = if u >= j { prev[j][u - j] } else { 0.0 };
                cur[j][u] = from_a + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev.swap_remove(n2)
}

fn exact_p_tie_free(u: f64, n1: usize, n2: usize, alt: Alternative) -> f64 {
    let counts = exact_counts(n1, n2);
    let total: f64 = counts.iter().sum();
    let ui = u.round() as usize;
    let lower: f64 = counts[..=ui].iter().sum::<f64>() / total;
    let upper: f64 = counts[ui..].iter().sum::<f64>() / total;
    match alt {
        Alternative::Less => lower,
        Alternative::Greater => upper,
        Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
    }
}

/// Exact permutation p-value using the pooled midranks, valid with ties.
fn exact_p_with_ties(ranks: &[f64], n1: usize, u: f64, alt: Alternative) -> f64 {
    let n = ranks.len();
    let offset = (n1 * (n1 + 1)) as f64 / 2.0;
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    let eps = 1e-9;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let rs: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        let uu = rs - offset;
        total += 1;
        if uu <= u + eps {
            le += 1;
        }
        if uu >= u - eps {
            ge += 1;
        }
    }
    let lower = le as f64 / total as f64;
    let upper = ge as f64 / total as f64;
    match alt {
        Alternative::Less => lower,
        Alternative::Greater => upper,
        Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
    }
}

/// Mann-Whitney U test of `a` against `b`. The reported statistic is U of
/// the first sample, `R_a - n1 (n1 + 1) / 2`.
pub fn mann_whitney_u<T: Real>(a: &[T], b: &[T], alt: Alternative) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney U needs two non-empty samples".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).map(|v| v.as_f64()).collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("Mann-Whitney U: non-finite sample".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let ranks = midranks(&pooled);
    let ra: f64 = ranks[..n1].iter().sum();
    let u = ra - (n1 * (n1 + 1)) as f64 / 2.0;
    let ties = tie_term(&pooled);

    let (p, method) = if n1 + n2 <= EXACT_MAX_TOTAL {
        let p = if ties == 0.0 {
            exact_p_tie_free(u, n1, n2, alt)
        } else {
            exact_p_with_ties(&ranks, n1, u, alt)
        };
        (p, PMethod::Exact)
    } else {
        (mann_whitney_normal_p(u, n1, n2, ties, alt), PMethod::NormalApprox)
    };
    Ok(TestReport::new("mann-whitney-u", u, p, alt, method, vec![n1, n2]))
}
