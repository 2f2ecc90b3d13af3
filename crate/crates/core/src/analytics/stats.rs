//! Correlation, standardisation, reliability and Welch's ANOVA.
//!
//! Variances use the `n - 1` denominator throughout.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("non-finite value")]
    NonFinite,
    #[error("expected {expected} responses, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("response {0} is outside 0..=5")]
    OutOfRange(u8),
}

fn finite(x: &[f64]) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn at_least(x: &[f64], need: usize) -> Result<(), StatsError> {
    if x.len() < need {
        return Err(StatsError::TooFew { need, got: x.len() });
    }
    finite(x)
}

fn paired(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    at_least(x, 3)?;
    at_least(y, 3)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    paired(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = alloc::vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    paired(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Number of pairs within runs of equal values in a sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts by `y` and returns the number of inversions.
fn merge_count(v: &mut [(f64, f64)], buf: &mut Vec<(f64, f64)>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].1.total_cmp(&v[i].1) == Ordering::Less {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b in `O(n log n)`.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    paired(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tied_pairs(&xs);
    let n3 = tied_pairs(&pairs);
    let mut buf = Vec::with_capacity(pairs.len());
    let swaps = merge_count(&mut pairs, &mut buf);
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let n2 = tied_pairs(&ys);
    if n1 == n0 || n2 == n0 {
        return Err(StatsError::ZeroVariance);
    }
    let concordant_minus_discordant =
        n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    let denom = libm::sqrt((n0 - n1) as f64 * (n0 - n2) as f64);
    Ok((concordant_minus_discordant / denom).clamp(-1.0, 1.0))
}

pub fn zscores(x: &[f64]) -> Result<Vec<f64>, StatsError> {
    at_least(x, 2)?;
    let m = mean(x);
    let sd = libm::sqrt(variance(x));
    if sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(x.iter().map(|v| (v - m) / sd).collect())
}

/// Cronbach's alpha over `rows[participant][item]`.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64, StatsError> {
    if rows.len() < 2 {
        return Err(StatsError::TooFew {
            need: 2,
            got: rows.len(),
        });
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(StatsError::TooFew { need: 2, got: k });
    }
    for r in rows {
        if r.len() != k {
            return Err(StatsError::LengthMismatch(k, r.len()));
        }
        finite(r)?;
    }
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    if variance(&totals) == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    // k/(k-1) * (1 - sum var_i / T) rewritten as 1 + sum_ij (c_ij - c_ii) / ((k-1) T),
    // with T = sum_ij c_ij, so that identical items give exactly 1
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let cov = |a: &[f64], b: &[f64]| {
        let (ma, mb) = (mean(a), mean(b));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (a.len() as f64 - 1.0)
    };
    let c: Vec<Vec<f64>> = columns
        .iter()
        .map(|a| columns.iter().map(|b| cov(a, b)).collect())
        .collect();
    let total: f64 = c.iter().flatten().sum();
    let excess: f64 = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| c[i][j] - c[i][i])
        .sum();
    Ok(1.0 + excess / ((k as f64 - 1.0) * total))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchAnova {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
}

pub fn welch_anova(groups: &[Vec<f64>]) -> Result<WelchAnova, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFew {
            need: 2,
            got: groups.len(),
        });
    }
    let mut stats = Vec::with_capacity(groups.len());
    for g in groups {
        at_least(g, 2)?;
        let v = variance(g);
        if v == 0.0 {
            return Err(StatsError::ZeroVariance);
        }
        stats.push((g.len() as f64, mean(g), g.len() as f64 / v));
    }
    let k = groups.len() as f64;
    let w_sum: f64 = stats.iter().map(|s| s.2).sum();
    // centred on the first mean so that equal means give exactly zero
    let m0 = stats[0].1;
    let grand = m0 + stats.iter().map(|s| s.2 * (s.1 - m0)).sum::<f64>() / w_sum;
    let between = stats
        .iter()
        .map(|s| s.2 * (s.1 - grand) * (s.1 - grand))
        .sum::<f64>()
        / (k - 1.0);
    let lambda: f64 = stats
        .iter()
        .map(|s| {
            let r = 1.0 - s.2 / w_sum;
            r * r / (s.0 - 1.0)
        })
        .sum();
    let f = between / (1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * lambda);
    Ok(WelchAnova {
        f,
        df_between: k - 1.0,
        df_within: (k * k - 1.0) / (3.0 * lambda),
    })
}

pub const PRIOR_KNOWLEDGE_ITEMS: usize = 16;

/// Mean of the 16 self-rated topics, each on a 0 (none) to 5 scale.
pub fn prior_knowledge_score(responses: &[u8]) -> Result<f64, StatsError> {
    if responses.len() != PRIOR_KNOWLEDGE_ITEMS {
        return Err(StatsError::WrongCount {
            expected: PRIOR_KNOWLEDGE_ITEMS,
            got: responses.len(),
        });
    }
    if let Some(&bad) = responses.iter().find(|&&r| r > 5) {
        return Err(StatsError::OutOfRange(bad));
    }
    Ok(responses.iter().map(|&r| f64::from(r)).sum::<f64>() / PRIOR_KNOWLEDGE_ITEMS as f64)
}
