//! Rank-sum test and Vargha–Delaney effect size.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest pooled sample size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub p_value: f64,
    pub a12: f64,
    pub magnitude: Magnitude,
}

/// Mid-ranks (1-based) of the pooled values, doubled so they are integers.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean; doubled: i + j + 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon rank-sum p-value for samples `a` and `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<f64> {
    let need = 3;
    for s in [a, b] {
        if s.len() < need {
            return Err(Error::TooFewSamples { have: s.len(), need });
        }
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("NaN in sample".into()));
    }
    let ranks = doubled_midranks(&pooled);
    let n1 = a.len();
    if pooled.len() <= EXACT_LIMIT {
        Ok(exact_p(&ranks, n1))
    } else {
        Ok(normal_p(&pooled, &ranks, n1))
    }
}

fn exact_p(ranks: &[u64], n1: usize) -> f64 {
    let n = ranks.len();
    let observed: u64 = ranks[..n1].iter().sum();
    let max_sum: usize = ranks.iter().map(|&r| r as usize).sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=n1).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[k - 1][s - r];
                if add != 0.0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    // doubled mean rank sum: n1 (n + 1)
    let centre = (n1 * (n + 1)) as i64;
    let dev = (observed as i64 - centre).abs();
    let (mut tail, mut total) = (0.0, 0.0);
    for (s, &w) in ways[n1].iter().enumerate() {
        total += w;
        if (s as i64 - centre).abs() >= dev {
            tail += w;
        }
    }
    (tail / total).min(1.0)
}

fn normal_p(pooled: &[f64], ranks: &[u64], n1: usize) -> f64 {
    let n = pooled.len() as f64;
    let (n1f, n2f) = (n1 as f64, n - n1 as f64);
    let w: f64 = ranks[..n1].iter().map(|&r| r as f64 / 2.0).sum();
    let mu = n1f * (n + 1.0) / 2.0;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let var = n1f * n2f / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let phi = Normal::new(0.0, 1.0).expect("standard normal").cdf(z);
    (2.0 * (1.0 - phi)).min(1.0)
}

/// Probability that a value from `a` exceeds one from `b`, ties counting half.
pub fn a12(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut wins = 0.0;
    for x in a {
        for y in b {
            if x > y {
                wins += 1.0;
            } else if x == y {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (a.len() * b.len()) as f64)
}

pub fn magnitude(a12: f64) -> Magnitude {
    let d = (a12 - 0.5).abs();
    if d < 0.06 {
        Magnitude::Negligible
    } else if d < 0.14 {
        Magnitude::Small
    } else if d < 0.21 {
        Magnitude::Medium
    } else {
        Magnitude::Large
    }
}

pub fn compare(a: &[f64], b: &[f64]) -> Result<ComparisonResult> {
    let p_value = wilcoxon_rank_sum(a, b)?;
    let a12 = a12(a, b)?;
    Ok(ComparisonResult { p_value, a12, magnitude: magnitude(a12) })
}
