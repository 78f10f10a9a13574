use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Statistics of one (algorithm, problem) cell over its runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub runs: usize,
    pub feasible_runs: usize,
    pub feasibility_rate: f64,
    pub v_avg: Option<f64>,
    /// Sample standard deviation (n - 1 denominator); needs two feasible runs.
    pub v_std: Option<f64>,
    pub best: Option<f64>,
    pub median: Option<f64>,
    pub worst: Option<f64>,
    /// No run found a feasible point.
    pub is_nan: bool,
}

/// Summarizes best-of-run objectives, `None` marking runs that never became
/// feasible. Objective statistics use feasible runs only.
pub fn summarize_bests(bests: &[Option<f64>]) -> StatsSummary {
    let mut v: Vec<f64> = bests.iter().flatten().copied().collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let runs = bests.len();
    let rate = if runs == 0 { 0.0 } else { n as f64 / runs as f64 };
    if n == 0 {
        return StatsSummary {
            runs,
            feasible_runs: 0,
            feasibility_rate: rate,
            v_avg: None,
            v_std: None,
            best: None,
            median: None,
            worst: None,
            is_nan: true,
        };
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = (n > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    StatsSummary {
        runs,
        feasible_runs: n,
        feasibility_rate: rate,
        v_avg: Some(mean),
        v_std: std,
        best: Some(v[0]),
        median: Some(median),
        worst: Some(v[n - 1]),
        is_nan: false,
    }
}

/// Standing of another algorithm relative to the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mark {
    /// Significantly better than the reference.
    Better,
    /// Significantly worse.
    Worse,
    Equal,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Better => "+",
            Mark::Worse => "-",
            Mark::Equal => "=",
        }
    }

    pub fn flipped(self) -> Mark {
        match self {
            Mark::Better => Mark::Worse,
            Mark::Worse => Mark::Better,
            Mark::Equal => Mark::Equal,
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Midranks of the pooled sample, doubled so they stay integral.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]].total_cmp(&pooled[idx[i]]) == Ordering::Equal {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; doubled mean is i+j+2
        for &k in &idx[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided p-value of the Wilcoxon rank-sum test. Exact (enumerating
/// the permutation distribution of midrank sums) when both samples have
/// fewer than 10 values, otherwise the normal approximation with tie and
/// continuity correction.
pub fn rank_sum_p(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len(), b.len());
    assert!(n1 > 0 && n2 > 0, "rank-sum test needs two non-empty samples");
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let w: u64 = ranks[..n1].iter().sum();
    if n1 < 10 && n2 < 10 {
        exact_p(&ranks, n1, w)
    } else {
        normal_p(&ranks, n1, n2, w)
    }
}

fn exact_p(ranks: &[u64], n1: usize, w: u64) -> f64 {
    let max_sum: u64 = ranks.iter().sum();
    let width = max_sum as usize + 1;
    // dp[k][s]: number of k-subsets with doubled rank sum s
    let mut dp = vec![vec![0f64; width]; n1 + 1];
    dp[0][0] = 1.0;
    for &r in ranks {
        for k in (1..=n1).rev() {
            let (lo, hi) = dp.split_at_mut(k);
            let (prev, cur) = (&lo[k - 1], &mut hi[0]);
            for s in (r as usize..width).rev() {
                cur[s] += prev[s - r as usize];
            }
        }
    }
    let total: f64 = dp[n1].iter().sum();
    let le: f64 = dp[n1][..=w as usize].iter().sum();
    let ge: f64 = dp[n1][w as usize..].iter().sum();
    (2.0 * le.min(ge) / total).min(1.0)
}

fn normal_p(ranks: &[u64], n1: usize, n2: usize, w: u64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let u = w as f64 / 2.0 - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let var = n1f * n2f / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Compares `other` against `reference` (both minimization bests).
/// Undefined (`None`) when either side has fewer than two values, which is
/// how cells without feasible runs are left blank.
pub fn significance_mark(reference: &[f64], other: &[f64], alpha: f64) -> Option<Mark> {
    if reference.len() < 2 || other.len() < 2 {
        return None;
    }
    if rank_sum_p(reference, other) >= alpha {
        return Some(Mark::Equal);
    }
    let by_median = median(other).total_cmp(&median(reference));
    let ordering = if by_median != Ordering::Equal {
        by_median
    } else {
        // fall back to mean ranks
        let pooled: Vec<f64> = other.iter().chain(reference).copied().collect();
        let ranks = doubled_midranks(&pooled);
        let mo = ranks[..other.len()].iter().sum::<u64>() as f64 / other.len() as f64;
        let mr = ranks[other.len()..].iter().sum::<u64>() as f64 / reference.len() as f64;
        mo.total_cmp(&mr)
    };
    Some(match ordering {
        Ordering::Less => Mark::Better,
        Ordering::Greater => Mark::Worse,
        Ordering::Equal => Mark::Equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_examples() {
        let s = summarize_bests(&[Some(1.0), Some(2.0), Some(3.0)]);
        assert_eq!((s.v_avg, s.v_std, s.median, s.feasibility_rate), (Some(2.0), Some(1.0), Some(2.0), 1.0));
        let s = summarize_bests(&[None, None]);
        assert!(s.is_nan && s.feasibility_rate == 0.0 && s.v_avg.is_none() && s.best.is_none());
        let s = summarize_bests(&[Some(1.0), None, Some(3.0)]);
        assert_eq!(s.v_avg, Some(2.0));
        assert_eq!(s.feasibility_rate, 2.0 / 3.0);
        assert_eq!(s.median, Some(2.0));
    }

    #[test]
    fn exact_small_sample_values() {
        // 1,2,3 vs 4,5,6: W=6 is the minimum of C(6,3)=20 arrangements
        assert!((rank_sum_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]) - 0.1).abs() < 1e-15);
        // 2 of 20 arrangements as extreme on either side
        let p = rank_sum_p(&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0]);
        assert!((p - 2.0 / 252.0).abs() < 1e-15);
        assert_eq!(rank_sum_p(&[1.0, 1.0], &[1.0, 1.0]), 1.0);
    }

    #[test]
    fn normal_approximation_matches_hand_value() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let b: Vec<f64> = (101..=110).map(f64::from).collect();
        // U = 0, mean 50, var 175, continuity-corrected z = 49.5 / sqrt(175)
        let z: f64 = 49.5 / 175f64.sqrt();
        let expected = 2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z));
        assert!((rank_sum_p(&a, &b) - expected).abs() < 1e-15);
        assert!(expected < 1e-3);
    }
}
