//! Outcome records, summary statistics, and paired significance tests.
//!
//! One [`ComparisonRecord`] captures both protocols' results on one edge-state
//! instance. Records aggregate into [`SummaryRow`]s per experiment cell, with
//! the paired comparison backed by a Wilcoxon signed-rank test and a
//! Hodges-Lehmann shift estimate.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("records mix experiment configurations: {0}")]
    MixedConfigs(String),
    #[error("coverage bound {c_max} is below the single-stage coverage {c_sn}")]
    InvariantViolation { c_sn: f64, c_max: f64 },
    #[error("sequential coverage {c_sq} exceeds a bound {c_max} already met by the single stage")]
    ImpossibleState { c_sq: f64, c_max: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-instance outcome of running both protocols on shared edge states.
/// Field order fixes the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub network: String,
    pub pp: f64,
    /// Resolved stage budget.
    pub budget: u32,
    pub ranking: String,
    pub instance_seed: u64,
    pub c_sn: u32,
    pub c_sq: u32,
    /// Exact coverage bound; absent when the oracle was infeasible.
    pub c_max: Option<u32>,
    pub gain_pct: Option<f64>,
    pub seeds_saved: u32,
    pub sn_steps: u32,
    pub sq_steps: u32,
    /// Semicolon-joined node labels of the oracle's witness seed set.
    pub optimal_seeds: String,
}

/// Aggregate over all records of one (network, pp, budget, ranking) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub network: String,
    pub pp: f64,
    pub budget: u32,
    pub ranking: String,
    pub instances: usize,
    pub mean_c_sn: f64,
    /// Mean single-stage coverage as a percentage of the mean bound.
    pub pct_of_max: Option<f64>,
    pub mean_c_sq: f64,
    /// Ratio of mean sequential to mean single-stage coverage.
    pub increase: f64,
    /// Gain computed on the cell means.
    pub gain_pct: Option<f64>,
    /// Mean of the per-instance gains.
    pub mean_gain_pct: Option<f64>,
    pub frac_sq_gt_sn: f64,
    /// Fraction of instances whose per-instance gain exceeds five percent.
    pub frac_improve_gt_5pct: Option<f64>,
    /// Mean saved seeds as a percentage of the budget.
    pub mean_seeds_saved_pct: f64,
    pub wilcoxon_p: f64,
    pub hl_delta: f64,
}

/// Result of a paired Wilcoxon signed-rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Sum of ranks of the positive differences (midranks under ties).
    pub statistic: f64,
    /// Two-sided p-value: exact while at most 25 non-zero differences,
    /// normal approximation with tie and continuity corrections beyond.
    pub p_value: f64,
    /// Hodges-Lehmann estimate of the median difference (zeros included).
    pub delta: f64,
    /// Differences remaining after zero removal.
    pub n_effective: usize,
}

/// Relative headroom captured by the sequential protocol, in percent:
/// `(c_sq - c_sn) / (c_max - c_sn) * 100`. Zero headroom with no improvement
/// is a gain of zero; zero headroom with an improvement is impossible for
/// coverages produced by this crate and reported as an error.
pub fn gain(c_sq: f64, c_sn: f64, c_max: f64) -> Result<f64, StatsError> {
    if c_max < c_sn {
        return Err(StatsError::InvariantViolation { c_sn, c_max });
    }
    if c_max == c_sn {
        if c_sq > c_sn {
            return Err(StatsError::ImpossibleState { c_sq, c_max });
        }
        return Ok(0.0);
    }
    Ok((c_sq - c_sn) / (c_max - c_sn) * 100.0)
}

/// Worst-case exact optimum consistent with a greedy estimate `c`: greedy
/// maximum coverage is within a factor `1 - 1/e` of optimal, so the optimum
/// is at most `c * e / (e - 1)`. Coverage cannot be negative.
pub fn greedy_upper_bound(c: f64) -> f64 {
    assert!(c >= 0.0, "coverage {c} is negative");
    c * std::f64::consts::E / (std::f64::consts::E - 1.0)
}

fn walsh_median_naive(d: &[f64]) -> f64 {
    let n = d.len();
    let mut sums = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            sums.push(d[i] + d[j]);
        }
    }
    sums.sort_unstable_by(f64::total_cmp);
    let m = sums.len();
    if m % 2 == 1 {
        sums[m / 2] / 2.0
    } else {
        (sums[m / 2 - 1] + sums[m / 2]) / 4.0
    }
}

/// Pairs `i <= j` with `d[i] + d[j] <= x`, for ascending `d`. The predicate
/// evaluates the sum itself so its rounding matches the selection's.
fn count_sums_le(d: &[f64], x: f64) -> u64 {
    let mut count = 0u64;
    for i in 0..d.len() {
        count += d[i..].partition_point(|&dj| d[i] + dj <= x) as u64;
    }
    count
}

/// `k`-th smallest (0-indexed) Walsh sum `d[i] + d[j]`, `i <= j`, by value
/// bisection: converge to adjacent floats, then snap to the smallest actual
/// sum above the lower bound.
fn kth_walsh_sum(d: &[f64], k: u64) -> f64 {
    let n = d.len();
    let mut lo = 2.0 * d[0];
    if count_sums_le(d, lo) >= k + 1 {
        return lo;
    }
    let mut hi = 2.0 * d[n - 1];
    loop {
        let mid = lo + (hi - lo) / 2.0;
        if !(lo < mid && mid < hi) {
            break;
        }
        if count_sums_le(d, mid) >= k + 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        let row = &d[i..];
        let idx = row.partition_point(|&dj| d[i] + dj <= lo);
        if idx < row.len() {
            best = best.min(d[i] + row[idx]);
        }
    }
    best
}

fn walsh_median_select(d: &[f64]) -> f64 {
    let m = d.len() as u64 * (d.len() as u64 + 1) / 2;
    if m % 2 == 1 {
        kth_walsh_sum(d, m / 2) / 2.0
    } else {
        (kth_walsh_sum(d, m / 2 - 1) + kth_walsh_sum(d, m / 2)) / 4.0
    }
}

const WALSH_NAIVE_LIMIT: usize = 1500;

/// Hodges-Lehmann location estimate: the median of all pairwise averages
/// `(d[i] + d[j]) / 2` with `i <= j`, the diagonal included.
pub fn hodges_lehmann(diffs: &[f64]) -> Result<f64, StatsError> {
    if diffs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut d = diffs.to_vec();
    d.sort_unstable_by(f64::total_cmp);
    if d.len() <= WALSH_NAIVE_LIMIT {
        Ok(walsh_median_naive(&d))
    } else {
        Ok(walsh_median_select(&d))
    }
}

/// Midranks of `|d|` ascending plus the tie-group sizes. Ranks are 1-based;
/// tied absolute values share the mean of the positions they occupy.
fn midranks(abs_sorted: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = abs_sorted.len();
    let mut ranks = vec![0.0; n];
    let mut groups = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && abs_sorted[j] == abs_sorted[i] {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = mid;
        }
        groups.push(j - i);
        i = j;
    }
    (ranks, groups)
}

const EXACT_WILCOXON_LIMIT: usize = 25;

/// Exact two-sided p-value by enumerating the permutation distribution of
/// the rank sum, conditional on the observed ties. Ranks are doubled so
/// midranks become integers; counts stay within u64 for `n <= 25`.
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|&r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut dist = vec![0u64; total + 1];
    dist[0] = 1;
    for &r in &doubled {
        for w in (r..=total).rev() {
            dist[w] += dist[w - r];
        }
    }
    let w2 = (2.0 * w_plus).round() as usize;
    let denom = (1u64 << ranks.len()) as f64;
    let p_le: u64 = dist[..=w2].iter().sum();
    let p_ge: u64 = dist[w2..].iter().sum();
    let p = 2.0 * (p_le.min(p_ge) as f64 / denom);
    p.min(1.0)
}

/// Normal approximation with tie correction and a continuity correction of
/// half a rank toward the mean.
fn normal_two_sided_p(n: usize, groups: &[usize], w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = groups
        .iter()
        .map(|&t| {
            let t = t as f64;
            (t * t * t - t) / 48.0
        })
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let centered = w_plus - mean;
    let corrected = if centered > 0.0 {
        centered - 0.5
    } else if centered < 0.0 {
        centered + 0.5
    } else {
        0.0
    };
    let z = corrected / var.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0)
}

/// Paired Wilcoxon signed-rank test of `first` against `second` per pair.
/// Zero differences are dropped from the test (but kept for the location
/// estimate); with nothing left the test is vacuous and `p = 1`.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<TestResult, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let diffs: Vec<f64> = pairs.iter().map(|&(a, b)| a - b).collect();
    let delta = hodges_lehmann(&diffs)?;
    let mut nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n_eff = nonzero.len();
    if n_eff == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            delta,
            n_effective: 0,
        });
    }
    nonzero.sort_unstable_by(|a, b| a.abs().total_cmp(&b.abs()));
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, groups) = midranks(&abs);
    let w_plus: f64 = nonzero
        .iter()
        .zip(ranks.iter())
        .filter(|(&d, _)| d > 0.0)
        .map(|(_, &r)| r)
        .sum();
    let p_value = if n_eff <= EXACT_WILCOXON_LIMIT {
        exact_two_sided_p(&ranks, w_plus)
    } else {
        normal_two_sided_p(n_eff, &groups, w_plus)
    };
    Ok(TestResult {
        statistic: w_plus,
        p_value,
        delta,
        n_effective: n_eff,
    })
}

fn config_key(r: &ComparisonRecord) -> (String, f64, u32, String) {
    (r.network.clone(), r.pp, r.budget, r.ranking.clone())
}

/// Aggregates records that all belong to one experiment cell.
pub fn summarize_config(records: &[ComparisonRecord]) -> Result<SummaryRow, StatsError> {
    let first = records.first().ok_or(StatsError::EmptyInput)?;
    let key = config_key(first);
    for r in records {
        if config_key(r) != key {
            return Err(StatsError::MixedConfigs(format!(
                "{}/{}/{}/{} vs {}/{}/{}/{}",
                key.0, key.1, key.2, key.3, r.network, r.pp, r.budget, r.ranking
            )));
        }
    }
    let n = records.len();
    let nf = n as f64;
    let sum_sn: u64 = records.iter().map(|r| r.c_sn as u64).sum();
    let sum_sq: u64 = records.iter().map(|r| r.c_sq as u64).sum();
    let mean_c_sn = sum_sn as f64 / nf;
    let mean_c_sq = sum_sq as f64 / nf;
    let have_oracle = records.iter().all(|r| r.c_max.is_some());
    let (pct_of_max, gain_pct, mean_gain_pct, frac_improve_gt_5pct) = if have_oracle {
        let sum_max: u64 = records.iter().map(|r| r.c_max.unwrap() as u64).sum();
        let mean_c_max = sum_max as f64 / nf;
        let mut gain_sum = 0.0;
        let mut improved = 0usize;
        for r in records {
            let g = match r.gain_pct {
                Some(g) => g,
                None => gain(r.c_sq as f64, r.c_sn as f64, r.c_max.unwrap() as f64)?,
            };
            gain_sum += g;
            if g > 5.0 {
                improved += 1;
            }
        }
        (
            Some(mean_c_sn / mean_c_max * 100.0),
            Some(gain(mean_c_sq, mean_c_sn, mean_c_max)?),
            Some(gain_sum / nf),
            Some(improved as f64 / nf),
        )
    } else {
        (None, None, None, None)
    };
    let frac_sq_gt_sn = records.iter().filter(|r| r.c_sq > r.c_sn).count() as f64 / nf;
    let saved_pct_sum: f64 = records
        .iter()
        .map(|r| r.seeds_saved as f64 / r.budget as f64 * 100.0)
        .sum();
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.c_sq as f64, r.c_sn as f64))
        .collect();
    let test = wilcoxon_signed_rank(&pairs)?;
    Ok(SummaryRow {
        network: key.0,
        pp: key.1,
        budget: key.2,
        ranking: key.3,
        instances: n,
        mean_c_sn,
        pct_of_max,
        mean_c_sq,
        increase: mean_c_sq / mean_c_sn,
        gain_pct,
        mean_gain_pct,
        frac_sq_gt_sn,
        frac_improve_gt_5pct,
        mean_seeds_saved_pct: saved_pct_sum / nf,
        wilcoxon_p: test.p_value,
        hl_delta: test.delta,
    })
}

/// Aggregates a mixed record stream into one row per cell, cells ordered by
/// first appearance.
pub fn summarize_all(records: &[ComparisonRecord]) -> Result<Vec<SummaryRow>, StatsError> {
    if records.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut order: Vec<(String, f64, u32, String)> = Vec::new();
    let mut buckets: std::collections::HashMap<(String, u64, u32, String), Vec<ComparisonRecord>> =
        std::collections::HashMap::new();
    for r in records {
        let key = (r.network.clone(), r.pp.to_bits(), r.budget, r.ranking.clone());
        let bucket = buckets.entry(key).or_default();
        if bucket.is_empty() {
            order.push(config_key(r));
        }
        bucket.push(r.clone());
    }
    order
        .iter()
        .map(|(net, pp, budget, ranking)| {
            let key = (net.clone(), pp.to_bits(), *budget, ranking.clone());
            summarize_config(&buckets[&key])
        })
        .collect()
}

pub fn write_records_csv(path: &Path, records: &[ComparisonRecord]) -> Result<(), StatsError> {
    let mut writer = csv::Writer::from_path(path)?;
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<ComparisonRecord>, StatsError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), StatsError> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>, StatsError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
