//! Paired bootstrap, Cliff's delta and sign-flip permutation tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDiff {
    pub mean_diff: f64,
    pub ci95: Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffsDelta {
    pub delta: f64,
    pub ci95: Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_diff: f64,
    pub ci95: Interval,
    pub cliffs_delta: CliffsDelta,
    pub perm_p: f64,
}

fn check_values(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(StatsError::Empty);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::InvalidValue("non-finite sample".into()));
    }
    Ok(())
}

fn check_paired(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    check_values(a)?;
    check_values(b)
}

fn check_resamples(resamples: usize) -> Result<()> {
    if resamples == 0 {
        return Err(StatsError::InvalidValue("resamples must be at least 1".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Linearly interpolated quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn percentile_interval(mut stats: Vec<f64>) -> Interval {
    stats.sort_by(f64::total_cmp);
    Interval { lower: quantile_sorted(&stats, 0.025), upper: quantile_sorted(&stats, 0.975) }
}

/// Mean of `a - b` with a 95% percentile CI from resampling pair indices.
pub fn paired_bootstrap_diff(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<BootstrapDiff> {
    check_paired(a, b)?;
    check_resamples(resamples)?;
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let (mut sa, mut sb) = (0.0, 0.0);
        for _ in 0..n {
            let k = rng.random_range(0..n);
            sa += a[k];
            sb += b[k];
        }
        stats.push(sa / n as f64 - sb / n as f64);
    }
    Ok(BootstrapDiff { mean_diff: mean(a) - mean(b), ci95: percentile_interval(stats) })
}

/// `(#{a_i > b_j} - #{a_i < b_j}) / (|a| |b|)`, via a sorted copy of `b`.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    check_values(a)?;
    check_values(b)?;
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(cliffs_delta_sorted(a, &sorted))
}

fn cliffs_delta_sorted(a: &[f64], sorted_b: &[f64]) -> f64 {
    let mut dominance: i64 = 0;
    for &x in a {
        let below = sorted_b.partition_point(|&y| y < x);
        let not_above = sorted_b.partition_point(|&y| y <= x);
        let above = sorted_b.len() - not_above;
        dominance += below as i64 - above as i64;
    }
    dominance as f64 / (a.len() * sorted_b.len()) as f64
}

/// Cliff's delta with a percentile CI from resampling each sample independently.
pub fn cliffs_delta_ci(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<CliffsDelta> {
    let delta = cliffs_delta(a, b)?;
    check_resamples(resamples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for x in ra.iter_mut() {
            *x = a[rng.random_range(0..a.len())];
        }
        for y in rb.iter_mut() {
            *y = b[rng.random_range(0..b.len())];
        }
        rb.sort_by(f64::total_cmp);
        stats.push(cliffs_delta_sorted(&ra, &rb));
    }
    Ok(CliffsDelta { delta, ci95: percentile_interval(stats) })
}

/// Two-tailed paired permutation test: each reshuffle swaps `a_i` and `b_i`
/// with probability 1/2, i.e. flips the sign of the paired difference.
pub fn permutation_test(a: &[f64], b: &[f64], reshuffles: usize, seed: u64) -> Result<f64> {
    check_paired(a, b)?;
    check_resamples(reshuffles)?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let observed = mean(&diffs).abs();
    // Reshuffles that reproduce the observed statistic up to summation order count as ties.
    let tol = 1e-12 * observed.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extreme = 0usize;
    for _ in 0..reshuffles {
        let s: f64 = diffs.iter().map(|&d| if rng.random::<bool>() { d } else { -d }).sum();
        if (s / diffs.len() as f64).abs() >= observed - tol {
            extreme += 1;
        }
    }
    Ok((1 + extreme) as f64 / (1 + reshuffles) as f64)
}

/// Full comparison of two paired correlation samples (method A vs method B).
pub fn compare(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<ComparisonReport> {
    let boot = paired_bootstrap_diff(a, b, resamples, seed)?;
    let cliffs = cliffs_delta_ci(a, b, resamples, seed.wrapping_add(1))?;
    let perm_p = permutation_test(a, b, resamples, seed.wrapping_add(2))?;
    Ok(ComparisonReport {
        n: a.len(),
        mean_a: mean(a),
        mean_b: mean(b),
        mean_diff: boot.mean_diff,
        ci95: boot.ci95,
        cliffs_delta: cliffs,
        perm_p,
    })
}

impl ComparisonReport {
    /// Single-line human-readable summary.
    pub fn table_row(&self, label: &str) -> String {
        format!(
            "{label:<12} A={:.3} B={:.3} diff={:+.3} [{:.3}, {:.3}] delta={:+.3} [{:.3}, {:.3}] p={:.4}",
            self.mean_a,
            self.mean_b,
            self.mean_diff,
            self.ci95.lower,
            self.ci95.upper,
            self.cliffs_delta.delta,
            self.cliffs_delta.ci95.lower,
            self.cliffs_delta.ci95.upper,
            self.perm_p
        )
    }
}
