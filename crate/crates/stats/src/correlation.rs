//! Kendall's tau-b, Spearman's rho and Pearson's r.

use std::cmp::Ordering;

use crate::error::{Result, StatsError};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(StatsError::TooShort { len: a.len(), min: 2 });
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(StatsError::InvalidValue("NaN in correlation input".into()));
    }
    Ok(())
}

/// Sum of `t(t-1)/2` over runs of equal values in an already sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: impl IntoIterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for v in sorted {
        if prev.as_ref() == Some(&v) {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(v);
    }
    total + run * (run + 1) / 2
}

/// Sorts `v` in place, returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
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

/// Kendall's tau-b in `O(n log n)` (Knight's algorithm).
///
/// Returns [`StatsError::ZeroVariance`] when either input is constant.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as u64;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then_with(|| b[i].total_cmp(&b[j])));

    let ties_a = tied_pairs(order.iter().map(|&i| a[i]));
    let ties_joint = tied_pairs(order.iter().map(|&i| (a[i], b[i])));
    let mut ys: Vec<f64> = order.iter().map(|&i| b[i]).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = merge_count(&mut ys, &mut buf);
    let ties_b = tied_pairs(ys.iter().copied());

    let total = n * (n - 1) / 2;
    let denom = ((total - ties_a) as f64 * (total - ties_b) as f64).sqrt();
    if denom == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let s = total as i128 - ties_a as i128 - ties_b as i128 + ties_joint as i128 - 2 * swaps as i128;
    Ok(s as f64 / denom)
}

/// Ranks starting at 1, with ties given their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // Positions start..end share ranks start+1..=end.
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

pub fn pearson_r(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of tie-averaged ranks.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    pearson_r(&average_ranks(a), &average_ranks(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_abs_diff_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn kendall_errors() {
        assert_eq!(
            kendall_tau(&[1.0, 2.0], &[1.0]).unwrap_err(),
            StatsError::LengthMismatch { left: 2, right: 1 }
        );
        assert!(matches!(kendall_tau(&[1.0], &[1.0]), Err(StatsError::TooShort { .. })));
        assert_eq!(kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(), StatsError::ZeroVariance);
    }

    #[test]
    fn kendall_with_ties_matches_tau_b() {
        // x = [1,1,2,3], y = [1,2,2,3]: C=4, D=0, ties only in x: 1, only in y: 1.
        let t = kendall_tau(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(t, 4.0 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn spearman_pearson_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(spearman_rho(&a, &[1.0, 3.0, 2.0, 4.0]).unwrap(), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(spearman_rho(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson_r(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson_r(&a, &neg).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(pearson_r(&a, &[2.0; 4]).unwrap_err(), StatsError::ZeroVariance);
        assert_eq!(spearman_rho(&a, &[2.0; 4]).unwrap_err(), StatsError::ZeroVariance);
    }

    #[test]
    fn average_rank_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }
}
