use pairank_stats::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sign(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Tau-b from its definition over all pairs.
fn brute_kendall(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut n1, mut n2) = (0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let (sa, sb) = (sign(a[i] - a[j]), sign(b[i] - b[j]));
            s += sa * sb;
            n1 += sa.abs();
            n2 += sb.abs();
        }
    }
    s as f64 / ((n1 as f64) * (n2 as f64)).sqrt()
}

fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Classic rank-difference formula, valid without ties.
fn brute_spearman_untied(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64], i: usize| v.iter().filter(|&&x| x < v[i]).count() as f64;
    let n = a.len() as f64;
    let d2: f64 = (0..a.len()).map(|i| (rank(a, i) - rank(b, i)).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn brute_cliffs(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for x in a {
        for y in b {
            s += sign(x - y);
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn correlations_match_definitions_on_all_permutations() {
    for n in 2..=6 {
        let base: Vec<f64> = (0..n).map(|k| k as f64).collect();
        for p in permutations(n) {
            let other: Vec<f64> = p.iter().map(|&k| k as f64).collect();
            let tau = kendall_tau(&base, &other).unwrap();
            assert!((tau - brute_kendall(&base, &other)).abs() < 1e-12, "{other:?}");
            let rho = spearman_rho(&base, &other).unwrap();
            assert!((rho - brute_spearman_untied(&base, &other)).abs() < 1e-12, "{other:?}");
            let r = pearson_r(&base, &other).unwrap();
            assert!((r - brute_pearson(&base, &other)).abs() < 1e-12, "{other:?}");
        }
    }
}

#[test]
fn kendall_matches_definition_on_all_tied_vectors_of_length_five() {
    // Every vector over {0,1,2}^5 against every other, skipping constant ones.
    let vectors: Vec<Vec<f64>> = (0..243)
        .map(|mut code| {
            (0..5)
                .map(|_| {
                    let d = code % 3;
                    code /= 3;
                    d as f64
                })
                .collect()
        })
        .filter(|v: &Vec<f64>| v.iter().any(|&x| x != v[0]))
        .collect();
    for a in &vectors {
        for b in &vectors {
            let fast = kendall_tau(a, b).unwrap();
            assert!((fast - brute_kendall(a, b)).abs() < 1e-12, "{a:?} {b:?}");
        }
    }
}

proptest! {
    #[test]
    fn kendall_matches_definition_with_ties(pairs in prop::collection::vec((0u8..5, 0u8..5), 2..40)) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        match kendall_tau(&a, &b) {
            Ok(t) => prop_assert!((t - brute_kendall(&a, &b)).abs() < 1e-12),
            Err(e) => prop_assert_eq!(e, StatsError::ZeroVariance),
        }
    }

    #[test]
    fn correlations_bounded_and_transform_invariant(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let a_affine: Vec<f64> = a.iter().map(|x| scale * x + shift).collect();
        let a_monotone: Vec<f64> = a.iter().map(|x| x.powi(3) + x).collect();
        if let (Ok(t), Ok(rho), Ok(r)) = (kendall_tau(&a, &b), spearman_rho(&a, &b), pearson_r(&a, &b)) {
            for v in [t, rho, r] {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
            prop_assert!((kendall_tau(&a_monotone, &b).unwrap() - t).abs() < 1e-12);
            prop_assert!((spearman_rho(&a_monotone, &b).unwrap() - rho).abs() < 1e-12);
            prop_assert!((pearson_r(&a_affine, &b).unwrap() - r).abs() < 1e-9);
        }
    }

    #[test]
    fn cliffs_matches_cross_pair_count(
        a in prop::collection::vec(0u8..10, 1..=20),
        b in prop::collection::vec(0u8..10, 1..=20),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let d = cliffs_delta(&a, &b).unwrap();
        prop_assert!((d - brute_cliffs(&a, &b)).abs() < 1e-12);
        prop_assert!((cliffs_delta(&b, &a).unwrap() + d).abs() < 1e-12);
    }

    #[test]
    fn difficulty_fractions_sum_to_one(agreements in prop::collection::vec(0.0f64..=1.0, 1..200)) {
        let bins = difficulty_bins(agreements.iter().copied()).unwrap();
        prop_assert!((bins.easy + bins.middle + bins.hard - 1.0).abs() <= 1e-12);
        prop_assert!(bins.middle >= 0.0);
    }
}

fn fixture(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| 0.6 + 0.2 * rng.random::<f64>()).collect();
    let b: Vec<f64> = a.iter().map(|x| x - 0.25 + 0.3 * rng.random::<f64>()).collect();
    (a, b)
}

#[test]
fn bootstrap_constant_shift_has_zero_width() {
    let (_, b) = fixture(3, 21);
    let a: Vec<f64> = b.iter().map(|x| x + 0.1).collect();
    let r = paired_bootstrap_diff(&a, &b, 20_000, 7).unwrap();
    assert!((r.mean_diff - 0.1).abs() < 1e-12);
    assert!((r.ci95.lower - 0.1).abs() < 1e-12 && (r.ci95.upper - 0.1).abs() < 1e-12);
    assert!(r.ci95.width() < 1e-12);
}

#[test]
fn bootstrap_ci_stable_and_contains_estimate() {
    let (a, b) = fixture(5, 21);
    let small = paired_bootstrap_diff(&a, &b, 2_000, 1).unwrap();
    let large = paired_bootstrap_diff(&a, &b, 20_000, 1).unwrap();
    assert!(small.ci95.contains(small.mean_diff));
    assert!(large.ci95.contains(large.mean_diff));
    assert!((small.ci95.lower - large.ci95.lower).abs() < 0.01);
    assert!((small.ci95.upper - large.ci95.upper).abs() < 0.01);
}

#[test]
fn permutation_p_uniform_under_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 200;
    let mut rejections = 0;
    for t in 0..trials {
        let a: Vec<f64> = (0..21).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..21).map(|_| rng.random::<f64>()).collect();
        let p = permutation_test(&a, &b, 2_000, t).unwrap();
        assert!(p > 0.0 && p <= 1.0);
        if p < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    assert!((0.01..=0.10).contains(&rate), "rejection rate {rate}");
}

#[test]
fn comparison_report_round_trips_as_json() {
    let (a, b) = fixture(8, 21);
    let report = compare(&a, &b, 2_000, 4).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: ComparisonReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert!((-1.0..=1.0).contains(&report.cliffs_delta.delta));
}

#[test]
fn agreement_matrix_from_noisy_orders() {
    let items: Vec<String> = (0..12).map(|k| format!("img{k:02}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sessions: Vec<SessionRanking> = (0..7)
        .map(|s| {
            let mut order = items.clone();
            for _ in 0..3 {
                let k = rng.random_range(0..order.len() - 1);
                order.swap(k, k + 1);
            }
            SessionRanking::from_order(format!("s{s}"), format!("annotator{s}"), &order)
        })
        .collect();
    for metric in Metric::ALL {
        let m = agreement_matrix(&sessions, metric).unwrap();
        assert_eq!(m.pairs.len(), 21);
        assert!(m.values().iter().all(|&v| v > 0.5 && v <= 1.0));
    }
}
