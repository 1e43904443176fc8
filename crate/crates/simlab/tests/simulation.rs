use pairank_core::{RankingConfig, Strategy};
use pairank_simlab::*;
use proptest::prelude::*;

fn with_strategy(strategy: Strategy, seed: u64, budget: Option<u64>) -> RankingConfig {
    let mut config = RankingConfig { seed, budget, ..RankingConfig::default() };
    config.acquisition.strategy = strategy;
    config
}

#[test]
fn exhaustive_scale_budget_recovers_the_order() {
    let gt = gen_ground_truth(30, LatentDistribution::Normal, 1).unwrap();
    let config = with_strategy(Strategy::Hybrid, 1, Some(435));
    let run = run_simulation(&config, &gt, None, &AnnotatorModel::oracle(), &Checkpoints::default()).unwrap();
    assert!(run.final_tau >= 0.9, "final tau {}", run.final_tau);
    assert_eq!(run.human_queries, 435);
}

#[test]
fn identical_inputs_give_identical_curves() {
    let gt = gen_ground_truth(80, LatentDistribution::Uniform, 5).unwrap();
    let config = RankingConfig { seed: 5, ..RankingConfig::default() };
    let model = AnnotatorModel::bradley_terry();
    let runs: Vec<RunResult> =
        (0..3).map(|_| run_simulation(&config, &gt, None, &model, &Checkpoints::default()).unwrap()).collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
    assert_eq!(runs[0].curve.len(), Checkpoints::default().steps(240).len());
}

#[test]
fn zero_budget_tau_averages_to_zero() {
    let taus: Vec<f64> = (0..200)
        .map(|seed| {
            let gt = gen_ground_truth(40, LatentDistribution::Normal, seed).unwrap();
            let config = RankingConfig { budget: Some(0), seed, ..RankingConfig::default() };
            run_simulation(&config, &gt, None, &AnnotatorModel::oracle(), &Checkpoints::default()).unwrap().final_tau
        })
        .collect();
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    // The standard deviation of tau for n=40 is about 0.11; the mean of 200 has SE ~0.008.
    assert!(mean.abs() < 0.04, "mean {mean}");
}

#[test]
fn more_budget_never_hurts_on_average() {
    let n = 60u64;
    let means: Vec<f64> = [1, 2, 3, 5]
        .iter()
        .map(|mult| {
            (0..10)
                .map(|seed| {
                    let gt = gen_ground_truth(n as usize, LatentDistribution::Normal, seed).unwrap();
                    let config = RankingConfig { budget: Some(mult * n), seed, ..RankingConfig::default() };
                    run_simulation(&config, &gt, None, &AnnotatorModel::oracle(), &Checkpoints::FinalOnly)
                        .unwrap()
                        .final_tau
                })
                .sum::<f64>()
                / 10.0
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
}

#[test]
fn hybrid_reaches_target_no_later_than_random() {
    let model = AnnotatorModel::oracle();
    let mut wins = 0;
    for seed in 0..20 {
        let gt = gen_ground_truth(60, LatentDistribution::Normal, 100 + seed).unwrap();
        let variants = [Strategy::Hybrid, Strategy::Random].map(|s| Variant {
            label: format!("{s:?}"),
            config: with_strategy(s, seed, None),
            priors: None,
        });
        let rows = compare_budget_to_target(&variants, &gt, &model, 0.6).unwrap();
        let (h, r) = (rows[0].steps.unwrap_or(u64::MAX), rows[1].steps.unwrap_or(u64::MAX));
        if h <= r {
            wins += 1;
        }
    }
    assert!(wins >= 16, "hybrid first in {wins}/20 seeds");
}

#[test]
fn target_edge_cases() {
    let gt = gen_ground_truth(40, LatentDistribution::Normal, 3).unwrap();
    let variant = Variant { label: "hybrid".into(), config: RankingConfig::default(), priors: None };
    let bt = AnnotatorModel::bradley_terry();
    let rows = compare_budget_to_target(std::slice::from_ref(&variant), &gt, &bt, 1.0).unwrap();
    assert_eq!(rows[0].steps, None);
    let rows = compare_budget_to_target(std::slice::from_ref(&variant), &gt, &bt, 0.0).unwrap();
    assert_eq!(rows[0].steps, Some(0));
    assert!(compare_budget_to_target(&[variant], &gt, &bt, 1.5).is_err());
}

#[test]
fn ablation_table_is_reproducible_and_exports() {
    let setup = AblationSetup { n: 40, runs: 2, base_seed: 3, ..AblationSetup::default() };
    let a = run_ablation(Hypothesis::H5, &setup).unwrap();
    assert_eq!(a, run_ablation(Hypothesis::H5, &setup).unwrap());
    assert_eq!(a.arms.len(), 5);
    assert!(a.arms.iter().all(|arm| arm.seeds == vec![3, 4]));

    let mut csv = Vec::new();
    write_ablation_csv(&a, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("hypothesis,arm,mean_tau,std_tau,runs,mean_human_queries,mean_auto_queries\n"));
    let json = serde_json::to_string(&a).unwrap();
    assert_eq!(serde_json::from_str::<AblationTable>(&json).unwrap(), a);
}

#[test]
fn corruption_rows_export() {
    let setup = AblationSetup { n: 40, runs: 2, ..corruption_setup() };
    let rows = corruption_sweep(&setup, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(rows.len(), 3);
    let mut csv = Vec::new();
    write_corruption_csv(&rows, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curves_are_well_formed(n in 2usize..25, budget in 1u64..60, seed in any::<u64>(), noise in 0.0f64..1.0) {
        let gt = gen_ground_truth(n, LatentDistribution::Normal, seed).unwrap();
        let config = RankingConfig { budget: Some(budget), seed, ..RankingConfig::default() };
        let checkpoints = Checkpoints::default();
        let run = run_simulation(&config, &gt, None, &AnnotatorModel::noisy(noise), &checkpoints).unwrap();
        let steps: Vec<u64> = run.curve.iter().map(|p| p.step).collect();
        prop_assert_eq!(steps, checkpoints.steps(budget));
        prop_assert!(run.curve.iter().all(|p| (-1.0..=1.0).contains(&p.tau)));
        prop_assert_eq!(run.final_tau, run.curve.last().unwrap().tau);
        prop_assert_eq!(run.human_queries + run.auto_queries, budget);
    }
}
