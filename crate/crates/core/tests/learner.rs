//! Statistical and end-to-end checks of the learner.

use ndarray::{arr1, arr2};

use etc_core::estimation::{collect_iteration, estimate_densities, TrajectoryDataset};
use etc_core::learner::{
    candidate_score, grid_class, mixture_policy_value, optimistic_plan, perturbed_class, run_etc, BetaPreset,
    CandidateClass, EtcConfig, KernelEntry, PlanCache,
};
use etc_core::operators::OperatorConfig;
use etc_core::pomdp::fixtures::stationary;
use etc_core::pomdp::{
    episode_return, exact_policy_value, generate_lowrank_pomdp, optimal_policy_bruteforce, sample_episode, stream_rng,
    Behavior, Dims, GenSpec, Policy, PolicyClass, TabularPomdp, POLICY_ENUMERATION_CAP,
};

fn bench_spec() -> GenSpec {
    GenSpec {
        states: 4,
        actions: 2,
        observations: 3,
        rank: 2,
        horizon: 3,
        future: 1,
        past: 1,
    }
}

fn perturbed(seed: u64, count: usize) -> (TabularPomdp<f64>, CandidateClass<f64>) {
    let (truth, factors) = generate_lowrank_pomdp::<f64>(&bench_spec(), seed, 1000).unwrap();
    let class = perturbed_class(
        &truth,
        Some(&factors),
        count,
        0.5,
        seed + 1,
        50,
        &OperatorConfig::default(),
    )
    .unwrap();
    (truth, class)
}

#[test]
fn mixture_value_matches_simulation() {
    let (truth, _) = perturbed(31, 0);
    let d = truth.dims();
    let class = PolicyClass::HistoryTable;
    let free = class.free_entries(&d);
    let policies: Vec<Policy> = [0usize, 1, 7]
        .iter()
        .map(|&x| class.build(&d, &(0..free).map(|i| (x >> (i % 3)) & 1).collect::<Vec<_>>()))
        .collect();
    let exact = mixture_policy_value(&policies, &truth).unwrap();

    let episodes = 30_000;
    let returns: Vec<f64> = (0..episodes)
        .map(|e| {
            let mut rng = stream_rng(5, &[e as u64]);
            let p = &policies[e % policies.len()];
            episode_return(&truth, &sample_episode(&truth, p, &mut rng, d.horizon).unwrap())
        })
        .collect();
    let mean = returns.iter().sum::<f64>() / episodes as f64;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (episodes - 1) as f64;
    let stderr = (var / episodes as f64).sqrt();
    assert!(
        (mean - exact).abs() <= 3.0 * stderr,
        "simulated {mean} ± {stderr}, exact {exact}"
    );
}

#[test]
fn true_model_scores_lowest_with_enough_data() {
    let (truth, class) = perturbed(2024, 3);
    let d = truth.dims();
    let mut separated = 0;
    for seed in 0..20 {
        let mut data = TrajectoryDataset::new(d).unwrap();
        for _ in 0..10_000 {
            collect_iteration(&truth, Behavior::UniformRandom, &mut data, seed).unwrap();
        }
        let est = estimate_densities::<f64>(&data).unwrap();
        let scores: Vec<f64> = (0..class.len())
            .map(|i| candidate_score(class.ops(i), &est).unwrap())
            .collect();
        if scores[1..].iter().all(|&s| s > scores[0]) {
            separated += 1;
        }
    }
    assert!(separated >= 18, "true model scored lowest in {separated}/20 seeds");
}

#[test]
fn planner_is_optimistic_over_every_subset() {
    let (truth, class) = perturbed(77, 4);
    let (_, v_star) = optimal_policy_bruteforce(&truth, PolicyClass::HistoryTable, POLICY_ENUMERATION_CAP).unwrap();
    let best: Vec<f64> = class
        .models()
        .iter()
        .map(|m| {
            optimal_policy_bruteforce(m, PolicyClass::HistoryTable, POLICY_ENUMERATION_CAP)
                .unwrap()
                .1
        })
        .collect();
    let mut cache = PlanCache::new(class.len(), PolicyClass::HistoryTable, POLICY_ENUMERATION_CAP);
    for mask in 1u32..(1 << class.len()) {
        let set: Vec<usize> = (0..class.len()).filter(|i| mask >> i & 1 == 1).collect();
        let (policy, chosen, value) = optimistic_plan(&class, &set, &mut cache).unwrap();
        let top = set.iter().map(|&i| best[i]).fold(f64::NEG_INFINITY, f64::max);
        assert!((value - top).abs() < 1e-9, "set {set:?}: planned {value}, best {top}");
        assert!((exact_policy_value(class.model(chosen), &policy).unwrap() - value).abs() < 1e-9);
        if set.contains(&0) {
            assert!(value >= v_star - 1e-9);
        }
    }
}

/// Two noisy states; observing the second pays 1. At step 1, action 1 moves
/// from the first state to the second with probability `p` (swept by the
/// grid) while action 0 does so half the time.
fn switch_model() -> TabularPomdp<f64> {
    let dims = Dims {
        states: 2,
        actions: 2,
        observations: 2,
        horizon: 3,
        future: 1,
        past: 1,
    };
    stationary(
        dims,
        &[arr2(&[[0.5, 0.5], [0.1, 0.9]]), arr2(&[[0.5, 0.5], [0.5, 0.5]])],
        &arr2(&[[0.85, 0.15], [0.15, 0.85]]),
        &arr1(&[0.0, 1.0]),
        arr1(&[1.0, 0.0]),
    )
}

#[test]
fn wrong_candidates_plan_badly_and_are_eliminated() {
    let entry = KernelEntry {
        step: 1,
        action: 1,
        from: 0,
        to: 1,
    };
    let class = grid_class(
        &switch_model(),
        entry,
        &[0.05, 0.5, 0.95],
        Some(0),
        &OperatorConfig::default(),
    )
    .unwrap();
    let truth = class.model(0).clone();
    let (optimal, v_star) =
        optimal_policy_bruteforce(&truth, PolicyClass::HistoryTable, POLICY_ENUMERATION_CAP).unwrap();
    let (misled, _) =
        optimal_policy_bruteforce(class.model(2), PolicyClass::HistoryTable, POLICY_ENUMERATION_CAP).unwrap();
    let gap = v_star - exact_policy_value(&truth, &misled).unwrap();
    assert!(
        gap > 0.1 * v_star,
        "the most optimistic candidate's plan loses only {gap}"
    );
    assert_ne!(optimal, misled);

    for seed in 0..5 {
        // the true model needs c_beta of at most 0.08 on these seeds; wrong
        // candidates leave the set by t = 200 at 0.12
        let mut cfg = EtcConfig::new(2000, seed);
        cfg.beta = BetaPreset::GoodEvent;
        cfg.c_beta = 0.12;
        let state = run_etc(&truth, &class, &cfg).unwrap();
        assert!(state.log[0].suboptimality >= 0.5 * gap, "first plan already optimal");
        assert!(
            state.log.iter().all(|r| r.theta_star_in_set),
            "seed {seed} dropped the true model"
        );
        let last = state.log.last().unwrap();
        assert_eq!(state.confidence_set, vec![0], "seed {seed}");
        assert_eq!(last.suboptimality, 0.0);
        assert!(
            last.mixture_suboptimality <= 0.1 * gap,
            "seed {seed}: {}",
            last.mixture_suboptimality
        );
        assert!(last.mixture_suboptimality < state.log[199].mixture_suboptimality);
    }
}
