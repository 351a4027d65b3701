//! Property tests over randomly generated low-rank models.

use ndarray::Array2;
use proptest::prelude::*;

use etc_core::linalg::max_abs_diff;
use etc_core::operators::{OperatorConfig, OperatorSet};
use etc_core::pomdp::policy::decode_digits;
use etc_core::pomdp::{
    exact_policy_value, exact_trajectory_distribution, generate_lowrank_pomdp, sequence_probability, GenSpec,
    PolicyClass, TabularPomdp,
};

/// Shapes that admit a sufficient forward emission with two actions.
fn shapes() -> impl Strategy<Value = (GenSpec, u64)> {
    (1usize..=4, 2usize..=3, 1usize..=3, 0usize..=1, 0usize..=1, any::<u64>()).prop_filter_map(
        "window too short to identify the states",
        |(s, o, h, k, l, seed)| {
            let rank = s.min(2);
            let enough = if k == 0 { o >= s } else { o * rank >= s };
            enough.then_some((
                GenSpec {
                    states: s,
                    actions: 2,
                    observations: o,
                    rank,
                    horizon: h,
                    future: k,
                    past: l,
                },
                seed,
            ))
        },
    )
}

fn model(spec: &GenSpec, seed: u64) -> (TabularPomdp<f64>, OperatorSet<f64>) {
    let (m, _) = generate_lowrank_pomdp::<f64>(spec, seed, 1000).expect("shape admits a sufficient model");
    let ops = OperatorSet::build(&m, &OperatorConfig::default()).expect("generated models are sufficient");
    (m, ops)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_are_stochastic((spec, seed) in shapes()) {
        let (m, _) = model(&spec, seed);
        let d = m.dims();
        for h in 1..=d.last_transition_step() {
            for a in 0..d.actions {
                for row in m.transition(h, a).rows() {
                    prop_assert!((row.sum() - 1.0).abs() < 1e-12);
                    prop_assert!(row.iter().all(|&x| x >= 0.0));
                }
            }
        }
        for h in 1..=d.last_emission_step() {
            for s in 0..d.states {
                prop_assert!((m.emission(h).column(s).sum() - 1.0).abs() < 1e-12);
            }
        }
        prop_assert!((m.mu1().sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_laws_sum_to_one((spec, seed) in shapes(), acts in proptest::collection::vec(0usize..2, 3)) {
        let (m, ops) = model(&spec, seed);
        let n = m.horizon();
        let acts = &acts[..n];
        let exact = exact_trajectory_distribution(&m, acts).unwrap();
        prop_assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let dummy = vec![1; m.future_len()];
        let o = m.observations();
        let total: f64 = (0..o.pow(n as u32 + 1))
            .map(|i| ops.trajectory_probability(&decode_digits(i, o, n + 1), acts, &dummy).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn operators_reproduce_sequence_probabilities((spec, seed) in shapes(), obs_index in any::<usize>(), act_index in any::<usize>()) {
        let (m, ops) = model(&spec, seed);
        let n = m.horizon() + 1;
        let obs = decode_digits(obs_index % m.observations().pow(n as u32), m.observations(), n);
        let acts = decode_digits(act_index % 2usize.pow(n as u32 - 1), 2, n - 1);
        let exact = sequence_probability(&m, &obs, &acts).unwrap();
        let via_ops = ops.trajectory_probability(&obs, &acts, &vec![0; m.future_len()]).unwrap();
        prop_assert!((exact - via_ops).abs() < 1e-10, "{exact} vs {via_ops}");
    }

    #[test]
    fn pseudo_inverse_is_a_left_inverse((spec, seed) in shapes()) {
        let (m, ops) = model(&spec, seed);
        for h in 1..=m.horizon() {
            let eye = Array2::<f64>::eye(m.states());
            prop_assert!(max_abs_diff(ops.u_dag(h).dot(&ops.u(h)).view(), eye.view()) < 1e-9);
        }
    }

    #[test]
    fn operator_values_match_exact_values((spec, seed) in shapes(), policy_index in any::<usize>()) {
        let (m, ops) = model(&spec, seed);
        let d = m.dims();
        let class = PolicyClass::HistoryTable;
        let free = class.free_entries(&d);
        let count = class.count(&d) as usize;
        let policy = class.build(&d, &decode_digits(policy_index % count, d.actions, free));
        let rewards: Vec<_> = (1..=d.horizon).map(|h| m.reward(h).to_owned()).collect();
        let v_ops = ops.policy_value(&rewards, &policy).unwrap();
        let v_exact = exact_policy_value(&m, &policy).unwrap();
        prop_assert!((v_ops - v_exact).abs() < 1e-9, "{v_ops} vs {v_exact}");
    }

    #[test]
    fn generation_is_deterministic((spec, seed) in shapes()) {
        let a = generate_lowrank_pomdp::<f64>(&spec, seed, 1000).unwrap();
        let b = generate_lowrank_pomdp::<f64>(&spec, seed, 1000).unwrap();
        prop_assert_eq!(a, b);
    }
}
