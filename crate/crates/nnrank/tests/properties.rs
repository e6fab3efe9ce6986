use nnrank::experiments::{
    approximation_survey, binary_form_experiment, typical_rank_histogram, uniform_decomposition, FormWeights,
    SurveyConfig,
};
use nnrank::io::{read_decomposition, read_tensor, write_json};
use nnrank_core::{Mode, SolverConfig};
use proptest::prelude::*;

fn quick(seed: u64) -> SolverConfig {
    SolverConfig { restarts: 3, max_outer_iters: 300, ..SolverConfig::default().with_seed(seed) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn histogram_partitions_the_sample(seed in any::<u64>(), samples in 1usize..8, real in any::<bool>()) {
        let mode = if real { Mode::Real } else { Mode::Nonnegative };
        let h = typical_rank_histogram(&[2, 2, 2], samples, 4, mode, &quick(seed)).unwrap();
        let counted: usize = h.bins.iter().map(|b| b.count).sum::<usize>() + h.above_r_max;
        prop_assert_eq!(counted, samples);
        let total: f64 = h.bins.iter().map(|b| b.fraction).sum::<f64>() + h.above_r_max_fraction;
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn raising_r_max_never_lowers_cumulative_fractions(seed in any::<u64>()) {
        let cfg = quick(seed);
        let low = typical_rank_histogram(&[2, 2, 2], 6, 3, Mode::Nonnegative, &cfg).unwrap();
        let high = typical_rank_histogram(&[2, 2, 2], 6, 4, Mode::Nonnegative, &cfg).unwrap();
        for r in 1..=3 {
            let cum = |h: &nnrank::experiments::RankHistogram| (1..=r).map(|k| h.fraction(k)).sum::<f64>();
            prop_assert!(cum(&high) >= cum(&low) - 1e-12);
        }
    }

    #[test]
    fn binary_form_root_counts_partition(seed in any::<u64>(), d in 2usize..7, binomial in any::<bool>()) {
        let w = if binomial { FormWeights::Binomial } else { FormWeights::SqrtBinomial };
        let rep = binary_form_experiment(d, 200, seed, w).unwrap();
        prop_assert_eq!(rep.root_counts.iter().sum::<usize>(), 200);
        prop_assert_eq!(rep.root_counts[d], rep.all_real);
        // real roots of a real form come in with the parity of the degree
        for (k, &c) in rep.root_counts.iter().enumerate() {
            if (d - k) % 2 == 1 {
                prop_assert_eq!(c, 0, "k={}", k);
            }
        }
    }

    #[test]
    fn files_round_trip(seed in any::<u64>(), r in 1usize..4) {
        let dir = tempfile::tempdir().unwrap();
        let d = uniform_decomposition(&[2, 3, 2], r, seed, 0).unwrap();
        let (dp, tp) = (dir.path().join("d.json"), dir.path().join("t.json"));
        write_json(&dp, &d).unwrap();
        write_json(&tp, &d.evaluate()).unwrap();
        prop_assert_eq!(read_decomposition(&dp).unwrap(), d.clone());
        prop_assert_eq!(read_tensor(&tp).unwrap(), d.evaluate());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn survey_categories_partition(seed in any::<u64>(), r in 1usize..=3) {
        let rep = approximation_survey(&[3, 3, 3], r, 3, &quick(seed), &SurveyConfig::default()).unwrap();
        let total = rep.fraction_unique_evidence + rep.fraction_non_unique_witness + rep.fraction_inconclusive;
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&rep.fraction_on_boundary));
        prop_assert!(rep.converged_interior <= rep.converged && rep.converged <= 3);
    }
}
