//! Property tests: structural invariants that must hold for arbitrary
//! inputs, not just the worked examples in the unit tests.

use bcsvm::analysis::{
    binomial, denominator_inequality, retention_prob_balanced, retention_prob_random,
    RetentionCensus,
};
use bcsvm::dataset::{partition_indices_balanced, partition_indices_random};
use bcsvm::solver::smo_train_detailed;
use bcsvm::{Dataset, KernelSpec, Sample, SolverConfig, SparseVector, SvmModel};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn sparse_vector() -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_map(1u32..40, -4.0f64..4.0, 0..6)
        .prop_map(|m| SparseVector::new(m.into_iter().collect()).unwrap())
}

fn dataset(max_per_class: usize) -> impl Strategy<Value = Dataset> {
    let class = move |label: i8| {
        prop::collection::vec(sparse_vector(), 1..=max_per_class)
            .prop_map(move |xs| {
                xs.into_iter().map(|x| Sample::new(x, label).unwrap()).collect::<Vec<_>>()
            })
    };
    (class(1), class(-1)).prop_map(|(mut pos, mut neg)| {
        pos.append(&mut neg);
        Dataset::new(pos)
    })
}

fn census() -> impl Strategy<Value = RetentionCensus> {
    (0u64..5, 0u64..5, 0u64..5, 0u64..5, 0u64..6, 0u64..6, 1u64..5).prop_map(
        |(p_sv, n_sv, p_noise, n_noise, p_common, n_common, m)| RetentionCensus {
            p_sv,
            n_sv,
            p_noise,
            n_noise,
            p_common,
            n_common,
            m,
        },
    )
}

/// Censuses padded so `m` divides both class totals (each class nonempty),
/// which is exactly when the balanced and random group sizes agree.
fn divisible_census() -> impl Strategy<Value = RetentionCensus> {
    census().prop_map(|mut c| {
        if c.pos_total() == 0 {
            c.p_common = c.m;
        }
        if c.neg_total() == 0 {
            c.n_common = c.m;
        }
        c.p_common += (c.m - c.pos_total() % c.m) % c.m;
        c.n_common += (c.m - c.neg_total() % c.m) % c.m;
        c
    })
}

proptest! {
    #[test]
    fn random_partition_is_a_partition(n in 1usize..200, k in 1usize..12, seed: u64) {
        prop_assume!(k <= n);
        let parts = partition_indices_random(n, k, seed).unwrap();
        prop_assert_eq!(parts.len(), k);
        let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        // Sizes differ by at most one, larger groups first.
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sizes[0] - sizes[k - 1] <= 1);
    }

    #[test]
    fn balanced_partition_is_a_partition_with_bounded_ratio(
        ds in dataset(40),
        k in 1usize..6,
        seed: u64,
    ) {
        prop_assume!(k <= ds.positive_count() && k <= ds.negative_count());
        let labels = ds.labels();
        let parts = partition_indices_balanced(&labels, k, seed).unwrap();
        prop_assert_eq!(parts.len(), k);
        let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());

        let global_ratio = ds.positive_count() as f64 / ds.len() as f64;
        for part in &parts {
            let pos = part.iter().filter(|&&i| labels[i] == 1).count();
            let ratio = pos as f64 / part.len() as f64;
            let bound = k as f64 / ds.len() as f64 + 1.0 / part.len() as f64;
            prop_assert!(
                (ratio - global_ratio).abs() <= bound,
                "ratio {} vs {} exceeds bound {}",
                ratio,
                global_ratio,
                bound
            );
        }
    }

    #[test]
    fn partitioning_is_seed_deterministic(n in 1usize..100, k in 1usize..8, seed: u64) {
        prop_assume!(k <= n);
        prop_assert_eq!(
            partition_indices_random(n, k, seed).unwrap(),
            partition_indices_random(n, k, seed).unwrap()
        );
    }

    #[test]
    fn libsvm_roundtrip_is_exact(ds in dataset(30)) {
        let text = ds.write_libsvm();
        let back = Dataset::parse_libsvm(&text, false).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in ds.samples().iter().zip(back.samples()) {
            prop_assert_eq!(a.label(), b.label());
            prop_assert_eq!(a.features().entries(), b.features().entries());
        }
    }

    #[test]
    fn shuffle_is_a_permutation(ds in dataset(30), seed: u64) {
        let shuffled = ds.shuffle(seed);
        prop_assert_eq!(shuffled.len(), ds.len());
        prop_assert_eq!(shuffled.positive_count(), ds.positive_count());
        let mut a: Vec<String> = ds.write_libsvm().lines().map(String::from).collect();
        let mut b: Vec<String> = shuffled.write_libsvm().lines().map(String::from).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kernels_are_symmetric(
        a in sparse_vector(),
        b in sparse_vector(),
        gamma in 0.01f64..1.0,
        degree in 1u32..4,
        coef0 in -1.0f64..1.0,
    ) {
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Rbf { gamma },
            KernelSpec::Poly { gamma, degree, coef0 },
        ] {
            let ab = spec.eval(&a, &b);
            let ba = spec.eval(&b, &a);
            prop_assert_eq!(ab.to_bits(), ba.to_bits(), "{:?}", spec);
        }
        let rbf = KernelSpec::Rbf { gamma };
        let aa = rbf.eval(&a, &a);
        prop_assert_eq!(aa.to_bits(), 1.0f64.to_bits());
        let ab = rbf.eval(&a, &b);
        prop_assert!(ab > 0.0 && ab <= 1.0);
    }

    #[test]
    fn retention_probabilities_stay_in_unit_interval(c in census()) {
        prop_assume!(c.group_size() >= 1);
        let r = retention_prob_random(&c).unwrap();
        prop_assert!(r >= num_rational::BigRational::zero());
        prop_assert!(r <= num_rational::BigRational::one());
        if c.group_pos() >= 1 && c.group_neg() >= 1 {
            let b = retention_prob_balanced(&c).unwrap();
            prop_assert!(b >= num_rational::BigRational::zero());
            prop_assert!(b <= num_rational::BigRational::one());
        }
    }

    #[test]
    fn random_denominator_never_smaller(c in divisible_census()) {
        let (lhs, rhs, holds) = denominator_inequality(&c).unwrap();
        prop_assert!(lhs >= rhs);
        prop_assert_eq!(holds, lhs > rhs);
        if c.m == 1 {
            prop_assert!(!holds);
        }
    }

    #[test]
    fn pascals_rule((n, k) in (1u64..300).prop_flat_map(|n| (Just(n), 0..=n as i64))) {
        prop_assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
    }

    #[test]
    fn trained_model_roundtrips_bitwise_through_json(ds in dataset(6), c in 0.5f64..8.0) {
        let cfg = SolverConfig { c, ..SolverConfig::default() };
        let model = bcsvm::smo_train(&ds, &cfg).unwrap();
        let back = SvmModel::from_json(&model.to_json()).unwrap();
        prop_assert_eq!(&back, &model);
        for s in ds.samples() {
            prop_assert_eq!(
                model.decision_value(s.features()).to_bits(),
                back.decision_value(s.features()).to_bits()
            );
        }
    }

    #[test]
    fn solver_feasibility_for_arbitrary_data(ds in dataset(12), c in 0.5f64..4.0) {
        let cfg = SolverConfig { c, ..SolverConfig::default() };
        let (_, detail) = smo_train_detailed(&ds, &cfg).unwrap();
        let mut sum = 0.0;
        for (alpha, s) in detail.alpha.iter().zip(ds.samples()) {
            prop_assert!((-1e-15..=c * (1.0 + 1e-12)).contains(alpha));
            sum += alpha * f64::from(s.label());
        }
        prop_assert!(sum.abs() <= 1e-10, "sum alpha*y = {}", sum);
    }
}
