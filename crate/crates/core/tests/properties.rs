use proptest::prelude::*;

use threshold_lab::domain::{
    empirical_loss, equivalent, is_realizable, order_type, pos, EquivalenceType, GibbsClassifier, Hypothesis,
    Label, Predictor, Sample,
};
use threshold_lab::homogeneity::round_to_grid;
use threshold_lab::learners::{ExpGibbsLearner, Learner};
use threshold_lab::pacbayes::{kl_bernoulli, kl_divergence};
use threshold_lab::sensitivity::{binary_search_signchange, event_membership};

fn label() -> impl Strategy<Value = Label> {
    any::<bool>().prop_map(Label::from_sign)
}

fn sample(n: usize, max_m: usize) -> impl Strategy<Value = Sample> {
    prop::collection::vec((1..=n, label()), 1..=max_m)
        .prop_map(move |pairs| Sample::from_pairs(n, &pairs).unwrap())
}

fn gibbs(n: usize) -> impl Strategy<Value = GibbsClassifier> {
    prop::collection::vec((0..=n, 0.01f64..1.0), 1..6).prop_map(move |atoms| {
        GibbsClassifier::from_unnormalized(atoms.into_iter().map(|(k, w)| (Hypothesis::threshold(n, k).unwrap(), w)))
            .unwrap()
    })
}

/// Every labeled sequence of length `m` over `{1..n}`.
fn all_samples(n: usize, m: usize) -> Vec<Sample> {
    let mut out = Vec::new();
    let total = (n * 2).pow(m as u32);
    for mut code in 0..total {
        let mut pairs = Vec::with_capacity(m);
        for _ in 0..m {
            let d = code % (2 * n);
            code /= 2 * n;
            pairs.push((d / 2 + 1, Label::from_sign(d % 2 == 1)));
        }
        out.push(Sample::from_pairs(n, &pairs).unwrap());
    }
    out
}

#[test]
fn equivalence_matches_order_type_exhaustively() {
    for (n, m) in [(8, 1), (6, 2), (4, 3)] {
        let samples = all_samples(n, m);
        let types: Vec<EquivalenceType> = samples.iter().map(order_type).collect();
        for (s, ts) in samples.iter().zip(&types) {
            for (t, tt) in samples.iter().zip(&types) {
                assert_eq!(equivalent(s, t).unwrap(), ts == tt, "{s} vs {t}");
            }
        }
    }
}

#[test]
fn realizability_matches_brute_force_exhaustively() {
    for (n, m) in [(8, 2), (5, 3)] {
        for s in all_samples(n, m) {
            let brute = (0..=n).any(|k| empirical_loss(&Hypothesis::threshold(n, k).unwrap(), &s).unwrap() == 0.0);
            assert_eq!(is_realizable(&s), brute, "{s}");
        }
    }
}

proptest! {
    #[test]
    fn order_type_invariant_under_monotone_maps(s in sample(20, 6), a in 1usize..5, c in 0usize..10) {
        let n = 20 * a + c;
        let pairs: Vec<(usize, Label)> = s.examples().iter().map(|e| (a * e.x + c, e.y)).collect();
        let t = Sample::from_pairs(n, &pairs).unwrap();
        prop_assert_eq!(order_type(&s), order_type(&t));
        prop_assert!(equivalent(&s, &t).unwrap());
    }

    #[test]
    fn pos_is_monotone_and_bounded(s in sample(30, 8)) {
        let support = s.support().len();
        let mut prev = 0;
        for x in 0..=30 {
            let p = pos(x, &s);
            prop_assert!(p >= prev && p <= support);
            prev = p;
        }
        prop_assert_eq!(prev, support);
    }

    #[test]
    fn gibbs_loss_is_linear(q in gibbs(12), s in sample(12, 8)) {
        let mixed: f64 = q.atoms().iter().map(|(h, w)| w * empirical_loss(h, &s).unwrap()).sum();
        prop_assert!((empirical_loss(&q, &s).unwrap() - mixed).abs() < 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(q in gibbs(10), p in gibbs(10)) {
        prop_assert!(kl_divergence(&q, &p).unwrap().value() >= -1e-12);
        prop_assert!(kl_divergence(&q, &q).unwrap().value().abs() < 1e-12);
    }

    #[test]
    fn kl_data_processing(q in gibbs(10), p in gibbs(10), x in 1usize..=10) {
        let full = kl_divergence(&q, &p).unwrap();
        let pushed = kl_bernoulli(q.prob_positive(x), p.prob_positive(x));
        prop_assert!(full.is_infinite() || pushed.value() <= full.value() + 1e-9);
    }

    #[test]
    fn kl_chain_rule_for_point_mass(p in gibbs(10), k in 0usize..=10) {
        let h = Hypothesis::threshold(10, k).unwrap();
        let kl = kl_divergence(&GibbsClassifier::point_mass(h.clone()), &p).unwrap();
        let w = p.weight_of(&h);
        if w == 0.0 {
            prop_assert!(kl.is_infinite());
        } else {
            prop_assert!((kl.value() + w.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn exp_gibbs_depends_only_on_type_and_pos(
        ty_idx in 0usize..48,
        pts_a in prop::collection::btree_set(1usize..=30, 3),
        pts_b in prop::collection::btree_set(1usize..=30, 3),
        rank in 0usize..=3,
    ) {
        let ty = &EquivalenceType::all_permutation_types(3)[ty_idx];
        let a: Vec<usize> = pts_a.into_iter().collect();
        let b: Vec<usize> = pts_b.into_iter().collect();
        let learner = ExpGibbsLearner::new(1.0).unwrap();
        let (sa, sb) = (ty.sample_on(30, &a).unwrap(), ty.sample_on(30, &b).unwrap());
        let (qa, qb) = (learner.posterior(&sa).unwrap(), learner.posterior(&sb).unwrap());
        let outside = |pts: &[usize]| (1..=30).find(|x| !pts.contains(x) && pos(*x, &ty.sample_on(30, pts).unwrap()) == rank);
        if let (Some(xa), Some(xb)) = (outside(&a), outside(&b)) {
            prop_assert!((qa.prob_positive(xa) - qb.prob_positive(xb)).abs() < 1e-12);
        }
    }

    #[test]
    fn search_brackets_a_sign_change(b in 1u32..=10, k in 0usize..=1024) {
        let n = 1usize << b;
        let k = k.min(n);
        let bits = Hypothesis::threshold(n, k).unwrap().bits();
        let trace = binary_search_signchange(&bits).unwrap();
        prop_assert_eq!(trace.queries.len(), b as usize - 1);
        prop_assert!(trace.queries.iter().all(|q| q % 2 == 0));
        let (lo, hi) = (trace.interval.lo, trace.interval.hi);
        prop_assert_eq!(hi, lo + 1);
        prop_assert!(hi == n || bits[hi - 1].is_positive());
        prop_assert!(lo < 2 || !bits[lo - 2].is_positive());
    }

    #[test]
    fn events_are_disjoint(ks in prop::collection::vec(0usize..=32, 1..12), q1 in 0.05f64..0.45, gap in 0.1f64..0.5) {
        let q2 = (q1 + gap).min(0.95);
        let hs: Vec<Hypothesis> = ks.iter().map(|&k| Hypothesis::threshold(32, k).unwrap()).collect();
        let members = (1..32).step_by(2).filter(|&x| event_membership(x, &hs, q1, q2).unwrap()).count();
        prop_assert!(members <= 1);
    }

    #[test]
    fn grid_rounding_is_within_half_a_tick(v in 0.0f64..=1.0, denom in 4u32..400) {
        let g = 1.0 / denom as f64;
        let t = round_to_grid(v, g);
        prop_assert!((t as f64 * g - v).abs() <= g / 2.0 + 1e-12);
    }
}
