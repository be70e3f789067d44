//! Property-based invariants over randomly generated inputs.

use bornlab::assignments::{bloch_hemisphere_eval, equal_rule_eval_exact, two_slope_eval};
use bornlab::exact::{rat, QuadRational};
use bornlab::linalg::{
    coarse_grain, haar_random_unitary, kron, random_density_matrix, random_projective_context,
    spectral_decompose, spectral_reconstruct, XReal,
};
use proptest::prelude::*;

fn quad() -> impl Strategy<Value = QuadRational> {
    (-40i64..=40, 1i64..=15, -40i64..=40, 1i64..=15)
        .prop_map(|(an, ad, bn, bd)| QuadRational::new(rat(an, ad), rat(bn, bd)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quad_field_axioms(x in quad(), y in quad(), z in quad(), qn in -9i64..=9, qd in 1i64..=9) {
        let q = rat(qn, qd);
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert_eq!((&x + &y).scale(&q), x.scale(&q) + y.scale(&q));
        prop_assert_eq!(&x - &x, QuadRational::zero());
    }

    #[test]
    fn two_slope_cauchy_equation_is_exact(x in quad(), y in quad(), c1n in -20i64..=20, c2n in -20i64..=20) {
        let c1 = rat(c1n, 1);
        let c2 = rat(c2n, 1);
        let lhs = two_slope_eval(&(&x + &y), &c1, &c2);
        let rhs = two_slope_eval(&x, &c1, &c2) + two_slope_eval(&y, &c1, &c2);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn haar_unitaries_have_identity_gram(d in 1usize..=8, seed in any::<u64>()) {
        let u = haar_random_unitary(d, seed).unwrap();
        let gram = u.adjoint() * &u;
        let dev = (gram - bornlab::linalg::CMat::identity(d, d)).norm();
        prop_assert!(dev <= 1e-12, "gram deviation {}", dev);
    }

    #[test]
    fn spectral_round_trip(d in 2usize..=6, seed in any::<u64>(), scale in 0.1f64..5.0) {
        let op = random_density_matrix(d, seed).unwrap().scale(scale);
        let parts = spectral_decompose(&op).unwrap();
        let rebuilt = spectral_reconstruct(&parts).unwrap();
        prop_assert!(rebuilt.distance(&op) <= 1e-10);
    }

    #[test]
    fn contexts_survive_coarse_graining(d in 2usize..=6, seed in any::<u64>()) {
        let ctx = random_projective_context(d, d, seed).unwrap();
        // pairwise merge of the first two members
        let mut partition = vec![vec![0usize, 1]];
        partition.extend((2..d).map(|i| vec![i]));
        let merged = coarse_grain(&ctx, &partition).unwrap();
        prop_assert!(merged.is_complete());
        prop_assert!(merged.is_projective());
    }

    #[test]
    fn equal_rule_subset_scores(d in 2usize..=6, seed in any::<u64>(), mask in 1u32..63) {
        let ctx = random_projective_context(d, d, seed).unwrap();
        let subset: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        prop_assume!(!subset.is_empty());
        let sum = subset
            .iter()
            .skip(1)
            .fold(ctx.members()[subset[0]].clone(), |acc, &i| acc.add(&ctx.members()[i]).unwrap());
        let score = equal_rule_eval_exact(&sum, &ctx).unwrap();
        prop_assert_eq!(score, rat(subset.len() as i64, d as i64));
    }

    #[test]
    fn hemisphere_antipodal_pairs_sum_to_one(seed in any::<u64>()) {
        let ctx = random_projective_context(2, 2, seed).unwrap();
        let vs = ctx.rank1_vectors().unwrap();
        let total = bloch_hemisphere_eval(&vs[0]).unwrap() + bloch_hemisphere_eval(&vs[1]).unwrap();
        prop_assert_eq!(total, 1.0);
    }

    #[test]
    fn tensor_trace_multiplicativity(sa in any::<u64>(), sb in any::<u64>(), da in 2usize..=4, db in 2usize..=4) {
        let a = random_density_matrix(da, sa).unwrap().scale(1.3);
        let b = random_density_matrix(db, sb).unwrap().scale(0.7);
        let t = kron(a.matrix(), b.matrix()).trace().re;
        prop_assert!((t - a.trace() * b.trace()).abs() <= 1e-12);
    }

    #[test]
    fn xreal_addition_never_fabricates_values(a in any::<f64>().prop_filter("finite", |x| x.is_finite()),
                                              b in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let sum = XReal::Finite(a).checked_add(XReal::Finite(b)).unwrap();
        match sum {
            XReal::Finite(v) => prop_assert_eq!(v, a + b),
            XReal::PosInf => prop_assert!(a + b > 0.0 && (a + b).is_infinite()),
            XReal::NegInf => prop_assert!(a + b < 0.0 && (a + b).is_infinite()),
        }
    }
}

#[test]
fn xreal_indeterminate_forms_error() {
    assert!(XReal::PosInf.checked_add(XReal::NegInf).is_err());
    assert!(XReal::NegInf.checked_sub(XReal::NegInf).is_err());
}
