use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use psidir::classify::{dirichlet_verdicts, Status};
use psidir::lattice::{delta, Dimensions, FlowedBasis, TargetMatrix};
use psidir::measure::{
    a_n_set, gauss_map, lambda_a_n_enclosure, preimage, IntervalUnion, PreimageOptions,
};
use psidir::psi::PsiFunction;
use psidir::ratcf::{cf_expand, reconstruct, CFState};
use psidir::{elementary, Precision, RatInterval, Rational};

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn unit_rational() -> impl Strategy<Value = Rational> {
    (2u64..u64::MAX).prop_flat_map(|d| (1..d).prop_map(move |n| Rational::new(n.into(), d.into())))
}

fn disjoint_union() -> impl Strategy<Value = IntervalUnion> {
    prop::collection::btree_set(1u32..999, 2..12).prop_map(|cuts| {
        let pts: Vec<Rational> = cuts.into_iter().map(|c| r(c as i64, 1000)).collect();
        let parts = pts
            .chunks_exact(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        IntervalUnion::new(parts).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expansion_round_trips(x in unit_rational()) {
        let cf = cf_expand(&x, 200).unwrap();
        prop_assert!(cf.is_terminal());
        prop_assert_eq!(reconstruct(cf.entries()), x.clone());
        prop_assert_eq!(cf.value(), Some(x));
    }

    #[test]
    fn determinant_and_growth(x in unit_rational()) {
        let cf = cf_expand(&x, 200).unwrap();
        for n in 1..=cf.depth() {
            let det = cf.p(n) * cf.q(n - 1) - cf.p(n - 1) * cf.q(n);
            prop_assert_eq!(det.abs(), BigInt::one());
            if n >= 2 {
                prop_assert!(cf.q(n) * cf.q(n) >= BigInt::one() << n);
            }
        }
    }

    #[test]
    fn product_identity(entries in prop::collection::vec(1u64..50, 3..25)) {
        let mut entries = entries;
        *entries.last_mut().unwrap() += 1;
        let cf = CFState::from_u64s(&entries, true).unwrap();
        for n in 1..cf.depth() {
            let q = Rational::from_integer(cf.q(n).clone());
            let lhs = cf.best_approx_distance(n).unwrap().scale(&q);
            let rhs = cf.tail_bounds(n).unwrap().product_form();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn prefix_cylinder_contains_every_extension(
        prefix in prop::collection::vec(1u64..20, 1..12),
        tail in prop::collection::vec(1u64..20, 1..6),
    ) {
        let cf = CFState::from_u64s(&prefix, false).unwrap();
        let mut full = prefix.clone();
        full.extend(tail);
        let x = reconstruct(&full.iter().map(|&a| BigInt::from(a)).collect::<Vec<_>>());
        prop_assert!(cf.cylinder().contains(&x));
    }

    #[test]
    fn gauss_map_is_shift(x in unit_rational()) {
        let cf = cf_expand(&x, 200).unwrap();
        match gauss_map(&x) {
            Some(tx) => prop_assert_eq!(Some(tx), cf.shift(1).value()),
            None => prop_assert!(x.is_zero() || x.numer().is_one()),
        }
    }

    #[test]
    fn a_n_membership(psi_num in 4i64..400, x in unit_rational()) {
        let psi = r(psi_num, 4);
        let set = a_n_set(&psi).unwrap();
        let cf = cf_expand(&x, 200).unwrap();
        let boundary = set.parts().iter().any(|(a, b)| a == &x || b == &x);
        prop_assume!(cf.depth() >= 2 && !boundary);
        let prod = Rational::from_integer(cf.entry(1) * cf.entry(2));
        prop_assert_eq!(set.contains(&x), prod > psi);
    }

    #[test]
    fn lambda_enclosure_contains_exact(psi_num in 4i64..4000) {
        let psi = r(psi_num, 4);
        let exact = a_n_set(&psi).unwrap().lebesgue();
        prop_assert!(lambda_a_n_enclosure(&psi).unwrap().contains(&exact));
    }

    #[test]
    fn gauss_between_lebesgue_bounds(u in disjoint_union()) {
        let lambda = u.lebesgue();
        let mu = u.gauss(64);
        let ln2 = elementary::ln2(64);
        let upper = RatInterval::point(lambda.clone()).checked_div(&ln2).unwrap();
        let lower = upper.scale(&r(1, 2));
        prop_assert!(mu.hi() >= lower.lo());
        prop_assert!(mu.lo() <= upper.hi());
    }

    #[test]
    fn preimage_is_sound(u in disjoint_union(), num in 1i64..9999) {
        let x = r(num, 10_000);
        let res = preimage(&u, 1, PreimageOptions { branches: 32, max_intervals: 1 << 12 });
        if res.union.contains(&x) {
            let tx = gauss_map(&x).unwrap();
            prop_assert!(u.contains(&tx));
        }
        let before = u.gauss(48);
        let after = res.union.gauss(48);
        // mu is T-invariant up to the certified defect
        prop_assert!(after.lo() <= before.hi());
        prop_assert!(before.lo() <= &(after.hi() + &res.gauss_defect));
    }

    #[test]
    fn verdicts_monotone_in_psi(entries in prop::collection::vec(1u64..6, 12..20), c1 in 1i64..99, c2 in 1i64..99) {
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let cf = CFState::from_u64s(&entries, false).unwrap();
        let window = (2, cf.depth() - 2);
        let small = PsiFunction::scaled_dirichlet(r(lo, 100)).unwrap();
        let large = PsiFunction::scaled_dirichlet(r(hi, 100)).unwrap();
        let a = dirichlet_verdicts(&cf, &small, window, Precision::default()).unwrap();
        let b = dirichlet_verdicts(&cf, &large, window, Precision::default()).unwrap();
        for (u, v) in a.verdicts.iter().zip(&b.verdicts) {
            if u.status == Status::Satisfied {
                prop_assert_ne!(v.status, Status::Violated);
            }
            if v.status == Status::Violated {
                prop_assert_ne!(u.status, Status::Satisfied);
            }
        }
    }

    #[test]
    fn psi_spec_round_trips(a in 1i64..50, k in 1i64..40, kind in 0usize..3) {
        let psi = match kind {
            0 => PsiFunction::scaled_dirichlet(r(a, 51)),
            1 => PsiFunction::power_gap(r(a, 7), r(k, 8)),
            _ => PsiFunction::log_gap(r(a, 7), r(k, 8)),
        };
        // some log_gap parameters only become positive beyond any searchable t
        prop_assume!(psi.is_ok());
        let psi = psi.unwrap();
        let back: PsiFunction = psi.to_string().parse().unwrap();
        prop_assert_eq!(back.to_string(), psi.to_string());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minkowski_bound(
        m in 1usize..3,
        n in 1usize..3,
        nums in prop::collection::vec(-300i64..300, 4),
        dens in prop::collection::vec(1i64..60, 4),
        s in -300i64..300,
    ) {
        let dims = Dimensions::new(m, n).unwrap();
        let entries = (0..m * n).map(|i| r(nums[i], dens[i])).collect();
        let y = TargetMatrix::new(dims, entries).unwrap();
        let s = r(s, 100);
        let d = delta(&y, &s, 48).unwrap();
        prop_assert!(!d.enclosure.hi().is_negative());
        prop_assert!(FlowedBasis::new(&y, &s, 48).determinant().contains(&Rational::one()));
    }

    #[test]
    fn zero_target_delta(m in 1usize..3, n in 1usize..3, s in 0i64..400) {
        // Delta(g_s Z^(m+n)) = s/n for s >= 0
        let dims = Dimensions::new(m, n).unwrap();
        let s = r(s, 100);
        let d = delta(&TargetMatrix::zero(dims), &s, 48).unwrap();
        prop_assert_eq!(d.enclosure, RatInterval::point(&s / r(n as i64, 1)));
    }
}
