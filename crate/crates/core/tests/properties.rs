use num_bigint::BigUint;
use proptest::prelude::*;

use dslab::approx::ApproxFunction;
use dslab::block;
use dslab::inhom::{self, GammaWindow};
use dslab::primes::{PrimePairTable, DEFAULT_Y_CAP};
use dslab::rat::{self, Rational};
use dslab::torus::{self, ArcSpec, CenteredArcFamily, TorusIntervalSet};

fn rational(max_den: i64) -> impl Strategy<Value = Rational> {
    (1..max_den).prop_flat_map(|d| (0..d).prop_map(move |n| rat::rat(n, d)))
}

fn small_radius() -> impl Strategy<Value = Rational> {
    (0i64..30, 31i64..300).prop_map(|(n, d)| rat::rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arc_measure_is_min_one_two_eps(q in 1u64..120, g in rational(50), n in 0i64..40, d in 1i64..40) {
        let eps = rat::rat(n, d);
        let m = torus::approx_set(q, &g, &eps).measure();
        prop_assert_eq!(m, rat::min(rat::int(1), rat::int(2) * &eps));
    }

    #[test]
    fn streaming_union_matches_interval_union(
        arcs in prop::collection::vec((1u64..60, small_radius()), 1..6),
        g in rational(30),
    ) {
        let specs: Vec<ArcSpec> = arcs.iter().map(|(q, r)| ArcSpec { modulus: *q, radius: r.clone() }).collect();
        let fast = torus::union_measure(&specs, &g, 1 << 20).unwrap();
        let slow = arcs
            .iter()
            .fold(TorusIntervalSet::empty(), |acc, (q, r)| acc.union(&torus::approx_set(*q, &g, r)))
            .measure();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn union_is_monotone_and_subadditive(
        arcs in prop::collection::vec((1u64..40, small_radius()), 2..6),
    ) {
        let specs: Vec<ArcSpec> = arcs.iter().map(|(q, r)| ArcSpec { modulus: *q, radius: r.clone() }).collect();
        let zero = Rational::from_integer(0.into());
        let all = torus::union_measure(&specs, &zero, 1 << 20).unwrap();
        let part = torus::union_measure(&specs[1..], &zero, 1 << 20).unwrap();
        let sum = specs.iter().fold(zero.clone(), |acc, s| acc + rat::min(rat::int(1), rat::int(2) * &s.radius));
        prop_assert!(part <= all.clone());
        prop_assert!(all <= sum);
    }

    #[test]
    fn dilation_at_most_b_times(
        arcs in prop::collection::vec((rational(40), small_radius()), 1..6),
        b in 1u64..=10,
    ) {
        let fam = CenteredArcFamily::new(arcs);
        prop_assert!(fam.dilate(b).normalize().measure() <= rat::int(b) * fam.normalize().measure());
    }

    #[test]
    fn shifted_set_sits_in_dilated_homogeneous_set(
        q in 1u64..40,
        b in 1u64..8,
        j in 0i64..8,
        t in -100i64..=100,
        eps in (1i64..40, 80i64..800).prop_map(|(n, d)| rat::rat(n, d)),
    ) {
        let gamma = rat::frac(&(rat::rat(j % b as i64, b as i64) + &eps * rat::rat(t, 100)));
        prop_assert!(inhom::inclusion_holds(q, b, &gamma, &eps).unwrap());
    }

    #[test]
    fn window_is_periodic(b in 1u32..12, d in small_radius(), g in rational(200), k in 0i64..5) {
        let w = GammaWindow::new(BigUint::from(b), d).unwrap();
        let shifted = &g + rat::rat(k, b as i64);
        prop_assert_eq!(w.contains(&g), w.contains(&shifted));
        prop_assert!(w.contains(&rat::rat(k, b as i64)));
    }

    #[test]
    fn overlap_bound_holds(x in 1u64..400, mask in 0u8..16) {
        let index: Vec<usize> = (1..=4).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let ys = PrimePairTable::for_pairs(4).enumerate_y(&index, DEFAULT_Y_CAP).unwrap();
        let xb = BigUint::from(x);
        prop_assume!(ys.is_admissible(&xb));
        let f = ApproxFunction::parse("scaled:inv_bits:1/8").unwrap();
        let check = block::overlap_verify(&xb, &ys, &f, 1 << 24).unwrap();
        prop_assert!(check.ok, "{} > {}", rat::fmt(&check.exact), rat::fmt(&check.bound));
    }

    #[test]
    fn rational_text_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = rat::rat(n, d);
        prop_assert_eq!(rat::parse(&rat::fmt(&r)).unwrap(), r);
    }
}
