mod common;

use proptest::prelude::*;
use wmcfg::{Bimonoid, Weight};

macro_rules! laws_for {
    ($name:ident, $alg:expr) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn $name((a, b, c) in { let s = common::literal(&$alg); (s.clone(), s.clone(), s) }) {
                common::laws(&$alg, &a, &b, &c)?;
            }
        }
    };
}

laws_for!(boolean, Bimonoid::Boolean);
laws_for!(probability, Bimonoid::Probability);
laws_for!(viterbi, Bimonoid::Viterbi);
laws_for!(tropical, Bimonoid::Tropical);
laws_for!(arctic, Bimonoid::Arctic);
laws_for!(pr1, Bimonoid::Pr1);
laws_for!(pr2, Bimonoid::Pr2);
laws_for!(tropical_bimonoid, Bimonoid::TropicalBimonoid);
laws_for!(arctic_bimonoid, Bimonoid::ArcticBimonoid);
laws_for!(lcm_gcd, Bimonoid::LcmGcd);
laws_for!(diamond_lattice, common::diamond());
laws_for!(chain_lattice, common::chain());

#[test]
fn pr1_and_pr2_are_not_distributive() {
    for alg in [Bimonoid::Pr1, Bimonoid::Pr2] {
        let w = |s| Weight::parse(&alg, s).unwrap();
        let lhs = w("1/2").times(&w("3/4").plus(&w("3/4")).unwrap()).unwrap();
        let rhs = w("1/2").times(&w("3/4")).unwrap().plus(&w("1/2").times(&w("3/4")).unwrap()).unwrap();
        assert_ne!(lhs, rhs, "{}", alg.name());
    }
}

#[test]
fn tropical_bimonoid_is_not_distributive() {
    let t = Bimonoid::TropicalBimonoid;
    let w = |s| Weight::parse(&t, s).unwrap();
    // min(2, 2 + 2) = 2, but min(2, 2) + min(2, 2) = 4
    let lhs = w("2").times(&w("2").plus(&w("2")).unwrap()).unwrap();
    let rhs = w("2").times(&w("2")).unwrap().plus(&w("2").times(&w("2")).unwrap()).unwrap();
    assert_ne!(lhs, rhs);
}

#[test]
fn every_algebra_passes_a_fixed_seed_run() {
    for alg in common::every_algebra() {
        common::run_laws(&alg, 200).unwrap();
    }
}
