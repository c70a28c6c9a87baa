#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use wmcfg::algebra::FiniteLattice;
use wmcfg::dyck::BracketAlphabet;
use wmcfg::grammar::load_grammar;
use wmcfg::{Bimonoid, Weight, WeightedMcfg};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn grammar(name: &str) -> WeightedMcfg {
    load_grammar(&data(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn cells(name: &str) -> BracketAlphabet {
    BracketAlphabet::parse(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

pub fn diamond() -> Bimonoid {
    let text = std::fs::read_to_string(data("diamond.lattice")).unwrap();
    Bimonoid::Lattice(Arc::new(FiniteLattice::parse(&text).unwrap()))
}

/// A five-element chain 0 < 1 < 2 < 3 < 4 as a lattice table.
pub fn chain() -> Bimonoid {
    let names: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
    let join = (0..5).map(|a| (0..5).map(|b| a.max(b)).collect()).collect();
    let meet = (0..5).map(|a| (0..5).map(|b| a.min(b)).collect()).collect();
    Bimonoid::Lattice(Arc::new(FiniteLattice::new(names, join, meet).unwrap()))
}

pub fn every_algebra() -> Vec<Bimonoid> {
    let mut all = Bimonoid::builtins();
    all.push(diamond());
    all.push(chain());
    all
}

fn fraction(lo: i64, hi: i64, unit: bool) -> BoxedStrategy<String> {
    (lo..=hi, 1i64..=12)
        .prop_map(move |(n, d)| if unit { format!("{}/{d}", n.rem_euclid(d + 1)) } else { format!("{n}/{d}") })
        .boxed()
}

/// Literals covering the carrier, with the identities and infinities
/// drawn often enough to exercise the edge cases.
pub fn literal(alg: &Bimonoid) -> BoxedStrategy<String> {
    let z = alg.format_value(&alg.zero());
    let o = alg.format_value(&alg.one());
    let body = match alg {
        Bimonoid::Boolean => prop_oneof![Just("0".to_string()), Just("1".to_string())].boxed(),
        Bimonoid::Probability => fraction(0, 30, false),
        Bimonoid::Viterbi | Bimonoid::Pr1 | Bimonoid::Pr2 => fraction(0, 12, true),
        Bimonoid::Tropical => prop_oneof![4 => fraction(-20, 20, false), 1 => Just("inf".to_string())].boxed(),
        Bimonoid::Arctic => prop_oneof![4 => fraction(-20, 20, false), 1 => Just("-inf".to_string())].boxed(),
        Bimonoid::TropicalBimonoid => prop_oneof![4 => fraction(0, 20, false), 1 => Just("inf".to_string())].boxed(),
        Bimonoid::ArcticBimonoid => {
            prop_oneof![4 => fraction(-20, 0, false), 1 => Just("-inf".to_string())].boxed()
        }
        Bimonoid::LcmGcd => (0u64..=60).prop_map(|n| n.to_string()).boxed(),
        Bimonoid::Lattice(l) => proptest::sample::select(l.elements().to_vec()).boxed(),
    };
    prop_oneof![6 => body, 1 => Just(z), 1 => Just(o)].boxed()
}

pub fn laws(alg: &Bimonoid, a: &str, b: &str, c: &str) -> Result<(), TestCaseError> {
    let p = |s: &str| Weight::parse(alg, s).map_err(|e| TestCaseError::fail(format!("{s}: {e}")));
    let (a, b, c) = (p(a)?, p(b)?, p(c)?);
    let zero = Weight::zero(alg);
    let one = Weight::one(alg);
    let plus = |x: &Weight, y: &Weight| x.plus(y).unwrap();
    let times = |x: &Weight, y: &Weight| x.times(y).unwrap();
    prop_assert_eq!(plus(&a, &b), plus(&b, &a), "plus commutes");
    prop_assert_eq!(times(&a, &b), times(&b, &a), "times commutes");
    prop_assert_eq!(plus(&plus(&a, &b), &c), plus(&a, &plus(&b, &c)), "plus associates");
    prop_assert_eq!(times(&times(&a, &b), &c), times(&a, &times(&b, &c)), "times associates");
    prop_assert_eq!(plus(&a, &zero), a.clone(), "zero is the additive identity");
    prop_assert_eq!(times(&a, &one), a.clone(), "one is the multiplicative identity");
    prop_assert_eq!(times(&a, &zero), zero.clone(), "zero annihilates");
    prop_assert_eq!(times(&zero, &a), zero, "zero annihilates");
    Ok(())
}

/// Runs the laws on `cases` sampled triples; deterministic seed.
pub fn run_laws(alg: &Bimonoid, cases: u32) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    let mut runner = TestRunner::new_with_rng(config, rng);
    let s = literal(alg);
    runner
        .run(&(s.clone(), s.clone(), s), |(a, b, c)| laws(alg, &a, &b, &c))
        .map_err(|e| format!("{}: {e}", alg.name()))
}
