//! Property tests over seeded random networks and knowledge sets.

mod common;

use atcws::dsl::{self, SourceModel};
use atcws::equivalence::{simulates, SimOptions};
use atcws::lts::{step, time_violations, Inputs};
use atcws::messages::{deducible, name, Knowledge, Term};
use atcws::report::Verdict;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn generated_networks_are_in_the_fragment(seed in any::<u64>()) {
        let net = common::random_network(&mut common::rng(seed), 4, 5);
        prop_assert_eq!(net.check_well_formed().verdict, Verdict::Holds);
        prop_assert!(net.is_well_timed_syntax());
    }

    #[test]
    fn timing_laws_hold_on_every_reachable_state(seed in any::<u64>()) {
        let net = common::random_network(&mut common::rng(seed), 4, 5);
        let v = time_violations(&net, 3, 64).unwrap();
        prop_assert_eq!(v.total(), 0, "{:?}", v);
    }

    #[test]
    fn one_step_successors_stay_well_formed(seed in any::<u64>()) {
        let net = common::random_network(&mut common::rng(seed), 4, 5);
        for (_, next) in step(&net, &Inputs::none()).unwrap() {
            prop_assert_eq!(next.check_well_formed().verdict, Verdict::Holds);
            prop_assert_eq!(next.nds(), net.nds());
        }
    }

    #[test]
    fn simulation_is_reflexive(seed in any::<u64>()) {
        let net = common::random_network(&mut common::rng(seed), 3, 4);
        prop_assert!(simulates(&net, &net, &SimOptions::new(3)).unwrap().holds());
    }

    #[test]
    fn random_networks_round_trip_through_text(seed in any::<u64>()) {
        let net = common::random_network(&mut common::rng(seed), 4, 5);
        let mut m = SourceModel::default();
        m.networks.push((name("net"), net));
        m.declare_used_atoms();
        let text = dsl::emit(&m);
        let back = dsl::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(dsl::emit(&back), text);
    }

    #[test]
    fn deduction_matches_brute_force(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let phi = common::random_knowledge(&mut r, 5);
        let mut pool: Vec<Term> = common::universe(&phi.generators).into_iter().collect();
        pool.push(Term::other("z"));
        let w = common::random_target(&mut r, &pool, 3);
        let u = common::universe(phi.generators.iter().chain(std::iter::once(&w)));
        prop_assert_eq!(deducible(&w, &phi, 0), common::brute_closure(&phi, &u).contains(&w));
    }

    #[test]
    fn knowledge_is_monotone(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let phi = common::random_knowledge(&mut r, 4);
        let extra = common::random_knowledge(&mut r, 2);
        let bigger = phi.union(&extra);
        let mut pool: Vec<Term> = common::universe(&bigger.generators).into_iter().collect();
        pool.push(Term::other("z"));
        let w = common::random_target(&mut r, &pool, 2);
        prop_assert!(!deducible(&w, &phi, 0) || deducible(&w, &bigger, 0));
        for g in &phi.generators {
            prop_assert!(deducible(g, &phi, 0));
        }
    }
}

#[test]
fn empty_knowledge_derives_nothing() {
    let phi = Knowledge::default();
    assert!(!deducible(&Term::other("a"), &phi, 3));
    assert!(!deducible(&Term::hash(Term::other("a")), &phi, 3));
}
