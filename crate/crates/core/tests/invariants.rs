//! Cross-module invariants of the attacker constructions and the bundled
//! protocols.

use std::collections::BTreeSet;

use atcws::dsl;
use atcws::lts::run_trace;
use atcws::messages::{deducible, name, Name};
use atcws::protocols::{build, scripted_attacker, Params};
use atcws::report::Verdict;
use atcws::tgndc::{check_tgndc, shapes_for, top_attacker, wire_observed, AttackerWiring, Bounds};

fn names(xs: &[&str]) -> BTreeSet<Name> {
    xs.iter().map(|x| name(x)).collect()
}

fn neighbours(net: &atcws::syntax::Network, n: &str) -> BTreeSet<Name> {
    net.node(n).unwrap().neighbors.clone()
}

#[test]
fn wiring_fixtures() {
    let p = Params::default();
    let boot = build("mutesla-boot", "integrity", &p).unwrap();
    let w = wire_observed(&boot.system, &boot.wiring).unwrap();
    assert_eq!(neighbours(&w, "m"), names(&["a", "bs", "obs"]));
    assert_eq!(neighbours(&w, "bs"), names(&["b", "m"]));

    let auth = build("mutesla-auth", "integrity", &Params { h: 2, ..p.clone() }).unwrap();
    let w = wire_observed(&auth.system, &auth.wiring).unwrap();
    assert_eq!(neighbours(&w, "bs"), names(&["b", "m1", "m2", "obs"]));
    assert_eq!(neighbours(&w, "m1"), names(&["a1", "bs", "obs"]));
    assert_eq!(neighbours(&w, "m2"), names(&["a2", "bs", "obs"]));

    let leap = build("leap", "agreement", &p).unwrap();
    let w = wire_observed(&leap.system, &leap.wiring).unwrap();
    assert_eq!(neighbours(&w, "m"), names(&["a", "obs", "r"]));
    assert_eq!(neighbours(&w, "r"), names(&["b", "m", "obs"]));
}

#[test]
fn wiring_is_validated() {
    let boot = build("mutesla-boot", "integrity", &Params::default()).unwrap();
    let missing = AttackerWiring::new(&[("m", "a")], &["m"]);
    assert!(wire_observed(&boot.system, &missing).is_err());
    let clash = AttackerWiring::new(&[("m", "bs"), ("bs", "b")], &["m"]);
    assert!(wire_observed(&boot.system, &clash).is_err());
    let obs = AttackerWiring::new(&[("m", "obs"), ("bs", "b")], &[]);
    assert!(wire_observed(&boot.system, &obs).is_err());
}

#[test]
fn the_top_attacker_is_not_time_guarded() {
    let inst = build("mutesla-boot", "integrity", &Params::default()).unwrap();
    let b = Bounds {
        max_sigma: 4,
        ..Bounds::default()
    };
    let phi = inst.knowledge_for(&b).unwrap();
    let shapes = shapes_for(&inst.system, &inst.wiring, &phi, b.max_sigma);
    let top = top_attacker(&inst.wiring, &phi, &shapes, b.candidate_depth, b.max_sigma);
    assert!(!top.is_well_timed_syntax());
}

#[test]
fn scripted_attackers_are_admissible() {
    for proto in ["mutesla-boot", "leap", "lisp"] {
        let a = scripted_attacker(proto).unwrap();
        assert!(a.is_well_timed_syntax(), "{proto}");
        let variant = if proto == "lisp" {
            "integrity"
        } else {
            "agreement"
        };
        let inst = build(proto, variant, &Params::default()).unwrap();
        let phi0 = inst.knowledge.at(0);
        for w in a.msg_of().unwrap() {
            assert!(deducible(&w, &phi0, 2), "{proto}: {w}");
        }
        let wired = wire_observed(&inst.system, &inst.wiring).unwrap();
        assert_eq!(
            wired.compose(&a).check_well_formed().verdict,
            Verdict::Holds,
            "{proto}"
        );
    }
}

#[test]
fn golden_traces_run_only_under_attack() {
    for (proto, variant) in [
        ("mutesla-boot", "agreement"),
        ("leap", "agreement"),
        ("lisp", "integrity"),
    ] {
        let inst = build(proto, variant, &Params::default()).unwrap();
        let golden = inst.expected.clone().unwrap();
        let attacked = wire_observed(&inst.system, &inst.wiring)
            .unwrap()
            .compose(&scripted_attacker(proto).unwrap());
        assert!(
            !run_trace(&attacked, &golden, 10_000)
                .unwrap()
                .states
                .is_empty(),
            "{proto}"
        );
        assert!(
            run_trace(inst.abstraction.as_ref().unwrap(), &golden, 10_000)
                .unwrap()
                .states
                .is_empty()
        );
    }
}

#[test]
fn failing_tgndc_witness_replays() {
    let inst = build("leap", "agreement", &Params::default()).unwrap();
    let b = Bounds {
        max_sigma: 6,
        ..Bounds::default()
    };
    let q = inst.query(&b).unwrap().unwrap();
    let out = check_tgndc(&q).unwrap();
    assert_eq!(out.report.verdict, Verdict::Fails);
    assert!(out
        .report
        .body
        .iter()
        .any(|l| l == "replay: runs on the attacked system: yes; accepted by the spec: no"));
    let (trace, _) = out.sim.unwrap().counterexample.unwrap();
    let env = dsl::Env::of_network(&q.system);
    let text = trace.render();
    assert_eq!(dsl::parse_trace(&text, &env).unwrap(), trace);
}

#[test]
fn literal_bootstrap_sequence_is_unstable() {
    use atcws::protocols::boot;
    use atcws::tgndc::{check_stability, first_escape};
    let inst = build("mutesla-boot", "integrity", &Params::default()).unwrap();
    let b = Bounds {
        max_sigma: 6,
        ..Bounds::default()
    };
    let rep = check_stability(&inst.system, &inst.wiring, &boot::sequence_literal(14), &b).unwrap();
    assert_eq!(rep.verdict, Verdict::Fails);
    let (slot, msg) = first_escape(&rep).unwrap();
    assert_eq!(
        (slot, msg.as_str()),
        (3, boot::w_for(2, 1).to_string().as_str())
    );
}
