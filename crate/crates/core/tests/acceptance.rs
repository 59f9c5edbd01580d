//! One pass/fail line per acceptance criterion. Tolerances are pinned below.

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use atcws::dsl;
use atcws::equivalence::{bisimilar, simulates, SimOptions};
use atcws::lts::{time_violations, Inputs};
use atcws::messages::{deducible, name, Term};
use atcws::protocols::{build, gap_suite, Params};
use atcws::report::Verdict;
use atcws::syntax::{Network, Node};
use atcws::tgndc::{check_part, Bounds};

const ATTACK_TIME_LIMIT: Duration = Duration::from_secs(5);
const TGNDC_TIME_LIMIT: Duration = Duration::from_secs(120);
const TGNDC_MAX_SIGMA: usize = 10;
const TGNDC_DEPTH: usize = 2;
const GAP_ROUNDS: usize = 3;
const TIME_NETWORKS: u64 = 500;
const TIME_MAX_NODES: usize = 4;
const TIME_MAX_DEPTH: usize = 5;
const TIME_HORIZON: usize = 4;
const TIME_STEP_BUDGET: usize = 64;
const ORACLE_INSTANCES: u64 = 200;
const ORACLE_MAX_PHI: usize = 5;
const ORACLE_TARGETS: usize = 16;
const ORACLE_TARGET_DEPTH: usize = 3;
const REFLEXIVITY_NETWORKS: u64 = 100;
const PART_MAX_SIGMA: usize = 8;
const RENAMING_NETWORKS: u64 = 20;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn cli(args: &[&str]) -> (i32, String, Duration) {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_atcws"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        t.elapsed(),
    )
}

/// `(observed, specified)` from a line `... gap G, specified E; ...`.
fn gap_line(report: &str) -> Option<(usize, usize)> {
    let line = report
        .lines()
        .find(|l| l.contains(" gap ") && l.contains("specified"))?;
    let after = line.split(" gap ").nth(1)?;
    let (g, rest) = after.split_once(", specified ")?;
    let e = rest.split(';').next()?;
    Some((g.trim().parse().ok()?, e.trim().parse().ok()?))
}

type Outcome = (bool, String);

fn criterion_1() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (proto, want) in [("mutesla-boot", 4), ("leap", 4), ("lisp", 3)] {
        let (code, out, dt) = cli(&["attack", proto]);
        let gap = gap_line(&out);
        let good = code == 1
            && out.contains("trace runs on the attacked system: yes")
            && out.contains("trace accepted by the abstraction: no")
            && gap == Some((want, 2))
            && dt < ATTACK_TIME_LIMIT;
        ok &= good;
        let g = gap.map_or("?".into(), |(g, e)| format!("{g} vs {e}"));
        parts.push(format!("{proto} {g} in {:.2}s", dt.as_secs_f64()));
    }
    (ok, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [
        "queries/mutesla-boot-integrity.q",
        "queries/mutesla-auth-integrity-h2.q",
        "queries/leap-integrity.q",
    ] {
        let (code, out, dt) = cli(&["tgndc", q]);
        let bounds =
            format!("max_sigma={TGNDC_MAX_SIGMA} deduction_depth=2 candidate_depth={TGNDC_DEPTH}");
        let stability_lines: Vec<&str> = out.lines().filter(|l| l.contains("stability:")).collect();
        let good = code == 0
            && out.contains(&bounds)
            && !stability_lines.is_empty()
            && stability_lines
                .iter()
                .all(|l| l.ends_with("stability: holds"))
            && dt < TGNDC_TIME_LIMIT;
        ok &= good;
        let short = Path::new(q)
            .file_stem()
            .unwrap()
            .to_string_lossy()
            .into_owned();
        parts.push(format!("{short} exit {code} in {:.1}s", dt.as_secs_f64()));
    }
    (ok, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let h2 = Params {
        h: 2,
        ..Params::default()
    };
    for (proto, variant, params, want) in [
        ("mutesla-boot", "agreement", Params::default(), 2),
        ("mutesla-boot", "integrity", Params::default(), 2),
        ("mutesla-auth", "integrity", h2, 4),
        ("leap", "agreement", Params::default(), 2),
        ("leap", "integrity", Params::default(), 2),
        ("lisp", "integrity", Params::default(), 2),
    ] {
        let inst = build(proto, variant, &params).expect("bundled");
        let claim = inst.gap.as_ref().expect("gap claim").expected;
        let rep = gap_suite(&inst, GAP_ROUNDS).expect("gap suite runs");
        let good = claim == want && rep.verdict == Verdict::Holds;
        ok &= good;
        let seen: BTreeSet<&str> = rep
            .body
            .iter()
            .filter_map(|l| l.split("ticks ").nth(1))
            .map(|t| t.split(',').next().unwrap_or(t))
            .collect();
        let seen: Vec<&str> = seen.into_iter().collect();
        parts.push(format!(
            "{proto} {variant} {}{}",
            seen.join(" "),
            if good {
                String::new()
            } else {
                format!(" (claimed {want})")
            }
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let mut violations = 0;
    let mut incomplete = 0;
    let mut rejected = 0;
    let mut states = 0;
    for seed in 0..TIME_NETWORKS {
        let mut r = common::rng(seed);
        let net = common::random_network(&mut r, TIME_MAX_NODES, TIME_MAX_DEPTH);
        if net.check_well_formed().verdict != Verdict::Holds || !net.is_well_timed_syntax() {
            rejected += 1;
            continue;
        }
        let v = time_violations(&net, TIME_HORIZON, TIME_STEP_BUDGET).expect("explores");
        violations += v.total();
        incomplete += usize::from(v.incomplete);
        states += v.states;
    }
    (
        violations == 0 && incomplete == 0 && rejected == 0,
        format!(
            "{TIME_NETWORKS} networks, {states} states, {violations} violations, {incomplete} incomplete, {rejected} outside the fragment"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut disagreements = 0;
    let mut positives = 0;
    let mut checked = 0;
    let mut first = None;
    for seed in 0..ORACLE_INSTANCES {
        let mut r = common::rng(10_000 + seed);
        let phi = common::random_knowledge(&mut r, ORACLE_MAX_PHI);
        // Pool: subterms of phi and a couple of fresh atoms, so targets mix
        // derivable and underivable material.
        let mut pool: Vec<Term> = common::universe(&phi.generators).into_iter().collect();
        pool.push(Term::other("z"));
        pool.push(Term::chain("kc", 3));
        for _ in 0..ORACLE_TARGETS {
            let w = common::random_target(&mut r, &pool, ORACLE_TARGET_DEPTH);
            let u = common::universe(phi.generators.iter().chain(std::iter::once(&w)));
            let expected = common::brute_closure(&phi, &u).contains(&w);
            checked += 1;
            positives += usize::from(expected);
            if deducible(&w, &phi, 0) != expected {
                disagreements += 1;
                first.get_or_insert_with(|| {
                    format!(
                        "; first: {w} from {{{}}}",
                        phi.generators
                            .iter()
                            .map(|t| t.to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    )
                });
            }
        }
    }
    (
        disagreements == 0,
        format!(
            "{ORACLE_INSTANCES} knowledge sets, {checked} targets ({positives} derivable), {disagreements} disagreements{}",
            first.unwrap_or_default()
        ),
    )
}

fn renamed(net: &Network, from: &str, to: &str) -> Network {
    let swap = |n: &atcws::messages::Name| if &**n == from { name(to) } else { n.clone() };
    Network::new(
        net.nodes
            .iter()
            .map(|n| Node {
                name: swap(&n.name),
                proc: n.proc.clone(),
                neighbors: n.neighbors.iter().map(swap).collect(),
            })
            .collect(),
        net.defs.clone(),
    )
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut reflexive = 0;
    for seed in 0..REFLEXIVITY_NETWORKS {
        let mut r = common::rng(20_000 + seed);
        let net = common::random_network(&mut r, 3, 4);
        if simulates(&net, &net, &SimOptions::new(4))
            .map(|s| s.holds())
            .unwrap_or(false)
        {
            reflexive += 1;
        }
    }
    ok &= reflexive == REFLEXIVITY_NETWORKS;

    let mut part_results = Vec::new();
    let bounds = Bounds {
        max_sigma: PART_MAX_SIGMA,
        ..Bounds::default()
    };
    for (proto, h) in [("mutesla-boot", 1), ("mutesla-auth", 2), ("leap", 1)] {
        let inst = build(
            proto,
            "integrity",
            &Params {
                h,
                ..Params::default()
            },
        )
        .expect("bundled");
        let phi = inst.knowledge_for(&bounds).expect("knowledge");
        let mut held = 0;
        let parts = inst.parts();
        for part in &parts {
            let r = check_part(&inst.system, &inst.wiring, part, &phi, &bounds)
                .expect("part check runs");
            held += usize::from(r.holds());
        }
        ok &= held == parts.len();
        part_results.push(format!("{proto} {held}/{}", parts.len()));
    }

    let mut distinguished = 0;
    for seed in 0..RENAMING_NETWORKS {
        let mut r = common::rng(30_000 + seed);
        let net = common::random_network(&mut r, 3, 3);
        let other = renamed(&net, "n0", "z0");
        let w = Term::atom("t", atcws::messages::AtomKind::Tag);
        let opts = SimOptions::new(3).with_inputs(Inputs::constant(vec![
            (name("n0"), w.clone()),
            (name("z0"), w),
        ]));
        if bisimilar(&net, &other, &opts)
            .map(|s| s.verdict == Verdict::Fails)
            .unwrap_or(false)
        {
            distinguished += 1;
        }
    }
    ok &= distinguished == RENAMING_NETWORKS;
    (
        ok,
        format!(
            "reflexive {reflexive}/{REFLEXIVITY_NETWORKS}; parts holding at max_sigma {PART_MAX_SIGMA}: {}; renamed networks told apart {distinguished}/{RENAMING_NETWORKS}",
            part_results.join(", ")
        ),
    )
}

fn corpus_files() -> Vec<PathBuf> {
    let mut v = Vec::new();
    for dir in ["models", "queries"] {
        let mut files: Vec<PathBuf> = std::fs::read_dir(root().join(dir))
            .expect("corpus directory")
            .map(|e| e.expect("entry").path())
            .collect();
        files.sort();
        v.extend(files);
    }
    v
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut problems = Vec::new();
    let files = corpus_files();
    for f in &files {
        let (m, env) = match dsl::load(f) {
            Ok(x) => x,
            Err(e) => {
                ok = false;
                problems.push(format!("{e}"));
                continue;
            }
        };
        let mut imported = env.clone();
        for (n, _) in &m.networks {
            imported.networks.remove(n);
        }
        let text = dsl::emit(&m);
        let again = dsl::parse_with(&text, &imported);
        if again.as_ref().ok() != Some(&m)
            || again.map(|a| dsl::emit(&a)).ok().as_deref() != Some(text.as_str())
        {
            ok = false;
            problems.push(format!("{} does not round-trip", f.display()));
        }
    }
    let mut instances = 0;
    for p in [
        Params::default(),
        Params {
            h: 2,
            ..Params::default()
        },
    ] {
        for inst in atcws::protocols::all_instances(&p) {
            let m = dsl::instance_model(&inst);
            if dsl::parse(&dsl::emit(&m)).ok().as_ref() != Some(&m) {
                ok = false;
                problems.push(format!(
                    "{} {} does not round-trip",
                    inst.name, inst.variant
                ));
            }
            instances += 1;
        }
    }
    let mut stable = 0;
    let runs: [&[&str]; 4] = [
        &["attack", "leap"],
        &["tgndc", "queries/leap-agreement.q"],
        &["gaps", "mutesla-auth", "integrity"],
        &["tgndc", "queries/ping.q"],
    ];
    for args in runs {
        let (c1, o1, _) = cli(args);
        let (c2, o2, _) = cli(args);
        if c1 == c2 && o1 == o2 && !o1.is_empty() {
            stable += 1;
        } else {
            ok = false;
            problems.push(format!("{} not byte-stable", args.join(" ")));
        }
    }
    (
        ok,
        format!(
            "{} corpus files, {instances} instances, {stable}/{} reports byte-stable{}",
            files.len(),
            runs.len(),
            if problems.is_empty() {
                String::new()
            } else {
                format!("; {}", problems.join("; "))
            }
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("replay attacks", criterion_1),
        ("bounded tgndc", criterion_2),
        ("abstraction gap suites", criterion_3),
        ("time properties", criterion_4),
        ("deduction oracle", criterion_5),
        ("simulation sanity", criterion_6),
        ("round trip", criterion_7),
    ];
    let mut failed = 0;
    for (i, (label, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f();
        failed += usize::from(!ok);
        println!(
            "{} criterion {} {label}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
