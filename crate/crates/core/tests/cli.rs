//! The binary's exit codes and headline output.

use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_atcws"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn leap_attack_fails_with_gap() {
    let (code, out, _) = run(&["attack", "leap"]);
    assert_eq!(code, 1);
    assert!(
        out.contains("verdict: fails (agreement gap 4 > 2)"),
        "{out}"
    );
}

#[test]
fn boot_integrity_query_holds() {
    let (code, out, _) = run(&["tgndc", "queries/mutesla-boot-integrity.q"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("stability: holds"));
}

#[test]
fn asymmetric_neighbours_are_ill_formed() {
    let (code, out, _) = run(&["check-wf", "models/asymmetric.atcws"]);
    assert_eq!(code, 1);
    assert!(out.contains("asymmetric"), "{out}");
}

#[test]
fn usage_and_parse_errors_exit_3() {
    assert_eq!(run(&["no-such-command"]).0, 3);
    assert_eq!(run(&["check-wf", "models/does-not-exist.atcws"]).0, 3);
    assert_eq!(run(&["attack", "tls"]).0, 3);
    let dir = std::env::temp_dir().join(format!("atcws-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.atcws");
    std::fs::write(&bad, "network n {\n  node m [ out(q).nil ] nbr {}\n}\n").unwrap();
    let (code, _, err) = run(&["check-wf", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains(":2:16: unresolved identifier q"), "{err}");
}

#[test]
fn inconclusive_exits_2() {
    let (code, out, _) = run(&["explore", "@mutesla-auth/base", "--max-states", "5"]);
    assert_eq!(code, 2, "{out}");
}

#[test]
fn simulation_and_traces() {
    assert_eq!(
        run(&["sim", "models/ping.atcws#beacon", "models/ping.atcws#lazy"]).0,
        0
    );
    assert_eq!(
        run(&["sim", "models/ping.atcws#lazy", "models/ping.atcws#beacon"]).0,
        1
    );
    assert_eq!(
        run(&["trace", "models/ping.atcws#beacon", "traces/ping.trace"]).0,
        0
    );
    assert_eq!(
        run(&[
            "trace",
            "@leap/agreement#attacked",
            "traces/leap-agreement.trace"
        ])
        .0,
        0
    );
    assert_eq!(
        run(&[
            "trace",
            "@leap/agreement#abstraction",
            "traces/leap-agreement.trace"
        ])
        .0,
        1
    );
}

#[test]
fn config_file_and_jobs() {
    let dir = std::env::temp_dir().join(format!("atcws-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bounds.toml");
    std::fs::write(&cfg, "max_sigma = 3\njobs = 2\n[params]\nh = 2\n").unwrap();
    let (code, out, _) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "time-props",
        "@mutesla-auth/integrity",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("max_sigma=3"));
    let (serial, a, _) = run(&["tgndc", "queries/ping.q"]);
    let (parallel, b, _) = run(&["--jobs", "3", "tgndc", "queries/ping.q"]);
    assert_eq!((serial, a), (parallel, b));
    std::fs::write(&cfg, "max_sigmaa = 3\n").unwrap();
    assert_eq!(
        run(&["--config", cfg.to_str().unwrap(), "list-protocols"]).0,
        3
    );
}

#[test]
fn dot_export() {
    let path = std::env::temp_dir().join(format!("atcws-{}.dot", std::process::id()));
    let (code, _, _) = run(&[
        "explore",
        "@leap/base",
        "--max-sigma",
        "2",
        "--dot",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let dot = std::fs::read_to_string(&path).unwrap();
    assert!(dot.starts_with("digraph lts {"));
}
