//! The bundled model, query and trace files match what the library emits.

use std::path::PathBuf;

use atcws::dsl;
use atcws::protocols::{all_instances, build, Params};
use atcws::tgndc::Bounds;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(root().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn instance_files_are_current() {
    let mut insts = all_instances(&Params::default());
    let h2 = build(
        "mutesla-auth",
        "integrity",
        &Params {
            h: 2,
            ..Params::default()
        },
    )
    .unwrap();
    let mut h2_named = h2.clone();
    h2_named.variant = "integrity-h2".into();
    insts.push(h2_named);
    for inst in insts {
        let stem = format!("{}-{}", inst.name, inst.variant);
        let model = format!("models/{stem}.atcws");
        assert_eq!(
            read(&model),
            dsl::emit(&dsl::instance_model(&inst)),
            "{model}"
        );
        let q = dsl::instance_queries(&inst, &format!("../{model}"), &Bounds::default());
        assert_eq!(
            read(&format!("queries/{stem}.q")),
            dsl::emit(&q),
            "{stem}.q"
        );
        if let Some(t) = &inst.expected {
            assert_eq!(
                read(&format!("traces/{stem}.trace")),
                dsl::emit_trace(t),
                "{stem}.trace"
            );
        }
    }
}

#[test]
fn every_query_file_loads_and_round_trips() {
    for entry in std::fs::read_dir(root().join("queries")).unwrap() {
        let path = entry.unwrap().path();
        let (m, env) = dsl::load(&path).unwrap_or_else(|e| panic!("{e}"));
        assert!(!m.queries.is_empty(), "{}", path.display());
        let text = dsl::emit(&m);
        let mut imported = env.clone();
        imported
            .knowledge
            .retain(|k, _| !m.knowledge.iter().any(|(n, _)| n == k));
        assert_eq!(
            dsl::parse_with(&text, &imported).unwrap(),
            m,
            "{}",
            path.display()
        );
    }
}

#[test]
fn hand_written_models_normalize() {
    for f in ["models/ping.atcws", "models/asymmetric.atcws"] {
        let m = dsl::parse(&read(f)).unwrap();
        let text = dsl::emit(&m);
        let again = dsl::parse(&text).unwrap();
        assert_eq!(again, m);
        assert_eq!(dsl::emit(&again), text);
    }
}

#[test]
fn import_cycles_are_reported() {
    let dir = std::env::temp_dir().join(format!("atcws-cycle-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("a.atcws"), "import \"b.atcws\"\n").unwrap();
    std::fs::write(dir.join("b.atcws"), "import \"a.atcws\"\n").unwrap();
    let e = dsl::load(&dir.join("a.atcws")).unwrap_err();
    assert!(e.to_string().contains("import cycle"), "{e}");
}
