//! Parse a model file, print its normal form, and check that reparsing it
//! gives the same model.

use atcws::dsl;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "models/ping.atcws".into());
    let (model, env) = dsl::load(path.as_ref()).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(3)
    });
    let text = dsl::emit(&model);
    print!("{text}");
    let mut outer = env.clone();
    outer.networks.retain(|n, _| model.network(n).is_none());
    let again = dsl::parse_with(&text, &outer).expect("emitted text parses");
    assert_eq!(again, model);
    eprintln!(
        "round trip ok: {} networks, {} queries",
        model.networks.len(),
        model.queries.len()
    );
}
