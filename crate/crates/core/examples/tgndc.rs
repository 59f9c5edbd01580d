//! Timed non-interference for the key-chain bootstrap, including the
//! stability check of the attacker knowledge sequence.

use atcws::protocols::{build, Params};
use atcws::tgndc::{check_tgndc, Bounds};

fn main() {
    let inst = build("mutesla-boot", "integrity", &Params::default()).unwrap();
    let b = Bounds {
        max_sigma: 6,
        ..Bounds::default()
    };
    let q = inst
        .query(&b)
        .unwrap()
        .expect("integrity has an abstraction");
    let out = check_tgndc(&q).unwrap();
    print!("{}", out.report.render());
    std::process::exit(out.report.verdict.exit_code());
}
