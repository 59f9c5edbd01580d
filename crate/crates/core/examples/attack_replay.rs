//! Replay the scripted attacks and compare the observed gaps to the
//! specified ones.

use atcws::protocols::{replay_attack, Params};

fn main() {
    for proto in ["mutesla-boot", "leap", "lisp"] {
        let rep = replay_attack(proto, &Params::default(), 10_000).unwrap();
        println!("{}\n", rep.render());
    }
}
