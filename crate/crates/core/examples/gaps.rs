//! Measure the achievable end-to-authentication gaps of every abstraction.

use atcws::protocols::{all_instances, gap_suite, Params};

fn main() {
    for inst in all_instances(&Params::default()) {
        if inst.abstraction.is_none() {
            continue;
        }
        let rep = gap_suite(&inst, 3).unwrap();
        println!("{}\n", rep.render());
    }
}
