//! Check the timing laws on every reachable state of each bundled system.

use atcws::lts::time_violations;
use atcws::protocols::{all_instances, Params};

fn main() {
    for inst in all_instances(&Params::default()) {
        let v = time_violations(&inst.system, 4, 1000).unwrap();
        println!(
            "{}/{}: {} states, {} violations, longest instantaneous run {}",
            inst.name,
            inst.variant,
            v.states,
            v.total(),
            v.longest_instantaneous
        );
    }
}
