//! Build the timed state graph of a bundled protocol and write it as Graphviz.

use atcws::lts::{explore, Inputs};
use atcws::protocols::{build, Params};

fn main() {
    let inst = build("leap", "base", &Params::default()).unwrap();
    let g = explore(&inst.system, 3, Inputs::none()).unwrap();
    eprintln!("{} states, {} transitions", g.states.len(), g.edges.len());
    print!("{}", g.to_dot());
}
