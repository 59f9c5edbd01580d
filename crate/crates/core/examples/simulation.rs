//! Weak simulation between small networks, with a counterexample in the
//! failing direction.

use atcws::dsl;
use atcws::equivalence::{simulates, SimOptions};

const SRC: &str = r#"
atoms { tag ping }
def Eager = out(ping).sleep.Eager
def Slow = sleep.out(ping).sleep.Slow
def Lazy = choice { tau.out(ping).sleep.Lazy } timeout Lazy
network eager {
  node a [ Eager ] nbr {obs}
}
network lazy {
  node a [ Lazy ] nbr {obs}
}
network slow {
  node a [ Slow ] nbr {obs}
}
"#;

fn main() {
    let m = dsl::parse(SRC).unwrap();
    let net = |n: &str| m.network(n).unwrap();
    let opts = SimOptions::new(4);
    for (imp, spec) in [
        ("eager", "lazy"),
        ("lazy", "eager"),
        ("eager", "slow"),
        ("slow", "eager"),
    ] {
        let label = format!("{imp} <= {spec}");
        let (imp, spec) = (net(imp), net(spec));
        let r = simulates(spec, imp, &opts).unwrap();
        println!("{label}: {}", if r.holds() { "holds" } else { "fails" });
        if let Some((trace, _)) = r.counterexample {
            println!("  witness: {}", trace.render().trim_end());
        }
    }
}
