//! What an eavesdropper can build from a handful of captured messages.

use atcws::messages::{deducible, AtomKind, Knowledge, Term};

fn main() {
    let k = Term::atom("k", AtomKind::BaseKey);
    let n = Term::atom("n", AtomKind::Nonce);
    let secret = Term::atom("s", AtomKind::Other);
    let phi = Knowledge::new([
        Term::pair(n.clone(), Term::enc(k.clone(), secret.clone())),
        Term::chain("kc", 3),
    ]);
    let goals = [
        ("n", n.clone()),
        ("s", secret.clone()),
        ("mac(kc_3, n)", Term::mac(Term::chain("kc", 3), n.clone())),
        ("kc_1", Term::chain("kc", 1)),
        ("kc_5", Term::chain("kc", 5)),
        ("hash(pair(n, n))", Term::hash(Term::pair(n.clone(), n))),
    ];
    for (label, w) in goals {
        println!("{label:>18}: {}", deducible(&w, &phi, 0));
    }
    let with_key = phi.union(&Knowledge::new([k]));
    println!("{:>18}: {}", "s given k", deducible(&secret, &with_key, 0));
}
