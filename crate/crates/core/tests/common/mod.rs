//! Seeded generators shared by the property tests and the acceptance run.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use atcws::messages::{AtomKind, Ctor, Knowledge, Rule, Term};
use atcws::syntax::{Defs, Network, Node, Process, ProcessDef};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn atoms() -> Vec<Term> {
    vec![
        Term::atom("t", AtomKind::Tag),
        Term::atom("u", AtomKind::Tag),
        Term::atom("n0", AtomKind::Nonce),
        Term::atom("k", AtomKind::BaseKey),
        Term::chain("kc", 2),
    ]
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    defs: Vec<(String, usize)>,
    fresh: usize,
}

impl Gen<'_> {
    fn leaf(&mut self, scope: &[String]) -> Term {
        if !scope.is_empty() && self.rng.gen_bool(0.5) {
            Term::var(scope.choose(self.rng).unwrap())
        } else {
            atoms().choose(self.rng).unwrap().clone()
        }
    }

    fn term(&mut self, scope: &[String], depth: usize) -> Term {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return self.leaf(scope);
        }
        let c = *[
            Ctor::Pair,
            Ctor::Mac,
            Ctor::Hash,
            Ctor::Enc,
            Ctor::F,
            Ctor::Prf,
        ]
        .choose(self.rng)
        .unwrap();
        let args = (0..c.arity())
            .map(|_| self.term(scope, depth - 1))
            .collect();
        Term::app(c, args)
    }

    fn binder(&mut self) -> String {
        self.fresh += 1;
        format!("x{}", self.fresh)
    }

    /// Calls appear only where `guarded` holds, so every recursion passes a
    /// clock tick.
    fn process(&mut self, depth: usize, scope: &[String], guarded: bool) -> Process {
        let call_ok = guarded && !self.defs.is_empty();
        if depth == 0 {
            return if call_ok && self.rng.gen_bool(0.6) {
                self.call(scope)
            } else {
                Process::Nil
            };
        }
        match self.rng.gen_range(0..9) {
            0 => Process::Nil,
            1 | 2 => {
                let w = self.term(scope, 1);
                Process::bang(w, self.process(depth - 1, scope, guarded))
            }
            3 => {
                let x = self.binder();
                let mut inner = scope.to_vec();
                inner.push(x.clone());
                let body = self.process(depth - 1, &inner, guarded);
                Process::recv(&x, body, self.process(depth - 1, scope, true))
            }
            4 => {
                let n = self.rng.gen_range(1..=2);
                let branches = (0..n)
                    .map(|_| self.process(depth - 1, scope, guarded))
                    .collect();
                Process::sum(branches, self.process(depth - 1, scope, true))
            }
            5 => Process::sleep(self.process(depth - 1, scope, true)),
            6 => {
                let l = self.term(scope, 1);
                let r = self.term(scope, 1);
                let then = self.process(depth - 1, scope, guarded);
                Process::matching(l, r, then, self.process(depth - 1, scope, guarded))
            }
            7 => {
                let rule = *[
                    Rule::Fst,
                    Rule::Snd,
                    Rule::Ctor(Ctor::Dec),
                    Rule::Ctor(Ctor::Pair),
                    Rule::Ctor(Ctor::Hash),
                ]
                .choose(self.rng)
                .unwrap();
                let premises = (0..rule.arity()).map(|_| self.term(scope, 1)).collect();
                let x = self.binder();
                let mut inner = scope.to_vec();
                inner.push(x.clone());
                let then = self.process(depth - 1, &inner, guarded);
                Process::deduce(
                    premises,
                    rule,
                    &x,
                    then,
                    self.process(depth - 1, scope, guarded),
                )
            }
            _ if call_ok => self.call(scope),
            _ => Process::sleep(self.process(depth - 1, scope, true)),
        }
    }

    fn call(&mut self, scope: &[String]) -> Process {
        let (h, arity) = self.defs.choose(self.rng).unwrap().clone();
        let args = (0..arity).map(|_| self.term(scope, 1)).collect();
        Process::call(&h, args)
    }
}

/// A well-formed network in the time-guarded fragment: at most `max_nodes`
/// nodes on a connected symmetric topology, process depth at most
/// `max_depth`, recursion only behind a clock tick.
pub fn random_network(rng: &mut ChaCha8Rng, max_nodes: usize, max_depth: usize) -> Network {
    let n_defs = rng.gen_range(0..=2);
    let sig: Vec<(String, usize)> = (0..n_defs)
        .map(|i| (format!("X{i}"), rng.gen_range(0..=1)))
        .collect();
    let mut g = Gen {
        rng,
        defs: sig.clone(),
        fresh: 0,
    };
    let mut defs = Defs::new();
    for (h, arity) in &sig {
        let params: Vec<String> = (0..*arity).map(|i| format!("p{i}")).collect();
        let body = g.process(max_depth, &params, false);
        let d = ProcessDef {
            name: h.as_str().into(),
            params: params.iter().map(|p| p.as_str().into()).collect(),
            body,
        };
        defs.insert(d.name.clone(), Arc::new(d));
    }
    let k = g.rng.gen_range(1..=max_nodes);
    let names: Vec<String> = (0..k).map(|i| format!("n{i}")).collect();
    let mut nbrs: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
    for i in 1..k {
        let j = g.rng.gen_range(0..i);
        nbrs[i].insert(names[j].clone());
        nbrs[j].insert(names[i].clone());
    }
    for i in 0..k {
        for j in i + 1..k {
            if g.rng.gen_bool(0.3) {
                nbrs[i].insert(names[j].clone());
                nbrs[j].insert(names[i].clone());
            }
        }
        if g.rng.gen_bool(0.5) {
            nbrs[i].insert("obs".into());
        }
    }
    let nodes = (0..k)
        .map(|i| {
            let p = g.process(max_depth, &[], true);
            let nb: Vec<&str> = nbrs[i].iter().map(String::as_str).collect();
            Node::new(&names[i], p, &nb)
        })
        .collect();
    Network::new(nodes, Arc::new(defs))
}

/// Knowledge of at most `max_size` messages of depth at most 2 over a small
/// alphabet.
pub fn random_knowledge(rng: &mut ChaCha8Rng, max_size: usize) -> Knowledge {
    let n = rng.gen_range(0..=max_size);
    let mut g = Gen {
        rng,
        defs: Vec::new(),
        fresh: 0,
    };
    Knowledge::new((0..n).map(|_| g.term(&[], 2)))
}

/// Subterms of `terms`, plus every chain key below a chain key that occurs.
pub fn universe<'a>(terms: impl IntoIterator<Item = &'a Term>) -> BTreeSet<Term> {
    let mut u = BTreeSet::new();
    for t in terms {
        t.subterms(&mut u);
    }
    let keys: Vec<Term> = u
        .iter()
        .filter(|t| matches!(t, Term::ChainKey(..)))
        .cloned()
        .collect();
    for k in keys {
        if let Term::ChainKey(c, i) = k {
            u.extend((0..i).map(|j| Term::ChainKey(c.clone(), j)));
        }
    }
    u
}

/// Closure of `phi` under every rule, keeping only results inside
/// `universe`: a naive fixpoint over all premise tuples. Derivations in
/// this theory only ever need subterms of the goal and of `phi`, so the
/// restriction is exact when the universe covers both.
pub fn brute_closure(phi: &Knowledge, universe: &BTreeSet<Term>) -> BTreeSet<Term> {
    let rules: Vec<Rule> = [Rule::Fst, Rule::Snd]
        .into_iter()
        .chain(Ctor::ALL.into_iter().map(Rule::Ctor))
        .collect();
    let mut set: BTreeSet<Term> = phi.generators.clone();
    loop {
        let cur: Vec<Term> = set.iter().cloned().collect();
        let mut added = false;
        for r in &rules {
            for a in &cur {
                let seconds: &[Term] = if r.arity() == 2 {
                    &cur
                } else {
                    std::slice::from_ref(a)
                };
                for b in seconds {
                    let premises = if r.arity() == 2 {
                        vec![a.clone(), b.clone()]
                    } else {
                        vec![a.clone()]
                    };
                    if let Ok(Some(w)) = r.apply(&premises) {
                        if universe.contains(&w) && set.insert(w) {
                            added = true;
                        }
                    }
                }
            }
        }
        if !added {
            return set;
        }
    }
}

/// A random message of depth at most `depth` over `pool`.
pub fn random_target(rng: &mut ChaCha8Rng, pool: &[Term], depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.3) {
        return pool.choose(rng).unwrap().clone();
    }
    let c = *Ctor::ALL.choose(rng).unwrap();
    let args = (0..c.arity())
        .map(|_| random_target(rng, pool, depth - 1))
        .collect();
    Term::app(c, args)
}
