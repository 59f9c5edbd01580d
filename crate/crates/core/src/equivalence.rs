//! Bounded weak simulation and bisimulation with counterexample extraction.
//!
//! The product of implementation and specification states is explored up to
//! a clock horizon. A pair is bad when some implementation move has no weak
//! match leading to a good pair; badness is a least fixpoint computed with
//! per-obligation counters. Pairs whose clock move lies past the horizon are
//! treated as good, which makes `holds` a bounded verdict.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::rc::Rc;

use thiserror::Error;

use crate::lts::{Inputs, Label, Lts, LtsError, Trace};
use crate::report::Verdict;
use crate::syntax::Network;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("ill-formed network: {0}")]
    IllFormed(String),
    #[error(transparent)]
    Lts(#[from] LtsError),
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub max_sigma: usize,
    pub tau_bound: usize,
    pub max_states: usize,
    pub max_pairs: usize,
    pub inputs: Inputs,
    /// Implementation nodes whose choice and broadcast fire atomically.
    pub impl_fused: Vec<String>,
}

impl SimOptions {
    pub fn new(max_sigma: usize) -> SimOptions {
        SimOptions {
            max_sigma,
            tau_bound: 10_000,
            max_states: 2_000_000,
            max_pairs: 4_000_000,
            inputs: Inputs::none(),
            impl_fused: Vec::new(),
        }
    }

    pub fn with_inputs(mut self, inputs: Inputs) -> SimOptions {
        self.inputs = inputs;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub verdict: Verdict,
    /// Offending trace and the implementation label the specification cannot follow.
    pub counterexample: Option<(Trace, Label)>,
    /// True when the counterexample is a branching one: the specification can
    /// follow the trace, but every way of doing so gets stuck later.
    pub branching: bool,
    pub explored_pairs: usize,
    pub bound_hit: bool,
    pub notes: Vec<String>,
}

impl SimResult {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

struct Product<'a> {
    imp: &'a mut Lts,
    spec: &'a mut Lts,
    opts: &'a SimOptions,
    weak_memo: HashMap<(u32, Label), Rc<Vec<u32>>>,
    tau_truncated: bool,
}

impl Product<'_> {
    fn weak(&mut self, t: u32, a: &Label) -> Result<Rc<Vec<u32>>, LtsError> {
        let key = (t, a.clone());
        if let Some(v) = self.weak_memo.get(&key) {
            return Ok(v.clone());
        }
        let (v, trunc) = self.spec.weak(&[t], a, self.opts.tau_bound)?;
        self.tau_truncated |= trunc;
        let v = Rc::new(v);
        self.weak_memo.insert(key, v.clone());
        Ok(v)
    }
}

fn check_wf(n: &Network, side: &str) -> Result<(), SimError> {
    let r = n.check_well_formed();
    if r.verdict != Verdict::Holds {
        return Err(SimError::IllFormed(format!(
            "{side}: {}",
            r.body.join("; ")
        )));
    }
    Ok(())
}

/// Checks `imp ≲ spec` up to the clock horizon.
pub fn simulates(spec: &Network, imp: &Network, opts: &SimOptions) -> Result<SimResult, SimError> {
    check_wf(spec, "specification")?;
    check_wf(imp, "implementation")?;
    let fused: Vec<&str> = opts.impl_fused.iter().map(String::as_str).collect();
    let mut il = Lts::with(imp, opts.inputs.clone(), &fused)?;
    let mut sl = Lts::with(spec, opts.inputs.clone(), &[])?;
    il.max_states = opts.max_states;
    sl.max_states = opts.max_states;
    simulate_lts(&mut il, &mut sl, opts)
}

pub fn simulate_lts(il: &mut Lts, sl: &mut Lts, opts: &SimOptions) -> Result<SimResult, SimError> {
    let mut pr = Product {
        imp: il,
        spec: sl,
        opts,
        weak_memo: HashMap::new(),
        tau_truncated: false,
    };
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut index: HashMap<(u32, u32), u32> = HashMap::new();
    // Per pair: one obligation per implementation move, as (move index, count).
    let mut obligations: Vec<Vec<(usize, usize)>> = Vec::new();
    // Reverse edges: candidate pair -> (pair, obligation slot).
    let mut rev: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut bad: Vec<Option<(usize, usize)>> = Vec::new(); // (rank, blocking move)
    let mut bound_hit = false;
    let mut pair_overflow = false;

    let root = (pr.imp.initial, pr.spec.initial);
    pairs.push(root);
    index.insert(root, 0);
    obligations.push(Vec::new());
    rev.push(Vec::new());
    bad.push(None);
    let mut current = VecDeque::from([0u32]);
    let mut depth = 0usize;
    let mut initially_bad: Vec<u32> = Vec::new();
    while !current.is_empty() {
        let mut next = VecDeque::new();
        while let Some(p) = current.pop_front() {
            let (s, t) = pairs[p as usize];
            let edges = pr.imp.succ(s)?;
            let mut obs = Vec::with_capacity(edges.len());
            for (k, e) in edges.iter().enumerate() {
                let is_sigma = e.label == Label::Sigma;
                if is_sigma && depth >= opts.max_sigma {
                    bound_hit = true;
                    continue;
                }
                let ws = pr.weak(t, &e.label)?;
                let slot = obs.len() as u32;
                let mut count = 0;
                for &t2 in ws.iter() {
                    let key = (e.to, t2);
                    let q = match index.get(&key) {
                        Some(&q) => q,
                        None => {
                            if pairs.len() >= opts.max_pairs {
                                pair_overflow = true;
                                continue;
                            }
                            let q = pairs.len() as u32;
                            pairs.push(key);
                            index.insert(key, q);
                            obligations.push(Vec::new());
                            rev.push(Vec::new());
                            bad.push(None);
                            if is_sigma {
                                next.push_back(q);
                            } else {
                                current.push_back(q);
                            }
                            q
                        }
                    };
                    rev[q as usize].push((p, slot));
                    count += 1;
                }
                obs.push((k, count));
                if count == 0 && bad[p as usize].is_none() {
                    bad[p as usize] = Some((0, k));
                    initially_bad.push(p);
                }
            }
            obligations[p as usize] = obs;
        }
        current = next;
        depth += 1;
    }

    // Least fixpoint of badness, ranked by propagation round.
    let mut work: VecDeque<u32> = initially_bad.into_iter().collect();
    while let Some(q) = work.pop_front() {
        let rank = bad[q as usize].expect("bad").0;
        for &(p, slot) in &rev[q as usize].clone() {
            let ob = &mut obligations[p as usize][slot as usize];
            ob.1 -= 1;
            if ob.1 == 0 && bad[p as usize].is_none() {
                bad[p as usize] = Some((rank + 1, ob.0));
                work.push_back(p);
            }
        }
    }

    let spec_truncated = pr.spec.truncated || pr.tau_truncated || pair_overflow;
    let mut res = SimResult {
        verdict: Verdict::Holds,
        counterexample: None,
        branching: false,
        explored_pairs: pairs.len(),
        bound_hit,
        notes: Vec::new(),
    };
    if bad[0].is_some() {
        if spec_truncated {
            res.verdict = Verdict::Inconclusive;
            res.bound_hit = true;
            res.notes
                .push("specification exploration was truncated; failure not confirmed".into());
            return Ok(res);
        }
        res.verdict = Verdict::Fails;
        match trace_counterexample(&mut pr, opts)? {
            Some(cx) => res.counterexample = Some(cx),
            None => {
                res.branching = true;
                res.counterexample = Some(branching_counterexample(&mut pr, &pairs, &index, &bad)?);
                res.notes.push(
                    "no trace inclusion failure within the bound: the counterexample is branching"
                        .into(),
                );
            }
        }
    } else if spec_truncated || pr.imp.truncated {
        res.verdict = Verdict::Inconclusive;
        res.bound_hit = true;
        res.notes
            .push("state budget or tau-closure bound truncated the check".into());
    }
    Ok(res)
}

/// Shortest implementation run whose observable trace the specification
/// cannot follow at all.
fn trace_counterexample(
    pr: &mut Product<'_>,
    opts: &SimOptions,
) -> Result<Option<(Trace, Label)>, LtsError> {
    let mut sets: Vec<Rc<Vec<u32>>> = Vec::new();
    let mut set_ids: HashMap<Rc<Vec<u32>>, u32> = HashMap::new();
    let intern =
        |v: Vec<u32>, sets: &mut Vec<Rc<Vec<u32>>>, ids: &mut HashMap<Rc<Vec<u32>>, u32>| {
            let v = Rc::new(v);
            if let Some(&i) = ids.get(&v) {
                return i;
            }
            let i = sets.len() as u32;
            sets.push(v.clone());
            ids.insert(v, i);
            i
        };
    let start = pr.weak(pr.spec.initial, &Label::Tau)?.as_ref().clone();
    let s0 = intern(start, &mut sets, &mut set_ids);
    // Node: (impl state, spec set, sigma depth); parent pointers for the path.
    type Node = (u32, u32, usize, Option<(usize, Label)>);
    let mut nodes: Vec<Node> = vec![(pr.imp.initial, s0, 0, None)];
    let mut seen: HashMap<(u32, u32), ()> = HashMap::from([((pr.imp.initial, s0), ())]);
    let mut q = VecDeque::from([0usize]);
    const LIMIT: usize = 2_000_000;
    while let Some(x) = q.pop_front() {
        let (s, set, d, _) = nodes[x].clone();
        for e in pr.imp.succ(s)?.iter() {
            let is_sigma = e.label == Label::Sigma;
            if is_sigma && d >= opts.max_sigma {
                continue;
            }
            let next: Vec<u32> = if e.label == Label::Tau {
                sets[set as usize].as_ref().clone()
            } else {
                let mut acc = BTreeSet::new();
                for &t in sets[set as usize].clone().iter() {
                    acc.extend(pr.weak(t, &e.label)?.iter().copied());
                }
                acc.into_iter().collect()
            };
            if next.is_empty() {
                let mut steps = vec![e.label.clone()];
                let mut cur = x;
                while let Some((parent, l)) = nodes[cur].3.clone() {
                    steps.push(l);
                    cur = parent;
                }
                steps.reverse();
                return Ok(Some((Trace::new(steps), e.label.clone())));
            }
            let nid = intern(next, &mut sets, &mut set_ids);
            if seen.insert((e.to, nid), ()).is_none() {
                if nodes.len() >= LIMIT {
                    return Ok(None);
                }
                nodes.push((
                    e.to,
                    nid,
                    d + usize::from(is_sigma),
                    Some((x, e.label.clone())),
                ));
                q.push_back(nodes.len() - 1);
            }
        }
    }
    Ok(None)
}

/// Follows blocking moves of bad pairs along decreasing rank.
fn branching_counterexample(
    pr: &mut Product<'_>,
    pairs: &[(u32, u32)],
    index: &HashMap<(u32, u32), u32>,
    bad: &[Option<(usize, usize)>],
) -> Result<(Trace, Label), LtsError> {
    let mut steps = Vec::new();
    let mut p = 0u32;
    loop {
        let (s, t) = pairs[p as usize];
        let (_, k) = bad[p as usize].expect("bad pair");
        let e = pr.imp.succ(s)?[k].clone();
        let ws = pr.weak(t, &e.label)?;
        let next = ws
            .iter()
            .filter_map(|&t2| index.get(&(e.to, t2)).copied())
            .filter(|q| bad[*q as usize].is_some())
            .min_by_key(|q| bad[*q as usize].map(|b| b.0));
        match next {
            Some(q) if !ws.is_empty() => {
                steps.push(e.label.clone());
                p = q;
            }
            _ => return Ok((Trace::new(steps), e.label)),
        }
    }
}

/// Both directions of bounded weak simulation.
pub fn bisimilar(m: &Network, n: &Network, opts: &SimOptions) -> Result<SimResult, SimError> {
    let fwd = simulates(n, m, opts)?;
    if fwd.verdict == Verdict::Fails {
        return Ok(fwd);
    }
    let bwd = simulates(m, n, opts)?;
    if bwd.verdict == Verdict::Fails {
        return Ok(bwd);
    }
    let mut r = fwd;
    r.verdict = r.verdict.and(bwd.verdict);
    r.explored_pairs += bwd.explored_pairs;
    r.bound_hit |= bwd.bound_hit;
    r.notes.extend(bwd.notes);
    Ok(r)
}

/// Bisimilarity of `m | ctx` and `n | ctx`: a falsification test for the
/// congruence property on one context.
pub fn congruence_spot_check(
    m: &Network,
    n: &Network,
    ctx: &Network,
    opts: &SimOptions,
) -> Result<SimResult, SimError> {
    bisimilar(&m.compose(ctx), &n.compose(ctx), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::run_trace;
    use crate::messages::{Name, Term};
    use crate::syntax::{Defs, Node, Process, ProcessDef};
    use std::sync::Arc;

    fn defs() -> Arc<Defs> {
        let tick = ProcessDef {
            name: Name::from("Tick"),
            params: vec![],
            body: Process::sleep(Process::call("Tick", vec![])),
        };
        Arc::new([(tick.name.clone(), Arc::new(tick))].into_iter().collect())
    }

    fn one(name: &str, p: Process) -> Network {
        Network::new(vec![Node::new(name, p, &["obs"])], defs())
    }

    fn a() -> Term {
        Term::other("a")
    }

    #[test]
    fn reflexive() {
        let n = one(
            "m",
            Process::bang(a(), Process::sleep(Process::call("Tick", vec![]))),
        );
        assert!(simulates(&n, &n, &SimOptions::new(4)).unwrap().holds());
    }

    #[test]
    fn early_emission_is_caught() {
        let spec = one("m", Process::sleep(Process::bang(a(), Process::Nil)));
        let imp = one("m", Process::bang(a(), Process::Nil));
        let r = simulates(&spec, &imp, &SimOptions::new(3)).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let (trace, blocking) = r.counterexample.unwrap();
        assert_eq!(blocking, Label::obs(a(), &["obs"]));
        assert!(!run_trace(&imp, &trace, 100).unwrap().states.is_empty());
        assert!(run_trace(&spec, &trace, 100).unwrap().states.is_empty());
        // The converse direction holds: the spec's emission is later, but the
        // implementation can never emit after one tick.
        let back = simulates(&imp, &spec, &SimOptions::new(3)).unwrap();
        assert_eq!(back.verdict, Verdict::Fails);
    }

    #[test]
    fn tau_is_absorbed() {
        let spec = one("m", Process::bang(a(), Process::Nil));
        let imp = one(
            "m",
            Process::sum(vec![Process::bang(a(), Process::Nil)], Process::Nil),
        );
        // The implementation may time out instead of emitting: not simulated.
        assert_eq!(
            simulates(&spec, &imp, &SimOptions::new(2)).unwrap().verdict,
            Verdict::Fails
        );
        // The other way round every move is matched.
        assert!(simulates(&imp, &spec, &SimOptions::new(2)).unwrap().holds());
    }

    #[test]
    fn names_are_observable_through_inputs() {
        let p = Process::sleep(Process::Nil);
        let m = Network::new(vec![Node::new("m", p.clone(), &["k"])], defs());
        let n = Network::new(vec![Node::new("n", p, &["k"])], defs());
        let opts = SimOptions::new(2).with_inputs(Inputs::constant(vec![(Name::from("m"), a())]));
        assert_eq!(bisimilar(&m, &n, &opts).unwrap().verdict, Verdict::Fails);
        assert!(bisimilar(&m, &m, &opts).unwrap().holds());
    }

    #[test]
    fn unit_context() {
        let n = one("m", Process::call("Tick", vec![]));
        assert!(
            bisimilar(&n, &n.compose(&Network::empty()), &SimOptions::new(3))
                .unwrap()
                .holds()
        );
    }
}
