//! Attacker wiring, knowledge sequences, the top attacker, stability and the
//! timed non-interference check with its compositional variant.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::equivalence::{simulates, SimError, SimOptions, SimResult};
use crate::lts::{explore_raw, run_trace, ExploreOptions, Label, LtsError};
use crate::messages::{deducible, name, synth_candidates, Knowledge, Name, Rule, Shape, Term};
use crate::report::{CheckReport, Verdict};
use crate::syntax::{Defs, Network, Node, Process, ProcessDef};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Extension {
    /// Slots past the list repeat the last one.
    Constant,
    /// Produced by recording broadcasts; past the list, the last slot repeats.
    Recorded,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KnowledgeSequence {
    pub slots: Vec<Knowledge>,
    pub extension: Extension,
}

impl KnowledgeSequence {
    pub fn new(slots: Vec<Knowledge>) -> KnowledgeSequence {
        KnowledgeSequence {
            slots,
            extension: Extension::Constant,
        }
    }

    pub fn at(&self, j: usize) -> Knowledge {
        self.slots
            .get(j)
            .or(self.slots.last())
            .cloned()
            .unwrap_or_default()
    }

    pub fn is_monotone(&self) -> bool {
        self.slots.windows(2).all(|w| w[0].is_subset(&w[1]))
    }

    /// The same first slot at every index.
    pub fn truncated(&self) -> KnowledgeSequence {
        KnowledgeSequence::new(vec![self.at(0)])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackerWiring {
    pub protocol: Vec<Name>,
    pub attackers: Vec<Name>,
    pub observed: BTreeSet<Name>,
}

impl AttackerWiring {
    pub fn new(pairs: &[(&str, &str)], observed: &[&str]) -> AttackerWiring {
        AttackerWiring {
            protocol: pairs.iter().map(|p| name(p.0)).collect(),
            attackers: pairs.iter().map(|p| name(p.1)).collect(),
            observed: observed.iter().map(|s| name(s)).collect(),
        }
    }

    pub fn attacker_of(&self, m: &str) -> Option<&Name> {
        self.protocol
            .iter()
            .position(|p| &**p == m)
            .map(|i| &self.attackers[i])
    }

    fn validate(&self, m: &Network) -> Result<(), TgndcError> {
        let p: BTreeSet<Name> = self.protocol.iter().cloned().collect();
        let a: BTreeSet<Name> = self.attackers.iter().cloned().collect();
        let problem = if self.protocol.len() != self.attackers.len() {
            Some("protocol and attacker lists differ in length".to_string())
        } else if p.len() != self.protocol.len() || a.len() != self.attackers.len() {
            Some("duplicate names in wiring".to_string())
        } else if p != m.nds() {
            Some("protocol nodes differ from the network's nodes".to_string())
        } else if !a.is_disjoint(&p) {
            Some("attacker names overlap protocol nodes".to_string())
        } else if a.contains("obs") || p.contains("obs") {
            Some("obs cannot be wired".to_string())
        } else if !self.observed.is_subset(&p) {
            Some("observed nodes outside the protocol".to_string())
        } else {
            None
        };
        match problem {
            Some(s) => Err(TgndcError::Wiring(s)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum TgndcError {
    #[error("wiring: {0}")]
    Wiring(String),
    #[error("specification environment must contain only obs, found {0}")]
    SpecEnv(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Lts(#[from] LtsError),
}

/// Each protocol node keeps its in-network neighbours, gains its attacker,
/// and sees `obs` iff observed.
pub fn wire_observed(m: &Network, w: &AttackerWiring) -> Result<Network, TgndcError> {
    w.validate(m)?;
    let nds = m.nds();
    let nodes = m
        .nodes
        .iter()
        .map(|n| {
            let mut nb: BTreeSet<Name> = n.neighbors.intersection(&nds).cloned().collect();
            nb.insert(w.attacker_of(&n.name).expect("validated").clone());
            if w.observed.contains(&n.name) {
                nb.insert(name("obs"));
            }
            Node {
                name: n.name.clone(),
                proc: n.proc.clone(),
                neighbors: nb,
            }
        })
        .collect();
    Ok(Network::new(nodes, m.defs.clone()))
}

#[derive(Clone, Debug)]
pub struct Bounds {
    pub max_sigma: usize,
    pub deduction_depth: usize,
    pub candidate_depth: usize,
    pub tau_bound: usize,
    pub max_states: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds {
            max_sigma: 10,
            deduction_depth: 2,
            candidate_depth: 2,
            tau_bound: 10_000,
            max_states: 2_000_000,
        }
    }
}

impl Bounds {
    fn record(&self, r: &mut CheckReport) {
        r.bound("max_sigma", self.max_sigma);
        r.bound("deduction_depth", self.deduction_depth);
        r.bound("candidate_depth", self.candidate_depth);
    }
}

fn top_name(a: &str, j: usize) -> String {
    format!("Top_{a}_{j}")
}

/// Per-attacker candidate lists for slots `0..=max_sigma`.
pub fn attacker_candidates(
    phi: &KnowledgeSequence,
    shapes: &[Shape],
    depth: usize,
    max_sigma: usize,
) -> Vec<Vec<Term>> {
    (0..=max_sigma)
        .map(|j| synth_candidates(&phi.at(j), depth, shapes))
        .collect()
}

/// The top attacker: node `a_i` at slot `j` may send any candidate derived
/// from `phi_j` to `m_i`, any number of times, or let the clock move on.
/// Past the horizon it only ticks.
pub fn top_attacker(
    w: &AttackerWiring,
    phi: &KnowledgeSequence,
    shapes: &BTreeMap<Name, Vec<Shape>>,
    depth: usize,
    max_sigma: usize,
) -> Network {
    let mut defs = Defs::new();
    let mut nodes = Vec::new();
    for (m, a) in w.protocol.iter().zip(&w.attackers) {
        let sh = shapes.get(m).map(Vec::as_slice).unwrap_or(&[]);
        let cands = attacker_candidates(phi, sh, depth, max_sigma);
        for (j, cs) in cands.iter().enumerate() {
            let here = Process::call(&top_name(a, j), vec![]);
            let next = Process::call(&top_name(a, j + 1), vec![]);
            let body = if cs.is_empty() {
                Process::sleep(next)
            } else {
                Process::sum(
                    cs.iter()
                        .map(|c| Process::bang(c.clone(), here.clone()))
                        .collect(),
                    next,
                )
            };
            let d = ProcessDef {
                name: name(&top_name(a, j)),
                params: vec![],
                body,
            };
            defs.insert(d.name.clone(), Arc::new(d));
        }
        let last = top_name(a, max_sigma + 1);
        let d = ProcessDef {
            name: name(&last),
            params: vec![],
            body: Process::sleep(Process::call(&last, vec![])),
        };
        defs.insert(d.name.clone(), Arc::new(d));
        nodes.push(Node {
            name: a.clone(),
            proc: Process::call(&top_name(a, 0), vec![]),
            neighbors: BTreeSet::from([m.clone()]),
        });
    }
    Network::new(nodes, Arc::new(defs))
}

/// Receive patterns of a node: for every input binder, the structure its
/// continuation takes apart with projections, decryption and equality tests
/// against constants, followed through calls.
pub fn harvest_patterns(net: &Network, node: &str) -> Vec<Term> {
    let Some(n) = net.node(node) else {
        return Vec::new();
    };
    let mut h = Harvester {
        defs: &net.defs,
        out: BTreeSet::new(),
        fresh: 0,
        visiting: BTreeSet::new(),
        done: BTreeSet::new(),
        param_memo: HashMap::new(),
    };
    h.scan(&n.proc);
    // A pattern with a strictly more specific sibling only describes a
    // prefix of the receiver's parsing; keep the most specific ones.
    let all: Vec<Term> = h.out.iter().cloned().collect();
    let mut v: Vec<Term> = h
        .out
        .into_iter()
        .filter(|p| {
            !all.iter()
                .any(|q| q != p && crate::messages::match_pattern(p, q, &mut BTreeMap::new()))
        })
        .collect();
    crate::messages::sort_canonical(&mut v);
    v
}

/// Receive patterns typed by the sorts found in `legit` messages.
pub fn harvest_shapes(net: &Network, node: &str, legit: &[Term]) -> Vec<Shape> {
    harvest_patterns(net, node)
        .into_iter()
        .map(|p| Shape::typed_by(p, legit))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Step {
    Fst,
    Snd,
    Dec(Term),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Constraint {
    Pair(Vec<Step>),
    Enc(Vec<Step>, Term),
    Equals(Vec<Step>, Term),
}

struct Harvester<'a> {
    defs: &'a Defs,
    out: BTreeSet<Term>,
    fresh: usize,
    visiting: BTreeSet<Name>,
    done: BTreeSet<Name>,
    param_memo: HashMap<(Name, usize), Vec<Vec<Constraint>>>,
}

const MAX_PATHS: usize = 64;

impl Harvester<'_> {
    /// Visits every receive in `p` and in definitions reachable from it.
    fn scan(&mut self, p: &Process) {
        let mut stack = vec![p.clone()];
        while let Some(p) = stack.pop() {
            match &p {
                Process::Recv {
                    binder,
                    body,
                    timeout,
                } => {
                    let env = BTreeMap::from([(binder.clone(), Vec::new())]);
                    for cs in self.paths(body, &env, 0) {
                        let pat = self.build(&cs);
                        if !matches!(pat, Term::Var(_)) {
                            self.out.insert(pat);
                        }
                    }
                    stack.push((**body).clone());
                    stack.push((**timeout).clone());
                }
                Process::Bang(_, q) | Process::Sleep(q) => stack.push((**q).clone()),
                Process::Sum { branches, timeout } => {
                    stack.extend(branches.iter().cloned());
                    stack.push((**timeout).clone());
                }
                Process::Match { then, els, .. } | Process::Deduce { then, els, .. } => {
                    stack.push((**then).clone());
                    stack.push((**els).clone());
                }
                Process::Call { name, .. } => {
                    if self.done.insert(name.clone()) {
                        if let Some(d) = self.defs.get(name) {
                            stack.push(d.body.clone());
                        }
                    }
                }
                Process::Nil => {}
            }
        }
    }

    /// Constraint sets, one per control path, on the variables of `env`
    /// (each mapped to its access path from the received message).
    fn paths(
        &mut self,
        p: &Process,
        env: &BTreeMap<Name, Vec<Step>>,
        depth: usize,
    ) -> Vec<Vec<Constraint>> {
        if env.is_empty() || depth > 64 {
            return vec![Vec::new()];
        }
        let lookup = |t: &Term| -> Option<Vec<Step>> {
            match t {
                Term::Var(v) => env.get(v).cloned(),
                _ => None,
            }
        };
        let mut res = match p {
            Process::Nil
            | Process::Bang(..)
            | Process::Sleep(_)
            | Process::Recv { .. }
            | Process::Sum { .. } => {
                vec![Vec::new()]
            }
            Process::Match {
                left,
                right,
                then,
                els,
            } => {
                let mut c = Vec::new();
                match (lookup(left), lookup(right)) {
                    (Some(pa), None) if right.is_message() => {
                        c.push(Constraint::Equals(pa, right.clone()))
                    }
                    (None, Some(pa)) if left.is_message() => {
                        c.push(Constraint::Equals(pa, left.clone()))
                    }
                    _ => {}
                }
                let mut out = prefix(&c, self.paths(then, env, depth + 1));
                out.extend(self.paths(els, env, depth + 1));
                out
            }
            Process::Deduce {
                premises,
                rule,
                binder,
                then,
                els,
            } => {
                let mut env2 = env.clone();
                env2.remove(binder);
                let mut c = Vec::new();
                match rule {
                    Rule::Fst | Rule::Snd => {
                        if let Some(pa) = lookup(&premises[0]) {
                            c.push(Constraint::Pair(pa.clone()));
                            let mut q = pa;
                            q.push(if *rule == Rule::Fst {
                                Step::Fst
                            } else {
                                Step::Snd
                            });
                            env2.insert(binder.clone(), q);
                        }
                    }
                    Rule::Ctor(crate::messages::Ctor::Dec) => {
                        if let (Some(pa), true) = (lookup(&premises[1]), premises[0].is_message()) {
                            c.push(Constraint::Enc(pa.clone(), premises[0].clone()));
                            let mut q = pa;
                            q.push(Step::Dec(premises[0].clone()));
                            env2.insert(binder.clone(), q);
                        }
                    }
                    _ => {}
                }
                let mut out = prefix(&c, self.paths(then, &env2, depth + 1));
                out.extend(self.paths(els, env, depth + 1));
                out
            }
            Process::Call { name, args } => {
                let mut out = vec![Vec::new()];
                for (i, a) in args.iter().enumerate() {
                    if let Some(pa) = lookup(a) {
                        let sub = self.param_paths(name, i);
                        let mut next = Vec::new();
                        for base in &out {
                            for s in &sub {
                                let mut cs = base.clone();
                                cs.extend(s.iter().map(|c| rebase(c, &pa)));
                                next.push(cs);
                            }
                        }
                        out = next;
                        out.truncate(MAX_PATHS);
                    }
                }
                out
            }
        };
        res.sort();
        res.dedup();
        res.truncate(MAX_PATHS);
        res
    }

    fn param_paths(&mut self, h: &Name, i: usize) -> Vec<Vec<Constraint>> {
        if let Some(v) = self.param_memo.get(&(h.clone(), i)) {
            return v.clone();
        }
        let Some(d) = self.defs.get(h).cloned() else {
            return vec![Vec::new()];
        };
        if !self.visiting.insert(h.clone()) || i >= d.params.len() {
            return vec![Vec::new()];
        }
        let env = BTreeMap::from([(d.params[i].clone(), Vec::new())]);
        let v = self.paths(&d.body, &env, 0);
        self.visiting.remove(h);
        self.param_memo.insert((h.clone(), i), v.clone());
        v
    }

    fn var(&mut self) -> Term {
        self.fresh += 1;
        Term::var(&format!("X{}", self.fresh))
    }

    /// Pattern satisfying a constraint set; variables are renamed in
    /// first-occurrence order so equal patterns compare equal.
    fn build(&mut self, cs: &[Constraint]) -> Term {
        let mut pat = self.var();
        let mut sorted: Vec<&Constraint> = cs.iter().collect();
        sorted.sort_by_key(|c| match c {
            Constraint::Pair(p) | Constraint::Enc(p, _) | Constraint::Equals(p, _) => p.len(),
        });
        for c in sorted {
            pat = match c {
                Constraint::Pair(p) => {
                    let (a, b) = (self.var(), self.var());
                    refine(&pat, p, &|t| {
                        matches!(t, Term::Var(_)).then(|| Term::pair(a.clone(), b.clone()))
                    })
                }
                Constraint::Enc(p, k) => {
                    let m = self.var();
                    refine(&pat, p, &|t| {
                        matches!(t, Term::Var(_)).then(|| Term::enc(k.clone(), m.clone()))
                    })
                }
                Constraint::Equals(p, w) => {
                    refine(&pat, p, &|t| matches!(t, Term::Var(_)).then(|| w.clone()))
                }
            };
        }
        canonical_vars(&pat)
    }
}

fn prefix(c: &[Constraint], paths: Vec<Vec<Constraint>>) -> Vec<Vec<Constraint>> {
    paths
        .into_iter()
        .map(|mut p| {
            let mut v = c.to_vec();
            v.append(&mut p);
            v
        })
        .collect()
}

fn rebase(c: &Constraint, base: &[Step]) -> Constraint {
    let join = |p: &Vec<Step>| {
        let mut v = base.to_vec();
        v.extend(p.iter().cloned());
        v
    };
    match c {
        Constraint::Pair(p) => Constraint::Pair(join(p)),
        Constraint::Enc(p, k) => Constraint::Enc(join(p), k.clone()),
        Constraint::Equals(p, w) => Constraint::Equals(join(p), w.clone()),
    }
}

/// Rewrites the subterm at `path`, if the path exists and `f` agrees.
fn refine(t: &Term, path: &[Step], f: &dyn Fn(&Term) -> Option<Term>) -> Term {
    let Some((s, rest)) = path.split_first() else {
        return f(t).unwrap_or_else(|| t.clone());
    };
    match (s, t) {
        (Step::Fst, Term::App(crate::messages::Ctor::Pair, a)) => Term::App(
            crate::messages::Ctor::Pair,
            vec![refine(&a[0], rest, f), a[1].clone()].into(),
        ),
        (Step::Snd, Term::App(crate::messages::Ctor::Pair, a)) => Term::App(
            crate::messages::Ctor::Pair,
            vec![a[0].clone(), refine(&a[1], rest, f)].into(),
        ),
        (Step::Dec(k), Term::App(crate::messages::Ctor::Enc, a)) if a[0] == *k => Term::App(
            crate::messages::Ctor::Enc,
            vec![a[0].clone(), refine(&a[1], rest, f)].into(),
        ),
        _ => t.clone(),
    }
}

fn canonical_vars(t: &Term) -> Term {
    fn walk(t: &Term, m: &mut BTreeMap<Name, Term>) -> Term {
        match t {
            Term::Var(v) => {
                let n = m.len();
                m.entry(v.clone())
                    .or_insert_with(|| Term::var(&format!("x{n}")))
                    .clone()
            }
            Term::App(c, a) => {
                Term::App(*c, a.iter().map(|x| walk(x, m)).collect::<Vec<_>>().into())
            }
            _ => t.clone(),
        }
    }
    walk(t, &mut BTreeMap::new())
}

/// Typed shapes for every protocol node. Sorts come from the saturated last
/// slot together with what the unattacked system broadcasts, so that a
/// variable ranges over the kinds of values honest peers actually send.
pub fn shapes_for(
    system: &Network,
    w: &AttackerWiring,
    phi: &KnowledgeSequence,
    max_sigma: usize,
) -> BTreeMap<Name, Vec<Shape>> {
    let mut legit: BTreeSet<Term> = phi.at(max_sigma).saturate().iter().cloned().collect();
    legit.extend(honest_broadcasts(system, max_sigma));
    let legit: Vec<Term> = legit.into_iter().collect();
    w.protocol
        .iter()
        .map(|m| (m.clone(), harvest_shapes(system, m, &legit)))
        .collect()
}

/// Payloads broadcast by the system on its own. A truncated exploration
/// only makes the set smaller, which narrows the typing.
pub fn honest_broadcasts(system: &Network, max_sigma: usize) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    let Ok(mut ex) = explore_raw(system, &ExploreOptions::new(max_sigma)) else {
        return out;
    };
    for (f, k, _) in ex.edges.clone() {
        if let Label::Bcast { payload, .. } = ex.edge(f, k).raw {
            out.insert(payload);
        }
    }
    out
}

/// Wired system composed with the top attacker.
pub fn attacked(
    system: &Network,
    w: &AttackerWiring,
    phi: &KnowledgeSequence,
    b: &Bounds,
) -> Result<Network, TgndcError> {
    let shapes = shapes_for(system, w, phi, b.max_sigma);
    attacked_shaped(system, w, phi, b, &shapes)
}

fn attacked_shaped(
    system: &Network,
    w: &AttackerWiring,
    phi: &KnowledgeSequence,
    b: &Bounds,
    shapes: &BTreeMap<Name, Vec<Shape>>,
) -> Result<Network, TgndcError> {
    let wired = wire_observed(system, w)?;
    Ok(wired.compose(&top_attacker(
        w,
        phi,
        shapes,
        b.candidate_depth,
        b.max_sigma,
    )))
}

/// Explores the attacked system and checks that every protocol broadcast at
/// slot `j` is deducible from `phi_j`.
pub fn check_stability(
    system: &Network,
    w: &AttackerWiring,
    phi: &KnowledgeSequence,
    b: &Bounds,
) -> Result<CheckReport, TgndcError> {
    let shapes = shapes_for(system, w, phi, b.max_sigma);
    Ok(stability_shaped(system, w, phi, b, &shapes)?.0)
}

type Broadcasts = BTreeSet<(usize, Name, Term)>;

/// Stability report plus every protocol broadcast seen, as (slot, sender, payload).
fn stability_shaped(
    system: &Network,
    w: &AttackerWiring,
    phi: &KnowledgeSequence,
    b: &Bounds,
    shapes: &BTreeMap<Name, Vec<Shape>>,
) -> Result<(CheckReport, Broadcasts), TgndcError> {
    let mut rep = CheckReport::new("stability");
    b.record(&mut rep);
    let net = attacked_shaped(system, w, phi, b, shapes)?;
    let mut opts = ExploreOptions::new(b.max_sigma);
    opts.max_states = b.max_states;
    opts.fused = w.attackers.iter().map(|a| a.to_string()).collect();
    let mut ex = explore_raw(&net, &opts)?;
    let protocol: BTreeSet<Name> = w.protocol.iter().cloned().collect();
    let mut seen: BTreeSet<(usize, Name, Term)> = BTreeSet::new();
    for (f, k, _) in ex.edges.clone() {
        let e = ex.edge(f, k);
        if let Label::Bcast {
            sender, payload, ..
        } = e.raw
        {
            if protocol.contains(&sender) {
                seen.insert((ex.layer[f], sender, payload));
            }
        }
    }
    let sats: Vec<Knowledge> = (0..=b.max_sigma).map(|j| phi.at(j)).collect();
    let mut escapes: BTreeMap<(usize, String), Name> = BTreeMap::new();
    let mut cache: HashMap<(Term, usize), bool> = HashMap::new();
    for (j, sender, payload) in &seen {
        let ok = *cache
            .entry((payload.clone(), *j))
            .or_insert_with(|| deducible(payload, &sats[*j], b.deduction_depth));
        if !ok {
            escapes
                .entry((*j, payload.to_string()))
                .or_insert(sender.clone());
        }
    }
    rep.line(format!("explored {} states", ex.order.len()));
    if ex.incomplete {
        rep.verdict = Verdict::Inconclusive;
        rep.line("state budget exhausted; exploration incomplete");
    }
    for ((j, text), sender) in &escapes {
        rep.fail(format!(
            "slot {j}: {sender} broadcasts {text}, not deducible from phi_{j}"
        ));
    }
    rep.note(format!(
        "stability is checked against the top attacker with candidate depth {} up to slot {}",
        b.candidate_depth, b.max_sigma
    ));
    Ok((rep, seen))
}

/// First escaping broadcast, if any: (slot, payload).
pub fn first_escape(rep: &CheckReport) -> Option<(usize, String)> {
    rep.body.iter().find_map(|l| {
        let rest = l.strip_prefix("slot ")?;
        let (j, rest) = rest.split_once(':')?;
        let payload = rest
            .split(" broadcasts ")
            .nth(1)?
            .split(", not deducible")
            .next()?;
        Some((j.parse().ok()?, payload.to_string()))
    })
}

#[derive(Clone, Debug)]
pub struct TgndcQuery {
    pub name: String,
    pub system: Network,
    pub spec: Network,
    pub wiring: AttackerWiring,
    pub phi: KnowledgeSequence,
    pub bounds: Bounds,
}

pub struct TgndcOutcome {
    pub report: CheckReport,
    pub sim: Option<SimResult>,
}

fn spec_env_ok(spec: &Network) -> Result<(), TgndcError> {
    let env = spec.topology().env;
    let bad: Vec<&str> = env
        .iter()
        .filter(|e| &***e != "obs")
        .map(|s| &**s)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(TgndcError::SpecEnv(bad.join(",")))
    }
}

/// Stability first; then the attacked system must be simulated by the spec.
pub fn check_tgndc(q: &TgndcQuery) -> Result<TgndcOutcome, TgndcError> {
    spec_env_ok(&q.spec)?;
    let mut rep = CheckReport::new(format!("tgndc {}", q.name));
    q.bounds.record(&mut rep);
    let stab = check_stability(&q.system, &q.wiring, &q.phi, &q.bounds)?;
    rep.line(format!("stability: {}", stab.verdict));
    rep.body.extend(stab.body.iter().map(|l| format!("  {l}")));
    if stab.verdict != Verdict::Holds {
        rep.verdict = Verdict::Inconclusive;
        rep.qualifier = Some("refused: stability precondition not established".into());
        return Ok(TgndcOutcome {
            report: rep,
            sim: None,
        });
    }
    let net = attacked(&q.system, &q.wiring, &q.phi, &q.bounds)?;
    let mut opts = SimOptions::new(q.bounds.max_sigma);
    opts.tau_bound = q.bounds.tau_bound;
    opts.max_states = q.bounds.max_states;
    opts.impl_fused = q.wiring.attackers.iter().map(|a| a.to_string()).collect();
    let sim = simulates(&q.spec, &net, &opts)?;
    rep.verdict = sim.verdict;
    rep.line(format!(
        "simulation: {} ({} pairs)",
        sim.verdict, sim.explored_pairs
    ));
    match sim.verdict {
        Verdict::Holds => rep.qualifier = Some("bounded, candidate-relative".into()),
        Verdict::Fails => {
            if let Some((t, l)) = &sim.counterexample {
                rep.line(format!(
                    "attack trace ({} steps), blocked at: {l}",
                    t.steps.len()
                ));
                let on_impl = run_trace(&net, t, q.bounds.tau_bound)?;
                let on_spec = run_trace(&q.spec, t, q.bounds.tau_bound)?;
                rep.line(format!(
                    "replay: runs on the attacked system: {}; accepted by the spec: {}",
                    yes_no(!on_impl.states.is_empty()),
                    yes_no(!on_spec.states.is_empty())
                ));
                rep.attach("counterexample.trace", t.render());
            }
        }
        Verdict::Inconclusive => {}
    }
    for n in &sim.notes {
        rep.note(n.clone());
    }
    rep.note(format!(
        "the attacker replays candidates synthesized from the knowledge sequence up to constructor depth {}; verdicts are relative to that set and to {} clock ticks",
        q.bounds.candidate_depth, q.bounds.max_sigma
    ));
    Ok(TgndcOutcome {
        report: rep,
        sim: Some(sim),
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[derive(Clone, Debug)]
pub struct Part {
    pub system: Network,
    pub spec: Network,
    pub wiring: AttackerWiring,
}

/// Splits a system and its spec into one part per protocol node. The spec
/// must have a node of the same name for each; in-network neighbours are
/// dropped from the spec side, keeping only the observer.
pub fn split_parts(
    system: &Network,
    spec: &Network,
    w: &AttackerWiring,
) -> Result<Vec<Part>, TgndcError> {
    w.validate(system)?;
    system
        .nodes
        .iter()
        .map(|n| {
            let mut spec_node = spec
                .node(&n.name)
                .ok_or_else(|| TgndcError::SpecEnv(format!("spec has no node {}", n.name)))?
                .clone();
            spec_node.neighbors.retain(|x| &**x == "obs");
            let a = w.attacker_of(&n.name).expect("validated").clone();
            Ok(Part {
                system: Network::new(vec![n.clone()], system.defs.clone()),
                spec: Network::new(vec![spec_node], spec.defs.clone()),
                wiring: AttackerWiring {
                    protocol: vec![n.name.clone()],
                    attackers: vec![a],
                    observed: w
                        .observed
                        .iter()
                        .filter(|o| **o == n.name)
                        .cloned()
                        .collect(),
                },
            })
        })
        .collect()
}

/// One part, attacked by its own top attacker, against the part's spec.
/// Shapes are taken from `system`, the network the part belongs to.
pub fn check_part(
    system: &Network,
    wiring: &AttackerWiring,
    part: &Part,
    phi: &KnowledgeSequence,
    bounds: &Bounds,
) -> Result<SimResult, TgndcError> {
    let shapes = shapes_for(system, wiring, phi, bounds.max_sigma);
    simulate_part(part, phi, bounds, &shapes)
}

fn simulate_part(
    p: &Part,
    phi: &KnowledgeSequence,
    bounds: &Bounds,
    shapes: &BTreeMap<Name, Vec<Shape>>,
) -> Result<SimResult, TgndcError> {
    spec_env_ok(&p.spec)?;
    let net = attacked_shaped(&p.system, &p.wiring, phi, bounds, shapes)?;
    let mut opts = SimOptions::new(bounds.max_sigma);
    opts.tau_bound = bounds.tau_bound;
    opts.max_states = bounds.max_states;
    opts.impl_fused = p.wiring.attackers.iter().map(|a| a.to_string()).collect();
    Ok(simulates(&p.spec, &net, &opts)?)
}

/// Compositional check over parts that partition the protocol nodes of
/// `system`. Each part is explored alone against its own top attacker, for
/// stability and then simulation. The parts' in-network traffic is
/// accounted for by a cross-check: whatever a part broadcasts at slot `j`
/// must be a candidate of the attacker of every in-network neighbour at
/// slot `j`, so the attackers already cover it. The composed verdict is the
/// conjunction.
pub fn check_tgndc_compositional(
    label: &str,
    system: &Network,
    wiring: &AttackerWiring,
    parts: &[Part],
    phi: &KnowledgeSequence,
    bounds: &Bounds,
) -> Result<CheckReport, TgndcError> {
    let mut rep = CheckReport::new(format!("tgndc {label} (compositional)"));
    bounds.record(&mut rep);
    wiring.validate(system)?;
    let covered: BTreeSet<&Name> = parts
        .iter()
        .flat_map(|p| p.wiring.protocol.iter())
        .collect();
    if covered.len() != wiring.protocol.len()
        || wiring.protocol.iter().any(|m| !covered.contains(m))
    {
        return Err(TgndcError::Wiring(
            "parts must cover every protocol node exactly once".into(),
        ));
    }
    let shapes = shapes_for(system, wiring, phi, bounds.max_sigma);
    let cands: BTreeMap<Name, Vec<BTreeSet<Term>>> = wiring
        .protocol
        .iter()
        .map(|m| {
            let sh = shapes.get(m).map(Vec::as_slice).unwrap_or(&[]);
            let per_slot = attacker_candidates(phi, sh, bounds.candidate_depth, bounds.max_sigma)
                .into_iter()
                .map(|v| v.into_iter().collect())
                .collect();
            (m.clone(), per_slot)
        })
        .collect();
    let topo = system.topology();
    let mut stable = Verdict::Holds;
    for (i, p) in parts.iter().enumerate() {
        let (stab, seen) = stability_shaped(&p.system, &p.wiring, phi, bounds, &shapes)?;
        let nodes: Vec<&str> = p.wiring.protocol.iter().map(|s| &**s).collect();
        rep.line(format!(
            "part {} {{{}}} stability: {}",
            i + 1,
            nodes.join(","),
            stab.verdict
        ));
        rep.body.extend(stab.body.iter().map(|l| format!("  {l}")));
        stable = stable.and(stab.verdict);
        for (j, sender, payload) in &seen {
            let Some(ngh) = topo.ngh.get(sender) else {
                continue;
            };
            for r in ngh.iter().filter(|r| !p.wiring.protocol.contains(r)) {
                let Some(per_slot) = cands.get(r) else {
                    continue;
                };
                if !per_slot[(*j).min(per_slot.len() - 1)].contains(payload) {
                    rep.line(format!(
                        "  slot {j}: {sender} broadcasts {payload} to {r}, outside the attacker candidates for {r}"
                    ));
                    stable = stable.and(Verdict::Fails);
                }
            }
        }
    }
    if stable != Verdict::Holds {
        rep.verdict = Verdict::Inconclusive;
        rep.qualifier = Some("refused: stability precondition not established".into());
        return Ok(rep);
    }
    rep.line("cross-check: in-network traffic covered by the attackers");
    let mut verdict = Verdict::Holds;
    for (i, p) in parts.iter().enumerate() {
        let sim = simulate_part(p, phi, bounds, &shapes)?;
        let nodes: Vec<&str> = p.wiring.protocol.iter().map(|s| &**s).collect();
        rep.line(format!(
            "part {} {{{}}}: {} ({} pairs)",
            i + 1,
            nodes.join(","),
            sim.verdict,
            sim.explored_pairs
        ));
        if let Some((t, l)) = &sim.counterexample {
            rep.line(format!("  blocked at: {l}"));
            rep.attach(format!("part{}.trace", i + 1), t.render());
        }
        verdict = verdict.and(sim.verdict);
    }
    rep.verdict = verdict;
    if verdict == Verdict::Holds {
        rep.qualifier = Some("bounded, candidate-relative; composed from the parts".into());
    }
    rep.note(format!(
        "each part is checked against its own top attacker with candidate depth {} up to {} clock ticks",
        bounds.candidate_depth, bounds.max_sigma
    ));
    Ok(rep)
}

/// Derives a knowledge sequence by recording, per slot, what the protocol
/// nodes broadcast when attacked with the current sequence, until no new
/// message appears.
pub fn record_sequence(
    system: &Network,
    w: &AttackerWiring,
    seed: &KnowledgeSequence,
    b: &Bounds,
    max_rounds: usize,
) -> Result<KnowledgeSequence, TgndcError> {
    let mut slots: Vec<Knowledge> = (0..=b.max_sigma).map(|j| seed.at(j)).collect();
    for _ in 0..max_rounds {
        let phi = KnowledgeSequence {
            slots: slots.clone(),
            extension: Extension::Recorded,
        };
        let net = attacked(system, w, &phi, b)?;
        let mut opts = ExploreOptions::new(b.max_sigma);
        opts.max_states = b.max_states;
        opts.fused = w.attackers.iter().map(|a| a.to_string()).collect();
        let mut ex = explore_raw(&net, &opts)?;
        let mut heard: Vec<BTreeSet<Term>> = vec![BTreeSet::new(); b.max_sigma + 1];
        for (f, k, _) in ex.edges.clone() {
            let e = ex.edge(f, k);
            if let Label::Bcast {
                sender, payload, ..
            } = &e.raw
            {
                if w.protocol.contains(sender) {
                    heard[ex.layer[f]].insert(payload.clone());
                }
            }
        }
        let mut changed = false;
        let mut acc: BTreeSet<Term> = BTreeSet::new();
        for j in 0..=b.max_sigma {
            acc.extend(heard[j].iter().cloned());
            let sat = slots[j].saturate();
            let missing: Vec<Term> = acc.iter().filter(|t| !sat.contains(t)).cloned().collect();
            if !missing.is_empty() {
                changed = true;
                slots[j] = slots[j].union(&Knowledge::new(missing));
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KnowledgeSequence {
        slots,
        extension: Extension::Recorded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::{AtomKind, Rule};

    fn one(name_: &str, p: Process, nb: &[&str]) -> Network {
        Network::new(vec![Node::new(name_, p, nb)], Arc::new(Defs::new()))
    }

    #[test]
    fn wiring_rewrites_neighbours() {
        let n = Network::new(
            vec![
                Node::new("bs", Process::Nil, &["m", "x"]),
                Node::new("m", Process::Nil, &["bs"]),
            ],
            Arc::new(Defs::new()),
        );
        let w = AttackerWiring::new(&[("bs", "b"), ("m", "a")], &["m", "bs"]);
        let wired = wire_observed(&n, &w).unwrap();
        let nb = |x: &str| -> Vec<String> {
            wired
                .node(x)
                .unwrap()
                .neighbors
                .iter()
                .map(|s| s.to_string())
                .collect()
        };
        assert_eq!(nb("m"), ["a", "bs", "obs"]);
        assert_eq!(nb("bs"), ["b", "m", "obs"]);
        let quiet = AttackerWiring::new(&[("bs", "b"), ("m", "a")], &[]);
        assert!(!wire_observed(&n, &quiet)
            .unwrap()
            .nodes
            .iter()
            .any(|x| x.neighbors.contains("obs")));
    }

    #[test]
    fn patterns_follow_projections() {
        let req = Term::atom("req", AtomKind::Tag);
        let body = Process::deduce(
            vec![Term::var("p")],
            Rule::Fst,
            "h",
            Process::matching(
                Term::var("h"),
                req.clone(),
                Process::deduce(
                    vec![Term::var("p")],
                    Rule::Snd,
                    "t",
                    Process::deduce(
                        vec![Term::var("t")],
                        Rule::Fst,
                        "u",
                        Process::Nil,
                        Process::Nil,
                    ),
                    Process::Nil,
                ),
                Process::Nil,
            ),
            Process::Nil,
        );
        let n = one("r", Process::recv("p", body, Process::Nil), &[]);
        let pats: Vec<String> = harvest_patterns(&n, "r")
            .iter()
            .map(|t| t.to_string())
            .collect();
        assert!(
            pats.contains(&"pair(req,pair(x0,x1))".to_string()),
            "{pats:?}"
        );
    }

    #[test]
    fn empty_knowledge_gives_a_clock() {
        let w = AttackerWiring::new(&[("m", "a")], &[]);
        let top = top_attacker(
            &w,
            &KnowledgeSequence::new(vec![Knowledge::default()]),
            &BTreeMap::new(),
            2,
            3,
        );
        assert!(
            !top.is_well_timed_syntax()
                || top
                    .defs
                    .values()
                    .all(|d| matches!(d.body, Process::Sleep(_)))
        );
        let g = crate::lts::explore(&top, 3, crate::lts::Inputs::none()).unwrap();
        assert!(g.edges.iter().all(|e| e.1 == Label::Sigma));
    }
}
