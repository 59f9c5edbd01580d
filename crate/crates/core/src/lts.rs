//! Labelled transition semantics, weak transitions, traces and bounded
//! state-space exploration.
//!
//! A state is a vector of node processes indexed by the name-sorted node list
//! of the topology, which never changes. Each process is kept in head normal
//! form: matches, deductions and calls at the head are evaluated eagerly, so a
//! node always sits at `nil`, a broadcast, a receive, a sum, or a sleep. Head
//! processes are interned, so states hash as short integer vectors.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::messages::{Name, RuleError, Term};
use crate::syntax::{unfold, Defs, Network, Node, Process, SyntaxError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Tau,
    Sigma,
    Bcast {
        sender: Name,
        payload: Term,
        receivers: BTreeSet<Name>,
    },
    Input {
        sender: Name,
        payload: Term,
    },
    ObsBcast {
        payload: Term,
        receivers: BTreeSet<Name>,
    },
}

impl Label {
    pub fn obs(payload: Term, receivers: &[&str]) -> Label {
        Label::ObsBcast {
            payload,
            receivers: receivers.iter().map(|s| Name::from(*s)).collect(),
        }
    }

    pub fn is_observable_alphabet(&self) -> bool {
        !matches!(self, Label::Bcast { .. })
    }

    pub fn payload(&self) -> Option<&Term> {
        match self {
            Label::Bcast { payload, .. }
            | Label::Input { payload, .. }
            | Label::ObsBcast { payload, .. } => Some(payload),
            _ => None,
        }
    }
}

fn set_text(s: &BTreeSet<Name>) -> String {
    let v: Vec<&str> = s.iter().map(|x| &**x).collect();
    format!("{{{}}}", v.join(","))
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::Sigma => f.write_str("sigma"),
            Label::Bcast {
                sender,
                payload,
                receivers,
            } => write!(f, "bcast {sender} {payload} > {}", set_text(receivers)),
            Label::Input { sender, payload } => write!(f, "in {sender} {payload}"),
            Label::ObsBcast { payload, receivers } => {
                write!(f, "out {payload} > {}", set_text(receivers))
            }
        }
    }
}

/// Erases silent broadcasts to `tau` and anonymizes observed ones.
pub fn observe(l: &Label) -> Label {
    match l {
        Label::Bcast {
            payload, receivers, ..
        } => {
            if receivers.is_empty() {
                Label::Tau
            } else {
                Label::ObsBcast {
                    payload: payload.clone(),
                    receivers: receivers.clone(),
                }
            }
        }
        _ => l.clone(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    pub steps: Vec<Label>,
}

impl Trace {
    pub fn new(steps: Vec<Label>) -> Trace {
        Trace { steps }
    }

    /// One label per line.
    pub fn render(&self) -> String {
        self.steps.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn sigma_count(&self) -> usize {
        sigma_count(&self.steps)
    }

    /// Clock ticks between the first observed broadcast of `from` and the
    /// first later observed broadcast of `to`.
    pub fn gap(&self, from: &Term, to: &Term) -> Option<usize> {
        let i = self
            .steps
            .iter()
            .position(|l| matches!(l, Label::ObsBcast { payload, .. } if payload == from))?;
        let j = self.steps[i + 1..]
            .iter()
            .position(|l| matches!(l, Label::ObsBcast { payload, .. } if payload == to))?
            + i
            + 1;
        Some(sigma_count(&self.steps[i..j]))
    }
}

pub fn sigma_count(steps: &[Label]) -> usize {
    steps.iter().filter(|l| **l == Label::Sigma).count()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtsError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("match on open terms {0} = {1}")]
    OpenMatch(String, String),
    #[error("node process does not settle after {0} unfoldings (unguarded recursion)")]
    Unguarded(usize),
}

/// Environment inputs offered to the network: `(sender, message)` pairs,
/// optionally varying with the clock slot. Senders inside the network never
/// produce inputs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Inputs {
    pub per_slot: Vec<Vec<(Name, Term)>>,
    pub rest: Vec<(Name, Term)>,
}

impl Inputs {
    pub fn none() -> Inputs {
        Inputs::default()
    }

    pub fn constant(c: Vec<(Name, Term)>) -> Inputs {
        Inputs {
            per_slot: Vec::new(),
            rest: c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rest.is_empty() && self.per_slot.iter().all(Vec::is_empty)
    }

    fn class(&self, slot: usize) -> usize {
        slot.min(self.per_slot.len())
    }

    fn at_class(&self, class: usize) -> &[(Name, Term)] {
        self.per_slot
            .get(class)
            .map(Vec::as_slice)
            .unwrap_or(&self.rest)
    }
}

/// Static part of a network.
#[derive(Clone, Debug)]
pub struct Topo {
    pub names: Vec<Name>,
    pub neighbors: Vec<BTreeSet<Name>>,
    pub nds: BTreeSet<Name>,
    /// For each sender, the nodes that can hear it.
    pub listeners: Vec<Vec<usize>>,
    /// For each sender, the receiver set of its label.
    pub outside: Vec<BTreeSet<Name>>,
}

impl Topo {
    fn of(nodes: &[&Node]) -> Topo {
        let names: Vec<Name> = nodes.iter().map(|n| n.name.clone()).collect();
        let neighbors: Vec<BTreeSet<Name>> = nodes.iter().map(|n| n.neighbors.clone()).collect();
        let nds: BTreeSet<Name> = names.iter().cloned().collect();
        let listeners = (0..names.len())
            .map(|i| {
                (0..names.len())
                    .filter(|&j| j != i && neighbors[j].contains(&names[i]))
                    .collect()
            })
            .collect();
        let outside = neighbors
            .iter()
            .map(|nb| nb.difference(&nds).cloned().collect())
            .collect();
        Topo {
            names,
            neighbors,
            nds,
            listeners,
            outside,
        }
    }

    pub fn index(&self, n: &str) -> Option<usize> {
        self.names.iter().position(|x| &**x == n)
    }
}

#[derive(Clone, Debug)]
pub struct Move {
    pub raw: Label,
    pub label: Label,
    pub target: Box<[u32]>,
}

/// Semantics engine: interning of head-normal processes plus the SOS rules.
pub struct Machine {
    pub topo: Topo,
    pub defs: Arc<Defs>,
    pub unfold_budget: usize,
    /// Nodes whose choice and following broadcast fire as one step.
    pub fused: Vec<bool>,
    pub inputs: Inputs,
    procs: Vec<Arc<Process>>,
    index: HashMap<Arc<Process>, u32>,
    call_cache: HashMap<Process, u32>,
}

impl Machine {
    pub fn new(net: &Network) -> Machine {
        let mut nodes: Vec<&Node> = net.nodes.iter().collect();
        nodes.sort_by(|a, b| a.name.cmp(&b.name));
        Machine {
            topo: Topo::of(&nodes),
            defs: net.defs.clone(),
            unfold_budget: 10_000,
            fused: vec![false; nodes.len()],
            inputs: Inputs::none(),
            procs: Vec::new(),
            index: HashMap::new(),
            call_cache: HashMap::new(),
        }
    }

    pub fn initial(&mut self, net: &Network) -> Result<Box<[u32]>, LtsError> {
        let mut nodes: Vec<&Node> = net.nodes.iter().collect();
        nodes.sort_by(|a, b| a.name.cmp(&b.name));
        nodes.iter().map(|n| self.resolve(n.proc.clone())).collect()
    }

    pub fn proc(&self, id: u32) -> &Arc<Process> {
        &self.procs[id as usize]
    }

    pub fn network(&self, s: &[u32]) -> Network {
        let nodes = s
            .iter()
            .enumerate()
            .map(|(i, &p)| Node {
                name: self.topo.names[i].clone(),
                proc: (*self.procs[p as usize]).clone(),
                neighbors: self.topo.neighbors[i].clone(),
            })
            .collect();
        Network::new(nodes, self.defs.clone())
    }

    fn intern(&mut self, p: Process) -> u32 {
        if let Some(&id) = self.index.get(&p) {
            return id;
        }
        let id = self.procs.len() as u32;
        let a = Arc::new(p);
        self.procs.push(a.clone());
        self.index.insert(a, id);
        id
    }

    /// Head normal form: evaluates matches, deductions and calls at the head.
    pub fn resolve(&mut self, p: Process) -> Result<u32, LtsError> {
        let key = matches!(p, Process::Call { .. }).then(|| p.clone());
        if let Some(k) = &key {
            if let Some(&id) = self.call_cache.get(k) {
                return Ok(id);
            }
        }
        let mut cur = p;
        let mut steps = 0usize;
        loop {
            cur = match &cur {
                Process::Match {
                    left,
                    right,
                    then,
                    els,
                } => {
                    if !left.is_message() || !right.is_message() {
                        return Err(LtsError::OpenMatch(left.to_string(), right.to_string()));
                    }
                    if left == right {
                        (**then).clone()
                    } else {
                        (**els).clone()
                    }
                }
                Process::Deduce {
                    premises,
                    rule,
                    binder,
                    then,
                    els,
                } => match rule.apply(premises)? {
                    Some(w) => then.substitute(binder, &w),
                    None => (**els).clone(),
                },
                Process::Call { name, args } => unfold(name, args, &self.defs)?,
                _ => break,
            };
            steps += 1;
            if steps > self.unfold_budget {
                return Err(LtsError::Unguarded(self.unfold_budget));
            }
        }
        let id = self.intern(cur);
        if let Some(k) = key {
            self.call_cache.insert(k, id);
        }
        Ok(id)
    }

    fn bcast_moves(
        &mut self,
        s: &[u32],
        i: usize,
        w: &Term,
        cont: u32,
        out: &mut Vec<Move>,
    ) -> Result<(), LtsError> {
        let mut rcv: Vec<(usize, Process)> = Vec::new();
        for &j in &self.topo.listeners[i] {
            if let Process::Recv { binder, body, .. } = &*self.procs[s[j] as usize] {
                rcv.push((j, body.substitute(binder, w)));
            }
        }
        let mut got = Vec::with_capacity(rcv.len());
        for (j, p) in rcv {
            got.push((j, self.resolve(p)?));
        }
        let raw = Label::Bcast {
            sender: self.topo.names[i].clone(),
            payload: w.clone(),
            receivers: self.topo.outside[i].clone(),
        };
        let label = observe(&raw);
        for mask in 0u64..(1u64 << got.len()) {
            let mut t: Box<[u32]> = s.into();
            t[i] = cont;
            for (k, &(j, p)) in got.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    t[j] = p;
                }
            }
            out.push(Move {
                raw: raw.clone(),
                label: label.clone(),
                target: t,
            });
        }
        Ok(())
    }

    /// The full successor set of a state at the given input class.
    pub fn moves(&mut self, s: &[u32], class: usize) -> Result<Vec<Move>, LtsError> {
        let mut out = Vec::new();
        let mut blocked = false;
        for i in 0..s.len() {
            let p = self.procs[s[i] as usize].clone();
            match &*p {
                Process::Bang(w, cont) => {
                    blocked = true;
                    let c = self.resolve((**cont).clone())?;
                    self.bcast_moves(s, i, w, c, &mut out)?;
                }
                Process::Sum { branches, .. } => {
                    for b in branches.iter() {
                        let q = self.resolve(b.clone())?;
                        if self.fused[i] {
                            if let Process::Bang(w, cont) = &*self.procs[q as usize].clone() {
                                let c = self.resolve((**cont).clone())?;
                                let mut mid: Box<[u32]> = s.into();
                                mid[i] = q;
                                self.bcast_moves(&mid, i, w, c, &mut out)?;
                                continue;
                            }
                        }
                        let mut t: Box<[u32]> = s.into();
                        t[i] = q;
                        out.push(Move {
                            raw: Label::Tau,
                            label: Label::Tau,
                            target: t,
                        });
                    }
                }
                _ => {}
            }
        }
        let inputs: Vec<(Name, Term)> = self.inputs.at_class(class).to_vec();
        for (e, w) in inputs {
            if self.topo.nds.contains(&e) {
                continue;
            }
            let mut got = Vec::new();
            for (j, &id) in s.iter().enumerate() {
                if !self.topo.neighbors[j].contains(&e) {
                    continue;
                }
                if let Process::Recv { binder, body, .. } = &*self.procs[id as usize].clone() {
                    got.push((j, self.resolve(body.substitute(binder, &w))?));
                }
            }
            let l = Label::Input {
                sender: e.clone(),
                payload: w.clone(),
            };
            for mask in 0u64..(1u64 << got.len()) {
                let mut t: Box<[u32]> = s.into();
                for (k, &(j, p)) in got.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        t[j] = p;
                    }
                }
                out.push(Move {
                    raw: l.clone(),
                    label: l.clone(),
                    target: t,
                });
            }
        }
        if !blocked {
            let mut t: Box<[u32]> = s.into();
            for i in 0..s.len() {
                let next = match &*self.procs[s[i] as usize].clone() {
                    Process::Nil => continue,
                    Process::Sleep(p) => (**p).clone(),
                    Process::Recv { timeout, .. } | Process::Sum { timeout, .. } => {
                        (**timeout).clone()
                    }
                    _ => unreachable!("head normal form"),
                };
                t[i] = self.resolve(next)?;
            }
            out.push(Move {
                raw: Label::Sigma,
                label: Label::Sigma,
                target: t,
            });
        }
        Ok(out)
    }

    /// Whether some node is about to broadcast.
    pub fn has_bang(&self, s: &[u32]) -> bool {
        s.iter()
            .any(|&p| matches!(&*self.procs[p as usize], Process::Bang(..)))
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub label: Label,
    pub raw: Label,
    pub to: u32,
}

/// Lazily expanded transition system over interned states. The input class
/// is part of the state key when inputs vary with the slot.
pub struct Lts {
    pub machine: Machine,
    states: Vec<(Box<[u32]>, usize)>,
    ids: HashMap<(Box<[u32]>, usize), u32>,
    succ: Vec<Option<Arc<[Edge]>>>,
    pub max_states: usize,
    pub truncated: bool,
    pub initial: u32,
}

impl Lts {
    pub fn new(net: &Network) -> Result<Lts, LtsError> {
        Lts::with(net, Inputs::none(), &[])
    }

    pub fn with(net: &Network, inputs: Inputs, fused: &[&str]) -> Result<Lts, LtsError> {
        let mut machine = Machine::new(net);
        machine.inputs = inputs;
        for f in fused {
            if let Some(i) = machine.topo.index(f) {
                machine.fused[i] = true;
            }
        }
        let s0 = machine.initial(net)?;
        let mut lts = Lts {
            machine,
            states: Vec::new(),
            ids: HashMap::new(),
            succ: Vec::new(),
            max_states: 2_000_000,
            truncated: false,
            initial: 0,
        };
        lts.initial = lts.intern(s0, 0);
        Ok(lts)
    }

    fn intern(&mut self, s: Box<[u32]>, class: usize) -> u32 {
        let key = (s, class);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.states.len() as u32;
        self.states.push(key.clone());
        self.ids.insert(key, id);
        self.succ.push(None);
        id
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: u32) -> &[u32] {
        &self.states[id as usize].0
    }

    pub fn network(&self, id: u32) -> Network {
        self.machine.network(self.state(id))
    }

    /// Outgoing edges; empty when the state budget is exhausted, which is
    /// recorded in `truncated`.
    pub fn succ(&mut self, id: u32) -> Result<Arc<[Edge]>, LtsError> {
        if let Some(e) = &self.succ[id as usize] {
            return Ok(e.clone());
        }
        if self.states.len() >= self.max_states {
            self.truncated = true;
            return Ok(Arc::from(Vec::new()));
        }
        let (s, class) = self.states[id as usize].clone();
        let moves = self.machine.moves(&s, class)?;
        let mut edges = Vec::with_capacity(moves.len());
        for m in moves {
            let c = if m.label == Label::Sigma {
                self.machine.inputs.class(class + 1)
            } else {
                class
            };
            let to = self.intern(m.target, c);
            edges.push(Edge {
                label: m.label,
                raw: m.raw,
                to,
            });
        }
        let e: Arc<[Edge]> = edges.into();
        self.succ[id as usize] = Some(e.clone());
        Ok(e)
    }

    /// States reachable by `tau` edges, breadth-first; the flag reports a
    /// path longer than `bound` that was cut.
    pub fn tau_closure(&mut self, id: u32, bound: usize) -> Result<(Vec<u32>, bool), LtsError> {
        let mut seen = BTreeSet::from([id]);
        let mut order = vec![id];
        let mut frontier = vec![id];
        let mut truncated = false;
        let mut depth = 0;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for s in frontier {
                for e in self.succ(s)?.iter() {
                    if e.label == Label::Tau && !seen.contains(&e.to) {
                        if depth >= bound {
                            truncated = true;
                            continue;
                        }
                        seen.insert(e.to);
                        order.push(e.to);
                        next.push(e.to);
                    }
                }
            }
            frontier = next;
            depth += 1;
        }
        Ok((order, truncated))
    }

    /// `=a=>` for visible `a`, `=>` for `tau`.
    pub fn weak(
        &mut self,
        from: &[u32],
        a: &Label,
        bound: usize,
    ) -> Result<(Vec<u32>, bool), LtsError> {
        let mut trunc = false;
        let mut pre = BTreeSet::new();
        for &s in from {
            let (c, t) = self.tau_closure(s, bound)?;
            trunc |= t;
            pre.extend(c);
        }
        if *a == Label::Tau {
            return Ok((pre.into_iter().collect(), trunc));
        }
        let mut mid = BTreeSet::new();
        for s in pre {
            for e in self.succ(s)?.iter() {
                if e.label == *a {
                    mid.insert(e.to);
                }
            }
        }
        let mut post = BTreeSet::new();
        for s in mid {
            let (c, t) = self.tau_closure(s, bound)?;
            trunc |= t;
            post.extend(c);
        }
        Ok((post.into_iter().collect(), trunc))
    }

    /// Composed weak steps along the trace.
    pub fn run(&mut self, trace: &Trace, bound: usize) -> Result<(Vec<u32>, bool), LtsError> {
        let mut cur = vec![self.initial];
        let mut trunc = false;
        for l in &trace.steps {
            let (next, t) = self.weak(&cur, l, bound)?;
            trunc |= t;
            cur = next;
            if cur.is_empty() {
                break;
            }
        }
        if !cur.is_empty() {
            let (end, t) = self.weak(&cur, &Label::Tau, bound)?;
            trunc |= t;
            cur = end;
        }
        Ok((cur, trunc))
    }
}

/// Outcome of a weak step or trace run on a network.
#[derive(Clone, Debug)]
pub struct WeakResult {
    pub states: Vec<Network>,
    pub truncated: bool,
}

pub fn weak_step(m: &Network, a: &Label, bound: usize) -> Result<WeakResult, LtsError> {
    run_trace(m, &Trace::new(vec![a.clone()]), bound)
}

pub fn run_trace(m: &Network, t: &Trace, bound: usize) -> Result<WeakResult, LtsError> {
    run_trace_with(m, t, bound, Inputs::none())
}

pub fn run_trace_with(
    m: &Network,
    t: &Trace,
    bound: usize,
    inputs: Inputs,
) -> Result<WeakResult, LtsError> {
    let mut lts = Lts::with(m, inputs, &[])?;
    let (ids, truncated) = lts.run(t, bound)?;
    Ok(WeakResult {
        states: ids.iter().map(|&i| lts.network(i)).collect(),
        truncated,
    })
}

/// Strong successors of a network, each with its observed label.
pub fn step(m: &Network, inputs: &Inputs) -> Result<Vec<(Label, Network)>, LtsError> {
    let mut lts = Lts::with(m, inputs.clone(), &[])?;
    let init = lts.initial;
    let edges = lts.succ(init)?;
    Ok(edges
        .iter()
        .map(|e| (e.raw.clone(), lts.network(e.to)))
        .collect())
}

/// Bounded reachable graph. State numbering is breadth-first in successor
/// order, which is itself deterministic.
#[derive(Clone, Debug)]
pub struct StateGraph {
    pub states: Vec<Network>,
    /// Clock ticks on the shortest path from the initial state.
    pub layer: Vec<usize>,
    pub edges: Vec<(usize, Label, usize)>,
    pub raw: Vec<Label>,
    pub initial: usize,
    /// States whose clock tick was not expanded because of the bound.
    pub frontier: BTreeSet<usize>,
    pub incomplete: bool,
}

pub struct ExploreOptions {
    pub max_sigma: usize,
    pub max_states: usize,
    pub inputs: Inputs,
    pub fused: Vec<String>,
}

impl ExploreOptions {
    pub fn new(max_sigma: usize) -> ExploreOptions {
        ExploreOptions {
            max_sigma,
            max_states: 2_000_000,
            inputs: Inputs::none(),
            fused: Vec::new(),
        }
    }
}

/// Explored graph kept in the engine's compact form.
pub struct Explored {
    pub lts: Lts,
    pub order: Vec<u32>,
    pub number: HashMap<u32, usize>,
    pub layer: Vec<usize>,
    pub edges: Vec<(usize, usize, usize)>,
    pub frontier: BTreeSet<usize>,
    pub incomplete: bool,
}

impl Explored {
    /// Edge label access: `edges` stores (from, edge index in succ, to).
    pub fn edge(&mut self, from: usize, k: usize) -> Edge {
        let id = self.order[from];
        self.lts.succ(id).expect("expanded")[k].clone()
    }

    pub fn to_graph(&mut self) -> StateGraph {
        let states = self.order.iter().map(|&i| self.lts.network(i)).collect();
        let mut edges = Vec::new();
        let mut raw = Vec::new();
        for &(f, k, t) in &self.edges.clone() {
            let e = self.edge(f, k);
            edges.push((f, e.label, t));
            raw.push(e.raw);
        }
        StateGraph {
            states,
            layer: self.layer.clone(),
            edges,
            raw,
            initial: 0,
            frontier: self.frontier.clone(),
            incomplete: self.incomplete,
        }
    }
}

pub fn explore_raw(m: &Network, opts: &ExploreOptions) -> Result<Explored, LtsError> {
    let fused: Vec<&str> = opts.fused.iter().map(String::as_str).collect();
    let mut lts = Lts::with(m, opts.inputs.clone(), &fused)?;
    lts.max_states = opts.max_states;
    let mut order = vec![lts.initial];
    let mut number = HashMap::from([(lts.initial, 0usize)]);
    let mut layer = vec![0usize];
    let mut edges = Vec::new();
    let mut frontier = BTreeSet::new();
    let mut incomplete = false;
    let mut current: VecDeque<usize> = VecDeque::from([0]);
    let mut sigma_layer = 0;
    loop {
        let mut next: VecDeque<usize> = VecDeque::new();
        while let Some(x) = current.pop_front() {
            let id = order[x];
            if order.len() >= opts.max_states {
                incomplete = true;
                break;
            }
            let succ = lts.succ(id)?;
            for (k, e) in succ.iter().enumerate() {
                let is_sigma = e.label == Label::Sigma;
                if is_sigma && sigma_layer >= opts.max_sigma {
                    frontier.insert(x);
                    continue;
                }
                let y = match number.get(&e.to) {
                    Some(&y) => y,
                    None => {
                        let y = order.len();
                        order.push(e.to);
                        number.insert(e.to, y);
                        if is_sigma {
                            layer.push(sigma_layer + 1);
                            next.push_back(y);
                        } else {
                            layer.push(sigma_layer);
                            current.push_back(y);
                        }
                        y
                    }
                };
                edges.push((x, k, y));
            }
        }
        if next.is_empty() || incomplete {
            break;
        }
        current = next;
        sigma_layer += 1;
    }
    incomplete |= lts.truncated;
    Ok(Explored {
        lts,
        order,
        number,
        layer,
        edges,
        frontier,
        incomplete,
    })
}

pub fn explore(m: &Network, max_sigma: usize, inputs: Inputs) -> Result<StateGraph, LtsError> {
    let mut opts = ExploreOptions::new(max_sigma);
    opts.inputs = inputs;
    Ok(explore_raw(m, &opts)?.to_graph())
}

impl StateGraph {
    /// DOT rendering; nodes carry their clock layer, edges their labels.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n  rankdir=LR;\n");
        for (i, l) in self.layer.iter().enumerate() {
            let shape = if i == self.initial {
                "doublecircle"
            } else {
                "circle"
            };
            s.push_str(&format!(
                "  s{i} [label=\"{i}\\nslot {l}\" shape={shape}];\n"
            ));
        }
        for (f, l, t) in &self.edges {
            let text = l.to_string().replace('"', "\\\"");
            s.push_str(&format!("  s{f} -> s{t} [label=\"{text}\"];\n"));
        }
        s.push_str("}\n");
        s
    }

    /// Every shortest maximal path is not enumerated here; callers walk edges.
    pub fn successors(&self, x: usize) -> impl Iterator<Item = &(usize, Label, usize)> {
        self.edges.iter().filter(move |e| e.0 == x)
    }
}

/// Every clock distance, over explored paths, between an observed broadcast
/// of `from` and a later observed broadcast of `to`.
pub fn gap_set(ex: &mut Explored, from: &Term, to: &Term) -> BTreeSet<usize> {
    let n = ex.order.len();
    let mut adj: Vec<Vec<(usize, Label)>> = vec![Vec::new(); n];
    for (f, k, t) in ex.edges.clone() {
        let e = ex.edge(f, k);
        adj[f].push((t, e.label));
    }
    let is = |l: &Label, w: &Term| matches!(l, Label::ObsBcast { payload, .. } if payload == w);
    let cap = ex.layer.iter().max().copied().unwrap_or(0) + 1;
    let mut seen = BTreeSet::new();
    let mut q = VecDeque::new();
    for out in adj.iter().take(n) {
        for (t, l) in out {
            if is(l, from) && seen.insert((*t, 0usize)) {
                q.push_back((*t, 0usize));
            }
        }
    }
    let mut out = BTreeSet::new();
    while let Some((x, d)) = q.pop_front() {
        for (y, l) in &adj[x] {
            if is(l, to) {
                out.insert(d);
            }
            let nd = d + usize::from(*l == Label::Sigma);
            if nd <= cap && seen.insert((*y, nd)) {
                q.push_back((*y, nd));
            }
        }
    }
    out
}

/// Outcome of the timing sanity checks on one explored network.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimeViolations {
    pub states: usize,
    pub sigma_uniqueness: Vec<usize>,
    pub patience: Vec<usize>,
    pub maximal_progress: Vec<usize>,
    pub well_formedness: Vec<usize>,
    /// States from which instantaneous steps exceed the budget or cycle.
    pub instantaneous: Vec<usize>,
    pub longest_instantaneous: usize,
    pub incomplete: bool,
}

impl TimeViolations {
    pub fn total(&self) -> usize {
        self.sigma_uniqueness.len()
            + self.patience.len()
            + self.maximal_progress.len()
            + self.well_formedness.len()
            + self.instantaneous.len()
    }
}

/// Checks every state reached within `max_sigma` ticks: at most one clock
/// successor up to congruence, a clock step iff no node is at a broadcast,
/// successors of well-formed states well-formed, and runs of instantaneous
/// steps acyclic and no longer than `step_budget`.
pub fn time_violations(
    m: &Network,
    max_sigma: usize,
    step_budget: usize,
) -> Result<TimeViolations, LtsError> {
    let mut ex = explore_raw(m, &ExploreOptions::new(max_sigma))?;
    let n = ex.order.len();
    let mut v = TimeViolations {
        states: n,
        incomplete: ex.incomplete,
        ..TimeViolations::default()
    };
    let wf = |net: &Network| net.check_well_formed().verdict == crate::report::Verdict::Holds;
    let check_wf = wf(m);
    let mut instant: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        let id = ex.order[x];
        let succ = ex.lts.succ(id)?;
        let sigmas: Vec<u32> = succ
            .iter()
            .filter(|e| e.label == Label::Sigma)
            .map(|e| e.to)
            .collect();
        if sigmas.len() > 1 {
            let first = ex.lts.network(sigmas[0]);
            if sigmas[1..]
                .iter()
                .any(|&s| !ex.lts.network(s).struct_congruent(&first))
            {
                v.sigma_uniqueness.push(x);
            }
        }
        let bang = ex.lts.machine.has_bang(ex.lts.state(id));
        if !bang && sigmas.is_empty() {
            v.patience.push(x);
        }
        if bang && !sigmas.is_empty() {
            v.maximal_progress.push(x);
        }
        if check_wf && succ.iter().any(|e| !wf(&ex.lts.network(e.to))) {
            v.well_formedness.push(x);
        }
    }
    for &(f, k, t) in &ex.edges {
        let id = ex.order[f];
        let e = &ex.lts.succ(id)?[k];
        if !matches!(e.label, Label::Sigma | Label::Input { .. }) {
            instant[f].push(t);
        }
    }
    // Longest instantaneous run from each state; a cycle counts as unbounded.
    let mut longest: Vec<Option<usize>> = vec![None; n];
    let mut on_stack = vec![false; n];
    for root in 0..n {
        if longest[root].is_some() {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        on_stack[root] = true;
        while let Some(&mut (x, ref mut i)) = stack.last_mut() {
            if *i < instant[x].len() {
                let y = instant[x][*i];
                *i += 1;
                if on_stack[y] {
                    longest[y] = Some(usize::MAX);
                } else if longest[y].is_none() {
                    on_stack[y] = true;
                    stack.push((y, 0));
                }
            } else {
                stack.pop();
                on_stack[x] = false;
                let best = instant[x]
                    .iter()
                    .map(|&y| longest[y].unwrap_or(usize::MAX).saturating_add(1))
                    .max()
                    .unwrap_or(0);
                longest[x] = Some(longest[x].map_or(best, |l| l.max(best)));
            }
        }
    }
    for (x, l) in longest.iter().enumerate() {
        let l = l.unwrap_or(0);
        if l > step_budget {
            v.instantaneous.push(x);
        } else {
            v.longest_instantaneous = v.longest_instantaneous.max(l);
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::Term;
    use crate::syntax::{Defs, ProcessDef};

    fn net(nodes: Vec<Node>, defs: Vec<ProcessDef>) -> Network {
        Network::new(
            nodes,
            Arc::new(
                defs.into_iter()
                    .map(|d| (d.name.clone(), Arc::new(d)))
                    .collect::<Defs>(),
            ),
        )
    }

    fn w() -> Term {
        Term::other("w")
    }

    #[test]
    fn broadcast_is_lossy() {
        let m = net(
            vec![
                Node::new("m", Process::bang(w(), Process::Nil), &["n"]),
                Node::new(
                    "n",
                    Process::recv(
                        "x",
                        Process::bang(Term::var("x"), Process::Nil),
                        Process::Nil,
                    ),
                    &["m"],
                ),
            ],
            vec![],
        );
        let succ = step(&m, &Inputs::none()).unwrap();
        assert_eq!(succ.len(), 2);
        assert!(succ
            .iter()
            .all(|(l, _)| matches!(l, Label::Bcast { receivers, .. } if receivers.is_empty())));
        let got: Vec<&Process> = succ
            .iter()
            .map(|(_, n)| &n.node("n").unwrap().proc)
            .collect();
        assert!(got.contains(&&Process::bang(w(), Process::Nil)));
        assert!(got.iter().any(|p| matches!(p, Process::Recv { .. })));
    }

    #[test]
    fn empty_network_ticks() {
        let succ = step(&Network::empty(), &Inputs::none()).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, Label::Sigma);
    }

    #[test]
    fn receive_times_out() {
        let m = net(
            vec![Node::new(
                "n",
                Process::recv("x", Process::Nil, Process::bang(w(), Process::Nil)),
                &[],
            )],
            vec![],
        );
        let succ = step(&m, &Inputs::none()).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].1.nodes[0].proc, Process::bang(w(), Process::Nil));
    }

    #[test]
    fn observation_rules() {
        let b = |r: &[&str]| Label::Bcast {
            sender: Name::from("m"),
            payload: w(),
            receivers: r.iter().map(|s| Name::from(*s)).collect(),
        };
        assert_eq!(observe(&b(&[])), Label::Tau);
        assert_eq!(observe(&b(&["obs"])), Label::obs(w(), &["obs"]));
        assert_eq!(observe(&Label::Sigma), Label::Sigma);
    }

    #[test]
    fn tick_has_one_state() {
        let tick = ProcessDef {
            name: Name::from("Tick"),
            params: vec![],
            body: Process::sleep(Process::call("Tick", vec![])),
        };
        let g = explore(
            &net(
                vec![Node::new("m", Process::call("Tick", vec![]), &[])],
                vec![tick],
            ),
            3,
            Inputs::none(),
        )
        .unwrap();
        assert_eq!(g.states.len(), 1);
        assert_eq!(g.edges, vec![(0, Label::Sigma, 0)]);
        let z = explore(&Network::empty(), 3, Inputs::none()).unwrap();
        assert_eq!(z.states.len(), 1);
    }

    #[test]
    fn input_needs_outside_sender() {
        let p = Process::sleep(Process::Nil);
        let inside = net(vec![Node::new("m", p.clone(), &[])], vec![]);
        let outside = net(vec![Node::new("n", p, &[])], vec![]);
        let inp = Inputs::constant(vec![(Name::from("m"), w())]);
        assert!(!step(&inside, &inp)
            .unwrap()
            .iter()
            .any(|(l, _)| matches!(l, Label::Input { .. })));
        assert!(step(&outside, &inp)
            .unwrap()
            .iter()
            .any(|(l, _)| matches!(l, Label::Input { .. })));
    }

    #[test]
    fn trace_text_and_counts() {
        let t = Trace::new(vec![Label::Sigma, Label::Tau, Label::Sigma]);
        assert_eq!(t.sigma_count(), 2);
        assert_eq!(t.render(), "sigma\ntau\nsigma\n");
        let weak = weak_step(&Network::empty(), &Label::Tau, 8).unwrap();
        assert_eq!(weak.states.len(), 1);
    }
}
