//! Process and network syntax, substitution, topology, well-formedness,
//! message extraction, syntactic well-timedness and structural congruence.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::messages::{Name, Rule, Term};
use crate::report::CheckReport;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Nil,
    Bang(Term, Arc<Process>),
    Recv {
        binder: Name,
        body: Arc<Process>,
        timeout: Arc<Process>,
    },
    /// Branches are the continuations after each `tau`; never empty.
    Sum {
        branches: Arc<[Process]>,
        timeout: Arc<Process>,
    },
    Sleep(Arc<Process>),
    Match {
        left: Term,
        right: Term,
        then: Arc<Process>,
        els: Arc<Process>,
    },
    Deduce {
        premises: Arc<[Term]>,
        rule: Rule,
        binder: Name,
        then: Arc<Process>,
        els: Arc<Process>,
    },
    Call {
        name: Name,
        args: Arc<[Term]>,
    },
}

impl Process {
    pub fn bang(w: Term, p: Process) -> Process {
        Process::Bang(w, Arc::new(p))
    }

    pub fn recv(x: &str, body: Process, timeout: Process) -> Process {
        Process::Recv {
            binder: Name::from(x),
            body: Arc::new(body),
            timeout: Arc::new(timeout),
        }
    }

    pub fn sum(branches: Vec<Process>, timeout: Process) -> Process {
        assert!(!branches.is_empty(), "a sum needs at least one branch");
        Process::Sum {
            branches: branches.into(),
            timeout: Arc::new(timeout),
        }
    }

    pub fn sleep(p: Process) -> Process {
        Process::Sleep(Arc::new(p))
    }

    /// `n` consecutive sleeps.
    pub fn sleeps(n: usize, p: Process) -> Process {
        (0..n).fold(p, |acc, _| Process::sleep(acc))
    }

    pub fn matching(l: Term, r: Term, then: Process, els: Process) -> Process {
        Process::Match {
            left: l,
            right: r,
            then: Arc::new(then),
            els: Arc::new(els),
        }
    }

    pub fn deduce(
        premises: Vec<Term>,
        rule: Rule,
        x: &str,
        then: Process,
        els: Process,
    ) -> Process {
        Process::Deduce {
            premises: premises.into(),
            rule,
            binder: Name::from(x),
            then: Arc::new(then),
            els: Arc::new(els),
        }
    }

    pub fn call(h: &str, args: Vec<Term>) -> Process {
        Process::Call {
            name: Name::from(h),
            args: args.into(),
        }
    }

    /// Capture-avoiding substitution of the message `w` for free `x`.
    /// Messages are closed, so only shadowing needs care.
    pub fn substitute(&self, x: &str, w: &Term) -> Process {
        if !self.has_free(x) {
            return self.clone();
        }
        let sub = |p: &Arc<Process>| Arc::new(p.substitute(x, w));
        match self {
            Process::Nil => Process::Nil,
            Process::Bang(t, p) => Process::Bang(t.subst(x, w), sub(p)),
            Process::Recv {
                binder,
                body,
                timeout,
            } => Process::Recv {
                binder: binder.clone(),
                body: if &**binder == x {
                    body.clone()
                } else {
                    sub(body)
                },
                timeout: sub(timeout),
            },
            Process::Sum { branches, timeout } => Process::Sum {
                branches: branches.iter().map(|b| b.substitute(x, w)).collect(),
                timeout: sub(timeout),
            },
            Process::Sleep(p) => Process::Sleep(sub(p)),
            Process::Match {
                left,
                right,
                then,
                els,
            } => Process::Match {
                left: left.subst(x, w),
                right: right.subst(x, w),
                then: sub(then),
                els: sub(els),
            },
            Process::Deduce {
                premises,
                rule,
                binder,
                then,
                els,
            } => Process::Deduce {
                premises: premises.iter().map(|t| t.subst(x, w)).collect(),
                rule: *rule,
                binder: binder.clone(),
                then: if &**binder == x {
                    then.clone()
                } else {
                    sub(then)
                },
                els: sub(els),
            },
            Process::Call { name, args } => Process::Call {
                name: name.clone(),
                args: args.iter().map(|t| t.subst(x, w)).collect(),
            },
        }
    }

    pub fn has_free(&self, x: &str) -> bool {
        match self {
            Process::Nil => false,
            Process::Bang(t, p) => t.has_var(x) || p.has_free(x),
            Process::Recv {
                binder,
                body,
                timeout,
            } => (&**binder != x && body.has_free(x)) || timeout.has_free(x),
            Process::Sum { branches, timeout } => {
                branches.iter().any(|b| b.has_free(x)) || timeout.has_free(x)
            }
            Process::Sleep(p) => p.has_free(x),
            Process::Match {
                left,
                right,
                then,
                els,
            } => left.has_var(x) || right.has_var(x) || then.has_free(x) || els.has_free(x),
            Process::Deduce {
                premises,
                binder,
                then,
                els,
                ..
            } => {
                premises.iter().any(|t| t.has_var(x))
                    || (&**binder != x && then.has_free(x))
                    || els.has_free(x)
            }
            Process::Call { args, .. } => args.iter().any(|t| t.has_var(x)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let term = |t: &Term, bound: &Vec<Name>, out: &mut BTreeSet<Name>| {
            let mut vs = BTreeSet::new();
            t.free_vars(&mut vs);
            out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
        };
        match self {
            Process::Nil => {}
            Process::Bang(t, p) => {
                term(t, bound, out);
                p.collect_free(bound, out);
            }
            Process::Recv {
                binder,
                body,
                timeout,
            } => {
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
                timeout.collect_free(bound, out);
            }
            Process::Sum { branches, timeout } => {
                branches.iter().for_each(|b| b.collect_free(bound, out));
                timeout.collect_free(bound, out);
            }
            Process::Sleep(p) => p.collect_free(bound, out),
            Process::Match {
                left,
                right,
                then,
                els,
            } => {
                term(left, bound, out);
                term(right, bound, out);
                then.collect_free(bound, out);
                els.collect_free(bound, out);
            }
            Process::Deduce {
                premises,
                binder,
                then,
                els,
                ..
            } => {
                premises.iter().for_each(|t| term(t, bound, out));
                bound.push(binder.clone());
                then.collect_free(bound, out);
                bound.pop();
                els.collect_free(bound, out);
            }
            Process::Call { args, .. } => args.iter().for_each(|t| term(t, bound, out)),
        }
    }

    /// Calls to definitions, each tagged with whether a clock tick must
    /// happen before control reaches it.
    pub fn calls(&self, guarded: bool, out: &mut Vec<(Name, bool)>) {
        match self {
            Process::Nil => {}
            Process::Bang(_, p) => p.calls(guarded, out),
            Process::Recv { body, timeout, .. } => {
                body.calls(guarded, out);
                timeout.calls(true, out);
            }
            Process::Sum { branches, timeout } => {
                branches.iter().for_each(|b| b.calls(guarded, out));
                timeout.calls(true, out);
            }
            Process::Sleep(p) => p.calls(true, out),
            Process::Match { then, els, .. } | Process::Deduce { then, els, .. } => {
                then.calls(guarded, out);
                els.calls(guarded, out);
            }
            Process::Call { name, .. } => out.push((name.clone(), guarded)),
        }
    }

    /// Every term occurring in the process, variables included.
    pub fn terms(&self, out: &mut Vec<Term>) {
        match self {
            Process::Nil => {}
            Process::Bang(t, p) => {
                out.push(t.clone());
                p.terms(out);
            }
            Process::Recv { body, timeout, .. } => {
                body.terms(out);
                timeout.terms(out);
            }
            Process::Sum { branches, timeout } => {
                branches.iter().for_each(|b| b.terms(out));
                timeout.terms(out);
            }
            Process::Sleep(p) => p.terms(out),
            Process::Match {
                left,
                right,
                then,
                els,
            } => {
                out.push(left.clone());
                out.push(right.clone());
                then.terms(out);
                els.terms(out);
            }
            Process::Deduce {
                premises,
                then,
                els,
                ..
            } => {
                out.extend(premises.iter().cloned());
                then.terms(out);
                els.terms(out);
            }
            Process::Call { args, .. } => out.extend(args.iter().cloned()),
        }
    }

    /// Sum branches sorted at every depth.
    pub fn sorted_sums(&self) -> Process {
        let s = |p: &Arc<Process>| Arc::new(p.sorted_sums());
        match self {
            Process::Nil | Process::Call { .. } => self.clone(),
            Process::Bang(t, p) => Process::Bang(t.clone(), s(p)),
            Process::Recv {
                binder,
                body,
                timeout,
            } => Process::Recv {
                binder: binder.clone(),
                body: s(body),
                timeout: s(timeout),
            },
            Process::Sum { branches, timeout } => {
                let mut b: Vec<Process> = branches.iter().map(Process::sorted_sums).collect();
                b.sort();
                Process::Sum {
                    branches: b.into(),
                    timeout: s(timeout),
                }
            }
            Process::Sleep(p) => Process::Sleep(s(p)),
            Process::Match {
                left,
                right,
                then,
                els,
            } => Process::Match {
                left: left.clone(),
                right: right.clone(),
                then: s(then),
                els: s(els),
            },
            Process::Deduce {
                premises,
                rule,
                binder,
                then,
                els,
            } => Process::Deduce {
                premises: premises.clone(),
                rule: *rule,
                binder: binder.clone(),
                then: s(then),
                els: s(els),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcessDef {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: Process,
}

pub type Defs = BTreeMap<Name, Arc<ProcessDef>>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub name: Name,
    pub proc: Process,
    pub neighbors: BTreeSet<Name>,
}

impl Node {
    pub fn new(name: &str, proc: Process, neighbors: &[&str]) -> Node {
        Node {
            name: Name::from(name),
            proc,
            neighbors: neighbors.iter().map(|s| Name::from(*s)).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub defs: Arc<Defs>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("call to undefined process {0}")]
    Undefined(String),
    #[error("process {name} expects {expected} arguments, got {got}")]
    CallArity {
        name: String,
        expected: usize,
        got: usize,
    },
}

pub struct Topology {
    pub nds: BTreeSet<Name>,
    pub ngh: BTreeMap<Name, BTreeSet<Name>>,
    pub env: BTreeSet<Name>,
}

impl Topology {
    pub fn neighbors(&self, n: &str) -> Result<&BTreeSet<Name>, SyntaxError> {
        self.ngh
            .get(n)
            .ok_or_else(|| SyntaxError::UnknownNode(n.to_string()))
    }
}

impl Network {
    pub fn new(nodes: Vec<Node>, defs: Arc<Defs>) -> Network {
        Network { nodes, defs }
    }

    pub fn empty() -> Network {
        Network::default()
    }

    /// Parallel composition; both sides must share a compatible definition table.
    pub fn compose(&self, other: &Network) -> Network {
        let mut defs = (*self.defs).clone();
        for (k, v) in other.defs.iter() {
            defs.entry(k.clone()).or_insert_with(|| v.clone());
        }
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes.iter().cloned());
        Network {
            nodes,
            defs: Arc::new(defs),
        }
    }

    pub fn node(&self, n: &str) -> Option<&Node> {
        self.nodes.iter().find(|x| &*x.name == n)
    }

    pub fn nds(&self) -> BTreeSet<Name> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn topology(&self) -> Topology {
        let nds = self.nds();
        let ngh: BTreeMap<Name, BTreeSet<Name>> = self
            .nodes
            .iter()
            .map(|n| (n.name.clone(), n.neighbors.clone()))
            .collect();
        let env = ngh
            .values()
            .flatten()
            .filter(|n| !nds.contains(*n))
            .cloned()
            .collect();
        Topology { nds, ngh, env }
    }

    /// Unique names, symmetric in-network neighbouring, connectivity.
    /// Out-of-network neighbours are exempt and only noted.
    pub fn check_well_formed(&self) -> CheckReport {
        let mut rep = CheckReport::new("well-formedness");
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.name.clone()) {
                rep.fail(format!("duplicate node name {}", n.name));
            }
            if n.neighbors.contains(&n.name) {
                rep.fail(format!("node {} lists itself as a neighbour", n.name));
            }
        }
        let topo = self.topology();
        for n in &self.nodes {
            for m in &n.neighbors {
                if let Some(other) = self.node(m) {
                    if !other.neighbors.contains(&n.name) {
                        rep.fail(format!(
                            "asymmetric neighbouring: {} lists {} but {} does not list {}",
                            n.name, m, m, n.name
                        ));
                    }
                }
            }
        }
        if let Some(first) = self.nodes.first() {
            let mut reached = BTreeSet::from([first.name.clone()]);
            let mut queue = VecDeque::from([first.name.clone()]);
            while let Some(x) = queue.pop_front() {
                for y in &topo.ngh[&x] {
                    if topo.nds.contains(y) && reached.insert(y.clone()) {
                        queue.push_back(y.clone());
                    }
                }
            }
            let cut: Vec<String> = topo
                .nds
                .difference(&reached)
                .map(|s| s.to_string())
                .collect();
            if !cut.is_empty() {
                rep.fail(format!(
                    "not connected: {} unreachable from {}",
                    cut.join(","),
                    first.name
                ));
            }
        }
        if !topo.env.is_empty() {
            let env: Vec<&str> = topo.env.iter().map(|s| &**s).collect();
            rep.note(format!("out-of-network neighbours: {}", env.join(",")));
        }
        rep
    }

    /// Closed node processes, defined callees with matching arity, and
    /// definition bodies whose free variables are parameters.
    pub fn check_scoping(&self) -> CheckReport {
        let mut rep = CheckReport::new("scoping");
        for n in &self.nodes {
            let fv = n.proc.free_vars();
            if !fv.is_empty() {
                let v: Vec<&str> = fv.iter().map(|s| &**s).collect();
                rep.fail(format!(
                    "node {} has free variables {}",
                    n.name,
                    v.join(",")
                ));
            }
            check_calls(&n.proc, &self.defs, &format!("node {}", n.name), &mut rep);
        }
        for d in self.defs.values() {
            let params: BTreeSet<Name> = d.params.iter().cloned().collect();
            let stray: Vec<String> = d
                .body
                .free_vars()
                .difference(&params)
                .map(|s| s.to_string())
                .collect();
            if !stray.is_empty() {
                rep.fail(format!(
                    "definition {} has unbound variables {}",
                    d.name,
                    stray.join(",")
                ));
            }
            check_calls(
                &d.body,
                &self.defs,
                &format!("definition {}", d.name),
                &mut rep,
            );
        }
        rep
    }

    /// Messages occurring in the network, unwinding each definition once.
    pub fn msg_of(&self) -> Result<BTreeSet<Term>, SyntaxError> {
        let mut out = BTreeSet::new();
        for n in &self.nodes {
            msg_s(&n.proc, &self.defs, &mut BTreeSet::new(), &mut out)?;
        }
        Ok(out)
    }

    /// Every recursion cycle through definitions passes a time guard.
    pub fn is_well_timed_syntax(&self) -> bool {
        let mut edges: BTreeMap<Name, Vec<Name>> = BTreeMap::new();
        for d in self.defs.values() {
            let mut cs = Vec::new();
            d.body.calls(false, &mut cs);
            edges.insert(
                d.name.clone(),
                cs.into_iter().filter(|(_, g)| !g).map(|(n, _)| n).collect(),
            );
        }
        // Only definitions reachable from the nodes matter.
        let mut reach = BTreeSet::new();
        let mut stack: Vec<Name> = Vec::new();
        for n in &self.nodes {
            let mut cs = Vec::new();
            n.proc.calls(false, &mut cs);
            stack.extend(cs.into_iter().map(|(n, _)| n));
        }
        while let Some(h) = stack.pop() {
            if reach.insert(h.clone()) {
                if let Some(d) = self.defs.get(&h) {
                    let mut cs = Vec::new();
                    d.body.calls(false, &mut cs);
                    stack.extend(cs.into_iter().map(|(n, _)| n));
                }
            }
        }
        // Cycle detection on unguarded edges by iterative colouring.
        let mut state: BTreeMap<Name, u8> = BTreeMap::new();
        for root in &reach {
            if state.contains_key(root) {
                continue;
            }
            let mut st: Vec<(Name, usize)> = vec![(root.clone(), 0)];
            state.insert(root.clone(), 1);
            while let Some((h, i)) = st.pop() {
                let succ = edges.get(&h).map(Vec::as_slice).unwrap_or(&[]);
                if i < succ.len() {
                    st.push((h.clone(), i + 1));
                    let s = &succ[i];
                    match state.get(s) {
                        Some(1) => return false,
                        Some(_) => {}
                        None => {
                            state.insert(s.clone(), 1);
                            st.push((s.clone(), 0));
                        }
                    }
                } else {
                    state.insert(h, 2);
                }
            }
        }
        true
    }

    /// Canonical form for structural congruence: nodes sorted by name, head
    /// calls unfolded up to `bound`, sum branches sorted.
    pub fn canonical(&self, bound: usize) -> Vec<(Name, Process, BTreeSet<Name>)> {
        let mut v: Vec<_> = self
            .nodes
            .iter()
            .map(|n| {
                (
                    n.name.clone(),
                    unfold_head(&n.proc, &self.defs, bound).sorted_sums(),
                    n.neighbors.clone(),
                )
            })
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn struct_congruent(&self, other: &Network) -> bool {
        self.canonical(64) == other.canonical(64)
    }
}

fn check_calls(p: &Process, defs: &Defs, ctx: &str, rep: &mut CheckReport) {
    let mut stack = vec![p];
    while let Some(p) = stack.pop() {
        match p {
            Process::Nil => {}
            Process::Bang(_, q) | Process::Sleep(q) => stack.push(q),
            Process::Recv { body, timeout, .. } => {
                stack.push(body);
                stack.push(timeout);
            }
            Process::Sum { branches, timeout } => {
                stack.extend(branches.iter());
                stack.push(timeout);
            }
            Process::Match { then, els, .. } => {
                stack.push(then);
                stack.push(els);
            }
            Process::Deduce {
                premises,
                rule,
                then,
                els,
                ..
            } => {
                if premises.len() != rule.arity() {
                    rep.fail(format!(
                        "{ctx}: rule {} expects {} premises, got {}",
                        rule.as_str(),
                        rule.arity(),
                        premises.len()
                    ));
                }
                stack.push(then);
                stack.push(els);
            }
            Process::Call { name, args } => match defs.get(name) {
                None => rep.fail(format!("{ctx}: call to undefined process {name}")),
                Some(d) if d.params.len() != args.len() => rep.fail(format!(
                    "{ctx}: {name} expects {} arguments, got {}",
                    d.params.len(),
                    args.len()
                )),
                Some(_) => {}
            },
        }
    }
}

/// `get` of the message-extraction function: a compound message contributes
/// itself and its immediate arguments; variables contribute nothing.
pub fn get(u: &Term, out: &mut BTreeSet<Term>) {
    match u {
        Term::Var(_) => {}
        Term::App(_, args) => {
            if u.is_message() {
                out.insert(u.clone());
                out.extend(args.iter().cloned());
            } else {
                args.iter().for_each(|a| get(a, out));
            }
        }
        _ => {
            out.insert(u.clone());
        }
    }
}

fn msg_s(
    p: &Process,
    defs: &Defs,
    s: &mut BTreeSet<Name>,
    out: &mut BTreeSet<Term>,
) -> Result<(), SyntaxError> {
    match p {
        Process::Nil => Ok(()),
        Process::Bang(u, q) => {
            get(u, out);
            msg_s(q, defs, s, out)
        }
        Process::Recv { body, timeout, .. } => {
            msg_s(body, defs, s, out)?;
            msg_s(timeout, defs, s, out)
        }
        Process::Sum { branches, timeout } => {
            for b in branches.iter() {
                msg_s(b, defs, s, out)?;
            }
            msg_s(timeout, defs, s, out)
        }
        Process::Sleep(q) => msg_s(q, defs, s, out),
        Process::Match {
            left,
            right,
            then,
            els,
        } => {
            get(left, out);
            get(right, out);
            msg_s(then, defs, s, out)?;
            msg_s(els, defs, s, out)
        }
        Process::Deduce {
            premises,
            then,
            els,
            ..
        } => {
            premises.iter().for_each(|u| get(u, out));
            msg_s(then, defs, s, out)?;
            msg_s(els, defs, s, out)
        }
        Process::Call { name, args } => {
            args.iter().for_each(|u| get(u, out));
            let d = defs
                .get(name)
                .ok_or_else(|| SyntaxError::Undefined(name.to_string()))?;
            if s.contains(name) {
                return Ok(());
            }
            // The unwound body keeps its parameters open: get() drops them.
            s.insert(name.clone());
            let r = msg_s(&d.body, defs, s, out);
            s.remove(name);
            r
        }
    }
}

/// Replaces a call by the instantiated body of its definition.
pub fn unfold(name: &str, args: &[Term], defs: &Defs) -> Result<Process, SyntaxError> {
    let d = defs
        .get(name)
        .ok_or_else(|| SyntaxError::Undefined(name.to_string()))?;
    if d.params.len() != args.len() {
        return Err(SyntaxError::CallArity {
            name: name.to_string(),
            expected: d.params.len(),
            got: args.len(),
        });
    }
    Ok(d.params
        .iter()
        .zip(args)
        .fold(d.body.clone(), |p, (x, w)| p.substitute(x, w)))
}

fn unfold_head(p: &Process, defs: &Defs, bound: usize) -> Process {
    let mut cur = p.clone();
    for _ in 0..bound {
        match &cur {
            Process::Call { name, args } => match unfold(name, args, defs) {
                Ok(q) => cur = q,
                Err(_) => break,
            },
            _ => break,
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::Term;
    use crate::report::Verdict;

    fn a(s: &str) -> Term {
        Term::other(s)
    }

    fn defs(list: Vec<ProcessDef>) -> Arc<Defs> {
        Arc::new(
            list.into_iter()
                .map(|d| (d.name.clone(), Arc::new(d)))
                .collect(),
        )
    }

    fn def(n: &str, params: &[&str], body: Process) -> ProcessDef {
        ProcessDef {
            name: Name::from(n),
            params: params.iter().map(|s| Name::from(*s)).collect(),
            body,
        }
    }

    #[test]
    fn substitution_respects_shadowing() {
        let p = Process::bang(Term::var("x"), Process::Nil);
        assert_eq!(
            p.substitute("x", &a("a")),
            Process::bang(a("a"), Process::Nil)
        );
        let q = Process::recv(
            "x",
            Process::bang(Term::var("x"), Process::Nil),
            Process::Nil,
        );
        assert_eq!(q.substitute("x", &a("a")), q);
    }

    #[test]
    fn well_formedness_clauses() {
        let d = Arc::new(Defs::new());
        let dup = Network::new(
            vec![
                Node::new("m", Process::Nil, &[]),
                Node::new("m", Process::Nil, &[]),
            ],
            d.clone(),
        );
        let r = dup.check_well_formed();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.body.iter().any(|l| l.contains("duplicate node name m")));
        let asym = Network::new(
            vec![
                Node::new("m", Process::Nil, &["n"]),
                Node::new("n", Process::Nil, &[]),
            ],
            d.clone(),
        );
        assert!(asym
            .check_well_formed()
            .body
            .iter()
            .any(|l| l.contains("asymmetric")));
        let single = Network::new(vec![Node::new("m", Process::Nil, &["obs"])], d);
        assert_eq!(single.check_well_formed().verdict, Verdict::Holds);
    }

    #[test]
    fn topology_env() {
        let d = Arc::new(Defs::new());
        let n = Network::new(
            vec![
                Node::new("bs", Process::Nil, &["m", "b", "obs"]),
                Node::new("m", Process::Nil, &["bs", "a", "obs"]),
            ],
            d,
        );
        let t = n.topology();
        let env: Vec<&str> = t.env.iter().map(|s| &**s).collect();
        assert_eq!(env, ["a", "b", "obs"]);
        assert!(t.neighbors("zz").is_err());
        assert!(Network::empty().nds().is_empty());
    }

    #[test]
    fn msg_of_unwinds_once() {
        let h = def(
            "H",
            &["x"],
            Process::bang(Term::var("x"), Process::call("H", vec![Term::var("x")])),
        );
        let n = Network::new(
            vec![Node::new("m", Process::call("H", vec![a("a")]), &[])],
            defs(vec![h]),
        );
        assert_eq!(n.msg_of().unwrap(), BTreeSet::from([a("a")]));
        let p = Network::new(
            vec![Node::new(
                "m",
                Process::bang(Term::pair(a("a"), a("b")), Process::Nil),
                &[],
            )],
            Arc::new(Defs::new()),
        );
        assert_eq!(
            p.msg_of().unwrap(),
            BTreeSet::from([Term::pair(a("a"), a("b")), a("a"), a("b")])
        );
    }

    #[test]
    fn well_timed_syntax() {
        let guarded = def(
            "H",
            &["x"],
            Process::sleep(Process::call("H", vec![Term::var("x")])),
        );
        let chatty = def("H", &[], Process::bang(a("a"), Process::call("H", vec![])));
        let listener = def(
            "Rcv",
            &[],
            Process::recv("x", Process::Nil, Process::call("Rcv", vec![])),
        );
        let net = |d: ProcessDef, call: Process| {
            Network::new(vec![Node::new("m", call, &[])], defs(vec![d]))
        };
        assert!(net(guarded, Process::call("H", vec![a("a")])).is_well_timed_syntax());
        assert!(!net(chatty, Process::call("H", vec![])).is_well_timed_syntax());
        assert!(net(listener, Process::call("Rcv", vec![])).is_well_timed_syntax());
    }

    #[test]
    fn congruence_by_canonical_forms() {
        let h = def("H", &["x"], Process::bang(Term::var("x"), Process::Nil));
        let d = defs(vec![h]);
        let lhs = Network::new(
            vec![Node::new("n", Process::call("H", vec![a("a")]), &[])],
            d.clone(),
        );
        let rhs = Network::new(
            vec![Node::new("n", Process::bang(a("a"), Process::Nil), &[])],
            d.clone(),
        );
        assert!(lhs.struct_congruent(&rhs));
        let mn = Network::new(
            vec![
                Node::new("m", Process::Nil, &["n"]),
                Node::new("n", Process::Nil, &["m"]),
            ],
            d.clone(),
        );
        let nm = Network::new(
            vec![
                Node::new("n", Process::Nil, &["m"]),
                Node::new("m", Process::Nil, &["n"]),
            ],
            d,
        );
        assert!(mn.struct_congruent(&nm));
        assert!(mn.struct_congruent(&mn.compose(&Network::empty())));
    }
}
