//! Bundled protocol encodings: the bootstrapping and authenticated-broadcast
//! phases of the TESLA-style scheme, pairwise key establishment, and key
//! renewal with reconfiguration. Each comes with its abstractions, knowledge
//! sequences, scripted replay attackers and golden attack traces.
//!
//! Integer parameters (intervals, buffer counters) are unrolled into
//! definition names, so every definition only carries message parameters.
//! Two clock ticks make one protocol interval throughout.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::lts::{explore_raw, gap_set, run_trace, ExploreOptions, Label, LtsError, Trace};
use crate::messages::{name, AtomKind, Ctor, Knowledge, Rule, Term};
use crate::report::{CheckReport, Verdict};
use crate::syntax::{Defs, Network, Node, Process, ProcessDef};
use crate::tgndc::{
    check_tgndc_compositional, record_sequence, split_parts, AttackerWiring, Bounds, Extension,
    KnowledgeSequence, Part, TgndcError, TgndcQuery,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("unknown protocol {0}")]
    UnknownProtocol(String),
    #[error("protocol {0} has no variant {1}")]
    UnknownVariant(String, String),
    #[error("parameter out of range: {0}")]
    Params(String),
    #[error(transparent)]
    Lts(#[from] LtsError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    /// Key chain length.
    pub n: u32,
    /// Key buffer size.
    pub s: u32,
    /// Number of receivers.
    pub h: u32,
}

impl Default for Params {
    fn default() -> Params {
        Params { n: 8, s: 3, h: 1 }
    }
}

pub const MAX_CHAIN: u32 = 32;

impl Params {
    fn validate(&self) -> Result<(), ProtocolError> {
        if self.n == 0 || self.n > MAX_CHAIN {
            return Err(ProtocolError::Params(format!(
                "n must be in 1..={MAX_CHAIN}"
            )));
        }
        if self.s == 0 || self.s >= self.n {
            return Err(ProtocolError::Params("s must be in 1..n".into()));
        }
        if self.h == 0 || self.h > 4 {
            return Err(ProtocolError::Params("h must be in 1..=4".into()));
        }
        Ok(())
    }
}

/// A timing claim: every observed `from[i]` is followed by `to[i]` after
/// exactly `expected` clock ticks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapClaim {
    pub label: String,
    pub pairs: Vec<(Term, Term)>,
    pub expected: usize,
}

#[derive(Clone, Debug)]
pub struct ProtocolInstance {
    pub name: String,
    pub variant: String,
    pub params: Params,
    pub system: Network,
    pub abstraction: Option<Network>,
    pub knowledge: KnowledgeSequence,
    pub wiring: AttackerWiring,
    pub gap: Option<GapClaim>,
    pub expected: Option<Trace>,
}

impl ProtocolInstance {
    pub fn observed(&self) -> &BTreeSet<crate::messages::Name> {
        &self.wiring.observed
    }

    /// The knowledge sequence to check against: fixed sequences as given,
    /// recorded ones completed up to the bound.
    pub fn knowledge_for(&self, b: &Bounds) -> Result<KnowledgeSequence, TgndcError> {
        match self.knowledge.extension {
            Extension::Constant => Ok(self.knowledge.clone()),
            Extension::Recorded => record_sequence(
                &self.system,
                &self.wiring,
                &self.knowledge,
                b,
                2 * b.max_sigma + 4,
            ),
        }
    }

    pub fn query(&self, b: &Bounds) -> Result<Option<TgndcQuery>, TgndcError> {
        let Some(spec) = self.abstraction.clone() else {
            return Ok(None);
        };
        Ok(Some(TgndcQuery {
            name: format!("{} {}", self.name, self.variant),
            system: self.system.clone(),
            spec,
            wiring: self.wiring.clone(),
            phi: self.knowledge_for(b)?,
            bounds: b.clone(),
        }))
    }

    /// The tgndc check split into one part per protocol node.
    pub fn check_compositional(&self, b: &Bounds) -> Result<Option<CheckReport>, TgndcError> {
        if self.abstraction.is_none() {
            return Ok(None);
        }
        let phi = self.knowledge_for(b)?;
        let label = format!("{} {}", self.name, self.variant);
        check_tgndc_compositional(&label, &self.system, &self.wiring, &self.parts(), &phi, b)
            .map(Some)
    }

    /// One part per protocol node: the node alone against the abstraction
    /// node of the same name.
    pub fn parts(&self) -> Vec<Part> {
        match &self.abstraction {
            Some(abs) => {
                split_parts(&self.system, abs, &self.wiring).expect("abstractions cover every node")
            }
            None => Vec::new(),
        }
    }
}

/// (protocol, variant, description) for every bundled encoding.
pub fn list() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        (
            "mutesla-boot",
            "base",
            "bootstrapping: base station and one requesting node",
        ),
        (
            "mutesla-boot",
            "agreement",
            "bootstrapping, base station signals completion",
        ),
        (
            "mutesla-boot",
            "integrity",
            "bootstrapping, node signals key authentication",
        ),
        (
            "mutesla-auth",
            "base",
            "authenticated broadcast: sender and h receivers",
        ),
        (
            "mutesla-auth",
            "integrity",
            "authenticated broadcast, receivers signal authentication",
        ),
        ("leap", "base", "pairwise key establishment between m and r"),
        (
            "leap",
            "agreement",
            "pairwise key establishment, responder signals completion",
        ),
        (
            "leap",
            "integrity",
            "pairwise key establishment, initiator signals authentication",
        ),
        (
            "lisp",
            "base",
            "key renewal: disposer, listener and one sensor node",
        ),
        (
            "lisp",
            "integrity",
            "reconfiguration: listener and one node that signals authentication",
        ),
    ]
}

pub fn build(
    proto: &str,
    variant: &str,
    params: &Params,
) -> Result<ProtocolInstance, ProtocolError> {
    params.validate()?;
    let inst = match (proto, variant) {
        ("mutesla-boot", "base" | "agreement" | "integrity") => boot::build(variant, params),
        ("mutesla-auth", "base" | "integrity") => auth::build(variant, params),
        ("leap", "base" | "agreement" | "integrity") => leap::build(variant, params),
        ("lisp", "base" | "integrity") => lisp::build(variant, params),
        ("mutesla-boot" | "mutesla-auth" | "leap" | "lisp", _) => {
            return Err(ProtocolError::UnknownVariant(proto.into(), variant.into()))
        }
        _ => return Err(ProtocolError::UnknownProtocol(proto.into())),
    };
    Ok(inst)
}

// Shared vocabulary.

fn node(n: &str) -> Term {
    Term::atom(n, AtomKind::Node)
}
fn tag(n: &str) -> Term {
    Term::atom(n, AtomKind::Tag)
}
fn nonce(n: &str) -> Term {
    Term::atom(n, AtomKind::Nonce)
}
fn key(n: &str) -> Term {
    Term::atom(n, AtomKind::BaseKey)
}
fn kc(i: u32) -> Term {
    Term::chain("kc", i)
}
fn v(x: &str) -> Term {
    Term::var(x)
}
fn call(h: &str, args: Vec<Term>) -> Process {
    Process::call(h, args)
}
fn sleep(p: Process) -> Process {
    Process::sleep(p)
}
fn let_(x: &str, rule: Rule, premises: Vec<Term>, then: Process, els: Process) -> Process {
    Process::deduce(premises, rule, x, then, els)
}
fn pair_rule() -> Rule {
    Rule::Ctor(Ctor::Pair)
}
fn obs(t: Term) -> Label {
    Label::obs(t, &["obs"])
}

#[derive(Default)]
struct DefsBuilder {
    defs: Defs,
}

impl DefsBuilder {
    fn def(&mut self, h: &str, params: &[&str], body: Process) {
        let d = ProcessDef {
            name: name(h),
            params: params.iter().map(|p| name(p)).collect(),
            body,
        };
        self.defs.insert(d.name.clone(), Arc::new(d));
    }

    fn tick(&mut self) {
        self.def("Tick", &[], sleep(call("Tick", vec![])));
    }

    fn done(self) -> Arc<Defs> {
        Arc::new(self.defs)
    }
}

/// Joins two networks into one definition table; names must not clash.
fn nodes(ns: Vec<Node>, defs: Arc<Defs>) -> Network {
    Network::new(ns, defs)
}

fn ksteps(slots: Vec<Vec<Term>>) -> KnowledgeSequence {
    let mut acc = BTreeSet::new();
    let mut out = Vec::new();
    for s in slots {
        acc.extend(s);
        out.push(Knowledge::new(acc.iter().cloned()));
    }
    KnowledgeSequence::new(out)
}

fn empty_knowledge() -> KnowledgeSequence {
    KnowledgeSequence::new(vec![Knowledge::default()])
}

/// Empty seed, to be completed by recording what the attacked system says.
fn recorded() -> KnowledgeSequence {
    KnowledgeSequence {
        slots: vec![Knowledge::default()],
        extension: Extension::Recorded,
    }
}

/// Number of unrolled intervals: enough for every bounded check we run.
fn intervals(p: &Params) -> u32 {
    p.n
}

pub mod boot {
    //! Bootstrapping. The base station runs `D_i` in interval `i`; the node
    //! runs `A(n)` where `n` is its previous nonce.

    use super::*;

    pub fn m() -> Term {
        node("m")
    }
    pub fn n(j: u32) -> Term {
        (0..j).fold(nonce("n0"), |acc, _| Term::prf(m(), acc))
    }
    pub fn p(j: u32) -> Term {
        Term::pair(tag("req"), Term::pair(m(), n(j)))
    }
    pub fn q(i: u32) -> Term {
        Term::pair(Term::int(i as i64), kc(i - 1))
    }
    /// Reply built in interval `i` for a request carrying nonce `n_l`.
    pub fn w_for(i: u32, l: u32) -> Term {
        Term::pair(q(i), Term::mac(key("kBSm"), Term::pair(n(l), q(i))))
    }
    pub fn w(i: u32) -> Term {
        w_for(i, i)
    }
    pub fn end(j: u32) -> Term {
        Term::pair(tag("end"), n(j))
    }
    pub fn auth(j: u32) -> Term {
        Term::pair(tag("auth"), n(j))
    }

    fn node_defs(b: &mut DefsBuilder, integrity: bool) {
        // A(np): fresh nonce, request, then wait for the reply.
        b.def(
            "A",
            &["np"],
            let_(
                "n",
                Rule::Ctor(Ctor::Prf),
                vec![m(), v("np")],
                let_(
                    "t",
                    pair_rule(),
                    vec![m(), v("n")],
                    let_(
                        "p",
                        pair_rule(),
                        vec![tag("req"), v("t")],
                        Process::bang(v("p"), sleep(call("B", vec![v("n")]))),
                        Process::Nil,
                    ),
                    Process::Nil,
                ),
                Process::Nil,
            ),
        );
        b.def(
            "B",
            &["n"],
            Process::recv(
                "w",
                call("C", vec![v("n"), v("w")]),
                call("A", vec![v("n")]),
            ),
        );
        let retry = || sleep(call("A", vec![v("n")]));
        let success = if integrity {
            sleep(let_(
                "t",
                pair_rule(),
                vec![tag("auth"), v("n")],
                Process::bang(v("t"), call("Done", vec![])),
                Process::Nil,
            ))
        } else {
            sleep(call("Done", vec![]))
        };
        let c3 = let_("k", Rule::Snd, vec![v("q")], success, retry());
        let c2 = let_("i", Rule::Fst, vec![v("q")], c3, retry());
        let c1 = let_(
            "h",
            Rule::Snd,
            vec![v("w")],
            let_(
                "r",
                pair_rule(),
                vec![v("n"), v("q")],
                let_(
                    "h2",
                    Rule::Ctor(Ctor::Mac),
                    vec![key("kBSm"), v("r")],
                    Process::matching(v("h"), v("h2"), c2, retry()),
                    retry(),
                ),
                retry(),
            ),
            retry(),
        );
        b.def(
            "C",
            &["n", "w"],
            let_("q", Rule::Fst, vec![v("w")], c1, retry()),
        );
        b.def("Done", &[], sleep(call("Done", vec![])));
    }

    fn bs_defs(b: &mut DefsBuilder, agreement: bool, last: u32) {
        for i in 1..=last {
            let next = || call(&format!("D{}", i + 1), vec![]);
            let fail = || sleep(sleep(next()));
            b.def(
                &format!("D{i}"),
                &[],
                Process::recv("p", call(&format!("E{i}"), vec![v("p")]), sleep(next())),
            );
            let tail = if agreement {
                sleep(let_(
                    "t",
                    pair_rule(),
                    vec![tag("end"), v("n")],
                    Process::bang(v("t"), next()),
                    Process::Nil,
                ))
            } else {
                sleep(next())
            };
            let e3 = let_(
                "n",
                Rule::Snd,
                vec![v("t")],
                let_(
                    "qi",
                    pair_rule(),
                    vec![Term::int(i as i64), kc(i - 1)],
                    let_(
                        "ri",
                        pair_rule(),
                        vec![v("n"), v("qi")],
                        let_(
                            "hi",
                            Rule::Ctor(Ctor::Mac),
                            vec![key("kBSm"), v("ri")],
                            let_(
                                "wi",
                                pair_rule(),
                                vec![v("qi"), v("hi")],
                                sleep(Process::bang(v("wi"), tail)),
                                fail(),
                            ),
                            fail(),
                        ),
                        fail(),
                    ),
                    fail(),
                ),
                fail(),
            );
            let e2 = let_(
                "t",
                Rule::Snd,
                vec![v("p")],
                let_("mm", Rule::Fst, vec![v("t")], e3, fail()),
                fail(),
            );
            let e1 = Process::matching(v("p1"), tag("req"), e2, fail());
            b.def(
                &format!("E{i}"),
                &["p"],
                let_("p1", Rule::Fst, vec![v("p")], e1, fail()),
            );
        }
        b.def(&format!("D{}", last + 1), &[], call("Tick", vec![]));
    }

    pub fn system(variant: &str, p: &Params) -> Network {
        let mut b = DefsBuilder::default();
        b.tick();
        node_defs(&mut b, variant == "integrity");
        bs_defs(&mut b, variant == "agreement", intervals(p));
        nodes(
            vec![
                Node::new("bs", call("D1", vec![]), &["m"]),
                Node::new("m", call("A", vec![nonce("n0")]), &["bs"]),
            ],
            b.done(),
        )
    }

    /// Timed agreement: the base station answers and signals completion
    /// exactly one interval after the request.
    pub fn rho_agr(p: &Params) -> Network {
        let last = intervals(p);
        let mut b = DefsBuilder::default();
        b.tick();
        b.def("Done", &[], sleep(call("Done", vec![])));
        for i in 1..=last {
            let dn = format!("Dh{}", i + 1);
            let an = format!("Ah{}", i + 1);
            b.def(
                &format!("Dh{i}"),
                &[],
                Process::sum(
                    vec![sleep(Process::bang(
                        w(i),
                        sleep(Process::bang(end(i), call(&dn, vec![]))),
                    ))],
                    sleep(call(&dn, vec![])),
                ),
            );
            b.def(
                &format!("Ah{i}"),
                &[],
                Process::bang(
                    p_(i),
                    sleep(Process::sum(
                        vec![sleep(call("Done", vec![]))],
                        call(&an, vec![]),
                    )),
                ),
            );
        }
        b.def(&format!("Dh{}", last + 1), &[], call("Tick", vec![]));
        b.def(&format!("Ah{}", last + 1), &[], call("Tick", vec![]));
        nodes(
            vec![
                Node::new("bs", call("Dh1", vec![]), &["obs", "m"]),
                Node::new("m", call("Ah1", vec![]), &["obs", "bs"]),
            ],
            b.done(),
        )
    }

    fn p_(i: u32) -> Term {
        p(i)
    }

    /// Timed integrity: the node authenticates exactly one interval after
    /// its request; the base station is silent.
    pub fn rho_int(p: &Params) -> Network {
        let last = intervals(p);
        let mut b = DefsBuilder::default();
        b.tick();
        b.def("Done", &[], sleep(call("Done", vec![])));
        for i in 1..=last {
            let an = format!("Ab{}", i + 1);
            b.def(
                &format!("Ab{i}"),
                &[],
                Process::bang(
                    p_(i),
                    sleep(Process::sum(
                        vec![sleep(Process::bang(auth(i), call("Done", vec![])))],
                        call(&an, vec![]),
                    )),
                ),
            );
        }
        b.def(&format!("Ab{}", last + 1), &[], call("Tick", vec![]));
        nodes(
            vec![
                Node::new("bs", call("Tick", vec![]), &["m"]),
                Node::new("m", call("Ab1", vec![]), &["obs", "bs"]),
            ],
            b.done(),
        )
    }

    /// The published sequence: one reply per interval, with the current nonce.
    pub fn sequence_literal(slots: usize) -> KnowledgeSequence {
        let mut out = vec![vec![p(1)]];
        for k in 1..=slots {
            let j = (k / 2) as u32;
            if k % 2 == 1 {
                out.push(vec![w(j + 1)]);
            } else {
                out.push(vec![auth(j), p(j + 1)]);
            }
        }
        ksteps(out)
    }

    /// The published sequence plus the replies the base station gives to
    /// replayed requests: in interval `i` it may answer any nonce `n_l`, `l <= i`.
    pub fn sequence_extended(slots: usize) -> KnowledgeSequence {
        let mut out = vec![vec![p(1)]];
        for k in 1..=slots {
            let j = (k / 2) as u32;
            if k % 2 == 1 {
                out.push((1..=j + 1).map(|l| w_for(j + 1, l)).collect());
            } else {
                out.push(vec![auth(j), p(j + 1)]);
            }
        }
        ksteps(out)
    }

    pub fn golden() -> Trace {
        Trace::new(vec![
            obs(p(1)),
            Label::Sigma,
            Label::Tau,
            Label::Sigma,
            Label::Tau,
            obs(p(2)),
            Label::Sigma,
            obs(w_for(2, 1)),
            Label::Sigma,
            obs(end(1)),
        ])
    }

    pub fn build(variant: &str, params: &Params) -> ProtocolInstance {
        let system = system(variant, params);
        let rounds = intervals(params);
        let (abstraction, knowledge, observed, gap, expected) = match variant {
            "agreement" => (
                Some(rho_agr(params)),
                recorded(),
                vec!["bs", "m"],
                Some(GapClaim {
                    label: "request to completion".into(),
                    pairs: (1..=rounds).map(|i| (p(i), end(i))).collect(),
                    expected: 2,
                }),
                Some(golden()),
            ),
            "integrity" => (
                Some(rho_int(params)),
                sequence_extended(2 * rounds as usize + 2),
                vec!["m"],
                Some(GapClaim {
                    label: "request to authentication".into(),
                    pairs: (1..=rounds).map(|i| (p(i), auth(i))).collect(),
                    expected: 2,
                }),
                None,
            ),
            _ => (None, empty_knowledge(), vec!["bs", "m"], None, None),
        };
        ProtocolInstance {
            name: "mutesla-boot".into(),
            variant: variant.into(),
            params: params.clone(),
            system,
            abstraction,
            knowledge,
            wiring: AttackerWiring::new(&[("bs", "b"), ("m", "a")], &observed),
            gap,
            expected,
        }
    }
}

pub mod auth {
    //! Authenticated broadcast. Receiver definitions are indexed by the
    //! current interval `i` and the interval `l` of the last authenticated
    //! key; `l = -1` stands for the bootstrap key.

    use super::*;

    pub fn q(i: u32) -> Term {
        Term::other(&format!("q{i}"))
    }
    pub fn p(i: u32) -> Term {
        Term::pair(Term::mac(q(i), kc(i)), q(i))
    }
    pub fn auth(i: u32) -> Term {
        Term::pair(tag("auth"), p(i))
    }
    /// The bootstrap key, one step below the chain.
    pub fn k_bs() -> Term {
        Term::f(kc(0))
    }

    fn lname(l: i64) -> String {
        if l < 0 {
            format!("m{}", -l)
        } else {
            l.to_string()
        }
    }
    fn nm(h: &str, i: u32, l: i64) -> String {
        format!("{h}{i}_{}", lname(l))
    }

    fn sender_defs(b: &mut DefsBuilder, last: u32) {
        for i in 1..=last {
            b.def(
                &format!("S{i}"),
                &[],
                let_(
                    "u",
                    Rule::Ctor(Ctor::Mac),
                    vec![q(i), kc(i)],
                    let_(
                        "p",
                        pair_rule(),
                        vec![v("u"), q(i)],
                        Process::bang(
                            v("p"),
                            sleep(Process::bang(
                                kc(i - 1),
                                sleep(call(&format!("S{}", i + 1), vec![])),
                            )),
                        ),
                        Process::Nil,
                    ),
                    Process::Nil,
                ),
            );
        }
        b.def(&format!("S{}", last + 1), &[], call("Tick", vec![]));
    }

    fn receiver_defs(b: &mut DefsBuilder, signal: bool, last: u32) {
        for i in 1..=last {
            for l in -1..=(i as i64 - 2) {
                let r_next = |ll: i64, args: Vec<Term>| call(&nm("R", i + 1, ll), args);
                b.def(
                    &nm("R", i, l),
                    &["r", "kl"],
                    Process::recv(
                        "p",
                        sleep(call(&nm("P", i, l), vec![v("p"), v("r"), v("kl")])),
                        call(&nm("Q", i, l), vec![v("r"), v("kl")]),
                    ),
                );
                b.def(
                    &nm("P", i, l),
                    &["p", "r", "kl"],
                    Process::recv(
                        "k",
                        call(&nm("T", i, l), vec![v("p"), v("r"), v("kl"), v("k")]),
                        r_next(l, vec![v("p"), v("kl")]),
                    ),
                );
                let accepted = || sleep(r_next(i as i64 - 1, vec![v("p"), v("k")]));
                let check = let_(
                    "u",
                    Rule::Fst,
                    vec![v("r")],
                    let_(
                        "q",
                        Rule::Snd,
                        vec![v("r")],
                        let_(
                            "u2",
                            Rule::Ctor(Ctor::Mac),
                            vec![v("q"), v("k")],
                            Process::matching(
                                v("u"),
                                v("u2"),
                                sleep(call(
                                    &nm("Z", i + 1, i as i64 - 1),
                                    vec![v("p"), v("r"), v("k")],
                                )),
                                accepted(),
                            ),
                            accepted(),
                        ),
                        accepted(),
                    ),
                    accepted(),
                );
                let steps = (i as i64 - 1 - l) as u32;
                b.def(
                    &nm("T", i, l),
                    &["p", "r", "kl", "k"],
                    Process::matching(
                        Term::f_iter(v("k"), steps),
                        v("kl"),
                        check,
                        sleep(r_next(l, vec![v("p"), v("kl")])),
                    ),
                );
                b.def(
                    &nm("Q", i, l),
                    &["r", "kl"],
                    Process::recv(
                        "k",
                        call(&nm("T", i, l), vec![v("r"), v("r"), v("kl"), v("k")]),
                        r_next(l, vec![v("r"), v("kl")]),
                    ),
                );
            }
        }
        for i in 2..=last + 1 {
            let l = i as i64 - 2;
            let body = if signal {
                let_(
                    "t",
                    pair_rule(),
                    vec![tag("auth"), v("r")],
                    Process::bang(v("t"), call(&nm("R", i, l), vec![v("p"), v("kl")])),
                    Process::Nil,
                )
            } else {
                call(&nm("R", i, l), vec![v("p"), v("kl")])
            };
            b.def(&nm("Z", i, l), &["p", "r", "kl"], body);
        }
        for l in -1..=(last as i64 - 1) {
            b.def(&nm("R", last + 1, l), &["r", "kl"], call("Tick", vec![]));
        }
    }

    fn receivers(h: u32) -> Vec<String> {
        (1..=h).map(|j| format!("m{j}")).collect()
    }

    pub fn system(variant: &str, p: &Params) -> Network {
        let last = intervals(p);
        let mut b = DefsBuilder::default();
        b.tick();
        sender_defs(&mut b, last);
        receiver_defs(&mut b, variant == "integrity", last);
        let ms = receivers(p.h);
        let msr: Vec<&str> = ms.iter().map(String::as_str).collect();
        let mut ns = vec![Node::new("bs", call("S1", vec![]), &msr)];
        for m in &ms {
            ns.push(Node::new(
                m,
                call(&nm("R", 1, -1), vec![Term::bot(), k_bs()]),
                &["bs"],
            ));
        }
        nodes(ns, b.done())
    }

    /// Timed integrity: receivers may authenticate packet `p_{i-1}` only at
    /// the start of interval `i+1`.
    pub fn rho_int(p: &Params) -> Network {
        let last = intervals(p);
        let mut b = DefsBuilder::default();
        b.tick();
        sender_defs(&mut b, last);
        for i in 1..=last {
            let next = format!("Rh{}", i + 1);
            b.def(
                &format!("Rh{i}"),
                &[],
                sleep(Process::sum(
                    vec![sleep(Process::bang(auth(i - 1), call(&next, vec![])))],
                    call(&next, vec![]),
                )),
            );
        }
        b.def(&format!("Rh{}", last + 1), &[], call("Tick", vec![]));
        let ms = receivers(p.h);
        let mut all: Vec<&str> = vec!["obs"];
        all.extend(ms.iter().map(String::as_str));
        let mut ns = vec![Node::new("bs", call("S1", vec![]), &all)];
        for m in &ms {
            ns.push(Node::new(m, call("Rh1", vec![]), &["obs", "bs"]));
        }
        nodes(ns, b.done())
    }

    pub fn sequence(slots: usize) -> KnowledgeSequence {
        let mut out = vec![vec![p(1)]];
        for k in 1..=slots {
            let j = (k / 2) as u32;
            if k % 2 == 1 {
                out.push(vec![kc(j)]);
            } else {
                out.push(vec![p(j + 1), auth(j - 1)]);
            }
        }
        ksteps(out)
    }

    pub fn build(variant: &str, params: &Params) -> ProtocolInstance {
        let system = system(variant, params);
        let rounds = intervals(params);
        let ms = receivers(params.h);
        let mut pairs: Vec<(&str, String)> = vec![("bs", "b".into())];
        for (j, m) in ms.iter().enumerate() {
            pairs.push((m, format!("a{}", j + 1)));
        }
        let pairs_ref: Vec<(&str, &str)> = pairs.iter().map(|(x, y)| (*x, y.as_str())).collect();
        let mut observed: Vec<&str> = vec!["bs"];
        observed.extend(ms.iter().map(String::as_str));
        let integrity = variant == "integrity";
        ProtocolInstance {
            name: "mutesla-auth".into(),
            variant: variant.into(),
            params: params.clone(),
            system,
            abstraction: integrity.then(|| rho_int(params)),
            knowledge: sequence(2 * rounds as usize + 2),
            wiring: AttackerWiring::new(&pairs_ref, &observed),
            gap: integrity.then(|| GapClaim {
                label: "packet to authentication".into(),
                pairs: (1..=rounds).map(|i| (p(i), auth(i))).collect(),
                expected: 4,
            }),
            expected: None,
        }
    }
}

pub mod leap {
    //! Pairwise key establishment between initiator `m` and responder `r`.

    use super::*;

    pub fn m() -> Term {
        node("m")
    }
    pub fn r() -> Term {
        node("r")
    }
    pub fn n(j: u32) -> Term {
        (0..j).fold(nonce("n0"), |acc, _| Term::prf(acc, m()))
    }
    pub fn k_r() -> Term {
        Term::prf(key("kin"), r())
    }
    pub fn hello(j: u32) -> Term {
        Term::pair(tag("hello"), Term::pair(m(), n(j)))
    }
    pub fn mac_of(j: u32) -> Term {
        Term::mac(k_r(), Term::pair(r(), n(j)))
    }
    pub fn q(j: u32) -> Term {
        Term::pair(r(), mac_of(j))
    }
    pub fn end(j: u32) -> Term {
        Term::pair(tag("end"), n(j))
    }
    pub fn auth(j: u32) -> Term {
        Term::pair(tag("auth"), Term::pair(m(), n(j)))
    }

    fn initiator_defs(b: &mut DefsBuilder, signal: bool) {
        b.def(
            "S",
            &["np"],
            let_(
                "n",
                Rule::Ctor(Ctor::Prf),
                vec![v("np"), m()],
                let_(
                    "t",
                    pair_rule(),
                    vec![m(), v("n")],
                    let_(
                        "p",
                        pair_rule(),
                        vec![tag("hello"), v("t")],
                        Process::bang(v("p"), sleep(call("P", vec![v("n"), v("t")]))),
                        Process::Nil,
                    ),
                    Process::Nil,
                ),
                Process::Nil,
            ),
        );
        b.def(
            "P",
            &["n", "t"],
            Process::recv(
                "q",
                call("P1", vec![v("n"), v("t"), v("q")]),
                call("S", vec![v("n")]),
            ),
        );
        let retry = || sleep(call("S", vec![v("n")]));
        let p4 = if signal {
            sleep(let_(
                "a",
                pair_rule(),
                vec![tag("auth"), v("t")],
                Process::bang(v("a"), Process::Nil),
                Process::Nil,
            ))
        } else {
            sleep(Process::Nil)
        };
        let p3 = let_(
            "kmr",
            Rule::Ctor(Ctor::Prf),
            vec![v("kr"), m()],
            p4,
            retry(),
        );
        let p2 = let_(
            "h",
            Rule::Snd,
            vec![v("q")],
            let_(
                "t2",
                pair_rule(),
                vec![v("rr"), v("n")],
                let_(
                    "kr",
                    Rule::Ctor(Ctor::Prf),
                    vec![key("kin"), v("rr")],
                    let_(
                        "h2",
                        Rule::Ctor(Ctor::Mac),
                        vec![v("kr"), v("t2")],
                        Process::matching(v("h2"), v("h"), p3, retry()),
                        retry(),
                    ),
                    retry(),
                ),
                retry(),
            ),
            retry(),
        );
        b.def(
            "P1",
            &["n", "t", "q"],
            let_("rr", Rule::Fst, vec![v("q")], p2, retry()),
        );
    }

    fn responder_defs(b: &mut DefsBuilder, signal: bool) {
        let fail = || sleep(sleep(call("R", vec![])));
        b.def(
            "R",
            &[],
            Process::recv("p", call("R1", vec![v("p")]), sleep(call("R", vec![]))),
        );
        let r6 = if signal {
            sleep(let_(
                "e",
                pair_rule(),
                vec![tag("end"), v("n")],
                Process::bang(v("e"), Process::Nil),
                Process::Nil,
            ))
        } else {
            sleep(Process::Nil)
        };
        let r5 = let_(
            "kmr",
            Rule::Ctor(Ctor::Prf),
            vec![k_r(), v("mm")],
            r6,
            fail(),
        );
        let r4 = let_(
            "n",
            Rule::Snd,
            vec![v("p2")],
            let_(
                "t",
                pair_rule(),
                vec![r(), v("n")],
                let_(
                    "h",
                    Rule::Ctor(Ctor::Mac),
                    vec![k_r(), v("t")],
                    let_(
                        "q",
                        pair_rule(),
                        vec![r(), v("h")],
                        sleep(Process::bang(v("q"), r5)),
                        fail(),
                    ),
                    fail(),
                ),
                fail(),
            ),
            fail(),
        );
        let r3 = let_("mm", Rule::Fst, vec![v("p2")], r4, fail());
        let r2 = let_(
            "p2",
            Rule::Snd,
            vec![v("p")],
            Process::matching(v("p1"), tag("hello"), r3, fail()),
            fail(),
        );
        b.def(
            "R1",
            &["p"],
            let_("p1", Rule::Fst, vec![v("p")], r2, fail()),
        );
    }

    pub fn system(variant: &str) -> Network {
        let mut b = DefsBuilder::default();
        initiator_defs(&mut b, variant == "integrity");
        responder_defs(&mut b, variant == "agreement");
        nodes(
            vec![
                Node::new("m", call("S", vec![nonce("n0")]), &["r"]),
                Node::new("r", call("R", vec![]), &["m"]),
            ],
            b.done(),
        )
    }

    pub fn rho_agr(p: &Params) -> Network {
        let last = intervals(p);
        let mut b = DefsBuilder::default();
        b.tick();
        for i in 1..=last {
            let sn = format!("Sb{}", i + 1);
            let rn = format!("Rb{}", i + 1);
            b.def(
                &format!("Sb{i}"),
                &[],
                Process::bang(
                    hello(i),
                    sleep(Process::sum(vec![sleep(Process::Nil)], call(&sn, vec![]))),
                ),
            );
            b.def(
                &format!("Rb{i}"),
                &[],
                Process::sum(
                    vec![sleep(Process::bang(
                        q(i),
                        sleep(Process::bang(end(i), Process::Nil)),
                    ))],
                    sleep(call(&rn, vec![])),
                ),
            );
        }
        b.def(&format!("Sb{}", last + 1), &[], call("Tick", vec![]));
        b.def(&format!("Rb{}", last + 1), &[], call("Tick", vec![]));
        nodes(
            vec![
                Node::new("m", call("Sb1", vec![]), &["obs", "r"]),
                Node::new("r", call("Rb1", vec![]), &["obs", "m"]),
            ],
            b.done(),
        )
    }

    pub fn rho_int(p: &Params) -> Network {
        let last = intervals(p);
        let mut b = DefsBuilder::default();
        b.tick();
        for i in 1..=last {
            let sn = format!("Sh{}", i + 1);
            b.def(
                &format!("Sh{i}"),
                &[],
                Process::bang(
                    hello(i),
                    sleep(Process::sum(
                        vec![sleep(Process::bang(auth(i), Process::Nil))],
                        call(&sn, vec![]),
                    )),
                ),
            );
        }
        b.def(&format!("Sh{}", last + 1), &[], call("Tick", vec![]));
        nodes(
            vec![
                Node::new("m", call("Sh1", vec![]), &["obs", "r"]),
                Node::new("r", call("Tick", vec![]), &["m"]),
            ],
            b.done(),
        )
    }

    /// The published sequence, with the responder's name known from the start
    /// so that its replies are deducible.
    pub fn sequence(slots: usize) -> KnowledgeSequence {
        let mut out = vec![vec![hello(1), r()]];
        for k in 1..=slots {
            let j = (k / 2) as u32;
            if k % 2 == 1 {
                out.push(vec![mac_of(j + 1)]);
            } else {
                out.push(vec![hello(j + 1), auth(j)]);
            }
        }
        ksteps(out)
    }

    pub fn golden() -> Trace {
        Trace::new(vec![
            obs(hello(1)),
            Label::Sigma,
            Label::Tau,
            Label::Sigma,
            Label::Tau,
            obs(hello(2)),
            Label::Sigma,
            obs(q(1)),
            Label::Sigma,
            obs(end(1)),
        ])
    }

    pub fn build(variant: &str, params: &Params) -> ProtocolInstance {
        let rounds = intervals(params);
        let (abstraction, knowledge, observed, gap, expected) = match variant {
            "agreement" => (
                Some(rho_agr(params)),
                recorded(),
                vec!["m", "r"],
                Some(GapClaim {
                    label: "hello to completion".into(),
                    pairs: (1..=rounds).map(|i| (hello(i), end(i))).collect(),
                    expected: 2,
                }),
                Some(golden()),
            ),
            "integrity" => (
                Some(rho_int(params)),
                sequence(2 * rounds as usize + 2),
                vec!["m"],
                Some(GapClaim {
                    label: "hello to authentication".into(),
                    pairs: (1..=rounds).map(|i| (hello(i), auth(i))).collect(),
                    expected: 2,
                }),
                None,
            ),
            _ => (None, empty_knowledge(), vec!["m", "r"], None, None),
        };
        ProtocolInstance {
            name: "leap".into(),
            variant: variant.into(),
            params: params.clone(),
            system: system(variant),
            abstraction,
            knowledge,
            wiring: AttackerWiring::new(&[("m", "a"), ("r", "b")], &observed),
            gap,
            expected,
        }
    }
}

pub mod lisp {
    //! Key renewal. The listener `KL` runs `L_i` in interval `i` (from 0) and
    //! answers a request with `q_{i+1}`; the node runs `Z`, then the
    //! rekeying loop `R_l` with `l` buffered keys.

    use super::*;

    pub fn m() -> Term {
        node("m")
    }
    pub fn request() -> Term {
        Term::pair(tag("RequestKey"), m())
    }
    pub fn q(i: u32, s: u32) -> Term {
        let k = kc(s + i);
        Term::pair(
            tag("InitKey"),
            Term::pair(Term::enc(key("kKSm"), k.clone()), Term::hash(k)),
        )
    }
    pub fn auth(i: u32, s: u32) -> Term {
        Term::pair(tag("auth"), kc(s + i))
    }
    pub fn update(i: u32, s: u32) -> Term {
        Term::pair(tag("UpdateKey"), Term::enc(kc(i), kc(s + i)))
    }

    fn node_defs(b: &mut DefsBuilder, signal: bool, s: u32) {
        b.def(
            "Z",
            &[],
            let_(
                "r",
                pair_rule(),
                vec![tag("RequestKey"), m()],
                Process::bang(
                    v("r"),
                    sleep(Process::recv(
                        "q",
                        call("T", vec![v("q")]),
                        call("Z", vec![]),
                    )),
                ),
                Process::Nil,
            ),
        );
        let retry = || sleep(call("Z", vec![]));
        let enter = |k: Term| {
            call(
                &format!("R{}", s - 1),
                vec![Term::f_iter(k.clone(), s - 1), k],
            )
        };
        let t4 = if signal {
            sleep(let_(
                "a",
                pair_rule(),
                vec![tag("auth"), v("k")],
                Process::bang(v("a"), sleep(enter(v("k")))),
                Process::Nil,
            ))
        } else {
            sleep(sleep(enter(v("k"))))
        };
        let t3 = let_(
            "h2",
            Rule::Ctor(Ctor::Hash),
            vec![v("k")],
            Process::matching(v("h"), v("h2"), t4, retry()),
            retry(),
        );
        let t2 = let_(
            "q2",
            Rule::Snd,
            vec![v("q")],
            let_(
                "w",
                Rule::Fst,
                vec![v("q2")],
                let_(
                    "h",
                    Rule::Snd,
                    vec![v("q2")],
                    let_(
                        "k",
                        Rule::Ctor(Ctor::Dec),
                        vec![key("kKSm"), v("w")],
                        t3,
                        retry(),
                    ),
                    retry(),
                ),
                retry(),
            ),
            retry(),
        );
        let t1 = Process::matching(v("q1"), tag("InitKey"), t2, retry());
        b.def(
            "T",
            &["q"],
            let_("q1", Rule::Fst, vec![v("q")], t1, retry()),
        );
        for l in 0..s {
            let fl = format!("F{l}");
            b.def(
                &format!("R{l}"),
                &["kc", "kl"],
                Process::recv(
                    "u",
                    call(&format!("E{l}"), vec![v("kc"), v("kl"), v("u")]),
                    call(&fl, vec![v("kc"), v("kl")]),
                ),
            );
            let fail = || sleep(call(&fl, vec![v("kc"), v("kl")]));
            let e3 = Process::matching(
                Term::f_iter(v("k"), s - l),
                v("kl"),
                sleep(sleep(enter(v("k")))),
                fail(),
            );
            let e2 = let_(
                "u2",
                Rule::Snd,
                vec![v("u")],
                let_(
                    "k",
                    Rule::Ctor(Ctor::Dec),
                    vec![v("kc"), v("u2")],
                    e3,
                    fail(),
                ),
                fail(),
            );
            let e1 = Process::matching(v("u1"), tag("UpdateKey"), e2, fail());
            b.def(
                &format!("E{l}"),
                &["kc", "kl", "u"],
                let_("u1", Rule::Fst, vec![v("u")], e1, fail()),
            );
            let body = if l == 0 {
                call("Z", vec![])
            } else {
                sleep(call(
                    &format!("R{}", l - 1),
                    vec![Term::f_iter(v("kl"), l - 1), v("kl")],
                ))
            };
            b.def(&fl, &["kc", "kl"], body);
        }
    }

    fn listener_defs(b: &mut DefsBuilder, s: u32, last: u32) {
        for i in 0..last {
            b.def(
                &format!("L{i}"),
                &[],
                Process::recv(
                    "r",
                    call(&format!("I{}", i + 1), vec![v("r")]),
                    sleep(call(&format!("L{}", i + 1), vec![])),
                ),
            );
        }
        b.def(&format!("L{last}"), &[], call("Tick", vec![]));
        for j in 1..=last {
            let back = || call(&format!("L{j}"), vec![]);
            let fail = || sleep(sleep(back()));
            let k = kc(s + j);
            let i2 = let_(
                "mm",
                Rule::Snd,
                vec![v("r")],
                let_(
                    "w",
                    Rule::Ctor(Ctor::Enc),
                    vec![key("kKSm"), k.clone()],
                    let_(
                        "h",
                        Rule::Ctor(Ctor::Hash),
                        vec![k],
                        let_(
                            "ri",
                            pair_rule(),
                            vec![v("w"), v("h")],
                            let_(
                                "qi",
                                pair_rule(),
                                vec![tag("InitKey"), v("ri")],
                                sleep(Process::bang(v("qi"), sleep(back()))),
                                fail(),
                            ),
                            fail(),
                        ),
                        fail(),
                    ),
                    fail(),
                ),
                fail(),
            );
            let i1 = Process::matching(v("r1"), tag("RequestKey"), i2, fail());
            b.def(
                &format!("I{j}"),
                &["r"],
                let_("r1", Rule::Fst, vec![v("r")], i1, fail()),
            );
        }
    }

    fn disposer_defs(b: &mut DefsBuilder, s: u32, last: u32) {
        b.def("D0", &[], sleep(call("D1", vec![])));
        for i in 1..=last {
            b.def(
                &format!("D{i}"),
                &[],
                let_(
                    "t",
                    Rule::Ctor(Ctor::Enc),
                    vec![kc(i), kc(s + i)],
                    let_(
                        "u",
                        pair_rule(),
                        vec![tag("UpdateKey"), v("t")],
                        Process::bang(v("u"), sleep(sleep(call(&format!("D{}", i + 1), vec![])))),
                        Process::Nil,
                    ),
                    Process::Nil,
                ),
            );
        }
        b.def(&format!("D{}", last + 1), &[], call("Tick", vec![]));
    }

    fn last(p: &Params) -> u32 {
        p.n - p.s
    }

    pub fn system(variant: &str, p: &Params) -> Network {
        let mut b = DefsBuilder::default();
        b.tick();
        node_defs(&mut b, variant == "integrity", p.s);
        listener_defs(&mut b, p.s, last(p));
        if variant == "base" {
            disposer_defs(&mut b, p.s, last(p));
            nodes(
                vec![
                    Node::new("m", call("Z", vec![]), &["KD", "KL"]),
                    Node::new("KD", call("D0", vec![]), &["m", "KL"]),
                    Node::new("KL", call("L0", vec![]), &["m", "KD"]),
                ],
                b.done(),
            )
        } else {
            nodes(
                vec![
                    Node::new("m", call("Z", vec![]), &["KL"]),
                    Node::new("KL", call("L0", vec![]), &["m"]),
                ],
                b.done(),
            )
        }
    }

    /// Timed integrity abstraction, aligned with the listener's indexing:
    /// round `i` answers with `q_{i+1}` and authenticates `k_{s+i+1}`.
    pub fn rho_int(p: &Params) -> Network {
        let s = p.s;
        let last = last(p);
        let mut b = DefsBuilder::default();
        b.tick();
        node_defs(&mut b, true, s);
        for i in 0..last {
            let zn = format!("Zh{}", i + 1);
            let ln = format!("Lh{}", i + 1);
            let k = kc(s + i + 1);
            b.def(
                &format!("Zh{i}"),
                &[],
                Process::bang(
                    request(),
                    sleep(Process::sum(
                        vec![sleep(Process::bang(
                            auth(i + 1, s),
                            sleep(call(
                                &format!("R{}", s - 1),
                                vec![Term::f_iter(k.clone(), s - 1), k],
                            )),
                        ))],
                        call(&zn, vec![]),
                    )),
                ),
            );
            b.def(
                &format!("Lh{i}"),
                &[],
                Process::sum(
                    vec![sleep(Process::bang(q(i + 1, s), sleep(call(&ln, vec![]))))],
                    sleep(call(&ln, vec![])),
                ),
            );
        }
        b.def(&format!("Zh{last}"), &[], call("Tick", vec![]));
        b.def(&format!("Lh{last}"), &[], call("Tick", vec![]));
        nodes(
            vec![
                Node::new("m", call("Zh0", vec![]), &["obs", "KL"]),
                Node::new("KL", call("Lh0", vec![]), &["obs", "m"]),
            ],
            b.done(),
        )
    }

    pub fn golden(s: u32) -> Trace {
        Trace::new(vec![
            obs(request()),
            Label::Sigma,
            obs(q(1, s)),
            Label::Sigma,
            Label::Tau,
            obs(request()),
            Label::Sigma,
            Label::Tau,
            Label::Sigma,
            obs(auth(1, s)),
        ])
    }

    pub fn build(variant: &str, params: &Params) -> ProtocolInstance {
        let integrity = variant == "integrity";
        let rounds = last(params);
        let wiring = if integrity {
            AttackerWiring::new(&[("KL", "b"), ("m", "a")], &["KL", "m"])
        } else {
            AttackerWiring::new(&[("KD", "d"), ("KL", "b"), ("m", "a")], &["KD", "KL", "m"])
        };
        ProtocolInstance {
            name: "lisp".into(),
            variant: variant.into(),
            params: params.clone(),
            system: system(variant, params),
            abstraction: integrity.then(|| rho_int(params)),
            knowledge: recorded(),
            wiring,
            gap: integrity.then(|| GapClaim {
                label: "reply to authentication".into(),
                pairs: (1..=rounds)
                    .map(|i| (q(i, params.s), auth(i, params.s)))
                    .collect(),
                expected: 2,
            }),
            expected: integrity.then(|| golden(params.s)),
        }
    }
}

/// The published two-node replay attacker: `a` (neighbour of the first
/// protocol node) hears and forwards after one tick, `b` (neighbour of the
/// peer) does the same one tick later.
pub fn scripted_attacker(proto: &str) -> Result<Network, ProtocolError> {
    let (first, peer, delay_x) = match proto {
        "mutesla-boot" => ("m", "bs", 0),
        "leap" => ("m", "r", 0),
        "lisp" => ("m", "KL", 2),
        other => return Err(ProtocolError::UnknownProtocol(other.into())),
    };
    let relay = |x: &str| Process::recv(x, sleep(Process::bang(v(x), Process::Nil)), Process::Nil);
    Ok(Network::new(
        vec![
            Node::new("a", Process::sleeps(delay_x, relay("x")), &[first, "b"]),
            Node::new("b", sleep(relay("y")), &[peer, "a"]),
        ],
        Arc::new(Defs::new()),
    ))
}

fn attack_variant(proto: &str) -> Option<&'static str> {
    match proto {
        "mutesla-boot" | "leap" => Some("agreement"),
        "lisp" => Some("integrity"),
        _ => None,
    }
}

/// Replays the published attack: the golden trace must run on the attacked
/// system, must be rejected by the abstraction, and its gap must differ from
/// the one the abstraction allows.
pub fn replay_attack(
    proto: &str,
    params: &Params,
    tau_bound: usize,
) -> Result<CheckReport, ProtocolError> {
    let variant =
        attack_variant(proto).ok_or_else(|| ProtocolError::UnknownProtocol(proto.into()))?;
    let inst = build(proto, variant, params)?;
    let attacker = scripted_attacker(proto)?;
    let wired = crate::tgndc::wire_observed(&inst.system, &inst.wiring)
        .map_err(|e| ProtocolError::Params(e.to_string()))?;
    let attacked = wired.compose(&attacker);
    let golden = inst
        .expected
        .clone()
        .expect("attack variants carry a trace");
    let abs = inst
        .abstraction
        .clone()
        .expect("attack variants carry an abstraction");
    let claim = inst.gap.clone().expect("attack variants carry a gap claim");
    let (from, to) = claim.pairs[0].clone();

    let mut rep = CheckReport::new(format!("attack {proto}"));
    rep.bound("tau_bound", tau_bound);
    let on_system = run_trace(&attacked, &golden, tau_bound)?;
    let on_spec = run_trace(&abs, &golden, tau_bound)?;
    let gap = golden.gap(&from, &to);
    let horizon = golden.sigma_count() + 2;
    let mut ex = explore_raw(&abs, &ExploreOptions::new(horizon))?;
    let allowed = gap_set(&mut ex, &from, &to);

    let executable = !on_system.states.is_empty();
    let rejected = on_spec.states.is_empty() && !on_spec.truncated;
    rep.line(format!(
        "trace runs on the attacked system: {}",
        yes_no(executable)
    ));
    rep.line(format!(
        "trace accepted by the abstraction: {}",
        yes_no(!rejected)
    ));
    let gap_text = gap.map_or("none".to_string(), |g| g.to_string());
    let allowed_text: Vec<String> = allowed.iter().map(|g| g.to_string()).collect();
    rep.line(format!("observed: {from} then {to}"));
    rep.line(format!(
        "{} gap {gap_text}, specified {}; abstraction allows {{{}}}",
        claim_kind(variant),
        claim.expected,
        allowed_text.join(",")
    ));
    let reproduced =
        executable && rejected && gap.is_some_and(|g| g != claim.expected && !allowed.contains(&g));
    if reproduced {
        rep.verdict = Verdict::Fails;
        rep.qualifier = Some(format!(
            "{} gap {gap_text} > {}",
            claim_kind(variant),
            claim.expected
        ));
    } else {
        rep.verdict = Verdict::Inconclusive;
        rep.qualifier = Some("attack not reproduced".into());
    }
    let accepted = accepted_prefix(&abs, &golden, tau_bound)?;
    if proto == "lisp" {
        rep.note("the narrative around this attack speaks of four ticks; the exhibited trace has three, and the trace is what is replayed");
    }
    if proto == "mutesla-boot" {
        rep.note("the delayed request reaches the base station in interval 2, so the reply it sends pairs interval 2's key with the first nonce");
    }
    rep.attach("attack.trace", golden.render());
    rep.attach("abstraction-prefix.trace", accepted.render());
    Ok(rep)
}

fn claim_kind(variant: &str) -> &'static str {
    if variant == "agreement" {
        "agreement"
    } else {
        "integrity"
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Longest prefix of `t` that `net` can perform.
fn accepted_prefix(net: &Network, t: &Trace, tau_bound: usize) -> Result<Trace, ProtocolError> {
    let mut best = 0;
    for k in 1..=t.steps.len() {
        let pre = Trace::new(t.steps[..k].to_vec());
        if run_trace(net, &pre, tau_bound)?.states.is_empty() {
            break;
        }
        best = k;
    }
    Ok(Trace::new(t.steps[..best].to_vec()))
}

/// Exhaustive gap check on the abstraction: every listed pair that occurs
/// must be separated by exactly the claimed number of ticks, over `rounds`
/// protocol rounds.
pub fn gap_suite(inst: &ProtocolInstance, rounds: usize) -> Result<CheckReport, ProtocolError> {
    let claim = inst.gap.clone().ok_or_else(|| {
        ProtocolError::UnknownVariant(
            inst.name.clone(),
            format!("{} (no gap claim)", inst.variant),
        )
    })?;
    let abs = inst
        .abstraction
        .clone()
        .expect("gap claims come with an abstraction");
    let horizon = 2 * rounds + 2 + claim.expected;
    let mut rep = CheckReport::new(format!(
        "gap {} {}: {}",
        inst.name, inst.variant, claim.label
    ));
    rep.bound("max_sigma", horizon);
    rep.bound("rounds", rounds);
    let mut ex = explore_raw(&abs, &ExploreOptions::new(horizon))?;
    if ex.incomplete {
        rep.verdict = Verdict::Inconclusive;
        rep.line("exploration incomplete");
    }
    let mut seen = 0;
    for (k, (from, to)) in claim.pairs.iter().take(rounds).enumerate() {
        let gaps = gap_set(&mut ex, from, to);
        let text: Vec<String> = gaps.iter().map(|g| g.to_string()).collect();
        if gaps.is_empty() {
            rep.line(format!("round {}: pair never observed", k + 1));
            rep.verdict = rep.verdict.and(Verdict::Inconclusive);
            continue;
        }
        seen += 1;
        if gaps.iter().all(|g| *g == claim.expected) {
            rep.line(format!("round {}: ticks {{{}}}", k + 1, text.join(",")));
        } else {
            rep.fail(format!(
                "round {}: ticks {{{}}}, expected {}",
                k + 1,
                text.join(","),
                claim.expected
            ));
        }
    }
    rep.line(format!(
        "{seen} of {rounds} rounds observed, {} states",
        ex.order.len()
    ));
    Ok(rep)
}

/// Every bundled instance with default parameters, in listing order.
pub fn all_instances(params: &Params) -> Vec<ProtocolInstance> {
    list()
        .into_iter()
        .map(|(p, v, _)| build(p, v, params).expect("bundled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_instance_is_well_formed_and_well_timed() {
        for inst in all_instances(&Params::default()) {
            let label = format!("{} {}", inst.name, inst.variant);
            assert_eq!(
                inst.system.check_well_formed().verdict,
                Verdict::Holds,
                "{label}"
            );
            assert!(inst.system.is_well_timed_syntax(), "{label}");
            if let Some(a) = &inst.abstraction {
                assert_eq!(
                    a.check_well_formed().verdict,
                    Verdict::Holds,
                    "{label} abstraction"
                );
                assert!(a.is_well_timed_syntax(), "{label} abstraction");
            }
            let wired = crate::tgndc::wire_observed(&inst.system, &inst.wiring).unwrap();
            assert_eq!(
                wired.check_well_formed().verdict,
                Verdict::Holds,
                "{label} wired"
            );
        }
    }

    #[test]
    fn honest_auth_receiver_authenticates() {
        let inst = build("mutesla-auth", "integrity", &Params::default()).unwrap();
        let seen = crate::tgndc::honest_broadcasts(&inst.system, 8);
        assert!(seen.contains(&auth::auth(1)));
        assert!(seen.contains(&auth::auth(2)));
        assert!(!seen.contains(&auth::auth(0)));
    }

    #[test]
    fn golden_traces_replay() {
        for p in ["mutesla-boot", "leap", "lisp"] {
            let rep = replay_attack(p, &Params::default(), 10_000).unwrap();
            assert_eq!(rep.verdict, Verdict::Fails, "{p}\n{}", rep.render());
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            build("tls", "base", &Params::default()),
            Err(ProtocolError::UnknownProtocol(_))
        ));
        assert!(matches!(
            build("leap", "fast", &Params::default()),
            Err(ProtocolError::UnknownVariant(..))
        ));
        assert!(scripted_attacker("mutesla-auth").is_err());
    }
}
