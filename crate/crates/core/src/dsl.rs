//! Text format for models, queries and traces.
//!
//! ```text
//! atoms { node m, bs  tag req  nonce n0  key kBSm }
//! chains { kc }
//! def A(np) = let n = prf(m, np) in out(n).sleep.A(n) else nil
//! network boot {
//!   node m [ A(n0) ] nbr {bs}
//!   node bs [ in(x).sleep.nil timeout nil ] nbr {m}
//! }
//! knowledge phi { slot 0 { n0 }  slot 1 += { kc_0 } }
//! check tgndc boot spec boot observe {m} wire {m: a, bs: b} phi phi bound 8
//! ```
//!
//! Every process form is a prefix form that consumes exactly one `else` or
//! `timeout`, so no grouping is needed. Identifiers in terms resolve to a
//! variable in scope, a declared atom, a number, or a chain key `c_i` of a
//! declared chain, in that order. Deductions stay symbolic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::lts::{Label, Trace};
use crate::messages::{name, AtomKind, Ctor, Knowledge, Name, Rule, Term};
use crate::protocols::ProtocolInstance;
use crate::syntax::{Defs, Network, Node, Process, ProcessDef};
use crate::tgndc::{
    record_sequence, AttackerWiring, Bounds, Extension, KnowledgeSequence, TgndcError, TgndcQuery,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{}:{}: {msg}", pos.line, pos.col)]
pub struct DslError {
    pub pos: Pos,
    pub msg: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse { path: String, source: DslError },
    #[error("{path}: import cycle")]
    Cycle { path: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TgndcQuerySpec {
    pub system: Name,
    pub spec: Name,
    pub observe: BTreeSet<Name>,
    pub wire: Vec<(Name, Name)>,
    pub phi: Name,
    pub bound: Option<usize>,
    pub depth: Option<usize>,
    pub compositional: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    Tgndc(TgndcQuerySpec),
    Sim {
        imp: Name,
        spec: Name,
        bound: Option<usize>,
    },
    Explore {
        net: Name,
        bound: Option<usize>,
    },
    Attack {
        protocol: Name,
    },
}

/// Names visible to a source file: everything its imports declare.
#[derive(Clone, Debug, Default)]
pub struct Env {
    pub atoms: BTreeMap<Name, AtomKind>,
    pub chains: BTreeSet<Name>,
    pub defs: Defs,
    pub networks: BTreeMap<Name, Network>,
    pub knowledge: BTreeMap<Name, KnowledgeSequence>,
    pub params: BTreeMap<Name, i64>,
}

impl Env {
    /// Adds a parsed model's declarations; later names shadow earlier ones.
    pub fn absorb(&mut self, m: &SourceModel) {
        self.atoms
            .extend(m.atoms.iter().map(|(k, v)| (k.clone(), *v)));
        self.chains.extend(m.chains.iter().cloned());
        self.defs
            .extend(m.defs.iter().map(|(k, v)| (k.clone(), v.clone())));
        self.networks.extend(m.networks.iter().cloned());
        self.knowledge.extend(m.knowledge.iter().cloned());
        self.params
            .extend(m.params.iter().map(|(k, v)| (k.clone(), *v)));
    }

    /// Atom kinds and chains as they occur in a network, for reading traces
    /// without a model file.
    pub fn of_network(net: &Network) -> Env {
        let mut terms = Vec::new();
        for n in &net.nodes {
            process_terms(&n.proc, &mut terms);
        }
        for d in net.defs.values() {
            process_terms(&d.body, &mut terms);
        }
        let mut env = Env::default();
        collect_atoms(terms.iter().copied(), &mut env.atoms, &mut env.chains);
        env
    }
}

/// One parsed source file. Networks own their complete definition table;
/// `locations` is diagnostic metadata and does not take part in equality.
#[derive(Clone, Debug, Default)]
pub struct SourceModel {
    pub imports: Vec<String>,
    pub params: BTreeMap<Name, i64>,
    pub atoms: BTreeMap<Name, AtomKind>,
    pub chains: BTreeSet<Name>,
    pub defs: Defs,
    pub networks: Vec<(Name, Network)>,
    pub knowledge: Vec<(Name, KnowledgeSequence)>,
    pub queries: Vec<Query>,
    pub locations: BTreeMap<String, Pos>,
}

impl PartialEq for SourceModel {
    fn eq(&self, o: &SourceModel) -> bool {
        self.imports == o.imports
            && self.params == o.params
            && self.atoms == o.atoms
            && self.chains == o.chains
            && self.defs == o.defs
            && self.networks == o.networks
            && self.knowledge == o.knowledge
            && self.queries == o.queries
    }
}

impl SourceModel {
    pub fn network(&self, n: &str) -> Option<&Network> {
        self.networks
            .iter()
            .find(|(k, _)| &**k == n)
            .map(|(_, v)| v)
    }

    pub fn knowledge_seq(&self, n: &str) -> Option<&KnowledgeSequence> {
        self.knowledge
            .iter()
            .find(|(k, _)| &**k == n)
            .map(|(_, v)| v)
    }

    /// Declares every atom and chain used by the model's networks and
    /// knowledge sequences.
    pub fn declare_used_atoms(&mut self) {
        let mut terms = Vec::new();
        for (_, net) in &self.networks {
            for n in &net.nodes {
                process_terms(&n.proc, &mut terms);
            }
            for d in net.defs.values() {
                process_terms(&d.body, &mut terms);
            }
        }
        for d in self.defs.values() {
            process_terms(&d.body, &mut terms);
        }
        for (_, k) in &self.knowledge {
            for s in &k.slots {
                terms.extend(s.generators.iter());
            }
        }
        collect_atoms(terms.iter().copied(), &mut self.atoms, &mut self.chains);
    }
}

fn process_terms<'a>(p: &'a Process, out: &mut Vec<&'a Term>) {
    match p {
        Process::Nil => {}
        Process::Bang(t, q) => {
            out.push(t);
            process_terms(q, out);
        }
        Process::Recv { body, timeout, .. } => {
            process_terms(body, out);
            process_terms(timeout, out);
        }
        Process::Sum { branches, timeout } => {
            branches.iter().for_each(|b| process_terms(b, out));
            process_terms(timeout, out);
        }
        Process::Sleep(q) => process_terms(q, out),
        Process::Match {
            left,
            right,
            then,
            els,
        } => {
            out.push(left);
            out.push(right);
            process_terms(then, out);
            process_terms(els, out);
        }
        Process::Deduce {
            premises,
            then,
            els,
            ..
        } => {
            out.extend(premises.iter());
            process_terms(then, out);
            process_terms(els, out);
        }
        Process::Call { args, .. } => out.extend(args.iter()),
    }
}

fn collect_atoms<'a>(
    terms: impl Iterator<Item = &'a Term>,
    atoms: &mut BTreeMap<Name, AtomKind>,
    chains: &mut BTreeSet<Name>,
) {
    fn walk(t: &Term, atoms: &mut BTreeMap<Name, AtomKind>, chains: &mut BTreeSet<Name>) {
        match t {
            Term::Atom(n, k) if !is_number(n) => {
                atoms.insert(n.clone(), *k);
            }
            Term::ChainKey(c, _) => {
                chains.insert(c.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| walk(a, atoms, chains)),
            _ => {}
        }
    }
    for t in terms {
        walk(t, atoms, chains);
    }
}

fn is_number(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

// Lexing.

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    Sym(char),
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, DslError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let bump = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump(c, &mut line, &mut col);
            i += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '_' | '\'' | '-'))
            {
                i += 1;
                col += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
                col += 1;
            }
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err(DslError {
                    pos,
                    msg: "identifiers must not start with a digit".into(),
                });
            }
            out.push((Tok::Num(chars[start..i].iter().collect()), pos));
        } else if c == '"' {
            i += 1;
            col += 1;
            let start = i;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(DslError {
                    pos,
                    msg: "unterminated string".into(),
                });
            }
            out.push((Tok::Str(chars[start..i].iter().collect()), pos));
            i += 1;
            col += 1;
        } else if "(){}[],.=|:+>".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
            col += 1;
        } else {
            return Err(DslError {
                pos,
                msg: format!("unexpected character {c:?}"),
            });
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

const PROCESS_KEYWORDS: [&str; 9] = [
    "nil", "out", "in", "choice", "sleep", "if", "let", "tau", "timeout",
];

// Parsing.

struct Parser<'e> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    env: &'e Env,
    atoms: BTreeMap<Name, AtomKind>,
    chains: BTreeSet<Name>,
    scope: Vec<Name>,
    /// Calls seen in the item being parsed: (callee, arity, position).
    calls: Vec<(Name, usize, Pos)>,
}

type PResult<T> = Result<T, DslError>;

impl<'e> Parser<'e> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(DslError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(s) => format!("number {s}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn sym(&mut self, c: char) -> PResult<()> {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            self.err(format!(
                "expected '{c}', found {}",
                Self::describe(self.peek())
            ))
        }
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.next();
            Ok(())
        } else {
            self.err(format!(
                "expected '{k}', found {}",
                Self::describe(self.peek())
            ))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => self.err(format!(
                "expected an identifier, found {}",
                Self::describe(&t)
            )),
        }
    }

    fn number(&mut self) -> PResult<usize> {
        match self.peek().clone() {
            Tok::Num(s) => {
                let p = self.pos();
                self.next();
                s.parse().map_err(|_| DslError {
                    pos: p,
                    msg: "number out of range".into(),
                })
            }
            t => self.err(format!("expected a number, found {}", Self::describe(&t))),
        }
    }

    fn atom_kind(&self, n: &str) -> Option<AtomKind> {
        self.atoms.get(n).or_else(|| self.env.atoms.get(n)).copied()
    }

    fn is_chain(&self, c: &str) -> bool {
        self.chains.contains(c) || self.env.chains.contains(c)
    }

    fn term(&mut self) -> PResult<Term> {
        let pos = self.pos();
        match self.next().0 {
            Tok::Num(s) => Ok(Term::other(&s)),
            Tok::Ident(s) => {
                if self.is_sym('(') {
                    let Some(c) = Ctor::from_name(&s) else {
                        return Err(DslError {
                            pos,
                            msg: format!("unknown constructor {s}"),
                        });
                    };
                    let args = self.term_list('(', ')')?;
                    if args.len() != c.arity() {
                        return Err(DslError {
                            pos,
                            msg: format!("{s} takes {} arguments, got {}", c.arity(), args.len()),
                        });
                    }
                    return Ok(Term::app(c, args));
                }
                self.resolve(&s, pos)
            }
            t => Err(DslError {
                pos,
                msg: format!("expected a term, found {}", Self::describe(&t)),
            }),
        }
    }

    fn resolve(&self, s: &str, pos: Pos) -> PResult<Term> {
        if self.scope.iter().any(|v| &**v == s) {
            return Ok(Term::var(s));
        }
        if let Some(k) = self.atom_kind(s) {
            return Ok(Term::atom(s, k));
        }
        if let Some((c, i)) = s.rsplit_once('_') {
            if self.is_chain(c) && is_number(i) {
                if let Ok(i) = i.parse() {
                    return Ok(Term::chain(c, i));
                }
            }
        }
        Err(DslError {
            pos,
            msg: format!("unresolved identifier {s}"),
        })
    }

    fn term_list(&mut self, open: char, close: char) -> PResult<Vec<Term>> {
        self.sym(open)?;
        let mut v = Vec::new();
        if self.is_sym(close) {
            self.next();
            return Ok(v);
        }
        loop {
            v.push(self.term()?);
            if self.is_sym(',') {
                self.next();
            } else {
                self.sym(close)?;
                return Ok(v);
            }
        }
    }

    fn name_set(&mut self) -> PResult<BTreeSet<Name>> {
        self.sym('{')?;
        let mut v = BTreeSet::new();
        if self.is_sym('}') {
            self.next();
            return Ok(v);
        }
        loop {
            v.insert(name(&self.ident()?));
            if self.is_sym(',') {
                self.next();
            } else {
                self.sym('}')?;
                return Ok(v);
            }
        }
    }

    fn binder(&mut self) -> PResult<Name> {
        let pos = self.pos();
        let x = self.ident()?;
        if self.atom_kind(&x).is_some() {
            return Err(DslError {
                pos,
                msg: format!("binder {x} shadows a declared atom"),
            });
        }
        Ok(name(&x))
    }

    fn with_binder<T>(&mut self, x: Name, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.scope.push(x);
        let r = f(self);
        self.scope.pop();
        r
    }

    fn process(&mut self) -> PResult<Process> {
        let pos = self.pos();
        let head = match self.peek().clone() {
            Tok::Ident(s) => s,
            t => return self.err(format!("expected a process, found {}", Self::describe(&t))),
        };
        self.next();
        match head.as_str() {
            "nil" => Ok(Process::Nil),
            "out" => {
                self.sym('(')?;
                let t = self.term()?;
                self.sym(')')?;
                self.sym('.')?;
                Ok(Process::bang(t, self.process()?))
            }
            "in" => {
                self.sym('(')?;
                let x = self.binder()?;
                self.sym(')')?;
                self.sym('.')?;
                let body = self.with_binder(x.clone(), |p| p.process())?;
                self.kw("timeout")?;
                let to = self.process()?;
                Ok(Process::recv(&x, body, to))
            }
            "sleep" => {
                self.sym('.')?;
                Ok(Process::sleep(self.process()?))
            }
            "choice" => {
                self.sym('{')?;
                let mut branches = Vec::new();
                loop {
                    self.kw("tau")?;
                    self.sym('.')?;
                    branches.push(self.process()?);
                    if self.is_sym('|') {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.sym('}')?;
                self.kw("timeout")?;
                Ok(Process::sum(branches, self.process()?))
            }
            "if" => {
                let l = self.term()?;
                self.sym('=')?;
                let r = self.term()?;
                self.kw("then")?;
                let then = self.process()?;
                self.kw("else")?;
                Ok(Process::matching(l, r, then, self.process()?))
            }
            "let" => {
                let x = self.binder()?;
                self.sym('=')?;
                let rpos = self.pos();
                let rule_name = self.ident()?;
                let rule = match rule_name.as_str() {
                    "fst" => Rule::Fst,
                    "snd" => Rule::Snd,
                    other => match Ctor::from_name(other) {
                        Some(c) => Rule::Ctor(c),
                        None => {
                            return Err(DslError {
                                pos: rpos,
                                msg: format!("unknown rule {other}"),
                            })
                        }
                    },
                };
                let premises = self.term_list('(', ')')?;
                let want = match rule {
                    Rule::Fst | Rule::Snd => 1,
                    Rule::Ctor(c) => c.arity(),
                };
                if premises.len() != want {
                    return Err(DslError {
                        pos: rpos,
                        msg: format!(
                            "rule {rule_name} takes {want} premises, got {}",
                            premises.len()
                        ),
                    });
                }
                self.kw("in")?;
                let then = self.with_binder(x.clone(), |p| p.process())?;
                self.kw("else")?;
                let els = self.process()?;
                Ok(Process::deduce(premises, rule, &x, then, els))
            }
            kw if PROCESS_KEYWORDS.contains(&kw) => Err(DslError {
                pos,
                msg: format!("'{kw}' cannot start a process"),
            }),
            _ => {
                let args = if self.is_sym('(') {
                    self.term_list('(', ')')?
                } else {
                    Vec::new()
                };
                self.calls.push((name(&head), args.len(), pos));
                Ok(Process::call(&head, args))
            }
        }
    }

    fn def(&mut self) -> PResult<(ProcessDef, Pos)> {
        let pos = self.pos();
        let h = self.ident()?;
        if PROCESS_KEYWORDS.contains(&h.as_str()) {
            return Err(DslError {
                pos,
                msg: format!("'{h}' is reserved"),
            });
        }
        let mut params = Vec::new();
        if self.is_sym('(') {
            self.next();
            if !self.is_sym(')') {
                loop {
                    let p = self.binder()?;
                    if params.contains(&p) {
                        return self.err(format!("parameter {p} repeated"));
                    }
                    params.push(p);
                    if self.is_sym(',') {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.sym(')')?;
        }
        self.sym('=')?;
        self.scope = params.clone();
        let body = self.process();
        self.scope.clear();
        Ok((
            ProcessDef {
                name: name(&h),
                params,
                body: body?,
            },
            pos,
        ))
    }
}

fn check_calls(calls: &[(Name, usize, Pos)], table: &Defs) -> PResult<()> {
    for (h, n, pos) in calls {
        match table.get(h) {
            None => {
                return Err(DslError {
                    pos: *pos,
                    msg: format!("unresolved process {h}"),
                })
            }
            Some(d) if d.params.len() != *n => {
                return Err(DslError {
                    pos: *pos,
                    msg: format!("{h} takes {} arguments, got {n}", d.params.len()),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

struct RawNetwork {
    name: Name,
    pos: Pos,
    defs: Defs,
    nodes: Vec<Node>,
    calls: Vec<(Name, usize, Pos)>,
}

pub fn parse(text: &str) -> Result<SourceModel, DslError> {
    parse_with(text, &Env::default())
}

/// Parses one file against the names its imports provide.
pub fn parse_with(text: &str, env: &Env) -> Result<SourceModel, DslError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        env,
        atoms: BTreeMap::new(),
        chains: BTreeSet::new(),
        scope: Vec::new(),
        calls: Vec::new(),
    };
    let mut m = SourceModel::default();
    let mut top_calls = Vec::new();
    let mut raw_nets: Vec<RawNetwork> = Vec::new();
    let mut raw_queries: Vec<(Query, Pos)> = Vec::new();
    loop {
        let pos = p.pos();
        let kw = match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(s) => s,
            t => {
                return p.err(format!(
                    "expected a declaration, found {}",
                    Parser::describe(&t)
                ))
            }
        };
        p.next();
        match kw.as_str() {
            "import" => match p.next() {
                (Tok::Str(s), _) => m.imports.push(s),
                (_, pos) => {
                    return Err(DslError {
                        pos,
                        msg: "import expects a quoted path".into(),
                    })
                }
            },
            "param" => {
                let n = p.ident()?;
                p.sym('=')?;
                let v = p.number()?;
                m.params.insert(name(&n), v as i64);
            }
            "atoms" => {
                p.sym('{')?;
                while !p.is_sym('}') {
                    let kpos = p.pos();
                    let k = p.ident()?;
                    let Some(kind) = AtomKind::from_keyword(&k) else {
                        return Err(DslError {
                            pos: kpos,
                            msg: format!("unknown atom kind {k}"),
                        });
                    };
                    loop {
                        let apos = p.pos();
                        let a = p.ident()?;
                        if let Some(prev) = p.atom_kind(&a) {
                            if prev != kind {
                                return Err(DslError {
                                    pos: apos,
                                    msg: format!("atom {a} already declared as {}", prev.keyword()),
                                });
                            }
                        }
                        p.atoms.insert(name(&a), kind);
                        if p.is_sym(',') {
                            p.next();
                        } else {
                            break;
                        }
                    }
                }
                p.sym('}')?;
            }
            "chains" => {
                for c in p.name_set()? {
                    p.chains.insert(c);
                }
            }
            "def" => {
                p.calls.clear();
                let (d, dpos) = p.def()?;
                if m.defs.contains_key(&d.name) {
                    return Err(DslError {
                        pos: dpos,
                        msg: format!("{} defined twice", d.name),
                    });
                }
                top_calls.append(&mut p.calls);
                m.locations.insert(format!("def {}", d.name), dpos);
                m.defs.insert(d.name.clone(), Arc::new(d));
            }
            "network" => {
                let n = name(&p.ident()?);
                p.sym('{')?;
                p.calls.clear();
                let mut raw = RawNetwork {
                    name: n,
                    pos,
                    defs: Defs::new(),
                    nodes: Vec::new(),
                    calls: Vec::new(),
                };
                while !p.is_sym('}') {
                    let ipos = p.pos();
                    let k = p.ident()?;
                    match k.as_str() {
                        "def" => {
                            let (d, dpos) = p.def()?;
                            if raw.defs.contains_key(&d.name) {
                                return Err(DslError {
                                    pos: dpos,
                                    msg: format!("{} defined twice", d.name),
                                });
                            }
                            raw.defs.insert(d.name.clone(), Arc::new(d));
                        }
                        "node" => {
                            let nn = p.ident()?;
                            p.sym('[')?;
                            let proc = p.process()?;
                            p.sym(']')?;
                            p.kw("nbr")?;
                            let nb = p.name_set()?;
                            if raw.nodes.iter().any(|x| *x.name == *nn) {
                                return Err(DslError {
                                    pos: ipos,
                                    msg: format!("node {nn} declared twice"),
                                });
                            }
                            raw.nodes.push(Node {
                                name: name(&nn),
                                proc,
                                neighbors: nb,
                            });
                        }
                        other => {
                            return Err(DslError {
                                pos: ipos,
                                msg: format!("expected 'def' or 'node', found '{other}'"),
                            })
                        }
                    }
                }
                p.sym('}')?;
                raw.calls = std::mem::take(&mut p.calls);
                raw_nets.push(raw);
            }
            "knowledge" => {
                let n = name(&p.ident()?);
                let mut extension = Extension::Constant;
                if p.is_kw("recorded") {
                    p.next();
                    extension = Extension::Recorded;
                } else if p.is_kw("constant") {
                    p.next();
                }
                p.sym('{')?;
                let mut slots: Vec<Knowledge> = Vec::new();
                while !p.is_sym('}') {
                    p.kw("slot")?;
                    let spos = p.pos();
                    let j = p.number()?;
                    if j != slots.len() {
                        return Err(DslError {
                            pos: spos,
                            msg: format!("expected slot {}", slots.len()),
                        });
                    }
                    let add = if p.is_sym('+') {
                        p.next();
                        if j == 0 {
                            return p.err("slot 0 cannot extend a previous slot");
                        }
                        true
                    } else {
                        false
                    };
                    p.sym('=')?;
                    let ts = p.term_list('{', '}')?;
                    let mut k = if add {
                        slots[j - 1].clone()
                    } else {
                        Knowledge::default()
                    };
                    k.generators.extend(ts);
                    slots.push(k);
                }
                p.sym('}')?;
                if slots.is_empty() {
                    slots.push(Knowledge::default());
                }
                m.locations.insert(format!("knowledge {n}"), pos);
                m.knowledge
                    .push((n, KnowledgeSequence { slots, extension }));
            }
            "check" => {
                let q = parse_query(&mut p)?;
                raw_queries.push((q, pos));
            }
            other => {
                return Err(DslError {
                    pos,
                    msg: format!("unknown declaration '{other}'"),
                })
            }
        }
    }
    m.atoms = p.atoms;
    m.chains = p.chains;

    let mut visible: Defs = env.defs.clone();
    visible.extend(m.defs.iter().map(|(k, v)| (k.clone(), v.clone())));
    check_calls(&top_calls, &visible)?;
    let mut net_names: BTreeSet<Name> = BTreeSet::new();
    for raw in raw_nets {
        if !net_names.insert(raw.name.clone()) {
            return Err(DslError {
                pos: raw.pos,
                msg: format!("network {} declared twice", raw.name),
            });
        }
        let mut table = visible.clone();
        table.extend(raw.defs);
        check_calls(&raw.calls, &table)?;
        m.locations.insert(format!("network {}", raw.name), raw.pos);
        m.networks
            .push((raw.name, Network::new(raw.nodes, Arc::new(table))));
    }
    for (q, pos) in raw_queries {
        let known_net = |n: &Name| net_names.contains(n) || env.networks.contains_key(n);
        let known_phi =
            |n: &Name| m.knowledge.iter().any(|(k, _)| k == n) || env.knowledge.contains_key(n);
        let missing = match &q {
            Query::Tgndc(t) => [&t.system, &t.spec]
                .into_iter()
                .find(|n| !known_net(n))
                .map(|n| format!("unknown network {n}"))
                .or_else(|| {
                    (!known_phi(&t.phi)).then(|| format!("unknown knowledge sequence {}", t.phi))
                }),
            Query::Sim { imp, spec, .. } => [imp, spec]
                .into_iter()
                .find(|n| !known_net(n))
                .map(|n| format!("unknown network {n}")),
            Query::Explore { net, .. } => {
                (!known_net(net)).then(|| format!("unknown network {net}"))
            }
            Query::Attack { .. } => None,
        };
        if let Some(msg) = missing {
            return Err(DslError { pos, msg });
        }
        m.queries.push(q);
    }
    Ok(m)
}

fn parse_bounds(p: &mut Parser) -> PResult<(Option<usize>, Option<usize>, bool)> {
    let (mut bound, mut depth, mut comp) = (None, None, false);
    loop {
        if p.is_kw("bound") {
            p.next();
            bound = Some(p.number()?);
        } else if p.is_kw("depth") {
            p.next();
            depth = Some(p.number()?);
        } else if p.is_kw("compositional") {
            p.next();
            comp = true;
        } else {
            return Ok((bound, depth, comp));
        }
    }
}

fn parse_query(p: &mut Parser) -> PResult<Query> {
    let pos = p.pos();
    let kind = p.ident()?;
    match kind.as_str() {
        "tgndc" => {
            let system = name(&p.ident()?);
            p.kw("spec")?;
            let spec = name(&p.ident()?);
            p.kw("observe")?;
            let observe = p.name_set()?;
            p.kw("wire")?;
            p.sym('{')?;
            let mut wire = Vec::new();
            while !p.is_sym('}') {
                let a = name(&p.ident()?);
                p.sym(':')?;
                let b = name(&p.ident()?);
                wire.push((a, b));
                if p.is_sym(',') {
                    p.next();
                } else {
                    break;
                }
            }
            p.sym('}')?;
            p.kw("phi")?;
            let phi = name(&p.ident()?);
            let (bound, depth, compositional) = parse_bounds(p)?;
            Ok(Query::Tgndc(TgndcQuerySpec {
                system,
                spec,
                observe,
                wire,
                phi,
                bound,
                depth,
                compositional,
            }))
        }
        "sim" => {
            let imp = name(&p.ident()?);
            p.kw("spec")?;
            let spec = name(&p.ident()?);
            let (bound, _, _) = parse_bounds(p)?;
            Ok(Query::Sim { imp, spec, bound })
        }
        "explore" => {
            let net = name(&p.ident()?);
            let (bound, _, _) = parse_bounds(p)?;
            Ok(Query::Explore { net, bound })
        }
        "attack" => Ok(Query::Attack {
            protocol: name(&p.ident()?),
        }),
        other => Err(DslError {
            pos,
            msg: format!("unknown query kind '{other}'"),
        }),
    }
}

/// Loads a file and its imports (paths relative to the importing file).
/// Returns the file's own model and the environment it sees, its own
/// declarations included.
pub fn load(path: &Path) -> Result<(SourceModel, Env), LoadError> {
    let mut env = Env::default();
    let mut stack = Vec::new();
    let m = load_into(path, &mut env, &mut stack)?;
    env.absorb(&m);
    Ok((m, env))
}

fn load_into(
    path: &Path,
    env: &mut Env,
    stack: &mut Vec<PathBuf>,
) -> Result<SourceModel, LoadError> {
    let shown = path.display().to_string();
    let canon = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    if stack.contains(&canon) {
        return Err(LoadError::Cycle { path: shown });
    }
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: shown.clone(),
        source: e,
    })?;
    // Imports are only known after a first look; parse them against an
    // empty environment just to list them.
    let imports = scan_imports(&text).map_err(|e| LoadError::Parse {
        path: shown.clone(),
        source: e,
    })?;
    stack.push(canon);
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for imp in imports {
        let sub = load_into(&dir.join(&imp), env, stack)?;
        env.absorb(&sub);
    }
    stack.pop();
    parse_with(&text, env).map_err(|e| LoadError::Parse {
        path: shown,
        source: e,
    })
}

fn scan_imports(text: &str) -> Result<Vec<String>, DslError> {
    let toks = lex(text)?;
    Ok(toks
        .windows(2)
        .filter_map(|w| match (&w[0].0, &w[1].0) {
            (Tok::Ident(k), Tok::Str(s)) if k == "import" => Some(s.clone()),
            _ => None,
        })
        .collect())
}

// Emission.

const WIDTH: usize = 96;

fn rule_text(r: Rule) -> &'static str {
    match r {
        Rule::Fst => "fst",
        Rule::Snd => "snd",
        Rule::Ctor(c) => c.as_str(),
    }
}

fn terms_text(ts: &[Term]) -> String {
    ts.iter().map(Term::to_string).collect::<Vec<_>>().join(",")
}

/// Single-line rendering of a process.
pub fn flat(p: &Process) -> String {
    match p {
        Process::Nil => "nil".into(),
        Process::Bang(t, q) => format!("out({t}).{}", flat(q)),
        Process::Recv {
            binder,
            body,
            timeout,
        } => {
            format!("in({binder}).{} timeout {}", flat(body), flat(timeout))
        }
        Process::Sum { branches, timeout } => {
            let bs: Vec<String> = branches
                .iter()
                .map(|b| format!("tau.{}", flat(b)))
                .collect();
            format!("choice {{ {} }} timeout {}", bs.join(" | "), flat(timeout))
        }
        Process::Sleep(q) => format!("sleep.{}", flat(q)),
        Process::Match {
            left,
            right,
            then,
            els,
        } => format!("if {left} = {right} then {} else {}", flat(then), flat(els)),
        Process::Deduce {
            premises,
            rule,
            binder,
            then,
            els,
        } => format!(
            "let {binder} = {}({}) in {} else {}",
            rule_text(*rule),
            terms_text(premises),
            flat(then),
            flat(els)
        ),
        Process::Call { name, args } => {
            if args.is_empty() {
                name.to_string()
            } else {
                format!("{name}({})", terms_text(args))
            }
        }
    }
}

/// Multi-line rendering; the first line is not indented, later lines are
/// indented relative to `ind`.
fn pretty(p: &Process, ind: usize) -> String {
    let f = flat(p);
    if ind + f.len() <= WIDTH {
        return f;
    }
    let pad = " ".repeat(ind);
    let pad2 = " ".repeat(ind + 2);
    match p {
        Process::Bang(t, q) => format!("out({t}).\n{pad}{}", pretty(q, ind)),
        Process::Sleep(q) => format!("sleep.{}", pretty(q, ind)),
        Process::Recv {
            binder,
            body,
            timeout,
        } => format!(
            "in({binder}).\n{pad2}{}\n{pad}timeout {}",
            pretty(body, ind + 2),
            pretty(timeout, ind)
        ),
        Process::Sum { branches, timeout } => {
            let mut s = String::from("choice {\n");
            for (i, b) in branches.iter().enumerate() {
                let sep = if i == 0 { "  " } else { "| " };
                let _ = writeln!(s, "{pad}{sep}tau.{}", pretty(b, ind + 2));
            }
            let _ = write!(s, "{pad}}} timeout {}", pretty(timeout, ind));
            s
        }
        Process::Match {
            left,
            right,
            then,
            els,
        } => format!(
            "if {left} = {right} then\n{pad2}{}\n{pad}else {}",
            pretty(then, ind + 2),
            pretty(els, ind)
        ),
        Process::Deduce {
            premises,
            rule,
            binder,
            then,
            els,
        } => format!(
            "let {binder} = {}({}) in\n{pad2}{}\n{pad}else {}",
            rule_text(*rule),
            terms_text(premises),
            pretty(then, ind + 2),
            pretty(els, ind)
        ),
        Process::Nil | Process::Call { .. } => f,
    }
}

fn emit_def(out: &mut String, d: &ProcessDef, ind: usize) {
    let pad = " ".repeat(ind);
    let head = if d.params.is_empty() {
        d.name.to_string()
    } else {
        let ps: Vec<&str> = d.params.iter().map(|p| &**p).collect();
        format!("{}({})", d.name, ps.join(","))
    };
    let one = format!("{pad}def {head} = {}", flat(&d.body));
    if one.len() <= WIDTH {
        let _ = writeln!(out, "{one}");
    } else {
        let _ = writeln!(
            out,
            "{pad}def {head} =\n{pad}  {}",
            pretty(&d.body, ind + 2)
        );
    }
}

fn set_text(s: &BTreeSet<Name>) -> String {
    let v: Vec<&str> = s.iter().map(|x| &**x).collect();
    format!("{{{}}}", v.join(","))
}

fn sorted_terms<'a>(it: impl Iterator<Item = &'a Term>) -> String {
    let mut v: Vec<Term> = it.cloned().collect();
    crate::messages::sort_canonical(&mut v);
    format!(
        "{{ {} }}",
        v.iter().map(Term::to_string).collect::<Vec<_>>().join(", ")
    )
}

fn bounds_text(bound: Option<usize>, depth: Option<usize>, comp: bool) -> String {
    let mut s = String::new();
    if let Some(b) = bound {
        let _ = write!(s, " bound {b}");
    }
    if let Some(d) = depth {
        let _ = write!(s, " depth {d}");
    }
    if comp {
        s.push_str(" compositional");
    }
    s
}

pub fn emit_query(q: &Query) -> String {
    match q {
        Query::Tgndc(t) => {
            let wire: Vec<String> = t.wire.iter().map(|(a, b)| format!("{a}: {b}")).collect();
            format!(
                "check tgndc {} spec {} observe {} wire {{{}}} phi {}{}",
                t.system,
                t.spec,
                set_text(&t.observe),
                wire.join(", "),
                t.phi,
                bounds_text(t.bound, t.depth, t.compositional)
            )
        }
        Query::Sim { imp, spec, bound } => {
            format!(
                "check sim {imp} spec {spec}{}",
                bounds_text(*bound, None, false)
            )
        }
        Query::Explore { net, bound } => {
            format!("check explore {net}{}", bounds_text(*bound, None, false))
        }
        Query::Attack { protocol } => format!("check attack {protocol}"),
    }
}

/// Canonical text for a model. Definitions inherited from `env` or from the
/// model's top level are not repeated inside network blocks.
pub fn emit_with(m: &SourceModel, env: &Env) -> String {
    let mut out = String::new();
    for i in &m.imports {
        let _ = writeln!(out, "import \"{i}\"");
    }
    for (k, v) in &m.params {
        let _ = writeln!(out, "param {k} = {v}");
    }
    if !m.atoms.is_empty() {
        gap(&mut out);
        out.push_str("atoms {\n");
        for kind in [
            AtomKind::Node,
            AtomKind::Tag,
            AtomKind::Nonce,
            AtomKind::BaseKey,
            AtomKind::Other,
        ] {
            let v: Vec<&str> = m
                .atoms
                .iter()
                .filter(|(_, k)| **k == kind)
                .map(|(n, _)| &**n)
                .collect();
            if !v.is_empty() {
                let _ = writeln!(out, "  {} {}", kind.keyword(), v.join(", "));
            }
        }
        out.push_str("}\n");
    }
    if !m.chains.is_empty() {
        let _ = writeln!(out, "chains {}", set_text(&m.chains));
    }
    let mut visible = env.defs.clone();
    if !m.defs.is_empty() {
        gap(&mut out);
    }
    for d in m.defs.values() {
        emit_def(&mut out, d, 0);
        visible.insert(d.name.clone(), d.clone());
    }
    for (n, net) in &m.networks {
        gap(&mut out);
        let _ = writeln!(out, "network {n} {{");
        for d in net.defs.values() {
            if visible.get(&d.name) != Some(d) {
                emit_def(&mut out, d, 2);
            }
        }
        for node in &net.nodes {
            let one = format!(
                "  node {} [ {} ] nbr {}",
                node.name,
                flat(&node.proc),
                set_text(&node.neighbors)
            );
            if one.len() <= WIDTH {
                let _ = writeln!(out, "{one}");
            } else {
                let _ = writeln!(
                    out,
                    "  node {} [\n    {}\n  ] nbr {}",
                    node.name,
                    pretty(&node.proc, 4),
                    set_text(&node.neighbors)
                );
            }
        }
        out.push_str("}\n");
    }
    for (n, k) in &m.knowledge {
        gap(&mut out);
        let ext = match k.extension {
            Extension::Constant => "",
            Extension::Recorded => " recorded",
        };
        let _ = writeln!(out, "knowledge {n}{ext} {{");
        for (j, s) in k.slots.iter().enumerate() {
            if j > 0 && k.slots[j - 1].is_subset(s) {
                let prev = &k.slots[j - 1].generators;
                let _ = writeln!(
                    out,
                    "  slot {j} += {}",
                    sorted_terms(s.generators.iter().filter(|t| !prev.contains(*t)))
                );
            } else {
                let _ = writeln!(out, "  slot {j} = {}", sorted_terms(s.generators.iter()));
            }
        }
        out.push_str("}\n");
    }
    if !m.queries.is_empty() {
        gap(&mut out);
    }
    for q in &m.queries {
        let _ = writeln!(out, "{}", emit_query(q));
    }
    out
}

fn gap(out: &mut String) {
    if !out.is_empty() && !out.ends_with("\n\n") {
        out.push('\n');
    }
}

pub fn emit(m: &SourceModel) -> String {
    emit_with(m, &Env::default())
}

// Bundled instances and query resolution.

/// A bundled protocol instance as a standalone model: network `system`,
/// and when the instance has a claim, network `abstraction` and knowledge
/// `phi`.
pub fn instance_model(inst: &ProtocolInstance) -> SourceModel {
    let mut m = SourceModel::default();
    m.params.insert(name("n"), inst.params.n as i64);
    m.params.insert(name("s"), inst.params.s as i64);
    m.params.insert(name("h"), inst.params.h as i64);
    m.networks.push((name("system"), inst.system.clone()));
    if let Some(a) = &inst.abstraction {
        m.networks.push((name("abstraction"), a.clone()));
        m.knowledge.push((name("phi"), inst.knowledge.clone()));
    }
    m.declare_used_atoms();
    m
}

/// Query file for an instance whose model lives at `import`.
pub fn instance_queries(inst: &ProtocolInstance, import: &str, bounds: &Bounds) -> SourceModel {
    let mut m = SourceModel {
        imports: vec![import.to_string()],
        ..SourceModel::default()
    };
    if inst.abstraction.is_some() {
        m.queries.push(Query::Tgndc(TgndcQuerySpec {
            system: name("system"),
            spec: name("abstraction"),
            observe: inst.wiring.observed.clone(),
            wire: inst
                .wiring
                .protocol
                .iter()
                .cloned()
                .zip(inst.wiring.attackers.iter().cloned())
                .collect(),
            phi: name("phi"),
            bound: Some(bounds.max_sigma),
            depth: Some(bounds.candidate_depth),
            compositional: inst.system.nodes.len() > 2,
        }));
    } else {
        m.queries.push(Query::Explore {
            net: name("system"),
            bound: Some(bounds.max_sigma),
        });
    }
    m
}

pub fn emit_instance(inst: &ProtocolInstance) -> String {
    emit(&instance_model(inst))
}

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("unknown network {0}")]
    Network(Name),
    #[error("unknown knowledge sequence {0}")]
    Knowledge(Name),
    #[error(transparent)]
    Tgndc(#[from] TgndcError),
}

impl Env {
    pub fn network(&self, n: &str) -> Result<&Network, ResolveError> {
        self.networks
            .get(n)
            .ok_or_else(|| ResolveError::Network(name(n)))
    }

    /// Wiring for a tgndc query against its system network.
    pub fn wiring(q: &TgndcQuerySpec) -> AttackerWiring {
        AttackerWiring {
            protocol: q.wire.iter().map(|w| w.0.clone()).collect(),
            attackers: q.wire.iter().map(|w| w.1.clone()).collect(),
            observed: q.observe.clone(),
        }
    }

    /// Builds the checkable query; recorded knowledge is completed against
    /// the bounds.
    pub fn tgndc_query(
        &self,
        q: &TgndcQuerySpec,
        bounds: &Bounds,
    ) -> Result<TgndcQuery, ResolveError> {
        let system = self.network(&q.system)?.clone();
        let spec = self.network(&q.spec)?.clone();
        let seed = self
            .knowledge
            .get(&q.phi)
            .ok_or_else(|| ResolveError::Knowledge(q.phi.clone()))?;
        let wiring = Env::wiring(q);
        let phi = match seed.extension {
            Extension::Constant => seed.clone(),
            Extension::Recorded => {
                record_sequence(&system, &wiring, seed, bounds, 2 * bounds.max_sigma + 4)?
            }
        };
        Ok(TgndcQuery {
            name: format!("{} against {}", q.system, q.spec),
            system,
            spec,
            wiring,
            phi,
            bounds: bounds.clone(),
        })
    }
}

// Traces.

pub fn emit_trace(t: &Trace) -> String {
    t.render()
}

/// Reads a trace, one label per line, in the format `Trace::render` writes.
pub fn parse_trace(text: &str, env: &Env) -> Result<Trace, DslError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        env,
        atoms: BTreeMap::new(),
        chains: BTreeSet::new(),
        scope: Vec::new(),
        calls: Vec::new(),
    };
    let mut steps = Vec::new();
    while *p.peek() != Tok::Eof {
        let pos = p.pos();
        let k = p.ident()?;
        let label = match k.as_str() {
            "tau" => Label::Tau,
            "sigma" => Label::Sigma,
            "out" => {
                let payload = p.term()?;
                p.sym('>')?;
                Label::ObsBcast {
                    payload,
                    receivers: p.name_set()?,
                }
            }
            "in" => {
                let sender = name(&p.ident()?);
                Label::Input {
                    sender,
                    payload: p.term()?,
                }
            }
            "bcast" => {
                let sender = name(&p.ident()?);
                let payload = p.term()?;
                p.sym('>')?;
                Label::Bcast {
                    sender,
                    payload,
                    receivers: p.name_set()?,
                }
            }
            other => {
                return Err(DslError {
                    pos,
                    msg: format!("unknown label '{other}'"),
                })
            }
        };
        steps.push(label);
    }
    Ok(Trace::new(steps))
}

/// Parses a single term against `env`.
pub fn parse_term(text: &str, env: &Env) -> Result<Term, DslError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        env,
        atoms: BTreeMap::new(),
        chains: BTreeSet::new(),
        scope: Vec::new(),
        calls: Vec::new(),
    };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return p.err("trailing input after term");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
atoms { node m, bs  tag req  nonce n0  key kBSm }
chains { kc }
def Tick = sleep.Tick
network boot {
  def A(np) = let n = prf(m,np) in out(pair(req,pair(m,n))).sleep.A(n) else nil
  node m [ A(n0) ] nbr {bs}
  node bs [ in(x).if x = kc_0 then Tick else sleep.Tick timeout Tick ] nbr {m}
}
knowledge phi { slot 0 = { n0 } slot 1 += { kc_0 } }
check explore boot bound 4
"#;

    #[test]
    fn small_model_parses_and_round_trips() {
        let m = parse(SMALL).unwrap();
        let net = m.network("boot").unwrap();
        assert_eq!(net.nodes.len(), 2);
        assert!(net.defs.contains_key("Tick") && net.defs.contains_key("A"));
        let k = m.knowledge_seq("phi").unwrap();
        assert_eq!(k.slots[1].generators.len(), 2);
        let text = emit(&m);
        let again = parse(&text).unwrap();
        assert_eq!(again, m);
        assert_eq!(emit(&again), text);
    }

    #[test]
    fn errors_carry_positions() {
        let e =
            parse("atoms { node m }\nnetwork n {\n  node m [ out(zz).nil ] nbr {}\n}").unwrap_err();
        assert_eq!(e.pos, Pos { line: 3, col: 16 });
        assert!(e.msg.contains("unresolved identifier zz"));
        let e = parse("def A(x) = B(x)\ndef B = nil").unwrap_err();
        assert!(e.msg.contains("takes 0 arguments"), "{e}");
        let e = parse("atoms { tag t }\ndef A = out(pair(t)).nil").unwrap_err();
        assert!(e.msg.contains("pair takes 2"), "{e}");
        let e = parse("def A = in(x).nil").unwrap_err();
        assert!(e.msg.contains("expected 'timeout'"), "{e}");
    }

    #[test]
    fn empty_network_block() {
        let m = parse("network zero { }").unwrap();
        assert_eq!(m.network("zero").unwrap().nodes.len(), 0);
    }

    #[test]
    fn let_dec_is_a_deduction() {
        let m =
            parse("atoms { key km }\ndef T(w) = let k = dec(km, w) in out(k).nil else sleep.nil")
                .unwrap();
        match &m.defs["T"].body {
            Process::Deduce { rule, .. } => assert_eq!(*rule, Rule::Ctor(Ctor::Dec)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn traces_round_trip() {
        let env = Env {
            atoms: [(name("req"), AtomKind::Tag), (name("m"), AtomKind::Node)]
                .into_iter()
                .collect(),
            ..Env::default()
        };
        let text = "out pair(req,m) > {obs}\nsigma\ntau\nin a m\nbcast m req > {a,b}\n";
        let t = parse_trace(text, &env).unwrap();
        assert_eq!(t.steps.len(), 5);
        assert_eq!(emit_trace(&t), text);
    }

    #[test]
    fn bundled_instances_round_trip() {
        use crate::protocols::{all_instances, Params};
        for p in [
            Params::default(),
            Params {
                h: 2,
                ..Params::default()
            },
        ] {
            for inst in all_instances(&p) {
                let m = instance_model(&inst);
                let text = emit(&m);
                let back = parse(&text)
                    .unwrap_or_else(|e| panic!("{} {}: {e}\n{text}", inst.name, inst.variant));
                assert_eq!(back, m, "{} {}", inst.name, inst.variant);
                assert_eq!(emit(&back), text);
                if let Some(g) = &inst.expected {
                    let env = Env::of_network(&inst.system);
                    assert_eq!(&parse_trace(&g.render(), &env).unwrap(), g);
                }
            }
        }
    }
}
