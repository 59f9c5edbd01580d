//! Symbolic messages, inference rules and bounded deduction.
//!
//! Terms are always kept in normal form: `dec(k, enc(k, m))` collapses to
//! `m` and `F` applied to a chain key of positive index steps the chain down.
//! Construct compound terms through [`Term::app`] (or the helpers) so that the
//! invariant holds without a separate pass.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Identifiers are shared, cheaply clonable strings.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Node,
    Tag,
    Nonce,
    BaseKey,
    Other,
}

impl AtomKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AtomKind::Node => "node",
            AtomKind::Tag => "tag",
            AtomKind::Nonce => "nonce",
            AtomKind::BaseKey => "key",
            AtomKind::Other => "other",
        }
    }

    pub fn from_keyword(s: &str) -> Option<AtomKind> {
        Some(match s {
            "node" => AtomKind::Node,
            "tag" => AtomKind::Tag,
            "nonce" => AtomKind::Nonce,
            "key" => AtomKind::BaseKey,
            "other" => AtomKind::Other,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ctor {
    Pair,
    Mac,
    Prf,
    Hash,
    Enc,
    Dec,
    F,
}

impl Ctor {
    pub const ALL: [Ctor; 7] = [
        Ctor::Pair,
        Ctor::Mac,
        Ctor::Prf,
        Ctor::Hash,
        Ctor::Enc,
        Ctor::Dec,
        Ctor::F,
    ];

    pub fn arity(self) -> usize {
        match self {
            Ctor::Hash | Ctor::F => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ctor::Pair => "pair",
            Ctor::Mac => "mac",
            Ctor::Prf => "prf",
            Ctor::Hash => "hash",
            Ctor::Enc => "enc",
            Ctor::Dec => "dec",
            Ctor::F => "F",
        }
    }

    pub fn from_name(s: &str) -> Option<Ctor> {
        Ctor::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// Constructors an attacker may apply freely. `dec` only ever yields a
    /// plaintext, so a `dec`-headed normal form is never derivable.
    pub fn is_composable(self) -> bool {
        self != Ctor::Dec
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Atom(Name, AtomKind),
    ChainKey(Name, u32),
    Var(Name),
    App(Ctor, Arc<[Term]>),
}

impl Term {
    pub fn atom(n: &str, kind: AtomKind) -> Term {
        Term::Atom(name(n), kind)
    }

    pub fn other(n: &str) -> Term {
        Term::atom(n, AtomKind::Other)
    }

    pub fn int(i: i64) -> Term {
        Term::other(&i.to_string())
    }

    pub fn var(n: &str) -> Term {
        Term::Var(name(n))
    }

    pub fn chain(c: &str, i: u32) -> Term {
        Term::ChainKey(name(c), i)
    }

    pub fn bot() -> Term {
        Term::other("bot")
    }

    /// Builds `c(args)` and normalizes the head, assuming `args` are normal.
    /// Panics on an arity mismatch; callers parsing untrusted input check first.
    pub fn app(c: Ctor, args: Vec<Term>) -> Term {
        assert_eq!(args.len(), c.arity(), "arity of {}", c.as_str());
        match (c, args.as_slice()) {
            (Ctor::Dec, [k, Term::App(Ctor::Enc, inner)]) if inner[0] == *k => inner[1].clone(),
            (Ctor::F, [Term::ChainKey(ch, i)]) if *i > 0 => Term::ChainKey(ch.clone(), i - 1),
            _ => Term::App(c, args.into()),
        }
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::app(Ctor::Pair, vec![a, b])
    }
    pub fn mac(k: Term, m: Term) -> Term {
        Term::app(Ctor::Mac, vec![k, m])
    }
    pub fn prf(a: Term, b: Term) -> Term {
        Term::app(Ctor::Prf, vec![a, b])
    }
    pub fn hash(a: Term) -> Term {
        Term::app(Ctor::Hash, vec![a])
    }
    pub fn enc(k: Term, m: Term) -> Term {
        Term::app(Ctor::Enc, vec![k, m])
    }
    pub fn dec(k: Term, c: Term) -> Term {
        Term::app(Ctor::Dec, vec![k, c])
    }
    pub fn f(a: Term) -> Term {
        Term::app(Ctor::F, vec![a])
    }

    /// `F` applied `k` times.
    pub fn f_iter(a: Term, k: u32) -> Term {
        (0..k).fold(a, |t, _| Term::f(t))
    }

    /// True iff the term contains no variable (a message).
    pub fn is_message(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_message),
            _ => true,
        }
    }

    /// Constructor nesting depth; leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.free_vars(out)),
            _ => {}
        }
    }

    pub fn has_var(&self, v: &str) -> bool {
        match self {
            Term::Var(x) => &**x == v,
            Term::App(_, args) => args.iter().any(|a| a.has_var(v)),
            _ => false,
        }
    }

    /// Replaces `v` by `w` and renormalizes along the way.
    pub fn subst(&self, v: &str, w: &Term) -> Term {
        match self {
            Term::Var(x) if &**x == v => w.clone(),
            Term::App(c, args) if self.has_var(v) => {
                Term::app(*c, args.iter().map(|a| a.subst(v, w)).collect())
            }
            _ => self.clone(),
        }
    }

    pub fn subst_map(&self, m: &BTreeMap<Name, Term>) -> Term {
        match self {
            Term::Var(x) => m.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::App(c, args) => Term::app(*c, args.iter().map(|a| a.subst_map(m)).collect()),
            _ => self.clone(),
        }
    }

    /// Collects every subterm, the term itself included.
    pub fn subterms(&self, out: &mut BTreeSet<Term>) {
        if out.insert(self.clone()) {
            if let Term::App(_, args) = self {
                args.iter().for_each(|a| a.subterms(out));
            }
        }
    }

    pub fn atoms(&self, out: &mut BTreeSet<Term>) {
        match self {
            Term::Atom(..) => {
                out.insert(self.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.atoms(out)),
            _ => {}
        }
    }
}

/// Normal form of an arbitrary term built without the smart constructor.
pub fn normalize(t: &Term) -> Term {
    match t {
        Term::App(c, args) => Term::app(*c, args.iter().map(normalize).collect()),
        _ => t.clone(),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(n, _) | Term::Var(n) => f.write_str(n),
            Term::ChainKey(c, i) => write!(f, "{c}_{i}"),
            Term::App(c, args) => {
                write!(f, "{}(", c.as_str())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Sorts terms by their serialization, the canonical output order.
pub fn sort_canonical(v: &mut Vec<Term>) {
    v.sort_by_cached_key(|t| t.to_string());
    v.dedup();
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Ctor(Ctor),
    Fst,
    Snd,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule {rule} expects {expected} premises, got {got}")]
    Arity {
        rule: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("rule {rule} applied to a non-message premise {premise}")]
    Open { rule: &'static str, premise: String },
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Ctor(c) => c.as_str(),
            Rule::Fst => "fst",
            Rule::Snd => "snd",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        match s {
            "fst" => Some(Rule::Fst),
            "snd" => Some(Rule::Snd),
            _ => Ctor::from_name(s).map(Rule::Ctor),
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Rule::Ctor(c) => c.arity(),
            Rule::Fst | Rule::Snd => 1,
        }
    }

    /// Whether the rule can fail on well-sorted premises.
    pub fn is_partial(self) -> bool {
        matches!(self, Rule::Fst | Rule::Snd | Rule::Ctor(Ctor::Dec))
    }

    /// `Ok(None)` means the rule does not apply, which selects an else branch.
    pub fn apply(self, premises: &[Term]) -> Result<Option<Term>, RuleError> {
        if premises.len() != self.arity() {
            return Err(RuleError::Arity {
                rule: self.as_str(),
                expected: self.arity(),
                got: premises.len(),
            });
        }
        if let Some(p) = premises.iter().find(|p| !p.is_message()) {
            return Err(RuleError::Open {
                rule: self.as_str(),
                premise: p.to_string(),
            });
        }
        Ok(match (self, premises) {
            (Rule::Fst, [Term::App(Ctor::Pair, a)]) => Some(a[0].clone()),
            (Rule::Snd, [Term::App(Ctor::Pair, a)]) => Some(a[1].clone()),
            (Rule::Fst | Rule::Snd, _) => None,
            (Rule::Ctor(Ctor::Dec), [k, Term::App(Ctor::Enc, a)]) if a[0] == *k => {
                Some(a[1].clone())
            }
            (Rule::Ctor(Ctor::Dec), _) => None,
            (Rule::Ctor(c), _) => Some(Term::app(c, premises.to_vec())),
        })
    }
}

pub fn apply_rule(rule: Rule, premises: &[Term]) -> Result<Option<Term>, RuleError> {
    rule.apply(premises)
}

/// A finite generator set of attacker knowledge.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Knowledge {
    pub generators: BTreeSet<Term>,
}

impl Knowledge {
    pub fn new<I: IntoIterator<Item = Term>>(it: I) -> Knowledge {
        let generators: BTreeSet<Term> = it.into_iter().collect();
        debug_assert!(generators.iter().all(Term::is_message));
        Knowledge { generators }
    }

    pub fn union(&self, other: &Knowledge) -> Knowledge {
        Knowledge {
            generators: self.generators.union(&other.generators).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &Knowledge) -> bool {
        self.generators.is_subset(&other.generators)
    }

    pub fn saturate(&self) -> Saturated {
        Saturated::of(self.generators.iter().cloned())
    }
}

/// Closure of a knowledge set under the destructors: projections,
/// decryption under a derivable key, and stepping down one-way chains.
#[derive(Clone, Debug, Default)]
pub struct Saturated {
    set: BTreeSet<Term>,
}

impl Saturated {
    pub fn of<I: IntoIterator<Item = Term>>(it: I) -> Saturated {
        let mut sat = Saturated::default();
        let mut work: Vec<Term> = it.into_iter().collect();
        let mut sealed: Vec<(Term, Term)> = Vec::new();
        loop {
            while let Some(t) = work.pop() {
                if !sat.set.insert(t.clone()) {
                    continue;
                }
                match &t {
                    Term::App(Ctor::Pair, a) => work.extend(a.iter().cloned()),
                    Term::App(Ctor::Enc, a) => sealed.push((a[0].clone(), a[1].clone())),
                    Term::ChainKey(c, i) => {
                        work.extend((0..*i).map(|j| Term::ChainKey(c.clone(), j)));
                    }
                    _ => {}
                }
            }
            // A key may become derivable only after other plaintexts are known.
            let mut opened = false;
            sealed.retain(|(k, m)| {
                if sat.composable(k, usize::MAX) {
                    work.push(m.clone());
                    opened = true;
                    false
                } else {
                    true
                }
            });
            if !opened {
                return sat;
            }
        }
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.set.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.set.iter()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Derivable by stacking at most `budget` composable constructors on top
    /// of saturated elements. Chain keys and atoms outside the set are never
    /// derivable: the only constructor reaching a chain key is `F` on a higher
    /// key, and the set is already closed downward along chains.
    pub fn composable(&self, w: &Term, budget: usize) -> bool {
        if self.set.contains(w) {
            return true;
        }
        match w {
            Term::App(c, args) if c.is_composable() && budget > 0 => {
                args.iter().all(|a| self.composable(a, budget - 1))
            }
            _ => false,
        }
    }
}

/// Bounded membership in the deductive closure. Composition follows the
/// structure of `w`, so `depth(w) + slack` layers always suffice; the slack
/// exists for callers that want an explicit cap.
pub fn deducible(w: &Term, phi: &Knowledge, slack: usize) -> bool {
    w.is_message() && phi.saturate().composable(w, w.depth() + slack)
}

/// Coarse type of a message, used to keep synthesized candidates well-sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Atom(AtomKind),
    Chain,
    Head(Ctor),
}

pub fn sort_of(t: &Term) -> Option<Sort> {
    match t {
        Term::Atom(_, k) => Some(Sort::Atom(*k)),
        Term::ChainKey(..) => Some(Sort::Chain),
        Term::App(c, _) => Some(Sort::Head(*c)),
        Term::Var(_) => None,
    }
}

/// A message pattern a receiver can parse. With `sorts` present, each variable
/// only ranges over knowledge elements of the listed sorts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    pub pattern: Term,
    pub sorts: Option<BTreeMap<Name, BTreeSet<Sort>>>,
}

impl Shape {
    pub fn untyped(pattern: Term) -> Shape {
        Shape {
            pattern,
            sorts: None,
        }
    }

    /// Types each variable by the sorts it takes across the `legit` messages
    /// that match the pattern. Variables never matched get no admissible sort.
    pub fn typed_by<'a, I: IntoIterator<Item = &'a Term>>(pattern: Term, legit: I) -> Shape {
        let mut vars = BTreeSet::new();
        pattern.free_vars(&mut vars);
        let mut sorts: BTreeMap<Name, BTreeSet<Sort>> =
            vars.into_iter().map(|v| (v, BTreeSet::new())).collect();
        for m in legit {
            let mut b = BTreeMap::new();
            if match_pattern(&pattern, m, &mut b) {
                for (v, t) in b {
                    if let (Some(s), Some(set)) = (sort_of(&t), sorts.get_mut(&v)) {
                        set.insert(s);
                    }
                }
            }
        }
        Shape {
            pattern,
            sorts: Some(sorts),
        }
    }

    fn admits(&self, v: &Name, t: &Term) -> bool {
        match &self.sorts {
            None => true,
            Some(m) => match (m.get(v), sort_of(t)) {
                (Some(set), Some(s)) => set.contains(&s),
                _ => false,
            },
        }
    }
}

/// One-way matching of a pattern against a message; variables bind consistently.
pub fn match_pattern(p: &Term, t: &Term, b: &mut BTreeMap<Name, Term>) -> bool {
    match (p, t) {
        (Term::Var(v), _) => match b.get(v) {
            Some(prev) => prev == t,
            None => {
                b.insert(v.clone(), t.clone());
                true
            }
        },
        (Term::App(c, xs), Term::App(d, ys)) => {
            c == d
                && xs
                    .iter()
                    .zip(ys.iter())
                    .all(|(x, y)| match_pattern(x, y, b))
        }
        _ => p == t,
    }
}

/// Layers of constructors above the variables and constants of a pattern.
fn pattern_layers(p: &Term) -> usize {
    match p {
        Term::App(_, args) if !p.is_message() => {
            1 + args.iter().map(pattern_layers).max().unwrap_or(0)
        }
        _ => 0,
    }
}

/// Finite candidate set for the attacker: the saturation of `phi` plus every
/// instance of a shape whose variables take saturated values, whose constant
/// parts are derivable, and whose constructor layers fit within `depth`.
/// Output is sorted by serialization.
pub fn synth_candidates(phi: &Knowledge, depth: usize, shapes: &[Shape]) -> Vec<Term> {
    let sat = phi.saturate();
    let mut out: BTreeSet<Term> = sat.iter().cloned().collect();
    if sat.is_empty() {
        return Vec::new();
    }
    for shape in shapes {
        if pattern_layers(&shape.pattern) > depth || shape.pattern.is_message() {
            continue;
        }
        let mut vars = BTreeSet::new();
        shape.pattern.free_vars(&mut vars);
        let vars: Vec<Name> = vars.into_iter().collect();
        let pools: Vec<Vec<&Term>> = vars
            .iter()
            .map(|v| sat.iter().filter(|t| shape.admits(v, t)).collect())
            .collect();
        if pools.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; vars.len()];
        loop {
            let m: BTreeMap<Name, Term> = vars
                .iter()
                .zip(idx.iter())
                .enumerate()
                .map(|(k, (v, &i))| (v.clone(), pools[k][i].clone()))
                .collect();
            let inst = shape.pattern.subst_map(&m);
            if !out.contains(&inst) && sat.composable(&inst, depth) {
                out.insert(inst);
            }
            // Odometer over the variable pools.
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < pools[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    let mut v: Vec<Term> = out.into_iter().collect();
    sort_canonical(&mut v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Term {
        Term::other(s)
    }

    #[test]
    fn projections_and_partial_dec() {
        let p = Term::pair(a("a"), a("b"));
        assert_eq!(
            Rule::Fst.apply(std::slice::from_ref(&p)).unwrap(),
            Some(a("a"))
        );
        assert_eq!(Rule::Snd.apply(&[p]).unwrap(), Some(a("b")));
        let c = Term::enc(a("k"), a("m"));
        assert_eq!(
            Rule::Ctor(Ctor::Dec).apply(&[a("k"), c.clone()]).unwrap(),
            Some(a("m"))
        );
        assert_eq!(Rule::Ctor(Ctor::Dec).apply(&[a("k2"), c]).unwrap(), None);
        assert_eq!(Rule::Fst.apply(&[a("a")]).unwrap(), None);
    }

    #[test]
    fn arity_mismatch_is_structural() {
        assert!(matches!(
            Rule::Ctor(Ctor::Pair).apply(&[a("a")]),
            Err(RuleError::Arity { .. })
        ));
    }

    #[test]
    fn chain_normalization() {
        assert_eq!(Term::f(Term::chain("kc", 5)), Term::chain("kc", 4));
        let bottom = Term::f(Term::chain("kc", 0));
        assert!(matches!(bottom, Term::App(Ctor::F, _)));
        assert_eq!(bottom.to_string(), "F(kc_0)");
        assert_eq!(Term::f_iter(Term::chain("kc", 3), 2), Term::chain("kc", 1));
    }

    #[test]
    fn serialization_matches_canonical_form() {
        let t = Term::mac(
            Term::atom("kBSm", AtomKind::BaseKey),
            Term::pair(a("n1"), Term::pair(Term::int(1), Term::chain("kc", 0))),
        );
        assert_eq!(t.to_string(), "mac(kBSm,pair(n1,pair(1,kc_0)))");
    }

    #[test]
    fn deducible_basics() {
        let phi = Knowledge::new([Term::pair(a("a"), a("b"))]);
        assert!(deducible(&a("a"), &phi, 0));
        assert!(deducible(&Term::pair(a("b"), a("a")), &phi, 0));
        assert!(!deducible(&a("c"), &phi, 3));
        let locked = Knowledge::new([
            Term::enc(Term::pair(a("a"), a("b")), a("s")),
            Term::pair(a("a"), a("b")),
        ]);
        assert!(deducible(&a("s"), &locked, 0));
        let chain = Knowledge::new([Term::chain("kc", 3)]);
        assert!(deducible(&Term::chain("kc", 0), &chain, 0));
        assert!(!deducible(&Term::chain("kc", 4), &chain, 5));
    }

    #[test]
    fn synth_exhaustive_pairs() {
        let phi = Knowledge::new([a("a"), a("b")]);
        let shapes = [Shape::untyped(Term::pair(Term::var("x"), Term::var("y")))];
        let got: Vec<String> = synth_candidates(&phi, 1, &shapes)
            .iter()
            .map(|t| t.to_string())
            .collect();
        assert_eq!(
            got,
            ["a", "b", "pair(a,a)", "pair(a,b)", "pair(b,a)", "pair(b,b)"]
        );
    }

    #[test]
    fn synth_saturation_only() {
        let p1 = Term::pair(a("req"), Term::pair(a("m"), a("n1")));
        let got: Vec<String> = synth_candidates(&Knowledge::new([p1]), 0, &[])
            .iter()
            .map(|t| t.to_string())
            .collect();
        assert_eq!(
            got,
            ["m", "n1", "pair(m,n1)", "pair(req,pair(m,n1))", "req"]
        );
        assert!(synth_candidates(&Knowledge::default(), 2, &[]).is_empty());
    }

    #[test]
    fn typed_shapes_restrict_positions() {
        let legit = Term::pair(a("req"), Term::atom("n", AtomKind::Nonce));
        let shape = Shape::typed_by(Term::pair(a("req"), Term::var("x")), [&legit]);
        let phi = Knowledge::new([legit.clone(), Term::atom("z", AtomKind::Nonce)]);
        let got = synth_candidates(&phi, 1, &[shape]);
        assert!(got.contains(&Term::pair(a("req"), Term::atom("z", AtomKind::Nonce))));
        assert!(!got.contains(&Term::pair(a("req"), a("req"))));
    }
}
