//! Presence-condition algebra.
//!
//! A [`PresenceCondition`] is a boolean formula over configuration options.
//! Values built through the smart constructors ([`pc_and`], [`pc_or`],
//! [`pc_not`], [`PresenceCondition::all`], [`PresenceCondition::any`]) are
//! constant-folded: no `And`/`Or` node ever holds a constant child, nested
//! conjunctions and disjunctions are flattened, and adjacent duplicate
//! children are dropped.
//!
//! Option counting is syntactic: [`options_of`] returns the distinct atom
//! names that remain after folding. No logical minimization is applied, so
//! `A && !A` still counts one option.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest number of distinct options [`is_satisfiable`] will enumerate.
pub const MAX_SAT_OPTIONS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid option name {0:?}")]
    InvalidOption(String),
    #[error("formula references {count} options; enumeration is limited to {limit}")]
    OptionLimitExceeded { count: usize, limit: usize },
}

/// A configuration option such as `CONFIG_X86_64`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct OptionName(String);

impl OptionName {
    pub fn new(name: impl Into<String>) -> Result<Self, PcError> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(OptionName(name))
        } else {
            Err(PcError::InvalidOption(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OptionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for OptionName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        OptionName::new(s).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PresenceCondition {
    True,
    False,
    Atom(OptionName),
    Not(Box<PresenceCondition>),
    /// At least two children, none constant.
    And(Vec<PresenceCondition>),
    /// At least two children, none constant.
    Or(Vec<PresenceCondition>),
}

use PresenceCondition as Pc;

impl PresenceCondition {
    pub fn atom(name: OptionName) -> Self {
        Pc::Atom(name)
    }

    /// Atom from a raw name; panics on an invalid identifier. Meant for tests
    /// and literals.
    pub fn var(name: &str) -> Self {
        Pc::Atom(OptionName::new(name).expect("valid option name"))
    }

    /// Folded conjunction of every item; `True` when empty.
    pub fn all<I: IntoIterator<Item = Pc>>(items: I) -> Self {
        fold_nary(items, true)
    }

    /// Folded disjunction of every item; `False` when empty.
    pub fn any<I: IntoIterator<Item = Pc>>(items: I) -> Self {
        fold_nary(items, false)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Pc::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Pc::False)
    }

    pub fn options(&self) -> BTreeSet<OptionName> {
        options_of(self)
    }

    pub fn option_count(&self) -> usize {
        option_count(self)
    }

    pub fn evaluate(&self, cfg: &ConfigAssignment) -> bool {
        evaluate(self, cfg)
    }

    /// Canonical text: `defined(X)`, `!`, `&&`, `||`, parentheses, `1`/`0`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

fn fold_nary<I: IntoIterator<Item = Pc>>(items: I, conj: bool) -> Pc {
    let mut children: Vec<Pc> = Vec::new();
    for item in items {
        match item {
            Pc::True if conj => continue,
            Pc::False if !conj => continue,
            Pc::True => return Pc::True,
            Pc::False => return Pc::False,
            Pc::And(inner) if conj => {
                for c in inner {
                    push_dedup(&mut children, c);
                }
            }
            Pc::Or(inner) if !conj => {
                for c in inner {
                    push_dedup(&mut children, c);
                }
            }
            other => push_dedup(&mut children, other),
        }
    }
    match children.len() {
        0 => {
            if conj {
                Pc::True
            } else {
                Pc::False
            }
        }
        1 => children.pop().unwrap(),
        _ if conj => Pc::And(children),
        _ => Pc::Or(children),
    }
}

fn push_dedup(children: &mut Vec<Pc>, c: Pc) {
    if children.last() != Some(&c) {
        children.push(c);
    }
}

pub fn pc_and(a: Pc, b: Pc) -> Pc {
    Pc::all([a, b])
}

pub fn pc_or(a: Pc, b: Pc) -> Pc {
    Pc::any([a, b])
}

pub fn pc_not(a: Pc) -> Pc {
    match a {
        Pc::True => Pc::False,
        Pc::False => Pc::True,
        Pc::Not(inner) => *inner,
        other => Pc::Not(Box::new(other)),
    }
}

/// Distinct atoms appearing syntactically in `pc`.
pub fn options_of(pc: &Pc) -> BTreeSet<OptionName> {
    let mut out = BTreeSet::new();
    collect_options(pc, &mut out);
    out
}

fn collect_options(pc: &Pc, out: &mut BTreeSet<OptionName>) {
    match pc {
        Pc::True | Pc::False => {}
        Pc::Atom(name) => {
            out.insert(name.clone());
        }
        Pc::Not(inner) => collect_options(inner, out),
        Pc::And(cs) | Pc::Or(cs) => cs.iter().for_each(|c| collect_options(c, out)),
    }
}

pub fn option_count(pc: &Pc) -> usize {
    options_of(pc).len()
}

/// A (possibly partial) configuration. Unbound options take `default_for_unbound`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfigAssignment {
    pub bindings: BTreeMap<OptionName, bool>,
    pub default_for_unbound: bool,
}

impl ConfigAssignment {
    /// Every option enabled (the `allyesconfig` analogue).
    pub fn all_yes() -> Self {
        ConfigAssignment { bindings: BTreeMap::new(), default_for_unbound: true }
    }

    pub fn with_default(default_for_unbound: bool) -> Self {
        ConfigAssignment { bindings: BTreeMap::new(), default_for_unbound }
    }

    pub fn set(&mut self, name: OptionName, value: bool) -> &mut Self {
        self.bindings.insert(name, value);
        self
    }

    pub fn value(&self, name: &OptionName) -> bool {
        self.bindings.get(name).copied().unwrap_or(self.default_for_unbound)
    }
}

pub fn evaluate(pc: &Pc, cfg: &ConfigAssignment) -> bool {
    match pc {
        Pc::True => true,
        Pc::False => false,
        Pc::Atom(name) => cfg.value(name),
        Pc::Not(inner) => !evaluate(inner, cfg),
        Pc::And(cs) => cs.iter().all(|c| evaluate(c, cfg)),
        Pc::Or(cs) => cs.iter().any(|c| evaluate(c, cfg)),
    }
}

/// Formula compiled against a dense variable index, evaluated on bitmasks.
enum Compiled {
    Const(bool),
    Var(u32),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
}

impl Compiled {
    fn new(pc: &Pc, index: &BTreeMap<&OptionName, u32>) -> Self {
        match pc {
            Pc::True => Compiled::Const(true),
            Pc::False => Compiled::Const(false),
            Pc::Atom(n) => Compiled::Var(index[n]),
            Pc::Not(inner) => Compiled::Not(Box::new(Compiled::new(inner, index))),
            Pc::And(cs) => Compiled::And(cs.iter().map(|c| Compiled::new(c, index)).collect()),
            Pc::Or(cs) => Compiled::Or(cs.iter().map(|c| Compiled::new(c, index)).collect()),
        }
    }

    fn eval(&self, bits: u32) -> bool {
        match self {
            Compiled::Const(b) => *b,
            Compiled::Var(i) => bits >> i & 1 == 1,
            Compiled::Not(inner) => !inner.eval(bits),
            Compiled::And(cs) => cs.iter().all(|c| c.eval(bits)),
            Compiled::Or(cs) => cs.iter().any(|c| c.eval(bits)),
        }
    }
}

/// True iff some assignment over `options_of(pc)` makes `pc` true.
pub fn is_satisfiable(pc: &Pc) -> Result<bool, PcError> {
    match pc {
        Pc::True => return Ok(true),
        Pc::False => return Ok(false),
        Pc::Atom(_) => return Ok(true),
        _ => {}
    }
    let opts = options_of(pc);
    if opts.len() > MAX_SAT_OPTIONS {
        return Err(PcError::OptionLimitExceeded { count: opts.len(), limit: MAX_SAT_OPTIONS });
    }
    let index: BTreeMap<&OptionName, u32> = opts.iter().enumerate().map(|(i, n)| (n, i as u32)).collect();
    let compiled = Compiled::new(pc, &index);
    Ok((0u32..1u32 << opts.len()).any(|bits| compiled.eval(bits)))
}

impl fmt::Display for PresenceCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pc::True => f.write_str("1"),
            Pc::False => f.write_str("0"),
            Pc::Atom(n) => write!(f, "defined({n})"),
            Pc::Not(inner) => match **inner {
                Pc::And(_) | Pc::Or(_) => write!(f, "!({inner})"),
                _ => write!(f, "!{inner}"),
            },
            Pc::And(cs) | Pc::Or(cs) => {
                let sep = if matches!(self, Pc::And(_)) { " && " } else { " || " };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    match c {
                        Pc::And(_) | Pc::Or(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl FromStr for PresenceCondition {
    type Err = PcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_pc(s)
    }
}

impl Serialize for PresenceCondition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for PresenceCondition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_pc(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Const(bool),
    Not,
    And,
    Or,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, PcError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'!' => out.push((start, Tok::Not)),
            b'&' | b'|' => {
                if bytes.get(i + 1) != Some(&c) {
                    return Err(syntax(start, format!("expected '{0}{0}'", c as char)));
                }
                i += 1;
                out.push((start, if c == b'&' { Tok::And } else { Tok::Or }));
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let lit = &text[start..i];
                let value = match lit {
                    "0" => false,
                    "1" => true,
                    _ => return Err(syntax(start, format!("unsupported constant {lit:?}"))),
                };
                out.push((start, Tok::Const(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character {ch:?}")));
            }
        }
        i += 1;
    }
    Ok(out)
}

fn syntax(offset: usize, message: impl Into<String>) -> PcError {
    PcError::Syntax { offset, message: message.into() }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), PcError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn disjunction(&mut self) -> Result<Pc, PcError> {
        let mut items = vec![self.conjunction()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            items.push(self.conjunction()?);
        }
        Ok(Pc::any(items))
    }

    fn conjunction(&mut self) -> Result<Pc, PcError> {
        let mut items = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            items.push(self.unary()?);
        }
        Ok(Pc::all(items))
    }

    fn unary(&mut self) -> Result<Pc, PcError> {
        let offset = self.offset();
        match self.toks.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(pc_not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.disjunction()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Const(b)) => {
                self.pos += 1;
                Ok(if b { Pc::True } else { Pc::False })
            }
            Some(Tok::Ident(name)) if name == "defined" => {
                self.pos += 1;
                let parens = self.peek() == Some(&Tok::LParen);
                if parens {
                    self.pos += 1;
                }
                let name = match self.toks.get(self.pos) {
                    Some((_, Tok::Ident(n))) if n != "defined" => n.clone(),
                    _ => return Err(syntax(self.offset(), "expected option name after 'defined'")),
                };
                self.pos += 1;
                if parens {
                    self.expect(Tok::RParen, "')'")?;
                }
                Ok(Pc::Atom(OptionName(name)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Pc::Atom(OptionName(name)))
            }
            Some(_) => Err(syntax(offset, "expected operand")),
            None => Err(syntax(offset, "unexpected end of input")),
        }
    }
}

/// Parse the `#if`-style grammar: `defined(ID)`, `defined ID`, bare `ID`,
/// `!`, `&&`, `||`, parentheses, and the constants `1`/`0`.
pub fn parse_pc(text: &str) -> Result<Pc, PcError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let pc = p.disjunction()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(pc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a() -> Pc {
        Pc::var("A")
    }
    fn b() -> Pc {
        Pc::var("B")
    }
    fn c() -> Pc {
        Pc::var("C")
    }

    fn names(xs: &[&str]) -> Vec<OptionName> {
        xs.iter().map(|x| OptionName::new(*x).unwrap()).collect()
    }

    /// Truth table over the named options, independent of `is_satisfiable`.
    fn truth_table(pc: &Pc, opts: &[OptionName]) -> Vec<bool> {
        (0..1u32 << opts.len())
            .map(|bits| {
                let mut cfg = ConfigAssignment::with_default(false);
                for (i, o) in opts.iter().enumerate() {
                    cfg.set(o.clone(), bits >> i & 1 == 1);
                }
                evaluate(pc, &cfg)
            })
            .collect()
    }

    #[test]
    fn parses_listing_disjunction() {
        assert_eq!(parse_pc("defined(A) || defined(B)").unwrap(), Pc::Or(vec![a(), b()]));
    }

    #[test]
    fn parses_constants_and_bare_identifiers() {
        assert_eq!(parse_pc("1").unwrap(), Pc::True);
        assert_eq!(parse_pc("0").unwrap(), Pc::False);
        assert_eq!(parse_pc("A").unwrap(), a());
        assert_eq!(parse_pc("defined A").unwrap(), a());
    }

    #[test]
    fn parses_nested_and_matches_truth_table() {
        let pc = parse_pc("!defined(A) && (defined(A) || defined(B))").unwrap();
        assert_eq!(pc, Pc::And(vec![pc_not(a()), Pc::Or(vec![a(), b()])]));
        let simple = pc_and(pc_not(a()), b());
        let opts = names(&["A", "B"]);
        assert_eq!(truth_table(&pc, &opts), truth_table(&simple, &opts));
    }

    #[test]
    fn parse_errors_carry_offsets() {
        assert!(matches!(parse_pc(""), Err(PcError::Syntax { offset: 0, .. })));
        assert!(matches!(parse_pc("   "), Err(PcError::Syntax { .. })));
        assert!(matches!(parse_pc("A &"), Err(PcError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_pc("(A || B"), Err(PcError::Syntax { offset: 7, .. })));
        assert!(matches!(parse_pc("A B"), Err(PcError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_pc("X > 2"), Err(PcError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn smart_constructors_fold() {
        assert_eq!(pc_and(a(), Pc::True), a());
        assert_eq!(pc_and(a(), Pc::False), Pc::False);
        assert_eq!(pc_or(a(), Pc::True), Pc::True);
        assert_eq!(pc_or(Pc::False, a()), a());
        assert_eq!(pc_not(Pc::True), Pc::False);
        assert_eq!(pc_not(pc_not(a())), a());
        assert_eq!(pc_and(a(), a()), a());
        assert_eq!(pc_and(pc_and(a(), b()), c()), Pc::And(vec![a(), b(), c()]));
    }

    #[test]
    fn conjunction_with_absorbed_disjunction_stays_syntactic() {
        let pc = pc_and(a(), Pc::Or(vec![a(), b()]));
        assert_eq!(pc, Pc::And(vec![a(), Pc::Or(vec![a(), b()])]));
        let opts = names(&["A", "B"]);
        assert_eq!(truth_table(&pc, &opts), truth_table(&a(), &opts));
    }

    #[test]
    fn option_sets_are_syntactic() {
        assert_eq!(options_of(&Pc::Or(vec![a(), b()])), names(&["A", "B"]).into_iter().collect());
        assert!(options_of(&Pc::True).is_empty());
        assert_eq!(option_count(&pc_and(a(), pc_not(a()))), 1);
        assert_eq!(option_count(&a()), 1);
        assert_eq!(option_count(&Pc::True), 0);
        assert_eq!(option_count(&pc_and(a(), pc_or(b(), c()))), 3);
    }

    #[test]
    fn evaluation_and_defaults() {
        let mut cfg = ConfigAssignment::with_default(false);
        cfg.set(OptionName::new("A").unwrap(), false).set(OptionName::new("B").unwrap(), true);
        assert!(evaluate(&pc_or(a(), b()), &cfg));
        assert!(evaluate(&Pc::var("X"), &ConfigAssignment::all_yes()));
        assert!(!evaluate(&Pc::var("X"), &ConfigAssignment::with_default(false)));
    }

    #[test]
    fn nested_formula_matches_hand_table() {
        // (A && !B) || (C && !(A || B))
        let pc = pc_or(pc_and(a(), pc_not(b())), pc_and(c(), pc_not(pc_or(a(), b()))));
        let opts = names(&["A", "B", "C"]);
        let expected: Vec<bool> = (0..8u32)
            .map(|bits| {
                let (x, y, z) = (bits & 1 == 1, bits & 2 == 2, bits & 4 == 4);
                (x && !y) || (z && !(x || y))
            })
            .collect();
        assert_eq!(truth_table(&pc, &opts), expected);
    }

    #[test]
    fn satisfiability_basics() {
        assert!(!is_satisfiable(&pc_and(a(), pc_not(a()))).unwrap());
        assert!(is_satisfiable(&Pc::True).unwrap());
        assert!(!is_satisfiable(&Pc::False).unwrap());
        let wide = Pc::all((0..25).map(|i| Pc::var(&format!("O{i}"))));
        assert_eq!(is_satisfiable(&wide), Err(PcError::OptionLimitExceeded { count: 25, limit: MAX_SAT_OPTIONS }));
    }

    #[test]
    fn rendering_is_canonical() {
        let pc = pc_and(pc_not(pc_or(a(), b())), c());
        assert_eq!(pc.render(), "!(defined(A) || defined(B)) && defined(C)");
        assert_eq!(parse_pc(&pc.render()).unwrap(), pc);
        assert_eq!(Pc::True.render(), "1");
    }

    #[test]
    fn option_names_are_validated() {
        assert!(OptionName::new("CONFIG_X86_64").is_ok());
        assert!(OptionName::new("_x").is_ok());
        assert!(OptionName::new("").is_err());
        assert!(OptionName::new("9a").is_err());
        assert!(OptionName::new("a-b").is_err());
    }

    const POOL: [&str; 5] = ["A", "B", "C", "D", "E"];

    /// Unfolded formula tree; folded into a `Pc` via the smart constructors.
    #[derive(Debug, Clone)]
    enum Raw {
        T,
        F,
        V(usize),
        Not(Box<Raw>),
        And(Box<Raw>, Box<Raw>),
        Or(Box<Raw>, Box<Raw>),
    }

    impl Raw {
        fn fold(&self) -> Pc {
            match self {
                Raw::T => Pc::True,
                Raw::F => Pc::False,
                Raw::V(i) => Pc::var(POOL[*i]),
                Raw::Not(x) => pc_not(x.fold()),
                Raw::And(x, y) => pc_and(x.fold(), y.fold()),
                Raw::Or(x, y) => pc_or(x.fold(), y.fold()),
            }
        }

        fn eval(&self, bits: u32) -> bool {
            match self {
                Raw::T => true,
                Raw::F => false,
                Raw::V(i) => bits >> i & 1 == 1,
                Raw::Not(x) => !x.eval(bits),
                Raw::And(x, y) => x.eval(bits) && y.eval(bits),
                Raw::Or(x, y) => x.eval(bits) || y.eval(bits),
            }
        }
    }

    fn raw_strategy() -> impl Strategy<Value = Raw> {
        let leaf = prop_oneof![
            1 => Just(Raw::T),
            1 => Just(Raw::F),
            6 => (0..POOL.len()).prop_map(Raw::V),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|x| Raw::Not(Box::new(x))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Raw::And(Box::new(x), Box::new(y))),
                (inner.clone(), inner).prop_map(|(x, y)| Raw::Or(Box::new(x), Box::new(y))),
            ]
        })
    }

    fn pool_cfg(bits: u32) -> ConfigAssignment {
        let mut cfg = ConfigAssignment::with_default(false);
        for (i, n) in POOL.iter().enumerate() {
            cfg.set(OptionName::new(*n).unwrap(), bits >> i & 1 == 1);
        }
        cfg
    }

    fn reorder(pc: &Pc) -> Pc {
        match pc {
            Pc::And(cs) => Pc::all(cs.iter().rev().map(reorder)),
            Pc::Or(cs) => Pc::any(cs.iter().rev().map(reorder)),
            Pc::Not(x) => pc_not(reorder(x)),
            other => other.clone(),
        }
    }

    fn has_constant_child(pc: &Pc) -> bool {
        match pc {
            Pc::And(cs) | Pc::Or(cs) => {
                cs.len() < 2 || cs.iter().any(|c| c.is_true() || c.is_false() || has_constant_child(c))
            }
            Pc::Not(x) => has_constant_child(x),
            _ => false,
        }
    }

    proptest! {
        #[test]
        fn folding_preserves_semantics(raw in raw_strategy()) {
            let pc = raw.fold();
            prop_assert!(!has_constant_child(&pc));
            for bits in 0..32u32 {
                prop_assert_eq!(evaluate(&pc, &pool_cfg(bits)), raw.eval(bits));
            }
        }

        #[test]
        fn render_parse_round_trip(raw in raw_strategy()) {
            let pc = raw.fold();
            let back = parse_pc(&pc.render()).unwrap();
            prop_assert_eq!(&back, &pc);
            for bits in 0..32u32 {
                prop_assert_eq!(evaluate(&back, &pool_cfg(bits)), evaluate(&pc, &pool_cfg(bits)));
            }
        }

        #[test]
        fn conjunction_unions_options(x in raw_strategy(), y in raw_strategy()) {
            let (x, y) = (x.fold(), y.fold());
            let joined = pc_and(x.clone(), y.clone());
            if joined.is_false() {
                // a constant operand folds away every atom
                prop_assert!(x.is_false() || y.is_false());
            } else {
                let mut union = options_of(&x);
                union.extend(options_of(&y));
                prop_assert_eq!(options_of(&joined), union);
            }
        }

        #[test]
        fn satisfiability_matches_enumeration(raw in raw_strategy()) {
            let pc = raw.fold();
            let brute = (0..32u32).any(|bits| raw.eval(bits));
            prop_assert_eq!(is_satisfiable(&pc).unwrap(), brute);
        }

        #[test]
        fn option_count_stable_under_rewrites(raw in raw_strategy()) {
            let pc = raw.fold();
            prop_assert_eq!(option_count(&pc_not(pc_not(pc.clone()))), option_count(&pc));
            prop_assert_eq!(option_count(&reorder(&pc)), option_count(&pc));
        }
    }
}
