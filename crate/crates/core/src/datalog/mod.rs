//! Ground Datalog: atoms, rules, programs, a text parser and a semi-naive
//! evaluator that records the round in which each atom first appears.
//!
//! One round of evaluation is one application of the immediate-consequence
//! operator T: every single-rule consequence of the current set is added at
//! once. The round at which an atom appears is therefore its derivation depth.

mod engine;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use engine::{Closure, Engine, Evaluation};
pub use parser::{parse_atom, parse_facts_for, parse_program};

use crate::{Error, Result};

/// An interned constant symbol. Ordered lexicographically by name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant(Arc<str>);

impl Constant {
    pub fn new(name: &str) -> Self {
        assert!(!name.is_empty(), "constant names are nonempty");
        Constant(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A ground atom `pred(c1,...,ck)`.
///
/// The derived order compares the predicate name and then the arguments.
/// Identifier characters all sort after `(`, `,` and `)`, so this is the
/// same order as comparing the rendered strings.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    predicate: Arc<str>,
    args: Vec<Constant>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        GroundAtom {
            predicate: Arc::from(predicate),
            args: args.iter().map(|a| Constant::new(a)).collect(),
        }
    }

    pub fn from_parts(predicate: Arc<str>, args: Vec<Constant>) -> Self {
        GroundAtom { predicate, args }
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn args(&self) -> &[Constant] {
        &self.args
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(a.name())?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for GroundAtom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_atom(s)
    }
}

/// A duplicate-free set of ground atoms iterated in canonical order.
pub type FactSet = BTreeSet<GroundAtom>;

/// Builds a fact set from rendered atoms, panicking on malformed input.
pub fn facts<'a>(atoms: impl IntoIterator<Item = &'a str>) -> FactSet {
    atoms
        .into_iter()
        .map(|s| parse_atom(s).unwrap_or_else(|e| panic!("bad atom {s:?}: {e}")))
        .collect()
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Var(Arc<str>),
    Const(Constant),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => f.write_str(c.name()),
        }
    }
}

/// An atom template whose arguments may be variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AtomPattern {
    pub predicate: Arc<str>,
    pub terms: Vec<Term>,
}

impl AtomPattern {
    pub fn vars(&self) -> impl Iterator<Item = &Arc<str>> {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for AtomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.terms.is_empty() {
            f.write_str("(")?;
            for (i, t) in self.terms.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Rule {
    pub head: AtomPattern,
    pub body: Vec<AtomPattern>,
}

impl Rule {
    /// Returns the first head variable missing from the body, if any.
    pub fn unsafe_variable(&self) -> Option<&Arc<str>> {
        self.head
            .vars()
            .find(|v| !self.body.iter().any(|b| b.vars().any(|w| w == *v)))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, b) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PredicateInfo {
    pub arity: usize,
    /// True when the predicate occurs in some rule head.
    pub idb: bool,
}

/// Rules plus predicate declarations.
#[derive(Clone, Default, Debug)]
pub struct Program {
    rules: Vec<Rule>,
    predicates: BTreeMap<Arc<str>, PredicateInfo>,
}

impl Program {
    /// Builds a program, declaring every predicate used by the rules.
    /// Duplicate rules are dropped.
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        let mut program = Program::default();
        for rule in rules {
            program.add_rule(rule)?;
        }
        Ok(program)
    }

    pub fn add_rule(&mut self, rule: Rule) -> Result<()> {
        if rule.body.is_empty() {
            return Err(Error::Syntax {
                line: 0,
                column: 0,
                message: format!("rule `{}` has an empty body", rule.head),
            });
        }
        if let Some(v) = rule.unsafe_variable() {
            return Err(Error::UnsafeRule {
                variable: v.to_string(),
                line: 0,
                column: 0,
            });
        }
        for atom in std::iter::once(&rule.head).chain(&rule.body) {
            self.declare(&atom.predicate, atom.terms.len())?;
        }
        self.predicates
            .get_mut(&rule.head.predicate)
            .expect("declared above")
            .idb = true;
        if !self.rules.contains(&rule) {
            self.rules.push(rule);
        }
        Ok(())
    }

    /// Declares a predicate, or checks the arity of an existing declaration.
    pub fn declare(&mut self, predicate: &str, arity: usize) -> Result<()> {
        match self.predicates.get(predicate) {
            Some(info) if info.arity != arity => Err(Error::Arity {
                predicate: predicate.to_string(),
                expected: info.arity,
                found: arity,
                line: 0,
                column: 0,
            }),
            Some(_) => Ok(()),
            None => {
                self.predicates
                    .insert(Arc::from(predicate), PredicateInfo { arity, idb: false });
                Ok(())
            }
        }
    }

    /// Declares the predicates of the given facts.
    pub fn declare_facts<'a>(&mut self, facts: impl IntoIterator<Item = &'a GroundAtom>) -> Result<()> {
        for f in facts {
            self.declare(f.predicate(), f.arity())?;
        }
        Ok(())
    }

    /// Checks that an atom uses a declared predicate with the right arity.
    pub fn check_atom(&self, atom: &GroundAtom) -> Result<()> {
        match self.predicates.get(atom.predicate()) {
            None => Err(Error::UnknownAtom(atom.to_string())),
            Some(info) if info.arity != atom.arity() => Err(Error::Arity {
                predicate: atom.predicate().to_string(),
                expected: info.arity,
                found: atom.arity(),
                line: 0,
                column: 0,
            }),
            Some(_) => Ok(()),
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn predicates(&self) -> &BTreeMap<Arc<str>, PredicateInfo> {
        &self.predicates
    }

    pub fn is_idb(&self, predicate: &str) -> bool {
        self.predicates.get(predicate).is_some_and(|p| p.idb)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Renders facts in the text format, one per line.
pub fn render_facts(facts: &FactSet) -> String {
    let mut out = String::new();
    for f in facts {
        out.push_str(&f.to_string());
        out.push_str(".\n");
    }
    out
}
