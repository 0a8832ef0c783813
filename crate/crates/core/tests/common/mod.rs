//! Naive reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use semrd::core::KnowledgeBase;
use semrd::datalog::{FactSet, GroundAtom};

pub type Fact = (String, Vec<String>);
pub type Facts = BTreeSet<Fact>;

#[derive(Clone, Debug)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub pred: String,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

fn render_atom(a: &Atom) -> String {
    let args: Vec<&str> = a
        .terms
        .iter()
        .map(|t| match t {
            Term::Var(v) | Term::Const(v) => v.as_str(),
        })
        .collect();
    format!("{}({})", a.pred, args.join(","))
}

pub fn render(rules: &[Rule], facts: &Facts) -> String {
    let mut out = String::new();
    for r in rules {
        let body: Vec<String> = r.body.iter().map(render_atom).collect();
        out += &format!("{} :- {}.\n", render_atom(&r.head), body.join(", "));
    }
    for (p, args) in facts {
        out += &format!("{p}({}).\n", args.join(","));
    }
    out
}

pub fn to_facts(set: &FactSet) -> Facts {
    set.iter().map(fact_of).collect()
}

pub fn fact_of(a: &GroundAtom) -> Fact {
    (a.predicate().to_string(), a.args().iter().map(|c| c.name().to_string()).collect())
}

pub fn from_facts(set: &Facts) -> FactSet {
    set.iter()
        .map(|(p, args)| {
            let a: Vec<&str> = args.iter().map(String::as_str).collect();
            GroundAtom::new(p, &a)
        })
        .collect()
}

fn matches(body: &[Atom], facts: &Facts, env: &mut BTreeMap<String, String>, out: &mut Vec<BTreeMap<String, String>>) {
    let Some((first, rest)) = body.split_first() else {
        out.push(env.clone());
        return;
    };
    for (p, args) in facts {
        if *p != first.pred || args.len() != first.terms.len() {
            continue;
        }
        let mut bound = Vec::new();
        let mut ok = true;
        for (t, c) in first.terms.iter().zip(args) {
            match t {
                Term::Const(k) => ok &= k == c,
                Term::Var(v) => match env.get(v) {
                    Some(x) => ok &= x == c,
                    None => {
                        env.insert(v.clone(), c.clone());
                        bound.push(v.clone());
                    }
                },
            }
            if !ok {
                break;
            }
        }
        if ok {
            matches(rest, facts, env, out);
        }
        for v in bound {
            env.remove(&v);
        }
    }
}

/// One inflationary round: I ∪ heads of all rule instances over I.
pub fn step(rules: &[Rule], facts: &Facts) -> Facts {
    let mut next = facts.clone();
    for r in rules {
        let mut envs = Vec::new();
        matches(&r.body, facts, &mut BTreeMap::new(), &mut envs);
        for env in envs {
            let args = r
                .head
                .terms
                .iter()
                .map(|t| match t {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => env[v].clone(),
                })
                .collect();
            next.insert((r.head.pred.clone(), args));
        }
    }
    next
}

/// T^0(B), T^1(B), … up to and including the fixpoint.
pub fn rounds(rules: &[Rule], base: &Facts) -> Vec<Facts> {
    let mut out = vec![base.clone()];
    loop {
        let next = step(rules, out.last().unwrap());
        if &next == out.last().unwrap() {
            return out;
        }
        out.push(next);
    }
}

pub fn closure(rules: &[Rule], base: &Facts) -> Facts {
    rounds(rules, base).pop().unwrap()
}

pub fn depth(rules: &[Rule], base: &Facts, f: &Fact) -> Option<usize> {
    rounds(rules, base).iter().position(|r| r.contains(f))
}

/// Canonical-order deletion, the definition of the irredundant core.
pub fn core(rules: &[Rule], s: &Facts) -> Facts {
    let target = closure(rules, s);
    let mut cur = s.clone();
    for f in s {
        let mut without = cur.clone();
        without.remove(f);
        if closure(rules, &without) == target {
            cur = without;
        }
    }
    cur
}

/// |A ∩ B| / |A ∪ B| with 0/0 = 1.
pub fn jaccard(a: &Facts, b: &Facts) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// A random program over e0/2, e1/1 (never in heads) and i0/2, i1/1.
#[derive(Clone, Debug)]
pub struct Instance {
    pub rules: Vec<Rule>,
    pub facts: Facts,
}

impl Instance {
    pub fn text(&self) -> String {
        render(&self.rules, &self.facts)
    }

    pub fn kb(&self) -> KnowledgeBase {
        KnowledgeBase::parse(&self.text(), "random").expect("generated program parses")
    }
}

const PREDS: [(&str, usize); 4] = [("e0", 2), ("e1", 1), ("i0", 2), ("i1", 1)];
const VARS: [&str; 3] = ["X", "Y", "Z"];

fn constant(i: usize) -> String {
    format!("c{i}")
}

fn build_rule(head: usize, body: Vec<(usize, Vec<usize>)>, head_terms: Vec<usize>, consts: usize) -> Rule {
    let body: Vec<Atom> = body
        .into_iter()
        .map(|(p, codes)| {
            let (pred, arity) = PREDS[p];
            let terms = (0..arity)
                .map(|k| {
                    let c = codes[k];
                    if c < VARS.len() {
                        Term::Var(VARS[c].to_string())
                    } else {
                        Term::Const(constant((c - VARS.len()) % consts))
                    }
                })
                .collect();
            Atom { pred: pred.to_string(), terms }
        })
        .collect();
    let vars: Vec<String> = body
        .iter()
        .flat_map(|a| a.terms.iter())
        .filter_map(|t| match t {
            Term::Var(v) => Some(v.clone()),
            Term::Const(_) => None,
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let (pred, arity) = PREDS[2 + head];
    let terms = (0..arity)
        .map(|k| {
            if vars.is_empty() {
                Term::Const(constant(head_terms[k] % consts))
            } else {
                Term::Var(vars[head_terms[k] % vars.len()].clone())
            }
        })
        .collect();
    Rule {
        head: Atom { pred: pred.to_string(), terms },
        body,
    }
}

fn chain_rules() -> Vec<Rule> {
    let v = |x: &str| Term::Var(x.to_string());
    let atom = |p: &str, t: Vec<Term>| Atom { pred: p.to_string(), terms: t };
    vec![
        Rule { head: atom("i0", vec![v("X"), v("Y")]), body: vec![atom("e0", vec![v("X"), v("Y")])] },
        Rule {
            head: atom("i0", vec![v("X"), v("Z")]),
            body: vec![atom("e0", vec![v("X"), v("Y")]), atom("i0", vec![v("Y"), v("Z")])],
        },
    ]
}

/// Random safe programs over at most `max_consts` constants. About half of
/// them also contain a transitive-closure pair of rules for `i0`.
pub fn instance(max_consts: usize, max_rules: usize, max_facts: usize) -> impl Strategy<Value = Instance> {
    let term = prop_oneof![4 => 0..VARS.len(), 1 => VARS.len()..VARS.len() + 3];
    let rule = (
        0..2usize,
        prop::collection::vec((0..4usize, prop::collection::vec(term, 2)), 1..=2),
        prop::collection::vec(0..6usize, 2),
    );
    let fact = (prop_oneof![3 => Just(0usize), 1 => Just(1usize), 1 => 2..4usize], 0..max_consts, 0..max_consts);
    (
        2..=max_consts,
        any::<bool>(),
        prop::collection::vec(rule, 1..=max_rules),
        prop::collection::vec(fact, 3.min(max_facts)..=max_facts),
    )
        .prop_map(|(consts, chain, rules, facts)| {
            let mut rules: Vec<Rule> = rules
                .into_iter()
                .map(|(h, b, ht)| build_rule(h, b, ht, consts))
                .collect();
            if chain {
                rules.extend(chain_rules());
            }
            let facts = facts
                .into_iter()
                .map(|(p, a, b)| {
                    let (pred, arity) = PREDS[p];
                    let args = [a % consts, b % consts][..arity].iter().map(|&c| constant(c)).collect();
                    (pred.to_string(), args)
                })
                .collect();
            Instance { rules, facts }
        })
}

/// A random subset of `facts` driven by a bit mask.
pub fn subset(facts: &Facts, mask: &[bool]) -> Facts {
    facts
        .iter()
        .zip(mask.iter().cycle())
        .filter(|(_, keep)| **keep)
        .map(|(f, _)| f.clone())
        .collect()
}

/// Fixed-seed proptest configuration without failure persistence files.
pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed_2026),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
