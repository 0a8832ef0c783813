use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::{Constant, FactSet, GroundAtom, Program, Term};
use crate::Result;

type Tuple = SmallVec<[u32; 4]>;

#[derive(Default)]
struct Interner {
    ids: FxHashMap<Arc<str>, u32>,
    names: Vec<Constant>,
}

impl Interner {
    fn intern(&mut self, c: &Constant) -> u32 {
        if let Some(&id) = self.ids.get(c.name()) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(Arc::from(c.name()), id);
        self.names.push(c.clone());
        id
    }
}

#[derive(Clone, Copy, Debug)]
enum Src {
    Const(u32),
    Var(usize),
}

#[derive(Debug)]
struct Step {
    pred: usize,
    index: Option<usize>,
    key: Vec<Src>,
    checks: Vec<(usize, Src)>,
    binds: Vec<(usize, usize)>,
}

#[derive(Debug)]
struct Plan {
    steps: Vec<Step>,
    head_pred: usize,
    head: Vec<Src>,
    vars: usize,
}

/// Bound key positions and the tuple ids per key.
type Index = (Vec<usize>, FxHashMap<Tuple, Vec<u32>>);

struct Relation {
    tuples: Vec<Tuple>,
    round: FxHashMap<Tuple, u32>,
    indexes: Vec<Index>,
}

impl Relation {
    fn new(specs: &[Vec<usize>]) -> Self {
        Relation {
            tuples: Vec::new(),
            round: FxHashMap::default(),
            indexes: specs.iter().map(|p| (p.clone(), FxHashMap::default())).collect(),
        }
    }

    fn insert(&mut self, t: Tuple, round: u32) -> bool {
        if self.round.contains_key(&t) {
            return false;
        }
        let id = self.tuples.len() as u32;
        for (positions, map) in &mut self.indexes {
            let key: Tuple = positions.iter().map(|&p| t[p]).collect();
            map.entry(key).or_default().push(id);
        }
        self.round.insert(t.clone(), round);
        self.tuples.push(t);
        true
    }
}

/// A compiled program: predicate table, join plans and a constant interner.
///
/// Evaluations produced by one engine share constant identifiers, so their
/// atom sets can be compared without converting back to [`GroundAtom`]s.
pub struct Engine {
    program: Program,
    preds: Vec<(Arc<str>, usize)>,
    pred_ids: FxHashMap<Arc<str>, usize>,
    index_specs: Vec<Vec<Vec<usize>>>,
    plans: Vec<Plan>,
    interner: RwLock<Interner>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("program", &self.program).finish()
    }
}

/// The least fixpoint of a base, with the last round that added an atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub facts: FactSet,
    pub stabilization_round: usize,
}

impl Engine {
    pub fn new(program: Program) -> Self {
        let mut preds = Vec::new();
        let mut pred_ids = FxHashMap::default();
        for (name, info) in program.predicates() {
            pred_ids.insert(name.clone(), preds.len());
            preds.push((name.clone(), info.arity));
        }
        let mut interner = Interner::default();
        let mut index_specs: Vec<Vec<Vec<usize>>> = vec![Vec::new(); preds.len()];
        let mut plans = Vec::new();
        for rule in program.rules() {
            let mut var_ids: HashMap<Arc<str>, usize> = HashMap::new();
            for atom in std::iter::once(&rule.head).chain(&rule.body) {
                for v in atom.vars() {
                    let n = var_ids.len();
                    var_ids.entry(v.clone()).or_insert(n);
                }
            }
            let mut src = |t: &Term| match t {
                Term::Var(v) => Src::Var(var_ids[v]),
                Term::Const(c) => Src::Const(interner.intern(c)),
            };
            let body: Vec<(usize, Vec<Src>)> = rule
                .body
                .iter()
                .map(|a| (pred_ids[&a.predicate], a.terms.iter().map(&mut src).collect()))
                .collect();
            let head: Vec<Src> = rule.head.terms.iter().map(&mut src).collect();
            let head_pred = pred_ids[&rule.head.predicate];
            for first in 0..body.len() {
                let mut bound = vec![false; var_ids.len()];
                let mut remaining: Vec<usize> = (0..body.len()).filter(|&j| j != first).collect();
                let mut order = vec![first];
                while !remaining.is_empty() {
                    let score = |j: usize| {
                        body[j]
                            .1
                            .iter()
                            .filter(|s| match s {
                                Src::Const(_) => true,
                                Src::Var(v) => bound_after(&order, &body, *v),
                            })
                            .count()
                    };
                    let best = (0..remaining.len())
                        .max_by_key(|&k| (score(remaining[k]), std::cmp::Reverse(k)))
                        .expect("nonempty");
                    order.push(remaining.remove(best));
                }
                let mut steps = Vec::new();
                for (k, &j) in order.iter().enumerate() {
                    let (pred, terms) = &body[j];
                    let mut step = Step {
                        pred: *pred,
                        index: None,
                        key: Vec::new(),
                        checks: Vec::new(),
                        binds: Vec::new(),
                    };
                    let mut key_positions = Vec::new();
                    let mut local = vec![false; var_ids.len()];
                    for (pos, s) in terms.iter().enumerate() {
                        match *s {
                            Src::Const(_) if k > 0 => {
                                key_positions.push(pos);
                                step.key.push(*s);
                            }
                            Src::Const(_) => step.checks.push((pos, *s)),
                            Src::Var(v) if bound[v] => {
                                key_positions.push(pos);
                                step.key.push(*s);
                            }
                            Src::Var(v) if local[v] => step.checks.push((pos, *s)),
                            Src::Var(v) => {
                                local[v] = true;
                                step.binds.push((pos, v));
                            }
                        }
                    }
                    if !key_positions.is_empty() {
                        let specs = &mut index_specs[*pred];
                        let slot = specs.iter().position(|p| *p == key_positions).unwrap_or_else(|| {
                            specs.push(key_positions.clone());
                            specs.len() - 1
                        });
                        step.index = Some(slot);
                    }
                    for (v, l) in local.iter().enumerate() {
                        bound[v] |= *l;
                    }
                    steps.push(step);
                }
                plans.push(Plan {
                    steps,
                    head_pred,
                    head: head.clone(),
                    vars: var_ids.len(),
                });
            }
        }
        Engine {
            program,
            preds,
            pred_ids,
            index_specs,
            plans,
            interner: RwLock::new(interner),
        }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    fn intern_atom(&self, atom: &GroundAtom) -> Result<(usize, Tuple)> {
        self.program.check_atom(atom)?;
        let pred = self.pred_ids[atom.predicate()];
        {
            let interner = self.interner.read();
            if let Some(t) = atom
                .args()
                .iter()
                .map(|c| interner.ids.get(c.name()).copied())
                .collect::<Option<Tuple>>()
            {
                return Ok((pred, t));
            }
        }
        let mut interner = self.interner.write();
        Ok((pred, atom.args().iter().map(|c| interner.intern(c)).collect()))
    }

    fn lookup_atom(&self, atom: &GroundAtom) -> Option<(usize, Tuple)> {
        let pred = *self.pred_ids.get(atom.predicate())?;
        if self.preds[pred].1 != atom.arity() {
            return None;
        }
        let interner = self.interner.read();
        let t = atom
            .args()
            .iter()
            .map(|c| interner.ids.get(c.name()).copied())
            .collect::<Option<Tuple>>()?;
        Some((pred, t))
    }

    fn to_atom(&self, interner: &Interner, pred: usize, t: &Tuple) -> GroundAtom {
        GroundAtom::from_parts(
            self.preds[pred].0.clone(),
            t.iter().map(|&c| interner.names[c as usize].clone()).collect(),
        )
    }

    /// Evaluates from `base` for at most `max_rounds` rounds of T, stopping
    /// early once `target` has been derived.
    pub fn evaluate_until(
        &self,
        base: &FactSet,
        max_rounds: Option<usize>,
        target: Option<&GroundAtom>,
    ) -> Result<Evaluation<'_>> {
        let mut rels: Vec<Relation> = self.index_specs.iter().map(|s| Relation::new(s)).collect();
        for atom in base {
            let (p, t) = self.intern_atom(atom)?;
            rels[p].insert(t, 0);
        }
        let target = match target {
            Some(a) => Some(self.intern_atom(a)?),
            None => None,
        };
        let mut delta: Vec<(usize, usize)> = rels.iter().map(|r| (0, r.tuples.len())).collect();
        let mut round = 0usize;
        let mut saturated = false;
        loop {
            if let Some((p, t)) = &target {
                if rels[*p].round.contains_key(t) {
                    break;
                }
            }
            if max_rounds == Some(round) {
                break;
            }
            let mut pending: Vec<(usize, Tuple)> = Vec::new();
            for plan in &self.plans {
                self.run_plan(plan, &rels, &delta, &mut pending);
            }
            let before: Vec<usize> = rels.iter().map(|r| r.tuples.len()).collect();
            let next = round as u32 + 1;
            let mut grew = false;
            for (p, t) in pending {
                grew |= rels[p].insert(t, next);
            }
            if !grew {
                saturated = true;
                break;
            }
            round += 1;
            for (p, r) in rels.iter().enumerate() {
                delta[p] = (before[p], r.tuples.len());
            }
        }
        Ok(Evaluation {
            engine: self,
            rels,
            rounds: round,
            saturated,
        })
    }

    /// Evaluates to the least fixpoint.
    pub fn evaluate(&self, base: &FactSet) -> Result<Evaluation<'_>> {
        self.evaluate_until(base, None, None)
    }

    /// Cn(base) with its stabilization round.
    pub fn closure(&self, base: &FactSet) -> Result<Closure> {
        let e = self.evaluate(base)?;
        Ok(Closure {
            facts: e.facts(),
            stabilization_round: e.rounds(),
        })
    }

    /// Tⁿ(base).
    pub fn iterate(&self, base: &FactSet, n: usize) -> Result<FactSet> {
        Ok(self.evaluate_until(base, Some(n), None)?.facts())
    }

    /// Dd(atom | base), or `None` when the atom is not in Cn(base).
    pub fn derivation_depth(&self, base: &FactSet, atom: &GroundAtom) -> Result<Option<usize>> {
        Ok(self.evaluate_until(base, None, Some(atom))?.depth(atom))
    }

    /// Whether `atom` ∈ T^max_rounds(base) (or Cn(base) when unbounded),
    /// stopping as soon as the atom appears.
    pub fn derives(&self, base: &FactSet, atom: &GroundAtom, max_rounds: Option<usize>) -> Result<bool> {
        if base.contains(atom) {
            return Ok(true);
        }
        if !self.program.is_idb(atom.predicate()) {
            self.program.check_atom(atom)?;
            return Ok(false);
        }
        Ok(self.evaluate_until(base, max_rounds, Some(atom))?.contains(atom))
    }

    fn run_plan(&self, plan: &Plan, rels: &[Relation], delta: &[(usize, usize)], out: &mut Vec<(usize, Tuple)>) {
        let first = &plan.steps[0];
        let (lo, hi) = delta[first.pred];
        if lo == hi {
            return;
        }
        let mut b = vec![0u32; plan.vars];
        for t in &rels[first.pred].tuples[lo..hi] {
            if apply(first, t, &mut b) {
                self.descend(plan, 1, rels, &mut b, out);
            }
        }
    }

    fn descend(&self, plan: &Plan, k: usize, rels: &[Relation], b: &mut Vec<u32>, out: &mut Vec<(usize, Tuple)>) {
        if k == plan.steps.len() {
            let t: Tuple = plan.head.iter().map(|s| value(*s, b)).collect();
            if !rels[plan.head_pred].round.contains_key(&t) {
                out.push((plan.head_pred, t));
            }
            return;
        }
        let step = &plan.steps[k];
        let rel = &rels[step.pred];
        match step.index {
            Some(slot) => {
                let key: Tuple = step.key.iter().map(|s| value(*s, b)).collect();
                if let Some(ids) = rel.indexes[slot].1.get(&key) {
                    for &id in ids {
                        if apply(step, &rel.tuples[id as usize], b) {
                            self.descend(plan, k + 1, rels, b, out);
                        }
                    }
                }
            }
            None => {
                for t in &rel.tuples {
                    if apply(step, t, b) {
                        self.descend(plan, k + 1, rels, b, out);
                    }
                }
            }
        }
    }
}

fn bound_after(order: &[usize], body: &[(usize, Vec<Src>)], v: usize) -> bool {
    order
        .iter()
        .any(|&j| body[j].1.iter().any(|s| matches!(s, Src::Var(w) if *w == v)))
}

fn value(s: Src, b: &[u32]) -> u32 {
    match s {
        Src::Const(c) => c,
        Src::Var(v) => b[v],
    }
}

fn apply(step: &Step, t: &Tuple, b: &mut [u32]) -> bool {
    for &(pos, v) in &step.binds {
        b[v] = t[pos];
    }
    step.checks.iter().all(|&(pos, s)| t[pos] == value(s, b))
}

/// The result of evaluating an engine on a base: every derived atom with
/// the round in which it first appeared.
pub struct Evaluation<'e> {
    engine: &'e Engine,
    rels: Vec<Relation>,
    rounds: usize,
    saturated: bool,
}

impl<'e> Evaluation<'e> {
    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.rels.iter().map(|r| r.tuples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of rounds that added at least one atom.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// True when evaluation reached the fixpoint.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.depth(atom).is_some()
    }

    /// The round in which `atom` first appeared.
    pub fn depth(&self, atom: &GroundAtom) -> Option<usize> {
        let (p, t) = self.engine.lookup_atom(atom)?;
        self.rels[p].round.get(&t).map(|&r| r as usize)
    }

    pub fn facts(&self) -> FactSet {
        self.facts_within(usize::MAX)
    }

    /// Atoms derived within `n` rounds.
    pub fn facts_within(&self, n: usize) -> FactSet {
        let interner = self.engine.interner.read();
        let mut out = FactSet::new();
        for (p, r) in self.rels.iter().enumerate() {
            for t in &r.tuples {
                if r.round[t] as usize <= n {
                    out.insert(self.engine.to_atom(&interner, p, t));
                }
            }
        }
        out
    }

    /// Every atom with its depth, in canonical order.
    pub fn depths(&self) -> Vec<(GroundAtom, usize)> {
        let interner = self.engine.interner.read();
        let mut out: Vec<(GroundAtom, usize)> = self
            .rels
            .iter()
            .enumerate()
            .flat_map(|(p, r)| {
                let interner = &interner;
                r.tuples
                    .iter()
                    .map(move |t| (self.engine.to_atom(interner, p, t), r.round[t] as usize))
            })
            .collect();
        out.sort();
        out
    }

    /// Largest depth of any atom.
    pub fn max_depth(&self) -> usize {
        self.rels
            .iter()
            .flat_map(|r| r.round.values())
            .copied()
            .max()
            .unwrap_or(0) as usize
    }

    /// Number of atoms shared with another evaluation of the same engine.
    pub fn intersection_len(&self, other: &Evaluation<'_>) -> usize {
        assert!(std::ptr::eq(self.engine, other.engine), "evaluations from different engines");
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small
            .rels
            .iter()
            .zip(&large.rels)
            .map(|(a, b)| a.tuples.iter().filter(|t| b.round.contains_key(*t)).count())
            .sum()
    }

    /// Number of atoms of this evaluation that lie in `set`.
    pub fn count_in(&self, set: &FactSet) -> usize {
        set.iter().filter(|a| self.contains(a)).count()
    }
}
