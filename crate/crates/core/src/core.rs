//! Irredundant cores, derivation-depth strata and δ-irredundant filtrations.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::datalog::{parse_program, Engine, FactSet, GroundAtom};
use crate::{Error, Result};

/// A fact set S_O together with the program that closes it.
#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    engine: Arc<Engine>,
    facts: FactSet,
    label: String,
}

impl KnowledgeBase {
    pub fn new(engine: Arc<Engine>, facts: FactSet, label: impl Into<String>) -> Result<Self> {
        for f in &facts {
            engine.program().check_atom(f)?;
        }
        Ok(KnowledgeBase {
            engine,
            facts,
            label: label.into(),
        })
    }

    /// Parses a program text; its facts become the knowledge base.
    pub fn parse(text: &str, label: impl Into<String>) -> Result<Self> {
        let (program, facts) = parse_program(text)?;
        Self::new(Arc::new(Engine::new(program)), facts, label)
    }

    /// Another knowledge base over the same program.
    pub fn with_facts(&self, facts: FactSet, label: impl Into<String>) -> Result<Self> {
        Self::new(self.engine.clone(), facts, label)
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn facts(&self) -> &FactSet {
        &self.facts
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Cn(S_O).
    pub fn closure(&self) -> Result<FactSet> {
        Ok(self.engine.closure(&self.facts)?.facts)
    }
}

/// The core A, shortcuts J, and the depth structure of S_O relative to A.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreProfile {
    pub core: FactSet,
    pub shortcuts: FactSet,
    /// 𝖠 = |A|.
    pub atomicity: usize,
    /// 𝖣_d = max over S_O of Dd(·|A), 0 for an empty set.
    pub max_depth: usize,
    /// Dd(s|A) for every s in S_O.
    pub depth_of: BTreeMap<GroundAtom, usize>,
    /// B^(≤m) for m = 0..=𝖣_d.
    pub strata: Vec<FactSet>,
}

/// Atom_δ(S_O) for δ = 0..=𝖣_d.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreFiltration {
    pub cores_by_delta: Vec<FactSet>,
}

impl CoreFiltration {
    pub fn sizes(&self) -> Vec<usize> {
        self.cores_by_delta.iter().map(|c| c.len()).collect()
    }
}

/// Deletion scan over S_O in canonical order.
pub fn irredundant_core(kb: &KnowledgeBase) -> Result<CoreProfile> {
    let order: Vec<GroundAtom> = kb.facts.iter().cloned().collect();
    irredundant_core_in_order(kb, &order)
}

/// Deletion scan over S_O in the given order, which must enumerate S_O.
pub fn irredundant_core_in_order(kb: &KnowledgeBase, order: &[GroundAtom]) -> Result<CoreProfile> {
    let listed: FactSet = order.iter().cloned().collect();
    if listed != kb.facts || order.len() != kb.facts.len() {
        return Err(Error::InvalidParameter(
            "scan order must list every fact exactly once".into(),
        ));
    }
    let program = kb.engine.program();
    // Facts whose predicate heads no rule are never derivable, so they stay
    // in `current` throughout and anything they derive is redundant.
    let fixed: FactSet = kb
        .facts
        .iter()
        .filter(|f| !program.is_idb(f.predicate()))
        .cloned()
        .collect();
    let fixed_closure = kb.engine.evaluate(&fixed)?;
    let mut current = kb.facts.clone();
    for s in order {
        if fixed.contains(s) {
            continue;
        }
        if fixed_closure.contains(s) {
            current.remove(s);
            continue;
        }
        current.remove(s);
        if !kb.engine.derives(&current, s, None)? {
            current.insert(s.clone());
        }
    }
    profile_for_core(kb, current)
}

fn profile_for_core(kb: &KnowledgeBase, core: FactSet) -> Result<CoreProfile> {
    let eval = kb.engine.evaluate(&core)?;
    let mut depth_of = BTreeMap::new();
    for f in &kb.facts {
        let d = eval
            .depth(f)
            .expect("every fact is derivable from the core");
        depth_of.insert(f.clone(), d);
    }
    let max_depth = depth_of.values().copied().max().unwrap_or(0);
    let strata = (0..=max_depth)
        .map(|m| {
            depth_of
                .iter()
                .filter(|(_, &d)| d <= m)
                .map(|(a, _)| a.clone())
                .collect()
        })
        .collect();
    let shortcuts = kb.facts.difference(&core).cloned().collect();
    Ok(CoreProfile {
        atomicity: core.len(),
        core,
        shortcuts,
        max_depth,
        depth_of,
        strata,
    })
}

/// Atom_δ = { s ∈ S_O : s ∉ T^δ(S_O ∖ {s}) } for δ = 0..=𝖣_d.
pub fn delta_core_filtration(kb: &KnowledgeBase) -> Result<CoreFiltration> {
    let profile = irredundant_core(kb)?;
    delta_core_filtration_to(kb, profile.max_depth)
}

/// The filtration up to an explicit maximum δ.
pub fn delta_core_filtration_to(kb: &KnowledgeBase, max_delta: usize) -> Result<CoreFiltration> {
    let program = kb.engine.program();
    // rederive[s] = Dd(s | S_O ∖ {s}) when at most max_delta.
    let mut rederive: BTreeMap<&GroundAtom, usize> = BTreeMap::new();
    let mut rest = kb.facts.clone();
    for s in &kb.facts {
        if !program.is_idb(s.predicate()) || max_delta == 0 {
            continue;
        }
        rest.remove(s);
        let eval = kb.engine.evaluate_until(&rest, Some(max_delta), Some(s))?;
        if let Some(d) = eval.depth(s) {
            rederive.insert(s, d);
        }
        rest.insert(s.clone());
    }
    let cores_by_delta = (0..=max_delta)
        .map(|delta| {
            kb.facts
                .iter()
                .filter(|s| rederive.get(s).is_none_or(|&d| d > delta))
                .cloned()
                .collect()
        })
        .collect();
    Ok(CoreFiltration { cores_by_delta })
}

/// Zero-distortion reconstruction sets of the core atoms and their overlaps.
#[derive(Clone, Debug, PartialEq)]
pub struct DisjointnessReport {
    /// R_Cn(a) for each core atom a.
    pub zero_sets: Vec<(GroundAtom, FactSet)>,
    /// Pairs of core atoms whose zero sets intersect, with the intersection.
    pub overlaps: Vec<(GroundAtom, GroundAtom, FactSet)>,
}

impl DisjointnessReport {
    pub fn disjoint(&self) -> bool {
        self.overlaps.is_empty()
    }
}

/// Checks that the sets R_Cn(a) = { ŝ : d_Cn(a, ŝ) = 0 } are pairwise disjoint.
pub fn core_disjointness_check(kb: &KnowledgeBase, recon: &FactSet) -> Result<DisjointnessReport> {
    let profile = irredundant_core(kb)?;
    let reference = kb.closure()?;
    let mut zero_sets = Vec::new();
    for a in &profile.core {
        let mut rest = kb.facts.clone();
        rest.remove(a);
        let mut zero = FactSet::new();
        for s_hat in recon {
            if kb.engine.program().check_atom(s_hat).is_err() {
                continue;
            }
            let mut modified = rest.clone();
            modified.insert(s_hat.clone());
            if kb.engine.closure(&modified)?.facts == reference {
                zero.insert(s_hat.clone());
            }
        }
        zero_sets.push((a.clone(), zero));
    }
    let mut overlaps = Vec::new();
    for i in 0..zero_sets.len() {
        for j in i + 1..zero_sets.len() {
            let common: FactSet = zero_sets[i].1.intersection(&zero_sets[j].1).cloned().collect();
            if !common.is_empty() {
                overlaps.push((zero_sets[i].0.clone(), zero_sets[j].0.clone(), common));
            }
        }
    }
    Ok(DisjointnessReport { zero_sets, overlaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::facts;
    use crate::harness::example;

    #[test]
    fn example_core() {
        let kb = example::sender();
        let p = irredundant_core(&kb).unwrap();
        assert_eq!(p.core, example::edges());
        assert_eq!(p.atomicity, 4);
        assert_eq!(p.max_depth, 2);
        assert_eq!(p.shortcuts.len(), 4);
        assert_eq!(p.strata.len(), 3);
        assert_eq!(p.strata[0], p.core);
        assert_eq!(p.strata[2], *kb.facts());
    }

    #[test]
    fn edb_only_and_empty() {
        let kb = example::sender().with_facts(example::edges(), "edges").unwrap();
        let p = irredundant_core(&kb).unwrap();
        assert_eq!(p.core, example::edges());
        assert_eq!(p.max_depth, 0);
        let empty = kb.with_facts(FactSet::new(), "empty").unwrap();
        let p = irredundant_core(&empty).unwrap();
        assert!(p.core.is_empty());
        assert_eq!((p.atomicity, p.max_depth), (0, 0));
        assert_eq!(p.strata, vec![FactSet::new()]);
    }

    #[test]
    fn example_filtration() {
        let f = delta_core_filtration(&example::sender()).unwrap();
        assert_eq!(f.sizes(), vec![8, 4, 4]);
        assert_eq!(f.cores_by_delta[1], example::edges());
    }

    #[test]
    fn example_zero_sets_are_disjoint() {
        let kb = example::sender();
        let r = core_disjointness_check(&kb, &kb.closure().unwrap()).unwrap();
        assert!(r.disjoint());
        for (a, zero) in &r.zero_sets {
            assert_eq!(zero, &FactSet::from([a.clone()]));
        }
    }

    #[test]
    fn mutually_derivable_atoms_overlap() {
        let kb = KnowledgeBase::parse(
            "P(X) :- R(X).\nQ(X) :- R(X).\nR(X) :- P(X), Q(X).\nP(a). Q(a).",
            "mutual",
        )
        .unwrap();
        let r = core_disjointness_check(&kb, &kb.closure().unwrap()).unwrap();
        assert_eq!(irredundant_core(&kb).unwrap().atomicity, 2);
        assert!(!r.disjoint());
        assert_eq!(r.overlaps[0].2, facts(["R(a)"]));
    }

    #[test]
    fn singleton_core_is_trivially_disjoint() {
        let kb = example::sender().with_facts(facts(["Edge(a,b)", "Path(a,b)"]), "one").unwrap();
        assert!(core_disjointness_check(&kb, &kb.closure().unwrap()).unwrap().disjoint());
    }

    #[test]
    fn order_must_enumerate_the_facts() {
        let kb = example::sender();
        assert!(irredundant_core_in_order(&kb, &[]).is_err());
    }
}
