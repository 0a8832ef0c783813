//! Synthetic supply-chain knowledge bases.
//!
//! Locations `l0..` are joined by a directed Erdős–Rényi graph; there are
//! ⌈V/10⌉ suppliers `s0..` and ⌈V/5⌉ items `i0..`. Each supplier produces
//! 1–3 distinct items and supplies 1–3 distinct locations, drawn uniformly.

use std::sync::{Arc, OnceLock};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core::KnowledgeBase;
use crate::datalog::{parse_program, Engine, FactSet, GroundAtom};
use crate::{Error, Result};

pub const PROGRAM: &str = "\
reachable(X,Y) :- connected(X,Y).
reachable(X,Z) :- reachable(X,Y), connected(Y,Z).
available(I,L) :- produces(S,I), supplies(S,L).
available(I,L) :- produces(S,I), supplies(S,L0), reachable(L0,L).
";

const GENERATOR_STREAM: u64 = 0;
const MATERIALIZE_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyChainSpec {
    pub locations: usize,
    pub edge_probability: f64,
    #[serde(default)]
    pub materialization_fraction: f64,
}

impl SupplyChainSpec {
    pub fn new(locations: usize, edge_probability: f64) -> Self {
        SupplyChainSpec {
            locations,
            edge_probability,
            materialization_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("edge_probability", self.edge_probability), ("materialization_fraction", self.materialization_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn suppliers(&self) -> usize {
        self.locations.div_ceil(10)
    }

    pub fn items(&self) -> usize {
        self.locations.div_ceil(5)
    }
}

/// The shared engine for the four supply-chain rules.
pub fn engine() -> Arc<Engine> {
    static ENGINE: OnceLock<Arc<Engine>> = OnceLock::new();
    ENGINE
        .get_or_init(|| Arc::new(Engine::new(parse_program(PROGRAM).expect("fixed program parses").0)))
        .clone()
}

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Base facts only; the materialization fraction of the spec is ignored here.
pub fn generate_supply_chain(spec: &SupplyChainSpec, seed: u64) -> Result<KnowledgeBase> {
    spec.validate()?;
    let mut rng = rng(seed, GENERATOR_STREAM);
    let n = spec.locations;
    let loc: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
    let mut facts = FactSet::new();
    for (i, a) in loc.iter().enumerate() {
        for (j, b) in loc.iter().enumerate() {
            if i != j && rng.gen_bool(spec.edge_probability) {
                facts.insert(GroundAtom::new("connected", &[a, b]));
            }
        }
    }
    let items = spec.items();
    if n > 0 {
        for s in 0..spec.suppliers() {
            let supplier = format!("s{s}");
            let k = rng.gen_range(1..=3usize).min(items);
            for i in index::sample(&mut rng, items, k) {
                facts.insert(GroundAtom::new("produces", &[&supplier, &format!("i{i}")]));
            }
            let k = rng.gen_range(1..=3usize).min(n);
            for l in index::sample(&mut rng, n, k) {
                facts.insert(GroundAtom::new("supplies", &[&supplier, &loc[l]]));
            }
        }
    }
    KnowledgeBase::new(engine(), facts, format!("supply-chain V={n} p={} seed={seed}", spec.edge_probability))
}

/// ⌊μ·m⌋ with a guard against representation error in μ.
pub fn shortcut_count(mu: f64, derived: usize) -> usize {
    (mu * derived as f64 + 1e-9).floor() as usize
}

/// Adds a uniform random subset of Cn(S) ∖ S of size ⌊μ·|Cn(S) ∖ S|⌋.
pub fn materialize_shortcuts(kb: &KnowledgeBase, mu: f64, seed: u64) -> Result<KnowledgeBase> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!("materialization fraction {mu} is outside [0, 1]")));
    }
    let derived: Vec<GroundAtom> = kb
        .engine()
        .evaluate(kb.facts())?
        .facts()
        .into_iter()
        .filter(|a| !kb.facts().contains(a))
        .collect();
    let k = shortcut_count(mu, derived.len());
    let mut rng = rng(seed, MATERIALIZE_STREAM);
    let mut facts = kb.facts().clone();
    facts.extend(derived.choose_multiple(&mut rng, k).cloned());
    kb.with_facts(facts, format!("{} mu={mu}", kb.label()))
}
