//! Scenario files and the experiment drivers behind `semrd experiment`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Deserialize;

use super::example;
use super::supply_chain::{self, generate_supply_chain, materialize_shortcuts, shortcut_count, SupplyChainSpec};
use crate::channel::{qsc_kernel, Distribution, Kernel};
use crate::core::{irredundant_core, KnowledgeBase};
use crate::datalog::{parse_facts_for, FactSet, GroundAtom};
use crate::distortion::to_scalar;
use crate::multiagent::{fidelity_diagnosis, invariant_report, overlap_decompose, SemanticChannel};
use crate::ratedist::{blocklength_bounds, uniform_leverage};
use crate::{Error, Result};

const OVERLAP_STREAM: u64 = 2;
const FIDELITY_STREAM: u64 = 3;

pub const SELECTORS: [&str; 5] = ["amplification", "overlap", "fidelity", "compression", "smallinstance"];

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub q: usize,
    pub p: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig { q: 10, p: 0.1 }
    }
}

impl ChannelConfig {
    pub fn kernel(&self) -> Result<Kernel<f64>> {
        qsc_kernel(self.q, self.p)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    #[default]
    Uniform,
    /// Unnormalized weights keyed by rendered atom; unlisted atoms get 0.
    Explicit { weights: BTreeMap<String, f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapConfig {
    pub agents: usize,
    pub retention: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig { agents: 8, retention: 0.4 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressionConfig {
    /// Fixed |A| and |Cn(F)|; when both are set no instance is generated.
    pub core_size: Option<u64>,
    pub closure_size: Option<u64>,
    pub mu: Option<Vec<f64>>,
}

/// A scenario file. Relative paths are resolved against the file's directory.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    /// Extra seeds for `amplification`; defaults to `[seed]`.
    pub seeds: Option<Vec<u64>>,
    /// Program plus sender facts.
    pub sender: Option<PathBuf>,
    /// Receiver fact files over the sender's program.
    #[serde(default)]
    pub receivers: Vec<PathBuf>,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub source: SourceConfig,
    /// Generator settings; `amplification` runs every entry.
    pub supply_chain: Option<Vec<SupplyChainSpec>>,
    pub overlap: Option<OverlapConfig>,
    /// R grid for `fidelity`.
    pub grid: Option<Vec<f64>>,
    pub compression: Option<CompressionConfig>,
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, dir)
    }

    fn validate(&self) -> Result<()> {
        if let Some(sel) = &self.experiment {
            if !SELECTORS.contains(&sel.as_str()) {
                return Err(Error::Config(format!("unknown experiment `{sel}`")));
            }
        }
        if !(0.0..=1.0).contains(&self.channel.p) || self.channel.q < 2 {
            return Err(Error::Config("channel needs q ≥ 2 and 0 ≤ p ≤ 1".into()));
        }
        for spec in self.supply_chain.iter().flatten() {
            spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for path in self.sender.iter().chain(&self.receivers) {
            let p = self.resolve(path);
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn require_seed(&self, what: &str) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config(format!("`{what}` generates instances and needs a seed")))
    }

    /// The configured sender, or the worked example.
    pub fn load_sender(&self) -> Result<KnowledgeBase> {
        match &self.sender {
            None => Ok(example::sender()),
            Some(path) => {
                let p = self.resolve(path);
                KnowledgeBase::parse(&std::fs::read_to_string(&p)?, p.display().to_string())
            }
        }
    }

    /// The configured receivers, or the example receivers when no sender is set.
    pub fn load_receivers(&self, sender: &KnowledgeBase) -> Result<Vec<(String, FactSet)>> {
        if self.sender.is_none() && self.receivers.is_empty() {
            return Ok(example::receivers().into_iter().map(|(l, f)| (l.to_string(), f)).collect());
        }
        self.receivers
            .iter()
            .map(|path| {
                let p = self.resolve(path);
                let facts = parse_facts_for(sender.engine().program(), &std::fs::read_to_string(&p)?)?;
                Ok((p.display().to_string(), facts))
            })
            .collect()
    }

    pub fn source_for(&self, facts: &FactSet) -> Result<Distribution<f64>> {
        match &self.source {
            SourceConfig::Uniform => Distribution::uniform_over(facts),
            SourceConfig::Explicit { weights } => {
                let labels: Vec<String> = facts.iter().map(|a| a.to_string()).collect();
                for key in weights.keys() {
                    let atom: GroundAtom = key.parse()?;
                    if !facts.contains(&atom) {
                        return Err(Error::NotInReference(key.clone()));
                    }
                }
                let raw: Vec<f64> = facts.iter().map(|a| weights.get(&a.to_string()).copied().unwrap_or(0.0)).collect();
                let total: f64 = raw.iter().sum();
                if !(total > 0.0) || raw.iter().any(|w| *w < 0.0) {
                    return Err(Error::Config("source weights must be non-negative with positive total".into()));
                }
                Distribution::new(labels, raw.iter().map(|w| w / total).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub selector: String,
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub seed: Option<u64>,
    pub runtime_ms: u128,
}

impl ExperimentResult {
    fn new(selector: &str, columns: &[&str], seed: Option<u64>) -> Self {
        ExperimentResult {
            selector: selector.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            seed,
            runtime_ms: 0,
        }
    }

    fn push(&mut self, label: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(ResultRow { label: label.into(), values });
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    /// Header `label,<columns>,seed`; one line per row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("seed".into());
        w.write_record(&header)?;
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        for row in &self.rows {
            let mut rec = vec![row.label.clone()];
            rec.extend(row.values.iter().map(|v| (v + 0.0).to_string()));
            rec.push(seed.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_experiment(selector: &str, cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    let mut result = match selector {
        "amplification" => amplification(cfg)?,
        "overlap" => overlap(cfg)?,
        "fidelity" => fidelity(cfg)?,
        "compression" => compression(cfg)?,
        "smallinstance" => small_instance(cfg)?,
        other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
    };
    result.runtime_ms = start.elapsed().as_millis();
    Ok(result)
}

/// The three smallest scaling configurations.
pub fn default_scaling_specs() -> Vec<SupplyChainSpec> {
    vec![SupplyChainSpec::new(50, 0.06), SupplyChainSpec::new(200, 0.04), SupplyChainSpec::new(500, 0.02)]
}

/// A generated instance with the spec's shortcut fraction materialized.
fn instance(spec: &SupplyChainSpec, seed: u64) -> Result<KnowledgeBase> {
    let kb = generate_supply_chain(spec, seed)?;
    if spec.materialization_fraction > 0.0 {
        materialize_shortcuts(&kb, spec.materialization_fraction, seed)
    } else {
        Ok(kb)
    }
}

fn specs_or(cfg: &ScenarioConfig, default: SupplyChainSpec) -> SupplyChainSpec {
    cfg.supply_chain.as_ref().and_then(|v| v.first().copied()).unwrap_or(default)
}

fn amplification(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let seed = cfg.require_seed("amplification")?;
    let specs = cfg.supply_chain.clone().unwrap_or_else(default_scaling_specs);
    let seeds = cfg.seeds.clone().unwrap_or_else(|| vec![seed]);
    let jobs: Vec<(SupplyChainSpec, u64)> = specs.iter().flat_map(|s| seeds.iter().map(move |&k| (*s, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|(spec, s)| {
            let kb = instance(spec, *s)?;
            let ev = kb.engine().evaluate(kb.facts())?;
            let gamma = if kb.is_empty() { 1.0 } else { ev.len() as f64 / kb.len() as f64 };
            Ok(vec![
                spec.locations as f64,
                spec.edge_probability,
                *s as f64,
                kb.len() as f64,
                ev.len() as f64,
                gamma,
                ev.max_depth() as f64,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = ExperimentResult::new(
        "amplification",
        &["locations", "edge_probability", "instance_seed", "facts", "closure", "gamma_amp", "max_depth"],
        Some(seed),
    );
    for (row, (spec, _)) in rows.into_iter().zip(&jobs) {
        result.push(format!("V={} p={}", spec.locations, spec.edge_probability), row);
    }
    Ok(result)
}

fn overlap(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let seed = cfg.require_seed("overlap")?;
    let spec = specs_or(cfg, SupplyChainSpec::new(300, 0.0315));
    let oc = cfg.overlap.unwrap_or_default();
    if oc.agents < 2 || !(0.0..=1.0).contains(&oc.retention) {
        return Err(Error::Config("overlap needs at least 2 agents and retention in [0, 1]".into()));
    }
    let kb = instance(&spec, seed)?;
    let mut rng = supply_chain::rng(seed, OVERLAP_STREAM);
    let agents: Vec<FactSet> = (0..oc.agents)
        .map(|_| kb.facts().iter().filter(|_| rand::Rng::gen_bool(&mut rng, oc.retention)).cloned().collect())
        .collect();
    let engine = kb.engine();
    let closures = agents.par_iter().map(|f| engine.evaluate(f)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..oc.agents).flat_map(|i| (i + 1..oc.agents).map(move |j| (i, j))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&agents[i], &agents[j]);
            let inter = a.intersection(b).count();
            let union = a.len() + b.len() - inter;
            let (ca, cb) = (&closures[i], &closures[j]);
            let cinter = ca.intersection_len(cb);
            let cunion = ca.len() + cb.len() - cinter;
            let joint: FactSet = a.union(b).cloned().collect();
            let cjoint = engine.evaluate(&joint)?;
            let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
            Ok(vec![
                i as f64,
                j as f64,
                ratio(inter, union),
                ratio(cinter, cunion),
                ratio(cjoint.len() - cunion, cjoint.len()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = ExperimentResult::new("overlap", &["agent_i", "agent_j", "omega_syn", "omega_sem", "synergy"], Some(seed));
    let n = rows.len() as f64;
    let mean = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
    let summary = vec![f64::NAN, f64::NAN, mean(2), mean(3), mean(4)];
    for row in rows {
        result.push("pair", row);
    }
    result.push("mean", summary);
    Ok(result)
}

pub fn default_fidelity_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

fn fidelity(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let seed = cfg.require_seed("fidelity")?;
    let spec = specs_or(cfg, SupplyChainSpec::new(200, 0.04));
    let grid = cfg.grid.clone().unwrap_or_else(default_fidelity_grid);
    if grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Config("fidelity grid values must lie in [0, 1]".into()));
    }
    let kb = instance(&spec, seed)?;
    let engine = kb.engine();
    let full = engine.evaluate(kb.facts())?.len();
    let mut rng = supply_chain::rng(seed, FIDELITY_STREAM);
    let mut random: Vec<GroundAtom> = kb.facts().iter().cloned().collect();
    random.shuffle(&mut rng);
    let (mut connected, mut rest): (Vec<GroundAtom>, Vec<GroundAtom>) =
        kb.facts().iter().cloned().partition(|a| a.predicate() == "connected");
    connected.shuffle(&mut rng);
    rest.shuffle(&mut rng);
    connected.extend(rest);
    let orders = [("random", random), ("connectivity_first", connected)];
    let jobs: Vec<(usize, f64)> = (0..orders.len()).flat_map(|o| grid.iter().map(move |&r| (o, r))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(o, r)| {
            let k = (r * kb.len() as f64).round() as usize;
            let subset: FactSet = orders[o].1[..k].iter().cloned().collect();
            let cl = engine.evaluate(&subset)?.len();
            let phi = if full == 0 { 1.0 } else { cl as f64 / full as f64 };
            Ok(vec![r, k as f64, cl as f64, phi])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = ExperimentResult::new("fidelity", &["rate", "transmitted", "closure", "phi"], Some(seed));
    for (row, (o, _)) in rows.into_iter().zip(&jobs) {
        result.push(orders[*o].0, row);
    }
    Ok(result)
}

pub const DEFAULT_MU: [f64; 7] = [0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0];

fn compression(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let cc = cfg.compression.clone().unwrap_or_default();
    let mus = cc.mu.clone().unwrap_or_else(|| DEFAULT_MU.to_vec());
    if mus.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::Config("mu values must lie in [0, 1]".into()));
    }
    let columns = ["mu", "shortcuts", "facts", "core", "rho_comp", "rho_ent", "lambda_1"];
    let fixed = match (cc.core_size, cc.closure_size, &cfg.supply_chain) {
        (Some(a), Some(c), _) => Some((a, c)),
        (None, None, None) => Some((1705, 45105)),
        (None, None, Some(_)) => None,
        _ => return Err(Error::Config("core_size and closure_size must be given together".into())),
    };
    let mut result = ExperimentResult::new("compression", &columns, if fixed.is_some() { cfg.seed } else { Some(cfg.require_seed("compression")?) });
    match fixed {
        Some((a, c)) => {
            if a == 0 || c < a {
                return Err(Error::Config("need 0 < core_size ≤ closure_size".into()));
            }
            for mu in mus {
                let j = shortcut_count(mu, (c - a) as usize) as u64;
                result.push("formula", compression_row(mu, j, a, a + j)?);
            }
        }
        None => {
            let seed = cfg.require_seed("compression")?;
            let kb = generate_supply_chain(&specs_or(cfg, SupplyChainSpec::new(200, 0.04)), seed)?;
            let rows = mus
                .par_iter()
                .map(|&mu| {
                    let m = materialize_shortcuts(&kb, mu, seed)?;
                    let core = irredundant_core(&m)?.atomicity as u64;
                    compression_row(mu, m.len() as u64 - core, core, m.len() as u64)
                })
                .collect::<Result<Vec<_>>>()?;
            for row in rows {
                result.push("generated", row);
            }
        }
    }
    Ok(result)
}

fn compression_row(mu: f64, shortcuts: u64, core: u64, facts: u64) -> Result<Vec<f64>> {
    let lev = uniform_leverage::<f64>(core as usize, facts as usize)?;
    Ok(vec![mu, shortcuts as f64, facts as f64, core as f64, lev.rho_comp, lev.rho_ent, lev.lambda_1])
}

fn small_instance(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let sender = example::sender();
    let w = cfg.channel.kernel()?;
    let cap = crate::channel::capacity_ba(&w, 1e-12)?.bits;
    let core = irredundant_core(&sender)?.atomicity;
    let blocks = blocklength_bounds(core, sender.len(), cap, 0.0)?;
    let columns = [
        "lost_core", "surplus_nonderivable", "core_preservation", "closure_fidelity", "f1", "f2",
        "phi_atom", "psi_plus", "fidelity_index", "depth_expansion",
        "atomicity_shift", "depth_shift", "shared_closure_depth_shift",
        "semantic_information", "semantic_capacity", "carrier_capacity",
        "n_hamming", "n_closure", "blocklength_ratio",
    ];
    let mut result = ExperimentResult::new("smallinstance", &columns, cfg.seed);
    let labels = ["1-2", "1-2'", "1-3"];
    for ((_, recv), label) in example::receivers().into_iter().zip(labels) {
        let o = overlap_decompose(&sender, &recv)?;
        let v = fidelity_diagnosis(&sender, &recv)?;
        let ch = SemanticChannel::pinned(sender.facts(), &recv, w.clone())?;
        let r = invariant_report(&sender, &recv, Some(&ch))?;
        let c = r.channel.as_ref().expect("channel given");
        result.push(
            label,
            vec![
                o.core_lost.len() as f64,
                o.surplus_nonderivable.len() as f64,
                to_scalar(r.core_preservation),
                to_scalar(r.closure_fidelity),
                v.f1_weak as u8 as f64,
                v.f2 as u8 as f64,
                c.noise.phi_atom,
                c.noise.psi_plus,
                c.quality.fidelity_index,
                c.quality.depth_expansion,
                r.atomicity_shift as f64,
                r.depth_shift as f64,
                r.shared_closure_depth_shift as f64,
                c.semantic_information,
                c.semantic_capacity,
                c.carrier_capacity,
                blocks.classical,
                blocks.semantic,
                blocks.ratio,
            ],
        );
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ScenarioConfig {
        ScenarioConfig::from_json(json, ".").unwrap()
    }

    #[test]
    fn unknown_selector_is_a_config_error() {
        assert!(matches!(ScenarioConfig::from_json(r#"{"experiment":"nope"}"#, "."), Err(Error::Config(_))));
        assert!(matches!(run_experiment("nope", &ScenarioConfig::default()), Err(Error::Config(_))));
        assert!(matches!(ScenarioConfig::from_json(r#"{"bogus":1}"#, "."), Err(Error::Config(_))));
    }

    #[test]
    fn generated_experiments_need_a_seed() {
        assert!(matches!(run_experiment("amplification", &ScenarioConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn compression_fixed_rows() {
        let r = run_experiment("compression", &ScenarioConfig::default()).unwrap();
        assert_eq!(r.column("facts").unwrap(), vec![1705.0, 6045.0, 10385.0, 14725.0, 23405.0, 36425.0, 45105.0]);
        let rho = r.column("rho_comp").unwrap();
        assert!((rho[3] - 0.775).abs() < 1e-3);
    }

    #[test]
    fn small_instance_rows() {
        let r = run_experiment("smallinstance", &ScenarioConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.column("closure_fidelity").unwrap()[0], 3.0 / 7.0);
        assert_eq!(r.column("core_preservation").unwrap()[0], 0.75);
        assert!((r.column("n_hamming").unwrap()[0] - 1.183).abs() < 1e-3);
    }

    #[test]
    fn fidelity_full_rate_is_one() {
        let c = cfg(r#"{"seed":5,"supply_chain":[{"locations":30,"edge_probability":0.1}],"grid":[0.5,1.0]}"#);
        let r = run_experiment("fidelity", &c).unwrap();
        let phi = r.column("phi").unwrap();
        assert_eq!(phi[1], 1.0);
        assert_eq!(phi[3], 1.0);
    }

    #[test]
    fn overlap_indices_in_range() {
        let c = cfg(r#"{"seed":5,"supply_chain":[{"locations":40,"edge_probability":0.08}],"overlap":{"agents":3,"retention":0.5}}"#);
        let r = run_experiment("overlap", &c).unwrap();
        assert_eq!(r.rows.len(), 4);
        for row in &r.rows[..3] {
            for v in &row.values[2..4] {
                assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn csv_has_seed_column() {
        let c = cfg(r#"{"seed":11,"supply_chain":[{"locations":10,"edge_probability":0.2}]}"#);
        let r = run_experiment("amplification", &c).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,locations,edge_probability,instance_seed,facts,closure,gamma_amp,max_depth,seed\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",11"));
    }
}
