//! Sender/receiver analysis: overlap decomposition, feasibility conditions,
//! invariant families, broadcast bottlenecks and a two-layer code simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{
    capacity_ba, channel_invariants, end_to_end, identity_injection, mutual_information, pinned_decoder,
    semantic_capacity_estimate, Distribution, Kernel, NoisePairIndices, QualityIndices,
};
use crate::core::{irredundant_core, KnowledgeBase};
use crate::datalog::{FactSet, GroundAtom};
use crate::distortion::{closure_distortion_exact, closure_fidelity, set_fidelity, Fraction};
use crate::{Error, Result, Scalar};

/// The seven sender/receiver sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapDecomposition {
    /// S∩ = S_i ∩ S_j.
    pub common: FactSet,
    /// S− = S_i ∖ S_j.
    pub lost: FactSet,
    /// S+ = S_j ∖ S_i.
    pub surplus: FactSet,
    /// A∩ = A_i ∩ S_j.
    pub core_preserved: FactSet,
    /// A− = A_i ∖ S_j.
    pub core_lost: FactSet,
    /// S+ ∩ Cn(S_i).
    pub surplus_derivable: FactSet,
    /// S+ ∖ Cn(S_i).
    pub surplus_nonderivable: FactSet,
}

pub fn overlap_decompose(sender: &KnowledgeBase, receiver: &FactSet) -> Result<OverlapDecomposition> {
    let s = sender.facts();
    let core = irredundant_core(sender)?.core;
    let closure = sender.engine().evaluate(s)?;
    let surplus: FactSet = receiver.difference(s).cloned().collect();
    let (surplus_derivable, surplus_nonderivable) = surplus.iter().cloned().partition(|a| closure.contains(a));
    Ok(OverlapDecomposition {
        common: s.intersection(receiver).cloned().collect(),
        lost: s.difference(receiver).cloned().collect(),
        core_preserved: core.intersection(receiver).cloned().collect(),
        core_lost: core.difference(receiver).cloned().collect(),
        surplus,
        surplus_derivable,
        surplus_nonderivable,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeasibilityVerdict {
    /// F1: A_i ⊆ Cn(S_j).
    pub f1_weak: bool,
    /// H1: A_i ⊆ S_j.
    pub f1_strong: bool,
    /// F2: every surplus state is derivable by the sender.
    pub f2: bool,
    pub closure_fidelity: Fraction,
}

pub fn fidelity_diagnosis(sender: &KnowledgeBase, receiver: &FactSet) -> Result<FeasibilityVerdict> {
    let core = irredundant_core(sender)?.core;
    let receiver_closure = sender.engine().evaluate(receiver)?;
    let overlap = overlap_decompose(sender, receiver)?;
    Ok(FeasibilityVerdict {
        f1_weak: core.iter().all(|a| receiver_closure.contains(a)),
        f1_strong: core.is_subset(receiver),
        f2: overlap.surplus_nonderivable.is_empty(),
        closure_fidelity: closure_fidelity(sender, receiver)?,
    })
}

/// Identity-injection encoder, a carrier, and a decoder into the receiver.
#[derive(Clone, Debug)]
pub struct SemanticChannel<F> {
    pub enc: Kernel<F>,
    pub w: Kernel<F>,
    pub dec: Kernel<F>,
}

impl<F: Scalar> SemanticChannel<F> {
    /// Identity injection of S_O into the carrier with the pinned decoder.
    pub fn pinned(sender: &FactSet, receiver: &FactSet, w: Kernel<F>) -> Result<Self> {
        let q = w.rows();
        Ok(SemanticChannel {
            enc: identity_injection(sender, q)?,
            dec: pinned_decoder(sender, receiver, w.cols())?,
            w,
        })
    }

    /// κ_sem = D∘W∘enc.
    pub fn kernel(&self) -> Result<Kernel<F>> {
        end_to_end(&self.enc, &self.w, &self.dec)
    }
}

/// Families III, IV and VI.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFamilies<F> {
    pub noise: NoisePairIndices<F>,
    pub quality: QualityIndices<F>,
    /// I(P_O; κ_sem) at the uniform source.
    pub semantic_information: F,
    /// Ĉ_sem from the decoder search.
    pub semantic_capacity: F,
    /// C(W).
    pub carrier_capacity: F,
}

/// Families I–VI for a sender/receiver pair.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport<F> {
    /// I: 𝖠 and 𝖣_d of the sender.
    pub atomicity: usize,
    pub max_depth: usize,
    /// II: ρ_Atom and F_Cn.
    pub core_preservation: Fraction,
    pub closure_fidelity: Fraction,
    /// V: Δ𝖠 = |Atom(S_j)| − |Atom(S_i)|.
    pub atomicity_shift: i64,
    /// V: Δ𝖣_d = max over S_j of Dd(·|Atom(S_j)) − 𝖣_d.
    pub depth_shift: i64,
    /// Depth shift measured over the shared closure Cn(S_i) ∩ Cn(S_j):
    /// the deepest shared atom from Atom(S_j) versus from A_i.
    pub shared_closure_depth_shift: i64,
    /// III, IV, VI; absent without a channel.
    pub channel: Option<ChannelFamilies<F>>,
}

pub fn invariant_report<F: Scalar>(sender: &KnowledgeBase, receiver: &FactSet, channel: Option<&SemanticChannel<F>>) -> Result<InvariantReport<F>> {
    let ps = irredundant_core(sender)?;
    let rkb = sender.with_facts(receiver.clone(), "receiver")?;
    let pr = irredundant_core(&rkb)?;
    let fid = set_fidelity(sender, receiver)?;
    let engine = sender.engine();
    let from_sender = engine.evaluate(&ps.core)?;
    let from_receiver = engine.evaluate(&pr.core)?;
    let mut deepest = (0usize, 0usize);
    for (atom, d_sender) in from_sender.depths() {
        if let Some(d_receiver) = from_receiver.depth(&atom) {
            deepest.0 = deepest.0.max(d_sender);
            deepest.1 = deepest.1.max(d_receiver);
        }
    }
    let channel = match channel {
        None => None,
        Some(ch) => {
            let k = ch.kernel()?;
            let (noise, quality) = channel_invariants(sender, receiver, &k)?;
            let tol = F::lit(1e-10);
            let uniform = Distribution::uniform_over(sender.facts())?;
            Some(ChannelFamilies {
                noise,
                quality,
                semantic_information: mutual_information(&uniform, &k)?,
                semantic_capacity: semantic_capacity_estimate(sender, receiver, &ch.enc, &ch.w, tol)?.bits,
                carrier_capacity: capacity_ba(&ch.w, tol)?.bits,
            })
        }
    };
    Ok(InvariantReport {
        atomicity: ps.atomicity,
        max_depth: ps.max_depth,
        core_preservation: fid.core_preservation,
        closure_fidelity: fid.closure_fidelity,
        atomicity_shift: pr.atomicity as i64 - ps.atomicity as i64,
        depth_shift: pr.max_depth as i64 - ps.max_depth as i64,
        shared_closure_depth_shift: deepest.1 as i64 - deepest.0 as i64,
        channel,
    })
}

/// The smallest receiver vocabulary that supports closure-exact decoding: A.
pub fn min_vocabulary(sender: &KnowledgeBase) -> Result<FactSet> {
    Ok(irredundant_core(sender)?.core)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceiverVerdict {
    pub label: String,
    /// BH1: A ⊆ S_j.
    pub bh1: bool,
    /// BH2: no non-derivable surplus.
    pub bh2: bool,
    /// F1: A ⊆ Cn(S_j).
    pub f1_weak: bool,
    pub closure_fidelity: Fraction,
}

impl ReceiverVerdict {
    pub fn compliant(&self) -> bool {
        self.bh1 && self.bh2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BroadcastReport<F> {
    pub receivers: Vec<ReceiverVerdict>,
    /// Receivers whose vocabulary cannot derive the sender's core.
    pub bottlenecks: Vec<String>,
    pub all_compliant: bool,
    /// n*_bc = log₂|A| / C, which does not depend on the receivers.
    pub blocklength: F,
    /// ⌈n*_bc⌉.
    pub channel_uses: usize,
}

pub fn broadcast_diagnose<F: Scalar>(sender: &KnowledgeBase, receivers: &[(String, FactSet)], capacity: F) -> Result<BroadcastReport<F>> {
    if !(capacity > F::zero()) {
        return Err(Error::InvalidParameter("capacity must be positive".into()));
    }
    let core = irredundant_core(sender)?.core;
    let mut verdicts = Vec::new();
    for (label, r) in receivers {
        let v = fidelity_diagnosis(sender, r)?;
        verdicts.push(ReceiverVerdict {
            label: label.clone(),
            bh1: v.f1_strong,
            bh2: v.f2,
            f1_weak: v.f1_weak,
            closure_fidelity: v.closure_fidelity,
        });
    }
    let blocklength = F::count(core.len().max(1)).log2() / capacity;
    Ok(BroadcastReport {
        bottlenecks: verdicts.iter().filter(|v| !v.f1_weak).map(|v| v.label.clone()).collect(),
        all_compliant: verdicts.iter().all(ReceiverVerdict::compliant),
        channel_uses: blocklength.ceil().to_usize().unwrap_or(usize::MAX),
        blocklength,
        receivers: verdicts,
    })
}

/// An empirical error rate with its Wilson 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub errors: u64,
    pub rate: f64,
    pub half_width: f64,
}

impl RateEstimate {
    fn new(errors: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = errors as f64 / n;
        let z = 1.959_963_984_540_054_f64;
        let half_width = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
        RateEstimate {
            errors,
            rate: p,
            half_width,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeTrialStats {
    pub trials: u64,
    /// Decoded core element differs from the encoded one.
    pub core_error: RateEstimate,
    /// d_Cn(message, decoded) > 0.
    pub closure_error: RateEstimate,
    /// Decoded element differs from the message.
    pub hamming_error: RateEstimate,
    /// Trials with a closure error but no core error; zero by construction.
    pub dominance_violations: u64,
    /// Codewords of the core elements in canonical order.
    pub codebook: Vec<Vec<usize>>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    core: u64,
    closure: u64,
    hamming: u64,
    violations: u64,
}

/// Monte-Carlo run of the two-layer code.
///
/// Core atoms get distinct random codewords drawn from the capacity-achieving
/// input distribution of `w`; every shortcut is sent with the codeword of the
/// canonical-first core atom. Trial `t` draws its randomness from stream
/// `t + 1` of a ChaCha generator seeded with `seed`; the codebook uses
/// stream 0.
pub fn two_layer_simulate<F: Scalar>(sender: &KnowledgeBase, receiver: &FactSet, w: &Kernel<F>, n: usize, trials: u64, seed: u64) -> Result<CodeTrialStats> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidParameter("need at least one trial and one channel use".into()));
    }
    let core: Vec<GroundAtom> = irredundant_core(sender)?.core.into_iter().collect();
    let missing: Vec<String> = core.iter().filter(|a| !receiver.contains(*a)).map(|a| a.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::CoreNotCovered(missing.join(", ")));
    }
    if core.is_empty() {
        return Err(Error::InvalidParameter("sender core is empty".into()));
    }
    let q_in = w.rows();
    let distinct = (q_in as f64).powi(n as i32);
    if (core.len() as f64) > distinct {
        return Err(Error::InvalidParameter(format!(
            "{} codewords do not fit into {q_in}^{n} sequences",
            core.len()
        )));
    }
    let input: Vec<f64> = capacity_ba(w, F::lit(1e-12))?
        .input
        .probs()
        .iter()
        .map(|p| p.to_f64().unwrap_or(0.0))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut codebook: Vec<Vec<usize>> = Vec::new();
    while codebook.len() < core.len() {
        let word: Vec<usize> = (0..n).map(|_| sample(&input, rng.gen())).collect();
        if !codebook.contains(&word) {
            codebook.push(word);
        }
    }
    let rows: Vec<Vec<f64>> = (0..q_in)
        .map(|x| w.row(x).iter().map(|p| p.to_f64().unwrap_or(0.0)).collect())
        .collect();
    let log_w: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
    let messages: Vec<GroundAtom> = sender.facts().iter().cloned().collect();
    let encode: Vec<usize> = messages
        .iter()
        .map(|m| core.iter().position(|a| a == m).unwrap_or(0))
        .collect();
    let mut zero = vec![vec![false; core.len()]; messages.len()];
    for (i, m) in messages.iter().enumerate() {
        for (j, a) in core.iter().enumerate() {
            zero[i][j] = closure_distortion_exact(sender, m, a)? == Fraction::from_integer(0);
        }
    }
    let chunk = 4096u64;
    let chunks = trials.div_ceil(chunk);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            let mut received = vec![0usize; n];
            for trial in c * chunk..((c + 1) * chunk).min(trials) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial + 1);
                let m = rng.gen_range(0..messages.len());
                let sent = encode[m];
                for (y, &x) in received.iter_mut().zip(&codebook[sent]) {
                    *y = sample(&rows[x], rng.gen());
                }
                let mut best = (f64::NEG_INFINITY, 0usize);
                for (k, word) in codebook.iter().enumerate() {
                    let score: f64 = word.iter().zip(&received).map(|(&x, &y)| log_w[x][y]).sum();
                    if score > best.0 {
                        best = (score, k);
                    }
                }
                let decoded = best.1;
                let core_err = decoded != sent;
                let closure_err = !zero[m][decoded];
                t.core += core_err as u64;
                t.closure += closure_err as u64;
                t.hamming += (core[decoded] != messages[m]) as u64;
                t.violations += (closure_err && !core_err) as u64;
            }
            t
        })
        .reduce(Tally::default, |a, b| Tally {
            core: a.core + b.core,
            closure: a.closure + b.closure,
            hamming: a.hamming + b.hamming,
            violations: a.violations + b.violations,
        });
    Ok(CodeTrialStats {
        trials,
        core_error: RateEstimate::new(tally.core, trials),
        closure_error: RateEstimate::new(tally.closure, trials),
        hamming_error: RateEstimate::new(tally.hamming, trials),
        dominance_violations: tally.violations,
        codebook,
    })
}

fn sample(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{qsc_kernel, symbol_labels};
    use crate::datalog::facts;
    use crate::harness::example;

    #[test]
    fn overlap_examples() {
        let kb = example::sender();
        let o = overlap_decompose(&kb, &example::receiver_2()).unwrap();
        assert_eq!(o.core_lost, facts(["Edge(a,c)"]));
        assert_eq!(o.surplus_nonderivable, facts(["Edge(d,a)"]));
        let o = overlap_decompose(&kb, &example::receiver_2_prime()).unwrap();
        assert!(o.lost.is_empty() && o.surplus.is_empty() && o.core_lost.is_empty());
        let o = overlap_decompose(&kb, &example::receiver_3()).unwrap();
        assert_eq!(o.surplus_derivable, facts(["Path(a,d)"]));
    }

    #[test]
    fn feasibility_examples() {
        let kb = example::sender();
        let v = fidelity_diagnosis(&kb, &example::receiver_2()).unwrap();
        assert!(!v.f1_weak && !v.f1_strong && !v.f2);
        assert_eq!(v.closure_fidelity, Fraction::new(3, 7));
        let v = fidelity_diagnosis(&kb, &example::receiver_2_prime()).unwrap();
        assert!(v.f1_weak && v.f1_strong && v.f2);
        let v = fidelity_diagnosis(&kb, &example::edges()).unwrap();
        assert!(v.f1_strong && v.f2);
        assert_eq!(v.closure_fidelity, Fraction::from_integer(1));
    }

    #[test]
    fn depth_shift_variants() {
        let kb = example::sender();
        let r = invariant_report::<f64>(&kb, &example::receiver_2(), None).unwrap();
        assert_eq!(r.atomicity_shift, 0);
        assert_eq!(r.depth_shift, 0);
        assert_eq!(r.shared_closure_depth_shift, 1);
        assert!(r.channel.is_none());
    }

    #[test]
    fn ideal_collapse() {
        let kb = example::sender();
        let w = Kernel::identity(symbol_labels(10));
        let ch = SemanticChannel::pinned(kb.facts(), kb.facts(), w).unwrap();
        let r = invariant_report::<f64>(&kb, kb.facts(), Some(&ch)).unwrap();
        let c = r.channel.unwrap();
        assert_eq!(c.noise.phi_atom, 1.0);
        assert_eq!(c.noise.psi_plus, 0.0);
        assert_eq!(c.quality.fidelity_index, 1.0);
        assert_eq!(c.quality.depth_expansion, 0.0);
        assert_eq!(r.closure_fidelity, Fraction::from_integer(1));
        assert_eq!((r.atomicity_shift, r.depth_shift), (0, 0));
        assert!((c.semantic_information - 3.0).abs() < 1e-9);
    }

    #[test]
    fn broadcast_example() {
        let kb = example::sender();
        let rs = vec![
            ("2".to_string(), example::receiver_2()),
            ("3".to_string(), example::receiver_3()),
        ];
        let b = broadcast_diagnose(&kb, &rs, 2.536f64).unwrap();
        assert_eq!(b.bottlenecks, vec!["2".to_string()]);
        assert!(b.receivers[1].compliant());
        assert_eq!(b.channel_uses, 1);
    }

    #[test]
    fn min_vocabulary_is_the_core() {
        let kb = example::sender();
        assert_eq!(min_vocabulary(&kb).unwrap(), example::edges());
    }

    #[test]
    fn simulation_requires_core_coverage() {
        let kb = example::sender();
        let w = qsc_kernel::<f64>(10, 0.1).unwrap();
        assert!(matches!(
            two_layer_simulate(&kb, &example::receiver_2(), &w, 2, 10, 1),
            Err(Error::CoreNotCovered(_))
        ));
    }

    #[test]
    fn simulation_is_deterministic() {
        let kb = example::sender();
        let w = qsc_kernel::<f64>(10, 0.2).unwrap();
        let a = two_layer_simulate(&kb, kb.facts(), &w, 2, 5000, 3).unwrap();
        let b = two_layer_simulate(&kb, kb.facts(), &w, 2, 5000, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dominance_violations, 0);
    }
}
