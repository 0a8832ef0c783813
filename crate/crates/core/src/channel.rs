//! Finite-alphabet kernels and sources, Blahut–Arimoto capacity, semantic
//! channel construction, noise-pair and quality indices, and Fano bounds.
//! All information quantities are in bits.

use crate::core::{irredundant_core, KnowledgeBase};
use crate::datalog::FactSet;
use crate::distortion::{distortion_matrix, DistortionKind, DistortionMatrix, DistortionSpec};
use crate::scalar::{binary_entropy, entropy};
use crate::{Error, Result, Scalar};

/// Rendered labels of a fact set in canonical order.
pub fn labels_of(facts: &FactSet) -> Vec<String> {
    facts.iter().map(|f| f.to_string()).collect()
}

/// Carrier symbol labels `0..q`.
pub fn symbol_labels(q: usize) -> Vec<String> {
    (0..q).map(|i| i.to_string()).collect()
}

/// A probability vector over a labelled alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<F> {
    labels: Vec<String>,
    probs: Vec<F>,
}

impl<F: Scalar> Distribution<F> {
    pub fn new(labels: Vec<String>, probs: Vec<F>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        check_probability_vector(&probs, "distribution")?;
        Ok(Distribution { labels, probs })
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParameter("uniform distribution over an empty alphabet".into()));
        }
        let p = F::one() / F::count(labels.len());
        let probs = vec![p; labels.len()];
        Ok(Distribution { labels, probs })
    }

    /// Uniform over a fact set.
    pub fn uniform_over(facts: &FactSet) -> Result<Self> {
        Self::uniform(labels_of(facts))
    }

    pub fn point_mass(labels: Vec<String>, at: usize) -> Result<Self> {
        if at >= labels.len() {
            return Err(Error::InvalidParameter(format!("point mass index {at} out of range")));
        }
        let mut probs = vec![F::zero(); labels.len()];
        probs[at] = F::one();
        Ok(Distribution { labels, probs })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> F {
        entropy(&self.probs)
    }

    /// Mass on the selected indices.
    pub fn mass(&self, mask: &[bool]) -> F {
        self.probs
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&p, _)| p)
            .sum()
    }

    /// P(mask)·H(π) where π is the renormalised restriction to the mask;
    /// 0 when the mask carries no mass.
    pub fn restricted_rate(&self, mask: &[bool]) -> F {
        let mass = self.mass(mask);
        if mass <= F::zero() {
            return F::zero();
        }
        let pi: Vec<F> = self
            .probs
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&p, _)| p / mass)
            .collect();
        mass * entropy(&pi)
    }

    /// Indicator of the labels that belong to `facts`.
    pub fn mask_of(&self, facts: &FactSet) -> Vec<bool> {
        let set: std::collections::HashSet<String> = labels_of(facts).into_iter().collect();
        self.labels.iter().map(|l| set.contains(l)).collect()
    }
}

fn check_probability_vector<F: Scalar>(p: &[F], what: &str) -> Result<()> {
    if p.iter().any(|x| !(*x >= F::zero())) {
        return Err(Error::NotStochastic(format!("{what} has a negative or NaN entry")));
    }
    let total: F = p.iter().copied().sum();
    if (total - F::one()).abs() > F::stochastic_tol() {
        return Err(Error::NotStochastic(format!("{what} sums to {total}")));
    }
    Ok(())
}

/// A row-stochastic matrix from an input to an output alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<F> {
    inputs: Vec<String>,
    outputs: Vec<String>,
    m: Vec<F>,
}

impl<F: Scalar> Kernel<F> {
    pub fn new(inputs: Vec<String>, outputs: Vec<String>, rows: Vec<Vec<F>>) -> Result<Self> {
        if rows.len() != inputs.len() || rows.iter().any(|r| r.len() != outputs.len()) {
            return Err(Error::AlphabetMismatch("kernel rows do not match the alphabets".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            check_probability_vector(r, &format!("kernel row {i}"))?;
        }
        Ok(Kernel {
            inputs,
            outputs,
            m: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let n = labels.len();
        let map: Vec<usize> = (0..n).collect();
        Self::deterministic(labels.clone(), labels, &map).expect("identity map is valid")
    }

    /// The kernel of a function: input i goes to output map[i].
    pub fn deterministic(inputs: Vec<String>, outputs: Vec<String>, map: &[usize]) -> Result<Self> {
        if map.len() != inputs.len() || map.iter().any(|&j| j >= outputs.len()) {
            return Err(Error::AlphabetMismatch("deterministic map out of range".into()));
        }
        let mut m = vec![F::zero(); inputs.len() * outputs.len()];
        for (i, &j) in map.iter().enumerate() {
            m[i * outputs.len() + j] = F::one();
        }
        Ok(Kernel { inputs, outputs, m })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn rows(&self) -> usize {
        self.inputs.len()
    }

    pub fn cols(&self) -> usize {
        self.outputs.len()
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.m[i * self.outputs.len() + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        let c = self.outputs.len();
        &self.m[i * c..(i + 1) * c]
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Kernel<F>) -> Result<Kernel<F>> {
        if self.outputs != next.inputs {
            return Err(Error::AlphabetMismatch(
                "output alphabet of the first kernel differs from the input of the second".into(),
            ));
        }
        let (r, k, c) = (self.rows(), self.cols(), next.cols());
        let mut m = vec![F::zero(); r * c];
        for i in 0..r {
            for l in 0..k {
                let a = self.get(i, l);
                if a == F::zero() {
                    continue;
                }
                for j in 0..c {
                    m[i * c + j] = m[i * c + j] + a * next.get(l, j);
                }
            }
        }
        Ok(Kernel {
            inputs: self.inputs.clone(),
            outputs: next.outputs.clone(),
            m,
        })
    }

    /// Output distribution under the given input probabilities.
    pub fn output_probs(&self, p: &[F]) -> Vec<F> {
        let mut q = vec![F::zero(); self.cols()];
        for (i, &pi) in p.iter().enumerate() {
            if pi == F::zero() {
                continue;
            }
            for (j, qj) in q.iter_mut().enumerate() {
                *qj = *qj + pi * self.get(i, j);
            }
        }
        q
    }
}

/// q-ary symmetric channel: 1−p on the diagonal, p/(q−1) elsewhere.
pub fn qsc_kernel<F: Scalar>(q: usize, p: F) -> Result<Kernel<F>> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q = {q} must be at least 2")));
    }
    if !(p >= F::zero() && p <= F::one()) {
        return Err(Error::InvalidParameter(format!("crossover probability {p} outside [0,1]")));
    }
    let off = p / F::count(q - 1);
    let rows = (0..q)
        .map(|i| (0..q).map(|j| if i == j { F::one() - p } else { off }).collect())
        .collect();
    Kernel::new(symbol_labels(q), symbol_labels(q), rows)
}

/// log₂q − h_b(p) − p·log₂(q−1), the capacity of `qsc_kernel(q, p)`.
pub fn qsc_capacity_closed_form<F: Scalar>(q: usize, p: F) -> F {
    F::count(q).log2() - binary_entropy(p) - p * F::count(q - 1).log2()
}

fn mutual_information_raw<F: Scalar>(p: &[F], k: &Kernel<F>) -> F {
    let q = k.output_probs(p);
    let mut total = F::zero();
    for (i, &pi) in p.iter().enumerate() {
        if pi == F::zero() {
            continue;
        }
        for (j, &qj) in q.iter().enumerate() {
            let w = k.get(i, j);
            if w > F::zero() {
                total = total + pi * w * (w.log2() - qj.log2());
            }
        }
    }
    total.max(F::zero())
}

/// I(X;Y) for X ~ source and Y drawn through `k`.
pub fn mutual_information<F: Scalar>(source: &Distribution<F>, k: &Kernel<F>) -> Result<F> {
    if source.labels != k.inputs {
        return Err(Error::AlphabetMismatch("source alphabet differs from kernel input".into()));
    }
    Ok(mutual_information_raw(&source.probs, k))
}

/// Result of a Blahut–Arimoto capacity run.
#[derive(Clone, Debug)]
pub struct Capacity<F> {
    /// Lower bound at termination; within `tol` of the capacity.
    pub bits: F,
    /// Upper bound at termination.
    pub upper: F,
    pub iterations: usize,
    /// Capacity-achieving input distribution estimate.
    pub input: Distribution<F>,
    /// I(p_t; W) before each update.
    pub trace: Vec<F>,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// C(W) by Blahut–Arimoto with the default iteration cap.
pub fn capacity_ba<F: Scalar>(k: &Kernel<F>, tol: F) -> Result<Capacity<F>> {
    capacity_ba_with(k, tol, DEFAULT_MAX_ITERATIONS)
}

/// C(W) by Blahut–Arimoto; stops when the upper and lower bounds are
/// within `tol`.
pub fn capacity_ba_with<F: Scalar>(k: &Kernel<F>, tol: F, max_iterations: usize) -> Result<Capacity<F>> {
    if !(tol > F::zero()) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = k.rows();
    if n == 0 {
        return Err(Error::InvalidParameter("kernel has no inputs".into()));
    }
    let mut p = vec![F::one() / F::count(n); n];
    let mut trace = Vec::new();
    for it in 1..=max_iterations {
        let q = k.output_probs(&p);
        let d: Vec<F> = (0..n)
            .map(|i| {
                k.row(i)
                    .iter()
                    .zip(&q)
                    .filter(|(w, _)| **w > F::zero())
                    .map(|(&w, &qj)| w * (w.log2() - qj.log2()))
                    .sum::<F>()
            })
            .collect();
        trace.push(p.iter().zip(&d).map(|(&a, &b)| a * b).sum::<F>().max(F::zero()));
        let z: F = p.iter().zip(&d).map(|(&a, &b)| a * b.exp2()).sum();
        let lower = z.log2();
        let upper = d.iter().copied().fold(F::neg_infinity(), F::max);
        if upper - lower < tol {
            return Ok(Capacity {
                bits: lower.max(F::zero()),
                upper,
                iterations: it,
                input: Distribution {
                    labels: k.inputs.clone(),
                    probs: p,
                },
                trace,
            });
        }
        for (pi, di) in p.iter_mut().zip(&d) {
            *pi = *pi * di.exp2() / z;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
    })
}

/// The end-to-end kernel D∘W∘enc.
pub fn end_to_end<F: Scalar>(enc: &Kernel<F>, w: &Kernel<F>, dec: &Kernel<F>) -> Result<Kernel<F>> {
    enc.then(w)?.then(dec)
}

/// Maps source state i to carrier symbol i.
pub fn identity_injection<F: Scalar>(source: &FactSet, q: usize) -> Result<Kernel<F>> {
    if source.len() > q {
        return Err(Error::InvalidParameter(format!(
            "{} source states do not fit into {q} carrier symbols",
            source.len()
        )));
    }
    let map: Vec<usize> = (0..source.len()).collect();
    Kernel::deterministic(labels_of(source), symbol_labels(q), &map)
}

/// The fixed decoder paired with [`identity_injection`].
///
/// Symbols of states the receiver shares decode to themselves. Symbols of
/// lost states decode to the receiver's surplus states in turn, or to the
/// canonical-first receiver state when there is no surplus. Unused symbols
/// decode to the canonical-first receiver state.
pub fn pinned_decoder<F: Scalar>(sender: &FactSet, receiver: &FactSet, q: usize) -> Result<Kernel<F>> {
    if receiver.is_empty() {
        return Err(Error::InvalidParameter("receiver vocabulary is empty".into()));
    }
    if sender.len() > q {
        return Err(Error::InvalidParameter("sender does not fit into the carrier".into()));
    }
    let recv: Vec<_> = receiver.iter().collect();
    let col = |a| recv.iter().position(|r| *r == a);
    let surplus: Vec<usize> = (0..recv.len()).filter(|&j| !sender.contains(recv[j])).collect();
    let mut lost = 0usize;
    let mut map = vec![0usize; q];
    for (i, s) in sender.iter().enumerate() {
        map[i] = match col(s) {
            Some(j) => j,
            None if surplus.is_empty() => 0,
            None => {
                lost += 1;
                surplus[(lost - 1) % surplus.len()]
            }
        };
    }
    Kernel::deterministic(symbol_labels(q), labels_of(receiver), &map)
}

/// Σ P(s)·κ(ŝ|s)·d(s,ŝ) with its per-input rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedDistortion<F> {
    pub total: F,
    pub per_input: Vec<F>,
}

pub fn expected_distortion<F: Scalar>(source: &Distribution<F>, k: &Kernel<F>, d: &DistortionMatrix<F>) -> Result<ExpectedDistortion<F>> {
    let src: Vec<String> = d.source().iter().map(|a| a.to_string()).collect();
    let rec: Vec<String> = d.recon().iter().map(|a| a.to_string()).collect();
    if source.labels != k.inputs || k.inputs != src || k.outputs != rec {
        return Err(Error::AlphabetMismatch("source, kernel and distortion shapes differ".into()));
    }
    let per_input: Vec<F> = (0..k.rows())
        .map(|i| k.row(i).iter().zip(d.row(i)).map(|(&a, &b)| a * b).sum())
        .collect();
    let total = per_input.iter().zip(&source.probs).map(|(&a, &b)| a * b).sum();
    Ok(ExpectedDistortion { total, per_input })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisePairIndices<F> {
    /// Φ_Atom: min core self-transition, 0 when a core atom is missing.
    pub phi_atom: F,
    /// Ψ_+: largest per-input mass on surplus reconstructions.
    pub psi_plus: F,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityIndices<F> {
    /// 𝖥 = 1 − max per-input expected closure distortion.
    pub fidelity_index: F,
    /// 𝖤 = max per-input expected depth distortion.
    pub depth_expansion: F,
}

/// Noise-pair and quality indices of a semantic kernel from S_O to `recon`.
pub fn channel_invariants<F: Scalar>(kb: &KnowledgeBase, recon: &FactSet, k_sem: &Kernel<F>) -> Result<(NoisePairIndices<F>, QualityIndices<F>)> {
    if k_sem.inputs != labels_of(kb.facts()) || k_sem.outputs != labels_of(recon) {
        return Err(Error::AlphabetMismatch("kernel must map S_O to the reconstruction set".into()));
    }
    let profile = irredundant_core(kb)?;
    let recon_list: Vec<_> = recon.iter().collect();
    let phi_atom = if !profile.core.is_subset(recon) {
        F::zero()
    } else {
        kb.facts()
            .iter()
            .enumerate()
            .filter(|(_, s)| profile.core.contains(*s))
            .map(|(i, s)| {
                let j = recon_list.iter().position(|r| *r == s).expect("core ⊆ recon");
                k_sem.get(i, j)
            })
            .fold(F::one(), F::min)
    };
    let surplus: Vec<usize> = (0..recon_list.len())
        .filter(|&j| !kb.facts().contains(recon_list[j]))
        .collect();
    let psi_plus = (0..k_sem.rows())
        .map(|i| surplus.iter().fold(F::zero(), |acc, &j| acc + k_sem.get(i, j)))
        .fold(F::zero(), F::max);
    let closure = DistortionSpec::new(DistortionKind::Closure, kb.clone())?;
    let depth = DistortionSpec::new(DistortionKind::Depth, kb.clone())?;
    let uniform = Distribution::uniform_over(kb.facts())?;
    let dc = distortion_matrix::<F>(&closure, kb.facts(), recon)?;
    let dd = distortion_matrix::<F>(&depth, kb.facts(), recon)?;
    let ec = expected_distortion(&uniform, k_sem, &dc)?;
    let ed = expected_distortion(&uniform, k_sem, &dd)?;
    let worst = |v: &[F]| v.iter().copied().fold(F::zero(), F::max);
    Ok((
        NoisePairIndices { phi_atom, psi_plus },
        QualityIndices {
            fidelity_index: F::one() - worst(&ec.per_input),
            depth_expansion: worst(&ed.per_input),
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanoBounds<F> {
    /// H(P_O) − h_b(ε) − ε·log₂(|S_O|−1).
    pub classical: F,
    /// P_A·H(π_A) − h_b(ε_A) − ε_A·log₂(|A|−1).
    pub semantic: F,
}

/// Fano lower bounds on the mutual information needed for error ε overall
/// and ε_A on the core.
pub fn fano_bounds<F: Scalar>(source: &Distribution<F>, core_mask: &[bool], eps: F, eps_core: F) -> Result<FanoBounds<F>> {
    if core_mask.len() != source.len() {
        return Err(Error::AlphabetMismatch("core mask length differs from the source".into()));
    }
    for e in [eps, eps_core] {
        if !(e >= F::zero() && e <= F::one()) {
            return Err(Error::InvalidParameter(format!("error probability {e} outside [0,1]")));
        }
    }
    let log_minus_one = |n: usize| if n <= 1 { F::zero() } else { F::count(n - 1).log2() };
    let core_size = core_mask.iter().filter(|&&m| m).count();
    Ok(FanoBounds {
        classical: source.entropy() - binary_entropy(eps) - eps * log_minus_one(source.len()),
        semantic: source.restricted_rate(core_mask) - binary_entropy(eps_core) - eps_core * log_minus_one(core_size),
    })
}

/// Result of the alternating decoder / input search.
#[derive(Clone, Debug)]
pub struct SemanticCapacity<F> {
    pub bits: F,
    pub decoder: Kernel<F>,
    pub input: Distribution<F>,
    pub alternations: usize,
    pub converged: bool,
}

pub const DEFAULT_MAX_ALTERNATIONS: usize = 100;

/// Ĉ_sem: alternates Blahut–Arimoto over P_O for a fixed deterministic
/// decoder with a greedy per-symbol decoder update for fixed P_O.
///
/// The search starts from [`pinned_decoder`] when the encoder is an
/// injection of S_O into the carrier, and from the all-first decoder
/// otherwise.
pub fn semantic_capacity_estimate<F: Scalar>(kb: &KnowledgeBase, recon: &FactSet, enc: &Kernel<F>, w: &Kernel<F>, tol: F) -> Result<SemanticCapacity<F>> {
    if recon.is_empty() {
        return Err(Error::InvalidParameter("reconstruction set is empty".into()));
    }
    if enc.inputs != labels_of(kb.facts()) {
        return Err(Error::AlphabetMismatch("encoder input must be S_O".into()));
    }
    let carrier = enc.then(w)?;
    let outputs = carrier.outputs.clone();
    let recon_labels = labels_of(recon);
    let q = outputs.len();
    let mut map: Vec<usize> = if q >= kb.len() && outputs == symbol_labels(q) {
        let pinned = pinned_decoder::<F>(kb.facts(), recon, q)?;
        (0..q)
            .map(|y| (0..pinned.cols()).find(|&j| pinned.get(y, j) == F::one()).unwrap_or(0))
            .collect()
    } else {
        vec![0; q]
    };
    let mut best: Option<SemanticCapacity<F>> = None;
    for alternation in 1..=DEFAULT_MAX_ALTERNATIONS {
        let dec = Kernel::deterministic(outputs.clone(), recon_labels.clone(), &map)?;
        let kernel = carrier.then(&dec)?;
        let cap = capacity_ba(&kernel, tol)?;
        let improved = best.as_ref().is_none_or(|b| cap.bits > b.bits);
        if improved {
            best = Some(SemanticCapacity {
                bits: cap.bits,
                decoder: dec,
                input: cap.input.clone(),
                alternations: alternation,
                converged: false,
            });
        }
        let next = greedy_decoder(&carrier, cap.input.probs(), recon.len(), &map);
        if next == map {
            let mut b = best.expect("at least one alternation");
            b.converged = true;
            b.alternations = alternation;
            return Ok(b);
        }
        map = next;
    }
    Ok(best.expect("at least one alternation"))
}

/// Coordinate ascent on I(S; g(Y)) over deterministic maps g, scanning
/// candidates in canonical order and moving only on strict improvement.
fn greedy_decoder<F: Scalar>(carrier: &Kernel<F>, p: &[F], recon: usize, start: &[usize]) -> Vec<usize> {
    let n = carrier.rows();
    let joint: Vec<Vec<F>> = (0..n)
        .map(|i| carrier.row(i).iter().map(|&w| p[i] * w).collect())
        .collect();
    let mi = |map: &[usize]| {
        let mut pr = vec![vec![F::zero(); recon]; n];
        for (i, row) in joint.iter().enumerate() {
            for (y, &v) in row.iter().enumerate() {
                pr[i][map[y]] = pr[i][map[y]] + v;
            }
        }
        let ps: Vec<F> = pr.iter().map(|r| r.iter().copied().sum()).collect();
        let pc: Vec<F> = (0..recon).map(|j| pr.iter().map(|r| r[j]).sum()).collect();
        let mut total = F::zero();
        for i in 0..n {
            for j in 0..recon {
                let v = pr[i][j];
                if v > F::zero() {
                    total = total + v * (v.log2() - ps[i].log2() - pc[j].log2());
                }
            }
        }
        total
    };
    let mut map = start.to_vec();
    let mut current = mi(&map);
    let gain = F::lit(1e-12);
    loop {
        let mut changed = false;
        for y in 0..map.len() {
            let keep = map[y];
            let mut best = (current, keep);
            for r in 0..recon {
                if r == keep {
                    continue;
                }
                map[y] = r;
                let v = mi(&map);
                if v > best.0 + gain {
                    best = (v, r);
                }
            }
            map[y] = best.1;
            if best.1 != keep {
                current = best.0;
                changed = true;
            }
        }
        if !changed {
            return map;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::example;

    #[test]
    fn qsc_construction() {
        let k = qsc_kernel::<f64>(10, 0.1).unwrap();
        assert_eq!(k.get(3, 3), 0.9);
        assert!((k.get(3, 4) - 0.1 / 9.0).abs() < 1e-15);
        assert_eq!(qsc_kernel::<f64>(2, 0.0).unwrap(), Kernel::identity(symbol_labels(2)));
        assert!(qsc_kernel::<f64>(1, 0.1).is_err());
        assert!(qsc_kernel::<f64>(4, 1.5).is_err());
    }

    #[test]
    fn mutual_information_cases() {
        let uniform8 = Distribution::<f64>::uniform(symbol_labels(8)).unwrap();
        let id = Kernel::identity(symbol_labels(8));
        assert!((mutual_information(&uniform8, &id).unwrap() - 3.0).abs() < 1e-12);
        let constant = Kernel::deterministic(symbol_labels(8), symbol_labels(2), &[1; 8]).unwrap();
        assert_eq!(mutual_information(&uniform8, &constant).unwrap(), 0.0);
        let bsc = qsc_kernel::<f64>(2, 0.1).unwrap();
        let u2 = Distribution::uniform(symbol_labels(2)).unwrap();
        let want = 1.0 - binary_entropy(0.1f64);
        assert!((mutual_information(&u2, &bsc).unwrap() - want).abs() < 1e-12);
        assert!(mutual_information(&uniform8, &bsc).is_err());
    }

    #[test]
    fn capacities() {
        let c = capacity_ba(&Kernel::<f64>::identity(symbol_labels(4)), 1e-12).unwrap();
        assert!((c.bits - 2.0).abs() < 1e-12);
        let c = capacity_ba(&qsc_kernel::<f64>(2, 0.1).unwrap(), 1e-12).unwrap();
        assert!((c.bits - 0.5310044064107188).abs() < 1e-6);
        let z = Kernel::new(
            symbol_labels(2),
            symbol_labels(2),
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
        )
        .unwrap();
        // Z-channel with crossover 1/2: log2(5/4).
        let c = capacity_ba(&z, 1e-10).unwrap();
        assert!((c.bits - (1.25f64).log2()).abs() < 1e-8);
        assert!(c.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn f32_capacity() {
        let c = capacity_ba(&qsc_kernel::<f32>(10, 0.1).unwrap(), 1e-5).unwrap();
        assert!((c.bits - 2.536).abs() < 1e-3);
    }

    #[test]
    fn injection_chain_diagonal() {
        let s = example::receiver_2_prime();
        let enc = identity_injection::<f64>(&s, 10).unwrap();
        let dec = pinned_decoder::<f64>(&s, &s, 10).unwrap();
        let k = end_to_end(&enc, &qsc_kernel(10, 0.1).unwrap(), &dec).unwrap();
        // The two unused symbols fold back onto the canonical-first state.
        assert!((k.get(0, 0) - (0.9 + 2.0 * 0.1 / 9.0)).abs() < 1e-12);
        for i in 1..8 {
            assert!((k.get(i, i) - 0.9).abs() < 1e-12);
        }
        for i in 0..8 {
            assert!((k.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_decoder_sends_lost_states_to_surplus() {
        let s = example::receiver_2_prime();
        let r = example::receiver_2();
        let dec = pinned_decoder::<f64>(&s, &r, 10).unwrap();
        let lost = s.iter().position(|a| a.to_string() == "Edge(a,c)").unwrap();
        let surplus = r.iter().position(|a| a.to_string() == "Edge(d,a)").unwrap();
        assert_eq!(dec.get(lost, surplus), 1.0);
    }

    #[test]
    fn fano_formulas() {
        let u = Distribution::<f64>::uniform(symbol_labels(8)).unwrap();
        let mask = [true, true, true, true, false, false, false, false];
        let b = fano_bounds(&u, &mask, 0.0, 0.0).unwrap();
        assert!((b.classical - 3.0).abs() < 1e-12);
        assert!((b.semantic - 1.0).abs() < 1e-12);
        let b = fano_bounds(&u, &mask, 0.0, 0.05).unwrap();
        let want = 1.0 - binary_entropy(0.05f64) - 0.05 * 3f64.log2();
        assert!((b.semantic - want).abs() < 1e-12);
        let single = Distribution::<f64>::uniform(symbol_labels(1)).unwrap();
        let b = fano_bounds(&single, &[true], 0.5, 0.5).unwrap();
        assert!((b.classical + 1.0).abs() < 1e-12);
    }
}
