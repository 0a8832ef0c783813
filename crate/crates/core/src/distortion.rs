//! Single-letter distortions between source and reconstruction atoms, and
//! exact set-level fidelity measures.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::core::{irredundant_core, KnowledgeBase};
use crate::datalog::{Evaluation, FactSet, GroundAtom};
use crate::{Error, Result, Scalar};

/// Exact ratio of set cardinalities.
pub type Fraction = Ratio<u64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DistortionKind {
    Hamming,
    Closure,
    Depth,
    /// α·d_H + β·d_Cn + γ·d_Dd.
    Composite { alpha: f64, beta: f64, gamma: f64 },
    /// 0 iff S_O ⊆ T^δ((S_O ∖ {s}) ∪ {ŝ}).
    DeltaClosure { delta: usize },
}

impl DistortionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistortionKind::Hamming => "hamming",
            DistortionKind::Closure => "closure",
            DistortionKind::Depth => "depth",
            DistortionKind::Composite { .. } => "composite",
            DistortionKind::DeltaClosure { .. } => "delta_closure",
        }
    }
}

/// A distortion kind bound to its reference knowledge base.
#[derive(Clone, Debug)]
pub struct DistortionSpec {
    kind: DistortionKind,
    reference: KnowledgeBase,
}

impl DistortionSpec {
    pub fn new(kind: DistortionKind, reference: KnowledgeBase) -> Result<Self> {
        if let DistortionKind::Composite { alpha, beta, gamma } = kind {
            let ok = [alpha, beta, gamma].iter().all(|w| *w >= 0.0 && w.is_finite())
                && (alpha + beta + gamma - 1.0).abs() <= 1e-12;
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "composite weights ({alpha}, {beta}, {gamma}) must be nonnegative and sum to 1"
                )));
            }
        }
        Ok(DistortionSpec { kind, reference })
    }

    pub fn kind(&self) -> DistortionKind {
        self.kind
    }

    pub fn reference(&self) -> &KnowledgeBase {
        &self.reference
    }
}

/// Per-spec cache of the closures every entry needs.
struct Context<'a> {
    kb: &'a KnowledgeBase,
    kind: DistortionKind,
    reference: Option<Evaluation<'a>>,
    from_core: Option<(Evaluation<'a>, usize)>,
}

impl<'a> Context<'a> {
    fn new(spec: &'a DistortionSpec) -> Result<Self> {
        let kb = &spec.reference;
        let (closure, depth) = match spec.kind {
            DistortionKind::Hamming | DistortionKind::DeltaClosure { .. } => (false, false),
            DistortionKind::Closure => (true, false),
            DistortionKind::Depth => (false, true),
            DistortionKind::Composite { beta, gamma, .. } => (beta > 0.0, gamma > 0.0),
        };
        let reference = if closure { Some(kb.engine().evaluate(kb.facts())?) } else { None };
        let from_core = if depth {
            let profile = irredundant_core(kb)?;
            Some((kb.engine().evaluate(&profile.core)?, profile.max_depth))
        } else {
            None
        };
        Ok(Context {
            kb,
            kind: spec.kind,
            reference,
            from_core,
        })
    }

    fn known(&self, atom: &GroundAtom) -> bool {
        self.kb.engine().program().check_atom(atom).is_ok()
    }

    fn substituted(&self, s: &GroundAtom, s_hat: &GroundAtom) -> FactSet {
        let mut base = self.kb.facts().clone();
        base.remove(s);
        base.insert(s_hat.clone());
        base
    }

    fn closure(&self, s: &GroundAtom, s_hat: &GroundAtom) -> Result<Fraction> {
        if s == s_hat {
            return Ok(Fraction::from_integer(0));
        }
        if !self.known(s_hat) {
            return Ok(Fraction::from_integer(1));
        }
        let reference = self.reference.as_ref().expect("closure context");
        let modified = self.kb.engine().evaluate(&self.substituted(s, s_hat))?;
        let inter = reference.intersection_len(&modified) as u64;
        let union = (reference.len() + modified.len()) as u64 - inter;
        Ok(Fraction::from_integer(1) - jaccard(inter, union, 0))
    }

    fn depth<F: Scalar>(&self, s: &GroundAtom, s_hat: &GroundAtom) -> F {
        let (eval, max_depth) = self.from_core.as_ref().expect("depth context");
        match (eval.depth(s), eval.depth(s_hat)) {
            (Some(a), Some(b)) => {
                let gap = F::count(a.abs_diff(b)) / F::count((*max_depth).max(1));
                gap.min(F::one())
            }
            _ => F::one(),
        }
    }

    fn delta_closure(&self, s: &GroundAtom, s_hat: &GroundAtom, delta: usize) -> Result<bool> {
        if s == s_hat {
            return Ok(true);
        }
        if !self.known(s_hat) {
            return Ok(false);
        }
        let eval = self
            .kb
            .engine()
            .evaluate_until(&self.substituted(s, s_hat), Some(delta), None)?;
        Ok(self.kb.facts().iter().all(|f| eval.contains(f)))
    }

    fn value<F: Scalar>(&self, s: &GroundAtom, s_hat: &GroundAtom) -> Result<F> {
        let needs_reference = !matches!(self.kind, DistortionKind::Hamming);
        if needs_reference && !self.kb.facts().contains(s) {
            return Err(Error::NotInReference(s.to_string()));
        }
        let hamming = if s == s_hat { F::zero() } else { F::one() };
        Ok(match self.kind {
            DistortionKind::Hamming => hamming,
            DistortionKind::Closure => to_scalar(self.closure(s, s_hat)?),
            DistortionKind::Depth => self.depth(s, s_hat),
            DistortionKind::Composite { alpha, beta, gamma } => {
                let mut v = F::lit(alpha) * hamming;
                if beta > 0.0 {
                    v = v + F::lit(beta) * to_scalar::<F>(self.closure(s, s_hat)?);
                }
                if gamma > 0.0 {
                    v = v + F::lit(gamma) * self.depth::<F>(s, s_hat);
                }
                v.min(F::one())
            }
            DistortionKind::DeltaClosure { delta } => {
                if self.delta_closure(s, s_hat, delta)? {
                    F::zero()
                } else {
                    F::one()
                }
            }
        })
    }
}

/// Converts an exact fraction at the reporting boundary.
pub fn to_scalar<F: Scalar>(r: Fraction) -> F {
    F::from_u64(*r.numer()).expect("fits") / F::from_u64(*r.denom()).expect("fits")
}

/// |A∩B| / |A∪B| with the given value for 0/0.
pub fn jaccard(intersection: u64, union: u64, empty: u64) -> Fraction {
    if union == 0 {
        Fraction::from_integer(empty)
    } else {
        Fraction::new(intersection, union)
    }
}

/// Jaccard index of two fact sets, 1 when both are empty.
pub fn jaccard_sets(a: &FactSet, b: &FactSet) -> Fraction {
    let inter = a.intersection(b).count() as u64;
    jaccard(inter, (a.len() + b.len()) as u64 - inter, 1)
}

/// d(s, ŝ) for the spec's kind.
pub fn pairwise_distortion<F: Scalar>(spec: &DistortionSpec, s: &GroundAtom, s_hat: &GroundAtom) -> Result<F> {
    Context::new(spec)?.value(s, s_hat)
}

/// d_Cn(s, ŝ | S_O) as an exact fraction.
pub fn closure_distortion_exact(kb: &KnowledgeBase, s: &GroundAtom, s_hat: &GroundAtom) -> Result<Fraction> {
    if !kb.facts().contains(s) {
        return Err(Error::NotInReference(s.to_string()));
    }
    let spec = DistortionSpec::new(DistortionKind::Closure, kb.clone())?;
    Context::new(&spec)?.closure(s, s_hat)
}

/// A precomputed table d(s, ŝ) over source × reconstruction atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionMatrix<F> {
    kind: DistortionKind,
    source: Vec<GroundAtom>,
    recon: Vec<GroundAtom>,
    entries: Vec<F>,
    /// Reconstruction atoms outside the program vocabulary, scored as 1.
    unknown: Vec<GroundAtom>,
}

impl<F: Scalar> DistortionMatrix<F> {
    /// Builds a matrix from explicit rows.
    pub fn from_rows(kind: DistortionKind, source: &FactSet, recon: &FactSet, rows: Vec<Vec<F>>) -> Result<Self> {
        if rows.len() != source.len() || rows.iter().any(|r| r.len() != recon.len()) {
            return Err(Error::AlphabetMismatch("distortion rows do not match the alphabets".into()));
        }
        if rows.iter().flatten().any(|v| !(*v >= F::zero())) {
            return Err(Error::InvalidParameter("distortions must be nonnegative".into()));
        }
        Ok(DistortionMatrix {
            kind,
            source: source.iter().cloned().collect(),
            recon: recon.iter().cloned().collect(),
            entries: rows.into_iter().flatten().collect(),
            unknown: Vec::new(),
        })
    }

    pub fn kind(&self) -> DistortionKind {
        self.kind
    }

    pub fn source(&self) -> &[GroundAtom] {
        &self.source
    }

    pub fn recon(&self) -> &[GroundAtom] {
        &self.recon
    }

    pub fn rows(&self) -> usize {
        self.source.len()
    }

    pub fn cols(&self) -> usize {
        self.recon.len()
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.entries[i * self.recon.len() + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        let c = self.recon.len();
        &self.entries[i * c..(i + 1) * c]
    }

    pub fn unknown_columns(&self) -> &[GroundAtom] {
        &self.unknown
    }

    /// Restriction to a subset of source rows, in canonical order.
    pub fn restrict_rows(&self, keep: &FactSet) -> Self {
        let mut source = Vec::new();
        let mut entries = Vec::new();
        for (i, s) in self.source.iter().enumerate() {
            if keep.contains(s) {
                source.push(s.clone());
                entries.extend_from_slice(self.row(i));
            }
        }
        DistortionMatrix {
            kind: self.kind,
            source,
            recon: self.recon.clone(),
            entries,
            unknown: self.unknown.clone(),
        }
    }

    pub fn max_entry(&self) -> F {
        self.entries.iter().copied().fold(F::zero(), F::max)
    }
}

/// Tabulates the spec's distortion over source × recon, one row per worker.
pub fn distortion_matrix<F: Scalar>(spec: &DistortionSpec, source: &FactSet, recon: &FactSet) -> Result<DistortionMatrix<F>> {
    let ctx = Context::new(spec)?;
    let recon_list: Vec<GroundAtom> = recon.iter().cloned().collect();
    let source_list: Vec<GroundAtom> = source.iter().cloned().collect();
    let rows: Vec<Vec<F>> = source_list
        .par_iter()
        .map(|s| recon_list.iter().map(|r| ctx.value::<F>(s, r)).collect::<Result<Vec<F>>>())
        .collect::<Result<_>>()?;
    let unknown = if matches!(spec.kind, DistortionKind::Hamming) {
        Vec::new()
    } else {
        recon_list.iter().filter(|r| !ctx.known(r)).cloned().collect()
    };
    Ok(DistortionMatrix {
        kind: spec.kind,
        source: source_list,
        recon: recon_list,
        entries: rows.into_iter().flatten().collect(),
        unknown,
    })
}

/// Closure fidelity F_Cn and core preservation ρ_Atom between two fact sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetFidelity {
    pub closure_fidelity: Fraction,
    pub core_preservation: Fraction,
}

/// F_Cn(S_a, S_b) = |Cn(S_a) ∩ Cn(S_b)| / |Cn(S_a) ∪ Cn(S_b)| and
/// ρ_Atom = |A_a ∩ S_b| / |A_a|, both with 0/0 := 1.
pub fn set_fidelity(kb_a: &KnowledgeBase, set_b: &FactSet) -> Result<SetFidelity> {
    let closure_fidelity = closure_fidelity(kb_a, set_b)?;
    let core = irredundant_core(kb_a)?.core;
    let kept = core.intersection(set_b).count() as u64;
    let core_preservation = if core.is_empty() {
        Fraction::from_integer(1)
    } else {
        Fraction::new(kept, core.len() as u64)
    };
    Ok(SetFidelity {
        closure_fidelity,
        core_preservation,
    })
}

/// F_Cn alone.
pub fn closure_fidelity(kb_a: &KnowledgeBase, set_b: &FactSet) -> Result<Fraction> {
    let engine = kb_a.engine();
    let a = engine.evaluate(kb_a.facts())?;
    let b = engine.evaluate(set_b)?;
    let inter = a.intersection_len(&b) as u64;
    Ok(jaccard(inter, (a.len() + b.len()) as u64 - inter, 1))
}
