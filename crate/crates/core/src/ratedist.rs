//! Semantic rate–distortion curves, rate–delay profiles, leverage factors,
//! critical delay and blocklength estimates.

use crate::channel::{labels_of, Distribution};
use crate::core::{irredundant_core, delta_core_filtration_to, CoreFiltration, CoreProfile, KnowledgeBase};
use crate::datalog::FactSet;
use crate::distortion::{DistortionKind, DistortionMatrix, Fraction};
use crate::{Error, Result, Scalar};

/// R_sem(0, δ) = P_δ·H(π_δ) for δ = 0..=𝖣_d.
#[derive(Clone, Debug, PartialEq)]
pub struct RateDelayProfile<F> {
    pub rates_by_delta: Vec<F>,
    /// ΔR(δ) = R(δ−1) − R(δ); the entry for δ = 0 is 0.
    pub marginal: Vec<F>,
    pub p_delta: Vec<F>,
    pub core_sizes: Vec<usize>,
    /// P_{B_δ}·H(π_{B_δ}) with B_δ = B^(≤𝖣_d−δ), present only when every
    /// T^n(A), n ≤ 𝖣_d, is stored in S_O.
    pub depth_bound: Option<Vec<F>>,
}

fn check_source<F: Scalar>(source: &Distribution<F>, facts: &FactSet) -> Result<()> {
    if source.labels() != labels_of(facts).as_slice() {
        return Err(Error::AlphabetMismatch("source must be over the knowledge base facts".into()));
    }
    Ok(())
}

/// Rates from a core profile and filtration.
pub fn rate_delay_profile<F: Scalar>(profile: &CoreProfile, filtration: &CoreFiltration, source: &Distribution<F>) -> Result<RateDelayProfile<F>> {
    let facts: FactSet = profile.depth_of.keys().cloned().collect();
    check_source(source, &facts)?;
    let mut rates = Vec::new();
    let mut p_delta = Vec::new();
    for core in &filtration.cores_by_delta {
        let mask = source.mask_of(core);
        p_delta.push(source.mass(&mask));
        rates.push(source.restricted_rate(&mask));
    }
    let marginal = (0..rates.len())
        .map(|d| if d == 0 { F::zero() } else { rates[d - 1] - rates[d] })
        .collect();
    Ok(RateDelayProfile {
        rates_by_delta: rates,
        marginal,
        p_delta,
        core_sizes: filtration.sizes(),
        depth_bound: None,
    })
}

/// Full profile of a knowledge base, including the depth-stratified bound
/// when the knowledge base stores every intermediate derivation.
pub fn rate_delay_profile_for<F: Scalar>(kb: &KnowledgeBase, source: &Distribution<F>) -> Result<RateDelayProfile<F>> {
    let profile = irredundant_core(kb)?;
    let filtration = delta_core_filtration_to(kb, profile.max_depth)?;
    let mut out = rate_delay_profile(&profile, &filtration, source)?;
    let within = kb.engine().iterate(&profile.core, profile.max_depth)?;
    if within.is_subset(kb.facts()) {
        let dd = profile.max_depth;
        out.depth_bound = Some(
            (0..=dd)
                .map(|delta| source.restricted_rate(&source.mask_of(&profile.strata[dd - delta])))
                .collect(),
        );
    }
    Ok(out)
}

/// δ* = min{δ : R(δ) ≤ C}, or `None` when even the terminal rate exceeds C.
pub fn critical_delay<F: Scalar>(rates: &RateDelayProfile<F>, capacity: F) -> Result<Option<usize>> {
    if !(capacity > F::zero()) {
        return Err(Error::InvalidParameter("capacity must be positive".into()));
    }
    Ok(rates.rates_by_delta.iter().position(|&r| r <= capacity))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeverageReport<F> {
    /// Λ₁ = log|S_O| / log|A|; infinite when |A| = 1 < |S_O|.
    pub lambda_1: F,
    /// Λ∞ = log|S_O| / (P_A·H(π_A)).
    pub lambda_inf: F,
    /// log|A| / log|S_O| = 1/Λ₁.
    pub rho_comp: F,
    /// P_A·H(π_A) / H(P_O).
    pub rho_ent: F,
    /// Set when |A| ≤ 1, where Λ₁ degenerates.
    pub degenerate_core: bool,
}

/// Leverage factors and compression ratios of a profiled source.
pub fn leverage_report<F: Scalar>(profile: &CoreProfile, source: &Distribution<F>) -> Result<LeverageReport<F>> {
    let facts: FactSet = profile.depth_of.keys().cloned().collect();
    check_source(source, &facts)?;
    if facts.is_empty() || profile.core.is_empty() {
        return Err(Error::InvalidParameter("leverage needs a nonempty knowledge base".into()));
    }
    let core_rate = source.restricted_rate(&source.mask_of(&profile.core));
    let (lambda_1, rho_comp, degenerate_core) = single_shot::<F>(profile.core.len(), facts.len());
    let log_s = F::count(facts.len()).log2();
    let h = source.entropy();
    Ok(LeverageReport {
        lambda_1,
        lambda_inf: if core_rate > F::zero() { log_s / core_rate } else { F::infinity() },
        rho_comp,
        rho_ent: if h > F::zero() { core_rate / h } else { F::one() },
        degenerate_core,
    })
}

fn single_shot<F: Scalar>(core: usize, kb: usize) -> (F, F, bool) {
    if core == kb {
        return (F::one(), F::one(), core <= 1);
    }
    if core <= 1 {
        return (F::infinity(), F::zero(), true);
    }
    let ratio = F::count(core).log2() / F::count(kb).log2();
    (F::one() / ratio, ratio, false)
}

/// Leverage under a uniform source from cardinalities alone, where
/// P_A·H(π_A) = (k/|S|)·log k.
pub fn uniform_leverage<F: Scalar>(core_size: usize, kb_size: usize) -> Result<LeverageReport<F>> {
    if core_size == 0 || core_size > kb_size {
        return Err(Error::InvalidParameter(format!(
            "core size {core_size} must lie in 1..={kb_size}"
        )));
    }
    let (lambda_1, rho_comp, degenerate_core) = single_shot::<F>(core_size, kb_size);
    let k = F::count(core_size);
    let s = F::count(kb_size);
    let core_rate = k / s * k.log2();
    let h = s.log2();
    Ok(LeverageReport {
        lambda_1,
        lambda_inf: if core_rate > F::zero() { h / core_rate } else { F::infinity() },
        rho_comp,
        rho_ent: if h > F::zero() { core_rate / h } else { F::one() },
        degenerate_core,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlocklengthBounds<F> {
    /// log|S_O| / C.
    pub classical: F,
    /// log|A| / C.
    pub semantic: F,
    /// ((1−ε)·log|S_O| − 1) / C.
    pub classical_converse: F,
    /// ((1−ε)·log|A| − 1) / C.
    pub semantic_converse: F,
    /// log|A| / log|S_O|.
    pub ratio: F,
    /// The same ratio as an exact fraction when |A|^n = |S_O|^m for small m, n.
    pub ratio_exact: Option<Fraction>,
}

/// Minimum blocklength estimates and Fano converse bounds.
pub fn blocklength_bounds<F: Scalar>(core_size: usize, source_size: usize, capacity: F, eps: F) -> Result<BlocklengthBounds<F>> {
    if !(capacity > F::zero()) {
        return Err(Error::InvalidParameter("capacity must be positive".into()));
    }
    if !(eps >= F::zero() && eps < F::one()) {
        return Err(Error::InvalidParameter("ε must lie in [0,1)".into()));
    }
    if core_size == 0 || core_size > source_size {
        return Err(Error::InvalidParameter("need 1 ≤ |A| ≤ |S_O|".into()));
    }
    let la = F::count(core_size).log2();
    let ls = F::count(source_size).log2();
    let ratio = if source_size == 1 { F::one() } else { la / ls };
    Ok(BlocklengthBounds {
        classical: ls / capacity,
        semantic: la / capacity,
        classical_converse: ((F::one() - eps) * ls - F::one()) / capacity,
        semantic_converse: ((F::one() - eps) * la - F::one()) / capacity,
        ratio,
        ratio_exact: log_ratio_exact(core_size as u64, source_size as u64),
    })
}

/// log a / log s as m/n when a^n = s^m with n ≤ 64.
pub fn log_ratio_exact(a: u64, s: u64) -> Option<Fraction> {
    if a == s {
        return Some(Fraction::from_integer(1));
    }
    if a == 1 {
        return (s > 1).then(|| Fraction::from_integer(0));
    }
    if s <= 1 {
        return None;
    }
    let r = (a as f64).ln() / (s as f64).ln();
    for n in 1..=64u32 {
        let m = (r * n as f64).round();
        if m < 0.0 || (r * n as f64 - m).abs() > 1e-9 {
            continue;
        }
        let m = m as u32;
        let lhs = (a as u128).checked_pow(n);
        let rhs = (s as u128).checked_pow(m);
        match (lhs, rhs) {
            (Some(x), Some(y)) if x == y => return Some(Fraction::new(m as u64, n as u64)),
            (Some(_), Some(_)) => continue,
            _ => return None,
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdPoint<F> {
    pub distortion: F,
    pub rate: F,
    /// The Lagrange multiplier of the Blahut–Arimoto solution, when used.
    pub multiplier: Option<F>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve<F> {
    pub kind: DistortionKind,
    pub points: Vec<RdPoint<F>>,
}

const SWEEP_POINTS: usize = 60;
const SWEEP_MIN: f64 = 1e-4;
const SWEEP_MAX: f64 = 1e4;
const BA_MAX_ITERATIONS: usize = 200_000;
const HIT_TOLERANCE: f64 = 1e-6;

struct Solution<F> {
    distortion: F,
    rate: F,
    q: Vec<F>,
    converged: bool,
}

struct Problem<'a, F> {
    p: &'a [F],
    d: &'a DistortionMatrix<F>,
    tol: F,
}

impl<'a, F: Scalar> Problem<'a, F> {
    fn evaluate(&self, cond: &[Vec<F>]) -> (F, F) {
        let m = self.d.cols();
        let mut out = vec![F::zero(); m];
        for (x, row) in cond.iter().enumerate() {
            for j in 0..m {
                out[j] = out[j] + self.p[x] * row[j];
            }
        }
        let mut rate = F::zero();
        let mut dist = F::zero();
        for (x, row) in cond.iter().enumerate() {
            if self.p[x] == F::zero() {
                continue;
            }
            for j in 0..m {
                let v = row[j];
                if v > F::zero() && out[j] > F::zero() {
                    rate = rate + self.p[x] * v * (v.ln() - out[j].ln()) / F::lit(std::f64::consts::LN_2);
                    dist = dist + self.p[x] * v * self.d.get(x, j);
                }
            }
        }
        (dist, rate.max(F::zero()))
    }

    /// Alternating minimisation with Q(y|x) ∝ q(y)·w(x,y), stopped when the
    /// duality gap ln max λ − Σ q'·ln λ falls below the tolerance.
    fn iterate(&self, weight: impl Fn(usize, usize) -> F, mut q: Vec<F>) -> Solution<F> {
        let (n, m) = (self.d.rows(), self.d.cols());
        let w: Vec<Vec<F>> = (0..n).map(|x| (0..m).map(|j| weight(x, j)).collect()).collect();
        let mut cond = vec![vec![F::zero(); m]; n];
        let mut converged = false;
        for _ in 0..BA_MAX_ITERATIONS {
            let mut lambda = vec![F::zero(); m];
            for (x, row) in cond.iter_mut().enumerate() {
                let mut z = F::zero();
                for j in 0..m {
                    row[j] = q[j] * w[x][j];
                    z = z + row[j];
                }
                if z > F::zero() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = *v / z;
                        lambda[j] = lambda[j] + self.p[x] * w[x][j] / z;
                    }
                }
            }
            let top = lambda.iter().copied().fold(F::zero(), F::max);
            let mean: F = q
                .iter()
                .zip(&lambda)
                .filter(|(&qj, &l)| qj > F::zero() && l > F::zero())
                .map(|(&qj, &l)| qj * l * l.ln())
                .sum();
            let gap = top.ln() - mean;
            for (qj, l) in q.iter_mut().zip(&lambda) {
                *qj = *qj * *l;
            }
            if gap < self.tol {
                converged = true;
                break;
            }
        }
        let (distortion, rate) = self.evaluate(&cond);
        Solution {
            distortion,
            rate,
            q,
            converged,
        }
    }

    fn at_multiplier(&self, beta: F, q: Vec<F>) -> Solution<F> {
        let mins: Vec<F> = (0..self.d.rows())
            .map(|x| self.d.row(x).iter().copied().fold(F::infinity(), F::min))
            .collect();
        self.iterate(|x, j| (-(beta * (self.d.get(x, j) - mins[x]))).exp(), q)
    }

    /// Minimum rate subject to zero excess distortion: every row keeps only
    /// its minimum-distortion columns.
    fn at_minimum(&self) -> Solution<F> {
        let eps = F::lit(1e-12);
        let mins: Vec<F> = (0..self.d.rows())
            .map(|x| self.d.row(x).iter().copied().fold(F::infinity(), F::min))
            .collect();
        let m = self.d.cols();
        let q = vec![F::one() / F::count(m); m];
        self.iterate(
            |x, j| if self.d.get(x, j) <= mins[x] + eps { F::one() } else { F::zero() },
            q,
        )
    }
}

/// R(D) = min I(S; Ŝ) subject to E d ≤ D at each grid value.
///
/// The minimum achievable distortion is solved on the restricted support
/// directly. Other points come from a geometric multiplier sweep followed
/// by bisection on the multiplier.
pub fn rd_curve_ba<F: Scalar>(source: &Distribution<F>, d: &DistortionMatrix<F>, grid: &[F], tol: F) -> Result<RdCurve<F>> {
    let src: Vec<String> = d.source().iter().map(|a| a.to_string()).collect();
    if source.labels() != src.as_slice() {
        return Err(Error::AlphabetMismatch("source differs from the distortion rows".into()));
    }
    if d.cols() == 0 {
        return Err(Error::InvalidParameter("empty reconstruction alphabet".into()));
    }
    if !(tol > F::zero()) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let p = source.probs();
    let problem = Problem { p, d, tol };
    let d_min: F = (0..d.rows())
        .map(|x| p[x] * d.row(x).iter().copied().fold(F::infinity(), F::min))
        .sum();
    let d_max: F = (0..d.cols())
        .map(|j| (0..d.rows()).map(|x| p[x] * d.get(x, j)).sum::<F>())
        .fold(F::infinity(), F::min);
    let slack = F::lit(1e-12);
    let mut sweep: Option<Vec<(F, Solution<F>)>> = None;
    let mut zero: Option<Solution<F>> = None;
    let mut points = Vec::new();
    for &target in grid {
        if !(target >= F::zero()) {
            return Err(Error::InvalidParameter("distortion grid values must be nonnegative".into()));
        }
        if target < d_min - slack {
            return Err(Error::Infeasible {
                target: target.to_f64().unwrap_or(f64::NAN),
                minimum: d_min.to_f64().unwrap_or(f64::NAN),
            });
        }
        if target >= d_max {
            points.push(RdPoint {
                distortion: target,
                rate: F::zero(),
                multiplier: None,
                converged: true,
            });
            continue;
        }
        let z = zero.get_or_insert_with(|| problem.at_minimum());
        if target <= d_min + slack {
            points.push(RdPoint {
                distortion: target,
                rate: z.rate,
                multiplier: None,
                converged: z.converged,
            });
            continue;
        }
        let sweep = sweep.get_or_insert_with(|| multiplier_sweep(&problem));
        points.push(hit(&problem, sweep, z, d_max, target));
    }
    Ok(RdCurve {
        kind: d.kind(),
        points,
    })
}

/// Mixes in a little uniform mass so outputs that vanished at one multiplier
/// can reappear at the next.
fn warm_start<F: Scalar>(q: &[F]) -> Vec<F> {
    let eta = F::lit(1e-3);
    let u = eta / F::count(q.len());
    q.iter().map(|&v| (F::one() - eta) * v + u).collect()
}

fn multiplier_sweep<F: Scalar>(problem: &Problem<'_, F>) -> Vec<(F, Solution<F>)> {
    let m = problem.d.cols();
    let mut q = vec![F::one() / F::count(m); m];
    let lo = SWEEP_MIN.ln();
    let hi = SWEEP_MAX.ln();
    let mut out = Vec::with_capacity(SWEEP_POINTS);
    for i in 0..SWEEP_POINTS {
        let beta = F::lit((lo + (hi - lo) * i as f64 / (SWEEP_POINTS - 1) as f64).exp());
        let sol = problem.at_multiplier(beta, q.clone());
        q = warm_start(&sol.q);
        out.push((beta, sol));
    }
    out
}

fn hit<F: Scalar>(problem: &Problem<'_, F>, sweep: &[(F, Solution<F>)], zero: &Solution<F>, d_max: F, target: F) -> RdPoint<F> {
    let tolerance = F::lit(HIT_TOLERANCE);
    // Distortion decreases along the sweep as the multiplier grows.
    let above = sweep.iter().rposition(|(_, s)| s.distortion >= target);
    let below = sweep.iter().position(|(_, s)| s.distortion <= target);
    let chord = |(d0, r0): (F, F), (d1, r1): (F, F)| {
        if d1 == d0 {
            r0.min(r1)
        } else {
            r0 + (r1 - r0) * (target - d0) / (d1 - d0)
        }
    };
    match (above, below) {
        (Some(i), Some(j)) if i < j => {
            // Both bracketing solutions lie on the curve, so the chord between
            // them is achievable and exact once the bracket collapses onto a
            // linear piece.
            let (mut lo, mut hi) = (sweep[i].0.ln(), sweep[j].0.ln());
            let mut upper = (sweep[i].1.distortion, sweep[i].1.rate);
            let mut lower = (sweep[j].1.distortion, sweep[j].1.rate, sweep[j].0);
            let mut q = sweep[i].1.q.clone();
            let mut converged = sweep[i].1.converged && sweep[j].1.converged;
            for _ in 0..200 {
                if upper.0 - lower.0 <= tolerance * F::lit(1e-4) || hi - lo < F::lit(1e-13) {
                    break;
                }
                let mid = (lo + hi) / F::lit(2.0);
                let sol = problem.at_multiplier(mid.exp(), q.clone());
                converged &= sol.converged;
                if sol.distortion <= target {
                    lower = (sol.distortion, sol.rate, mid.exp());
                    hi = mid;
                } else {
                    upper = (sol.distortion, sol.rate);
                    lo = mid;
                }
                q = warm_start(&sol.q);
            }
            RdPoint {
                distortion: target,
                rate: chord((upper.0, upper.1), (lower.0, lower.1)),
                multiplier: Some(lower.2),
                converged,
            }
        }
        (Some(i), Some(j)) if i == j => RdPoint {
            distortion: target,
            rate: sweep[i].1.rate,
            multiplier: Some(sweep[i].0),
            converged: sweep[i].1.converged,
        },
        (None, _) => {
            // Target lies between the smallest-multiplier point and D_max.
            let s = &sweep[0].1;
            RdPoint {
                distortion: target,
                rate: chord((s.distortion, s.rate), (d_max, F::zero())),
                multiplier: None,
                converged: false,
            }
        }
        _ => {
            // Target lies between the minimum distortion and the
            // largest-multiplier point.
            let s = &sweep[sweep.len() - 1].1;
            let d_min = problem.evaluate_min();
            RdPoint {
                distortion: target,
                rate: chord((d_min, zero.rate), (s.distortion, s.rate)),
                multiplier: None,
                converged: false,
            }
        }
    }
}

impl<'a, F: Scalar> Problem<'a, F> {
    fn evaluate_min(&self) -> F {
        (0..self.d.rows())
            .map(|x| self.p[x] * self.d.row(x).iter().copied().fold(F::infinity(), F::min))
            .sum()
    }
}
