//! One PASS/FAIL line per acceptance criterion.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use semrd::channel::*;
use semrd::core::{delta_core_filtration_to, irredundant_core};
use semrd::datalog::FactSet;
use semrd::distortion::{closure_fidelity, distortion_matrix, set_fidelity, DistortionKind, DistortionSpec, Fraction};
use semrd::harness::example;
use semrd::harness::experiments::{run_experiment, ScenarioConfig};
use semrd::multiagent::*;
use semrd::ratedist::*;

type Check = std::result::Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Check {
    ensure!(elapsed < limit, "took {:.2?}, limit {:.0?}", elapsed, limit);
    Ok(())
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Check {
    ensure!((got - want).abs() <= tol, "{what}: got {got}, want {want} ± {tol}");
    Ok(())
}

fn qsc() -> Kernel<f64> {
    qsc_kernel(10, 0.1).unwrap()
}

fn uniform_sender() -> Distribution<f64> {
    Distribution::uniform_over(example::sender().facts()).unwrap()
}

fn closure_matrix(kb: &semrd::core::KnowledgeBase) -> semrd::distortion::DistortionMatrix<f64> {
    distortion_matrix(&DistortionSpec::new(DistortionKind::Closure, kb.clone()).unwrap(), kb.facts(), kb.facts()).unwrap()
}

fn small_instance() -> Check {
    let start = Instant::now();
    let kb = example::sender();
    let p = irredundant_core(&kb).map_err(|e| e.to_string())?;
    ensure!(p.core == example::edges(), "core {:?}", p.core);
    ensure!(p.atomicity == 4 && p.max_depth == 2, "A = {}, Dd = {}", p.atomicity, p.max_depth);
    let f = set_fidelity(&kb, &example::receiver_2()).unwrap();
    ensure!(f.core_preservation == Fraction::new(3, 4), "rho_Atom(1,2) = {}", f.core_preservation);
    ensure!(f.closure_fidelity == Fraction::new(3, 7), "F_Cn(1,2) = {}", f.closure_fidelity);
    let g = closure_fidelity(&kb, &example::receiver_2_prime()).unwrap();
    ensure!(g == Fraction::from_integer(1), "F_Cn(1,2') = {g}");
    within(start.elapsed(), Duration::from_secs(1))
}

fn capacity() -> Check {
    let start = Instant::now();
    let c = capacity_ba(&qsc(), 1e-12).unwrap().bits;
    close(c, 2.536, 1e-3, "C(W)")?;
    let closed = 10f64.log2() + 0.1 * 0.1f64.log2() + 0.9 * 0.9f64.log2() - 0.1 * 9f64.log2();
    close(c, closed, 1e-9, "closed form")?;
    within(start.elapsed(), Duration::from_secs(1))
}

fn blocklengths() -> Check {
    let c = capacity_ba(&qsc(), 1e-12).unwrap().bits;
    let b = blocklength_bounds(4, 8, c, 0.0).unwrap();
    close(b.classical, 1.183, 1e-3, "n*_H")?;
    close(b.semantic, 0.789, 1e-3, "n*_Cn")?;
    ensure!(b.ratio_exact == Some(Fraction::new(2, 3)), "ratio {:?}", b.ratio_exact);
    Ok(())
}

fn zero_distortion_rate() -> Check {
    let kb = example::sender();
    let src = uniform_sender();
    let d = closure_matrix(&kb);
    let grid = [0.0, 0.02, 0.05];
    let full = rd_curve_ba(&src, &d, &grid, 1e-11).unwrap();
    close(full.points[0].rate, 1.0, 1e-6, "R(0)")?;
    let mask = src.mask_of(&example::edges());
    close(full.points[0].rate, src.restricted_rate(&mask), 1e-6, "P_A·H(π_A)")?;
    let pa = src.mass(&mask);
    let core = example::edges();
    let core_src = Distribution::<f64>::uniform_over(&core).unwrap();
    let scaled: Vec<f64> = grid.iter().map(|g| g / pa).collect();
    let sub = rd_curve_ba(&core_src, &d.restrict_rows(&core), &scaled, 1e-11).unwrap();
    for (a, b) in full.points.iter().zip(&sub.points) {
        close(a.rate, pa * b.rate, 1e-5, &format!("decomposition at D = {}", a.distortion))?;
    }
    Ok(())
}

fn rate_delay() -> Check {
    let kb = example::sender();
    let r = rate_delay_profile_for(&kb, &uniform_sender()).unwrap();
    ensure!(r.rates_by_delta.len() == 3, "profile {:?}", r.rates_by_delta);
    for (got, want) in r.rates_by_delta.iter().zip([3.0, 1.0, 1.0]) {
        close(*got, want, 1e-9, "R(0, δ)")?;
    }
    ensure!(r.rates_by_delta.windows(2).all(|w| w[1] <= w[0]), "chain not monotone");
    let d = critical_delay(&r, 2.536).unwrap();
    ensure!(d == Some(1), "δ* = {d:?}");
    Ok(())
}

fn noise_pair() -> Check {
    let kb = example::sender();
    let w = qsc();
    let cw = capacity_ba(&w, 1e-12).unwrap().bits;
    let src = uniform_sender();
    for (label, recv) in example::receivers() {
        let ch = SemanticChannel::pinned(kb.facts(), &recv, w.clone()).unwrap();
        let k = ch.kernel().unwrap();
        let (noise, _) = channel_invariants(&kb, &recv, &k).unwrap();
        match label {
            "2" => close(noise.phi_atom, 0.0, 0.0, "Φ_Atom(1,2)")?,
            "2'" => {
                close(noise.phi_atom, 0.9, 1e-9, "Φ_Atom(1,2')")?;
                close(noise.psi_plus, 0.0, 0.0, "Ψ_+(1,2')")?;
            }
            _ => {}
        }
        let i_sem = mutual_information(&src, &k).unwrap();
        let c_sem = semantic_capacity_estimate(&kb, &recv, &ch.enc, &w, 1e-10).unwrap().bits;
        ensure!(i_sem <= c_sem + 1e-9 && c_sem <= cw + 1e-9, "pair {label}: I_sem {i_sem}, C_sem {c_sem}, C {cw}");
    }
    Ok(())
}

fn fano() -> Check {
    let src = uniform_sender();
    let mask = src.mask_of(&example::edges());
    let p_j = 1.0 - src.mass(&mask);
    close(fano_bounds(&src, &mask, 0.0, 0.0).unwrap().semantic, 1.0, 1e-12, "semantic bound at 0")?;
    for eps_a in [0.0, 0.01, 0.05] {
        let classical = fano_bounds(&src, &mask, eps_a + p_j, eps_a).unwrap().classical;
        let semantic = fano_bounds(&src, &mask, 0.0, eps_a).unwrap().semantic;
        ensure!(classical < semantic, "ε_A = {eps_a}: classical {classical} ≥ semantic {semantic}");
    }
    Ok(())
}

fn compression_table() -> Check {
    let start = Instant::now();
    let cfg = ScenarioConfig::from_json(r#"{"experiment":"compression","compression":{"core_size":1705,"closure_size":45105}}"#, ".").unwrap();
    let r = run_experiment("compression", &cfg).map_err(|e| e.to_string())?;
    let table = [
        (1705.0, 1.000, 1.000, 1.00),
        (6045.0, 0.855, 0.241, 1.17),
        (10385.0, 0.805, 0.132, 1.24),
        (14725.0, 0.775, 0.090, 1.29),
        (23405.0, 0.740, 0.054, 1.35),
        (36425.0, 0.709, 0.033, 1.41),
        (45105.0, 0.694, 0.026, 1.44),
    ];
    let cols = ["facts", "rho_comp", "rho_ent", "lambda_1"].map(|c| r.column(c).unwrap());
    ensure!(cols[0].len() == table.len(), "{} rows", cols[0].len());
    for (i, (s, comp, ent, lam)) in table.into_iter().enumerate() {
        close(cols[0][i], s, 0.0, "|S_O|")?;
        close(cols[1][i], comp, 1e-3 + 1e-12, "rho_comp")?;
        close(cols[2][i], ent, 1e-3 + 1e-12, "rho_ent")?;
        close(cols[3][i], lam, 1e-2 + 1e-12, "Lambda_1")?;
    }
    within(start.elapsed(), Duration::from_secs(1))
}

fn two_layer_code() -> Check {
    let start = Instant::now();
    let kb = example::sender();
    let s = two_layer_simulate(&kb, &example::receiver_2_prime(), &qsc(), 4, 100_000, 7).map_err(|e| e.to_string())?;
    ensure!(s.dominance_violations == 0, "{} dominance violations", s.dominance_violations);
    ensure!(s.closure_error.errors <= s.core_error.errors, "closure errors exceed core errors");
    ensure!(s.core_error.rate < 0.05 && s.closure_error.rate < 0.05, "core {} closure {}", s.core_error.rate, s.closure_error.rate);
    let clean = two_layer_simulate(&kb, &example::receiver_2_prime(), &Kernel::<f64>::identity(symbol_labels(10)), 4, 100_000, 7).unwrap();
    ensure!(clean.closure_error.errors == 0, "noiseless control: {} closure errors", clean.closure_error.errors);
    within(start.elapsed(), Duration::from_secs(30))
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> std::result::Result<(), TestCaseError>) -> Check {
    TestRunner::new(config(cases)).run(&strategy, test).map_err(|e| e.to_string())
}

fn property_suites() -> Check {
    let start = Instant::now();
    run(100, instance(6, 4, 12), |inst| {
        let kb = inst.kb();
        let engine = kb.engine();
        let cn = engine.closure(kb.facts()).unwrap().facts;
        prop_assert_eq!(to_facts(&cn), closure(&inst.rules, &inst.facts));
        prop_assert!(kb.facts().is_subset(&cn));
        let half: FactSet = kb.facts().iter().step_by(2).cloned().collect();
        prop_assert!(engine.closure(&half).unwrap().facts.is_subset(&cn));
        prop_assert_eq!(engine.closure(&cn).unwrap().facts, cn);
        Ok(())
    })?;
    run(100, instance(5, 4, 12), |inst| {
        let f = delta_core_filtration_to(&inst.kb(), 4).unwrap();
        for w in f.cores_by_delta.windows(2) {
            prop_assert!(w[1].is_subset(&w[0]));
        }
        Ok(())
    })?;
    run(100, (instance(4, 3, 10), prop::collection::vec(any::<bool>(), 32)), |(inst, mask)| {
        let kb = inst.kb();
        let cl = closure(&inst.rules, &inst.facts);
        let mut bits = mask.iter().cycle();
        let recv: Facts = cl.iter().filter(|_| *bits.next().unwrap()).cloned().collect();
        let o = overlap_decompose(&kb, &from_facts(&recv)).unwrap();
        prop_assert_eq!(o.common.len() + o.lost.len(), kb.len());
        prop_assert_eq!(o.common.len() + o.surplus.len(), recv.len());
        prop_assert_eq!(o.core_preserved.len() + o.core_lost.len(), core(&inst.rules, &inst.facts).len());
        prop_assert_eq!(o.surplus_derivable.len() + o.surplus_nonderivable.len(), o.surplus.len());
        prop_assert!(o.core_lost.is_subset(&o.lost));
        let v = fidelity_diagnosis(&kb, &from_facts(&recv)).unwrap();
        prop_assert_eq!(v.f1_weak && v.f2, closure(&inst.rules, &recv) == cl);
        prop_assert_eq!(v.closure_fidelity == Fraction::from_integer(1), v.f1_weak && v.f2);
        Ok(())
    })?;
    run(6, prop::collection::vec(0.05f64..1.0, 8), |w| {
        let kb = example::sender();
        let t: f64 = w.iter().sum();
        let src = Distribution::new(labels_of(kb.facts()), w.iter().map(|x| x / t).collect()).unwrap();
        let grid: Vec<f64> = (0..=8).map(|k| 0.12 * k as f64 / 8.0).collect();
        let r: Vec<f64> = rd_curve_ba(&src, &closure_matrix(&kb), &grid, 1e-10).unwrap().points.iter().map(|p| p.rate).collect();
        for w in r.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-6);
        }
        for w in r.windows(3) {
            prop_assert!(w[0] + w[2] >= 2.0 * w[1] - 1e-6);
        }
        Ok(())
    })?;
    run(40, prop::collection::vec(0.01f64..1.0, 36), |raw| {
        let rows = (0..6).map(|i| {
            let r = &raw[i * 6..(i + 1) * 6];
            let t: f64 = r.iter().sum();
            r.iter().map(|x| x / t).collect()
        });
        let k = Kernel::new(symbol_labels(6), symbol_labels(6), rows.collect()).unwrap();
        let c = capacity_ba(&k, 1e-10).unwrap();
        for w in c.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        Ok(())
    })?;
    within(start.elapsed(), Duration::from_secs(60))
}

fn scaling() -> Check {
    let start = Instant::now();
    let cfg = ScenarioConfig::from_json(
        r#"{"experiment":"amplification","seed":1,"seeds":[1,2,3,4,5],
            "supply_chain":[{"locations":50,"edge_probability":0.06},{"locations":200,"edge_probability":0.04},{"locations":500,"edge_probability":0.02}]}"#,
        ".",
    )
    .unwrap();
    let r = run_experiment("amplification", &cfg).map_err(|e| e.to_string())?;
    let (locs, seeds, gamma) = (r.column("locations").unwrap(), r.column("instance_seed").unwrap(), r.column("gamma_amp").unwrap());
    ensure!(gamma.iter().all(|&g| g >= 1.0), "γ_amp below 1: {gamma:?}");
    for seed in 1..=5 {
        let g: Vec<f64> = [50.0, 200.0, 500.0]
            .iter()
            .map(|&v| (0..locs.len()).find(|&i| locs[i] == v && seeds[i] == seed as f64).map(|i| gamma[i]).unwrap())
            .collect();
        ensure!(g[0] < g[1] && g[1] < g[2], "seed {seed}: γ_amp {g:?}");
    }
    let cfg = ScenarioConfig::from_json(r#"{"experiment":"fidelity","seed":1,"supply_chain":[{"locations":200,"edge_probability":0.04}],"grid":[0.25,0.5,0.75]}"#, ".").unwrap();
    let r = run_experiment("fidelity", &cfg).map_err(|e| e.to_string())?;
    for row in &r.rows {
        let (rate, phi) = (row.values[0], row.values[3]);
        ensure!(phi >= rate, "{} order: Φ({rate}) = {phi}", row.label);
    }
    within(start.elapsed(), Duration::from_secs(300))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("small-instance exact suite", small_instance),
        ("carrier capacity", capacity),
        ("blocklength estimates", blocklengths),
        ("zero-distortion semantic rate and core decomposition", zero_distortion_rate),
        ("rate-delay profile and critical delay", rate_delay),
        ("noise-pair indices and semantic capacity chain", noise_pair),
        ("Fano bounds", fano),
        ("compression table", compression_table),
        ("two-layer code Monte-Carlo", two_layer_code),
        ("property suites", property_suites),
        ("scaling experiments", scaling),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(()) => println!("PASS {:>2} {name} ({:.2?})", i + 1, start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
