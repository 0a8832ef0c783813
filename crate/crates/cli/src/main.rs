use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use semrd::channel::{capacity_ba, qsc_kernel, Kernel};
use semrd::core::{delta_core_filtration_to, irredundant_core, KnowledgeBase};
use semrd::datalog::{parse_atom, parse_facts_for, render_facts, FactSet};
use semrd::distortion::{distortion_matrix, pairwise_distortion, DistortionKind, DistortionSpec};
use semrd::harness::experiments::{run_experiment, ScenarioConfig, SourceConfig};
use semrd::multiagent::{broadcast_diagnose, fidelity_diagnosis, invariant_report, overlap_decompose, two_layer_simulate, SemanticChannel};
use semrd::ratedist::{critical_delay, leverage_report, rate_delay_profile_for, rd_curve_ba};
use semrd::{Distribution64, Error};

#[derive(Parser)]
#[command(name = "semrd", version, about = "Semantic rate-distortion analysis for Datalog knowledge bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Hamming,
    Closure,
    Depth,
    Delta,
}

#[derive(Subcommand)]
enum Command {
    /// Irredundant core, shortcuts, depth and δ-filtration sizes.
    Core {
        kb: PathBuf,
        /// Append |Atom_δ| per δ as CSV.
        #[arg(long)]
        filtration: bool,
    },
    /// Distortion matrix as CSV.
    Distortion {
        kb: PathBuf,
        #[arg(long, value_enum, default_value = "closure")]
        kind: Kind,
        /// Inference budget for `--kind delta`.
        #[arg(long, default_value_t = 1)]
        delta: usize,
        /// Reconstruction facts; defaults to the knowledge base itself.
        #[arg(long)]
        recon: Option<PathBuf>,
        /// CSV of (s, ŝ) pairs; emits (s, ŝ, d) instead of the matrix.
        #[arg(long, conflicts_with = "recon")]
        pairs: Option<PathBuf>,
    },
    /// Capacity of the q-ary symmetric channel.
    Capacity {
        #[arg(long, default_value_t = 10)]
        q: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Invariant families I–VI for every receiver of a scenario.
    Invariants { scenario: PathBuf },
    /// Rate-distortion curve as CSV.
    Rd {
        kb: PathBuf,
        #[arg(long, value_enum, default_value = "closure")]
        distortion: Kind,
        #[arg(long, default_value_t = 1)]
        delta: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.2,0.3")]
        grid: Vec<f64>,
        #[arg(long, default_value = "uniform")]
        source: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Rate-delay profile as CSV.
    RateDelay {
        kb: PathBuf,
        #[arg(long, default_value = "uniform")]
        source: String,
        /// Also report the critical delay for this capacity.
        #[arg(long)]
        capacity: Option<f64>,
    },
    /// Overlap decomposition and feasibility of a sender/receiver pair.
    Overlap { sender: PathBuf, receiver: PathBuf },
    /// Bottleneck diagnosis for one sender and several receivers.
    Broadcast {
        sender: PathBuf,
        #[arg(required = true)]
        receivers: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        q: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
    },
    /// Monte-Carlo run of the two-layer code; defaults to the worked example.
    Simulate {
        #[arg(long)]
        sender: Option<PathBuf>,
        #[arg(long)]
        receiver: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        q: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
    },
    /// Runs an experiment and writes its CSV.
    Experiment {
        selector: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<Error>(),
                    Some(Error::Config(_) | Error::Json(_) | Error::Syntax { .. } | Error::Arity { .. } | Error::UnsafeRule { .. } | Error::UnknownAtom(_))
                ) || c.downcast_ref::<std::io::Error>().is_some() || c.downcast_ref::<csv::Error>().is_some()
            });
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn load_kb(path: &Path) -> anyhow::Result<KnowledgeBase> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    KnowledgeBase::parse(&text, path.display().to_string()).with_context(|| format!("parsing {}", path.display()))
}

fn load_facts(kb: &KnowledgeBase, path: &Path) -> anyhow::Result<FactSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_facts_for(kb.engine().program(), &text).with_context(|| format!("parsing {}", path.display()))
}

fn source(kb: &KnowledgeBase, spec: &str) -> anyhow::Result<Distribution64> {
    let cfg = if spec == "uniform" {
        ScenarioConfig::default()
    } else {
        let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        let weights = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))?;
        ScenarioConfig {
            source: SourceConfig::Explicit { weights },
            ..ScenarioConfig::default()
        }
    };
    Ok(cfg.source_for(kb.facts())?)
}

fn kind(k: Kind, delta: usize) -> DistortionKind {
    match k {
        Kind::Hamming => DistortionKind::Hamming,
        Kind::Closure => DistortionKind::Closure,
        Kind::Depth => DistortionKind::Depth,
        Kind::Delta => DistortionKind::DeltaClosure { delta },
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Core { kb, filtration } => {
            let kb = load_kb(&kb)?;
            let p = irredundant_core(&kb)?;
            println!("facts: {}", kb.len());
            println!("atomicity: {}", p.atomicity);
            println!("max_depth: {}", p.max_depth);
            println!("shortcuts: {}", p.shortcuts.len());
            println!("core:\n{}", render_facts(&p.core));
            if filtration {
                let f = delta_core_filtration_to(&kb, p.max_depth)?;
                let mut w = csv::Writer::from_writer(std::io::stdout());
                w.write_record(["delta", "atoms"])?;
                for (delta, n) in f.sizes().into_iter().enumerate() {
                    w.write_record([delta.to_string(), n.to_string()])?;
                }
                w.flush()?;
            }
        }
        Command::Distortion { kb, kind: k, delta, recon: _, pairs: Some(pairs) } => {
            let kb = load_kb(&kb)?;
            let spec = DistortionSpec::new(kind(k, delta), kb.clone())?;
            let mut r = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_path(&pairs)
                .with_context(|| format!("reading {}", pairs.display()))?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["s", "s_hat", "d"])?;
            for (line, rec) in r.records().enumerate() {
                let rec = rec?;
                if rec.len() != 2 {
                    return Err(Error::Config(format!("{}: line {} needs two atoms", pairs.display(), line + 1)).into());
                }
                if line == 0 && rec[0].eq_ignore_ascii_case("s") {
                    continue;
                }
                let (s, s_hat) = (parse_atom(&rec[0])?, parse_atom(&rec[1])?);
                let d: f64 = pairwise_distortion(&spec, &s, &s_hat)?;
                w.write_record([s.to_string(), s_hat.to_string(), d.to_string()])?;
            }
            w.flush()?;
        }
        Command::Distortion { kb, kind: k, delta, recon, pairs: None } => {
            let kb = load_kb(&kb)?;
            let recon = match recon {
                Some(p) => load_facts(&kb, &p)?,
                None => kb.facts().clone(),
            };
            let spec = DistortionSpec::new(kind(k, delta), kb.clone())?;
            let d = distortion_matrix::<f64>(&spec, kb.facts(), &recon)?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let mut header = vec!["source".to_string()];
            header.extend(d.recon().iter().map(|a| a.to_string()));
            w.write_record(&header)?;
            for (i, s) in d.source().iter().enumerate() {
                let mut rec = vec![s.to_string()];
                rec.extend(d.row(i).iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            w.flush()?;
            if !d.unknown_columns().is_empty() {
                eprintln!("undeclared reconstruction atoms scored 1: {:?}", d.unknown_columns());
            }
        }
        Command::Capacity { q, p, tol } => {
            let c = capacity_ba(&qsc_kernel(q, p)?, tol)?;
            let closed = semrd::channel::qsc_capacity_closed_form(q, p);
            println!("capacity_bits: {:.12}", c.bits);
            println!("upper_bound: {:.12}", c.upper);
            println!("closed_form: {closed:.12}");
            println!("iterations: {}", c.iterations);
        }
        Command::Invariants { scenario } => {
            let cfg = ScenarioConfig::from_path(&scenario)?;
            let sender = cfg.load_sender()?;
            let w = cfg.channel.kernel()?;
            for (label, recv) in cfg.load_receivers(&sender)? {
                let ch = SemanticChannel::pinned(sender.facts(), &recv, w.clone())?;
                let r = invariant_report(&sender, &recv, Some(&ch))?;
                let c = r.channel.as_ref().expect("channel given");
                println!("receiver {label}");
                println!("  I   atomicity={} max_depth={}", r.atomicity, r.max_depth);
                println!("  II  core_preservation={} closure_fidelity={}", r.core_preservation, r.closure_fidelity);
                println!("  III phi_atom={:.6} psi_plus={:.6}", c.noise.phi_atom, c.noise.psi_plus);
                println!("  IV  fidelity_index={:.6} depth_expansion={:.6}", c.quality.fidelity_index, c.quality.depth_expansion);
                println!(
                    "  V   atomicity_shift={} depth_shift={} shared_closure_depth_shift={}",
                    r.atomicity_shift, r.depth_shift, r.shared_closure_depth_shift
                );
                println!(
                    "  VI  semantic_information={:.6} semantic_capacity={:.6} carrier_capacity={:.6}",
                    c.semantic_information, c.semantic_capacity, c.carrier_capacity
                );
            }
        }
        Command::Rd { kb, distortion, delta, grid, source: src, tol } => {
            let kb = load_kb(&kb)?;
            let p = source(&kb, &src)?;
            let spec = DistortionSpec::new(kind(distortion, delta), kb.clone())?;
            let d = distortion_matrix::<f64>(&spec, kb.facts(), kb.facts())?;
            let curve = rd_curve_ba(&p, &d, &grid, tol)?;
            println!("distortion,rate,multiplier,converged");
            for pt in curve.points {
                let m = pt.multiplier.map(|m| m.to_string()).unwrap_or_default();
                println!("{},{},{},{}", pt.distortion, pt.rate, m, pt.converged);
            }
        }
        Command::RateDelay { kb, source: src, capacity } => {
            let kb = load_kb(&kb)?;
            let p = source(&kb, &src)?;
            let r = rate_delay_profile_for(&kb, &p)?;
            println!("delta,core_size,mass,rate,marginal");
            for d in 0..r.rates_by_delta.len() {
                println!("{d},{},{},{},{}", r.core_sizes[d], r.p_delta[d], r.rates_by_delta[d], r.marginal[d]);
            }
            if let Some(c) = capacity {
                match critical_delay(&r, c)? {
                    Some(d) => eprintln!("critical_delay: {d}"),
                    None => eprintln!("critical_delay: infeasible"),
                }
            }
            let lev = leverage_report(&irredundant_core(&kb)?, &p)?;
            eprintln!("lambda_1: {} lambda_inf: {}", lev.lambda_1, lev.lambda_inf);
        }
        Command::Overlap { sender, receiver } => {
            let kb = load_kb(&sender)?;
            let recv = load_facts(&kb, &receiver)?;
            let o = overlap_decompose(&kb, &recv)?;
            let v = fidelity_diagnosis(&kb, &recv)?;
            for (name, set) in [
                ("common", &o.common),
                ("lost", &o.lost),
                ("surplus", &o.surplus),
                ("core_preserved", &o.core_preserved),
                ("core_lost", &o.core_lost),
                ("surplus_derivable", &o.surplus_derivable),
                ("surplus_nonderivable", &o.surplus_nonderivable),
            ] {
                let items: Vec<String> = set.iter().map(|a| a.to_string()).collect();
                println!("{name} ({}): {}", set.len(), items.join(" "));
            }
            println!("f1_weak: {} f1_strong: {} f2: {}", v.f1_weak, v.f1_strong, v.f2);
            println!("closure_fidelity: {}", v.closure_fidelity);
        }
        Command::Broadcast { sender, receivers, q, p } => {
            let kb = load_kb(&sender)?;
            let rs = receivers
                .iter()
                .map(|r| Ok((r.display().to_string(), load_facts(&kb, r)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let cap = capacity_ba(&qsc_kernel(q, p)?, 1e-12)?.bits;
            let b = broadcast_diagnose(&kb, &rs, cap)?;
            for v in &b.receivers {
                println!(
                    "{}: bh1={} bh2={} f1_weak={} closure_fidelity={}",
                    v.label, v.bh1, v.bh2, v.f1_weak, v.closure_fidelity
                );
            }
            println!("bottlenecks: {:?}", b.bottlenecks);
            println!("all_compliant: {}", b.all_compliant);
            println!("blocklength: {:.6} (channel uses {})", b.blocklength, b.channel_uses);
        }
        Command::Simulate { sender, receiver, n, trials, seed, q, p } => {
            let kb = match &sender {
                Some(s) => load_kb(s)?,
                None => semrd::harness::example::sender(),
            };
            let recv = match &receiver {
                Some(r) => load_facts(&kb, r)?,
                None => kb.facts().clone(),
            };
            let w: Kernel<f64> = qsc_kernel(q, p)?;
            let s = two_layer_simulate(&kb, &recv, &w, n, trials, seed)?;
            println!("trials: {}", s.trials);
            for (name, r) in [("core", s.core_error), ("closure", s.closure_error), ("hamming", s.hamming_error)] {
                println!("{name}_error_rate: {:.6} ± {:.6} ({} errors)", r.rate, r.half_width, r.errors);
            }
            println!("dominance_violations: {}", s.dominance_violations);
        }
        Command::Experiment { selector, config, out } => {
            let cfg = match &config {
                Some(p) => ScenarioConfig::from_path(p)?,
                None => ScenarioConfig::default(),
            };
            if let Some(named) = cfg.experiment.as_deref().filter(|n| *n != selector) {
                return Err(Error::Config(format!("scenario is for `{named}`, not `{selector}`")).into());
            }
            let result = run_experiment(&selector, &cfg)?;
            let out = out.or_else(|| cfg.output.as_ref().map(|o| cfg.resolve(o)));
            match out {
                Some(path) => result.write_csv(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?)?,
                None => result.write_csv(std::io::stdout())?,
            }
            eprintln!("{selector}: {} rows in {} ms", result.rows.len(), result.runtime_ms);
        }
    }
    Ok(())
}
