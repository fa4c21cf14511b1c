use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;

use hk_core::graph::OpinionGraph;
use hk_core::model::{self, ArithmeticMode, ModelParams, OpinionProfile};
use hk_core::montecarlo::{self, TrialPlan};
use hk_core::verification::{self, Suite};
use hk_core::Opinion;
use serde::Serialize;

use crate::config::{parse_f64_grid, parse_opinions, parse_usize_grid, Settings};
use crate::output::{self, Metadata};
use crate::CliError;

const DEFAULT_SEED: u64 = 0;
const DEFAULT_SWEEP_TRIALS: u64 = 1000;
const DEFAULT_BOUND_TRIALS: u64 = 100_000;
const DEFAULT_CASES: u64 = 10_000;
/// Bound check slack, in confidence-interval half-widths.
pub const BOUND_SLACK_HALF_WIDTHS: f64 = 4.0;

/// Model settings common to `simulate` and `sweep`.
#[derive(Debug, Clone, Serialize)]
struct ModelConfig {
    mode: ArithmeticMode,
    max_steps: usize,
    convergence_tol: Option<f64>,
    consensus_tol: f64,
}

impl ModelConfig {
    fn from_settings(s: &Settings) -> Result<Self, CliError> {
        Ok(ModelConfig {
            mode: s.get_or("mode", ArithmeticMode::Float64)?,
            max_steps: s.get_or("max-steps", model::DEFAULT_MAX_STEPS)?,
            convergence_tol: s.get("convergence-tol")?,
            consensus_tol: s.get_or("consensus-tol", model::DEFAULT_CONSENSUS_TOL)?,
        })
    }

    fn params(&self, epsilon: f64) -> Result<ModelParams, CliError> {
        let mut p = ModelParams::new(epsilon)?.with_mode(self.mode).with_max_steps(self.max_steps);
        if let Some(tol) = self.convergence_tol {
            p.convergence_tol = tol;
        }
        p.consensus_tol = self.consensus_tol;
        p.validate()?;
        Ok(p)
    }
}

fn workers<R: Send>(s: &Settings, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    Ok(montecarlo::with_workers(s.threads()?, f)?)
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    n: usize,
    eps: f64,
    opinions: Option<Vec<f64>>,
    seed: Option<u64>,
    #[serde(flatten)]
    model: ModelConfig,
    trace: Option<PathBuf>,
    trace_opinions: bool,
    out: Option<PathBuf>,
}

/// One line of a trajectory trace.
#[derive(Debug, Serialize)]
struct TraceRecord {
    t: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    opinions: Option<Vec<f64>>,
    connected: bool,
    cluster_count: usize,
    max_gap: f64,
}

#[derive(Debug, Serialize)]
struct ClusterSummary {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    size: usize,
}

#[derive(Debug, Serialize)]
struct SimulationSummary<'a> {
    metadata: Metadata<'a, SimulateConfig>,
    converged: bool,
    converged_at: Option<usize>,
    steps: u64,
    consensus: bool,
    clusters: Vec<ClusterSummary>,
    final_opinions: Vec<f64>,
}

pub fn simulate(s: &Settings) -> Result<(), CliError> {
    let eps: f64 = s.require("eps")?;
    let explicit = s.raw("opinions").map(parse_opinions).transpose()?;
    let n = match (&explicit, s.get::<usize>("n")?) {
        (Some(ops), Some(n)) if ops.len() != n => {
            return Err(CliError::Usage(format!("--n {n} disagrees with {} opinions", ops.len())))
        }
        (Some(ops), _) => ops.len(),
        (None, Some(n)) => n,
        (None, None) => return Err(CliError::Usage("give --n or --opinions".into())),
    };
    let cfg = SimulateConfig {
        n,
        eps,
        seed: if explicit.is_none() { Some(s.get_or("seed", DEFAULT_SEED)?) } else { None },
        opinions: explicit,
        model: ModelConfig::from_settings(s)?,
        trace: s.get("trace")?,
        trace_opinions: s.flag("trace-opinions")?,
        out: s.get("out")?,
    };
    let params = cfg.model.params(eps)?;
    let initial = match (&cfg.opinions, cfg.seed) {
        (Some(ops), _) => OpinionProfile::new(ops.clone())?,
        (None, seed) => montecarlo::sample_initial(n, seed.unwrap_or(DEFAULT_SEED))?,
    };
    match params.mode {
        ArithmeticMode::Float64 => simulate_with(initial, &params, &cfg),
        ArithmeticMode::ExactRational => simulate_with(initial.to_exact(), &params, &cfg),
    }
}

fn simulate_with<T: Opinion + Display>(
    initial: OpinionProfile<T>,
    params: &ModelParams,
    cfg: &SimulateConfig,
) -> Result<(), CliError> {
    let meta = Metadata::new("simulate", cfg.seed, cfg);
    let epsilon = params.epsilon_as::<T>();
    let mut trace = cfg.trace.as_deref().map(output::create).transpose()?;
    let mut trace_err = None;
    let result = model::run_observed(&initial, params, |profile| {
        let Some(w) = trace.as_mut() else { return };
        if trace_err.is_some() {
            return;
        }
        let g = OpinionGraph::from_sorted(profile.opinions(), epsilon.clone());
        let record = TraceRecord {
            t: profile.time(),
            opinions: cfg.trace_opinions.then(|| profile.opinions().iter().map(T::to_f64).collect()),
            connected: g.is_connected(),
            cluster_count: g.components().len(),
            max_gap: g.max_gap().to_f64(),
        };
        let line = serde_json::to_string(&record).expect("trace record serializes");
        if let Err(e) = writeln!(w, "{line}") {
            trace_err = Some(e);
        }
    });
    if let (Some(path), Some(w)) = (cfg.trace.as_deref(), trace.as_mut()) {
        if let Some(e) = trace_err.take() {
            return Err(output::io_error(path, e));
        }
        w.flush().map_err(|e| output::io_error(path, e))?;
        output::write_sidecar(path, &meta)?;
    }

    let clusters: Vec<ClusterSummary> = result
        .clusters
        .iter()
        .map(|c| ClusterSummary { value: c.value.to_f64(), exact: T::EXACT.then(|| c.value.to_string()), size: c.size })
        .collect();

    let mut stdout = std::io::stdout().lock();
    let print = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "agents: {}", initial.len())?;
        writeln!(out, "epsilon: {}", params.epsilon)?;
        writeln!(out, "mode: {}", params.mode)?;
        match result.converged_at {
            Some(t) => {
                writeln!(out, "status: converged")?;
                writeln!(out, "converged_at: {t}")?;
            }
            None => writeln!(out, "status: not-converged after {} steps", params.max_steps)?,
        }
        writeln!(out, "consensus: {}", result.consensus)?;
        writeln!(out, "clusters: {}", clusters.len())?;
        for (k, c) in clusters.iter().enumerate() {
            match &c.exact {
                Some(q) => writeln!(out, "cluster {k}: value {} (exact {q}) size {}", c.value, c.size)?,
                None => writeln!(out, "cluster {k}: value {} size {}", c.value, c.size)?,
            }
        }
        Ok(())
    };
    print(&mut stdout).map_err(|e| CliError::Usage(format!("stdout: {e}")))?;

    if let Some(path) = cfg.out.as_deref() {
        let summary = SimulationSummary {
            metadata: meta,
            converged: result.converged(),
            converged_at: result.converged_at,
            steps: result.final_profile.time() - initial.time(),
            consensus: result.consensus,
            clusters,
            final_opinions: result.final_profile.opinions().iter().map(T::to_f64).collect(),
        };
        let mut w = output::create(path)?;
        serde_json::to_writer_pretty(&mut w, &summary).expect("summary serializes");
        writeln!(w).and_then(|_| w.flush()).map_err(|e| output::io_error(path, e))?;
    }

    if result.converged_at.is_none() {
        return Err(CliError::NonConvergence(format!("no fixed point within {} steps", params.max_steps)));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepConfig {
    n: Vec<usize>,
    eps: Vec<f64>,
    trials: u64,
    seed: u64,
    #[serde(flatten)]
    model: ModelConfig,
    out: Option<PathBuf>,
}

pub fn sweep(s: &Settings) -> Result<(), CliError> {
    let cfg = SweepConfig {
        n: parse_usize_grid(&s.require::<String>("n")?)?,
        eps: parse_f64_grid(&s.require::<String>("eps")?)?,
        trials: s.get_or("trials", DEFAULT_SWEEP_TRIALS)?,
        seed: s.get_or("seed", DEFAULT_SEED)?,
        model: ModelConfig::from_settings(s)?,
        out: s.get("out")?,
    };
    // epsilon is set per cell
    let base = cfg.model.params(1.0)?;
    let records = workers(s, || montecarlo::sweep(&cfg.n, &cfg.eps, cfg.trials, cfg.seed, &base))??;

    let sink = output::sink(cfg.out.as_deref())?;
    output::write_sweep_csv(sink, &records).map_err(|e| CliError::Usage(format!("writing CSV: {e}")))?;
    if let Some(path) = cfg.out.as_deref() {
        output::write_sidecar(path, &Metadata::new("sweep", Some(cfg.seed), &cfg))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyConfig {
    suites: Vec<Suite>,
    cases: u64,
    seed: u64,
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct VerifyDocument<'a> {
    metadata: Metadata<'a, VerifyConfig>,
    passed: bool,
    reports: Vec<verification::VerificationReport>,
}

fn parse_suites(spec: &str) -> Result<Vec<Suite>, CliError> {
    if spec.trim() == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    spec.split(',').map(|name| Ok(name.trim().parse::<Suite>()?)).collect()
}

pub fn verify(s: &Settings) -> Result<(), CliError> {
    let cfg = VerifyConfig {
        suites: parse_suites(s.raw("suite").unwrap_or("all"))?,
        cases: s.get_or("cases", DEFAULT_CASES)?,
        seed: s.get_or("seed", DEFAULT_SEED)?,
        out: s.get("out")?,
    };
    let reports = workers(s, || {
        cfg.suites.iter().map(|&suite| verification::run_suite(suite, cfg.cases, cfg.seed)).collect::<Vec<_>>()
    })?;

    for r in &reports {
        eprintln!(
            "{} {}: {} cases, {} exercised, {} violations ({} ms)",
            if r.passed() { "PASS" } else { "FAIL" },
            r.suite,
            r.cases,
            r.exercised,
            r.violations.len(),
            r.elapsed_ms
        );
        for v in &r.violations {
            eprintln!("  case {}: {} input={}", v.case, v.detail, v.input);
        }
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.suite.clone()).collect();
    let doc =
        VerifyDocument { metadata: Metadata::new("verify", Some(cfg.seed), &cfg), passed: failed.is_empty(), reports };
    let mut sink = output::sink(cfg.out.as_deref())?;
    serde_json::to_writer_pretty(&mut sink, &doc).expect("report serializes");
    writeln!(sink).and_then(|_| sink.flush()).map_err(|e| CliError::Usage(format!("writing report: {e}")))?;

    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

#[derive(Debug, Serialize)]
struct BoundConfig {
    n: usize,
    eps: f64,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
}

pub fn bound(s: &Settings) -> Result<(), CliError> {
    let eps: f64 = s.require("eps")?;
    let n: usize = s.require("n")?;
    let bound = verification::disconnect_bound(n, eps)?;
    let cfg = BoundConfig {
        n,
        eps,
        trials: s.get_or("trials", DEFAULT_BOUND_TRIALS)?,
        seed: s.get_or("seed", DEFAULT_SEED)?,
        out: s.get("out")?,
    };
    let plan = TrialPlan::new(n, eps, cfg.trials, cfg.seed, ModelParams::new(eps)?)?;
    let estimate = workers(s, || montecarlo::estimate_disconnect_probability(&plan))??;
    let r = &estimate.record;
    let threshold = bound + BOUND_SLACK_HALF_WIDTHS * r.half_width();
    let pass = r.p_hat <= threshold;

    println!("bound: {bound}");
    println!(
        "empirical: {} ({} of {} disconnected; 95% CI {}..{})",
        r.p_hat, r.successes, r.trials, r.ci_low, r.ci_high
    );
    println!("threshold: {threshold} (bound + {BOUND_SLACK_HALF_WIDTHS} half-widths)");
    println!("check: {}", if pass { "PASS" } else { "FAIL" });

    if let Some(path) = cfg.out.as_deref() {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(output::create(path)?);
        let write = |w: &mut csv::Writer<_>| -> csv::Result<()> {
            w.write_record([
                "n",
                "epsilon",
                "trials",
                "disconnected",
                "p_hat",
                "ci_low",
                "ci_high",
                "bound",
                "threshold",
                "pass",
                "master_seed",
            ])?;
            w.write_record([
                n.to_string(),
                eps.to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                r.p_hat.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
                bound.to_string(),
                threshold.to_string(),
                pass.to_string(),
                cfg.seed.to_string(),
            ])?;
            w.flush()?;
            Ok(())
        };
        write(&mut w).map_err(|e| CliError::Usage(format!("writing CSV: {e}")))?;
        output::write_sidecar(path, &Metadata::new("bound", Some(cfg.seed), &cfg))?;
    }

    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!("empirical {} exceeds {threshold}", r.p_hat)))
    }
}
