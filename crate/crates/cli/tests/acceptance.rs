//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::{Command, Output};
use std::time::{Duration, Instant};

use hk_core::model::{run, sync_update, sync_update_naive, ArithmeticMode, ModelParams, OpinionProfile};
use hk_core::montecarlo::{estimate_consensus_probability, rng_from_seed, uniform01, TrialPlan};
use hk_core::BigRational;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn hk(args: &[&str], threads_env: Option<&str>) -> (Output, Duration) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hk"));
    cmd.args(args);
    match threads_env {
        Some(t) => cmd.env("HK_THREADS", t),
        None => cmd.env_remove("HK_THREADS"),
    };
    let start = Instant::now();
    let out = cmd.output().expect("run hk");
    (out, start.elapsed())
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> Result<String, String> {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .map(str::to_string)
        .ok_or_else(|| format!("no `{key}` line in output"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.split_terminator("\r\n").skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn two_agent_anchor() -> Outcome {
    let (o, elapsed) = hk(&["sweep", "--n", "2", "--eps", "0.5", "--trials", "100000"], None);
    ensure(o.status.success(), || format!("exit {:?}", o.status.code()))?;
    let rows = csv_rows(&text(&o));
    let p: f64 = rows[0][5].parse().map_err(|_| "bad p_hat".to_string())?;
    let detail = format!("p_hat {p} vs 0.75, {:.2} s", elapsed.as_secs_f64());
    ensure((p - 0.75).abs() <= 0.01 && elapsed < Duration::from_secs(10), || detail.clone())?;
    Ok(detail)
}

fn wide_threshold_anchor() -> Outcome {
    let start = Instant::now();
    for n in [1, 2, 10, 100, 1000] {
        let plan = TrialPlan::new(n, 1.0, 1000, 42, ModelParams::new(1.0).unwrap()).map_err(|e| e.to_string())?;
        let r = estimate_consensus_probability(&plan).map_err(|e| e.to_string())?;
        ensure(r.p_hat == 1.0, || format!("n={n}: p_hat {}", r.p_hat))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("p_hat = 1 for n in {{1, 2, 10, 100, 1000}}, {:.2} s", elapsed.as_secs_f64()))
}

fn threshold_trend() -> Outcome {
    let (o, elapsed) = hk(&["sweep", "--n", "10,100,1000", "--eps", "0.5", "--trials", "300", "--seed", "2024"], None);
    ensure(o.status.success(), || format!("exit {:?}", o.status.code()))?;
    let rows: Vec<[f64; 3]> = csv_rows(&text(&o))
        .iter()
        .map(|r| [r[5].parse().unwrap(), r[6].parse().unwrap(), r[7].parse().unwrap()])
        .collect();
    for w in rows.windows(2) {
        let ([p0, lo0, hi0], [p1, lo1, hi1]) = (w[0], w[1]);
        let overlap = lo0 <= hi1 && lo1 <= hi0;
        ensure(p1 >= p0 || overlap, || format!("p_hat fell from {p0} to {p1} with disjoint intervals"))?;
    }
    let last = rows[2][0];
    ensure(last >= 0.95, || format!("p_hat(1000) = {last}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "p_hat {:?} for n = 10, 100, 1000, {:.2} s",
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        elapsed.as_secs_f64()
    ))
}

fn disconnection_bound() -> Outcome {
    let (o, elapsed) = hk(&["bound", "--n", "10", "--eps", "0.3", "--trials", "200000"], None);
    let out = text(&o);
    let bound: f64 = field(&out, "bound")?.parse().map_err(|_| "bad bound".to_string())?;
    ensure((bound - 0.05764801).abs() < 1e-12, || format!("bound {bound}"))?;
    let empirical = field(&out, "empirical")?;
    let detail = format!(
        "bound {bound}, empirical {empirical}, threshold {}, {:.2} s",
        field(&out, "threshold")?,
        elapsed.as_secs_f64()
    );
    ensure(field(&out, "check")? == "PASS" && o.status.success(), || detail.clone())?;
    ensure(elapsed < Duration::from_secs(60), || detail.clone())?;
    Ok(detail)
}

fn property_suites() -> Outcome {
    let (o, elapsed) = hk(&["verify", "--suite", "all", "--cases", "10000", "--seed", "7"], None);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).map_err(|e| format!("report: {e}"))?;
    let summary: Vec<String> = doc["reports"]
        .as_array()
        .ok_or("no reports")?
        .iter()
        .map(|r| {
            format!(
                "{} {}/{}",
                r["suite"].as_str().unwrap_or("?"),
                r["violations"].as_array().map_or(0, Vec::len),
                r["exercised"]
            )
        })
        .collect();
    let detail = format!("violations/exercised: {}; {:.1} s", summary.join(", "), elapsed.as_secs_f64());
    ensure(o.status.success() && doc["passed"] == true, || detail.clone())?;
    ensure(summary.len() == 7, || detail.clone())?;
    ensure(elapsed < Duration::from_secs(300), || detail.clone())?;
    Ok(detail)
}

fn rational_convergence() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(606);
    let mut slowest = 0;
    let mut runs = 0;
    for eps in [0.1, 0.3, 0.5] {
        let params = ModelParams::new(eps).unwrap().with_mode(ArithmeticMode::ExactRational).with_max_steps(10_000);
        let eps_q = params.epsilon_as::<BigRational>();
        for _ in 0..100 {
            let n = 1 + (uniform01(&mut rng) * 20.0) as usize;
            let xs: Vec<f64> = (0..n).map(|_| uniform01(&mut rng)).collect();
            let initial = OpinionProfile::new(xs).map_err(|e| e.to_string())?.to_exact();
            let r = run(&initial, &params);
            let t = r.converged_at.ok_or_else(|| format!("eps {eps}, n {n}: no fixed point in 10^4 steps"))?;
            let fin = r.final_profile.opinions();
            ensure(sync_update(fin, &eps_q) == fin, || format!("eps {eps}, n {n}: final state is not fixed"))?;
            slowest = slowest.max(t);
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{runs} exact runs, slowest fixed point at t = {slowest}, {:.2} s", elapsed.as_secs_f64()))
}

fn hand_trajectory() -> Outcome {
    let (o, _) = hk(&["simulate", "--opinions", "0.0,0.4,0.8", "--eps", "0.5"], None);
    let out = text(&o);
    ensure(o.status.success(), || format!("exit {:?}", o.status.code()))?;
    let t = field(&out, "converged_at")?;
    let cluster = field(&out, "cluster 0")?;
    let value: f64 = cluster
        .strip_prefix("value ")
        .and_then(|r| r.split(' ').next())
        .and_then(|v| v.parse().ok())
        .ok_or("bad cluster line")?;
    let detail = format!("converged_at {t}, consensus {}, value {value}", field(&out, "consensus")?);
    ensure(t == "2" && field(&out, "consensus")? == "true" && (value - 0.4).abs() <= 1e-12, || detail.clone())?;
    Ok(detail)
}

fn deterministic_csv() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = ["sweep", "--n", "5,50,200", "--eps", "0.2:0.6:0.2", "--trials", "500", "--seed", "31"];
    let mut outputs = Vec::new();
    for (k, (flag, env)) in [(Some("1"), None), (Some("2"), None), (Some("8"), None), (None, Some("3")), (None, None)]
        .into_iter()
        .enumerate()
    {
        let path = dir.path().join(format!("run{k}.csv"));
        let mut args: Vec<&str> = base.to_vec();
        let p = path.to_str().unwrap().to_string();
        args.extend(["--out", &p]);
        if let Some(t) = flag {
            args.extend(["--threads", t]);
        }
        let (o, _) = hk(&args, env);
        ensure(o.status.success(), || format!("run {k}: exit {:?}", o.status.code()))?;
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || "CSV differs between worker counts".into())?;
    Ok(format!("{} bytes identical across 1, 2, 8, HK_THREADS=3 and default workers", outputs[0].len()))
}

fn step_performance() -> Outcome {
    let mut rng = rng_from_seed(9);
    let mut big: Vec<f64> = (0..1_000_000).map(|_| uniform01(&mut rng)).collect();
    big.sort_by(f64::total_cmp);
    let mut best = Duration::MAX;
    for _ in 0..3 {
        let start = Instant::now();
        let next = sync_update(&big, &0.01);
        best = best.min(start.elapsed());
        std::hint::black_box(next);
    }

    let mut small: Vec<f64> = (0..2000).map(|_| uniform01(&mut rng)).collect();
    small.sort_by(f64::total_cmp);
    let mut worst = 0.0f64;
    for eps in [0.001, 0.05, 0.3, 1.0] {
        let fast = sync_update(&small, &eps);
        let naive = sync_update_naive(&small, &eps);
        worst = fast.iter().zip(&naive).fold(worst, |m, (a, b)| m.max((a - b).abs()));
    }
    let detail = format!("n = 10^6 step {:.1} ms; n = 2000 fast vs naive max diff {worst:e}", best.as_secs_f64() * 1e3);
    ensure(best <= Duration::from_millis(200) && worst <= 1e-9, || detail.clone())?;
    Ok(detail)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("two-agent closed form", two_agent_anchor),
        ("certain consensus at eps = 1", wide_threshold_anchor),
        ("consensus trend in n at eps = 0.5", threshold_trend),
        ("initial disconnection bound", disconnection_bound),
        ("property suites", property_suites),
        ("exact finite-time convergence", rational_convergence),
        ("hand trajectory", hand_trajectory),
        ("deterministic sweep CSV", deterministic_csv),
        ("step performance", step_performance),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
