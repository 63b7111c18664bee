//! Acceptance criteria. Runs as a plain binary so that every criterion
//! prints one PASS/FAIL line whether or not output capture is on.

mod common;

use std::collections::HashMap;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use mecsim::metrics::{cdf_at, quantile_nearest_rank};
use mecsim::sweep::{scenario_for, write_sweep};
use mecsim::{run_simulation, sweep, EventKind, Execution, MetricsReport, Simulation, SweepParam, SweepSpec};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

type Outcome = Result<String, String>;

fn check(pass: bool, detail: String) -> Outcome {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Seed-averaged (mean delay, p95 delay) per sweep value, in value order.
fn averaged(points: &[mecsim::SweepPoint]) -> Vec<(f64, f64, f64)> {
    let mut by_value: Vec<(f64, Vec<&MetricsReport>)> = Vec::new();
    for p in points {
        match by_value.last_mut() {
            Some((v, reports)) if *v == p.value => reports.push(&p.report),
            _ => by_value.push((p.value, vec![&p.report])),
        }
    }
    by_value
        .into_iter()
        .map(|(v, reports)| {
            let n = reports.len() as f64;
            let mean = reports.iter().map(|r| r.delay_mean().unwrap()).sum::<f64>() / n;
            let p95 = reports.iter().map(|r| r.delay_p95().unwrap()).sum::<f64>() / n;
            (v, mean, p95)
        })
        .collect()
}

fn mm1_oracle() -> Outcome {
    let (lambda, mu) = (80.0, 100.0);
    let s = mm1(lambda, mu, 1400.0, 100.0);
    let started = Instant::now();
    let r = run_simulation(&s, 1).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let samples = r.delay_samples.len();
    let sojourn = r.delay_mean().unwrap() - 2.0 * MS;
    let oracle = 1.0 / (mu - lambda);
    let rel = (sojourn - oracle).abs() / oracle;
    check(
        samples >= 100_000 && rel <= 0.10 && elapsed < Duration::from_secs(30),
        format!(
            "sojourn {sojourn:.5} s vs 1/(mu-lambda) = {oracle:.5} s (rel err {rel:.4}, tol 0.10), {samples} samples, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn deterministic_hand_check() -> Outcome {
    let r = run_simulation(&deterministic(), 1).map_err(|e| e.to_string())?;
    let d = r.delay.ok_or("no samples")?;
    let ok = (d.mean - 4.0 * MS).abs() <= 1e-9
        && (d.p95 - 4.0 * MS).abs() <= 1e-9
        && (r.utilization_mean - 0.2).abs() <= 1e-6;
    check(
        ok,
        format!(
            "mean {:.12} s, p95 {:.12} s (want 0.004 +- 1e-9), utilization {:.9} (want 0.2 +- 1e-6)",
            d.mean, d.p95, r.utilization_mean
        ),
    )
}

fn chi_tradeoff() -> Outcome {
    let s = shipped("chi-study");
    let spec = SweepSpec::new(SweepParam::Chi, vec![0.001, 0.01, 0.1, 0.5], SEEDS.to_vec()).map_err(|e| e.to_string())?;
    let points = sweep(&s, &spec, Execution::default()).map_err(|e| e.to_string())?;
    let avg = averaged(&points);
    let d: HashMap<String, f64> = avg.iter().map(|&(v, m, _)| (format!("{v}"), m)).collect();
    let low_gap = (d["0.001"] - d["0.01"]).abs();
    let high_gap = (d["0.1"] - d["0.5"]).abs();
    check(
        d["0.5"] > d["0.1"] && low_gap < 0.25 * high_gap,
        format!(
            "mean delay chi=0.001 {:.5}, 0.01 {:.5}, 0.1 {:.5}, 0.5 {:.5} s; |d(0.001)-d(0.01)| = {low_gap:.5} < 0.25 x {high_gap:.5}",
            d["0.001"], d["0.01"], d["0.1"], d["0.5"]
        ),
    )
}

fn pool_points() -> Result<Vec<mecsim::SweepPoint>, String> {
    let base = scenario_for(&shipped("poolsize-study"), SweepParam::Chi, 0.1).map_err(|e| e.to_string())?;
    let spec = SweepSpec::new(SweepParam::K, vec![2.0, 3.0, 4.0, 6.0], SEEDS.to_vec()).map_err(|e| e.to_string())?;
    sweep(&base, &spec, Execution::default()).map_err(|e| e.to_string())
}

fn pool_tradeoff(points: &[mecsim::SweepPoint]) -> Outcome {
    let avg = averaged(points);
    let get = |k: f64| avg.iter().find(|a| a.0 == k).copied().unwrap();
    let (k2, k3, k6) = (get(2.0), get(3.0), get(6.0));
    let ok = k3.1 < k2.1 && k6.1 > k3.1 && k3.2 < k2.2 && k6.2 > k3.2;
    check(
        ok,
        format!(
            "mean k=2 {:.4}, k=3 {:.4}, k=6 {:.4} s; p95 k=2 {:.4}, k=3 {:.4}, k=6 {:.4} s",
            k2.1, k3.1, k6.1, k2.2, k3.2, k6.2
        ),
    )
}

fn monotone_overhead(points: &[mecsim::SweepPoint]) -> Outcome {
    let mut violations = Vec::new();
    for &seed in &SEEDS {
        let row: Vec<&mecsim::SweepPoint> = points.iter().filter(|p| p.seed == seed).collect();
        for w in row.windows(2) {
            let (a, b) = (&w[0].report, &w[1].report);
            if b.traffic_rate < a.traffic_rate || b.utilization_mean < a.utilization_mean {
                violations.push(format!("seed {seed} k={}->{}", w[0].value, w[1].value));
            }
        }
    }
    let first: Vec<String> = points
        .iter()
        .filter(|p| p.seed == SEEDS[0])
        .map(|p| format!("k={} {:.0} B/s util {:.3}", p.value, p.report.traffic_rate, p.report.utilization_mean))
        .collect();
    check(
        violations.is_empty(),
        format!("seed 1: {}; violations: {:?}", first.join(", "), violations),
    )
}

fn probe_expectation() -> Outcome {
    let base = shipped("poolsize-study").with_timing(400.0, 30.0).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for chi in [0.01, 0.1, 0.5] {
        for k in [2usize, 3, 6] {
            let mut policy = *base.policy();
            policy.chi = chi;
            policy.k = k;
            let s = base.with_policy(policy).map_err(|e| e.to_string())?;
            let r = run_simulation(&s, 1).map_err(|e| e.to_string())?;
            let n = r.requests_sent as f64;
            let trials = (k - 1) as f64;
            let expected = chi * trials;
            let sigma = (trials * chi * (1.0 - chi) / n).sqrt();
            let z = (r.probes_per_request() - expected) / sigma;
            ok &= r.requests_sent >= 100_000 && z.abs() < 3.0;
            lines.push(format!("chi={chi} k={k} z={z:+.2}"));
        }
    }
    check(ok, format!("{} (|z| < 3, >= 1e5 requests each)", lines.join(", ")))
}

fn property_suite() -> Outcome {
    let s = shipped("poolsize-study").with_timing(60.0, 5.0).map_err(|e| e.to_string())?;
    let mut sim = Simulation::new(&s, 7).with_trace();
    sim.run_until(s.horizon()).map_err(|e| e.to_string())?;
    let trace = sim.take_trace();
    let mut failures = Vec::new();

    // FIFO per executor.
    let mut arrived: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut completed: HashMap<usize, Vec<u64>> = HashMap::new();
    for e in &trace {
        match &e.kind {
            EventKind::RequestSent { request, executor, .. } => arrived.entry(*executor).or_default().push(request.id),
            EventKind::ServiceEnd { executor, request } => completed.entry(*executor).or_default().push(*request),
            _ => {}
        }
    }
    if !completed.iter().all(|(e, done)| arrived[e].starts_with(done)) {
        failures.push("fifo");
    }

    // Conservation at the horizon.
    let st = sim.stats();
    if st.requests_generated != st.requests_answered + st.requests_unanswered
        || st.copies_sent != st.copies_returned + st.copies_in_flight
        || st.copies_in_flight != st.copies_at_executors + st.copies_on_network
    {
        failures.push("request conservation");
    }

    // Work conservation.
    for e in s.executors() {
        let x = sim.executor(e.id);
        if (x.served_ops() / x.speed() - x.busy_time()).abs() > 1e-9 * x.busy_time() {
            failures.push("work conservation");
            break;
        }
    }

    // CDF shape and agreement with the quantiles.
    let report = sim.report();
    let cdf = &report.cdf;
    let monotone = cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1) && cdf.last().map(|c| c.1) == Some(1.0);
    let consistent = [0.5, 0.9, 0.95, 0.99, 1.0]
        .iter()
        .all(|&p| cdf_at(cdf, quantile_nearest_rank(&report.delay_samples, p).unwrap()) >= p);
    if !monotone || !consistent {
        failures.push("cdf");
    }

    // Byte-identical CSV output.
    let spec = SweepSpec::new(SweepParam::Chi, vec![0.1, 0.5], vec![1, 2]).map_err(|e| e.to_string())?;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let points = sweep(&s, &spec, Execution::default()).map_err(|e| e.to_string())?;
        write_sweep(&points, d.path()).map_err(|e| e.to_string())?;
    }
    let mut files = 0;
    for entry in fs::read_dir(dirs[0].path()).unwrap() {
        let name = entry.unwrap().file_name();
        files += 1;
        if fs::read(dirs[0].path().join(&name)).ok() != fs::read(dirs[1].path().join(&name)).ok() {
            failures.push("csv determinism");
            break;
        }
    }

    check(
        failures.is_empty(),
        format!(
            "{} events, {} executors, {} delay samples, {files} csv files compared; failed: {failures:?}",
            trace.len(),
            s.executors().len(),
            report.delay_samples.len()
        ),
    )
}

fn main() -> ExitCode {
    let pool = pool_points();
    let pool_check = |f: fn(&[mecsim::SweepPoint]) -> Outcome| match &pool {
        Ok(points) => f(points),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("1 queueing oracle (M/M/1)", mm1_oracle()),
        ("2 deterministic hand check", deterministic_hand_check()),
        ("3 chi trade-off", chi_tradeoff()),
        ("4 pool-size trade-off", pool_check(pool_tradeoff)),
        ("5 monotone overhead", pool_check(monotone_overhead)),
        ("6 probe expectation", probe_expectation()),
        ("7 property suite", property_suite()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
