//! Seeded replications and parameter sweeps.
//!
//! Every (value, seed) point is an isolated simulation. Points run in
//! parallel when the `parallel` feature is on; results are always
//! assembled in (value, seed) order so output never depends on scheduling.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::des::SimError;
use crate::metrics::MetricsReport;
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::run_simulation;

pub const CSV_HEADER: &str = "param,value,seed,delay_mean_s,delay_p95_s,traffic_rate_Bps,util_mean,probes_per_request";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("sweep value {param}={value}: {source}")]
    InvalidValue {
        param: SweepParam,
        value: String,
        #[source]
        source: ScenarioError,
    },
    #[error("simulation failed for {param}={value}, seed {seed}: {source}")]
    Simulation {
        param: SweepParam,
        value: String,
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("refusing to write an empty table to {0}")]
    EmptyTable(PathBuf),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Chi,
    K,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Chi => "chi",
            SweepParam::K => "k",
        })
    }
}

impl FromStr for SweepParam {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chi" => Ok(SweepParam::Chi),
            "k" => Ok(SweepParam::K),
            other => Err(SweepError::InvalidSpec(format!("unknown parameter '{other}' (expected chi or k)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// Probabilities for `chi`, positive integers for `k`.
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>, seeds: Vec<u64>) -> Result<Self, SweepError> {
        if values.is_empty() {
            return Err(SweepError::InvalidSpec("no sweep values".into()));
        }
        if seeds.is_empty() {
            return Err(SweepError::InvalidSpec("no seeds".into()));
        }
        for &v in &values {
            let ok = match param {
                SweepParam::Chi => (0.0..=1.0).contains(&v),
                SweepParam::K => v >= 1.0 && v.fract() == 0.0,
            };
            if !ok {
                return Err(SweepError::InvalidSpec(format!("{param} value {v} out of range")));
            }
        }
        Ok(Self { param, values, seeds })
    }

    /// Parses comma-separated value and seed lists.
    pub fn parse(param: &str, values: &str, seeds: &str) -> Result<Self, SweepError> {
        let param: SweepParam = param.parse()?;
        let values = split_list(values, "value")?;
        let seeds = split_list(seeds, "seed")?;
        Self::new(param, values, seeds)
    }

    pub fn format_value(&self, value: f64) -> String {
        format_param_value(self.param, value)
    }
}

fn split_list<T: FromStr>(list: &str, what: &str) -> Result<Vec<T>, SweepError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| SweepError::InvalidSpec(format!("cannot parse {what} '{s}'")))
        })
        .collect()
}

fn format_param_value(param: SweepParam, value: f64) -> String {
    match param {
        SweepParam::K => format!("{}", value as u64),
        SweepParam::Chi => format!("{value}"),
    }
}

/// Fixed-point rendering with 9 significant digits.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (DIGITS - 1 - exponent).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    // Rounding may carry into a new leading digit (9.99.. -> 10.0..).
    if decimals > 0 {
        let rounded: f64 = s.parse().unwrap_or(x);
        if rounded.abs().log10().floor() as i32 > exponent {
            let decimals = decimals - 1;
            s = format!("{x:.decimals$}");
        }
    }
    s
}

/// Which executor to use for independent replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Maps `job` over `inputs`, keeping input order in the output.
pub fn map_ordered<I, O, F>(inputs: &[I], execution: Execution, job: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    match execution {
        Execution::Sequential => inputs.iter().map(job).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            inputs.par_iter().map(job).collect()
        }
    }
}

/// Runs `scenario` once per seed.
pub fn run_replications(
    scenario: &Scenario,
    seeds: &[u64],
    execution: Execution,
) -> Vec<Result<MetricsReport, SimError>> {
    map_ordered(seeds, execution, |&seed| run_simulation(scenario, seed))
}

/// One (value, seed) point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param: SweepParam,
    pub value: f64,
    pub seed: u64,
    pub policy: String,
    pub report: MetricsReport,
}

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        let (mean, p95) = match self.report.delay {
            Some(d) => (format_sig(d.mean), format_sig(d.p95)),
            None => ("nodata".to_string(), "nodata".to_string()),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.param,
            format_param_value(self.param, self.value),
            self.seed,
            mean,
            p95,
            format_sig(self.report.traffic_rate),
            format_sig(self.report.utilization_mean),
            format_sig(self.report.probes_per_request()),
        )
    }

    pub fn cdf_file_name(&self) -> String {
        format!(
            "cdf_{}_{}={}_seed={}.csv",
            self.policy,
            self.param,
            format_param_value(self.param, self.value),
            self.seed
        )
    }
}

/// Scenario variant for one sweep value.
pub fn scenario_for(base: &Scenario, param: SweepParam, value: f64) -> Result<Scenario, SweepError> {
    let mut policy = *base.policy();
    match param {
        SweepParam::Chi => policy.chi = value,
        SweepParam::K => policy.k = value as usize,
    }
    base.with_policy(policy).map_err(|source| SweepError::InvalidValue {
        param,
        value: format_param_value(param, value),
        source,
    })
}

/// Runs every (value, seed) point. All values are validated before any
/// simulation starts. Rows come back sorted by value, then seed.
pub fn sweep(base: &Scenario, spec: &SweepSpec, execution: Execution) -> Result<Vec<SweepPoint>, SweepError> {
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();

    let variants = values
        .iter()
        .map(|&v| Ok((v, scenario_for(base, spec.param, v)?)))
        .collect::<Result<Vec<_>, SweepError>>()?;
    let jobs: Vec<(f64, &Scenario, u64)> = variants
        .iter()
        .flat_map(|(v, s)| seeds.iter().map(move |&seed| (*v, s, seed)))
        .collect();

    map_ordered(&jobs, execution, |&(value, scenario, seed)| {
        run_simulation(scenario, seed)
            .map(|report| SweepPoint {
                param: spec.param,
                value,
                seed,
                policy: scenario.policy().kind.to_string(),
                report,
            })
            .map_err(|source| SweepError::Simulation {
                param: spec.param,
                value: format_param_value(spec.param, value),
                seed,
                source,
            })
    })
    .into_iter()
    .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the summary table. An empty table is refused and no file is created.
pub fn write_csv(points: &[SweepPoint], path: &Path) -> Result<(), SweepError> {
    if points.is_empty() {
        return Err(SweepError::EmptyTable(path.to_path_buf()));
    }
    let mut out = String::with_capacity(64 * (points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Two-column `delay_s,cum_prob` dump of one point's delay CDF.
pub fn write_cdf(point: &SweepPoint, path: &Path) -> Result<(), SweepError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "delay_s,cum_prob").map_err(io_err(path))?;
    for &(delay, prob) in &point.report.cdf {
        writeln!(w, "{},{}", format_sig(delay), format_sig(prob)).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `summary.csv` and one CDF file per point into `dir`.
pub fn write_sweep(points: &[SweepPoint], dir: &Path) -> Result<PathBuf, SweepError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let summary = dir.join("summary.csv");
    write_csv(points, &summary)?;
    for p in points {
        write_cdf(p, &dir.join(p.cdf_file_name()))?;
    }
    Ok(summary)
}
