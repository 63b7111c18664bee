//! Delay, traffic and utilization statistics.

use serde::Serialize;

/// Nearest-rank quantile: the element at 1-indexed rank `ceil(p * n)` of
/// the sorted samples. `None` when there are no samples.
pub fn quantile_nearest_rank(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(quantile_sorted(&sorted, p))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Step points `(value, fraction of samples <= value)` at each distinct value.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    cdf_sorted(&sorted)
}

fn cdf_sorted(sorted: &[f64]) -> Vec<(f64, f64)> {
    let n = sorted.len();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = if i + 1 == n { 1.0 } else { (i + 1) as f64 / n as f64 };
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => points.push((v, frac)),
        }
    }
    points
}

/// Value of a step CDF at `x`.
pub fn cdf_at(cdf: &[(f64, f64)], x: f64) -> f64 {
    let idx = cdf.partition_point(|&(v, _)| v <= x);
    if idx == 0 {
        0.0
    } else {
        cdf[idx - 1].1
    }
}

/// Accumulates samples of one simulation run.
#[derive(Debug, Clone, Default)]
pub struct MetricsRecorder {
    delay_samples: Vec<f64>,
    traffic_bytes: u64,
}

impl MetricsRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the first answer to a request. Every copy moves the input
    /// to an executor and the output back.
    pub fn record_completion(&mut self, delay: f64, copies_sent: usize, bytes_in: u64, bytes_out: u64) {
        self.delay_samples.push(delay);
        self.traffic_bytes += copies_sent as u64 * (bytes_in + bytes_out);
    }

    pub fn delay_samples(&self) -> &[f64] {
        &self.delay_samples
    }

    pub fn traffic_bytes(&self) -> u64 {
        self.traffic_bytes
    }

    pub fn finalize(
        self,
        measured_interval: f64,
        utilization_per_executor: Vec<f64>,
        requests_sent: u64,
        probes_sent: u64,
    ) -> MetricsReport {
        let mut sorted = self.delay_samples;
        sorted.sort_by(f64::total_cmp);
        let delay = if sorted.is_empty() {
            None
        } else {
            Some(DelaySummary {
                mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
                p95: quantile_sorted(&sorted, 0.95),
                min: sorted[0],
                max: sorted[sorted.len() - 1],
            })
        };
        let cdf = cdf_sorted(&sorted);
        let utilization_mean = if utilization_per_executor.is_empty() {
            0.0
        } else {
            utilization_per_executor.iter().sum::<f64>() / utilization_per_executor.len() as f64
        };
        MetricsReport {
            delay,
            delay_samples: sorted,
            cdf,
            traffic_bytes: self.traffic_bytes,
            traffic_rate: self.traffic_bytes as f64 / measured_interval,
            utilization_per_executor,
            utilization_mean,
            requests_sent,
            probes_sent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelaySummary {
    pub mean: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

/// Results of one run over the measured interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// `None` when no request completed in the measured interval.
    pub delay: Option<DelaySummary>,
    /// Sorted ascending.
    #[serde(skip)]
    pub delay_samples: Vec<f64>,
    #[serde(skip)]
    pub cdf: Vec<(f64, f64)>,
    pub traffic_bytes: u64,
    /// Bytes per second over the measured interval.
    pub traffic_rate: f64,
    pub utilization_per_executor: Vec<f64>,
    pub utilization_mean: f64,
    /// Whole-run dispatch counters, summed over clients.
    pub requests_sent: u64,
    pub probes_sent: u64,
}

impl MetricsReport {
    pub fn delay_mean(&self) -> Option<f64> {
        self.delay.map(|d| d.mean)
    }

    pub fn delay_p95(&self) -> Option<f64> {
        self.delay.map(|d| d.p95)
    }

    pub fn probes_per_request(&self) -> f64 {
        if self.requests_sent == 0 {
            0.0
        } else {
            self.probes_sent as f64 / self.requests_sent as f64
        }
    }
}
