//! World description: executors, clients, network and policy parameters.
//!
//! A scenario is read from a JSON document into the `Raw*` types, which
//! mirror the file layout one to one, and then checked by
//! [`validate_scenario`]. Everything downstream works on the validated
//! [`Scenario`], which is immutable and can be shared across threads.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ExecutorId = usize;
pub type ClientId = usize;

/// Point on the 2-D plane, in abstract distance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position(pub f64, pub f64);

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.0 - other.0).hypot(self.1 - other.1)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutorSpec {
    pub id: ExecutorId,
    /// Operations per second.
    pub speed: f64,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientSpec {
    pub id: ClientId,
    pub position: Position,
    pub workload: WorkloadSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSpec {
    Deterministic { period: f64 },
    Poisson { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpsSpec {
    Constant { mean: f64 },
    Exponential { mean: f64 },
}

impl OpsSpec {
    pub fn mean(&self) -> f64 {
        match *self {
            OpsSpec::Constant { mean } | OpsSpec::Exponential { mean } => mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub arrival: ArrivalSpec,
    pub ops: OpsSpec,
    pub input_bytes: u64,
    pub output_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// One-way latency in seconds at zero distance.
    pub base_latency: f64,
    pub latency_per_unit_distance: f64,
    /// Bytes per second. When absent, transfers are pure propagation delay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_rate: Option<f64>,
}

impl NetworkSpec {
    /// Serialization delay of `bytes` on the access link, zero when disabled.
    pub fn transmission_delay(&self, bytes: u64) -> f64 {
        match self.link_rate {
            Some(rate) => bytes as f64 / rate,
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Uncoordinated,
    Random,
    RoundRobin,
    LeastQueueOracle,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Uncoordinated => "uncoordinated",
            PolicyKind::Random => "random",
            PolicyKind::RoundRobin => "round_robin",
            PolicyKind::LeastQueueOracle => "least_queue_oracle",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_CHI: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.1;

fn default_chi() -> f64 {
    DEFAULT_CHI
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Pool size.
    pub k: usize,
    /// Per-secondary probe probability.
    #[serde(default = "default_chi")]
    pub chi: f64,
    /// EWMA weight of the newest delay sample.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

/// Scenario as it appears in the file, before any invariant is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub executors: Vec<ExecutorSpec>,
    pub clients: Vec<ClientSpec>,
    pub network: NetworkSpec,
    pub policy: PolicyConfig,
    pub horizon_s: f64,
    pub warmup_s: f64,
}

impl RawScenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A validated scenario. Executors and clients are sorted by id, so
/// `executors[i].id == i` and `clients[i].id == i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    executors: Vec<ExecutorSpec>,
    clients: Vec<ClientSpec>,
    network: NetworkSpec,
    policy: PolicyConfig,
    horizon: f64,
    warmup: f64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        validate_scenario(RawScenario::from_json(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn executors(&self) -> &[ExecutorSpec] {
        &self.executors
    }

    pub fn clients(&self) -> &[ClientSpec] {
        &self.clients
    }

    pub fn network(&self) -> &NetworkSpec {
        &self.network
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn warmup(&self) -> f64 {
        self.warmup
    }

    /// Length of the measured interval `(warmup, horizon]`.
    pub fn measured_interval(&self) -> f64 {
        self.horizon - self.warmup
    }

    pub fn to_raw(&self) -> RawScenario {
        RawScenario {
            executors: self.executors.clone(),
            clients: self.clients.clone(),
            network: self.network,
            policy: self.policy,
            horizon_s: self.horizon,
            warmup_s: self.warmup,
        }
    }

    /// Same world with a different policy, re-validated.
    pub fn with_policy(&self, policy: PolicyConfig) -> Result<Self, ScenarioError> {
        let mut raw = self.to_raw();
        raw.policy = policy;
        validate_scenario(raw)
    }

    pub fn with_timing(&self, horizon: f64, warmup: f64) -> Result<Self, ScenarioError> {
        let mut raw = self.to_raw();
        raw.horizon_s = horizon;
        raw.warmup_s = warmup;
        validate_scenario(raw)
    }

    /// One-way latency matrix indexed `[client][executor]`.
    pub fn latency_matrix(&self) -> Vec<Vec<f64>> {
        self.clients
            .iter()
            .map(|c| {
                self.executors
                    .iter()
                    .map(|e| latency(c, e, &self.network))
                    .collect()
            })
            .collect()
    }
}

fn check_ids<T>(items: &mut [T], id: impl Fn(&T) -> usize, path: &str) -> Result<(), ScenarioError> {
    items.sort_by_key(|item| id(item));
    for (expected, item) in items.iter().enumerate() {
        let got = id(item);
        if got != expected {
            return Err(invalid(
                format!("{path}[{expected}].id"),
                format!("ids must be unique and contiguous from 0 (found {got}, expected {expected})"),
            ));
        }
    }
    Ok(())
}

fn check_finite_position(p: &Position, path: String) -> Result<(), ScenarioError> {
    if p.0.is_finite() && p.1.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "position must be finite"))
    }
}

/// Checks every invariant of the world description and returns the first
/// violation with its field path.
pub fn validate_scenario(mut raw: RawScenario) -> Result<Scenario, ScenarioError> {
    if raw.executors.is_empty() {
        return Err(invalid("executors", "at least one executor is required"));
    }
    if raw.clients.is_empty() {
        return Err(invalid("clients", "at least one client is required"));
    }
    check_ids(&mut raw.executors, |e| e.id, "executors")?;
    check_ids(&mut raw.clients, |c| c.id, "clients")?;

    for e in &raw.executors {
        if !(e.speed > 0.0 && e.speed.is_finite()) {
            return Err(invalid(format!("executors[{}].speed", e.id), "speed must be > 0"));
        }
        check_finite_position(&e.position, format!("executors[{}].position", e.id))?;
    }
    for c in &raw.clients {
        let path = format!("clients[{}]", c.id);
        check_finite_position(&c.position, format!("{path}.position"))?;
        match c.workload.arrival {
            ArrivalSpec::Deterministic { period } if !(period > 0.0 && period.is_finite()) => {
                return Err(invalid(format!("{path}.workload.arrival.period"), "period must be > 0"));
            }
            ArrivalSpec::Poisson { rate } if !(rate > 0.0 && rate.is_finite()) => {
                return Err(invalid(format!("{path}.workload.arrival.rate"), "rate must be > 0"));
            }
            _ => {}
        }
        let mean = c.workload.ops.mean();
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(invalid(format!("{path}.workload.ops.mean"), "mean ops must be > 0"));
        }
    }

    let net = &raw.network;
    if !(net.base_latency >= 0.0 && net.base_latency.is_finite()) {
        return Err(invalid("network.base_latency", "base_latency must be >= 0"));
    }
    if !(net.latency_per_unit_distance >= 0.0 && net.latency_per_unit_distance.is_finite()) {
        return Err(invalid(
            "network.latency_per_unit_distance",
            "latency_per_unit_distance must be >= 0",
        ));
    }
    if let Some(rate) = net.link_rate {
        if !(rate > 0.0) {
            return Err(invalid("network.link_rate", "link_rate must be > 0"));
        }
    }

    let policy = &raw.policy;
    if policy.k < 1 {
        return Err(invalid("policy.k", "pool_size must be at least 1"));
    }
    if policy.k > raw.executors.len() {
        return Err(invalid("policy.k", "pool_size exceeds executor count"));
    }
    if !(0.0..=1.0).contains(&policy.chi) {
        return Err(invalid("policy.chi", "chi outside [0,1]"));
    }
    if !(policy.alpha > 0.0 && policy.alpha <= 1.0) {
        return Err(invalid("policy.alpha", "alpha outside (0,1]"));
    }

    if !(raw.horizon_s > 0.0 && raw.horizon_s.is_finite()) {
        return Err(invalid("horizon_s", "horizon must be > 0"));
    }
    if !(raw.warmup_s >= 0.0) {
        return Err(invalid("warmup_s", "warmup must be >= 0"));
    }
    if raw.warmup_s >= raw.horizon_s {
        return Err(invalid("warmup_s", "warmup must be shorter than horizon"));
    }

    Ok(Scenario {
        executors: raw.executors,
        clients: raw.clients,
        network: raw.network,
        policy: raw.policy,
        horizon: raw.horizon_s,
        warmup: raw.warmup_s,
    })
}

/// One-way propagation latency between a client and an executor.
pub fn latency(client: &ClientSpec, executor: &ExecutorSpec, net: &NetworkSpec) -> f64 {
    net.base_latency + net.latency_per_unit_distance * client.position.distance(&executor.position)
}

/// The `k` executors closest to `client` by latency, nearest first, ties
/// broken by lower id.
pub fn assign_pool(
    client: &ClientSpec,
    k: usize,
    executors: &[ExecutorSpec],
    net: &NetworkSpec,
) -> Vec<ExecutorId> {
    let mut ranked: Vec<(f64, ExecutorId)> = executors
        .iter()
        .map(|e| (latency(client, e, net), e.id))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(k).map(|(_, id)| id).collect()
}
