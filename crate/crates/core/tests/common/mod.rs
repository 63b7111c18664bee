#![allow(dead_code)]

use std::path::PathBuf;

use mecsim::scenario::{
    validate_scenario, ArrivalSpec, ClientSpec, ExecutorSpec, NetworkSpec, OpsSpec, PolicyConfig, PolicyKind,
    Position, RawScenario, WorkloadSpec,
};
use mecsim::Scenario;

pub const MS: f64 = 1e-3;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

pub fn shipped(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).expect("shipped scenario is valid")
}

pub fn policy(kind: PolicyKind, k: usize, chi: f64) -> PolicyConfig {
    PolicyConfig {
        kind,
        k,
        chi,
        alpha: 0.1,
    }
}

pub fn executor(id: usize, speed: f64, x: f64) -> ExecutorSpec {
    ExecutorSpec {
        id,
        speed,
        position: Position(x, 0.0),
    }
}

pub fn client(id: usize, x: f64, arrival: ArrivalSpec, ops: OpsSpec) -> ClientSpec {
    ClientSpec {
        id,
        position: Position(x, 0.0),
        workload: WorkloadSpec {
            arrival,
            ops,
            input_bytes: 1000,
            output_bytes: 200,
        },
    }
}

pub fn flat_network(one_way: f64) -> NetworkSpec {
    NetworkSpec {
        base_latency: one_way,
        latency_per_unit_distance: 0.0,
        link_rate: None,
    }
}

/// One periodic client (10 ms, 2e6 ops, 1000/200 B), one 1e9 ops/s executor,
/// 1 ms one-way latency, no probing, 60 s horizon with 10 s warmup.
pub fn deterministic_raw() -> RawScenario {
    RawScenario {
        executors: vec![executor(0, 1e9, 0.0)],
        clients: vec![client(
            0,
            0.0,
            ArrivalSpec::Deterministic { period: 10.0 * MS },
            OpsSpec::Constant { mean: 2e6 },
        )],
        network: flat_network(MS),
        policy: policy(PolicyKind::Uncoordinated, 1, 0.0),
        horizon_s: 60.0,
        warmup_s: 10.0,
    }
}

pub fn deterministic() -> Scenario {
    validate_scenario(deterministic_raw()).unwrap()
}

/// Poisson client with rate `lambda`, exponential service with rate `mu`.
pub fn mm1(lambda: f64, mu: f64, horizon: f64, warmup: f64) -> Scenario {
    let mut raw = deterministic_raw();
    raw.clients[0].workload.arrival = ArrivalSpec::Poisson { rate: lambda };
    raw.clients[0].workload.ops = OpsSpec::Exponential { mean: 1e9 / mu };
    raw.horizon_s = horizon;
    raw.warmup_s = warmup;
    validate_scenario(raw).unwrap()
}

/// Several Poisson clients over a row of executors with exponential work.
pub fn busy_world(kind: PolicyKind, k: usize, chi: f64, horizon: f64, warmup: f64) -> Scenario {
    let executors = (0..4).map(|i| executor(i, 1e9, 10.0 * i as f64)).collect();
    let clients = (0..6)
        .map(|i| {
            client(
                i,
                5.0 * i as f64,
                ArrivalSpec::Poisson { rate: 20.0 },
                OpsSpec::Exponential { mean: 2e7 },
            )
        })
        .collect();
    validate_scenario(RawScenario {
        executors,
        clients,
        network: NetworkSpec {
            base_latency: MS,
            latency_per_unit_distance: 0.1 * MS,
            link_rate: None,
        },
        policy: policy(kind, k, chi),
        horizon_s: horizon,
        warmup_s: warmup,
    })
    .unwrap()
}
