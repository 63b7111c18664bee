//! Request arrivals and request attributes.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{ArrivalSpec, ClientId, OpsSpec, WorkloadSpec};

pub type SimRng = ChaCha8Rng;

/// One lambda invocation. Probe copies share the id of the original.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub id: u64,
    pub client: ClientId,
    pub created_at: f64,
    pub ops: f64,
    pub input_bytes: u64,
    pub output_bytes: u64,
}

/// Which random stream of an entity to open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Workload(ClientId),
    Policy(ClientId),
}

impl Stream {
    fn index(self) -> u64 {
        match self {
            Stream::Workload(c) => 2 * c as u64,
            Stream::Policy(c) => 2 * c as u64 + 1,
        }
    }
}

/// Independent substream of the master seed. ChaCha exposes 2^64 streams
/// per key, one per (entity, purpose), so draws of one client never depend
/// on how events of other clients interleave.
pub fn substream(master_seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.index());
    rng
}

/// Exponential variate by inverse transform; strictly positive.
pub fn sample_exponential(mean: f64, rng: &mut SimRng) -> f64 {
    let u: f64 = rng.sample(Open01);
    -mean * u.ln()
}

pub fn next_interarrival(arrival: &ArrivalSpec, rng: &mut SimRng) -> f64 {
    match *arrival {
        ArrivalSpec::Deterministic { period } => period,
        ArrivalSpec::Poisson { rate } => sample_exponential(1.0 / rate, rng),
    }
}

/// Time of the first arrival: t = 0 for periodic clients, one sampled
/// interarrival for Poisson clients.
pub fn first_arrival(arrival: &ArrivalSpec, rng: &mut SimRng) -> f64 {
    match arrival {
        ArrivalSpec::Deterministic { .. } => 0.0,
        ArrivalSpec::Poisson { .. } => next_interarrival(arrival, rng),
    }
}

pub fn sample_request(
    spec: &WorkloadSpec,
    id: u64,
    client: ClientId,
    now: f64,
    rng: &mut SimRng,
) -> Request {
    let ops = match spec.ops {
        OpsSpec::Constant { mean } => mean,
        OpsSpec::Exponential { mean } => sample_exponential(mean, rng),
    };
    Request {
        id,
        client,
        created_at: now,
        ops,
        input_bytes: spec.input_bytes,
        output_bytes: spec.output_bytes,
    }
}
