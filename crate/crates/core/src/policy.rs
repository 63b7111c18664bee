//! Client-side dispatching.
//!
//! Under the uncoordinated policy each client keeps a smoothed round-trip
//! delay estimate for every executor in its pool, sends each request to the
//! executor with the lowest estimate (the primary) and, independently for
//! every other pool member, sends a duplicate probe copy with probability
//! `chi`. Every response refreshes the estimate of the executor that sent
//! it; the client-perceived delay is that of the first response.
//!
//! The baselines (`random`, `round_robin`, `least_queue_oracle`) never probe.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::des::SimError;
use crate::scenario::{ClientId, ExecutorId, PolicyConfig, PolicyKind};
use crate::workload::{Request, SimRng};

/// Round-trip delay estimate per pool member, keyed by executor id.
pub type Estimates = BTreeMap<ExecutorId, f64>;

/// Zero-load network round trip for every pool member.
pub fn init_estimates(pool: &[ExecutorId], one_way_latency: impl Fn(ExecutorId) -> f64) -> Estimates {
    pool.iter().map(|&e| (e, 2.0 * one_way_latency(e))).collect()
}

/// Executor with the lowest estimate; the lowest id wins ties.
pub fn select_primary(estimates: &Estimates) -> Result<ExecutorId, SimError> {
    let mut best: Option<(ExecutorId, f64)> = None;
    for (&id, &value) in estimates {
        match best {
            Some((_, b)) if value >= b => {}
            _ => best = Some((id, value)),
        }
    }
    best.map(|(id, _)| id).ok_or(SimError::NoEstimates)
}

pub fn ewma_update(estimate: f64, sample: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * estimate + alpha * sample
}

/// Chooses which secondaries receive a probe copy of a request.
pub trait ProbeStrategy: Send {
    fn draw(&self, pool: &[ExecutorId], primary: ExecutorId, chi: f64, rng: &mut SimRng) -> Vec<ExecutorId>;
}

/// Every non-primary pool member independently with probability `chi`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IndependentDuplicates;

impl ProbeStrategy for IndependentDuplicates {
    fn draw(&self, pool: &[ExecutorId], primary: ExecutorId, chi: f64, rng: &mut SimRng) -> Vec<ExecutorId> {
        draw_probe_set(pool, primary, chi, rng)
    }
}

/// One uniform is consumed per pool member, primary included, so the
/// stream stays aligned whatever `chi` is or which member is primary. With
/// the same stream, a larger `chi` yields a superset.
pub fn draw_probe_set(pool: &[ExecutorId], primary: ExecutorId, chi: f64, rng: &mut SimRng) -> Vec<ExecutorId> {
    let mut probes = Vec::new();
    for &e in pool {
        let u: f64 = rng.random();
        if e != primary && u < chi {
            probes.push(e);
        }
    }
    probes
}

/// Destination for the non-probing baselines.
pub fn baseline_select(
    kind: PolicyKind,
    pool: &[ExecutorId],
    rr_cursor: &mut usize,
    rng: &mut SimRng,
    queue_lengths: &[usize],
) -> ExecutorId {
    match kind {
        PolicyKind::Random => pool[rng.random_range(0..pool.len())],
        PolicyKind::RoundRobin => {
            let e = pool[*rr_cursor % pool.len()];
            *rr_cursor = (*rr_cursor + 1) % pool.len();
            e
        }
        PolicyKind::LeastQueueOracle | PolicyKind::Uncoordinated => *pool
            .iter()
            .min_by_key(|&&e| (queue_lengths[e], e))
            .expect("pool is never empty"),
    }
}

/// Destinations of one dispatched request.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub primary: ExecutorId,
    pub probes: Vec<ExecutorId>,
}

impl Dispatch {
    pub fn copies(&self) -> usize {
        1 + self.probes.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct Outstanding {
    copies_pending: usize,
    copies_sent: usize,
    answered: bool,
}

/// What a response meant for the client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseOutcome {
    /// End-to-end delay, set only for the first response of a request.
    pub first_delay: Option<f64>,
    /// Copies the request was sent as, primary included.
    pub copies_sent: usize,
}

pub struct ClientPolicyState {
    client: ClientId,
    kind: PolicyKind,
    pool: Vec<ExecutorId>,
    estimates: Estimates,
    alpha: f64,
    chi: f64,
    probes_sent: u64,
    requests_sent: u64,
    rr_cursor: usize,
    /// Requests with copies still in flight; also tracks whether the first
    /// response has been seen.
    outstanding: HashMap<u64, Outstanding>,
    strategy: Box<dyn ProbeStrategy>,
    rng: SimRng,
}

impl ClientPolicyState {
    pub fn new(
        client: ClientId,
        config: &PolicyConfig,
        pool: Vec<ExecutorId>,
        one_way_latency: impl Fn(ExecutorId) -> f64,
        rng: SimRng,
    ) -> Self {
        assert!(!pool.is_empty(), "client {client} has an empty pool");
        let estimates = init_estimates(&pool, one_way_latency);
        Self {
            client,
            kind: config.kind,
            pool,
            estimates,
            alpha: config.alpha,
            chi: config.chi,
            probes_sent: 0,
            requests_sent: 0,
            rr_cursor: 0,
            outstanding: HashMap::new(),
            strategy: Box::new(IndependentDuplicates),
            rng,
        }
    }

    pub fn with_probe_strategy(mut self, strategy: Box<dyn ProbeStrategy>) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn pool(&self) -> &[ExecutorId] {
        &self.pool
    }

    pub fn estimates(&self) -> &Estimates {
        &self.estimates
    }

    pub fn probes_sent(&self) -> u64 {
        self.probes_sent
    }

    pub fn requests_sent(&self) -> u64 {
        self.requests_sent
    }

    /// Requests whose first response has not arrived yet.
    pub fn unanswered(&self) -> usize {
        self.outstanding.values().filter(|o| !o.answered).count()
    }

    /// Copies of any request still in flight.
    pub fn copies_in_flight(&self) -> usize {
        self.outstanding.values().map(|o| o.copies_pending).sum()
    }

    /// Chooses the destinations of `request` and books the copies.
    /// `queue_lengths` is only read by the oracle baseline.
    pub fn dispatch(&mut self, request: &Request, queue_lengths: &[usize]) -> Result<Dispatch, SimError> {
        let dispatch = match self.kind {
            PolicyKind::Uncoordinated => {
                let primary = select_primary(&self.estimates)?;
                let probes = self.strategy.draw(&self.pool, primary, self.chi, &mut self.rng);
                Dispatch { primary, probes }
            }
            kind => Dispatch {
                primary: baseline_select(kind, &self.pool, &mut self.rr_cursor, &mut self.rng, queue_lengths),
                probes: Vec::new(),
            },
        };
        self.requests_sent += 1;
        self.probes_sent += dispatch.probes.len() as u64;
        let copies = dispatch.copies();
        self.outstanding.insert(
            request.id,
            Outstanding {
                copies_pending: copies,
                copies_sent: copies,
                answered: false,
            },
        );
        Ok(dispatch)
    }

    /// Folds a response into the estimate table.
    pub fn on_response(&mut self, request: &Request, executor: ExecutorId, now: f64) -> Result<ResponseOutcome, SimError> {
        let estimate = self.estimates.get_mut(&executor).ok_or(SimError::OutsidePool {
            client: self.client,
            executor,
        })?;
        let delay = now - request.created_at;
        *estimate = ewma_update(*estimate, delay, self.alpha);

        let entry = self
            .outstanding
            .get_mut(&request.id)
            .ok_or(SimError::UnknownRequest { request: request.id })?;
        entry.copies_pending -= 1;
        let first_delay = if entry.answered {
            None
        } else {
            entry.answered = true;
            Some(delay)
        };
        let copies_sent = entry.copies_sent;
        if entry.copies_pending == 0 {
            self.outstanding.remove(&request.id);
        }
        Ok(ResponseOutcome {
            first_delay,
            copies_sent,
        })
    }
}
