//! One simulation instance: the event loop tying workload, policy,
//! executors and metrics together.

use crate::des::{Event, EventKind, EventQueue, SimError};
use crate::executor::ExecutorState;
use crate::metrics::{MetricsRecorder, MetricsReport};
use crate::policy::ClientPolicyState;
use crate::scenario::{assign_pool, ClientId, ExecutorId, PolicyKind, Scenario};
use crate::workload::{first_arrival, next_interarrival, sample_request, substream, SimRng, Stream};

struct ClientRuntime {
    policy: ClientPolicyState,
    workload_rng: SimRng,
}

/// Counters for end-of-run conservation checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub requests_generated: u64,
    /// Requests whose first response arrived (at any time).
    pub requests_answered: u64,
    /// Requests still waiting for their first response.
    pub requests_unanswered: u64,
    pub copies_sent: u64,
    pub copies_returned: u64,
    /// Copies not yet returned, as booked by the clients.
    pub copies_in_flight: u64,
    /// Copies waiting or in service at executors.
    pub copies_at_executors: u64,
    /// Copies travelling on the network (pending send or response events).
    pub copies_on_network: u64,
}

pub struct Simulation<'a> {
    scenario: &'a Scenario,
    queue: EventQueue,
    executors: Vec<ExecutorState>,
    clients: Vec<ClientRuntime>,
    latency: Vec<Vec<f64>>,
    metrics: MetricsRecorder,
    next_request_id: u64,
    requests_answered: u64,
    copies_returned: u64,
    trace: Option<Vec<Event>>,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64) -> Self {
        let latency = scenario.latency_matrix();
        let window = (scenario.warmup(), scenario.horizon());
        let executors = scenario
            .executors()
            .iter()
            .map(|e| ExecutorState::new(e, window))
            .collect();
        let policy = scenario.policy();
        // The oracle sees every executor.
        let pool_size = match policy.kind {
            PolicyKind::LeastQueueOracle => scenario.executors().len(),
            _ => policy.k,
        };

        let mut queue = EventQueue::new();
        let clients = scenario
            .clients()
            .iter()
            .map(|c| {
                let pool = assign_pool(c, pool_size, scenario.executors(), scenario.network());
                let row = &latency[c.id];
                let policy_state =
                    ClientPolicyState::new(c.id, policy, pool, |e| row[e], substream(seed, Stream::Policy(c.id)));
                let mut workload_rng = substream(seed, Stream::Workload(c.id));
                let t0 = first_arrival(&c.workload.arrival, &mut workload_rng);
                queue
                    .schedule(t0, EventKind::Arrival { client: c.id })
                    .expect("first arrivals are never in the past");
                ClientRuntime {
                    policy: policy_state,
                    workload_rng,
                }
            })
            .collect();

        Self {
            scenario,
            queue,
            executors,
            clients,
            latency,
            metrics: MetricsRecorder::new(),
            next_request_id: 0,
            requests_answered: 0,
            copies_returned: 0,
            trace: None,
        }
    }

    /// Keeps every processed event in memory.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn clock(&self) -> f64 {
        self.queue.clock()
    }

    pub fn trace(&self) -> Option<&[Event]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Vec<Event> {
        self.trace.take().unwrap_or_default()
    }

    pub fn executor(&self, id: ExecutorId) -> &ExecutorState {
        &self.executors[id]
    }

    pub fn client_policy(&self, id: ClientId) -> &ClientPolicyState {
        &self.clients[id].policy
    }

    pub fn metrics(&self) -> &MetricsRecorder {
        &self.metrics
    }

    /// Processes every event with time `<= t_end`, then moves the clock to
    /// `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<(), SimError> {
        while let Some(t) = self.queue.peek_time() {
            if t > t_end {
                break;
            }
            let event = self.queue.pop_next().expect("peeked");
            if let Some(trace) = self.trace.as_mut() {
                trace.push(event.clone());
            }
            let Event { time, seq, kind } = event;
            self.handle(kind.clone()).map_err(|source| SimError::InEvent {
                time,
                seq,
                kind: kind.to_string(),
                source: Box::new(source),
            })?;
        }
        self.queue.advance_to(t_end);
        Ok(())
    }

    fn handle(&mut self, kind: EventKind) -> Result<(), SimError> {
        let now = self.queue.clock();
        match kind {
            EventKind::Arrival { client } => self.on_arrival(client, now),
            EventKind::RequestSent {
                request,
                executor,
                is_probe,
            } => {
                if self.executors[executor].enqueue_request(request, now, is_probe) {
                    self.queue.schedule(now, EventKind::ServiceStart { executor })?;
                }
                Ok(())
            }
            EventKind::ServiceStart { executor } => {
                let (request, ends_at) = self.executors[executor].start_service(now)?;
                self.queue.schedule(ends_at, EventKind::ServiceEnd { executor, request })?;
                Ok(())
            }
            EventKind::ServiceEnd { executor, request } => {
                let (job, more) = self.executors[executor].complete_request(now)?;
                if job.request.id != request {
                    return Err(SimError::UnknownRequest { request });
                }
                if more {
                    self.queue.schedule(now, EventKind::ServiceStart { executor })?;
                }
                let client = job.request.client;
                let back = self.latency[client][executor]
                    + self.scenario.network().transmission_delay(job.request.output_bytes);
                self.queue.schedule(
                    now + back,
                    EventKind::ResponseReceived {
                        client,
                        request: job.request,
                        executor,
                        is_probe: job.is_probe,
                    },
                )?;
                Ok(())
            }
            EventKind::ResponseReceived {
                client,
                request,
                executor,
                ..
            } => {
                let outcome = self.clients[client].policy.on_response(&request, executor, now)?;
                self.copies_returned += 1;
                if let Some(delay) = outcome.first_delay {
                    self.requests_answered += 1;
                    if now >= self.scenario.warmup() {
                        self.metrics.record_completion(
                            delay,
                            outcome.copies_sent,
                            request.input_bytes,
                            request.output_bytes,
                        );
                    }
                }
                Ok(())
            }
        }
    }

    fn on_arrival(&mut self, client: ClientId, now: f64) -> Result<(), SimError> {
        let spec = &self.scenario.clients()[client];
        let id = self.next_request_id;
        self.next_request_id += 1;
        let runtime = &mut self.clients[client];
        let request = sample_request(&spec.workload, id, client, now, &mut runtime.workload_rng);

        let queue_lengths: Vec<usize> = if self.scenario.policy().kind == PolicyKind::LeastQueueOracle {
            self.executors.iter().map(ExecutorState::queue_length).collect()
        } else {
            Vec::new()
        };
        let dispatch = runtime.policy.dispatch(&request, &queue_lengths)?;
        let transmission = self.scenario.network().transmission_delay(request.input_bytes);
        let targets = std::iter::once((dispatch.primary, false)).chain(dispatch.probes.iter().map(|&e| (e, true)));
        for (executor, is_probe) in targets {
            self.queue.schedule(
                now + self.latency[client][executor] + transmission,
                EventKind::RequestSent {
                    request,
                    executor,
                    is_probe,
                },
            )?;
        }

        let gap = next_interarrival(&spec.workload.arrival, &mut runtime.workload_rng);
        self.queue.schedule(now + gap, EventKind::Arrival { client })?;
        Ok(())
    }

    pub fn stats(&self) -> RunStats {
        let (mut sent, mut unanswered, mut in_flight) = (0, 0, 0);
        for c in &self.clients {
            sent += c.policy.requests_sent() + c.policy.probes_sent();
            unanswered += c.policy.unanswered() as u64;
            in_flight += c.policy.copies_in_flight() as u64;
        }
        let on_network = self
            .queue
            .iter()
            .filter(|e| matches!(e.kind, EventKind::RequestSent { .. } | EventKind::ResponseReceived { .. }))
            .count() as u64;
        RunStats {
            requests_generated: self.next_request_id,
            requests_answered: self.requests_answered,
            requests_unanswered: unanswered,
            copies_sent: sent,
            copies_returned: self.copies_returned,
            copies_in_flight: in_flight,
            copies_at_executors: self.executors.iter().map(|e| e.queue_length() as u64).sum(),
            copies_on_network: on_network,
        }
    }

    /// Summary over the measured interval, as of the current clock.
    pub fn report(&self) -> MetricsReport {
        self.finalize_with(self.metrics.clone())
    }

    fn finalize_with(&self, metrics: MetricsRecorder) -> MetricsReport {
        let now = self.queue.clock();
        let utilization = self.executors.iter().map(|e| e.utilization(now)).collect();
        let (requests, probes) = self.clients.iter().fold((0, 0), |(r, p), c| {
            (r + c.policy.requests_sent(), p + c.policy.probes_sent())
        });
        metrics.finalize(self.scenario.measured_interval(), utilization, requests, probes)
    }

    /// Runs to the horizon and returns the report.
    pub fn run(mut self) -> Result<MetricsReport, SimError> {
        self.run_until(self.scenario.horizon())?;
        let metrics = std::mem::take(&mut self.metrics);
        Ok(self.finalize_with(metrics))
    }
}

/// Full run of `scenario` with master seed `seed`.
pub fn run_simulation(scenario: &Scenario, seed: u64) -> Result<MetricsReport, SimError> {
    Simulation::new(scenario, seed).run()
}
