//! Clock and pending-event queue.
//!
//! Events are popped in `(time, seq)` order where `seq` is a monotone
//! insertion counter, so simultaneous events run in the order they were
//! scheduled and every run of the same model is bit-for-bit reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use thiserror::Error;

use crate::scenario::{ClientId, ExecutorId};
use crate::workload::Request;

/// Fatal model errors. Any of these means the simulation logic is broken.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("event scheduled in the past (t={time}, clock={clock})")]
    ScheduledInPast { time: f64, clock: f64 },
    #[error("service completion at executor {executor} with nothing in service")]
    EmptyCompletion { executor: ExecutorId },
    #[error("service start at executor {executor} with {reason}")]
    BadServiceStart { executor: ExecutorId, reason: &'static str },
    #[error("response from executor {executor} outside the pool of client {client}")]
    OutsidePool { client: ClientId, executor: ExecutorId },
    #[error("response for unknown request {request}")]
    UnknownRequest { request: u64 },
    #[error("primary selection over an empty estimate table")]
    NoEstimates,
    #[error("{source} (while processing event {seq} at t={time}: {kind})")]
    InEvent {
        time: f64,
        seq: u64,
        kind: String,
        #[source]
        source: Box<SimError>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Arrival {
        client: ClientId,
    },
    /// A copy of `request` reaches `executor`.
    RequestSent {
        request: Request,
        executor: ExecutorId,
        is_probe: bool,
    },
    ServiceStart {
        executor: ExecutorId,
    },
    ServiceEnd {
        executor: ExecutorId,
        request: u64,
    },
    ResponseReceived {
        client: ClientId,
        request: Request,
        executor: ExecutorId,
        is_probe: bool,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Arrival { .. } => "arrival",
            EventKind::RequestSent { .. } => "request_sent",
            EventKind::ServiceStart { .. } => "service_start",
            EventKind::ServiceEnd { .. } => "service_end",
            EventKind::ResponseReceived { .. } => "response_received",
        }
    }

    /// Space-separated `key=value` details used by the trace dump.
    pub fn details(&self) -> String {
        match self {
            EventKind::Arrival { client } => format!("client={client}"),
            EventKind::RequestSent {
                request,
                executor,
                is_probe,
            } => format!(
                "request={} client={} executor={executor} probe={is_probe}",
                request.id, request.client
            ),
            EventKind::ServiceStart { executor } => format!("executor={executor}"),
            EventKind::ServiceEnd { executor, request } => {
                format!("executor={executor} request={request}")
            }
            EventKind::ResponseReceived {
                client,
                request,
                executor,
                is_probe,
            } => format!(
                "request={} client={client} executor={executor} probe={is_probe}",
                request.id
            ),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name(), self.details())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Event {
    /// One tab-separated trace line: `time_s seq kind details`.
    pub fn trace_line(&self) -> String {
        format!("{:.9}\t{}\t{}\t{}", self.time, self.seq, self.kind.name(), self.kind.details())
    }
}

// Min-heap adapter over (time, seq).
struct Pending(Event);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Pending>,
    clock: f64,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Inserts an event and returns its sequence number.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> Result<u64, SimError> {
        // NaN fails this comparison too.
        if !(time >= self.clock) {
            return Err(SimError::ScheduledInPast {
                time,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Pending(Event { time, seq, kind }));
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|p| p.0.time)
    }

    /// Removes the earliest event and advances the clock to it. `None`
    /// means the simulation has drained.
    pub fn pop_next(&mut self) -> Option<Event> {
        let Pending(event) = self.heap.pop()?;
        self.clock = event.time;
        Some(event)
    }

    /// Moves the clock forward without processing anything.
    pub fn advance_to(&mut self, time: f64) {
        debug_assert!(self.peek_time().map_or(true, |t| t >= time));
        if time > self.clock {
            self.clock = time;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.heap.iter().map(|p| &p.0)
    }
}
