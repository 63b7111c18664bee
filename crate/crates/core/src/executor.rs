//! Edge executors: one non-preemptive FIFO server each.
//!
//! Probe copies are served exactly like ordinary requests.

use std::collections::VecDeque;

use crate::des::SimError;
use crate::scenario::{ExecutorId, ExecutorSpec};
use crate::workload::Request;

pub fn service_time(ops: f64, speed: f64) -> f64 {
    ops / speed
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub request: Request,
    pub arrived_at: f64,
    pub is_probe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct InService {
    job: Job,
    started_at: f64,
    ends_at: f64,
}

#[derive(Debug, Clone)]
pub struct ExecutorState {
    id: ExecutorId,
    speed: f64,
    queue: VecDeque<Job>,
    in_service: Option<InService>,
    start_pending: bool,
    /// Measurement window `(from, to]` for utilization.
    window: (f64, f64),
    busy_time_accum: f64,
    busy_in_window: f64,
    served_count: u64,
    served_ops: f64,
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

impl ExecutorState {
    pub fn new(spec: &ExecutorSpec, window: (f64, f64)) -> Self {
        Self {
            id: spec.id,
            speed: spec.speed,
            queue: VecDeque::new(),
            in_service: None,
            start_pending: false,
            window,
            busy_time_accum: 0.0,
            busy_in_window: 0.0,
            served_count: 0,
            served_ops: 0.0,
        }
    }

    pub fn id(&self) -> ExecutorId {
        self.id
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    /// Jobs present at the executor, waiting or in service.
    pub fn queue_length(&self) -> usize {
        self.queue.len() + usize::from(self.in_service.is_some())
    }

    pub fn waiting(&self) -> impl Iterator<Item = &Job> {
        self.queue.iter()
    }

    pub fn busy_time(&self) -> f64 {
        self.busy_time_accum
    }

    pub fn served_count(&self) -> u64 {
        self.served_count
    }

    pub fn served_ops(&self) -> f64 {
        self.served_ops
    }

    /// Appends a job. Returns `true` when the server is idle and a service
    /// start has to be scheduled at the current instant.
    pub fn enqueue_request(&mut self, request: Request, now: f64, is_probe: bool) -> bool {
        self.queue.push_back(Job {
            request,
            arrived_at: now,
            is_probe,
        });
        if self.in_service.is_none() && !self.start_pending {
            self.start_pending = true;
            true
        } else {
            false
        }
    }

    /// Puts the head of the queue into service and returns its completion time.
    pub fn start_service(&mut self, now: f64) -> Result<(u64, f64), SimError> {
        if self.in_service.is_some() {
            return Err(SimError::BadServiceStart {
                executor: self.id,
                reason: "the server already busy",
            });
        }
        let job = self.queue.pop_front().ok_or(SimError::BadServiceStart {
            executor: self.id,
            reason: "an empty queue",
        })?;
        self.start_pending = false;
        let ends_at = now + service_time(job.request.ops, self.speed);
        self.in_service = Some(InService {
            job,
            started_at: now,
            ends_at,
        });
        Ok((job.request.id, ends_at))
    }

    /// Finishes the job in service. The flag is `true` when a backlog is
    /// waiting and the next service start has to be scheduled now.
    pub fn complete_request(&mut self, now: f64) -> Result<(Job, bool), SimError> {
        let done = self
            .in_service
            .take()
            .ok_or(SimError::EmptyCompletion { executor: self.id })?;
        let busy = (now - done.started_at).max(0.0);
        self.busy_time_accum += busy;
        self.busy_in_window += overlap((done.started_at, now), self.window);
        self.served_count += 1;
        self.served_ops += done.job.request.ops;
        let next = !self.queue.is_empty();
        if next {
            self.start_pending = true;
        }
        Ok((done.job, next))
    }

    /// Completion time of the job in service, if any.
    pub fn busy_until(&self) -> Option<f64> {
        self.in_service.map(|s| s.ends_at)
    }

    /// Busy fraction of the measurement window, counting the job still in
    /// service up to `now`.
    pub fn utilization(&self, now: f64) -> f64 {
        let len = self.window.1 - self.window.0;
        let partial = self
            .in_service
            .map_or(0.0, |s| overlap((s.started_at, now), self.window));
        ((self.busy_in_window + partial) / len).clamp(0.0, 1.0)
    }
}
