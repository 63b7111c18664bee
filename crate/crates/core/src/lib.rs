//! Discrete-event simulator of IoT clients dispatching serverless function
//! invocations to edge executors without any coordination.
//!
//! Each client ranks the executors of its pool by a smoothed delay
//! estimate, sends requests to the best one and occasionally probes the
//! others with duplicate copies to keep the estimates fresh. The simulator
//! measures the resulting delay distribution, network traffic and executor
//! load, and sweeps the probe probability and the pool size.

pub mod des;
pub mod executor;
pub mod metrics;
pub mod policy;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod workload;

pub use des::{Event, EventKind, EventQueue, SimError};
pub use metrics::{empirical_cdf, quantile_nearest_rank, MetricsReport};
pub use scenario::{PolicyConfig, PolicyKind, Scenario, ScenarioError};
pub use sim::{run_simulation, RunStats, Simulation};
pub use sweep::{sweep, Execution, SweepError, SweepParam, SweepPoint, SweepSpec};
