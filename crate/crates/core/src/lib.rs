//! Joint communication and computation allocation for mobile edge clouds:
//! task-graph partitioning, demand search, greedy admission with
//! critical-value pricing, reference oracles and seeded scenarios.

pub mod market;
pub mod offload;
pub mod oracles;
pub mod scenario;
pub mod taskgraph;

pub use market::{AllocationResult, DemandProfile, PricingMode, Topology, UserId};
pub use offload::{Deadline, Demand, DemandOutcome, DeviceProfile, LinkConfig, LinkTemplate, Location, PartitionPlan, VmCatalog};
pub use oracles::{Method, OracleReport};
pub use scenario::{Scenario, ScenarioConfig};
pub use taskgraph::{ComponentId, TaskGraph};
