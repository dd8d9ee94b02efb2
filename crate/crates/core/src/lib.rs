//! Static data-race detection for OpenMP-style programs using phase
//! interval analysis over a reduced task graph.

pub mod frontend;
pub mod cfg;
pub mod taskgraph;
pub mod pia;
pub mod mhp;
pub mod racedetect;
pub mod pipeline;
pub mod report;
pub mod metrics;
pub mod bench;
