//! Randomized benchmarking: Clifford groups with XZ-compiled circuits,
//! sequence generation, execution against depolarizing, channel-level or
//! pulse-level noise, and decay/leakage/coherence-limit analysis.

mod analysis;
mod clifford;
mod execute;

pub use analysis::*;
pub use clifford::*;
pub use execute::*;
