//! Continuous-time Monte Carlo for the open process, its dual, the labelled
//! stirring construction and the Ninja process.

mod dual;
mod estimate;
mod events;
mod ninja;
mod rng;
mod sampler;
mod sep;
mod stats;
mod stirring;

pub use dual::{simulate_dual, simulate_dual_logged, DualRun};
pub use estimate::{run_replicas, run_replicas_scalar, Accumulator, McEstimate, Z_99};
pub use events::{EventKind, EventSink, EVENT_CAP};
pub use ninja::simulate_ninja;
pub use rng::{RngStream, SimRng, RNG_ALGORITHM};
pub use sampler::RateTree;
pub use sep::{simulate_sep, SepOptions, SepRun};
pub use stats::{chi_square_statistic, ChiSquare};
pub use stirring::{simulate_stirring, simulate_stirring_from, StirringOutcome};
