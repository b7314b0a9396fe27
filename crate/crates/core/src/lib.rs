//! Grid-based macro placement toolkit.
//!
//! The crate is organised as a pipeline of small modules:
//!
//! * [`bookshelf`] reads and writes Bookshelf netlist bundles and can
//!   generate deterministic synthetic instances.
//! * [`geometry`] snaps real rectangles onto an `N x N` grid and tracks
//!   cell occupancy through lift/drop edits.
//! * [`metrics`] maintains exact half-perimeter wirelength and a
//!   periphery-distance regularity score.
//! * [`masks`] derives the per-cell feature planes (validity, wirelength
//!   delta, regularity delta, canvas image) an agent consumes.
//! * [`env`] wraps everything into a sequential decision process with a
//!   blended wirelength/regularity reward.
//! * [`agent`] provides a greedy one-step optimizer and a small
//!   convolutional policy trained with clipped-surrogate policy gradients.
//!
//! All floating point work is `f64` and deterministic: fixed seeds give
//! bit-identical placements, rewards and parameter trajectories.

pub mod agent;
pub mod bookshelf;
pub mod env;
pub mod geometry;
pub mod masks;
pub mod metrics;

pub use bookshelf::{BookshelfError, Macro, Net, Netlist, Pin, PinOwner, Terminal};
pub use env::{EnvConfig, EnvError, Mode, Observation, OrderRule, PlacementEnv, StepResult};
pub use geometry::{Canvas, GeomError, GridPos, PlacementState};
pub use masks::{Mask, MaskKind, NormalizeTarget, INVALID_SENTINEL};
pub use metrics::{MetricError, MovePricer, NetExtremes, RegularityValue};
