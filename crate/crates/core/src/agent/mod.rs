//! Decision-making on top of the placement process: a greedy
//! mask-guided baseline and a small, self-contained policy-gradient
//! learner (network, rollout storage, clipped-surrogate updates, and a
//! training loop). Everything is plain `f64` with explicit gradients so
//! runs are reproducible bit for bit and gradients can be audited
//! against finite differences.

pub mod buffer;
pub mod greedy;
pub mod nn;
pub mod policy;
pub mod ppo;
pub mod train;

pub use buffer::{RolloutBuffer, Transition};
pub use greedy::{greedy_act, greedy_episode, greedy_place_positions};
pub use policy::{CheckpointError, PolicyError, PolicyNet, PolicyOutput};
pub use ppo::{Adam, PpoConfig, PpoError, UpdateStats};
pub use train::{argmax_episode, train, CurvePoint, TrainError, TrainReport};
