//! Rollout storage for on-policy updates.
//!
//! Episodes are stored whole or not at all: transitions accumulate in a
//! pending area and only move into the buffer when the episode ends and
//! the buffer still has room for all of it. Updates therefore always
//! see complete episodes, which keeps the discounted-return recursion
//! honest at episode boundaries.

/// One environment step as the learner replays it.
#[derive(Debug, Clone)]
pub struct Transition {
    /// Stacked network input (4 planes); the second plane doubles as
    /// the action-validity mask when the step is replayed.
    pub channels: Vec<f64>,
    pub action: usize,
    /// Log-probability of `action` under the policy that sampled it.
    pub log_prob: f64,
    /// Value estimate at the time the action was taken.
    pub value: f64,
    pub reward: f64,
    /// True on the last transition of an episode.
    pub done: bool,
}

pub struct RolloutBuffer {
    capacity: usize,
    stored: Vec<Transition>,
    pending: Vec<Transition>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            stored: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
    /// Committed transitions (excludes the pending episode).
    pub fn len(&self) -> usize {
        self.stored.len()
    }
    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }
    pub fn transitions(&self) -> &[Transition] {
        &self.stored
    }

    /// Append a step to the episode currently being collected.
    pub fn push(&mut self, t: Transition) {
        self.pending.push(t);
    }

    /// Close the pending episode. It is committed only if the whole
    /// episode fits; otherwise it is discarded. Returns whether it was
    /// kept.
    pub fn end_episode(&mut self) -> bool {
        let fits = self.stored.len() + self.pending.len() <= self.capacity;
        if fits {
            self.stored.append(&mut self.pending);
        } else {
            self.pending.clear();
        }
        fits
    }

    pub fn clear(&mut self) {
        self.stored.clear();
        self.pending.clear();
    }

    /// Discounted return for every stored transition, resetting the
    /// accumulator at episode boundaries.
    pub fn compute_returns(&self, gamma: f64) -> Vec<f64> {
        let mut returns = vec![0.0; self.stored.len()];
        let mut running = 0.0;
        for (i, t) in self.stored.iter().enumerate().rev() {
            running = if t.done { t.reward } else { t.reward + gamma * running };
            returns[i] = running;
        }
        returns
    }
}
