//! The placement decision process.
//!
//! One episode touches every movable block exactly once, in a fixed
//! order (largest area first by default). At each step the agent picks
//! a grid cell out of `N * N` for the pending block; the environment
//! drops it there, rewards the choice, and presents the next block.
//!
//! Two modes share the machinery:
//!
//! * **Place** builds a layout from an empty canvas. Every placed block
//!   immediately claims its cells.
//! * **Regulate** refines an existing complete, overlap-free layout.
//!   Each block in turn is lifted from where it stands and dropped
//!   somewhere fresh. Blocks not yet adjusted stay visible to the
//!   wirelength bookkeeping but do not block candidate cells, so the
//!   agent may pass through them; once adjusted, a block claims its
//!   cells for the rest of the episode, which is why the final layout
//!   is always overlap-free.
//!
//! The reward blends two per-step min-max normalised terms: how close
//! the chosen cell came to the best available wirelength delta, and how
//! close it came to the best available periphery-distance delta:
//! `r = alpha * r_wire + (1 - alpha) * r_reg`, each term in `[0, 1]`.
//!
//! Everything is deterministic: a fixed (config, netlist, initial,
//! action sequence) reproduces identical step results bit for bit.

use crate::agent;
use crate::bookshelf::Netlist;
use crate::geometry::{overlap_free, Canvas, GeomError, GridPos, PlacementState};
use crate::masks::{
    canvas_image, normalize_mask, position_mask, regular_mask, wire_mask, Mask, MaskKind,
    NormalizeTarget, INVALID_SENTINEL,
};
use crate::metrics::{regularity_total, MetricError, NetExtremes, RegularityValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Build a layout on an empty canvas.
    Place,
    /// Refine an existing complete layout.
    Regulate,
}

/// How the episode orders the blocks it visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderRule {
    /// Descending area, ties by id.
    AreaDesc,
    /// Descending incident-net count, ties by id.
    NetCountDesc,
    /// Descending area, then descending net count, then id.
    #[default]
    AreaThenNets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub mode: Mode,
    /// Wirelength weight in the blended reward, in `[0, 1]`.
    pub alpha: f64,
    /// Grid resolution per axis.
    pub n_grid: usize,
    /// Owned by callers that sample actions; the process itself is
    /// deterministic and never draws from it.
    pub seed: u64,
    pub order_rule: OrderRule,
}

impl EnvConfig {
    pub fn place(n_grid: usize) -> Self {
        Self {
            mode: Mode::Place,
            alpha: 0.7,
            n_grid,
            seed: 0,
            order_rule: OrderRule::AreaThenNets,
        }
    }

    pub fn regulate(n_grid: usize) -> Self {
        Self {
            mode: Mode::Regulate,
            ..Self::place(n_grid)
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(EnvError::BadConfig(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.n_grid < 2 {
            return Err(EnvError::BadConfig(format!(
                "n_grid must be at least 2, got {}",
                self.n_grid
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("invalid initial placement: {0}")]
    InvalidInitialPlacement(String),
    #[error("refinement needs an initial placement: {0}")]
    MissingInitial(String),
    #[error("action {action} targets an invalid cell")]
    InvalidAction { action: usize },
    #[error("the episode is over; reset first")]
    EpisodeDone,
    #[error("no valid position remains for `{0}`")]
    NoValidPosition(String),
    #[error("bad environment config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// What the agent sees before choosing a cell for the pending block.
#[derive(Debug, Clone)]
pub struct Observation {
    /// 1 on cells covered by anything placed (loose or claimed) or by a
    /// terminal.
    pub canvas: Mask,
    /// 1 on cells where the pending block may land.
    pub position: Mask,
    /// Wirelength deltas squashed into `[-1, 1]`; sentinel on invalid.
    pub wire_norm: Mask,
    /// Periphery-distance deltas squashed into `[-1, 1]`.
    pub regular_norm: Mask,
    /// Exact wirelength delta per valid cell.
    pub wire_raw: Mask,
    /// Exact periphery-distance delta per valid cell.
    pub regular_raw: Mask,
    /// Step number within the episode (0-based); equals the episode
    /// length in the terminal observation.
    pub macro_index: usize,
    /// Netlist index of the pending block, `None` once done.
    pub current: Option<usize>,
    /// Pending block footprint in cells, `(0, 0)` once done.
    pub macro_dims: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub r_wire: f64,
    pub r_reg: f64,
    pub done: bool,
}

/// One transcript line per completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub step: usize,
    pub macro_id: String,
    pub action: usize,
    pub r_wire: f64,
    pub r_reg: f64,
    pub hpwl: f64,
    pub regularity: f64,
}

/// Visit order over movable blocks under `rule`; ties always fall back
/// to the id so the order is invariant under netlist permutation.
pub fn macro_order(netlist: &Netlist, rule: OrderRule) -> Vec<usize> {
    let nets_of = netlist.nets_of_macros();
    let mut idx: Vec<usize> = (0..netlist.macros.len()).collect();
    idx.sort_by(|&a, &b| {
        let ma = &netlist.macros[a];
        let mb = &netlist.macros[b];
        let area = mb.area().total_cmp(&ma.area());
        let nets = nets_of[b].len().cmp(&nets_of[a].len());
        let id = ma.id.cmp(&mb.id);
        match rule {
            OrderRule::AreaDesc => area.then(id),
            OrderRule::NetCountDesc => nets.then(id),
            OrderRule::AreaThenNets => area.then(nets).then(id),
        }
    });
    idx
}

/// Per-step reward terms for choosing `action` given the raw masks:
/// each term measures how close the choice came to the best valid value
/// (1 = best, 0 = worst or degenerate).
pub fn reward_components(
    wire_raw: &Mask,
    regular_raw: &Mask,
    action: usize,
    alpha: f64,
) -> (f64, f64, f64) {
    fn closeness(mask: &Mask, action: usize) -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in mask.values() {
            if Mask::is_valid_value(v) {
                min = min.min(v);
                max = max.max(v);
            }
        }
        if max > min {
            (max - mask.values()[action]) / (max - min)
        } else {
            0.0
        }
    }
    let r_wire = closeness(wire_raw, action);
    let r_reg = closeness(regular_raw, action);
    (r_wire, r_reg, alpha * r_wire + (1.0 - alpha) * r_reg)
}

/// Scratch evaluation of a complete grid placement.
pub fn evaluate_positions(
    netlist: &Netlist,
    canvas: &Canvas,
    positions: &[Option<GridPos>],
) -> Result<(f64, RegularityValue), MetricError> {
    let real: Vec<Option<(f64, f64)>> = positions
        .iter()
        .map(|p| p.map(|g| canvas.real_pos(g)))
        .collect();
    let hpwl = crate::metrics::hpwl_total(netlist, &real)?;
    Ok((hpwl, regularity_total(positions, canvas)))
}

struct CurrentMasks {
    position: Mask,
    wire_raw: Mask,
    regular_raw: Mask,
}

pub struct PlacementEnv {
    config: EnvConfig,
    netlist: Netlist,
    canvas: Canvas,
    order: Vec<usize>,
    cursor: usize,
    state: PlacementState,
    extremes: NetExtremes,
    current: Option<CurrentMasks>,
    done: bool,
    transcript: Vec<TranscriptEntry>,
}

impl PlacementEnv {
    /// Build and reset in one go. `initial` is required in Regulate mode
    /// unless a greedy first placement can be computed as the default;
    /// Place mode must start from nothing.
    pub fn new(
        config: EnvConfig,
        netlist: Netlist,
        initial: Option<&[GridPos]>,
    ) -> Result<(Self, Observation), EnvError> {
        config.validate()?;
        let canvas = Canvas::new(netlist.canvas_width, netlist.canvas_height, config.n_grid)?;
        let state = PlacementState::new(&netlist, &canvas)?;
        let extremes = NetExtremes::new(&netlist);
        let mut env = Self {
            order: macro_order(&netlist, config.order_rule),
            cursor: 0,
            state,
            extremes,
            current: None,
            done: false,
            transcript: Vec::new(),
            config,
            netlist,
            canvas,
        };
        let obs = env.reset(initial)?;
        Ok((env, obs))
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }
    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }
    pub fn canvas(&self) -> &Canvas {
        &self.canvas
    }
    pub fn state(&self) -> &PlacementState {
        &self.state
    }
    pub fn done(&self) -> bool {
        self.done
    }
    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }
    /// Episode length: one step per movable block.
    pub fn episode_len(&self) -> usize {
        self.order.len()
    }
    /// Netlist index of the block pending at step `i`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Start a fresh episode. See [`PlacementEnv::new`] for the rules
    /// about `initial`.
    pub fn reset(&mut self, initial: Option<&[GridPos]>) -> Result<Observation, EnvError> {
        self.state = PlacementState::new(&self.netlist, &self.canvas)?;
        self.extremes = NetExtremes::new(&self.netlist);
        self.cursor = 0;
        self.done = false;
        self.transcript.clear();
        self.current = None;

        match self.config.mode {
            Mode::Place => {
                if initial.is_some() {
                    return Err(EnvError::InvalidInitialPlacement(
                        "first placement starts from an empty canvas".into(),
                    ));
                }
            }
            Mode::Regulate => {
                let owned;
                let initial = match initial {
                    Some(i) => i,
                    None => {
                        owned = agent::greedy_place_positions(&self.netlist, self.config.n_grid)
                            .map_err(|e| {
                                EnvError::MissingInitial(format!(
                                    "no default first placement: {e}"
                                ))
                            })?;
                        &owned
                    }
                };
                if initial.len() != self.netlist.macros.len() {
                    return Err(EnvError::InvalidInitialPlacement(format!(
                        "{} positions for {} blocks",
                        initial.len(),
                        self.netlist.macros.len()
                    )));
                }
                for (m, &pos) in initial.iter().enumerate() {
                    self.state
                        .place_loose(m, pos, &self.canvas)
                        .map_err(|e| EnvError::InvalidInitialPlacement(e.to_string()))?;
                    self.extremes.insert_macro(m, self.canvas.real_pos(pos));
                }
                if !overlap_free(&self.state, &self.netlist, &self.canvas) {
                    return Err(EnvError::InvalidInitialPlacement(
                        "blocks overlap each other or a terminal".into(),
                    ));
                }
                self.state.reset_adjusted();
            }
        }

        if self.order.is_empty() {
            self.done = true;
            return Ok(self.terminal_observation());
        }
        self.begin_pending()?;
        Ok(self.build_observation())
    }

    /// Lift the pending block (Regulate) so masks see it as absent.
    fn begin_pending(&mut self) -> Result<(), EnvError> {
        let m = self.order[self.cursor];
        if self.config.mode == Mode::Regulate {
            self.state.lift(m)?;
            self.extremes.remove_macro(m);
        }
        Ok(())
    }

    fn build_observation(&mut self) -> Observation {
        let m = self.order[self.cursor];
        let position = position_mask(&self.state, m, &self.canvas);
        let wire_raw = wire_mask(&self.state, &self.extremes, m, &position, &self.canvas);
        let regular_raw = regular_mask(&self.state, m, &position, &self.canvas);
        let obs = Observation {
            canvas: canvas_image(&self.state, &self.canvas),
            wire_norm: normalize_mask(&wire_raw, NormalizeTarget::SymmetricUnit),
            regular_norm: normalize_mask(&regular_raw, NormalizeTarget::SymmetricUnit),
            position: position.clone(),
            wire_raw: wire_raw.clone(),
            regular_raw: regular_raw.clone(),
            macro_index: self.cursor,
            current: Some(m),
            macro_dims: self.state.footprint_of(m),
        };
        self.current = Some(CurrentMasks {
            position,
            wire_raw,
            regular_raw,
        });
        obs
    }

    fn terminal_observation(&self) -> Observation {
        let n = self.config.n_grid;
        Observation {
            canvas: canvas_image(&self.state, &self.canvas),
            position: Mask::filled(n, MaskKind::Position, 0.0),
            wire_norm: Mask::filled(n, MaskKind::WireNorm, INVALID_SENTINEL),
            regular_norm: Mask::filled(n, MaskKind::RegularNorm, INVALID_SENTINEL),
            wire_raw: Mask::filled(n, MaskKind::WireRaw, INVALID_SENTINEL),
            regular_raw: Mask::filled(n, MaskKind::RegularRaw, INVALID_SENTINEL),
            macro_index: self.order.len(),
            current: None,
            macro_dims: (0, 0),
        }
    }

    /// Decode a flat action into a cell: `gx = a % N`, `gy = a / N`.
    pub fn decode_action(&self, action: usize) -> GridPos {
        GridPos::new(action % self.config.n_grid, action / self.config.n_grid)
    }

    /// Drop the pending block on the chosen cell. An action on an
    /// invalid cell aborts the episode: the error is returned, the
    /// episode is marked done, and the step earns reward zero.
    pub fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let n = self.config.n_grid;
        let masks = self
            .current
            .as_ref()
            .expect("an unfinished episode always has masks for the pending block");
        if action >= n * n || masks.position.values()[action] != 1.0 {
            self.done = true;
            self.current = None;
            return Err(EnvError::InvalidAction { action });
        }

        let m = self.order[self.cursor];
        let pos = self.decode_action(action);
        let masks = self.current.take().expect("checked above");
        let (r_wire, r_reg, reward) =
            reward_components(&masks.wire_raw, &masks.regular_raw, action, self.config.alpha);

        self.state
            .drop(m, pos, &self.canvas)
            .expect("a mask-valid cell always accepts the drop");
        self.extremes.insert_macro(m, self.canvas.real_pos(pos));

        let hpwl = self.extremes.hpwl_total_tracked();
        let regularity = regularity_total(self.state.positions(), &self.canvas);
        self.transcript.push(TranscriptEntry {
            step: self.cursor,
            macro_id: self.netlist.macros[m].id.clone(),
            action,
            r_wire,
            r_reg,
            hpwl,
            regularity: regularity.total,
        });

        self.cursor += 1;
        let observation = if self.cursor == self.order.len() {
            self.done = true;
            self.terminal_observation()
        } else {
            self.begin_pending()?;
            self.build_observation()
        };
        Ok(StepResult {
            observation,
            reward,
            r_wire,
            r_reg,
            done: self.done,
        })
    }

    /// Tracked wirelength and regularity of what is on the canvas now.
    pub fn evaluate(&self) -> (f64, RegularityValue) {
        (
            self.extremes.hpwl_total_tracked(),
            regularity_total(self.state.positions(), &self.canvas),
        )
    }

    /// Final grid anchors; complete once an episode finished normally.
    pub fn grid_positions(&self) -> Vec<Option<GridPos>> {
        self.state.positions().to_vec()
    }
}
