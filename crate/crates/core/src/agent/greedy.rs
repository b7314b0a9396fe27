//! Greedy mask-guided baseline.
//!
//! At each step the baseline scores every candidate cell by blending
//! the two raw decision planes after min-max normalisation over the
//! valid cells — `score = alpha * wire + (1 - alpha) * regular` — and
//! takes the smallest score, breaking ties toward the smallest cell
//! index (row-major, so lowest `gy` first, then lowest `gx`).
//!
//! Candidates are restricted to a conservative subset: cells whose
//! footprint avoids *everything* on the canvas, including blocks that
//! merely sit loose and would not normally block a refinement drop.
//! Starting from a layout whose footprints are pairwise cell-disjoint
//! (any layout this crate's own placement runs produce), that subset
//! always contains the cell the pending block was lifted from, which
//! prices both planes at zero; greedy therefore never accepts a step
//! that worsens its objective — wirelength can only go down or stay put
//! at `alpha = 1`, and likewise the periphery distance at `alpha = 0`
//! (exact on integer-coordinate instances, where every intermediate is
//! an integer below 2^53 and the arithmetic carries no rounding). If
//! the conservative subset is empty, which only happens on externally
//! supplied layouts, the full valid set is used instead.

use crate::bookshelf::Netlist;
use crate::env::{EnvConfig, EnvError, Observation, PlacementEnv};
use crate::geometry::GridPos;
use crate::masks::{normalize_mask, NormalizeTarget, PrefixSums};
use crate::metrics::RegularityValue;

/// Pick a cell for the pending block, or report that none is valid.
pub fn greedy_act(obs: &Observation, alpha: f64) -> Result<usize, EnvError> {
    let n = obs.position.n();
    let valid: Vec<usize> = obs
        .position
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1.0)
        .map(|(i, _)| i)
        .collect();
    if valid.is_empty() {
        return Err(EnvError::NoValidPosition(format!(
            "block #{}",
            obs.current.map_or_else(|| "?".into(), |m| m.to_string())
        )));
    }

    // Conservative subset: footprint clear of everything on the canvas.
    let (cw, ch) = obs.macro_dims;
    let img = &obs.canvas;
    let sums = PrefixSums::over(n, |i| img.values()[i] != 0.0);
    let conservative: Vec<usize> = valid
        .iter()
        .copied()
        .filter(|&i| sums.rect_empty(i % n, i / n, cw, ch))
        .collect();
    let candidates = if conservative.is_empty() { &valid } else { &conservative };

    let wire = normalize_mask(&obs.wire_raw, NormalizeTarget::Unit);
    let reg = normalize_mask(&obs.regular_raw, NormalizeTarget::Unit);
    let mut best = usize::MAX;
    let mut best_score = f64::INFINITY;
    for &i in candidates {
        let score = alpha * wire.values()[i] + (1.0 - alpha) * reg.values()[i];
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    Ok(best)
}

/// Reset `env` (with `initial` where the mode wants one) and drive a
/// full episode greedily at blend weight `alpha`. Returns the final
/// wirelength and periphery distance.
pub fn greedy_episode(
    env: &mut PlacementEnv,
    initial: Option<&[GridPos]>,
    alpha: f64,
) -> Result<(f64, RegularityValue), EnvError> {
    let mut obs = env.reset(initial)?;
    while !env.done() {
        let action = greedy_act(&obs, alpha)?;
        obs = env.step(action)?.observation;
    }
    let (hpwl, reg) = env.evaluate();
    Ok((hpwl, reg))
}

/// Wirelength-greedy first placement of the whole netlist; the default
/// starting layout for refinement runs.
pub fn greedy_place_positions(
    netlist: &Netlist,
    n_grid: usize,
) -> Result<Vec<GridPos>, EnvError> {
    let mut config = EnvConfig::place(n_grid);
    config.alpha = 1.0;
    let (mut env, _) = PlacementEnv::new(config, netlist.clone(), None)?;
    greedy_episode(&mut env, None, 1.0)?;
    Ok(env
        .grid_positions()
        .into_iter()
        .map(|p| p.expect("a finished first placement anchors every block"))
        .collect())
}
