//! Grid geometry: canvas discretisation, footprints and cell occupancy.
//!
//! The canvas is an `n_grid x n_grid` lattice of equally sized bins. A
//! block anchors at the left-bottom corner of a cell and claims the
//! ceiling-division footprint of its real rectangle, so grid-level
//! disjointness always implies real-rectangle disjointness.
//!
//! [`PlacementState`] distinguishes two ways of being on the canvas:
//!
//! * *claimed*: the footprint is rasterised into the occupancy grid and
//!   blocks other drops (the result of [`PlacementState::drop`]);
//! * *loose*: the block has a position but claims nothing (the result of
//!   [`PlacementState::place_loose`]), which is how a refinement pass
//!   keeps not-yet-adjusted blocks visible without letting them block
//!   candidate cells.
//!
//! Terminals are rasterised once at construction and always block.

use crate::bookshelf::Netlist;

/// Grid cell coordinates; `gx` grows rightward, `gy` grows upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridPos {
    pub gx: usize,
    pub gy: usize,
}

impl GridPos {
    pub fn new(gx: usize, gy: usize) -> Self {
        Self { gx, gy }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("footprint at ({gx}, {gy}) of {cw} x {ch} cells leaves the {n} x {n} canvas")]
    OutOfCanvas {
        gx: usize,
        gy: usize,
        cw: usize,
        ch: usize,
        n: usize,
    },
    #[error("cell ({gx}, {gy}) is already occupied")]
    CellOccupied { gx: usize, gy: usize },
    #[error("unknown macro index {0}")]
    UnknownMacro(usize),
    #[error("macro index {0} is not placed")]
    NotPlaced(usize),
    #[error("invalid canvas: {0}")]
    BadCanvas(String),
}

/// A discretised placement area.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    width: f64,
    height: f64,
    n_grid: usize,
    bin_w: f64,
    bin_h: f64,
}

impl Canvas {
    /// `n_grid >= 2` and positive extents. Bin sizes are `width / n_grid`
    /// and `height / n_grid`; integer extents divisible by `n_grid` give
    /// exactly representable bins, which keeps all downstream wirelength
    /// arithmetic exact.
    pub fn new(width: f64, height: f64, n_grid: usize) -> Result<Self, GeomError> {
        if !(width > 0.0) || !(height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(GeomError::BadCanvas(format!(
                "extents must be positive and finite, got {width} x {height}"
            )));
        }
        if n_grid < 2 {
            return Err(GeomError::BadCanvas(format!(
                "need at least a 2 x 2 grid, got {n_grid}"
            )));
        }
        Ok(Self {
            width,
            height,
            n_grid,
            bin_w: width / n_grid as f64,
            bin_h: height / n_grid as f64,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }
    pub fn height(&self) -> f64 {
        self.height
    }
    pub fn n_grid(&self) -> usize {
        self.n_grid
    }
    pub fn bin_w(&self) -> f64 {
        self.bin_w
    }
    pub fn bin_h(&self) -> f64 {
        self.bin_h
    }

    /// Footprint of a `w x h` rectangle in whole cells (ceiling division).
    pub fn footprint(&self, w: f64, h: f64) -> (usize, usize) {
        let cw = (w / self.bin_w).ceil() as usize;
        let ch = (h / self.bin_h).ceil() as usize;
        (cw.max(1), ch.max(1))
    }

    /// Real coordinates of a cell's left-bottom corner.
    pub fn real_pos(&self, pos: GridPos) -> (f64, f64) {
        (pos.gx as f64 * self.bin_w, pos.gy as f64 * self.bin_h)
    }

    /// Does a footprint anchored at `pos` stay on the grid?
    pub fn fits(&self, pos: GridPos, cw: usize, ch: usize) -> bool {
        pos.gx + cw <= self.n_grid && pos.gy + ch <= self.n_grid
    }

    /// Snap a real left-bottom position onto the grid (nearest cell).
    pub fn snap(&self, x: f64, y: f64) -> GridPos {
        let gx = (x / self.bin_w).round().max(0.0) as usize;
        let gy = (y / self.bin_h).round().max(0.0) as usize;
        GridPos {
            gx: gx.min(self.n_grid - 1),
            gy: gy.min(self.n_grid - 1),
        }
    }
}

/// Where every block currently sits and which grid cells are claimed.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementState {
    n: usize,
    /// Current anchor of each macro, if it is on the canvas at all.
    positions: Vec<Option<GridPos>>,
    /// Anchor each macro last stood on before being lifted.
    previous: Vec<Option<GridPos>>,
    /// Whether the macro's footprint is rasterised into `occupancy`.
    claimed: Vec<bool>,
    /// Set once a refinement step has (re)placed the macro.
    adjusted: Vec<bool>,
    /// Cached footprints, index-aligned with the netlist macros.
    footprints: Vec<(usize, usize)>,
    /// Terminal cells only; immutable after construction.
    terminal_cells: Vec<bool>,
    /// Terminals plus every claimed macro footprint.
    occupancy: Vec<bool>,
}

impl PlacementState {
    /// Empty state: terminals rasterised, every macro off-canvas.
    pub fn new(netlist: &Netlist, canvas: &Canvas) -> Result<Self, GeomError> {
        let n = canvas.n_grid();
        let mut terminal_cells = vec![false; n * n];
        for t in &netlist.terminals {
            // Cells whose area intersects the terminal rectangle block.
            let gx0 = (t.x / canvas.bin_w()).floor() as usize;
            let gy0 = (t.y / canvas.bin_h()).floor() as usize;
            let gx1 = ((t.x + t.width) / canvas.bin_w()).ceil() as usize;
            let gy1 = ((t.y + t.height) / canvas.bin_h()).ceil() as usize;
            if gx1 > n || gy1 > n {
                return Err(GeomError::OutOfCanvas {
                    gx: gx0,
                    gy: gy0,
                    cw: gx1.saturating_sub(gx0),
                    ch: gy1.saturating_sub(gy0),
                    n,
                });
            }
            for gy in gy0..gy1 {
                for gx in gx0..gx1 {
                    terminal_cells[gy * n + gx] = true;
                }
            }
        }
        let footprints = netlist
            .macros
            .iter()
            .map(|m| canvas.footprint(m.width, m.height))
            .collect();
        Ok(Self {
            n,
            positions: vec![None; netlist.macros.len()],
            previous: vec![None; netlist.macros.len()],
            claimed: vec![false; netlist.macros.len()],
            adjusted: vec![false; netlist.macros.len()],
            footprints,
            occupancy: terminal_cells.clone(),
            terminal_cells,
        })
    }

    pub fn n_grid(&self) -> usize {
        self.n
    }
    pub fn len_macros(&self) -> usize {
        self.positions.len()
    }
    pub fn position(&self, m: usize) -> Option<GridPos> {
        self.positions.get(m).copied().flatten()
    }
    /// Current anchors, index-aligned with the netlist macros.
    pub fn positions(&self) -> &[Option<GridPos>] {
        &self.positions
    }
    pub fn previous(&self, m: usize) -> Option<GridPos> {
        self.previous.get(m).copied().flatten()
    }
    pub fn is_adjusted(&self, m: usize) -> bool {
        self.adjusted[m]
    }
    pub fn is_claimed(&self, m: usize) -> bool {
        self.claimed[m]
    }
    pub fn footprint_of(&self, m: usize) -> (usize, usize) {
        self.footprints[m]
    }
    /// Terminals plus claimed macro footprints, row-major (`gy * n + gx`).
    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }
    /// Terminal cells alone, row-major.
    pub fn terminal_cells(&self) -> &[bool] {
        &self.terminal_cells
    }
    pub fn all_placed(&self) -> bool {
        self.positions.iter().all(Option::is_some)
    }

    fn check_macro(&self, m: usize) -> Result<(), GeomError> {
        if m < self.positions.len() {
            Ok(())
        } else {
            Err(GeomError::UnknownMacro(m))
        }
    }

    fn cells_free(&self, pos: GridPos, cw: usize, ch: usize) -> bool {
        for gy in pos.gy..pos.gy + ch {
            for gx in pos.gx..pos.gx + cw {
                if self.occupancy[gy * self.n + gx] {
                    return false;
                }
            }
        }
        true
    }

    /// Claim a footprint: the macro becomes placed, adjusted and blocking.
    pub fn drop(&mut self, m: usize, pos: GridPos, canvas: &Canvas) -> Result<(), GeomError> {
        self.check_macro(m)?;
        let (cw, ch) = self.footprints[m];
        if !canvas.fits(pos, cw, ch) {
            return Err(GeomError::OutOfCanvas {
                gx: pos.gx,
                gy: pos.gy,
                cw,
                ch,
                n: self.n,
            });
        }
        if !self.cells_free(pos, cw, ch) {
            // Report the first offending cell for the error message.
            for gy in pos.gy..pos.gy + ch {
                for gx in pos.gx..pos.gx + cw {
                    if self.occupancy[gy * self.n + gx] {
                        return Err(GeomError::CellOccupied { gx, gy });
                    }
                }
            }
            unreachable!("cells_free said otherwise");
        }
        for gy in pos.gy..pos.gy + ch {
            for gx in pos.gx..pos.gx + cw {
                self.occupancy[gy * self.n + gx] = true;
            }
        }
        self.positions[m] = Some(pos);
        self.claimed[m] = true;
        self.adjusted[m] = true;
        Ok(())
    }

    /// Put a macro on the canvas without claiming cells. Used to load an
    /// existing layout whose blocks have not been adjusted yet.
    pub fn place_loose(&mut self, m: usize, pos: GridPos, canvas: &Canvas) -> Result<(), GeomError> {
        self.check_macro(m)?;
        let (cw, ch) = self.footprints[m];
        if !canvas.fits(pos, cw, ch) {
            return Err(GeomError::OutOfCanvas {
                gx: pos.gx,
                gy: pos.gy,
                cw,
                ch,
                n: self.n,
            });
        }
        self.positions[m] = Some(pos);
        self.claimed[m] = false;
        Ok(())
    }

    /// Take a macro off the canvas, releasing its claim if it had one and
    /// remembering the vacated anchor as its previous position.
    pub fn lift(&mut self, m: usize) -> Result<GridPos, GeomError> {
        self.check_macro(m)?;
        let pos = self.positions[m].ok_or(GeomError::NotPlaced(m))?;
        if self.claimed[m] {
            let (cw, ch) = self.footprints[m];
            for gy in pos.gy..pos.gy + ch {
                for gx in pos.gx..pos.gx + cw {
                    self.occupancy[gy * self.n + gx] = false;
                }
            }
            self.claimed[m] = false;
        }
        self.positions[m] = None;
        self.previous[m] = Some(pos);
        Ok(pos)
    }

    /// Clear all adjusted flags (the start of a fresh refinement pass).
    pub fn reset_adjusted(&mut self) {
        self.adjusted.iter_mut().for_each(|a| *a = false);
    }

    /// Occupancy rebuilt from scratch out of terminals and claimed
    /// footprints; equal to [`Self::occupancy`] by construction.
    pub fn recompute_occupancy(&self) -> Vec<bool> {
        let mut grid = self.terminal_cells.clone();
        for (m, pos) in self.positions.iter().enumerate() {
            if let (Some(pos), true) = (pos, self.claimed[m]) {
                let (cw, ch) = self.footprints[m];
                for gy in pos.gy..pos.gy + ch {
                    for gx in pos.gx..pos.gx + cw {
                        grid[gy * self.n + gx] = true;
                    }
                }
            }
        }
        grid
    }
}

/// Do two half-open real rectangles intersect with positive area?
fn rects_overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
    a.0 < b.0 + b.2 && b.0 < a.0 + a.2 && a.1 < b.1 + b.3 && b.1 < a.1 + a.3
}

/// True iff no pair of placed macros' real rectangles intersects with
/// positive area and none intersects a terminal. Macros that are not on
/// the canvas are skipped, so mid-episode states can be checked too.
pub fn overlap_free(state: &PlacementState, netlist: &Netlist, canvas: &Canvas) -> bool {
    let rects: Vec<(f64, f64, f64, f64)> = netlist
        .macros
        .iter()
        .enumerate()
        .filter_map(|(m, mac)| {
            state.position(m).map(|pos| {
                let (x, y) = canvas.real_pos(pos);
                (x, y, mac.width, mac.height)
            })
        })
        .collect();
    for (i, a) in rects.iter().enumerate() {
        for b in rects.iter().skip(i + 1) {
            if rects_overlap(*a, *b) {
                return false;
            }
        }
        for t in &netlist.terminals {
            if rects_overlap(*a, (t.x, t.y, t.width, t.height)) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bookshelf::{Macro, Netlist, Terminal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn net_with(macros: Vec<(f64, f64)>, terminals: Vec<(f64, f64, f64, f64)>) -> Netlist {
        Netlist {
            macros: macros
                .into_iter()
                .enumerate()
                .map(|(i, (w, h))| Macro {
                    id: format!("m{i}"),
                    width: w,
                    height: h,
                })
                .collect(),
            terminals: terminals
                .into_iter()
                .enumerate()
                .map(|(i, (w, h, x, y))| Terminal {
                    id: format!("t{i}"),
                    width: w,
                    height: h,
                    x,
                    y,
                })
                .collect(),
            nets: vec![],
            canvas_width: 160.0,
            canvas_height: 160.0,
            initial: vec![],
        }
    }

    fn fix_initial(mut n: Netlist) -> Netlist {
        n.initial = vec![None; n.macros.len()];
        n
    }

    #[test]
    fn footprints_use_ceiling_division() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        assert_eq!(canvas.bin_w(), 10.0);
        assert_eq!(canvas.footprint(30.0, 20.0), (3, 2));
        assert_eq!(canvas.footprint(25.0, 11.0), (3, 2));
        assert_eq!(canvas.footprint(10.0, 10.0), (1, 1));
        assert_eq!(canvas.footprint(0.5, 0.5), (1, 1));
        assert_eq!(canvas.footprint(160.0, 160.0), (16, 16));
    }

    #[test]
    fn full_width_macro_only_fits_at_zero() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        let netlist = fix_initial(net_with(vec![(160.0, 10.0)], vec![]));
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        assert!(matches!(
            state.drop(0, GridPos::new(1, 0), &canvas),
            Err(GeomError::OutOfCanvas { .. })
        ));
        state.drop(0, GridPos::new(0, 0), &canvas).unwrap();
    }

    #[test]
    fn drop_claims_exactly_the_footprint() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        let netlist = fix_initial(net_with(vec![(30.0, 20.0)], vec![]));
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        state.drop(0, GridPos::new(4, 5), &canvas).unwrap();
        let set: Vec<usize> = (0..256).filter(|&i| state.occupancy()[i]).collect();
        assert_eq!(set.len(), 6);
        for gy in 5..7 {
            for gx in 4..7 {
                assert!(state.occupancy()[gy * 16 + gx]);
            }
        }
        assert!(state.is_adjusted(0));
    }

    #[test]
    fn occupied_cells_reject_drops_but_loose_macros_do_not() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        let netlist = fix_initial(net_with(vec![(30.0, 20.0), (30.0, 20.0)], vec![]));
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        state.drop(0, GridPos::new(0, 0), &canvas).unwrap();
        assert!(matches!(
            state.drop(1, GridPos::new(2, 1), &canvas),
            Err(GeomError::CellOccupied { .. })
        ));
        // A loose block does not claim, so the same cells accept a drop.
        let mut loose = PlacementState::new(&netlist, &canvas).unwrap();
        loose.place_loose(0, GridPos::new(0, 0), &canvas).unwrap();
        loose.drop(1, GridPos::new(2, 1), &canvas).unwrap();
    }

    #[test]
    fn terminals_always_block() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        let netlist = fix_initial(net_with(vec![(10.0, 10.0)], vec![(5.0, 5.0, 12.0, 12.0)]));
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        // Terminal [12,17)x[12,17) touches cells (1,1) and (1,2) etc.
        assert!(matches!(
            state.drop(0, GridPos::new(1, 1), &canvas),
            Err(GeomError::CellOccupied { .. })
        ));
        state.drop(0, GridPos::new(3, 3), &canvas).unwrap();
    }

    #[test]
    fn lift_releases_the_claim_and_remembers_previous() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        let netlist = fix_initial(net_with(vec![(30.0, 20.0)], vec![]));
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        state.drop(0, GridPos::new(4, 5), &canvas).unwrap();
        let before = state.occupancy().to_vec();
        let freed = state.lift(0).unwrap();
        assert_eq!(freed, GridPos::new(4, 5));
        assert_eq!(state.previous(0), Some(GridPos::new(4, 5)));
        assert!(state.occupancy().iter().all(|&c| !c));
        state.drop(0, GridPos::new(4, 5), &canvas).unwrap();
        assert_eq!(state.occupancy(), &before[..]);
        // Lifting something that is not placed is an error.
        let mut empty = PlacementState::new(&netlist, &canvas).unwrap();
        assert!(matches!(empty.lift(0), Err(GeomError::NotPlaced(0))));
    }

    #[test]
    fn random_lift_drop_cycles_match_recomputed_occupancy() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        let netlist = fix_initial(net_with(
            vec![(30.0, 20.0), (25.0, 25.0), (10.0, 40.0), (15.0, 15.0)],
            vec![(5.0, 5.0, 100.0, 100.0)],
        ));
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.random_range(0..4);
            if state.position(m).is_some() {
                state.lift(m).unwrap();
            }
            // Try random cells until one legal drop lands.
            loop {
                let pos = GridPos::new(rng.random_range(0..16), rng.random_range(0..16));
                if state.drop(m, pos, &canvas).is_ok() {
                    break;
                }
            }
            assert_eq!(state.occupancy(), &state.recompute_occupancy()[..]);
        }
    }

    #[test]
    fn overlap_free_checks_real_rectangles() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        let netlist = fix_initial(net_with(vec![(30.0, 20.0), (30.0, 20.0)], vec![]));
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        state.drop(0, GridPos::new(0, 0), &canvas).unwrap();
        state.drop(1, GridPos::new(3, 0), &canvas).unwrap();
        assert!(overlap_free(&state, &netlist, &canvas));
        // Loose blocks can sit on top of each other; the check sees it.
        let mut stacked = PlacementState::new(&netlist, &canvas).unwrap();
        stacked.place_loose(0, GridPos::new(0, 0), &canvas).unwrap();
        stacked.place_loose(1, GridPos::new(1, 1), &canvas).unwrap();
        assert!(!overlap_free(&stacked, &netlist, &canvas));
        // Touching edges (zero area) is fine: 30 wide = 3 cells.
        let netlist2 = fix_initial(net_with(vec![(30.0, 20.0), (30.0, 20.0)], vec![]));
        let mut touch = PlacementState::new(&netlist2, &canvas).unwrap();
        touch.place_loose(0, GridPos::new(0, 0), &canvas).unwrap();
        touch.place_loose(1, GridPos::new(3, 0), &canvas).unwrap();
        assert!(overlap_free(&touch, &netlist2, &canvas));
    }

    #[test]
    fn snap_is_inverse_of_real_pos_on_exact_grids() {
        let canvas = Canvas::new(160.0, 160.0, 16).unwrap();
        for gx in 0..16 {
            for gy in 0..16 {
                let (x, y) = canvas.real_pos(GridPos::new(gx, gy));
                assert_eq!(canvas.snap(x, y), GridPos::new(gx, gy));
            }
        }
    }
}
