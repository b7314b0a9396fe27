//! Per-cell feature planes over the placement grid.
//!
//! For the block that is about to be (re)placed, four planes describe
//! the decision surface:
//!
//! * **position**: 1 where the block's footprint fits without touching
//!   a terminal or an already-claimed block, 0 elsewhere. Blocks that
//!   merely sit loose on the canvas (not yet adjusted this pass) do not
//!   block candidates.
//! * **wire**: the exact total-wirelength change of landing on a cell,
//!   measured against the block's previous position when it has one
//!   (zero for the null move, negative where moving helps). During a
//!   first placement there is no previous position; the change is then
//!   measured against the block being absent and cannot be negative,
//!   because new pins only extend net boxes.
//! * **regular**: the periphery-distance change relative to the cell
//!   the block was lifted from (or relative to zero when it has no
//!   previous position).
//! * **canvas**: 1 on every cell covered by any placed block, loose or
//!   claimed, or by a terminal.
//!
//! Invalid cells in the wire and regular planes carry
//! [`INVALID_SENTINEL`], which normalization and downstream argmins
//! ignore. Masks serialize to a small text format (`N kind` header plus
//! `N` rows, sentinel written as `X`) for golden tests and debugging.

use crate::geometry::{Canvas, GridPos, PlacementState};
use crate::metrics::{regularity_of_grid, NetExtremes};

/// Marks grid cells that are not valid placement candidates.
pub const INVALID_SENTINEL: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    Position,
    WireRaw,
    WireNorm,
    RegularRaw,
    RegularNorm,
    CanvasImage,
}

impl MaskKind {
    pub fn name(self) -> &'static str {
        match self {
            MaskKind::Position => "Position",
            MaskKind::WireRaw => "WireRaw",
            MaskKind::WireNorm => "WireNorm",
            MaskKind::RegularRaw => "RegularRaw",
            MaskKind::RegularNorm => "RegularNorm",
            MaskKind::CanvasImage => "CanvasImage",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "Position" => MaskKind::Position,
            "WireRaw" => MaskKind::WireRaw,
            "WireNorm" => MaskKind::WireNorm,
            "RegularRaw" => MaskKind::RegularRaw,
            "RegularNorm" => MaskKind::RegularNorm,
            "CanvasImage" => MaskKind::CanvasImage,
            _ => return None,
        })
    }
}

/// How to squash raw mask values into a fixed range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeTarget {
    /// Min-max map onto `[0, 1]`; a constant plane maps to all zeros.
    Unit,
    /// Divide by the largest magnitude, onto `[-1, 1]`; an all-zero
    /// plane stays all zeros.
    SymmetricUnit,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MaskParseError {
    #[error("bad mask header: {0}")]
    BadHeader(String),
    #[error("row {0}: expected {1} values, got {2}")]
    BadRow(usize, usize, usize),
    #[error("row {0}: bad value `{1}`")]
    BadValue(usize, String),
}

/// An `n x n` grid of f64 values, row-major with `gy` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    n: usize,
    kind: MaskKind,
    values: Vec<f64>,
}

impl Mask {
    pub fn filled(n: usize, kind: MaskKind, v: f64) -> Self {
        Self {
            n,
            kind,
            values: vec![v; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn kind(&self) -> MaskKind {
        self.kind
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn idx(&self, gx: usize, gy: usize) -> usize {
        gy * self.n + gx
    }
    #[inline]
    pub fn get(&self, gx: usize, gy: usize) -> f64 {
        self.values[gy * self.n + gx]
    }
    #[inline]
    pub fn set(&mut self, gx: usize, gy: usize, v: f64) {
        self.values[gy * self.n + gx] = v;
    }

    /// Is the cell a usable candidate (value not the sentinel)?
    #[inline]
    pub fn is_valid_value(v: f64) -> bool {
        v != INVALID_SENTINEL
    }

    /// Indices of cells whose value is not the sentinel.
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| Mask::is_valid_value(v))
            .map(|(i, _)| i)
    }

    /// `N kind` header plus N rows (gy = 0 first); sentinel cells as `X`.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.kind.name());
        for gy in 0..self.n {
            for gx in 0..self.n {
                if gx > 0 {
                    s.push(' ');
                }
                let v = self.get(gx, gy);
                if Mask::is_valid_value(v) {
                    s.push_str(&format!("{v}"));
                } else {
                    s.push('X');
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, MaskParseError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| MaskParseError::BadHeader("empty input".into()))?;
        let mut toks = header.split_whitespace();
        let n: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| MaskParseError::BadHeader(header.into()))?;
        let kind = toks
            .next()
            .and_then(MaskKind::from_name)
            .ok_or_else(|| MaskParseError::BadHeader(header.into()))?;
        let mut mask = Mask::filled(n, kind, 0.0);
        for gy in 0..n {
            let row = lines
                .next()
                .ok_or(MaskParseError::BadRow(gy, n, 0))?;
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks.len() != n {
                return Err(MaskParseError::BadRow(gy, n, toks.len()));
            }
            for (gx, t) in toks.iter().enumerate() {
                let v = if *t == "X" {
                    INVALID_SENTINEL
                } else {
                    t.parse::<f64>()
                        .map_err(|_| MaskParseError::BadValue(gy, t.to_string()))?
                };
                mask.set(gx, gy, v);
            }
        }
        Ok(mask)
    }
}

/// Inclusion-style 2D prefix sums for O(1) rectangle emptiness tests.
pub(crate) struct PrefixSums {
    n: usize,
    sums: Vec<u32>,
}

impl PrefixSums {
    pub(crate) fn over<F: Fn(usize) -> bool>(n: usize, occupied: F) -> Self {
        let mut sums = vec![0u32; (n + 1) * (n + 1)];
        for gy in 0..n {
            for gx in 0..n {
                let v = occupied(gy * n + gx) as u32;
                sums[(gy + 1) * (n + 1) + gx + 1] =
                    v + sums[gy * (n + 1) + gx + 1] + sums[(gy + 1) * (n + 1) + gx]
                        - sums[gy * (n + 1) + gx];
            }
        }
        Self { n, sums }
    }

    pub(crate) fn rect_empty(&self, gx: usize, gy: usize, cw: usize, ch: usize) -> bool {
        let s = &self.sums;
        let n1 = self.n + 1;
        let total = s[(gy + ch) * n1 + gx + cw] + s[gy * n1 + gx]
            - s[gy * n1 + gx + cw]
            - s[(gy + ch) * n1 + gx];
        total == 0
    }
}

/// Validity plane for placing macro `m`: 1 where the footprint stays on
/// the grid and misses every occupied (terminal or claimed) cell.
pub fn position_mask(state: &PlacementState, m: usize, canvas: &Canvas) -> Mask {
    let n = canvas.n_grid();
    let (cw, ch) = state.footprint_of(m);
    let occ = state.occupancy();
    let sums = PrefixSums::over(n, |i| occ[i]);
    let mut mask = Mask::filled(n, MaskKind::Position, 0.0);
    if cw > n || ch > n {
        return mask;
    }
    for gy in 0..=(n - ch) {
        for gx in 0..=(n - cw) {
            if sums.rect_empty(gx, gy, cw, ch) {
                mask.set(gx, gy, 1.0);
            }
        }
    }
    mask
}

/// Exact wirelength change of landing macro `m` on each valid cell;
/// sentinel elsewhere. `extremes` must currently exclude `m`'s pins.
///
/// The change is measured against the block's previous position when it
/// has one (so the null move is exactly zero and better cells go
/// negative), and against the block-absent total otherwise (a first
/// placement can only extend net boxes, so every value is
/// non-negative).
pub fn wire_mask(
    state: &PlacementState,
    extremes: &NetExtremes,
    m: usize,
    position: &Mask,
    canvas: &Canvas,
) -> Mask {
    let n = canvas.n_grid();
    let pricer = extremes.move_pricer(m);
    let reference = state
        .previous(m)
        .map(|p| pricer.delta(canvas.real_pos(p)))
        .unwrap_or(0.0);
    let mut mask = Mask::filled(n, MaskKind::WireRaw, INVALID_SENTINEL);
    for gy in 0..n {
        let ry = gy as f64 * canvas.bin_h();
        for gx in 0..n {
            if position.get(gx, gy) == 1.0 {
                let rx = gx as f64 * canvas.bin_w();
                mask.set(gx, gy, pricer.delta((rx, ry)) - reference);
            }
        }
    }
    mask
}

/// Periphery-distance change of landing macro `m` on each valid cell,
/// relative to the cell it was lifted from (zero reference for a block
/// that has never been placed); sentinel elsewhere.
pub fn regular_mask(
    state: &PlacementState,
    m: usize,
    position: &Mask,
    canvas: &Canvas,
) -> Mask {
    let n = canvas.n_grid();
    let reference = state
        .previous(m)
        .map(|p| regularity_of_grid(canvas, p))
        .unwrap_or(0.0);
    let mut mask = Mask::filled(n, MaskKind::RegularRaw, INVALID_SENTINEL);
    for gy in 0..n {
        for gx in 0..n {
            if position.get(gx, gy) == 1.0 {
                let r = regularity_of_grid(canvas, GridPos::new(gx, gy));
                mask.set(gx, gy, r - reference);
            }
        }
    }
    mask
}

/// 1 on every cell covered by a terminal or by any placed block,
/// claimed or loose.
pub fn canvas_image(state: &PlacementState, canvas: &Canvas) -> Mask {
    let n = canvas.n_grid();
    let mut mask = Mask::filled(n, MaskKind::CanvasImage, 0.0);
    for (i, &t) in state.terminal_cells().iter().enumerate() {
        if t {
            mask.values[i] = 1.0;
        }
    }
    for m in 0..state.len_macros() {
        if let Some(pos) = state.position(m) {
            let (cw, ch) = state.footprint_of(m);
            for gy in pos.gy..(pos.gy + ch).min(n) {
                for gx in pos.gx..(pos.gx + cw).min(n) {
                    mask.values[gy * n + gx] = 1.0;
                }
            }
        }
    }
    mask
}

/// Map valid values into a fixed range, leaving sentinel cells alone.
pub fn normalize_mask(mask: &Mask, target: NormalizeTarget) -> Mask {
    let kind = match (mask.kind(), target) {
        (MaskKind::WireRaw, _) => MaskKind::WireNorm,
        (MaskKind::RegularRaw, _) => MaskKind::RegularNorm,
        (k, _) => k,
    };
    let mut out = Mask::filled(mask.n(), kind, 0.0);
    out.values.copy_from_slice(&mask.values);

    match target {
        NormalizeTarget::Unit => {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for &v in &mask.values {
                if Mask::is_valid_value(v) {
                    min = min.min(v);
                    max = max.max(v);
                }
            }
            for v in &mut out.values {
                if Mask::is_valid_value(*v) {
                    *v = if max > min { (*v - min) / (max - min) } else { 0.0 };
                }
            }
        }
        NormalizeTarget::SymmetricUnit => {
            let mut scale = 0.0f64;
            for &v in &mask.values {
                if Mask::is_valid_value(v) {
                    scale = scale.max(v.abs());
                }
            }
            for v in &mut out.values {
                if Mask::is_valid_value(*v) {
                    *v = if scale > 0.0 { *v / scale } else { 0.0 };
                }
            }
        }
    }
    out
}
