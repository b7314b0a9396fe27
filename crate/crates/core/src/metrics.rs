//! Placement quality metrics.
//!
//! *Wirelength* is the classic half-perimeter measure: per net, the
//! bounding box of all absolute pin positions contributes its width plus
//! its height, and the total is the sum over nets. Two code paths
//! compute it:
//!
//! * [`hpwl_total`] folds over every pin from scratch, and
//! * [`NetExtremes`] keeps per-net sorted multisets of pin coordinates
//!   so a block can enter or leave in `O(log p)` per pin and candidate
//!   moves can be priced without touching unrelated nets.
//!
//! Both paths round identically: per net the box edges are exact
//! min/max of the same values, so the tracked total and the scratch
//! total agree bit for bit, and on integer-valued instances every delta
//! is exact.
//!
//! *Regularity* scores how close a grid cell sits to the canvas
//! periphery: `min(x, W - x) + min(y, H - y)` at the cell's real
//! left-bottom corner. Each axis contributes its own distance to the
//! nearer edge, so corners score zero, edges score low, and the center
//! peaks at `(W + H) / 2`; placements that hug the periphery score low.

use std::collections::BTreeMap;

use crate::bookshelf::{Netlist, PinOwner};
use crate::geometry::{Canvas, GridPos};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("pin owner `{0}` has no position")]
    UnplacedOwner(String),
}

/// Total-order key for finite f64 coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A sorted multiset of pin coordinates along one axis.
#[derive(Debug, Clone, Default, PartialEq)]
struct CoordSet(BTreeMap<OrdF64, u32>);

impl CoordSet {
    fn insert(&mut self, v: f64) {
        *self.0.entry(OrdF64(v)).or_insert(0) += 1;
    }
    fn remove(&mut self, v: f64) {
        match self.0.get_mut(&OrdF64(v)) {
            Some(c) if *c > 1 => *c -= 1,
            Some(_) => {
                self.0.remove(&OrdF64(v));
            }
            None => panic!("removing coordinate {v} that was never inserted"),
        }
    }
    fn min(&self) -> Option<f64> {
        self.0.keys().next().map(|k| k.0)
    }
    fn max(&self) -> Option<f64> {
        self.0.keys().next_back().map(|k| k.0)
    }
    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn pin_abs(owner_pos: (f64, f64), dx: f64, dy: f64) -> (f64, f64) {
    (owner_pos.0 + dx, owner_pos.1 + dy)
}

/// Half-perimeter of one net's pin bounding box, from explicit macro
/// positions (left-bottom corners, microns). Nets with fewer than two
/// pins contribute zero.
pub fn hpwl_net(
    netlist: &Netlist,
    positions: &[Option<(f64, f64)>],
    net_idx: usize,
) -> Result<f64, MetricError> {
    let net = &netlist.nets[net_idx];
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    let mut pins = 0usize;
    for pin in &net.pins {
        let owner_pos = match pin.owner {
            PinOwner::Macro(m) => positions[m]
                .ok_or_else(|| MetricError::UnplacedOwner(netlist.macros[m].id.clone()))?,
            PinOwner::Terminal(t) => {
                let t = &netlist.terminals[t];
                (t.x, t.y)
            }
        };
        let (x, y) = pin_abs(owner_pos, pin.dx, pin.dy);
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
        pins += 1;
    }
    if pins < 2 {
        return Ok(0.0);
    }
    Ok((max_x - min_x) + (max_y - min_y))
}

/// Sum of [`hpwl_net`] over all nets, in net order.
pub fn hpwl_total(
    netlist: &Netlist,
    positions: &[Option<(f64, f64)>],
) -> Result<f64, MetricError> {
    let mut total = 0.0;
    for e in 0..netlist.nets.len() {
        total += hpwl_net(netlist, positions, e)?;
    }
    Ok(total)
}

/// Like [`hpwl_total`] but pins on unplaced macros are simply absent,
/// matching what an incremental tracker sees mid-episode.
pub fn hpwl_total_partial(netlist: &Netlist, positions: &[Option<(f64, f64)>]) -> f64 {
    let mut total = 0.0;
    for net in &netlist.nets {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        let mut pins = 0usize;
        for pin in &net.pins {
            let owner_pos = match pin.owner {
                PinOwner::Macro(m) => match positions[m] {
                    Some(p) => p,
                    None => continue,
                },
                PinOwner::Terminal(t) => {
                    let t = &netlist.terminals[t];
                    (t.x, t.y)
                }
            };
            let (x, y) = pin_abs(owner_pos, pin.dx, pin.dy);
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
            pins += 1;
        }
        if pins >= 2 {
            total += (max_x - min_x) + (max_y - min_y);
        }
    }
    total
}

/// A macro's pins on one net, with cached offset extremes.
#[derive(Debug, Clone)]
struct MacroNetPins {
    net: usize,
    offsets: Vec<(f64, f64)>,
    min_dx: f64,
    max_dx: f64,
    min_dy: f64,
    max_dy: f64,
}

/// Incrementally maintained per-net pin coordinate multisets.
///
/// Terminals are inserted at construction and never move. Macros enter
/// with [`NetExtremes::insert_macro`] and leave with
/// [`NetExtremes::remove_macro`]; queries price candidate positions for
/// an absent macro without mutating anything.
#[derive(Debug, Clone)]
pub struct NetExtremes {
    xs: Vec<CoordSet>,
    ys: Vec<CoordSet>,
    macro_nets: Vec<Vec<MacroNetPins>>,
    inserted_at: Vec<Option<(f64, f64)>>,
    pin_counts: Vec<usize>,
}

impl NetExtremes {
    /// Structure for `netlist` with only terminal pins present.
    pub fn new(netlist: &Netlist) -> Self {
        let e = netlist.nets.len();
        let mut xs = vec![CoordSet::default(); e];
        let mut ys = vec![CoordSet::default(); e];
        let mut pin_counts = vec![0usize; e];
        let mut macro_nets: Vec<Vec<MacroNetPins>> = vec![Vec::new(); netlist.macros.len()];
        for (ei, net) in netlist.nets.iter().enumerate() {
            for pin in &net.pins {
                match pin.owner {
                    PinOwner::Terminal(t) => {
                        let t = &netlist.terminals[t];
                        let (x, y) = pin_abs((t.x, t.y), pin.dx, pin.dy);
                        xs[ei].insert(x);
                        ys[ei].insert(y);
                        pin_counts[ei] += 1;
                    }
                    PinOwner::Macro(m) => {
                        let group = &mut macro_nets[m];
                        match group.last_mut() {
                            Some(g) if g.net == ei => g.offsets.push((pin.dx, pin.dy)),
                            _ => group.push(MacroNetPins {
                                net: ei,
                                offsets: vec![(pin.dx, pin.dy)],
                                min_dx: 0.0,
                                max_dx: 0.0,
                                min_dy: 0.0,
                                max_dy: 0.0,
                            }),
                        }
                    }
                }
            }
        }
        for group in &mut macro_nets {
            for g in group {
                g.min_dx = g.offsets.iter().map(|o| o.0).fold(f64::INFINITY, f64::min);
                g.max_dx = g.offsets.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
                g.min_dy = g.offsets.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
                g.max_dy = g.offsets.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
            }
        }
        Self {
            xs,
            ys,
            macro_nets,
            inserted_at: vec![None; netlist.macros.len()],
            pin_counts,
        }
    }

    pub fn is_present(&self, m: usize) -> bool {
        self.inserted_at[m].is_some()
    }

    /// Net indices the macro has pins on (ascending, distinct).
    pub fn nets_of(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.macro_nets[m].iter().map(|g| g.net)
    }

    /// Add the macro's pins at real position `pos` (left-bottom corner).
    pub fn insert_macro(&mut self, m: usize, pos: (f64, f64)) {
        assert!(
            self.inserted_at[m].is_none(),
            "macro {m} inserted twice into NetExtremes"
        );
        for g in &self.macro_nets[m] {
            for &(dx, dy) in &g.offsets {
                let (x, y) = pin_abs(pos, dx, dy);
                self.xs[g.net].insert(x);
                self.ys[g.net].insert(y);
            }
            self.pin_counts[g.net] += g.offsets.len();
        }
        self.inserted_at[m] = Some(pos);
    }

    /// Remove the macro's pins, recomputing the exact coordinates they
    /// were inserted with.
    pub fn remove_macro(&mut self, m: usize) {
        let pos = self.inserted_at[m]
            .unwrap_or_else(|| panic!("macro {m} is not present in NetExtremes"));
        for g in &self.macro_nets[m] {
            for &(dx, dy) in &g.offsets {
                let (x, y) = pin_abs(pos, dx, dy);
                self.xs[g.net].remove(x);
                self.ys[g.net].remove(y);
            }
            self.pin_counts[g.net] -= g.offsets.len();
        }
        self.inserted_at[m] = None;
    }

    /// Bounding box of a net's currently present pins.
    pub fn net_box(&self, e: usize) -> Option<(f64, f64, f64, f64)> {
        if self.xs[e].is_empty() {
            return None;
        }
        Some((
            self.xs[e].min().unwrap(),
            self.xs[e].max().unwrap(),
            self.ys[e].min().unwrap(),
            self.ys[e].max().unwrap(),
        ))
    }

    /// Half-perimeter of one net from the tracked extremes. Nets with
    /// fewer than two present pins contribute zero.
    pub fn hpwl_net_tracked(&self, e: usize) -> f64 {
        if self.pin_counts[e] < 2 {
            return 0.0;
        }
        match self.net_box(e) {
            Some((min_x, max_x, min_y, max_y)) => (max_x - min_x) + (max_y - min_y),
            None => 0.0,
        }
    }

    /// Total half-perimeter wirelength, summed in net order so the result
    /// is bit-identical to a scratch recomputation.
    pub fn hpwl_total_tracked(&self) -> f64 {
        (0..self.xs.len()).map(|e| self.hpwl_net_tracked(e)).sum()
    }

    /// Snapshot the state of `m`'s nets so many candidate positions can
    /// be priced without re-querying the multisets. The macro must be
    /// absent; the pricer stays valid until the extremes change.
    pub fn move_pricer(&self, m: usize) -> MovePricer {
        debug_assert!(
            self.inserted_at[m].is_none(),
            "candidate moves are priced for an absent macro"
        );
        let nets = self
            .macro_nets[m]
            .iter()
            .map(|g| {
                let rem = self.net_box(g.net);
                let before = self.hpwl_net_tracked(g.net);
                PricedNet {
                    rem,
                    before,
                    counts: self.pin_counts[g.net] + g.offsets.len() >= 2,
                    min_dx: g.min_dx,
                    max_dx: g.max_dx,
                    min_dy: g.min_dy,
                    max_dy: g.max_dy,
                }
            })
            .collect();
        MovePricer { nets }
    }

    /// Exact change of the total if the (currently absent) macro `m`
    /// were inserted at `pos`. Only nets of `m` are visited.
    pub fn hpwl_delta(&self, m: usize, pos: (f64, f64)) -> f64 {
        self.move_pricer(m).delta(pos)
    }
}

/// One net of a candidate move, frozen for repeated pricing.
#[derive(Debug, Clone)]
struct PricedNet {
    rem: Option<(f64, f64, f64, f64)>,
    before: f64,
    /// Would the net have two or more pins once the macro lands?
    counts: bool,
    min_dx: f64,
    max_dx: f64,
    min_dy: f64,
    max_dy: f64,
}

/// Prices candidate positions for one absent macro; see
/// [`NetExtremes::move_pricer`].
#[derive(Debug, Clone)]
pub struct MovePricer {
    nets: Vec<PricedNet>,
}

impl MovePricer {
    /// Exact total-wirelength change of landing at `pos`.
    pub fn delta(&self, pos: (f64, f64)) -> f64 {
        let mut delta = 0.0;
        for g in &self.nets {
            if !g.counts {
                // Still under two pins afterwards: contributes nothing.
                continue;
            }
            let mv = (
                pos.0 + g.min_dx,
                pos.0 + g.max_dx,
                pos.1 + g.min_dy,
                pos.1 + g.max_dy,
            );
            let joint = match g.rem {
                Some((min_x, max_x, min_y, max_y)) => {
                    (max_x.max(mv.1) - min_x.min(mv.0)) + (max_y.max(mv.3) - min_y.min(mv.2))
                }
                // Only the moving pins; one pin spans zero on its own.
                None => (mv.1 - mv.0) + (mv.3 - mv.2),
            };
            delta += joint - g.before;
        }
        delta
    }
}

/// Periphery distance of a left-bottom corner at real coordinates:
/// `min(x, W - x) + min(y, H - y)`. Zero at the corners, `(W + H) / 2`
/// at the exact center.
pub fn regularity_of_point(width: f64, height: f64, x: f64, y: f64) -> f64 {
    x.min(width - x) + y.min(height - y)
}

/// [`regularity_of_point`] evaluated at a grid cell's left-bottom corner.
pub fn regularity_of_grid(canvas: &Canvas, pos: GridPos) -> f64 {
    let (x, y) = canvas.real_pos(pos);
    regularity_of_point(canvas.width(), canvas.height(), x, y)
}

/// Sum and mean of [`regularity_of_grid`] over placed macros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityValue {
    pub total: f64,
    pub mean: f64,
}

/// Aggregate regularity over every placed macro (unplaced are skipped).
pub fn regularity_total(positions: &[Option<GridPos>], canvas: &Canvas) -> RegularityValue {
    let mut total = 0.0;
    let mut count = 0usize;
    for pos in positions.iter().flatten() {
        total += regularity_of_grid(canvas, *pos);
        count += 1;
    }
    RegularityValue {
        total,
        mean: if count == 0 { 0.0 } else { total / count as f64 },
    }
}
