//! Randomised invariant checks.
//!
//! Each property pins down a contract the rest of the system leans on:
//! exact text round-trips, normalisation ranges, reward invariance
//! under constant offsets, the footprint rule that makes grid
//! disjointness imply real disjointness, and the determinism of the
//! visit order. Generators stay inside the domains the library is
//! specified for (finite values, realistic magnitudes).

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use placekit_core::bookshelf::{read_pl, write_pl};
use placekit_core::env::{macro_order, reward_components, OrderRule};
use placekit_core::masks::{normalize_mask, position_mask};
use placekit_core::{
    Canvas, GridPos, Macro, Mask, MaskKind, Net, Netlist, NormalizeTarget, Pin, PinOwner,
    PlacementState, INVALID_SENTINEL,
};

fn mask_kind(tag: u8) -> MaskKind {
    match tag % 6 {
        0 => MaskKind::Position,
        1 => MaskKind::WireRaw,
        2 => MaskKind::WireNorm,
        3 => MaskKind::RegularRaw,
        4 => MaskKind::RegularNorm,
        _ => MaskKind::CanvasImage,
    }
}

fn mask_from(n: usize, kind: MaskKind, values: &[f64]) -> Mask {
    let mut mask = Mask::filled(n, kind, 0.0);
    for (i, &v) in values.iter().enumerate() {
        mask.set(i % n, i / n, v);
    }
    mask
}

/// A plane value: usually a finite number, sometimes the sentinel.
fn cell_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => -1e12..1e12f64,
        1 => Just(0.0),
        2 => Just(INVALID_SENTINEL),
    ]
}

proptest! {
    #[test]
    fn mask_text_round_trips_bit_for_bit(
        n in 2usize..=12,
        kind_tag in 0u8..6,
        values in prop::collection::vec(cell_value(), 144),
    ) {
        let kind = mask_kind(kind_tag);
        let mask = mask_from(n, kind, &values[..n * n]);
        let back = Mask::from_text(&mask.to_text()).unwrap();
        prop_assert_eq!(back.n(), mask.n());
        prop_assert_eq!(back.kind(), mask.kind());
        for (a, b) in mask.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn unit_normalization_maps_valid_cells_into_the_unit_interval(
        n in 2usize..=12,
        values in prop::collection::vec(cell_value(), 144),
    ) {
        let mask = mask_from(n, MaskKind::WireRaw, &values[..n * n]);
        let out = normalize_mask(&mask, NormalizeTarget::Unit);

        let valid: Vec<f64> = mask.values().iter().copied()
            .filter(|&v| Mask::is_valid_value(v)).collect();
        let min = valid.iter().copied().fold(f64::INFINITY, f64::min);
        let max = valid.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        for (i, (&raw, &v)) in mask.values().iter().zip(out.values()).enumerate() {
            if !Mask::is_valid_value(raw) {
                prop_assert_eq!(v, INVALID_SENTINEL, "invalid cells must stay sentinel");
            } else if max > min {
                prop_assert!((0.0..=1.0).contains(&v), "cell {}: {} not in [0, 1]", i, v);
                if raw == min { prop_assert_eq!(v, 0.0); }
                if raw == max { prop_assert_eq!(v, 1.0); }
            } else {
                prop_assert_eq!(v, 0.0, "a constant plane must map to zeros");
            }
        }
    }

    #[test]
    fn symmetric_normalization_bounds_magnitude_and_preserves_sign(
        n in 2usize..=12,
        values in prop::collection::vec(cell_value(), 144),
    ) {
        let mask = mask_from(n, MaskKind::WireRaw, &values[..n * n]);
        let out = normalize_mask(&mask, NormalizeTarget::SymmetricUnit);
        for (&raw, &v) in mask.values().iter().zip(out.values()) {
            if !Mask::is_valid_value(raw) {
                prop_assert_eq!(v, INVALID_SENTINEL);
            } else {
                prop_assert!((-1.0..=1.0).contains(&v), "{} not in [-1, 1]", v);
                prop_assert_eq!(v == 0.0, raw == 0.0);
                prop_assert!(v.signum() == raw.signum() || raw == 0.0);
            }
        }
    }

    /// On integer-valued planes (every instance this crate generates or
    /// measures is integer- or half-integer-valued), shifting all valid
    /// values by a constant must not change the reward: the reward reads
    /// distances to the per-step best, not absolute levels. This is the
    /// property that makes the refinement-mode reference convention
    /// (deltas against the previous position) interchangeable with raw
    /// insertion deltas as far as learning signals are concerned.
    #[test]
    fn reward_terms_ignore_constant_offsets_on_integer_planes(
        n in 2usize..=8,
        wire_ints in prop::collection::vec(-1000i64..1000, 64),
        reg_ints in prop::collection::vec(-1000i64..1000, 64),
        invalid in prop::collection::vec(any::<bool>(), 64),
        offset in -1_000_000i64..1_000_000,
        alpha in 0.0..=1.0f64,
        action_pick in 0usize..64,
    ) {
        let hw = n * n;
        // Keep at least one valid cell, and make the chosen action valid.
        let mut invalid = invalid[..hw].to_vec();
        let action = action_pick % hw;
        invalid[action] = false;

        let build = |ints: &[i64], kind: MaskKind, shift: i64| {
            let vals: Vec<f64> = ints[..hw].iter().zip(&invalid)
                .map(|(&v, &bad)| if bad { INVALID_SENTINEL } else { (v + shift) as f64 })
                .collect();
            mask_from(n, kind, &vals)
        };

        let wire = build(&wire_ints, MaskKind::WireRaw, 0);
        let reg = build(&reg_ints, MaskKind::RegularRaw, 0);
        let wire_shifted = build(&wire_ints, MaskKind::WireRaw, offset);
        let reg_shifted = build(&reg_ints, MaskKind::RegularRaw, offset);

        let (rw, rr, r) = reward_components(&wire, &reg, action, alpha);
        let (sw, sr, s) = reward_components(&wire_shifted, &reg_shifted, action, alpha);
        prop_assert!((0.0..=1.0).contains(&rw));
        prop_assert!((0.0..=1.0).contains(&rr));
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(rw.to_bits(), sw.to_bits());
        prop_assert_eq!(rr.to_bits(), sr.to_bits());
        prop_assert_eq!(r.to_bits(), s.to_bits());
    }

    /// Ceiling-division footprints guarantee that blocks claiming
    /// disjoint grid cells occupy disjoint real rectangles.
    #[test]
    fn grid_claims_imply_real_separation(
        n_grid in 2usize..=20,
        extent in 40.0..400.0f64,
        dims in prop::collection::vec((0.5..120.0f64, 0.5..120.0f64), 1..=8),
        tries in prop::collection::vec((0usize..20, 0usize..20), 24),
    ) {
        let canvas = Canvas::new(extent, extent, n_grid).unwrap();
        let netlist = Netlist {
            macros: dims.iter().enumerate().map(|(i, &(w, h))| Macro {
                id: format!("m{i}"),
                width: w.min(extent),
                height: h.min(extent),
            }).collect(),
            terminals: vec![],
            nets: vec![],
            canvas_width: extent,
            canvas_height: extent,
            initial: vec![None; dims.len()],
        };
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        let mut placed = 0usize;
        for (i, &(gx, gy)) in tries.iter().enumerate() {
            let m = i % netlist.macros.len();
            if state.position(m).is_some() {
                continue;
            }
            let pos = GridPos::new(gx % n_grid, gy % n_grid);
            if state.drop(m, pos, &canvas).is_ok() {
                placed += 1;
            }
        }
        // Pairwise real-rectangle disjointness, from scratch.
        let rects: Vec<(f64, f64, f64, f64)> = (0..netlist.macros.len())
            .filter_map(|m| state.position(m).map(|p| {
                let (x, y) = canvas.real_pos(p);
                (x, y, netlist.macros[m].width, netlist.macros[m].height)
            }))
            .collect();
        prop_assert_eq!(rects.len(), placed);
        for (i, &a) in rects.iter().enumerate() {
            prop_assert!(a.0 + a.2 <= extent + 1e-9 && a.1 + a.3 <= extent + 1e-9);
            for &b in &rects[i + 1..] {
                let overlap = a.0 < b.0 + b.2 && b.0 < a.0 + a.2
                    && a.1 < b.1 + b.3 && b.1 < a.1 + a.3;
                prop_assert!(!overlap, "claimed cells disjoint but rectangles {:?} {:?} overlap", a, b);
            }
        }
    }

    /// The validity plane agrees with a brute-force scan of the
    /// occupancy grid: a cell is valid exactly when the footprint stays
    /// on the grid and covers no occupied cell.
    #[test]
    fn position_mask_matches_a_brute_force_occupancy_scan(
        n_grid in 2usize..=16,
        dims in prop::collection::vec((0.5..100.0f64, 0.5..100.0f64), 2..=6),
        tries in prop::collection::vec((0usize..16, 0usize..16), 12),
    ) {
        let extent = 160.0;
        let canvas = Canvas::new(extent, extent, n_grid).unwrap();
        let netlist = Netlist {
            macros: dims.iter().enumerate().map(|(i, &(w, h))| Macro {
                id: format!("m{i}"),
                width: w.min(extent),
                height: h.min(extent),
            }).collect(),
            terminals: vec![],
            nets: vec![],
            canvas_width: extent,
            canvas_height: extent,
            initial: vec![None; dims.len()],
        };
        let mut state = PlacementState::new(&netlist, &canvas).unwrap();
        // Claim cells for every macro except the last, where possible.
        for (i, &(gx, gy)) in tries.iter().enumerate() {
            let m = i % (netlist.macros.len() - 1);
            if state.position(m).is_none() {
                let _ = state.drop(m, GridPos::new(gx % n_grid, gy % n_grid), &canvas);
            }
        }
        let pending = netlist.macros.len() - 1;
        let mask = position_mask(&state, pending, &canvas);
        let (cw, ch) = state.footprint_of(pending);
        for gy in 0..n_grid {
            for gx in 0..n_grid {
                let fits = gx + cw <= n_grid && gy + ch <= n_grid;
                let clear = fits && (gy..gy + ch).all(|yy| {
                    (gx..gx + cw).all(|xx| !state.occupancy()[yy * n_grid + xx])
                });
                let expected = if clear { 1.0 } else { 0.0 };
                prop_assert_eq!(mask.get(gx, gy), expected, "cell ({}, {})", gx, gy);
            }
        }
    }

    #[test]
    fn snapping_recovers_every_grid_anchor(
        width in 2.0..2000.0f64,
        height in 2.0..2000.0f64,
        n_grid in 2usize..=64,
        gx in 0usize..64,
        gy in 0usize..64,
    ) {
        let canvas = Canvas::new(width, height, n_grid).unwrap();
        let cell = GridPos::new(gx % n_grid, gy % n_grid);
        let (x, y) = canvas.real_pos(cell);
        prop_assert_eq!(canvas.snap(x, y), cell);
    }

    #[test]
    fn pl_files_round_trip_positions_exactly(
        positions in prop::collection::vec((-1e9..1e9f64, -1e9..1e9f64), 1..=8),
        term_pos in (-1e9..1e9f64, -1e9..1e9f64),
    ) {
        let netlist = Netlist {
            macros: (0..positions.len()).map(|i| Macro {
                id: format!("m{i}"),
                width: 1.0,
                height: 1.0,
            }).collect(),
            terminals: vec![placekit_core::Terminal {
                id: "t0".into(),
                width: 1.0,
                height: 1.0,
                x: term_pos.0,
                y: term_pos.1,
            }],
            nets: vec![],
            canvas_width: 100.0,
            canvas_height: 100.0,
            initial: vec![None; positions.len()],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layout.pl");
        write_pl(&path, &netlist, &positions).unwrap();
        let back = read_pl(&path).unwrap();
        for (i, &(x, y)) in positions.iter().enumerate() {
            let (bx, by) = back[&format!("m{i}")];
            prop_assert_eq!(x.to_bits(), bx.to_bits());
            prop_assert_eq!(y.to_bits(), by.to_bits());
        }
        let (tx, ty) = back["t0"];
        prop_assert_eq!(tx.to_bits(), term_pos.0.to_bits());
        prop_assert_eq!(ty.to_bits(), term_pos.1.to_bits());
    }

    /// The visit order depends only on (area, net count, id), never on
    /// the order blocks happen to be listed in.
    #[test]
    fn visit_order_is_invariant_under_block_relabeling(
        dims in prop::collection::vec((1u32..=40, 1u32..=40), 2..=6),
        net_picks in prop::collection::vec(prop::collection::btree_set(0usize..6, 2..=4), 1..=6),
        shuffle_seed in any::<u64>(),
        rule_tag in 0u8..3,
    ) {
        let k = dims.len();
        let rule = match rule_tag {
            0 => OrderRule::AreaDesc,
            1 => OrderRule::NetCountDesc,
            _ => OrderRule::AreaThenNets,
        };
        let nets: Vec<Net> = net_picks.iter().enumerate().map(|(e, picks)| Net {
            id: format!("n{e}"),
            pins: picks.iter().map(|&m| Pin {
                owner: PinOwner::Macro(m % k),
                dx: 0.0,
                dy: 0.0,
            }).collect(),
        }).collect();
        let base = Netlist {
            macros: dims.iter().enumerate().map(|(i, &(w, h))| Macro {
                id: format!("m{i}"),
                width: w as f64,
                height: h as f64,
            }).collect(),
            terminals: vec![],
            nets,
            canvas_width: 400.0,
            canvas_height: 400.0,
            initial: vec![None; k],
        };

        // Present the same blocks in a different listing order.
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let mut inverse = vec![0usize; k];
        for (new_idx, &old_idx) in perm.iter().enumerate() {
            inverse[old_idx] = new_idx;
        }
        let mut shuffled = base.clone();
        shuffled.macros = perm.iter().map(|&old| base.macros[old].clone()).collect();
        for net in &mut shuffled.nets {
            for pin in &mut net.pins {
                if let PinOwner::Macro(m) = &mut pin.owner {
                    *m = inverse[*m];
                }
            }
        }

        let ids = |nl: &Netlist| -> Vec<String> {
            macro_order(nl, rule).iter().map(|&m| nl.macros[m].id.clone()).collect()
        };
        prop_assert_eq!(ids(&base), ids(&shuffled));
    }
}
