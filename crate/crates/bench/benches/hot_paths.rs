//! Criterion benchmarks for the inner-loop primitives: pricing one
//! block move, building the per-cell feature planes at full grid
//! resolution, and running a complete greedy refinement episode.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use placekit_core::agent::greedy_episode;
use placekit_core::bookshelf::gen_synthetic;
use placekit_core::masks::{position_mask, wire_mask};
use placekit_core::metrics::NetExtremes;
use placekit_core::{Canvas, EnvConfig, PlacementEnv, PlacementState};

fn bench_move_pricing(c: &mut Criterion) {
    let netlist = gen_synthetic(7, 24, 48, 2240.0, 2240.0).unwrap();
    let canvas = Canvas::new(2240.0, 2240.0, 224).unwrap();
    let mut extremes = NetExtremes::new(&netlist);
    for (m, pos) in netlist.initial.iter().enumerate() {
        let (x, y) = pos.unwrap();
        let snapped = canvas.snap(x, y);
        extremes.insert_macro(m, canvas.real_pos(snapped));
    }
    extremes.remove_macro(0);
    c.bench_function("hpwl_delta_single_cell", |b| {
        b.iter(|| black_box(extremes.hpwl_delta(0, black_box((640.0, 640.0)))))
    });
    c.bench_function("move_pricer_full_grid_224", |b| {
        b.iter(|| {
            let pricer = extremes.move_pricer(0);
            let mut total = 0.0;
            for gy in 0..224 {
                for gx in 0..224 {
                    total += pricer.delta((gx as f64 * 10.0, gy as f64 * 10.0));
                }
            }
            black_box(total)
        })
    });
}

fn bench_masks(c: &mut Criterion) {
    let netlist = gen_synthetic(11, 24, 48, 2240.0, 2240.0).unwrap();
    let canvas = Canvas::new(2240.0, 2240.0, 224).unwrap();
    let state = PlacementState::new(&netlist, &canvas).unwrap();
    let extremes = NetExtremes::new(&netlist);
    c.bench_function("position_mask_224", |b| {
        b.iter(|| black_box(position_mask(&state, 0, &canvas)))
    });
    let pos = position_mask(&state, 0, &canvas);
    c.bench_function("wire_mask_224", |b| {
        b.iter(|| black_box(wire_mask(&state, &extremes, 0, &pos, &canvas)))
    });
}

fn bench_greedy_episode(c: &mut Criterion) {
    let netlist = gen_synthetic(3, 10, 20, 320.0, 320.0).unwrap();
    c.bench_function("greedy_refinement_episode_n32", |b| {
        b.iter(|| {
            let (mut env, _) =
                PlacementEnv::new(EnvConfig::regulate(32), netlist.clone(), None).unwrap();
            black_box(greedy_episode(&mut env, None, 0.7).unwrap())
        })
    });
}

criterion_group!(benches, bench_move_pricing, bench_masks, bench_greedy_episode);
criterion_main!(benches);
