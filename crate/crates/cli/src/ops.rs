//! Implementations of the `placekit` subcommands. Each resolves its
//! run configuration (defaults < config file < flags), does the work
//! through `placekit-core`, and writes byte-stable outputs plus the
//! resolved config into its output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use placekit_core::agent::{
    argmax_episode, greedy_episode, greedy_place_positions, train, PolicyNet, PpoConfig,
};
use placekit_core::bookshelf::{self, gen_synthetic, parse_bundle_with, ParseOptions};
use placekit_core::env::TranscriptEntry;
use placekit_core::metrics::{hpwl_total, regularity_of_point};
use placekit_core::{
    Canvas, EnvConfig, GridPos, Mode, Netlist, OrderRule, PlacementEnv, RegularityValue,
};

use crate::config::{instance_name, Settings};
use crate::svg::render_svg;
use crate::{
    AblateArgs, CliError, EvalArgs, ParseArgs, PlaceArgs, RegulateArgs, RenderArgs, TrainArgs,
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn parse_order(name: &str) -> Result<OrderRule, CliError> {
    match name {
        "area-nets" => Ok(OrderRule::AreaThenNets),
        "area" => Ok(OrderRule::AreaDesc),
        "nets" => Ok(OrderRule::NetCountDesc),
        other => Err(CliError::Parse(format!(
            "unknown order `{other}`; expected area-nets, area, or nets"
        ))),
    }
}

fn parse_mode(name: &str) -> Result<Mode, CliError> {
    match name {
        "place" => Ok(Mode::Place),
        "regulate" => Ok(Mode::Regulate),
        other => Err(CliError::Parse(format!(
            "unknown mode `{other}`; expected place or regulate"
        ))),
    }
}

/// `SEED,K,N` -> (generator seed, movable blocks, nets).
fn parse_synthetic(arg: &str) -> Result<(u64, usize, usize), CliError> {
    let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!(
            "--synthetic wants SEED,K,N; got `{arg}`"
        )));
    }
    let seed: u64 = parts[0]
        .parse()
        .map_err(|_| CliError::Parse(format!("bad synthetic seed `{}`", parts[0])))?;
    let k: usize = parts[1]
        .parse()
        .map_err(|_| CliError::Parse(format!("bad synthetic block count `{}`", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Parse(format!("bad synthetic net count `{}`", parts[2])))?;
    Ok((seed, k, n))
}

fn parse_alphas(arg: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for part in arg.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("bad blend weight `{}`", part.trim())))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Parse("empty --alphas list".into()));
    }
    Ok(out)
}

/// Parse the bundle named by the `input`/`macro_min_area` settings.
fn load_netlist(s: &mut Settings) -> Result<Netlist, CliError> {
    let input = PathBuf::from(s.string("input")?);
    let min_area = s.f64("macro_min_area")?;
    let opts = ParseOptions {
        macro_min_area: if min_area > 0.0 { Some(min_area) } else { None },
    };
    Ok(parse_bundle_with(&input, &opts)?)
}

/// Netlist from either the `input` bundle or the `synthetic` triple,
/// plus its instance label. Zero canvas settings mean "10 per cell".
fn resolve_instance(s: &mut Settings, grid: usize) -> Result<(Netlist, String), CliError> {
    let syn = s.string("synthetic")?;
    if !syn.is_empty() {
        let (seed, k, n) = parse_synthetic(&syn)?;
        s.set("synthetic", format!("{seed},{k},{n}"));
        let mut w = s.f64("canvas_width")?;
        let mut h = s.f64("canvas_height")?;
        if w <= 0.0 {
            w = 10.0 * grid as f64;
            s.set("canvas_width", w);
        }
        if h <= 0.0 {
            h = 10.0 * grid as f64;
            s.set("canvas_height", h);
        }
        let netlist = gen_synthetic(seed, k, n, w, h)?;
        Ok((netlist, instance_name(None, Some((seed, k, n)))))
    } else {
        let input = s.string("input")?;
        if input.is_empty() {
            return Err(CliError::Parse(
                "give an input bundle or --synthetic SEED,K,N".into(),
            ));
        }
        let netlist = load_netlist(s)?;
        Ok((netlist, instance_name(Some(Path::new(&input)), None)))
    }
}

/// Strict `.pl` read: one real position per macro, error if any is missing.
fn positions_from_pl(path: &Path, netlist: &Netlist) -> Result<Vec<(f64, f64)>, CliError> {
    let map = bookshelf::read_pl(path)?;
    let mut out = Vec::with_capacity(netlist.macros.len());
    for m in &netlist.macros {
        match map.get(&m.id) {
            Some(&p) => out.push(p),
            None => {
                return Err(CliError::Placement(format!(
                    "{}: no position for block {}",
                    path.display(),
                    m.id
                )))
            }
        }
    }
    Ok(out)
}

fn unwrap_cells(cells: Vec<Option<GridPos>>) -> Result<Vec<GridPos>, CliError> {
    cells
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::Other("episode left a block unplaced".into()))
}

fn cells_to_real(canvas: &Canvas, cells: &[GridPos]) -> Vec<(f64, f64)> {
    cells.iter().map(|&c| canvas.real_pos(c)).collect()
}

/// Wirelength and periphery distance of real (possibly off-grid)
/// left-bottom corners.
fn real_metrics(
    netlist: &Netlist,
    positions: &[(f64, f64)],
) -> Result<(f64, RegularityValue), CliError> {
    let somes: Vec<Option<(f64, f64)>> = positions.iter().copied().map(Some).collect();
    let hpwl = hpwl_total(netlist, &somes)?;
    let mut total = 0.0;
    for &(x, y) in positions {
        total += regularity_of_point(netlist.canvas_width, netlist.canvas_height, x, y);
    }
    let mean = if positions.is_empty() {
        0.0
    } else {
        total / positions.len() as f64
    };
    Ok((hpwl, RegularityValue { total, mean }))
}

const METRICS_HEADER: &str = "instance,step,hpwl,regularity_total,regularity_mean\n";

fn metrics_csv(instance: &str, rows: &[(usize, f64, RegularityValue)]) -> String {
    let mut s = String::from(METRICS_HEADER);
    for (step, hpwl, reg) in rows {
        let _ = writeln!(s, "{instance},{step},{hpwl},{},{}", reg.total, reg.mean);
    }
    s
}

fn transcript_csv(passes: &[Vec<TranscriptEntry>]) -> String {
    let mut s = String::from("pass,step,block,action,r_wire,r_reg,hpwl,regularity\n");
    for (i, entries) in passes.iter().enumerate() {
        for e in entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                i + 1,
                e.step,
                e.macro_id,
                e.action,
                e.r_wire,
                e.r_reg,
                e.hpwl,
                e.regularity
            );
        }
    }
    s
}

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

pub fn cmd_parse(a: ParseArgs) -> Result<(), CliError> {
    let mut s = Settings::new();
    s.set("command", "parse");
    s.set("input", a.input.display());
    s.set("macro_min_area", 0.0);
    if let Some(cfg) = &a.common.run_config {
        s.merge_file(cfg)?;
    }
    s.set("input", a.input.display());
    s.set_opt("macro_min_area", &a.common.macro_min_area);

    let netlist = load_netlist(&mut s)?;
    let instance = instance_name(Some(&a.input), None);
    let pins: usize = netlist.nets.iter().map(|n| n.pins.len()).sum();

    let mut text = String::new();
    let _ = writeln!(text, "instance {instance}");
    let _ = writeln!(
        text,
        "canvas {} x {}",
        netlist.canvas_width, netlist.canvas_height
    );
    let _ = writeln!(text, "movable {}", netlist.macros.len());
    let _ = writeln!(text, "terminals {}", netlist.terminals.len());
    let _ = writeln!(text, "nets {}", netlist.nets.len());
    let _ = writeln!(text, "pins {pins}");
    let _ = writeln!(text, "movable_area {}", netlist.macro_area());
    let _ = writeln!(text, "structural_hash {:016x}", netlist.structural_hash());
    print!("{text}");

    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        write_text(&dir.join("parse.txt"), &text)?;
        s.write_resolved(dir)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// place
// ---------------------------------------------------------------------------

pub fn cmd_place(a: PlaceArgs) -> Result<(), CliError> {
    let mut s = Settings::new();
    s.set("command", "place");
    s.set("input", a.input.display());
    s.set("alpha", 0.7);
    s.set("grid", 32);
    s.set("seed", 0);
    s.set("order", "area-nets");
    s.set("macro_min_area", 0.0);
    if let Some(cfg) = &a.common.run_config {
        s.merge_file(cfg)?;
    }
    s.set("input", a.input.display());
    s.set_opt("alpha", &a.alpha);
    s.set_opt("grid", &a.grid);
    s.set_opt("seed", &a.seed);
    s.set_opt("order", &a.order);
    s.set_opt("macro_min_area", &a.common.macro_min_area);

    let netlist = load_netlist(&mut s)?;
    let instance = instance_name(Some(&a.input), None);
    let alpha = s.f64("alpha")?;
    let grid = s.usize("grid")?;
    let seed = s.u64("seed")?;
    let order = parse_order(&s.string("order")?)?;

    let mut cfg = EnvConfig::place(grid);
    cfg.alpha = alpha;
    cfg.seed = seed;
    cfg.order_rule = order;
    let (mut env, _) = PlacementEnv::new(cfg, netlist.clone(), None)?;
    let (hpwl, reg) = greedy_episode(&mut env, None, alpha)?;

    let cells = unwrap_cells(env.grid_positions())?;
    let real = cells_to_real(env.canvas(), &cells);

    ensure_dir(&a.out)?;
    bookshelf::write_pl(a.out.join("place.pl"), &netlist, &real)?;
    let rows: Vec<(usize, f64, RegularityValue)> = env
        .transcript()
        .iter()
        .map(|e| {
            let placed = (e.step + 1) as f64;
            (
                e.step,
                e.hpwl,
                RegularityValue {
                    total: e.regularity,
                    mean: e.regularity / placed,
                },
            )
        })
        .collect();
    write_text(&a.out.join("metrics.csv"), &metrics_csv(&instance, &rows))?;
    write_text(
        &a.out.join("transcript.csv"),
        &transcript_csv(&[env.transcript().to_vec()]),
    )?;
    s.write_resolved(&a.out)?;

    println!(
        "placed {} blocks on a {grid} x {grid} grid: hpwl {hpwl} regularity {}",
        netlist.macros.len(),
        reg.total
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// regulate
// ---------------------------------------------------------------------------

pub fn cmd_regulate(a: RegulateArgs) -> Result<(), CliError> {
    let mut s = Settings::new();
    s.set("command", "regulate");
    s.set("input", a.input.display());
    s.set("init", "greedy");
    s.set("policy", "greedy");
    s.set("alpha", 0.7);
    s.set("grid", 32);
    s.set("passes", 1);
    s.set("seed", 0);
    s.set("order", "area-nets");
    s.set("macro_min_area", 0.0);
    if let Some(cfg) = &a.common.run_config {
        s.merge_file(cfg)?;
    }
    s.set("input", a.input.display());
    s.set_opt("init", &a.init);
    s.set_opt("policy", &a.policy);
    s.set_opt("alpha", &a.alpha);
    s.set_opt("grid", &a.grid);
    s.set_opt("passes", &a.passes);
    s.set_opt("seed", &a.seed);
    s.set_opt("order", &a.order);
    s.set_opt("macro_min_area", &a.common.macro_min_area);

    let netlist = load_netlist(&mut s)?;
    let instance = instance_name(Some(&a.input), None);
    let alpha = s.f64("alpha")?;
    let grid = s.usize("grid")?;
    let passes = s.usize("passes")?;
    let seed = s.u64("seed")?;
    let order = parse_order(&s.string("order")?)?;
    let init_src = s.string("init")?;
    let policy_src = s.string("policy")?;

    let canvas = Canvas::new(netlist.canvas_width, netlist.canvas_height, grid)?;
    let (init_real, init_cells) = if init_src == "greedy" {
        let cells = greedy_place_positions(&netlist, grid)?;
        (cells_to_real(&canvas, &cells), cells)
    } else {
        let real = positions_from_pl(Path::new(&init_src), &netlist)?;
        let cells: Vec<GridPos> = real.iter().map(|&(x, y)| canvas.snap(x, y)).collect();
        (real, cells)
    };

    let mut policy = if policy_src == "greedy" {
        None
    } else {
        let net = PolicyNet::load_checkpoint(Path::new(&policy_src))?;
        if net.n() != grid {
            return Err(CliError::Parse(format!(
                "checkpoint was trained on a {} x {} grid but --grid is {grid}",
                net.n(),
                net.n()
            )));
        }
        Some(net)
    };

    let (h0, r0) = real_metrics(&netlist, &init_real)?;
    let mut rows: Vec<(usize, f64, RegularityValue)> = vec![(0, h0, r0)];
    let mut transcripts: Vec<Vec<TranscriptEntry>> = Vec::new();
    let mut final_real = init_real;

    if passes > 0 {
        let mut cfg = EnvConfig::regulate(grid);
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.order_rule = order;
        let (mut env, _) = PlacementEnv::new(cfg, netlist.clone(), Some(&init_cells))?;
        let mut current = init_cells;
        for pass in 1..=passes {
            match &mut policy {
                None => {
                    greedy_episode(&mut env, Some(&current), alpha)?;
                }
                Some(net) => {
                    argmax_episode(&mut env, net, Some(&current))?;
                }
            }
            let (hpwl, reg) = env.evaluate();
            rows.push((pass, hpwl, reg));
            transcripts.push(env.transcript().to_vec());
            current = unwrap_cells(env.grid_positions())?;
        }
        final_real = cells_to_real(&canvas, &current);
    }

    ensure_dir(&a.out)?;
    bookshelf::write_pl(a.out.join("regulate.pl"), &netlist, &final_real)?;
    write_text(&a.out.join("metrics.csv"), &metrics_csv(&instance, &rows))?;
    write_text(&a.out.join("transcript.csv"), &transcript_csv(&transcripts))?;
    s.write_resolved(&a.out)?;

    let last = rows.last().expect("at least the input row");
    println!(
        "refined {} blocks over {passes} pass(es): hpwl {} -> {} regularity {} -> {}",
        netlist.macros.len(),
        h0,
        last.1,
        r0.total,
        last.2.total
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let mut s = Settings::new();
    s.set("command", "train");
    s.set(
        "input",
        a.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
    );
    s.set("synthetic", "");
    s.set("canvas_width", 0.0);
    s.set("canvas_height", 0.0);
    s.set("mode", "regulate");
    s.set("grid", 32);
    s.set("order", "area-nets");
    s.set("macro_min_area", 0.0);
    let d = PpoConfig::default();
    s.set("alpha", d.alpha);
    s.set("lr", d.lr);
    s.set("episodes", d.episodes);
    s.set("update_epochs", d.update_epochs);
    s.set("minibatch", d.minibatch_size);
    s.set("buffer", d.buffer_capacity);
    s.set("clip", d.clip);
    s.set("grad_clip", d.grad_clip_norm);
    s.set("gamma", d.gamma);
    s.set("entropy_coef", d.entropy_coef);
    s.set("value_coef", d.value_coef);
    s.set("rollout_episodes", d.rollout_episodes);
    s.set("seed", d.seed);
    if let Some(cfg) = &a.common.run_config {
        s.merge_file(cfg)?;
    }
    if let Some(input) = &a.input {
        s.set("input", input.display());
    }
    s.set_opt("synthetic", &a.synthetic);
    s.set_opt("canvas_width", &a.canvas_width);
    s.set_opt("canvas_height", &a.canvas_height);
    s.set_opt("mode", &a.mode);
    s.set_opt("grid", &a.grid);
    s.set_opt("alpha", &a.alpha);
    s.set_opt("lr", &a.lr);
    s.set_opt("episodes", &a.episodes);
    s.set_opt("update_epochs", &a.update_epochs);
    s.set_opt("minibatch", &a.minibatch);
    s.set_opt("buffer", &a.buffer);
    s.set_opt("clip", &a.clip);
    s.set_opt("grad_clip", &a.grad_clip);
    s.set_opt("gamma", &a.gamma);
    s.set_opt("entropy_coef", &a.entropy_coef);
    s.set_opt("value_coef", &a.value_coef);
    s.set_opt("rollout_episodes", &a.rollout_episodes);
    s.set_opt("seed", &a.seed);
    s.set_opt("macro_min_area", &a.common.macro_min_area);

    let grid = s.usize("grid")?;
    let (netlist, instance) = resolve_instance(&mut s, grid)?;
    let mode = parse_mode(&s.string("mode")?)?;
    let order = parse_order(&s.string("order")?)?;

    let ppo = PpoConfig {
        lr: s.f64("lr")?,
        episodes: s.usize("episodes")?,
        update_epochs: s.usize("update_epochs")?,
        minibatch_size: s.usize("minibatch")?,
        buffer_capacity: s.usize("buffer")?,
        clip: s.f64("clip")?,
        grad_clip_norm: s.f64("grad_clip")?,
        gamma: s.f64("gamma")?,
        alpha: s.f64("alpha")?,
        entropy_coef: s.f64("entropy_coef")?,
        value_coef: s.f64("value_coef")?,
        rollout_episodes: s.usize("rollout_episodes")?,
        seed: s.u64("seed")?,
    };

    let mut env_cfg = match mode {
        Mode::Place => EnvConfig::place(grid),
        Mode::Regulate => EnvConfig::regulate(grid),
    };
    env_cfg.order_rule = order;

    let mut policy = PolicyNet::new(grid, ppo.seed)?;
    let report = train(&netlist, env_cfg, &ppo, &mut policy)?;

    ensure_dir(&a.out)?;
    policy.set_params(&report.best_params);
    policy.save_checkpoint(&a.out.join("policy.ckpt"))?;
    let mut curve = String::from("episode,mean_reward,hpwl,regularity\n");
    for p in &report.curve {
        let _ = writeln!(
            curve,
            "{},{},{},{}",
            p.episode, p.mean_reward, p.hpwl, p.regularity
        );
    }
    write_text(&a.out.join("curve.csv"), &curve)?;
    s.write_resolved(&a.out)?;

    match report.best_episode {
        Some(ep) => println!(
            "trained {} episodes on {instance} ({} updates): best hpwl {} at episode {ep}",
            report.curve.len(),
            report.updates.len(),
            report.best_hpwl
        ),
        None => println!("no episodes run on {instance}; checkpoint holds the initial parameters"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct Rect {
    id: String,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

fn rects_overlap(a: &Rect, b: &Rect) -> bool {
    a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h
}

pub fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let mut s = Settings::new();
    s.set("command", "eval");
    s.set("input", a.input.display());
    s.set("placement", a.placement.display());
    s.set("macro_min_area", 0.0);
    if let Some(cfg) = &a.common.run_config {
        s.merge_file(cfg)?;
    }
    s.set("input", a.input.display());
    s.set("placement", a.placement.display());
    s.set_opt("macro_min_area", &a.common.macro_min_area);

    let netlist = load_netlist(&mut s)?;
    let instance = instance_name(Some(&a.input), None);
    let positions = positions_from_pl(&a.placement, &netlist)?;
    let (hpwl, reg) = real_metrics(&netlist, &positions)?;

    let blocks: Vec<Rect> = netlist
        .macros
        .iter()
        .zip(&positions)
        .map(|(m, &(x, y))| Rect {
            id: m.id.clone(),
            x,
            y,
            w: m.width,
            h: m.height,
        })
        .collect();
    let fixed: Vec<Rect> = netlist
        .terminals
        .iter()
        .map(|t| Rect {
            id: t.id.clone(),
            x: t.x,
            y: t.y,
            w: t.width,
            h: t.height,
        })
        .collect();

    let mut overlap: Option<(String, String)> = None;
    'outer: for (i, a_rect) in blocks.iter().enumerate() {
        for b_rect in blocks.iter().skip(i + 1) {
            if rects_overlap(a_rect, b_rect) {
                overlap = Some((a_rect.id.clone(), b_rect.id.clone()));
                break 'outer;
            }
        }
        for t_rect in &fixed {
            if rects_overlap(a_rect, t_rect) {
                overlap = Some((a_rect.id.clone(), t_rect.id.clone()));
                break 'outer;
            }
        }
    }
    let out_of_canvas: Option<String> = blocks
        .iter()
        .find(|r| {
            r.x < 0.0
                || r.y < 0.0
                || r.x + r.w > netlist.canvas_width
                || r.y + r.h > netlist.canvas_height
        })
        .map(|r| r.id.clone());
    let overlap_free = overlap.is_none();
    let in_canvas = out_of_canvas.is_none();

    println!("instance {instance}");
    println!("hpwl {hpwl}");
    println!("regularity_total {}", reg.total);
    println!("regularity_mean {}", reg.mean);
    println!("overlap_free {overlap_free}");
    println!("in_canvas {in_canvas}");

    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        let mut csv =
            String::from("instance,hpwl,regularity_total,regularity_mean,overlap_free,in_canvas\n");
        let _ = writeln!(
            csv,
            "{instance},{hpwl},{},{},{overlap_free},{in_canvas}",
            reg.total, reg.mean
        );
        write_text(&dir.join("eval.csv"), &csv)?;
        s.write_resolved(dir)?;
    }

    if let Some((a_id, b_id)) = overlap {
        return Err(CliError::Placement(format!(
            "blocks {a_id} and {b_id} overlap"
        )));
    }
    if let Some(id) = out_of_canvas {
        return Err(CliError::Placement(format!("block {id} leaves the canvas")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

pub fn cmd_ablate(a: AblateArgs) -> Result<(), CliError> {
    let mut s = Settings::new();
    s.set("command", "ablate");
    s.set(
        "input",
        a.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
    );
    s.set("synthetic", "");
    s.set("canvas_width", 0.0);
    s.set("canvas_height", 0.0);
    s.set("alphas", "0.1,0.3,0.5,0.7,0.9");
    s.set("episodes", 0);
    s.set("passes", 1);
    s.set("grid", 32);
    s.set("seed", 0);
    s.set("macro_min_area", 0.0);
    if let Some(cfg) = &a.common.run_config {
        s.merge_file(cfg)?;
    }
    if let Some(input) = &a.input {
        s.set("input", input.display());
    }
    s.set_opt("synthetic", &a.synthetic);
    s.set_opt("canvas_width", &a.canvas_width);
    s.set_opt("canvas_height", &a.canvas_height);
    s.set_opt("alphas", &a.alphas);
    s.set_opt("episodes", &a.episodes);
    s.set_opt("passes", &a.passes);
    s.set_opt("grid", &a.grid);
    s.set_opt("seed", &a.seed);
    s.set_opt("macro_min_area", &a.common.macro_min_area);

    let grid = s.usize("grid")?;
    let (netlist, instance) = resolve_instance(&mut s, grid)?;
    let alphas = parse_alphas(&s.string("alphas")?)?;
    let episodes = s.usize("episodes")?;
    let passes = s.usize("passes")?;
    let seed = s.u64("seed")?;

    let initial = greedy_place_positions(&netlist, grid)?;
    let canvas = Canvas::new(netlist.canvas_width, netlist.canvas_height, grid)?;
    let (h0, r0) = real_metrics(&netlist, &cells_to_real(&canvas, &initial))?;
    println!("initial: hpwl {h0} regularity {}", r0.total);

    let mut csv = String::from(
        "instance,alpha,episodes,passes,hpwl,regularity_total,regularity_mean\n",
    );
    for &alpha in &alphas {
        let (hpwl, reg) = if episodes == 0 {
            let mut cfg = EnvConfig::regulate(grid);
            cfg.alpha = alpha;
            cfg.seed = seed;
            let (mut env, _) = PlacementEnv::new(cfg, netlist.clone(), Some(&initial))?;
            let mut current = initial.clone();
            for _ in 0..passes {
                greedy_episode(&mut env, Some(&current), alpha)?;
                current = unwrap_cells(env.grid_positions())?;
            }
            if passes == 0 {
                (h0, r0)
            } else {
                env.evaluate()
            }
        } else {
            let ppo = PpoConfig {
                alpha,
                episodes,
                seed,
                ..PpoConfig::default()
            };
            let mut policy = PolicyNet::new(grid, seed)?;
            let report = train(&netlist, EnvConfig::regulate(grid), &ppo, &mut policy)?;
            policy.set_params(&report.best_params);
            let mut cfg = EnvConfig::regulate(grid);
            cfg.alpha = alpha;
            cfg.seed = seed;
            let (mut env, _) = PlacementEnv::new(cfg, netlist.clone(), Some(&initial))?;
            argmax_episode(&mut env, &mut policy, Some(&initial))?
        };
        let _ = writeln!(
            csv,
            "{instance},{alpha},{episodes},{passes},{hpwl},{},{}",
            reg.total, reg.mean
        );
        println!("alpha {alpha}: hpwl {hpwl} regularity {}", reg.total);
    }

    ensure_dir(&a.out)?;
    write_text(&a.out.join("ablate.csv"), &csv)?;
    s.write_resolved(&a.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

pub fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    let mut s = Settings::new();
    s.set("command", "render");
    s.set("input", a.input.display());
    s.set("placement", a.placement.display());
    s.set("grid_lines", 0);
    s.set("macro_min_area", 0.0);
    if let Some(cfg) = &a.common.run_config {
        s.merge_file(cfg)?;
    }
    s.set("input", a.input.display());
    s.set("placement", a.placement.display());
    s.set_opt("grid_lines", &a.grid_lines);
    s.set_opt("macro_min_area", &a.common.macro_min_area);

    let netlist = load_netlist(&mut s)?;
    let grid_lines = s.usize("grid_lines")?;
    let map = bookshelf::read_pl(&a.placement)?;
    let svg = render_svg(
        &netlist,
        &map,
        if grid_lines > 0 { Some(grid_lines) } else { None },
    );

    ensure_dir(&a.out)?;
    let path = a.out.join("layout.svg");
    write_text(&path, &svg)?;
    s.write_resolved(&a.out)?;
    println!("wrote {}", path.display());
    Ok(())
}
