//! Deterministic SVG 1.1 rendering of a placement: canvas outline,
//! fixed terminals in one fill, movable blocks in another, optional
//! grid lines. Chip coordinates grow upward, SVG coordinates grow
//! downward, so everything is drawn inside one y-flipped group.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use placekit_core::Netlist;

const CANVAS_FILL: &str = "#ffffff";
const CANVAS_STROKE: &str = "#222222";
const GRID_STROKE: &str = "#dddddd";
const TERMINAL_FILL: &str = "#d95f02";
const MACRO_FILL: &str = "#1b9e77";
const MACRO_STROKE: &str = "#0b3d2e";

/// Render `netlist` with the given block positions (left-bottom corners
/// by block name; blocks without a position are simply not drawn).
/// Output bytes depend only on the inputs.
pub fn render_svg(
    netlist: &Netlist,
    positions: &BTreeMap<String, (f64, f64)>,
    grid_lines: Option<usize>,
) -> String {
    let w = netlist.canvas_width;
    let h = netlist.canvas_height;
    let stroke = (w.max(h) / 600.0).max(0.05);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<g transform=\"translate(0,{h}) scale(1,-1)\">");
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" \
         fill=\"{CANVAS_FILL}\" stroke=\"{CANVAS_STROKE}\" stroke-width=\"{stroke}\"/>"
    );

    if let Some(n) = grid_lines {
        if n > 0 {
            let gs = stroke / 2.0;
            for i in 1..n {
                let x = w * i as f64 / n as f64;
                let _ = writeln!(
                    s,
                    "<line x1=\"{x}\" y1=\"0\" x2=\"{x}\" y2=\"{h}\" \
                     stroke=\"{GRID_STROKE}\" stroke-width=\"{gs}\"/>"
                );
            }
            for i in 1..n {
                let y = h * i as f64 / n as f64;
                let _ = writeln!(
                    s,
                    "<line x1=\"0\" y1=\"{y}\" x2=\"{w}\" y2=\"{y}\" \
                     stroke=\"{GRID_STROKE}\" stroke-width=\"{gs}\"/>"
                );
            }
        }
    }

    for t in &netlist.terminals {
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{TERMINAL_FILL}\">\
             <title>{}</title></rect>",
            t.x, t.y, t.width, t.height, t.id
        );
    }

    for m in &netlist.macros {
        let Some(&(x, y)) = positions.get(&m.id) else {
            continue;
        };
        let _ = writeln!(
            s,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{}\" height=\"{}\" \
             fill=\"{MACRO_FILL}\" fill-opacity=\"0.85\" \
             stroke=\"{MACRO_STROKE}\" stroke-width=\"{stroke}\">\
             <title>{}</title></rect>",
            m.width, m.height, m.id
        );
    }

    s.push_str("</g>\n</svg>\n");
    s
}
