//! Bookshelf netlist bundles: parsing, writing, synthetic generation.
//!
//! A bundle is the classic four-file set referenced from an `.aux` line:
//! `.nodes` (rectangles), `.nets` (pin groups with offsets), `.pl`
//! (positions) and optionally `.scl` (core rows, consumed only for the
//! canvas extents). Comments (`#`) and `UCLA` header lines are skipped,
//! tokens may be separated by arbitrary whitespace.
//!
//! Two conventions are normalised at parse time:
//!
//! * pin offsets are stored relative to the owner's left-bottom corner
//!   (the file format gives them relative to the owner's center), and
//! * positions always refer to the left-bottom corner of a rectangle.
//!
//! Movable nodes smaller than an optional area threshold are treated as
//! standard cells: they are dropped, their pins are removed from every
//! net, and nets left with fewer than two pins disappear with them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A movable rectangular block.
#[derive(Debug, Clone, PartialEq)]
pub struct Macro {
    pub id: String,
    /// Width in microns, > 0.
    pub width: f64,
    /// Height in microns, > 0.
    pub height: f64,
}

impl Macro {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// A fixed rectangular block with an absolute left-bottom position.
#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub id: String,
    pub width: f64,
    pub height: f64,
    pub x: f64,
    pub y: f64,
}

/// Who a pin belongs to; the index points into `Netlist::macros` or
/// `Netlist::terminals`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinOwner {
    Macro(usize),
    Terminal(usize),
}

/// A pin, with its offset measured from the owner's left-bottom corner.
///
/// Invariant: `0 <= dx <= owner.width` and `0 <= dy <= owner.height`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pin {
    pub owner: PinOwner,
    pub dx: f64,
    pub dy: f64,
}

/// A net: two or more pins whose bounding box defines its wirelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub id: String,
    pub pins: Vec<Pin>,
}

/// A fully resolved instance: blocks, nets and the canvas they live on.
///
/// `initial` holds the `.pl` position (left-bottom corner, microns) for
/// each macro, if the file provided one; index-aligned with `macros`.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub macros: Vec<Macro>,
    pub terminals: Vec<Terminal>,
    pub nets: Vec<Net>,
    pub canvas_width: f64,
    pub canvas_height: f64,
    pub initial: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, thiserror::Error)]
pub enum BookshelfError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {msg}")]
    MalformedLine {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("pin references unknown node `{0}`")]
    UnresolvedPinOwner(String),
    #[error("invalid bundle: {0}")]
    Invalid(String),
    #[error("area budget infeasible: {0}")]
    InfeasibleAreaBudget(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Knobs for [`parse_bundle_with`].
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Movable nodes with `width * height` strictly below this are
    /// collapsed away as standard cells. `None` keeps every node.
    pub macro_min_area: Option<f64>,
}

impl Netlist {
    /// Nets incident to each macro (distinct net indices, ascending).
    pub fn nets_of_macros(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.macros.len()];
        for (ni, net) in self.nets.iter().enumerate() {
            for pin in &net.pins {
                if let PinOwner::Macro(m) = pin.owner {
                    if out[m].last() != Some(&ni) {
                        out[m].push(ni);
                    }
                }
            }
        }
        out
    }

    /// Total movable area.
    pub fn macro_area(&self) -> f64 {
        self.macros.iter().map(Macro::area).sum()
    }

    /// Line-oriented canonical text form, used for golden tests and
    /// structural hashing. Stable across runs and platforms.
    pub fn canonical_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "canvas {} {}", self.canvas_width, self.canvas_height);
        for (i, m) in self.macros.iter().enumerate() {
            match self.initial[i] {
                Some((x, y)) => {
                    let _ = writeln!(s, "macro {} {} {} @ {} {}", m.id, m.width, m.height, x, y);
                }
                None => {
                    let _ = writeln!(s, "macro {} {} {} @ -", m.id, m.width, m.height);
                }
            }
        }
        for t in &self.terminals {
            let _ = writeln!(s, "terminal {} {} {} @ {} {}", t.id, t.width, t.height, t.x, t.y);
        }
        for net in &self.nets {
            let _ = write!(s, "net {}", net.id);
            for pin in &net.pins {
                let owner = match pin.owner {
                    PinOwner::Macro(m) => &self.macros[m].id,
                    PinOwner::Terminal(t) => &self.terminals[t].id,
                };
                let _ = write!(s, " {}:{}:{}", owner, pin.dx, pin.dy);
            }
            let _ = writeln!(s);
        }
        s
    }

    /// Hash of [`Self::canonical_dump`]; equal dumps give equal hashes.
    pub fn structural_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.canonical_dump().hash(&mut h);
        h.finish()
    }

    fn validate(&self) -> Result<(), BookshelfError> {
        if !(self.canvas_width > 0.0) || !(self.canvas_height > 0.0) {
            return Err(BookshelfError::Invalid(format!(
                "canvas must be positive, got {} x {}",
                self.canvas_width, self.canvas_height
            )));
        }
        for m in &self.macros {
            if !(m.width > 0.0) || !(m.height > 0.0) {
                return Err(BookshelfError::Invalid(format!(
                    "macro {} has non-positive size",
                    m.id
                )));
            }
        }
        for t in &self.terminals {
            if !(t.width > 0.0) || !(t.height > 0.0) {
                return Err(BookshelfError::Invalid(format!(
                    "terminal {} has non-positive size",
                    t.id
                )));
            }
            if t.x < 0.0
                || t.y < 0.0
                || t.x + t.width > self.canvas_width
                || t.y + t.height > self.canvas_height
            {
                return Err(BookshelfError::Invalid(format!(
                    "terminal {} sticks out of the canvas",
                    t.id
                )));
            }
        }
        for net in &self.nets {
            for pin in &net.pins {
                let (w, h, id) = match pin.owner {
                    PinOwner::Macro(m) => {
                        let m = &self.macros[m];
                        (m.width, m.height, &m.id)
                    }
                    PinOwner::Terminal(t) => {
                        let t = &self.terminals[t];
                        (t.width, t.height, &t.id)
                    }
                };
                if pin.dx < 0.0 || pin.dx > w || pin.dy < 0.0 || pin.dy > h {
                    return Err(BookshelfError::Invalid(format!(
                        "net {}: pin offset ({}, {}) outside owner {}",
                        net.id, pin.dx, pin.dy, id
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Strip comments and headers; yield (1-based line number, trimmed text).
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() || line.starts_with("UCLA") {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn malformed(file: &Path, line: usize, msg: impl Into<String>) -> BookshelfError {
    BookshelfError::MalformedLine {
        file: file.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_num(file: &Path, line: usize, tok: &str) -> Result<f64, BookshelfError> {
    tok.parse::<f64>()
        .map_err(|_| malformed(file, line, format!("expected a number, got `{tok}`")))
}

/// `Key : value` headers used by .nodes and .nets.
fn header_value(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once(':')?;
    Some((k.trim(), v.trim()))
}

fn read_file(path: &Path) -> Result<String, BookshelfError> {
    if !path.is_file() {
        return Err(BookshelfError::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

struct RawNode {
    name: String,
    width: f64,
    height: f64,
    movable: bool,
}

/// Parse a bundle starting from its `.aux` file.
pub fn parse_bundle(aux: impl AsRef<Path>) -> Result<Netlist, BookshelfError> {
    parse_bundle_with(aux, &ParseOptions::default())
}

/// Parse a bundle with explicit [`ParseOptions`].
pub fn parse_bundle_with(
    aux: impl AsRef<Path>,
    opts: &ParseOptions,
) -> Result<Netlist, BookshelfError> {
    let aux = aux.as_ref();
    let aux_text = read_file(aux)?;
    let dir = aux.parent().unwrap_or_else(|| Path::new("."));

    let mut nodes_path = None;
    let mut nets_path = None;
    let mut pl_path = None;
    let mut scl_path = None;
    for (ln, line) in content_lines(&aux_text) {
        // "RowBasedPlacement : a.nodes a.nets a.wts a.pl a.scl"
        let rest = match line.split_once(':') {
            Some((_, rest)) => rest,
            None => return Err(malformed(aux, ln, "expected `<tag> : <files...>`")),
        };
        for tok in rest.split_whitespace() {
            let p = dir.join(tok);
            match Path::new(tok).extension().and_then(|e| e.to_str()) {
                Some("nodes") => nodes_path = Some(p),
                Some("nets") => nets_path = Some(p),
                Some("pl") => pl_path = Some(p),
                Some("scl") => scl_path = Some(p),
                _ => {} // .wts and friends are irrelevant here
            }
        }
    }
    let nodes_path =
        nodes_path.ok_or_else(|| BookshelfError::MissingFile(dir.join("<stem>.nodes")))?;
    let nets_path =
        nets_path.ok_or_else(|| BookshelfError::MissingFile(dir.join("<stem>.nets")))?;
    let pl_path = pl_path.ok_or_else(|| BookshelfError::MissingFile(dir.join("<stem>.pl")))?;

    let raw_nodes = parse_nodes(&nodes_path)?;
    let positions = read_pl(&pl_path)?;
    let canvas = match &scl_path {
        Some(p) if p.is_file() => Some(parse_scl_extents(p)?),
        _ => None,
    };

    // Split nodes into kept macros and terminals, applying the collapse rule.
    let mut macros = Vec::new();
    let mut terminals = Vec::new();
    let mut index: BTreeMap<String, Option<PinOwner>> = BTreeMap::new();
    for node in &raw_nodes {
        if index.contains_key(&node.name) {
            return Err(BookshelfError::Invalid(format!(
                "duplicate node name `{}`",
                node.name
            )));
        }
        if node.movable {
            let collapsed = opts
                .macro_min_area
                .map(|t| node.width * node.height < t)
                .unwrap_or(false);
            if collapsed {
                index.insert(node.name.clone(), None);
            } else {
                index.insert(node.name.clone(), Some(PinOwner::Macro(macros.len())));
                macros.push(Macro {
                    id: node.name.clone(),
                    width: node.width,
                    height: node.height,
                });
            }
        } else {
            let (x, y) = *positions.get(&node.name).ok_or_else(|| {
                BookshelfError::Invalid(format!("terminal {} has no position in .pl", node.name))
            })?;
            index.insert(node.name.clone(), Some(PinOwner::Terminal(terminals.len())));
            terminals.push(Terminal {
                id: node.name.clone(),
                width: node.width,
                height: node.height,
                x,
                y,
            });
        }
    }

    let nets = parse_nets(&nets_path, &index, &macros, &terminals)?;

    let initial: Vec<Option<(f64, f64)>> = macros
        .iter()
        .map(|m| positions.get(&m.id).copied())
        .collect();

    let (canvas_width, canvas_height) = canvas.unwrap_or_else(|| {
        // No .scl: fall back to the extent of everything we know about.
        let mut w: f64 = 1.0;
        let mut h: f64 = 1.0;
        for t in &terminals {
            w = w.max(t.x + t.width);
            h = h.max(t.y + t.height);
        }
        for (m, pos) in macros.iter().zip(&initial) {
            if let Some((x, y)) = pos {
                w = w.max(x + m.width);
                h = h.max(y + m.height);
            }
        }
        (w, h)
    });

    let netlist = Netlist {
        macros,
        terminals,
        nets,
        canvas_width,
        canvas_height,
        initial,
    };
    netlist.validate()?;
    Ok(netlist)
}

fn parse_nodes(path: &Path) -> Result<Vec<RawNode>, BookshelfError> {
    let text = read_file(path)?;
    let mut declared_nodes = None;
    let mut declared_terminals = None;
    let mut nodes = Vec::new();
    for (ln, line) in content_lines(&text) {
        if let Some((k, v)) = header_value(line) {
            match k {
                "NumNodes" => {
                    declared_nodes = Some(parse_num(path, ln, v)? as usize);
                    continue;
                }
                "NumTerminals" => {
                    declared_terminals = Some(parse_num(path, ln, v)? as usize);
                    continue;
                }
                _ => {} // a node named like "foo : 1 2" is not a thing; fall through
            }
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(malformed(path, ln, "expected `name width height [terminal]`"));
        }
        let movable = match toks.get(3) {
            None => true,
            Some(t) if t.starts_with("terminal") => false,
            Some(t) => return Err(malformed(path, ln, format!("unexpected token `{t}`"))),
        };
        nodes.push(RawNode {
            name: toks[0].to_string(),
            width: parse_num(path, ln, toks[1])?,
            height: parse_num(path, ln, toks[2])?,
            movable,
        });
    }
    if let Some(n) = declared_nodes {
        if n != nodes.len() {
            return Err(BookshelfError::Invalid(format!(
                "{}: NumNodes says {} but {} node lines found",
                path.display(),
                n,
                nodes.len()
            )));
        }
    }
    if let Some(t) = declared_terminals {
        let actual = nodes.iter().filter(|n| !n.movable).count();
        if t != actual {
            return Err(BookshelfError::Invalid(format!(
                "{}: NumTerminals says {} but {} terminal lines found",
                path.display(),
                t,
                actual
            )));
        }
    }
    Ok(nodes)
}

fn parse_nets(
    path: &Path,
    index: &BTreeMap<String, Option<PinOwner>>,
    macros: &[Macro],
    terminals: &[Terminal],
) -> Result<Vec<Net>, BookshelfError> {
    let text = read_file(path)?;
    let mut nets = Vec::new();
    let mut pending: Option<(Net, usize)> = None; // (net under construction, pins left)
    let mut anon = 0usize;
    for (ln, line) in content_lines(&text) {
        if let Some((k, v)) = header_value(line) {
            match k {
                "NumNets" | "NumPins" => continue,
                "NetDegree" => {
                    if let Some((net, left)) = pending.take() {
                        if left > 0 {
                            return Err(malformed(
                                path,
                                ln,
                                format!("net {} is short {} pin lines", net.id, left),
                            ));
                        }
                        if net.pins.len() >= 2 {
                            nets.push(net);
                        }
                    }
                    let mut toks = v.split_whitespace();
                    let degree = toks
                        .next()
                        .ok_or_else(|| malformed(path, ln, "NetDegree without a count"))?;
                    let degree = parse_num(path, ln, degree)? as usize;
                    let id = toks.next().map(str::to_string).unwrap_or_else(|| {
                        anon += 1;
                        format!("n{}", anon - 1)
                    });
                    pending = Some((Net { id, pins: Vec::new() }, degree));
                    continue;
                }
                _ => {} // pin lines contain ':' too; fall through
            }
        }
        let (net, left) = pending
            .as_mut()
            .ok_or_else(|| malformed(path, ln, "pin line outside a NetDegree block"))?;
        if *left == 0 {
            return Err(malformed(path, ln, format!("too many pin lines for net {}", net.id)));
        }
        *left -= 1;
        // "name [I|O|B] [: dx dy]"  offsets are center-relative in the file
        let (head, tail) = match line.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (line, None),
        };
        let mut head_toks = head.split_whitespace();
        let name = head_toks
            .next()
            .ok_or_else(|| malformed(path, ln, "pin line without a node name"))?;
        let (mut cx, mut cy) = (0.0, 0.0);
        if let Some(tail) = tail {
            let toks: Vec<&str> = tail.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(malformed(path, ln, "expected `: dx dy` after pin direction"));
            }
            cx = parse_num(path, ln, toks[0])?;
            cy = parse_num(path, ln, toks[1])?;
        }
        let owner = index
            .get(name)
            .ok_or_else(|| BookshelfError::UnresolvedPinOwner(name.to_string()))?;
        let owner = match owner {
            Some(o) => *o,
            None => continue, // pin on a collapsed standard cell
        };
        let (w, h) = match owner {
            PinOwner::Macro(m) => (macros[m].width, macros[m].height),
            PinOwner::Terminal(t) => (terminals[t].width, terminals[t].height),
        };
        net.pins.push(Pin {
            owner,
            dx: cx + w / 2.0,
            dy: cy + h / 2.0,
        });
    }
    if let Some((net, left)) = pending.take() {
        if left > 0 {
            return Err(BookshelfError::Invalid(format!(
                "{}: net {} is short {} pin lines",
                path.display(),
                net.id,
                left
            )));
        }
        if net.pins.len() >= 2 {
            nets.push(net);
        }
    }
    Ok(nets)
}

/// Read a `.pl` file into a name -> left-bottom corner map. Lines look
/// like `name x y : N [/FIXED]`; comments and blank lines are skipped.
pub fn read_pl(path: impl AsRef<Path>) -> Result<BTreeMap<String, (f64, f64)>, BookshelfError> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let mut out = BTreeMap::new();
    for (ln, line) in content_lines(&text) {
        // "name x y : N [/FIXED]"
        let head = line.split(':').next().unwrap_or(line);
        let toks: Vec<&str> = head.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(malformed(path, ln, "expected `name x y : orient`"));
        }
        let x = parse_num(path, ln, toks[1])?;
        let y = parse_num(path, ln, toks[2])?;
        out.insert(toks[0].to_string(), (x, y));
    }
    Ok(out)
}

/// Read a standalone `.pl` and return one `(x, y)` left-bottom corner per
/// macro of `netlist`, in macro order. Every macro must appear in the file;
/// extra entries (terminals, unknown blocks) are ignored.
pub fn read_pl_positions(
    path: impl AsRef<Path>,
    netlist: &Netlist,
) -> Result<Vec<(f64, f64)>, BookshelfError> {
    let path = path.as_ref();
    let by_name = read_pl(path)?;
    let mut out = Vec::with_capacity(netlist.macros.len());
    for m in &netlist.macros {
        match by_name.get(&m.id) {
            Some(&(x, y)) => out.push((x, y)),
            None => {
                return Err(BookshelfError::Invalid(format!(
                    "{}: no position for block {}",
                    path.display(),
                    m.id
                )))
            }
        }
    }
    Ok(out)
}

/// Pull the overall core extents out of an `.scl`; everything else in the
/// file (site details, row spacing) is irrelevant for a gridded canvas.
fn parse_scl_extents(path: &Path) -> Result<(f64, f64), BookshelfError> {
    let text = read_file(path)?;
    let mut max_x: f64 = 0.0;
    let mut max_y: f64 = 0.0;
    let mut coord: Option<f64> = None;
    let mut height: Option<f64> = None;
    let mut sitewidth: f64 = 1.0;
    for (ln, line) in content_lines(&text) {
        if line.starts_with("CoreRow") {
            coord = None;
            height = None;
            sitewidth = 1.0;
            continue;
        }
        if line == "End" {
            if let (Some(c), Some(h)) = (coord, height) {
                max_y = max_y.max(c + h);
            }
            continue;
        }
        // "SubrowOrigin : 0 NumSites : 128" shares a line; handle pairwise.
        let toks: Vec<&str> = line.split_whitespace().collect();
        let mut i = 0;
        let mut origin: Option<f64> = None;
        while i + 2 < toks.len() + 1 {
            if i + 2 >= toks.len() + 1 || toks.get(i + 1) != Some(&":") {
                break;
            }
            let key = toks[i];
            let val = parse_num(path, ln, toks[i + 2])?;
            match key {
                "Coordinate" => coord = Some(val),
                "Height" => height = Some(val),
                "Sitewidth" => sitewidth = val,
                "SubrowOrigin" => origin = Some(val),
                "NumSites" => {
                    let o = origin.unwrap_or(0.0);
                    max_x = max_x.max(o + val * sitewidth);
                }
                _ => {}
            }
            i += 3;
        }
    }
    if max_x > 0.0 && max_y > 0.0 {
        Ok((max_x, max_y))
    } else {
        Err(BookshelfError::Invalid(format!(
            "{}: no usable core rows",
            path.display()
        )))
    }
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

/// Write a `.pl` with one `name x y : N` line per block. `positions` are
/// left-bottom corners in microns, index-aligned with `netlist.macros`;
/// terminals keep their fixed positions and are marked `/FIXED`.
pub fn write_pl(
    path: impl AsRef<Path>,
    netlist: &Netlist,
    positions: &[(f64, f64)],
) -> Result<(), BookshelfError> {
    assert_eq!(
        positions.len(),
        netlist.macros.len(),
        "one position per macro"
    );
    let mut s = String::from("UCLA pl 1.0\n\n");
    for (m, (x, y)) in netlist.macros.iter().zip(positions) {
        let _ = writeln!(s, "{} {} {} : N", m.id, x, y);
    }
    for t in &netlist.terminals {
        let _ = writeln!(s, "{} {} {} : N /FIXED", t.id, t.x, t.y);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Write a complete bundle (`stem.aux/.nodes/.nets/.pl/.scl`) into `dir`.
/// Macro positions come from `netlist.initial`, defaulting to the origin.
/// Returns the path of the `.aux` file.
pub fn write_bundle(
    dir: impl AsRef<Path>,
    stem: &str,
    netlist: &Netlist,
) -> Result<PathBuf, BookshelfError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut nodes = String::from("UCLA nodes 1.0\n\n");
    let _ = writeln!(nodes, "NumNodes : {}", netlist.macros.len() + netlist.terminals.len());
    let _ = writeln!(nodes, "NumTerminals : {}", netlist.terminals.len());
    for m in &netlist.macros {
        let _ = writeln!(nodes, "  {} {} {}", m.id, m.width, m.height);
    }
    for t in &netlist.terminals {
        let _ = writeln!(nodes, "  {} {} {} terminal", t.id, t.width, t.height);
    }
    fs::write(dir.join(format!("{stem}.nodes")), nodes)?;

    let total_pins: usize = netlist.nets.iter().map(|n| n.pins.len()).sum();
    let mut nets = String::from("UCLA nets 1.0\n\n");
    let _ = writeln!(nets, "NumNets : {}", netlist.nets.len());
    let _ = writeln!(nets, "NumPins : {}", total_pins);
    for net in &netlist.nets {
        let _ = writeln!(nets, "NetDegree : {} {}", net.pins.len(), net.id);
        for pin in &net.pins {
            let (name, w, h) = match pin.owner {
                PinOwner::Macro(m) => {
                    let m = &netlist.macros[m];
                    (&m.id, m.width, m.height)
                }
                PinOwner::Terminal(t) => {
                    let t = &netlist.terminals[t];
                    (&t.id, t.width, t.height)
                }
            };
            // Back to the file format's center-relative offsets.
            let _ = writeln!(nets, "  {} B : {} {}", name, pin.dx - w / 2.0, pin.dy - h / 2.0);
        }
    }
    fs::write(dir.join(format!("{stem}.nets")), nets)?;

    let positions: Vec<(f64, f64)> = netlist
        .initial
        .iter()
        .map(|p| p.unwrap_or((0.0, 0.0)))
        .collect();
    write_pl(dir.join(format!("{stem}.pl")), netlist, &positions)?;

    let mut scl = String::from("UCLA scl 1.0\n\nNumRows : 1\n\n");
    scl.push_str("CoreRow Horizontal\n");
    let _ = writeln!(scl, "  Coordinate : 0");
    let _ = writeln!(scl, "  Height : {}", netlist.canvas_height);
    scl.push_str("  Sitewidth : 1\n  Sitespacing : 1\n");
    let _ = writeln!(scl, "  SubrowOrigin : 0 NumSites : {}", netlist.canvas_width);
    scl.push_str("End\n");
    fs::write(dir.join(format!("{stem}.scl")), scl)?;

    let aux = dir.join(format!("{stem}.aux"));
    fs::write(
        &aux,
        format!("RowBasedPlacement : {stem}.nodes {stem}.nets {stem}.pl {stem}.scl\n"),
    )?;
    Ok(aux)
}

// ---------------------------------------------------------------------------
// Synthetic instances
// ---------------------------------------------------------------------------

/// Deterministically generate a synthetic instance.
///
/// All sizes, offsets and positions are integer-valued microns, so every
/// later wirelength computation on the instance is exact in `f64`. Total
/// macro area stays at or below half the canvas. A quarter of `k_macros`
/// (rounded down) small terminals line the top edge, and macros receive a
/// non-overlapping row-packed initial placement below them. Every net
/// connects 2..=5 distinct blocks with one pin each.
pub fn gen_synthetic(
    seed: u64,
    k_macros: usize,
    n_nets: usize,
    canvas_width: f64,
    canvas_height: f64,
) -> Result<Netlist, BookshelfError> {
    if !(canvas_width >= 2.0) || !(canvas_height >= 2.0) {
        return Err(BookshelfError::Invalid(format!(
            "canvas too small: {canvas_width} x {canvas_height}"
        )));
    }
    let wi = canvas_width.floor() as i64;
    let hi = canvas_height.floor() as i64;
    let budget = (wi * hi) as f64 * 0.5;
    if k_macros as f64 > budget {
        return Err(BookshelfError::InfeasibleAreaBudget(format!(
            "{k_macros} unit macros already exceed half of a {wi} x {hi} canvas"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Macro sizes: aim well under the budget so random placement stays easy.
    let avg = (budget / k_macros.max(1) as f64).sqrt();
    let lo = ((avg * 0.4).floor() as i64).max(1);
    let hi_dim = ((avg * 0.9).floor() as i64).max(lo).min(wi / 2).min(hi / 2).max(1);
    let mut dims: Vec<(i64, i64)> = (0..k_macros)
        .map(|_| {
            (
                rng.random_range(lo..=hi_dim),
                rng.random_range(lo..=hi_dim),
            )
        })
        .collect();
    loop {
        let total: i64 = dims.iter().map(|(w, h)| w * h).sum();
        if (total as f64) <= budget {
            break;
        }
        // Deterministically shrink the largest macro until we fit.
        let idx = (0..dims.len())
            .max_by_key(|&i| (dims[i].0 * dims[i].1, std::cmp::Reverse(i)))
            .unwrap();
        let (w, h) = dims[idx];
        if w == 1 && h == 1 {
            return Err(BookshelfError::InfeasibleAreaBudget(
                "cannot shrink macros below unit size".into(),
            ));
        }
        dims[idx] = ((w / 2).max(1), (h / 2).max(1));
    }

    let macros: Vec<Macro> = dims
        .iter()
        .enumerate()
        .map(|(i, &(w, h))| Macro {
            id: format!("m{i}"),
            width: w as f64,
            height: h as f64,
        })
        .collect();

    // Terminals along the top edge.
    let t_count = k_macros / 4;
    let t_side = (lo / 2).max(1);
    let mut terminals = Vec::new();
    let mut tx = 0i64;
    for j in 0..t_count {
        if tx + t_side > wi {
            break;
        }
        terminals.push(Terminal {
            id: format!("t{j}"),
            width: t_side as f64,
            height: t_side as f64,
            x: tx as f64,
            y: (hi - t_side) as f64,
        });
        tx += 2 * t_side + 1;
    }
    let strip = if terminals.is_empty() { 0 } else { t_side };

    // Row-packed initial placement below the terminal strip, tallest first.
    let mut initial = vec![None; k_macros];
    let mut order: Vec<usize> = (0..k_macros).collect();
    let mut tries = 0;
    loop {
        order.sort_by_key(|&i| (std::cmp::Reverse(dims[i].1), i));
        let (mut cx, mut cy, mut row_h) = (0i64, 0i64, 0i64);
        let mut ok = true;
        for &i in &order {
            let (w, h) = dims[i];
            if cx + w > wi {
                cy += row_h;
                cx = 0;
                row_h = 0;
            }
            if cy + h > hi - strip {
                ok = false;
                break;
            }
            initial[i] = Some((cx as f64, cy as f64));
            cx += w;
            row_h = row_h.max(h);
        }
        if ok {
            break;
        }
        tries += 1;
        if tries > 64 {
            return Err(BookshelfError::InfeasibleAreaBudget(
                "initial row packing does not fit the canvas".into(),
            ));
        }
        let idx = (0..dims.len())
            .max_by_key(|&i| (dims[i].0 * dims[i].1, std::cmp::Reverse(i)))
            .unwrap();
        let (w, h) = dims[idx];
        dims[idx] = ((w / 2).max(1), (h / 2).max(1));
    }
    // dims may have shrunk while packing; rebuild the macro list to match.
    let macros: Vec<Macro> = macros
        .iter()
        .zip(&dims)
        .map(|(m, &(w, h))| Macro {
            id: m.id.clone(),
            width: w as f64,
            height: h as f64,
        })
        .collect();

    // Nets over distinct blocks, one integer-offset pin per block.
    let pool = k_macros + terminals.len();
    if n_nets > 0 && pool < 2 {
        return Err(BookshelfError::Invalid(
            "nets need at least two blocks to connect".into(),
        ));
    }
    let mut nets = Vec::with_capacity(n_nets);
    let mut scratch: Vec<usize> = (0..pool).collect();
    for j in 0..n_nets {
        let degree = rng.random_range(2..=5.min(pool));
        // Partial Fisher-Yates for `degree` distinct owners.
        for slot in 0..degree {
            let pick = rng.random_range(slot..pool);
            scratch.swap(slot, pick);
        }
        let mut chosen: Vec<usize> = scratch[..degree].to_vec();
        chosen.sort_unstable();
        let mut pins = Vec::with_capacity(degree);
        for &c in &chosen {
            let (owner, w, h) = if c < k_macros {
                (PinOwner::Macro(c), dims[c].0, dims[c].1)
            } else {
                let t = &terminals[c - k_macros];
                (PinOwner::Terminal(c - k_macros), t.width as i64, t.height as i64)
            };
            let cx = rng.random_range(-(w / 2)..=(w / 2)) as f64;
            let cy = rng.random_range(-(h / 2)..=(h / 2)) as f64;
            pins.push(Pin {
                owner,
                dx: cx + w as f64 / 2.0,
                dy: cy + h as f64 / 2.0,
            });
        }
        nets.push(Net {
            id: format!("n{j}"),
            pins,
        });
    }

    let netlist = Netlist {
        macros,
        terminals,
        nets,
        canvas_width,
        canvas_height,
        initial,
    };
    netlist.validate()?;
    Ok(netlist)
}
