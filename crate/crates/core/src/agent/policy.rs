//! Actor-critic network over the four decision planes.
//!
//! The input is the stacked `[canvas, position, wire, regular]` planes
//! (normalised, sentinel cells zeroed). Two paths meet at the head:
//!
//! * a **local** path of pointwise convolutions that scores each cell
//!   from its own features (4 -> 12 -> 12 -> 1 channels), and
//! * a **global** path that squeezes the canvas plane through three
//!   stride-2 convolutions (1 -> 4 -> 8 -> 16 channels), projects the
//!   result to a flat embedding, and expands the embedding back to one
//!   plane through stride-2 transposed convolutions.
//!
//! The two result planes are merged by one pointwise convolution into
//! per-cell logits; a small dense head on the embedding estimates the
//! state value. Action probabilities come from a masked softmax: cells
//! outside the validity plane carry probability exactly zero.
//!
//! The grid edge must be a multiple of 8 (the encoder halves it three
//! times). The expansion depth adapts to the grid: as many doublings as
//! the edge supports, up to five, so a 224-cell grid expands from a
//! 7x7 core through five stages while a 32-cell grid uses a 1x1 core.
//!
//! All parameters live in named `f64` tensors with a fixed traversal
//! order, so optimizer state, checkpoints, and finite-difference audits
//! all see one stable layout.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::Observation;
use crate::masks::Mask;

use super::nn::{Activation, Conv1x1, Conv3x3s2, Deconv3x3s2, Dense};

/// Planes stacked into the network input, in order.
pub const POLICY_CHANNELS: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("grid edge {0} is not a positive multiple of 8")]
    BadGrid(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint format: {0}")]
    BadFormat(String),
    #[error("checkpoint does not fit this network: {0}")]
    Mismatch(String),
}

pub struct PolicyOutput {
    pub logits: Vec<f64>,
    pub value: f64,
}

pub struct PolicyNet {
    n: usize,
    levels: usize,
    base: usize,
    embed: usize,
    local: Vec<Conv1x1>,
    enc: Vec<Conv3x3s2>,
    enc_fc: Dense,
    dec: Vec<Deconv3x3s2>,
    merge: Conv1x1,
    val: Vec<Dense>,
    cache_embed_grad: Vec<f64>,
}

impl PolicyNet {
    /// Largest number of doublings (at most five) the grid edge allows.
    fn levels_for(n: usize) -> usize {
        (1..=5).rev().find(|&l| n % (1usize << l) == 0).unwrap_or(0)
    }

    pub fn new(n: usize, seed: u64) -> Result<Self, PolicyError> {
        if n == 0 || n % 8 != 0 {
            return Err(PolicyError::BadGrid(n));
        }
        let levels = Self::levels_for(n);
        let base = n >> levels;
        let embed = 16 * base * base;
        let rng = &mut ChaCha8Rng::seed_from_u64(seed);

        let local = vec![
            Conv1x1::new(rng, POLICY_CHANNELS, 12, Activation::Relu),
            Conv1x1::new(rng, 12, 12, Activation::Relu),
            Conv1x1::new(rng, 12, 1, Activation::Linear),
        ];
        let enc = vec![
            Conv3x3s2::new(rng, 1, 4, Activation::Relu),
            Conv3x3s2::new(rng, 4, 8, Activation::Relu),
            Conv3x3s2::new(rng, 8, 16, Activation::Relu),
        ];
        let enc_out = 16 * (n / 8) * (n / 8);
        let enc_fc = Dense::new(rng, enc_out, embed, Activation::Linear);
        let mut dec = Vec::with_capacity(levels);
        let mut c_in = 16;
        for i in 0..levels {
            let last = i + 1 == levels;
            let c_out = if last { 1 } else { (16usize >> (i + 1)).max(1) };
            let act = if last { Activation::Linear } else { Activation::Relu };
            dec.push(Deconv3x3s2::new(rng, c_in, c_out, act));
            c_in = c_out;
        }
        let merge = Conv1x1::new(rng, 2, 1, Activation::Linear);
        let val = vec![
            Dense::new(rng, embed, 64, Activation::Relu),
            Dense::new(rng, 64, 64, Activation::Relu),
            Dense::new(rng, 64, 1, Activation::Linear),
        ];
        Ok(Self {
            n,
            levels,
            base,
            embed,
            local,
            enc,
            enc_fc,
            dec,
            merge,
            val,
            cache_embed_grad: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn levels(&self) -> usize {
        self.levels
    }
    pub fn embed_len(&self) -> usize {
        self.embed
    }

    /// Stack an observation into the network input: canvas, validity,
    /// wire, regular — sentinel cells mapped to zero.
    pub fn obs_channels(obs: &Observation) -> Vec<f64> {
        let hw = obs.position.n() * obs.position.n();
        let mut x = Vec::with_capacity(POLICY_CHANNELS * hw);
        x.extend_from_slice(obs.canvas.values());
        x.extend_from_slice(obs.position.values());
        for &v in obs.wire_norm.values() {
            x.push(if Mask::is_valid_value(v) { v } else { 0.0 });
        }
        for &v in obs.regular_norm.values() {
            x.push(if Mask::is_valid_value(v) { v } else { 0.0 });
        }
        x
    }

    /// The validity plane inside a stacked input.
    pub fn validity_plane(channels: &[f64]) -> &[f64] {
        let hw = channels.len() / POLICY_CHANNELS;
        &channels[hw..2 * hw]
    }

    /// `x` is the stacked input of length `4 * n * n`.
    pub fn forward(&mut self, x: &[f64]) -> PolicyOutput {
        let n = self.n;
        let hw = n * n;
        debug_assert_eq!(x.len(), POLICY_CHANNELS * hw);

        let h1 = self.local[0].forward(x, hw);
        let h2 = self.local[1].forward(&h1, hw);
        let local_map = self.local[2].forward(&h2, hw);

        let canvas = &x[0..hw];
        let e1 = self.enc[0].forward(canvas, n, n);
        let e2 = self.enc[1].forward(&e1, n / 2, n / 2);
        let e3 = self.enc[2].forward(&e2, n / 4, n / 4);
        let embed = self.enc_fc.forward(&e3);

        let mut d = embed.clone();
        let mut side = self.base;
        for layer in &mut self.dec {
            d = layer.forward(&d, side, side);
            side *= 2;
        }
        debug_assert_eq!(d.len(), hw);

        let mut merged_in = Vec::with_capacity(2 * hw);
        merged_in.extend_from_slice(&local_map);
        merged_in.extend_from_slice(&d);
        let logits = self.merge.forward(&merged_in, hw);

        let v1 = self.val[0].forward(&embed);
        let v2 = self.val[1].forward(&v1);
        let value = self.val[2].forward(&v2)[0];

        PolicyOutput { logits, value }
    }

    /// Accumulate gradients for the forward pass that just ran.
    pub fn backward(&mut self, dlogits: &[f64], dvalue: f64) {
        let hw = self.n * self.n;
        let dmerged = self.merge.backward(dlogits, hw);
        let dlocal_map = &dmerged[0..hw];
        let dglobal_map = &dmerged[hw..2 * hw];

        let d2 = self.local[2].backward(dlocal_map, hw);
        let d1 = self.local[1].backward(&d2, hw);
        let _ = self.local[0].backward(&d1, hw);

        let mut d = dglobal_map.to_vec();
        for layer in self.dec.iter_mut().rev() {
            d = layer.backward(&d);
        }
        let mut d_embed = d;

        let dv2 = self.val[2].backward(&[dvalue]);
        let dv1 = self.val[1].backward(&dv2);
        let d_embed_val = self.val[0].backward(&dv1);
        for (a, b) in d_embed.iter_mut().zip(&d_embed_val) {
            *a += b;
        }
        self.cache_embed_grad = d_embed.clone();

        let de3 = self.enc_fc.backward(&d_embed);
        let de2 = self.enc[2].backward(&de3);
        let de1 = self.enc[1].backward(&de2);
        let _ = self.enc[0].backward(&de1);
    }

    /// Visit every parameter (or gradient) tensor in the fixed order.
    fn visit<F: FnMut(String, &mut Vec<f64>, &mut Vec<f64>)>(&mut self, mut f: F) {
        for (i, l) in self.local.iter_mut().enumerate() {
            f(format!("local{i}.w"), &mut l.w, &mut l.gw);
            f(format!("local{i}.b"), &mut l.b, &mut l.gb);
        }
        for (i, l) in self.enc.iter_mut().enumerate() {
            f(format!("enc{i}.w"), &mut l.w, &mut l.gw);
            f(format!("enc{i}.b"), &mut l.b, &mut l.gb);
        }
        f("enc_fc.w".into(), &mut self.enc_fc.w, &mut self.enc_fc.gw);
        f("enc_fc.b".into(), &mut self.enc_fc.b, &mut self.enc_fc.gb);
        for (i, l) in self.dec.iter_mut().enumerate() {
            f(format!("dec{i}.w"), &mut l.w, &mut l.gw);
            f(format!("dec{i}.b"), &mut l.b, &mut l.gb);
        }
        f("merge.w".into(), &mut self.merge.w, &mut self.merge.gw);
        f("merge.b".into(), &mut self.merge.b, &mut self.merge.gb);
        for (i, l) in self.val.iter_mut().enumerate() {
            f(format!("val{i}.w"), &mut l.w, &mut l.gw);
            f(format!("val{i}.b"), &mut l.b, &mut l.gb);
        }
    }

    pub fn param_len(&mut self) -> usize {
        let mut len = 0;
        self.visit(|_, w, _| len += w.len());
        len
    }

    /// All parameters, flattened in the fixed traversal order.
    pub fn collect_params(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(|_, w, _| out.extend_from_slice(w));
        out
    }

    /// Overwrite all parameters from a flat vector (same order).
    pub fn set_params(&mut self, params: &[f64]) {
        let mut cursor = 0;
        self.visit(|name, w, _| {
            let next = cursor + w.len();
            assert!(next <= params.len(), "short parameter vector at {name}");
            w.copy_from_slice(&params[cursor..next]);
            cursor = next;
        });
        assert_eq!(cursor, params.len(), "parameter vector length mismatch");
    }

    /// All accumulated gradients, flattened in the fixed order.
    pub fn grads(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(|_, _, g| out.extend_from_slice(g));
        out
    }

    pub fn zero_grads(&mut self) {
        self.visit(|_, _, g| g.fill(0.0));
    }

    /// Log-probabilities under a softmax restricted to valid cells;
    /// invalid cells get `-inf`, i.e. probability exactly zero.
    pub fn masked_log_softmax(logits: &[f64], valid: &[f64]) -> Vec<f64> {
        let mut m = f64::NEG_INFINITY;
        for (i, &l) in logits.iter().enumerate() {
            if valid[i] != 0.0 && l > m {
                m = l;
            }
        }
        let mut sum = 0.0;
        for (i, &l) in logits.iter().enumerate() {
            if valid[i] != 0.0 {
                sum += (l - m).exp();
            }
        }
        let lse = m + sum.ln();
        logits
            .iter()
            .enumerate()
            .map(|(i, &l)| if valid[i] != 0.0 { l - lse } else { f64::NEG_INFINITY })
            .collect()
    }

    /// Draw a cell from the masked distribution.
    pub fn sample_masked(log_probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rand::Rng::random(rng);
        let mut acc = 0.0;
        let mut last = None;
        for (i, &lp) in log_probs.iter().enumerate() {
            if lp == f64::NEG_INFINITY {
                continue;
            }
            acc += lp.exp();
            last = Some(i);
            if u < acc {
                return i;
            }
        }
        last.expect("at least one valid cell to sample")
    }

    /// Most likely cell; ties keep the smallest index.
    pub fn argmax_masked(log_probs: &[f64]) -> usize {
        let mut best = usize::MAX;
        let mut best_lp = f64::NEG_INFINITY;
        for (i, &lp) in log_probs.iter().enumerate() {
            if lp != f64::NEG_INFINITY && lp > best_lp {
                best_lp = lp;
                best = i;
            }
        }
        assert!(best != usize::MAX, "no valid cell to choose");
        best
    }

    /// Write all parameters to a line-oriented text file. `f64` values
    /// round-trip exactly through their shortest decimal form.
    pub fn save_checkpoint(&mut self, path: &Path) -> Result<(), CheckpointError> {
        let mut out = String::new();
        out.push_str("placekit-policy v1\n");
        out.push_str(&format!("n {}\n", self.n));
        out.push_str(&format!("levels {}\n", self.levels));
        self.visit(|name, w, _| {
            out.push_str(&format!("tensor {name} {}\n", w.len()));
            let mut line = String::new();
            for (i, v) in w.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v}"));
            }
            line.push('\n');
            out.push_str(&line);
        });
        let mut file = std::fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, CheckpointError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let version = lines
            .next()
            .ok_or_else(|| CheckpointError::BadFormat("empty file".into()))?;
        if version != "placekit-policy v1" {
            return Err(CheckpointError::BadFormat(format!(
                "unknown version line `{version}`"
            )));
        }
        let mut header = |key: &str| -> Result<usize, CheckpointError> {
            let line = lines
                .next()
                .ok_or_else(|| CheckpointError::BadFormat(format!("missing `{key}` line")))?;
            let mut toks = line.split_whitespace();
            match (toks.next(), toks.next().and_then(|v| v.parse().ok())) {
                (Some(k), Some(v)) if k == key => Ok(v),
                _ => Err(CheckpointError::BadFormat(format!("bad `{key}` line: {line}"))),
            }
        };
        let n = header("n")?;
        let levels = header("levels")?;

        let mut tensors: HashMap<String, Vec<f64>> = HashMap::new();
        while let Some(line) = lines.next() {
            let mut toks = line.split_whitespace();
            match (toks.next(), toks.next(), toks.next().and_then(|v| v.parse::<usize>().ok())) {
                (Some("tensor"), Some(name), Some(len)) => {
                    let data = lines
                        .next()
                        .ok_or_else(|| CheckpointError::BadFormat(format!("tensor {name} has no data")))?;
                    let values: Result<Vec<f64>, _> =
                        data.split_whitespace().map(|t| t.parse::<f64>()).collect();
                    let values = values.map_err(|e| {
                        CheckpointError::BadFormat(format!("tensor {name}: {e}"))
                    })?;
                    if values.len() != len {
                        return Err(CheckpointError::BadFormat(format!(
                            "tensor {name}: expected {len} values, got {}",
                            values.len()
                        )));
                    }
                    tensors.insert(name.to_string(), values);
                }
                _ => {
                    return Err(CheckpointError::BadFormat(format!("unexpected line `{line}`")));
                }
            }
        }

        let mut net = Self::new(n, 0)
            .map_err(|e| CheckpointError::Mismatch(e.to_string()))?;
        if net.levels != levels {
            return Err(CheckpointError::Mismatch(format!(
                "levels {levels} in file but {} for grid edge {n}",
                net.levels
            )));
        }
        let mut missing = Vec::new();
        let mut bad_len = Vec::new();
        net.visit(|name, w, _| match tensors.remove(&name) {
            Some(values) if values.len() == w.len() => w.copy_from_slice(&values),
            Some(values) => bad_len.push(format!("{name}: {} != {}", values.len(), w.len())),
            None => missing.push(name),
        });
        if !missing.is_empty() || !bad_len.is_empty() || !tensors.is_empty() {
            let leftover: Vec<String> = tensors.into_keys().collect();
            return Err(CheckpointError::Mismatch(format!(
                "missing {missing:?}, wrong sizes {bad_len:?}, unknown {leftover:?}"
            )));
        }
        Ok(net)
    }
}
