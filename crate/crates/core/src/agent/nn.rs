//! Minimal dense/convolution layers in plain `f64`.
//!
//! Each layer owns its weights, its gradient accumulators, and the
//! forward cache needed to run the matching backward pass. Backward
//! must follow the forward it belongs to; gradients accumulate until
//! [`zeroed`](Conv1x1::zero_grads) so one optimizer step can sum over a
//! minibatch. Everything is sequential and allocation-honest: results
//! are reproducible bit for bit across runs on the same machine.
//!
//! Weight layout conventions (row-major, flat `Vec<f64>`):
//!
//! * feature maps: `[channels, height, width]`, index `(c * h + y) * w + x`
//! * conv kernels: `[out, in, 3, 3]`
//! * transposed-conv kernels: `[in, out, 3, 3]`
//! * dense weights: `[out, in]`

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Uniform He-style init: `U(-sqrt(6 / fan_in), +sqrt(6 / fan_in))`.
fn he_uniform(rng: &mut ChaCha8Rng, len: usize, fan_in: usize) -> Vec<f64> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..len).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound).collect()
}

/// Whether a layer squashes its output through `max(0, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

fn apply_activation(act: Activation, y: &mut [f64]) {
    if act == Activation::Relu {
        for v in y {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// Fold the activation derivative into `dy`, given the *activated*
/// outputs (ReLU's derivative is 0 exactly where the output is 0).
fn activation_backward(act: Activation, y: &[f64], dy: &mut [f64]) {
    if act == Activation::Relu {
        for (d, &v) in dy.iter_mut().zip(y) {
            if v <= 0.0 {
                *d = 0.0;
            }
        }
    }
}

/// Pointwise (1x1) convolution: a per-cell linear map across channels.
pub struct Conv1x1 {
    pub in_ch: usize,
    pub out_ch: usize,
    pub act: Activation,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub gw: Vec<f64>,
    pub gb: Vec<f64>,
    cache_x: Vec<f64>,
    cache_y: Vec<f64>,
}

impl Conv1x1 {
    pub fn new(rng: &mut ChaCha8Rng, in_ch: usize, out_ch: usize, act: Activation) -> Self {
        Self {
            in_ch,
            out_ch,
            act,
            w: he_uniform(rng, out_ch * in_ch, in_ch),
            b: vec![0.0; out_ch],
            gw: vec![0.0; out_ch * in_ch],
            gb: vec![0.0; out_ch],
            cache_x: Vec::new(),
            cache_y: Vec::new(),
        }
    }

    /// `x` is `[in_ch, hw]`; returns `[out_ch, hw]`.
    pub fn forward(&mut self, x: &[f64], hw: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_ch * hw);
        let mut y = vec![0.0; self.out_ch * hw];
        for o in 0..self.out_ch {
            let row = &mut y[o * hw..(o + 1) * hw];
            row.fill(self.b[o]);
            for c in 0..self.in_ch {
                let wv = self.w[o * self.in_ch + c];
                let xc = &x[c * hw..(c + 1) * hw];
                for (r, &xv) in row.iter_mut().zip(xc) {
                    *r += wv * xv;
                }
            }
        }
        apply_activation(self.act, &mut y);
        self.cache_x = x.to_vec();
        self.cache_y = y.clone();
        y
    }

    pub fn backward(&mut self, dy: &[f64], hw: usize) -> Vec<f64> {
        let mut dy = dy.to_vec();
        activation_backward(self.act, &self.cache_y, &mut dy);
        let x = &self.cache_x;
        let mut dx = vec![0.0; self.in_ch * hw];
        for o in 0..self.out_ch {
            let dyo = &dy[o * hw..(o + 1) * hw];
            self.gb[o] += dyo.iter().sum::<f64>();
            for c in 0..self.in_ch {
                let xc = &x[c * hw..(c + 1) * hw];
                let mut acc = 0.0;
                let wv = self.w[o * self.in_ch + c];
                let dxc = &mut dx[c * hw..(c + 1) * hw];
                for ((d, &xv), &g) in dxc.iter_mut().zip(xc).zip(dyo) {
                    acc += g * xv;
                    *d += wv * g;
                }
                self.gw[o * self.in_ch + c] += acc;
            }
        }
        dx
    }
}

/// 3x3 convolution, stride 2, zero padding 1: halves even extents.
pub struct Conv3x3s2 {
    pub in_ch: usize,
    pub out_ch: usize,
    pub act: Activation,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub gw: Vec<f64>,
    pub gb: Vec<f64>,
    cache_x: Vec<f64>,
    cache_y: Vec<f64>,
    cache_hw: (usize, usize),
}

impl Conv3x3s2 {
    pub fn new(rng: &mut ChaCha8Rng, in_ch: usize, out_ch: usize, act: Activation) -> Self {
        Self {
            in_ch,
            out_ch,
            act,
            w: he_uniform(rng, out_ch * in_ch * 9, in_ch * 9),
            b: vec![0.0; out_ch],
            gw: vec![0.0; out_ch * in_ch * 9],
            gb: vec![0.0; out_ch],
            cache_x: Vec::new(),
            cache_y: Vec::new(),
            cache_hw: (0, 0),
        }
    }

    pub fn out_hw(h: usize, w: usize) -> (usize, usize) {
        ((h - 1) / 2 + 1, (w - 1) / 2 + 1)
    }

    /// `x` is `[in_ch, h, w]`; returns `[out_ch, h', w']`.
    pub fn forward(&mut self, x: &[f64], h: usize, w: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_ch * h * w);
        let (oh, ow) = Self::out_hw(h, w);
        let mut y = vec![0.0; self.out_ch * oh * ow];
        for o in 0..self.out_ch {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = self.b[o];
                    for c in 0..self.in_ch {
                        for ky in 0..3 {
                            let iy = (oy * 2 + ky) as isize - 1;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..3 {
                                let ix = (ox * 2 + kx) as isize - 1;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                acc += self.w[((o * self.in_ch + c) * 3 + ky) * 3 + kx]
                                    * x[(c * h + iy as usize) * w + ix as usize];
                            }
                        }
                    }
                    y[(o * oh + oy) * ow + ox] = acc;
                }
            }
        }
        apply_activation(self.act, &mut y);
        self.cache_x = x.to_vec();
        self.cache_y = y.clone();
        self.cache_hw = (h, w);
        y
    }

    pub fn backward(&mut self, dy: &[f64]) -> Vec<f64> {
        let (h, w) = self.cache_hw;
        let (oh, ow) = Self::out_hw(h, w);
        let mut dy = dy.to_vec();
        activation_backward(self.act, &self.cache_y, &mut dy);
        let x = &self.cache_x;
        let mut dx = vec![0.0; self.in_ch * h * w];
        for o in 0..self.out_ch {
            for oy in 0..oh {
                for ox in 0..ow {
                    let g = dy[(o * oh + oy) * ow + ox];
                    if g == 0.0 {
                        continue;
                    }
                    self.gb[o] += g;
                    for c in 0..self.in_ch {
                        for ky in 0..3 {
                            let iy = (oy * 2 + ky) as isize - 1;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..3 {
                                let ix = (ox * 2 + kx) as isize - 1;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let xi = (c * h + iy as usize) * w + ix as usize;
                                let wi = ((o * self.in_ch + c) * 3 + ky) * 3 + kx;
                                self.gw[wi] += g * x[xi];
                                dx[xi] += g * self.w[wi];
                            }
                        }
                    }
                }
            }
        }
        dx
    }
}

/// 3x3 transposed convolution, stride 2, padding 1, output padding 1:
/// exactly doubles both spatial extents.
pub struct Deconv3x3s2 {
    pub in_ch: usize,
    pub out_ch: usize,
    pub act: Activation,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub gw: Vec<f64>,
    pub gb: Vec<f64>,
    cache_x: Vec<f64>,
    cache_y: Vec<f64>,
    cache_hw: (usize, usize),
}

impl Deconv3x3s2 {
    pub fn new(rng: &mut ChaCha8Rng, in_ch: usize, out_ch: usize, act: Activation) -> Self {
        Self {
            in_ch,
            out_ch,
            act,
            w: he_uniform(rng, in_ch * out_ch * 9, in_ch * 9),
            b: vec![0.0; out_ch],
            gw: vec![0.0; in_ch * out_ch * 9],
            gb: vec![0.0; out_ch],
            cache_x: Vec::new(),
            cache_y: Vec::new(),
            cache_hw: (0, 0),
        }
    }

    /// `x` is `[in_ch, h, w]`; returns `[out_ch, 2h, 2w]`. Each input
    /// cell scatters through the kernel at `oy = 2*iy + ky - 1`.
    pub fn forward(&mut self, x: &[f64], h: usize, w: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_ch * h * w);
        let (oh, ow) = (2 * h, 2 * w);
        let mut y = vec![0.0; self.out_ch * oh * ow];
        for o in 0..self.out_ch {
            y[o * oh * ow..(o + 1) * oh * ow].fill(self.b[o]);
        }
        for c in 0..self.in_ch {
            for iy in 0..h {
                for ix in 0..w {
                    let xv = x[(c * h + iy) * w + ix];
                    if xv == 0.0 {
                        continue;
                    }
                    for o in 0..self.out_ch {
                        for ky in 0..3 {
                            let oy = (2 * iy + ky) as isize - 1;
                            if oy < 0 || oy >= oh as isize {
                                continue;
                            }
                            for kx in 0..3 {
                                let ox = (2 * ix + kx) as isize - 1;
                                if ox < 0 || ox >= ow as isize {
                                    continue;
                                }
                                y[(o * oh + oy as usize) * ow + ox as usize] +=
                                    self.w[((c * self.out_ch + o) * 3 + ky) * 3 + kx] * xv;
                            }
                        }
                    }
                }
            }
        }
        apply_activation(self.act, &mut y);
        self.cache_x = x.to_vec();
        self.cache_y = y.clone();
        self.cache_hw = (h, w);
        y
    }

    pub fn backward(&mut self, dy: &[f64]) -> Vec<f64> {
        let (h, w) = self.cache_hw;
        let (oh, ow) = (2 * h, 2 * w);
        let mut dy = dy.to_vec();
        activation_backward(self.act, &self.cache_y, &mut dy);
        let x = &self.cache_x;
        for o in 0..self.out_ch {
            self.gb[o] += dy[o * oh * ow..(o + 1) * oh * ow].iter().sum::<f64>();
        }
        let mut dx = vec![0.0; self.in_ch * h * w];
        for c in 0..self.in_ch {
            for iy in 0..h {
                for ix in 0..w {
                    let xi = (c * h + iy) * w + ix;
                    let xv = x[xi];
                    let mut acc = 0.0;
                    for o in 0..self.out_ch {
                        for ky in 0..3 {
                            let oy = (2 * iy + ky) as isize - 1;
                            if oy < 0 || oy >= oh as isize {
                                continue;
                            }
                            for kx in 0..3 {
                                let ox = (2 * ix + kx) as isize - 1;
                                if ox < 0 || ox >= ow as isize {
                                    continue;
                                }
                                let g = dy[(o * oh + oy as usize) * ow + ox as usize];
                                let wi = ((c * self.out_ch + o) * 3 + ky) * 3 + kx;
                                self.gw[wi] += g * xv;
                                acc += g * self.w[wi];
                            }
                        }
                    }
                    dx[xi] += acc;
                }
            }
        }
        dx
    }
}

/// Fully connected layer on flat vectors.
pub struct Dense {
    pub in_len: usize,
    pub out_len: usize,
    pub act: Activation,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub gw: Vec<f64>,
    pub gb: Vec<f64>,
    cache_x: Vec<f64>,
    cache_y: Vec<f64>,
}

impl Dense {
    pub fn new(rng: &mut ChaCha8Rng, in_len: usize, out_len: usize, act: Activation) -> Self {
        Self {
            in_len,
            out_len,
            act,
            w: he_uniform(rng, out_len * in_len, in_len),
            b: vec![0.0; out_len],
            gw: vec![0.0; out_len * in_len],
            gb: vec![0.0; out_len],
            cache_x: Vec::new(),
            cache_y: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_len);
        let mut y = vec![0.0; self.out_len];
        for o in 0..self.out_len {
            let row = &self.w[o * self.in_len..(o + 1) * self.in_len];
            let mut acc = self.b[o];
            for (&wv, &xv) in row.iter().zip(x) {
                acc += wv * xv;
            }
            y[o] = acc;
        }
        apply_activation(self.act, &mut y);
        self.cache_x = x.to_vec();
        self.cache_y = y.clone();
        y
    }

    pub fn backward(&mut self, dy: &[f64]) -> Vec<f64> {
        let mut dy = dy.to_vec();
        activation_backward(self.act, &self.cache_y, &mut dy);
        let x = &self.cache_x;
        let mut dx = vec![0.0; self.in_len];
        for o in 0..self.out_len {
            let g = dy[o];
            self.gb[o] += g;
            if g == 0.0 {
                continue;
            }
            let wrow = &self.w[o * self.in_len..(o + 1) * self.in_len];
            let grow = &mut self.gw[o * self.in_len..(o + 1) * self.in_len];
            for i in 0..self.in_len {
                grow[i] += g * x[i];
                dx[i] += g * wrow[i];
            }
        }
        dx
    }
}
