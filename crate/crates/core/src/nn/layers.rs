//! The fixed layer set: forward, reverse-mode backward and (for the
//! piecewise-linear layers) the pure input-gradient map used by attribution.

use rand::Rng;

use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A trainable tensor with its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }

    /// Kaiming-uniform (ReLU gain) over the given fan-in.
    pub fn kaiming_uniform(shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / fan_in as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        Self::new(Tensor::new(shape.to_vec(), data).expect("shape is consistent"))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(Tensor::zeros(shape))
    }
}

fn expect_rank(x: &Tensor, rank: usize, what: &str) -> Result<()> {
    if x.ndim() != rank {
        return Err(Error::Config(format!(
            "{what} expects a rank-{rank} input, got shape {:?}",
            x.shape()
        )));
    }
    Ok(())
}

fn expect_dim(x: &Tensor, axis: usize, want: usize, what: &str) -> Result<()> {
    if x.shape()[axis] != want {
        return Err(Error::Config(format!(
            "{what} expects extent {want} on axis {axis}, got shape {:?}",
            x.shape()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- Conv2d

#[derive(Clone, Debug)]
pub struct Conv2d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// (out_ch, in_ch, kernel, kernel)
    pub weight: Param,
    pub bias: Param,
}

impl Conv2d {
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = in_ch * kernel * kernel;
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
            weight: Param::kaiming_uniform(&[out_ch, in_ch, kernel, kernel], fan_in, rng),
            bias: Param::zeros(&[out_ch]),
        }
    }

    fn out_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (hp, wp) = (h + 2 * self.padding, w + 2 * self.padding);
        if hp < self.kernel || wp < self.kernel {
            return Err(Error::Config(format!(
                "conv2d kernel {} larger than padded input {hp}x{wp}",
                self.kernel
            )));
        }
        Ok((
            (hp - self.kernel) / self.stride + 1,
            (wp - self.kernel) / self.stride + 1,
        ))
    }

    fn check(&self, x: &Tensor) -> Result<(usize, usize, usize, usize, usize)> {
        expect_rank(x, 4, "Conv2d")?;
        expect_dim(x, 1, self.in_ch, "Conv2d")?;
        let s = x.shape();
        let (ho, wo) = self.out_hw(s[2], s[3])?;
        Ok((s[0], s[2], s[3], ho, wo))
    }

    fn im2col(&self, xs: &[f64], h: usize, w: usize, ho: usize, wo: usize, col: &mut [f64]) {
        let k = self.kernel;
        let p = self.padding as isize;
        for c in 0..self.in_ch {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst = &mut col[row * ho * wo..(row + 1) * ho * wo];
                    for oy in 0..ho {
                        let iy = (oy * self.stride + ki) as isize - p;
                        for ox in 0..wo {
                            let ix = (ox * self.stride + kj) as isize - p;
                            dst[oy * wo + ox] =
                                if iy >= 0 && (iy as usize) < h && ix >= 0 && (ix as usize) < w {
                                    xs[(c * h + iy as usize) * w + ix as usize]
                                } else {
                                    0.0
                                };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, col: &[f64], h: usize, w: usize, ho: usize, wo: usize, dx: &mut [f64]) {
        let k = self.kernel;
        let p = self.padding as isize;
        for c in 0..self.in_ch {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src = &col[row * ho * wo..(row + 1) * ho * wo];
                    for oy in 0..ho {
                        let iy = (oy * self.stride + ki) as isize - p;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        for ox in 0..wo {
                            let ix = (ox * self.stride + kj) as isize - p;
                            if ix >= 0 && (ix as usize) < w {
                                dx[(c * h + iy as usize) * w + ix as usize] += src[oy * wo + ox];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, h, w, ho, wo) = self.check(x)?;
        let kk = self.in_ch * self.kernel * self.kernel;
        let mut col = vec![0.0; kk * ho * wo];
        let mut out = Tensor::zeros(&[b, self.out_ch, ho, wo]);
        let per_in = self.in_ch * h * w;
        let per_out = self.out_ch * ho * wo;
        for s in 0..b {
            self.im2col(&x.data()[s * per_in..(s + 1) * per_in], h, w, ho, wo, &mut col);
            let y = &mut out.data_mut()[s * per_out..(s + 1) * per_out];
            for (o, row) in y.chunks_mut(ho * wo).enumerate() {
                row.fill(self.bias.value.data()[o]);
            }
            gemm(self.out_ch, kk, ho * wo, 1.0, self.weight.value.data(), false, &col, false, 1.0, y);
        }
        Ok(out)
    }

    /// Gradient w.r.t. the input; accumulates parameter gradients when `accumulate`.
    pub fn backward(&mut self, x: &Tensor, g: &Tensor, accumulate: bool) -> Result<Tensor> {
        let (b, h, w, ho, wo) = self.check(x)?;
        let kk = self.in_ch * self.kernel * self.kernel;
        let mut col = vec![0.0; kk * ho * wo];
        let mut dcol = vec![0.0; kk * ho * wo];
        let mut dx = Tensor::zeros(x.shape());
        let per_in = self.in_ch * h * w;
        let per_out = self.out_ch * ho * wo;
        for s in 0..b {
            let gs = &g.data()[s * per_out..(s + 1) * per_out];
            if accumulate {
                self.im2col(&x.data()[s * per_in..(s + 1) * per_in], h, w, ho, wo, &mut col);
                gemm(self.out_ch, ho * wo, kk, 1.0, gs, false, &col, true, 1.0, self.weight.grad.data_mut());
                for (o, row) in gs.chunks(ho * wo).enumerate() {
                    self.bias.grad.data_mut()[o] += row.iter().sum::<f64>();
                }
            }
            gemm(kk, self.out_ch, ho * wo, 1.0, self.weight.value.data(), true, gs, false, 0.0, &mut dcol);
            self.col2im(&dcol, h, w, ho, wo, &mut dx.data_mut()[s * per_in..(s + 1) * per_in]);
        }
        Ok(dx)
    }
}

// ---------------------------------------------------------------- Conv1d

/// Dilated 1-D convolution over (batch, channels, time).
#[derive(Clone, Debug)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub stride: usize,
    pub padding: usize,
    /// (out_ch, in_ch, kernel)
    pub weight: Param,
    pub bias: Param,
}

impl Conv1d {
    /// Stride-1 convolution with symmetric "same" padding `dilation * (kernel - 1) / 2`.
    pub fn same(in_ch: usize, out_ch: usize, kernel: usize, dilation: usize, rng: &mut impl Rng) -> Self {
        assert!(kernel % 2 == 1, "same padding needs an odd kernel");
        Self {
            in_ch,
            out_ch,
            kernel,
            dilation,
            stride: 1,
            padding: dilation * (kernel - 1) / 2,
            weight: Param::kaiming_uniform(&[out_ch, in_ch, kernel], in_ch * kernel, rng),
            bias: Param::zeros(&[out_ch]),
        }
    }

    pub fn out_len(&self, t: usize) -> Result<usize> {
        let span = self.dilation * (self.kernel - 1) + 1;
        let tp = t + 2 * self.padding;
        if tp < span {
            return Err(Error::Config(format!("conv1d span {span} exceeds padded length {tp}")));
        }
        Ok((tp - span) / self.stride + 1)
    }

    fn check(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        expect_rank(x, 3, "Conv1d")?;
        expect_dim(x, 1, self.in_ch, "Conv1d")?;
        let t = x.shape()[2];
        Ok((x.shape()[0], t, self.out_len(t)?))
    }

    /// Output positions `o` whose tap `i` lands inside `[0, t)`, and that tap's offset.
    fn valid_span(&self, i: usize, t: usize, to: usize) -> (usize, usize, isize) {
        let off = (i * self.dilation) as isize - self.padding as isize;
        let s = self.stride as isize;
        // o*s + off >= 0  and  o*s + off < t
        let lo = if off >= 0 { 0 } else { ((-off) + s - 1) / s };
        let hi = if (t as isize) <= off { 0 } else { ((t as isize - off) + s - 1) / s };
        let (lo, hi) = (lo as usize, (hi as usize).min(to));
        (lo, hi.max(lo), off)
    }

    fn im2col(&self, xs: &[f64], t: usize, to: usize, col: &mut [f64]) {
        for c in 0..self.in_ch {
            let src = &xs[c * t..(c + 1) * t];
            for i in 0..self.kernel {
                let dst = &mut col[(c * self.kernel + i) * to..(c * self.kernel + i + 1) * to];
                let (lo, hi, off) = self.valid_span(i, t, to);
                dst[..lo].fill(0.0);
                dst[hi..].fill(0.0);
                if self.stride == 1 {
                    let a = (lo as isize + off) as usize;
                    dst[lo..hi].copy_from_slice(&src[a..a + hi - lo]);
                } else {
                    for o in lo..hi {
                        dst[o] = src[(o as isize * self.stride as isize + off) as usize];
                    }
                }
            }
        }
    }

    fn col2im(&self, col: &[f64], t: usize, to: usize, dx: &mut [f64]) {
        for c in 0..self.in_ch {
            let dst = &mut dx[c * t..(c + 1) * t];
            for i in 0..self.kernel {
                let src = &col[(c * self.kernel + i) * to..(c * self.kernel + i + 1) * to];
                let (lo, hi, off) = self.valid_span(i, t, to);
                for o in lo..hi {
                    dst[(o as isize * self.stride as isize + off) as usize] += src[o];
                }
            }
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t, to) = self.check(x)?;
        let kk = self.in_ch * self.kernel;
        let mut col = vec![0.0; kk * to];
        let mut out = Tensor::zeros(&[b, self.out_ch, to]);
        for s in 0..b {
            self.im2col(&x.data()[s * self.in_ch * t..(s + 1) * self.in_ch * t], t, to, &mut col);
            let y = &mut out.data_mut()[s * self.out_ch * to..(s + 1) * self.out_ch * to];
            for (o, row) in y.chunks_mut(to).enumerate() {
                row.fill(self.bias.value.data()[o]);
            }
            gemm(self.out_ch, kk, to, 1.0, self.weight.value.data(), false, &col, false, 1.0, y);
        }
        Ok(out)
    }

    pub fn backward(&mut self, x: &Tensor, g: &Tensor, accumulate: bool) -> Result<Tensor> {
        let (b, t, to) = self.check(x)?;
        let kk = self.in_ch * self.kernel;
        let mut col = vec![0.0; kk * to];
        let mut dcol = vec![0.0; kk * to];
        let mut dx = Tensor::zeros(x.shape());
        for s in 0..b {
            let gs = &g.data()[s * self.out_ch * to..(s + 1) * self.out_ch * to];
            if accumulate {
                self.im2col(&x.data()[s * self.in_ch * t..(s + 1) * self.in_ch * t], t, to, &mut col);
                gemm(self.out_ch, to, kk, 1.0, gs, false, &col, true, 1.0, self.weight.grad.data_mut());
                for (o, row) in gs.chunks(to).enumerate() {
                    self.bias.grad.data_mut()[o] += row.iter().sum::<f64>();
                }
            }
            gemm(kk, self.out_ch, to, 1.0, self.weight.value.data(), true, gs, false, 0.0, &mut dcol);
            self.col2im(&dcol, t, to, &mut dx.data_mut()[s * self.in_ch * t..(s + 1) * self.in_ch * t]);
        }
        Ok(dx)
    }
}

// ---------------------------------------------------------------- Linear

#[derive(Clone, Debug)]
pub struct Linear {
    pub in_features: usize,
    pub out_features: usize,
    /// (out, in)
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn new(in_features: usize, out_features: usize, rng: &mut impl Rng) -> Self {
        Self {
            in_features,
            out_features,
            weight: Param::kaiming_uniform(&[out_features, in_features], in_features, rng),
            bias: Param::zeros(&[out_features]),
        }
    }

    fn check(&self, x: &Tensor) -> Result<usize> {
        expect_rank(x, 2, "Linear")?;
        expect_dim(x, 1, self.in_features, "Linear")?;
        Ok(x.shape()[0])
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let b = self.check(x)?;
        let mut out = Tensor::zeros(&[b, self.out_features]);
        for row in out.data_mut().chunks_mut(self.out_features) {
            row.copy_from_slice(self.bias.value.data());
        }
        gemm(
            b,
            self.in_features,
            self.out_features,
            1.0,
            x.data(),
            false,
            self.weight.value.data(),
            true,
            1.0,
            out.data_mut(),
        );
        Ok(out)
    }

    pub fn backward(&mut self, x: &Tensor, g: &Tensor, accumulate: bool) -> Result<Tensor> {
        let b = self.check(x)?;
        if accumulate {
            gemm(
                self.out_features,
                b,
                self.in_features,
                1.0,
                g.data(),
                true,
                x.data(),
                false,
                1.0,
                self.weight.grad.data_mut(),
            );
            for row in g.data().chunks(self.out_features) {
                for (acc, v) in self.bias.grad.data_mut().iter_mut().zip(row) {
                    *acc += v;
                }
            }
        }
        let mut dx = Tensor::zeros(x.shape());
        gemm(
            b,
            self.out_features,
            self.in_features,
            1.0,
            g.data(),
            false,
            self.weight.value.data(),
            false,
            0.0,
            dx.data_mut(),
        );
        Ok(dx)
    }
}

// ---------------------------------------------------------------- BatchNorm

/// Batch normalisation over axis 1 of a (batch, features, ...) tensor.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub features: usize,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

struct BnStats {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    /// elements per feature (batch * spatial)
    count: usize,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self {
            features,
            gamma: Param::new(Tensor::filled(&[features], 1.0)),
            beta: Param::zeros(&[features]),
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    fn geometry(&self, x: &Tensor) -> Result<(usize, usize)> {
        if x.ndim() < 2 {
            return Err(Error::Config(format!("BatchNorm needs rank >= 2, got {:?}", x.shape())));
        }
        expect_dim(x, 1, self.features, "BatchNorm")?;
        let inner: usize = x.shape()[2..].iter().product();
        Ok((x.shape()[0], inner))
    }

    fn stats(&self, x: &Tensor, mode: Mode) -> Result<BnStats> {
        let (b, inner) = self.geometry(x)?;
        let count = b * inner;
        match mode {
            Mode::Eval => Ok(BnStats {
                mean: self.running_mean.clone(),
                inv_std: self.running_var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect(),
                count,
            }),
            Mode::Train => {
                if b < 2 {
                    return Err(Error::Input("BatchNorm in train mode needs batch size >= 2".into()));
                }
                let (mean, var) = self.batch_moments(x, b, inner);
                Ok(BnStats {
                    mean,
                    inv_std: var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect(),
                    count,
                })
            }
        }
    }

    fn batch_moments(&self, x: &Tensor, b: usize, inner: usize) -> (Vec<f64>, Vec<f64>) {
        let n = (b * inner) as f64;
        let mut mean = vec![0.0; self.features];
        let mut var = vec![0.0; self.features];
        let d = x.data();
        for s in 0..b {
            for c in 0..self.features {
                let off = (s * self.features + c) * inner;
                mean[c] += d[off..off + inner].iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        for s in 0..b {
            for c in 0..self.features {
                let off = (s * self.features + c) * inner;
                var[c] += d[off..off + inner].iter().map(|v| (v - mean[c]).powi(2)).sum::<f64>();
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        (mean, var)
    }

    /// Momentum update of the running statistics from a training batch.
    pub fn update_running(&mut self, x: &Tensor) -> Result<()> {
        let (b, inner) = self.geometry(x)?;
        let (mean, var) = self.batch_moments(x, b, inner);
        let n = (b * inner) as f64;
        let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        for c in 0..self.features {
            self.running_mean[c] = (1.0 - self.momentum) * self.running_mean[c] + self.momentum * mean[c];
            self.running_var[c] =
                (1.0 - self.momentum) * self.running_var[c] + self.momentum * var[c] * unbias;
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let st = self.stats(x, mode)?;
        let inner = st.count / x.shape()[0];
        let mut out = x.clone();
        let (gamma, beta) = (self.gamma.value.data(), self.beta.value.data());
        for (idx, chunk) in out.data_mut().chunks_mut(inner).enumerate() {
            let c = idx % self.features;
            let (m, is, g, bt) = (st.mean[c], st.inv_std[c], gamma[c], beta[c]);
            chunk.iter_mut().for_each(|v| *v = g * (*v - m) * is + bt);
        }
        Ok(out)
    }

    pub fn backward(&mut self, x: &Tensor, g: &Tensor, mode: Mode, accumulate: bool) -> Result<Tensor> {
        let st = self.stats(x, mode)?;
        let inner = st.count / x.shape()[0];
        let f = self.features;
        let mut sum_g = vec![0.0; f];
        let mut sum_gx = vec![0.0; f];
        for (idx, (xc, gc)) in x.data().chunks(inner).zip(g.data().chunks(inner)).enumerate() {
            let c = idx % f;
            for (&xv, &gv) in xc.iter().zip(gc) {
                sum_g[c] += gv;
                sum_gx[c] += gv * (xv - st.mean[c]) * st.inv_std[c];
            }
        }
        if accumulate {
            for c in 0..f {
                self.gamma.grad.data_mut()[c] += sum_gx[c];
                self.beta.grad.data_mut()[c] += sum_g[c];
            }
        }
        let gamma = self.gamma.value.data();
        let n = st.count as f64;
        let mut dx = Tensor::zeros(x.shape());
        for (idx, ((dc, xc), gc)) in dx
            .data_mut()
            .chunks_mut(inner)
            .zip(x.data().chunks(inner))
            .zip(g.data().chunks(inner))
            .enumerate()
        {
            let c = idx % f;
            let scale = gamma[c] * st.inv_std[c];
            match mode {
                Mode::Eval => {
                    for (d, &gv) in dc.iter_mut().zip(gc) {
                        *d = scale * gv;
                    }
                }
                Mode::Train => {
                    for ((d, &xv), &gv) in dc.iter_mut().zip(xc).zip(gc) {
                        let xhat = (xv - st.mean[c]) * st.inv_std[c];
                        *d = scale * (gv - sum_g[c] / n - xhat * sum_gx[c] / n);
                    }
                }
            }
        }
        Ok(dx)
    }
}

// ---------------------------------------------------------------- pooling & reshaping

/// Non-overlapping square average pooling (stride = kernel).
#[derive(Clone, Debug)]
pub struct AvgPool2d {
    pub kernel: usize,
}

impl AvgPool2d {
    fn geometry(&self, x: &Tensor) -> Result<(usize, usize, usize, usize, usize)> {
        expect_rank(x, 4, "AvgPool2d")?;
        let s = x.shape();
        let (ho, wo) = (s[2] / self.kernel, s[3] / self.kernel);
        if ho == 0 || wo == 0 {
            return Err(Error::Config(format!("AvgPool2d kernel {} too large for {s:?}", self.kernel)));
        }
        Ok((s[0] * s[1], s[2], s[3], ho, wo))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (planes, h, w, ho, wo) = self.geometry(x)?;
        let k = self.kernel;
        let norm = 1.0 / (k * k) as f64;
        let mut out = Tensor::zeros(&[x.shape()[0], x.shape()[1], ho, wo]);
        for p in 0..planes {
            let src = &x.data()[p * h * w..(p + 1) * h * w];
            let dst = &mut out.data_mut()[p * ho * wo..(p + 1) * ho * wo];
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut acc = 0.0;
                    for i in 0..k {
                        for j in 0..k {
                            acc += src[(oy * k + i) * w + ox * k + j];
                        }
                    }
                    dst[oy * wo + ox] = acc * norm;
                }
            }
        }
        Ok(out)
    }

    pub fn backward(&self, x: &Tensor, g: &Tensor) -> Result<Tensor> {
        let (planes, h, w, ho, wo) = self.geometry(x)?;
        let k = self.kernel;
        let norm = 1.0 / (k * k) as f64;
        let mut dx = Tensor::zeros(x.shape());
        for p in 0..planes {
            let src = &g.data()[p * ho * wo..(p + 1) * ho * wo];
            let dst = &mut dx.data_mut()[p * h * w..(p + 1) * h * w];
            for oy in 0..ho {
                for ox in 0..wo {
                    let v = src[oy * wo + ox] * norm;
                    for i in 0..k {
                        for j in 0..k {
                            dst[(oy * k + i) * w + ox * k + j] = v;
                        }
                    }
                }
            }
        }
        Ok(dx)
    }
}

/// Adaptive average pooling of (batch, channels, time) down to `output` bins.
#[derive(Clone, Debug)]
pub struct AdaptiveAvgPool1d {
    pub output: usize,
}

impl AdaptiveAvgPool1d {
    fn bin(&self, i: usize, t: usize) -> (usize, usize) {
        let start = i * t / self.output;
        let end = ((i + 1) * t).div_ceil(self.output);
        (start, end)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        expect_rank(x, 3, "AdaptiveAvgPool1d")?;
        let t = x.shape()[2];
        if t < self.output {
            return Err(Error::Config(format!("cannot pool length {t} into {} bins", self.output)));
        }
        let mut out = Tensor::zeros(&[x.shape()[0], x.shape()[1], self.output]);
        for (src, dst) in x.data().chunks(t).zip(out.data_mut().chunks_mut(self.output)) {
            for (i, d) in dst.iter_mut().enumerate() {
                let (s, e) = self.bin(i, t);
                *d = src[s..e].iter().sum::<f64>() / (e - s) as f64;
            }
        }
        Ok(out)
    }

    pub fn backward(&self, x: &Tensor, g: &Tensor) -> Result<Tensor> {
        expect_rank(x, 3, "AdaptiveAvgPool1d")?;
        let t = x.shape()[2];
        let mut dx = Tensor::zeros(x.shape());
        for (dst, src) in dx.data_mut().chunks_mut(t).zip(g.data().chunks(self.output)) {
            for (i, gv) in src.iter().enumerate() {
                let (s, e) = self.bin(i, t);
                let v = gv / (e - s) as f64;
                dst[s..e].iter_mut().for_each(|d| *d += v);
            }
        }
        Ok(dx)
    }
}

/// Swap the last two axes of a rank-3 tensor: (B, T, C) -> (B, C, T).
fn swap_last_two(x: &Tensor) -> Result<Tensor> {
    expect_rank(x, 3, "TimeToChannels")?;
    let (b, r, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut out = Tensor::zeros(&[b, c, r]);
    for s in 0..b {
        let src = &x.data()[s * r * c..(s + 1) * r * c];
        let dst = &mut out.data_mut()[s * r * c..(s + 1) * r * c];
        for i in 0..r {
            for j in 0..c {
                dst[j * r + i] = src[i * c + j];
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- Layer

#[derive(Clone, Debug)]
pub enum Layer {
    Conv2d(Conv2d),
    Conv1d(Conv1d),
    Linear(Linear),
    BatchNorm(BatchNorm),
    Relu,
    AvgPool2d(AvgPool2d),
    AdaptiveAvgPool1d(AdaptiveAvgPool1d),
    Flatten,
    /// (B, T, C) time-major input to the channels-first layout the convolutions use.
    TimeToChannels,
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "Conv2d",
            Layer::Conv1d(_) => "Conv1d",
            Layer::Linear(_) => "Linear",
            Layer::BatchNorm(_) => "BatchNorm",
            Layer::Relu => "ReLU",
            Layer::AvgPool2d(_) => "AvgPool2d",
            Layer::AdaptiveAvgPool1d(_) => "AdaptiveAvgPool1d",
            Layer::Flatten => "Flatten",
            Layer::TimeToChannels => "TimeToChannels",
        }
    }

    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.forward(x),
            Layer::Conv1d(l) => l.forward(x),
            Layer::Linear(l) => l.forward(x),
            Layer::BatchNorm(l) => l.forward(x, mode),
            Layer::Relu => Ok(x.map(|v| v.max(0.0))),
            Layer::AvgPool2d(l) => l.forward(x),
            Layer::AdaptiveAvgPool1d(l) => l.forward(x),
            Layer::Flatten => {
                let b = x.shape()[0];
                x.clone().reshape(vec![b, x.len() / b])
            }
            Layer::TimeToChannels => swap_last_two(x),
        }
    }

    /// Reverse-mode step: returns dL/dx and, when `accumulate`, adds parameter gradients.
    pub fn backward(&mut self, x: &Tensor, g: &Tensor, mode: Mode, accumulate: bool) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.backward(x, g, accumulate),
            Layer::Conv1d(l) => l.backward(x, g, accumulate),
            Layer::Linear(l) => l.backward(x, g, accumulate),
            Layer::BatchNorm(l) => l.backward(x, g, mode, accumulate),
            Layer::Relu => x.zip_map(g, |xv, gv| if xv > 0.0 { gv } else { 0.0 }),
            Layer::AvgPool2d(l) => l.backward(x, g),
            Layer::AdaptiveAvgPool1d(l) => l.backward(x, g),
            Layer::Flatten => g.clone().reshape(x.shape().to_vec()),
            Layer::TimeToChannels => {
                let s = x.shape();
                swap_last_two(&g.clone().reshape(vec![s[0], s[2], s[1]])?)
            }
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Layer::Conv2d(l) => vec![&l.weight, &l.bias],
            Layer::Conv1d(l) => vec![&l.weight, &l.bias],
            Layer::Linear(l) => vec![&l.weight, &l.bias],
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Layer::Conv2d(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Conv1d(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Linear(l) => vec![&mut l.weight, &mut l.bias],
            Layer::BatchNorm(l) => vec![&mut l.gamma, &mut l.beta],
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rng() -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(3)
    }

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor::new(vec![1, 3], vec![-1.0, 0.0, 2.0]).unwrap();
        let y = Layer::Relu.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn identity_conv2d_is_identity() {
        let mut conv = Conv2d::new(1, 1, 1, 1, 0, &mut rng());
        conv.weight.value.data_mut()[0] = 1.0;
        let x = Tensor::new(vec![1, 1, 3, 3], (0..9).map(|v| v as f64 - 4.0).collect()).unwrap();
        assert_eq!(conv.forward(&x).unwrap(), x);
    }

    #[test]
    fn avgpool_means() {
        let x = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let y = AvgPool2d { kernel: 2 }.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
    }

    #[test]
    fn same_padding_preserves_length() {
        for (k, d) in [(7, 1), (7, 2), (3, 4), (5, 3)] {
            let conv = Conv1d::same(2, 3, k, d, &mut rng());
            let x = Tensor::zeros(&[2, 2, 50]);
            assert_eq!(conv.forward(&x).unwrap().shape(), &[2, 3, 50], "k={k} d={d}");
        }
    }

    #[test]
    fn linear_weight_gradient_is_input() {
        // y = W x, loss = y  =>  dL/dW = x^T
        let mut lin = Linear::new(3, 1, &mut rng());
        let x = Tensor::new(vec![1, 3], vec![0.5, -1.0, 2.0]).unwrap();
        let g = Tensor::new(vec![1, 1], vec![1.0]).unwrap();
        lin.backward(&x, &g, true).unwrap();
        assert_eq!(lin.weight.grad.data(), x.data());
        assert_eq!(lin.bias.grad.data(), &[1.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut conv = Conv2d::new(2, 3, 3, 1, 1, &mut rng());
        let x = Tensor::filled(&[2, 2, 4, 4], 0.3);
        let g = Tensor::zeros(&[2, 3, 4, 4]);
        let dx = conv.backward(&x, &g, true).unwrap();
        assert!(dx.data().iter().all(|&v| v == 0.0));
        assert!(conv.weight.grad.data().iter().all(|&v| v == 0.0));
        assert!(conv.bias.grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batchnorm_eval_identity_with_default_stats() {
        let bn = BatchNorm::new(2);
        let x = Tensor::new(vec![2, 2], vec![0.5, -1.0, 3.0, 4.0]).unwrap();
        let y = bn.forward(&x, Mode::Eval).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            // eps = 1e-5 shifts the scale by ~5e-6 relative
            assert!((a - b).abs() <= 1e-5 * b.abs());
        }
        let mut exact = BatchNorm::new(2);
        exact.eps = 0.0;
        assert_eq!(exact.forward(&x, Mode::Eval).unwrap(), x);
    }

    #[test]
    fn batchnorm_train_normalises() {
        let mut bn = BatchNorm::new(3);
        bn.eps = 0.0;
        let mut r = rng();
        let data = (0..4 * 3 * 5).map(|_| r.gen_range(-2.0..5.0)).collect();
        let x = Tensor::new(vec![4, 3, 5], data).unwrap();
        let y = bn.forward(&x, Mode::Train).unwrap();
        let (mean, var) = bn.batch_moments(&y, 4, 5);
        for c in 0..3 {
            assert!(mean[c].abs() <= 1e-10);
            assert!((var[c] - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn batchnorm_affine_arithmetic() {
        let mut bn = BatchNorm::new(1);
        bn.eps = 0.0;
        bn.gamma.value.data_mut()[0] = 2.0;
        bn.beta.value.data_mut()[0] = 3.0;
        let x = Tensor::new(vec![1, 1], vec![1.0]).unwrap();
        assert_eq!(bn.forward(&x, Mode::Eval).unwrap().data(), &[5.0]);
    }

    #[test]
    fn batchnorm_train_rejects_single_sample() {
        let bn = BatchNorm::new(2);
        let x = Tensor::zeros(&[1, 2]);
        assert!(matches!(bn.forward(&x, Mode::Train), Err(Error::Input(_))));
    }

    #[test]
    fn running_stats_momentum() {
        let mut bn = BatchNorm::new(1);
        let x = Tensor::new(vec![2, 1], vec![1.0, 3.0]).unwrap();
        bn.update_running(&x).unwrap();
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-15);
        // unbiased batch variance = 2
        assert!((bn.running_var[0] - (0.9 + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn adaptive_pool_uneven_bins() {
        let x = Tensor::new(vec![1, 1, 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let y = AdaptiveAvgPool1d { output: 2 }.forward(&x).unwrap();
        // bins [0,3) and [2,5)
        assert_eq!(y.data(), &[2.0, 4.0]);
    }

    #[test]
    fn time_to_channels_transposes() {
        let x = Tensor::new(vec![1, 2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = Layer::TimeToChannels.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.shape(), &[1, 3, 2]);
        assert_eq!(y.data(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let lin = Linear::new(4, 2, &mut rng());
        let x = Tensor::zeros(&[1, 3]);
        assert!(matches!(lin.forward(&x), Err(Error::Config(_))));
    }
}
