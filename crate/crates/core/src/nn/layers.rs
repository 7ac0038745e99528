//! The fixed layer set and sequential container.
//!
//! Layouts are batch-first row-major with channels innermost: images are
//! `(B, H, W, C)` and features `(B, N)`. The channels-last layout turns a
//! whole convolution batch into a single patches-times-weights GEMM with no
//! output reordering. Forward passes are `&self` and return an explicit
//! cache; the backward pass takes the cache back and accumulates parameter
//! gradients, so applying one layer several times per step is safe and sums
//! gradients into the shared storage in call order.

use super::{Scalar, Tensor};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Band around zero inside which a relu input counts as sitting on the kink;
/// such evaluations are excluded from finite-difference checks (wide enough
/// that a +-1e-5 parameter perturbation cannot flip a unit undetected).
const RELU_KINK_EPS: f64 = 1e-4;

/// 2D convolution, `kernel x kernel`, zero padding, channels-last.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    /// `(kernel * kernel * in_c, out_c)`: patch layout `(ky, kx, c)`.
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub grad_weight: Tensor<T>,
    pub grad_bias: Tensor<T>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(in_c: usize, out_c: usize, kernel: usize, stride: usize, pad: usize) -> Conv2d<T> {
        let k = kernel * kernel * in_c;
        Conv2d {
            in_c,
            out_c,
            kernel,
            stride,
            pad,
            weight: Tensor::zeros(&[k, out_c]),
            bias: Tensor::zeros(&[out_c]),
            grad_weight: Tensor::zeros(&[k, out_c]),
            grad_bias: Tensor::zeros(&[out_c]),
        }
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.kernel) / self.stride + 1,
            (w + 2 * self.pad - self.kernel) / self.stride + 1,
        )
    }

    /// Gather every patch of a whole `(B, H, W, C)` batch into
    /// `(B*OH*OW, K)` rows; out-of-image taps are zero.
    ///
    /// Structured as one pass per `(ky, kx)` tap writing a strided column
    /// slice of every output row, which keeps the inner loop branch-free
    /// over the interior `ox` range.
    fn im2col(&self, x: &[T], b: usize, h: usize, w: usize, oh: usize, ow: usize, col: &mut [T]) {
        let k = self.kernel;
        let c = self.in_c;
        let s = self.stride;
        let pad = self.pad as isize;
        let kdim = k * k * c;
        let row_w = w * c;
        for bi in 0..b {
            let plane = &x[bi * h * row_w..(bi + 1) * h * row_w];
            let base = bi * oh * ow * kdim;
            for ky in 0..k {
                for kx in 0..k {
                    let tap = (ky * k + kx) * c;
                    // ox values whose input column is in range.
                    let ox_lo = ((pad - kx as isize + s as isize - 1).max(0) as usize) / s;
                    let ox_hi = {
                        let max_ix = w as isize - 1;
                        let top = max_ix + pad - kx as isize;
                        if top < 0 {
                            0
                        } else {
                            ((top as usize) / s + 1).min(ow)
                        }
                    };
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - pad;
                        let row0 = base + (oy * ow) * kdim + tap;
                        if iy < 0 || iy as usize >= h {
                            for ox in 0..ow {
                                col[row0 + ox * kdim..row0 + ox * kdim + c]
                                    .iter_mut()
                                    .for_each(|v| *v = T::ZERO);
                            }
                            continue;
                        }
                        let src = &plane[iy as usize * row_w..(iy as usize + 1) * row_w];
                        for ox in 0..ox_lo.min(ow) {
                            col[row0 + ox * kdim..row0 + ox * kdim + c]
                                .iter_mut()
                                .for_each(|v| *v = T::ZERO);
                        }
                        if c == 1 {
                            let ix0 = (ox_lo * s + kx) as isize - pad;
                            let mut ix = ix0 as usize;
                            for ox in ox_lo..ox_hi {
                                col[row0 + ox * kdim] = src[ix];
                                ix += s;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                let ix = (ox * s + kx) - self.pad;
                                col[row0 + ox * kdim..row0 + ox * kdim + c]
                                    .copy_from_slice(&src[ix * c..(ix + 1) * c]);
                            }
                        }
                        for ox in ox_hi..ow {
                            col[row0 + ox * kdim..row0 + ox * kdim + c]
                                .iter_mut()
                                .for_each(|v| *v = T::ZERO);
                        }
                    }
                }
            }
        }
    }

    /// Scatter-add patch-row gradients back into the `(B, H, W, C)` input
    /// gradient.
    fn col2im(&self, col: &[T], b: usize, h: usize, w: usize, oh: usize, ow: usize, dx: &mut [T]) {
        let k = self.kernel;
        let c = self.in_c;
        let s = self.stride;
        let pad = self.pad as isize;
        let kdim = k * k * c;
        let row_w = w * c;
        for bi in 0..b {
            let plane = &mut dx[bi * h * row_w..(bi + 1) * h * row_w];
            let base = bi * oh * ow * kdim;
            for ky in 0..k {
                for kx in 0..k {
                    let tap = (ky * k + kx) * c;
                    let ox_lo = ((pad - kx as isize + s as isize - 1).max(0) as usize) / s;
                    let ox_hi = {
                        let top = w as isize - 1 + pad - kx as isize;
                        if top < 0 {
                            0
                        } else {
                            ((top as usize) / s + 1).min(ow)
                        }
                    };
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - pad;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * row_w..(iy as usize + 1) * row_w];
                        let row0 = base + (oy * ow) * kdim + tap;
                        if c == 1 {
                            let mut ix = (ox_lo * s + kx) - self.pad;
                            for ox in ox_lo..ox_hi {
                                dst[ix] += col[row0 + ox * kdim];
                                ix += s;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                let ix = (ox * s + kx) - self.pad;
                                for ci in 0..c {
                                    dst[ix * c + ci] += col[row0 + ox * kdim + ci];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Fully connected layer: `y = x W^T + b` with `W: (out, in)`.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub grad_weight: Tensor<T>,
    pub grad_bias: Tensor<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(in_dim: usize, out_dim: usize) -> Linear<T> {
        Linear {
            in_dim,
            out_dim,
            weight: Tensor::zeros(&[out_dim, in_dim]),
            bias: Tensor::zeros(&[out_dim]),
            grad_weight: Tensor::zeros(&[out_dim, in_dim]),
            grad_bias: Tensor::zeros(&[out_dim]),
        }
    }
}

/// The layer set.
#[derive(Debug, Clone)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    Relu,
    Flatten,
    Linear(Linear<T>),
}

/// Forward state returned per application, consumed by backward.
#[derive(Debug)]
pub enum LayerCache<T> {
    Conv {
        in_shape: Vec<usize>,
        /// Patch matrix `(B*OH*OW, K)` of the whole batch.
        col: Tensor<T>,
    },
    Relu {
        /// True where the input was positive (gradient passes).
        mask: Vec<bool>,
        /// Some input sat exactly on the relu kink.
        kink: bool,
    },
    Flatten {
        in_shape: Vec<usize>,
    },
    Linear {
        input: Tensor<T>,
    },
    None,
}

impl<T: Scalar> Layer<T> {
    pub fn forward(&self, x: Tensor<T>) -> Result<(Tensor<T>, LayerCache<T>)> {
        match self {
            Layer::Conv2d(conv) => {
                let shape = x.shape();
                if shape.len() != 4 || shape[3] != conv.in_c {
                    return Err(Error::Shape {
                        layer: format!("conv2d({}x{})", conv.in_c, conv.out_c),
                        expected: format!("(B, H, W, {})", conv.in_c),
                        got: format!("{shape:?}"),
                    });
                }
                let (b, h, w) = (shape[0], shape[1], shape[2]);
                let (oh, ow) = conv.out_hw(h, w);
                let rows = b * oh * ow;
                let kdim = conv.kernel * conv.kernel * conv.in_c;
                let mut col = Tensor::zeros(&[rows, kdim]);
                conv.im2col(x.data(), b, h, w, oh, ow, col.data_mut());
                let mut out = Tensor::zeros(&[b, oh, ow, conv.out_c]);
                unsafe {
                    T::gemm(
                        rows,
                        kdim,
                        conv.out_c,
                        T::ONE,
                        col.data().as_ptr(),
                        kdim as isize,
                        1,
                        conv.weight.data().as_ptr(),
                        conv.out_c as isize,
                        1,
                        T::ZERO,
                        out.data_mut().as_mut_ptr(),
                        conv.out_c as isize,
                        1,
                    );
                }
                for row in out.data_mut().chunks_exact_mut(conv.out_c) {
                    for (v, bv) in row.iter_mut().zip(conv.bias.data()) {
                        *v += *bv;
                    }
                }
                Ok((
                    out,
                    LayerCache::Conv {
                        in_shape: shape.to_vec(),
                        col,
                    },
                ))
            }
            Layer::Relu => {
                let mut out = x;
                let mut kink = false;
                let mut mask = vec![false; out.len()];
                if T::TRACK_KINKS {
                    for (v, m) in out.data_mut().iter_mut().zip(mask.iter_mut()) {
                        let f = v.to_f64();
                        if f.abs() <= RELU_KINK_EPS {
                            kink = true;
                        }
                        if f <= 0.0 {
                            *v = T::ZERO;
                        } else {
                            *m = true;
                        }
                    }
                } else {
                    for (v, m) in out.data_mut().iter_mut().zip(mask.iter_mut()) {
                        let pass = *v > T::ZERO;
                        *m = pass;
                        *v = if pass { *v } else { T::ZERO };
                    }
                }
                Ok((out, LayerCache::Relu { mask, kink }))
            }
            Layer::Flatten => {
                let shape = x.shape().to_vec();
                let b = shape[0];
                let rest: usize = shape[1..].iter().product();
                Ok((
                    x.reshaped(&[b, rest]),
                    LayerCache::Flatten { in_shape: shape },
                ))
            }
            Layer::Linear(fc) => {
                let shape = x.shape();
                if shape.len() != 2 || shape[1] != fc.in_dim {
                    return Err(Error::Shape {
                        layer: format!("linear({}x{})", fc.in_dim, fc.out_dim),
                        expected: format!("(B, {})", fc.in_dim),
                        got: format!("{shape:?}"),
                    });
                }
                let b = shape[0];
                let mut out = Tensor::zeros(&[b, fc.out_dim]);
                unsafe {
                    T::gemm(
                        b,
                        fc.in_dim,
                        fc.out_dim,
                        T::ONE,
                        x.data().as_ptr(),
                        fc.in_dim as isize,
                        1,
                        // W^T via strides on (out, in) storage.
                        fc.weight.data().as_ptr(),
                        1,
                        fc.in_dim as isize,
                        T::ZERO,
                        out.data_mut().as_mut_ptr(),
                        fc.out_dim as isize,
                        1,
                    );
                }
                for row in out.data_mut().chunks_exact_mut(fc.out_dim) {
                    for (v, bv) in row.iter_mut().zip(fc.bias.data()) {
                        *v += *bv;
                    }
                }
                Ok((out, LayerCache::Linear { input: x }))
            }
        }
    }

    /// Backpropagate: accumulate parameter gradients and return the input
    /// gradient (an empty tensor when `need_dx` is false, which saves the
    /// scatter pass for the first layer of a stack).
    pub fn backward(
        &mut self,
        dy: Tensor<T>,
        cache: &LayerCache<T>,
        need_dx: bool,
    ) -> Result<Tensor<T>> {
        match (self, cache) {
            (Layer::Conv2d(conv), LayerCache::Conv { in_shape, col }) => {
                let (b, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
                let (oh, ow) = conv.out_hw(h, w);
                let rows = b * oh * ow;
                let kdim = conv.kernel * conv.kernel * conv.in_c;
                unsafe {
                    // dW += col^T @ dY
                    T::gemm(
                        kdim,
                        rows,
                        conv.out_c,
                        T::ONE,
                        col.data().as_ptr(),
                        1,
                        kdim as isize,
                        dy.data().as_ptr(),
                        conv.out_c as isize,
                        1,
                        T::ONE,
                        conv.grad_weight.data_mut().as_mut_ptr(),
                        conv.out_c as isize,
                        1,
                    );
                }
                for row in dy.data().chunks_exact(conv.out_c) {
                    for (g, v) in conv.grad_bias.data_mut().iter_mut().zip(row) {
                        *g += *v;
                    }
                }
                if !need_dx {
                    return Ok(Tensor::zeros(&[0]));
                }
                // dcol = dY @ W^T, then scatter back to the input.
                let mut dcol = Tensor::zeros(&[rows, kdim]);
                unsafe {
                    T::gemm(
                        rows,
                        conv.out_c,
                        kdim,
                        T::ONE,
                        dy.data().as_ptr(),
                        conv.out_c as isize,
                        1,
                        conv.weight.data().as_ptr(),
                        1,
                        conv.out_c as isize,
                        T::ZERO,
                        dcol.data_mut().as_mut_ptr(),
                        kdim as isize,
                        1,
                    );
                }
                let mut dx = Tensor::zeros(in_shape.as_slice());
                conv.col2im(dcol.data(), b, h, w, oh, ow, dx.data_mut());
                Ok(dx)
            }
            (Layer::Relu, LayerCache::Relu { mask, .. }) => {
                let mut dx = dy;
                for (g, m) in dx.data_mut().iter_mut().zip(mask.iter()) {
                    *g = if *m { *g } else { T::ZERO };
                }
                Ok(dx)
            }
            (Layer::Flatten, LayerCache::Flatten { in_shape }) => {
                Ok(dy.reshaped(in_shape.as_slice()))
            }
            (Layer::Linear(fc), LayerCache::Linear { input }) => {
                let b = input.shape()[0];
                unsafe {
                    // dW += dY^T @ X
                    T::gemm(
                        fc.out_dim,
                        b,
                        fc.in_dim,
                        T::ONE,
                        dy.data().as_ptr(),
                        1,
                        fc.out_dim as isize,
                        input.data().as_ptr(),
                        fc.in_dim as isize,
                        1,
                        T::ONE,
                        fc.grad_weight.data_mut().as_mut_ptr(),
                        fc.in_dim as isize,
                        1,
                    );
                }
                for row in dy.data().chunks_exact(fc.out_dim) {
                    for (g, v) in fc.grad_bias.data_mut().iter_mut().zip(row) {
                        *g += *v;
                    }
                }
                if !need_dx {
                    return Ok(Tensor::zeros(&[0]));
                }
                let mut dx = Tensor::zeros(&[b, fc.in_dim]);
                unsafe {
                    // dX = dY @ W
                    T::gemm(
                        b,
                        fc.out_dim,
                        fc.in_dim,
                        T::ONE,
                        dy.data().as_ptr(),
                        fc.out_dim as isize,
                        1,
                        fc.weight.data().as_ptr(),
                        fc.in_dim as isize,
                        1,
                        T::ZERO,
                        dx.data_mut().as_mut_ptr(),
                        fc.in_dim as isize,
                        1,
                    );
                }
                Ok(dx)
            }
            _ => Err(Error::State(
                "layer backward called with mismatched cache".to_string(),
            )),
        }
    }

    /// Visit `(name, param, grad)` triples in a fixed order.
    pub fn for_each_param(
        &mut self,
        prefix: &str,
        f: &mut impl FnMut(String, &mut Tensor<T>, &mut Tensor<T>),
    ) {
        match self {
            Layer::Conv2d(c) => {
                f(
                    format!("{prefix}.weight"),
                    &mut c.weight,
                    &mut c.grad_weight,
                );
                f(format!("{prefix}.bias"), &mut c.bias, &mut c.grad_bias);
            }
            Layer::Linear(l) => {
                f(
                    format!("{prefix}.weight"),
                    &mut l.weight,
                    &mut l.grad_weight,
                );
                f(format!("{prefix}.bias"), &mut l.bias, &mut l.grad_bias);
            }
            Layer::Relu | Layer::Flatten => {}
        }
    }

    /// He-style init for the parameterized layers.
    pub fn init(&mut self, rng: &mut SplitMix64) {
        match self {
            Layer::Conv2d(c) => {
                let fan_in = c.in_c * c.kernel * c.kernel;
                c.weight.init_he_uniform(fan_in, rng);
            }
            Layer::Linear(l) => {
                let fan_in = l.in_dim;
                l.weight.init_he_uniform(fan_in, rng);
            }
            Layer::Relu | Layer::Flatten => {}
        }
    }
}

/// An ordered stack of layers with names `prefix.<index>`.
#[derive(Debug, Clone)]
pub struct Sequential<T> {
    pub name: String,
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new(name: &str, layers: Vec<Layer<T>>) -> Sequential<T> {
        Sequential {
            name: name.to_string(),
            layers,
        }
    }

    pub fn forward(&self, x: Tensor<T>) -> Result<(Tensor<T>, Vec<LayerCache<T>>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x;
        for layer in &self.layers {
            let (next, cache) = layer.forward(cur)?;
            caches.push(cache);
            cur = next;
        }
        Ok((cur, caches))
    }

    /// Backward pass; when `need_input_grad` is false the bottom layer skips
    /// producing its input gradient.
    pub fn backward(
        &mut self,
        dy: Tensor<T>,
        caches: &[LayerCache<T>],
        need_input_grad: bool,
    ) -> Result<Tensor<T>> {
        let mut grad = dy;
        let n = self.layers.len();
        for (i, (layer, cache)) in self.layers.iter_mut().zip(caches.iter()).enumerate().rev() {
            grad = layer.backward(grad, cache, need_input_grad || i > 0)?;
        }
        let _ = n;
        Ok(grad)
    }

    pub fn for_each_param(&mut self, f: &mut impl FnMut(String, &mut Tensor<T>, &mut Tensor<T>)) {
        let name = self.name.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.for_each_param(&format!("{name}.{i}"), f);
        }
    }

    pub fn init(&mut self, rng: &mut SplitMix64) {
        for layer in &mut self.layers {
            layer.init(rng);
        }
    }

    pub fn zero_grads(&mut self) {
        self.for_each_param(&mut |_, _, g| g.fill(T::ZERO));
    }

    /// True if any relu in the given caches sat on its kink.
    pub fn any_kink(caches: &[LayerCache<T>]) -> bool {
        caches
            .iter()
            .any(|c| matches!(c, LayerCache::Relu { kink: true, .. }))
    }
}
