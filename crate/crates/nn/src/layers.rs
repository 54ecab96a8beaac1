//! Valid 2-D convolution and fully connected layers, forward and backward.
//!
//! Convolutions are lowered to matrix products through im2col. For one
//! sample with `C` input channels the column matrix has one row per output
//! pixel and `C * k * k` columns, ordered channel-major then kernel row then
//! kernel column, matching the `[out, in, k, k]` weight layout.

use crate::real::{matmul, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub const fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
        }
    }

    /// Output side length for a square input, `(size - kernel) / stride + 1`.
    pub fn output_size(&self, size: usize) -> Option<usize> {
        (size >= self.kernel && self.stride > 0).then(|| (size - self.kernel) / self.stride + 1)
    }

    /// Length of one im2col row.
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.kernel, self.kernel]
    }
}

/// Fills `cols` (`out_h * out_w` rows by `patch_len` columns) from one sample.
pub fn im2col<T: Real>(spec: &ConvSpec, x: &[T], size: usize, out: usize, cols: &mut [T]) {
    let k = spec.kernel;
    let patch = spec.patch_len();
    debug_assert_eq!(cols.len(), out * out * patch);
    for oy in 0..out {
        for ox in 0..out {
            let row = &mut cols[(oy * out + ox) * patch..][..patch];
            for c in 0..spec.in_channels {
                let plane = &x[c * size * size..][..size * size];
                for ky in 0..k {
                    let src = &plane[(oy * spec.stride + ky) * size + ox * spec.stride..][..k];
                    row[(c * k + ky) * k..][..k].copy_from_slice(src);
                }
            }
        }
    }
}

/// Scatters column gradients back onto an input gradient (accumulating).
pub fn col2im_add<T: Real>(spec: &ConvSpec, dcols: &[T], size: usize, out: usize, dx: &mut [T]) {
    let k = spec.kernel;
    let patch = spec.patch_len();
    for oy in 0..out {
        for ox in 0..out {
            let row = &dcols[(oy * out + ox) * patch..][..patch];
            for c in 0..spec.in_channels {
                let plane = &mut dx[c * size * size..][..size * size];
                for ky in 0..k {
                    let dst = &mut plane[(oy * spec.stride + ky) * size + ox * spec.stride..][..k];
                    for (d, s) in dst.iter_mut().zip(&row[(c * k + ky) * k..][..k]) {
                        *d += *s;
                    }
                }
            }
        }
    }
}

/// Output of a convolution over a batch, plus the im2col matrices needed by
/// the backward pass.
#[derive(Clone, Debug)]
pub struct ConvOutput<T> {
    /// `[batch, out_channels, out, out]`.
    pub y: Vec<T>,
    /// `[batch, out * out, patch_len]`.
    pub cols: Vec<T>,
    pub out: usize,
}

pub fn conv_forward<T: Real>(
    spec: &ConvSpec,
    weight: &[T],
    bias: &[T],
    x: &[T],
    batch: usize,
    size: usize,
) -> ConvOutput<T> {
    let out = spec.output_size(size).expect("input smaller than kernel");
    let pix = out * out;
    let patch = spec.patch_len();
    let in_len = spec.in_channels * size * size;
    let out_len = spec.out_channels * pix;
    assert_eq!(x.len(), batch * in_len, "convolution input length");
    let mut cols = vec![T::zero(); batch * pix * patch];
    let mut y = vec![T::zero(); batch * out_len];
    for b in 0..batch {
        let c = &mut cols[b * pix * patch..][..pix * patch];
        im2col(spec, &x[b * in_len..][..in_len], size, out, c);
        let yb = &mut y[b * out_len..][..out_len];
        // [out_c, patch] x [patch, pix]
        matmul(weight, false, c, true, yb, spec.out_channels, patch, pix, false);
        for (o, &bo) in bias.iter().enumerate() {
            for v in &mut yb[o * pix..][..pix] {
                *v += bo;
            }
        }
    }
    ConvOutput { y, cols, out }
}

/// Accumulates weight and bias gradients; returns the input gradient when
/// `want_dx` is set.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward<T: Real>(
    spec: &ConvSpec,
    weight: &[T],
    cols: &[T],
    dy: &[T],
    batch: usize,
    size: usize,
    dweight: &mut [T],
    dbias: &mut [T],
    want_dx: bool,
) -> Option<Vec<T>> {
    let out = spec.output_size(size).expect("input smaller than kernel");
    let pix = out * out;
    let patch = spec.patch_len();
    let in_len = spec.in_channels * size * size;
    let out_len = spec.out_channels * pix;
    let mut dx = want_dx.then(|| vec![T::zero(); batch * in_len]);
    let mut dcols = vec![T::zero(); pix * patch];
    for b in 0..batch {
        let dyb = &dy[b * out_len..][..out_len];
        let cb = &cols[b * pix * patch..][..pix * patch];
        // [out_c, pix] x [pix, patch]
        matmul(dyb, false, cb, false, dweight, spec.out_channels, pix, patch, true);
        for (o, db) in dbias.iter_mut().enumerate() {
            for &v in &dyb[o * pix..][..pix] {
                *db += v;
            }
        }
        if let Some(dx) = dx.as_mut() {
            // [pix, out_c] x [out_c, patch]
            matmul(dyb, true, weight, false, &mut dcols, pix, spec.out_channels, patch, false);
            col2im_add(spec, &dcols, size, out, &mut dx[b * in_len..][..in_len]);
        }
    }
    dx
}

/// `y [batch, out] = x [batch, in] * W^T + b`, with `W` stored `[out, in]`.
pub fn dense_forward<T: Real>(
    weight: &[T],
    bias: &[T],
    x: &[T],
    batch: usize,
    inputs: usize,
    outputs: usize,
) -> Vec<T> {
    assert_eq!(x.len(), batch * inputs, "dense input length");
    let mut y = vec![T::zero(); batch * outputs];
    matmul(x, false, weight, true, &mut y, batch, inputs, outputs, false);
    for row in y.chunks_exact_mut(outputs) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
    y
}

/// Accumulates weight and bias gradients and returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn dense_backward<T: Real>(
    weight: &[T],
    x: &[T],
    dy: &[T],
    batch: usize,
    inputs: usize,
    outputs: usize,
    dweight: &mut [T],
    dbias: &mut [T],
) -> Vec<T> {
    // [out, batch] x [batch, in]
    matmul(dy, true, x, false, dweight, outputs, batch, inputs, true);
    for row in dy.chunks_exact(outputs) {
        for (db, &v) in dbias.iter_mut().zip(row) {
            *db += v;
        }
    }
    let mut dx = vec![T::zero(); batch * inputs];
    matmul(dy, false, weight, false, &mut dx, batch, outputs, inputs, false);
    dx
}

pub fn relu_in_place<T: Real>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

/// Zeroes gradient entries whose activation was clipped by ReLU.
pub fn relu_mask<T: Real>(activated: &[T], grad: &mut [T]) {
    for (g, &a) in grad.iter_mut().zip(activated) {
        if a <= T::zero() {
            *g = T::zero();
        }
    }
}
