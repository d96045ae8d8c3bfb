//! Forward and backward kernels for the individual layer kinds.
//!
//! Convolutions run through im2col plus one GEMM in each direction; the
//! column matrix is rebuilt in the backward pass instead of cached so peak
//! memory stays proportional to a single layer. All math is f64 so analytic
//! gradients can be checked against central differences tightly.

use ndarray::{Array1, Array2, Array4, ArrayView2, ArrayView4};

pub const BN_EPS: f64 = 1e-5;

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

pub struct ConvGeom {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub out_ch: usize,
}

impl ConvGeom {
    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.padding.0 - self.kernel.0) / self.stride.0 + 1,
            (w + 2 * self.padding.1 - self.kernel.1) / self.stride.1 + 1,
        )
    }
}

/// Column matrix (B*OH*OW, C*KH*KW); out-of-bounds taps contribute zero.
fn im2col(x: ArrayView4<f64>, g: &ConvGeom) -> Array2<f64> {
    let (b, c, h, w) = x.dim();
    let (oh, ow) = g.out_dims(h, w);
    let (kh, kw) = g.kernel;
    let mut col = Array2::<f64>::zeros((b * oh * ow, c * kh * kw));
    for bi in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = (bi * oh + oy) * ow + ox;
                let base_y = (oy * g.stride.0) as isize - g.padding.0 as isize;
                let base_x = (ox * g.stride.1) as isize - g.padding.1 as isize;
                for ci in 0..c {
                    for ky in 0..kh {
                        let iy = base_y + ky as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = base_x + kx as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            col[[row, (ci * kh + ky) * kw + kx]] =
                                x[[bi, ci, iy as usize, ix as usize]];
                        }
                    }
                }
            }
        }
    }
    col
}

/// Scatter-add of a column-matrix gradient back onto the input tensor.
fn col2im(dcol: &Array2<f64>, dims: (usize, usize, usize, usize), g: &ConvGeom) -> Array4<f64> {
    let (b, c, h, w) = dims;
    let (oh, ow) = g.out_dims(h, w);
    let (kh, kw) = g.kernel;
    let mut dx = Array4::<f64>::zeros(dims);
    for bi in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = (bi * oh + oy) * ow + ox;
                let base_y = (oy * g.stride.0) as isize - g.padding.0 as isize;
                let base_x = (ox * g.stride.1) as isize - g.padding.1 as isize;
                for ci in 0..c {
                    for ky in 0..kh {
                        let iy = base_y + ky as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = base_x + kx as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            dx[[bi, ci, iy as usize, ix as usize]] +=
                                dcol[[row, (ci * kh + ky) * kw + kx]];
                        }
                    }
                }
            }
        }
    }
    dx
}

/// weight: (out_ch, in_ch*kh*kw); bias: (out_ch) optional.
pub fn conv_forward(
    x: ArrayView4<f64>,
    weight: &Array2<f64>,
    bias: Option<&Array1<f64>>,
    g: &ConvGeom,
) -> Array4<f64> {
    let (b, _, h, w) = x.dim();
    let (oh, ow) = g.out_dims(h, w);
    let col = im2col(x, g);
    let out_mat = col.dot(&weight.t()); // (B*OH*OW, out_ch)
    let mut out = Array4::<f64>::zeros((b, g.out_ch, oh, ow));
    for bi in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = (bi * oh + oy) * ow + ox;
                for co in 0..g.out_ch {
                    out[[bi, co, oy, ox]] =
                        out_mat[[row, co]] + bias.map_or(0.0, |bv| bv[co]);
                }
            }
        }
    }
    out
}

/// Returns (dx, dweight, dbias).
pub fn conv_backward(
    x: ArrayView4<f64>,
    weight: &Array2<f64>,
    has_bias: bool,
    g: &ConvGeom,
    dout: ArrayView4<f64>,
) -> (Array4<f64>, Array2<f64>, Option<Array1<f64>>) {
    let (b, _, h, w) = x.dim();
    let (oh, ow) = g.out_dims(h, w);

    // (B*OH*OW, out_ch) layout of the output gradient.
    let mut dout_mat = Array2::<f64>::zeros((b * oh * ow, g.out_ch));
    for bi in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = (bi * oh + oy) * ow + ox;
                for co in 0..g.out_ch {
                    dout_mat[[row, co]] = dout[[bi, co, oy, ox]];
                }
            }
        }
    }

    let col = im2col(x, g);
    let dweight = dout_mat.t().dot(&col); // (out_ch, C*KH*KW)
    let dbias = has_bias.then(|| dout_mat.sum_axis(ndarray::Axis(0)));
    let dcol = dout_mat.dot(weight); // (B*OH*OW, C*KH*KW)
    let dx = col2im(&dcol, x.dim(), g);
    (dx, dweight, dbias)
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

/// Max pool with explicit stride/padding. Returns the output and the flat
/// input index (per output element) that produced each max, for routing the
/// gradient; ties go to the first tap in scan order. Padded taps count as
/// negative infinity and never win on real data.
pub fn maxpool_forward(
    x: ArrayView4<f64>,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
) -> (Array4<f64>, Array4<usize>) {
    let (b, c, h, w) = x.dim();
    let oh = (h + 2 * padding.0 - kernel.0) / stride.0 + 1;
    let ow = (w + 2 * padding.1 - kernel.1) / stride.1 + 1;
    let mut out = Array4::<f64>::zeros((b, c, oh, ow));
    let mut arg = Array4::<usize>::zeros((b, c, oh, ow));
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0usize;
                    for ky in 0..kernel.0 {
                        let iy = (oy * stride.0 + ky) as isize - padding.0 as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kernel.1 {
                            let ix = (ox * stride.1 + kx) as isize - padding.1 as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let v = x[[bi, ci, iy as usize, ix as usize]];
                            if v > best {
                                best = v;
                                best_idx = iy as usize * w + ix as usize;
                            }
                        }
                    }
                    out[[bi, ci, oy, ox]] = best;
                    arg[[bi, ci, oy, ox]] = best_idx;
                }
            }
        }
    }
    (out, arg)
}

pub fn maxpool_backward(
    input_dims: (usize, usize, usize, usize),
    arg: &Array4<usize>,
    dout: ArrayView4<f64>,
) -> Array4<f64> {
    let (_, _, h, w) = input_dims;
    let _ = h;
    let mut dx = Array4::<f64>::zeros(input_dims);
    for ((bi, ci, oy, ox), &flat) in arg.indexed_iter() {
        dx[[bi, ci, flat / w, flat % w]] += dout[[bi, ci, oy, ox]];
    }
    dx
}

/// (B, C, H, W) -> (B, C) mean over the spatial plane.
pub fn global_avgpool_forward(x: ArrayView4<f64>) -> Array2<f64> {
    let (b, c, h, w) = x.dim();
    let scale = 1.0 / (h * w) as f64;
    let mut out = Array2::<f64>::zeros((b, c));
    for ((bi, ci, _, _), v) in x.indexed_iter() {
        out[[bi, ci]] += v * scale;
    }
    out
}

pub fn global_avgpool_backward(
    input_dims: (usize, usize, usize, usize),
    dout: ArrayView2<f64>,
) -> Array4<f64> {
    let (b, c, h, w) = input_dims;
    let scale = 1.0 / (h * w) as f64;
    let mut dx = Array4::<f64>::zeros(input_dims);
    for bi in 0..b {
        for ci in 0..c {
            let g = dout[[bi, ci]] * scale;
            for y in 0..h {
                for x_ in 0..w {
                    dx[[bi, ci, y, x_]] = g;
                }
            }
        }
    }
    dx
}

pub fn upsample_forward(x: ArrayView4<f64>, factor: (usize, usize)) -> Array4<f64> {
    let (b, c, h, w) = x.dim();
    let mut out = Array4::<f64>::zeros((b, c, h * factor.0, w * factor.1));
    for ((bi, ci, oy, ox), v) in out.indexed_iter_mut() {
        *v = x[[bi, ci, oy / factor.0, ox / factor.1]];
    }
    out
}

pub fn upsample_backward(factor: (usize, usize), dout: ArrayView4<f64>) -> Array4<f64> {
    let (b, c, oh, ow) = dout.dim();
    let mut dx = Array4::<f64>::zeros((b, c, oh / factor.0, ow / factor.1));
    for ((bi, ci, oy, ox), v) in dout.indexed_iter() {
        dx[[bi, ci, oy / factor.0, ox / factor.1]] += v;
    }
    dx
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Batch statistics cached for the backward pass.
pub struct BnCache {
    pub normalized: Array4<f64>,
    pub inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
}

/// Training-mode batch normalization (biased batch variance).
pub fn batchnorm_forward_train(
    x: ArrayView4<f64>,
    gamma: &Array1<f64>,
    beta: &Array1<f64>,
) -> (Array4<f64>, BnCache) {
    let (b, c, h, w) = x.dim();
    let count = (b * h * w) as f64;
    let mut mean = vec![0.0f64; c];
    for ((_, ci, _, _), v) in x.indexed_iter() {
        mean[ci] += v;
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut var = vec![0.0f64; c];
    for ((_, ci, _, _), v) in x.indexed_iter() {
        var[ci] += (v - mean[ci]).powi(2);
    }
    for v in &mut var {
        *v /= count;
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();

    let mut normalized = Array4::<f64>::zeros((b, c, h, w));
    let mut out = Array4::<f64>::zeros((b, c, h, w));
    for ((bi, ci, y, x_), v) in x.indexed_iter() {
        let n = (v - mean[ci]) * inv_std[ci];
        normalized[[bi, ci, y, x_]] = n;
        out[[bi, ci, y, x_]] = gamma[ci] * n + beta[ci];
    }
    (
        out,
        BnCache {
            normalized,
            inv_std,
            batch_mean: mean,
            batch_var: var,
        },
    )
}

/// Inference-mode batch normalization with running statistics.
pub fn batchnorm_forward_eval(
    x: ArrayView4<f64>,
    gamma: &Array1<f64>,
    beta: &Array1<f64>,
    running_mean: &Array1<f64>,
    running_var: &Array1<f64>,
) -> Array4<f64> {
    let mut out = x.to_owned();
    for ((_, ci, _, _), v) in out.indexed_iter_mut() {
        *v = gamma[ci] * (*v - running_mean[ci]) / (running_var[ci] + BN_EPS).sqrt() + beta[ci];
    }
    out
}

/// Returns (dx, dgamma, dbeta).
pub fn batchnorm_backward(
    cache: &BnCache,
    gamma: &Array1<f64>,
    dout: ArrayView4<f64>,
) -> (Array4<f64>, Array1<f64>, Array1<f64>) {
    let (b, c, h, w) = dout.dim();
    let count = (b * h * w) as f64;
    let mut dgamma = Array1::<f64>::zeros(c);
    let mut dbeta = Array1::<f64>::zeros(c);
    for ((bi, ci, y, x_), g) in dout.indexed_iter() {
        dgamma[ci] += g * cache.normalized[[bi, ci, y, x_]];
        dbeta[ci] += g;
    }
    // dx = gamma * inv_std * (dout - mean(dout) - x_hat * mean(dout * x_hat))
    let mut dx = Array4::<f64>::zeros((b, c, h, w));
    for ((bi, ci, y, x_), g) in dout.indexed_iter() {
        let xh = cache.normalized[[bi, ci, y, x_]];
        dx[[bi, ci, y, x_]] = gamma[ci]
            * cache.inv_std[ci]
            * (g - dbeta[ci] / count - xh * dgamma[ci] / count);
    }
    (dx, dgamma, dbeta)
}

/// Per-channel y = gamma x + beta.
pub fn affine_forward(x: ArrayView4<f64>, gamma: &Array1<f64>, beta: &Array1<f64>) -> Array4<f64> {
    let mut out = x.to_owned();
    for ((_, ci, _, _), v) in out.indexed_iter_mut() {
        *v = gamma[ci] * *v + beta[ci];
    }
    out
}

pub fn affine_backward(
    x: ArrayView4<f64>,
    gamma: &Array1<f64>,
    dout: ArrayView4<f64>,
) -> (Array4<f64>, Array1<f64>, Array1<f64>) {
    let c = x.dim().1;
    let mut dgamma = Array1::<f64>::zeros(c);
    let mut dbeta = Array1::<f64>::zeros(c);
    for ((bi, ci, y, x_), g) in dout.indexed_iter() {
        dgamma[ci] += g * x[[bi, ci, y, x_]];
        dbeta[ci] += g;
    }
    let mut dx = dout.to_owned();
    for ((_, ci, _, _), v) in dx.indexed_iter_mut() {
        *v *= gamma[ci];
    }
    (dx, dgamma, dbeta)
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

/// weight: (out, in); x: (B, in).
pub fn dense_forward(
    x: ArrayView2<f64>,
    weight: &Array2<f64>,
    bias: Option<&Array1<f64>>,
) -> Array2<f64> {
    let mut out = x.dot(&weight.t());
    if let Some(bv) = bias {
        for mut row in out.rows_mut() {
            row += bv;
        }
    }
    out
}

pub fn dense_backward(
    x: ArrayView2<f64>,
    weight: &Array2<f64>,
    has_bias: bool,
    dout: ArrayView2<f64>,
) -> (Array2<f64>, Array2<f64>, Option<Array1<f64>>) {
    let dweight = dout.t().dot(&x);
    let dbias = has_bias.then(|| dout.sum_axis(ndarray::Axis(0)));
    let dx = dout.dot(weight);
    (dx, dweight, dbias)
}
