//! Dense compute kernels behind the autodiff graph.
//!
//! Every kernel is a pure function over row-major slices. Parallel loops are
//! partitioned so each output element is written by exactly one task with a
//! fixed sequential inner order, which makes results identical for any worker
//! count (including one); reductions that cross samples or spatial positions
//! always run in a fixed order.

use super::scalar::Scalar;
use rayon::prelude::*;

/// Output spatial size of a convolution along one axis.
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// Range of output coordinates whose corresponding input coordinate
/// `o*stride + k_off - pad` falls inside `[0, in_dim)`.
fn valid_out_range(in_dim: usize, out_dim: usize, k_off: usize, stride: usize, pad: usize) -> (usize, usize) {
    let lo = if pad > k_off { (pad - k_off).div_ceil(stride) } else { 0 };
    let hi_num = in_dim - 1 + pad;
    if hi_num < k_off {
        return (0, 0);
    }
    let hi = (hi_num - k_off) / stride;
    let end = hi.min(out_dim.saturating_sub(1)) + 1;
    (lo.min(end), end)
}

/// Cross-correlation (no kernel flip) of `[N,C,H,W]` with `[O,C,kH,kW]`.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_forward<T: Scalar>(
    input: &[T],
    weight: &[T],
    bias: &[T],
    n: usize,
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let oh = conv_out_dim(h, kh, stride, pad);
    let ow = conv_out_dim(w, kw, stride, pad);
    let mut out = vec![T::zero(); n * c_out * oh * ow];

    out.par_chunks_mut(oh * ow).enumerate().for_each(|(plane, out_plane)| {
        let ni = plane / c_out;
        let oi = plane % c_out;
        let b = bias[oi];
        for v in out_plane.iter_mut() {
            *v = b;
        }
        for ci in 0..c_in {
            let in_plane = &input[(ni * c_in + ci) * h * w..][..h * w];
            for ky in 0..kh {
                let (y0, y1) = valid_out_range(h, oh, ky, stride, pad);
                for kx in 0..kw {
                    let wv = weight[((oi * c_in + ci) * kh + ky) * kw + kx];
                    if wv == T::zero() {
                        continue;
                    }
                    let (x0, x1) = valid_out_range(w, ow, kx, stride, pad);
                    for y in y0..y1 {
                        let iy = y * stride + ky - pad;
                        let in_row = &in_plane[iy * w..][..w];
                        let out_row = &mut out_plane[y * ow..][..ow];
                        if stride == 1 {
                            let ix0 = x0 + kx - pad;
                            let src = &in_row[ix0..ix0 + (x1 - x0)];
                            let dst = &mut out_row[x0..x1];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += wv * *s;
                            }
                        } else {
                            for x in x0..x1 {
                                let ix = x * stride + kx - pad;
                                out_row[x] += wv * in_row[ix];
                            }
                        }
                    }
                }
            }
        }
    });
    out
}

/// Gradient of a convolution with respect to its input.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward_input<T: Scalar>(
    dout: &[T],
    weight: &[T],
    n: usize,
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let oh = conv_out_dim(h, kh, stride, pad);
    let ow = conv_out_dim(w, kw, stride, pad);
    let mut din = vec![T::zero(); n * c_in * h * w];

    din.par_chunks_mut(h * w).enumerate().for_each(|(plane, din_plane)| {
        let ni = plane / c_in;
        let ci = plane % c_in;
        for oi in 0..c_out {
            let dout_plane = &dout[(ni * c_out + oi) * oh * ow..][..oh * ow];
            for ky in 0..kh {
                let (y0, y1) = valid_out_range(h, oh, ky, stride, pad);
                for kx in 0..kw {
                    let wv = weight[((oi * c_in + ci) * kh + ky) * kw + kx];
                    if wv == T::zero() {
                        continue;
                    }
                    let (x0, x1) = valid_out_range(w, ow, kx, stride, pad);
                    for y in y0..y1 {
                        let iy = y * stride + ky - pad;
                        let dout_row = &dout_plane[y * ow..][..ow];
                        let din_row = &mut din_plane[iy * w..][..w];
                        if stride == 1 {
                            let ix0 = x0 + kx - pad;
                            let dst = &mut din_row[ix0..ix0 + (x1 - x0)];
                            let src = &dout_row[x0..x1];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += wv * *s;
                            }
                        } else {
                            for x in x0..x1 {
                                let ix = x * stride + kx - pad;
                                din_row[ix] += wv * dout_row[x];
                            }
                        }
                    }
                }
            }
        }
    });
    din
}

/// Gradient of a convolution with respect to its weight.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward_weight<T: Scalar>(
    dout: &[T],
    input: &[T],
    n: usize,
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let oh = conv_out_dim(h, kh, stride, pad);
    let ow = conv_out_dim(w, kw, stride, pad);
    let mut dw = vec![T::zero(); c_out * c_in * kh * kw];

    dw.par_chunks_mut(c_in * kh * kw).enumerate().for_each(|(oi, dw_o)| {
        for ci in 0..c_in {
            for ky in 0..kh {
                let (y0, y1) = valid_out_range(h, oh, ky, stride, pad);
                for kx in 0..kw {
                    let (x0, x1) = valid_out_range(w, ow, kx, stride, pad);
                    let mut acc = T::zero();
                    for ni in 0..n {
                        let dout_plane = &dout[(ni * c_out + oi) * oh * ow..][..oh * ow];
                        let in_plane = &input[(ni * c_in + ci) * h * w..][..h * w];
                        for y in y0..y1 {
                            let iy = y * stride + ky - pad;
                            let dout_row = &dout_plane[y * ow..][..ow];
                            let in_row = &in_plane[iy * w..][..w];
                            if stride == 1 {
                                let ix0 = x0 + kx - pad;
                                let a = &dout_row[x0..x1];
                                let b = &in_row[ix0..ix0 + (x1 - x0)];
                                let mut s = T::zero();
                                for (u, v) in a.iter().zip(b) {
                                    s += *u * *v;
                                }
                                acc += s;
                            } else {
                                for x in x0..x1 {
                                    let ix = x * stride + kx - pad;
                                    acc += dout_row[x] * in_row[ix];
                                }
                            }
                        }
                    }
                    dw_o[(ci * kh + ky) * kw + kx] = acc;
                }
            }
        }
    });
    dw
}

/// Gradient of a convolution with respect to its bias.
pub fn conv2d_backward_bias<T: Scalar>(dout: &[T], n: usize, c_out: usize, plane: usize) -> Vec<T> {
    let mut db = vec![T::zero(); c_out];
    for (oi, slot) in db.iter_mut().enumerate() {
        let mut acc = T::zero();
        for ni in 0..n {
            let p = &dout[(ni * c_out + oi) * plane..][..plane];
            for v in p {
                acc += *v;
            }
        }
        *slot = acc;
    }
    db
}

/// Per-channel batch statistics and normalized output for training mode.
/// Returns `(output, batch_mean, batch_invstd)`; variance is the biased
/// (1/M) estimate, which is also what running stats store.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward_train<T: Scalar>(
    input: &[T],
    gamma: &[T],
    beta: &[T],
    n: usize,
    c: usize,
    plane: usize,
    eps: f64,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let m = n * plane;
    let mut out = vec![T::zero(); input.len()];
    let mut means = vec![T::zero(); c];
    let mut invstds = vec![T::zero(); c];
    let m_t = T::from_f64(m as f64);
    let eps_t = T::from_f64(eps);

    let stats: Vec<(T, T)> = (0..c)
        .map(|ci| {
            let mut sum = T::zero();
            for ni in 0..n {
                let p = &input[(ni * c + ci) * plane..][..plane];
                for v in p {
                    sum += *v;
                }
            }
            let mean = sum / m_t;
            let mut var_sum = T::zero();
            for ni in 0..n {
                let p = &input[(ni * c + ci) * plane..][..plane];
                for v in p {
                    let d = *v - mean;
                    var_sum += d * d;
                }
            }
            let var = var_sum / m_t;
            (mean, (var + eps_t).sqrt().recip())
        })
        .collect();

    for (ci, (mean, invstd)) in stats.iter().enumerate() {
        means[ci] = *mean;
        invstds[ci] = *invstd;
    }

    out.par_chunks_mut(plane).enumerate().for_each(|(idx, out_plane)| {
        let ci = idx % c;
        let (mean, invstd) = stats[ci];
        let g = gamma[ci];
        let b = beta[ci];
        let in_plane = &input[idx * plane..][..plane];
        for (o, v) in out_plane.iter_mut().zip(in_plane) {
            *o = g * (*v - mean) * invstd + b;
        }
    });
    (out, means, invstds)
}

/// Batchnorm with frozen statistics (evaluation mode).
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward_eval<T: Scalar>(
    input: &[T],
    gamma: &[T],
    beta: &[T],
    running_mean: &[T],
    running_var: &[T],
    c: usize,
    plane: usize,
    eps: f64,
) -> Vec<T> {
    let eps_t = T::from_f64(eps);
    let mut out = vec![T::zero(); input.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(idx, out_plane)| {
        let ci = idx % c;
        let invstd = (running_var[ci] + eps_t).sqrt().recip();
        let g = gamma[ci];
        let b = beta[ci];
        let mean = running_mean[ci];
        let in_plane = &input[idx * plane..][..plane];
        for (o, v) in out_plane.iter_mut().zip(in_plane) {
            *o = g * (*v - mean) * invstd + b;
        }
    });
    out
}

/// Backward pass of training-mode batchnorm.
/// Returns `(dinput, dgamma, dbeta)`.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_backward<T: Scalar>(
    dout: &[T],
    input: &[T],
    gamma: &[T],
    mean: &[T],
    invstd: &[T],
    n: usize,
    c: usize,
    plane: usize,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let m = n * plane;
    let m_t = T::from_f64(m as f64);
    let mut din = vec![T::zero(); input.len()];
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];

    let per_channel: Vec<(T, T)> = (0..c)
        .map(|ci| {
            let mu = mean[ci];
            let is = invstd[ci];
            let mut sum_dy = T::zero();
            let mut sum_dy_xhat = T::zero();
            for ni in 0..n {
                let base = (ni * c + ci) * plane;
                let dy = &dout[base..][..plane];
                let x = &input[base..][..plane];
                for (d, v) in dy.iter().zip(x) {
                    sum_dy += *d;
                    sum_dy_xhat += *d * (*v - mu) * is;
                }
            }
            (sum_dy, sum_dy_xhat)
        })
        .collect();

    for (ci, (sum_dy, sum_dy_xhat)) in per_channel.iter().enumerate() {
        dbeta[ci] = *sum_dy;
        dgamma[ci] = *sum_dy_xhat;
    }

    din.par_chunks_mut(plane).enumerate().for_each(|(idx, din_plane)| {
        let ci = idx % c;
        let (sum_dy, sum_dy_xhat) = per_channel[ci];
        let mu = mean[ci];
        let is = invstd[ci];
        let scale = gamma[ci] * is / m_t;
        let dy = &dout[idx * plane..][..plane];
        let x = &input[idx * plane..][..plane];
        for ((d, g), v) in din_plane.iter_mut().zip(dy).zip(x) {
            let xhat = (*v - mu) * is;
            *d = scale * (m_t * *g - sum_dy - xhat * sum_dy_xhat);
        }
    });
    (din, dgamma, dbeta)
}

pub fn relu_forward<T: Scalar>(input: &[T]) -> Vec<T> {
    input.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

/// Subgradient at zero is zero.
pub fn relu_backward<T: Scalar>(dout: &[T], input: &[T]) -> Vec<T> {
    dout.iter()
        .zip(input)
        .map(|(&d, &v)| if v > T::zero() { d } else { T::zero() })
        .collect()
}

/// Max pooling; returns output and the flat within-plane argmax of each
/// output cell. Ties go to the first index in (row, col) scan order.
pub fn maxpool2d_forward<T: Scalar>(
    input: &[T],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
) -> (Vec<T>, Vec<u32>) {
    let oh = (h - k) / stride + 1;
    let ow = (w - k) / stride + 1;
    let mut out = vec![T::zero(); n * c * oh * ow];
    let mut arg = vec![0u32; n * c * oh * ow];

    out.par_chunks_mut(oh * ow)
        .zip(arg.par_chunks_mut(oh * ow))
        .enumerate()
        .for_each(|(plane, (out_plane, arg_plane))| {
            let in_plane = &input[plane * h * w..][..h * w];
            for y in 0..oh {
                for x in 0..ow {
                    let mut best = T::neg_infinity();
                    let mut best_idx = 0u32;
                    for ky in 0..k {
                        let iy = y * stride + ky;
                        for kx in 0..k {
                            let ix = x * stride + kx;
                            let v = in_plane[iy * w + ix];
                            if v > best {
                                best = v;
                                best_idx = (iy * w + ix) as u32;
                            }
                        }
                    }
                    out_plane[y * ow + x] = best;
                    arg_plane[y * ow + x] = best_idx;
                }
            }
        });
    (out, arg)
}

pub fn maxpool2d_backward<T: Scalar>(
    dout: &[T],
    arg: &[u32],
    planes: usize,
    in_plane_len: usize,
    out_plane_len: usize,
) -> Vec<T> {
    let mut din = vec![T::zero(); planes * in_plane_len];
    din.par_chunks_mut(in_plane_len).enumerate().for_each(|(plane, din_plane)| {
        let dout_plane = &dout[plane * out_plane_len..][..out_plane_len];
        let arg_plane = &arg[plane * out_plane_len..][..out_plane_len];
        for (d, &idx) in dout_plane.iter().zip(arg_plane) {
            din_plane[idx as usize] += *d;
        }
    });
    din
}

/// `out[n,g] = bias[g] + input[n,:] . weight[g,:]` with weight `[G,F]`.
pub fn linear_forward<T: Scalar>(input: &[T], weight: &[T], bias: &[T], n: usize, f: usize, g: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * g];
    out.par_chunks_mut(g).enumerate().for_each(|(ni, out_row)| {
        let in_row = &input[ni * f..][..f];
        for (gi, slot) in out_row.iter_mut().enumerate() {
            let w_row = &weight[gi * f..][..f];
            let mut acc = bias[gi];
            for (a, b) in in_row.iter().zip(w_row) {
                acc += *a * *b;
            }
            *slot = acc;
        }
    });
    out
}

pub fn linear_backward_input<T: Scalar>(dout: &[T], weight: &[T], n: usize, f: usize, g: usize) -> Vec<T> {
    let mut din = vec![T::zero(); n * f];
    din.par_chunks_mut(f).enumerate().for_each(|(ni, din_row)| {
        let dout_row = &dout[ni * g..][..g];
        for (gi, &d) in dout_row.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            let w_row = &weight[gi * f..][..f];
            for (slot, wv) in din_row.iter_mut().zip(w_row) {
                *slot += d * *wv;
            }
        }
    });
    din
}

pub fn linear_backward_weight<T: Scalar>(dout: &[T], input: &[T], n: usize, f: usize, g: usize) -> Vec<T> {
    let mut dw = vec![T::zero(); g * f];
    dw.par_chunks_mut(f).enumerate().for_each(|(gi, dw_row)| {
        for ni in 0..n {
            let d = dout[ni * g + gi];
            if d == T::zero() {
                continue;
            }
            let in_row = &input[ni * f..][..f];
            for (slot, v) in dw_row.iter_mut().zip(in_row) {
                *slot += d * *v;
            }
        }
    });
    dw
}

pub fn linear_backward_bias<T: Scalar>(dout: &[T], n: usize, g: usize) -> Vec<T> {
    let mut db = vec![T::zero(); g];
    for ni in 0..n {
        for (gi, slot) in db.iter_mut().enumerate() {
            *slot += dout[ni * g + gi];
        }
    }
    db
}

/// Smooth L1 (Huber with delta 1) reduced by mean over all elements.
/// Returns `(loss, per-element d = pred - target)`.
pub fn smooth_l1_forward<T: Scalar>(pred: &[T], target: &[T]) -> (T, Vec<T>) {
    let half = T::from_f64(0.5);
    let one = T::one();
    let mut total = T::zero();
    let diffs: Vec<T> = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            let a = d.abs();
            total += if a < one { half * d * d } else { a - half };
            d
        })
        .collect();
    (total / T::from_f64(pred.len() as f64), diffs)
}

/// Gradient of smooth L1 with respect to the prediction.
pub fn smooth_l1_backward<T: Scalar>(dloss: T, diffs: &[T]) -> Vec<T> {
    let one = T::one();
    let scale = dloss / T::from_f64(diffs.len() as f64);
    diffs
        .iter()
        .map(|&d| {
            let g = if d.abs() < one { d } else { d.signum() };
            scale * g
        })
        .collect()
}

/// Numerically-stable softmax along `axis` of an arbitrary-rank tensor.
pub fn softmax_forward<T: Scalar>(input: &[T], shape: &[usize], axis: usize) -> Vec<T> {
    let axis_len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![T::zero(); input.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |a: usize| (o * axis_len + a) * inner + i;
            let mut max = T::neg_infinity();
            for a in 0..axis_len {
                max = max.max(input[at(a)]);
            }
            let mut sum = T::zero();
            for a in 0..axis_len {
                let e = (input[at(a)] - max).exp();
                out[at(a)] = e;
                sum += e;
            }
            for a in 0..axis_len {
                out[at(a)] /= sum;
            }
        }
    }
    out
}

pub fn softmax_backward<T: Scalar>(dout: &[T], output: &[T], shape: &[usize], axis: usize) -> Vec<T> {
    let axis_len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut din = vec![T::zero(); dout.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |a: usize| (o * axis_len + a) * inner + i;
            let mut dot = T::zero();
            for a in 0..axis_len {
                dot += dout[at(a)] * output[at(a)];
            }
            for a in 0..axis_len {
                din[at(a)] = output[at(a)] * (dout[at(a)] - dot);
            }
        }
    }
    din
}

/// Softmax of a plain `f64` slice; the convenience entry point used by the
/// statistics code on 6-element rate vectors.
pub fn softmax_slice(v: &[f64]) -> Vec<f64> {
    softmax_forward(v, &[v.len()], 0)
}

/// Concatenate two row-major tensors along `axis`. Shapes must agree on all
/// other axes.
pub fn concat_forward<T: Scalar>(a: &[T], b: &[T], shape_a: &[usize], shape_b: &[usize], axis: usize) -> Vec<T> {
    let inner: usize = shape_a[axis + 1..].iter().product();
    let outer: usize = shape_a[..axis].iter().product();
    let block_a = shape_a[axis] * inner;
    let block_b = shape_b[axis] * inner;
    let mut out = vec![T::zero(); a.len() + b.len()];
    for o in 0..outer {
        let dst = &mut out[o * (block_a + block_b)..][..block_a + block_b];
        dst[..block_a].copy_from_slice(&a[o * block_a..][..block_a]);
        dst[block_a..].copy_from_slice(&b[o * block_b..][..block_b]);
    }
    out
}

/// Split a concat gradient back into the two input gradients.
pub fn concat_backward<T: Scalar>(
    dout: &[T],
    shape_a: &[usize],
    shape_b: &[usize],
    axis: usize,
) -> (Vec<T>, Vec<T>) {
    let inner: usize = shape_a[axis + 1..].iter().product();
    let outer: usize = shape_a[..axis].iter().product();
    let block_a = shape_a[axis] * inner;
    let block_b = shape_b[axis] * inner;
    let mut da = vec![T::zero(); outer * block_a];
    let mut db = vec![T::zero(); outer * block_b];
    for o in 0..outer {
        let src = &dout[o * (block_a + block_b)..][..block_a + block_b];
        da[o * block_a..][..block_a].copy_from_slice(&src[..block_a]);
        db[o * block_b..][..block_b].copy_from_slice(&src[block_a..]);
    }
    (da, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_out_dims_match_formula() {
        assert_eq!(conv_out_dim(288, 7, 4, 3), 72);
        assert_eq!(conv_out_dim(3, 1, 1, 0), 3);
        assert_eq!(conv_out_dim(8, 3, 1, 1), 8);
        assert_eq!(conv_out_dim(9, 2, 2, 0), 4);
    }

    #[test]
    fn valid_range_clamps_padding() {
        // k=3 pad=1 stride=1 on dim 5 -> out 5; k_off 0 misses input row -1
        assert_eq!(valid_out_range(5, 5, 0, 1, 1), (1, 5));
        assert_eq!(valid_out_range(5, 5, 1, 1, 1), (0, 5));
        assert_eq!(valid_out_range(5, 5, 2, 1, 1), (0, 4));
    }

    #[test]
    fn conv_identity_kernel_is_identity() {
        let input: Vec<f64> = (0..9).map(|v| v as f64 * 0.3 - 1.0).collect();
        let mut weight = vec![0.0f64; 9];
        weight[4] = 1.0; // center of the 3x3 kernel
        let out = conv2d_forward(&input, &weight, &[0.0], 1, 1, 3, 3, 1, 3, 3, 1, 1);
        assert_eq!(out, input);
    }

    #[test]
    fn conv_scalar_kernel_scales() {
        let input = vec![1.0f64; 9];
        let out = conv2d_forward(&input, &[2.0], &[0.0], 1, 1, 3, 3, 1, 1, 1, 1, 0);
        assert_eq!(out, vec![2.0; 9]);
    }

    #[test]
    fn maxpool_takes_max_and_first_argmax() {
        let input = vec![1.0f64, 2.0, 3.0, 4.0];
        let (out, arg) = maxpool2d_forward(&input, 1, 1, 2, 2, 2, 2);
        assert_eq!(out, vec![4.0]);
        assert_eq!(arg, vec![3]);

        let tied = vec![5.0f64, 5.0, 5.0, 5.0];
        let (_, arg) = maxpool2d_forward(&tied, 1, 1, 2, 2, 2, 2);
        assert_eq!(arg, vec![0], "ties must resolve to the first index");
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu_forward(&[-1.0f64, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn smooth_l1_piecewise_values() {
        let (zero, _) = smooth_l1_forward(&[0.7f64], &[0.7]);
        assert_eq!(zero, 0.0);
        let (quad, _) = smooth_l1_forward(&[0.5f64], &[0.0]);
        assert!((quad - 0.125).abs() < 1e-12);
        let (lin, _) = smooth_l1_forward(&[2.0f64], &[0.0]);
        assert!((lin - 1.5).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let out = softmax_forward(&[1.0f64, 2.0, 3.0, -1.0, 0.0, 1.0], &[2, 3], 1);
        let r0: f64 = out[..3].iter().sum();
        let r1: f64 = out[3..].iter().sum();
        assert!((r0 - 1.0).abs() < 1e-12);
        assert!((r1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concat_on_axis1_interleaves_rows() {
        let a = vec![1.0f64, 2.0, 3.0, 4.0]; // [2,2]
        let b = vec![9.0f64, 8.0]; // [2,1]
        let out = concat_forward(&a, &b, &[2, 2], &[2, 1], 1);
        assert_eq!(out, vec![1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
        let (da, db) = concat_backward(&out, &[2, 2], &[2, 1], 1);
        assert_eq!(da, a);
        assert_eq!(db, b);
    }
}
