//! 2-D convolution and its transpose, forward and backward.
//!
//! Both operators use "same" padding of `(kernel - 1) / 2` on every side,
//! which keeps a stride-1 output at the input size and makes a stride-`s`
//! convolution shrink each spatial dim to `ceil(dim / s)`. The transpose
//! operator is *defined* as the adjoint of the strided convolution with the
//! same weights: its output is exactly `stride` times larger, and for zero
//! biases `<conv(x), y> == <x, deconv(y)>` holds to rounding error. That
//! definition is what makes an encoder stage and its mirrored decoder stage
//! exact spatial inverses.
//!
//! Weight layouts (row-major, kernel row before kernel column):
//!   convolution:  `(out_c, in_c, k, k)`
//!   transpose:    `(in_c, out_c, k, k)`
//! so the adjoint pair shares one flat buffer unchanged.

use super::tensor::Tensor;

/// Gradients produced by a backward pass.
pub struct ConvGrads {
    /// Gradient with respect to the layer input, same shape as the input.
    pub input: Tensor,
    /// Gradient with respect to the flat weight buffer.
    pub weight: Vec<f64>,
    /// Gradient with respect to the per-output-channel bias.
    pub bias: Vec<f64>,
}

/// Spatial size of a strided same-padded convolution output.
pub fn conv_out_dim(in_dim: usize, kernel: usize, stride: usize) -> usize {
    let pad = (kernel - 1) / 2;
    (in_dim + 2 * pad - kernel) / stride + 1
}

/// Inclusive output-position range `[lo, hi]` where `o*stride + k - pad`
/// stays inside `[0, in_limit)`, clamped to `[0, out_len)`. `None` if empty.
fn span(k: usize, pad: usize, stride: usize, in_limit: usize, out_len: usize) -> Option<(usize, usize)> {
    let lo = if k >= pad { 0 } else { (pad - k).div_ceil(stride) };
    if in_limit + pad < k + 1 {
        return None;
    }
    let hi = ((in_limit - 1 + pad - k) / stride).min(out_len.wrapping_sub(1));
    if out_len == 0 || lo > hi {
        None
    } else {
        Some((lo, hi))
    }
}

fn check_geometry(small: &Tensor, big: &Tensor, weight: &[f64], kernel: usize, stride: usize) {
    assert!(kernel % 2 == 1 && kernel >= 1, "kernel must be odd, got {kernel}");
    assert!(stride >= 1, "stride must be at least 1");
    assert_eq!(small.n(), big.n(), "batch size mismatch");
    assert_eq!(
        (small.h(), small.w()),
        (
            conv_out_dim(big.h(), kernel, stride),
            conv_out_dim(big.w(), kernel, stride)
        ),
        "spatial dims inconsistent with kernel {kernel} stride {stride}"
    );
    assert_eq!(
        weight.len(),
        small.c() * big.c() * kernel * kernel,
        "weight length mismatch"
    );
}

/// `small[n, a, oy, ox] += sum_b,ky,kx big[n, b, oy*s+ky-p, ox*s+kx-p] * w[a, b, ky, kx]`
///
/// The contraction behind a convolution forward pass and a transpose
/// backward-by-input pass.
fn gather(small: &mut Tensor, big: &Tensor, weight: &[f64], kernel: usize, stride: usize) {
    check_geometry(small, big, weight, kernel, stride);
    let pad = (kernel - 1) / 2;
    let (h_out, w_out) = (small.h(), small.w());
    let (h_in, w_in) = (big.h(), big.w());
    for n in 0..small.n() {
        for a in 0..small.c() {
            for b in 0..big.c() {
                for ky in 0..kernel {
                    let Some((oy_lo, oy_hi)) = span(ky, pad, stride, h_in, h_out) else {
                        continue;
                    };
                    for kx in 0..kernel {
                        let Some((ox_lo, ox_hi)) = span(kx, pad, stride, w_in, w_out) else {
                            continue;
                        };
                        let w = weight[((a * big.c() + b) * kernel + ky) * kernel + kx];
                        if w == 0.0 {
                            continue;
                        }
                        for oy in oy_lo..=oy_hi {
                            let iy = oy * stride + ky - pad;
                            let src = big.row(n, b, iy);
                            let start = small.index(n, a, oy, 0);
                            let dst = &mut small.data[start..start + w_out];
                            if stride == 1 {
                                let s0 = ox_lo + kx - pad;
                                let src = &src[s0..s0 + (ox_hi - ox_lo + 1)];
                                for (d, s) in dst[ox_lo..=ox_hi].iter_mut().zip(src) {
                                    *d += w * s;
                                }
                            } else {
                                for ox in ox_lo..=ox_hi {
                                    dst[ox] += w * src[ox * stride + kx - pad];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `big[n, b, oy*s+ky-p, ox*s+kx-p] += sum_a small[n, a, oy, ox] * w[a, b, ky, kx]`
///
/// The adjoint of [`gather`]: a transpose-convolution forward pass and a
/// convolution backward-by-input pass.
fn scatter(big: &mut Tensor, small: &Tensor, weight: &[f64], kernel: usize, stride: usize) {
    check_geometry(small, big, weight, kernel, stride);
    let pad = (kernel - 1) / 2;
    let (h_out, w_out) = (small.h(), small.w());
    let (h_in, w_in) = (big.h(), big.w());
    for n in 0..small.n() {
        for a in 0..small.c() {
            for b in 0..big.c() {
                for ky in 0..kernel {
                    let Some((oy_lo, oy_hi)) = span(ky, pad, stride, h_in, h_out) else {
                        continue;
                    };
                    for kx in 0..kernel {
                        let Some((ox_lo, ox_hi)) = span(kx, pad, stride, w_in, w_out) else {
                            continue;
                        };
                        let w = weight[((a * big.c() + b) * kernel + ky) * kernel + kx];
                        if w == 0.0 {
                            continue;
                        }
                        for oy in oy_lo..=oy_hi {
                            let iy = oy * stride + ky - pad;
                            let src = small.row(n, a, oy);
                            let start = big.index(n, b, iy, 0);
                            let dst = &mut big.data[start..start + w_in];
                            if stride == 1 {
                                let d0 = ox_lo + kx - pad;
                                let dst = &mut dst[d0..d0 + (ox_hi - ox_lo + 1)];
                                for (d, s) in dst.iter_mut().zip(&src[ox_lo..=ox_hi]) {
                                    *d += w * s;
                                }
                            } else {
                                for ox in ox_lo..=ox_hi {
                                    dst[ox * stride + kx - pad] += w * src[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `gw[a, b, ky, kx] += sum_n,oy,ox small[n, a, oy, ox] * big[n, b, oy*s+ky-p, ox*s+kx-p]`
///
/// Weight gradient shared by both operators; only the roles of `small` and
/// `big` differ between them.
fn weight_grad(gw: &mut [f64], small: &Tensor, big: &Tensor, kernel: usize, stride: usize) {
    check_geometry(small, big, gw, kernel, stride);
    let pad = (kernel - 1) / 2;
    let (h_out, w_out) = (small.h(), small.w());
    let (h_in, w_in) = (big.h(), big.w());
    for n in 0..small.n() {
        for a in 0..small.c() {
            for b in 0..big.c() {
                for ky in 0..kernel {
                    let Some((oy_lo, oy_hi)) = span(ky, pad, stride, h_in, h_out) else {
                        continue;
                    };
                    for kx in 0..kernel {
                        let Some((ox_lo, ox_hi)) = span(kx, pad, stride, w_in, w_out) else {
                            continue;
                        };
                        let mut acc = 0.0;
                        for oy in oy_lo..=oy_hi {
                            let iy = oy * stride + ky - pad;
                            let srow = small.row(n, a, oy);
                            let brow = big.row(n, b, iy);
                            if stride == 1 {
                                let b0 = ox_lo + kx - pad;
                                let brow = &brow[b0..b0 + (ox_hi - ox_lo + 1)];
                                for (s, bv) in srow[ox_lo..=ox_hi].iter().zip(brow) {
                                    acc += s * bv;
                                }
                            } else {
                                for ox in ox_lo..=ox_hi {
                                    acc += srow[ox] * brow[ox * stride + kx - pad];
                                }
                            }
                        }
                        gw[((a * big.c() + b) * kernel + ky) * kernel + kx] += acc;
                    }
                }
            }
        }
    }
}

/// Per-channel sum over batch and both spatial axes.
fn channel_sums(t: &Tensor) -> Vec<f64> {
    let mut out = vec![0.0; t.c()];
    for n in 0..t.n() {
        for c in 0..t.c() {
            out[c] += t.plane(n, c).iter().sum::<f64>();
        }
    }
    out
}

/// Strided same-padded convolution. `weight` is `(out_c, in_c, k, k)` flat,
/// `bias` one value per output channel. Output is
/// `(n, out_c, ceil(h/s), ceil(w/s))`.
pub fn conv_forward(
    input: &Tensor,
    weight: &[f64],
    bias: &[f64],
    out_c: usize,
    kernel: usize,
    stride: usize,
) -> Tensor {
    assert_eq!(bias.len(), out_c, "bias length mismatch");
    let h = conv_out_dim(input.h(), kernel, stride);
    let w = conv_out_dim(input.w(), kernel, stride);
    let mut out = Tensor::zeros(input.n(), out_c, h, w);
    for n in 0..out.n() {
        for c in 0..out_c {
            out.plane_mut(n, c).fill(bias[c]);
        }
    }
    gather(&mut out, input, weight, kernel, stride);
    out
}

/// Gradients of [`conv_forward`] given the upstream gradient at its output.
pub fn conv_backward(
    input: &Tensor,
    weight: &[f64],
    out_c: usize,
    kernel: usize,
    stride: usize,
    grad_out: &Tensor,
) -> ConvGrads {
    assert_eq!(grad_out.c(), out_c, "grad_out channel mismatch");
    let mut grad_input = Tensor::zeros(input.n(), input.c(), input.h(), input.w());
    scatter(&mut grad_input, grad_out, weight, kernel, stride);
    let mut gw = vec![0.0; weight.len()];
    weight_grad(&mut gw, grad_out, input, kernel, stride);
    ConvGrads {
        input: grad_input,
        weight: gw,
        bias: channel_sums(grad_out),
    }
}

/// Transpose convolution: the adjoint of the stride-`s` convolution with the
/// same flat weights. `weight` is `(in_c, out_c, k, k)` flat, `bias` one value
/// per output channel. Output is `(n, out_c, h*s, w*s)`.
pub fn deconv_forward(
    input: &Tensor,
    weight: &[f64],
    bias: &[f64],
    out_c: usize,
    kernel: usize,
    stride: usize,
) -> Tensor {
    assert_eq!(bias.len(), out_c, "bias length mismatch");
    let mut out = Tensor::zeros(input.n(), out_c, input.h() * stride, input.w() * stride);
    for n in 0..out.n() {
        for c in 0..out_c {
            out.plane_mut(n, c).fill(bias[c]);
        }
    }
    scatter(&mut out, input, weight, kernel, stride);
    out
}

/// Gradients of [`deconv_forward`] given the upstream gradient at its output.
pub fn deconv_backward(
    input: &Tensor,
    weight: &[f64],
    out_c: usize,
    kernel: usize,
    stride: usize,
    grad_out: &Tensor,
) -> ConvGrads {
    assert_eq!(grad_out.c(), out_c, "grad_out channel mismatch");
    let mut grad_input = Tensor::zeros(input.n(), input.c(), input.h(), input.w());
    gather(&mut grad_input, grad_out, weight, kernel, stride);
    let mut gw = vec![0.0; weight.len()];
    weight_grad(&mut gw, input, grad_out, kernel, stride);
    ConvGrads {
        input: grad_input,
        weight: gw,
        bias: channel_sums(grad_out),
    }
}
