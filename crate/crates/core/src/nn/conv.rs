//! 2D convolution primitives via im2col + gemm, with TensorFlow-style
//! 'same' zero padding: output height is ceil(H / stride).
//!
//! The transposed convolution in `layer.rs` reuses these three primitives
//! with the roles of input and output gradient swapped.

use super::tensor::Scalar;

/// Geometry of one conv: `C` in-channels, `F` out-channels, kernel
/// (kh, kw), stride (sh, sw), input spatial (h, w).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub c: usize,
    pub f: usize,
    pub kh: usize,
    pub kw: usize,
    pub sh: usize,
    pub sw: usize,
    pub h: usize,
    pub w: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        self.h.div_ceil(self.sh)
    }

    pub fn out_w(&self) -> usize {
        self.w.div_ceil(self.sw)
    }

    /// Leading padding along (y, x) under the 'same' rule.
    fn pad(&self) -> (isize, isize) {
        let pt = ((self.out_h() - 1) * self.sh + self.kh)
            .saturating_sub(self.h) as isize
            / 2;
        let pl = ((self.out_w() - 1) * self.sw + self.kw)
            .saturating_sub(self.w) as isize
            / 2;
        (pt, pl)
    }

    fn col_rows(&self) -> usize {
        self.c * self.kh * self.kw
    }
}

/// Gathers input patches: `col[(c,ki,kj), (oy,ox)]` for one batch item.
fn im2col<T: Scalar>(g: &ConvGeom, x: &[T], col: &mut [T]) {
    let (pt, pl) = g.pad();
    let (oh, ow) = (g.out_h(), g.out_w());
    debug_assert_eq!(x.len(), g.c * g.h * g.w);
    debug_assert_eq!(col.len(), g.col_rows() * oh * ow);
    let mut r = 0;
    for c in 0..g.c {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                for oy in 0..oh {
                    let y = (oy * g.sh) as isize - pt + ki as isize;
                    let dst = &mut col[(r * oh + oy) * ow..(r * oh + oy + 1) * ow];
                    if y < 0 || y >= g.h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let row = &plane[y as usize * g.w..(y as usize + 1) * g.w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let xx = (ox * g.sw) as isize - pl + kj as isize;
                        *d = if xx < 0 || xx >= g.w as isize {
                            T::zero()
                        } else {
                            row[xx as usize]
                        };
                    }
                }
                r += 1;
            }
        }
    }
}

/// Scatter-adds a column matrix back onto the input layout.
fn col2im<T: Scalar>(g: &ConvGeom, col: &[T], x: &mut [T]) {
    let (pt, pl) = g.pad();
    let (oh, ow) = (g.out_h(), g.out_w());
    let mut r = 0;
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                for oy in 0..oh {
                    let y = (oy * g.sh) as isize - pt + ki as isize;
                    if y < 0 || y >= g.h as isize {
                        continue;
                    }
                    let src = &col[(r * oh + oy) * ow..(r * oh + oy + 1) * ow];
                    let base = c * g.h * g.w + y as usize * g.w;
                    for (ox, &v) in src.iter().enumerate() {
                        let xx = (ox * g.sw) as isize - pl + kj as isize;
                        if xx >= 0 && xx < g.w as isize {
                            x[base + xx as usize] += v;
                        }
                    }
                }
                r += 1;
            }
        }
    }
}

/// Forward conv for a batch: `x` is [B, C, H, W] flat, `w` is
/// [F, C*kh*kw], `y` is [B, F, out_h, out_w] flat. `bias` has length F.
pub fn conv_forward<T: Scalar>(g: &ConvGeom, x: &[T], w: &[T], bias: &[T], y: &mut [T]) {
    let items = x.len() / (g.c * g.h * g.w);
    let (oh, ow) = (g.out_h(), g.out_w());
    let mut col = vec![T::zero(); g.col_rows() * oh * ow];
    for b in 0..items {
        let xb = &x[b * g.c * g.h * g.w..(b + 1) * g.c * g.h * g.w];
        let yb = &mut y[b * g.f * oh * ow..(b + 1) * g.f * oh * ow];
        im2col(g, xb, &mut col);
        T::gemm(
            g.f,
            g.col_rows(),
            oh * ow,
            T::one(),
            w,
            false,
            &col,
            false,
            T::zero(),
            yb,
        );
        for f in 0..g.f {
            let off = f * oh * ow;
            for v in &mut yb[off..off + oh * ow] {
                *v += bias[f];
            }
        }
    }
}

/// Input gradient: `dy` is [B, F, oh, ow], result added into `dx`
/// ([B, C, H, W], zero-initialized by the caller).
pub fn conv_backward_input<T: Scalar>(g: &ConvGeom, dy: &[T], w: &[T], dx: &mut [T]) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let items = dy.len() / (g.f * oh * ow);
    let mut col = vec![T::zero(); g.col_rows() * oh * ow];
    for b in 0..items {
        let dyb = &dy[b * g.f * oh * ow..(b + 1) * g.f * oh * ow];
        let dxb = &mut dx[b * g.c * g.h * g.w..(b + 1) * g.c * g.h * g.w];
        // col = W^T [ckk, F] * dy [F, oh*ow]
        T::gemm(
            g.col_rows(),
            g.f,
            oh * ow,
            T::one(),
            w,
            true,
            dyb,
            false,
            T::zero(),
            &mut col,
        );
        col2im(g, &col, dxb);
    }
}

/// Weight and bias gradients, accumulated over the batch into `dw`
/// ([F, C*kh*kw], zero-initialized) and `dbias` (length F).
pub fn conv_backward_weights<T: Scalar>(
    g: &ConvGeom,
    x: &[T],
    dy: &[T],
    dw: &mut [T],
    dbias: &mut [T],
) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let items = x.len() / (g.c * g.h * g.w);
    let mut col = vec![T::zero(); g.col_rows() * oh * ow];
    for b in 0..items {
        let xb = &x[b * g.c * g.h * g.w..(b + 1) * g.c * g.h * g.w];
        let dyb = &dy[b * g.f * oh * ow..(b + 1) * g.f * oh * ow];
        im2col(g, xb, &mut col);
        // dW += dy [F, oh*ow] * col^T [oh*ow, ckk]
        T::gemm(
            g.f,
            oh * ow,
            g.col_rows(),
            T::one(),
            dyb,
            false,
            &col,
            true,
            T::one(),
            dw,
        );
        for f in 0..g.f {
            let off = f * oh * ow;
            let mut s = T::zero();
            for &v in &dyb[off..off + oh * ow] {
                s += v;
            }
            dbias[f] += s;
        }
    }
}
