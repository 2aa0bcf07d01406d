//! Strided 1-D convolution kernels with "same"-style padding.
//!
//! Only the downsampling direction is implemented directly; transposed
//! convolution is its exact adjoint, which both guarantees shape
//! round-trips (`out_len * stride == in_len`) and makes the backward pass
//! of one direction the forward pass of the other.

use ndarray::{s, Array1, Array2, Array3, ArrayView3, Axis};
use rayon::prelude::*;

use super::linalg::matmul_par;

/// Geometry of a strided same-padded convolution from `in_len` down to
/// `ceil(in_len / stride)` positions. Total padding is split with the
/// smaller half on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamePad1d {
    pub in_len: usize,
    pub out_len: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad_left: usize,
}

impl SamePad1d {
    pub fn new(in_len: usize, kernel: usize, stride: usize) -> Self {
        assert!(in_len > 0 && kernel > 0 && stride > 0);
        let out_len = in_len.div_ceil(stride);
        let span = (out_len - 1) * stride + kernel;
        let pad_total = span.saturating_sub(in_len);
        SamePad1d {
            in_len,
            out_len,
            kernel,
            stride,
            pad_left: pad_total / 2,
        }
    }
}

/// Gathers padded input windows into a `(batch * out_len, in_ch * kernel)`
/// matrix. Out-of-range taps read as zero.
fn im2col(x: ArrayView3<f32>, geom: &SamePad1d) -> Array2<f32> {
    let (batch, in_ch, in_len) = x.dim();
    debug_assert_eq!(in_len, geom.in_len);
    let k = geom.kernel;
    let mut col = Array2::zeros((batch * geom.out_len, in_ch * k));
    let rows: Vec<_> = col.axis_chunks_iter_mut(Axis(0), geom.out_len).collect();
    x.outer_iter().zip(rows).par_bridge().for_each(|(xb, mut cb)| {
        for t in 0..geom.out_len {
            let start = (t * geom.stride) as isize - geom.pad_left as isize;
            let mut row = cb.row_mut(t);
            for c in 0..in_ch {
                let src = xb.row(c);
                let src = src.as_slice().expect("contiguous channel");
                let dst = &mut row.as_slice_mut().expect("contiguous row")[c * k..(c + 1) * k];
                for (j, d) in dst.iter_mut().enumerate() {
                    let idx = start + j as isize;
                    *d = if idx >= 0 && (idx as usize) < geom.in_len {
                        src[idx as usize]
                    } else {
                        0.0
                    };
                }
            }
        }
    });
    col
}

/// Scatter-adds a column-matrix gradient back onto the input signal;
/// the exact adjoint of [`im2col`].
fn col2im(col: &Array2<f32>, batch: usize, in_ch: usize, geom: &SamePad1d) -> Array3<f32> {
    let k = geom.kernel;
    debug_assert_eq!(col.dim(), (batch * geom.out_len, in_ch * k));
    let mut x = Array3::zeros((batch, in_ch, geom.in_len));
    let cols: Vec<_> = col.axis_chunks_iter(Axis(0), geom.out_len).collect();
    x.outer_iter_mut()
        .zip(cols)
        .par_bridge()
        .for_each(|(mut xb, cb)| {
            for t in 0..geom.out_len {
                let start = (t * geom.stride) as isize - geom.pad_left as isize;
                let row = cb.row(t);
                let row = row.as_slice().expect("contiguous row");
                for c in 0..in_ch {
                    let mut dst = xb.row_mut(c);
                    let dst = dst.as_slice_mut().expect("contiguous channel");
                    for (j, &v) in row[c * k..(c + 1) * k].iter().enumerate() {
                        let idx = start + j as isize;
                        if idx >= 0 && (idx as usize) < geom.in_len {
                            dst[idx as usize] += v;
                        }
                    }
                }
            }
        });
    x
}

/// Forward convolution. `x (batch, in_ch, in_len)`, `w (out_ch, in_ch, k)`,
/// optional per-channel bias; result `(batch, out_ch, out_len)`.
pub fn conv1d_forward(
    x: ArrayView3<f32>,
    w: &Array3<f32>,
    b: Option<&Array1<f32>>,
    geom: &SamePad1d,
) -> Array3<f32> {
    let (batch, in_ch, _) = x.dim();
    let (out_ch, w_in_ch, k) = w.dim();
    assert_eq!(in_ch, w_in_ch, "input channels do not match weights");
    assert_eq!(k, geom.kernel);
    let col = im2col(x, geom);
    let w_flat = w.view().into_shape_with_order((out_ch, in_ch * k)).unwrap();
    // (batch*out_len, in_ch*k) . (in_ch*k, out_ch)
    let y_flat = matmul_par(col.view(), w_flat.t());
    let mut y = Array3::zeros((batch, out_ch, geom.out_len));
    for bi in 0..batch {
        for t in 0..geom.out_len {
            let src = y_flat.row(bi * geom.out_len + t);
            for c in 0..out_ch {
                y[(bi, c, t)] = src[c];
            }
        }
    }
    if let Some(bias) = b {
        assert_eq!(bias.len(), out_ch);
        for mut ch in y.axis_iter_mut(Axis(1)) {
            // axis 1 iteration yields (batch, out_len) per channel
            let _ = &mut ch;
        }
        for bi in 0..batch {
            for c in 0..out_ch {
                let bv = bias[c];
                let mut lane = y.slice_mut(s![bi, c, ..]);
                lane.mapv_inplace(|v| v + bv);
            }
        }
    }
    y
}

/// Gradient w.r.t. the convolution input: `dy (batch, out_ch, out_len)`
/// back to `(batch, in_ch, in_len)`. Also the forward map of the
/// transposed convolution.
pub fn conv1d_input_grad(
    dy: ArrayView3<f32>,
    w: &Array3<f32>,
    geom: &SamePad1d,
) -> Array3<f32> {
    let (batch, out_ch, out_len) = dy.dim();
    let (w_out_ch, in_ch, k) = w.dim();
    assert_eq!(out_ch, w_out_ch);
    assert_eq!(out_len, geom.out_len);
    let dy_flat = flatten_channels_last(dy);
    let w_flat = w.view().into_shape_with_order((out_ch, in_ch * k)).unwrap();
    // (batch*out_len, out_ch) . (out_ch, in_ch*k)
    let col_grad = matmul_par(dy_flat.view(), w_flat);
    col2im(&col_grad, batch, in_ch, geom)
}

/// Gradient w.r.t. the convolution weights and bias.
pub fn conv1d_weight_grad(
    dy: ArrayView3<f32>,
    x: ArrayView3<f32>,
    geom: &SamePad1d,
) -> (Array3<f32>, Array1<f32>) {
    let (batch, out_ch, out_len) = dy.dim();
    let (_, in_ch, _) = x.dim();
    assert_eq!(out_len, geom.out_len);
    let col = im2col(x, geom);
    let dy_flat = flatten_channels_last(dy);
    // (in_ch*k, batch*out_len) . (batch*out_len, out_ch): output columns are
    // disjoint per row block, keeping the parallel sum deterministic.
    let wg_t = matmul_par(col.t(), dy_flat.view());
    let k = geom.kernel;
    let mut wg = Array3::zeros((out_ch, in_ch, k));
    for o in 0..out_ch {
        for i in 0..in_ch {
            for j in 0..k {
                wg[(o, i, j)] = wg_t[(i * k + j, o)];
            }
        }
    }
    let mut bg = Array1::zeros(out_ch);
    for bi in 0..batch {
        for c in 0..out_ch {
            bg[c] += dy.slice(s![bi, c, ..]).sum();
        }
    }
    (wg, bg)
}

/// Reorders `(batch, ch, len)` into a `(batch*len, ch)` matrix.
fn flatten_channels_last(v: ArrayView3<f32>) -> Array2<f32> {
    let (batch, ch, len) = v.dim();
    let mut out = Array2::zeros((batch * len, ch));
    for bi in 0..batch {
        for c in 0..ch {
            let lane = v.slice(s![bi, c, ..]);
            for t in 0..len {
                out[(bi * len + t, c)] = lane[t];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Naive f64 reference convolution, written independently of the
    /// im2col path.
    fn conv_ref(x: &Array3<f32>, w: &Array3<f32>, b: &Array1<f32>, geom: &SamePad1d) -> Array3<f64> {
        let (batch, in_ch, in_len) = x.dim();
        let (out_ch, _, k) = w.dim();
        let mut y = Array3::<f64>::zeros((batch, out_ch, geom.out_len));
        for bi in 0..batch {
            for o in 0..out_ch {
                for t in 0..geom.out_len {
                    let mut acc = b[o] as f64;
                    for i in 0..in_ch {
                        for j in 0..k {
                            let idx = (t * geom.stride + j) as isize - geom.pad_left as isize;
                            if idx >= 0 && (idx as usize) < in_len {
                                acc += x[(bi, i, idx as usize)] as f64 * w[(o, i, j)] as f64;
                            }
                        }
                    }
                    y[(bi, o, t)] = acc;
                }
            }
        }
        y
    }

    fn rand_array3(rng: &mut ChaCha8Rng, dim: (usize, usize, usize)) -> Array3<f32> {
        Array::from_shape_fn(dim, |_| rng.gen_range(-1.0f32..1.0))
    }

    #[test]
    fn geometry_matches_expected_lengths() {
        // stride 4, kernel 25: the canonical down-sampling step.
        let g = SamePad1d::new(32768, 25, 4);
        assert_eq!(g.out_len, 8192);
        assert_eq!(g.pad_left, 10);
        // stride 2 final stage of the two-second critic
        let g2 = SamePad1d::new(32, 25, 2);
        assert_eq!(g2.out_len, 16);
    }

    #[test]
    fn forward_matches_naive_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for &(in_len, k, s, in_ch, out_ch) in
            &[(64usize, 25usize, 4usize, 3usize, 5usize), (37, 7, 3, 2, 4), (16, 25, 2, 4, 2)]
        {
            let geom = SamePad1d::new(in_len, k, s);
            let x = rand_array3(&mut rng, (2, in_ch, in_len));
            let w = rand_array3(&mut rng, (out_ch, in_ch, k));
            let b = Array::from_shape_fn(out_ch, |_| rng.gen_range(-0.5f32..0.5));
            let y = conv1d_forward(x.view(), &w, Some(&b), &geom);
            let y_ref = conv_ref(&x, &w, &b, &geom);
            assert_eq!(y.dim(), (2, out_ch, geom.out_len));
            for (a, r) in y.iter().zip(y_ref.iter()) {
                assert!((*a as f64 - r).abs() < 1e-4, "{a} vs {r}");
            }
        }
    }

    #[test]
    fn input_grad_is_adjoint_of_forward() {
        // <dy, conv(x)> == <input_grad(dy), x> for bias-free conv.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let geom = SamePad1d::new(48, 9, 4);
        let x = rand_array3(&mut rng, (3, 2, 48));
        let w = rand_array3(&mut rng, (4, 2, 9));
        let dy = rand_array3(&mut rng, (3, 4, geom.out_len));
        let y = conv1d_forward(x.view(), &w, None, &geom);
        let dx = conv1d_input_grad(dy.view(), &w, &geom);
        let lhs: f64 = dy.iter().zip(y.iter()).map(|(a, b)| *a as f64 * *b as f64).sum();
        let rhs: f64 = dx.iter().zip(x.iter()).map(|(a, b)| *a as f64 * *b as f64).sum();
        assert!((lhs - rhs).abs() < 1e-3 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn weight_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let geom = SamePad1d::new(20, 5, 2);
        let x = rand_array3(&mut rng, (2, 2, 20));
        let mut w = rand_array3(&mut rng, (3, 2, 5));
        let dy = rand_array3(&mut rng, (2, 3, geom.out_len));
        let (wg, bg) = conv1d_weight_grad(dy.view(), x.view(), &geom);

        let loss = |w: &Array3<f32>, b: &Array1<f32>| -> f64 {
            let y = conv1d_forward(x.view(), w, Some(b), &geom);
            y.iter().zip(dy.iter()).map(|(a, d)| *a as f64 * *d as f64).sum()
        };
        let b = Array1::zeros(3);
        let eps = 1e-2f32;
        for idx in [(0, 0, 0), (1, 1, 2), (2, 0, 4)] {
            let mut wp = w.clone();
            wp[idx] += eps;
            let mut wm = w.clone();
            wm[idx] -= eps;
            let fd = (loss(&wp, &b) - loss(&wm, &b)) / (2.0 * eps as f64);
            assert!(
                (fd - wg[idx] as f64).abs() < 1e-2 * (1.0 + fd.abs()),
                "fd {fd} vs analytic {}",
                wg[idx]
            );
        }
        // Bias gradient is the plain sum of dy per channel.
        for o in 0..3 {
            let mut bp = b.clone();
            bp[o] += eps;
            let fd = (loss(&w, &bp) - loss(&w, &b)) / eps as f64;
            assert!((fd - bg[o] as f64).abs() < 1e-2 * (1.0 + fd.abs()));
        }
        w[(0, 0, 0)] += 0.0; // keep w mutable-used
    }
}
