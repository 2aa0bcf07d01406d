//! Deterministic parallel matrix multiply.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

/// Row-block size for the parallel matmul. Fixed (independent of thread
/// count) so results are bit-identical across runs and machines.
const ROW_BLOCK: usize = 512;

/// `a (m,k) . b (k,n) -> (m,n)`, parallel over fixed row blocks of `a`.
///
/// Each output row is produced by exactly one sequential `dot`, so the
/// result does not depend on how blocks are scheduled.
pub fn matmul_par(a: ArrayView2<f32>, b: ArrayView2<f32>) -> Array2<f32> {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "matmul dimension mismatch: {k} vs {k2}");
    let mut out = Array2::zeros((m, n));
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    if m <= ROW_BLOCK {
        out.assign(&a.dot(&b));
        return out;
    }
    let a_blocks: Vec<ArrayView2<f32>> = a.axis_chunks_iter(Axis(0), ROW_BLOCK).collect();
    let out_blocks: Vec<_> = out.axis_chunks_iter_mut(Axis(0), ROW_BLOCK).collect();
    a_blocks
        .into_par_iter()
        .zip(out_blocks)
        .for_each(|(ab, mut ob)| {
            ob.assign(&ab.dot(&b));
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_serial_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Array::from_shape_fn((1200, 37), |_| rng.gen_range(-1.0f32..1.0));
        let b = Array::from_shape_fn((37, 23), |_| rng.gen_range(-1.0f32..1.0));
        let par = matmul_par(a.view(), b.view());
        let serial = a.dot(&b);
        for (x, y) in par.iter().zip(serial.iter()) {
            assert!((x - y).abs() <= 1e-4 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Array::from_shape_fn((2048, 64), |_| rng.gen_range(-1.0f32..1.0));
        let b = Array::from_shape_fn((64, 48), |_| rng.gen_range(-1.0f32..1.0));
        let r1 = matmul_par(a.view(), b.view());
        let r2 = matmul_par(a.view(), b.view());
        assert_eq!(r1, r2);
    }
}
