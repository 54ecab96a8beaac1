//! Orthogonal weight initialization.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::real::Real;
use crate::tensor::Tensor;

/// Fills a weight tensor with a scaled (semi-)orthogonal matrix.
///
/// The tensor is viewed as `shape[0]` rows by `prod(shape[1..])` columns.
/// When there are fewer rows than columns the rows are orthonormal,
/// otherwise the columns are. The result is multiplied by `gain`.
pub fn orthogonal<T: Real, R: Rng + ?Sized>(shape: &[usize], gain: f64, rng: &mut R) -> Tensor<T> {
    let rows = shape.first().copied().unwrap_or(1);
    let cols: usize = shape.iter().skip(1).product();
    // Work on a tall matrix `tall_rows x tall_cols` with tall_rows >= tall_cols.
    let (tall_rows, tall_cols) = if rows < cols { (cols, rows) } else { (rows, cols) };
    let mut q: Vec<f64> = (0..tall_rows * tall_cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    modified_gram_schmidt(&mut q, tall_rows, tall_cols);
    let mut data = vec![T::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = if rows < cols {
                q[c * tall_cols + r]
            } else {
                q[r * tall_cols + c]
            };
            data[r * cols + c] = T::of_f64(gain * v);
        }
    }
    Tensor::from_vec(shape, data).expect("shape and data agree")
}

/// Orthonormalizes the columns of a row-major `rows x cols` matrix in place.
fn modified_gram_schmidt(m: &mut [f64], rows: usize, cols: usize) {
    for j in 0..cols {
        for p in 0..j {
            let dot: f64 = (0..rows).map(|r| m[r * cols + p] * m[r * cols + j]).sum();
            for r in 0..rows {
                m[r * cols + j] -= dot * m[r * cols + p];
            }
        }
        let norm = (0..rows).map(|r| m[r * cols + j].powi(2)).sum::<f64>().sqrt();
        // A Gaussian column is linearly dependent with probability zero.
        for r in 0..rows {
            m[r * cols + j] /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gram(t: &Tensor<f64>, by_rows: bool) -> Vec<Vec<f64>> {
        let rows = t.shape()[0];
        let cols = t.len() / rows;
        let d = t.data();
        let n = if by_rows { rows } else { cols };
        let len = if by_rows { cols } else { rows };
        let at = |v: usize, i: usize| if by_rows { d[v * cols + i] } else { d[i * cols + v] };
        (0..n)
            .map(|a| (0..n).map(|b| (0..len).map(|i| at(a, i) * at(b, i)).sum()).collect())
            .collect()
    }

    #[test]
    fn wide_matrices_have_orthonormal_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t: Tensor<f64> = orthogonal(&[8, 2, 3, 3], 2.0f64.sqrt(), &mut rng);
        let g = gram(&t, true);
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { 2.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tall_matrices_have_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t: Tensor<f64> = orthogonal(&[12, 5], 1.0, &mut rng);
        let g = gram(&t, false);
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_row_is_a_scaled_unit_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t: Tensor<f64> = orthogonal(&[1, 512], 0.01, &mut rng);
        let norm = t.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 0.01).abs() < 1e-12);
    }
}
