//! Minimal dense linear algebra: row-major matrices and a Cholesky solve for
//! the symmetric positive-definite stage matrices of the implicit schemes.
//!
//! Dimensions stay in the low thousands (3n+|V| slots at n <= 400), where a
//! plain dense factorization is simpler and fast enough; no sparse path.

use crate::math;
use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(math::abs(v)))
    }
}

/// In-place Cholesky factorization (lower triangle). Fails with the pivot
/// index if the matrix is not numerically positive definite.
pub fn cholesky_in_place(m: &mut DenseMatrix) -> Result<(), usize> {
    let n = m.n;
    for j in 0..n {
        let mut diag = m.get(j, j);
        for k in 0..j {
            let l = m.get(j, k);
            diag -= l * l;
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(j);
        }
        let diag = math::sqrt(diag);
        m.set(j, j, diag);
        let inv = 1.0 / diag;
        for i in (j + 1)..n {
            let mut v = m.get(i, j);
            // dot of rows i and j up to column j
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                v -= m.data[ri + k] * m.data[rj + k];
            }
            m.set(i, j, v * inv);
        }
    }
    Ok(())
}

/// Solve `L L^T x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(chol: &DenseMatrix, b: &mut [f64]) {
    let n = chol.n;
    // forward: L y = b
    for i in 0..n {
        let mut v = b[i];
        let row = i * n;
        for k in 0..i {
            v -= chol.data[row + k] * b[k];
        }
        b[i] = v / chol.data[row + i];
    }
    // backward: L^T x = y
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= chol.data[k * n + i] * b[k];
        }
        b[i] = v / chol.data[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = M^T M + I is SPD
        let n = 5;
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let m = ((i * 7 + j * 3) % 11) as f64 / 11.0;
                a.add(i, j, m);
            }
        }
        let mut spd = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    acc += a.get(k, i) * a.get(k, j);
                }
                spd.set(i, j, acc);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let mut b = vec![0.0; n];
        spd.matvec(&x_true, &mut b);

        let mut chol = spd.clone();
        cholesky_in_place(&mut chol).unwrap();
        cholesky_solve(&chol, &mut b);
        for (xi, bi) in x_true.iter().zip(b.iter()) {
            assert_relative_eq!(xi, bi, epsilon = 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut m = DenseMatrix::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, -1.0);
        assert!(cholesky_in_place(&mut m).is_err());
    }
}
