//! Dense symmetric eigensolver (cyclic Jacobi rotations).

/// Off-diagonal Frobenius norm at which iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Diagonalise a symmetric `n x n` matrix given in row-major order.
///
/// Panics if `matrix` is not square.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> SymmetricEigen {
    let n = matrix.len();
    assert!(matrix.iter().all(|row| row.len() == n), "matrix must be square");

    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) < JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                // Rotation angle zeroing a[p][q] (Golub & Van Loan, sym.schur2).
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (upper, lower) = a.split_at_mut(q);
                for (apk, aqk) in upper[p].iter_mut().zip(lower[0].iter_mut()) {
                    let (xp, xq) = (*apk, *aqk);
                    *apk = c * xp - s * xq;
                    *aqk = s * xp + c * xq;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));

    SymmetricEigen {
        values: order.iter().map(|&i| a[i][i]).collect(),
        vectors: order
            .iter()
            .map(|&col| v.iter().map(|row| row[col]).collect())
            .collect(),
    }
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i != j {
                sum += x * x;
            }
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let e = jacobi_eigen(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!(e.values[0].abs() < 1e-12);
        assert!((e.values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_and_empty() {
        let e = jacobi_eigen(&[vec![3.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(e.values, vec![-1.0, 3.0]);
        assert!(jacobi_eigen(&[]).values.is_empty());
    }

    #[test]
    fn residuals_small() {
        let m = vec![
            vec![4.0, 1.0, -2.0, 2.0],
            vec![1.0, 2.0, 0.0, 1.0],
            vec![-2.0, 0.0, 3.0, -2.0],
            vec![2.0, 1.0, -2.0, -1.0],
        ];
        let e = jacobi_eigen(&m);
        for (lambda, x) in e.values.iter().zip(&e.vectors) {
            let mut res = 0.0;
            for i in 0..4 {
                let mx: f64 = (0..4).map(|j| m[i][j] * x[j]).sum();
                res += (mx - lambda * x[i]).powi(2);
            }
            assert!(res.sqrt() < 1e-8, "residual {res}");
        }
        let trace: f64 = e.values.iter().sum();
        assert!((trace - 8.0).abs() < 1e-10);
    }
}
