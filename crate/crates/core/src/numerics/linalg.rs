use num_complex::Complex64;

use super::ComplexMatrix;
use crate::{Error, Result};

/// Relative pivot size below which a matrix is treated as singular.
const PIVOT_THRESHOLD: f64 = 1e-14;

/// Solves `A·X = B` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, expected {}",
            b.rows(),
            a.rows()
        )));
    }
    let n = a.rows();
    let m = b.cols();
    let threshold = PIVOT_THRESHOLD * a.max_abs();
    let mut lu = a.clone();
    let mut x = b.clone();

    for col in 0..n {
        let (pivot_row, pivot_abs) =
            (col..n)
                .map(|r| (r, lu[(r, col)].norm()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_abs < threshold || pivot_abs == 0.0 {
            return Err(Error::SingularMatrix {
                pivot: pivot_abs,
                threshold,
            });
        }
        lu.swap_rows(col, pivot_row);
        x.swap_rows(col, pivot_row);

        let inv = lu[(col, col)].inv();
        for r in col + 1..n {
            let factor = lu[(r, col)] * inv;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = lu[(col, c)];
                lu[(r, c)] -= factor * v;
            }
            for c in 0..m {
                let v = x[(col, c)];
                x[(r, c)] -= factor * v;
            }
        }
    }

    for col in (0..n).rev() {
        let inv = lu[(col, col)].inv();
        for c in 0..m {
            let mut acc = x[(col, c)];
            for k in col + 1..n {
                acc -= lu[(col, k)] * x[(k, c)];
            }
            x[(col, c)] = acc * inv;
        }
    }
    Ok(x)
}

/// Numerical rank via elimination with full pivoting. Entries below
/// `rel_tol · max|m|` count as zero.
pub fn rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let mut w = m.clone();
    let (rows, cols) = (w.rows(), w.cols());
    let threshold = rel_tol * w.max_abs();
    if w.max_abs() == 0.0 {
        return 0;
    }
    let mut col_order: Vec<usize> = (0..cols).collect();
    let mut r = 0;
    while r < rows.min(cols) {
        let mut best = (r, r, -1.0);
        for i in r..rows {
            for (jj, &j) in col_order.iter().enumerate().skip(r) {
                let v = w[(i, j)].norm();
                if v > best.2 {
                    best = (i, jj, v);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        w.swap_rows(r, best.0);
        col_order.swap(r, best.1);
        let pc = col_order[r];
        let inv = w[(r, pc)].inv();
        for i in r + 1..rows {
            let factor = w[(i, pc)] * inv;
            for &j in &col_order[r..] {
                let v = w[(r, j)];
                w[(i, j)] -= factor * v;
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_returns_rhs() {
        let b = ComplexMatrix::from_rows(&[
            vec![c(1.0, 2.0), c(-3.0, 0.5)],
            vec![c(0.0, 1.0), c(4.0, 0.0)],
            vec![c(7.0, -7.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let x = solve_linear(&ComplexMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_case() {
        let a = ComplexMatrix::from_diag(&[c(2.0, 0.0), c(0.0, 1.0)]);
        let b = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0)], vec![c(0.0, 1.0)]]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert!((x[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn permutation_inverts_itself() {
        let p = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let x = solve_linear(&p, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(x, p);
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        let err = solve_linear(&a, &ComplexMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn shape_errors() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            solve_linear(&a, &ComplexMatrix::identity(2)),
            Err(Error::DimensionMismatch(_))
        ));
        let a = ComplexMatrix::identity(2);
        assert!(matches!(
            solve_linear(&a, &ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(rank(&ComplexMatrix::identity(4), 1e-12), 4);
        assert_eq!(rank(&ComplexMatrix::zeros(3, 3), 1e-12), 0);
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(rank(&a, 1e-12), 1);
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(rank(&a, 1e-12), 2);
    }
}
