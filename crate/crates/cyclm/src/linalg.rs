//! Small dense linear algebra: an in-place Cholesky factorization sized for
//! the exact-covariance sampler (matrices up to 4096²) and closed-form 2×2
//! symmetric eigenstructure for confidence ellipses.

use crate::error::{Error, Result};

/// In-place lower Cholesky of a symmetric positive-definite matrix stored
/// row-major in `a` (n×n). On return the lower triangle holds L (A = L·Lᵀ)
/// and the strict upper triangle is zeroed. Fails on a non-positive pivot.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    assert_eq!(a.len(), n * n, "matrix buffer has wrong length");
    for j in 0..n {
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &mut head[j * n..j * n + j + 1];
        let mut d = row_j[j];
        for k in 0..j {
            d -= row_j[k] * row_j[k];
        }
        if !(d > 0.0) {
            return Err(Error::Factorization(format!(
                "non-positive pivot {d:.3e} at column {j} of {n}; matrix is not \
                 numerically positive definite"
            )));
        }
        let ljj = d.sqrt();
        row_j[j] = ljj;
        let inv = 1.0 / ljj;
        let row_j = &head[j * n..j * n + j];
        for i in j + 1..n {
            let row_i = &mut tail[(i - j - 1) * n..(i - j - 1) * n + j + 1];
            let mut s = row_i[j];
            for k in 0..j {
                s -= row_i[k] * row_j[k];
            }
            row_i[j] = s * inv;
        }
    }
    // zero the strict upper triangle so the factor can be used directly
    for i in 0..n {
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// y = L·z for a lower-triangular L stored row-major (n×n).
pub fn lower_triangular_matvec(l: &[f64], n: usize, z: &[f64], y: &mut [f64]) {
    assert_eq!(z.len(), n);
    assert_eq!(y.len(), n);
    for i in 0..n {
        let row = &l[i * n..i * n + i + 1];
        let mut acc = 0.0;
        for k in 0..=i {
            acc += row[k] * z[k];
        }
        y[i] = acc;
    }
}

/// Eigenstructure of a symmetric 2×2 matrix [[a, b], [b, c]]:
/// returns ((λ₁, v₁), (λ₂, v₂)) with λ₁ ≥ λ₂ and unit eigenvectors.
pub fn sym2_eigen(a: f64, b: f64, c: f64) -> ((f64, [f64; 2]), (f64, [f64; 2])) {
    let mean = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l1 = mean + disc;
    let l2 = mean - disc;
    let v1 = if b.abs() > 1e-300 {
        normalize([l1 - c, b])
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    // orthogonal complement
    let v2 = [-v1[1], v1[0]];
    ((l1, v1), (l2, v2))
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}
