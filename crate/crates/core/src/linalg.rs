//! Small dense linear algebra over reals and jets.

use crate::expr::Numeric;
use crate::jet::JetError;
use crate::scalar::Real;

pub type Vec4<T> = [T; 4];
pub type Mat4<T> = [[T; 4]; 4];

pub fn identity<T: Real>() -> Mat4<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn transpose<N: Copy>(m: &Mat4<N>) -> Mat4<N> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

pub fn mat_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn mat_vec<T: Real>(a: &Mat4<T>, v: &Vec4<T>) -> Vec4<T> {
    std::array::from_fn(|i| (0..4).map(|k| a[i][k] * v[k]).sum())
}

pub fn dot<T: Real>(a: &Vec4<T>, b: &Vec4<T>) -> T {
    (0..4).map(|i| a[i] * b[i]).sum()
}

/// `aᵀ G b`.
pub fn bilinear<T: Real>(g: &Mat4<T>, a: &Vec4<T>, b: &Vec4<T>) -> T {
    let mut s = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            s += a[i] * g[i][j] * b[j];
        }
    }
    s
}

/// Determinant of a real 4x4 matrix.
pub fn det<T: Real>(m: &Mat4<T>) -> T {
    invert_generic::<T, T>(m).map(|(_, d)| d).unwrap_or(T::zero())
}

/// Gauss–Jordan inversion with partial pivoting on the point value.
/// Returns the inverse and the determinant.
pub fn invert_generic<T: Real, N: Numeric<T>>(m: &Mat4<N>) -> Result<(Mat4<N>, N), JetError> {
    let zero = N::from_real(T::zero());
    let one = N::from_real(T::one());
    let mut a = *m;
    let mut inv: Mat4<N> =
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { one } else { zero }));
    let mut det = one;
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&r, &s| {
                a[r][col]
                    .real_value()
                    .abs()
                    .partial_cmp(&a[s][col].real_value().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[piv][col].real_value() == T::zero() || !a[piv][col].real_value().is_finite() {
            return Err(JetError::DivisionByZero);
        }
        if piv != col {
            a.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det = det * p;
        for j in 0..4 {
            a[col][j] = a[col][j].try_div(&p)?;
            inv[col][j] = inv[col][j].try_div(&p)?;
        }
        for r in 0..4 {
            if r == col {
                continue;
            }
            let f = a[r][col];
            for j in 0..4 {
                a[r][j] = a[r][j] - f * a[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    Ok((inv, det))
}

pub fn invert<T: Real>(m: &Mat4<T>) -> Option<(Mat4<T>, T)> {
    invert_generic::<T, T>(m).ok()
}

/// Cholesky factorization; `None` when the matrix is not positive definite.
pub fn cholesky<T: Real>(m: &Mat4<T>) -> Option<Mat4<T>> {
    let mut l = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// `a` is row-major `n x n`. Returns eigenvalues in ascending order and the
/// matching unit eigenvectors (`vecs[k]` is the k-th eigenvector).
pub fn sym_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<Vec<T>>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[i * n + i] * m[i * n + i];
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off <= eps * eps * diag * T::lit(1e-4) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[i * n + i]
            .partial_cmp(&m[j * n + j])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let vecs = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (vals, vecs)
}

/// Gram–Schmidt of the columns of `basis` in the inner product `g`
/// (columns are vectors; returns the orthonormalized columns).
pub fn gram_schmidt<T: Real>(g: &Mat4<T>, basis: &[Vec4<T>; 4]) -> Option<[Vec4<T>; 4]> {
    let mut out: [Vec4<T>; 4] = [[T::zero(); 4]; 4];
    for k in 0..4 {
        let mut v = basis[k];
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for j in 0..k {
                let c = bilinear(g, &out[j], &v);
                for i in 0..4 {
                    v[i] -= c * out[j][i];
                }
            }
        }
        let n2 = bilinear(g, &v, &v);
        if !(n2 > T::zero()) {
            return None;
        }
        let n = n2.sqrt();
        out[k] = std::array::from_fn(|i| v[i] / n);
    }
    Some(out)
}

/// Determinant of the matrix whose columns are the given vectors.
pub fn det_columns<T: Real>(cols: &[Vec4<T>; 4]) -> T {
    det(&transpose(cols))
}
