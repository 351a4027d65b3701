//! Small dense linear algebra: thin SVD (one-sided Jacobi), Moore–Penrose
//! inverses and the matrix norms used by the diagnostics.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `a = u * diag(s) * v^T`.
///
/// For an `m x n` input, `u` is `m x r`, `s` has length `r` and `v` is `n x r`
/// with `r = min(m, n)`. Singular values are sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Array2<T>,
    pub s: Array1<T>,
    pub v: Array2<T>,
}

impl<T: Real> Svd<T> {
    pub fn new(a: ArrayView2<'_, T>) -> Self {
        let (m, n) = a.dim();
        if m >= n {
            jacobi_tall(a)
        } else {
            let t = jacobi_tall(a.t());
            Svd { u: t.v, s: t.s, v: t.u }
        }
    }

    pub fn min_singular_value(&self) -> T {
        self.s.iter().copied().fold(T::infinity(), T::min)
    }

    /// Number of singular values above `tol`.
    pub fn rank(&self, tol: T) -> usize {
        self.s.iter().filter(|&&x| x > tol).count()
    }
}

// One-sided Jacobi (Hestenes) on the columns of a tall matrix.
fn jacobi_tall<T: Real>(a: ArrayView2<'_, T>) -> Svd<T> {
    let (m, n) = a.dim();
    let mut u = a.to_owned();
    let mut v = Array2::<T>::eye(n);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    let up = u[[i, p]];
                    let uq = u[[i, q]];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[[i, p]];
                    let uq = u[[i, q]];
                    u[[i, p]] = c * up - s * uq;
                    u[[i, q]] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp - s * vq;
                    v[[i, q]] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<T> = (0..n)
        .map(|j| u.column(j).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    for (j, &sj) in sigma.iter().enumerate() {
        if sj > T::zero() {
            u.column_mut(j).mapv_inplace(|x| x / sj);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let u_sorted = u.select(Axis(1), &order);
    let v_sorted = v.select(Axis(1), &order);
    sigma = order.iter().map(|&i| sigma[i]).collect();

    Svd {
        u: u_sorted,
        s: Array1::from(sigma),
        v: v_sorted,
    }
}

/// Smallest singular value as a measure of full column rank: zero for a
/// wide matrix, which can never have independent columns.
pub fn column_rank_margin<T: Real>(a: ArrayView2<'_, T>) -> T {
    if a.nrows() < a.ncols() {
        T::zero()
    } else {
        Svd::new(a).min_singular_value()
    }
}

/// Left inverse of a matrix with full column rank, `(A^T A)^{-1} A^T`, computed
/// through the SVD as `V diag(1/s) U^T`.
///
/// Fails with [`Error::RankDeficient`] when the smallest singular value is
/// below `sv_floor` (or when `A` is wide).
pub fn left_inverse<T: Real>(a: ArrayView2<'_, T>, sv_floor: T) -> Result<Array2<T>> {
    let (m, n) = a.dim();
    if m < n {
        return Err(Error::RankDeficient {
            sigma_min: 0.0,
            floor: sv_floor.as_f64(),
        });
    }
    let svd = Svd::new(a);
    let smin = svd.min_singular_value();
    if !(smin >= sv_floor) {
        return Err(Error::RankDeficient {
            sigma_min: smin.as_f64(),
            floor: sv_floor.as_f64(),
        });
    }
    Ok(pinv_from_svd(&svd))
}

/// Right inverse of a matrix with full row rank, `A^T (A A^T)^{-1}`.
pub fn right_inverse<T: Real>(a: ArrayView2<'_, T>, sv_floor: T) -> Result<Array2<T>> {
    Ok(left_inverse(a.t(), sv_floor)?.reversed_axes())
}

fn pinv_from_svd<T: Real>(svd: &Svd<T>) -> Array2<T> {
    let mut vs = svd.v.clone();
    for (j, &sj) in svd.s.iter().enumerate() {
        vs.column_mut(j).mapv_inplace(|x| x / sj);
    }
    vs.dot(&svd.u.t())
}

/// Induced 1→1 norm: maximum absolute column sum.
pub fn norm_1_to_1<T: Real>(a: ArrayView2<'_, T>) -> T {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// Entrywise ℓ1 norm (sum of absolute entries).
pub fn entrywise_l1<T: Real>(a: ArrayView2<'_, T>) -> T {
    a.iter().map(|x| x.abs()).sum()
}

pub fn max_abs<'a, T: Real>(it: impl IntoIterator<Item = &'a T>) -> T {
    it.into_iter().map(|x| x.abs()).fold(T::zero(), T::max)
}

/// `max |a - b|` over matching entries.
pub fn max_abs_diff<T: Real>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), T::max)
}

pub fn l1_diff<T: Real>(a: &Array1<T>, b: &Array1<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn svd_reconstructs() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.5], [0.0, -1.0]];
        let svd = Svd::new(a.view());
        let mut us = svd.u.clone();
        for (j, &s) in svd.s.iter().enumerate() {
            us.column_mut(j).mapv_inplace(|x| x * s);
        }
        let rec = us.dot(&svd.v.t());
        assert!(max_abs_diff(rec.view(), a.view()) < 1e-12);
        assert!(svd.s[0] >= svd.s[1]);
    }

    #[test]
    fn svd_of_wide_matrix() {
        let a = array![[1.0, 0.0, 2.0], [0.0, 3.0, 1.0]];
        let svd = Svd::new(a.view());
        assert_eq!(svd.u.dim(), (2, 2));
        assert_eq!(svd.v.dim(), (3, 2));
        let mut us = svd.u.clone();
        for (j, &s) in svd.s.iter().enumerate() {
            us.column_mut(j).mapv_inplace(|x| x * s);
        }
        assert!(max_abs_diff(us.dot(&svd.v.t()).view(), a.view()) < 1e-12);
    }

    #[test]
    fn identity_left_inverse_is_identity() {
        let i = Array2::<f64>::eye(3);
        let p = left_inverse(i.view(), 1e-6).unwrap();
        assert!(max_abs_diff(p.view(), i.view()) < 1e-15);
    }

    #[test]
    fn duplicated_columns_are_rank_deficient() {
        let a = array![[0.5, 0.5], [0.5, 0.5], [0.0, 0.0]];
        match left_inverse(a.view(), 1e-6) {
            Err(Error::RankDeficient { sigma_min, .. }) => assert!(sigma_min < 1e-6),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn right_inverse_of_wide() {
        let a = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let r = right_inverse(a.view(), 1e-9).unwrap();
        let prod = a.dot(&r);
        assert!(max_abs_diff(prod.view(), Array2::eye(2).view()) < 1e-12);
    }

    #[test]
    fn norms() {
        let a = array![[1.0, -2.0], [-3.0, 0.5]];
        assert_eq!(norm_1_to_1(a.view()), 4.0);
        assert_eq!(entrywise_l1(a.view()), 6.5);
    }

    #[test]
    fn works_in_single_precision() {
        let a = array![[2.0f32, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let p = left_inverse(a.view(), 1e-6).unwrap();
        assert!((p[[0, 0]] - 0.5).abs() < 1e-6);
        assert!((p[[1, 1]] - 1.0).abs() < 1e-6);
    }
}
