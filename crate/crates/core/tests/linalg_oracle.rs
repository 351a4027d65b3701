//! The in-crate SVD and pseudo-inverses against nalgebra.

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use ndarray::Array2;
use proptest::prelude::*;

use etc_core::linalg::{left_inverse, right_inverse, Svd};

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn matrix() -> impl Strategy<Value = Array2<f64>> {
    (1usize..=7, 1usize..=7).prop_flat_map(|(m, n)| {
        proptest::collection::vec(-3.0f64..3.0, m * n).prop_map(move |v| Array2::from_shape_vec((m, n), v).unwrap())
    })
}

proptest! {
    #[test]
    fn singular_values_match(a in matrix()) {
        let ours = Svd::new(a.view());
        let mut theirs: Vec<f64> = to_nalgebra(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        prop_assert_eq!(ours.s.len(), theirs.len());
        for (x, y) in ours.s.iter().zip(&theirs) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + y), "{} vs {}", x, y);
        }
        let rebuilt = ours.u.dot(&Array2::from_diag(&ours.s)).dot(&ours.v.t());
        for (x, y) in rebuilt.iter().zip(a.iter()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn pseudo_inverses_match(a in matrix()) {
        let na = to_nalgebra(&a);
        let smallest = na.singular_values().min();
        prop_assume!(smallest > 1e-3);
        let theirs = na.pseudo_inverse(1e-12).unwrap();
        let ours = if a.nrows() >= a.ncols() {
            left_inverse(a.view(), 1e-9).unwrap()
        } else {
            right_inverse(a.view(), 1e-9).unwrap()
        };
        prop_assert_eq!(ours.dim(), (theirs.nrows(), theirs.ncols()));
        for i in 0..ours.nrows() {
            for j in 0..ours.ncols() {
                prop_assert!((ours[[i, j]] - theirs[(i, j)]).abs() < 1e-7 * (1.0 + theirs[(i, j)].abs()));
            }
        }
    }
}

#[test]
fn rank_deficient_left_inverse_is_rejected() {
    let a = Array2::from_shape_vec((3, 2), vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
    assert!(left_inverse(a.view(), 1e-6).is_err());
    let s = Svd::new(a.view());
    assert_abs_diff_eq!(s.min_singular_value(), 0.0, epsilon = 1e-12);
}
