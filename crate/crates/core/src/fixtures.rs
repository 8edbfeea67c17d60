//! Masks shared by unit tests.

use crate::lattice::{DigitSet, Dilation, Lattice, Point};
use crate::scalar::cre;
use crate::scale_matrix::Mask;

pub fn d4() -> Mask<f64> {
    let s = 3f64.sqrt();
    Mask::from_1d(
        0,
        &[
            (1.0 + s) / 4.0,
            (3.0 + s) / 4.0,
            (3.0 - s) / 4.0,
            (1.0 - s) / 4.0,
        ],
        2,
    )
    .unwrap()
}

pub fn haar() -> Mask<f64> {
    Mask::from_1d(0, &[1.0, 1.0], 2).unwrap()
}

/// `(1/3, 2/3, 2/3, 1/3)`: eigenvalue 1/3 carries a Jordan block.
pub fn one_third() -> Mask<f64> {
    Mask::from_1d(0, &[1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0], 2).unwrap()
}

pub fn quincunx_haar() -> Mask<f64> {
    let a = Dilation::from_rows(&[vec![1, 1], vec![-1, 1]]).unwrap();
    let d = DigitSet::new(vec![Point(vec![0, 0]), Point(vec![1, 0])], &a).unwrap();
    let coeffs: Vec<_> = d.digits().iter().map(|p| (p.clone(), cre(1.0))).collect();
    Mask::new(coeffs, a, Lattice::standard(2), d).unwrap()
}
