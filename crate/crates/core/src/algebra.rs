//! Pointwise ring interface shared by plain fields and truncated time series.
//!
//! Curvature formulas are written once against [`Scalar`]; instantiating them
//! with [`ScalarField`](crate::field::ScalarField) gives ordinary grid
//! curvature, instantiating them with [`SeriesField`](crate::jets::SeriesField)
//! gives the curvature of a metric that is a power series in `t`.

use crate::chart::Chart;
use crate::error::Result;

/// Square matrix of ring elements, `m[row][col]`.
pub type Mat<T> = Vec<Vec<T>>;

pub trait Scalar: Clone {
    fn chart(&self) -> &Chart;
    fn constant_like(&self, c: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    /// Derivative along the chart's frame vector `e_axis` (zero for invariant fields).
    fn frame_derivative(&self, axis: usize) -> Self;
    /// Pointwise inverse of a symmetric positive-definite matrix.
    fn invert_metric(g: &Mat<Self>) -> Result<Mat<Self>>;

    fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    fn add_scaled(&self, other: &Self, c: f64) -> Self {
        self.add(&other.scale(c))
    }
}

pub fn sum<T: Scalar>(terms: impl IntoIterator<Item = T>, like: &T) -> T {
    terms
        .into_iter()
        .fold(None, |acc: Option<T>, t| {
            Some(match acc {
                None => t,
                Some(a) => a.add(&t),
            })
        })
        .unwrap_or_else(|| like.zero_like())
}

pub fn mat_map<T: Scalar>(a: &Mat<T>, f: impl Fn(&T) -> T) -> Mat<T> {
    a.iter().map(|row| row.iter().map(&f).collect()).collect()
}

/// Entry-wise map into a different ring.
pub fn mat_map_to<T, U>(a: &[Vec<T>], f: impl Fn(&T) -> U) -> Vec<Vec<U>> {
    a.iter().map(|row| row.iter().map(&f).collect()).collect()
}

pub fn mat_zip<T: Scalar>(a: &Mat<T>, b: &Mat<T>, f: impl Fn(&T, &T) -> T) -> Mat<T> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| f(x, y)).collect())
        .collect()
}

pub fn mat_add<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    mat_zip(a, b, T::add)
}

pub fn mat_sub<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    mat_zip(a, b, T::sub)
}

pub fn mat_scale<T: Scalar>(a: &Mat<T>, c: f64) -> Mat<T> {
    mat_map(a, |x| x.scale(c))
}

/// Multiplies every entry by the ring element `s`.
pub fn mat_mul_scalar<T: Scalar>(a: &Mat<T>, s: &T) -> Mat<T> {
    mat_map(a, |x| x.mul(s))
}

pub fn mat_mul<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let n = a.len();
    let like = &a[0][0];
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| sum((0..n).map(|k| a[i][k].mul(&b[k][j])), like))
                .collect()
        })
        .collect()
}

pub fn mat_vec<T: Scalar>(a: &Mat<T>, v: &[T]) -> Vec<T> {
    let like = &a[0][0];
    a.iter()
        .map(|row| sum(row.iter().zip(v).map(|(x, y)| x.mul(y)), like))
        .collect()
}

pub fn transpose<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].clone()).collect()).collect()
}

pub fn trace<T: Scalar>(a: &Mat<T>) -> T {
    sum((0..a.len()).map(|i| a[i][i].clone()), &a[0][0])
}

/// `tr(a b)`
pub fn trace_product<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> T {
    let n = a.len();
    sum(
        (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .map(|(i, k)| a[i][k].mul(&b[k][i])),
        &a[0][0],
    )
}

pub fn identity_like<T: Scalar>(like: &T, n: usize) -> Mat<T> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| like.constant_like(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect()
}

pub fn symmetrize<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    let t = transpose(a);
    mat_map(&mat_add(a, &t), |x| x.scale(0.5))
}
