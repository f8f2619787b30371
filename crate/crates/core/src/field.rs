//! Scalar and tensor fields on a chart, with pointwise algebra.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{self, Mat, Scalar};
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::spectral;

/// Real function sampled on every point of a chart.
#[derive(Clone, Debug)]
pub struct ScalarField {
    chart: Arc<Chart>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(chart: Arc<Chart>, values: Vec<f64>) -> Result<Self> {
        if values.len() != chart.num_points() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a chart with {} points",
                values.len(),
                chart.num_points()
            )));
        }
        Ok(Self { chart, values })
    }

    pub fn constant(chart: &Arc<Chart>, c: f64) -> Self {
        Self {
            values: vec![c; chart.num_points()],
            chart: chart.clone(),
        }
    }

    /// Samples `f` at the chart's coordinates (the origin on frame charts).
    pub fn from_fn(chart: &Arc<Chart>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..chart.num_points()).map(|p| f(&chart.coordinates(p))).collect();
        Self {
            chart: chart.clone(),
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn chart_arc(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            chart: self.chart.clone(),
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            chart: self.chart.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Spectral `∂_axis`; frame charts are rejected.
    pub fn partial_derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.chart.dim() {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.chart.dim(),
            });
        }
        if !self.chart.is_grid() {
            return Err(Error::ConstantField);
        }
        Ok(Self {
            values: spectral::derivative(&self.chart, &self.values, axis),
            chart: self.chart.clone(),
        })
    }

    /// Keeps Fourier modes with `|k_d| <= kmax` on every axis; identity on frame charts.
    pub fn project_modes(&self, kmax: usize) -> Self {
        if !self.chart.is_grid() {
            return self.clone();
        }
        Self {
            values: spectral::project(&self.chart, &self.values, kmax),
            chart: self.chart.clone(),
        }
    }

    /// 2/3-rule truncation.
    pub fn dealias(&self) -> Self {
        self.project_modes(spectral::two_thirds_cutoff(self.chart.points_per_axis()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn value(&self, point: usize) -> f64 {
        self.values[point]
    }
}

impl Scalar for ScalarField {
    fn chart(&self) -> &Chart {
        &self.chart
    }

    fn constant_like(&self, c: f64) -> Self {
        Self::constant(&self.chart, c)
    }

    fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    fn scale(&self, c: f64) -> Self {
        self.map(|a| a * c)
    }

    fn frame_derivative(&self, axis: usize) -> Self {
        if self.chart.is_grid() {
            Self {
                values: spectral::derivative(&self.chart, &self.values, axis),
                chart: self.chart.clone(),
            }
        } else {
            self.zero_like()
        }
    }

    fn invert_metric(g: &Mat<Self>) -> Result<Mat<Self>> {
        let n = g.len();
        let chart = g[0][0].chart.clone();
        let points = chart.num_points();
        let mut out = vec![vec![vec![0.0; points]; n]; n];
        let mut m = vec![0.0; n * n];
        for p in 0..points {
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = g[i][j].values[p];
                }
            }
            let inv = spd_inverse(&m, n).map_err(|(minor, pivot)| Error::NotPositiveDefinite {
                index: chart.multi_index(p),
                minor,
                pivot,
            })?;
            for i in 0..n {
                for j in 0..n {
                    out[i][j][p] = inv[i * n + j];
                }
            }
        }
        Ok(out
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|values| ScalarField {
                        chart: chart.clone(),
                        values,
                    })
                    .collect()
            })
            .collect())
    }
}

/// Lower Cholesky factor of a row-major SPD matrix. On failure returns the
/// 1-based order of the failing leading minor and its pivot.
pub fn cholesky(m: &[f64], n: usize) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err((j + 1, d));
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for j in 0..n {
        inv[j * n + j] = 1.0 / l[j * n + j];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[i * n + k] * inv[k * n + j];
            }
            inv[i * n + j] = s / l[i * n + i];
        }
    }
    inv
}

pub fn spd_inverse(m: &[f64], n: usize) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let l = cholesky(m, n)?;
    let li = lower_inverse(&l, n);
    // m^-1 = L^-T L^-1
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in i.max(j)..n {
                s += li[k * n + i] * li[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
    Ok(out)
}

/// Tensor type of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rank {
    Scalar,
    OneForm,
    Vector,
    /// Symmetric covariant 2-tensor (`g`, `Ric`, `ġ`).
    Sym2Cov,
    /// Symmetric contravariant 2-tensor (`g^{-1}`).
    Sym2Contra,
    /// `A[i][j] = A^i_j`, so `A(∂_j) = A^i_j ∂_i`.
    Endomorphism,
}

impl Rank {
    pub fn num_components(self, n: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::OneForm | Rank::Vector => n,
            Rank::Sym2Cov | Rank::Sym2Contra | Rank::Endomorphism => n * n,
        }
    }

    pub fn is_matrix(self) -> bool {
        matches!(self, Rank::Sym2Cov | Rank::Sym2Contra | Rank::Endomorphism)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Rank::Scalar => "scalar",
            Rank::OneForm => "one-form",
            Rank::Vector => "vector",
            Rank::Sym2Cov => "sym-2-cov",
            Rank::Sym2Contra => "sym-2-contra",
            Rank::Endomorphism => "endomorphism",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "scalar" => Rank::Scalar,
            "one-form" => Rank::OneForm,
            "vector" => Rank::Vector,
            "sym-2-cov" => Rank::Sym2Cov,
            "sym-2-contra" => Rank::Sym2Contra,
            "endomorphism" => Rank::Endomorphism,
            other => return Err(Error::Parse(format!("unknown rank tag {other:?}"))),
        })
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Tensor field: one [`ScalarField`] per component, components row-major.
#[derive(Clone, Debug)]
pub struct Field {
    chart: Arc<Chart>,
    rank: Rank,
    comps: Vec<ScalarField>,
}

impl Field {
    pub fn new(chart: &Arc<Chart>, rank: Rank, comps: Vec<ScalarField>) -> Result<Self> {
        let expected = rank.num_components(chart.dim());
        if comps.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{rank} field on a {}-dimensional chart needs {expected} components, got {}",
                chart.dim(),
                comps.len()
            )));
        }
        if comps.iter().any(|c| *c.chart != **chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(Self {
            chart: chart.clone(),
            rank,
            comps,
        })
    }

    pub fn scalar(f: ScalarField) -> Self {
        Self {
            chart: f.chart.clone(),
            rank: Rank::Scalar,
            comps: vec![f],
        }
    }

    pub fn from_vector(rank: Rank, v: Vec<ScalarField>) -> Self {
        let chart = v[0].chart.clone();
        debug_assert_eq!(v.len(), rank.num_components(chart.dim()));
        Self { chart, rank, comps: v }
    }

    pub fn from_matrix(rank: Rank, m: Mat<ScalarField>) -> Self {
        let chart = m[0][0].chart.clone();
        debug_assert!(rank.is_matrix());
        Self {
            chart,
            rank,
            comps: m.into_iter().flatten().collect(),
        }
    }

    /// Space-constant field with the given row-major components.
    pub fn constant(chart: &Arc<Chart>, rank: Rank, values: &[f64]) -> Result<Self> {
        let comps = values.iter().map(|&v| ScalarField::constant(chart, v)).collect();
        Self::new(chart, rank, comps)
    }

    pub fn identity(chart: &Arc<Chart>, rank: Rank) -> Self {
        let n = chart.dim();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        Self::constant(chart, rank, &v).expect("identity has n*n components")
    }

    pub fn zeros(chart: &Arc<Chart>, rank: Rank) -> Self {
        let v = vec![0.0; rank.num_components(chart.dim())];
        Self::constant(chart, rank, &v).expect("component count from rank")
    }

    /// Samples a component-valued function; `f` returns row-major components.
    pub fn from_fn(chart: &Arc<Chart>, rank: Rank, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let nc = rank.num_components(chart.dim());
        let mut data = vec![vec![0.0; chart.num_points()]; nc];
        for p in 0..chart.num_points() {
            let v = f(&chart.coordinates(p));
            assert_eq!(v.len(), nc, "component function returned wrong length");
            for (c, x) in v.into_iter().enumerate() {
                data[c][p] = x;
            }
        }
        Self {
            chart: chart.clone(),
            rank,
            comps: data
                .into_iter()
                .map(|values| ScalarField {
                    chart: chart.clone(),
                    values,
                })
                .collect(),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[i * self.dim() + j]
    }

    pub fn as_scalar(&self) -> &ScalarField {
        &self.comps[0]
    }

    pub fn matrix(&self) -> Mat<ScalarField> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.comps[i * n + j].clone()).collect())
            .collect()
    }

    pub fn vector(&self) -> Vec<ScalarField> {
        self.comps.clone()
    }

    /// Row-major components at one point.
    pub fn at(&self, point: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c.values[point]).collect()
    }

    pub fn expect_rank(&self, rank: Rank) -> Result<()> {
        if self.rank != rank {
            return Err(Error::RankMismatch {
                expected: rank.tag().into(),
                found: self.rank.tag().into(),
            });
        }
        Ok(())
    }

    pub fn same_chart(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.chart, &other.chart) || *self.chart == *other.chart {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            chart: self.chart.clone(),
            rank: self.rank,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn with_rank(mut self, rank: Rank) -> Self {
        debug_assert_eq!(rank.num_components(self.dim()), self.rank.num_components(self.dim()));
        self.rank = rank;
        self
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().map(ScalarField::sup_norm).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }

    /// `max |a_ij - a_ji|` for matrix-valued fields.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.rank.is_matrix() {
            return 0.0;
        }
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max(self.get(i, j).sub(self.get(j, i)).sup_norm());
            }
        }
        worst
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        pointwise_algebra(self, Some(other), PointwiseOp::Add, Dealias::Off)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        pointwise_algebra(self, Some(other), PointwiseOp::Sub, Dealias::Off)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map_components(|x| x.scale(c))
    }

    /// `self + c * other` without rank checks; used by integrators.
    pub fn add_scaled(&self, other: &Field, c: f64) -> Field {
        Self {
            chart: self.chart.clone(),
            rank: self.rank,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.zip_map(b, |x, y| x + c * y))
                .collect(),
        }
    }

    pub fn project_modes(&self, kmax: usize) -> Field {
        self.map_components(|c| c.project_modes(kmax))
    }
}

/// Component-wise spectral derivative along a grid axis.
pub fn partial_derivative(field: &Field, axis: usize) -> Result<Field> {
    let comps = field
        .comps
        .iter()
        .map(|c| c.partial_derivative(axis))
        .collect::<Result<Vec<_>>>()?;
    Ok(Field {
        chart: field.chart.clone(),
        rank: field.rank,
        comps,
    })
}

/// Pointwise inverse of a metric.
pub fn metric_inverse(g: &Field) -> Result<Field> {
    g.expect_rank(Rank::Sym2Cov)?;
    let inv = ScalarField::invert_metric(&g.matrix())?;
    Ok(Field::from_matrix(Rank::Sym2Contra, inv))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointwiseOp {
    Add,
    Sub,
    Scale(f64),
    /// Full contraction of matching slots (`tr(AB)`, `ω(X)`, `A(X)`, `B(X,·)`).
    Contract,
    /// Trace of an endomorphism, or `tr_g` of a 2-tensor when `b` is the metric.
    Trace,
    /// Index raising with the metric `b`.
    Raise,
    /// Index lowering with the metric `b`.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    Off,
    /// 2/3-rule truncation of product inputs and output on grid charts.
    TwoThirds,
}

fn need_b(b: Option<&Field>, op: PointwiseOp) -> Result<&Field> {
    b.ok_or_else(|| Error::Precondition(format!("{op:?} needs a second operand")))
}

fn rank_err(a: &Field, b: &Field) -> Error {
    Error::RankMismatch {
        expected: a.rank.tag().into(),
        found: b.rank.tag().into(),
    }
}

/// Pointwise tensor algebra.
pub fn pointwise_algebra(a: &Field, b: Option<&Field>, op: PointwiseOp, dealias: Dealias) -> Result<Field> {
    if let Some(b) = b {
        a.same_chart(b)?;
    }
    let product = !matches!(op, PointwiseOp::Add | PointwiseOp::Sub | PointwiseOp::Scale(_));
    let filter = dealias == Dealias::TwoThirds && a.chart.is_grid() && product;
    let prep = |f: &Field| {
        if filter {
            f.map_components(ScalarField::dealias)
        } else {
            f.clone()
        }
    };
    let a = &prep(a);
    let b_owned = b.map(prep);
    let b = b_owned.as_ref();
    let out = match op {
        PointwiseOp::Add | PointwiseOp::Sub => {
            let b = need_b(b, op)?;
            if a.rank != b.rank {
                return Err(rank_err(a, b));
            }
            let f = if op == PointwiseOp::Add {
                ScalarField::add
            } else {
                ScalarField::sub
            };
            Field {
                chart: a.chart.clone(),
                rank: a.rank,
                comps: a.comps.iter().zip(&b.comps).map(|(x, y)| f(x, y)).collect(),
            }
        }
        PointwiseOp::Scale(c) => a.scale(c),
        PointwiseOp::Contract => {
            let b = need_b(b, op)?;
            contract(a, b)?
        }
        PointwiseOp::Trace => match (a.rank, b) {
            (Rank::Endomorphism, None) => Field::scalar(algebra::trace(&a.matrix())),
            (Rank::Sym2Cov, Some(g)) => {
                g.expect_rank(Rank::Sym2Cov)?;
                let ginv = ScalarField::invert_metric(&g.matrix())?;
                Field::scalar(algebra::trace_product(&ginv, &a.matrix()))
            }
            (Rank::Sym2Contra, Some(g)) => {
                g.expect_rank(Rank::Sym2Cov)?;
                Field::scalar(algebra::trace_product(&g.matrix(), &a.matrix()))
            }
            _ => {
                return Err(Error::RankMismatch {
                    expected: "endomorphism (or 2-tensor with metric)".into(),
                    found: a.rank.tag().into(),
                })
            }
        },
        PointwiseOp::Raise => {
            let g = need_b(b, op)?;
            g.expect_rank(Rank::Sym2Cov)?;
            let ginv = ScalarField::invert_metric(&g.matrix())?;
            match a.rank {
                Rank::OneForm => Field::from_vector(Rank::Vector, algebra::mat_vec(&ginv, &a.vector())),
                Rank::Sym2Cov => Field::from_matrix(Rank::Endomorphism, algebra::mat_mul(&ginv, &a.matrix())),
                _ => {
                    return Err(Error::RankMismatch {
                        expected: "one-form or sym-2-cov".into(),
                        found: a.rank.tag().into(),
                    })
                }
            }
        }
        PointwiseOp::Lower => {
            let g = need_b(b, op)?;
            g.expect_rank(Rank::Sym2Cov)?;
            match a.rank {
                Rank::Vector => Field::from_vector(Rank::OneForm, algebra::mat_vec(&g.matrix(), &a.vector())),
                Rank::Endomorphism => Field::from_matrix(Rank::Sym2Cov, algebra::mat_mul(&g.matrix(), &a.matrix())),
                _ => {
                    return Err(Error::RankMismatch {
                        expected: "vector or endomorphism".into(),
                        found: a.rank.tag().into(),
                    })
                }
            }
        }
    };
    Ok(if filter {
        out.map_components(ScalarField::dealias)
    } else {
        out
    })
}

fn contract(a: &Field, b: &Field) -> Result<Field> {
    use Rank::*;
    let n = a.dim();
    let like = &a.comps[0];
    Ok(match (a.rank, b.rank) {
        (Endomorphism, Endomorphism) => Field::scalar(algebra::trace_product(&a.matrix(), &b.matrix())),
        (OneForm, Vector) | (Vector, OneForm) => {
            Field::scalar(algebra::sum((0..n).map(|i| a.comps[i].mul(&b.comps[i])), like))
        }
        (Sym2Cov, Sym2Contra) | (Sym2Contra, Sym2Cov) => {
            Field::scalar(algebra::sum((0..n * n).map(|i| a.comps[i].mul(&b.comps[i])), like))
        }
        (Endomorphism, Vector) => Field::from_vector(Vector, algebra::mat_vec(&a.matrix(), &b.vector())),
        (Sym2Contra, OneForm) => Field::from_vector(Vector, algebra::mat_vec(&a.matrix(), &b.vector())),
        (Sym2Cov, Vector) => Field::from_vector(OneForm, algebra::mat_vec(&a.matrix(), &b.vector())),
        _ => return Err(rank_err(a, b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn grid(n: usize, points: usize) -> Arc<Chart> {
        Arc::new(Chart::grid(n, points).unwrap())
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let c = grid(1, 32);
        let f = ScalarField::from_fn(&c, |x| x[0].sin());
        let d = f.partial_derivative(0).unwrap();
        let exact = ScalarField::from_fn(&c, |x| x[0].cos());
        assert!(d.sub(&exact).sup_norm() <= 1e-12);

        let f3 = ScalarField::from_fn(&c, |x| (3.0 * x[0]).sin());
        let exact3 = ScalarField::from_fn(&c, |x| 3.0 * (3.0 * x[0]).cos());
        assert!(f3.partial_derivative(0).unwrap().sub(&exact3).sup_norm() <= 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let c = grid(3, 8);
        let f = ScalarField::constant(&c, 2.5);
        for axis in 0..3 {
            assert!(f.partial_derivative(axis).unwrap().sup_norm() <= 1e-14);
        }
    }

    #[test]
    fn frame_charts_reject_partial_derivative() {
        let c = Arc::new(Chart::su2(crate::chart::Su2Model::Left));
        let f = Field::identity(&c, Rank::Sym2Cov);
        assert!(matches!(partial_derivative(&f, 0), Err(Error::ConstantField)));
        assert!(matches!(
            ScalarField::constant(&grid(2, 8), 1.0).partial_derivative(2),
            Err(Error::AxisOutOfRange { .. })
        ));
    }

    #[test]
    fn inverse_of_simple_metrics() {
        let c = grid(3, 4);
        let id = Field::identity(&c, Rank::Sym2Cov);
        let inv = metric_inverse(&id).unwrap();
        assert!(inv.sub(&Field::identity(&c, Rank::Sym2Contra)).unwrap().sup_norm() == 0.0);

        let g = Field::constant(&c, Rank::Sym2Cov, &[4.0, 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let inv = metric_inverse(&g).unwrap();
        assert_eq!(inv.at(5), vec![0.25, 0., 0., 0., 1., 0., 0., 0., 1.]);
    }

    #[test]
    fn inverse_of_conformal_metric_at_random_points() {
        use rand::{Rng, SeedableRng};
        let c = grid(3, 16);
        let phi = |x: &[f64]| 1.0 + 0.1 * x[0].sin();
        let g = Field::from_fn(&c, Rank::Sym2Cov, |x| {
            let s = phi(x);
            vec![s, 0., 0., 0., s, 0., 0., 0., s]
        });
        let inv = metric_inverse(&g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let p = rng.gen_range(0..c.num_points());
            let r = 1.0 / phi(&c.coordinates(p));
            let v = inv.at(p);
            for i in 0..3 {
                for j in 0..3 {
                    let e = if i == j { r } else { 0.0 };
                    assert!((v[i * 3 + j] - e).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn non_positive_metric_names_point_and_minor() {
        let c = grid(2, 4);
        let g = Field::from_fn(&c, Rank::Sym2Cov, |x| {
            let d = if x[0] > 3.0 && x[1] < 0.1 { -1.0 } else { 1.0 };
            vec![1.0, 0.0, 0.0, d]
        });
        match metric_inverse(&g) {
            Err(Error::NotPositiveDefinite { index, minor, .. }) => {
                assert_eq!(index, vec![2, 0]);
                assert_eq!(minor, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trace_and_contraction() {
        let c = grid(3, 4);
        let id = Field::identity(&c, Rank::Endomorphism);
        let tr = pointwise_algebra(&id, None, PointwiseOp::Trace, Dealias::Off).unwrap();
        assert_eq!(tr.as_scalar().values()[0], 3.0);
        let w = Field::constant(&c, Rank::Endomorphism, &[1., 0., 0., 0., 2., 0., 0., 0., 3.]).unwrap();
        let ww = pointwise_algebra(&w, Some(&w), PointwiseOp::Contract, Dealias::Off).unwrap();
        assert_eq!(ww.as_scalar().values()[7], 14.0);
    }

    #[test]
    fn rank_and_chart_mismatch() {
        let c = grid(2, 4);
        let a = Field::identity(&c, Rank::Sym2Cov);
        let v = Field::zeros(&c, Rank::Vector);
        assert!(matches!(a.add(&v), Err(Error::RankMismatch { .. })));
        let other = Field::identity(&grid(2, 8), Rank::Sym2Cov);
        assert!(matches!(a.add(&other), Err(Error::ChartMismatch)));
    }

    #[test]
    fn dealiased_product_drops_high_modes() {
        let c = grid(1, 16);
        let a = Field::scalar(ScalarField::from_fn(&c, |x| (4.0 * x[0]).cos()));
        let one = Field::scalar(ScalarField::constant(&c, 1.0));
        let v = Field::from_vector(Rank::Vector, vec![a.as_scalar().clone()]);
        let w = Field::from_vector(Rank::OneForm, vec![a.as_scalar().clone()]);
        // cos² 4x = 1/2 + cos(8x)/2; the 8-mode sits above the 2/3 cutoff
        let p = pointwise_algebra(&v, Some(&w), PointwiseOp::Contract, Dealias::TwoThirds).unwrap();
        assert!(p.as_scalar().sub(&one.as_scalar().scale(0.5)).sup_norm() < 1e-14);
    }
}
