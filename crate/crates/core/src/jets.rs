//! Formal Taylor solution `g_t = Σ g⁽ᵏ⁾ tᵏ` of the normal-geodesic Einstein system.
//!
//! [`SeriesField`] is a truncated power series in `t` whose coefficients are
//! scalar fields. It implements [`Scalar`], so the curvature code evaluates the
//! Ricci tensor of a series metric order by order without symbolic algebra.

use std::sync::Arc;

use crate::algebra::{self, Mat, Scalar};
use crate::chart::Chart;
use crate::constraints::{ambient_parts, MetricState};
use crate::curvature::Geometry;
use crate::error::{Error, Result};
use crate::field::{Field, Rank, ScalarField};

/// Truncated series `Σ_{k<=order} c_k tᵏ` of scalar fields.
///
/// Binary operations between series of different order truncate to the
/// smaller one; [`series_algebra`] reports that as an error instead.
#[derive(Clone, Debug)]
pub struct SeriesField {
    coeffs: Vec<ScalarField>,
}

impl SeriesField {
    pub fn new(coeffs: Vec<ScalarField>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("a series needs at least one coefficient".into()));
        }
        let chart = coeffs[0].chart_arc();
        if coeffs.iter().any(|c| c.chart_arc() != chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(Self { coeffs })
    }

    /// Series with the given constant coefficients on `chart`.
    pub fn from_constants(chart: &Arc<Chart>, values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| ScalarField::constant(chart, v)).collect())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &ScalarField {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    /// Term-wise `d/dt`; the order drops by one (a constant stays order 0).
    pub fn time_derivative(&self) -> Self {
        if self.order() == 0 {
            return self.zero_like();
        }
        Self {
            coeffs: (1..self.coeffs.len()).map(|k| self.coeffs[k].scale(k as f64)).collect(),
        }
    }

    /// Horner evaluation at `t`.
    pub fn eval(&self, t: f64) -> ScalarField {
        let mut acc = self.coeffs[self.order()].clone();
        for c in self.coeffs[..self.order()].iter().rev() {
            acc = acc.scale(t).add(c);
        }
        acc
    }

    fn zip(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl Scalar for SeriesField {
    fn chart(&self) -> &Chart {
        self.coeffs[0].chart()
    }

    fn constant_like(&self, c: f64) -> Self {
        let zero = self.coeffs[0].constant_like(0.0);
        let mut coeffs = vec![zero; self.coeffs.len()];
        coeffs[0] = self.coeffs[0].constant_like(c);
        Self { coeffs }
    }

    fn add(&self, other: &Self) -> Self {
        self.zip(other, ScalarField::add)
    }

    fn sub(&self, other: &Self) -> Self {
        self.zip(other, ScalarField::sub)
    }

    fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|k| {
                algebra::sum(
                    (0..=k).map(|j| self.coeffs[j].mul(&other.coeffs[k - j])),
                    &self.coeffs[0],
                )
            })
            .collect();
        Self { coeffs }
    }

    fn scale(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|x| x.scale(c)).collect(),
        }
    }

    fn frame_derivative(&self, axis: usize) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|x| x.frame_derivative(axis)).collect(),
        }
    }

    /// Order-recursive inverse: `h₀ = g₀⁻¹`, `h_k = −h₀ Σ_{j>=1} g_j h_{k−j}`.
    fn invert_metric(g: &Mat<Self>) -> Result<Mat<Self>> {
        let order = g.iter().flatten().map(SeriesField::order).min().unwrap_or(0);
        let coeff = |k: usize| -> Mat<ScalarField> { algebra::mat_map_to(g, |s| s.coeffs[k].clone()) };
        let h0 = ScalarField::invert_metric(&coeff(0))?;
        Ok(series_inverse_from(h0, order, coeff))
    }
}

/// Completes `h₀ = g₀⁻¹` to the full series inverse through `order`.
fn series_inverse_from(
    h0: Mat<ScalarField>,
    order: usize,
    coeff: impl Fn(usize) -> Mat<ScalarField>,
) -> Mat<SeriesField> {
    let n = h0.len();
    let mut h: Vec<Mat<ScalarField>> = vec![h0];
    for k in 1..=order {
        let mut acc = algebra::mat_mul(&coeff(1), &h[k - 1]);
        for j in 2..=k {
            acc = algebra::mat_add(&acc, &algebra::mat_mul(&coeff(j), &h[k - j]));
        }
        h.push(algebra::mat_scale(&algebra::mat_mul(&h[0], &acc), -1.0));
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| SeriesField {
                    coeffs: h.iter().map(|m| m[i][j].clone()).collect(),
                })
                .collect()
        })
        .collect()
}

/// Pointwise inverse of a general square matrix by Gaussian elimination.
fn general_inverse(m: &Mat<ScalarField>) -> Result<Mat<ScalarField>> {
    let n = m.len();
    let chart = m[0][0].chart_arc().clone();
    let points = chart.num_points();
    let mut out = vec![vec![vec![0.0; points]; n]; n];
    for p in 0..points {
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[i][j].value(p)).collect()).collect();
        let mut inv: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        let scale = a.iter().flatten().fold(0.0_f64, |s, x| s.max(x.abs()));
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .expect("non-empty range");
            if a[piv][col].abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::SingularSeries);
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let d = a[col][col];
            for j in 0..n {
                a[col][j] /= d;
                inv[col][j] /= d;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r][col];
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i][j][p] = inv[i][j];
            }
        }
    }
    out.into_iter()
        .map(|row| row.into_iter().map(|v| ScalarField::new(chart.clone(), v)).collect())
        .collect()
}

/// Square matrix of series; scalar series are `1×1`.
pub type SeriesMatrix = Mat<SeriesField>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Mul,
    Invert,
    Trace,
}

/// Truncated power-series ring operations on series-valued matrices.
pub fn series_algebra(a: &SeriesMatrix, b: Option<&SeriesMatrix>, op: SeriesOp) -> Result<SeriesMatrix> {
    let order = check_order(a)?;
    let need_b = || -> Result<&SeriesMatrix> {
        let b = b.ok_or_else(|| Error::Precondition(format!("{op:?} needs a second operand")))?;
        let ob = check_order(b)?;
        if ob != order {
            return Err(Error::OrderMismatch(order, ob));
        }
        if b.len() != a.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                a.len(),
                a.len(),
                b.len(),
                b.len()
            )));
        }
        Ok(b)
    };
    match op {
        SeriesOp::Add => Ok(algebra::mat_add(a, need_b()?)),
        SeriesOp::Mul => Ok(algebra::mat_mul(a, need_b()?)),
        SeriesOp::Trace => Ok(vec![vec![algebra::trace(a)]]),
        SeriesOp::Invert => {
            let coeff = |k: usize| -> Mat<ScalarField> { algebra::mat_map_to(a, |s| s.coeffs[k].clone()) };
            let h0 = general_inverse(&coeff(0))?;
            Ok(series_inverse_from(h0, order, coeff))
        }
    }
}

fn check_order(a: &SeriesMatrix) -> Result<usize> {
    let order = a[0][0].order();
    for s in a.iter().flatten() {
        if s.order() != order {
            return Err(Error::OrderMismatch(order, s.order()));
        }
    }
    Ok(order)
}

/// Taylor coefficients `g⁽⁰⁾ … g⁽ᴷ⁾` of `g_t` at `t = 0`.
#[derive(Clone, Debug)]
pub struct JetSeries {
    coeffs: Vec<Field>,
    lambda: f64,
}

impl JetSeries {
    pub fn new(coeffs: Vec<Field>, lambda: f64) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Precondition("a jet needs order K >= 1".into()));
        }
        for c in &coeffs {
            c.expect_rank(Rank::Sym2Cov)?;
            coeffs[0].same_chart(c)?;
        }
        Ok(Self { coeffs, lambda })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.coeffs[0].chart()
    }

    pub fn coefficient(&self, k: usize) -> &Field {
        &self.coeffs[k]
    }

    pub fn coefficients(&self) -> &[Field] {
        &self.coeffs
    }

    /// The degree-`K` Taylor polynomial at `t`.
    pub fn evaluate(&self, t: f64) -> Field {
        let mut acc = self.coeffs[self.order()].clone();
        for c in self.coeffs[..self.order()].iter().rev() {
            acc = acc.scale(t).add_scaled(c, 1.0);
        }
        acc
    }

    /// `g_t` as a matrix of series, truncated at `order`.
    pub fn metric_series(&self, order: usize) -> SeriesMatrix {
        series_matrix(&self.coeffs[..=order.min(self.order())])
    }
}

fn series_matrix(coeffs: &[Field]) -> SeriesMatrix {
    let n = coeffs[0].dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| SeriesField {
                    coeffs: coeffs.iter().map(|c| c.get(i, j).clone()).collect(),
                })
                .collect()
        })
        .collect()
}

fn coefficient_field(m: &SeriesMatrix, k: usize) -> Field {
    Field::from_matrix(Rank::Sym2Cov, algebra::mat_map_to(m, |s| s.coeffs[k].clone()))
}

/// Solves `(k+2)(k+1) g⁽ᵏ⁺²⁾ = [2Ric + ġ g⁻¹ ġ + tr(W) ġ − 2λg]_k`
/// from `g⁽⁰⁾ = g`, `g⁽¹⁾ = −2gW`.
pub fn formal_solution(state: &MetricState, order: usize) -> Result<JetSeries> {
    if order < 2 {
        return Err(Error::Precondition(format!("jet order must be >= 2, got {order}")));
    }
    let g1 = Field::from_matrix(
        Rank::Sym2Cov,
        algebra::mat_scale(&algebra::mat_mul(&state.g.matrix(), &state.w.matrix()), -2.0),
    );
    let mut coeffs = vec![state.g.clone(), g1];
    for k in 0..=order - 2 {
        let g = series_matrix(&coeffs);
        let rhs = tangential_rhs(&g, state.lambda)?;
        let next = coefficient_field(&rhs, k).scale(1.0 / ((k + 2) * (k + 1)) as f64);
        let sym = Field::from_matrix(Rank::Sym2Cov, algebra::symmetrize(&next.matrix()));
        coeffs.push(sym);
    }
    JetSeries::new(coeffs, state.lambda)
}

/// `2Ric + ġ g⁻¹ ġ + tr(W) ġ − 2λg`, `W = −½ g⁻¹ ġ`, to one order below `g`.
fn tangential_rhs(g: &SeriesMatrix, lambda: f64) -> Result<SeriesMatrix> {
    let order = g[0][0].order() - 1;
    let gdot = algebra::mat_map(g, SeriesField::time_derivative);
    let g = algebra::mat_map(g, |s| s.truncate(order));
    let geo = Geometry::new(g.clone())?;
    let ric = geo.ricci();
    let raised = geo.raise(&gdot);
    let quad = algebra::mat_mul(&gdot, &raised);
    let h = algebra::trace(&raised).scale(-0.5);
    let n = g.len();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    ric[i][j]
                        .scale(2.0)
                        .add(&quad[i][j])
                        .add(&h.mul(&gdot[i][j]))
                        .sub(&g[i][j].scale(2.0 * lambda))
                })
                .collect()
        })
        .collect())
}

/// Sup norms of the `k`-th Taylor coefficient of each block of `Ric^Z − λ g^Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderResidual {
    pub order: usize,
    /// `Ric(ν,ν) − λ`
    pub normal: f64,
    /// `Ric(ν,X)`
    pub mixed: f64,
    /// `Ric(X,Y) − λ g`
    pub tangential: f64,
    /// `Scal^Z − 2Ric(ν,ν) − (n−1)λ`, the Hamiltonian combination
    pub gauss: f64,
}

impl OrderResidual {
    pub fn max(&self) -> f64 {
        self.normal.max(self.mixed).max(self.tangential).max(self.gauss)
    }
}

/// Raw coefficient values at one point for orders `0..=K'`, plus per-order sup norms.
#[derive(Clone, Debug)]
pub struct JetResidual {
    pub orders: Vec<OrderResidual>,
    /// `Ric(ν,ν) − λ` coefficients at the first chart point.
    pub normal_coefficients: Vec<f64>,
    /// `Scal^Z − 2Ric(ν,ν) − (n−1)λ` coefficients at the first chart point.
    pub gauss_coefficients: Vec<f64>,
}

impl JetResidual {
    pub fn max(&self) -> f64 {
        self.orders.iter().map(OrderResidual::max).fold(0.0, f64::max)
    }
}

/// Expands `Ric^Z − λ g^Z` of `dt² + g_t` in `t` through order `K'`.
pub fn jet_einstein_residual(jet: &JetSeries, upto: usize) -> Result<JetResidual> {
    let k = jet.order();
    if upto + 2 > k {
        return Err(Error::OrderExhausted {
            requested: upto,
            available: k.saturating_sub(2),
        });
    }
    let lambda = jet.lambda();
    let n = jet.chart().dim();
    let g = jet.metric_series(upto + 2);
    let gdot = algebra::mat_map(&g, SeriesField::time_derivative);
    let gddot = algebra::mat_map(&gdot, SeriesField::time_derivative);
    let cut = |m: &SeriesMatrix| algebra::mat_map(m, |s| s.truncate(upto));
    let geo = Geometry::new(cut(&g))?;
    let parts = ambient_parts(&geo, &cut(&gdot), &cut(&gddot));
    let normal = parts.nn.sub(&parts.nn.constant_like(lambda));
    let gauss = parts
        .gauss_lhs
        .sub(&parts.gauss_lhs.constant_like((n as f64 - 1.0) * lambda));
    let tangential = algebra::mat_sub(&parts.xy, &algebra::mat_scale(&geo.g, lambda));
    let orders = (0..=upto)
        .map(|o| OrderResidual {
            order: o,
            normal: normal.coeff(o).sup_norm(),
            mixed: parts.nx.iter().map(|s| s.coeff(o).sup_norm()).fold(0.0, f64::max),
            tangential: tangential
                .iter()
                .flatten()
                .map(|s| s.coeff(o).sup_norm())
                .fold(0.0, f64::max),
            gauss: gauss.coeff(o).sup_norm(),
        })
        .collect();
    Ok(JetResidual {
        orders,
        normal_coefficients: normal.coeffs().iter().map(|c| c.value(0)).collect(),
        gauss_coefficients: gauss.coeffs().iter().map(|c| c.value(0)).collect(),
    })
}
