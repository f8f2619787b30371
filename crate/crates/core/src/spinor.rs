//! Spinor fields, the spin connection, and generalized Killing spinors.
//!
//! Spinors are expressed in the orthonormal frame `E_a = Σ_i F_ia e_i` with
//! `F = L^{-T}` for the pointwise Cholesky factor `g = L Lᵀ` (on SU(2) charts
//! with the unit metric this is the invariant frame itself). The spin
//! connection is `∇_a ψ = E_a(ψ) + ¼ Σ_{b,c} ω_abc γ_b γ_c ψ` with
//! `ω_abc = g(∇_{E_a} E_b, E_c)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{self, sum, Mat, Scalar};
use crate::chart::Chart;
use crate::clifford::{real_inner, spinor_dim, CliffordRep, Spinor};
use crate::constraints::{constraint_residual, einstein_residual, ConstraintResidual, MetricState};
use crate::curvature::Geometry;
use crate::error::{Error, Result};
use crate::evolution::{Status, Trajectory};
use crate::field::{cholesky, lower_inverse, Field, Rank, ScalarField};
use crate::integrate::rk4_step;

/// Tolerance on `‖|ψ| − 1‖_∞` for unit-spinor operations.
pub const UNIT_TOL: f64 = 1e-8;
/// Largest GKS residual accepted as a generalized Killing spinor.
pub const GKS_TOL: f64 = 1e-8;
/// Largest Einstein residual accepted by [`extend_parallel`].
pub const EINSTEIN_TOL: f64 = 1e-6;

/// A section of the spinor bundle, component `k` sampled at every chart point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    chart: Arc<Chart>,
    comps: Vec<Vec<Complex64>>,
}

impl SpinorField {
    pub fn new(chart: Arc<Chart>, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        let points = chart.num_points();
        if comps.is_empty() || comps.iter().any(|c| c.len() != points) {
            return Err(Error::DimensionMismatch(format!(
                "spinor components must be non-empty with {points} samples each"
            )));
        }
        if comps.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::Precondition("spinor components must be finite".into()));
        }
        Ok(Self { chart, comps })
    }

    pub fn constant(chart: &Arc<Chart>, value: &[Complex64]) -> Self {
        let points = chart.num_points();
        Self {
            chart: chart.clone(),
            comps: value.iter().map(|&z| vec![z; points]).collect(),
        }
    }

    /// Samples `f(x)` at the chart coordinates (frame charts have one point at the origin).
    pub fn from_fn(chart: &Arc<Chart>, dim: usize, f: impl Fn(&[f64]) -> Vec<Complex64>) -> Self {
        let points = chart.num_points();
        let mut comps = vec![Vec::with_capacity(points); dim];
        for p in 0..points {
            let v = f(&chart.coordinates(p));
            assert_eq!(v.len(), dim, "spinor function returned the wrong dimension");
            for (c, z) in comps.iter_mut().zip(v) {
                c.push(z);
            }
        }
        Self {
            chart: chart.clone(),
            comps,
        }
    }

    fn from_points(chart: &Arc<Chart>, dim: usize, points: impl Iterator<Item = Spinor>) -> Self {
        let mut comps = vec![Vec::with_capacity(chart.num_points()); dim];
        for v in points {
            for (c, z) in comps.iter_mut().zip(v.iter()) {
                c.push(*z);
            }
        }
        Self {
            chart: chart.clone(),
            comps,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Complex dimension of the spinor module.
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, k: usize) -> &[Complex64] {
        &self.comps[k]
    }

    pub fn at(&self, p: usize) -> Spinor {
        Spinor::from_iterator(self.dim(), self.comps.iter().map(|c| c[p]))
    }

    pub fn map_points(&self, f: impl Fn(usize, &Spinor) -> Spinor) -> Self {
        let pts = (0..self.chart.num_points()).map(|p| f(p, &self.at(p)));
        Self::from_points(&self.chart, self.dim(), pts)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|v| v.iter().map(|z| z * c).collect()).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            chart: self.chart.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
                .collect(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if *self.chart != *other.chart {
            return Err(Error::ChartMismatch);
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "spinor dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// Pointwise `Re⟨ψ, φ⟩`.
    pub fn real_inner(&self, other: &Self) -> Result<ScalarField> {
        self.check_compatible(other)?;
        let values = (0..self.chart.num_points())
            .map(|p| real_inner(&self.at(p), &other.at(p)))
            .collect();
        ScalarField::new(self.chart.clone(), values)
    }

    /// Pointwise length `|ψ|`.
    pub fn norm_field(&self) -> ScalarField {
        let values = (0..self.chart.num_points())
            .map(|p| self.comps.iter().map(|c| c[p].norm_sqr()).sum::<f64>().sqrt())
            .collect();
        ScalarField::new(self.chart.clone(), values).expect("norm has one value per point")
    }

    pub fn sup_norm(&self) -> f64 {
        self.norm_field().max()
    }

    /// `‖|ψ| − 1‖_∞`.
    pub fn unit_defect(&self) -> f64 {
        self.norm_field()
            .values()
            .iter()
            .map(|x| (x - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|z| z.is_finite())
    }

    /// Derivative of the components along the chart frame vector `e_axis`.
    pub fn frame_derivative(&self, axis: usize) -> Self {
        if !self.chart.is_grid() {
            return self.scale(Complex64::new(0.0, 0.0));
        }
        let part = |f: fn(&Complex64) -> f64, c: &Vec<Complex64>| {
            ScalarField::new(self.chart.clone(), c.iter().map(f).collect())
                .expect("component has one value per point")
                .frame_derivative(axis)
        };
        let comps = self
            .comps
            .iter()
            .map(|c| {
                let re = part(|z| z.re, c);
                let im = part(|z| z.im, c);
                re.values()
                    .iter()
                    .zip(im.values())
                    .map(|(&r, &i)| Complex64::new(r, i))
                    .collect()
            })
            .collect();
        Self {
            chart: self.chart.clone(),
            comps,
        }
    }
}

/// Metric, orthonormal frame, and spin connection on one chart.
#[derive(Clone, Debug)]
pub struct SpinFrame {
    rep: CliffordRep,
    geo: Geometry<ScalarField>,
    /// `frame[i][a] = F_ia`.
    frame: Mat<ScalarField>,
    /// `omega[a][b][c] = g(∇_{E_a} E_b, E_c)`.
    omega: Vec<Mat<ScalarField>>,
}

impl SpinFrame {
    pub fn new(g: &Field) -> Result<Self> {
        g.expect_rank(Rank::Sym2Cov)?;
        let n = g.dim();
        let rep = CliffordRep::new(n)?;
        let chart = g.chart().clone();
        let points = chart.num_points();
        let mut f = vec![vec![vec![0.0; points]; n]; n];
        for p in 0..points {
            let l = cholesky(&g.at(p), n).map_err(|(minor, pivot)| Error::NotPositiveDefinite {
                index: chart.multi_index(p),
                minor,
                pivot,
            })?;
            let li = lower_inverse(&l, n);
            for i in 0..n {
                for a in 0..n {
                    f[i][a][p] = li[a * n + i];
                }
            }
        }
        let frame: Mat<ScalarField> = f
            .into_iter()
            .map(|row| row.into_iter().map(|v| ScalarField::new(chart.clone(), v)).collect())
            .collect::<Result<_>>()?;
        let geo = Geometry::new(g.matrix())?;
        let like = &frame[0][0];
        // nabla_e[i][k][b]: component k of ∇_{e_i} E_b
        let nabla_e: Vec<Mat<ScalarField>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| {
                        (0..n)
                            .map(|b| {
                                let conn = sum((0..n).map(|j| geo.gamma[k][i][j].mul(&frame[j][b])), like);
                                frame[k][b].frame_derivative(i).add(&conn)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let gf = algebra::mat_mul(&geo.g, &frame);
        let omega = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        (0..n)
                            .map(|c| {
                                sum(
                                    (0..n)
                                        .flat_map(|i| (0..n).map(move |k| (i, k)))
                                        .map(|(i, k)| frame[i][a].mul(&nabla_e[i][k][b]).mul(&gf[k][c])),
                                    like,
                                )
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { rep, geo, frame, omega })
    }

    pub fn dim(&self) -> usize {
        self.rep.n()
    }

    pub fn rep(&self) -> &CliffordRep {
        &self.rep
    }

    pub fn geometry(&self) -> &Geometry<ScalarField> {
        &self.geo
    }

    pub fn chart(&self) -> &Chart {
        self.geo.g[0][0].chart()
    }

    /// `F_ia`: component `i` of the orthonormal vector `E_a`.
    pub fn frame(&self) -> &Mat<ScalarField> {
        &self.frame
    }

    /// `ω_abc = g(∇_{E_a} E_b, E_c)`.
    pub fn connection_form(&self, a: usize, b: usize, c: usize) -> &ScalarField {
        &self.omega[a][b][c]
    }

    /// `E_a(f)`.
    pub fn directional_derivative(&self, f: &ScalarField, a: usize) -> ScalarField {
        let n = self.dim();
        sum((0..n).map(|i| self.frame[i][a].mul(&f.frame_derivative(i))), f)
    }

    /// Endomorphism in the orthonormal frame: `Â = Fᵀ g A F`, so `A(E_a) = Σ_b Â_ba E_b`.
    pub fn to_orthonormal(&self, a: &Mat<ScalarField>) -> Mat<ScalarField> {
        let ft = algebra::transpose(&self.frame);
        algebra::mat_mul(&algebra::mat_mul(&ft, &self.geo.g), &algebra::mat_mul(a, &self.frame))
    }

    /// Covariant 2-tensor in the orthonormal frame: `Fᵀ B F`.
    pub fn bilinear_to_orthonormal(&self, b: &Mat<ScalarField>) -> Mat<ScalarField> {
        let ft = algebra::transpose(&self.frame);
        algebra::mat_mul(&ft, &algebra::mat_mul(b, &self.frame))
    }

    /// Endomorphism from orthonormal components back to the chart frame: `F Â Fᵀ g`.
    pub fn from_orthonormal(&self, a_hat: &Mat<ScalarField>) -> Mat<ScalarField> {
        let ft = algebra::transpose(&self.frame);
        algebra::mat_mul(
            &algebra::mat_mul(&self.frame, a_hat),
            &algebra::mat_mul(&ft, &self.geo.g),
        )
    }

    fn check(&self, psi: &SpinorField) -> Result<()> {
        if **psi.chart() != *self.chart() {
            return Err(Error::ChartMismatch);
        }
        if psi.dim() != self.rep.dim() {
            return Err(Error::DimensionMismatch(format!(
                "spinor of dimension {} on a {}-manifold (expected {})",
                psi.dim(),
                self.dim(),
                self.rep.dim()
            )));
        }
        Ok(())
    }

    /// `∇_{E_a} ψ` for every frame direction `a`.
    pub fn covariant_derivative(&self, psi: &SpinorField) -> Result<Vec<SpinorField>> {
        self.check(psi)?;
        let n = self.dim();
        let grid = self.chart().is_grid();
        let d: Vec<SpinorField> = if grid {
            (0..n).map(|i| psi.frame_derivative(i)).collect()
        } else {
            Vec::new()
        };
        Ok((0..n)
            .map(|a| {
                psi.map_points(|p, v| {
                    let mut out = Spinor::zeros(v.len());
                    if grid {
                        for (i, di) in d.iter().enumerate() {
                            out += di.at(p) * Complex64::new(self.frame[i][a].value(p), 0.0);
                        }
                    }
                    for b in 0..n {
                        for c in 0..n {
                            let w = self.omega[a][b][c].value(p);
                            if b != c && w != 0.0 {
                                out += (self.rep.pair(b, c) * v) * Complex64::new(0.25 * w, 0.0);
                            }
                        }
                    }
                    out
                })
            })
            .collect())
    }

    /// `Σ_a γ_a ∇_a ψ`.
    pub fn dirac(&self, psi: &SpinorField) -> Result<SpinorField> {
        let nabla = self.covariant_derivative(psi)?;
        Ok(psi.map_points(|p, v| {
            let mut out = Spinor::zeros(v.len());
            for (a, da) in nabla.iter().enumerate() {
                out += self.rep.gamma(a) * da.at(p);
            }
            out
        }))
    }

    /// `A(E_a)·ψ` for orthonormal components `Â`.
    pub fn clifford_endo(&self, a_hat: &Mat<ScalarField>, a: usize, psi: &SpinorField) -> SpinorField {
        let n = self.dim();
        psi.map_points(|p, v| {
            let x: Vec<f64> = (0..n).map(|b| a_hat[b][a].value(p)).collect();
            self.rep.multiply(&x, v)
        })
    }
}

fn sup_norm_diff(a: &SpinorField, b: &SpinorField) -> f64 {
    a.sub(b).map_or(f64::INFINITY, |d| d.sup_norm())
}

fn check_endomorphism(g: &Field, w: &Field) -> Result<()> {
    w.expect_rank(Rank::Endomorphism)?;
    g.same_chart(w)?;
    if w.dim() != g.dim() {
        return Err(Error::DimensionMismatch(
            "endomorphism and metric dimensions differ".into(),
        ));
    }
    Ok(())
}

/// `∇_{E_a} ψ` in the Cholesky orthonormal frame of `g`.
pub fn spinor_derivative(psi: &SpinorField, g: &Field) -> Result<Vec<SpinorField>> {
    SpinFrame::new(g)?.covariant_derivative(psi)
}

/// Dirac operator `Dψ = Σ_a E_a·∇_{E_a}ψ`.
pub fn dirac(psi: &SpinorField, g: &Field) -> Result<SpinorField> {
    SpinFrame::new(g)?.dirac(psi)
}

/// Pointwise `max_a |∇_{E_a}ψ − ½ W(E_a)·ψ|`.
pub fn gks_residual(psi: &SpinorField, w: &Field, g: &Field) -> Result<ScalarField> {
    check_endomorphism(g, w)?;
    MetricState::new(g.clone(), w.clone(), 0.0)?;
    let frame = SpinFrame::new(g)?;
    gks_residual_in(&frame, psi, &w.matrix())
}

fn gks_residual_in(frame: &SpinFrame, psi: &SpinorField, w: &Mat<ScalarField>) -> Result<ScalarField> {
    let nabla = frame.covariant_derivative(psi)?;
    let w_hat = frame.to_orthonormal(w);
    let n = frame.dim();
    let mut worst = vec![0.0_f64; psi.chart().num_points()];
    for (a, da) in nabla.iter().enumerate() {
        let lhs = frame.clifford_endo(&w_hat, a, psi).scale(Complex64::new(0.5, 0.0));
        let diff = da.sub(&lhs)?.norm_field();
        for (x, d) in worst.iter_mut().zip(diff.values()) {
            *x = x.max(*d);
        }
    }
    debug_assert_eq!(n, nabla.len());
    ScalarField::new(psi.chart().clone(), worst)
}

/// `‖Σ_a E_a·A(E_a)·ψ + tr(A) ψ‖_∞` for a g-symmetric endomorphism `A`.
pub fn trace_identity_residual(psi: &SpinorField, a: &Field, g: &Field) -> Result<f64> {
    check_endomorphism(g, a)?;
    let frame = SpinFrame::new(g)?;
    frame.check(psi)?;
    let a_hat = frame.to_orthonormal(&a.matrix());
    let tr = algebra::trace(&a.matrix());
    let n = frame.dim();
    let out = psi.map_points(|p, v| {
        let mut s = v * Complex64::new(tr.value(p), 0.0);
        for i in 0..n {
            let x: Vec<f64> = (0..n).map(|b| a_hat[b][i].value(p)).collect();
            s += frame.rep.gamma(i) * frame.rep.multiply(&x, v);
        }
        s
    });
    Ok(out.sup_norm())
}

/// Endomorphism `A` with `g(A X, Y) = Re⟨∇_X ψ, Y·ψ⟩`, and how well it explains `∇ψ`.
#[derive(Clone, Debug)]
pub struct StressEnergy {
    /// `A` in the chart frame.
    pub a: Field,
    /// `max |Â_ab − Â_ba|` in the orthonormal frame.
    pub symmetry_defect: f64,
    /// `max_a ‖∇_{E_a}ψ − A(E_a)·ψ‖_∞`.
    pub reconstruction_residual: f64,
}

/// Extracts `A` from a unit spinor in dimension 3; a Dirac eigenspinor gives `W = 2A`.
pub fn stress_energy_from_spinor(psi: &SpinorField, g: &Field) -> Result<StressEnergy> {
    if g.dim() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "stress-energy extraction needs n = 3, got {}",
            g.dim()
        )));
    }
    let frame = SpinFrame::new(g)?;
    frame.check(psi)?;
    let defect = psi.unit_defect();
    if defect > UNIT_TOL {
        return Err(Error::Precondition(format!(
            "spinor is not of unit length (defect {defect:e})"
        )));
    }
    let n = 3;
    let nabla = frame.covariant_derivative(psi)?;
    let chart = psi.chart().clone();
    let points = chart.num_points();
    // m[a][b] = Re⟨∇_a ψ, γ_b ψ⟩ = Â_ba
    let mut m = vec![vec![vec![0.0; points]; n]; n];
    for p in 0..points {
        let v = psi.at(p);
        for (a, da) in nabla.iter().enumerate() {
            let dv = da.at(p);
            for (b, row) in m[a].iter_mut().enumerate() {
                row[p] = real_inner(&dv, &(frame.rep.gamma(b) * &v));
            }
        }
    }
    let mut symmetry_defect: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for p in 0..points {
                symmetry_defect = symmetry_defect.max((m[a][b][p] - m[b][a][p]).abs());
            }
        }
    }
    let a_hat: Mat<ScalarField> = (0..n)
        .map(|b| {
            (0..n)
                .map(|a| ScalarField::new(chart.clone(), m[a][b].clone()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut reconstruction_residual: f64 = 0.0;
    for (a, da) in nabla.iter().enumerate() {
        let rebuilt = frame.clifford_endo(&a_hat, a, psi);
        reconstruction_residual = reconstruction_residual.max(sup_norm_diff(da, &rebuilt));
    }
    let a = Field::from_matrix(Rank::Endomorphism, frame.from_orthonormal(&a_hat));
    Ok(StressEnergy {
        a,
        symmetry_defect,
        reconstruction_residual,
    })
}

/// Constraint data forced by a generalized Killing spinor.
#[derive(Clone, Debug)]
pub struct GksConstraints {
    /// `(Scal + tr W² − tr²W)/(n − 1)` at every point.
    pub lambda_field: ScalarField,
    /// Mean of `lambda_field`.
    pub lambda: f64,
    /// `max − min` of `lambda_field`.
    pub lambda_spread: f64,
    /// `(f, ω)` evaluated with `λ = lambda`.
    pub residual: ConstraintResidual,
    /// Sup residual of the Clifford-contracted Ricci identity
    /// `Ric(X)·ψ = trW W(X)·ψ − W²(X)·ψ + X(trW)ψ + Σ_i E_i·(∇_{E_i}W)(X)·ψ`.
    pub ric1_residual: f64,
    pub gks_residual: f64,
}

/// Checks that a generalized Killing spinor `(ψ, W)` forces the constraint equations.
pub fn gks_implies_constraints(psi: &SpinorField, w: &Field, g: &Field) -> Result<GksConstraints> {
    check_endomorphism(g, w)?;
    let n = g.dim();
    if n < 2 {
        return Err(Error::DimensionMismatch("constraints need n >= 2".into()));
    }
    let frame = SpinFrame::new(g)?;
    let wm = w.matrix();
    let gks = gks_residual_in(&frame, psi, &wm)?.max();
    if gks > GKS_TOL {
        return Err(Error::Precondition(format!(
            "not a generalized Killing spinor: residual {gks:e} exceeds {GKS_TOL:e}"
        )));
    }
    let geo = frame.geometry();
    let ric = geo.ricci();
    let scal = geo.scalar_curvature(&ric);
    let trw = algebra::trace(&wm);
    let trw2 = algebra::trace_product(&wm, &wm);
    let lambda_field = scal.add(&trw2).sub(&trw.mul(&trw)).scale(1.0 / (n - 1) as f64);
    let lambda = lambda_field.mean();
    let lambda_spread = lambda_field.max() - lambda_field.min();
    let residual = constraint_residual(&MetricState::new(g.clone(), w.clone(), lambda)?)?;

    let ric_hat = frame.bilinear_to_orthonormal(&ric);
    let w_hat = frame.to_orthonormal(&wm);
    let w2_hat = frame.to_orthonormal(&algebra::mat_mul(&wm, &wm));
    let nabla_w = geo.covariant_derivative_endo(&wm);
    let like = &trw;
    // n_hat[b] = (∇_{E_b} W) in the orthonormal frame
    let n_hat: Vec<Mat<ScalarField>> = (0..n)
        .map(|b| {
            let nb: Mat<ScalarField> = (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| sum((0..n).map(|i| frame.frame[i][b].mul(&nabla_w[i][j][k])), like))
                        .collect()
                })
                .collect();
            frame.to_orthonormal(&nb)
        })
        .collect();
    let mut ric1_residual: f64 = 0.0;
    for a in 0..n {
        let dtr = frame.directional_derivative(&trw, a);
        let lhs = frame.clifford_endo(&ric_hat, a, psi);
        let rhs = psi.map_points(|p, v| {
            let x = |m: &Mat<ScalarField>| -> Vec<f64> { (0..n).map(|c| m[c][a].value(p)).collect() };
            let mut s = frame.rep.multiply(&x(&w_hat), v) * Complex64::new(trw.value(p), 0.0);
            s -= frame.rep.multiply(&x(&w2_hat), v);
            s += v * Complex64::new(dtr.value(p), 0.0);
            for (b, nb) in n_hat.iter().enumerate() {
                s += frame.rep.gamma(b) * frame.rep.multiply(&x(nb), v);
            }
            s
        });
        ric1_residual = ric1_residual.max(sup_norm_diff(&lhs, &rhs));
    }
    Ok(GksConstraints {
        lambda_field,
        lambda,
        lambda_spread,
        residual,
        ric1_residual,
        gks_residual: gks,
    })
}

/// Sup over frame directions `X` of `|Σ_b E_b·R(X, E_b)ψ + ½ Ric(X)·ψ|`, with the
/// spin curvature `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]` computed from the connection.
pub fn spin_curvature_residual(psi: &SpinorField, g: &Field) -> Result<f64> {
    let frame = SpinFrame::new(g)?;
    let n = frame.dim();
    let first = frame.covariant_derivative(psi)?;
    let second: Vec<Vec<SpinorField>> = first
        .iter()
        .map(|phi| frame.covariant_derivative(phi))
        .collect::<Result<_>>()?;
    let ric_hat = frame.bilinear_to_orthonormal(&frame.geometry().ricci());
    let mut worst: f64 = 0.0;
    for a in 0..n {
        let mut total = frame.clifford_endo(&ric_hat, a, psi).scale(Complex64::new(0.5, 0.0));
        for b in 0..n {
            // R(E_a, E_b)ψ with [E_a, E_b] = Σ_c (ω_abc − ω_bac) E_c
            let curv = psi.map_points(|p, _| {
                let mut s = second[b][a].at(p) - second[a][b].at(p);
                for (c, fc) in first.iter().enumerate() {
                    let coef = frame.omega[a][b][c].value(p) - frame.omega[b][a][c].value(p);
                    if coef != 0.0 {
                        s -= fc.at(p) * Complex64::new(coef, 0.0);
                    }
                }
                s
            });
            let term = curv.map_points(|_, v| frame.rep.gamma(b) * v);
            total = total.add(&term)?;
        }
        worst = worst.max(total.sup_norm());
    }
    Ok(worst)
}

/// Result of transporting a spinor along the normal geodesics of `dt² + g_t`.
#[derive(Clone, Debug)]
pub struct ParallelExtension {
    pub times: Vec<f64>,
    /// Ambient spinor `Ψ(t)` in the frame `(E_1(t), …, E_n(t), ∂_t)`.
    pub spinors: Vec<SpinorField>,
    /// `a(t) = max_a ‖∇^Z_{E_a} Ψ(t)‖_∞`.
    pub horizontal: Vec<f64>,
    /// `max_a ‖∇^Z_{E_a}Ψ − (∇_{E_a}ψ − ½W(E_a)·ψ)‖_∞` at the first sample.
    pub restriction_defect: f64,
}

impl ParallelExtension {
    pub fn max_horizontal(&self) -> f64 {
        self.horizontal.iter().copied().fold(0.0, f64::max)
    }
}

/// Ambient representation for an `n`-dimensional slice; `ΣM` sits in the first block.
fn ambient_rep(n: usize) -> Result<CliffordRep> {
    if n != 1 && n != 3 {
        return Err(Error::DimensionMismatch(format!(
            "parallel extension is implemented for odd n <= 3, got {n}"
        )));
    }
    CliffordRep::new(n + 1)
}

/// `Ψ = (ψ, 0)`.
pub fn embed_in_ambient(psi: &SpinorField) -> SpinorField {
    let points = psi.chart().num_points();
    let mut comps: Vec<Vec<Complex64>> = (0..psi.dim()).map(|k| psi.component(k).to_vec()).collect();
    comps.extend((0..psi.dim()).map(|_| vec![Complex64::new(0.0, 0.0); points]));
    SpinorField {
        chart: psi.chart().clone(),
        comps,
    }
}

/// First block of an ambient spinor.
pub fn restrict_from_ambient(big: &SpinorField) -> SpinorField {
    SpinorField {
        chart: big.chart().clone(),
        comps: big.comps[..big.dim() / 2].to_vec(),
    }
}

/// Ambient spin derivative `∇^Z_{E_a}Ψ` on the slice `(g, W)`, with `∂_t g = −2gW`.
fn ambient_horizontal(
    frame: &SpinFrame,
    amb: &CliffordRep,
    w: &Mat<ScalarField>,
    big: &SpinorField,
) -> Vec<SpinorField> {
    let n = frame.dim();
    let gdot = algebra::mat_scale(&algebra::mat_mul(&frame.geo.g, w), -2.0);
    // second fundamental form g(∇^Z_{E_a} E_b, ∂_t) = −½ ġ(E_a, E_b)
    let sff = algebra::mat_scale(&frame.bilinear_to_orthonormal(&gdot), -0.5);
    let grid = frame.chart().is_grid();
    let d: Vec<SpinorField> = if grid {
        (0..n).map(|i| big.frame_derivative(i)).collect()
    } else {
        Vec::new()
    };
    (0..n)
        .map(|a| {
            big.map_points(|p, v| {
                let mut out = Spinor::zeros(v.len());
                if grid {
                    for (i, di) in d.iter().enumerate() {
                        out += di.at(p) * Complex64::new(frame.frame[i][a].value(p), 0.0);
                    }
                }
                for b in 0..=n {
                    for c in 0..=n {
                        if b == c {
                            continue;
                        }
                        let w = match (b == n, c == n) {
                            (false, false) => frame.omega[a][b][c].value(p),
                            (false, true) => sff[a][b].value(p),
                            (true, false) => -sff[a][c].value(p),
                            (true, true) => unreachable!(),
                        };
                        if w != 0.0 {
                            out += (amb.pair(b, c) * v) * Complex64::new(0.25 * w, 0.0);
                        }
                    }
                }
                out
            })
        })
        .collect()
}

/// Pointwise generator `G` of `∂_t Ψ = GΨ` (that is, `∇^Z_{∂_t}Ψ = 0`) at one sample.
fn normal_generator(g: &Field, w: &Field, amb: &CliffordRep) -> Result<Vec<crate::clifford::CMatrix>> {
    let n = g.dim();
    let chart = g.chart();
    let mut out = Vec::with_capacity(chart.num_points());
    for p in 0..chart.num_points() {
        let gm = g.at(p);
        let wm = w.at(p);
        let l = cholesky(&gm, n).map_err(|(minor, pivot)| Error::NotPositiveDefinite {
            index: chart.multi_index(p),
            minor,
            pivot,
        })?;
        let li = lower_inverse(&l, n);
        let f = |i: usize, a: usize| li[a * n + i];
        // ŵ = Fᵀ g W F, ŝ = Fᵀ ġ F = −2ŵ symmetrised
        let gw = |i: usize, j: usize| (0..n).map(|k| gm[i * n + k] * wm[k * n + j]).sum::<f64>();
        let mut w_hat = vec![0.0; n * n];
        for c in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += f(i, c) * gw(i, j) * f(j, b);
                    }
                }
                w_hat[c * n + b] = s;
            }
        }
        // L^{-1} L̇ = Φ, the lower half of ŝ; Ḟ = −FΦᵀ
        let s_hat = |i: usize, j: usize| -(w_hat[i * n + j] + w_hat[j * n + i]);
        let phi = |b: usize, c: usize| match b.cmp(&c) {
            std::cmp::Ordering::Greater => s_hat(b, c),
            std::cmp::Ordering::Equal => 0.5 * s_hat(b, b),
            std::cmp::Ordering::Less => 0.0,
        };
        let mut gen = crate::clifford::CMatrix::zeros(amb.dim(), amb.dim());
        for b in 0..n {
            for c in 0..n {
                if b == c {
                    continue;
                }
                // g(∇_{∂_t} E_b, E_c) = (Fᵀ g Ḟ)_cb − ŵ_cb = −Φ_bc − ŵ_cb
                let nu = -phi(b, c) - w_hat[c * n + b];
                if nu != 0.0 {
                    gen -= amb.pair(b, c) * Complex64::new(0.25 * nu, 0.0);
                }
            }
        }
        out.push(gen);
    }
    Ok(out)
}

/// Transports `ψ0` (intrinsic, embedded as `(ψ0, 0)`, or already ambient) along
/// `∂_t` with the spin connection of `dt² + g_t`, without checking preconditions.
///
/// RK4 steps of size `2 dt` reuse the trajectory samples as stage points, so the
/// output lives on every other sample.
pub fn transport_normal(psi0: &SpinorField, traj: &Trajectory) -> Result<ParallelExtension> {
    let chart = traj.chart().clone();
    let n = chart.dim();
    let amb = ambient_rep(n)?;
    if **psi0.chart() != *chart {
        return Err(Error::ChartMismatch);
    }
    let small = spinor_dim(n);
    let big0 = match psi0.dim() {
        d if d == small => embed_in_ambient(psi0),
        d if d == amb.dim() => psi0.clone(),
        d => {
            return Err(Error::DimensionMismatch(format!(
                "spinor dimension {d}; expected {small} or {}",
                amb.dim()
            )))
        }
    };
    let points = chart.num_points();
    let dim = amb.dim();
    let dt = traj.dt();
    let steps = (traj.len() - 1) / 2;
    let gens: Vec<Vec<crate::clifford::CMatrix>> = (0..=2 * steps)
        .map(|k| normal_generator(&traj.sample(k).g, &traj.sample(k).w, &amb))
        .collect::<Result<_>>()?;
    let flatten = |s: &SpinorField| -> Vec<Complex64> {
        (0..points)
            .flat_map(|p| s.at(p).iter().copied().collect::<Vec<_>>())
            .collect()
    };
    let unflatten = |y: &[Complex64]| -> SpinorField {
        let pts = (0..points).map(|p| Spinor::from_column_slice(&y[p * dim..(p + 1) * dim]));
        SpinorField::from_points(&chart, dim, pts)
    };
    let t0 = traj.time(0);
    let mut y = flatten(&big0);
    let mut spinors = vec![big0];
    let mut times = vec![t0];
    for step in 0..steps {
        let base = 2 * step;
        let mut rhs = |t: f64, y: &Vec<Complex64>| -> Result<Vec<Complex64>> {
            let k = base + ((t - (t0 + base as f64 * dt)) / dt).round() as usize;
            let mut out = Vec::with_capacity(y.len());
            for p in 0..points {
                let v = Spinor::from_column_slice(&y[p * dim..(p + 1) * dim]);
                out.extend((&gens[k][p] * v).iter().copied());
            }
            Ok(out)
        };
        y = rk4_step(t0 + base as f64 * dt, &y, 2.0 * dt, &mut rhs)?;
        times.push(traj.time(base + 2));
        spinors.push(unflatten(&y));
    }
    let mut horizontal = Vec::with_capacity(spinors.len());
    for (j, big) in spinors.iter().enumerate() {
        let s = traj.sample(2 * j);
        let frame = SpinFrame::new(&s.g)?;
        let h = ambient_horizontal(&frame, &amb, &s.w.matrix(), big);
        horizontal.push(h.iter().map(|x| x.sup_norm()).fold(0.0, f64::max));
    }
    // restriction identity on the first block at the first sample
    let s0 = traj.sample(0);
    let frame0 = SpinFrame::new(&s0.g)?;
    let psi_small = restrict_from_ambient(&spinors[0]);
    let amb_d = ambient_horizontal(&frame0, &amb, &s0.w.matrix(), &embed_in_ambient(&psi_small));
    let intrinsic = frame0.covariant_derivative(&psi_small)?;
    let w_hat = frame0.to_orthonormal(&s0.w.matrix());
    let mut restriction_defect: f64 = 0.0;
    for a in 0..n {
        let expected = intrinsic[a].sub(
            &frame0
                .clifford_endo(&w_hat, a, &psi_small)
                .scale(Complex64::new(0.5, 0.0)),
        )?;
        restriction_defect = restriction_defect.max(sup_norm_diff(&amb_d[a], &embed_in_ambient(&expected)));
    }
    Ok(ParallelExtension {
        times,
        spinors,
        horizontal,
        restriction_defect,
    })
}

/// Parallel extension of a generalized Killing spinor along a Ricci-flat trajectory.
///
/// Requires `λ = 0`, a completed trajectory with Einstein residual at most
/// [`EINSTEIN_TOL`], and `ψ0` a generalized Killing spinor for `W_0` to [`GKS_TOL`].
pub fn extend_parallel(psi0: &SpinorField, traj: &Trajectory) -> Result<ParallelExtension> {
    if traj.lambda() != 0.0 {
        return Err(Error::Precondition(format!(
            "trajectory has lambda = {}, expected 0",
            traj.lambda()
        )));
    }
    match traj.status() {
        Status::Completed => {}
        s => return Err(Error::Precondition(format!("trajectory did not complete: {s:?}"))),
    }
    let einstein = einstein_residual(traj, 0.0)?
        .iter()
        .map(|(_, r)| *r)
        .fold(0.0, f64::max);
    if !(einstein <= EINSTEIN_TOL) {
        return Err(Error::Precondition(format!(
            "trajectory Einstein residual {einstein:e} exceeds {EINSTEIN_TOL:e}"
        )));
    }
    let s0 = traj.sample(0);
    let gks = gks_residual(psi0, &s0.w, &s0.g)?.max();
    if !(gks <= GKS_TOL) {
        return Err(Error::Precondition(format!(
            "initial spinor is not a generalized Killing spinor (residual {gks:e})"
        )));
    }
    transport_normal(psi0, traj)
}
