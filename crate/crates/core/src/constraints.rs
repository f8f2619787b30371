//! Gauss–Codazzi constraints and the Ricci tensor of `dt² + g_t`.

use std::io::Write;
use std::sync::Arc;

use crate::algebra::{self, Mat, Scalar};
use crate::chart::Chart;
use crate::curvature::{volume_density, Geometry};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::field::{Field, Rank, ScalarField};

/// Cauchy data `(g, W, λ)`: a metric, a `g`-symmetric endomorphism and the
/// Einstein constant of the sought ambient metric.
#[derive(Clone, Debug)]
pub struct MetricState {
    pub g: Field,
    pub w: Field,
    pub lambda: f64,
}

impl MetricState {
    /// Checks ranks, charts and `g`-symmetry of `W` (to `1e-12` relative).
    pub fn new(g: Field, w: Field, lambda: f64) -> Result<Self> {
        g.expect_rank(Rank::Sym2Cov)?;
        w.expect_rank(Rank::Endomorphism)?;
        g.same_chart(&w)?;
        let gw = Field::from_matrix(Rank::Sym2Cov, algebra::mat_mul(&g.matrix(), &w.matrix()));
        let defect = gw.symmetry_defect();
        if defect > 1e-12 * gw.sup_norm().max(1.0) {
            return Err(Error::Precondition(format!("W is not g-symmetric (defect {defect:e})")));
        }
        let gdefect = g.symmetry_defect();
        if gdefect > 1e-12 * g.sup_norm().max(1.0) {
            return Err(Error::Precondition(format!(
                "metric is not symmetric (defect {gdefect:e})"
            )));
        }
        Ok(Self { g, w, lambda })
    }

    /// Umbilical data `(g, α Id, λ)`.
    pub fn umbilical(g: Field, alpha: f64, lambda: f64) -> Result<Self> {
        let w = Field::identity(g.chart(), Rank::Endomorphism).scale(alpha);
        Self::new(g, w, lambda)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.g.chart()
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn is_finite(&self) -> bool {
        self.g.is_finite() && self.w.is_finite()
    }
}

/// `f = ½((n−1)λ − Scal − tr W² + tr²W)`, `ω = d tr W + δW` and `H = tr W`.
pub(crate) fn constraint_terms<T: Scalar>(geo: &Geometry<T>, w: &Mat<T>, lambda: f64) -> (T, Vec<T>, T) {
    let n = geo.dim();
    let scal = geo.scalar_curvature(&geo.ricci());
    let h = algebra::trace(w);
    let tr_w2 = algebra::trace_product(w, w);
    let f = scal
        .add(&tr_w2)
        .sub(&h.mul(&h))
        .scale(-0.5)
        .add(&h.constant_like(0.5 * (n as f64 - 1.0) * lambda));
    let dh = geo.gradient(&h);
    let div = geo.divergence_endo(w);
    let omega = dh.iter().zip(&div).map(|(a, b)| a.add(b)).collect();
    (f, omega, h)
}

/// Sup and volume-weighted `L²` norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub sup: f64,
    pub l2: f64,
}

/// Constraint violation of a [`MetricState`].
#[derive(Clone, Debug)]
pub struct ConstraintResidual {
    pub f: ScalarField,
    pub omega: Field,
    /// `H = tr W`
    pub mean_curvature: ScalarField,
    pub f_norms: Norms,
    /// Norms of the pointwise length `|ω|_g`.
    pub omega_norms: Norms,
}

impl ConstraintResidual {
    /// `max(‖f‖_∞, ‖ω‖_∞)`
    pub fn sup(&self) -> f64 {
        self.f_norms.sup.max(self.omega_norms.sup)
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.sup() <= tol
    }
}

/// Default pass tolerance: tighter for invariant-frame (closed form) data.
pub fn default_tolerance(chart: &Chart) -> f64 {
    if chart.is_grid() {
        1e-7
    } else {
        1e-9
    }
}

fn norms(values: &ScalarField, density: &ScalarField, cell: f64) -> Norms {
    let l2 = values
        .values()
        .iter()
        .zip(density.values())
        .map(|(x, d)| x * x * d * cell)
        .sum::<f64>()
        .sqrt();
    Norms {
        sup: values.sup_norm(),
        l2,
    }
}

pub fn constraint_residual(state: &MetricState) -> Result<ConstraintResidual> {
    let geo = Geometry::new(state.g.matrix())?;
    let (f, omega, h) = constraint_terms(&geo, &state.w.matrix(), state.lambda);
    let omega_sq = algebra::sum(
        (0..geo.dim())
            .flat_map(|i| (0..geo.dim()).map(move |j| (i, j)))
            .map(|(i, j)| geo.ginv[i][j].mul(&omega[i]).mul(&omega[j])),
        &f,
    );
    let omega_len = omega_sq.map(|x| x.max(0.0).sqrt());
    let density = volume_density(&state.g)?;
    let cell = state.chart().cell_volume();
    Ok(ConstraintResidual {
        f_norms: norms(&f, &density, cell),
        omega_norms: norms(&omega_len, &density, cell),
        f,
        omega: Field::from_vector(Rank::OneForm, omega),
        mean_curvature: h,
    })
}

/// `α = sqrt(Scal/(n(n−1)) − λ/n)`, the umbilical factor making `(g, α Id, λ)`
/// satisfy the constraints when `Scal` is constant.
pub fn umbilical_alpha(scal: f64, n: usize, lambda: f64) -> Result<f64> {
    let nf = n as f64;
    let radicand = scal / (nf * (nf - 1.0)) - lambda / nf;
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { radicand });
    }
    Ok(radicand.sqrt())
}

/// Ricci curvature of `dt² + g_t` split along `ν = ∂_t` and `TM`.
#[derive(Clone, Debug)]
pub struct AmbientRicci {
    pub t: f64,
    pub ric_nn: ScalarField,
    pub ric_nx: Field,
    pub ric_xy: Field,
    pub scal: ScalarField,
    /// `Ric(ν,ν) + tr_g Ric(X,Y)`, an independent evaluation of `scal`.
    pub scal_from_trace: ScalarField,
    /// `Scal^Z − 2 Ric(ν,ν)`
    pub gauss_lhs: ScalarField,
    /// `Scal^{g_t} + tr W² − tr² W`
    pub gauss_rhs: ScalarField,
    /// The sampled metric.
    pub g: Field,
}

impl AmbientRicci {
    /// `‖Scal^Z − (Ric(ν,ν) + tr_g Ric_XY)‖_∞`
    pub fn scal_consistency(&self) -> f64 {
        self.scal.sub(&self.scal_from_trace).sup_norm()
    }

    /// `‖(Scal^Z − 2Ric(ν,ν)) − (Scal + tr W² − tr² W)‖_∞`
    pub fn gauss_defect(&self) -> f64 {
        self.gauss_lhs.sub(&self.gauss_rhs).sup_norm()
    }

    /// Sup over components of `|Ric^Z − λ g^Z|` in the frame `(∂_t, e_i)`.
    pub fn einstein_defect(&self, lambda: f64) -> f64 {
        let nn = self.ric_nn.map(|x| x - lambda).sup_norm();
        let nx = self.ric_nx.sup_norm();
        let xy = self.ric_xy.add_scaled(&self.g, -lambda).sup_norm();
        nn.max(nx).max(xy)
    }
}

pub(crate) struct AmbientParts<T> {
    pub nn: T,
    pub nx: Vec<T>,
    pub xy: Mat<T>,
    pub scal: T,
    pub scal_from_trace: T,
    pub gauss_lhs: T,
    pub gauss_rhs: T,
}

/// Ambient curvature from `g`, `ġ`, `g̈`, with `W = −½ g⁻¹ ġ`.
pub(crate) fn ambient_parts<T: Scalar>(geo: &Geometry<T>, gdot: &Mat<T>, gddot: &Mat<T>) -> AmbientParts<T> {
    let w = algebra::mat_scale(&geo.raise(gdot), -0.5);
    let h = algebra::trace(&w);
    let tr_w2 = algebra::trace_product(&w, &w);
    let tr_gddot = algebra::trace_product(&geo.ginv, gddot);
    let ric = geo.ricci();
    let scal_g = geo.scalar_curvature(&ric);

    let nn = tr_w2.sub(&tr_gddot.scale(0.5));
    let dh = geo.gradient(&h);
    let nx = dh.iter().zip(geo.divergence_endo(&w)).map(|(a, b)| a.add(&b)).collect();
    // 2 g(W·, W·) = ½ ġ g⁻¹ ġ
    let quad = algebra::mat_mul(gdot, &geo.raise(gdot));
    let n = geo.dim();
    let xy: Mat<T> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    ric[i][j]
                        .add(&quad[i][j].scale(0.5))
                        .add(&h.mul(&gdot[i][j]).scale(0.5))
                        .sub(&gddot[i][j].scale(0.5))
                })
                .collect()
        })
        .collect();
    let scal = scal_g.add(&tr_w2.scale(3.0)).sub(&h.mul(&h)).sub(&tr_gddot);
    let scal_from_trace = nn.add(&geo.scalar_curvature(&xy));
    let gauss_lhs = scal.sub(&nn.scale(2.0));
    let gauss_rhs = scal_g.add(&tr_w2).sub(&h.mul(&h));
    AmbientParts {
        nn,
        nx,
        xy,
        scal,
        scal_from_trace,
        gauss_lhs,
        gauss_rhs,
    }
}

/// Ambient Ricci at the sample `k`, with `ġ`, `g̈` from five-point stencils.
pub fn ambient_ricci_at(traj: &Trajectory, k: usize) -> Result<AmbientRicci> {
    let len = traj.len();
    if len < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            available: len,
        });
    }
    if k < 2 || k + 2 >= len {
        return Err(Error::NotASample(traj.time(k.min(len - 1))));
    }
    let dt = traj.dt();
    let g = |j: usize| &traj.sample(j).g;
    let gdot = g(k - 2)
        .add_scaled(g(k - 1), -8.0)
        .add_scaled(g(k + 1), 8.0)
        .add_scaled(g(k + 2), -1.0)
        .scale(1.0 / (12.0 * dt));
    let gddot = g(k)
        .scale(-30.0)
        .add_scaled(g(k - 1), 16.0)
        .add_scaled(g(k + 1), 16.0)
        .add_scaled(g(k - 2), -1.0)
        .add_scaled(g(k + 2), -1.0)
        .scale(1.0 / (12.0 * dt * dt));
    let geo = Geometry::new(g(k).matrix())?;
    let p = ambient_parts(&geo, &gdot.matrix(), &gddot.matrix());
    Ok(AmbientRicci {
        t: traj.time(k),
        ric_nn: p.nn,
        ric_nx: Field::from_vector(Rank::OneForm, p.nx),
        ric_xy: Field::from_matrix(Rank::Sym2Cov, p.xy),
        scal: p.scal,
        scal_from_trace: p.scal_from_trace,
        gauss_lhs: p.gauss_lhs,
        gauss_rhs: p.gauss_rhs,
        g: g(k).clone(),
    })
}

/// Ambient Ricci at the sample time `t`.
pub fn ambient_ricci(traj: &Trajectory, t: f64) -> Result<AmbientRicci> {
    let k = traj.index_of(t).ok_or(Error::NotASample(t))?;
    ambient_ricci_at(traj, k)
}

/// `sup |Ric^Z − λ g^Z|` at every sample with a full five-point stencil.
pub fn einstein_residual(traj: &Trajectory, lambda: f64) -> Result<Vec<(f64, f64)>> {
    if traj.len() < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            available: traj.len(),
        });
    }
    (2..traj.len() - 2)
        .map(|k| Ok((traj.time(k), ambient_ricci_at(traj, k)?.einstein_defect(lambda))))
        .collect()
}

/// One row of the residual report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRow {
    pub t: f64,
    pub f_sup: f64,
    pub omega_sup: f64,
    /// `NaN` where the five-point stencil does not fit.
    pub einstein_sup: f64,
}

/// Constraint and Einstein residuals at every sample of a trajectory.
pub fn residual_rows(traj: &Trajectory) -> Result<Vec<ResidualRow>> {
    let einstein = if traj.len() >= 5 {
        einstein_residual(traj, traj.lambda())?
    } else {
        Vec::new()
    };
    (0..traj.len())
        .map(|k| {
            let c = constraint_residual(&traj.state(k))?;
            let einstein_sup = if k >= 2 && k + 2 < traj.len() {
                einstein[k - 2].1
            } else {
                f64::NAN
            };
            Ok(ResidualRow {
                t: traj.time(k),
                f_sup: c.f_norms.sup,
                omega_sup: c.omega_norms.sup,
                einstein_sup,
            })
        })
        .collect()
}

pub fn write_residual_csv(out: impl Write, rows: &[ResidualRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "f_sup", "omega_sup", "einstein_sup"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record(
            [r.t, r.f_sup, r.omega_sup, r.einstein_sup]
                .iter()
                .map(|x| format!("{x:.16e}")),
        )
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
