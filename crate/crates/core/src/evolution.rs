//! Evolution of `(g_t, W_t)` in the normal-geodesic gauge `dt² + g_t`.
//!
//! The system is `ġ = −2 g W`, `Ẇ = −g⁻¹Ric + W tr W + λ Id`, integrated with
//! fixed-step RK4. On grid charts the right-hand side is Galerkin-projected to
//! Fourier modes `|k_d| <= K_max`; the continuum problem is elliptic and would
//! otherwise amplify mode `k` like `e^{|k| t}`.

use std::sync::Arc;

use log::{debug, warn};

use crate::algebra::{self, Scalar};
use crate::chart::Chart;
use crate::constraints::{constraint_residual, MetricState};
use crate::curvature::{self, Geometry};
use crate::error::{Error, Result};
use crate::field::{cholesky, Field, Rank, ScalarField};
use crate::integrate::{rk4_step, OdeState};

/// Constraint violation above which `evolve` logs a warning.
pub const CONSTRAINT_WARN: f64 = 1e-6;

/// Default relative pivot floor, see [`EvolveOptions::degeneracy_tol`].
pub const DEGENERACY_TOL: f64 = 1e-4;

/// How an integration ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Status {
    Completed,
    /// The metric lost positive definiteness at `t`.
    Degenerated {
        t: f64,
    },
    /// A non-finite value appeared at `t`.
    BlowUp {
        t: f64,
    },
}

impl Status {
    pub fn is_completed(&self) -> bool {
        matches!(self, Status::Completed)
    }
}

/// One sample `(t, g_t, W_t)`.
#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    pub g: Field,
    pub w: Field,
}

/// Uniformly sampled family `(t_k, g_k, W_k)` with increasing `t_k`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    samples: Vec<Sample>,
    dt: f64,
    lambda: f64,
    kmax: Option<usize>,
    status: Status,
}

impl Trajectory {
    /// Wraps precomputed samples; times must increase with step `dt`.
    pub fn new(samples: Vec<Sample>, dt: f64, lambda: f64) -> Result<Self> {
        if samples.is_empty() || !(dt > 0.0) {
            return Err(Error::Precondition("trajectory needs samples and dt > 0".into()));
        }
        for pair in samples.windows(2) {
            let step = pair[1].t - pair[0].t;
            if (step - dt).abs() > 1e-9 * dt.max(pair[1].t.abs()) {
                return Err(Error::Precondition(format!(
                    "non-uniform step {step} at t = {}",
                    pair[0].t
                )));
            }
        }
        Ok(Self {
            samples,
            dt,
            lambda,
            kmax: None,
            status: Status::Completed,
        })
    }

    /// Samples a closed-form family at `t0 + k dt`, `k = 0..count`.
    pub fn from_fn(t0: f64, dt: f64, count: usize, lambda: f64, f: impl Fn(f64) -> (Field, Field)) -> Result<Self> {
        let samples = (0..count)
            .map(|k| {
                let t = t0 + k as f64 * dt;
                let (g, w) = f(t);
                Sample { t, g, w }
            })
            .collect();
        Self::new(samples, dt, lambda)
    }

    /// Records how the run that produced the samples ended.
    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn integrator(&self) -> &'static str {
        "rk4"
    }

    /// Galerkin mode cap used on grid charts.
    pub fn kmax(&self) -> Option<usize> {
        self.kmax
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.samples[0].g.chart()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.samples[k].t
    }

    pub fn sample(&self, k: usize) -> &Sample {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn state(&self, k: usize) -> MetricState {
        let s = &self.samples[k];
        MetricState {
            g: s.g.clone(),
            w: s.w.clone(),
            lambda: self.lambda,
        }
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("non-empty")
    }

    /// Index of the sample at time `t` (to `1e-9 dt`).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let t0 = self.samples[0].t;
        let k = ((t - t0) / self.dt).round();
        if k < 0.0 || k as usize >= self.len() {
            return None;
        }
        let k = k as usize;
        ((self.samples[k].t - t).abs() <= 1e-9 * self.dt).then_some(k)
    }

    /// `max_k ‖ġ_k + 2 g_k W_k‖_∞` with `ġ` from five-point differences.
    pub fn gauge_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for k in 2..self.len().saturating_sub(2) {
            let g = |j: usize| &self.samples[j].g;
            let gdot = g(k - 2)
                .add_scaled(g(k - 1), -8.0)
                .add_scaled(g(k + 1), 8.0)
                .add_scaled(g(k + 2), -1.0)
                .scale(1.0 / (12.0 * self.dt));
            let gw = Field::from_matrix(
                Rank::Sym2Cov,
                algebra::mat_mul(&g(k).matrix(), &self.samples[k].w.matrix()),
            );
            worst = worst.max(gdot.add_scaled(&gw, 2.0).sup_norm());
        }
        worst
    }
}

/// Integration settings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvolveOptions {
    /// Galerkin cap on grids; `None` means `N/4`.
    pub kmax: Option<usize>,
    /// Relative pivot floor: the metric counts as degenerate once its smallest
    /// squared Cholesky pivot falls below `degeneracy_tol` times the initial one.
    /// `None` means `1e-4`, a hundredfold collapse of some length scale. A fixed
    /// step cannot resolve `W ~ 1/(t₁ − t)` near a focal time `t₁` and would
    /// otherwise step across the singular instant.
    pub degeneracy_tol: Option<f64>,
}

impl EvolveOptions {
    fn kmax_for(&self, chart: &Chart) -> Option<usize> {
        chart
            .is_grid()
            .then(|| self.kmax.unwrap_or(chart.points_per_axis() / 4))
    }
}

/// `(ġ, Ẇ)` for the corrected system.
pub fn evolution_rhs(state: &MetricState, kmax: Option<usize>) -> Result<(Field, Field)> {
    let geo = Geometry::new(state.g.matrix())?;
    let w = state.w.matrix();
    let gdot = algebra::mat_scale(&geo.lower(&w), -2.0);
    let ric = geo.ricci();
    let h = algebra::trace(&w);
    let n = geo.dim();
    let mut wdot = algebra::mat_sub(&algebra::mat_mul_scalar(&w, &h), &geo.raise(&ric));
    for (i, row) in wdot.iter_mut().enumerate().take(n) {
        row[i] = row[i].map(|x| x + state.lambda);
    }
    let mut gdot = Field::from_matrix(Rank::Sym2Cov, gdot);
    let mut wdot = Field::from_matrix(Rank::Endomorphism, wdot);
    if let Some(k) = kmax {
        if state.chart().is_grid() {
            gdot = gdot.project_modes(k);
            wdot = wdot.project_modes(k);
        }
    }
    Ok((gdot, wdot))
}

#[derive(Clone)]
struct Pair(Field, Field);

impl OdeState for Pair {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        Pair(self.0.add_scaled(&x.0, a), self.1.add_scaled(&x.1, a))
    }
}

/// Smallest squared Cholesky pivot over all points, or `None` if not positive definite.
fn min_pivot(g: &Field) -> Option<f64> {
    let n = g.dim();
    let mut worst = f64::INFINITY;
    for p in 0..g.chart().num_points() {
        let l = cholesky(&g.at(p), n).ok()?;
        for i in 0..n {
            worst = worst.min(l[i * n + i] * l[i * n + i]);
        }
    }
    Some(worst)
}

/// Re-imposes symmetry of `g` and of `g W`, then the Galerkin projection.
fn clean(g: Field, w: Field, kmax: Option<usize>) -> Result<(Field, Field)> {
    let gm = algebra::symmetrize(&g.matrix());
    let gw = algebra::symmetrize(&algebra::mat_mul(&gm, &w.matrix()));
    let ginv = ScalarField::invert_metric(&gm)?;
    let mut g = Field::from_matrix(Rank::Sym2Cov, gm);
    let mut w = Field::from_matrix(Rank::Endomorphism, algebra::mat_mul(&ginv, &gw));
    if let Some(k) = kmax {
        g = g.project_modes(k);
        w = w.project_modes(k);
    }
    Ok((g, w))
}

/// Integrates from `t = 0` to `T` (backward when `T < 0`) with step `dt`.
pub fn evolve(state0: &MetricState, t_end: f64, dt: f64) -> Result<Trajectory> {
    evolve_with(state0, t_end, dt, &EvolveOptions::default())
}

pub fn evolve_with(state0: &MetricState, t_end: f64, dt: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    if !(dt > 0.0) || !t_end.is_finite() {
        return Err(Error::Precondition(format!(
            "need dt > 0 and finite T (dt = {dt}, T = {t_end})"
        )));
    }
    let chart = state0.chart().clone();
    let kmax = opts.kmax_for(&chart);
    let tol = opts.degeneracy_tol.unwrap_or(DEGENERACY_TOL);
    let residual = constraint_residual(state0)?.sup();
    if residual > CONSTRAINT_WARN {
        warn!("initial data violate the constraints (sup residual {residual:e})");
    }
    let pivot0 =
        min_pivot(&state0.g).ok_or_else(|| Error::Precondition("initial metric not positive definite".into()))?;
    let steps = (t_end.abs() / dt).round() as usize;
    let h = dt * t_end.signum();
    let lambda = state0.lambda;

    let mut samples = vec![Sample {
        t: 0.0,
        g: state0.g.clone(),
        w: state0.w.clone(),
    }];
    let mut status = Status::Completed;
    let mut rhs = |_t: f64, y: &Pair| -> Result<Pair> {
        let s = MetricState {
            g: y.0.clone(),
            w: y.1.clone(),
            lambda,
        };
        let (gd, wd) = evolution_rhs(&s, kmax)?;
        Ok(Pair(gd, wd))
    };
    for k in 0..steps {
        let t = k as f64 * h;
        let t_next = (k + 1) as f64 * h;
        let cur = samples.last().expect("non-empty");
        let y = Pair(cur.g.clone(), cur.w.clone());
        let next = match rk4_step(t, &y, h, &mut rhs) {
            Ok(p) => p,
            Err(Error::NotPositiveDefinite { .. }) => {
                status = Status::Degenerated { t: t_next };
                break;
            }
            Err(e) => return Err(e),
        };
        if !next.0.is_finite() || !next.1.is_finite() {
            // a blow-up that follows a collapsing metric is a degeneration
            let collapsing = min_pivot(&cur.g).is_some_and(|p| p < 1e-2 * pivot0);
            status = if collapsing {
                Status::Degenerated { t: t_next }
            } else {
                Status::BlowUp { t: t_next }
            };
            break;
        }
        match min_pivot(&next.0) {
            Some(p) if p >= tol * pivot0 => {}
            _ => {
                status = Status::Degenerated { t: t_next };
                break;
            }
        }
        let (g, w) = match clean(next.0, next.1, kmax) {
            Ok(x) => x,
            Err(Error::NotPositiveDefinite { .. }) => {
                status = Status::Degenerated { t: t_next };
                break;
            }
            Err(e) => return Err(e),
        };
        samples.push(Sample { t: t_next, g, w });
    }
    match status {
        Status::Completed => debug!("evolved {} steps to t = {}", steps, samples.last().map_or(0.0, |s| s.t)),
        s => warn!("evolution stopped: {s:?}"),
    }
    if h < 0.0 {
        samples.reverse();
    }
    let mut traj = Trajectory::new(samples, dt, lambda)?;
    traj.kmax = kmax;
    traj.status = status;
    Ok(traj)
}

/// Integrates backward to `−T` and forward to `T`, so `t = 0` is interior.
pub fn evolve_symmetric(state0: &MetricState, t_half: f64, dt: f64) -> Result<Trajectory> {
    evolve_symmetric_with(state0, t_half, dt, &EvolveOptions::default())
}

pub fn evolve_symmetric_with(state0: &MetricState, t_half: f64, dt: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    let back = evolve_with(state0, -t_half.abs(), dt, opts)?;
    let fwd = evolve_with(state0, t_half.abs(), dt, opts)?;
    let status = if !back.status.is_completed() {
        back.status
    } else {
        fwd.status
    };
    let kmax = fwd.kmax;
    let mut samples = back.samples;
    samples.extend(fwd.samples.into_iter().skip(1));
    let mut traj = Trajectory::new(samples, dt, state0.lambda)?;
    traj.kmax = kmax;
    traj.status = status;
    Ok(traj)
}

/// Both sides of the propagation system at one sample:
/// `∂_t f = δω + 2Hf`, `∂_t ω = df + Hω`.
#[derive(Clone, Debug)]
pub struct PropagationSample {
    pub t: f64,
    pub f: ScalarField,
    pub omega: Field,
    pub f_rate: ScalarField,
    pub f_rhs: ScalarField,
    pub omega_rate: Field,
    pub omega_rhs: Field,
}

impl PropagationSample {
    pub fn f_mismatch(&self) -> f64 {
        self.f_rate.sub(&self.f_rhs).sup_norm()
    }

    pub fn omega_mismatch(&self) -> f64 {
        self.omega_rate.add_scaled(&self.omega_rhs, -1.0).sup_norm()
    }

    pub fn mismatch(&self) -> f64 {
        self.f_mismatch().max(self.omega_mismatch())
    }
}

#[derive(Clone, Debug)]
pub struct PropagationReport {
    pub samples: Vec<PropagationSample>,
}

impl PropagationReport {
    pub fn sup_mismatch(&self) -> f64 {
        self.samples.iter().map(PropagationSample::mismatch).fold(0.0, f64::max)
    }

    /// The sample at time `t`, if it is interior.
    pub fn at(&self, t: f64) -> Option<&PropagationSample> {
        self.samples.iter().find(|s| (s.t - t).abs() < 1e-12)
    }

    /// `max_t max(‖f_t‖_∞, ‖ω_t‖_∞)` over the interior samples.
    pub fn max_violation(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.f.sup_norm().max(s.omega.sup_norm()))
            .fold(0.0, f64::max)
    }
}

/// Compares five-point time derivatives of `(f_t, ω_t)` with the right-hand
/// side of the propagation system at every interior sample.
pub fn monitor_propagation(traj: &Trajectory) -> Result<PropagationReport> {
    let len = traj.len();
    if len < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            available: len,
        });
    }
    let residuals = (0..len)
        .map(|k| constraint_residual(&traj.state(k)))
        .collect::<Result<Vec<_>>>()?;
    let dt = traj.dt();
    let stencil = |get: &dyn Fn(usize) -> Field, k: usize| {
        get(k - 2)
            .add_scaled(&get(k - 1), -8.0)
            .add_scaled(&get(k + 1), 8.0)
            .add_scaled(&get(k + 2), -1.0)
            .scale(1.0 / (12.0 * dt))
    };
    let f_at = |k: usize| Field::scalar(residuals[k].f.clone());
    let w_at = |k: usize| residuals[k].omega.clone();
    let samples = (2..len - 2)
        .map(|k| {
            let r = &residuals[k];
            let g = &traj.sample(k).g;
            let h = &r.mean_curvature;
            let f_rate = stencil(&f_at, k).as_scalar().clone();
            let omega_rate = stencil(&w_at, k);
            let f_rhs = curvature::codifferential(g, &r.omega)?.add(&h.mul(&r.f).scale(2.0));
            let df = curvature::differential(&r.f);
            let omega_rhs = df.add(&r.omega.map_components(|c| c.mul(h)))?;
            Ok(PropagationSample {
                t: traj.time(k),
                f: r.f.clone(),
                omega: r.omega.clone(),
                f_rate,
                f_rhs,
                omega_rate,
                omega_rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropagationReport { samples })
}

/// Observed order `log2(e_coarse / e_fine)` for a halved step.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
