//! Left-invariant metrics `diag(A, B, C)` on SU(2) and their evolution.
//!
//! The frame satisfies `[e_1, e_2] = 2e_3` and cyclic, so `(1, 1, 1)` is the
//! unit round S³. Curvature is obtained from the general frame machinery on a
//! one-point SU(2) chart; the evolution reduces to an ODE in `(A, B, C)` and the
//! three Weingarten eigenvalues.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::chart::{Chart, Su2Model};
use crate::constraints::csv_err;
use crate::curvature::{lowered_connection, Geometry};
use crate::error::{Error, Result};
use crate::evolution::{Sample, Status, Trajectory, DEGENERACY_TOL};
use crate::field::{Field, Rank};
use crate::integrate::rk4_step;
use crate::spinor::{SpinFrame, SpinorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeftInvariantMetric {
    coeffs: [f64; 3],
}

impl LeftInvariantMetric {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let coeffs = [a, b, c];
        if coeffs.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::Precondition(format!(
                "left-invariant metric coefficients must be positive, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self { coeffs })
    }

    /// `s · (1, 1, 1)`: the round sphere of radius `√s`.
    pub fn round(s: f64) -> Result<Self> {
        Self::new(s, s, s)
    }

    pub fn coeffs(&self) -> [f64; 3] {
        self.coeffs
    }

    pub fn is_round(&self) -> bool {
        let [a, b, c] = self.coeffs;
        let scale = a.max(b).max(c);
        (a - b).abs() <= 1e-12 * scale && (b - c).abs() <= 1e-12 * scale
    }

    /// The metric as a field on an SU(2) frame chart.
    pub fn field(&self, chart: &Arc<Chart>) -> Field {
        diagonal_field(chart, Rank::Sym2Cov, self.coeffs)
    }
}

fn diagonal_field(chart: &Arc<Chart>, rank: Rank, d: [f64; 3]) -> Field {
    let mut v = [0.0; 9];
    for i in 0..3 {
        v[i * 4] = d[i];
    }
    Field::constant(chart, rank, &v).expect("SU(2) charts are three-dimensional")
}

pub fn su2_chart(model: Su2Model) -> Arc<Chart> {
    Arc::new(Chart::su2(model))
}

/// Connection and curvature of a left-invariant metric.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCurvature {
    /// `connection[i][j][l] = g(∇_{e_i} e_j, e_l)`.
    pub connection: [[[f64; 3]; 3]; 3],
    /// Diagonal of `Ric(e_i, e_i)`; the off-diagonal entries vanish.
    pub ricci: [f64; 3],
    /// Largest off-diagonal `|Ric(e_i, e_j)|`.
    pub ricci_off_diagonal: f64,
    pub scal: f64,
}

pub fn frame_curvature(m: &LeftInvariantMetric) -> FrameCurvature {
    let chart = su2_chart(Su2Model::Left);
    let g = m.field(&chart).matrix();
    let lowered = lowered_connection(&g);
    let geo = Geometry::new(g).expect("positive coefficients give a positive metric");
    let ric = geo.ricci();
    let scal = geo.scalar_curvature(&ric).value(0);
    let mut connection = [[[0.0; 3]; 3]; 3];
    let mut ricci = [0.0; 3];
    let mut ricci_off_diagonal: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                connection[i][j][l] = lowered[i][j][l].value(0);
            }
            if i == j {
                ricci[i] = ric[i][i].value(0);
            } else {
                ricci_off_diagonal = ricci_off_diagonal.max(ric[i][j].value(0).abs());
            }
        }
    }
    FrameCurvature {
        connection,
        ricci,
        ricci_off_diagonal,
        scal,
    }
}

/// `(A, B, C, w_1, w_2, w_3)` along the flow, sampled every `dt`.
#[derive(Clone, Debug)]
pub struct DiagonalTrajectory {
    times: Vec<f64>,
    states: Vec<[f64; 6]>,
    dt: f64,
    lambda: f64,
    status: Status,
}

impl DiagonalTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn metric(&self, k: usize) -> [f64; 3] {
        let s = &self.states[k];
        [s[0], s[1], s[2]]
    }

    pub fn weingarten(&self, k: usize) -> [f64; 3] {
        let s = &self.states[k];
        [s[3], s[4], s[5]]
    }

    /// CSV with header `t,A,B,C,WA,WB,WC`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "A", "B", "C", "WA", "WB", "WC"])
            .map_err(csv_err)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(s.iter().map(|x| format!("{x:.16e}")));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// The same samples as a general trajectory on an SU(2) frame chart.
    pub fn to_trajectory(&self, model: Su2Model) -> Result<Trajectory> {
        let chart = su2_chart(model);
        let samples = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| Sample {
                t,
                g: diagonal_field(&chart, Rank::Sym2Cov, [s[0], s[1], s[2]]),
                w: diagonal_field(&chart, Rank::Endomorphism, [s[3], s[4], s[5]]),
            })
            .collect();
        Ok(Trajectory::new(samples, self.dt, self.lambda)?.with_status(self.status))
    }
}

/// Right-hand side of the reduced system:
/// `Ȧ_i = −2 A_i w_i`, `ẇ_i = −Ric_ii / A_i + w_i tr W + λ`.
pub fn homogeneous_rhs(y: &[f64; 6], lambda: f64) -> Result<[f64; 6]> {
    let m = LeftInvariantMetric::new(y[0], y[1], y[2]).map_err(|_| Error::NotPositiveDefinite {
        index: vec![0],
        minor: 1,
        pivot: y[0].min(y[1]).min(y[2]),
    })?;
    let ric = frame_curvature(&m).ricci;
    let tr = y[3] + y[4] + y[5];
    let mut out = [0.0; 6];
    for i in 0..3 {
        out[i] = -2.0 * y[i] * y[i + 3];
        out[i + 3] = -ric[i] / y[i] + y[i + 3] * tr + lambda;
    }
    Ok(out)
}

/// Integrates left-invariant data `(m0, diag(w0), λ)` to `t_end` (backward if negative).
///
/// Stops with [`Status::Degenerated`] once `min(A, B, C)` falls below
/// [`DEGENERACY_TOL`] times its initial value.
pub fn evolve_homogeneous(
    m0: &LeftInvariantMetric,
    w0: [f64; 3],
    lambda: f64,
    t_end: f64,
    dt: f64,
) -> Result<DiagonalTrajectory> {
    if !(dt > 0.0) || !t_end.is_finite() || w0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition(format!(
            "need dt > 0, finite T and W (dt = {dt}, T = {t_end})"
        )));
    }
    let steps = (t_end.abs() / dt).round() as usize;
    let h = dt * t_end.signum();
    let [a, b, c] = m0.coeffs();
    let min0 = a.min(b).min(c);
    let mut y = [a, b, c, w0[0], w0[1], w0[2]];
    let mut times = vec![0.0];
    let mut states = vec![y];
    let mut status = Status::Completed;
    let mut rhs = |_t: f64, y: &[f64; 6]| homogeneous_rhs(y, lambda);
    for k in 0..steps {
        let t_next = (k + 1) as f64 * h;
        let next = match rk4_step(k as f64 * h, &y, h, &mut rhs) {
            Ok(v) => v,
            Err(Error::NotPositiveDefinite { .. }) => {
                status = Status::Degenerated { t: t_next };
                break;
            }
            Err(e) => return Err(e),
        };
        let min_now = y[0].min(y[1]).min(y[2]);
        if next.iter().any(|x| !x.is_finite()) {
            status = if min_now < 1e-2 * min0 {
                Status::Degenerated { t: t_next }
            } else {
                Status::BlowUp { t: t_next }
            };
            break;
        }
        if !(next[0].min(next[1]).min(next[2]) >= DEGENERACY_TOL * min0) {
            status = Status::Degenerated { t: t_next };
            break;
        }
        y = next;
        times.push(t_next);
        states.push(y);
    }
    if h < 0.0 {
        times.reverse();
        states.reverse();
    }
    Ok(DiagonalTrajectory {
        times,
        states,
        dt,
        lambda,
        status,
    })
}

/// Which invariant trivialization the constant spinor is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chirality {
    Left,
    Right,
}

impl From<Chirality> for Su2Model {
    fn from(c: Chirality) -> Self {
        match c {
            Chirality::Left => Su2Model::Left,
            Chirality::Right => Su2Model::Right,
        }
    }
}

/// Killing constant `κ` of an invariant spinor on a round metric, and the
/// residual `max_a |∇_{E_a}ψ − κ E_a·ψ|` over a basis of constant spinors.
pub fn killing_spinor_check(m: &LeftInvariantMetric, chirality: Chirality) -> Result<(f64, f64)> {
    if !m.is_round() {
        return Err(Error::NotRound);
    }
    let chart = su2_chart(chirality.into());
    let g = m.field(&chart);
    let frame = SpinFrame::new(&g)?;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let basis = [vec![one, zero], vec![zero, one]];
    let probe = SpinorField::constant(&chart, &basis[0]);
    let d = frame.covariant_derivative(&probe)?;
    let v = probe.at(0);
    let kappa = (0..3)
        .map(|a| crate::clifford::real_inner(&d[a].at(0), &(frame.rep().gamma(a) * &v)))
        .sum::<f64>()
        / 3.0;
    let mut residual: f64 = 0.0;
    for b in &basis {
        let psi = SpinorField::constant(&chart, b);
        let d = frame.covariant_derivative(&psi)?;
        let v = psi.at(0);
        for (a, da) in d.iter().enumerate() {
            let r = da.at(0) - frame.rep().gamma(a) * &v * Complex64::new(kappa, 0.0);
            residual = residual.max(r.norm());
        }
    }
    Ok((kappa, residual))
}
