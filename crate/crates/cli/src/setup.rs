//! Builds Cauchy data and spinors from a [`RunConfig`].

use std::sync::Arc;

use anyhow::{bail, Context};
use einlab_core::random::conformal_perturbation;
use einlab_core::snapshot::{read_field, read_spinor};
use einlab_core::spinor::stress_energy_from_spinor;
use einlab_core::{Chart, Field, LeftInvariantMetric, MetricState, Rank, SpinorField};
use num_complex::Complex64;

use crate::config::{RunConfig, Scenario, ShapeSpec};

pub fn metric(cfg: &RunConfig) -> anyhow::Result<Field> {
    if let Some(path) = &cfg.metric_file {
        let g = read_field(path).with_context(|| format!("reading metric {}", path.display()))?;
        g.expect_rank(Rank::Sym2Cov)?;
        return Ok(g);
    }
    let grid = || -> anyhow::Result<Arc<Chart>> { Ok(Arc::new(Chart::grid(cfg.dim, cfg.points)?)) };
    let su2 = || Arc::new(Chart::su2(cfg.frame.into()));
    Ok(match cfg.scenario {
        Scenario::FlatTorus => Field::identity(&grid()?, Rank::Sym2Cov),
        Scenario::RoundSphere => LeftInvariantMetric::round(cfg.scale)?.field(&su2()),
        Scenario::Berger => {
            let [a, b, c] = cfg.berger;
            LeftInvariantMetric::new(a, b, c)?.field(&su2())
        }
        Scenario::ConformalPerturbation => {
            if cfg.amplitude.abs() >= 1.0 {
                bail!(
                    "conformal amplitude must be below 1 in magnitude, got {}",
                    cfg.amplitude
                );
            }
            conformal_perturbation(&grid()?, cfg.amplitude, cfg.mode, cfg.seed)
        }
    })
}

/// The configured spinor, or the constant `(1, 0, …)` on the metric's chart.
pub fn spinor(cfg: &RunConfig, chart: &Arc<Chart>) -> anyhow::Result<SpinorField> {
    if let Some(path) = &cfg.spinor_file {
        let psi = read_spinor(path).with_context(|| format!("reading spinor {}", path.display()))?;
        if **psi.chart() != **chart {
            bail!("spinor {} lives on a different chart than the metric", path.display());
        }
        return Ok(psi);
    }
    let dim = einlab_core::clifford::spinor_dim(chart.dim());
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[0] = Complex64::new(1.0, 0.0);
    Ok(SpinorField::constant(chart, &v))
}

pub fn shape(cfg: &RunConfig, g: &Field) -> anyhow::Result<Field> {
    Ok(match &cfg.shape {
        ShapeSpec::Umbilical { alpha } => Field::identity(g.chart(), Rank::Endomorphism).scale(*alpha),
        ShapeSpec::File { path } => {
            let w = read_field(path).with_context(|| format!("reading shape {}", path.display()))?;
            w.expect_rank(Rank::Endomorphism)?;
            g.same_chart(&w)
                .with_context(|| format!("shape {} lives on a different chart than the metric", path.display()))?;
            w
        }
        ShapeSpec::Killing => {
            let psi = spinor(cfg, g.chart())?;
            let se = stress_energy_from_spinor(&psi, g).context("deriving W from the spinor")?;
            se.a.scale(2.0)
        }
    })
}

pub fn state(cfg: &RunConfig) -> anyhow::Result<MetricState> {
    let g = metric(cfg)?;
    let w = shape(cfg, &g)?;
    Ok(MetricState::new(g, w, cfg.lambda)?)
}
