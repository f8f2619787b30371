//! Coordinate domains: periodic grids and left-invariant frames.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ChartKind {
    /// Uniform periodic grid with `points` samples per axis.
    PeriodicGrid { points: usize, periods: Vec<f64> },
    /// Invariant frame `e_1..e_n` on a Lie group with `[e_i, e_j] = c^k_ij e_k`.
    /// Fields are constant in this frame, so a chart has exactly one point.
    LeftInvariantFrame { structure: Vec<f64> },
}

/// Which trivialization of SU(2) a frame chart models.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Su2Model {
    /// Left-invariant frame, `[e_1, e_2] = 2 e_3` and cyclic.
    Left,
    /// Right-invariant frame, `[f_1, f_2] = -2 f_3` and cyclic.
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    dim: usize,
    kind: ChartKind,
}

impl Chart {
    /// Periodic grid with period 2π on every axis.
    pub fn grid(dim: usize, points: usize) -> Result<Self> {
        Self::grid_with_periods(dim, points, vec![2.0 * PI; dim])
    }

    pub fn grid_with_periods(dim: usize, points: usize, periods: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidChart("dimension must be at least 1".into()));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidChart(format!(
                "points per axis must be a power of two >= 4, got {points}"
            )));
        }
        if periods.len() != dim || periods.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidChart(
                "periods must be {dim} positive finite reals".replace("{dim}", &dim.to_string()),
            ));
        }
        Ok(Self {
            dim,
            kind: ChartKind::PeriodicGrid { points, periods },
        })
    }

    /// Frame chart from structure constants laid out as `c[k][i][j]` (row-major).
    pub fn frame(dim: usize, structure: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidChart("dimension must be at least 1".into()));
        }
        if structure.len() != dim * dim * dim {
            return Err(Error::InvalidChart(format!(
                "expected {} structure constants, got {}",
                dim * dim * dim,
                structure.len()
            )));
        }
        let chart = Self {
            dim,
            kind: ChartKind::LeftInvariantFrame { structure },
        };
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    if (chart.bracket(k, i, j) + chart.bracket(k, j, i)).abs() > 1e-14 {
                        return Err(Error::InvalidChart(format!(
                            "structure constants not antisymmetric at c^{k}_({i},{j})"
                        )));
                    }
                }
            }
        }
        let jacobi = chart.jacobi_defect();
        if jacobi > 1e-14 {
            return Err(Error::InvalidChart(format!(
                "structure constants violate the Jacobi identity by {jacobi:e}"
            )));
        }
        Ok(chart)
    }

    /// Flat torus in its invariant (abelian) frame.
    pub fn abelian(dim: usize) -> Result<Self> {
        Self::frame(dim, vec![0.0; dim * dim * dim])
    }

    /// SU(2) with `[e_i, e_j] = ±2 ε_ijk e_k`; the unit frame metric is the round S³.
    pub fn su2(model: Su2Model) -> Self {
        let sign = match model {
            Su2Model::Left => 1.0,
            Su2Model::Right => -1.0,
        };
        let mut c = vec![0.0; 27];
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[k * 9 + i * 3 + j] = 2.0 * sign;
            c[k * 9 + j * 3 + i] = -2.0 * sign;
        }
        Self {
            dim: 3,
            kind: ChartKind::LeftInvariantFrame { structure: c },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ChartKind {
        &self.kind
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.kind, ChartKind::PeriodicGrid { .. })
    }

    /// Samples per axis; 1 for frame charts.
    pub fn points_per_axis(&self) -> usize {
        match &self.kind {
            ChartKind::PeriodicGrid { points, .. } => *points,
            ChartKind::LeftInvariantFrame { .. } => 1,
        }
    }

    pub fn num_points(&self) -> usize {
        match &self.kind {
            ChartKind::PeriodicGrid { points, .. } => points.pow(self.dim as u32),
            ChartKind::LeftInvariantFrame { .. } => 1,
        }
    }

    pub fn periods(&self) -> Option<&[f64]> {
        match &self.kind {
            ChartKind::PeriodicGrid { periods, .. } => Some(periods),
            ChartKind::LeftInvariantFrame { .. } => None,
        }
    }

    /// `c^k_ij`; identically zero on coordinate grids.
    pub fn bracket(&self, k: usize, i: usize, j: usize) -> f64 {
        match &self.kind {
            ChartKind::PeriodicGrid { .. } => 0.0,
            ChartKind::LeftInvariantFrame { structure } => structure[k * self.dim * self.dim + i * self.dim + j],
        }
    }

    pub fn has_brackets(&self) -> bool {
        match &self.kind {
            ChartKind::PeriodicGrid { .. } => false,
            ChartKind::LeftInvariantFrame { structure } => structure.iter().any(|c| *c != 0.0),
        }
    }

    /// Largest violation of the Jacobi identity over all index triples.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        // [[e_i,e_j],e_k] + cyclic, component m
                        let mut s = 0.0;
                        for p in 0..n {
                            s += self.bracket(p, i, j) * self.bracket(m, p, k)
                                + self.bracket(p, j, k) * self.bracket(m, p, i)
                                + self.bracket(p, k, i) * self.bracket(m, p, j);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Row-major multi-index of a flat point index (last axis fastest).
    pub fn multi_index(&self, mut point: usize) -> Vec<usize> {
        let n = self.points_per_axis();
        let mut idx = vec![0; self.dim];
        if n == 1 {
            return idx;
        }
        for d in (0..self.dim).rev() {
            idx[d] = point % n;
            point /= n;
        }
        idx
    }

    /// Coordinates of a grid point; the origin for frame charts.
    pub fn coordinates(&self, point: usize) -> Vec<f64> {
        match &self.kind {
            ChartKind::PeriodicGrid { points, periods } => self
                .multi_index(point)
                .iter()
                .zip(periods)
                .map(|(&i, &l)| i as f64 * l / *points as f64)
                .collect(),
            ChartKind::LeftInvariantFrame { .. } => vec![0.0; self.dim],
        }
    }

    /// Volume of one grid cell; 1 for frame charts (densities are per unit frame volume).
    pub fn cell_volume(&self) -> f64 {
        match &self.kind {
            ChartKind::PeriodicGrid { points, periods } => periods.iter().map(|l| l / *points as f64).product(),
            ChartKind::LeftInvariantFrame { .. } => 1.0,
        }
    }

    pub fn kind_tag(&self) -> &'static str {
        if self.is_grid() {
            "grid"
        } else {
            "frame"
        }
    }
}
