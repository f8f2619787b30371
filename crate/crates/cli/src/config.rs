//! Run configuration: built-in defaults, then the JSON file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Flat metric on a periodic grid.
    FlatTorus,
    /// `scale · σ` on SU(2).
    RoundSphere,
    /// Left-invariant `diag(A, B, C)` on SU(2).
    Berger,
    /// Conformally flat grid metric `(1 + a Π sin(m x + φ)) δ`.
    ConformalPerturbation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Left,
    Right,
}

impl From<Frame> for einlab_core::Su2Model {
    fn from(f: Frame) -> Self {
        match f {
            Frame::Left => einlab_core::Su2Model::Left,
            Frame::Right => einlab_core::Su2Model::Right,
        }
    }
}

/// The second fundamental form `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSpec {
    /// `W = α Id`.
    Umbilical { alpha: f64 },
    /// An `endomorphism` snapshot on the metric's chart.
    File { path: PathBuf },
    /// `W = 2A`, with `A` the stress-energy endomorphism of the configured spinor.
    Killing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Metric snapshot; replaces the scenario when set.
    pub metric_file: Option<PathBuf>,
    /// Grid dimension (grid scenarios).
    pub dim: usize,
    /// Grid points per axis (grid scenarios).
    pub points: usize,
    /// SU(2) trivialization (frame scenarios).
    pub frame: Frame,
    /// Round-sphere multiple of `σ`.
    pub scale: f64,
    /// Berger coefficients `(A, B, C)`.
    pub berger: [f64; 3],
    /// Conformal-perturbation amplitude and mode.
    pub amplitude: f64,
    pub mode: usize,
    pub shape: ShapeSpec,
    pub lambda: f64,
    /// Spinor snapshot; the constant spinor `(1, 0)` otherwise.
    pub spinor_file: Option<PathBuf>,
    pub dt: f64,
    pub t_end: f64,
    /// Galerkin cap on grids; `points / 4` when unset.
    pub kmax: Option<usize>,
    /// Jet order `K`.
    pub order: usize,
    /// Trajectory snapshot interval in steps.
    pub snap_every: usize,
    /// Overrides the command's pass tolerance.
    pub tolerance: Option<f64>,
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::RoundSphere,
            metric_file: None,
            dim: 3,
            points: 16,
            frame: Frame::Left,
            scale: 1.0,
            berger: [1.0, 1.0, 4.0],
            amplitude: 0.05,
            mode: 1,
            shape: ShapeSpec::Umbilical { alpha: 1.0 },
            lambda: 0.0,
            spinor_file: None,
            dt: 1e-3,
            t_end: 0.5,
            kmax: None,
            order: 4,
            snap_every: 100,
            tolerance: None,
            seed: 42,
            out: None,
        }
    }
}

/// Flags that override fields of the config file.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long, global = true, value_enum)]
    pub scenario: Option<Scenario>,
    /// Metric snapshot (EFIELD, sym-2-cov).
    #[arg(long = "metric", global = true, value_name = "PATH")]
    pub metric_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub frame: Option<Frame>,
    /// Umbilical shape `W = α Id`.
    #[arg(long, global = true, conflicts_with_all = ["shape_file", "killing"])]
    pub alpha: Option<f64>,
    /// Shape snapshot (EFIELD, endomorphism).
    #[arg(long = "shape", global = true, value_name = "PATH", conflicts_with = "killing")]
    pub shape_file: Option<PathBuf>,
    /// Shape `W = 2A` from the spinor's stress-energy.
    #[arg(long, global = true)]
    pub killing: bool,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Spinor snapshot (ESPIN).
    #[arg(long = "spinor", global = true, value_name = "PATH")]
    pub spinor_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// End time `T` (negative integrates backward).
    #[arg(long = "t-end", global = true, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Jet order `K`.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    #[arg(long = "snap-every", global = true)]
    pub snap_every: Option<usize>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative paths inside the config are relative to the config file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.metric_file, &mut cfg.spinor_file, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let ShapeSpec::File { path } = &mut cfg.shape {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides, seed: Option<u64>, out: Option<PathBuf>) {
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = o.$field { self.$field = v; })* };
        }
        set!(scenario, dim, points, frame, lambda, dt, t_end, order, snap_every);
        if o.metric_file.is_some() {
            self.metric_file = o.metric_file;
        }
        if o.spinor_file.is_some() {
            self.spinor_file = o.spinor_file;
        }
        if o.kmax.is_some() {
            self.kmax = o.kmax;
        }
        if o.tolerance.is_some() {
            self.tolerance = o.tolerance;
        }
        if let Some(alpha) = o.alpha {
            self.shape = ShapeSpec::Umbilical { alpha };
        }
        if let Some(path) = o.shape_file {
            self.shape = ShapeSpec::File { path };
        }
        if o.killing {
            self.shape = ShapeSpec::Killing;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        if out.is_some() {
            self.out = out;
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            bail!("dt must lie in (0, 1e-2], got {}", self.dt);
        }
        if !self.t_end.is_finite() || self.t_end.abs() > 1e3 {
            bail!("T must be finite with |T| <= 1000, got {}", self.t_end);
        }
        if !(2..=12).contains(&self.order) {
            bail!("jet order must lie in 2..=12, got {}", self.order);
        }
        if self.snap_every == 0 {
            bail!("snap_every must be positive");
        }
        if !(1..=4).contains(&self.dim) {
            bail!("grid dimension must lie in 1..=4, got {}", self.dim);
        }
        if !self.lambda.is_finite() {
            bail!("lambda must be finite");
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                bail!("tolerance must be positive, got {t}");
            }
        }
        for p in [&self.metric_file, &self.spinor_file].into_iter().flatten() {
            if !p.is_file() {
                bail!("no such file: {}", p.display());
            }
        }
        if let ShapeSpec::File { path } = &self.shape {
            if !path.is_file() {
                bail!("no such file: {}", path.display());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (output directory excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("einlab-out"))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Git's object id for a blob under the SHA-256 object format.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex(&h.finalize())
}
