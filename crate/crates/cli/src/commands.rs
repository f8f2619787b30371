use std::path::{Path, PathBuf};

use anyhow::Context;
use einlab_core::constraints::{
    constraint_residual, default_tolerance, einstein_residual, residual_rows, write_residual_csv,
};
use einlab_core::evolution::{evolve_with, EvolveOptions};
use einlab_core::jets::{formal_solution, jet_einstein_residual};
use einlab_core::snapshot::{field_to_string, jet_to_string, spinor_to_string};
use einlab_core::spinor::{
    dirac, extend_parallel, gks_implies_constraints, gks_residual, spin_curvature_residual, stress_energy_from_spinor,
    GKS_TOL,
};
use einlab_core::{Chart, MetricState, Status, Trajectory};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{blob_hash, RunConfig};
use crate::setup;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    Input = 1,
    Failed = 2,
    Degenerated = 3,
    BlowUp = 4,
}

impl Exit {
    fn from_status(s: Status) -> Self {
        match s {
            Status::Completed => Exit::Ok,
            Status::Degenerated { .. } => Exit::Degenerated,
            Status::BlowUp { .. } => Exit::BlowUp,
        }
    }

    fn from_code(c: i64) -> Self {
        match c {
            0 => Exit::Ok,
            2 => Exit::Failed,
            3 => Exit::Degenerated,
            4 => Exit::BlowUp,
            _ => Exit::Input,
        }
    }

    fn pass_or_fail(pass: bool) -> Self {
        if pass {
            Exit::Ok
        } else {
            Exit::Failed
        }
    }
}

pub const REPORTS: [&str; 5] = ["check.json", "manifest.json", "jet.json", "verify.json", "spinor.json"];

pub struct Ctx {
    pub cfg: RunConfig,
    pub command: &'static str,
    hash: String,
    out: PathBuf,
}

impl Ctx {
    pub fn new(cfg: RunConfig, command: &'static str) -> Self {
        Self {
            hash: cfg.hash(),
            out: cfg.out_dir(),
            cfg,
            command,
        }
    }

    fn run_id(&self) -> String {
        format!("{}-{}", self.command, &self.hash[..12])
    }

    fn write(&self, rel: impl AsRef<Path>, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn csv(&self, rel: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|x| format!("{x:.16e}")))?;
        }
        self.write(rel, &w.into_inner()?)
    }

    /// Writes `name` with the common header fields merged into `body`.
    fn report(&self, name: &str, exit: Exit, body: Value) -> anyhow::Result<Exit> {
        let mut m = Map::new();
        m.insert("tool".into(), json!("einlab"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        m.insert("run_id".into(), json!(self.run_id()));
        m.insert("config_hash".into(), json!(self.hash));
        m.insert("config".into(), serde_json::to_value(&self.cfg)?);
        m.insert("exit_code".into(), json!(exit as i32));
        if let Value::Object(b) = body {
            m.extend(b);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(m))?;
        text.push('\n');
        self.write(name, text.as_bytes())?;
        Ok(exit)
    }
}

fn chart_json(chart: &Chart) -> Value {
    json!({ "kind": chart.kind_tag(), "dim": chart.dim(), "points": chart.points_per_axis() })
}

fn status_json(s: Status) -> Value {
    match s {
        Status::Completed => json!({ "kind": "completed" }),
        Status::Degenerated { t } => json!({ "kind": "degenerated", "t": t }),
        Status::BlowUp { t } => json!({ "kind": "blow-up", "t": t }),
    }
}

fn evolve_config(cfg: &RunConfig, state: &MetricState) -> anyhow::Result<Trajectory> {
    let opts = EvolveOptions {
        kmax: cfg.kmax,
        ..Default::default()
    };
    Ok(evolve_with(state, cfg.t_end, cfg.dt, &opts)?)
}

pub fn check(ctx: &Ctx) -> anyhow::Result<Exit> {
    let state = setup::state(&ctx.cfg)?;
    let res = constraint_residual(&state)?;
    let tol = ctx.cfg.tolerance.unwrap_or_else(|| default_tolerance(state.chart()));
    let pass = res.satisfied(tol);
    println!(
        "check: f_sup = {}, omega_sup = {}, tolerance = {tol} -> {}",
        res.f_norms.sup,
        res.omega_norms.sup,
        if pass { "satisfied" } else { "violated" }
    );
    ctx.report(
        "check.json",
        Exit::pass_or_fail(pass),
        json!({
            "chart": chart_json(state.chart()),
            "lambda": state.lambda,
            "f": { "sup": res.f_norms.sup, "l2": res.f_norms.l2, "min": res.f.min(), "max": res.f.max() },
            "omega": { "sup": res.omega_norms.sup, "l2": res.omega_norms.l2 },
            "mean_curvature": { "min": res.mean_curvature.min(), "max": res.mean_curvature.max() },
            "tolerance": tol,
            "pass": pass,
        }),
    )
}

pub fn evolve(ctx: &Ctx) -> anyhow::Result<Exit> {
    let state = setup::state(&ctx.cfg)?;
    let g0 = field_to_string(&state.g);
    let w0 = field_to_string(&state.w);
    ctx.write("initial/g.efield", g0.as_bytes())?;
    ctx.write("initial/w.efield", w0.as_bytes())?;
    let traj = evolve_config(&ctx.cfg, &state)?;

    let mut snapshots = Vec::new();
    let last = traj.len() - 1;
    for k in (0..traj.len()).filter(|k| k % ctx.cfg.snap_every == 0 || *k == last) {
        let s = traj.sample(k);
        for (tag, field) in [("g", &s.g), ("w", &s.w)] {
            let rel = format!("snapshots/{tag}_{k:06}.efield");
            ctx.write(&rel, field_to_string(field).as_bytes())?;
        }
        snapshots.push(json!({ "step": k, "t": s.t }));
    }
    let rows = residual_rows(&traj)?;
    let mut csv = Vec::new();
    write_residual_csv(&mut csv, &rows)?;
    ctx.write("residuals.csv", &csv)?;

    let exit = Exit::from_status(traj.status());
    println!(
        "evolve: {} samples to t = {}, status {:?}",
        traj.len(),
        traj.last().t,
        traj.status()
    );
    ctx.report(
        "manifest.json",
        exit,
        json!({
            "chart": chart_json(state.chart()),
            "dt": ctx.cfg.dt,
            "t_end": ctx.cfg.t_end,
            "lambda": state.lambda,
            "k_max": traj.kmax(),
            "integrator": traj.integrator(),
            "status": status_json(traj.status()),
            "samples": traj.len(),
            "final_t": traj.last().t,
            "initial_snapshots": [
                { "path": "initial/g.efield", "blob_sha256": blob_hash(g0.as_bytes()) },
                { "path": "initial/w.efield", "blob_sha256": blob_hash(w0.as_bytes()) },
            ],
            "snapshots": snapshots,
            "residuals": "residuals.csv",
        }),
    )
}

pub fn jet(ctx: &Ctx) -> anyhow::Result<Exit> {
    let state = setup::state(&ctx.cfg)?;
    let k = ctx.cfg.order;
    let jet = formal_solution(&state, k)?;
    ctx.write("jet.ejet", jet_to_string(&jet).as_bytes())?;
    let res = jet_einstein_residual(&jet, k - 2)?;
    ctx.csv(
        "jet_residuals.csv",
        &["order", "normal", "mixed", "tangential", "gauss"],
        res.orders
            .iter()
            .map(|o| vec![o.order as f64, o.normal, o.mixed, o.tangential, o.gauss]),
    )?;
    let tol = ctx.cfg.tolerance.unwrap_or(1e-9);
    let pass = res.max() <= tol;
    println!(
        "jet: order {k}, max per-order residual {:e} -> {}",
        res.max(),
        if pass { "pass" } else { "fail" }
    );
    ctx.report(
        "jet.json",
        Exit::pass_or_fail(pass),
        json!({
            "chart": chart_json(state.chart()),
            "order": k,
            "lambda": state.lambda,
            "residual_orders": k - 2,
            "max_residual": res.max(),
            "normal_coefficients": res.normal_coefficients,
            "gauss_coefficients": res.gauss_coefficients,
            "tolerance": tol,
            "pass": pass,
            "jet": "jet.ejet",
            "residuals": "jet_residuals.csv",
        }),
    )
}

pub fn verify(ctx: &Ctx) -> anyhow::Result<Exit> {
    let state = setup::state(&ctx.cfg)?;
    let traj = evolve_config(&ctx.cfg, &state)?;
    let rows = einstein_residual(&traj, state.lambda)?;
    ctx.csv(
        "verify.csv",
        &["t", "einstein_sup"],
        rows.iter().map(|&(t, r)| vec![t, r]),
    )?;
    let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let tol = ctx.cfg.tolerance.unwrap_or(1e-7);
    let pass = traj.status().is_completed() && max <= tol;
    let exit = match Exit::from_status(traj.status()) {
        Exit::Ok => Exit::pass_or_fail(pass),
        other => other,
    };
    println!(
        "verify: max einstein residual {max:e} over {} samples, status {:?}",
        rows.len(),
        traj.status()
    );
    ctx.report(
        "verify.json",
        exit,
        json!({
            "chart": chart_json(state.chart()),
            "lambda": state.lambda,
            "status": status_json(traj.status()),
            "max_einstein_residual": max,
            "tolerance": tol,
            "pass": pass,
            "residuals": "verify.csv",
        }),
    )
}

pub fn spinor(ctx: &Ctx) -> anyhow::Result<Exit> {
    let state = setup::state(&ctx.cfg)?;
    let psi = setup::spinor(&ctx.cfg, state.chart())?;
    ctx.write("spinor.espin", spinor_to_string(&psi).as_bytes())?;
    let (g, w) = (&state.g, &state.w);
    let tol = ctx.cfg.tolerance.unwrap_or(GKS_TOL);

    let gks = gks_residual(&psi, w, g)?.max();
    let h = -0.5 * (0..state.dim()).map(|i| w.get(i, i).mean()).sum::<f64>();
    let dirac_defect = dirac(&psi, g)?.sub(&psi.scale(Complex64::new(h, 0.0)))?.sup_norm();
    let mut body = json!({
        "chart": chart_json(state.chart()),
        "lambda": state.lambda,
        "gks_residual": gks,
        "dirac_trace_defect": dirac_defect,
        "unit_defect": psi.unit_defect(),
        "spin_curvature_residual": spin_curvature_residual(&psi, g).ok(),
    });
    let obj = body.as_object_mut().expect("object literal");
    if let Ok(se) = stress_energy_from_spinor(&psi, g) {
        obj.insert(
            "stress_energy".into(),
            json!({
                "a": se.a.at(0),
                "symmetry_defect": se.symmetry_defect,
                "reconstruction_residual": se.reconstruction_residual,
            }),
        );
    }
    let mut pass = gks <= tol;
    let mut exit = Exit::Ok;
    if pass {
        let c = gks_implies_constraints(&psi, w, g)?;
        obj.insert(
            "implied_constraints".into(),
            json!({
                "lambda": c.lambda,
                "lambda_spread": c.lambda_spread,
                "f_sup": c.residual.f_norms.sup,
                "omega_sup": c.residual.omega_norms.sup,
                "ric1_residual": c.ric1_residual,
            }),
        );
        let traj = evolve_config(&ctx.cfg, &state)?;
        exit = Exit::from_status(traj.status());
        let extension = match extend_parallel(&psi, &traj) {
            Ok(ext) => {
                ctx.csv(
                    "spinor_extension.csv",
                    &["t", "a"],
                    ext.times.iter().zip(&ext.horizontal).map(|(&t, &a)| vec![t, a]),
                )?;
                pass &= ext.max_horizontal() <= 1e-6;
                json!({
                    "max_horizontal": ext.max_horizontal(),
                    "restriction_defect": ext.restriction_defect,
                    "final_t": ext.times.last(),
                    "residuals": "spinor_extension.csv",
                })
            }
            Err(e) => json!({ "skipped": e.to_string() }),
        };
        obj.insert("extension".into(), extension);
        obj.insert("status".into(), status_json(traj.status()));
    }
    obj.insert("tolerance".into(), json!(tol));
    obj.insert("pass".into(), json!(pass));
    if exit == Exit::Ok {
        exit = Exit::pass_or_fail(pass);
    }
    println!("spinor: gks residual {gks:e} -> {}", if pass { "pass" } else { "fail" });
    ctx.report("spinor.json", exit, body)
}

pub fn report(ctx: &Ctx) -> anyhow::Result<Exit> {
    let out = ctx.cfg.out_dir();
    let mut entries = Vec::new();
    let mut exit = Exit::Ok;
    for name in REPORTS {
        let path = out.join(name);
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let code = v["exit_code"].as_i64().unwrap_or(1);
        exit = exit.max(Exit::from_code(code));
        println!(
            "{:<8} exit {code}  {}",
            v["command"].as_str().unwrap_or("?"),
            v["run_id"].as_str().unwrap_or("?")
        );
        entries.push(json!({
            "file": name,
            "command": v["command"],
            "run_id": v["run_id"],
            "config_hash": v["config_hash"],
            "version": v["version"],
            "exit_code": code,
        }));
    }
    if entries.is_empty() {
        anyhow::bail!("no reports found in {}", out.display());
    }
    ctx.report("report.json", exit, json!({ "reports": entries }))
}
