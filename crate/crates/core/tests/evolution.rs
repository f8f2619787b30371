use std::sync::Arc;

use einlab_core::constraints::constraint_residual;
use einlab_core::evolution::{
    convergence_order, evolution_rhs, evolve, evolve_symmetric, monitor_propagation, EvolveOptions,
};
use einlab_core::{Chart, Field, MetricState, Rank, Status, Su2Model, Trajectory};

fn sphere() -> Arc<Chart> {
    Arc::new(Chart::su2(Su2Model::Left))
}

fn sigma(c: &Arc<Chart>) -> Field {
    Field::identity(c, Rank::Sym2Cov)
}

fn id(c: &Arc<Chart>) -> Field {
    Field::identity(c, Rank::Endomorphism)
}

fn sup_error(traj: &Trajectory, exact: impl Fn(f64) -> f64) -> f64 {
    let c = traj.chart().clone();
    traj.samples()
        .iter()
        .map(|s| s.g.add_scaled(&sigma(&c), -exact(s.t)).sup_norm())
        .fold(0.0, f64::max)
}

fn cone_error(dt: f64) -> f64 {
    let c = sphere();
    let s = MetricState::umbilical(sigma(&c), 1.0, 0.0).unwrap();
    sup_error(&evolve(&s, 0.5, dt).unwrap(), |t| (1.0 - t).powi(2))
}

#[test]
fn rhs_on_sphere_in_s4() {
    let c = sphere();
    let t = 0.3_f64;
    let s = MetricState::new(sigma(&c).scale(t.cos().powi(2)), id(&c).scale(t.tan()), 3.0).unwrap();
    let (gdot, wdot) = evolution_rhs(&s, None).unwrap();
    let sec2 = 1.0 / t.cos().powi(2);
    assert!(wdot.add_scaled(&id(&c), -sec2).sup_norm() <= 1e-12);
    assert!(gdot.add_scaled(&sigma(&c), 2.0 * t.sin() * t.cos()).sup_norm() <= 1e-15);
}

#[test]
fn rhs_on_cone() {
    let c = sphere();
    let s = MetricState::new(sigma(&c).scale(0.25), id(&c).scale(2.0), 0.0).unwrap();
    let (_, wdot) = evolution_rhs(&s, None).unwrap();
    assert!(wdot.add_scaled(&id(&c), -4.0).sup_norm() <= 1e-12);
}

#[test]
fn rhs_of_flat_data_vanishes() {
    let c = Arc::new(Chart::grid(3, 8).unwrap());
    let s = MetricState::new(sigma(&c), Field::zeros(&c, Rank::Endomorphism), 0.0).unwrap();
    let (gdot, wdot) = evolution_rhs(&s, Some(2)).unwrap();
    assert_eq!(gdot.sup_norm(), 0.0);
    assert_eq!(wdot.sup_norm(), 0.0);
}

#[test]
fn cone_matches_closed_form() {
    assert!(cone_error(1e-3) <= 1e-8, "{:e}", cone_error(1e-3));
}

#[test]
fn cone_error_is_fourth_order() {
    let e: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| cone_error(dt)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((14.0..=18.0).contains(&ratio), "{e:?}");
    }
}

#[test]
fn sphere_in_s4_matches_closed_form() {
    let c = sphere();
    let s = MetricState::new(sigma(&c), Field::zeros(&c, Rank::Endomorphism), 3.0).unwrap();
    let traj = evolve(&s, 1.0, 1e-3).unwrap();
    assert_eq!(traj.len(), 1001);
    assert!(sup_error(&traj, |t| t.cos().powi(2)) <= 1e-8);
}

#[test]
fn flat_grid_data_are_a_fixed_point() {
    let c = Arc::new(Chart::grid(3, 8).unwrap());
    let s = MetricState::new(sigma(&c), Field::zeros(&c, Rank::Endomorphism), 0.0).unwrap();
    let traj = evolve(&s, 0.2, 1e-2).unwrap();
    assert_eq!(traj.kmax(), Some(2));
    for smp in traj.samples() {
        assert_eq!(smp.g.add_scaled(&sigma(&c), -1.0).sup_norm(), 0.0);
        assert_eq!(smp.w.sup_norm(), 0.0);
    }
}

#[test]
fn backward_then_forward_recovers_initial_data() {
    let c = sphere();
    let s = MetricState::umbilical(sigma(&c), 1.0, 0.0).unwrap();
    let fwd = evolve(&s, 0.5, 1e-3).unwrap();
    let end = fwd.state(fwd.len() - 1);
    let back = evolve(&end, -0.5, 1e-3).unwrap();
    let first = back.sample(0);
    assert!((first.t + 0.5).abs() < 1e-12);
    assert!(first.g.add_scaled(&s.g, -1.0).sup_norm() <= 1e-7);
    assert!(first.w.add_scaled(&s.w, -1.0).sup_norm() <= 1e-7);
}

#[test]
fn time_reversal_symmetry_on_sphere_solution() {
    let c = sphere();
    let t0 = 0.4_f64;
    // (g_{-t}, -W_{-t}) from data at t0 evolved backward equals data at -t0 evolved forward
    let plus = MetricState::new(sigma(&c).scale(t0.cos().powi(2)), id(&c).scale(t0.tan()), 3.0).unwrap();
    let minus = MetricState::new(sigma(&c).scale(t0.cos().powi(2)), id(&c).scale(-t0.tan()), 3.0).unwrap();
    let a = evolve(&plus, 0.3, 1e-3).unwrap();
    let b = evolve(&minus, -0.3, 1e-3).unwrap();
    for k in 0..a.len() {
        let sa = a.sample(k);
        let sb = b.sample(b.len() - 1 - k);
        assert!((sa.t + sb.t).abs() < 1e-12);
        assert!(sa.g.add_scaled(&sb.g, -1.0).sup_norm() <= 1e-12);
        assert!(sa.w.add_scaled(&sb.w, 1.0).sup_norm() <= 1e-12);
    }
}

#[test]
fn cone_degenerates_instead_of_producing_nan() {
    let c = sphere();
    let s = MetricState::umbilical(sigma(&c), 1.0, 0.0).unwrap();
    let traj = evolve(&s, 1.2, 1e-3).unwrap();
    match traj.status() {
        Status::Degenerated { t } => assert!((t - 1.0).abs() <= 1e-2, "t = {t}"),
        other => panic!("unexpected status {other:?}"),
    }
    assert!(traj.samples().iter().all(|s| s.g.is_finite() && s.w.is_finite()));
    assert!(traj.last().t < 1.0);
}

#[test]
fn evolved_trajectory_honours_the_gauge() {
    let c = sphere();
    let s = MetricState::new(sigma(&c), id(&c).scale(0.3), 1.0).unwrap();
    let traj = evolve(&s, 0.2, 1e-3).unwrap();
    assert!(traj.gauge_defect() <= 1e-9, "{:e}", traj.gauge_defect());
}

fn flat_homogeneous(a: f64) -> MetricState {
    let c = Arc::new(Chart::abelian(3).unwrap());
    MetricState::umbilical(sigma(&c), a, 0.0).unwrap()
}

#[test]
fn violation_propagates_by_the_linear_system() {
    // W = a Id on flat data: ȧ = 3a², f = 3a², so ḟ(0) = 18 = δω + 2Hf
    let traj = evolve_symmetric(&flat_homogeneous(1.0), 0.02, 1e-3).unwrap();
    let report = monitor_propagation(&traj).unwrap();
    let at0 = report.at(0.0).unwrap();
    assert!((at0.f_rate.value(0) - 18.0).abs() <= 1e-6, "{}", at0.f_rate.value(0));
    assert!((at0.f_rhs.value(0) - 18.0).abs() <= 1e-12);
    assert_eq!(at0.omega_rate.sup_norm(), 0.0);
}

#[test]
fn propagation_residual_converges_at_fourth_order() {
    let mismatch: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let traj = evolve_symmetric(&flat_homogeneous(1.0), 0.05, dt).unwrap();
            monitor_propagation(&traj).unwrap().sup_mismatch()
        })
        .collect();
    for w in mismatch.windows(2) {
        let order = convergence_order(w[0], w[1]);
        assert!(order >= 3.5, "{mismatch:?}");
    }
}

#[test]
fn cone_data_stay_on_the_constraint_surface() {
    let c = sphere();
    let s = MetricState::umbilical(sigma(&c), 1.0, 0.0).unwrap();
    let traj = evolve(&s, 0.5, 1e-3).unwrap();
    let worst = (0..traj.len())
        .map(|k| constraint_residual(&traj.state(k)).unwrap().sup())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst:e}");
    assert!(monitor_propagation(&traj).unwrap().max_violation() <= 1e-8);
}

#[test]
fn static_flat_data_have_identically_zero_propagation() {
    let c = Arc::new(Chart::grid(3, 8).unwrap());
    let s = MetricState::new(sigma(&c), Field::zeros(&c, Rank::Endomorphism), 0.0).unwrap();
    let r = monitor_propagation(&evolve(&s, 0.05, 1e-2).unwrap()).unwrap();
    assert_eq!(r.sup_mismatch(), 0.0);
    assert_eq!(r.max_violation(), 0.0);
}

#[test]
fn sheared_flat_metric_keeps_constraints_on_grid() {
    // pullback of δ under x ↦ (x¹ + ε sin x², x², x³): flat, W = 0, λ = 0
    let c = Arc::new(Chart::grid(3, 16).unwrap());
    let eps = 0.1;
    let g = Field::from_fn(&c, Rank::Sym2Cov, |x| {
        let s = eps * x[1].cos();
        vec![1.0, s, 0.0, s, 1.0 + s * s, 0.0, 0.0, 0.0, 1.0]
    });
    let s = MetricState::new(g, Field::zeros(&c, Rank::Endomorphism), 0.0).unwrap();
    let r0 = constraint_residual(&s).unwrap().sup().max(1e-14);
    let traj = evolve(&s, 0.1, 1e-2).unwrap();
    assert!(traj.status().is_completed());
    for k in 0..traj.len() {
        let r = constraint_residual(&traj.state(k)).unwrap().sup();
        let t = traj.time(k);
        assert!(r <= r0 + 10.0 * r0 * t.max(1.0), "t={t}: {r:e} vs {r0:e}");
    }
}

#[test]
fn explicit_galerkin_cap_is_recorded() {
    let c = Arc::new(Chart::grid(3, 8).unwrap());
    let s = MetricState::new(sigma(&c), Field::zeros(&c, Rank::Endomorphism), 0.0).unwrap();
    let opts = EvolveOptions {
        kmax: Some(1),
        ..Default::default()
    };
    let traj = einlab_core::evolution::evolve_with(&s, 0.02, 1e-2, &opts).unwrap();
    assert_eq!(traj.kmax(), Some(1));
    assert_eq!(traj.integrator(), "rk4");
}
