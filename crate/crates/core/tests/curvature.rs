use std::sync::Arc;

use einlab_core::algebra::Scalar;
use einlab_core::curvature::{
    self, christoffel, curvature, divergence, divergence_variation_residual, ricci, scalar_curvature,
};
use einlab_core::field::{pointwise_algebra, Dealias, PointwiseOp};
use einlab_core::random::{band_limited_endomorphism, band_limited_metric, band_limited_scalar, rng};
use einlab_core::{Chart, Field, Rank, ScalarField, Su2Model};
use rand::Rng;

fn torus(points: usize) -> Arc<Chart> {
    Arc::new(Chart::grid(3, points).unwrap())
}

fn diag_metric(chart: &Arc<Chart>, s: impl Fn(&[f64]) -> f64) -> Field {
    Field::from_fn(chart, Rank::Sym2Cov, |x| {
        let v = s(x);
        vec![v, 0., 0., 0., v, 0., 0., 0., v]
    })
}

#[test]
fn flat_metric_has_no_curvature() {
    let c = torus(8);
    let g = Field::constant(&c, Rank::Sym2Cov, &[2., 0.3, 0., 0.3, 1., 0., 0., 0., 1.5]).unwrap();
    let b = curvature(&g).unwrap();
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                assert!(b.christoffel.get(k, i, j).sup_norm() <= 1e-14);
            }
        }
    }
    assert!(b.ricci.sup_norm() <= 1e-14);
    assert!(b.scalar.sup_norm() <= 1e-14);
}

#[test]
fn conformal_christoffel_matches_closed_form() {
    // g = e^{2φ} δ, φ = 0.1 sin x¹  ⇒  Γ^1_11 = ∂_1 φ
    let c = Arc::new(Chart::grid(3, 32).unwrap());
    let g = diag_metric(&c, |x| (0.2 * x[0].sin()).exp());
    let gamma = christoffel(&g).unwrap();
    let exact = ScalarField::from_fn(&c, |x| 0.1 * x[0].cos());
    assert!(gamma.get(0, 0, 0).sub(&exact).sup_norm() <= 1e-10);
    assert!(gamma.lower_symmetry_defect() <= 1e-12);
}

/// Koszul connection and Ricci of an orthonormal invariant frame, by brute force
/// over the structure constants: ω_ijk = ½(c_ijk − c_jki + c_kij),
/// Ric_bc = Σ_a,m ω_bcm ω_aam − ω_acm ω_bam − c^m_ab ω_mca.
fn koszul_oracle(chart: &Chart) -> ([[[f64; 3]; 3]; 3], [[f64; 3]; 3]) {
    let c = |k: usize, i: usize, j: usize| chart.bracket(k, i, j);
    let mut w = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                w[i][j][k] = 0.5 * (c(k, i, j) - c(i, j, k) + c(j, k, i));
            }
        }
    }
    let mut ric = [[0.0; 3]; 3];
    for b in 0..3 {
        for cc in 0..3 {
            let mut s = 0.0;
            for a in 0..3 {
                for m in 0..3 {
                    s += w[b][cc][m] * w[a][m][a] - w[a][cc][m] * w[b][m][a] - c(m, a, b) * w[m][cc][a];
                }
            }
            ric[b][cc] = s;
        }
    }
    (w, ric)
}

#[test]
fn round_sphere_frame_connection_and_ricci() {
    let chart = Arc::new(Chart::su2(Su2Model::Left));
    let g = Field::identity(&chart, Rank::Sym2Cov);
    let gamma = christoffel(&g).unwrap();
    let eps = |i: usize, j: usize, k: usize| -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    let (w, ric_oracle) = koszul_oracle(&chart);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                // ∇_{e_i} e_j = ε_ijk e_k
                assert!((gamma.get(k, i, j).value(0) - eps(i, j, k)).abs() < 1e-15);
                assert!((w[i][j][k] - eps(i, j, k)).abs() < 1e-15);
            }
        }
    }
    let ric = ricci(&g).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { 2.0 } else { 0.0 };
            assert!((ric.get(i, j).value(0) - expect).abs() < 1e-14);
            assert!((ric_oracle[i][j] - expect).abs() < 1e-14);
        }
    }
    assert!((scalar_curvature(&g).unwrap().value(0) - 6.0).abs() < 1e-14);
}

/// 4th-order central difference of `f` along axis `a` at `x`, step `h`.
fn fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], a: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut y = x.to_vec();
        y[a] += s;
        f(&y)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

#[test]
fn grid_ricci_matches_finite_difference_oracle() {
    let points = 32;
    let c = torus(points);
    let s = |x: &[f64]| 1.0 + 0.05 * x[0].sin() * x[1].sin();
    let g = diag_metric(&c, s);
    let ric = ricci(&g).unwrap();
    let h = 1.0 / points as f64;

    // Γ^k_ij(x) for g = s δ by finite differences of g itself
    let metric = move |x: &[f64], i: usize, j: usize| if i == j { s(x) } else { 0.0 };
    let gamma = move |x: &[f64], k: usize, i: usize, j: usize| -> f64 {
        let mut v = 0.0;
        for l in 0..3 {
            let ginv = if k == l { 1.0 / s(x) } else { continue };
            let d = |a: usize, p: usize, q: usize| fd(&|y: &[f64]| metric(y, p, q), x, a, h);
            v += 0.5 * ginv * (d(j, i, l) + d(i, j, l) - d(l, i, j));
        }
        v
    };
    let mut r = rng(42);
    for _ in 0..10 {
        let p = r.gen_range(0..c.num_points());
        let x = c.coordinates(p);
        for b in 0..3 {
            for cc in 0..3 {
                let mut v = 0.0;
                for a in 0..3 {
                    v += fd(&|y: &[f64]| gamma(y, a, b, cc), &x, a, h);
                    v -= fd(&|y: &[f64]| gamma(y, a, a, cc), &x, b, h);
                    for m in 0..3 {
                        v += gamma(&x, m, b, cc) * gamma(&x, a, a, m) - gamma(&x, m, a, cc) * gamma(&x, a, b, m);
                    }
                }
                let got = ric.get(b, cc).value(p);
                assert!((got - v).abs() <= 1e-6, "Ric_{b}{cc} at {p}: {got} vs {v}");
            }
        }
    }
}

#[test]
fn curvature_bundle_invariants_on_random_metric() {
    let c = torus(32);
    let g = band_limited_metric(&c, 42, 0.05, 2);
    let b = curvature(&g).unwrap();
    assert!(b.christoffel.lower_symmetry_defect() <= 1e-12);
    assert!(b.ricci.symmetry_defect() <= 1e-10);
    assert!(b.riemann.first_bianchi_defect() <= 1e-9);
    let tr = pointwise_algebra(&b.ricci, Some(&g), PointwiseOp::Trace, Dealias::Off).unwrap();
    assert!(tr.as_scalar().sub(&b.scalar).sup_norm() <= 1e-12);
}

#[test]
fn ricci_is_invariant_under_constant_scaling() {
    let c = torus(8);
    let g = band_limited_metric(&c, 7, 0.1, 2);
    let r1 = ricci(&g).unwrap();
    for s in [4.0, 0.25] {
        let r2 = ricci(&g.scale(s)).unwrap();
        assert_eq!(r1.sub(&r2).unwrap().sup_norm(), 0.0, "scale {s}");
    }
    let r3 = ricci(&g.scale(3.7)).unwrap();
    assert!(r1.sub(&r3).unwrap().sup_norm() <= 1e-13);

    // frame model: (s,s,s) gives the same bilinear form as (1,1,1)
    let chart = Arc::new(Chart::su2(Su2Model::Left));
    let unit = ricci(&Field::identity(&chart, Rank::Sym2Cov)).unwrap();
    let big = ricci(&Field::identity(&chart, Rank::Sym2Cov).scale(2.0)).unwrap();
    assert_eq!(unit.sub(&big).unwrap().sup_norm(), 0.0);
}

#[test]
fn flat_grid_ricci_is_exactly_zero() {
    let c = torus(16);
    let g = Field::identity(&c, Rank::Sym2Cov);
    assert!(ricci(&g).unwrap().sup_norm() <= 1e-14);
}

#[test]
fn divergence_of_identity_and_of_scalar_multiple() {
    let c = torus(32);
    let g = band_limited_metric(&c, 42, 0.08, 3);
    let id = Field::identity(&c, Rank::Endomorphism);
    assert!(divergence(&g, &id).unwrap().sup_norm() <= 1e-12);

    let f = band_limited_scalar(&c, &mut rng(5), 3, 0.5, 4);
    let fid = id.map_components(|x| x.mul(&f));
    let d = divergence(&g, &fid).unwrap();
    let df = curvature::differential(&f);
    assert!(d.add(&df).unwrap().sup_norm() <= 1e-10);
}

#[test]
fn contracted_bianchi_identity() {
    let c = torus(32);
    for seed in [42, 43] {
        let g = band_limited_metric(&c, seed, 0.05, 2);
        let b = curvature(&g).unwrap();
        let ric_endo = pointwise_algebra(&b.ricci, Some(&g), PointwiseOp::Raise, Dealias::Off).unwrap();
        let d = divergence(&g, &ric_endo).unwrap();
        let dscal = curvature::differential(&b.scalar).scale(0.5);
        let defect = d.add(&dscal).unwrap().sup_norm();
        assert!(defect <= 1e-8, "seed {seed}: {defect:e}");
    }
}

#[test]
fn divergence_of_function_times_endomorphism() {
    // δ(fA) = f δA − A(∇f)
    let c = torus(32);
    let g = band_limited_metric(&c, 42, 0.08, 3);
    let a = band_limited_endomorphism(&c, 11, 0.7, 3);
    let f = band_limited_scalar(&c, &mut rng(12), 3, 0.9, 4);
    let fa = a.map_components(|x| x.mul(&f));
    let lhs = divergence(&g, &fa).unwrap();
    let fda = divergence(&g, &a).unwrap().map_components(|x| x.mul(&f));
    let grad = pointwise_algebra(&curvature::differential(&f), Some(&g), PointwiseOp::Raise, Dealias::Off).unwrap();
    let a_grad = pointwise_algebra(&a, Some(&grad), PointwiseOp::Contract, Dealias::Off).unwrap();
    let a_grad_form = pointwise_algebra(&a_grad, Some(&g), PointwiseOp::Lower, Dealias::Off).unwrap();
    let defect = lhs.sub(&fda).unwrap().add(&a_grad_form).unwrap().sup_norm();
    assert!(defect <= 1e-9, "{defect:e}");
}

#[test]
fn variation_residual_static_family() {
    let c = torus(8);
    let g = band_limited_metric(&c, 1, 0.1, 2);
    let a = band_limited_endomorphism(&c, 2, 0.5, 2);
    let r = divergence_variation_residual(|_| g.clone(), |_| a.clone(), 0.3, 1e-3).unwrap();
    assert!(r.divergence <= 1e-12);
    assert!(r.volume <= 1e-12);
}

#[test]
fn variation_residual_homothetic_family() {
    // g_t = (1+t)² δ, A = Id: both sides vanish analytically
    let c = torus(8);
    let id = Field::identity(&c, Rank::Endomorphism);
    let fam = |t: f64| Field::identity(&c, Rank::Sym2Cov).scale((1.0 + t) * (1.0 + t));
    let mut prev: Option<f64> = None;
    for h in [1e-2, 5e-3, 2.5e-3] {
        let r = divergence_variation_residual(fam, |_| id.clone(), 0.2, h).unwrap();
        assert!(r.divergence <= 1e-12);
        // volume: (1+t)³ has nonzero third derivative, so the centered difference is O(h²)
        if let Some(p) = prev {
            let order = (p / r.volume).log2();
            assert!(order >= 1.9, "volume order {order}");
        }
        prev = Some(r.volume);
    }
}

#[test]
fn variation_residual_analytic_family() {
    // g_t = (1 + 0.1 t sin x¹) δ, A_t = (1+t) Id
    let c = torus(16);
    let fam = |t: f64| diag_metric(&c, move |x| 1.0 + 0.1 * t * x[0].sin());
    let endo = |t: f64| Field::identity(&c, Rank::Endomorphism).scale(1.0 + t);
    let res: Vec<_> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&h| divergence_variation_residual(fam, endo, 0.5, h).unwrap())
        .collect();
    for r in &res {
        // both sides of the divergence identity vanish for this family
        assert!(r.divergence <= 1e-12, "{:e}", r.divergence);
    }
    for w in res.windows(2) {
        let order = (w[0].volume / w[1].volume).log2();
        assert!(order >= 1.9, "volume order {order}");
    }
}

struct QuadraticFamily {
    g0: Field,
    g1: Field,
    g2: Field,
}

impl QuadraticFamily {
    fn new(c: &Arc<Chart>) -> Self {
        let id = Field::identity(c, Rank::Sym2Cov);
        let pert = |seed| band_limited_metric(c, seed, 0.08, 2).sub(&id).unwrap();
        QuadraticFamily {
            g0: band_limited_metric(c, 42, 0.08, 2),
            g1: pert(43),
            g2: pert(44),
        }
    }

    fn metric(&self, t: f64) -> Field {
        self.g0.add_scaled(&self.g1, t).add_scaled(&self.g2, t * t)
    }

    /// W_t = -1/2 g⁻¹ ġ with ġ taken analytically.
    fn shape(&self, t: f64) -> Field {
        let gdot = self.g1.add_scaled(&self.g2, 2.0 * t);
        pointwise_algebra(&gdot, Some(&self.metric(t)), PointwiseOp::Raise, Dealias::Off)
            .unwrap()
            .scale(-0.5)
    }
}

#[test]
fn variation_residual_converges_at_second_order() {
    let c = torus(32);
    let fam = QuadraticFamily::new(&c);
    let metric = |t| fam.metric(t);
    // A_t = W_t + (1+t) Id commutes with W_t, so Ȧ stays g_t-symmetric
    let endo = |t: f64| {
        fam.shape(t)
            .add(&Field::identity(&c, Rank::Endomorphism).scale(1.0 + t))
            .unwrap()
    };
    let hs = [4e-2, 2e-2, 1e-2];
    let res: Vec<_> = hs
        .iter()
        .map(|&h| divergence_variation_residual(metric, endo, 0.1, h).unwrap())
        .collect();
    for w in res.windows(2) {
        let order = (w[0].divergence / w[1].divergence).log2();
        assert!(
            order >= 1.9,
            "divergence order {order} ({:e} -> {:e})",
            w[0].divergence,
            w[1].divergence
        );
        let vorder = (w[0].volume / w[1].volume).log2();
        assert!(vorder >= 1.9, "volume order {vorder}");
    }
}

#[test]
fn variation_identity_needs_endomorphism_commuting_with_shape() {
    // A_t = g_t^{-1} S with S fixed is g_t-symmetric, but [A, W] ≠ 0:
    // the residual stays O(1) instead of shrinking with h
    let c = torus(16);
    let fam = QuadraticFamily::new(&c);
    let metric = |t| fam.metric(t);
    let s = band_limited_metric(&c, 45, 0.3, 2);
    let endo = |t: f64| pointwise_algebra(&s, Some(&metric(t)), PointwiseOp::Raise, Dealias::Off).unwrap();
    let coarse = divergence_variation_residual(metric, endo, 0.1, 4e-3)
        .unwrap()
        .divergence;
    let fine = divergence_variation_residual(metric, endo, 0.1, 1e-3)
        .unwrap()
        .divergence;
    assert!(fine > 1e-3 && fine > 0.5 * coarse, "{coarse:e} -> {fine:e}");
}
