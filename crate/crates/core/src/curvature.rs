//! Levi-Civita connection, curvature and divergence operators.
//!
//! All formulas are written in a frame `e_1..e_n` with brackets
//! `[e_i, e_j] = c^k_ij e_k`. On coordinate grids the brackets vanish and the
//! frame is `∂_i`; on left-invariant frames the derivatives vanish instead.
//! Sign conventions: `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`,
//! `Ric(Y,Z) = tr(X ↦ R(X,Y)Z)`, and `δA(X) = −Σ g((∇_{e_i}A)e_i, X)`.

use crate::algebra::{self, sum, Mat, Scalar};
use crate::error::Result;
use crate::field::{Field, Rank, ScalarField};

/// `gamma[k][i][j] = Γ^k_ij` with `∇_{e_i} e_j = Γ^k_ij e_k`.
pub type Connection<T> = Vec<Vec<Vec<T>>>;

/// Metric together with its inverse and Levi-Civita connection.
#[derive(Clone, Debug)]
pub struct Geometry<T: Scalar> {
    pub g: Mat<T>,
    pub ginv: Mat<T>,
    pub gamma: Connection<T>,
}

impl<T: Scalar> Geometry<T> {
    pub fn new(g: Mat<T>) -> Result<Self> {
        let ginv = T::invert_metric(&g)?;
        let gamma = connection(&g, &ginv);
        Ok(Self { g, ginv, gamma })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    fn like(&self) -> &T {
        &self.g[0][0]
    }

    pub fn ricci(&self) -> Mat<T> {
        ricci_from_connection(&self.gamma)
    }

    pub fn scalar_curvature(&self, ric: &Mat<T>) -> T {
        algebra::trace_product(&self.ginv, ric)
    }

    /// `g^{-1} B` for a covariant 2-tensor `B`.
    pub fn raise(&self, b: &Mat<T>) -> Mat<T> {
        algebra::mat_mul(&self.ginv, b)
    }

    /// `g A` for an endomorphism `A`.
    pub fn lower(&self, a: &Mat<T>) -> Mat<T> {
        algebra::mat_mul(&self.g, a)
    }

    pub fn gradient(&self, f: &T) -> Vec<T> {
        (0..self.dim()).map(|i| f.frame_derivative(i)).collect()
    }

    /// `(∇_{e_i} A)^j_k` for each frame direction `i`.
    pub fn covariant_derivative_endo(&self, a: &Mat<T>) -> Vec<Mat<T>> {
        let n = self.dim();
        let like = self.like();
        let gm = &self.gamma;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|k| {
                                let conn = sum(
                                    (0..n).map(|l| gm[j][i][l].mul(&a[l][k]).sub(&gm[l][i][k].mul(&a[j][l]))),
                                    like,
                                );
                                a[j][k].frame_derivative(i).add(&conn)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `δA` as a one-form.
    pub fn divergence_endo(&self, a: &Mat<T>) -> Vec<T> {
        let n = self.dim();
        let like = self.like();
        let nabla = self.covariant_derivative_endo(a);
        // v^j = Σ_{i,k} g^{ik} (∇_i A)^j_k
        let v: Vec<T> = (0..n)
            .map(|j| {
                sum(
                    (0..n)
                        .flat_map(|i| (0..n).map(move |k| (i, k)))
                        .map(|(i, k)| self.ginv[i][k].mul(&nabla[i][j][k])),
                    like,
                )
            })
            .collect();
        algebra::mat_vec(&self.g, &v)
            .into_iter()
            .map(|x| x.scale(-1.0))
            .collect()
    }

    /// `δω = −Σ g^{ij} (∇_i ω)_j`.
    pub fn codifferential(&self, w: &[T]) -> T {
        let n = self.dim();
        let like = self.like();
        let terms = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| {
            let cov = sum((0..n).map(|k| self.gamma[k][i][j].mul(&w[k])), like);
            self.ginv[i][j].mul(&w[j].frame_derivative(i).sub(&cov))
        });
        sum(terms, like).scale(-1.0)
    }
}

/// `Γ_ijl = g(∇_{e_i} e_j, e_l)` from the Koszul formula.
pub fn lowered_connection<T: Scalar>(g: &Mat<T>) -> Vec<Vec<Vec<T>>> {
    let n = g.len();
    let chart = g[0][0].chart().clone();
    let like = &g[0][0];
    // dg[a][i][j] = e_a g_ij
    let dg: Vec<Mat<T>> = (0..n)
        .map(|a| {
            let mut m: Mat<T> = vec![vec![like.zero_like(); n]; n];
            for i in 0..n {
                for j in i..n {
                    let d = g[i][j].frame_derivative(a);
                    m[j][i] = d.clone();
                    m[i][j] = d;
                }
            }
            m
        })
        .collect();
    // cg[a][b][m] = g([e_a, e_b], e_m)
    let brackets = chart.has_brackets();
    let cg = |a: usize, b: usize, m: usize| -> Option<T> {
        if !brackets {
            return None;
        }
        let terms: Vec<T> = (0..n)
            .filter(|&p| chart.bracket(p, a, b) != 0.0)
            .map(|p| g[p][m].scale(chart.bracket(p, a, b)))
            .collect();
        if terms.is_empty() {
            None
        } else {
            Some(sum(terms, like))
        }
    };
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|l| {
                            let mut s = dg[i][j][l].add(&dg[j][i][l]).sub(&dg[l][i][j]);
                            if let Some(c) = cg(i, j, l) {
                                s = s.add(&c);
                            }
                            if let Some(c) = cg(j, l, i) {
                                s = s.sub(&c);
                            }
                            if let Some(c) = cg(l, i, j) {
                                s = s.add(&c);
                            }
                            s.scale(0.5)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `Γ^k_ij = g^{kl} Γ_ijl`.
pub fn connection<T: Scalar>(g: &Mat<T>, ginv: &Mat<T>) -> Connection<T> {
    let n = g.len();
    let lowered = lowered_connection(g);
    let like = &g[0][0];
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| sum((0..n).map(|l| ginv[k][l].mul(&lowered[i][j][l])), like))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `riem[l][c][a][b]`: component `l` of `R(e_a, e_b) e_c`.
pub fn riemann_from_connection<T: Scalar>(gamma: &Connection<T>) -> Vec<Vec<Vec<Vec<T>>>> {
    let n = gamma.len();
    let like = &gamma[0][0][0];
    let chart = like.chart().clone();
    let dgamma: Vec<Connection<T>> = (0..n)
        .map(|a| {
            gamma
                .iter()
                .map(|gk| {
                    gk.iter()
                        .map(|gi| gi.iter().map(|x| x.frame_derivative(a)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    (0..n)
        .map(|l| {
            (0..n)
                .map(|c| {
                    (0..n)
                        .map(|a| {
                            (0..n)
                                .map(|b| {
                                    let mut s = dgamma[a][l][b][c].sub(&dgamma[b][l][a][c]);
                                    for m in 0..n {
                                        s = s
                                            .add(&gamma[m][b][c].mul(&gamma[l][a][m]))
                                            .sub(&gamma[m][a][c].mul(&gamma[l][b][m]));
                                        let cm = chart.bracket(m, a, b);
                                        if cm != 0.0 {
                                            s = s.sub(&gamma[l][m][c].scale(cm));
                                        }
                                    }
                                    s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `Ric_bc = Σ_a [R(e_a, e_b) e_c]^a`, contracted directly from the connection.
pub fn ricci_from_connection<T: Scalar>(gamma: &Connection<T>) -> Mat<T> {
    let n = gamma.len();
    let like = &gamma[0][0][0];
    let chart = like.chart().clone();
    // trace_gamma[m] = Γ^a_am
    let trace_gamma: Vec<T> = (0..n)
        .map(|m| sum((0..n).map(|a| gamma[a][a][m].clone()), like))
        .collect();
    (0..n)
        .map(|b| {
            (0..n)
                .map(|c| {
                    let mut terms = Vec::with_capacity(4 * n * n);
                    for a in 0..n {
                        terms.push(gamma[a][b][c].frame_derivative(a));
                    }
                    terms.push(trace_gamma[c].frame_derivative(b).scale(-1.0));
                    for m in 0..n {
                        terms.push(gamma[m][b][c].mul(&trace_gamma[m]));
                        for a in 0..n {
                            terms.push(gamma[m][a][c].mul(&gamma[a][b][m]).scale(-1.0));
                            let cm = chart.bracket(m, a, b);
                            if cm != 0.0 {
                                terms.push(gamma[a][m][c].scale(-cm));
                            }
                        }
                    }
                    sum(terms, like)
                })
                .collect()
        })
        .collect()
}

/// Christoffel symbols as scalar fields, `get(k, i, j) = Γ^k_ij`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    dim: usize,
    comps: Vec<ScalarField>,
}

impl Christoffel {
    fn from_nested(gamma: Connection<ScalarField>) -> Self {
        let dim = gamma.len();
        Self {
            dim,
            comps: gamma.into_iter().flatten().flatten().collect(),
        }
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> &ScalarField {
        &self.comps[(k * self.dim + i) * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `max |Γ^k_ij − Γ^k_ji|`; nonzero on frames with brackets.
    pub fn lower_symmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max(self.get(k, i, j).sub(self.get(k, j, i)).sup_norm());
                }
            }
        }
        worst
    }
}

/// `get(l, c, a, b)` is component `l` of `R(e_a, e_b) e_c`.
#[derive(Clone, Debug)]
pub struct Riemann {
    dim: usize,
    comps: Vec<ScalarField>,
}

impl Riemann {
    pub fn get(&self, l: usize, c: usize, a: usize, b: usize) -> &ScalarField {
        let n = self.dim;
        &self.comps[((l * n + c) * n + a) * n + b]
    }

    /// `max |R(X,Y)Z + R(Y,Z)X + R(Z,X)Y|` over frame triples.
    pub fn first_bianchi_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for l in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let s = self.get(l, c, a, b).add(self.get(l, a, b, c)).add(self.get(l, b, c, a));
                        worst = worst.max(s.sup_norm());
                    }
                }
            }
        }
        worst
    }
}

/// Intrinsic curvature of one metric.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub christoffel: Christoffel,
    pub riemann: Riemann,
    pub ricci: Field,
    pub scalar: ScalarField,
    /// `√det g`, the density of the Riemannian volume form.
    pub volume_density: ScalarField,
}

pub fn christoffel(g: &Field) -> Result<Christoffel> {
    g.expect_rank(Rank::Sym2Cov)?;
    let geo = Geometry::new(g.matrix())?;
    Ok(Christoffel::from_nested(geo.gamma))
}

pub fn ricci(g: &Field) -> Result<Field> {
    g.expect_rank(Rank::Sym2Cov)?;
    let geo = Geometry::new(g.matrix())?;
    Ok(Field::from_matrix(Rank::Sym2Cov, geo.ricci()))
}

pub fn scalar_curvature(g: &Field) -> Result<ScalarField> {
    g.expect_rank(Rank::Sym2Cov)?;
    let geo = Geometry::new(g.matrix())?;
    let ric = geo.ricci();
    Ok(geo.scalar_curvature(&ric))
}

pub fn curvature(g: &Field) -> Result<CurvatureBundle> {
    g.expect_rank(Rank::Sym2Cov)?;
    let geo = Geometry::new(g.matrix())?;
    let ric = geo.ricci();
    let scalar = geo.scalar_curvature(&ric);
    let riem = riemann_from_connection(&geo.gamma);
    let n = g.dim();
    Ok(CurvatureBundle {
        christoffel: Christoffel::from_nested(geo.gamma),
        riemann: Riemann {
            dim: n,
            comps: riem.into_iter().flatten().flatten().flatten().collect(),
        },
        ricci: Field::from_matrix(Rank::Sym2Cov, ric),
        scalar,
        volume_density: volume_density(g)?,
    })
}

/// `δ^g A` for an endomorphism field.
pub fn divergence(g: &Field, a: &Field) -> Result<Field> {
    g.expect_rank(Rank::Sym2Cov)?;
    a.expect_rank(Rank::Endomorphism)?;
    g.same_chart(a)?;
    let geo = Geometry::new(g.matrix())?;
    Ok(Field::from_vector(Rank::OneForm, geo.divergence_endo(&a.matrix())))
}

/// `δ^g ω` for a one-form.
pub fn codifferential(g: &Field, w: &Field) -> Result<ScalarField> {
    g.expect_rank(Rank::Sym2Cov)?;
    w.expect_rank(Rank::OneForm)?;
    g.same_chart(w)?;
    let geo = Geometry::new(g.matrix())?;
    Ok(geo.codifferential(&w.vector()))
}

/// Differential of a scalar field, `(df)_i = e_i(f)`.
pub fn differential(f: &ScalarField) -> Field {
    let n = f.chart_arc().dim();
    Field::from_vector(Rank::OneForm, (0..n).map(|i| f.frame_derivative(i)).collect())
}

pub fn volume_density(g: &Field) -> Result<ScalarField> {
    g.expect_rank(Rank::Sym2Cov)?;
    let n = g.dim();
    let chart = g.chart();
    let mut out = Vec::with_capacity(chart.num_points());
    for p in 0..chart.num_points() {
        let l =
            crate::field::cholesky(&g.at(p), n).map_err(|(minor, pivot)| crate::error::Error::NotPositiveDefinite {
                index: chart.multi_index(p),
                minor,
                pivot,
            })?;
        out.push((0..n).map(|i| l[i * n + i]).product());
    }
    ScalarField::new(chart.clone(), out)
}

/// Residuals of the first-variation identities for `δ^{g_t}` and the volume form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationResidual {
    /// `‖d/dt(δ^{g_t} A_t) − [g(A∇trW, ·) − g(∇.W, A) + δȦ]‖_∞`
    pub divergence: f64,
    /// `‖d/dt vol_t + tr(W_t) vol_t‖_∞`
    pub volume: f64,
}

/// Checks the variation formula for the divergence along a family `(g_t, A_t)`,
/// with every `t`-derivative replaced by a centered difference of step `h`.
/// `W_t = −½ g_t^{-1} ġ_t`. The residual is `O(h²)` provided `Ȧ_t` stays
/// `g_t`-symmetric, which holds when `A_t` commutes with `W_t`; otherwise an
/// `O(1)` term `2Σ_a (w_b − w_a) g((∇_a A) e_a, e_b)` (eigenframe of `W`) survives.
pub fn divergence_variation_residual(
    metric: impl Fn(f64) -> Field,
    endo: impl Fn(f64) -> Field,
    t0: f64,
    h: f64,
) -> Result<VariationResidual> {
    let (gp, gm, g0) = (metric(t0 + h), metric(t0 - h), metric(t0));
    let (ap, am, a0) = (endo(t0 + h), endo(t0 - h), endo(t0));
    let div_p = divergence(&gp, &ap)?;
    let div_m = divergence(&gm, &am)?;
    let lhs = div_p.sub(&div_m)?.scale(0.5 / h);

    let geo = Geometry::new(g0.matrix())?;
    let n = g0.dim();
    let gdot = gp.sub(&gm)?.scale(0.5 / h).matrix();
    let w = algebra::mat_scale(&geo.raise(&gdot), -0.5);
    let adot = ap.sub(&am)?.scale(0.5 / h).matrix();
    let a = a0.matrix();
    let like = &geo.g[0][0];

    // g(A ∇ tr W, ·) as a one-form: g A g^{-1} d(tr W)
    let tr_w = algebra::trace(&w);
    let dtr = geo.gradient(&tr_w);
    let grad = algebra::mat_vec(&geo.ginv, &dtr);
    let first = algebra::mat_vec(&geo.lower(&a), &grad);
    // g(∇_m W, A) = g_jl (∇_m W)^j_k g^kp A^l_p
    let nabla_w = geo.covariant_derivative_endo(&w);
    let ga = geo.lower(&a);
    let second: Vec<ScalarField> = (0..n)
        .map(|m| {
            let b = &nabla_w[m];
            // tr(B g^{-1} (gA)^T) = Σ_{j,k,p} B^j_k g^kp (gA)_jp
            let bg = algebra::mat_mul(b, &geo.ginv);
            sum(
                (0..n)
                    .flat_map(|j| (0..n).map(move |p| (j, p)))
                    .map(|(j, p)| bg[j][p].mul(&ga[j][p])),
                like,
            )
        })
        .collect();
    let third = geo.divergence_endo(&adot);
    let mut divergence_res = 0.0_f64;
    for m in 0..n {
        let rhs = first[m].sub(&second[m]).add(&third[m]);
        divergence_res = divergence_res.max(lhs.component(m).sub(&rhs).sup_norm());
    }

    let vol_dot = volume_density(&gp)?.sub(&volume_density(&gm)?).scale(0.5 / h);
    let vol0 = volume_density(&g0)?;
    let volume_res = vol_dot.add(&tr_w.mul(&vol0)).sup_norm();
    Ok(VariationResidual {
        divergence: divergence_res,
        volume: volume_res,
    })
}
