//! Fixed-step classical Runge–Kutta integration.

use num_complex::Complex64;

/// State space of an explicit ODE integrator.
pub trait OdeState: Clone {
    /// `self + a·x`
    fn axpy(&self, a: f64, x: &Self) -> Self;
}

impl OdeState for Vec<f64> {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self.iter().zip(x).map(|(s, x)| s + a * x).collect()
    }
}

impl<const N: usize> OdeState for [f64; N] {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        std::array::from_fn(|i| self[i] + a * x[i])
    }
}

impl OdeState for Vec<Complex64> {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self.iter().zip(x).map(|(s, x)| s + x * a).collect()
    }
}

/// One RK4 step of size `h` (negative `h` integrates backward).
pub fn rk4_step<S: OdeState, E>(t: f64, y: &S, h: f64, f: &mut impl FnMut(f64, &S) -> Result<S, E>) -> Result<S, E> {
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &y.axpy(0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &y.axpy(0.5 * h, &k2))?;
    let k4 = f(t + h, &y.axpy(h, &k3))?;
    Ok(y.axpy(h / 6.0, &k1)
        .axpy(h / 3.0, &k2)
        .axpy(h / 3.0, &k3)
        .axpy(h / 6.0, &k4))
}

/// Integrates `steps` RK4 steps from `(t0, y0)`; returns all states including `y0`.
/// Times are `t0 + k h`, never accumulated.
pub fn rk4<S: OdeState, E>(
    t0: f64,
    y0: S,
    h: f64,
    steps: usize,
    mut f: impl FnMut(f64, &S) -> Result<S, E>,
) -> Result<Vec<S>, E> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y0);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let next = rk4_step(t, &out[k], h, &mut f)?;
        out.push(next);
    }
    Ok(out)
}
