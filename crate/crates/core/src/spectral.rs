//! FFT kernels on periodic grids.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::chart::{Chart, ChartKind};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Signed wavenumber of FFT bin `m` on an `n`-point axis.
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

fn grid_params(chart: &Chart) -> (usize, &[f64]) {
    match chart.kind() {
        ChartKind::PeriodicGrid { points, periods } => (*points, periods.as_slice()),
        ChartKind::LeftInvariantFrame { .. } => unreachable!("spectral kernels need a grid chart"),
    }
}

/// Applies a 1-D transform along `axis` of a row-major `[n; dim]` array.
fn fft_axis(chart: &Chart, buf: &mut [Complex64], axis: usize, inverse: bool) {
    let (n, _) = grid_params(chart);
    let dim = chart.dim();
    let stride = n.pow((dim - 1 - axis) as u32);
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let block = stride * n;
    for outer in (0..buf.len()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (m, v) in line.iter_mut().enumerate() {
                *v = buf[base + m * stride];
            }
            fft.process(&mut line);
            for (m, v) in line.iter().enumerate() {
                buf[base + m * stride] = *v;
            }
        }
    }
}

/// Spectral partial derivative along `axis`; the Nyquist mode is dropped and the
/// imaginary residue of the inverse transform discarded.
pub fn derivative(chart: &Chart, data: &[f64], axis: usize) -> Vec<f64> {
    let (n, periods) = grid_params(chart);
    let dim = chart.dim();
    let stride = n.pow((dim - 1 - axis) as u32);
    let scale = 2.0 * PI / periods[axis];
    let fwd = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    let inv = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    let mut out = vec![0.0; data.len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let block = stride * n;
    for outer in (0..data.len()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (m, v) in line.iter_mut().enumerate() {
                *v = Complex64::new(data[base + m * stride], 0.0);
            }
            fwd.process(&mut line);
            for (m, v) in line.iter_mut().enumerate() {
                if 2 * m == n {
                    *v = Complex64::new(0.0, 0.0);
                } else {
                    let k = wavenumber(m, n) as f64 * scale;
                    *v *= Complex64::new(0.0, k);
                }
            }
            inv.process(&mut line);
            for (m, v) in line.iter().enumerate() {
                out[base + m * stride] = v.re / n as f64;
            }
        }
    }
    out
}

/// Zeroes every Fourier mode with `|k_d| > kmax` on some axis (Galerkin projection).
pub fn project(chart: &Chart, data: &[f64], kmax: usize) -> Vec<f64> {
    let (n, _) = grid_params(chart);
    let dim = chart.dim();
    let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for axis in 0..dim {
        fft_axis(chart, &mut buf, axis, false);
    }
    for (p, v) in buf.iter_mut().enumerate() {
        let idx = chart.multi_index(p);
        // The Nyquist bin has no sign; it survives only when kmax covers n/2.
        let keep = idx.iter().all(|&m| {
            let k = wavenumber(m, n).unsigned_abs() as usize;
            k <= kmax && !(2 * m == n && kmax < n / 2)
        });
        if !keep {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    for axis in 0..dim {
        fft_axis(chart, &mut buf, axis, true);
    }
    let norm = (n as f64).powi(dim as i32);
    buf.iter().map(|v| v.re / norm).collect()
}

/// Largest mode cutoff satisfying the 2/3 rule.
pub fn two_thirds_cutoff(points: usize) -> usize {
    points / 3
}
