//! Reproducible random band-limited test data.
//!
//! Every generator is driven by `ChaCha8Rng::seed_from_u64(seed)`, so the same
//! seed produces bit-identical fields on every platform.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::Chart;
use crate::field::{Field, Rank, ScalarField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sum of `terms` random Fourier modes with `|k_d| <= max_mode`, scaled so the
/// sup-norm never exceeds `amplitude`.
pub fn band_limited_scalar(
    chart: &Arc<Chart>,
    rng: &mut ChaCha8Rng,
    max_mode: usize,
    amplitude: f64,
    terms: usize,
) -> ScalarField {
    let n = chart.dim();
    let periods: Vec<f64> = chart
        .periods()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![2.0 * PI; n]);
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..terms)
        .map(|_| {
            let k: Vec<f64> = (0..n)
                .map(|d| rng.gen_range(-(max_mode as i64)..=max_mode as i64) as f64 * 2.0 * PI / periods[d])
                .collect();
            let a = rng.gen_range(-1.0..1.0);
            let phase = rng.gen_range(0.0..2.0 * PI);
            (k, a, phase)
        })
        .collect();
    let scale = amplitude / terms.max(1) as f64;
    ScalarField::from_fn(chart, |x| {
        modes
            .iter()
            .map(|(k, a, ph)| {
                let arg: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum();
                a * (arg + ph).cos()
            })
            .sum::<f64>()
            * scale
    })
}

/// `δ + h` with `h` symmetric and band-limited, `‖h_ij‖_∞ <= amplitude`.
/// Positive definite whenever `n * amplitude < 1`.
pub fn band_limited_metric(chart: &Arc<Chart>, seed: u64, amplitude: f64, max_mode: usize) -> Field {
    let mut rng = rng(seed);
    let n = chart.dim();
    let mut m: Vec<Vec<Option<ScalarField>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut f = band_limited_scalar(chart, &mut rng, max_mode, amplitude, 4);
            if i == j {
                f = f.map(|x| x + 1.0);
            }
            m[j][i] = Some(f.clone());
            m[i][j] = Some(f);
        }
    }
    Field::from_matrix(
        Rank::Sym2Cov,
        m.into_iter()
            .map(|row| row.into_iter().map(|x| x.expect("filled")).collect())
            .collect(),
    )
}

/// Band-limited endomorphism field (not symmetric in general).
pub fn band_limited_endomorphism(chart: &Arc<Chart>, seed: u64, amplitude: f64, max_mode: usize) -> Field {
    let mut rng = rng(seed);
    let n = chart.dim();
    let comps = (0..n * n)
        .map(|_| band_limited_scalar(chart, &mut rng, max_mode, amplitude, 4))
        .collect();
    Field::new(chart, Rank::Endomorphism, comps).expect("n*n components")
}

/// Conformally flat metric `(1 + a Π_d sin(m x_d + φ_d)) δ` over the first two
/// axes, phases drawn from the seed.
pub fn conformal_perturbation(chart: &Arc<Chart>, amplitude: f64, mode: usize, seed: u64) -> Field {
    let mut rng = rng(seed);
    let n = chart.dim();
    let phases: Vec<f64> = (0..n.min(2)).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let periods: Vec<f64> = chart
        .periods()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![2.0 * PI; n]);
    Field::from_fn(chart, Rank::Sym2Cov, |x| {
        let bump: f64 = phases
            .iter()
            .enumerate()
            .map(|(d, ph)| (mode as f64 * 2.0 * PI / periods[d] * x[d] + ph).sin())
            .product();
        let s = 1.0 + amplitude * bump;
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = s;
        }
        v
    })
}
