//! Complex Clifford representations in dimensions 1 to 4.
//!
//! Riemannian convention: `γ_a γ_b + γ_b γ_a = −2 δ_ab`. In dimension 3 the
//! generators are `γ_j = i σ_j`, so the volume element `γ_1γ_2γ_3` is `+Id`.
//! Dimension 4 doubles the 3-dimensional representation; dimensions 1 and 2
//! use the first one or two Pauli generators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type Spinor = DVector<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Complex spinor dimension `2^⌊n/2⌋`.
pub fn spinor_dim(n: usize) -> usize {
    1 << (n / 2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordRep {
    n: usize,
    gammas: Vec<CMatrix>,
    /// `pairs[b * n + c] = γ_b γ_c`.
    pairs: Vec<CMatrix>,
}

fn pauli_times_i() -> [CMatrix; 3] {
    [
        CMatrix::from_row_slice(2, 2, &[ZERO, I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, -ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[I, ZERO, ZERO, -I]),
    ]
}

impl CliffordRep {
    pub fn new(n: usize) -> Result<Self> {
        let gammas: Vec<CMatrix> = match n {
            1 => vec![CMatrix::from_element(1, 1, I)],
            2 | 3 => pauli_times_i().into_iter().take(n).collect(),
            4 => {
                let mut out: Vec<CMatrix> = pauli_times_i()
                    .iter()
                    .map(|g| {
                        let mut m = CMatrix::zeros(4, 4);
                        m.view_mut((0, 2), (2, 2)).copy_from(g);
                        m.view_mut((2, 0), (2, 2)).copy_from(g);
                        m
                    })
                    .collect();
                let mut g4 = CMatrix::zeros(4, 4);
                g4.view_mut((0, 2), (2, 2)).fill_with_identity();
                g4.view_mut((2, 0), (2, 2)).copy_from(&(-CMatrix::identity(2, 2)));
                out.push(g4);
                out
            }
            _ => {
                return Err(Error::DimensionMismatch(format!(
                    "Clifford representations are provided for 1 <= n <= 4, got {n}"
                )))
            }
        };
        let pairs = (0..n * n).map(|k| &gammas[k / n] * &gammas[k % n]).collect();
        Ok(Self { n, gammas, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Complex dimension of the spinor module.
    pub fn dim(&self) -> usize {
        spinor_dim(self.n)
    }

    pub fn gamma(&self, a: usize) -> &CMatrix {
        &self.gammas[a]
    }

    pub fn gammas(&self) -> &[CMatrix] {
        &self.gammas
    }

    /// `γ_b γ_c`.
    pub fn pair(&self, b: usize, c: usize) -> &CMatrix {
        &self.pairs[b * self.n + c]
    }

    /// `γ_1 ⋯ γ_n`.
    pub fn volume_element(&self) -> CMatrix {
        self.gammas
            .iter()
            .fold(CMatrix::identity(self.dim(), self.dim()), |acc, g| acc * g)
    }

    /// `max |γ_aγ_b + γ_bγ_a + 2δ_ab|` over all entries.
    pub fn relation_defect(&self) -> f64 {
        let id = CMatrix::identity(self.dim(), self.dim());
        let mut worst: f64 = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                let mut m = self.pair(a, b) + self.pair(b, a);
                if a == b {
                    m += &id * Complex64::new(2.0, 0.0);
                }
                worst = worst.max(m.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Clifford product `X·ψ` for `X = Σ x_a e_a` in an orthonormal frame.
    pub fn multiply(&self, x: &[f64], psi: &Spinor) -> Spinor {
        let mut out = Spinor::zeros(self.dim());
        for (a, &xa) in x.iter().enumerate() {
            if xa != 0.0 {
                out += (&self.gammas[a] * psi) * Complex64::new(xa, 0.0);
            }
        }
        out
    }
}

/// Real part of the Hermitian product.
pub fn real_inner(a: &Spinor, b: &Spinor) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}
