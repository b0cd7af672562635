//! 2×2 complex matrices and the Pauli basis.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Pair;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn scalar(s: Complex64) -> Self {
        Mat2([[s, ZERO], [ZERO, s]])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Inverse by the adjugate formula. `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == ZERO {
            return None;
        }
        let m = &self.0;
        let inv = d.inv();
        Some(Mat2([
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ]))
    }

    pub fn apply(&self, v: Pair) -> Pair {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

/// One of the three Pauli matrices σ₁, σ₂, σ₃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliMatrix {
    index: usize,
    matrix: Mat2,
}

impl PauliMatrix {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn matrix(&self) -> Mat2 {
        self.matrix
    }
}

/// Returns σ_k for k ∈ {1, 2, 3}.
pub fn pauli(k: usize) -> Result<PauliMatrix> {
    let matrix = match k {
        1 => Mat2::new(ZERO, ONE, ONE, ZERO),
        2 => Mat2::new(ZERO, -I, I, ZERO),
        3 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => return Err(Error::PauliIndex(k)),
    };
    Ok(PauliMatrix { index: k, matrix })
}

/// Σ_k σ_k c_k, the Hermitian coupling matrix driven by one noise draw.
pub fn pauli_combination(c: [f64; 3]) -> Mat2 {
    Mat2::new(
        Complex64::new(c[2], 0.0),
        Complex64::new(c[0], -c[1]),
        Complex64::new(c[0], c[1]),
        Complex64::new(-c[2], 0.0),
    )
}

/// Levi-Civita symbol ε_{jkl} for indices in 1..=3.
pub fn levi_civita(j: usize, k: usize, l: usize) -> i32 {
    let (j, k, l) = (j as i32, k as i32, l as i32);
    (j - k) * (k - l) * (l - j) / 2
}
