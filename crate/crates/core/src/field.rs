//! Uniform grids, two-component complex fields and their discrete norms.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex pair (X₁, X₂) at one grid node.
pub type Pair = [Complex64; 2];

pub(crate) const ZERO_PAIR: Pair = [Complex64::new(0.0, 0.0); 2];

/// Uniform grid on [-a, a] with `M` interior nodes and two Dirichlet nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    interior_points: usize,
}

impl Grid1D {
    pub fn new(half_width: f64, interior_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if interior_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 interior points, got {interior_points}"
            )));
        }
        Ok(Self {
            half_width,
            interior_points,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Number of interior nodes `M`.
    pub fn interior_points(&self) -> usize {
        self.interior_points
    }

    /// Total node count `M + 2`.
    pub fn len(&self) -> usize {
        self.interior_points + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Δx = 2a / (M + 1).
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.interior_points + 1) as f64
    }

    /// x_j = -a + j Δx for j = 0..=M+1.
    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.x(j))
    }
}

/// Two-component complex field on a [`Grid1D`], boundary nodes held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<Pair>,
}

impl Field {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![ZERO_PAIR; grid.len()],
        }
    }

    /// Samples `f` at interior nodes; boundary nodes are set to zero.
    pub fn from_fn(grid: Grid1D, mut f: impl FnMut(f64) -> Pair) -> Self {
        let mut values = vec![ZERO_PAIR; grid.len()];
        for (j, v) in values.iter_mut().enumerate().take(grid.len() - 1).skip(1) {
            *v = f(grid.x(j));
        }
        Self { grid, values }
    }

    /// Wraps full-length node values, checking length and the Dirichlet nodes.
    pub fn from_values(grid: Grid1D, values: Vec<Pair>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                expected: grid.len(),
            });
        }
        for index in [0, grid.len() - 1] {
            if values[index] != ZERO_PAIR {
                return Err(Error::NonZeroBoundary { index });
            }
        }
        Ok(Self { grid, values })
    }

    /// Builds a field from the `M` interior values.
    pub fn from_interior(grid: Grid1D, interior: &[Pair]) -> Result<Self> {
        if interior.len() != grid.interior_points() {
            return Err(Error::LengthMismatch {
                len: interior.len() + 2,
                expected: grid.len(),
            });
        }
        let mut values = Vec::with_capacity(grid.len());
        values.push(ZERO_PAIR);
        values.extend_from_slice(interior);
        values.push(ZERO_PAIR);
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// All node values, including the two boundary zeros.
    pub fn values(&self) -> &[Pair] {
        &self.values
    }

    pub fn interior(&self) -> &[Pair] {
        &self.values[1..self.values.len() - 1]
    }

    pub(crate) fn interior_mut(&mut self) -> &mut [Pair] {
        let n = self.values.len();
        &mut self.values[1..n - 1]
    }

    pub fn into_values(self) -> Vec<Pair> {
        self.values
    }

    pub fn scaled(&self, s: Complex64) -> Field {
        self.map_nodes(|v| [v[0] * s, v[1] * s])
    }

    pub fn map_nodes(&self, mut f: impl FnMut(Pair) -> Pair) -> Field {
        let mut out = self.clone();
        for v in out.interior_mut() {
            *v = f(*v);
        }
        out
    }

    fn zip_with(&self, other: &Field, f: impl Fn(Pair, Pair) -> Pair) -> Result<Field> {
        self.check_same_grid(other)?;
        let mut out = self.clone();
        for (v, w) in out.interior_mut().iter_mut().zip(other.interior()) {
            *v = f(*v, *w);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| [a[0] + b[0], a[1] + b[1]])
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| [a[0] - b[0], a[1] - b[1]])
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Real L² inner product Δx Σ_j Re(ū_j · v_j).
    pub fn real_inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| (u[0].conj() * v[0] + u[1].conj() * v[1]).re)
            .sum();
        Ok(s * self.grid.dx())
    }

    /// Complex L² inner product Δx Σ_j ū_j · v_j.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u[0].conj() * v[0] + u[1].conj() * v[1])
            .sum();
        Ok(s * self.grid.dx())
    }

    /// Largest nodewise modulus sqrt(|X₁|² + |X₂|²).
    pub fn max_modulus(&self) -> f64 {
        self.values
            .iter()
            .map(|v| pair_norm_sqr(*v).sqrt())
            .fold(0.0, f64::max)
    }

    /// Writes columns x, Re(X1), Im(X1), Re(X2), Im(X2), one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re_x1,im_x1,re_x2,im_x2")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                self.grid.x(j),
                v[0].re,
                v[0].im,
                v[1].re,
                v[1].im
            )?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn pair_norm_sqr(v: Pair) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

/// Δx Σ_{j=0}^{M+1} (|X₁,j|² + |X₂,j|²).
pub fn discrete_l2_mass(f: &Field) -> f64 {
    f.grid.dx() * f.values.iter().map(|v| pair_norm_sqr(*v)).sum::<f64>()
}

/// Discrete H¹ norm with forward differences over every link j → j+1.
pub fn discrete_h1_norm(f: &Field) -> f64 {
    let dx = f.grid.dx();
    let grad: f64 = f
        .values
        .windows(2)
        .map(|w| {
            let d = [(w[1][0] - w[0][0]) / dx, (w[1][1] - w[0][1]) / dx];
            pair_norm_sqr(d)
        })
        .sum();
    (discrete_l2_mass(f) + dx * grad).sqrt()
}
