use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SchemeConfig;
use crate::error::Result;
use crate::field::{pair_norm_sqr, Field, Grid1D, Pair};
use crate::pauli::{pauli_combination, Mat2};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Lie splitting: a modewise midpoint solve of the linear stochastic flow,
/// then the exact nodewise phase rotation exp(i|Y|²Δt).
///
/// The M interior nodes are treated as one period of length MΔx, with
/// wavenumbers h_k = 2πk/(MΔx) for k = −M/2..M/2−1.
#[derive(Clone)]
pub struct SplitStep {
    grid: Grid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl fmt::Debug for SplitStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitStep")
            .field("grid", &self.grid)
            .field("modes", &self.wavenumbers.len())
            .finish()
    }
}

impl SplitStep {
    pub fn new(grid: Grid1D) -> Self {
        let m = grid.interior_points();
        let mut planner = FftPlanner::new();
        let period = m as f64 * grid.dx();
        let wavenumbers = (0..m)
            .map(|k| {
                let k = if k < m / 2 {
                    k as f64
                } else {
                    k as f64 - m as f64
                };
                2.0 * PI * k / period
            })
            .collect();
        Self {
            grid,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            wavenumbers,
        }
    }

    /// Wavenumbers in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// (iI − m_k)⁻¹ (iI + m_k) with m_k = Δt h²/2 + sqrt(γΔt) h/2 · Σ σ_l χ_l.
    pub fn mode_propagator(h: f64, dt: f64, gamma: f64, chi: [f64; 3]) -> Mat2 {
        let m = Mat2::scalar(Complex64::new(0.5 * dt * h * h, 0.0))
            + pauli_combination(chi).scale(Complex64::new(0.5 * (gamma * dt).sqrt() * h, 0.0));
        let ii = Mat2::scalar(I);
        (ii - m)
            .inverse()
            .expect("iI - m is invertible for Hermitian m")
            * (ii + m)
    }

    /// Linear substep only.
    pub fn linear(&self, x: &Field, chi: [f64; 3], dt: f64, gamma: f64) -> Field {
        let m = self.grid.interior_points();
        let mut c1: Vec<Complex64> = x.interior().iter().map(|v| v[0]).collect();
        let mut c2: Vec<Complex64> = x.interior().iter().map(|v| v[1]).collect();
        self.forward.process(&mut c1);
        self.forward.process(&mut c2);
        for (k, &h) in self.wavenumbers.iter().enumerate() {
            let y = Self::mode_propagator(h, dt, gamma, chi).apply([c1[k], c2[k]]);
            c1[k] = y[0];
            c2[k] = y[1];
        }
        self.inverse.process(&mut c1);
        self.inverse.process(&mut c2);
        let norm = 1.0 / m as f64;
        let interior: Vec<Pair> = c1
            .into_iter()
            .zip(c2)
            .map(|(a, b)| [a * norm, b * norm])
            .collect();
        Field::from_interior(self.grid, &interior).expect("interior length matches grid")
    }

    /// Nonlinear substep X_j = exp(i|Y_j|²Δt) Y_j.
    pub fn nonlinear(y: &Field, dt: f64) -> Field {
        y.map_nodes(|v| {
            let phase = Complex64::from_polar(1.0, pair_norm_sqr(v) * dt);
            [v[0] * phase, v[1] * phase]
        })
    }

    pub fn step(&self, x: &Field, chi: [f64; 3], cfg: &SchemeConfig) -> Result<Field> {
        cfg.check_grid(x)?;
        let y = self.linear(x, chi, cfg.dt, cfg.gamma);
        let out = if cfg.nonlinear {
            Self::nonlinear(&y, cfg.dt)
        } else {
            y
        };
        if let Some(g) = cfg.guard {
            g.check(&out)?;
        }
        Ok(out)
    }
}

/// One split-step; plans the FFT on every call; [`SplitStep`] caches it.
pub fn splitstep_step(x: &Field, chi: [f64; 3], cfg: &SchemeConfig) -> Result<Field> {
    SplitStep::new(cfg.grid).step(x, chi, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::discrete_l2_mass;
    use crate::schemes::SchemeKind;

    fn cfg(grid: Grid1D) -> SchemeConfig {
        SchemeConfig::new(SchemeKind::SplitStep, 0.01, 0.1, grid)
    }

    #[test]
    fn zero_stays_zero() {
        let grid = Grid1D::new(10.0, 64).unwrap();
        let z = Field::zeros(grid);
        assert_eq!(splitstep_step(&z, [1.0, 2.0, 3.0], &cfg(grid)).unwrap(), z);
    }

    #[test]
    fn plane_wave_advances_by_cayley_phase() {
        let grid = Grid1D::new(10.0, 64).unwrap();
        let ss = SplitStep::new(grid);
        let dt = 0.05;
        let m = 64.0;
        let dx = grid.dx();
        for kk in [1i32, 5, -7, 20] {
            let h = 2.0 * PI * kk as f64 / (m * dx);
            let interior: Vec<Pair> = (0..64)
                .map(|j| {
                    let e = Complex64::from_polar(1.0, h * j as f64 * dx);
                    [e, e * 0.5]
                })
                .collect();
            let x = Field::from_interior(grid, &interior).unwrap();
            let y = ss.linear(&x, [0.4, -1.0, 2.0], dt, 0.0);
            let b = 0.5 * dt * h * h;
            let cayley = Complex64::new(1.0, -b) / Complex64::new(1.0, b);
            for (a, v) in interior.iter().zip(y.interior()) {
                assert!((a[0] * cayley - v[0]).norm() < 1e-12);
                assert!((a[1] * cayley - v[1]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn nonlinear_substep_is_nodewise_isometry() {
        let grid = Grid1D::new(10.0, 64).unwrap();
        let y = Field::from_fn(grid, |x| {
            [Complex64::new(x.cos(), 0.3), Complex64::new(0.1, x)]
        });
        let z = SplitStep::nonlinear(&y, 0.1);
        for (a, b) in y.values().iter().zip(z.values()) {
            assert!(
                (pair_norm_sqr(*a).sqrt() - pair_norm_sqr(*b).sqrt()).abs()
                    <= 1e-15 * (1.0 + pair_norm_sqr(*a).sqrt())
            );
        }
    }

    #[test]
    fn mode_propagator_is_unitary() {
        let u = SplitStep::mode_propagator(3.7, 0.02, 0.1, [1.0, -0.5, 0.3]);
        let p = u.adjoint() * u;
        assert!((p - Mat2::IDENTITY).max_abs() < 1e-14);
    }

    #[test]
    fn mass_conserved() {
        let grid = Grid1D::new(15.0, 128).unwrap();
        let c = cfg(grid);
        let mut x = Field::from_fn(grid, |x| {
            let s = 1.0 / x.cosh();
            [Complex64::new(s, 0.0), Complex64::new(0.0, 0.5 * s)]
        });
        let m0 = discrete_l2_mass(&x);
        let ss = SplitStep::new(grid);
        let path = crate::noise::sample_path(3, 100, 0.01).unwrap();
        for n in 0..100 {
            x = ss.step(&x, path.chi(n), &c).unwrap();
        }
        assert!((discrete_l2_mass(&x) - m0).abs() <= 1e-12 * m0);
    }
}
