use num_complex::Complex64;

use super::SchemeConfig;
use crate::error::{Error, Result};
use crate::field::{discrete_l2_mass, pair_norm_sqr, Field, Pair};
use crate::pauli::pauli_combination;

/// Explicit Euler step of the Itô form
/// dX = (C_γ ∂²X + i|X|²X) dt − sqrt(γ) Σ σ_k ∂X dW_k, with C_γ = i + 3γ/2,
/// using centred differences. Not mass conservative.
pub fn euler_ito_step(x: &Field, chi: [f64; 3], cfg: &SchemeConfig) -> Result<Field> {
    cfg.check_grid(x)?;
    let dx = cfg.grid.dx();
    let dt = cfg.dt;
    let drift = Complex64::new(1.5 * cfg.gamma, 1.0) * (dt / (dx * dx));
    let noise =
        pauli_combination(chi).scale(Complex64::new((cfg.gamma * dt).sqrt() / (2.0 * dx), 0.0));
    let v = x.values();
    let interior: Vec<Pair> = (1..v.len() - 1)
        .map(|j| {
            let (l, c, r) = (v[j - 1], v[j], v[j + 1]);
            let grad = noise.apply([r[0] - l[0], r[1] - l[1]]);
            let cubic = if cfg.nonlinear {
                Complex64::new(0.0, dt * pair_norm_sqr(c))
            } else {
                Complex64::new(0.0, 0.0)
            };
            let mut out = [Complex64::new(0.0, 0.0); 2];
            for k in 0..2 {
                out[k] = c[k] + drift * (l[k] - c[k] * 2.0 + r[k]) + cubic * c[k] - grad[k];
            }
            out
        })
        .collect();
    let out = Field::from_interior(cfg.grid, &interior)?;
    let mass = discrete_l2_mass(&out);
    if !mass.is_finite() || mass > cfg.overflow_cap {
        return Err(Error::OverflowDetected { mass });
    }
    if let Some(g) = cfg.guard {
        g.check(&out)?;
    }
    Ok(out)
}
