use num_complex::Complex64;

use super::SchemeConfig;
use crate::error::{Error, Result};
use crate::field::{pair_norm_sqr, Field, Pair};
use crate::pauli::Mat2;
use crate::propagator::StepOperator;

/// Auxiliary intensity Φ^{n−1/2} of the relaxation scheme, one value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxState {
    phi: Vec<f64>,
}

impl RelaxState {
    /// Φ^{-1/2}_j = |X⁰_j|².
    pub fn new(x0: &Field) -> Self {
        Self {
            phi: x0.values().iter().map(|v| pair_norm_sqr(*v)).collect(),
        }
    }

    pub fn from_values(phi: Vec<f64>) -> Self {
        Self { phi }
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
}

/// One relaxation step: Φ^{n+1/2} = 2|X^n|² − Φ^{n−1/2}, then the linear
/// system (T − iΔtΦ/2) X^{n+1} = (Id − H/2 + iΔtΦ/2) X^n.
pub fn relaxation_step(
    x: &Field,
    relax: &RelaxState,
    chi: [f64; 3],
    cfg: &SchemeConfig,
) -> Result<(Field, RelaxState)> {
    cfg.check_grid(x)?;
    if relax.phi.len() != x.values().len() {
        return Err(Error::LengthMismatch {
            len: relax.phi.len(),
            expected: x.values().len(),
        });
    }
    let phi: Vec<f64> = x
        .values()
        .iter()
        .zip(&relax.phi)
        .map(|(v, p)| 2.0 * pair_norm_sqr(*v) - p)
        .collect();

    let op = StepOperator::assemble(cfg.dt, cfg.gamma, chi, cfg.grid);
    let mut system = op.t_system();
    let mut rhs: Vec<Pair> = op.apply_t_minus(x).interior().to_vec();
    if cfg.nonlinear {
        let interior_phi = &phi[1..phi.len() - 1];
        for ((d, r), (p, v)) in system
            .diag
            .iter_mut()
            .zip(rhs.iter_mut())
            .zip(interior_phi.iter().zip(x.interior()))
        {
            let w = Complex64::new(0.0, 0.5 * cfg.dt * p);
            *d = *d - Mat2::scalar(w);
            r[0] += w * v[0];
            r[1] += w * v[1];
        }
    }
    let next = system.factorize()?.solve(&rhs);
    let out = Field::from_interior(cfg.grid, &next)?;
    if let Some(g) = cfg.guard {
        g.check(&out)?;
    }
    Ok((out, RelaxState { phi }))
}
