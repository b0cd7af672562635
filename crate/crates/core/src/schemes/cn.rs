use num_complex::Complex64;

use super::SchemeConfig;
use crate::error::{Error, Result};
use crate::field::{pair_norm_sqr, Field, Pair};
use crate::propagator::StepOperator;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Iteration count and final relative update of one CN step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnStats {
    pub iterations: usize,
    pub update: f64,
}

/// iΔt · ½(|a|² + |b|²) · (a + b)/2 at one node.
#[inline]
fn cubic_midpoint(a: Pair, b: Pair, dt: f64) -> Pair {
    let w = I * (0.25 * dt * (pair_norm_sqr(a) + pair_norm_sqr(b)));
    [(a[0] + b[0]) * w, (a[1] + b[1]) * w]
}

fn l2(v: &[Pair]) -> f64 {
    v.iter().map(|p| pair_norm_sqr(*p)).sum::<f64>().sqrt()
}

/// One Crank–Nicolson step.
///
/// Solves T X^{n+1} = (Id − H/2) X^n + iΔt F(X^n, X^{n+1}) by the fixed-point
/// iteration X^{(m+1)} = T⁻¹(rhs(X^{(m)})) started from X^n.
pub fn cn_step(x: &Field, chi: [f64; 3], cfg: &SchemeConfig) -> Result<Field> {
    cn_step_with_stats(x, chi, cfg).map(|(f, _)| f)
}

pub fn cn_step_with_stats(
    x: &Field,
    chi: [f64; 3],
    cfg: &SchemeConfig,
) -> Result<(Field, CnStats)> {
    cfg.check_grid(x)?;
    let op = StepOperator::assemble(cfg.dt, cfg.gamma, chi, cfg.grid);
    let fact = op.factorize()?;
    let base = op.apply_t_minus(x);
    let x0 = x.interior();
    let b = base.interior();

    let mut current = x0.to_vec();
    let mut rhs = vec![[Complex64::new(0.0, 0.0); 2]; b.len()];
    let mut stats = CnStats {
        iterations: 0,
        update: f64::INFINITY,
    };
    while stats.iterations < cfg.nl_max_iter {
        for ((r, bj), (a, c)) in rhs.iter_mut().zip(b).zip(x0.iter().zip(&current)) {
            *r = if cfg.nonlinear {
                let n = cubic_midpoint(*a, *c, cfg.dt);
                [bj[0] + n[0], bj[1] + n[1]]
            } else {
                *bj
            };
        }
        let next = fact.solve(&rhs);
        let diff: f64 = next
            .iter()
            .zip(&current)
            .map(|(u, v)| pair_norm_sqr([u[0] - v[0], u[1] - v[1]]))
            .sum::<f64>()
            .sqrt();
        let norm = l2(&next);
        stats.update = if diff == 0.0 { 0.0 } else { diff / norm };
        stats.iterations += 1;
        current = next;
        if stats.update <= cfg.nl_tol || !cfg.nonlinear {
            break;
        }
    }
    if stats.update > cfg.nl_tol && cfg.nonlinear {
        return Err(Error::NonConvergence {
            iterations: stats.iterations,
            update: stats.update,
        });
    }
    let out = Field::from_interior(cfg.grid, &current)?;
    if let Some(g) = cfg.guard {
        g.check(&out)?;
    }
    Ok((out, stats))
}

/// Discrete L² norm of the fully discrete CN relation evaluated at (X^n, X^{n+1}).
pub fn cn_residual(x0: &Field, x1: &Field, chi: [f64; 3], cfg: &SchemeConfig) -> Result<f64> {
    x0.check_same_grid(x1)?;
    let op = StepOperator::assemble(cfg.dt, cfg.gamma, chi, cfg.grid);
    let mid = x0.add(x1)?.scaled(Complex64::new(0.5, 0.0));
    let h_mid = op.apply_h(&mid);
    let res: Vec<Pair> = x0
        .interior()
        .iter()
        .zip(x1.interior())
        .zip(h_mid.interior())
        .map(|((a, c), h)| {
            let lin = [I * (c[0] - a[0] + h[0]), I * (c[1] - a[1] + h[1])];
            if cfg.nonlinear {
                // Δt ½(|X^n|² + |X^{n+1}|²) X^{n+1/2}
                let n = cubic_midpoint(*a, *c, cfg.dt);
                [lin[0] - I * n[0], lin[1] - I * n[1]]
            } else {
                lin
            }
        })
        .collect();
    Ok((cfg.grid.dx() * res.iter().map(|p| pair_norm_sqr(*p)).sum::<f64>()).sqrt())
}
