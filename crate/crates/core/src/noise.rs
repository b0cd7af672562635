//! Seeded three-dimensional Brownian increments and exact coarsening.
//!
//! A convergence ladder samples the path once at the finest step and derives
//! every coarser level by summing consecutive increments, so all levels see
//! the same Brownian path.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Name of the generator recorded in run provenance.
pub const GENERATOR_NAME: &str = "ChaCha20Rng+StandardNormal";

/// Increments (ΔW₁, ΔW₂, ΔW₃) of a 3-D Brownian motion on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    seed: u64,
    dt: f64,
    increments: Vec<[f64; 3]>,
    coarsening: usize,
}

impl BrownianPath {
    /// Builds a path from explicit increments, e.g. a deterministic test path.
    pub fn from_increments(seed: u64, dt: f64, increments: Vec<[f64; 3]>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidPath(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            seed,
            dt,
            increments,
            coarsening: 1,
        })
    }

    /// A path with all increments zero, used for deterministic runs.
    pub fn zero(n_steps: usize, dt: f64) -> Result<Self> {
        Self::from_increments(0, dt, vec![[0.0; 3]; n_steps])
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.increments.len() as f64
    }

    pub fn increments(&self) -> &[[f64; 3]] {
        &self.increments
    }

    /// Factor by which this path was coarsened from the sampled one.
    pub fn coarsening_factor(&self) -> usize {
        self.coarsening
    }

    /// Dyadic level log₂(factor), when the factor is a power of two.
    pub fn level(&self) -> Option<u32> {
        self.coarsening
            .is_power_of_two()
            .then(|| self.coarsening.trailing_zeros())
    }

    /// Normalised draw χ^n = ΔW^n / sqrt(Δt).
    pub fn chi(&self, n: usize) -> [f64; 3] {
        let s = self.dt.sqrt();
        let w = self.increments[n];
        [w[0] / s, w[1] / s, w[2] / s]
    }

    /// Componentwise sum of all increments, W(T) − W(0).
    ///
    /// Summed in the same order as [`coarsen`], so every dyadic coarsening of
    /// a path reports a bit-identical total.
    pub fn total(&self) -> [f64; 3] {
        let mut w = self.increments.clone();
        while w.len() > 1 && w.len().is_multiple_of(2) {
            w = sum_runs(&w, 2);
        }
        sum_runs(&w, w.len().max(1))
            .first()
            .copied()
            .unwrap_or([0.0; 3])
    }

    /// Writes the little-endian dump: seed, N, dt, then N×3 increments.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&(self.n_steps() as u64).to_le_bytes())?;
        out.write_all(&self.dt.to_le_bytes())?;
        for w in &self.increments {
            for v in w {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |input: &mut R| -> Result<[u8; 8]> {
            input.read_exact(&mut word)?;
            Ok(word)
        };
        let seed = u64::from_le_bytes(next(&mut input)?);
        let n = u64::from_le_bytes(next(&mut input)?) as usize;
        let dt = f64::from_le_bytes(next(&mut input)?);
        let mut increments = Vec::with_capacity(n);
        for _ in 0..n {
            let mut w = [0.0; 3];
            for v in &mut w {
                *v = f64::from_le_bytes(next(&mut input)?);
            }
            increments.push(w);
        }
        Self::from_increments(seed, dt, increments)
    }
}

/// Samples `n_steps` i.i.d. triples sqrt(dt)·χ with χ ~ N(0, I₃).
pub fn sample_path(seed: u64, n_steps: usize, dt: f64) -> Result<BrownianPath> {
    if n_steps == 0 {
        return Err(Error::InvalidPath("need at least one step".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidPath(format!("dt must be positive, got {dt}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = dt.sqrt();
    let increments = (0..n_steps)
        .map(|_| {
            let mut w = [0.0; 3];
            for v in &mut w {
                let z: f64 = rng.sample(StandardNormal);
                *v = scale * z;
            }
            w
        })
        .collect();
    Ok(BrownianPath {
        seed,
        dt,
        increments,
        coarsening: 1,
    })
}

/// Sums each run of `factor` consecutive increments into one coarse increment.
///
/// The power-of-two part of `factor` is applied as repeated pairwise halving
/// and the odd remainder as a left-to-right sum, so
/// `coarsen(p, 4) == coarsen(&coarsen(p, 2)?, 2)` holds bit for bit.
pub fn coarsen(path: &BrownianPath, factor: usize) -> Result<BrownianPath> {
    if factor == 0 || !path.n_steps().is_multiple_of(factor) {
        return Err(Error::NonDivisibleFactor {
            factor,
            n_steps: path.n_steps(),
        });
    }
    let halvings = factor.trailing_zeros();
    let mut increments = path.increments.clone();
    for _ in 0..halvings {
        increments = sum_runs(&increments, 2);
    }
    let odd = factor >> halvings;
    if odd > 1 {
        increments = sum_runs(&increments, odd);
    }
    Ok(BrownianPath {
        seed: path.seed,
        dt: path.dt * factor as f64,
        increments,
        coarsening: path.coarsening * factor,
    })
}

fn sum_runs(w: &[[f64; 3]], run: usize) -> Vec<[f64; 3]> {
    w.chunks_exact(run)
        .map(|chunk| {
            let mut acc = [0.0; 3];
            for v in chunk {
                for k in 0..3 {
                    acc[k] += v[k];
                }
            }
            acc
        })
        .collect()
}
