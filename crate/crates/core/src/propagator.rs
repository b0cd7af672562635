//! The random one-step linear operator of the midpoint scheme.
//!
//! With r = Δt/Δx², centred stencils Δ and ∇ and S = Σ_k σ_k χ_k, the
//! discrete operator is
//!
//! ```text
//! (H X)_j = -i r (X_{j-1} - 2 X_j + X_{j+1}) + (sqrt(γ r)/2) S (X_{j+1} - X_{j-1})
//! ```
//!
//! It is skew-adjoint for the real L² product, so the Cayley map
//! U = (Id + H/2)⁻¹ (Id − H/2) is an isometry. `T = Id + H/2` is block
//! tridiagonal with 2×2 blocks and is solved by block Thomas elimination.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, Grid1D, Pair, ZERO_PAIR};
use crate::pauli::{pauli_combination, Mat2};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn add_pair(a: Pair, b: Pair) -> Pair {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub_pair(a: Pair, b: Pair) -> Pair {
    [a[0] - b[0], a[1] - b[1]]
}

/// Block-tridiagonal system with 2×2 complex blocks.
///
/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`;
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    pub lower: Vec<Mat2>,
    pub diag: Vec<Mat2>,
    pub upper: Vec<Mat2>,
}

impl BlockTridiagonal {
    pub fn uniform(n: usize, lower: Mat2, diag: Mat2, upper: Mat2) -> Self {
        Self {
            lower: vec![lower; n],
            diag: vec![diag; n],
            upper: vec![upper; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[Pair]) -> Vec<Pair> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i].apply(x[i]);
                if i > 0 {
                    acc = add_pair(acc, self.lower[i].apply(x[i - 1]));
                }
                if i + 1 < n {
                    acc = add_pair(acc, self.upper[i].apply(x[i + 1]));
                }
                acc
            })
            .collect()
    }

    /// Forward elimination without pivoting across block rows.
    pub fn factorize(&self) -> Result<BlockFactorization> {
        let n = self.len();
        let mut inv_pivots = Vec::with_capacity(n);
        let mut multipliers = Vec::with_capacity(n);
        let mut prev_inv: Option<Mat2> = None;
        for i in 0..n {
            let (pivot, w) = match prev_inv {
                None => (self.diag[i], Mat2::ZERO),
                Some(pinv) => {
                    let w = self.lower[i] * pinv;
                    (self.diag[i] - w * self.upper[i - 1], w)
                }
            };
            let det_abs = pivot.det().norm();
            let scale = pivot.max_abs();
            if !det_abs.is_finite() || det_abs <= f64::EPSILON * scale * scale {
                return Err(Error::SingularPivot { row: i, det_abs });
            }
            let inv = pivot
                .inverse()
                .ok_or(Error::SingularPivot { row: i, det_abs })?;
            inv_pivots.push(inv);
            multipliers.push(w);
            prev_inv = Some(inv);
        }
        Ok(BlockFactorization {
            inv_pivots,
            multipliers,
            upper: self.upper.clone(),
        })
    }
}

/// Block LU factors produced by [`BlockTridiagonal::factorize`].
#[derive(Debug, Clone)]
pub struct BlockFactorization {
    inv_pivots: Vec<Mat2>,
    multipliers: Vec<Mat2>,
    upper: Vec<Mat2>,
}

impl BlockFactorization {
    pub fn solve(&self, rhs: &[Pair]) -> Vec<Pair> {
        let n = self.inv_pivots.len();
        assert_eq!(rhs.len(), n, "rhs length does not match system size");
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let yi = if i == 0 {
                rhs[0]
            } else {
                sub_pair(rhs[i], self.multipliers[i].apply(y[i - 1]))
            };
            y.push(yi);
        }
        let mut x = vec![ZERO_PAIR; n];
        x[n - 1] = self.inv_pivots[n - 1].apply(y[n - 1]);
        for i in (0..n - 1).rev() {
            x[i] = self.inv_pivots[i].apply(sub_pair(y[i], self.upper[i].apply(x[i + 1])));
        }
        x
    }
}

/// Assembled H_{Δt,n} and T = Id + H/2 for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOperator {
    dt: f64,
    gamma: f64,
    chi: [f64; 3],
    grid: Grid1D,
    /// (lower, diag, upper) stencil blocks of H.
    h_blocks: [Mat2; 3],
}

impl StepOperator {
    pub fn assemble(dt: f64, gamma: f64, chi: [f64; 3], grid: Grid1D) -> Self {
        let dx = grid.dx();
        let r = dt / (dx * dx);
        let s = pauli_combination(chi).scale(real(0.5 * (gamma * r).sqrt()));
        let lap = Mat2::scalar(-I * r);
        let h_blocks = [lap - s, Mat2::scalar(2.0 * I * r), lap + s];
        Self {
            dt,
            gamma,
            chi,
            grid,
            h_blocks,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn chi(&self) -> [f64; 3] {
        self.chi
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Stencil blocks (lower, diag, upper) of H.
    pub fn h_blocks(&self) -> [Mat2; 3] {
        self.h_blocks
    }

    /// Blocks of Id + s·H.
    fn shifted_blocks(&self, s: f64) -> [Mat2; 3] {
        let [l, d, u] = self.h_blocks;
        let s = real(s);
        [l.scale(s), Mat2::IDENTITY + d.scale(s), u.scale(s)]
    }

    /// The block-tridiagonal system T = Id + H/2 on the interior nodes.
    pub fn t_system(&self) -> BlockTridiagonal {
        let [l, d, u] = self.shifted_blocks(0.5);
        BlockTridiagonal::uniform(self.grid.interior_points(), l, d, u)
    }

    fn apply_blocks(&self, blocks: [Mat2; 3], x: &Field) -> Field {
        let [l, d, u] = blocks;
        let v = x.values();
        let interior: Vec<Pair> = (1..v.len() - 1)
            .map(|j| {
                add_pair(
                    add_pair(l.apply(v[j - 1]), d.apply(v[j])),
                    u.apply(v[j + 1]),
                )
            })
            .collect();
        Field::from_interior(self.grid, &interior).expect("interior length matches grid")
    }

    /// H x with Dirichlet zeros at both ends.
    pub fn apply_h(&self, x: &Field) -> Field {
        self.apply_blocks(self.h_blocks, x)
    }

    /// (Id + H/2) x.
    pub fn apply_t(&self, x: &Field) -> Field {
        self.apply_blocks(self.shifted_blocks(0.5), x)
    }

    /// (Id − H/2) x.
    pub fn apply_t_minus(&self, x: &Field) -> Field {
        self.apply_blocks(self.shifted_blocks(-0.5), x)
    }

    pub fn factorize(&self) -> Result<BlockFactorization> {
        self.t_system().factorize()
    }
}

/// Solves (Id + H/2) v = rhs.
pub fn solve_t(op: &StepOperator, rhs: &Field) -> Result<Field> {
    if rhs.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let fact = op.factorize()?;
    Field::from_interior(op.grid, &fact.solve(rhs.interior()))
}

/// U x = (Id + H/2)⁻¹ (Id − H/2) x.
pub fn one_step_linear(op: &StepOperator, x: &Field) -> Result<Field> {
    solve_t(op, &op.apply_t_minus(x))
}

/// Fourier multiplier of H at wavenumber ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolMatrix {
    pub xi: f64,
    pub entries: Mat2,
}

/// iΔt|ξ|² Id + i sqrt(γΔt) ξ Σ_k σ_k χ_k.
pub fn symbol_matrix(xi: f64, dt: f64, gamma: f64, chi: [f64; 3]) -> SymbolMatrix {
    let diag = Mat2::scalar(I * (dt * xi * xi));
    let noise = pauli_combination(chi).scale(I * ((gamma * dt).sqrt() * xi));
    SymbolMatrix {
        xi,
        entries: diag + noise,
    }
}

/// det(Id + ½·symbol) = 1 + (γΔt/4)|χ|²ξ² − (Δt²/4)ξ⁴ + iΔtξ².
pub fn symbol_determinant(xi: f64, dt: f64, gamma: f64, chi: [f64; 3]) -> Complex64 {
    let y: f64 = chi.iter().map(|c| c * c).sum();
    let xi2 = xi * xi;
    Complex64::new(
        1.0 + 0.25 * gamma * dt * y * xi2 - 0.25 * dt * dt * xi2 * xi2,
        dt * xi2,
    )
}

/// f(x, y) = (1 + γx²y/4 − x⁴/4)² + x⁴, equal to |det|² at x = sqrt(Δt)|ξ|, y = |χ|².
pub fn determinant_modulus_sq(x: f64, y: f64, gamma: f64) -> f64 {
    let x2 = x * x;
    let a = 1.0 + 0.25 * gamma * x2 * y - 0.25 * x2 * x2;
    a * a + x2 * x2
}

/// Piecewise lower bound on f(x, y) over the three regimes of x² against
/// 4·max(γy/4, 1) and 16·max(γy/4, 1).
pub fn determinant_lower_bound(x: f64, y: f64, gamma: f64) -> f64 {
    let x2 = x * x;
    let x4 = x2 * x2;
    let m = (0.25 * gamma * y).max(1.0);
    if x2 <= 4.0 * m {
        0.25 * (1.0 + x4)
    } else if x2 <= 16.0 * m {
        x4
    } else {
        x4 * x4 / 32.0 + x4
    }
}

/// Writes `xi,abs_det` rows for plotting the spectrum of T.
pub fn write_spectrum_csv<W: Write>(
    mut out: W,
    xis: &[f64],
    dt: f64,
    gamma: f64,
    chi: [f64; 3],
) -> Result<()> {
    writeln!(out, "xi,abs_det")?;
    for &xi in xis {
        writeln!(
            out,
            "{:e},{:e}",
            xi,
            symbol_determinant(xi, dt, gamma, chi).norm()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(grid: Grid1D, rng: &mut ChaCha8Rng) -> Field {
        Field::from_fn(grid, |_| {
            [
                c(rng.sample(StandardNormal), rng.sample(StandardNormal)),
                c(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            ]
        })
    }

    /// Direct stencil evaluation of H, written independently of the block assembly.
    fn stencil_h(x: &Field, dt: f64, gamma: f64, chi: [f64; 3]) -> Vec<Pair> {
        let dx = x.grid().dx();
        let r = dt / (dx * dx);
        let k = 0.5 * (gamma * r).sqrt();
        let v = x.values();
        let (c1, c2, c3) = (chi[0], chi[1], chi[2]);
        (1..v.len() - 1)
            .map(|j| {
                let mut out = [c(0.0, 0.0); 2];
                for comp in 0..2 {
                    let lap = v[j - 1][comp] - v[j][comp] * 2.0 + v[j + 1][comp];
                    out[comp] = -I * r * lap;
                }
                let g0 = v[j + 1][0] - v[j - 1][0];
                let g1 = v[j + 1][1] - v[j - 1][1];
                // σ1 χ1 + σ2 χ2 + σ3 χ3 applied to (g0, g1)
                out[0] += (g0 * c3 + g1 * c(c1, -c2)) * k;
                out[1] += (g0 * c(c1, c2) - g1 * c3) * k;
                out
            })
            .collect()
    }

    /// Scalar Thomas algorithm for a constant tridiagonal complex system.
    fn scalar_thomas(
        sub: Complex64,
        diag: Complex64,
        sup: Complex64,
        d: &[Complex64],
    ) -> Vec<Complex64> {
        let n = d.len();
        let mut cp = vec![c(0.0, 0.0); n];
        let mut dp = vec![c(0.0, 0.0); n];
        cp[0] = sup / diag;
        dp[0] = d[0] / diag;
        for i in 1..n {
            let m = diag - sub * cp[i - 1];
            cp[i] = sup / m;
            dp[i] = (d[i] - sub * dp[i - 1]) / m;
        }
        let mut x = vec![c(0.0, 0.0); n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }

    fn max_diff(a: &[Pair], b: &[Pair]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u[0] - v[0]).norm().max((u[1] - v[1]).norm()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn assembly_matches_stencil() {
        let grid = Grid1D::new(5.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let chi = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let op = StepOperator::assemble(0.01, 0.3, chi, grid);
            let x = random_field(grid, &mut rng);
            let hx = op.apply_h(&x);
            assert!(max_diff(hx.interior(), &stencil_h(&x, 0.01, 0.3, chi)) < 1e-13);
            let tx = op.t_system().apply(x.interior());
            let expected: Vec<Pair> = x
                .interior()
                .iter()
                .zip(hx.interior())
                .map(|(a, h)| [a[0] + h[0] * 0.5, a[1] + h[1] * 0.5])
                .collect();
            assert!(max_diff(&tx, &expected) < 1e-13);
        }
    }

    #[test]
    fn gamma_zero_drops_noise() {
        let grid = Grid1D::new(5.0, 16).unwrap();
        let a = StepOperator::assemble(0.01, 0.0, [1.0, -2.0, 0.5], grid);
        let b = StepOperator::assemble(0.01, 0.0, [0.0, 0.0, 0.0], grid);
        assert_eq!(a.h_blocks(), b.h_blocks());
        let [l, _, u] = a.h_blocks();
        assert_eq!(l, u);
        assert_eq!(l.0[0][1], c(0.0, 0.0));
    }

    #[test]
    fn laplacian_of_constant_is_boundary_only() {
        let grid = Grid1D::new(5.0, 16).unwrap();
        let op = StepOperator::assemble(0.01, 0.0, [0.0; 3], grid);
        let x = Field::from_fn(grid, |_| [c(1.0, 0.0), c(0.0, 2.0)]);
        let hx = op.apply_h(&x);
        let m = grid.interior_points();
        for (j, v) in hx.interior().iter().enumerate() {
            if j == 0 || j == m - 1 {
                assert!(v[0].norm() > 0.0);
            } else {
                assert_eq!(v[0], c(0.0, 0.0));
                assert_eq!(v[1], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn skew_symmetry() {
        let grid = Grid1D::new(10.0, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let chi = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let op = StepOperator::assemble(0.05, 0.1, chi, grid);
            let u = random_field(grid, &mut rng);
            let hu = op.apply_h(&u);
            let scale = hu.real_inner(&hu).unwrap().sqrt() * u.real_inner(&u).unwrap().sqrt();
            assert!(hu.real_inner(&u).unwrap().abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn solve_roundtrip_and_zero_rhs() {
        let grid = Grid1D::new(10.0, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = StepOperator::assemble(0.1, 0.5, [0.7, -1.1, 2.0], grid);
        let w = random_field(grid, &mut rng);
        let rhs = op.apply_t(&w);
        let v = solve_t(&op, &rhs).unwrap();
        assert!(max_diff(v.interior(), w.interior()) < 1e-10);
        let z = solve_t(&op, &Field::zeros(grid)).unwrap();
        assert_eq!(z, Field::zeros(grid));
    }

    #[test]
    fn gamma_zero_solve_matches_scalar_thomas() {
        let grid = Grid1D::new(8.0, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dt = 0.02;
        let op = StepOperator::assemble(dt, 0.0, [0.3, 0.9, -0.4], grid);
        let rhs = random_field(grid, &mut rng);
        let v = solve_t(&op, &rhs).unwrap();
        let r = dt / grid.dx().powi(2);
        let sub = c(0.0, -0.5 * r);
        let diag = c(1.0, r);
        for comp in 0..2 {
            let d: Vec<Complex64> = rhs.interior().iter().map(|p| p[comp]).collect();
            let x = scalar_thomas(sub, diag, sub, &d);
            for (a, b) in x.iter().zip(v.interior()) {
                assert!((a - b[comp]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_step_is_isometric() {
        let grid = Grid1D::new(10.0, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let op = StepOperator::assemble(0.05, 0.1, [1.2, -0.3, 0.8], grid);
        let u = random_field(grid, &mut rng);
        let v = random_field(grid, &mut rng);
        let uu = one_step_linear(&op, &u).unwrap();
        let vv = one_step_linear(&op, &v).unwrap();
        let before = u.real_inner(&v).unwrap();
        let after = uu.real_inner(&vv).unwrap();
        let scale = u.real_inner(&u).unwrap().sqrt() * v.real_inner(&v).unwrap().sqrt();
        assert!((before - after).abs() <= 1e-10 * scale);
    }

    #[test]
    fn symbol_basics() {
        let s = symbol_matrix(0.0, 0.3, 0.1, [1.0, 2.0, 3.0]);
        assert_eq!(s.entries, Mat2::ZERO);
        let s = symbol_matrix(2.0, 0.1, 0.1, [0.0; 3]);
        assert_eq!(s.entries, Mat2::scalar(c(0.0, 0.4)));
        assert_eq!(
            symbol_determinant(0.0, 0.5, 0.1, [1.0, 1.0, 1.0]),
            c(1.0, 0.0)
        );
    }

    #[test]
    fn symbol_is_i_times_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let xi: f64 = rng.random_range(-50.0..50.0);
            let chi = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let s = symbol_matrix(xi, 0.01, 0.2, chi).entries;
            // s = i A with A Hermitian ⇔ s* = -s
            assert!((s.adjoint() + s).max_abs() <= 1e-14 * (1.0 + s.max_abs()));
        }
    }

    #[test]
    fn closed_form_determinant_matches_matrix_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let xi: f64 = rng.random_range(-30.0..30.0);
            let dt: f64 = rng.random_range(1e-4..0.5);
            let chi = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let t = Mat2::IDENTITY + symbol_matrix(xi, dt, 0.1, chi).entries.scale(c(0.5, 0.0));
            let direct = t.det();
            let closed = symbol_determinant(xi, dt, 0.1, chi);
            assert!((direct - closed).norm() <= 1e-12 * (1.0 + closed.norm()));
            let x = dt.sqrt() * xi.abs();
            let y: f64 = chi.iter().map(|v| v * v).sum();
            let f = determinant_modulus_sq(x, y, 0.1);
            assert!((closed.norm_sqr() - f).abs() <= 1e-12 * f);
        }
    }

    #[test]
    fn deterministic_determinant_bound() {
        for i in 0..2000 {
            let x = 1e-3 * 1.01f64.powi(i);
            let det = symbol_determinant(x, 1.0, 0.1, [0.0; 3]);
            assert!(det.norm_sqr() >= determinant_lower_bound(x, 0.0, 0.1) * (1.0 - 1e-14));
        }
    }

    #[test]
    fn singular_pivot_reported() {
        let sys = BlockTridiagonal::uniform(3, Mat2::ZERO, Mat2::ZERO, Mat2::ZERO);
        assert!(matches!(
            sys.factorize(),
            Err(Error::SingularPivot { row: 0, .. })
        ));
    }

    #[test]
    fn spectrum_csv() {
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &[0.0, 1.0], 0.1, 0.1, [0.0; 3]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("xi,abs_det"));
        assert_eq!(text.lines().nth(1), Some("0e0,1e0"));
    }
}
