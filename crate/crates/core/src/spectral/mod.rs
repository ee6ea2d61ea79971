//! Grids, basis transforms and exact evaluation utilities.
//!
//! Coefficient convention: on the torus the coefficient of mode `k` is
//! `(1/N) sum_x f(x) e^{-i k.x}`, so the zero mode is the mean. Physical
//! integrals use the collocation weight `Grid::cell_volume`; coefficient-space
//! integrals use `Grid::mode_weight` (Parseval).

mod field;
mod grid;
mod transform;

pub(crate) use field::lp_norm;
pub use field::{eval_shifted, forward_transform, inverse_transform, odd_extension, Field, SpectralField};
pub use grid::{make_grid, Basis, Grid, MAX_COLLOCATION_POINTS, MAX_N_PER_AXIS};
pub use transform::Transform;

pub use rustfft::num_complex::Complex64;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Random smooth field supported on `1 <= |k| <= band`.
///
/// Wavevectors are visited in a fixed order independent of the grid
/// resolution, so the same `(seed, band)` yields the same function on every
/// grid that resolves the band. Amplitudes decay like `1/(1+|k|^2)`.
pub fn seeded_field(grid: &Arc<Grid>, seed: u64, band: u32) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    seeded_field_with(grid, &mut rng, band)
}

pub(crate) fn seeded_field_with(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, band: u32) -> Result<SpectralField> {
    let dim = grid.dim();
    let b = band as i64;
    let limit = match grid.basis() {
        Basis::TorusExponential => grid.n_per_axis() as i64 / 2 - 1,
        Basis::DirichletSine => grid.n_per_axis() as i64,
    };
    if b > limit {
        return Err(Error::param(format!(
            "band {band} not resolved by a grid with {} points per axis",
            grid.n_per_axis()
        )));
    }
    let mut out = SpectralField::zeros(grid.clone());
    let lo = match grid.basis() {
        Basis::TorusExponential => -b,
        Basis::DirichletSine => 1,
    };
    let mut k = [0i64; 3];
    let span = (b - lo + 1) as usize;
    for flat in 0..span.pow(dim as u32) {
        let mut rem = flat;
        for a in (0..dim).rev() {
            k[a] = lo + (rem % span) as i64;
            rem /= span;
        }
        let mu: i64 = k[..dim].iter().map(|x| x * x).sum();
        if mu == 0 || mu > b * b {
            continue;
        }
        if grid.is_torus() && !is_positive_half(&k[..dim]) {
            continue;
        }
        let decay = 1.0 / (1.0 + mu as f64);
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if grid.is_torus() {
            StandardNormal.sample(rng)
        } else {
            0.0
        };
        out.set_real_mode(&k[..dim], Complex64::new(re, im) * decay)?;
    }
    Ok(out)
}

fn is_positive_half(k: &[i64]) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}
