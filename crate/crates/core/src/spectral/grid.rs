use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::transform::Transform;
use crate::error::{Error, Result};

/// Largest admissible resolution per axis.
pub const MAX_N_PER_AXIS: usize = 512;
/// Upper bound on the total collocation count of a user grid (memory bound).
pub const MAX_COLLOCATION_POINTS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Periodic box, modes `e^{i k.x}` with `k` in `{-n/2+1, ..., n/2}` per axis.
    #[serde(alias = "torus")]
    TorusExponential,
    /// Dirichlet box, modes `prod sin(k_i x_i)` with `k_i` in `{1, ..., n}`.
    #[serde(alias = "dirichlet")]
    DirichletSine,
}

impl Basis {
    pub fn default_axis_length(self) -> f64 {
        match self {
            Basis::TorusExponential => 2.0 * PI,
            Basis::DirichletSine => PI,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Basis::TorusExponential => 0,
            Basis::DirichletSine => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Basis::TorusExponential),
            1 => Some(Basis::DirichletSine),
            _ => None,
        }
    }
}

/// Tensor-product collocation grid together with its wavenumber tables.
///
/// Coefficient arrays are stored row-major (axis 0 slowest). Along a torus
/// axis the storage index `i` holds wavenumber `i` for `i <= n/2` and `i - n`
/// otherwise (FFT order); along a sine axis index `i` holds wavenumber `i + 1`.
pub struct Grid {
    dim: usize,
    n: usize,
    basis: Basis,
    axis_length: f64,
    wavenumbers: Vec<i64>,
    axis_k: Vec<f64>,
    mu: Vec<f64>,
    transform: OnceLock<Arc<Transform>>,
    padded: [OnceLock<Arc<Transform>>; 2],
}

impl Grid {
    /// Builds a user grid with the basis' default box length.
    pub fn new(dim: usize, n: usize, basis: Basis) -> Result<Self> {
        Self::with_axis_length(dim, n, basis, basis.default_axis_length())
    }

    pub fn with_axis_length(dim: usize, n: usize, basis: Basis, axis_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("odd resolution {n}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("resolution {n} below 4")));
        }
        if n > MAX_N_PER_AXIS || n.pow(dim as u32) > MAX_COLLOCATION_POINTS {
            return Err(Error::InvalidGrid(format!(
                "resolution {n} in dimension {dim} exceeds the memory bound"
            )));
        }
        if !(axis_length.is_finite() && axis_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "axis length {axis_length} must be positive"
            )));
        }
        Ok(Self::build(dim, n, basis, axis_length))
    }

    /// Internal constructor without the user-facing resolution limits; used
    /// for padded and odd-extension grids.
    pub(crate) fn build(dim: usize, n: usize, basis: Basis, axis_length: f64) -> Self {
        let wavenumbers: Vec<i64> = (0..n)
            .map(|i| match basis {
                Basis::TorusExponential => {
                    if i <= n / 2 {
                        i as i64
                    } else {
                        i as i64 - n as i64
                    }
                }
                Basis::DirichletSine => i as i64 + 1,
            })
            .collect();
        let scale = match basis {
            Basis::TorusExponential => 2.0 * PI / axis_length,
            Basis::DirichletSine => PI / axis_length,
        };
        let axis_k: Vec<f64> = wavenumbers.iter().map(|&k| k as f64 * scale).collect();
        let total = n.pow(dim as u32);
        let mut mu = vec![0.0; total];
        for (idx, m) in mu.iter_mut().enumerate() {
            let mut rem = idx;
            let mut acc = 0.0;
            for _ in 0..dim {
                let k = axis_k[rem % n];
                acc += k * k;
                rem /= n;
            }
            *m = acc;
        }
        Grid {
            dim,
            n,
            basis,
            axis_length,
            wavenumbers,
            axis_k,
            mu,
            transform: OnceLock::new(),
            padded: [OnceLock::new(), OnceLock::new()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn axis_length(&self) -> f64 {
        self.axis_length
    }

    pub fn is_torus(&self) -> bool {
        self.basis == Basis::TorusExponential
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Integer wavenumber of each storage index along one axis.
    pub fn axis_wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    /// Physical wavenumber of each storage index along one axis.
    pub fn axis_k(&self) -> &[f64] {
        &self.axis_k
    }

    /// Laplacian eigenvalue `|k|^2` of every mode, in storage order.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Box volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.axis_length.powi(self.dim as i32)
    }

    /// Collocation quadrature weight of one grid point.
    pub fn cell_volume(&self) -> f64 {
        match self.basis {
            Basis::TorusExponential => self.volume() / self.len() as f64,
            // Boundary nodes of the sine grid carry zero and are omitted.
            Basis::DirichletSine => (self.axis_length / (self.n + 1) as f64).powi(self.dim as i32),
        }
    }

    /// Parseval weight: `integral |f|^2 = mode_weight * sum |c_k|^2`.
    pub fn mode_weight(&self) -> f64 {
        match self.basis {
            Basis::TorusExponential => self.volume(),
            Basis::DirichletSine => (0.5 * self.axis_length).powi(self.dim as i32),
        }
    }

    /// Collocation coordinate along one axis.
    pub fn axis_point(&self, j: usize) -> f64 {
        match self.basis {
            Basis::TorusExponential => j as f64 * self.axis_length / self.n as f64,
            Basis::DirichletSine => (j + 1) as f64 * self.axis_length / (self.n + 1) as f64,
        }
    }

    /// Coordinates of the point with flat index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            x[axis] = self.axis_point(rem % self.n);
            rem /= self.n;
        }
        x
    }

    /// Per-axis storage indices of flat index `idx`.
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            m[axis] = rem % self.n;
            rem /= self.n;
        }
        m
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Integer wavenumber tuple of mode `idx`.
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let m = self.multi_index(idx);
        let mut k = [0; 3];
        for axis in 0..self.dim {
            k[axis] = self.wavenumbers[m[axis]];
        }
        k
    }

    /// Storage index of the integer wavevector `k`, if the grid carries it.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for &ki in &k[..self.dim] {
            let i = self.axis_index_of(ki)?;
            idx = idx * self.n + i;
        }
        Some(idx)
    }

    pub(crate) fn axis_index_of(&self, k: i64) -> Option<usize> {
        let n = self.n as i64;
        match self.basis {
            Basis::TorusExponential => {
                if k > -n / 2 && k <= n / 2 {
                    Some(k.rem_euclid(n) as usize)
                } else {
                    None
                }
            }
            Basis::DirichletSine => {
                if (1..=n).contains(&k) {
                    Some((k - 1) as usize)
                } else {
                    None
                }
            }
        }
    }

    /// Storage index of `-k` (torus only; the Nyquist entry maps to itself).
    pub(crate) fn negated_index(&self, idx: usize) -> usize {
        let m = self.multi_index(idx);
        let mut out = 0;
        for &mi in &m[..self.dim] {
            out = out * self.n + (self.n - mi) % self.n;
        }
        out
    }

    /// True when any axis of mode `idx` sits on the torus Nyquist wavenumber.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        if !self.is_torus() {
            return false;
        }
        let m = self.multi_index(idx);
        m[..self.dim].contains(&(self.n / 2))
    }

    /// Same descriptor (dimension, resolution, basis, box length).
    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.basis == other.basis && self.axis_length == other.axis_length
    }

    /// Collocation transform of this grid (built on first use).
    pub fn transform(&self) -> &Transform {
        self.transform
            .get_or_init(|| Arc::new(Transform::new(self.dim, self.n, self.basis, self.n)))
    }

    /// Zero-padded transform evaluating this grid's modes on `factor` times
    /// as many points per axis; factors 2 and 3 are cached.
    pub fn padded_transform(&self, factor: usize) -> Arc<Transform> {
        let make = || Arc::new(Transform::padded(self.dim, self.n, self.basis, factor));
        match factor {
            2 | 3 => self.padded[factor - 2].get_or_init(make).clone(),
            _ => make(),
        }
    }
}

impl Clone for Grid {
    fn clone(&self) -> Self {
        Grid::build(self.dim, self.n, self.basis, self.axis_length)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("basis", &self.basis)
            .field("axis_length", &self.axis_length)
            .finish()
    }
}

/// Validated grid behind a shared handle.
pub fn make_grid(dim: usize, n_per_axis: usize, basis: Basis) -> Result<Arc<Grid>> {
    Grid::new(dim, n_per_axis, basis).map(Arc::new)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_1d_wavenumbers() {
        let g = Grid::new(1, 8, Basis::TorusExponential).unwrap();
        let mut ks = g.axis_wavenumbers().to_vec();
        ks.sort();
        assert_eq!(ks, vec![-3, -2, -1, 0, 1, 2, 3, 4]);
        assert_eq!(g.len(), 8);
    }

    #[test]
    fn torus_3d_point_count() {
        let g = Grid::new(3, 32, Basis::TorusExponential).unwrap();
        assert_eq!(g.len(), 32768);
    }

    #[test]
    fn rejects_bad_descriptors() {
        assert!(matches!(
            Grid::new(1, 7, Basis::TorusExponential),
            Err(Error::InvalidGrid(_))
        ));
        assert!(Grid::new(0, 8, Basis::TorusExponential).is_err());
        assert!(Grid::new(4, 8, Basis::TorusExponential).is_err());
        assert!(Grid::new(1, 2, Basis::TorusExponential).is_err());
        assert!(Grid::new(1, 514, Basis::TorusExponential).is_err());
        assert!(Grid::new(3, 512, Basis::TorusExponential).is_err());
    }

    #[test]
    fn sine_wavenumbers_start_at_one() {
        let g = Grid::new(2, 6, Basis::DirichletSine).unwrap();
        assert_eq!(g.axis_wavenumbers(), &[1, 2, 3, 4, 5, 6]);
        assert_eq!(g.mu()[0], 2.0);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(3, 8, Basis::TorusExponential).unwrap();
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            assert_eq!(g.index_of(&k), Some(idx));
            let mu: i64 = k.iter().map(|x| x * x).sum();
            assert_eq!(g.mu()[idx], mu as f64);
        }
    }
}
