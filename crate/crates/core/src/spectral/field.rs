use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::grid::{Basis, Grid};
use crate::error::{Error, Result};

/// Real point values on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite field value at point {i}")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Field { grid, values }
    }

    /// Samples `f` at every collocation point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field { grid, values }
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Collocation quadrature of `f * g`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Collocation quadrature of `|f|^p`, raised to `1/p`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, p, self.grid.cell_volume())
    }
}

pub(crate) fn lp_norm(values: &[f64], p: f64, cell_volume: f64) -> f64 {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = if p.fract() == 0.0 && p <= 64.0 {
        let ip = p as i32;
        values.iter().map(|v| (v.abs() / scale).powi(ip)).sum()
    } else {
        values.iter().map(|v| (v.abs() / scale).powf(p)).sum()
    };
    scale * (s * cell_volume).powf(1.0 / p)
}

/// Coefficient-space mirror of a real field.
///
/// Torus coefficients satisfy `c(-k) = conj(c(k))`; sine coefficients are real
/// (stored with zero imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        SpectralField { grid, coeffs }
    }

    /// Wraps coefficients after checking the reality constraint.
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::param(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        let s = SpectralField { grid, coeffs };
        s.check_symmetry()?;
        Ok(s)
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of integer wavevector `k`, zero when not carried.
    pub fn coeff_at(&self, k: &[i64]) -> Complex64 {
        self.grid.index_of(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    pub fn set_mode(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::param(format!("wavevector {k:?} not on the grid")))?;
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Sets `c(k) = value` and, on the torus, `c(-k) = conj(value)`.
    pub fn set_real_mode(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::param(format!("wavevector {k:?} not on the grid")))?;
        match self.grid.basis() {
            Basis::TorusExponential => {
                let neg = self.grid.negated_index(idx);
                if neg == idx {
                    self.coeffs[idx] = Complex64::new(value.re, 0.0);
                } else {
                    self.coeffs[idx] = value;
                    self.coeffs[neg] = value.conj();
                }
            }
            Basis::DirichletSine => self.coeffs[idx] = Complex64::new(value.re, 0.0),
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Rejects coefficient arrays that do not describe a real field.
    pub fn check_symmetry(&self) -> Result<()> {
        let tol = 1e-12 * self.max_abs().max(f64::MIN_POSITIVE);
        if let Some(i) = self.coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::SymmetryViolation {
                index: i,
                defect: f64::INFINITY,
            });
        }
        match self.grid.basis() {
            Basis::TorusExponential => {
                for (i, c) in self.coeffs.iter().enumerate() {
                    let j = self.grid.negated_index(i);
                    let defect = (self.coeffs[j] - c.conj()).norm();
                    if defect > tol {
                        return Err(Error::SymmetryViolation { index: i, defect });
                    }
                }
            }
            Basis::DirichletSine => {
                for (i, c) in self.coeffs.iter().enumerate() {
                    if c.im.abs() > tol {
                        return Err(Error::SymmetryViolation {
                            index: i,
                            defect: c.im.abs(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<SpectralField> {
        self.ensure_same_grid(other)?;
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b * s).collect(),
        })
    }

    pub fn ensure_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `sum_k w(mu_k) Re(a_k conj(b_k))` times the Parseval weight.
    pub fn weighted_inner(&self, other: &SpectralField, w: impl Fn(f64) -> f64) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(weighted_inner(&self.grid, &self.coeffs, &other.coeffs, w))
    }

    /// L2 norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        weighted_inner(&self.grid, &self.coeffs, &self.coeffs, |_| 1.0).sqrt()
    }

    /// Mean value (torus zero mode; zero on the sine basis).
    pub fn mean(&self) -> f64 {
        match self.grid.basis() {
            Basis::TorusExponential => self.coeffs[0].re,
            Basis::DirichletSine => 0.0,
        }
    }

    /// Re-expresses the field on a grid of another resolution over the same
    /// box: shared modes are copied, the rest are zero. A torus Nyquist entry
    /// is split (upsampling) or summed (downsampling) so that the represented
    /// trigonometric interpolant is preserved whenever it fits.
    pub fn resample(&self, target: Arc<Grid>) -> Result<SpectralField> {
        let src = &self.grid;
        if src.dim() != target.dim() || src.basis() != target.basis() || src.axis_length() != target.axis_length() {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
        let dim = src.dim();
        let (ns, nt) = (src.n_per_axis() as i64, target.n_per_axis() as i64);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let k = src.wavevector(idx);
            // Each torus Nyquist axis of the source fans out to +-n/2 when the
            // target is finer.
            let mut targets: Vec<([i64; 3], f64)> = vec![(k, 1.0)];
            if src.is_torus() && nt > ns {
                for axis in 0..dim {
                    if k[axis] == ns / 2 {
                        let mut next = Vec::with_capacity(targets.len() * 2);
                        for (kk, w) in targets {
                            let mut a = kk;
                            let mut b = kk;
                            a[axis] = ns / 2;
                            b[axis] = -ns / 2;
                            next.push((a, 0.5 * w));
                            next.push((b, 0.5 * w));
                        }
                        targets = next;
                    }
                }
            }
            for (kk, w) in targets {
                let mut kt = kk;
                if src.is_torus() && nt < ns {
                    // Fold -nt/2 onto the target Nyquist entry.
                    for ki in kt.iter_mut().take(dim) {
                        if *ki == -nt / 2 {
                            *ki = nt / 2;
                        }
                    }
                }
                if let Some(j) = target.index_of(&kt) {
                    out[j] += c * w;
                }
            }
        }
        Ok(SpectralField::from_raw(target, out))
    }
}

pub(crate) fn weighted_inner(grid: &Grid, a: &[Complex64], b: &[Complex64], w: impl Fn(f64) -> f64) -> f64 {
    let s: f64 = grid
        .mu()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&mu, (x, y))| w(mu) * (x.re * y.re + x.im * y.im))
        .sum();
    s * grid.mode_weight()
}

/// Coefficients of `f` in the grid's basis (torus zero mode = mean).
pub fn forward_transform(f: &Field) -> SpectralField {
    let coeffs = f.grid.transform().to_spectral(&f.values);
    let mut s = SpectralField::from_raw(f.grid.clone(), coeffs);
    s.enforce_reality();
    s
}

/// Point values of a coefficient array; rejects non-real spectra.
pub fn inverse_transform(s: &SpectralField) -> Result<Field> {
    s.check_symmetry()?;
    Ok(Field::from_raw(
        s.grid.clone(),
        s.grid.transform().to_physical(&s.coeffs),
    ))
}

impl SpectralField {
    /// Removes round-off violations of the reality constraint.
    pub(crate) fn enforce_reality(&mut self) {
        match self.grid.basis() {
            Basis::TorusExponential => {
                for i in 0..self.coeffs.len() {
                    let j = self.grid.negated_index(i);
                    if j < i {
                        continue;
                    }
                    if j == i {
                        self.coeffs[i].im = 0.0;
                    } else {
                        let avg = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
                        self.coeffs[i] = avg;
                        self.coeffs[j] = avg.conj();
                    }
                }
            }
            Basis::DirichletSine => {
                for c in &mut self.coeffs {
                    c.im = 0.0;
                }
            }
        }
    }
}

/// Samples of `u(x + h)` at the collocation points, by phase multiplication.
///
/// Exact for fields without Nyquist content; a Nyquist axis is treated as the
/// cosine it represents.
pub fn eval_shifted(s: &SpectralField, h: &[f64]) -> Result<Field> {
    let grid = &s.grid;
    if !grid.is_torus() {
        return Err(Error::RequiresTorus("eval_shifted"));
    }
    let dim = grid.dim();
    if h.len() < dim {
        return Err(Error::param(format!(
            "shift has {} components, grid has dimension {dim}",
            h.len()
        )));
    }
    let n = grid.n_per_axis();
    let axis_k = grid.axis_k();
    // Per-axis phase factors.
    let phases: Vec<Vec<Complex64>> = (0..dim)
        .map(|a| {
            (0..n)
                .map(|i| {
                    let arg = axis_k[i] * h[a];
                    if i == n / 2 {
                        Complex64::new(arg.cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, arg)
                    }
                })
                .collect()
        })
        .collect();
    let shifted: Vec<Complex64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let m = grid.multi_index(idx);
            let mut p = c;
            for a in 0..dim {
                p *= phases[a][m[a]];
            }
            p
        })
        .collect();
    Ok(Field::from_raw(grid.clone(), grid.transform().to_physical(&shifted)))
}

/// Odd periodic extension of a Dirichlet field to the doubled torus
/// `[0, 2L)^d` sampled at `2(n+1)` points per axis.
pub fn odd_extension(f: &Field) -> Result<Field> {
    let g = &f.grid;
    if g.basis() != Basis::DirichletSine {
        return Err(Error::param("odd extension needs a Dirichlet sine grid"));
    }
    let dim = g.dim();
    let n = g.n_per_axis();
    let nt = 2 * (n + 1);
    let torus = Arc::new(Grid::build(dim, nt, Basis::TorusExponential, 2.0 * g.axis_length()));
    let mut values = vec![0.0; torus.len()];
    for (idx, v) in values.iter_mut().enumerate() {
        let m = torus.multi_index(idx);
        let mut sign = 1.0;
        let mut src = [0usize; 3];
        let mut on_boundary = false;
        for a in 0..dim {
            let j = m[a];
            if j == 0 || j == n + 1 {
                on_boundary = true;
                break;
            }
            if j <= n {
                src[a] = j - 1;
            } else {
                src[a] = nt - j - 1;
                sign = -sign;
            }
        }
        if !on_boundary {
            *v = sign * f.values[g.flat_index(&src)];
        }
    }
    Ok(Field::from_raw(torus, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::make_grid;
    use std::f64::consts::PI;

    fn cos_x1(grid: &Arc<Grid>) -> Field {
        Field::from_fn(grid.clone(), |x| x[0].cos())
    }

    #[test]
    fn constant_field_has_only_mean() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let s = forward_transform(&Field::from_fn(g.clone(), |_| 1.0));
        assert!((s.coeffs()[0].re - 1.0).abs() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn cosine_coefficients_torus_1d() {
        // Direct DFT oracle: (1/8) sum_j cos(x_j) e^{-ik x_j}.
        let g = make_grid(1, 8, Basis::TorusExponential).unwrap();
        let s = forward_transform(&cos_x1(&g));
        for k in -3..=4_i64 {
            let mut oracle = Complex64::new(0.0, 0.0);
            for j in 0..8 {
                let x = 2.0 * PI * j as f64 / 8.0;
                oracle += Complex64::from_polar(x.cos() / 8.0, -(k as f64) * x);
            }
            let expect = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((oracle.re - expect).abs() < 1e-14);
            assert!((s.coeff_at(&[k]) - oracle).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn sine_coefficient_of_sin2x() {
        let g = make_grid(1, 8, Basis::DirichletSine).unwrap();
        let s = forward_transform(&Field::from_fn(g.clone(), |x| (2.0 * x[0]).sin()));
        for k in 1..=8_i64 {
            let expect = if k == 2 { 1.0 } else { 0.0 };
            assert!((s.coeff_at(&[k]).re - expect).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn inverse_of_single_mode_is_cosine() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let mut s = SpectralField::zeros(g.clone());
        s.set_real_mode(&[1, 0, 0], Complex64::new(0.5, 0.0)).unwrap();
        let f = inverse_transform(&s).unwrap();
        let expect = cos_x1(&g);
        for (a, b) in f.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let z = inverse_transform(&SpectralField::zeros(g)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inverse_rejects_asymmetric_spectrum() {
        let g = make_grid(1, 8, Basis::TorusExponential).unwrap();
        let mut s = SpectralField::zeros(g);
        s.set_mode(&[1], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(inverse_transform(&s), Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn shifts() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let s = forward_transform(&cos_x1(&g));
        let same = eval_shifted(&s, &[0.0, 0.0, 0.0]).unwrap();
        let half = eval_shifted(&s, &[PI, 0.0, 0.0]).unwrap();
        let third = eval_shifted(&s, &[PI / 3.0, 0.0, 0.0]).unwrap();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            assert!((same.values()[i] - x.cos()).abs() < 1e-12);
            assert!((half.values()[i] + x.cos()).abs() < 1e-12);
            assert!((third.values()[i] - (x + PI / 3.0).cos()).abs() < 1e-12);
        }
        let sine = make_grid(1, 8, Basis::DirichletSine).unwrap();
        assert!(eval_shifted(&SpectralField::zeros(sine), &[0.1]).is_err());
    }

    #[test]
    fn odd_extension_matches_sine_coefficients() {
        let g = make_grid(2, 6, Basis::DirichletSine).unwrap();
        let f = Field::from_fn(g.clone(), |x| {
            (x[0]).sin() * (2.0 * x[1]).sin() + 0.3 * (3.0 * x[0]).sin() * (x[1]).sin()
        });
        let b = forward_transform(&f);
        let ext = odd_extension(&f).unwrap();
        let t = forward_transform(&ext);
        // Each sine factor sin(k x) = (e^{ikx} - e^{-ikx}) / 2i.
        for idx in 0..t.grid().len() {
            let k = t.grid().wavevector(idx);
            let c = t.coeffs()[idx];
            let (k0, k1) = (k[0].abs(), k[1].abs());
            if k0 == 0 || k1 == 0 || k0 > 6 || k1 > 6 {
                assert!(c.norm() < 1e-13, "k={k:?}");
                continue;
            }
            let sign = (k[0].signum() * k[1].signum()) as f64;
            let expect = b.coeff_at(&[k0, k1]).re * sign * (-0.25);
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-13, "k={k:?}");
        }
    }

    #[test]
    fn resample_preserves_interpolant() {
        let g8 = make_grid(2, 8, Basis::TorusExponential).unwrap();
        let g16 = make_grid(2, 16, Basis::TorusExponential).unwrap();
        let f = Field::from_fn(g8.clone(), |x| (4.0 * x[0]).cos() + (x[0] - 2.0 * x[1]).sin());
        let s = forward_transform(&f);
        let up = s.resample(g16.clone()).unwrap();
        let fine = inverse_transform(&up).unwrap();
        let oracle = Field::from_fn(g16, |x| (4.0 * x[0]).cos() + (x[0] - 2.0 * x[1]).sin());
        for (a, b) in fine.values().iter().zip(oracle.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        let back = up.resample(g8).unwrap();
        for (a, b) in back.coeffs().iter().zip(s.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
