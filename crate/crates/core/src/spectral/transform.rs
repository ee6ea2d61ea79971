use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::Basis;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Tensor-product transform between `n` coefficients and `m >= n` collocation
/// values per axis.
///
/// With `m > n` the synthesis is a zero-padded evaluation on a finer grid and
/// the analysis is the matching truncation; with `m == n` the pair is the
/// grid's own collocation transform. Torus axes use the normalization
/// `c_k = (1/m) sum_j f_j e^{-i k x_j}`. Sine axes use the DST-I realized as
/// an FFT of the odd extension to the doubled period.
pub struct Transform {
    dim: usize,
    basis: Basis,
    n: usize,
    m: usize,
    fft_len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform")
            .field("dim", &self.dim)
            .field("basis", &self.basis)
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

impl Transform {
    pub fn new(dim: usize, n: usize, basis: Basis, m: usize) -> Self {
        assert!(m >= n, "physical resolution must not be below the spectral one");
        let fft_len = match basis {
            Basis::TorusExponential => m,
            Basis::DirichletSine => 2 * (m + 1),
        };
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(fft_len);
        let inv = planner.plan_fft_inverse(fft_len);
        Transform {
            dim,
            basis,
            n,
            m,
            fft_len,
            fwd,
            inv,
        }
    }

    /// Padded transform for a grid of `n` modes per axis evaluated on
    /// `factor` times as many points.
    pub fn padded(dim: usize, n: usize, basis: Basis, factor: usize) -> Self {
        let m = match basis {
            Basis::TorusExponential => factor * n,
            Basis::DirichletSine => factor * (n + 1) - 1,
        };
        Transform::new(dim, n, basis, m)
    }

    pub fn spectral_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn physical_len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    /// Quadrature weight of one physical point for a box of side `axis_length`.
    pub fn cell_volume(&self, axis_length: f64) -> f64 {
        let h = match self.basis {
            Basis::TorusExponential => axis_length / self.m as f64,
            Basis::DirichletSine => axis_length / (self.m + 1) as f64,
        };
        h.powi(self.dim as i32)
    }

    /// Synthesis: coefficient array to complex point values.
    pub fn to_physical_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.spectral_len());
        let mut data = coeffs.to_vec();
        let mut shape = vec![self.n; self.dim];
        let mut buf = vec![ZERO; self.fft_len];
        let mut scratch = vec![ZERO; self.inv.get_inplace_scratch_len()];
        for axis in (0..self.dim).rev() {
            data = map_axis(&data, &shape, axis, self.m, |line, out| {
                self.expand_line(line, out, &mut buf, &mut scratch)
            });
            shape[axis] = self.m;
        }
        data
    }

    /// Synthesis of a real field (imaginary round-off discarded).
    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<f64> {
        self.to_physical_complex(coeffs).into_iter().map(|c| c.re).collect()
    }

    /// Analysis: point values to the `n^dim` retained coefficients.
    pub fn to_spectral_complex(&self, values: Vec<Complex64>) -> Vec<Complex64> {
        assert_eq!(values.len(), self.physical_len());
        let mut data = values;
        let mut shape = vec![self.m; self.dim];
        let mut buf = vec![ZERO; self.fft_len];
        let mut scratch = vec![ZERO; self.fwd.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            data = map_axis(&data, &shape, axis, self.n, |line, out| {
                self.contract_line(line, out, &mut buf, &mut scratch)
            });
            shape[axis] = self.n;
        }
        data
    }

    pub fn to_spectral(&self, values: &[f64]) -> Vec<Complex64> {
        self.to_spectral_complex(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    fn expand_line(&self, line: &[Complex64], out: &mut [Complex64], buf: &mut [Complex64], scratch: &mut [Complex64]) {
        buf.fill(ZERO);
        let (n, m) = (self.n, self.m);
        match self.basis {
            Basis::TorusExponential => {
                if m == n {
                    buf.copy_from_slice(line);
                } else {
                    for (i, &c) in line.iter().enumerate() {
                        if i < n / 2 {
                            buf[i] = c;
                        } else if i == n / 2 {
                            // Nyquist entry stands for cos(n x / 2); split it.
                            buf[n / 2] += 0.5 * c;
                            buf[m - n / 2] += 0.5 * c;
                        } else {
                            buf[m - (n - i)] = c;
                        }
                    }
                }
                self.inv.process_with_scratch(buf, scratch);
                out.copy_from_slice(&buf[..m]);
            }
            Basis::DirichletSine => {
                let p = self.fft_len;
                for (i, &c) in line.iter().enumerate() {
                    let k = i + 1;
                    buf[k] = -0.5 * I * c;
                    buf[p - k] = 0.5 * I * c;
                }
                self.inv.process_with_scratch(buf, scratch);
                out.copy_from_slice(&buf[1..=m]);
            }
        }
    }

    fn contract_line(
        &self,
        line: &[Complex64],
        out: &mut [Complex64],
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        let (n, m) = (self.n, self.m);
        match self.basis {
            Basis::TorusExponential => {
                buf.copy_from_slice(line);
                self.fwd.process_with_scratch(buf, scratch);
                let scale = 1.0 / m as f64;
                if m == n {
                    for (o, &b) in out.iter_mut().zip(buf.iter()) {
                        *o = b * scale;
                    }
                } else {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = if i < n / 2 {
                            buf[i]
                        } else if i == n / 2 {
                            buf[n / 2] + buf[m - n / 2]
                        } else {
                            buf[m - (n - i)]
                        } * scale;
                    }
                }
            }
            Basis::DirichletSine => {
                let p = self.fft_len;
                buf[0] = ZERO;
                buf[m + 1] = ZERO;
                for (j, &f) in line.iter().enumerate() {
                    buf[j + 1] = f;
                    buf[p - j - 1] = -f;
                }
                self.fwd.process_with_scratch(buf, scratch);
                let scale = 1.0 / (m + 1) as f64;
                for (i, o) in out.iter_mut().enumerate() {
                    *o = I * buf[i + 1] * scale;
                }
            }
        }
    }
}

/// Applies `f` to every line along `axis`, producing an array whose extent
/// along that axis is `new_len`.
fn map_axis<F>(data: &[Complex64], shape: &[usize], axis: usize, new_len: usize, mut f: F) -> Vec<Complex64>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let len = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![ZERO; outer * new_len * inner];
    if inner == 1 {
        for o in 0..outer {
            f(&data[o * len..(o + 1) * len], &mut out[o * new_len..(o + 1) * new_len]);
        }
        return out;
    }
    let mut line = vec![ZERO; len];
    let mut res = vec![ZERO; new_len];
    for o in 0..outer {
        let src = &data[o * len * inner..(o + 1) * len * inner];
        let dst = &mut out[o * new_len * inner..(o + 1) * new_len * inner];
        for s in 0..inner {
            for (j, l) in line.iter_mut().enumerate() {
                *l = src[j * inner + s];
            }
            f(&line, &mut res);
            for (j, &r) in res.iter().enumerate() {
                dst[j * inner + s] = r;
            }
        }
    }
    out
}
