//! Fourier pseudo-spectral toolkit on a [`Grid`].

use std::sync::Arc;

use faer::Mat;
use rustfft::{Fft, FftPlanner};

use crate::grid::{ComplexField, Grid};
use crate::{Real, C64};

/// FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<Real>>,
    inverse: Arc<dyn Fft<Real>>,
    k: Vec<Real>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k: (0..n).map(|j| grid.wavenumber(j)).collect(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn wavenumbers(&self) -> &[Real] {
        &self.k
    }

    fn nyquist(&self) -> usize {
        self.grid.n() / 2
    }

    /// Unnormalized forward transform.
    pub fn fft(&self, v: &[C64]) -> Vec<C64> {
        let mut buf = v.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform, normalized so `ifft(fft(v)) = v`.
    pub fn ifft(&self, v: &[C64]) -> Vec<C64> {
        let mut buf = v.to_vec();
        self.inverse.process(&mut buf);
        let s = 1.0 / self.grid.n() as Real;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    pub fn fft_in_place(&self, v: &mut [C64]) {
        self.forward.process(v);
    }

    pub fn ifft_in_place(&self, v: &mut [C64]) {
        self.inverse.process(v);
        let s = 1.0 / self.grid.n() as Real;
        v.iter_mut().for_each(|z| *z *= s);
    }

    /// Symbol of `d^order/dx^order`; the Nyquist mode is dropped for odd orders.
    pub fn symbol(&self, order: u32) -> Vec<C64> {
        let ny = self.nyquist();
        self.k
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if order % 2 == 1 && j == ny {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, k).powu(order)
                }
            })
            .collect()
    }

    /// Spectral derivative of any order.
    pub fn derivative(&self, v: &[C64], order: u32) -> Vec<C64> {
        if order == 0 {
            return v.to_vec();
        }
        let mut h = self.fft(v);
        for (z, s) in h.iter_mut().zip(self.symbol(order)) {
            *z *= s;
        }
        self.ifft_in_place(&mut h);
        h
    }

    pub fn dx(&self, u: &ComplexField) -> ComplexField {
        ComplexField {
            grid: u.grid,
            values: self.derivative(&u.values, 1),
        }
    }

    pub fn dxx(&self, u: &ComplexField) -> ComplexField {
        ComplexField {
            grid: u.grid,
            values: self.derivative(&u.values, 2),
        }
    }

    /// `int_{-L/2}^{x_j} f dy` at every sample, exact for band-limited `f`:
    /// the mean contributes a linear ramp and the rest a periodic antiderivative.
    pub fn prefix_integral(&self, f: &[C64]) -> Vec<C64> {
        let n = self.grid.n();
        let mut h = self.fft(f);
        let mean = h[0] / n as Real;
        h[0] = C64::new(0.0, 0.0);
        h[self.nyquist()] = C64::new(0.0, 0.0);
        for (z, &k) in h.iter_mut().zip(&self.k).skip(1) {
            if k != 0.0 {
                *z /= C64::new(0.0, k);
            }
        }
        self.ifft_in_place(&mut h);
        let p0 = h[0];
        let dx = self.grid.dx();
        h.iter()
            .enumerate()
            .map(|(j, p)| mean * (j as Real * dx) + p - p0)
            .collect()
    }

    /// Real version of [`Self::prefix_integral`].
    pub fn prefix_integral_real(&self, f: &[Real]) -> Vec<Real> {
        let c: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.prefix_integral(&c).into_iter().map(|z| z.re).collect()
    }

    /// Band-limited translate `v(x - s)`.
    pub fn shift(&self, v: &[C64], s: Real) -> Vec<C64> {
        let ny = self.nyquist();
        let mut h = self.fft(v);
        for (j, (z, &k)) in h.iter_mut().zip(&self.k).enumerate() {
            if j == ny {
                *z *= (k * s).cos();
            } else {
                *z *= C64::from_polar(1.0, -k * s);
            }
        }
        self.ifft_in_place(&mut h);
        h
    }

    /// Zero every mode with `|k| > fraction * k_max`.
    pub fn dealias(&self, spectrum: &mut [C64], fraction: Real) {
        let cut = fraction * self.grid.k_max();
        for (z, &k) in spectrum.iter_mut().zip(&self.k) {
            if k.abs() > cut {
                *z = C64::new(0.0, 0.0);
            }
        }
    }

    /// `H^s` norm via Parseval, weight `(1 + k^2)^s`.
    pub fn sobolev_norm(&self, v: &[C64], s: u32) -> Real {
        let h = self.fft(v);
        let n = self.grid.n() as Real;
        let sum: Real = h
            .iter()
            .zip(&self.k)
            .map(|(z, &k)| (1.0 + k * k).powi(s as i32) * z.norm_sqr())
            .sum();
        (sum * self.grid.dx() / n).sqrt()
    }

    /// Trigonometric interpolant of `u` evaluated on `target`; points outside
    /// the source period are set to zero, so `u` should be localized.
    pub fn resample(&self, u: &[C64], target: Grid) -> ComplexField {
        let n = self.grid.n();
        let ny = self.nyquist();
        let h = self.fft(u);
        let x0 = self.grid.x(0);
        let half = 0.5 * self.grid.length();
        let values = target
            .xs()
            .map(|x| {
                if x.abs() >= half {
                    return C64::new(0.0, 0.0);
                }
                let s = x - x0;
                h.iter()
                    .zip(&self.k)
                    .enumerate()
                    .map(|(j, (z, &k))| {
                        if j == ny {
                            z * (k * s).cos()
                        } else {
                            z * C64::from_polar(1.0, k * s)
                        }
                    })
                    .sum::<C64>()
                    / n as Real
            })
            .collect();
        ComplexField { grid: target, values }
    }

    /// Dense skew-symmetric first-derivative matrix (Nyquist dropped).
    pub fn d1_matrix(&self) -> Mat<Real> {
        let n = self.grid.n();
        let scale = 2.0 * std::f64::consts::PI / self.grid.length();
        let col: Vec<Real> = (0..n)
            .map(|m| {
                if m == 0 {
                    0.0
                } else {
                    let t = std::f64::consts::PI * m as Real / n as Real;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    0.5 * scale * sign / t.tan()
                }
            })
            .collect();
        Mat::from_fn(n, n, |i, j| col[(i + n - j) % n])
    }

    /// Dense symmetric second-derivative matrix (Nyquist kept).
    pub fn d2_matrix(&self) -> Mat<Real> {
        let n = self.grid.n();
        let scale = (2.0 * std::f64::consts::PI / self.grid.length()).powi(2);
        let h = 2.0 * std::f64::consts::PI / n as Real;
        let col: Vec<Real> = (0..n)
            .map(|m| {
                if m == 0 {
                    scale * (-std::f64::consts::PI.powi(2) / (3.0 * h * h) - 1.0 / 6.0)
                } else {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    let s = (m as Real * h / 2.0).sin();
                    -scale * sign / (2.0 * s * s)
                }
            })
            .collect();
        Mat::from_fn(n, n, |i, j| col[(i + n - j) % n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(g: Grid) -> Vec<C64> {
        g.xs().map(|x| C64::new((-x * x).exp(), 0.5 * x * (-x * x).exp())).collect()
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = Grid::new(30.0, 256).unwrap();
        let sp = Spectral::new(g);
        let d = sp.derivative(&gauss(g), 1);
        for (x, v) in g.xs().zip(&d) {
            let e = (-x * x).exp();
            let exact = C64::new(-2.0 * x * e, 0.5 * e - x * x * e);
            assert!((v - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn matrices_match_fft() {
        let g = Grid::new(20.0, 64).unwrap();
        let sp = Spectral::new(g);
        let v: Vec<C64> = g.xs().map(|x| C64::new((x * 0.7).sin() + (-x * x).exp(), 0.0)).collect();
        for (order, m) in [(1, sp.d1_matrix()), (2, sp.d2_matrix())] {
            let f = sp.derivative(&v, order);
            for i in 0..64 {
                let s: Real = (0..64).map(|j| m[(i, j)] * v[j].re).sum();
                assert!((s - f[i].re).abs() < 1e-10, "order {order} row {i}");
            }
        }
    }

    #[test]
    fn prefix_of_gaussian_is_erf_like() {
        let g = Grid::new(40.0, 512).unwrap();
        let sp = Spectral::new(g);
        let f: Vec<Real> = g.xs().map(|x| (-x * x).exp()).collect();
        let p = sp.prefix_integral_real(&f);
        let total = std::f64::consts::PI.sqrt();
        assert!(p[0].abs() < 1e-14);
        assert!((p[256] - total / 2.0).abs() < 1e-12);
        assert!((p[511] - total).abs() < 1e-12);
    }

    #[test]
    fn shift_translates() {
        let g = Grid::new(30.0, 256).unwrap();
        let sp = Spectral::new(g);
        let s = sp.shift(&gauss(g), 1.3);
        let g2: Vec<C64> = g
            .xs()
            .map(|x| {
                let y = x - 1.3;
                C64::new((-y * y).exp(), 0.5 * y * (-y * y).exp())
            })
            .collect();
        let err = s.iter().zip(&g2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
