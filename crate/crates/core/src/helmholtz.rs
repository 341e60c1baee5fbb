//! Fundamental solutions of `-u'' - mu u = f` on the line and their use as
//! explicit resolvents of the free part of the linearized operator.

use faer::Mat;
use num_complex::Complex;

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid, PairField};
use crate::linearized::BlockOperator;
use crate::scalar::{lit, Scalar};
use crate::spectral::Spectral;
use crate::{Kernel, Real, C64};

/// Kernel parameter `mu` off `[0, inf)` with its branch data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    pub mu: Complex<T>,
    /// `|mu|^{1/2} e^{i arg/2}` with `arg in (0, 2 pi]`; `Im > 0`.
    pub sqrt_mu: Complex<T>,
    /// Comparison rate: `sqrt(tau) = |mu|^{1/2} sin(arg/2)`.
    pub tau: T,
    /// `|g_mu| <= c_bound * g_{-tau}` pointwise.
    pub c_bound: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(mu: Complex<T>) -> Result<Self> {
        if !(mu.re.is_finite() && mu.im.is_finite())
            || (mu.im == T::zero() && mu.re >= T::zero())
        {
            return Err(LabError::BranchCut(C64::new(
                mu.re.to_f64().unwrap_or(f64::NAN),
                mu.im.to_f64().unwrap_or(f64::NAN),
            )));
        }
        let mut arg = mu.im.atan2(mu.re);
        if arg <= T::zero() {
            arg = arg + lit::<T>(2.0) * T::PI();
        }
        let r = mu.norm().sqrt();
        let half = arg / lit::<T>(2.0);
        let sqrt_mu = Complex::new(r * half.cos(), r * half.sin());
        let s = half.sin();
        Ok(Self {
            mu,
            sqrt_mu,
            tau: r * r * s * s,
            c_bound: s,
        })
    }

    /// `g_mu(x) = i / (2 sqrt(mu)) e^{i sqrt(mu) |x|}`.
    pub fn g(&self, x: T) -> Complex<T> {
        let i = Complex::new(T::zero(), T::one());
        let two = lit::<T>(2.0);
        i / (self.sqrt_mu * two) * (i * self.sqrt_mu * x.abs()).exp()
    }

    /// Comparison kernel `g_{-tau}(x) = e^{-sqrt(tau)|x|} / (2 sqrt(tau))`.
    pub fn comparison(&self, x: T) -> T {
        let st = self.tau.sqrt();
        (-st * x.abs()).exp() / (lit::<T>(2.0) * st)
    }
}

/// Sum of images `sum_m g_mu(x + m L)` for `|x| <= L/2`.
pub fn periodized(spec: &Kernel, length: Real, x: Real) -> C64 {
    let i = C64::new(0.0, 1.0);
    let q = (i * spec.sqrt_mu * length).exp();
    let e = |s: Real| (i * spec.sqrt_mu * s).exp();
    let images = (e(x) + e(-x)) * q / (1.0 - q);
    i / (2.0 * spec.sqrt_mu) * (e(x.abs()) + images)
}

/// The periodized kernel sampled on a grid (for export and inspection).
pub fn periodized_kernel(spec: &Kernel, grid: Grid) -> ComplexField {
    ComplexField::from_fn(grid, |x| periodized(spec, grid.length(), x))
}

/// `g_mu * f` on the periodic grid. The Fourier coefficients of the
/// periodized kernel are `1/(k^2 - mu)`, so the product is taken there.
pub fn convolve_kernel(spec: &Kernel, f: &ComplexField) -> ComplexField {
    let grid = f.grid;
    let peak = f.norm_inf();
    let quarter = grid.length() / 4.0;
    let tail = grid
        .xs()
        .zip(&f.values)
        .filter(|(x, _)| x.abs() >= quarter)
        .map(|(_, v)| v.norm())
        .fold(0.0, Real::max);
    if peak > 0.0 && tail > 1e-8 * peak {
        log::warn!("kernel source not localized: tail {tail:.2e} at |x| = L/4");
    }
    let sp = Spectral::new(grid);
    let mut h = sp.fft(&f.values);
    for (z, &k) in h.iter_mut().zip(sp.wavenumbers()) {
        *z /= k * k - spec.mu;
    }
    sp.ifft_in_place(&mut h);
    ComplexField { grid, values: h }
}

/// Sup norm of `(-u'' - mu u) - f`.
pub fn helmholtz_residual(spec: &Kernel, u: &ComplexField, f: &ComplexField) -> Real {
    let sp = Spectral::new(u.grid);
    let uxx = sp.derivative(&u.values, 2);
    uxx.iter()
        .zip(&u.values)
        .zip(&f.values)
        .map(|((d, v), s)| (-d - spec.mu * v - s).norm())
        .fold(0.0, Real::max)
}

/// Complex `2N x 2N` operator.
#[derive(Debug, Clone)]
pub struct ComplexOperator {
    pub grid: Grid,
    pub matrix: Mat<C64>,
}

/// `L' = i P L P^{-1}` with `P = [[1, i], [1, -i]]` applied pointwise.
pub fn conjugate_prime(op: &BlockOperator) -> ComplexOperator {
    let n = op.grid.n();
    let m = &op.matrix;
    let i = C64::new(0.0, 1.0);
    let matrix = Mat::from_fn(2 * n, 2 * n, |r, c| {
        let (ri, ci) = (r % n, c % n);
        let a = m[(ri, ci)];
        let b = m[(ri, n + ci)];
        let cc = m[(n + ri, ci)];
        let d = m[(n + ri, n + ci)];
        // rows of P L: top A + iC, B + iD; bottom A - iC, B - iD
        let s = if r < n { 1.0 } else { -1.0 };
        let left = C64::new(a, s * cc);
        let right = C64::new(b, s * d);
        // columns of P^{-1} = 1/2 [[1, 1], [-i, i]]
        let v = if c < n { left - i * right } else { left + i * right };
        i * 0.5 * v
    });
    ComplexOperator { grid: op.grid, matrix }
}

/// `P v = (v+ + i v-, v+ - i v-)`.
pub fn apply_p(v: &PairField) -> PairField {
    let i = C64::new(0.0, 1.0);
    PairField {
        grid: v.grid,
        plus: v.plus.iter().zip(&v.minus).map(|(a, b)| a + i * b).collect(),
        minus: v.plus.iter().zip(&v.minus).map(|(a, b)| a - i * b).collect(),
    }
}

/// `P^{-1} w = ((w1 + w2)/2, i(w2 - w1)/2)`.
pub fn apply_p_inv(w: &PairField) -> PairField {
    let i = C64::new(0.0, 1.0);
    PairField {
        grid: w.grid,
        plus: w.plus.iter().zip(&w.minus).map(|(a, b)| 0.5 * (a + b)).collect(),
        minus: w.plus.iter().zip(&w.minus).map(|(a, b)| 0.5 * i * (b - a)).collect(),
    }
}

/// Solve `(L0 - lambda) X = A` for the free conjugated operator
/// `L0 = i(-d^2/dx^2 + h^2/4)` through the diagonal part of `L0' - lambda'`:
/// `x1 = g_{mu1} * (-b1)`, `x2 = g_{mu2} * b2` with `b = i P A`,
/// `mu1 = -h^2/4 - lambda'`, `mu2 = lambda' - h^2/4`, `lambda' = i lambda`.
pub fn free_resolvent_via_kernels(h: Real, lambda: C64, a: &PairField) -> Result<PairField> {
    let i = C64::new(0.0, 1.0);
    let lp = i * lambda;
    let e = 0.25 * h * h;
    let k1 = Kernel::new(-e - lp)?;
    let k2 = Kernel::new(lp - e)?;
    let b = apply_p(a).scale(i);
    let grid = a.grid;
    let neg_b1 = ComplexField {
        grid,
        values: b.plus.iter().map(|v| -v).collect(),
    };
    let b2 = ComplexField {
        grid,
        values: b.minus.clone(),
    };
    let x1 = convolve_kernel(&k1, &neg_b1);
    let x2 = convolve_kernel(&k2, &b2);
    Ok(apply_p_inv(&PairField {
        grid,
        plus: x1.values,
        minus: x2.values,
    }))
}
