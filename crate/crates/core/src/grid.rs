//! Periodic grid and sampled fields.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::{Real, C64};

/// Periodic domain `[-L/2, L/2)` sampled at `n` points, with a time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: Real,
    n: usize,
    dt: Real,
}

/// `e^{-(h/2)(L/4)} < 1e-10` requires `L * h >= 184.2`.
pub const TRUNCATION_FACTOR: Real = 8.0 * 23.025850929940457;

impl Grid {
    /// New grid with the default time step `0.2 dx^2`.
    pub fn new(length: Real, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(LabError::Grid(format!("length must be positive, got {length}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(LabError::Grid(format!("point count must be a power of two >= 16, got {n}")));
        }
        let dx = length / n as Real;
        Ok(Self {
            length,
            n,
            dt: 0.2 * dx * dx,
        })
    }

    /// Smallest admissible domain for decay rate `h`, with `n` points.
    pub fn for_decay(h: Real, n: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(LabError::Truncation(format!("decay rate must be positive, got {h}")));
        }
        Self::new(TRUNCATION_FACTOR / h, n)
    }

    pub fn with_dt(mut self, dt: Real) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(LabError::Grid(format!("time step must be finite and nonzero, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn length(&self) -> Real {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> Real {
        self.length / self.n as Real
    }

    pub fn dt(&self) -> Real {
        self.dt
    }

    /// Sample abscissa `x_j = -L/2 + j dx`.
    pub fn x(&self, j: usize) -> Real {
        -0.5 * self.length + j as Real * self.dx()
    }

    pub fn xs(&self) -> impl ExactSizeIterator<Item = Real> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Angular wavenumber of FFT bin `j` (Nyquist bin negative).
    pub fn wavenumber(&self, j: usize) -> Real {
        let n = self.n as isize;
        let m = if (j as isize) < n / 2 { j as isize } else { j as isize - n };
        2.0 * std::f64::consts::PI * m as Real / self.length
    }

    pub fn k_max(&self) -> Real {
        std::f64::consts::PI / self.dx()
    }

    /// Map `x` into `[-L/2, L/2)`.
    pub fn wrap(&self, x: Real) -> Real {
        let l = self.length;
        (x + 0.5 * l).rem_euclid(l) - 0.5 * l
    }

    /// Whether a soliton with decay rate `h` fits according to the truncation rule.
    pub fn check_decay(&self, h: Real) -> Result<()> {
        let tail = (-(h / 2.0) * (self.length / 4.0)).exp();
        if tail <= 1e-10 * (1.0 + 1e-9) {
            Ok(())
        } else {
            Err(LabError::Truncation(format!(
                "domain length {} too short for decay rate {h}: tail {tail:.2e} at L/4",
                self.length
            )))
        }
    }

    /// The same domain with twice the points.
    pub fn refined(&self) -> Self {
        let mut g = *self;
        g.n *= 2;
        let dx = g.dx();
        g.dt = 0.2 * dx * dx;
        g
    }
}

/// Complex samples of one function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(LabError::Invalid(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LabError::Invalid("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Real) -> C64) -> Self {
        Self {
            grid,
            values: grid.xs().map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }

    /// Discrete `L^2` norm.
    pub fn norm_l2(&self) -> Real {
        l2(&self.values, self.grid.dx())
    }

    pub fn norm_inf(&self) -> Real {
        self.values.iter().map(|v| v.norm()).fold(0.0, Real::max)
    }

    /// `int |u|^2 dx` restricted to samples where `keep(x)` holds.
    pub fn mass_where(&self, keep: impl Fn(Real) -> bool) -> Real {
        self.grid
            .xs()
            .zip(&self.values)
            .filter(|(x, _)| keep(*x))
            .map(|(_, v)| v.norm_sqr())
            .sum::<Real>()
            * self.grid.dx()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ComplexField, f: impl Fn(C64, C64) -> C64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &ComplexField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `a*self + b*other`.
    pub fn axpby(&self, a: Real, other: &ComplexField, b: Real) -> Self {
        self.zip_map(other, |u, v| u * a + v * b)
    }

    /// Real pair `(Re, Im)` stacked as a vector of length `2N`.
    pub fn to_stacked(&self) -> Vec<Real> {
        self.values
            .iter()
            .map(|v| v.re)
            .chain(self.values.iter().map(|v| v.im))
            .collect()
    }

    pub fn from_stacked(grid: Grid, s: &[Real]) -> Self {
        let n = grid.n();
        Self {
            grid,
            values: (0..n).map(|j| C64::new(s[j], s[n + j])).collect(),
        }
    }

    /// Inner product `int u conj(v) dx`.
    pub fn inner(&self, other: &ComplexField) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<C64>()
            * self.grid.dx()
    }
}

/// Two complex components on a grid: `(v+, v-)` of a linearized
/// perturbation, complexified.
#[derive(Debug, Clone, PartialEq)]
pub struct PairField {
    pub grid: Grid,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

impl PairField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.n()];
        Self {
            grid,
            plus: z.clone(),
            minus: z,
        }
    }

    /// Stacked `[plus; minus]`.
    pub fn from_stacked(grid: Grid, s: &[C64]) -> Self {
        let n = grid.n();
        Self {
            grid,
            plus: s[..n].to_vec(),
            minus: s[n..2 * n].to_vec(),
        }
    }

    pub fn to_stacked(&self) -> Vec<C64> {
        self.plus.iter().chain(&self.minus).copied().collect()
    }

    /// Real pair view of a complex field, `v = v+ + i v-`.
    pub fn from_field(u: &ComplexField) -> Self {
        Self {
            grid: u.grid,
            plus: u.values.iter().map(|v| C64::new(v.re, 0.0)).collect(),
            minus: u.values.iter().map(|v| C64::new(v.im, 0.0)).collect(),
        }
    }

    /// Real part of each component, as the field `Re v+ + i Re v-`.
    pub fn real_part(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self
                .plus
                .iter()
                .zip(&self.minus)
                .map(|(p, m)| C64::new(p.re, m.re))
                .collect(),
        }
    }

    /// Imaginary part of each component, as the field `Im v+ + i Im v-`.
    pub fn imag_part(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self
                .plus
                .iter()
                .zip(&self.minus)
                .map(|(p, m)| C64::new(p.im, m.im))
                .collect(),
        }
    }

    pub fn norm_l2(&self) -> Real {
        (l2(&self.plus, self.grid.dx()).powi(2) + l2(&self.minus, self.grid.dx()).powi(2)).sqrt()
    }

    /// Pointwise `|v+| + |v-|`.
    pub fn envelope(&self) -> Vec<Real> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| p.norm() + m.norm())
            .collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            grid: self.grid,
            plus: self.plus.iter().map(|v| v * s).collect(),
            minus: self.minus.iter().map(|v| v * s).collect(),
        }
    }
}

pub(crate) fn l2(v: &[C64], dx: Real) -> Real {
    (v.iter().map(|z| z.norm_sqr()).sum::<Real>() * dx).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(10.0, 100).is_err());
        assert!(Grid::new(10.0, 8).is_err());
        assert!(Grid::new(-1.0, 64).is_err());
        assert!(Grid::new(10.0, 64).is_ok());
    }

    #[test]
    fn wavenumbers_and_wrap() {
        let g = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        assert_eq!(g.wavenumber(1), 1.0);
        assert_eq!(g.wavenumber(8), -8.0);
        assert_eq!(g.wavenumber(15), -1.0);
        assert!((g.wrap(4.0) - (4.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-14);
    }

    #[test]
    fn truncation_rule() {
        assert!(Grid::for_decay(1.0, 64).unwrap().check_decay(1.0).is_ok());
        assert!(Grid::new(80.0, 64).unwrap().check_decay(1.0).is_err());
    }

    #[test]
    fn stacked_round_trip() {
        let g = Grid::new(1.0, 16).unwrap();
        let u = ComplexField::from_fn(g, |x| C64::new(x, 2.0 * x));
        assert_eq!(ComplexField::from_stacked(g, &u.to_stacked()), u);
        let p = PairField::from_field(&u);
        assert_eq!(p.real_part(), u);
    }
}
