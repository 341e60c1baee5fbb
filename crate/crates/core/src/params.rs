//! Soliton parameters and the closed-form amplitude.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::scalar::{lit, Scalar};

/// Which equation a soliton belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Equation<T> {
    /// Cubic-derivative plus quintic term with coefficient `b`.
    Dnls { b: T },
    /// Power nonlinearity `|u|^{2 sigma} u_x`.
    Gdnls { sigma: T },
}

impl<T: Scalar> Equation<T> {
    /// Exponent `sigma` of the derivative nonlinearity (1 for DNLS).
    pub fn sigma(&self) -> T {
        match *self {
            Equation::Dnls { .. } => T::one(),
            Equation::Gdnls { sigma } => sigma,
        }
    }

    /// Quintic coefficient (0 for the power equation).
    pub fn quintic(&self) -> T {
        match *self {
            Equation::Dnls { b } => b,
            Equation::Gdnls { .. } => T::zero(),
        }
    }
}

/// Parameters of one soliton `e^{i theta0} e^{i omega t} phi(x - x0 - c t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de> + num_traits::Zero"))]
pub struct SolitonParams<T> {
    pub equation: Equation<T>,
    pub omega: T,
    pub c: T,
    #[serde(default = "zero")]
    pub theta0: T,
    #[serde(default = "zero")]
    pub x0: T,
}

fn zero<T: num_traits::Zero>() -> T {
    T::zero()
}

/// Outcome of [`SolitonParams::validate`].
pub type Admissibility = Result<(), ParamError>;

impl<T: Scalar> SolitonParams<T> {
    pub fn dnls(b: T, omega: T, c: T) -> Self {
        Self {
            equation: Equation::Dnls { b },
            omega,
            c,
            theta0: T::zero(),
            x0: T::zero(),
        }
    }

    pub fn gdnls(sigma: T, omega: T, c: T) -> Self {
        Self {
            equation: Equation::Gdnls { sigma },
            omega,
            c,
            theta0: T::zero(),
            x0: T::zero(),
        }
    }

    pub fn with_phase(mut self, theta0: T) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn with_center(mut self, x0: T) -> Self {
        self.x0 = x0;
        self
    }

    /// Same equation and shape at another `(omega, c)`.
    pub fn at(mut self, omega: T, c: T) -> Self {
        self.omega = omega;
        self.c = c;
        self
    }

    /// `gamma = 1 + 16 b / 3` (DNLS only).
    pub fn gamma(&self) -> Option<T> {
        match self.equation {
            Equation::Dnls { b } => Some(T::one() + lit::<T>(16.0 / 3.0) * b),
            Equation::Gdnls { .. } => None,
        }
    }

    /// `s_* = sqrt(-gamma / (1 - gamma))`, defined when `gamma <= 0`.
    pub fn s_star(&self) -> Option<T> {
        let g = self.gamma()?;
        (g <= T::zero()).then(|| (-g / (T::one() - g)).sqrt())
    }

    /// `4 omega - c^2`, clamped at zero.
    pub fn h_squared(&self) -> T {
        let v = lit::<T>(4.0) * self.omega - self.c * self.c;
        v.max(T::zero())
    }

    /// Spatial decay rate `h = sqrt(4 omega - c^2)`.
    pub fn h(&self) -> T {
        self.h_squared().sqrt()
    }

    /// True for the algebraic branch `c = 2 sqrt(omega)`.
    pub fn is_endpoint(&self) -> bool {
        matches!(self.equation, Equation::Dnls { .. })
            && self.c > T::zero()
            && self.c >= lit::<T>(2.0) * self.omega.sqrt()
    }

    /// Check the existence region of the soliton.
    pub fn validate(&self) -> Admissibility {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        for (name, v) in [
            ("omega", self.omega),
            ("c", self.c),
            ("theta0", self.theta0),
            ("x0", self.x0),
        ] {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        if self.omega <= T::zero() {
            return Err(ParamError::NonPositiveOmega(f(self.omega)));
        }
        let edge = lit::<T>(2.0) * self.omega.sqrt();
        let out = |lower: T, upper: T, rule| ParamError::SpeedOutOfRange {
            c: f(self.c),
            lower: f(lower),
            upper: f(upper),
            rule,
        };
        match self.equation {
            Equation::Dnls { b } => {
                if !b.is_finite() {
                    return Err(ParamError::NonFinite("b"));
                }
                let g = self.gamma().unwrap_or_else(T::one);
                if g > T::zero() {
                    if !(self.c > -edge && self.c <= edge) {
                        return Err(out(-edge, edge, "-2 sqrt(omega) < c <= 2 sqrt(omega)"));
                    }
                } else {
                    let s = self.s_star().unwrap_or_else(T::zero);
                    let upper = -s * edge;
                    if !(self.c > -edge && self.c < upper) {
                        return Err(out(-edge, upper, "-2 sqrt(omega) < c < -2 s_* sqrt(omega)"));
                    }
                }
            }
            Equation::Gdnls { sigma } => {
                if !sigma.is_finite() {
                    return Err(ParamError::NonFinite("sigma"));
                }
                if sigma <= T::zero() {
                    return Err(ParamError::NonPositiveSigma(f(sigma)));
                }
                if !(self.c * self.c < lit::<T>(4.0) * self.omega) {
                    return Err(out(-edge, edge, "c^2 < 4 omega"));
                }
            }
        }
        Ok(())
    }

    /// `Phi^2(x)` for DNLS and `Phi^{2 sigma}(x)` for the power equation,
    /// centred at the origin.
    pub fn amplitude_squared(&self, x: T) -> Result<T, ParamError> {
        self.validate()?;
        Ok(self.amplitude_squared_unchecked(x))
    }

    /// [`Self::amplitude_squared`] without re-validating.
    pub fn amplitude_squared_unchecked(&self, x: T) -> T {
        let two = lit::<T>(2.0);
        let h2 = self.h_squared();
        let h = h2.sqrt();
        let c = self.c;
        match self.equation {
            Equation::Dnls { .. } => {
                let g = self.gamma().unwrap_or_else(T::one);
                if self.is_endpoint() {
                    return lit::<T>(4.0) * c / ((c * x) * (c * x) + g);
                }
                let r = (c * c + g * h2).sqrt();
                let s = (h * x / two).sinh();
                // r cosh(hx) - c, written to avoid cancellation near x = 0 when c > 0
                let base = if c > T::zero() {
                    g * h2 / (r + c)
                } else {
                    r - c
                };
                let den = r * two * s * s + base;
                two * h2 / den
            }
            Equation::Gdnls { sigma } => {
                let sw = self.omega.sqrt();
                let s = (sigma * h * x / two).sinh();
                let base = if c > T::zero() {
                    h2 / (two * sw * (two * sw + c))
                } else {
                    T::one() - c / (two * sw)
                };
                (sigma + T::one()) * h2 / (two * sw * (two * s * s + base))
            }
        }
    }

    /// Modulus `Phi(x)`.
    pub fn amplitude(&self, x: T) -> T {
        let a = self.amplitude_squared_unchecked(x);
        match self.equation {
            Equation::Dnls { .. } => a.sqrt(),
            Equation::Gdnls { sigma } => a.powf(T::one() / (two_sigma(sigma))),
        }
    }

    /// Coefficient `kappa` of the phase `-kappa * int Phi^{2 sigma}`.
    pub fn phase_coefficient(&self) -> T {
        T::one() / (lit::<T>(2.0) * self.equation.sigma() + lit::<T>(2.0))
    }
}

fn two_sigma<T: Scalar>(sigma: T) -> T {
    lit::<T>(2.0) * sigma
}
