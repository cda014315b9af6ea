//! Forward-mode dual numbers over the complex field, used to obtain exact
//! derivatives of potentials built from expressions.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

/// `tanh` that stays finite for large `|Re z|`.
pub fn tanh_stable(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return -tanh_stable(-z);
    }
    let e = (-2.0 * z).exp();
    (1.0 - e) / (1.0 + e)
}

/// `sech` that stays finite (and decays) for large `|Re z|`.
pub fn sech_stable(z: Complex64) -> Complex64 {
    let z = if z.re < 0.0 { -z } else { z };
    let e = (-z).exp();
    2.0 * e / (1.0 + e * e)
}

impl Dual {
    pub fn constant(v: Complex64) -> Self {
        Self {
            v,
            d: Complex64::new(0.0, 0.0),
        }
    }

    pub fn variable(v: Complex64) -> Self {
        Self {
            v,
            d: Complex64::new(1.0, 0.0),
        }
    }

    fn chain(self, v: Complex64, dv: Complex64) -> Self {
        Self { v, d: dv * self.d }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }

    pub fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }

    pub fn tan(self) -> Self {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }

    pub fn sinh(self) -> Self {
        self.chain(self.v.sinh(), self.v.cosh())
    }

    pub fn cosh(self) -> Self {
        self.chain(self.v.cosh(), self.v.sinh())
    }

    pub fn tanh(self) -> Self {
        let t = tanh_stable(self.v);
        self.chain(t, 1.0 - t * t)
    }

    pub fn sech(self) -> Self {
        let s = sech_stable(self.v);
        let t = tanh_stable(self.v);
        self.chain(s, -s * t)
    }

    pub fn atan(self) -> Self {
        self.chain(self.v.atan(), 1.0 / (1.0 + self.v * self.v))
    }

    pub fn abs_real(self) -> Self {
        // |x| for real arguments, continued analytically from the sign of Re
        if self.v.re < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(Complex64::new(1.0, 0.0)),
            1 => self,
            _ if n < 0 => Self::constant(Complex64::new(1.0, 0.0)) / self.powi(-n),
            _ => {
                let p = self.v.powi(n - 1);
                self.chain(p * self.v, p * n as f64)
            }
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn stable_functions_match_library_in_moderate_range() {
        for &z in &[c(0.3, 0.2), c(-1.7, 0.4), c(2.5, -1.0), c(0.0, 0.0)] {
            assert!((tanh_stable(z) - z.tanh()).norm() < 1e-14);
            assert!((sech_stable(z) - 1.0 / z.cosh()).norm() < 1e-14);
        }
    }

    #[test]
    fn stable_functions_finite_far_out() {
        let z = c(800.0, 0.3);
        assert!((tanh_stable(z) - 1.0).norm() < 1e-15);
        assert!(sech_stable(z).norm() < 1e-300);
        assert!((tanh_stable(-z) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn derivative_of_sech_tanh_product() {
        let z = c(0.4, 0.1);
        let x = Dual::variable(z);
        let f = x.sech() * (Dual::constant(c(1.0, 0.0)) + x.tanh() * Dual::constant(c(0.3, 0.0)));
        let g = |z: Complex64| (1.0 / z.cosh()) * (1.0 + 0.3 * z.tanh());
        let eps = 1e-6;
        let fd = (g(z + eps) - g(z - eps)) / (2.0 * eps);
        assert!((f.d - fd).norm() < 1e-9);
    }

    #[test]
    fn powers_and_quotients() {
        let x = Dual::variable(c(1.5, 0.0));
        let f = x.powi(3) / (x + Dual::constant(c(1.0, 0.0)));
        // d/dx x^3/(x+1) = (2x^3 + 3x^2)/(x+1)^2
        let exact = (2.0 * 1.5f64.powi(3) + 3.0 * 1.5 * 1.5) / (2.5 * 2.5);
        assert!((f.d.re - exact).abs() < 1e-13);
        assert!((x.powi(-2).d.re + 2.0 / 1.5f64.powi(3)).abs() < 1e-13);
    }
}
