//! Forward-mode automatic differentiation.
//!
//! [`Dual`] carries a value and a tangent vector with one slot per active
//! differentiation direction. Constants carry an empty tangent, which every
//! operation treats as the zero vector, so mixing seeded variables with
//! literals never needs to know the direction count up front.
//!
//! Model code is written once against the [`Real`] trait and evaluated either
//! with `f64` (plain values) or with [`Dual`] (value plus gradient).

use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use smallvec::SmallVec;

use super::special;

/// Inline tangent storage. Local likelihood terms touch at most a couple of
/// dozen coordinates, so most tangents never hit the heap.
pub type Tangent = SmallVec<[f64; 16]>;

/// Scalar field the model code is generic over.
pub trait Real:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign<f64>
{
    fn from_f64(v: f64) -> Self;
    /// Primal value.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn powf(self, p: f64) -> Self;
    /// `ln(1 + x)`.
    fn ln_1p(self) -> Self;
    fn ln_gamma(self) -> Self;
    /// `sqrt(x^2 + eps^2)`, a differentiable stand-in for `|x|`.
    fn abs_smooth(self, eps: f64) -> Self {
        (self.clone() * self + eps * eps).sqrt()
    }
    fn square(self) -> Self {
        self.clone() * self
    }
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
    fn powf(self, p: f64) -> Self {
        libm::pow(self, p)
    }
    fn ln_1p(self) -> Self {
        libm::log1p(self)
    }
    fn ln_gamma(self) -> Self {
        special::ln_gamma(self)
    }
}

/// Value plus tangent.
#[derive(Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub tangent: Tangent,
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({}, {:?})", self.value, self.tangent.as_slice())
    }
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Dual {
            value,
            tangent: Tangent::new(),
        }
    }

    /// Independent variable `index` out of `n` directions.
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut tangent = Tangent::from_elem(0.0, n);
        tangent[index] = 1.0;
        Dual { value, tangent }
    }

    /// Seeds one variable per entry of `x`.
    pub fn seed(x: &[f64]) -> alloc::vec::Vec<Dual> {
        let n = x.len();
        x.iter()
            .enumerate()
            .map(|(i, &v)| Dual::variable(v, i, n))
            .collect()
    }

    /// Derivative along direction `i` (zero if the tangent is shorter).
    pub fn d(&self, i: usize) -> f64 {
        self.tangent.get(i).copied().unwrap_or(0.0)
    }

    /// Applies a unary map with value `v` and derivative `dv`.
    fn chain(mut self, v: f64, dv: f64) -> Self {
        self.value = v;
        for t in self.tangent.iter_mut() {
            *t *= dv;
        }
        self
    }

    /// `self.tangent += k * other.tangent`, growing as needed.
    fn axpy_tangent(&mut self, k: f64, other: &Tangent) {
        if self.tangent.len() < other.len() {
            self.tangent.resize(other.len(), 0.0);
        }
        for (t, o) in self.tangent.iter_mut().zip(other.iter()) {
            *t += k * o;
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(mut self, rhs: Dual) -> Dual {
        self += rhs;
        self
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, rhs: Dual) {
        self.value += rhs.value;
        self.axpy_tangent(1.0, &rhs.tangent);
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(mut self, rhs: Dual) -> Dual {
        self -= rhs;
        self
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, rhs: Dual) {
        self.value -= rhs.value;
        self.axpy_tangent(-1.0, &rhs.tangent);
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(mut self, rhs: Dual) -> Dual {
        let (a, b) = (self.value, rhs.value);
        for t in self.tangent.iter_mut() {
            *t *= b;
        }
        self.axpy_tangent(a, &rhs.tangent);
        self.value = a * b;
        self
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(mut self, rhs: Dual) -> Dual {
        let (a, b) = (self.value, rhs.value);
        let q = a / b;
        for t in self.tangent.iter_mut() {
            *t /= b;
        }
        self.axpy_tangent(-q / b, &rhs.tangent);
        self.value = q;
        self
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        let v = -self.value;
        self.chain(v, -1.0)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(mut self, rhs: f64) -> Dual {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(mut self, rhs: f64) -> Dual {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(mut self, rhs: f64) -> Dual {
        self *= rhs;
        self
    }
}

impl MulAssign<f64> for Dual {
    fn mul_assign(&mut self, rhs: f64) {
        self.value *= rhs;
        for t in self.tangent.iter_mut() {
            *t *= rhs;
        }
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, rhs: f64) -> Dual {
        self * (1.0 / rhs)
    }
}

impl Real for Dual {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.value);
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        let x = self.value;
        self.chain(libm::log(x), 1.0 / x)
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.value);
        self.chain(s, 0.5 / s)
    }
    fn sin(self) -> Self {
        let x = self.value;
        self.chain(libm::sin(x), libm::cos(x))
    }
    fn cos(self) -> Self {
        let x = self.value;
        self.chain(libm::cos(x), -libm::sin(x))
    }
    fn tanh(self) -> Self {
        let t = libm::tanh(self.value);
        self.chain(t, 1.0 - t * t)
    }
    fn powf(self, p: f64) -> Self {
        let x = self.value;
        self.chain(libm::pow(x, p), p * libm::pow(x, p - 1.0))
    }
    fn ln_1p(self) -> Self {
        let x = self.value;
        self.chain(libm::log1p(x), 1.0 / (1.0 + x))
    }
    fn ln_gamma(self) -> Self {
        let x = self.value;
        self.chain(special::ln_gamma(x), special::digamma(x))
    }
}
