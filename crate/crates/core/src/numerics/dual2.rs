//! Second-order forward-mode scalars.
//!
//! A [`Dual2`] carries a value together with its gradient and Hessian with
//! respect to a fixed set of active variables. Arithmetic propagates all three
//! slots with the product and chain rules, so evaluating an expression on
//! seeded inputs yields exact (to rounding) first and second derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{Matrix, Vector};

/// Value, gradient and Hessian of a scalar function of `dim` variables.
///
/// The Hessian is stored row-major and is symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual2 {
    pub value: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl Dual2 {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            first: vec![0.0; dim],
            second: vec![0.0; dim * dim],
        }
    }

    /// The `index`-th active variable, seeded with a unit first derivative.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut d = Self::constant(value, dim);
        d.first[index] = 1.0;
        d
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn gradient(&self) -> Vector {
        Vector::from_column_slice(&self.first)
    }

    pub fn hessian(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_row_slice(n, n, &self.second)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.first.iter().all(|x| x.is_finite())
            && self.second.iter().all(|x| x.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        let first = self.first.iter().map(|g| f1 * g).collect();
        let mut second = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                second.push(f1 * self.second[i * n + j] + f2 * self.first[i] * self.first[j]);
            }
        }
        Self {
            value: f0,
            first,
            second,
        }
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// [`Dual2::recip`].
    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::constant(1.0, self.dim());
        }
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => &a * &base,
                });
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc.expect("nonzero exponent")
    }

    /// `self^exponent` through `exp(exponent * ln self)`; requires a positive
    /// base.
    pub fn powf(&self, exponent: &Self) -> Self {
        (exponent * &self.ln()).exp()
    }
}

impl Add for &Dual2 {
    type Output = Dual2;
    fn add(self, rhs: &Dual2) -> Dual2 {
        Dual2 {
            value: self.value + rhs.value,
            first: zip(&self.first, &rhs.first, |a, b| a + b),
            second: zip(&self.second, &rhs.second, |a, b| a + b),
        }
    }
}

impl Sub for &Dual2 {
    type Output = Dual2;
    fn sub(self, rhs: &Dual2) -> Dual2 {
        Dual2 {
            value: self.value - rhs.value,
            first: zip(&self.first, &rhs.first, |a, b| a - b),
            second: zip(&self.second, &rhs.second, |a, b| a - b),
        }
    }
}

impl Mul for &Dual2 {
    type Output = Dual2;
    fn mul(self, rhs: &Dual2) -> Dual2 {
        let n = self.dim();
        let (a, b) = (self.value, rhs.value);
        let first = zip(&self.first, &rhs.first, |ga, gb| a * gb + b * ga);
        let mut second = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                second.push(
                    a * rhs.second[k]
                        + b * self.second[k]
                        + self.first[i] * rhs.first[j]
                        + rhs.first[i] * self.first[j],
                );
            }
        }
        Dual2 {
            value: a * b,
            first,
            second,
        }
    }
}

impl Div for &Dual2 {
    type Output = Dual2;
    fn div(self, rhs: &Dual2) -> Dual2 {
        // Quotient rule written out so the value slot is exactly `a / b`.
        let n = self.dim();
        let b = rhs.value;
        let q = self.value / b;
        let first: Vec<f64> = zip(&self.first, &rhs.first, |ga, gb| (ga - q * gb) / b);
        let mut second = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                second.push(
                    (self.second[k]
                        - q * rhs.second[k]
                        - first[i] * rhs.first[j]
                        - rhs.first[i] * first[j])
                        / b,
                );
            }
        }
        Dual2 {
            value: q,
            first,
            second,
        }
    }
}

impl Neg for &Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 {
            value: -self.value,
            first: self.first.iter().map(|x| -x).collect(),
            second: self.second.iter().map(|x| -x).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr for Dual2 {
            type Output = Dual2;
            fn $m(self, rhs: Dual2) -> Dual2 {
                <&Dual2 as $tr>::$m(&self, &rhs)
            }
        }
    )*};
}
forward_owned!(Add::add, Sub::sub, Mul::mul, Div::div);

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        -&self
    }
}

fn zip(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len(), "dual dimension mismatch");
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

/// Scalars the expression evaluator and metric code can run on.
///
/// `dim` is the number of active variables; plain `f64` ignores it.
pub trait Scalar: Clone {
    fn constant(c: f64, dim: usize) -> Self;
    fn value(&self) -> f64;
    fn all_finite(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn powf(&self, e: &Self) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64, _dim: usize) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, n: i32) -> Self {
        // Same multiplication order as the dual path so the value slots agree.
        if n == 0 {
            return 1.0;
        }
        let mut base = if n < 0 { 1.0 / self } else { *self };
        let mut k = n.unsigned_abs();
        let mut acc: Option<f64> = None;
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base,
                    Some(a) => a * base,
                });
            }
            k >>= 1;
            if k > 0 {
                base *= base;
            }
        }
        acc.expect("nonzero exponent")
    }
    fn powf(&self, e: &Self) -> Self {
        (e * self.ln()).exp()
    }
}

impl Scalar for Dual2 {
    fn constant(c: f64, dim: usize) -> Self {
        Dual2::constant(c, dim)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sin(&self) -> Self {
        Dual2::sin(self)
    }
    fn cos(&self) -> Self {
        Dual2::cos(self)
    }
    fn tan(&self) -> Self {
        Dual2::tan(self)
    }
    fn exp(&self) -> Self {
        Dual2::exp(self)
    }
    fn ln(&self) -> Self {
        Dual2::ln(self)
    }
    fn sqrt(&self) -> Self {
        Dual2::sqrt(self)
    }
    fn powi(&self, n: i32) -> Self {
        Dual2::powi(self, n)
    }
    fn powf(&self, e: &Self) -> Self {
        Dual2::powf(self, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(x: f64, y: f64) -> (Dual2, Dual2) {
        (Dual2::variable(x, 0, 2), Dual2::variable(y, 1, 2))
    }

    #[test]
    fn polynomial_derivatives() {
        let (u, v) = vars(1.0, 2.0);
        let thirteen = Dual2::constant(13.0, 2);
        let f = &(&(&u * &u) + &(&v * &v)) + &thirteen;
        assert_eq!(f.value, 18.0);
        assert_eq!(f.first, vec![2.0, 4.0]);
        assert_eq!(f.second, vec![2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn sine_at_origin() {
        let s = Dual2::variable(0.0, 0, 1).sin();
        assert_eq!((s.value, s.first[0], s.second[0]), (0.0, 1.0, 0.0));
    }

    #[test]
    fn quotient_rule() {
        // f = x / y, f_xy = -1/y^2, f_yy = 2x/y^3
        let (x, y) = vars(3.0, 2.0);
        let f = &x / &y;
        assert!((f.value - 1.5).abs() < 1e-15);
        assert!((f.first[1] + 0.75).abs() < 1e-15);
        assert!((f.second[1] + 0.25).abs() < 1e-15);
        assert!((f.second[3] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let x = Dual2::variable(1.3, 0, 1);
        let p = x.powi(3);
        assert!((p.value - 1.3f64.powi(3)).abs() < 1e-14);
        assert!((p.first[0] - 3.0 * 1.69).abs() < 1e-13);
        assert!((p.second[0] - 6.0 * 1.3).abs() < 1e-13);
        let q = x.powi(-2);
        assert!((q.first[0] + 2.0 / 1.3f64.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn constants_have_no_derivatives() {
        let c = Dual2::constant(4.0, 3).sqrt().exp();
        assert!(c.first.iter().chain(&c.second).all(|x| *x == 0.0));
    }
}
