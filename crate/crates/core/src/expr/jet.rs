//! Truncated Taylor arithmetic over chart coordinates.
//!
//! A [`Jet`] carries a value and, depending on its order, its gradient and
//! Hessian with respect to every chart coordinate. Expressions evaluate to
//! full second-order jets; each differentiation drops one order (Christoffel
//! symbols built from metric gradients are first-order, a covariant derivative
//! of a first-order field is a bare value). Mixed arithmetic keeps the lower
//! order.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Value, gradient and Hessian of a scalar at a point.
///
/// Order 2: gradient and Hessian known. Order 1: `hessian` is `None`.
/// Order 0: `gradient` is empty as well.
///
/// The Hessian is stored row-major (`dim * dim`) and is symmetric by
/// construction: every update adds either a symmetric matrix or a symmetrised
/// outer product whose mirrored entries are summed in the same order.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<Vec<f64>>,
}

impl Jet {
    pub fn constant(value: f64, dim: usize) -> Self {
        Jet {
            value,
            gradient: vec![0.0; dim],
            hessian: Some(vec![0.0; dim * dim]),
        }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut gradient = vec![0.0; dim];
        gradient[index] = 1.0;
        Jet {
            value,
            gradient,
            hessian: Some(vec![0.0; dim * dim]),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Jet::constant(0.0, dim)
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn order(&self) -> u8 {
        if self.gradient.is_empty() {
            0
        } else if self.hessian.is_some() {
            2
        } else {
            1
        }
    }

    pub fn value_only(value: f64) -> Self {
        Jet {
            value,
            gradient: Vec::new(),
            hessian: None,
        }
    }

    pub fn hessian_entry(&self, i: usize, j: usize) -> Option<f64> {
        self.hessian.as_ref().map(|h| h[i * self.dim() + j])
    }

    /// `∂_k` of this jet, one order lower.
    ///
    /// Panics on an order-0 jet.
    pub fn partial(&self, k: usize) -> Jet {
        assert!(!self.gradient.is_empty(), "partial derivative of an order-0 jet");
        let n = self.dim();
        match &self.hessian {
            Some(h) => Jet {
                value: self.gradient[k],
                gradient: h[k * n..(k + 1) * n].to_vec(),
                hessian: None,
            },
            None => Jet::value_only(self.gradient[k]),
        }
    }

    /// Directional derivative `X(f)`, with `X` itself a jet-valued field.
    pub fn derivative_along(&self, x: &[Jet]) -> Jet {
        let mut terms = x.iter().enumerate().map(|(k, xk)| xk * &self.partial(k));
        let first = terms.next().expect("non-empty field");
        terms.fold(first, |acc, t| acc + t)
    }

    /// Directional derivative along a plain vector; value only.
    pub fn directional(&self, x: &[f64]) -> f64 {
        self.gradient.iter().zip(x).map(|(g, v)| g * v).sum()
    }

    /// Drop the Hessian.
    pub fn truncated(mut self) -> Jet {
        self.hessian = None;
        self
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let n = self.dim();
        let gradient: Vec<f64> = self.gradient.iter().map(|g| f1 * g).collect();
        let hessian = self.hessian.as_ref().map(|h| {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = f1 * h[i * n + j] + f2 * (self.gradient[i] * self.gradient[j]);
                }
            }
            out
        });
        Jet {
            value: f0,
            gradient,
            hessian,
        }
    }

    pub fn recip(&self) -> Jet {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(&self, k: i32) -> Jet {
        match k {
            0 => Jet::constant(1.0, self.dim()).with_order_of(self),
            1 => self.clone(),
            _ => {
                let v = self.value;
                let kf = k as f64;
                self.chain(v.powi(k), kf * v.powi(k - 1), kf * (kf - 1.0) * v.powi(k - 2))
            }
        }
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            value: self.value * s,
            gradient: self.gradient.iter().map(|g| g * s).collect(),
            hessian: self.hessian.as_ref().map(|h| h.iter().map(|x| x * s).collect()),
        }
    }

    fn with_order_of(mut self, other: &Jet) -> Jet {
        if other.hessian.is_none() {
            self.hessian = None;
        }
        if other.gradient.is_empty() {
            self.gradient.clear();
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|g| g.is_finite())
            && self.hessian.as_ref().is_none_or(|h| h.iter().all(|x| x.is_finite()))
    }
}

fn zip_gradient(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

fn zip_hessian(a: &Option<Vec<f64>>, b: &Option<Vec<f64>>, f: impl Fn(f64, f64) -> f64) -> Option<Vec<f64>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()),
        _ => None,
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value + rhs.value,
            gradient: zip_gradient(&self.gradient, &rhs.gradient, |a, b| a + b),
            hessian: zip_hessian(&self.hessian, &rhs.hessian, |a, b| a + b),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value - rhs.value,
            gradient: zip_gradient(&self.gradient, &rhs.gradient, |a, b| a - b),
            hessian: zip_hessian(&self.hessian, &rhs.hessian, |a, b| a - b),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.dim();
        let (a, b) = (self.value, rhs.value);
        let gradient = zip_gradient(&self.gradient, &rhs.gradient, |ga, gb| a * gb + b * ga);
        let hessian = match (&self.hessian, &rhs.hessian) {
            (Some(ha), Some(hb)) if !gradient.is_empty() => {
                let (ga, gb) = (&self.gradient, &rhs.gradient);
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let cross = ga[i] * gb[j] + ga[j] * gb[i];
                        out[i * n + j] = a * hb[i * n + j] + b * ha[i * n + j] + cross;
                    }
                }
                Some(out)
            }
            _ => None,
        };
        Jet {
            value: a * b,
            gradient,
            hessian,
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.value += rhs.value;
        if rhs.gradient.is_empty() {
            self.gradient.clear();
        }
        for (a, b) in self.gradient.iter_mut().zip(&rhs.gradient) {
            *a += b;
        }
        self.hessian = match (self.hessian.take(), &rhs.hessian) {
            (Some(mut a), Some(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Some(a)
            }
            _ => None,
        };
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self += &(-rhs);
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_hand_expansion() {
        // f = x*y at (2,3)
        let x = Jet::variable(2.0, 0, 2);
        let y = Jet::variable(3.0, 1, 2);
        let f = &x * &y;
        assert_eq!(f.value, 6.0);
        assert_eq!(f.gradient, vec![3.0, 2.0]);
        assert_eq!(f.hessian.unwrap(), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn partial_drops_order() {
        let x = Jet::variable(1.5, 0, 1);
        let f = x.powi(3);
        let d = f.partial(0);
        assert_eq!(d.order(), 1);
        assert!((d.value - 3.0 * 1.5 * 1.5).abs() < 1e-15);
        assert!((d.gradient[0] - 6.0 * 1.5).abs() < 1e-15);
    }

    #[test]
    fn mixed_order_arithmetic_is_first_order() {
        let x = Jet::variable(1.0, 0, 1);
        let t = x.clone().truncated();
        assert_eq!((&x * &t).order(), 1);
        assert_eq!((&x + &t).order(), 1);
    }

    #[test]
    fn order_zero_after_two_partials() {
        let x = Jet::variable(2.0, 0, 1);
        let f = x.powi(3);
        let d2 = f.partial(0).partial(0);
        assert_eq!(d2.order(), 0);
        assert_eq!(d2.value, 12.0);
        assert_eq!((&d2 + &f).order(), 0);
        assert_eq!((&d2 * &f).value, 96.0);
    }

    #[test]
    fn recip_second_derivative() {
        let x = Jet::variable(2.0, 0, 1);
        let r = x.recip();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.gradient[0], -0.25);
        assert_eq!(r.hessian.unwrap()[0], 0.25);
    }
}
