//! Second-order forward jets: value, gradient and Hessian carried together
//! through arithmetic so that every composed function yields exact-to-roundoff
//! first and second partial derivatives.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// Truncated second-order Taylor data of a function of `N` variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<T, const N: usize> {
    pub value: T,
    pub gradient: [T; N],
    /// Symmetric; `hessian[i][j] = ∂²f/∂λ_i∂λ_j`.
    pub hessian: [[T; N]; N],
}

impl<T: Scalar, const N: usize> Jet2<T, N> {
    pub fn constant(value: T) -> Self {
        Self {
            value,
            gradient: [T::zero(); N],
            hessian: [[T::zero(); N]; N],
        }
    }

    /// The coordinate function `λ_index` evaluated at `value`.
    pub fn variable(value: T, index: usize) -> Self {
        let mut j = Self::constant(value);
        j.gradient[index] = T::one();
        j
    }

    /// All `N` coordinate jets at `lambdas`.
    pub fn variables(lambdas: &[T; N]) -> [Self; N] {
        std::array::from_fn(|i| Self::variable(lambdas[i], i))
    }

    /// Compose with a scalar function `g` given `g(u)`, `g'(u)`, `g''(u)`.
    pub fn chain(&self, g0: T, g1: T, g2: T) -> Self {
        let mut out = Self::constant(g0);
        for i in 0..N {
            out.gradient[i] = g1 * self.gradient[i];
            for j in 0..N {
                out.hessian[i][j] =
                    g1 * self.hessian[i][j] + g2 * self.gradient[i] * self.gradient[j];
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let u = self.value;
        let inv = u.recip();
        self.chain(inv, -inv * inv, T::lit(2.0) * inv * inv * inv)
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    pub fn powi(&self, k: i32) -> Self {
        match k {
            0 => Self::constant(T::one()),
            1 => *self,
            2 => self.square(),
            _ => {
                let u = self.value;
                let kk = T::lit(k as f64);
                self.chain(
                    u.powi(k),
                    kk * u.powi(k - 1),
                    kk * (kk - T::one()) * u.powi(k - 2),
                )
            }
        }
    }

    pub fn powf(&self, r: T) -> Self {
        let u = self.value;
        self.chain(
            u.powf(r),
            r * u.powf(r - T::one()),
            r * (r - T::one()) * u.powf(r - T::lit(2.0)),
        )
    }

    pub fn scale(&self, s: T) -> Self {
        self.chain(s * self.value, s, T::zero())
    }

    /// Sum of the listed jets (the empty sum is the zero constant).
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Self>) -> Self
    where
        T: 'a,
    {
        items
            .into_iter()
            .fold(Self::constant(T::zero()), |acc, x| acc + *x)
    }

    /// Largest absolute Hessian asymmetry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..N {
            for j in 0..i {
                worst = worst.max((self.hessian[i][j] - self.hessian[j][i]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|g| g.is_finite())
            && self.hessian.iter().flatten().all(|h| h.is_finite())
    }
}

impl<T: Scalar, const N: usize> Add for Jet2<T, N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Scalar, const N: usize> AddAssign for Jet2<T, N> {
    fn add_assign(&mut self, rhs: Self) {
        self.value += rhs.value;
        for i in 0..N {
            self.gradient[i] += rhs.gradient[i];
            for j in 0..N {
                self.hessian[i][j] += rhs.hessian[i][j];
            }
        }
    }
}

impl<T: Scalar, const N: usize> Neg for Jet2<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar, const N: usize> Sub for Jet2<T, N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar, const N: usize> Mul for Jet2<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (self.value, rhs.value);
        let mut out = Self::constant(u * v);
        for i in 0..N {
            out.gradient[i] = self.gradient[i] * v + u * rhs.gradient[i];
            for j in 0..N {
                out.hessian[i][j] = self.hessian[i][j] * v
                    + u * rhs.hessian[i][j]
                    + self.gradient[i] * rhs.gradient[j]
                    + rhs.gradient[i] * self.gradient[j];
            }
        }
        out
    }
}

impl<T: Scalar, const N: usize> Div for Jet2<T, N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Scalar, const N: usize> Add<T> for Jet2<T, N> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.value += rhs;
        self
    }
}

impl<T: Scalar, const N: usize> Sub<T> for Jet2<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: T) -> Self {
        self.value -= rhs;
        self
    }
}

impl<T: Scalar, const N: usize> Mul<T> for Jet2<T, N> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn product_rule_on_xy() {
        let [x, y] = Jet2::<f64, 2>::variables(&[3.0, 5.0]);
        let f = x * y;
        assert_eq!(f.value, 15.0);
        assert_eq!(f.gradient, [5.0, 3.0]);
        assert_eq!(f.hessian, [[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn quotient_matches_closed_form() {
        // f = x / y, f_x = 1/y, f_y = -x/y², f_xy = -1/y², f_yy = 2x/y³
        let [x, y] = Jet2::<f64, 2>::variables(&[3.0, 2.0]);
        let f = x / y;
        assert!(close(f.value, 1.5, 1e-15));
        assert!(close(f.gradient[0], 0.5, 1e-15));
        assert!(close(f.gradient[1], -0.75, 1e-15));
        assert!(close(f.hessian[0][0], 0.0, 1e-15));
        assert!(close(f.hessian[0][1], -0.25, 1e-15));
        assert!(close(f.hessian[1][1], 0.75, 1e-15));
    }

    #[test]
    fn powi_and_powf_agree() {
        let [x, y] = Jet2::<f64, 2>::variables(&[1.3, 0.7]);
        let u = x + y * x;
        let a = u.powi(5);
        let b = u.powf(5.0);
        assert!(close(a.value, b.value, 1e-13));
        for i in 0..2 {
            assert!(close(a.gradient[i], b.gradient[i], 1e-13));
            for j in 0..2 {
                assert!(close(a.hessian[i][j], b.hessian[i][j], 1e-13));
            }
        }
        let c = u.powi(-2);
        let d = (u * u).recip();
        assert!(close(c.hessian[0][1], d.hessian[0][1], 1e-13));
    }

    #[test]
    fn works_in_f32() {
        let [x, y, z] = Jet2::<f32, 3>::variables(&[1.0, 2.0, 3.0]);
        let k = x * y * z;
        assert_eq!(k.gradient, [6.0, 3.0, 2.0]);
        assert_eq!(k.hessian[1][2], 1.0);
    }
}
