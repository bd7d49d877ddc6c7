//! Points of the open positive cone of principal curvatures.

use serde::{Deserialize, Serialize};

use crate::error::{CertError, Result};
use crate::scalar::Scalar;

/// Ordered principal curvatures `(λ_1, …, λ_N)`, all strictly positive and finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CurvaturePoint<T, const N: usize> {
    #[serde(with = "serde_arrays")]
    lambdas: [T; N],
}

impl<T: Scalar, const N: usize> CurvaturePoint<T, N> {
    pub fn new(lambdas: [T; N]) -> Result<Self> {
        if N < 2 {
            return Err(CertError::Domain(format!(
                "need at least 2 curvatures, got {N}"
            )));
        }
        for (i, &l) in lambdas.iter().enumerate() {
            if !l.is_finite() {
                return Err(CertError::Domain(format!("λ_{} is not finite", i + 1)));
            }
            if l <= T::zero() {
                return Err(CertError::Domain(format!(
                    "λ_{} = {} is not strictly positive",
                    i + 1,
                    l
                )));
            }
        }
        Ok(Self { lambdas })
    }

    /// Skips validation. Callers guarantee positivity and finiteness.
    pub(crate) fn new_unchecked(lambdas: [T; N]) -> Self {
        Self { lambdas }
    }

    pub fn lambdas(&self) -> &[T; N] {
        &self.lambdas
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn max(&self) -> T {
        self.lambdas.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.lambdas.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn sum(&self) -> T {
        self.lambdas.iter().copied().sum()
    }

    /// `max λ / min λ`.
    pub fn pinching_ratio(&self) -> T {
        self.max() / self.min()
    }

    /// Radial projection onto the simplex `Σ λ_i = 1`.
    pub fn project(&self) -> Self {
        let s = self.sum();
        Self::new_unchecked(self.lambdas.map(|l| l / s))
    }

    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::new(self.lambdas.map(|l| l * s))
    }

    pub fn permuted(&self, perm: &[usize; N]) -> Self {
        Self::new_unchecked(std::array::from_fn(|i| self.lambdas[perm[i]]))
    }
}

impl<T: Scalar> CurvaturePoint<T, 3> {
    pub fn a(&self) -> T {
        self.lambdas[0]
    }
    pub fn b(&self) -> T {
        self.lambdas[1]
    }
    pub fn c(&self) -> T {
        self.lambdas[2]
    }
}

impl<T: Scalar, const N: usize> std::ops::Index<usize> for CurvaturePoint<T, N> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.lambdas[i]
    }
}

// serde's derive only covers arrays up to length 32 and not const-generic ones.
mod serde_arrays {
    use serde::de::{Deserialize, Deserializer, Error};
    use serde::ser::{Serialize, Serializer};

    pub fn serialize<S: Serializer, T: Serialize, const N: usize>(
        a: &[T; N],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Deserialize<'de>, const N: usize>(
        d: D,
    ) -> Result<[T; N], D::Error> {
        let v = Vec::<T>::deserialize(d)?;
        let len = v.len();
        v.try_into()
            .map_err(|_| D::Error::custom(format!("expected {N} curvatures, got {len}")))
    }
}
