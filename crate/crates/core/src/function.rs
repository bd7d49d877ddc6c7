//! Homogeneous symmetric functions of the principal curvatures and their
//! 2-jets.
//!
//! Built-ins are registered with their homogeneity degree. Composed
//! expressions derive their degree structurally; a sum of terms of different
//! degree is rejected when built.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{CertError, Result};
use crate::jet::Jet2;
use crate::point::CurvaturePoint;
use crate::scalar::Scalar;

/// Relative threshold (against `‖λ‖∞`) below which a divided difference
/// switches to its diagonal limit.
pub const EPS_DD: f64 = 1e-7;

/// Hand-registered symmetric functions. Each is defined for every dimension
/// `n ≥ 2`; the names refer to the three-dimensional flows they belong to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    /// Mean curvature `Σ λ_i`.
    H,
    /// `H^σ`.
    HPow(f64),
    /// `|A|² = Σ λ_i²`.
    A2,
    /// Gauss curvature `Π λ_i`.
    K,
    /// `tr A^σ = Σ λ_i^σ`.
    TrPow(f64),
    /// `Σ_{i<j} (λ_i − λ_j)² / H²`.
    PhiH3,
    /// `Σ_{i<j} (λ_i − λ_j)² / (λ_i λ_j)² · (H³)²`.
    PsiH3,
    /// `|A|² (Σ 1/λ_i)²`; for three curvatures `(a²+b²+c²)(ab+ac+bc)² / (abc)²`.
    PhiA2,
    /// `H² Σ_{i<j} (λ_i − λ_j)² / K`.
    PsiA2,
    /// `Σ_{i<j} (λ_i − λ_j)² / |A|²`.
    PhiK,
    /// `Σ_{i<j} (λ_i − λ_j)² / (λ_i λ_j)² · K²`.
    PsiK,
}

impl Builtin {
    /// Stable identifiers accepted by [`FromStr`], besides the
    /// parameterised `H^σ` and `trA^σ`.
    pub const IDENTIFIERS: [&'static str; 10] = [
        "H", "H3", "A2", "K", "phi_H3", "psi_H3", "phi_A2", "psi_A2", "phi_K", "psi_K",
    ];

    pub fn degree(&self, n: usize) -> f64 {
        let n = n as f64;
        match *self {
            Builtin::H => 1.0,
            Builtin::HPow(s) => s,
            Builtin::A2 => 2.0,
            Builtin::K => n,
            Builtin::TrPow(s) => s,
            Builtin::PhiH3 | Builtin::PhiA2 | Builtin::PhiK => 0.0,
            Builtin::PsiH3 => 4.0,
            Builtin::PsiA2 => 4.0 - n,
            Builtin::PsiK => 2.0 * n - 2.0,
        }
    }

    fn jet<T: Scalar, const N: usize>(&self, x: &[Jet2<T, N>; N]) -> Jet2<T, N> {
        match *self {
            Builtin::H => mean(x),
            Builtin::HPow(s) => power(&mean(x), s),
            Builtin::A2 => norm2(x),
            Builtin::K => gauss(x),
            Builtin::TrPow(s) => {
                let terms: [Jet2<T, N>; N] = std::array::from_fn(|i| power(&x[i], s));
                Jet2::sum(&terms)
            }
            Builtin::PhiH3 => spread(x) / mean(x).square(),
            Builtin::PsiH3 => inverse_spread(x) * mean(x).powi(6),
            Builtin::PhiA2 => {
                let inv: [Jet2<T, N>; N] = std::array::from_fn(|i| x[i].recip());
                norm2(x) * Jet2::sum(&inv).square()
            }
            Builtin::PsiA2 => mean(x).square() * spread(x) / gauss(x),
            Builtin::PhiK => spread(x) / norm2(x),
            Builtin::PsiK => inverse_spread(x) * gauss(x).square(),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Builtin::H => write!(f, "H"),
            Builtin::HPow(3.0) => write!(f, "H3"),
            Builtin::HPow(s) => write!(f, "H^{s}"),
            Builtin::A2 => write!(f, "A2"),
            Builtin::K => write!(f, "K"),
            Builtin::TrPow(s) => write!(f, "trA^{s}"),
            Builtin::PhiH3 => write!(f, "phi_H3"),
            Builtin::PsiH3 => write!(f, "psi_H3"),
            Builtin::PhiA2 => write!(f, "phi_A2"),
            Builtin::PsiA2 => write!(f, "psi_A2"),
            Builtin::PhiK => write!(f, "phi_K"),
            Builtin::PsiK => write!(f, "psi_K"),
        }
    }
}

impl FromStr for Builtin {
    type Err = CertError;

    fn from_str(s: &str) -> Result<Self> {
        let parse_exp = |e: &str| {
            e.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CertError::Unknown(s.to_string()))
        };
        Ok(match s {
            "H" => Builtin::H,
            "H3" => Builtin::HPow(3.0),
            "A2" => Builtin::A2,
            "K" => Builtin::K,
            "phi_H3" => Builtin::PhiH3,
            "psi_H3" => Builtin::PsiH3,
            "phi_A2" => Builtin::PhiA2,
            "psi_A2" => Builtin::PsiA2,
            "phi_K" => Builtin::PhiK,
            "psi_K" => Builtin::PsiK,
            _ => {
                if let Some(e) = s.strip_prefix("H^") {
                    Builtin::HPow(parse_exp(e)?)
                } else if let Some(e) = s.strip_prefix("trA^") {
                    Builtin::TrPow(parse_exp(e)?)
                } else {
                    return Err(CertError::Unknown(s.to_string()));
                }
            }
        })
    }
}

fn mean<T: Scalar, const N: usize>(x: &[Jet2<T, N>; N]) -> Jet2<T, N> {
    Jet2::sum(x)
}

fn norm2<T: Scalar, const N: usize>(x: &[Jet2<T, N>; N]) -> Jet2<T, N> {
    x.iter()
        .fold(Jet2::constant(T::zero()), |acc, xi| acc + xi.square())
}

fn gauss<T: Scalar, const N: usize>(x: &[Jet2<T, N>; N]) -> Jet2<T, N> {
    x.iter().fold(Jet2::constant(T::one()), |acc, xi| acc * *xi)
}

fn power<T: Scalar, const N: usize>(u: &Jet2<T, N>, s: f64) -> Jet2<T, N> {
    if s.fract() == 0.0 && s.abs() <= i32::MAX as f64 {
        u.powi(s as i32)
    } else {
        u.powf(T::lit(s))
    }
}

/// `Σ_{i<j} (λ_i − λ_j)²`
fn spread<T: Scalar, const N: usize>(x: &[Jet2<T, N>; N]) -> Jet2<T, N> {
    let mut acc = Jet2::constant(T::zero());
    for i in 0..N {
        for j in i + 1..N {
            acc += (x[i] - x[j]).square();
        }
    }
    acc
}

/// `Σ_{(i,j) ∈ pairs} (λ_i − λ_j)² / (λ_i λ_j)² = Σ (1/λ_j − 1/λ_i)²`
fn inverse_spread_pairs<T: Scalar, const N: usize>(
    x: &[Jet2<T, N>; N],
    pairs: impl Iterator<Item = (usize, usize)>,
) -> Jet2<T, N> {
    let inv: [Jet2<T, N>; N] = std::array::from_fn(|i| x[i].recip());
    let mut acc = Jet2::constant(T::zero());
    for (i, j) in pairs {
        acc += (inv[j] - inv[i]).square();
    }
    acc
}

fn inverse_spread<T: Scalar, const N: usize>(x: &[Jet2<T, N>; N]) -> Jet2<T, N> {
    inverse_spread_pairs(x, (0..N).flat_map(|i| (i + 1..N).map(move |j| (i, j))))
}

/// A homogeneous symmetric function: a built-in or a composition of them.
///
/// Constructors for composite nodes check homogeneity; degrees of composed
/// expressions are derived from their parts.
#[derive(Clone, Debug, PartialEq)]
pub enum SymmetricFunction {
    Builtin(Builtin),
    Const(f64),
    Sum(Box<SymmetricFunction>, Box<SymmetricFunction>),
    Difference(Box<SymmetricFunction>, Box<SymmetricFunction>),
    Product(Box<SymmetricFunction>, Box<SymmetricFunction>),
    Quotient(Box<SymmetricFunction>, Box<SymmetricFunction>),
    PowI(Box<SymmetricFunction>, i32),
    PowF(Box<SymmetricFunction>, f64),
    /// `Σ_{(i,j) ∈ pairs} (λ_i − λ_j)² / (λ_i λ_j)² · speed²` over a chosen
    /// subset of index pairs (0-based, `i < j`).
    VanishingSum {
        pairs: Vec<(usize, usize)>,
        speed: Box<SymmetricFunction>,
    },
}

impl From<Builtin> for SymmetricFunction {
    fn from(b: Builtin) -> Self {
        SymmetricFunction::Builtin(b)
    }
}

impl SymmetricFunction {
    pub fn h() -> Self {
        Builtin::H.into()
    }
    pub fn h_pow(sigma: f64) -> Self {
        Builtin::HPow(sigma).into()
    }
    pub fn h3() -> Self {
        Builtin::HPow(3.0).into()
    }
    pub fn a2() -> Self {
        Builtin::A2.into()
    }
    pub fn k() -> Self {
        Builtin::K.into()
    }
    pub fn tr_pow(sigma: f64) -> Self {
        Builtin::TrPow(sigma).into()
    }

    pub fn constant(c: f64) -> Self {
        SymmetricFunction::Const(c)
    }

    pub fn sum(self, rhs: Self, n: usize) -> Result<Self> {
        check_same_degree(&self, &rhs, n, "+")?;
        Ok(SymmetricFunction::Sum(Box::new(self), Box::new(rhs)))
    }

    pub fn difference(self, rhs: Self, n: usize) -> Result<Self> {
        check_same_degree(&self, &rhs, n, "-")?;
        Ok(SymmetricFunction::Difference(Box::new(self), Box::new(rhs)))
    }

    pub fn product(self, rhs: Self) -> Self {
        SymmetricFunction::Product(Box::new(self), Box::new(rhs))
    }

    pub fn quotient(self, rhs: Self) -> Self {
        SymmetricFunction::Quotient(Box::new(self), Box::new(rhs))
    }

    pub fn powi(self, k: i32) -> Self {
        SymmetricFunction::PowI(Box::new(self), k)
    }

    pub fn powf(self, r: f64) -> Self {
        SymmetricFunction::PowF(Box::new(self), r)
    }

    /// Pair sum over all `n(n−1)/2` pairs.
    pub fn vanishing_sum_all(n: usize, speed: Self) -> Self {
        let pairs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        SymmetricFunction::VanishingSum {
            pairs,
            speed: Box::new(speed),
        }
    }

    /// Homogeneity degree in dimension `n`.
    pub fn degree(&self, n: usize) -> Result<f64> {
        use SymmetricFunction::*;
        Ok(match self {
            Builtin(b) => b.degree(n),
            Const(_) => 0.0,
            Sum(l, r) | Difference(l, r) => {
                let (dl, dr) = (l.degree(n)?, r.degree(n)?);
                if (dl - dr).abs() > 1e-12 {
                    return Err(CertError::NonHomogeneous(format!(
                        "{self}: terms of degree {dl} and {dr}"
                    )));
                }
                dl
            }
            Product(l, r) => l.degree(n)? + r.degree(n)?,
            Quotient(l, r) => l.degree(n)? - r.degree(n)?,
            PowI(b, k) => b.degree(n)? * (*k as f64),
            PowF(b, r) => b.degree(n)? * r,
            VanishingSum { speed, .. } => 2.0 * speed.degree(n)? - 2.0,
        })
    }

    /// Value and exact first and second partial derivatives at `p`.
    pub fn eval_jet2<T: Scalar, const N: usize>(
        &self,
        p: &CurvaturePoint<T, N>,
    ) -> Result<Jet2<T, N>> {
        let x = Jet2::variables(p.lambdas());
        let j = self.jet(&x)?;
        if !j.is_finite() {
            return Err(CertError::Evaluation(format!(
                "{self} is not finite at {:?}",
                p.lambdas()
            )));
        }
        Ok(j)
    }

    /// Validates the raw coordinates before evaluating.
    pub fn eval_at<T: Scalar, const N: usize>(&self, lambdas: [T; N]) -> Result<Jet2<T, N>> {
        self.eval_jet2(&CurvaturePoint::new(lambdas)?)
    }

    /// Value only. Same cost as the jet; provided for readability.
    pub fn value<T: Scalar, const N: usize>(&self, p: &CurvaturePoint<T, N>) -> Result<T> {
        Ok(self.eval_jet2(p)?.value)
    }

    fn jet<T: Scalar, const N: usize>(&self, x: &[Jet2<T, N>; N]) -> Result<Jet2<T, N>> {
        use SymmetricFunction::*;
        Ok(match self {
            Builtin(b) => b.jet(x),
            Const(c) => Jet2::constant(T::lit(*c)),
            Sum(l, r) => l.jet(x)? + r.jet(x)?,
            Difference(l, r) => l.jet(x)? - r.jet(x)?,
            Product(l, r) => l.jet(x)? * r.jet(x)?,
            Quotient(l, r) => {
                let den = r.jet(x)?;
                if den.value == T::zero() {
                    return Err(CertError::Evaluation(format!("{self}: division by zero")));
                }
                l.jet(x)? / den
            }
            PowI(b, k) => {
                let base = b.jet(x)?;
                if *k < 0 && base.value == T::zero() {
                    return Err(CertError::Evaluation(format!("{self}: division by zero")));
                }
                base.powi(*k)
            }
            PowF(b, r) => {
                let base = b.jet(x)?;
                if base.value <= T::zero() {
                    return Err(CertError::Evaluation(format!(
                        "{self}: non-positive base for real power"
                    )));
                }
                base.powf(T::lit(*r))
            }
            VanishingSum { pairs, speed } => {
                if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= j || j >= N) {
                    return Err(CertError::InvalidArgument(format!(
                        "pair ({i},{j}) invalid for {N} curvatures"
                    )));
                }
                inverse_spread_pairs(x, pairs.iter().copied()) * speed.jet(x)?.square()
            }
        })
    }
}

fn check_same_degree(
    l: &SymmetricFunction,
    r: &SymmetricFunction,
    n: usize,
    op: &str,
) -> Result<()> {
    let (dl, dr) = (l.degree(n)?, r.degree(n)?);
    if (dl - dr).abs() > 1e-12 {
        return Err(CertError::NonHomogeneous(format!(
            "{l} {op} {r}: degrees {dl} and {dr} differ"
        )));
    }
    Ok(())
}

impl fmt::Display for SymmetricFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SymmetricFunction::*;
        match self {
            Builtin(b) => write!(f, "{b}"),
            Const(c) => write!(f, "{c}"),
            Sum(l, r) => write!(f, "({l} + {r})"),
            Difference(l, r) => write!(f, "({l} - {r})"),
            Product(l, r) => write!(f, "({l} * {r})"),
            Quotient(l, r) => write!(f, "({l} / {r})"),
            PowI(b, k) => write!(f, "({b})^{k}"),
            PowF(b, r) => write!(f, "({b})^{r}"),
            VanishingSum { pairs, speed } => {
                write!(f, "vsum[")?;
                for (k, (i, j)) in pairs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({},{})", i + 1, j + 1)?;
                }
                write!(f, "]({speed})")
            }
        }
    }
}

impl FromStr for SymmetricFunction {
    type Err = CertError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(SymmetricFunction::Builtin(s.parse()?))
    }
}

impl Serialize for SymmetricFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `(∂f/∂λ_i − ∂f/∂λ_j) / (λ_i − λ_j)`, replaced by its diagonal limit
/// `∂²f/∂λ_i² − ∂²f/∂λ_i∂λ_j` (evaluated with `λ_i`, `λ_j` both set to their
/// mean) when `|λ_i − λ_j| ≤ eps_dd · ‖λ‖∞`.
pub fn divided_difference<T: Scalar, const N: usize>(
    f: &SymmetricFunction,
    p: &CurvaturePoint<T, N>,
    i: usize,
    j: usize,
    eps_dd: f64,
) -> Result<T> {
    let jet = f.eval_jet2(p)?;
    divided_difference_with(f, p, &jet, i, j, eps_dd)
}

/// As [`divided_difference`], reusing an already evaluated jet at `p`.
pub fn divided_difference_with<T: Scalar, const N: usize>(
    f: &SymmetricFunction,
    p: &CurvaturePoint<T, N>,
    jet: &Jet2<T, N>,
    i: usize,
    j: usize,
    eps_dd: f64,
) -> Result<T> {
    if i == j || i >= N || j >= N {
        return Err(CertError::InvalidArgument(format!(
            "divided difference needs distinct indices below {N}, got ({i},{j})"
        )));
    }
    let l = p.lambdas();
    let gap = l[i] - l[j];
    if gap.abs() > T::lit(eps_dd) * p.max() {
        return Ok((jet.gradient[i] - jet.gradient[j]) / gap);
    }
    let mut sym = *l;
    let m = (l[i] + l[j]) / T::lit(2.0);
    sym[i] = m;
    sym[j] = m;
    let js = f.eval_jet2(&CurvaturePoint::new_unchecked(sym))?;
    Ok(js.hessian[i][i] - js.hessian[i][j])
}
