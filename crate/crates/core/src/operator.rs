//! Critical-point decomposition of the parabolic operator `Lw = dw/dt − F^{ij} w_{;ij}`.
//!
//! In normal coordinates at a critical point of `w` (with `h_{ij} = diag(λ)`),
//!
//! ```text
//! Lw = C_w + E_w x₀² + x₁ᵀ M^R x₁ + x₂ᵀ M^S x₂ + x₃ᵀ M^T x₃
//! ```
//!
//! where `x₀ = h_{12;3}` and `x_i` collects two of the three diagonal
//! gradient entries `h_{kk;i}`; the third is eliminated through the critical
//! point condition `Σ_k w_k h_{kk;i} = 0`. `Lw ≤ 0` is certified when both
//! scalars are non-positive and the three 2×2 forms are negative
//! semi-definite.
//!
//! Divided differences `(f_i − f_j)/(λ_i − λ_j)` are taken through
//! [`divided_difference_with`], so umbilic and partially umbilic points are
//! finite.

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{CertError, Result};
use crate::function::{divided_difference_with, SymmetricFunction};
use crate::jet::Jet2;
use crate::point::CurvaturePoint;
use crate::scalar::Scalar;

/// Symmetric 2×2 matrix `[[m11, m12], [m12, m22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sym2<T> {
    pub m11: T,
    pub m12: T,
    pub m22: T,
}

impl<T: Scalar> Sym2<T> {
    pub fn new(m11: T, m12: T, m22: T) -> Self {
        Self { m11, m12, m22 }
    }

    pub fn trace(&self) -> T {
        self.m11 + self.m22
    }

    pub fn det(&self) -> T {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    /// Largest absolute entry.
    pub fn norm_inf(&self) -> T {
        self.m11.abs().max(self.m12.abs()).max(self.m22.abs())
    }

    pub fn quadratic_form(&self, x: [T; 2]) -> T {
        self.m11 * x[0] * x[0] + T::lit(2.0) * self.m12 * x[0] * x[1] + self.m22 * x[1] * x[1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NsdVerdict<T> {
    pub is_nsd: bool,
    pub trace: T,
    pub det: T,
    /// `min(τ − tr/‖M‖, τ + det/‖M‖²)`; non-negative exactly when `is_nsd`.
    pub margin: T,
}

/// Trace/determinant test for negative semi-definiteness of a symmetric 2×2
/// matrix, with tolerance `tau_nsd` relative to `‖M‖∞`.
pub fn nsd_check<T: Scalar>(m: &Sym2<T>, tau_nsd: f64) -> NsdVerdict<T> {
    let trace = m.trace();
    let det = m.det();
    let norm = m.norm_inf();
    let tau = T::lit(tau_nsd);
    if norm == T::zero() {
        return NsdVerdict {
            is_nsd: true,
            trace,
            det,
            margin: tau,
        };
    }
    let margin = (tau - trace / norm).min(tau + det / (norm * norm));
    NsdVerdict {
        is_nsd: margin >= T::zero(),
        trace,
        det,
        margin,
    }
}

/// Derivatives of `F` and `w` at one point, plus all pairwise divided
/// differences. Every piece of the decomposition is computed from this.
#[derive(Clone, Debug)]
pub struct CriticalPointJets<T, const N: usize> {
    pub point: CurvaturePoint<T, N>,
    pub speed: Jet2<T, N>,
    pub quantity: Jet2<T, N>,
    /// Symmetric; the diagonal is unused and zero.
    pub speed_dd: [[T; N]; N],
    pub quantity_dd: [[T; N]; N],
}

impl<T: Scalar, const N: usize> CriticalPointJets<T, N> {
    pub fn new(
        speed: &SymmetricFunction,
        quantity: &SymmetricFunction,
        p: &CurvaturePoint<T, N>,
        eps_dd: f64,
    ) -> Result<Self> {
        let fj = speed.eval_jet2(p)?;
        Self::with_speed_jet(speed, fj, quantity, p, eps_dd)
    }

    /// Reuses an already evaluated jet of the speed at `p`.
    pub fn with_speed_jet(
        speed: &SymmetricFunction,
        speed_jet: Jet2<T, N>,
        quantity: &SymmetricFunction,
        p: &CurvaturePoint<T, N>,
        eps_dd: f64,
    ) -> Result<Self> {
        let wj = quantity.eval_jet2(p)?;
        let mut speed_dd = [[T::zero(); N]; N];
        let mut quantity_dd = [[T::zero(); N]; N];
        for i in 0..N {
            for j in i + 1..N {
                let df = divided_difference_with(speed, p, &speed_jet, i, j, eps_dd)?;
                let dw = divided_difference_with(quantity, p, &wj, i, j, eps_dd)?;
                speed_dd[i][j] = df;
                speed_dd[j][i] = df;
                quantity_dd[i][j] = dw;
                quantity_dd[j][i] = dw;
            }
        }
        Ok(Self {
            point: *p,
            speed: speed_jet,
            quantity: wj,
            speed_dd,
            quantity_dd,
        })
    }

    /// `C_w = Σ_i λ_i w_i (Σ_k λ_k² F_k + λ_i (F − Σ_k λ_k F_k))`, valid in any
    /// dimension.
    pub fn constant_term(&self) -> T {
        let l = self.point.lambdas();
        let f = &self.speed;
        let w = &self.quantity;
        let s: T = (0..N).map(|k| l[k] * l[k] * f.gradient[k]).sum();
        let t = f.value - (0..N).map(|k| l[k] * f.gradient[k]).sum::<T>();
        (0..N).map(|i| l[i] * w.gradient[i] * (s + l[i] * t)).sum()
    }

    /// Sum of the magnitudes of the summands of [`Self::constant_term`].
    pub fn constant_term_scale(&self) -> T {
        let l = self.point.lambdas();
        let f = &self.speed;
        let w = &self.quantity;
        let s: T = (0..N).map(|k| l[k] * l[k] * f.gradient[k].abs()).sum();
        let t = f.value.abs() + (0..N).map(|k| l[k] * f.gradient[k].abs()).sum::<T>();
        (0..N)
            .map(|i| l[i] * w.gradient[i].abs() * (s + l[i] * t))
            .sum()
    }

    /// `|∇w|∞` is negligible next to `|w|/‖λ‖∞ + ‖∇²w‖∞ ‖λ‖∞`.
    pub fn check_gradient(&self, delta_grad: f64) -> Result<()> {
        let w = &self.quantity;
        let pmax = self.point.max();
        let gnorm = w.gradient.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        let hnorm = w
            .hessian
            .iter()
            .flatten()
            .fold(T::zero(), |m, h| m.max(h.abs()));
        let threshold = T::lit(delta_grad) * (w.value.abs() / pmax + hnorm * pmax);
        if gnorm <= threshold {
            return Err(CertError::GradientTooSmall {
                norm: gnorm.to_f64_lossy(),
                threshold: threshold.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// The three index triples `(i, j, k)` with `{i, j, k} = {0, 1, 2}` and `i < j`.
const PAIRS_3: [(usize, usize, usize); 3] = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];

impl<T: Scalar> CriticalPointJets<T, 3> {
    /// `E_w`, the coefficient of `h_{12;3}²` (twice the bracketed sum).
    pub fn e_term(&self) -> T {
        let f = &self.speed;
        let w = &self.quantity;
        let half: T = PAIRS_3
            .iter()
            .map(|&(i, j, k)| {
                w.gradient[k] * self.speed_dd[i][j] - f.gradient[k] * self.quantity_dd[i][j]
            })
            .sum();
        T::lit(2.0) * half
    }

    pub fn e_term_scale(&self) -> T {
        let f = &self.speed;
        let w = &self.quantity;
        let half: T = PAIRS_3
            .iter()
            .map(|&(i, j, k)| {
                (w.gradient[k] * self.speed_dd[i][j]).abs()
                    + (f.gradient[k] * self.quantity_dd[i][j]).abs()
            })
            .sum();
        T::lit(2.0) * half
    }

    /// Unreduced quadratic form of direction `i` in `(h_{11;i}, h_{22;i}, h_{33;i})`:
    /// `w_i ∇²F − F_i ∇²w` plus, for `k ≠ i`, the divided-difference terms
    /// `2 (w_k D_{ik}F − F_k D_{ik}w)` on the diagonal entry `k`.
    pub fn direction_form(&self, i: usize) -> [[T; 3]; 3] {
        let f = &self.speed;
        let w = &self.quantity;
        let mut q: [[T; 3]; 3] = std::array::from_fn(|k| {
            std::array::from_fn(|l| {
                w.gradient[i] * f.hessian[k][l] - f.gradient[i] * w.hessian[k][l]
            })
        });
        for k in (0..3).filter(|&k| k != i) {
            q[k][k] += T::lit(2.0)
                * (w.gradient[k] * self.speed_dd[i][k] - f.gradient[k] * self.quantity_dd[i][k]);
        }
        q
    }

    /// Index of the largest `|w_k|`.
    pub fn default_pivot(&self) -> usize {
        let g = &self.quantity.gradient;
        (0..3)
            .max_by(|&a, &b| g[a].abs().partial_cmp(&g[b].abs()).unwrap())
            .unwrap()
    }

    /// Restriction of [`Self::direction_form`] to the hyperplane
    /// `Σ_k w_k h_{kk;i} = 0`, eliminating variable `pivot`.
    pub fn restricted_form_with_pivot(&self, i: usize, pivot: usize) -> Result<RestrictedForm<T>> {
        if i >= 3 || pivot >= 3 {
            return Err(CertError::InvalidArgument(format!(
                "direction {i} / pivot {pivot} out of range"
            )));
        }
        let g = &self.quantity.gradient;
        if g[pivot] == T::zero() {
            return Err(CertError::GradientTooSmall {
                norm: 0.0,
                threshold: 0.0,
            });
        }
        let free = free_indices(pivot);
        // Columns of the 3×2 substitution y = B z.
        let mut basis = [[T::zero(); 3]; 2];
        for (col, &fi) in free.iter().enumerate() {
            basis[col][fi] = T::one();
            basis[col][pivot] = -g[fi] / g[pivot];
        }
        let q = self.direction_form(i);
        let form = |u: &[T; 3], v: &[T; 3]| -> T {
            let mut acc = T::zero();
            for k in 0..3 {
                for l in 0..3 {
                    acc += u[k] * q[k][l] * v[l];
                }
            }
            acc
        };
        Ok(RestrictedForm {
            matrix: Sym2::new(
                form(&basis[0], &basis[0]),
                form(&basis[0], &basis[1]),
                form(&basis[1], &basis[1]),
            ),
            pivot,
            free,
        })
    }

    pub fn restricted_form(&self, i: usize) -> Result<RestrictedForm<T>> {
        self.restricted_form_with_pivot(i, self.default_pivot())
    }

    /// Unreduced five-part sum, transcribed term by term from the explicit
    /// `R_w`, `S_w`, `T_w` displays rather than through [`Self::direction_form`].
    pub fn full_lw(&self, g: &GradientVector<T>) -> T {
        let two = T::lit(2.0);
        let fg = &self.speed.gradient;
        let wg = &self.quantity.gradient;
        let fh = &self.speed.hessian;
        let wh = &self.quantity.hessian;
        let (fa, fb, fc) = (fg[0], fg[1], fg[2]);
        let (wa, wb, wc) = (wg[0], wg[1], wg[2]);
        let (dfab, dfac, dfbc) = (
            self.speed_dd[0][1],
            self.speed_dd[0][2],
            self.speed_dd[1][2],
        );
        let (dwab, dwac, dwbc) = (
            self.quantity_dd[0][1],
            self.quantity_dd[0][2],
            self.quantity_dd[1][2],
        );
        let quad = |h: &[[T; 3]; 3], x: T, y: T, z: T| -> T {
            h[0][0] * x * x
                + h[1][1] * y * y
                + h[2][2] * z * z
                + two * (h[0][1] * x * y + h[0][2] * x * z + h[1][2] * y * z)
        };

        let [h111, h221, h331] = g.dirs[0];
        let r = wa * quad(fh, h111, h221, h331)
            + wb * (two * dfab * h221 * h221)
            + wc * (two * dfac * h331 * h331)
            - fa * quad(wh, h111, h221, h331)
            - fb * (two * dwab * h221 * h221)
            - fc * (two * dwac * h331 * h331);

        let [h112, h222, h332] = g.dirs[1];
        let s = wa * (two * dfab * h112 * h112)
            + wb * quad(fh, h112, h222, h332)
            + wc * (two * dfbc * h332 * h332)
            - fa * (two * dwab * h112 * h112)
            - fb * quad(wh, h112, h222, h332)
            - fc * (two * dwbc * h332 * h332);

        let [h113, h223, h333] = g.dirs[2];
        let t = wa * (two * dfac * h113 * h113)
            + wb * (two * dfbc * h223 * h223)
            + wc * quad(fh, h113, h223, h333)
            - fa * (two * dwac * h113 * h113)
            - fb * (two * dwbc * h223 * h223)
            - fc * quad(wh, h113, h223, h333);

        self.constant_term() + self.e_term() * g.x0 * g.x0 + r + s + t
    }

    /// All five pieces, with the default (largest `|w_k|`) pivot.
    pub fn decompose(&self, tol: &Tolerances) -> Result<OperatorDecomposition<T>> {
        self.check_gradient(tol.delta_grad)?;
        Ok(OperatorDecomposition {
            c_term: self.constant_term(),
            e_term: self.e_term(),
            c_scale: self.constant_term_scale(),
            e_scale: self.e_term_scale(),
            forms: [
                self.restricted_form(0)?,
                self.restricted_form(1)?,
                self.restricted_form(2)?,
            ],
        })
    }
}

/// The two indices other than `pivot`, ascending.
pub fn free_indices(pivot: usize) -> [usize; 2] {
    match pivot {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RestrictedForm<T> {
    pub matrix: Sym2<T>,
    /// Eliminated variable (index `k` of `h_{kk;i}`).
    pub pivot: usize,
    /// Variables kept, in order.
    pub free: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorDecomposition<T> {
    pub c_term: T,
    pub e_term: T,
    pub c_scale: T,
    pub e_scale: T,
    /// `M^R`, `M^S`, `M^T`.
    pub forms: [RestrictedForm<T>; 3],
}

impl<T: Scalar> OperatorDecomposition<T> {
    /// `C + E x₀² + Σ_i z_iᵀ M_i z_i`, with `z_i` the free entries of direction `i`.
    pub fn reduced_lw(&self, g: &GradientVector<T>) -> T {
        let mut acc = self.c_term + self.e_term * g.x0 * g.x0;
        for (i, rf) in self.forms.iter().enumerate() {
            let z = [g.dirs[i][rf.free[0]], g.dirs[i][rf.free[1]]];
            acc += rf.matrix.quadratic_form(z);
        }
        acc
    }
}

/// Third derivatives of the second fundamental form that enter `Lw` at a
/// critical point (fully symmetric by Codazzi).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradientVector<T> {
    /// `h_{12;3}`
    pub x0: T,
    /// `dirs[i][k] = h_{kk;i}`
    pub dirs: [[T; 3]; 3],
}

impl<T: Scalar> GradientVector<T> {
    pub fn zero() -> Self {
        Self {
            x0: T::zero(),
            dirs: [[T::zero(); 3]; 3],
        }
    }

    /// From the reduced coordinates `x₁ = (h_{22;1}, h_{33;1})`,
    /// `x₂ = (h_{11;2}, h_{33;2})`, `x₃ = (h_{11;3}, h_{22;3})`, filling in
    /// `h_{11;1}`, `h_{22;2}`, `h_{33;3}` from the critical-point identities.
    pub fn from_reduced(x0: T, x1: [T; 2], x2: [T; 2], x3: [T; 2], w_grad: &[T; 3]) -> Self {
        let [wa, wb, wc] = *w_grad;
        let h111 = -(wb * x1[0] + wc * x1[1]) / wa;
        let h222 = -(wa * x2[0] + wc * x2[1]) / wb;
        let h333 = -(wa * x3[0] + wb * x3[1]) / wc;
        Self {
            x0,
            dirs: [
                [h111, x1[0], x1[1]],
                [x2[0], h222, x2[1]],
                [x3[0], x3[1], h333],
            ],
        }
    }

    /// Orthogonal projection of each direction onto `Σ_k w_k h_{kk;i} = 0`.
    pub fn project_to_critical(&mut self, w_grad: &[T; 3]) {
        let gg: T = w_grad.iter().map(|g| *g * *g).sum();
        if gg == T::zero() {
            return;
        }
        for dir in &mut self.dirs {
            let dot: T = (0..3).map(|k| w_grad[k] * dir[k]).sum();
            for k in 0..3 {
                dir[k] -= dot / gg * w_grad[k];
            }
        }
    }

    /// Largest `|Σ_k w_k h_{kk;i}|` over the three directions.
    pub fn critical_residual(&self, w_grad: &[T; 3]) -> T {
        self.dirs
            .iter()
            .map(|d| (0..3).map(|k| w_grad[k] * d[k]).sum::<T>().abs())
            .fold(T::zero(), T::max)
    }
}

/// Constant terms `C_w` in any dimension.
pub fn constant_terms<T: Scalar, const N: usize>(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    p: &CurvaturePoint<T, N>,
) -> Result<T> {
    let f = speed.eval_jet2(p)?;
    let w = quantity.eval_jet2(p)?;
    // Divided differences are not needed here.
    let jets = CriticalPointJets {
        point: *p,
        speed: f,
        quantity: w,
        speed_dd: [[T::zero(); N]; N],
        quantity_dd: [[T::zero(); N]; N],
    };
    Ok(jets.constant_term())
}

pub fn e_term<T: Scalar>(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    p: &CurvaturePoint<T, 3>,
    eps_dd: f64,
) -> Result<T> {
    Ok(CriticalPointJets::new(speed, quantity, p, eps_dd)?.e_term())
}

/// `M^R`, `M^S` or `M^T` for `direction` 0, 1 or 2, pivoting on the largest
/// `|w_k|`. Fails with [`CertError::GradientTooSmall`] near critical points
/// of `w` in the curvature variables (e.g. the umbilic ray).
pub fn restricted_form<T: Scalar>(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    p: &CurvaturePoint<T, 3>,
    direction: usize,
    tol: &Tolerances,
) -> Result<RestrictedForm<T>> {
    let jets = CriticalPointJets::new(speed, quantity, p, tol.eps_dd)?;
    jets.check_gradient(tol.delta_grad)?;
    jets.restricted_form(direction)
}

pub fn full_lw<T: Scalar>(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    p: &CurvaturePoint<T, 3>,
    g: &GradientVector<T>,
    eps_dd: f64,
) -> Result<T> {
    Ok(CriticalPointJets::new(speed, quantity, p, eps_dd)?.full_lw(g))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Piece {
    C,
    E,
    R,
    S,
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The sufficient conditions hold, so `Lw ≤ 0`.
    Nonpositive,
    /// At least one sufficient condition fails. This does not show `Lw > 0`.
    NotCertified,
    Indeterminate,
}

/// Per-piece margins; each is non-negative exactly when its condition holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PieceMargins<T> {
    pub c: T,
    pub e: T,
    pub r: T,
    pub s: T,
    pub t: T,
}

impl<T: Scalar> PieceMargins<T> {
    pub fn min(&self) -> T {
        self.c.min(self.e).min(self.r).min(self.s).min(self.t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate<T> {
    pub verdict: Verdict,
    pub failing: Vec<Piece>,
    pub reason: Option<String>,
    pub margins: Option<PieceMargins<T>>,
}

impl<T: Scalar> Certificate<T> {
    fn indeterminate(reason: String) -> Self {
        Self {
            verdict: Verdict::Indeterminate,
            failing: Vec::new(),
            reason: Some(reason),
            margins: None,
        }
    }

    /// Smallest piece margin, zero when indeterminate.
    pub fn margin(&self) -> T {
        self.margins.map(|m| m.min()).unwrap_or_else(T::zero)
    }
}

fn scalar_margin<T: Scalar>(value: T, scale: T, tau: f64) -> T {
    if scale > T::zero() {
        T::lit(tau) - value / scale
    } else {
        T::lit(tau)
    }
}

impl<T: Scalar> OperatorDecomposition<T> {
    pub fn certificate(&self, tol: &Tolerances) -> Certificate<T> {
        let nsd = self.forms.map(|f| nsd_check(&f.matrix, tol.tau_nsd));
        let margins = PieceMargins {
            c: scalar_margin(self.c_term, self.c_scale, tol.tau),
            e: scalar_margin(self.e_term, self.e_scale, tol.tau),
            r: nsd[0].margin,
            s: nsd[1].margin,
            t: nsd[2].margin,
        };
        let failing: Vec<Piece> = [
            (Piece::C, margins.c),
            (Piece::E, margins.e),
            (Piece::R, margins.r),
            (Piece::S, margins.s),
            (Piece::T, margins.t),
        ]
        .into_iter()
        .filter(|(_, m)| *m < T::zero())
        .map(|(p, _)| p)
        .collect();
        Certificate {
            verdict: if failing.is_empty() {
                Verdict::Nonpositive
            } else {
                Verdict::NotCertified
            },
            failing,
            reason: None,
            margins: Some(margins),
        }
    }
}

impl<T: Scalar> CriticalPointJets<T, 3> {
    pub fn certificate(&self, tol: &Tolerances) -> Certificate<T> {
        match self.decompose(tol) {
            Ok(d) => d.certificate(tol),
            Err(e) => Certificate::indeterminate(e.to_string()),
        }
    }
}

/// Sufficient-condition check for `Lw ≤ 0` at a critical point of `w`.
/// Evaluation failures are reported as indeterminate.
pub fn lw_nonpositive<T: Scalar>(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    p: &CurvaturePoint<T, 3>,
    tol: &Tolerances,
) -> Certificate<T> {
    match CriticalPointJets::new(speed, quantity, p, tol.eps_dd) {
        Ok(j) => j.certificate(tol),
        Err(e) => Certificate::indeterminate(e.to_string()),
    }
}
