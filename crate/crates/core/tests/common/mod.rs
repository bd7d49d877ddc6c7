//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls into the jet arithmetic or the hyperplane
//! restriction it is meant to check.
#![allow(dead_code)]

use pinch_core::operator::{CriticalPointJets, GradientVector};
use pinch_core::sampling::log_uniform_points;
use pinch_core::{Builtin, CurvaturePoint, SymmetricFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const BUILTINS: [Builtin; 10] = [
    Builtin::H,
    Builtin::HPow(3.0),
    Builtin::A2,
    Builtin::K,
    Builtin::PhiH3,
    Builtin::PsiH3,
    Builtin::PhiA2,
    Builtin::PsiA2,
    Builtin::PhiK,
    Builtin::PsiK,
];

pub fn random_points(count: usize, seed: u64) -> Vec<CurvaturePoint<f64, 3>> {
    log_uniform_points::<3>(count, seed, 0.1, 10.0).collect()
}

fn value_at(f: &SymmetricFunction, l: [f64; 3]) -> f64 {
    f.value(&CurvaturePoint::new(l).unwrap()).unwrap()
}

/// Central differences of values only, step `h·λ_i`: gradient from the
/// two-point stencil, Hessian from the three- and four-point stencils.
fn central_differences(
    f: &SymmetricFunction,
    p: &[f64; 3],
    rel_step: f64,
) -> ([f64; 3], [[f64; 3]; 3]) {
    let h: [f64; 3] = p.map(|x| rel_step * x);
    let shifted = |moves: &[(usize, f64)]| {
        let mut q = *p;
        for &(k, s) in moves {
            q[k] += s * h[k];
        }
        value_at(f, q)
    };
    let mut grad = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    let f0 = value_at(f, *p);
    for i in 0..3 {
        grad[i] = (shifted(&[(i, 1.0)]) - shifted(&[(i, -1.0)])) / (2.0 * h[i]);
        hess[i][i] = (shifted(&[(i, 1.0)]) - 2.0 * f0 + shifted(&[(i, -1.0)])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (shifted(&[(i, 1.0), (j, 1.0)])
                - shifted(&[(i, 1.0), (j, -1.0)])
                - shifted(&[(i, -1.0), (j, 1.0)])
                + shifted(&[(i, -1.0), (j, -1.0)]))
                / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    (grad, hess)
}

/// Central differences at steps `2e-3·λ` and `1e-3·λ`, combined by one
/// Richardson step (error O(h⁴)).
pub fn finite_differences(f: &SymmetricFunction, p: &[f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let (g1, h1) = central_differences(f, p, 2e-3);
    let (g2, h2) = central_differences(f, p, 1e-3);
    let rich = |coarse: f64, fine: f64| (4.0 * fine - coarse) / 3.0;
    (
        std::array::from_fn(|i| rich(g1[i], g2[i])),
        std::array::from_fn(|i| std::array::from_fn(|j| rich(h1[i][j], h2[i][j]))),
    )
}

/// Largest entrywise error relative to the largest entry of `expected`.
pub fn rel_err<const K: usize>(got: &[f64; K], expected: &[f64; K]) -> f64 {
    rel_err_floor(got, expected, 0.0)
}

/// As [`rel_err`], with the scale bounded below by `floor`.
pub fn rel_err_floor<const K: usize>(got: &[f64; K], expected: &[f64; K], floor: f64) -> f64 {
    let scale = expected.iter().fold(floor, |m, x| m.max(x.abs()));
    let err = got
        .iter()
        .zip(expected)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

pub fn flatten(m: &[[f64; 3]; 3]) -> [f64; 9] {
    std::array::from_fn(|k| m[k / 3][k % 3])
}

/// The closed-form matrix entries `(m11, m12, m22)` of the restricted forms,
/// written out directly in `a, b, c` and the partials of `F` and `w`, with
/// the elimination of `h_{11;1}`, `h_{22;2}`, `h_{33;3}` respectively.
/// Returns each entry together with the sum of magnitudes of its terms.
pub fn corollary_entries(
    lam: [f64; 3],
    fg: [f64; 3],
    fh: [[f64; 3]; 3],
    wg: [f64; 3],
    wh: [[f64; 3]; 3],
    direction: usize,
) -> [(f64, f64); 3] {
    let [a, b, c] = lam;
    let [fa, fb, fc] = fg;
    let [wa, wb, wc] = wg;
    let (faa, fbb, fcc, fab, fac, fbc) =
        (fh[0][0], fh[1][1], fh[2][2], fh[0][1], fh[0][2], fh[1][2]);
    let (waa, wbb, wcc, wab, wac, wbc) =
        (wh[0][0], wh[1][1], wh[2][2], wh[0][1], wh[0][2], wh[1][2]);
    let sum =
        |terms: &[f64]| -> (f64, f64) { (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum()) };
    match direction {
        0 => [
            sum(&[
                2.0 * (fa * wb - fb * wa) / (a - b),
                faa * wb * wb / wa,
                -2.0 * fab * wb,
                fbb * wa,
                -fa * waa * wb * wb / (wa * wa),
                2.0 * fa * wab * wb / wa,
                -fa * wbb,
            ]),
            sum(&[
                faa * wb * wc / wa,
                -fab * wc,
                -fac * wb,
                fbc * wa,
                -fa * waa * wb * wc / (wa * wa),
                fa * wab * wc / wa,
                fa * wac * wb / wa,
                -fa * wbc,
            ]),
            sum(&[
                2.0 * (fa * wc - fc * wa) / (a - c),
                faa * wc * wc / wa,
                -2.0 * fac * wc,
                fcc * wa,
                -fa * waa * wc * wc / (wa * wa),
                2.0 * fa * wac * wc / wa,
                -fa * wcc,
            ]),
        ],
        1 => [
            sum(&[
                2.0 * (fa * wb - fb * wa) / (a - b),
                faa * wb,
                -2.0 * fab * wa,
                fbb * wa * wa / wb,
                -fb * waa,
                2.0 * fb * wab * wa / wb,
                -fb * wbb * wa * wa / (wb * wb),
            ]),
            sum(&[
                -fab * wc,
                fac * wb,
                fbb * wa * wc / wb,
                -fbc * wa,
                fb * wab * wc / wb,
                -fb * wac,
                -fb * wbb * wa * wc / (wb * wb),
                fb * wbc * wa / wb,
            ]),
            sum(&[
                2.0 * (fb * wc - fc * wb) / (b - c),
                fbb * wc * wc / wb,
                -2.0 * fbc * wc,
                fcc * wb,
                -fb * wbb * wc * wc / (wb * wb),
                2.0 * fb * wbc * wc / wb,
                -fb * wcc,
            ]),
        ],
        _ => [
            sum(&[
                2.0 * (fa * wc - fc * wa) / (a - c),
                faa * wc,
                -2.0 * fac * wa,
                fcc * wa * wa / wc,
                -fc * waa,
                2.0 * fc * wac * wa / wc,
                -fc * wcc * wa * wa / (wc * wc),
            ]),
            sum(&[
                fab * wc,
                -fac * wb,
                -fbc * wa,
                fcc * wa * wb / wc,
                -fc * wab,
                fc * wac * wb / wc,
                fc * wbc * wa / wc,
                -fc * wcc * wa * wb / (wc * wc),
            ]),
            sum(&[
                2.0 * (fb * wc - fc * wb) / (b - c),
                fbb * wc,
                -2.0 * fbc * wb,
                fcc * wb * wb / wc,
                -fc * wbb,
                2.0 * fc * wbc * wb / wc,
                -fc * wcc * wb * wb / (wc * wc),
            ]),
        ],
    }
}

/// A gradient vector drawn from N(0,1)⁹ × N(0,1) and projected onto the
/// critical-point identities.
pub fn random_critical_gradient(rng: &mut ChaCha8Rng, w_grad: &[f64; 3]) -> GradientVector<f64> {
    let mut g = GradientVector {
        x0: rng.sample(StandardNormal),
        dirs: std::array::from_fn(|_| std::array::from_fn(|_| rng.sample(StandardNormal))),
    };
    g.project_to_critical(w_grad);
    g
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Magnitude of the unreduced sum at `g`: every product of a coefficient and
/// two gradient entries counted with its absolute value.
pub fn lw_scale(j: &CriticalPointJets<f64, 3>, g: &GradientVector<f64>) -> f64 {
    let fg = &j.speed.gradient;
    let wg = &j.quantity.gradient;
    let mut s = j.constant_term_scale() + j.e_term_scale() * g.x0 * g.x0;
    for i in 0..3 {
        let y = g.dirs[i];
        for k in 0..3 {
            for l in 0..3 {
                let coeff = (wg[i] * j.speed.hessian[k][l]).abs()
                    + (fg[i] * j.quantity.hessian[k][l]).abs();
                s += coeff * (y[k] * y[l]).abs();
            }
            if k != i {
                let dd =
                    2.0 * ((wg[k] * j.speed_dd[i][k]).abs() + (fg[k] * j.quantity_dd[i][k]).abs());
                s += dd * y[k] * y[k];
            }
        }
    }
    s
}

/// Max relative reconstruction error of the reduced decomposition against
/// the unreduced sum over `trials` random (point, gradient) pairs.
pub fn reconstruction_error(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    trials: usize,
    seed: u64,
) -> f64 {
    let tol = pinch_core::Tolerances::default();
    let mut r = rng(seed ^ 0x5eed);
    let mut worst = 0.0f64;
    for p in random_points(trials, seed) {
        let j = CriticalPointJets::new(speed, quantity, &p, tol.eps_dd).unwrap();
        let d = j.decompose(&tol).unwrap();
        let g = random_critical_gradient(&mut r, &j.quantity.gradient);
        let full = j.full_lw(&g);
        let reduced = d.reduced_lw(&g);
        worst = worst.max((full - reduced).abs() / lw_scale(&j, &g));
    }
    worst
}

/// Max relative difference between restricted forms (paper's pivot) and
/// [`corollary_entries`].
pub fn corollary_error(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    trials: usize,
    seed: u64,
) -> f64 {
    let mut worst = 0.0f64;
    for p in random_points(trials, seed) {
        let j = CriticalPointJets::new(speed, quantity, &p, 0.0).unwrap();
        for dir in 0..3 {
            let m = j.restricted_form_with_pivot(dir, dir).unwrap().matrix;
            let expected = corollary_entries(
                *p.lambdas(),
                j.speed.gradient,
                j.speed.hessian,
                j.quantity.gradient,
                j.quantity.hessian,
                dir,
            );
            for (got, (want, scale)) in [m.m11, m.m12, m.m22].into_iter().zip(expected) {
                worst = worst.max((got - want).abs() / scale);
            }
        }
    }
    worst
}

/// Largest `|∇f − FD|` and `|∇²f − FD|`, each relative to the largest jet entry,
/// over `count` points.
pub fn jet_fd_error(f: &SymmetricFunction, count: usize, seed: u64) -> f64 {
    let mut worst = 0.0f64;
    for p in random_points(count, seed) {
        let jet = f.eval_jet2(&p).unwrap();
        let (g, h) = finite_differences(f, p.lambdas());
        // A vanishing Hessian is measured in units of |∇f| / ‖λ‖∞.
        let floor = jet.gradient.iter().fold(0.0f64, |m, x| m.max(x.abs())) / p.max();
        worst = worst.max(rel_err(&g, &jet.gradient)).max(rel_err_floor(
            &flatten(&h),
            &flatten(&jet.hessian),
            floor,
        ));
    }
    worst
}

/// Largest relative violation of `Σ λ_i f_i = d f` and
/// `Σ_j λ_j f_ij = (d − 1) f_i` over `count` points.
pub fn euler_error(f: &SymmetricFunction, count: usize, seed: u64) -> f64 {
    let d = f.degree(3).unwrap();
    let mut worst = 0.0f64;
    for p in random_points(count, seed) {
        let jet = f.eval_jet2(&p).unwrap();
        let l = p.lambdas();
        let first: f64 = (0..3).map(|i| l[i] * jet.gradient[i]).sum();
        let scale1: f64 =
            (0..3).map(|i| (l[i] * jet.gradient[i]).abs()).sum::<f64>() + jet.value.abs();
        worst = worst.max((first - d * jet.value).abs() / scale1.max(f64::MIN_POSITIVE));
        for i in 0..3 {
            let second: f64 = (0..3).map(|j| l[j] * jet.hessian[i][j]).sum();
            let scale2: f64 = (0..3)
                .map(|j| (l[j] * jet.hessian[i][j]).abs())
                .sum::<f64>()
                + jet.gradient[i].abs();
            worst = worst
                .max((second - (d - 1.0) * jet.gradient[i]).abs() / scale2.max(f64::MIN_POSITIVE));
        }
    }
    worst
}
