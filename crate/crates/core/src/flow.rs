//! Flow presets and the end-to-end checks run for each of them.
//!
//! A preset bundles a normal velocity `F`, the pinching quantity `φ`, the
//! quantity `ψ` whose maximum should not increase, the pinching constant of
//! the initial cone and, when known, the sublevel threshold `h` on `φ`.
//! [`verify_flow`] samples the two inclusion chains
//! `S_C ⊂ S_h ⊂ S_{Lφ}` and `S_h ⊂ S_{Lψ}`, checks that `ψ` has vanishing
//! constant terms and sweeps the pinching-ratio bound.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{CertError, Result};
use crate::function::{Builtin, SymmetricFunction};
use crate::operator::CriticalPointJets;
use crate::point::CurvaturePoint;
use crate::region::{scan_max, verify_inclusion, InclusionReport, RegionSpec, ScanResult};
use crate::sampling::{log_uniform_points, Sampler};
use crate::scalar::Scalar;

/// Largest accepted relative constant term for a vanishing function.
pub const VANISHING_TOLERANCE: f64 = 1e-8;

/// Log-uniform box for random vanishing and pinching checks.
pub const RANDOM_BOX: (f64, f64) = (0.1, 10.0);

/// Default lattice resolution added to the Monte-Carlo scan when deriving a
/// threshold. Divisible by 4 and 5 so the cone vertices are lattice points.
pub const DERIVE_GRID_RESOLUTION: u32 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlowName {
    H3,
    A2,
    K,
}

impl FlowName {
    pub const ALL: [FlowName; 3] = [FlowName::H3, FlowName::A2, FlowName::K];
}

impl fmt::Display for FlowName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowName::H3 => "H3",
            FlowName::A2 => "A2",
            FlowName::K => "K",
        })
    }
}

impl FromStr for FlowName {
    type Err = CertError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H3" => Ok(FlowName::H3),
            "A2" => Ok(FlowName::A2),
            "K" => Ok(FlowName::K),
            _ => Err(CertError::Unknown(format!(
                "flow {s:?} (expected H3, A2 or K)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowPreset {
    pub name: FlowName,
    pub speed: SymmetricFunction,
    pub phi: SymmetricFunction,
    pub psi: SymmetricFunction,
    pub pinch: f64,
    /// Known sublevel threshold on `φ`; derived by cone scan when absent.
    pub threshold: Option<f64>,
}

impl FlowPreset {
    pub fn get(name: FlowName) -> Self {
        match name {
            FlowName::H3 => Self {
                name,
                speed: SymmetricFunction::h3(),
                phi: Builtin::PhiH3.into(),
                psi: Builtin::PsiH3.into(),
                pinch: 2.0,
                threshold: Some(0.125),
            },
            FlowName::A2 => Self {
                name,
                speed: SymmetricFunction::a2(),
                phi: Builtin::PhiA2.into(),
                psi: Builtin::PsiA2.into(),
                pinch: 3.0,
                threshold: None,
            },
            FlowName::K => Self {
                name,
                speed: SymmetricFunction::k(),
                phi: Builtin::PhiK.into(),
                psi: Builtin::PsiK.into(),
                pinch: 2.0,
                threshold: None,
            },
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::get(name.parse()?))
    }

    pub fn cone(&self) -> RegionSpec {
        RegionSpec::cone(self.pinch)
    }

    /// `Σ_{i<j} (λ_i − λ_j)²/(λ_i λ_j)² F²` for this preset's velocity.
    pub fn pair_sum(&self) -> SymmetricFunction {
        SymmetricFunction::vanishing_sum_all(3, self.speed.clone())
    }
}

/// A pair-sum quantity `Σ_{(i,j) ∈ pairs} (λ_i − λ_j)²/(λ_i λ_j)² F²` in `n`
/// dimensions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingSumSpec {
    pub n: usize,
    /// 0-based, `i < j`, no repeats.
    pub pairs: Vec<(usize, usize)>,
    pub speed: SymmetricFunction,
}

impl VanishingSumSpec {
    pub fn new(n: usize, pairs: Vec<(usize, usize)>, speed: SymmetricFunction) -> Result<Self> {
        if n < 2 {
            return Err(CertError::InvalidArgument(format!("dimension {n} below 2")));
        }
        if pairs.is_empty() {
            return Err(CertError::InvalidArgument(
                "at least one pair is required".into(),
            ));
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if i >= j || j >= n {
                return Err(CertError::InvalidArgument(format!(
                    "pair ({i},{j}) invalid in dimension {n}"
                )));
            }
            if pairs[..k].contains(&(i, j)) {
                return Err(CertError::InvalidArgument(format!(
                    "pair ({i},{j}) repeated"
                )));
            }
        }
        speed.degree(n)?;
        Ok(Self { n, pairs, speed })
    }

    pub fn all_pairs(n: usize, speed: SymmetricFunction) -> Result<Self> {
        let pairs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, pairs, speed)
    }

    pub fn omitted(&self) -> usize {
        self.n * (self.n - 1) / 2 - self.pairs.len()
    }

    /// At most `n − 1` terms left out.
    pub fn within_omission_bound(&self) -> bool {
        self.omitted() < self.n
    }

    pub fn function(&self) -> SymmetricFunction {
        SymmetricFunction::VanishingSum {
            pairs: self.pairs.clone(),
            speed: Box::new(self.speed.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingReport {
    pub quantity: String,
    pub speed: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest `|C_v|` relative to the summed magnitudes of its terms.
    pub max_relative: f64,
    pub worst_point: Vec<f64>,
    pub tolerance: f64,
    pub passes: bool,
    pub omitted_pairs: Option<usize>,
    pub within_omission_bound: Option<bool>,
    pub note: &'static str,
}

fn residual_scan<const N: usize>(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    trials: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let mut worst = (0.0f64, vec![]);
    for p in log_uniform_points::<N>(trials, seed, RANDOM_BOX.0, RANDOM_BOX.1) {
        let jets = CriticalPointJets::<f64, N>::new(speed, quantity, &p, 0.0)?;
        let c = jets.constant_term();
        let scale = jets.constant_term_scale();
        let rel = if scale > 0.0 {
            c.abs() / scale
        } else {
            c.abs()
        };
        if rel > worst.0 || worst.1.is_empty() {
            worst = (rel, p.lambdas().to_vec());
        }
    }
    Ok(worst)
}

/// Relative constant term of `quantity` under `speed` at `trials`
/// log-uniform points of `[0.1, 10]^n`.
pub fn check_vanishing_quantity(
    speed: &SymmetricFunction,
    quantity: &SymmetricFunction,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<VanishingReport> {
    let (max_relative, worst_point) = match n {
        2 => residual_scan::<2>(speed, quantity, trials, seed)?,
        3 => residual_scan::<3>(speed, quantity, trials, seed)?,
        4 => residual_scan::<4>(speed, quantity, trials, seed)?,
        5 => residual_scan::<5>(speed, quantity, trials, seed)?,
        6 => residual_scan::<6>(speed, quantity, trials, seed)?,
        7 => residual_scan::<7>(speed, quantity, trials, seed)?,
        8 => residual_scan::<8>(speed, quantity, trials, seed)?,
        _ => {
            return Err(CertError::InvalidArgument(format!(
                "vanishing checks support 2 ≤ n ≤ 8, got {n}"
            )))
        }
    };
    Ok(VanishingReport {
        quantity: quantity.to_string(),
        speed: speed.to_string(),
        n,
        trials,
        seed,
        max_relative,
        worst_point,
        tolerance: VANISHING_TOLERANCE,
        passes: max_relative < VANISHING_TOLERANCE,
        omitted_pairs: None,
        within_omission_bound: None,
        note: "numerical evidence at sampled points, not a proof",
    })
}

pub fn check_vanishing(
    spec: &VanishingSumSpec,
    trials: usize,
    seed: u64,
) -> Result<VanishingReport> {
    let mut rep = check_vanishing_quantity(&spec.speed, &spec.function(), spec.n, trials, seed)?;
    rep.omitted_pairs = Some(spec.omitted());
    rep.within_omission_bound = Some(spec.within_omission_bound());
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PinchingBound {
    pub ratio: f64,
    /// `1 + C λ_max / F`
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks `1 ≤ λ_max/λ_min ≤ 1 + C λ_max / F` at `p`, given `psi(p) ≤ C²`.
pub fn pinching_bound_check<T: Scalar, const N: usize>(
    speed: &SymmetricFunction,
    psi: &SymmetricFunction,
    p: &CurvaturePoint<T, N>,
    c: f64,
) -> Result<PinchingBound> {
    if !(c >= 0.0) {
        return Err(CertError::PreconditionFailed(format!(
            "C = {c} must be non-negative"
        )));
    }
    let v = psi.value(p)?.to_f64_lossy();
    if v > c * c * (1.0 + 1e-12) {
        return Err(CertError::PreconditionFailed(format!(
            "ψ = {v} exceeds C² = {}",
            c * c
        )));
    }
    let f = speed.value(p)?.to_f64_lossy();
    let ratio = p.pinching_ratio().to_f64_lossy();
    let bound = 1.0 + c * p.max().to_f64_lossy() / f;
    let slack = bound - ratio;
    Ok(PinchingBound {
        ratio,
        bound,
        slack,
        holds: ratio >= 1.0 && slack >= -1e-12 * bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PinchingSweepReport {
    pub quantity: String,
    pub trials: usize,
    pub seed: u64,
    pub failures: usize,
    /// Smallest `slack / bound`.
    pub min_relative_slack: f64,
    pub worst_point: [f64; 3],
}

/// [`pinching_bound_check`] with `C = √ψ(p)` at random points.
pub fn pinching_sweep(
    speed: &SymmetricFunction,
    psi: &SymmetricFunction,
    trials: usize,
    seed: u64,
) -> Result<PinchingSweepReport> {
    let mut failures = 0;
    let mut worst = (f64::INFINITY, [0.0; 3]);
    for p in log_uniform_points::<3>(trials, seed, RANDOM_BOX.0, RANDOM_BOX.1) {
        let c = psi.value(&p)?.sqrt();
        let b = pinching_bound_check(speed, psi, &p, c)?;
        if !b.holds {
            failures += 1;
        }
        let rel = b.slack / b.bound;
        if rel < worst.0 {
            worst = (rel, *p.lambdas());
        }
    }
    Ok(PinchingSweepReport {
        quantity: psi.to_string(),
        trials,
        seed,
        failures,
        min_relative_slack: worst.0,
        worst_point: worst.1,
    })
}

/// Rounds `x > 0` up to `digits` significant digits.
pub fn round_up_significant(x: f64, digits: i32) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return x;
    }
    let e = x.log10().floor() as i32;
    let p = digits - 1 - e;
    let scale = 10f64.powi(p.abs());
    // Dividing by an exact power of ten keeps e.g. 59.89 exact; products like
    // 0.125·10⁴ can land a few ulps above an integer.
    if p >= 0 {
        (x * scale * (1.0 - 1e-12)).ceil() / scale
    } else {
        (x / scale * (1.0 - 1e-12)).ceil() * scale
    }
}

/// Largest denominator tried by [`snap_rational`].
pub const MAX_DENOMINATOR: i64 = 1000;

/// `p/q` with `q ≤ MAX_DENOMINATOR` within `1e-9` relative of `x`, smallest
/// `q` first.
pub fn snap_rational(x: f64) -> Option<(i64, i64)> {
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((p / q as f64 - x).abs() <= 1e-9 * x && p >= 1.0).then_some((p as i64, q))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// The scanned maximum matched a simple fraction, used as is.
    Rational { numerator: i64, denominator: i64 },
    /// No fraction matched; rounded up at the fourth significant digit.
    RoundedUp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeriveConfig {
    pub samples: u64,
    pub seed: u64,
    pub grid: Option<u32>,
    #[serde(skip_serializing)]
    pub workers: usize,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub flow: FlowName,
    pub quantity: String,
    pub pinch: f64,
    pub raw_max: f64,
    /// Never below `raw_max`; see [`derive_threshold`].
    pub threshold: f64,
    pub rule: ThresholdRule,
    /// `raw_max` rounded up at the fourth significant digit, for reference.
    pub rounded_up: f64,
    pub argmax: [f64; 3],
    /// `None` when no Monte-Carlo sample fell in the cone.
    pub monte_carlo: Option<ScanResult>,
    pub grid: Option<ScanResult>,
    pub config: DeriveConfig,
}

/// `h` from the maximum of `φ` over the sampled pinched cone.
///
/// The certificate sets meet the cone exactly at its `φ`-maximising vertex,
/// so any `h` above the true maximum admits genuine counterexamples to
/// `S_h ⊂ S_{Lφ}`. When the scanned maximum (which includes the lattice
/// vertices) is a simple fraction, that fraction is the threshold; otherwise
/// the maximum is rounded up at the fourth significant digit.
pub fn derive_threshold(preset: &FlowPreset, cfg: &DeriveConfig) -> Result<ThresholdReport> {
    let cone = preset.cone();
    let scan = |sampler: Sampler| -> Result<Option<ScanResult>> {
        match scan_max(&preset.phi, &cone, &sampler, &cfg.tolerances, cfg.workers) {
            Ok(r) => Ok(Some(r)),
            Err(CertError::EmptyRegion(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mc = scan(Sampler::MonteCarlo {
        count: cfg.samples,
        seed: cfg.seed,
    })?;
    let grid = match cfg.grid {
        Some(resolution) => scan(Sampler::Grid { resolution })?,
        None => None,
    };
    let best = [&mc, &grid]
        .into_iter()
        .flatten()
        .fold(None::<&ScanResult>, |b, r| match b {
            Some(b) if b.max >= r.max => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| CertError::EmptyRegion(format!("no sampled point lies in {cone}")))?;
    let (raw_max, argmax) = (best.max, best.argmax);
    let (threshold, rule) = match snap_rational(raw_max) {
        Some((numerator, denominator)) => (
            (numerator as f64 / denominator as f64).max(raw_max),
            ThresholdRule::Rational {
                numerator,
                denominator,
            },
        ),
        None => (round_up_significant(raw_max, 4), ThresholdRule::RoundedUp),
    };
    Ok(ThresholdReport {
        flow: preset.name,
        quantity: preset.phi.to_string(),
        pinch: preset.pinch,
        raw_max,
        threshold,
        rule,
        rounded_up: round_up_significant(raw_max, 4),
        argmax,
        monte_carlo: mc,
        grid,
        config: cfg.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowConfig {
    pub samples: u64,
    pub seed: u64,
    /// Adds a lattice run of the inclusion chains.
    pub grid: Option<u32>,
    pub threshold_override: Option<f64>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing)]
    pub workers: usize,
    pub vanishing_trials: usize,
    pub pinching_trials: usize,
    /// Lattice resolution used when a threshold has to be derived.
    pub derive_grid: Option<u32>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
            grid: None,
            threshold_override: None,
            tolerances: Tolerances::default(),
            workers: 1,
            vanishing_trials: 100_000,
            pinching_trials: 100_000,
            derive_grid: Some(DERIVE_GRID_RESOLUTION),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Preset,
    Override,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowReport {
    pub flow: FlowName,
    pub speed: String,
    pub phi: String,
    pub psi: String,
    pub pinch: f64,
    pub threshold: f64,
    pub threshold_source: ThresholdSource,
    pub derivation: Option<ThresholdReport>,
    pub inclusions: Vec<InclusionReport>,
    pub vanishing: VanishingReport,
    pub pinching: PinchingSweepReport,
    pub chains_verified: bool,
    pub verified: bool,
}

impl FlowReport {
    pub fn violation_count(&self) -> u64 {
        self.inclusions.iter().map(|r| r.violation_count).sum()
    }

    pub fn indeterminate_count(&self) -> u64 {
        self.inclusions.iter().map(|r| r.indeterminate_count).sum()
    }
}

/// Threshold for a run: override, then preset, then derivation.
pub fn resolve_threshold(
    preset: &FlowPreset,
    cfg: &FlowConfig,
) -> Result<(f64, ThresholdSource, Option<ThresholdReport>)> {
    if let Some(h) = cfg.threshold_override {
        return Ok((h, ThresholdSource::Override, None));
    }
    if let Some(h) = preset.threshold {
        return Ok((h, ThresholdSource::Preset, None));
    }
    let rep = derive_threshold(
        preset,
        &DeriveConfig {
            samples: cfg.samples,
            seed: cfg.seed,
            grid: cfg.derive_grid,
            workers: cfg.workers,
            tolerances: cfg.tolerances,
        },
    )?;
    Ok((rep.threshold, ThresholdSource::Derived, Some(rep)))
}

/// Both inclusion chains on every configured sampler, the vanishing check of
/// `ψ` and the pinching-ratio sweep. The verdict is their conjunction.
pub fn verify_flow(preset: &FlowPreset, cfg: &FlowConfig) -> Result<FlowReport> {
    let (h, source, derivation) = resolve_threshold(preset, cfg)?;
    let cone = preset.cone();
    let sub = RegionSpec::sublevel(preset.phi.clone(), h);
    let cert_phi = RegionSpec::certificate(preset.speed.clone(), preset.phi.clone());
    let cert_psi = RegionSpec::certificate(preset.speed.clone(), preset.psi.clone());

    let mut samplers = vec![Sampler::MonteCarlo {
        count: cfg.samples,
        seed: cfg.seed,
    }];
    if let Some(resolution) = cfg.grid {
        samplers.push(Sampler::Grid { resolution });
    }
    let mut inclusions = Vec::new();
    for s in &samplers {
        for (inner, outer) in [(&cone, &sub), (&sub, &cert_phi), (&sub, &cert_psi)] {
            inclusions.push(verify_inclusion(
                inner,
                outer,
                s,
                &cfg.tolerances,
                cfg.workers,
            )?);
        }
    }
    let vanishing = check_vanishing_quantity(
        &preset.speed,
        &preset.psi,
        3,
        cfg.vanishing_trials,
        cfg.seed,
    )?;
    let pinching = pinching_sweep(
        &preset.speed,
        &preset.pair_sum(),
        cfg.pinching_trials,
        cfg.seed,
    )?;
    let chains_verified = inclusions.iter().all(|r| r.verified);
    let verified = chains_verified && vanishing.passes && pinching.failures == 0;
    Ok(FlowReport {
        flow: preset.name,
        speed: preset.speed.to_string(),
        phi: preset.phi.to_string(),
        psi: preset.psi.to_string(),
        pinch: preset.pinch,
        threshold: h,
        threshold_source: source,
        derivation,
        inclusions,
        vanishing,
        pinching,
        chains_verified,
        verified,
    })
}
