//! Region membership on the curvature simplex and sampled inclusion checks.

use std::fmt;

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{CertError, Result};
use crate::function::SymmetricFunction;
use crate::operator::{CriticalPointJets, Piece, Verdict};
use crate::sampling::{map_chunks, Sampler};
use crate::Point3;

/// Violations kept verbatim in a report; the count is always exact.
pub const MAX_REPORTED_VIOLATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    /// `max λ / min λ ≤ pinch`.
    PinchedCone { pinch: f64 },
    /// `0 < quantity ≤ threshold`.
    Sublevel {
        quantity: SymmetricFunction,
        threshold: f64,
    },
    /// Points where the sufficient conditions for `L quantity ≤ 0` under the
    /// flow with normal velocity `speed` hold.
    Certificate {
        speed: SymmetricFunction,
        quantity: SymmetricFunction,
    },
}

impl RegionSpec {
    pub fn cone(pinch: f64) -> Self {
        RegionSpec::PinchedCone { pinch }
    }

    pub fn sublevel(quantity: SymmetricFunction, threshold: f64) -> Self {
        RegionSpec::Sublevel {
            quantity,
            threshold,
        }
    }

    pub fn certificate(speed: SymmetricFunction, quantity: SymmetricFunction) -> Self {
        RegionSpec::Certificate { speed, quantity }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegionSpec::PinchedCone { pinch } if !(*pinch >= 1.0) => Err(
                CertError::InvalidArgument(format!("pinch {pinch} must be at least 1")),
            ),
            RegionSpec::Sublevel { threshold, .. } if !(*threshold > 0.0) => Err(
                CertError::InvalidArgument(format!("threshold {threshold} must be positive")),
            ),
            _ => Ok(()),
        }
    }

    pub fn classify(&self, p: &Point3, tol: &Tolerances) -> Classified {
        match self {
            RegionSpec::PinchedCone { pinch } => {
                let ratio = p.pinching_ratio();
                Classified::determinate(ratio <= *pinch, pinch - ratio)
            }
            RegionSpec::Sublevel {
                quantity,
                threshold,
            } => match quantity.value(p) {
                Ok(q) if q <= tol.eps_umbilic => Classified::indeterminate(),
                Ok(q) => Classified::determinate(q <= *threshold, (threshold - q) / threshold),
                Err(_) => Classified::indeterminate(),
            },
            RegionSpec::Certificate { speed, quantity } => {
                match CriticalPointJets::new(speed, quantity, p, tol.eps_dd) {
                    Ok(j) => {
                        let cert = j.certificate(tol);
                        let margin = cert.margin();
                        match cert.verdict {
                            Verdict::Nonpositive => Classified::determinate(true, margin),
                            Verdict::NotCertified => Classified {
                                membership: Membership::Out,
                                margin,
                                failing: cert.failing,
                            },
                            Verdict::Indeterminate => Classified::indeterminate(),
                        }
                    }
                    Err(_) => Classified::indeterminate(),
                }
            }
        }
    }
}

impl fmt::Display for RegionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionSpec::PinchedCone { pinch } => write!(f, "S_C{pinch}"),
            RegionSpec::Sublevel {
                quantity,
                threshold,
            } => write!(f, "S_h[{quantity} <= {threshold}]"),
            RegionSpec::Certificate { speed, quantity } => {
                write!(f, "S_L[{quantity} under {speed}]")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classified {
    pub membership: Membership,
    /// Positive inside, negative outside, zero when indeterminate.
    pub margin: f64,
    /// Failing certificate pieces, when `Out` of a certificate region.
    pub failing: Vec<Piece>,
}

impl Classified {
    fn determinate(inside: bool, margin: f64) -> Self {
        Self {
            membership: if inside {
                Membership::In
            } else {
                Membership::Out
            },
            margin,
            failing: Vec::new(),
        }
    }

    fn indeterminate() -> Self {
        Self {
            membership: Membership::Indeterminate,
            margin: 0.0,
            failing: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionMembership {
    pub region: String,
    pub membership: Membership,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionClassification {
    pub point: [f64; 3],
    pub memberships: Vec<RegionMembership>,
}

pub fn classify(point: &Point3, regions: &[RegionSpec], tol: &Tolerances) -> RegionClassification {
    RegionClassification {
        point: *point.lambdas(),
        memberships: regions
            .iter()
            .map(|r| {
                let c = r.classify(point, tol);
                RegionMembership {
                    region: r.to_string(),
                    membership: c.membership,
                    margin: c.margin,
                }
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub point: [f64; 3],
    pub inner_margin: f64,
    pub outer_margin: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failing: Vec<Piece>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionReport {
    pub inner: RegionSpec,
    pub outer: RegionSpec,
    pub label: String,
    pub sampler: Sampler,
    pub seed: Option<u64>,
    pub samples: u64,
    /// Points classified inside `inner`.
    pub inner_count: u64,
    /// Points skipped because either membership was indeterminate.
    pub indeterminate_count: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    /// Smallest outer margin over inner points; how close the inclusion is to failing.
    pub worst_margin: Option<f64>,
    pub worst_point: Option<[f64; 3]>,
    pub verified: bool,
}

#[derive(Default)]
struct ChunkStats {
    samples: u64,
    inner: u64,
    indeterminate: u64,
    violation_count: u64,
    violations: Vec<Violation>,
    worst: Option<(f64, [f64; 3])>,
}

fn take_min(slot: &mut Option<(f64, [f64; 3])>, cand: Option<(f64, [f64; 3])>) {
    if let Some((m, p)) = cand {
        match slot {
            Some((best, _)) if *best <= m => {}
            _ => *slot = Some((m, p)),
        }
    }
}

/// Samples the simplex and reports every point inside `inner` but outside
/// `outer`. Points with an indeterminate membership are counted, never
/// reported as violations.
pub fn verify_inclusion(
    inner: &RegionSpec,
    outer: &RegionSpec,
    sampler: &Sampler,
    tol: &Tolerances,
    workers: usize,
) -> Result<InclusionReport> {
    inner.validate()?;
    outer.validate()?;
    sampler.validate()?;
    let chunks = map_chunks(sampler, workers, |pts| {
        let mut st = ChunkStats::default();
        for p in pts {
            st.samples += 1;
            let ci = inner.classify(&p, tol);
            match ci.membership {
                Membership::Out => continue,
                Membership::Indeterminate => {
                    st.indeterminate += 1;
                    continue;
                }
                Membership::In => st.inner += 1,
            }
            let co = outer.classify(&p, tol);
            match co.membership {
                Membership::Indeterminate => st.indeterminate += 1,
                Membership::In => take_min(&mut st.worst, Some((co.margin, *p.lambdas()))),
                Membership::Out => {
                    take_min(&mut st.worst, Some((co.margin, *p.lambdas())));
                    st.violation_count += 1;
                    if st.violations.len() < MAX_REPORTED_VIOLATIONS {
                        st.violations.push(Violation {
                            point: *p.lambdas(),
                            inner_margin: ci.margin,
                            outer_margin: co.margin,
                            failing: co.failing,
                        });
                    }
                }
            }
        }
        st
    });

    let mut total = ChunkStats::default();
    for c in chunks {
        total.samples += c.samples;
        total.inner += c.inner;
        total.indeterminate += c.indeterminate;
        total.violation_count += c.violation_count;
        let room = MAX_REPORTED_VIOLATIONS - total.violations.len();
        total.violations.extend(c.violations.into_iter().take(room));
        take_min(&mut total.worst, c.worst);
    }
    Ok(InclusionReport {
        label: format!("{inner} ⊂ {outer}"),
        inner: inner.clone(),
        outer: outer.clone(),
        sampler: *sampler,
        seed: match sampler {
            Sampler::MonteCarlo { seed, .. } => Some(*seed),
            Sampler::Grid { .. } => None,
        },
        samples: total.samples,
        inner_count: total.inner,
        indeterminate_count: total.indeterminate,
        verified: total.violation_count == 0,
        violation_count: total.violation_count,
        violations: total.violations,
        worst_margin: total.worst.map(|w| w.0),
        worst_point: total.worst.map(|w| w.1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub max: f64,
    pub argmax: [f64; 3],
    /// Sampled points inside the region.
    pub members: u64,
    pub samples: u64,
}

/// Largest value of `quantity` over sampled members of `region`.
pub fn scan_max(
    quantity: &SymmetricFunction,
    region: &RegionSpec,
    sampler: &Sampler,
    tol: &Tolerances,
    workers: usize,
) -> Result<ScanResult> {
    region.validate()?;
    sampler.validate()?;
    let chunks = map_chunks(sampler, workers, |pts| {
        let mut best: Option<(f64, [f64; 3])> = None;
        let (mut members, mut samples) = (0u64, 0u64);
        for p in pts {
            samples += 1;
            if region.classify(&p, tol).membership != Membership::In {
                continue;
            }
            let Ok(q) = quantity.value(&p) else { continue };
            members += 1;
            match best {
                Some((b, _)) if b >= q => {}
                _ => best = Some((q, *p.lambdas())),
            }
        }
        (best, members, samples)
    });
    let mut best: Option<(f64, [f64; 3])> = None;
    let (mut members, mut samples) = (0, 0);
    for (b, m, s) in chunks {
        members += m;
        samples += s;
        if let Some((q, p)) = b {
            match best {
                Some((bq, _)) if bq >= q => {}
                _ => best = Some((q, p)),
            }
        }
    }
    let (max, argmax) = best.ok_or_else(|| CertError::EmptyRegion(region.to_string()))?;
    Ok(ScanResult {
        max,
        argmax,
        members,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Builtin;
    use crate::CurvaturePoint;

    fn proj(l: [f64; 3]) -> Point3 {
        CurvaturePoint::new(l).unwrap().project()
    }

    fn phi() -> SymmetricFunction {
        Builtin::PhiH3.into()
    }

    #[test]
    fn hand_classifications() {
        let tol = Tolerances::default();
        let cone = RegionSpec::cone(2.0);
        let sub = RegionSpec::sublevel(phi(), 0.125);

        let u = proj([1.0, 1.0, 1.0]);
        assert_eq!(cone.classify(&u, &tol).membership, Membership::In);
        assert_eq!(sub.classify(&u, &tol).membership, Membership::Indeterminate);

        let p = proj([2.0, 1.0, 1.0]);
        assert_eq!(p.lambdas(), &[0.5, 0.25, 0.25]);
        assert_eq!(cone.classify(&p, &tol).membership, Membership::In);
        assert_eq!(sub.classify(&p, &tol).membership, Membership::In);

        let p = proj([4.3, 2.3, 2.1]);
        assert_eq!(cone.classify(&p, &tol).membership, Membership::Out);
        assert_eq!(sub.classify(&p, &tol).membership, Membership::In);

        let p = proj([5.0, 1.0, 1.0]);
        assert!((phi().value(&p).unwrap() - 32.0 / 49.0).abs() < 1e-15);
        let c = sub.classify(&p, &tol);
        assert_eq!(c.membership, Membership::Out);
        assert!(c.margin < 0.0);
    }

    #[test]
    fn reflexive_inclusion_has_no_violations() {
        let sub = RegionSpec::sublevel(phi(), 0.125);
        let rep = verify_inclusion(
            &sub,
            &sub,
            &Sampler::MonteCarlo {
                count: 20_000,
                seed: 3,
            },
            &Tolerances::default(),
            1,
        )
        .unwrap();
        assert!(rep.verified);
        assert_eq!(rep.violation_count, 0);
        assert!(rep.inner_count > 0);
    }

    #[test]
    fn reversed_inclusion_finds_counterexamples() {
        // S_h is strictly larger than the 2-pinched cone.
        let rep = verify_inclusion(
            &RegionSpec::sublevel(phi(), 0.125),
            &RegionSpec::cone(2.0),
            &Sampler::MonteCarlo {
                count: 50_000,
                seed: 3,
            },
            &Tolerances::default(),
            2,
        )
        .unwrap();
        assert!(!rep.verified);
        assert!(rep.violation_count > 0);
        assert!(rep.violations.len() <= MAX_REPORTED_VIOLATIONS);
        assert!(rep.worst_margin.unwrap() < 0.0);
    }

    #[test]
    fn scan_umbilic_only() {
        let r = scan_max(
            &phi(),
            &RegionSpec::cone(2.0),
            &Sampler::Grid { resolution: 3 },
            &Tolerances::default(),
            1,
        )
        .unwrap();
        assert_eq!(r.max, 0.0);
        assert_eq!(r.members, 1);
    }

    #[test]
    fn empty_region_is_an_error() {
        let err = scan_max(
            &phi(),
            &RegionSpec::sublevel(phi(), 1e-3),
            &Sampler::Grid { resolution: 3 },
            &Tolerances::default(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, CertError::EmptyRegion(_)));
    }

    #[test]
    fn invalid_specs() {
        assert!(RegionSpec::cone(0.5).validate().is_err());
        assert!(RegionSpec::sublevel(phi(), 0.0).validate().is_err());
        assert!(RegionSpec::sublevel(phi(), f64::NAN).validate().is_err());
    }
}
