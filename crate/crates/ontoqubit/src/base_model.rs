//! The economical one-dimensional model: a two-delta preparation
//! distribution over `(x, n)`, response functions for projective events,
//! outcome sampling, and the validity cone with its boundary angle.

use crate::error::{Error, Result};
use crate::geometry::{born_probability, to_spherical, BlochVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Half-aperture of the validity cone, `arccos(3/5)` (about 53.13 degrees).
pub fn cone_half_angle() -> f64 {
    (3.0_f64 / 5.0).acos()
}

/// Responses this close to 0 or 1 are snapped to the exact endpoint.
///
/// The formulas hit the endpoints exactly on measure-zero sets (event equal
/// or opposite to the prepared state, cone boundary); the snap removes the
/// float noise there without disturbing anything else at the 1e-12 scale.
const ENDPOINT_SNAP: f64 = 1e-13;

/// Slack for the closed-cone membership test.
const CONE_SLACK: f64 = 1e-12;

/// Hidden-variable state: a continuous coordinate `x`, a branch index `n`,
/// and an optional patch index `m` (absent in the base model).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnticState {
    pub x: f64,
    pub n: u8,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<u8>,
}

impl OnticState {
    pub fn new(x: f64, n: u8) -> Self {
        Self { x, n, m: None }
    }
}

/// A prepared state together with an inert context tag.
///
/// The tag is carried through untouched; nothing in the model reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationRecord {
    pub v: BlochVector,
    pub context_tag: String,
}

impl PreparationRecord {
    pub fn new(v: BlochVector, context_tag: impl Into<String>) -> Result<Self> {
        if !in_validity_cone(&v) {
            let theta = to_spherical(&v).theta();
            return Err(Error::OutsideValidityCone {
                theta,
                bound: cone_half_angle(),
            });
        }
        Ok(Self {
            v,
            context_tag: context_tag.into(),
        })
    }
}

/// Discrete two-point distribution over the ontic space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointDistribution {
    pub weight0: f64,
    pub point0: f64,
    pub weight1: f64,
    pub point1: f64,
}

/// True iff `v` lies inside the (closed) validity cone around the z axis.
pub fn in_validity_cone(v: &BlochVector) -> bool {
    to_spherical(v).theta() <= cone_half_angle() + CONE_SLACK
}

/// Two-delta preparation distribution for a state inside the cone:
/// weight `sin(theta)` at `x = phi` on branch 0, weight `1 - sin(theta)`
/// at `x = theta` on branch 1.
pub fn prepare_density(v: &BlochVector) -> Result<TwoPointDistribution> {
    let a = to_spherical(v);
    if a.theta() > cone_half_angle() + CONE_SLACK {
        return Err(Error::OutsideValidityCone {
            theta: a.theta(),
            bound: cone_half_angle(),
        });
    }
    let w0 = a.theta().sin();
    Ok(TwoPointDistribution {
        weight0: w0,
        point0: a.phi(),
        weight1: 1.0 - w0,
        point1: a.theta(),
    })
}

/// Draw an ontic state from the preparation distribution of `v`.
pub fn prepare_sample(v: &BlochVector, rng: &mut impl Rng) -> Result<OnticState> {
    let d = prepare_density(v)?;
    let u: f64 = rng.gen();
    if u < d.weight0 {
        Ok(OnticState::new(d.point0, 0))
    } else {
        Ok(OnticState::new(d.point1, 1))
    }
}

fn snap_unit_interval(p: f64) -> f64 {
    if (p - 1.0).abs() <= ENDPOINT_SNAP {
        1.0
    } else if p.abs() <= ENDPOINT_SNAP {
        0.0
    } else {
        p
    }
}

/// Branch-0 response formula, evaluated without any validity checks.
pub(crate) fn response_n0_raw(w: &BlochVector, x: f64) -> f64 {
    let horiz = (1.0 - w.vz() * w.vz()).max(0.0).sqrt();
    1.0 + (w.vx() * x.cos() + w.vy() * x.sin() - horiz) / 2.0
}

/// Branch-1 response formula, evaluated without any validity checks.
pub(crate) fn response_n1_raw(w: &BlochVector, x: f64) -> f64 {
    let horiz = (1.0 - w.vz() * w.vz()).max(0.0).sqrt();
    1.0 + (horiz * x.sin() + w.vz() * x.cos() - 1.0) / (2.0 * (1.0 - x.sin()))
}

/// Conditional probability of the event `w` given the ontic state `s`.
///
/// Events in the lower hemisphere are handled through the complement rule
/// `P(w|x,n) = 1 - P(-w|x,n)`; events on the equator evaluate the formulas
/// directly (they stay inside `[0, 1]` there).
pub fn response(w: &BlochVector, s: &OnticState) -> Result<f64> {
    if s.n == 1 && s.x > cone_half_angle() + CONE_SLACK {
        return Err(Error::InvalidOnticState {
            x: s.x,
            bound: cone_half_angle(),
        });
    }
    if w.vz() < 0.0 {
        return Ok(1.0 - response(&(-*w), s)?);
    }
    let p = match s.n {
        0 => response_n0_raw(w, s.x),
        1 => response_n1_raw(w, s.x),
        n => {
            return Err(Error::Invalid(format!("branch index {n} not in {{0, 1}}")));
        }
    };
    Ok(snap_unit_interval(p))
}

/// Bernoulli draw for the event `w`: `+1` for the event, `-1` for its
/// complement.
pub fn sample_outcome(w: &BlochVector, s: &OnticState, rng: &mut impl Rng) -> Result<i8> {
    let p = response(w, s)?;
    let u: f64 = rng.gen();
    Ok(if u < p { 1 } else { -1 })
}

/// Residual of the Born identity for a state in the cone:
/// `|sum_n weight_n P(w|point_n, n) - (1 + w.v)/2|`.
pub fn born_check(v: &BlochVector, w: &BlochVector) -> Result<f64> {
    let d = prepare_density(v)?;
    let p0 = response(w, &OnticState::new(d.point0, 0))?;
    let p1 = response(w, &OnticState::new(d.point1, 1))?;
    let lhs = d.weight0 * p0 + d.weight1 * p1;
    Ok((lhs - born_probability(w, v)).abs())
}

/// Smallest branch-1 response over upper-hemisphere events, as a function
/// of the ontic coordinate. Minimized over a dense grid in the event
/// zenith; the grid includes both endpoints of the quarter circle.
fn min_response_n1_over_events(x: f64, event_grid: usize) -> f64 {
    let mut min = f64::INFINITY;
    for k in 0..=event_grid {
        // w_z = sin(psi), sqrt(1 - w_z^2) = cos(psi); only these two
        // components enter the branch-1 formula.
        let psi = std::f64::consts::FRAC_PI_2 * k as f64 / event_grid as f64;
        let w = BlochVector::new(psi.cos(), 0.0, psi.sin()).expect("unit by construction");
        let p = response_n1_raw(&w, x);
        if p < min {
            min = p;
        }
    }
    min
}

/// Numerically locate the largest ontic coordinate for which the branch-1
/// response stays nonnegative for every upper-hemisphere event. Bisection
/// against a dense event grid; converges to `arccos(3/5)`.
pub fn validity_boundary() -> f64 {
    let grid = 2048;
    let mut lo = 0.0_f64;
    let mut hi = std::f64::consts::FRAC_PI_2;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_response_n1_over_events(mid, grid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{from_spherical, SphericalAngles};
    use crate::rng::derive_stream;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, TAU};

    fn state_at(theta: f64, phi: f64) -> BlochVector {
        from_spherical(&SphericalAngles::new(theta, phi).unwrap())
    }

    #[test]
    fn prepare_density_at_pole() {
        let d = prepare_density(&BlochVector::z_axis()).unwrap();
        assert_eq!(d.weight0, 0.0);
        assert_eq!(d.weight1, 1.0);
        assert_eq!(d.point1, 0.0);
    }

    #[test]
    fn prepare_density_at_thirty_degrees() {
        let d = prepare_density(&state_at(FRAC_PI_6, 1.0)).unwrap();
        assert_abs_diff_eq!(d.weight0, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.weight1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.point0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.point1, FRAC_PI_6, epsilon = 1e-12);
    }

    #[test]
    fn weights_sum_to_one_exactly() {
        let mut rng = derive_stream(1, "base-weights");
        for _ in 0..500 {
            let theta = rng.gen_range(0.0..cone_half_angle());
            let phi = rng.gen_range(0.0..TAU);
            let d = prepare_density(&state_at(theta, phi)).unwrap();
            assert_eq!(d.weight0 + d.weight1, 1.0);
        }
    }

    #[test]
    fn prepare_rejects_states_outside_cone() {
        let err = prepare_density(&BlochVector::x_axis()).unwrap_err();
        match err {
            Error::OutsideValidityCone { bound, .. } => {
                assert_abs_diff_eq!(bound, (3.0_f64 / 5.0).acos(), epsilon = 1e-15);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn prepare_sample_degenerate_branches() {
        let mut rng = derive_stream(2, "base-sample");
        for _ in 0..100 {
            let s = prepare_sample(&BlochVector::z_axis(), &mut rng).unwrap();
            assert_eq!((s.x, s.n), (0.0, 1));
        }
        // theta = pi/2 is outside the cone; the all-branch-0 case is the
        // cone boundary pushed to sin(theta) -> 1, tested via frequencies.
    }

    #[test]
    fn branch_frequency_matches_weight() {
        let v = state_at(FRAC_PI_6, 0.3);
        let mut rng = derive_stream(7, "base-branch-freq");
        let n = 1_000_000;
        let mut hits0 = 0u64;
        for _ in 0..n {
            if prepare_sample(&v, &mut rng).unwrap().n == 0 {
                hits0 += 1;
            }
        }
        let freq = hits0 as f64 / n as f64;
        // 4 sigma at p = 1/2, sigma = 5e-4
        assert!((freq - 0.5).abs() < 4.0 * 5e-4, "freq = {freq}");
    }

    #[test]
    fn response_to_north_pole_on_branch0_is_one() {
        let w = BlochVector::z_axis();
        for x in [0.0, 0.7, 2.0, 4.5, 6.2] {
            assert_eq!(response(&w, &OnticState::new(x, 0)).unwrap(), 1.0);
        }
    }

    #[test]
    fn response_branch0_example() {
        let w = BlochVector::new(3.0_f64.sqrt() / 2.0, 0.0, 0.5).unwrap();
        let p = response(&w, &OnticState::new(FRAC_PI_2, 0)).unwrap();
        assert_abs_diff_eq!(p, 1.0 - 0.866_025_403_784_438_6 / 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(p, 0.566_987_3, epsilon = 1e-7);
    }

    #[test]
    fn response_branch1_example() {
        let w = BlochVector::new(3.0_f64.sqrt() / 2.0, 0.0, 0.5).unwrap();
        let p = response(&w, &OnticState::new(FRAC_PI_4, 1)).unwrap();
        assert_abs_diff_eq!(p, 0.941_831_8, epsilon = 1e-7);
    }

    #[test]
    fn response_rejects_branch1_outside_interval() {
        let w = BlochVector::z_axis();
        assert!(response(&w, &OnticState::new(1.2, 1)).is_err());
    }

    #[test]
    fn complement_identity_is_exact() {
        let mut rng = derive_stream(4, "base-complement");
        for _ in 0..500 {
            let w = state_at(rng.gen_range(0.0..std::f64::consts::PI), rng.gen_range(0.0..TAU));
            let s = if rng.gen_bool(0.5) {
                OnticState::new(rng.gen_range(0.0..TAU), 0)
            } else {
                OnticState::new(rng.gen_range(0.0..cone_half_angle()), 1)
            };
            let p = response(&w, &s).unwrap();
            let q = response(&(-w), &s).unwrap();
            assert_eq!(p + q, 1.0);
        }
    }

    #[test]
    fn branch0_response_in_unit_interval_everywhere() {
        let mut rng = derive_stream(8, "base-n0-range");
        for _ in 0..100_000 {
            let w = state_at(
                rng.gen_range(0.0..FRAC_PI_2),
                rng.gen_range(0.0..TAU),
            );
            let p = response_n0_raw(&w, rng.gen_range(0.0..TAU));
            assert!((-1e-12..=1.0 + 1e-12).contains(&p), "p = {p}");
        }
    }

    #[test]
    fn branch1_response_sign_tracks_cone() {
        // min over events is >= 0 inside the interval, < 0 outside
        assert!(super::min_response_n1_over_events(cone_half_angle() - 1e-3, 512) > 0.0);
        assert!(super::min_response_n1_over_events(cone_half_angle() + 1e-3, 512) < 0.0);
    }

    #[test]
    fn born_identity_trivial_case() {
        let z = BlochVector::z_axis();
        assert_eq!(born_check(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn born_identity_hand_example() {
        let v = state_at(FRAC_PI_4, FRAC_PI_2);
        let w = BlochVector::new(3.0_f64.sqrt() / 2.0, 0.0, 0.5).unwrap();
        let d = prepare_density(&v).unwrap();
        let p0 = response(&w, &OnticState::new(d.point0, 0)).unwrap();
        let p1 = response(&w, &OnticState::new(d.point1, 1)).unwrap();
        assert_abs_diff_eq!(d.weight0, 0.707_106_8, epsilon = 1e-7);
        assert_abs_diff_eq!(p1, 0.941_831_8, epsilon = 1e-6);
        let total = d.weight0 * p0 + d.weight1 * p1;
        assert_abs_diff_eq!(total, 0.676_776_7, epsilon = 1e-6);
        assert!(born_check(&v, &w).unwrap() < 1e-12);
    }

    #[test]
    fn born_identity_random_sweep() {
        let mut rng = derive_stream(6, "base-born-sweep");
        for _ in 0..10_000 {
            let v = state_at(
                rng.gen_range(0.0..cone_half_angle()),
                rng.gen_range(0.0..TAU),
            );
            let w = state_at(
                rng.gen_range(0.0..std::f64::consts::PI),
                rng.gen_range(0.0..TAU),
            );
            assert!(born_check(&v, &w).unwrap() < 1e-12);
        }
    }

    #[test]
    fn outcome_frequencies_match_response() {
        let w = state_at(1.1, 0.4);
        let s = OnticState::new(0.8, 0);
        let p = response(&w, &s).unwrap();
        let mut rng = derive_stream(12, "base-outcome-freq");
        let n = 1_000_000;
        let mut hits = 0u64;
        for _ in 0..n {
            if sample_outcome(&w, &s, &mut rng).unwrap() == 1 {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * sigma, "freq = {freq}, p = {p}");
    }

    #[test]
    fn outcome_deterministic_cases() {
        let mut rng = derive_stream(13, "base-outcome-det");
        let s = OnticState::new(2.2, 0);
        for _ in 0..100 {
            assert_eq!(sample_outcome(&BlochVector::z_axis(), &s, &mut rng).unwrap(), 1);
            assert_eq!(sample_outcome(&(-BlochVector::z_axis()), &s, &mut rng).unwrap(), -1);
        }
    }

    #[test]
    fn validity_boundary_matches_closed_form() {
        let b = validity_boundary();
        assert_abs_diff_eq!(b, (3.0_f64 / 5.0).acos(), epsilon = 1e-6);
        assert_abs_diff_eq!(b, 0.927_295_2, epsilon = 1e-6);
    }

    #[test]
    fn boundary_response_reaches_zero() {
        let min = super::min_response_n1_over_events(cone_half_angle(), 4096);
        assert_abs_diff_eq!(min, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn equator_infimum_at_origin_is_half() {
        // at x = 0 the branch-1 response tends to (1 + w_z)/2 as w_z -> 0+
        let w = BlochVector::new((1.0 - 1e-12_f64).sqrt(), 0.0, 1e-6).unwrap();
        let p = response_n1_raw(&w, 0.0);
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-5);
    }

    #[test]
    fn cone_membership() {
        assert!(in_validity_cone(&BlochVector::z_axis()));
        assert!(!in_validity_cone(&BlochVector::x_axis()));
        let boundary = state_at(0.927_295_2, 0.0);
        assert!(in_validity_cone(&boundary));
    }
}
