//! Grid-resource accounting: optimal per-dimension grid allocation under
//! an information budget, the round-off error scaling law, and empirical
//! round-off measurements on the qubit models.

use crate::base_model::{self, cone_half_angle, OnticState};
use crate::error::{Error, Result};
use crate::family::{self, ModelParams};
use crate::geometry::{born_probability, BlochVector};
use std::f64::consts::TAU;

/// Per-dimension grid allocation under an information budget (nats).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub g: Vec<f64>,
    pub info: f64,
    /// Continuous per-dimension grid counts.
    pub n: Vec<f64>,
    pub delta_e: f64,
}

impl AllocationPlan {
    pub fn dims(&self) -> usize {
        self.g.len()
    }
}

fn check_gradients(g: &[f64]) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::Invalid("no gradient magnitudes supplied".into()));
    }
    for &gi in g {
        if !(gi > 0.0) {
            return Err(Error::PositivityViolation { value: gi });
        }
    }
    // geometric mean
    Ok((g.iter().map(|x| x.ln()).sum::<f64>() / g.len() as f64).exp())
}

/// Error of an allocation under the frozen model `sqrt(sum (g_i/n_i)^2)`.
pub fn allocation_error(g: &[f64], n: &[f64]) -> f64 {
    g.iter()
        .zip(n)
        .map(|(gi, ni)| (gi / ni) * (gi / ni))
        .sum::<f64>()
        .sqrt()
}

/// Grid counts minimizing the error at fixed information `I = sum log n_i`:
/// `n_i = g_i e^{I/M} / gbar` with `gbar` the geometric mean.
pub fn optimal_allocation(g: &[f64], info: f64) -> Result<AllocationPlan> {
    let gbar = check_gradients(g)?;
    let m = g.len() as f64;
    let scale = (info / m).exp() / gbar;
    let n: Vec<f64> = g.iter().map(|gi| gi * scale).collect();
    let delta_e = allocation_error(g, &n);
    Ok(AllocationPlan {
        g: g.to_vec(),
        info,
        n,
        delta_e,
    })
}

/// Error at the optimal allocation: `gbar sqrt(M) e^{-I/M}`.
pub fn predicted_error(g: &[f64], info: f64) -> Result<f64> {
    let gbar = check_gradients(g)?;
    let m = g.len() as f64;
    Ok(gbar * m.sqrt() * (-info / m).exp())
}

/// Information needed to reach a target error: the inverse of
/// `predicted_error`, `I = M log(sqrt(M) gbar / deltaE)`.
pub fn required_information(g: &[f64], delta_e: f64) -> Result<f64> {
    if !(delta_e > 0.0) {
        return Err(Error::PositivityViolation { value: delta_e });
    }
    let gbar = check_gradients(g)?;
    let m = g.len() as f64;
    Ok(m * (m.sqrt() * gbar / delta_e).ln())
}

/// Which qubit model the empirical measurements run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundoffModel {
    Base,
    Family,
}

impl RoundoffModel {
    pub fn name(&self) -> &'static str {
        match self {
            RoundoffModel::Base => "base",
            RoundoffModel::Family => "family",
        }
    }
}

/// Family member used for the empirical measurements, away from the
/// spherical limit so the two models differ.
fn family_params() -> ModelParams {
    ModelParams::new(1.0, 0.7).expect("valid family parameters")
}

/// Fixed 256-point low-discrepancy evaluation set of (preparation,
/// event) pairs, with preparations strictly inside the validity cone.
/// Kronecker sequence driven by the plastic constant, fully
/// deterministic and versioned with the code.
pub fn evaluation_set() -> Vec<(BlochVector, BlochVector)> {
    // plastic constant: the real root of x^3 = x + 1
    let plastic = 1.324_717_957_244_746_f64;
    let alphas = [
        1.0 / plastic,
        1.0 / (plastic * plastic),
        1.0 / (plastic * plastic * plastic),
        1.0 / (plastic * plastic * plastic * plastic),
    ];
    let frac = |x: f64| x - x.floor();
    (1..=256)
        .map(|i| {
            let i = i as f64;
            let theta_v = cone_half_angle() * (0.05 + 0.90 * frac(i * alphas[0]));
            let phi_v = TAU * frac(i * alphas[1]);
            let cos_tw = 1.0 - 2.0 * frac(i * alphas[2]);
            let phi_w = TAU * frac(i * alphas[3]);
            let v = BlochVector::new(
                theta_v.sin() * phi_v.cos(),
                theta_v.sin() * phi_v.sin(),
                theta_v.cos(),
            )
            .expect("unit by construction");
            let sin_tw = (1.0 - cos_tw * cos_tw).max(0.0).sqrt();
            let w = BlochVector::new(sin_tw * phi_w.cos(), sin_tw * phi_w.sin(), cos_tw)
                .expect("unit by construction");
            (v, w)
        })
        .collect()
}

fn cell_center(x: f64, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    let idx = (((x - lo) / step).floor()).clamp(0.0, (n - 1) as f64);
    lo + (idx + 0.5) * step
}

/// RMS deviation of the combined event probability when the ontic
/// coordinates are replaced by the centers of `n` uniform cells, over
/// the fixed evaluation set. Decreases like 1/n.
pub fn empirical_roundoff(model: RoundoffModel, n: usize) -> Result<f64> {
    if n < 8 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            lo: 8.0,
            hi: f64::INFINITY,
        });
    }
    let pairs = evaluation_set();
    let mut sum_sq = 0.0;
    for (v, w) in &pairs {
        let approx = match model {
            RoundoffModel::Base => {
                let d = base_model::prepare_density(v)?;
                let x0 = cell_center(d.point0, 0.0, TAU, n);
                let x1 = cell_center(d.point1, 0.0, cone_half_angle(), n);
                d.weight0 * base_model::response(w, &OnticState::new(x0, 0))?
                    + d.weight1 * base_model::response(w, &OnticState::new(x1, 1))?
            }
            RoundoffModel::Family => {
                let p = family_params();
                let c = family::bloch_to_coord(v, &p)?;
                let x0 = cell_center(c.x0(), 0.0, TAU, n);
                let x1 = cell_center(c.x1(), 0.0, std::f64::consts::PI, n);
                let snapped = family::CoordPair::new(x0, x1)?;
                let (r0, r1) = family::weights(&snapped, &p)?;
                r0 * family::response0_raw(w, x0, &p) + r1 * family::response1_raw(w, x1, &p)
            }
        };
        let exact = born_probability(w, v);
        sum_sq += (approx - exact) * (approx - exact);
    }
    Ok((sum_sq / pairs.len() as f64).sqrt())
}

/// Mean magnitude of the derivative of a scalar function, by central
/// differences over a uniform sample of its domain.
pub fn mean_gradient_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    let h = (hi - lo) * 1e-7;
    let mut acc = 0.0;
    for i in 0..samples {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
        acc += ((f(x + h) - f(x - h)) / (2.0 * h)).abs();
    }
    acc / samples as f64
}

/// Mean magnitude of the response derivative along the ontic coordinate
/// of one branch, averaged over the evaluation set.
pub fn mean_gradient(model: RoundoffModel, branch: u8, samples: usize) -> Result<f64> {
    let pairs = evaluation_set();
    let h = 1e-6;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (v, w) in pairs.iter().take(samples.min(pairs.len())) {
        let deriv = match model {
            RoundoffModel::Base => {
                let d = base_model::prepare_density(v)?;
                let (x, lo, hi) = match branch {
                    0 => (d.point0, 0.0, TAU),
                    _ => (d.point1, 0.0, cone_half_angle()),
                };
                let x = x.clamp(lo + h, hi - h);
                (base_model::response(w, &OnticState::new(x + h, branch))?
                    - base_model::response(w, &OnticState::new(x - h, branch))?)
                    / (2.0 * h)
            }
            RoundoffModel::Family => {
                let p = family_params();
                let c = family::bloch_to_coord(v, &p)?;
                match branch {
                    0 => {
                        (family::response0_raw(w, c.x0() + h, &p)
                            - family::response0_raw(w, c.x0() - h, &p))
                            / (2.0 * h)
                    }
                    _ => {
                        (family::response1_raw(w, c.x1() + h, &p)
                            - family::response1_raw(w, c.x1() - h, &p))
                            / (2.0 * h)
                    }
                }
            }
        };
        acc += deriv.abs();
        count += 1;
    }
    Ok(acc / count as f64)
}

/// Least-squares slope of `log(error)` against `log(n)`.
pub fn loglog_slope(ns: &[usize], errors: &[f64]) -> f64 {
    let k = ns.len() as f64;
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_budget_splits_evenly() {
        let plan = optimal_allocation(&[1.0, 1.0], 2.0 * 10.0_f64.ln()).unwrap();
        assert_abs_diff_eq!(plan.n[0], 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(plan.n[1], 10.0, epsilon = 1e-9);
    }

    #[test]
    fn skewed_gradients_get_proportional_grids() {
        let plan = optimal_allocation(&[1.0, 4.0], 100.0_f64.ln()).unwrap();
        assert_abs_diff_eq!(plan.n[0], 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(plan.n[1], 20.0, epsilon = 1e-9);
    }

    #[test]
    fn budget_identity_holds() {
        for (g, info) in [
            (vec![1.0, 4.0], 100.0_f64.ln()),
            (vec![0.3, 2.0, 7.1], 5.5),
            (vec![2.5], 0.25),
        ] {
            let plan = optimal_allocation(&g, info).unwrap();
            let total: f64 = plan.n.iter().map(|x| x.ln()).sum();
            assert_abs_diff_eq!(total, info, epsilon = 1e-9);
        }
    }

    #[test]
    fn nonpositive_gradients_rejected() {
        assert!(optimal_allocation(&[1.0, 0.0], 1.0).is_err());
        assert!(optimal_allocation(&[-2.0], 1.0).is_err());
        assert!(optimal_allocation(&[], 1.0).is_err());
    }

    #[test]
    fn brute_force_integer_search_agrees() {
        // exhaustive search over n1*n2 <= 100 with the same objective
        let g = [1.0, 4.0];
        let mut best = (0usize, 0usize, f64::INFINITY);
        for n1 in 1..=100usize {
            for n2 in 1..=(100 / n1) {
                let e = allocation_error(&g, &[n1 as f64, n2 as f64]);
                if e < best.2 {
                    best = (n1, n2, e);
                }
            }
        }
        assert_eq!((best.0, best.1), (5, 20));
    }

    #[test]
    fn closed_form_beats_integer_allocations() {
        let g = [0.7, 1.9, 3.1];
        let plan = optimal_allocation(&g, 3.0 * 8.0_f64.ln()).unwrap();
        let budget: f64 = plan.n.iter().product();
        let mut best = f64::INFINITY;
        let mut best_min_n = 1.0;
        for n1 in 1..=64usize {
            for n2 in 1..=64usize {
                for n3 in 1..=64usize {
                    if (n1 * n2 * n3) as f64 <= budget * (1.0 + 1e-9) {
                        let e = allocation_error(&g, &[n1 as f64, n2 as f64, n3 as f64]);
                        if e < best {
                            best = e;
                            best_min_n = n1.min(n2).min(n3) as f64;
                        }
                    }
                }
            }
        }
        assert!(plan.delta_e <= best * (1.0 + 2.0 / best_min_n));
        assert!(plan.delta_e <= best + 1e-12);
    }

    #[test]
    fn predicted_error_reference_value() {
        assert_abs_diff_eq!(
            predicted_error(&[1.0], 100.0_f64.ln()).unwrap(),
            0.01,
            epsilon = 1e-15
        );
    }

    #[test]
    fn extra_information_shrinks_error_exponentially() {
        let g = [1.3, 0.4];
        let e1 = predicted_error(&g, 3.0).unwrap();
        let e2 = predicted_error(&g, 5.0).unwrap();
        assert_abs_diff_eq!(e2 / e1, (-1.0_f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn predicted_error_matches_allocation_error_at_optimum() {
        let g = [0.9, 2.2, 5.0, 1.1];
        let info = 11.7;
        let plan = optimal_allocation(&g, info).unwrap();
        assert_abs_diff_eq!(
            predicted_error(&g, info).unwrap(),
            allocation_error(&g, &plan.n),
            epsilon = 1e-12
        );
    }

    #[test]
    fn information_reference_value_and_round_trip() {
        assert_abs_diff_eq!(
            required_information(&[1.0], 0.01).unwrap(),
            100.0_f64.ln(),
            epsilon = 1e-12
        );
        let g = [0.8, 3.0];
        let info = 7.3;
        let de = predicted_error(&g, info).unwrap();
        assert_abs_diff_eq!(required_information(&g, de).unwrap(), info, epsilon = 1e-12);
    }

    #[test]
    fn information_grows_with_dimension_count() {
        let de = 1e-3;
        let mut last = 0.0;
        for m in 1..=6 {
            let g = vec![1.0; m];
            let info = required_information(&g, de).unwrap();
            assert!(info > last);
            last = info;
        }
    }

    #[test]
    fn evaluation_set_is_fixed_and_in_cone() {
        let a = evaluation_set();
        let b = evaluation_set();
        assert_eq!(a.len(), 256);
        for ((va, wa), (vb, wb)) in a.iter().zip(&b) {
            assert_eq!(va, vb);
            assert_eq!(wa, wb);
            assert!(base_model::in_validity_cone(va));
        }
    }

    #[test]
    fn roundoff_rejects_tiny_grids() {
        assert!(empirical_roundoff(RoundoffModel::Base, 4).is_err());
    }

    #[test]
    fn roundoff_error_halves_when_grid_doubles() {
        for model in [RoundoffModel::Base, RoundoffModel::Family] {
            let mut prev = empirical_roundoff(model, 64).unwrap();
            for n in [128, 256, 512] {
                let e = empirical_roundoff(model, n).unwrap();
                let ratio = e / prev;
                assert!(
                    (ratio - 0.5).abs() < 0.15 * 0.5 + 0.075,
                    "{}: ratio {ratio} at n={n}",
                    model.name()
                );
                prev = e;
            }
        }
    }

    #[test]
    fn roundoff_error_vanishes_with_refinement() {
        let coarse = empirical_roundoff(RoundoffModel::Base, 16).unwrap();
        let fine = empirical_roundoff(RoundoffModel::Base, 1024).unwrap();
        assert!(fine < coarse / 10.0);
    }

    #[test]
    fn loglog_slope_is_minus_one() {
        let ns: Vec<usize> = (4..=10).map(|k| 1usize << k).collect();
        for model in [RoundoffModel::Base, RoundoffModel::Family] {
            let errors: Vec<f64> = ns
                .iter()
                .map(|&n| empirical_roundoff(model, n).unwrap())
                .collect();
            let slope = loglog_slope(&ns, &errors);
            assert!(
                (slope + 1.0).abs() < 0.05,
                "{}: slope {slope}",
                model.name()
            );
        }
    }

    #[test]
    fn synthetic_gradients_recovered() {
        assert_eq!(mean_gradient_fn(|_| 0.25, 0.0, TAU, 100), 0.0);
        let slope = mean_gradient_fn(|x| x / TAU, 0.0, TAU, 100);
        assert_abs_diff_eq!(slope, 1.0 / TAU, epsilon = 1e-6);
    }

    #[test]
    fn base_model_gradient_positive_and_stable() {
        let coarse = mean_gradient(RoundoffModel::Base, 0, 64).unwrap();
        let fine = mean_gradient(RoundoffModel::Base, 0, 256).unwrap();
        assert!(coarse > 0.1);
        assert!((coarse - fine).abs() / fine < 0.05 || (coarse - fine).abs() < 0.02,
            "coarse {coarse} fine {fine}");
    }
}
