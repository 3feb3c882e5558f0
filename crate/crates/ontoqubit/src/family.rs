//! The generalized two-delta model family parameterized by `(theta0, s)`:
//! orthogonal coordinate systems on the sphere, weight and response
//! functions, and numerical checks of every algebraic constraint behind
//! the construction. The economical base model is the member at
//! `theta0 = pi/2`, `s = 1`.

use crate::error::{Error, Result};
use crate::geometry::{born_probability, BlochVector};
use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Collar around the coordinate poles; inputs closer than this to a
/// singularity are rejected.
pub const POLE_COLLAR: f64 = 1e-6;

/// Family parameters. Weight positivity requires `|cos theta0| <= s <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    theta0: f64,
    s: f64,
}

impl ModelParams {
    pub fn new(theta0: f64, s: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 <= FRAC_PI_2) {
            return Err(Error::OutOfRange {
                name: "theta0",
                value: theta0,
                lo: 0.0,
                hi: FRAC_PI_2,
            });
        }
        if !(theta0.cos().abs() <= s && s <= 1.0) {
            return Err(Error::InvalidModelParams { theta0, s });
        }
        Ok(Self { theta0, s })
    }

    /// The base-model member.
    pub fn base() -> Self {
        Self {
            theta0: FRAC_PI_2,
            s: 1.0,
        }
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Coordinate pair with `x0` in `[0, 2pi)` and `x1` in `(0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordPair {
    x0: f64,
    x1: f64,
}

impl CoordPair {
    pub fn new(x0: f64, x1: f64) -> Result<Self> {
        if !(0.0..TAU).contains(&x0) {
            return Err(Error::OutOfRange {
                name: "x0",
                value: x0,
                lo: 0.0,
                hi: TAU,
            });
        }
        if x0.is_nan() || !(x1 > 0.0 && x1 < PI) {
            return Err(Error::OutOfRange {
                name: "x1",
                value: x1,
                lo: 0.0,
                hi: PI,
            });
        }
        Ok(Self { x0, x1 })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
}

/// Branch-0 coordinate-frame vector.
pub fn g0(x0: f64, p: &ModelParams) -> [f64; 3] {
    [x0.cos(), x0.sin() * p.theta0.sin(), 0.0]
}

/// Reciprocal of the branch-0 weight function: `cos(theta0) cos(x0) + s`.
pub fn k0_inv(x0: f64, p: &ModelParams) -> f64 {
    p.theta0.cos() * x0.cos() + p.s
}

/// Branch-0 weight function.
pub fn k0(x0: f64, p: &ModelParams) -> f64 {
    1.0 / k0_inv(x0, p)
}

fn check_pole(x1: f64) -> Result<()> {
    if x1.sin() <= POLE_COLLAR.sin() || !(x1 > 0.0 && x1 < PI) {
        return Err(Error::PoleSingularity {
            delta: x1.sin().abs(),
        });
    }
    Ok(())
}

/// Branch-1 coordinate-frame vector. Rejects the poles of the coordinate
/// system, where the cosecant diverges.
pub fn g1(x1: f64, p: &ModelParams) -> Result<[f64; 3]> {
    check_pole(x1)?;
    let csc = 1.0 / x1.sin();
    Ok([
        p.theta0.cos() * csc,
        0.0,
        (x1.cos() / x1.sin()) * p.theta0.sin(),
    ])
}

/// Reciprocal of the branch-1 weight function: `csc(x1) - s`.
pub fn k1_inv(x1: f64, p: &ModelParams) -> Result<f64> {
    check_pole(x1)?;
    Ok(1.0 / x1.sin() - p.s)
}

/// Branch-1 weight function.
pub fn k1(x1: f64, p: &ModelParams) -> Result<f64> {
    Ok(1.0 / k1_inv(x1, p)?)
}

/// Bloch vector of the coordinate pair. At `theta0 = pi/2` this is the
/// standard spherical parametrization with `x0` the azimuth and `x1` the
/// zenith.
pub fn coord_to_bloch(c: &CoordPair, p: &ModelParams) -> Result<BlochVector> {
    check_pole(c.x1)?;
    let (c0, s0) = (p.theta0.cos(), p.theta0.sin());
    let ux = c.x1.sin() * c.x0.cos();
    let uy = c.x1.sin() * c.x0.sin();
    let uz = c.x1.cos();
    let denom = 1.0 + c0 * ux;
    BlochVector::new((c0 + ux) / denom, s0 * uy / denom, s0 * uz / denom)
}

/// The anisotropy radius `sqrt((a_x - cos theta0)^2 + a_y^2 sin^2 theta0)`
/// of a unit vector in this coordinate system. It vanishes exactly at the
/// two coordinate poles.
pub fn delta(ax: f64, ay: f64, p: &ModelParams) -> f64 {
    let dx = ax - p.theta0.cos();
    let dy = ay * p.theta0.sin();
    (dx * dx + dy * dy).sqrt()
}

/// Invert the coordinate map. Fails within the collar of the two poles.
pub fn bloch_to_coord(v: &BlochVector, p: &ModelParams) -> Result<CoordPair> {
    let d = delta(v.vx(), v.vy(), p);
    if d < POLE_COLLAR {
        return Err(Error::PoleSingularity { delta: d });
    }
    let denom = 1.0 - v.vx() * p.theta0.cos();
    let sin_x0 = v.vy() * p.theta0.sin() / d;
    let cos_x0 = (v.vx() - p.theta0.cos()) / d;
    let mut x0 = sin_x0.atan2(cos_x0);
    if x0 < 0.0 {
        x0 += TAU;
    }
    if x0 >= TAU {
        x0 = 0.0;
    }
    let sin_x1 = d / denom;
    let cos_x1 = v.vz() * p.theta0.sin() / denom;
    let x1 = sin_x1.atan2(cos_x1);
    CoordPair::new(x0, x1)
}

/// Branch weights `(r0, r1)`. They sum to one exactly.
pub fn weights(c: &CoordPair, p: &ModelParams) -> Result<(f64, f64)> {
    let a = k0_inv(c.x0, p);
    let b = k1_inv(c.x1, p)?;
    let r0 = a / (a + b);
    Ok((r0, 1.0 - r0))
}

fn snap_unit_interval(v: f64) -> f64 {
    if (v - 1.0).abs() <= 1e-13 {
        1.0
    } else if v.abs() <= 1e-13 {
        0.0
    } else {
        v
    }
}

/// Branch-0 response formula without range checks.
pub fn response0_raw(w: &BlochVector, x0: f64, p: &ModelParams) -> f64 {
    let c0 = p.theta0.cos();
    let d = delta(w.vx(), w.vy(), p);
    let num = (w.vx() - c0) * x0.cos() + w.vy() * x0.sin() * p.theta0.sin() - d;
    1.0 + num / (2.0 * (p.s + c0 * x0.cos()))
}

/// Branch-1 response formula without range checks.
pub fn response1_raw(w: &BlochVector, x1: f64, p: &ModelParams) -> f64 {
    let c0 = p.theta0.cos();
    let d = delta(w.vx(), w.vy(), p);
    let num = (w.vx() * c0 - 1.0) + w.vz() * x1.cos() * p.theta0.sin() + d * x1.sin();
    1.0 + num / (2.0 * (1.0 - p.s * x1.sin()))
}

fn response_family_direct(w: &BlochVector, n: u8, x: f64, p: &ModelParams) -> Result<f64> {
    match n {
        0 => Ok(response0_raw(w, x, p)),
        1 => Ok(response1_raw(w, x, p)),
        other => Err(Error::Invalid(format!(
            "branch index {other} not in {{0, 1}}"
        ))),
    }
}

/// Conditional probability of the event `w` given the family ontic state
/// `(x, n)`. Lower-hemisphere events use the complement rule; a value that
/// lands outside `[0, 1]` means the state sits outside the positivity
/// region and is reported as an error.
pub fn response_family(w: &BlochVector, n: u8, x: f64, p: &ModelParams) -> Result<f64> {
    let raw = if w.vz() < 0.0 {
        1.0 - snap_unit_interval(response_family_direct(&(-*w), n, x, p)?)
    } else {
        snap_unit_interval(response_family_direct(w, n, x, p)?)
    };
    if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
        return Err(Error::PositivityViolation { value: raw });
    }
    Ok(snap_unit_interval(raw.clamp(0.0, 1.0)))
}

/// Residual of the Born identity at a coordinate pair:
/// `|r0 P0 + r1 P1 - (1 + w.v)/2|`.
pub fn born_residual(c: &CoordPair, w: &BlochVector, p: &ModelParams) -> Result<f64> {
    let v = coord_to_bloch(c, p)?;
    let (r0, r1) = weights(c, p)?;
    let p0 = response_family(w, 0, c.x0, p)?;
    let p1 = response_family(w, 1, c.x1, p)?;
    Ok((r0 * p0 + r1 * p1 - born_probability(w, &v)).abs())
}

/// Minkowski product of the two constraint four-vectors with explicit
/// temporal offsets (signature `+,+,+,-`; spatial offsets zero).
pub fn minkowski_residual(x0: f64, x1: f64, p: &ModelParams, chi0: f64, chi1: f64) -> Result<f64> {
    let a = g0(x0, p);
    let b = g1(x1, p)?;
    let spatial = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let temporal = (k0_inv(x0, p) + chi0) * (k1_inv(x1, p)? + chi1);
    Ok(spatial - temporal)
}

/// Max Minkowski-orthogonality residual over a coordinate grid, with the
/// offsets `chi0 = -s`, `chi1 = +s` that make the constraint an exact
/// identity for this solution.
pub fn verify_orthogonality(x0_grid: &[f64], x1_grid: &[f64], p: &ModelParams) -> Result<f64> {
    let mut max = 0.0_f64;
    for &x0 in x0_grid {
        for &x1 in x1_grid {
            let r = minkowski_residual(x0, x1, p, -p.s, p.s)?.abs();
            max = max.max(r);
        }
    }
    Ok(max)
}

/// Max residual of `(g0 + g1)^2 = (1/k0 + 1/k1)^2` over a coordinate grid.
pub fn verify_main_constraint(x0_grid: &[f64], x1_grid: &[f64], p: &ModelParams) -> Result<f64> {
    let mut max = 0.0_f64;
    for &x0 in x0_grid {
        for &x1 in x1_grid {
            let a = g0(x0, p);
            let b = g1(x1, p)?;
            let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            let lhs = sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2];
            let k = k0_inv(x0, p) + k1_inv(x1, p)?;
            max = max.max((lhs - k * k).abs());
        }
    }
    Ok(max)
}

/// Residuals of the rank-deficiency structure of the 4x4 weight matrix
/// built on the quadruple `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy)]
pub struct DetRReport {
    /// `|det R|`
    pub det: f64,
    /// `max |u^T R|` for the explicit left null vector `u`
    pub null_r: f64,
    /// `max |u^T S|` over probe events
    pub null_s: f64,
}

/// Build the weight matrix on a coordinate quadruple and verify that its
/// determinant vanishes and that the explicit left null vector annihilates
/// both the matrix and the Born source vector.
pub fn verify_det_r_null(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    p: &ModelParams,
) -> Result<DetRReport> {
    let pairs = [
        CoordPair::new(x0, x1)?,
        CoordPair::new(x0, y1)?,
        CoordPair::new(y0, x1)?,
        CoordPair::new(y0, y1)?,
    ];
    let w: Vec<(f64, f64)> = pairs
        .iter()
        .map(|c| weights(c, p))
        .collect::<Result<_>>()?;
    #[rustfmt::skip]
    let r = Matrix4::new(
        w[0].0, 0.0,    w[0].1, 0.0,
        w[1].0, 0.0,    0.0,    w[1].1,
        0.0,    w[2].0, w[2].1, 0.0,
        0.0,    w[3].0, 0.0,    w[3].1,
    );
    let u = Vector4::new(
        k0_inv(x0, p) + k1_inv(x1, p)?,
        -k0_inv(x0, p) - k1_inv(y1, p)?,
        -k0_inv(y0, p) - k1_inv(x1, p)?,
        k0_inv(y0, p) + k1_inv(y1, p)?,
    );
    let ut_r = r.transpose() * u;
    let null_r = ut_r.amax();

    let probes = [
        BlochVector::new(0.3, -0.5, (1.0 - 0.34_f64).sqrt()).expect("probe"),
        BlochVector::x_axis(),
        BlochVector::new(-0.48, 0.6, -0.64).expect("probe"),
    ];
    let mut null_s = 0.0_f64;
    for probe in &probes {
        let mut acc = 0.0;
        for (i, c) in pairs.iter().enumerate() {
            let v = coord_to_bloch(c, p)?;
            acc += u[i] * born_probability(probe, &v);
        }
        null_s = null_s.max(acc.abs());
    }
    Ok(DetRReport {
        det: r.determinant().abs(),
        null_r,
        null_s,
    })
}

/// Max disagreement between the three routes to the self-overlap function
/// `H`: the branch-0 identity, the branch-1 identity, and the closed form
/// `(s - delta(v))/2`.
pub fn verify_h_consistency(vs: &[BlochVector], p: &ModelParams) -> Result<f64> {
    let mut max = 0.0_f64;
    for v in vs {
        let c = bloch_to_coord(v, p)?;
        let a = g0(c.x0, p);
        let b = g1(c.x1, p)?;
        let h1 = 0.5 * (k0_inv(c.x0, p) - (v.vx() * a[0] + v.vy() * a[1] + v.vz() * a[2]));
        let h2 = -0.5 * (k1_inv(c.x1, p)? - (v.vx() * b[0] + v.vy() * b[1] + v.vz() * b[2]));
        let h3 = 0.5 * (p.s - delta(v.vx(), v.vy(), p));
        max = max
            .max((h1 - h2).abs())
            .max((h1 - h3).abs())
            .max((h2 - h3).abs());
    }
    Ok(max)
}

/// One sampled cell of the positivity map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRow {
    pub theta0: f64,
    pub s: f64,
    pub theta_v: f64,
    pub phi_v: f64,
    pub valid: bool,
}

fn state_valid_for_all_events(v: &BlochVector, p: &ModelParams, event_grid: usize) -> bool {
    let c = match bloch_to_coord(v, p) {
        Ok(c) => c,
        Err(_) => return false,
    };
    let (r0, r1) = match weights(&c, p) {
        Ok(w) => w,
        Err(_) => return false,
    };
    let tol = 1e-9;
    if !(0.0 - tol..=1.0 + tol).contains(&r0) || !(0.0 - tol..=1.0 + tol).contains(&r1) {
        return false;
    }
    // Upper-hemisphere events; the lower hemisphere follows by complement.
    let zeniths = event_grid / 2 + 1;
    for i in 0..=zeniths {
        let psi = FRAC_PI_2 * i as f64 / zeniths as f64;
        for j in 0..event_grid {
            let az = TAU * j as f64 / event_grid as f64;
            let w = BlochVector::new(psi.sin() * az.cos(), psi.sin() * az.sin(), psi.cos())
                .expect("unit by construction");
            let p0 = response0_raw(&w, c.x0, p);
            let p1 = response1_raw(&w, c.x1, p);
            if !(-tol..=1.0 + tol).contains(&p0) || !(-tol..=1.0 + tol).contains(&p1) {
                return false;
            }
        }
    }
    true
}

/// Sample the positivity region of the family member on a
/// `resolution x resolution` zenith/azimuth grid of preparation states,
/// checking weights and responses against a fixed event grid.
pub fn positivity_region(p: &ModelParams, resolution: usize) -> Vec<RegionRow> {
    let event_grid = 32;
    let thetas: Vec<f64> = (0..resolution)
        .map(|i| PI * (i as f64 + 0.5) / resolution as f64)
        .collect();
    thetas
        .par_iter()
        .flat_map_iter(|&theta_v| {
            let p = *p;
            (0..resolution).map(move |j| {
                let phi_v = TAU * j as f64 / resolution as f64;
                let v = crate::geometry::from_spherical(
                    &crate::geometry::SphericalAngles::new(theta_v, phi_v).expect("grid angles"),
                )
                ;
                RegionRow {
                    theta0: p.theta0,
                    s: p.s,
                    theta_v,
                    phi_v,
                    valid: state_valid_for_all_events(&v, &p, event_grid),
                }
            })
        })
        .collect()
}

/// Largest zenith angle marked valid in a region map.
pub fn recovered_cone_half_angle(rows: &[RegionRow]) -> f64 {
    rows.iter()
        .filter(|r| r.valid)
        .map(|r| r.theta_v)
        .fold(0.0, f64::max)
}

/// Uniform grid of `n` azimuthal coordinates in `[0, 2pi)`.
pub fn x0_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

/// Uniform grid of `n` zenith coordinates strictly inside `(0, pi)`.
pub fn x1_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| PI * (i as f64 + 0.5) / n as f64).collect()
}
