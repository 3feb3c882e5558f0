//! Full-sphere extension of the base model.
//!
//! The base model only covers a cone of preparation states around the
//! z axis. Covering the sphere with twelve rotated copies of that cone —
//! one per icosahedron vertex — and recording the chosen copy in the
//! ontic state extends the model to every preparation.

use crate::base_model::{
    self, cone_half_angle, OnticState, TwoPointDistribution,
};
use crate::error::{Error, Result};
use crate::geometry::{rotation_taking, BlochVector, Rotation3};
use rand::Rng;

/// Number of patches in the atlas.
pub const PATCH_COUNT: usize = 12;

/// Twelve cone-shaped patches centered on the vertices of a regular
/// icosahedron, each with the rotation taking the z axis to its center.
#[derive(Debug, Clone)]
pub struct PatchAtlas {
    axes: Vec<BlochVector>,
    rotations: Vec<Rotation3>,
}

impl PatchAtlas {
    pub fn axes(&self) -> &[BlochVector] {
        &self.axes
    }

    pub fn rotations(&self) -> &[Rotation3] {
        &self.rotations
    }
}

/// Build the canonical atlas: icosahedron vertices in golden-ratio
/// coordinates `(0, ±1, ±φ)` and cyclic permutations, normalized, in a
/// fixed enumeration order so serialized patch indices are portable.
pub fn build_atlas() -> PatchAtlas {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [0.0, 1.0, phi],
        [0.0, 1.0, -phi],
        [0.0, -1.0, phi],
        [0.0, -1.0, -phi],
        [1.0, phi, 0.0],
        [1.0, -phi, 0.0],
        [-1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, 1.0],
        [phi, 0.0, -1.0],
        [-phi, 0.0, -1.0],
    ];
    let norm = (1.0 + phi * phi).sqrt();
    let axes: Vec<BlochVector> = raw
        .iter()
        .map(|r| {
            BlochVector::new(r[0] / norm, r[1] / norm, r[2] / norm)
                .expect("icosahedron vertices are unit after normalization")
        })
        .collect();
    let z = BlochVector::z_axis();
    let rotations = axes.iter().map(|a| rotation_taking(&z, a)).collect();
    PatchAtlas { axes, rotations }
}

/// Index of the patch handling `v`: the smallest `m` whose axis lies
/// within the cone half-angle of `v`. The covering property guarantees
/// at least one such patch exists.
pub fn select_patch(v: &BlochVector, atlas: &PatchAtlas) -> u8 {
    let threshold = cone_half_angle().cos() - 1e-12;
    for (m, axis) in atlas.axes.iter().enumerate() {
        if axis.dot(v) >= threshold {
            return m as u8;
        }
    }
    unreachable!("icosahedral atlas covers the sphere with margin");
}

/// Preparation distribution of `v` expressed in its patch frame, together
/// with the selected patch index.
pub fn prepare_density_full(v: &BlochVector, atlas: &PatchAtlas) -> (u8, TwoPointDistribution) {
    let m = select_patch(v, atlas);
    let local = atlas.rotations[m as usize].apply_transpose(v);
    let d = base_model::prepare_density(&local)
        .expect("patch selection puts the rotated state inside the cone");
    (m, d)
}

/// Draw an ontic state (with patch index) for an arbitrary preparation.
pub fn prepare_full(v: &BlochVector, atlas: &PatchAtlas, rng: &mut impl Rng) -> OnticState {
    let (m, d) = prepare_density_full(v, atlas);
    let u: f64 = rng.gen();
    let mut s = if u < d.weight0 {
        OnticState::new(d.point0, 0)
    } else {
        OnticState::new(d.point1, 1)
    };
    s.m = Some(m);
    s
}

/// Conditional probability of the event `w` given a patched ontic state:
/// the base-model response evaluated in the patch frame.
pub fn response_full(w: &BlochVector, s: &OnticState, atlas: &PatchAtlas) -> Result<f64> {
    let m = s.m.ok_or_else(|| {
        Error::Invalid("ontic state carries no patch index; was it prepared patch-free?".into())
    })? as usize;
    if m >= PATCH_COUNT {
        return Err(Error::Invalid(format!(
            "patch index {m} out of range 0..{PATCH_COUNT}"
        )));
    }
    let local_w = atlas.rotations[m].apply_transpose(w);
    base_model::response(&local_w, &OnticState::new(s.x, s.n))
}

/// Combined probability of event `w` for preparation `v`: the preparation
/// weights contracted with the per-point responses.
pub fn combined_response(v: &BlochVector, w: &BlochVector, atlas: &PatchAtlas) -> Result<f64> {
    let (m, d) = prepare_density_full(v, atlas);
    let mut s0 = OnticState::new(d.point0, 0);
    s0.m = Some(m);
    let mut s1 = OnticState::new(d.point1, 1);
    s1.m = Some(m);
    Ok(d.weight0 * response_full(w, &s0, atlas)? + d.weight1 * response_full(w, &s1, atlas)?)
}

/// Residual of the Born rule for an arbitrary preparation/event pair.
pub fn born_check_full(v: &BlochVector, w: &BlochVector, atlas: &PatchAtlas) -> Result<f64> {
    Ok((combined_response(v, w, atlas)? - crate::geometry::born_probability(w, v)).abs())
}

/// Largest angular distance from any point of the sphere to its nearest
/// patch axis, estimated on a Fibonacci grid of `n` points.
pub fn covering_radius(atlas: &PatchAtlas, n: usize) -> f64 {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut worst = 0.0_f64;
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let az = std::f64::consts::TAU * (i as f64 / golden).fract();
        let p = BlochVector::new(r * az.cos(), r * az.sin(), z).expect("unit by construction");
        let nearest = atlas
            .axes
            .iter()
            .map(|a| a.angle_to(&p))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    worst
}
