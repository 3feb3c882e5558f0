//! Two-qubit symplectic-group machinery.
//!
//! Builds the ten-generator set behind the symmetry argument, measures
//! its Lie-algebra closure dimension, connects arbitrary two-qubit
//! states to the reference state through the group, and evaluates the
//! dimension-counting margin that rules out low-memory models.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};

type C64 = Complex<f64>;

fn pauli(i: usize) -> DMatrix<C64> {
    let (o, l, im) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::i());
    match i {
        0 => DMatrix::identity(2, 2),
        1 => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        2 => DMatrix::from_row_slice(2, 2, &[o, -im, im, o]),
        3 => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => unreachable!("Pauli index 0..=3"),
    }
}

/// The ten 4x4 generators: the first-qubit Paulis, their products with
/// the first two second-qubit Paulis, and the second-qubit z Pauli.
pub fn sp2_generators() -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(10);
    for i in 1..=3 {
        out.push(pauli(i).kronecker(&pauli(0)));
    }
    for j in 1..=2 {
        for i in 1..=3 {
            out.push(pauli(i).kronecker(&pauli(j)));
        }
    }
    out.push(pauli(0).kronecker(&pauli(3)));
    out
}

/// All fifteen traceless two-qubit Pauli products.
pub fn su4_generators() -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(15);
    for i in 0..=3 {
        for j in 0..=3 {
            if i == 0 && j == 0 {
                continue;
            }
            out.push(pauli(i).kronecker(&pauli(j)));
        }
    }
    out
}

fn vectorize(m: &DMatrix<C64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * m.len());
    for e in m.iter() {
        v.push(e.re);
        v.push(e.im);
    }
    v
}

/// Orthonormal real basis with Gram-Schmidt insertion.
struct RealSpan {
    basis: Vec<Vec<f64>>,
}

impl RealSpan {
    fn new() -> Self {
        Self { basis: Vec::new() }
    }

    /// Insert the direction of `v` if it extends the span. Returns true
    /// when the dimension grew.
    fn insert(&mut self, v: &[f64]) -> bool {
        let norm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return false;
        }
        let mut w: Vec<f64> = v.iter().map(|e| e / norm).collect();
        for b in &self.basis {
            let proj: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= proj * bi;
            }
        }
        let rem = w.iter().map(|e| e * e).sum::<f64>().sqrt();
        if rem < 1e-9 {
            return false;
        }
        for e in &mut w {
            *e /= rem;
        }
        self.basis.push(w);
        true
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }
}

fn commutator_i(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    (a * b - b * a) * C64::i()
}

/// Dimension of the real Lie algebra spanned by the generators and
/// closed under the Hermitian commutator `i[A, B]`.
pub fn lie_closure_dim(generators: &[DMatrix<C64>]) -> usize {
    let mut span = RealSpan::new();
    let mut members: Vec<DMatrix<C64>> = Vec::new();
    for g in generators {
        if span.insert(&vectorize(g)) {
            members.push(g.clone());
        }
    }
    let mut frontier_start = 0;
    loop {
        let end = members.len();
        if frontier_start == end {
            break;
        }
        let mut added = Vec::new();
        for i in 0..end {
            for j in frontier_start.max(i + 1)..end {
                let c = commutator_i(&members[i], &members[j]);
                if span.insert(&vectorize(&c)) {
                    added.push(c);
                }
            }
        }
        frontier_start = end;
        members.extend(added);
    }
    span.dim()
}

/// One exponential step along a generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitStep {
    pub generator: usize,
    pub angle: f64,
}

/// Result of steering a state to the reference basis state.
#[derive(Debug, Clone)]
pub struct OrbitResult {
    pub steps: Vec<OrbitStep>,
    pub fidelity: f64,
    pub converged: bool,
}

/// Overlap-squared with the first basis vector.
fn reference_fidelity(psi: &DVector<C64>) -> f64 {
    psi[0].norm_sqr()
}

/// Steer `psi` toward the reference state `(1,0,0,0)` by coordinate
/// ascent over the ten group generators. Each generator squares to the
/// identity, so the optimal rotation angle along one generator has a
/// closed form and every step increases the fidelity monotonically.
/// Deterministic; `budget` caps the number of single-generator steps.
pub fn orbit_connect(psi: &DVector<C64>, budget: usize) -> Result<OrbitResult> {
    if psi.len() != 4 {
        return Err(Error::DimensionMismatch {
            left: psi.len(),
            left2: 1,
            right: 4,
            right2: 1,
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitVector { norm });
    }
    let gens = sp2_generators();
    let mut state = psi.clone();
    let mut steps = Vec::new();
    let mut used = 0;
    let target = 1.0 - 1e-6;
    while used < budget && reference_fidelity(&state) < target {
        let before_sweep = reference_fidelity(&state);
        for (gi, g) in gens.iter().enumerate() {
            if used >= budget {
                break;
            }
            let gpsi = g * &state;
            let a = state[0];
            let b = gpsi[0];
            let half_diff = (a.norm_sqr() - b.norm_sqr()) / 2.0;
            let cross = (a * b.conj()).im;
            let t = 0.5 * (-cross).atan2(half_diff);
            if t.abs() < 1e-15 {
                continue;
            }
            // exp(-i t G) psi = cos t psi - i sin t G psi, since G^2 = 1
            let (c, s) = (t.cos(), t.sin());
            state = state.map(|e| e * C64::new(c, 0.0)) - gpsi.map(|e| e * C64::new(0.0, s));
            steps.push(OrbitStep {
                generator: gi,
                angle: t,
            });
            used += 1;
        }
        if reference_fidelity(&state) - before_sweep < 1e-15 {
            break;
        }
    }
    let fidelity = reference_fidelity(&state);
    Ok(OrbitResult {
        steps,
        fidelity,
        converged: fidelity >= target,
    })
}

/// Haar-random two-qubit state: four complex standard normals (via
/// Box-Muller), normalized.
pub fn haar_state(rng: &mut impl rand::Rng) -> DVector<C64> {
    let mut v = DVector::from_element(4, C64::new(0.0, 0.0));
    for i in 0..4 {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (-2.0 * u1.ln()).sqrt();
        v[i] = C64::new(r * u2.cos(), r * u2.sin());
    }
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Verdict of the dimension count for an N-level system with M bits of
/// discrete memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShrinkingMargin {
    /// Lower bound `N^2 - 1 - M` on the symmetry-manifold dimension.
    pub bound: i64,
    /// Dimension `(N-1)^2` of the largest proper invariance subgroup.
    pub largest_subgroup: i64,
    /// True when the bound exceeds the subgroup dimension, i.e. when
    /// `M < 2N - 2` and no such model can exist.
    pub contradiction: bool,
}

/// Compare the forced symmetry-manifold dimension against the largest
/// available subgroup dimension.
pub fn shrinking_margin(n: u64, m: u64) -> ShrinkingMargin {
    let bound = (n * n) as i64 - 1 - m as i64;
    let largest_subgroup = ((n - 1) * (n - 1)) as i64;
    ShrinkingMargin {
        bound,
        largest_subgroup,
        contradiction: m < 2 * n - 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ten_generators_traceless_hermitian() {
        let gens = sp2_generators();
        assert_eq!(gens.len(), 10);
        for g in &gens {
            assert!(g.trace().norm() < 1e-14);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((g[(i, j)] - g[(j, i)].conj()).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn generators_linearly_independent() {
        let gens = sp2_generators();
        let mut span = RealSpan::new();
        for g in &gens {
            assert!(span.insert(&vectorize(g)));
        }
        assert_eq!(span.dim(), 10);
    }

    #[test]
    fn closure_dimension_is_ten() {
        assert_eq!(lie_closure_dim(&sp2_generators()), 10);
    }

    #[test]
    fn single_pauli_closes_on_itself() {
        assert_eq!(lie_closure_dim(&[pauli(3)]), 1);
    }

    #[test]
    fn full_pauli_product_set_closes_at_fifteen() {
        let gens = su4_generators();
        assert_eq!(gens.len(), 15);
        assert_eq!(lie_closure_dim(&gens), 15);
    }

    #[test]
    fn two_su2_factors_close_at_six() {
        let mut gens: Vec<DMatrix<C64>> = (1..=3).map(|i| pauli(i).kronecker(&pauli(0))).collect();
        gens.extend((1..=3).map(|j| pauli(0).kronecker(&pauli(j))));
        assert_eq!(lie_closure_dim(&gens), 6);
    }

    #[test]
    fn reference_state_needs_no_steps() {
        let e1 = DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let r = orbit_connect(&e1, 1000).unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.fidelity, 1.0);
        assert!(r.converged);
    }

    #[test]
    fn cat_states_connect() {
        for phase in [0.0_f64, 0.7, 2.9] {
            let amp = C64::new(phase.cos(), phase.sin()) / C64::new(2.0_f64.sqrt(), 0.0);
            let psi = DVector::from_vec(vec![
                C64::new(1.0 / 2.0_f64.sqrt(), 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                amp,
            ]);
            let r = orbit_connect(&psi, 10_000).unwrap();
            assert!(r.converged, "phase {phase}: fidelity {}", r.fidelity);
        }
    }

    #[test]
    fn haar_random_states_connect() {
        let mut rng = derive_stream(61, "group-orbit");
        for k in 0..100 {
            let psi = haar_state(&mut rng);
            let r = orbit_connect(&psi, 100_000).unwrap();
            assert!(
                r.fidelity >= 1.0 - 1e-6,
                "state {k}: fidelity {}",
                r.fidelity
            );
        }
    }

    #[test]
    fn orbit_steps_reproduce_the_fidelity() {
        let mut rng = derive_stream(62, "group-replay");
        let psi = haar_state(&mut rng);
        let r = orbit_connect(&psi, 100_000).unwrap();
        let gens = sp2_generators();
        let mut state = psi;
        for step in &r.steps {
            let gpsi = &gens[step.generator] * &state;
            let (c, s) = (step.angle.cos(), step.angle.sin());
            state = state.map(|e| e * C64::new(c, 0.0)) - gpsi.map(|e| e * C64::new(0.0, s));
        }
        assert_abs_diff_eq!(reference_fidelity(&state), r.fidelity, epsilon = 1e-12);
    }

    #[test]
    fn orbit_rejects_bad_input() {
        let short = DVector::from_vec(vec![C64::new(1.0, 0.0)]);
        assert!(orbit_connect(&short, 10).is_err());
        let unnormalized = DVector::from_vec(vec![
            C64::new(2.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        assert!(orbit_connect(&unnormalized, 10).is_err());
    }

    #[test]
    fn qubit_with_one_memory_bit_is_contradictory() {
        let m = shrinking_margin(2, 1);
        assert_eq!(m.bound, 2);
        assert_eq!(m.largest_subgroup, 1);
        assert!(m.contradiction);
    }

    #[test]
    fn margin_threshold_at_two_n_minus_two() {
        for n in 2..6u64 {
            for m in 0..(2 * n + 2) {
                let v = shrinking_margin(n, m);
                assert_eq!(v.contradiction, m < 2 * n - 2);
                assert_eq!(v.bound > v.largest_subgroup, v.contradiction);
            }
        }
    }
}
