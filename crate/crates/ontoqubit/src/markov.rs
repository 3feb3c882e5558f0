//! Non-Markovianity detector.
//!
//! Discretizes the ontic space, propagates two-delta preparation
//! distributions under single-qubit rotations, and fits a nonnegative
//! column-stochastic kernel to the induced linear evolution. A kernel
//! exists for rotations about the z axis (a pure shift of the azimuth
//! branch) but not for rotations about the y axis: the fit residual
//! stays bounded away from zero no matter the grid resolution, which is
//! the discrete signature of the model's memory.

use crate::base_model::{cone_half_angle, in_validity_cone, prepare_density};
use crate::error::{Error, Result};
use crate::geometry::{axis_angle, to_spherical, BlochVector};
use nalgebra::{Complex, DMatrix, DVector};
use std::f64::consts::TAU;

type C64 = Complex<f64>;

/// Rotation generator for the single-qubit flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Identity,
    X,
    Y,
    Z,
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Identity => "identity",
            Generator::X => "x",
            Generator::Y => "y",
            Generator::Z => "z",
        }
    }

    fn axis(&self) -> Option<[f64; 3]> {
        match self {
            Generator::Identity => None,
            Generator::X => Some([1.0, 0.0, 0.0]),
            Generator::Y => Some([0.0, 1.0, 0.0]),
            Generator::Z => Some([0.0, 0.0, 1.0]),
        }
    }
}

/// Rotate `v` about the generator axis by angle `t` (the Bloch-space
/// flow `dv/dt = axis x v`; for the y generator this is
/// `dv_x/dt = v_z`, `dv_z/dt = -v_x`).
pub fn bloch_flow(g: Generator, t: f64, v: &BlochVector) -> BlochVector {
    match g.axis() {
        None => *v,
        Some([ux, uy, uz]) => axis_angle(ux, uy, uz, t).apply(v),
    }
}

/// Discretized ontic space: `g0` azimuth bins for branch 0 on `[0, 2pi)`
/// and `g1` zenith bins for branch 1 on `[0, theta0]` (endpoints
/// included). Total dimension `g0 + g1`.
#[derive(Debug, Clone)]
pub struct OnticGrid {
    g0: usize,
    g1: usize,
}

impl OnticGrid {
    pub fn new(g0: usize, g1: usize) -> Result<Self> {
        if g0 < 4 || g1 < 4 {
            return Err(Error::Invalid(format!(
                "grid {g0}x{g1} too coarse; need at least 4 bins per branch"
            )));
        }
        Ok(Self { g0, g1 })
    }

    pub fn g0(&self) -> usize {
        self.g0
    }

    pub fn g1(&self) -> usize {
        self.g1
    }

    pub fn dim(&self) -> usize {
        self.g0 + self.g1
    }

    /// Azimuth bin centers for branch 0.
    pub fn x0(&self, i: usize) -> f64 {
        TAU * i as f64 / self.g0 as f64
    }

    /// Zenith bin centers for branch 1.
    pub fn x1(&self, j: usize) -> f64 {
        cone_half_angle() * j as f64 / (self.g1 - 1) as f64
    }

    /// One azimuth grid step.
    pub fn phi_step(&self) -> f64 {
        TAU / self.g0 as f64
    }

    /// One zenith grid step.
    pub fn theta_step(&self) -> f64 {
        cone_half_angle() / (self.g1 - 1) as f64
    }

    fn nearest0(&self, phi: f64) -> usize {
        ((phi / self.phi_step()).round() as usize) % self.g0
    }

    fn nearest1(&self, theta: f64) -> usize {
        ((theta / self.theta_step()).round() as usize).min(self.g1 - 1)
    }
}

/// Discretize the two-delta preparation of `v` on the grid: weight
/// `sin(theta)` at the nearest azimuth bin, `1 - sin(theta)` at the
/// nearest zenith bin.
pub fn snap(v: &BlochVector, grid: &OnticGrid) -> Result<Vec<f64>> {
    let d = prepare_density(v)?;
    let mut out = vec![0.0; grid.dim()];
    out[grid.nearest0(d.point0)] += d.weight0;
    out[grid.g0 + grid.nearest1(d.point1)] += d.weight1;
    Ok(out)
}

/// A set of cone states with their grid-snapped density vectors.
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    pub states: Vec<BlochVector>,
    pub densities: Vec<Vec<f64>>,
}

impl StateEnsemble {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Grid-aligned product ensemble strictly inside the cone: `n_phi`
/// azimuth bins (strided over branch 0) crossed with zenith bins
/// `1..=n_theta` of branch 1, so every state stays at least one grid
/// step away from both the pole and the cone boundary.
pub fn cone_ensemble(grid: &OnticGrid, n_phi: usize, n_theta: usize) -> Result<StateEnsemble> {
    if n_phi == 0 || n_phi > grid.g0 || n_theta == 0 || n_theta > grid.g1 - 2 {
        return Err(Error::Invalid(format!(
            "ensemble {n_phi}x{n_theta} does not fit strictly inside a {}x{} grid",
            grid.g0, grid.g1
        )));
    }
    let mut states = Vec::new();
    let mut densities = Vec::new();
    for k in 0..n_phi {
        let phi = grid.x0(k * grid.g0 / n_phi);
        for j in 1..=n_theta {
            let theta = grid.x1(j);
            let v = BlochVector::new(
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            )
            .expect("unit by construction");
            densities.push(snap(&v, grid)?);
            states.push(v);
        }
    }
    Ok(StateEnsemble { states, densities })
}

/// Nonnegative matrix whose columns each sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    data: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch {
                left: data.nrows(),
                left2: data.ncols(),
                right: data.nrows(),
                right2: data.nrows(),
            });
        }
        for j in 0..data.ncols() {
            let mut sum = 0.0;
            for i in 0..data.nrows() {
                let e = data[(i, j)];
                if e < -1e-12 {
                    return Err(Error::PositivityViolation { value: e });
                }
                sum += e;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "column {j} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { data })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }
}

/// Chapman-Kolmogorov composition: the matrix product of two kernels,
/// itself column-stochastic.
pub fn compose_kernels(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<KernelMatrix> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch {
            left: k1.dim(),
            left2: k1.dim(),
            right: k2.dim(),
            right2: k2.dim(),
        });
    }
    KernelMatrix::new(&k1.data * &k2.data)
}

/// Root-mean-square over the ensemble of the L2 deviations `||K rho_v -
/// rho_{Uv}||`.
pub fn kernel_residual(k: &KernelMatrix, sources: &DMatrix<f64>, targets: &DMatrix<f64>) -> f64 {
    let diff = &k.data * sources - targets;
    (diff.norm_squared() / sources.ncols() as f64).sqrt()
}

/// Outcome of a kernel fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub kernel: KernelMatrix,
    pub residual: f64,
    pub iterations: usize,
    /// True when the fit reached the feasibility tolerance; false means
    /// the budget ran out or the objective stalled at a positive floor.
    pub converged: bool,
}

/// Euclidean projection of a vector onto the probability simplex.
fn project_simplex(col: &mut [f64]) {
    let mut sorted: Vec<f64> = col.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("no NaN in kernel entries"));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    for e in col.iter_mut() {
        *e = (*e - tau).max(0.0);
    }
}

fn largest_gram_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let gram = a * a.transpose();
    let mut x = DVector::from_element(gram.nrows(), 1.0);
    let mut lambda = 0.0;
    for _ in 0..200 {
        let y = &gram * &x;
        lambda = y.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        x = y / lambda;
    }
    lambda
}

/// Feasibility tolerance on the RMS residual; a fit below this counts as
/// an exact kernel at double precision.
pub const FIT_TOL: f64 = 1e-11;

fn fit_to_targets(
    sources: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    budget: usize,
) -> FitResult {
    let g = sources.nrows();
    let e = sources.ncols() as f64;
    // uniform stochastic start, deterministic
    let mut k = DMatrix::from_element(g, g, 1.0 / g as f64);
    let lmax = largest_gram_eigenvalue(sources);
    let step = if lmax > 0.0 { 1.0 / (2.0 * lmax) } else { 0.0 };

    let mut residual = kernel_residual(
        &KernelMatrix {
            data: k.clone(),
        },
        sources,
        targets,
    );
    let mut iterations = 0;
    let stall_window = 500;
    let mut window_residual = residual;

    while iterations < budget && residual > FIT_TOL {
        let grad = (&k * sources - targets) * sources.transpose() * 2.0;
        k -= step * grad;
        for j in 0..g {
            let mut col: Vec<f64> = k.column(j).iter().copied().collect();
            project_simplex(&mut col);
            k.column_mut(j).copy_from_slice(&col);
        }
        iterations += 1;
        if iterations % stall_window == 0 {
            residual = (( &k * sources - targets).norm_squared() / e).sqrt();
            if window_residual - residual < 1e-13 * (1.0 + residual) {
                break;
            }
            window_residual = residual;
        }
    }
    residual = ((&k * sources - targets).norm_squared() / e).sqrt();
    let kernel = KernelMatrix::new(k).expect("projection keeps columns stochastic");
    FitResult {
        kernel,
        residual,
        iterations,
        converged: residual <= FIT_TOL,
    }
}

/// Fit a nonnegative column-stochastic kernel mapping each ensemble
/// density to the density of its rotated state, by projected gradient
/// descent with per-column simplex projection. Deterministic; a run that
/// stalls above tolerance returns the best kernel found with
/// `converged = false`.
pub fn fit_kernel(
    g: Generator,
    t: f64,
    ensemble: &StateEnsemble,
    grid: &OnticGrid,
    budget: usize,
) -> Result<FitResult> {
    if ensemble.is_empty() {
        return Err(Error::Invalid("empty ensemble".into()));
    }
    let dim = grid.dim();
    let n = ensemble.len();
    let mut sources = DMatrix::zeros(dim, n);
    let mut targets = DMatrix::zeros(dim, n);
    for (e, (v, rho)) in ensemble.states.iter().zip(&ensemble.densities).enumerate() {
        sources.column_mut(e).copy_from_slice(rho);
        let moved = bloch_flow(g, t, v);
        if !in_validity_cone(&moved) {
            return Err(Error::OutsideValidityCone {
                theta: to_spherical(&moved).theta(),
                bound: cone_half_angle(),
            });
        }
        targets.column_mut(e).copy_from_slice(&snap(&moved, grid)?);
    }
    Ok(fit_to_targets(&sources, &targets, budget))
}

/// One row of the residual table emitted by the gap study.
#[derive(Debug, Clone)]
pub struct ResidualRow {
    pub generator: &'static str,
    pub g0: usize,
    pub g1: usize,
    pub ensemble_size: usize,
    pub t: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Fit residuals for one generator across grid resolutions. Each run
/// uses a square grid, an 8 x 8 product ensemble, and an evolution time
/// of one azimuth grid step (so the z-generator kernel is an exact bin
/// permutation at every resolution).
pub fn markov_gap(g: Generator, resolutions: &[usize], budget: usize) -> Result<Vec<ResidualRow>> {
    let mut rows = Vec::new();
    for &res in resolutions {
        let grid = OnticGrid::new(res, res)?;
        let ensemble = cone_ensemble(&grid, 8.min(res), 8.min(res - 2))?;
        let t = grid.phi_step();
        let fit = fit_kernel(g, t, &ensemble, &grid, budget)?;
        rows.push(ResidualRow {
            generator: g.name(),
            g0: res,
            g1: res,
            ensemble_size: ensemble.len(),
            t,
            residual: fit.residual,
            iterations: fit.iterations,
        });
    }
    Ok(rows)
}

fn hermitian_deviation(h: &DMatrix<C64>) -> f64 {
    let mut dev = 0.0_f64;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Matrix exponential by scaling and squaring with a Taylor series.
fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|e| e.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / C64::new(2.0_f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=24 {
        term = (&term * &scaled) / C64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Evolve a state vector under `exp(-i H t)` for a Hermitian `H`.
pub fn evolve_axis(h: &DMatrix<C64>, t: f64, phi: &DVector<C64>) -> Result<DVector<C64>> {
    if !h.is_square() || h.nrows() != phi.len() {
        return Err(Error::DimensionMismatch {
            left: h.nrows(),
            left2: h.ncols(),
            right: phi.len(),
            right2: 1,
        });
    }
    let dev = hermitian_deviation(h);
    if dev > 1e-12 {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let gen = h.map(|e| -C64::i() * e * C64::new(t, 0.0));
    let out = expm(&gen) * phi;
    let norm = out.norm();
    if (norm - phi.norm()).abs() > 1e-12 {
        return Err(Error::Invalid(format!(
            "evolution failed to preserve the norm: {norm}"
        )));
    }
    Ok(out)
}
