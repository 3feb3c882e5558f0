//! Command-line verification suites for the ontoqubit models.
//!
//! Every subcommand runs a deterministic check suite and emits a
//! machine-readable report: JSON by default, CSV on request. The exit
//! code is 0 when all checks pass, 1 when any fails, and 2 on usage or
//! configuration errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ontoqubit::base_model;
use ontoqubit::family;
use ontoqubit::geometry::{born_probability, from_spherical, BlochVector, SphericalAngles};
use ontoqubit::group_checks;
use ontoqubit::markov::{self, Generator};
use ontoqubit::patch;
use ontoqubit::resource::{self, RoundoffModel};
use ontoqubit::rng::derive_stream;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::TAU;
use std::io::Write;
use std::time::Instant;

const REPORT_VERSION: &str = "1";

#[derive(Parser)]
#[command(name = "ontoqubit", version, about = "Hidden-variable qubit model verification suites")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the Born identity and the validity-cone boundary.
    VerifyBorn(VerifyBornArgs),
    /// Monte-Carlo weak simulation against Born frequencies.
    Sample(SampleArgs),
    /// Map the positivity region of a model-family member.
    Region(RegionArgs),
    /// Full-sphere patched model: Born identity and exclusion checks.
    Patches(PatchesArgs),
    /// Kernel-fit feasibility gap between z and y rotations.
    Nonmarkov(NonmarkovArgs),
    /// Symplectic generator set, Lie closure, orbit connectivity.
    Group(GroupArgs),
    /// Grid-allocation law and empirical round-off scaling.
    Resource(ResourceArgs),
    /// Algebraic constraint residuals of a model-family member.
    FamilyCheck(FamilyCheckArgs),
}

#[derive(Args)]
struct VerifyBornArgs {
    /// Preparations and events per side of the sweep grid.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SampleArgs {
    /// Number of (preparation, event) pairs.
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    /// Samples per pair.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Root seed (mandatory: sampling must be reproducible).
    #[arg(long, required = true)]
    seed: u64,
}

#[derive(Args)]
struct RegionArgs {
    /// Family zenith parameter; radians, or degrees with a `deg` suffix.
    #[arg(long, default_value = "1.5707963267948966")]
    theta0: String,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 48)]
    resolution: usize,
}

#[derive(Args)]
struct PatchesArgs {
    /// Random (preparation, event) pairs for the Born sweep.
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    /// Random preparations for the orthogonal-exclusion check.
    #[arg(long, default_value_t = 100)]
    exclusions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct NonmarkovArgs {
    #[arg(long, default_value_t = 16)]
    g0: usize,
    #[arg(long, default_value_t = 16)]
    g1: usize,
    /// Projected-gradient iteration budget per fit.
    #[arg(long, default_value_t = 50_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GroupArgs {
    /// Number of Haar-random states for orbit connectivity.
    #[arg(long, default_value_t = 100)]
    states: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ResourceArgs {
    /// Comma-separated per-dimension gradient magnitudes.
    #[arg(long, default_value = "1,4")]
    g: String,
    /// Information budget in nats; `lnX` evaluates the natural log of X.
    #[arg(long, default_value = "ln100")]
    info: String,
    /// Also measure the empirical round-off scaling slope.
    #[arg(long, default_value_t = false)]
    slope: bool,
}

#[derive(Args)]
struct FamilyCheckArgs {
    /// Family zenith parameter; radians, or degrees with a `deg` suffix.
    #[arg(long, default_value = "1.5707963267948966")]
    theta0: String,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Points per coordinate grid.
    #[arg(long, default_value_t = 32)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    tol: f64,
    pass: bool,
}

impl Check {
    fn below(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            pass: value <= tol,
        }
    }

    fn at_least(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            pass: value >= tol,
        }
    }

    fn exactly_zero(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol: 0.0,
            pass: value == 0.0,
        }
    }
}

#[derive(Serialize)]
struct Report {
    version: &'static str,
    config: Value,
    checks: Vec<Check>,
    elapsed_ms: u128,
}

struct Outcome {
    config: Value,
    checks: Vec<Check>,
    /// Extra plot-ready rows for CSV output: (header, rows).
    table: Option<(String, Vec<String>)>,
}

/// Parse an angle given in radians, or in degrees with a `deg` suffix.
fn parse_angle(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Some(deg) = t.strip_suffix("deg") {
        deg.trim()
            .parse::<f64>()
            .map(f64::to_radians)
            .map_err(|e| format!("bad angle '{text}': {e}"))
    } else {
        t.parse::<f64>().map_err(|e| format!("bad angle '{text}': {e}"))
    }
}

/// Parse a scalar, allowing `lnX` for the natural logarithm of X.
fn parse_scalar(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Some(arg) = t.strip_prefix("ln") {
        let x = arg
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad value '{text}': {e}"))?;
        if x <= 0.0 {
            return Err(format!("bad value '{text}': log of nonpositive number"));
        }
        Ok(x.ln())
    } else {
        t.parse::<f64>().map_err(|e| format!("bad value '{text}': {e}"))
    }
}

fn cone_state(rng: &mut impl Rng) -> BlochVector {
    let theta = base_model::cone_half_angle() * rng.gen::<f64>();
    let phi = TAU * rng.gen::<f64>();
    from_spherical(&SphericalAngles::new(theta, phi).expect("angles in range"))
}

fn sphere_state(rng: &mut impl Rng) -> BlochVector {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi = TAU * rng.gen::<f64>();
    let r = (1.0 - z * z).sqrt();
    BlochVector::new(r * phi.cos(), r * phi.sin(), z).expect("unit by construction")
}

fn run_verify_born(a: &VerifyBornArgs) -> Result<Outcome, String> {
    let theta0 = base_model::cone_half_angle();
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let frac = |x: f64| x - x.floor();
    let mut max_residual = 0.0_f64;
    for i in 0..a.grid {
        let theta = theta0 * (i as f64 + 0.5) / a.grid as f64;
        let phi = TAU * frac(i as f64 / golden);
        let v = from_spherical(&SphericalAngles::new(theta, phi).expect("grid angles"));
        for j in 0..a.grid {
            let wz = 1.0 - 2.0 * (j as f64 + 0.5) / a.grid as f64;
            let wphi = TAU * frac(j as f64 / golden + 0.5);
            let r = (1.0 - wz * wz).sqrt();
            let w = BlochVector::new(r * wphi.cos(), r * wphi.sin(), wz)
                .expect("unit by construction");
            let res = base_model::born_check(&v, &w).map_err(|e| e.to_string())?;
            max_residual = max_residual.max(res);
        }
    }
    let boundary = base_model::validity_boundary();
    let target = (3.0_f64 / 5.0).acos();
    Ok(Outcome {
        config: json!({"command": "verify-born", "grid": a.grid, "seed": a.seed}),
        checks: vec![
            Check::below("born_identity_max_residual", max_residual, 1e-12),
            Check::below("boundary_half_angle_error", (boundary - target).abs(), 1e-6),
        ],
        table: None,
    })
}

fn run_sample(a: &SampleArgs) -> Result<Outcome, String> {
    let mut worst = 0.0_f64;
    for k in 0..a.pairs {
        let mut rng = derive_stream(a.seed, &format!("sample-pair-{k}"));
        let v = cone_state(&mut rng);
        let w = sphere_state(&mut rng);
        let p = born_probability(&w, &v);
        let mut hits = 0u64;
        for _ in 0..a.samples {
            let s = base_model::prepare_sample(&v, &mut rng).map_err(|e| e.to_string())?;
            if base_model::sample_outcome(&w, &s, &mut rng).map_err(|e| e.to_string())? == 1 {
                hits += 1;
            }
        }
        let freq = hits as f64 / a.samples as f64;
        let sigma = (p * (1.0 - p) / a.samples as f64).sqrt().max(1e-12);
        worst = worst.max((freq - p).abs() / sigma);
    }
    Ok(Outcome {
        config: json!({
            "command": "sample", "pairs": a.pairs, "samples": a.samples, "seed": a.seed
        }),
        checks: vec![Check::below("max_frequency_deviation_sigmas", worst, 4.5)],
        table: None,
    })
}

fn run_region(a: &RegionArgs) -> Result<Outcome, String> {
    let theta0 = parse_angle(&a.theta0)?;
    let params = family::ModelParams::new(theta0, a.s).map_err(|e| e.to_string())?;
    let rows = family::positivity_region(&params, a.resolution);
    let recovered = family::recovered_cone_half_angle(&rows);
    let step = std::f64::consts::PI / a.resolution as f64;
    let valid = rows.iter().filter(|r| r.valid).count();
    let table_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.theta0,
                r.s,
                r.theta_v,
                r.phi_v,
                u8::from(r.valid)
            )
        })
        .collect();
    Ok(Outcome {
        config: json!({
            "command": "region", "theta0": theta0, "s": a.s, "resolution": a.resolution
        }),
        checks: vec![
            Check::below(
                "recovered_half_angle_error",
                (recovered - base_model::cone_half_angle()).abs(),
                step,
            ),
            Check::at_least("valid_cell_count", valid as f64, 1.0),
        ],
        table: Some(("theta0,s,theta_v,phi_v,valid".into(), table_rows)),
    })
}

fn run_patches(a: &PatchesArgs) -> Result<Outcome, String> {
    let atlas = patch::build_atlas();
    let mut rng = derive_stream(a.seed, "patches-born");
    let mut max_residual = 0.0_f64;
    for _ in 0..a.pairs {
        let v = sphere_state(&mut rng);
        let w = sphere_state(&mut rng);
        let r = patch::born_check_full(&v, &w, &atlas).map_err(|e| e.to_string())?;
        max_residual = max_residual.max(r);
    }
    let mut rng = derive_stream(a.seed, "patches-exclusion");
    let mut max_exclusion = 0.0_f64;
    for _ in 0..a.exclusions {
        let v = sphere_state(&mut rng);
        let (m, d) = patch::prepare_density_full(&v, &atlas);
        for (x, n) in [(d.point0, 0), (d.point1, 1)] {
            let mut s = base_model::OnticState::new(x, n);
            s.m = Some(m);
            let p = patch::response_full(&(-v), &s, &atlas).map_err(|e| e.to_string())?;
            max_exclusion = max_exclusion.max(p);
        }
    }
    Ok(Outcome {
        config: json!({
            "command": "patches", "pairs": a.pairs, "exclusions": a.exclusions, "seed": a.seed
        }),
        checks: vec![
            Check::below("full_sphere_born_max_residual", max_residual, 1e-12),
            Check::exactly_zero("orthogonal_event_max_probability", max_exclusion),
        ],
        table: None,
    })
}

fn run_nonmarkov(a: &NonmarkovArgs) -> Result<Outcome, String> {
    let grid = markov::OnticGrid::new(a.g0, a.g1).map_err(|e| e.to_string())?;
    let t = grid.phi_step();
    // Keep the ensemble deep enough inside the cone that a tilt by t
    // cannot push any member across the boundary.
    let max_depth = ((base_model::cone_half_angle() - t) / grid.theta_step()).floor() as usize;
    if max_depth == 0 {
        return Err(format!("grid {}x{} too coarse for a tilt-safe ensemble", a.g0, a.g1));
    }
    let ensemble = markov::cone_ensemble(&grid, 8.min(a.g0), 8.min(max_depth))
        .map_err(|e| e.to_string())?;
    let z = markov::fit_kernel(Generator::Z, t, &ensemble, &grid, a.budget)
        .map_err(|e| e.to_string())?;
    let y = markov::fit_kernel(Generator::Y, t, &ensemble, &grid, a.budget)
        .map_err(|e| e.to_string())?;
    let ratio = y.residual / z.residual.max(markov::FIT_TOL);
    let rows = vec![
        format!(
            "z,{},{},{},{},{},{}",
            a.g0,
            a.g1,
            ensemble.len(),
            t,
            z.residual,
            z.iterations
        ),
        format!(
            "y,{},{},{},{},{},{}",
            a.g0,
            a.g1,
            ensemble.len(),
            t,
            y.residual,
            y.iterations
        ),
    ];
    Ok(Outcome {
        config: json!({
            "command": "nonmarkov", "g0": a.g0, "g1": a.g1,
            "budget": a.budget, "seed": a.seed, "t": t, "ensemble": ensemble.len()
        }),
        checks: vec![
            Check::below("z_rotation_fit_residual", z.residual, 1e-9),
            Check::at_least("y_to_z_residual_ratio", ratio, 100.0),
        ],
        table: Some((
            "generator,g0,g1,ensemble_size,t,residual,iterations".into(),
            rows,
        )),
    })
}

fn run_group(a: &GroupArgs) -> Result<Outcome, String> {
    let dim = group_checks::lie_closure_dim(&group_checks::sp2_generators());
    let mut rng = derive_stream(a.seed, "group-orbit");
    let mut min_fidelity = 1.0_f64;
    for _ in 0..a.states {
        let psi = group_checks::haar_state(&mut rng);
        let r = group_checks::orbit_connect(&psi, 100_000).map_err(|e| e.to_string())?;
        min_fidelity = min_fidelity.min(r.fidelity);
    }
    let tight = group_checks::shrinking_margin(2, 1);
    let loose = group_checks::shrinking_margin(2, 2);
    Ok(Outcome {
        config: json!({"command": "group", "states": a.states, "seed": a.seed}),
        checks: vec![
            Check {
                name: "lie_closure_dimension".into(),
                value: dim as f64,
                tol: 10.0,
                pass: dim == 10,
            },
            Check::at_least("min_orbit_fidelity", min_fidelity, 1.0 - 1e-6),
            Check {
                name: "memory_one_bit_contradiction".into(),
                value: f64::from(u8::from(tight.contradiction)),
                tol: 1.0,
                pass: tight.contradiction,
            },
            Check {
                name: "memory_two_bits_consistent".into(),
                value: f64::from(u8::from(!loose.contradiction)),
                tol: 1.0,
                pass: !loose.contradiction,
            },
        ],
        table: None,
    })
}

fn run_resource(a: &ResourceArgs) -> Result<Outcome, String> {
    let g: Vec<f64> = a
        .g
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad gradient list: {e}")))
        .collect::<Result<_, _>>()?;
    let info = parse_scalar(&a.info)?;
    let plan = resource::optimal_allocation(&g, info).map_err(|e| e.to_string())?;
    let budget_residual = (plan.n.iter().map(|x| x.ln()).sum::<f64>() - info).abs();
    let round_trip = (resource::required_information(&g, plan.delta_e)
        .map_err(|e| e.to_string())?
        - info)
        .abs();
    let mut checks = vec![
        Check::below("budget_identity_residual", budget_residual, 1e-9),
        Check::below("information_round_trip_residual", round_trip, 1e-12),
    ];
    for (i, n) in plan.n.iter().enumerate() {
        checks.push(Check {
            name: format!("grid_n{i}"),
            value: *n,
            tol: 0.0,
            pass: true,
        });
    }
    let mut table = None;
    if a.slope {
        let ns: Vec<usize> = (4..=10).map(|k| 1usize << k).collect();
        let mut rows = Vec::new();
        let mut errors = Vec::new();
        for &n in &ns {
            let e = resource::empirical_roundoff(RoundoffModel::Base, n)
                .map_err(|e| e.to_string())?;
            let predicted = resource::predicted_error(&[1.0], (n as f64).ln())
                .map_err(|e| e.to_string())?;
            rows.push(format!("base,{n},{e},{predicted}"));
            errors.push(e);
        }
        let slope = resource::loglog_slope(&ns, &errors);
        checks.push(Check::below("roundoff_slope_deviation", (slope + 1.0).abs(), 0.05));
        table = Some(("model,n,measured_error,predicted_error".into(), rows));
    }
    Ok(Outcome {
        config: json!({
            "command": "resource", "g": g, "info_nats": info,
            "info_bits": info / 2.0_f64.ln(), "slope": a.slope,
            "predicted_error": plan.delta_e
        }),
        checks,
        table,
    })
}

fn run_family_check(a: &FamilyCheckArgs) -> Result<Outcome, String> {
    let theta0 = parse_angle(&a.theta0)?;
    let params = family::ModelParams::new(theta0, a.s).map_err(|e| e.to_string())?;
    let x0s = family::x0_grid(a.grid);
    let x1s = family::x1_grid(a.grid);
    let ortho = family::verify_orthogonality(&x0s, &x1s, &params).map_err(|e| e.to_string())?;
    let main = family::verify_main_constraint(&x0s, &x1s, &params).map_err(|e| e.to_string())?;

    let mut rng = derive_stream(a.seed, "family-quadruples");
    let (mut det, mut null_r, mut null_s) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let x0 = rng.gen_range(0.0..TAU);
        let y0 = rng.gen_range(0.0..TAU);
        let x1 = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
        let y1 = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
        let rep =
            family::verify_det_r_null(x0, x1, y0, y1, &params).map_err(|e| e.to_string())?;
        det = det.max(rep.det);
        null_r = null_r.max(rep.null_r);
        null_s = null_s.max(rep.null_s);
    }

    let mut rng = derive_stream(a.seed, "family-h-grid");
    let vs: Vec<BlochVector> = (0..500)
        .map(|_| {
            let c = family::CoordPair::new(
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.05..std::f64::consts::PI - 0.05),
            )
            .expect("coordinates in range");
            family::coord_to_bloch(&c, &params).expect("interior coordinates")
        })
        .collect();
    let h = family::verify_h_consistency(&vs, &params).map_err(|e| e.to_string())?;

    let mut checks = vec![
        Check::below("minkowski_orthogonality_residual", ortho, 1e-10),
        Check::below("unit_norm_constraint_residual", main, 1e-10),
        Check::below("weight_matrix_max_det", det, 1e-10),
        Check::below("null_vector_weight_residual", null_r, 1e-10),
        Check::below("null_vector_source_residual", null_s, 1e-10),
        Check::below("overlap_function_consistency", h, 1e-10),
    ];
    if params == family::ModelParams::base() {
        let theta_cap = base_model::cone_half_angle();
        let mut reduction = 0.0_f64;
        let mut rng = derive_stream(a.seed, "family-reduction");
        for _ in 0..2000 {
            let w = sphere_state(&mut rng);
            let x0 = rng.gen_range(0.0..TAU);
            let x1 = rng.gen_range(1e-3..theta_cap);
            for (x, n) in [(x0, 0u8), (x1, 1u8)] {
                let f = family::response_family(&w, n, x, &params).map_err(|e| e.to_string())?;
                let b = base_model::response(&w, &base_model::OnticState::new(x, n))
                    .map_err(|e| e.to_string())?;
                reduction = reduction.max((f - b).abs());
            }
        }
        checks.push(Check::below("spherical_limit_reduction_residual", reduction, 1e-12));
    }
    Ok(Outcome {
        config: json!({
            "command": "family-check", "theta0": theta0, "s": a.s,
            "grid": a.grid, "seed": a.seed
        }),
        checks,
        table: None,
    })
}

fn emit(report: &Report, outcome: &Outcome, format: Format, output: Option<&std::path::Path>) {
    let body = match format {
        Format::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        Format::Csv => {
            if let Some((header, rows)) = &outcome.table {
                let mut s = String::from(header.as_str());
                s.push('\n');
                for r in rows {
                    s.push_str(r);
                    s.push('\n');
                }
                s
            } else {
                let mut s = String::from("name,value,tol,pass\n");
                for c in &report.checks {
                    s.push_str(&format!("{},{},{},{}\n", c.name, c.value, c.tol, c.pass));
                }
                s
            }
        }
    };
    match output {
        Some(path) => {
            std::fs::write(path, body).unwrap_or_else(|e| {
                eprintln!("cannot write {}: {e}", path.display());
                std::process::exit(2);
            });
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).expect("stdout writable");
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("ONTOQUBIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let start = Instant::now();
    let result = match &cli.command {
        Command::VerifyBorn(a) => run_verify_born(a),
        Command::Sample(a) => run_sample(a),
        Command::Region(a) => run_region(a),
        Command::Patches(a) => run_patches(a),
        Command::Nonmarkov(a) => run_nonmarkov(a),
        Command::Group(a) => run_group(a),
        Command::Resource(a) => run_resource(a),
        Command::FamilyCheck(a) => run_family_check(a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    };
    let all_pass = outcome.checks.iter().all(|c| c.pass);
    let report = Report {
        version: REPORT_VERSION,
        config: outcome.config.clone(),
        checks: outcome
            .checks
            .iter()
            .map(|c| Check {
                name: c.name.clone(),
                value: c.value,
                tol: c.tol,
                pass: c.pass,
            })
            .collect(),
        elapsed_ms: start.elapsed().as_millis(),
    };
    emit(&report, &outcome, cli.format, cli.output.as_deref());
    std::process::exit(i32::from(!all_pass));
}
