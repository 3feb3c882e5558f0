use thiserror::Error;

/// Errors produced by the model and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {norm} deviates from 1 by more than 1e-9")]
    NonUnitVector { norm: f64 },

    #[error("{name} = {value} outside valid range [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("preparation at zenith {theta} lies outside the validity cone (bound {bound})")]
    OutsideValidityCone { theta: f64, bound: f64 },

    #[error("ontic state (x={x}, n=1) outside the validity interval [0, {bound}]")]
    InvalidOnticState { x: f64, bound: f64 },

    #[error("input at a coordinate pole (distance {delta} from singularity)")]
    PoleSingularity { delta: f64 },

    #[error("model parameters (theta0={theta0}, s={s}) violate |cos theta0| <= s <= 1")]
    InvalidModelParams { theta0: f64, s: f64 },

    #[error("response value {value} outside [0, 1]: state outside positivity region")]
    PositivityViolation { value: f64 },

    #[error("matrix dimensions {left}x{left2} and {right}x{right2} do not conform")]
    DimensionMismatch {
        left: usize,
        left2: usize,
        right: usize,
        right2: usize,
    },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {deviation})")]
    NonHermitian { deviation: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
