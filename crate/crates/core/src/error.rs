use thiserror::Error;

/// Errors produced by the distribution, performance and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported Nuttall Q index pair (p = {p}, q = {q}): p + q must be odd")]
    NuttallParity { p: u32, q: u32 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "near-degenerate noncentrality spectrum: lambda[{i}] = {a} and lambda[{j}] = {b} \
         differ by less than the relative gap {gap}"
    )]
    DegenerateSpectrum {
        i: usize,
        j: usize,
        a: f64,
        b: f64,
        gap: f64,
    },

    #[error("dimension s = {s} exceeds the supported cap of {cap}")]
    DimensionCap { s: usize, cap: usize },

    #[error("asymptotic coefficient for k = {k} is not positive (determinant sign {sign})")]
    NonPositiveCoefficient { k: usize, sign: i8 },

    #[error("quadrature did not converge: estimate {value:e}, error estimate {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("Hermitian eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e}, diagonal norm {diagonal:e})")]
    Eigensolver {
        sweeps: usize,
        off_diagonal: f64,
        diagonal: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
