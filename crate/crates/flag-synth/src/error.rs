use std::fmt;
use std::io;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced while parsing inputs, building models, or fitting
/// parameters.
///
/// The CLI maps these onto its exit codes: I/O and parse failures are
/// distinct from degenerate data, which is distinct from illegal
/// parameters and from incomplete attribute coverage.
#[derive(Debug)]
pub enum Error {
    /// Underlying I/O failure.
    Io(io::Error),
    /// Malformed input. `line` is 1-based; for headered CSV input it
    /// counts data rows, not physical lines.
    Parse { line: usize, message: String },
    /// The interaction log contains no usable interactions.
    EmptyDataset,
    /// No entities remain after filtering.
    EmptyDistribution,
    /// Too few distinct profile sizes to estimate an exponent.
    DegenerateDistribution { distinct: usize },
    /// A numeric routine failed to converge or produced a non-finite value.
    Numeric(String),
    /// A parameter is outside its documented range.
    InvalidParameter(String),
    /// The requested expected fraction is unreachable for this
    /// distribution at the given skew.
    IllegalBeta { beta: f64, beta_max: f64 },
    /// Every cell of the requested search grid was illegal. Carries the
    /// largest legal beta for each alpha that was tried.
    NoFeasibleFit { beta_max_by_alpha: Vec<(f64, f64)> },
    /// An attribute table is missing entities that the profile
    /// distribution contains.
    Coverage { missing: usize, example: String },
    /// Two artifacts that must describe the same entities do not.
    Consistency(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::EmptyDataset => write!(f, "dataset contains no interactions"),
            Error::EmptyDistribution => write!(f, "no entities left after filtering"),
            Error::DegenerateDistribution { distinct } => write!(
                f,
                "degenerate distribution: {distinct} distinct profile size(s), need at least 2"
            ),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::IllegalBeta { beta, beta_max } => write!(
                f,
                "beta {beta} exceeds the largest legal value {beta_max} for this distribution"
            ),
            Error::NoFeasibleFit { beta_max_by_alpha } => {
                write!(f, "no legal (alpha, beta) cell in the search grid; ")?;
                match beta_max_by_alpha.iter().map(|&(_, b)| b).fold(None, |m: Option<f64>, b| {
                    Some(m.map_or(b, |m| if b > m { b } else { m }))
                }) {
                    Some(best) => write!(f, "largest legal beta over the grid is {best}"),
                    None => write!(f, "the alpha grid is empty"),
                }
            }
            Error::Coverage { missing, example } => write!(
                f,
                "attribute table does not cover {missing} entity(ies) in the distribution, e.g. {example:?}"
            ),
            Error::Consistency(msg) => write!(f, "inconsistent artifacts: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
