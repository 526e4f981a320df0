use crate::drt::DrtResult;

/// Unified error type for the pipeline.
///
/// Variants are grouped by the stage that raises them; the CLI maps
/// `Validation`/`KkFailed` onto exit code 1 and everything else onto 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally valid input that violates a physical or range invariant.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Spectra to be averaged disagree on frequencies or metadata.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Missing or inconsistent (SoC, temperature, cell) coverage.
    #[error("metadata error: {0}")]
    Metadata(String),

    /// Bad configuration value or combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A linear system was too ill-conditioned or under-determined to solve.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// Iterative solver hit its iteration cap. For the regularized DRT solve
    /// the best iterate reached so far is attached.
    #[error("solver did not converge: {message}")]
    Convergence {
        message: String,
        best: Option<Box<DrtResult>>,
    },

    /// The consistency check failed and the caller did not override it.
    #[error("Kramers-Kronig check failed: max relative residual {max_residual:.3e} >= {threshold:.3e}")]
    KkFailed { max_residual: f64, threshold: f64 },

    /// Peak structure does not line up across operating points.
    #[error("structural error: {0}")]
    Structural(String),

    /// Requested temperature lies outside the characterized range.
    #[error("temperature {requested} degC outside characterized range [{min}, {max}] degC; extrapolation is refused")]
    TemperatureRange { requested: f64, min: f64, max: f64 },

    /// Requested voltage lies outside the model's voltage limits.
    #[error("voltage {requested} V outside model limits [{min}, {max}] V")]
    VoltageRange { requested: f64, min: f64, max: f64 },

    /// Reference and simulated series do not overlap in time.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Model file carries a schema version this build does not understand.
    #[error("unsupported model schema version {found} (supported: {supported})")]
    SchemaVersion { found: u32, supported: u32 },

    /// Model file does not match the schema.
    #[error("model schema error: {0}")]
    Schema(String),

    /// Pipeline stages invoked out of order.
    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
