use std::path::PathBuf;

/// Crate-wide error type.
///
/// Configuration problems (bad parameters, mismatched dimensions, invalid
/// scene specs) are distinct from data problems (unreadable or malformed
/// files) so callers can map them to different exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what}: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        what: &'static str,
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("plane buffer holds {got} values but {width}x{height} needs {needed}")]
    PlaneSize {
        width: usize,
        height: usize,
        needed: usize,
        got: usize,
    },

    #[error("mosaic dimensions must be even, got {width}x{height}")]
    OddMosaicDimensions { width: usize, height: usize },

    #[error("filter pattern must be a permutation of the four orientations")]
    InvalidPattern,

    #[error("need at least 3 polarizer angles, got {got}")]
    TooFewAngles { got: usize },

    #[error("{angles} polarizer angles but {planes} intensity planes")]
    PlaneCount { angles: usize, planes: usize },

    #[error("polarizer angles {a} and {b} coincide modulo pi")]
    AnglesCoincide { a: f64, b: f64 },

    #[error("intensity {value} at plane {plane}, pixel ({x}, {y}) is not finite and non-negative")]
    BadIntensity {
        plane: usize,
        x: usize,
        y: usize,
        value: f64,
    },

    #[error("sinusoid fit needs at least 3 samples, got {got}")]
    TooFewSamples { got: usize },

    #[error("sinusoid fit is degenerate: sample angles coincide modulo pi")]
    DegenerateFit,

    #[error("{what} = {value} is outside its valid range")]
    Domain { what: &'static str, value: f64 },

    #[error("refraction index must be finite and > 1, got {n}")]
    RefractionIndex { n: f64 },

    #[error("window size must be an odd integer >= 3, got {got}")]
    WindowSize { got: usize },

    #[error("noise-density exponent must be finite and > 0, got {got}")]
    Exponent { got: f64 },

    #[error("smoothing step size must lie in (0, 1], got {got}")]
    StepSize { got: f64 },

    #[error("reliability floor must lie in [0, 1), got {got}")]
    ReliabilityFloor { got: f64 },

    #[error("scene spec: {0}")]
    Scene(String),

    #[error("no valid pixels to summarize")]
    NoValidPixels,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {message}")]
    Pfm { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: unsupported pixel format (expected 8-bit or 16-bit grayscale)")]
    PixelFormat { path: PathBuf },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by unreadable, missing, or malformed files
    /// rather than by invalid configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Image { .. }
                | Error::Pfm { .. }
                | Error::Json { .. }
                | Error::PixelFormat { .. }
        )
    }
}
