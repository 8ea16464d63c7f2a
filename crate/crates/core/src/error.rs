use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed wav: {0}")]
    MalformedWav(String),
    #[error("unsupported wav format: {0}")]
    UnsupportedFormat(String),
    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid audio clip: {0}")]
    InvalidClip(String),

    #[error("invalid stft config: {0}")]
    InvalidStftConfig(String),
    #[error("clip too short: {len} samples, window needs {window}")]
    ClipTooShort { len: usize, window: usize },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("negative frequency: {0} Hz")]
    NegativeFrequency(f64),
    #[error("negative mel value: {0}")]
    NegativeMel(f64),
    #[error("invalid partition config: {0}")]
    InvalidPartition(String),
    #[error("degenerate band {band}: boundaries map to the same bin")]
    DegenerateBand { band: usize },
    #[error("bin {bin} out of range (spectrum has {bins} bins)")]
    BinOutOfRange { bin: usize, bins: usize },

    #[error("invalid loudness contour: {0}")]
    InvalidContour(String),

    #[error("empty band")]
    EmptyBand,
    #[error("weight count mismatch: expected {expected}, found {found}")]
    WeightCountMismatch { expected: usize, found: usize },
    #[error("invalid compression exponent {0}; must lie in (0, 1]")]
    InvalidAlpha(f64),
    #[error("invalid loss config: {0}")]
    InvalidLossConfig(String),
    #[error("length mismatch: {est} vs {reference} samples")]
    LengthMismatch { est: usize, reference: usize },
    #[error("sample rate differs between clips: {est} vs {reference} Hz")]
    RateMismatch { est: u32, reference: u32 },

    #[error("reference signal is silent")]
    SilentReference,
    #[error("estimate has no component along the reference")]
    OrthogonalEstimate,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("training diverged at step {step}")]
    DivergenceDetected { step: usize },
}
