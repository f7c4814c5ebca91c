use std::path::PathBuf;

use thiserror::Error;

/// Every failure surfaced by the library. Variants are grouped by the stage
/// that raises them so the CLI can map them onto a stage/code pair.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("degenerate boundary: total area is zero")]
    DegenerateBoundary,

    #[error("no atoms produced: {0}")]
    NoAtoms(String),

    #[error("atom id {id} out of range (grid has {len} atoms)")]
    AtomOutOfRange { id: usize, len: usize },

    #[error("projection mismatch: {0}")]
    ProjectionMismatch(String),

    #[error("geojson: {0}")]
    GeoJson(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("too many bad rows in {path}: {bad} of {total} rejected")]
    TooManyBadRows { path: String, bad: usize, total: usize },

    #[error("duplicate census key (block {block_id}, year {year})")]
    DuplicateCensusKey { block_id: String, year: i32 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no calls; tau undefined")]
    NoCalls,

    #[error("beat assignment {beat} of atom {atom} is outside 0..{k}")]
    BeatOutOfRange { atom: usize, beat: usize, k: usize },

    #[error("rank-deficient regressors; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("missing census values: {0}")]
    NullCensus(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("unsplittable beat {0}: fewer than two atoms")]
    Unsplittable(usize),

    #[error("refusing to build dense model: {0}")]
    ModelTooLarge(String),

    #[error("lp format: line {line}: {message}")]
    Lp { line: usize, message: String },

    #[error("binary cache: {0}")]
    Cache(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable code used in the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidPolygon(_) => "invalid_polygon",
            Error::DegenerateBoundary => "degenerate_boundary",
            Error::NoAtoms(_) => "no_atoms",
            Error::AtomOutOfRange { .. } => "atom_out_of_range",
            Error::ProjectionMismatch(_) => "projection_mismatch",
            Error::GeoJson(_) => "geojson",
            Error::Parse { .. } => "parse",
            Error::TooManyBadRows { .. } => "too_many_bad_rows",
            Error::DuplicateCensusKey { .. } => "duplicate_census_key",
            Error::InvalidInput(_) => "invalid_input",
            Error::NoCalls => "no_calls",
            Error::BeatOutOfRange { .. } => "beat_out_of_range",
            Error::RankDeficient(_) => "rank_deficient",
            Error::NullCensus(_) => "null_census",
            Error::Singular(_) => "singular",
            Error::Unsplittable(_) => "unsplittable",
            Error::ModelTooLarge(_) => "model_too_large",
            Error::Lp { .. } => "lp_format",
            Error::Cache(_) => "cache_format",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
