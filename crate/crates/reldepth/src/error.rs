use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Annotation file violates the schema or an object-level invariant.
    #[error("annotation error in image '{image_id}'{}, field '{field}': {message}",
            object_id.as_deref().map(|o| format!(", object '{o}'")).unwrap_or_default())]
    Annotation {
        image_id: String,
        object_id: Option<String>,
        field: &'static str,
        message: String,
    },

    /// A depth-map file is malformed or inconsistent with its annotation.
    #[error("depth map error{}: {message}", path.as_deref().map(|p| format!(" in '{p}'")).unwrap_or_default())]
    DepthMap {
        path: Option<String>,
        message: String,
    },

    /// Invalid run or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Geometric input violates a precondition (degenerate box, box outside
    /// the image or depth map).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Inputs that must be aligned have different lengths.
    #[error("length mismatch: {context} ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// A feature matrix contains NaN or infinite entries.
    #[error("non-finite value in column '{column}' at row {row}")]
    NonFinite { column: String, row: usize },

    /// Training input is degenerate (fewer than two classes, empty matrix).
    #[error("training error: {0}")]
    Training(String),

    /// A model was applied to data with a different feature schema.
    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A persisted artifact has an unsupported version or kind.
    #[error("unsupported {artifact} version {found} (expected {expected})")]
    Version {
        artifact: &'static str,
        found: u32,
        expected: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
