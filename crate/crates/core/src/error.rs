use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} is outside a lattice of {len} sites")]
    InvalidSite { site: usize, len: usize },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary collar too thin: interaction of range {required} needs a collar of width {required} around the volume")]
    CollarTooThin { required: usize },

    #[error("volume of {sites} sites exceeds the enumeration cap of {cap} sites; {hint}")]
    VolumeTooLarge {
        sites: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("interaction is not translation invariant: {0}")]
    NotTranslationInvariant(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
