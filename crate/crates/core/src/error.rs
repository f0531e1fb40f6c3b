use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite value appeared during time integration.
    #[error("numerical blowup at t = {t:e} (species {species}, cell {cell})")]
    Blowup { t: f64, species: usize, cell: usize },

    #[error("solver error: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
