use std::path::PathBuf;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("schema version mismatch in {}: found {found}, expected {expected}", path.display())]
    SchemaVersion {
        path: PathBuf,
        found: String,
        expected: u32,
    },
    #[error("unknown toggle `{0}`")]
    UnknownToggle(String),
    #[error("{}: expected a `{expected}` document, found `{found}`", path.display())]
    WrongKind {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },
    #[error("cannot parse {}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(rrex_core::Error),
}

impl From<rrex_core::Error> for LabError {
    fn from(e: rrex_core::Error) -> Self {
        match e {
            rrex_core::Error::UnknownToggle(name) => LabError::UnknownToggle(name),
            other => LabError::Core(other),
        }
    }
}
