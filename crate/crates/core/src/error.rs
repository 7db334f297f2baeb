use std::fmt;
use std::path::PathBuf;

/// One violated invariant, located by a dotted path into the case.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every invariant violation found in a case. Validation never stops at the first issue.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// True when some issue path starts with `prefix`.
    pub fn mentions(&self, prefix: &str) -> bool {
        self.issues.iter().any(|i| i.path.starts_with(prefix))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} invariant violation(s):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid case\n{0}")]
    Validation(ValidationReport),

    #[error("{0}")]
    InvalidInput(String),

    #[error("{entity} emitted twice into the same program")]
    DuplicateEmission { entity: String },

    #[error("{module}: {message}")]
    Emit {
        module: &'static str,
        message: String,
    },

    #[error("program check failed: {0}")]
    Program(String),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("missing variable `{0}` in solution")]
    MissingVariable(String),

    #[error("backend failure at the root node: {status}; program dumped to {dump:?}")]
    RootFailure {
        status: String,
        dump: Option<PathBuf>,
    },

    #[error("{what} too large for enumeration: {count} binaries (limit {limit})")]
    TooManyBinaries {
        what: &'static str,
        count: usize,
        limit: usize,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn emit(module: &'static str, message: impl Into<String>) -> Self {
        Error::Emit {
            module,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
