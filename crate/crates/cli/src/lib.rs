//! Experiment harness and command implementations behind the `maxreg` binary.

pub mod bounds_table;
pub mod config;
pub mod experiment;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: maxreg::Error,
    },
    #[error(transparent)]
    Core(#[from] maxreg::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            CliError::Core(e) | CliError::File { source: e, .. } => Some(e),
            _ => None,
        };
        if core.is_some_and(|e| e.is_numerical()) {
            3
        } else {
            2
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Load a network from a JSON file, naming the file in errors.
pub fn load_network(path: &std::path::Path) -> Result<maxreg::Network> {
    let wrap = |source| CliError::File {
        path: path.display().to_string(),
        source,
    };
    let text = std::fs::read_to_string(path).map_err(|e| wrap(e.into()))?;
    maxreg::Network::from_json(&text).map_err(wrap)
}

/// Run `f` on a pool of `workers` threads (rayon's default when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
