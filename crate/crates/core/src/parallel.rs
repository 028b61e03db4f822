//! Thread-count control for candidate-parallel evaluation.

use crate::error::{Error, Result};

/// Environment variable that overrides any thread count given in code or
/// on the command line.
pub const THREADS_ENV: &str = "CCFFS_THREADS";

/// Effective thread count: `CCFFS_THREADS`, then `requested`, then the
/// available parallelism.
pub fn resolve_threads(requested: Option<usize>) -> Result<usize> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        return match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::InvalidArgument(format!(
                "{THREADS_ENV} must be a positive integer, got '{raw}'"
            ))),
        };
    }
    match requested {
        Some(0) => Err(Error::InvalidArgument(
            "thread count must be positive".into(),
        )),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (default: available
/// parallelism). Does not consult the environment.
pub fn install<R, F>(threads: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}
