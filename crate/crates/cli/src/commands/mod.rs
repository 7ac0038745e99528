pub mod acd;
pub mod bench;
pub mod collect;
pub mod eval;
pub mod gen;
pub mod plot;
pub mod train;

use anyhow::Result;

use crate::config::RunConfig;
use crate::Common;

/// Load the config file and apply the global flag overrides.
pub fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    Ok(cfg)
}

/// Run a closure inside a rayon pool bounded by the configured job count.
pub fn with_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_jobs())
        .build()?;
    Ok(pool.install(f))
}
