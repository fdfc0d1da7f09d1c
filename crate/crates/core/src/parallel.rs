//! Index-ordered parallel map. Results are gathered by index, so output
//! never depends on scheduling.

use crate::error::Result;

/// Caps the worker pool from `HVFWI_THREADS` once per process.
#[cfg(feature = "parallel")]
fn init_pool() {
    static INIT: std::sync::Once = std::sync::Once::new();
    INIT.call_once(|| {
        if let Some(n) = std::env::var("HVFWI_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
            // a pool installed earlier by the host application wins
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    });
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    init_pool();
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}
