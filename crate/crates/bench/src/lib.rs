//! Benchmark inputs shared by the criterion targets.

use flockstab_core::{fixtures, FlockSpec};

/// Named specs exercised by the benches.
pub fn workloads() -> Vec<(&'static str, FlockSpec)> {
    vec![("triatomic", fixtures::figure1()), ("diatomic", fixtures::figure3ab())]
}
