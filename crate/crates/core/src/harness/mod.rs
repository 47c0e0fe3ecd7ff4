//! CLI, configuration, CSV output, eigendecomposition cache and manifests.

pub mod cache;
pub mod cli;
pub mod config;
pub mod records;

pub use cache::{cache_roundtrip, decode_cache, encode_cache, read_cache, write_cache, CacheHeader};
pub use cli::run_cli;
pub use config::{ManifestInfo, RunConfig};
pub use records::{
    read_growth_rows, read_labeled_points, read_records, write_growth_fits, write_growth_rows, write_node_values,
    write_records, write_transition_fits, write_transitions,
};
