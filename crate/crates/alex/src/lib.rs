//! An in-memory adaptive learned range index.
//!
//! The index ([`Alex`]) keeps sorted key/payload pairs in *gapped arrays*:
//! leaf arrays with deliberate empty slots, addressed by per-leaf linear
//! models. Lookups run the model and correct with exponential search; inserts
//! go where the model points and shift at most a few elements into a nearby
//! gap. A lightweight cost model watches every leaf and decides, when a leaf
//! fills up or misbehaves, whether to expand it in place, retrain its model,
//! or split it — so the structure tracks whatever the workload does to the
//! data.
//!
//! The crate also ships a page-based B+tree ([`btree::BPlusTree`]) as a
//! baseline with the same map API, and a benchmark harness ([`bench`]) that
//! generates datasets, replays configurable read/insert/scan mixes against
//! either structure and reports throughput, latency percentiles, size
//! accounting and structural statistics.
//!
//! Start with the runnable examples, one per capability:
//!
//! ```text
//! cargo run --release --example bulk_load_and_search
//! cargo run --release --example dynamic_updates
//! cargo run --release --example append_heavy
//! cargo run --release --example cost_adaptation
//! cargo run --release --example prediction_errors
//! cargo run --release --example search_methods
//! cargo run --release --example btree_comparison
//! ```
//!
//! The same functionality is scriptable through the thin `alex` binary
//! (`gen`, `bench`, `microbench`, `audit` subcommands).

pub mod bench;
pub mod btree;
pub mod cost;
pub mod error;
pub mod gapped;
pub mod index;
pub mod key;
pub mod model;

pub use error::{IndexError, Result};
pub use gapped::GappedArray;
pub use index::{Alex, AlexConfig};
pub use key::{Key, KeyRange, KEY_SENTINEL};
pub use model::LinearModel;
