//! Workload benchmark harness.
//!
//! The pieces compose bottom-up:
//!
//! - [`dataset`]: key generators (lognormal, uniform 64-bit) and the binary
//!   key-file format;
//! - [`zipf`]: Zipfian rank picking plus an order-statistic set that maps
//!   ranks to whichever keys are currently present;
//! - [`workload`]: the replay loop — bulk load, interleaved mix, latency
//!   collection, end-of-run oracle and audit;
//! - [`errors`]: prediction-error histograms;
//! - [`micro`]: exponential vs bounded-binary search microbenchmark;
//! - [`report`]: the [`MetricsReport`] schema and CSV/JSON emission.
//!
//! Everything is seed-deterministic except wall-clock timings.

pub mod dataset;
pub mod errors;
pub mod micro;
pub mod report;
pub mod workload;
pub mod zipf;

pub use dataset::{gen_lognormal, gen_uniform64, read_dataset, write_dataset};
pub use errors::{error_histogram, full_error_histogram};
pub use micro::search_microbenchmark;
pub use report::{emit_report, MetricsReport, ReportFormat};
pub use workload::{run_workload, BenchIndex, BenchPayload, Mix, WidePayload, WorkloadSpec};
pub use zipf::zipf_pick;
