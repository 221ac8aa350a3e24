//! Thin CLI over the library: dataset generation, workload benchmarks, the
//! search-method microbenchmark, and structural audits.

use alex::bench::dataset::{gen_lognormal, gen_uniform64, read_dataset, write_dataset, DATASET_MODE_INT};
use alex::bench::micro::{search_microbenchmark, write_micro_csv};
use alex::bench::report::{emit_report, ReportFormat};
use alex::bench::workload::{run_workload, InsertOrder, Mix, WidePayload, WorkloadSpec};
use alex::btree::BPlusTree;
use alex::{Alex, AlexConfig};
use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "alex", version, about = "Adaptive learned index workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a key file
    Gen(GenArgs),
    /// Replay a workload against an index and report metrics
    Bench(BenchArgs),
    /// Time exponential vs bounded binary search at fixed error magnitudes
    Microbench(MicroArgs),
    /// Build (and optionally exercise) an index, then check every
    /// structural invariant
    Audit(AuditArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum IndexKind {
    Alex,
    Btree,
}

#[derive(Args)]
struct GenArgs {
    /// lognormal | uniform64
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value_t = 1_000_000)]
    total_keys: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Key file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WorkloadArgs {
    #[arg(long, value_enum, default_value_t = IndexKind::Alex)]
    index: IndexKind,
    /// lognormal | uniform64 | path to a key file
    #[arg(long, default_value = "lognormal")]
    dataset: String,
    /// read_only | read_heavy | write_heavy | write_only | short_range |
    /// custom:R,I,S (percentages summing to 100)
    #[arg(long, default_value = "read_heavy", value_parser = Mix::from_str)]
    mix: Mix,
    /// Keys bulk-loaded before the run
    #[arg(long, default_value_t = 500_000)]
    init_keys: usize,
    /// Dataset size (generators produce it; files are truncated to it)
    #[arg(long, default_value_t = 1_000_000)]
    total_keys: usize,
    /// Op budget; the run stops at whichever budget ends first
    #[arg(long)]
    ops: Option<u64>,
    /// Wall-clock budget in seconds
    #[arg(long)]
    seconds: Option<f64>,
    /// 8 or 80
    #[arg(long, default_value_t = 8)]
    payload_bytes: usize,
    #[arg(long, default_value_t = 0.99)]
    zipf_theta: f64,
    #[arg(long, default_value_t = 100)]
    max_scan_len: usize,
    /// shuffled | smallest-then-random | smallest-then-ascending
    #[arg(long, default_value = "shuffled", value_parser = InsertOrder::from_str)]
    insert_order: InsertOrder,
    /// B+tree page size
    #[arg(long, default_value_t = 1024)]
    page_bytes: usize,
    /// Learned-index node size cap
    #[arg(long, default_value_t = 16 << 20)]
    max_node_bytes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Report file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json", value_parser = ReportFormat::from_str)]
    format: ReportFormat,
}

#[derive(Args)]
struct MicroArgs {
    #[arg(long, default_value_t = 1_000_000)]
    array_len: usize,
    /// Binary-search window half-width; magnitudes are 0 and 2^k - 1 up to
    /// this bound
    #[arg(long, default_value_t = 4096)]
    bound: usize,
    #[arg(long, default_value_t = 100_000)]
    probes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Table file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long, default_value = "csv", value_parser = ReportFormat::from_str)]
    format: ReportFormat,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Report file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Bench(a) => {
            ensure!(
                a.workload.ops.is_some() || a.workload.seconds.is_some(),
                "bench needs --ops or --seconds"
            );
            cmd_workload(a.workload, a.out.as_deref(), a.format)
        }
        Cmd::Microbench(a) => cmd_micro(a),
        Cmd::Audit(a) => {
            let mut w = a.workload;
            if w.ops.is_none() && w.seconds.is_none() {
                w.ops = Some(0);
            }
            cmd_workload(w, a.out.as_deref(), ReportFormat::Json)
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<i32> {
    let keys = match a.dataset.as_str() {
        "lognormal" => gen_lognormal(a.total_keys, a.seed),
        "uniform64" => gen_uniform64(a.total_keys, a.seed),
        other => bail!("unknown generator {other:?} (lognormal|uniform64)"),
    };
    write_dataset(&a.out, &keys, DATASET_MODE_INT)
        .with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("wrote {} keys to {}", keys.len(), a.out.display());
    Ok(0)
}

fn load_dataset(name: &str, total_keys: usize, seed: u64) -> Result<(Vec<f64>, String)> {
    match name {
        "lognormal" => Ok((gen_lognormal(total_keys, seed), "lognormal".into())),
        "uniform64" => Ok((gen_uniform64(total_keys, seed), "uniform64".into())),
        path => {
            let mut keys = read_dataset(Path::new(path))
                .with_context(|| format!("reading key file {path}"))?;
            keys.truncate(total_keys);
            let label = Path::new(path)
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.to_string());
            Ok((keys, label))
        }
    }
}

fn cmd_workload(a: WorkloadArgs, out: Option<&Path>, format: ReportFormat) -> Result<i32> {
    let (keys, label) = load_dataset(&a.dataset, a.total_keys, a.seed)?;
    ensure!(
        a.init_keys <= keys.len(),
        "--init-keys {} exceeds the dataset ({} keys)",
        a.init_keys,
        keys.len()
    );
    let spec = WorkloadSpec {
        init_keys: a.init_keys,
        mix: a.mix,
        insert_order: a.insert_order,
        zipf_theta: a.zipf_theta,
        max_scan_len: a.max_scan_len,
        op_budget: a.ops,
        time_budget: a.seconds.map(Duration::from_secs_f64),
        seed: a.seed,
    };
    let config = AlexConfig { max_node_bytes: a.max_node_bytes, ..AlexConfig::default() };

    let report = match (a.index, a.payload_bytes) {
        (IndexKind::Alex, 8) => {
            run_workload(|p| Alex::<u64>::bulk_load(p, config), &keys, &label, &spec)?
        }
        (IndexKind::Alex, 80) => {
            run_workload(|p| Alex::<WidePayload>::bulk_load(p, config), &keys, &label, &spec)?
        }
        (IndexKind::Btree, 8) => run_workload(
            |p| Ok(BPlusTree::<u64>::bulk_load(a.page_bytes, p)),
            &keys,
            &label,
            &spec,
        )?,
        (IndexKind::Btree, 80) => run_workload(
            |p| Ok(BPlusTree::<WidePayload>::bulk_load(a.page_bytes, p)),
            &keys,
            &label,
            &spec,
        )?,
        (_, other) => bail!("unsupported --payload-bytes {other} (8 or 80)"),
    };

    emit_report(&report, format, out)?;
    if !report.oracle_ok {
        eprintln!("oracle mismatch: index contents diverge from the operation stream");
        return Ok(2);
    }
    if !report.audit_clean {
        for v in &report.audit_violations {
            eprintln!("audit violation: {v}");
        }
        return Ok(3);
    }
    Ok(0)
}

fn cmd_micro(a: MicroArgs) -> Result<i32> {
    ensure!(a.array_len > 4 * a.bound, "--array-len must exceed 4x --bound");
    let mut magnitudes: Vec<usize> = vec![0];
    let mut d = 1usize;
    while d <= a.bound {
        magnitudes.push(d);
        d = d * 2 + 1;
    }
    let rows = search_microbenchmark(a.array_len, &magnitudes, a.probes, a.bound, a.seed);
    let text = match a.format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_micro_csv(&rows, &mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            s
        }
    };
    match a.out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}
