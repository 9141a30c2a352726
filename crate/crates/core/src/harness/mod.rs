//! Verification and experiment tooling: probability oracles, statistical
//! equivalence of shortcut and dense paths, accuracy runs and benchmarks.

mod bench;
mod equivalence;
mod experiment;
mod oracle;
pub mod stats;

pub use bench::{bench_table, bench_throughput, time_method, write_bench_csv, BenchReport, Path};
pub use equivalence::{equivalence_test, verify_equivalence, EquivalenceReport, MIN_TRIALS, SIGNIFICANCE};
pub use experiment::{
    build_summary, random_queries, run_experiment, write_experiment_csv, Dyadic, ExperimentConfig, ExperimentRow,
    QueryShape,
};
pub use oracle::{brute_probability, BruteProbability};

/// Writes `index,origin` rows, `origin` being `nonzero` for cells that are
/// nonzero in `table` and `zero` for upgraded zero cells.
#[cfg(feature = "debug-origin")]
pub fn write_origin<W: std::io::Write>(
    table: &crate::table::SparseTable,
    summary: &crate::summarize::Summary,
    mut out: W,
) -> crate::error::Result<()> {
    writeln!(out, "index,origin")?;
    for e in &summary.entries {
        let origin = if table.is_nonzero(e.index) { "nonzero" } else { "zero" };
        writeln!(out, "{},{origin}", e.index)?;
    }
    Ok(())
}
