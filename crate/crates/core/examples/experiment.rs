//! Runs a small accuracy experiment from an inline config and prints the
//! CSV rows. The same config works with `sparsedp experiment --config`.
//!
//! ```text
//! cargo run --release --example experiment
//! ```

use sparsedp::harness::{run_experiment, write_experiment_csv, ExperimentConfig};

const CONFIG: &str = "
m = 100000
density = 0.1
epsilon = 0.1
methods = filter2:theta=40; threshold:tau=200; priority:s=10000; filter-priority:theta=30,s=10000
query_shape = subset
query_sizes = 100, 1000, 10000
queries = 100
repetitions = 2
";

fn main() -> sparsedp::Result<()> {
    let config = ExperimentConfig::parse(CONFIG.as_bytes())?;
    let rows = run_experiment(&config)?;
    write_experiment_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
