//! Error of the filter, threshold and combined summaries at a common output
//! size, across query sizes.
//!
//! ```text
//! cargo run --release --example filter_vs_threshold
//! ```

use sparsedp::harness::{random_queries, QueryShape};
use sparsedp::query::relative_error;
use sparsedp::summarize::{method_for_target, Method};
use sparsedp::table::{synth_table, ExperimentProfile};
use sparsedp::{summarize, NoiseSpec, RngHandle};

fn main() -> sparsedp::Result<()> {
    let profile = ExperimentProfile { m: 200_000, density: 0.05, ..Default::default() };
    let mut rng = RngHandle::new(1);
    let table = synth_table(&profile, &mut rng)?;
    let spec = NoiseSpec::with_epsilon(0.1)?;
    let target = 10_000.0;

    print!("{:<32}", "method");
    let sizes = [10u64, 100, 1000, 10_000];
    for s in sizes {
        print!("{:>12}", format!("R={s}"));
    }
    println!("{:>10}", "output");
    for method in [Method::Filter1, Method::Filter2, Method::Threshold, Method::FilterThreshold] {
        let m = method_for_target(method, &table, target, &spec, None)?;
        let summary = summarize(&table, &m, &spec, &mut rng)?;
        print!("{:<32}", m.to_string());
        for size in sizes {
            let queries = random_queries(QueryShape::Subset, size, 200, table.m(), &mut rng)?;
            let report = relative_error(&table, &summary, &queries)?;
            print!("{:>11.2}%", 100.0 * report.median_relative);
        }
        println!("{:>10}", summary.len());
    }
    Ok(())
}
