//! Range queries from flat summaries versus summaries of the dyadic tree,
//! with and without consistency pruning.
//!
//! ```text
//! cargo run --release --example dyadic_ranges
//! ```

use sparsedp::harness::{build_summary, random_queries, Dyadic, QueryShape};
use sparsedp::query::relative_error;
use sparsedp::table::{synth_table, ExperimentProfile, Placement};
use sparsedp::{MethodSpec, NoiseSpec, RngHandle};

fn main() -> sparsedp::Result<()> {
    let profile = ExperimentProfile {
        m: 1 << 18,
        density: 0.02,
        placement: Placement::Skewed,
        ..Default::default()
    };
    let mut rng = RngHandle::new(5);
    let table = synth_table(&profile, &mut rng)?;
    let spec = NoiseSpec::with_epsilon(1.0)?;

    let setups = [
        ("geometric-full, flat", MethodSpec::GeometricFull, Dyadic::default()),
        ("geometric-full, dyadic", MethodSpec::GeometricFull, Dyadic { enabled: true, consistency: false }),
        ("filter2 theta=30, dyadic", MethodSpec::Filter { theta: 30, sided: sparsedp::summarize::Sided::Two }, Dyadic { enabled: true, consistency: false }),
        ("filter2 theta=30, pruned", MethodSpec::Filter { theta: 30, sided: sparsedp::summarize::Sided::Two }, Dyadic { enabled: true, consistency: true }),
    ];
    let sizes = [100u64, 10_000, 100_000];
    print!("{:<28}", "summary");
    for s in sizes {
        print!("{:>14}", format!("MAE R={s}"));
    }
    println!("{:>10}", "entries");
    for (name, method, dyadic) in setups {
        let summary = build_summary(&table, &method, &spec, dyadic, &mut rng)?;
        print!("{name:<28}");
        for size in sizes {
            let queries = random_queries(QueryShape::Range, size, 300, table.m(), &mut rng)?;
            print!("{:>14.1}", relative_error(&table, &summary, &queries)?.mean_absolute);
        }
        println!("{:>10}", summary.len());
    }
    Ok(())
}
