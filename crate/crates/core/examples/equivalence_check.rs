//! Checks that every shortcut generator matches the dense path in
//! distribution on a small table.
//!
//! ```text
//! cargo run --release --example equivalence_check
//! ```

use sparsedp::harness::{verify_equivalence, SIGNIFICANCE};
use sparsedp::summarize::Sided;
use sparsedp::{DomainSpec, MethodSpec, NoiseSpec, SparseTable};

fn main() -> sparsedp::Result<()> {
    let table = SparseTable::from_entries(DomainSpec::flat(2048)?, (0..64u64).map(|i| (i * 31, 2 + (i % 11) as i64)))?;
    let spec = NoiseSpec::with_epsilon(0.5)?;
    let methods = [
        MethodSpec::Filter { theta: 3, sided: Sided::One },
        MethodSpec::Filter { theta: 3, sided: Sided::Two },
        MethodSpec::Threshold { tau: 5 },
        MethodSpec::FilterThreshold { theta: 2, tau: 6 },
        MethodSpec::Priority { size: 64 },
        MethodSpec::FilterPriority { theta: 3, size: 64 },
    ];
    for method in methods {
        let (report, ok) = verify_equivalence(&table, &method, &spec, 5000, 11)?;
        let verdict = if ok { "same" } else { "DIFFERENT" };
        println!("{:<36} min p = {:.4}  -> {verdict} at {SIGNIFICANCE}", method.to_string(), report.min_p());
    }
    Ok(())
}
