//! Shortcut versus dense-path timing at fixed `n` as the domain grows.
//!
//! ```text
//! cargo run --release --example throughput
//! ```

use sparsedp::harness::{bench_table, time_method, Path};
use sparsedp::summarize::{method_for_target, Method, MethodSpec};
use sparsedp::{NoiseSpec, RngHandle};

fn main() -> sparsedp::Result<()> {
    let n = 10_000u64;
    let spec = NoiseSpec::with_epsilon(0.1)?;
    let mut rng = RngHandle::new(1);
    println!("{:<18} {:>10} {:>12} {:>10} {:>14}", "method", "m", "seconds", "output", "nonzeros/s");
    for m in [1_000_000u64, 10_000_000] {
        let table = bench_table(m, n)?;
        for method in Method::ALL {
            let spec_m = method_for_target(method, &table, n as f64, &spec, None)?;
            let mut paths = vec![Path::Shortcut];
            if method != Method::GeometricFull {
                paths.push(Path::Laborious);
            }
            for path in paths {
                let r = time_method(&table, &spec_m, &spec, path, 5, &mut rng)?;
                let label = match (path, spec_m) {
                    (_, MethodSpec::GeometricFull) => method.to_string(),
                    (Path::Shortcut, _) => method.to_string(),
                    (Path::Laborious, _) => format!("{method} (dense)"),
                };
                println!("{label:<18} {m:>10} {:>12.6} {:>10} {:>14.0}", r.seconds, r.output_size, r.throughput);
            }
        }
    }
    Ok(())
}
