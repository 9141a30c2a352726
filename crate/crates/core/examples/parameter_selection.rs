//! Picking theta, tau and s for a target output size, and how close the
//! realized sizes land.
//!
//! ```text
//! cargo run --release --example parameter_selection
//! ```

use sparsedp::summarize::{choose_tau, choose_theta, method_for_target, Method, Sided};
use sparsedp::table::{synth_table, ExperimentProfile};
use sparsedp::{summarize, NoiseSpec, RngHandle};

fn main() -> sparsedp::Result<()> {
    let profile = ExperimentProfile::default();
    let mut rng = RngHandle::new(profile.seed);
    let table = synth_table(&profile, &mut rng)?;
    let spec = NoiseSpec::with_epsilon(0.1)?;
    let (m, n) = (table.m(), table.n() as u64);

    for t in [1_000.0, 10_000.0, 100_000.0] {
        println!(
            "t = {t:>7}: one-sided theta {}, two-sided theta {}, tau {}",
            choose_theta(m, n, t, &spec, Sided::One)?,
            choose_theta(m, n, t, &spec, Sided::Two)?,
            choose_tau(&table, t, &spec)?
        );
    }

    let t = 50_000.0;
    println!("\nrealized sizes for target {t}:");
    for method in Method::ALL {
        if method == Method::GeometricFull {
            continue;
        }
        let spec_m = method_for_target(method, &table, t, &spec, None)?;
        let s = summarize(&table, &spec_m, &spec, &mut rng)?;
        let zeros = s.entries.iter().filter(|e| !table.is_nonzero(e.index)).count();
        println!("  {:<36} {:>8} entries, {:>7} from zero cells", spec_m.to_string(), s.len(), zeros);
    }
    Ok(())
}
