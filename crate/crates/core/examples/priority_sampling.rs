//! Priority sampling: a fixed-size sample whose adjusted weights give
//! unbiased subset sums. Averages many independent samples to show it.
//!
//! ```text
//! cargo run --release --example priority_sampling
//! ```

use sparsedp::query::{answer, Query};
use sparsedp::table::{synth_table, ExperimentProfile};
use sparsedp::{summarize, MethodSpec, NoiseSpec, RngHandle};

fn main() -> sparsedp::Result<()> {
    let profile = ExperimentProfile { m: 50_000, density: 0.02, mean: 30.0, std_dev: 10.0, ..Default::default() };
    let mut rng = RngHandle::new(3);
    let table = synth_table(&profile, &mut rng)?;
    let spec = NoiseSpec::with_epsilon(0.5)?;
    let method = MethodSpec::Priority { size: 3000 };

    let first = summarize(&table, &method, &spec, &mut rng)?;
    println!("sample of {} cells, tau_s = {:.2}", first.len(), first.params.tau_s.unwrap_or(0.0));
    let heavy = first.entries.iter().filter(|e| e.value.abs() as f64 >= first.params.tau_s.unwrap_or(0.0)).count();
    println!("{heavy} entries kept at their own value, the rest lifted to tau_s");

    let query = Query::range(0, 24_999);
    let truth = query.truth(&table)?;
    let trials = 500;
    let mut total = 0.0;
    let mut raw = 0.0;
    for _ in 0..trials {
        let s = summarize(&table, &method, &spec, &mut rng)?;
        total += answer(&s, &query)?;
        raw += answer(&s, &query.clone().with_mode(sparsedp::Mode::Unadjusted))?;
    }
    println!("first half of the domain: truth {truth}");
    println!("  mean adjusted estimate   {:.1}", total / trials as f64);
    println!("  mean unadjusted estimate {:.1}", raw / trials as f64);
    Ok(())
}
