//! A differentially private Count sketch and how its error moves with
//! width and depth.
//!
//! ```text
//! cargo run --release --example private_sketch
//! ```

use sparsedp::sketch::{build_private_sketch, sketch_point_estimate, Combine};
use sparsedp::table::{synth_table, ExperimentProfile};
use sparsedp::{NoiseSpec, RngHandle};

fn main() -> sparsedp::Result<()> {
    let profile = ExperimentProfile { m: 20_000, density: 0.05, ..Default::default() };
    let mut rng = RngHandle::new(9);
    let table = synth_table(&profile, &mut rng)?;
    let spec = NoiseSpec::with_epsilon(1.0)?;

    println!("{:>6} {:>6} {:>16} {:>16}", "width", "depth", "rms err (mean)", "rms err (median)");
    for (w, d) in [(256, 1), (1024, 1), (4096, 1), (1024, 3), (1024, 7)] {
        let sketch = build_private_sketch(&table, w, d, &spec, &mut rng)?;
        let mut se = [0.0f64; 2];
        let probes = 2000u64;
        for k in 0..probes {
            let i = k * (table.m() / probes);
            let truth = table.get(i) as f64;
            se[0] += (sketch_point_estimate(&sketch, i, Combine::Mean)? - truth).powi(2);
            se[1] += (sketch_point_estimate(&sketch, i, Combine::Median)? - truth).powi(2);
        }
        let rms = |s: f64| (s / probes as f64).sqrt();
        println!("{w:>6} {d:>6} {:>16.1} {:>16.1}", rms(se[0]), rms(se[1]));
    }
    Ok(())
}
