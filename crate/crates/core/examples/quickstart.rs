//! Load a small multi-attribute table, release a filter-priority summary,
//! save it, read it back and answer a few queries.
//!
//! ```text
//! cargo run --example quickstart
//! ```

use sparsedp::query::{answer, Query};
use sparsedp::summarize::{read_summary, write_summary};
use sparsedp::table::load_sparse_table;
use sparsedp::{summarize, DomainSpec, MethodSpec, Mode, NoiseSpec, RngHandle};

// age bracket, region, diagnosis code, count
const DATA: &str = "\
0,3,17,120
1,3,17,95
2,0,4,310
2,1,4,12
3,2,40,57
4,4,63,801
5,1,9,3
";

fn main() -> sparsedp::Result<()> {
    let domain = DomainSpec::new(vec![6, 5, 64])?;
    let table = load_sparse_table(DATA.as_bytes(), domain.clone())?;
    println!("table: m = {}, n = {}, total = {}", table.m(), table.n(), table.l1());

    let spec = NoiseSpec::with_epsilon(0.5)?;
    let method = MethodSpec::FilterPriority { theta: 8, size: 20 };
    let summary = summarize(&table, &method, &spec, &mut RngHandle::new(7))?;
    println!("released {} cells with {method}", summary.len());

    let mut file = Vec::new();
    write_summary(&summary, &mut file)?;
    let summary = read_summary(file.as_slice())?;

    let cell = domain.linearize(&[4, 4, 63])?;
    for mode in [Mode::Adjusted, Mode::Unadjusted, Mode::Clamped] {
        let est = answer(&summary, &Query::point(cell).with_mode(mode))?;
        println!("cell (4,4,63) {mode:?}: {est:.1}  (true {})", table.get(cell));
    }
    let age2 = Query::range(domain.linearize(&[2, 0, 0])?, domain.linearize(&[2, 4, 63])?);
    println!("all of age bracket 2: {:.1}  (true {})", answer(&summary, &age2)?, age2.truth(&table)?);
    Ok(())
}
