use crate::error::{Error, Result};
use crate::noise::{sample_geometric, NoiseSpec};
use crate::rng::RngHandle;
use crate::table::SparseTable;

use super::shortcut::{priority_extract, PriorityDraw};
use super::summary::{adjust_weights, Layout, Params, Summary, SummaryEntry};
use super::MethodSpec;

/// Largest domain the dense path will materialize.
pub const LABORIOUS_MAX_CELLS: u64 = 1 << 24;

/// Every cell's noisy value, `M(i) + noise`.
fn noisy_cells(table: &SparseTable, spec: &NoiseSpec, rng: &mut RngHandle) -> Vec<i64> {
    let mut dense: Vec<i64> = (0..table.m()).map(|_| sample_geometric(spec, rng)).collect();
    for &(i, c) in table.entries() {
        dense[i as usize] += c;
    }
    dense
}

/// The dense reference: adds noise to all `m` cells, then applies the
/// summary definition literally. Cost is O(m); meant for verification and
/// as the baseline in benchmarks.
pub fn laborious_path(table: &SparseTable, method: &MethodSpec, spec: &NoiseSpec, rng: &mut RngHandle) -> Result<Summary> {
    if table.m() > LABORIOUS_MAX_CELLS {
        return Err(Error::DomainTooLarge { m: table.m(), limit: LABORIOUS_MAX_CELLS });
    }
    method.validate(table.m())?;
    let dense = noisy_cells(table, spec, rng);
    let cells = dense.iter().enumerate().map(|(i, &v)| (i as u64, v));
    let mut params = method.base_params();
    let kept: Vec<(u64, i64)> = match *method {
        MethodSpec::Filter { theta, sided } => {
            let theta = theta as i64;
            cells
                .filter(|&(_, v)| match sided {
                    super::Sided::One => v >= theta,
                    super::Sided::Two => v.abs() >= theta,
                })
                .collect()
        }
        MethodSpec::Threshold { tau } => threshold(cells, 0, tau, rng),
        MethodSpec::FilterThreshold { theta, tau } => threshold(cells, theta, tau, rng),
        MethodSpec::Priority { size } => {
            let (kept, tau_s) = priority(cells, 0, size, rng);
            params.tau_s = Some(tau_s);
            kept
        }
        MethodSpec::FilterPriority { theta, size } => {
            let (kept, tau_s) = priority(cells, theta, size, rng);
            params.tau_s = Some(tau_s);
            kept
        }
        MethodSpec::GeometricFull => cells.filter(|&(_, v)| v != 0).collect(),
    };
    let mut summary = Summary {
        method: method.method(),
        params,
        noise: *spec,
        m: table.m(),
        n: table.n() as u64,
        layout: Layout::Flat,
        seed: None,
        entries: kept.into_iter().map(|(i, v)| SummaryEntry::new(i, v)).collect(),
    };
    summary.sort_entries();
    adjust_weights(&summary)
}

fn threshold(cells: impl Iterator<Item = (u64, i64)>, theta: u64, tau: u64, rng: &mut RngHandle) -> Vec<(u64, i64)> {
    cells
        .filter(|&(_, v)| {
            let a = v.unsigned_abs();
            a > 0 && a >= theta && rng.open_unit() * tau as f64 <= a as f64
        })
        .collect()
}

// Cells with zero weight (noisy value 0, or filtered out) have priority 0
// and never make it into the sample.
fn priority(
    cells: impl Iterator<Item = (u64, i64)>,
    theta: u64,
    size: usize,
    rng: &mut RngHandle,
) -> (Vec<(u64, i64)>, f64) {
    let draws: Vec<PriorityDraw> = cells
        .filter(|&(_, v)| v != 0 && v.unsigned_abs() >= theta)
        .map(|(index, value)| PriorityDraw { index, value, r: rng.open_unit() })
        .collect();
    let (top, tau_s) = priority_extract(draws, size);
    (top.into_iter().map(|d| (d.index, d.value)).collect(), tau_s)
}

/// The plain geometric mechanism over the whole domain, streamed so `m` is
/// not limited by memory. Zero-valued cells are left out of the entry list;
/// they contribute nothing to any query.
pub fn geometric_full(table: &SparseTable, spec: &NoiseSpec, rng: &mut RngHandle) -> Result<Summary> {
    Ok(streaming_full(table, spec, rng))
}

// Draws noise in the same order as `noisy_cells`, so the output matches the dense path bit for bit.
fn streaming_full(table: &SparseTable, spec: &NoiseSpec, rng: &mut RngHandle) -> Summary {
    let mut entries = Vec::new();
    let mut nz = table.entries().iter().peekable();
    for i in 0..table.m() {
        let mut v = sample_geometric(spec, rng);
        if let Some(&&(j, c)) = nz.peek() {
            if j == i {
                v += c;
                nz.next();
            }
        }
        if v != 0 {
            entries.push(SummaryEntry::new(i, v));
        }
    }
    Summary {
        method: super::Method::GeometricFull,
        params: Params::default(),
        noise: *spec,
        m: table.m(),
        n: table.n() as u64,
        layout: Layout::Flat,
        seed: None,
        entries,
    }
}
