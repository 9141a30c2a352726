use std::collections::HashSet;

use crate::error::{invalid, Result};
use crate::rng::RngHandle;
use crate::table::SparseTable;

/// Picks `k` distinct zero cells of `table` uniformly at random.
///
/// Small `k` uses rejection against the nonzero cells and a seen-set, which
/// costs O(k) expected draws while `k < (m-n)/2`. Larger `k` samples ranks in
/// the complement directly and maps each rank to its cell.
pub fn select_zero_locations(table: &SparseTable, k: u64, rng: &mut RngHandle) -> Result<Vec<u64>> {
    let zeros = table.zeros();
    if k > zeros {
        return Err(invalid(format!("cannot pick {k} zero cells out of {zeros}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let m = table.m();
    if k < zeros / 2 {
        let mut seen = HashSet::with_capacity(k as usize);
        let mut out = Vec::with_capacity(k as usize);
        while (out.len() as u64) < k {
            let i = rng.below(m);
            if !table.is_nonzero(i) && seen.insert(i) {
                out.push(i);
            }
        }
        Ok(out)
    } else {
        let ranks = rand::seq::index::sample(rng, zeros as usize, k as usize);
        Ok(ranks.into_iter().map(|r| zero_at_rank(table, r as u64)).collect())
    }
}

/// Index of the `rank`-th zero cell (0-based, in index order).
fn zero_at_rank(table: &SparseTable, rank: u64) -> u64 {
    // entries[t].0 - t counts the zero cells before the t-th nonzero cell
    let e = table.entries();
    let (mut lo, mut hi) = (0usize, e.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if e[mid].0 - mid as u64 <= rank {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let t = lo;
    rank + t as u64
}
