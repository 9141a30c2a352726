//! Dyadic range transform, range decomposition and consistency pruning.
//!
//! The transform is a binary tree over the (power-of-two padded) domain:
//! level 0 holds the cells, level `l` holds sums over blocks of `2^l`
//! cells, and the root sits at level `h = ceil(log2 m)`. Summaries of the
//! tree are produced by the ordinary summarizers with the tree as input.

use std::collections::HashSet;

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseSpec;
use crate::query::Mode;
use crate::rng::RngHandle;
use crate::summarize::{
    self, adjust_weights, index_of_node, node_of_index, priority_extract, Layout, Method, MethodSpec, Params,
    PriorityDraw, Sided, Summary, SummaryEntry,
};
use crate::table::{DomainSpec, SparseTable};

/// `ceil(log2 m)`; zero for a single cell.
pub fn tree_height(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// A tree node: the `offset`-th block of `2^level` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub level: u32,
    pub offset: u64,
}

impl Node {
    /// Inclusive cell interval covered by this node.
    pub fn interval(&self) -> (u64, u64) {
        (self.offset << self.level, ((self.offset + 1) << self.level) - 1)
    }

    pub fn parent(&self) -> Node {
        Node { level: self.level + 1, offset: self.offset >> 1 }
    }
}

/// Sparse dyadic transform of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicTable {
    m: u64,
    height: u32,
    /// `levels[l]` holds the nonzero nodes of level `l`, sorted by offset.
    levels: Vec<Vec<(u64, i64)>>,
}

impl DyadicTable {
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn level(&self, level: u32) -> &[(u64, i64)] {
        &self.levels[level as usize]
    }

    /// Nodes in the tree, zero or not: `2^(h+1) - 1`.
    pub fn node_count(&self) -> u64 {
        (1u64 << (self.height + 1)) - 1
    }

    pub fn nonzero_nodes(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn get(&self, node: Node) -> i64 {
        let level = &self.levels[node.level as usize];
        match level.binary_search_by_key(&node.offset, |e| e.0) {
            Ok(p) => level[p].1,
            Err(_) => 0,
        }
    }

    /// The tree flattened into one table, node `(l, o)` at
    /// [`index_of_node`]`(h, l, o)`.
    pub fn as_table(&self) -> SparseTable {
        let h = self.height;
        let domain = DomainSpec::flat(self.node_count()).expect("tree size fits");
        let entries = self
            .levels
            .iter()
            .enumerate()
            .flat_map(|(l, cells)| cells.iter().map(move |&(o, c)| (index_of_node(h, l as u32, o), c)))
            .collect();
        SparseTable::from_sorted_unchecked(domain, entries)
    }
}

/// Builds the transform bottom-up, touching only ancestors of nonzero cells.
pub fn dyadic_transform(table: &SparseTable) -> Result<DyadicTable> {
    let height = tree_height(table.m());
    if height >= 62 {
        return Err(invalid("domain too large for a dyadic tree"));
    }
    let mut levels = Vec::with_capacity(height as usize + 1);
    levels.push(table.entries().to_vec());
    for _ in 0..height {
        let below: &Vec<(u64, i64)> = levels.last().expect("at least one level");
        let mut up: Vec<(u64, i64)> = Vec::with_capacity(below.len() / 2 + 1);
        for &(o, c) in below {
            match up.last_mut() {
                Some(last) if last.0 == o >> 1 => last.1 += c,
                _ => up.push((o >> 1, c)),
            }
        }
        up.retain(|e| e.1 != 0);
        levels.push(up);
    }
    Ok(DyadicTable { m: table.m(), height, levels })
}

/// Noise parameters for a release of all `h + 1` tree levels: one person
/// touches one node per level, so the sensitivity grows by that factor.
pub fn dyadic_noise_spec(base: &NoiseSpec, m: u64) -> Result<NoiseSpec> {
    base.scaled(u64::from(tree_height(m)) + 1)
}

/// Disjoint dyadic nodes whose union is a range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeDecomposition {
    pub nodes: Vec<Node>,
}

/// Canonical minimal dyadic cover of `lo..=hi` in a domain of `m` cells.
///
/// Cells past `m` in the padded tree are structurally zero, so a range that
/// ends at `m - 1` is extended to the end of the tree.
pub fn decompose_range(lo: u64, hi: u64, m: u64) -> Result<RangeDecomposition> {
    if lo > hi || hi >= m {
        return Err(invalid(format!("range [{lo}, {hi}] outside domain of size {m}")));
    }
    let h = tree_height(m);
    let hi = if hi == m - 1 { (1u64 << h) - 1 } else { hi };
    let (mut l, mut r) = (lo, hi + 1);
    let mut level = 0;
    let mut left = Vec::new();
    let mut right = Vec::new();
    while l < r {
        if l & 1 == 1 {
            left.push(Node { level, offset: l });
            l += 1;
        }
        if r & 1 == 1 {
            r -= 1;
            right.push(Node { level, offset: r });
        }
        l >>= 1;
        r >>= 1;
        level += 1;
    }
    left.extend(right.into_iter().rev());
    Ok(RangeDecomposition { nodes: left })
}

fn into_dyadic(mut summary: Summary, original: &SparseTable, height: u32) -> Summary {
    summary.m = original.m();
    summary.n = original.n() as u64;
    summary.layout = Layout::Dyadic { height };
    summary
}

/// Summary of the dyadic transform. `spec` is the budget for the whole
/// release; the sensitivity is rescaled for the tree internally.
pub fn dyadic_summary(table: &SparseTable, method: &MethodSpec, spec: &NoiseSpec, rng: &mut RngHandle) -> Result<Summary> {
    let tree = dyadic_transform(table)?;
    let tree_spec = dyadic_noise_spec(spec, table.m())?;
    let flat = tree.as_table();
    let out = match method {
        MethodSpec::GeometricFull => summarize::geometric_full(&flat, &tree_spec, rng)?,
        other => summarize::summarize(&flat, other, &tree_spec, rng)?,
    };
    Ok(into_dyadic(out, table, tree.height()))
}

/// Drops every node that has an ancestor missing from the summary.
///
/// Only meaningful for filter summaries; sampling summaries are rejected.
pub fn consistency_prune(summary: &Summary) -> Result<Summary> {
    let Layout::Dyadic { height } = summary.layout else {
        return Err(Error::Unsupported("consistency pruning needs a dyadic summary".into()));
    };
    if !summary.method.is_filter() {
        return Err(Error::Unsupported(format!(
            "consistency pruning applies to filter summaries, not {}",
            summary.method
        )));
    }
    let mut out = summary.clone();
    out.entries = prune_entries(&summary.entries, height);
    Ok(out)
}

fn prune_entries(entries: &[SummaryEntry], height: u32) -> Vec<SummaryEntry> {
    let present: HashSet<u64> = entries.iter().map(|e| e.index).collect();
    entries
        .iter()
        .filter(|e| {
            let (level, offset) = node_of_index(height, e.index);
            let mut node = Node { level, offset };
            while node.level < height {
                node = node.parent();
                if !present.contains(&index_of_node(height, node.level, node.offset)) {
                    return false;
                }
            }
            true
        })
        .copied()
        .collect()
}

/// Filter-priority over dyadic ranges with pruning applied between the
/// filter and the sampling step. Materializes the full filter output.
pub fn dyadic_filter_priority_pruned(
    table: &SparseTable,
    theta: u64,
    s: usize,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
) -> Result<Summary> {
    let filtered = dyadic_summary(table, &MethodSpec::Filter { theta, sided: Sided::Two }, spec, rng)?;
    let pruned = consistency_prune(&filtered)?;
    if s == 0 {
        return Err(invalid("priority sample size must be at least 1"));
    }
    let draws: Vec<PriorityDraw> = pruned
        .entries
        .iter()
        .map(|e| PriorityDraw { index: e.index, value: e.value, r: rng.open_unit() })
        .collect();
    let (top, tau_s) = priority_extract(draws, s);
    let mut out = Summary {
        method: Method::FilterPriority,
        params: Params { theta: Some(theta), size: Some(s), tau_s: Some(tau_s), ..Default::default() },
        entries: top.into_iter().map(|d| SummaryEntry::new(d.index, d.value)).collect(),
        ..pruned
    };
    out.entries.sort_unstable_by_key(|e| e.index);
    adjust_weights(&out)
}

/// Sum of the summary's node values over the decomposition of `lo..=hi`.
pub fn answer_range_dyadic(summary: &Summary, lo: u64, hi: u64, mode: Mode) -> Result<f64> {
    let Layout::Dyadic { height } = summary.layout else {
        return Err(Error::Unsupported("summary is not dyadic".into()));
    };
    if mode == Mode::HalfTheta {
        return Err(Error::Unsupported("half-theta mode applies to flat filter summaries".into()));
    }
    let decomposition = decompose_range(lo, hi, summary.m)?;
    Ok(decomposition
        .nodes
        .iter()
        .map(|n| {
            let idx = index_of_node(height, n.level, n.offset);
            mode.contribution(summary.get(idx))
        })
        .sum())
}
