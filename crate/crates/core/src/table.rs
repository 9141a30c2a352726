//! Sparse contingency tables: domains, ingestion, synthetic generation.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngHandle;

/// Attribute cardinalities of a table and the size of the flattened domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    cardinalities: Vec<u64>,
    #[serde(skip)]
    m: u64,
}

impl DomainSpec {
    pub fn new(cardinalities: Vec<u64>) -> Result<Self> {
        if cardinalities.is_empty() {
            return Err(Error::InvalidDomain("no attributes".into()));
        }
        let mut m: u64 = 1;
        for &c in &cardinalities {
            if c == 0 {
                return Err(Error::InvalidDomain("attribute with zero cardinality".into()));
            }
            m = m
                .checked_mul(c)
                .ok_or_else(|| Error::InvalidDomain("domain size overflows u64".into()))?;
        }
        Ok(DomainSpec { cardinalities, m })
    }

    /// One attribute of size `m`.
    pub fn flat(m: u64) -> Result<Self> {
        Self::new(vec![m])
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn cardinalities(&self) -> &[u64] {
        &self.cardinalities
    }

    /// Row-major: the last attribute varies fastest.
    pub fn linearize(&self, coords: &[u64]) -> Result<u64> {
        if coords.len() != self.cardinalities.len() {
            return Err(invalid(format!(
                "expected {} coordinates, got {}",
                self.cardinalities.len(),
                coords.len()
            )));
        }
        let mut idx = 0u64;
        for (&c, &card) in coords.iter().zip(&self.cardinalities) {
            if c >= card {
                return Err(invalid(format!("coordinate {c} outside attribute of size {card}")));
            }
            idx = idx * card + c;
        }
        Ok(idx)
    }

    pub fn delinearize(&self, mut index: u64) -> Vec<u64> {
        let mut coords = vec![0; self.cardinalities.len()];
        for (slot, &card) in coords.iter_mut().zip(&self.cardinalities).rev() {
            *slot = index % card;
            index /= card;
        }
        coords
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("domain serializes")
    }

    /// Parses `{"cardinalities":[...]}`, optionally behind a leading `#`.
    pub fn from_json(line: &str) -> Result<Self> {
        let body = line.trim().trim_start_matches('#').trim();
        let raw: DomainSpec = serde_json::from_str(body)?;
        Self::new(raw.cardinalities)
    }
}

/// A contingency table with only its nonzero cells stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTable {
    domain: DomainSpec,
    // sorted by index, no zero counts
    entries: Vec<(u64, i64)>,
    l1: u64,
}

/// `(n, m, density, l1)` of a table. None of these are treated as sensitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableStats {
    pub n: usize,
    pub m: u64,
    pub density: f64,
    pub l1: u64,
}

impl SparseTable {
    pub fn empty(domain: DomainSpec) -> Self {
        SparseTable { domain, entries: Vec::new(), l1: 0 }
    }

    /// Builds a table from `(index, count)` pairs. Duplicates are summed and
    /// cells that sum to zero are dropped.
    pub fn from_entries(domain: DomainSpec, entries: impl IntoIterator<Item = (u64, i64)>) -> Result<Self> {
        let mut cells: BTreeMap<u64, i64> = BTreeMap::new();
        for (i, c) in entries {
            if i >= domain.m() {
                return Err(invalid(format!("index {i} outside domain of size {}", domain.m())));
            }
            *cells.entry(i).or_insert(0) += c;
        }
        Ok(Self::from_sorted_unchecked(domain, cells.into_iter().filter(|&(_, c)| c != 0).collect()))
    }

    pub(crate) fn from_sorted_unchecked(domain: DomainSpec, entries: Vec<(u64, i64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        let l1 = entries.iter().map(|&(_, c)| c.unsigned_abs()).sum();
        SparseTable { domain, entries, l1 }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn m(&self) -> u64 {
        self.domain.m()
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn l1(&self) -> u64 {
        self.l1
    }

    pub fn entries(&self) -> &[(u64, i64)] {
        &self.entries
    }

    pub fn get(&self, index: u64) -> i64 {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0,
        }
    }

    pub fn is_nonzero(&self, index: u64) -> bool {
        self.entries.binary_search_by_key(&index, |e| e.0).is_ok()
    }

    /// Number of zero cells, `m - n`.
    pub fn zeros(&self) -> u64 {
        self.m() - self.n() as u64
    }

    pub fn stats(&self) -> TableStats {
        TableStats {
            n: self.n(),
            m: self.m(),
            density: self.n() as f64 / self.m() as f64,
            l1: self.l1,
        }
    }

    /// Sum of `M(i)` over `lo..=hi`.
    pub fn range_sum(&self, lo: u64, hi: u64) -> i64 {
        let start = self.entries.partition_point(|e| e.0 < lo);
        self.entries[start..].iter().take_while(|e| e.0 <= hi).map(|e| e.1).sum()
    }

    /// Writes the linearized table as `index,count` lines under a domain comment.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.domain.to_json())?;
        for &(i, c) in &self.entries {
            writeln!(out, "{i},{c}")?;
        }
        Ok(())
    }
}

/// Equivalent to [`SparseTable::stats`].
pub fn table_stats(table: &SparseTable) -> TableStats {
    table.stats()
}

/// Reads `index,count` or `i1,...,ik,count` lines. `#` lines and blank lines
/// are ignored; duplicate cells are summed.
pub fn load_sparse_table<R: BufRead>(source: R, domain: DomainSpec) -> Result<SparseTable> {
    let k = domain.cardinalities().len();
    let mut cells: BTreeMap<u64, i64> = BTreeMap::new();
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let perr = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let nums = fields
            .iter()
            .map(|f| f.parse::<i64>().map_err(|_| perr(format!("not an integer: {f:?}"))))
            .collect::<Result<Vec<i64>>>()?;
        let (coords, count) = nums.split_at(nums.len() - 1);
        let count = count[0];
        if count <= 0 {
            return Err(perr(format!("count must be a positive integer, got {count}")));
        }
        if coords.iter().any(|&c| c < 0) {
            return Err(perr("negative index".into()));
        }
        let coords: Vec<u64> = coords.iter().map(|&c| c as u64).collect();
        let index = match coords.len() {
            1 => coords[0],
            n if n == k => domain.linearize(&coords).map_err(|e| perr(e.to_string()))?,
            n => return Err(perr(format!("expected 1 or {k} index columns, got {n}"))),
        };
        if index >= domain.m() {
            return Err(perr(format!("index {index} outside domain of size {}", domain.m())));
        }
        let slot = cells.entry(index).or_insert(0);
        *slot = slot
            .checked_add(count)
            .ok_or_else(|| perr("count overflow".into()))?;
    }
    Ok(SparseTable::from_sorted_unchecked(domain, cells.into_iter().collect()))
}

/// Like [`load_sparse_table`], but takes the domain from a leading
/// `# {"cardinalities":[...]}` comment when none is given.
pub fn read_table<R: BufRead>(mut source: R, domain: Option<DomainSpec>) -> Result<SparseTable> {
    let mut first = String::new();
    source.read_line(&mut first)?;
    let header_domain = if first.trim_start().starts_with('#') {
        DomainSpec::from_json(&first).ok()
    } else {
        None
    };
    let domain = match (domain, header_domain) {
        (Some(d), _) => d,
        (None, Some(d)) => d,
        (None, None) => return Err(Error::InvalidDomain("no domain given and no domain header in input".into())),
    };
    let chained = std::io::Read::chain(std::io::Cursor::new(first.into_bytes()), source);
    load_sparse_table(chained, domain)
}

/// Where the nonzero cells of a synthetic table go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Scattered uniformly over the domain.
    Uniform,
    /// Packed into one contiguous block of `2n` cells, local density about one half.
    Skewed,
}

impl std::str::FromStr for Placement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Placement::Uniform),
            "skewed" => Ok(Placement::Skewed),
            other => Err(invalid(format!("unknown placement {other:?}"))),
        }
    }
}

/// Parameters of a synthetic table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentProfile {
    pub m: u64,
    pub density: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub placement: Placement,
    pub seed: u64,
}

impl Default for ExperimentProfile {
    /// `m = 10^6`, `rho = 0.1`, values `N(100, 20)`, uniform placement.
    fn default() -> Self {
        ExperimentProfile {
            m: 1_000_000,
            density: 0.1,
            mean: 100.0,
            std_dev: 20.0,
            placement: Placement::Uniform,
            seed: 0x5EED,
        }
    }
}

impl ExperimentProfile {
    pub fn target_nonzeros(&self) -> u64 {
        (self.density * self.m as f64).round() as u64
    }

    fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(invalid(format!("density must lie in (0,1], got {}", self.density)));
        }
        if !(self.mean > 0.0) || !(self.std_dev >= 0.0) {
            return Err(invalid("mean must be positive and std-dev non-negative"));
        }
        if self.target_nonzeros() == 0 {
            return Err(invalid("density * m rounds to zero nonzero cells"));
        }
        Ok(())
    }
}

/// Draws a synthetic table: `round(rho*m)` distinct cells with values
/// `round(N(mu, sigma))` clamped to at least 1.
pub fn synth_table(profile: &ExperimentProfile, rng: &mut RngHandle) -> Result<SparseTable> {
    profile.validate()?;
    let domain = DomainSpec::flat(profile.m)?;
    let n = profile.target_nonzeros();
    let (offset, span) = match profile.placement {
        Placement::Uniform => (0, profile.m),
        Placement::Skewed => {
            let span = (2 * n).min(profile.m);
            (rng.below(profile.m - span + 1), span)
        }
    };
    let mut indices: Vec<u64> = rand::seq::index::sample(rng, span as usize, n as usize)
        .into_iter()
        .map(|i| offset + i as u64)
        .collect();
    indices.sort_unstable();
    let normal = Normal::new(profile.mean, profile.std_dev).map_err(|e| invalid(e.to_string()))?;
    let entries = indices
        .into_iter()
        .map(|i| {
            let v = normal.sample(rng).round().max(1.0) as i64;
            (i, v)
        })
        .collect();
    Ok(SparseTable::from_sorted_unchecked(domain, entries))
}
