//! Released summaries, weight adjustment and the summary file format.

use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseSpec;

/// One released cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryEntry {
    pub index: u64,
    /// Noisy count `M''(i)`.
    pub value: i64,
    /// Estimation weight; equals `value` until [`adjust_weights`] runs.
    pub weight: f64,
}

impl SummaryEntry {
    pub fn new(index: u64, value: i64) -> Self {
        SummaryEntry { index, value, weight: value as f64 }
    }
}

/// How a summary was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "filter1")]
    Filter1,
    #[serde(rename = "filter2")]
    Filter2,
    #[serde(rename = "threshold")]
    Threshold,
    #[serde(rename = "filter-threshold")]
    FilterThreshold,
    #[serde(rename = "priority")]
    Priority,
    #[serde(rename = "filter-priority")]
    FilterPriority,
    #[serde(rename = "geometric-full")]
    GeometricFull,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Filter1,
        Method::Filter2,
        Method::Threshold,
        Method::FilterThreshold,
        Method::Priority,
        Method::FilterPriority,
        Method::GeometricFull,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Filter1 => "filter1",
            Method::Filter2 => "filter2",
            Method::Threshold => "threshold",
            Method::FilterThreshold => "filter-threshold",
            Method::Priority => "priority",
            Method::FilterPriority => "filter-priority",
            Method::GeometricFull => "geometric-full",
        }
    }

    pub fn is_filter(&self) -> bool {
        matches!(self, Method::Filter1 | Method::Filter2)
    }

    pub fn is_priority(&self) -> bool {
        matches!(self, Method::Priority | Method::FilterPriority)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method {s:?}")))
    }
}

/// Parameters recorded alongside a summary.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Params {
    pub theta: Option<u64>,
    pub tau: Option<u64>,
    pub size: Option<usize>,
    /// The (s+1)th largest priority of a priority sample.
    pub tau_s: Option<f64>,
}

/// Whether summary indices are table cells or dyadic tree nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Flat,
    /// Node `(level, offset)` lives at linear index `offset + 2^(h+1) - 2^(h+1-level)`.
    Dyadic { height: u32 },
}

/// A released summary `M''`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: Method,
    pub params: Params,
    pub noise: NoiseSpec,
    /// Size of the original table domain.
    pub m: u64,
    /// Nonzero cells in the original table.
    pub n: u64,
    pub layout: Layout,
    pub seed: Option<u64>,
    /// Sorted by index, indices distinct.
    pub entries: Vec<SummaryEntry>,
}

impl Summary {
    /// Number of addressable cells: `m` for flat summaries, tree nodes for dyadic ones.
    pub fn cells(&self) -> u64 {
        match self.layout {
            Layout::Flat => self.m,
            Layout::Dyadic { height } => (1u64 << (height + 1)) - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: u64) -> Option<&SummaryEntry> {
        self.entries
            .binary_search_by_key(&index, |e| e.index)
            .ok()
            .map(|pos| &self.entries[pos])
    }

    /// Entries with `lo <= index <= hi`.
    pub fn range(&self, lo: u64, hi: u64) -> &[SummaryEntry] {
        let start = self.entries.partition_point(|e| e.index < lo);
        let end = self.entries.partition_point(|e| e.index <= hi);
        &self.entries[start..end.max(start)]
    }

    pub(crate) fn sort_entries(&mut self) {
        self.entries.sort_unstable_by_key(|e| e.index);
    }

    /// `M'_+`: negative values rounded up to zero, zero entries dropped.
    pub fn clamped(&self) -> Summary {
        let mut out = self.clone();
        out.entries.retain(|e| e.value > 0);
        out
    }
}

/// Rounds negative values up to zero and drops the resulting zero entries.
pub fn clamp_nonnegative(summary: &Summary) -> Summary {
    summary.clamped()
}

fn signed(value: i64, magnitude: f64) -> f64 {
    if value < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Sets each entry's estimation weight according to the summary's method.
///
/// Threshold samples get `max(|v|, tau)`, priority samples `max(|v|, tau_s)`,
/// both keeping the sign of `v`. Filter and full summaries keep `v`.
pub fn adjust_weights(summary: &Summary) -> Result<Summary> {
    let floor = match summary.method {
        Method::Filter1 | Method::Filter2 | Method::GeometricFull => None,
        Method::Threshold | Method::FilterThreshold => Some(
            summary
                .params
                .tau
                .ok_or_else(|| invalid("threshold summary without tau"))? as f64,
        ),
        Method::Priority | Method::FilterPriority => Some(
            summary
                .params
                .tau_s
                .ok_or_else(|| invalid("priority summary without tau_s"))?,
        ),
    };
    let mut out = summary.clone();
    for e in &mut out.entries {
        e.weight = match floor {
            None => e.value as f64,
            Some(f) => signed(e.value, (e.value.unsigned_abs() as f64).max(f)),
        };
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    method: Method,
    epsilon: f64,
    sensitivity: u64,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    theta: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tau: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tau_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    seed: Option<u64>,
    m: u64,
    n: u64,
    #[serde(default)]
    dyadic: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    height: Option<u32>,
}

/// Splits a dyadic linear index into `(level, offset)`.
pub fn node_of_index(height: u32, index: u64) -> (u32, u64) {
    let mut level = 0;
    let mut base = 0u64;
    loop {
        let size = 1u64 << (height - level);
        if index < base + size || level == height {
            return (level, index - base);
        }
        base += size;
        level += 1;
    }
}

/// Linear index of node `(level, offset)` in a tree of the given height.
pub fn index_of_node(height: u32, level: u32, offset: u64) -> u64 {
    (1u64 << (height + 1)) - (1u64 << (height + 1 - level)) + offset
}

/// Writes the summary: one `# {json}` metadata line, a CSV header, then
/// `index,value,adjusted_weight` rows. Dyadic indices are written `level:offset`.
pub fn write_summary<W: Write>(summary: &Summary, mut out: W) -> Result<()> {
    let (dyadic, height) = match summary.layout {
        Layout::Flat => (false, None),
        Layout::Dyadic { height } => (true, Some(height)),
    };
    let meta = Metadata {
        method: summary.method,
        epsilon: summary.noise.epsilon(),
        sensitivity: summary.noise.sensitivity(),
        alpha: summary.noise.alpha(),
        theta: summary.params.theta,
        tau: summary.params.tau,
        s: summary.params.size,
        tau_s: summary.params.tau_s,
        seed: summary.seed,
        m: summary.m,
        n: summary.n,
        dyadic,
        height,
    };
    writeln!(out, "# {}", serde_json::to_string(&meta)?)?;
    writeln!(out, "index,value,adjusted_weight")?;
    for e in &summary.entries {
        match height {
            None => writeln!(out, "{},{},{}", e.index, e.value, e.weight)?,
            Some(h) => {
                let (level, offset) = node_of_index(h, e.index);
                writeln!(out, "{level}:{offset},{},{}", e.value, e.weight)?
            }
        }
    }
    Ok(())
}

/// Reads a summary written by [`write_summary`].
pub fn read_summary<R: BufRead>(source: R) -> Result<Summary> {
    let mut lines = source.lines().enumerate();
    let perr = |line: usize, message: String| Error::Parse { line: line + 1, message };
    let meta: Metadata = loop {
        match lines.next() {
            Some((no, line)) => {
                let line = line?;
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                let body = t.strip_prefix('#').ok_or_else(|| perr(no, "missing metadata line".into()))?;
                break serde_json::from_str(body.trim())?;
            }
            None => return Err(invalid("empty summary file")),
        }
    };
    let noise = NoiseSpec::new(meta.epsilon, meta.sensitivity)?;
    if noise.alpha() != meta.alpha {
        return Err(invalid("alpha does not match epsilon and sensitivity"));
    }
    let layout = match (meta.dyadic, meta.height) {
        (false, _) => Layout::Flat,
        (true, Some(height)) if height < 63 => Layout::Dyadic { height },
        (true, _) => return Err(invalid("dyadic summary without a valid height")),
    };
    let mut entries = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("index") {
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() != 3 {
            return Err(perr(no, format!("expected 3 fields, got {}", fields.len())));
        }
        let index = match layout {
            Layout::Flat => fields[0].parse::<u64>().map_err(|e| perr(no, e.to_string()))?,
            Layout::Dyadic { height } => {
                let (l, o) = fields[0]
                    .split_once(':')
                    .ok_or_else(|| perr(no, "dyadic index must be level:offset".into()))?;
                let level: u32 = l.parse().map_err(|_| perr(no, format!("bad level {l:?}")))?;
                let offset: u64 = o.parse().map_err(|_| perr(no, format!("bad offset {o:?}")))?;
                if level > height || offset >= 1u64 << (height - level) {
                    return Err(perr(no, format!("node {level}:{offset} outside tree of height {height}")));
                }
                index_of_node(height, level, offset)
            }
        };
        let value = fields[1].parse::<i64>().map_err(|e| perr(no, e.to_string()))?;
        let weight = fields[2].parse::<f64>().map_err(|e| perr(no, e.to_string()))?;
        entries.push(SummaryEntry { index, value, weight });
    }
    let summary = Summary {
        method: meta.method,
        params: Params { theta: meta.theta, tau: meta.tau, size: meta.s, tau_s: meta.tau_s },
        noise,
        m: meta.m,
        n: meta.n,
        layout,
        seed: meta.seed,
        entries,
    };
    if summary.entries.windows(2).any(|w| w[0].index >= w[1].index) {
        return Err(invalid("summary indices must be strictly increasing"));
    }
    if summary.entries.last().is_some_and(|e| e.index >= summary.cells()) {
        return Err(invalid("summary index outside domain"));
    }
    Ok(summary)
}
