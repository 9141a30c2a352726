//! Point, subset and range queries over released summaries.

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::dyadic::answer_range_dyadic;
use crate::error::{invalid, Error, Result};
use crate::summarize::{Layout, Summary, SummaryEntry};
use crate::table::SparseTable;

/// Which per-entry quantity a query sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Horvitz-Thompson weights; unbiased for sampled summaries.
    #[default]
    Adjusted,
    /// The released noisy values as-is.
    Unadjusted,
    /// Noisy values with negatives rounded up to zero.
    Clamped,
    /// Filter summaries only: released values, with every absent cell
    /// assumed to hold `theta / 2`. A heuristic bias correction; its
    /// accuracy has not been validated.
    HalfTheta,
}

impl Mode {
    /// What one cell contributes; absent cells contribute zero.
    pub fn contribution(&self, entry: Option<&SummaryEntry>) -> f64 {
        match (self, entry) {
            (_, None) => 0.0,
            (Mode::Adjusted, Some(e)) => e.weight,
            (Mode::Unadjusted | Mode::HalfTheta, Some(e)) => e.value as f64,
            (Mode::Clamped, Some(e)) => e.value.max(0) as f64,
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjusted" => Ok(Mode::Adjusted),
            "unadjusted" => Ok(Mode::Unadjusted),
            "clamped" => Ok(Mode::Clamped),
            "half-theta" => Ok(Mode::HalfTheta),
            other => Err(invalid(format!("unknown query mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryKind {
    Point(u64),
    Subset(Vec<u64>),
    /// Inclusive on both ends.
    Range(u64, u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub kind: QueryKind,
    pub mode: Mode,
}

impl Query {
    pub fn point(i: u64) -> Self {
        Query { kind: QueryKind::Point(i), mode: Mode::Adjusted }
    }

    pub fn subset(indices: Vec<u64>) -> Self {
        Query { kind: QueryKind::Subset(indices), mode: Mode::Adjusted }
    }

    pub fn range(lo: u64, hi: u64) -> Self {
        Query { kind: QueryKind::Range(lo, hi), mode: Mode::Adjusted }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    fn check(&self, m: u64) -> Result<()> {
        let bad = |i: u64| invalid(format!("index {i} outside domain of size {m}"));
        match &self.kind {
            QueryKind::Point(i) if *i >= m => Err(bad(*i)),
            QueryKind::Subset(v) => match v.iter().find(|&&i| i >= m) {
                Some(&i) => Err(bad(i)),
                None => Ok(()),
            },
            QueryKind::Range(lo, hi) if lo > hi => Err(invalid(format!("empty range [{lo}, {hi}]"))),
            QueryKind::Range(_, hi) if *hi >= m => Err(bad(*hi)),
            _ => Ok(()),
        }
    }

    /// Exact answer on the original table.
    pub fn truth(&self, table: &SparseTable) -> Result<f64> {
        self.check(table.m())?;
        Ok(match &self.kind {
            QueryKind::Point(i) => table.get(*i) as f64,
            QueryKind::Subset(v) => v.iter().map(|&i| table.get(i) as f64).sum(),
            QueryKind::Range(lo, hi) => table.range_sum(*lo, *hi) as f64,
        })
    }
}

/// Estimates the query from the summary.
///
/// Dyadic summaries answer ranges through their tree decomposition and
/// point queries as unit ranges; subset queries on them are rejected.
pub fn answer(summary: &Summary, query: &Query) -> Result<f64> {
    query.check(summary.m)?;
    let mode = query.mode;
    if mode == Mode::HalfTheta {
        return answer_half_theta(summary, &query.kind);
    }
    if let Layout::Dyadic { .. } = summary.layout {
        return match query.kind {
            QueryKind::Range(lo, hi) => answer_range_dyadic(summary, lo, hi, mode),
            QueryKind::Point(i) => answer_range_dyadic(summary, i, i, mode),
            QueryKind::Subset(_) => Err(Error::Unsupported("subset queries on a dyadic summary".into())),
        };
    }
    Ok(match &query.kind {
        QueryKind::Point(i) => mode.contribution(summary.get(*i)),
        QueryKind::Subset(v) => v.iter().map(|&i| mode.contribution(summary.get(i))).sum(),
        QueryKind::Range(lo, hi) => summary.range(*lo, *hi).iter().map(|e| mode.contribution(Some(e))).sum(),
    })
}

fn answer_half_theta(summary: &Summary, kind: &QueryKind) -> Result<f64> {
    let theta = match (summary.method.is_filter(), summary.params.theta, summary.layout) {
        (true, Some(t), Layout::Flat) => t as f64,
        _ => {
            return Err(Error::Unsupported(format!(
                "half-theta mode needs a flat filter summary, not {}",
                summary.method
            )))
        }
    };
    let fill = theta / 2.0;
    let cell = |i: u64| summary.get(i).map_or(fill, |e| e.value as f64);
    Ok(match kind {
        QueryKind::Point(i) => cell(*i),
        QueryKind::Subset(v) => v.iter().map(|&i| cell(i)).sum(),
        QueryKind::Range(lo, hi) => {
            let present = summary.range(*lo, *hi);
            let absent = (hi - lo + 1) as f64 - present.len() as f64;
            present.iter().map(|e| e.value as f64).sum::<f64>() + absent * fill
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryError {
    pub truth: f64,
    pub estimate: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub per_query: Vec<QueryError>,
    pub median_relative: f64,
    pub mean_absolute: f64,
}

/// Per-query errors against the true table. Relative error divides by
/// `max(1, |truth|)`.
pub fn relative_error(truth: &SparseTable, summary: &Summary, queries: &[Query]) -> Result<ErrorReport> {
    let per_query = queries
        .iter()
        .map(|q| {
            let t = q.truth(truth)?;
            let est = answer(summary, q)?;
            let abs_err = (est - t).abs();
            Ok(QueryError { truth: t, estimate: est, abs_err, rel_err: abs_err / t.abs().max(1.0) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rel: Vec<f64> = per_query.iter().map(|e| e.rel_err).collect();
    let mean_absolute = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().map(|e| e.abs_err).sum::<f64>() / per_query.len() as f64
    };
    Ok(ErrorReport { median_relative: median(&mut rel), mean_absolute, per_query })
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_unstable_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        (v[k - 1] + v[k]) / 2.0
    }
}

/// Parses a query file: `P,i`, `R,lo,hi` or `S,i1 i2 ...`, one per line.
/// Blank lines and `#` comments are skipped.
pub fn parse_queries<R: BufRead>(source: R, mode: Mode) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: n + 1, message };
        let num = |s: &str| s.trim().parse::<u64>().map_err(|e| err(format!("bad index {s:?}: {e}")));
        let fields: Vec<&str> = line.split(',').collect();
        let kind = match (fields[0].trim(), fields.len()) {
            ("P", 2) => QueryKind::Point(num(fields[1])?),
            ("R", 3) => QueryKind::Range(num(fields[1])?, num(fields[2])?),
            ("S", 2) => QueryKind::Subset(fields[1].split_whitespace().map(num).collect::<Result<_>>()?),
            _ => return Err(err(format!("unrecognized query {line:?}"))),
        };
        out.push(Query { kind, mode });
    }
    Ok(out)
}

/// Writes `query_id,truth,estimate,abs_err,rel_err` rows, or
/// `query_id,estimate` when no truth is available.
pub fn write_report<W: Write>(
    mut out: W,
    estimates: &[f64],
    errors: Option<&[QueryError]>,
) -> Result<()> {
    match errors {
        Some(errs) => {
            writeln!(out, "query_id,truth,estimate,abs_err,rel_err")?;
            for (i, e) in errs.iter().enumerate() {
                writeln!(out, "{i},{},{},{},{}", e.truth, e.estimate, e.abs_err, e.rel_err)?;
            }
        }
        None => {
            writeln!(out, "query_id,estimate")?;
            for (i, e) in estimates.iter().enumerate() {
                writeln!(out, "{i},{e}")?;
            }
        }
    }
    Ok(())
}
