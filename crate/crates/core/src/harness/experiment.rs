//! Config-driven accuracy experiments.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;

use crate::dyadic::{consistency_prune, dyadic_filter_priority_pruned, dyadic_summary};
use crate::error::{invalid, Error, Result};
use crate::noise::NoiseSpec;
use crate::query::{relative_error, Mode, Query};
use crate::rng::RngHandle;
use crate::summarize::{geometric_full, summarize, MethodSpec};
use crate::table::{synth_table, ExperimentProfile, Placement, SparseTable};

/// Shape of generated queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryShape {
    Range,
    Subset,
}

impl FromStr for QueryShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" => Ok(QueryShape::Range),
            "subset" => Ok(QueryShape::Subset),
            other => Err(invalid(format!("unknown query shape {other:?}"))),
        }
    }
}

/// `count` random queries covering `size` cells each.
pub fn random_queries(shape: QueryShape, size: u64, count: usize, m: u64, rng: &mut RngHandle) -> Result<Vec<Query>> {
    if size == 0 || size > m {
        return Err(invalid(format!("query size {size} outside 1..={m}")));
    }
    Ok((0..count)
        .map(|_| match shape {
            QueryShape::Range => {
                let lo = rng.below(m - size + 1);
                Query::range(lo, lo + size - 1)
            }
            QueryShape::Subset => {
                let mut v: Vec<u64> = sample(rng, m as usize, size as usize).into_iter().map(|i| i as u64).collect();
                v.sort_unstable();
                Query::subset(v)
            }
        })
        .collect())
}

/// Summaries built over the dyadic tree, optionally with consistency pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Dyadic {
    pub enabled: bool,
    pub consistency: bool,
}

/// Builds one summary, dispatching on the dyadic options.
pub fn build_summary(
    table: &SparseTable,
    method: &MethodSpec,
    spec: &NoiseSpec,
    dyadic: Dyadic,
    rng: &mut RngHandle,
) -> Result<crate::summarize::Summary> {
    if dyadic.consistency && !dyadic.enabled {
        return Err(invalid("consistency pruning needs dyadic summaries"));
    }
    match (dyadic.enabled, dyadic.consistency, method) {
        (false, _, MethodSpec::GeometricFull) => geometric_full(table, spec, rng),
        (false, _, m) => summarize(table, m, spec, rng),
        (true, false, m) => dyadic_summary(table, m, spec, rng),
        (true, true, MethodSpec::FilterPriority { theta, size }) => {
            dyadic_filter_priority_pruned(table, *theta, *size, spec, rng)
        }
        (true, true, m @ MethodSpec::Filter { .. }) => consistency_prune(&dyadic_summary(table, m, spec, rng)?),
        (true, true, m) => Err(Error::Unsupported(format!("consistency pruning does not apply to {m}"))),
    }
}

/// Parsed `key=value` experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub profile: ExperimentProfile,
    pub epsilon: f64,
    pub methods: Vec<MethodSpec>,
    pub shape: QueryShape,
    pub query_sizes: Vec<u64>,
    pub queries: usize,
    pub repetitions: usize,
    pub dyadic: Dyadic,
    pub mode: Mode,
    pub output: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            profile: ExperimentProfile::default(),
            epsilon: 0.1,
            methods: vec![MethodSpec::GeometricFull],
            shape: QueryShape::Range,
            query_sizes: vec![1000],
            queries: 100,
            repetitions: 1,
            dyadic: Dyadic::default(),
            mode: Mode::Adjusted,
            output: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| invalid(format!("bad value {v:?} for {key}")))
}

impl ExperimentConfig {
    /// Reads `key=value` lines; `#` starts a comment. Methods are separated
    /// by `;`, query sizes by `,`.
    pub fn parse<R: BufRead>(source: R) -> Result<Self> {
        let mut kv = HashMap::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: n + 1, message: "expected key=value".into() })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut c = ExperimentConfig::default();
        for (k, v) in &kv {
            let v = v.as_str();
            match k.as_str() {
                "m" => c.profile.m = parse(k, v)?,
                "density" => c.profile.density = parse(k, v)?,
                "mean" => c.profile.mean = parse(k, v)?,
                "std_dev" => c.profile.std_dev = parse(k, v)?,
                "placement" => c.profile.placement = v.parse::<Placement>()?,
                "seed" => c.profile.seed = parse(k, v)?,
                "epsilon" => c.epsilon = parse(k, v)?,
                "methods" => {
                    c.methods = v.split(';').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?
                }
                "query_shape" => c.shape = v.parse()?,
                "query_sizes" => c.query_sizes = v.split(',').map(|s| parse(k, s.trim())).collect::<Result<_>>()?,
                "queries" => c.queries = parse(k, v)?,
                "repetitions" => c.repetitions = parse(k, v)?,
                "dyadic" => c.dyadic.enabled = parse(k, v)?,
                "consistency" => c.dyadic.consistency = parse(k, v)?,
                "mode" => c.mode = v.parse()?,
                "output" => c.output = Some(v.to_string()),
                other => return Err(invalid(format!("unknown experiment key {other:?}"))),
            }
        }
        if c.methods.is_empty() || c.query_sizes.is_empty() || c.repetitions == 0 {
            return Err(invalid("experiment needs methods, query_sizes and repetitions >= 1"));
        }
        Ok(c)
    }
}

/// One line of experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub repetition: usize,
    pub method: String,
    pub summary_size: usize,
    pub query_size: u64,
    pub median_rel_err: f64,
    pub mean_abs_err: f64,
    pub seconds: f64,
}

/// Runs every method on a fresh table per repetition, scoring each
/// against the same query sets.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    let spec = NoiseSpec::with_epsilon(config.epsilon)?;
    let root = RngHandle::new(config.profile.seed);
    let mut rows = Vec::new();
    for rep in 0..config.repetitions {
        let rng = root.substream(rep as u64);
        let table = synth_table(&config.profile, &mut rng.stream("table"))?;
        let mut qrng = rng.stream("queries");
        let query_sets = config
            .query_sizes
            .iter()
            .map(|&size| {
                let qs = random_queries(config.shape, size, config.queries, table.m(), &mut qrng)?;
                Ok(qs.into_iter().map(|q| q.with_mode(config.mode)).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, method) in config.methods.iter().enumerate() {
            let mut srng = rng.stream("summary").substream(k as u64);
            let start = Instant::now();
            let summary = build_summary(&table, method, &spec, config.dyadic, &mut srng)?;
            let seconds = start.elapsed().as_secs_f64();
            for (size, qs) in config.query_sizes.iter().zip(&query_sets) {
                let report = relative_error(&table, &summary, qs)?;
                rows.push(ExperimentRow {
                    repetition: rep,
                    method: method.to_string(),
                    summary_size: summary.len(),
                    query_size: *size,
                    median_rel_err: report.median_relative,
                    mean_abs_err: report.mean_absolute,
                    seconds,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_experiment_csv<W: Write>(mut out: W, rows: &[ExperimentRow]) -> Result<()> {
    writeln!(out, "repetition,method,summary_size,query_size,median_rel_err,mean_abs_err,seconds")?;
    for r in rows {
        writeln!(
            out,
            "{},\"{}\",{},{},{},{},{}",
            r.repetition, r.method, r.summary_size, r.query_size, r.median_rel_err, r.mean_abs_err, r.seconds
        )?;
    }
    Ok(())
}
