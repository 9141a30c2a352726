//! Wall-clock throughput of the summarizers.

use std::time::Instant;

use crate::error::{invalid, Result};
use crate::noise::NoiseSpec;
use crate::rng::RngHandle;
use crate::summarize::{geometric_full, laborious_path, summarize, Method, MethodSpec};
use crate::table::{DomainSpec, SparseTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    Shortcut,
    Laborious,
}

impl Path {
    pub fn name(&self) -> &'static str {
        match self {
            Path::Shortcut => "shortcut",
            Path::Laborious => "laborious",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub method: Method,
    pub path: Path,
    pub m: u64,
    pub n: u64,
    /// Fastest of the repetitions.
    pub seconds: f64,
    /// Nonzero cells processed per second.
    pub throughput: f64,
    pub output_size: usize,
}

/// A table of exactly `n` cells with count 100 spread evenly over `m`.
pub fn bench_table(m: u64, n: u64) -> Result<SparseTable> {
    if n == 0 || n > m {
        return Err(invalid(format!("bench needs 1 <= n <= m, got n={n}, m={m}")));
    }
    let step = m / n;
    SparseTable::from_entries(DomainSpec::flat(m)?, (0..n).map(|i| (i * step, 100)))
}

/// Times one summarizer, keeping the fastest of `reps` runs.
pub fn time_method(
    table: &SparseTable,
    method: &MethodSpec,
    spec: &NoiseSpec,
    path: Path,
    reps: usize,
    rng: &mut RngHandle,
) -> Result<BenchReport> {
    let mut best = f64::INFINITY;
    let mut output_size = 0;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let s = match (path, method) {
            (_, MethodSpec::GeometricFull) => geometric_full(table, spec, rng)?,
            (Path::Shortcut, m) => summarize(table, m, spec, rng)?,
            (Path::Laborious, m) => laborious_path(table, m, spec, rng)?,
        };
        best = best.min(start.elapsed().as_secs_f64());
        output_size = s.len();
    }
    let best = best.max(1e-9);
    Ok(BenchReport {
        method: method.method(),
        path,
        m: table.m(),
        n: table.n() as u64,
        seconds: best,
        throughput: table.n() as f64 / best,
        output_size,
    })
}

/// Runs each method over each domain size at fixed `n`.
pub fn bench_throughput(
    methods: &[MethodSpec],
    ms: &[u64],
    n: u64,
    spec: &NoiseSpec,
    paths: &[Path],
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchReport>> {
    let root = RngHandle::new(seed);
    let mut out = Vec::new();
    for &m in ms {
        let table = bench_table(m, n)?;
        for (k, method) in methods.iter().enumerate() {
            for &path in paths {
                let mut rng = root.stream(path.name()).substream((m << 8) ^ k as u64);
                out.push(time_method(&table, method, spec, path, reps, &mut rng)?);
            }
        }
    }
    Ok(out)
}

pub fn write_bench_csv<W: std::io::Write>(mut out: W, reports: &[BenchReport]) -> Result<()> {
    writeln!(out, "method,path,m,n,seconds,throughput,output_size")?;
    for r in reports {
        writeln!(out, "{},{},{},{},{},{},{}", r.method, r.path.name(), r.m, r.n, r.seconds, r.throughput, r.output_size)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summarize::Sided;

    #[test]
    fn sizes_deterministic() {
        let spec = NoiseSpec::with_epsilon(0.5).unwrap();
        let methods = [MethodSpec::Filter { theta: 8, sided: Sided::Two }, MethodSpec::Priority { size: 50 }];
        let a = bench_throughput(&methods, &[10_000], 100, &spec, &[Path::Shortcut, Path::Laborious], 1, 4).unwrap();
        let b = bench_throughput(&methods, &[10_000], 100, &spec, &[Path::Shortcut, Path::Laborious], 1, 4).unwrap();
        assert_eq!(a.len(), 4);
        let sizes = |r: &[BenchReport]| r.iter().map(|x| x.output_size).collect::<Vec<_>>();
        assert_eq!(sizes(&a), sizes(&b));
        assert!(a.iter().all(|r| r.throughput > 0.0));
        assert_eq!(a[2].output_size, 50);
        assert_eq!(a[3].output_size, 50);
    }

    #[test]
    fn table_shape() {
        let t = bench_table(1000, 10).unwrap();
        assert_eq!(t.n(), 10);
        assert!(bench_table(10, 11).is_err());
    }
}
