//! Shortcut versus laborious path: do they produce the same distribution?

use rayon::prelude::*;

use super::stats::{chi2_homogeneity, histogram, ks_two_sample, TestResult};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::rng::RngHandle;
use crate::summarize::{laborious_path, summarize_tuned, MethodSpec, Summary, Tuning, LABORIOUS_MAX_CELLS};
use crate::table::SparseTable;

/// Minimum trials per side for a meaningful report.
pub const MIN_TRIALS: usize = 10_000;

/// Default significance level.
pub const SIGNIFICANCE: f64 = 0.001;

/// Outcome of comparing both paths.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub method: MethodSpec,
    pub trials: usize,
    /// Summary sizes.
    pub size_chi2: TestResult,
    /// Number of zero cells that made it into the summary.
    pub zero_count_chi2: TestResult,
    /// Pooled released values of zero cells.
    pub zero_values_ks: TestResult,
    /// Priority threshold `tau_s`; `None` for other methods.
    pub tau_s_ks: Option<TestResult>,
    /// Largest per-cell difference in inclusion frequency.
    pub inclusion_max_deviation: f64,
    /// The same difference in units of its standard error.
    pub inclusion_max_z: f64,
}

impl EquivalenceReport {
    pub fn p_values(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("size_chi2", self.size_chi2.p_value),
            ("zero_count_chi2", self.zero_count_chi2.p_value),
            ("zero_values_ks", self.zero_values_ks.p_value),
        ];
        if let Some(t) = self.tau_s_ks {
            out.push(("tau_s_ks", t.p_value));
        }
        out
    }

    pub fn min_p(&self) -> f64 {
        self.p_values().into_iter().map(|p| p.1).fold(1.0, f64::min)
    }

    pub fn passes(&self, level: f64) -> bool {
        self.min_p() > level
    }
}

#[derive(Default)]
struct Side {
    sizes: Vec<usize>,
    zero_counts: Vec<usize>,
    zero_values: Vec<i64>,
    tau_s: Vec<f64>,
    inclusion: Vec<u32>,
}

impl Side {
    fn new(m: u64) -> Self {
        Side { inclusion: vec![0; m as usize], ..Default::default() }
    }

    fn record(&mut self, table: &SparseTable, s: &Summary) {
        self.sizes.push(s.len());
        let mut zeros = 0;
        for e in &s.entries {
            self.inclusion[e.index as usize] += 1;
            if !table.is_nonzero(e.index) {
                zeros += 1;
                self.zero_values.push(e.value);
            }
        }
        self.zero_counts.push(zeros);
        if let Some(t) = s.params.tau_s {
            self.tau_s.push(t);
        }
    }

    fn merge(mut self, other: Side) -> Side {
        self.sizes.extend(other.sizes);
        self.zero_counts.extend(other.zero_counts);
        self.zero_values.extend(other.zero_values);
        self.tau_s.extend(other.tau_s);
        for (a, b) in self.inclusion.iter_mut().zip(other.inclusion) {
            *a += b;
        }
        self
    }
}

fn run_side<F>(table: &SparseTable, trials: usize, root: &RngHandle, label: &str, f: F) -> Result<Side>
where
    F: Fn(&mut RngHandle) -> Result<Summary> + Sync,
{
    let base = root.stream(label);
    let chunks = rayon::current_num_threads().max(1) * 4;
    let per = trials.div_ceil(chunks);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut side = Side::new(table.m());
            for t in (c * per)..((c + 1) * per).min(trials) {
                let mut rng = base.substream(t as u64);
                side.record(table, &f(&mut rng)?);
            }
            Ok(side)
        })
        .try_reduce(|| Side::new(table.m()), |a, b| Ok(a.merge(b)))
}

fn shifted_histogram(values: &[usize], offset: usize) -> Vec<u64> {
    histogram(values.iter().map(|v| v - offset))
}

/// Runs `trials` summaries through each path and compares them.
/// `tuning` perturbs only the shortcut side.
pub fn equivalence_test(
    table: &SparseTable,
    method: &MethodSpec,
    spec: &NoiseSpec,
    trials: usize,
    seed: u64,
    tuning: &Tuning,
) -> Result<EquivalenceReport> {
    if table.m() > LABORIOUS_MAX_CELLS {
        return Err(Error::DomainTooLarge { m: table.m(), limit: LABORIOUS_MAX_CELLS });
    }
    let root = RngHandle::new(seed);
    let fast = run_side(table, trials, &root, "shortcut", |rng| summarize_tuned(table, method, spec, rng, tuning))?;
    let slow = run_side(table, trials, &root, "laborious", |rng| laborious_path(table, method, spec, rng))?;

    let lo_size = *fast.sizes.iter().chain(&slow.sizes).min().unwrap_or(&0);
    let lo_zero = *fast.zero_counts.iter().chain(&slow.zero_counts).min().unwrap_or(&0);
    let size_chi2 = chi2_homogeneity(&shifted_histogram(&fast.sizes, lo_size), &shifted_histogram(&slow.sizes, lo_size));
    let zero_count_chi2 = chi2_homogeneity(
        &shifted_histogram(&fast.zero_counts, lo_zero),
        &shifted_histogram(&slow.zero_counts, lo_zero),
    );
    let zero_values_ks = ks_two_sample(&fast.zero_values, &slow.zero_values);
    let tau_s_ks = method
        .method()
        .is_priority()
        .then(|| ks_two_sample(&fast.tau_s, &slow.tau_s));

    let n = trials as f64;
    let (mut dev, mut z) = (0.0f64, 0.0f64);
    for (&a, &b) in fast.inclusion.iter().zip(&slow.inclusion) {
        let (fa, fb) = (a as f64 / n, b as f64 / n);
        let d = (fa - fb).abs();
        let pooled = (fa + fb) / 2.0;
        let se = (2.0 * pooled * (1.0 - pooled) / n).sqrt();
        dev = dev.max(d);
        if se > 0.0 {
            z = z.max(d / se);
        }
    }
    Ok(EquivalenceReport {
        method: *method,
        trials,
        size_chi2,
        zero_count_chi2,
        zero_values_ks,
        tau_s_ks,
        inclusion_max_deviation: dev,
        inclusion_max_z: z,
    })
}

/// [`equivalence_test`] at [`SIGNIFICANCE`], retried once with a second
/// seed before declaring failure. Returns the last report run.
pub fn verify_equivalence(
    table: &SparseTable,
    method: &MethodSpec,
    spec: &NoiseSpec,
    trials: usize,
    seed: u64,
) -> Result<(EquivalenceReport, bool)> {
    let first = equivalence_test(table, method, spec, trials, seed, &Tuning::default())?;
    if first.passes(SIGNIFICANCE) {
        return Ok((first, true));
    }
    let second = equivalence_test(table, method, spec, trials, seed ^ 0x9e37_79b9_7f4a_7c15, &Tuning::default())?;
    let ok = second.passes(SIGNIFICANCE);
    Ok((second, ok))
}
