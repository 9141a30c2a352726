use std::cmp::Ordering;

use crate::error::Result;
use crate::noise::{sample_binomial, sample_geometric, NoiseSpec};
use crate::rng::RngHandle;
use crate::table::SparseTable;

use super::laborious;
use super::probability::Selection;
use super::summary::{adjust_weights, Layout, Method, Params, Summary, SummaryEntry};
use super::zeros::select_zero_locations;
use super::{MethodSpec, Sided, Tuning};

/// A sampled cell with its priority variate `r`. Priority is `|value| / r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityDraw {
    pub index: u64,
    pub value: i64,
    pub r: f64,
}

impl PriorityDraw {
    pub fn priority(&self) -> f64 {
        self.value.unsigned_abs() as f64 / self.r
    }
}

/// Larger priority first; ties go to the smaller index.
fn by_priority(a: &PriorityDraw, b: &PriorityDraw) -> Ordering {
    b.priority()
        .partial_cmp(&a.priority())
        .unwrap_or(Ordering::Equal)
        .then(a.index.cmp(&b.index))
}

/// Keeps the `s` largest priorities and returns them with `tau_s`, the
/// (s+1)th largest. With `s` or fewer draws everything is kept and `tau_s`
/// is zero.
pub fn priority_extract(mut draws: Vec<PriorityDraw>, s: usize) -> (Vec<PriorityDraw>, f64) {
    if draws.len() <= s {
        return (draws, 0.0);
    }
    draws.select_nth_unstable_by(s, by_priority);
    let tau_s = draws[s].priority();
    draws.truncate(s);
    (draws, tau_s)
}

/// Noise, selection and upgraded zeros under one rule. `r` is uniform on
/// `(0, min(1, |v|/tau)]` for sampling rules and on `(0, 1]` for filters.
fn draw(
    table: &SparseTable,
    rule: &Selection,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
    tuning: &Tuning,
) -> Result<Vec<PriorityDraw>> {
    let mut out = Vec::new();
    for &(index, count) in table.entries() {
        let value = count + sample_geometric(spec, rng);
        if let Some(u) = rule.select(value, rng) {
            let r = if rule.is_sampling() { u } else { rng.open_unit() };
            out.push(PriorityDraw { index, value, r });
        }
    }
    let p = (rule.inclusion_probability(spec) * tuning.zero_rate_scale).min(1.0);
    let k = sample_binomial(table.zeros(), p, rng)?;
    let tau = rule.tau() as f64;
    for index in select_zero_locations(table, k, rng)? {
        let value = rule.sample_conditional(spec, rng);
        let cap = if rule.is_sampling() { (value.unsigned_abs() as f64 / tau).min(1.0) } else { 1.0 };
        out.push(PriorityDraw { index, value, r: rng.open_unit() * cap });
    }
    Ok(out)
}

fn finish(
    table: &SparseTable,
    method: &MethodSpec,
    spec: &NoiseSpec,
    params: Params,
    draws: impl IntoIterator<Item = PriorityDraw>,
) -> Result<Summary> {
    let mut summary = Summary {
        method: method.method(),
        params,
        noise: *spec,
        m: table.m(),
        n: table.n() as u64,
        layout: Layout::Flat,
        seed: None,
        entries: draws.into_iter().map(|d| SummaryEntry::new(d.index, d.value)).collect(),
    };
    summary.sort_entries();
    adjust_weights(&summary)
}

/// Expected sample size under `rule`, ignoring noise on the nonzero cells.
fn estimated_size(table: &SparseTable, theta: u64, tau: u64, spec: &NoiseSpec) -> f64 {
    let nonzero: f64 = table
        .entries()
        .iter()
        .map(|&(_, c)| c.unsigned_abs())
        .filter(|&c| c >= theta)
        .map(|c| (c as f64 / tau as f64).min(1.0))
        .sum();
    let zero_p = if tau <= theta {
        Selection::filter(theta, true).map(|r| r.inclusion_probability(spec)).unwrap_or(0.0)
    } else {
        Selection::combined(theta, tau).map(|r| r.inclusion_probability(spec)).unwrap_or(0.0)
    };
    nonzero + table.zeros() as f64 * zero_p
}

/// Largest integer tau whose estimated threshold-sample size is at least
/// `target`, or the floor when even the floor falls short.
pub(crate) fn tau_for_size(table: &SparseTable, theta: u64, target: f64, spec: &NoiseSpec) -> u64 {
    let floor = theta.max(1);
    let lo = if theta == 0 { 1 } else { theta + 1 };
    if estimated_size(table, theta, lo, spec) < target {
        return floor;
    }
    let mass = table.l1() as f64 + table.zeros() as f64 * spec.mean_abs();
    let mut hi = ((mass / target).ceil() as u64).max(lo) + 1;
    let mut good = lo;
    while estimated_size(table, theta, hi, spec) >= target {
        good = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - good > 1 {
        let mid = good + (hi - good) / 2;
        if estimated_size(table, theta, mid, spec) >= target {
            good = mid;
        } else {
            hi = mid;
        }
    }
    good
}

/// Threshold sample at a guessed tau, then the `s` largest priorities.
/// A sample with `s` or fewer items is redrawn at half the threshold.
fn priority_run(
    table: &SparseTable,
    method: &MethodSpec,
    theta: u64,
    s: usize,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
    tuning: &Tuning,
) -> Result<Summary> {
    let floor = theta.max(1);
    let mut tau = tuning.initial_tau.unwrap_or_else(|| tau_for_size(table, theta, 4.0 * s as f64, spec)).max(floor);
    let draws = loop {
        let rule = if theta == 0 {
            Selection::threshold(tau)?
        } else if tau <= theta {
            Selection::filter(theta, true)?
        } else {
            Selection::combined(theta, tau)?
        };
        let draws = draw(table, &rule, spec, rng, tuning)?;
        // At the floor every cell with nonzero weight is in the sample.
        if draws.len() > s || tau <= floor {
            break draws;
        }
        tau = (tau / 2).max(floor);
    };
    let (top, tau_s) = priority_extract(draws, s);
    let params = Params { tau_s: Some(tau_s), ..method.base_params() };
    finish(table, method, spec, params, top)
}

pub(super) fn run(
    table: &SparseTable,
    method: &MethodSpec,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
    tuning: &Tuning,
) -> Result<Summary> {
    let rule = match *method {
        MethodSpec::Filter { theta, sided } => Selection::filter(theta, sided == Sided::Two)?,
        MethodSpec::Threshold { tau } => Selection::threshold(tau)?,
        MethodSpec::FilterThreshold { theta, tau } => Selection::combined(theta, tau)?,
        MethodSpec::Priority { size } => return priority_run(table, method, 0, size, spec, rng, tuning),
        MethodSpec::FilterPriority { theta, size } => {
            return priority_run(table, method, theta, size, spec, rng, tuning)
        }
        MethodSpec::GeometricFull => return laborious::laborious_path(table, method, spec, rng),
    };
    let draws = draw(table, &rule, spec, rng, tuning)?;
    finish(table, method, spec, method.base_params(), draws)
}

/// High-pass filter: keeps `M'(i) >= theta` (one-sided) or `|M'(i)| >= theta`.
pub fn filter_shortcut(
    table: &SparseTable,
    theta: u64,
    sided: Sided,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
) -> Result<Summary> {
    super::summarize(table, &MethodSpec::Filter { theta, sided }, spec, rng)
}

/// Threshold sampling: each noisy cell kept with probability `min(|M'(i)|/tau, 1)`.
pub fn threshold_shortcut(table: &SparseTable, tau: u64, spec: &NoiseSpec, rng: &mut RngHandle) -> Result<Summary> {
    super::summarize(table, &MethodSpec::Threshold { tau }, spec, rng)
}

/// Two-sided filter at `theta` followed by threshold sampling at `tau`.
///
/// `theta = 0` is plain threshold sampling. `tau <= theta` is rejected since
/// every filtered cell would be kept; use [`filter_shortcut`] instead.
pub fn filter_threshold_shortcut(
    table: &SparseTable,
    theta: u64,
    tau: u64,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
) -> Result<Summary> {
    if theta == 0 {
        let mut s = threshold_shortcut(table, tau, spec, rng)?;
        s.method = Method::FilterThreshold;
        s.params.theta = Some(0);
        return Ok(s);
    }
    super::summarize(table, &MethodSpec::FilterThreshold { theta, tau }, spec, rng)
}

/// Priority sample of exactly `s` noisy cells plus `tau_s`.
pub fn priority_shortcut(table: &SparseTable, s: usize, spec: &NoiseSpec, rng: &mut RngHandle) -> Result<Summary> {
    super::summarize(table, &MethodSpec::Priority { size: s }, spec, rng)
}

/// Two-sided filter at `theta`, then a priority sample of size `s`.
pub fn filter_priority_shortcut(
    table: &SparseTable,
    theta: u64,
    s: usize,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
) -> Result<Summary> {
    super::summarize(table, &MethodSpec::FilterPriority { theta, size: s }, spec, rng)
}
