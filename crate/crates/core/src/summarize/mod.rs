//! Shortcut summary generators.
//!
//! Each generator produces a summary distributed exactly as if noise had been
//! added to all `m` cells and the summary taken afterwards, but touches only
//! the `n` nonzero cells plus the zero cells that end up in the output.

mod choose;
mod laborious;
mod probability;
mod shortcut;
mod summary;
mod zeros;

use std::fmt;
use std::str::FromStr;

pub use choose::{choose_tau, choose_theta, method_for_target};
pub use laborious::{geometric_full, laborious_path, LABORIOUS_MAX_CELLS};
pub use probability::{conditional_cdf, inclusion_probability, sample_conditional, Kind, Selection};
pub use shortcut::{
    filter_priority_shortcut, filter_shortcut, filter_threshold_shortcut, priority_extract, priority_shortcut,
    threshold_shortcut, PriorityDraw,
};
pub use summary::{
    adjust_weights, clamp_nonnegative, index_of_node, node_of_index, read_summary, write_summary, Layout, Method,
    Params, Summary, SummaryEntry,
};
pub use zeros::select_zero_locations;

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseSpec;
use crate::rng::RngHandle;
use crate::table::SparseTable;

/// Filter sidedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sided {
    /// Keep `M'(i) >= theta`.
    One,
    /// Keep `|M'(i)| >= theta`.
    Two,
}

/// A summary method together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Filter { theta: u64, sided: Sided },
    Threshold { tau: u64 },
    FilterThreshold { theta: u64, tau: u64 },
    Priority { size: usize },
    FilterPriority { theta: u64, size: usize },
    GeometricFull,
}

impl MethodSpec {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Filter { sided: Sided::One, .. } => Method::Filter1,
            MethodSpec::Filter { sided: Sided::Two, .. } => Method::Filter2,
            MethodSpec::Threshold { .. } => Method::Threshold,
            MethodSpec::FilterThreshold { .. } => Method::FilterThreshold,
            MethodSpec::Priority { .. } => Method::Priority,
            MethodSpec::FilterPriority { .. } => Method::FilterPriority,
            MethodSpec::GeometricFull => Method::GeometricFull,
        }
    }

    /// Checks parameters against a domain of `m` cells.
    pub fn validate(&self, m: u64) -> Result<()> {
        match *self {
            MethodSpec::Filter { theta, .. } if theta == 0 => Err(invalid("filter needs theta >= 1")),
            MethodSpec::Threshold { tau } if tau == 0 => Err(invalid("threshold sampling needs tau >= 1")),
            MethodSpec::FilterThreshold { theta, tau } if tau <= theta => Err(invalid(format!(
                "filter-threshold needs theta < tau (got theta={theta}, tau={tau}); \
                 with tau <= theta every filtered cell is kept, use filter2 instead"
            ))),
            MethodSpec::Priority { size } | MethodSpec::FilterPriority { size, .. } if size == 0 || size as u64 >= m => {
                Err(invalid(format!("priority sample size must satisfy 1 <= s < m = {m}, got {size}")))
            }
            MethodSpec::FilterPriority { theta, .. } if theta == 0 => {
                Err(invalid("filter-priority needs theta >= 1"))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn base_params(&self) -> Params {
        match *self {
            MethodSpec::Filter { theta, .. } => Params { theta: Some(theta), ..Default::default() },
            MethodSpec::Threshold { tau } => Params { tau: Some(tau), ..Default::default() },
            MethodSpec::FilterThreshold { theta, tau } => Params { theta: Some(theta), tau: Some(tau), ..Default::default() },
            MethodSpec::Priority { size } => Params { size: Some(size), ..Default::default() },
            MethodSpec::FilterPriority { theta, size } => Params { theta: Some(theta), size: Some(size), ..Default::default() },
            MethodSpec::GeometricFull => Params::default(),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.method().name();
        match *self {
            MethodSpec::Filter { theta, .. } => write!(f, "{name}:theta={theta}"),
            MethodSpec::Threshold { tau } => write!(f, "{name}:tau={tau}"),
            MethodSpec::FilterThreshold { theta, tau } => write!(f, "{name}:theta={theta},tau={tau}"),
            MethodSpec::Priority { size } => write!(f, "{name}:s={size}"),
            MethodSpec::FilterPriority { theta, size } => write!(f, "{name}:theta={theta},s={size}"),
            MethodSpec::GeometricFull => f.write_str(name),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// Parses `name[:key=value,...]`, e.g. `filter-priority:theta=40,s=100000`.
    fn from_str(text: &str) -> Result<Self> {
        let (name, args) = text.trim().split_once(':').unwrap_or((text.trim(), ""));
        let method: Method = name.parse()?;
        let mut theta = None;
        let mut tau = None;
        let mut size = None;
        for kv in args.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value in {text:?}")))?;
            let num: u64 = v.trim().parse().map_err(|_| invalid(format!("bad number {v:?} in {text:?}")))?;
            match k.trim() {
                "theta" => theta = Some(num),
                "tau" => tau = Some(num),
                "s" | "size" => size = Some(num as usize),
                other => return Err(invalid(format!("unknown parameter {other:?} in {text:?}"))),
            }
        }
        let need = |v: Option<u64>, what: &str| v.ok_or_else(|| invalid(format!("{name} needs {what}")));
        Ok(match method {
            Method::Filter1 => MethodSpec::Filter { theta: need(theta, "theta")?, sided: Sided::One },
            Method::Filter2 => MethodSpec::Filter { theta: need(theta, "theta")?, sided: Sided::Two },
            Method::Threshold => MethodSpec::Threshold { tau: need(tau, "tau")? },
            Method::FilterThreshold => MethodSpec::FilterThreshold { theta: need(theta, "theta")?, tau: need(tau, "tau")? },
            Method::Priority => MethodSpec::Priority { size: need(size.map(|s| s as u64), "s")? as usize },
            Method::FilterPriority => MethodSpec::FilterPriority {
                theta: need(theta, "theta")?,
                size: need(size.map(|s| s as u64), "s")? as usize,
            },
            Method::GeometricFull => MethodSpec::GeometricFull,
        })
    }
}

/// Knobs for verification runs. The defaults give the exact shortcuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    /// Multiplies the zero-cell inclusion probability. Anything other than
    /// 1.0 produces a wrong distribution; used to check test power.
    pub zero_rate_scale: f64,
    /// First threshold tried by priority sampling instead of the estimate.
    pub initial_tau: Option<u64>,
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning { zero_rate_scale: 1.0, initial_tau: None }
    }
}

/// Runs the shortcut generator for `method`. Weights come back adjusted.
pub fn summarize(table: &SparseTable, method: &MethodSpec, spec: &NoiseSpec, rng: &mut RngHandle) -> Result<Summary> {
    summarize_tuned(table, method, spec, rng, &Tuning::default())
}

pub fn summarize_tuned(
    table: &SparseTable,
    method: &MethodSpec,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
    tuning: &Tuning,
) -> Result<Summary> {
    method.validate(table.m())?;
    shortcut::run(table, method, spec, rng, tuning)
}
