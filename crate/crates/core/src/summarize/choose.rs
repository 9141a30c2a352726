use crate::error::{invalid, Result};
use crate::noise::NoiseSpec;
use crate::table::SparseTable;

use super::{Method, MethodSpec, Sided};

/// Smallest `theta >= 1` whose expected number of upgraded zeros is at most `t`.
///
/// The returned value brackets the target:
/// `(m-n) p_theta <= t < (m-n) p_(theta-1)` whenever `theta > 1`.
pub fn choose_theta(m: u64, n: u64, t: f64, spec: &NoiseSpec, sided: Sided) -> Result<u64> {
    if !(t > 0.0) {
        return Err(invalid("target size must be positive"));
    }
    if n >= m {
        return Err(invalid("table has no zero cells"));
    }
    let zeros = (m - n) as f64;
    let a = spec.alpha();
    let scale = match sided {
        Sided::One => 1.0 / (1.0 + a),
        Sided::Two => 2.0 / (1.0 + a),
    };
    let expected = |theta: u64| zeros * scale * spec.pow(theta as f64);
    if expected(1) <= t {
        return Ok(1);
    }
    let raw = (t / (zeros * scale)).ln() / spec.ln_alpha();
    let mut theta = raw.ceil().max(1.0) as u64;
    while theta > 1 && expected(theta - 1) <= t {
        theta -= 1;
    }
    while expected(theta) > t {
        theta += 1;
    }
    Ok(theta)
}

/// `tau ~ (||M||_1 + 2m a/(1-a^2)) / t`, rounded, at least 1.
pub fn choose_tau(table: &SparseTable, t: f64, spec: &NoiseSpec) -> Result<u64> {
    if !(t > 0.0) {
        return Err(invalid("target size must be positive"));
    }
    let mass = table.l1() as f64 + table.m() as f64 * spec.mean_abs();
    Ok((mass / t).round().max(1.0) as u64)
}

/// Parameters for `method` aiming at roughly `t` released cells.
///
/// Filters pick theta so that about `t` zero cells pass; surviving nonzero
/// cells come on top. Threshold picks tau and priority uses `s = t`. The
/// combined methods take `theta` when given, otherwise a filter aimed at
/// `2t` zero cells, and then sample down to about `t`.
pub fn method_for_target(
    method: Method,
    table: &SparseTable,
    t: f64,
    spec: &NoiseSpec,
    theta: Option<u64>,
) -> Result<MethodSpec> {
    let (m, n) = (table.m(), table.n() as u64);
    let loose = || match theta {
        Some(th) => Ok(th),
        None => choose_theta(m, n, 2.0 * t, spec, Sided::Two),
    };
    let size = (t.round() as usize).max(1);
    Ok(match method {
        Method::Filter1 => MethodSpec::Filter { theta: choose_theta(m, n, t, spec, Sided::One)?, sided: Sided::One },
        Method::Filter2 => MethodSpec::Filter { theta: choose_theta(m, n, t, spec, Sided::Two)?, sided: Sided::Two },
        Method::Threshold => MethodSpec::Threshold { tau: choose_tau(table, t, spec)? },
        Method::FilterThreshold => {
            let theta = loose()?;
            MethodSpec::FilterThreshold { theta, tau: super::shortcut::tau_for_size(table, theta, t, spec).max(theta + 1) }
        }
        Method::Priority => MethodSpec::Priority { size },
        Method::FilterPriority => MethodSpec::FilterPriority { theta: loose()?, size },
        Method::GeometricFull => MethodSpec::GeometricFull,
    })
}
