//! The two-sided geometric mechanism and exact binomial counts.

use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::rng::RngHandle;

/// Privacy parameters of the geometric mechanism.
///
/// `alpha = exp(-epsilon / sensitivity)` is derived, never supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    epsilon: f64,
    sensitivity: u64,
    ln_alpha: f64,
    alpha: f64,
}

impl NoiseSpec {
    pub fn new(epsilon: f64, sensitivity: u64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        if sensitivity == 0 {
            return Err(invalid("sensitivity must be at least 1"));
        }
        let ln_alpha = -epsilon / sensitivity as f64;
        let alpha = ln_alpha.exp();
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("epsilon/sensitivity gives degenerate alpha {alpha}")));
        }
        Ok(NoiseSpec { epsilon, sensitivity, ln_alpha, alpha })
    }

    /// Spec with unit sensitivity.
    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 1)
    }

    /// Spec for a given `alpha` directly. Mostly useful in tests and oracles.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
        }
        Self::new(-alpha.ln(), 1)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> u64 {
        self.sensitivity
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ln_alpha(&self) -> f64 {
        self.ln_alpha
    }

    /// Same budget, sensitivity multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        Self::new(self.epsilon, self.sensitivity * factor)
    }

    /// `alpha^k` evaluated in log space.
    pub fn pow(&self, k: f64) -> f64 {
        (k * self.ln_alpha).exp()
    }

    /// Variance of one noise draw, `2a/(1-a)^2`.
    pub fn variance(&self) -> f64 {
        let a = self.alpha;
        2.0 * a / ((1.0 - a) * (1.0 - a))
    }

    /// `E|X| = 2a/(1-a^2)`.
    pub fn mean_abs(&self) -> f64 {
        let a = self.alpha;
        2.0 * a / (1.0 - a * a)
    }

    /// Largest magnitude the sampler emits: the first `k` with
    /// `Pr[|X| >= k] < 2^-60`. Below that the tail is finer than one
    /// uniform draw can resolve.
    pub fn magnitude_cap(&self) -> i64 {
        let a = self.alpha;
        let bound = (-60.0 * std::f64::consts::LN_2 - (2.0 / (1.0 + a)).ln()) / self.ln_alpha;
        bound.ceil().max(1.0) as i64
    }
}

/// `Pr[X = x] = (1-a)/(1+a) a^|x|`.
pub fn geom_pmf(spec: &NoiseSpec, x: i64) -> f64 {
    let a = spec.alpha;
    (1.0 - a) / (1.0 + a) * spec.pow(x.unsigned_abs() as f64)
}

/// One draw of two-sided geometric noise.
///
/// Inverts `Pr[|X| >= j] = 2a^j/(1+a)` with a single uniform, then flips a
/// fair coin for the sign of a nonzero magnitude.
pub fn sample_geometric(spec: &NoiseSpec, rng: &mut RngHandle) -> i64 {
    let u = rng.open_unit();
    let t = (u * (1.0 + spec.alpha) * 0.5).ln() / spec.ln_alpha;
    if t < 1.0 {
        return 0;
    }
    let mag = (t.floor() as i64).min(spec.magnitude_cap());
    if rng.coin() {
        mag
    } else {
        -mag
    }
}

/// Exact `Bin(trials, p)` variate.
pub fn sample_binomial(trials: u64, p: f64, rng: &mut RngHandle) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("binomial probability {p} outside [0,1]")));
    }
    if trials == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(trials);
    }
    let dist = Binomial::new(trials, p).map_err(|e| invalid(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Rounds a negative value up to zero.
pub fn clamp_nonnegative(value: i64) -> i64 {
    value.max(0)
}
