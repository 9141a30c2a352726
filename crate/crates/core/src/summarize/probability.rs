//! Closed forms for how a zero cell of `M` enters the summary.
//!
//! A zero cell's noisy value is pure geometric noise `X`. Each rule below
//! selects it with some probability depending on `X`; this module gives
//! the overall selection probability and the law of `X` given selection,
//! and samples from that law by inverse transform.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::NoiseSpec;
use crate::rng::RngHandle;

/// Which selection rule is applied to a noisy cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Keep `x >= theta`.
    Filter1,
    /// Keep `|x| >= theta`.
    Filter2,
    /// Keep with probability `min(|x|/tau, 1)`.
    Threshold,
    /// Two-sided filter at `theta`, then threshold sampling at `tau`.
    Combined,
}

/// A validated selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    kind: Kind,
    theta: u64,
    tau: u64,
}

impl Selection {
    pub fn new(kind: Kind, theta: u64, tau: u64) -> Result<Self> {
        match kind {
            Kind::Filter1 | Kind::Filter2 if theta == 0 => {
                return Err(invalid("filter threshold theta must be at least 1"))
            }
            Kind::Threshold if tau == 0 => return Err(invalid("sampling threshold tau must be at least 1")),
            Kind::Combined if tau == 0 || theta > tau => {
                return Err(invalid(format!(
                    "filter+threshold needs theta <= tau and tau >= 1 (got theta={theta}, tau={tau}); \
                     for tau <= theta use the two-sided filter"
                )))
            }
            _ => {}
        }
        let (theta, tau) = match kind {
            Kind::Filter1 | Kind::Filter2 => (theta, 0),
            Kind::Threshold => (0, tau),
            Kind::Combined => (theta, tau),
        };
        Ok(Selection { kind, theta, tau })
    }

    pub fn filter(theta: u64, two_sided: bool) -> Result<Self> {
        Self::new(if two_sided { Kind::Filter2 } else { Kind::Filter1 }, theta, 0)
    }

    pub fn threshold(tau: u64) -> Result<Self> {
        Self::new(Kind::Threshold, 0, tau)
    }

    pub fn combined(theta: u64, tau: u64) -> Result<Self> {
        Self::new(Kind::Combined, theta, tau)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn theta(&self) -> u64 {
        self.theta
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    /// Whether selection involves a random draw rather than a cut-off.
    pub fn is_sampling(&self) -> bool {
        matches!(self.kind, Kind::Threshold | Kind::Combined)
    }

    /// Probability that a cell whose noisy value is `x` is selected.
    pub fn select_probability(&self, x: i64) -> f64 {
        let a = x.unsigned_abs();
        match self.kind {
            Kind::Filter1 => f64::from(x >= self.theta as i64),
            Kind::Filter2 => f64::from(a >= self.theta),
            Kind::Threshold => (a as f64 / self.tau as f64).min(1.0),
            Kind::Combined if a < self.theta => 0.0,
            Kind::Combined => (a as f64 / self.tau as f64).min(1.0),
        }
    }

    /// Applies the rule to one noisy value. Returns the uniform used for the
    /// sampling decision, which doubles as the priority variate `r`.
    pub fn select(&self, x: i64, rng: &mut RngHandle) -> Option<f64> {
        match self.kind {
            Kind::Filter1 | Kind::Filter2 => (self.select_probability(x) > 0.0).then_some(1.0),
            Kind::Threshold | Kind::Combined => {
                if x == 0 || x.unsigned_abs() < self.theta {
                    return None;
                }
                let u = rng.open_unit();
                (u * self.tau as f64 <= x.unsigned_abs() as f64).then_some(u)
            }
        }
    }

    /// Probability that a zero cell of `M` is selected.
    pub fn inclusion_probability(&self, spec: &NoiseSpec) -> f64 {
        let a = spec.alpha();
        let th = self.theta as f64;
        let tau = self.tau as f64;
        match self.kind {
            Kind::Filter1 => spec.pow(th) / (1.0 + a),
            Kind::Filter2 => 2.0 * spec.pow(th) / (1.0 + a),
            Kind::Threshold => 2.0 * a * (1.0 - spec.pow(tau)) / (tau * (1.0 - a * a)),
            Kind::Combined => 2.0 * self.combined_mass(spec) / (tau * (1.0 - a * a)),
        }
    }

    // theta a^theta - (theta-1) a^(theta+1) - a^(tau+1)
    fn combined_mass(&self, spec: &NoiseSpec) -> f64 {
        let th = self.theta as f64;
        th * spec.pow(th) - (th - 1.0) * spec.pow(th + 1.0) - spec.pow(self.tau as f64 + 1.0)
    }

    /// `Pr[X <= nu | selected]` for a zero cell.
    pub fn conditional_cdf(&self, spec: &NoiseSpec, nu: i64) -> f64 {
        let a = spec.alpha();
        let th = self.theta as i64;
        let tau = self.tau as i64;
        let v = nu as f64;
        let p = |k: f64| spec.pow(k);
        match self.kind {
            Kind::Filter1 => {
                if nu < th {
                    0.0
                } else {
                    1.0 - p((nu - th + 1) as f64)
                }
            }
            Kind::Filter2 => {
                if nu <= -th {
                    0.5 * p((-nu - th) as f64)
                } else if nu < th {
                    0.5
                } else {
                    1.0 - 0.5 * p((nu - th + 1) as f64)
                }
            }
            Kind::Threshold => {
                let c = 1.0 / (2.0 * a * (1.0 - p(tau as f64)));
                let t = tau as f64;
                if nu <= -tau {
                    t * p(-v) * c * (1.0 - a)
                } else if nu <= 0 {
                    c * (-v * p(-v) + (v + 1.0) * p(-v + 1.0) - p(t + 1.0))
                } else if nu <= tau {
                    0.5 + a * c * (1.0 - (v + 1.0) * p(v) + v * p(v + 1.0))
                } else {
                    0.5 + a * c * (1.0 - p(t) - t * p(v) * (1.0 - a))
                }
            }
            Kind::Combined => {
                let c = 1.0 / (2.0 * self.combined_mass(spec));
                let t = tau as f64;
                let thf = th as f64;
                if nu <= -tau {
                    t * c * (1.0 - a) * p(-v)
                } else if nu <= -th {
                    c * (-v * p(-v) + (v + 1.0) * p(-v + 1.0) - p(t + 1.0))
                } else if nu < th {
                    0.5
                } else if nu <= tau {
                    0.5 + c
                        * (thf * p(thf) - (thf - 1.0) * p(thf + 1.0) - (v + 1.0) * p(v + 1.0)
                            + v * p(v + 2.0))
                } else {
                    1.0 - t * c * (1.0 - a) * p(v + 1.0)
                }
            }
        }
    }

    /// `Pr[|X| >= j | selected]` for `j >= 1`, for the two-sided kinds.
    fn magnitude_survival(&self, spec: &NoiseSpec, j: i64) -> f64 {
        2.0 * (1.0 - self.conditional_cdf(spec, j - 1))
    }

    /// Draws the noisy value of an upgraded zero cell.
    pub fn sample_conditional(&self, spec: &NoiseSpec, rng: &mut RngHandle) -> i64 {
        let ln_a = spec.ln_alpha();
        let cap = spec.magnitude_cap();
        let th = self.theta as i64;
        let magnitude = match self.kind {
            Kind::Filter1 | Kind::Filter2 => {
                // invert 1 - a^(x - theta + 1)
                let u = rng.open_unit();
                th + ((u.ln() / ln_a).floor() as i64).min(cap)
            }
            Kind::Threshold | Kind::Combined => {
                let tau = self.tau as i64;
                let lo = th.max(1);
                let u = rng.open_unit();
                // Geometric tail above tau: Pr[|X| >= j] = 2c a^j.
                let c = self.tau as f64 * (1.0 - spec.alpha()) * self.tail_constant(spec);
                if u <= 2.0 * c * spec.pow((tau + 1) as f64) {
                    let mut j = (((u / (2.0 * c)).ln() / ln_a).floor() as i64).min(tau + 1 + cap);
                    // the closed form can land one off after rounding
                    while j > tau + 1 && 2.0 * c * spec.pow(j as f64) < u {
                        j -= 1;
                    }
                    while j < tau + 1 + cap && 2.0 * c * spec.pow((j + 1) as f64) >= u {
                        j += 1;
                    }
                    j.max(tau + 1)
                } else {
                    // largest j in [lo, tau] with survival(j) >= u; survival(lo) = 1.
                    // Gallop up from lo so the cost follows the drawn value, not tau.
                    let (mut good, mut bad) = (lo, tau + 1);
                    let mut step = 1;
                    while good + step < bad {
                        if self.magnitude_survival(spec, good + step) >= u {
                            good += step;
                            step *= 2;
                        } else {
                            bad = good + step;
                            break;
                        }
                    }
                    while bad - good > 1 {
                        let mid = good + (bad - good) / 2;
                        if self.magnitude_survival(spec, mid) >= u {
                            good = mid;
                        } else {
                            bad = mid;
                        }
                    }
                    good
                }
            }
        };
        match self.kind {
            Kind::Filter1 => magnitude,
            _ if rng.coin() => magnitude,
            _ => -magnitude,
        }
    }

    // C_tau or C_{theta,tau}
    fn tail_constant(&self, spec: &NoiseSpec) -> f64 {
        match self.kind {
            Kind::Threshold => 1.0 / (2.0 * spec.alpha() * (1.0 - spec.pow(self.tau as f64))),
            Kind::Combined => 1.0 / (2.0 * self.combined_mass(spec)),
            _ => unreachable!("tail constant only defined for sampling kinds"),
        }
    }
}

/// Probability that a zero cell of `M` appears in the summary.
pub fn inclusion_probability(kind: Kind, spec: &NoiseSpec, theta: u64, tau: u64) -> Result<f64> {
    Ok(Selection::new(kind, theta, tau)?.inclusion_probability(spec))
}

/// `Pr[released value <= nu | zero cell selected]`.
pub fn conditional_cdf(kind: Kind, spec: &NoiseSpec, theta: u64, tau: u64, nu: i64) -> Result<f64> {
    Ok(Selection::new(kind, theta, tau)?.conditional_cdf(spec, nu))
}

/// Draws from [`conditional_cdf`] by inverse transform.
pub fn sample_conditional(kind: Kind, spec: &NoiseSpec, theta: u64, tau: u64, rng: &mut RngHandle) -> Result<i64> {
    Ok(Selection::new(kind, theta, tau)?.sample_conditional(spec, rng))
}
