//! Brute-force probability oracle: sums the noise PMF against the
//! selection rule directly, with no closed forms.

use crate::noise::NoiseSpec;
use crate::summarize::Kind;

/// Inclusion probability of a zero cell plus the conditional PMF of its
/// released value, both by explicit summation.
#[derive(Debug, Clone)]
pub struct BruteProbability {
    pub inclusion: f64,
    /// `(nu, Pr[value = nu | kept])` for `|nu| <= K`, ascending.
    pub pmf: Vec<(i64, f64)>,
}

impl BruteProbability {
    /// `Pr[value <= nu | kept]`.
    pub fn cdf(&self, nu: i64) -> f64 {
        self.pmf.iter().take_while(|(v, _)| *v <= nu).map(|(_, p)| p).sum()
    }
}

fn selection_rule(kind: Kind, theta: u64, tau: u64, nu: i64) -> f64 {
    let mag = nu.unsigned_abs();
    let share = |t: u64| (mag as f64 / t as f64).min(1.0);
    match kind {
        Kind::Filter1 => f64::from(nu >= theta as i64),
        Kind::Filter2 => f64::from(mag >= theta),
        Kind::Threshold => share(tau),
        Kind::Combined if mag >= theta => share(tau),
        Kind::Combined => 0.0,
    }
}

/// Truncation point: past `max(theta, tau) + K` the tails hold less than
/// 1e-15 of the mass that remains at the selection boundary.
fn truncation(alpha: f64, theta: u64, tau: u64) -> i64 {
    let k = (1e-15 * (1.0 - alpha) / 2.0).ln() / alpha.ln();
    k.ceil().max(1.0) as i64 + 1 + theta.max(tau) as i64
}

/// Brute-force inclusion probability and conditional PMF for a zero cell.
pub fn brute_probability(kind: Kind, spec: &NoiseSpec, theta: u64, tau: u64) -> BruteProbability {
    let alpha = spec.alpha();
    let k = truncation(alpha, theta, tau);
    let norm = (1.0 - alpha) / (1.0 + alpha);
    let weights: Vec<(i64, f64)> = (-k..=k)
        .map(|nu| (nu, norm * alpha.powi(nu.unsigned_abs() as i32) * selection_rule(kind, theta, tau, nu)))
        .collect();
    // sum from the small tail inward to limit rounding
    let mut order: Vec<f64> = weights.iter().map(|w| w.1).collect();
    order.sort_unstable_by(f64::total_cmp);
    let inclusion: f64 = order.iter().sum();
    let pmf = weights
        .into_iter()
        .filter(|w| w.1 > 0.0)
        .map(|(nu, w)| (nu, w / inclusion))
        .collect();
    BruteProbability { inclusion, pmf }
}
