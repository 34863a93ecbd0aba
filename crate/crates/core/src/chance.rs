//! Tail-bound evaluations of the chance constraint `Pr[W(x) >= C] <= alpha`
//! for independent weights `w_i ~ U[E(w_i) - delta, E(w_i) + delta]`.
//!
//! Two families are provided. Each has a violation probability as a function
//! of the capacity `C` and a capacity bound `C*(x)`: the smallest capacity at
//! which the solution still meets the constraint according to that family.
//! Everything depends on a solution only through `E(W(x))` and the number of
//! chosen items `k`, since every item shares the same half-width.
//!
//! Conventions shared by both families:
//! * `k == 0`: the weight is deterministically zero, so the violation
//!   probability is `0` for `C > 0` and `1` otherwise, and `C*(x) = E(W(x))`.
//! * `C <= E(W(x))`: the violation probability is `1`. The tail bounds only
//!   speak about the region above the mean.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Item, Solution};
use crate::Scalar;

/// Coefficient of the Chernoff capacity margin.
pub const CHERNOFF_MARGIN_COEFF: f64 = 0.66;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    Chebyshev,
    Chernoff,
}

impl BoundKind {
    pub const ALL: [BoundKind; 2] = [BoundKind::Chebyshev, BoundKind::Chernoff];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Chebyshev => "chebyshev",
            BoundKind::Chernoff => "chernoff",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" | "cheb" => Ok(BoundKind::Chebyshev),
            "chernoff" | "chern" => Ok(BoundKind::Chernoff),
            other => Err(Error::invalid(format!("unknown bound `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChanceParams<F> {
    alpha: F,
    delta: u64,
    bound: BoundKind,
}

impl<F: Scalar> ChanceParams<F> {
    pub fn new(alpha: F, delta: u64, bound: BoundKind) -> Result<Self> {
        if !(alpha > F::zero() && alpha < F::one()) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if delta == 0 {
            return Err(Error::invalid("delta must be positive"));
        }
        Ok(ChanceParams {
            alpha,
            delta,
            bound,
        })
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn bound(&self) -> BoundKind {
        self.bound
    }

    pub fn with_bound(self, bound: BoundKind) -> Self {
        ChanceParams { bound, ..self }
    }

    pub fn violation_prob(&self, expected_weight: u64, count: usize, capacity: F) -> F {
        match self.bound {
            BoundKind::Chebyshev => {
                chebyshev_violation_prob(expected_weight, count, self.delta, capacity)
            }
            BoundKind::Chernoff => {
                chernoff_violation_prob(expected_weight, count, self.delta, capacity)
            }
        }
    }

    pub fn capacity_bound(&self, expected_weight: u64, count: usize) -> F {
        match self.bound {
            BoundKind::Chebyshev => {
                chebyshev_capacity_bound(expected_weight, count, self.delta, self.alpha)
            }
            BoundKind::Chernoff => {
                chernoff_capacity_bound(expected_weight, count, self.delta, self.alpha)
            }
        }
    }

    /// Whether the surrogate violation probability at `capacity` is within `alpha`.
    pub fn is_feasible(&self, expected_weight: u64, count: usize, capacity: F) -> bool {
        self.violation_prob(expected_weight, count, capacity) <= self.alpha
    }
}

/// `C*(x)` of a solution under the configured family.
pub fn capacity_bound<F: Scalar>(sol: &Solution, params: &ChanceParams<F>) -> F {
    params.capacity_bound(sol.expected_weight(), sol.count())
}

/// Returns `Some(p)` when one of the shared conventions decides the value,
/// otherwise the positive distance `C - E(W)` to feed the tail formula.
fn conventions<F: Scalar>(expected_weight: u64, count: usize, capacity: F) -> Result<F, F> {
    if count == 0 {
        return Ok(if capacity > F::zero() {
            F::zero()
        } else {
            F::one()
        });
    }
    let gap = capacity - F::of_u64(expected_weight);
    if gap <= F::zero() {
        Ok(F::one())
    } else {
        Err(gap)
    }
}

/// One-sided Chebyshev bound `delta^2 k / (delta^2 k + 3 (C - E(W))^2)`.
pub fn chebyshev_violation_prob<F: Scalar>(
    expected_weight: u64,
    count: usize,
    delta: u64,
    capacity: F,
) -> F {
    match conventions(expected_weight, count, capacity) {
        Ok(p) => p,
        Err(gap) => {
            let var3 = F::of_u64(delta).powi(2) * F::of_usize(count);
            var3 / (var3 + F::lit(3.0) * gap * gap)
        }
    }
}

/// Chernoff bound `exp(-3 (C - E(W))^2 / (4 delta (3 delta k + C - E(W))))`.
pub fn chernoff_violation_prob<F: Scalar>(
    expected_weight: u64,
    count: usize,
    delta: u64,
    capacity: F,
) -> F {
    match conventions(expected_weight, count, capacity) {
        Ok(p) => p,
        Err(gap) => {
            let d = F::of_u64(delta);
            let k = F::of_usize(count);
            let denom = F::lit(4.0) * d * (F::lit(3.0) * d * k + gap);
            (-(F::lit(3.0) * gap * gap) / denom).exp()
        }
    }
}

/// `E(W) + delta sqrt(3 alpha (1 - alpha) k) / (3 alpha)`.
///
/// This is the exact inverse of [`chebyshev_violation_prob`] at level `alpha`.
pub fn chebyshev_capacity_bound<F: Scalar>(
    expected_weight: u64,
    count: usize,
    delta: u64,
    alpha: F,
) -> F {
    let mean = F::of_u64(expected_weight);
    if count == 0 {
        return mean;
    }
    let three_alpha = F::lit(3.0) * alpha;
    let margin = F::of_u64(delta) * (three_alpha * (F::one() - alpha) * F::of_usize(count)).sqrt()
        / three_alpha;
    mean + margin
}

/// `E(W) - 0.66 delta (ln alpha - sqrt(ln^2 alpha - 9 k ln alpha))`.
pub fn chernoff_capacity_bound<F: Scalar>(
    expected_weight: u64,
    count: usize,
    delta: u64,
    alpha: F,
) -> F {
    let mean = F::of_u64(expected_weight);
    if count == 0 {
        return mean;
    }
    let ln_a = alpha.ln();
    let root = (ln_a * ln_a - F::lit(9.0) * ln_a * F::of_usize(count)).sqrt();
    mean - F::lit(CHERNOFF_MARGIN_COEFF) * F::of_u64(delta) * (ln_a - root)
}

/// Monte-Carlo estimate of `Pr[W(x) >= capacity]` with continuous uniform
/// item weights. Deterministic for a given `seed`.
pub fn monte_carlo_violation(
    items: &[Item],
    bits: &[bool],
    delta: u64,
    capacity: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    monte_carlo_violations(items, bits, delta, &[capacity], samples, seed)[0]
}

/// Like [`monte_carlo_violation`] but scores several capacities against the
/// same weight realizations.
pub fn monte_carlo_violations(
    items: &[Item],
    bits: &[bool],
    delta: u64,
    capacities: &[f64],
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    assert!(samples >= 1, "need at least one sample");
    let chosen: Vec<f64> = items
        .iter()
        .zip(bits)
        .filter(|(_, b)| **b)
        .map(|(it, _)| it.expected_weight as f64)
        .collect();
    let lows: Vec<f64> = chosen.iter().map(|e| e - delta as f64).collect();
    let width = 2.0 * delta as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; capacities.len()];
    for _ in 0..samples {
        let total: f64 = lows.iter().map(|lo| lo + width * rng.random::<f64>()).sum();
        for (h, c) in hits.iter_mut().zip(capacities) {
            if total >= *c {
                *h += 1;
            }
        }
    }
    hits.into_iter()
        .map(|h| h as f64 / samples as f64)
        .collect()
}
