//! Exact references: the deterministic DP table over expected weights and
//! exhaustive search for small instances.

use crate::chance::ChanceParams;
use crate::error::{Error, Result};
use crate::model::Item;
use crate::Scalar;

pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;

/// Optimal deterministic profit for every capacity `0..=c_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpTable {
    profits: Vec<u64>,
}

impl DpTable {
    pub fn build(items: &[Item], c_max: u64) -> Self {
        DpTable {
            profits: dp_optimal_profits(items, c_max),
        }
    }

    pub fn c_max(&self) -> u64 {
        self.profits.len() as u64 - 1
    }

    pub fn get(&self, capacity: u64) -> Option<u64> {
        self.profits.get(capacity as usize).copied()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.profits
    }

    /// `capacity,optimal_profit` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("capacity,optimal_profit\n");
        for (c, p) in self.profits.iter().enumerate() {
            out.push_str(&format!("{c},{p}\n"));
        }
        out
    }
}

/// `table[c]` is the best profit over subsets with expected weight `<= c`.
pub fn dp_optimal_profits(items: &[Item], c_max: u64) -> Vec<u64> {
    let cap = c_max as usize;
    let mut table = vec![0u64; cap + 1];
    for item in items {
        let w = item.expected_weight as usize;
        if w > cap {
            continue;
        }
        for c in (w..=cap).rev() {
            let with = table[c - w] + item.profit;
            if with > table[c] {
                table[c] = with;
            }
        }
    }
    table
}

/// Exhaustive search over all subsets accepted by `feasible(expected_weight,
/// count)`. Ties go to the lexicographically smallest bit-vector.
fn exhaustive<P>(items: &[Item], feasible: P) -> Result<(u64, Vec<bool>)>
where
    P: Fn(u64, usize) -> bool,
{
    let n = items.len();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::TooManyItems {
            n,
            max: BRUTE_FORCE_MAX_ITEMS,
        });
    }
    // Bit i of `lex` holds item n-1-i, so integer order is lexicographic order.
    let mut best: Option<(u64, u32)> = None;
    for lex in 0u32..(1u32 << n) {
        let (mut p, mut w, mut k) = (0u64, 0u64, 0usize);
        for (i, item) in items.iter().enumerate() {
            if lex >> (n - 1 - i) & 1 == 1 {
                p += item.profit;
                w += item.expected_weight;
                k += 1;
            }
        }
        if !feasible(w, k) {
            continue;
        }
        match best {
            Some((bp, _)) if bp >= p => {}
            _ => best = Some((p, lex)),
        }
    }
    let (profit, lex) = best.unwrap_or((0, 0));
    let bits = (0..n).map(|i| lex >> (n - 1 - i) & 1 == 1).collect();
    Ok((profit, bits))
}

pub fn brute_force_optimum(items: &[Item], capacity: u64) -> Result<(u64, Vec<bool>)> {
    exhaustive(items, |w, _| w <= capacity)
}

/// Best profit among subsets whose surrogate violation probability at
/// `capacity` is within `alpha`.
pub fn brute_force_chance_optimum<F: Scalar>(
    items: &[Item],
    capacity: u64,
    params: &ChanceParams<F>,
) -> Result<(u64, Vec<bool>)> {
    let c = F::of_u64(capacity);
    exhaustive(items, |w, k| params.is_feasible(w, k, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::BoundKind;
    use crate::model::{Instance, InstanceKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn items(pairs: &[(u64, u64)]) -> Vec<Item> {
        pairs.iter().map(|&(w, p)| Item::new(p, w)).collect()
    }

    #[test]
    fn dp_small_examples() {
        let a = items(&[(2, 3), (3, 4)]);
        assert_eq!(dp_optimal_profits(&a, 4)[4], 4);
        let b = items(&[(2, 3), (3, 4), (4, 5)]);
        assert_eq!(dp_optimal_profits(&b, 5)[5], 7);
        assert_eq!(dp_optimal_profits(&b, 0), vec![0]);
        assert_eq!(
            brute_force_optimum(&b, 5).unwrap(),
            (7, vec![true, true, false])
        );
    }

    #[test]
    fn brute_force_single_item() {
        let a = items(&[(10, 5)]);
        assert_eq!(brute_force_optimum(&a, 10).unwrap(), (5, vec![true]));
        assert_eq!(brute_force_optimum(&a, 9).unwrap(), (0, vec![false]));
    }

    #[test]
    fn brute_force_tie_prefers_lexicographically_smallest() {
        let a = items(&[(5, 4), (5, 4)]);
        assert_eq!(brute_force_optimum(&a, 5).unwrap(), (4, vec![false, true]));
    }

    #[test]
    fn brute_force_rejects_large_n() {
        let a = vec![Item::new(1, 1); 21];
        assert!(matches!(
            brute_force_optimum(&a, 10),
            Err(Error::TooManyItems { n: 21, max: 20 })
        ));
        let p = ChanceParams::new(0.01_f64, 25, BoundKind::Chebyshev).unwrap();
        assert!(brute_force_chance_optimum(&a, 10, &p).is_err());
    }

    #[test]
    fn chebyshev_chance_threshold() {
        let a = items(&[(100, 5)]);
        let p = ChanceParams::new(0.01_f64, 25, BoundKind::Chebyshev).unwrap();
        assert_eq!(
            brute_force_chance_optimum(&a, 244, &p).unwrap(),
            (5, vec![true])
        );
        assert_eq!(
            brute_force_chance_optimum(&a, 243, &p).unwrap(),
            (0, vec![false])
        );
    }

    #[test]
    fn dp_matches_brute_force_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let n = rng.random_range(1..=12);
            let inst = Instance::generate(InstanceKind::Uncorrelated, n, 25, 100, trial).unwrap();
            let total = inst.total_expected_weight();
            let table = dp_optimal_profits(inst.items(), total);
            assert!(table.windows(2).all(|w| w[0] <= w[1]));
            let c = rng.random_range(0..=total);
            assert_eq!(
                table[c as usize],
                brute_force_optimum(inst.items(), c).unwrap().0
            );
        }
    }

    #[test]
    fn chance_optimum_tightens_with_alpha_and_sits_below_dp() {
        for seed in 0..30 {
            let inst = Instance::generate(InstanceKind::Uncorrelated, 10, 50, 100, seed).unwrap();
            let c = inst.total_expected_weight() / 2;
            let det = brute_force_optimum(inst.items(), c).unwrap().0;
            for bound in BoundKind::ALL {
                let mut prev = u64::MAX;
                for alpha in [0.4, 0.1, 0.01, 0.001, 0.0001] {
                    let p = ChanceParams::new(alpha, 50, bound).unwrap();
                    let (profit, _) = brute_force_chance_optimum(inst.items(), c, &p).unwrap();
                    assert!(profit <= prev);
                    assert!(profit <= det);
                    prev = profit;
                }
            }
        }
    }

    #[test]
    fn loose_alpha_relaxes_toward_strict_mean_feasibility() {
        let inst = Instance::generate(InstanceKind::Uncorrelated, 10, 25, 100, 3).unwrap();
        let c = inst.total_expected_weight() / 2;
        let p = ChanceParams::new(1.0 - 1e-12, 25, BoundKind::Chebyshev).unwrap();
        let (relaxed, _) = brute_force_chance_optimum(inst.items(), c, &p).unwrap();
        let (strict_mean, _) = brute_force_optimum(inst.items(), c - 1).unwrap();
        assert!(relaxed >= strict_mean);
    }
}
