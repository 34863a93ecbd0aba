use std::cmp::Ordering;

use rand::Rng;

use super::mutate;
use crate::chance::ChanceParams;
use crate::model::{Instance, Solution};
use crate::Scalar;

/// Lexicographic fitness. Infeasibility is minimised first, as the expected
/// weight above the capacity and then the violation probability above
/// `alpha`; profit is maximised last.
///
/// The violation probability is pinned to 1 once `E(W) >= C`, so without the
/// first component every such solution would tie on feasibility and the
/// search would drift towards heavier, more profitable ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexFitness<F> {
    pub excess: u64,
    pub violation: F,
    pub profit: u64,
}

impl<F: Scalar> LexFitness<F> {
    pub fn is_feasible(&self) -> bool {
        self.excess == 0 && self.violation == F::zero()
    }
}

pub fn lex_fitness<F: Scalar>(
    sol: &Solution,
    capacity: u64,
    params: &ChanceParams<F>,
) -> LexFitness<F> {
    let prob = params.violation_prob(sol.expected_weight(), sol.count(), F::of_u64(capacity));
    LexFitness {
        excess: sol.expected_weight().saturating_sub(capacity),
        violation: (prob - params.alpha()).max(F::zero()),
        profit: sol.profit(),
    }
}

fn infeasibility_cmp<F: Scalar>(a: &LexFitness<F>, b: &LexFitness<F>) -> Ordering {
    a.excess.cmp(&b.excess).then(
        a.violation
            .partial_cmp(&b.violation)
            .unwrap_or(Ordering::Equal),
    )
}

pub fn lex_better_or_equal<F: Scalar>(a: &LexFitness<F>, b: &LexFitness<F>) -> bool {
    match infeasibility_cmp(a, b) {
        Ordering::Less => true,
        Ordering::Equal => a.profit >= b.profit,
        Ordering::Greater => false,
    }
}

pub(crate) fn lex_strictly_better<F: Scalar>(a: &LexFitness<F>, b: &LexFitness<F>) -> bool {
    match infeasibility_cmp(a, b) {
        Ordering::Less => true,
        Ordering::Equal => a.profit > b.profit,
        Ordering::Greater => false,
    }
}

/// (1+1)-EA with lexicographic acceptance.
#[derive(Debug, Clone)]
pub struct OnePlusOne<F> {
    incumbent: Solution,
    fitness: LexFitness<F>,
    capacity: u64,
    evaluations: u64,
}

impl<F: Scalar> OnePlusOne<F> {
    /// Starts from a uniformly random bit-vector.
    pub fn new<R: Rng + ?Sized>(
        instance: &Instance,
        capacity: u64,
        params: &ChanceParams<F>,
        rng: &mut R,
    ) -> Self {
        let x = Solution::random(instance.items(), rng);
        Self::from_solution(x, capacity, params)
    }

    pub fn from_solution(x: Solution, capacity: u64, params: &ChanceParams<F>) -> Self {
        let fitness = lex_fitness(&x, capacity, params);
        OnePlusOne {
            incumbent: x,
            fitness,
            capacity,
            evaluations: 0,
        }
    }

    pub fn incumbent(&self) -> &Solution {
        &self.incumbent
    }

    pub fn into_incumbent(self) -> Solution {
        self.incumbent
    }

    pub fn fitness(&self) -> LexFitness<F> {
        self.fitness
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Re-scores the incumbent against a new capacity.
    pub fn set_capacity(&mut self, capacity: u64, params: &ChanceParams<F>) {
        self.capacity = capacity;
        self.fitness = lex_fitness(&self.incumbent, capacity, params);
    }

    /// One mutation and one evaluation. Returns whether the offspring was
    /// accepted.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        instance: &Instance,
        params: &ChanceParams<F>,
        rng: &mut R,
    ) -> bool {
        let y = mutate(&self.incumbent, instance.items(), rng);
        self.offer(y, params)
    }

    pub(crate) fn offer(&mut self, y: Solution, params: &ChanceParams<F>) -> bool {
        let fy = lex_fitness(&y, self.capacity, params);
        self.evaluations += 1;
        if lex_better_or_equal(&fy, &self.fitness) {
            self.incumbent = y;
            self.fitness = fy;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::BoundKind;
    use crate::model::{InstanceKind, Item};
    use crate::oracle::brute_force_chance_optimum;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lf(v: f64, p: u64) -> LexFitness<f64> {
        LexFitness {
            excess: 0,
            violation: v,
            profit: p,
        }
    }

    #[test]
    fn lexicographic_order_examples() {
        assert!(lex_better_or_equal(&lf(0.0, 50), &lf(0.0, 40)));
        assert!(lex_better_or_equal(&lf(0.1, 100), &lf(0.2, 10)));
        assert!(lex_better_or_equal(&lf(0.0, 10), &lf(0.0, 10)));
        assert!(!lex_better_or_equal(&lf(0.2, 100), &lf(0.1, 10)));
        assert!(!lex_better_or_equal(&lf(0.0, 9), &lf(0.0, 10)));
    }

    #[test]
    fn expected_weight_excess_ranks_first() {
        let a = LexFitness {
            excess: 10,
            violation: 0.99,
            profit: 5,
        };
        let b = LexFitness {
            excess: 30,
            violation: 0.99,
            profit: 500,
        };
        assert!(lex_better_or_equal(&a, &b));
        assert!(!lex_better_or_equal(&b, &a));
        assert!(lex_strictly_better(&lf(0.5, 0), &a));
    }

    #[test]
    fn overloaded_start_reaches_feasibility() {
        // every item in: E(W) far above C, where the violation term is flat
        let inst = Instance::generate(InstanceKind::Uncorrelated, 100, 25, 100, 6).unwrap();
        let params = ChanceParams::new(0.0001, 25, BoundKind::Chebyshev).unwrap();
        let x = Solution::from_bits(inst.items(), vec![true; 100]).unwrap();
        let mut ea = OnePlusOne::from_solution(x, inst.total_expected_weight() / 2, &params);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20_000 {
            ea.step(&inst, &params, &mut rng);
        }
        assert!(ea.fitness().is_feasible());
    }

    #[test]
    fn identical_offspring_is_accepted() {
        let items = vec![Item::new(5, 150), Item::new(6, 160)];
        let inst = Instance::new(items, 25, InstanceKind::Uncorrelated, 100, 0).unwrap();
        let params = ChanceParams::new(0.01, 25, BoundKind::Chebyshev).unwrap();
        let x = Solution::from_bits(inst.items(), vec![true, false]).unwrap();
        let mut ea = OnePlusOne::from_solution(x.clone(), 1000, &params);
        assert!(ea.offer(x, &params));
        assert_eq!(ea.evaluations(), 1);
    }

    #[test]
    fn feasible_offspring_replaces_infeasible_parent() {
        let items = vec![Item::new(500, 900), Item::new(1, 150)];
        let inst = Instance::new(items, 25, InstanceKind::Uncorrelated, 100, 0).unwrap();
        let params = ChanceParams::new(0.01, 25, BoundKind::Chernoff).unwrap();
        let parent = Solution::from_bits(inst.items(), vec![true, true]).unwrap();
        let mut ea = OnePlusOne::from_solution(parent, 600, &params);
        assert!(ea.fitness().violation > 0.0);
        let child = Solution::from_bits(inst.items(), vec![false, true]).unwrap();
        assert!(ea.offer(child, &params));
        assert!(ea.fitness().is_feasible());
        assert_eq!(ea.incumbent().profit(), 1);
    }

    #[test]
    fn fitness_never_worsens_on_static_capacity() {
        let inst = Instance::generate(InstanceKind::Uncorrelated, 30, 50, 100, 2).unwrap();
        let params = ChanceParams::new(0.001, 50, BoundKind::Chernoff).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ea = OnePlusOne::new(&inst, inst.total_expected_weight() / 3, &params, &mut rng);
        for _ in 0..3000 {
            let before = ea.fitness();
            ea.step(&inst, &params, &mut rng);
            assert!(lex_better_or_equal(&ea.fitness(), &before));
        }
        assert_eq!(ea.evaluations(), 3000);
    }

    #[test]
    fn reaches_small_chance_optimum() {
        let mut hits = 0;
        for seed in 0..20u64 {
            let inst = Instance::generate(InstanceKind::Uncorrelated, 12, 25, 100, seed).unwrap();
            let params = ChanceParams::new(0.01, 25, BoundKind::Chebyshev).unwrap();
            let c = inst.total_expected_weight() / 2;
            let (opt, _) = brute_force_chance_optimum(inst.items(), c, &params).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let mut ea = OnePlusOne::new(&inst, c, &params, &mut rng);
            for _ in 0..10_000 {
                ea.step(&inst, &params, &mut rng);
            }
            if ea.fitness().is_feasible() && ea.incumbent().profit() == opt {
                hits += 1;
            }
        }
        assert!(hits >= 18, "{hits}/20");
    }
}
