//! NSGA-II on (maximise profit, minimise `C*`), extended to remember the best
//! solution for the current capacity.

use std::cmp::Ordering;

use rand::Rng;

use super::ea::{lex_fitness, lex_strictly_better, LexFitness};
use super::mutate;
use crate::chance::ChanceParams;
use crate::error::{Error, Result};
use crate::model::{Instance, Solution};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nsga2Config {
    pub population: usize,
    pub crossover_rate: f64,
    /// Per-gene probability of taking the second parent's bit.
    pub gene_mix: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            population: 20,
            crossover_rate: 0.9,
            gene_mix: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<F> {
    pub solution: Solution,
    pub cap_bound: F,
    pub rank: usize,
    pub crowding: F,
}

impl<F: Scalar> Individual<F> {
    fn evaluate(solution: Solution, params: &ChanceParams<F>) -> Self {
        let cap_bound = params.capacity_bound(solution.expected_weight(), solution.count());
        Individual {
            solution,
            cap_bound,
            rank: 0,
            crowding: F::zero(),
        }
    }

    pub fn objectives(&self) -> (u64, F) {
        (self.solution.profit(), self.cap_bound)
    }
}

/// Strict Pareto dominance on `(profit, C*)`.
pub fn pareto_dominates<F: PartialOrd>(a: (u64, F), b: (u64, F)) -> bool {
    a.0 >= b.0 && a.1 <= b.1 && (a.0 > b.0 || a.1 < b.1)
}

/// Fronts of indices into `objs`, best front first. Indices within a front
/// are in increasing order.
pub fn fast_non_dominated_sort<F: PartialOrd + Copy>(objs: &[(u64, F)]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if pareto_dominates(objs[p], objs[q]) {
                dominated_by[p].push(q);
            } else if pareto_dominates(objs[q], objs[p]) {
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (parallel to `front`).
/// Boundary points of every objective get infinity.
pub fn crowding_distance<F: Scalar>(objs: &[(u64, F)], front: &[usize]) -> Vec<F> {
    let m = front.len();
    let mut dist = vec![F::zero(); m];
    if m <= 2 {
        return vec![F::infinity(); m];
    }
    let values: [Vec<F>; 2] = [
        front.iter().map(|&i| F::of_u64(objs[i].0)).collect(),
        front.iter().map(|&i| objs[i].1).collect(),
    ];
    for v in &values {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(Ordering::Equal));
        let (lo, hi) = (v[order[0]], v[order[m - 1]]);
        dist[order[0]] = F::infinity();
        dist[order[m - 1]] = F::infinity();
        let span = hi - lo;
        if span <= F::zero() {
            continue;
        }
        for w in 1..m - 1 {
            let gap = (v[order[w + 1]] - v[order[w - 1]]) / span;
            dist[order[w]] = dist[order[w]] + gap;
        }
    }
    dist
}

#[derive(Debug, Clone)]
pub struct Nsga2State<F> {
    population: Vec<Individual<F>>,
    best: Solution,
    best_fitness: LexFitness<F>,
    capacity: u64,
    config: Nsga2Config,
    evaluations: u64,
}

impl<F: Scalar> Nsga2State<F> {
    /// Uniformly random initial population.
    pub fn new<R: Rng + ?Sized>(
        instance: &Instance,
        capacity: u64,
        params: &ChanceParams<F>,
        config: Nsga2Config,
        rng: &mut R,
    ) -> Result<Self> {
        if config.population < 2 {
            return Err(Error::invalid("NSGA-II population must be >= 2"));
        }
        let members: Vec<Solution> = (0..config.population)
            .map(|_| Solution::random(instance.items(), rng))
            .collect();
        Ok(Self::from_solutions(members, capacity, params, config))
    }

    pub fn from_solutions(
        members: Vec<Solution>,
        capacity: u64,
        params: &ChanceParams<F>,
        config: Nsga2Config,
    ) -> Self {
        let mut population: Vec<Individual<F>> = members
            .into_iter()
            .map(|s| Individual::evaluate(s, params))
            .collect();
        assign_rank_and_crowding(&mut population);
        let first = population[0].solution.clone();
        let mut st = Nsga2State {
            best_fitness: lex_fitness(&first, capacity, params),
            best: first,
            population,
            capacity,
            config,
            evaluations: 0,
        };
        st.refresh_best(params);
        st
    }

    pub fn population(&self) -> &[Individual<F>] {
        &self.population
    }

    pub fn best(&self) -> &Solution {
        &self.best
    }

    pub fn best_fitness(&self) -> LexFitness<F> {
        self.best_fitness
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn config(&self) -> &Nsga2Config {
        &self.config
    }

    fn consider(&mut self, sol: &Solution, params: &ChanceParams<F>) {
        let f = lex_fitness(sol, self.capacity, params);
        if lex_strictly_better(&f, &self.best_fitness) {
            self.best = sol.clone();
            self.best_fitness = f;
        }
    }

    fn refresh_best(&mut self, params: &ChanceParams<F>) {
        let candidates: Vec<Solution> =
            self.population.iter().map(|i| i.solution.clone()).collect();
        for s in &candidates {
            self.consider(s, params);
        }
    }

    /// Re-targets the tracked best at a new capacity: the old best is
    /// re-scored and compared against the current population.
    pub fn on_change(&mut self, capacity: u64, params: &ChanceParams<F>) {
        self.capacity = capacity;
        self.best_fitness = lex_fitness(&self.best, capacity, params);
        self.refresh_best(params);
    }

    fn tournament<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.population.len();
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let (ia, ib) = (&self.population[a], &self.population[b]);
        if ib.rank < ia.rank || (ib.rank == ia.rank && ib.crowding > ia.crowding) {
            b
        } else {
            a
        }
    }

    /// One generation: `population` offspring by tournament selection,
    /// uniform crossover and bit mutation, then elitist survival.
    pub fn generation<R: Rng + ?Sized>(
        &mut self,
        instance: &Instance,
        params: &ChanceParams<F>,
        rng: &mut R,
    ) {
        let items = instance.items();
        let size = self.config.population;
        let mut offspring = Vec::with_capacity(size);
        for _ in 0..size {
            let p1 = &self.population[self.tournament(rng)].solution;
            let p2 = &self.population[self.tournament(rng)].solution;
            let child = if rng.random::<f64>() < self.config.crossover_rate {
                let bits = p1
                    .bits()
                    .iter()
                    .zip(p2.bits())
                    .map(|(&a, &b)| {
                        if rng.random::<f64>() < self.config.gene_mix {
                            b
                        } else {
                            a
                        }
                    })
                    .collect();
                Solution::from_bits(items, bits).expect("parents share a length")
            } else {
                p1.clone()
            };
            let child = mutate(&child, items, rng);
            offspring.push(Individual::evaluate(child, params));
        }
        self.evaluations += size as u64;
        for child in &offspring {
            let sol = child.solution.clone();
            self.consider(&sol, params);
        }

        let mut merged = std::mem::take(&mut self.population);
        merged.extend(offspring);
        self.population = survive(merged, size);
    }
}

fn assign_rank_and_crowding<F: Scalar>(pop: &mut [Individual<F>]) {
    let objs: Vec<_> = pop.iter().map(|i| i.objectives()).collect();
    for (rank, front) in fast_non_dominated_sort(&objs).iter().enumerate() {
        let cd = crowding_distance(&objs, front);
        for (&i, d) in front.iter().zip(cd) {
            pop[i].rank = rank;
            pop[i].crowding = d;
        }
    }
}

/// Elitist reduction to `size` by front, then by crowding distance.
fn survive<F: Scalar>(merged: Vec<Individual<F>>, size: usize) -> Vec<Individual<F>> {
    let objs: Vec<_> = merged.iter().map(|i| i.objectives()).collect();
    let mut slots: Vec<Option<Individual<F>>> = merged.into_iter().map(Some).collect();
    let mut next = Vec::with_capacity(size);
    for (rank, front) in fast_non_dominated_sort(&objs).iter().enumerate() {
        if next.len() == size {
            break;
        }
        let cd = crowding_distance(&objs, front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if next.len() + front.len() > size {
            order.sort_by(|&a, &b| cd[b].partial_cmp(&cd[a]).unwrap_or(Ordering::Equal));
        }
        for w in order.into_iter().take(size - next.len()) {
            let mut ind = slots[front[w]].take().expect("each index visited once");
            ind.rank = rank;
            ind.crowding = cd[w];
            next.push(ind);
        }
    }
    next
}
