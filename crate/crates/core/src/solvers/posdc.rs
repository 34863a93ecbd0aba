//! POSDC: Pareto optimisation on (profit, `C*`) with two archives kept
//! around the current capacity.
//!
//! `S-` stores solutions with `C - eta <= C*(x) <= C`, `S+` those with
//! `C < C*(x) <= C + eta`. Inside each archive no member weakly dominates
//! another.

use rand::Rng;

use super::ea::OnePlusOne;
use super::mutate;
use crate::chance::ChanceParams;
use crate::error::{Error, Result};
use crate::model::{Instance, Solution};
use crate::Scalar;

/// Safety cap on the initial repair loop.
pub const REPAIR_STEP_LIMIT: usize = 1_000_000;

/// Weak dominance on `(profit, capacity bound)`: more profit, smaller bound.
pub fn posdc_dominates<F: PartialOrd>(a: (u64, F), b: (u64, F)) -> bool {
    a.0 >= b.0 && a.1 <= b.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveMember<F> {
    pub solution: Solution,
    pub cap_bound: F,
}

impl<F: Scalar> ArchiveMember<F> {
    pub fn evaluate(solution: Solution, params: &ChanceParams<F>) -> Self {
        let cap_bound = params.capacity_bound(solution.expected_weight(), solution.count());
        ArchiveMember {
            solution,
            cap_bound,
        }
    }

    pub fn objectives(&self) -> (u64, F) {
        (self.solution.profit(), self.cap_bound)
    }

    pub fn profit(&self) -> u64 {
        self.solution.profit()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Debug, Clone)]
pub struct PosdcState<F> {
    s_minus: Vec<ArchiveMember<F>>,
    s_plus: Vec<ArchiveMember<F>>,
    eta: u64,
    capacity: u64,
    evaluations: u64,
}

impl<F: Scalar> PosdcState<F> {
    /// Archive holding only `seed`, placed by comparing its bound with the
    /// capacity (no window check).
    pub fn seeded(seed: ArchiveMember<F>, capacity: u64, eta: u64) -> Self {
        let mut st = PosdcState {
            s_minus: Vec::new(),
            s_plus: Vec::new(),
            eta,
            capacity,
            evaluations: 0,
        };
        if seed.cap_bound <= F::of_u64(capacity) {
            st.s_minus.push(seed);
        } else {
            st.s_plus.push(seed);
        }
        st
    }

    /// Builds a state from arbitrary members: out-of-window members are
    /// dropped and dominated ones filtered.
    pub fn from_members(
        members: impl IntoIterator<Item = ArchiveMember<F>>,
        capacity: u64,
        eta: u64,
    ) -> Self {
        let mut st = PosdcState {
            s_minus: Vec::new(),
            s_plus: Vec::new(),
            eta,
            capacity,
            evaluations: 0,
        };
        for m in members {
            st.offer(m);
        }
        st
    }

    pub fn s_minus(&self) -> &[ArchiveMember<F>] {
        &self.s_minus
    }

    pub fn s_plus(&self) -> &[ArchiveMember<F>] {
        &self.s_plus
    }

    pub fn len(&self) -> usize {
        self.s_minus.len() + self.s_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eta(&self) -> u64 {
        self.eta
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn in_window(&self, cap_bound: F) -> bool {
        window_contains(self.capacity, self.eta, cap_bound)
    }

    pub fn classify(&self, cap_bound: F) -> Option<Side> {
        classify(self.capacity, self.eta, cap_bound)
    }

    /// Inserts `y` into its archive unless it is outside the window or weakly
    /// dominated there; members `y` weakly dominates are removed.
    pub fn offer(&mut self, y: ArchiveMember<F>) -> bool {
        let archive = match self.classify(y.cap_bound) {
            Some(Side::Minus) => &mut self.s_minus,
            Some(Side::Plus) => &mut self.s_plus,
            None => return false,
        };
        let oy = y.objectives();
        if archive.iter().any(|z| posdc_dominates(z.objectives(), oy)) {
            return false;
        }
        archive.retain(|z| !posdc_dominates(oy, z.objectives()));
        archive.push(y);
        true
    }

    /// One iteration: uniform parent from `S- ∪ S+`, bit mutation, one
    /// evaluation, archive update.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        instance: &Instance,
        params: &ChanceParams<F>,
        rng: &mut R,
    ) -> Result<bool> {
        if self.is_empty() {
            return Err(Error::EmptyArchive);
        }
        let pick = rng.random_range(0..self.len());
        let parent = if pick < self.s_minus.len() {
            &self.s_minus[pick].solution
        } else {
            &self.s_plus[pick - self.s_minus.len()].solution
        };
        let y = mutate(parent, instance.items(), rng);
        let member = ArchiveMember::evaluate(y, params);
        self.evaluations += 1;
        Ok(self.offer(member))
    }

    /// Re-partitions the archives for a new capacity. If nothing survives,
    /// the previous best solution is kept as the sole member.
    pub fn on_change(&mut self, new_capacity: u64) {
        if new_capacity == self.capacity {
            return;
        }
        let previous_best = self.best().ok().cloned();
        let members: Vec<_> = self
            .s_minus
            .drain(..)
            .chain(self.s_plus.drain(..))
            .collect();
        self.capacity = new_capacity;
        for m in members {
            self.offer(m);
        }
        if self.is_empty() {
            if let Some(best) = previous_best {
                if best.cap_bound <= F::of_u64(new_capacity) {
                    self.s_minus.push(best);
                } else {
                    self.s_plus.push(best);
                }
            }
        }
    }

    /// Highest-profit member of `S-` (ties: smaller bound); if `S-` is empty,
    /// smallest-bound member of `S+` (ties: higher profit). Remaining ties go
    /// to the lexicographically smaller bit-vector.
    pub fn best(&self) -> Result<&ArchiveMember<F>> {
        let pick = if !self.s_minus.is_empty() {
            self.s_minus.iter().min_by(|a, b| {
                b.profit()
                    .cmp(&a.profit())
                    .then(
                        a.cap_bound
                            .partial_cmp(&b.cap_bound)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
                    .then(a.solution.bits().cmp(b.solution.bits()))
            })
        } else {
            self.s_plus.iter().min_by(|a, b| {
                a.cap_bound
                    .partial_cmp(&b.cap_bound)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.profit().cmp(&a.profit()))
                    .then(a.solution.bits().cmp(b.solution.bits()))
            })
        };
        pick.ok_or(Error::EmptyArchive)
    }

    /// Checks the archive invariants, describing the first violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (name, archive, side) in [
            ("S-", &self.s_minus, Side::Minus),
            ("S+", &self.s_plus, Side::Plus),
        ] {
            for (i, a) in archive.iter().enumerate() {
                if self.classify(a.cap_bound) != Some(side) && self.len() > 1 {
                    return Err(format!(
                        "{name} member {i} has C* = {} outside its interval for C = {}",
                        a.cap_bound, self.capacity
                    ));
                }
                for (j, b) in archive.iter().enumerate() {
                    if i != j && posdc_dominates(a.objectives(), b.objectives()) {
                        return Err(format!("{name} member {i} weakly dominates member {j}"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn window_contains<F: Scalar>(capacity: u64, eta: u64, cap_bound: F) -> bool {
    classify(capacity, eta, cap_bound).is_some()
}

fn classify<F: Scalar>(capacity: u64, eta: u64, cap_bound: F) -> Option<Side> {
    let c = F::of_u64(capacity);
    let e = F::of_u64(eta);
    if cap_bound >= c - e && cap_bound <= c {
        Some(Side::Minus)
    } else if cap_bound > c && cap_bound <= c + e {
        Some(Side::Plus)
    } else {
        None
    }
}

/// Initial repair phase: a (1+1)-EA under lexicographic fitness at the
/// current capacity, run until its incumbent's `C*` enters the window.
#[derive(Debug, Clone)]
pub(crate) struct Repair<F> {
    ea: OnePlusOne<F>,
    eta: u64,
    steps: usize,
}

impl<F: Scalar> Repair<F> {
    pub(crate) fn start(x: Solution, capacity: u64, eta: u64, params: &ChanceParams<F>) -> Self {
        Repair {
            ea: OnePlusOne::from_solution(x, capacity, params),
            eta,
            steps: 0,
        }
    }

    /// The archive, if the current incumbent already lies in the window.
    pub(crate) fn try_seed(&self, params: &ChanceParams<F>) -> Option<PosdcState<F>> {
        let m = ArchiveMember::evaluate(self.ea.incumbent().clone(), params);
        window_contains(self.ea.capacity(), self.eta, m.cap_bound)
            .then(|| PosdcState::seeded(m, self.ea.capacity(), self.eta))
    }

    pub(crate) fn step<R: Rng + ?Sized>(
        &mut self,
        instance: &Instance,
        params: &ChanceParams<F>,
        rng: &mut R,
    ) -> Result<Option<PosdcState<F>>> {
        if self.steps >= REPAIR_STEP_LIMIT {
            return Err(Error::RepairLimit { steps: self.steps });
        }
        self.ea.step(instance, params, rng);
        self.steps += 1;
        Ok(self.try_seed(params))
    }

    pub(crate) fn set_capacity(&mut self, capacity: u64, params: &ChanceParams<F>) {
        self.ea.set_capacity(capacity, params);
    }

    pub(crate) fn incumbent(&self) -> &Solution {
        self.ea.incumbent()
    }

    pub(crate) fn steps(&self) -> usize {
        self.steps
    }
}

/// Uniform random start, repaired by (1+1)-EA steps if needed. Returns the
/// seeded state and the number of repair steps spent.
pub fn posdc_init<F: Scalar, R: Rng + ?Sized>(
    instance: &Instance,
    capacity: u64,
    eta: u64,
    params: &ChanceParams<F>,
    rng: &mut R,
) -> Result<(PosdcState<F>, usize)> {
    if eta == 0 {
        return Err(Error::invalid("eta must be >= 1"));
    }
    let x = Solution::random(instance.items(), rng);
    let mut repair = Repair::start(x, capacity, eta, params);
    if let Some(st) = repair.try_seed(params) {
        return Ok((st, 0));
    }
    loop {
        if let Some(mut st) = repair.step(instance, params, rng)? {
            st.evaluations = repair.steps() as u64;
            return Ok((st, repair.steps()));
        }
    }
}
