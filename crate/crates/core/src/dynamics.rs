//! Dynamic capacity schedules.
//!
//! The capacity starts at `c0`. At iteration `warmup` and every `tau`
//! iterations after that it moves by an integer drawn uniformly from
//! `[-r, r]` and is clamped into `[c_min, c_max]`. A change at index `i`
//! is in force from iteration `i` onwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleSpec {
    pub c0: u64,
    pub tau: usize,
    pub r: u64,
    pub warmup: usize,
    pub total_iters: usize,
    pub c_min: u64,
    pub c_max: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacitySchedule {
    spec: ScheduleSpec,
    changes: Vec<(usize, u64)>,
    clamp_events: usize,
}

impl CapacitySchedule {
    pub fn build(spec: ScheduleSpec, seed: u64) -> Result<Self> {
        if spec.tau == 0 {
            return Err(Error::invalid("tau must be >= 1"));
        }
        if spec.r == 0 {
            return Err(Error::invalid("r must be >= 1"));
        }
        if spec.c_min > spec.c_max {
            return Err(Error::invalid("c_min exceeds c_max"));
        }
        if spec.c0 < spec.c_min || spec.c0 > spec.c_max {
            return Err(Error::invalid(format!(
                "c0 = {} lies outside the clamp range [{}, {}]",
                spec.c0, spec.c_min, spec.c_max
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = spec.r as i64;
        let mut current = spec.c0 as i64;
        let mut changes = Vec::new();
        let mut clamp_events = 0;
        let mut at = spec.warmup;
        while at < spec.total_iters {
            let raw = current + rng.random_range(-r..=r);
            let clamped = raw.clamp(spec.c_min as i64, spec.c_max as i64);
            if clamped != raw {
                clamp_events += 1;
            }
            current = clamped;
            changes.push((at, current as u64));
            at += spec.tau;
        }
        Ok(CapacitySchedule {
            spec,
            changes,
            clamp_events,
        })
    }

    pub fn spec(&self) -> &ScheduleSpec {
        &self.spec
    }

    pub fn c0(&self) -> u64 {
        self.spec.c0
    }

    pub fn total_iters(&self) -> usize {
        self.spec.total_iters
    }

    pub fn changes(&self) -> &[(usize, u64)] {
        &self.changes
    }

    pub fn change_count(&self) -> usize {
        self.changes.len()
    }

    /// How many drawn changes had to be clamped.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    pub fn capacity_at(&self, iter: usize) -> Result<u64> {
        if iter >= self.spec.total_iters {
            return Err(Error::IndexOutOfRange {
                index: iter,
                len: self.spec.total_iters,
            });
        }
        let idx = self.changes.partition_point(|(at, _)| *at <= iter);
        Ok(if idx == 0 {
            self.spec.c0
        } else {
            self.changes[idx - 1].1
        })
    }

    /// Largest capacity ever in force.
    pub fn max_capacity(&self) -> u64 {
        self.changes
            .iter()
            .map(|(_, c)| *c)
            .chain(std::iter::once(self.spec.c0))
            .max()
            .unwrap_or(self.spec.c0)
    }

    /// Replays the schedule for strictly increasing iteration queries.
    pub fn cursor(&self) -> ScheduleCursor<'_> {
        ScheduleCursor {
            schedule: self,
            next: 0,
            current: self.spec.c0,
        }
    }

    /// `iteration,capacity` rows: iteration 0 followed by each change point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,capacity\n");
        if self.changes.first().is_none_or(|(at, _)| *at > 0) {
            out.push_str(&format!("0,{}\n", self.spec.c0));
        }
        for (at, c) in &self.changes {
            out.push_str(&format!("{at},{c}\n"));
        }
        out
    }
}

pub struct ScheduleCursor<'a> {
    schedule: &'a CapacitySchedule,
    next: usize,
    current: u64,
}

impl ScheduleCursor<'_> {
    /// Capacity at `iter` and whether a change takes effect exactly there.
    /// Queries must be non-decreasing.
    pub fn at(&mut self, iter: usize) -> (u64, bool) {
        let mut changed = false;
        while let Some((at, c)) = self.schedule.changes.get(self.next) {
            if *at > iter {
                break;
            }
            changed = *at == iter;
            self.current = *c;
            self.next += 1;
        }
        (self.current, changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(c0: u64, tau: usize, r: u64, warmup: usize, total: usize) -> ScheduleSpec {
        ScheduleSpec {
            c0,
            tau,
            r,
            warmup,
            total_iters: total,
            c_min: 1,
            c_max: 1_000_000,
        }
    }

    #[test]
    fn constant_before_warmup() {
        let s = CapacitySchedule::build(spec(5000, 100, 500, 10_000, 1_000_000), 1).unwrap();
        for i in (0..10_000).step_by(37) {
            assert_eq!(s.capacity_at(i).unwrap(), 5000);
        }
        assert_eq!(s.capacity_at(9_999).unwrap(), 5000);
        assert_eq!(s.capacity_at(0).unwrap(), 5000);
        assert_eq!(s.changes()[0].0, 10_000);
    }

    #[test]
    fn change_index_boundary() {
        let s = CapacitySchedule::build(spec(5000, 10, 500, 100, 200), 4).unwrap();
        for (at, c) in s.changes() {
            assert_eq!(s.capacity_at(*at).unwrap(), *c);
        }
    }

    #[test]
    fn unit_magnitude_steps() {
        let s = CapacitySchedule::build(spec(500, 3, 1, 0, 3000), 2).unwrap();
        let mut prev = s.capacity_at(0).unwrap() as i64;
        for i in 1..3000 {
            let c = s.capacity_at(i).unwrap() as i64;
            assert!((c - prev).abs() <= 1);
            prev = c;
        }
    }

    #[test]
    fn seeded_and_validated() {
        let a = CapacitySchedule::build(spec(5000, 100, 500, 10, 10_000), 3).unwrap();
        let b = CapacitySchedule::build(spec(5000, 100, 500, 10, 10_000), 3).unwrap();
        assert_eq!(a.changes(), b.changes());
        let mut bad = spec(5000, 100, 500, 10, 10_000);
        bad.c_max = 4000;
        assert!(CapacitySchedule::build(bad, 3).is_err());
        assert!(CapacitySchedule::build(spec(5000, 0, 500, 10, 100), 3).is_err());
        assert!(CapacitySchedule::build(spec(5000, 1, 0, 10, 100), 3).is_err());
        assert!(a.capacity_at(10_000).is_err());
    }

    #[test]
    fn no_changes_when_tau_exceeds_run() {
        let s = CapacitySchedule::build(spec(5000, 100, 500, 1000, 1000), 3).unwrap();
        assert_eq!(s.change_count(), 0);
        assert_eq!(s.to_csv(), "iteration,capacity\n0,5000\n");
    }

    #[test]
    fn clamping_is_reported() {
        let s = CapacitySchedule::build(
            ScheduleSpec {
                c0: 5,
                tau: 1,
                r: 100,
                warmup: 0,
                total_iters: 500,
                c_min: 1,
                c_max: 50,
            },
            8,
        )
        .unwrap();
        assert!(s.clamp_events() > 0);
        assert!(s.changes().iter().all(|(_, c)| (1..=50).contains(c)));
    }

    #[test]
    fn thousand_schedules_stay_in_bounds() {
        for seed in 0..1000u64 {
            let sp = ScheduleSpec {
                c0: 2000,
                tau: 7,
                r: 2000,
                warmup: 3,
                total_iters: 300,
                c_min: 1,
                c_max: 4000,
            };
            let s = CapacitySchedule::build(sp, seed).unwrap();
            assert!(s.changes().iter().all(|(_, c)| (1..=4000).contains(c)));
        }
    }

    proptest! {
        #[test]
        fn change_count_and_indices(tau in 1usize..50, warmup in 0usize..100, extra in 1usize..500, seed in any::<u64>()) {
            let total = warmup + extra;
            let s = CapacitySchedule::build(spec(10_000, tau, 300, warmup, total), seed).unwrap();
            prop_assert_eq!(s.change_count(), (total - warmup - 1) / tau + 1);
            for (j, (at, _)) in s.changes().iter().enumerate() {
                prop_assert_eq!(*at, warmup + j * tau);
            }
        }

        #[test]
        fn lookup_matches_linear_replay(seed in any::<u64>(), queries in proptest::collection::vec(0usize..2000, 1..50)) {
            let s = CapacitySchedule::build(spec(10_000, 13, 400, 50, 2000), seed).unwrap();
            for q in queries {
                let mut expected = s.c0();
                for (at, c) in s.changes() {
                    if *at <= q { expected = *c; }
                }
                prop_assert_eq!(s.capacity_at(q).unwrap(), expected);
            }
            let mut cur = s.cursor();
            for i in 0..2000 {
                let (c, changed) = cur.at(i);
                prop_assert_eq!(c, s.capacity_at(i).unwrap());
                prop_assert_eq!(changed, s.changes().iter().any(|(at, _)| *at == i));
            }
        }
    }
}
