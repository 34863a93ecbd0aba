//! Evolutionary solvers for the dynamic chance-constrained knapsack.
//!
//! Iterations are counted in fitness evaluations. (1+1)-EA and POSDC spend
//! one evaluation per iteration; one NSGA-II generation evaluates a whole
//! offspring population and is charged that many iterations.

mod ea;
mod nsga2;
mod posdc;
mod run;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Item, Solution};

pub use ea::{lex_better_or_equal, lex_fitness, LexFitness, OnePlusOne};
pub use nsga2::{
    crowding_distance, fast_non_dominated_sort, pareto_dominates, Individual, Nsga2Config,
    Nsga2State,
};
pub use posdc::{posdc_dominates, posdc_init, ArchiveMember, PosdcState, Side, REPAIR_STEP_LIMIT};
pub use run::{run_algorithm, RunSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ea11,
    Posdc,
    Nsga2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ea11, Algorithm::Posdc, Algorithm::Nsga2];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ea11 => "ea11",
            Algorithm::Posdc => "posdc",
            Algorithm::Nsga2 => "nsga2",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ea11" | "ea" | "1+1" => Ok(Algorithm::Ea11),
            "posdc" => Ok(Algorithm::Posdc),
            "nsga2" | "nsga-ii" => Ok(Algorithm::Nsga2),
            other => Err(Error::invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Standard bit mutation: every bit flips independently with probability `1/n`.
pub fn mutate<R: Rng + ?Sized>(parent: &Solution, items: &[Item], rng: &mut R) -> Solution {
    let mut child = parent.clone();
    let n = items.len();
    let p = 1.0 / n as f64;
    for i in 0..n {
        if rng.random::<f64>() < p {
            child.flip(items, i);
        }
    }
    child
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, InstanceKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mutation_keeps_aggregates_consistent() {
        let inst = Instance::generate(InstanceKind::Uncorrelated, 40, 25, 100, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = Solution::random(inst.items(), &mut rng);
        let mut total_flips = 0usize;
        for _ in 0..2000 {
            let y = mutate(&x, inst.items(), &mut rng);
            assert!(y.is_consistent(inst.items()));
            total_flips += x
                .bits()
                .iter()
                .zip(y.bits())
                .filter(|(a, b)| a != b)
                .count();
            x = y;
        }
        // one expected flip per offspring
        let mean = total_flips as f64 / 2000.0;
        assert!((mean - 1.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("gsemo".parse::<Algorithm>().is_err());
    }
}
