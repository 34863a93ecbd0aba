use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ea::OnePlusOne;
use super::nsga2::{Nsga2Config, Nsga2State};
use super::posdc::{PosdcState, Repair};
use super::Algorithm;
use crate::chance::ChanceParams;
use crate::dynamics::CapacitySchedule;
use crate::error::{Error, Result};
use crate::metrics::{
    offline_error_flagged, total_offline_error, FeasibilityRule, RunMeta, RunRecord, TracePoint,
};
use crate::model::{Instance, Solution};
use crate::oracle::DpTable;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub algorithm: Algorithm,
    /// POSDC storing half-width; `None` means the schedule's `r`.
    pub eta: Option<u64>,
    pub nsga2: Nsga2Config,
    /// Keep every k-th post-warmup iteration in the trace.
    pub trace_every: Option<usize>,
    pub feasibility: FeasibilityRule,
}

impl RunSettings {
    pub fn new(algorithm: Algorithm) -> Self {
        RunSettings {
            algorithm,
            eta: None,
            nsga2: Nsga2Config::default(),
            trace_every: None,
            feasibility: FeasibilityRule::default(),
        }
    }
}

enum Posdc<F> {
    Repairing(Repair<F>),
    Archive(PosdcState<F>),
}

enum Driver<F> {
    Ea(OnePlusOne<F>),
    Posdc {
        phase: Posdc<F>,
        evaluations: u64,
    },
    Nsga2 {
        state: Nsga2State<F>,
        /// Iterations still covered by the last generation's evaluations.
        credit: usize,
    },
}

impl<F: Scalar> Driver<F> {
    fn start(
        settings: &RunSettings,
        instance: &Instance,
        capacity: u64,
        eta: u64,
        params: &ChanceParams<F>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(match settings.algorithm {
            Algorithm::Ea11 => Driver::Ea(OnePlusOne::new(instance, capacity, params, rng)),
            Algorithm::Posdc => {
                let x = Solution::random(instance.items(), rng);
                let repair = Repair::start(x, capacity, eta, params);
                let phase = match repair.try_seed(params) {
                    Some(st) => Posdc::Archive(st),
                    None => Posdc::Repairing(repair),
                };
                Driver::Posdc {
                    phase,
                    evaluations: 0,
                }
            }
            Algorithm::Nsga2 => Driver::Nsga2 {
                state: Nsga2State::new(instance, capacity, params, settings.nsga2, rng)?,
                credit: 0,
            },
        })
    }

    fn on_change(&mut self, capacity: u64, params: &ChanceParams<F>) {
        match self {
            Driver::Ea(ea) => ea.set_capacity(capacity, params),
            Driver::Posdc { phase, .. } => match phase {
                Posdc::Repairing(r) => r.set_capacity(capacity, params),
                Posdc::Archive(st) => st.on_change(capacity),
            },
            Driver::Nsga2 { state, .. } => state.on_change(capacity, params),
        }
    }

    fn iterate(
        &mut self,
        instance: &Instance,
        params: &ChanceParams<F>,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        match self {
            Driver::Ea(ea) => {
                ea.step(instance, params, rng);
            }
            Driver::Posdc { phase, evaluations } => {
                *evaluations += 1;
                match phase {
                    Posdc::Repairing(r) => {
                        if let Some(st) = r.step(instance, params, rng)? {
                            *phase = Posdc::Archive(st);
                        }
                    }
                    Posdc::Archive(st) => {
                        st.step(instance, params, rng)?;
                    }
                }
            }
            Driver::Nsga2 { state, credit } => {
                if *credit == 0 {
                    state.generation(instance, params, rng);
                    *credit = state.config().population;
                }
                *credit -= 1;
            }
        }
        Ok(())
    }

    fn designated(&self) -> Result<&Solution> {
        Ok(match self {
            Driver::Ea(ea) => ea.incumbent(),
            Driver::Posdc { phase, .. } => match phase {
                Posdc::Repairing(r) => r.incumbent(),
                Posdc::Archive(st) => &st.best()?.solution,
            },
            Driver::Nsga2 { state, .. } => state.best(),
        })
    }

    fn evaluations(&self) -> u64 {
        match self {
            Driver::Ea(ea) => ea.evaluations(),
            Driver::Posdc { evaluations, .. } => *evaluations,
            Driver::Nsga2 { state, .. } => state.evaluations(),
        }
    }
}

/// Runs one algorithm over the whole schedule.
///
/// Capacity changes are applied before the iteration they are scheduled
/// for. Every iteration from the schedule's warmup onwards is scored with the
/// offline error of the algorithm's designated solution, judged feasible by
/// `settings.feasibility` under `params`' bound family.
pub fn run_algorithm<F: Scalar>(
    instance: &Instance,
    schedule: &CapacitySchedule,
    params: &ChanceParams<F>,
    dp: &DpTable,
    settings: &RunSettings,
    seed: u64,
) -> Result<RunRecord<F>> {
    let spec = *schedule.spec();
    let total = spec.total_iters;
    let warmup = spec.warmup;
    if total <= warmup {
        return Err(Error::EmptySeries);
    }
    if params.delta() != instance.delta() {
        return Err(Error::invalid(format!(
            "chance delta {} does not match instance delta {}",
            params.delta(),
            instance.delta()
        )));
    }
    if dp.c_max() < schedule.max_capacity() {
        return Err(Error::invalid(format!(
            "DP table covers capacities up to {} but the schedule reaches {}",
            dp.c_max(),
            schedule.max_capacity()
        )));
    }
    let eta = settings.eta.unwrap_or(spec.r);
    if eta == 0 {
        return Err(Error::invalid("eta must be >= 1"));
    }
    if settings.trace_every == Some(0) {
        return Err(Error::invalid("trace interval must be >= 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut driver = Driver::start(settings, instance, spec.c0, eta, params, &mut rng)?;
    let mut cursor = schedule.cursor();
    let alpha = params.alpha();

    let mut phis = Vec::with_capacity(total - warmup);
    let mut trace = Vec::new();
    let mut feasible_iters = 0usize;
    let mut changes = 0usize;

    for it in 0..total {
        let (capacity, changed) = cursor.at(it);
        if changed {
            driver.on_change(capacity, params);
            changes += 1;
        }
        driver.iterate(instance, params, &mut rng)?;
        if it < warmup {
            continue;
        }
        let best = driver.designated()?;
        let c = F::of_u64(capacity);
        let prob = params.violation_prob(best.expected_weight(), best.count(), c);
        let feasible = match settings.feasibility {
            FeasibilityRule::Probability => prob <= alpha,
            FeasibilityRule::CapacityBound => {
                params.capacity_bound(best.expected_weight(), best.count()) <= c
            }
        };
        let p_star = dp.get(capacity).expect("table covers the schedule");
        let phi = offline_error_flagged(p_star, best.profit(), feasible, prob);
        if feasible {
            feasible_iters += 1;
        }
        phis.push(phi);
        if let Some(k) = settings.trace_every {
            if (it - warmup).is_multiple_of(k) {
                trace.push(TracePoint {
                    iteration: it,
                    capacity,
                    optimal_profit: p_star,
                    best_profit: best.profit(),
                    violation_prob: prob,
                    feasible,
                    phi,
                });
            }
        }
    }

    let total_offline_error = total_offline_error(&phis)?;
    let final_best_profit = driver.designated()?.profit();
    Ok(RunRecord {
        meta: RunMeta {
            algorithm: settings.algorithm,
            bound: params.bound(),
            instance_seed: instance.seed(),
            run_seed: seed,
            r: spec.r,
            tau: spec.tau,
            delta: params.delta(),
            alpha,
        },
        feasible_fraction: feasible_iters as f64 / phis.len() as f64,
        per_iteration_phi: phis,
        total_offline_error,
        change_count: changes,
        evaluations: driver.evaluations(),
        final_best_profit,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::BoundKind;
    use crate::dynamics::ScheduleSpec;
    use crate::model::InstanceKind;

    fn setup(
        n: usize,
        tau: usize,
        warmup: usize,
        total: usize,
    ) -> (Instance, CapacitySchedule, DpTable) {
        let inst = Instance::generate(InstanceKind::Uncorrelated, n, 25, 100, 3).unwrap();
        let cmax = inst.total_expected_weight();
        let sched = CapacitySchedule::build(
            ScheduleSpec {
                c0: cmax / 2,
                tau,
                r: 500,
                warmup,
                total_iters: total,
                c_min: 1,
                c_max: cmax,
            },
            9,
        )
        .unwrap();
        let dp = DpTable::build(inst.items(), cmax);
        (inst, sched, dp)
    }

    #[test]
    fn zero_post_warmup_iterations_is_an_error() {
        let (inst, sched, dp) = setup(20, 10, 100, 100);
        let params = ChanceParams::new(0.01, 25, BoundKind::Chebyshev).unwrap();
        let r = run_algorithm(
            &inst,
            &sched,
            &params,
            &dp,
            &RunSettings::new(Algorithm::Ea11),
            1,
        );
        assert!(matches!(r, Err(Error::EmptySeries)));
    }

    #[test]
    fn mismatched_configuration_is_rejected() {
        let (inst, sched, dp) = setup(20, 10, 10, 100);
        let params = ChanceParams::new(0.01, 50, BoundKind::Chebyshev).unwrap();
        let s = RunSettings::new(Algorithm::Ea11);
        assert!(run_algorithm(&inst, &sched, &params, &dp, &s, 1).is_err());
        let params = ChanceParams::new(0.01, 25, BoundKind::Chebyshev).unwrap();
        let small = DpTable::build(inst.items(), 10);
        assert!(run_algorithm(&inst, &sched, &params, &small, &s, 1).is_err());
    }

    #[test]
    fn evaluation_accounting() {
        let (inst, sched, dp) = setup(30, 50, 100, 1_037);
        for algo in Algorithm::ALL {
            for bound in BoundKind::ALL {
                let params = ChanceParams::new(0.001, 25, bound).unwrap();
                let rec =
                    run_algorithm(&inst, &sched, &params, &dp, &RunSettings::new(algo), 5).unwrap();
                let expected = match algo {
                    Algorithm::Nsga2 => 20 * 1_037u64.div_ceil(20),
                    _ => 1_037,
                };
                assert_eq!(rec.evaluations, expected, "{algo} {bound}");
                assert_eq!(rec.per_iteration_phi.len(), 937);
                assert_eq!(rec.change_count, sched.change_count());
                let mean = rec.per_iteration_phi.iter().sum::<f64>() / 937.0;
                assert!((rec.total_offline_error - mean).abs() <= 1e-9 * mean.max(1.0));
                assert!(rec.per_iteration_phi.iter().all(|p| *p >= 0.0));
            }
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let (inst, sched, dp) = setup(30, 20, 50, 600);
        let params = ChanceParams::new(0.01, 25, BoundKind::Chernoff).unwrap();
        for algo in Algorithm::ALL {
            let s = RunSettings::new(algo);
            let a = run_algorithm(&inst, &sched, &params, &dp, &s, 77).unwrap();
            let b = run_algorithm(&inst, &sched, &params, &dp, &s, 77).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_change_behaves_like_static_optimisation() {
        // tau exceeds the horizon, so the only change is the one at warmup
        let (inst, sched, dp) = setup(20, 10_000, 100, 2_000);
        assert_eq!(sched.change_count(), 1);
        let c = sched.capacity_at(100).unwrap();
        let params = ChanceParams::new(0.01, 25, BoundKind::Chebyshev).unwrap();
        let mut s = RunSettings::new(Algorithm::Ea11);
        s.trace_every = Some(1);
        let rec = run_algorithm(&inst, &sched, &params, &dp, &s, 4).unwrap();
        assert_eq!(rec.change_count, 1);
        assert_eq!(rec.trace.len(), 1_900);
        assert!(rec.trace.iter().all(|t| t.capacity == c));
        // the EA's lexicographic fitness never worsens, so once feasible the
        // offline error is non-increasing
        let feasible: Vec<f64> = rec
            .trace
            .iter()
            .filter(|t| t.feasible)
            .map(|t| t.phi)
            .collect();
        assert!(!feasible.is_empty());
        assert!(feasible.windows(2).all(|w| w[1] <= w[0]));
    }
}
