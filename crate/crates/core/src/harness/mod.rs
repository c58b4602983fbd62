//! Experiment orchestration: policies, run loop, oracle, training and
//! evaluation.

pub mod episode;
pub mod evaluate;
pub mod oracle;
pub mod policy;
pub mod replay;
pub mod train;

pub use episode::{episodes_csv, run_days, state_reports, DayMetrics, HourRecord, RunOptions, RunOutput};
pub use evaluate::{build_policy, evaluate, Comparison, PolicyRow};
pub use oracle::{exhaustive_hour_optimum, HourOptimum};
pub use policy::{
    capacity_areas, AlwaysOn, DqnPolicy, ExhaustiveHourly, GreedyIdle, Policy, PolicyContext, PolicyKind, RandomPolicy,
    ReplayPolicy,
};
pub use replay::{controls_from_envelopes, metrics_from_envelopes, replay_run};
pub use train::{learning_curve_csv, train, CurvePoint, TrainOutput};

/// Metrics of a single day under a policy, starting from all cells on.
pub fn run_episode(
    world: &crate::netmodel::World,
    policy: &mut dyn Policy,
    day_index: u64,
) -> Result<DayMetrics, crate::error::HarnessError> {
    let mut out = run_days(world, policy, RunOptions { first_day: day_index, days: 1, warmup_days: 0 })?;
    Ok(out.days.remove(0))
}
