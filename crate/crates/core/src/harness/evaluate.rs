//! Policy comparison against the always-on baseline.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dqn;
use crate::error::HarnessError;
use crate::harness::episode::{run_days, RunOptions, RunOutput};
use crate::harness::policy::{AlwaysOn, DqnPolicy, ExhaustiveHourly, GreedyIdle, Policy, PolicyKind, RandomPolicy};
use crate::netmodel::World;
use crate::rng;

pub const EVALUATION_CSV_HEADER: &str =
    "policy,mean_daily_energy_wh,mean_efficiency,pct_energy_vs_always_on,pct_efficiency_vs_always_on";

/// Largest switchable-cell count the exhaustive policy accepts.
pub const EXHAUSTIVE_MAX_CELLS: usize = 12;

pub fn build_policy(kind: &PolicyKind, world: &World, seed: u64) -> Result<Box<dyn Policy>, HarnessError> {
    Ok(match kind {
        PolicyKind::AlwaysOn => Box::new(AlwaysOn),
        PolicyKind::Random => {
            Box::new(RandomPolicy::new(rng::stream(seed, "random-policy", &[]), world.switchable_ids().len()))
        }
        PolicyKind::GreedyIdle => Box::new(GreedyIdle::new(world)),
        PolicyKind::ExhaustiveHourly => {
            let n = world.switchable_ids().len();
            if n > EXHAUSTIVE_MAX_CELLS {
                return Err(HarnessError::Invalid(format!(
                    "exhaustive_hourly supports at most {EXHAUSTIVE_MAX_CELLS} switchable cells, got {n}"
                )));
            }
            Box::new(ExhaustiveHourly)
        }
        PolicyKind::Dqn(path) => {
            let net = dqn::load_checkpoint(path)?;
            let policy = DqnPolicy::new(net, world);
            let expected = policy.encoder.state_dim();
            if policy.net.input_size() != expected || policy.net.output_size() != world.switchable_ids().len() + 1 {
                return Err(HarnessError::Invalid(format!(
                    "checkpoint {} has shape {:?}, incompatible with this deployment",
                    path.display(),
                    policy.net.layer_sizes()
                )));
            }
            Box::new(policy)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRow {
    pub policy: String,
    pub mean_daily_energy_wh: f64,
    /// Mean over days of the daily efficiency, bits per joule.
    pub mean_efficiency: f64,
    /// Signed percent change against always-on (negative means less energy).
    pub pct_energy_vs_always_on: f64,
    pub pct_efficiency_vs_always_on: f64,
    pub mean_unserved_ues: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<PolicyRow>,
    /// Runs in the same order as `rows`; the always-on run is first.
    pub runs: Vec<RunOutput>,
}

fn pct(value: f64, base: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        100.0 * (value - base) / base
    }
}

/// Run each policy over the same days and compare it with always-on, which
/// is always evaluated and listed first. Policies run in parallel.
pub fn evaluate(world: &World, kinds: &[PolicyKind], opts: RunOptions, seed: u64) -> Result<Comparison, HarnessError> {
    let mut all = vec![PolicyKind::AlwaysOn];
    all.extend(kinds.iter().filter(|k| **k != PolicyKind::AlwaysOn).cloned());
    let runs: Vec<RunOutput> = all
        .par_iter()
        .map(|kind| {
            let mut policy = build_policy(kind, world, seed)?;
            run_days(world, policy.as_mut(), opts)
        })
        .collect::<Result<_, _>>()?;
    let base_energy = runs[0].mean_daily_energy_wh();
    let base_eff = runs[0].mean_efficiency();
    let rows = runs
        .iter()
        .map(|r| PolicyRow {
            policy: r.policy.clone(),
            mean_daily_energy_wh: r.mean_daily_energy_wh(),
            mean_efficiency: r.mean_efficiency(),
            pct_energy_vs_always_on: pct(r.mean_daily_energy_wh(), base_energy),
            pct_efficiency_vs_always_on: pct(r.mean_efficiency(), base_eff),
            mean_unserved_ues: r.mean_unserved_ues(),
        })
        .collect();
    Ok(Comparison { rows, runs })
}

impl Comparison {
    pub fn row(&self, policy: &str) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(EVALUATION_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(
                s,
                "{},{:.6},{:.9},{:.6},{:.6}",
                r.policy, r.mean_daily_energy_wh, r.mean_efficiency, r.pct_energy_vs_always_on, r.pct_efficiency_vs_always_on
            )
            .expect("write to string");
        }
        s
    }

    pub fn summary(&self, opts: RunOptions) -> String {
        let mut s = String::new();
        let last = opts.first_day + u64::from(opts.days.max(1)) - 1;
        writeln!(s, "days {}..={} ({} metered, {} warm-up)", opts.first_day, last, opts.days, opts.warmup_days).unwrap();
        writeln!(s, "efficiency = mean over days of daily bits / daily joules").unwrap();
        writeln!(
            s,
            "{:<18} {:>14} {:>16} {:>12} {:>12} {:>10}",
            "policy", "energy Wh/day", "efficiency b/J", "energy %", "eff %", "unserved"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:<18} {:>14.1} {:>16.1} {:>+12.2} {:>+12.2} {:>10.3}",
                r.policy,
                r.mean_daily_energy_wh,
                r.mean_efficiency,
                r.pct_energy_vs_always_on,
                r.pct_efficiency_vs_always_on,
                r.mean_unserved_ues
            )
            .unwrap();
        }
        s
    }
}
