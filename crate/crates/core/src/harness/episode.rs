//! Hour-by-hour run loop: policy, bus, network model.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::harness::policy::{Policy, PolicyContext};
use crate::netmodel::{step_hour, CellId, NetworkState, World, HOURS_PER_DAY};
use crate::ric::{ConflictEvent, ControlReply, KpmReport, RicBus, RicEnvelope};

pub const SUBSCRIBER_ID: &str = "energy-xapp";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourRecord {
    pub day: u64,
    pub hour: u8,
    pub on: Vec<bool>,
    /// Assignment in force when the hour started.
    #[serde(skip)]
    pub prior_assignment: Vec<Option<CellId>>,
    pub energy_wh: f64,
    pub bits: f64,
    pub efficiency_bits_per_j: f64,
    pub unserved_ues: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayMetrics {
    pub day_index: u64,
    pub total_energy_wh: f64,
    pub total_bits: f64,
    pub efficiency_bits_per_j: f64,
    pub mean_unserved_ues: f64,
    pub hours: Vec<HourRecord>,
}

impl DayMetrics {
    pub(crate) fn from_hours(day_index: u64, hours: Vec<HourRecord>) -> Self {
        let total_energy_wh: f64 = hours.iter().map(|h| h.energy_wh).sum();
        let total_bits: f64 = hours.iter().map(|h| h.bits).sum();
        let efficiency = if total_energy_wh > 0.0 { total_bits / (total_energy_wh * 3600.0) } else { 0.0 };
        let mean_unserved = hours.iter().map(|h| f64::from(h.unserved_ues)).sum::<f64>() / hours.len().max(1) as f64;
        Self { day_index, total_energy_wh, total_bits, efficiency_bits_per_j: efficiency, mean_unserved_ues: mean_unserved, hours }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub first_day: u64,
    pub days: u32,
    /// Days simulated (and logged on the bus) before `first_day` but left
    /// out of the metrics.
    pub warmup_days: u32,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub policy: String,
    pub days: Vec<DayMetrics>,
    /// Metered reports only.
    pub reports: Vec<KpmReport>,
    pub envelopes: Vec<RicEnvelope>,
    pub conflicts: Vec<ConflictEvent>,
    pub final_state: NetworkState,
}

impl RunOutput {
    pub fn mean_daily_energy_wh(&self) -> f64 {
        mean(self.days.iter().map(|d| d.total_energy_wh))
    }

    /// Mean over days of the daily efficiency.
    pub fn mean_efficiency(&self) -> f64 {
        mean(self.days.iter().map(|d| d.efficiency_bits_per_j))
    }

    pub fn mean_unserved_ues(&self) -> f64 {
        mean(self.days.iter().map(|d| d.mean_unserved_ues))
    }

    pub fn hours(&self) -> impl Iterator<Item = &HourRecord> {
        self.days.iter().flat_map(|d| d.hours.iter())
    }
}

pub const EPISODES_CSV_HEADER: &str = "day,total_energy_wh,total_bits,efficiency_bits_per_j,mean_unserved_ues";

pub fn episodes_csv(days: &[DayMetrics]) -> String {
    let mut s = String::from(EPISODES_CSV_HEADER);
    s.push('\n');
    for d in days {
        writeln!(
            s,
            "{},{:.6},{:.1},{:.9},{:.6}",
            d.day_index, d.total_energy_wh, d.total_bits, d.efficiency_bits_per_j, d.mean_unserved_ues
        )
        .expect("write to string");
    }
    s
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Reports describing a state as it stands, used as the first observation
/// before any hour has been published.
pub fn state_reports(state: &NetworkState) -> Vec<KpmReport> {
    let (day, hour) = if state.hour_of_day == 0 {
        (state.day_index.saturating_sub(1), HOURS_PER_DAY - 1)
    } else {
        (state.day_index, state.hour_of_day - 1)
    };
    state
        .cells
        .iter()
        .enumerate()
        .map(|(cid, c)| KpmReport {
            cell_id: cid as CellId,
            day,
            hour,
            on: c.on,
            connected_ues: c.attached.len() as u32,
            throughput_mbps: c.served_throughput_mbps,
            energy_wh: c.energy_wh,
            unserved_ue_count: None,
        })
        .collect()
}

/// Run a policy over `warmup_days + days` consecutive days ending with the
/// metered window `first_day..first_day + days`. All cells start on.
pub fn run_days(world: &World, policy: &mut dyn Policy, opts: RunOptions) -> Result<RunOutput, HarnessError> {
    let start_day = opts.first_day.checked_sub(u64::from(opts.warmup_days)).ok_or_else(|| {
        HarnessError::Invalid(format!("warmup of {} days does not fit before day {}", opts.warmup_days, opts.first_day))
    })?;
    let mut bus = RicBus::new(world.switchable_ids());
    let sub = bus.subscribe(SUBSCRIBER_ID, 1)?;
    let mut state = world.initial_state(start_day);
    let mut latest = state_reports(&state);
    let mut days = Vec::with_capacity(opts.days as usize);
    let mut reports = Vec::new();
    let total_days = u64::from(opts.warmup_days) + u64::from(opts.days);
    for day in start_day..start_day + total_days {
        let metered = day >= opts.first_day;
        let mut hours = Vec::with_capacity(HOURS_PER_DAY as usize);
        for hour in 0..HOURS_PER_DAY {
            debug_assert_eq!((state.day_index, state.hour_of_day), (day, hour));
            bus.set_clock(day, hour);
            if let Some(batch) = bus.poll_latest(sub) {
                latest = batch;
            }
            let ctx = PolicyContext { world, state: &state, day, hour };
            for action in policy.decide(&ctx, &latest) {
                if let ControlReply::Error { reason, .. } = bus.submit_control(action) {
                    log::warn!("{} control rejected: {reason}", policy.name());
                }
            }
            let pending = bus.take_pending_controls();
            let out = step_hour(world, &state, &pending);
            bus.publish_indications(&out.reports);
            if metered {
                hours.push(HourRecord {
                    day,
                    hour,
                    on: out.state.on_mask(),
                    prior_assignment: state.assignment.clone(),
                    energy_wh: out.outcome.total_energy_wh(),
                    bits: out.outcome.bits(),
                    efficiency_bits_per_j: out.outcome.efficiency_bits_per_j(),
                    unserved_ues: out.outcome.unserved_ue_count,
                });
                reports.extend_from_slice(&out.reports);
            }
            state = out.state;
        }
        if metered {
            days.push(DayMetrics::from_hours(day, hours));
        }
    }
    Ok(RunOutput {
        policy: policy.name(),
        days,
        reports,
        conflicts: bus.conflicts().to_vec(),
        envelopes: bus.into_envelopes(),
        final_state: state,
    })
}
