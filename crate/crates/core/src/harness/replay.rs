//! Re-driving a recorded bus stream and checking it reproduces itself.

use std::collections::BTreeMap;

use crate::error::HarnessError;
use crate::harness::episode::{run_days, DayMetrics, HourRecord, RunOptions, RunOutput};
use crate::harness::policy::ReplayPolicy;
use crate::netmodel::{network_efficiency, World, COVERAGE_CELL_ID};
use crate::ric::{Payload, RcAction, RicEnvelope};

/// Submitted controls keyed by the (day, hour) they were aimed at, in
/// submission order.
pub fn controls_from_envelopes(envelopes: &[RicEnvelope]) -> BTreeMap<(u64, u8), Vec<RcAction>> {
    let mut out: BTreeMap<(u64, u8), Vec<RcAction>> = BTreeMap::new();
    for e in envelopes {
        if let Payload::Control { day, hour, action } = e.payload {
            out.entry((day, hour)).or_default().push(action);
        }
    }
    out
}

/// Rebuild per-day metrics from the indications in a stream, keeping only
/// the metered window of `opts`.
pub fn metrics_from_envelopes(envelopes: &[RicEnvelope], opts: RunOptions) -> Vec<DayMetrics> {
    let mut by_hour: BTreeMap<(u64, u8), Vec<_>> = BTreeMap::new();
    for e in envelopes {
        if let Payload::Indication(r) = e.payload {
            if r.day >= opts.first_day && r.day < opts.first_day + u64::from(opts.days) {
                by_hour.entry((r.day, r.hour)).or_default().push(r);
            }
        }
    }
    let mut days: BTreeMap<u64, Vec<HourRecord>> = BTreeMap::new();
    for ((day, hour), reports) in by_hour {
        let energy_wh: f64 = reports.iter().map(|r| r.energy_wh).sum();
        let throughput: f64 = reports.iter().map(|r| r.throughput_mbps).sum();
        let bits = throughput * 1e6 * 3600.0;
        days.entry(day).or_default().push(HourRecord {
            day,
            hour,
            on: reports.iter().map(|r| r.on).collect(),
            prior_assignment: Vec::new(),
            energy_wh,
            bits,
            efficiency_bits_per_j: network_efficiency(bits, energy_wh * 3600.0).unwrap_or(0.0),
            unserved_ues: reports
                .iter()
                .find(|r| r.cell_id == COVERAGE_CELL_ID)
                .and_then(|r| r.unserved_ue_count)
                .unwrap_or(0),
        });
    }
    days.into_iter().map(|(day, hours)| DayMetrics::from_hours(day, hours)).collect()
}

fn strip_assignments(days: &[DayMetrics]) -> Vec<DayMetrics> {
    let mut days = days.to_vec();
    for h in days.iter_mut().flat_map(|d| d.hours.iter_mut()) {
        h.prior_assignment.clear();
    }
    days
}

/// Re-run the controls of a recorded stream against `world` and require the
/// regenerated stream and metrics to match the recording exactly.
pub fn replay_run(world: &World, recorded: &[RicEnvelope], opts: RunOptions) -> Result<RunOutput, HarnessError> {
    let mut policy = ReplayPolicy { controls: controls_from_envelopes(recorded) };
    let out = run_days(world, &mut policy, opts)?;
    if out.envelopes.len() != recorded.len() {
        return Err(HarnessError::ReplayMismatch(format!(
            "recorded {} envelopes, replay produced {}",
            recorded.len(),
            out.envelopes.len()
        )));
    }
    if let Some((a, b)) = recorded.iter().zip(&out.envelopes).find(|(a, b)| a != b) {
        return Err(HarnessError::ReplayMismatch(format!(
            "first difference at seq {}: recorded {}, replayed {}",
            a.seq,
            a.to_json_line(),
            b.to_json_line()
        )));
    }
    if metrics_from_envelopes(recorded, opts) != strip_assignments(&out.days) {
        return Err(HarnessError::ReplayMismatch("episode metrics differ".into()));
    }
    Ok(out)
}
