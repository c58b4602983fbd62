//! Control policies hosted as xApps on the bus.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dqn::{self, Mlp, StateEncoder};
use crate::harness::oracle::exhaustive_hour_optimum;
use crate::netmodel::{CellId, CellRole, NetworkState, UeId, World, COVERAGE_CELL_ID};
use crate::ric::{KpmReport, RcAction, RcCommand};

/// What a policy can see when it is consulted for the upcoming hour.
pub struct PolicyContext<'a> {
    pub world: &'a World,
    pub state: &'a NetworkState,
    pub day: u64,
    pub hour: u8,
}

pub trait Policy {
    fn name(&self) -> String;
    /// Controls to submit before the upcoming hour, given the latest KPM
    /// batch (the previous hour's reports).
    fn decide(&mut self, ctx: &PolicyContext<'_>, reports: &[KpmReport]) -> Vec<RcAction>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyKind {
    AlwaysOn,
    Random,
    GreedyIdle,
    ExhaustiveHourly,
    Dqn(PathBuf),
}

impl PolicyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::AlwaysOn => "always_on",
            PolicyKind::Random => "random",
            PolicyKind::GreedyIdle => "greedy_idle",
            PolicyKind::ExhaustiveHourly => "exhaustive_hourly",
            PolicyKind::Dqn(_) => "dqn",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolicyKind {
    type Err = String;
    /// `dqn` needs a checkpoint path, given as `dqn:PATH` (the CLI fills it
    /// from `--checkpoint`).
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "always_on" => Ok(PolicyKind::AlwaysOn),
            "random" => Ok(PolicyKind::Random),
            "greedy_idle" => Ok(PolicyKind::GreedyIdle),
            "exhaustive_hourly" => Ok(PolicyKind::ExhaustiveHourly),
            _ => match s.strip_prefix("dqn:") {
                Some(path) if !path.is_empty() => Ok(PolicyKind::Dqn(PathBuf::from(path))),
                _ if s == "dqn" => Err("policy `dqn` needs a checkpoint".into()),
                _ => Err(format!(
                    "unknown policy `{s}` (expected always_on, random, greedy_idle, exhaustive_hourly, dqn)"
                )),
            },
        }
    }
}

/// Keeps every cell on.
#[derive(Debug, Default, Clone)]
pub struct AlwaysOn;

impl Policy for AlwaysOn {
    fn name(&self) -> String {
        "always_on".into()
    }

    fn decide(&mut self, ctx: &PolicyContext<'_>, _reports: &[KpmReport]) -> Vec<RcAction> {
        let off: Vec<RcAction> = ctx
            .world
            .cells
            .iter()
            .filter(|c| c.switchable && !ctx.state.cells[c.id as usize].on)
            .map(|c| RcAction::new(c.id, RcCommand::SetOn))
            .collect();
        if off.is_empty() {
            vec![RcAction::noop()]
        } else {
            off
        }
    }
}

/// Uniformly random toggle-or-noop each hour.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    n_actions: usize,
}

impl RandomPolicy {
    pub fn new(rng: ChaCha8Rng, n_switchable: usize) -> Self {
        Self { rng, n_actions: n_switchable + 1 }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn decide(&mut self, _ctx: &PolicyContext<'_>, _reports: &[KpmReport]) -> Vec<RcAction> {
        vec![dqn::action_to_control(self.rng.gen_range(0..self.n_actions))]
    }
}

/// For each capacity cell, the UEs it would take over from the coverage
/// cell: its strongest-server area with every cell on, restricted to UEs
/// whose margin over the coverage cell exceeds the re-association
/// hysteresis.
pub fn capacity_areas(world: &World) -> BTreeMap<CellId, Vec<UeId>> {
    let mut areas: BTreeMap<CellId, Vec<UeId>> =
        world.cells.iter().filter(|c| c.role == CellRole::Capacity).map(|c| (c.id, Vec::new())).collect();
    let links = &world.links;
    for ue in 0..world.ues.len() {
        let sens = world.ues[ue].sensitivity_dbm;
        let best = areas
            .keys()
            .copied()
            .fold(None::<(CellId, f64)>, |acc, c| {
                let r = links.rsrp(ue, c);
                match acc {
                    Some((_, b)) if r <= b => acc,
                    _ => Some((c, r)),
                }
            });
        if let Some((c, r)) = best {
            if r >= sens && r > links.rsrp(ue, COVERAGE_CELL_ID) + world.hysteresis_db {
                areas.get_mut(&c).expect("capacity cell").push(ue);
            }
        }
    }
    areas
}

/// Each UE assigned to the horizontally nearest capacity cell.
pub fn nearest_capacity_areas(world: &World) -> BTreeMap<CellId, Vec<UeId>> {
    let cap: Vec<_> = world.cells.iter().filter(|c| c.role == CellRole::Capacity).collect();
    let mut areas: BTreeMap<CellId, Vec<UeId>> = cap.iter().map(|c| (c.id, Vec::new())).collect();
    for ue in &world.ues {
        let nearest = cap
            .iter()
            .min_by(|a, b| {
                a.position
                    .horizontal_distance(&ue.position)
                    .total_cmp(&b.position.horizontal_distance(&ue.position))
            })
            .expect("capacity cells");
        areas.get_mut(&nearest.id).expect("capacity cell").push(ue.id);
    }
    areas
}

/// Rule-based oracle: switch off idle capacity cells, switch on cells whose
/// area has demand. At most one control per hour.
#[derive(Debug, Clone)]
pub struct GreedyIdle {
    areas: BTreeMap<CellId, Vec<UeId>>,
}

impl GreedyIdle {
    pub fn new(world: &World) -> Self {
        Self { areas: capacity_areas(world) }
    }

    pub fn with_areas(areas: BTreeMap<CellId, Vec<UeId>>) -> Self {
        Self { areas }
    }

    fn area_has_demand(&self, ctx: &PolicyContext<'_>, cell: CellId) -> bool {
        self.areas[&cell].iter().any(|&ue| ctx.world.demand_mbps(ue, ctx.day, ctx.hour) > 0.0)
    }
}

impl Policy for GreedyIdle {
    fn name(&self) -> String {
        "greedy_idle".into()
    }

    fn decide(&mut self, ctx: &PolicyContext<'_>, reports: &[KpmReport]) -> Vec<RcAction> {
        let on = |c: CellId| ctx.state.cells[c as usize].on;
        let served = |c: CellId| reports.iter().rev().find(|r| r.cell_id == c).map_or(0, |r| r.connected_ues);
        for &c in self.areas.keys() {
            if on(c) && served(c) == 0 && !self.area_has_demand(ctx, c) {
                return vec![RcAction::new(c, RcCommand::SetOff)];
            }
        }
        for &c in self.areas.keys() {
            if !on(c) && self.area_has_demand(ctx, c) {
                return vec![RcAction::new(c, RcCommand::SetOn)];
            }
        }
        vec![RcAction::noop()]
    }
}

/// Applies the exhaustive per-hour optimum directly (not limited to one
/// control per hour).
#[derive(Debug, Default, Clone)]
pub struct ExhaustiveHourly;

impl Policy for ExhaustiveHourly {
    fn name(&self) -> String {
        "exhaustive_hourly".into()
    }

    fn decide(&mut self, ctx: &PolicyContext<'_>, _reports: &[KpmReport]) -> Vec<RcAction> {
        let best = exhaustive_hour_optimum(ctx.world, ctx.state);
        let mut out = Vec::new();
        for (&cell, &want) in best.switchable.iter().zip(&best.pattern) {
            if ctx.state.cells[cell as usize].on != want {
                out.push(RcAction::new(cell, if want { RcCommand::SetOn } else { RcCommand::SetOff }));
            }
        }
        if out.is_empty() {
            out.push(RcAction::noop());
        }
        out
    }
}

/// Greedy (epsilon = 0) DQN xApp.
#[derive(Debug, Clone)]
pub struct DqnPolicy {
    pub net: Mlp,
    pub encoder: StateEncoder,
}

impl DqnPolicy {
    pub fn new(net: Mlp, world: &World) -> Self {
        Self { net, encoder: StateEncoder::for_world(world) }
    }
}

impl Policy for DqnPolicy {
    fn name(&self) -> String {
        "dqn".into()
    }

    fn decide(&mut self, ctx: &PolicyContext<'_>, reports: &[KpmReport]) -> Vec<RcAction> {
        let action = self
            .encoder
            .encode_state(reports, ctx.hour)
            .and_then(|s| self.net.forward(&s))
            .map(|q| dqn::argmax(&q));
        match action {
            Ok(a) => vec![dqn::action_to_control(a)],
            Err(e) => {
                log::warn!("dqn policy fell back to noop: {e}");
                vec![RcAction::noop()]
            }
        }
    }
}

/// Re-submits recorded controls hour by hour.
#[derive(Debug, Clone, Default)]
pub struct ReplayPolicy {
    pub controls: BTreeMap<(u64, u8), Vec<RcAction>>,
}

impl Policy for ReplayPolicy {
    fn name(&self) -> String {
        "replay".into()
    }

    fn decide(&mut self, ctx: &PolicyContext<'_>, _reports: &[KpmReport]) -> Vec<RcAction> {
        self.controls.get(&(ctx.day, ctx.hour)).cloned().unwrap_or_default()
    }
}
