//! The hourly network world: cells, UEs, traffic, association, throughput
//! and energy accounting.
//!
//! [`World`] holds everything that does not change during a run (cell and UE
//! configuration, precomputed link tables). [`NetworkState`] is the mutable
//! part and only [`step_hour`] produces a new one.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::NetError;
use crate::propagation::{self, LosModel, Position3D, RadioEnvironment, Terrain};
use crate::ric::{KpmReport, RcAction, RcCommand};
use crate::rng;

pub type CellId = u32;
pub type UeId = usize;

pub const HOURS_PER_DAY: u8 = 24;
pub const COVERAGE_CELL_ID: CellId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRole {
    Coverage,
    Capacity,
}

/// Linear base-station power model: `p_fixed + delta_p * P_tx` when on,
/// `p_sleep` when off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub p_fixed_w: f64,
    pub delta_p: f64,
    pub p_sleep_w: f64,
}

impl EnergyModel {
    pub fn power_w(&self, on: bool, tx_power_dbm: f64) -> f64 {
        if on {
            self.p_fixed_w + self.delta_p * dbm_to_w(tx_power_dbm)
        } else {
            self.p_sleep_w
        }
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub id: CellId,
    pub position: Position3D,
    pub tx_power_dbm: f64,
    pub fc_mhz: f64,
    pub bandwidth_mhz: f64,
    pub role: CellRole,
    pub antenna_gain_dbi: f64,
    pub switchable: bool,
    pub energy: EnergyModel,
    /// Share of air time carrying downlink (1.0 for FDD).
    pub duplex_dl_fraction: f64,
    pub los_model: LosModel,
}

impl CellConfig {
    pub fn power_w(&self, on: bool) -> f64 {
        self.energy.power_w(on, self.tx_power_dbm)
    }

    /// Carrier edges in MHz.
    pub fn band(&self) -> (f64, f64) {
        (self.fc_mhz - self.bandwidth_mhz / 2.0, self.fc_mhz + self.bandwidth_mhz / 2.0)
    }
}

/// A UE's base traffic pattern. The active window is `[start, end)` in
/// hours and wraps past midnight when `end <= start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub active_start_hour: u8,
    pub active_end_hour: u8,
    pub demand_mbps_by_hour: [f64; 24],
}

impl TrafficProfile {
    pub fn is_active_hour(&self, hour: u8) -> bool {
        let (s, e, h) = (self.active_start_hour, self.active_end_hour, hour % HOURS_PER_DAY);
        if s < e {
            (s..e).contains(&h)
        } else {
            h >= s || h < e
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.active_start_hour >= 24 || self.active_end_hour >= 24 {
            return Err(NetError::Config("active hours must be in [0, 24)".into()));
        }
        for (h, &d) in self.demand_mbps_by_hour.iter().enumerate() {
            if !(d >= 0.0) || (!self.is_active_hour(h as u8) && d != 0.0) {
                return Err(NetError::Config(format!("bad demand {d} at hour {h}")));
            }
        }
        if !self.demand_mbps_by_hour.iter().any(|&d| d > 0.0) {
            return Err(NetError::Config("traffic profile has no active hour".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeConfig {
    pub id: UeId,
    pub position: Position3D,
    pub noise_figure_db: f64,
    pub sensitivity_dbm: f64,
    pub traffic: TrafficProfile,
}

/// Parameters of the Shannon-style throughput model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputModel {
    pub overhead: f64,
    pub se_cap: f64,
}

impl Default for ThroughputModel {
    fn default() -> Self {
        Self { overhead: 0.8, se_cap: 5.5 }
    }
}

impl ThroughputModel {
    /// Rate a UE would get with the whole carrier to itself.
    pub fn link_rate_mbps(&self, bandwidth_mhz: f64, duplex_dl_fraction: f64, snr_db: f64) -> f64 {
        let snr = 10f64.powf(snr_db / 10.0);
        bandwidth_mhz * duplex_dl_fraction * self.overhead * (1.0 + snr).log2().min(self.se_cap)
    }

    /// Peak rate of a carrier (spectral efficiency at its cap).
    pub fn peak_rate_mbps(&self, bandwidth_mhz: f64, duplex_dl_fraction: f64) -> f64 {
        bandwidth_mhz * duplex_dl_fraction * self.overhead * self.se_cap
    }
}

/// Equal-share throughput of one UE: the cell's resources are split evenly
/// among `n_sharing` attached UEs and the UE takes at most its demand.
pub fn ue_throughput_mbps(demand_mbps: f64, link_rate_mbps: f64, n_sharing: usize) -> f64 {
    debug_assert!(n_sharing >= 1);
    demand_mbps.min(link_rate_mbps / n_sharing as f64)
}

/// Bits per joule; errors on non-positive energy.
pub fn network_efficiency(bits_total: f64, energy_joules_total: f64) -> Result<f64, NetError> {
    if !(energy_joules_total > 0.0) {
        return Err(NetError::NonPositiveEnergy(energy_joules_total));
    }
    Ok(bits_total / energy_joules_total)
}

/// Precomputed per-(UE, cell) link quantities. UEs are static, so these
/// only change when the shadowing realisation changes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    pub n_cells: usize,
    pub rsrp_dbm: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub link_rate_mbps: Vec<f64>,
}

impl LinkTable {
    pub fn rsrp(&self, ue: UeId, cell: CellId) -> f64 {
        self.rsrp_dbm[ue * self.n_cells + cell as usize]
    }

    pub fn rate(&self, ue: UeId, cell: CellId) -> f64 {
        self.link_rate_mbps[ue * self.n_cells + cell as usize]
    }
}

/// Static description of a simulated deployment.
#[derive(Debug, Clone)]
pub struct World {
    pub config: SimConfig,
    pub seed: u64,
    pub cells: Vec<CellConfig>,
    pub ues: Vec<UeConfig>,
    pub env: RadioEnvironment,
    pub throughput: ThroughputModel,
    pub hysteresis_db: f64,
    pub links: LinkTable,
}

/// Build the cells of the reference layout: the coverage cell (id 0) and the
/// capacity cells (ids 1..) on a square grid.
pub fn build_cells(cfg: &SimConfig) -> Vec<CellConfig> {
    let arena = cfg.arena_m;
    let cc = &cfg.coverage_cell;
    let e = &cfg.energy;
    let mut cells = vec![CellConfig {
        id: COVERAGE_CELL_ID,
        position: Position3D {
            x: cc.x_m.unwrap_or(arena / 2.0),
            y: cc.y_m.unwrap_or(arena / 2.0),
            z: cc.altitude_m,
        },
        tx_power_dbm: cc.tx_power_dbm,
        fc_mhz: cc.fc_mhz,
        bandwidth_mhz: cc.bandwidth_mhz,
        role: CellRole::Coverage,
        antenna_gain_dbi: cc.antenna_gain_dbi,
        switchable: false,
        energy: EnergyModel { p_fixed_w: e.coverage_p_fixed_w, delta_p: e.coverage_delta_p, p_sleep_w: e.p_sleep_w },
        duplex_dl_fraction: cc.duplex_dl_fraction,
        los_model: cc.los_model,
    }];
    let cap = &cfg.capacity_cells;
    let side = (cap.count as f64).sqrt().round() as u32;
    for k in 0..cap.count {
        let (row, col) = (k / side, k % side);
        let frac = |i: u32| (2 * i + 1) as f64 / (2 * side) as f64;
        cells.push(CellConfig {
            id: k + 1,
            position: Position3D { x: frac(col) * arena, y: frac(row) * arena, z: cap.altitude_m },
            tx_power_dbm: cap.tx_power_dbm,
            fc_mhz: cap.first_fc_mhz + cap.carrier_spacing_mhz * k as f64,
            bandwidth_mhz: cap.bandwidth_mhz,
            role: CellRole::Capacity,
            antenna_gain_dbi: cap.antenna_gain_dbi,
            switchable: true,
            energy: EnergyModel { p_fixed_w: e.capacity_p_fixed_w, delta_p: e.capacity_delta_p, p_sleep_w: e.p_sleep_w },
            duplex_dl_fraction: cap.duplex_dl_fraction,
            los_model: cap.los_model,
        });
    }
    cells
}

/// Place UEs uniformly over the arena and draw their base traffic profiles.
pub fn build_ues(cfg: &SimConfig, seed: u64) -> Vec<UeConfig> {
    let u = &cfg.ues;
    let mut placement = rng::stream(seed, "placement", &[]);
    let mut traffic = rng::stream(seed, "traffic", &[]);
    (0..u.count as usize)
        .map(|id| {
            let position = Position3D {
                x: placement.gen_range(0.0..cfg.arena_m),
                y: placement.gen_range(0.0..cfg.arena_m),
                z: u.height_m,
            };
            let len = traffic.gen_range(u.active_hours_min..=u.active_hours_max);
            let start = traffic.gen_range(0..HOURS_PER_DAY);
            let mut demand = [0.0; 24];
            for i in 0..len {
                demand[((start + i) % HOURS_PER_DAY) as usize] =
                    traffic.gen_range(u.demand_min_mbps..=u.demand_max_mbps);
            }
            UeConfig {
                id,
                position,
                noise_figure_db: u.noise_figure_db,
                sensitivity_dbm: u.sensitivity_dbm,
                traffic: TrafficProfile {
                    active_start_hour: start,
                    active_end_hour: (start + len) % HOURS_PER_DAY,
                    demand_mbps_by_hour: demand,
                },
            }
        })
        .collect()
}

pub fn radio_environment(cfg: &SimConfig, shadowing_seed: u64) -> RadioEnvironment {
    RadioEnvironment {
        building_height_m: cfg.radio.building_height_m,
        street_width_m: cfg.radio.street_width_m,
        shadowing_mode: cfg.radio.shadowing,
        extra_shadowing_db: cfg.radio.extra_shadowing_db,
        rng_seed: shadowing_seed,
        terrain: None,
        range_policy: cfg.radio.range_policy,
    }
}

pub fn compute_links(cells: &[CellConfig], ues: &[UeConfig], env: &RadioEnvironment, model: &ThroughputModel) -> Result<LinkTable, NetError> {
    let n_cells = cells.len();
    let mut table = LinkTable {
        n_cells,
        rsrp_dbm: Vec::with_capacity(n_cells * ues.len()),
        snr_db: Vec::with_capacity(n_cells * ues.len()),
        link_rate_mbps: Vec::with_capacity(n_cells * ues.len()),
    };
    for ue in ues {
        for cell in cells {
            let los = propagation::los_check(env.terrain.as_deref(), &cell.position, &ue.position)?;
            let rsrp = propagation::rsrp_unchecked_dbm(cell, &ue.position, env, los)?;
            let snr = propagation::snr_db(cell, &ue.position, ue.noise_figure_db, env, los)?;
            table.rsrp_dbm.push(rsrp);
            table.snr_db.push(snr);
            table.link_rate_mbps.push(model.link_rate_mbps(cell.bandwidth_mhz, cell.duplex_dl_fraction, snr));
        }
    }
    Ok(table)
}

impl World {
    /// Build the deployment for a run seed. The UE seed in the config, when
    /// present, overrides the run seed for placement and traffic.
    pub fn build(cfg: &SimConfig, seed: u64) -> Result<Self, NetError> {
        cfg.validate()?;
        let ue_seed = cfg.ues.seed.unwrap_or(seed);
        let cells = build_cells(cfg);
        let ues = build_ues(cfg, ue_seed);
        let env = radio_environment(cfg, rng::derive_seed(seed, "shadowing-episode", &[0]));
        let throughput = ThroughputModel { overhead: cfg.radio.overhead, se_cap: cfg.radio.se_cap };
        let links = compute_links(&cells, &ues, &env, &throughput)?;
        Ok(Self {
            config: cfg.clone(),
            seed: ue_seed,
            cells,
            ues,
            env,
            throughput,
            hysteresis_db: cfg.radio.hysteresis_db,
            links,
        })
    }

    /// Attach a terrain raster, lift UEs to their height above the local
    /// ground, and recompute the link table. The raster must cover every
    /// cell and UE.
    pub fn with_terrain(mut self, terrain: Option<Arc<Terrain>>) -> Result<Self, NetError> {
        if let Some(t) = &terrain {
            for ue in &mut self.ues {
                ue.position.z = t.elevation(ue.position.x, ue.position.y)? + self.config.ues.height_m;
            }
        }
        self.env.terrain = terrain;
        self.links = compute_links(&self.cells, &self.ues, &self.env, &self.throughput)?;
        Ok(self)
    }

    /// Redraw log-normal shadowing for an episode. A no-op in deterministic
    /// mode.
    pub fn reseed_shadowing(&mut self, episode: u64) -> Result<(), NetError> {
        if self.env.shadowing_mode == propagation::ShadowingMode::Deterministic {
            return Ok(());
        }
        self.env.rng_seed = rng::derive_seed(self.seed, "shadowing-episode", &[episode]);
        self.links = compute_links(&self.cells, &self.ues, &self.env, &self.throughput)?;
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn switchable_ids(&self) -> Vec<CellId> {
        self.cells.iter().filter(|c| c.switchable).map(|c| c.id).collect()
    }

    pub fn cell(&self, id: CellId) -> Option<&CellConfig> {
        self.cells.get(id as usize)
    }

    /// Demand of a UE in a given hour of a given day: the base profile
    /// scaled by a per-(day, hour) jitter factor.
    pub fn demand_mbps(&self, ue: UeId, day: u64, hour: u8) -> f64 {
        let base = self.ues[ue].traffic.demand_mbps_by_hour[(hour % HOURS_PER_DAY) as usize];
        if base == 0.0 {
            return 0.0;
        }
        let j = self.config.ues.demand_jitter;
        if j == 0.0 {
            return base;
        }
        let mut r = rng::stream(self.seed, "jitter", &[day, ue as u64, u64::from(hour)]);
        base * r.gen_range(1.0 - j..=1.0 + j)
    }

    pub fn demands(&self, day: u64, hour: u8) -> Vec<f64> {
        (0..self.ues.len()).map(|u| self.demand_mbps(u, day, hour)).collect()
    }

    /// Peak downlink rate of a cell.
    pub fn cell_capacity_mbps(&self, id: CellId) -> f64 {
        let c = &self.cells[id as usize];
        self.throughput.peak_rate_mbps(c.bandwidth_mhz, c.duplex_dl_fraction)
    }

    /// Largest hourly energy any single cell can draw.
    pub fn max_cell_energy_wh(&self) -> f64 {
        self.cells.iter().map(|c| c.power_w(true)).fold(0.0, f64::max)
    }

    pub fn initial_state(&self, day_index: u64) -> NetworkState {
        NetworkState {
            day_index,
            hour_of_day: 0,
            cells: self
                .cells
                .iter()
                .map(|_| CellState { on: true, attached: Vec::new(), served_throughput_mbps: 0.0, energy_wh: 0.0 })
                .collect(),
            assignment: vec![None; self.ues.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub on: bool,
    pub attached: Vec<UeId>,
    pub served_throughput_mbps: f64,
    pub energy_wh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    /// Day of the next hour to simulate.
    pub day_index: u64,
    /// Hour of day of the next hour to simulate.
    pub hour_of_day: u8,
    pub cells: Vec<CellState>,
    pub assignment: Vec<Option<CellId>>,
}

impl NetworkState {
    pub fn on_mask(&self) -> Vec<bool> {
        self.cells.iter().map(|c| c.on).collect()
    }

    pub fn total_energy_wh(&self) -> f64 {
        self.cells.iter().map(|c| c.energy_wh).sum()
    }

    pub fn total_throughput_mbps(&self) -> f64 {
        self.cells.iter().map(|c| c.served_throughput_mbps).sum()
    }
}

/// Attach each active UE to the on-cell with the strongest RSRP at or above
/// its sensitivity (ties to the lowest cell id). A UE still attached to an
/// on cell only moves when the best candidate beats its current RSRP by more
/// than `hysteresis_db`. Inactive UEs are left unattached.
pub fn associate(
    world: &World,
    active: &[bool],
    on: &[bool],
    prior: &[Option<CellId>],
    hysteresis_db: f64,
) -> Vec<Option<CellId>> {
    let links = &world.links;
    (0..world.ues.len())
        .map(|ue| {
            if !active[ue] {
                return None;
            }
            let sens = world.ues[ue].sensitivity_dbm;
            let mut best: Option<(CellId, f64)> = None;
            for c in 0..links.n_cells as CellId {
                let r = links.rsrp(ue, c);
                if on[c as usize] && r >= sens && best.is_none_or(|(_, b)| r > b) {
                    best = Some((c, r));
                }
            }
            let (best_id, best_rsrp) = best?;
            match prior[ue] {
                Some(cur) if on[cur as usize] && links.rsrp(ue, cur) >= sens => {
                    if best_rsrp > links.rsrp(ue, cur) + hysteresis_db {
                        Some(best_id)
                    } else {
                        Some(cur)
                    }
                }
                _ => Some(best_id),
            }
        })
        .collect()
}

/// Result of simulating one hour with a fixed on/off pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct HourOutcome {
    pub assignment: Vec<Option<CellId>>,
    pub cells: Vec<CellState>,
    pub ue_throughput_mbps: Vec<f64>,
    pub unserved_ue_count: u32,
}

impl HourOutcome {
    pub fn total_energy_wh(&self) -> f64 {
        self.cells.iter().map(|c| c.energy_wh).sum()
    }

    pub fn total_throughput_mbps(&self) -> f64 {
        self.cells.iter().map(|c| c.served_throughput_mbps).sum()
    }

    pub fn bits(&self) -> f64 {
        self.total_throughput_mbps() * 1e6 * 3600.0
    }

    pub fn joules(&self) -> f64 {
        self.total_energy_wh() * 3600.0
    }

    pub fn efficiency_bits_per_j(&self) -> f64 {
        network_efficiency(self.bits(), self.joules()).unwrap_or(0.0)
    }
}

/// Simulate one hour of traffic for a given on/off pattern, starting from
/// the previous hour's assignment. Shared by [`step_hour`] and the
/// exhaustive oracle so both see identical arithmetic.
pub fn evaluate_hour(world: &World, prior: &[Option<CellId>], on: &[bool], demands: &[f64]) -> HourOutcome {
    let active: Vec<bool> = demands.iter().map(|&d| d > 0.0).collect();
    let assignment = associate(world, &active, on, prior, world.hysteresis_db);
    let mut cells: Vec<CellState> = world
        .cells
        .iter()
        .map(|c| CellState {
            on: on[c.id as usize],
            attached: Vec::new(),
            served_throughput_mbps: 0.0,
            energy_wh: c.power_w(on[c.id as usize]),
        })
        .collect();
    for (ue, a) in assignment.iter().enumerate() {
        if let Some(c) = a {
            cells[*c as usize].attached.push(ue);
        }
    }
    let mut ue_throughput = vec![0.0; world.ues.len()];
    for (cid, cell) in cells.iter_mut().enumerate() {
        let n = cell.attached.len();
        for &ue in &cell.attached {
            let t = ue_throughput_mbps(demands[ue], world.links.rate(ue, cid as CellId), n);
            ue_throughput[ue] = t;
            cell.served_throughput_mbps += t;
        }
    }
    let unserved = active.iter().zip(&assignment).filter(|(a, s)| **a && s.is_none()).count() as u32;
    HourOutcome { assignment, cells, ue_throughput_mbps: ue_throughput, unserved_ue_count: unserved }
}

/// Outcome of applying one control action.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionResult {
    Applied(RcAction),
    Rejected(RcAction, NetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: NetworkState,
    pub reports: Vec<KpmReport>,
    pub actions: Vec<ActionResult>,
    pub outcome: HourOutcome,
}

/// Apply a control action to an on/off mask.
pub fn apply_action(world: &World, on: &mut [bool], action: &RcAction) -> Result<(), NetError> {
    if action.command == RcCommand::Noop {
        return Ok(());
    }
    let cell = world.cell(action.target_cell_id).ok_or(NetError::UnknownCell(action.target_cell_id))?;
    if !cell.switchable {
        return Err(NetError::NonSwitchable(cell.id));
    }
    let slot = &mut on[cell.id as usize];
    *slot = match action.command {
        RcCommand::Toggle => !*slot,
        RcCommand::SetOn => true,
        RcCommand::SetOff => false,
        RcCommand::Noop => *slot,
    };
    Ok(())
}

/// Advance the world by one hour: apply pending actions, re-associate,
/// account throughput and energy, and emit one KPM report per cell.
pub fn step_hour(world: &World, state: &NetworkState, pending: &[RcAction]) -> StepOutput {
    let mut on = state.on_mask();
    let actions = pending
        .iter()
        .map(|a| match apply_action(world, &mut on, a) {
            Ok(()) => ActionResult::Applied(*a),
            Err(e) => ActionResult::Rejected(*a, e),
        })
        .collect();
    let (day, hour) = (state.day_index, state.hour_of_day);
    let demands = world.demands(day, hour);
    let outcome = evaluate_hour(world, &state.assignment, &on, &demands);
    let reports = outcome
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
            unserved_ue_count: (cid as CellId == COVERAGE_CELL_ID).then_some(outcome.unserved_ue_count),
        })
        .collect();
    let (next_day, next_hour) = if hour + 1 == HOURS_PER_DAY { (day + 1, 0) } else { (day, hour + 1) };
    let state = NetworkState {
        day_index: next_day,
        hour_of_day: next_hour,
        cells: outcome.cells.clone(),
        assignment: outcome.assignment.clone(),
    };
    StepOutput { state, reports, actions, outcome }
}

pub const METRICS_CSV_HEADER: &str = "day,hour,cell_id,on,ue_count,throughput_mbps,energy_wh";

pub fn metrics_csv_rows(reports: &[KpmReport], out: &mut String) {
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            r.day, r.hour, r.cell_id, u8::from(r.on), r.connected_ues, r.throughput_mbps, r.energy_wh
        )
        .expect("write to string");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world() -> World {
        World::build(&SimConfig::default(), 11).unwrap()
    }

    #[test]
    fn layout_matches_reference_deployment() {
        let w = world();
        assert_eq!(w.cells.len(), 10);
        let cov = &w.cells[0];
        assert_eq!((cov.position.x, cov.position.y, cov.position.z), (5000.0, 5000.0, 1000.0));
        assert!(!cov.switchable);
        assert_eq!(cov.tx_power_dbm, 36.0);
        let xs: Vec<f64> = w.cells[1..4].iter().map(|c| c.position.x).collect();
        for (x, want) in xs.iter().zip([10_000.0 / 6.0, 5000.0, 50_000.0 / 6.0]) {
            assert!((x - want).abs() < 1e-9);
        }
        for c in &w.cells[1..] {
            assert_eq!(c.position.z, 60.0);
            assert_eq!(c.tx_power_dbm, 28.0);
            assert_eq!(c.bandwidth_mhz, 40.0);
            assert!(c.switchable);
        }
    }

    #[test]
    fn capacity_carriers_are_disjoint() {
        let w = world();
        let cap = &w.cells[1..];
        for (k, c) in cap.iter().enumerate() {
            assert_eq!(c.fc_mhz, 3600.0 + 40.0 * k as f64);
        }
        for a in cap {
            for b in cap {
                if a.id < b.id {
                    assert!(a.band().1 <= b.band().0, "cells {} and {} overlap", a.id, b.id);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_ues() {
        let a = build_ues(&SimConfig::default(), 5);
        let b = build_ues(&SimConfig::default(), 5);
        let c = build_ues(&SimConfig::default(), 6);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for ue in &a {
            ue.traffic.validate().unwrap();
            let len = (0..24).filter(|&h| ue.traffic.is_active_hour(h)).count();
            assert!((6..=12).contains(&len));
            assert!(ue.position.x >= 0.0 && ue.position.x < 10_000.0);
        }
    }

    #[test]
    fn wrapping_active_window() {
        let mut demand = [0.0; 24];
        for h in [22, 23, 0, 1] {
            demand[h] = 3.0;
        }
        let p = TrafficProfile { active_start_hour: 22, active_end_hour: 2, demand_mbps_by_hour: demand };
        assert!(p.is_active_hour(23) && p.is_active_hour(0) && !p.is_active_hour(2));
        p.validate().unwrap();
    }

    #[test]
    fn energy_constants_and_ordering() {
        let w = world();
        let cov = w.cells[0].power_w(true);
        let cap = w.cells[1].power_w(true);
        // 36 dBm = 3.98107 W, 28 dBm = 0.630957 W
        assert!((cov - (150.0 + 20.0 * 3.981_071_705_534_973)).abs() < 1e-9);
        assert!((cap - (50.0 + 15.0 * 0.630_957_344_480_193_3)).abs() < 1e-9);
        assert!(cov > cap);
        assert_eq!(w.cells[1].power_w(false), 5.0);
    }

    #[test]
    fn throughput_rules() {
        assert_eq!(ue_throughput_mbps(0.0, 100.0, 1), 0.0);
        let one = ue_throughput_mbps(1e9, 100.0, 2);
        let two = ue_throughput_mbps(1e9, 100.0, 4);
        assert_eq!(one, 2.0 * two);
        let m = ThroughputModel::default();
        assert!((m.link_rate_mbps(10.0, 1.0, 60.0) - 44.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_arithmetic() {
        assert_eq!(network_efficiency(0.0, 5.0).unwrap(), 0.0);
        assert!(network_efficiency(1.0, 0.0).is_err());
        let e = network_efficiency(3.0, 7.0).unwrap();
        assert_eq!(network_efficiency(6.0, 14.0).unwrap(), e);
        assert_eq!(network_efficiency(1e9, 275.0 * 3600.0).unwrap(), 1e9 / 990_000.0);
    }

    #[test]
    fn tie_break_prefers_lowest_cell_id() {
        let mut w = world();
        w.ues.truncate(1);
        w.links = LinkTable {
            n_cells: 10,
            rsrp_dbm: vec![-130.0, -130.0, -130.0, -90.0, -130.0, -130.0, -130.0, -90.0, -130.0, -130.0],
            snr_db: vec![0.0; 10],
            link_rate_mbps: vec![1.0; 10],
        };
        let got = associate(&w, &[true], &[true; 10], &[None], 3.0);
        assert_eq!(got, vec![Some(3)]);
    }

    #[test]
    fn hysteresis_keeps_current_cell() {
        let mut w = world();
        w.ues.truncate(1);
        let mut rsrp = vec![-140.0; 10];
        rsrp[0] = -100.0;
        rsrp[2] = -98.0;
        w.links = LinkTable { n_cells: 10, rsrp_dbm: rsrp, snr_db: vec![0.0; 10], link_rate_mbps: vec![1.0; 10] };
        let on = [true; 10];
        assert_eq!(associate(&w, &[true], &on, &[Some(0)], 3.0), vec![Some(0)]);
        assert_eq!(associate(&w, &[true], &on, &[Some(0)], 1.0), vec![Some(2)]);
        assert_eq!(associate(&w, &[true], &on, &[None], 3.0), vec![Some(2)]);
        let mut off = on;
        off[0] = false;
        assert_eq!(associate(&w, &[true], &off, &[Some(0)], 3.0), vec![Some(2)]);
        assert_eq!(associate(&w, &[false], &on, &[Some(0)], 3.0), vec![None]);
    }

    #[test]
    fn coverage_cell_cannot_be_switched() {
        let w = world();
        let s = w.initial_state(0);
        let out = step_hour(&w, &s, &[RcAction::new(0, RcCommand::SetOff)]);
        assert!(matches!(out.actions[0], ActionResult::Rejected(_, NetError::NonSwitchable(0))));
        assert!(out.state.cells[0].on);
    }

    #[test]
    fn all_capacity_off_hour_energy() {
        let w = world();
        let mut s = w.initial_state(0);
        for c in &mut s.cells[1..] {
            c.on = false;
        }
        let out = step_hour(&w, &s, &[]);
        let expected = (150.0 + 20.0 * dbm_to_w(36.0)) + 9.0 * 5.0;
        assert_eq!(out.state.total_energy_wh(), expected);
        // The rounded figure quoted for this layout is 275 Wh (36 dBm ~ 4 W).
        assert!((expected - 275.0).abs() < 0.5);
    }

    #[test]
    fn toggling_twice_restores_state() {
        let w = world();
        let s0 = w.initial_state(0);
        let s1 = step_hour(&w, &s0, &[RcAction::new(4, RcCommand::Toggle)]).state;
        assert!(!s1.cells[4].on);
        let s2 = step_hour(&w, &s1, &[RcAction::new(4, RcCommand::Toggle)]).state;
        assert_eq!(s2.on_mask(), s0.on_mask());
        assert_eq!((s2.day_index, s2.hour_of_day), (0, 2));
    }

    #[test]
    fn hour_wraps_into_next_day() {
        let w = world();
        let mut s = w.initial_state(3);
        s.hour_of_day = 23;
        let out = step_hour(&w, &s, &[]);
        assert_eq!((out.state.day_index, out.state.hour_of_day), (4, 0));
        assert_eq!(out.reports.len(), 10);
        assert!(out.reports.iter().all(|r| r.day == 3 && r.hour == 23));
    }
}
