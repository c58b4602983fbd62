//! Experiment configuration, read from a TOML file.
//!
//! Every key has a default, so an empty file (or no file) describes the
//! reference scenario: a 10 km arena, one always-on coverage cell at 1 km
//! altitude and nine switchable capacity cells at 60 m.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::NetError;
use crate::propagation::{LosModel, RangePolicy, ShadowingMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub arena_m: f64,
    pub coverage_cell: CoverageCellConfig,
    pub capacity_cells: CapacityCellsConfig,
    pub ues: UesConfig,
    pub energy: EnergyConfig,
    pub radio: RadioConfig,
    pub dqn: DqnConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            arena_m: 10_000.0,
            coverage_cell: CoverageCellConfig::default(),
            capacity_cells: CapacityCellsConfig::default(),
            ues: UesConfig::default(),
            energy: EnergyConfig::default(),
            radio: RadioConfig::default(),
            dqn: DqnConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageCellConfig {
    /// Horizontal position; `None` places the cell at the arena centre.
    pub x_m: Option<f64>,
    pub y_m: Option<f64>,
    pub altitude_m: f64,
    pub tx_power_dbm: f64,
    pub fc_mhz: f64,
    pub bandwidth_mhz: f64,
    pub antenna_gain_dbi: f64,
    pub duplex_dl_fraction: f64,
    pub los_model: LosModel,
}

impl Default for CoverageCellConfig {
    fn default() -> Self {
        Self {
            x_m: None,
            y_m: None,
            altitude_m: 1000.0,
            tx_power_dbm: 36.0,
            fc_mhz: 3300.0,
            bandwidth_mhz: 20.0,
            antenna_gain_dbi: 2.0,
            duplex_dl_fraction: 0.75,
            los_model: LosModel::FreeSpace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityCellsConfig {
    /// Must be a perfect square; cells sit on a regular grid.
    pub count: u32,
    pub altitude_m: f64,
    pub tx_power_dbm: f64,
    pub first_fc_mhz: f64,
    pub carrier_spacing_mhz: f64,
    pub bandwidth_mhz: f64,
    pub antenna_gain_dbi: f64,
    pub duplex_dl_fraction: f64,
    pub los_model: LosModel,
}

impl Default for CapacityCellsConfig {
    fn default() -> Self {
        Self {
            count: 9,
            altitude_m: 60.0,
            tx_power_dbm: 28.0,
            first_fc_mhz: 3600.0,
            carrier_spacing_mhz: 40.0,
            bandwidth_mhz: 40.0,
            antenna_gain_dbi: 2.0,
            duplex_dl_fraction: 0.75,
            los_model: LosModel::Rma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UesConfig {
    pub count: u32,
    /// Placement and traffic seed; falls back to the run seed when absent.
    pub seed: Option<u64>,
    pub height_m: f64,
    pub noise_figure_db: f64,
    pub sensitivity_dbm: f64,
    pub active_hours_min: u8,
    pub active_hours_max: u8,
    pub demand_min_mbps: f64,
    pub demand_max_mbps: f64,
    /// Relative per-day jitter on each hourly demand (0.2 = +-20 %).
    pub demand_jitter: f64,
}

impl Default for UesConfig {
    fn default() -> Self {
        Self {
            count: 50,
            seed: None,
            height_m: 1.5,
            noise_figure_db: 7.0,
            sensitivity_dbm: -125.0,
            active_hours_min: 6,
            active_hours_max: 12,
            demand_min_mbps: 1.0,
            demand_max_mbps: 20.0,
            demand_jitter: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub coverage_p_fixed_w: f64,
    pub coverage_delta_p: f64,
    pub capacity_p_fixed_w: f64,
    pub capacity_delta_p: f64,
    pub p_sleep_w: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            coverage_p_fixed_w: 150.0,
            coverage_delta_p: 20.0,
            capacity_p_fixed_w: 50.0,
            capacity_delta_p: 15.0,
            p_sleep_w: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub building_height_m: f64,
    pub street_width_m: f64,
    pub shadowing: ShadowingMode,
    pub extra_shadowing_db: f64,
    pub range_policy: RangePolicy,
    pub hysteresis_db: f64,
    pub overhead: f64,
    pub se_cap: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            building_height_m: 5.0,
            street_width_m: 5.0,
            shadowing: ShadowingMode::Deterministic,
            extra_shadowing_db: 0.0,
            range_policy: RangePolicy::Clamp,
            hysteresis_db: 3.0,
            overhead: 0.8,
            se_cap: 5.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_episodes: u32,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub target_sync_period: u64,
    /// Gradient updates per environment step once the buffer holds a batch.
    pub updates_per_step: u32,
    pub episodes: u32,
    /// Days of always-on simulation used to normalise the reward.
    pub baseline_days: u32,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 64],
            gamma: 0.95,
            learning_rate: 1e-3,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 200,
            batch_size: 64,
            replay_capacity: 20_000,
            target_sync_period: 24,
            updates_per_step: 2,
            episodes: 300,
            baseline_days: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// First held-out day index; training uses days `0..episodes`.
    pub first_day: u64,
    pub days: u32,
    /// Unmetered days simulated before the first metered day.
    pub warmup_days: u32,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { first_day: 100_000, days: 30, warmup_days: 1 }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, NetError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| NetError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let err = |m: &str| Err(NetError::Config(m.to_string()));
        if !(self.arena_m > 0.0) {
            return err("arena_m must be positive");
        }
        let n = self.capacity_cells.count;
        let side = (n as f64).sqrt().round() as u32;
        if side * side != n {
            return err("capacity_cells.count must be a perfect square");
        }
        if n > 12 {
            // The exhaustive oracle enumerates 2^n patterns.
            log::warn!("{n} capacity cells: exhaustive oracle disabled above 12");
        }
        if !(self.coverage_cell.bandwidth_mhz > 0.0 && self.capacity_cells.bandwidth_mhz > 0.0) {
            return err("bandwidths must be positive");
        }
        if self.capacity_cells.carrier_spacing_mhz < self.capacity_cells.bandwidth_mhz && n > 1 {
            return err("capacity carriers overlap: carrier_spacing_mhz < bandwidth_mhz");
        }
        for f in [self.coverage_cell.duplex_dl_fraction, self.capacity_cells.duplex_dl_fraction] {
            if !(f > 0.0 && f <= 1.0) {
                return err("duplex_dl_fraction must be in (0, 1]");
            }
        }
        let e = &self.energy;
        if !(e.p_sleep_w >= 0.0 && e.coverage_p_fixed_w > e.p_sleep_w && e.capacity_p_fixed_w > e.p_sleep_w) {
            return err("energy: need p_fixed_w > p_sleep_w >= 0");
        }
        let u = &self.ues;
        if u.count == 0 {
            return err("ues.count must be positive");
        }
        if !(u.active_hours_min >= 1 && u.active_hours_min <= u.active_hours_max && u.active_hours_max <= 24) {
            return err("ues: need 1 <= active_hours_min <= active_hours_max <= 24");
        }
        if !(u.demand_min_mbps > 0.0 && u.demand_min_mbps <= u.demand_max_mbps) {
            return err("ues: need 0 < demand_min_mbps <= demand_max_mbps");
        }
        if !(0.0..1.0).contains(&u.demand_jitter) {
            return err("ues.demand_jitter must be in [0, 1)");
        }
        let r = &self.radio;
        if !(r.building_height_m > 0.0 && r.street_width_m > 0.0 && r.extra_shadowing_db >= 0.0) {
            return err("radio: building height and street width must be positive, extra shadowing non-negative");
        }
        if !(r.overhead > 0.0 && r.overhead <= 1.0 && r.se_cap > 0.0 && r.hysteresis_db >= 0.0) {
            return err("radio: overhead in (0,1], se_cap > 0, hysteresis_db >= 0");
        }
        let d = &self.dqn;
        if !(0.0..=1.0).contains(&d.gamma) {
            return err("dqn.gamma must be in [0, 1]");
        }
        if !((0.0..=1.0).contains(&d.epsilon_start) && (0.0..=1.0).contains(&d.epsilon_end)) {
            return err("dqn epsilon values must be in [0, 1]");
        }
        if d.hidden.is_empty() || d.hidden.contains(&0) {
            return err("dqn.hidden must list positive layer widths");
        }
        if !(d.learning_rate > 0.0) || d.batch_size == 0 || d.replay_capacity < d.batch_size || d.target_sync_period == 0 {
            return err("dqn: learning_rate > 0, batch_size > 0, replay_capacity >= batch_size, target_sync_period > 0");
        }
        if self.evaluation.days == 0 {
            return err("evaluation.days must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_scenario() {
        let cfg = SimConfig::from_toml("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.coverage_cell.tx_power_dbm, 36.0);
        assert_eq!(cfg.capacity_cells.tx_power_dbm, 28.0);
        assert_eq!(cfg.capacity_cells.count, 9);
        assert_eq!(cfg.ues.count, 50);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = SimConfig::default();
        assert_eq!(SimConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(cfg.hash_hex().len(), 64);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(SimConfig::from_toml("arena_km = 3").is_err());
        assert!(SimConfig::from_toml("[capacity_cells]\ncount = 8").is_err());
        assert!(SimConfig::from_toml("[energy]\np_sleep_w = 500.0").is_err());
        assert!(SimConfig::from_toml("[dqn]\ngamma = 1.5").is_err());
        assert!(SimConfig::from_toml("[capacity_cells]\ncarrier_spacing_mhz = 20.0").is_err());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = SimConfig::from_toml("[ues]\ncount = 10\nseed = 3\n").unwrap();
        assert_eq!(cfg.ues.count, 10);
        assert_eq!(cfg.ues.seed, Some(3));
        assert_eq!(cfg.ues.sensitivity_dbm, -125.0);
    }
}
