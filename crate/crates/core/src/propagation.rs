//! Pathloss, shadowing, RSRP/SNR and coverage rasters.
//!
//! The rural-macro (RMa) LoS and NLoS pathloss formulas follow the 3GPP
//! channel model for frequencies below 7 GHz. Carrier frequencies are passed
//! in MHz everywhere; the RMa formulas use GHz internally.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::RadioError;
use crate::netmodel::CellConfig;
use crate::rng;

/// Speed of light used by the free-space model.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// The RMa model defines its breakpoint distance with c = 3e8 m/s.
pub const RMA_SPEED_OF_LIGHT: f64 = 3.0e8;
/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;
pub const RMA_MIN_D2D_M: f64 = 10.0;
pub const RMA_MAX_D2D_M: f64 = 10_000.0;

pub const RMA_LOS_SIGMA_PL1_DB: f64 = 4.0;
pub const RMA_LOS_SIGMA_PL2_DB: f64 = 6.0;
pub const RMA_NLOS_SIGMA_DB: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, RadioError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(RadioError::Domain("coordinates must be finite".into()));
        }
        if z < 0.0 {
            return Err(RadioError::Domain(format!("height {z} m is negative")));
        }
        Ok(Self { x, y, z })
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingMode {
    #[default]
    Deterministic,
    Lognormal,
}

/// What to do with horizontal distances outside the RMa validity range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RangePolicy {
    /// Clamp short distances up to 10 m with a warning; extrapolate long ones.
    #[default]
    Clamp,
    /// Reject anything outside [10 m, 10 km].
    Strict,
}

/// Pathloss model used for line-of-sight links of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LosModel {
    FreeSpace,
    #[default]
    Rma,
}

#[derive(Debug, Clone)]
pub struct RadioEnvironment {
    pub building_height_m: f64,
    pub street_width_m: f64,
    pub shadowing_mode: ShadowingMode,
    pub extra_shadowing_db: f64,
    pub rng_seed: u64,
    pub terrain: Option<Arc<Terrain>>,
    pub range_policy: RangePolicy,
}

impl Default for RadioEnvironment {
    fn default() -> Self {
        Self {
            building_height_m: 5.0,
            street_width_m: 5.0,
            shadowing_mode: ShadowingMode::Deterministic,
            extra_shadowing_db: 0.0,
            rng_seed: 0,
            terrain: None,
            range_policy: RangePolicy::Clamp,
        }
    }
}

impl RadioEnvironment {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.building_height_m > 0.0) {
            return Err(RadioError::Domain("building height must be positive".into()));
        }
        if !(self.street_width_m > 0.0) {
            return Err(RadioError::Domain("street width must be positive".into()));
        }
        if !(self.extra_shadowing_db >= 0.0) {
            return Err(RadioError::Domain("extra shadowing must be non-negative".into()));
        }
        Ok(())
    }

    fn ground(&self, x: f64, y: f64) -> f64 {
        self.terrain
            .as_ref()
            .and_then(|t| t.elevation(x, y).ok())
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub d2d_m: f64,
    pub d3d_m: f64,
    pub h_bs_m: f64,
    pub h_ut_m: f64,
    pub fc_mhz: f64,
}

impl LinkGeometry {
    pub fn from_heights(d2d_m: f64, h_bs_m: f64, h_ut_m: f64, fc_mhz: f64) -> Self {
        let d3d_m = d2d_m.hypot(h_bs_m - h_ut_m);
        Self { d2d_m, d3d_m, h_bs_m, h_ut_m, fc_mhz }
    }

    /// Geometry between a transmitter and a receiver. Heights are taken
    /// relative to the ground under the receiver.
    pub fn between(tx: &Position3D, rx: &Position3D, fc_mhz: f64, env: &RadioEnvironment) -> Self {
        let ground = env.ground(rx.x, rx.y);
        let h_ut = (rx.z - ground).max(0.0);
        let h_bs = (tx.z - ground).max(1.0);
        Self::from_heights(tx.horizontal_distance(rx), h_bs, h_ut, fc_mhz)
    }

    fn fc_ghz(&self) -> f64 {
        self.fc_mhz / 1000.0
    }
}

/// A pathloss value and the log-normal shadowing deviation that goes with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pathloss {
    pub db: f64,
    pub sigma_db: f64,
}

pub fn fspl_db(d_m: f64, fc_mhz: f64) -> Result<f64, RadioError> {
    if !(d_m > 0.0) || !(fc_mhz > 0.0) {
        return Err(RadioError::Domain(format!(
            "free-space pathloss needs positive distance and frequency, got d={d_m} m, fc={fc_mhz} MHz"
        )));
    }
    let f_hz = fc_mhz * 1e6;
    Ok(20.0 * (4.0 * std::f64::consts::PI * d_m * f_hz / SPEED_OF_LIGHT).log10())
}

pub fn breakpoint_distance_m(geom: &LinkGeometry) -> f64 {
    2.0 * std::f64::consts::PI * geom.h_bs_m * geom.h_ut_m * geom.fc_mhz * 1e6 / RMA_SPEED_OF_LIGHT
}

/// Apply the RMa range policy to the horizontal distance.
fn admit_range(geom: &LinkGeometry, env: &RadioEnvironment) -> Result<LinkGeometry, RadioError> {
    if !(geom.fc_mhz > 0.0) || !(geom.h_bs_m > 0.0) || !(geom.h_ut_m > 0.0) {
        return Err(RadioError::Domain(format!(
            "RMa needs positive heights and frequency: {geom:?}"
        )));
    }
    let out_of_range = RadioError::OutOfRange {
        d2d_m: geom.d2d_m,
        min_m: RMA_MIN_D2D_M,
        max_m: RMA_MAX_D2D_M,
    };
    match env.range_policy {
        RangePolicy::Strict if geom.d2d_m < RMA_MIN_D2D_M || geom.d2d_m > RMA_MAX_D2D_M => {
            Err(out_of_range)
        }
        RangePolicy::Clamp if geom.d2d_m < RMA_MIN_D2D_M => {
            log::warn!("d2d {:.3} m below the RMa minimum, clamped to 10 m", geom.d2d_m);
            Ok(LinkGeometry::from_heights(RMA_MIN_D2D_M, geom.h_bs_m, geom.h_ut_m, geom.fc_mhz))
        }
        _ => Ok(*geom),
    }
}

fn rma_pl1(d3d: f64, fc_ghz: f64, h: f64) -> f64 {
    let h172 = h.powf(1.72);
    20.0 * (40.0 * std::f64::consts::PI * d3d * fc_ghz / 3.0).log10()
        + (0.03 * h172).min(10.0) * d3d.log10()
        - (0.044 * h172).min(14.77)
        + 0.002 * h.log10() * d3d
}

fn rma_los_admitted(geom: &LinkGeometry, env: &RadioEnvironment) -> Pathloss {
    let h = env.building_height_m;
    let d_bp = breakpoint_distance_m(geom);
    if geom.d2d_m <= d_bp {
        Pathloss { db: rma_pl1(geom.d3d_m, geom.fc_ghz(), h), sigma_db: RMA_LOS_SIGMA_PL1_DB }
    } else {
        // Anchor the second slope at the 3D distance of the breakpoint so
        // both branches agree exactly at d2d = dBP.
        let d3d_bp = d_bp.hypot(geom.h_bs_m - geom.h_ut_m);
        Pathloss {
            db: rma_pl1(d3d_bp, geom.fc_ghz(), h) + 40.0 * (geom.d3d_m / d3d_bp).log10(),
            sigma_db: RMA_LOS_SIGMA_PL2_DB,
        }
    }
}

pub fn rma_los_pathloss_db(geom: &LinkGeometry, env: &RadioEnvironment) -> Result<Pathloss, RadioError> {
    let geom = admit_range(geom, env)?;
    Ok(rma_los_admitted(&geom, env))
}

/// The NLoS-only term of the RMa model, before the max with the LoS value.
pub fn rma_nlos_prime_db(geom: &LinkGeometry, env: &RadioEnvironment) -> f64 {
    let w = env.street_width_m;
    let h = env.building_height_m;
    let h_bs = geom.h_bs_m;
    161.04 - 7.1 * w.log10() + 7.5 * h.log10()
        - (24.37 - 3.7 * (h / h_bs).powi(2)) * h_bs.log10()
        + (43.42 - 3.1 * h_bs.log10()) * (geom.d3d_m.log10() - 3.0)
        + 20.0 * geom.fc_ghz().log10()
        - (3.2 * (11.75 * geom.h_ut_m).log10().powi(2) - 4.97)
}

pub fn rma_nlos_pathloss_db(geom: &LinkGeometry, env: &RadioEnvironment) -> Result<Pathloss, RadioError> {
    let geom = admit_range(geom, env)?;
    let los = rma_los_admitted(&geom, env);
    Ok(Pathloss { db: los.db.max(rma_nlos_prime_db(&geom, env)), sigma_db: RMA_NLOS_SIGMA_DB })
}

/// Pathloss of a cell's link, choosing the model from the cell's LoS model
/// and the visibility flag.
pub fn link_pathloss(cell: &CellConfig, geom: &LinkGeometry, env: &RadioEnvironment, los: bool) -> Result<Pathloss, RadioError> {
    if !los {
        return rma_nlos_pathloss_db(geom, env);
    }
    match cell.los_model {
        LosModel::FreeSpace => Ok(Pathloss {
            db: fspl_db(geom.d3d_m, geom.fc_mhz)?,
            sigma_db: RMA_LOS_SIGMA_PL1_DB,
        }),
        LosModel::Rma => rma_los_pathloss_db(geom, env),
    }
}

/// Resource elements across the carrier: 12 subcarriers per 180 kHz block at
/// 15 kHz spacing, i.e. 60 per MHz.
pub fn n_subcarriers(bandwidth_mhz: f64) -> f64 {
    60.0 * bandwidth_mhz
}

/// Shadowing realisation for one (cell, receiver position) pair. Zero in
/// deterministic mode.
pub fn shadowing_draw_db(cell_id: u32, rx: &Position3D, sigma_db: f64, env: &RadioEnvironment) -> f64 {
    match env.shadowing_mode {
        ShadowingMode::Deterministic => 0.0,
        ShadowingMode::Lognormal => {
            let mut r = rng::stream(
                env.rng_seed,
                "shadowing",
                &[u64::from(cell_id), rx.x.to_bits(), rx.y.to_bits(), rx.z.to_bits()],
            );
            let z: f64 = r.sample(StandardNormal);
            z * sigma_db
        }
    }
}

/// Total received power over the whole carrier, before noise.
fn rx_power_full_band_dbm(cell: &CellConfig, ue_pos: &Position3D, env: &RadioEnvironment, los: bool) -> Result<f64, RadioError> {
    let geom = LinkGeometry::between(&cell.position, ue_pos, cell.fc_mhz, env);
    let pl = link_pathloss(cell, &geom, env, los)?;
    let shadow = shadowing_draw_db(cell.id, ue_pos, pl.sigma_db, env) + env.extra_shadowing_db;
    Ok(cell.tx_power_dbm + cell.antenna_gain_dbi - pl.db - shadow + UE_ANTENNA_GAIN_DBI)
}

pub const UE_ANTENNA_GAIN_DBI: f64 = 0.0;

/// Reference signal received power (per resource element), ignoring the
/// cell's on/off state.
pub fn rsrp_unchecked_dbm(cell: &CellConfig, ue_pos: &Position3D, env: &RadioEnvironment, los: bool) -> Result<f64, RadioError> {
    Ok(rx_power_full_band_dbm(cell, ue_pos, env, los)? - 10.0 * n_subcarriers(cell.bandwidth_mhz).log10())
}

/// RSRP of an on cell at a receiver position.
pub fn rsrp_dbm(cell: &CellConfig, on: bool, ue_pos: &Position3D, env: &RadioEnvironment, los: bool) -> Result<f64, RadioError> {
    if !on {
        return Err(RadioError::CellOff(cell.id));
    }
    rsrp_unchecked_dbm(cell, ue_pos, env, los)
}

pub fn noise_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// SNR from a received full-band power.
pub fn snr_from_rx_power_db(rx_power_dbm: f64, bandwidth_mhz: f64, noise_figure_db: f64) -> f64 {
    rx_power_dbm - noise_floor_dbm(bandwidth_mhz * 1e6, noise_figure_db)
}

/// SNR of a UE on a cell. Capacity carriers are disjoint in frequency, so
/// there is no interference term.
pub fn snr_db(cell: &CellConfig, ue_pos: &Position3D, noise_figure_db: f64, env: &RadioEnvironment, los: bool) -> Result<f64, RadioError> {
    let rx = rx_power_full_band_dbm(cell, ue_pos, env, los)?;
    Ok(snr_from_rx_power_db(rx, cell.bandwidth_mhz, noise_figure_db))
}

/// Elevation raster. Cell `(col, row)` covers
/// `[origin_x + col*size, origin_x + (col+1)*size) x [origin_y + row*size, ...)`
/// and holds one elevation value for that whole square.
#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size_m: f64,
    pub ncols: usize,
    pub nrows: usize,
    /// Row-major, row 0 at `origin_y` (south).
    pub elevation_m: Vec<f64>,
}

const TERRAIN_HEADER: &str = "origin_x,origin_y,cell_size_m,ncols,nrows";

impl Terrain {
    pub fn new(origin_x: f64, origin_y: f64, cell_size_m: f64, ncols: usize, nrows: usize, elevation_m: Vec<f64>) -> Result<Self, RadioError> {
        if !(cell_size_m > 0.0) || ncols == 0 || nrows == 0 {
            return Err(RadioError::Domain("terrain needs positive cell size and dimensions".into()));
        }
        if elevation_m.len() != ncols * nrows {
            return Err(RadioError::Domain(format!(
                "terrain has {} values, expected {}",
                elevation_m.len(),
                ncols * nrows
            )));
        }
        if elevation_m.iter().any(|v| !v.is_finite()) {
            return Err(RadioError::Domain("terrain elevations must be finite".into()));
        }
        Ok(Self { origin_x, origin_y, cell_size_m, ncols, nrows, elevation_m })
    }

    pub fn flat(origin_x: f64, origin_y: f64, cell_size_m: f64, ncols: usize, nrows: usize, height: f64) -> Self {
        Self::new(origin_x, origin_y, cell_size_m, ncols, nrows, vec![height; ncols * nrows]).expect("valid flat terrain")
    }

    pub fn width_m(&self) -> f64 {
        self.cell_size_m * self.ncols as f64
    }

    pub fn height_m(&self) -> f64 {
        self.cell_size_m * self.nrows as f64
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.origin_x
            && y >= self.origin_y
            && x <= self.origin_x + self.width_m()
            && y <= self.origin_y + self.height_m()
    }

    fn cell_index(&self, x: f64, y: f64) -> Result<(usize, usize), RadioError> {
        if !self.contains(x, y) {
            return Err(RadioError::OutsideTerrain { x, y });
        }
        let col = (((x - self.origin_x) / self.cell_size_m).floor() as usize).min(self.ncols - 1);
        let row = (((y - self.origin_y) / self.cell_size_m).floor() as usize).min(self.nrows - 1);
        Ok((col, row))
    }

    pub fn elevation(&self, x: f64, y: f64) -> Result<f64, RadioError> {
        let (col, row) = self.cell_index(x, y)?;
        Ok(self.elevation_m[row * self.ncols + col])
    }

    /// Parse the CSV raster. The first line is the literal header, then a
    /// line of header values, then `nrows` rows of `ncols` elevations with
    /// the northernmost row first. The values line may also stand alone
    /// without the literal header.
    pub fn from_csv(text: &str) -> Result<Self, RadioError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate();
        let bad = |line: usize, msg: &str| RadioError::Domain(format!("terrain line {}: {msg}", line + 1));
        let (mut idx, mut first) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
        if first.replace(' ', "") == TERRAIN_HEADER {
            (idx, first) = lines.next().ok_or_else(|| bad(idx + 1, "missing header values"))?;
        }
        let head: Vec<&str> = first.split(',').map(str::trim).collect();
        if head.len() != 5 {
            return Err(bad(idx, "expected origin_x,origin_y,cell_size_m,ncols,nrows"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(idx, &format!("bad number `{s}`")));
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad(idx, &format!("bad count `{s}`")));
        let (ox, oy, size) = (num(head[0])?, num(head[1])?, num(head[2])?);
        let (ncols, nrows) = (count(head[3])?, count(head[4])?);
        let mut file_rows = Vec::with_capacity(nrows);
        for (i, line) in lines {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad(i, &format!("bad elevation `{v}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != ncols {
                return Err(bad(i, &format!("expected {ncols} values, got {}", row.len())));
            }
            file_rows.push(row);
        }
        if file_rows.len() != nrows {
            return Err(RadioError::Domain(format!("terrain has {} rows, expected {nrows}", file_rows.len())));
        }
        let elevation = file_rows.into_iter().rev().flatten().collect();
        Self::new(ox, oy, size, ncols, nrows, elevation)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{TERRAIN_HEADER}\n{},{},{},{},{}\n", self.origin_x, self.origin_y, self.cell_size_m, self.ncols, self.nrows);
        for row in (0..self.nrows).rev() {
            let vals: Vec<String> = self.elevation_m[row * self.ncols..(row + 1) * self.ncols]
                .iter()
                .map(|v| v.to_string())
                .collect();
            out.push_str(&vals.join(","));
            out.push('\n');
        }
        out
    }
}

/// Line-of-sight test between two points over the terrain raster.
///
/// The segment is split at every raster grid-line crossing (spacing never
/// exceeds one cell, and is further subdivided to half a cell). Inside each
/// piece the terrain is constant and the segment height is linear, so the
/// piece is blocked iff the cell elevation exceeds the lower of the two
/// endpoint heights. Without terrain every pair is visible.
pub fn los_check(terrain: Option<&Terrain>, a: &Position3D, b: &Position3D) -> Result<bool, RadioError> {
    let Some(t) = terrain else { return Ok(true) };
    for p in [a, b] {
        if !t.contains(p.x, p.y) {
            return Err(RadioError::OutsideTerrain { x: p.x, y: p.y });
        }
    }
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut params = vec![0.0, 1.0];
    let half = t.cell_size_m / 2.0;
    let steps = (dx.hypot(dy) / half).ceil() as usize;
    params.extend((1..steps).map(|k| k as f64 / steps as f64));
    let mut crossings = |start: f64, delta: f64, origin: f64| {
        if delta == 0.0 {
            return;
        }
        let end = start + delta;
        let (lo, hi) = (start.min(end), start.max(end));
        let first = ((lo - origin) / t.cell_size_m).ceil() as i64;
        let last = ((hi - origin) / t.cell_size_m).floor() as i64;
        for k in first..=last {
            let line = origin + k as f64 * t.cell_size_m;
            let s = (line - start) / delta;
            if s > 0.0 && s < 1.0 {
                params.push(s);
            }
        }
    };
    crossings(a.x, dx, t.origin_x);
    crossings(a.y, dy, t.origin_y);
    params.sort_by(f64::total_cmp);
    params.dedup();
    let z = |s: f64| a.z + s * (b.z - a.z);
    for w in params.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 <= s0 {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        let ground = t.elevation(a.x + mid * dx, a.y + mid * dy)?;
        if ground > z(s0).min(z(s1)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bbox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self { min_x, min_y, max_x, max_y }
    }

    pub fn is_empty(&self) -> bool {
        !(self.max_x > self.min_x && self.max_y > self.min_y)
    }
}

/// RSRP raster. `None` marks points below the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub origin: Position3D,
    pub cell_size_m: f64,
    pub width: usize,
    pub height: usize,
    pub floor_dbm: f64,
    pub values: Vec<Option<f64>>,
}

pub const BELOW_FLOOR: &str = "below_floor";

impl CoverageGrid {
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        self.values[row * self.width + col]
    }

    pub fn point(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin.x + col as f64 * self.cell_size_m,
            self.origin.y + row as f64 * self.cell_size_m,
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_m,y_m,rsrp_dbm\n");
        for row in 0..self.height {
            for col in 0..self.width {
                let (x, y) = self.point(col, row);
                match self.get(col, row) {
                    Some(v) => writeln!(out, "{x:.6},{y:.6},{v:.6}"),
                    None => writeln!(out, "{x:.6},{y:.6},{BELOW_FLOOR}"),
                }
                .expect("write to string");
            }
        }
        out
    }
}

/// Default floor for coverage rasters.
pub const COVERAGE_FLOOR_DBM: f64 = -140.0;

/// RSRP of one cell over a regular grid of receiver positions at `ue_height_m`
/// above ground. The NLoS model applies wherever the terrain blocks the path.
pub fn coverage_grid(cell: &CellConfig, env: &RadioEnvironment, bbox: Bbox, resolution_m: f64, ue_height_m: f64) -> Result<CoverageGrid, RadioError> {
    if !(resolution_m > 0.0) || !resolution_m.is_finite() {
        return Err(RadioError::Domain(format!("resolution must be positive, got {resolution_m}")));
    }
    if bbox.is_empty() {
        return Err(RadioError::EmptyBbox);
    }
    let width = ((bbox.max_x - bbox.min_x) / resolution_m + 1e-9).floor() as usize + 1;
    let height = ((bbox.max_y - bbox.min_y) / resolution_m + 1e-9).floor() as usize + 1;
    let terrain = env.terrain.as_deref();
    let mut values = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let x = bbox.min_x + col as f64 * resolution_m;
            let y = bbox.min_y + row as f64 * resolution_m;
            let ground = match terrain {
                Some(t) => t.elevation(x, y)?,
                None => 0.0,
            };
            let rx = Position3D { x, y, z: ground + ue_height_m };
            let los = los_check(terrain, &cell.position, &rx)?;
            let v = rsrp_unchecked_dbm(cell, &rx, env, los)?;
            values.push((v >= COVERAGE_FLOOR_DBM).then_some(v));
        }
    }
    Ok(CoverageGrid {
        origin: Position3D { x: bbox.min_x, y: bbox.min_y, z: ue_height_m },
        cell_size_m: resolution_m,
        width,
        height,
        floor_dbm: COVERAGE_FLOOR_DBM,
        values,
    })
}
