//! Pathloss and link-budget functions checked against a separate
//! implementation of the same formulas, plus frozen reference values.

use ntn_ric::netmodel::{CellConfig, CellRole, EnergyModel};
use ntn_ric::propagation::*;
use ntn_ric::RadioError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

mod common;
use common::oracle;

fn env(h: f64, w: f64) -> RadioEnvironment {
    RadioEnvironment { building_height_m: h, street_width_m: w, ..RadioEnvironment::default() }
}

fn geom(d2: f64, h_bs: f64, h_ut: f64, f: f64) -> LinkGeometry {
    LinkGeometry::from_heights(d2, h_bs, h_ut, f)
}

fn cell(tx_dbm: f64, bw_mhz: f64, gain: f64, fc: f64, pos: Position3D, los_model: LosModel) -> CellConfig {
    CellConfig {
        id: 1,
        position: pos,
        tx_power_dbm: tx_dbm,
        fc_mhz: fc,
        bandwidth_mhz: bw_mhz,
        role: CellRole::Capacity,
        antenna_gain_dbi: gain,
        switchable: true,
        energy: EnergyModel { p_fixed_w: 50.0, delta_p: 15.0, p_sleep_w: 5.0 },
        duplex_dl_fraction: 1.0,
        los_model,
    }
}

#[test]
fn random_draws_match_oracle() {
    let mut r = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..500 {
        let d2 = r.gen_range(10.0..10_000.0);
        let h_bs = r.gen_range(10.0..150.0);
        let h_ut = r.gen_range(1.0..10.0);
        let f = r.gen_range(500.0..7000.0);
        let h = r.gen_range(5.0..50.0);
        let w = r.gen_range(5.0..50.0);
        let e = env(h, w);
        let g = geom(d2, h_bs, h_ut, f);

        let los = rma_los_pathloss_db(&g, &e).unwrap();
        assert!((los.db - oracle::los(d2, h_bs, h_ut, f, h)).abs() <= TOL, "LoS at {g:?}");
        let nlos = rma_nlos_pathloss_db(&g, &e).unwrap();
        assert!((nlos.db - oracle::nlos(d2, h_bs, h_ut, f, w, h)).abs() <= TOL, "NLoS at {g:?}");
        assert_eq!(nlos.sigma_db, 8.0);
        let expected_sigma = if d2 <= oracle::dbp(h_bs, h_ut, f) { 4.0 } else { 6.0 };
        assert_eq!(los.sigma_db, expected_sigma);

        let fs = fspl_db(g.d3d_m, f).unwrap();
        assert!((fs - oracle::fspl(g.d3d_m, f)).abs() <= TOL);
        assert!((breakpoint_distance_m(&g) - oracle::dbp(h_bs, h_ut, f)).abs() <= 1e-9 * oracle::dbp(h_bs, h_ut, f));
    }
}

#[test]
fn los_branches_meet_at_breakpoint() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let e = env(5.0, 5.0);
    for _ in 0..100 {
        let h_bs = r.gen_range(10.0..60.0);
        let h_ut = r.gen_range(1.0..3.0);
        let f = r.gen_range(700.0..4000.0);
        let bp = oracle::dbp(h_bs, h_ut, f);
        let at = rma_los_pathloss_db(&geom(bp, h_bs, h_ut, f), &e).unwrap().db;
        let above = rma_los_pathloss_db(&geom(bp * (1.0 + 1e-13), h_bs, h_ut, f), &e).unwrap().db;
        assert!((at - above).abs() <= TOL, "jump {} at dBP {bp}", at - above);
    }
}

#[test]
fn frozen_reference_values() {
    // Values evaluated once in double precision with an external script.
    assert!((fspl_db(100.0, 2650.0).unwrap() - 80.912_700_700_619_52).abs() <= TOL);
    let unit = 299_792_458.0 / (4.0 * std::f64::consts::PI * 2650e6);
    assert!(fspl_db(unit, 2650.0).unwrap().abs() <= TOL);
    let e = env(5.0, 5.0);
    let g = geom(1000.0, 35.0, 1.5, 2650.0);
    assert!((rma_los_pathloss_db(&g, &e).unwrap().db - 103.043_202_722_367_71).abs() <= TOL);
    assert!((rma_nlos_pathloss_db(&g, &e).unwrap().db - 132.282_488_606_332_07).abs() <= TOL);
    let far = geom(5000.0, 35.0, 1.5, 2650.0);
    assert!((rma_los_pathloss_db(&far, &e).unwrap().db - 124.604_443_442_352_29).abs() <= TOL);
    assert!((breakpoint_distance_m(&geom(100.0, 60.0, 1.5, 2650.0)) - 4995.132_319_207_77).abs() <= 1e-8);
    assert!(breakpoint_distance_m(&geom(100.0, 1000.0, 1.5, 3300.0)) > 10_000.0);
    assert!((noise_floor_dbm(20e6, 7.0) - (-93.989_700_043_360_19)).abs() <= TOL);
}

#[test]
fn closed_form_identities() {
    let f100 = fspl_db(100.0, 2650.0).unwrap();
    let f200 = fspl_db(200.0, 2650.0).unwrap();
    assert!((f200 - f100 - 20.0 * 2f64.log10()).abs() <= 1e-12);

    let g = geom(800.0, 60.0, 1.5, 2650.0);
    let g3 = geom(800.0, 60.0, 4.5, 2650.0);
    assert!((breakpoint_distance_m(&g3) / breakpoint_distance_m(&g) - 3.0).abs() <= 1e-12);

    // PL' active at 1 km: doubling W lowers it by 7.1 log10(2)
    let g = geom(1000.0, 35.0, 1.5, 2650.0);
    let a = rma_nlos_pathloss_db(&g, &env(5.0, 5.0)).unwrap().db;
    let b = rma_nlos_pathloss_db(&g, &env(5.0, 10.0)).unwrap().db;
    assert!((a - b - 7.1 * 2f64.log10()).abs() <= 1e-9);

    assert!(fspl_db(0.0, 2650.0).is_err());
    assert!(fspl_db(10.0, -1.0).is_err());
}

#[test]
fn los_pathloss_increases_with_distance() {
    let e = env(5.0, 5.0);
    for &(h_bs, h_ut, f) in &[(35.0, 1.5, 2650.0), (60.0, 1.5, 3600.0), (60.0, 1.5, 700.0)] {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..10_000 {
            let d = 10.0 + (10_000.0 - 10.0) * i as f64 / 9_999.0;
            let pl = rma_los_pathloss_db(&geom(d, h_bs, h_ut, f), &e).unwrap().db;
            assert!(pl > prev, "not increasing at {d} m");
            prev = pl;
        }
    }
}

#[test]
fn range_policy() {
    let strict = RadioEnvironment { range_policy: RangePolicy::Strict, ..env(5.0, 5.0) };
    assert!(matches!(rma_los_pathloss_db(&geom(5.0, 35.0, 1.5, 2650.0), &strict), Err(RadioError::OutOfRange { .. })));
    assert!(rma_los_pathloss_db(&geom(12_000.0, 35.0, 1.5, 2650.0), &strict).is_err());
    let clamp = env(5.0, 5.0);
    let near = rma_los_pathloss_db(&geom(5.0, 35.0, 1.5, 2650.0), &clamp).unwrap().db;
    let at_min = rma_los_pathloss_db(&geom(10.0, 35.0, 1.5, 2650.0), &clamp).unwrap().db;
    assert_eq!(near, at_min);
}

#[test]
fn payload_link_budget() {
    let c = cell(-2.0, 10.0, 2.0, 2650.0, Position3D { x: 0.0, y: 0.0, z: 60.0 }, LosModel::FreeSpace);
    let ue = Position3D { x: 100.0, y: 0.0, z: 1.5 };
    let rsrp = rsrp_dbm(&c, true, &ue, &RadioEnvironment::default(), true).unwrap();
    assert!((rsrp - (-109.972_466_440_787_03)).abs() <= 1e-9, "rsrp {rsrp}");
    assert!(matches!(rsrp_dbm(&c, false, &ue, &RadioEnvironment::default(), true), Err(RadioError::CellOff(1))));

    let wide = CellConfig { bandwidth_mhz: 20.0, ..c.clone() };
    let r2 = rsrp_dbm(&wide, true, &ue, &RadioEnvironment::default(), true).unwrap();
    assert!((rsrp - r2 - 10.0 * 2f64.log10()).abs() <= 1e-12);

    let extra = RadioEnvironment { extra_shadowing_db: 6.0, ..RadioEnvironment::default() };
    let r3 = rsrp_dbm(&c, true, &ue, &extra, true).unwrap();
    assert!((rsrp - r3 - 6.0).abs() <= 1e-12);
}

#[test]
fn snr_identities() {
    let nf = noise_floor_dbm(20e6, 7.0);
    assert!(snr_from_rx_power_db(nf, 20.0, 7.0).abs() <= 1e-12);
    let a = snr_from_rx_power_db(-80.0, 20.0, 7.0);
    let b = snr_from_rx_power_db(-80.0, 40.0, 7.0);
    assert!((a - b - 10.0 * 2f64.log10()).abs() <= 1e-12);
}

#[test]
fn lognormal_draws_are_seeded() {
    let e = RadioEnvironment { shadowing_mode: ShadowingMode::Lognormal, rng_seed: 99, ..RadioEnvironment::default() };
    let p = Position3D { x: 10.0, y: 20.0, z: 1.5 };
    let a = shadowing_draw_db(3, &p, 8.0, &e);
    assert_eq!(a, shadowing_draw_db(3, &p, 8.0, &e));
    assert_ne!(a, shadowing_draw_db(4, &p, 8.0, &e));
    assert_eq!(shadowing_draw_db(3, &p, 8.0, &RadioEnvironment::default()), 0.0);
}
