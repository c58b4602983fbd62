//! Helpers shared by integration tests.

#![allow(dead_code)]

/// Pathloss formulas written out directly from their definitions.
pub mod oracle {
    use std::f64::consts::PI;

    pub fn fspl(d: f64, f_mhz: f64) -> f64 {
        20.0 * (4.0 * PI * d * f_mhz * 1e6 / 299_792_458.0).log10()
    }

    pub fn dbp(h_bs: f64, h_ut: f64, f_mhz: f64) -> f64 {
        2.0 * PI * h_bs * h_ut * f_mhz * 1e6 / 3.0e8
    }

    fn pl1(d3: f64, f_ghz: f64, h: f64) -> f64 {
        let a = 0.03 * h.powf(1.72);
        let b = 0.044 * h.powf(1.72);
        20.0 * (40.0 * PI * d3 * f_ghz / 3.0).log10() + a.min(10.0) * d3.log10() - b.min(14.77)
            + 0.002 * h.log10() * d3
    }

    pub fn los(d2: f64, h_bs: f64, h_ut: f64, f_mhz: f64, h: f64) -> f64 {
        let dz = h_bs - h_ut;
        let d3 = (d2 * d2 + dz * dz).sqrt();
        let bp = dbp(h_bs, h_ut, f_mhz);
        if d2 <= bp {
            pl1(d3, f_mhz / 1e3, h)
        } else {
            let d3bp = (bp * bp + dz * dz).sqrt();
            pl1(d3bp, f_mhz / 1e3, h) + 40.0 * (d3 / d3bp).log10()
        }
    }

    pub fn nlos_prime(d2: f64, h_bs: f64, h_ut: f64, f_mhz: f64, w: f64, h: f64) -> f64 {
        let dz = h_bs - h_ut;
        let d3 = (d2 * d2 + dz * dz).sqrt();
        161.04 - 7.1 * w.log10() + 7.5 * h.log10() - (24.37 - 3.7 * (h / h_bs) * (h / h_bs)) * h_bs.log10()
            + (43.42 - 3.1 * h_bs.log10()) * (d3.log10() - 3.0)
            + 20.0 * (f_mhz / 1e3).log10()
            - (3.2 * (11.75 * h_ut).log10().powi(2) - 4.97)
    }

    pub fn nlos(d2: f64, h_bs: f64, h_ut: f64, f_mhz: f64, w: f64, h: f64) -> f64 {
        los(d2, h_bs, h_ut, f_mhz, h).max(nlos_prime(d2, h_bs, h_ut, f_mhz, w, h))
    }
}
