//! Distance-dependent pathloss with log-normal shadowing.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::geometry::{CellGeometry, Point};
use crate::error::{domain, Result};

/// Redraws of the shadowing per position before the position itself is
/// redrawn.
const SHADOW_REDRAWS: usize = 100;

/// `β = calibration · d^{-exponent} · 10^{s/10}` with `s ~ N(0, shadow_std_db²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleModel {
    pub pathloss_exponent: f64,
    pub shadow_std_db: f64,
    pub calibration: f64,
}

impl LargeScaleModel {
    pub fn new(pathloss_exponent: f64, shadow_std_db: f64, calibration: f64) -> Result<Self> {
        if !(pathloss_exponent > 2.0) {
            return Err(domain("LargeScaleModel", "pathloss_exponent", pathloss_exponent));
        }
        if !(shadow_std_db >= 0.0) {
            return Err(domain("LargeScaleModel", "shadow_std_db", shadow_std_db));
        }
        if !(calibration > 0.0 && calibration.is_finite()) {
            return Err(domain("LargeScaleModel", "calibration", calibration));
        }
        Ok(Self {
            pathloss_exponent,
            shadow_std_db,
            calibration,
        })
    }

    /// Chooses the intercept so that a UE at `reference_distance` with median
    /// shadowing sees SNR `ρβ/σ²` equal to `median_snr_db`.
    pub fn calibrated(
        pathloss_exponent: f64,
        shadow_std_db: f64,
        reference_distance: f64,
        median_snr_db: f64,
        rho: f64,
        sigma2: f64,
    ) -> Result<Self> {
        let snr = 10f64.powf(median_snr_db / 10.0);
        let calibration = snr * sigma2 / rho * reference_distance.powf(pathloss_exponent);
        Self::new(pathloss_exponent, shadow_std_db, calibration)
    }

    /// Non-LoS urban micro: exponent 3.8, 10 dB shadowing, 0 dB at a corner.
    pub fn non_los(geom: &CellGeometry, rho: f64, sigma2: f64) -> Result<Self> {
        Self::calibrated(3.8, 10.0, geom.hex_radius_m(), 0.0, rho, sigma2)
    }

    /// LoS: exponent 2.5, 4 dB shadowing, 33 dB at a corner.
    pub fn los(geom: &CellGeometry, rho: f64, sigma2: f64) -> Result<Self> {
        Self::calibrated(2.5, 4.0, geom.hex_radius_m(), 33.0, rho, sigma2)
    }

    pub fn median_gain(&self, distance: f64) -> f64 {
        self.calibration * distance.powf(-self.pathloss_exponent)
    }

    pub fn gain(&self, distance: f64, shadow_db: f64) -> f64 {
        self.median_gain(distance) * 10f64.powf(shadow_db / 10.0)
    }

    pub fn sample_shadow_db<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.shadow_std_db * z
    }
}

/// One link gain between `pos` and a BS at `bs`, with fresh shadowing.
pub fn large_scale_gain<R: Rng + ?Sized>(pos: Point, bs: Point, model: &LargeScaleModel, rng: &mut R) -> Result<f64> {
    let d = pos.distance(bs);
    if !(d > 0.0) {
        return Err(domain("large_scale_gain", "distance", d));
    }
    let s = model.sample_shadow_db(rng);
    Ok(model.gain(d, s))
}

/// A UE together with its gains towards every BS of the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ServedUe {
    pub position: Point,
    pub cell: usize,
    /// `gains[j]` is the large-scale gain to BS `j`.
    pub gains: Vec<f64>,
}

impl ServedUe {
    pub fn serving_gain(&self) -> f64 {
        self.gains[self.cell]
    }
}

/// Drops a UE uniformly in `cell` and draws independent shadowing to each BS,
/// keeping only draws in which the serving BS has the strongest gain.
pub fn drop_served_ue<R: Rng + ?Sized>(
    geom: &CellGeometry,
    model: &LargeScaleModel,
    cell: usize,
    rng: &mut R,
) -> ServedUe {
    let bs = geom.bs_positions();
    let mut gains = vec![0.0; bs.len()];
    loop {
        let position = geom.sample_in_cell(cell, rng);
        let medians: Vec<f64> = bs.iter().map(|&b| model.median_gain(position.distance(b))).collect();
        for _ in 0..SHADOW_REDRAWS {
            for (g, &m) in gains.iter_mut().zip(&medians) {
                *g = m * 10f64.powf(model.sample_shadow_db(rng) / 10.0);
            }
            let own = gains[cell];
            if gains.iter().all(|&g| g <= own) {
                return ServedUe { position, cell, gains };
            }
        }
    }
}
