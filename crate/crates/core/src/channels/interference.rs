//! Inter-cell interference on the RA pilots.
//!
//! The UL term seen on pilot `t` after correlation with `ψ_t/‖ψ_t‖` is
//! `Σ_l w_l·(d_lᵀψ_t*/‖ψ_t‖) + Σ_k √(ρ_{t,k}τ_p)·g_{t,k}`, where the first sum
//! runs over data UEs in neighbouring cells and the second over RA UEs of
//! other cells using the same pilot.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fading::{drop_served_ue, LargeScaleModel, ServedUe};
use super::geometry::CellGeometry;
use crate::error::{domain, Result};
use crate::rng::{complex_gaussian, stream};

/// A data UE of another cell; `channel` is `w_l` and already includes the
/// square root of its transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct DataInterferer {
    pub channel: Vec<Complex64>,
}

/// An RA UE of another cell transmitting the same pilot.
#[derive(Debug, Clone, PartialEq)]
pub struct RaInterferer {
    pub power: f64,
    pub channel: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterferenceScene {
    pub data: Vec<DataInterferer>,
    pub ra: Vec<RaInterferer>,
}

/// One realization of the UL interference on a pilot.
#[derive(Debug, Clone, PartialEq)]
pub struct UlInterference {
    pub vector: Vec<Complex64>,
    /// `‖vector‖²/M`
    pub omega: f64,
}

fn check_lengths(scene: &InterferenceScene, m: usize) -> Result<()> {
    let bad = scene
        .data
        .iter()
        .map(|d| d.channel.len())
        .chain(scene.ra.iter().map(|r| r.channel.len()))
        .find(|&len| len != m);
    match bad {
        Some(len) => Err(domain("ul_interference", "channel length", len as f64)),
        None => Ok(()),
    }
}

fn project<R: Rng + ?Sized>(
    scene: &InterferenceScene,
    m: usize,
    tau_p: usize,
    pilots: usize,
    rng: &mut R,
) -> Result<Vec<UlInterference>> {
    check_lengths(scene, m)?;
    if tau_p == 0 {
        return Err(domain("ul_interference", "tau_p", 0.0));
    }
    let mut out = Vec::with_capacity(pilots);
    for t in 0..pilots {
        let mut vector = vec![Complex64::new(0.0, 0.0); m];
        for d in &scene.data {
            let s = complex_gaussian(rng, 1.0);
            for (v, w) in vector.iter_mut().zip(&d.channel) {
                *v += w * s;
            }
        }
        if t == 0 {
            for r in &scene.ra {
                let a = (r.power * tau_p as f64).sqrt();
                for (v, g) in vector.iter_mut().zip(&r.channel) {
                    *v += g * a;
                }
            }
        }
        let omega = vector.iter().map(|v| v.norm_sqr()).sum::<f64>() / m as f64;
        out.push(UlInterference { vector, omega });
    }
    Ok(out)
}

/// UL interference after correlating with each of the `tau_p` orthonormal
/// pilots. The data sequences `d_l` are i.i.d. `CN(0, 1)`, so the projections
/// onto distinct pilots are independent unit-variance coefficients. RA
/// interferers are placed on pilot 0.
pub fn ul_interference_all_pilots<R: Rng + ?Sized>(
    scene: &InterferenceScene,
    m: usize,
    tau_p: usize,
    rng: &mut R,
) -> Result<Vec<UlInterference>> {
    project(scene, m, tau_p, tau_p, rng)
}

/// UL interference on a single pilot.
pub fn ul_interference<R: Rng + ?Sized>(
    scene: &InterferenceScene,
    m: usize,
    tau_p: usize,
    rng: &mut R,
) -> Result<UlInterference> {
    Ok(project(scene, m, tau_p, 1, rng)?.pop().expect("one pilot requested"))
}

/// Activity in the six neighbouring cells during an RA block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborActivity {
    /// Active data UEs per neighbouring cell.
    pub ues_per_cell: usize,
    /// UL transmit power of each data UE.
    pub ue_power: f64,
    /// DL transmit power of each neighbouring BS.
    pub bs_power: f64,
}

impl NeighborActivity {
    pub fn silent() -> Self {
        Self {
            ues_per_cell: 0,
            ue_power: 0.0,
            bs_power: 0.0,
        }
    }

    /// Ten data UEs per cell, each BS serving them with power `q` apiece.
    pub fn data_transmission(rho: f64, q: f64) -> Self {
        Self {
            ues_per_cell: 10,
            ue_power: rho,
            bs_power: 10.0 * q,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.ues_per_cell == 0 && self.bs_power == 0.0
    }
}

/// Drops the data UEs of all neighbouring cells and returns their received
/// powers `ρβ_{w,l}` at BS 0.
pub fn draw_neighbor_powers<R: Rng + ?Sized>(
    geom: &CellGeometry,
    model: &LargeScaleModel,
    activity: &NeighborActivity,
    rng: &mut R,
) -> Vec<f64> {
    let mut powers = Vec::with_capacity(activity.ues_per_cell * geom.neighbor_count());
    for cell in 1..geom.cell_count() {
        for _ in 0..activity.ues_per_cell {
            let ue = drop_served_ue(geom, model, cell, rng);
            powers.push(activity.ue_power * ue.gains[0]);
        }
    }
    powers
}

/// Uncorrelated Rayleigh data interferers with the given received powers.
pub fn rayleigh_scene<R: Rng + ?Sized>(powers: &[f64], m: usize, rng: &mut R) -> InterferenceScene {
    let data = powers
        .iter()
        .map(|&p| DataInterferer {
            channel: (0..m).map(|_| complex_gaussian(rng, p)).collect(),
        })
        .collect();
    InterferenceScene { data, ra: Vec::new() }
}

/// Average UL interference power `ω̄` over UE drops and shadowing.
///
/// Each drop contributes its conditional mean `Σ_l ρβ_{w,l}`, which is the
/// expectation of `ω_t` over the small-scale fading and data symbols.
pub fn mean_ul_interference(
    geom: &CellGeometry,
    model: &LargeScaleModel,
    activity: &NeighborActivity,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(domain("mean_ul_interference", "trials", 0.0));
    }
    if activity.ues_per_cell == 0 || activity.ue_power == 0.0 {
        return Ok(0.0);
    }
    use rayon::prelude::*;
    let per_trial: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            draw_neighbor_powers(geom, model, activity, &mut rng).iter().sum()
        })
        .collect();
    Ok(per_trial.iter().sum::<f64>() / trials as f64)
}

/// DL interference variance `Υ_k` at a serving-cell UE: the neighbouring BS
/// powers weighted by the UE's gains to those BSs.
pub fn dl_interference_variance(ue: &ServedUe, activity: &NeighborActivity) -> f64 {
    ue.gains
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != ue.cell)
        .map(|(_, g)| activity.bs_power * g)
        .sum()
}
