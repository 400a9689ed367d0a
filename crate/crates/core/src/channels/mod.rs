//! Channel synthesis: cell layout, large-scale fading, small-scale channel
//! vectors and inter-cell interference.

pub mod fading;
pub mod geometry;
pub mod interference;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::complex_gaussian;

pub use fading::{drop_served_ue, large_scale_gain, LargeScaleModel, ServedUe};
pub use geometry::{drop_ues, CellGeometry, Point};
pub use interference::{
    dl_interference_variance, draw_neighbor_powers, mean_ul_interference, rayleigh_scene, ul_interference,
    ul_interference_all_pilots, DataInterferer, InterferenceScene, NeighborActivity, RaInterferer, UlInterference,
};

/// Small-scale propagation model of the BS array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelModelKind {
    /// `h ~ CN(0, βI)`.
    UncorrelatedRayleigh,
    /// `h ~ CN(0, βR)` with the exponential correlation model of a ULA.
    CorrelatedRayleigh { r: f64 },
    /// Deterministic half-wavelength ULA steering vector.
    LosUla,
}

impl ChannelModelKind {
    pub fn validate(&self) -> Result<()> {
        if let ChannelModelKind::CorrelatedRayleigh { r } = *self {
            if !(0.0..1.0).contains(&r) {
                return Err(domain("ChannelModelKind", "r", r));
            }
        }
        Ok(())
    }

    pub fn is_los(&self) -> bool {
        matches!(self, ChannelModelKind::LosUla)
    }
}

/// Draws a channel vector of length `m` with large-scale gain `beta`.
///
/// `theta` is the UE direction: the phase slope of the correlated model and
/// the angle φ of the LoS steering vector.
pub fn sample_channel<R: Rng + ?Sized>(
    kind: ChannelModelKind,
    beta: f64,
    theta: f64,
    m: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    match kind {
        ChannelModelKind::UncorrelatedRayleigh => (0..m).map(|_| complex_gaussian(rng, beta)).collect(),
        ChannelModelKind::CorrelatedRayleigh { r } => {
            // Rows of the Cholesky factor of R give an AR(1) recursion:
            // x_0 = w_0, x_i = a·x_{i-1} + √(1-r²)·w_i with a = r·e^{-jθ}.
            let a = Complex64::from_polar(r, -theta);
            let innovation = (1.0 - r * r).sqrt();
            let scale = beta.sqrt();
            let mut out = Vec::with_capacity(m);
            let mut x = complex_gaussian(rng, 1.0);
            out.push(x * scale);
            for _ in 1..m {
                x = a * x + complex_gaussian(rng, 1.0) * innovation;
                out.push(x * scale);
            }
            out
        }
        ChannelModelKind::LosUla => {
            let amp = beta.sqrt();
            let step = -std::f64::consts::PI * theta.sin();
            (0..m).map(|i| Complex64::from_polar(amp, step * i as f64)).collect()
        }
    }
}

/// `[R]_{ij} = r^{|j-i|}·e^{jθ(j-i)}`.
pub fn exp_correlation_matrix(r: f64, theta: f64, m: usize) -> Result<DMatrix<Complex64>> {
    if !(0.0..1.0).contains(&r) {
        return Err(domain("exp_correlation_matrix", "r", r));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| {
        let lag = j as f64 - i as f64;
        Complex64::from_polar(r.powf(lag.abs()), theta * lag)
    }))
}

/// Lower-triangular `F` with `F·Fᴴ = R` for the exponential model.
///
/// Closed form: `F_{ij} = a^{i-j}·c_j` for `i ≥ j`, with `a = r·e^{-jθ}`,
/// `c_0 = 1` and `c_j = √(1-r²)` otherwise.
pub fn exp_correlation_sqrt(r: f64, theta: f64, m: usize) -> Result<DMatrix<Complex64>> {
    if !(0.0..1.0).contains(&r) {
        return Err(domain("exp_correlation_sqrt", "r", r));
    }
    let innovation = (1.0 - r * r).sqrt();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i < j {
            return Complex64::new(0.0, 0.0);
        }
        let c = if j == 0 { 1.0 } else { innovation };
        let lag = (i - j) as f64;
        Complex64::from_polar(r.powf(lag) * c, -theta * lag)
    }))
}

/// Everything drawn for one pilot of one RA block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Channel of each contender to the serving BS.
    pub h: Vec<Vec<Complex64>>,
    /// UL interference after pilot correlation.
    pub ul_interference_vec: Vec<Complex64>,
    /// `‖ul_interference_vec‖²/M`.
    pub omega_t: f64,
    /// DL interference variance `Υ_k` of each contender.
    pub dl_interference_var: Vec<f64>,
}
