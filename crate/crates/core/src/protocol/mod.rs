//! The four-step SUCRe access procedure over synthesized channels.
//!
//! Step 1: active UEs send random RA pilots; the BS correlates with each
//! pilot to get `y_t`. Step 2: the BS beamforms DL pilot `t` along
//! `y_t*/‖y_t‖` and each contender observes a scalar `z_k`. Step 3: each
//! contender estimates the gain sum on its pilot and repeats only if it
//! believes it is the strongest. Step 4: a pilot admits a UE iff exactly one
//! UE repeated on it.

pub mod crowded;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::analytics::PilotLoadModel;
use crate::channels::{
    dl_interference_variance, draw_neighbor_powers, drop_served_ue, mean_ul_interference, rayleigh_scene,
    sample_channel, ul_interference_all_pilots, CellGeometry, ChannelModelKind, LargeScaleModel, NeighborActivity,
    ServedUe,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate_alpha, AlphaEstimate, EstimatorKind, SearchConfig, UeLinkParams};
use crate::rng::complex_gaussian;

pub use crowded::{run_crowded_scenario, AccessScheme, AttemptTrace, CrowdedConfig, CrowdedStats};

/// Seed of the drop average that fixes `ω̄` for a network.
const OMEGA_BAR_SEED: u64 = 0x5eed_0ba5;
/// Drops averaged for `ω̄`.
const OMEGA_BAR_TRIALS: usize = 20_000;

/// Cell layout, propagation and power settings shared by all blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub geometry: CellGeometry,
    pub large_scale: LargeScaleModel,
    pub channel: ChannelModelKind,
    /// Full UL transmit power ρ.
    pub rho: f64,
    /// DL pilot power q.
    pub q: f64,
    pub sigma2: f64,
    pub neighbors: NeighborActivity,
    /// Average UL interference `ω̄`, known to every UE.
    pub omega_bar: f64,
}

impl NetworkModel {
    /// Default network for a channel model: unit powers and noise, the
    /// matching pathloss model, and optionally ten data UEs in every
    /// neighbouring cell. `ω̄` is averaged over 20 000 drops.
    pub fn standard(channel: ChannelModelKind, interference: bool) -> Result<Self> {
        channel.validate()?;
        let geometry = CellGeometry::default();
        let (rho, q, sigma2) = (1.0, 1.0, 1.0);
        let large_scale = if channel.is_los() {
            LargeScaleModel::los(&geometry, rho, sigma2)?
        } else {
            LargeScaleModel::non_los(&geometry, rho, sigma2)?
        };
        let neighbors = if interference {
            NeighborActivity::data_transmission(rho, q)
        } else {
            NeighborActivity::silent()
        };
        let omega_bar = mean_ul_interference(&geometry, &large_scale, &neighbors, OMEGA_BAR_TRIALS, OMEGA_BAR_SEED)?;
        Ok(Self {
            geometry,
            large_scale,
            channel,
            rho,
            q,
            sigma2,
            neighbors,
            omega_bar,
        })
    }

    pub fn has_interference(&self) -> bool {
        !self.neighbors.is_silent()
    }
}

/// UL pilot power of each attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerPolicy {
    /// Every UE sends with the full power ρ.
    Constant,
    /// Full power reduced by a dB amount drawn uniformly in `[0, max_reduction_db]`.
    RandomReduction { max_reduction_db: f64 },
}

/// Reference quantity the bias `δ` is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasScale {
    /// `ε = δ·β/√M - ω̄/2`: δ standard deviations of `‖h‖²/M`.
    Beta,
    /// `ε = δ·ρβτ_p/√M - ω̄/2`: the same relative spread applied to the
    /// received pilot gain the decision rule compares against.
    SignalGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPolicy {
    pub delta: f64,
    pub scale: BiasScale,
}

impl BiasPolicy {
    pub fn none() -> Self {
        Self {
            delta: 0.0,
            scale: BiasScale::SignalGain,
        }
    }

    /// `ε_k` for a UE with link `p` in a network with mean interference `omega_bar`.
    pub fn epsilon(&self, p: &UeLinkParams, omega_bar: f64) -> f64 {
        let unit = match self.scale {
            BiasScale::Beta => p.beta,
            BiasScale::SignalGain => p.signal_gain(),
        };
        self.delta * unit / (p.antennas as f64).sqrt() - 0.5 * omega_bar
    }
}

/// Everything needed to run RA blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaBlockConfig {
    pub network: NetworkModel,
    pub antennas: usize,
    pub load: PilotLoadModel,
    pub power: PowerPolicy,
    pub bias: BiasPolicy,
    pub estimator: EstimatorKind,
    pub search: SearchConfig,
}

impl RaBlockConfig {
    pub fn new(network: NetworkModel, antennas: usize, load: PilotLoadModel) -> Self {
        Self {
            network,
            antennas,
            load,
            power: PowerPolicy::Constant,
            bias: BiasPolicy::none(),
            estimator: EstimatorKind::Approx2,
            search: SearchConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::Config("antennas must be at least 1".into()));
        }
        self.load.validate()?;
        self.network.channel.validate()?;
        if let PowerPolicy::RandomReduction { max_reduction_db } = self.power {
            if !(max_reduction_db >= 0.0) {
                return Err(Error::Config(format!("invalid power reduction {max_reduction_db} dB")));
            }
        }
        Ok(())
    }

    pub fn tau_p(&self) -> usize {
        self.load.tau_p
    }

    fn draw_rho<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.power {
            PowerPolicy::Constant => self.network.rho,
            PowerPolicy::RandomReduction { max_reduction_db } => {
                let cut: f64 = rng.random_range(0.0..=max_reduction_db);
                self.network.rho * 10f64.powf(-cut / 10.0)
            }
        }
    }

    fn link(&self, ue: &ServedUe, rho: f64) -> UeLinkParams {
        UeLinkParams {
            rho,
            beta: ue.serving_gain(),
            tau_p: self.tau_p(),
            q: self.network.q,
            sigma2: self.network.sigma2,
            upsilon: dl_interference_variance(ue, &self.network.neighbors),
            antennas: self.antennas,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Repeat,
    Inactive,
}

/// Step-3 rule: repeat iff `ρβτ_p > α̂/2 + ε` (strictly).
pub fn ue_decision(estimate: &AlphaEstimate, p: &UeLinkParams, eps: f64) -> Decision {
    if p.signal_gain() > estimate.value / 2.0 + eps {
        Decision::Repeat
    } else {
        Decision::Inactive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeClass {
    /// Nobody sent the pilot.
    Unused,
    /// A lone contender repeated and was admitted.
    SingletonAdmitted,
    /// Several contenders, exactly one repeated.
    Resolved,
    /// Nobody repeated (including a lone contender that held back).
    FalseNegative,
    /// Two or more repeated.
    FalsePositive,
}

impl OutcomeClass {
    /// Whether the pilot admits a UE in Step 4.
    pub fn admits(self) -> bool {
        matches!(self, OutcomeClass::SingletonAdmitted | OutcomeClass::Resolved)
    }
}

pub fn classify_outcome(contenders: usize, repeaters: usize) -> Result<OutcomeClass> {
    if repeaters > contenders {
        return Err(Error::Precondition(format!(
            "{repeaters} repeaters out of {contenders} contenders"
        )));
    }
    Ok(match (contenders, repeaters) {
        (0, _) => OutcomeClass::Unused,
        (_, 0) => OutcomeClass::FalseNegative,
        (1, 1) => OutcomeClass::SingletonAdmitted,
        (_, 1) => OutcomeClass::Resolved,
        _ => OutcomeClass::FalsePositive,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotOutcome {
    pub pilot: usize,
    pub contenders: usize,
    pub repeaters: usize,
    pub class: OutcomeClass,
    /// Index (into the block's participant list) of the admitted UE.
    pub admitted: Option<usize>,
}

/// A UE sending an RA pilot in a block.
#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub ue: ServedUe,
    pub pilot: usize,
    pub rho: f64,
}

/// Draws the activations of one block: `Binomial(K0, P_a)` UEs, each with a
/// uniform pilot, a fresh position and fresh shadowing.
pub fn draw_participants<R: Rng + ?Sized>(cfg: &RaBlockConfig, rng: &mut R) -> Result<Vec<Participant>> {
    let active = Binomial::new(cfg.load.k0, cfg.load.pa)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(rng);
    let mut out = Vec::with_capacity(active as usize);
    for _ in 0..active {
        let ue = drop_served_ue(&cfg.network.geometry, &cfg.network.large_scale, 0, rng);
        let pilot = rng.random_range(0..cfg.tau_p());
        let rho = cfg.draw_rho(rng);
        out.push(Participant { ue, pilot, rho });
    }
    Ok(out)
}

fn outcomes_from_decisions(tau_p: usize, participants: &[Participant], repeat: &[bool]) -> Result<Vec<PilotOutcome>> {
    let mut count = vec![0usize; tau_p];
    let mut reps = vec![0usize; tau_p];
    let mut last_rep = vec![None; tau_p];
    for (i, p) in participants.iter().enumerate() {
        count[p.pilot] += 1;
        if repeat[i] {
            reps[p.pilot] += 1;
            last_rep[p.pilot] = Some(i);
        }
    }
    (0..tau_p)
        .map(|t| {
            let class = classify_outcome(count[t], reps[t])?;
            Ok(PilotOutcome {
                pilot: t,
                contenders: count[t],
                repeaters: reps[t],
                class,
                admitted: if class.admits() { last_rep[t] } else { None },
            })
        })
        .collect()
}

/// Step-3 decisions of the given participants, one per participant.
pub fn sucre_decisions<R: Rng + ?Sized>(
    cfg: &RaBlockConfig,
    participants: &[Participant],
    rng: &mut R,
) -> Result<Vec<bool>> {
    let m = cfg.antennas;
    let tau = cfg.tau_p();
    let net = &cfg.network;

    let interference = if net.has_interference() && !participants.is_empty() {
        let powers = draw_neighbor_powers(&net.geometry, &net.large_scale, &net.neighbors, rng);
        let scene = rayleigh_scene(&powers, m, rng);
        Some(ul_interference_all_pilots(&scene, m, tau, rng)?)
    } else {
        None
    };

    let channels: Vec<Vec<Complex64>> = participants
        .iter()
        .map(|p| {
            let theta = p.ue.position.azimuth_from(net.geometry.bs_positions()[0]);
            sample_channel(net.channel, p.ue.serving_gain(), theta, m, rng)
        })
        .collect();

    let mut repeat = vec![false; participants.len()];
    for t in 0..tau {
        let members: Vec<usize> = (0..participants.len())
            .filter(|&i| participants[i].pilot == t)
            .collect();
        if members.is_empty() {
            continue;
        }
        // Step 1: y_t = Σ √(ρτ) h + W ψ*/‖ψ‖ + n
        let mut y: Vec<Complex64> = match &interference {
            Some(u) => u[t].vector.clone(),
            None => vec![Complex64::new(0.0, 0.0); m],
        };
        for &i in &members {
            let a = (participants[i].rho * tau as f64).sqrt();
            for (yv, h) in y.iter_mut().zip(&channels[i]) {
                *yv += h * a;
            }
        }
        for yv in y.iter_mut() {
            *yv += complex_gaussian(rng, net.sigma2);
        }
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        // Step 2: z_k = √(qτ) hᵀ y*/‖y‖ + υ_k + η_k
        for &i in &members {
            let p = cfg.link(&participants[i].ue, participants[i].rho);
            let inner: Complex64 = channels[i].iter().zip(&y).map(|(h, yv)| h * yv.conj()).sum();
            let z = inner * ((net.q * tau as f64).sqrt() / norm)
                + complex_gaussian(rng, p.upsilon)
                + complex_gaussian(rng, net.sigma2);
            // Step 3
            repeat[i] = match estimate_alpha(cfg.estimator, z, &p, &cfg.search) {
                Ok(est) => ue_decision(&est, &p, cfg.bias.epsilon(&p, net.omega_bar)) == Decision::Repeat,
                Err(Error::DegenerateObservation) => false,
                Err(e) => {
                    log::warn!("estimation failed, UE stays silent: {e}");
                    false
                }
            };
        }
    }
    Ok(repeat)
}

/// SUCRe outcome of every pilot for the given participants.
pub fn run_block_with<R: Rng + ?Sized>(
    cfg: &RaBlockConfig,
    participants: &[Participant],
    rng: &mut R,
) -> Result<Vec<PilotOutcome>> {
    let repeat = sucre_decisions(cfg, participants, rng)?;
    outcomes_from_decisions(cfg.tau_p(), participants, &repeat)
}

/// Baseline outcome: every contender repeats, so only lone contenders succeed.
pub fn baseline_outcomes(tau_p: usize, participants: &[Participant]) -> Result<Vec<PilotOutcome>> {
    outcomes_from_decisions(tau_p, participants, &vec![true; participants.len()])
}

/// One SUCRe RA block with fresh activations.
pub fn run_ra_block<R: Rng + ?Sized>(cfg: &RaBlockConfig, rng: &mut R) -> Result<Vec<PilotOutcome>> {
    cfg.validate()?;
    let participants = draw_participants(cfg, rng)?;
    run_block_with(cfg, &participants, rng)
}

/// One baseline RA block; pilot selection consumes the stream exactly as
/// [`run_ra_block`] does.
pub fn run_baseline_block<R: Rng + ?Sized>(cfg: &RaBlockConfig, rng: &mut R) -> Result<Vec<PilotOutcome>> {
    cfg.validate()?;
    let participants = draw_participants(cfg, rng)?;
    baseline_outcomes(cfg.tau_p(), &participants)
}

/// A collision of exactly `n` UEs on one pilot, with the block's
/// interference and power policy. Returns the outcome of that pilot.
pub fn run_collision<R: Rng + ?Sized>(cfg: &RaBlockConfig, n: usize, rng: &mut R) -> Result<PilotOutcome> {
    cfg.validate()?;
    let participants: Vec<Participant> = (0..n)
        .map(|_| {
            let ue = drop_served_ue(&cfg.network.geometry, &cfg.network.large_scale, 0, rng);
            let rho = cfg.draw_rho(rng);
            Participant { ue, pilot: 0, rho }
        })
        .collect();
    let repeat = sucre_decisions(cfg, &participants, rng)?;
    Ok(outcomes_from_decisions(cfg.tau_p(), &participants, &repeat)?.swap_remove(0))
}

/// Activity statistic `‖y_t‖²/M`, which tends to `Σ ρβτ_p + ω_t + σ²`.
pub fn activity_statistic(y: &[Complex64]) -> f64 {
    y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64
}

/// Declares pilot `t` used when the activity statistic exceeds `threshold`.
pub fn detect_active(y: &[Complex64], threshold: f64) -> bool {
    activity_statistic(y) > threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;

    #[test]
    fn classification_table() {
        assert_eq!(classify_outcome(0, 0).unwrap(), OutcomeClass::Unused);
        assert_eq!(classify_outcome(1, 1).unwrap(), OutcomeClass::SingletonAdmitted);
        assert_eq!(classify_outcome(1, 0).unwrap(), OutcomeClass::FalseNegative);
        assert_eq!(classify_outcome(2, 1).unwrap(), OutcomeClass::Resolved);
        assert_eq!(classify_outcome(3, 0).unwrap(), OutcomeClass::FalseNegative);
        assert_eq!(classify_outcome(2, 2).unwrap(), OutcomeClass::FalsePositive);
        assert!(classify_outcome(1, 2).is_err());
    }

    #[test]
    fn decision_boundary_is_strict() {
        let p = UeLinkParams {
            rho: 1.0,
            beta: 1.0,
            tau_p: 10,
            q: 1.0,
            sigma2: 1.0,
            upsilon: 0.0,
            antennas: 10,
        };
        let est = |v| AlphaEstimate {
            value: v,
            method: EstimatorKind::Approx2,
        };
        assert_eq!(ue_decision(&est(10.0), &p, 0.0), Decision::Repeat);
        assert_eq!(ue_decision(&est(30.0), &p, 0.0), Decision::Inactive);
        assert_eq!(ue_decision(&est(16.0), &p, 2.0), Decision::Inactive);
    }
}
