//! Multi-attempt access in a crowded cell.
//!
//! Each idle UE starts an access process with a small probability per block.
//! A UE that is not admitted joins later blocks with the rejoin probability
//! and gives up after a fixed number of attempts. Position and shadowing
//! belong to the UE and persist across its attempts; small-scale fading,
//! pilot choice and (if randomized) pilot power are redrawn per attempt.
//!
//! Statistics cover the UEs whose process starts inside the measurement
//! window. Arrivals continue while the window's UEs drain so that the load
//! they see stays stationary.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{baseline_outcomes, run_block_with, Participant, RaBlockConfig};
use crate::channels::{drop_served_ue, ServedUe};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessScheme {
    Sucre,
    /// Every contender repeats; only UEs alone on their pilot get through.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdedConfig {
    /// `load.k0` is the population, `load.pa` the per-block start probability.
    pub block: RaBlockConfig,
    pub rejoin_probability: f64,
    pub max_attempts: u32,
    /// Blocks simulated before UEs are tracked.
    pub warmup_blocks: usize,
}

impl CrowdedConfig {
    /// Start probability 0.1 %, rejoin probability ½, ten attempts.
    pub fn standard(mut block: RaBlockConfig) -> Self {
        block.load.pa = 0.001;
        Self {
            block,
            rejoin_probability: 0.5,
            max_attempts: 10,
            warmup_blocks: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.block.validate()?;
        if !(0.0..=1.0).contains(&self.rejoin_probability) {
            return Err(Error::Config(format!("rejoin probability {}", self.rejoin_probability)));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Access history of one UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptTrace {
    pub attempts: u32,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrowdedStats {
    pub traces: Vec<AttemptTrace>,
    pub blocks: usize,
}

impl CrowdedStats {
    pub fn ues(&self) -> usize {
        self.traces.len()
    }

    pub fn mean_attempts(&self) -> f64 {
        if self.traces.is_empty() {
            return 0.0;
        }
        self.traces.iter().map(|t| f64::from(t.attempts)).sum::<f64>() / self.traces.len() as f64
    }

    pub fn success_fraction(&self) -> f64 {
        if self.traces.is_empty() {
            return 1.0;
        }
        self.traces.iter().filter(|t| t.success).count() as f64 / self.traces.len() as f64
    }

    pub fn failure_fraction(&self) -> f64 {
        1.0 - self.success_fraction()
    }
}

struct Pending {
    ue: ServedUe,
    attempts: u32,
    tracked: bool,
    fresh: bool,
}

/// Simulates until every UE that started during the `horizon` blocks after
/// warm-up has either been admitted or used up its attempts.
pub fn run_crowded_scenario<R: Rng + ?Sized>(
    cfg: &CrowdedConfig,
    scheme: AccessScheme,
    horizon: usize,
    rng: &mut R,
) -> Result<CrowdedStats> {
    cfg.validate()?;
    let block = &cfg.block;
    let tau = block.tau_p();
    let mut pending: Vec<Pending> = Vec::new();
    let mut stats = CrowdedStats::default();
    let mut tracked_open = 0usize;
    let window_end = cfg.warmup_blocks + horizon;
    let mut b = 0usize;

    while b < window_end || tracked_open > 0 {
        let idle = block.load.k0.saturating_sub(pending.len() as u64);
        let arrivals = Binomial::new(idle, block.load.pa)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(rng);
        let tracked = b >= cfg.warmup_blocks && b < window_end;
        for _ in 0..arrivals {
            let ue = drop_served_ue(&block.network.geometry, &block.network.large_scale, 0, rng);
            pending.push(Pending {
                ue,
                attempts: 0,
                tracked,
                fresh: true,
            });
            if tracked {
                tracked_open += 1;
            }
        }

        let mut who = Vec::new();
        let mut participants = Vec::new();
        for (i, p) in pending.iter_mut().enumerate() {
            let joins = p.fresh || rng.random_bool(cfg.rejoin_probability);
            p.fresh = false;
            if joins {
                who.push(i);
                participants.push(Participant {
                    ue: p.ue.clone(),
                    pilot: rng.random_range(0..tau),
                    rho: block.draw_rho(rng),
                });
            }
        }

        let outcomes = match scheme {
            AccessScheme::Sucre => run_block_with(block, &participants, rng)?,
            AccessScheme::Baseline => baseline_outcomes(tau, &participants)?,
        };
        let mut admitted = vec![false; participants.len()];
        for o in &outcomes {
            if let Some(i) = o.admitted {
                admitted[i] = true;
            }
        }

        let mut finished = vec![false; pending.len()];
        for (slot, &i) in who.iter().enumerate() {
            let p = &mut pending[i];
            p.attempts += 1;
            let done = admitted[slot] || p.attempts >= cfg.max_attempts;
            if done {
                finished[i] = true;
                if p.tracked {
                    stats.traces.push(AttemptTrace {
                        attempts: p.attempts,
                        success: admitted[slot],
                    });
                    tracked_open -= 1;
                }
            }
        }
        let mut idx = 0;
        pending.retain(|_| {
            let keep = !finished[idx];
            idx += 1;
            keep
        });
        b += 1;
    }
    stats.blocks = b;
    Ok(stats)
}
