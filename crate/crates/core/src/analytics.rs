//! Closed-form distributions and probabilities.
//!
//! Covers the two-component sampler of `z_k`, its exact moments and CDF, the
//! probability that a UE repeats its pilot, the large-M Gaussian limits, and
//! the binomial pilot-load combinatorics.
//!
//! Joint decision probabilities of several UEs are not offered here: their
//! decisions share channel and interference randomness, so only simulation
//! gives them.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::{lambda_pair, UeLinkParams};
use crate::rng::complex_gaussian;
use crate::special::{gamma_ratio, ln_factorial, q_function, MomentIntegrals, LN_SQRT_PI};

static CDF_CLAMPS: AtomicU64 = AtomicU64::new(0);

/// How often a CDF evaluation left `[0, 1]` by more than rounding and was
/// clamped, since process start.
pub fn cdf_clamp_count() -> u64 {
    CDF_CLAMPS.load(Ordering::Relaxed)
}

/// The UEs that picked one pilot, plus the interference power on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionScenario {
    contenders: Vec<UeLinkParams>,
    omega: f64,
    bias: Vec<f64>,
}

impl ContentionScenario {
    pub fn new(contenders: Vec<UeLinkParams>, omega: f64, bias: Vec<f64>) -> Result<Self> {
        if contenders.is_empty() {
            return Err(Error::Empty("ContentionScenario"));
        }
        if bias.len() != contenders.len() {
            return Err(Error::Precondition(format!(
                "{} bias terms for {} contenders",
                bias.len(),
                contenders.len()
            )));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(domain("ContentionScenario", "omega", omega));
        }
        for p in &contenders {
            p.validate()?;
        }
        Ok(Self {
            contenders,
            omega,
            bias,
        })
    }

    pub fn contenders(&self) -> &[UeLinkParams] {
        &self.contenders
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// `α_t = Σ ρᵢβᵢτ_p + ω_t`.
    pub fn alpha_t(&self) -> f64 {
        self.contenders.iter().map(UeLinkParams::signal_gain).sum::<f64>() + self.omega
    }

    fn get(&self, k: usize) -> Result<&UeLinkParams> {
        self.contenders
            .get(k)
            .ok_or_else(|| Error::Precondition(format!("contender {k} of {}", self.contenders.len())))
    }
}

/// Draws `z = g + ν` for a UE with link `p` under gain sum `alpha`.
pub fn sample_zk_for<R: Rng + ?Sized>(p: &UeLinkParams, alpha: f64, rng: &mut R) -> Result<Complex64> {
    let (l1, l2) = lambda_pair(alpha, p)?;
    let gamma = Gamma::new(p.antennas as f64, 1.0).map_err(|e| Error::Precondition(e.to_string()))?;
    let g = (l1 * gamma.sample(rng)).sqrt();
    Ok(Complex64::new(g, 0.0) + complex_gaussian(rng, l2))
}

/// Draws `z_k` for contender `k` of `scenario`.
pub fn sample_zk<R: Rng + ?Sized>(scenario: &ContentionScenario, k: usize, rng: &mut R) -> Result<Complex64> {
    sample_zk_for(scenario.get(k)?, scenario.alpha_t(), rng)
}

/// Mean and variance of `z_k/√M`.
pub fn zk_mean_var(p: &UeLinkParams, alpha: f64) -> Result<(f64, f64)> {
    let (l1, l2) = lambda_pair(alpha, p)?;
    let m = p.antennas as f64;
    let c = gamma_ratio(p.antennas)?;
    let mean = l1.sqrt() * c / m.sqrt();
    let var = l1 * (1.0 - c * c / m) + l2 / m;
    Ok((mean, var))
}

/// `Pr{Re(z_k) ≤ b}` given α.
pub fn cdf_re_zk(b: f64, p: &UeLinkParams, alpha: f64) -> Result<f64> {
    if b.is_nan() {
        return Err(domain("cdf_re_zk", "b", b));
    }
    let (l1, l2) = lambda_pair(alpha, p)?;
    Ok(cdf_with(b, l1, l2, p.antennas))
}

/// `Q(-b√(2/λ2)) - Σ_{k<M} e^{-b²/(λ1+λ2)} / (k!·λ1ᵏ·√(πλ2)) · J_{2k}(A, B)`
fn cdf_with(b: f64, l1: f64, l2: f64, m: usize) -> f64 {
    if b == f64::NEG_INFINITY {
        return 0.0;
    }
    if b == f64::INFINITY {
        return 1.0;
    }
    let a = (1.0 / l1 + 1.0 / l2).sqrt();
    let moments = MomentIntegrals::new(a, b / (l2 * a), 2 * m - 2);
    let lead = -b * b / (l1 + l2) - LN_SQRT_PI - 0.5 * l2.ln();
    let ln_l1 = l1.ln();
    let logs: Vec<f64> = (0..m)
        .map(|k| lead - ln_factorial(k) - k as f64 * ln_l1 + moments.ln_value(2 * k))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = if max == f64::NEG_INFINITY {
        0.0
    } else {
        max.exp() * logs.iter().map(|l| (l - max).exp()).sum::<f64>()
    };
    let v = q_function(-b * (2.0 / l2).sqrt()) - tail;
    if !(-1e-10..=1.0 + 1e-10).contains(&v) {
        CDF_CLAMPS.fetch_add(1, Ordering::Relaxed);
        log::debug!("CDF value {v:e} clamped at b = {b}");
    }
    v.clamp(0.0, 1.0)
}

/// `Pr{R_k}` for a UE with link `p`, gain sum `alpha` and bias `eps`, using
/// the moment estimator with `C_M²` and the strict decision rule.
pub fn repetition_probability_for(p: &UeLinkParams, alpha: f64, eps: f64) -> Result<f64> {
    let floor = p.signal_gain();
    if !(eps < floor / 2.0) {
        return Err(Error::Precondition(format!(
            "bias {eps} must be below half the own gain {}",
            floor / 2.0
        )));
    }
    let (l1, l2) = lambda_pair(alpha, p)?;
    let c = gamma_ratio(p.antennas)?;
    let tau = p.tau_p as f64;
    let zeta = c * c * p.q * p.rho * p.beta * p.beta * tau * tau / (p.sigma2 + 2.0 * (floor - eps));
    let root = zeta.sqrt();
    let v = 1.0 - cdf_with(root, l1, l2, p.antennas) + cdf_with(-root, l1, l2, p.antennas);
    Ok(v.clamp(0.0, 1.0))
}

/// `Pr{R_k}` for contender `k` of `scenario`.
pub fn repetition_probability(scenario: &ContentionScenario, k: usize) -> Result<f64> {
    repetition_probability_for(scenario.get(k)?, scenario.alpha_t(), scenario.bias[k])
}

/// Gaussian large-M approximation of `Pr{Re(z_k) > b}`:
/// `Q((b - C_M√λ1) / √(λ1(M - C_M²) + λ2/2))`.
///
/// Valid for any M but only accurate once the chi component is close to
/// Gaussian; at M = 1 it can be off by several percent.
pub fn asymptotic_ccdf(b: f64, p: &UeLinkParams, alpha: f64) -> Result<f64> {
    let (l1, l2) = lambda_pair(alpha, p)?;
    let c = gamma_ratio(p.antennas)?;
    let sd = (l1 * (p.antennas as f64 - c * c) + 0.5 * l2).sqrt();
    Ok(q_function((b - c * l1.sqrt()) / sd))
}

/// Limit of `Pr{R_k}` as M grows: 1, ½ or 0 as `ρβτ_p` is above, at or
/// below `α/2 + ε`.
pub fn asymptotic_repetition(rho_beta_tau: f64, alpha: f64, eps: f64) -> Result<f64> {
    if !(eps < rho_beta_tau / 2.0) {
        return Err(Error::Precondition(format!(
            "bias {eps} must be below half the own gain {}",
            rho_beta_tau / 2.0
        )));
    }
    let threshold = alpha / 2.0 + eps;
    Ok(if rho_beta_tau > threshold {
        1.0
    } else if rho_beta_tau == threshold {
        0.5
    } else {
        0.0
    })
}

/// Population of idle UEs contending for `tau_p` pilots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotLoadModel {
    /// Number of inactive UEs K0.
    pub k0: u64,
    /// Per-block activation probability P_a.
    pub pa: f64,
    pub tau_p: usize,
}

impl PilotLoadModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pa) {
            return Err(domain("PilotLoadModel", "pa", self.pa));
        }
        if self.tau_p == 0 {
            return Err(domain("PilotLoadModel", "tau_p", 0.0));
        }
        Ok(())
    }

    /// Probability that one UE activates and picks a given pilot.
    pub fn per_pilot_probability(&self) -> f64 {
        self.pa / self.tau_p as f64
    }

    /// Mean number of UEs per pilot.
    pub fn mean_per_pilot(&self) -> f64 {
        self.k0 as f64 * self.per_pilot_probability()
    }
}

/// `Pr{|S_t| = n}` under `Binomial(K0, P_a/τ_p)`.
pub fn pilot_count_pmf(load: &PilotLoadModel, n: u64) -> Result<f64> {
    load.validate()?;
    if n > load.k0 {
        return Ok(0.0);
    }
    let p = load.per_pilot_probability();
    if p == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if n == load.k0 { 1.0 } else { 0.0 });
    }
    let k0 = load.k0 as usize;
    let n_us = n as usize;
    let ln_choose = ln_factorial(k0) - ln_factorial(n_us) - ln_factorial(k0 - n_us);
    Ok((ln_choose + n as f64 * p.ln() + (load.k0 - n) as f64 * (-p).ln_1p()).exp())
}

/// `Pr{|S_t| ≥ 2}`.
pub fn collision_probability(load: &PilotLoadModel) -> Result<f64> {
    load.validate()?;
    if load.k0 < 2 || load.pa == 0.0 {
        return Ok(0.0);
    }
    let v = 1.0 - pilot_count_pmf(load, 0)? - pilot_count_pmf(load, 1)?;
    Ok(v.max(0.0))
}

/// `E{P_{|S_t|} | |S_t| ≥ 1}`, the load-weighted success probability of a
/// used pilot, from per-size success probabilities.
///
/// The sum stops once the accumulated mass exceeds `1 - 1e-9`; every size
/// reached before that must be present in `per_size`.
pub fn resolved_probability_conditional(per_size: &BTreeMap<u64, f64>, load: &PilotLoadModel) -> Result<f64> {
    let p0 = pilot_count_pmf(load, 0)?;
    if p0 >= 1.0 {
        return Err(Error::Precondition("no pilot is ever used under this load".into()));
    }
    let mut mass = p0;
    let mut acc = 0.0;
    let mut n = 1;
    while mass <= 1.0 - 1e-9 && n <= load.k0 {
        let w = pilot_count_pmf(load, n)?;
        match per_size.get(&n) {
            Some(&pr) => acc += w * pr,
            None if w > 1e-9 => {
                return Err(Error::Precondition(format!("no success probability for size {n}")));
            }
            None => {}
        }
        mass += w;
        n += 1;
    }
    Ok(acc / (1.0 - p0))
}
