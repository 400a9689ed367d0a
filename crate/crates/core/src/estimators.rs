//! Estimators of the colliding gain sum `α_t` from the scalar DL statistic
//! `z_k`, and the exact likelihood behind the ML estimator.
//!
//! With `λ1 = ρqβ²τ_p²/(α+σ²)` and `λ2 = σ² + Υ + qβτ_p - λ1`, the statistic
//! is `z = g + ν` where `g²/λ1 ~ Gamma(M, 1)` and `ν ~ CN(0, λ2)`. The real
//! part therefore has the density
//!
//! ```text
//! f1(x) = 2·exp(-x²/(λ1+λ2)) / (Γ(M)·λ1^M·√(πλ2)) · J_{2M-1}(A, B)
//! A = √(1/λ1 + 1/λ2),   B = x/(λ2·A)
//! ```
//!
//! and the imaginary part is `N(0, λ2/2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{gamma_ratio, ln_gamma_half, MomentIntegrals, LN_SQRT_PI};

/// Link constants seen by one UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeLinkParams {
    /// UL pilot power ρ_k.
    pub rho: f64,
    /// Large-scale gain β_k to the serving BS.
    pub beta: f64,
    /// Pilot length τ_p.
    pub tau_p: usize,
    /// DL pilot power q.
    pub q: f64,
    /// Noise power σ².
    pub sigma2: f64,
    /// Variance Υ_k of the DL inter-cell interference.
    pub upsilon: f64,
    /// Number of BS antennas M.
    pub antennas: usize,
}

impl UeLinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("beta", self.beta),
            ("q", self.q),
            ("sigma2", self.sigma2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain("UeLinkParams", name, v));
            }
        }
        if !(self.upsilon >= 0.0 && self.upsilon.is_finite()) {
            return Err(domain("UeLinkParams", "upsilon", self.upsilon));
        }
        if self.tau_p == 0 {
            return Err(domain("UeLinkParams", "tau_p", 0.0));
        }
        if self.antennas == 0 {
            return Err(domain("UeLinkParams", "antennas", 0.0));
        }
        Ok(())
    }

    /// Own received pilot gain ρβτ_p, the smallest admissible `α_t`.
    pub fn signal_gain(&self) -> f64 {
        self.rho * self.beta * self.tau_p as f64
    }

    fn tau(&self) -> f64 {
        self.tau_p as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Approx1,
    Approx2,
    Ml,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Approx1 => "approx1",
            EstimatorKind::Approx2 => "approx2",
            EstimatorKind::Ml => "ml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub value: f64,
    pub method: EstimatorKind,
}

/// `(λ1, λ2)` at hypothesis `alpha`.
pub fn lambda_pair(alpha: f64, p: &UeLinkParams) -> Result<(f64, f64)> {
    if !(alpha >= p.signal_gain()) {
        return Err(domain("lambda_pair", "alpha", alpha));
    }
    let tau = p.tau();
    let lambda1 = p.rho * p.q * p.beta * p.beta * tau * tau / (alpha + p.sigma2);
    let lambda2 = p.sigma2 + p.upsilon + p.q * p.beta * tau - lambda1;
    Ok((lambda1, lambda2))
}

fn moment_estimate(scale: f64, z_re: f64, p: &UeLinkParams, method: EstimatorKind) -> Result<AlphaEstimate> {
    if z_re == 0.0 || z_re.is_nan() {
        return Err(Error::DegenerateObservation);
    }
    let tau = p.tau();
    let raw = scale * p.q * p.rho * p.beta * p.beta * tau * tau / (z_re * z_re) - p.sigma2;
    Ok(AlphaEstimate {
        value: raw.max(p.signal_gain()),
        method,
    })
}

/// Moment estimator `max(Mqρβ²τ_p²/Re(z)² - σ², ρβτ_p)`.
pub fn estimate_alpha_approx1(z_re: f64, p: &UeLinkParams) -> Result<AlphaEstimate> {
    moment_estimate(p.antennas as f64, z_re, p, EstimatorKind::Approx1)
}

/// As [`estimate_alpha_approx1`] with `M` replaced by `C_M²`, matching the
/// exact mean of `Re(z)` rather than its large-M limit.
pub fn estimate_alpha_approx2(z_re: f64, p: &UeLinkParams) -> Result<AlphaEstimate> {
    let c = gamma_ratio(p.antennas)?;
    moment_estimate(c * c, z_re, p, EstimatorKind::Approx2)
}

/// ln f1(z_re | α).
pub fn ln_pdf_f1(z_re: f64, alpha: f64, p: &UeLinkParams) -> Result<f64> {
    let (l1, l2) = lambda_pair(alpha, p)?;
    Ok(ln_f1_with(z_re, l1, l2, p.antennas))
}

pub(crate) fn ln_f1_with(x: f64, l1: f64, l2: f64, m: usize) -> f64 {
    let a = (1.0 / l1 + 1.0 / l2).sqrt();
    let b = x / (l2 * a);
    let order = 2 * m - 1;
    let j = MomentIntegrals::new(a, b, order).ln_value(order);
    std::f64::consts::LN_2 - x * x / (l1 + l2) - ln_gamma_half(2 * m) - m as f64 * l1.ln() - LN_SQRT_PI - 0.5 * l2.ln()
        + j
}

/// Density of Re(z_k) given α.
pub fn pdf_f1(z_re: f64, alpha: f64, p: &UeLinkParams) -> Result<f64> {
    ln_pdf_f1(z_re, alpha, p).map(f64::exp)
}

/// ln f2(z_im | α).
pub fn ln_pdf_f2(z_im: f64, alpha: f64, p: &UeLinkParams) -> Result<f64> {
    let (_, l2) = lambda_pair(alpha, p)?;
    Ok(-z_im * z_im / l2 - LN_SQRT_PI - 0.5 * l2.ln())
}

/// Density of Im(z_k) given α: Gaussian with variance λ2/2.
pub fn pdf_f2(z_im: f64, alpha: f64, p: &UeLinkParams) -> Result<f64> {
    ln_pdf_f2(z_im, alpha, p).map(f64::exp)
}

/// Joint log-likelihood `ln f1(Re z) + ln f2(Im z)`.
pub fn log_likelihood(z: Complex64, alpha: f64, p: &UeLinkParams) -> Result<f64> {
    let (l1, l2) = lambda_pair(alpha, p)?;
    Ok(ln_f1_with(z.re, l1, l2, p.antennas) - z.im * z.im / l2 - LN_SQRT_PI - 0.5 * l2.ln())
}

/// Grid-then-golden-section search settings for the ML estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Log-spaced grid points over the bracket.
    pub grid_points: usize,
    /// Bracket upper end as a multiple of `ρβτ_p + σ² + Υ`.
    pub upper_factor: f64,
    /// Relative tolerance of the refinement.
    pub rel_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 200,
            upper_factor: 1e4,
            rel_tol: 1e-4,
        }
    }
}

/// ML estimate of `α_t`: maximizes `f1·f2` over `α ≥ ρβτ_p`.
pub fn estimate_alpha_ml(z: Complex64, p: &UeLinkParams, search: &SearchConfig) -> Result<AlphaEstimate> {
    if search.grid_points < 3 || !(search.upper_factor > 1.0) || !(search.rel_tol > 0.0) {
        return Err(Error::Config(format!("invalid ML search settings {search:?}")));
    }
    let floor = p.signal_gain();
    let lo = floor.ln();
    let hi = (search.upper_factor * (floor + p.sigma2 + p.upsilon)).ln();
    let ll = |t: f64| -> f64 {
        // exp(ln floor) can round just below the floor
        let alpha = t.exp().max(floor);
        match log_likelihood(z, alpha, p) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    };

    let n = search.grid_points;
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let v = ll(lo + step * i as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Err(Error::EstimationFailed);
    }
    let grid_t = lo + step * best.0 as f64;

    // Golden-section search on ln α inside the neighbouring grid cells.
    let mut a = lo + step * best.0.saturating_sub(1) as f64;
    let mut b = lo + step * (best.0 + 1).min(n - 1) as f64;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (ll(c), ll(d));
    while b - a > search.rel_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = ll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = ll(d);
        }
    }
    let mut refined = if fc >= fd { (c, fc) } else { (d, fd) };
    // The bracket ends can hold the maximum (e.g. the floor).
    for t in [a, b] {
        let v = ll(t);
        if v > refined.1 {
            refined = (t, v);
        }
    }
    let t = if refined.1 >= best.1 {
        refined.0
    } else {
        log::debug!(
            "ML refinement ({:.6e}) fell below grid maximum ({:.6e}) at z = {z}",
            refined.1,
            best.1
        );
        grid_t
    };
    Ok(AlphaEstimate {
        value: t.exp().max(floor),
        method: EstimatorKind::Ml,
    })
}

/// Dispatches on `kind`.
pub fn estimate_alpha(
    kind: EstimatorKind,
    z: Complex64,
    p: &UeLinkParams,
    search: &SearchConfig,
) -> Result<AlphaEstimate> {
    match kind {
        EstimatorKind::Approx1 => estimate_alpha_approx1(z.re, p),
        EstimatorKind::Approx2 => estimate_alpha_approx2(z.re, p),
        EstimatorKind::Ml => estimate_alpha_ml(z, p, search),
    }
}
