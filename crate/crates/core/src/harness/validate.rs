//! Analytic-vs-Monte-Carlo cross-checks run by the `validate` subcommand.
//!
//! Each check returns a named pass/fail with a short detail string. The
//! suite is deterministic for a fixed seed.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::{mean_estimate, run_trials};
use crate::analytics::{
    asymptotic_ccdf, asymptotic_repetition, cdf_re_zk, collision_probability, pilot_count_pmf,
    repetition_probability_for, resolved_probability_conditional, sample_zk_for, zk_mean_var, PilotLoadModel,
};
use crate::channels::{sample_channel, ChannelModelKind};
use crate::error::Result;
use crate::estimators::{estimate_alpha, pdf_f1, pdf_f2, EstimatorKind, SearchConfig, UeLinkParams};
use crate::protocol::{ue_decision, Decision};
use crate::rng::{mix_seed, stream};
use crate::special::{gaussian_moment_integral, log_gamma};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Draw counts for the sampled checks.
#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Draws per Monte-Carlo comparison.
    pub draws: usize,
    /// Random parameter sets for the repetition-probability check.
    pub parameter_sets: usize,
    /// Samples for the channel hardening and favourable propagation checks.
    pub channel_samples: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: super::DEFAULT_SEED,
            draws: 100_000,
            parameter_sets: 20,
            channel_samples: 10_000,
        }
    }
}

fn unit_link(m: usize) -> UeLinkParams {
    UeLinkParams {
        rho: 1.0,
        beta: 1.0,
        tau_p: 10,
        q: 1.0,
        sigma2: 1.0,
        upsilon: 0.0,
        antennas: m,
    }
}

/// Runs the whole suite.
pub fn run_validation(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    checks.extend(density_normalization()?);
    checks.push(cdf_validity()?);
    checks.extend(cdf_vs_sampler(cfg)?);
    checks.push(moment_integral_recurrence()?);
    checks.extend(moments_vs_sampler(cfg)?);
    checks.push(repetition_vs_simulation(cfg)?);
    checks.push(asymptotic_limits()?);
    checks.push(asymptotic_ccdf_agreement()?);
    checks.push(combinatorics()?);
    checks.extend(channel_convergence(cfg));
    Ok(checks)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, n: usize) -> Result<f64> {
    let h = (b - a) / n as f64;
    let mut s = f(a)? + f(b)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h)?;
    }
    Ok(s * h / 3.0)
}

fn density_normalization() -> Result<Vec<Check>> {
    let alpha = 20.0;
    let mut out = Vec::new();
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    for m in [1usize, 10, 100, 500] {
        let p = unit_link(m);
        let (mean, var) = zk_mean_var(&p, alpha)?;
        let (mu, sd) = (mean * (m as f64).sqrt(), (var * m as f64).sqrt());
        let i1 = simpson(|x| pdf_f1(x, alpha, &p), mu - 14.0 * sd, mu + 14.0 * sd, 40_000)?;
        let i2 = simpson(|x| pdf_f2(x, alpha, &p), -14.0 * sd, 14.0 * sd, 40_000)?;
        worst1 = worst1.max((i1 - 1.0).abs());
        worst2 = worst2.max((i2 - 1.0).abs());
    }
    out.push(Check::new(
        "f1 integrates to one",
        worst1 < 1e-6,
        format!("max |1 - ∫f1| = {worst1:.2e}"),
    ));
    out.push(Check::new(
        "f2 integrates to one",
        worst2 < 1e-6,
        format!("max |1 - ∫f2| = {worst2:.2e}"),
    ));
    Ok(out)
}

fn cdf_validity() -> Result<Check> {
    let alpha = 20.0;
    let mut problems = Vec::new();
    for m in [1usize, 10, 100, 500] {
        let p = unit_link(m);
        let (mean, var) = zk_mean_var(&p, alpha)?;
        let (mu, sd) = (mean * (m as f64).sqrt(), (var * m as f64).sqrt());
        let mut prev = 0.0;
        for i in 0..200 {
            let b = mu - 10.0 * sd + 20.0 * sd * i as f64 / 199.0;
            let v = cdf_re_zk(b, &p, alpha)?;
            if !(0.0..=1.0).contains(&v) || v + 1e-12 < prev {
                problems.push(format!("M={m} b={b:.3}"));
                break;
            }
            prev = v;
        }
        let lo = cdf_re_zk(mu - 40.0 * sd, &p, alpha)?;
        let hi = cdf_re_zk(mu + 40.0 * sd, &p, alpha)?;
        if lo > 1e-9 || hi < 1.0 - 1e-9 {
            problems.push(format!("M={m} limits {lo:e}, {hi}"));
        }
    }
    Ok(Check::new(
        "CDF bounds and monotonicity",
        problems.is_empty(),
        if problems.is_empty() {
            "M ∈ {1, 10, 100, 500}, 200-point grids".into()
        } else {
            problems.join("; ")
        },
    ))
}

fn cdf_vs_sampler(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let alpha = 20.0;
    let p = unit_link(100);
    let mut re: Vec<f64> = run_trials(cfg.seed, mix_seed(1, 100), cfg.draws, |rng| {
        Ok(sample_zk_for(&p, alpha, rng)?.re)
    })?;
    re.sort_by(f64::total_cmp);
    let n = re.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in re.iter().enumerate() {
        let f = cdf_re_zk(x, &p, alpha)?;
        ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    let mut worst_z: f64 = 0.0;
    for j in 1..=20 {
        let q = j as f64 / 21.0;
        let b = re[(q * n) as usize];
        let emp = re.partition_point(|&v| v <= b) as f64 / n;
        let se = (q * (1.0 - q) / n).sqrt();
        worst_z = worst_z.max((cdf_re_zk(b, &p, alpha)? - emp).abs() / se);
    }
    Ok(vec![
        Check::new(
            "CDF vs sampler, KS distance",
            ks < 0.01,
            format!("M=100, {} draws: KS = {ks:.4}", re.len()),
        ),
        Check::new(
            "CDF vs sampler at 20 quantiles",
            worst_z < 3.0,
            format!("largest deviation {worst_z:.2} SE"),
        ),
    ])
}

fn moment_integral_recurrence() -> Result<Check> {
    // J_0(A, 0) = √π/(2A) and J_1(A, 0) = 1/(2A²)
    let mut worst: f64 = 0.0;
    for a in [0.1, 1.0, 10.0] {
        let j0 = gaussian_moment_integral(0, a, 0.0)?;
        let j1 = gaussian_moment_integral(1, a, 0.0)?;
        let sqrt_pi = log_gamma(0.5)?.exp();
        worst = worst.max((j0 / (sqrt_pi / (2.0 * a)) - 1.0).abs());
        worst = worst.max((j1 * 2.0 * a * a - 1.0).abs());
    }
    Ok(Check::new(
        "moment integrals, closed cases",
        worst < 1e-12,
        format!("max rel. error {worst:.2e}"),
    ))
}

fn moments_vs_sampler(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let alpha = 20.0;
    let mut out = Vec::new();
    for m in [1usize, 10, 100] {
        let p = unit_link(m);
        let (mean, var) = zk_mean_var(&p, alpha)?;
        let scale = 1.0 / (m as f64).sqrt();
        let z: Vec<Complex64> = run_trials(cfg.seed, mix_seed(2, m as u64), cfg.draws, |rng| {
            Ok(sample_zk_for(&p, alpha, rng)? * scale)
        })?;
        let re: Vec<f64> = z.iter().map(|v| v.re).collect();
        let (m_hat, m_se) = mean_estimate(&re);
        let zbar: Complex64 = z.iter().sum::<Complex64>() / z.len() as f64;
        let d: Vec<f64> = z.iter().map(|v| (v - zbar).norm_sqr()).collect();
        let (v_hat, v_se) = mean_estimate(&d);
        let zm = (m_hat - mean).abs() / m_se;
        let zv = (v_hat - var).abs() / v_se;
        out.push(Check::new(
            &format!("mean and variance vs sampler, M={m}"),
            zm < 3.0 && zv < 3.0,
            format!("mean {m_hat:.5} vs {mean:.5} ({zm:.2} SE), variance {v_hat:.5} vs {var:.5} ({zv:.2} SE)"),
        ));
    }
    Ok(out)
}

fn repetition_vs_simulation(cfg: &ValidationConfig) -> Result<Check> {
    let mut rng = stream(mix_seed(cfg.seed, 3), 0);
    let search = SearchConfig::default();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for set in 0..cfg.parameter_sets {
        let m = [10usize, 100, 500][set % 3];
        let p = UeLinkParams {
            beta: 10f64.powf(rng.random_range(-1.0..1.0)),
            ..unit_link(m)
        };
        let own = p.signal_gain();
        let alpha = own + rng.random_range(0.0..2.0) * own;
        let eps = rng.random_range(-0.3..0.3) * own;
        let closed = repetition_probability_for(&p, alpha, eps)?;
        let flags = run_trials(cfg.seed, mix_seed(4, set as u64), cfg.draws, |r| {
            let z = sample_zk_for(&p, alpha, r)?;
            let est = estimate_alpha(EstimatorKind::Approx2, z, &p, &search)?;
            Ok(ue_decision(&est, &p, eps) == Decision::Repeat)
        })?;
        let (emp, _, n) = super::bernoulli_estimate(flags);
        // binomial SE under the closed-form probability, floored at one count
        let se = (closed * (1.0 - closed) / n as f64).sqrt().max(1.0 / n as f64);
        let z = (emp - closed).abs() / se;
        worst = worst.max(z);
        if z >= 3.0 {
            failures.push(format!("set {set} (M={m}): {emp:.4} vs {closed:.4}"));
        }
    }
    Ok(Check::new(
        "repeat probability vs simulation",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} parameter sets, largest deviation {worst:.2} SE", cfg.parameter_sets)
        } else {
            failures.join("; ")
        },
    ))
}

fn asymptotic_limits() -> Result<Check> {
    let p = unit_link(4000);
    let own = p.signal_gain();
    let mut worst: f64 = 0.0;
    // strict cases with at least 10% margin around α/2 + ε
    for (alpha, eps) in [
        (10.0, 0.0),
        (15.0, 0.0),
        (30.0, 0.0),
        (25.0, 0.0),
        (14.0, -1.0),
        (18.0, 3.0),
    ] {
        let limit = asymptotic_repetition(own, alpha, eps)?;
        let exact = repetition_probability_for(&p, alpha, eps)?;
        worst = worst.max((exact - limit).abs());
    }
    Ok(Check::new(
        "large-M repeat limit",
        worst < 0.02,
        format!("M=4000: max deviation {worst:.4}"),
    ))
}

fn asymptotic_ccdf_agreement() -> Result<Check> {
    let p = unit_link(500);
    let alpha = 20.0;
    let (mean, var) = zk_mean_var(&p, alpha)?;
    let (mu, sd) = (mean * 500f64.sqrt(), (var * 500.0).sqrt());
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let b = mu - 6.0 * sd + 12.0 * sd * i as f64 / 200.0;
        worst = worst.max((asymptotic_ccdf(b, &p, alpha)? - (1.0 - cdf_re_zk(b, &p, alpha)?)).abs());
    }
    Ok(Check::new(
        "Gaussian CCDF vs exact",
        worst < 0.01,
        format!("M=500: sup difference {worst:.4}"),
    ))
}

fn combinatorics() -> Result<Check> {
    let load = PilotLoadModel {
        k0: 5000,
        pa: 0.005,
        tau_p: 10,
    };
    let total: f64 = (0..=load.k0).map(|n| pilot_count_pmf(&load, n)).sum::<Result<f64>>()?;
    let mean: f64 = (0..=load.k0)
        .map(|n| pilot_count_pmf(&load, n).map(|w| w * n as f64))
        .sum::<Result<f64>>()?;
    let p0 = pilot_count_pmf(&load, 0)?;
    let p1 = pilot_count_pmf(&load, 1)?;
    let collision = collision_probability(&load)?;
    // share of used pilots that carry a collision
    let collided_used = collision / (1.0 - p0);
    let ones: BTreeMap<u64, f64> = (1..=60).map(|n| (n, 1.0)).collect();
    let all = resolved_probability_conditional(&ones, &load)?;
    let only_one: BTreeMap<u64, f64> = (1..=60).map(|n| (n, if n == 1 { 1.0 } else { 0.0 })).collect();
    let singles = resolved_probability_conditional(&only_one, &load)?;
    let expect = p1 / (1.0 - p0);
    let no_pair = collision_probability(&PilotLoadModel { k0: 1, ..load })?;
    let ok = (total - 1.0).abs() < 1e-10
        && (mean - 2.5).abs() < 1e-9
        && (collision - (1.0 - p0 - p1)).abs() < 1e-15
        && collided_used > 0.75
        && (all - 1.0).abs() < 1e-8
        && (singles - expect).abs() < 1e-12
        && no_pair == 0.0;
    Ok(Check::new(
        "pilot load identities",
        ok,
        format!(
            "Σpmf - 1 = {:.1e}, mean {mean:.6}, collisions on {collision:.4} of pilots, {collided_used:.4} of used ones",
            total - 1.0
        ),
    ))
}

fn channel_convergence(cfg: &ValidationConfig) -> Vec<Check> {
    let m = 1000;
    let n = cfg.channel_samples;
    let mut out = Vec::new();
    let models = [
        ("uncorrelated", ChannelModelKind::UncorrelatedRayleigh),
        ("correlated", ChannelModelKind::CorrelatedRayleigh { r: 0.7 }),
    ];
    for (mi, (name, kind)) in models.into_iter().enumerate() {
        let mut rng = stream(mix_seed(cfg.seed, 5), mi as u64);
        let (b1, b2) = (1.0, 0.5);
        let mut norms = Vec::with_capacity(n);
        let mut inner = 0.0;
        for _ in 0..n {
            let th1 = rng.random_range(-1.0..1.0);
            let th2 = rng.random_range(-1.0..1.0);
            let h1 = sample_channel(kind, b1, th1, m, &mut rng);
            let h2 = sample_channel(kind, b2, th2, m, &mut rng);
            norms.push(h1.iter().map(|v| v.norm_sqr()).sum::<f64>() / m as f64);
            let ip: Complex64 = h1.iter().zip(&h2).map(|(a, b)| a.conj() * b).sum();
            inner += ip.norm() / m as f64;
        }
        let mean = norms.iter().sum::<f64>() / n as f64;
        let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let bound = 2.0 * b1 * b1 / m as f64 * 1.5;
        out.push(Check::new(
            &format!("channel hardening, {name}"),
            var < bound,
            format!("var(‖h‖²/M) = {var:.2e} (bound {bound:.2e})"),
        ));
        let mean_ip = inner / n as f64;
        let ip_bound = 0.05 * (b1 * b2).sqrt();
        out.push(Check::new(
            &format!("favourable propagation, {name}"),
            mean_ip < ip_bound,
            format!("E|h1ᴴh2|/M = {mean_ip:.4} (bound {ip_bound:.4})"),
        ));
    }
    out
}
