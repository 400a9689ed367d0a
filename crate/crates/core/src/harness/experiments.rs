//! The five experiment drivers.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{bernoulli_estimate, mean_estimate, ratio_estimate, run_trials, ExperimentSpec, ResultRow};
use crate::analytics::{repetition_probability_for, resolved_probability_conditional, sample_zk_for, PilotLoadModel};
use crate::channels::{ChannelModelKind, LargeScaleModel, NeighborActivity, Point, ServedUe};
use crate::error::{Error, Result};
use crate::estimators::{estimate_alpha, UeLinkParams};
use crate::protocol::{
    run_baseline_block, run_collision, run_crowded_scenario, run_ra_block, sucre_decisions, AccessScheme, BiasPolicy,
    CrowdedConfig, NetworkModel, OutcomeClass, Participant, PilotOutcome, PowerPolicy, RaBlockConfig,
};
use crate::rng::{mix_seed, stream};

/// Stream label of (series, sweep point).
fn label(series: usize, point: usize) -> u64 {
    ((series as u64) << 32) | point as u64
}

fn row(series: &str, x: f64, metric: &str, estimate: f64, std_error: f64, trials: u64) -> ResultRow {
    ResultRow {
        series: series.to_string(),
        sweep_value: x,
        metric: metric.to_string(),
        estimate,
        std_error,
        trials,
        closed_form: None,
    }
}

fn interference_tag(on: bool) -> &'static str {
    if on {
        "interference"
    } else {
        "silent"
    }
}

/// Estimators on the DL statistic drawn from its exact two-component law
/// with unit powers and noise. Metrics per estimator: normalized bias
/// `(E α̂ - α)/α`, `nmse = E(α̂-α)²/α²` and `mse_over_alpha = E(α̂-α)²/α`.
pub(super) fn estimator_compare(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let p = &spec.params;
    let alpha = p.alpha;
    let kinds = &p.estimators;
    let mut rows = Vec::new();
    for (gi, &m) in spec.grid.iter().enumerate() {
        let link = UeLinkParams {
            rho: 1.0,
            beta: 1.0,
            tau_p: p.tau_p,
            q: 1.0,
            sigma2: 1.0,
            upsilon: 0.0,
            antennas: m as usize,
        };
        link.validate()?;
        if alpha < link.signal_gain() {
            return Err(Error::Config(format!(
                "alpha = {alpha} is below the own gain {}",
                link.signal_gain()
            )));
        }
        let search = crate::estimators::SearchConfig::default();
        let trials = run_trials(spec.seed, label(0, gi), spec.trials, |rng| {
            let z = sample_zk_for(&link, alpha, rng)?;
            kinds
                .iter()
                .map(|&k| estimate_alpha(k, z, &link, &search).map(|e| e.value))
                .collect::<Result<Vec<f64>>>()
        })?;
        for (ki, kind) in kinds.iter().enumerate() {
            let est: Vec<f64> = trials.iter().map(|t| t[ki]).collect();
            let bias: Vec<f64> = est.iter().map(|a| (a - alpha) / alpha).collect();
            let nmse: Vec<f64> = est.iter().map(|a| (a - alpha).powi(2) / (alpha * alpha)).collect();
            let per_alpha: Vec<f64> = nmse.iter().map(|v| v * alpha).collect();
            let n = est.len() as u64;
            for (metric, values) in [("bias", &bias), ("nmse", &nmse), ("mse_over_alpha", &per_alpha)] {
                let (mean, se) = mean_estimate(values);
                rows.push(row(kind.name(), m, metric, mean, se, n));
            }
        }
        log::info!("estimator-compare: M = {m} done");
    }
    Ok(rows)
}

/// Network with no neighbour activity and unit powers; the pathloss model
/// is unused because link gains are set directly.
fn isolated_network(channel: ChannelModelKind) -> Result<NetworkModel> {
    Ok(NetworkModel {
        geometry: Default::default(),
        large_scale: LargeScaleModel::new(3.8, 0.0, 1.0)?,
        channel,
        rho: 1.0,
        q: 1.0,
        sigma2: 1.0,
        neighbors: NeighborActivity::silent(),
        omega_bar: 0.0,
    })
}

fn fixed_ue(beta: f64) -> ServedUe {
    let mut gains = vec![0.0; 7];
    gains[0] = beta;
    ServedUe {
        position: Point::new(100.0, 0.0),
        cell: 0,
        gains,
    }
}

/// Two UEs on one pilot over uncorrelated Rayleigh channels, UE 1 at
/// `ρβτ_p = 10 dB` and UE 2 shifted by the sweep value in dB, no bias.
/// Series are antenna counts. Repeat probabilities carry the closed form.
pub(super) fn two_ue(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let p = &spec.params;
    let net = isolated_network(ChannelModelKind::UncorrelatedRayleigh)?;
    let tau = p.tau_p;
    let mut rows = Vec::new();
    for (si, &m) in p.antennas.iter().enumerate() {
        let series = format!("M={m}");
        let mut cfg = RaBlockConfig::new(
            net.clone(),
            m,
            PilotLoadModel {
                k0: 2,
                pa: 1.0,
                tau_p: tau,
            },
        );
        cfg.bias = BiasPolicy {
            delta: 0.0,
            scale: p.bias_scale,
        };
        for (gi, &gap_db) in spec.grid.iter().enumerate() {
            let betas = [1.0, 10f64.powf(gap_db / 10.0)];
            let participants: Vec<Participant> = betas
                .iter()
                .map(|&b| Participant {
                    ue: fixed_ue(b),
                    pilot: 0,
                    rho: 1.0,
                })
                .collect();
            let decisions = run_trials(spec.seed, label(si, gi), spec.trials, |rng| {
                let d = sucre_decisions(&cfg, &participants, rng)?;
                Ok((d[0], d[1]))
            })?;
            let alpha: f64 = betas.iter().map(|b| b * tau as f64).sum();
            for (k, metric) in ["repeat_ue1", "repeat_ue2"].into_iter().enumerate() {
                let (est, se, n) = bernoulli_estimate(decisions.iter().map(|d| if k == 0 { d.0 } else { d.1 }));
                let link = UeLinkParams {
                    rho: 1.0,
                    beta: betas[k],
                    tau_p: tau,
                    q: 1.0,
                    sigma2: 1.0,
                    upsilon: 0.0,
                    antennas: m,
                };
                let mut r = row(&series, gap_db, metric, est, se, n);
                r.closed_form = Some(repetition_probability_for(&link, alpha, 0.0)?);
                rows.push(r);
            }
            let outcome = |d: &(bool, bool)| u8::from(d.0) + u8::from(d.1);
            for (metric, want) in [
                ("resolved", Some(1)),
                ("false_negative", Some(0)),
                ("false_positive", Some(2)),
                ("unresolved", None),
            ] {
                let (est, se, n) = bernoulli_estimate(decisions.iter().map(|d| match want {
                    Some(w) => outcome(d) == w,
                    None => outcome(d) != 1,
                }));
                rows.push(row(&series, gap_db, metric, est, se, n));
            }
        }
        log::info!("two-ue: M = {m} done");
    }
    Ok(rows)
}

/// Per-block pilot tallies: used pilots and the counts of each outcome.
#[derive(Debug, Clone, Copy, Default)]
struct BlockTally {
    used: f64,
    admitted: f64,
    false_negative: f64,
    false_positive: f64,
}

fn tally(outcomes: &[PilotOutcome]) -> BlockTally {
    let mut t = BlockTally::default();
    for o in outcomes.iter().filter(|o| o.contenders > 0) {
        t.used += 1.0;
        match o.class {
            OutcomeClass::SingletonAdmitted | OutcomeClass::Resolved => t.admitted += 1.0,
            OutcomeClass::FalseNegative => t.false_negative += 1.0,
            OutcomeClass::FalsePositive => t.false_positive += 1.0,
            OutcomeClass::Unused => {}
        }
    }
    t
}

type TallyMetric = (&'static str, fn(&BlockTally) -> f64);
type TraceMetric = (&'static str, fn(&crate::protocol::AttemptTrace) -> f64);

fn ratio_rows(series: &str, x: f64, tallies: &[BlockTally], full: bool) -> Vec<ResultRow> {
    let n = tallies.iter().map(|t| t.used).sum::<f64>() as u64;
    let mut metrics: Vec<TallyMetric> = vec![("p_resolved", |t| t.admitted)];
    if full {
        metrics.push(("false_negative", |t| t.false_negative));
        metrics.push(("false_positive", |t| t.false_positive));
    }
    metrics
        .into_iter()
        .map(|(metric, f)| {
            let pairs: Vec<(f64, f64)> = tallies.iter().map(|t| (f(t), t.used)).collect();
            let (est, se) = ratio_estimate(&pairs);
            row(series, x, metric, est, se, n)
        })
        .collect()
}

fn block_config(net: &NetworkModel, m: usize, p: &super::ExperimentParams, k0: u64) -> RaBlockConfig {
    RaBlockConfig::new(
        net.clone(),
        m,
        PilotLoadModel {
            k0,
            pa: p.pa,
            tau_p: p.tau_p,
        },
    )
}

/// Probability that a used pilot admits a UE, estimated as admitted over
/// used pilots across independent blocks, for each channel model and the
/// baseline. The baseline shares the pilot-selection streams of the
/// uncorrelated series and carries its closed form.
pub(super) fn resolve_vs_m(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let p = &spec.params;
    let models: [(&str, ChannelModelKind, PowerPolicy); 4] = [
        (
            "uncorrelated",
            ChannelModelKind::UncorrelatedRayleigh,
            PowerPolicy::Constant,
        ),
        (
            "correlated",
            ChannelModelKind::CorrelatedRayleigh { r: p.correlation },
            PowerPolicy::Constant,
        ),
        ("los", ChannelModelKind::LosUla, PowerPolicy::Constant),
        (
            "los-random-power",
            ChannelModelKind::LosUla,
            PowerPolicy::RandomReduction {
                max_reduction_db: p.max_power_reduction_db,
            },
        ),
    ];
    let load = PilotLoadModel {
        k0: p.k0,
        pa: p.pa,
        tau_p: p.tau_p,
    };
    // only lone contenders succeed
    let lone: BTreeMap<u64, f64> = (1..=load.k0).map(|n| (n, if n == 1 { 1.0 } else { 0.0 })).collect();
    let baseline_closed = resolved_probability_conditional(&lone, &load)?;
    let mut rows = Vec::new();
    for (ii, &intf) in p.interference.iter().enumerate() {
        let tag = interference_tag(intf);
        let mut los_net = None;
        for (mi, (name, kind, power)) in models.iter().enumerate() {
            let net = match (kind, &los_net) {
                (ChannelModelKind::LosUla, Some(n)) => Clone::clone(n),
                _ => NetworkModel::standard(*kind, intf)?,
            };
            if kind.is_los() {
                los_net = Some(net.clone());
            }
            let series = format!("{name}/{tag}");
            for (gi, &m) in spec.grid.iter().enumerate() {
                let mut cfg = block_config(&net, m as usize, p, p.k0);
                cfg.power = *power;
                cfg.bias = BiasPolicy {
                    delta: p.delta,
                    scale: p.bias_scale,
                };
                let stream_series = ii * 8 + mi;
                let tallies = run_trials(spec.seed, label(stream_series, gi), spec.trials, |rng| {
                    Ok(tally(&run_ra_block(&cfg, rng)?))
                })?;
                rows.extend(ratio_rows(&series, m, &tallies, false));
                if mi == 0 {
                    let base = run_trials(spec.seed, label(stream_series, gi), spec.trials, |rng| {
                        Ok(tally(&run_baseline_block(&cfg, rng)?))
                    })?;
                    let mut r = ratio_rows(&format!("baseline/{tag}"), m, &base, false);
                    r[0].closed_form = Some(baseline_closed);
                    rows.extend(r);
                }
            }
            log::info!("resolve-vs-m: {series} done");
        }
    }
    Ok(rows)
}

/// Outcome probabilities of used pilots in the loaded cell as a function of
/// δ, plus the resolution probability of isolated `n`-UE collisions.
pub(super) fn bias_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let p = &spec.params;
    let m = p.antennas[0];
    let mut rows = Vec::new();
    for (ii, &intf) in p.interference.iter().enumerate() {
        let tag = interference_tag(intf);
        let net = NetworkModel::standard(ChannelModelKind::UncorrelatedRayleigh, intf)?;
        for (gi, &delta) in spec.grid.iter().enumerate() {
            let mut cfg = block_config(&net, m, p, p.k0);
            cfg.bias = BiasPolicy {
                delta,
                scale: p.bias_scale,
            };
            let tallies = run_trials(spec.seed, label(ii * 64, gi), spec.trials, |rng| {
                Ok(tally(&run_ra_block(&cfg, rng)?))
            })?;
            rows.extend(ratio_rows(tag, delta, &tallies, true));
            for (ci, &n) in p.collision_sizes.iter().enumerate() {
                let classes = run_trials(spec.seed, label(ii * 64 + 1 + ci, gi), spec.trials, |rng| {
                    Ok(run_collision(&cfg, n, rng)?.class)
                })?;
                for (metric, class) in [
                    ("resolved", OutcomeClass::Resolved),
                    ("false_negative", OutcomeClass::FalseNegative),
                    ("false_positive", OutcomeClass::FalsePositive),
                ] {
                    let (est, se, cnt) = bernoulli_estimate(classes.iter().map(|c| {
                        *c == class || (class == OutcomeClass::Resolved && *c == OutcomeClass::SingletonAdmitted)
                    }));
                    rows.push(row(tag, delta, &format!("{metric}_n{n}"), est, se, cnt));
                }
            }
            log::info!("bias-sweep: {tag}, delta = {delta} done");
        }
    }
    Ok(rows)
}

/// Multi-attempt access for each population size. Each point is one long
/// run of `trials` measured blocks; standard errors come from batch means
/// over the tracked UEs in completion order.
pub(super) fn crowded(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let p = &spec.params;
    let m = p.antennas[0];
    let mut jobs = Vec::new();
    for (ii, &intf) in p.interference.iter().enumerate() {
        let net = NetworkModel::standard(ChannelModelKind::UncorrelatedRayleigh, intf)?;
        for (si, scheme) in [AccessScheme::Sucre, AccessScheme::Baseline].into_iter().enumerate() {
            for (gi, &k0) in spec.grid.iter().enumerate() {
                jobs.push((ii * 2 + si, gi, intf, scheme, net.clone(), k0));
            }
        }
    }
    let per_job: Vec<Vec<ResultRow>> = jobs
        .into_par_iter()
        .map(|(series_idx, gi, intf, scheme, net, k0)| {
            let mut block = block_config(&net, m, p, k0 as u64);
            block.bias = BiasPolicy {
                delta: p.delta,
                scale: p.bias_scale,
            };
            let mut cfg = CrowdedConfig::standard(block);
            cfg.block.load.pa = p.pa;
            cfg.warmup_blocks = p.warmup_blocks;
            let mut rng = stream(mix_seed(spec.seed, label(series_idx, gi)), 0);
            let stats = run_crowded_scenario(&cfg, scheme, spec.trials, &mut rng)?;
            let name = match scheme {
                AccessScheme::Sucre => "sucre",
                AccessScheme::Baseline => "baseline",
            };
            let series = format!("{name}/{}", interference_tag(intf));
            let n = stats.ues() as u64;
            let metrics: [TraceMetric; 3] = [
                ("success_fraction", |t| f64::from(u8::from(t.success))),
                ("failure_fraction", |t| f64::from(u8::from(!t.success))),
                ("mean_attempts", |t| f64::from(t.attempts)),
            ];
            let rows = metrics
                .into_iter()
                .map(|(metric, f)| {
                    let values: Vec<f64> = stats.traces.iter().map(f).collect();
                    let (est, se) = batch_means(&values, p.batches);
                    row(&series, k0, metric, est, se, n)
                })
                .collect();
            log::info!("crowded: {series}, K0 = {k0} done");
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Overall mean and batch-means standard error with `batches` equal batches.
fn batch_means(values: &[f64], batches: usize) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let size = values.len() / batches;
    if size == 0 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    (mean, mean_estimate(&means).1)
}
