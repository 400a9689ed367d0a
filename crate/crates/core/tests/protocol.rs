use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sucre::analytics::PilotLoadModel;
use sucre::channels::{drop_served_ue, sample_channel, ChannelModelKind};
use sucre::estimators::{AlphaEstimate, EstimatorKind, UeLinkParams};
use sucre::protocol::*;
use sucre_testkit::stats::binomial_se;
use sucre_testkit::MeanAccumulator;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn net(interference: bool) -> NetworkModel {
    NetworkModel::standard(ChannelModelKind::UncorrelatedRayleigh, interference).unwrap()
}

fn section_load() -> PilotLoadModel {
    PilotLoadModel {
        k0: 5000,
        pa: 0.005,
        tau_p: 10,
    }
}

fn link() -> UeLinkParams {
    UeLinkParams {
        rho: 1.0,
        beta: 1.0,
        tau_p: 10,
        q: 1.0,
        sigma2: 1.0,
        upsilon: 0.0,
        antennas: 100,
    }
}

fn est(value: f64) -> AlphaEstimate {
    AlphaEstimate {
        value,
        method: EstimatorKind::Approx2,
    }
}

#[test]
fn decision_rule_examples() {
    let p = link();
    assert_eq!(ue_decision(&est(10.0), &p, 0.0), Decision::Repeat);
    assert_eq!(ue_decision(&est(30.0), &p, 0.0), Decision::Inactive);
    assert_eq!(ue_decision(&est(16.0), &p, 2.0), Decision::Inactive);
    assert_eq!(ue_decision(&est(16.0), &p, 1.9), Decision::Repeat);
}

#[test]
fn classification_examples() {
    assert_eq!(classify_outcome(2, 1).unwrap(), OutcomeClass::Resolved);
    assert_eq!(classify_outcome(3, 0).unwrap(), OutcomeClass::FalseNegative);
    assert_eq!(classify_outcome(2, 2).unwrap(), OutcomeClass::FalsePositive);
    assert_eq!(classify_outcome(1, 1).unwrap(), OutcomeClass::SingletonAdmitted);
    assert_eq!(classify_outcome(0, 0).unwrap(), OutcomeClass::Unused);
    assert!(classify_outcome(1, 2).is_err());
    assert!(OutcomeClass::Resolved.admits() && OutcomeClass::SingletonAdmitted.admits());
    assert!(!OutcomeClass::FalsePositive.admits() && !OutcomeClass::FalseNegative.admits());
}

#[test]
fn bias_term_scales() {
    let p = link();
    let b = BiasPolicy {
        delta: -1.0,
        scale: BiasScale::SignalGain,
    };
    assert!((b.epsilon(&p, 4.0) - (-1.0 - 2.0)).abs() < 1e-12);
    let b = BiasPolicy {
        delta: 2.0,
        scale: BiasScale::Beta,
    };
    assert!((b.epsilon(&p, 0.0) - 0.2).abs() < 1e-12);
    assert_eq!(BiasPolicy::none().epsilon(&p, 0.0), 0.0);
}

#[test]
fn idle_cell_uses_no_pilot() {
    let cfg = RaBlockConfig::new(
        net(true),
        50,
        PilotLoadModel {
            pa: 0.0,
            ..section_load()
        },
    );
    let mut r = rng(1);
    for _ in 0..20 {
        let out = run_ra_block(&cfg, &mut r).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|o| o.class == OutcomeClass::Unused && o.contenders == 0));
    }
}

#[test]
fn lone_ue_is_admitted() {
    let cfg = RaBlockConfig::new(
        net(false),
        100,
        PilotLoadModel {
            k0: 1,
            pa: 1.0,
            tau_p: 10,
        },
    );
    let mut r = rng(2);
    let admitted = (0..1000)
        .filter(|_| {
            let out = run_ra_block(&cfg, &mut r).unwrap();
            out.iter().any(|o| o.class == OutcomeClass::SingletonAdmitted)
        })
        .count();
    assert!(admitted as f64 / 1000.0 > 0.99, "{admitted}");
}

fn resolved_fraction(cfg: &RaBlockConfig, blocks: usize, seed: u64, baseline: bool) -> (f64, f64) {
    let mut r = rng(seed);
    let mut pairs = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        let out = if baseline {
            run_baseline_block(cfg, &mut r).unwrap()
        } else {
            run_ra_block(cfg, &mut r).unwrap()
        };
        let used = out.iter().filter(|o| o.contenders > 0).count() as f64;
        let admitted = out.iter().filter(|o| o.class.admits()).count() as f64;
        pairs.push((admitted, used));
    }
    let sa: f64 = pairs.iter().map(|p| p.0).sum();
    let sb: f64 = pairs.iter().map(|p| p.1).sum();
    let ratio = sa / sb;
    let var: f64 = pairs.iter().map(|&(a, b)| (a - ratio * b).powi(2)).sum::<f64>() / (blocks - 1) as f64;
    (ratio, (var * blocks as f64).sqrt() / sb)
}

#[test]
fn loaded_cell_resolves_about_nine_in_ten() {
    let cfg = RaBlockConfig::new(net(false), 100, section_load());
    let (p, se) = resolved_fraction(&cfg, 2000, 3, false);
    assert!((p - 0.9).abs() < 0.03, "{p} ± {se}");
}

#[test]
fn resolution_grows_with_antennas_for_every_model() {
    let models = [
        (ChannelModelKind::UncorrelatedRayleigh, PowerPolicy::Constant),
        (ChannelModelKind::CorrelatedRayleigh { r: 0.7 }, PowerPolicy::Constant),
        (ChannelModelKind::LosUla, PowerPolicy::Constant),
        (
            ChannelModelKind::LosUla,
            PowerPolicy::RandomReduction { max_reduction_db: 30.0 },
        ),
    ];
    for (i, (kind, power)) in models.into_iter().enumerate() {
        let network = NetworkModel::standard(kind, false).unwrap();
        let mut lo_cfg = RaBlockConfig::new(network.clone(), 1, section_load());
        lo_cfg.power = power;
        let mut hi_cfg = RaBlockConfig::new(network, 100, section_load());
        hi_cfg.power = power;
        let (lo, lo_se) = resolved_fraction(&lo_cfg, 1500, 10 + i as u64, false);
        let (hi, hi_se) = resolved_fraction(&hi_cfg, 1500, 20 + i as u64, false);
        assert!(
            hi - lo > 3.0 * (lo_se.powi(2) + hi_se.powi(2)).sqrt(),
            "{kind:?}: {lo} -> {hi}"
        );
    }
}

#[test]
fn baseline_admits_only_lone_contenders() {
    let cfg = RaBlockConfig::new(net(false), 20, section_load());
    let mut r = rng(4);
    for _ in 0..200 {
        for o in run_baseline_block(&cfg, &mut r).unwrap() {
            match o.contenders {
                0 => assert_eq!(o.class, OutcomeClass::Unused),
                1 => assert_eq!(o.class, OutcomeClass::SingletonAdmitted),
                _ => assert_eq!(o.class, OutcomeClass::FalsePositive),
            }
            assert_eq!(o.repeaters, o.contenders);
        }
    }
}

#[test]
fn baseline_shares_pilot_selection() {
    let cfg = RaBlockConfig::new(net(true), 30, section_load());
    for seed in 0..20 {
        let a = run_ra_block(&cfg, &mut rng(seed)).unwrap();
        let b = run_baseline_block(&cfg, &mut rng(seed)).unwrap();
        let ca: Vec<usize> = a.iter().map(|o| o.contenders).collect();
        let cb: Vec<usize> = b.iter().map(|o| o.contenders).collect();
        assert_eq!(ca, cb);
    }
}

#[test]
fn contenders_are_conserved_and_blocks_reproducible() {
    let mut cfg = RaBlockConfig::new(net(true), 40, section_load());
    cfg.power = PowerPolicy::RandomReduction { max_reduction_db: 30.0 };
    for seed in 0..30 {
        let parts = draw_participants(&cfg, &mut rng(seed)).unwrap();
        for p in &parts {
            assert!(p.pilot < 10);
            assert!(p.rho <= 1.0 && p.rho >= 1e-3);
        }
        let out = run_ra_block(&cfg, &mut rng(seed)).unwrap();
        assert_eq!(out.iter().map(|o| o.contenders).sum::<usize>(), parts.len());
        assert!(out.iter().all(|o| o.repeaters <= o.contenders));
        assert_eq!(out, run_ra_block(&cfg, &mut rng(seed)).unwrap());
    }
}

#[test]
fn outcomes_follow_the_decisions() {
    let cfg = RaBlockConfig::new(net(true), 60, section_load());
    for seed in 0..50 {
        let parts = draw_participants(&cfg, &mut rng(1000 + seed)).unwrap();
        let repeat = sucre_decisions(&cfg, &parts, &mut rng(seed)).unwrap();
        let out = run_block_with(&cfg, &parts, &mut rng(seed)).unwrap();
        for o in &out {
            let reps: Vec<usize> = (0..parts.len())
                .filter(|&i| parts[i].pilot == o.pilot && repeat[i])
                .collect();
            assert_eq!(o.repeaters, reps.len());
            if o.class.admits() {
                assert_eq!(o.admitted, Some(reps[0]));
            } else {
                assert_eq!(o.admitted, None);
            }
        }
    }
}

#[test]
fn two_ue_resolution_is_sum_of_exclusive_repeats() {
    let cfg = RaBlockConfig::new(net(false), 100, section_load());
    let mut r = rng(5);
    let (mut resolved, mut exclusive) = (0, 0);
    for _ in 0..3000 {
        let parts: Vec<Participant> = (0..2)
            .map(|_| Participant {
                ue: drop_served_ue(&cfg.network.geometry, &cfg.network.large_scale, 0, &mut r),
                pilot: 3,
                rho: 1.0,
            })
            .collect();
        let seed: u64 = r.random();
        let d = sucre_decisions(&cfg, &parts, &mut rng(seed)).unwrap();
        let o = &run_block_with(&cfg, &parts, &mut rng(seed)).unwrap()[3];
        resolved += usize::from(o.class == OutcomeClass::Resolved);
        exclusive += usize::from(d[0] != d[1]);
    }
    assert_eq!(resolved, exclusive);
}

fn collision_rates(cfg: &RaBlockConfig, n: usize, trials: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut fp, mut fn_) = (0usize, 0usize);
    for _ in 0..trials {
        match run_collision(cfg, n, &mut r).unwrap().class {
            OutcomeClass::FalsePositive => fp += 1,
            OutcomeClass::FalseNegative => fn_ += 1,
            _ => {}
        }
    }
    (fp as f64 / trials as f64, fn_ as f64 / trials as f64)
}

#[test]
fn bias_trades_false_positives_for_false_negatives() {
    let network = net(false);
    let trials = 3000;
    let mut prev: Option<(f64, f64)> = None;
    for (i, delta) in [-2.0, -1.0, 0.0, 1.0].into_iter().enumerate() {
        let mut cfg = RaBlockConfig::new(network.clone(), 100, section_load());
        cfg.bias = BiasPolicy {
            delta,
            scale: BiasScale::SignalGain,
        };
        let (fp, fn_) = collision_rates(&cfg, 5, trials, 40 + i as u64);
        if let Some((pfp, pfn)) = prev {
            let n = trials as u64;
            assert!(
                fp <= pfp + 3.0 * binomial_se(pfp.max(fp), n),
                "δ={delta}: fp {pfp} -> {fp}"
            );
            assert!(
                fn_ + 3.0 * binomial_se(pfn.max(fn_), n) >= pfn,
                "δ={delta}: fn {pfn} -> {fn_}"
            );
        }
        prev = Some((fp, fn_));
    }
}

#[test]
fn activity_statistic_separates_used_pilots() {
    let network = net(false);
    let m = 1000;
    let tau = 10.0;
    let threshold = network.sigma2 * (1.0 + 5.0 / (m as f64).sqrt());
    let mut r = rng(6);
    let (mut miss, mut false_alarm) = (0, 0);
    let trials = 5000;
    for _ in 0..trials {
        let noise: Vec<Complex64> = (0..m)
            .map(|_| {
                let (a, b): (f64, f64) = (r.sample(StandardNormal), r.sample(StandardNormal));
                Complex64::new(a, b) * (network.sigma2 / 2.0).sqrt()
            })
            .collect();
        false_alarm += usize::from(detect_active(&noise, threshold));
        let ue = drop_served_ue(&network.geometry, &network.large_scale, 0, &mut r);
        let h = sample_channel(network.channel, ue.serving_gain(), 0.0, m, &mut r);
        let y: Vec<Complex64> = h
            .iter()
            .zip(&noise)
            .map(|(h, n)| h * (network.rho * tau).sqrt() + n)
            .collect();
        miss += usize::from(!detect_active(&y, threshold));
    }
    let err = (miss + false_alarm) as f64 / (2 * trials) as f64;
    assert!(err < 0.01, "miss {miss}, false alarm {false_alarm}");
    let flat = vec![Complex64::new(1.0, 1.0); 4];
    assert!((activity_statistic(&flat) - 2.0).abs() < 1e-15);
}

#[test]
fn crowded_low_load_never_fails() {
    let mut block = RaBlockConfig::new(
        net(false),
        100,
        PilotLoadModel {
            k0: 100,
            pa: 0.001,
            tau_p: 10,
        },
    );
    block.bias = BiasPolicy {
        delta: -1.0,
        scale: BiasScale::SignalGain,
    };
    let cfg = CrowdedConfig::standard(block);
    let stats = run_crowded_scenario(&cfg, AccessScheme::Sucre, 10_000, &mut rng(7)).unwrap();
    assert!(stats.ues() > 500);
    assert!(stats.failure_fraction() < 0.001, "{}", stats.failure_fraction());
    assert!(stats.traces.iter().all(|t| (1..=10).contains(&t.attempts)));
    let acc: MeanAccumulator = stats.traces.iter().map(|t| t.attempts as f64).collect();
    assert!((acc.mean() - stats.mean_attempts()).abs() < 1e-12);
    assert!((stats.success_fraction() + stats.failure_fraction() - 1.0).abs() < 1e-12);
}

#[test]
fn crowded_failures_use_every_attempt() {
    let block = RaBlockConfig::new(
        net(false),
        10,
        PilotLoadModel {
            k0: 20_000,
            pa: 0.001,
            tau_p: 10,
        },
    );
    let mut cfg = CrowdedConfig::standard(block);
    cfg.warmup_blocks = 50;
    let stats = run_crowded_scenario(&cfg, AccessScheme::Baseline, 200, &mut rng(8)).unwrap();
    assert!(stats.traces.iter().filter(|t| !t.success).all(|t| t.attempts == 10));
    assert!(stats.failure_fraction() > 0.5);
    let mut bad = cfg.clone();
    bad.max_attempts = 0;
    assert!(run_crowded_scenario(&bad, AccessScheme::Sucre, 10, &mut rng(9)).is_err());
}
