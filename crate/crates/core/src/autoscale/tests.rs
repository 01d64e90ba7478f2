use proptest::prelude::*;

use super::*;
use crate::workload::{expand_arrivals, generate_trace, ArrivalMode, WorkloadSpec, WorkloadTrace};

fn hpa(target: f64) -> HpaConfig {
    HpaConfig {
        target_utilization: target,
        ..HpaConfig::default()
    }
}

fn pba(req_per_pod: u32) -> PbaConfig {
    PbaConfig {
        req_per_pod,
        ..PbaConfig::default()
    }
}

#[test]
fn hpa_on_target_holds() {
    let out = hpa_decide(4, 0.5, &hpa(0.5), 0.0, &[]);
    assert_eq!(out.decision.desired_replicas, 4);
    assert_eq!(out.decision.source, Source::Hpa);
}

#[test]
fn hpa_doubles_at_full_utilization() {
    assert_eq!(
        hpa_decide(4, 1.0, &hpa(0.5), 0.0, &[])
            .decision
            .desired_replicas,
        8
    );
}

#[test]
fn hpa_scale_down_waits_for_window() {
    let config = hpa(0.5);
    // Recommendations 8, 4, 4 at t = 0, 15, 30; the 8 leaves the window after 300 s.
    let history = [
        Recommendation {
            at: 0.0,
            replicas: 8,
        },
        Recommendation {
            at: 15.0,
            replicas: 4,
        },
        Recommendation {
            at: 30.0,
            replicas: 4,
        },
    ];
    let held = hpa_decide(8, 0.25, &config, 45.0, &history);
    assert_eq!(held.decision.desired_replicas, 8);
    assert_eq!(held.recommendation, 4);
    let still = hpa_decide(8, 0.25, &config, 299.0, &history);
    assert_eq!(still.decision.desired_replicas, 8);
    let drained = hpa_decide(8, 0.25, &config, 300.0, &history);
    assert_eq!(drained.decision.desired_replicas, 4);
}

#[test]
fn hpa_bootstraps_from_zero() {
    assert_eq!(
        hpa_decide(0, 1.0, &hpa(0.5), 0.0, &[])
            .decision
            .desired_replicas,
        1
    );
    assert_eq!(
        hpa_decide(0, 0.0, &hpa(0.5), 0.0, &[])
            .decision
            .desired_replicas,
        0
    );
}

#[test]
fn hpa_dead_band_edges() {
    let config = hpa(0.5);
    // Inside the 10% band holds; beyond it scales.
    assert_eq!(
        hpa_decide(10, 0.54, &config, 0.0, &[])
            .decision
            .desired_replicas,
        10
    );
    assert_eq!(
        hpa_decide(10, 0.46, &config, 0.0, &[])
            .decision
            .desired_replicas,
        10
    );
    assert_eq!(
        hpa_decide(10, 0.6, &config, 0.0, &[])
            .decision
            .desired_replicas,
        12
    );
}

#[test]
fn hpa_config_validation() {
    assert!(HpaConfig::default().validate().is_ok());
    let bad = HpaConfig {
        min_replicas: 5,
        max_replicas: 2,
        ..HpaConfig::default()
    };
    assert!(bad.validate().unwrap_err().contains("min_replicas"));
    let bad = HpaConfig {
        sync_period: 0.0,
        ..HpaConfig::default()
    };
    assert!(bad.validate().unwrap_err().contains("sync_period"));
    let bad = HpaConfig {
        target_utilization: 1.5,
        ..HpaConfig::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn pba_ceiling() {
    let d = pba_first(&[100.0], &pba(40));
    assert_eq!(d.decision.desired_replicas, 3);
}

#[test]
fn pba_takes_max_of_current_and_next() {
    let d = pba_decide(&[100.0, 200.0], 0, &pba(40));
    assert_eq!((d.ft, d.ct, d.decision.desired_replicas), (5, 3, 5));
    let d = pba_decide(&[200.0, 100.0], 0, &pba(40));
    assert_eq!((d.ft, d.ct, d.decision.desired_replicas), (3, 5, 5));
}

#[test]
fn pba_zero_forecast_scales_to_zero() {
    let d = pba_decide(&[0.0, 0.0], 0, &pba(40));
    assert_eq!(d.decision.desired_replicas, 0);
}

#[test]
fn pba_end_of_horizon_falls_back_to_current() {
    let d = pba_decide(&[10.0, 90.0], 1, &pba(40));
    assert_eq!((d.ft, d.ct, d.decision.desired_replicas), (3, 3, 3));
}

#[test]
fn pba_clamps_to_max() {
    let config = PbaConfig {
        max_replicas: 2,
        ..pba(40)
    };
    assert_eq!(
        pba_decide(&[1000.0, 1000.0], 0, &config)
            .decision
            .desired_replicas,
        2
    );
}

#[test]
fn pba_schedule() {
    let config = PbaConfig {
        initial_delay: 30.0,
        lead_time: 45.0,
        interval: 3600.0,
        ..PbaConfig::default()
    };
    assert_eq!(config.decision_time(0), 0.0);
    assert_eq!(config.decision_time(1), 3570.0);
    assert_eq!(config.decision_time(2), 7155.0);
    assert_eq!(config.decision_time(5), 17955.0);
    assert_eq!(pba_decide(&[1.0, 1.0, 1.0], 1, &config).decision.at, 7155.0);
}

#[test]
fn pba_config_validation() {
    assert!(PbaConfig::default().validate().is_ok());
    let bad = PbaConfig {
        req_per_pod: 0,
        ..PbaConfig::default()
    };
    assert!(bad.validate().unwrap_err().contains("req_per_pod"));
    let bad = PbaConfig {
        order: Some("(1,0".into()),
        ..PbaConfig::default()
    };
    assert!(bad.validate().unwrap_err().contains("order"));
    let good = PbaConfig {
        order: Some("(1,0,0)(0,1,0,24)".into()),
        ..PbaConfig::default()
    };
    assert!(good.validate().is_ok());
    assert_eq!(
        good.pinned_order(),
        SarimaOrder::new((1, 0, 0), (0, 1, 0, 24)).ok()
    );
}

#[test]
fn interval_resampling() {
    let hourly = [1.0, 5.0, 2.0, 4.0];
    assert_eq!(
        interval_predictions(&hourly, 3600.0, 3600.0),
        hourly.to_vec()
    );
    assert_eq!(
        interval_predictions(&hourly, 3600.0, 7200.0),
        vec![5.0, 4.0]
    );
    assert_eq!(interval_predictions(&hourly, 3600.0, 1800.0).len(), 8);
    assert_eq!(
        interval_predictions(&hourly, 3600.0, 5400.0),
        vec![5.0, 5.0, 4.0]
    );
}

#[test]
fn seasonal_naive_repeats_last_period() {
    let h = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(seasonal_naive(&h, 2, 5), vec![4.0, 5.0, 4.0, 5.0, 4.0]);
    assert_eq!(seasonal_naive(&h, 10, 2), vec![1.0, 2.0]);
}

#[test]
fn pipeline_periodic_history_repeats_period() {
    let day: Vec<f64> = (0..24)
        .map(|h| 30.0 * crate::workload::diurnal_shape(h, 15))
        .collect();
    let history = TimeSeries::hourly(day.iter().cycle().take(24 * 9).copied().collect()).unwrap();
    let out = pba_pipeline(&history, 24, &ForecasterConfig::default()).unwrap();
    assert!(out.fallback.is_none(), "{:?}", out.fallback);
    for (p, a) in out.predictions.iter().zip(&day) {
        assert!((p - a).abs() < 1e-9, "{p} vs {a}");
    }
}

#[test]
fn pipeline_zero_history_predicts_zero() {
    let history = TimeSeries::hourly(vec![0.0; 24 * 3]).unwrap();
    let out = pba_pipeline(&history, 24, &ForecasterConfig::default()).unwrap();
    assert!(out.predictions.iter().all(|&p| p == 0.0));
    let d = pba_decide(&out.predictions, 0, &PbaConfig::default());
    assert_eq!(d.decision.desired_replicas, 0);
}

#[test]
fn pipeline_failure_falls_back_to_seasonal_naive() {
    let history = TimeSeries::hourly((0..30).map(|i| i as f64).collect()).unwrap();
    let config = ForecasterConfig {
        period: 24,
        order: SarimaOrder::new((2, 0, 0), (2, 0, 0, 24)).ok(),
    };
    let out = pba_pipeline(&history, 3, &config).unwrap();
    assert!(out.fallback.is_some());
    assert_eq!(out.predictions, vec![6.0, 7.0, 8.0]);
}

#[test]
fn decisions_csv_schema() {
    let records = vec![
        DecisionRecord::from(hpa_decide(0, 1.0, &hpa(0.5), 15.0, &[])),
        DecisionRecord::from(pba_decide(&[100.0, 200.0], 0, &pba(40))),
    ];
    let mut buf = Vec::new();
    write_decisions_csv(&records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text,
        "time,source,desired,ft,ct,prediction\n15.0,HPA,1,,,\n3570.0,PBA,5,5,3,200.0\n"
    );
}

#[test]
fn hpa_controller_follows_load() {
    // 100 req/s steady for an hour: target 0.5 at 40 req/pod settles at 5 pods.
    let stream = ArrivalStream {
        per_tick: vec![100; 3600],
        tick_length: 1,
    };
    let spec = FunctionSpec::default();
    let run = simulate(
        &stream,
        &spec,
        &mut HpaController::new(HpaConfig::default()),
    );
    let last = run.records.last().unwrap();
    assert_eq!(last.pods(), 5);
    assert_eq!(last.pods_ready, 5);
    assert!(run.decisions.iter().all(|d| d.source == "HPA"));
    assert_eq!(run.decisions.len(), 240);
    let served: u64 = run.records.iter().map(|r| r.served).sum();
    assert_eq!(served, 360_000);
}

#[test]
fn hpa_scales_to_zero_after_idle() {
    let mut per_tick = vec![40; 600];
    per_tick.extend(vec![0; 1200]);
    let stream = ArrivalStream {
        per_tick,
        tick_length: 1,
    };
    let spec = FunctionSpec::default();
    let run = simulate(
        &stream,
        &spec,
        &mut HpaController::new(HpaConfig::default()),
    );
    assert_eq!(run.records.last().unwrap().pods(), 0);
}

fn oracle_run(trace: &WorkloadTrace, config: &PbaConfig, spec: &FunctionSpec) -> SimulationRun {
    let stream = expand_arrivals(trace, 1, ArrivalMode::Deterministic, 0).unwrap();
    let predictions = interval_predictions(trace.hourly(), 3600.0, config.interval);
    simulate(
        &stream,
        spec,
        &mut PbaController::new(config.clone(), predictions),
    )
}

#[test]
fn perfect_oracle_reference_day_has_no_cold_hits() {
    let trace = generate_trace(&WorkloadSpec {
        days: 1,
        ..WorkloadSpec::default()
    })
    .unwrap();
    let run = oracle_run(&trace, &PbaConfig::default(), &FunctionSpec::default());
    let cold: u64 = run.records[3600..].iter().map(|r| r.cold_hits).sum();
    assert_eq!(cold, 0);
    assert_eq!(run.decisions.len(), 24);
}

proptest! {
    #[test]
    fn pba_monotone(
        preds in proptest::collection::vec(0.0f64..500.0, 2..6),
        bumps in proptest::collection::vec(0.0f64..100.0, 6),
        rpp in 1u32..60,
        idx in 0usize..5,
    ) {
        let idx = idx % preds.len();
        let config = pba(rpp);
        let raised: Vec<f64> = preds.iter().zip(&bumps).map(|(p, b)| p + b).collect();
        prop_assert!(
            pba_decide(&raised, idx, &config).decision.desired_replicas
                >= pba_decide(&preds, idx, &config).decision.desired_replicas
        );
    }

    #[test]
    fn pba_exactness(
        preds in proptest::collection::vec(0.001f64..2000.0, 2..6),
        rpp in 1u32..60,
        idx in 0usize..5,
    ) {
        let idx = idx % preds.len();
        let config = PbaConfig { max_replicas: u32::MAX, ..pba(rpp) };
        let d = pba_decide(&preds, idx, &config).decision.desired_replicas as f64;
        let need = preds[idx].max(preds.get(idx + 1).copied().unwrap_or(0.0));
        let rpp = rpp as f64;
        prop_assert!(d * rpp >= need);
        prop_assert!((d - 1.0) * rpp < need);
    }

    #[test]
    fn hpa_fixed_point(current in 1u32..100, target in 0.05f64..1.0) {
        let config = HpaConfig { target_utilization: target, ..HpaConfig::default() };
        prop_assert_eq!(hpa_decide(current, target, &config, 0.0, &[]).decision.desired_replicas, current);
    }

    #[test]
    fn hpa_respects_clamps(
        current in 0u32..200,
        util in 0.0f64..=1.0,
        min in 0u32..10,
        span in 0u32..50,
        past in proptest::collection::vec(0u32..300, 0..5),
    ) {
        let config = HpaConfig { min_replicas: min, max_replicas: (min + span).max(1), ..HpaConfig::default() };
        let history: Vec<Recommendation> =
            past.iter().enumerate().map(|(i, &r)| Recommendation { at: i as f64 * 15.0, replicas: r }).collect();
        let d = hpa_decide(current, util, &config, 60.0, &history).decision.desired_replicas;
        prop_assert!(d >= config.min_replicas && d <= config.max_replicas);
    }

    #[test]
    fn pba_respects_clamps(
        preds in proptest::collection::vec(0.0f64..10_000.0, 1..6),
        max in 1u32..20,
        idx in 0usize..5,
    ) {
        let idx = idx % preds.len();
        let config = PbaConfig { max_replicas: max, ..pba(40) };
        prop_assert!(pba_decide(&preds, idx, &config).decision.desired_replicas <= max);
        prop_assert!(pba_first(&preds, &config).decision.desired_replicas <= max);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn perfect_oracle_no_cold_after_first_interval(
        base in 0.0f64..20.0,
        extra in 0.0f64..150.0,
        peak_hour in 0usize..24,
        noise in 0.0f64..0.5,
        seed in any::<u64>(),
        startup in 0.0f64..60.0,
        slack in 0.0f64..60.0,
    ) {
        let trace = generate_trace(&WorkloadSpec {
            days: 1,
            base_rate: base,
            peak_rate: base + extra,
            peak_hour,
            noise_fraction: noise,
            seed,
        })
        .unwrap();
        let spec = FunctionSpec { pod_startup: startup, ..FunctionSpec::default() };
        let lead = startup + slack;
        let config = PbaConfig {
            lead_time: lead,
            initial_delay: lead,
            ..PbaConfig::default()
        };
        let run = oracle_run(&trace, &config, &spec);
        let cold: u64 = run.records[3600..].iter().map(|r| r.cold_hits).sum();
        prop_assert_eq!(cold, 0);
    }
}
