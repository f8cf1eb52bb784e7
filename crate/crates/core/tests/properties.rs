//! Property suites for the conditioning, statistics and model stages.

use std::sync::OnceLock;

use proptest::prelude::*;
use thermodyn::condition::{
    deaverage_setpoints, deaverage_with, detect_unit, estimate_switched_setpoint, fill_occupancy, round_to_increment, segment_runs, time_average,
    DeaverageOptions, OccupancyFilterConfig, TempUnit,
};
use thermodyn::ingest::{parse_home, write_home_csv, ColumnMap, EventKind, Sample};
use thermodyn::model::{evaluate, fit_points, predict_empirical, FitPoint, OverrideModel};
use thermodyn::pipeline::{process_home, PipelineConfig, RunOptions};
use thermodyn::stats::{QuantileSurface, StatsAccumulator, StatsConfig};
use thermodyn::synth::{SynthConfig, Synthesizer};
use thermodyn::{c_to_f, HvacMode};

/// Straightforward restatement of the fill rule: a run of misses bounded by detections on
/// both sides becomes occupied when it lasts at most `w` minutes.
fn fill_oracle(motion: &[bool], w: u32) -> Vec<bool> {
    let mut out = motion.to_vec();
    let mut i = 0;
    while i < motion.len() {
        if motion[i] {
            i += 1;
            continue;
        }
        let j = (i..motion.len()).find(|&k| motion[k]).unwrap_or(motion.len());
        if i > 0 && j < motion.len() && (j - i) as u32 * 5 <= w {
            out[i..j].iter_mut().for_each(|x| *x = true);
        }
        i = j;
    }
    out
}

fn window() -> impl Strategy<Value = u32> {
    (0u32..=24).prop_map(|k| k * 5)
}

fn motion() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(prop::bool::weighted(0.3), 0..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn fill_matches_rule(m in motion(), w in window()) {
        let cfg = OccupancyFilterConfig::new(w).unwrap();
        prop_assert_eq!(fill_occupancy(&m, cfg), fill_oracle(&m, w));
    }

    #[test]
    fn fill_is_idempotent(m in motion(), w in window()) {
        let cfg = OccupancyFilterConfig::new(w).unwrap();
        let once = fill_occupancy(&m, cfg);
        prop_assert_eq!(fill_occupancy(&once, cfg), once);
    }

    #[test]
    fn fill_is_monotone_in_window(m in motion(), a in window(), b in window()) {
        let (lo, hi) = (a.min(b), a.max(b));
        let f_lo = fill_occupancy(&m, OccupancyFilterConfig::new(lo).unwrap());
        let f_hi = fill_occupancy(&m, OccupancyFilterConfig::new(hi).unwrap());
        prop_assert!(f_lo.iter().zip(&f_hi).all(|(x, y)| !x || *y));
        prop_assert!(segment_runs(&f_hi).len() <= segment_runs(&f_lo).len());
        prop_assert!(m.iter().zip(&f_lo).all(|(x, y)| !x || *y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn midpoint_inversion_is_exact(celsius in any::<bool>(), a in -40i32..40, b in -40i32..40) {
        let inc = if celsius { 0.5 } else { 1.0 };
        let (x0, x1) = (60.0 + a as f64 * inc, 60.0 + b as f64 * inc);
        let x_tilde = time_average(x0, x1, 2.5);
        prop_assert_eq!(round_to_increment(estimate_switched_setpoint(x0, x_tilde), inc), x1);
    }

    /// Odd-increment changes at least two samples apart, each switching halfway through its
    /// interval, are all recovered. (An even-increment change averages onto the grid and
    /// passes through as a one-interval intermediate step.)
    #[test]
    fn midpoint_changes_recovered(
        celsius in any::<bool>(),
        start in 0i32..20,
        steps in prop::collection::vec((-3i32..=2, any::<bool>(), 2usize..6), 1..12),
    ) {
        let (unit, inc) = if celsius { (TempUnit::Celsius, 0.5) } else { (TempUnit::Fahrenheit, 1.0) };
        let mut truth = vec![start as f64 * inc; 3];
        for (k, up, hold) in steps {
            let k = if up { 2 * k.abs() + 1 } else { -(2 * k.abs() + 1) };
            let last = *truth.last().unwrap();
            truth.extend(std::iter::repeat_n(last + k as f64 * inc, hold));
        }
        let sampled: Vec<f64> = std::iter::once(truth[0])
            .chain(truth.windows(2).map(|w| if w[0] == w[1] { w[1] } else { time_average(w[0], w[1], 2.5) }))
            .collect();
        let (fixed, _) = deaverage_setpoints(&sampled, unit, 1e-3).unwrap();
        prop_assert_eq!(&fixed, &truth);
        let (ahead, _) = deaverage_with(&sampled, unit, &DeaverageOptions::default()).unwrap();
        prop_assert_eq!(ahead, truth);
    }

    #[test]
    fn rounding_is_idempotent(x in -200.0f64..200.0, celsius in any::<bool>()) {
        let inc = if celsius { 0.5 } else { 1.0 };
        let r = round_to_increment(x, inc);
        prop_assert_eq!(round_to_increment(r, inc), r);
        prop_assert!((r - x).abs() <= inc / 2.0 + 1e-12);
    }

    /// Whole-°F setpoint histories read as Fahrenheit and half-°C ones as Celsius, as long as
    /// no delta is a 5 °C (= 9 °F) multiple.
    #[test]
    fn unit_detection(steps in prop::collection::vec((1i32..=8, any::<bool>()), 3..30), celsius in any::<bool>()) {
        let signed = steps.iter().map(|&(k, up)| if up { k } else { -k });
        let deltas: Vec<f64> = if celsius {
            signed.map(|k| c_to_f(0.5 * k as f64) - c_to_f(0.0)).collect()
        } else {
            signed.map(|k| k as f64).collect()
        };
        let want = if celsius { TempUnit::Celsius } else { TempUnit::Fahrenheit };
        prop_assert_eq!(detect_unit(&deltas, 1e-3), want);
    }

    #[test]
    fn exact_law_is_refit(a in 0.1f64..2.0, b in -0.3f64..0.1, n in 2usize..10) {
        let pts: Vec<FitPoint> = (1..=n)
            .map(|d| FitPoint { dod_abs: d as f64, ttd_hours: a * (b * d as f64).exp(), weight: d as f64 })
            .collect();
        let f = fit_points(&pts).unwrap();
        prop_assert!((f.a_hours - a).abs() < 1e-9 * a.max(1.0));
        prop_assert!((f.b_per_degf - b).abs() < 1e-9);
        let m = OverrideModel::new(HvacMode::Heat, 0.5, f.a_hours, f.b_per_degf);
        prop_assert!((evaluate(&m, 3.0).ttd_hours - a * (3.0 * b).exp()).abs() < 1e-9);
    }

    #[test]
    fn override_fraction_monotone_in_horizon(
        ttds in prop::collection::vec(0u32..24, 1..200),
        h1 in 0.0f64..130.0,
        h2 in 0.0f64..130.0,
    ) {
        let mut s = QuantileSurface::new();
        for t in &ttds {
            s.add(-3.0, t * 5);
        }
        let (lo, hi) = (h1.min(h2), h1.max(h2));
        let f = |h| predict_empirical(&s, HvacMode::Cool, -3.0, h).unwrap().fraction_overriding;
        prop_assert!(f(lo) <= f(hi));
        prop_assert!((0.0..=1.0).contains(&f(lo)));
    }

    #[test]
    fn surface_quantile_matches_sorted_samples(ttds in prop::collection::vec(0u32..50, 1..100), q in 0.0f64..=1.0) {
        let mut s = QuantileSurface::new();
        let mut v: Vec<u32> = ttds.iter().map(|t| t * 5).collect();
        for &t in &v {
            s.add(2.0, t);
        }
        v.sort_unstable();
        let h = (v.len() - 1) as f64 * q;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        let want = v[lo] as f64 + (h - lo as f64) * (v[hi] as f64 - v[lo] as f64);
        prop_assert!((s.quantile(2, q, None).unwrap() - want).abs() < 1e-9);
    }
}

fn sample_strategy() -> impl Strategy<Value = Vec<Sample>> {
    let row = (
        (0i32..200).prop_map(|x| 50.0 + x as f64 * 0.125),
        (0i32..200).prop_map(|x| 60.0 + x as f64 * 0.125),
        (0i32..400).prop_map(|x| 40.0 + x as f64 * 0.1),
        prop::option::of((-400i32..1200).prop_map(|x| x as f64 * 0.1)),
        prop::sample::select(EventKind::ALL.to_vec()),
        any::<bool>(),
        0u16..=300,
        0u16..=300,
    );
    prop::collection::vec(row, 1..60).prop_map(|rows| {
        let t0 = chrono::NaiveDate::from_ymd_opt(2017, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        rows.into_iter()
            .enumerate()
            .map(|(i, (h, c, t, o, e, m, hr, cr))| Sample {
                timestamp: t0 + chrono::Duration::minutes(5 * i as i64),
                heat_setpoint: h,
                cool_setpoint: c,
                indoor_temp: t,
                outdoor_temp: o,
                event: e,
                motion: m,
                heat_runtime: hr,
                cool_runtime: cr,
                mode_hint: None,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn csv_round_trip(samples in sample_strategy()) {
        let mut buf = Vec::new();
        write_home_csv(&mut buf, &samples).unwrap();
        let parsed = parse_home(buf.as_slice(), "h", &ColumnMap::default()).unwrap();
        prop_assert_eq!(parsed.report.rows_kept as usize, samples.len());
        for (a, b) in parsed.samples.iter().zip(&samples) {
            prop_assert_eq!(a.timestamp, b.timestamp);
            prop_assert_eq!(a.event, b.event);
            prop_assert_eq!(a.motion, b.motion);
            prop_assert_eq!((a.heat_runtime, a.cool_runtime), (b.heat_runtime, b.cool_runtime));
            prop_assert!((a.heat_setpoint - b.heat_setpoint).abs() < 1e-9);
            prop_assert!((a.indoor_temp - b.indoor_temp).abs() < 1e-9);
            prop_assert_eq!(a.outdoor_temp.is_some(), b.outdoor_temp.is_some());
        }
    }
}

/// Per-home accumulators of a small synthetic corpus, built once.
fn home_stats() -> &'static Vec<StatsAccumulator> {
    static CELL: OnceLock<Vec<StatsAccumulator>> = OnceLock::new();
    CELL.get_or_init(|| {
        let synth = Synthesizer::new(SynthConfig {
            seed: 8,
            n_homes: 12,
            days: 40,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig::default();
        (0..synth.n_homes())
            .map(|i| {
                let h = synth.home(i);
                let parsed = thermodyn::ingest::ParsedHome {
                    home_id: h.meta.home_id,
                    samples: h.samples,
                    report: Default::default(),
                };
                process_home(&parsed, &cfg, &RunOptions::default()).unwrap().stats
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Any partition into shards, merged in any order, equals serial accumulation.
    #[test]
    fn shard_merge_is_exact(assign in prop::collection::vec(0usize..4, 12), order in Just(()).prop_perturb(|_, mut rng| {
        let mut o: Vec<usize> = (0..4).collect();
        for i in (1..4).rev() { o.swap(i, rng.random_range(0..=i)); }
        o
    })) {
        let parts = home_stats();
        let mut serial = StatsAccumulator::new(StatsConfig::default()).unwrap();
        for p in parts {
            serial.merge(p).unwrap();
        }
        let mut shards: Vec<StatsAccumulator> = (0..4).map(|_| StatsAccumulator::new(StatsConfig::default()).unwrap()).collect();
        for (p, &s) in parts.iter().zip(&assign) {
            shards[s].merge(p).unwrap();
        }
        let mut merged = StatsAccumulator::new(StatsConfig::default()).unwrap();
        for &s in &order {
            merged.merge(&shards[s]).unwrap();
        }
        prop_assert!(merged == serial);
    }
}
