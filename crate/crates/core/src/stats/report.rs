use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{QuantileSurface, StatsAccumulator};
use crate::features::MentalModelClass;
use crate::{HvacMode, FORMAT_VERSION};

/// Quantile levels tabulated per DoD bin.
pub const QUANTILE_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Bins with fewer samples are flagged and kept out of fits.
pub const LOW_CONFIDENCE_N: u64 = 30;

/// Round for stable text output.
pub fn round_to(x: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    let r = (x * p).round() / p;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn r6(x: f64) -> f64 {
    round_to(x, 6)
}

fn ratio(a: u64, b: u64) -> Option<f64> {
    (b > 0).then(|| r6(a as f64 / b as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub dod: i32,
    pub n: u64,
    pub ttd50_minutes: Option<f64>,
    pub low_confidence: bool,
    /// Level (as `"0.1"` …) to minutes.
    pub quantiles: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentalSummary {
    pub episodes: u64,
    pub homes: u64,
    /// Class name to fraction of episodes.
    pub per_episode: BTreeMap<String, Option<f64>>,
    /// Class name to fraction of homes, by each home's modal class.
    pub per_user: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub seed: Option<u64>,
    pub homes: u64,
    pub mscs: u64,
    pub samples: u64,
    pub msc_per_day_pooled: Option<f64>,
    pub msc_per_day_home_mean: Option<f64>,
    pub ttd_n: u64,
    pub mean_ttd_minutes: Option<f64>,
    pub ttd_n_after_first_peak: u64,
    pub mean_ttd_after_first_peak_minutes: Option<f64>,
    /// Mode to fraction of MSCs that increase energy use.
    pub intensive_fraction: BTreeMap<String, Option<f64>>,
    pub intensive_n: BTreeMap<String, u64>,
    pub prior_event_n: u64,
    pub prior_event_fractions: BTreeMap<String, f64>,
    /// Mode to per-bin TTD quantiles over the analysis set.
    pub ttd_by_dod: BTreeMap<String, Vec<BinSummary>>,
    pub mental_models: MentalSummary,
    /// Filter window to number of occupancy segments of at least two hours.
    pub segments_2h_or_longer: BTreeMap<u32, u64>,
    /// Filter window to mode to pooled analysis-set median TTD.
    pub sensitivity_median_ttd: BTreeMap<u32, BTreeMap<String, Option<f64>>>,
}

/// Per-bin quantile table of one surface.
pub fn surface_summary(surface: &QuantileSurface) -> Vec<BinSummary> {
    surface
        .bins()
        .map(|b| {
            let n = surface.count(b);
            BinSummary {
                dod: b,
                n,
                ttd50_minutes: surface.quantile(b, 0.5, None).map(r6),
                low_confidence: n < LOW_CONFIDENCE_N,
                quantiles: QUANTILE_LEVELS
                    .iter()
                    .filter_map(|&q| surface.quantile(b, q, None).map(|v| (format!("{q:.1}"), r6(v))))
                    .collect(),
            }
        })
        .collect()
}

/// Median of all samples of a surface pooled across bins.
pub fn pooled_median(surface: &QuantileSurface) -> Option<f64> {
    let mut pooled = QuantileSurface::new();
    for b in surface.bins() {
        for v in surface.samples(b) {
            pooled.add(1.0, v);
        }
    }
    pooled.quantile(1, 0.5, None)
}

/// Scalar summaries and per-figure tables. Empty inputs give `null` values and zero counts.
pub fn summarize(acc: &StatsAccumulator, seed: Option<u64>) -> Report {
    let mscs: u64 = acc.homes.values().map(|t| t.mscs).sum();
    let samples: u64 = acc.homes.values().map(|t| t.samples).sum();
    let per_day = 1440.0 / crate::SAMPLE_MINUTES as f64;
    let pooled = (samples > 0).then(|| r6(mscs as f64 / (samples as f64 / per_day)));
    let per_home: Vec<f64> = acc
        .homes
        .values()
        .filter(|t| t.samples > 0)
        .map(|t| t.mscs as f64 / (t.samples as f64 / per_day))
        .collect();
    let home_mean = (!per_home.is_empty()).then(|| r6(per_home.iter().sum::<f64>() / per_home.len() as f64));

    let mut intensive_fraction = BTreeMap::new();
    let mut intensive_n = BTreeMap::new();
    let mut ttd_by_dod = BTreeMap::new();
    for mode in HvacMode::ALL {
        let imp = acc.impact.get(mode);
        intensive_fraction.insert(mode.to_string(), ratio(imp.intensive, imp.intensive + imp.saving));
        intensive_n.insert(mode.to_string(), imp.intensive + imp.saving);
        ttd_by_dod.insert(mode.to_string(), surface_summary(acc.surface.get(mode)));
    }

    let prior_event_n: u64 = acc.prior_event.values().sum();
    let prior_event_fractions = acc
        .prior_event
        .iter()
        .map(|(k, &v)| (k.clone(), r6(v as f64 / prior_event_n as f64)))
        .collect();

    let class_map = |c: &crate::features::EpisodeCounts| {
        MentalModelClass::ALL
            .iter()
            .map(|&k| (k.as_str().to_string(), ratio(c.get(k), c.total())))
            .collect()
    };
    let mental_models = MentalSummary {
        episodes: acc.episodes.total(),
        homes: acc.home_classes.total(),
        per_episode: class_map(&acc.episodes),
        per_user: class_map(&acc.home_classes),
    };

    let segments_2h_or_longer = acc
        .segments
        .iter()
        .map(|(&w, h)| {
            let n = h
                .edges()
                .windows(2)
                .zip(h.counts())
                .filter(|(e, _)| e[0] >= 120.0)
                .map(|(_, &c)| c)
                .sum::<u64>()
                + h.overflow();
            (w, n)
        })
        .collect();

    let sensitivity_median_ttd = acc
        .sensitivity
        .iter()
        .map(|(&w, s)| {
            let per: BTreeMap<String, Option<f64>> = HvacMode::ALL
                .iter()
                .map(|&m| (m.to_string(), pooled_median(s.get(m)).map(r6)))
                .collect();
            (w, per)
        })
        .collect();

    Report {
        format_version: FORMAT_VERSION,
        seed,
        homes: acc.homes.len() as u64,
        mscs,
        samples,
        msc_per_day_pooled: pooled,
        msc_per_day_home_mean: home_mean,
        ttd_n: acc.ttd_n,
        mean_ttd_minutes: ratio(acc.ttd_sum, acc.ttd_n),
        ttd_n_after_first_peak: acc.ttd_n_after_peak,
        mean_ttd_after_first_peak_minutes: ratio(acc.ttd_sum_after_peak, acc.ttd_n_after_peak),
        intensive_fraction,
        intensive_n,
        prior_event_n,
        prior_event_fractions,
        ttd_by_dod,
        mental_models,
        segments_2h_or_longer,
        sensitivity_median_ttd,
    }
}

fn fmt_edge(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Plot-data tables, one CSV each, as `(file name, contents)` in a fixed order.
///
/// * `segment_lengths.csv`: `window_minutes,length_lo_minutes,length_hi_minutes,count`
/// * `time_of_day.csv`: `tod_start_minutes,weekday,weekend`
/// * `tod_duration.csv`: `tod_start_minutes,lt_1_5h,1_5_to_3h,3_to_6h,6_to_12h,ge_12h`
/// * `ttd_histogram.csv`: `ttd_lo_minutes,ttd_hi_minutes,count,fraction`
/// * `prior_event.csv`: `prior_event,count,fraction`
/// * `dod_indoor_<mode>.csv`: `dod_f,indoor_lo_f,indoor_hi_f,count`
/// * `ttd_surface_<mode>.csv`: `dod_f,n,low_confidence,q0.1,…,q0.9`
/// * `filter_sensitivity.csv`: `window_minutes,mode,dod_f,n,ttd50_minutes`
pub fn figure_tables(acc: &StatsAccumulator) -> Vec<(String, String)> {
    let mut out = Vec::new();

    let mut s = String::from("window_minutes,length_lo_minutes,length_hi_minutes,count\n");
    for (w, h) in &acc.segments {
        for (e, c) in h.edges().windows(2).zip(h.counts()) {
            s += &format!("{w},{},{},{c}\n", fmt_edge(e[0]), fmt_edge(e[1]));
        }
    }
    out.push(("segment_lengths.csv".into(), s));

    let mut s = String::from("tod_start_minutes,weekday,weekend\n");
    for (i, e) in acc.tod_weekday.edges().windows(2).enumerate() {
        s += &format!("{},{},{}\n", e[0], acc.tod_weekday.counts()[i], acc.tod_weekend.counts()[i]);
    }
    out.push(("time_of_day.csv".into(), s));

    let dur = acc.tod_duration.y_edges().len() - 1;
    let mut s = String::from("tod_start_minutes,lt_1_5h,1_5_to_3h,3_to_6h,6_to_12h,ge_12h\n");
    for (i, e) in acc.tod_duration.x_edges().windows(2).enumerate() {
        let row: Vec<String> = (0..dur).map(|j| acc.tod_duration.get(i, j).to_string()).collect();
        s += &format!("{},{}\n", e[0], row.join(","));
    }
    out.push(("tod_duration.csv".into(), s));

    let total = acc.ttd.total();
    let frac = |c: u64| if total > 0 { format!("{:.6}", c as f64 / total as f64) } else { String::new() };
    let mut s = String::from("ttd_lo_minutes,ttd_hi_minutes,count,fraction\n");
    for (e, &c) in acc.ttd.edges().windows(2).zip(acc.ttd.counts()) {
        s += &format!("{},{},{c},{}\n", e[0], e[1], frac(c));
    }
    s += &format!(
        "{},inf,{},{}\n",
        acc.ttd.edges().last().unwrap(),
        acc.ttd.overflow(),
        frac(acc.ttd.overflow())
    );
    out.push(("ttd_histogram.csv".into(), s));

    let n: u64 = acc.prior_event.values().sum();
    let mut s = String::from("prior_event,count,fraction\n");
    for (k, &c) in &acc.prior_event {
        s += &format!("{k},{c},{:.6}\n", c as f64 / n as f64);
    }
    out.push(("prior_event.csv".into(), s));

    for mode in HvacMode::ALL {
        let h = acc.dod_indoor.get(mode);
        let mut s = String::from("dod_f,indoor_lo_f,indoor_hi_f,count\n");
        for (i, xe) in h.x_edges().windows(2).enumerate() {
            let dod = (xe[0] + 0.5).round() as i32;
            for (j, ye) in h.y_edges().windows(2).enumerate() {
                let c = h.get(i, j);
                if c > 0 {
                    s += &format!("{dod},{},{},{c}\n", ye[0], ye[1]);
                }
            }
        }
        out.push((format!("dod_indoor_{mode}.csv"), s));
    }

    for mode in HvacMode::ALL {
        let mut s = String::from("dod_f,n,low_confidence");
        for q in QUANTILE_LEVELS {
            s += &format!(",q{q:.1}");
        }
        s.push('\n');
        for b in surface_summary(acc.surface.get(mode)) {
            s += &format!("{},{},{}", b.dod, b.n, u8::from(b.low_confidence));
            for q in QUANTILE_LEVELS {
                s += &format!(",{}", b.quantiles.get(&format!("{q:.1}")).map(|v| format!("{v:.4}")).unwrap_or_default());
            }
            s.push('\n');
        }
        out.push((format!("ttd_surface_{mode}.csv"), s));
    }

    let mut s = String::from("window_minutes,mode,dod_f,n,ttd50_minutes\n");
    for (w, per) in &acc.sensitivity {
        for mode in HvacMode::ALL {
            let surf = per.get(mode);
            for b in surf.bins() {
                let med = surf.quantile(b, 0.5, None).map(|v| format!("{v:.4}")).unwrap_or_default();
                s += &format!("{w},{mode},{b},{},{med}\n", surf.count(b));
            }
        }
    }
    out.push(("filter_sensitivity.csv".into(), s));
    out
}

/// Write [`figure_tables`] into `dir`.
pub fn write_figures(acc: &StatsAccumulator, dir: &std::path::Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in figure_tables(acc) {
        let mut f = std::fs::File::create(dir.join(name))?;
        f.write_all(body.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::StatsConfig;

    #[test]
    fn empty_report_has_markers() {
        let acc = StatsAccumulator::new(StatsConfig::default()).unwrap();
        let r = summarize(&acc, None);
        assert_eq!(r.mscs, 0);
        assert_eq!(r.mean_ttd_minutes, None);
        assert_eq!(r.intensive_fraction["heat"], None);
        assert!(serde_json::to_string(&r).unwrap().contains("\"mean_ttd_minutes\":null"));
        assert_eq!(figure_tables(&acc).len(), 10);
    }

    #[test]
    fn single_msc_mean() {
        let mut acc = StatsAccumulator::new(StatsConfig::default()).unwrap();
        acc.ttd_sum = 30;
        acc.ttd_n = 1;
        assert_eq!(summarize(&acc, Some(1)).mean_ttd_minutes, Some(30.0));
    }
}
