use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Widest DoD bin, °F.
pub const MAX_DOD_BIN: i32 = 10;

/// Nearest whole-°F bin, halves rounded away from zero. `None` for `|dod| < 0.5`.
///
/// Values are snapped to 1e-6 first so °C-derived DoDs such as 4.5 °F (2.5 °C) are not at
/// the mercy of representation error.
pub fn dod_bin(dod: f64) -> Option<i32> {
    let snapped = (dod * 1e6).round() / 1e6;
    let b = snapped.round() as i32;
    (b != 0).then_some(b)
}

/// Per-DoD-bin TTD samples, kept losslessly as a count for every distinct minute value.
///
/// Storage is bounded by the number of distinct TTD values (multiples of 5 min below the
/// adaptation cutoff), so it is as compact as a sketch while every quantile is an exact
/// order statistic and merging is plain addition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantileSurface {
    bins: BTreeMap<i32, BTreeMap<u32, u64>>,
    /// DoD below −10.5 °F.
    pub underflow: u64,
    /// DoD above +10.5 °F.
    pub overflow: u64,
    /// |DoD| below 0.5 °F.
    pub near_zero: u64,
}

impl QuantileSurface {
    pub fn new() -> Self {
        QuantileSurface::default()
    }

    pub fn add(&mut self, dod: f64, ttd_minutes: u32) {
        self.add_n(dod, ttd_minutes, 1);
    }

    pub fn add_n(&mut self, dod: f64, ttd_minutes: u32, n: u64) {
        match dod_bin(dod) {
            None => self.near_zero += n,
            Some(b) if b < -MAX_DOD_BIN => self.underflow += n,
            Some(b) if b > MAX_DOD_BIN => self.overflow += n,
            Some(b) => *self.bins.entry(b).or_default().entry(ttd_minutes).or_default() += n,
        }
    }

    /// Occupied bins in ascending DoD order.
    pub fn bins(&self) -> impl Iterator<Item = i32> + '_ {
        self.bins.keys().copied()
    }

    pub fn count(&self, bin: i32) -> u64 {
        self.bins.get(&bin).map_or(0, |m| m.values().sum())
    }

    /// Samples strictly above `min_exclusive` minutes.
    pub fn count_above(&self, bin: i32, min_exclusive: Option<u32>) -> u64 {
        self.iter_bin(bin, min_exclusive).map(|(_, n)| n).sum()
    }

    pub fn total(&self) -> u64 {
        self.bins.values().flat_map(|m| m.values()).sum::<u64>()
            + self.underflow
            + self.overflow
            + self.near_zero
    }

    fn iter_bin(&self, bin: i32, min_exclusive: Option<u32>) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.bins
            .get(&bin)
            .into_iter()
            .flat_map(|m| m.iter())
            .filter(move |(&v, _)| min_exclusive.map_or(true, |lo| v > lo))
            .map(|(&v, &n)| (v, n))
    }

    /// The bin's samples in ascending order.
    pub fn samples(&self, bin: i32) -> Vec<u32> {
        self.iter_bin(bin, None)
            .flat_map(|(v, n)| std::iter::repeat(v).take(n as usize))
            .collect()
    }

    /// Value at 0-based rank `k` among the samples above `min_exclusive`.
    fn order_stat(&self, bin: i32, min_exclusive: Option<u32>, k: u64) -> Option<u32> {
        let mut seen = 0;
        for (v, n) in self.iter_bin(bin, min_exclusive) {
            seen += n;
            if k < seen {
                return Some(v);
            }
        }
        None
    }

    /// Linear-interpolation quantile (R type 7) of the bin's samples above `min_exclusive`,
    /// in minutes. `None` for an empty bin or `q` outside `[0, 1]`.
    pub fn quantile(&self, bin: i32, q: f64, min_exclusive: Option<u32>) -> Option<f64> {
        if !(0.0..=1.0).contains(&q) {
            return None;
        }
        let n = self.count_above(bin, min_exclusive);
        if n == 0 {
            return None;
        }
        let h = (n - 1) as f64 * q;
        let lo = h.floor() as u64;
        let frac = h - lo as f64;
        let x_lo = f64::from(self.order_stat(bin, min_exclusive, lo)?);
        if frac == 0.0 {
            return Some(x_lo);
        }
        let x_hi = f64::from(self.order_stat(bin, min_exclusive, lo + 1)?);
        Some(x_lo + frac * (x_hi - x_lo))
    }

    /// Quantile treating each sample `v` as spread uniformly over `[v, v + width)`.
    ///
    /// Detected TTDs are differences of interval start times, so the true delay of a
    /// sample recorded as `v` lies somewhere in that cell. Interpolating inside the cell
    /// (the grouped-data quantile) removes the downward bias of order statistics taken on
    /// the grid. `None` for an empty bin, `q` outside `[0, 1]` or zero width.
    pub fn grouped_quantile(&self, bin: i32, q: f64, min_exclusive: Option<u32>, width: u32) -> Option<f64> {
        if !(0.0..=1.0).contains(&q) || width == 0 {
            return None;
        }
        let n = self.count_above(bin, min_exclusive);
        if n == 0 {
            return None;
        }
        let target = q * n as f64;
        let mut before = 0.0;
        let mut last = None;
        for (v, c) in self.iter_bin(bin, min_exclusive) {
            let c = c as f64;
            if target <= before + c {
                return Some(f64::from(v) + f64::from(width) * (target - before) / c);
            }
            before += c;
            last = Some(v);
        }
        last.map(|v| f64::from(v) + f64::from(width))
    }

    /// Fraction of the bin's samples at or below `horizon_minutes`. `None` for an empty bin.
    pub fn cdf(&self, bin: i32, horizon_minutes: f64) -> Option<f64> {
        let n = self.count(bin);
        if n == 0 {
            return None;
        }
        let below: u64 = self
            .iter_bin(bin, None)
            .take_while(|(v, _)| f64::from(*v) <= horizon_minutes)
            .map(|(_, c)| c)
            .sum();
        Some(below as f64 / n as f64)
    }

    /// Union of samples. Configuration is fixed, so this never fails; the `Result` keeps
    /// the signature uniform with the other accumulators.
    pub fn merge(&mut self, other: &QuantileSurface) -> Result<(), StatsError> {
        for (&b, m) in &other.bins {
            let dst = self.bins.entry(b).or_default();
            for (&v, &n) in m {
                *dst.entry(v).or_default() += n;
            }
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.near_zero += other.near_zero;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_round_half_away() {
        assert_eq!(dod_bin(2.0), Some(2));
        assert_eq!(dod_bin(-1.8), Some(-2));
        assert_eq!(dod_bin(4.5), Some(5));
        assert_eq!(dod_bin(-4.5), Some(-5));
        assert_eq!(dod_bin(0.3), None);
        assert_eq!(dod_bin(0.9), Some(1));
    }

    #[test]
    fn median_is_order_statistic() {
        let mut s = QuantileSurface::new();
        for v in [17, 5, 40, 25] {
            s.add(-2.0, v);
        }
        assert_eq!(s.samples(-2), vec![5, 17, 25, 40]);
        assert_eq!(s.quantile(-2, 0.5, None), Some(21.0));
        assert_eq!(s.quantile(-2, 0.5, Some(10)), Some(25.0));
        assert_eq!(s.quantile(-2, 0.0, None), Some(5.0));
        assert_eq!(s.quantile(-2, 1.0, None), Some(40.0));
        assert_eq!(s.quantile(3, 0.5, None), None);
    }

    #[test]
    fn out_of_range_counted() {
        let mut s = QuantileSurface::new();
        s.add(12.0, 5);
        s.add(-11.0, 5);
        s.add(0.1, 5);
        assert_eq!((s.overflow, s.underflow, s.near_zero, s.total()), (1, 1, 1, 3));
    }

    #[test]
    fn cdf_steps() {
        let mut s = QuantileSurface::new();
        for v in [0, 10, 10, 30] {
            s.add(1.0, v);
        }
        assert_eq!(s.cdf(1, 0.0), Some(0.25));
        assert_eq!(s.cdf(1, 10.0), Some(0.75));
        assert_eq!(s.cdf(1, f64::INFINITY), Some(1.0));
        assert_eq!(s.cdf(2, 10.0), None);
    }
}
