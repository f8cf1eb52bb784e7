use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Lognormal restricted to `(lo, hi]` minutes with a prescribed median.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedLogNormal {
    mu: f64,
    sigma: f64,
    p_lo: f64,
    p_hi: f64,
}

fn std_normal() -> Normal {
    Normal::standard()
}

impl TruncatedLogNormal {
    /// Location chosen so that the median of the truncated law is `median`.
    ///
    /// Truncating a normal location family to a fixed window keeps it stochastically
    /// increasing in the location, so the truncated median is monotone in `mu` and
    /// bisection finds it.
    /// `None` unless `lo < median < hi`.
    pub fn with_median(median: f64, sigma: f64, lo: f64, hi: f64) -> Option<Self> {
        if !(lo > 0.0 && lo < median && median < hi && sigma > 0.0) {
            return None;
        }
        let n = std_normal();
        let (lm, llo, lhi) = (median.ln(), lo.ln(), hi.ln());
        let trunc_cdf_at_median = |mu: f64| {
            let f = |x: f64| n.cdf((x - mu) / sigma);
            (f(lm) - f(llo)) / (f(lhi) - f(llo))
        };
        let (mut a, mut b) = (lm - 4.0 * sigma, lm + 4.0 * sigma);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if trunc_cdf_at_median(mid) > 0.5 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let mu = 0.5 * (a + b);
        Some(TruncatedLogNormal {
            mu,
            sigma,
            p_lo: n.cdf((llo - mu) / sigma),
            p_hi: n.cdf((lhi - mu) / sigma),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = self.p_lo + (self.p_hi - self.p_lo) * rng.random::<f64>();
        let u = u.clamp(self.p_lo, self.p_hi).max(f64::MIN_POSITIVE);
        (self.mu + self.sigma * std_normal().inverse_cdf(u)).exp()
    }

    /// Median of the truncated law, recomputed from the fitted parameters.
    pub fn median(&self) -> f64 {
        let u = 0.5 * (self.p_lo + self.p_hi);
        (self.mu + self.sigma * std_normal().inverse_cdf(u)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn median_is_prescribed() {
        for (m, lo, hi) in [(29.9, 12.5, 115.0), (16.3, 12.5, 115.0), (27.6, 12.5, 55.0)] {
            let d = TruncatedLogNormal::with_median(m, 0.5, lo, hi).unwrap();
            assert!((d.median() - m).abs() < 1e-6, "{m}: {}", d.median());
        }
    }

    #[test]
    fn draws_stay_in_window_and_split_at_median() {
        let d = TruncatedLogNormal::with_median(20.0, 0.5, 12.5, 55.0).unwrap();
        assert!(TruncatedLogNormal::with_median(10.0, 0.5, 12.5, 55.0).is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut below = 0;
        for _ in 0..n {
            let x = d.sample(&mut rng);
            assert!(x > 12.5 - 1e-9 && x <= 55.0 + 1e-9);
            below += usize::from(x <= 20.0);
        }
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.015, "{frac}");
    }
}
