//! Mergeable population statistics.
//!
//! Every accumulator is a set of integer counts. Homes are accumulated independently and
//! merged, and merging is associative and commutative with the empty accumulator as
//! identity, so any sharding of the corpus gives identical results.
//!
//! Statistics and the MSCs they cover:
//!
//! | statistic | MSCs counted |
//! |---|---|
//! | time of day (weekday / weekend), 30-min bins | all |
//! | time of day × time to next SC | all; a missing next SC is counted separately |
//! | TTD histogram, 5-min bins to 4 h plus overflow | those with a TTD |
//! | mean TTD, with and without the ≤ 10 min peak | those with a TTD |
//! | prior event | all but each home's first SC |
//! | DoD × indoor temperature, energy impact | all, by mode |
//! | DoD × TTD quantile surface | analysis set (occupied, under 2 h) |

mod accumulator;
mod histogram;
mod report;
mod surface;

use thiserror::Error;

pub use accumulator::{HomeTally, ImpactCounts, PerMode, StatsAccumulator, StatsConfig};
pub use histogram::{Histogram1D, Histogram2D};
pub use report::{
    figure_tables, pooled_median, round_to, summarize, surface_summary, write_figures,
    BinSummary, MentalSummary, Report, LOW_CONFIDENCE_N, QUANTILE_LEVELS,
};
pub use surface::{dod_bin, QuantileSurface, MAX_DOD_BIN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("bin edges must be strictly increasing with at least two entries: {0}")]
    Edges(String),
    #[error("cannot merge accumulators with different {0}")]
    Mismatch(&'static str),
}
