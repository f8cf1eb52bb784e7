use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::HomeMeta;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortCriteria {
    /// Keep only homes reporting exactly this many occupants.
    pub occupant_count: Option<u32>,
    pub min_msc_count: u64,
    pub countries: Option<BTreeSet<String>>,
}

impl Default for CohortCriteria {
    fn default() -> Self {
        CohortCriteria {
            occupant_count: None,
            min_msc_count: 10,
            countries: None,
        }
    }
}

impl CohortCriteria {
    /// No filters at all.
    pub fn everyone() -> Self {
        CohortCriteria {
            min_msc_count: 0,
            ..CohortCriteria::default()
        }
    }

    pub fn single_occupant() -> Self {
        CohortCriteria {
            occupant_count: Some(1),
            ..CohortCriteria::default()
        }
    }

    pub fn admits(&self, meta: &HomeMeta, msc_count: u64) -> bool {
        if msc_count < self.min_msc_count {
            return false;
        }
        if let Some(n) = self.occupant_count {
            if meta.occupant_count != Some(n) {
                return false;
            }
        }
        if let Some(set) = &self.countries {
            match &meta.country {
                Some(c) if set.contains(c) => {}
                _ => return false,
            }
        }
        true
    }
}

/// Homes passing every active filter, sorted by id.
///
/// A home missing from `msc_counts` was not analysable (for example its unit could not be
/// identified) and is never selected.
pub fn select_cohort(
    metas: &[HomeMeta],
    msc_counts: &BTreeMap<String, u64>,
    criteria: &CohortCriteria,
) -> Vec<String> {
    let mut out: Vec<String> = metas
        .iter()
        .filter(|m| {
            msc_counts
                .get(&m.home_id)
                .is_some_and(|&n| criteria.admits(m, n))
        })
        .map(|m| m.home_id.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}
