//! Profile-size distributions: the per-size entity counts that every other
//! stage of the pipeline consumes.

pub mod powerlaw;
pub mod zeta;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// How many entities have each profile size.
///
/// `counts[i] = S(i)` is the number of entities with exactly `i`
/// interactions, for sizes `1..=k`. Sizes are at least 1 by construction:
/// an entity with no interactions never appears in an interaction log.
///
/// A distribution built with [`ProfileSizeDistribution::from_entity_sizes`]
/// also remembers each entity's individual size, which label assignment and
/// attribute fitting need. One built with
/// [`ProfileSizeDistribution::from_size_counts`] carries the histogram only;
/// it supports everything except those per-entity operations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSizeDistribution {
    counts: BTreeMap<u32, u64>,
    sizes: BTreeMap<String, u32>,
    k: u32,
    total: u64,
}

/// Headline statistics for a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total_entities: u64,
    pub total_interactions: u64,
    pub mean_size: f64,
    /// Lower median: the smallest size at which the cumulative entity count
    /// reaches half (rounding up) of all entities.
    pub median_size: u32,
    pub max_size: u32,
}

impl ProfileSizeDistribution {
    /// Build from `(entity id, profile size)` pairs.
    pub fn from_entity_sizes<I>(entity_sizes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, u32)>,
    {
        let mut sizes = BTreeMap::new();
        for (id, size) in entity_sizes {
            if size == 0 {
                return Err(Error::InvalidParameter(format!(
                    "entity {id:?} has profile size 0; sizes start at 1"
                )));
            }
            if sizes.insert(id.clone(), size).is_some() {
                return Err(Error::Consistency(format!("duplicate entity id {id:?}")));
            }
        }
        if sizes.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for &size in sizes.values() {
            *counts.entry(size).or_insert(0) += 1;
        }
        Ok(Self::assemble(counts, sizes))
    }

    /// Build from an aggregated `(size, entity count)` histogram. The result
    /// has no per-entity detail; operations that need entity identities
    /// reject it.
    pub fn from_size_counts<I>(size_counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u64)>,
    {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for (size, count) in size_counts {
            if count == 0 {
                continue;
            }
            if size == 0 {
                return Err(Error::InvalidParameter(
                    "profile size 0 is not representable; sizes start at 1".into(),
                ));
            }
            *counts.entry(size).or_insert(0) += count;
        }
        if counts.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        Ok(Self::assemble(counts, BTreeMap::new()))
    }

    fn assemble(counts: BTreeMap<u32, u64>, sizes: BTreeMap<String, u32>) -> Self {
        let k = *counts.keys().next_back().expect("non-empty");
        let total = counts.values().sum();
        ProfileSizeDistribution { counts, sizes, k, total }
    }

    /// `S(i)`: how many entities have profile size `i`.
    pub fn count(&self, size: u32) -> u64 {
        self.counts.get(&size).copied().unwrap_or(0)
    }

    /// Occupied sizes and their counts, ascending by size.
    pub fn counts(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    /// The largest observed profile size.
    pub fn max_size(&self) -> u32 {
        self.k
    }

    /// Total number of entities.
    pub fn total_entities(&self) -> u64 {
        self.total
    }

    /// Per-entity sizes, ascending by entity id. Empty iff the distribution
    /// was built from an aggregated histogram.
    pub fn entity_sizes(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.sizes.iter().map(|(id, &s)| (id.as_str(), s))
    }

    /// The recorded size of one entity.
    pub fn entity_size(&self, id: &str) -> Option<u32> {
        self.sizes.get(id).copied()
    }

    /// Whether per-entity identities are available.
    pub fn has_entities(&self) -> bool {
        !self.sizes.is_empty()
    }

    pub fn summary(&self) -> Summary {
        let interactions: u64 = self.counts.iter().map(|(&s, &c)| u64::from(s) * c).sum();
        let half = self.total.div_ceil(2);
        let mut cum = 0;
        let mut median = self.k;
        for (&size, &count) in &self.counts {
            cum += count;
            if cum >= half {
                median = size;
                break;
            }
        }
        Summary {
            total_entities: self.total,
            total_interactions: interactions,
            mean_size: interactions as f64 / self.total as f64,
            median_size: median,
            max_size: self.k,
        }
    }
}

/// One row of plot-ready data: a profile size with its base-10 logs.
///
/// `log_count` is `None` when the count is zero, so downstream plotting
/// skips the point instead of receiving a fake magnitude. Group columns are
/// populated only when the series was built with group counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub size: u32,
    pub log_size: f64,
    pub count: u64,
    pub log_count: Option<f64>,
    pub group_a: Option<f64>,
    pub group_b: Option<f64>,
}

/// Log-log scatter data for a distribution, one row per size in `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub rows: Vec<PlotRow>,
    pub has_groups: bool,
}

/// Prepare log-log plot data. `groups` optionally supplies per-size
/// `(group A count, group B count)` columns; zero counts become blank cells
/// rather than `log10(0)`.
pub fn loglog_points(
    dist: &ProfileSizeDistribution,
    groups: Option<&BTreeMap<u32, (u64, u64)>>,
) -> PlotSeries {
    let log_or_none = |v: f64| if v > 0.0 { Some(v.log10()) } else { None };
    let mut rows = Vec::with_capacity(dist.max_size() as usize);
    for size in 1..=dist.max_size() {
        let count = dist.count(size);
        let (ga, gb) = match groups {
            Some(g) => {
                let &(a, b) = g.get(&size).unwrap_or(&(0, 0));
                (log_or_none(a as f64), log_or_none(b as f64))
            }
            None => (None, None),
        };
        rows.push(PlotRow {
            size,
            log_size: f64::from(size).log10(),
            count,
            log_count: log_or_none(count as f64),
            group_a: ga,
            group_b: gb,
        });
    }
    PlotSeries { rows, has_groups: groups.is_some() }
}

impl PlotSeries {
    /// Serialize as CSV. Header is `size,log_size,log_count` plus
    /// `,group_a,group_b` when group columns are present; `None` cells are
    /// written blank.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let blank_or = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        if self.has_groups {
            writeln!(w, "size,log_size,log_count,group_a,group_b")?;
        } else {
            writeln!(w, "size,log_size,log_count")?;
        }
        for row in &self.rows {
            write!(w, "{},{},{}", row.size, row.log_size, blank_or(row.log_count))?;
            if self.has_groups {
                write!(w, ",{},{}", blank_or(row.group_a), blank_or(row.group_b))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
