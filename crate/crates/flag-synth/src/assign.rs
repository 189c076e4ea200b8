//! Label assignment: one reproducible Bernoulli trial per entity.
//!
//! Each entity's draw is `unit_f64(stable_hash64(seed, entity_id))`,
//! compared against its size's membership probability. Because the draw
//! depends only on the seed and the entity id — never on iteration order —
//! assignment parallelizes freely and stays byte-identical across runs,
//! platforms, and thread counts. The comparison is strict (`draw < p`), so
//! `p = 1` always flags and `p = 0` never does.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::distribution::ProfileSizeDistribution;
use crate::error::{Error, Result};
use crate::ingest::AttributeTable;
use crate::model::{FlagParams, LegalityMode, MembershipModel};
use crate::rng::{stable_hash64, unit_f64};

/// The synthetic binary attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    A,
    B,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::A => "A",
            Label::B => "B",
        }
    }
}

/// A complete labeling of a population, with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeAssignment {
    labels: BTreeMap<String, Label>,
    seed: u64,
    params: FlagParams,
    legality_mode: LegalityMode,
}

/// Assign a label to every entity in the distribution.
///
/// The distribution must carry entity identities and every size must be
/// covered by the model (i.e. the model was built from this distribution
/// or a superset of its sizes).
pub fn assign_labels(
    model: &MembershipModel,
    dist: &ProfileSizeDistribution,
    seed: u64,
) -> Result<AttributeAssignment> {
    if !dist.has_entities() {
        return Err(Error::InvalidParameter(
            "distribution carries no entity identities; build it from per-entity sizes".into(),
        ));
    }
    let entities: Vec<(&str, u32)> = dist.entity_sizes().collect();
    let labels = entities
        .par_iter()
        .map(|&(id, size)| {
            let p = model.probability(size).ok_or_else(|| {
                Error::Consistency(format!(
                    "entity {id:?} has size {size}, outside the model's 1..={} range",
                    model.k()
                ))
            })?;
            let draw = unit_f64(stable_hash64(seed, id));
            let label = if draw < p { Label::B } else { Label::A };
            Ok((id.to_string(), label))
        })
        .collect::<Result<BTreeMap<String, Label>>>()?;
    Ok(AttributeAssignment { labels, seed, params: model.params(), legality_mode: model.legality_mode() })
}

impl AttributeAssignment {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> FlagParams {
        self.params
    }

    pub fn legality_mode(&self) -> LegalityMode {
        self.legality_mode
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: &str) -> Option<Label> {
        self.labels.get(id).copied()
    }

    /// All labels, ascending by entity id.
    pub fn labels(&self) -> impl Iterator<Item = (&str, Label)> + '_ {
        self.labels.iter().map(|(id, &l)| (id.as_str(), l))
    }

    pub fn count(&self, label: Label) -> u64 {
        self.labels.values().filter(|&&l| l == label).count() as u64
    }

    /// View the labels as an attribute table (flag = membership in B), the
    /// form the parameter-fitting stage consumes.
    pub fn as_attribute_table(&self) -> AttributeTable {
        AttributeTable::new(
            self.labels.iter().map(|(id, &l)| (id.clone(), l == Label::B)),
            "B",
        )
    }

    /// Serialize as CSV with header `entity_id,label`, rows ascending by
    /// entity id.
    pub fn write_labels_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["entity_id", "label"]).map_err(csv_io)?;
        for (id, label) in &self.labels {
            out.write_record([id.as_str(), label.as_str()]).map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Realized group composition of an assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedStats {
    pub count_a: u64,
    pub count_b: u64,
    /// Per-size `(A count, B count)`, occupied sizes only.
    pub per_size: BTreeMap<u32, (u64, u64)>,
    /// Mean profile size within each group; `None` for an empty group.
    pub mean_size_a: Option<f64>,
    pub mean_size_b: Option<f64>,
}

impl RealizedStats {
    pub fn total(&self) -> u64 {
        self.count_a + self.count_b
    }

    /// Realized share of group B.
    pub fn fraction_b(&self) -> f64 {
        self.count_b as f64 / self.total() as f64
    }

    /// Per-size `(B count,)` projection used for plotting group overlays.
    pub fn group_columns(&self) -> BTreeMap<u32, (u64, u64)> {
        self.per_size.clone()
    }
}

/// Tabulate an assignment against the distribution it was drawn from.
///
/// The two must describe exactly the same entities; any divergence is an
/// error rather than a silently wrong table.
pub fn realized_stats(
    assignment: &AttributeAssignment,
    dist: &ProfileSizeDistribution,
) -> Result<RealizedStats> {
    if !dist.has_entities() {
        return Err(Error::InvalidParameter(
            "distribution carries no entity identities; build it from per-entity sizes".into(),
        ));
    }
    let mut a_side = assignment.labels.iter();
    let mut d_side = dist.entity_sizes();
    let mut per_size: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    let (mut count_a, mut count_b) = (0u64, 0u64);
    let (mut size_sum_a, mut size_sum_b) = (0u64, 0u64);
    loop {
        match (a_side.next(), d_side.next()) {
            (Some((a_id, &label)), Some((d_id, size))) => {
                if a_id != d_id {
                    return Err(Error::Consistency(format!(
                        "assignment and distribution diverge at {a_id:?} vs {d_id:?}"
                    )));
                }
                let slot = per_size.entry(size).or_insert((0, 0));
                match label {
                    Label::A => {
                        count_a += 1;
                        size_sum_a += u64::from(size);
                        slot.0 += 1;
                    }
                    Label::B => {
                        count_b += 1;
                        size_sum_b += u64::from(size);
                        slot.1 += 1;
                    }
                }
            }
            (None, None) => break,
            (Some((a_id, _)), None) => {
                return Err(Error::Consistency(format!(
                    "assignment covers {a_id:?}, which the distribution lacks"
                )));
            }
            (None, Some((d_id, _))) => {
                return Err(Error::Consistency(format!(
                    "distribution covers {d_id:?}, which the assignment lacks"
                )));
            }
        }
    }
    let mean = |sum: u64, n: u64| if n > 0 { Some(sum as f64 / n as f64) } else { None };
    Ok(RealizedStats {
        count_a,
        count_b,
        per_size,
        mean_size_a: mean(size_sum_a, count_a),
        mean_size_b: mean(size_sum_b, count_b),
    })
}
