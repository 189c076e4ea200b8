//! The membership model: a scaled power law links profile size to the
//! probability of carrying the synthetic attribute.
//!
//! With `S(i)` entities at size `i` for `i` in `1..=k` and `|U|` entities
//! in total, skew `alpha >= 0` and target fraction `beta` define a
//! per-size probability of belonging to group B:
//!
//! ```text
//! p(j) = beta * |U| / (j^alpha * sum_i S(i) * i^-alpha)
//! ```
//!
//! The denominator's sum is the expected B count under the *unscaled*
//! law `i^-alpha` ([`expected_group_b_mass`]), so the scaling guarantees
//! `sum_j S(j) * p(j) = beta * |U|`: the expected share of B entities is
//! exactly `beta` no matter how skewed the link. Since `p` is largest at
//! size 1, `beta` is only achievable while `p(1) <= 1`, i.e. while
//! `beta <= expected_group_b_mass / |U|` ([`beta_max`]). Larger requests
//! are rejected ([`LegalityMode::Strict`]) or capped at 1 size by size
//! ([`LegalityMode::Clamp`]), the latter trading the fraction guarantee
//! away.

use serde::Serialize;

use crate::distribution::ProfileSizeDistribution;
use crate::error::{Error, Result};

/// Relative slack used when judging `beta <= beta_max`, so that a bound
/// computed by [`beta_max`] and fed back in is never rejected for rounding.
const LEGALITY_SLACK: f64 = 1e-12;

/// The two knobs of the membership law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlagParams {
    /// Skew: how steeply membership probability falls with profile size.
    /// `0` makes every size equally likely to be flagged.
    pub alpha: f64,
    /// Expected fraction of entities in group B.
    pub beta: f64,
}

impl FlagParams {
    /// `alpha` must be finite and non-negative, `beta` in `(0, 1]`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        if !beta.is_finite() || beta <= 0.0 || beta > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(FlagParams { alpha, beta })
    }
}

/// What to do when the requested `beta` is not achievable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LegalityMode {
    /// Reject the parameters.
    Strict,
    /// Cap each probability at 1. The realized B fraction then falls
    /// short of `beta`; callers are told how many sizes were capped.
    Clamp,
}

/// Membership weight of one profile size under the unscaled law:
/// `size^-alpha`.
pub fn unscaled_membership(alpha: f64, size: u32) -> f64 {
    debug_assert!(size >= 1, "profile sizes start at 1");
    f64::from(size).powf(-alpha)
}

/// Expected number of B entities if every entity of size `i` joined with
/// the unscaled probability `i^-alpha`: `sum_i S(i) * i^-alpha`.
pub fn expected_group_b_mass(dist: &ProfileSizeDistribution, alpha: f64) -> f64 {
    dist.counts().map(|(s, c)| c as f64 * unscaled_membership(alpha, s)).sum()
}

/// The largest legal `beta` for this distribution at skew `alpha`: the
/// value at which the size-1 probability reaches 1. Always in `(0, 1]`,
/// and exactly 1 at `alpha = 0`.
pub fn beta_max(dist: &ProfileSizeDistribution, alpha: f64) -> f64 {
    expected_group_b_mass(dist, alpha) / dist.total_entities() as f64
}

/// A fully scaled membership model: one probability per size `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipModel {
    params: FlagParams,
    legality_mode: LegalityMode,
    probabilities: Vec<f64>,
    size_counts: Vec<u64>,
    total_entities: u64,
    clamped_sizes: usize,
}

/// Expected group composition at one profile size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedCount {
    pub size: u32,
    /// Number of entities with this size.
    pub count: u64,
    pub expected_a: f64,
    pub expected_b: f64,
}

/// Scale the membership law to the distribution and materialize the
/// per-size probability table.
pub fn build_model(
    dist: &ProfileSizeDistribution,
    params: FlagParams,
    legality_mode: LegalityMode,
) -> Result<MembershipModel> {
    let params = FlagParams::new(params.alpha, params.beta)?;
    let mass = expected_group_b_mass(dist, params.alpha);
    let total = dist.total_entities() as f64;
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::Numeric(format!(
            "expected group mass underflowed at alpha={}; every probability would be degenerate",
            params.alpha
        )));
    }
    let bound = mass / total;
    if params.beta > bound * (1.0 + LEGALITY_SLACK) {
        if let LegalityMode::Strict = legality_mode {
            return Err(Error::IllegalBeta { beta: params.beta, beta_max: bound });
        }
    }
    // mass == total happens exactly when the law is flat over the observed
    // sizes (alpha = 0, or every entity at size 1); p(j) is then beta itself
    let scale =
        if mass == total { params.beta } else { (params.beta * total) / mass };
    let k = dist.max_size();
    let mut probabilities = Vec::with_capacity(k as usize);
    let mut clamped = 0;
    for j in 1..=k {
        let raw = scale * unscaled_membership(params.alpha, j);
        if raw > 1.0 {
            clamped += 1;
            probabilities.push(1.0);
        } else {
            probabilities.push(raw);
        }
    }
    let size_counts = (1..=k).map(|s| dist.count(s)).collect();
    Ok(MembershipModel {
        params,
        legality_mode,
        probabilities,
        size_counts,
        total_entities: dist.total_entities(),
        clamped_sizes: clamped,
    })
}

impl MembershipModel {
    pub fn params(&self) -> FlagParams {
        self.params
    }

    pub fn legality_mode(&self) -> LegalityMode {
        self.legality_mode
    }

    /// Largest size the model covers.
    pub fn k(&self) -> u32 {
        self.probabilities.len() as u32
    }

    /// Membership probability for one size, `None` outside `1..=k`.
    pub fn probability(&self, size: u32) -> Option<f64> {
        if size == 0 {
            return None;
        }
        self.probabilities.get((size - 1) as usize).copied()
    }

    /// The full table, `p(1)` first.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// How many sizes had their probability capped at 1. Always 0 for a
    /// legal `beta`; meaningful under [`LegalityMode::Clamp`].
    pub fn clamped_sizes(&self) -> usize {
        self.clamped_sizes
    }

    pub fn total_entities(&self) -> u64 {
        self.total_entities
    }

    /// Expected number of B entities: `sum_j S(j) * p(j)`. Equals
    /// `beta * total_entities` unless clamping lowered some sizes.
    pub fn expected_b_total(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(&self.size_counts)
            .map(|(&p, &c)| c as f64 * p)
            .sum()
    }

    /// Expected group split per size, for every size in `1..=k`.
    pub fn expected_counts(&self) -> Vec<ExpectedCount> {
        self.probabilities
            .iter()
            .zip(&self.size_counts)
            .zip(1..)
            .map(|((&p, &c), size)| {
                let b = c as f64 * p;
                ExpectedCount { size, count: c, expected_a: c as f64 - b, expected_b: b }
            })
            .collect()
    }
}
