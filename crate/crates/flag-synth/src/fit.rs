//! Fit `(alpha, beta)` to a real binary attribute.
//!
//! The observed attribute is reduced to flagged-entity counts per profile
//! size. A candidate `(alpha, beta)` predicts those counts as
//! `S(j) * p(j)`; candidates are compared by summing, over logarithmic
//! size bins, the squared difference of `ln(1 + count)` between predicted
//! and observed. Log-spaced bins keep the long tail from being drowned
//! out by the head, and the `ln(1 + x)` transform keeps huge head bins
//! from dominating the objective.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::ProfileSizeDistribution;
use crate::error::{Error, Result};
use crate::ingest::AttributeTable;
use crate::model::{beta_max, expected_group_b_mass, unscaled_membership};

/// Flagged-entity counts per profile size, extracted from a real
/// attribute table.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedGroupDistribution {
    /// Flagged entities per size.
    flagged: BTreeMap<u32, u64>,
    /// Covered entities (flagged or not) per size.
    covered_per_size: BTreeMap<u32, u64>,
    total_flagged: u64,
    covered: u64,
    excluded: u64,
}

impl ObservedGroupDistribution {
    /// Flagged share of the covered population.
    pub fn fraction(&self) -> f64 {
        self.total_flagged as f64 / self.covered as f64
    }

    pub fn flagged_per_size(&self) -> &BTreeMap<u32, u64> {
        &self.flagged
    }

    pub fn total_flagged(&self) -> u64 {
        self.total_flagged
    }

    /// Entities counted (present in both the distribution and the table).
    pub fn covered(&self) -> u64 {
        self.covered
    }

    /// Entities dropped for missing attribute coverage.
    pub fn excluded(&self) -> u64 {
        self.excluded
    }

    /// The covered population as a size distribution — the reference the
    /// fit compares expectations against.
    pub fn covered_distribution(&self) -> Result<ProfileSizeDistribution> {
        ProfileSizeDistribution::from_size_counts(
            self.covered_per_size.iter().map(|(&s, &c)| (s, c)),
        )
    }
}

/// Intersect a profile distribution with an attribute table.
///
/// Every entity in the distribution must appear in the table unless
/// `allow_partial` is set, in which case uncovered entities are excluded
/// from both sides of the comparison.
pub fn observed_group_distribution(
    dist: &ProfileSizeDistribution,
    table: &AttributeTable,
    allow_partial: bool,
) -> Result<ObservedGroupDistribution> {
    if !dist.has_entities() {
        return Err(Error::InvalidParameter(
            "distribution carries no entity identities; build it from per-entity sizes".into(),
        ));
    }
    let mut flagged: BTreeMap<u32, u64> = BTreeMap::new();
    let mut covered_per_size: BTreeMap<u32, u64> = BTreeMap::new();
    let mut total_flagged = 0;
    let mut covered = 0;
    let mut excluded = 0;
    let mut missing = 0;
    let mut example = None;
    for (id, size) in dist.entity_sizes() {
        match table.get(id) {
            Some(flag) => {
                covered += 1;
                *covered_per_size.entry(size).or_insert(0) += 1;
                if flag {
                    total_flagged += 1;
                    *flagged.entry(size).or_insert(0) += 1;
                }
            }
            None if allow_partial => excluded += 1,
            None => {
                missing += 1;
                if example.is_none() {
                    example = Some(id.to_string());
                }
            }
        }
    }
    if missing > 0 {
        return Err(Error::Coverage { missing, example: example.unwrap() });
    }
    if covered == 0 {
        return Err(Error::EmptyDistribution);
    }
    Ok(ObservedGroupDistribution { flagged, covered_per_size, total_flagged, covered, excluded })
}

/// How the fit treats `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// Pin `beta` to the observed flagged fraction and search `alpha` only.
    FixedToObservedFraction,
    /// Search a `beta` grid jointly with `alpha`.
    Searched,
}

/// Grid-search configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub beta_mode: BetaMode,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    /// Step of the `beta` grid (searched mode). The grid at each `alpha`
    /// is the multiples of this step in `(0, beta_max(alpha)]`.
    pub beta_step: f64,
    /// Resolution of the logarithmic size binning.
    pub bins_per_decade: u32,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            beta_mode: BetaMode::FixedToObservedFraction,
            alpha_min: 0.0,
            alpha_max: 3.0,
            alpha_step: 0.01,
            beta_step: 0.01,
            bins_per_decade: 10,
        }
    }
}

/// The grid a fit actually searched, echoed in results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    /// `None` when `beta` was pinned rather than searched.
    pub beta_step: Option<f64>,
    pub bins_per_decade: u32,
}

/// Best cell of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub objective: f64,
    pub beta_mode: BetaMode,
    /// Legality bound at the winning `alpha`.
    pub beta_max_at_alpha: f64,
    pub grid: GridSpec,
}

/// One evaluated cell of the loss surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub alpha: f64,
    pub beta: f64,
    pub objective: f64,
}

/// Fit against an observed attribute.
pub fn fit_params(
    observed: &ObservedGroupDistribution,
    options: &FitOptions,
) -> Result<FitResult> {
    let dist = observed.covered_distribution()?;
    let series: BTreeMap<u32, f64> =
        observed.flagged_per_size().iter().map(|(&s, &c)| (s, c as f64)).collect();
    fit_series(&dist, &series, observed.fraction(), options).map(|(fit, _)| fit)
}

/// Like [`fit_params`], returning every evaluated `(alpha, beta)` cell.
pub fn fit_params_with_surface(
    observed: &ObservedGroupDistribution,
    options: &FitOptions,
) -> Result<(FitResult, Vec<SurfacePoint>)> {
    let dist = observed.covered_distribution()?;
    let series: BTreeMap<u32, f64> =
        observed.flagged_per_size().iter().map(|(&s, &c)| (s, c as f64)).collect();
    fit_series(&dist, &series, observed.fraction(), options)
}

/// Core grid search over a per-size flagged series (possibly fractional,
/// which lets callers fit against expected rather than realized counts).
///
/// Deterministic: candidates are generated as `min + i * step`, scanned in
/// ascending `(alpha, beta)` order, and ties broken toward the smaller
/// values, so the same inputs always return the same cell at any thread
/// count.
pub fn fit_series(
    dist: &ProfileSizeDistribution,
    flagged_per_size: &BTreeMap<u32, f64>,
    observed_fraction: f64,
    options: &FitOptions,
) -> Result<(FitResult, Vec<SurfacePoint>)> {
    validate_options(options)?;
    let k = dist.max_size();
    for (&size, &count) in flagged_per_size {
        if size == 0 || size > k {
            return Err(Error::InvalidParameter(format!(
                "flagged series has size {size}, outside the distribution's 1..={k}"
            )));
        }
        if !count.is_finite() || count < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "flagged series has count {count} at size {size}"
            )));
        }
    }
    if let BetaMode::FixedToObservedFraction = options.beta_mode {
        if !(observed_fraction > 0.0 && observed_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "observed flagged fraction {observed_fraction} leaves nothing to fit"
            )));
        }
    }

    let n_bins = bin_of(k, options.bins_per_decade) + 1;
    let mut observed_bins = vec![0.0f64; n_bins];
    for (&size, &count) in flagged_per_size {
        observed_bins[bin_of(size, options.bins_per_decade)] += count;
    }
    let observed_log: Vec<f64> = observed_bins.iter().map(|&c| c.ln_1p()).collect();

    let alphas = grid(options.alpha_min, options.alpha_max, options.alpha_step);
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("empty alpha grid".into()));
    }
    let total = dist.total_entities() as f64;
    let counts: Vec<(u32, u64)> = dist.counts().collect();

    struct AlphaSlice {
        alpha: f64,
        bound: f64,
        best: Option<(f64, f64)>, // (objective, beta)
        cells: Vec<SurfacePoint>,
    }

    let slices: Vec<AlphaSlice> = alphas
        .par_iter()
        .map(|&alpha| {
            // expected B counts factor as beta * base(j); pre-bin the base
            let mass = expected_group_b_mass(dist, alpha);
            let bound = mass / total;
            let mut base_bins = vec![0.0f64; n_bins];
            if mass > 0.0 {
                let flat = mass == total;
                for &(size, count) in &counts {
                    let base = if flat {
                        count as f64
                    } else {
                        count as f64 * (total / mass) * unscaled_membership(alpha, size)
                    };
                    base_bins[bin_of(size, options.bins_per_decade)] += base;
                }
            }
            let loss = |beta: f64| -> f64 {
                base_bins
                    .iter()
                    .zip(&observed_log)
                    .map(|(&base, &obs)| {
                        let diff = (beta * base).ln_1p() - obs;
                        diff * diff
                    })
                    .sum()
            };
            let legal = |beta: f64| mass > 0.0 && beta <= bound * (1.0 + 1e-12) && beta <= 1.0;
            let mut slice =
                AlphaSlice { alpha, bound, best: None, cells: Vec::new() };
            let consider = |beta: f64, slice: &mut AlphaSlice| {
                let objective = loss(beta);
                slice.cells.push(SurfacePoint { alpha, beta, objective });
                if slice.best.is_none_or(|(best, _)| objective < best) {
                    slice.best = Some((objective, beta));
                }
            };
            match options.beta_mode {
                BetaMode::FixedToObservedFraction => {
                    if legal(observed_fraction) {
                        consider(observed_fraction, &mut slice);
                    }
                }
                BetaMode::Searched => {
                    let mut i = 1u64;
                    loop {
                        let beta = i as f64 * options.beta_step;
                        if !legal(beta) {
                            break;
                        }
                        consider(beta, &mut slice);
                        i += 1;
                    }
                }
            }
            slice
        })
        .collect();

    let mut best: Option<(f64, f64, f64, f64)> = None; // objective, alpha, beta, bound
    let mut surface = Vec::new();
    for slice in slices {
        if let Some((objective, beta)) = slice.best {
            if best.is_none_or(|(b, _, _, _)| objective < b) {
                best = Some((objective, slice.alpha, beta, slice.bound));
            }
        }
        surface.extend(slice.cells);
    }
    match best {
        Some((objective, alpha, beta, bound)) => Ok((
            FitResult {
                alpha,
                beta,
                objective,
                beta_mode: options.beta_mode,
                beta_max_at_alpha: bound,
                grid: GridSpec {
                    alpha_min: options.alpha_min,
                    alpha_max: options.alpha_max,
                    alpha_step: options.alpha_step,
                    beta_step: match options.beta_mode {
                        BetaMode::Searched => Some(options.beta_step),
                        BetaMode::FixedToObservedFraction => None,
                    },
                    bins_per_decade: options.bins_per_decade,
                },
            },
            surface,
        )),
        None => Err(Error::NoFeasibleFit {
            beta_max_by_alpha: alphas.iter().map(|&a| (a, beta_max(dist, a))).collect(),
        }),
    }
}

fn validate_options(o: &FitOptions) -> Result<()> {
    if !o.alpha_min.is_finite() || o.alpha_min < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha_min must be >= 0, got {}", o.alpha_min)));
    }
    if !o.alpha_max.is_finite() || o.alpha_max < o.alpha_min {
        return Err(Error::InvalidParameter(format!(
            "alpha_max must be >= alpha_min, got {}",
            o.alpha_max
        )));
    }
    if !(o.alpha_step > 0.0 && o.beta_step > 0.0) {
        return Err(Error::InvalidParameter("grid steps must be positive".into()));
    }
    if o.bins_per_decade == 0 {
        return Err(Error::InvalidParameter("bins_per_decade must be at least 1".into()));
    }
    Ok(())
}

/// Logarithmic bin index of a size: `floor(bins_per_decade * log10(size))`.
fn bin_of(size: u32, bins_per_decade: u32) -> usize {
    (f64::from(bins_per_decade) * f64::from(size).log10()).floor() as usize
}

/// `min + i * step` for every value through `max`, with a half-ulp of
/// slack so that `max` itself is included despite rounding. Generating
/// candidates by multiplication (never by repeated addition) makes a
/// halved step reproduce the coarse grid's values bit for bit.
fn grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let v = min + i as f64 * step;
        if v > max * (1.0 + 1e-12) + f64::MIN_POSITIVE {
            break;
        }
        out.push(v);
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, FlagParams, LegalityMode};

    fn hand_dist() -> ProfileSizeDistribution {
        ProfileSizeDistribution::from_size_counts([(1, 4), (2, 2), (4, 1)]).unwrap()
    }

    fn entity_dist(sizes: &[(&str, u32)]) -> ProfileSizeDistribution {
        ProfileSizeDistribution::from_entity_sizes(
            sizes.iter().map(|&(id, s)| (id.to_string(), s)),
        )
        .unwrap()
    }

    fn table(entries: &[(&str, bool)]) -> AttributeTable {
        AttributeTable::new(entries.iter().map(|&(id, f)| (id.to_string(), f)), "flag")
    }

    #[test]
    fn observed_distribution_hand_example() {
        let d = entity_dist(&[("u1", 1), ("u2", 1), ("u3", 2)]);
        let t = table(&[("u1", true), ("u2", false), ("u3", true)]);
        let o = observed_group_distribution(&d, &t, false).unwrap();
        assert_eq!(o.total_flagged(), 2);
        assert_eq!(o.covered(), 3);
        assert_eq!(o.excluded(), 0);
        assert!((o.fraction() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(o.flagged_per_size().get(&1), Some(&1));
        assert_eq!(o.flagged_per_size().get(&2), Some(&1));
        let cd = o.covered_distribution().unwrap();
        assert_eq!(cd.count(1), 2);
        assert_eq!(cd.count(2), 1);
    }

    #[test]
    fn missing_coverage_is_an_error_unless_allowed() {
        let d = entity_dist(&[("u1", 1), ("u2", 1), ("u3", 2)]);
        let t = table(&[("u1", true), ("u3", true)]);
        match observed_group_distribution(&d, &t, false) {
            Err(Error::Coverage { missing, example }) => {
                assert_eq!(missing, 1);
                assert_eq!(example, "u2");
            }
            other => panic!("expected Coverage, got {other:?}"),
        }
        let o = observed_group_distribution(&d, &t, true).unwrap();
        assert_eq!(o.excluded(), 1);
        assert_eq!(o.covered(), 2);
        assert!((o.fraction() - 1.0).abs() < 1e-15);
        // the covered population no longer includes u2
        assert_eq!(o.covered_distribution().unwrap().count(1), 1);
    }

    #[test]
    fn recovers_planted_cell_exactly() {
        let d = hand_dist();
        let planted = FlagParams::new(0.5, 0.2).unwrap();
        let m = build_model(&d, planted, LegalityMode::Strict).unwrap();
        let series: BTreeMap<u32, f64> = m
            .expected_counts()
            .into_iter()
            .filter(|r| r.count > 0)
            .map(|r| (r.size, r.expected_b))
            .collect();
        let options = FitOptions { beta_mode: BetaMode::Searched, ..FitOptions::default() };
        let (fit, surface) = fit_series(&d, &series, 0.2, &options).unwrap();
        assert_eq!(fit.alpha, 0.5);
        assert_eq!(fit.beta, 0.2);
        assert!(fit.objective <= 1e-18, "objective {}", fit.objective);
        assert!(!surface.is_empty());
        // the planted cell is strictly better than its grid neighbors
        let objective_at = |a: f64, b: f64| {
            surface
                .iter()
                .find(|p| (p.alpha - a).abs() < 1e-9 && (p.beta - b).abs() < 1e-9)
                .map(|p| p.objective)
        };
        assert!(objective_at(0.49, 0.2).unwrap() > fit.objective);
        assert!(objective_at(0.5, 0.21).unwrap() > fit.objective);
    }

    #[test]
    fn fixed_mode_pins_beta() {
        let d = hand_dist();
        let planted = FlagParams::new(0.8, 0.3).unwrap();
        let m = build_model(&d, planted, LegalityMode::Strict).unwrap();
        let series: BTreeMap<u32, f64> = m
            .expected_counts()
            .into_iter()
            .filter(|r| r.count > 0)
            .map(|r| (r.size, r.expected_b))
            .collect();
        let (fit, _) = fit_series(&d, &series, 0.3, &FitOptions::default()).unwrap();
        assert_eq!(fit.beta, 0.3);
        assert_eq!(fit.alpha, 0.8);
        assert!(fit.objective <= 1e-18);
        assert_eq!(fit.grid.beta_step, None);
        assert!((fit.beta_max_at_alpha - beta_max(&d, 0.8)).abs() < 1e-15);
    }

    #[test]
    fn refinement_never_worsens_the_objective() {
        // noisy observed series: planted expectation, integer-rounded
        let d = hand_dist();
        let m = build_model(&d, FlagParams::new(0.8, 0.3).unwrap(), LegalityMode::Strict).unwrap();
        let series: BTreeMap<u32, f64> = m
            .expected_counts()
            .into_iter()
            .filter(|r| r.count > 0)
            .map(|r| (r.size, r.expected_b.round()))
            .collect();
        let coarse = FitOptions {
            beta_mode: BetaMode::Searched,
            alpha_step: 0.02,
            beta_step: 0.02,
            ..FitOptions::default()
        };
        let fine = FitOptions { alpha_step: 0.01, beta_step: 0.01, ..coarse };
        let (fc, _) = fit_series(&d, &series, 0.3, &coarse).unwrap();
        let (ff, _) = fit_series(&d, &series, 0.3, &fine).unwrap();
        // the fine grid contains every coarse candidate bit for bit
        assert!(ff.objective <= fc.objective);
    }

    #[test]
    fn fit_is_deterministic_across_thread_counts() {
        let d = hand_dist();
        let series: BTreeMap<u32, f64> = [(1u32, 2.0f64), (2, 1.0), (4, 0.4)].into_iter().collect();
        let options = FitOptions { beta_mode: BetaMode::Searched, ..FitOptions::default() };
        let (a, sa) = fit_series(&d, &series, 0.4, &options).unwrap();
        let (b, sb) = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| fit_series(&d, &series, 0.4, &options).unwrap());
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn infeasible_grid_reports_bounds() {
        // every entity is huge, so beta_max is tiny across a high-alpha grid
        let d = ProfileSizeDistribution::from_size_counts([(50, 100), (80, 50)]).unwrap();
        let options = FitOptions {
            alpha_min: 2.0,
            alpha_max: 2.1,
            alpha_step: 0.05,
            ..FitOptions::default()
        };
        let series: BTreeMap<u32, f64> = [(50u32, 30.0f64)].into_iter().collect();
        match fit_series(&d, &series, 0.5, &options) {
            Err(Error::NoFeasibleFit { beta_max_by_alpha }) => {
                assert_eq!(beta_max_by_alpha.len(), 3);
                assert!(beta_max_by_alpha.iter().all(|&(_, b)| b < 0.5));
            }
            other => panic!("expected NoFeasibleFit, got {other:?}"),
        }
        // searched mode: no beta-step multiple fits under the bounds either
        let options = FitOptions { beta_mode: BetaMode::Searched, beta_step: 0.5, ..options };
        assert!(matches!(
            fit_series(&d, &series, 0.5, &options),
            Err(Error::NoFeasibleFit { .. })
        ));
    }

    #[test]
    fn end_to_end_fit_from_table() {
        let d = entity_dist(&[("u1", 1), ("u2", 1), ("u3", 1), ("u4", 2), ("u5", 4)]);
        let t = table(&[
            ("u1", true),
            ("u2", true),
            ("u3", false),
            ("u4", false),
            ("u5", false),
        ]);
        let o = observed_group_distribution(&d, &t, false).unwrap();
        let fit = fit_params(&o, &FitOptions::default()).unwrap();
        assert!((fit.beta - 0.4).abs() < 1e-15);
        assert!(fit.alpha >= 0.0 && fit.alpha <= 3.0);
        assert!(fit.objective.is_finite());
        assert_eq!(fit.beta_mode, BetaMode::FixedToObservedFraction);
    }

    #[test]
    fn option_validation() {
        let d = hand_dist();
        let series: BTreeMap<u32, f64> = [(1u32, 1.0f64)].into_iter().collect();
        let bad = FitOptions { alpha_step: 0.0, ..FitOptions::default() };
        assert!(matches!(
            fit_series(&d, &series, 0.5, &bad),
            Err(Error::InvalidParameter(_))
        ));
        let bad = FitOptions { alpha_min: 2.0, alpha_max: 1.0, ..FitOptions::default() };
        assert!(matches!(
            fit_series(&d, &series, 0.5, &bad),
            Err(Error::InvalidParameter(_))
        ));
        let out_of_range: BTreeMap<u32, f64> = [(9u32, 1.0f64)].into_iter().collect();
        assert!(matches!(
            fit_series(&d, &out_of_range, 0.5, &FitOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn grid_hits_round_values() {
        let g = grid(0.0, 3.0, 0.01);
        assert_eq!(g.len(), 301);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[50], 0.5);
        assert_eq!(g[80], 0.8);
        assert_eq!(g[300], 3.0);
    }
}
