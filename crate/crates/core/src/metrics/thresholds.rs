//! Threshold rules: the largest candidate threshold whose rate stays within a target.
//!
//! Candidates are the distinct observed scores plus `0` and `pi`. Rates are
//! step functions that only change at observed scores, so no finer grid
//! could yield a larger feasible threshold.

use std::f64::consts::PI;

use super::rates::attack_success_levels;
use super::{count_matches_sorted, proportion, sorted, MorphFilter, SystemScores};
use crate::error::{Error, Result};

/// Sorted distinct scores with `0` and `pi` added.
pub fn candidate_grid(scores: &[f64]) -> Vec<f64> {
    let mut grid = Vec::with_capacity(scores.len() + 2);
    grid.push(0.0);
    grid.extend_from_slice(scores);
    grid.push(PI);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn check_target(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidTarget(x))
    }
}

/// Largest candidate with `rate <= x`, for a rate nondecreasing in `t`.
fn largest_feasible(
    candidates: &[f64],
    rate: impl Fn(f64) -> f64,
    x: f64,
    rule: &str,
) -> Result<f64> {
    let feasible = candidates.partition_point(|&t| rate(t) <= x);
    if feasible == 0 {
        return Err(Error::NoFeasibleThreshold {
            rule: rule.to_owned(),
            target: x,
        });
    }
    Ok(candidates[feasible - 1])
}

/// Largest threshold keeping the non-mated match rate within `x`.
pub fn threshold_at_fmr(scores: &SystemScores, x: f64) -> Result<f64> {
    check_target(x)?;
    if scores.nonmated().is_empty() {
        return Err(Error::EmptyPopulation("nonmated".into()));
    }
    let pop = sorted(scores.nonmated().to_vec());
    let grid = candidate_grid(&pop);
    largest_feasible(
        &grid,
        |t| proportion(count_matches_sorted(&pop, t), pop.len()),
        x,
        "fmr",
    )
}

/// Largest threshold keeping the per-comparison morph acceptance rate within `x`.
pub fn threshold_at_apcer(scores: &SystemScores, x: f64, filter: MorphFilter<'_>) -> Result<f64> {
    check_target(x)?;
    let pop = sorted(scores.morph_scores(filter));
    if pop.is_empty() {
        return Err(Error::EmptyPopulation(filter.describe()));
    }
    let grid = candidate_grid(&pop);
    largest_feasible(
        &grid,
        |t| proportion(count_matches_sorted(&pop, t), pop.len()),
        x,
        "apcer",
    )
}

/// Largest threshold keeping the MMPMR of the filtered attacks within `x`.
pub fn threshold_at_mmpmr(scores: &SystemScores, x: f64, filter: MorphFilter<'_>) -> Result<f64> {
    check_target(x)?;
    let levels = sorted(attack_success_levels(scores, filter)?);
    let grid = candidate_grid(&scores.morph_scores(filter));
    largest_feasible(
        &grid,
        |t| proportion(count_matches_sorted(&levels, t), levels.len()),
        x,
        "mmpmr",
    )
}

/// Worst-case threshold: the largest `t` with `wcMMPMR(t) <= x`. Any morph
/// no closer to the contributors' probes than the worst case then succeeds
/// on at most a share `x` of the pairs.
pub fn threshold_wc(scores: &SystemScores, x: f64) -> Result<f64> {
    threshold_at_mmpmr(scores, x, super::WORST_CASE).map_err(|e| match e {
        Error::NoFeasibleThreshold { target, .. } => Error::NoFeasibleThreshold {
            rule: "wcmmpmr".into(),
            target,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{fmr, wc_mmpmr, AttackScores};
    use std::collections::BTreeMap;

    fn nonmated(v: &[f64]) -> SystemScores {
        SystemScores::new(vec![], v.to_vec(), BTreeMap::new()).unwrap()
    }

    fn wc(levels: &[(f64, f64)]) -> SystemScores {
        let attacks = levels
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                (
                    format!("wc/{i}"),
                    AttackScores::new(vec![a, a + 1.0], vec![b]),
                )
            })
            .collect();
        SystemScores::new(vec![], vec![], attacks).unwrap()
    }

    #[test]
    fn grid_contains_endpoints_once() {
        assert_eq!(candidate_grid(&[0.3, 0.0, 0.3, PI]), vec![0.0, 0.3, PI]);
    }

    #[test]
    fn fmr_threshold_direct() {
        let s = nonmated(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(threshold_at_fmr(&s, 0.25).unwrap(), 0.1);
        assert_eq!(fmr(&s, 0.1).unwrap(), 0.25);
        assert_eq!(fmr(&s, 0.2).unwrap(), 0.5);
        assert_eq!(threshold_at_fmr(&s, 1.0).unwrap(), PI);
        assert_eq!(threshold_at_fmr(&s, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_and_invalid_targets() {
        let s = nonmated(&[0.0, 0.5]);
        assert!(matches!(
            threshold_at_fmr(&s, 0.1),
            Err(Error::NoFeasibleThreshold { .. })
        ));
        assert!(matches!(
            threshold_at_fmr(&s, 1.5),
            Err(Error::InvalidTarget(_))
        ));
        assert!(matches!(
            threshold_at_fmr(&nonmated(&[]), 0.1),
            Err(Error::EmptyPopulation(_))
        ));
    }

    #[test]
    fn wc_threshold_direct() {
        // success levels 0.30, 0.50, 0.70; no other score lies below 0.5
        let s = wc(&[(0.30, 0.30), (0.50, 0.50), (0.70, 0.60)]);
        let t = threshold_wc(&s, 0.34).unwrap();
        assert_eq!(t, 0.30);
        assert!((wc_mmpmr(&s, 0.30).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((wc_mmpmr(&s, 0.50).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(threshold_wc(&s, 1.0).unwrap(), PI);
    }

    #[test]
    fn apcer_threshold() {
        let s = wc(&[(0.3, 0.1), (0.2, 0.5)]);
        // morph scores: 0.1 0.2 0.3 0.5 1.2 1.3
        assert_eq!(threshold_at_apcer(&s, 0.5, MorphFilter::All).unwrap(), 0.3);
        assert_eq!(threshold_at_apcer(&s, 0.49, MorphFilter::All).unwrap(), 0.2);
    }
}
