//! Sequential reference implementations.
//!
//! Nothing in here goes through the matrix, the reduce phase or the overlap
//! module: the overlap arithmetic is re-derived locally so these functions
//! stay an independent check on [`crate::engine`].

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::detections::{Detection, DetectionVector, NmsResult};
use crate::engine::{Engine, NmsConfig, TieBreak};
use crate::error::{NmsError, Result};

/// Intersection area of `a` and `b` over the area of `b`, inclusive pixels.
fn ratio_over_second(a: &Detection, b: &Detection) -> f64 {
    let span = |a_lo: u32, b_lo: u32| -> u64 {
        let lo = a_lo.max(b_lo) as u64;
        let hi = (a_lo as u64 + a.z as u64).min(b_lo as u64 + b.z as u64) + 1;
        hi.saturating_sub(lo)
    };
    let inter = span(a.x, b.x) * span(a.y, b.y);
    let side = b.z as u64 + 1;
    inter as f64 / (side * side) as f64
}

fn may_suppress(tie: TieBreak, i: usize, si: f64, j: usize, sj: f64) -> bool {
    match tie {
        TieBreak::PaperFaithful => si < sj,
        TieBreak::ByIndex => si < sj || (si == sj && i > j),
    }
}

fn result_from_indices(d: &DetectionVector, keep: &[usize]) -> NmsResult {
    NmsResult {
        survivors: keep.iter().map(|&i| d.valid()[i]).collect(),
        suppressed_count: d.count() - keep.len(),
    }
}

/// Indices of detections that no valid detection is allowed to suppress.
pub fn brute_force_keep(d: &DetectionVector, theta: f64, tie: TieBreak) -> Vec<usize> {
    let dets = d.valid();
    (0..dets.len())
        .filter(|&i| {
            !(0..dets.len()).any(|j| {
                may_suppress(tie, i, dets[i].s, j, dets[j].s)
                    && ratio_over_second(&dets[i], &dets[j]) >= theta
            })
        })
        .collect()
}

/// Direct double loop over the valid detections: `d_i` survives unless some
/// `d_j` passes the score gate and covers at least `theta` of its own area
/// with `d_i`.
pub fn brute_force_nms(d: &DetectionVector, theta: f64, tie: TieBreak) -> NmsResult {
    result_from_indices(d, &brute_force_keep(d, theta, tie))
}

/// Valid indices ordered by descending score, lowest index first on ties.
fn selection_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].s.total_cmp(&dets[a].s));
    order
}

/// Indices kept by classic greedy NMS, in input order.
pub fn greedy_keep(d: &DetectionVector, theta: f64) -> Vec<usize> {
    let dets = d.valid();
    let mut removed = vec![false; dets.len()];
    let mut keep = Vec::new();
    for &best in &selection_order(dets) {
        if removed[best] {
            continue;
        }
        keep.push(best);
        for (r, gone) in removed.iter_mut().enumerate() {
            if !*gone && r != best && ratio_over_second(&dets[r], &dets[best]) >= theta {
                *gone = true;
            }
        }
    }
    keep.sort_unstable();
    keep
}

/// Classic greedy NMS: keep the best remaining detection, drop everything it
/// covers by at least `theta` of its area, repeat. Survivors in input order.
pub fn greedy_nms(d: &DetectionVector, theta: f64) -> NmsResult {
    result_from_indices(d, &greedy_keep(d, theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftNmsMode {
    /// `s <- s * (1 - ratio)` when `ratio >= theta`.
    Linear,
    /// `s <- s * exp(-ratio^2 / sigma)`.
    Gaussian,
}

/// Greedy selection that decays scores instead of removing detections.
///
/// Returns the valid detections in input order with updated scores. Linear
/// decay can drive a score to exactly zero, so the output is a plain list
/// rather than a [`DetectionVector`].
pub fn soft_nms_rescore(
    d: &DetectionVector,
    mode: SoftNmsMode,
    theta: f64,
    sigma: f64,
) -> Result<Vec<Detection>> {
    if mode == SoftNmsMode::Gaussian && !(sigma > 0.0 && sigma.is_finite()) {
        return Err(NmsError::Config(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let mut dets = d.valid().to_vec();
    let mut done = vec![false; dets.len()];
    for _ in 0..dets.len() {
        let best = (0..dets.len())
            .filter(|&i| !done[i])
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(b) if dets[b].s >= dets[i].s => Some(b),
                _ => Some(i),
            })
            .expect("an unprocessed detection remains");
        done[best] = true;
        let picked = dets[best];
        for (r, det) in dets.iter_mut().enumerate() {
            if done[r] {
                continue;
            }
            let ratio = ratio_over_second(det, &picked);
            match mode {
                SoftNmsMode::Linear if ratio >= theta => det.s *= 1.0 - ratio,
                SoftNmsMode::Linear => {}
                SoftNmsMode::Gaussian => det.s *= (-(ratio * ratio) / sigma).exp(),
            }
        }
    }
    Ok(dets)
}

/// Agreement between the matrix method and greedy NMS over a set of frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub instances: usize,
    pub exact_matches: usize,
    /// Mean Jaccard similarity of the survivor index sets.
    pub jaccard_mean: f64,
    pub max_symmetric_diff: usize,
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counting as identical.
pub fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Runs the engine and greedy NMS on every instance and measures how often
/// they agree. Disagreement is expected on suppression chains.
pub fn compare_methods(instances: &[DetectionVector], theta: f64) -> Result<AgreementReport> {
    if instances.is_empty() {
        return Err(NmsError::Config(
            "compare_methods needs at least one instance".into(),
        ));
    }
    let per_instance: Vec<(bool, f64, usize)> = instances
        .par_iter()
        .map(|d| -> Result<_> {
            let mut engine = Engine::new(NmsConfig {
                theta,
                d_max: d.d_max(),
                k: 1,
                workers: 1,
                tie_break: TieBreak::PaperFaithful,
            })?;
            engine.map(d)?;
            engine.reduce();
            let matrix: BTreeSet<usize> =
                (0..d.count()).filter(|&i| engine.mask().get(i)).collect();
            let greedy: BTreeSet<usize> = greedy_keep(d, theta).into_iter().collect();
            Ok((
                matrix == greedy,
                jaccard(&matrix, &greedy),
                matrix.symmetric_difference(&greedy).count(),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(AgreementReport {
        instances: instances.len(),
        exact_matches: per_instance.iter().filter(|r| r.0).count(),
        jaccard_mean: per_instance.iter().map(|r| r.1).sum::<f64>() / instances.len() as f64,
        max_symmetric_diff: per_instance.iter().map(|r| r.2).max().unwrap_or(0),
    })
}
