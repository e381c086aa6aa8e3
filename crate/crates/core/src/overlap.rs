//! Pairwise suppression test between two square windows.
//!
//! Windows use the inclusive-pixel convention: a window at `x` with side `z`
//! covers pixels `x..=x+z`, so its area is `(z + 1)^2`. The overlap ratio is
//! the intersection area divided by the area of the *second* window (the
//! higher-scoring one, when called from the map phase). It is not IoU.

use crate::detections::Detection;

/// Result of comparing detection `i` against detection `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapOutcome {
    /// `true` when `i` survives the comparison against `j`.
    pub keep: bool,
    /// Intersection area over the area of `j`, in `[0, 1]`.
    pub ratio: f64,
}

/// Inclusive 1D overlap of `[a_lo, a_lo + a_len]` and `[b_lo, b_lo + b_len]`.
#[inline]
pub fn intersection_extent(a_lo: i64, a_len: i64, b_lo: i64, b_len: i64) -> i64 {
    ((a_lo + a_len).min(b_lo + b_len) - a_lo.max(b_lo) + 1).max(0)
}

/// Intersection area `w * h` of two windows. Symmetric in its arguments.
#[inline]
pub fn intersection_area(a: &Detection, b: &Detection) -> i64 {
    let w = intersection_extent(a.x as i64, a.z as i64, b.x as i64, b.z as i64);
    let h = intersection_extent(a.y as i64, a.z as i64, b.y as i64, b.z as i64);
    w * h
}

#[inline]
pub fn window_area(d: &Detection) -> i64 {
    let side = d.z as i64 + 1;
    side * side
}

/// Intersection of `i` and `j` over the area of `j`.
#[inline]
pub fn overlap_ratio(i: &Detection, j: &Detection) -> f64 {
    intersection_area(i, j) as f64 / window_area(j) as f64
}

/// Decides whether `i` survives against `j` at threshold `theta`.
///
/// `keep = ratio < theta && j.z != 0`, evaluated as `w * h < theta * a` so
/// the hot path avoids a division. The score ordering between `i` and `j` is
/// not checked here; the map phase gates on it.
#[inline]
pub fn suppression_test(i: &Detection, j: &Detection, theta: f64) -> OverlapOutcome {
    let wh = intersection_area(i, j) as f64;
    let a = window_area(j) as f64;
    OverlapOutcome {
        keep: wh < theta * a && j.z != 0,
        ratio: wh / a,
    }
}
