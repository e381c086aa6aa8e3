//! Seeded synthetic detection workloads.
//!
//! A frame is a set of well-separated objects, each surrounded by a cluster
//! of jittered candidate windows the way a sliding-window detector would
//! fire around a face. Randomness comes from ChaCha8 (`rand_chacha`) seeded
//! with `seed_from_u64(seed)`; draws happen in a fixed order (all centers
//! first, then each cluster's boxes), so a spec and seed always produce the
//! same frame.
//!
//! Cluster centers are kept at Chebyshev distance of at least
//! `max(2 * base_z, base_z + jitter_z + 2 * jitter_xy + 2)` pixels, which
//! puts boxes from different clusters at overlap ratio exactly zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detections::{Detection, DetectionVector};
use crate::error::{NmsError, Result};

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScoreModel {
    /// `s = s_max - decay * |(dx, dy, dz)|`: the box sitting exactly on the
    /// object scores highest and scores fall off with displacement.
    PeakDecay { s_max: f64, decay: f64 },
}

impl Default for ScoreModel {
    fn default() -> Self {
        ScoreModel::PeakDecay {
            s_max: 1.0,
            decay: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub objects: usize,
    pub detections_per_object: usize,
    pub frame_w: u32,
    pub frame_h: u32,
    pub base_z: u32,
    pub jitter_xy: u32,
    pub jitter_z: u32,
    pub score_model: ScoreModel,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            objects: 3,
            detections_per_object: 3,
            frame_w: 1920,
            frame_h: 1080,
            base_z: 24,
            jitter_xy: 2,
            jitter_z: 2,
            score_model: ScoreModel::default(),
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    /// Spec producing at least `n` detections in clusters of `per_object`,
    /// on a square frame roomy enough for rejection sampling to succeed.
    pub fn for_detections(n: usize, per_object: usize, seed: u64) -> Self {
        let base = WorkloadSpec::default();
        let objects = n.div_ceil(per_object.max(1));
        let sep = base.separation() as usize;
        let side = (2 * sep * ((objects as f64).sqrt().ceil() as usize + 1)).max(256) as u32;
        WorkloadSpec {
            objects,
            detections_per_object: per_object.max(1),
            frame_w: side,
            frame_h: side,
            seed,
            ..base
        }
    }

    /// Minimum Chebyshev distance between two cluster centers.
    pub fn separation(&self) -> u32 {
        (2 * self.base_z).max(self.base_z + self.jitter_z + 2 * self.jitter_xy + 2)
    }

    pub fn total_detections(&self) -> usize {
        self.objects * self.detections_per_object
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(NmsError::Workload(msg));
        if self.jitter_z >= self.base_z {
            return err(format!(
                "jitter_z ({}) must be smaller than base_z ({})",
                self.jitter_z, self.base_z
            ));
        }
        if self.detections_per_object > 1 && self.jitter_xy == 0 && self.jitter_z == 0 {
            return err("clusters of more than one box need nonzero jitter".into());
        }
        let ScoreModel::PeakDecay { s_max, decay } = self.score_model;
        let worst = (2.0 * (self.jitter_xy as f64).powi(2) + (self.jitter_z as f64).powi(2)).sqrt();
        if !(s_max.is_finite() && decay.is_finite() && decay > 0.0 && s_max - decay * worst > 0.0)
        {
            return err(format!(
                "score model {:?} can produce non-positive scores",
                self.score_model
            ));
        }
        Ok(())
    }

    /// Valid range of center coordinates along an axis of length `len`.
    fn center_range(&self, len: u32) -> Option<(u32, u32)> {
        let z_max = self.base_z + self.jitter_z;
        let lo = self.jitter_xy + z_max / 2;
        let hi = (len.checked_sub(1)?).checked_sub(self.jitter_xy + z_max.div_ceil(2))?;
        (lo <= hi).then_some((lo, hi))
    }
}

fn place_centers(spec: &WorkloadSpec, rng: &mut ChaCha8Rng) -> Result<Vec<(u32, u32)>> {
    let no_room = || {
        NmsError::Workload(format!(
            "cannot place {} objects with separation {} in a {}x{} frame",
            spec.objects,
            spec.separation(),
            spec.frame_w,
            spec.frame_h
        ))
    };
    if spec.objects == 0 {
        return Ok(Vec::new());
    }
    let (x_lo, x_hi) = spec.center_range(spec.frame_w).ok_or_else(no_room)?;
    let (y_lo, y_hi) = spec.center_range(spec.frame_h).ok_or_else(no_room)?;
    let sep = spec.separation();
    let mut centers: Vec<(u32, u32)> = Vec::with_capacity(spec.objects);
    for _ in 0..spec.objects {
        let placed = (0..PLACEMENT_ATTEMPTS).find_map(|_| {
            let c = (rng.random_range(x_lo..=x_hi), rng.random_range(y_lo..=y_hi));
            centers
                .iter()
                .all(|o| c.0.abs_diff(o.0).max(c.1.abs_diff(o.1)) >= sep)
                .then_some(c)
        });
        centers.push(placed.ok_or_else(no_room)?);
    }
    Ok(centers)
}

fn jittered_cluster(
    spec: &WorkloadSpec,
    center: (u32, u32),
    rng: &mut ChaCha8Rng,
) -> Vec<Detection> {
    let ScoreModel::PeakDecay { s_max, decay } = spec.score_model;
    let (jxy, jz) = (spec.jitter_xy as i64, spec.jitter_z as i64);
    let n = spec.detections_per_object;
    let peak = rng.random_range(0..n);
    (0..n)
        .map(|k| {
            let (dx, dy, dz) = if k == peak {
                (0, 0, 0)
            } else {
                loop {
                    let off = (
                        rng.random_range(-jxy..=jxy),
                        rng.random_range(-jxy..=jxy),
                        rng.random_range(-jz..=jz),
                    );
                    if off != (0, 0, 0) {
                        break off;
                    }
                }
            };
            let z = spec.base_z as i64 + dz;
            let norm = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
            Detection::new(
                (center.0 as i64 + dx - z / 2) as u32,
                (center.1 as i64 + dy - z / 2) as u32,
                z as u32,
                s_max - decay * norm,
            )
        })
        .collect()
}

/// All clusters of a spec, in object order.
pub fn generate_clusters(spec: &WorkloadSpec) -> Result<Vec<Vec<Detection>>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = place_centers(spec, &mut rng)?;
    Ok(centers
        .into_iter()
        .map(|c| jittered_cluster(spec, c, &mut rng))
        .collect())
}

/// One frame holding every cluster of `spec`, padded to `d_max`.
pub fn generate_frame(spec: &WorkloadSpec, d_max: usize) -> Result<DetectionVector> {
    let dets = generate_clusters(spec)?.concat();
    DetectionVector::new(dets, d_max)
}

/// Frames `0..=steps`, where frame `t` holds only the first `t` objects.
pub fn coverage_sweep(
    spec: &WorkloadSpec,
    steps: usize,
    d_max: usize,
) -> Result<Vec<DetectionVector>> {
    if steps > spec.objects {
        return Err(NmsError::Workload(format!(
            "{steps} steps requested for {} objects",
            spec.objects
        )));
    }
    let clusters = generate_clusters(spec)?;
    (0..=steps)
        .map(|t| DetectionVector::new(clusters[..t].concat(), d_max))
        .collect()
}

/// Tiles `frames` row-major into a `rows x cols` grid of `frame_w x frame_h`
/// cells and concatenates their detections.
pub fn mosaic(
    frames: &[DetectionVector],
    grid: (usize, usize),
    frame_w: u32,
    frame_h: u32,
    d_max: usize,
) -> Result<DetectionVector> {
    let (rows, cols) = grid;
    if frames.len() != rows * cols {
        return Err(NmsError::Workload(format!(
            "{} frames do not fill a {rows}x{cols} grid",
            frames.len()
        )));
    }
    let total: usize = frames.iter().map(DetectionVector::count).sum();
    if total > d_max {
        return Err(NmsError::Capacity {
            count: total,
            d_max,
        });
    }
    let mut out = Vec::with_capacity(total);
    for (idx, frame) in frames.iter().enumerate() {
        let (r, c) = ((idx / cols) as u64, (idx % cols) as u64);
        let (ox, oy) = (c * frame_w as u64, r * frame_h as u64);
        for d in frame.valid() {
            let shift = |v: u32, o: u64| {
                u32::try_from(v as u64 + o)
                    .map_err(|_| NmsError::Validation(format!("mosaic offset overflows {d:?}")))
            };
            out.push(Detection::new(shift(d.x, ox)?, shift(d.y, oy)?, d.z, d.s));
        }
    }
    DetectionVector::new(out, d_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_frame() {
        let spec = WorkloadSpec {
            seed: 7,
            ..WorkloadSpec::default()
        };
        let a = generate_frame(&spec, 16).unwrap();
        let b = generate_frame(&spec, 16).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count(), 9);
        let c = generate_frame(&WorkloadSpec { seed: 8, ..spec }, 16).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_box_scores_s_max() {
        let spec = WorkloadSpec {
            objects: 1,
            detections_per_object: 1,
            ..WorkloadSpec::default()
        };
        let f = generate_frame(&spec, 4).unwrap();
        assert_eq!(f.count(), 1);
        assert_eq!(f.valid()[0].s, 1.0);
        assert_eq!(f.valid()[0].z, spec.base_z);
    }

    #[test]
    fn boxes_stay_inside_frame() {
        let spec = WorkloadSpec {
            objects: 40,
            detections_per_object: 6,
            frame_w: 640,
            frame_h: 480,
            jitter_xy: 4,
            seed: 3,
            ..WorkloadSpec::default()
        };
        for d in generate_frame(&spec, 240).unwrap().valid() {
            assert!(
                d.x + d.z < spec.frame_w && d.y + d.z < spec.frame_h,
                "{d:?}"
            );
        }
    }

    #[test]
    fn impossible_specs_are_rejected() {
        let crowded = WorkloadSpec {
            objects: 1000,
            frame_w: 200,
            frame_h: 200,
            ..WorkloadSpec::default()
        };
        assert!(matches!(
            generate_frame(&crowded, 4096),
            Err(NmsError::Workload(_))
        ));
        let tiny = WorkloadSpec {
            frame_w: 10,
            ..WorkloadSpec::default()
        };
        assert!(generate_frame(&tiny, 16).is_err());
        let frozen = WorkloadSpec {
            jitter_xy: 0,
            jitter_z: 0,
            ..WorkloadSpec::default()
        };
        assert!(generate_frame(&frozen, 16).is_err());
        let flat = WorkloadSpec {
            score_model: ScoreModel::PeakDecay {
                s_max: 1.0,
                decay: 0.0,
            },
            ..WorkloadSpec::default()
        };
        assert!(generate_frame(&flat, 16).is_err());
        let negative = WorkloadSpec {
            score_model: ScoreModel::PeakDecay {
                s_max: 0.05,
                decay: 0.1,
            },
            ..WorkloadSpec::default()
        };
        assert!(generate_frame(&negative, 16).is_err());
    }

    #[test]
    fn coverage_frames_are_prefixes() {
        let spec = WorkloadSpec {
            objects: 5,
            seed: 11,
            ..WorkloadSpec::default()
        };
        let frames = coverage_sweep(&spec, 5, 32).unwrap();
        assert_eq!(frames.len(), 6);
        assert!(frames[0].is_empty());
        for t in 1..frames.len() {
            let (prev, cur) = (frames[t - 1].valid(), frames[t].valid());
            assert_eq!(cur.len(), 3 * t);
            assert_eq!(&cur[..prev.len()], prev);
        }
        assert!(coverage_sweep(&spec, 6, 32).is_err());
    }

    #[test]
    fn mosaic_translates_and_concatenates() {
        let spec = WorkloadSpec {
            frame_w: 200,
            frame_h: 100,
            seed: 5,
            ..WorkloadSpec::default()
        };
        let frame = generate_frame(&spec, 9).unwrap();
        let tiles = vec![frame.clone(); 4];
        let m = mosaic(&tiles, (2, 2), 200, 100, 64).unwrap();
        assert_eq!(m.count(), 36);
        let d0 = frame.valid()[0];
        assert_eq!(
            m.valid()[27],
            Detection::new(d0.x + 200, d0.y + 100, d0.z, d0.s)
        );

        let empty = vec![DetectionVector::empty(4); 4];
        assert!(mosaic(&empty, (2, 2), 200, 100, 4).unwrap().is_empty());
        assert!(matches!(
            mosaic(&tiles, (2, 2), 200, 100, 35),
            Err(NmsError::Capacity { .. })
        ));
        assert!(mosaic(&tiles, (1, 3), 200, 100, 64).is_err());
    }
}
