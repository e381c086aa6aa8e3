//! Parallel NMS pipeline.
//!
//! 1. **Map**: every cell `(i, j)` of a `d_max x d_max` bit matrix is
//!    evaluated independently. When `j` out-scores `i`, the cell is
//!    overwritten with the result of [`suppression_test`]; otherwise it keeps
//!    its initial value of 1.
//! 2. **Reduce**: each row is AND-folded into one survivor bit, in `k`
//!    consecutive segments of width `d_max / k`.
//! 3. **Mask**: valid detections whose survivor bit is set are emitted in
//!    input order.
//!
//! Work is split across a rayon pool by contiguous row blocks, so every
//! storage word has exactly one writer and the output does not depend on the
//! worker count.

mod matrix;

use std::ops::AddAssign;
use std::str::FromStr;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::detections::{Detection, DetectionVector, NmsResult};
use crate::error::{NmsError, Result};
use crate::overlap::suppression_test;

pub use matrix::{SuppressionMatrix, SurvivorMask};

/// How the map-phase score gate treats equal scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Strict `s_i < s_j`: equal-score detections never suppress each other.
    #[default]
    PaperFaithful,
    /// Additionally `s_i == s_j && i > j`: among equal scores the lowest
    /// index wins.
    ByIndex,
}

impl TieBreak {
    /// Whether detection `j` is allowed to suppress detection `i`.
    #[inline]
    pub fn gate(self, i: usize, s_i: f64, j: usize, s_j: f64) -> bool {
        s_i < s_j || (self == TieBreak::ByIndex && s_i == s_j && i > j)
    }
}

impl FromStr for TieBreak {
    type Err = NmsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "paper_faithful" => Ok(TieBreak::PaperFaithful),
            "by_index" => Ok(TieBreak::ByIndex),
            other => Err(NmsError::Config(format!(
                "unknown tie-break policy `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsConfig {
    pub theta: f64,
    pub d_max: usize,
    /// Number of segments each row is split into during the reduce phase.
    pub k: usize,
    pub workers: usize,
    pub tie_break: TieBreak,
}

impl Default for NmsConfig {
    fn default() -> Self {
        NmsConfig {
            theta: 0.3,
            d_max: 4096,
            k: 32,
            workers: 1,
            tie_break: TieBreak::PaperFaithful,
        }
    }
}

impl NmsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(NmsError::Config(format!(
                "theta {} outside [0, 1]",
                self.theta
            )));
        }
        if self.d_max == 0 {
            return Err(NmsError::Config("d_max must be positive".into()));
        }
        if self.k == 0 || !self.d_max.is_multiple_of(self.k) {
            return Err(NmsError::Config(format!(
                "k = {} does not divide d_max = {}",
                self.k, self.d_max
            )));
        }
        if self.workers == 0 {
            return Err(NmsError::Config("workers must be positive".into()));
        }
        Ok(())
    }

    fn check_vector(&self, d: &DetectionVector) -> Result<()> {
        if d.d_max() != self.d_max {
            return Err(NmsError::Config(format!(
                "detection vector has capacity {}, config expects d_max = {}",
                d.d_max(),
                self.d_max
            )));
        }
        Ok(())
    }
}

/// Operation counts for one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkCounters {
    /// Matrix cells visited by the map phase (`d_max^2`).
    pub map_cells: u64,
    /// Cells whose score gate passed and were overwritten.
    pub map_writes: u64,
    /// Segment AND-folds performed by the reduce phase (`d_max * k`).
    pub reduce_segments: u64,
}

impl AddAssign for WorkCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.map_cells += rhs.map_cells;
        self.map_writes += rhs.map_writes;
        self.reduce_segments += rhs.reduce_segments;
    }
}

/// Rows handed to each worker so that every worker gets one contiguous
/// block. For the mask the block is rounded up to whole words.
fn rows_per_worker(rows: usize, workers: usize, align: usize) -> usize {
    rows.div_ceil(workers).div_ceil(align).max(1) * align
}

/// Column words processed per tile. A tile of detections (8 words x 64 x
/// 24 bytes) stays resident in L1 while every row of a block visits it.
const TILE_WORDS: usize = 8;

/// Fills words `words` of row `i`. Returns the number of gate-passing cells.
#[inline]
fn map_row_tile(
    row: &mut [u64],
    i: usize,
    words: std::ops::Range<usize>,
    slots: &[Detection],
    theta: f64,
    tie: TieBreak,
) -> u64 {
    let d_i = &slots[i];
    let mut writes = 0;
    for w in words {
        let lo = w * 64;
        let chunk = &slots[lo..(lo + 64).min(slots.len())];
        let mut word = row[w];
        for (b, d_j) in chunk.iter().enumerate() {
            if tie.gate(i, d_i.s, lo + b, d_j.s) {
                writes += 1;
                if !suppression_test(d_i, d_j, theta).keep {
                    word &= !(1u64 << b);
                }
            }
        }
        row[w] = word;
    }
    writes
}

/// Fills a block of consecutive rows starting at `first`, tile by tile.
fn map_rows(
    block: &mut [u64],
    first: usize,
    row_words: usize,
    slots: &[Detection],
    theta: f64,
    tie: TieBreak,
) -> u64 {
    let mut writes = 0;
    for tile in (0..row_words).step_by(TILE_WORDS) {
        let words = tile..(tile + TILE_WORDS).min(row_words);
        for (r, row) in block.chunks_mut(row_words).enumerate() {
            writes += map_row_tile(row, first + r, words.clone(), slots, theta, tie);
        }
    }
    writes
}

fn map_into(
    matrix: &mut SuppressionMatrix,
    d: &DetectionVector,
    cfg: &NmsConfig,
    pool: Option<&ThreadPool>,
) -> WorkCounters {
    matrix.reset();
    let dim = matrix.dim();
    let row_words = matrix.row_words();
    let slots = d.slots();
    let (theta, tie) = (cfg.theta, cfg.tie_break);
    let block_rows = rows_per_worker(dim, cfg.workers, 1);

    let map_block = |(block, words): (usize, &mut [u64])| -> u64 {
        let first = block * block_rows;
        // sub-blocks of 64 rows keep each tile hot across the rows that use it
        words
            .chunks_mut(64 * row_words)
            .enumerate()
            .map(|(sub, rows)| map_rows(rows, first + sub * 64, row_words, slots, theta, tie))
            .sum::<u64>()
    };
    let words = matrix.words_mut();
    let map_writes = match pool {
        Some(pool) => pool.install(|| {
            words
                .par_chunks_mut(block_rows * row_words)
                .enumerate()
                .map(map_block)
                .sum()
        }),
        None => words
            .chunks_mut(block_rows * row_words)
            .enumerate()
            .map(map_block)
            .sum(),
    };
    WorkCounters {
        map_cells: (dim * dim) as u64,
        map_writes,
        reduce_segments: 0,
    }
}

/// AND of row `i`, folded segment by segment. The first segment seeds the
/// result and the remaining `k - 1` fold into it, without short-circuiting.
#[inline]
fn reduce_row(matrix: &SuppressionMatrix, i: usize, k: usize) -> bool {
    let width = matrix.dim() / k;
    let row = matrix.row(i);
    let mut v = matrix::all_set(row, 0, width);
    for seg in 1..k {
        v &= matrix::all_set(row, seg * width, (seg + 1) * width);
    }
    v
}

fn reduce_into(
    matrix: &SuppressionMatrix,
    mask: &mut SurvivorMask,
    k: usize,
    workers: usize,
    pool: Option<&ThreadPool>,
) -> WorkCounters {
    let dim = matrix.dim();
    let block_rows = rows_per_worker(dim, workers, 64);
    let reduce_block = |(block, words): (usize, &mut [u64])| {
        let first = block * block_rows;
        for (w, word) in words.iter_mut().enumerate() {
            let base = first + w * 64;
            let mut bits = 0u64;
            for b in 0..64.min(dim.saturating_sub(base)) {
                if reduce_row(matrix, base + b, k) {
                    bits |= 1 << b;
                }
            }
            *word = bits;
        }
    };
    let words = mask.words_mut();
    match pool {
        Some(pool) => pool.install(|| {
            words
                .par_chunks_mut(block_rows / 64)
                .enumerate()
                .for_each(reduce_block)
        }),
        None => words
            .chunks_mut(block_rows / 64)
            .enumerate()
            .for_each(reduce_block),
    }
    WorkCounters {
        map_cells: 0,
        map_writes: 0,
        reduce_segments: (dim * k) as u64,
    }
}

/// Keeps valid detections whose mask bit is set, in input order.
pub fn mask_survivors(d: &DetectionVector, v: &SurvivorMask) -> NmsResult {
    let survivors: Vec<Detection> = d
        .valid()
        .iter()
        .enumerate()
        .filter(|(i, _)| v.get(*i))
        .map(|(_, det)| *det)
        .collect();
    NmsResult {
        suppressed_count: d.count() - survivors.len(),
        survivors,
    }
}

/// Reusable pipeline: owns the worker pool and the matrix/mask buffers.
pub struct Engine {
    cfg: NmsConfig,
    pool: Option<ThreadPool>,
    matrix: SuppressionMatrix,
    mask: SurvivorMask,
}

impl Engine {
    pub fn new(cfg: NmsConfig) -> Result<Self> {
        cfg.validate()?;
        let pool = if cfg.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers)
                    .build()
                    .map_err(|e| NmsError::Config(format!("cannot start worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Engine {
            cfg,
            pool,
            matrix: SuppressionMatrix::new(cfg.d_max),
            mask: SurvivorMask::new(cfg.d_max),
        })
    }

    pub fn config(&self) -> &NmsConfig {
        &self.cfg
    }

    /// Resets the matrix to all ones and runs the map phase over `d`.
    pub fn map(&mut self, d: &DetectionVector) -> Result<WorkCounters> {
        self.cfg.check_vector(d)?;
        Ok(map_into(&mut self.matrix, d, &self.cfg, self.pool.as_ref()))
    }

    /// Reduces the current matrix into the survivor mask.
    pub fn reduce(&mut self) -> WorkCounters {
        reduce_into(
            &self.matrix,
            &mut self.mask,
            self.cfg.k,
            self.cfg.workers,
            self.pool.as_ref(),
        )
    }

    pub fn matrix(&self) -> &SuppressionMatrix {
        &self.matrix
    }

    pub fn mask(&self) -> &SurvivorMask {
        &self.mask
    }

    pub fn run(&mut self, d: &DetectionVector) -> Result<(NmsResult, WorkCounters)> {
        let mut counters = self.map(d)?;
        counters += self.reduce();
        Ok((mask_survivors(d, &self.mask), counters))
    }
}

/// Builds the suppression matrix for `d`.
pub fn map_phase(
    d: &DetectionVector,
    cfg: &NmsConfig,
) -> Result<(SuppressionMatrix, WorkCounters)> {
    let mut engine = Engine::new(*cfg)?;
    let counters = engine.map(d)?;
    Ok((engine.matrix, counters))
}

/// Folds every row of `b` into a survivor bit using `cfg.k` segments.
pub fn reduce_phase(
    b: &SuppressionMatrix,
    cfg: &NmsConfig,
) -> Result<(SurvivorMask, WorkCounters)> {
    cfg.validate()?;
    if b.dim() != cfg.d_max {
        return Err(NmsError::Config(format!(
            "matrix dimension {} does not match d_max = {}",
            b.dim(),
            cfg.d_max
        )));
    }
    let pool = Engine::new(*cfg)?.pool;
    let mut mask = SurvivorMask::new(b.dim());
    let counters = reduce_into(b, &mut mask, cfg.k, cfg.workers, pool.as_ref());
    Ok((mask, counters))
}

/// Full map, reduce and mask pipeline on a fresh engine.
pub fn run_nms(d: &DetectionVector, cfg: &NmsConfig) -> Result<(NmsResult, WorkCounters)> {
    Engine::new(*cfg)?.run(d)
}
