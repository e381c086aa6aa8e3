//! Benchmark harness: timed engine runs, parameter sweeps and the CSV
//! record format they produce.
//!
//! Every timed configuration runs `warmup` untimed passes followed by
//! `repetitions` timed ones; the reported latencies are medians over the
//! timed passes, measured with [`Instant`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detections::DetectionVector;
use crate::engine::{mask_survivors, Engine, NmsConfig, TieBreak};
use crate::error::{NmsError, Result};
use crate::workload::{generate_frame, WorkloadSpec};

pub const CSV_HEADER: &str =
    "n,k,workers,theta,map_ms,reduce_ms,total_ms,map_cells,reduce_segments,survivors,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: usize,
    pub k: usize,
    pub workers: usize,
    pub theta: f64,
    pub map_ms: f64,
    pub reduce_ms: f64,
    pub total_ms: f64,
    pub map_cells: u64,
    pub reduce_segments: u64,
    pub survivors: usize,
    pub seed: u64,
}

impl BenchRecord {
    /// The record as one CSV row, without the trailing newline.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
            self.n,
            self.k,
            self.workers,
            self.theta,
            self.map_ms,
            self.reduce_ms,
            self.total_ms,
            self.map_cells,
            self.reduce_segments,
            self.survivors,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub repetitions: usize,
    pub warmup: usize,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            repetitions: 5,
            warmup: 3,
        }
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Times the full pipeline on `d` and checks the work counters against
/// `d_max^2` and `d_max * k`.
pub fn bench_frame(
    d: &DetectionVector,
    cfg: &NmsConfig,
    timing: Timing,
    seed: u64,
) -> Result<BenchRecord> {
    if timing.repetitions == 0 {
        return Err(NmsError::Config("repetitions must be positive".into()));
    }
    let mut engine = Engine::new(*cfg)?;
    let mut map_t = Vec::with_capacity(timing.repetitions);
    let mut reduce_t = Vec::with_capacity(timing.repetitions);
    let mut total_t = Vec::with_capacity(timing.repetitions);
    let mut outcome = None;
    for rep in 0..timing.warmup + timing.repetitions {
        let start = Instant::now();
        let mut counters = engine.map(d)?;
        let map_ms = ms(start);
        let reduce_start = Instant::now();
        counters += engine.reduce();
        let reduce_ms = ms(reduce_start);
        let result = mask_survivors(d, engine.mask());
        let total_ms = ms(start);
        if rep >= timing.warmup {
            map_t.push(map_ms);
            reduce_t.push(reduce_ms);
            total_t.push(total_ms);
        }
        match &outcome {
            Some((survivors, _)) if *survivors != result.survivors.len() => {
                return Err(NmsError::Invariant(format!(
                    "survivor count changed between repetitions: {survivors} vs {}",
                    result.survivors.len()
                )));
            }
            _ => outcome = Some((result.survivors.len(), counters)),
        }
    }
    let (survivors, counters) = outcome.expect("at least one repetition");
    let d_max = cfg.d_max as u64;
    if counters.map_cells != d_max * d_max || counters.reduce_segments != d_max * cfg.k as u64 {
        return Err(NmsError::Invariant(format!(
            "work counters {counters:?} disagree with d_max = {d_max}, k = {}",
            cfg.k
        )));
    }
    Ok(BenchRecord {
        n: d.count(),
        k: cfg.k,
        workers: cfg.workers,
        theta: cfg.theta,
        map_ms: median(&mut map_t),
        reduce_ms: median(&mut reduce_t),
        total_ms: median(&mut total_t),
        map_cells: counters.map_cells,
        reduce_segments: counters.reduce_segments,
        survivors,
        seed,
    })
}

/// Smallest multiple of `k` that is at least `n` (and at least `k`).
pub fn next_multiple(n: usize, k: usize) -> usize {
    n.max(1).div_ceil(k) * k
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// How a sweep chooses `d_max` for each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmaxMode {
    /// `d_max` tracks `n` (rounded up to a multiple of `k`), so work grows
    /// as `n^2`.
    TrackN,
    /// Constant allocation regardless of `n`.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub theta: f64,
    pub k: usize,
    pub workers: usize,
    pub tie_break: TieBreak,
    pub timing: Timing,
    pub seed: u64,
    pub per_object: usize,
    pub d_max: DmaxMode,
}

impl Default for SweepParams {
    fn default() -> Self {
        let cfg = NmsConfig::default();
        SweepParams {
            theta: cfg.theta,
            k: cfg.k,
            workers: cfg.workers,
            tie_break: cfg.tie_break,
            timing: Timing::default(),
            seed: 0,
            per_object: 8,
            d_max: DmaxMode::TrackN,
        }
    }
}

impl SweepParams {
    fn config(&self, d_max: usize, k: usize, workers: usize) -> NmsConfig {
        NmsConfig {
            theta: self.theta,
            d_max,
            k,
            workers,
            tie_break: self.tie_break,
        }
    }
}

/// Synthetic frame of exactly `n` detections: clusters of `per_object`
/// boxes, the last one truncated if `n` is not a multiple.
pub fn synthetic_frame(
    n: usize,
    per_object: usize,
    seed: u64,
    d_max: usize,
) -> Result<DetectionVector> {
    let spec = WorkloadSpec::for_detections(n, per_object, seed);
    let full = generate_frame(&spec, spec.total_detections())?;
    DetectionVector::new(full.valid()[..n].to_vec(), d_max)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(NmsError::Config("sweep points need n >= 1".into()));
    }
    Ok(())
}

/// One record per `(workers, n)` pair.
pub fn sweep_n(n_values: &[usize], workers: &[usize], p: &SweepParams) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::new();
    for &w in workers {
        for &n in n_values {
            check_n(n)?;
            let d_max = match p.d_max {
                DmaxMode::TrackN => next_multiple(n, p.k),
                DmaxMode::Fixed(d) => d,
            };
            let frame = synthetic_frame(n, p.per_object, p.seed, d_max)?;
            records.push(bench_frame(
                &frame,
                &p.config(d_max, p.k, w),
                p.timing,
                p.seed,
            )?);
        }
    }
    Ok(records)
}

/// One record per `k` on a single frame. The survivor count must not depend
/// on `k`; a mismatch is reported as an invariant violation.
pub fn sweep_k(n: usize, k_values: &[usize], p: &SweepParams) -> Result<Vec<BenchRecord>> {
    check_n(n)?;
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(NmsError::Config("k values must be positive".into()));
    }
    let d_max = match p.d_max {
        DmaxMode::Fixed(d) => d,
        DmaxMode::TrackN => {
            let lcm = k_values.iter().fold(1, |acc, &k| acc / gcd(acc, k) * k);
            next_multiple(n, lcm)
        }
    };
    for &k in k_values {
        p.config(d_max, k, p.workers).validate()?;
    }
    let frame = synthetic_frame(n, p.per_object, p.seed, d_max)?;
    let records = k_values
        .iter()
        .map(|&k| bench_frame(&frame, &p.config(d_max, k, p.workers), p.timing, p.seed))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = records.iter().find(|r| r.survivors != records[0].survivors) {
        return Err(NmsError::Invariant(format!(
            "survivor count depends on k: {} at k = {} vs {} at k = {}",
            records[0].survivors, records[0].k, bad.survivors, bad.k
        )));
    }
    Ok(records)
}

/// One record per worker count on a single frame.
pub fn sweep_workers(n: usize, workers: &[usize], p: &SweepParams) -> Result<Vec<BenchRecord>> {
    check_n(n)?;
    let d_max = match p.d_max {
        DmaxMode::TrackN => next_multiple(n, p.k),
        DmaxMode::Fixed(d) => d,
    };
    let frame = synthetic_frame(n, p.per_object, p.seed, d_max)?;
    let records = workers
        .iter()
        .map(|&w| bench_frame(&frame, &p.config(d_max, p.k, w), p.timing, p.seed))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = records.iter().find(|r| r.survivors != records[0].survivors) {
        return Err(NmsError::Invariant(format!(
            "survivor count depends on worker count: {} vs {} at {} workers",
            records[0].survivors, bad.survivors, bad.workers
        )));
    }
    Ok(records)
}

pub fn write_records<W: Write>(writer: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(reader));
    let headers = rdr.headers().map_err(|e| NmsError::Parse(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(NmsError::Parse(format!(
            "benchmark CSV must have header `{CSV_HEADER}`"
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| NmsError::Parse(e.to_string())))
        .collect()
}

pub fn store_records(path: &Path, records: &[BenchRecord]) -> Result<()> {
    write_records(File::create(path)?, records)
}

pub fn load_records(path: &Path) -> Result<Vec<BenchRecord>> {
    read_records(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SweepParams {
        SweepParams {
            timing: Timing {
                repetitions: 1,
                warmup: 0,
            },
            ..SweepParams::default()
        }
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn next_multiple_rounds_up() {
        assert_eq!(next_multiple(2895, 32), 2912);
        assert_eq!(next_multiple(512, 32), 512);
        assert_eq!(next_multiple(0, 32), 32);
    }

    #[test]
    fn synthetic_frame_has_exact_count() {
        let f = synthetic_frame(2895, 8, 1, 2912).unwrap();
        assert_eq!(f.count(), 2895);
        assert_eq!(f.d_max(), 2912);
    }

    #[test]
    fn sweep_n_counters_follow_d_max() {
        let recs = sweep_n(&[64, 100], &[1, 2], &quick()).unwrap();
        assert_eq!(recs.len(), 4);
        for r in &recs {
            let d_max = next_multiple(r.n, 32) as u64;
            assert_eq!(r.map_cells, d_max * d_max);
            assert_eq!(r.reduce_segments, d_max * 32);
            assert!(r.total_ms >= r.map_ms.max(r.reduce_ms));
        }
        assert_eq!(recs[0].survivors, recs[2].survivors);

        let fixed = SweepParams {
            d_max: DmaxMode::Fixed(256),
            ..quick()
        };
        let recs = sweep_n(&[64, 100], &[1], &fixed).unwrap();
        assert!(recs.iter().all(|r| r.map_cells == 256 * 256));
        assert!(sweep_n(&[0], &[1], &quick()).is_err());
    }

    #[test]
    fn sweep_k_is_k_invariant() {
        let recs = sweep_k(300, &[1, 2, 4, 8, 16, 32, 64], &quick()).unwrap();
        assert_eq!(recs.len(), 7);
        assert!(recs.iter().all(|r| r.survivors == recs[0].survivors));
        assert_eq!(recs[0].map_cells, 320 * 320);

        let fixed = SweepParams {
            d_max: DmaxMode::Fixed(4096),
            ..quick()
        };
        assert!(matches!(
            sweep_k(300, &[3], &fixed),
            Err(NmsError::Config(_))
        ));
        let full = sweep_k(100, &[4096], &fixed).unwrap();
        assert_eq!(full[0].reduce_segments, 4096 * 4096);
    }

    #[test]
    fn repetitions_do_not_change_results() {
        let one = sweep_n(&[200], &[1], &quick()).unwrap();
        let five = sweep_n(
            &[200],
            &[1],
            &SweepParams {
                timing: Timing::default(),
                ..quick()
            },
        )
        .unwrap();
        assert_eq!(one[0].survivors, five[0].survivors);
    }

    #[test]
    fn csv_roundtrip_and_schema() {
        let recs = sweep_workers(64, &[1, 2], &quick()).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        let back = read_records(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].workers, 2);
        assert!(read_records(&b"a,b\n1,2\n"[..]).is_err());
    }
}
