//! Static SVG charts from benchmark CSV records.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use plotters::prelude::*;

use crate::bench::BenchRecord;
use crate::error::{NmsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Total latency against detection count, one series per worker count.
    LatencyVsN,
    /// Reduce and total latency against `k`.
    LatencyVsK,
    /// Map and reduce latency against detection count.
    MapReduceSplit,
}

impl FromStr for PlotKind {
    type Err = NmsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "latency_vs_n" => Ok(PlotKind::LatencyVsN),
            "latency_vs_k" => Ok(PlotKind::LatencyVsK),
            "map_reduce_split" => Ok(PlotKind::MapReduceSplit),
            other => Err(NmsError::Config(format!("unknown plot kind `{other}`"))),
        }
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn series(kind: PlotKind, records: &[BenchRecord]) -> (Vec<Series>, &'static str, &'static str) {
    let mut out = Vec::new();
    match kind {
        PlotKind::LatencyVsN => {
            let mut by_workers: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
            for r in records {
                by_workers
                    .entry(r.workers)
                    .or_default()
                    .push((r.n as f64, r.total_ms));
            }
            for (w, points) in by_workers {
                out.push(Series {
                    label: format!("{w} worker(s)"),
                    points,
                });
            }
            (out, "detections (n)", "NMS latency (ms)")
        }
        PlotKind::LatencyVsK => {
            for (label, pick) in [
                (
                    "reduce",
                    (|r: &BenchRecord| r.reduce_ms) as fn(&BenchRecord) -> f64,
                ),
                ("total", |r: &BenchRecord| r.total_ms),
            ] {
                out.push(Series {
                    label: label.into(),
                    points: records.iter().map(|r| (r.k as f64, pick(r))).collect(),
                });
            }
            (out, "partitions per row (k)", "latency (ms)")
        }
        PlotKind::MapReduceSplit => {
            for (label, pick) in [
                (
                    "map",
                    (|r: &BenchRecord| r.map_ms) as fn(&BenchRecord) -> f64,
                ),
                ("reduce", |r: &BenchRecord| r.reduce_ms),
            ] {
                out.push(Series {
                    label: label.into(),
                    points: records.iter().map(|r| (r.n as f64, pick(r))).collect(),
                });
            }
            (out, "detections (n)", "latency (ms)")
        }
    }
}

fn draw_err<E: std::fmt::Debug>(e: E) -> NmsError {
    NmsError::Io(std::io::Error::other(format!("{e:?}")))
}

/// Renders `records` as an SVG line chart at `out`.
pub fn plot_records(records: &[BenchRecord], kind: PlotKind, out: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(NmsError::Parse("no benchmark records to plot".into()));
    }
    let (mut all_series, x_label, y_label) = series(kind, records);
    for s in &mut all_series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let xs = all_series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = all_series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x_min, x_max) = xs.fold((f64::MAX, f64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let y_max = ys.fold(0.0f64, f64::max).max(1e-3) * 1.1;
    let x_max = if x_max > x_min { x_max } else { x_min + 1.0 };

    let root = SVGBackend::new(out, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x_min..x_max, 0.0..y_max)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(draw_err)?;
    for (idx, s) in all_series.iter().enumerate() {
        let color = Palette99::pick(idx).to_rgba();
        chart
            .draw_series(LineSeries::new(
                s.points.iter().copied(),
                color.stroke_width(2),
            ))
            .map_err(draw_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
        chart
            .draw_series(s.points.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(draw_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}
