use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use pnms::bench::{self, DmaxMode, SweepParams, Timing};
use pnms::detections::{self, Format};
use pnms::oracles::compare_methods;
use pnms::plot::{plot_records, PlotKind};
use pnms::workload::{generate_frame, ScoreModel, WorkloadSpec};
use pnms::{DetectionVector, NmsConfig, TieBreak};

#[derive(Parser)]
#[command(
    name = "pnms",
    version,
    about = "Parallel matrix-based non-maximum suppression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run NMS on a detection file and write the survivors.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// csv or json; inferred from the extension when omitted
        #[arg(long)]
        format: Option<Format>,
        #[arg(long)]
        out_format: Option<Format>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Generate a synthetic clustered frame.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        objects: usize,
        #[arg(long, default_value_t = 3)]
        per_object: usize,
        #[arg(long, default_value_t = 1920)]
        frame_w: u32,
        #[arg(long, default_value_t = 1080)]
        frame_h: u32,
        #[arg(long, default_value_t = 24)]
        base_z: u32,
        #[arg(long, default_value_t = 2)]
        jitter_xy: u32,
        #[arg(long, default_value_t = 2)]
        jitter_z: u32,
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
        #[arg(long, default_value_t = 0.02)]
        decay: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Latency against detection count.
    SweepN {
        #[arg(long, value_delimiter = ',', default_value = "512,1024,2048,4096")]
        n_values: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        worker_counts: Vec<usize>,
        /// Keep d_max constant (the configured d_max) instead of tracking n.
        #[arg(long)]
        fixed_dmax: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Latency against the reduce partition count k.
    SweepK {
        #[arg(long, default_value_t = 2895)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
        k_values: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Latency against the worker count.
    SweepWorkers {
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        worker_counts: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Measure agreement between the matrix method and greedy NMS.
    Compare {
        /// Detection files; when empty, synthetic frames are generated.
        #[arg(long, num_args = 0..)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Render a sweep CSV as an SVG chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// latency_vs_n, latency_vs_k or map_reduce_split
        #[arg(long)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Engine and timing options shared by the commands. Flags override the
/// config file, which overrides the defaults.
#[derive(Args, Default)]
struct CommonOpts {
    /// TOML file with any of: theta, d_max, k, workers, tie_break,
    /// repetitions, warmup, seed, per_object
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    tie_break: Option<TieBreak>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Detections per synthetic object
    #[arg(long)]
    per_object: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    theta: Option<f64>,
    d_max: Option<usize>,
    k: Option<usize>,
    workers: Option<usize>,
    tie_break: Option<TieBreak>,
    repetitions: Option<usize>,
    warmup: Option<usize>,
    seed: Option<u64>,
    per_object: Option<usize>,
}

struct Resolved {
    cfg: NmsConfig,
    d_max_given: bool,
    timing: Timing,
    seed: u64,
    per_object: usize,
}

impl CommonOpts {
    fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let defaults = NmsConfig::default();
        let timing = Timing::default();
        let d_max = self.d_max.or(file.d_max);
        Ok(Resolved {
            cfg: NmsConfig {
                theta: self.theta.or(file.theta).unwrap_or(defaults.theta),
                d_max: d_max.unwrap_or(defaults.d_max),
                k: self.k.or(file.k).unwrap_or(defaults.k),
                workers: self.workers.or(file.workers).unwrap_or(defaults.workers),
                tie_break: self
                    .tie_break
                    .or(file.tie_break)
                    .unwrap_or(defaults.tie_break),
            },
            d_max_given: d_max.is_some(),
            timing: Timing {
                repetitions: self
                    .repetitions
                    .or(file.repetitions)
                    .unwrap_or(timing.repetitions),
                warmup: self.warmup.or(file.warmup).unwrap_or(timing.warmup),
            },
            seed: self.seed.or(file.seed).unwrap_or(0),
            per_object: self.per_object.or(file.per_object).unwrap_or(8),
        })
    }
}

impl Resolved {
    fn sweep_params(&self, d_max: DmaxMode) -> SweepParams {
        SweepParams {
            theta: self.cfg.theta,
            k: self.cfg.k,
            workers: self.cfg.workers,
            tie_break: self.cfg.tie_break,
            timing: self.timing,
            seed: self.seed,
            per_object: self.per_object,
            d_max,
        }
    }
}

fn write_csv(out: &Path, records: &[bench::BenchRecord]) -> Result<()> {
    bench::store_records(out, records).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            input,
            out,
            format,
            out_format,
            opts,
        } => {
            let r = opts.resolve()?;
            r.cfg.validate()?;
            let format = format.unwrap_or_else(|| Format::from_path(&input));
            let d = detections::load_detections(&input, format, r.cfg.d_max)
                .with_context(|| format!("loading {}", input.display()))?;
            let record = bench::bench_frame(&d, &r.cfg, r.timing, r.seed)?;
            let (result, _) = pnms::run_nms(&d, &r.cfg)?;
            let out_format = out_format.unwrap_or_else(|| Format::from_path(&out));
            detections::store_result(&result, &out, out_format)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("{}", record.csv_row());
        }
        Command::Gen {
            out,
            objects,
            per_object,
            frame_w,
            frame_h,
            base_z,
            jitter_xy,
            jitter_z,
            s_max,
            decay,
            seed,
        } => {
            let spec = WorkloadSpec {
                objects,
                detections_per_object: per_object,
                frame_w,
                frame_h,
                base_z,
                jitter_xy,
                jitter_z,
                score_model: ScoreModel::PeakDecay { s_max, decay },
                seed,
            };
            let frame = generate_frame(&spec, spec.total_detections())?;
            detections::store_detections(frame.valid(), &out, Format::from_path(&out))?;
            eprintln!(
                "wrote {} detections (seed {seed}) to {}",
                frame.count(),
                out.display()
            );
        }
        Command::SweepN {
            n_values,
            worker_counts,
            fixed_dmax,
            out,
            opts,
        } => {
            let r = opts.resolve()?;
            let mode = if fixed_dmax {
                DmaxMode::Fixed(r.cfg.d_max)
            } else {
                DmaxMode::TrackN
            };
            let records = bench::sweep_n(&n_values, &worker_counts, &r.sweep_params(mode))?;
            write_csv(&out, &records)?;
        }
        Command::SweepK {
            n,
            k_values,
            out,
            opts,
        } => {
            let r = opts.resolve()?;
            let mode = if r.d_max_given {
                DmaxMode::Fixed(r.cfg.d_max)
            } else {
                DmaxMode::TrackN
            };
            let records = bench::sweep_k(n, &k_values, &r.sweep_params(mode))?;
            write_csv(&out, &records)?;
        }
        Command::SweepWorkers {
            n,
            worker_counts,
            out,
            opts,
        } => {
            let r = opts.resolve()?;
            let mode = if r.d_max_given {
                DmaxMode::Fixed(r.cfg.d_max)
            } else {
                DmaxMode::TrackN
            };
            let records = bench::sweep_workers(n, &worker_counts, &r.sweep_params(mode))?;
            write_csv(&out, &records)?;
        }
        Command::Compare {
            inputs,
            instances,
            n,
            opts,
        } => {
            let r = opts.resolve()?;
            let frames: Vec<DetectionVector> = if inputs.is_empty() {
                let d_max = bench::next_multiple(n, r.cfg.k);
                (0..instances as u64)
                    .map(|i| bench::synthetic_frame(n, r.per_object, r.seed + i, d_max))
                    .collect::<pnms::Result<_>>()?
            } else {
                inputs
                    .iter()
                    .map(|p| detections::load_detections(p, Format::from_path(p), r.cfg.d_max))
                    .collect::<pnms::Result<_>>()?
            };
            if frames.is_empty() {
                bail!("nothing to compare");
            }
            let report = compare_methods(&frames, r.cfg.theta)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Plot { csv, kind, out } => {
            let records =
                bench::load_records(&csv).with_context(|| format!("reading {}", csv.display()))?;
            plot_records(&records, kind, &out)?;
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(())
}
