use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use roomlayout::config::Settings;
use roomlayout::depth::{fit_camera_and_box, render_depth, FitOptions};
use roomlayout::heatmap::{decode_to_frame, encode};
use roomlayout::hypothesis::score;
use roomlayout::io::{
    draw_edges, load_heatmaps, load_layout_record, load_mask, load_rgb, save_depth_png, save_depth_raster,
    save_heatmaps, save_mask, save_rgb, write_json, KeypointRecord,
};
use roomlayout::keypoint::rescale_keypoints;
use roomlayout::layout::{build_layout, edges_of_layout, rasterize, Layout};
use roomlayout::metrics::EvalOptions;
use roomlayout::pipeline::{evaluate_dirs, generate_dataset, image_size_arg, select_bundle, SynthOptions};
use roomlayout::synth::{NoiseConfig, PerturbConfig, SceneRanges};
use roomlayout::{Error, Group, Result, Size};

#[derive(Parser, Debug)]
#[command(
    name = "roomlayout",
    version,
    about = "Room layout selection, evaluation and relative depth"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Weight of the mean IoU term in the hypothesis score
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,

    /// IoU a region needs to count as matching
    #[arg(long, global = true, allow_negative_numbers = true)]
    iou_threshold: Option<f64>,

    /// Minimum floor/ceiling fraction of a segmentation to count as present
    #[arg(long, global = true, allow_negative_numbers = true)]
    presence_tau: Option<f64>,

    /// Heatmap Gaussian width in heatmap pixels
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma: Option<f64>,

    /// TOML file of key = value settings; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pick the best of the three hypotheses in a prediction bundle
    Select {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rasterize a layout record into a label mask PNG
    Rasterize {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
    },
    /// Score a layout mask against a segmentation
    Score {
        #[arg(long)]
        layout_mask: PathBuf,
        #[arg(long)]
        segmentation: PathBuf,
    },
    /// Pixel and keypoint error of predictions against ground truth
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Take the best wall relabelling per image
        #[arg(long)]
        wall_permutation: bool,
    },
    /// Encode a layout record's keypoints as heatmaps
    EncodeHeatmaps {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 80)]
        resolution: u32,
    },
    /// Decode a heatmap container into keypoints at an image size
    DecodeHeatmaps {
        #[arg(long)]
        heatmaps: PathBuf,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a box and camera to a type-0 layout and render relative depth
    Depth {
        #[arg(long)]
        layout: PathBuf,
        /// Output prefix: writes <prefix>.bin, <prefix>.png and <prefix>_fit.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic dataset with prediction bundles
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 55)]
        count: usize,
        #[arg(long, default_value_t = 320)]
        size: u32,
        #[arg(long, default_value_t = 0.0)]
        flip_prob: f64,
        #[arg(long, default_value_t = 0.0)]
        keypoint_sigma: f64,
        #[arg(long, default_value_t = 0)]
        boundary_radius: u32,
        /// Also write ground-truth depth rasters
        #[arg(long)]
        with_depth: bool,
    },
    /// Draw layout edges onto an image
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn settings(g: &GlobalArgs) -> Result<Settings> {
    let mut s = match &g.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    if let Some(v) = g.lambda {
        s.lambda = v;
    }
    if let Some(v) = g.iou_threshold {
        s.iou_threshold = v;
    }
    if let Some(v) = g.presence_tau {
        s.presence_tau = v;
    }
    if let Some(v) = g.sigma {
        s.sigma = v;
    }
    if let Some(v) = g.seed {
        s.seed = v;
    }
    if let Some(v) = g.jobs {
        s.jobs = v;
    }
    s.validate()?;
    Ok(s)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn load_layout(path: &Path, size: Option<Size>) -> Result<Layout> {
    let (record, room_type, kps) = load_layout_record(path)?;
    let size = size.unwrap_or(record.size());
    let kps = rescale_keypoints(&kps, size)?;
    build_layout(
        room_type.group(),
        &kps,
        room_type.floor_present(),
        room_type.ceiling_present(),
        size,
    )
}

#[derive(Serialize)]
struct DecodedKeypoints {
    group: Group,
    width: u32,
    height: u32,
    keypoints: Vec<KeypointRecord>,
    confidences: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    let s = settings(&cli.global)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(s.jobs)
        .build_global()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    match cli.command {
        Command::Select { bundle, out } => {
            let report = select_bundle(&bundle, &out, &s.select_config())?;
            log::info!(
                "{}: chose group {} (type {})",
                report.image_id,
                report.chosen,
                report.room_type
            );
            print_json(&report)
        }
        Command::Rasterize {
            layout,
            out,
            width,
            height,
        } => {
            let size = match (width, height) {
                (Some(w), Some(h)) => Some(image_size_arg(w, h)?),
                (None, None) => None,
                _ => return Err(Error::InvalidInput("give both --width and --height or neither".into())),
            };
            let layout = load_layout(&layout, size)?;
            let mask = rasterize(&layout, layout.size());
            save_mask(&out, &mask)
        }
        Command::Score {
            layout_mask,
            segmentation,
        } => {
            let a = load_mask(&layout_mask)?;
            let b = load_mask(&segmentation)?;
            print_json(&score(&a, &b, s.lambda, s.iou_threshold)?)
        }
        Command::Eval {
            gt,
            pred,
            out,
            wall_permutation,
        } => {
            let report = evaluate_dirs(
                &gt,
                &pred,
                EvalOptions {
                    wall_permutation_tolerant: wall_permutation,
                },
            )?;
            if report.warning_count() > 0 {
                log::warn!("{} images skipped", report.warning_count());
            }
            match out {
                Some(p) => write_json(&p, &report),
                None => print_json(&report),
            }
        }
        Command::EncodeHeatmaps {
            layout,
            out,
            resolution,
        } => {
            let (_, _, kps) = load_layout_record(&layout)?;
            let hm = encode(&kps, image_size_arg(resolution, resolution)?, s.sigma)?;
            save_heatmaps(&out, &hm)
        }
        Command::DecodeHeatmaps {
            heatmaps,
            width,
            height,
            out,
        } => {
            let hm = load_heatmaps(&heatmaps)?;
            let kps = decode_to_frame(&hm, s.min_confidence, image_size_arg(width, height)?)?;
            let decoded = DecodedKeypoints {
                group: kps.group(),
                width,
                height,
                keypoints: kps
                    .points()
                    .iter()
                    .map(|k| KeypointRecord {
                        id: k.id,
                        x: k.x,
                        y: k.y,
                    })
                    .collect(),
                confidences: kps.points().iter().map(|k| k.confidence).collect(),
            };
            match out {
                Some(p) => write_json(&p, &decoded),
                None => print_json(&decoded),
            }
        }
        Command::Depth { layout, out } => {
            let (record, room_type, kps) = load_layout_record(&layout)?;
            if room_type.id() != 0 {
                return Err(Error::InvalidInput(format!(
                    "depth needs a type-0 layout, {} has type {}",
                    layout.display(),
                    room_type.id()
                )));
            }
            let fit = fit_camera_and_box(&kps, record.size(), &FitOptions::default())?;
            if !fit.converged {
                log::warn!("fit did not converge after {} iterations", fit.iterations);
            }
            if fit.degenerate {
                log::warn!(
                    "focal length is poorly constrained (condition {:.3e})",
                    fit.condition_number
                );
            }
            let l = build_layout(Group::A, &kps, true, true, record.size())?;
            let depth = render_depth(&fit, &l, record.size())?;
            if depth.filled_pixels > 0 {
                log::warn!("{} pixels filled from neighbors", depth.filled_pixels);
            }
            let with_ext = |ext: &str| {
                let mut p = out.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            save_depth_raster(&with_ext(".bin"), &depth)?;
            save_depth_png(&with_ext(".png"), &depth)?;
            write_json(&with_ext("_fit.json"), &fit)
        }
        Command::Synth {
            out,
            count,
            size,
            flip_prob,
            keypoint_sigma,
            boundary_radius,
            with_depth,
        } => {
            let options = SynthOptions {
                count,
                seed: s.seed,
                ranges: SceneRanges {
                    image_size: image_size_arg(size, size)?,
                    ..SceneRanges::default()
                },
                perturb: PerturbConfig {
                    noise: NoiseConfig {
                        keypoint_sigma,
                        flip_prob,
                        boundary_radius,
                        seed: s.seed,
                    },
                    b_walls: s.b_walls,
                    heatmap_sigma: s.sigma,
                    ..PerturbConfig::default()
                },
                with_depth,
            };
            let entries = generate_dataset(&out, &options)?;
            log::info!("wrote {} scenes to {}", entries.len(), out.display());
            Ok(())
        }
        Command::Overlay { image, layout, out } => {
            let mut img = load_rgb(&image)?;
            let l = load_layout(&layout, Some(Size::new(img.width(), img.height())))?;
            draw_edges(&mut img, &edges_of_layout(&l));
            save_rgb(&out, &img)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
