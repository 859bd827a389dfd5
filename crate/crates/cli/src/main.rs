//! Command-line front end for the geovox toolkit.
//!
//! Exit codes: 0 on success, 1 on usage or runtime errors, 2 when a
//! generation run legitimately produces an empty scene. Outputs are
//! written whole-buffer; a failing command leaves no partial files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use geovox::aggregate::{read_view_manifest, scatter_aggregate, AggregateParams};
use geovox::augment::{jagged_perturb, random_zero_condition, roughen, JaggedMode};
use geovox::dataset::{height_split, semantic_id_from_color};
use geovox::flow::{
    sliding_window_generate, GenerateParams, SeededRandomField, ShapeOracleField, TileFrame,
    VelocityField, WindowParams, DEFAULT_CFG_SCALE, DEFAULT_SHIFT, DEFAULT_STEPS,
    LATENT_DOWNSCALE,
};
use geovox::geo::{
    ada_level_plan, building_spiral_plan, expand_condition_plane, lift_semantic_plane,
    top_pose_plan, write_camera_json, AdaLevelParams, CameraRecord, Intrinsics, SpiralParams,
    TopPoseParams,
};
use geovox::rng::SeededRng;
use geovox::voxel::{iou, occupancy_accuracy, read_svox, set_op, write_svox, Coord3, SetOp};
use geovox::{Error, Result, SparseVoxelGrid};

/// Exit code for a run that produced no voxels.
const EXIT_EMPTY: u8 = 2;

/// Largest grid edge the metrics command will rasterize densely.
const MAX_DENSE_RESOLUTION: u32 = 512;

#[derive(Parser)]
#[command(name = "geovox", version, about = "Sparse-voxel scene toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two voxel grids (IoU, overlap counts, dense accuracy).
    Metrics(MetricsArgs),
    /// Generate a scene with the two-stage sampler, tiling if needed.
    Sample(SampleArgs),
    /// Pool per-view features onto scene elements.
    Aggregate(AggregateArgs),
    /// Apply a structure augmentation to a grid.
    Augment(AugmentArgs),
    /// Plan a camera trajectory and write it as camera JSON.
    Plan(PlanArgs),
    /// Split scene indices into held-out and remaining sets by height.
    Split(SplitArgs),
    /// Lift a semantic color map into a condition voxel grid.
    Lift(LiftArgs),
}

#[derive(Args)]
struct MetricsArgs {
    /// Predicted grid (SVOX).
    #[arg(long)]
    pred: PathBuf,
    /// Reference grid (SVOX).
    #[arg(long)]
    truth: PathBuf,
    /// Emit one JSON object instead of text lines.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldKind {
    /// Structureless pseudo-random velocity field.
    Random,
    /// Oracle field that reproduces a coarse target grid.
    Shape,
}

#[derive(Args)]
struct SampleArgs {
    /// Output grid (SVOX).
    #[arg(long)]
    out: PathBuf,
    /// Structure-level window edge, in voxels (multiple of 8).
    #[arg(long, default_value_t = 256)]
    resolution: u32,
    /// Structure-level scene edge; tiles when larger than the window.
    #[arg(long)]
    scene: Option<u32>,
    /// Structure-level tile overlap, in voxels.
    #[arg(long, default_value_t = 64)]
    overlap: u32,
    /// Voxel edge length, meters.
    #[arg(long, default_value_t = 1.0)]
    voxel_size: f32,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_SHIFT)]
    shift: f64,
    #[arg(long, default_value_t = DEFAULT_CFG_SCALE)]
    cfg: f64,
    /// Latent channels per voxel.
    #[arg(long, default_value_t = 32)]
    channels: usize,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Velocity field driving both stages.
    #[arg(long, value_enum, default_value_t = FieldKind::Random)]
    field: FieldKind,
    /// Seed for the random field.
    #[arg(long, default_value_t = 1)]
    field_seed: u64,
    /// Coarse-level target grid for the shape field (SVOX).
    #[arg(long, required_if_eq("field", "shape"))]
    target: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("elements").required(true).args(["count", "coords"])))]
struct AggregateArgs {
    /// JSONL manifest of views.
    #[arg(long)]
    manifest: PathBuf,
    /// Output feature matrix (raw little-endian f32).
    #[arg(long)]
    out: PathBuf,
    /// Number of scene elements.
    #[arg(long)]
    count: Option<usize>,
    /// Grid whose voxels are the scene elements (SVOX).
    #[arg(long)]
    coords: Option<PathBuf>,
    /// Also write the coords grid with aggregated features attached.
    #[arg(long, requires = "coords")]
    out_grid: Option<PathBuf>,
    #[arg(long, default_value_t = geovox::aggregate::DEFAULT_Z_FAR)]
    z_far: f64,
    #[arg(long, default_value_t = geovox::aggregate::DEFAULT_TAU_DEPTH)]
    tau_depth: f64,
    #[arg(long, default_value_t = geovox::aggregate::DEFAULT_TAU_SURFACE)]
    tau_surface: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AugmentOp {
    /// Jitter every voxel by +-1 per axis.
    Jagged,
    /// Dilate then snap occupancy to blocks.
    Roughen,
    /// Zero the feature rows of randomly chosen voxels.
    Zero,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JaggedModeArg {
    Symmetric,
    NonPositive,
}

#[derive(Args)]
struct AugmentArgs {
    /// Input grid (SVOX).
    #[arg(long)]
    input: PathBuf,
    /// Output grid (SVOX).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    op: AugmentOp,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Offset range for the jagged op.
    #[arg(long, value_enum, default_value_t = JaggedModeArg::Symmetric)]
    mode: JaggedModeArg,
    /// Dilation cube edge for the roughen op (odd).
    #[arg(long, default_value_t = 3)]
    dilate: u32,
    /// Block size for the roughen op.
    #[arg(long, default_value_t = 2)]
    simplify: u32,
    /// Rows to blank for the zero op.
    #[arg(long, default_value_t = 1)]
    count: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanKind {
    /// Sixteen oblique poses on two concentric squares.
    Top,
    /// Altitude-adaptive rings scaled to the scene height.
    Rings,
    /// Descending spiral around a building.
    Spiral,
}

#[derive(Args)]
struct PlanArgs {
    /// Output camera JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    kind: PlanKind,
    /// Tallest structure height, meters (rings and spiral).
    #[arg(long, default_value_t = 60.0)]
    max_height: f64,
    #[arg(long, default_value_t = 512.0)]
    fx: f64,
    #[arg(long, default_value_t = 512.0)]
    fy: f64,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
}

#[derive(Args)]
struct SplitArgs {
    /// JSON array of per-scene heights.
    #[arg(long)]
    heights: PathBuf,
    /// Output JSON with held-out and remaining indices.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    ratio: f64,
    #[arg(long, default_value_t = 1)]
    min_per_bin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LiftArgs {
    /// Square semantic color map (PNG, palette colors, black = unlabeled).
    #[arg(long)]
    png: PathBuf,
    /// Output condition grid (SVOX).
    #[arg(long)]
    out: PathBuf,
    /// Replicate the plane across this many z layers.
    #[arg(long)]
    layers: Option<u32>,
    /// Voxel edge length, meters.
    #[arg(long, default_value_t = 1.0)]
    voxel_size: f32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: &Command) -> Result<u8> {
    match command {
        Command::Metrics(args) => cmd_metrics(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Aggregate(args) => cmd_aggregate(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Split(args) => cmd_split(args),
        Command::Lift(args) => cmd_lift(args),
    }
}

/// Dense occupancy raster in x-major, z-fastest order.
fn dense_occupancy(grid: &SparseVoxelGrid) -> Vec<u8> {
    let l = grid.resolution() as usize;
    let mut cells = vec![0u8; l * l * l];
    for c in grid.coords() {
        cells[(c.x as usize * l + c.y as usize) * l + c.z as usize] = 1;
    }
    cells
}

#[derive(Serialize)]
struct MetricsOutput {
    iou: f64,
    intersection: usize,
    union: usize,
    pred: usize,
    truth: usize,
    accuracy: Option<f64>,
}

fn cmd_metrics(args: &MetricsArgs) -> Result<u8> {
    let pred = read_svox(&args.pred)?;
    let truth = read_svox(&args.truth)?;
    let intersection = set_op(&pred, &truth, SetOp::Intersection).len();
    let union = pred.len() + truth.len() - intersection;

    // Dense occupancy agreement is only meaningful when both grids
    // address the same bounded lattice, and only cheap at desk scale.
    let accuracy = (!pred.is_unbounded()
        && !truth.is_unbounded()
        && pred.resolution() == truth.resolution()
        && pred.resolution() <= MAX_DENSE_RESOLUTION)
        .then(|| occupancy_accuracy(&dense_occupancy(&pred), &dense_occupancy(&truth)))
        .transpose()?;

    let out = MetricsOutput {
        iou: iou(&pred, &truth),
        intersection,
        union,
        pred: pred.len(),
        truth: truth.len(),
        accuracy,
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string(&out).map_err(|e| Error::Format(e.to_string()))?
        );
    } else {
        println!("iou {}", out.iou);
        println!("intersection {}", out.intersection);
        println!("union {}", out.union);
        println!("pred {}", out.pred);
        println!("truth {}", out.truth);
        if let Some(acc) = out.accuracy {
            println!("accuracy {acc}");
        }
    }
    Ok(0)
}

enum FieldSpec {
    Random { seed: u64 },
    Shape { target: SparseVoxelGrid },
}

/// Salt distinguishing the latent-stage random field from the class stage.
const LATENT_FIELD_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Target voxels inside a tile, shifted into the tile frame.
fn clip_target_to_tile(
    target: &SparseVoxelGrid,
    frame: &TileFrame,
    coarse_window: u32,
) -> Result<SparseVoxelGrid> {
    let w = coarse_window as i32;
    let (ox, oy) = (frame.coarse_start_x as i32, frame.coarse_start_y as i32);
    let local: Vec<Coord3> = target
        .coords()
        .iter()
        .filter_map(|c| {
            let (lx, ly) = (c.x - ox, c.y - oy);
            ((0..w).contains(&lx) && (0..w).contains(&ly) && (0..w).contains(&c.z))
                .then(|| Coord3::new(lx, ly, c.z))
        })
        .collect();
    SparseVoxelGrid::from_coords(local, coarse_window, target.voxel_size())
}

fn cmd_sample(args: &SampleArgs) -> Result<u8> {
    let scene = args.scene.unwrap_or(args.resolution);
    let gen = GenerateParams {
        resolution: args.resolution,
        voxel_size: args.voxel_size,
        steps: args.steps,
        shift: args.shift,
        cfg_scale: args.cfg,
        latent_channels: args.channels,
        seed: args.seed,
        ..GenerateParams::default()
    };
    let window = WindowParams {
        scene,
        window: args.resolution,
        // A single-tile run never strides, so the overlap is irrelevant.
        overlap: if scene == args.resolution { 0 } else { args.overlap },
    };

    let spec = match args.field {
        FieldKind::Random => FieldSpec::Random {
            seed: args.field_seed,
        },
        FieldKind::Shape => {
            let path = args.target.as_ref().expect("clap enforces --target");
            let target = read_svox(path)?;
            let want = scene / LATENT_DOWNSCALE;
            if target.is_unbounded() || target.resolution() != want {
                return Err(Error::InvalidParam(format!(
                    "shape target must be a bounded coarse grid of resolution {want}, \
                     got resolution {}",
                    target.resolution()
                )));
            }
            FieldSpec::Shape { target }
        }
    };

    let coarse_window = args.resolution / LATENT_DOWNSCALE.max(1);
    let channels = args.channels;
    let class_factory = |frame: &TileFrame| -> Result<Box<dyn VelocityField>> {
        Ok(match &spec {
            FieldSpec::Random { seed } => Box::new(SeededRandomField::new(*seed)),
            FieldSpec::Shape { target } => Box::new(ShapeOracleField::dense_class(
                target,
                frame.coarse_start_x as i32,
                frame.coarse_start_y as i32,
                coarse_window,
            )),
        })
    };
    let latent_factory =
        |frame: &TileFrame, structure: &SparseVoxelGrid| -> Result<Box<dyn VelocityField>> {
            Ok(match &spec {
                FieldSpec::Random { seed } => {
                    Box::new(SeededRandomField::new(seed ^ LATENT_FIELD_SALT))
                }
                FieldSpec::Shape { target } => {
                    let local = clip_target_to_tile(target, frame, coarse_window)?;
                    Box::new(ShapeOracleField::latent_on(structure, &local, channels))
                }
            })
        };

    let (grid, reports) = sliding_window_generate(class_factory, latent_factory, &window, &gen)?;
    if grid.is_empty() {
        eprintln!("generation produced no voxels");
        return Ok(EXIT_EMPTY);
    }
    write_svox(&grid, &args.out)?;
    let coarse: usize = reports.iter().map(|r| r.diagnostics.coarse_voxels).sum();
    let dropped: usize = reports.iter().map(|r| r.diagnostics.latent_dropped).sum();
    println!("tiles {}", reports.len());
    println!("coarse {coarse}");
    println!("dropped {dropped}");
    println!("voxels {}", grid.len());
    println!("out {}", args.out.display());
    Ok(0)
}

fn cmd_aggregate(args: &AggregateArgs) -> Result<u8> {
    let views = read_view_manifest(&args.manifest)?;
    let channels = views
        .first()
        .ok_or(Error::EmptyInput("view manifest"))?
        .channels;
    if let Some(v) = views.iter().find(|v| v.channels != channels) {
        return Err(Error::ChannelMismatch {
            expected: channels,
            actual: v.channels,
        });
    }
    let coords = args.coords.as_ref().map(read_svox).transpose()?;
    let count = match (&coords, args.count) {
        (Some(grid), None) => grid.len(),
        (None, Some(n)) => n,
        _ => unreachable!("clap enforces exactly one element source"),
    };
    let params = AggregateParams {
        z_far: args.z_far,
        tau_depth: args.tau_depth,
        tau_surface: args.tau_surface,
        ..AggregateParams::default()
    };
    let features = scatter_aggregate(&views, count, channels, &params)?;

    let mut bytes = Vec::with_capacity(features.len() * 4);
    for v in &features {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(&args.out, bytes)?;
    if let Some(out_grid) = &args.out_grid {
        let grid = coords
            .expect("clap ties --out-grid to --coords")
            .with_features(channels, features)?;
        write_svox(&grid, out_grid)?;
        println!("out_grid {}", out_grid.display());
    }
    println!("views {}", views.len());
    println!("elements {count}");
    println!("channels {channels}");
    println!("out {}", args.out.display());
    Ok(0)
}

fn cmd_augment(args: &AugmentArgs) -> Result<u8> {
    let grid = read_svox(&args.input)?;
    let mut rng = SeededRng::new(args.seed);
    let out = match args.op {
        AugmentOp::Jagged => {
            let mode = match args.mode {
                JaggedModeArg::Symmetric => JaggedMode::Symmetric,
                JaggedModeArg::NonPositive => JaggedMode::NonPositive,
            };
            jagged_perturb(&grid, mode, &mut rng)?
        }
        AugmentOp::Roughen => roughen(&grid, args.dilate, args.simplify)?,
        AugmentOp::Zero => random_zero_condition(&grid, args.count, &mut rng)?,
    };
    write_svox(&out, &args.out)?;
    println!("voxels_in {}", grid.len());
    println!("voxels_out {}", out.len());
    println!("out {}", args.out.display());
    Ok(0)
}

fn cmd_plan(args: &PlanArgs) -> Result<u8> {
    let poses = match args.kind {
        PlanKind::Top => top_pose_plan(&TopPoseParams::default())?,
        PlanKind::Rings => ada_level_plan(args.max_height, &AdaLevelParams::default(), None)?,
        PlanKind::Spiral => building_spiral_plan(args.max_height, &SpiralParams::default())?,
    };
    let intrinsics = Intrinsics {
        fx: args.fx,
        fy: args.fy,
        cx: args.width as f64 / 2.0,
        cy: args.height as f64 / 2.0,
        width: args.width,
        height: args.height,
    };
    let records: Vec<CameraRecord> = poses
        .iter()
        .map(|p| CameraRecord::from_pose(p, &intrinsics))
        .collect();
    write_camera_json(&records, &args.out)?;
    println!("poses {}", records.len());
    println!("out {}", args.out.display());
    Ok(0)
}

#[derive(Serialize)]
struct SplitOutput {
    held_out: Vec<usize>,
    rest: Vec<usize>,
}

fn cmd_split(args: &SplitArgs) -> Result<u8> {
    let body = std::fs::read_to_string(&args.heights)?;
    let heights: Vec<f32> =
        serde_json::from_str(&body).map_err(|e| Error::Format(format!("heights file: {e}")))?;
    let mut rng = SeededRng::new(args.seed);
    let (held_out, rest) = height_split(&heights, args.ratio, args.min_per_bin, &mut rng)?;
    let out = SplitOutput { held_out, rest };
    let body =
        serde_json::to_string_pretty(&out).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&args.out, body)?;
    println!("held_out {}", out.held_out.len());
    println!("rest {}", out.rest.len());
    println!("out {}", args.out.display());
    Ok(0)
}

fn cmd_lift(args: &LiftArgs) -> Result<u8> {
    let img = image::open(&args.png)
        .map_err(|e| Error::Format(format!("{}: {e}", args.png.display())))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    if w != h {
        return Err(Error::InvalidParam(format!(
            "semantic map must be square, got {w}x{h}"
        )));
    }
    let mut ids = Vec::with_capacity((w * h) as usize);
    for pixel in img.pixels() {
        let rgb = [pixel.0[0], pixel.0[1], pixel.0[2]];
        if rgb == [0, 0, 0] {
            ids.push(0);
        } else {
            ids.push(semantic_id_from_color(rgb)? as u8);
        }
    }
    let plane = lift_semantic_plane(&ids, w, args.voxel_size)?;
    let grid = match args.layers {
        Some(layers) => expand_condition_plane(&plane, layers)?,
        None => plane,
    };
    write_svox(&grid, &args.out)?;
    println!("voxels {}", grid.len());
    println!("out {}", args.out.display());
    Ok(0)
}
