use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use wavetrace_core::metrics::{
    compare_films, emit_csv, format_behavior_table, format_timing_table, run_benchmark, write_frame_stats, BenchError,
    MetricsError,
};
use wavetrace_core::{
    load_scene, make_integrator, CompactionMode, Film, FilmError, ImageFormat, IntegratorKind, RenderConfig, Scene,
    SceneError,
};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "wavetrace",
    version,
    about = "Megakernel and wavefront path tracers with a benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render an image with one integrator.
    Render(RenderArgs),
    /// Time all three integrators on the same workload.
    Bench(BenchArgs),
    /// Compare two PFM images.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Size {
    width: u32,
    height: u32,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Size, String> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("bad dimension `{v}`: {e}"));
        let size = Size {
            width: parse(w)?,
            height: parse(h)?,
        };
        if size.width == 0 || size.height == 0 {
            return Err("width and height must be at least 1".into());
        }
        Ok(size)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Args, Debug, Clone)]
struct SceneArgs {
    /// Built-in scene name (cornell, furnace-sphere) or path to a TOML scene.
    #[arg(long, default_value = "cornell")]
    scene: String,
    /// Image size as WIDTHxHEIGHT.
    #[arg(long, default_value = "64x64")]
    size: Size,
    /// Maximum number of intersection events per path.
    #[arg(long, default_value_t = 5)]
    max_depth: u32,
    /// Enable next-event estimation with shadow rays.
    #[arg(long)]
    nee: bool,
    /// Disable Russian roulette termination.
    #[arg(long)]
    no_rr: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads [default: available cores].
    #[arg(long, env = "WAVETRACE_WORKERS")]
    workers: Option<usize>,
    /// Work items per dispatched workgroup.
    #[arg(long, default_value_t = 64)]
    group_size: u32,
    /// Lanes per virtual warp in the occupancy model.
    #[arg(long, default_value_t = 32)]
    warp_size: usize,
    /// Append-order compaction with a shared atomic cursor instead of the
    /// ordered scan.
    #[arg(long)]
    atomic_compaction: bool,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value_t = 16)]
    spp: u32,
    /// mega, wave or wave-nocompact.
    #[arg(long, default_value = "mega")]
    integrator: IntegratorKind,
    /// Linear PFM output.
    #[arg(long, short, default_value = "render.pfm")]
    output: PathBuf,
    /// Also write a tonemapped binary PPM.
    #[arg(long)]
    ppm: Option<PathBuf>,
    /// Per-bounce statistics CSV [default: output path with .csv extension].
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Timed one-sample frames per integrator, after one warmup frame.
    #[arg(long, default_value_t = 3)]
    repeat: u32,
    /// Statistics CSV.
    #[arg(long, default_value = "bench.csv")]
    stats: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Largest accepted absolute difference in linear radiance.
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
}

/// Error carrying the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Failure {
        match e {
            SceneError::Io { .. } | SceneError::MissingMesh(_) => Failure::io(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<FilmError> for Failure {
    fn from(e: FilmError) -> Failure {
        match e {
            FilmError::Io(_) => Failure::io(e.to_string()),
            FilmError::Format(_) => Failure::usage(e.to_string()),
            FilmError::LengthMismatch { .. } => Failure::usage(e.to_string()),
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::io(format!("{}: {e}", path.display()))
}

fn setup(args: &SceneArgs, spp: u32) -> Result<(Scene, RenderConfig), Failure> {
    let config = RenderConfig {
        spp,
        max_depth: args.max_depth,
        seed: args.seed,
        nee: args.nee,
        russian_roulette: !args.no_rr,
        workers: args.workers.unwrap_or_else(default_workers),
        group_size: args.group_size,
        warp_size: args.warp_size,
        compaction: if args.atomic_compaction {
            CompactionMode::Atomic
        } else {
            CompactionMode::Deterministic
        },
    };
    config.validate().map_err(Failure::usage)?;
    let mut scene = load_scene(&args.scene)?;
    scene.set_resolution(args.size.width, args.size.height);
    Ok((scene, config))
}

fn cmd_render(args: RenderArgs) -> Result<(), Failure> {
    let (scene, config) = setup(&args.scene, args.spp)?;
    let mut film = Film::new(scene.camera.width, scene.camera.height);
    let mut integrator = make_integrator(args.integrator, &config);
    let stats = integrator.render(&scene, &mut film)?;

    film.write_image(&args.output, ImageFormat::LinearFloat)?;
    if let Some(ppm) = &args.ppm {
        film.write_image(ppm, ImageFormat::Tonemapped8)?;
    }
    let stats_path = args.stats.clone().unwrap_or_else(|| args.output.with_extension("csv"));
    let file = File::create(&stats_path).map_err(io_failure(&stats_path))?;
    let mut w = BufWriter::new(file);
    write_frame_stats(&stats, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_failure(&stats_path))?;

    let total_ms: f64 = stats.iter().map(|s| s.frame_ns as f64).sum::<f64>() / 1e6;
    let clamped: u64 = stats.iter().map(|s| s.clamped).sum();
    println!(
        "{} {}x{} spp {} depth {} nee {}: {:.1} ms, {} clamped -> {}",
        args.integrator,
        film.width,
        film.height,
        config.spp,
        config.max_depth,
        config.nee,
        total_ms,
        clamped,
        args.output.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    if args.repeat == 0 {
        return Err(Failure::usage("--repeat must be at least 1"));
    }
    let (scene, config) = setup(&args.scene, 1)?;
    let report = match run_benchmark(&scene, &config, args.repeat) {
        Ok(r) => r,
        Err(BenchError::Equivalence { kind, diff }) => {
            return Err(Failure {
                code: EXIT_MISMATCH,
                message: format!("equivalence gate failed: {kind} vs mega: {diff}"),
            })
        }
        Err(BenchError::Film(e)) => return Err(e.into()),
        Err(e) => return Err(Failure::usage(e.to_string())),
    };
    print!("{}", format_timing_table(&report));
    println!();
    print!("{}", format_behavior_table(&report));
    emit_csv(&report, &args.stats).map_err(io_failure(&args.stats))?;
    println!("statistics written to {}", args.stats.display());
    Ok(())
}

fn read_pfm(path: &Path) -> Result<Film, Failure> {
    Film::read_pfm(path).map_err(|e| match e {
        FilmError::Io(err) => Failure::io(format!("{}: {err}", path.display())),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    if args.tolerance.is_nan() || args.tolerance < 0.0 {
        return Err(Failure::usage("--tolerance must be non-negative"));
    }
    let a = read_pfm(&args.a)?;
    let b = read_pfm(&args.b)?;
    let diff = compare_films(&a, &b).map_err(|MetricsError::DimensionMismatch { a, b }| {
        Failure::usage(format!("dimension mismatch: {a} vs {b}"))
    })?;
    println!("max_abs {:e}", diff.max_abs);
    println!("mean_abs {:e}", diff.mean_abs);
    println!("rmse {:e}", diff.rmse);
    if diff.is_identical() {
        println!("images are identical");
    } else {
        println!("{} of {} pixels differ", diff.differing_pixels, a.len());
    }
    if diff.max_abs <= args.tolerance {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_MISMATCH,
            message: format!("max_abs {:e} exceeds tolerance {:e}", diff.max_abs, args.tolerance),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wavetrace: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_parsing() {
        assert_eq!("64x48".parse::<Size>().unwrap(), Size { width: 64, height: 48 });
        assert!("64".parse::<Size>().is_err());
        assert!("0x4".parse::<Size>().is_err());
        assert!("ax4".parse::<Size>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
