use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand};
use waveplanes::codec::{
    bench_codec, compress_model, inspect, load_model, plane_stats, save_checkpoint, Backend, PlaneStats,
    DEFAULT_THRESHOLD,
};
use waveplanes::config::RunConfig;
use waveplanes::data::{evaluate, load_dnerf, Frame, Split};
use waveplanes::field::{refresh_cache, WaveletField};
use waveplanes::optim::{StepLog, Trainer};
use waveplanes::render::{look_at, render_image, Background, Camera, ColorBasisDecoder, RenderOptions};
use waveplanes::WavePlanesError;

#[derive(Parser)]
#[command(name = "waveplanes", version, about = "Wavelet feature planes for dynamic radiance fields")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "WAVEPLANE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides train.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides train.steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Overrides output.directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render PNG frames from a model.
    Render {
        #[arg(long)]
        model: PathBuf,
        /// Camera position as x,y,z.
        #[arg(long, value_parser = parse_vec3, default_value = "0,-4,1.5")]
        position: [f64; 3],
        /// Point the camera looks at, as x,y,z.
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
        target: [f64; 3],
        /// Horizontal field of view in radians.
        #[arg(long, default_value_t = 0.7)]
        fov: f64,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, value_parser = parse_background, default_value = "white")]
        background: Background,
        /// Render a single time; defaults to the start of the time range.
        #[arg(long, conflicts_with = "t_sweep")]
        time: Option<f64>,
        /// Render this many frames evenly spaced over the time range.
        #[arg(long)]
        t_sweep: Option<usize>,
        /// Zero all space-time coefficients first, leaving the static part.
        #[arg(long = "static")]
        static_only: bool,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 2.0)]
        near: f64,
        #[arg(long, default_value_t = 6.0)]
        far: f64,
        /// Directory for the frames.
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a model on a dataset split and write a JSON report.
    #[command(group(ArgGroup::new("source").required(true).args(["config", "dnerf"])))]
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Run configuration naming the dataset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// D-NeRF style dataset directory.
        #[arg(long)]
        dnerf: Option<PathBuf>,
        /// Background for --dnerf data.
        #[arg(long, value_parser = parse_background, default_value = "white")]
        background: Background,
        #[arg(long, value_parser = parse_split, default_value = "test")]
        split: Split,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 2.0)]
        near: f64,
        #[arg(long, default_value_t = 6.0)]
        far: f64,
        /// Foreground dilation radius in pixels.
        #[arg(long, default_value_t = 5)]
        radius: usize,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Threshold and compress a model.
    Compress {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        tau: f64,
        #[arg(long, value_parser = parse_backend, default_value = "lzma")]
        backend: Backend,
        #[arg(long)]
        output: PathBuf,
    },
    /// Expand a compressed model into a dense checkpoint.
    Decompress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compare compressed sizes across backends.
    BenchCodec {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        tau: f64,
        #[arg(long, value_parser = parse_backend, value_delimiter = ',', default_value = "raw,gzip,bzip2,lzma")]
        backends: Vec<Backend>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Print the header and configuration of a model file.
    Info {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(out)
}

fn parse_background(s: &str) -> std::result::Result<Background, String> {
    match s {
        "white" => Ok(Background::White),
        "black" => Ok(Background::Black),
        _ => Err(format!("unknown background {s:?} (white, black)")),
    }
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    Split::ALL
        .into_iter()
        .find(|sp| sp.name() == s)
        .ok_or_else(|| format!("unknown split {s:?} (train, val, test)"))
}

fn parse_backend(s: &str) -> std::result::Result<Backend, String> {
    s.parse().map_err(|e: WavePlanesError| e.to_string())
}

fn print_plane_table(stats: &[PlaneStats]) {
    println!("{:<6} {:>12} {:>10} {:>9}", "plane", "coefficients", "nonzero", "sparsity");
    for s in stats {
        println!("{:<6} {:>12} {:>10} {:>8.2}%", s.plane, s.coefficients, s.nonzero, 100.0 * s.sparsity);
    }
}

fn render_validation(dir: &Path, step: usize, trainer: &Trainer, frames: &[Frame], opts: &RenderOptions) -> Result<()> {
    let cache = refresh_cache(&trainer.field, step as u64)?;
    for (i, frame) in frames.iter().take(3).enumerate() {
        let img = render_image(&trainer.field, &cache, &trainer.decoder, &frame.camera, frame.time(), opts);
        img.save_png(&dir.join(format!("step_{step:06}_{i:03}.png")), false)?;
    }
    Ok(())
}

fn cmd_train(config: &Path, seed: Option<u64>, steps: Option<usize>, output: Option<PathBuf>) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    if let Some(steps) = steps {
        cfg.train.steps = steps;
    }
    if let Some(dir) = output {
        cfg.output.directory = dir;
    }
    let cfg = cfg.resolved()?;
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(dir.join("val")).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("resolved_config.json"), cfg.to_json())?;

    let data = cfg.load_dataset()?;
    if data.train.is_empty() {
        bail!(WavePlanesError::Config("training split is empty".into()));
    }
    let val: &[Frame] = if data.val.is_empty() { &data.test } else { &data.val };
    let opts = RenderOptions {
        samples_per_ray: cfg.train.samples_per_ray,
        near: cfg.train.near,
        far: cfg.train.far,
    };
    let mut log = BufWriter::new(File::create(dir.join("train_log.csv"))?);
    writeln!(log, "{}", StepLog::CSV_HEADER)?;
    let mut trainer = Trainer::new(cfg.model.clone(), cfg.train.clone())?;
    let val_every = cfg.output.val_every;
    let val_dir = dir.join("val");
    let total = cfg.train.steps;
    trainer.fit(&data.train, data.background.rgb(), |t, step| {
        writeln!(log, "{}", step.csv_row())?;
        if step.step % 100 == 0 || step.step == total {
            eprintln!("step {:>6}/{total}  mse {:.6}  total {:.6}", step.step, step.loss.mse, step.loss.total);
        }
        if val_every > 0 && step.step % val_every == 0 && !val.is_empty() {
            render_validation(&val_dir, step.step, t, val, &opts)
                .map_err(|e| WavePlanesError::Io(std::io::Error::other(e.to_string())))?;
        }
        Ok(())
    })?;
    log.flush()?;
    if !val.is_empty() && (val_every == 0 || trainer.step % val_every != 0) {
        render_validation(&val_dir, trainer.step, &trainer, val, &opts)?;
    }
    let ckpt = dir.join("model.wvck");
    save_checkpoint(&ckpt, &trainer.field, &trainer.decoder)?;
    println!("wrote {}", ckpt.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    model: &Path,
    position: [f64; 3],
    target: [f64; 3],
    fov: f64,
    (width, height): (usize, usize),
    background: Background,
    time: Option<f64>,
    t_sweep: Option<usize>,
    static_only: bool,
    opts: RenderOptions,
    output: &Path,
) -> Result<()> {
    let (mut field, decoder) = load_model(model)?;
    if static_only {
        field.zero_space_time();
    }
    let cam = Camera::from_fov(look_at(position, target), fov, width, height, background)?;
    let [t0, t1] = field.config.t_range;
    let times: Vec<f64> = match (time, t_sweep) {
        (_, Some(0)) => bail!(UsageError("--t-sweep needs at least one frame".into())),
        (_, Some(1)) => vec![t0],
        (_, Some(n)) => (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect(),
        (Some(t), None) => vec![t],
        (None, None) => vec![t0],
    };
    fs::create_dir_all(output)?;
    let cache = refresh_cache(&field, 0)?;
    for (i, t) in times.iter().enumerate() {
        let img = render_image(&field, &cache, &decoder, &cam, *t, &opts);
        let path = output.join(format!("frame_{i:03}.png"));
        img.save_png(&path, false)?;
        println!("t={t:.4} -> {}", path.display());
    }
    Ok(())
}

fn load_checked(path: &Path) -> Result<(WaveletField, ColorBasisDecoder)> {
    load_model(path).with_context(|| format!("loading {}", path.display()))
}

fn print_bench(rows: &[waveplanes::codec::BenchRow]) {
    println!("{:<7} {:>10} {:>10} {:>9}", "backend", "bytes", "vs raw", "lossless");
    for r in rows {
        println!("{:<7} {:>10} {:>9.2}x {:>9}", r.backend.name(), r.bytes, r.ratio_vs_raw, r.lossless);
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(UsageError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Train {
            config,
            seed,
            steps,
            output,
        } => cmd_train(&config, seed, steps, output),
        Command::Render {
            model,
            position,
            target,
            fov,
            width,
            height,
            background,
            time,
            t_sweep,
            static_only,
            samples,
            near,
            far,
            output,
        } => cmd_render(
            &model,
            position,
            target,
            fov,
            (width, height),
            background,
            time,
            t_sweep,
            static_only,
            RenderOptions {
                samples_per_ray: samples,
                near,
                far,
            },
            &output,
        ),
        Command::Eval {
            model,
            config,
            dnerf,
            background,
            split,
            samples,
            near,
            far,
            radius,
            output,
        } => {
            let (field, decoder) = load_checked(&model)?;
            let data = match (config, dnerf) {
                (Some(c), _) => RunConfig::load(&c)?.load_dataset()?,
                (None, Some(d)) => load_dnerf(&d, background)?,
                (None, None) => bail!(UsageError("either --config or --dnerf is required".into())),
            };
            let frames = data.split(split);
            if frames.is_empty() {
                bail!(WavePlanesError::Metric(format!("the {} split is empty", split.name())));
            }
            let opts = RenderOptions {
                samples_per_ray: samples,
                near,
                far,
            };
            let report = evaluate(&field, &decoder, frames, &opts, radius)?;
            let json = serde_json::to_string_pretty(&report)?;
            match output {
                Some(path) => {
                    fs::write(&path, json)?;
                    println!("psnr {:.3} dB -> {}", report.psnr_whole, path.display());
                }
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Compress {
            model,
            tau,
            backend,
            output,
        } => {
            let (field, decoder) = load_checked(&model)?;
            let bytes = compress_model(&field, &decoder, tau, backend)?;
            fs::write(&output, &bytes)?;
            print_plane_table(&plane_stats(&field, tau));
            println!("{} bytes ({backend}, tau {tau}) -> {}", bytes.len(), output.display());
            Ok(())
        }
        Command::Decompress { input, output } => {
            let (field, decoder) = load_checked(&input)?;
            save_checkpoint(&output, &field, &decoder)?;
            print_plane_table(&plane_stats(&field, 0.0));
            println!("wrote {}", output.display());
            Ok(())
        }
        Command::BenchCodec {
            model,
            tau,
            backends,
            json,
        } => {
            let (field, decoder) = load_checked(&model)?;
            let rows = bench_codec(&field, &decoder, tau, &backends)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                print_bench(&rows);
            }
            Ok(())
        }
        Command::Info { file, json } => {
            let bytes = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let info = inspect(&bytes)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&info)?);
            } else {
                println!("format     WVPL v{}", info.version);
                println!("backend    {}", info.backend);
                println!("file       {} bytes ({} payload)", info.file_bytes, info.payload_bytes);
                println!("decoder    {} parameters", info.decoder_params);
                println!("config     {}", serde_json::to_string(&info.config)?);
                print_plane_table(&info.planes);
            }
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
