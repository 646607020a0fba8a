//! Command-line interface. Exit codes: 0 success, 2 usage, 3 solver did not
//! converge, 4 data error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use sketchforge_core::handdraw::{rasterize, render_variants, simulate_hand_drawing, NoiseConfig, RasterImage};
use sketchforge_core::pipeline::synth::{synthetic_corpus, SynthFamily};
use sketchforge_core::pipeline::{
    compression_baseline, distributional_stats, evaluate_nll, ingest_and_filter, train_items, uniform_baseline,
    DatasetManifest, IngestOptions, Split, DEFAULT_RENDERS,
};
use sketchforge_core::seqmodel::{
    generate, load_checkpoint, loss_csv, save_checkpoint, train, Context, Example, ModelConfig, ModelKind, NextTokenModel,
    SamplerConfig, Stream, TrainConfig,
};
use sketchforge_core::sketch::{normalize_sketch, Sketch};
use sketchforge_core::solver::{solve, SolveOptions};
use sketchforge_core::tokenizer::{encode_constraints, encode_primitives, write_dump, StreamKind};
use sketchforge_core::Model32;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGENT: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver did not converge (max violation {0:e})")]
    NonConvergent(f64),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::NonConvergent(_) => EXIT_NONCONVERGENT,
            Self::Data(_) => EXIT_DATA,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "sketchforge", version, about = "CAD sketch modelling toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a sketch's constraints.
    Solve {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        violation_tol: f64,
    },
    /// Print the token streams of a sketch.
    Tokenize {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = StreamArg::Primitive)]
        stream: StreamArg,
    },
    /// Rasterize a sketch to a PNG.
    Render {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Simulate a hand drawing instead of a clean raster.
        #[arg(long)]
        hand: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write several hand-drawn renders of a sketch.
    Simulate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RENDERS)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a model.
    Train(TrainArgs),
    /// Sample sketches from a model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        nucleus_p: Option<f64>,
        /// Sketch whose leading primitives prime the sample.
        #[arg(long)]
        primer: Option<PathBuf>,
        #[arg(long, default_value_t = 0.6)]
        keep: f64,
        /// PNG conditioning image for image-conditional models.
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Per-sketch negative log-likelihood in bits.
    Score {
        #[arg(long)]
        model: PathBuf,
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a model on a split; prints CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Per-position NLL curve as CSV.
        #[arg(long)]
        per_position: Option<PathBuf>,
    },
    /// Filter, dedup and split a directory of sketches.
    Ingest {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Count and DOF histograms of samples against a reference collection.
    Stats {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Uniform and LZMA baselines for a split; prints CSV.
    Baseline {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = StreamArg::Primitive)]
        stream: StreamArg,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "SKETCHFORGE_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of `<name>.ckpt` files.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StreamArg {
    Primitive,
    Constraint,
}

impl From<StreamArg> for Stream {
    fn from(s: StreamArg) -> Self {
        match s {
            StreamArg::Primitive => Stream::Primitive,
            StreamArg::Constraint => Stream::Constraint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Primitive,
    Constraint,
    ImageConditional,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Primitive => ModelKind::Primitive,
            KindArg::Constraint => ModelKind::Constraint,
            KindArg::ImageConditional => ModelKind::ImageConditional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SizeArg {
    Tiny,
    Desk,
    Reference,
}

/// Where sketches come from: a manifest split, an ingested directory, or
/// the synthetic generator.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, conflicts_with_all = ["data", "synthetic"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// rectangles, slotted_plate, bolt_circle or mixed.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value = "test", value_parser = ["train", "val", "test"])]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<Vec<Sketch<f64>>, CliError> {
        let split = Split::from_name(&self.split).ok_or_else(|| CliError::Usage(format!("unknown split `{}`", self.split)))?;
        if let Some(m) = &self.manifest {
            let m = DatasetManifest::from_json(&fs::read_to_string(m).map_err(data)?).map_err(data)?;
            return m.load(split).map_err(data);
        }
        if let Some(d) = &self.data {
            let m = ingest_and_filter(d, &IngestOptions { seed: self.seed, ..IngestOptions::default() }).map_err(data)?;
            return m.load(split).map_err(data);
        }
        let name = self.synthetic.as_deref().unwrap_or("mixed");
        let family = SynthFamily::from_name(name).ok_or_else(|| CliError::Usage(format!("unknown synthetic family `{name}`")))?;
        Ok(synthetic_corpus(family, self.count, self.seed))
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Primitive)]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value_t = SizeArg::Desk)]
    pub size: SizeArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// Peak learning rate at batch size 128.
    #[arg(long, default_value_t = 3e-5)]
    pub base_lr: f64,
    #[arg(long, default_value_t = 0.01)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = DEFAULT_RENDERS)]
    pub renders: usize,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

fn read_sketch(path: &Path) -> Result<Sketch<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    Sketch::from_json(&text).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<Model32, CliError> {
    let f = fs::File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    load_checkpoint(std::io::BufReader::new(f)).map_err(data)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(data)?;
    }
    fs::write(path, bytes).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn normalized(s: &Sketch<f64>) -> Result<Sketch<f64>, CliError> {
    Ok(normalize_sketch(s).map_err(data)?.0)
}

/// Examples for evaluation; image-conditional models get one seeded
/// hand-drawn render per sketch.
fn examples_for(model: &Model32, sketches: &[Sketch<f64>], seed: u64) -> Result<Vec<Example>, CliError> {
    let renders = if model.kind() == ModelKind::ImageConditional { 1 } else { 0 };
    let items = train_items(sketches, renders, &NoiseConfig { seed, ..NoiseConfig::default() }).map_err(data)?;
    Ok(items
        .into_iter()
        .map(|it| {
            let mut ex = it.example;
            if let Some(img) = it.renders.first() {
                ex.patches = sketchforge_core::handdraw::patchify(img).ok();
            }
            ex
        })
        .collect())
}

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out`. Returns the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = e.print();
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| data(e);
    match cmd {
        Command::Solve { input, output, max_iter, violation_tol } => {
            let s = read_sketch(&input)?;
            let opts = SolveOptions { max_iter, violation_tol, ..SolveOptions::default() };
            let (solved, report) = solve(&s, &opts).map_err(data)?;
            let body = serde_json::json!({ "sketch": solved, "report": report });
            let text = serde_json::to_string_pretty(&body).expect("serializable");
            match output {
                Some(p) => write_file(&p, text.as_bytes())?,
                None => writeln!(out, "{text}").map_err(io)?,
            }
            if !report.converged {
                return Err(CliError::NonConvergent(report.max_constraint_violation));
            }
        }
        Command::Tokenize { input, stream } => {
            let s = normalized(&read_sketch(&input)?)?;
            let text = match stream {
                StreamArg::Primitive => write_dump(StreamKind::Primitive, &encode_primitives(&s).map_err(data)?),
                StreamArg::Constraint => write_dump(StreamKind::Constraint, &encode_constraints(&s).map_err(data)?),
            };
            write!(out, "{text}").map_err(io)?;
        }
        Command::Render { input, output, hand, seed } => {
            let s = normalized(&read_sketch(&input)?)?;
            let img = if hand {
                simulate_hand_drawing(&s, &NoiseConfig { seed, ..NoiseConfig::default() }).map_err(data)?
            } else {
                rasterize(&s)
            };
            write_file(&output, &img.to_png().map_err(data)?)?;
        }
        Command::Simulate { input, output, count, seed } => {
            let s = normalized(&read_sketch(&input)?)?;
            let imgs = render_variants(&s, &NoiseConfig { seed, ..NoiseConfig::default() }, count).map_err(data)?;
            for (i, img) in imgs.iter().enumerate() {
                write_file(&output.join(format!("render_{i:02}.png")), &img.to_png().map_err(data)?)?;
            }
        }
        Command::Train(a) => {
            let kind: ModelKind = a.kind.into();
            let config = match a.size {
                SizeArg::Tiny => ModelConfig::tiny(kind),
                SizeArg::Desk => ModelConfig::desk(kind),
                SizeArg::Reference => ModelConfig::reference(kind),
            };
            let config = ModelConfig { init_seed: a.data.seed, ..config };
            let mut src = a.data.clone();
            if src.manifest.is_some() || src.data.is_some() {
                src.split = "train".into();
            }
            let sketches = src.load()?;
            let renders = if kind == ModelKind::ImageConditional { a.renders } else { 0 };
            let items = train_items(&sketches, renders, &NoiseConfig { seed: a.data.seed, ..NoiseConfig::default() }).map_err(data)?;
            let cfg = TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch_size,
                base_lr: a.base_lr,
                noise_sigma: a.noise_sigma,
                seed: a.data.seed,
                ..TrainConfig::default()
            };
            let outcome = train::<f32>(config, &items, &cfg).map_err(|e| match e {
                sketchforge_core::seqmodel::ModelError::Config(m) => CliError::Usage(m),
                e => data(e),
            })?;
            let mut buf = Vec::new();
            save_checkpoint(&outcome.model, &mut buf).map_err(data)?;
            write_file(&a.output, &buf)?;
            if let Some(p) = a.loss_csv {
                write_file(&p, loss_csv(&outcome.losses).as_bytes())?;
            }
            if let Some(last) = outcome.losses.last() {
                writeln!(out, "trained {} steps; final loss {:.4} nats/token", outcome.losses.len(), last.loss).map_err(io)?;
            }
        }
        Command::Sample { model, count, seed, nucleus_p, primer, keep, image } => {
            let m = read_model(&model)?;
            let context = match (primer, image) {
                (Some(p), None) => {
                    let s = read_sketch(&p)?;
                    crate::routes::primer_from_sketch(&s, keep).map(Context::Primer).map_err(|e| data(e.message))?
                }
                (None, Some(i)) => Context::Image(RasterImage::from_png(&fs::read(&i).map_err(io)?).map_err(data)?),
                (None, None) => Context::None,
                (Some(_), Some(_)) => return Err(CliError::Usage("give --primer or --image, not both".into())),
            };
            for i in 0..count as u64 {
                let mut cfg = SamplerConfig::primitives(seed.wrapping_add(i));
                if let Some(p) = nucleus_p {
                    cfg.nucleus_p = p;
                }
                let g = generate(&m, &context, &cfg).map_err(|e| match e {
                    sketchforge_core::seqmodel::ModelError::ContextMismatch(_) => CliError::Usage(e.to_string()),
                    e => data(e),
                })?;
                let line = serde_json::json!({ "sketch": g.sketch, "error": g.error, "tokens": g.tokens.len() });
                writeln!(out, "{line}").map_err(io)?;
            }
        }
        Command::Score { model, inputs, seed } => {
            let m = read_model(&model)?;
            let sketches = inputs.iter().map(|p| read_sketch(p).and_then(|s| normalized(&s))).collect::<Result<Vec<_>, _>>()?;
            let examples = examples_for(&m, &sketches, seed)?;
            writeln!(out, "file,bits").map_err(io)?;
            for (p, ex) in inputs.iter().zip(&examples) {
                let r = evaluate_nll(&m as &dyn NextTokenModel, std::slice::from_ref(ex)).map_err(data)?;
                writeln!(out, "{},{}", p.display(), r.bits_per_sketch).map_err(io)?;
            }
        }
        Command::Eval { model, data: src, per_position } => {
            let m = read_model(&model)?;
            let examples = examples_for(&m, &src.load()?, src.seed)?;
            let r = evaluate_nll(&m, &examples).map_err(data)?;
            writeln!(out, "bits_per_primitive,bits_per_sketch,accuracy,bits_per_token,sketches").map_err(io)?;
            writeln!(out, "{},{},{},{},{}", r.bits_per_primitive, r.bits_per_sketch, r.token_accuracy, r.bits_per_token, r.sketches)
                .map_err(io)?;
            if let Some(p) = per_position {
                write_file(&p, r.per_position_csv().as_bytes())?;
            }
        }
        Command::Ingest { dir, output, seed } => {
            let m = ingest_and_filter(&dir, &IngestOptions { seed, ..IngestOptions::default() }).map_err(data)?;
            write_file(&output, m.to_json().as_bytes())?;
            let [tr, va, te] = m.counts();
            writeln!(out, "kept {} (train {tr}, val {va}, test {te}); dropped {}; errors {}", m.entries.len(), m.dropped.len(), m.errors.len())
                .map_err(io)?;
        }
        Command::Stats { samples, reference, csv, svg, resamples, seed } => {
            let load = |p: &Path| -> Result<Vec<Sketch<f64>>, CliError> {
                if p.is_dir() {
                    let m = ingest_and_filter(
                        p,
                        &IngestOptions {
                            filter: sketchforge_core::pipeline::FilterConfig {
                                min_primitives: 0,
                                max_primitives: usize::MAX,
                                require_constraints: false,
                                ..Default::default()
                            },
                            ..IngestOptions::default()
                        },
                    )
                    .map_err(data)?;
                    m.entries.iter().map(|e| read_sketch(&e.path)).collect()
                } else {
                    let m = DatasetManifest::from_json(&fs::read_to_string(p).map_err(io)?).map_err(data)?;
                    m.entries.iter().map(|e| read_sketch(&e.path)).collect()
                }
            };
            let st = distributional_stats(&load(&samples)?, &load(&reference)?, resamples, seed).map_err(data)?;
            write_file(&csv, st.to_csv().as_bytes())?;
            if let Some(p) = svg {
                write_file(&p, st.to_svg().as_bytes())?;
            }
        }
        Command::Baseline { data: src, stream } => {
            let examples = src.load()?.iter().map(Example::from_sketch).collect::<Result<Vec<_>, _>>().map_err(data)?;
            let u = uniform_baseline(stream.into(), &examples).map_err(data)?;
            let c = compression_baseline(stream.into(), &examples).map_err(data)?;
            writeln!(out, "baseline,bits_per_primitive,bits_per_sketch").map_err(io)?;
            writeln!(out, "uniform,{},{}", u.bits_per_primitive, u.bits_per_sketch).map_err(io)?;
            writeln!(out, "lzma,{},{}", c.bits_per_primitive, c.bits_per_sketch).map_err(io)?;
        }
        Command::Serve { port, host, checkpoints } => {
            let rt = tokio::runtime::Runtime::new().map_err(io)?;
            rt.block_on(crate::serve(&host, port, checkpoints)).map_err(io)?;
        }
    }
    Ok(())
}
