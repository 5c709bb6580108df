//! Command-line front end.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use bevscene_core::{
    rasterize, synth_sequences, GridSpec, MaskTask, ParseMode, SceneCodec, SplitSpec, TaskBuilder,
    Taxonomy,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{load_grid, load_synth_config, load_taxonomy};
use crate::dataset::{build_pairs, export, mask_pairs, read_samples, ExportOptions};
use crate::error::{Error, IoContext, Result};
use crate::model::{load_model, save_model};
use crate::pipeline::{fit_majority, predict_majority, predict_persistence, score_predictions};
use crate::predictions::{read_predictions, write_predictions};
use crate::records::{read_scenes, write_scenes};

#[derive(Debug, Parser)]
#[command(name = "bevscene", version, about = "BEV scene grids, token codec, masked tasks and scoring")]
pub struct Cli {
    /// Grid preset (default-20x11, ablation-8x5) or TOML file.
    #[arg(long, global = true, default_value = "default-20x11")]
    pub grid: String,
    /// Taxonomy file (`label<TAB>static|dynamic` per line); built-in by default.
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,
    /// Reject unknown record fields and malformed predictions.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene corpus.
    Synth(SynthArgs),
    /// Dump the area matrix of every scene.
    Rasterize(InOut),
    /// Serialize every consecutive scene pair.
    Encode(InOut),
    /// Build masked samples for one epoch.
    Mask(MaskArgs),
    /// Split by sequence and write train/val/test samples plus a manifest.
    Export(ExportArgs),
    /// Predict the masked spans of a sample file with a reference baseline.
    Baseline(BaselineArgs),
    /// Score a predictions file against gold samples.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Generator config (TOML); defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sequences: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InOut {
    /// Scene-record file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[command(flatten)]
    pub io: InOut,
    #[arg(long, value_parser = parse_task)]
    pub task: MaskTask,
    /// Required for scene-object masking.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Scene-record file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_task)]
    pub task: MaskTask,
    #[arg(long)]
    pub seed: u64,
    /// Train/val/test ratios.
    #[arg(long, default_value = "0.8,0.1,0.1", value_parser = parse_ratios)]
    pub split: (f64, f64, f64),
    /// Seed of the sequence shuffle; defaults to --seed.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Re-masked copies of the training split.
    #[arg(long, default_value_t = 1)]
    pub epochs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Majority,
    Persistence,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub method: Method,
    /// Samples to predict.
    #[arg(long)]
    pub input: PathBuf,
    /// Training samples for the majority model.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Load a saved majority model instead of fitting one.
    #[arg(long, conflicts_with = "train")]
    pub model: Option<PathBuf>,
    /// Save the fitted majority model.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Predictions file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold sample file.
    #[arg(long)]
    pub gold: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_task(s: &str) -> Result<MaskTask, String> {
    s.parse()
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err("expected three comma-separated ratios".into()),
    }
}

/// How a run failed; usage errors exit with 2, data errors with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage: {msg}"),
            Failure::Data(e) => write!(f, "{e}"),
        }
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{} does not exist", path.display())))
    }
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).at(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: Box<dyn Write>, out: Option<&Path>) -> Result<()> {
    w.flush().at(out.unwrap_or(Path::new("<stdout>")))
}

#[derive(Serialize)]
struct MatrixDump<'a> {
    scene_id: &'a str,
    rows: usize,
    cols: usize,
    cells: Vec<Vec<Vec<&'a str>>>,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = &cli.taxonomy {
        require_file(t)?;
    }
    if GridSpec::preset(&cli.grid).is_err() && !Path::new(&cli.grid).is_file() {
        return Err(Failure::Usage(format!("--grid {:?} is neither a preset nor a file", cli.grid)));
    }
    let taxonomy = load_taxonomy(cli.taxonomy.as_deref())?;
    let grid = load_grid(&cli.grid)?;
    let ctx = Ctx { taxonomy: &taxonomy, grid, strict: cli.strict };
    match cli.command {
        Command::Synth(a) => ctx.synth(a),
        Command::Rasterize(a) => ctx.rasterize(a),
        Command::Encode(a) => ctx.encode(a),
        Command::Mask(a) => ctx.mask(a),
        Command::Export(a) => ctx.export(a),
        Command::Baseline(a) => ctx.baseline(a),
        Command::Score(a) => ctx.score(a),
    }
}

struct Ctx<'t> {
    taxonomy: &'t Taxonomy,
    grid: GridSpec,
    strict: bool,
}

impl<'t> Ctx<'t> {
    fn codec(&self) -> SceneCodec<'t> {
        SceneCodec::new(self.taxonomy)
    }

    fn builder(&self) -> Result<TaskBuilder<'t>> {
        Ok(TaskBuilder::new(self.taxonomy, self.grid)?)
    }

    fn synth(&self, a: SynthArgs) -> Result<(), Failure> {
        if let Some(c) = &a.config {
            require_file(c)?;
        }
        let mut cfg = load_synth_config(a.config.as_deref())?;
        cfg.seed = a.seed;
        if let Some(n) = a.sequences {
            cfg.sequences = n;
        }
        if let Some(n) = a.frames {
            cfg.frames_per_sequence = n;
        }
        let sequences = synth_sequences(&cfg, self.taxonomy).map_err(Error::from)?;
        fs::create_dir_all(&a.out).at(&a.out)?;
        write_scenes(&a.out.join("scenes.jsonl"), sequences.iter().flat_map(|s| &s.scenes))?;
        let path = a.out.join("synth.toml");
        let text = toml::to_string(&cfg).map_err(|e| Error::Invalid(e.to_string()))?;
        fs::write(&path, text).at(&path)?;
        let scenes: usize = sequences.iter().map(|s| s.scenes.len()).sum();
        log::info!("wrote {} sequences, {scenes} scenes to {}", sequences.len(), a.out.display());
        Ok(())
    }

    fn rasterize(&self, a: InOut) -> Result<(), Failure> {
        require_file(&a.input)?;
        let scenes = read_scenes(&a.input, self.taxonomy, self.strict)?;
        let mut w = writer(a.out.as_deref())?;
        for scene in &scenes {
            let m = rasterize(scene, &self.grid, self.taxonomy).map_err(|e| Error::Invalid(e.to_string()))?;
            let cells = (1..=self.grid.rows)
                .map(|row| {
                    (1..=self.grid.cols)
                        .map(|col| m.get(bevscene_core::CellIndex::new(row, col)).names(self.taxonomy))
                        .collect()
                })
                .collect();
            let dump = MatrixDump { scene_id: &scene.scene_id, rows: self.grid.rows, cols: self.grid.cols, cells };
            writeln!(w, "{}", serde_json::to_string(&dump).expect("dump serializes"))
                .at(a.out.clone().unwrap_or_default())?;
        }
        Ok(finish(w, a.out.as_deref())?)
    }

    fn encode(&self, a: InOut) -> Result<(), Failure> {
        require_file(&a.input)?;
        let scenes = read_scenes(&a.input, self.taxonomy, self.strict)?;
        let codec = self.codec();
        let mut w = writer(a.out.as_deref())?;
        for seq in build_pairs(scenes, &self.grid, self.taxonomy)? {
            for pair in &seq.pairs {
                let tokens = codec.serialize_pair(&pair.current, &pair.next, &pair.meta).map_err(Error::from)?;
                writeln!(w, "{}\t{tokens}", pair.id).at(a.out.clone().unwrap_or_default())?;
            }
        }
        Ok(finish(w, a.out.as_deref())?)
    }

    fn mask(&self, a: MaskArgs) -> Result<(), Failure> {
        require_file(&a.io.input)?;
        let seed = match (a.task, a.seed) {
            (_, Some(s)) => s,
            (MaskTask::NextScene, None) => 0,
            (MaskTask::SceneObject, None) => {
                return Err(Failure::Usage("--seed is required for scene-object masking".into()))
            }
        };
        let scenes = read_scenes(&a.io.input, self.taxonomy, self.strict)?;
        let seqs = build_pairs(scenes, &self.grid, self.taxonomy)?;
        let builder = self.builder()?;
        let samples = mask_pairs(&builder, seqs.iter().flat_map(|s| &s.pairs), a.task, seed, a.epoch)?;
        let mut w = writer(a.io.out.as_deref())?;
        for s in &samples {
            writeln!(w, "{}", serde_json::to_string(s).expect("records serialize"))
                .at(a.io.out.clone().unwrap_or_default())?;
        }
        Ok(finish(w, a.io.out.as_deref())?)
    }

    fn export(&self, a: ExportArgs) -> Result<(), Failure> {
        require_file(&a.input)?;
        let (train, val, test) = a.split;
        let split = SplitSpec { train, val, test, seed: a.split_seed.unwrap_or(a.seed) };
        split.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        let scenes = read_scenes(&a.input, self.taxonomy, self.strict)?;
        let seqs = build_pairs(scenes, &self.grid, self.taxonomy)?;
        let builder = self.builder()?;
        let options = ExportOptions { task: a.task, seed: a.seed, epochs: a.epochs, split };
        let manifest = export(&a.out, seqs, &builder, &options)?;
        for (file, n) in &manifest.files {
            log::info!("{file}: {n} samples");
        }
        Ok(())
    }

    fn baseline(&self, a: BaselineArgs) -> Result<(), Failure> {
        require_file(&a.input)?;
        let codec = self.codec();
        let records = read_samples(&a.input)?;
        let predictions = match a.method {
            Method::Majority => {
                let model = match (&a.model, &a.train) {
                    (Some(m), _) => {
                        require_file(m)?;
                        load_model(m, self.taxonomy)?
                    }
                    (None, Some(t)) => {
                        require_file(t)?;
                        fit_majority(&read_samples(t)?, &codec, &self.grid)?
                    }
                    (None, None) => {
                        return Err(Failure::Usage("majority needs --train or --model".into()))
                    }
                };
                if *model.grid() != self.grid {
                    return Err(Failure::Data(Error::Invalid("model grid differs from --grid".into())));
                }
                if let Some(p) = &a.save_model {
                    save_model(p, &model, self.taxonomy)?;
                }
                predict_majority(&model, &records, &codec)?
            }
            Method::Persistence => predict_persistence(&records, &codec, &self.grid)?,
        };
        match &a.out {
            Some(p) => write_predictions(p, predictions.iter().map(|(id, t)| (id.as_str(), t.clone())))?,
            None => {
                let mut w = writer(None)?;
                for (id, t) in &predictions {
                    writeln!(w, "{id}\t{t}").at("<stdout>")?;
                }
                finish(w, None)?;
            }
        }
        Ok(())
    }

    fn score(&self, a: ScoreArgs) -> Result<(), Failure> {
        require_file(&a.predictions)?;
        require_file(&a.gold)?;
        let mode = if self.strict { ParseMode::Strict } else { ParseMode::Lenient };
        let records = read_samples(&a.gold)?;
        let predictions = read_predictions(&a.predictions)?;
        let report = score_predictions(&records, &predictions, &self.codec(), mode)?;
        let mut w = writer(None)?;
        write!(w, "{report}").at("<stdout>")?;
        finish(w, None)?;
        if let Some(p) = &a.out {
            let json = serde_json::json!({
                "accuracy": report.accuracy(),
                "precision": report.precision(),
                "recall": report.recall(),
                "f1": report.f1(),
                "macro": report.macro_prf(),
                "report": report,
            });
            fs::write(p, serde_json::to_string_pretty(&json).expect("report serializes") + "\n").at(p)?;
        }
        Ok(())
    }
}
