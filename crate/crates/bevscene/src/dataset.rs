//! Pair building, masked-sample records and split export.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bevscene_core::{
    link_sequence, sequence_pairs, split, GridSpec, MaskPlan, MaskTask, MaskedSample, Scene,
    ScenePair, SplitSpec, TaskBuilder, Taxonomy, TokenSequence,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

/// Scenes grouped by `sequence_id`, each sequence linked and turned into
/// consecutive pairs. Sequences come back sorted by id.
pub fn build_pairs(scenes: Vec<Scene>, grid: &GridSpec, taxonomy: &Taxonomy) -> Result<Vec<SequencePairs>> {
    let mut by_sequence: BTreeMap<String, Vec<Scene>> = BTreeMap::new();
    for scene in scenes {
        by_sequence.entry(scene.sequence_id.clone()).or_default().push(scene);
    }
    by_sequence
        .into_iter()
        .map(|(id, scenes)| {
            let linked = link_sequence(scenes)?;
            Ok(SequencePairs { id, pairs: sequence_pairs(&linked, grid, taxonomy)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePairs {
    pub id: String,
    pub pairs: Vec<ScenePair>,
}

/// One exported sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub sample_id: String,
    pub pair_id: String,
    pub current_id: String,
    pub next_id: String,
    pub task: MaskTask,
    pub epoch: u64,
    pub input: String,
    pub target: String,
    pub plan: MaskPlan,
}

pub fn sample_id(pair_id: &str, task: MaskTask, epoch: u64) -> String {
    format!("{pair_id}/{task}/{epoch}")
}

impl SampleRecord {
    pub fn new(sample: MaskedSample, epoch: u64) -> Self {
        SampleRecord {
            sample_id: sample_id(&sample.pair_id, sample.plan.task, epoch),
            pair_id: sample.pair_id,
            current_id: sample.current_id,
            next_id: sample.next_id,
            task: sample.plan.task,
            epoch,
            input: sample.input.to_string(),
            target: sample.target.to_string(),
            plan: sample.plan,
        }
    }

    pub fn input_tokens(&self) -> Result<TokenSequence> {
        Ok(self.input.parse()?)
    }

    pub fn target_tokens(&self) -> Result<TokenSequence> {
        Ok(self.target.parse()?)
    }
}

/// Masks every pair for one epoch. Scene-object plans are seeded per pair
/// from `(seed, epoch, pair id)`; next-scene samples do not depend on either.
pub fn mask_pairs<'a>(
    builder: &TaskBuilder<'_>,
    pairs: impl IntoIterator<Item = &'a ScenePair>,
    task: MaskTask,
    seed: u64,
    epoch: u64,
) -> Result<Vec<SampleRecord>> {
    pairs
        .into_iter()
        .map(|pair| {
            let sample = match task {
                MaskTask::SceneObject => {
                    builder.scene_object(pair, bevscene_core::derive_seed(seed, epoch, &pair.id))?
                }
                MaskTask::NextScene => builder.next_scene(pair)?,
            };
            Ok(SampleRecord::new(sample, epoch))
        })
        .collect()
}

pub fn write_samples(path: &Path, samples: &[SampleRecord]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path).at(path)?);
    for s in samples {
        writeln!(out, "{}", serde_json::to_string(s).expect("records serialize")).at(path)?;
    }
    out.flush().at(path)
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = fs::File::open(path).at(path)?;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::Line { path: path.into(), line: i + 1, msg: e.to_string() })?;
        samples.push(record);
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportOptions {
    pub task: MaskTask,
    pub seed: u64,
    /// Re-masked copies of the training split; only scene-object samples vary.
    pub epochs: u64,
    pub split: SplitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub task: MaskTask,
    pub grid: GridSpec,
    pub taxonomy_fingerprint: String,
    pub seed: u64,
    pub epochs: u64,
    pub split: SplitSpec,
    /// Sequence ids per split.
    pub sequences: BTreeMap<String, Vec<String>>,
    /// Sample counts per written file.
    pub files: BTreeMap<String, usize>,
}

pub const MANIFEST_VERSION: u32 = 1;

/// Splits sequences, masks each split and writes `train.jsonl`, `val.jsonl`,
/// `test.jsonl`, one `train.epoch-<k>.jsonl` per extra epoch and
/// `manifest.json` into `dir`.
pub fn export(
    dir: &Path,
    sequences: Vec<SequencePairs>,
    builder: &TaskBuilder<'_>,
    options: &ExportOptions,
) -> Result<Manifest> {
    fs::create_dir_all(dir).at(dir)?;
    let parts = split(sequences, &options.split)?;
    let mut manifest = Manifest {
        version: MANIFEST_VERSION,
        task: options.task,
        grid: *builder.grid(),
        taxonomy_fingerprint: builder.codec().taxonomy().fingerprint(),
        seed: options.seed,
        epochs: options.epochs,
        split: options.split,
        sequences: BTreeMap::new(),
        files: BTreeMap::new(),
    };
    let epochs = match options.task {
        MaskTask::SceneObject => options.epochs.max(1),
        MaskTask::NextScene => 1,
    };
    for (name, seqs) in [("train", &parts.train), ("val", &parts.val), ("test", &parts.test)] {
        let mut ids: Vec<String> = seqs.iter().map(|s| s.id.clone()).collect();
        ids.sort();
        manifest.sequences.insert(name.into(), ids);
        // stable order regardless of the shuffle
        let mut ordered: Vec<&SequencePairs> = seqs.iter().collect();
        ordered.sort_by(|a, b| a.id.cmp(&b.id));
        let pairs = || ordered.iter().flat_map(|s| &s.pairs);
        let count = if name == "train" { epochs } else { 1 };
        for epoch in 0..count {
            let file = if epoch == 0 { format!("{name}.jsonl") } else { format!("{name}.epoch-{epoch}.jsonl") };
            let samples = mask_pairs(builder, pairs(), options.task, options.seed, epoch)?;
            write_samples(&dir.join(&file), &samples)?;
            manifest.files.insert(file, samples.len());
        }
    }
    let path: PathBuf = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").at(&path)?;
    Ok(manifest)
}
