//! Baseline fitting, prediction and scoring over exported sample records.

use std::collections::BTreeMap;

use bevscene_core::{
    aggregate, persistence_predict, score, splice, CellFrequencyModel, GridSpec, LabelSet,
    MetricsReport, PairSide, ParseMode, SceneCodec, SpanTargets, TokenSequence,
};

use crate::dataset::SampleRecord;
use crate::error::{Error, Result};

/// Fits the majority model on the unmasked matrices of training samples. Next
/// scenes of next-scene samples only carry their central cells; the blanked
/// margin is counted as empty, which never affects central predictions.
pub fn fit_majority(records: &[SampleRecord], codec: &SceneCodec<'_>, grid: &GridSpec) -> Result<CellFrequencyModel> {
    let mut model = CellFrequencyModel::new(*grid);
    if records.is_empty() {
        return Err(bevscene_core::BaselineError::EmptyTrainingSplit.into());
    }
    for r in records {
        let full = splice(&r.input_tokens()?, &r.target_tokens()?)?;
        let pair = codec.parse_sequence(&full, grid)?;
        model.observe(&pair.current.matrix)?;
        model.observe(&pair.next.matrix)?;
    }
    Ok(model)
}

pub fn predict_majority(
    model: &CellFrequencyModel,
    records: &[SampleRecord],
    codec: &SceneCodec<'_>,
) -> Result<Vec<(String, String)>> {
    records
        .iter()
        .map(|r| {
            let spans = model.predict(&r.plan, codec.taxonomy())?;
            Ok((r.sample_id.clone(), codec.render_targets(&spans)?.to_string()))
        })
        .collect()
}

/// Persistence over the visible current scene. Cells of the current scene
/// that are themselves masked cannot be carried forward and are predicted empty.
pub fn predict_persistence(
    records: &[SampleRecord],
    codec: &SceneCodec<'_>,
    grid: &GridSpec,
) -> Result<Vec<(String, String)>> {
    records
        .iter()
        .map(|r| {
            let decoded = codec.parse_sequence(&r.input_tokens()?, grid)?;
            let next = persistence_predict(&decoded.current.matrix, &decoded.meta, grid, codec.taxonomy());
            let spans = r
                .plan
                .slots()
                .map(|(side, cell)| match side {
                    PairSide::Current => LabelSet::new(),
                    PairSide::Next => next.get(cell).clone(),
                })
                .collect();
            Ok((r.sample_id.clone(), codec.render_targets(&SpanTargets::new(spans))?.to_string()))
        })
        .collect()
}

/// Scores predictions against the gold targets of `records`, matched by
/// sample id. In lenient mode an unreadable prediction counts as all-empty
/// spans and predictions for unknown samples are ignored; strict mode rejects both.
pub fn score_predictions(
    records: &[SampleRecord],
    predictions: &BTreeMap<String, String>,
    codec: &SceneCodec<'_>,
    mode: ParseMode,
) -> Result<MetricsReport> {
    let strict = mode == ParseMode::Strict;
    let known: std::collections::BTreeSet<&str> = records.iter().map(|r| r.sample_id.as_str()).collect();
    let extra: Vec<&String> = predictions.keys().filter(|k| !known.contains(k.as_str())).collect();
    if let Some(first) = extra.first() {
        if strict {
            return Err(Error::Invalid(format!("prediction for unknown sample {first:?}")));
        }
        log::warn!("ignoring {} predictions for unknown samples", extra.len());
    }
    let mut reports = Vec::with_capacity(records.len());
    let mut truncated = 0;
    for r in records {
        let n = r.plan.sentinel_count();
        let gold = codec.parse_targets(&r.target_tokens()?, n, ParseMode::Strict)?.targets;
        let text = predictions
            .get(&r.sample_id)
            .ok_or_else(|| Error::Invalid(format!("no prediction for sample {:?}", r.sample_id)))?;
        let parsed = TokenSequence::parse_text(text).and_then(|t| codec.parse_targets(&t, n, mode));
        let pred = match parsed {
            Ok(p) => {
                truncated += usize::from(p.truncated);
                p.targets
            }
            Err(e) if !strict => {
                log::warn!("sample {}: unreadable prediction ({e}), scoring as empty", r.sample_id);
                truncated += 1;
                SpanTargets::new(vec![LabelSet::new(); n])
            }
            Err(e) => return Err(Error::Invalid(format!("sample {}: {e}", r.sample_id))),
        };
        reports.push(score(&pred, &gold, codec.taxonomy())?);
    }
    if truncated > 0 {
        log::warn!("{truncated} predictions were truncated or unreadable");
    }
    Ok(aggregate(&reports)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_pairs, mask_pairs};
    use bevscene_core::{synth_sequences, MaskTask, SynthConfig, TaskBuilder, Taxonomy};

    fn samples(task: MaskTask) -> (Taxonomy, Vec<SampleRecord>) {
        let t = Taxonomy::default();
        let cfg = SynthConfig { sequences: 2, frames_per_sequence: 6, seed: 2, ..Default::default() };
        let scenes = synth_sequences(&cfg, &t).unwrap().into_iter().flat_map(|s| s.scenes).collect();
        let grid = GridSpec::DEFAULT_20X11;
        let seqs = build_pairs(scenes, &grid, &t).unwrap();
        let builder = TaskBuilder::new(&t, grid).unwrap();
        let pairs: Vec<_> = seqs.iter().flat_map(|s| &s.pairs).collect();
        let recs = mask_pairs(&builder, pairs, task, 0, 0).unwrap();
        (t, recs)
    }

    #[test]
    fn gold_scores_perfectly() {
        let (t, recs) = samples(MaskTask::SceneObject);
        let codec = SceneCodec::new(&t);
        let gold: BTreeMap<String, String> = recs.iter().map(|r| (r.sample_id.clone(), r.target.clone())).collect();
        let report = score_predictions(&recs, &gold, &codec, ParseMode::Strict).unwrap();
        assert_eq!(report.accuracy(), 1.0);
        assert_eq!(report.cells, 6 * recs.len() as u64);
    }

    #[test]
    fn garbage_is_lenient_only() {
        let (t, recs) = samples(MaskTask::SceneObject);
        let codec = SceneCodec::new(&t);
        let preds: BTreeMap<String, String> = recs.iter().map(|r| (r.sample_id.clone(), "car car".into())).collect();
        assert!(score_predictions(&recs, &preds, &codec, ParseMode::Lenient).is_ok());
        assert!(score_predictions(&recs, &preds, &codec, ParseMode::Strict).is_err());
        assert!(score_predictions(&recs, &BTreeMap::new(), &codec, ParseMode::Lenient).is_err());
    }

    #[test]
    fn baselines_produce_scorable_predictions() {
        for task in [MaskTask::SceneObject, MaskTask::NextScene] {
            let (t, recs) = samples(task);
            let codec = SceneCodec::new(&t);
            let grid = GridSpec::DEFAULT_20X11;
            let model = fit_majority(&recs, &codec, &grid).unwrap();
            for preds in [
                predict_majority(&model, &recs, &codec).unwrap(),
                predict_persistence(&recs, &codec, &grid).unwrap(),
            ] {
                let preds: BTreeMap<_, _> = preds.into_iter().collect();
                let r = score_predictions(&recs, &preds, &codec, ParseMode::Strict).unwrap();
                assert!(r.accuracy() > 0.3, "{task}: {}", r.accuracy());
            }
        }
    }
}
