//! Scenes, sequences and the metadata linking consecutive scenes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_diff, EgoPose};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("scene {scene}: label {label:?} is not in the taxonomy")]
    UnknownLabel { scene: String, label: String },
    #[error("scene {scene}: non-finite coordinate ({what})")]
    NonFiniteCoordinate { scene: String, what: String },
    #[error("scene {scene} belongs to sequence {found}, expected {expected}")]
    MixedSequences { scene: String, expected: String, found: String },
    #[error("scenes {first} and {second} share timestamp {timestamp_us}")]
    DuplicateTimestamp { first: String, second: String, timestamp_us: i64 },
    #[error("scene id {0} appears more than once")]
    DuplicateSceneId(String),
    #[error("broken chain at {scene}: {detail}")]
    BrokenChain { scene: String, detail: String },
    #[error("scene {next} does not directly follow {current}")]
    NotConsecutive { current: String, next: String },
    #[error("scenes {current} and {next} are in different countries")]
    CountryMismatch { current: String, next: String },
    #[error("empty sequence")]
    EmptySequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    /// Map-frame east, meters.
    pub x: f64,
    /// Map-frame north, meters.
    pub y: f64,
}

/// One timestamped frame of a driving sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: String,
    pub sequence_id: String,
    pub timestamp_us: i64,
    pub country: String,
    pub ego: EgoPose,
    pub objects: Vec<SceneObject>,
    pub prev: Option<String>,
    pub next: Option<String>,
}

impl Scene {
    /// Checks labels against the taxonomy and that all coordinates are finite.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), SceneError> {
        if !self.ego.is_valid() {
            return Err(SceneError::NonFiniteCoordinate {
                scene: self.scene_id.clone(),
                what: "ego".into(),
            });
        }
        for object in &self.objects {
            if !taxonomy.contains(&object.label) {
                return Err(SceneError::UnknownLabel {
                    scene: self.scene_id.clone(),
                    label: object.label.clone(),
                });
            }
            if !(object.x.is_finite() && object.y.is_finite()) {
                return Err(SceneError::NonFiniteCoordinate {
                    scene: self.scene_id.clone(),
                    what: alloc::format!("object {}", object.id),
                });
            }
        }
        Ok(())
    }
}

/// Country and ego motion between two consecutive scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub country: String,
    /// Distance between the two ego positions, meters.
    pub dist_m: f64,
    /// Heading change, degrees in `(-180, 180]`, positive counter-clockwise.
    pub orientation_diff_deg: f64,
}

impl PairMeta {
    /// Rounds to the precision the token grammar carries: one decimal for the
    /// distance, whole degrees for the orientation change.
    pub fn quantized(&self) -> PairMeta {
        PairMeta {
            country: self.country.clone(),
            dist_m: crate::codec::parse_number(&crate::codec::format_dist(self.dist_m))
                .unwrap_or(self.dist_m),
            orientation_diff_deg: crate::codec::round_orientation(self.orientation_diff_deg) as f64,
        }
    }
}

/// Metadata of the transition `current -> next`.
pub fn pair_metadata(current: &Scene, next: &Scene) -> Result<PairMeta, SceneError> {
    let linked = current.next.as_deref() == Some(next.scene_id.as_str())
        && next.prev.as_deref().is_none_or(|p| p == current.scene_id);
    if !linked {
        return Err(SceneError::NotConsecutive {
            current: current.scene_id.clone(),
            next: next.scene_id.clone(),
        });
    }
    if current.country != next.country {
        return Err(SceneError::CountryMismatch {
            current: current.scene_id.clone(),
            next: next.scene_id.clone(),
        });
    }
    let (dx, dy) = (next.ego.x - current.ego.x, next.ego.y - current.ego.y);
    Ok(PairMeta {
        country: current.country.clone(),
        dist_m: libm::hypot(dx, dy),
        orientation_diff_deg: normalize_diff(next.ego.heading_deg - current.ego.heading_deg),
    })
}

/// Scenes of one sequence in time order, with an id index.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkedSequence {
    pub sequence_id: String,
    scenes: Vec<Scene>,
    index: BTreeMap<String, usize>,
}

impl LinkedSequence {
    pub fn scenes(&self) -> &[Scene] {
        &self.scenes
    }

    pub fn into_scenes(self) -> Vec<Scene> {
        self.scenes
    }

    pub fn position(&self, scene_id: &str) -> Option<usize> {
        self.index.get(scene_id).copied()
    }

    pub fn get(&self, scene_id: &str) -> Option<&Scene> {
        self.position(scene_id).map(|i| &self.scenes[i])
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    /// Consecutive `(current, next)` scene pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (&Scene, &Scene)> + '_ {
        self.scenes.windows(2).map(|w| (&w[0], &w[1]))
    }
}

/// Orders a sequence's scenes by timestamp and checks that every present
/// `prev`/`next` link agrees with that order. Links may be absent; a link from
/// an end of the sequence to a scene not in the input is accepted.
pub fn link_sequence(mut scenes: Vec<Scene>) -> Result<LinkedSequence, SceneError> {
    let sequence_id = scenes.first().ok_or(SceneError::EmptySequence)?.sequence_id.clone();
    for scene in &scenes {
        if scene.sequence_id != sequence_id {
            return Err(SceneError::MixedSequences {
                scene: scene.scene_id.clone(),
                expected: sequence_id,
                found: scene.sequence_id.clone(),
            });
        }
    }
    scenes.sort_by(|a, b| a.timestamp_us.cmp(&b.timestamp_us).then_with(|| a.scene_id.cmp(&b.scene_id)));
    let mut index = BTreeMap::new();
    for (i, scene) in scenes.iter().enumerate() {
        if index.insert(scene.scene_id.clone(), i).is_some() {
            return Err(SceneError::DuplicateSceneId(scene.scene_id.clone()));
        }
    }
    for w in scenes.windows(2) {
        if w[0].timestamp_us == w[1].timestamp_us {
            return Err(SceneError::DuplicateTimestamp {
                first: w[0].scene_id.clone(),
                second: w[1].scene_id.clone(),
                timestamp_us: w[0].timestamp_us,
            });
        }
    }
    let broken = |scene: &Scene, detail: String| SceneError::BrokenChain {
        scene: scene.scene_id.clone(),
        detail,
    };
    for (i, scene) in scenes.iter().enumerate() {
        let expected_prev = i.checked_sub(1).map(|p| scenes[p].scene_id.as_str());
        let expected_next = scenes.get(i + 1).map(|s| s.scene_id.as_str());
        for (link, expected, name) in
            [(&scene.prev, expected_prev, "prev"), (&scene.next, expected_next, "next")]
        {
            let Some(link) = link.as_deref() else { continue };
            match expected {
                Some(e) if e != link => {
                    return Err(broken(scene, alloc::format!("{name} is {link}, timestamps give {e}")));
                }
                None if index.contains_key(link) => {
                    return Err(broken(scene, alloc::format!("{name} is {link}, but it is the sequence end")));
                }
                _ => {}
            }
        }
    }
    Ok(LinkedSequence { sequence_id, scenes, index })
}
