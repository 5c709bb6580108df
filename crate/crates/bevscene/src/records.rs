//! Scene-record files: one JSON object per line.
//!
//! ```text
//! {"scene_id":"s1","sequence_id":"q","timestamp_us":0,"country":"US",
//!  "ego":{"x":0.0,"y":0.0,"heading_deg":90.0},
//!  "objects":[{"id":"o1","label":"car","x":1.0,"y":2.0}],"prev":null,"next":"s2"}
//! ```

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use bevscene_core::{EgoPose, Scene, SceneError, Taxonomy};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::{Error, IoContext, Result};

const SCENE_FIELDS: [&str; 8] =
    ["scene_id", "sequence_id", "timestamp_us", "country", "ego", "objects", "prev", "next"];
const EGO_FIELDS: [&str; 3] = ["x", "y", "heading_deg"];
const OBJECT_FIELDS: [&str; 4] = ["id", "label", "x", "y"];

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Unknown field names at every level of the record, as dotted paths.
fn unknown_fields(record: &Map<String, Value>) -> Vec<String> {
    let extra = |map: &Map<String, Value>, known: &[&str], prefix: &str| -> Vec<String> {
        map.keys()
            .filter(|k| !known.contains(&k.as_str()))
            .map(|k| format!("{prefix}{k}"))
            .collect()
    };
    let mut out = extra(record, &SCENE_FIELDS, "");
    if let Some(Value::Object(ego)) = record.get("ego") {
        out.extend(extra(ego, &EGO_FIELDS, "ego."));
    }
    if let Some(Value::Array(objects)) = record.get("objects") {
        for (i, o) in objects.iter().enumerate() {
            if let Value::Object(o) = o {
                out.extend(extra(o, &OBJECT_FIELDS, &format!("objects[{i}].")));
            }
        }
    }
    out
}

/// Parses one record. Unknown fields are an error when `strict`, otherwise
/// they are logged and skipped. The ego heading is normalized into `[0, 360)`.
pub fn parse_scene_record(line: &str, taxonomy: &Taxonomy, strict: bool) -> Result<Scene, RecordError> {
    let value: Value = serde_json::from_str(line).map_err(|e| RecordError::MalformedRecord(e.to_string()))?;
    let Value::Object(map) = &value else {
        return Err(RecordError::MalformedRecord("expected a JSON object".into()));
    };
    let unknown = unknown_fields(map);
    if let Some(first) = unknown.first() {
        if strict {
            return Err(RecordError::UnknownField(first.clone()));
        }
        log::warn!("ignoring unknown fields {unknown:?}");
    }
    let mut scene: Scene =
        serde_json::from_value(value).map_err(|e| RecordError::MalformedRecord(e.to_string()))?;
    let ego = scene.ego;
    scene.ego = EgoPose::new(ego.x, ego.y, ego.heading_deg).map_err(|_| SceneError::NonFiniteCoordinate {
        scene: scene.scene_id.clone(),
        what: "ego".into(),
    })?;
    scene.validate(taxonomy)?;
    Ok(scene)
}

pub fn render_scene_record(scene: &Scene) -> String {
    serde_json::to_string(scene).expect("scenes serialize")
}

/// Reads a scene-record file. Blank lines are skipped; errors carry the line number.
pub fn read_scenes(path: &Path, taxonomy: &Taxonomy, strict: bool) -> Result<Vec<Scene>> {
    let file = fs::File::open(path).at(path)?;
    let mut scenes = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let scene = parse_scene_record(&line, taxonomy, strict)
            .map_err(|source| Error::Record { path: path.into(), line: i + 1, source })?;
        scenes.push(scene);
    }
    Ok(scenes)
}

pub fn write_scenes<'a>(path: &Path, scenes: impl IntoIterator<Item = &'a Scene>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path).at(path)?);
    for scene in scenes {
        writeln!(out, "{}", render_scene_record(scene)).at(path)?;
    }
    out.flush().at(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAR: &str = r#"{"scene_id":"s1","sequence_id":"q","timestamp_us":5,"country":"US","ego":{"x":0,"y":0,"heading_deg":90},"objects":[{"id":"o1","label":"car","x":1.0,"y":2.0}],"prev":null,"next":"s2"}"#;

    #[test]
    fn direct_field_mapping() {
        let t = Taxonomy::default();
        let s = parse_scene_record(CAR, &t, true).unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!((s.objects[0].label.as_str(), s.objects[0].x, s.objects[0].y), ("car", 1.0, 2.0));
        assert_eq!(s.ego.heading_deg, 90.0);
        assert_eq!(s.next.as_deref(), Some("s2"));
        assert_eq!(s.prev, None);
    }

    #[test]
    fn empty_objects() {
        let t = Taxonomy::default();
        let line = CAR.replace(r#"[{"id":"o1","label":"car","x":1.0,"y":2.0}]"#, "[]");
        assert!(parse_scene_record(&line, &t, true).unwrap().objects.is_empty());
    }

    #[test]
    fn unknown_label_rejected() {
        let t = Taxonomy::default();
        let line = CAR.replace("\"car\"", "\"hovercraft\"");
        assert!(matches!(
            parse_scene_record(&line, &t, false),
            Err(RecordError::Scene(SceneError::UnknownLabel { .. }))
        ));
    }

    #[test]
    fn unknown_fields_strict_and_lenient() {
        let t = Taxonomy::default();
        let line = CAR.replace(r#""x":1.0"#, r#""x":1.0,"speed":3"#);
        match parse_scene_record(&line, &t, true) {
            Err(RecordError::UnknownField(f)) => assert_eq!(f, "objects[0].speed"),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_scene_record(&line, &t, false).unwrap(), parse_scene_record(CAR, &t, true).unwrap());
    }

    #[test]
    fn malformed() {
        let t = Taxonomy::default();
        for bad in ["", "[1]", "{\"scene_id\":3}", &CAR[..40]] {
            assert!(matches!(parse_scene_record(bad, &t, false), Err(RecordError::MalformedRecord(_))), "{bad}");
        }
    }

    #[test]
    fn heading_is_normalized() {
        let t = Taxonomy::default();
        let line = CAR.replace(r#""heading_deg":90"#, r#""heading_deg":-90"#);
        assert_eq!(parse_scene_record(&line, &t, true).unwrap().ego.heading_deg, 270.0);
    }

    #[test]
    fn render_parse_identity() {
        let t = Taxonomy::default();
        let s = parse_scene_record(CAR, &t, true).unwrap();
        assert_eq!(parse_scene_record(&render_scene_record(&s), &t, true).unwrap(), s);
    }
}
