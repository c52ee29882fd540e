//! Line-delimited scene files.
//!
//! The first line may be a header object `{"format":"frenetkit/1"}`. Every
//! other non-blank line is one scene record:
//!
//! ```text
//! {"scene_id":"a","observed":[[t,x,y],...],"future":[[t,x,y],...],
//!  "centerlines":[[[x,y],...],...],"boundaries":[...],"domain":3}
//! ```
//!
//! `future`, `boundaries` and `domain` are optional. Numbers are written in
//! shortest round-trip form, so a write/read cycle is lossless.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Polyline;
use crate::scene::{Scene, SceneError, TimedPoint};

pub const FORMAT_VERSION: &str = "frenetkit/1";

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: SceneError },
    #[error("line {line}: duplicate scene id {scene_id}")]
    Duplicate { line: usize, scene_id: String },
    #[error("unsupported format {0:?} (expected {FORMAT_VERSION})")]
    Version(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub version: String,
    pub scenes: Vec<Scene>,
}

impl Default for SceneFile {
    fn default() -> Self {
        Self {
            version: FORMAT_VERSION.to_string(),
            scenes: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneRecord {
    scene_id: String,
    observed: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    future: Option<Vec<[f64; 3]>>,
    centerlines: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    boundaries: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<usize>,
}

fn timed(points: &[[f64; 3]]) -> Vec<TimedPoint> {
    points
        .iter()
        .map(|&[t, x, y]| TimedPoint::new(t, x, y))
        .collect()
}

fn untimed(points: &[TimedPoint]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [p.t, p.point.x, p.point.y]).collect()
}

fn polylines(
    scene_id: &str,
    what: &'static str,
    raw: &[Vec<[f64; 2]>],
) -> Result<Vec<Polyline>, SceneError> {
    raw.iter()
        .enumerate()
        .map(|(index, pts)| {
            Polyline::from_xy(pts).map_err(|source| SceneError::BadPolyline {
                scene_id: scene_id.to_string(),
                what,
                index,
                source,
            })
        })
        .collect()
}

impl SceneRecord {
    fn into_scene(self) -> Result<Scene, SceneError> {
        let scene = Scene {
            centerlines: polylines(&self.scene_id, "centerline", &self.centerlines)?,
            boundaries: polylines(&self.scene_id, "boundary", &self.boundaries)?,
            observed: timed(&self.observed),
            future: self.future.as_deref().map(timed),
            domain: self.domain,
            scene_id: self.scene_id,
        };
        scene.validate()?;
        Ok(scene)
    }

    fn from_scene(scene: &Scene) -> Self {
        let xy = |p: &Polyline| p.vertices().iter().map(|v| v.to_array()).collect();
        Self {
            scene_id: scene.scene_id.clone(),
            observed: untimed(&scene.observed),
            future: scene.future.as_deref().map(untimed),
            centerlines: scene.centerlines.iter().map(xy).collect(),
            boundaries: scene.boundaries.iter().map(xy).collect(),
            domain: scene.domain,
        }
    }
}

fn parse_record(line_no: usize, text: &str) -> Result<Scene, SceneFileError> {
    let parse_err = |message: String| SceneFileError::Parse {
        line: line_no,
        message,
    };
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let scene_id = value
        .get("scene_id")
        .and_then(|v| v.as_str())
        .map(str::to_owned);
    let record: SceneRecord = serde_json::from_value(value).map_err(|e| match &scene_id {
        Some(id) => parse_err(format!("scene {id}: {e}")),
        None => parse_err(e.to_string()),
    })?;
    record
        .into_scene()
        .map_err(|source| SceneFileError::Invalid {
            line: line_no,
            source,
        })
}

pub fn read_scene_file(reader: impl Read) -> Result<SceneFile, SceneFileError> {
    let mut file = SceneFile::default();
    let mut ids = HashSet::new();
    let mut first = true;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Ok(header) = serde_json::from_str::<Header>(text) {
                if header.format != FORMAT_VERSION {
                    return Err(SceneFileError::Version(header.format));
                }
                file.version = header.format;
                continue;
            }
        }
        let scene = parse_record(line_no, text)?;
        if !ids.insert(scene.scene_id.clone()) {
            return Err(SceneFileError::Duplicate {
                line: line_no,
                scene_id: scene.scene_id,
            });
        }
        file.scenes.push(scene);
    }
    Ok(file)
}

pub fn parse_scene_file(path: impl AsRef<Path>) -> Result<SceneFile, SceneFileError> {
    read_scene_file(File::open(path)?)
}

pub fn write_scene_file(file: &SceneFile, writer: impl Write) -> Result<(), SceneFileError> {
    let mut w = BufWriter::new(writer);
    let header = Header {
        format: file.version.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    for scene in &file.scenes {
        serde_json::to_writer(&mut w, &SceneRecord::from_scene(scene))
            .map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
