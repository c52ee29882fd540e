use crate::geometry::{cartesian_to_frenet, project_point_to_polyline, CartesianPoint, Polyline};
use crate::reference::select_reference;
use crate::scene::Scene;

use super::DomainError;

pub const FEATURE_COUNT: usize = 21;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "ref_length",
    "ref_chord",
    "ref_sinuosity",
    "ref_abs_heading_change",
    "ref_net_heading_change",
    "ref_max_turn",
    "ref_mean_curvature",
    "ref_max_curvature",
    "ref_curvature_std",
    "ref_bbox_width",
    "ref_bbox_height",
    "ref_vertex_count",
    "candidate_count",
    "candidate_endpoint_spread",
    "start_to_centerline",
    "boundary_offset",
    "mean_speed",
    "max_speed",
    "history_heading_change",
    "net_displacement",
    "history_mean_abs_offset",
];

/// Per-scene descriptor: 21 raw features and, once fitted, the 2-D embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub scene_id: String,
    pub raw: [f64; FEATURE_COUNT],
    pub embedded: Option<[f64; 2]>,
}

/// Geometry summary of one centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathShape {
    pub length: f64,
    pub chord: f64,
    pub sinuosity: f64,
    pub abs_heading_change: f64,
    pub net_heading_change: f64,
    pub max_turn: f64,
    pub mean_curvature: f64,
    pub max_curvature: f64,
    pub curvature_std: f64,
    pub bbox_width: f64,
    pub bbox_height: f64,
    pub vertex_count: usize,
}

impl PathShape {
    pub fn of(path: &Polyline) -> Self {
        let turns = path.turn_angles();
        let lens = path.segment_lengths();
        let curvatures: Vec<f64> = turns
            .iter()
            .enumerate()
            .map(|(i, a)| a.abs() / (0.5 * (lens[i] + lens[i + 1])))
            .collect();
        let (mean_curvature, curvature_std) = mean_std(&curvatures);
        let chord = path.first().distance(path.last());
        let (min, max) = path.vertices().iter().fold(
            (
                CartesianPoint::new(f64::INFINITY, f64::INFINITY),
                CartesianPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            ),
            |(lo, hi), v| {
                (
                    CartesianPoint::new(lo.x.min(v.x), lo.y.min(v.y)),
                    CartesianPoint::new(hi.x.max(v.x), hi.y.max(v.y)),
                )
            },
        );
        Self {
            length: path.total_length(),
            chord,
            sinuosity: path.total_length() / chord.max(1e-9),
            abs_heading_change: turns.iter().map(|a| a.abs()).sum(),
            net_heading_change: turns.iter().sum(),
            max_turn: turns.iter().fold(0.0, |m, a| m.max(a.abs())),
            mean_curvature,
            max_curvature: curvatures.iter().fold(0.0, |m, &k| m.max(k)),
            curvature_std,
            bbox_width: max.x - min.x,
            bbox_height: max.y - min.y,
            vertex_count: path.vertices().len(),
        }
    }
}

/// Population mean and standard deviation; zeros for an empty slice.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn extract_features(scene: &Scene) -> Result<FeatureVector, DomainError> {
    if scene.centerlines.is_empty() {
        return Err(DomainError::NoCenterlines(scene.scene_id.clone()));
    }
    if scene.observed.len() < 2 {
        return Err(DomainError::ShortHistory(scene.scene_id.clone()));
    }
    let history = scene.observed_points();
    let selection = select_reference(&history, &scene.centerlines)
        .map_err(|e| DomainError::Scene(scene.scene_id.clone(), e.to_string()))?;
    let reference = &scene.centerlines[selection.index];
    let shape = PathShape::of(reference);

    let candidates = &scene.centerlines;
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            pair_sum += candidates[i].last().distance(candidates[j].last());
            pairs += 1;
        }
    }
    let endpoint_spread = if pairs == 0 {
        0.0
    } else {
        pair_sum / pairs as f64
    };

    let start_distance = candidates
        .iter()
        .map(|c| project_point_to_polyline(history[0], c).distance)
        .fold(f64::INFINITY, f64::min);

    let boundary_offset = if scene.boundaries.is_empty() {
        0.0
    } else {
        scene
            .boundaries
            .iter()
            .map(|b| {
                b.vertices()
                    .iter()
                    .map(|&v| project_point_to_polyline(v, reference).distance)
                    .sum::<f64>()
                    / b.vertices().len() as f64
            })
            .sum::<f64>()
            / scene.boundaries.len() as f64
    };

    let speeds: Vec<f64> = scene
        .observed
        .windows(2)
        .map(|w| w[0].point.distance(w[1].point) / (w[1].t - w[0].t))
        .collect();
    let (mean_speed, _) = mean_std(&speeds);
    let max_speed = speeds.iter().fold(0.0f64, |m, &v| m.max(v));

    let steps: Vec<CartesianPoint> = history
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.norm() > 1e-9)
        .collect();
    let heading_changes: Vec<f64> = steps
        .windows(2)
        .map(|w| w[0].cross(w[1]).atan2(w[0].dot(w[1])).abs())
        .collect();
    let (history_heading_change, _) = mean_std(&heading_changes);

    let frenet = cartesian_to_frenet(&history, reference)
        .map_err(|e| DomainError::Scene(scene.scene_id.clone(), e.to_string()))?;
    let mean_abs_offset =
        frenet.points.iter().map(|p| p.d.abs()).sum::<f64>() / frenet.points.len() as f64;

    let raw = [
        shape.length,
        shape.chord,
        shape.sinuosity,
        shape.abs_heading_change,
        shape.net_heading_change,
        shape.max_turn,
        shape.mean_curvature,
        shape.max_curvature,
        shape.curvature_std,
        shape.bbox_width,
        shape.bbox_height,
        shape.vertex_count as f64,
        candidates.len() as f64,
        endpoint_spread,
        start_distance,
        boundary_offset,
        mean_speed,
        max_speed,
        history_heading_change,
        history[0].distance(history[history.len() - 1]),
        mean_abs_offset,
    ];
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(DomainError::Scene(
            scene.scene_id.clone(),
            format!("feature {} is not finite", FEATURE_NAMES[i]),
        ));
    }
    Ok(FeatureVector {
        scene_id: scene.scene_id.clone(),
        raw,
        embedded: None,
    })
}
