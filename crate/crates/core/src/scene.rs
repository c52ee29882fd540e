//! One prediction instance: an agent's observed history, its optional
//! ground-truth future, and the candidate centerlines around it.

use thiserror::Error;

use crate::geometry::{CartesianPoint, Polyline};

/// Observed points per scene (2 s at 10 Hz).
pub const HISTORY_LEN: usize = 20;
/// Future points per scene (3 s at 10 Hz).
pub const HORIZON_LEN: usize = 30;
/// Sampling interval, seconds.
pub const TIME_STEP: f64 = 0.1;
pub const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("scene {scene_id}: observed length {got} \u{2260} {HISTORY_LEN}")]
    ObservedLength { scene_id: String, got: usize },
    #[error("scene {scene_id}: future length {got} \u{2260} {HORIZON_LEN}")]
    FutureLength { scene_id: String, got: usize },
    #[error("scene {scene_id}: timestamp {index} is {t} s, expected {expected} s (0.1 s spacing)")]
    Timestamps {
        scene_id: String,
        index: usize,
        t: f64,
        expected: f64,
    },
    #[error("scene {scene_id}: no centerlines")]
    NoCenterlines { scene_id: String },
    #[error("scene {scene_id}: non-finite value at point {index}")]
    NonFinite { scene_id: String, index: usize },
    #[error("scene {scene_id}: {what} {index}: {source}")]
    BadPolyline {
        scene_id: String,
        what: &'static str,
        index: usize,
        source: crate::geometry::GeometryError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub t: f64,
    pub point: CartesianPoint,
}

impl TimedPoint {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self {
            t,
            point: CartesianPoint::new(x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub observed: Vec<TimedPoint>,
    pub future: Option<Vec<TimedPoint>>,
    pub centerlines: Vec<Polyline>,
    /// Lane boundaries, when the source provides them.
    pub boundaries: Vec<Polyline>,
    /// Generator label or cluster id, if known.
    pub domain: Option<usize>,
}

impl Scene {
    pub fn observed_points(&self) -> Vec<CartesianPoint> {
        self.observed.iter().map(|p| p.point).collect()
    }

    pub fn future_points(&self) -> Option<Vec<CartesianPoint>> {
        self.future
            .as_ref()
            .map(|f| f.iter().map(|p| p.point).collect())
    }

    /// Checks lengths, 10 Hz timing across observed and future, finiteness
    /// and the presence of at least one centerline.
    pub fn validate(&self) -> Result<(), SceneError> {
        let scene_id = || self.scene_id.clone();
        if self.observed.len() != HISTORY_LEN {
            return Err(SceneError::ObservedLength {
                scene_id: scene_id(),
                got: self.observed.len(),
            });
        }
        if let Some(future) = &self.future {
            if future.len() != HORIZON_LEN {
                return Err(SceneError::FutureLength {
                    scene_id: scene_id(),
                    got: future.len(),
                });
            }
        }
        let all: Vec<&TimedPoint> = self
            .observed
            .iter()
            .chain(self.future.iter().flatten())
            .collect();
        if let Some(index) = all
            .iter()
            .position(|p| !(p.t.is_finite() && p.point.is_finite()))
        {
            return Err(SceneError::NonFinite {
                scene_id: scene_id(),
                index,
            });
        }
        for (i, pair) in all.windows(2).enumerate() {
            let expected = pair[0].t + TIME_STEP;
            if (pair[1].t - expected).abs() > TIME_TOLERANCE {
                return Err(SceneError::Timestamps {
                    scene_id: scene_id(),
                    index: i + 1,
                    t: pair[1].t,
                    expected,
                });
            }
        }
        if self.centerlines.is_empty() {
            return Err(SceneError::NoCenterlines {
                scene_id: scene_id(),
            });
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::straight_scene;
    use super::*;

    #[test]
    fn valid_scene_passes() {
        straight_scene("a", 10.0, 0.0).validate().unwrap();
    }

    #[test]
    fn short_history_named() {
        let mut s = straight_scene("a", 10.0, 0.0);
        s.observed.pop();
        let err = s.validate().unwrap_err();
        assert_eq!(err.to_string(), "scene a: observed length 19 \u{2260} 20");
    }

    #[test]
    fn timing_checked_across_future() {
        let mut s = straight_scene("b", 10.0, 0.0);
        s.future.as_mut().unwrap()[0].t += 0.05;
        assert!(matches!(
            s.validate().unwrap_err(),
            SceneError::Timestamps { index: 20, .. }
        ));
        let mut s = straight_scene("c", 10.0, 0.0);
        s.observed.swap(3, 4);
        assert!(matches!(s.validate(), Err(SceneError::Timestamps { .. })));
    }

    #[test]
    fn missing_centerlines() {
        let mut s = straight_scene("d", 10.0, 0.0);
        s.centerlines.clear();
        assert_eq!(
            s.validate().unwrap_err(),
            SceneError::NoCenterlines {
                scene_id: "d".into()
            }
        );
    }
}
