//! minADE / minFDE / miss rate and seen-vs-unseen degradation.

use std::fmt;

use thiserror::Error;

use crate::geometry::CartesianPoint;

/// Number of predicted modes scored per scene.
pub const DEFAULT_MODES: usize = 6;

/// A scene is a miss when its minFDE strictly exceeds this, meters.
pub const MISS_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("prediction set has no trajectories")]
    NoModes,
    #[error("predicted trajectory {mode} has length {got}, expected {expected}")]
    RaggedModes {
        mode: usize,
        expected: usize,
        got: usize,
    },
    #[error("ground truth has length {got}, predictions have horizon {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no scenes to aggregate")]
    Empty,
}

/// K candidate futures for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub scene_id: String,
    pub trajectories: Vec<Vec<CartesianPoint>>,
}

impl PredictionSet {
    pub fn new(
        scene_id: impl Into<String>,
        trajectories: Vec<Vec<CartesianPoint>>,
    ) -> Result<Self, MetricsError> {
        let first = trajectories.first().ok_or(MetricsError::NoModes)?;
        let expected = first.len();
        if expected == 0 {
            return Err(MetricsError::RaggedModes {
                mode: 0,
                expected: 1,
                got: 0,
            });
        }
        if let Some((mode, t)) = trajectories
            .iter()
            .enumerate()
            .find(|(_, t)| t.len() != expected)
        {
            return Err(MetricsError::RaggedModes {
                mode,
                expected,
                got: t.len(),
            });
        }
        Ok(Self {
            scene_id: scene_id.into(),
            trajectories,
        })
    }

    pub fn horizon(&self) -> usize {
        self.trajectories[0].len()
    }

    fn check(&self, gt: &[CartesianPoint]) -> Result<(), MetricsError> {
        if gt.len() != self.horizon() {
            return Err(MetricsError::LengthMismatch {
                expected: self.horizon(),
                got: gt.len(),
            });
        }
        Ok(())
    }
}

pub fn min_ade(pred: &PredictionSet, gt: &[CartesianPoint]) -> Result<f64, MetricsError> {
    pred.check(gt)?;
    let h = gt.len() as f64;
    Ok(pred
        .trajectories
        .iter()
        .map(|t| t.iter().zip(gt).map(|(&p, &g)| p.distance(g)).sum::<f64>() / h)
        .fold(f64::INFINITY, f64::min))
}

pub fn min_fde(pred: &PredictionSet, gt: &[CartesianPoint]) -> Result<f64, MetricsError> {
    pred.check(gt)?;
    let last = gt[gt.len() - 1];
    Ok(pred
        .trajectories
        .iter()
        .map(|t| t[t.len() - 1].distance(last))
        .fold(f64::INFINITY, f64::min))
}

/// Fraction of scenes whose minFDE is strictly above `threshold`.
pub fn miss_rate(min_fdes: &[f64], threshold: f64) -> Result<f64, MetricsError> {
    if min_fdes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let misses = min_fdes.iter().filter(|&&f| f > threshold).count();
    Ok(misses as f64 / min_fdes.len() as f64)
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    /// Validation scenes from seen domains.
    Seen,
    /// Test scenes from unseen domains.
    Unseen,
    Domain(usize),
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Seen => f.write_str("seen"),
            Group::Unseen => f.write_str("unseen"),
            Group::Domain(id) => write!(f, "domain-{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneScore {
    pub scene_id: String,
    pub min_ade: f64,
    pub min_fde: f64,
}

impl SceneScore {
    pub fn evaluate(pred: &PredictionSet, gt: &[CartesianPoint]) -> Result<Self, MetricsError> {
        Ok(Self {
            scene_id: pred.scene_id.clone(),
            min_ade: min_ade(pred, gt)?,
            min_fde: min_fde(pred, gt)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub group: Group,
    pub n_scenes: usize,
    pub min_ade: f64,
    pub min_fde: f64,
    pub miss_rate: f64,
}

impl MetricsReport {
    /// Averages per-scene scores in scene-id order so the result does not
    /// depend on the order scores were produced in.
    pub fn aggregate(
        group: Group,
        scores: &[SceneScore],
        threshold: f64,
    ) -> Result<Self, MetricsError> {
        if scores.is_empty() {
            return Err(MetricsError::Empty);
        }
        let mut ordered: Vec<&SceneScore> = scores.iter().collect();
        ordered.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
        let n = ordered.len() as f64;
        let fdes: Vec<f64> = ordered.iter().map(|s| s.min_fde).collect();
        Ok(Self {
            group,
            n_scenes: ordered.len(),
            min_ade: compensated_sum(ordered.iter().map(|s| s.min_ade)) / n,
            min_fde: compensated_sum(fdes.iter().copied()) / n,
            miss_rate: miss_rate(&fdes, threshold)?,
        })
    }
}

/// Relative change of `unseen` over `seen`, in percent. `None` when the
/// seen value is zero.
pub fn relative_change(seen: f64, unseen: f64) -> Option<f64> {
    (seen != 0.0).then(|| 100.0 * (unseen - seen) / seen)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degradation {
    pub min_ade: Option<f64>,
    pub min_fde: Option<f64>,
    pub miss_rate: Option<f64>,
}

impl Degradation {
    pub fn as_array(&self) -> [Option<f64>; 3] {
        [self.min_ade, self.min_fde, self.miss_rate]
    }
}

pub fn degradation(seen: &MetricsReport, unseen: &MetricsReport) -> Degradation {
    Degradation {
        min_ade: relative_change(seen.min_ade, unseen.min_ade),
        min_fde: relative_change(seen.min_fde, unseen.min_fde),
        miss_rate: relative_change(seen.miss_rate, unseen.miss_rate),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(offset: (f64, f64), h: usize) -> Vec<CartesianPoint> {
        (0..h)
            .map(|t| CartesianPoint::new(t as f64 + offset.0, offset.1))
            .collect()
    }

    fn report(ade: f64, fde: f64, mr: f64) -> MetricsReport {
        MetricsReport {
            group: Group::Seen,
            n_scenes: 1,
            min_ade: ade,
            min_fde: fde,
            miss_rate: mr,
        }
    }

    #[test]
    fn ade_cases() {
        let gt = line((0.0, 0.0), 30);
        let exact = PredictionSet::new("a", vec![gt.clone()]).unwrap();
        assert_eq!(min_ade(&exact, &gt).unwrap(), 0.0);
        let shifted = PredictionSet::new("a", vec![line((1.0, 0.0), 30)]).unwrap();
        assert_eq!(min_ade(&shifted, &gt).unwrap(), 1.0);
        let two =
            PredictionSet::new("a", vec![line((1.0, 0.0), 30), line((0.0, 0.5), 30)]).unwrap();
        assert_eq!(min_ade(&two, &gt).unwrap(), 0.5);
    }

    #[test]
    fn fde_cases() {
        let gt = line((0.0, 0.0), 30);
        let exact = PredictionSet::new("a", vec![gt.clone()]).unwrap();
        assert_eq!(min_fde(&exact, &gt).unwrap(), 0.0);
        let two =
            PredictionSet::new("a", vec![line((0.0, 3.0), 30), line((2.0, 0.0), 30)]).unwrap();
        assert_eq!(min_fde(&two, &gt).unwrap(), 2.0);
        let mut late = gt.clone();
        late[29].y += 5.0;
        let late = PredictionSet::new("a", vec![late]).unwrap();
        assert_eq!(min_fde(&late, &gt).unwrap(), 5.0);
    }

    #[test]
    fn length_checks() {
        let gt = line((0.0, 0.0), 30);
        let short = PredictionSet::new("a", vec![line((0.0, 0.0), 29)]).unwrap();
        assert_eq!(
            min_ade(&short, &gt).unwrap_err(),
            MetricsError::LengthMismatch {
                expected: 29,
                got: 30
            }
        );
        assert!(min_fde(&short, &gt).is_err());
        assert_eq!(
            PredictionSet::new("a", vec![]).unwrap_err(),
            MetricsError::NoModes
        );
        assert!(matches!(
            PredictionSet::new("a", vec![line((0.0, 0.0), 3), line((0.0, 0.0), 4)]),
            Err(MetricsError::RaggedModes { mode: 1, .. })
        ));
    }

    #[test]
    fn miss_rate_cases() {
        assert_eq!(miss_rate(&[0.0, 0.0, 0.0], MISS_THRESHOLD).unwrap(), 0.0);
        assert_eq!(miss_rate(&[3.0], MISS_THRESHOLD).unwrap(), 1.0);
        assert_eq!(
            miss_rate(&[1.0, 3.0, 2.0], MISS_THRESHOLD).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(
            miss_rate(&[], MISS_THRESHOLD).unwrap_err(),
            MetricsError::Empty
        );
    }

    #[test]
    fn degradation_cases() {
        let d = degradation(
            &report(0.6342, 1.3887, 0.1515),
            &report(1.9689, 3.7502, 0.5501),
        );
        assert!((d.min_ade.unwrap() - 210.45).abs() < 0.01);
        assert!((d.min_fde.unwrap() - 170.05).abs() < 0.01);
        assert!((d.miss_rate.unwrap() - 263.10).abs() < 0.01);

        let same = degradation(&report(1.0, 2.0, 0.5), &report(1.0, 2.0, 0.5));
        assert_eq!(same.as_array(), [Some(0.0); 3]);

        let better = degradation(&report(1.0, 1.0, 0.0), &report(0.5, 0.5, 0.1));
        assert_eq!(better.min_ade, Some(-50.0));
        assert_eq!(better.miss_rate, None);
    }

    #[test]
    fn aggregate_is_order_independent() {
        let scores: Vec<SceneScore> = (0..50)
            .map(|i| SceneScore {
                scene_id: format!("s{i:03}"),
                min_ade: 0.1 * i as f64,
                min_fde: 0.13 * i as f64,
            })
            .collect();
        let fwd = MetricsReport::aggregate(Group::Unseen, &scores, MISS_THRESHOLD).unwrap();
        let mut rev = scores.clone();
        rev.reverse();
        let back = MetricsReport::aggregate(Group::Unseen, &rev, MISS_THRESHOLD).unwrap();
        assert_eq!(fwd, back);
        assert_eq!(fwd.n_scenes, 50);
        assert!((fwd.min_ade - 2.45).abs() < 1e-12);
        assert_eq!(fwd.miss_rate, 34.0 / 50.0);
        assert_eq!(
            MetricsReport::aggregate(Group::Seen, &[], MISS_THRESHOLD).unwrap_err(),
            MetricsError::Empty
        );
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
