//! Constant-velocity and nearest-neighbor predictors that run in either the
//! Cartesian or the Frenet frame, and the seen/unseen benchmark around them.
//!
//! In the Frenet frame every scene is expressed along its selected reference
//! centerline before prediction, and predictions are mapped back to
//! Cartesian coordinates before scoring.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::thread;

use thiserror::Error;

use crate::domains::{DomainSplit, Partition};
use crate::geometry::{
    cartesian_to_frenet, frenet_to_cartesian_clamped, CartesianPoint, FrenetPoint, Polyline,
};
use crate::metrics::{
    degradation, Degradation, Group, MetricsError, MetricsReport, PredictionSet, SceneScore,
    DEFAULT_MODES, MISS_THRESHOLD,
};
use crate::reference::select_reference;
use crate::scene::{Scene, HORIZON_LEN};

/// Number of trailing observed steps averaged by the constant-velocity model.
pub const CV_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("need at least 2 observed points, got {0}")]
    ShortHistory(usize),
    #[error("scene {0}: {1}")]
    Scene(String, String),
    #[error("scene {0} has no ground-truth future")]
    MissingFuture(String),
    #[error("nearest-neighbor bank is empty")]
    EmptyBank,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("query is in the {query} frame but the bank is in the {bank} frame")]
    FrameMismatch { query: Frame, bank: Frame },
    #[error("split lists scene {0}, which is not in the scene set")]
    UnknownScene(String),
    #[error("no {0} scenes to evaluate")]
    EmptyPartition(Partition),
    #[error("scene {0}: {1}")]
    Metrics(String, MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Cartesian,
    Frenet,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Cartesian => "cartesian",
            Frame::Frenet => "frenet",
        })
    }
}

impl FromStr for Frame {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cartesian" => Ok(Frame::Cartesian),
            "frenet" => Ok(Frame::Frenet),
            _ => Err(format!(
                "unknown frame {s:?} (expected cartesian or frenet)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePlan {
    pub frame: Frame,
    /// Selected centerline. Chosen in both frames, used only by Frenet.
    pub reference_index: usize,
    /// Raw arc length of the first observed point on the reference; zero in
    /// the Cartesian frame.
    pub s1_raw: f64,
}

/// A scene with its trajectories expressed in the active frame: (x, y) for
/// Cartesian, (s, d) for Frenet.
#[derive(Debug, Clone)]
pub struct FramedScene<'a> {
    pub scene: &'a Scene,
    pub plan: FramePlan,
    pub observed: Vec<[f64; 2]>,
    pub future: Option<Vec<[f64; 2]>>,
}

impl<'a> FramedScene<'a> {
    pub fn new(scene: &'a Scene, frame: Frame) -> Result<Self, BaselineError> {
        let history = scene.observed_points();
        let scene_err =
            |e: &dyn fmt::Display| BaselineError::Scene(scene.scene_id.clone(), e.to_string());
        let selection =
            select_reference(&history, &scene.centerlines).map_err(|e| scene_err(&e))?;
        let future = scene.future_points();
        let n_obs = history.len();
        let (plan, observed, future) = match frame {
            Frame::Cartesian => (
                FramePlan {
                    frame,
                    reference_index: selection.index,
                    s1_raw: 0.0,
                },
                history.iter().map(|p| p.to_array()).collect(),
                future.map(|f| f.iter().map(|p| p.to_array()).collect()),
            ),
            Frame::Frenet => {
                let all: Vec<CartesianPoint> = history
                    .iter()
                    .chain(future.iter().flatten())
                    .copied()
                    .collect();
                let reference = &scene.centerlines[selection.index];
                let ft = cartesian_to_frenet(&all, reference).map_err(|e| scene_err(&e))?;
                let pts: Vec<[f64; 2]> = ft.points.iter().map(|p| p.to_array()).collect();
                let fut = (pts.len() > n_obs).then(|| pts[n_obs..].to_vec());
                (
                    FramePlan {
                        frame,
                        reference_index: selection.index,
                        s1_raw: ft.s1_raw,
                    },
                    pts[..n_obs].to_vec(),
                    fut,
                )
            }
        };
        Ok(Self {
            scene,
            plan,
            observed,
            future,
        })
    }

    pub fn reference(&self) -> &Polyline {
        &self.scene.centerlines[self.plan.reference_index]
    }

    /// Maps a trajectory in this scene's frame to Cartesian coordinates.
    /// Returns the points and how many arc lengths had to be clamped onto the
    /// reference.
    pub fn to_cartesian(&self, traj: &[[f64; 2]]) -> (Vec<CartesianPoint>, usize) {
        match self.plan.frame {
            Frame::Cartesian => (traj.iter().map(|&p| p.into()).collect(), 0),
            Frame::Frenet => {
                let pts: Vec<FrenetPoint> = traj.iter().map(|&p| p.into()).collect();
                frenet_to_cartesian_clamped(&pts, self.reference(), self.plan.s1_raw)
            }
        }
    }
}

/// Extends the mean velocity of the last [`CV_WINDOW`] steps (fewer if the
/// history is shorter) for `horizon` steps.
pub fn constant_velocity_predict(
    observed: &[[f64; 2]],
    horizon: usize,
) -> Result<Vec<[f64; 2]>, BaselineError> {
    let n = observed.len();
    if n < 2 {
        return Err(BaselineError::ShortHistory(n));
    }
    let w = CV_WINDOW.min(n - 1);
    let last = observed[n - 1];
    let first = observed[n - 1 - w];
    let step = [
        (last[0] - first[0]) / w as f64,
        (last[1] - first[1]) / w as f64,
    ];
    Ok((1..=horizon)
        .map(|k| {
            let k = k as f64;
            [last[0] + k * step[0], last[1] + k * step[1]]
        })
        .collect())
}

pub trait Predictor: Sync {
    /// Candidate futures in the query's frame.
    fn predict(&self, query: &FramedScene<'_>) -> Result<Vec<Vec<[f64; 2]>>, BaselineError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantVelocity;

impl Predictor for ConstantVelocity {
    fn predict(&self, query: &FramedScene<'_>) -> Result<Vec<Vec<[f64; 2]>>, BaselineError> {
        Ok(vec![constant_velocity_predict(
            &query.observed,
            HORIZON_LEN,
        )?])
    }
}

#[derive(Debug, Clone)]
struct BankEntry {
    key: Vec<f64>,
    last: [f64; 2],
    future: Vec<[f64; 2]>,
}

/// Flattened history. Cartesian histories are taken relative to their first
/// point so retrieval does not depend on map position; Frenet histories are
/// already relative to the first point's arc length.
fn history_key(scene: &FramedScene<'_>) -> Vec<f64> {
    let origin = match scene.plan.frame {
        Frame::Cartesian => scene.observed[0],
        Frame::Frenet => [0.0, 0.0],
    };
    scene
        .observed
        .iter()
        .flat_map(|p| [p[0] - origin[0], p[1] - origin[1]])
        .collect()
}

/// Retrieves the futures of the `k` bank scenes with the closest histories
/// and moves each so it continues from the query's last observed point.
#[derive(Debug, Clone)]
pub struct NearestNeighbor {
    frame: Frame,
    k: usize,
    bank: Vec<BankEntry>,
}

impl NearestNeighbor {
    pub fn new(bank: &[FramedScene<'_>], k: usize) -> Result<Self, BaselineError> {
        if k == 0 {
            return Err(BaselineError::ZeroK);
        }
        let first = bank.first().ok_or(BaselineError::EmptyBank)?;
        let frame = first.plan.frame;
        let entries = bank
            .iter()
            .map(|s| {
                if s.plan.frame != frame {
                    return Err(BaselineError::FrameMismatch {
                        query: s.plan.frame,
                        bank: frame,
                    });
                }
                let future = s
                    .future
                    .clone()
                    .ok_or_else(|| BaselineError::MissingFuture(s.scene.scene_id.clone()))?;
                Ok(BankEntry {
                    key: history_key(s),
                    last: *s.observed.last().ok_or(BaselineError::ShortHistory(0))?,
                    future,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            frame,
            k,
            bank: entries,
        })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Bank indices of the `k` nearest histories with their distances,
    /// nearest first (lower index on ties). A bank smaller than `k` is
    /// padded by repeating the nearest entry.
    pub fn neighbors(&self, query: &FramedScene<'_>) -> Result<Vec<(usize, f64)>, BaselineError> {
        if query.plan.frame != self.frame {
            return Err(BaselineError::FrameMismatch {
                query: query.plan.frame,
                bank: self.frame,
            });
        }
        let key = history_key(query);
        let mut ranked: Vec<(usize, f64)> = self
            .bank
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let d2: f64 = e.key.iter().zip(&key).map(|(a, b)| (a - b) * (a - b)).sum();
                (i, d2.sqrt())
            })
            .collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        ranked.truncate(self.k);
        while ranked.len() < self.k {
            ranked.push(ranked[0]);
        }
        Ok(ranked)
    }
}

impl Predictor for NearestNeighbor {
    fn predict(&self, query: &FramedScene<'_>) -> Result<Vec<Vec<[f64; 2]>>, BaselineError> {
        let last = *query
            .observed
            .last()
            .ok_or(BaselineError::ShortHistory(0))?;
        Ok(self
            .neighbors(query)?
            .into_iter()
            .map(|(i, _)| {
                let e = &self.bank[i];
                let shift = [last[0] - e.last[0], last[1] - e.last[1]];
                e.future
                    .iter()
                    .map(|p| [p[0] + shift[0], p[1] + shift[1]])
                    .collect()
            })
            .collect())
    }
}

/// Nearest-neighbor prediction for one query against a bank of scenes with
/// futures, returned in Cartesian coordinates.
pub fn nn_predict(
    query: &Scene,
    bank: &[Scene],
    k: usize,
    frame: Frame,
) -> Result<PredictionSet, BaselineError> {
    let framed: Vec<FramedScene<'_>> = bank
        .iter()
        .map(|s| FramedScene::new(s, frame))
        .collect::<Result<_, _>>()?;
    let nn = NearestNeighbor::new(&framed, k)?;
    let q = FramedScene::new(query, frame)?;
    let (set, _) = predict_cartesian(&nn, &q)?;
    Ok(set)
}

fn predict_cartesian(
    predictor: &dyn Predictor,
    query: &FramedScene<'_>,
) -> Result<(PredictionSet, usize), BaselineError> {
    let mut clamped = 0;
    let trajectories = predictor
        .predict(query)?
        .iter()
        .map(|t| {
            let (pts, c) = query.to_cartesian(t);
            clamped += c;
            pts
        })
        .collect();
    let set = PredictionSet::new(query.scene.scene_id.clone(), trajectories)
        .map_err(|e| BaselineError::Metrics(query.scene.scene_id.clone(), e))?;
    Ok((set, clamped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    ConstantVelocity,
    NearestNeighbor { k: usize },
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictorKind::ConstantVelocity => "cv",
            PredictorKind::NearestNeighbor { .. } => "nn",
        })
    }
}

impl FromStr for PredictorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cv" => Ok(PredictorKind::ConstantVelocity),
            "nn" => Ok(PredictorKind::NearestNeighbor { k: DEFAULT_MODES }),
            _ => Err(format!("unknown predictor {s:?} (expected cv or nn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub frame: Frame,
    /// Seen (validation), unseen (test), then one report per domain id.
    pub reports: Vec<MetricsReport>,
    pub degradation: Degradation,
    /// Per-scene scores of every evaluated scene, in scene-id order.
    pub scene_scores: Vec<SceneScore>,
    /// Scenes whose predictions left the reference and were clamped onto it.
    pub clamped_scenes: Vec<String>,
}

impl BenchmarkReport {
    pub fn seen(&self) -> &MetricsReport {
        &self.reports[0]
    }

    pub fn unseen(&self) -> &MetricsReport {
        &self.reports[1]
    }

    pub fn group(&self, group: Group) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.group == group)
    }
}

fn index_scenes<'a>(
    split: &DomainSplit,
    scenes: &'a [Scene],
) -> Result<HashMap<&'a str, &'a Scene>, BaselineError> {
    let by_id: HashMap<&str, &Scene> = scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    if let Some(missing) = split
        .partition
        .keys()
        .find(|id| !by_id.contains_key(id.as_str()))
    {
        return Err(BaselineError::UnknownScene(missing.clone()));
    }
    Ok(by_id)
}

fn framed_partition<'a>(
    split: &DomainSplit,
    by_id: &HashMap<&str, &'a Scene>,
    part: Partition,
    frame: Frame,
) -> Result<Vec<FramedScene<'a>>, BaselineError> {
    split
        .scenes_in(part)
        .into_iter()
        .map(|id| FramedScene::new(by_id[id], frame))
        .collect()
}

pub fn run_benchmark(
    split: &DomainSplit,
    scenes: &[Scene],
    kind: PredictorKind,
    frame: Frame,
) -> Result<BenchmarkReport, BaselineError> {
    match kind {
        PredictorKind::ConstantVelocity => {
            run_benchmark_with(split, scenes, frame, &ConstantVelocity)
        }
        PredictorKind::NearestNeighbor { k } => {
            let by_id = index_scenes(split, scenes)?;
            let bank = framed_partition(split, &by_id, Partition::Train, frame)?;
            let nn = NearestNeighbor::new(&bank, k)?;
            run_benchmark_with(split, scenes, frame, &nn)
        }
    }
}

struct Scored {
    score: SceneScore,
    clamped: bool,
}

fn score_scene(
    predictor: &dyn Predictor,
    scene: &FramedScene<'_>,
) -> Result<Scored, BaselineError> {
    let id = &scene.scene.scene_id;
    let gt = scene
        .scene
        .future_points()
        .ok_or_else(|| BaselineError::MissingFuture(id.clone()))?;
    let (set, clamped) = predict_cartesian(predictor, scene)?;
    let score =
        SceneScore::evaluate(&set, &gt).map_err(|e| BaselineError::Metrics(id.clone(), e))?;
    Ok(Scored {
        score,
        clamped: clamped > 0,
    })
}

/// Scores scenes on all available cores; results keep the input order.
fn score_all(
    predictor: &dyn Predictor,
    scenes: &[FramedScene<'_>],
) -> Result<Vec<Scored>, BaselineError> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = scenes.len().div_ceil(workers).max(1);
    thread::scope(|scope| {
        let handles: Vec<_> = scenes
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|s| score_scene(predictor, s))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(scenes.len());
        for h in handles {
            out.extend(h.join().expect("scoring thread panicked")?);
        }
        Ok(out)
    })
}

/// Evaluates `predictor` on the validation (seen) and test (unseen) scenes
/// of `split`, with one extra report per domain.
pub fn run_benchmark_with(
    split: &DomainSplit,
    scenes: &[Scene],
    frame: Frame,
    predictor: &dyn Predictor,
) -> Result<BenchmarkReport, BaselineError> {
    let by_id = index_scenes(split, scenes)?;
    let val = framed_partition(split, &by_id, Partition::Val, frame)?;
    let test = framed_partition(split, &by_id, Partition::Test, frame)?;
    if val.is_empty() {
        return Err(BaselineError::EmptyPartition(Partition::Val));
    }
    if test.is_empty() {
        return Err(BaselineError::EmptyPartition(Partition::Test));
    }
    let seen = score_all(predictor, &val)?;
    let unseen = score_all(predictor, &test)?;

    let aggregate = |group: Group, scores: &[SceneScore]| {
        MetricsReport::aggregate(group, scores, MISS_THRESHOLD)
            .map_err(|e| BaselineError::Metrics(group.to_string(), e))
    };
    let seen_scores: Vec<SceneScore> = seen.iter().map(|s| s.score.clone()).collect();
    let unseen_scores: Vec<SceneScore> = unseen.iter().map(|s| s.score.clone()).collect();
    let mut reports = vec![
        aggregate(Group::Seen, &seen_scores)?,
        aggregate(Group::Unseen, &unseen_scores)?,
    ];

    let mut by_domain: BTreeMap<usize, Vec<SceneScore>> = BTreeMap::new();
    let mut scene_scores = Vec::with_capacity(seen.len() + unseen.len());
    let mut clamped_scenes = Vec::new();
    for s in seen.into_iter().chain(unseen) {
        by_domain
            .entry(split.assignments[&s.score.scene_id])
            .or_default()
            .push(s.score.clone());
        if s.clamped {
            clamped_scenes.push(s.score.scene_id.clone());
        }
        scene_scores.push(s.score);
    }
    for (domain, scores) in &by_domain {
        reports.push(aggregate(Group::Domain(*domain), scores)?);
    }
    scene_scores.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    clamped_scenes.sort();

    Ok(BenchmarkReport {
        frame,
        degradation: degradation(&reports[0], &reports[1]),
        reports,
        scene_scores,
        clamped_scenes,
    })
}
