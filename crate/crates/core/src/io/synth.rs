//! Synthetic scene corpus over parameterized road geometries.
//!
//! Roads are chains of straight and circular pieces, sampled at no more than
//! [`SAMPLE_SPACING`] meters along arcs. Each scene is placed with a random
//! rotation and translation. The agent follows the road at a speed drawn from
//! the family's range with a small constant acceleration, plus a smooth
//! sinusoidal lateral wobble whose standard deviation is [`LATERAL_SIGMA`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{CartesianPoint, Polyline};
use crate::scene::{Scene, TimedPoint, HISTORY_LEN, HORIZON_LEN, TIME_STEP};

use super::scene_file::SceneFile;

pub const SAMPLE_SPACING: f64 = 0.5;
pub const LATERAL_SIGMA: f64 = 0.1;
pub const MAX_ACCELERATION: f64 = 0.5;
pub const DEFAULT_SPEED: (f64, f64) = (5.0, 15.0);
const LANE_WIDTH: (f64, f64) = (3.2, 3.8);
const WOBBLE_OMEGA: (f64, f64) = (0.2, 0.6);
const MAX_ARC_ANGLE: f64 = 1.5 * PI;
const LEAD_OUT: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Straight,
    Arc,
    SCurve,
    RightTurn,
    RoundaboutArc,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::Straight,
        FamilyKind::Arc,
        FamilyKind::SCurve,
        FamilyKind::RightTurn,
        FamilyKind::RoundaboutArc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Straight => "straight",
            FamilyKind::Arc => "arc",
            FamilyKind::SCurve => "s-curve",
            FamilyKind::RightTurn => "right-turn",
            FamilyKind::RoundaboutArc => "roundabout-arc",
        }
    }

    /// Default radius range in meters; `None` for straight roads.
    pub fn default_radius(self) -> Option<(f64, f64)> {
        match self {
            FamilyKind::Straight => None,
            FamilyKind::Arc => Some((20.0, 50.0)),
            FamilyKind::SCurve => Some((25.0, 45.0)),
            FamilyKind::RightTurn => Some((12.0, 25.0)),
            FamilyKind::RoundaboutArc => Some((20.0, 35.0)),
        }
    }
}

/// A geometry family: road kind, radius range and speed range.
///
/// Text form: `kind[:rmin:rmax][@vmin:vmax]`, e.g. `arc:20:30@5:10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub radius: Option<(f64, f64)>,
    pub speed: (f64, f64),
}

impl FamilySpec {
    pub fn new(kind: FamilyKind) -> Self {
        Self {
            kind,
            radius: kind.default_radius(),
            speed: DEFAULT_SPEED,
        }
    }

    pub fn with_radius(mut self, lo: f64, hi: f64) -> Self {
        self.radius = Some((lo, hi));
        self
    }

    pub fn with_speed(mut self, lo: f64, hi: f64) -> Self {
        self.speed = (lo, hi);
        self
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if let Some((lo, hi)) = self.radius {
            write!(f, ":{lo}:{hi}")?;
        }
        if self.speed != DEFAULT_SPEED {
            write!(f, "@{}:{}", self.speed.0, self.speed.1)?;
        }
        Ok(())
    }
}

fn parse_range(text: &str, what: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("{what} range {text:?} is not lo:hi"))?;
    let lo: f64 = a.parse().map_err(|_| format!("bad {what} {a:?}"))?;
    let hi: f64 = b.parse().map_err(|_| format!("bad {what} {b:?}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("{what} range {lo}..{hi} is empty or not finite"));
    }
    Ok((lo, hi))
}

impl FromStr for FamilySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (geometry, speed) = match s.split_once('@') {
            Some((g, v)) => (g, Some(v)),
            None => (s, None),
        };
        let (name, radius) = match geometry.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (geometry, None),
        };
        let kind = FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| format!("unknown family {name:?}"))?;
        let mut spec = FamilySpec::new(kind);
        if let Some(r) = radius {
            if kind == FamilyKind::Straight {
                return Err("straight family takes no radius".into());
            }
            let (lo, hi) = parse_range(r, "radius")?;
            if lo <= 0.0 {
                return Err("radius must be positive".into());
            }
            spec.radius = Some((lo, hi));
        }
        if let Some(v) = speed {
            let (lo, hi) = parse_range(v, "speed")?;
            if lo < 0.0 {
                return Err("speed must be non-negative".into());
            }
            spec.speed = (lo, hi);
        }
        Ok(spec)
    }
}

/// One spec per family kind with default ranges.
pub fn default_families() -> Vec<FamilySpec> {
    FamilyKind::ALL.into_iter().map(FamilySpec::new).collect()
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Line(f64),
    /// Radius and signed turn angle (positive turns left).
    Arc(f64, f64),
}

impl Piece {
    fn length(self) -> f64 {
        match self {
            Piece::Line(l) => l,
            Piece::Arc(r, a) => r * a.abs(),
        }
    }

    fn curvature(self) -> f64 {
        match self {
            Piece::Line(_) => 0.0,
            Piece::Arc(r, a) => a.signum() / r,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pose {
    pos: CartesianPoint,
    heading: f64,
}

impl Pose {
    fn normal(self) -> CartesianPoint {
        CartesianPoint::new(-self.heading.sin(), self.heading.cos())
    }

    fn advance(self, kappa: f64, u: f64) -> Pose {
        let h = self.heading;
        if kappa == 0.0 {
            return Pose {
                pos: self.pos + CartesianPoint::new(h.cos(), h.sin()) * u,
                heading: h,
            };
        }
        let h1 = h + kappa * u;
        Pose {
            pos: self.pos
                + CartesianPoint::new((h1.sin() - h.sin()) / kappa, (h.cos() - h1.cos()) / kappa),
            heading: h1,
        }
    }
}

/// Road starting at the origin heading along +x.
struct Road {
    pieces: Vec<Piece>,
    starts: Vec<(f64, Pose)>,
}

impl Road {
    fn new(pieces: Vec<Piece>) -> Self {
        let mut starts = Vec::with_capacity(pieces.len());
        let mut s = 0.0;
        let mut pose = Pose {
            pos: CartesianPoint::new(0.0, 0.0),
            heading: 0.0,
        };
        for &p in &pieces {
            starts.push((s, pose));
            pose = pose.advance(p.curvature(), p.length());
            s += p.length();
        }
        Self { pieces, starts }
    }

    fn pose(&self, s: f64) -> Pose {
        let i = self
            .starts
            .iter()
            .rposition(|&(s0, _)| s0 <= s)
            .unwrap_or(0);
        let (s0, start) = self.starts[i];
        start.advance(self.pieces[i].curvature(), s - s0)
    }

    fn samples(&self) -> Vec<Pose> {
        let mut out = vec![self.starts[0].1];
        for (&piece, &(_, start)) in self.pieces.iter().zip(&self.starts) {
            let len = piece.length();
            let n = match piece {
                Piece::Line(_) => 1,
                Piece::Arc(..) => (len / SAMPLE_SPACING).ceil().max(1.0) as usize,
            };
            for k in 1..=n {
                out.push(start.advance(piece.curvature(), len * k as f64 / n as f64));
            }
        }
        out
    }
}

struct Placement {
    angle: f64,
    offset: CartesianPoint,
}

impl Placement {
    fn apply(&self, p: CartesianPoint) -> CartesianPoint {
        let (sin, cos) = self.angle.sin_cos();
        CartesianPoint::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y) + self.offset
    }

    fn polyline(&self, pts: impl IntoIterator<Item = CartesianPoint>) -> Polyline {
        Polyline::new(pts.into_iter().map(|p| self.apply(p)).collect())
            .expect("synthetic road has no degenerate segments")
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..=hi)
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Arc angle for `length` meters at `radius`, growing the radius when the
/// arc would exceed [`MAX_ARC_ANGLE`].
fn fitted_arc(radius: f64, length: f64, min_angle: f64) -> (f64, f64) {
    let angle = (length / radius).max(min_angle);
    if angle > MAX_ARC_ANGLE {
        (length / MAX_ARC_ANGLE, MAX_ARC_ANGLE)
    } else {
        (radius, angle)
    }
}

fn synthesize_scene(rng: &mut ChaCha8Rng, spec: &FamilySpec, family: usize, n: usize) -> Scene {
    let total_steps = HISTORY_LEN + HORIZON_LEN;
    let t_end = (total_steps - 1) as f64 * TIME_STEP;
    let t_last = (HISTORY_LEN - 1) as f64 * TIME_STEP;

    let v0 = uniform(rng, spec.speed);
    let a_lo = (-MAX_ACCELERATION).max((spec.speed.0 - v0) / t_end);
    let a_hi = MAX_ACCELERATION.min((spec.speed.1 - v0) / t_end);
    let accel = uniform(rng, (a_lo.min(0.0), a_hi.max(0.0)));
    let travel = |t: f64| v0 * t + 0.5 * accel * t * t;
    let span = travel(t_end);

    let radius = spec
        .radius
        .map(|r| uniform(rng, r))
        .unwrap_or(f64::INFINITY);
    let (pieces, s0) = match spec.kind {
        FamilyKind::Straight => {
            let s0 = uniform(rng, (20.0, 40.0));
            (vec![Piece::Line(s0 + span + LEAD_OUT)], s0)
        }
        FamilyKind::Arc => {
            let lead = 10.0;
            let s0 = lead + uniform(rng, (0.0, 5.0));
            let (r, angle) = fitted_arc(radius, s0 - lead + span + 10.0, 0.0);
            let turn = sign(rng);
            (
                vec![
                    Piece::Line(lead),
                    Piece::Arc(r, turn * angle),
                    Piece::Line(LEAD_OUT),
                ],
                s0,
            )
        }
        FamilyKind::SCurve => {
            let lead = 40.0;
            let r2 = uniform(rng, spec.radius.unwrap_or((25.0, 45.0)));
            let alpha = uniform(rng, (0.6, 1.0));
            let turn = sign(rng);
            let s_last = lead + uniform(rng, (0.0, 3.0));
            (
                vec![
                    Piece::Line(lead),
                    Piece::Arc(radius, turn * alpha),
                    Piece::Arc(r2, -turn * alpha),
                    Piece::Line(span + LEAD_OUT),
                ],
                s_last - travel(t_last),
            )
        }
        FamilyKind::RightTurn => {
            let lead = 40.0;
            let s_last = lead + uniform(rng, (-3.0, 3.0));
            (
                vec![
                    Piece::Line(lead),
                    Piece::Arc(radius, -FRAC_PI_2),
                    Piece::Line(span + LEAD_OUT),
                ],
                s_last - travel(t_last),
            )
        }
        FamilyKind::RoundaboutArc => {
            let (entry_r, entry_angle) = (12.0, 0.6);
            let circle_start = 40.0 + entry_r * entry_angle;
            let s0 = circle_start + uniform(rng, (0.0, 5.0));
            let (r, angle) = fitted_arc(radius, s0 - circle_start + span + 10.0, FRAC_PI_2);
            (
                vec![
                    Piece::Line(40.0),
                    Piece::Arc(entry_r, -entry_angle),
                    Piece::Arc(r, angle),
                    Piece::Arc(entry_r, -entry_angle),
                    Piece::Line(LEAD_OUT),
                ],
                s0,
            )
        }
    };
    let road = Road::new(pieces);

    let amplitude = LATERAL_SIGMA * std::f64::consts::SQRT_2;
    let omega = uniform(rng, WOBBLE_OMEGA);
    let phase = uniform(rng, (0.0, TAU));
    let lane_width = uniform(rng, LANE_WIDTH);
    let placement = Placement {
        angle: uniform(rng, (0.0, TAU)),
        offset: CartesianPoint::new(
            uniform(rng, (-1000.0, 1000.0)),
            uniform(rng, (-1000.0, 1000.0)),
        ),
    };

    let track: Vec<TimedPoint> = (0..total_steps)
        .map(|i| {
            let t = i as f64 * TIME_STEP;
            let pose = road.pose(s0 + travel(t));
            let p =
                placement.apply(pose.pos + pose.normal() * (amplitude * (omega * t + phase).sin()));
            TimedPoint { t, point: p }
        })
        .collect();
    let (observed, future) = track.split_at(HISTORY_LEN);

    let samples = road.samples();
    let offset = |w: f64| -> Vec<CartesianPoint> {
        samples.iter().map(|p| p.pos + p.normal() * w).collect()
    };
    let cross = road.pose(s0 + travel(t_last) + 20.0);
    let cross_line = vec![
        cross.pos - cross.normal() * 50.0,
        cross.pos + cross.normal() * 50.0,
    ];

    let mut distractors = vec![
        placement.polyline(offset(lane_width)),
        placement.polyline(offset(-lane_width)),
        placement.polyline(cross_line),
    ];
    distractors.shuffle(rng);
    let n_candidates = rng.random_range(1..=4usize);
    let mut centerlines = vec![placement.polyline(offset(0.0))];
    centerlines.extend(distractors.into_iter().take(n_candidates - 1));
    centerlines.shuffle(rng);

    Scene {
        scene_id: format!("f{family}-{}-{n:05}", spec.kind.name()),
        observed: observed.to_vec(),
        future: Some(future.to_vec()),
        centerlines,
        boundaries: vec![
            placement.polyline(offset(0.5 * lane_width)),
            placement.polyline(offset(-0.5 * lane_width)),
        ],
        domain: Some(family),
    }
}

/// Deterministic corpus of `n_per_family` scenes per family. Scene domains
/// are family indices. Each family draws from its own random stream, so
/// adding a family leaves the others unchanged.
pub fn synthesize_corpus(seed: u64, families: &[FamilySpec], n_per_family: usize) -> SceneFile {
    let mut scenes = Vec::with_capacity(families.len() * n_per_family);
    for (fi, spec) in families.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fi as u64);
        for n in 0..n_per_family {
            scenes.push(synthesize_scene(&mut rng, spec, fi, n));
        }
    }
    SceneFile {
        scenes,
        ..SceneFile::default()
    }
}
