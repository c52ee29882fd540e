//! Planar polyline geometry and the Cartesian <-> Frenet conversion.
//!
//! A reference path is a piecewise-linear centerline. Points project onto the
//! globally nearest segment; points that sit in the wedge outside a convex
//! joint (no perpendicular foot on either adjacent segment) collapse onto the
//! joint, whose "normal" is the bisector of the two segment normals.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

/// Segments shorter than this are rejected when building a [`Polyline`].
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

/// Slack allowed on the arc-length range before the inverse transform errors.
pub const ARC_RANGE_TOLERANCE: f64 = 1e-6;

/// Raw arc lengths this close to an interior vertex use the joint bisector.
const JOINT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("polyline needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("degenerate segment {index} (length {length:e} m)")]
    DegenerateSegment { index: usize, length: f64 },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("point {index}: arc length {arc} m outside mapped range [0, {length}] m")]
    OutOfRange { index: usize, arc: f64, length: f64 },
    #[error("vertex {index} is not an interior joint of a {vertices}-vertex polyline")]
    NotInteriorJoint { index: usize, vertices: usize },
}

/// A position (or displacement) in the map frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
}

impl CartesianPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn left_normal(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for CartesianPoint {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for CartesianPoint {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

impl Add for CartesianPoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for CartesianPoint {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for CartesianPoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for CartesianPoint {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for CartesianPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl fmt::Display for CartesianPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Lane-relative position: arc length `s` along the reference path and
/// signed offset `d`, positive to the left of the travel direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrenetPoint {
    pub s: f64,
    pub d: f64,
}

impl FrenetPoint {
    pub const fn new(s: f64, d: f64) -> Self {
        Self { s, d }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.s, self.d]
    }
}

impl From<[f64; 2]> for FrenetPoint {
    fn from([s, d]: [f64; 2]) -> Self {
        Self { s, d }
    }
}

/// Closest point on a single closed segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProjection {
    pub foot: CartesianPoint,
    /// Position of the foot within the segment, in `[0, 1]`.
    pub along: f64,
    pub distance: f64,
}

/// Closest point on a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub foot: CartesianPoint,
    pub segment_index: usize,
    pub along: f64,
    /// The point lies in the wedge of the interior vertex `segment_index + 1`.
    pub at_joint: bool,
    pub distance: f64,
}

/// Geometry of an interior vertex where two segments meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointWedge {
    pub joint: CartesianPoint,
    pub incoming_dir: CartesianPoint,
    pub outgoing_dir: CartesianPoint,
    /// Unit bisector of the two segment left-normals.
    pub bisector_normal: CartesianPoint,
}

impl JointWedge {
    /// Travel direction at the joint, perpendicular to the bisector normal.
    pub fn tangent(&self) -> CartesianPoint {
        CartesianPoint::new(self.bisector_normal.y, -self.bisector_normal.x)
    }
}

/// An ordered, immutable centerline with cached segment geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<CartesianPoint>,
    cumulative_arc: Vec<f64>,
    segment_dirs: Vec<CartesianPoint>,
    segment_lengths: Vec<f64>,
}

impl Polyline {
    pub fn new(vertices: Vec<CartesianPoint>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        let mut cumulative_arc = Vec::with_capacity(vertices.len());
        let mut segment_dirs = Vec::with_capacity(vertices.len() - 1);
        let mut segment_lengths = Vec::with_capacity(vertices.len() - 1);
        cumulative_arc.push(0.0);
        for (index, pair) in vertices.windows(2).enumerate() {
            let delta = pair[1] - pair[0];
            let length = delta.norm();
            if length <= MIN_SEGMENT_LENGTH {
                return Err(GeometryError::DegenerateSegment { index, length });
            }
            segment_dirs.push(delta * (1.0 / length));
            segment_lengths.push(length);
            cumulative_arc.push(cumulative_arc[index] + length);
        }
        Ok(Self {
            vertices,
            cumulative_arc,
            segment_dirs,
            segment_lengths,
        })
    }

    pub fn from_xy(points: &[[f64; 2]]) -> Result<Self, GeometryError> {
        Self::new(points.iter().copied().map(CartesianPoint::from).collect())
    }

    pub fn vertices(&self) -> &[CartesianPoint] {
        &self.vertices
    }

    pub fn cumulative_arc(&self) -> &[f64] {
        &self.cumulative_arc
    }

    pub fn segment_dirs(&self) -> &[CartesianPoint] {
        &self.segment_dirs
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.segment_lengths
    }

    pub fn segment_count(&self) -> usize {
        self.segment_dirs.len()
    }

    pub fn total_length(&self) -> f64 {
        self.cumulative_arc[self.cumulative_arc.len() - 1]
    }

    pub fn first(&self) -> CartesianPoint {
        self.vertices[0]
    }

    pub fn last(&self) -> CartesianPoint {
        self.vertices[self.vertices.len() - 1]
    }

    /// Signed turn angle (radians, counter-clockwise positive) at each
    /// interior vertex.
    pub fn turn_angles(&self) -> Vec<f64> {
        self.segment_dirs
            .windows(2)
            .map(|w| w[0].cross(w[1]).atan2(w[0].dot(w[1])))
            .collect()
    }

    pub fn joint_wedge(&self, joint_index: usize) -> Result<JointWedge, GeometryError> {
        if joint_index == 0 || joint_index + 1 >= self.vertices.len() {
            return Err(GeometryError::NotInteriorJoint {
                index: joint_index,
                vertices: self.vertices.len(),
            });
        }
        Ok(self.wedge_unchecked(joint_index))
    }

    fn wedge_unchecked(&self, joint_index: usize) -> JointWedge {
        let incoming_dir = self.segment_dirs[joint_index - 1];
        let outgoing_dir = self.segment_dirs[joint_index];
        let sum = incoming_dir.left_normal() + outgoing_dir.left_normal();
        let norm = sum.norm();
        // A full reversal has no bisector; fall back to the incoming normal.
        let bisector_normal = if norm > 1e-12 {
            sum * (1.0 / norm)
        } else {
            incoming_dir.left_normal()
        };
        JointWedge {
            joint: self.vertices[joint_index],
            incoming_dir,
            outgoing_dir,
            bisector_normal,
        }
    }

    /// Raw (un-rebased) arc length of a projection's foot.
    pub fn raw_arc(&self, proj: &Projection) -> f64 {
        if proj.at_joint {
            self.cumulative_arc[proj.segment_index + 1]
        } else {
            self.cumulative_arc[proj.segment_index]
                + proj.along * self.segment_lengths[proj.segment_index]
        }
    }

    /// Foot point and unit left-normal at a raw arc length already clamped to
    /// `[0, total_length]`.
    fn frame_at(&self, raw: f64) -> (CartesianPoint, CartesianPoint) {
        let cum = &self.cumulative_arc;
        let upper = cum.partition_point(|&c| c < raw);
        for v in [upper.saturating_sub(1), upper] {
            if v > 0 && v + 1 < self.vertices.len() && (raw - cum[v]).abs() <= JOINT_SNAP {
                return (self.vertices[v], self.wedge_unchecked(v).bisector_normal);
            }
        }
        let seg = upper.saturating_sub(1).min(self.segment_count() - 1);
        let dir = self.segment_dirs[seg];
        (
            self.vertices[seg] + dir * (raw - cum[seg]),
            dir.left_normal(),
        )
    }
}

fn project_on_segment(
    point: CartesianPoint,
    start: CartesianPoint,
    end: CartesianPoint,
    dir: CartesianPoint,
    length: f64,
) -> SegmentProjection {
    let along = ((point - start).dot(dir) / length).clamp(0.0, 1.0);
    let foot = if along == 0.0 {
        start
    } else if along == 1.0 {
        end
    } else {
        start + dir * (along * length)
    };
    SegmentProjection {
        foot,
        along,
        distance: point.distance(foot),
    }
}

/// Closest point on the closed segment `[seg_start, seg_end]`.
pub fn project_point_to_segment(
    point: CartesianPoint,
    seg_start: CartesianPoint,
    seg_end: CartesianPoint,
) -> Result<SegmentProjection, GeometryError> {
    let delta = seg_end - seg_start;
    let length = delta.norm();
    if length <= MIN_SEGMENT_LENGTH {
        return Err(GeometryError::DegenerateSegment { index: 0, length });
    }
    Ok(project_on_segment(
        point,
        seg_start,
        seg_end,
        delta * (1.0 / length),
        length,
    ))
}

/// Globally nearest projection onto `path`.
///
/// Equidistant candidates resolve to the smallest segment index, so a point
/// in a joint wedge is reported on the incoming segment with `along == 1`.
pub fn project_point_to_polyline(point: CartesianPoint, path: &Polyline) -> Projection {
    let verts = &path.vertices;
    let mut best_index = 0;
    let mut best = project_on_segment(
        point,
        verts[0],
        verts[1],
        path.segment_dirs[0],
        path.segment_lengths[0],
    );
    for j in 1..path.segment_count() {
        let candidate = project_on_segment(
            point,
            verts[j],
            verts[j + 1],
            path.segment_dirs[j],
            path.segment_lengths[j],
        );
        if candidate.distance < best.distance {
            best = candidate;
            best_index = j;
        }
    }
    if best.along == 0.0 && best_index > 0 {
        best_index -= 1;
        best.along = 1.0;
    }
    let at_joint = best.along == 1.0 && best_index + 1 < path.segment_count();
    Projection {
        foot: best.foot,
        segment_index: best_index,
        along: best.along,
        at_joint,
        distance: best.distance,
    }
}

/// Signed lateral offset: `+distance` left of the local travel direction,
/// `-distance` right of it, `+0` on the path.
pub fn signed_offset(point: CartesianPoint, proj: &Projection, path: &Polyline) -> f64 {
    if proj.distance == 0.0 {
        return 0.0;
    }
    let dir = if proj.at_joint {
        path.wedge_unchecked(proj.segment_index + 1).tangent()
    } else {
        path.segment_dirs[proj.segment_index]
    };
    if dir.cross(point - proj.foot) >= 0.0 {
        proj.distance
    } else {
        -proj.distance
    }
}

/// Whether `point` has no perpendicular foot inside either segment adjacent
/// to the interior vertex `joint_index`. The joint itself is a member.
pub fn wedge_membership(
    point: CartesianPoint,
    joint_index: usize,
    path: &Polyline,
) -> Result<bool, GeometryError> {
    let wedge = path.joint_wedge(joint_index)?;
    let rel = point - wedge.joint;
    Ok(rel.dot(wedge.incoming_dir) >= 0.0 && rel.dot(wedge.outgoing_dir) <= 0.0)
}

/// A trajectory expressed in a reference path's Frenet frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrenetTrajectory {
    pub points: Vec<FrenetPoint>,
    /// Raw arc length of the first point's projection; `s` values are
    /// relative to it.
    pub s1_raw: f64,
}

pub fn cartesian_to_frenet(
    traj: &[CartesianPoint],
    path: &Polyline,
) -> Result<FrenetTrajectory, GeometryError> {
    if traj.is_empty() {
        return Err(GeometryError::EmptyTrajectory);
    }
    if let Some(i) = traj.iter().position(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite(i));
    }
    let raw: Vec<(f64, f64)> = traj
        .iter()
        .map(|&p| {
            let proj = project_point_to_polyline(p, path);
            (path.raw_arc(&proj), signed_offset(p, &proj, path))
        })
        .collect();
    let s1_raw = raw[0].0;
    Ok(FrenetTrajectory {
        points: raw
            .into_iter()
            .map(|(s, d)| FrenetPoint::new(s - s1_raw, d))
            .collect(),
        s1_raw,
    })
}

/// Inverse transform. Fails if any point's arc length leaves the path by
/// more than [`ARC_RANGE_TOLERANCE`].
pub fn frenet_to_cartesian(
    pts: &[FrenetPoint],
    path: &Polyline,
    s1_raw: f64,
) -> Result<Vec<CartesianPoint>, GeometryError> {
    let length = path.total_length();
    pts.iter()
        .enumerate()
        .map(|(index, p)| {
            let raw = p.s + s1_raw;
            if !(p.d.is_finite() && raw.is_finite()) {
                return Err(GeometryError::NonFinite(index));
            }
            if raw < -ARC_RANGE_TOLERANCE || raw > length + ARC_RANGE_TOLERANCE {
                return Err(GeometryError::OutOfRange {
                    index,
                    arc: raw,
                    length,
                });
            }
            let (foot, normal) = path.frame_at(raw.clamp(0.0, length));
            Ok(foot + normal * p.d)
        })
        .collect()
}

/// Inverse transform that clamps out-of-range arc lengths to the path ends
/// instead of failing. Returns the points and how many were clamped.
pub fn frenet_to_cartesian_clamped(
    pts: &[FrenetPoint],
    path: &Polyline,
    s1_raw: f64,
) -> (Vec<CartesianPoint>, usize) {
    let length = path.total_length();
    let mut clamped = 0;
    let out = pts
        .iter()
        .map(|p| {
            let raw = p.s + s1_raw;
            if raw < -ARC_RANGE_TOLERANCE || raw > length + ARC_RANGE_TOLERANCE {
                clamped += 1;
            }
            let (foot, normal) = path.frame_at(raw.clamp(0.0, length));
            foot + normal * p.d
        })
        .collect();
    (out, clamped)
}
