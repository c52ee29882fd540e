//! Position-error maps around a ground-truth point, measured in both frames.

use thiserror::Error;

use crate::geometry::{project_point_to_polyline, signed_offset, CartesianPoint, Polyline};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErrorFieldError {
    #[error("resolution and half extent must be positive and finite")]
    BadGrid,
    #[error("ground-truth point {0} lies outside the mapped region")]
    Unmapped(CartesianPoint),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCell {
    pub point: CartesianPoint,
    pub cartesian_error: f64,
    /// NaN when the cell is outside the mapped region.
    pub frenet_error: f64,
    /// `frenet_error - cartesian_error`; NaN when excluded.
    pub difference: f64,
}

impl ErrorCell {
    pub fn is_mapped(&self) -> bool {
        self.frenet_error.is_finite()
    }
}

/// Square grid of `size * size` cells, row-major from the lowest y.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorFieldGrid {
    pub center: CartesianPoint,
    pub resolution: f64,
    pub half_extent: f64,
    pub size: usize,
    pub cells: Vec<ErrorCell>,
    pub excluded: usize,
}

impl ErrorFieldGrid {
    pub fn cell(&self, row: usize, col: usize) -> &ErrorCell {
        &self.cells[row * self.size + col]
    }

    pub fn center_cell(&self) -> &ErrorCell {
        let mid = self.size / 2;
        self.cell(mid, mid)
    }

    /// Largest |difference| over mapped cells.
    pub fn max_abs_difference(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.is_mapped())
            .fold(0.0, |m, c| m.max(c.difference.abs()))
    }
}

/// Unrebased (s, d) of `p`, or `None` when its perpendicular foot would fall
/// before the start or past the end of the path.
fn raw_frenet(p: CartesianPoint, path: &Polyline) -> Option<(f64, f64)> {
    let first_dir = path.segment_dirs()[0];
    let last = path.segment_count() - 1;
    let last_start = path.vertices()[last];
    let tol = 1e-9;
    if (p - path.first()).dot(first_dir) < -tol
        || (p - last_start).dot(path.segment_dirs()[last]) > path.segment_lengths()[last] + tol
    {
        return None;
    }
    let proj = project_point_to_polyline(p, path);
    Some((path.raw_arc(&proj), signed_offset(p, &proj, path)))
}

pub fn compute_error_field(
    gt: CartesianPoint,
    reference: &Polyline,
    resolution: f64,
    half_extent: f64,
) -> Result<ErrorFieldGrid, ErrorFieldError> {
    if !(resolution > 0.0 && half_extent > 0.0 && resolution.is_finite() && half_extent.is_finite())
    {
        return Err(ErrorFieldError::BadGrid);
    }
    let (s_gt, d_gt) = raw_frenet(gt, reference).ok_or(ErrorFieldError::Unmapped(gt))?;
    let n = (half_extent / resolution).round() as i64;
    let size = (2 * n + 1) as usize;
    let mut cells = Vec::with_capacity(size * size);
    let mut excluded = 0;
    for row in -n..=n {
        for col in -n..=n {
            let point = gt + CartesianPoint::new(col as f64 * resolution, row as f64 * resolution);
            let cartesian_error = point.distance(gt);
            let frenet_error = match raw_frenet(point, reference) {
                Some((s, d)) => (s - s_gt).hypot(d - d_gt),
                None => {
                    excluded += 1;
                    f64::NAN
                }
            };
            cells.push(ErrorCell {
                point,
                cartesian_error,
                frenet_error,
                difference: frenet_error - cartesian_error,
            });
        }
    }
    Ok(ErrorFieldGrid {
        center: gt,
        resolution,
        half_extent,
        size,
        cells,
        excluded,
    })
}
