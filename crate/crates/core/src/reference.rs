//! Reference-path selection: score each candidate centerline against the
//! observed history by proximity and by shape, then take the best total.

use thiserror::Error;

use crate::geometry::{project_point_to_polyline, CartesianPoint, Polyline};

/// Floor applied to both mean distances before taking reciprocals.
pub const DISTANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("history needs at least 2 points, got {0}")]
    ShortHistory(usize),
    #[error("no candidate centerlines")]
    NoCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub candidate_index: usize,
    /// Reciprocal mean distance between history points and their projections.
    pub distance_similarity: f64,
    /// Reciprocal mean distance after shifting the projections so the
    /// current position's projection coincides with the current position.
    pub shape_similarity: f64,
    pub translation: CartesianPoint,
    pub total: f64,
}

/// Scores one candidate. The last history point is the current position.
pub fn score_candidate(
    history: &[CartesianPoint],
    candidate: &Polyline,
) -> Result<CandidateScore, SelectionError> {
    score_indexed(0, history, candidate)
}

fn score_indexed(
    candidate_index: usize,
    history: &[CartesianPoint],
    candidate: &Polyline,
) -> Result<CandidateScore, SelectionError> {
    let n = history.len();
    if n < 2 {
        return Err(SelectionError::ShortHistory(n));
    }
    let feet: Vec<CartesianPoint> = history
        .iter()
        .map(|&p| project_point_to_polyline(p, candidate).foot)
        .collect();
    let translation = history[n - 1] - feet[n - 1];
    let mean_distance = history
        .iter()
        .zip(&feet)
        .map(|(&p, &f)| p.distance(f))
        .sum::<f64>()
        / n as f64;
    let mean_shape = history
        .iter()
        .zip(&feet)
        .map(|(&p, &f)| p.distance(f + translation))
        .sum::<f64>()
        / n as f64;
    let distance_similarity = 1.0 / mean_distance.max(DISTANCE_FLOOR);
    let shape_similarity = 1.0 / mean_shape.max(DISTANCE_FLOOR);
    Ok(CandidateScore {
        candidate_index,
        distance_similarity,
        shape_similarity,
        translation,
        total: distance_similarity + shape_similarity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub scores: Vec<CandidateScore>,
}

/// Picks the candidate with the largest summed similarity; ties go to the
/// lowest index.
pub fn select_reference(
    history: &[CartesianPoint],
    candidates: &[Polyline],
) -> Result<Selection, SelectionError> {
    if candidates.is_empty() {
        return Err(SelectionError::NoCandidates);
    }
    let scores = candidates
        .iter()
        .enumerate()
        .map(|(j, c)| score_indexed(j, history, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut index = 0;
    for s in &scores[1..] {
        if s.total > scores[index].total {
            index = s.candidate_index;
        }
    }
    Ok(Selection { index, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xy: &[[f64; 2]]) -> Vec<CartesianPoint> {
        xy.iter().copied().map(CartesianPoint::from).collect()
    }

    fn x_axis() -> Polyline {
        Polyline::from_xy(&[[0.0, 0.0], [10.0, 0.0]]).unwrap()
    }

    /// Direct evaluation of the three scoring formulas on axis-aligned data
    /// where projections onto the x-axis are `(x, 0)`.
    fn x_axis_oracle(history: &[[f64; 2]]) -> (f64, [f64; 2], f64) {
        let n = history.len() as f64;
        let s1 = n / history
            .iter()
            .map(|p| p[1].abs())
            .sum::<f64>()
            .max(DISTANCE_FLOOR * n);
        let last = history[history.len() - 1];
        let dx = [0.0, last[1]];
        let shape = history.iter().map(|p| (p[1] - dx[1]).abs()).sum::<f64>() / n;
        (s1, dx, 1.0 / shape.max(DISTANCE_FLOOR))
    }

    #[test]
    fn on_line_history_hits_floor() {
        let s = score_candidate(&pts(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), &x_axis()).unwrap();
        assert_eq!(s.distance_similarity, 1e6);
        assert_eq!(s.shape_similarity, 1e6);
    }

    #[test]
    fn parallel_history() {
        let h = [[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]];
        let (s1, dx, s2) = x_axis_oracle(&h);
        assert_eq!((s1, dx, s2), (1.0, [0.0, 1.0], 1e6));
        let s = score_candidate(&pts(&h), &x_axis()).unwrap();
        assert_eq!(s.distance_similarity, 1.0);
        assert_eq!(s.translation, CartesianPoint::new(0.0, 1.0));
        assert_eq!(s.shape_similarity, 1e6);
        assert_eq!(s.total, s.distance_similarity + s.shape_similarity);
    }

    #[test]
    fn diverging_history() {
        let h = [[0.0, 1.0], [1.0, 2.0], [2.0, 3.0]];
        // residuals after the (0, 3) shift are 2, 1, 0
        let (s1, dx, s2) = x_axis_oracle(&h);
        assert_eq!((s1, dx, s2), (0.5, [0.0, 3.0], 1.0));
        let s = score_candidate(&pts(&h), &x_axis()).unwrap();
        assert_eq!(s.distance_similarity, 0.5);
        assert_eq!(s.translation, CartesianPoint::new(0.0, 3.0));
        assert_eq!(s.shape_similarity, 1.0);
    }

    #[test]
    fn short_history_rejected() {
        assert_eq!(
            score_candidate(&pts(&[[0.0, 0.0]]), &x_axis()).unwrap_err(),
            SelectionError::ShortHistory(1)
        );
    }

    #[test]
    fn selection_cases() {
        let h = pts(&[[0.0, 0.1], [1.0, 0.1], [2.0, 0.1], [3.0, 0.1]]);
        assert_eq!(select_reference(&h, &[x_axis()]).unwrap().index, 0);
        assert_eq!(
            select_reference(&h, &[]).unwrap_err(),
            SelectionError::NoCandidates
        );
        let far = Polyline::from_xy(&[[0.0, 5.0], [10.0, 5.0]]).unwrap();
        let sel = select_reference(&h, &[far.clone(), x_axis()]).unwrap();
        assert_eq!(sel.index, 1);
        assert!((sel.scores[1].distance_similarity - 10.0).abs() < 1e-9);
        assert!((sel.scores[0].distance_similarity - 1.0 / 4.9).abs() < 1e-9);
        assert_eq!(
            sel.scores[0].shape_similarity,
            sel.scores[1].shape_similarity
        );

        let twin = select_reference(&h, &[x_axis(), x_axis()]).unwrap();
        assert_eq!(twin.index, 0);
        assert_eq!(twin.scores[0].total, twin.scores[1].total);
    }
}
