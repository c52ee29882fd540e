use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DomainError;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<[f64; 2]>,
    pub iterations: usize,
    /// Within-cluster sum of squares after every center update.
    pub wcss_trace: Vec<f64>,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: [f64; 2], centers: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = dist2(p, centers[0]);
    for (c, &center) in centers.iter().enumerate().skip(1) {
        let d = dist2(p, center);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn wcss(points: &[[f64; 2]], assignments: &[usize], centers: &[[f64; 2]]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(&p, &a)| dist2(p, centers[a]))
        .sum()
}

/// Farthest-point seeding: a seeded random first center, then repeatedly the
/// point farthest from all chosen centers (lowest index on ties).
fn seed_centers(points: &[[f64; 2]], k: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut min_d: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let mut far = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[far] {
                far = i;
            }
        }
        let c = points[far];
        centers.push(c);
        for (d, &p) in min_d.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
    }
    centers
}

/// Moves centers to their members' means. An empty cluster takes over the
/// point farthest from its current center (from a cluster with more than one
/// member). Returns false when an empty cluster could not be repaired.
fn update_centers(
    points: &[[f64; 2]],
    assignments: &mut [usize],
    centers: &mut [[f64; 2]],
) -> bool {
    let k = centers.len();
    let recompute = |assignments: &[usize], centers: &mut [[f64; 2]]| -> Vec<usize> {
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (&p, &a) in points.iter().zip(assignments.iter()) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let n = counts[c] as f64;
                centers[c] = [sums[c][0] / n, sums[c][1] / n];
            }
        }
        counts
    };
    let mut counts = recompute(assignments, centers);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut donor: Option<(usize, f64)> = None;
        for (i, &p) in points.iter().enumerate() {
            let a = assignments[i];
            if counts[a] < 2 {
                continue;
            }
            let d = dist2(p, centers[a]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        match donor {
            Some((i, d)) if d > 0.0 => {
                assignments[i] = empty;
                centers[empty] = points[i];
                counts = recompute(assignments, centers);
            }
            _ => return false,
        }
    }
    true
}

/// Lloyd's algorithm on 2-D points, deterministic for a given seed.
///
/// Stops when an assignment pass changes nothing or after
/// [`MAX_ITERATIONS`] passes. The returned clustering may still contain an
/// empty cluster if the data has fewer than `k` distinct points.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64) -> Result<KMeansResult, DomainError> {
    if k == 0 || points.len() < k {
        return Err(DomainError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    if points
        .iter()
        .any(|p| !(p[0].is_finite() && p[1].is_finite()))
    {
        return Err(DomainError::BadMatrix("non-finite point".into()));
    }
    let mut centers = seed_centers(points, k, seed);
    let mut assignments: Vec<usize> = points.iter().map(|&p| nearest(p, &centers)).collect();
    let mut wcss_trace = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let repaired = update_centers(points, &mut assignments, &mut centers);
        wcss_trace.push(wcss(points, &assignments, &centers));
        if !repaired {
            break;
        }
        let mut changed = false;
        for (a, &p) in assignments.iter_mut().zip(points) {
            let n = nearest(p, &centers);
            if n != *a {
                *a = n;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KMeansResult {
        assignments,
        centers,
        iterations,
        wcss_trace,
    })
}
