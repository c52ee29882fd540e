use nalgebra::{DMatrix, SymmetricEigen};

use super::DomainError;

/// Columns with a standard deviation below this are centered but not scaled.
const MIN_SCALE: f64 = 1e-12;

/// A fitted standardize-then-project model onto the top two principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Two unit principal axes, each with its largest-magnitude entry positive.
    pub basis: [Vec<f64>; 2],
    /// All covariance eigenvalues of the standardized data, descending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub embedded: Vec<[f64; 2]>,
    pub model: Pca,
}

impl Pca {
    pub fn dimension(&self) -> usize {
        self.means.len()
    }

    pub fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, row: &[f64]) -> [f64; 2] {
        let z = self.standardize(row);
        [dot(&z, &self.basis[0]), dot(&z, &self.basis[1])]
    }

    /// Maps an embedding back into standardized feature space.
    pub fn reconstruct_standardized(&self, embedded: [f64; 2]) -> Vec<f64> {
        self.basis[0]
            .iter()
            .zip(&self.basis[1])
            .map(|(a, b)| embedded[0] * a + embedded[1] * b)
            .collect()
    }

    /// Share of total standardized variance carried by the two kept axes.
    pub fn explained_variance_ratio(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        if total == 0.0 {
            return 0.0;
        }
        (self.eigenvalues[0].max(0.0) + self.eigenvalues[1].max(0.0)) / total
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standardizes each column (population variance) and projects the rows
/// onto the top two eigenvectors of the covariance matrix.
pub fn pca_reduce<R: AsRef<[f64]>>(rows: &[R]) -> Result<PcaResult, DomainError> {
    let n = rows.len();
    if n < 3 {
        return Err(DomainError::TooFewRows { got: n, need: 3 });
    }
    let dim = rows[0].as_ref().len();
    if dim < 2 {
        return Err(DomainError::BadMatrix(format!(
            "need at least 2 columns, got {dim}"
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != dim {
            return Err(DomainError::BadMatrix(format!(
                "row {i} has {} columns, expected {dim}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(DomainError::BadMatrix(format!("row {i} is not finite")));
        }
    }

    let nf = n as f64;
    let means: Vec<f64> = (0..dim)
        .map(|c| rows.iter().map(|r| r.as_ref()[c]).sum::<f64>() / nf)
        .collect();
    let scales: Vec<f64> = (0..dim)
        .map(|c| {
            let var = rows
                .iter()
                .map(|r| (r.as_ref()[c] - means[c]).powi(2))
                .sum::<f64>()
                / nf;
            let sd = var.sqrt();
            if sd < MIN_SCALE {
                1.0
            } else {
                sd
            }
        })
        .collect();

    let z = DMatrix::from_fn(n, dim, |i, c| (rows[i].as_ref()[c] - means[c]) / scales[c]);
    let cov = (z.transpose() * &z) / nf;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let axis = |k: usize| -> Vec<f64> {
        let col = eig.eigenvectors.column(order[k]);
        let mut v: Vec<f64> = col.iter().copied().collect();
        let mut pivot = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let model = Pca {
        basis: [axis(0), axis(1)],
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        means,
        scales,
    };
    let embedded = rows.iter().map(|r| model.transform(r.as_ref())).collect();
    Ok(PcaResult { embedded, model })
}
