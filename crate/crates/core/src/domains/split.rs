use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::{extract_features, FeatureVector};
use super::kmeans::kmeans;
use super::pca::{pca_reduce, Pca};
use super::DomainError;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        })
    }
}

impl FromStr for Partition {
    type Err = DomainError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Partition::Train),
            "val" => Ok(Partition::Val),
            "test" => Ok(Partition::Test),
            other => Err(DomainError::Inconsistent(format!(
                "unknown partition {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub k: usize,
    pub n_unseen: usize,
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            k: 10,
            n_unseen: 3,
            seed: 0,
            train_fraction: 0.8,
        }
    }
}

/// Domain assignment and train/val/test partition of a scene corpus.
///
/// Domain ids are ordered by descending size; the highest ids are unseen.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSplit {
    pub assignments: BTreeMap<String, usize>,
    /// Cluster centers in embedding space, indexed by domain id. Empty when
    /// the split was loaded from a manifest.
    pub centers: Vec<[f64; 2]>,
    pub seen_domains: BTreeSet<usize>,
    pub unseen_domains: BTreeSet<usize>,
    pub partition: BTreeMap<String, Partition>,
}

impl DomainSplit {
    /// Builds a split from known domain labels: the `unseen` domains become
    /// the test set and every other domain is shuffled into train/val.
    pub fn from_labels(
        labels: &[(String, usize)],
        unseen: &BTreeSet<usize>,
        train_fraction: f64,
        seed: u64,
    ) -> Result<Self, DomainError> {
        let mut assignments = BTreeMap::new();
        for (id, d) in labels {
            if assignments.insert(id.clone(), *d).is_some() {
                return Err(DomainError::DuplicateScene(id.clone()));
            }
        }
        let domains: BTreeSet<usize> = labels.iter().map(|(_, d)| *d).collect();
        let seen_domains: BTreeSet<usize> = domains.difference(unseen).copied().collect();
        let unseen_domains: BTreeSet<usize> = domains.intersection(unseen).copied().collect();
        let partition = assign_partitions(labels, &seen_domains, train_fraction, seed);
        let split = Self {
            assignments,
            centers: Vec::new(),
            seen_domains,
            unseen_domains,
            partition,
        };
        split.validate()?;
        Ok(split)
    }

    /// Rebuilds a split from manifest rows `(scene_id, domain, partition)`.
    pub fn from_manifest(rows: &[(String, usize, Partition)]) -> Result<Self, DomainError> {
        let mut assignments = BTreeMap::new();
        let mut partition = BTreeMap::new();
        let mut seen_domains = BTreeSet::new();
        let mut unseen_domains = BTreeSet::new();
        for (id, d, p) in rows {
            if assignments.insert(id.clone(), *d).is_some() {
                return Err(DomainError::DuplicateScene(id.clone()));
            }
            partition.insert(id.clone(), *p);
            match p {
                Partition::Test => unseen_domains.insert(*d),
                _ => seen_domains.insert(*d),
            };
        }
        let split = Self {
            assignments,
            centers: Vec::new(),
            seen_domains,
            unseen_domains,
            partition,
        };
        split.validate()?;
        Ok(split)
    }

    pub fn domain_count(&self) -> usize {
        self.seen_domains.len() + self.unseen_domains.len()
    }

    pub fn scenes_in(&self, part: Partition) -> Vec<&str> {
        self.partition
            .iter()
            .filter(|(_, &p)| p == part)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Checks that seen/unseen are disjoint, partition covers exactly the
    /// assigned scenes, and no unseen-domain scene is in train or val.
    pub fn validate(&self) -> Result<(), DomainError> {
        if let Some(d) = self.seen_domains.intersection(&self.unseen_domains).next() {
            return Err(DomainError::Inconsistent(format!(
                "domain {d} is both seen and unseen"
            )));
        }
        if self.assignments.len() != self.partition.len()
            || !self.assignments.keys().eq(self.partition.keys())
        {
            return Err(DomainError::Inconsistent(
                "assignments and partition cover different scenes".into(),
            ));
        }
        for (id, d) in &self.assignments {
            let p = self.partition[id];
            let ok = match p {
                Partition::Test => self.unseen_domains.contains(d),
                _ => self.seen_domains.contains(d),
            };
            if !ok {
                return Err(DomainError::Inconsistent(format!(
                    "scene {id} in {p} belongs to domain {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Per seen domain, a seeded shuffle of its scenes (in input order) with the
/// first `round(fraction * n)` going to train. Unseen-domain scenes are test.
fn assign_partitions(
    labels: &[(String, usize)],
    seen: &BTreeSet<usize>,
    train_fraction: f64,
    seed: u64,
) -> BTreeMap<String, Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut partition = BTreeMap::new();
    let mut by_domain: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (id, d) in labels {
        if seen.contains(d) {
            by_domain.entry(*d).or_default().push(id);
        } else {
            partition.insert(id.clone(), Partition::Test);
        }
    }
    for ids in by_domain.values_mut() {
        ids.shuffle(&mut rng);
        let n_train = (train_fraction * ids.len() as f64).round() as usize;
        for (i, id) in ids.iter().enumerate() {
            let p = if i < n_train {
                Partition::Train
            } else {
                Partition::Val
            };
            partition.insert(id.to_string(), p);
        }
    }
    partition
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutput {
    pub split: DomainSplit,
    /// One per scene, in input order, with `embedded` filled in.
    pub features: Vec<FeatureVector>,
    pub pca: Pca,
}

/// Features -> standardized PCA -> K-Means -> size-ordered domains ->
/// seen/unseen -> train/val/test.
pub fn build_split(scenes: &[Scene], config: &SplitConfig) -> Result<SplitOutput, DomainError> {
    if config.n_unseen >= config.k {
        return Err(DomainError::Inconsistent(format!(
            "n_unseen {} must be below k {}",
            config.n_unseen, config.k
        )));
    }
    let mut ids = HashSet::new();
    for s in scenes {
        if !ids.insert(s.scene_id.as_str()) {
            return Err(DomainError::DuplicateScene(s.scene_id.clone()));
        }
    }
    let mut features = scenes
        .iter()
        .map(extract_features)
        .collect::<Result<Vec<_>, _>>()?;
    let raw: Vec<&[f64]> = features.iter().map(|f| &f.raw[..]).collect();
    let pca = pca_reduce(&raw)?;
    for (f, e) in features.iter_mut().zip(&pca.embedded) {
        f.embedded = Some(*e);
    }
    let clusters = kmeans(&pca.embedded, config.k, config.seed)?;
    let sizes = clusters.cluster_sizes();
    if sizes.contains(&0) {
        return Err(DomainError::EmptyClusters(sizes));
    }

    let mut order: Vec<usize> = (0..config.k).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut relabel = vec![0; config.k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let centers: Vec<[f64; 2]> = order.iter().map(|&old| clusters.centers[old]).collect();
    let labels: Vec<(String, usize)> = scenes
        .iter()
        .zip(&clusters.assignments)
        .map(|(s, &a)| (s.scene_id.clone(), relabel[a]))
        .collect();
    let unseen: BTreeSet<usize> = (config.k - config.n_unseen..config.k).collect();
    let mut split = DomainSplit::from_labels(&labels, &unseen, config.train_fraction, config.seed)?;
    split.centers = centers;
    Ok(SplitOutput {
        split,
        features,
        pca: pca.model,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub scene_id: String,
    pub cluster: usize,
    pub e1: f64,
    pub e2: f64,
}

/// The numeric data behind a per-domain scatter plot, one row per scene.
pub fn emit_domain_scatter(
    split: &DomainSplit,
    features: &[FeatureVector],
) -> Result<Vec<ScatterRow>, DomainError> {
    features
        .iter()
        .map(|f| {
            let cluster = *split.assignments.get(&f.scene_id).ok_or_else(|| {
                DomainError::Inconsistent(format!("scene {} not in split", f.scene_id))
            })?;
            let [e1, e2] = f.embedded.ok_or_else(|| {
                DomainError::Inconsistent(format!("scene {} has no embedding", f.scene_id))
            })?;
            Ok(ScatterRow {
                scene_id: f.scene_id.clone(),
                cluster,
                e1,
                e2,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures::straight_scene;

    fn labels(n: usize, domains: usize) -> Vec<(String, usize)> {
        (0..n).map(|i| (format!("s{i:04}"), i % domains)).collect()
    }

    #[test]
    fn labeled_split_ratios() {
        let unseen: BTreeSet<usize> = [7, 8, 9].into();
        let split = DomainSplit::from_labels(&labels(1003, 10), &unseen, 0.8, 5).unwrap();
        assert_eq!(split.seen_domains.len(), 7);
        assert_eq!(split.unseen_domains, unseen);
        for d in &split.seen_domains {
            let members: Vec<&String> = split
                .assignments
                .iter()
                .filter(|(_, &a)| a == *d)
                .map(|(id, _)| id)
                .collect();
            let train = members
                .iter()
                .filter(|id| split.partition[id.as_str()] == Partition::Train)
                .count();
            assert!((train as f64 - 0.8 * members.len() as f64).abs() <= 1.0);
        }
        assert!(!split.scenes_in(Partition::Test).is_empty());
        split.validate().unwrap();
    }

    #[test]
    fn manifest_round_trip() {
        let unseen: BTreeSet<usize> = [2].into();
        let split = DomainSplit::from_labels(&labels(30, 3), &unseen, 0.8, 1).unwrap();
        let rows: Vec<(String, usize, Partition)> = split
            .assignments
            .iter()
            .map(|(id, &d)| (id.clone(), d, split.partition[id]))
            .collect();
        assert_eq!(DomainSplit::from_manifest(&rows).unwrap(), split);
    }

    #[test]
    fn manifest_leak_detected() {
        let rows = vec![
            ("a".to_string(), 0, Partition::Train),
            ("b".to_string(), 0, Partition::Test),
        ];
        assert!(matches!(
            DomainSplit::from_manifest(&rows),
            Err(DomainError::Inconsistent(_))
        ));
    }

    #[test]
    fn identical_scenes_are_degenerate() {
        let scenes: Vec<Scene> = (0..30)
            .map(|i| straight_scene(&format!("s{i}"), 10.0, 0.5))
            .collect();
        let err = build_split(&scenes, &SplitConfig::default()).unwrap_err();
        match &err {
            DomainError::EmptyClusters(sizes) => {
                assert_eq!(sizes.len(), 10);
                assert_eq!(sizes.iter().sum::<usize>(), 30);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("cluster sizes"));
    }

    #[test]
    fn scatter_rows_follow_split() {
        let scenes: Vec<Scene> = (0..12)
            .map(|i| straight_scene(&format!("s{i:02}"), 5.0 + i as f64, 0.1 * (i % 4) as f64))
            .collect();
        let cfg = SplitConfig {
            k: 3,
            n_unseen: 1,
            seed: 2,
            train_fraction: 0.8,
        };
        let out = build_split(&scenes, &cfg).unwrap();
        let rows = emit_domain_scatter(&out.split, &out.features).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert_eq!(r.cluster, out.split.assignments[&r.scene_id]);
        }
        let sizes: Vec<usize> = (0..3)
            .map(|d| rows.iter().filter(|r| r.cluster == d).count())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(out.split.unseen_domains, [2].into());
    }
}
