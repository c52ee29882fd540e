use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, Write};

use anyhow::{anyhow, bail, Context, Result};
use frenetkit::baselines::run_benchmark;
use frenetkit::domains::{build_split, emit_domain_scatter, DomainSplit, SplitConfig};
use frenetkit::geometry::{cartesian_to_frenet, frenet_to_cartesian, CartesianPoint, FrenetPoint};
use frenetkit::io::{
    compute_error_field, default_families, parse_scene_file, synthesize_corpus, write_scene_file,
};
use frenetkit::metrics::{relative_change, Group};
use frenetkit::reference::select_reference;
use frenetkit::scene::{Scene, TimedPoint};

use crate::tables::{
    self, num, opt, read_manifest, read_transform_table, writer, TRANSFORM_HEADER,
};
use crate::{ErrorFieldArgs, EvalArgs, SceneArgs, SplitArgs, SynthArgs, TransformArgs};

fn load(path: &std::path::Path) -> Result<Vec<Scene>> {
    Ok(parse_scene_file(path)
        .with_context(|| format!("reading {}", path.display()))?
        .scenes)
}

fn timed_points(scene: &Scene, include_future: bool) -> Vec<TimedPoint> {
    let mut pts = scene.observed.clone();
    if include_future {
        pts.extend(scene.future.iter().flatten());
    }
    pts
}

fn reference_index(scene: &Scene) -> Result<usize> {
    Ok(
        select_reference(&scene.observed_points(), &scene.centerlines)
            .with_context(|| format!("scene {}", scene.scene_id))?
            .index,
    )
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let families = if a.families.is_empty() {
        default_families()
    } else {
        a.families.clone()
    };
    let corpus = synthesize_corpus(a.seed, &families, a.per_family);
    let sink: Box<dyn Write> = match &a.output.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    write_scene_file(&corpus, sink)?;
    Ok(())
}

pub fn transform(a: &TransformArgs) -> Result<()> {
    let scenes = load(&a.scenes)?;
    if let Some(table) = &a.inverse {
        return inverse_transform(&scenes, table, a);
    }
    let mut w = writer(a.output.out.as_deref(), &TRANSFORM_HEADER)?;
    for scene in &scenes {
        let reference = reference_index(scene)?;
        let pts = timed_points(scene, a.include_future);
        let xy: Vec<CartesianPoint> = pts.iter().map(|p| p.point).collect();
        let f = cartesian_to_frenet(&xy, &scene.centerlines[reference])
            .with_context(|| format!("scene {}", scene.scene_id))?;
        for (i, (p, tp)) in f.points.iter().zip(&pts).enumerate() {
            w.write_record([
                scene.scene_id.clone(),
                i.to_string(),
                num(tp.t),
                num(p.s),
                num(p.d),
                reference.to_string(),
                num(f.s1_raw),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn inverse_transform(scenes: &[Scene], table: &std::path::Path, a: &TransformArgs) -> Result<()> {
    let by_id: HashMap<&str, &Scene> = scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    let rows = read_transform_table(table)?;
    let mut w = writer(
        a.output.out.as_deref(),
        &["scene_id", "index", "t", "x", "y"],
    )?;
    for row in rows {
        let scene = by_id
            .get(row.scene_id.as_str())
            .ok_or_else(|| anyhow!("table row for unknown scene {}", row.scene_id))?;
        let path = scene.centerlines.get(row.reference_index).ok_or_else(|| {
            anyhow!(
                "scene {}: no centerline {}",
                row.scene_id,
                row.reference_index
            )
        })?;
        let p = frenet_to_cartesian(&[FrenetPoint::new(row.s, row.d)], path, row.s1_raw)
            .with_context(|| format!("scene {} point {}", row.scene_id, row.index))?[0];
        w.write_record([
            row.scene_id,
            row.index.to_string(),
            num(row.t),
            num(p.x),
            num(p.y),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn select_ref(a: &SceneArgs) -> Result<()> {
    let scenes = load(&a.scenes)?;
    let mut w = writer(
        a.output.out.as_deref(),
        &[
            "scene_id",
            "candidate",
            "distance_similarity",
            "shape_similarity",
            "total",
            "selected",
        ],
    )?;
    for scene in &scenes {
        let sel = select_reference(&scene.observed_points(), &scene.centerlines)
            .with_context(|| format!("scene {}", scene.scene_id))?;
        for s in &sel.scores {
            w.write_record([
                scene.scene_id.clone(),
                s.candidate_index.to_string(),
                num(s.distance_similarity),
                num(s.shape_similarity),
                num(s.total),
                (s.candidate_index == sel.index).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn split(a: &SplitArgs) -> Result<()> {
    let scenes = load(&a.scenes)?;
    let config = SplitConfig {
        k: a.k,
        n_unseen: a.unseen,
        seed: a.seed,
        ..SplitConfig::default()
    };
    let split = match &a.by_label {
        Some(unseen) => {
            let labels = scenes
                .iter()
                .map(|s| {
                    s.domain
                        .map(|d| (s.scene_id.clone(), d))
                        .ok_or_else(|| anyhow!("scene {} has no domain label", s.scene_id))
                })
                .collect::<Result<Vec<_>>>()?;
            let unseen: BTreeSet<usize> = unseen.iter().copied().collect();
            DomainSplit::from_labels(&labels, &unseen, config.train_fraction, config.seed)?
        }
        None => {
            let out = build_split(&scenes, &config)?;
            if let Some(path) = &a.scatter {
                let mut w = writer(Some(path), &["scene_id", "cluster", "e1", "e2"])?;
                for row in emit_domain_scatter(&out.split, &out.features)? {
                    w.write_record([
                        row.scene_id,
                        row.cluster.to_string(),
                        num(row.e1),
                        num(row.e2),
                    ])?;
                }
                w.flush()?;
            }
            out.split
        }
    };
    tables::write_manifest(&a.manifest, &split)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let scenes = load(&a.scenes)?;
    let split = read_manifest(&a.split)?;
    let kind = a.kind();
    let report = run_benchmark(&split, &scenes, kind, a.frame)?;
    let mut w = writer(
        a.output.out.as_deref(),
        &[
            "model",
            "frame",
            "group",
            "n_scenes",
            "min_ade",
            "min_fde",
            "miss_rate",
            "min_ade_change_pct",
            "min_fde_change_pct",
            "miss_rate_change_pct",
        ],
    )?;
    let seen = report.seen();
    for r in &report.reports {
        let change = |f: fn(&frenetkit::metrics::MetricsReport) -> f64| {
            if r.group == Group::Seen {
                String::new()
            } else {
                opt(relative_change(f(seen), f(r)))
            }
        };
        w.write_record([
            kind.to_string(),
            a.frame.to_string(),
            r.group.to_string(),
            r.n_scenes.to_string(),
            num(r.min_ade),
            num(r.min_fde),
            num(r.miss_rate),
            change(|m| m.min_ade),
            change(|m| m.min_fde),
            change(|m| m.miss_rate),
        ])?;
    }
    w.flush()?;
    if let Some(path) = &a.scores {
        let mut w = writer(Some(path), &["scene_id", "min_ade", "min_fde"])?;
        for s in &report.scene_scores {
            w.write_record([s.scene_id.clone(), num(s.min_ade), num(s.min_fde)])?;
        }
        w.flush()?;
    }
    if !report.clamped_scenes.is_empty() {
        eprintln!(
            "{} scene(s) had predictions clamped onto the reference: {}",
            report.clamped_scenes.len(),
            report.clamped_scenes.join(", ")
        );
    }
    Ok(())
}

pub fn roundtrip(a: &SceneArgs) -> Result<()> {
    let scenes = load(&a.scenes)?;
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let mut count = 0usize;
    for scene in &scenes {
        let path = &scene.centerlines[reference_index(scene)?];
        let xy: Vec<CartesianPoint> = timed_points(scene, true).iter().map(|p| p.point).collect();
        let context = || format!("scene {}", scene.scene_id);
        let f = cartesian_to_frenet(&xy, path).with_context(context)?;
        let back = frenet_to_cartesian(&f.points, path, f.s1_raw).with_context(context)?;
        for (p, q) in xy.iter().zip(&back) {
            let e = p.distance(*q);
            sum += e;
            max = max.max(e);
            count += 1;
        }
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    let mut w = writer(
        a.output.out.as_deref(),
        &["scenes", "points", "mean_error", "max_error"],
    )?;
    w.write_record([
        scenes.len().to_string(),
        count.to_string(),
        num(mean),
        num(max),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn error_field(a: &ErrorFieldArgs) -> Result<()> {
    let scenes = load(&a.scenes)?;
    let scene = match &a.scene {
        Some(id) => scenes
            .iter()
            .find(|s| &s.scene_id == id)
            .ok_or_else(|| anyhow!("no scene {id}"))?,
        None => scenes
            .first()
            .ok_or_else(|| anyhow!("scene file is empty"))?,
    };
    let pts = timed_points(scene, true);
    let index = a.index.unwrap_or(pts.len() - 1);
    let gt = pts
        .get(index)
        .ok_or_else(|| {
            anyhow!(
                "scene {} has {} points, index {index} is out of range",
                scene.scene_id,
                pts.len()
            )
        })?
        .point;
    let reference = &scene.centerlines[reference_index(scene)?];
    let grid = compute_error_field(gt, reference, a.resolution, a.half_extent)
        .with_context(|| format!("scene {}", scene.scene_id))?;
    if grid.size * grid.size > 25_000_000 {
        bail!("grid of {0}x{0} cells is too large", grid.size);
    }
    let mut w = writer(
        a.output.out.as_deref(),
        &[
            "row",
            "col",
            "x",
            "y",
            "cartesian_error",
            "frenet_error",
            "difference",
        ],
    )?;
    for (i, c) in grid.cells.iter().enumerate() {
        let (row, col) = (i / grid.size, i % grid.size);
        let mapped = c.is_mapped();
        w.write_record([
            row.to_string(),
            col.to_string(),
            num(c.point.x),
            num(c.point.y),
            num(c.cartesian_error),
            if mapped {
                num(c.frenet_error)
            } else {
                String::new()
            },
            if mapped {
                num(c.difference)
            } else {
                String::new()
            },
        ])?;
    }
    w.flush()?;
    eprintln!(
        "scene {}: max |difference| {} m, {} of {} cells outside the mapped region",
        scene.scene_id,
        grid.max_abs_difference(),
        grid.excluded,
        grid.cells.len()
    );
    Ok(())
}
