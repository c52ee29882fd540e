use frenetkit::domains::{kmeans, pca_reduce};
use frenetkit::geometry::{
    cartesian_to_frenet, frenet_to_cartesian, project_point_to_polyline, wedge_membership,
    CartesianPoint, Polyline,
};
use frenetkit::io::{read_scene_file, write_scene_file, SceneFile, FORMAT_VERSION};
use frenetkit::metrics::{min_ade, min_fde, miss_rate, PredictionSet};
use frenetkit::reference::{score_candidate, select_reference};
use frenetkit::scene::{Scene, TimedPoint, HISTORY_LEN, HORIZON_LEN, TIME_STEP};
use proptest::prelude::*;

fn pt(x: f64, y: f64) -> CartesianPoint {
    CartesianPoint::new(x, y)
}

/// Polylines built from heading/length steps so no segment is degenerate.
fn polyline() -> impl Strategy<Value = Polyline> {
    (
        -50.0..50.0f64,
        -50.0..50.0f64,
        0.0..std::f64::consts::TAU,
        prop::collection::vec((-2.5..2.5f64, 0.5..15.0f64), 1..7),
    )
        .prop_map(|(x, y, h0, steps)| {
            let mut p = pt(x, y);
            let mut h = h0;
            let mut verts = vec![p];
            for (turn, len) in steps {
                h += turn;
                p += pt(h.cos(), h.sin()) * len;
                verts.push(p);
            }
            Polyline::new(verts).unwrap()
        })
}

fn straight_path() -> impl Strategy<Value = (Polyline, CartesianPoint, f64)> {
    (
        -100.0..100.0f64,
        -100.0..100.0f64,
        0.0..std::f64::consts::TAU,
        1.0..200.0f64,
    )
        .prop_map(|(x, y, h, len)| {
            let a = pt(x, y);
            let dir = pt(h.cos(), h.sin());
            (Polyline::new(vec![a, a + dir * len]).unwrap(), dir, len)
        })
}

fn prediction_set() -> impl Strategy<Value = (Vec<Vec<CartesianPoint>>, Vec<CartesianPoint>)> {
    (1..20usize, 1..7usize).prop_flat_map(|(h, k)| {
        let traj = move || prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64), h);
        (prop::collection::vec(traj(), k), traj()).prop_map(|(modes, gt)| {
            let conv =
                |v: Vec<(f64, f64)>| v.into_iter().map(|(x, y)| pt(x, y)).collect::<Vec<_>>();
            (modes.into_iter().map(conv).collect(), conv(gt))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_is_no_farther_than_any_vertex(path in polyline(), x in -80.0..80.0f64, y in -80.0..80.0f64) {
        let p = pt(x, y);
        let proj = project_point_to_polyline(p, &path);
        prop_assert!((0.0..=1.0).contains(&proj.along));
        prop_assert!((proj.foot.distance(p) - proj.distance).abs() < 1e-9);
        for v in path.vertices() {
            prop_assert!(proj.distance <= v.distance(p) + 1e-12);
        }
    }

    #[test]
    fn first_point_rebases_to_zero(path in polyline(), pts in prop::collection::vec((-80.0..80.0f64, -80.0..80.0f64), 1..30)) {
        let traj: Vec<CartesianPoint> = pts.into_iter().map(|(x, y)| pt(x, y)).collect();
        let f = cartesian_to_frenet(&traj, &path).unwrap();
        prop_assert_eq!(f.points[0].s, 0.0);
    }

    #[test]
    fn interior_round_trip(path in polyline(), seg in 0usize..6, along in 0.05..0.95f64, d in -0.2..0.2f64) {
        // points near a segment's middle with short offsets project onto it
        let seg = seg % path.segment_count();
        let v = path.vertices();
        let dir = path.segment_dirs()[seg];
        let p = v[seg] + (v[seg + 1] - v[seg]) * along + dir.left_normal() * d;
        let proj = project_point_to_polyline(p, &path);
        prop_assume!(!proj.at_joint && proj.along > 0.0 && proj.along < 1.0);
        let f = cartesian_to_frenet(&[p], &path).unwrap();
        let back = frenet_to_cartesian(&f.points, &path, f.s1_raw).unwrap();
        prop_assert!(back[0].distance(p) < 1e-9, "{}", back[0].distance(p));
    }

    #[test]
    fn straight_path_is_isometric((path, dir, len) in straight_path(), u in prop::array::uniform4(0.01..0.99f64), v in prop::array::uniform2(-20.0..20.0f64)) {
        let a = path.first();
        let p = a + dir * (len * u[0]) + dir.left_normal() * v[0];
        let q = a + dir * (len * u[1]) + dir.left_normal() * v[1];
        let f = cartesian_to_frenet(&[p, q], &path).unwrap();
        let df = (f.points[1].s - f.points[0].s).hypot(f.points[1].d - f.points[0].d);
        prop_assert!((df - p.distance(q)).abs() <= 1e-9);
    }

    #[test]
    fn reflection_negates_offset((path, dir, len) in straight_path(), u in 0.01..0.99f64, v in -20.0..20.0f64) {
        let n = dir.left_normal();
        let base = path.first() + dir * (len * u);
        let f = cartesian_to_frenet(&[path.first(), base + n * v, base - n * v], &path).unwrap();
        prop_assert!((f.points[1].s - f.points[2].s).abs() <= 1e-9);
        prop_assert!((f.points[1].d + f.points[2].d).abs() <= 1e-9);
    }

    #[test]
    fn reflection_is_exact_on_axis(x in -64i32..64, y in -64i32..64) {
        // dyadic coordinates on an axis-aligned path keep every step exact
        let path = Polyline::from_xy(&[[-128.0, 0.0], [128.0, 0.0]]).unwrap();
        let (x, y) = (x as f64 * 0.5, y as f64 * 0.25);
        let f = cartesian_to_frenet(&[pt(x, y), pt(x, -y)], &path).unwrap();
        let g = cartesian_to_frenet(&[pt(x, -y)], &path).unwrap();
        prop_assert_eq!(f.s1_raw, g.s1_raw);
        prop_assert_eq!(f.points[1].d, -f.points[0].d);
    }

    #[test]
    fn wedge_points_share_one_arc_length(path in polyline(), j in 1usize..6, picks in prop::collection::vec((0.0..1.0f64, 0.05..3.0f64), 2..10)) {
        prop_assume!(path.segment_count() >= 2);
        let j = 1 + (j - 1) % (path.segment_count() - 1);
        let wedge = path.joint_wedge(j).unwrap();
        let start = wedge.incoming_dir.left_normal() * -1.0;
        let end = wedge.outgoing_dir.left_normal() * -1.0;
        // outer side of a left turn sits on the right of both segments
        let turn = wedge.incoming_dir.cross(wedge.outgoing_dir);
        prop_assume!(turn.abs() > 0.05);
        let flip = if turn > 0.0 { 1.0 } else { -1.0 };
        let pts: Vec<CartesianPoint> = picks
            .iter()
            .map(|&(t, r)| {
                let dir = start * flip * (1.0 - t) + end * flip * t;
                wedge.joint + dir * (r / dir.norm())
            })
            .filter(|&p| wedge_membership(p, j, &path).unwrap())
            .filter(|&p| {
                // skip points that another part of the path comes closer to
                let proj = project_point_to_polyline(p, &path);
                proj.at_joint && proj.segment_index == j - 1
            })
            .collect();
        prop_assume!(pts.len() >= 2);
        let mut traj = vec![path.first()];
        traj.extend(&pts);
        let f = cartesian_to_frenet(&traj, &path).unwrap();
        let s0 = f.points[1].s;
        prop_assert_eq!(s0, path.cumulative_arc()[j] - f.s1_raw);
        for p in &f.points[2..] {
            prop_assert_eq!(p.s, s0);
        }
    }

    #[test]
    fn moving_history_away_never_raises_s1(offsets in prop::collection::vec(-3.0..3.0f64, 20), push in 0.0..5.0f64) {
        let path = Polyline::from_xy(&[[-10.0, 0.0], [40.0, 0.0]]).unwrap();
        let hist: Vec<CartesianPoint> = offsets.iter().enumerate().map(|(i, &y)| pt(i as f64, y)).collect();
        let farther: Vec<CartesianPoint> = hist.iter().map(|p| pt(p.x, p.y + push * p.y.signum())).collect();
        let a = score_candidate(&hist, &path).unwrap();
        let b = score_candidate(&farther, &path).unwrap();
        prop_assert!(b.distance_similarity <= a.distance_similarity);
        prop_assert!(a.distance_similarity > 0.0 && a.distance_similarity.is_finite());
        prop_assert!(a.shape_similarity > 0.0 && a.shape_similarity.is_finite());
        prop_assert_eq!(a.total, a.distance_similarity + a.shape_similarity);
    }

    #[test]
    fn selection_is_deterministic(paths in prop::collection::vec(polyline(), 1..5), pts in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 2..20)) {
        let hist: Vec<CartesianPoint> = pts.into_iter().map(|(x, y)| pt(x, y)).collect();
        prop_assert_eq!(select_reference(&hist, &paths).unwrap(), select_reference(&hist, &paths).unwrap());
    }

    #[test]
    fn metrics_are_rigid_motion_invariant((modes, gt) in prediction_set(), angle in 0.0..std::f64::consts::TAU, tx in -100.0..100.0f64, ty in -100.0..100.0f64) {
        let (sin, cos) = angle.sin_cos();
        let m = |p: &CartesianPoint| pt(cos * p.x - sin * p.y + tx, sin * p.x + cos * p.y + ty);
        let set = PredictionSet::new("s", modes.clone()).unwrap();
        let moved = PredictionSet::new("s", modes.iter().map(|t| t.iter().map(m).collect()).collect()).unwrap();
        let gt2: Vec<CartesianPoint> = gt.iter().map(m).collect();
        prop_assert!((min_ade(&set, &gt).unwrap() - min_ade(&moved, &gt2).unwrap()).abs() < 1e-9);
        prop_assert!((min_fde(&set, &gt).unwrap() - min_fde(&moved, &gt2).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn metrics_ignore_mode_order((mut modes, gt) in prediction_set(), extra in -5.0..5.0f64) {
        let base = PredictionSet::new("s", modes.clone()).unwrap();
        modes.reverse();
        let rev = PredictionSet::new("s", modes.clone()).unwrap();
        prop_assert_eq!(min_ade(&base, &gt).unwrap(), min_ade(&rev, &gt).unwrap());
        prop_assert_eq!(min_fde(&base, &gt).unwrap(), min_fde(&rev, &gt).unwrap());
        modes.push(gt.iter().map(|p| pt(p.x + extra, p.y)).collect());
        let more = PredictionSet::new("s", modes).unwrap();
        prop_assert!(min_ade(&more, &gt).unwrap() <= min_ade(&base, &gt).unwrap());
        prop_assert!(min_fde(&more, &gt).unwrap() <= min_fde(&base, &gt).unwrap());
    }

    #[test]
    fn miss_rate_falls_with_threshold(fdes in prop::collection::vec(0.0..6.0f64, 1..50), t1 in 0.0..6.0f64, t2 in 0.0..6.0f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(miss_rate(&fdes, hi).unwrap() <= miss_rate(&fdes, lo).unwrap());
    }

    #[test]
    fn kmeans_wcss_is_monotone(pts in prop::collection::vec(prop::array::uniform2(-10.0..10.0f64), 12..80), k in 1usize..8, seed in any::<u64>()) {
        let r = kmeans(&pts, k, seed).unwrap();
        for w in r.wcss_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn pca_reconstruction_keeps_column_variance(rows in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 5), 6..40)) {
        let res = pca_reduce(&rows).unwrap();
        let model = &res.model;
        let n = rows.len() as f64;
        let std_rows: Vec<Vec<f64>> = rows.iter().map(|r| model.standardize(r)).collect();
        let recon: Vec<Vec<f64>> = res.embedded.iter().map(|e| model.reconstruct_standardized(*e)).collect();
        for c in 0..5 {
            let var = |m: &Vec<Vec<f64>>| {
                let mean = m.iter().map(|r| r[c]).sum::<f64>() / n;
                m.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n
            };
            prop_assert!(var(&recon) <= var(&std_rows) + 1e-9);
        }
    }
}

fn scene_strategy() -> impl Strategy<Value = Scene> {
    let xy = || (-1e4..1e4f64, -1e4..1e4f64);
    (
        "[a-z0-9_-]{1,12}",
        any::<f64>().prop_filter("finite", |v| v.is_finite() && v.abs() < 1e6),
        prop::collection::vec(xy(), HISTORY_LEN + HORIZON_LEN),
        prop::bool::ANY,
        prop::collection::vec(prop::collection::vec(xy(), 2..6), 1..4),
        prop::option::of(0usize..20),
    )
        .prop_map(|(id, t0, pts, with_future, lanes, domain)| {
            let timed: Vec<TimedPoint> = pts
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| TimedPoint::new(t0 + i as f64 * TIME_STEP, x, y))
                .collect();
            let centerlines = lanes
                .into_iter()
                .filter_map(|l| {
                    let v: Vec<[f64; 2]> = l.into_iter().map(|(x, y)| [x, y]).collect();
                    Polyline::from_xy(&v).ok()
                })
                .collect();
            Scene {
                scene_id: id,
                observed: timed[..HISTORY_LEN].to_vec(),
                future: with_future.then(|| timed[HISTORY_LEN..].to_vec()),
                centerlines,
                boundaries: vec![],
                domain,
            }
        })
        .prop_filter("valid", |s| s.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scene_files_round_trip_losslessly(scene in scene_strategy()) {
        let file = SceneFile { version: FORMAT_VERSION.into(), scenes: vec![scene] };
        let mut buf = Vec::new();
        write_scene_file(&file, &mut buf).unwrap();
        let back = read_scene_file(buf.as_slice()).unwrap();
        prop_assert_eq!(back, file);
    }
}
