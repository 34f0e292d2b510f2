use std::sync::Arc;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::device::{BiasPoint, ModelCard, Polarity};

fn lattice(
    axis1: &[f64],
    axis2: &[f64],
    labels: [&str; 2],
    f: impl Fn(f64, f64) -> ModelCard,
) -> Arc<ModelGrid> {
    let mut cards = Vec::new();
    for &a in axis1 {
        for &b in axis2 {
            cards.push(f(a, b));
        }
    }
    Arc::new(ModelGrid::new(labels, axis1.to_vec(), axis2.to_vec(), cards).unwrap())
}

fn varying_card(lg: f64, wfin: f64) -> ModelCard {
    ModelCard {
        lg,
        wfin,
        vt0: 0.30 + 0.01 * (lg - 18.0) - 0.005 * (wfin - 6.0),
        k_gain: 1e-4 * (1.0 + 0.02 * (wfin - 6.0)),
        cov: 2e-17,
        cch_max: 6e-17,
        ..ModelCard::reference()
    }
}

fn fig4_grid() -> Arc<ModelGrid> {
    lattice(
        &[16.5, 17.5, 18.5, 19.5],
        &[5.1, 6.1, 7.1],
        ["lg", "wfin"],
        varying_card,
    )
}

fn bias_grid() -> Vec<BiasPoint> {
    let mut out = Vec::new();
    for i in 0..=20 {
        for j in 0..=20 {
            out.push(BiasPoint::new(
                0.75 * j as f64 / 20.0,
                0.75 * i as f64 / 20.0,
                0.0,
                0.0,
            ));
        }
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn fig4_distances_and_weights() {
    let grid = fig4_grid();
    let q = DesignPoint::new(17.8, 6.3);
    let gm = locate_and_weigh(&grid, q).unwrap();
    let pts = gm.weights().nodes().map(|n| grid.node_point(n));
    let expected_corners = [(17.5, 6.1), (17.5, 7.1), (18.5, 7.1), (18.5, 6.1)];
    for (p, (a, b)) in pts.iter().zip(expected_corners) {
        assert_eq!((p.axis1, p.axis2), (a, b));
    }
    let dist = [0.360555, 0.854400, 1.063015, 0.728011];
    for (p, d) in pts.iter().zip(dist) {
        assert!((q.distance(p) - d).abs() < 1e-6);
    }
    let w = [0.44318, 0.18702, 0.15032, 0.21949];
    for (got, want) in gm.weights().weights().iter().zip(w) {
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }
}

#[test]
fn cell_center_weights_equal() {
    let gm = locate_and_weigh(&fig4_grid(), DesignPoint::new(18.0, 6.6)).unwrap();
    for w in gm.weights().weights() {
        assert_relative_eq!(w, 0.25, epsilon = 1e-12);
    }
}

#[test]
fn node_coincidence_gives_indicator() {
    let gm = locate_and_weigh(&fig4_grid(), DesignPoint::new(16.5, 7.1)).unwrap();
    assert_eq!(gm.weights().weights(), [0.0, 1.0, 0.0, 0.0]);
    let near = locate_and_weigh(&fig4_grid(), DesignPoint::new(16.5 + 1e-10, 7.1)).unwrap();
    assert_eq!(near.weights().weights(), [0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn shared_edge_goes_to_lower_cell() {
    let grid = fig4_grid();
    let gm = locate_and_weigh(&grid, DesignPoint::new(17.5, 6.5)).unwrap();
    let nodes = gm.weights().nodes();
    assert_eq!(grid.node_point(nodes[0]), DesignPoint::new(16.5, 6.1));
}

#[test]
fn outside_hull_names_axis() {
    let grid = fig4_grid();
    match locate_and_weigh(&grid, DesignPoint::new(20.0, 6.0)) {
        Err(GridError::OutOfRange { axis, .. }) => assert_eq!(axis, "lg"),
        other => panic!("{other:?}"),
    }
    match locate_and_weigh(&grid, DesignPoint::new(18.0, 5.0)) {
        Err(GridError::OutOfRange { axis, .. }) => assert_eq!(axis, "wfin"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        locate_and_weigh(&grid, DesignPoint::new(f64::NAN, 6.0)),
        Err(GridError::InvalidPoint(..))
    ));
}

#[test]
fn weights_normalized_for_random_queries() {
    let grid = fig4_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let q = DesignPoint::new(rng.gen_range(16.5..=19.5), rng.gen_range(5.1..=7.1));
        let gm = locate_and_weigh(&grid, q).unwrap();
        assert!((gm.weights().sum() - 1.0).abs() <= 1e-12);
        assert!(gm.weights().weights().iter().all(|w| *w >= 0.0));
    }
}

#[test]
fn ensemble_exact_at_nodes() {
    let grid = fig4_grid();
    let biases = bias_grid();
    for idx in 0..grid.node_count() {
        let gm = locate_and_weigh(&grid, grid.node_point(idx)).unwrap();
        for b in biases.iter().step_by(7) {
            let e = gm.ensemble_eval(b, 3).unwrap();
            let c = grid.card(idx).evaluate(b, 3).unwrap();
            for (x, y) in e.currents.as_array().iter().zip(c.currents.as_array()) {
                assert!(rel(*x, y) <= 1e-12);
            }
            for (x, y) in e.charges.as_array().iter().zip(c.charges.as_array()) {
                assert!(rel(*x, y) <= 1e-12);
            }
        }
    }
}

#[test]
fn identical_cards_collapse() {
    // Same electrical behavior at every node: k_gain absorbs the geometry.
    let card = |lg: f64, wfin: f64| ModelCard {
        lg,
        wfin,
        k_gain: 1e-4 * lg / (100.0 + wfin),
        cov: 1e-17,
        cch_max: 5e-17,
        ..ModelCard::reference()
    };
    let grid = lattice(&[17.0, 18.0], &[6.0, 7.0], ["lg", "wfin"], card);
    let single = card(17.0, 6.0);
    let gm = locate_and_weigh(&grid, DesignPoint::new(17.37, 6.81)).unwrap();
    for b in bias_grid() {
        let e = gm.ensemble_eval(&b, 1).unwrap();
        let c = single.evaluate(&b, 1).unwrap();
        assert!(rel(e.currents.id, c.currents.id) <= 1e-12);
        assert!(rel(e.charges.qg, c.charges.qg) <= 1e-12);
    }
    let seams = seam_gap(&grid, &bias_grid()).unwrap();
    assert!(seams.edges.is_empty());
}

#[test]
fn summation_order_is_fixed() {
    let grid = fig4_grid();
    let gm = locate_and_weigh(&grid, DesignPoint::new(17.8, 6.3)).unwrap();
    let mut shuffled = *gm.weights();
    shuffled.entries.reverse();
    shuffled.entries.swap(0, 2);
    let other = GeneralModel::with_weights(Arc::clone(&grid), gm.query(), shuffled);
    let b = BiasPoint::new(0.6, 0.45, 0.0, 0.0);
    assert_eq!(
        gm.ensemble_eval(&b, 2).unwrap(),
        other.ensemble_eval(&b, 2).unwrap()
    );
}

#[test]
fn weight_grows_toward_its_corner() {
    let grid = fig4_grid();
    let target = DesignPoint::new(18.5, 7.1);
    let start = DesignPoint::new(17.6, 6.2);
    let mut last = 0.0;
    for step in 0..=20 {
        let t = step as f64 / 21.0;
        let q = DesignPoint::new(
            start.axis1 + t * (target.axis1 - start.axis1),
            start.axis2 + t * (target.axis2 - start.axis2),
        );
        let w = locate_and_weigh(&grid, q).unwrap().weights().weights()[2];
        assert!(w > last, "step {step}: {w} <= {last}");
        last = w;
    }
}

#[test]
fn axis_labels_are_metadata() {
    let d_axis = [4.0, 4.7, 5.4];
    let nanowire = lattice(
        &[16.0, 17.0, 18.0],
        &d_axis,
        ["lg", "diameter"],
        varying_card,
    );
    let plain = lattice(&[16.0, 17.0, 18.0], &d_axis, ["lg", "wfin"], varying_card);
    let q = DesignPoint::new(16.4, 5.0);
    let a = locate_and_weigh(&nanowire, q).unwrap();
    let b = locate_and_weigh(&plain, q).unwrap();
    assert_eq!(a.weights(), b.weights());
    assert_eq!(nanowire.labels(), ["lg", "diameter"]);
    match locate_and_weigh(&nanowire, DesignPoint::new(17.0, 6.0)) {
        Err(GridError::OutOfRange { axis, .. }) => assert_eq!(axis, "diameter"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn linear_vt0_gives_nonzero_seams() {
    let grid = fig4_grid();
    let biases = [
        BiasPoint::new(0.75, 0.3, 0.0, 0.0),
        BiasPoint::new(0.05, 0.75, 0.0, 0.0),
    ];
    let report = seam_gap(&grid, &biases).unwrap();
    // 2 interior lines on axis1 x 2 segments, 1 on axis2 x 3 segments.
    assert_eq!(report.edges.len(), 7);
    assert!(report.edges.iter().all(|e| e.max_gap > 0.0));
    assert!(report.to_csv().starts_with(SeamReport::CSV_HEADER));
}

#[test]
fn ensemble_geometry_follows_query() {
    let gm = locate_and_weigh(&fig4_grid(), DesignPoint::new(17.8, 6.3)).unwrap();
    let g = gm.geometry();
    assert_eq!(g.lg_nm, 17.8);
    assert_relative_eq!(g.weff_nm, 106.3, epsilon = 1e-9);
    assert_eq!(gm.polarity(), Polarity::N);
}

#[test]
fn construction_errors() {
    let card = ModelCard::reference;
    assert!(matches!(
        ModelGrid::new(
            ["lg", "wfin"],
            vec![18.0],
            vec![6.0, 7.0],
            vec![card(), card()]
        ),
        Err(GridError::TooFewValues { .. })
    ));
    assert!(matches!(
        ModelGrid::new(
            ["lg", "wfin"],
            vec![18.0, 17.0],
            vec![6.0, 7.0],
            vec![card(); 4]
        ),
        Err(GridError::NotAscending { .. })
    ));
    assert!(matches!(
        ModelGrid::new(
            ["lg", "wfin"],
            vec![17.0, 18.0],
            vec![6.0, 7.0],
            vec![card(); 3]
        ),
        Err(GridError::CardCount {
            expected: 4,
            got: 3
        })
    ));
    assert!(matches!(
        ModelGrid::new(
            ["lg", "wfin"],
            vec![17.0, 18.0],
            vec![6.0, 7.0],
            vec![card(); 4]
        ),
        Err(GridError::CardMismatch { i1: 0, i2: 0, .. })
    ));
    let mk = |lg, wfin, p| ModelCard {
        lg,
        wfin,
        polarity: p,
        ..card()
    };
    let mixed = vec![
        mk(17.0, 6.0, Polarity::N),
        mk(17.0, 7.0, Polarity::N),
        mk(18.0, 6.0, Polarity::P),
        mk(18.0, 7.0, Polarity::N),
    ];
    assert!(matches!(
        ModelGrid::new(["lg", "wfin"], vec![17.0, 18.0], vec![6.0, 7.0], mixed),
        Err(GridError::MixedPolarity)
    ));
}

#[test]
fn clip_reports_movement() {
    let grid = fig4_grid();
    let (p, moved) = grid.clip(DesignPoint::new(20.0, 6.0));
    assert!(moved);
    assert_eq!(p, DesignPoint::new(19.5, 6.0));
    assert!(!grid.clip(DesignPoint::new(18.0, 6.0)).1);
}

#[test]
fn manifest_round_trip() {
    let grid = fig4_grid();
    let dir = tempfile::tempdir().unwrap();
    let path = write_grid(&grid, dir.path(), "grid.manifest").unwrap();
    let back = read_grid(&path).unwrap();
    assert_eq!(&back, grid.as_ref());

    std::fs::write(
        dir.path().join("bad.manifest"),
        "axis1 = 1n 2n\nbogus = 3\n",
    )
    .unwrap();
    assert!(matches!(
        read_grid(&dir.path().join("bad.manifest")),
        Err(ManifestError::Syntax { line: 2, .. })
    ));
    std::fs::write(dir.path().join("short.manifest"), "axis1 = 1n 2n\n").unwrap();
    assert!(matches!(
        read_grid(&dir.path().join("short.manifest")),
        Err(ManifestError::Missing("axis2"))
    ));
}
