use bfgsqp_web::{disk_trajectory, line_search_trace, min_norm, Profile};

#[test]
fn disk_trajectory_ends_on_the_circle() {
    let tr = disk_trajectory([2.0, 2.0], [0.1, 0.0], 200).unwrap();
    let h = 0.5f64.sqrt();
    assert!((tr.best[0] - h).abs() <= 1e-4 && (tr.best[1] - h).abs() <= 1e-4, "{:?}", tr.best);
    assert_eq!(tr.points.len(), tr.f.len());
    assert_eq!(tr.points[0], [0.1, 0.0]);
    assert!(tr.mu.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn disk_target_inside_is_reached_exactly() {
    let tr = disk_trajectory([0.3, -0.2], [0.9, 0.0], 200).unwrap();
    assert!((tr.best[0] - 0.3).abs() <= 1e-6 && (tr.best[1] + 0.2).abs() <= 1e-6);
    assert_eq!(tr.code, "Optimal");
}

#[test]
fn line_search_profiles() {
    let kink = line_search_trace(Profile::Kink, 1e-4, 0.5).unwrap();
    assert_eq!(kink.accepted, Some(1.0));
    let far = line_search_trace(Profile::FarQuadratic, 1e-4, 0.5).unwrap();
    let t = far.accepted.unwrap();
    assert!(t > 1.0, "{t}");
    let last = far.trials.last().unwrap();
    assert!(last.armijo && last.curvature);
    assert!(far.trials.iter().rev().skip(1).all(|tr| !(tr.armijo && tr.curvature)));
    let asym = line_search_trace(Profile::Asymmetric, 1e-4, 0.5).unwrap();
    assert_eq!(asym.accepted, Some(1.0), "first trial is past the kink and acceptable");
    assert!(line_search_trace(Profile::Kink, 0.6, 0.5).is_err());
    assert!(Profile::parse("nope").is_err());
}

#[test]
fn min_norm_of_opposite_vectors_is_zero() {
    let r = min_norm(&[1.0, 0.0, -1.0, 0.0]).unwrap();
    assert!(r.norm <= 1e-9);
    assert!((r.sigma[0] - 0.5).abs() <= 1e-6);
    let r = min_norm(&[1.0, 1.0, 1.0, -1.0]).unwrap();
    assert!((r.point[0] - 1.0).abs() <= 1e-8 && r.point[1].abs() <= 1e-8);
    assert!(min_norm(&[1.0]).is_err());
}
