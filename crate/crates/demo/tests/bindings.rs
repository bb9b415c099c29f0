use hybrid_loss_demo::{curves, minimizer_of, risk_grid, threshold_of};

#[test]
fn dominant_distribution_needs_no_log_weight() {
    let t = threshold_of(&[0.6, 0.3, 0.1]).unwrap();
    assert!(t.dominant);
    assert_eq!(t.top_label, 0);
    assert_eq!(t.alpha, 0.0);
}

#[test]
fn non_dominant_threshold() {
    // 1 - 0.05 / (1 - 0.8)
    let t = threshold_of(&[0.4, 0.35, 0.25]).unwrap();
    assert!(!t.dominant);
    assert!((t.alpha - 0.75).abs() < 1e-12);
    assert!(threshold_of(&[0.5, 0.6]).is_err());
}

#[test]
fn risk_grid_covers_the_interior() {
    let n = 10;
    let grid = risk_grid(0.5, &[0.4, 0.35, 0.25], n).unwrap();
    assert_eq!(grid.len() / 3, (n - 1) * (n - 2) / 2);
    for cell in grid.chunks(3) {
        assert!(cell[0] > 0.0 && cell[1] > 0.0 && cell[0] + cell[1] < 1.0);
        assert!(cell[2].is_finite() && cell[2] >= 0.0);
    }
    assert!(risk_grid(0.5, &[0.5, 0.5], n).is_err());
}

#[test]
fn minimizer_alignment_follows_the_threshold() {
    let q = [0.4, 0.35, 0.25];
    let above = minimizer_of(0.8, &q, 60).unwrap();
    assert_eq!(above.len(), 4);
    assert_eq!(above[3], 1.0);
    assert!((above[..3].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let hinge = minimizer_of(0.0, &q, 60).unwrap();
    assert_eq!(hinge[3], 0.0);
}

#[test]
fn curves_match_closed_forms() {
    let rows = curves(0.3, 2, -2.0, 2.0, 4).unwrap();
    assert_eq!(rows.len(), 5 * 4);
    for r in rows.chunks(4) {
        let m = r[0];
        let log = (1.0 + (-m).exp()).ln();
        let hinge = (1.0 - m).max(0.0);
        assert!((r[1] - log).abs() < 1e-12);
        assert!((r[2] - hinge).abs() < 1e-12);
        assert!((r[3] - (0.3 * log + 0.7 * hinge)).abs() < 1e-12);
    }
    assert!(curves(0.3, 1, 0.0, 1.0, 4).is_err());
    assert!(curves(0.3, 2, 1.0, 1.0, 4).is_err());
}
