use hstc_web::{band_demo, map_demo, sample_curve};

#[test]
fn band_demo_finds_the_planted_bands() {
    let r = band_demo(0, 2.0).unwrap();
    assert_eq!(r.scores.len(), 16);
    let mut top = r.order[..2].to_vec();
    top.sort();
    assert_eq!(top, r.informative);
    assert!(r.overall_accuracy > 0.9);
}

#[test]
fn curve_has_one_point_per_size() {
    let pts = sample_curve(0, &[5, 20], 1).unwrap();
    assert_eq!(pts.iter().map(|p| p.samples_per_class).collect::<Vec<_>>(), vec![5, 20]);
    assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p.tensor) && (0.0..=1.0).contains(&p.vector)));
}

#[test]
fn maps_cover_exactly_the_labeled_pixels() {
    for hidden in [0, 4] {
        let m = map_demo(1, 20, hidden).unwrap();
        assert_eq!(m.truth.len(), m.width * m.height);
        assert_eq!(m.predicted.len(), m.truth.len());
        for (t, p) in m.truth.iter().zip(&m.predicted) {
            assert_eq!(*t == 0, *p == 0);
            assert!(*p as usize <= m.num_classes);
        }
        assert!(m.overall_accuracy > 0.8, "hidden {hidden}: {}", m.overall_accuracy);
    }
}

#[test]
fn bad_settings_are_errors() {
    assert!(map_demo(0, 0, 0).is_err());
}
