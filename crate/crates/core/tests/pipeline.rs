use sieved_core::io::{band_set_csv, band_set_from_csv, band_set_json};
use sieved_core::oracle::generation_for_size;
use sieved_core::*;

#[test]
fn cover_survives_csv_and_keeps_its_dimension() {
    let q = ModelParams::new(4.0, 2).unwrap();
    let c = cover(9, &q, 1e-12).unwrap();
    let back = band_set_from_csv(&band_set_csv(&c)).unwrap();
    assert_eq!(back.bands(), c.bands());
    let scales = default_scales(&c, 12).unwrap();
    let a = box_dimension(&c, &scales).unwrap();
    let b = box_dimension(&back, &scales).unwrap();
    assert_eq!(a.counts, b.counts);
    assert!(a.slope > 0.5 && a.slope < 1.0, "{}", a.slope);
}

#[test]
fn cover_json_is_stable_across_runs() {
    let q = ModelParams::new(2.5, 3).unwrap();
    let a = band_set_json(&cover(7, &q, 1e-11).unwrap());
    let b = band_set_json(&cover(7, &q, 1e-11).unwrap());
    assert_eq!(a, b);
}

#[test]
fn truncation_eigenvalues_sit_near_cover() {
    let q = ModelParams::new(2.0, 3).unwrap();
    let size = 400;
    let op = build_truncation(&q, generation_for_size(&q, size).unwrap(), size).unwrap();
    let eigs = eigenvalues(&op, 1e-12);
    let c = cover(9, &q, 1e-10).unwrap();
    let r = spectral_consistency(&eigs, &c, 1e-2);
    assert!(!r.flagged, "{r:?}");
}

#[test]
fn membership_agrees_with_covers() {
    let q = ModelParams::new(3.0, 2).unwrap();
    let k = 8;
    let c = cover(k, &q, 1e-12).unwrap();
    for i in 0..200 {
        let e = -3.0 + 9.0 * f64::from(i) / 199.0;
        if let Membership::OutsideCertified { step } = membership(e, &q, 30) {
            // a certified escape before k excludes E from cover(k)
            if step + 1 < k {
                assert!(!c.contains(e, 0.0), "E = {e} escaped at {step}");
            }
        }
    }
}
