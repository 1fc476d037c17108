use proptest::prelude::*;

use sieved_core::io::{band_set_csv, band_set_from_csv};
use sieved_core::tracemap::curve_of_initial_conditions;
use sieved_core::transfer::{
    fvi_triple, half_traces_matrix, half_traces_recursive, x0_closed, x1_closed,
};
use sieved_core::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn band_sets() -> impl Strategy<Value = BandSet> {
    prop::collection::vec((-5.0f64..5.0, 0.0f64..0.5), 1..12).prop_map(|raw| {
        let mut bands: Vec<Band> = raw
            .into_iter()
            .map(|(lo, w)| Band::new(lo, lo + w))
            .collect();
        bands.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Band> = Vec::new();
        for b in bands {
            match merged.last_mut() {
                Some(last) if b.lo <= last.hi => last.hi = last.hi.max(b.hi),
                _ => merged.push(b),
            }
        }
        BandSet::from_bands(merged, 0.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn trace_map_preserves_fvi(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
        let p = TraceTriple::new(x, y, z);
        let q = trace_map_step(p);
        let scale = [x, y, z, q.x].iter().map(|v| v.abs()).fold(1.0, f64::max);
        prop_assert!((q.fvi() - p.fvi()).abs() <= 1e-12 * scale.powi(3));
    }

    #[test]
    fn fvi_of_initial_curve_matches_closed_form(e in -6.0f64..10.0, lambda in 0.0f64..6.0, ell in 1u32..9) {
        let q = ModelParams::with_coupling(lambda, ell).unwrap();
        let t = curve_of_initial_conditions(e, &q);
        let direct = fvi_triple(t.x, t.y, t.z);
        let scale = t.x.abs().max(t.y.abs()).max(1.0).powi(2);
        prop_assert!((direct - fvi_energy(e, &q)).abs() <= 1e-12 * scale);
        prop_assert!(fvi_energy(e, &q) >= 0.0);
    }

    #[test]
    fn recursion_agrees_with_matrix_products(e in -3.0f64..8.0, lambda in 0.0f64..5.0, ell in 1u32..5, k in 0usize..12) {
        let q = ModelParams::with_coupling(lambda, ell).unwrap();
        let run = half_traces_recursive(e, &q, k, f64::INFINITY);
        if let Ok(mat) = half_traces_matrix(e, &q, k) {
            for (a, b) in run.values.iter().zip(&mat) {
                if a.is_finite() && a.abs() < 1e12 {
                    prop_assert!(rel(*a, *b) <= 1e-8, "{} vs {}", a, b);
                }
            }
        }
    }

    #[test]
    fn closed_forms_continuous_at_band_edge(lambda in 0.0f64..5.0, ell in 1u32..8, d in 1e-12f64..1e-6) {
        let q = ModelParams::with_coupling(lambda, ell).unwrap();
        for edge in [-2.0, 2.0] {
            for f in [x0_closed, x1_closed] {
                let lip = 2.0 * f64::from(ell).powi(3) * (1.0 + lambda);
                prop_assert!((f(edge + d, &q) - f(edge, &q)).abs() <= lip * d);
                prop_assert!((f(edge - d, &q) - f(edge, &q)).abs() <= lip * d);
            }
        }
    }

    #[test]
    fn escape_is_permanent(e in -3.0f64..9.0, lambda in 0.5f64..6.0, ell in 1u32..5) {
        let q = ModelParams::new(lambda, ell).unwrap();
        let run = half_traces_recursive(e, &q, 25, 1e100);
        if let Some(k) = run.escape_index {
            for x in &run.values[k + 1..] {
                prop_assert!(x.abs() > 1.0);
            }
        }
    }

    #[test]
    fn box_count_bounded_by_cells(bs in band_sets(), eps in 1e-3f64..2.0) {
        let n = box_count(&bs, eps);
        let (lo, hi) = (bs.bands()[0].lo, bs.bands().last().unwrap().hi);
        let span_cells = ((hi - lo) / eps).ceil() as u64 + 1;
        prop_assert!(n >= 1);
        prop_assert!(n <= span_cells);
        prop_assert!(n as f64 >= bs.measure() / eps - 1e-9);
    }

    #[test]
    fn box_count_monotone_on_nested_scales(bs in band_sets(), j in 0i32..10) {
        let fine = 2f64.powi(-j - 1);
        prop_assert!(box_count(&bs, fine) >= box_count(&bs, 2.0 * fine));
    }

    #[test]
    fn f_model_is_monotone(a in 0.0f64..1e6, b in 0.0f64..1e6) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(f_model(lo).unwrap() >= f_model(hi).unwrap());
        prop_assert!(f_model(hi).unwrap() <= 1.0);
    }

    #[test]
    fn csv_round_trip(bs in band_sets()) {
        let back = band_set_from_csv(&band_set_csv(&bs)).unwrap();
        prop_assert_eq!(back.bands(), bs.bands());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bands_satisfy_defining_inequality(lambda in 0.5f64..5.0, ell in 1u32..4, k in 1usize..7) {
        let q = ModelParams::new(lambda, ell).unwrap();
        let bs = sigma_k_bands(k, &q, 1e-11).unwrap();
        for b in bs.bands().iter().filter(|b| b.width() > 1e-8) {
            let mid = 0.5 * (b.lo + b.hi);
            let x = half_trace_at(mid, &q, k).to_f64();
            prop_assert!(x.abs() <= 1.0 + 1e-9, "x_{}({}) = {}", k, mid, x);
        }
        for w in bs.bands().windows(2) {
            let gap = 0.5 * (w[0].hi + w[1].lo);
            let x = half_trace_at(gap, &q, k).to_f64();
            prop_assert!(x.abs() >= 1.0 - 1e-9, "gap x_{}({}) = {}", k, gap, x);
        }
    }
}
