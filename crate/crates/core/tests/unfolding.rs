use levelstat_core::rmt::{sample_goe, sample_spectrum, EnsembleKind, EnsembleSpec};
use levelstat_core::spectral::{bulk, eigenvalues, spacings, unfold, BULK_TRIM};
use levelstat_core::stats::ratios;
use levelstat_core::{Provenance, Spectrum, UnfoldingConfig};
use proptest::prelude::*;

fn ext(e: Vec<f64>) -> Spectrum {
    Spectrum::new(
        e,
        Provenance::External {
            label: "test".into(),
        },
    )
    .unwrap()
}

#[test]
fn goe_semicircle_support() {
    let n = 1000;
    let spec = EnsembleSpec::new(EnsembleKind::Goe, n, 21).unwrap();
    let s = eigenvalues(&sample_goe(&spec, 0).unwrap(), Provenance::External { label: "goe".into() }).unwrap();
    let edge = 2.1 * (2.0 * n as f64).sqrt();
    let outside = s.energies.iter().filter(|e| e.abs() > edge).count();
    assert!((outside as f64) < 0.005 * n as f64, "{outside}");
}

#[test]
fn ladder_unfolds_to_unit_spacing() {
    let e: Vec<f64> = (0..500).map(|i| 3.0 * i as f64 - 7.0).collect();
    let u = unfold(&ext(e), UnfoldingConfig::default()).unwrap();
    // Kernels reach about 8σ ≈ 100 levels; beyond that the edge is invisible.
    for s in bulk(&spacings(&u.epsilons), 0.2) {
        assert!((s - 1.0).abs() < 1e-6, "{s}");
    }
}

#[test]
fn goe_unfolds_to_unit_mean_spacing() {
    let spec = EnsembleSpec::new(EnsembleKind::Goe, 1000, 4).unwrap();
    let u = unfold(&sample_spectrum(&spec, 0).unwrap(), UnfoldingConfig::default()).unwrap();
    let s = spacings(&u.epsilons);
    let b = bulk(&s, BULK_TRIM);
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    assert!((mean - 1.0).abs() < 0.02, "{mean}");
    // The staircase counts every level: ε spans roughly N.
    let span = u.epsilons.last().unwrap() - u.epsilons[0];
    assert!((span - 1000.0).abs() < 30.0, "{span}");
}

fn sorted_levels() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 50..200).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unfolding_is_monotone(levels in sorted_levels(), alpha in 1usize..10) {
        prop_assume!(levels.len() > 2 * alpha + 1);
        let u = unfold(&ext(levels), UnfoldingConfig::with_alpha(alpha)).unwrap();
        for w in u.epsilons.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn unfolding_is_affine_invariant(levels in sorted_levels(), a in 0.01f64..100.0, b in -100.0f64..100.0) {
        let base = unfold(&ext(levels.clone()), UnfoldingConfig::with_alpha(5)).unwrap();
        let moved = unfold(&ext(levels.iter().map(|e| a * e + b).collect()), UnfoldingConfig::with_alpha(5)).unwrap();
        for (x, y) in base.epsilons.iter().zip(&moved.epsilons) {
            prop_assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn ratios_are_affine_invariant(levels in sorted_levels(), a in 0.5f64..2.0, b in -10.0f64..10.0) {
        let moved: Vec<f64> = levels.iter().map(|e| a * e + b).collect();
        let r0 = ratios(&spacings(&levels));
        let r1 = ratios(&spacings(&moved));
        if let (Ok(r0), Ok(r1)) = (r0, r1) {
            prop_assert_eq!(r0.ratios.len(), r1.ratios.len());
            for (x, y) in r0.ratios.iter().zip(&r1.ratios) {
                // Shifts and scalings change spacings at the level of the
                // rounding of the shifted energies.
                let scale = levels.iter().fold(1.0f64, |m, e| m.max(e.abs())) + b.abs();
                let s = spacings(&levels).iter().cloned().fold(f64::INFINITY, f64::min).max(1e-300);
                prop_assert!((x - y).abs() <= 1e-12_f64.max(8.0 * f64::EPSILON * scale / s), "{} vs {}", x, y);
            }
        }
    }
}
