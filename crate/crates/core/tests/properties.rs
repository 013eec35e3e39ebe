use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use ringlink_core::jones::{output_intensity_closed_form, polarizer_matrix};
use ringlink_core::ring::{Coupling, CouplingSpec, PerPol, PolMode, RingModel, SpectralRingParams};
use ringlink_core::{JonesMatrix, JonesVector, PolarizerAngle};

fn spectral_ring(f0: f64, delta: f64, fsr: f64, fwhm: f64) -> RingModel {
    RingModel::from_spectral(&SpectralRingParams {
        f0_hz: PerPol::new(f0, f0 + delta),
        fsr_hz: PerPol::splat(fsr),
        coupling: CouplingSpec::Linewidth { fwhm_hz: fwhm, a: 0.9982 },
        tm_coupling: None,
        t_ref_c: 25.0,
        thermal_rate_hz_per_c: PerPol::splat(0.0),
    })
    .unwrap()
}

/// The closed-form polarizer intensity against `|P D E|^2` built from the
/// matrices, 1000 random draws.
#[test]
fn closed_form_matches_matrix_pipeline() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let theta = PolarizerAngle::from_radians(rng.random_range(0.0..PI));
        let d_te = Complex64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI));
        let d_tm = Complex64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI));
        let e0: f64 = rng.random_range(0.1..3.0);
        let closed = output_intensity_closed_form(theta, d_te, d_tm, e0);
        let out = polarizer_matrix(theta)
            * JonesMatrix::diagonal(d_te, d_tm)
            * JonesVector::linear(e0 * e0, FRAC_PI_4);
        let matrix = out.power();
        let rel = (closed - matrix).abs() / matrix.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-12, "worst relative deviation {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn drop_plus_through_never_exceeds_input(t in 0.0f64..0.9999, a in 0.5f64..=1.0, phi in -20.0f64..20.0) {
        let c = Coupling::new(t, a).unwrap();
        let total = c.drop_at_phase(phi).norm_sqr() + c.through_at_phase(phi).norm_sqr();
        prop_assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn lossless_ring_conserves_power(t in 0.0f64..0.9999, phi in -20.0f64..20.0) {
        let c = Coupling::new(t, 1.0).unwrap();
        let total = c.drop_at_phase(phi).norm_sqr() + c.through_at_phase(phi).norm_sqr();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transfer_is_fsr_periodic(offset in -60_000_000_000i64..60_000_000_000, k in -3i64..=3) {
        // integer-Hz grid so f and f + k fsr are both exact
        let fsr = 49_000_000_000.0;
        let f0 = 193_400_000_000_000.0;
        let ring = spectral_ring(f0, 16.6e9, fsr, 140e6);
        let f = f0 + offset as f64;
        for pol in PolMode::ALL {
            let p1 = ring.drop_transfer(pol, f).norm_sqr();
            let p2 = ring.drop_transfer(pol, f + k as f64 * fsr).norm_sqr();
            prop_assert!((p1 - p2).abs() <= 1e-9 * p1.max(1e-6));
            let t1 = ring.through_transfer(pol, f).norm_sqr();
            let t2 = ring.through_transfer(pol, f + k as f64 * fsr).norm_sqr();
            prop_assert!((t1 - t2).abs() <= 1e-9 * t1.max(1e-6));
        }
    }

    #[test]
    fn linewidth_round_trip(ratio in (1.0f64 / 500.0)..(1.0 / 20.0), a in 0.99f64..=1.0) {
        let fsr = 49e9;
        let fwhm = ratio * fsr;
        match Coupling::from_linewidth(fwhm, fsr, a) {
            Ok(c) => {
                prop_assert!((c.fwhm(fsr) / fwhm - 1.0).abs() < 1e-3);
                // measured on the drop response itself
                let peak = c.drop_at_phase(0.0).norm_sqr();
                let half = c.drop_at_phase(PI * fwhm / fsr).norm_sqr();
                prop_assert!((half / peak - 0.5).abs() < 1e-3);
            }
            Err(e) => {
                let infeasible = matches!(e, ringlink_core::Error::InfeasibleLinewidth { .. });
                prop_assert!(infeasible);
            }
        }
    }

    #[test]
    fn polarizer_is_hermitian_projector(deg in -400.0f64..400.0) {
        let p = polarizer_matrix(PolarizerAngle::from_degrees(deg));
        prop_assert!((p * p).max_abs_diff(&p) < 1e-15);
        prop_assert!(p.adjoint().max_abs_diff(&p) < 1e-16);
        let theta = PolarizerAngle::from_degrees(deg);
        prop_assert!((0.0..PI).contains(&theta.radians()));
    }

    #[test]
    fn detected_beat_scales_with_power(alpha in 0.01f64..100.0, m in 0.01f64..0.5) {
        use ringlink_core::link::photodetect;
        use ringlink_core::modulation::{cw_carrier, intensity_modulate};
        use ringlink_core::ModulatorDrive;
        let s = intensity_modulate(&cw_carrier(193.4e12, 1e-3, 0.4).unwrap(), &ModulatorDrive::new(5e9, m)).unwrap();
        let b1 = photodetect(&s, 5e9, 1.0).unwrap();
        let b2 = photodetect(&s.scale_power(alpha), 5e9, 1.0).unwrap();
        prop_assert!((b2 - b1 * alpha).norm() <= 1e-12 * (b1 * alpha).norm());
    }
}
