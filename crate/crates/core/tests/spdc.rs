use std::f64::consts::PI;

use bessel_herald::analysis::{annulus_fit, fwhm};
use bessel_herald::beams::{bg_spectrum, BGParams};
use bessel_herald::optics::{Element, OpticalTrain};
use bessel_herald::spdc::{
    conditional_spectrum, conditional_spectrum_scan, fiber_average, heralded_intensity, scan_profile, signal_train,
    unconditioned_intensity, z_sweep, Axis, HeraldSampling, HeraldSpec, PumpState, ScanSpec, Window,
};
use bessel_herald::{Complex64, ComplexField, Domain, Error, GridSpec, RealMap};
use proptest::prelude::*;

fn reference_pump() -> PumpState {
    let g = GridSpec::new(1024, 14.0).unwrap();
    let p = BGParams::new(1850.0, 0.046, 0.406).unwrap();
    PumpState::degenerate(bg_spectrum(&p, &g).unwrap(), 0.406).unwrap()
}

/// A narrower ring on a small grid, with room for herald shifts.
fn small_pump() -> PumpState {
    let g = GridSpec::new(256, 20.0).unwrap();
    let p = BGParams::new(600.0, 0.02, 0.406).unwrap();
    PumpState::degenerate(bg_spectrum(&p, &g).unwrap(), 0.406).unwrap()
}

fn delta_pump() -> PumpState {
    let g = GridSpec::new(64, 10.0).unwrap();
    let mut v = vec![Complex64::new(0.0, 0.0); g.len()];
    v[32 * 64 + 32] = Complex64::new(1.0, 0.0);
    PumpState::degenerate(ComplexField::new(g, Domain::Momentum, v).unwrap(), 0.406).unwrap()
}

#[test]
fn zero_herald_reproduces_the_pump() {
    let pump = reference_pump();
    let a = conditional_spectrum(&pump, [0.0, 0.0]).unwrap();
    assert_eq!(&a, pump.spectrum());
}

#[test]
fn plane_wave_pump_heralds_a_plane_wave() {
    let pump = delta_pump();
    let dk = pump.grid().dk();
    let a = conditional_spectrum(&pump, [3.0 * dk, -5.0 * dk]).unwrap();
    let (ix, iy) = (32 - 3, 32 + 5);
    assert_eq!(a.at(ix, iy), Complex64::new(1.0 / dk, 0.0));
    assert_eq!(a.values().iter().filter(|v| v.norm() > 0.0).count(), 1);
}

#[test]
fn heralded_ring_is_translated_not_reshaped() {
    let pump = reference_pump();
    let a = conditional_spectrum(&pump, [0.046, 0.0]).unwrap();
    let fit = annulus_fit(&a.intensity()).unwrap();
    let fit = fit.fit().unwrap();
    let dk = pump.grid().dk();
    assert!((fit.center[0] + 0.046).abs() < dk && fit.center[1].abs() < dk, "{:?}", fit.center);
    assert!((fit.kt_fit - 0.046).abs() < 0.01 * 0.046);
}

#[test]
fn shifts_that_wrap_are_rejected() {
    let pump = reference_pump();
    match conditional_spectrum(&pump, [0.2, 0.0]) {
        Err(Error::ShiftOverflow { fraction }) => assert!(fraction > 1e-6),
        other => panic!("{other:?}"),
    }
}

#[test]
fn point_herald_images_a_bessel_core() {
    let pump = reference_pump();
    let train = signal_train(0.812, 1e5, 3e5).unwrap();
    let herald = HeraldSpec::point([pump.ring_peak_kx(), 0.0]).unwrap();
    let map = heralded_intensity(&pump, &herald, &train, 0.0).unwrap();
    assert!((map.pitch() - 42.0).abs() < 1e-9);
    let profile = scan_profile(&map, &ScanSpec::new(1.0, Axis::Y, 400.0, 0.5).unwrap()).unwrap();
    let w = fwhm(&profile).unwrap();
    // J0²(x) = 1/2 at x = 1.12635, core radius scaled by f2/f1 = 3
    let want = 2.0 * 1.12635 / (0.046 / 3.0);
    assert!((w - want).abs() < 0.02 * want, "FWHM {w} vs {want}");
}

#[test]
fn ring_peak_search_finds_the_annulus() {
    let pump = reference_pump();
    assert!((pump.ring_peak_kx() - 0.046).abs() < pump.grid().dk());
}

fn relative_l2(a: &RealMap, b: &RealMap) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        num += (x - y).powi(2);
        den += x * x;
    }
    (num / den).sqrt()
}

#[test]
fn covariant_mixture_matches_node_by_node_propagation() {
    let pump = small_pump();
    let covariant = signal_train(0.812, 1e5, 3e5).unwrap();
    // a finite aperture far outside the beam changes nothing physically but
    // forces per-node propagation
    let direct = OpticalTrain::new(
        0.812,
        vec![
            Element::FourierSystem { f: 1e5 },
            Element::FourierSystem { f: 3e5 },
            Element::CircularAperture { radius: 1e9 },
        ],
    )
    .unwrap();
    let herald = HeraldSpec::new([0.02, 0.0], 0.006, HeraldSampling::Polar { n_radial: 3, n_azimuthal: 6 }).unwrap();
    for z in [0.0, 5e4] {
        let a = heralded_intensity(&pump, &herald, &covariant, z).unwrap();
        let b = heralded_intensity(&pump, &herald, &direct, z).unwrap();
        let err = relative_l2(&b, &a);
        assert!(err < 1e-6, "z = {z}: rel L2 {err:e}");
        assert!((a.integral() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn point_herald_is_a_pure_propagated_field() {
    let pump = small_pump();
    let train = signal_train(0.812, 1e5, 3e5).unwrap();
    let k = [0.021, -0.003];
    let map = heralded_intensity(&pump, &HeraldSpec::point(k).unwrap(), &train, 3e4).unwrap();
    let mut full = train.elements().to_vec();
    full.push(Element::FreeSpace { z: 3e4, model: Default::default() });
    let t = OpticalTrain::new(0.812, full).unwrap();
    let field = conditional_spectrum(&pump, k).unwrap().to_position().unwrap();
    let direct = bessel_herald::optics::run_train(field, &t).unwrap().output.intensity();
    assert!(relative_l2(&direct, &map) < 1e-6);
}

#[test]
fn full_acceptance_herald_equals_singles() {
    let pump = small_pump();
    let train = signal_train(0.812, 1e5, 3e5).unwrap();
    let acceptance = pump.singles_acceptance().unwrap();
    let singles = unconditioned_intensity(&pump, &acceptance, &train, 2e4).unwrap();
    let heralded = heralded_intensity(&pump, &acceptance, &train, 2e4).unwrap();
    assert_eq!(singles.map, heralded);
    assert!(singles.coverage_change.is_some());
}

#[test]
fn plane_wave_singles_are_flat_at_the_image_plane() {
    let pump = delta_pump();
    let train = signal_train(0.812, 1e5, 3e5).unwrap();
    let acc = pump.singles_acceptance().unwrap();
    assert!((acc.aperture_radius_k() - pump.grid().max_coord(Domain::Momentum)).abs() < 1e-15);
    let s = unconditioned_intensity(&pump, &acc, &train, 0.0).unwrap();
    let mean = s.map.integral() / (s.map.grid().extent().powi(2));
    assert!(s.map.values().iter().all(|v| (v - mean).abs() < 1e-9 * mean));
}

#[test]
fn zero_radius_scan_is_the_translated_pump_spectrum() {
    let pump = reference_pump();
    let dk = pump.grid().dk();
    let kc = (0.046 / dk).round() * dk;
    let scan = conditional_spectrum_scan(&pump, &HeraldSpec::point([kc, 0.0]).unwrap(), 0.0, None).unwrap();
    let shifted = conditional_spectrum(&pump, [kc, 0.0]).unwrap().intensity();
    let err = relative_l2(&shifted, &scan);
    assert!(err < 1e-9, "{err:e}");
}

#[test]
fn wider_apertures_widen_the_conditional_ring() {
    let pump = reference_pump();
    let kc = pump.ring_peak_kx();
    let mut last = 0.0;
    for r in [0.0, 2e-3, 4e-3, 7.74e-3, 1.2e-2] {
        let h = HeraldSpec::new([kc, 0.0], r, HeraldSampling::default()).unwrap();
        let map = conditional_spectrum_scan(&pump, &h, 0.0, None).unwrap();
        let dk = annulus_fit(&map).unwrap().fit().unwrap().delta_k;
        assert!(dk >= last, "herald radius {r}: δk {dk} < {last}");
        last = dk;
    }
    let h = HeraldSpec::new([kc, 0.0], 7.74e-3, HeraldSampling::default()).unwrap();
    let mut last = 0.0;
    for rs in [0.0, 2e-3, 4e-3, 8e-3] {
        let map = conditional_spectrum_scan(&pump, &h, rs, None).unwrap();
        let dk = annulus_fit(&map).unwrap().fit().unwrap().delta_k;
        assert!(dk >= last, "fiber radius {rs}: δk {dk} < {last}");
        last = dk;
    }
}

#[test]
fn scan_window_masks_and_validates() {
    let pump = small_pump();
    let h = HeraldSpec::point([0.0, 0.0]).unwrap();
    let w = Window { center: [0.0, 0.0], half_width: 0.05 };
    let map = conditional_spectrum_scan(&pump, &h, 0.0, Some(w)).unwrap();
    let g = map.grid();
    for i in 0..g.len() {
        if g.k(i % g.n()).abs() > 0.05 || g.k(i / g.n()).abs() > 0.05 {
            assert_eq!(map.values()[i], 0.0);
        }
    }
    let outside = Window { center: [0.1, 0.0], half_width: 0.1 };
    assert!(conditional_spectrum_scan(&pump, &h, 0.0, Some(outside)).is_err());
}

#[test]
fn single_plane_sweep_matches_a_direct_scan() {
    let pump = small_pump();
    let train = signal_train(0.812, 1e5, 3e5).unwrap();
    let herald = HeraldSpec::new([0.02, 0.0], 0.004, HeraldSampling::default()).unwrap();
    let scan = ScanSpec::new(25.0, Axis::Y, 2000.0, 10.0).unwrap();
    let sweep = z_sweep(&pump, &herald, None, &train, &[0.0], &scan).unwrap();
    assert_eq!(sweep.planes.len(), 1);
    let map = fiber_average(&heralded_intensity(&pump, &herald, &train, 0.0).unwrap(), 25.0).unwrap();
    let direct = scan_profile(&map, &scan).unwrap();
    let plane = &sweep.planes[0];
    for (a, b) in plane.coincidences.coords().iter().zip(direct.coords()) {
        assert!((a - b).abs() < 1e-9);
    }
    for (a, b) in plane.coincidences.values().iter().zip(direct.values()) {
        assert!((a - b).abs() <= 1e-9 * plane.r_c);
    }
}

#[test]
fn sweep_rejects_unsorted_planes() {
    let pump = small_pump();
    let train = signal_train(0.812, 1e5, 3e5).unwrap();
    let herald = HeraldSpec::point([0.02, 0.0]).unwrap();
    let scan = ScanSpec::new(25.0, Axis::Y, 500.0, 10.0).unwrap();
    assert!(z_sweep(&pump, &herald, None, &train, &[0.0, 0.0], &scan).is_err());
    assert!(z_sweep(&pump, &herald, None, &train, &[], &scan).is_err());
    let wrong = signal_train(0.406, 1e5, 3e5).unwrap();
    assert!(z_sweep(&pump, &herald, None, &wrong, &[0.0], &scan).is_err());
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let pump = small_pump();
            let train = signal_train(0.812, 1e5, 3e5).unwrap();
            let herald = HeraldSpec::new([0.02, 0.0], 0.004, HeraldSampling::default()).unwrap();
            let scan = ScanSpec::new(25.0, Axis::Y, 1500.0, 10.0).unwrap();
            let sweep = z_sweep(&pump, &herald, None, &train, &[0.0, 2e4, 4e4], &scan).unwrap();
            sweep
                .planes
                .iter()
                .flat_map(|p| p.coincidences.values().iter().chain(p.singles.values()).map(|v| v.to_bits()).collect::<Vec<_>>())
                .collect::<Vec<u64>>()
        })
    };
    assert_eq!(run(1), run(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn translation_is_exact_on_shared_samples(mx in -40i64..40, my in -40i64..40) {
        let pump = small_pump();
        let g = *pump.grid();
        let dk = g.dk();
        let n = g.n() as i64;
        let a = conditional_spectrum(&pump, [mx as f64 * dk, my as f64 * dk]).unwrap();
        let s = pump.spectrum();
        let floor = 1e-3 * s.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut ratio = None;
        for iy in 0..n {
            for ix in 0..n {
                let (jx, jy) = (ix + mx, iy + my);
                let v = a.at(ix as usize, iy as usize);
                if jx < 0 || jy < 0 || jx >= n || jy >= n {
                    prop_assert_eq!(v, Complex64::new(0.0, 0.0));
                    continue;
                }
                let src = s.at(jx as usize, jy as usize);
                if src.norm() > floor {
                    let r = v / src;
                    let r0 = *ratio.get_or_insert(r);
                    prop_assert!((r - r0).norm() < 1e-12);
                }
            }
        }
        prop_assert!((ratio.unwrap().re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fractional_shift_moves_the_ring_center(fx in -0.01..0.01f64, fy in -0.01..0.01f64) {
        let pump = small_pump();
        let a = conditional_spectrum(&pump, [fx, fy]).unwrap();
        let c = a.intensity().centroid().unwrap();
        prop_assert!((c[0] + fx).abs() < 1e-6 && (c[1] + fy).abs() < 1e-6);
        prop_assert!((a.energy() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn idler_fiber_radius_in_wavevector_units() {
    let r = HeraldSpec::fiber_radius_k(100.0, 2.0 * PI / 0.812, 1e5);
    assert!((r - 7.74e-3).abs() < 1e-5);
}
