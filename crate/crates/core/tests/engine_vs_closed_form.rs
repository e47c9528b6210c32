//! The general S-matrix engine against the closed-form device amplitudes,
//! plus independent oracles for the numerical kernels.

use num_complex::Complex64;
use qstar_core::analysis::locate_pole;
use qstar_core::devices::{FilterN3, GateN4};
use qstar_core::numerics::{find_root, integrate, Tolerance};
use qstar_core::scattering::smatrix_at_momenta;
use qstar_core::Device;

fn k_grid() -> Vec<f64> {
    (0..400)
        .map(|i| 0.05 + (5.0 - 0.05) * (i as f64 + 0.5) / 400.0)
        .collect()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() < tol
}

#[test]
fn three_line_amplitudes_match_engine() {
    for (a, b, u) in [(1.0, 3.0, 1.0), (1.7, 0.6, 2.3), (0.4, 5.0, 0.5)] {
        let f = FilterN3::new(a, b, u).unwrap();
        for k in k_grid() {
            let sm = f.engine_smatrix(k).unwrap();
            let amp = f.amplitudes(k);
            assert!(close(sm.get(0, 0), amp.s11, 1e-10), "S11 a={a} b={b} k={k}");
            assert!(close(sm.get(1, 0), amp.s21, 1e-10), "S21 a={a} b={b} k={k}");
            if k > f.threshold_momentum() {
                assert!(close(sm.get(2, 0), amp.s31, 1e-10), "S31 a={a} b={b} k={k}");
            } else {
                assert_eq!(sm.probabilities().get(2, 0), Some(0.0));
            }
        }
    }
}

#[test]
fn four_line_amplitudes_match_engine() {
    for (a, u) in [
        (1.0, 1.0),
        (std::f64::consts::FRAC_1_SQRT_2, 1.0),
        (0.35, 2.0),
        (1.9, 0.3),
    ] {
        let g = GateN4::new(a, u).unwrap();
        for k in k_grid() {
            let sm = g.engine_smatrix(k).unwrap();
            let amp = g.closed_form_amplitudes(k);
            assert!(close(sm.get(0, 0), amp.s11, 1e-10), "S11 a={a} k={k}");
            assert!(close(sm.get(1, 0), amp.s21, 1e-10), "S21 a={a} k={k}");
            assert!(close(sm.get(3, 0), amp.s41, 1e-10), "S41 a={a} k={k}");
            if k > g.threshold_momentum() {
                assert!(close(sm.get(2, 0), amp.s31, 1e-10), "S31 a={a} k={k}");
            }
        }
    }
}

#[test]
fn control_line_prefactor_is_quarter_power() {
    // S31/S21 = (b/a)·(1 − U/k²)^{1/4} above threshold.
    let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
    for k in [1.01, 1.5, 3.0, 9.0] {
        let sm = f.engine_smatrix(k).unwrap();
        let ratio = sm.get(2, 0) / sm.get(1, 0);
        let expected = 3.0 * (1.0 - 1.0 / (k * k)).powf(0.25);
        assert!((ratio - Complex64::new(expected, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn reciprocity_between_equal_momentum_lines() {
    let g = GateN4::new(1.3, 1.0).unwrap();
    for k in [0.4, 1.2, 2.5] {
        let sm = g.engine_smatrix(k).unwrap();
        for (i, j) in [(0, 1), (0, 3), (1, 3)] {
            assert!(close(sm.get(i, j), sm.get(j, i), 1e-12));
        }
    }
    let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
    let sm = f.engine_smatrix(2.0).unwrap();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!(close(sm.get(i, j), sm.get(j, i), 1e-12));
    }
}

#[test]
fn quadrature_matches_dense_trapezoid() {
    let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
    let p = |k: f64| f.transmission(k);
    let (lo, hi) = (0.9, 1.1);
    let n = 1_000_000;
    let h = (hi - lo) / n as f64;
    let mut trapezoid = 0.5 * (p(lo) + p(hi));
    for i in 1..n {
        trapezoid += p(lo + h * i as f64);
    }
    trapezoid *= h;
    let value = integrate(p, lo, hi, &[1.0], Tolerance::absolute(1e-12)).unwrap();
    assert!((value - trapezoid).abs() < 1e-6, "{value} vs {trapezoid}");
}

#[test]
fn half_maximum_edges_by_bisection() {
    let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
    let g = |k: f64| f.transmission(k) - 0.5;
    let tol = Tolerance::absolute(1e-15);
    let hi = find_root(g, 1.0, 1.1, tol).unwrap();
    let lo = find_root(g, 0.9, 1.0, tol).unwrap();
    let width = hi * hi - lo * lo;
    let approx = 4.7 / 81.0;
    assert!((width - approx).abs() / approx < 0.1, "W = {width}");
}

#[test]
fn engine_blows_up_at_second_sheet_pole() {
    // Reversing the control-line momentum puts the engine on the unphysical
    // sheet; the located pole must sit where |S21| diverges there.
    for device in [
        Device::from(FilterN3::new(1.0, 3.0, 1.0).unwrap()),
        Device::from(GateN4::new(1.0, 1.0).unwrap()),
    ] {
        let pole = locate_pole(&device).unwrap().k_pole;
        let s21 = |k: f64| {
            let mut momenta: Vec<Complex64> = device
                .potentials()
                .iter()
                .map(|&u| Complex64::new((k * k - u).sqrt(), 0.0))
                .collect();
            momenta[2] = -momenta[2];
            smatrix_at_momenta(&device.boundary_condition(), &momenta).map(|s| s[(1, 0)].norm())
        };
        let near = s21(pole * (1.0 + 1e-9)).unwrap();
        let away = s21(pole * 1.2).unwrap();
        assert!(near > 1e6 * away, "near {near}, away {away}");
    }
}
