use proptest::prelude::*;
use wsl_core::abelian::{abelian_scattering_exact, plane_wave, rho_regular_u, WavePacket};
use wsl_core::fields::{monopole_residual, Axis, GridSpec};
use wsl_core::geometry::Point;
use wsl_core::scattering::{check_scattering_properties, circle_nodes, sigma_nodes};

fn box_grid(half: f64, n: usize) -> GridSpec {
    GridSpec::new(Axis::new(-half, half, n), Axis::new(-half, half, n), Axis::new(0.0, 0.0, 1)).unwrap()
}

#[test]
fn unit_wavevector_has_unit_frequency() {
    let s = plane_wave(1.0, 0.0, 1.0).unwrap();
    assert_eq!(s.omega, 1.0);
    assert_eq!(plane_wave(3.0, 4.0, 0.1).unwrap().omega, 5.0);
}

#[test]
fn zero_wavevector_rejected() {
    assert!(plane_wave(0.0, 0.0, 1.0).is_err());
}

#[test]
fn embedded_field_is_anti_hermitian_and_static_in_a0() {
    let s = plane_wave(0.4, 0.9, 0.7).unwrap();
    let f = s.sample(&Point::new(0.3, -0.1, 0.5), 3);
    assert!(f.hermitian_defect() < 1e-15);
    assert!(f.at.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn grid_residual_is_second_order() {
    let s = plane_wave(0.8, -0.6, 0.5).unwrap();
    let r = |n: usize| monopole_residual(&s.sample_field(&GridSpec::square(1.0, n, 0.3), 2)).unwrap().max;
    let (a, b, c) = (r(11), r(21), r(41));
    assert!((3.5..4.5).contains(&(a / b)) && (3.5..4.5).contains(&(b / c)), "{a} {b} {c}");
}

#[test]
fn rho_regularity_of_zero_field() {
    let s = plane_wave(1.0, 0.5, 0.0).unwrap();
    let r = rho_regular_u(&s, 0.7, &box_grid(2.0, 11), 0, 0.01);
    assert!(r.u.iter().all(|v| *v == 0.0));
    assert_eq!(r.exit_max, 0.0);
}

/// `u` in closed form: the integrand is `C cos(k.p)` and the path starts on
/// the upstream edge of the box.
fn u_oracle(kx: f64, ky: f64, amp: f64, alpha: f64, half: f64, x: f64, y: f64) -> f64 {
    let k2 = kx * kx + ky * ky;
    let omega = k2.sqrt();
    let coef = amp * (omega / k2) * (ky * alpha.sin() + kx * alpha.cos()) + amp;
    let (dx, dy) = (alpha.sin(), -alpha.cos());
    let mut len = f64::INFINITY;
    for (c, d) in [(x, dx), (y, dy)] {
        if d > 1e-15 {
            len = len.min((c + half) / d);
        } else if d < -1e-15 {
            len = len.min((c - half) / d);
        }
    }
    let phase0 = kx * (x - len * dx) + ky * (y - len * dy);
    let kd = kx * dx + ky * dy;
    if kd.abs() < 1e-12 {
        coef * phase0.cos() * len
    } else {
        coef * ((phase0 + len * kd).sin() - phase0.sin()) / kd
    }
}

#[test]
fn parallel_wave_gives_sinusoid_and_no_decay() {
    // k parallel to (sin a, -cos a) for a = 3 pi / 4
    let alpha = 0.75 * std::f64::consts::PI;
    let (kx, ky) = (alpha.sin(), -alpha.cos());
    let s = plane_wave(kx, ky, 1.0).unwrap();
    let g = box_grid(4.0, 33);
    let r = rho_regular_u(&s, alpha, &g, 0, 0.005);
    assert!(!r.decays);
    for k in [0, 100, 500, 1000] {
        let p = g.point(k);
        let want = u_oracle(kx, ky, 1.0, alpha, 4.0, p.x, p.y);
        assert!((r.u[k] - want).abs() < 1e-9, "{} {want}", r.u[k]);
    }
}

#[test]
fn directional_derivative_reproduces_integrand() {
    let s = plane_wave(1.2, 0.3, 0.4).unwrap();
    let alpha = 2.1f64;
    let g = box_grid(3.0, 61);
    let r = rho_regular_u(&s, alpha, &g, 0, 0.002);
    let h = 1e-3;
    let (px, py) = (0.4, -0.9);
    let (dx, dy) = (alpha.sin(), -alpha.cos());
    let du = (u_oracle(1.2, 0.3, 0.4, alpha, 3.0, px + h * dx, py + h * dy)
        - u_oracle(1.2, 0.3, 0.4, alpha, 3.0, px - h * dx, py - h * dy))
        / (2.0 * h);
    let p = Point::new(px, py, 0.0);
    let (a1, a2) = s.a(&p);
    let want = a1.v * alpha.sin() - a2.v * alpha.cos() + s.phi(&p).v;
    assert!((du - want).abs() < 1e-6);
    // numerical u against the oracle on grid nodes
    let err = (0..g.len()).step_by(37).map(|k| {
        let q = g.point(k);
        (r.u[k] - u_oracle(1.2, 0.3, 0.4, alpha, 3.0, q.x, q.y)).abs()
    });
    assert!(err.fold(0.0, f64::max) < 1e-9);
}

#[test]
fn zero_packet_has_identity_scattering() {
    let pk = WavePacket::new(1.0, 0.0, 0.0, 1.0).unwrap();
    let s = abelian_scattering_exact(&pk, &circle_nodes(4), &sigma_nodes(3.0, 7));
    assert!(s.values.iter().all(|m| m[(0, 0)] == 1.0.into()));
}

#[test]
fn small_packet_data_is_positive_and_close_to_identity() {
    let pk = WavePacket::new(2.0, 1.0, 0.02, 1.0).unwrap();
    let s = abelian_scattering_exact(&pk, &circle_nodes(6), &sigma_nodes(5.0, 29));
    let rep = check_scattering_properties(&s, 0.1, 1e-8);
    assert!(rep.small && rep.hermitian_nonneg && rep.transversal, "{rep:?}");
    assert!(s.values.iter().all(|m| m[(0, 0)].im == 0.0 && m[(0, 0)].re > 0.0));
    assert!(rep.smallness > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispersion_and_gauge_constraints(kx in -3.0..3.0f64, ky in -3.0..3.0f64, amp in -2.0..2.0f64) {
        prop_assume!(kx.hypot(ky) > 0.05);
        let s = plane_wave(kx, ky, amp).unwrap();
        prop_assert!((s.omega * s.omega - kx * kx - ky * ky).abs() <= 1e-12);
        let g = GridSpec::square(2.0, 7, 0.8);
        prop_assert!(s.constraint_defect(&g) <= 1e-10);
        prop_assert!(s.exact_residual(&g.points()).max <= 1e-10);
    }
}
