use std::sync::Arc;

use proptest::prelude::*;
use wsl_core::fields::{extract_monopole, monopole_residual, GridSpec};
use wsl_core::geometry::Point;
use wsl_core::holomorphic::{CharacteristicProjector, PolyCurve, ProjectorField};
use wsl_core::linalg::{c, identity, op_norm, reality_samples, CMatrix, HermitianProjector, RationalMatrixMap, C64};
use wsl_core::soliton::{
    add_soliton, bt_superpose, bt_update_defect, check_ward_frame, limit_pole_data, one_soliton,
    spatial_infinity_limit, subtract_pole_data, subtract_simple_pole, Frame, FrameRef, IdentityFrame, LimitConfig,
    LimitMethod, PoleDatum, RecoveredProjector, Stencil, WardFrame,
};

fn cw() -> PolyCurve {
    PolyCurve::new(vec![vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap()
}

fn wc() -> PolyCurve {
    PolyCurve::new(vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, -0.5)]]).unwrap()
}

fn pts() -> Vec<Point> {
    vec![
        Point::new(0.3, -0.2, 0.1),
        Point::new(-1.1, 0.7, 0.4),
        Point::new(0.5, 1.3, -0.6),
        Point::new(1.7, -0.9, 1.2),
        Point::new(-0.4, -1.5, -1.0),
    ]
}

fn source(alpha: C64, curve: PolyCurve) -> Arc<CharacteristicProjector> {
    Arc::new(CharacteristicProjector::new(alpha, vec![curve]).unwrap())
}

fn map_distance(a: &dyn Frame, b: &dyn Frame, points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for p in points {
        let (ma, mb) = (a.map_at(p).unwrap(), b.map_at(p).unwrap());
        for tau in reality_samples() {
            d = d.max(op_norm(&(ma.eval(tau).unwrap() - mb.eval(tau).unwrap())));
        }
    }
    d
}

#[test]
fn uniton_frame_is_blaschke_factor_of_characteristic_projector() {
    let f = one_soliton(c(0.0, 1.0), vec![cw()]).unwrap();
    for p in pts() {
        let w = c(p.y, p.x);
        let pi = HermitianProjector::project_onto(&[cw().eval(w)]).unwrap();
        let want = RationalMatrixMap::blaschke(c(0.0, 1.0), &pi);
        assert!(f.map_at(&p).unwrap().coefficient_distance(&want) < 1e-14);
    }
}

#[test]
fn constant_curve_gives_trivial_lax_pair() {
    let f = one_soliton(c(0.4, 1.1), vec![PolyCurve::constant(&[c(1.0, 0.0), c(0.5, 0.5)])]).unwrap();
    for p in pts() {
        let st = Stencil::new(&f, &p, 1e-5).unwrap();
        let (pp, qq) = st.lax(c(0.3, 0.7)).unwrap();
        assert!(op_norm(&pp) < 1e-12 && op_norm(&qq) < 1e-12);
    }
}

#[test]
fn lax_pair_independent_of_tau_at_reference_values() {
    let f = one_soliton(c(1.0, 1.0), vec![cw()]).unwrap();
    for p in pts() {
        let st = Stencil::new(&f, &p, 1e-5).unwrap();
        let lax: Vec<_> = [c(2.0, 0.0), c(3.0, 1.0), c(-5.0, 0.0)].iter().map(|t| st.lax(*t).unwrap()).collect();
        for (a, _) in &lax {
            assert!(op_norm(&(a - &lax[0].0)) < 1e-8);
        }
    }
}

#[test]
fn real_pole_rejected() {
    assert!(one_soliton(c(1.0, 0.0), vec![cw()]).is_err());
}

#[test]
fn superposing_on_identity_gives_the_one_soliton() {
    let alpha = c(-0.3, 0.8);
    let id: FrameRef = Arc::new(IdentityFrame { n: 2 });
    let a = bt_superpose(id, alpha, source(alpha, cw())).unwrap();
    let b = one_soliton(alpha, vec![cw()]).unwrap();
    assert!(map_distance(&a, &b, &pts()) < 1e-14);
}

#[test]
fn two_solitons_have_simple_poles_at_both_points() {
    let one: FrameRef = Arc::new(one_soliton(c(0.0, 1.0), vec![cw()]).unwrap());
    let two = bt_superpose(one, c(0.0, 2.0), source(c(0.0, 2.0), cw())).unwrap();
    for p in pts() {
        let m = two.map_at(&p).unwrap();
        for a in [c(0.0, 1.0), c(0.0, 2.0)] {
            assert_eq!(m.order_at(a), 1);
            assert!(op_norm(&m.residue(a)) > 1e-3);
        }
        assert_eq!(m.poles.len(), 2);
    }
}

#[test]
fn update_law_on_two_soliton() {
    let one: FrameRef = Arc::new(one_soliton(c(0.0, 1.0), vec![cw()]).unwrap());
    let src = source(c(0.0, 2.0), cw());
    for p in pts().iter().chain(&[Point::new(2.0, 2.0, 0.0), Point::new(-2.0, 0.1, 1.5)]) {
        for tau in [c(0.3, 0.4), c(-1.2, 0.1)] {
            assert!(bt_update_defect(one.as_ref(), c(0.0, 2.0), src.as_ref(), p, tau, 1e-5).unwrap() < 1e-6);
        }
    }
}

#[test]
fn coincident_pole_is_rejected() {
    let one: FrameRef = Arc::new(one_soliton(c(0.0, 1.0), vec![cw()]).unwrap());
    assert!(bt_superpose(one.clone(), c(0.0, 1.0), source(c(0.0, 1.0), wc())).is_err());
    assert!(bt_superpose(one, c(0.0, -1.0), source(c(0.0, -1.0), wc())).is_err());
}

#[test]
fn simple_limit_equals_one_soliton() {
    let alpha = c(0.2, 1.4);
    let a = limit_pole_data(PoleDatum::new(alpha, vec![wc()]).unwrap()).unwrap();
    let b = one_soliton(alpha, vec![wc()]).unwrap();
    assert!(map_distance(&a, &b, &pts()) < 1e-10);
}

fn double_datum() -> PoleDatum {
    PoleDatum::new(c(0.0, 1.0), vec![cw(), PolyCurve::constant(&[c(0.0, 0.0), c(1.0, 0.0)])]).unwrap()
}

#[test]
fn double_pole_limit_is_a_ward_frame() {
    let f = limit_pole_data(double_datum()).unwrap();
    for p in pts() {
        assert_eq!(f.map_at(&p).unwrap().order_at(c(0.0, 1.0)), 2);
    }
    let r = check_ward_frame(&f, &pts(), 1e-5).unwrap();
    assert!(r.reality <= 1e-10, "{r:?}");
    assert!(r.tau_independence <= 1e-6, "{r:?}");
    assert!(r.normalization <= 1e-12, "{r:?}");
}

#[test]
fn richardson_limit_agrees_with_series_limit() {
    let datum = double_datum();
    let series = limit_pole_data(datum.clone()).unwrap();
    let cfg = LimitConfig { method: LimitMethod::Richardson, ..Default::default() };
    let rich = WardFrame::trivial(2).with_limit_config(cfg).add_pole(datum).unwrap();
    assert!(map_distance(&series, &rich, &pts()) < 1e-7);
}

#[test]
fn adding_a_simple_pole_matches_superposition() {
    let one: FrameRef = Arc::new(one_soliton(c(0.0, 1.0), vec![cw()]).unwrap());
    let alpha = c(-0.5, 1.5);
    let a = add_soliton(one.clone(), PoleDatum::new(alpha, vec![wc()]).unwrap()).unwrap();
    let b = bt_superpose(one, alpha, source(alpha, wc())).unwrap();
    assert!(map_distance(&a, &b, &pts()) < 1e-12);
}

#[test]
fn double_pole_added_onto_soliton() {
    let one: FrameRef = Arc::new(one_soliton(c(0.0, 2.0), vec![cw()]).unwrap());
    let f = add_soliton(one, double_datum()).unwrap();
    for p in pts() {
        let m = f.map_at(&p).unwrap();
        assert_eq!(m.order_at(c(0.0, 2.0)), 1);
        assert_eq!(m.order_at(c(0.0, 1.0)), 2);
        assert!(op_norm(&m.coefficient(c(0.0, 1.0), 2)) > 1e-3);
    }
    let mut poles = f.pole_data();
    poles.sort_by(|a, b| a.0.im.total_cmp(&b.0.im));
    assert_eq!(poles, vec![(c(0.0, 1.0), 2), (c(0.0, 2.0), 1)]);
}

#[test]
fn subtracting_a_lone_factor_leaves_identity() {
    let alpha = c(0.3, 0.9);
    let g: FrameRef = Arc::new(one_soliton(alpha, vec![wc()]).unwrap());
    let (right, rem) = subtract_simple_pole(g.clone(), alpha).unwrap();
    assert!(map_distance(&rem, &IdentityFrame { n: 2 }, &pts()) < 1e-12);
    assert!(map_distance(&right, g.as_ref(), &pts()) < 1e-12);
}

#[test]
fn recovered_projector_satisfies_characteristic_equations() {
    let base: FrameRef = Arc::new(one_soliton(c(0.0, 2.0), vec![cw()]).unwrap());
    let alpha = c(0.0, 1.0);
    let two: FrameRef = Arc::new(bt_superpose(base, alpha, source(alpha, wc())).unwrap());
    let rp = RecoveredProjector { frame: two, alpha };
    let h = 1e-4;
    for p in pts() {
        let pi = |q: &Point| rp.projector_at(q).unwrap().into_matrix();
        let d = |dxi: f64, deta: f64, dy: f64| {
            (pi(&p.shifted_lc(h * dxi, h * deta, h * dy)) - pi(&p.shifted_lc(-h * dxi, -h * deta, -h * dy)))
                / C64::from(2.0 * h)
        };
        let (dxi, deta, dy) = (d(1.0, 0.0, 0.0), d(0.0, 1.0, 0.0), d(0.0, 0.0, 1.0));
        let p0 = pi(&p);
        assert!(op_norm(&((&dy * alpha - &dxi) * &p0)) < 1e-7);
        assert!(op_norm(&((&deta * alpha - &dy) * &p0)) < 1e-7);
    }
}

#[test]
fn subtraction_round_trip_through_recovered_projector() {
    let base: FrameRef = Arc::new(one_soliton(c(0.0, 2.0), vec![cw()]).unwrap());
    let alpha = c(0.0, 1.0);
    let two: FrameRef = Arc::new(bt_superpose(base.clone(), alpha, source(alpha, wc())).unwrap());
    let (_, rem) = subtract_simple_pole(two.clone(), alpha).unwrap();
    assert!(map_distance(&rem, base.as_ref(), &pts()) < 1e-6);
    let again = bt_superpose(Arc::new(rem), alpha, Arc::new(RecoveredProjector { frame: two.clone(), alpha })).unwrap();
    assert!(map_distance(&again, two.as_ref(), &pts()) < 1e-6);
}

#[test]
fn peeling_a_double_pole() {
    let f: FrameRef = Arc::new(limit_pole_data(double_datum()).unwrap());
    let (factors, rem) = subtract_pole_data(f.clone(), c(0.0, 1.0)).unwrap();
    assert!(map_distance(&rem, &IdentityFrame { n: 2 }, &pts()) < 1e-5);
    assert!(map_distance(&factors, f.as_ref(), &pts()) < 1e-5);
    // multiplicity one reduces to simple subtraction
    let g: FrameRef = Arc::new(one_soliton(c(0.0, 1.0), vec![cw()]).unwrap());
    let (fa, ra) = subtract_pole_data(g.clone(), c(0.0, 1.0)).unwrap();
    let (fb, rb) = subtract_simple_pole(g, c(0.0, 1.0)).unwrap();
    assert!(map_distance(&fa, &fb, &pts()) < 1e-12 && map_distance(&ra, &rb, &pts()) < 1e-12);
}

#[test]
fn double_pole_add_then_subtract() {
    let one: FrameRef = Arc::new(one_soliton(c(0.0, 2.0), vec![wc()]).unwrap());
    let f: FrameRef = Arc::new(add_soliton(one.clone(), double_datum()).unwrap());
    let (factors, rem) = subtract_pole_data(f.clone(), c(0.0, 1.0)).unwrap();
    assert!(map_distance(&rem, one.as_ref(), &pts()) < 1e-5);
    for p in pts() {
        let prod = factors.map_at(&p).unwrap().mul(&rem.map_at(&p).unwrap());
        assert!(prod.coefficient_distance(&f.map_at(&p).unwrap()) < 1e-5);
    }
}

#[test]
fn limit_at_spatial_infinity() {
    let alpha = c(0.0, 1.0);
    let f = one_soliton(alpha, vec![cw()]).unwrap();
    let tau = c(0.4, 0.3);
    let pi_inf = HermitianProjector::project_onto(&[wsl_core::CVector::from_column_slice(&[c(0.0, 0.0), c(1.0, 0.0)])]).unwrap();
    let want = identity(2) + pi_inf.perp().matrix() * ((alpha - alpha.conj()) / (tau - alpha));
    let got = spatial_infinity_limit(&f, tau).unwrap();
    assert!(op_norm(&(got - want)) < 1e-4);
    let id = spatial_infinity_limit(&IdentityFrame { n: 2 }, tau).unwrap();
    assert_eq!(id, identity(2));
}

#[test]
fn limit_at_spatial_infinity_is_time_independent_for_two_solitons() {
    let one: FrameRef = Arc::new(one_soliton(c(0.0, 1.0), vec![cw()]).unwrap());
    let two = bt_superpose(one, c(0.0, 2.0), source(c(0.0, 2.0), cw())).unwrap();
    let tau = c(0.3, 0.2);
    // Richardson in 1/R along a fixed direction, at two times
    let along = |t: f64| {
        let v = |r: f64| two.eval(&Point::new(0.6 * r, 0.8 * r, t), tau).unwrap();
        (v(2e4) * C64::from(2.0) - v(1e4)).clone()
    };
    let d = op_norm(&(along(0.0) - along(5.0)));
    assert!(d < 1e-6, "t-dependence {d}");
    assert!(spatial_infinity_limit(&two, tau).is_ok());
}

fn tr_phi2(frame: &dyn Frame, grid: &GridSpec) -> Vec<C64> {
    let f = extract_monopole(frame, grid).unwrap();
    f.samples.iter().map(|s| (&s.phi * &s.phi).trace()).collect()
}

#[test]
fn superposition_order_changes_only_the_gauge() {
    let (a1, a2) = (c(0.0, 1.0), c(-0.5, 1.5));
    let id: FrameRef = Arc::new(IdentityFrame { n: 2 });
    let first: FrameRef = Arc::new(bt_superpose(id.clone(), a1, source(a1, cw())).unwrap());
    let ab = bt_superpose(first, a2, source(a2, wc())).unwrap();
    let second: FrameRef = Arc::new(bt_superpose(id, a2, source(a2, wc())).unwrap());
    let ba = bt_superpose(second, a1, source(a1, cw())).unwrap();
    let g = GridSpec::square(0.01, 11, 0.2);
    for f in [&ab, &ba] {
        assert!(monopole_residual(&extract_monopole(f, &g).unwrap()).unwrap().max < 1e-4);
    }
    let (ta, tb) = (tr_phi2(&ab, &g), tr_phi2(&ba, &g));
    let d = ta.iter().zip(&tb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(d < 1e-6, "tr phi^2 differs by {d}");
}

fn alpha_strategy() -> impl Strategy<Value = C64> {
    (-1.5..1.5f64, 0.4..2.0f64, any::<bool>()).prop_map(|(a, b, up)| c(a, if up { b } else { -b }))
}

fn linear_curve() -> impl Strategy<Value = PolyCurve> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, d, e)| {
        PolyCurve::new(vec![vec![c(1.0, 0.0), c(a, b)], vec![c(d, e), c(1.0, 0.0)]]).unwrap()
    })
}

fn point_strategy() -> impl Strategy<Value = Point> {
    (-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64).prop_map(|(x, y, t)| Point::new(x, y, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn superposed_frames_satisfy_ward_conditions(
        a1 in alpha_strategy(), a2 in alpha_strategy(), f1 in linear_curve(), f2 in linear_curve(),
        p in point_strategy(),
    ) {
        prop_assume!((a1 - a2).norm() > 0.3 && (a1 - a2.conj()).norm() > 0.3);
        let one: FrameRef = Arc::new(one_soliton(a1, vec![f1]).unwrap());
        let two = match bt_superpose(one, a2, source(a2, f2)) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let r = match check_ward_frame(&two, &[p], 1e-5) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        prop_assert!(r.reality <= 1e-10, "{:?}", r);
        prop_assert!(r.normalization <= 1e-12, "{:?}", r);
        let scale = 1.0 + op_norm(&Stencil::new(&two, &p, 1e-5).unwrap().lax(c(0.35, 0.2)).unwrap().0);
        prop_assert!(r.tau_independence <= 1e-6 * scale * scale, "{:?}", r);
    }

    #[test]
    fn subtract_after_add_recovers_frame(a1 in alpha_strategy(), a2 in alpha_strategy(),
                                         f2 in linear_curve(), p in point_strategy()) {
        prop_assume!((a1 - a2).norm() > 0.3 && (a1 - a2.conj()).norm() > 0.3);
        let one: FrameRef = Arc::new(one_soliton(a1, vec![cw()]).unwrap());
        let two: FrameRef = match bt_superpose(one.clone(), a2, source(a2, f2)) {
            Ok(f) => Arc::new(f),
            Err(_) => return Ok(()),
        };
        let (_, rem) = subtract_simple_pole(two, a2).unwrap();
        let d = rem.map_at(&p).unwrap().coefficient_distance(&one.map_at(&p).unwrap());
        prop_assert!(d <= 1e-6, "distance {}", d);
    }

    #[test]
    fn frame_values_are_unitary_on_the_real_line(a in alpha_strategy(), f in linear_curve(),
                                                 p in point_strategy(), s in -5.0..5.0f64) {
        let frame = one_soliton(a, vec![f]).unwrap();
        let m: CMatrix = frame.map_at(&p).unwrap().eval(c(s, 0.0)).unwrap();
        prop_assert!(op_norm(&(m.adjoint() * &m - identity(2))) <= 1e-12);
    }
}
