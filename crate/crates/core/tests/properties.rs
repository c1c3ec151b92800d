//! Property tests for the model spaces, samplers, hulls, functionals and
//! symmetrization.

use std::f64::consts::PI;

use proptest::prelude::*;

use curvlab_core::functionals;
use curvlab_core::hull::{self, PointSet};
use curvlab_core::sampling::{
    hyperplane_mass, sample_hyperplane_meeting_ball, sample_uniform_ball, BallRegion, RngStream,
};
use curvlab_core::symmetrize::{self, GridFunction, PolarGrid, TwoPointMap};
use curvlab_core::{Geometry, Hyperplane, Point, PolarCoord, Side, Space};

const KINDS: [Geometry; 3] = [Geometry::Spherical, Geometry::Euclidean, Geometry::Hyperbolic];

fn space(kind: usize, n: usize) -> Space {
    Space::new(KINDS[kind], n).unwrap()
}

/// Unit equatorial direction with a leading zero from raw components.
fn direction(raw: &[f64]) -> Option<Vec<f64>> {
    let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < 1e-3 {
        return None;
    }
    let mut u = vec![0.0];
    u.extend(raw.iter().map(|a| a / norm));
    Some(u)
}

fn point(s: Space, t: f64, raw: &[f64]) -> Option<Point> {
    let u = direction(&raw[..s.n()])?;
    s.from_polar(&PolarCoord { t, u }).ok()
}

/// Coordinate agreement relative to the coordinate scale; distances near zero are
/// ill-conditioned in the hyperboloid model.
fn close(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10 * scale)
}

fn raw_dir() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

fn polygon_points(s: Space, spec: &[(f64, f64)]) -> PointSet {
    let pts = spec
        .iter()
        .map(|&(t, phi)| s.from_polar(&PolarCoord { t, u: vec![0.0, phi.cos(), phi.sin()] }).unwrap())
        .collect();
    PointSet::new(s, pts).unwrap()
}

fn planar_spec(tmax: f64, min: usize, max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..tmax, 0.0..2.0 * PI), min..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cs_sn_identity(kind in 0usize..3, t in 0.0f64..3.0) {
        let s = space(kind, 2);
        let (c, sn) = (s.cs(t).unwrap(), s.sn(t).unwrap());
        let id = match s.kind() {
            Geometry::Spherical => c * c + sn * sn,
            Geometry::Euclidean => c,
            Geometry::Hyperbolic => c * c - sn * sn,
        };
        prop_assert!((id - 1.0).abs() < 1e-12 * c.abs().max(1.0).powi(2));
    }

    #[test]
    fn reflections_are_isometries(
        kind in 0usize..3, n in 2usize..4,
        tx in 0.0f64..2.5, ty in 0.0f64..2.5, sigma in 0.01f64..1.5,
        dx in raw_dir(), dy in raw_dir(), dv in raw_dir(),
    ) {
        let s = space(kind, n);
        let (Some(x), Some(y), Some(v)) = (point(s, tx, &dx), point(s, ty, &dy), direction(&dv[..n])) else {
            return Ok(());
        };
        let h = Hyperplane::from_canonical(s, sigma, &v).unwrap();
        let (rx, ry) = (s.reflect(&h, &x), s.reflect(&h, &y));
        rx.validate(1e-10).unwrap();
        ry.validate(1e-10).unwrap();
        let (d0, d1) = (s.distance(&x, &y).unwrap(), s.distance(&rx, &ry).unwrap());
        prop_assert!((d0 - d1).abs() < 1e-10 * d0.max(1.0), "{d0} vs {d1}");
        // the reflection is an involution that swaps the sides
        let back = s.reflect(&h, &rx);
        prop_assert!(close(back.coords(), x.coords()));
        let (sx, srx) = (s.side(&h, &x), s.side(&h, &rx));
        prop_assert!(sx == Side::OnH || sx != srx);
    }

    #[test]
    fn same_side_is_closer(
        kind in 0usize..3, tx in 0.0f64..2.0, ty in 0.0f64..2.0, sigma in 0.01f64..1.2,
        dx in raw_dir(), dy in raw_dir(), dv in raw_dir(),
    ) {
        let s = space(kind, 2);
        let (Some(x), Some(y), Some(v)) = (point(s, tx, &dx), point(s, ty, &dy), direction(&dv[..2])) else {
            return Ok(());
        };
        let h = Hyperplane::from_canonical(s, sigma, &v).unwrap();
        if s.side(&h, &x) != Side::Plus || s.side(&h, &y) != Side::Plus {
            return Ok(());
        }
        let ry = s.reflect(&h, &y);
        prop_assert!(s.distance(&x, &y).unwrap() <= s.distance(&x, &ry).unwrap() + 1e-12);
    }

    #[test]
    fn polar_round_trip_keeps_model(kind in 0usize..3, n in 2usize..4, t in 0.0f64..3.0, d in raw_dir()) {
        let s = space(kind, n);
        let Some(x) = point(s, t, &d) else { return Ok(()); };
        x.validate(1e-10).unwrap();
        let (p, _) = s.to_polar(&x);
        prop_assert!((p.t - t).abs() < 1e-7);
        let y = s.from_polar(&p).unwrap();
        prop_assert!(close(x.coords(), y.coords()));
    }

    #[test]
    fn equal_streams_repeat(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn ball_samples_stay_inside(kind in 0usize..3, n in 2usize..4, r in 0.05f64..1.5, seed in any::<u64>()) {
        let s = space(kind, n);
        let region = BallRegion::new(s, r).unwrap();
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..64 {
            let x = sample_uniform_ball(&region, &mut rng);
            x.validate(1e-10).unwrap();
            prop_assert!(s.distance(&s.origin(), &x).unwrap() <= r * (1.0 + 1e-12));
            let h = sample_hyperplane_meeting_ball(s, r, &mut rng).unwrap();
            prop_assert!(h.sigma().abs() <= r * (1.0 + 1e-12));
        }
    }

    #[test]
    fn hyperplane_mass_is_increasing(kind in 0usize..3, n in 2usize..4, a in 0.01f64..1.5, b in 0.01f64..1.5) {
        let s = space(kind, n);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(hyperplane_mass(s, lo).unwrap() <= hyperplane_mass(s, hi).unwrap() + 1e-15);
    }

    #[test]
    fn hull_meets_symmetries(
        kind in 0usize..3, spec in planar_spec(1.2, 1, 9), sigma in 0.0f64..1.2, phi in 0.0f64..2.0 * PI,
        gs in 0.05f64..1.0, gphi in 0.0f64..2.0 * PI,
    ) {
        let s = space(kind, 2);
        let ps = polygon_points(s, &spec);
        let h = Hyperplane::from_canonical(s, sigma, &[0.0, phi.cos(), phi.sin()]).unwrap();
        let meets = hull::hull_meets(&ps, &h);
        let mut rev: Vec<Point> = ps.points();
        rev.reverse();
        prop_assert_eq!(hull::hull_meets(&PointSet::new(s, rev).unwrap(), &h), meets);
        let neg: Vec<f64> = h.normal().iter().map(|a| -a).collect();
        prop_assert_eq!(hull::hull_meets(&ps, &Hyperplane::from_normal(s, &neg).unwrap()), meets);
        // reflection equivariance, away from tangency
        let g = Hyperplane::from_canonical(s, gs, &[0.0, gphi.cos(), gphi.sin()]).unwrap();
        let scale = s.dot(h.normal(), h.normal()).abs().sqrt();
        if ps.coords().iter().all(|x| (s.dot(x, h.normal()) / scale).abs() > 1e-8) {
            let rps = PointSet::new(s, ps.points().iter().map(|x| s.reflect(&g, x)).collect()).unwrap();
            let rh = h.reflected_by(&g).unwrap();
            prop_assert_eq!(hull::hull_meets(&rps, &rh), meets);
        }
    }

    #[test]
    fn dual_reverses_inclusion(spec in planar_spec(1.2, 1, 8), extra in planar_spec(1.2, 1, 4)) {
        let s = Space::spherical(2);
        let small = polygon_points(s, &spec);
        let mut all = spec.clone();
        all.extend(extra);
        let big = polygon_points(s, &all);
        let (d_small, d_big) = (hull::polar_dual_s2(&small).unwrap(), hull::polar_dual_s2(&big).unwrap());
        for z in d_big.vertices() {
            for x in small.coords() {
                prop_assert!(s.dot(x, z) <= 1e-9);
            }
        }
        prop_assert!(d_big.area() <= d_small.area() + 1e-9);
    }

    #[test]
    fn u1_polar_identity_exact(spec in planar_spec(1.4, 1, 13)) {
        let s = Space::spherical(2);
        let ps = polygon_points(s, &spec);
        let perimeter = functionals::u1_perimeter_s2(&ps).unwrap();
        let dual = functionals::polar_volume_exact_s2(&ps).unwrap();
        prop_assert!((perimeter + 2.0 * dual / (4.0 * PI) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn u1_is_monotone(kind in 0usize..3, spec in planar_spec(1.2, 1, 8), extra in planar_spec(1.2, 1, 4)) {
        let s = space(kind, 2);
        let small = polygon_points(s, &spec);
        let mut all = spec.clone();
        all.extend(extra);
        let big = polygon_points(s, &all);
        prop_assert!(functionals::u1_exact(&small).unwrap() <= functionals::u1_exact(&big).unwrap() + 1e-12);
    }

    #[test]
    fn u1_is_rotation_invariant(kind in 0usize..3, spec in planar_spec(1.2, 1, 10), a in 0.0f64..2.0 * PI) {
        let s = space(kind, 2);
        let ps = polygon_points(s, &spec);
        let (c, sn) = (a.cos(), a.sin());
        let rotated = ps.map(|x| vec![x[0], c * x[1] - sn * x[2], sn * x[1] + c * x[2]]);
        let (u0, u1) = (functionals::u1_exact(&ps).unwrap(), functionals::u1_exact(&rotated).unwrap());
        prop_assert!((u0 - u1).abs() < 1e-10, "{u0} vs {u1}");
    }
}

fn cap(grid: &PolarGrid, t: f64, phi: f64, r: f64) -> GridFunction {
    let s = grid.space();
    let c = s.from_polar(&PolarCoord { t, u: vec![0.0, phi.cos(), phi.sin()] }).unwrap();
    GridFunction::indicator(grid.clone(), |x| {
        s.distance(&c, &s.point(x.to_vec()).unwrap()).unwrap() <= r
    })
}

fn bump(grid: &PolarGrid, t: f64, phi: f64, r: f64) -> GridFunction {
    let s = grid.space();
    let c = s.from_polar(&PolarCoord { t, u: vec![0.0, phi.cos(), phi.sin()] }).unwrap();
    GridFunction::from_point_fn(grid.clone(), |x| {
        (1.0 - s.distance(&c, &s.point(x.to_vec()).unwrap()).unwrap() / r).max(0.0)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rearrangement_is_radial_decreasing_equimeasurable(
        kind in 0usize..3, t in 0.0f64..0.6, phi in 0.0f64..2.0 * PI, r in 0.2f64..0.5,
    ) {
        let grid = PolarGrid::new(space(kind, 2), 1.2, 48, 48).unwrap();
        let f = bump(&grid, t, phi, r);
        let star = symmetrize::rearrange(&f);
        prop_assert!(star.is_radial(0.0));
        let prof = star.radial_profile();
        prop_assert!(prof.windows(2).all(|w| w[1] <= w[0]));
        let ring = (0..grid.nt()).map(|k| grid.ring_measure(k)).fold(0.0, f64::max);
        for q in 0..8 {
            let s = q as f64 / 8.0;
            prop_assert!((star.measure_above(s) - f.measure_above(s)).abs() <= ring + 1e-12);
        }
    }

    #[test]
    fn symmetrization_keeps_norms(
        kind in 0usize..3, t in 0.0f64..0.6, phi in 0.0f64..2.0 * PI, r in 0.2f64..0.5, seed in any::<u64>(),
    ) {
        let grid = PolarGrid::new(space(kind, 2), 1.2, 64, 64).unwrap();
        let f = bump(&grid, t, phi, r);
        let tmap = TwoPointMap::random(grid.space(), grid.radius(), &mut RngStream::new(seed, 1)).unwrap();
        let tf = symmetrize::tp_symmetrize_fn(&f, &tmap).unwrap();
        let eps = f.eps_grid();
        prop_assert!((tf.l2() - f.l2()).abs() <= eps);
        prop_assert!((tf.l1() - f.l1()).abs() <= eps);
        prop_assert!((tf.sup() - f.sup()).abs() <= eps);
        // rearranged functions are fixed points
        let star = symmetrize::rearrange(&f);
        let tstar = symmetrize::tp_symmetrize_fn(&star, &tmap).unwrap();
        prop_assert!(tstar.l2_distance(&star).unwrap() <= star.eps_grid());
    }

    #[test]
    fn modulus_contracts(t in 0.0f64..0.6, phi in 0.0f64..2.0 * PI, r in 0.2f64..0.5, seed in any::<u64>()) {
        let grid = PolarGrid::new(Space::spherical(2), 1.2, 64, 64).unwrap();
        let f = bump(&grid, t, phi, r);
        let mut rng = RngStream::new(seed, 2);
        let tmap = TwoPointMap::random(grid.space(), grid.radius(), &mut rng).unwrap();
        let tf = symmetrize::tp_symmetrize_fn(&f, &tmap).unwrap();
        let pairs = symmetrize::sample_close_pairs(&grid, 0.1, 500, &mut rng).unwrap();
        let closed = symmetrize::close_pairs_under(&pairs, &tmap);
        prop_assert!(
            symmetrize::modulus_on_pairs(&tf, &pairs) <= symmetrize::modulus_on_pairs(&f, &closed) + f.eps_grid()
        );
    }
}

#[test]
fn bt_trace_is_monotone_within_eps() {
    for kind in 0..3 {
        let grid = PolarGrid::new(space(kind, 2), 1.2, 64, 64).unwrap();
        let f = cap(&grid, 0.4, 1.0, 0.4);
        let run = symmetrize::baernstein_taylor(&f, 40, 3).unwrap();
        assert!(run.trace.windows(2).all(|w| w[1] <= w[0] + run.eps_grid));
        let fixed = symmetrize::baernstein_taylor(&run.rearranged, 10, 3).unwrap();
        assert!(fixed.trace.iter().all(|&d| d <= fixed.eps_grid));
    }
}

#[test]
fn polar_cells_integrate_off_center_balls() {
    // integrating an off-centre indicator in polar coordinates about e gives the ball volume
    for kind in 0..3 {
        let s = space(kind, 2);
        let exact = s.ball_volume(0.5).unwrap();
        let mut err = Vec::new();
        for n in [64, 128, 256] {
            let grid = PolarGrid::new(s, 1.2, n, n).unwrap();
            err.push((cap(&grid, 0.5, 0.7, 0.5).l1() - exact).abs() / exact);
        }
        assert!(err[2] < 1e-2, "{err:?}");
        assert!(err[2] < err[0], "{err:?}");
    }
}

#[test]
fn disjoint_streams_are_uncorrelated() {
    let (mut a, mut b) = (RngStream::new(3, 10), RngStream::new(3, 11));
    let m = 100_000;
    let xs: Vec<(f64, f64)> = (0..m).map(|_| (a.uniform(), b.uniform())).collect();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| xs.iter().map(f).sum::<f64>() / m as f64;
    let (mx, my) = (mean(&|p| p.0), mean(&|p| p.1));
    let cov = mean(&|p| (p.0 - mx) * (p.1 - my));
    let (vx, vy) = (mean(&|p| (p.0 - mx).powi(2)), mean(&|p| (p.1 - my).powi(2)));
    assert!((cov / (vx * vy).sqrt()).abs() < 0.01);
}

#[test]
fn reference_radius_anchors() {
    assert!((hyperplane_mass(Space::euclidean(2), 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((hyperplane_mass(Space::hyperbolic(2), 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((hyperplane_mass(Space::spherical(2), PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((hyperplane_mass(Space::euclidean(3), 1.0).unwrap() - 1.0).abs() < 1e-12);
    assert!((hyperplane_mass(Space::hyperbolic(3), 1.0).unwrap() - 1.0).abs() < 1e-10);
    assert!((hyperplane_mass(Space::spherical(3), PI / 2.0).unwrap() - 1.0).abs() < 1e-10);
}
