//! Convexity primitives for finite point sets: hyperplane incidence of the
//! hull, properness on the sphere, spherical polar duals and polygon areas.

use std::f64::consts::PI;

use crate::error::{GeomError, Result};
use crate::spaces::{Geometry, Hyperplane, Point, Space};

/// Scalar products this close to zero count as touching.
pub const TOUCH_TOL: f64 = 1e-12;
const PROPER_TOL: f64 = 1e-10;

/// Nonempty list of points of one space.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    space: Space,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(space: Space, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(GeomError::InvalidPoint("empty point set".into()));
        }
        if let Some(p) = points.iter().find(|p| p.space() != space) {
            return Err(GeomError::InvalidPoint(format!(
                "point of {:?} in a set of {:?}",
                p.space(),
                space
            )));
        }
        Ok(Self {
            space,
            points: points.into_iter().map(Point::into_coords).collect(),
        })
    }

    /// From raw ambient coordinates, validated against the model.
    pub fn from_coords(space: Space, coords: Vec<Vec<f64>>) -> Result<Self> {
        let pts = coords
            .into_iter()
            .map(|c| Point::new(space, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, pts)
    }

    pub(crate) fn from_raw(space: Space, points: Vec<Vec<f64>>) -> Self {
        debug_assert!(!points.is_empty());
        Self { space, points }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn points(&self) -> Vec<Point> {
        self.points
            .iter()
            .map(|c| Point::from_raw(self.space, c.clone()))
            .collect()
    }

    /// Image under a map of ambient coordinates (assumed to preserve the model).
    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> PointSet {
        Self::from_raw(self.space, self.points.iter().map(|x| f(x)).collect())
    }
}

/// Whether the hull of the points meets the hyperplane with ambient normal `u`.
pub(crate) fn meets_normal(space: Space, points: &[Vec<f64>], u: &[f64]) -> bool {
    let (mut pos, mut neg) = (false, false);
    for x in points {
        let s = space.dot(x, u);
        if s.abs() < TOUCH_TOL {
            return true;
        }
        if s > 0.0 {
            pos = true;
        } else {
            neg = true;
        }
        if pos && neg {
            return true;
        }
    }
    false
}

/// `chi(conv(ps) cap H)`: true iff the scalar products with the normal do not
/// all share one strict sign. On the sphere `ps` must be proper.
pub fn hull_meets(ps: &PointSet, h: &Hyperplane) -> bool {
    meets_normal(ps.space, &ps.points, h.normal())
}

/// Minimum-norm point of the convex hull of `points` in `R^d` (Wolfe's method).
pub fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-14 * scale;
    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .expect("nonempty");
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let combine = |corral: &[usize], lambda: &[f64]| {
        let mut x = vec![0.0; points[0].len()];
        for (&i, &l) in corral.iter().zip(lambda) {
            for (xi, pi) in x.iter_mut().zip(&points[i]) {
                *xi += l * pi;
            }
        }
        x
    };
    let mut x = points[start].clone();
    for _ in 0..10_000 {
        let xx = dot(&x, &x);
        if xx <= tol {
            return x;
        }
        let (j, best) = (0..points.len())
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if best > xx - 1e-12 * scale || corral.contains(&j) {
            return x;
        }
        corral.push(j);
        lambda.push(0.0);
        loop {
            let Some(alpha) = affine_min_norm(points, &corral) else {
                // Affinely dependent corral: drop the newest point.
                corral.pop();
                lambda.pop();
                return combine(&corral, &lambda);
            };
            if alpha.iter().all(|&a| a > 1e-15) {
                lambda = alpha;
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-15 {
                    let d = l - a;
                    if d > 0.0 {
                        theta = theta.min(l / d);
                    }
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut k = 0;
            while k < corral.len() {
                if lambda[k] <= 1e-15 {
                    corral.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
            if corral.len() == 1 {
                break;
            }
        }
        x = combine(&corral, &lambda);
    }
    x
}

/// Weights of the minimum-norm point of the affine hull of the corral.
fn affine_min_norm(points: &[Vec<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // [G 1; 1^T 0] [a; mu] = [0; 1]
    let n = k + 1;
    let mut m = vec![vec![0.0; n + 1]; n];
    for i in 0..k {
        for j in 0..k {
            m[i][j] = dot(&points[corral[i]], &points[corral[j]]);
        }
        m[i][k] = 1.0;
        m[k][i] = 1.0;
    }
    m[k][n] = 1.0;
    let sol = solve(m)?;
    Some(sol[..k].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() <= 1e-13 * scale {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for j in c..=n {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Enclosing-cap data of a spherical point set.
#[derive(Debug, Clone, PartialEq)]
pub struct CapFit {
    /// Unit centre `c` maximising `min_i c . x_i`.
    pub center: Vec<f64>,
    /// `max_i d(c, x_i)`, below `pi/2` for proper sets.
    pub radius: f64,
}

/// Centre and radius of the smallest cap containing a proper spherical set,
/// or `None` when the set is not proper.
pub fn enclosing_cap(ps: &PointSet) -> Option<CapFit> {
    if ps.space.kind() != Geometry::Spherical {
        return None;
    }
    let p = min_norm_point(&ps.points);
    let norm = p.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm <= PROPER_TOL {
        return None;
    }
    let center: Vec<f64> = p.iter().map(|a| a / norm).collect();
    let lo = ps
        .points
        .iter()
        .map(|x| x.iter().zip(&center).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if lo <= 0.0 {
        return None;
    }
    Some(CapFit {
        radius: lo.min(1.0).acos(),
        center,
    })
}

/// Whether a spherical set lies in an open hemisphere. Other models: always true.
pub fn is_proper(ps: &PointSet) -> bool {
    match ps.space.kind() {
        Geometry::Spherical => enclosing_cap(ps).is_some(),
        _ => true,
    }
}

/// Householder reflection `Q` with `Q c = e` (and `Q e = c`), as a closure.
pub(crate) fn householder_to_e(c: &[f64]) -> impl Fn(&[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = c.to_vec();
    w[0] -= 1.0;
    let ww: f64 = w.iter().map(|a| a * a).sum();
    move |x: &[f64]| {
        if ww <= 1e-30 {
            return x.to_vec();
        }
        let f = 2.0 * x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / ww;
        x.iter().zip(&w).map(|(a, b)| a - f * b).collect()
    }
}

/// Counterclockwise planar convex hull (Andrew's monotone chain), collinear
/// points dropped. Returns indices into `pts`.
pub fn planar_hull(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts[a][0]
            .total_cmp(&pts[b][0])
            .then(pts[a][1].total_cmp(&pts[b][1]))
    });
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1]) - (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Hull vertices of a 2-dimensional point set in cyclic counterclockwise
/// order (seen from outside on the sphere), computed in the central
/// projection chart about `center` (`e` for the flat and hyperbolic models).
/// Collinear sets give their two extreme points.
fn hull_vertices_2d(space: Space, points: &[Vec<f64>], center: &[f64]) -> Vec<Vec<f64>> {
    // Orthonormal tangent frame (b1, b2) at the centre with b1 x b2 = c on
    // the sphere, and the standard frame otherwise.
    let chart: Vec<[f64; 2]> = match space.kind() {
        Geometry::Spherical => {
            let c = center;
            let a = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let mut b1 = [
                a[0] - c[0] * dot3(&a, c),
                a[1] - c[1] * dot3(&a, c),
                a[2] - c[2] * dot3(&a, c),
            ];
            let nb = dot3(&b1, &b1).sqrt();
            b1.iter_mut().for_each(|x| *x /= nb);
            let b2 = cross3(c, &b1);
            points
                .iter()
                .map(|x| {
                    let z = dot3(x, c);
                    [dot3(x, &b1) / z, dot3(x, &b2) / z]
                })
                .collect()
        }
        _ => points.iter().map(|x| [x[1] / x[0], x[2] / x[0]]).collect(),
    };
    planar_hull(&chart)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = dot3(&a, &a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn require_2d(ps: &PointSet) -> Result<()> {
    if ps.space.n() != 2 {
        return Err(GeomError::Config(format!(
            "exact evaluators need n = 2, got n = {}",
            ps.space.n()
        )));
    }
    Ok(())
}

/// Geodesic perimeter of the hull of a 2-dimensional point set (twice the
/// length for collinear sets, zero for a single point). Spherical sets must
/// be proper.
pub fn hull_perimeter(ps: &PointSet) -> Result<f64> {
    require_2d(ps)?;
    let space = ps.space;
    let verts = match space.kind() {
        Geometry::Spherical => {
            let cap = enclosing_cap(ps).ok_or(GeomError::NotProper)?;
            hull_vertices_2d(space, &ps.points, &cap.center)
        }
        _ => hull_vertices_2d(space, &ps.points, &[1.0, 0.0, 0.0]),
    };
    let m = verts.len();
    if m < 2 {
        return Ok(0.0);
    }
    let mut s = crate::numeric::CompensatedSum::default();
    for i in 0..m {
        s.add(space.distance_raw(&verts[i], &verts[(i + 1) % m]));
    }
    Ok(s.value())
}

/// Cyclically ordered polygon on `S^2`, counterclockwise seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPolygon {
    vertices: Vec<[f64; 3]>,
    degenerate: bool,
}

impl SphericalPolygon {
    /// Checks orientation and non-antipodality of consecutive vertices.
    pub fn new(vertices: Vec<[f64; 3]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Ok(Self { vertices, degenerate: true });
        }
        let m = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if (dot3(v, v) - 1.0).abs() > 1e-10 {
                return Err(GeomError::InvalidPoint("polygon vertex off the sphere".into()));
            }
            if dot3(v, &vertices[(i + 1) % m]) < -1.0 + 1e-12 {
                return Err(GeomError::InvalidPoint("antipodal consecutive vertices".into()));
            }
        }
        Ok(Self { vertices, degenerate: false })
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Set for duals of lower-dimensional hulls (lunes and hemispheres) and
    /// for polygons with fewer than three vertices.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Interior angles from tangent vectors at each vertex, in `[0, 2 pi)`.
    pub fn angles(&self) -> Vec<f64> {
        let m = self.vertices.len();
        (0..m)
            .map(|i| {
                let v = &self.vertices[i];
                let p = &self.vertices[(i + m - 1) % m];
                let q = &self.vertices[(i + 1) % m];
                let tan = |w: &[f64; 3]| {
                    let d = dot3(w, v);
                    [w[0] - d * v[0], w[1] - d * v[1], w[2] - d * v[2]]
                };
                let (tp, tq) = (tan(p), tan(q));
                let a = dot3(&cross3(&tq, &tp), v).atan2(dot3(&tq, &tp));
                if a < 0.0 {
                    a + 2.0 * PI
                } else {
                    a
                }
            })
            .collect()
    }

    /// Angle excess `sum angles - (m - 2) pi`; zero for `m < 3`.
    pub fn area(&self) -> f64 {
        let m = self.vertices.len();
        if m < 3 {
            return 0.0;
        }
        let s: f64 = self.angles().iter().sum();
        (s - (m as f64 - 2.0) * PI).max(0.0)
    }

    /// Membership for the convex polygon: left of every edge.
    pub fn contains(&self, z: &[f64]) -> bool {
        let m = self.vertices.len();
        (0..m).all(|i| dot3(&cross3(&self.vertices[i], &self.vertices[(i + 1) % m]), z) >= -1e-15)
    }
}

pub fn spherical_polygon_area(poly: &SphericalPolygon) -> f64 {
    poly.area()
}

/// Polar set `K^* = {z : z . x_i <= 0 for all i}` of a proper set on `S^2`.
///
/// Full-dimensional hulls give the polygon whose vertices are the negated unit
/// normals of the hull edges. A set spanning a single arc gives the lune
/// `n, w_a, -n, w_b` (with straight angles at `w_a`, `w_b`); a single point
/// gives its hemisphere as four boundary points. Both are flagged degenerate.
pub fn polar_dual_s2(ps: &PointSet) -> Result<SphericalPolygon> {
    if ps.space.kind() != Geometry::Spherical || ps.space.n() != 2 {
        return Err(GeomError::Config("polar duals need points on S^2".into()));
    }
    let cap = enclosing_cap(ps).ok_or(GeomError::NotProper)?;
    let c = &cap.center;
    let verts = hull_vertices_2d(ps.space, &ps.points, c);
    let inner = [-c[0], -c[1], -c[2]];
    let orient = |mut vs: Vec<[f64; 3]>| {
        // Counterclockwise about an interior point of the dual region.
        let m = vs.len();
        let s: f64 = (0..m)
            .map(|i| dot3(&cross3(&vs[i], &vs[(i + 1) % m]), &inner))
            .sum();
        if s < 0.0 {
            vs.reverse();
        }
        vs
    };
    match verts.len() {
        1 => {
            let x = [verts[0][0], verts[0][1], verts[0][2]];
            let a = if x[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let b1 = normalize3(cross3(&x, &a));
            let b2 = cross3(&x, &b1);
            let vs = vec![b1, b2, [-b1[0], -b1[1], -b1[2]], [-b2[0], -b2[1], -b2[2]]];
            Ok(SphericalPolygon {
                vertices: orient(vs),
                degenerate: true,
            })
        }
        2 => {
            let (a, b) = (&verts[0], &verts[1]);
            let n = normalize3(cross3(a, b));
            let side = |w: [f64; 3], other: &[f64]| {
                if dot3(&w, other) > 0.0 {
                    [-w[0], -w[1], -w[2]]
                } else {
                    w
                }
            };
            let wa = side(normalize3(cross3(&n, a)), b);
            let wb = side(normalize3(cross3(&n, b)), a);
            let neg = [-n[0], -n[1], -n[2]];
            Ok(SphericalPolygon {
                vertices: orient(vec![n, wa, neg, wb]),
                degenerate: true,
            })
        }
        m => {
            let vs: Vec<[f64; 3]> = (0..m)
                .map(|i| {
                    let z = normalize3(cross3(&verts[i], &verts[(i + 1) % m]));
                    [-z[0], -z[1], -z[2]]
                })
                .collect();
            Ok(SphericalPolygon {
                vertices: orient(vs),
                degenerate: false,
            })
        }
    }
}

/// Support function `max_i x_i . v` of a Euclidean set in the affine chart;
/// `v` is a spatial direction (`n` components).
pub fn support_function_euclidean(ps: &PointSet, v: &[f64]) -> Result<f64> {
    if ps.space.kind() != Geometry::Euclidean {
        return Err(GeomError::Config("support functions need Euclidean points".into()));
    }
    if v.len() != ps.space.n() {
        return Err(GeomError::Config("direction has the wrong dimension".into()));
    }
    Ok(ps
        .points
        .iter()
        .map(|x| x[1..].iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;

    fn s2(pts: &[[f64; 3]]) -> PointSet {
        let ss = Space::spherical(2);
        PointSet::from_coords(
            ss,
            pts.iter().map(|p| normalize3(*p).to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_incidence() {
        let e = Space::euclidean(2);
        let ps = PointSet::from_coords(e, vec![vec![1.0, 0.3, 0.0]]).unwrap();
        let miss = Hyperplane::from_canonical(e, 0.5, &[0.0, 1.0, 0.0]).unwrap();
        let hit = Hyperplane::from_canonical(e, 0.3, &[0.0, 1.0, 0.0]).unwrap();
        assert!(!hull_meets(&ps, &miss));
        assert!(hull_meets(&ps, &hit));
        let seg = PointSet::from_coords(e, vec![vec![1.0, -1.0, 0.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let line = Hyperplane::from_canonical(e, 0.0, &[0.0, -1.0, 0.0]).unwrap();
        assert!(hull_meets(&seg, &line));
    }

    #[test]
    fn min_norm_point_simple() {
        let p = min_norm_point(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert!((p[0] - 1.0).abs() < 1e-14 && p[1].abs() < 1e-14);
        let p = min_norm_point(&[vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 2.0]]);
        for c in p {
            assert!((c - 2.0 / 3.0).abs() < 1e-12);
        }
        let p = min_norm_point(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]]);
        assert!(p.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn properness() {
        assert!(is_proper(&s2(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])));
        assert!(!is_proper(&s2(&[[1.0, 0.2, 0.0], [-1.0, -0.2, 0.0]])));
        assert!(!is_proper(&s2(&[[1.0, 0.0, 0.0], [-0.5, 0.8, 0.0], [-0.5, -0.8, 0.0]])));
        let cap = enclosing_cap(&s2(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])).unwrap();
        assert!((cap.radius - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn octant_dual() {
        let ps = s2(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let dual = polar_dual_s2(&ps).unwrap();
        assert!(!dual.is_degenerate());
        assert!((dual.area() - PI / 2.0).abs() < 1e-12);
        for z in dual.vertices() {
            for x in ps.coords() {
                assert!(dot3(z, x) <= 1e-10);
            }
        }
        assert!((hull_perimeter(&ps).unwrap() - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn degenerate_duals() {
        let one = s2(&[[0.3, 0.2, 0.9]]);
        let d = polar_dual_s2(&one).unwrap();
        assert!(d.is_degenerate());
        assert!((d.area() - 2.0 * PI).abs() < 1e-12);
        let seg = s2(&[[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]);
        let d = polar_dual_s2(&seg).unwrap();
        assert!(d.is_degenerate());
        // lune of angle pi - pi/2
        assert!((d.area() - PI).abs() < 1e-12);
        assert!((hull_perimeter(&seg).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn dual_area_matches_membership() {
        let mut rng = RngStream::new(8, 0);
        let ps = s2(&[[1.0, 0.3, 0.1], [0.8, -0.4, 0.5], [0.9, 0.1, -0.6], [0.7, -0.5, -0.2]]);
        let dual = polar_dual_s2(&ps).unwrap();
        let m = 100_000;
        let mut hits = 0;
        for _ in 0..m {
            let z = rng.sphere_point(2);
            if ps.coords().iter().all(|x| dot3(&z, x) <= 0.0) {
                hits += 1;
                assert!(dual.contains(&z));
            }
        }
        let p = hits as f64 / m as f64;
        let est = 4.0 * PI * p;
        let se = 4.0 * PI * (p * (1.0 - p) / m as f64).sqrt();
        assert!((est - dual.area()).abs() < 3.0 * se, "{est} vs {}", dual.area());
        // identity with the perimeter route
        let u1 = hull_perimeter(&ps).unwrap() / (2.0 * PI);
        assert!((u1 + 2.0 * dual.area() / (4.0 * PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_function_examples() {
        let e = Space::euclidean(2);
        let ps = PointSet::from_coords(e, vec![vec![1.0, -0.5, 0.0], vec![1.0, 0.5, 0.0]]).unwrap();
        assert_eq!(support_function_euclidean(&ps, &[1.0, 0.0]).unwrap(), 0.5);
        let sq = PointSet::from_coords(
            e,
            vec![
                vec![1.0, 0.5, 0.5],
                vec![1.0, -0.5, 0.5],
                vec![1.0, 0.5, -0.5],
                vec![1.0, -0.5, -0.5],
            ],
        )
        .unwrap();
        // The support function of the square has kinks at odd multiples of pi/4.
        let integral: f64 = (0..4)
            .map(|k| {
                let a = (2 * k + 1) as f64 * PI / 4.0;
                crate::numeric::integrate(
                    |t: f64| support_function_euclidean(&sq, &[t.cos(), t.sin()]).unwrap(),
                    a,
                    a + PI / 2.0,
                    1e-13,
                )
            })
            .sum();
        assert!((integral - 4.0).abs() < 1e-8);
        assert!((hull_perimeter(&sq).unwrap() - 4.0).abs() < 1e-14);
    }
}
