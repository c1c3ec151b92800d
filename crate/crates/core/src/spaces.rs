//! Geometry kernel for the sphere `S^n`, the Euclidean chart `R^n` and the
//! hyperboloid `H^n`, all embedded in `R^{n+1}` with base point
//! `e = (1, 0, ..., 0)`.
//!
//! A point in polar coordinates is `x(t, u) = e cs(t) + u sn(t)` with `u` a
//! unit vector orthogonal to `e`. Totally geodesic hypersurfaces are stored
//! both by an ambient normal and by their distance `sigma` from `e` along the
//! unit direction `v`; the normal is oriented so that `e` lies on the `Plus`
//! side, i.e. `<e, normal> <= 0` in the model scalar product.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numeric::{bisect_increasing, integrate, sphere_area};

/// Tolerance on model constraints for freshly constructed points.
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance on model constraints after composite operations.
pub const COMPOSITE_TOL: f64 = 1e-10;
/// Scalar products below this magnitude put a point on the hyperplane.
pub const ON_PLANE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Spherical,
    Euclidean,
    Hyperbolic,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::Spherical => "spherical",
            Geometry::Euclidean => "euclidean",
            Geometry::Hyperbolic => "hyperbolic",
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical" | "sphere" | "S" => Ok(Geometry::Spherical),
            "euclidean" | "R" => Ok(Geometry::Euclidean),
            "hyperbolic" | "H" => Ok(Geometry::Hyperbolic),
            other => Err(GeomError::Config(format!("unknown geometry '{other}'"))),
        }
    }
}

/// A model space: geometry plus intrinsic dimension `n >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    kind: Geometry,
    n: usize,
}

/// Side of a hyperplane; `Plus` always contains the base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
    OnH,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    space: Space,
    coords: Vec<f64>,
}

/// Geodesic polar coordinates about `e`. `u` is an ambient `(n+1)`-vector
/// with zero first coordinate and unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCoord {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    space: Space,
    normal: Vec<f64>,
    sigma: f64,
    direction: Vec<f64>,
}

fn euclid_dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn spatial_norm(x: &[f64]) -> f64 {
    x[1..].iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl Space {
    pub fn new(kind: Geometry, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeomError::Config(format!("dimension n must be >= 2, got {n}")));
        }
        Ok(Self { kind, n })
    }

    pub fn spherical(n: usize) -> Self {
        Self::new(Geometry::Spherical, n).expect("n >= 2")
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(Geometry::Euclidean, n).expect("n >= 2")
    }

    pub fn hyperbolic(n: usize) -> Self {
        Self::new(Geometry::Hyperbolic, n).expect("n >= 2")
    }

    pub fn kind(&self) -> Geometry {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient dimension `n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    /// `pi` on the sphere, `+inf` otherwise.
    pub fn max_radius(&self) -> f64 {
        match self.kind {
            Geometry::Spherical => PI,
            _ => f64::INFINITY,
        }
    }

    /// Model scalar product: Euclidean dot, or the Minkowski form for `H^n`.
    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            Geometry::Hyperbolic => x[0] * y[0] - euclid_dot(&x[1..], &y[1..]),
            _ => euclid_dot(x, y),
        }
    }

    fn check_radius(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.max_radius()) || t.is_infinite() {
            return Err(GeomError::Domain { what: "radius", value: t });
        }
        Ok(())
    }

    pub fn cs(&self, t: f64) -> Result<f64> {
        self.check_radius(t)?;
        Ok(self.cs_raw(t))
    }

    pub fn sn(&self, t: f64) -> Result<f64> {
        self.check_radius(t)?;
        Ok(self.sn_raw(t))
    }

    pub(crate) fn cs_raw(&self, t: f64) -> f64 {
        match self.kind {
            Geometry::Spherical => t.cos(),
            Geometry::Euclidean => 1.0,
            Geometry::Hyperbolic => t.cosh(),
        }
    }

    pub(crate) fn sn_raw(&self, t: f64) -> f64 {
        match self.kind {
            Geometry::Spherical => t.sin(),
            Geometry::Euclidean => t,
            Geometry::Hyperbolic => t.sinh(),
        }
    }

    /// Radial density `sn^{n-1}(t)` of the volume in polar coordinates.
    pub fn radial_weight(&self, t: f64) -> f64 {
        self.sn_raw(t).powi(self.n as i32 - 1)
    }

    /// Density `cs^{n-1}(sigma)` of the invariant hyperplane measure.
    pub fn hyperplane_weight(&self, sigma: f64) -> f64 {
        self.cs_raw(sigma).powi(self.n as i32 - 1)
    }

    pub fn origin(&self) -> Point {
        let mut coords = vec![0.0; self.ambient_dim()];
        coords[0] = 1.0;
        Point {
            space: *self,
            coords,
        }
    }

    /// Validates ambient coordinates against the model constraint.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        Point::new(*self, coords)
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.same_space(x)?;
        self.same_space(y)?;
        Ok(self.distance_raw(&x.coords, &y.coords))
    }

    pub(crate) fn distance_raw(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            Geometry::Spherical => euclid_dot(x, y).clamp(-1.0, 1.0).acos(),
            Geometry::Euclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Geometry::Hyperbolic => self.dot(x, y).max(1.0).acosh(),
        }
    }

    /// Distance from `e`, computed from the spatial part for accuracy near `e`.
    pub(crate) fn radius_of(&self, x: &[f64]) -> f64 {
        let s = spatial_norm(x);
        match self.kind {
            Geometry::Spherical => s.atan2(x[0]),
            Geometry::Euclidean => s,
            Geometry::Hyperbolic => s.asinh(),
        }
    }

    fn same_space(&self, x: &Point) -> Result<()> {
        if x.space != *self {
            return Err(GeomError::InvalidPoint(format!(
                "point of {:?} used in {:?}",
                x.space, self
            )));
        }
        Ok(())
    }

    pub fn from_polar(&self, p: &PolarCoord) -> Result<Point> {
        self.check_radius(p.t)?;
        p.validate(self)?;
        Ok(self.polar_point(p.t, &p.u))
    }

    pub(crate) fn polar_point(&self, t: f64, u: &[f64]) -> Point {
        let (c, s) = (self.cs_raw(t), self.sn_raw(t));
        let mut coords: Vec<f64> = u.iter().map(|ui| ui * s).collect();
        coords[0] = c;
        Point {
            space: *self,
            coords,
        }
    }

    /// Polar coordinates of `x`. The flag is `true` when `x` is `e` or, on the
    /// sphere, `-e`; `u` is then the first equatorial basis vector.
    pub fn to_polar(&self, x: &Point) -> (PolarCoord, bool) {
        let t = self.radius_of(&x.coords);
        let s = spatial_norm(&x.coords);
        let mut u = vec![0.0; self.ambient_dim()];
        if s <= 1e-14 {
            u[1] = 1.0;
            return (PolarCoord { t, u }, true);
        }
        for (ui, xi) in u.iter_mut().zip(&x.coords).skip(1) {
            *ui = xi / s;
        }
        (PolarCoord { t, u }, false)
    }

    /// Orthogonal reflection in the hyperplane `h`.
    pub fn reflect(&self, h: &Hyperplane, x: &Point) -> Point {
        Point {
            space: *self,
            coords: self.reflect_raw(h, &x.coords),
        }
    }

    pub(crate) fn reflect_raw(&self, h: &Hyperplane, x: &[f64]) -> Vec<f64> {
        let u = &h.normal;
        match self.kind {
            Geometry::Spherical => {
                let f = 2.0 * euclid_dot(x, u) / euclid_dot(u, u);
                x.iter().zip(u).map(|(a, b)| a - f * b).collect()
            }
            Geometry::Euclidean => {
                let ue = u[0];
                let f = 2.0 * euclid_dot(x, u) / (euclid_dot(u, u) - ue * ue);
                let mut out = x.to_vec();
                for (o, b) in out.iter_mut().zip(u).skip(1) {
                    *o -= f * b;
                }
                out
            }
            Geometry::Hyperbolic => {
                let f = 2.0 * self.dot(x, u) / self.dot(u, u);
                x.iter().zip(u).map(|(a, b)| a - f * b).collect()
            }
        }
    }

    /// Reflection about `span{e}`: `2 (x o e) e - x`.
    pub fn reflect_about_pole(&self, x: &Point) -> Point {
        let mut coords: Vec<f64> = x.coords.iter().map(|a| -a).collect();
        coords[0] = x.coords[0];
        Point {
            space: *self,
            coords,
        }
    }

    pub fn side(&self, h: &Hyperplane, x: &Point) -> Side {
        self.side_raw(h, &x.coords)
    }

    pub(crate) fn side_raw(&self, h: &Hyperplane, x: &[f64]) -> Side {
        let s = self.dot(x, &h.normal);
        if s.abs() < ON_PLANE_TOL {
            Side::OnH
        } else if s < 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// `int_0^r sn^{n-1}(t) dt`.
    pub fn radial_integral(&self, r: f64) -> f64 {
        if self.n == 2 {
            let h = 0.5 * r;
            return match self.kind {
                Geometry::Spherical => 2.0 * h.sin().powi(2),
                Geometry::Euclidean => 0.5 * r * r,
                Geometry::Hyperbolic => 2.0 * h.sinh().powi(2),
            };
        }
        let rough = crate::numeric::gauss_legendre8(&|t| self.radial_weight(t), 0.0, r);
        integrate(|t| self.radial_weight(t), 0.0, r, 1e-14 * rough.abs().max(1e-300))
    }

    /// Volume of the geodesic ball of radius `r` about `e`.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(sphere_area(self.n - 1) * self.radial_integral(r))
    }

    /// `lambda_n(S^n)` on the sphere, `None` otherwise.
    pub fn total_volume(&self) -> Option<f64> {
        match self.kind {
            Geometry::Spherical => Some(sphere_area(self.n)),
            _ => None,
        }
    }

    /// Radius of the ball about `e` with the given volume.
    pub fn ball_radius_for_volume(&self, vol: f64) -> Result<f64> {
        if !(vol >= 0.0) || vol.is_infinite() {
            return Err(GeomError::Domain { what: "volume", value: vol });
        }
        if vol == 0.0 {
            return Ok(0.0);
        }
        let hi = match self.kind {
            Geometry::Spherical => {
                let total = sphere_area(self.n);
                if vol > total * (1.0 + 1e-15) {
                    return Err(GeomError::Domain { what: "volume", value: vol });
                }
                PI
            }
            _ => {
                let mut hi = 1.0;
                while self.ball_volume(hi)? < vol {
                    hi *= 2.0;
                }
                hi
            }
        };
        let area = sphere_area(self.n - 1);
        Ok(bisect_increasing(
            |r| area * self.radial_integral(r),
            vol,
            0.0,
            hi,
        ))
    }

    /// Geodesic through `x` with unit initial velocity `w`, evaluated at `s`.
    pub(crate) fn exp_raw(&self, x: &[f64], w: &[f64], s: f64) -> Vec<f64> {
        let (c, sn) = match self.kind {
            Geometry::Spherical => (s.cos(), s.sin()),
            Geometry::Euclidean => (1.0, s),
            Geometry::Hyperbolic => (s.cosh(), s.sinh()),
        };
        match self.kind {
            Geometry::Euclidean => x.iter().zip(w).map(|(a, b)| a + sn * b).collect(),
            _ => x.iter().zip(w).map(|(a, b)| c * a + sn * b).collect(),
        }
    }

    /// Projects an ambient vector onto the tangent space at `x` and normalises
    /// it in the model metric. Returns `None` for a (near) zero projection.
    pub(crate) fn tangent_unit(&self, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        let w: Vec<f64> = match self.kind {
            Geometry::Euclidean => {
                let mut w = g.to_vec();
                w[0] = 0.0;
                w
            }
            _ => {
                let f = self.dot(g, x) / self.dot(x, x);
                g.iter().zip(x).map(|(a, b)| a - f * b).collect()
            }
        };
        let norm2 = match self.kind {
            Geometry::Hyperbolic => -self.dot(&w, &w),
            _ => euclid_dot(&w, &w),
        };
        if norm2 <= 1e-24 {
            return None;
        }
        let inv = 1.0 / norm2.sqrt();
        Some(w.into_iter().map(|a| a * inv).collect())
    }
}

impl Point {
    pub fn new(space: Space, coords: Vec<f64>) -> Result<Self> {
        let p = Self { space, coords };
        p.validate(POINT_TOL)?;
        Ok(p)
    }

    pub(crate) fn from_raw(space: Space, coords: Vec<f64>) -> Self {
        Self { space, coords }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Checks the model constraint with tolerance relative to the coordinate scale.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let x = &self.coords;
        if x.len() != self.space.ambient_dim() {
            return Err(GeomError::InvalidPoint(format!(
                "expected {} coordinates, got {}",
                self.space.ambient_dim(),
                x.len()
            )));
        }
        if x.iter().any(|a| !a.is_finite()) {
            return Err(GeomError::InvalidPoint("non-finite coordinate".into()));
        }
        let scale = euclid_dot(x, x).max(1.0);
        let ok = match self.space.kind {
            Geometry::Spherical => (euclid_dot(x, x) - 1.0).abs() <= tol,
            Geometry::Euclidean => x[0] == 1.0,
            Geometry::Hyperbolic => {
                x[0] > 0.0 && (self.space.dot(x, x) - 1.0).abs() <= tol * scale
            }
        };
        if ok {
            Ok(())
        } else {
            Err(GeomError::InvalidPoint(format!(
                "{:?} violates the {} model constraint",
                x,
                self.space.kind.name()
            )))
        }
    }
}

impl PolarCoord {
    /// Polar coordinates on a 2-dimensional model from an angle `phi`.
    pub fn planar(t: f64, phi: f64) -> Self {
        Self {
            t,
            u: vec![0.0, phi.cos(), phi.sin()],
        }
    }

    /// Angle of `u` in `[0, 2 pi)` for 2-dimensional models.
    pub fn phi(&self) -> f64 {
        let a = self.u[2].atan2(self.u[1]);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    fn validate(&self, space: &Space) -> Result<()> {
        if self.u.len() != space.ambient_dim() || self.u[0] != 0.0 {
            return Err(GeomError::InvalidPoint(
                "polar direction must be an (n+1)-vector with zero first coordinate".into(),
            ));
        }
        if (spatial_norm(&self.u) - 1.0).abs() > POINT_TOL {
            return Err(GeomError::InvalidPoint("polar direction must have unit norm".into()));
        }
        Ok(())
    }
}

impl Hyperplane {
    /// Hyperplane at signed distance `sigma` from `e` in direction `v`
    /// (an `(n+1)`-vector with zero first coordinate). A negative `sigma` is
    /// folded into `(-sigma, -v)`.
    pub fn from_canonical(space: Space, sigma: f64, v: &[f64]) -> Result<Self> {
        let probe = PolarCoord {
            t: 0.0,
            u: v.to_vec(),
        };
        probe
            .validate(&space)
            .map_err(|e| GeomError::InvalidHyperplane(e.to_string()))?;
        if !sigma.is_finite() {
            return Err(GeomError::InvalidHyperplane(format!("sigma = {sigma}")));
        }
        Self::from_normal(space, &canonical_normal(space, sigma, v))
    }

    /// Hyperplane `u^perp` in the model, for an arbitrary nonzero normal `u`.
    pub fn from_normal(space: Space, u: &[f64]) -> Result<Self> {
        if u.len() != space.ambient_dim() || u.iter().any(|a| !a.is_finite()) {
            return Err(GeomError::InvalidHyperplane("malformed normal".into()));
        }
        let w = spatial_norm(u);
        let (sigma, mut v) = match space.kind {
            Geometry::Spherical => {
                let norm = euclid_dot(u, u).sqrt();
                if norm == 0.0 {
                    return Err(GeomError::InvalidHyperplane("zero normal".into()));
                }
                let sigma = (-u[0]).atan2(w);
                let mut v = vec![0.0; u.len()];
                if w / norm <= 1e-15 {
                    v[1] = 1.0;
                } else {
                    for (vi, ui) in v.iter_mut().zip(u).skip(1) {
                        *vi = ui / w;
                    }
                }
                (sigma, v)
            }
            Geometry::Euclidean => {
                if w <= 1e-15 * u[0].abs() || w == 0.0 {
                    return Err(GeomError::InvalidHyperplane(
                        "normal parallel to e does not meet the affine chart".into(),
                    ));
                }
                let mut v = vec![0.0; u.len()];
                for (vi, ui) in v.iter_mut().zip(u).skip(1) {
                    *vi = ui / w;
                }
                (-u[0] / w, v)
            }
            Geometry::Hyperbolic => {
                let q = -space.dot(u, u);
                if q <= 1e-15 * euclid_dot(u, u) {
                    return Err(GeomError::InvalidHyperplane(
                        "normal must be spacelike to meet the hyperboloid".into(),
                    ));
                }
                let s = q.sqrt();
                let mut v = vec![0.0; u.len()];
                for (vi, ui) in v.iter_mut().zip(u).skip(1) {
                    *vi = -ui / w;
                }
                ((-u[0] / s).asinh(), v)
            }
        };
        let mut sigma = sigma;
        if sigma < 0.0 {
            sigma = -sigma;
            v.iter_mut().for_each(|a| *a = -*a);
        }
        if sigma == 0.0 {
            let first = v.iter().skip(1).find(|a| **a != 0.0).copied().unwrap_or(0.0);
            if first > 0.0 {
                v.iter_mut().for_each(|a| *a = -*a);
            }
        }
        let normal = canonical_normal(space, sigma, &v);
        Ok(Self {
            space,
            normal,
            sigma,
            direction: v,
        })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Normal, oriented so that `<e, normal> <= 0`.
    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    /// Distance from `e` to the hyperplane.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Image of this hyperplane under the reflection in `other`.
    pub fn reflected_by(&self, other: &Hyperplane) -> Result<Hyperplane> {
        let space = self.space;
        let a = &self.normal;
        let image: Vec<f64> = match space.kind {
            // The reflection is self-adjoint for the model form.
            Geometry::Spherical | Geometry::Hyperbolic => space.reflect_raw(other, a),
            Geometry::Euclidean => {
                // Transpose of the linear map x -> x - 2 (x.u) (0, w) / |w|^2.
                let u = &other.normal;
                let w2 = euclid_dot(&u[1..], &u[1..]);
                let f = 2.0 * euclid_dot(&a[1..], &u[1..]) / w2;
                a.iter().zip(u).map(|(ai, ui)| ai - f * ui).collect()
            }
        };
        Hyperplane::from_normal(space, &image)
    }
}

fn canonical_normal(space: Space, sigma: f64, v: &[f64]) -> Vec<f64> {
    let (a, b) = match space.kind {
        Geometry::Spherical => (-sigma.sin(), sigma.cos()),
        Geometry::Euclidean => (-sigma, 1.0),
        Geometry::Hyperbolic => (-sigma.sinh(), -sigma.cosh()),
    };
    let mut u: Vec<f64> = v.iter().map(|x| b * x).collect();
    u[0] = a;
    u
}
