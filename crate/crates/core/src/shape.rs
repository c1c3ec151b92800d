//! Laws of random points: uniform distributions on simple sets, grid
//! densities, and two-point symmetrizations of either.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::sampling::{BallRegion, BallSampler, RngStream};
use crate::spaces::{Geometry, Point, Space};
use crate::symmetrize::{GridFunction, TwoPointMap};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Config-level description of a shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// Geodesic ball about `e`.
    Ball { r: f64 },
    /// `t in [t0, t1]`, `phi in [phi0, phi1]` (n = 2).
    PolarRect { t0: f64, t1: f64, phi0: f64, phi1: f64 },
    /// Pairwise disjoint balls.
    UnionOfBalls { centers: Vec<CenterSpec>, radii: Vec<f64> },
    /// Euclidean box `|x_k| <= half_widths[k]` in the affine chart.
    AxisBox { half_widths: Vec<f64> },
    /// Density read from a grid text file.
    GridDensity { path: String },
}

/// Polar position of a ball centre: distance `t` from `e` and either an
/// angle `phi` (n = 2) or a full equatorial direction `u` (n components).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSpec {
    pub t: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub enum ShapeKind {
    Ball { r: f64 },
    PolarRect { t0: f64, t1: f64, phi0: f64, phi1: f64 },
    UnionOfBalls { centers: Vec<Vec<f64>>, radii: Vec<f64> },
    AxisBox { half_widths: Vec<f64> },
    Density(GridFunction),
    Symmetrized { base: Box<Shape>, map: TwoPointMap },
}

/// A sampleable law: the uniform distribution on a set, or `f / |f|_1`.
///
/// Points are drawn by rejection from the ball `B_support` with the fixed
/// per-proposal draw order of [`crate::sampling`].
#[derive(Clone)]
pub struct Shape {
    space: Space,
    kind: ShapeKind,
    measure: f64,
    sup: f64,
    support: f64,
    sampler: Arc<BallSampler>,
}

impl std::fmt::Debug for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Shape")
            .field("space", &self.space)
            .field("kind", &self.kind)
            .field("measure", &self.measure)
            .field("support", &self.support)
            .finish()
    }
}

fn polar_area(space: Space, t0: f64, t1: f64) -> f64 {
    // int_{t0}^{t1} sn(t) dt on a 2-dimensional model
    match space.kind() {
        Geometry::Spherical => t0.cos() - t1.cos(),
        Geometry::Euclidean => 0.5 * (t1 * t1 - t0 * t0),
        Geometry::Hyperbolic => t1.cosh() - t0.cosh(),
    }
}

fn phi_of(x: &[f64]) -> f64 {
    let p = x[2].atan2(x[1]);
    if p < 0.0 {
        p + TAU
    } else {
        p
    }
}

impl Shape {
    fn build(space: Space, kind: ShapeKind, measure: f64, sup: f64, support: f64) -> Result<Self> {
        if !(measure > 0.0) || !(sup > 0.0) {
            return Err(GeomError::EmptyDensity);
        }
        if space.kind() == Geometry::Spherical && support >= std::f64::consts::FRAC_PI_2 {
            return Err(GeomError::NotProper);
        }
        let sampler = Arc::new(BallSampler::new(BallRegion::new(space, support)?));
        Ok(Self {
            space,
            kind,
            measure,
            sup,
            support,
            sampler,
        })
    }

    pub fn ball(space: Space, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(GeomError::Domain { what: "ball radius", value: r });
        }
        let vol = space.ball_volume(r)?;
        Self::build(space, ShapeKind::Ball { r }, vol, 1.0, r)
    }

    pub fn polar_rect(space: Space, t0: f64, t1: f64, phi0: f64, phi1: f64) -> Result<Self> {
        if space.n() != 2 {
            return Err(GeomError::Config("polar rectangles need n = 2".into()));
        }
        if !(0.0 <= t0 && t0 < t1 && t1 <= space.max_radius()) || !t1.is_finite() {
            return Err(GeomError::Config(format!("bad radial range [{t0}, {t1}]")));
        }
        let w = phi1 - phi0;
        if !(w > 0.0 && w <= TAU) {
            return Err(GeomError::Config(format!("bad angular range [{phi0}, {phi1}]")));
        }
        let measure = w * polar_area(space, t0, t1);
        Self::build(space, ShapeKind::PolarRect { t0, t1, phi0, phi1 }, measure, 1.0, t1)
    }

    pub fn union_of_balls(space: Space, centers: Vec<Point>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || centers.len() != radii.len() {
            return Err(GeomError::Config("union needs matching centres and radii".into()));
        }
        let origin = space.origin();
        let mut measure = 0.0;
        let mut support: f64 = 0.0;
        for (i, (c, &r)) in centers.iter().zip(&radii).enumerate() {
            if !(r > 0.0) {
                return Err(GeomError::Domain { what: "ball radius", value: r });
            }
            for (c2, &r2) in centers.iter().zip(&radii).skip(i + 1) {
                if space.distance(c, c2)? < r + r2 {
                    return Err(GeomError::Config("balls of a union must be disjoint".into()));
                }
            }
            let t = space.distance(&origin, c)?;
            if t + r > space.max_radius() {
                return Err(GeomError::Config("ball leaves the model".into()));
            }
            measure += space.ball_volume(r)?;
            support = support.max(t + r);
        }
        Self::build(
            space,
            ShapeKind::UnionOfBalls {
                centers: centers.into_iter().map(Point::into_coords).collect(),
                radii,
            },
            measure,
            1.0,
            support,
        )
    }

    pub fn axis_box(space: Space, half_widths: Vec<f64>) -> Result<Self> {
        if space.kind() != Geometry::Euclidean || half_widths.len() != space.n() {
            return Err(GeomError::Config("axis boxes need Euclidean space and n half widths".into()));
        }
        if half_widths.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(GeomError::Config("half widths must be positive".into()));
        }
        let measure = half_widths.iter().map(|h| 2.0 * h).product();
        let support = half_widths.iter().map(|h| h * h).sum::<f64>().sqrt();
        Self::build(space, ShapeKind::AxisBox { half_widths }, measure, 1.0, support)
    }

    /// Law `f / |f|_1` of a grid density.
    pub fn density(f: GridFunction) -> Result<Self> {
        let space = f.grid().space();
        let (l1, sup, r) = (f.l1(), f.sup(), f.grid().radius());
        Self::build(space, ShapeKind::Density(f), l1, sup, r)
    }

    /// `TK` (sets) or `Tf` (densities), with exact pointwise membership.
    pub fn symmetrized(base: Shape, map: TwoPointMap) -> Result<Self> {
        if map.hyperplane().space() != base.space {
            return Err(GeomError::Config("map and shape live in different spaces".into()));
        }
        let (space, measure, sup, support) = (base.space, base.measure, base.sup, base.support);
        Self::build(
            space,
            ShapeKind::Symmetrized {
                base: Box::new(base),
                map,
            },
            measure,
            sup,
            support,
        )
    }

    pub fn from_spec(space: Space, spec: &ShapeSpec) -> Result<Self> {
        match spec {
            ShapeSpec::Ball { r } => Self::ball(space, *r),
            ShapeSpec::PolarRect { t0, t1, phi0, phi1 } => Self::polar_rect(space, *t0, *t1, *phi0, *phi1),
            ShapeSpec::UnionOfBalls { centers, radii } => {
                let pts = centers
                    .iter()
                    .map(|c| c.point(space))
                    .collect::<Result<Vec<_>>>()?;
                Self::union_of_balls(space, pts, radii.clone())
            }
            ShapeSpec::AxisBox { half_widths } => Self::axis_box(space, half_widths.clone()),
            ShapeSpec::GridDensity { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| GeomError::Config(format!("cannot read grid {path}: {e}")))?;
                let f = crate::symmetrize::read_grid(&text)?;
                if f.grid().space() != space {
                    return Err(GeomError::Config(format!("grid {path} is for another space")));
                }
                Self::density(f)
            }
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    /// `lambda(K)` for sets, `|f|_1` for densities.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// 1 for sets, `|f|_inf` for densities.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// `|f|_1 / |f|_inf`: the volume of the matching ball `B_K`.
    pub fn effective_measure(&self) -> f64 {
        self.measure / self.sup
    }

    /// Radius of the proposal ball about `e`, containing the support.
    pub fn support_radius(&self) -> f64 {
        self.support
    }

    /// Expected proposals per accepted point.
    pub fn acceptance(&self) -> f64 {
        self.measure / (self.sup * self.sampler.region().volume())
    }

    /// Unnormalised density (indicator for sets) at ambient coordinates.
    pub fn density_raw(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ShapeKind::Ball { r } => {
                if self.space.radius_of(x) <= *r {
                    1.0
                } else {
                    0.0
                }
            }
            ShapeKind::PolarRect { t0, t1, phi0, phi1 } => {
                let t = self.space.radius_of(x);
                if t < *t0 || t > *t1 {
                    return 0.0;
                }
                let d = (phi_of(x) - phi0).rem_euclid(TAU);
                if d <= phi1 - phi0 {
                    1.0
                } else {
                    0.0
                }
            }
            ShapeKind::UnionOfBalls { centers, radii } => {
                if centers
                    .iter()
                    .zip(radii)
                    .any(|(c, r)| self.space.distance_raw(c, x) <= *r)
                {
                    1.0
                } else {
                    0.0
                }
            }
            ShapeKind::AxisBox { half_widths } => {
                if x[1..].iter().zip(half_widths).all(|(a, h)| a.abs() <= *h) {
                    1.0
                } else {
                    0.0
                }
            }
            ShapeKind::Density(f) => f.lookup_raw(x),
            ShapeKind::Symmetrized { base, map } => map.apply_fn(x, |y| base.density_raw(y)),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.density_raw(x.coords()) > 0.0
    }

    pub(crate) fn sample_raw(&self, rng: &mut RngStream) -> Result<Vec<f64>> {
        if let ShapeKind::Ball { .. } = self.kind {
            return Ok(self.sampler.sample(rng).into_coords());
        }
        self.sampler
            .rejection(self.sup, self.acceptance(), |x| self.density_raw(x), rng)
            .map(Point::into_coords)
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<Point> {
        self.sample_raw(rng).map(|c| Point::from_raw(self.space, c))
    }

    /// Ball about `e` with volume [`Shape::effective_measure`].
    pub fn equal_measure_ball(&self) -> Result<Shape> {
        let r = self.space.ball_radius_for_volume(self.effective_measure())?;
        Shape::ball(self.space, r)
    }
}

impl CenterSpec {
    /// The point at distance `t` from `e` in direction `phi` (or `u`).
    pub fn point(&self, space: Space) -> Result<Point> {
        let u = match &self.u {
            Some(u) => {
                let mut full = vec![0.0];
                full.extend_from_slice(u);
                full
            }
            None if space.n() == 2 => vec![0.0, self.phi.cos(), self.phi.sin()],
            None => return Err(GeomError::Config("centres need u when n > 2".into())),
        };
        space.from_polar(&crate::spaces::PolarCoord { t: self.t, u })
    }
}
