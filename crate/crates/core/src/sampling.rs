//! Seedable random generation of points and hyperplanes.
//!
//! Every random quantity is drawn from an [`RngStream`] addressed by
//! `(seed, stream_id)`. Streams are derived from a purpose path such as
//! `[tags::POINT, sample, slot]`, so two estimators that address the same path
//! see the same uniforms no matter how work is scheduled.
//!
//! Uniform ball points consume, per proposal, in this order: the direction
//! (one uniform for `n = 2`, `n` normals otherwise), one radial uniform and one
//! acceptance uniform. Hyperplanes consume the direction and then one uniform
//! for `sigma`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GeomError, Result};
use crate::numeric::{sphere_area, BoxedWeight, TabulatedCdf};
use crate::spaces::{Geometry, Hyperplane, Point, Space};
use crate::symmetrize::GridFunction;

/// Identity of the generator behind [`RngStream`], recorded in outputs.
pub const RNG_IDENTITY: &str = "rand_chacha::ChaCha12Rng(seed_from_u64(seed), stream=stream_id)";

/// Acceptance rates below this turn into [`GeomError::Efficiency`].
pub const MIN_ACCEPTANCE: f64 = 1e-6;
const MAX_PROPOSALS: u64 = 100_000_000;
const CDF_SEGMENTS: usize = 256;

/// Purpose tags for stream derivation.
pub mod tags {
    pub const POINT: u64 = 0x50_4f_49_4e_54;
    pub const PLANE: u64 = 0x50_4c_41_4e_45;
    pub const POLAR: u64 = 0x50_4f_4c_41_52;
    pub const SYMMETRIZE: u64 = 0x5359_4d4d;
    pub const PAIRS: u64 = 0x5041_4952;
}

/// Counter-based random stream: the output sequence depends only on
/// `(seed, stream_id)`.
#[derive(Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl std::fmt::Debug for RngStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("stream_id", &self.stream_id)
            .field("counter", &self.counter())
            .finish()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream for a purpose path, e.g. `[tags::POINT, sample, slot]`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let id = path
            .iter()
            .fold(0x63_75_72_76_6c_61_62u64, |h, &x| splitmix(h ^ splitmix(x)));
        Self::new(seed, id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Position in the stream, in 32-bit words.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform unit vector orthogonal to `e`, as an `(n+1)`-vector.
    pub fn equatorial_direction(&mut self, n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n + 1];
        if n == 2 {
            let phi = 2.0 * PI * self.uniform();
            u[1] = phi.cos();
            u[2] = phi.sin();
            return u;
        }
        loop {
            for c in u.iter_mut().skip(1) {
                *c = self.normal();
            }
            let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                u.iter_mut().for_each(|a| *a /= norm);
                return u;
            }
        }
    }

    /// Uniform point of the unit sphere `S^n` in `R^{n+1}`.
    pub fn sphere_point(&mut self, n: usize) -> Vec<f64> {
        if n == 2 {
            let z = 1.0 - 2.0 * self.uniform();
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * self.uniform();
            return vec![z, r * phi.cos(), r * phi.sin()];
        }
        loop {
            let g: Vec<f64> = (0..=n).map(|_| self.normal()).collect();
            let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return g.into_iter().map(|a| a / norm).collect();
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Geodesic ball about `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRegion {
    space: Space,
    radius: f64,
}

impl BallRegion {
    pub fn new(space: Space, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= space.max_radius()) || radius.is_infinite() {
            return Err(GeomError::Domain { what: "ball radius", value: radius });
        }
        Ok(Self { space, radius })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// On the sphere: contained in an open hemisphere. Always true otherwise.
    pub fn is_proper(&self) -> bool {
        self.space.kind() != Geometry::Spherical || self.radius < FRAC_PI_2
    }

    pub fn volume(&self) -> f64 {
        self.space.ball_volume(self.radius).expect("validated radius")
    }
}

enum LawKind {
    Closed,
    Table(TabulatedCdf<BoxedWeight>),
}

/// A one-dimensional law on `[0, upper]` with density proportional to either
/// the radial volume weight or the hyperplane weight.
pub struct RadialLaw {
    space: Space,
    upper: f64,
    hyperplane: bool,
    kind: LawKind,
}

impl RadialLaw {
    /// Density proportional to `sn^{n-1}(t)` on `[0, r]`.
    pub fn volume(space: Space, r: f64) -> Self {
        Self::build(space, r, false)
    }

    /// Density proportional to `cs^{n-1}(sigma)` on `[0, r]`.
    pub fn hyperplane(space: Space, r: f64) -> Self {
        Self::build(space, r, true)
    }

    fn build(space: Space, upper: f64, hyperplane: bool) -> Self {
        let kind = if space.n() == 2 || (hyperplane && space.kind() == Geometry::Euclidean) {
            LawKind::Closed
        } else {
            let weight: BoxedWeight = if hyperplane {
                Box::new(move |t| space.hyperplane_weight(t))
            } else {
                Box::new(move |t| space.radial_weight(t))
            };
            LawKind::Table(TabulatedCdf::new(weight, upper, CDF_SEGMENTS))
        };
        Self {
            space,
            upper,
            hyperplane,
            kind,
        }
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Inverse CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let r = self.upper;
        if r == 0.0 {
            return 0.0;
        }
        match &self.kind {
            LawKind::Table(t) => t.invert(p),
            LawKind::Closed if self.hyperplane => match self.space.kind() {
                Geometry::Spherical => (p * r.sin()).asin(),
                Geometry::Euclidean => p * r,
                Geometry::Hyperbolic => (p * r.sinh()).asinh(),
            },
            LawKind::Closed => match self.space.kind() {
                Geometry::Spherical => 2.0 * (p.sqrt() * (0.5 * r).sin()).min(1.0).asin(),
                Geometry::Euclidean => r * p.sqrt(),
                Geometry::Hyperbolic => 2.0 * (p.sqrt() * (0.5 * r).sinh()).asinh(),
            },
        }
        .min(r)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let r = self.upper;
        let t = t.clamp(0.0, r);
        match &self.kind {
            LawKind::Table(tab) => tab.cumulative_at(t) / tab.total(),
            LawKind::Closed if self.hyperplane => match self.space.kind() {
                Geometry::Spherical => t.sin() / r.sin(),
                Geometry::Euclidean => t / r,
                Geometry::Hyperbolic => t.sinh() / r.sinh(),
            },
            LawKind::Closed => self.space.radial_integral(t) / self.space.radial_integral(r),
        }
    }
}

/// Cached sampler for uniform points in a ball about `e`.
pub struct BallSampler {
    region: BallRegion,
    law: RadialLaw,
}

impl BallSampler {
    pub fn new(region: BallRegion) -> Self {
        Self {
            law: RadialLaw::volume(region.space, region.radius),
            region,
        }
    }

    pub fn region(&self) -> BallRegion {
        self.region
    }

    pub fn radial_law(&self) -> &RadialLaw {
        &self.law
    }

    /// One proposal: direction, then radial uniform. Returns ambient coordinates.
    pub(crate) fn propose(&self, rng: &mut RngStream) -> Vec<f64> {
        let space = self.region.space;
        let u = rng.equatorial_direction(space.n());
        let t = self.law.quantile(rng.uniform());
        space.polar_point(t, &u).into_coords()
    }

    /// Uniform point; the acceptance uniform is drawn and discarded so that
    /// this consumes the same words as one rejection-sampler proposal.
    pub fn sample(&self, rng: &mut RngStream) -> Point {
        let x = self.propose(rng);
        let _ = rng.uniform();
        Point::from_raw(self.region.space, x)
    }

    /// Rejection sampling of the density `density` bounded by `sup`, proposing
    /// from this ball. `acceptance` is the expected acceptance rate.
    pub(crate) fn rejection<F: Fn(&[f64]) -> f64>(
        &self,
        sup: f64,
        acceptance: f64,
        density: F,
        rng: &mut RngStream,
    ) -> Result<Point> {
        if !(sup > 0.0) || !(acceptance > 0.0) {
            return Err(GeomError::EmptyDensity);
        }
        if acceptance < MIN_ACCEPTANCE {
            return Err(GeomError::Efficiency { acceptance, attempts: 0 });
        }
        for _ in 0..MAX_PROPOSALS {
            let x = self.propose(rng);
            let a = rng.uniform();
            if a * sup < density(&x) {
                return Ok(Point::from_raw(self.region.space, x));
            }
        }
        Err(GeomError::Efficiency {
            acceptance,
            attempts: MAX_PROPOSALS,
        })
    }
}

pub fn sample_uniform_ball(region: &BallRegion, rng: &mut RngStream) -> Point {
    BallSampler::new(*region).sample(rng)
}

/// Point with law `f / |f|_1`, by rejection from the grid's support ball.
pub fn sample_density(f: &GridFunction, rng: &mut RngStream) -> Result<Point> {
    let grid = f.grid();
    let sampler = BallSampler::new(BallRegion::new(grid.space(), grid.radius())?);
    sample_density_with(f, &sampler, rng)
}

pub(crate) fn sample_density_with(
    f: &GridFunction,
    sampler: &BallSampler,
    rng: &mut RngStream,
) -> Result<Point> {
    if f.l1() <= 0.0 {
        return Err(GeomError::EmptyDensity);
    }
    let acceptance = f.l1() / (f.sup() * sampler.region().volume());
    sampler.rejection(f.sup(), acceptance, |x| f.lookup_raw(x), rng)
}

/// Cached sampler for hyperplanes meeting `B_R`, drawn from the invariant
/// measure `cs^{n-1}(sigma) dsigma dv`, `sigma >= 0`.
pub struct HyperplaneSampler {
    space: Space,
    law: RadialLaw,
}

impl HyperplaneSampler {
    pub fn new(space: Space, r: f64) -> Result<Self> {
        check_plane_radius(space, r)?;
        let cap = match space.kind() {
            Geometry::Spherical => r.min(FRAC_PI_2),
            _ => r,
        };
        Ok(Self {
            space,
            law: RadialLaw::hyperplane(space, cap),
        })
    }

    pub fn sigma_law(&self) -> &RadialLaw {
        &self.law
    }

    /// Ambient normal of the next hyperplane, oriented as in [`Hyperplane`].
    pub(crate) fn sample_normal(&self, rng: &mut RngStream) -> Vec<f64> {
        let v = rng.equatorial_direction(self.space.n());
        let sigma = self.law.quantile(rng.uniform());
        let (a, b) = match self.space.kind() {
            Geometry::Spherical => (-sigma.sin(), sigma.cos()),
            Geometry::Euclidean => (-sigma, 1.0),
            Geometry::Hyperbolic => (-sigma.sinh(), -sigma.cosh()),
        };
        let mut u: Vec<f64> = v.iter().map(|x| b * x).collect();
        u[0] = a;
        u
    }

    pub fn sample(&self, rng: &mut RngStream) -> Hyperplane {
        let v = rng.equatorial_direction(self.space.n());
        let sigma = self.law.quantile(rng.uniform());
        Hyperplane::from_canonical(self.space, sigma, &v).expect("valid canonical hyperplane")
    }
}

fn check_plane_radius(space: Space, r: f64) -> Result<()> {
    if !(r >= 0.0 && r <= space.max_radius()) || r.is_infinite() {
        return Err(GeomError::Domain { what: "hyperplane radius", value: r });
    }
    Ok(())
}

pub fn sample_hyperplane_meeting_ball(space: Space, r: f64, rng: &mut RngStream) -> Result<Hyperplane> {
    if r == 0.0 {
        return Err(GeomError::Domain { what: "hyperplane radius", value: r });
    }
    Ok(HyperplaneSampler::new(space, r)?.sample(rng))
}

fn hyperplane_integral(space: Space, r: f64) -> f64 {
    match (space.kind(), space.n()) {
        (Geometry::Euclidean, _) => r,
        (Geometry::Spherical, 2) => r.sin(),
        (Geometry::Hyperbolic, 2) => r.sinh(),
        _ => {
            let w = |t: f64| space.hyperplane_weight(t);
            let rough = crate::numeric::gauss_legendre8(&w, 0.0, r).abs().max(1e-300);
            crate::numeric::integrate(w, 0.0, r, 1e-14 * rough)
        }
    }
}

/// Invariant measure of the hyperplanes meeting `B_R`: total mass 1 on the
/// sphere, mass 1 on those meeting `B_1` otherwise.
pub fn hyperplane_mass(space: Space, r: f64) -> Result<f64> {
    check_plane_radius(space, r)?;
    Ok(match space.kind() {
        Geometry::Spherical => {
            hyperplane_integral(space, r.min(FRAC_PI_2)) / hyperplane_integral(space, FRAC_PI_2)
        }
        _ => hyperplane_integral(space, r) / hyperplane_integral(space, 1.0),
    })
}

/// `lambda_n(S^n)`; kept here for estimators that normalise by it.
pub fn sphere_volume(n: usize) -> f64 {
    sphere_area(n)
}
