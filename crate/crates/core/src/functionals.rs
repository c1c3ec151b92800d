//! The `U1` hyperplane functional, spherical polar volumes and Monte Carlo
//! estimators of their expectations over random polytopes.
//!
//! Expectations are averages over `m_outer` independent samples. Sample `j`
//! draws point `i` from stream `[POINT, j, i]` and, when an inner Monte Carlo
//! loop is needed (`n >= 3`), its hyperplanes or directions from
//! `[PLANE, j]` / `[POLAR, j]`. Paired estimators give both configurations the
//! same streams. Samples are grouped into fixed-size chunks whose partial
//! statistics are merged in chunk order, so results do not depend on the
//! number of workers.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::hull::{self, PointSet};
use crate::numeric::{sphere_area, Z95, Z99};
use crate::sampling::{hyperplane_mass, tags, HyperplaneSampler, RngStream};
use crate::shape::Shape;
use crate::spaces::{Geometry, Space};

/// Smallest accepted Monte Carlo sample count.
pub const MIN_SAMPLES: u64 = 100;
/// Default number of outer samples per chunk.
pub const DEFAULT_CHUNK: u64 = 1024;

/// Monte Carlo result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub m: u64,
    pub seed: u64,
    pub ci95: (f64, f64),
    pub wall_ms: f64,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64, m: u64, seed: u64, wall_ms: f64) -> Self {
        Self {
            mean,
            stderr,
            m,
            seed,
            ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
            wall_ms,
        }
    }

    pub fn exact(value: f64, seed: u64) -> Self {
        Self::new(value, 0.0, 1, seed, 0.0)
    }

    pub fn ci99(&self) -> (f64, f64) {
        (self.mean - Z99 * self.stderr, self.mean + Z99 * self.stderr)
    }

    /// Whether `target` lies within `k` standard errors (plus rounding slack
    /// for exact results).
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-9 * target.abs().max(1.0)
    }

    /// Same estimate with the timing field zeroed, for reproducibility checks.
    pub fn without_timing(mut self) -> Self {
        self.wall_ms = 0.0;
        self
    }
}

/// Which functional of the random hull an expectation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `U1(conv{X_1, ..., X_N})`.
    U1,
    /// `lambda_n(conv{X_1, ..., X_N}^*)` on the sphere.
    PolarVolume,
}

/// Sample sizes, seed and parallelism of an expectation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub seed: u64,
    pub m_outer: u64,
    /// Inner Monte Carlo size for `n >= 3`.
    pub m_inner: u64,
    pub workers: usize,
    pub chunk: u64,
}

impl McConfig {
    pub fn new(seed: u64, m_outer: u64) -> Self {
        Self {
            seed,
            m_outer,
            m_inner: 1000,
            workers: 1,
            chunk: DEFAULT_CHUNK,
        }
    }

    pub fn with_inner(mut self, m_inner: u64) -> Self {
        self.m_inner = m_inner;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

/// `U1(B_r)` in closed form (quadrature ratio for general `n`).
pub fn u1_ball(space: Space, r: f64) -> Result<f64> {
    hyperplane_mass(space, r)
}

fn binomial(mass: f64, hits: u64, m: u64) -> (f64, f64) {
    let p = hits as f64 / m as f64;
    let var = if m > 1 { p * (1.0 - p) / (m - 1) as f64 } else { 0.0 };
    (mass * p, mass * var.sqrt())
}

fn all_equal(ps: &PointSet) -> bool {
    let first = &ps.coords()[0];
    ps.coords().iter().all(|x| x == first)
}

/// Hit count of `m` hyperplanes meeting the enclosing ball; returns the
/// estimate and its standard error.
fn u1_mc_raw(ps: &PointSet, rng: &mut RngStream, m: u64) -> Result<(f64, f64)> {
    if all_equal(ps) {
        return Ok((0.0, 0.0));
    }
    let space = ps.space();
    let (points, r_env) = match space.kind() {
        Geometry::Spherical => {
            let cap = hull::enclosing_cap(ps).ok_or(GeomError::NotProper)?;
            let q = hull::householder_to_e(&cap.center);
            let pts: Vec<Vec<f64>> = ps.coords().iter().map(|x| q(x)).collect();
            (pts, (cap.radius + 1e-12).min(FRAC_PI_2 - 1e-9))
        }
        _ => {
            let r = ps
                .coords()
                .iter()
                .map(|x| space.radius_of(x))
                .fold(0.0, f64::max);
            (ps.coords().to_vec(), r * (1.0 + 1e-12))
        }
    };
    if r_env <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let sampler = HyperplaneSampler::new(space, r_env)?;
    let mut hits = 0u64;
    for _ in 0..m {
        let u = sampler.sample_normal(rng);
        if hull::meets_normal(space, &points, &u) {
            hits += 1;
        }
    }
    Ok(binomial(hyperplane_mass(space, r_env)?, hits, m))
}

/// Monte Carlo `U1(conv ps)`: `m` hyperplanes meeting the smallest ball about
/// `e` (on the sphere: about the enclosing-cap centre) that holds the points.
pub fn u1_mc(ps: &PointSet, rng: &mut RngStream, m: u64) -> Result<Estimate> {
    if m < MIN_SAMPLES {
        return Err(GeomError::TooFewSamples { m: m as usize, min: MIN_SAMPLES as usize });
    }
    let start = Instant::now();
    let seed = rng.seed();
    let (mean, se) = u1_mc_raw(ps, rng, m)?;
    Ok(Estimate::new(mean, se, m, seed, start.elapsed().as_secs_f64() * 1e3))
}

fn require(ps: &PointSet, kind: Geometry) -> Result<()> {
    if ps.space().kind() != kind || ps.space().n() != 2 {
        return Err(GeomError::Config(format!(
            "evaluator needs {} points with n = 2",
            kind.name()
        )));
    }
    Ok(())
}

/// `U1` on `R^2`: perimeter of the hull over `2 pi`.
pub fn u1_exact_r2(ps: &PointSet) -> Result<f64> {
    require(ps, Geometry::Euclidean)?;
    Ok(hull::hull_perimeter(ps)? / (2.0 * PI))
}

/// `U1` on `H^2`: perimeter of the hull over `2 pi sinh 1`.
pub fn u1_exact_h2(ps: &PointSet) -> Result<f64> {
    require(ps, Geometry::Hyperbolic)?;
    Ok(hull::hull_perimeter(ps)? / (2.0 * PI * 1f64.sinh()))
}

/// `U1` on `S^2` from the polar dual: `1 - 2 lambda(K^*) / (4 pi)`.
pub fn u1_exact_s2(ps: &PointSet) -> Result<f64> {
    require(ps, Geometry::Spherical)?;
    let area = hull::polar_dual_s2(ps)?.area();
    Ok(1.0 - area / (2.0 * PI))
}

/// `U1` on `S^2` from the hull perimeter: `perimeter / (2 pi)`. Independent of
/// the polar dual, so it cross-checks [`u1_exact_s2`].
pub fn u1_perimeter_s2(ps: &PointSet) -> Result<f64> {
    require(ps, Geometry::Spherical)?;
    Ok(hull::hull_perimeter(ps)? / (2.0 * PI))
}

/// Exact `U1` for any 2-dimensional model.
pub fn u1_exact(ps: &PointSet) -> Result<f64> {
    match ps.space().kind() {
        Geometry::Euclidean => u1_exact_r2(ps),
        Geometry::Spherical => u1_exact_s2(ps),
        Geometry::Hyperbolic => u1_exact_h2(ps),
    }
}

fn polar_volume_raw(ps: &PointSet, rng: &mut RngStream, m: u64) -> (f64, f64) {
    let n = ps.space().n();
    let mut hits = 0u64;
    for _ in 0..m {
        let z = rng.sphere_point(n);
        if ps
            .coords()
            .iter()
            .all(|x| x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() <= 0.0)
        {
            hits += 1;
        }
    }
    binomial(sphere_area(n), hits, m)
}

/// Monte Carlo `lambda_n(conv(ps)^*)` from `m` uniform directions on `S^n`.
pub fn polar_volume_mc(ps: &PointSet, rng: &mut RngStream, m: u64) -> Result<Estimate> {
    if ps.space().kind() != Geometry::Spherical {
        return Err(GeomError::Config("polar volumes are defined on the sphere".into()));
    }
    if m < MIN_SAMPLES {
        return Err(GeomError::TooFewSamples { m: m as usize, min: MIN_SAMPLES as usize });
    }
    let start = Instant::now();
    let seed = rng.seed();
    let (mean, se) = polar_volume_raw(ps, rng, m);
    Ok(Estimate::new(mean, se, m, seed, start.elapsed().as_secs_f64() * 1e3))
}

/// Exact `lambda_2(conv(ps)^*)` on `S^2` by angle excess.
pub fn polar_volume_exact_s2(ps: &PointSet) -> Result<f64> {
    Ok(hull::polar_dual_s2(ps)?.area())
}

/// Running mean and second central moment (Welford / Chan).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let n = (self.count + o.count) as f64;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n;
        self.m2 += o.m2 + d * d * self.count as f64 * o.count as f64 / n;
        self.count += o.count;
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2.max(0.0) / ((self.count - 1) * self.count) as f64).sqrt()
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| GeomError::Config(format!("worker pool: {e}")))
}

/// Averages `sample(j)` over `j < m_outer` with the chunked, order-fixed
/// reduction described in the module docs.
pub fn outer_mean<F>(cfg: &McConfig, sample: F) -> Result<Estimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if cfg.m_outer == 0 {
        return Err(GeomError::TooFewSamples { m: 0, min: 1 });
    }
    let start = Instant::now();
    let chunk = cfg.chunk.max(1);
    let n_chunks = cfg.m_outer.div_ceil(chunk);
    let parts: Vec<Moments> = pool(cfg.workers)?.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut mo = Moments::default();
                for j in c * chunk..((c + 1) * chunk).min(cfg.m_outer) {
                    mo.push(sample(j)?);
                }
                Ok(mo)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(Estimate::new(
        total.mean,
        total.stderr(),
        total.count,
        cfg.seed,
        start.elapsed().as_secs_f64() * 1e3,
    ))
}

/// Points of outer sample `j`, one per shape.
pub fn sample_configuration(shapes: &[Shape], seed: u64, j: u64) -> Result<PointSet> {
    let space = shapes[0].space();
    let pts = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| s.sample_raw(&mut RngStream::derive(seed, &[tags::POINT, j, i as u64])))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointSet::from_raw(space, pts))
}

/// Value of the functional on one configuration; `j` selects inner streams.
pub fn evaluate(functional: Functional, ps: &PointSet, cfg: &McConfig, j: u64) -> Result<f64> {
    let space = ps.space();
    match functional {
        Functional::U1 if space.n() == 2 => u1_exact(ps),
        Functional::U1 => {
            let mut rng = RngStream::derive(cfg.seed, &[tags::PLANE, j]);
            Ok(u1_mc_raw(ps, &mut rng, cfg.m_inner)?.0)
        }
        Functional::PolarVolume if space.kind() != Geometry::Spherical => Err(GeomError::Config(
            "polar volumes are defined on the sphere".into(),
        )),
        Functional::PolarVolume if space.n() == 2 => polar_volume_exact_s2(ps),
        Functional::PolarVolume => {
            let mut rng = RngStream::derive(cfg.seed, &[tags::POLAR, j]);
            Ok(polar_volume_raw(ps, &mut rng, cfg.m_inner).0)
        }
    }
}

fn check_shapes(shapes: &[Shape]) -> Result<Space> {
    let first = shapes
        .first()
        .ok_or_else(|| GeomError::Config("at least one shape required".into()))?;
    let space = first.space();
    if shapes.iter().any(|s| s.space() != space) {
        return Err(GeomError::Config("shapes live in different spaces".into()));
    }
    Ok(space)
}

fn check_inner(space: Space, cfg: &McConfig) -> Result<()> {
    if space.n() > 2 && cfg.m_inner < MIN_SAMPLES {
        return Err(GeomError::TooFewSamples {
            m: cfg.m_inner as usize,
            min: MIN_SAMPLES as usize,
        });
    }
    Ok(())
}

/// `E F(conv{X_1, ..., X_N})` with `X_i` drawn from `shapes[i]`.
///
/// This is the normalised functional `I(f_1, ..., f_N) / prod |f_i|_1`; see
/// [`mass_product`] for the normaliser.
pub fn expected(functional: Functional, shapes: &[Shape], cfg: &McConfig) -> Result<Estimate> {
    let space = check_shapes(shapes)?;
    check_inner(space, cfg)?;
    if shapes.len() == 1 && functional == Functional::U1 {
        return Ok(Estimate::new(0.0, 0.0, cfg.m_outer, cfg.seed, 0.0));
    }
    outer_mean(cfg, |j| {
        let ps = sample_configuration(shapes, cfg.seed, j)?;
        evaluate(functional, &ps, cfg, j)
    })
}

pub fn expected_u1(shapes: &[Shape], cfg: &McConfig) -> Result<Estimate> {
    expected(Functional::U1, shapes, cfg)
}

pub fn expected_polar_volume(shapes: &[Shape], cfg: &McConfig) -> Result<Estimate> {
    expected(Functional::PolarVolume, shapes, cfg)
}

/// `prod_i |f_i|_1`.
pub fn mass_product(shapes: &[Shape]) -> f64 {
    shapes.iter().map(Shape::measure).product()
}

/// Largest per-slot mismatch of effective measures tolerated by pairing.
pub const MEASURE_TOL: f64 = 1e-8;

/// `E_A F - E_B F` with common random numbers: outer sample `j` feeds the same
/// streams to both configurations, so identical inputs give exactly zero.
pub fn paired_compare(
    functional: Functional,
    shapes_a: &[Shape],
    shapes_b: &[Shape],
    cfg: &McConfig,
) -> Result<Estimate> {
    let space = check_shapes(shapes_a)?;
    if check_shapes(shapes_b)? != space {
        return Err(GeomError::Config("paired configurations live in different spaces".into()));
    }
    if shapes_a.len() != shapes_b.len() {
        return Err(GeomError::Config("paired configurations need equal N".into()));
    }
    for (i, (a, b)) in shapes_a.iter().zip(shapes_b).enumerate() {
        let d = (a.effective_measure() - b.effective_measure()).abs();
        if d > MEASURE_TOL {
            return Err(GeomError::Config(format!(
                "slot {i}: measures differ by {d:e}"
            )));
        }
    }
    check_inner(space, cfg)?;
    outer_mean(cfg, |j| {
        let a = sample_configuration(shapes_a, cfg.seed, j)?;
        let b = sample_configuration(shapes_b, cfg.seed, j)?;
        Ok(evaluate(functional, &a, cfg, j)? - evaluate(functional, &b, cfg, j)?)
    })
}
