//! Densities on 2-dimensional models stored on polar `(t, phi)` grids about
//! `e`, with two-point symmetrization, symmetric decreasing rearrangement,
//! the bathtub radius and Baernstein-Taylor iteration.
//!
//! Cell `(k, l)` covers `t in [k h_t, (k+1) h_t]`, `phi in [l h_phi, (l+1) h_phi]`
//! and is stored at index `k * nphi + l`. Values live at cell centres.
//! Off-grid evaluation uses bilinear interpolation in `(t, phi)`, periodic in
//! `phi`, clamped in `t`, and zero beyond the support radius.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::sampling::{BallRegion, BallSampler, HyperplaneSampler, RngStream};
use crate::spaces::{Geometry, Hyperplane, Point, Side, Space};

const TWO_PI: f64 = 2.0 * PI;

/// Polar grid over the ball `B_R` of a 2-dimensional model.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    space: Space,
    radius: f64,
    nt: usize,
    nphi: usize,
    ring_cell: Vec<f64>,
}

/// `int_0^t sn(s) ds` on a 2-dimensional model.
fn area_primitive(kind: Geometry, t: f64) -> f64 {
    match kind {
        Geometry::Spherical => 2.0 * (0.5 * t).sin().powi(2),
        Geometry::Euclidean => 0.5 * t * t,
        Geometry::Hyperbolic => 2.0 * (0.5 * t).sinh().powi(2),
    }
}

impl PolarGrid {
    pub fn new(space: Space, radius: f64, nt: usize, nphi: usize) -> Result<Self> {
        if space.n() != 2 {
            return Err(GeomError::Config(format!(
                "polar grids need n = 2, got n = {}",
                space.n()
            )));
        }
        if !(radius > 0.0 && radius <= space.max_radius()) || !radius.is_finite() {
            return Err(GeomError::Domain { what: "grid radius", value: radius });
        }
        if nt == 0 || nphi == 0 {
            return Err(GeomError::Config("grid resolution must be positive".into()));
        }
        let hphi = TWO_PI / nphi as f64;
        let ht = radius / nt as f64;
        let ring_cell = (0..nt)
            .map(|k| {
                let (a, b) = (k as f64 * ht, ((k + 1) as f64 * ht).min(radius));
                hphi * (area_primitive(space.kind(), b) - area_primitive(space.kind(), a))
            })
            .collect();
        Ok(Self {
            space,
            radius,
            nt,
            nphi,
            ring_cell,
        })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nphi(&self) -> usize {
        self.nphi
    }

    pub fn len(&self) -> usize {
        self.nt * self.nphi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ht(&self) -> f64 {
        self.radius / self.nt as f64
    }

    pub fn hphi(&self) -> f64 {
        TWO_PI / self.nphi as f64
    }

    /// Measure of one cell in ring `k`.
    pub fn cell_measure(&self, k: usize) -> f64 {
        self.ring_cell[k]
    }

    pub fn ring_measure(&self, k: usize) -> f64 {
        self.ring_cell[k] * self.nphi as f64
    }

    pub fn total_measure(&self) -> f64 {
        let mut s = crate::numeric::CompensatedSum::default();
        for k in 0..self.nt {
            s.add(self.ring_measure(k));
        }
        s.value()
    }

    /// Largest geodesic diameter bound of a cell: `h_t + sn(R) h_phi`.
    pub fn max_cell_size(&self) -> f64 {
        let sn_max = match self.space.kind() {
            Geometry::Spherical if self.radius > PI / 2.0 => 1.0,
            _ => self.space.sn_raw(self.radius),
        };
        self.ht() + sn_max * self.hphi()
    }

    pub fn index(&self, k: usize, l: usize) -> usize {
        k * self.nphi + l
    }

    pub fn center(&self, k: usize, l: usize) -> (f64, f64) {
        ((k as f64 + 0.5) * self.ht(), (l as f64 + 0.5) * self.hphi())
    }

    /// Ambient coordinates of the point with polar coordinates `(t, phi)`.
    pub fn point_coords(&self, t: f64, phi: f64) -> Vec<f64> {
        let (c, s) = (self.space.cs_raw(t), self.space.sn_raw(t));
        vec![c, s * phi.cos(), s * phi.sin()]
    }

    pub fn center_coords(&self, idx: usize) -> Vec<f64> {
        let (t, phi) = self.center(idx / self.nphi, idx % self.nphi);
        self.point_coords(t, phi)
    }

    /// Polar coordinates `(t, phi)` of ambient coordinates, `phi in [0, 2 pi)`.
    pub fn polar_of(&self, x: &[f64]) -> (f64, f64) {
        let t = self.space.radius_of(x);
        let mut phi = x[2].atan2(x[1]);
        if phi < 0.0 {
            phi += TWO_PI;
        }
        if phi >= TWO_PI {
            phi = 0.0;
        }
        (t, phi)
    }

    /// Cell containing `(t, phi)`, or `None` beyond the support.
    pub fn cell_of(&self, t: f64, phi: f64) -> Option<usize> {
        if t > self.radius {
            return None;
        }
        let k = ((t / self.ht()) as usize).min(self.nt - 1);
        let l = ((phi / self.hphi()) as usize) % self.nphi;
        Some(self.index(k, l))
    }
}

/// Nonnegative piecewise-constant density on a [`PolarGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: PolarGrid,
    values: Vec<f64>,
    sup: f64,
    l1: f64,
}

impl GridFunction {
    pub fn new(grid: PolarGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GeomError::Config(format!(
                "expected {} grid values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(GeomError::Domain { what: "grid value", value: *v });
        }
        Ok(Self::from_parts(grid, values))
    }

    fn from_parts(grid: PolarGrid, values: Vec<f64>) -> Self {
        let sup = values.iter().copied().fold(0.0, f64::max);
        let mut acc = crate::numeric::CompensatedSum::default();
        for k in 0..grid.nt {
            let mut ring = crate::numeric::CompensatedSum::default();
            for v in &values[k * grid.nphi..(k + 1) * grid.nphi] {
                ring.add(*v);
            }
            acc.add(ring.value() * grid.ring_cell[k]);
        }
        Self {
            l1: acc.value(),
            grid,
            values,
            sup,
        }
    }

    /// Samples `f(t, phi)` at cell centres.
    pub fn from_polar_fn(grid: PolarGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let (t, phi) = grid.center(i / grid.nphi, i % grid.nphi);
                f(t, phi)
            })
            .collect();
        Self::new(grid, values)
    }

    /// Samples `f` at the ambient coordinates of cell centres.
    pub fn from_point_fn(grid: PolarGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.center_coords(i)))
            .collect();
        Self::new(grid, values)
    }

    /// Indicator of the cells whose centre lies in the given set.
    pub fn indicator(grid: PolarGrid, member: impl Fn(&[f64]) -> bool + Sync) -> Self {
        Self::from_point_fn(grid, |x| if member(x) { 1.0 } else { 0.0 }).expect("indicator values")
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize, l: usize) -> f64 {
        self.values[self.grid.index(k, l)]
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.weighted_sum(|i| self.values[i] * self.values[i]).sqrt()
    }

    fn weighted_sum(&self, f: impl Fn(usize) -> f64) -> f64 {
        let nphi = self.grid.nphi;
        let mut acc = crate::numeric::CompensatedSum::default();
        for k in 0..self.grid.nt {
            let mut ring = crate::numeric::CompensatedSum::default();
            for i in k * nphi..(k + 1) * nphi {
                ring.add(f(i));
            }
            acc.add(ring.value() * self.grid.ring_cell[k]);
        }
        acc.value()
    }

    /// `L^2` distance to a function on the same grid.
    pub fn l2_distance(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .weighted_sum(|i| (self.values[i] - other.values[i]).powi(2))
            .sqrt())
    }

    /// `L^1` distance to a function on the same grid.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.weighted_sum(|i| (self.values[i] - other.values[i]).abs()))
    }

    fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(GeomError::Config("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// `lambda({f > s})`.
    pub fn measure_above(&self, s: f64) -> f64 {
        self.weighted_sum(|i| if self.values[i] > s { 1.0 } else { 0.0 })
    }

    /// Piecewise-constant value at ambient coordinates (0 outside the support).
    pub fn lookup_raw(&self, x: &[f64]) -> f64 {
        let (t, phi) = self.grid.polar_of(x);
        self.grid.cell_of(t, phi).map_or(0.0, |i| self.values[i])
    }

    pub fn lookup(&self, x: &Point) -> f64 {
        self.lookup_raw(x.coords())
    }

    /// Bilinear interpolant at polar coordinates.
    pub fn interpolate_polar(&self, t: f64, phi: f64) -> f64 {
        let g = &self.grid;
        if t > g.radius {
            return 0.0;
        }
        let tau = (t / g.ht() - 0.5).clamp(0.0, (g.nt - 1) as f64);
        let k0 = (tau.floor() as usize).min(g.nt - 1);
        let k1 = (k0 + 1).min(g.nt - 1);
        let a = tau - k0 as f64;
        let s = phi / g.hphi() - 0.5;
        let sf = s.floor();
        let b = s - sf;
        let n = g.nphi as i64;
        let l0 = (sf as i64).rem_euclid(n) as usize;
        let l1 = (l0 + 1) % g.nphi;
        let v = |k: usize, l: usize| self.values[k * g.nphi + l];
        (1.0 - a) * ((1.0 - b) * v(k0, l0) + b * v(k0, l1)) + a * ((1.0 - b) * v(k1, l0) + b * v(k1, l1))
    }

    /// Bilinear interpolant at ambient coordinates.
    pub fn interpolate_raw(&self, x: &[f64]) -> f64 {
        let (t, phi) = self.grid.polar_of(x);
        self.interpolate_polar(t, phi)
    }

    pub fn interpolate(&self, x: &Point) -> f64 {
        self.interpolate_raw(x.coords())
    }

    /// Whether every ring is constant (to `tol` relative to the sup).
    pub fn is_radial(&self, tol: f64) -> bool {
        let nphi = self.grid.nphi;
        self.values.chunks(nphi).all(|ring| {
            let (lo, hi) = ring
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            hi - lo <= tol * self.sup.max(1e-300)
        })
    }

    /// Ring averages, innermost first.
    pub fn radial_profile(&self) -> Vec<f64> {
        self.values
            .chunks(self.grid.nphi)
            .map(|ring| ring.iter().sum::<f64>() / ring.len() as f64)
            .collect()
    }

    /// Discretisation tolerance for this function on its grid:
    /// `sup * max_cell_size`, the size of a one-cell displacement of a unit
    /// jump measured in the sup norm scaled by the cell size.
    pub fn eps_grid(&self) -> f64 {
        self.sup * self.grid.max_cell_size()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Indicator of `{f > s}`.
    pub fn superlevel(&self, s: f64) -> GridFunction {
        Self::from_parts(
            self.grid.clone(),
            self.values.iter().map(|&v| if v > s { 1.0 } else { 0.0 }).collect(),
        )
    }
}

/// Two-point symmetrization with respect to a hyperplane `H` not through `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointMap {
    h: Hyperplane,
}

impl TwoPointMap {
    pub fn new(h: Hyperplane) -> Result<Self> {
        if h.sigma() <= 1e-12 {
            return Err(GeomError::Config(
                "two-point symmetrization needs a hyperplane missing e".into(),
            ));
        }
        Ok(Self { h })
    }

    /// The hyperplane whose reflection swaps `e` and `c`.
    pub fn bisecting(space: Space, c: &Point) -> Result<Self> {
        let x = c.coords();
        let h = match space.kind() {
            Geometry::Euclidean => {
                let d = x[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
                if d == 0.0 {
                    return Err(GeomError::Config("bisector of e with itself".into()));
                }
                let mut v = vec![0.0; x.len()];
                for (vi, xi) in v.iter_mut().zip(x).skip(1) {
                    *vi = xi / d;
                }
                Hyperplane::from_canonical(space, 0.5 * d, &v)?
            }
            _ => {
                let mut u: Vec<f64> = x.to_vec();
                u[0] -= 1.0;
                Hyperplane::from_normal(space, &u)?
            }
        };
        Self::new(h)
    }

    /// Random map: `v` uniform, `sigma` with density proportional to `cs` on `(0, r]`.
    pub fn random(space: Space, r: f64, rng: &mut RngStream) -> Result<Self> {
        let sampler = HyperplaneSampler::new(space, r)?;
        loop {
            let h = sampler.sample(rng);
            if h.sigma() > 1e-12 {
                return Self::new(h);
            }
        }
    }

    pub fn hyperplane(&self) -> &Hyperplane {
        &self.h
    }

    pub fn reflect_raw(&self, x: &[f64]) -> Vec<f64> {
        self.h.space().reflect_raw(&self.h, x)
    }

    pub fn side_raw(&self, x: &[f64]) -> Side {
        self.h.space().side_raw(&self.h, x)
    }

    /// Membership in `TK` given membership in `K`.
    pub fn image_contains(&self, x: &[f64], member: impl Fn(&[f64]) -> bool) -> bool {
        let rx = self.reflect_raw(x);
        match self.side_raw(x) {
            Side::Plus => member(x) || member(&rx),
            Side::Minus => member(x) && member(&rx),
            Side::OnH => member(x),
        }
    }

    /// Value of `Tf` at `x` for any function `f`.
    pub fn apply_fn(&self, x: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
        let fx = f(x);
        match self.side_raw(x) {
            Side::OnH => fx,
            side => {
                let fr = f(&self.reflect_raw(x));
                if side == Side::Plus {
                    fx.max(fr)
                } else {
                    fx.min(fr)
                }
            }
        }
    }
}

fn check_space(f: &GridFunction, t: &TwoPointMap) -> Result<()> {
    if f.grid.space != t.h.space() {
        return Err(GeomError::Config("map and grid live in different spaces".into()));
    }
    Ok(())
}

/// `Tf` on the grid: max on `H^+`, min on `H^-`, with the reflected value read
/// off the bilinear interpolant.
pub fn tp_symmetrize_fn(f: &GridFunction, t: &TwoPointMap) -> Result<GridFunction> {
    check_space(f, t)?;
    let g = &f.grid;
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let x = g.center_coords(i);
            let fx = f.values[i];
            match t.side_raw(&x) {
                Side::OnH => fx,
                side => {
                    let fr = f.interpolate_raw(&t.reflect_raw(&x));
                    if side == Side::Plus {
                        fx.max(fr)
                    } else {
                        fx.min(fr)
                    }
                }
            }
        })
        .collect();
    Ok(GridFunction::from_parts(g.clone(), values))
}

/// Result of a set symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct SetSymmetrization {
    pub set: GridFunction,
    /// `|lambda(TK) - lambda(K)|`.
    pub measure_defect: f64,
}

/// `TK` for a `{0, 1}`-valued grid set: [`tp_symmetrize_fn`] thresholded at 1/2.
pub fn tp_symmetrize_set(k: &GridFunction, t: &TwoPointMap) -> Result<SetSymmetrization> {
    if k.values.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(GeomError::Config("set symmetrization needs a 0/1 grid".into()));
    }
    let tf = tp_symmetrize_fn(k, t)?;
    let set = tf.superlevel(0.5);
    Ok(SetSymmetrization {
        measure_defect: (set.l1 - k.l1).abs(),
        set,
    })
}

/// Symmetric decreasing rearrangement refilled by whole rings.
///
/// Cells are sorted by value (descending, ties by index) into a step function
/// of cumulative measure; ring `k` receives the average of that step function
/// over its own measure slot. The distribution function is preserved up to one
/// ring's measure.
pub fn rearrange(f: &GridFunction) -> GridFunction {
    let g = &f.grid;
    let nphi = g.nphi;
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| f.values[b].total_cmp(&f.values[a]).then(a.cmp(&b)));

    let mut ring_values = vec![0.0; g.nt];
    let mut cursor = 0usize;
    let mut left = order.first().map_or(0.0, |&i| g.ring_cell[i / nphi]);
    for (k, out) in ring_values.iter_mut().enumerate() {
        let target = g.ring_measure(k);
        let mut need = target;
        let mut acc = crate::numeric::CompensatedSum::default();
        let mut single: Option<f64> = None;
        let mut mixed = false;
        while need > 1e-13 * target && cursor < order.len() {
            let v = f.values[order[cursor]];
            let take = left.min(need);
            if take > 1e-12 * target {
                match single {
                    None => single = Some(v),
                    Some(s) if s != v => mixed = true,
                    _ => {}
                }
            }
            acc.add(v * take);
            need -= take;
            left -= take;
            if left <= 1e-13 * g.ring_cell[order[cursor] / nphi] {
                cursor += 1;
                if cursor < order.len() {
                    // Carry any roundoff overshoot into the next cell.
                    left += g.ring_cell[order[cursor] / nphi];
                }
            }
        }
        *out = match (single, mixed) {
            (Some(s), false) => s,
            _ => (acc.value() / (target - need.max(0.0)).max(1e-300)).max(0.0),
        };
        if need > 1e-13 * target && single.is_none() {
            *out = 0.0;
        }
    }
    // Enforce monotonicity against averaging roundoff.
    for k in 1..g.nt {
        if ring_values[k] > ring_values[k - 1] {
            ring_values[k] = ring_values[k - 1];
        }
    }
    let values = (0..g.len()).map(|i| ring_values[i / nphi]).collect();
    GridFunction::from_parts(g.clone(), values)
}

/// Radius of the top-level cap with equal integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bathtub {
    pub radius: f64,
    /// Set when `f` vanishes identically.
    pub degenerate: bool,
}

/// `A` with `int f = sup f * lambda(B_A)`, by bisection on the ball volume.
pub fn bathtub_radius(f: &GridFunction) -> Result<Bathtub> {
    if f.sup <= 0.0 || f.l1 <= 0.0 {
        return Ok(Bathtub { radius: 0.0, degenerate: true });
    }
    let space = f.grid.space;
    let vol = f.l1 / f.sup;
    let radius = space.ball_radius_for_volume(vol)?;
    Ok(Bathtub { radius, degenerate: false })
}

/// Pairs of points at distance below `delta`, the first uniform in the grid's
/// support ball.
pub fn sample_close_pairs(
    grid: &PolarGrid,
    delta: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    if !(delta > 0.0) {
        return Err(GeomError::Domain { what: "delta", value: delta });
    }
    let space = grid.space;
    let sampler = BallSampler::new(BallRegion::new(space, grid.radius)?);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let x = sampler.sample(rng).into_coords();
        let gdir = [rng.normal(), rng.normal(), rng.normal()];
        let Some(w) = space.tangent_unit(&x, &gdir) else {
            continue;
        };
        let s = delta * rng.uniform();
        let y = space.exp_raw(&x, &w, s);
        out.push((x, y));
    }
    Ok(out)
}

/// Closes a pair list under the reflection of `t`: each `(x, y)` contributes
/// `(x, y)`, `(rho x, rho y)`, and the mixed pairs when they are no farther
/// apart.
pub fn close_pairs_under(
    pairs: &[(Vec<f64>, Vec<f64>)],
    t: &TwoPointMap,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let space = t.h.space();
    let mut out = Vec::with_capacity(4 * pairs.len());
    for (x, y) in pairs {
        let (rx, ry) = (t.reflect_raw(x), t.reflect_raw(y));
        let d = space.distance_raw(x, y);
        if space.distance_raw(x, &ry) <= d {
            out.push((x.clone(), ry.clone()));
            out.push((rx.clone(), y.clone()));
        }
        out.push((x.clone(), y.clone()));
        out.push((rx, ry));
    }
    out
}

/// Largest `|f(x) - f(y)|` over the given pairs, using the interpolant.
pub fn modulus_on_pairs(f: &GridFunction, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    pairs
        .par_iter()
        .map(|(x, y)| (f.interpolate_raw(x) - f.interpolate_raw(y)).abs())
        .reduce(|| 0.0, f64::max)
}

/// Monte Carlo lower estimate of the modulus of continuity `omega(delta, f)`
/// from `m` random pairs at distance below `delta`.
pub fn modulus_of_continuity(
    f: &GridFunction,
    delta: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let pairs = sample_close_pairs(&f.grid, delta, m, rng)?;
    Ok(modulus_on_pairs(f, &pairs))
}

/// Output of [`baernstein_taylor`].
#[derive(Debug, Clone)]
pub struct BtRun {
    pub result: GridFunction,
    pub rearranged: GridFunction,
    /// `trace[j]` is `||f_j - f^*||_2`; `trace[0]` is the input.
    pub trace: Vec<f64>,
    pub eps_grid: f64,
}

/// Applies `k` random two-point symmetrizations to `f`, recording the `L^2`
/// distance to `f^*` after each step. The `j`-th map draws from stream
/// `[SYMMETRIZE, j]` of `seed`.
pub fn baernstein_taylor(f: &GridFunction, k: usize, seed: u64) -> Result<BtRun> {
    baernstein_taylor_best_of(f, k, seed, 1)
}

/// Variant of [`baernstein_taylor`] that draws `candidates` maps per step from
/// the same law and applies the one closest to `f^*` afterwards (first wins
/// ties). `candidates = 1` is the plain random iteration.
pub fn baernstein_taylor_best_of(f: &GridFunction, k: usize, seed: u64, candidates: usize) -> Result<BtRun> {
    if candidates == 0 {
        return Err(GeomError::Config("at least one candidate map required".into()));
    }
    if k == 0 {
        return Err(GeomError::Config("at least one iteration required".into()));
    }
    let star = rearrange(f);
    let mut cur = f.clone();
    let mut trace = Vec::with_capacity(k + 1);
    trace.push(cur.l2_distance(&star)?);
    let (space, r) = (f.grid.space, f.grid.radius);
    for j in 0..k {
        let mut rng = RngStream::derive(seed, &[crate::sampling::tags::SYMMETRIZE, j as u64]);
        let mut best: Option<(f64, GridFunction)> = None;
        for _ in 0..candidates {
            let t = TwoPointMap::random(space, r, &mut rng)?;
            let next = tp_symmetrize_fn(&cur, &t)?;
            let d = next.l2_distance(&star)?;
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                best = Some((d, next));
            }
        }
        let (d, next) = best.expect("one candidate");
        cur = next;
        trace.push(d);
    }
    Ok(BtRun {
        eps_grid: f.eps_grid(),
        result: cur,
        rearranged: star,
        trace,
    })
}

/// Largest violation of
/// `f(x) f*(x) + f(rho x) f*(rho x) <= Tf(x) f*(x) + Tf(rho x) f*(rho x)`
/// over `m` random `x` in `H^+` within the support.
pub fn tp_pointwise_inequality_check(
    f: &GridFunction,
    t: &TwoPointMap,
    m: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    check_space(f, t)?;
    let star = rearrange(f);
    let tf = tp_symmetrize_fn(f, t)?;
    let sampler = BallSampler::new(BallRegion::new(f.grid.space, f.grid.radius)?);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut got = 0usize;
    let mut tries = 0usize;
    while got < m {
        tries += 1;
        if tries > 1000 * m.max(1) {
            return Err(GeomError::Efficiency {
                acceptance: got as f64 / tries as f64,
                attempts: tries as u64,
            });
        }
        let x = sampler.sample(rng).into_coords();
        if t.side_raw(&x) != Side::Plus {
            continue;
        }
        got += 1;
        let rx = t.reflect_raw(&x);
        let (sx, srx) = (star.interpolate_raw(&x), star.interpolate_raw(&rx));
        let lhs = f.interpolate_raw(&x) * sx + f.interpolate_raw(&rx) * srx;
        let rhs = tf.interpolate_raw(&x) * sx + tf.interpolate_raw(&rx) * srx;
        worst = worst.max(lhs - rhs);
    }
    Ok(worst.max(0.0))
}

/// Cellwise comparison of two grid sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandReport {
    pub mismatched: usize,
    /// Mismatched cells with no differing neighbour of `reference` within the band.
    pub outside_band: usize,
}

/// Cells where `a` and `reference` differ, and how many of those lie farther
/// than `band` cells from a boundary of `reference`.
///
/// Distance counts king moves on the polar grid; all cells of ring 0 share the
/// vertex `e`, so they are mutual neighbours and a path may cross the pole.
pub fn compare_sets_with_band(a: &GridFunction, reference: &GridFunction, band: usize) -> Result<BandReport> {
    a.same_grid(reference)?;
    let g = &a.grid;
    let (nt, nphi) = (g.nt as i64, g.nphi as i64);
    let b = band as i64;
    let inside = |i: usize| reference.values[i] > 0.5;
    let mut report = BandReport { mismatched: 0, outside_band: 0 };
    for i in 0..g.len() {
        if (a.values[i] > 0.5) == inside(i) {
            continue;
        }
        report.mismatched += 1;
        let (k, l) = ((i / g.nphi) as i64, (i % g.nphi) as i64);
        let here = inside(i);
        let differs = |kk: i64, ll: i64| inside((kk * nphi + ll.rem_euclid(nphi)) as usize) != here;
        let mut near = false;
        'scan: for dk in -b..=b {
            let kk = k + dk;
            if kk < 0 {
                continue;
            }
            if kk >= nt {
                // Leaving the grid crosses the support boundary.
                if here {
                    near = true;
                    break 'scan;
                }
                continue;
            }
            for dl in -b..=b {
                if differs(kk, l + dl) {
                    near = true;
                    break 'scan;
                }
            }
        }
        // Through the pole: k steps reach ring 0, one more reaches any ring-0
        // cell, and the remaining steps go outwards at any angle.
        for kk in 0..(b - k).min(nt) {
            if near {
                break;
            }
            near = (0..nphi).any(|ll| differs(kk, ll));
        }
        if !near {
            report.outside_band += 1;
        }
    }
    Ok(report)
}

/// Compares `{Tf > s}` against `T{f > s}` at the given threshold.
pub fn level_set_check(f: &GridFunction, t: &TwoPointMap, s: f64, band: usize) -> Result<BandReport> {
    let tf = tp_symmetrize_fn(f, t)?;
    let lhs = tf.superlevel(s);
    let rhs = tp_symmetrize_set(&f.superlevel(s), t)?.set;
    compare_sets_with_band(&lhs, &rhs, band)
}

/// Text serialisation: a header line
/// `curvlab-grid v1 <kind> 2 <R> <nt> <nphi>` followed by `nt` rows of `nphi`
/// values (ring `k` on row `k`).
pub fn write_grid(f: &GridFunction) -> String {
    let g = &f.grid;
    let mut s = format!(
        "curvlab-grid v1 {} 2 {:?} {} {}\n",
        g.space.kind().name(),
        g.radius,
        g.nt,
        g.nphi
    );
    for ring in f.values.chunks(g.nphi) {
        let row: Vec<String> = ring.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_grid(text: &str) -> Result<GridFunction> {
    let fmt = |m: &str| GeomError::Format(m.to_string());
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| fmt("empty grid file"))?.split_whitespace().collect();
    if header.len() != 7 || header[0] != "curvlab-grid" || header[1] != "v1" {
        return Err(fmt("bad grid header"));
    }
    let kind: Geometry = header[2].parse()?;
    let n: usize = header[3].parse().map_err(|_| fmt("bad dimension"))?;
    let radius: f64 = header[4].parse().map_err(|_| fmt("bad radius"))?;
    let nt: usize = header[5].parse().map_err(|_| fmt("bad nt"))?;
    let nphi: usize = header[6].parse().map_err(|_| fmt("bad nphi"))?;
    let grid = PolarGrid::new(Space::new(kind, n)?, radius, nt, nphi)?;
    let mut values = Vec::with_capacity(grid.len());
    for (row, line) in lines.enumerate() {
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| fmt(&format!("bad value {tok:?}")))?);
        }
        if values.len() - before != nphi {
            return Err(fmt(&format!("row {row} has {} values", values.len() - before)));
        }
    }
    GridFunction::new(grid, values)
}

/// CSV of the ring profile: `k,t_lo,t_hi,value`.
pub fn profile_csv(f: &GridFunction) -> String {
    let ht = f.grid.ht();
    let mut s = String::from("k,t_lo,t_hi,value\n");
    for (k, v) in f.radial_profile().iter().enumerate() {
        let _ = writeln!(s, "{k},{:?},{:?},{v:?}", k as f64 * ht, (k + 1) as f64 * ht);
    }
    s
}

/// CSV of a Baernstein-Taylor trace: `step,l2_distance`.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("step,l2_distance\n");
    for (j, d) in trace.iter().enumerate() {
        let _ = writeln!(s, "{j},{d:?}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap_grid(space: Space, r: f64, n: usize) -> PolarGrid {
        PolarGrid::new(space, r, n, n).unwrap()
    }

    #[test]
    fn cell_measures_sum_to_ball() {
        for space in [Space::spherical(2), Space::euclidean(2), Space::hyperbolic(2)] {
            for r in [0.3, 1.4, 2.5] {
                let g = cap_grid(space, r, 37);
                let vol = space.ball_volume(r).unwrap();
                assert!((g.total_measure() - vol).abs() <= 1e-10 * vol);
            }
        }
        let g = cap_grid(Space::spherical(2), PI, 64);
        assert!((g.total_measure() - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn interpolation_at_centres_is_exact() {
        let g = cap_grid(Space::spherical(2), 1.0, 16);
        let f = GridFunction::from_polar_fn(g.clone(), |t, p| 1.0 + t * p.cos()).unwrap();
        for k in 0..16 {
            for l in 0..16 {
                let (t, p) = g.center(k, l);
                assert!((f.interpolate_polar(t, p) - f.value(k, l)).abs() < 1e-12);
            }
        }
        assert_eq!(f.interpolate_polar(1.01, 0.0), 0.0);
        // periodic wrap in phi
        let (t, _) = g.center(3, 0);
        let a = f.interpolate_polar(t, 1e-9);
        let b = f.interpolate_polar(t, 2.0 * PI - 1e-9);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn symmetric_function_is_fixed() {
        let s = Space::spherical(2);
        let g = cap_grid(s, 1.2, 64);
        // phi -> -phi symmetric, map reflects across the plane x2 = const? Use a
        // map whose reflection is phi -> 2 alpha - phi composed with nothing:
        // such maps pass through e, so instead symmetrize a constant.
        let f = GridFunction::from_polar_fn(g, |_, _| 0.7).unwrap();
        let mut rng = RngStream::new(1, 0);
        let t = TwoPointMap::random(s, 0.5, &mut rng).unwrap();
        let tf = tp_symmetrize_fn(&f, &t).unwrap();
        for v in tf.values() {
            // Reflections of interior cells stay inside the support for sigma small.
            assert!(*v == 0.7 || *v == 0.0);
        }
    }

    #[test]
    fn rearrangement_of_centred_ball_is_identity() {
        let s = Space::spherical(2);
        let g = cap_grid(s, 1.2, 60);
        let r = 0.6; // exactly 30 rings
        let f = GridFunction::from_polar_fn(g, |t, _| if t < r { 1.0 } else { 0.0 }).unwrap();
        let star = rearrange(&f);
        assert_eq!(star.values(), f.values());
    }

    #[test]
    fn rearrangement_equimeasurable_and_radial() {
        let s = Space::hyperbolic(2);
        let g = cap_grid(s, 1.5, 48);
        let mut rng = RngStream::new(3, 0);
        let vals: Vec<f64> = (0..g.len()).map(|_| (rng.uniform() * 8.0).floor()).collect();
        let f = GridFunction::new(g.clone(), vals).unwrap();
        let star = rearrange(&f);
        assert!(star.is_radial(0.0));
        let prof = star.radial_profile();
        assert!(prof.windows(2).all(|w| w[0] >= w[1]));
        assert!((star.l1() - f.l1()).abs() < 1e-9 * f.l1());
        let ring = (0..g.nt()).map(|k| g.ring_measure(k)).fold(0.0, f64::max);
        for s in 0..8 {
            let s = s as f64 - 0.5;
            assert!((f.measure_above(s) - star.measure_above(s)).abs() <= ring * (1.0 + 1e-9));
        }
    }

    #[test]
    fn bisecting_map_swaps_e_and_c() {
        for space in [Space::spherical(2), Space::euclidean(2), Space::hyperbolic(2)] {
            let c = space.polar_point(0.8, &[0.0, 0.6, 0.8]);
            let t = TwoPointMap::bisecting(space, &c).unwrap();
            let img = t.reflect_raw(space.origin().coords());
            assert!(space.distance_raw(&img, c.coords()) < 1e-12);
            assert_eq!(t.side_raw(space.origin().coords()), Side::Plus);
            assert!((t.hyperplane().sigma() - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn bathtub_simple_cases() {
        let e = Space::euclidean(2);
        let g = cap_grid(e, 2.0, 200);
        let f = GridFunction::from_polar_fn(g.clone(), |t, _| if t < 1.0 { 3.0 } else { 0.0 }).unwrap();
        let a = bathtub_radius(&f).unwrap();
        assert!((a.radius - 1.0).abs() < 1e-10);
        let z = GridFunction::from_polar_fn(g, |_, _| 0.0).unwrap();
        assert!(bathtub_radius(&z).unwrap().degenerate);
    }

    #[test]
    fn grid_text_roundtrip() {
        let g = cap_grid(Space::hyperbolic(2), 1.25, 5);
        let f = GridFunction::from_polar_fn(g, |t, p| t * (1.0 + p.sin()) / 3.0).unwrap();
        let back = read_grid(&write_grid(&f)).unwrap();
        assert_eq!(back, f);
        assert!(read_grid("curvlab-grid v2 spherical 2 1 1 1\n0\n").is_err());
        assert!(read_grid("curvlab-grid v1 spherical 2 1 1 2\n0\n").is_err());
    }

    #[test]
    fn band_crosses_the_pole() {
        let g = cap_grid(Space::euclidean(2), 1.0, 64);
        // half plane x_1 > 0; the boundary line passes through e
        let half = GridFunction::indicator(g.clone(), |x| x[1] > 0.0);
        let mut v = half.values().to_vec();
        let far = g.index(0, 8); // ring 0 at phi ~ pi/4, 8 index steps from the line
        v[far] = 0.0;
        let a = GridFunction::new(g.clone(), v).unwrap();
        let rep = compare_sets_with_band(&a, &half, 2).unwrap();
        assert_eq!((rep.mismatched, rep.outside_band), (1, 0));
        let mut v = half.values().to_vec();
        v[g.index(20, 8)] = 0.0;
        let b = GridFunction::new(g, v).unwrap();
        let rep = compare_sets_with_band(&b, &half, 2).unwrap();
        assert_eq!((rep.mismatched, rep.outside_band), (1, 1));
    }
}
