//! Small numerical kernels: adaptive quadrature, bracketing root finding,
//! tabulated inverse CDFs and compensated summation.

use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Fixed 8-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Bisection for an increasing function `g` on `[lo, hi]`, returning `x` with `g(x) ~ target`.
pub fn bisect_increasing<G: Fn(f64) -> f64>(g: G, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Surface area of the unit sphere `S^k` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

pub type BoxedWeight = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Inverse-CDF table for a nonnegative weight on `[0, upper]`.
///
/// Node cumulants come from adaptive quadrature; inside a segment the CDF is
/// evaluated with an 8-point Gauss rule and inverted by safeguarded Newton.
pub struct TabulatedCdf<W: Fn(f64) -> f64> {
    weight: W,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<W: Fn(f64) -> f64> TabulatedCdf<W> {
    pub fn new(weight: W, upper: f64, segments: usize) -> Self {
        let segments = segments.max(1);
        let nodes: Vec<f64> = (0..=segments)
            .map(|k| upper * k as f64 / segments as f64)
            .collect();
        let mut cumulative = Vec::with_capacity(nodes.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            acc += integrate(&weight, w[0], w[1], 1e-15);
            cumulative.push(acc);
        }
        Self {
            weight,
            nodes,
            cumulative,
        }
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn upper(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Unnormalised cumulative weight on `[0, t]`.
    pub fn cumulative_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.upper());
        let k = match self.nodes.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => return self.cumulative[k],
            Err(k) => k - 1,
        };
        self.cumulative[k] + gauss_legendre8(&self.weight, self.nodes[k], t)
    }

    /// Returns `t` with `F(t) = p`, `F` the normalised CDF, to about 1e-12.
    pub fn invert(&self, p: f64) -> f64 {
        let target = p.clamp(0.0, 1.0) * self.total();
        let k = self
            .cumulative
            .partition_point(|&c| c <= target)
            .clamp(1, self.nodes.len() - 1)
            - 1;
        let (mut lo, mut hi) = (self.nodes[k], self.nodes[k + 1]);
        let base = self.cumulative[k];
        let seg = |t: f64| base + gauss_legendre8(&self.weight, self.nodes[k], t);
        let mut t = lo + (hi - lo) * ((target - base) / (self.cumulative[k + 1] - base)).clamp(0.0, 1.0);
        if !t.is_finite() {
            t = 0.5 * (lo + hi);
        }
        for _ in 0..60 {
            let r = seg(t) - target;
            if r.abs() <= 1e-14 * self.total().max(1e-300) {
                break;
            }
            if r < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let w = (self.weight)(t);
            let newton = if w > 0.0 { t - r / w } else { f64::NAN };
            t = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        t
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Standard normal quantiles used for the reported intervals.
pub const Z95: f64 = 1.959_963_984_540_054;
pub const Z99: f64 = 2.575_829_303_548_901;
