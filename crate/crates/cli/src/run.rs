//! Dispatch of experiment kinds.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use curvlab_core::functionals::{self, Estimate, Functional, McConfig};
use curvlab_core::hull::{self, PointSet};
use curvlab_core::sampling::{tags, RngStream, RNG_IDENTITY};
use curvlab_core::symmetrize::{self, GridFunction, PolarGrid, TwoPointMap};
use curvlab_core::{Geometry, Hyperplane, Shape, Space};

use crate::config::{ExperimentConfig, GridInit, Kind, SCHEMA_VERSION};
use crate::CliError;

const DEFAULT_M_OUTER: u64 = 10_000;
const DEFAULT_M_INNER: u64 = 1000;
const DEFAULT_BOUNDARY: usize = 1024;
const DEFAULT_GRID_N: usize = 256;
const DEFAULT_BT_TARGET: f64 = 0.05;
const SELF_TEST_TOL: f64 = 1e-9;

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub assert: bool,
}

/// One row of estimates. Exact values have `stderr = 0` and `m = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub quantity: String,
    pub parameter: Option<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub m: u64,
    pub ci95: (f64, f64),
    pub ci99: (f64, f64),
}

impl EstimateRow {
    pub fn from_estimate(quantity: &str, parameter: Option<f64>, e: &Estimate) -> Self {
        Self {
            quantity: quantity.to_string(),
            parameter,
            mean: e.mean,
            stderr: e.stderr,
            m: e.m,
            ci95: e.ci95,
            ci99: e.ci99(),
        }
    }

    pub fn exact(quantity: &str, parameter: Option<f64>, value: f64) -> Self {
        Self::from_estimate(quantity, parameter, &Estimate::exact(value, 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub statement: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub kind: String,
    pub config_hash: String,
    pub version: String,
    pub rng: String,
    pub timestamp: String,
    pub wall_ms: f64,
    pub seed: u64,
    pub workers: usize,
    pub estimates: Vec<EstimateRow>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assertion: Option<Assertion>,
}

/// A record plus the auxiliary files of the run (name, contents).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub trace_csv: Option<String>,
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    /// 0, or [`crate::EXIT_ASSERT`] when asserting and the check failed.
    /// Self-tests always enforce their checks.
    pub fn exit_code(&self, assert: bool) -> i32 {
        let enforce = assert || self.record.kind == Kind::SelfTest.name();
        match &self.record.assertion {
            Some(a) if enforce && !a.passed => crate::EXIT_ASSERT,
            _ => 0,
        }
    }
}

#[derive(Default)]
struct Body {
    rows: Vec<EstimateRow>,
    notes: Vec<String>,
    assertion: Option<Assertion>,
    trace: Option<String>,
    files: Vec<(String, String)>,
}

/// Runs `kind` on `cfg`. A `kind` field in the config must agree.
pub fn run(cfg: &ExperimentConfig, kind: Kind, opts: &RunOptions) -> Result<RunOutput, CliError> {
    if cfg.schema != SCHEMA_VERSION {
        return Err(CliError::Config(format!("unsupported schema version {}", cfg.schema)));
    }
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(CliError::Config(format!(
                "config is for `{}`, not `{}`",
                k.name(),
                kind.name()
            )));
        }
    }
    let mut eff = cfg.clone();
    eff.kind = Some(kind);
    if opts.seed.is_some() {
        eff.seed = opts.seed;
    }
    let workers = opts.workers.or(cfg.workers).unwrap_or(1).max(1);
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let body = pool.install(|| dispatch(&eff, kind, workers))?;
    let record = ResultRecord {
        schema: SCHEMA_VERSION,
        kind: kind.name().to_string(),
        config_hash: eff.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng: RNG_IDENTITY.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        seed: eff.seed(),
        workers,
        estimates: body.rows,
        notes: body.notes,
        assertion: body.assertion,
    };
    Ok(RunOutput {
        record,
        trace_csv: body.trace,
        files: body.files,
    })
}

fn dispatch(cfg: &ExperimentConfig, kind: Kind, workers: usize) -> Result<Body, CliError> {
    match kind {
        Kind::U1Ball => u1_ball(cfg),
        Kind::U1Polytope => u1_polytope(cfg),
        Kind::ExpectU1 => expect_u1(cfg, workers),
        Kind::UrysohnPaired => paired(cfg, workers, Functional::U1),
        Kind::SantaloPaired => paired(cfg, workers, Functional::PolarVolume),
        Kind::Symmetrize => symmetrize_once(cfg),
        Kind::Rearrange => rearrange(cfg),
        Kind::BtConverge => bt_converge(cfg),
        Kind::SelfTest => self_test(cfg),
    }
}

fn space_of(cfg: &ExperimentConfig) -> Result<Space, CliError> {
    Ok(Space::new(cfg.space_kind()?, cfg.dim())?)
}

fn mc_config(cfg: &ExperimentConfig, workers: usize) -> McConfig {
    McConfig::new(cfg.seed(), cfg.m_outer.unwrap_or(DEFAULT_M_OUTER))
        .with_inner(cfg.m_inner.unwrap_or(DEFAULT_M_INNER))
        .with_workers(workers)
}

/// `count` boundary points of `B_r`: a regular polygon for `n = 2`, random
/// directions otherwise.
fn ball_boundary(space: Space, r: f64, count: usize, seed: u64) -> Result<PointSet, CliError> {
    let n = space.n();
    let mut rng = RngStream::derive(seed, &[tags::POINT, r.to_bits()]);
    let pts = (0..count)
        .map(|i| {
            let u = if n == 2 {
                let a = 2.0 * PI * i as f64 / count as f64;
                vec![0.0, a.cos(), a.sin()]
            } else {
                rng.equatorial_direction(n)
            };
            space.from_polar(&curvlab_core::PolarCoord { t: r, u })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PointSet::new(space, pts)?)
}

fn u1_ball(cfg: &ExperimentConfig) -> Result<Body, CliError> {
    let space = space_of(cfg)?;
    let radii = cfg
        .radii
        .as_ref()
        .ok_or_else(|| CliError::Config("u1-ball needs `radii`".into()))?;
    let mut b = Body::default();
    let mut all_covered = true;
    for &r in radii {
        let exact = functionals::u1_ball(space, r)?;
        b.rows.push(EstimateRow::exact("u1_ball", Some(r), exact));
        if let Some(m) = cfg.m_outer {
            let ps = ball_boundary(space, r, cfg.boundary_points.unwrap_or(DEFAULT_BOUNDARY), cfg.seed())?;
            let mut rng = RngStream::derive(cfg.seed(), &[tags::PLANE, r.to_bits()]);
            let est = functionals::u1_mc(&ps, &mut rng, m)?;
            all_covered &= est.covers(exact, curvlab_core::numeric::Z99);
            b.rows.push(EstimateRow::from_estimate("u1_mc_boundary", Some(r), &est));
        }
    }
    if cfg.m_outer.is_some() {
        b.assertion = Some(Assertion {
            statement: "closed-form U1(B_r) inside the 99% CI of the boundary estimate".into(),
            passed: all_covered,
        });
    }
    Ok(b)
}

fn u1_polytope(cfg: &ExperimentConfig) -> Result<Body, CliError> {
    let space = space_of(cfg)?;
    let specs = cfg
        .points
        .as_ref()
        .ok_or_else(|| CliError::Config("u1-polytope needs `points`".into()))?;
    let pts = specs
        .iter()
        .map(|c| c.point(space))
        .collect::<Result<Vec<_>, _>>()?;
    let ps = PointSet::new(space, pts)?;
    if space.kind() == Geometry::Spherical && !hull::is_proper(&ps) {
        return Err(CliError::Geom(curvlab_core::GeomError::NotProper));
    }
    let mut b = Body::default();
    if space.n() == 2 {
        b.rows.push(EstimateRow::exact("u1_exact", None, functionals::u1_exact(&ps)?));
        if space.kind() == Geometry::Spherical {
            let dual = functionals::polar_volume_exact_s2(&ps)?;
            let perim = functionals::u1_perimeter_s2(&ps)?;
            b.rows.push(EstimateRow::exact("polar_area", None, dual));
            b.rows.push(EstimateRow::exact("u1_polar_residual", None, perim + dual / (2.0 * PI) - 1.0));
        }
    }
    if let Some(m) = cfg.m_outer {
        let mut rng = RngStream::derive(cfg.seed(), &[tags::PLANE, 0]);
        let est = functionals::u1_mc(&ps, &mut rng, m)?;
        b.rows.push(EstimateRow::from_estimate("u1_mc", None, &est));
    }
    Ok(b)
}

/// One shape per slot; a single spec is repeated `count` times.
fn shapes_for(
    space: Space,
    specs: &[curvlab_core::ShapeSpec],
    count: usize,
) -> Result<Vec<Shape>, CliError> {
    match specs.len() {
        0 => Err(CliError::Config("`shapes` is empty".into())),
        1 => {
            let s = Shape::from_spec(space, &specs[0])?;
            Ok(vec![s; count])
        }
        k if k == count => Ok(specs
            .iter()
            .map(|s| Shape::from_spec(space, s))
            .collect::<Result<Vec<_>, _>>()?),
        k => Err(CliError::Config(format!("{k} shapes given for N = {count}"))),
    }
}

fn require_shapes(cfg: &ExperimentConfig) -> Result<&[curvlab_core::ShapeSpec], CliError> {
    cfg.shapes
        .as_deref()
        .ok_or_else(|| CliError::Config("missing field `shapes`".into()))
}

fn point_count(cfg: &ExperimentConfig, specs: &[curvlab_core::ShapeSpec]) -> Result<usize, CliError> {
    match (cfg.n_points, specs.len()) {
        (Some(0), _) => Err(CliError::Config("N must be positive".into())),
        (Some(n), _) => Ok(n),
        (None, k) if k > 1 => Ok(k),
        _ => Err(CliError::Config("missing field `N`".into())),
    }
}

fn expect_u1(cfg: &ExperimentConfig, workers: usize) -> Result<Body, CliError> {
    let space = space_of(cfg)?;
    let specs = require_shapes(cfg)?;
    let mc = mc_config(cfg, workers);
    let mut b = Body::default();
    let counts = match &cfg.sweep_n {
        Some(sweep) => sweep.clone(),
        None => vec![point_count(cfg, specs)?],
    };
    if cfg.sweep_n.is_some() && specs.len() != 1 {
        return Err(CliError::Config("sweeps need a single shape".into()));
    }
    for n in counts {
        let shapes = shapes_for(space, specs, n)?;
        let est = functionals::expected_u1(&shapes, &mc)?;
        b.rows.push(EstimateRow::from_estimate("expected_u1", Some(n as f64), &est));
    }
    Ok(b)
}

/// Passes when the 99% interval lies strictly above zero, or when the two
/// configurations coincide sample by sample.
fn directional(est: &Estimate) -> bool {
    est.ci99().0 > 0.0 || (est.mean == 0.0 && est.stderr == 0.0)
}

fn paired(cfg: &ExperimentConfig, workers: usize, functional: Functional) -> Result<Body, CliError> {
    let space = space_of(cfg)?;
    if functional == Functional::PolarVolume && space.kind() != Geometry::Spherical {
        return Err(CliError::Config("santalo-paired runs on the sphere".into()));
    }
    let specs = require_shapes(cfg)?;
    let n = point_count(cfg, specs)?;
    let k = shapes_for(space, specs, n)?;
    let (b_shapes, label) = match &cfg.shapes_b {
        Some(bs) => (shapes_for(space, bs, n)?, "shapes_b"),
        None => (
            k.iter().map(Shape::equal_measure_ball).collect::<Result<Vec<_>, _>>()?,
            "equal-measure balls",
        ),
    };
    let mc = mc_config(cfg, workers);
    let mut b = Body::default();
    let (est, statement) = match functional {
        Functional::U1 => (
            functionals::paired_compare(Functional::U1, &k, &b_shapes, &mc)?,
            format!("E U1[K]_N >= E U1[B]_N with B = {label}"),
        ),
        Functional::PolarVolume => (
            functionals::paired_compare(Functional::PolarVolume, &b_shapes, &k, &mc)?,
            format!("E vol([K]_N^*) <= E vol([C]_N^*) with C = {label}"),
        ),
    };
    for (i, s) in b_shapes.iter().enumerate() {
        if let curvlab_core::shape::ShapeKind::Ball { r } = s.kind() {
            b.notes.push(format!("slot {i}: comparison ball radius {r:?}"));
        }
    }
    b.rows.push(EstimateRow::from_estimate("delta", Some(n as f64), &est));
    b.assertion = Some(Assertion {
        statement: format!("{statement}: 99% CI of delta above 0"),
        passed: directional(&est),
    });
    Ok(b)
}

fn initial_grid(cfg: &ExperimentConfig) -> Result<GridFunction, CliError> {
    let gc = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `grid`".into()))?;
    if let GridInit::File { path } = &gc.init {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.as_ref(), e))?;
        let f = symmetrize::read_grid(&text)?;
        if let Some(kind) = cfg.space {
            if f.grid().space().kind() != kind {
                return Err(CliError::Config(format!("grid {path} is for another space")));
            }
        }
        return Ok(f);
    }
    let space = space_of(cfg)?;
    let radius = gc.radius.unwrap_or(match space.kind() {
        Geometry::Spherical => PI / 2.0,
        _ => 2.0,
    });
    let grid = PolarGrid::new(
        space,
        radius,
        gc.nt.unwrap_or(DEFAULT_GRID_N),
        gc.nphi.unwrap_or(DEFAULT_GRID_N),
    )?;
    let center = |t: f64, phi: f64| {
        space.from_polar(&curvlab_core::PolarCoord {
            t,
            u: vec![0.0, phi.cos(), phi.sin()],
        })
    };
    Ok(match &gc.init {
        GridInit::Cap { t, phi, r } => {
            let c = center(*t, *phi)?;
            let r = *r;
            GridFunction::indicator(grid, |x| {
                space.distance(&c, &space.point(x.to_vec()).expect("grid point")).unwrap_or(f64::INFINITY) <= r
            })
        }
        GridInit::Tent { t, phi, r } => {
            let c = center(*t, *phi)?;
            let r = *r;
            if !(r > 0.0) {
                return Err(CliError::Config("tent radius must be positive".into()));
            }
            GridFunction::from_point_fn(grid, |x| {
                let d = space.distance(&c, &space.point(x.to_vec()).expect("grid point")).unwrap_or(f64::INFINITY);
                (1.0 - d / r).max(0.0)
            })?
        }
        GridInit::File { .. } => unreachable!(),
    })
}

fn map_of(cfg: &ExperimentConfig, g: &PolarGrid) -> Result<TwoPointMap, CliError> {
    let space = g.space();
    match cfg.map {
        Some(m) => {
            let h = Hyperplane::from_canonical(space, m.sigma, &[0.0, m.phi.cos(), m.phi.sin()])?;
            Ok(TwoPointMap::new(h)?)
        }
        None => {
            let mut rng = RngStream::derive(cfg.seed(), &[tags::SYMMETRIZE, 0]);
            Ok(TwoPointMap::random(space, g.radius(), &mut rng)?)
        }
    }
}

fn norms(b: &mut Body, which: &str, f: &GridFunction) {
    b.rows.push(EstimateRow::exact(&format!("{which}_l1"), None, f.l1()));
    b.rows.push(EstimateRow::exact(&format!("{which}_l2"), None, f.l2()));
    b.rows.push(EstimateRow::exact(&format!("{which}_sup"), None, f.sup()));
}

fn symmetrize_once(cfg: &ExperimentConfig) -> Result<Body, CliError> {
    let f = initial_grid(cfg)?;
    let t = map_of(cfg, f.grid())?;
    let tf = symmetrize::tp_symmetrize_fn(&f, &t)?;
    let mut b = Body::default();
    norms(&mut b, "input", &f);
    norms(&mut b, "symmetrized", &tf);
    b.rows.push(EstimateRow::exact("eps_grid", None, f.eps_grid()));
    let h = t.hyperplane();
    b.notes.push(format!("map: sigma = {:?}, v = {:?}", h.sigma(), h.direction()));
    b.files.push(("input.grid".into(), symmetrize::write_grid(&f)));
    b.files.push(("symmetrized.grid".into(), symmetrize::write_grid(&tf)));
    Ok(b)
}

fn rearrange(cfg: &ExperimentConfig) -> Result<Body, CliError> {
    let f = initial_grid(cfg)?;
    let star = symmetrize::rearrange(&f);
    let mut b = Body::default();
    norms(&mut b, "input", &f);
    norms(&mut b, "rearranged", &star);
    let bt = symmetrize::bathtub_radius(&f)?;
    b.rows.push(EstimateRow::exact("bathtub_radius", None, bt.radius));
    b.files.push(("rearranged.grid".into(), symmetrize::write_grid(&star)));
    b.files.push(("profile.csv".into(), symmetrize::profile_csv(&star)));
    Ok(b)
}

fn bt_converge(cfg: &ExperimentConfig) -> Result<Body, CliError> {
    let f = initial_grid(cfg)?;
    let k = cfg.iterations.unwrap_or(200);
    let q = cfg.candidates.unwrap_or(1);
    let run = symmetrize::baernstein_taylor_best_of(&f, k, cfg.seed(), q)?;
    let norm = f.l2();
    let max_inc = run
        .trace
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let last = *run.trace.last().expect("non-empty trace");
    let rel = if norm > 0.0 { last / norm } else { 0.0 };
    let target = cfg.target.unwrap_or(DEFAULT_BT_TARGET);
    let mut b = Body::default();
    b.rows.push(EstimateRow::exact("initial_l2_distance", Some(0.0), run.trace[0]));
    b.rows.push(EstimateRow::exact("final_l2_distance", Some(k as f64), last));
    b.rows.push(EstimateRow::exact("relative_final_l2_distance", Some(k as f64), rel));
    b.rows.push(EstimateRow::exact("max_step_increment", None, max_inc));
    b.rows.push(EstimateRow::exact("eps_grid", None, run.eps_grid));
    b.assertion = Some(Assertion {
        statement: format!(
            "trace non-increasing within eps_grid and final distance below {target} of |f|_2"
        ),
        passed: max_inc <= run.eps_grid && rel < target,
    });
    b.trace = Some(symmetrize::trace_csv(&run.trace));
    b.files.push(("final.grid".into(), symmetrize::write_grid(&run.result)));
    Ok(b)
}

fn self_test(cfg: &ExperimentConfig) -> Result<Body, CliError> {
    let mut b = Body::default();
    let mut ok = true;
    let mut check = |b: &mut Body, name: &str, param: Option<f64>, got: f64, want: f64| {
        b.rows.push(EstimateRow::exact(name, param, got));
        if (got - want).abs() > SELF_TEST_TOL {
            ok = false;
            b.notes.push(format!("{name}({param:?}) = {got:?}, expected {want:?}"));
        }
    };
    let (s, e, h) = (Space::spherical(2), Space::euclidean(2), Space::hyperbolic(2));
    check(&mut b, "u1_ball_euclidean", Some(1.0), functionals::u1_ball(e, 1.0)?, 1.0);
    check(&mut b, "u1_ball_hyperbolic", Some(1.0), functionals::u1_ball(h, 1.0)?, 1.0);
    check(&mut b, "u1_ball_spherical", Some(PI / 2.0), functionals::u1_ball(s, PI / 2.0)?, 1.0);
    for r in [0.3, 0.7, 1.2] {
        check(&mut b, "u1_ball_spherical", Some(r), functionals::u1_ball(s, r)?, r.sin());
    }
    for r in [0.5, 2.0] {
        check(&mut b, "u1_ball_euclidean", Some(r), functionals::u1_ball(e, r)?, r);
        check(&mut b, "u1_ball_hyperbolic", Some(r), functionals::u1_ball(h, r)?, r.sinh() / 1f64.sinh());
    }
    // U1 + lambda(K^*) / (2 pi) = 1 on random spherical polygons
    let ball = Shape::ball(s, 1.0)?;
    for j in 0..20u64 {
        let ps = functionals::sample_configuration(&vec![ball.clone(); 3 + (j as usize % 8)], cfg.seed(), j)?;
        let residual = functionals::u1_perimeter_s2(&ps)? + functionals::polar_volume_exact_s2(&ps)? / (2.0 * PI) - 1.0;
        check(&mut b, "u1_polar_residual", Some(j as f64), residual, 0.0);
    }
    b.assertion = Some(Assertion {
        statement: format!("closed-form anchors and polar identity within {SELF_TEST_TOL:e}"),
        passed: ok,
    });
    Ok(b)
}
