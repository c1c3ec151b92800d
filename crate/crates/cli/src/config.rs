//! Experiment configuration files (JSON, schema version 1).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use curvlab_core::shape::CenterSpec;
use curvlab_core::{Geometry, ShapeSpec};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    U1Ball,
    U1Polytope,
    ExpectU1,
    UrysohnPaired,
    SantaloPaired,
    Symmetrize,
    Rearrange,
    BtConverge,
    SelfTest,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::U1Ball,
        Kind::U1Polytope,
        Kind::ExpectU1,
        Kind::UrysohnPaired,
        Kind::SantaloPaired,
        Kind::Symmetrize,
        Kind::Rearrange,
        Kind::BtConverge,
        Kind::SelfTest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::U1Ball => "u1-ball",
            Kind::U1Polytope => "u1-polytope",
            Kind::ExpectU1 => "expect-u1",
            Kind::UrysohnPaired => "urysohn-paired",
            Kind::SantaloPaired => "santalo-paired",
            Kind::Symmetrize => "symmetrize",
            Kind::Rearrange => "rearrange",
            Kind::BtConverge => "bt-converge",
            Kind::SelfTest => "self-test",
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = CliError;

    /// Accepts the subcommand spelling (`bt-converge`) or the config one (`bt_converge`).
    fn from_str(s: &str) -> Result<Self, CliError> {
        let name = s.replace('_', "-");
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| CliError::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// Initial grid function for the symmetrization experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridInit {
    /// Indicator of the cap `B(x(t, phi), r)`.
    Cap { t: f64, phi: f64, r: f64 },
    /// `(1 - d(x, c) / r)_+` about `c = x(t, phi)`.
    Tent { t: f64, phi: f64, r: f64 },
    /// Grid text file.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nphi: Option<usize>,
    pub init: GridInit,
}

/// Two-point map: canonical hyperplane coordinates, with `phi` the angle of
/// the direction `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub sigma: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<Geometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Number of random points.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    /// One shape per point, or a single shape used for every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapes: Option<Vec<ShapeSpec>>,
    /// Comparison shapes for paired runs (default: equal-measure balls).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapes_b: Option<Vec<ShapeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_outer: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_inner: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Point counts for an `expect-u1` sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_n: Option<Vec<usize>>,
    /// Radii for `u1-ball`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Size of the boundary polygon used for the Monte Carlo check in `u1-ball`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_points: Option<usize>,
    /// Vertices for `u1-polytope`, in polar coordinates about `e`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<CenterSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Candidate maps per Baernstein-Taylor step (1 = plain random iteration).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    /// Relative `L^2` target for `bt-converge --assert`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 of the canonical form, ignoring fields that cannot change
    /// results (`workers`, `output`).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        c.output = None;
        let text = serde_json::to_string(&c).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn space_kind(&self) -> Result<Geometry, CliError> {
        self.space
            .ok_or_else(|| CliError::Config("missing field `space`".into()))
    }

    pub fn dim(&self) -> usize {
        self.n.unwrap_or(2)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Hand-written JSON schema of [`ExperimentConfig`].
pub fn schema() -> serde_json::Value {
    let num = serde_json::json!({"type": "number"});
    let int = serde_json::json!({"type": "integer", "minimum": 0});
    let center = serde_json::json!({
        "type": "object",
        "required": ["t"],
        "properties": {"t": num, "phi": num, "u": {"type": "array", "items": num}}
    });
    let shape = serde_json::json!({"oneOf": [
        {"type": "object", "required": ["type", "r"],
         "properties": {"type": {"const": "ball"}, "r": num}},
        {"type": "object", "required": ["type", "t0", "t1", "phi0", "phi1"],
         "properties": {"type": {"const": "polar_rect"}, "t0": num, "t1": num, "phi0": num, "phi1": num}},
        {"type": "object", "required": ["type", "centers", "radii"],
         "properties": {"type": {"const": "union_of_balls"},
                        "centers": {"type": "array", "items": center},
                        "radii": {"type": "array", "items": num}}},
        {"type": "object", "required": ["type", "half_widths"],
         "properties": {"type": {"const": "axis_box"}, "half_widths": {"type": "array", "items": num}}},
        {"type": "object", "required": ["type", "path"],
         "properties": {"type": {"const": "grid_density"}, "path": {"type": "string"}}}
    ]});
    let grid = serde_json::json!({
        "type": "object",
        "required": ["init"],
        "properties": {
            "radius": num, "nt": int, "nphi": int,
            "init": {"oneOf": [
                {"type": "object", "required": ["type", "t", "phi", "r"],
                 "properties": {"type": {"enum": ["cap", "tent"]}, "t": num, "phi": num, "r": num}},
                {"type": "object", "required": ["type", "path"],
                 "properties": {"type": {"const": "file"}, "path": {"type": "string"}}}
            ]}
        }
    });
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "curvlab experiment config",
        "type": "object",
        "required": ["schema"],
        "additionalProperties": false,
        "properties": {
            "schema": {"const": SCHEMA_VERSION},
            "kind": {"enum": ["u1_ball", "u1_polytope", "expect_u1", "urysohn_paired",
                              "santalo_paired", "symmetrize", "rearrange", "bt_converge", "self_test"]},
            "space": {"enum": ["spherical", "euclidean", "hyperbolic"]},
            "n": {"type": "integer", "minimum": 2},
            "N": {"type": "integer", "minimum": 1},
            "shapes": {"type": "array", "items": {"$ref": "#/$defs/shape"}},
            "shapes_b": {"type": "array", "items": {"$ref": "#/$defs/shape"}},
            "m_outer": int, "m_inner": int, "seed": int,
            "workers": {"type": "integer", "minimum": 1},
            "output": {"type": "string"},
            "sweep_n": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "radii": {"type": "array", "items": num},
            "boundary_points": {"type": "integer", "minimum": 3},
            "points": {"type": "array", "items": center},
            "grid": grid,
            "map": {"type": "object", "required": ["sigma", "phi"],
                    "properties": {"sigma": num, "phi": num}},
            "iterations": {"type": "integer", "minimum": 1},
            "candidates": {"type": "integer", "minimum": 1},
            "target": num
        },
        "$defs": {"shape": shape}
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_idempotent() {
        let text = r#"{"schema":1,"kind":"urysohn_paired","space":"spherical","N":4,
            "shapes":[{"type":"polar_rect","t0":0.2,"t1":1.1,"phi0":0.0,"phi1":1.5707963267948966}],
            "m_outer":1000,"seed":7}"#;
        let a = ExperimentConfig::parse(text).unwrap();
        let once = a.to_json();
        let b = ExperimentConfig::parse(&once).unwrap();
        assert_eq!(a, b);
        assert_eq!(once, b.to_json());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse(r#"{"schema":2}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"schema":1,"bogus":3}"#).is_err());
        assert!(ExperimentConfig::parse("not json").is_err());
    }

    #[test]
    fn hash_ignores_workers() {
        let mut a = ExperimentConfig { schema: 1, seed: Some(3), ..Default::default() };
        let h = a.hash();
        a.workers = Some(16);
        assert_eq!(a.hash(), h);
        a.seed = Some(4);
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn kind_names_parse_both_spellings() {
        for k in Kind::ALL {
            assert_eq!(k.name().parse::<Kind>().unwrap(), k);
            assert_eq!(k.name().replace('-', "_").parse::<Kind>().unwrap(), k);
        }
        assert!("u1".parse::<Kind>().is_err());
    }
}
