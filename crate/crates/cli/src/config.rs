//! Experiment configuration: JSON schema, defaults and validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use varexp::{Domain, Exponent, Field, PairSpec};

/// Rejected configuration; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<varexp::Error> for ConfigError {
    fn from(e: varexp::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub family: FamilyConfig,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub norm: NormConfig,
    pub constant: ConstantConfig,
    pub factorize: FactorizeConfig,
    pub rhi: RhiConfig,
    pub report: ReportConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub dim: usize,
    pub half_width: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { dim: 1, half_width: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub depth: u32,
    pub shifts: u32,
    /// Depth scan; each depth gets its own family and resolution.
    pub depths: Option<Vec<u32>>,
    /// Nodes per axis on the finest cube; replaces `grid.refinement` in scans.
    pub nodes_per_finest: Option<u32>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            depth: 8,
            shifts: 1,
            depths: None,
            nodes_per_finest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Node spacing `2^-refinement`.
    pub refinement: i32,
    pub singular_depth: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            refinement: 12,
            singular_depth: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub identity: f64,
    /// Max relative change over a depth scan counted as a plateau.
    pub plateau: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            identity: 1e-12,
            plateau: 0.01,
        }
    }
}

/// An expression, optionally with the points where it may vanish or blow up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Expr(String),
    Detailed {
        expr: String,
        #[serde(default)]
        singular: Vec<Vec<f64>>,
    },
}

impl FieldSpec {
    pub fn expr(src: &str) -> Self {
        FieldSpec::Expr(src.to_string())
    }

    pub fn build(&self, domain: &Domain) -> Result<Field, ConfigError> {
        let (src, singular) = match self {
            FieldSpec::Expr(s) => (s.as_str(), &[][..]),
            FieldSpec::Detailed { expr, singular } => (expr.as_str(), singular.as_slice()),
        };
        let f = Field::parse(src, domain).map_err(|e| ConfigError(format!("{src:?}: {e}")))?;
        for z in singular {
            if z.len() != domain.dim() {
                return bad(format!("singular point {z:?} has wrong dimension"));
            }
        }
        Ok(f.with_singular_points(singular.iter().cloned()))
    }

    pub fn exponent(&self, domain: &Domain) -> Result<Exponent, ConfigError> {
        Ok(Exponent::new(self.build(domain)?)?)
    }
}

/// A number or the string `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExtReal {
    Num(f64),
    Text(String),
}

impl ExtReal {
    pub fn value(&self) -> Result<f64, ConfigError> {
        match self {
            ExtReal::Num(v) => Ok(*v),
            ExtReal::Text(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
            ExtReal::Text(s) => bad(format!("expected a number or \"inf\", got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecConfig {
    /// `"full"`: the full-range parameters for the configured `gamma`.
    Named(String),
    Explicit {
        r1: ExtReal,
        s1: ExtReal,
        r2: ExtReal,
        s2: ExtReal,
    },
}

impl SpecConfig {
    pub fn build(&self, gamma: f64) -> Result<PairSpec, ConfigError> {
        match self {
            SpecConfig::Named(s) if s == "full" => Ok(PairSpec::full_range(gamma)?),
            SpecConfig::Named(s) => bad(format!("unknown spec {s:?}")),
            SpecConfig::Explicit { r1, s1, r2, s2 } => {
                let spec = PairSpec::new(gamma, r1.value()?, s1.value()?, r2.value()?, s2.value()?)?;
                if !spec.is_consistent() {
                    return bad(format!(
                        "empty class: 1/r1-1/r2 and 1/s1-1/s2 must both equal gamma (defect {})",
                        spec.consistency_defect()
                    ));
                }
                Ok(spec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeConfig {
    pub corner: Vec<f64>,
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormConfig {
    pub f: FieldSpec,
    pub w: Option<FieldSpec>,
    pub p: FieldSpec,
    /// Defaults to the whole domain.
    pub cube: Option<CubeConfig>,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            f: FieldSpec::expr("1"),
            w: None,
            p: FieldSpec::expr("2"),
            cube: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantKind {
    Apq,
    Limited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantConfig {
    pub kind: ConstantKind,
    pub w: FieldSpec,
    pub p: FieldSpec,
    pub q: FieldSpec,
    pub gamma: f64,
    pub spec: Option<SpecConfig>,
}

impl Default for ConstantConfig {
    fn default() -> Self {
        Self {
            kind: ConstantKind::Apq,
            w: FieldSpec::expr("1"),
            p: FieldSpec::expr("2"),
            q: FieldSpec::expr("2"),
            gamma: 0.0,
            spec: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorizeMode {
    Full,
    Limited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FactorizeConfig {
    pub mode: FactorizeMode,
    pub p: FieldSpec,
    pub q: FieldSpec,
    pub p1: FieldSpec,
    pub q1: FieldSpec,
    pub w: FieldSpec,
    pub w1: FieldSpec,
    pub gamma: f64,
    pub theta: OneOrMany,
    pub spec: Option<SpecConfig>,
    pub iota: f64,
    pub samples: usize,
    /// Run the weight-constant scans.
    pub constants: bool,
}

impl Default for FactorizeConfig {
    fn default() -> Self {
        Self {
            mode: FactorizeMode::Full,
            p: FieldSpec::expr("2"),
            q: FieldSpec::expr("2"),
            p1: FieldSpec::expr("2"),
            q1: FieldSpec::expr("2"),
            w: FieldSpec::expr("1"),
            w1: FieldSpec::expr("1"),
            gamma: 0.0,
            theta: OneOrMany::One(0.3),
            spec: None,
            iota: 0.05,
            samples: 1000,
            constants: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RhiConfig {
    pub u: FieldSpec,
    pub r: FieldSpec,
    pub s_grid: Vec<f64>,
    pub cap: f64,
}

impl Default for RhiConfig {
    fn default() -> Self {
        Self {
            u: FieldSpec::expr("1"),
            r: FieldSpec::expr("2"),
            s_grid: vec![1.0, 1.1, 1.25, 1.5, 2.0],
            cap: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// CSV files to merge; empty means every `*.csv` in the output directory.
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Random cases per randomized invariant.
    pub cases: usize,
    /// Max depth of the cube families used by the weight invariants.
    pub max_depth: u32,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { cases: 20, max_depth: 6 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Checks the shared sections; command sections are checked when built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=3).contains(&self.domain.dim) {
            return bad(format!("domain.dim = {} not in 1..=3", self.domain.dim));
        }
        if !(self.domain.half_width > 0.0 && self.domain.half_width.is_finite()) {
            return bad("domain.half_width must be positive");
        }
        if self.family.depth > varexp::geometry::MAX_DYADIC_DEPTH {
            return bad(format!("family.depth = {} too large", self.family.depth));
        }
        if let Some(ds) = &self.family.depths {
            if ds.is_empty() || ds.iter().any(|&d| d > varexp::geometry::MAX_DYADIC_DEPTH) {
                return bad("family.depths must be a nonempty list of valid depths");
            }
        }
        if self.family.nodes_per_finest == Some(0) {
            return bad("family.nodes_per_finest must be positive");
        }
        if !(self.tolerances.rtol > 0.0 && self.tolerances.rtol < 1e-2) {
            return bad("tolerances.rtol must be in (0, 1e-2)");
        }
        if !(self.tolerances.identity > 0.0) || !(self.tolerances.plateau > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(-30..=30).contains(&self.grid.refinement) {
            return bad("grid.refinement out of range");
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain, ConfigError> {
        Ok(Domain::centered(self.domain.dim, self.domain.half_width)?)
    }

    /// Short SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..8])
    }
}
