//! Scenario files: a TOML description of the ambient structure, the
//! immersion, the distributions, the warped candidate, the sample grid and
//! tolerance overrides.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ambient::{KenmotsuStructure, MetricModel, PhiConvention};
use crate::check::{ToleranceError, Tolerances};
use crate::expr::{CompiledExpr, ExprError};
use crate::slant::Distribution;
use crate::submanifold::{GeometryError, Immersion};
use crate::warped::{WarpedError, WarpedSpec};

/// Built-in scenarios by name.
pub const BUILTINS: [(&str, &str); 5] = [
    ("example-4.1", include_str!("../scenarios/example-4.1.toml")),
    ("product", include_str!("../scenarios/product.toml")),
    ("invariant", include_str!("../scenarios/invariant.toml")),
    ("anti-invariant", include_str!("../scenarios/anti-invariant.toml")),
    ("corrupted", include_str!("../scenarios/corrupted.toml")),
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {source}")]
    Parse {
        origin: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("`{origin}` is neither a file nor a built-in scenario ({known})")]
    Unknown { origin: String, known: String },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("field `{field}`: {source}")]
    Expr {
        field: String,
        #[source]
        source: ExprError,
    },
    #[error("immersion: {0}")]
    Geometry(#[from] GeometryError),
    #[error("warped: {0}")]
    Warped(#[from] WarpedError),
    #[error(transparent)]
    Tolerance(#[from] ToleranceError),
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientConfig {
    pub m: usize,
    #[serde(default = "default_metric")]
    pub metric: MetricModel,
    #[serde(default = "default_phi")]
    pub phi: PhiConvention,
}

fn default_metric() -> MetricModel {
    MetricModel::Kenmotsu
}

fn default_phi() -> PhiConvention {
    PhiConvention::Standard
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionConfig {
    pub params: Vec<String>,
    pub components: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionConfig {
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedConfig {
    pub base: Vec<String>,
    pub fiber: Vec<String>,
    pub f: String,
    pub mu: Option<String>,
    pub time_param: Option<String>,
    #[serde(default)]
    pub fit_t: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Number of uniform random points in the box.
    pub random: Option<usize>,
    /// Points per parameter of a product grid.
    pub counts: Option<Vec<usize>>,
    /// Explicit points.
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Random ambient points for the structure checks.
    #[serde(default = "default_axiom_points")]
    pub axiom_points: usize,
}

fn default_seed() -> u64 {
    42
}

fn default_axiom_points() -> usize {
    100
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFlags {
    #[serde(default = "yes")]
    pub axioms: bool,
    #[serde(default = "yes")]
    pub slant: bool,
    #[serde(default = "yes")]
    pub warped: bool,
    #[serde(default = "yes")]
    pub inequality: bool,
}

fn yes() -> bool {
    true
}

impl Default for SuiteFlags {
    fn default() -> Self {
        Self {
            axioms: true,
            slant: true,
            warped: true,
            inequality: true,
        }
    }
}

/// What a claim is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimQuantity {
    /// Cosine of the first slant function.
    CosTheta1,
    /// Cosine of the second slant function.
    CosTheta2,
    /// `g(phi (s d_a), s d_b)` for `args = [a, b]`.
    PhiPair,
    /// `g(s d_a, s d_b)` for `args = [a, b]`.
    Metric,
    /// Ambient coordinates of `phi (s d_a)` for `args = [a]`, against `claimed_vector`.
    PhiImage,
    /// One immersion component, `args = [coordinate]` such as `y4` or `t`.
    Component,
    /// Fiber trace factor of the induced metric at the fit time.
    WarpingFactor,
    /// `xi(ln f)`.
    XiLogWarping,
}

/// A value stated for the scenario, compared against the computed one at
/// every sample and logged with its largest deviation.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Claim {
    pub label: String,
    pub eq_ref: Option<String>,
    pub quantity: ClaimQuantity,
    #[serde(default)]
    pub args: Vec<String>,
    pub claimed: Option<String>,
    pub claimed_vector: Option<Vec<String>>,
    /// Scale applied to coordinate fields before evaluation.
    pub scale: Option<String>,
    pub note: Option<String>,
}

/// The file format, as read.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub description: Option<String>,
    pub ambient: AmbientConfig,
    pub immersion: ImmersionConfig,
    pub distributions: Option<DistributionConfig>,
    pub warped: Option<WarpedConfig>,
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub suites: SuiteFlags,
    #[serde(default)]
    pub claims: Vec<Claim>,
}

/// A compiled claim.
#[derive(Clone, Debug)]
pub struct CompiledClaim {
    pub claim: Claim,
    pub args: Vec<usize>,
    pub claimed: Option<CompiledExpr>,
    pub claimed_vector: Option<Vec<CompiledExpr>>,
    pub scale: Option<CompiledExpr>,
}

/// A validated scenario with every expression compiled.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub structure: KenmotsuStructure,
    pub immersion: Immersion,
    pub d1: Option<Distribution>,
    pub d2: Option<Distribution>,
    pub warped: Option<WarpedSpec>,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub suites: SuiteFlags,
    pub claims: Vec<CompiledClaim>,
    pub source: ScenarioFile,
}

/// Ambient coordinate index of a name like `x3`, `y1` or `t`.
pub fn ambient_coordinate(name: &str, m: usize) -> Option<usize> {
    if name == "t" {
        return Some(2 * m);
    }
    let (axis, index) = name.split_at(1);
    let i: usize = index.parse().ok()?;
    if i == 0 || i > m {
        return None;
    }
    match axis {
        "x" => Some(2 * (i - 1)),
        "y" => Some(2 * (i - 1) + 1),
        _ => None,
    }
}

impl Scenario {
    /// A built-in name or a path to a scenario file.
    pub fn load(origin: &str) -> Result<Self, ScenarioError> {
        if let Some((_, text)) = BUILTINS.iter().find(|(name, _)| *name == origin) {
            return Self::from_toml(text, origin);
        }
        let path = Path::new(origin);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
                path: origin.into(),
                source,
            })?;
            return Self::from_toml(&text, origin);
        }
        Err(ScenarioError::Unknown {
            origin: origin.into(),
            known: BUILTINS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        })
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|source| ScenarioError::Parse {
            origin: origin.into(),
            source,
        })?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let ambient = &file.ambient;
        if ambient.m == 0 {
            return Err(invalid("ambient.m", "must be at least 1"));
        }
        let structure = KenmotsuStructure {
            m: ambient.m,
            metric: ambient.metric,
            phi: ambient.phi,
        };
        let imm = &file.immersion;
        if imm.bounds.len() != imm.params.len() {
            return Err(invalid(
                "immersion.box",
                format!("{} intervals for {} parameters", imm.bounds.len(), imm.params.len()),
            ));
        }
        for (i, [lo, hi]) in imm.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid("immersion.box", format!("interval {i} is [{lo}, {hi}]")));
            }
        }
        if imm.components.len() != structure.dim() {
            return Err(invalid(
                "immersion.components",
                format!("{} components for ambient dimension {}", imm.components.len(), structure.dim()),
            ));
        }
        let params: Vec<&str> = imm.params.iter().map(String::as_str).collect();
        let components: Vec<&str> = imm.components.iter().map(String::as_str).collect();
        let bounds: Vec<(f64, f64)> = imm.bounds.iter().map(|[a, b]| (*a, *b)).collect();
        let immersion = Immersion::parse(&params, &components, &bounds)?;
        let n = immersion.dim();

        let (d1, d2) = match &file.distributions {
            Some(d) => {
                let d1 = Distribution::new("D1", &d.d1);
                let d2 = Distribution::new("D2", &d.d2);
                d1.validate(n)
                    .map_err(|e| invalid("distributions.d1", e.to_string()))?;
                d2.validate(n)
                    .map_err(|e| invalid("distributions.d2", e.to_string()))?;
                (Some(d1), Some(d2))
            }
            None => (None, None),
        };

        let warped = match &file.warped {
            Some(w) => {
                let base: Vec<&str> = w.base.iter().map(String::as_str).collect();
                let fiber: Vec<&str> = w.fiber.iter().map(String::as_str).collect();
                Some(WarpedSpec::new(
                    &imm.params,
                    &base,
                    &fiber,
                    &w.f,
                    w.mu.as_deref(),
                    w.time_param.as_deref(),
                    w.fit_t,
                )?)
            }
            None => None,
        };

        let grid = &file.grid;
        let modes = [grid.random.is_some(), grid.counts.is_some(), grid.points.is_some()];
        if modes.iter().filter(|m| **m).count() != 1 {
            return Err(invalid("grid", "exactly one of `random`, `counts`, `points` is required"));
        }
        if grid.random == Some(0) {
            return Err(invalid("grid.random", "grid is empty"));
        }
        if let Some(counts) = &grid.counts {
            if counts.len() != n || counts.contains(&0) {
                return Err(invalid("grid.counts", format!("need {n} positive counts")));
            }
        }
        if let Some(points) = &grid.points {
            if points.is_empty() {
                return Err(invalid("grid.points", "grid is empty"));
            }
            if let Some(bad) = points.iter().position(|p| p.len() != n) {
                return Err(invalid("grid.points", format!("point {bad} does not have {n} coordinates")));
            }
        }
        file.tolerances.validate()?;

        let claims = file
            .claims
            .iter()
            .enumerate()
            .map(|(i, c)| compile_claim(c, i, &imm.params, &structure))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            name: file.name.clone(),
            description: file.description.clone(),
            structure,
            immersion,
            d1,
            d2,
            warped,
            grid: file.grid.clone(),
            tolerances: file.tolerances.clone(),
            suites: file.suites.clone(),
            claims,
            source: file,
        })
    }

    /// Sample points: explicit, a product grid, or seeded uniform draws.
    /// `grid_override` replaces the configured grid by an `N`-per-parameter
    /// product grid.
    pub fn sample_points(&self, seed: u64, grid_override: Option<usize>) -> Vec<Vec<f64>> {
        let bounds = &self.immersion.bounds;
        if let Some(count) = grid_override {
            return product_grid(bounds, &vec![count; bounds.len()]);
        }
        if let Some(points) = &self.grid.points {
            return points.clone();
        }
        if let Some(counts) = &self.grid.counts {
            return product_grid(bounds, counts);
        }
        let count = self.grid.random.unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                bounds
                    .iter()
                    .map(|(lo, hi)| if lo == hi { *lo } else { rng.random_range(*lo..*hi) })
                    .collect()
            })
            .collect()
    }
}

fn compile_claim(
    claim: &Claim,
    index: usize,
    params: &[String],
    structure: &KenmotsuStructure,
) -> Result<CompiledClaim, ScenarioError> {
    let field = |name: &str| format!("claims[{index}].{name}");
    let compile = |name: &str, src: &str| {
        CompiledExpr::new(src, params).map_err(|source| ScenarioError::Expr {
            field: field(name),
            source,
        })
    };
    let param = |name: &String| {
        params
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| invalid(&field("args"), format!("unknown parameter `{name}`")))
    };
    let args = match claim.quantity {
        ClaimQuantity::PhiPair | ClaimQuantity::Metric => {
            if claim.args.len() != 2 {
                return Err(invalid(&field("args"), "two parameter names required"));
            }
            claim.args.iter().map(param).collect::<Result<Vec<_>, _>>()?
        }
        ClaimQuantity::PhiImage => {
            if claim.args.len() != 1 {
                return Err(invalid(&field("args"), "one parameter name required"));
            }
            vec![param(&claim.args[0])?]
        }
        ClaimQuantity::Component => {
            let name = claim
                .args
                .first()
                .ok_or_else(|| invalid(&field("args"), "one ambient coordinate required"))?;
            vec![ambient_coordinate(name, structure.m)
                .ok_or_else(|| invalid(&field("args"), format!("unknown ambient coordinate `{name}`")))?]
        }
        _ => Vec::new(),
    };
    let claimed = claim.claimed.as_deref().map(|s| compile("claimed", s)).transpose()?;
    let claimed_vector = claim
        .claimed_vector
        .as_ref()
        .map(|v| v.iter().map(|s| compile("claimed_vector", s)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    match (claim.quantity, &claimed, &claimed_vector) {
        (ClaimQuantity::PhiImage, _, Some(v)) if v.len() == structure.dim() => {}
        (ClaimQuantity::PhiImage, _, _) => {
            return Err(invalid(
                &field("claimed_vector"),
                format!("{} expressions required", structure.dim()),
            ))
        }
        (_, Some(_), _) => {}
        _ => return Err(invalid(&field("claimed"), "missing")),
    }
    Ok(CompiledClaim {
        claim: claim.clone(),
        args,
        claimed,
        claimed_vector,
        scale: claim.scale.as_deref().map(|s| compile("scale", s)).transpose()?,
    })
}

fn product_grid(bounds: &[(f64, f64)], counts: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .zip(counts)
        .map(|((lo, hi), &k)| {
            if k == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
            }
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(*x);
                    p
                })
            })
            .collect();
    }
    out
}
