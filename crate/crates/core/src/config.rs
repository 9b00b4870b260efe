//! JSON run configurations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::chen::TheoremId;
use crate::error::{Error, Result};
use crate::expr::{parse_in, Expression, Scope};
use crate::metric::{DerivativeMode, Domain, DomainRule, MetricField};
use crate::report::ReportFormat;
use crate::space_forms::{SpaceFormModel, StructureKind, StructureTensors};
use crate::submersion::{PlaneSpec, SmoothMap, SubmersionSetup};
use crate::tolerances::Tolerances;

/// An expression written as a string or a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprText {
    Number(f64),
    Text(String),
}

impl ExprText {
    fn parse(&self, scope: &Scope) -> Result<Expression> {
        match self {
            ExprText::Number(v) => Ok(Expression::constant(*v)),
            ExprText::Text(s) => parse_in(s, scope),
        }
    }
}

/// Metric table: either a full matrix (upper triangle read, `null` off the
/// diagonal meaning 0) or a diagonal plus 1-based "i,j" off-diagonal keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Dense(Vec<Vec<Option<ExprText>>>),
    Sparse {
        diagonal: Vec<ExprText>,
        #[serde(default)]
        off_diagonal: BTreeMap<String, ExprText>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub expr: String,
    pub rule: DomainRule,
    #[serde(default)]
    pub label: Option<String>,
}

/// `matrix[i][j]` is the component φ^i_j (row i of the matrix of φ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub kind: StructureKind,
    pub matrix: Vec<Vec<ExprText>>,
    #[serde(default)]
    pub xi: Option<Vec<ExprText>>,
    #[serde(default)]
    pub eta: Option<Vec<ExprText>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlanesSpec {
    #[serde(default)]
    pub vertical: PlaneSpec,
    #[serde(default)]
    pub horizontal: PlaneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: ReportFormat,
}

/// The file format, field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub derivative_mode: DerivativeMode,
    pub metric_total: MatrixSpec,
    pub metric_base: MatrixSpec,
    pub map: Vec<ExprText>,
    #[serde(default)]
    pub domain: Vec<DomainSpec>,
    #[serde(default)]
    pub structure: Option<StructureSpec>,
    #[serde(default)]
    pub model: Option<SpaceFormModel>,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub planes: PlanesSpec,
    #[serde(default)]
    pub theorems: Vec<TheoremId>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

/// A validated configuration with its compiled setup.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub setup: SubmersionSetup,
    pub hash: String,
}

impl RunConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let setup = build_setup(&file)?;
        for (k, p) in file.points.iter().enumerate() {
            if p.len() != file.n {
                return Err(Error::Shape(format!(
                    "point {k} has {} coordinates, expected {}",
                    p.len(),
                    file.n
                )));
            }
        }
        if file.points.is_empty() {
            return Err(Error::MissingField("points".into()));
        }
        if let Some(model) = &file.model {
            if let Some(kind) = model.needs_structure() {
                match &file.structure {
                    Some(s) if s.kind == kind => {}
                    _ => return Err(Error::MissingStructure(model.name().into())),
                }
            }
        }
        let hash = config_hash(&file)?;
        Ok(RunConfig { file, setup, hash })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(json_error)?;
        RunConfig::from_file(file)
    }

    pub fn name(&self) -> &str {
        self.file.name.as_deref().unwrap_or("config")
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.file.points
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_json(&text)
}

fn json_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            return Error::MissingField(rest[..end].to_string());
        }
    }
    Error::Serialization(msg)
}

fn strip_whitespace(v: &mut Value) {
    match v {
        Value::String(s) => s.retain(|c| !c.is_whitespace()),
        Value::Array(a) => a.iter_mut().for_each(strip_whitespace),
        Value::Object(o) => o.values_mut().for_each(strip_whitespace),
        _ => {}
    }
}

/// SHA-256 of the canonical form: name, description and output removed,
/// keys sorted, whitespace dropped from expression strings.
pub fn config_hash(file: &ConfigFile) -> Result<String> {
    let mut v = serde_json::to_value(file)?;
    if let Value::Object(o) = &mut v {
        o.remove("name");
        o.remove("description");
        o.remove("output");
    }
    strip_whitespace(&mut v);
    let canonical = serde_json::to_string(&v)?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn matrix_entries(spec: &MatrixSpec, n: usize, scope: &Scope, what: &str) -> Result<Vec<Expression>> {
    let zero = Expression::constant(0.0);
    let mut out = vec![zero; n * n];
    match spec {
        MatrixSpec::Dense(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Shape(format!("{what} must be {n}x{n}")));
            }
            for i in 0..n {
                for j in i..n {
                    match &rows[i][j] {
                        Some(e) => out[i * n + j] = e.parse(scope)?,
                        None if i == j => return Err(Error::MissingField(format!("{what}[{}][{}]", i + 1, j + 1))),
                        None => {}
                    }
                }
            }
        }
        MatrixSpec::Sparse { diagonal, off_diagonal } => {
            if diagonal.len() != n {
                if diagonal.len() < n {
                    return Err(Error::MissingField(format!("{what} diagonal entry {}", diagonal.len() + 1)));
                }
                return Err(Error::Shape(format!("{what} diagonal has {} entries, expected {n}", diagonal.len())));
            }
            for (i, d) in diagonal.iter().enumerate() {
                out[i * n + i] = d.parse(scope)?;
            }
            for (key, e) in off_diagonal {
                let (i, j) = parse_index_pair(key, n)?;
                if i == j {
                    return Err(Error::InvalidArgument(format!("{what} key `{key}` is on the diagonal")));
                }
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                out[i * n + j] = e.parse(scope)?;
            }
        }
    }
    Ok(out)
}

fn parse_index_pair(key: &str, n: usize) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("bad index pair `{key}` (expected \"i,j\" in 1..={n})"));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 || i > n || j > n {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

fn vector_entries(v: &[ExprText], n: usize, scope: &Scope, what: &str) -> Result<Vec<Expression>> {
    if v.len() != n {
        return Err(Error::Shape(format!("{what} needs {n} entries, got {}", v.len())));
    }
    v.iter().map(|e| e.parse(scope)).collect()
}

/// Compile the expressions of a config into a submersion setup.
pub fn build_setup(file: &ConfigFile) -> Result<SubmersionSetup> {
    let (n, m) = (file.n, file.m);
    if n == 0 || m == 0 {
        return Err(Error::Shape("dimensions must be positive".into()));
    }
    if m > n {
        return Err(Error::Shape(format!("base dimension m = {m} exceeds n = {n}")));
    }
    let sx = Scope::new("x").with_dim(n).with_params(&file.params);
    let sy = Scope::new("y").with_dim(m).with_params(&file.params);
    let mode = file.derivative_mode;

    let mut domain = Domain::default();
    for d in &file.domain {
        let label = d.label.clone().unwrap_or_else(|| d.expr.clone());
        domain.push(parse_in(&d.expr, &sx)?, d.rule, label);
    }
    let g1 = MetricField::from_expressions(n, matrix_entries(&file.metric_total, n, &sx, "metric_total")?, mode, domain)?;
    let g2 = MetricField::from_expressions(
        m,
        matrix_entries(&file.metric_base, m, &sy, "metric_base")?,
        mode,
        Domain::default(),
    )?;
    let map = SmoothMap::from_expressions(n, vector_entries(&file.map, m, &sx, "map")?, mode)?;
    let mut tol = Tolerances::for_mode(mode);
    for (k, v) in &file.tolerances {
        tol.set(k, *v)?;
    }
    let mut setup = SubmersionSetup::new(g1, g2, map)?.with_tolerances(tol);
    if let Some(s) = &file.structure {
        if s.matrix.len() != n {
            return Err(Error::Shape(format!("structure matrix must have {n} rows")));
        }
        let mut phi = Vec::with_capacity(n * n);
        for (i, row) in s.matrix.iter().enumerate() {
            phi.extend(vector_entries(row, n, &sx, &format!("structure row {}", i + 1))?);
        }
        let st = match s.kind {
            StructureKind::Complex => StructureTensors::complex(n, phi)?,
            StructureKind::AlmostContact => {
                let xi = s.xi.as_ref().ok_or_else(|| Error::MissingField("structure.xi".into()))?;
                let eta = s.eta.as_ref().ok_or_else(|| Error::MissingField("structure.eta".into()))?;
                StructureTensors::almost_contact(
                    n,
                    phi,
                    vector_entries(xi, n, &sx, "structure.xi")?,
                    vector_entries(eta, n, &sx, "structure.eta")?,
                )?
            }
        };
        setup = setup.with_structure(st)?;
    }
    Ok(setup)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"{
        "n": 4, "m": 2,
        "metric_total": {"diagonal": [1, 1, 1, 1]},
        "metric_base": [["1", null], [null, "1"]],
        "map": ["x3", "x4"],
        "points": [[0, 0, 0, 0]]
    }"#;

    #[test]
    fn minimal_flat_config() {
        let c = RunConfig::from_json(FLAT).unwrap();
        assert_eq!(c.setup.r(), 2);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn m_exceeds_n() {
        let text = FLAT.replace("\"m\": 2", "\"m\": 5");
        assert!(matches!(RunConfig::from_json(&text), Err(Error::Shape(_))));
    }

    #[test]
    fn missing_diagonal_and_field() {
        let text = FLAT.replace("[\"1\", null], [null, \"1\"]", "[\"1\", null], [null, null]");
        assert!(matches!(RunConfig::from_json(&text), Err(Error::MissingField(_))));
        let text = FLAT.replace("\"map\": [\"x3\", \"x4\"],", "");
        assert_eq!(RunConfig::from_json(&text).unwrap_err(), Error::MissingField("map".into()));
    }

    #[test]
    fn syntax_error_surfaces() {
        let text = FLAT.replace("\"x3\"", "\"exp(\"");
        assert!(matches!(RunConfig::from_json(&text), Err(Error::Syntax { offset: 4, .. })));
        let text = FLAT.replace("\"x3\"", "\"x9\"");
        assert!(matches!(RunConfig::from_json(&text), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn hash_ignores_whitespace_and_tracks_semantics() {
        let a = RunConfig::from_json(FLAT).unwrap().hash;
        let spaced = FLAT.replace("\"x3\"", "\" x3 \"").replace('\n', "\n\n   ");
        assert_eq!(RunConfig::from_json(&spaced).unwrap().hash, a);
        let renamed = FLAT.replace("\"n\": 4", "\"name\": \"other\", \"n\": 4");
        assert_eq!(RunConfig::from_json(&renamed).unwrap().hash, a);
        let changed = FLAT.replace("\"x3\"", "\"x3 + 0\"");
        assert_ne!(RunConfig::from_json(&changed).unwrap().hash, a);
        let moved = FLAT.replace("[[0, 0, 0, 0]]", "[[0, 0, 0, 1]]");
        assert_ne!(RunConfig::from_json(&moved).unwrap().hash, a);
    }
}
