//! Scenario documents: a versioned JSON description of one experiment.
//!
//! Parsing is strict. Vector arity and 1/ε ∈ ℕ* are checked while
//! deserializing, so every rejection carries a line, a column and the path of
//! the offending field. A parsed [`Scenario`] serializes back with every
//! default filled in; that canonical form is what reports embed and hash.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::divisors::{Generators, ProbeOptions};
use crate::error::{Error, Result};
use crate::grid::{BoxGrid, C64};
use crate::lattice::{close_scaled, scale_to_lattice, Closure, ClosureLimits, ModeSet, WaveVector};
use crate::pipeline::{ConvergenceOptions, InstabilityParams, InstabilityVariant};
use crate::wiener::inverse_eps;

pub const SCHEMA_VERSION: u32 = 1;

thread_local! {
    static EXPECTED_DIM: Cell<Option<usize>> = const { Cell::new(None) };
}

/// Where and why a scenario document was rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// Field path such as `initial_modes[2].vector`; empty at top level.
    pub path: String,
    /// 1-based; 0 when the problem is not tied to a position.
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, column {}: ", self.line, self.column)?;
        }
        if !self.path.is_empty() && self.path != "." {
            write!(f, "{}: ", self.path)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ParseError {}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Scenario(e.to_string())
    }
}

fn parse_ratio(s: &str) -> std::result::Result<Rational64, String> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((n, d)) => {
            let n = i64::from_str(n.trim()).map_err(|e| e.to_string())?;
            let d = i64::from_str(d.trim()).map_err(|e| e.to_string())?;
            if d == 0 {
                return Err("zero denominator".into());
            }
            Rational64::new(n, d)
        }
        None => Rational64::from_integer(i64::from_str(s).map_err(|e| e.to_string())?),
    };
    Ok(parsed)
}

fn ratio_text(r: &Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RationalInput {
    Int(i64),
    Text(String),
}

impl RationalInput {
    fn resolve(self) -> std::result::Result<Rational64, String> {
        match self {
            RationalInput::Int(i) => Ok(Rational64::from_integer(i)),
            RationalInput::Text(s) => parse_ratio(&s).map_err(|e| format!("invalid rational {s:?}: {e}")),
        }
    }
}

/// A wave vector in user units; coordinates are integers or `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vector(pub Vec<Rational64>);

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for c in &self.0 {
            if c.is_integer() {
                seq.serialize_element(&c.to_integer())?;
            } else {
                seq.serialize_element(&ratio_text(c))?;
            }
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<RationalInput>::deserialize(d)?;
        let n = raw.len();
        if let Some(dim) = EXPECTED_DIM.with(Cell::get) {
            if n != dim {
                return Err(de::Error::custom(format!(
                    "expected {dim} coordinates (dimension), found {n}"
                )));
            }
        }
        raw.into_iter()
            .map(RationalInput::resolve)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Vector)
            .map_err(de::Error::custom)
    }
}

/// A semiclassical parameter with 1/ε ∈ ℕ*; written as a number or `"1/n"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eps(pub f64);

impl Serialize for Eps {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Eps {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Input {
            Number(f64),
            Text(String),
        }
        let eps = match Input::deserialize(d)? {
            Input::Number(x) => x,
            Input::Text(s) => {
                let r = parse_ratio(&s).map_err(|e| de::Error::custom(format!("invalid ε {s:?}: {e}")))?;
                *r.numer() as f64 / *r.denom() as f64
            }
        };
        inverse_eps(eps).map_err(de::Error::custom)?;
        Ok(Eps(eps))
    }
}

/// Complex number as `[re, im]`.
pub type Complex = [f64; 2];

fn c64(z: Complex) -> C64 {
    C64::new(z[0], z[1])
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    #[default]
    Torus,
    /// Periodic box [−L/2, L/2)^d with n points per axis.
    Euclid { length: f64, n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: Complex,
    },
    /// Row-major samples on the box grid.
    Grid { values: Vec<Complex> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub vector: Vector,
    /// Torus amplitude α_j.
    #[serde(default)]
    pub amplitude: Complex,
    /// Euclidean profile α_j(x).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub eps_list: Vec<Eps>,
    /// Solver step as a fraction of ε.
    pub dt_over_eps: f64,
    pub dt: Option<f64>,
    pub n: Option<usize>,
    pub profile_dt: f64,
    pub checkpoints: usize,
    pub self_check: bool,
    pub self_check_fraction: f64,
    pub max_halvings: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let o = ConvergenceOptions::default();
        SolverSettings {
            eps_list: Vec::new(),
            dt_over_eps: o.dt_over_eps,
            dt: o.dt,
            n: o.n,
            profile_dt: o.profile_dt,
            checkpoints: o.checkpoints,
            self_check: o.self_check,
            self_check_fraction: o.self_check_fraction,
            max_halvings: o.max_halvings,
        }
    }
}

impl SolverSettings {
    pub fn convergence_options(&self, jobs: usize) -> ConvergenceOptions {
        ConvergenceOptions {
            dt_over_eps: self.dt_over_eps,
            dt: self.dt,
            n: self.n,
            profile_dt: self.profile_dt,
            checkpoints: self.checkpoints,
            self_check: self.self_check,
            self_check_fraction: self.self_check_fraction,
            max_halvings: self.max_halvings,
            jobs,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureExperiment {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesExperiment {
    pub t_final: f64,
    #[serde(default = "default_profile_dt")]
    pub dt: f64,
    /// Trajectory rows (torus) or snapshots (box) every this many steps.
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_profile_dt() -> f64 {
    1e-3
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeExperiment {
    pub t_final: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VariantSpec {
    Part1,
    Part2,
    Part3 { theta: f64, t: f64 },
}

impl From<VariantSpec> for InstabilityVariant {
    fn from(v: VariantSpec) -> Self {
        match v {
            VariantSpec::Part1 => InstabilityVariant::Part1,
            VariantSpec::Part2 => InstabilityVariant::Part2,
            VariantSpec::Part3 { theta, t } => InstabilityVariant::Part3 { theta, t },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstabilityExperiment {
    pub rho: f64,
    pub delta: f64,
    pub s: f64,
    pub k: u64,
    pub variant: VariantSpec,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub cross_check: bool,
    #[serde(default = "default_dt_over_eps")]
    pub dt_over_eps: f64,
}

fn default_grid_points() -> usize {
    10_000
}

fn default_dt_over_eps() -> f64 {
    ConvergenceOptions::default().dt_over_eps
}

/// Generator coordinate: integers and `"p/q"` keep the probe exact, any
/// floating-point entry switches it to double-double arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorCoord {
    Int(i64),
    Real(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramSpec {
    pub generators: Vec<Vec<GeneratorCoord>>,
    #[serde(default = "default_beta_bound")]
    pub beta_bound: i64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_b_prime")]
    pub b_prime: f64,
}

fn default_beta_bound() -> i64 {
    ProbeOptions::default().beta_bound
}

fn default_budget() -> u64 {
    ProbeOptions::default().budget
}

fn default_b_prime() -> f64 {
    ProbeOptions::default().b_prime
}

impl GramSpec {
    pub fn generators(&self) -> Result<Generators> {
        let exact = self
            .generators
            .iter()
            .flatten()
            .all(|c| !matches!(c, GeneratorCoord::Real(_)));
        let bad = |s: &str, e: String| Error::Scenario(format!("experiment.smalldiv.gram.generators: invalid rational {s:?}: {e}"));
        if exact {
            let rows = self
                .generators
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|c| match c {
                            GeneratorCoord::Int(i) => Ok(Rational64::from_integer(*i)),
                            GeneratorCoord::Text(s) => parse_ratio(s).map_err(|e| bad(s, e)),
                            GeneratorCoord::Real(_) => unreachable!("checked above"),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Generators::Rational(rows))
        } else {
            let rows = self
                .generators
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|c| match c {
                            GeneratorCoord::Int(i) => Ok(*i as f64),
                            GeneratorCoord::Real(x) => Ok(*x),
                            GeneratorCoord::Text(s) => parse_ratio(s)
                                .map(|r| *r.numer() as f64 / *r.denom() as f64)
                                .map_err(|e| bad(s, e)),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Generators::Real(rows))
        }
    }

    pub fn options(&self) -> ProbeOptions {
        ProbeOptions {
            beta_bound: self.beta_bound,
            budget: self.budget,
            b_prime: self.b_prime,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmalldivExperiment {
    /// Exponents b at which the generalized divisor bound is fitted.
    #[serde(default = "default_b_grid")]
    pub b_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<GramSpec>,
}

fn default_b_grid() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 1.5, 2.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Closure(ClosureExperiment),
    Profiles(ProfilesExperiment),
    Converge(ConvergeExperiment),
    Instability(InstabilityExperiment),
    Smalldiv(SmalldivExperiment),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Closure(_) => "closure",
            Experiment::Profiles(_) => "profiles",
            Experiment::Converge(_) => "converge",
            Experiment::Instability(_) => "instability",
            Experiment::Smalldiv(_) => "smalldiv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub dimension: usize,
    pub sigma: u32,
    pub lambda: f64,
    #[serde(default)]
    pub domain: Domain,
    #[serde(default)]
    pub initial_modes: Vec<ModeSpec>,
    #[serde(default)]
    pub closure_limits: ClosureLimits,
    #[serde(default)]
    pub solver: SolverSettings,
    pub experiment: Experiment,
}

fn locate(path: &str, e: &serde_json::Error) -> ParseError {
    ParseError {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    }
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn semantic(path: &str, message: impl Into<String>) -> ParseError {
    ParseError {
        path: path.into(),
        line: 0,
        column: 0,
        message: message.into(),
    }
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> std::result::Result<Scenario, ParseError> {
        // The dimension is read first so that vector arity can be checked in
        // place, wherever the field appears in the document.
        let dim = serde_json::from_str::<serde_json::Value>(text)
            .map_err(|e| locate("", &e))?
            .get("dimension")
            .and_then(serde_json::Value::as_u64)
            .map(|d| d as usize);
        EXPECTED_DIM.with(|c| c.set(dim));
        let mut de = serde_json::Deserializer::from_str(text);
        let parsed: std::result::Result<Scenario, _> = serde_path_to_error::deserialize(&mut de);
        EXPECTED_DIM.with(|c| c.set(None));
        let scenario = parsed.map_err(|e| {
            let path = e.path().to_string();
            locate(&path, e.inner())
        })?;
        de.end().map_err(|e| locate("", &e))?;
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> std::result::Result<(), ParseError> {
        if self.schema != SCHEMA_VERSION {
            return Err(semantic(
                "schema",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        if self.dimension == 0 {
            return Err(semantic("dimension", "must be at least 1"));
        }
        if self.sigma == 0 {
            return Err(semantic("sigma", "must be at least 1"));
        }
        if !self.lambda.is_finite() {
            return Err(semantic("lambda", "must be finite"));
        }
        if let Domain::Euclid { length, n } = self.domain {
            if !(length > 0.0 && length.is_finite()) {
                return Err(semantic("domain.length", "must be > 0"));
            }
            if n < 2 || !n.is_power_of_two() {
                return Err(semantic("domain.n", format!("must be a power of two ≥ 2, got {n}")));
            }
        }
        let euclid = matches!(self.domain, Domain::Euclid { .. });
        for (i, m) in self.initial_modes.iter().enumerate() {
            let path = |f: &str| format!("initial_modes[{i}].{f}");
            match (&m.profile, euclid) {
                (Some(_), false) => return Err(semantic(&path("profile"), "profiles require a euclid domain")),
                (Some(p), true) => self.check_profile(p, &path("profile"))?,
                (None, _) => {}
            }
            if m.amplitude.iter().any(|x| !x.is_finite()) {
                return Err(semantic(&path("amplitude"), "must be finite"));
            }
        }
        for w in 0..self.initial_modes.len() {
            for v in w + 1..self.initial_modes.len() {
                if self.initial_modes[w].vector == self.initial_modes[v].vector {
                    return Err(semantic(&format!("initial_modes[{v}].vector"), "duplicate wave vector"));
                }
            }
        }
        let needs_modes = !matches!(self.experiment, Experiment::Instability(_));
        if needs_modes && self.initial_modes.is_empty() {
            return Err(semantic("initial_modes", "at least one mode is required"));
        }
        let s = &self.solver;
        if !(s.dt_over_eps > 0.0) || s.dt.is_some_and(|dt| !(dt > 0.0)) || !(s.profile_dt > 0.0) {
            return Err(semantic("solver", "time steps must be > 0"));
        }
        if s.checkpoints == 0 {
            return Err(semantic("solver.checkpoints", "must be at least 1"));
        }
        match &self.experiment {
            Experiment::Closure(_) => {}
            Experiment::Profiles(p) => {
                if !(p.t_final >= 0.0 && p.t_final.is_finite()) || !(p.dt > 0.0) {
                    return Err(semantic("experiment.profiles", "need t_final ≥ 0 and dt > 0"));
                }
                if p.record_stride == 0 {
                    return Err(semantic("experiment.profiles.record_stride", "must be at least 1"));
                }
                if euclid && self.initial_modes.iter().any(|m| m.profile.is_none()) {
                    return Err(semantic("initial_modes", "every mode needs a profile on a euclid domain"));
                }
            }
            Experiment::Converge(c) => {
                if euclid {
                    return Err(semantic("domain", "converge runs on the torus only"));
                }
                if !(c.t_final > 0.0 && c.t_final.is_finite()) {
                    return Err(semantic("experiment.converge.t_final", "must be > 0"));
                }
                if s.eps_list.is_empty() {
                    return Err(semantic("solver.eps_list", "converge needs at least one ε"));
                }
            }
            Experiment::Instability(_) => {}
            Experiment::Smalldiv(sd) => {
                if sd.b_grid.iter().any(|b| !b.is_finite()) {
                    return Err(semantic("experiment.smalldiv.b_grid", "must be finite"));
                }
            }
        }
        Ok(())
    }

    fn check_profile(&self, p: &ProfileSpec, path: &str) -> std::result::Result<(), ParseError> {
        let Domain::Euclid { n, .. } = self.domain else {
            return Ok(());
        };
        match p {
            ProfileSpec::Gaussian { center, width, .. } => {
                if center.len() != self.dimension {
                    return Err(semantic(
                        &format!("{path}.gaussian.center"),
                        format!("expected {} coordinates (dimension), found {}", self.dimension, center.len()),
                    ));
                }
                if !(*width > 0.0) {
                    return Err(semantic(&format!("{path}.gaussian.width"), "must be > 0"));
                }
            }
            ProfileSpec::Grid { values } => {
                let want = n.pow(self.dimension as u32);
                if values.len() != want {
                    return Err(semantic(
                        &format!("{path}.grid.values"),
                        format!("expected {want} samples (n^dimension), found {}", values.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON with every default materialized.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    fn lattice(&self) -> Result<(Vec<WaveVector>, i64)> {
        let vectors: Vec<Vec<Rational64>> = self.initial_modes.iter().map(|m| m.vector.0.clone()).collect();
        scale_to_lattice(&vectors)
    }

    /// The initial vectors as an (unclosed) mode set.
    pub fn initial_modes(&self) -> Result<ModeSet> {
        let (vectors, scale) = self.lattice()?;
        ModeSet::from_initial(self.dimension, self.sigma, vectors)?.with_scale(scale)
    }

    /// Closure of the initial vectors under the scenario's limits.
    pub fn closure(&self) -> Result<Closure> {
        let (vectors, scale) = self.lattice()?;
        close_scaled(&vectors, self.sigma, scale, self.closure_limits)
    }

    /// Torus amplitudes on `modes`; created modes start at zero.
    pub fn torus_amplitudes(&self, modes: &ModeSet) -> Result<Vec<C64>> {
        let (vectors, _) = self.lattice()?;
        let mut alpha = vec![C64::new(0.0, 0.0); modes.len()];
        for (v, m) in vectors.iter().zip(&self.initial_modes) {
            let j = modes
                .index_of(v.coords())
                .ok_or_else(|| Error::ModeSetMismatch(format!("initial vector {v} missing from mode set")))?;
            alpha[j] = c64(m.amplitude);
        }
        Ok(alpha)
    }

    pub fn box_grid(&self) -> Result<BoxGrid> {
        match self.domain {
            Domain::Euclid { length, n } => BoxGrid::new(self.dimension, n, length),
            Domain::Torus => Err(Error::Scenario("domain is not euclid".into())),
        }
    }

    /// Sampled Euclidean profiles on `modes`; created modes start at zero.
    pub fn euclid_fields(&self, modes: &ModeSet) -> Result<Vec<Vec<C64>>> {
        let grid = self.box_grid()?;
        let (vectors, _) = self.lattice()?;
        let mut fields = vec![vec![C64::new(0.0, 0.0); grid.len()]; modes.len()];
        for (v, m) in vectors.iter().zip(&self.initial_modes) {
            let j = modes
                .index_of(v.coords())
                .ok_or_else(|| Error::ModeSetMismatch(format!("initial vector {v} missing from mode set")))?;
            fields[j] = match &m.profile {
                Some(ProfileSpec::Gaussian {
                    center,
                    width,
                    amplitude,
                }) => {
                    let a = c64(*amplitude);
                    grid.sample(|x| {
                        let r2: f64 = x.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum();
                        a * (-r2 / (2.0 * width * width)).exp()
                    })
                }
                Some(ProfileSpec::Grid { values }) => values.iter().copied().map(c64).collect(),
                None => return Err(Error::Scenario(format!("mode {v} has no profile"))),
            };
        }
        Ok(fields)
    }

    pub fn eps_list(&self) -> Vec<f64> {
        self.solver.eps_list.iter().map(|e| e.0).collect()
    }

    pub fn instability_params(&self) -> Result<InstabilityParams> {
        let Experiment::Instability(x) = &self.experiment else {
            return Err(Error::Scenario("no instability block".into()));
        };
        let mut p = InstabilityParams::new(x.rho, x.delta, x.s, x.k, self.sigma, self.lambda, x.variant.into());
        p.grid_points = x.grid_points;
        p.cross_check = x.cross_check;
        p.dt_over_eps = x.dt_over_eps;
        Ok(p)
    }
}
