//! Run configuration: JSON parsing with exhaustive validation.
//!
//! Parsing walks the raw JSON tree and records every problem it finds, so a
//! bad file is reported in one pass. A config that parses is fully
//! validated and can be handed to [`crate::run`].

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use gibbs_geom::estimators::{ExperimentKind, TestFunction};
use gibbs_geom::functionals::{
    AnyFunctional, ComponentReciprocal, Count, Density, KnnLength, Quantization, Rsa,
    VoronoiLength,
};
use gibbs_geom::potentials::{
    AnyPotential, AreaInteraction, HardCore, NoInteraction, PairPotential, Strauss,
    TruncatedPoisson,
};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const POTENTIAL_TYPES: &[&str] = &[
    "poisson",
    "hardcore",
    "strauss",
    "area",
    "pair",
    "truncated_poisson",
];

pub const FUNCTIONAL_TYPES: &[&str] = &[
    "count",
    "rsa",
    "knn_length",
    "knn_components",
    "percolation_components",
    "voronoi_length",
    "quantization",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sample,
    Estimate,
    Experiment,
    Diagnose,
}

impl Mode {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sample" => Mode::Sample,
            "estimate" => Mode::Estimate,
            "experiment" => Mode::Experiment,
            "diagnose" => Mode::Diagnose,
            _ => return None,
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Sample => "sample",
            Mode::Estimate => "estimate",
            Mode::Experiment => "experiment",
            Mode::Diagnose => "diagnose",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    Poisson,
    Hardcore {
        radius: f64,
    },
    Strauss {
        beta: f64,
        r0: f64,
    },
    Area {
        gamma: f64,
        radius: f64,
    },
    /// `φ(s) = A·exp(−a·s)` beyond the hard core `r0`.
    Pair {
        #[serde(rename = "A")]
        amplitude: f64,
        #[serde(rename = "a")]
        rate: f64,
        r0: f64,
    },
    TruncatedPoisson {
        radius: f64,
        k: usize,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> gibbs_geom::Result<AnyPotential<f64>> {
        Ok(match *self {
            PotentialSpec::Poisson => AnyPotential::Poisson(NoInteraction),
            PotentialSpec::Hardcore { radius } => AnyPotential::HardCore(HardCore::new(radius)?),
            PotentialSpec::Strauss { beta, r0 } => AnyPotential::Strauss(Strauss::new(beta, r0)?),
            PotentialSpec::Area { gamma, radius } => {
                AnyPotential::Area(AreaInteraction::new(gamma, radius)?)
            }
            PotentialSpec::Pair {
                amplitude,
                rate,
                r0,
            } => AnyPotential::Pair(PairPotential::exponential(amplitude, rate, r0)?),
            PotentialSpec::TruncatedPoisson { radius, k } => {
                AnyPotential::TruncatedPoisson(TruncatedPoisson::new(radius, k)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionalSpec {
    Count,
    Rsa,
    KnnLength { k: usize },
    KnnComponents { k: usize },
    PercolationComponents { radius: f64 },
    VoronoiLength,
    Quantization { r: f64, h: Density, floor: f64 },
}

impl FunctionalSpec {
    pub fn build(&self) -> gibbs_geom::Result<AnyFunctional<f64>> {
        Ok(match self {
            FunctionalSpec::Count => AnyFunctional::Count(Count),
            FunctionalSpec::Rsa => AnyFunctional::Rsa(Rsa),
            FunctionalSpec::KnnLength { k } => AnyFunctional::KnnLength(KnnLength::new(*k)?),
            FunctionalSpec::KnnComponents { k } => {
                AnyFunctional::Components(ComponentReciprocal::knn(*k)?)
            }
            FunctionalSpec::PercolationComponents { radius } => {
                AnyFunctional::Components(ComponentReciprocal::percolation(*radius)?)
            }
            FunctionalSpec::VoronoiLength => AnyFunctional::VoronoiLength(VoronoiLength),
            FunctionalSpec::Quantization { r, h, floor } => {
                let mut q = Quantization::new(*r)?.with_density(h.clone(), 1.0)?;
                if *floor > 0.0 {
                    q = q.with_floor(*floor)?;
                }
                AnyFunctional::Quantization(q)
            }
        })
    }

    /// Short label used in file names and reports, e.g. `knn_length_k1`.
    pub fn label(&self) -> String {
        match self {
            FunctionalSpec::Count => "count".into(),
            FunctionalSpec::Rsa => "rsa".into(),
            FunctionalSpec::KnnLength { k } => format!("knn_length_k{k}"),
            FunctionalSpec::KnnComponents { k } => format!("knn_components_k{k}"),
            FunctionalSpec::PercolationComponents { radius } => {
                format!("percolation_components_r{radius}")
            }
            FunctionalSpec::VoronoiLength => "voronoi_length".into(),
            FunctionalSpec::Quantization { r, .. } => format!("quantization_r{r}"),
        }
    }

    pub fn density(&self) -> Option<&Density> {
        match self {
            FunctionalSpec::Quantization { h, .. } => Some(h),
            _ => None,
        }
    }
}

/// Boundary margin of the thermodynamic mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginSpec {
    /// Read off a pilot fit of the clan-diameter tail.
    Auto { p_tail: f64 },
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplerSpec {
    pub t0: f64,
    pub t_max: f64,
    /// `None` samples the finite-volume Gibbs law on the window itself.
    pub margin: Option<MarginSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    E,
    V,
    QuantizationBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSpec {
    pub quantities: Vec<Quantity>,
    /// Defaults to `max(4·interaction scale, 3)`.
    pub probe_half_width: Option<f64>,
    /// Defaults to the run's `reps`.
    pub reps: Option<usize>,
    /// Defaults to `max(6·interaction scale, 4)`.
    pub r_max: Option<f64>,
    pub shells: usize,
    pub cutoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub bootstrap: usize,
    /// Estimate the missing `E`/`V` targets before the experiment.
    pub estimate_targets: bool,
    pub e: Option<f64>,
    pub v: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnoseSpec {
    /// Empty-ball radii; default eight multiples of a quarter of the mean spacing.
    pub radii: Option<Vec<f64>>,
    pub cells_per_side: usize,
    /// Points probed for stabilization per sample.
    pub stabilization_points: usize,
    /// Radius grid step; default a tenth of the larger of the interaction
    /// scale and the mean spacing.
    pub stabilization_step: Option<f64>,
    /// Default: ten such scales, capped at a quarter of the window side.
    pub stabilization_max: Option<f64>,
    /// Rejection-oracle samples for the count comparison; zero skips it.
    pub oracle_samples: usize,
    /// Proposals per oracle sample before giving up.
    pub oracle_budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub dimension: usize,
    pub intensity: f64,
    pub potential: PotentialSpec,
    pub functionals: Vec<FunctionalSpec>,
    pub lambdas: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// Worker count; excluded from the hash since results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
    pub sampler: SamplerSpec,
    pub test_functions: Vec<TestFunction>,
    pub estimate: EstimateSpec,
    pub experiment: ExperimentSpec,
    pub diagnose: DiagnoseSpec,
    #[serde(skip)]
    pub output_dir: Option<String>,
}

impl RunConfig {
    /// Hex SHA-256 of the canonical JSON form of the validated config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Every validation error found in a config.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("{}: {e}", path.display())]))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigErrors> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ConfigErrors(vec![format!("invalid JSON: {e}")]))?;
    let mut errs = Vec::new();
    let cfg = parse_value(&value, &mut errs);
    match cfg {
        Some(c) if errs.is_empty() => Ok(c),
        _ => Err(ConfigErrors(errs)),
    }
}

/// Typed access to one JSON object, recording errors under a dotted path
/// and rejecting keys nobody asked for.
struct Obj<'a> {
    map: Option<&'a Map<String, Value>>,
    path: String,
    used: BTreeSet<&'static str>,
}

impl<'a> Obj<'a> {
    fn new(v: Option<&'a Value>, path: &str, errs: &mut Vec<String>) -> Self {
        let map = match v {
            None | Some(Value::Null) => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                errs.push(format!("{path}: expected an object"));
                None
            }
        };
        Self {
            map,
            path: path.into(),
            used: BTreeSet::new(),
        }
    }

    fn field(&self, name: &str) -> String {
        if self.path.is_empty() {
            name.into()
        } else {
            format!("{}.{name}", self.path)
        }
    }

    fn get(&mut self, name: &'static str) -> Option<&'a Value> {
        self.used.insert(name);
        self.map.and_then(|m| m.get(name)).filter(|v| !v.is_null())
    }

    fn f64(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<f64> {
        let v = self.get(name)?;
        match v.as_f64().filter(|x| x.is_finite()) {
            Some(x) => Some(x),
            None => {
                errs.push(format!("{}: expected a finite number", self.field(name)));
                None
            }
        }
    }

    fn req_f64(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<f64> {
        if self.get(name).is_none() {
            errs.push(format!("{}: required", self.field(name)));
            return None;
        }
        self.f64(name, errs)
    }

    fn positive(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<f64> {
        let x = self.req_f64(name, errs)?;
        if x > 0.0 {
            Some(x)
        } else {
            errs.push(format!("{}: must be positive, got {x}", self.field(name)));
            None
        }
    }

    fn opt_positive(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<f64> {
        let x = self.f64(name, errs)?;
        if x > 0.0 {
            Some(x)
        } else {
            errs.push(format!("{}: must be positive, got {x}", self.field(name)));
            None
        }
    }

    fn u64(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<u64> {
        let v = self.get(name)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                errs.push(format!(
                    "{}: expected a non-negative integer",
                    self.field(name)
                ));
                None
            }
        }
    }

    fn count(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<usize> {
        let x = self.u64(name, errs)?;
        if x == 0 {
            errs.push(format!("{}: must be positive", self.field(name)));
            return None;
        }
        Some(x as usize)
    }

    fn bool(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<bool> {
        let v = self.get(name)?;
        match v.as_bool() {
            Some(b) => Some(b),
            None => {
                errs.push(format!("{}: expected true or false", self.field(name)));
                None
            }
        }
    }

    fn str(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<&'a str> {
        let v = self.get(name)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                errs.push(format!("{}: expected a string", self.field(name)));
                None
            }
        }
    }

    fn positive_list(&mut self, name: &'static str, errs: &mut Vec<String>) -> Option<Vec<f64>> {
        let v = self.get(name)?;
        let Some(arr) = v.as_array() else {
            errs.push(format!("{}: expected an array of numbers", self.field(name)));
            return None;
        };
        let mut out = Vec::new();
        let mut ok = true;
        for (i, x) in arr.iter().enumerate() {
            match x.as_f64().filter(|x| x.is_finite() && *x > 0.0) {
                Some(x) => out.push(x),
                None => {
                    errs.push(format!("{}[{i}]: must be a positive number", self.field(name)));
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    /// Reports keys that were never read.
    fn finish(self, errs: &mut Vec<String>) {
        if let Some(m) = self.map {
            for k in m.keys() {
                if !self.used.contains(k.as_str()) {
                    let expected: Vec<&str> = self.used.iter().copied().collect();
                    errs.push(format!(
                        "{}: unknown field (expected one of: {})",
                        self.field(k),
                        expected.join(", ")
                    ));
                }
            }
        }
    }
}

fn parse_value(value: &Value, errs: &mut Vec<String>) -> Option<RunConfig> {
    if !value.is_object() {
        errs.push("configuration must be a JSON object".into());
        return None;
    }
    let mut root = Obj::new(Some(value), "", errs);

    let mode = root.str("mode", errs).and_then(|s| {
        let m = Mode::parse(s);
        if m.is_none() {
            errs.push(format!(
                "mode: unknown mode {s:?} (supported: sample, estimate, experiment, diagnose)"
            ));
        }
        m
    });

    let dimension = match root.u64("dimension", errs) {
        Some(d @ 1..=3) => Some(d as usize),
        Some(d) => {
            errs.push(format!("dimension: must be 1, 2 or 3, got {d}"));
            None
        }
        None => {
            if root.map.is_some_and(|m| !m.contains_key("dimension")) {
                errs.push("dimension: required".into());
            }
            None
        }
    };
    let intensity = root.positive("intensity", errs);

    let potential = parse_potential(root.get("potential"), errs);

    let mut functionals = Vec::new();
    let single = root.get("functional");
    let params = root.get("parameters");
    let list = root.get("functionals");
    match (single, list) {
        (Some(_), Some(_)) => errs.push("functional: give either functional or functionals".into()),
        (Some(f), None) => {
            if let Some(s) = parse_functional(f, params, "functional", dimension, errs) {
                functionals.push(s);
            }
        }
        (None, Some(Value::Array(arr))) if !arr.is_empty() => {
            for (i, f) in arr.iter().enumerate() {
                if let Some(s) = parse_functional(f, None, &format!("functionals[{i}]"), dimension, errs) {
                    functionals.push(s);
                }
            }
        }
        (None, Some(_)) => errs.push("functionals: expected a non-empty array".into()),
        (None, None) => functionals.push(FunctionalSpec::Count),
    }
    if params.is_some() && !matches!(single, Some(Value::String(_))) {
        errs.push("parameters: only allowed next to a functional given by name".into());
    }

    let lambdas = match (root.get("lambda"), root.get("lambdas")) {
        (Some(_), Some(_)) => {
            errs.push("lambda: give either lambda or lambdas".into());
            None
        }
        (Some(_), None) => root.opt_positive("lambda", errs).map(|l| vec![l]),
        (None, Some(_)) => match root.positive_list("lambdas", errs) {
            Some(l) if l.is_empty() => {
                errs.push("lambdas: must not be empty".into());
                None
            }
            Some(l) if l.windows(2).any(|w| w[0] >= w[1]) => {
                errs.push("lambdas: must be strictly increasing".into());
                None
            }
            other => other,
        },
        (None, None) => {
            errs.push("lambda: required (or lambdas)".into());
            None
        }
    };
    let reps = root.count("reps", errs).unwrap_or(100);
    let seed = root.u64("seed", errs).unwrap_or(0);
    let threads = root.count("threads", errs);
    let sampler = parse_sampler(root.get("sampler"), errs);

    let mut test_functions = Vec::new();
    match root.get("test_functions") {
        None => test_functions.push(TestFunction::one()),
        Some(Value::Array(arr)) if !arr.is_empty() => {
            for (i, v) in arr.iter().enumerate() {
                match serde_json::from_value::<TestFunction>(v.clone()) {
                    Ok(t) => {
                        if let Some(d) = dimension {
                            if let Err(e) = t.validate(d) {
                                errs.push(format!("test_functions[{i}]: {e}"));
                            }
                        }
                        test_functions.push(t);
                    }
                    Err(e) => errs.push(format!("test_functions[{i}]: {e}")),
                }
            }
        }
        Some(_) => errs.push("test_functions: expected a non-empty array".into()),
    }

    let estimate = parse_estimate(root.get("estimate"), errs);
    let experiment = parse_experiment(root.get("experiment"), errs);
    let diagnose = parse_diagnose(root.get("diagnose"), errs);
    let output_dir = root.str("output_dir", errs).map(String::from);
    root.finish(errs);

    if let (Some(p), Some(_)) = (&potential, intensity) {
        if let Err(e) = p.build() {
            errs.push(format!("potential: {e}"));
        }
    }
    for (i, f) in functionals.iter().enumerate() {
        if let Err(e) = f.build() {
            errs.push(format!("functionals[{i}]: {e}"));
        }
    }

    Some(RunConfig {
        mode,
        dimension: dimension?,
        intensity: intensity?,
        potential: potential?,
        functionals,
        lambdas: lambdas?,
        reps,
        seed,
        threads,
        sampler: sampler?,
        test_functions,
        estimate: estimate?,
        experiment: experiment?,
        diagnose: diagnose?,
        output_dir,
    })
}

fn parse_potential(v: Option<&Value>, errs: &mut Vec<String>) -> Option<PotentialSpec> {
    let Some(v) = v else {
        return Some(PotentialSpec::Poisson);
    };
    let mut o = Obj::new(Some(v), "potential", errs);
    o.map?;
    let ty = match o.str("type", errs) {
        Some(t) => t,
        None => {
            if o.get("type").is_none() {
                errs.push(format!(
                    "potential.type: required (supported: {})",
                    POTENTIAL_TYPES.join(", ")
                ));
            }
            return None;
        }
    };
    let spec = match ty {
        "poisson" | "none" => Some(PotentialSpec::Poisson),
        "hardcore" | "hard_core" => o.positive("radius", errs).map(|radius| PotentialSpec::Hardcore { radius }),
        "strauss" => {
            let beta = o.req_f64("beta", errs);
            if beta.is_some_and(|b| b < 0.0) {
                errs.push("potential.beta: must be non-negative".into());
            }
            let r0 = o.positive("r0", errs);
            Some(PotentialSpec::Strauss { beta: beta.filter(|b| *b >= 0.0)?, r0: r0? })
        }
        "area" => {
            let gamma = o.req_f64("gamma", errs);
            if gamma.is_some_and(|g| g < 0.0) {
                errs.push("potential.gamma: must be non-negative (attractive area interaction is not supported)".into());
            }
            let radius = o.positive("radius", errs);
            Some(PotentialSpec::Area { gamma: gamma.filter(|g| *g >= 0.0)?, radius: radius? })
        }
        "pair" => {
            let amplitude = o.req_f64("A", errs);
            if amplitude.is_some_and(|a| a < 0.0) {
                errs.push("potential.A: must be non-negative".into());
            }
            let rate = o.positive("a", errs);
            let r0 = o.positive("r0", errs);
            Some(PotentialSpec::Pair {
                amplitude: amplitude.filter(|a| *a >= 0.0)?,
                rate: rate?,
                r0: r0?,
            })
        }
        "truncated_poisson" => {
            let radius = o.positive("radius", errs);
            let k = o.count("k", errs);
            if o.get("k").is_none() {
                errs.push("potential.k: required".into());
            }
            Some(PotentialSpec::TruncatedPoisson { radius: radius?, k: k? })
        }
        other => {
            errs.push(format!(
                "potential.type: unknown potential {other:?} (supported: {})",
                POTENTIAL_TYPES.join(", ")
            ));
            return None;
        }
    };
    o.finish(errs);
    spec
}

fn parse_functional(
    v: &Value,
    params: Option<&Value>,
    path: &str,
    dim: Option<usize>,
    errs: &mut Vec<String>,
) -> Option<FunctionalSpec> {
    let (name, mut o, ppath) = match v {
        Value::String(s) => (s.as_str(), Obj::new(params, "parameters", errs), "parameters".to_string()),
        Value::Object(m) => {
            let Some(t) = m.get("type").and_then(Value::as_str) else {
                errs.push(format!(
                    "{path}.type: required (supported: {})",
                    FUNCTIONAL_TYPES.join(", ")
                ));
                return None;
            };
            let mut o = Obj::new(Some(v), path, errs);
            o.get("type");
            (t, o, path.to_string())
        }
        _ => {
            errs.push(format!(
                "{path}: expected a functional name or object (supported: {})",
                FUNCTIONAL_TYPES.join(", ")
            ));
            return None;
        }
    };
    let spec = match name {
        "count" => Some(FunctionalSpec::Count),
        "rsa" => Some(FunctionalSpec::Rsa),
        "knn_length" => Some(FunctionalSpec::KnnLength {
            k: o.count("k", errs).unwrap_or(1),
        }),
        "knn_components" => Some(FunctionalSpec::KnnComponents {
            k: o.count("k", errs).unwrap_or(1),
        }),
        "percolation_components" => o
            .f64("radius", errs)
            .or(Some(1.0))
            .filter(|r| {
                let ok = *r > 0.0;
                if !ok {
                    errs.push(format!("{ppath}.radius: must be positive"));
                }
                ok
            })
            .map(|radius| FunctionalSpec::PercolationComponents { radius }),
        "voronoi_length" => {
            if dim.is_some_and(|d| d != 2) {
                errs.push(format!("{path}: voronoi_length is only defined for dimension 2"));
            }
            Some(FunctionalSpec::VoronoiLength)
        }
        "quantization" => {
            let r = o.positive("r", errs);
            let h = match o.get("h") {
                None => Some(Density::Uniform),
                Some(hv) => match serde_json::from_value::<Density>(hv.clone()) {
                    Ok(h) => {
                        if let Some(d) = dim {
                            if let Err(e) = h.validate(d) {
                                errs.push(format!("{ppath}.h: {e}"));
                            }
                        }
                        Some(h)
                    }
                    Err(e) => {
                        errs.push(format!("{ppath}.h: {e}"));
                        None
                    }
                },
            };
            let floor = o.f64("floor", errs).unwrap_or(0.0);
            if floor < 0.0 {
                errs.push(format!("{ppath}.floor: must be non-negative"));
            }
            Some(FunctionalSpec::Quantization { r: r?, h: h?, floor })
        }
        other => {
            errs.push(format!(
                "{path}: unknown functional {other:?} (supported: {})",
                FUNCTIONAL_TYPES.join(", ")
            ));
            return None;
        }
    };
    o.finish(errs);
    spec
}

fn parse_sampler(v: Option<&Value>, errs: &mut Vec<String>) -> Option<SamplerSpec> {
    let mut o = Obj::new(v, "sampler", errs);
    let t0 = o.opt_positive("t0", errs).unwrap_or(5.0);
    let t_max = o.opt_positive("t_max", errs).unwrap_or(640.0);
    if t_max < t0 {
        errs.push("sampler.t_max: must be at least t0".into());
    }
    let mode = o.str("mode", errs).unwrap_or("thermodynamic");
    let p_tail = o.f64("p_tail", errs).unwrap_or(1e-4);
    if !(p_tail > 0.0 && p_tail < 1.0) {
        errs.push("sampler.p_tail: must lie in (0, 1)".into());
    }
    let margin_v = o.get("margin");
    let margin = match mode {
        "finite_volume" => {
            if margin_v.is_some() {
                errs.push("sampler.margin: not used in finite_volume mode".into());
            }
            None
        }
        "thermodynamic" => match margin_v {
            None => Some(MarginSpec::Auto { p_tail }),
            Some(Value::String(s)) if s == "auto" => Some(MarginSpec::Auto { p_tail }),
            Some(m) => match m.as_f64().filter(|m| *m >= 0.0 && m.is_finite()) {
                Some(m) => Some(MarginSpec::Fixed(m)),
                None => {
                    errs.push("sampler.margin: expected \"auto\" or a non-negative number".into());
                    None
                }
            },
        },
        other => {
            errs.push(format!(
                "sampler.mode: unknown mode {other:?} (supported: thermodynamic, finite_volume)"
            ));
            None
        }
    };
    o.finish(errs);
    Some(SamplerSpec { t0, t_max, margin })
}

fn parse_estimate(v: Option<&Value>, errs: &mut Vec<String>) -> Option<EstimateSpec> {
    let mut o = Obj::new(v, "estimate", errs);
    let mut quantities = Vec::new();
    match o.get("quantities") {
        None => quantities = vec![Quantity::E, Quantity::V],
        Some(Value::Array(arr)) => {
            for (i, q) in arr.iter().enumerate() {
                match q.as_str() {
                    Some("e") => quantities.push(Quantity::E),
                    Some("v") => quantities.push(Quantity::V),
                    Some("quantization_bound") => quantities.push(Quantity::QuantizationBound),
                    _ => errs.push(format!(
                        "estimate.quantities[{i}]: expected one of e, v, quantization_bound"
                    )),
                }
            }
            quantities.sort();
            quantities.dedup();
        }
        Some(_) => errs.push("estimate.quantities: expected an array".into()),
    }
    let spec = EstimateSpec {
        quantities,
        probe_half_width: o.opt_positive("probe_half_width", errs),
        reps: o.count("reps", errs),
        r_max: o.opt_positive("r_max", errs),
        shells: o.count("shells", errs).unwrap_or(20),
        cutoff: o.opt_positive("cutoff", errs),
    };
    o.finish(errs);
    Some(spec)
}

fn parse_experiment(v: Option<&Value>, errs: &mut Vec<String>) -> Option<ExperimentSpec> {
    let mut o = Obj::new(v, "experiment", errs);
    let kind = match o.str("kind", errs).unwrap_or("wlln") {
        "wlln" => Some(ExperimentKind::Wlln),
        "variance" => Some(ExperimentKind::Variance),
        "clt" => Some(ExperimentKind::Clt),
        other => {
            errs.push(format!(
                "experiment.kind: unknown kind {other:?} (supported: wlln, variance, clt)"
            ));
            None
        }
    };
    let bootstrap = o.u64("bootstrap", errs).unwrap_or(200) as usize;
    let estimate_targets = o.bool("estimate_targets", errs).unwrap_or(false);
    let e = o.f64("e", errs);
    let v = o.f64("v", errs);
    o.finish(errs);
    Some(ExperimentSpec {
        kind: kind?,
        bootstrap,
        estimate_targets,
        e,
        v,
    })
}

fn parse_diagnose(v: Option<&Value>, errs: &mut Vec<String>) -> Option<DiagnoseSpec> {
    let mut o = Obj::new(v, "diagnose", errs);
    let spec = DiagnoseSpec {
        radii: o.positive_list("radii", errs),
        cells_per_side: o.count("cells_per_side", errs).unwrap_or(4),
        stabilization_points: o.u64("stabilization_points", errs).unwrap_or(20) as usize,
        stabilization_step: o.opt_positive("stabilization_step", errs),
        stabilization_max: o.opt_positive("stabilization_max", errs),
        oracle_samples: o.u64("oracle_samples", errs).unwrap_or(0) as usize,
        oracle_budget: o
            .u64("oracle_budget", errs)
            .unwrap_or(gibbs_geom::sampler::REJECTION_MAX_PROPOSALS),
    };
    o.finish(errs);
    Some(spec)
}
