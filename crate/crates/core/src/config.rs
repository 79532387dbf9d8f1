//! Experiment and checker-suite configuration.
//!
//! Configs are TOML documents. A document with a `suite` key is a checker
//! suite; anything else is an experiment (optionally with a `[sweep]` table).
//! Every validation error carries the 1-based line of the offending key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::checks::CHECKER_IDS;
use crate::ea::FirstHit;
use crate::error::{Error, Result};

/// How a real λ target is turned into an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    Floor,
    Ceil,
    Nearest,
}

impl Rounding {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Rounding::Floor => x.floor(),
            Rounding::Ceil => x.ceil(),
            Rounding::Nearest => x.round(),
        }
    }
}

impl FromStr for Rounding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "floor" => Ok(Rounding::Floor),
            "ceil" => Ok(Rounding::Ceil),
            "nearest" => Ok(Rounding::Nearest),
            other => Err(format!("unknown rounding mode `{other}` (floor, ceil, nearest)")),
        }
    }
}

/// λ as an explicit integer or as `ratio · e · μ` with explicit rounding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaRule {
    Explicit(usize),
    Ratio { ratio: f64, rounding: Rounding },
}

impl LambdaRule {
    pub fn resolve(&self, mu: usize) -> usize {
        match *self {
            LambdaRule::Explicit(l) => l,
            LambdaRule::Ratio { ratio, rounding } => {
                rounding.apply(ratio * std::f64::consts::E * mu as f64) as usize
            }
        }
    }
}

impl fmt::Display for LambdaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaRule::Explicit(l) => write!(f, "{l}"),
            LambdaRule::Ratio { ratio, rounding } => {
                let mode = match rounding {
                    Rounding::Floor => "floor",
                    Rounding::Ceil => "ceil",
                    Rounding::Nearest => "nearest",
                };
                write!(f, "ratio {ratio} {mode}")
            }
        }
    }
}

impl FromStr for LambdaRule {
    type Err = String;

    /// Accepts `"54"` or `"ratio 0.8 floor"`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        match parts.as_slice() {
            [l] => l
                .parse()
                .map(LambdaRule::Explicit)
                .map_err(|_| format!("invalid lambda `{s}`")),
            ["ratio", r, mode] => {
                let ratio: f64 = r.parse().map_err(|_| format!("invalid ratio `{r}`"))?;
                if !(ratio > 0.0 && ratio.is_finite()) {
                    return Err(format!("ratio must be positive, got {ratio}"));
                }
                Ok(LambdaRule::Ratio {
                    ratio,
                    rounding: mode.parse()?,
                })
            }
            _ => Err(format!(
                "invalid lambda rule `{s}` (expected an integer or `ratio <r> <floor|ceil|nearest>`)"
            )),
        }
    }
}

impl Serialize for LambdaRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaRule::Explicit(l) => s.serialize_u64(*l as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// Generation budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// `100 · n · ln n · max(1, eμ/λ)`.
    Default,
    Generations(u64),
    /// A multiple of `n ln n`.
    NLogN(f64),
}

impl Budget {
    pub fn generations(&self, n: usize, mu: usize, lambda: usize) -> u64 {
        let nf = n as f64;
        let g = match *self {
            Budget::Generations(g) => return g,
            Budget::NLogN(k) => k * nf * nf.ln(),
            Budget::Default => {
                let slack = (std::f64::consts::E * mu as f64 / lambda as f64).max(1.0);
                100.0 * nf * nf.ln() * slack
            }
        };
        // n ln n vanishes at n = 1; one generation is always allowed.
        (g.ceil() as u64).max(1)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Default => write!(f, "default"),
            Budget::Generations(g) => write!(f, "{g}"),
            Budget::NLogN(k) => write!(f, "{k} nlogn"),
        }
    }
}

impl FromStr for Budget {
    type Err = String;

    /// Accepts `"default"`, `"5000"` or `"50 nlogn"`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        match parts.as_slice() {
            ["default"] => Ok(Budget::Default),
            [g] => g
                .parse()
                .map(Budget::Generations)
                .map_err(|_| format!("invalid budget `{s}`")),
            [k, "nlogn"] => {
                let k: f64 = k.parse().map_err(|_| format!("invalid budget multiple `{k}`"))?;
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(format!("budget multiple must be non-negative, got {k}"));
                }
                Ok(Budget::NLogN(k))
            }
            _ => Err(format!(
                "invalid budget `{s}` (expected an integer, `<k> nlogn` or `default`)"
            )),
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Budget::Generations(g) => s.serialize_u64(*g),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tracker {
    G,
    H,
    Levels,
    PhaseProcess,
    NEvents,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (csv, json)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Grid for a threshold sweep: every (μ, ratio) pair becomes one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub mu_grid: Vec<usize>,
    pub ratio_grid: Vec<f64>,
    pub rounding: Rounding,
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub mu: usize,
    pub lambda: LambdaRule,
    pub seed: u64,
    pub replicates: usize,
    pub budget: Budget,
    pub trackers: BTreeSet<Tracker>,
    pub first_hit: FirstHit,
    /// Gap parameter of the exponential potential.
    pub epsilon: f64,
    /// Exponent of the top region `n^c` used by the event detectors.
    pub c: f64,
    /// Worker threads; `None` means all available cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub output: OutputConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    /// A config with defaults for everything except `n`, `μ`, `λ`.
    pub fn new(n: usize, mu: usize, lambda: LambdaRule) -> Self {
        Self {
            n,
            mu,
            lambda,
            seed: 0,
            replicates: 1,
            budget: Budget::Default,
            trackers: BTreeSet::new(),
            first_hit: FirstHit::Creation,
            epsilon: 0.2,
            c: 0.25,
            jobs: None,
            output: OutputConfig::default(),
            sweep: None,
        }
    }

    pub fn lambda(&self) -> usize {
        self.lambda.resolve(self.mu)
    }

    pub fn budget_generations(&self) -> u64 {
        self.budget.generations(self.n, self.mu, self.lambda())
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trackers<I: IntoIterator<Item = Tracker>>(mut self, trackers: I) -> Self {
        self.trackers = trackers.into_iter().collect();
        self
    }

    /// Checks the invariants that do not depend on source positions.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.mu == 0 {
            return bad("mu must be positive".into());
        }
        let lambda = self.lambda();
        if lambda < self.mu {
            return Err(Error::LambdaBelowMu { mu: self.mu, lambda });
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.c > 0.0 && self.c < 0.5) {
            return bad(format!("c must lie in (0, 1/2), got {}", self.c));
        }
        Ok(())
    }

    /// The resolved config as TOML, for output headers.
    pub fn to_toml(&self) -> String {
        let mut v = toml::Table::try_from(self).expect("config serializes to a table");
        v.insert("lambda_resolved".into(), (self.lambda() as i64).into());
        v.insert(
            "budget_generations".into(),
            (self.budget_generations() as i64).into(),
        );
        toml::to_string(&v).expect("table serializes")
    }
}

/// Checker identifiers plus tolerance and per-checker sample budgets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckerSuiteConfig {
    pub suite: Vec<String>,
    pub tolerance_sigma: f64,
    pub seed: u64,
    pub samples: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl CheckerSuiteConfig {
    pub fn new<I, S>(suite: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let suite: Vec<String> = suite.into_iter().map(Into::into).collect();
        for id in &suite {
            if !CHECKER_IDS.contains(&id.as_str()) {
                return Err(Error::UnknownChecker(id.clone()));
            }
        }
        Ok(Self {
            suite,
            tolerance_sigma: 3.0,
            seed: 0,
            samples: BTreeMap::new(),
            jobs: None,
        })
    }

    /// The sample budget for `id`, or `default` if none was configured.
    pub fn samples_for(&self, id: &str, default: u64) -> u64 {
        self.samples.get(id).copied().unwrap_or(default)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("suite config serializes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParsedConfig {
    Experiment(ExperimentConfig),
    Checks(CheckerSuiteConfig),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IntOrText {
    Int(i64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    format: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    mu_grid: Spanned<Vec<i64>>,
    ratio_grid: Spanned<Vec<f64>>,
    rounding: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    n: Spanned<i64>,
    mu: Spanned<i64>,
    lambda: Spanned<IntOrText>,
    seed: Option<Spanned<i64>>,
    replicates: Option<Spanned<i64>>,
    budget: Option<Spanned<IntOrText>>,
    trackers: Option<Spanned<Vec<Tracker>>>,
    first_hit: Option<FirstHit>,
    epsilon: Option<Spanned<f64>>,
    c: Option<Spanned<f64>>,
    jobs: Option<Spanned<i64>>,
    output: Option<RawOutput>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    suite: Spanned<Vec<Spanned<String>>>,
    tolerance_sigma: Option<Spanned<f64>>,
    seed: Option<Spanned<i64>>,
    samples: Option<BTreeMap<Spanned<String>, Spanned<i64>>>,
    jobs: Option<Spanned<i64>>,
}

/// Maps byte offsets to 1-based line numbers.
struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn line(&self, offset: usize) -> usize {
        let end = offset.min(self.0.len());
        self.0.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T> {
        Err(Error::Config {
            line: self.line(span.start),
            message: message.into(),
        })
    }

    fn positive(&self, v: &Spanned<i64>, field: &str) -> Result<usize> {
        if *v.get_ref() <= 0 {
            return self.err(v.span(), format!("{field} must be positive, got {}", v.get_ref()));
        }
        Ok(*v.get_ref() as usize)
    }

    fn seed(&self, v: &Option<Spanned<i64>>) -> Result<u64> {
        match v {
            None => Ok(0),
            Some(s) if *s.get_ref() < 0 => self.err(s.span(), "seed must be non-negative"),
            Some(s) => Ok(*s.get_ref() as u64),
        }
    }
}

fn toml_error(lines: &Lines<'_>, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| lines.line(s.start)).unwrap_or(1);
    Error::Config {
        line,
        message: e.message().to_string(),
    }
}

/// Parses and validates a config document.
pub fn parse_config(source: &str) -> Result<ParsedConfig> {
    let lines = Lines(source);
    let table: toml::Table = toml::from_str(source).map_err(|e| toml_error(&lines, e))?;
    if table.contains_key("suite") {
        let raw: RawSuite = toml::from_str(source).map_err(|e| toml_error(&lines, e))?;
        parse_suite(&lines, raw).map(ParsedConfig::Checks)
    } else {
        let raw: RawExperiment = toml::from_str(source).map_err(|e| toml_error(&lines, e))?;
        parse_experiment(&lines, raw).map(ParsedConfig::Experiment)
    }
}

/// Parses a document that must be an experiment config.
pub fn parse_experiment_config(source: &str) -> Result<ExperimentConfig> {
    match parse_config(source)? {
        ParsedConfig::Experiment(c) => Ok(c),
        ParsedConfig::Checks(_) => Err(Error::Config {
            line: 1,
            message: "expected an experiment config, found a checker suite".into(),
        }),
    }
}

fn parse_experiment(lines: &Lines<'_>, raw: RawExperiment) -> Result<ExperimentConfig> {
    let n = lines.positive(&raw.n, "n")?;
    let mu = lines.positive(&raw.mu, "mu")?;
    let lambda = match raw.lambda.get_ref() {
        IntOrText::Int(l) if *l <= 0 => {
            return lines.err(raw.lambda.span(), format!("lambda must be positive, got {l}"))
        }
        IntOrText::Int(l) => LambdaRule::Explicit(*l as usize),
        IntOrText::Text(t) => match t.parse() {
            Ok(rule) => rule,
            Err(m) => return lines.err(raw.lambda.span(), m),
        },
    };
    let resolved = lambda.resolve(mu);
    if resolved < mu {
        return lines.err(
            raw.lambda.span(),
            format!("lambda resolves to {resolved}, below mu = {mu}"),
        );
    }
    let mut cfg = ExperimentConfig::new(n, mu, lambda);
    cfg.seed = lines.seed(&raw.seed)?;
    if let Some(r) = &raw.replicates {
        cfg.replicates = lines.positive(r, "replicates")?;
    }
    if let Some(b) = &raw.budget {
        cfg.budget = match b.get_ref() {
            IntOrText::Int(g) if *g < 0 => {
                return lines.err(b.span(), format!("budget must be non-negative, got {g}"))
            }
            IntOrText::Int(g) => Budget::Generations(*g as u64),
            IntOrText::Text(t) => match t.parse() {
                Ok(b) => b,
                Err(m) => return lines.err(b.span(), m),
            },
        };
    }
    if let Some(t) = raw.trackers {
        cfg.trackers = t.into_inner().into_iter().collect();
    }
    if let Some(f) = raw.first_hit {
        cfg.first_hit = f;
    }
    if let Some(e) = &raw.epsilon {
        let v = *e.get_ref();
        if !(v > 0.0 && v < 1.0) {
            return lines.err(e.span(), format!("epsilon must lie in (0, 1), got {v}"));
        }
        cfg.epsilon = v;
    }
    if let Some(c) = &raw.c {
        let v = *c.get_ref();
        if !(v > 0.0 && v < 0.5) {
            return lines.err(c.span(), format!("c must lie in (0, 1/2), got {v}"));
        }
        cfg.c = v;
    }
    if let Some(j) = &raw.jobs {
        cfg.jobs = Some(lines.positive(j, "jobs")?);
    }
    if let Some(o) = raw.output {
        cfg.output.dir = o.dir;
        if let Some(f) = o.format {
            cfg.output.format = match f.get_ref().parse() {
                Ok(f) => f,
                Err(m) => return lines.err(f.span(), m),
            };
        }
    }
    if let Some(s) = raw.sweep {
        if s.mu_grid.get_ref().is_empty() {
            return lines.err(s.mu_grid.span(), "mu_grid must not be empty");
        }
        if let Some(bad) = s.mu_grid.get_ref().iter().find(|&&m| m <= 0) {
            return lines.err(s.mu_grid.span(), format!("mu_grid entries must be positive, got {bad}"));
        }
        if s.ratio_grid.get_ref().is_empty() {
            return lines.err(s.ratio_grid.span(), "ratio_grid must not be empty");
        }
        if let Some(bad) = s.ratio_grid.get_ref().iter().find(|&&r| !(r > 0.0)) {
            return lines.err(
                s.ratio_grid.span(),
                format!("ratio_grid entries must be positive, got {bad}"),
            );
        }
        let rounding = match &s.rounding {
            None => Rounding::Nearest,
            Some(r) => match r.get_ref().parse() {
                Ok(r) => r,
                Err(m) => return lines.err(r.span(), m),
            },
        };
        cfg.sweep = Some(SweepSpec {
            mu_grid: s.mu_grid.get_ref().iter().map(|&m| m as usize).collect(),
            ratio_grid: s.ratio_grid.into_inner(),
            rounding,
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_suite(lines: &Lines<'_>, raw: RawSuite) -> Result<CheckerSuiteConfig> {
    let mut suite = Vec::new();
    for id in raw.suite.get_ref() {
        if !CHECKER_IDS.contains(&id.get_ref().as_str()) {
            return lines.err(id.span(), format!("unknown checker `{}`", id.get_ref()));
        }
        suite.push(id.get_ref().clone());
    }
    if suite.is_empty() {
        return lines.err(raw.suite.span(), "suite must list at least one checker");
    }
    let mut cfg = CheckerSuiteConfig::new(suite)?;
    if let Some(t) = &raw.tolerance_sigma {
        if !(*t.get_ref() > 0.0) {
            return lines.err(t.span(), "tolerance_sigma must be positive");
        }
        cfg.tolerance_sigma = *t.get_ref();
    }
    cfg.seed = lines.seed(&raw.seed)?;
    if let Some(samples) = raw.samples {
        for (k, v) in samples {
            if !CHECKER_IDS.contains(&k.get_ref().as_str()) {
                return lines.err(k.span(), format!("unknown checker `{}` in samples", k.get_ref()));
            }
            let count = lines.positive(&v, "sample budget")?;
            cfg.samples.insert(k.into_inner(), count as u64);
        }
    }
    if let Some(j) = &raw.jobs {
        cfg.jobs = Some(lines.positive(j, "jobs")?);
    }
    Ok(cfg)
}
