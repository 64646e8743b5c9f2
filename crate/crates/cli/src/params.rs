//! Parameter tables: one entry per key of each command, shared by flag parsing,
//! config files and validation.

use crate::error::CliError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Montgomery,
    Degennes,
    Robin1d,
    Harmonic,
    SurfaceScan,
    Effective2d,
    Ball,
    SphereModes,
    Verify,
    FixturesBuild,
    Sweep,
}

impl CommandName {
    pub const ALL: [CommandName; 11] = [
        CommandName::Montgomery,
        CommandName::Degennes,
        CommandName::Robin1d,
        CommandName::Harmonic,
        CommandName::SurfaceScan,
        CommandName::Effective2d,
        CommandName::Ball,
        CommandName::SphereModes,
        CommandName::Verify,
        CommandName::FixturesBuild,
        CommandName::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Montgomery => "montgomery",
            CommandName::Degennes => "degennes",
            CommandName::Robin1d => "robin1d",
            CommandName::Harmonic => "harmonic",
            CommandName::SurfaceScan => "surface-scan",
            CommandName::Effective2d => "effective2d",
            CommandName::Ball => "ball",
            CommandName::SphereModes => "sphere-modes",
            CommandName::Verify => "verify",
            CommandName::FixturesBuild => "fixtures-build",
            CommandName::Sweep => "sweep",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            CommandName::Montgomery => "Montgomery ground energy λ(ζ) scan and its minimum (ν₀, ζ₀)",
            CommandName::Degennes => "de Gennes ground energy scan and the constant Θ₀",
            CommandName::Robin1d => "Transverse Robin energies over an h list and their three-term fit",
            CommandName::Harmonic => "Ground energy of the shifted harmonic oscillator family",
            CommandName::SurfaceScan => "Effective boundary energy minimum, c₀ and eigenvalue predictions on a surface",
            CommandName::Effective2d => "Effective boundary operator spectrum in a chart, with an optional trial-state bound",
            CommandName::Ball => "Ball ground energy over Fourier modes, with the critical trial bound",
            CommandName::SphereModes => "Angular mode curves λ_m(b) and the lower envelope 𝔢(b)",
            CommandName::Verify => "Ball h-sweep fitted against the regime's three-term expansion",
            CommandName::FixturesBuild => "Regenerate the derived-constant fixture file with its oracles",
            CommandName::Sweep => "Run another command over a parameter grid",
        }
    }

    /// Commands that a sweep may dispatch.
    pub fn sweepable(self) -> bool {
        !matches!(self, CommandName::Sweep | CommandName::FixturesBuild)
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommandName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        CommandName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CliError::Validation(format!("unknown command '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// A real number in the open or closed interval described by the bounds.
    Real { min: Bound, max: Bound },
    /// A real number or `auto`.
    RealOrAuto { min: Bound },
    Count { min: usize },
    CountOrAuto { min: usize },
    Integer,
    /// Comma-separated reals, strictly decreasing when `decreasing` is set.
    List { decreasing: bool, positive: bool, min_len: usize },
    /// `start:stop:step`.
    Range,
    /// Three comma-separated reals.
    Vector,
    /// `auto` or `lo:hi` (integers).
    Window,
    Choice(&'static [&'static str]),
    /// `sphere{r}`, `ellipsoid{a,b,c}`, `plane{half_width}` or `tabulated{path}`.
    Surface,
    Flag,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Open(f64),
    Closed(f64),
    None,
}

fn describe(min: Bound, max: Bound) -> String {
    let lo = match min {
        Bound::Open(v) => format!("({v}"),
        Bound::Closed(v) => format!("[{v}"),
        Bound::None => "(-inf".into(),
    };
    let hi = match max {
        Bound::Open(v) => format!("{v})"),
        Bound::Closed(v) => format!("{v}]"),
        Bound::None => "inf)".into(),
    };
    format!("{lo}, {hi}")
}

impl Bound {
    fn admits_above(self, v: f64) -> bool {
        match self {
            Bound::Open(b) => v > b,
            Bound::Closed(b) => v >= b,
            Bound::None => true,
        }
    }

    fn admits_below(self, v: f64) -> bool {
        match self {
            Bound::Open(b) => v < b,
            Bound::Closed(b) => v <= b,
            Bound::None => true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    /// Extra flag name, e.g. `h` for `h_list`.
    pub alias: Option<&'static str>,
    pub kind: Kind,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

impl ParamSpec {
    pub fn flag(&self) -> String {
        self.key.replace('_', "-")
    }
}

const fn p(key: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> ParamSpec {
    ParamSpec {
        key,
        alias: None,
        kind,
        default,
        help,
    }
}

const POSITIVE: Kind = Kind::Real {
    min: Bound::Open(0.0),
    max: Bound::None,
};
const ANY: Kind = Kind::Real {
    min: Bound::None,
    max: Bound::None,
};
const NON_NEGATIVE: Kind = Kind::Real {
    min: Bound::Closed(0.0),
    max: Bound::None,
};
const SEMICLASSICAL: Kind = Kind::Real {
    min: Bound::Open(0.0),
    max: Bound::Open(1.0),
};
const SIGMA: Kind = Kind::Real {
    min: Bound::Open(0.0),
    max: Bound::Open(2.0),
};
const RHO: Kind = Kind::Real {
    min: Bound::Open(0.0),
    max: Bound::Open(0.5),
};
// three-term fits need one spare sample
const H_LIST: Kind = Kind::List {
    decreasing: true,
    positive: true,
    min_len: 4,
};
const REGIME: Kind = Kind::Choice(&["critical", "h_bounded"]);
const FIXTURES: ParamSpec = p(
    "fixtures",
    Kind::Text,
    Some(""),
    "fixture file to read (default: the bundled fixtures/constants.toml)",
);

const MONTGOMERY: &[ParamSpec] = &[
    p("half_width", POSITIVE, Some("7"), "initial half-width L of [−L, L] (enlarged automatically)"),
    p("cells", Kind::Count { min: 16 }, Some("14000"), "cells on [−L, L]"),
    p("zeta_range", Kind::Range, Some("-2:1:0.25"), "ζ scan start:stop:step"),
    FIXTURES,
];

const DEGENNES: &[ParamSpec] = &[
    p("length", POSITIVE, Some("20"), "interval length T"),
    p("spacing", POSITIVE, Some("0.002"), "grid spacing"),
    p("xi_range", Kind::Range, Some("0:2:0.1"), "ξ scan start:stop:step"),
    FIXTURES,
];

const ROBIN1D: &[ParamSpec] = &[
    p("kappa", ANY, Some("1"), "mean curvature κ"),
    p("c_star", NON_NEGATIVE, Some("1"), "collar constant C*"),
    p("sigma", SIGMA, Some("1"), "field scaling exponent σ"),
    p("h_list", H_LIST, Some("0.04,0.028,0.02,0.014,0.01,0.007,0.005"), "decreasing semiclassical parameters"),
    p("rho", RHO, Some("0.4"), "domain exponent ρ of (0, h^{ρ−1/σ})"),
];

const HARMONIC: &[ParamSpec] = &[
    p("h", POSITIVE, Some("0.1"), "semiclassical parameter"),
    p("m", ANY, Some("0"), "frequency m"),
    p("xi", ANY, Some("0"), "shift ξ"),
    p("eta", ANY, Some("2"), "slope η"),
    p("half_width", Kind::RealOrAuto { min: Bound::Open(0.0) }, Some("auto"), "half-width (auto: 12 well widths)"),
    p("cells", Kind::Count { min: 16 }, Some("6000"), "cells"),
];

const SURFACE_SCAN: &[ParamSpec] = &[
    p("surface", Kind::Surface, Some("ellipsoid{1,1.1,1.3}"), "sphere{r}, ellipsoid{a,b,c} or tabulated{path}"),
    p("b_field", Kind::Vector, Some("0,0,0.5"), "uniform field B"),
    p("gamma", POSITIVE, Some("1"), "Robin parameter γ"),
    p("sigma", SIGMA, Some("1"), "field scaling exponent σ"),
    p("level", Kind::Count { min: 1 }, Some("1"), "eigenvalue index n for the predictions"),
    p("scan_cells", Kind::Count { min: 8 }, Some("256"), "pre-scan samples along the first chart axis (twice as many along the second)"),
    FIXTURES,
];

const EFFECTIVE2D: &[ParamSpec] = &[
    p("surface", Kind::Surface, Some("sphere{1}"), "sphere{r}, ellipsoid{a,b,c}, plane{half_width} or tabulated{path}"),
    p("b_field", Kind::Vector, Some("0,0,1"), "uniform field B (symmetric gauge A = B×x/2)"),
    p("center", Kind::Vector, Some("0,0,1"), "chart centre on the surface"),
    p("h", SEMICLASSICAL, Some("0.05"), "semiclassical parameter"),
    p("half_width", POSITIVE, Some("0.25"), "chart half-width in both directions"),
    p("cells", Kind::Count { min: 4 }, Some("16"), "cells per chart direction"),
    p("k", Kind::Count { min: 1 }, Some("3"), "number of eigenvalues"),
    p("delta", Kind::RealOrAuto { min: Bound::Open(0.0) }, Some("auto"), "collar depth δ"),
    p("trial", Kind::Flag, Some("false"), "also evaluate the boundary trial state at the centre"),
    p("sigma", SIGMA, Some("1"), "trial-state exponent σ"),
    p("rho", RHO, Some("0.4"), "trial-state cut-off exponent ρ"),
    p("coefficients_table", Kind::Flag, Some("false"), "write the per-vertex coefficient table"),
];

const BALL: &[ParamSpec] = &[
    p("regime", REGIME, Some("critical"), "critical (σ = 1) or h_bounded (σ = 0)"),
    p("h", SEMICLASSICAL, Some("0.02"), "semiclassical parameter"),
    p("b", NON_NEGATIVE, Some("1"), "field strength"),
    p("theta_cells", Kind::CountOrAuto { min: 16 }, Some("auto"), "θ cells (auto: regime default)"),
    p("trial", Kind::Flag, Some("true"), "evaluate the Montgomery trial state (critical regime)"),
    FIXTURES,
];

const SPHERE_MODES: &[ParamSpec] = &[
    p("b_range", Kind::Range, Some("0:12:0.1"), "field values start:stop:step"),
    p("m_window", Kind::Window, Some("auto"), "modes lo:hi, or auto to cover the minimizing modes"),
    p("theta_cells", Kind::Count { min: 16 }, Some("1024"), "θ cells"),
];

const VERIFY: &[ParamSpec] = &[
    p("regime", REGIME, Some("critical"), "critical or h_bounded"),
    p("b", NON_NEGATIVE, Some("1"), "field strength"),
    ParamSpec {
        key: "h_list",
        alias: Some("h"),
        kind: H_LIST,
        default: Some("0.04,0.028,0.02,0.014,0.01"),
        help: "decreasing semiclassical parameters",
    },
    FIXTURES,
];

const FIXTURES_BUILD: &[ParamSpec] = &[p("date", Kind::Text, Some("today"), "date stamp for the records (YYYY-MM-DD)")];

const SWEEP: &[ParamSpec] = &[
    p("target", Kind::Choice(&[
        "montgomery", "degennes", "robin1d", "harmonic", "surface-scan", "effective2d", "ball", "sphere-modes", "verify",
    ]), None, "command run in every grid cell"),
    p("grid", Kind::Text, None, "axes key=v1,v2,…;key2=…; the grid is their product"),
];

pub fn specs(command: CommandName) -> &'static [ParamSpec] {
    match command {
        CommandName::Montgomery => MONTGOMERY,
        CommandName::Degennes => DEGENNES,
        CommandName::Robin1d => ROBIN1D,
        CommandName::Harmonic => HARMONIC,
        CommandName::SurfaceScan => SURFACE_SCAN,
        CommandName::Effective2d => EFFECTIVE2D,
        CommandName::Ball => BALL,
        CommandName::SphereModes => SPHERE_MODES,
        CommandName::Verify => VERIFY,
        CommandName::FixturesBuild => FIXTURES_BUILD,
        CommandName::Sweep => SWEEP,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Auto(Option<f64>),
    Count(usize),
    CountOrAuto(Option<usize>),
    Integer(i64),
    List(Vec<f64>),
    Vector([f64; 3]),
    Window(Option<(i64, i64)>),
    Flag(bool),
    Text(String),
    Surface(SurfaceSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceSpec {
    Sphere { radius: f64 },
    Ellipsoid { axes: [f64; 3] },
    Plane { half_width: f64 },
    Tabulated { path: String },
}

impl SurfaceSpec {
    pub fn parse(key: &str, raw: &str) -> Result<Self, CliError> {
        let bad = |msg: &str| CliError::Validation(format!("{key}: {msg} in '{raw}'"));
        let t = raw.trim();
        let (name, rest) = t.split_once('{').ok_or_else(|| bad("expected name{…}"))?;
        let body = rest.strip_suffix('}').ok_or_else(|| bad("missing closing brace"))?;
        let positive = |body: &str, n: usize| -> Result<Vec<f64>, CliError> {
            let v = reals(key, body)?;
            if v.len() != n || v.iter().any(|x| !(*x > 0.0)) {
                return Err(bad(&format!("expected {n} positive numbers")));
            }
            Ok(v)
        };
        Ok(match name.trim() {
            "sphere" => SurfaceSpec::Sphere {
                radius: positive(body, 1)?[0],
            },
            "ellipsoid" => {
                let v = positive(body, 3)?;
                SurfaceSpec::Ellipsoid { axes: [v[0], v[1], v[2]] }
            }
            "plane" => SurfaceSpec::Plane {
                half_width: positive(body, 1)?[0],
            },
            "tabulated" => {
                let path = body.trim();
                if !std::path::Path::new(path).is_file() {
                    return Err(bad("no such sample file"));
                }
                SurfaceSpec::Tabulated { path: path.to_string() }
            }
            _ => return Err(bad("unknown surface")),
        })
    }
}

fn real(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("{key}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Validation(format!("{key}: '{s}' is not finite")));
    }
    Ok(v)
}

fn reals(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| real(key, t)).collect()
}

/// Values of `start:stop:step`, computed as start + i·step.
pub fn range_values(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let parts = s.split(':').map(|t| real(key, t)).collect::<Result<Vec<_>, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(CliError::Validation(format!("{key}: expected start:stop:step, got '{s}'")));
    };
    if !(step > 0.0) || stop < start {
        return Err(CliError::Validation(format!("{key}: need step > 0 and stop ≥ start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(CliError::Validation(format!("{key}: more than a million points")));
    }
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

impl ParamSpec {
    pub fn parse(&self, raw: &str) -> Result<Value, CliError> {
        let key = self.key;
        let bad = |msg: String| CliError::Validation(format!("{key}: {msg}"));
        let count = |s: &str, min: usize| -> Result<usize, CliError> {
            let n: usize = s.trim().parse().map_err(|_| bad(format!("'{s}' is not a count")))?;
            if n < min {
                return Err(bad(format!("{n} is below the minimum {min}")));
            }
            Ok(n)
        };
        Ok(match self.kind {
            Kind::Real { min, max } => {
                let v = real(key, raw)?;
                if !min.admits_above(v) || !max.admits_below(v) {
                    return Err(bad(format!("{v} outside {}", describe(min, max))));
                }
                Value::Real(v)
            }
            Kind::RealOrAuto { min } => {
                if raw.trim() == "auto" {
                    Value::Auto(None)
                } else {
                    let v = real(key, raw)?;
                    if !min.admits_above(v) {
                        return Err(bad(format!("{v} outside {}", describe(min, Bound::None))));
                    }
                    Value::Auto(Some(v))
                }
            }
            Kind::Count { min } => Value::Count(count(raw, min)?),
            Kind::CountOrAuto { min } => {
                if raw.trim() == "auto" {
                    Value::CountOrAuto(None)
                } else {
                    Value::CountOrAuto(Some(count(raw, min)?))
                }
            }
            Kind::Integer => Value::Integer(raw.trim().parse().map_err(|_| bad(format!("'{raw}' is not an integer")))?),
            Kind::List {
                decreasing,
                positive,
                min_len,
            } => {
                let v = reals(key, raw)?;
                if v.len() < min_len.max(1) {
                    return Err(bad(format!("needs at least {} entries, got {}", min_len.max(1), v.len())));
                }
                if positive && v.iter().any(|x| !(*x > 0.0)) {
                    return Err(bad("entries must be positive".into()));
                }
                if decreasing && v.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(bad("entries must be strictly decreasing".into()));
                }
                Value::List(v)
            }
            Kind::Range => Value::List(range_values(key, raw)?),
            Kind::Vector => {
                let v = reals(key, raw)?;
                let [x, y, z] = v[..] else {
                    return Err(bad(format!("expected three components, got '{raw}'")));
                };
                Value::Vector([x, y, z])
            }
            Kind::Window => {
                if raw.trim() == "auto" {
                    Value::Window(None)
                } else {
                    let parts: Vec<i64> = raw
                        .split(':')
                        .map(|t| t.trim().parse::<i64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad(format!("expected lo:hi or auto, got '{raw}'")))?;
                    match parts[..] {
                        [lo, hi] if lo <= hi => Value::Window(Some((lo, hi))),
                        _ => return Err(bad(format!("expected lo:hi with lo ≤ hi, got '{raw}'"))),
                    }
                }
            }
            Kind::Choice(options) => {
                let t = raw.trim();
                if !options.contains(&t) {
                    return Err(bad(format!("'{t}' is not one of {options:?}")));
                }
                Value::Text(t.to_string())
            }
            Kind::Surface => Value::Surface(SurfaceSpec::parse(key, raw)?),
            Kind::Flag => match raw.trim() {
                "true" | "yes" | "1" | "" => Value::Flag(true),
                "false" | "no" | "0" => Value::Flag(false),
                other => return Err(bad(format!("'{other}' is not a boolean"))),
            },
            Kind::Text => Value::Text(raw.to_string()),
        })
    }
}

/// Validated parameters of one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters(pub BTreeMap<String, Value>);

impl Parameters {
    fn get(&self, key: &str) -> &Value {
        self.0.get(key).unwrap_or_else(|| panic!("parameter '{key}' was validated"))
    }

    pub fn real(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Real(v) => *v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn auto_real(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Value::Auto(v) => *v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.get(key) {
            Value::Count(v) => *v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn auto_count(&self, key: &str) -> Option<usize> {
        match self.get(key) {
            Value::CountOrAuto(v) => *v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::List(v) => v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn vector(&self, key: &str) -> [f64; 3] {
        match self.get(key) {
            Value::Vector(v) => *v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn window(&self, key: &str) -> Option<(i64, i64)> {
        match self.get(key) {
            Value::Window(v) => *v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Flag(v) => *v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn surface(&self, key: &str) -> &SurfaceSpec {
        match self.get(key) {
            Value::Surface(v) => v,
            other => panic!("{key} is {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(v) => v,
            other => panic!("{key} is {other:?}"),
        }
    }
}

/// Validates raw key/value pairs against the command's table, filling defaults.
pub fn validate(command: CommandName, raw: &BTreeMap<String, String>) -> Result<Parameters, CliError> {
    let table = specs(command);
    for key in raw.keys() {
        if !table.iter().any(|s| s.key == key) {
            return Err(CliError::Validation(format!("{command}: unknown parameter '{key}'")));
        }
    }
    let mut out = BTreeMap::new();
    for spec in table {
        let text = match (raw.get(spec.key), spec.default) {
            (Some(v), _) => v.as_str(),
            (None, Some(d)) => d,
            (None, None) => {
                return Err(CliError::Validation(format!("{command}: missing required parameter '{}'", spec.key)))
            }
        };
        out.insert(spec.key.to_string(), spec.parse(text)?);
    }
    Ok(Parameters(out))
}
