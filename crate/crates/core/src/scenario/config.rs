//! Scenario configuration files.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::presets;
use crate::error::Error;
use crate::flux::FluxSpec;

/// Diagnostics a scenario can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Compression,
    MassDecay,
    EntropyGrowth,
    Holder,
    Oleinik,
    Pushforward,
    Classify,
    Extremal,
    FlowStructure,
    Oracle,
    Squeeze,
}

impl CheckName {
    pub const ALL: [CheckName; 11] = [
        CheckName::Compression,
        CheckName::MassDecay,
        CheckName::EntropyGrowth,
        CheckName::Holder,
        CheckName::Oleinik,
        CheckName::Pushforward,
        CheckName::Classify,
        CheckName::Extremal,
        CheckName::FlowStructure,
        CheckName::Oracle,
        CheckName::Squeeze,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Compression => "compression",
            CheckName::MassDecay => "mass_decay",
            CheckName::EntropyGrowth => "entropy_growth",
            CheckName::Holder => "holder",
            CheckName::Oleinik => "oleinik",
            CheckName::Pushforward => "pushforward",
            CheckName::Classify => "classify",
            CheckName::Extremal => "extremal",
            CheckName::FlowStructure => "flow_structure",
            CheckName::Oracle => "oracle",
            CheckName::Squeeze => "squeeze",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Initial data of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    /// When set, the solution is the rigid translation `u0(x − speed·t)`
    /// instead of the entropy solution.
    pub traveling_speed: Option<f64>,
}

/// A particle start `(x, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Start {
    pub x: f64,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub flux: String,
    pub u_range: Option<(f64, f64)>,
    pub initial: InitialData,
    pub c_list: Vec<f64>,
    pub t_end: f64,
    pub delta: f64,
    pub dx: Option<f64>,
    pub domain: Option<(f64, f64)>,
    pub starts: Vec<Start>,
    pub checks: Vec<CheckName>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub entropy_k: Vec<f64>,
    pub oleinik_times: Vec<f64>,
    pub pushforward_intervals: Vec<(f64, f64)>,
    pub snapshot_times: Vec<f64>,
    pub squeeze_trials: usize,
    pub semigroup_samples: usize,
}

impl ScenarioConfig {
    pub fn flux_spec(&self) -> FluxSpec {
        self.flux.parse().expect("flux validated at parse time")
    }

    pub fn has(&self, check: CheckName) -> bool {
        self.checks.contains(&check)
    }
}

/// A semantic problem with one field of a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    let parts: Vec<String> = v.iter().map(|v| format!("{}: {}", v.path, v.message)).collect();
    format!("{} invalid field(s): {}", v.len(), parts.join("; "))
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.to_string())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    preset: Option<String>,
    breakpoints: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    traveling_speed: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawStart {
    At(f64),
    Pair(f64, f64),
    Object { x: f64, s: Option<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    preset: Option<String>,
    flux: Option<String>,
    u_range: Option<(f64, f64)>,
    initial: Option<RawInitial>,
    c_list: Option<Vec<f64>>,
    #[serde(rename = "T", alias = "t_end")]
    t_end: Option<f64>,
    delta: Option<f64>,
    dx: Option<f64>,
    domain: Option<(f64, f64)>,
    starts: Option<Vec<RawStart>>,
    checks: Option<Vec<String>>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    entropy_k: Option<Vec<f64>>,
    oleinik_times: Option<Vec<f64>>,
    pushforward_intervals: Option<Vec<(f64, f64)>>,
    snapshot_times: Option<Vec<f64>>,
    squeeze_trials: Option<usize>,
    semigroup_samples: Option<usize>,
}

/// Parses and validates a JSON scenario. All semantic violations are
/// reported together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut bad: Vec<Violation> = Vec::new();
    let mut flag = |path: &str, message: String| {
        bad.push(Violation {
            path: path.to_string(),
            message,
        })
    };

    if raw.name.as_deref().is_some_and(|n| n.trim().is_empty()) {
        flag("name", "must not be empty".into());
    }
    let preset_name = match (&raw.preset, raw.initial.as_ref().and_then(|i| i.preset.clone())) {
        (Some(a), Some(b)) if *a != b => {
            flag("preset", format!("conflicts with initial.preset {b:?}"));
            None
        }
        (Some(a), _) => Some(a.clone()),
        (None, b) => b,
    };
    let preset = match &preset_name {
        Some(name) => match presets::initial_data(name) {
            Some(p) => Some(p),
            None => {
                flag(
                    "initial.preset",
                    format!(
                        "unknown preset {name:?}; available presets: {}",
                        presets::names().join(", ")
                    ),
                );
                None
            }
        },
        None => None,
    };

    let initial = match (preset, raw.initial) {
        (Some(p), Some(ri)) if ri.breakpoints.is_some() || ri.values.is_some() => {
            flag("initial", "give either a preset or breakpoints/values, not both".into());
            p.initial
        }
        (Some(p), ri) => {
            let mut init = p.initial;
            if let Some(speed) = ri.and_then(|r| r.traveling_speed) {
                init.traveling_speed = Some(speed);
            }
            init
        }
        (None, Some(ri)) => {
            let breakpoints = ri.breakpoints.unwrap_or_default();
            let values = ri.values.unwrap_or_else(|| {
                if preset_name.is_none() {
                    flag("initial.values", "missing".into());
                }
                vec![0.0; breakpoints.len() + 1]
            });
            if values.len() != breakpoints.len() + 1 {
                flag(
                    "initial.values",
                    format!(
                        "{} breakpoints need {} values, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        values.len()
                    ),
                );
            }
            if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                flag("initial.breakpoints", "must be strictly increasing".into());
            }
            for (i, v) in breakpoints.iter().enumerate() {
                if !v.is_finite() {
                    flag(&format!("initial.breakpoints[{i}]"), "must be finite".into());
                }
            }
            for (i, v) in values.iter().enumerate() {
                if !v.is_finite() {
                    flag(&format!("initial.values[{i}]"), "must be finite".into());
                }
            }
            InitialData {
                breakpoints,
                values,
                traveling_speed: ri.traveling_speed,
            }
        }
        (None, None) => {
            flag("initial", "missing: give a preset or breakpoints/values".into());
            InitialData {
                breakpoints: Vec::new(),
                values: vec![0.0],
                traveling_speed: None,
            }
        }
    };
    if let Some(s) = initial.traveling_speed {
        if !s.is_finite() {
            flag("initial.traveling_speed", "must be finite".into());
        }
    }

    let default_flux = preset_name
        .as_deref()
        .and_then(presets::initial_data)
        .map_or("burgers".to_string(), |p| p.flux.to_string());
    let flux = raw.flux.unwrap_or(default_flux);
    if let Err(e) = flux.parse::<FluxSpec>() {
        flag("flux", e.to_string());
    }

    let c_list = raw.c_list.unwrap_or_else(|| vec![0.0]);
    if c_list.is_empty() {
        flag("c_list", "needs at least one level".into());
    }
    for (i, c) in c_list.iter().enumerate() {
        if !c.is_finite() {
            flag(&format!("c_list[{i}]"), "must be finite".into());
        }
    }

    let t_end = raw.t_end.unwrap_or_else(|| {
        flag("T", "missing".into());
        1.0
    });
    // Times relative to T are only checked against a usable T.
    let t_ok = t_end > 0.0 && t_end.is_finite();
    if !t_ok {
        flag("T", format!("must be positive and finite, got {t_end}"));
    }
    let delta = raw.delta.unwrap_or(1.0 / 256.0);
    if !(delta > 0.0 && delta.is_finite()) {
        flag("delta", format!("must be positive and finite, got {delta}"));
    }
    if let Some(dx) = raw.dx {
        if !(dx > 0.0 && dx.is_finite()) {
            flag("dx", format!("must be positive and finite, got {dx}"));
        }
    }
    if let Some((a, b)) = raw.domain {
        if !(a < b && a.is_finite() && b.is_finite()) {
            flag("domain", format!("needs finite lo < hi, got [{a}, {b}]"));
        }
    }
    let u_range = raw.u_range;
    if let Some((lo, hi)) = u_range {
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            flag("u_range", format!("needs finite lo <= hi, got [{lo}, {hi}]"));
        } else {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            let outside = |v: f64| v < lo - slack || v > hi + slack;
            for (i, &v) in initial.values.iter().enumerate() {
                if outside(v) {
                    flag(&format!("initial.values[{i}]"), format!("{v} lies outside u_range"));
                }
            }
            for (i, &c) in c_list.iter().enumerate() {
                if outside(c) {
                    flag(&format!("c_list[{i}]"), format!("{c} lies outside u_range"));
                }
            }
        }
    }

    let starts: Vec<Start> = raw
        .starts
        .unwrap_or_default()
        .into_iter()
        .map(|s| match s {
            RawStart::At(x) => Start { x, s: 0.0 },
            RawStart::Pair(x, s) => Start { x, s },
            RawStart::Object { x, s } => Start { x, s: s.unwrap_or(0.0) },
        })
        .collect();
    for (i, st) in starts.iter().enumerate() {
        if !st.x.is_finite() {
            flag(&format!("starts[{i}].x"), "must be finite".into());
        }
        if t_ok && !(st.s >= 0.0 && st.s < t_end) {
            flag(&format!("starts[{i}].s"), format!("must lie in [0, T), got {}", st.s));
        }
    }

    let mut checks = Vec::new();
    for (i, name) in raw.checks.unwrap_or_default().iter().enumerate() {
        match CheckName::parse(name) {
            Some(c) if checks.contains(&c) => flag(&format!("checks[{i}]"), format!("{name} listed twice")),
            Some(c) => checks.push(c),
            None => {
                let known: Vec<&str> = CheckName::ALL.iter().map(|c| c.as_str()).collect();
                flag(
                    &format!("checks[{i}]"),
                    format!("unknown check {name:?}; known checks: {}", known.join(", ")),
                );
            }
        }
    }
    if checks.contains(&CheckName::Oracle) && raw.dx.is_none() {
        flag("dx", "required by the oracle check".into());
    }

    let entropy_k = raw.entropy_k.unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    for (i, k) in entropy_k.iter().enumerate() {
        if !(*k > 0.0 && k.is_finite()) {
            flag(&format!("entropy_k[{i}]"), format!("must be positive, got {k}"));
        }
    }
    let oleinik_times = raw.oleinik_times.unwrap_or_else(|| {
        [0.5, 1.0, 2.0].into_iter().filter(|&t| t <= t_end).collect()
    });
    for (i, t) in oleinik_times.iter().enumerate() {
        if t_ok && !(*t > 0.0 && *t <= t_end) {
            flag(&format!("oleinik_times[{i}]"), format!("must lie in (0, T], got {t}"));
        }
    }
    let pushforward_intervals = raw.pushforward_intervals.unwrap_or_default();
    for (i, (a, b)) in pushforward_intervals.iter().enumerate() {
        if !(a < b) {
            flag(&format!("pushforward_intervals[{i}]"), format!("needs a < b, got [{a}, {b}]"));
        }
    }
    let snapshot_times = raw
        .snapshot_times
        .unwrap_or_else(|| (0..=4).map(|i| t_end * i as f64 / 4.0).collect());
    for (i, t) in snapshot_times.iter().enumerate() {
        if t_ok && !(*t >= 0.0 && *t <= t_end) {
            flag(&format!("snapshot_times[{i}]"), format!("must lie in [0, T], got {t}"));
        }
    }

    if !bad.is_empty() {
        return Err(ConfigError::Invalid(bad));
    }
    Ok(ScenarioConfig {
        name: raw.name.or(preset_name).unwrap_or_else(|| "scenario".into()),
        flux,
        u_range,
        initial,
        c_list,
        t_end,
        delta,
        dx: raw.dx,
        domain: raw.domain,
        starts,
        checks,
        output: raw.output,
        seed: raw.seed.unwrap_or(42),
        entropy_k,
        oleinik_times,
        pushforward_intervals,
        snapshot_times,
        squeeze_trials: raw.squeeze_trials.unwrap_or(500),
        semigroup_samples: raw.semigroup_samples.unwrap_or(100),
    })
}
