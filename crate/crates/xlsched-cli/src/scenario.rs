//! Scenario documents and bundled presets.
//!
//! A scenario names the scheduler, the slotting, the rate region and one
//! `[user N]` block per flow. Two interchangeable encodings exist: a flat
//! `key = value` text format and a JSON mirror of the same fields. Rates in
//! documents are Mbit/s; [`compile`] converts them to the bit/s the engine
//! works in.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;
use xlsched::engine::{SimConfig, UserConfig};
use xlsched::rate_region::RateRegion;
use xlsched::tbrm::RateConstraint;
use xlsched::traffic::{
    synthesize_video_trace, SelfSimilarParams, Sine2, Trace, TrafficModel, TrafficSpec,
};
use xlsched::SchedulerKind;

/// Scale between document rates (Mbit/s) and engine rates (bit/s).
pub const MBPS: f64 = 1e6;

/// Fraction of the maximal rate a self-similar flow targets when its own
/// upper bound is disabled and no mean is given.
pub const SELF_SIMILAR_CAP_FRACTION: f64 = 0.25;

/// Fraction of the upper bound a self-similar flow targets when no mean is
/// given: busy enough to need throttling, idle often enough to dip below
/// its guaranteed rate.
pub const SELF_SIMILAR_BOUND_FRACTION: f64 = 0.7;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("invalid JSON scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown scheduler `{0}`")]
    UnknownScheduler(String),
    #[error("`{0}` is neither a bundled preset nor an existing file")]
    UnknownScenario(String),
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field {
        field: field.into(),
        message: message.into(),
    }
}

fn default_name() -> String {
    "scenario".to_owned()
}

fn default_tau() -> f64 {
    0.05
}

fn default_horizon() -> u64 {
    12_000
}

fn default_seed() -> u64 {
    1
}

/// One flow: its arrival process and its rate bounds, in Mbit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserDoc {
    /// Arrival process: `sat`, `sine2vs`, `sine2f`, `selfsimilar`, `video`
    /// or `trace`.
    pub traffic: String,
    /// Mean offered rate; required for `sine2vs`, `sine2f` and `video`,
    /// optional for `selfsimilar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_mbps: Option<f64>,
    /// Arrival trace file; required for `trace`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    /// Physical per-user capacity.
    pub cmax_mbps: f64,
    /// Guaranteed rate; `0` disables the lower bound.
    pub rho_g_mbps: f64,
    /// Maximal rate; `>= cmax_mbps` disables the upper bound, and `0`
    /// together with `rho_g_mbps = 0` disables both.
    pub rho_m_mbps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_bound_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_g_mult: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_m_mult: Option<f64>,
    /// Seed of this flow's own random stream; defaults to the user index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream_seed: Option<u64>,
}

/// A full run description, still in document units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default = "default_name")]
    pub name: String,
    pub scheduler: String,
    #[serde(default = "default_tau")]
    pub tau_s: f64,
    #[serde(default = "default_horizon")]
    pub horizon_slots: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Rate-region coupling: `0` is the ellipsoidal region.
    #[serde(default)]
    pub gamma: f64,
    pub users: Vec<UserDoc>,
}

/// A compiled scenario: the engine configuration plus any compile warnings
/// (currently only `[0, 0]` bound pairs, which disable both bounds).
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub config: SimConfig,
    pub warnings: Vec<String>,
}

/// Translates a document into an engine configuration.
pub fn compile(doc: &ScenarioDoc) -> Result<CompiledScenario, ScenarioError> {
    let scheduler = SchedulerKind::parse(&doc.scheduler)
        .ok_or_else(|| ScenarioError::UnknownScheduler(doc.scheduler.clone()))?;
    if !doc.tau_s.is_finite() || doc.tau_s <= 0.0 {
        return Err(field_error(
            "tau_s",
            format!("must be positive and finite, got {}", doc.tau_s),
        ));
    }
    if doc.horizon_slots == 0 {
        return Err(field_error("horizon_slots", "must be positive"));
    }
    if doc.users.is_empty() {
        return Err(field_error("users", "at least one [user N] block is required"));
    }

    let cmax_bps: Vec<f64> = doc.users.iter().map(|u| u.cmax_mbps * MBPS).collect();
    let region = RateRegion::new(cmax_bps, doc.gamma)
        .map_err(|e| field_error("region", e.to_string()))?;

    let mut warnings = Vec::new();
    let mut users = Vec::with_capacity(doc.users.len());
    for (index, user) in doc.users.iter().enumerate() {
        let label = |key: &str| format!("user {}: {key}", index + 1);
        let cmax = user.cmax_mbps * MBPS;
        let constraint = if user.rho_g_mbps == 0.0 && user.rho_m_mbps == 0.0 {
            warnings.push(format!(
                "user {}: bounds [0, 0] disable both the guaranteed and the maximal rate",
                index + 1
            ));
            RateConstraint::unconstrained(cmax)
        } else {
            RateConstraint::new(user.rho_g_mbps * MBPS, user.rho_m_mbps * MBPS, cmax)
        }
        .map_err(|e| field_error(label("rho_g_mbps/rho_m_mbps"), e.to_string()))?;

        let mean_bps = |field: &str| -> Result<f64, ScenarioError> {
            let mean = user
                .mean_mbps
                .ok_or_else(|| field_error(label(field), "mean_mbps is required"))?;
            if !mean.is_finite() || mean <= 0.0 {
                return Err(field_error(
                    label("mean_mbps"),
                    format!("must be positive and finite, got {mean}"),
                ));
            }
            Ok(mean * MBPS)
        };
        let stream_seed = user.stream_seed.unwrap_or(index as u64);
        let model = match user.traffic.to_ascii_lowercase().as_str() {
            "sat" => TrafficModel::Sat,
            "sine2vs" => TrafficModel::Sine2(
                Sine2::slow_variation(mean_bps("traffic = sine2vs")?)
                    .map_err(|e| field_error(label("mean_mbps"), e.to_string()))?,
            ),
            "sine2f" => TrafficModel::Sine2(
                Sine2::fast_variation(mean_bps("traffic = sine2f")?)
                    .map_err(|e| field_error(label("mean_mbps"), e.to_string()))?,
            ),
            "selfsimilar" => {
                let mean = match user.mean_mbps {
                    Some(_) => mean_bps("traffic = selfsimilar")?,
                    None if constraint.upper_active() => {
                        SELF_SIMILAR_BOUND_FRACTION * constraint.rho_m()
                    }
                    None => SELF_SIMILAR_CAP_FRACTION * cmax,
                };
                TrafficModel::SelfSimilar(SelfSimilarParams::with_mean_rate(mean))
            }
            "video" => {
                // Synthesized at the run's own slotting; the stream seed
                // alone fixes the movie, so reseeding a run keeps its
                // content.
                let trace = synthesize_video_trace(
                    mean_bps("traffic = video")?,
                    doc.horizon_slots as usize,
                    doc.tau_s,
                    stream_seed,
                )
                .map_err(|e| field_error(label("traffic = video"), e.to_string()))?;
                TrafficModel::Trace(trace)
            }
            "trace" => {
                let path = user
                    .trace_path
                    .as_deref()
                    .ok_or_else(|| field_error(label("trace_path"), "required for traffic = trace"))?;
                TrafficModel::Trace(
                    Trace::from_path(Path::new(path))
                        .map_err(|e| field_error(label("trace_path"), e.to_string()))?,
                )
            }
            other => {
                return Err(field_error(
                    label("traffic"),
                    format!(
                        "unknown kind `{other}` (expected sat, sine2vs, sine2f, selfsimilar, video or trace)"
                    ),
                ));
            }
        };

        let mut config = UserConfig::new(TrafficSpec::new(model, stream_seed), constraint);
        if let Some(bound) = user.delay_bound_s {
            config.qos.delay_bound = bound;
        }
        if let Some(prob) = user.violation_prob {
            config.qos.violation_prob = prob;
        }
        if let Some(mult) = user.sigma_g_mult {
            config.sigma_g_multiplier = mult;
        }
        if let Some(mult) = user.sigma_m_mult {
            config.sigma_m_multiplier = mult;
        }
        users.push(config);
    }

    let mut config = SimConfig::new(region, scheduler, users);
    config.tau = doc.tau_s;
    config.horizon = doc.horizon_slots;
    config.seed = doc.seed;
    Ok(CompiledScenario { config, warnings })
}

/// Loads a scenario from a bundled preset name or a file path. `.json`
/// files use the JSON mirror; anything else parses as the text format.
pub fn load(source: &str) -> Result<ScenarioDoc, ScenarioError> {
    if let Some(doc) = preset(source) {
        return Ok(doc);
    }
    let path = Path::new(source);
    if !path.is_file() {
        return Err(ScenarioError::UnknownScenario(source.to_owned()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut doc = if path.extension().is_some_and(|ext| ext == "json") {
        serde_json::from_str::<ScenarioDoc>(&text)?
    } else {
        parse_text(&text)?
    };
    if doc.name == default_name() {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            doc.name = stem.to_owned();
        }
    }
    Ok(doc)
}

/// Parses the flat text format: global `key = value` lines, then one
/// `[user N]` section per flow. `#` starts a comment line; sections must be
/// numbered 1, 2, ... in order.
pub fn parse_text(text: &str) -> Result<ScenarioDoc, ScenarioError> {
    #[derive(Default)]
    struct RawUser {
        traffic: Option<String>,
        mean_mbps: Option<f64>,
        trace_path: Option<String>,
        cmax_mbps: Option<f64>,
        rho_g_mbps: Option<f64>,
        rho_m_mbps: Option<f64>,
        delay_bound_s: Option<f64>,
        violation_prob: Option<f64>,
        sigma_g_mult: Option<f64>,
        sigma_m_mult: Option<f64>,
        stream_seed: Option<u64>,
        seen: HashSet<String>,
    }

    fn number<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ScenarioError>
    where
        T::Err: std::fmt::Display,
    {
        value.parse().map_err(|e| ScenarioError::Line {
            line,
            message: format!("{key}: {e}"),
        })
    }

    let mut name = default_name();
    let mut scheduler = None;
    let mut tau_s = default_tau();
    let mut horizon_slots = default_horizon();
    let mut seed = default_seed();
    let mut gamma = 0.0;
    let mut seen_globals = HashSet::new();
    let mut raw_users: Vec<RawUser> = Vec::new();
    let mut in_section = false;

    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header.strip_suffix(']').ok_or_else(|| ScenarioError::Line {
                line,
                message: format!("unterminated section header `{content}`"),
            })?;
            let ordinal: usize = header
                .strip_prefix("user ")
                .and_then(|n| n.trim().parse().ok())
                .ok_or_else(|| ScenarioError::Line {
                    line,
                    message: format!("expected `[user N]`, got `{content}`"),
                })?;
            if ordinal != raw_users.len() + 1 {
                return Err(ScenarioError::Line {
                    line,
                    message: format!(
                        "user sections must be numbered in order; expected [user {}]",
                        raw_users.len() + 1
                    ),
                });
            }
            raw_users.push(RawUser::default());
            in_section = true;
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ScenarioError::Line {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !in_section {
            if !seen_globals.insert(key.to_owned()) {
                return Err(ScenarioError::Line {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            match key {
                "name" => name = value.to_owned(),
                "scheduler" => scheduler = Some(value.to_owned()),
                "tau_s" => tau_s = number(key, value, line)?,
                "horizon_slots" => horizon_slots = number(key, value, line)?,
                "seed" => seed = number(key, value, line)?,
                "gamma" => gamma = number(key, value, line)?,
                other => {
                    return Err(ScenarioError::Line {
                        line,
                        message: format!("unknown global key `{other}`"),
                    });
                }
            }
        } else {
            let user = raw_users.last_mut().expect("a section is open");
            if !user.seen.insert(key.to_owned()) {
                return Err(ScenarioError::Line {
                    line,
                    message: format!("duplicate key `{key}` in [user {}]", raw_users.len()),
                });
            }
            match key {
                "traffic" => user.traffic = Some(value.to_owned()),
                "mean_mbps" => user.mean_mbps = Some(number(key, value, line)?),
                "trace_path" => user.trace_path = Some(value.to_owned()),
                "cmax_mbps" => user.cmax_mbps = Some(number(key, value, line)?),
                "rho_g_mbps" => user.rho_g_mbps = Some(number(key, value, line)?),
                "rho_m_mbps" => user.rho_m_mbps = Some(number(key, value, line)?),
                "delay_bound_s" => user.delay_bound_s = Some(number(key, value, line)?),
                "violation_prob" => user.violation_prob = Some(number(key, value, line)?),
                "sigma_g_mult" => user.sigma_g_mult = Some(number(key, value, line)?),
                "sigma_m_mult" => user.sigma_m_mult = Some(number(key, value, line)?),
                "stream_seed" => user.stream_seed = Some(number(key, value, line)?),
                other => {
                    return Err(ScenarioError::Line {
                        line,
                        message: format!("unknown user key `{other}`"),
                    });
                }
            }
        }
    }

    let scheduler = scheduler.ok_or_else(|| field_error("scheduler", "missing required key"))?;
    let mut users = Vec::with_capacity(raw_users.len());
    for (index, raw) in raw_users.into_iter().enumerate() {
        let require = |key: &str, value: Option<f64>| {
            value.ok_or_else(|| {
                field_error(format!("user {}: {key}", index + 1), "missing required key")
            })
        };
        users.push(UserDoc {
            traffic: raw.traffic.ok_or_else(|| {
                field_error(format!("user {}: traffic", index + 1), "missing required key")
            })?,
            mean_mbps: raw.mean_mbps,
            trace_path: raw.trace_path,
            cmax_mbps: require("cmax_mbps", raw.cmax_mbps)?,
            rho_g_mbps: require("rho_g_mbps", raw.rho_g_mbps)?,
            rho_m_mbps: require("rho_m_mbps", raw.rho_m_mbps)?,
            delay_bound_s: raw.delay_bound_s,
            violation_prob: raw.violation_prob,
            sigma_g_mult: raw.sigma_g_mult,
            sigma_m_mult: raw.sigma_m_mult,
            stream_seed: raw.stream_seed,
        });
    }
    Ok(ScenarioDoc {
        name,
        scheduler,
        tau_s,
        horizon_slots,
        seed,
        gamma,
        users,
    })
}

/// Renders a document in the text format `parse_text` reads back.
pub fn to_text(doc: &ScenarioDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", doc.name);
    let _ = writeln!(out, "scheduler = {}", doc.scheduler);
    let _ = writeln!(out, "tau_s = {}", doc.tau_s);
    let _ = writeln!(out, "horizon_slots = {}", doc.horizon_slots);
    let _ = writeln!(out, "seed = {}", doc.seed);
    let _ = writeln!(out, "gamma = {}", doc.gamma);
    for (index, user) in doc.users.iter().enumerate() {
        let _ = writeln!(out, "\n[user {}]", index + 1);
        let _ = writeln!(out, "traffic = {}", user.traffic);
        if let Some(mean) = user.mean_mbps {
            let _ = writeln!(out, "mean_mbps = {mean}");
        }
        if let Some(path) = &user.trace_path {
            let _ = writeln!(out, "trace_path = {path}");
        }
        let _ = writeln!(out, "cmax_mbps = {}", user.cmax_mbps);
        let _ = writeln!(out, "rho_g_mbps = {}", user.rho_g_mbps);
        let _ = writeln!(out, "rho_m_mbps = {}", user.rho_m_mbps);
        if let Some(bound) = user.delay_bound_s {
            let _ = writeln!(out, "delay_bound_s = {bound}");
        }
        if let Some(prob) = user.violation_prob {
            let _ = writeln!(out, "violation_prob = {prob}");
        }
        if let Some(mult) = user.sigma_g_mult {
            let _ = writeln!(out, "sigma_g_mult = {mult}");
        }
        if let Some(mult) = user.sigma_m_mult {
            let _ = writeln!(out, "sigma_m_mult = {mult}");
        }
        if let Some(seed) = user.stream_seed {
            let _ = writeln!(out, "stream_seed = {seed}");
        }
    }
    out
}

/// Parses a comma-separated scheduler list; `all` expands to every rule.
pub fn parse_scheduler_list(list: &str) -> Result<Vec<SchedulerKind>, ScenarioError> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(SchedulerKind::ALL.to_vec());
    }
    list.split(',')
        .map(str::trim)
        .filter(|name| !name.is_empty())
        .map(|name| {
            SchedulerKind::parse(name).ok_or_else(|| ScenarioError::UnknownScheduler(name.to_owned()))
        })
        .collect()
}

fn user(traffic: &str, cmax: f64, rho_g: f64, rho_m: f64) -> UserDoc {
    UserDoc {
        traffic: traffic.to_owned(),
        mean_mbps: None,
        trace_path: None,
        cmax_mbps: cmax,
        rho_g_mbps: rho_g,
        rho_m_mbps: rho_m,
        delay_bound_s: None,
        violation_prob: None,
        sigma_g_mult: None,
        sigma_m_mult: None,
        stream_seed: None,
    }
}

fn user_with_mean(traffic: &str, mean: f64, cmax: f64, rho_g: f64, rho_m: f64) -> UserDoc {
    UserDoc {
        mean_mbps: Some(mean),
        ..user(traffic, cmax, rho_g, rho_m)
    }
}

fn preset_doc(name: &str, users: Vec<UserDoc>) -> ScenarioDoc {
    ScenarioDoc {
        name: name.to_owned(),
        scheduler: "mw".to_owned(),
        tau_s: default_tau(),
        horizon_slots: default_horizon(),
        seed: default_seed(),
        gamma: 0.0,
        users,
    }
}

/// Names of the bundled presets, in order.
pub const PRESET_NAMES: [&str; 5] = ["s1", "s2", "s3", "s4", "s5"];

/// Returns a bundled preset by name.
///
/// * `s1` - five saturated users on unequal links; every bound active.
/// * `s2` - mixed video, self-similar, saturated and sinusoidal traffic.
/// * `s3` - `s2` with the large video flow swapped for a fast sine.
/// * `s4` - five slowly varying sine flows, including one whose upper
///   bound stays inactive at its cap.
/// * `s5` - `s4` with the fifth user replaced by an unbounded
///   self-similar flow (`[0, 0]`, both bounds disabled).
pub fn preset(name: &str) -> Option<ScenarioDoc> {
    let doc = match name.to_ascii_lowercase().as_str() {
        "s1" => preset_doc(
            "s1",
            vec![
                user("sat", 443.0, 150.0, 250.0),
                user("sat", 642.0, 250.0, 350.0),
                user("sat", 820.0, 350.0, 400.0),
                user("sat", 598.0, 150.0, 350.0),
                user("sat", 233.0, 50.0, 100.0),
            ],
        ),
        "s2" => preset_doc(
            "s2",
            vec![
                user_with_mean("video", 100.0, 300.0, 50.0, 150.0),
                user_with_mean("video", 300.0, 700.0, 250.0, 350.0),
                user("selfsimilar", 700.0, 150.0, 350.0),
                user("sat", 700.0, 150.0, 350.0),
                user_with_mean("sine2vs", 85.0, 240.0, 50.0, 120.0),
            ],
        ),
        "s3" => preset_doc(
            "s3",
            vec![
                user_with_mean("video", 100.0, 300.0, 50.0, 150.0),
                user_with_mean("sine2f", 300.0, 700.0, 250.0, 350.0),
                user("selfsimilar", 700.0, 150.0, 350.0),
                user("sat", 700.0, 150.0, 350.0),
                user_with_mean("sine2vs", 85.0, 240.0, 50.0, 120.0),
            ],
        ),
        "s4" => preset_doc(
            "s4",
            vec![
                user_with_mean("sine2vs", 200.0, 400.0, 150.0, 250.0),
                user_with_mean("sine2vs", 200.0, 400.0, 150.0, 250.0),
                user_with_mean("sine2vs", 275.0, 550.0, 250.0, 300.0),
                user_with_mean("sine2vs", 250.0, 500.0, 150.0, 350.0),
                user_with_mean("sine2vs", 225.0, 450.0, 50.0, 400.0),
            ],
        ),
        "s5" => preset_doc(
            "s5",
            vec![
                user_with_mean("sine2vs", 200.0, 400.0, 150.0, 250.0),
                user_with_mean("sine2vs", 200.0, 400.0, 150.0, 250.0),
                user_with_mean("sine2vs", 275.0, 550.0, 250.0, 300.0),
                user_with_mean("sine2vs", 250.0, 500.0, 150.0, 350.0),
                user("selfsimilar", 450.0, 0.0, 0.0),
            ],
        ),
        _ => return None,
    };
    Some(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two-user smoke scenario
name = smoke
scheduler = mlwdf
tau_s = 0.1
horizon_slots = 400
seed = 7
gamma = 0

[user 1]
traffic = sat
cmax_mbps = 400
rho_g_mbps = 50
rho_m_mbps = 150

[user 2]
traffic = sine2vs
mean_mbps = 80
cmax_mbps = 300
rho_g_mbps = 40
rho_m_mbps = 200
stream_seed = 11
";

    #[test]
    fn text_format_round_trips() {
        let doc = parse_text(SAMPLE).unwrap();
        assert_eq!(doc.name, "smoke");
        assert_eq!(doc.scheduler, "mlwdf");
        assert_eq!(doc.tau_s, 0.1);
        assert_eq!(doc.horizon_slots, 400);
        assert_eq!(doc.seed, 7);
        assert_eq!(doc.users.len(), 2);
        assert_eq!(doc.users[1].mean_mbps, Some(80.0));
        assert_eq!(doc.users[1].stream_seed, Some(11));
        assert_eq!(parse_text(&to_text(&doc)).unwrap(), doc);
    }

    #[test]
    fn json_mirror_round_trips() {
        let doc = parse_text(SAMPLE).unwrap();
        let json = serde_json::to_string_pretty(&doc).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioDoc>(&json).unwrap(), doc);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let missing_equals = "scheduler = mw\n[user 1]\ntraffic sat\n";
        let err = parse_text(missing_equals).unwrap_err();
        assert!(
            matches!(err, ScenarioError::Line { line: 3, .. }),
            "unexpected error {err}"
        );

        let bad_number = "scheduler = mw\ntau_s = fast\n";
        let err = parse_text(bad_number).unwrap_err();
        assert!(matches!(err, ScenarioError::Line { line: 2, .. }));
        assert!(err.to_string().contains("tau_s"));

        let out_of_order = "scheduler = mw\n[user 2]\n";
        let err = parse_text(out_of_order).unwrap_err();
        assert!(matches!(err, ScenarioError::Line { line: 2, .. }));

        let duplicate = "scheduler = mw\nseed = 1\nseed = 2\n";
        let err = parse_text(duplicate).unwrap_err();
        assert!(matches!(err, ScenarioError::Line { line: 3, .. }));
    }

    #[test]
    fn missing_required_fields_name_the_field() {
        let no_rho_m = "\
scheduler = mw

[user 1]
traffic = sat
cmax_mbps = 400
rho_g_mbps = 50
";
        let err = parse_text(no_rho_m).unwrap_err();
        assert!(
            err.to_string().contains("user 1: rho_m_mbps"),
            "unexpected error {err}"
        );

        let err = parse_text("tau_s = 0.05\n").unwrap_err();
        assert!(err.to_string().contains("scheduler"));
    }

    #[test]
    fn compile_converts_units_and_applies_defaults() {
        let doc = parse_text(SAMPLE).unwrap();
        let compiled = compile(&doc).unwrap();
        assert!(compiled.warnings.is_empty());
        let config = &compiled.config;
        assert_eq!(config.tau, 0.1);
        assert_eq!(config.horizon, 400);
        assert_eq!(config.seed, 7);
        assert_eq!(config.users[0].constraint.rho_g(), 50e6);
        assert_eq!(config.users[0].constraint.rho_m(), 150e6);
        assert_eq!(config.users[0].constraint.cmax(), 400e6);
        assert_eq!(config.users[1].traffic.seed, 11);
        assert_eq!(config.users[0].traffic.seed, 0);
        assert_eq!(config.users[0].qos.delay_bound, 0.5);
        assert_eq!(config.users[0].sigma_g_multiplier, 5.0);
    }

    #[test]
    fn zero_zero_bounds_disable_both_and_warn() {
        let mut doc = parse_text(SAMPLE).unwrap();
        doc.users[0].rho_g_mbps = 0.0;
        doc.users[0].rho_m_mbps = 0.0;
        let compiled = compile(&doc).unwrap();
        assert_eq!(compiled.warnings.len(), 1);
        assert!(compiled.warnings[0].contains("user 1"));
        let constraint = &compiled.config.users[0].constraint;
        assert!(!constraint.lower_active());
        assert!(!constraint.upper_active());
    }

    #[test]
    fn crossed_bounds_are_rejected() {
        let mut doc = parse_text(SAMPLE).unwrap();
        doc.users[0].rho_g_mbps = 200.0;
        doc.users[0].rho_m_mbps = 100.0;
        let err = compile(&doc).unwrap_err();
        assert!(err.to_string().contains("user 1"));
    }

    #[test]
    fn compile_rejects_unknown_traffic_and_scheduler() {
        let mut doc = parse_text(SAMPLE).unwrap();
        doc.users[0].traffic = "poisson".to_owned();
        assert!(compile(&doc).unwrap_err().to_string().contains("poisson"));

        let mut doc = parse_text(SAMPLE).unwrap();
        doc.scheduler = "wfq".to_owned();
        assert!(matches!(
            compile(&doc).unwrap_err(),
            ScenarioError::UnknownScheduler(name) if name == "wfq"
        ));
    }

    #[test]
    fn sine_traffic_requires_a_mean() {
        let mut doc = parse_text(SAMPLE).unwrap();
        doc.users[1].mean_mbps = None;
        let err = compile(&doc).unwrap_err();
        assert!(err.to_string().contains("user 2"));
        assert!(err.to_string().contains("mean_mbps"));
    }

    #[test]
    fn self_similar_mean_defaults_follow_the_bounds() {
        let mut doc = parse_text(SAMPLE).unwrap();
        doc.users[0].traffic = "selfsimilar".to_owned();
        let compiled = compile(&doc).unwrap();
        match &compiled.config.users[0].traffic.model {
            TrafficModel::SelfSimilar(params) => {
                assert!((params.mean_rate() - 0.7 * 150e6).abs() < 1e-6);
            }
            other => panic!("expected self-similar traffic, got {other:?}"),
        }

        doc.users[0].rho_g_mbps = 0.0;
        doc.users[0].rho_m_mbps = 0.0;
        let compiled = compile(&doc).unwrap();
        match &compiled.config.users[0].traffic.model {
            TrafficModel::SelfSimilar(params) => {
                assert!((params.mean_rate() - 0.25 * 400e6).abs() < 1e-6);
            }
            other => panic!("expected self-similar traffic, got {other:?}"),
        }
    }

    #[test]
    fn video_traffic_is_fixed_by_the_stream_seed() {
        let mut doc = parse_text(SAMPLE).unwrap();
        doc.users[0].traffic = "video".to_owned();
        doc.users[0].mean_mbps = Some(40.0);
        let first = compile(&doc).unwrap();
        doc.seed = 99;
        let reseeded = compile(&doc).unwrap();
        let trace_bits = |config: &SimConfig| match &config.users[0].traffic.model {
            TrafficModel::Trace(trace) => trace.clone(),
            other => panic!("expected a trace, got {other:?}"),
        };
        assert_eq!(trace_bits(&first.config), trace_bits(&reseeded.config));
    }

    #[test]
    fn presets_compile_and_s1_matches_its_published_bounds() {
        for name in PRESET_NAMES {
            let doc = preset(name).unwrap();
            assert_eq!(doc.name, name);
            assert_eq!(doc.horizon_slots, 12_000);
            assert_eq!(doc.tau_s, 0.05);
            assert_eq!(doc.seed, 1);
            assert_eq!(doc.users.len(), 5);
            let compiled = compile(&doc).unwrap();
            assert_eq!(compiled.config.users.len(), 5);
        }
        let s1 = preset("s1").unwrap();
        let bounds: Vec<(f64, f64, f64)> = s1
            .users
            .iter()
            .map(|u| (u.rho_g_mbps, u.rho_m_mbps, u.cmax_mbps))
            .collect();
        assert_eq!(
            bounds,
            vec![
                (150.0, 250.0, 443.0),
                (250.0, 350.0, 642.0),
                (350.0, 400.0, 820.0),
                (150.0, 350.0, 598.0),
                (50.0, 100.0, 233.0),
            ]
        );
        assert!(preset("s6").is_none());

        let s5 = compile(&preset("s5").unwrap()).unwrap();
        assert_eq!(s5.warnings.len(), 1);
        assert!(!s5.config.users[4].constraint.upper_active());
    }

    #[test]
    fn scheduler_lists_parse() {
        assert_eq!(parse_scheduler_list("all").unwrap(), SchedulerKind::ALL.to_vec());
        assert_eq!(
            parse_scheduler_list("mw, exp/pf").unwrap(),
            vec![SchedulerKind::Mw, SchedulerKind::ExpPf]
        );
        assert!(parse_scheduler_list("mw,bogus").is_err());
    }

    #[test]
    fn load_prefers_presets_then_files() {
        let doc = load("s1").unwrap();
        assert_eq!(doc.name, "s1");
        assert!(matches!(
            load("no-such-scenario").unwrap_err(),
            ScenarioError::UnknownScenario(_)
        ));

        let dir = std::env::temp_dir().join("xlsched-scenario-load-test");
        std::fs::create_dir_all(&dir).unwrap();
        let text_path = dir.join("mine.scn");
        std::fs::write(&text_path, SAMPLE).unwrap();
        let doc = load(text_path.to_str().unwrap()).unwrap();
        assert_eq!(doc.name, "smoke");

        let json_path = dir.join("mirror.json");
        std::fs::write(&json_path, serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(load(json_path.to_str().unwrap()).unwrap(), doc);
    }
}
