//! Run matrices, parameter sweeps and metric reports.
//!
//! Every entry point takes a [`ScenarioDoc`], overrides the fields the
//! caller varies (scheduler, modifier on/off, sigma multiplier, slot
//! length), runs the engine, and writes metric tables through [`csvio`].
//! Runs are sequential and deterministic: the same document and options
//! produce byte-identical files.

use crate::csvio::{self, CsvError, Table};
use crate::scenario::{compile, ScenarioDoc, ScenarioError};
use std::path::{Path, PathBuf};
use thiserror::Error;
use xlsched::engine::{ConfigError, Engine, SimConfig, SlotRecord, TbrmMode};
use xlsched::metrics::{m1, CapacityTrace, MetricsError, MetricsReport, DEFAULT_WARMUP_SLOTS};
use xlsched::SchedulerKind;

/// Burst allowance (in mean-slot units) at which sweeps report max-bound
/// slot conformance.
pub const SWEEP_X_MAX: f64 = 5.0;
/// Burst allowance at which sweeps report min-bound slot conformance.
pub const SWEEP_X_MIN: f64 = 0.5;

#[derive(Debug, Error)]
pub enum OrchestrateError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no schedulers selected")]
    NoSchedulers,
    #[error("sweep needs at least one value")]
    EmptySweep,
    #[error("sigma multiplier must be positive and finite, got {0}")]
    InvalidMultiplier(f64),
    #[error("slot length must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("warmup of {warmup} slots consumes the whole {horizon}-slot horizon")]
    WarmupTooLong { warmup: usize, horizon: u64 },
    #[error("rates file has {found} users but the scenario has {expected}")]
    UserCountMismatch { expected: usize, found: usize },
}

/// Burst-allowance grid for max-bound slot conformance: 1 to 10 in halves.
pub fn x_max_grid() -> Vec<f64> {
    (0..19).map(|i| 1.0 + i as f64 / 2.0).collect()
}

/// Burst-allowance grid for min-bound slot conformance: 0.05 to 1 in
/// twentieths, inside the (0, 1] span the deficit bucket reacts to.
pub fn x_min_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

/// Window grid for the windowed metrics: 1 to 40 slots.
pub fn window_grid() -> Vec<usize> {
    (1..=40).collect()
}

/// Default sigma-multiplier sweep: ten log-spaced points over 1e-2..1e4.
pub fn sigma_multiplier_grid() -> Vec<f64> {
    (0..10)
        .map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 9.0))
        .collect()
}

/// Default slot-length sweep (seconds).
pub fn tau_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.5, 1.0]
}

/// Which modifier settings a command covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbrmChoice {
    On,
    Off,
    Both,
}

impl TbrmChoice {
    pub fn parse(text: &str) -> Option<Self> {
        match text.to_ascii_lowercase().as_str() {
            "on" => Some(TbrmChoice::On),
            "off" => Some(TbrmChoice::Off),
            "both" => Some(TbrmChoice::Both),
            _ => None,
        }
    }

    /// The `tbrm_enabled` values to run, in output order.
    pub fn settings(self) -> &'static [bool] {
        match self {
            TbrmChoice::On => &[true],
            TbrmChoice::Off => &[false],
            TbrmChoice::Both => &[true, false],
        }
    }
}

fn tbrm_label(enabled: bool) -> &'static str {
    if enabled {
        "on"
    } else {
        "off"
    }
}

/// Scenario names appear in file names; anything exotic becomes `-`.
fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "scenario".to_owned()
    } else {
        cleaned
    }
}

/// Compiles and runs one configuration of the document.
pub fn simulate(
    doc: &ScenarioDoc,
    scheduler: SchedulerKind,
    tbrm_enabled: bool,
    mode: TbrmMode,
    seed: Option<u64>,
) -> Result<(SimConfig, Vec<SlotRecord>, Vec<String>), OrchestrateError> {
    let mut doc = doc.clone();
    doc.scheduler = scheduler.name().to_owned();
    if let Some(seed) = seed {
        doc.seed = seed;
    }
    let compiled = compile(&doc)?;
    let mut config = compiled.config;
    config.tbrm_enabled = tbrm_enabled;
    config.tbrm_mode = mode;
    let records = Engine::run(config.clone())?;
    Ok((config, records, compiled.warnings))
}

/// Per-user assigned-rate traces with the warmup dropped.
pub fn capacity_traces(
    config: &SimConfig,
    records: &[SlotRecord],
    warmup: usize,
) -> Result<Vec<CapacityTrace>, OrchestrateError> {
    if warmup as u64 >= config.horizon {
        return Err(OrchestrateError::WarmupTooLong {
            warmup,
            horizon: config.horizon,
        });
    }
    let mut traces = Vec::with_capacity(config.users.len());
    for (user, user_config) in config.users.iter().enumerate() {
        let rates: Vec<f64> = records.iter().map(|r| r.assigned_rate_bps[user]).collect();
        let trace = CapacityTrace::new(rates, config.tau, user_config.constraint)?
            .without_warmup(warmup)?;
        traces.push(trace);
    }
    Ok(traces)
}

/// Mean over users whose bound is enabled; 0 when every bound is disabled.
fn enabled_mean(values: &[f64], disabled: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (value, &skip) in values.iter().zip(disabled) {
        if !skip {
            sum += value;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// The six metric tables a run produces, in output order.
const METRIC_KINDS: [(&str, &str, &str); 6] = [
    ("m1", "max", "x"),
    ("m1", "min", "x"),
    ("m2", "max", "window_slots"),
    ("m2", "min", "window_slots"),
    ("m3", "max", "window_slots"),
    ("m3", "min", "window_slots"),
];

fn kind_series(report: &MetricsReport, kind: usize) -> (&[f64], bool) {
    match kind {
        0 => (&report.m1_max, report.max_disabled),
        1 => (&report.m1_min, report.min_disabled),
        2 => (&report.m2_max, report.max_disabled),
        3 => (&report.m2_min, report.min_disabled),
        4 => (&report.m3_max, report.max_disabled),
        5 => (&report.m3_min, report.min_disabled),
        _ => unreachable!("six metric kinds"),
    }
}

fn kind_xs(kind: usize, xs_max: &[f64], xs_min: &[f64], windows: &[usize]) -> Vec<f64> {
    match kind {
        0 => xs_max.to_vec(),
        1 => xs_min.to_vec(),
        _ => windows.iter().map(|&w| w as f64).collect(),
    }
}

/// One metric table: the grid column, one column per user, and the mean
/// over users with the bound enabled.
fn metric_table(
    x_name: &str,
    xs: &[f64],
    per_user: &[&[f64]],
    disabled: &[bool],
    comments: Vec<String>,
) -> (Table, Vec<f64>) {
    let mut columns = vec![x_name.to_owned()];
    columns.extend((1..=per_user.len()).map(|u| format!("user{u}")));
    columns.push("mean".to_owned());
    let mut rows = Vec::with_capacity(xs.len());
    let mut means = Vec::with_capacity(xs.len());
    for (row_index, &x) in xs.iter().enumerate() {
        let values: Vec<f64> = per_user.iter().map(|series| series[row_index]).collect();
        let mean = enabled_mean(&values, disabled);
        means.push(mean);
        let mut row = Vec::with_capacity(columns.len());
        row.push(x);
        row.extend(values);
        row.push(mean);
        rows.push(row);
    }
    (
        Table {
            comments,
            columns,
            rows,
        },
        means,
    )
}

fn write_file(
    out_dir: &Path,
    name: String,
    table: &Table,
    files: &mut Vec<PathBuf>,
) -> Result<(), OrchestrateError> {
    let path = out_dir.join(name);
    table.write_to(&path)?;
    files.push(path);
    Ok(())
}

fn create_out_dir(out_dir: &Path) -> Result<(), OrchestrateError> {
    std::fs::create_dir_all(out_dir).map_err(|source| OrchestrateError::Io {
        path: out_dir.display().to_string(),
        source,
    })
}

/// Everything a command reports back: the files written and any compile
/// warnings.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Options shared by the full-run command.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub schedulers: Vec<SchedulerKind>,
    pub tbrm: TbrmChoice,
    pub mode: TbrmMode,
    pub seed: Option<u64>,
    pub warmup: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            schedulers: SchedulerKind::ALL.to_vec(),
            tbrm: TbrmChoice::Both,
            mode: TbrmMode::Multiplicative,
            seed: None,
            warmup: DEFAULT_WARMUP_SLOTS,
        }
    }
}

/// Runs the scheduler x modifier matrix: per run a rate file and six metric
/// tables, plus per-setting aggregates across schedulers.
pub fn run_regular(
    doc: &ScenarioDoc,
    options: &RunOptions,
    out_dir: &Path,
) -> Result<RunSummary, OrchestrateError> {
    if options.schedulers.is_empty() {
        return Err(OrchestrateError::NoSchedulers);
    }
    create_out_dir(out_dir)?;
    let xs_max = x_max_grid();
    let xs_min = x_min_grid();
    let windows = window_grid();
    let scenario = sanitize(&doc.name);
    let mut summary = RunSummary::default();

    for &enabled in options.tbrm.settings() {
        let label = tbrm_label(enabled);
        // agg[kind] collects each scheduler's mean curve.
        let mut agg: Vec<Vec<(SchedulerKind, Vec<f64>)>> = vec![Vec::new(); METRIC_KINDS.len()];
        for &scheduler in &options.schedulers {
            let (config, records, warnings) =
                simulate(doc, scheduler, enabled, options.mode, options.seed)?;
            if summary.warnings.is_empty() {
                summary.warnings = warnings;
            }
            let run_comments = vec![
                format!(
                    "scenario {}, scheduler {}, tbrm {label}",
                    doc.name,
                    scheduler.name()
                ),
                format!(
                    "tau_s = {}, horizon_slots = {}, seed = {}",
                    config.tau, config.horizon, config.seed
                ),
            ];
            write_rates_file(
                out_dir,
                format!("{scenario}-{}-tbrm-{label}-rates.csv", scheduler.name()),
                &run_comments,
                &records,
                &mut summary.files,
            )?;

            let traces = capacity_traces(&config, &records, options.warmup)?;
            let reports = traces
                .iter()
                .map(|t| MetricsReport::compute(t, &xs_max, &xs_min, &windows))
                .collect::<Result<Vec<_>, _>>()?;

            for (kind, &(metric, bound, x_name)) in METRIC_KINDS.iter().enumerate() {
                let series: Vec<&[f64]> = reports.iter().map(|r| kind_series(r, kind).0).collect();
                let disabled: Vec<bool> =
                    reports.iter().map(|r| kind_series(r, kind).1).collect();
                let mut comments = run_comments.clone();
                comments.push(format!(
                    "{metric} against the {bound} bound; first {} slots dropped as warmup",
                    options.warmup
                ));
                comments.push(
                    "mean averages users with the bound enabled; disabled users report 0"
                        .to_owned(),
                );
                let (table, means) =
                    metric_table(x_name, &kind_xs(kind, &xs_max, &xs_min, &windows), &series, &disabled, comments);
                write_file(
                    out_dir,
                    format!(
                        "{scenario}-{}-tbrm-{label}-{metric}-{bound}.csv",
                        scheduler.name()
                    ),
                    &table,
                    &mut summary.files,
                )?;
                agg[kind].push((scheduler, means));
            }
        }

        for (kind, &(metric, bound, x_name)) in METRIC_KINDS.iter().enumerate() {
            let xs = kind_xs(kind, &xs_max, &xs_min, &windows);
            let mut columns = vec![x_name.to_owned()];
            columns.extend(agg[kind].iter().map(|(s, _)| s.name().to_owned()));
            columns.push("mean".to_owned());
            let mut rows = Vec::with_capacity(xs.len());
            for (row_index, &x) in xs.iter().enumerate() {
                let mut row = vec![x];
                let values: Vec<f64> =
                    agg[kind].iter().map(|(_, means)| means[row_index]).collect();
                row.extend(values.iter());
                row.push(values.iter().sum::<f64>() / values.len() as f64);
                rows.push(row);
            }
            let table = Table {
                comments: vec![
                    format!("scenario {}, tbrm {label}: {metric} against the {bound} bound", doc.name),
                    "scheduler columns are that run's mean over users with the bound enabled"
                        .to_owned(),
                    "mean averages the scheduler columns".to_owned(),
                ],
                columns,
                rows,
            };
            write_file(
                out_dir,
                format!("{scenario}-aggregate-tbrm-{label}-{metric}-{bound}.csv"),
                &table,
                &mut summary.files,
            )?;
        }
    }
    Ok(summary)
}

fn write_rates_file(
    out_dir: &Path,
    name: String,
    comments: &[String],
    records: &[SlotRecord],
    files: &mut Vec<PathBuf>,
) -> Result<(), OrchestrateError> {
    let path = out_dir.join(name);
    csvio::write_rates(&path, comments, records)?;
    files.push(path);
    Ok(())
}

/// Sweep rows for one scheduler: `(m1 max at x = 5, m1 min at x = 0.5)`
/// per multiplier, each a mean over users with that bound enabled.
pub fn sigma_rows(
    doc: &ScenarioDoc,
    scheduler: SchedulerKind,
    multipliers: &[f64],
    mode: TbrmMode,
    seed: Option<u64>,
    warmup: usize,
) -> Result<Vec<(f64, f64)>, OrchestrateError> {
    if multipliers.is_empty() {
        return Err(OrchestrateError::EmptySweep);
    }
    for &multiplier in multipliers {
        if !multiplier.is_finite() || multiplier <= 0.0 {
            return Err(OrchestrateError::InvalidMultiplier(multiplier));
        }
    }
    let mut rows = Vec::with_capacity(multipliers.len());
    for &multiplier in multipliers {
        let mut swept = doc.clone();
        for user in &mut swept.users {
            user.sigma_g_mult = Some(multiplier);
            user.sigma_m_mult = Some(multiplier);
        }
        let (config, records, _) = simulate(&swept, scheduler, true, mode, seed)?;
        rows.push(conformance_pair(&config, &records, warmup)?);
    }
    Ok(rows)
}

/// Sweep rows for one scheduler across slot lengths. Bucket scales keep
/// their multipliers, so `sigma = multiplier * tau * rho` tracks `tau`.
pub fn tau_rows(
    doc: &ScenarioDoc,
    scheduler: SchedulerKind,
    taus: &[f64],
    mode: TbrmMode,
    seed: Option<u64>,
    warmup: usize,
) -> Result<Vec<(f64, f64)>, OrchestrateError> {
    if taus.is_empty() {
        return Err(OrchestrateError::EmptySweep);
    }
    for &tau in taus {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(OrchestrateError::InvalidTau(tau));
        }
    }
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut swept = doc.clone();
        swept.tau_s = tau;
        let (config, records, _) = simulate(&swept, scheduler, true, mode, seed)?;
        rows.push(conformance_pair(&config, &records, warmup)?);
    }
    Ok(rows)
}

fn conformance_pair(
    config: &SimConfig,
    records: &[SlotRecord],
    warmup: usize,
) -> Result<(f64, f64), OrchestrateError> {
    let traces = capacity_traces(config, records, warmup)?;
    let mut maxes = Vec::with_capacity(traces.len());
    let mut mins = Vec::with_capacity(traces.len());
    let mut max_disabled = Vec::with_capacity(traces.len());
    let mut min_disabled = Vec::with_capacity(traces.len());
    for trace in &traces {
        let upper = m1(trace, SWEEP_X_MAX)?;
        let lower = m1(trace, SWEEP_X_MIN)?;
        maxes.push(upper.max);
        mins.push(lower.min);
        max_disabled.push(upper.max_disabled);
        min_disabled.push(lower.min_disabled);
    }
    Ok((
        enabled_mean(&maxes, &max_disabled),
        enabled_mean(&mins, &min_disabled),
    ))
}

/// Options shared by both sweep commands.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub schedulers: Vec<SchedulerKind>,
    pub mode: TbrmMode,
    pub seed: Option<u64>,
    pub warmup: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            schedulers: SchedulerKind::ALL.to_vec(),
            mode: TbrmMode::Multiplicative,
            seed: None,
            warmup: DEFAULT_WARMUP_SLOTS,
        }
    }
}

fn write_sweep_files(
    doc: &ScenarioDoc,
    param_name: &str,
    sweep_label: &str,
    params: &[f64],
    per_scheduler: &[(SchedulerKind, Vec<(f64, f64)>)],
    out_dir: &Path,
) -> Result<RunSummary, OrchestrateError> {
    let scenario = sanitize(&doc.name);
    let mut summary = RunSummary::default();
    let comments = |scope: String| {
        vec![
            format!("scenario {}, {scope}", doc.name),
            format!(
                "m1_max is m1 against the max bound at x = {SWEEP_X_MAX}; m1_min against the min bound at x = {SWEEP_X_MIN}"
            ),
            "each value is a mean over users with that bound enabled".to_owned(),
        ]
    };
    for (scheduler, rows) in per_scheduler {
        let table = Table {
            comments: comments(format!("scheduler {}, {sweep_label} sweep", scheduler.name())),
            columns: vec![
                param_name.to_owned(),
                "m1_max".to_owned(),
                "m1_min".to_owned(),
            ],
            rows: params
                .iter()
                .zip(rows)
                .map(|(&p, &(max, min))| vec![p, max, min])
                .collect(),
        };
        write_file(
            out_dir,
            format!("{scenario}-{}-sweep-{sweep_label}.csv", scheduler.name()),
            &table,
            &mut summary.files,
        )?;
    }

    let mut columns = vec![param_name.to_owned()];
    columns.extend(per_scheduler.iter().map(|(s, _)| format!("{}_max", s.name())));
    columns.push("mean_max".to_owned());
    columns.extend(per_scheduler.iter().map(|(s, _)| format!("{}_min", s.name())));
    columns.push("mean_min".to_owned());
    let mut rows = Vec::with_capacity(params.len());
    for (index, &param) in params.iter().enumerate() {
        let maxes: Vec<f64> = per_scheduler.iter().map(|(_, r)| r[index].0).collect();
        let mins: Vec<f64> = per_scheduler.iter().map(|(_, r)| r[index].1).collect();
        let mut row = vec![param];
        row.extend(maxes.iter());
        row.push(maxes.iter().sum::<f64>() / maxes.len() as f64);
        row.extend(mins.iter());
        row.push(mins.iter().sum::<f64>() / mins.len() as f64);
        rows.push(row);
    }
    let table = Table {
        comments: comments(format!("{sweep_label} sweep aggregated over schedulers")),
        columns,
        rows,
    };
    write_file(
        out_dir,
        format!("{scenario}-aggregate-sweep-{sweep_label}.csv"),
        &table,
        &mut summary.files,
    )?;
    Ok(summary)
}

/// Runs the sigma-multiplier sweep and writes per-scheduler tables plus an
/// aggregate.
pub fn sweep_sigma(
    doc: &ScenarioDoc,
    multipliers: &[f64],
    options: &SweepOptions,
    out_dir: &Path,
) -> Result<RunSummary, OrchestrateError> {
    if options.schedulers.is_empty() {
        return Err(OrchestrateError::NoSchedulers);
    }
    create_out_dir(out_dir)?;
    let mut per_scheduler = Vec::with_capacity(options.schedulers.len());
    for &scheduler in &options.schedulers {
        let rows = sigma_rows(doc, scheduler, multipliers, options.mode, options.seed, options.warmup)?;
        per_scheduler.push((scheduler, rows));
    }
    write_sweep_files(doc, "sigma_multiplier", "sigma", multipliers, &per_scheduler, out_dir)
}

/// Runs the slot-length sweep and writes per-scheduler tables plus an
/// aggregate.
pub fn sweep_tau(
    doc: &ScenarioDoc,
    taus: &[f64],
    options: &SweepOptions,
    out_dir: &Path,
) -> Result<RunSummary, OrchestrateError> {
    if options.schedulers.is_empty() {
        return Err(OrchestrateError::NoSchedulers);
    }
    create_out_dir(out_dir)?;
    let mut per_scheduler = Vec::with_capacity(options.schedulers.len());
    for &scheduler in &options.schedulers {
        let rows = tau_rows(doc, scheduler, taus, options.mode, options.seed, options.warmup)?;
        per_scheduler.push((scheduler, rows));
    }
    write_sweep_files(doc, "tau_s", "tau", taus, &per_scheduler, out_dir)
}

/// Recomputes the six metric tables from a previously written rate file,
/// judging it against the bounds of `doc`.
pub fn recompute_metrics(
    doc: &ScenarioDoc,
    rates_path: &Path,
    warmup: usize,
    out_dir: &Path,
) -> Result<RunSummary, OrchestrateError> {
    create_out_dir(out_dir)?;
    let rates = csvio::read_rates(rates_path)?;
    let compiled = compile(doc)?;
    let config = compiled.config;
    if rates.n_users() != config.users.len() {
        return Err(OrchestrateError::UserCountMismatch {
            expected: config.users.len(),
            found: rates.n_users(),
        });
    }
    if warmup >= rates.n_slots() {
        return Err(OrchestrateError::WarmupTooLong {
            warmup,
            horizon: rates.n_slots() as u64,
        });
    }
    let xs_max = x_max_grid();
    let xs_min = x_min_grid();
    let windows = window_grid();
    let mut reports = Vec::with_capacity(rates.n_users());
    for (user, series) in rates.rates.iter().enumerate() {
        let trace = CapacityTrace::new(series.clone(), config.tau, config.users[user].constraint)?
            .without_warmup(warmup)?;
        reports.push(MetricsReport::compute(&trace, &xs_max, &xs_min, &windows)?);
    }
    let stem = rates_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("rates");
    let mut summary = RunSummary {
        files: Vec::new(),
        warnings: compiled.warnings,
    };
    for (kind, &(metric, bound, x_name)) in METRIC_KINDS.iter().enumerate() {
        let series: Vec<&[f64]> = reports.iter().map(|r| kind_series(r, kind).0).collect();
        let disabled: Vec<bool> = reports.iter().map(|r| kind_series(r, kind).1).collect();
        let comments = vec![
            format!(
                "{metric} against the {bound} bound of scenario {}, recomputed from {}",
                doc.name,
                rates_path.display()
            ),
            format!("first {warmup} slots dropped as warmup"),
            "mean averages users with the bound enabled; disabled users report 0".to_owned(),
        ];
        let (table, _) = metric_table(
            x_name,
            &kind_xs(kind, &xs_max, &xs_min, &windows),
            &series,
            &disabled,
            comments,
        );
        write_file(
            out_dir,
            format!("{}-{metric}-{bound}.csv", sanitize(stem)),
            &table,
            &mut summary.files,
        )?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_text;

    fn small_doc() -> ScenarioDoc {
        parse_text(
            "\
name = tiny
scheduler = mw
tau_s = 0.05
horizon_slots = 120
seed = 3

[user 1]
traffic = sat
cmax_mbps = 400
rho_g_mbps = 50
rho_m_mbps = 150

[user 2]
traffic = sine2vs
mean_mbps = 120
cmax_mbps = 300
rho_g_mbps = 40
rho_m_mbps = 300
",
        )
        .unwrap()
    }

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("xlsched-orchestrate-{tag}"));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn grids_match_their_published_shapes() {
        let xs = x_max_grid();
        assert_eq!(xs.len(), 19);
        assert_eq!(xs[0], 1.0);
        assert_eq!(xs[1], 1.5);
        assert_eq!(*xs.last().unwrap(), 10.0);

        let xs = x_min_grid();
        assert_eq!(xs.len(), 20);
        assert_eq!(xs[0], 0.05);
        assert_eq!(*xs.last().unwrap(), 1.0);

        let windows = window_grid();
        assert_eq!(windows.len(), 40);
        assert_eq!(windows[0], 1);
        assert_eq!(windows[39], 40);

        let sigmas = sigma_multiplier_grid();
        assert_eq!(sigmas.len(), 10);
        assert!((sigmas[0] - 1e-2).abs() < 1e-12);
        assert!((sigmas[9] - 1e4).abs() < 1e-8);
        assert!(sigmas.windows(2).all(|w| w[0] < w[1]));

        assert_eq!(tau_grid(), vec![0.05, 0.1, 0.2, 0.5, 1.0]);
    }

    #[test]
    fn run_matrix_is_byte_deterministic() {
        let doc = small_doc();
        let options = RunOptions {
            schedulers: vec![SchedulerKind::Mw, SchedulerKind::Md],
            ..RunOptions::default()
        };
        let dir_a = temp_dir("det-a");
        let dir_b = temp_dir("det-b");
        let summary_a = run_regular(&doc, &options, &dir_a).unwrap();
        let summary_b = run_regular(&doc, &options, &dir_b).unwrap();
        // 2 schedulers x 2 settings x 7 files + 2 x 6 aggregates.
        assert_eq!(summary_a.files.len(), 40);
        assert_eq!(summary_a.files.len(), summary_b.files.len());
        for (a, b) in summary_a.files.iter().zip(&summary_b.files) {
            assert_eq!(a.file_name(), b.file_name());
            let bytes_a = std::fs::read(a).unwrap();
            let bytes_b = std::fs::read(b).unwrap();
            assert_eq!(bytes_a, bytes_b, "{} differs", a.display());
        }
    }

    #[test]
    fn aggregate_mean_matches_scheduler_columns() {
        let doc = small_doc();
        let options = RunOptions {
            schedulers: vec![SchedulerKind::Mw, SchedulerKind::Mlwdf, SchedulerKind::Md],
            tbrm: TbrmChoice::On,
            ..RunOptions::default()
        };
        let dir = temp_dir("agg");
        run_regular(&doc, &options, &dir).unwrap();

        let aggregate = csvio::read_table(&dir.join("tiny-aggregate-tbrm-on-m1-max.csv")).unwrap();
        assert_eq!(aggregate.columns, vec!["x", "mw", "mlwdf", "md", "mean"]);
        for row in &aggregate.rows {
            let mean = (row[1] + row[2] + row[3]) / 3.0;
            assert!((row[4] - mean).abs() <= 1e-12);
        }

        // The scheduler column equals the mean column of that run's table.
        let mw = csvio::read_table(&dir.join("tiny-mw-tbrm-on-m1-max.csv")).unwrap();
        assert_eq!(mw.columns, vec!["x", "user1", "user2", "mean"]);
        for (agg_row, mw_row) in aggregate.rows.iter().zip(&mw.rows) {
            assert_eq!(agg_row[0], mw_row[0]);
            assert_eq!(agg_row[1], *mw_row.last().unwrap());
        }
    }

    #[test]
    fn disabled_bounds_are_left_out_of_means() {
        // User 2's max bound is disabled (rho_m = cmax), so the m1-max mean
        // column must equal user 1 alone.
        let doc = small_doc();
        let dir = temp_dir("disabled-mean");
        let options = RunOptions {
            schedulers: vec![SchedulerKind::Mw],
            tbrm: TbrmChoice::On,
            ..RunOptions::default()
        };
        run_regular(&doc, &options, &dir).unwrap();
        let table = csvio::read_table(&dir.join("tiny-mw-tbrm-on-m1-max.csv")).unwrap();
        for row in &table.rows {
            assert_eq!(row[2], 0.0, "disabled bound must report 0");
            assert_eq!(row[3], row[1]);
        }
    }

    #[test]
    fn sigma_sweep_at_the_default_multiplier_equals_the_plain_run() {
        let doc = small_doc();
        let rows = sigma_rows(
            &doc,
            SchedulerKind::Mw,
            &[5.0],
            TbrmMode::Multiplicative,
            None,
            DEFAULT_WARMUP_SLOTS,
        )
        .unwrap();
        let (config, records, _) =
            simulate(&doc, SchedulerKind::Mw, true, TbrmMode::Multiplicative, None).unwrap();
        let plain = conformance_pair(&config, &records, DEFAULT_WARMUP_SLOTS).unwrap();
        assert_eq!(rows[0], plain);
    }

    #[test]
    fn tau_sweep_at_the_document_slot_length_equals_the_plain_run() {
        let doc = small_doc();
        let rows = tau_rows(
            &doc,
            SchedulerKind::Md,
            &[doc.tau_s],
            TbrmMode::Multiplicative,
            Some(9),
            DEFAULT_WARMUP_SLOTS,
        )
        .unwrap();
        let (config, records, _) =
            simulate(&doc, SchedulerKind::Md, true, TbrmMode::Multiplicative, Some(9)).unwrap();
        let plain = conformance_pair(&config, &records, DEFAULT_WARMUP_SLOTS).unwrap();
        assert_eq!(rows[0], plain);
    }

    #[test]
    fn sweeps_validate_their_inputs() {
        let doc = small_doc();
        assert!(matches!(
            sigma_rows(&doc, SchedulerKind::Mw, &[], TbrmMode::Multiplicative, None, 0),
            Err(OrchestrateError::EmptySweep)
        ));
        assert!(matches!(
            sigma_rows(&doc, SchedulerKind::Mw, &[1.0, -2.0], TbrmMode::Multiplicative, None, 0),
            Err(OrchestrateError::InvalidMultiplier(m)) if m == -2.0
        ));
        assert!(matches!(
            tau_rows(&doc, SchedulerKind::Mw, &[0.0], TbrmMode::Multiplicative, None, 0),
            Err(OrchestrateError::InvalidTau(_))
        ));
        let options = RunOptions {
            schedulers: Vec::new(),
            ..RunOptions::default()
        };
        assert!(matches!(
            run_regular(&doc, &options, &temp_dir("no-sched")),
            Err(OrchestrateError::NoSchedulers)
        ));
        let options = RunOptions {
            warmup: 500,
            ..RunOptions::default()
        };
        assert!(matches!(
            run_regular(&doc, &options, &temp_dir("warmup")),
            Err(OrchestrateError::WarmupTooLong { warmup: 500, .. })
        ));
    }

    #[test]
    fn sweep_files_aggregate_their_scheduler_columns() {
        let doc = small_doc();
        let dir = temp_dir("sweep-files");
        let options = SweepOptions {
            schedulers: vec![SchedulerKind::Mw, SchedulerKind::Md],
            ..SweepOptions::default()
        };
        let summary = sweep_tau(&doc, &[0.05, 0.1], &options, &dir).unwrap();
        assert_eq!(summary.files.len(), 3);
        let aggregate = csvio::read_table(&dir.join("tiny-aggregate-sweep-tau.csv")).unwrap();
        assert_eq!(
            aggregate.columns,
            vec!["tau_s", "mw_max", "md_max", "mean_max", "mw_min", "md_min", "mean_min"]
        );
        let mw = csvio::read_table(&dir.join("tiny-mw-sweep-tau.csv")).unwrap();
        assert_eq!(mw.columns, vec!["tau_s", "m1_max", "m1_min"]);
        for (agg_row, mw_row) in aggregate.rows.iter().zip(&mw.rows) {
            assert_eq!(agg_row[1], mw_row[1]);
            assert_eq!(agg_row[4], mw_row[2]);
            assert!((agg_row[3] - (agg_row[1] + agg_row[2]) / 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn recomputed_metrics_match_the_run_that_wrote_the_rates() {
        let doc = small_doc();
        let dir = temp_dir("recompute");
        let options = RunOptions {
            schedulers: vec![SchedulerKind::Mlwdf],
            tbrm: TbrmChoice::On,
            ..RunOptions::default()
        };
        run_regular(&doc, &options, &dir).unwrap();
        let rates_path = dir.join("tiny-mlwdf-tbrm-on-rates.csv");
        let out = temp_dir("recompute-out");
        let summary =
            recompute_metrics(&doc, &rates_path, DEFAULT_WARMUP_SLOTS, &out).unwrap();
        assert_eq!(summary.files.len(), 6);
        for (metric, bound) in [("m1", "max"), ("m2", "min"), ("m3", "max")] {
            let original =
                csvio::read_table(&dir.join(format!("tiny-mlwdf-tbrm-on-{metric}-{bound}.csv")))
                    .unwrap();
            let recomputed = csvio::read_table(
                &out.join(format!("tiny-mlwdf-tbrm-on-rates-{metric}-{bound}.csv")),
            )
            .unwrap();
            assert_eq!(original.rows, recomputed.rows);
        }

        let err = recompute_metrics(&doc, &rates_path, 120, &out).unwrap_err();
        assert!(matches!(err, OrchestrateError::WarmupTooLong { .. }));
    }
}
