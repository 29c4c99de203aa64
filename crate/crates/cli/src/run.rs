//! Subcommand runners. Each returns its full output in memory; nothing is
//! written until the run has succeeded.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use haps_ris::channel::snapshot;
use haps_ris::metrics::{delay_spread_upper_min, evaluate, to_db};
use haps_ris::oracle::{brute_force_gain, finite_diff_doppler};
use haps_ris::phases::{proposed_phase, reversed_phase, zeta_terms};
use haps_ris::{ChannelSnapshot, ElementIndex, MetricsReport, Scenario, Strategy};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ScenarioFile, StrategySet};
use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Step of the central-difference Doppler cross-check in `oracle`.
pub const ORACLE_FD_STEP: f64 = 1e-3;

/// Command-line overrides of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub strategy: Option<StrategySet>,
    pub reference: Option<ElementIndex>,
    pub time: Option<f64>,
    pub dump_elements: bool,
}

impl RunOptions {
    fn strategies(&self, file: &ScenarioFile) -> &'static [Strategy] {
        self.strategy.unwrap_or(file.strategy).strategies()
    }

    fn time(&self, file: &ScenarioFile) -> f64 {
        self.time.unwrap_or(file.snapshot_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// RIS length in metres for `sweep-dims`, time in seconds for
    /// `sweep-time`.
    pub sweep_var: f64,
    pub strategy: Strategy,
    pub p_count: usize,
    pub q_count: usize,
    pub gain_db: f64,
    pub doppler_hz: f64,
    pub delay_spread_s: f64,
    pub delay_upper_s: f64,
    /// Evaluation time of the whole sweep point; kept out of the CSV so
    /// that output is byte-reproducible.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Dims,
    Time,
}

impl SweepKind {
    pub fn command(self) -> &'static str {
        match self {
            SweepKind::Dims => "sweep-dims",
            SweepKind::Time => "sweep-time",
        }
    }

    fn variable(self) -> &'static str {
        match self {
            SweepKind::Dims => "ris_length_m",
            SweepKind::Time => "time_s",
        }
    }
}

pub fn build_scenario(
    file: &ScenarioFile,
    opts: &RunOptions,
    ris_length: f64,
) -> Result<Scenario, CliError> {
    let mut config = file.scenario_config(ris_length);
    if opts.reference.is_some() {
        config.reference = opts.reference;
    }
    let scenario = Scenario::new(config)?;
    for w in scenario.warnings() {
        log::warn!("a = {ris_length} m: {w}");
    }
    Ok(scenario)
}

fn assignment_metrics(
    snap: &ChannelSnapshot<'_>,
    strategy: Strategy,
    guard: f64,
) -> Result<MetricsReport, CliError> {
    let asg = match strategy {
        Strategy::Proposed => proposed_phase(snap, snap.scenario().reference())?,
        _ => reversed_phase(snap),
    };
    let report = evaluate(snap, &asg, guard)?;
    let context = || {
        format!(
            "t = {} s, {}x{} elements, {strategy}",
            snap.t(),
            report.p_count,
            report.q_count
        )
    };
    for (metric, value) in [
        ("gain", report.gain_linear),
        ("Doppler spread", report.doppler_spread),
        ("delay spread", report.delay_spread),
        ("delay spread bound", report.delay_spread_upper),
    ] {
        if !value.is_finite() {
            return Err(CliError::NonFinite {
                metric,
                context: context(),
            });
        }
    }
    if report.wrap_flagged > 0 {
        log::info!(
            "{}: {} element(s) near a phase wrap left out of the Doppler spread",
            context(),
            report.wrap_flagged
        );
    }
    Ok(report)
}

fn point_rows(
    scenario: &Scenario,
    t: f64,
    sweep_var: f64,
    strategies: &[Strategy],
    guard: f64,
) -> Result<Vec<SweepRow>, CliError> {
    let started = Instant::now();
    let snap = snapshot(scenario, t)?;
    let reports = strategies
        .iter()
        .map(|&s| assignment_metrics(&snap, s, guard))
        .collect::<Result<Vec<_>, _>>()?;
    let wall_time = started.elapsed();
    log::debug!("sweep point {sweep_var}: {:?}", wall_time);
    Ok(reports
        .into_iter()
        .map(|r| SweepRow {
            sweep_var,
            strategy: r.strategy,
            p_count: r.p_count,
            q_count: r.q_count,
            gain_db: r.gain_db.unwrap_or(f64::NEG_INFINITY),
            doppler_hz: r.doppler_spread,
            delay_spread_s: r.delay_spread,
            delay_upper_s: r.delay_spread_upper,
            wall_time,
        })
        .collect())
}

fn require_lengths(file: &ScenarioFile) -> Result<(), CliError> {
    if file.ris_lengths.is_empty() {
        return Err(CliError::config(
            "sweep.ris_lengths",
            "must list at least one RIS length",
        ));
    }
    Ok(())
}

fn flatten(chunks: Vec<Vec<SweepRow>>) -> Vec<SweepRow> {
    chunks.into_iter().flatten().collect()
}

/// Metrics at the snapshot time for every RIS length, in input order.
pub fn sweep_dims(file: &ScenarioFile, opts: &RunOptions) -> Result<Vec<SweepRow>, CliError> {
    require_lengths(file)?;
    let t = opts.time(file);
    let strategies = opts.strategies(file);
    let chunks = file
        .ris_lengths
        .par_iter()
        .map(|&a| {
            let scenario = build_scenario(file, opts, a)?;
            point_rows(&scenario, t, a, strategies, file.wrap_guard)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(flatten(chunks))
}

/// Metrics over the time grid for every RIS length. Rows are ordered by
/// length, then time, then strategy.
pub fn sweep_time(file: &ScenarioFile, opts: &RunOptions) -> Result<Vec<SweepRow>, CliError> {
    require_lengths(file)?;
    let strategies = opts.strategies(file);
    let times = file.time_grid.samples();
    let scenarios = file
        .ris_lengths
        .iter()
        .map(|&a| build_scenario(file, opts, a))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<(&Scenario, f64)> = scenarios
        .iter()
        .flat_map(|s| times.iter().map(move |&t| (s, t)))
        .collect();
    let chunks = points
        .par_iter()
        .map(|&(s, t)| point_rows(s, t, t, strategies, file.wrap_guard))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(flatten(chunks))
}

/// Scientific notation with 12 significant digits; `-inf` for a zero gain.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x == f64::NEG_INFINITY {
        "-inf".to_owned()
    } else if x == f64::INFINITY {
        "inf".to_owned()
    } else {
        "nan".to_owned()
    }
}

/// Bumped whenever the column set or its order changes.
pub const CSV_SCHEMA: u32 = 1;

pub const CSV_COLUMNS: &str =
    "sweep_var,strategy,P,Q,gain_db,doppler_hz,delay_spread_s,delay_upper_s";

pub fn render_csv(kind: SweepKind, file: &ScenarioFile, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# haps-ris {TOOL_VERSION} {} schema={CSV_SCHEMA} sweep_var={} config_sha256={}",
        kind.command(),
        kind.variable(),
        file.content_hash
    );
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.sweep_var),
            r.strategy,
            r.p_count,
            r.q_count,
            fmt_float(r.gain_db),
            fmt_float(r.doppler_hz),
            fmt_float(r.delay_spread_s),
            fmt_float(r.delay_upper_s),
        );
    }
    out
}

/// Rounds to 12 significant digits for JSON output.
pub fn json_float(x: f64) -> Value {
    if x.is_finite() {
        let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
        json!(rounded)
    } else {
        json!(fmt_float(x))
    }
}

fn report_json(r: &MetricsReport) -> Value {
    json!({
        "strategy": r.strategy.as_str(),
        "gain_linear": json_float(r.gain_linear),
        "gain_db": r.gain_db.map_or(Value::Null, json_float),
        "max_gain_linear": json_float(r.max_gain_linear),
        "max_gain_db": json_float(to_db(r.max_gain_linear)),
        "doppler_spread_hz": json_float(r.doppler_spread),
        "doppler_reference_vs_rest_hz": json_float(r.doppler_reference_vs_rest),
        "doppler_among_rest_hz": json_float(r.doppler_among_rest),
        "delay_spread_s": json_float(r.delay_spread),
        "delay_upper_s": json_float(r.delay_spread_upper),
        "wrap_flagged": r.wrap_flagged,
    })
}

fn header_json(command: &str, file: &ScenarioFile, scenario: &Scenario, t: f64) -> Value {
    let reference = scenario.reference();
    json!({
        "tool": "haps-ris",
        "version": TOOL_VERSION,
        "command": command,
        "config_sha256": file.content_hash,
        "t_s": json_float(t),
        "ris_length_m": json_float(scenario.config().ris_length),
        "ris_width_m": json_float(scenario.config().ris_width),
        "P": scenario.p_count(),
        "Q": scenario.q_count(),
        "reference": { "p": reference.p, "q": reference.q },
        "warnings": scenario.warnings().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
    })
}

/// All metrics at one instant for the `[scenario]` RIS, one report per
/// strategy, plus the closed-form delay-spread bound of the proposed design.
pub fn snapshot_report(file: &ScenarioFile, opts: &RunOptions) -> Result<Value, CliError> {
    let scenario = build_scenario(file, opts, file.single_length()?)?;
    let t = opts.time(file);
    let snap = snapshot(&scenario, t)?;
    let reports = opts
        .strategies(file)
        .iter()
        .map(|&s| assignment_metrics(&snap, s, file.wrap_guard))
        .collect::<Result<Vec<_>, _>>()?;
    let zeta = zeta_terms(&snap, scenario.reference(), 0.0)?;
    let closed_form = delay_spread_upper_min(&snap, &zeta)?;

    let mut out = header_json("snapshot", file, &scenario, t);
    out["reports"] = reports.iter().map(report_json).collect();
    out["delay_upper_closed_form_s"] = json_float(closed_form);
    if opts.dump_elements {
        let proposed = proposed_phase(&snap, scenario.reference())?;
        let zeta_by_offset: Vec<_> = {
            let mut v = vec![None; snap.elements().len()];
            for e in &zeta.entries {
                v[snap.elements().offset(e.index)] = Some(e);
            }
            v
        };
        out["elements"] = snap
            .elements()
            .iter()
            .zip(proposed.psi().iter())
            .zip(&zeta_by_offset)
            .map(|((e, &psi), z)| {
                json!({
                    "p": e.index.p,
                    "q": e.index.q,
                    "gamma": json_float(e.gamma),
                    "tau_s": json_float(e.tau),
                    "tau_rate": json_float(e.tau_rate),
                    "psi_proposed_rad": json_float(psi),
                    "zeta_min": z.map(|z| z.zeta_min),
                    "zeta_relaxed": z.map(|z| z.zeta_relaxed),
                })
            })
            .collect();
    }
    Ok(out)
}

/// Exhaustive discrete-phase search on a small RIS, compared with the
/// closed-form design, plus a finite-difference check of both Doppler
/// spreads.
pub fn oracle_report(file: &ScenarioFile, opts: &RunOptions) -> Result<Value, CliError> {
    let scenario = build_scenario(file, opts, file.single_length()?)?;
    let t = opts.time(file);
    let levels = file.oracle_levels;
    let snap = snapshot(&scenario, t)?;
    let search = brute_force_gain(&snap, levels)?;
    let proposed = proposed_phase(&snap, scenario.reference())?;
    let closed = assignment_metrics(&snap, Strategy::Proposed, file.wrap_guard)?;
    let reversed = assignment_metrics(&snap, Strategy::Reversed, file.wrap_guard)?;
    let max_gain = closed.max_gain_linear;
    let floor = max_gain * (std::f64::consts::PI / levels as f64).cos().powi(2);

    let before = snapshot(&scenario, t - ORACLE_FD_STEP)?;
    let after = snapshot(&scenario, t + ORACLE_FD_STEP)?;
    let fd_proposed =
        finite_diff_doppler(&before, &after, Strategy::Proposed, scenario.reference())?;
    let fd_reversed =
        finite_diff_doppler(&before, &after, Strategy::Reversed, scenario.reference())?;

    let mut out = header_json("oracle", file, &scenario, t);
    out["levels"] = json!(levels);
    out["states_searched"] = json!(search.states_searched);
    out["best_levels"] = json!(search.best_levels);
    out["best_phases_rad"] = search.best_phases.iter().map(|&x| json_float(x)).collect();
    out["best_gain_linear"] = json_float(search.best_gain);
    out["best_gain_db"] = json_float(to_db(search.best_gain));
    out["closed_form_gain_linear"] = json_float(closed.gain_linear);
    out["closed_form_gain_db"] = closed.gain_db.map_or(Value::Null, json_float);
    out["closed_form_phases_rad"] = proposed.psi().iter().map(|&x| json_float(x)).collect();
    out["max_gain_linear"] = json_float(max_gain);
    out["quantization_floor_linear"] = json_float(floor);
    out["best_within_bounds"] = json!(
        search.best_gain <= max_gain * (1.0 + 1e-12) && search.best_gain >= floor * (1.0 - 1e-12)
    );
    out["doppler"] = json!({
        "fd_step_s": ORACLE_FD_STEP,
        "proposed_hz": json_float(closed.doppler_spread),
        "proposed_fd_hz": json_float(fd_proposed),
        "reversed_hz": json_float(reversed.doppler_spread),
        "reversed_fd_hz": json_float(fd_reversed),
    });
    Ok(out)
}

pub fn render_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Writes `contents` next to `path` and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
