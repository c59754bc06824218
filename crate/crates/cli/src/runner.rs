//! Experiment dispatch. Every kind expands into independent cells that run
//! on the rayon pool; results are gathered in cell order before anything is
//! written, so artifacts never depend on scheduling.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use thq_core::constants::rad_to_hz;
use thq_core::density::{CMatrix, C64};
use thq_core::eb::{eb_rate, required_enhancement, spam_time_with, EbConfig, ILLUSTRATIVE_CHANNELS};
use thq_core::lindblad::{
    propagate_gate, rabi_experiment, ramsey_experiment, t1_experiment, GateOptions, GateProblem, NoiseModel,
    RabiConfig, RamseyConfig, T1Config,
};
use thq_core::magnus::MagnusProblem;
use thq_core::metrics::{all_metrics, bell_target};
use thq_core::optimize::{half_maximum_window, optimize, robustness_scan, OptimizerConfig};
use thq_core::physics::{ion_spacing, lamb_dicke_matrix, normal_modes, rabi_frequency, TrapModes};
use thq_core::pulse::{PulseFile, PulseHeader, PulseSequence};
use thq_core::{DensityMatrix, Error, HilbertSpace};

use crate::config::{ExperimentKind, GateSetting, ModeSource, RunConfig};
use crate::error::CliError;
use crate::output::{event, num, ArtifactSink, Table};

type CliResult<T> = Result<T, CliError>;

/// Headline numbers collected into `summary.csv`.
#[derive(Debug, Default)]
pub struct Summary {
    rows: Mutex<Vec<[String; 5]>>,
}

impl Summary {
    fn add(&self, experiment: ExperimentKind, cell: &str, quantity: &str, value: f64, unit: &str) {
        self.rows.lock().expect("summary lock").push([
            experiment.name().to_string(),
            cell.to_string(),
            quantity.to_string(),
            num(value),
            unit.to_string(),
        ]);
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["experiment", "cell", "quantity", "value", "unit"]);
        for r in self.rows.lock().expect("summary lock").iter() {
            t.push(r.to_vec());
        }
        t
    }
}

/// Runs every experiment of `cfg`, writing artifacts into `sink`.
pub fn execute(cfg: &RunConfig, sink: &ArtifactSink) -> CliResult<()> {
    let summary = Summary::default();
    let mut pulses = None;
    for &kind in &cfg.experiments {
        let start = Instant::now();
        event("experiment_start", serde_json::json!({ "experiment": kind.name() }));
        match kind {
            ExperimentKind::Modes => run_modes(cfg, sink, &summary)?,
            ExperimentKind::Rabi => run_rabi(cfg, sink, &summary)?,
            ExperimentKind::Ramsey => run_ramsey(cfg, sink, &summary)?,
            ExperimentKind::T1t2Scan => run_t1t2(cfg, sink, &summary)?,
            ExperimentKind::Metrics => run_metrics(cfg, sink)?,
            ExperimentKind::Eb => run_eb(cfg, sink, &summary)?,
            ExperimentKind::OptimizePulse | ExperimentKind::SimulateGate | ExperimentKind::RobustnessScan => {
                if pulses.is_none() {
                    pulses = Some(gate_pulses(cfg, sink, &summary)?);
                }
                let pulses = pulses.as_ref().expect("pulses computed");
                match kind {
                    ExperimentKind::SimulateGate => run_gates(cfg, pulses, sink, &summary)?,
                    ExperimentKind::RobustnessScan => run_robustness(cfg, pulses, sink, &summary)?,
                    _ => {}
                }
            }
        }
        event(
            "experiment_done",
            serde_json::json!({ "experiment": kind.name(), "seconds": start.elapsed().as_secs_f64() }),
        );
    }
    sink.write_table("summary.csv", &summary.table())
}

pub fn trap_modes(cfg: &RunConfig) -> thq_core::Result<TrapModes> {
    match cfg.modes.as_ref().ok_or_else(|| Error::Parse("no [trap] or [modes] section".into()))? {
        ModeSource::Trap { trap, projection } => {
            let modes = normal_modes(trap)?;
            let eta = lamb_dicke_matrix(&modes, &cfg.transition, *projection);
            Ok(modes.with_lamb_dicke(eta))
        }
        ModeSource::Explicit { frequencies, lamb_dicke } => {
            TrapModes::from_lamb_dicke(frequencies.clone(), lamb_dicke.clone())
        }
    }
}

/// Compact decimal used in file and column names.
fn tag(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn run_modes(cfg: &RunConfig, sink: &ArtifactSink, summary: &Summary) -> CliResult<()> {
    let modes = trap_modes(cfg)?;
    let mut header = vec!["mode".to_string(), "frequency_hz".to_string()];
    header.extend((0..modes.ion_count()).map(|j| format!("lamb_dicke_ion{}", j + 1)));
    let mut t = Table::new(&header);
    for p in 0..modes.mode_count() {
        let mut row = vec![p.to_string(), num(rad_to_hz(modes.frequencies[p]))];
        row.extend((0..modes.ion_count()).map(|j| num(modes.lamb_dicke[(j, p)])));
        t.push(row);
    }
    sink.write_table("modes.csv", &t)?;
    if let Some(ModeSource::Trap { trap, .. }) = &cfg.modes {
        if trap.ion_count == 2 {
            summary.add(ExperimentKind::Modes, "", "ion_spacing", ion_spacing(trap)?, "m");
        }
    }
    if let Some(laser) = &cfg.laser {
        let omega = rabi_frequency(laser, &cfg.transition)?;
        summary.add(ExperimentKind::Modes, "", "rabi_frequency", rad_to_hz(omega), "Hz");
    }
    Ok(())
}

/// (Γ_ge, Γ_l) cells with a column suffix naming whichever rate varies.
fn noise_cells(cfg: &RunConfig) -> Vec<(NoiseModel, String)> {
    let mut cells = Vec::new();
    for &gge in &cfg.decay_rates {
        for &gl in &cfg.dephasing_rates {
            let mut name = Vec::new();
            if cfg.decay_rates.len() > 1 {
                name.push(format!("gge_{}per_s", tag(gge)));
            }
            if cfg.dephasing_rates.len() > 1 {
                name.push(format!("gl_{}hz", tag(gl)));
            }
            cells.push((NoiseModel { decay_rate: gge, dephasing_rate: gl }, name.join("_")));
        }
    }
    cells
}

fn column(base: &str, suffix: &str) -> String {
    if suffix.is_empty() {
        base.to_string()
    } else {
        format!("{base}_{suffix}")
    }
}

/// Writes `time_s` plus one ρ_ee column per cell.
fn population_table(times: &[f64], columns: &[(String, Vec<f64>)]) -> Table {
    let mut header = vec!["time_s".to_string()];
    header.extend(columns.iter().map(|c| c.0.clone()));
    let mut t = Table::new(&header);
    for (i, &time) in times.iter().enumerate() {
        let mut row = vec![time];
        row.extend(columns.iter().map(|c| c.1[i]));
        t.push_numbers(&row);
    }
    t
}

fn run_rabi(cfg: &RunConfig, sink: &ArtifactSink, summary: &Summary) -> CliResult<()> {
    let r = cfg.rabi.as_ref().expect("checked at parse time");
    let omega = match r.rabi_frequency {
        Some(w) => w,
        None => rabi_frequency(cfg.laser.as_ref().expect("checked at parse time"), &cfg.transition)?,
    };
    let cells = noise_cells(cfg);
    let results = cells
        .par_iter()
        .map(|(noise, _)| {
            rabi_experiment(&RabiConfig {
                omega,
                detuning: r.detuning,
                noise: *noise,
                duration: r.duration,
                samples: r.samples,
            })
        })
        .collect::<thq_core::Result<Vec<_>>>()?;
    let columns: Vec<_> = cells
        .iter()
        .zip(&results)
        .map(|((_, s), res)| (column("excited_population", s), res.excited.clone()))
        .collect();
    check_populations("rabi", &columns)?;
    sink.write_table("rabi.csv", &population_table(&results[0].times, &columns))?;
    summary.add(ExperimentKind::Rabi, "", "rabi_frequency", rad_to_hz(omega), "Hz");
    for ((_, s), res) in cells.iter().zip(&results) {
        if let Some(t) = res.pi_time {
            summary.add(ExperimentKind::Rabi, s, "pi_time", t, "s");
        }
    }
    Ok(())
}

fn check_populations(what: &str, columns: &[(String, Vec<f64>)]) -> CliResult<()> {
    const TOL: f64 = 1e-8;
    for (name, v) in columns {
        if let Some(x) = v.iter().find(|&&x| !(-TOL..=1.0 + TOL).contains(&x)) {
            return Err(Error::Numerical(format!("{what} {name}: population {x} outside [0, 1]")).into());
        }
    }
    Ok(())
}

fn run_ramsey(cfg: &RunConfig, sink: &ArtifactSink, summary: &Summary) -> CliResult<()> {
    let r = cfg.ramsey.as_ref().expect("checked at parse time");
    let cells = noise_cells(cfg);
    let results = cells
        .par_iter()
        .map(|(noise, _)| {
            ramsey_experiment(&RamseyConfig {
                detuning: r.detuning,
                noise: *noise,
                duration: r.duration,
                samples: r.samples,
            })
        })
        .collect::<thq_core::Result<Vec<_>>>()?;
    let columns: Vec<_> = cells
        .iter()
        .zip(&results)
        .map(|((_, s), res)| (column("excited_population", s), res.excited.clone()))
        .collect();
    check_populations("ramsey", &columns)?;
    sink.write_table("ramsey.csv", &population_table(&results[0].times, &columns))?;
    for ((_, s), res) in cells.iter().zip(&results) {
        if let Some(t2) = res.t2 {
            summary.add(ExperimentKind::Ramsey, s, "t2", t2, "s");
        }
        if let Some(w) = res.frequency {
            summary.add(ExperimentKind::Ramsey, s, "fringe_frequency", rad_to_hz(w), "Hz");
        }
    }
    Ok(())
}

/// T1 and T2 over the (Γ_ge, Γ_l) grid. Durations scale with the expected
/// decay so every cell spans `decay_lengths` lifetimes.
fn run_t1t2(cfg: &RunConfig, sink: &ArtifactSink, summary: &Summary) -> CliResult<()> {
    let s = &cfg.t1t2;
    let cells = noise_cells(cfg);
    let results = cells
        .par_iter()
        .map(|(noise, _)| -> thq_core::Result<(f64, f64)> {
            if !(noise.decay_rate > 0.0) {
                return Err(Error::Domain("t1t2-scan needs a positive decay rate".into()));
            }
            let t1 = t1_experiment(&T1Config {
                noise: *noise,
                duration: s.decay_lengths / noise.decay_rate,
                samples: s.samples,
            })?
            .t1
            .expect("t1 fitted");
            let envelope = 2.0 * noise.dephasing_rate + 0.5 * noise.decay_rate;
            let duration = s.decay_lengths / envelope;
            let t2 = ramsey_experiment(&RamseyConfig {
                detuning: 2.0 * PI * s.fringes / duration,
                noise: *noise,
                duration,
                samples: s.samples,
            })?
            .t2
            .expect("t2 fitted");
            Ok((t1, t2))
        })
        .collect::<thq_core::Result<Vec<_>>>()?;
    let mut t = Table::new(&["decay_rate_per_s", "dephasing_rate_per_s", "t1_s", "t2_s"]);
    for ((noise, name), (t1, t2)) in cells.iter().zip(&results) {
        t.push_numbers(&[noise.decay_rate, noise.dephasing_rate, *t1, *t2]);
        summary.add(ExperimentKind::T1t2Scan, name, "t1", *t1, "s");
        summary.add(ExperimentKind::T1t2Scan, name, "t2", *t2, "s");
    }
    sink.write_table("t1t2.csv", &t)
}

fn werner(p: f64) -> DensityMatrix {
    let bell = bell_target().into_matrix();
    let mixed = CMatrix::identity(4, 4) * C64::new(0.25, 0.0);
    DensityMatrix::from_matrix_unchecked(bell * C64::new(p, 0.0) + mixed * C64::new(1.0 - p, 0.0))
}

fn run_metrics(cfg: &RunConfig, sink: &ArtifactSink) -> CliResult<()> {
    let target = bell_target();
    let mut t = Table::new(&["werner_p", "entropy", "fidelity", "negativity"]);
    for &p in &cfg.werner {
        let (s, f, n) = all_metrics(&werner(p), &target)?;
        t.push_numbers(&[p, s, f, n]);
    }
    sink.write_table("metrics_werner.csv", &t)
}

fn run_eb(cfg: &RunConfig, sink: &ArtifactSink, summary: &Summary) -> CliResult<()> {
    let e = cfg.eb.as_ref().expect("checked at parse time");
    let channels = match &e.channels {
        Some(p) => EbConfig::read(p)?,
        None => EbConfig::from_toml(ILLUSTRATIVE_CHANNELS)?,
    };
    let rate = eb_rate(&channels)?;
    let decay = cfg.transition.decay_rate;
    let spam = spam_time_with(rate / decay, decay, e.transfer)?;
    let mut header = vec!["eb_rate_per_s", "decay_rate_per_s", "enhancement", "effective_rate_per_s", "spam_time_s"];
    let mut row = vec![rate, decay, spam.enhancement, spam.effective_rate, spam.time];
    if let Some(target) = e.target_time {
        header.push("required_enhancement");
        row.push(required_enhancement(target, decay, e.transfer)?);
    }
    let mut t = Table::new(&header);
    t.push_numbers(&row);
    sink.write_table("eb.csv", &t)?;
    summary.add(ExperimentKind::Eb, "", "enhancement", spam.enhancement, "1");
    summary.add(ExperimentKind::Eb, "", "spam_time", spam.time, "s");
    Ok(())
}

/// A pulse for one (setting, Δ) pair.
#[derive(Debug, Clone)]
pub struct GateCell {
    pub setting: GateSetting,
    pub detuning: f64,
    pub name: String,
    pub pulse: PulseSequence,
}

fn gate_cell_name(cfg: &RunConfig, setting: &GateSetting, detuning: f64) -> String {
    if cfg.detunings.len() > 1 {
        format!("{}/delta_{}mhz", setting.label, tag(rad_to_hz(detuning) / 1e6))
    } else {
        setting.label.clone()
    }
}

fn header_for(modes: &TrapModes, tau: f64, detuning: f64, seed: Option<u64>) -> PulseHeader {
    PulseHeader {
        tau_s: tau,
        detuning_rad_s: detuning,
        mode_frequencies_rad_s: modes.frequencies.clone(),
        lamb_dicke: (0..modes.ion_count()).map(|j| modes.lamb_dicke.row(j).iter().copied().collect()).collect(),
        seed,
    }
}

/// Optimizes (or loads) one pulse per (setting, Δ) and writes the pulse
/// files and restart costs.
fn gate_pulses(cfg: &RunConfig, sink: &ArtifactSink, summary: &Summary) -> CliResult<Vec<GateCell>> {
    let modes = trap_modes(cfg)?;
    let jobs: Vec<(GateSetting, f64)> =
        cfg.settings.iter().flat_map(|s| cfg.detunings.iter().map(move |&d| (s.clone(), d))).collect();
    let reports = jobs
        .par_iter()
        .map(|(setting, detuning)| -> thq_core::Result<(PulseSequence, Option<Vec<f64>>, f64)> {
            let problem = MagnusProblem::from_modes(&modes, *detuning)?;
            if let Some(path) = &setting.pulse_file {
                let file = PulseFile::read(path)?;
                file.pulse.check_duration(setting.duration)?;
                if file.pulse.ion_count() != modes.ion_count() {
                    return Err(Error::Shape { expected: modes.ion_count(), got: file.pulse.ion_count() });
                }
                let cost = thq_core::magnus::cost(&file.pulse, &problem)?;
                return Ok((file.pulse, None, cost));
            }
            let ocfg = OptimizerConfig {
                segments: setting.segments,
                tau: setting.duration,
                amplitude_min: setting.amplitude_min,
                amplitude_max: setting.amplitude_max,
                restarts: setting.restarts,
                seed: cfg.seed,
                ..Default::default()
            };
            let report = optimize(&problem, &ocfg)?;
            if !report.converged {
                return Err(Error::Optimization { target: ocfg.cost_tol, best: report.summary.cost });
            }
            Ok((report.pulse, Some(report.restart_costs), report.summary.cost))
        })
        .collect::<thq_core::Result<Vec<_>>>()?;

    let mut costs = Table::new(&["setting", "detuning_hz", "restart", "cost"]);
    let mut cells = Vec::with_capacity(jobs.len());
    for ((setting, detuning), (pulse, restart_costs, cost)) in jobs.into_iter().zip(reports) {
        let name = gate_cell_name(cfg, &setting, detuning);
        if let Some(rc) = &restart_costs {
            for (i, c) in rc.iter().enumerate() {
                costs.push(vec![setting.label.clone(), num(rad_to_hz(detuning)), i.to_string(), num(*c)]);
            }
            let file = PulseFile {
                header: header_for(&modes, setting.duration, detuning, Some(cfg.seed)),
                pulse: pulse.clone(),
            };
            sink.write(&format!("{name}/pulse.toml"), file.to_toml()?.as_bytes())?;
        }
        summary.add(ExperimentKind::OptimizePulse, &name, "magnus_cost", cost, "1");
        event("pulse_ready", serde_json::json!({ "cell": name, "cost": cost }));
        cells.push(GateCell { setting, detuning, name, pulse });
    }
    if !costs.rows.is_empty() {
        sink.write_table("optimize.csv", &costs)?;
    }
    Ok(cells)
}

fn gate_options(cfg: &RunConfig) -> GateOptions {
    GateOptions {
        phase_per_step: cfg.gate.phase_per_step,
        truncation_tol: cfg.gate.truncation_tol,
        check_invariants: true,
        ..Default::default()
    }
}

fn gate_problem(
    cfg: &RunConfig,
    cell: &GateCell,
    modes: &TrapModes,
    noise: NoiseModel,
) -> thq_core::Result<GateProblem> {
    Ok(GateProblem {
        pulse: cell.pulse.clone(),
        modes: modes.clone(),
        laser_detuning: cell.detuning,
        drift: cfg.laser.map_or(0.0, |l| l.drift_offset),
        noise,
        space: HilbertSpace::new(modes.ion_count(), vec![cell.setting.fock_cutoff; modes.mode_count()])?,
        initial: None,
    })
}

/// Tables emitted for one simulated gate.
struct GateTables {
    metrics: Table,
    phonons: Table,
    checks: Table,
    last: [f64; 3],
    excitation: Vec<f64>,
}

fn simulate_cell(cfg: &RunConfig, problem: &GateProblem) -> thq_core::Result<GateTables> {
    let tau = problem.pulse.duration();
    let n = cfg.gate.samples;
    let grid: Vec<f64> = (0..n).map(|i| tau * i as f64 / (n - 1) as f64).collect();
    let modes = problem.modes.mode_count();
    let mut phonon_header = vec!["time_s".to_string()];
    phonon_header.extend((0..modes).map(|p| format!("mean_phonons_mode{}", p + 1)));
    phonon_header.extend((0..modes).map(|p| format!("excitation_mode{}", p + 1)));
    let mut out = GateTables {
        metrics: Table::new(&["time_s", "entropy", "fidelity", "negativity"]),
        phonons: Table::new(&phonon_header),
        checks: Table::new(&["time_s", "trace_error", "hermiticity_error", "min_eigenvalue"]),
        last: [0.0; 3],
        excitation: Vec::new(),
    };
    let target = bell_target();
    propagate_gate(problem, &gate_options(cfg), &grid, |snap| {
        let full = snap.full_state();
        let (s, f, neg) = all_metrics(&snap.reduced_state()?, &target)?;
        out.metrics.push_numbers(&[snap.time, s, f, neg]);
        let mut row = vec![snap.time];
        row.extend(snap.mean_phonons());
        out.excitation = snap.excitation_probability();
        row.extend(out.excitation.iter().copied());
        out.phonons.push_numbers(&row);
        let tr = full.trace();
        let trace_error = (tr.re - 1.0).abs().max(tr.im.abs());
        out.checks.push_numbers(&[snap.time, trace_error, full.hermiticity_error(), full.min_eigenvalue()]);
        out.last = [s, f, neg];
        Ok(())
    })?;
    Ok(out)
}

fn run_gates(cfg: &RunConfig, cells: &[GateCell], sink: &ArtifactSink, summary: &Summary) -> CliResult<()> {
    let modes = trap_modes(cfg)?;
    let noise = noise_cells(cfg);
    let jobs: Vec<(&GateCell, NoiseModel, String)> = cells
        .iter()
        .flat_map(|c| {
            noise.iter().map(move |(n, s)| {
                let name = if s.is_empty() { c.name.clone() } else { format!("{}/{}", c.name, s) };
                (c, *n, name)
            })
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|(cell, noise, name)| {
            let start = Instant::now();
            let tables = simulate_cell(cfg, &gate_problem(cfg, cell, &modes, *noise)?)?;
            event(
                "gate_done",
                serde_json::json!({ "cell": name, "fidelity": tables.last[1], "seconds": start.elapsed().as_secs_f64() }),
            );
            Ok(tables)
        })
        .collect::<thq_core::Result<Vec<_>>>()?;
    for ((_, _, name), tables) in jobs.iter().zip(&results) {
        sink.write_table(&format!("{name}/metrics.csv"), &tables.metrics)?;
        sink.write_table(&format!("{name}/phonons.csv"), &tables.phonons)?;
        sink.write_table(&format!("{name}/state_checks.csv"), &tables.checks)?;
        let [s, f, n] = tables.last;
        summary.add(ExperimentKind::SimulateGate, name, "final_entropy", s, "1");
        summary.add(ExperimentKind::SimulateGate, name, "final_fidelity", f, "1");
        summary.add(ExperimentKind::SimulateGate, name, "final_negativity", n, "1");
        let worst = tables.excitation.iter().copied().fold(0.0, f64::max);
        summary.add(ExperimentKind::SimulateGate, name, "final_max_mode_excitation", worst, "1");
    }
    Ok(())
}

fn run_robustness(cfg: &RunConfig, cells: &[GateCell], sink: &ArtifactSink, summary: &Summary) -> CliResult<()> {
    let modes = trap_modes(cfg)?;
    for cell in cells {
        let base = gate_problem(cfg, cell, &modes, NoiseModel::default())?;
        let curve = robustness_scan(&base, &cfg.drifts)?;
        let mut t = Table::new(&["drift_hz", "fidelity"]);
        for p in &curve {
            t.push_numbers(&[rad_to_hz(p.drift), p.fidelity]);
        }
        sink.write_table(&format!("{}/robustness.csv", cell.name), &t)?;
        let (lo, hi) = half_maximum_window(&curve)?;
        summary.add(ExperimentKind::RobustnessScan, &cell.name, "half_max_window_lower", rad_to_hz(lo), "Hz");
        summary.add(ExperimentKind::RobustnessScan, &cell.name, "half_max_window_upper", rad_to_hz(hi), "Hz");
        if let Some(p) = curve.iter().min_by(|a, b| a.drift.abs().total_cmp(&b.drift.abs())) {
            summary.add(ExperimentKind::RobustnessScan, &cell.name, "fidelity_at_zero_drift", p.fidelity, "1");
        }
        event("robustness_done", serde_json::json!({ "cell": cell.name, "window_hz": [rad_to_hz(lo), rad_to_hz(hi)] }));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn tags_are_compact() {
        assert_eq!(tag(0.1), "0.1");
        assert_eq!(tag(100.0), "100");
        assert_eq!(tag(2.04), "2.04");
        assert_eq!(tag(0.0), "0");
    }

    #[test]
    fn werner_endpoints() {
        let target = bell_target();
        let (s, f, n) = all_metrics(&werner(1.0), &target).unwrap();
        assert!((s - 1.0).abs() < 1e-9 && (f - 1.0).abs() < 1e-9 && (n - 0.5).abs() < 1e-9);
        let (_, f, n) = all_metrics(&werner(0.0), &target).unwrap();
        assert!((f - 0.25).abs() < 1e-9 && n.abs() < 1e-12);
    }

    #[test]
    fn noise_cell_names_follow_varied_rates() {
        let text = r#"
experiment = "t1t2-scan"
[noise]
decay_rate = "1e-3 1/s"
dephasing = ["0.1 Hz", "10 Hz"]
"#;
        let cfg = RunConfig::parse(text, std::path::Path::new(".")).unwrap();
        let names: Vec<_> = noise_cells(&cfg).into_iter().map(|c| c.1).collect();
        assert_eq!(names, vec!["gl_0.1hz", "gl_10hz"]);
    }

    #[test]
    fn explicit_modes_round_trip() {
        let text = r#"
experiment = "modes"
[modes]
frequencies = ["1.2 MHz", "2.08 MHz"]
lamb_dicke = [[0.1285, 0.0976], [0.1285, -0.0976]]
"#;
        let cfg = RunConfig::parse(text, std::path::Path::new(".")).unwrap();
        let modes = trap_modes(&cfg).unwrap();
        assert_eq!(modes.lamb_dicke, DMatrix::from_row_slice(2, 2, &[0.1285, 0.0976, 0.1285, -0.0976]));
    }
}
