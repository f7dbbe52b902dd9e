//! Backend dispatch, output management, and parameter sweeps.

use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{decay_fit, detector_spectrum, localization_fraction};
use crate::boundstate::{atom_weight_scan, solve_bound_state, verify_stationarity, ScanOutcome};
use crate::config::{Config, Preset, SweepAxis};
use crate::error::Result;
use crate::kspace::{run_kspace, CouplingMode};
use crate::model::{validate, Backend, ExcitationSpec};
use crate::output::{
    boundstate_profile_csv, k_trajectory_csv, localization_csv, metrics_csv,
    real_trajectory_csv, reduced_trajectory_csv, scan_csv, sha256_hex, spectrum_csv, OutputDir,
    RunManifest,
};
use crate::real::run_real;
use crate::reduced::run_reduced;
use crate::trajectory::Trajectory;

/// Everything needed to execute one run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config: Config,
    pub backend: Backend,
    pub preset: Option<Preset>,
    pub out_dir: PathBuf,
}

/// A completed run: its manifest plus the scalar metrics it computed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub metrics: Vec<(String, f64)>,
}

impl RunOutcome {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Resolve the output directory: an explicit path wins, then the
/// `CROW_OUT_DIR` environment variable as a base, then `./crow-out`.
pub fn resolve_out_dir(explicit: Option<PathBuf>, name: &str) -> PathBuf {
    if let Some(path) = explicit {
        return path;
    }
    let base = std::env::var_os("CROW_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crow-out"));
    base.join(name)
}

/// Validate, execute, and persist one run.
pub fn execute_run(spec: &RunSpec) -> Result<RunOutcome> {
    let config = &spec.config;
    let report = validate(
        &config.model,
        &config.lattice,
        &config.excitation,
        &config.integrator,
        spec.backend,
    );
    let report = report.into_result()?;

    let started = Instant::now();
    let mut dir = OutputDir::create(&spec.out_dir)?;
    let mut metrics: Vec<(String, f64)> = Vec::new();
    let mut notes: Vec<String> = report
        .warnings
        .iter()
        .map(|w| format!("warning: {w}"))
        .collect();
    if let Some(preset) = spec.preset {
        notes.extend(preset.provenance_notes());
    }
    let mut n_inj = None;

    match spec.backend {
        Backend::Real => {
            let traj = run_real(
                &config.model,
                &config.lattice,
                &config.excitation,
                &config.integrator,
            )?;
            n_inj = traj.n_inj;
            let scale = normalization_scale(&traj);
            if let Some(n) = n_inj {
                notes.push(format!(
                    "probabilities in data files are divided by the injected norm n_inj = {n:.9e}"
                ));
            }
            dir.write_file("trajectory.csv", &real_trajectory_csv(&traj, scale))?;
            write_real_analysis(&mut dir, &mut metrics, config, &traj, scale)?;
        }
        Backend::Kspace | Backend::KspaceExact => {
            let mode = if spec.backend == Backend::Kspace {
                CouplingMode::ModeSeparated
            } else {
                CouplingMode::Exact
            };
            let run = run_kspace(
                &config.model,
                &config.lattice,
                &config.excitation,
                &config.integrator,
                mode,
            )?;
            dir.write_file("trajectory_k.csv", &k_trajectory_csv(&run.k))?;
            dir.write_file("trajectory_real.csv", &real_trajectory_csv(&run.real, 1.0))?;
            let chi_peak = run.k.chi_prob.iter().cloned().fold(0.0, f64::max);
            metrics.push(("chi2_peak".into(), chi_peak));
            metrics.push(("norm_final".into(), *run.k.norm.last().unwrap()));
            write_real_analysis(&mut dir, &mut metrics, config, &run.real, 1.0)?;
        }
        Backend::Reduced => {
            let run = run_reduced(
                &config.model,
                &config.lattice,
                &config.excitation,
                &config.integrator,
            )?;
            notes.push(
                "real-space reconstruction distributes each collective amplitude equally over \
                 its mode slots; it is faithful only for atom-sourced components"
                    .to_string(),
            );
            dir.write_file(
                "trajectory_reduced.csv",
                &reduced_trajectory_csv(&run.reduced),
            )?;
            dir.write_file("trajectory_real.csv", &real_trajectory_csv(&run.real, 1.0))?;
            let chi_peak = run.reduced.chi_prob.iter().cloned().fold(0.0, f64::max);
            metrics.push(("chi2_peak".into(), chi_peak));
            metrics.push(("norm_s_final".into(), *run.reduced.norm_s.last().unwrap()));
            metrics.push(("norm_0_final".into(), *run.reduced.norm_0.last().unwrap()));
            write_real_analysis(&mut dir, &mut metrics, config, &run.real, 1.0)?;
        }
        Backend::Boundstate => {
            let bs = solve_bound_state(&config.model, config.lattice.d)?;
            let residual = verify_stationarity(&bs, &config.model)?;
            dir.write_file("profile.csv", &boundstate_profile_csv(&bs, config.model.eta))?;
            metrics.push(("omega_mod".into(), bs.omega_mod));
            metrics.push(("atom_weight".into(), bs.atom_weight));
            metrics.push(("photon_weight".into(), bs.photon_weight));
            metrics.push(("localization_share".into(), bs.localization_share()));
            metrics.push(("stationarity_residual".into(), residual));
        }
    }

    dir.write_file("metrics.csv", &metrics_csv(&metrics))?;
    dir.write_file(
        "metrics.txt",
        &human_summary(spec, &metrics, n_inj, &notes),
    )?;

    let manifest = RunManifest {
        config_digest: sha256_hex(config.to_toml().as_bytes()),
        backend: spec.backend.name().to_string(),
        preset: spec.preset.map(|p| p.name().to_string()),
        output_dir: spec.out_dir.display().to_string(),
        timing_secs: started.elapsed().as_secs_f64(),
        n_inj,
        notes,
        files: dir.files.clone(),
    };
    std::fs::write(spec.out_dir.join("manifest.toml"), manifest.to_toml())?;
    Ok(RunOutcome { manifest, metrics })
}

fn normalization_scale(traj: &Trajectory) -> f64 {
    match traj.n_inj {
        Some(n) if n > 0.0 => 1.0 / n,
        _ => 1.0,
    }
}

fn write_real_analysis(
    dir: &mut OutputDir,
    metrics: &mut Vec<(String, f64)>,
    config: &Config,
    traj: &Trajectory,
    scale: f64,
) -> Result<()> {
    let metric = localization_fraction(
        traj,
        config.analysis.window_halfwidth,
        config.analysis.threshold_fraction,
    )?;
    dir.write_file("localization.csv", &localization_csv(&metric, scale))?;
    metrics.push(("p_loc_peak".into(), metric.peak * scale));
    metrics.push(("p_loc_peak_time".into(), metric.peak_time));
    metrics.push(("retention_time".into(), metric.retention_time));
    let xi2_peak = traj.atom_prob.iter().cloned().fold(0.0, f64::max);
    metrics.push(("xi2_peak".into(), xi2_peak * scale));
    metrics.push(("xi2_final".into(), traj.atom_prob.last().unwrap() * scale));

    if let Some((t_start, t_end)) = config.analysis.late_fit_t {
        match decay_fit(traj, t_start, t_end) {
            Ok(fit) => {
                metrics.push(("late_decay_rate".into(), fit.rate));
                metrics.push(("late_decay_goodness".into(), fit.goodness));
            }
            Err(e) => metrics.push((format!("late_decay_rate_error({e})"), f64::NAN)),
        }
    }

    if let (Some(site), Some(range)) = (config.analysis.detector_site, config.analysis.spectrum_t)
    {
        let spectrum = detector_spectrum(traj, site, range)?;
        let scaled: Vec<(f64, f64)> = spectrum.iter().map(|&(w, s)| (w, s * scale)).collect();
        dir.write_file("spectrum.csv", &spectrum_csv(&scaled))?;
    }
    Ok(())
}

fn human_summary(
    spec: &RunSpec,
    metrics: &[(String, f64)],
    n_inj: Option<f64>,
    notes: &[String],
) -> String {
    let mut buf = String::new();
    let c = &spec.config;
    writeln!(buf, "backend: {}", spec.backend).unwrap();
    if let Some(p) = spec.preset {
        writeln!(buf, "preset: {}", p.name()).unwrap();
    }
    writeln!(
        buf,
        "model: eta = {}, omega_mod = {}, kappa = {}, coupled sites {:?}",
        c.model.eta, c.model.omega_mod, c.model.kappa, c.model.coupled_sites
    )
    .unwrap();
    writeln!(
        buf,
        "lattice: m in [{}, {}], d = {}",
        c.lattice.m_min, c.lattice.m_max, c.lattice.d
    )
    .unwrap();
    match &c.excitation {
        ExcitationSpec::BoundaryDrive { drive_site, t0, tau } => writeln!(
            buf,
            "excitation: boundary drive at {drive_site}, t0 = {t0}, tau = {tau}"
        )
        .unwrap(),
        ExcitationSpec::InitialWavepacket { m0, delta_m, k0 } => writeln!(
            buf,
            "excitation: wavepacket at m0 = {m0}, delta_m = {delta_m}, k0 = {k0}"
        )
        .unwrap(),
    }
    writeln!(
        buf,
        "integrator: dt = {}, t_end = {}, stride = {}",
        c.integrator.dt, c.integrator.t_end, c.integrator.snapshot_stride
    )
    .unwrap();
    if let Some(n) = n_inj {
        writeln!(buf, "injected norm: {n:.9e}").unwrap();
    }
    buf.push('\n');
    for (name, value) in metrics {
        writeln!(buf, "{name}: {value:.9e}").unwrap();
    }
    if !notes.is_empty() {
        buf.push('\n');
        for note in notes {
            writeln!(buf, "note: {note}").unwrap();
        }
    }
    buf
}

/// One row of a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub retention_time: f64,
    pub late_decay_rate: f64,
    pub localization_share: f64,
    pub status: String,
}

/// Outcome of a sweep: per-value run results in value order plus the
/// aggregated rows.
#[derive(Debug)]
pub struct SweepOutcome {
    pub runs: Vec<Result<RunOutcome>>,
    pub rows: Vec<SweepRow>,
}

/// Run `base` once per value of `axis`, in parallel, merging results by
/// value order. Individual failures are recorded per row and the sweep
/// continues.
pub fn execute_sweep(base: &RunSpec, axis: SweepAxis, values: &[f64]) -> Result<SweepOutcome> {
    let mut dir = OutputDir::create(&base.out_dir)?;
    let runs: Vec<Result<RunOutcome>> = values
        .par_iter()
        .map(|&value| {
            let mut config = base.config.clone();
            axis.apply(&mut config, value)?;
            let spec = RunSpec {
                config,
                backend: base.backend,
                preset: base.preset,
                out_dir: base.out_dir.join(format!("{}-{}", axis.name(), value)),
            };
            execute_run(&spec)
        })
        .collect();

    let rows: Vec<SweepRow> = values
        .iter()
        .zip(&runs)
        .map(|(&value, run)| {
            let mut config = base.config.clone();
            let localization_share = if axis.apply(&mut config, value).is_ok() {
                match solve_bound_state(&config.model, config.lattice.d) {
                    Ok(bs) => bs.localization_share(),
                    Err(_) => f64::NAN,
                }
            } else {
                f64::NAN
            };
            match run {
                Ok(outcome) => SweepRow {
                    value,
                    retention_time: outcome.metric("retention_time").unwrap_or(f64::NAN),
                    late_decay_rate: outcome.metric("late_decay_rate").unwrap_or(f64::NAN),
                    localization_share,
                    status: "ok".to_string(),
                },
                Err(e) => SweepRow {
                    value,
                    retention_time: f64::NAN,
                    late_decay_rate: f64::NAN,
                    localization_share,
                    status: format!("error: {e}").replace('\n', " "),
                },
            }
        })
        .collect();

    let mut table = format!(
        "{},retention_time,late_decay_rate,localization_share,status\n",
        axis.name()
    );
    for row in &rows {
        writeln!(
            table,
            "{:.9e},{:.9e},{:.9e},{:.9e},{}",
            row.value, row.retention_time, row.late_decay_rate, row.localization_share, row.status
        )
        .unwrap();
    }
    dir.write_file("sweep.csv", &table)?;

    // An omega scan of the stationary state complements boundstate sweeps.
    if base.backend == Backend::Boundstate && axis == SweepAxis::OmegaMod {
        let rows = atom_weight_scan(&base.config.model, base.config.lattice.d, values);
        let has_singularity = rows
            .iter()
            .any(|r| matches!(r.outcome, ScanOutcome::Singular { .. }));
        dir.write_file("scan.csv", &scan_csv(&rows))?;
        if has_singularity {
            eprintln!("note: scan contains singular rows (exact resonances), marked with NaN");
        }
    }

    let manifest = RunManifest {
        config_digest: sha256_hex(base.config.to_toml().as_bytes()),
        backend: base.backend.name().to_string(),
        preset: base.preset.map(|p| p.name().to_string()),
        output_dir: base.out_dir.display().to_string(),
        timing_secs: 0.0,
        n_inj: None,
        notes: vec![format!(
            "sweep over {} with {} values; per-value outputs in subdirectories",
            axis.name(),
            values.len()
        )],
        files: dir.files.clone(),
    };
    std::fs::write(base.out_dir.join("manifest.toml"), manifest.to_toml())?;

    Ok(SweepOutcome { runs, rows })
}

/// Convenience used by tests: resolve a preset into a run spec rooted at
/// `out_base`.
pub fn preset_spec(preset: Preset, backend: Option<Backend>, out_base: &Path) -> RunSpec {
    let backend = backend.unwrap_or_else(|| preset.default_backend());
    RunSpec {
        config: preset.config(),
        backend,
        preset: Some(preset),
        out_dir: out_base.join(format!("{}-{}", preset.name(), backend.name())),
    }
}
