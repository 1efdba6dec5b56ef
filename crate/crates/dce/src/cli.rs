//! Subcommand implementations: resolve a config, run the physics, write
//! self-describing CSV artifacts into the output directory.

use crate::analysis::{
    compare_with_msa, estimate_oscillation_freq, fit_exponential, sweep_drive_frequency,
    GrowthFit,
};
use crate::bogoliubov::{project_series, ProjectionSample};
use crate::config::{ExperimentConfig, InitMode};
use crate::dynamics::{evolve, in_mode_state, max_step, vacuum_superposition_state, Trajectory};
use crate::error::{Error, Result};
use crate::msa::{classify_regime, Regime, SlowFlow};
use crate::params::CavityParams;
use crate::spectrum::{gap_profile, Spectrum};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Files written by a command, in write order.
#[derive(Debug, Default)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    /// Human-readable summary printed to stdout by the binary.
    pub summary: String,
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_csv(path: &Path, header_lines: &[String], columns: &str, rows: &[String]) -> Result<()> {
    let mut text = String::new();
    for l in header_lines {
        text.push_str(l);
        text.push('\n');
    }
    text.push_str(columns);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn default_dt(params: &CavityParams, spectrum: &Spectrum) -> f64 {
    0.5 * max_step(params, spectrum)
}

/// `spectrum`: eigenfrequency table at the config `b0` plus a gap profile over
/// `b0_grid` (defaults to a log-style scan reaching the asymptotic regime).
pub fn run_spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    ensure_out(out)?;
    let spectrum = cfg.solve_spectrum()?;
    let params = cfg.cavity_params(&spectrum)?;
    let header = cfg.header_lines(&params, f64::NAN);

    let columns = "b0,n,k_n,M_n,gap_n";
    let row = |r: &crate::spectrum::GapRow| {
        format!(
            "{},{},{},{},{}",
            r.b0,
            r.n,
            r.k,
            r.mass,
            r.gap.map(|g| g.to_string()).unwrap_or_default()
        )
    };

    let main_rows: Vec<String> = gap_profile(cfg.chi0, &[cfg.b0], cfg.n_modes)?
        .iter()
        .map(row)
        .collect();
    let spectrum_path = out.join("spectrum.csv");
    write_csv(&spectrum_path, &header, columns, &main_rows)?;

    let grid: Vec<f64> = if cfg.b0_grid.is_empty() {
        (1..=100).map(|i| i as f64 * 5.0).collect()
    } else {
        cfg.b0_grid.clone()
    };
    let gap_rows: Vec<String> = gap_profile(cfg.chi0, &grid, cfg.n_modes)?.iter().map(row).collect();
    let gaps_path = out.join("gaps.csv");
    write_csv(&gaps_path, &header, columns, &gap_rows)?;

    let mut summary = format!(
        "spectrum: chi0 = {}, b0 = {}, {} modes\n",
        cfg.chi0, cfg.b0, cfg.n_modes
    );
    for (i, (k, m)) in spectrum.k.iter().zip(&spectrum.masses).enumerate() {
        let _ = writeln!(summary, "  k_{} = {:.10}  M_{} = {:.10}", i + 1, k, i + 1, m);
    }
    Ok(RunArtifacts { files: vec![spectrum_path, gaps_path], summary })
}

/// Per-mode diagonal projection series of one or many runs.
struct EvolveData {
    /// Sample times (common to every column).
    times: Vec<f64>,
    /// `diag[n][i] = beta_n(t_i)` of the run that starts in mode `n+1`
    /// (or of the single superposition run).
    diag: Vec<Vec<num_complex::Complex64>>,
    /// Final full projections, one row per column (columns init only).
    final_rows: Vec<ProjectionSample>,
    /// Trajectory kept for the trajectory.csv export.
    exported: Trajectory,
}

fn run_columns(
    params: &CavityParams,
    spectrum: &Spectrum,
    dt: f64,
    stride: usize,
) -> Result<EvolveData> {
    let n = spectrum.n_modes();
    let runs: Vec<Result<(Trajectory, Vec<ProjectionSample>)>> = (1..=n)
        .into_par_iter()
        .map(|j| {
            let traj = evolve(&in_mode_state(j, spectrum)?, params, spectrum, dt, stride)?;
            let series = project_series(&traj, spectrum);
            Ok((traj, series))
        })
        .collect();
    let mut diag = Vec::with_capacity(n);
    let mut final_rows = Vec::with_capacity(n);
    let mut times = Vec::new();
    let mut exported = None;
    for (j, run) in runs.into_iter().enumerate() {
        let (traj, series) = run?;
        if j == 0 {
            times = series.iter().map(|p| p.t).collect();
            exported = Some(traj);
        }
        diag.push(series.iter().map(|p| p.beta[j]).collect());
        final_rows.push(series.last().expect("non-empty trajectory").clone());
    }
    Ok(EvolveData { times, diag, final_rows, exported: exported.expect("n >= 1") })
}

fn run_superposition(
    params: &CavityParams,
    spectrum: &Spectrum,
    dt: f64,
    stride: usize,
) -> Result<EvolveData> {
    let traj = evolve(&vacuum_superposition_state(spectrum), params, spectrum, dt, stride)?;
    let series = project_series(&traj, spectrum);
    let times: Vec<f64> = series.iter().map(|p| p.t).collect();
    let n = spectrum.n_modes();
    let diag = (0..n)
        .map(|m| series.iter().map(|p| p.beta[m]).collect())
        .collect();
    Ok(EvolveData { times, diag, final_rows: vec![], exported: traj })
}

fn fit_rows(fits: &[(usize, Result<GrowthFit>)]) -> (Vec<String>, String) {
    let mut rows = Vec::new();
    let mut notes = String::new();
    for (mode, fit) in fits {
        match fit {
            Ok(f) => {
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    mode, f.model, f.slope, f.stderr, f.window.0, f.window.1
                ));
                let _ = writeln!(
                    notes,
                    "  mode {}: slope = {:.6} +- {:.2e} ({} pts)",
                    mode, f.slope, f.stderr, f.n_points
                );
            }
            Err(e) => {
                let _ = writeln!(notes, "  mode {}: fit skipped ({e})", mode);
            }
        }
    }
    (rows, notes)
}

/// `evolve`: trajectory, particle-number series, Bogoliubov table, growth fits.
pub fn run_evolve(cfg: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    ensure_out(out)?;
    let spectrum = cfg.solve_spectrum()?;
    let params = cfg.cavity_params(&spectrum)?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&params, &spectrum));
    let header = cfg.header_lines(&params, dt);
    let n = spectrum.n_modes();

    let data = match cfg.init {
        InitMode::Columns => run_columns(&params, &spectrum, dt, cfg.stride)?,
        InitMode::Superposition => run_superposition(&params, &spectrum, dt, cfg.stride)?,
    };

    // trajectory.csv: the exported run, decimated as sampled
    let mut columns = String::from("t");
    for i in 1..=n {
        let _ = write!(columns, ",re_q_{i},im_q_{i}");
    }
    for i in 1..=n {
        let _ = write!(columns, ",re_u_{i},im_u_{i}");
    }
    let traj_rows: Vec<String> = data
        .exported
        .states
        .iter()
        .map(|s| {
            let mut row = s.t.to_string();
            for q in &s.q {
                let _ = write!(row, ",{},{}", q.re, q.im);
            }
            for u in &s.u {
                let _ = write!(row, ",{},{}", u.re, u.im);
            }
            row
        })
        .collect();
    let traj_path = out.join("trajectory.csv");
    write_csv(&traj_path, &header, &columns, &traj_rows)?;

    // particles.csv: N_n(t) = |beta_n(t)|^2 per mode
    let mut pcols = String::from("t");
    for i in 1..=n {
        let _ = write!(pcols, ",N_{i}");
    }
    let particle_rows: Vec<String> = data
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = t.to_string();
            for d in &data.diag {
                let _ = write!(row, ",{}", d[i].norm_sqr());
            }
            row
        })
        .collect();
    let particles_path = out.join("particles.csv");
    write_csv(&particles_path, &header, &pcols, &particle_rows)?;

    // bogoliubov.csv (+ full matrix for columns init)
    let mut files = vec![traj_path, particles_path];
    let bog_path = out.join("bogoliubov.csv");
    match cfg.init {
        InitMode::Columns => {
            let particles: Vec<f64> = (0..n)
                .map(|m| data.final_rows.iter().map(|r| r.beta[m].norm_sqr()).sum())
                .collect();
            let rows: Vec<String> = (0..n)
                .map(|m| {
                    let d = data.final_rows[m].beta[m];
                    format!("{},{},{},{}", m + 1, particles[m], d.re, d.im)
                })
                .collect();
            write_csv(&bog_path, &header, "n,N_n,re_beta_diag,im_beta_diag", &rows)?;
            files.push(bog_path);

            let full_rows: Vec<String> = data
                .final_rows
                .iter()
                .enumerate()
                .flat_map(|(j, r)| {
                    (0..n).map(move |m| {
                        format!(
                            "{},{},{},{},{},{}",
                            j + 1,
                            m + 1,
                            r.alpha[m].re,
                            r.alpha[m].im,
                            r.beta[m].re,
                            r.beta[m].im
                        )
                    })
                })
                .collect();
            let full_path = out.join("bogoliubov_full.csv");
            write_csv(
                &full_path,
                &header,
                "j,n,re_alpha,im_alpha,re_beta,im_beta",
                &full_rows,
            )?;
            files.push(full_path);
        }
        InitMode::Superposition => {
            let rows: Vec<String> = (0..n)
                .map(|m| {
                    let d = *data.diag[m].last().expect("non-empty series");
                    format!("{},{},{},{}", m + 1, d.norm_sqr(), d.re, d.im)
                })
                .collect();
            write_csv(&bog_path, &header, "n,N_n,re_beta_diag,im_beta_diag", &rows)?;
            files.push(bog_path);
        }
    }

    // fits.csv over the configured window
    let window = cfg.fit_window_or_default();
    let fits: Vec<(usize, Result<GrowthFit>)> = (0..n)
        .map(|m| {
            let y: Vec<f64> = data.diag[m].iter().map(|z| z.norm_sqr()).collect();
            (m + 1, fit_exponential(&data.times, &y, window))
        })
        .collect();
    let (rows, notes) = fit_rows(&fits);
    let fits_path = out.join("fits.csv");
    write_csv(&fits_path, &header, "mode,model,slope,stderr,window_lo,window_hi", &rows)?;
    files.push(fits_path);

    // unitarity report for the column runs
    let mut summary = format!(
        "evolve: alpha = {}, omega = {}, t_f = {}, {} modes, dt = {dt}\n",
        params.alpha, params.omega_drive, params.t_f, n
    );
    if !data.final_rows.is_empty() {
        let worst = data
            .final_rows
            .iter()
            .map(|r| r.unitarity_defect())
            .fold(0.0, f64::max);
        let _ = writeln!(summary, "  worst column unitarity defect: {worst:.3e}");
    }
    summary.push_str(&notes);
    Ok(RunArtifacts { files, summary })
}

/// `sweep`: total created particles against drive frequency.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    ensure_out(out)?;
    let spectrum = cfg.solve_spectrum()?;
    let params = cfg.cavity_params(&spectrum)?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&params, &spectrum));
    let (lo, hi, steps) = cfg.omega_grid.ok_or_else(|| {
        Error::Config("sweep needs omega_grid = lo:hi:steps".into())
    })?;
    let omegas: Vec<f64> = if steps < 2 {
        vec![lo]
    } else {
        (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
    };
    // fastest drive bounds the step for the whole sweep
    let dt = {
        let mut fast = params.clone();
        fast.omega_drive = hi.max(spectrum.k.last().copied().unwrap_or(1.0));
        dt.min(default_dt(&fast, &spectrum))
    };
    let header = cfg.header_lines(&params, dt);

    let result = sweep_drive_frequency(&params, &spectrum, &omegas, Some(dt))?;
    let n = spectrum.n_modes();
    let mut columns = String::from("omega,N_total");
    for i in 1..=n {
        let _ = write!(columns, ",N_{i}");
    }
    let rows: Vec<String> = result
        .rows
        .iter()
        .map(|r| {
            let mut row = format!("{},{}", r.omega, r.total);
            for v in &r.per_mode {
                let _ = write!(row, ",{v}");
            }
            row
        })
        .collect();
    let sweep_path = out.join("sweep.csv");
    write_csv(&sweep_path, &header, &columns, &rows)?;
    let mut files = vec![sweep_path];

    if !result.failures.is_empty() {
        let rows: Vec<String> = result
            .failures
            .iter()
            .map(|(omega, reason)| format!("{},{}", omega, reason.replace(',', ";")))
            .collect();
        let fail_path = out.join("sweep_failures.csv");
        write_csv(&fail_path, &header, "omega,reason", &rows)?;
        files.push(fail_path);
    }

    let mut summary = format!(
        "sweep: {} points over [{lo}, {hi}], {} failed\n",
        result.rows.len(),
        result.failures.len()
    );
    for p in result.peaks() {
        let _ = writeln!(summary, "  peak at omega = {:.6}: N_total = {:.6e}", p.omega, p.total);
    }
    Ok(RunArtifacts { files, summary })
}

/// `compare`: numeric slope vs the slow-flow prediction for one driven mode.
pub fn run_compare(cfg: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    ensure_out(out)?;
    let spectrum = cfg.solve_spectrum()?;
    let params = cfg.cavity_params(&spectrum)?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&params, &spectrum));
    let header = cfg.header_lines(&params, dt);
    let window = cfg.fit_window_or_default();

    let report = compare_with_msa(&params, &spectrum, cfg.mode, dt, window, cfg.match_tol)?;

    let rows: Vec<String> = report
        .points
        .iter()
        .map(|p| format!("{},{},{}", p.t, p.n_numeric, p.n_msa))
        .collect();
    let compare_path = out.join("compare.csv");
    write_csv(&compare_path, &header, "t,N_numeric,N_msa", &rows)?;

    // oscillation of the envelope, numeric vs slow-flow
    let j = cfg.mode;
    let drive_samples: Vec<(f64, num_complex::Complex64)> = {
        // re-project the numeric run over the drive window only
        let traj = evolve(&in_mode_state(j, &spectrum)?, &params, &spectrum, dt, cfg.stride)?;
        project_series(&traj, &spectrum)
            .into_iter()
            .filter(|p| p.t <= params.t_f)
            .map(|p| (p.t, p.beta[j - 1]))
            .collect()
    };
    let ts: Vec<f64> = drive_samples.iter().map(|(t, _)| *t).collect();
    let zs: Vec<num_complex::Complex64> = drive_samples.iter().map(|(_, z)| *z).collect();
    let osc = estimate_oscillation_freq(&ts, &zs).ok();

    let regime = classify_regime(&params);
    let sf = SlowFlow::new(&params, &spectrum, cfg.match_tol)?;
    let mut report_text = String::new();
    let _ = writeln!(
        report_text,
        "regime: {}",
        match regime {
            Regime::Weak => "weak (slow flow applicable)",
            Regime::Strong => "strong (slow flow indicative only)",
        }
    );
    let _ = writeln!(
        report_text,
        "resonances within {}: {}",
        cfg.match_tol,
        sf.resonances
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(report_text, "quantity,numerical,analytical,relative_deviation");
    let _ = writeln!(
        report_text,
        "log_N_slope_mode_{j},{},{},{}",
        report.numeric_fit.slope,
        report.msa_slope,
        report.relative_slope_error()
    );
    if let Some(osc) = osc {
        let _ = writeln!(report_text, "envelope_oscillation_mode_{j},{osc},,");
    }
    let report_path = out.join("compare_report.txt");
    fs::write(&report_path, &report_text)?;

    Ok(RunArtifacts {
        files: vec![compare_path, report_path],
        summary: report_text,
    })
}
