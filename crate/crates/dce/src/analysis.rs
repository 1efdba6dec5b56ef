//! Growth-law fitting, drive-frequency sweeps, and numeric-vs-analytic
//! comparisons.

use crate::bogoliubov::{bogoliubov_matrix, project_series};
use crate::dynamics::{evolve, in_mode_state, max_step};
use crate::error::{Error, Result};
use crate::msa::{single_mode_log_slope, SlowFlow};
use crate::params::CavityParams;
use crate::spectrum::{Resonance, Spectrum};
use num_complex::Complex64;
use rayon::prelude::*;

/// Least-squares line through `(x, ln y)` or `(ln x, ln y)`.
#[derive(Debug, Clone)]
pub struct GrowthFit {
    /// "exponential" or "power"
    pub model: &'static str,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 3 {
        return Err(Error::Fit(format!("need >= 3 points, got {}", xs.len())));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissa: all x equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok((slope, intercept, stderr))
}

/// Fit `y = C e^{s t}` over `lo <= t <= hi`; only strictly positive samples
/// participate.
pub fn fit_exponential(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<GrowthFit> {
    let (lo, hi) = window;
    let (xs, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(ti, yi)| **ti >= lo && **ti <= hi && **yi > 0.0)
        .map(|(ti, yi)| (*ti, yi.ln()))
        .unzip();
    let (slope, intercept, stderr) = linear_fit(&xs, &ys)
        .map_err(|e| Error::Fit(format!("exponential fit on [{lo}, {hi}]: {e}")))?;
    Ok(GrowthFit { model: "exponential", slope, intercept, stderr, window, n_points: xs.len() })
}

/// Fit `y = C t^p` over the window; returns the exponent `p` as `slope`.
pub fn fit_power_law(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<GrowthFit> {
    let (lo, hi) = window;
    let (xs, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(ti, yi)| **ti >= lo && **ti <= hi && **ti > 0.0 && **yi > 0.0)
        .map(|(ti, yi)| (ti.ln(), yi.ln()))
        .unzip();
    let (slope, intercept, stderr) = linear_fit(&xs, &ys)
        .map_err(|e| Error::Fit(format!("power-law fit on [{lo}, {hi}]: {e}")))?;
    Ok(GrowthFit { model: "power", slope, intercept, stderr, window, n_points: xs.len() })
}

/// Envelope beat frequency of a complex amplitude series: divide out the mean
/// exponential growth, lightly smooth, and count sign changes of the real
/// part. Returns `pi * crossings / duration`.
pub fn estimate_oscillation_freq(t: &[f64], z: &[Complex64]) -> Result<f64> {
    if t.len() != z.len() || t.len() < 16 {
        return Err(Error::Fit(format!("oscillation estimate needs >= 16 samples, got {}", t.len())));
    }
    let mags: Vec<f64> = z.iter().map(|v| v.norm_sqr()).collect();
    let s = fit_exponential(t, &mags, (t[0], *t.last().unwrap()))
        .map(|f| f.slope)
        .unwrap_or(0.0);
    let detrended: Vec<f64> = t
        .iter()
        .zip(z)
        .map(|(ti, zi)| zi.re * (-0.5 * s * (ti - t[0])).exp())
        .collect();
    // moving average over 5 samples to suppress residual fast phase jitter
    let w = 5usize;
    let smooth: Vec<f64> = (0..detrended.len())
        .map(|i| {
            let lo = i.saturating_sub(w / 2);
            let hi = (i + w / 2 + 1).min(detrended.len());
            detrended[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let mut crossings = 0usize;
    for pair in smooth.windows(2) {
        if pair[0] != 0.0 && pair[0].signum() != pair[1].signum() {
            crossings += 1;
        }
    }
    let duration = t.last().unwrap() - t[0];
    Ok(std::f64::consts::PI * crossings as f64 / duration)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub omega: f64,
    pub total: f64,
    pub per_mode: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Drive frequencies whose integration failed, with the reason; the sweep
    /// continues past them.
    pub failures: Vec<(f64, String)>,
}

impl SweepResult {
    /// Interior local maxima of `total` (3-point test).
    pub fn peaks(&self) -> Vec<&SweepRow> {
        self.rows
            .windows(3)
            .filter(|w| w[1].total > w[0].total && w[1].total > w[2].total)
            .map(|w| &w[1])
            .collect()
    }
}

/// Evolve the full in-mode matrix at every drive frequency in `omegas`
/// (parallel over frequencies; output order follows the input order).
pub fn sweep_drive_frequency(
    base: &CavityParams,
    spectrum: &Spectrum,
    omegas: &[f64],
    dt: Option<f64>,
) -> Result<SweepResult> {
    if omegas.is_empty() {
        return Err(Error::Config("empty frequency grid".into()));
    }
    let outcomes: Vec<(f64, Result<SweepRow>)> = omegas
        .par_iter()
        .map(|&omega| {
            let run = (|| {
                let mut p = base.clone();
                p.omega_drive = omega;
                p.validate()?;
                let dt = dt.unwrap_or_else(|| 0.5 * max_step(&p, spectrum));
                let m = bogoliubov_matrix(&p, spectrum, dt)?;
                Ok(SweepRow { omega, total: m.total_particles(), per_mode: m.particles })
            })();
            (omega, run)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (omega, out) in outcomes {
        match out {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((omega, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(Error::Integration {
            t: f64::NAN,
            reason: format!("every sweep point failed; first: {}", failures[0].1),
        });
    }
    Ok(SweepResult { rows, failures })
}

/// One sampled time in the numeric-vs-MSA comparison of an in-mode `j` drive.
#[derive(Debug, Clone)]
pub struct ComparePoint {
    pub t: f64,
    pub n_numeric: f64,
    pub n_msa: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub mode: usize,
    pub points: Vec<ComparePoint>,
    pub numeric_fit: GrowthFit,
    pub msa_slope: f64,
    pub resonances: Vec<Resonance>,
}

impl CompareReport {
    pub fn relative_slope_error(&self) -> f64 {
        (self.numeric_fit.slope - self.msa_slope).abs() / self.msa_slope.abs()
    }
}

/// Drive in-mode `j`, track `N_j(t) = |beta_j(t)|^2` during the drive window,
/// fit its exponential slope over `fit_window`, and put the slow-flow
/// prediction next to it.
pub fn compare_with_msa(
    params: &CavityParams,
    spectrum: &Spectrum,
    j: usize,
    dt: f64,
    fit_window: (f64, f64),
    match_tol: f64,
) -> Result<CompareReport> {
    if fit_window.1 > params.t_f {
        return Err(Error::Config(format!(
            "fit window end {} is past the drive window t_f = {}",
            fit_window.1, params.t_f
        )));
    }
    let sf = SlowFlow::new(params, spectrum, match_tol)?;
    let stride = ((1.0 / dt).round() as usize).max(1); // ~1 time-unit sampling
    let traj = evolve(&in_mode_state(j, spectrum)?, params, spectrum, dt, stride)?;
    let series = project_series(&traj, spectrum);
    let times: Vec<f64> = series.iter().map(|p| p.t).collect();
    let numeric: Vec<f64> = series.iter().map(|p| p.beta[j - 1].norm_sqr()).collect();

    let n_steps = (times.len() * 4).max(1000);
    let msa_hist = {
        let mut b0 = vec![Complex64::ZERO; spectrum.n_modes()];
        b0[j - 1] = Complex64::new(1.0, 0.0);
        let a0 = vec![Complex64::ZERO; spectrum.n_modes()];
        sf.evolve(&a0, &b0, *times.last().unwrap(), n_steps)
    };
    // resample MSA onto the numeric grid (its own grid is finer and uniform)
    let msa_at = |t: f64| -> f64 {
        let dt_msa = msa_hist[1].0 - msa_hist[0].0;
        let i = ((t / dt_msa).round() as usize).min(msa_hist.len() - 1);
        msa_hist[i].1[j - 1].norm_sqr()
    };
    let points: Vec<ComparePoint> = times
        .iter()
        .zip(&numeric)
        .map(|(&t, &nn)| ComparePoint { t, n_numeric: nn, n_msa: msa_at(t) })
        .collect();
    let numeric_fit = fit_exponential(&times, &numeric, fit_window)?;
    let msa_slope = match sf.resonances.as_slice() {
        [Resonance::SelfMode(m)] if *m == j => single_mode_log_slope(spectrum, j, params.alpha),
        _ => {
            // generic case: slope of the slow-flow solution itself over the
            // same window
            let ts: Vec<f64> = msa_hist.iter().map(|(t, _, _)| *t).collect();
            let ns: Vec<f64> = msa_hist.iter().map(|(_, a, _)| a[j - 1].norm_sqr()).collect();
            fit_exponential(&ts, &ns, fit_window)?.slope
        }
    };
    Ok(CompareReport { mode: j, points, numeric_fit, msa_slope, resonances: sf.resonances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_fit_recovers_slope() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|ti| 2.5 * (0.0315 * ti).exp()).collect();
        let f = fit_exponential(&t, &y, (10.0, 90.0)).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0315, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 2.5f64.ln(), epsilon = 1e-10);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn power_fit_recovers_exponent() {
        let t: Vec<f64> = (1..500).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = t.iter().map(|ti| 0.7 * ti.powi(2)).collect();
        let f = fit_power_law(&t, &y, (1.0, 80.0)).unwrap();
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_empty_window() {
        let t = vec![0.0, 1.0, 2.0];
        let y = vec![1.0, 2.0, 3.0];
        assert!(fit_exponential(&t, &y, (10.0, 20.0)).is_err());
    }

    #[test]
    fn oscillation_estimator_on_synthetic_beat() {
        let freq = 0.037;
        let grow = 0.01;
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.5).collect();
        let z: Vec<Complex64> = t
            .iter()
            .map(|ti| Complex64::new((freq * ti).cos() * (0.5 * grow * ti).exp(), 0.0))
            .collect();
        let est = estimate_oscillation_freq(&t, &z).unwrap();
        assert!((est - freq).abs() / freq < 0.05, "est = {est}");
    }

    #[test]
    fn peak_detection() {
        let rows = [0.1, 0.5, 0.2, 0.3, 1.7, 0.4]
            .iter()
            .enumerate()
            .map(|(i, &v)| SweepRow { omega: i as f64, total: v, per_mode: vec![v] })
            .collect();
        let s = SweepResult { rows, failures: vec![] };
        let peaks = s.peaks();
        assert_eq!(peaks.len(), 2);
        assert_abs_diff_eq!(peaks[0].omega, 1.0);
        assert_abs_diff_eq!(peaks[1].omega, 4.0);
    }
}
