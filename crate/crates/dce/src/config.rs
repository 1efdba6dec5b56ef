//! Flat key = value experiment configuration with command-line overrides.
//!
//! The drive frequency may be given numerically (`omega = 3.13`) or
//! symbolically against the solved spectrum (`omega = 2k1`, `omega = k2-k1`,
//! `omega = k1+k3`); symbolic forms are resolved after the eigenvalue solve so
//! a config stays exact under parameter changes.

use crate::error::{Error, Result};
use crate::params::{CavityParams, FluxDrive};
use crate::spectrum::Spectrum;
use std::collections::BTreeMap;
use std::path::Path;

/// Initial condition selector for evolution runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// One run per in-mode column (full Bogoliubov matrix).
    Columns,
    /// Single run with every in-mode stacked.
    Superposition,
}

impl std::str::FromStr for InitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "columns" => Ok(InitMode::Columns),
            "superposition" => Ok(InitMode::Superposition),
            other => Err(Error::Config(format!(
                "init must be 'columns' or 'superposition', got '{other}'"
            ))),
        }
    }
}

/// Unresolved drive frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaSpec {
    Value(f64),
    /// `c * k_n` (e.g. `2k1`).
    Harmonic { factor: f64, mode: usize },
    /// `k_n + k_m` / `k_n - k_m`.
    Combination { n: usize, m: usize, sum: bool },
}

impl OmegaSpec {
    pub fn parse(s: &str) -> Result<OmegaSpec> {
        let s = s.trim();
        if let Ok(v) = s.parse::<f64>() {
            return Ok(OmegaSpec::Value(v));
        }
        let bad = || Error::Config(format!("cannot parse omega spec '{s}'"));
        if let Some((lhs, rhs, sum)) = s
            .split_once('+')
            .map(|(a, b)| (a, b, true))
            .or_else(|| s.split_once('-').map(|(a, b)| (a, b, false)))
        {
            let n = parse_mode_ref(lhs).ok_or_else(bad)?;
            let m = parse_mode_ref(rhs).ok_or_else(bad)?;
            return Ok(OmegaSpec::Combination { n, m, sum });
        }
        // forms like "k1", "2k1", "0.5k3"
        let idx = s.find('k').ok_or_else(bad)?;
        let factor = if idx == 0 { 1.0 } else { s[..idx].parse().map_err(|_| bad())? };
        let mode: usize = s[idx + 1..].parse().map_err(|_| bad())?;
        if mode == 0 {
            return Err(bad());
        }
        Ok(OmegaSpec::Harmonic { factor, mode })
    }

    pub fn resolve(&self, spectrum: &Spectrum) -> Result<f64> {
        let k = |n: usize| -> Result<f64> {
            spectrum.k.get(n - 1).copied().ok_or_else(|| {
                Error::Config(format!(
                    "omega spec references mode {n} but only {} modes are solved",
                    spectrum.n_modes()
                ))
            })
        };
        match *self {
            OmegaSpec::Value(v) => Ok(v),
            OmegaSpec::Harmonic { factor, mode } => Ok(factor * k(mode)?),
            OmegaSpec::Combination { n, m, sum } => {
                Ok(if sum { k(n)? + k(m)? } else { k(n)? - k(m)? })
            }
        }
    }
}

fn parse_mode_ref(s: &str) -> Option<usize> {
    let s = s.trim();
    let rest = s.strip_prefix('k')?;
    let n: usize = rest.parse().ok()?;
    (n > 0).then_some(n)
}

/// Everything a subcommand may need; unset optionals fall back per command.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub chi0: f64,
    pub b0: f64,
    pub flux: Option<FluxDrive>,
    pub alpha: f64,
    pub omega: OmegaSpec,
    pub t_f: f64,
    pub t_max: f64,
    pub n_modes: usize,
    pub dt: Option<f64>,
    pub stride: usize,
    pub init: InitMode,
    pub match_tol: f64,
    /// Fit window for growth-law fits; defaults to (0.1 t_f, 0.95 t_f).
    pub fit_window: Option<(f64, f64)>,
    /// Mode index for `compare`.
    pub mode: usize,
    /// `b0` grid of the gap profile (spectrum subcommand).
    pub b0_grid: Vec<f64>,
    /// Drive-frequency grid `lo:hi:steps` (sweep subcommand).
    pub omega_grid: Option<(f64, f64, usize)>,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            chi0: 0.05,
            b0: 1.0,
            flux: None,
            alpha: 0.0,
            omega: OmegaSpec::Harmonic { factor: 2.0, mode: 1 },
            t_f: 100.0,
            t_max: 120.0,
            n_modes: 10,
            dt: None,
            stride: 100,
            init: InitMode::Columns,
            match_tol: 0.1,
            fit_window: None,
            mode: 1,
            b0_grid: Vec::new(),
            omega_grid: None,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::default();
        let mut flux: BTreeMap<&str, f64> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected 'key = value'", path.display(), lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: String| {
                Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
            };
            let num = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| ctx(format!("'{value}' is not a number for key '{key}'")))
            };
            match key {
                "chi0" => cfg.chi0 = num()?,
                "b0" => cfg.b0 = num()?,
                "v0" | "f0" | "epsilon" => {
                    flux.insert(key, num()?);
                }
                "alpha" => cfg.alpha = num()?,
                "omega" => cfg.omega = OmegaSpec::parse(value)?,
                "t_f" => cfg.t_f = num()?,
                "t_max" => cfg.t_max = num()?,
                "modes" => {
                    cfg.n_modes = value
                        .parse()
                        .map_err(|_| ctx(format!("'{value}' is not a mode count")))?
                }
                "dt" => cfg.dt = Some(num()?),
                "stride" => {
                    cfg.stride = value
                        .parse()
                        .map_err(|_| ctx(format!("'{value}' is not a stride")))?
                }
                "init" => cfg.init = value.parse()?,
                "match_tol" => cfg.match_tol = num()?,
                "fit_lo" => {
                    let hi = cfg.fit_window.map(|w| w.1).unwrap_or(f64::NAN);
                    cfg.fit_window = Some((num()?, hi));
                }
                "fit_hi" => {
                    let lo = cfg.fit_window.map(|w| w.0).unwrap_or(f64::NAN);
                    cfg.fit_window = Some((lo, num()?));
                }
                "mode" => {
                    cfg.mode = value
                        .parse()
                        .map_err(|_| ctx(format!("'{value}' is not a mode index")))?
                }
                "b0_grid" => cfg.b0_grid = parse_grid(value).map_err(|e| ctx(e))?,
                "omega_grid" => {
                    cfg.omega_grid = Some(parse_range(value).map_err(|e| ctx(e))?)
                }
                "workers" => {
                    cfg.workers = Some(
                        value
                            .parse()
                            .map_err(|_| ctx(format!("'{value}' is not a worker count")))?,
                    )
                }
                other => return Err(ctx(format!("unknown key '{other}'"))),
            }
        }
        if !flux.is_empty() {
            let get = |k: &str| {
                flux.get(k).copied().ok_or_else(|| {
                    Error::Config(format!("flux drive needs v0, f0 and epsilon; '{k}' missing"))
                })
            };
            let f = FluxDrive { v0: get("v0")?, f0: get("f0")?, epsilon: get("epsilon")? };
            cfg.b0 = f.b0();
            cfg.flux = Some(f);
        }
        if let Some((lo, hi)) = cfg.fit_window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "fit window needs fit_lo < fit_hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(cfg)
    }

    /// Solve the spectrum for this config.
    pub fn solve_spectrum(&self) -> Result<Spectrum> {
        Spectrum::solve(self.chi0, self.b0, self.n_modes, crate::spectrum::DEFAULT_TOL)
    }

    /// Resolve into validated dynamics parameters against a solved spectrum.
    pub fn cavity_params(&self, spectrum: &Spectrum) -> Result<CavityParams> {
        let omega = self.omega.resolve(spectrum)?;
        let alpha = match &self.flux {
            Some(f) => f.alpha(spectrum.k[0]),
            None => self.alpha,
        };
        let mut p = CavityParams::new(
            self.chi0, self.b0, alpha, omega, self.t_f, self.t_max, self.n_modes,
        )?;
        p.flux = self.flux;
        p.validate()?;
        Ok(p)
    }

    pub fn fit_window_or_default(&self) -> (f64, f64) {
        self.fit_window.unwrap_or((0.1 * self.t_f, 0.95 * self.t_f))
    }

    /// Resolved settings for the `#` header of every output file.
    pub fn header_lines(&self, params: &CavityParams, dt: f64) -> Vec<String> {
        let mut lines = vec![
            format!("# chi0 = {}", params.chi0),
            format!("# b0 = {}", params.b0),
            format!("# alpha = {}", params.alpha),
            format!("# omega = {}", params.omega_drive),
            format!("# t_f = {}", params.t_f),
            format!("# t_max = {}", params.t_max),
            format!("# modes = {}", params.n_modes),
        ];
        if dt.is_finite() {
            lines.push(format!("# dt = {dt}"));
        }
        lines.extend([
            format!("# stride = {}", self.stride),
            format!(
                "# init = {}",
                match self.init {
                    InitMode::Columns => "columns",
                    InitMode::Superposition => "superposition",
                }
            ),
            format!("# match_tol = {}", self.match_tol),
        ]);
        if let Some(f) = &params.flux {
            lines.push(format!("# v0 = {}", f.v0));
            lines.push(format!("# f0 = {}", f.f0));
            lines.push(format!("# epsilon = {}", f.epsilon));
        }
        let (lo, hi) = self.fit_window_or_default();
        lines.push(format!("# fit_window = {lo}..{hi}"));
        lines
    }
}

/// `a,b,c` explicit list or `lo:hi:n` inclusive linear range.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.contains(':') {
        let (lo, hi, n) = parse_range(s)?;
        if n < 2 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        return Ok((0..n).map(|i| lo + step * i as f64).collect());
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{tok}' is not a number in grid '{s}'"))
        })
        .collect()
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range '{s}' must be lo:hi:steps"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad range lo '{}'", parts[0]))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad range hi '{}'", parts[1]))?;
    let n: usize = parts[2].trim().parse().map_err(|_| format!("bad range steps '{}'", parts[2]))?;
    if !(hi >= lo) || n == 0 {
        return Err(format!("range '{s}' is empty or reversed"));
    }
    Ok((lo, hi, n))
}
