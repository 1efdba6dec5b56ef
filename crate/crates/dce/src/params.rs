use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// SQUID flux drive in its physical parametrization: boundary potential
/// amplitude `v0 = 2 E_J / E_L,cav`, static phase `f0`, and relative drive
/// amplitude `epsilon` of `f(t) = f0 + eps sin(Omega t)` inside the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxDrive {
    pub v0: f64,
    pub f0: f64,
    pub epsilon: f64,
}

impl FluxDrive {
    /// Static boundary potential `b0 = v0 cos f0` entering the spectrum condition.
    pub fn b0(&self) -> f64 {
        self.v0 * self.f0.cos()
    }

    /// Dimensionless drive strength `alpha = 2 v0 sin(f0) eps / (k1 d)^2`.
    pub fn alpha(&self, k1: f64) -> f64 {
        2.0 * self.v0 * self.f0.sin() * self.epsilon / (k1 * k1)
    }
}

/// Dimensionless cavity and drive configuration. Lengths are in units of the
/// cavity size `d` and the propagation speed is 1, so `k_n d` is dimensionless
/// and time is measured in units of `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityParams {
    /// Capacitance ratio `2 C_J / (C0 d)`.
    pub chi0: f64,
    /// Static boundary potential `v0 cos f0`.
    pub b0: f64,
    /// Drive strength of the mode equations.
    pub alpha: f64,
    /// Drive angular frequency, units 1/d.
    pub omega_drive: f64,
    /// Drive window end; the boundary oscillates for 0 < t < t_f only.
    pub t_f: f64,
    /// End of the integration, t_f <= t_max.
    pub t_max: f64,
    /// Mode cutoff.
    pub n_modes: usize,
    /// Set when the drive was specified as a (v0, f0, epsilon) triple;
    /// `b0` and `alpha` are then derived, never stored inconsistently.
    pub flux: Option<FluxDrive>,
}

impl CavityParams {
    pub fn new(
        chi0: f64,
        b0: f64,
        alpha: f64,
        omega_drive: f64,
        t_f: f64,
        t_max: f64,
        n_modes: usize,
    ) -> Result<Self> {
        let p = CavityParams {
            chi0,
            b0,
            alpha,
            omega_drive,
            t_f,
            t_max,
            n_modes,
            flux: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Build from the physical flux-drive triple; `b0` and `alpha` are derived
    /// (`alpha` requires `k1`, so the static spectrum is solved here).
    pub fn from_flux(
        chi0: f64,
        flux: FluxDrive,
        omega_drive: f64,
        t_f: f64,
        t_max: f64,
        n_modes: usize,
    ) -> Result<Self> {
        let b0 = flux.b0();
        let k1 = Spectrum::solve(chi0, b0, 1, crate::spectrum::DEFAULT_TOL)?.k[0];
        let p = CavityParams {
            chi0,
            b0,
            alpha: flux.alpha(k1),
            omega_drive,
            t_f,
            t_max,
            n_modes,
            flux: Some(flux),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi0 >= 0.0) {
            return Err(Error::Config(format!("chi0 must be >= 0, got {}", self.chi0)));
        }
        if self.n_modes < 1 {
            return Err(Error::Config("n_modes must be >= 1".into()));
        }
        if !(self.t_f > 0.0 && self.t_f <= self.t_max) {
            return Err(Error::Config(format!(
                "need 0 < t_f <= t_max, got t_f={}, t_max={}",
                self.t_f, self.t_max
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.omega_drive >= 0.0) || !self.omega_drive.is_finite() {
            return Err(Error::Config(format!(
                "omega_drive must be finite and >= 0, got {}",
                self.omega_drive
            )));
        }
        if let Some(f) = &self.flux {
            let db = (f.b0() - self.b0).abs();
            if db > 1e-12 * self.b0.abs().max(1.0) {
                return Err(Error::Config(
                    "b0 inconsistent with (v0, f0): recompute, do not store both".into(),
                ));
            }
        }
        Ok(())
    }

    /// Weak/strong amplitude proxy used by the regime classifier: `b0 * eps`
    /// when the flux triple is known, the raw drive strength otherwise.
    pub fn amplitude_proxy(&self) -> f64 {
        match &self.flux {
            Some(f) => (self.b0 * f.epsilon).abs(),
            None => self.alpha,
        }
    }
}
