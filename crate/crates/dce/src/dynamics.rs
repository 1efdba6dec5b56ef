//! Time evolution of the coupled, parametrically driven mode equations.
//!
//! After the mass rescaling the mode equations are
//! `qddot_n = -k_n^2 q_n + sum_m S_nm(t) q_m` with the rank-one coupling
//! `S_nm(t) = alpha k1^2 cos(k_n d) cos(k_m d) / sqrt(M_n M_m) sin(Omega t)`
//! inside the drive window `0 < t < t_F` and zero outside. The complex mode
//! functions are integrated directly with a fixed-step classic RK4 scheme.

use crate::error::{Error, Result};
use crate::params::CavityParams;
use crate::spectrum::Spectrum;
use num_complex::Complex64;

/// Minimum resolution of the fastest oscillation: the step must give at least
/// this many points per period of `max(k_max, Omega)`.
pub const MIN_POINTS_PER_PERIOD: f64 = 40.0;

/// Complex mode amplitudes and velocities at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub q: Vec<Complex64>,
    pub u: Vec<Complex64>,
}

impl SystemState {
    pub fn n_modes(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.u.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Sampled evolution; times strictly increasing, first sample at t=0, last at t_max.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SystemState>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    pub fn last(&self) -> &SystemState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Instantaneous drive data: per-mode frequency and the symmetric coupling
/// matrix. Outside the window the frequencies equal `k_n` and `S = 0`.
#[derive(Debug, Clone)]
pub struct DriveCoefficients {
    pub omega: Vec<f64>,
    /// Row-major `n_modes x n_modes` symmetric matrix `S_nm(t)`.
    pub coupling: Vec<f64>,
}

impl DriveCoefficients {
    pub fn s(&self, n: usize, m: usize, n_modes: usize) -> f64 {
        self.coupling[n * n_modes + m]
    }
}

/// Rank-one factor of the coupling: `S_nm = c * sin(Omega t) * p_n * p_m` with
/// `p_n = cos(k_n)/sqrt(M_n)` and `c = alpha k1^2`.
fn coupling_factors(params: &CavityParams, spectrum: &Spectrum) -> (Vec<f64>, f64) {
    let p: Vec<f64> = spectrum
        .k
        .iter()
        .zip(&spectrum.masses)
        .map(|(&k, &m)| k.cos() / m.sqrt())
        .collect();
    let k1 = spectrum.k[0];
    (p, params.alpha * k1 * k1)
}

// half-open: a stage evaluated exactly at t_f is already free, so the first
// post-drive step never sees the (discontinuous) drive tail
fn window(params: &CavityParams, t: f64) -> bool {
    t >= 0.0 && t < params.t_f
}

/// Evaluate the drive at time `t`. The instantaneous frequency is
/// `omega_n(t) = sqrt(k_n^2 - S_nn(t))`, i.e. the diagonal of the coupled
/// system, so that `qddot = -K(t) q` with the symmetric
/// `K = diag(k_n^2) - S(t)`.
pub fn drive_at(params: &CavityParams, spectrum: &Spectrum, t: f64) -> DriveCoefficients {
    let n = spectrum.n_modes();
    let (p, c) = coupling_factors(params, spectrum);
    let s = if window(params, t) {
        c * (params.omega_drive * t).sin()
    } else {
        0.0
    };
    let mut coupling = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            coupling[i * n + j] = s * (p[i] * p[j]);
        }
    }
    let omega = (0..n)
        .map(|i| (spectrum.k[i] * spectrum.k[i] - coupling[i * n + i]).sqrt())
        .collect();
    DriveCoefficients { omega, coupling }
}

/// The in-basis mode `j` (1-based) at t=0:
/// `q_m = delta_mj / sqrt(2 k_j)`, `u_m = -i sqrt(k_j/2) delta_mj`.
pub fn in_mode_state(j: usize, spectrum: &Spectrum) -> Result<SystemState> {
    let n = spectrum.n_modes();
    if j < 1 || j > n {
        return Err(Error::Config(format!(
            "mode index {j} out of range 1..={n}"
        )));
    }
    let mut q = vec![Complex64::ZERO; n];
    let mut u = vec![Complex64::ZERO; n];
    let k = spectrum.k[j - 1];
    q[j - 1] = Complex64::new(1.0 / (2.0 * k).sqrt(), 0.0);
    u[j - 1] = Complex64::new(0.0, -(k / 2.0).sqrt());
    Ok(SystemState { t: 0.0, q, u })
}

/// Every in-mode populated simultaneously (single-run reproduction).
pub fn vacuum_superposition_state(spectrum: &Spectrum) -> SystemState {
    let q = spectrum.k.iter().map(|&k| Complex64::new(1.0 / (2.0 * k).sqrt(), 0.0)).collect();
    let u = spectrum.k.iter().map(|&k| Complex64::new(0.0, -(k / 2.0).sqrt())).collect();
    SystemState { t: 0.0, q, u }
}

/// Largest admissible step for the configured spectrum and drive.
pub fn max_step(params: &CavityParams, spectrum: &Spectrum) -> f64 {
    let fastest = spectrum.k.last().copied().unwrap_or(1.0).max(params.omega_drive);
    2.0 * std::f64::consts::PI / fastest / MIN_POINTS_PER_PERIOD
}

struct Rhs {
    ksq: Vec<f64>,
    p: Vec<f64>,
    c: f64,
    omega_drive: f64,
    t_f: f64,
}

impl Rhs {
    /// d/dt (q, u) = (u, -k^2 q + s(t) p (p . q))
    fn eval(&self, t: f64, q: &[Complex64], u: &[Complex64], dq: &mut [Complex64], du: &mut [Complex64]) {
        let driven = t >= 0.0 && t < self.t_f && self.c != 0.0;
        let s = if driven { self.c * (self.omega_drive * t).sin() } else { 0.0 };
        let mut dot = Complex64::ZERO;
        if s != 0.0 {
            for (pi, qi) in self.p.iter().zip(q) {
                dot += pi * qi;
            }
        }
        for i in 0..q.len() {
            dq[i] = u[i];
            du[i] = -self.ksq[i] * q[i] + s * self.p[i] * dot;
        }
    }
}

/// Integrate from `state0.t = 0` to `t_max` with fixed-step RK4, sampling every
/// `sample_stride` steps (the final state is always sampled).
pub fn evolve(
    state0: &SystemState,
    params: &CavityParams,
    spectrum: &Spectrum,
    dt: f64,
    sample_stride: usize,
) -> Result<Trajectory> {
    let n = spectrum.n_modes();
    if state0.q.len() != n || state0.u.len() != n {
        return Err(Error::Config(format!(
            "state has {} modes, spectrum has {n}",
            state0.q.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    let dt_max = max_step(params, spectrum);
    if dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "dt={dt} too coarse: needs dt <= {dt_max:.3e} ({MIN_POINTS_PER_PERIOD} points per fastest period)"
        )));
    }
    let stride = sample_stride.max(1);
    let n_steps = (params.t_max / dt).ceil().max(1.0) as usize;
    let dt = params.t_max / n_steps as f64; // land exactly on t_max

    let (p, c) = coupling_factors(params, spectrum);
    let rhs = Rhs {
        ksq: spectrum.k.iter().map(|&k| k * k).collect(),
        p,
        c,
        omega_drive: params.omega_drive,
        t_f: params.t_f,
    };

    let mut q = state0.q.clone();
    let mut u = state0.u.clone();
    let mut states = Vec::with_capacity(n_steps / stride + 2);
    states.push(SystemState { t: 0.0, q: q.clone(), u: u.clone() });

    let zeros = vec![Complex64::ZERO; n];
    let mut k1q = zeros.clone();
    let mut k1u = zeros.clone();
    let mut k2q = zeros.clone();
    let mut k2u = zeros.clone();
    let mut k3q = zeros.clone();
    let mut k3u = zeros.clone();
    let mut k4q = zeros.clone();
    let mut k4u = zeros.clone();
    let mut tq = zeros.clone();
    let mut tu = zeros;

    for step in 0..n_steps {
        let t = step as f64 * dt;
        rhs.eval(t, &q, &u, &mut k1q, &mut k1u);
        for i in 0..n {
            tq[i] = q[i] + 0.5 * dt * k1q[i];
            tu[i] = u[i] + 0.5 * dt * k1u[i];
        }
        rhs.eval(t + 0.5 * dt, &tq, &tu, &mut k2q, &mut k2u);
        for i in 0..n {
            tq[i] = q[i] + 0.5 * dt * k2q[i];
            tu[i] = u[i] + 0.5 * dt * k2u[i];
        }
        rhs.eval(t + 0.5 * dt, &tq, &tu, &mut k3q, &mut k3u);
        for i in 0..n {
            tq[i] = q[i] + dt * k3q[i];
            tu[i] = u[i] + dt * k3u[i];
        }
        rhs.eval(t + dt, &tq, &tu, &mut k4q, &mut k4u);
        for i in 0..n {
            q[i] += dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
            u[i] += dt / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
        }
        let t_next = (step + 1) as f64 * dt;
        if (step + 1) % stride == 0 || step + 1 == n_steps {
            let s = SystemState { t: t_next, q: q.clone(), u: u.clone() };
            if !s.is_finite() {
                return Err(Error::Integration {
                    t: t_next,
                    reason: "non-finite state".into(),
                });
            }
            // avoid a duplicate sample when n_steps divides stride exactly
            if states.last().map(|p| p.t) != Some(s.t) {
                states.push(s);
            }
        }
    }
    Ok(Trajectory { states })
}

/// Diagnostic energy `1/2 sum_n (|u_n|^2 + k_n^2 |q_n|^2)` with the static
/// frequencies.
pub fn total_quadratic_energy(state: &SystemState, spectrum: &Spectrum) -> f64 {
    0.5 * state
        .q
        .iter()
        .zip(&state.u)
        .zip(&spectrum.k)
        .map(|((q, u), &k)| u.norm_sqr() + k * k * q.norm_sqr())
        .sum::<f64>()
}

/// Symplectic bilinear `W(a, b) = sum_n (q^a_n u^b_n - u^a_n q^b_n)`;
/// conserved exactly by the flow of `qddot = -K(t) q` with symmetric `K`.
pub fn wronskian(a: &SystemState, b: &SystemState) -> Complex64 {
    a.q.iter()
        .zip(&a.u)
        .zip(b.q.iter().zip(&b.u))
        .map(|((qa, ua), (qb, ub))| qa * ub - ua * qb)
        .sum()
}
