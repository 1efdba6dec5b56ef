//! Static cavity spectrum: roots of the transcendental boundary condition
//! `k d tan(k d) + chi0 (k d)^2 = b0`, mode masses, gap tables, and resonance
//! matching against a drive frequency.

use crate::error::{Error, Result};
use crate::params::CavityParams;
use std::f64::consts::PI;

/// Default residual tolerance of the eigenvalue solve.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Boundary-condition residual `g(x) = x tan x + chi0 x^2 - b0`.
/// Meaningful away from the tangent poles at half-integer multiples of pi.
pub fn bc_residual(x: f64, chi0: f64, b0: f64) -> f64 {
    x * x.tan() + chi0 * x * x - b0
}

/// Pole-free form `h(x) = g(x) cos x = x sin x + (chi0 x^2 - b0) cos x`.
/// Shares every root with `g` and is smooth through the tangent poles, so a
/// sign change brackets exactly one eigenvalue.
fn bc_smooth(x: f64, chi0: f64, b0: f64) -> f64 {
    x * x.sin() + (chi0 * x * x - b0) * x.cos()
}

fn bc_smooth_deriv(x: f64, chi0: f64, b0: f64) -> f64 {
    x.sin() + x * x.cos() + 2.0 * chi0 * x * x.cos() - (chi0 * x * x - b0) * x.sin()
}

/// Ordered eigenfrequency table of the static cavity (everything in units 1/d).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Eigenfrequencies `k_n d`, strictly increasing.
    pub k: Vec<f64>,
    /// Mode masses `M_n`.
    pub masses: Vec<f64>,
    /// Consecutive gaps `k_{n+1} - k_n` (length `n_modes - 1`).
    pub gaps: Vec<f64>,
}

impl Spectrum {
    /// Solve for the lowest `n_modes` eigenfrequencies.
    ///
    /// Between two consecutive tangent poles `(n-1/2)pi` the residual `g` runs
    /// monotonically from -inf to +inf, so each pole interval holds exactly one
    /// root; the leading interval `(0, pi/2)` holds one iff `b0 > 0`. Each
    /// bracket is refined by Newton on the pole-free form with bisection
    /// safeguarding.
    pub fn solve(chi0: f64, b0: f64, n_modes: usize, tol: f64) -> Result<Spectrum> {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tol must be > 0, got {tol}")));
        }
        if !(chi0 >= 0.0) || n_modes < 1 {
            return Err(Error::Config(format!(
                "invalid spectrum request chi0={chi0}, n_modes={n_modes}"
            )));
        }
        let mut k = Vec::with_capacity(n_modes);
        // interval 0 is (0, pi/2); interval m >= 1 is ((m-1/2)pi, (m+1/2)pi)
        let mut interval = if b0 > 0.0 { 0usize } else { 1usize };
        while k.len() < n_modes {
            let (a, b) = if interval == 0 {
                (0.0, 0.5 * PI)
            } else {
                ((interval as f64 - 0.5) * PI, (interval as f64 + 0.5) * PI)
            };
            let mode = k.len() + 1;
            let root = refine_root(a, b, chi0, b0, tol)
                .map_err(|reason| Error::Spectrum { mode, reason })?;
            k.push(root);
            interval += 1;
        }
        let masses: Vec<f64> = k.iter().map(|&kd| mode_mass(kd, chi0)).collect();
        if let Some((n, &m)) = masses.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
            return Err(Error::Spectrum {
                mode: n + 1,
                reason: format!("non-positive mode mass {m}"),
            });
        }
        let gaps: Vec<f64> = k.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Spectrum { k, masses, gaps })
    }

    pub fn n_modes(&self) -> usize {
        self.k.len()
    }
}

/// Solve using the parameter block's `chi0`, `b0`, `n_modes`.
pub fn solve_spectrum(params: &CavityParams, tol: f64) -> Result<Spectrum> {
    Spectrum::solve(params.chi0, params.b0, params.n_modes, tol)
}

fn refine_root(a0: f64, b0_end: f64, chi0: f64, b0: f64, tol: f64) -> std::result::Result<f64, String> {
    let mut a = a0;
    let mut b = b0_end;
    let mut fa = if a == 0.0 { -b0 } else { bc_smooth(a, chi0, b0) };
    let fb = bc_smooth(b, chi0, b0);
    if fa == 0.0 {
        // b0 == 0 puts the formal root at the origin; the physical mode lives
        // in the next interval.
        return Err("no root in bracket (b0 = 0 limit)".into());
    }
    if fa.signum() == fb.signum() {
        return Err(format!("no sign change in bracket [{a}, {b}]"));
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = bc_smooth(x, chi0, b0);
        if fx == 0.0 {
            break;
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let dfx = bc_smooth_deriv(x, chi0, b0);
        let mut next = x - fx / dfx;
        if !(next > a && next < b) || !next.is_finite() {
            next = 0.5 * (a + b);
        }
        // secondary stop on the iterate displacement
        if (next - x).abs() < 1e-15 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    let residual = bc_residual(x, chi0, b0);
    // the residual terms scale like x and chi0 x^2, so judge convergence
    // against that magnitude rather than an absolute threshold
    let scale = 1.0 + x.abs() + chi0 * x * x + b0.abs();
    if residual.abs() < tol * scale || (b - a) <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
        Ok(x)
    } else {
        Err(format!("not converged: residual {residual:.3e} at k={x}"))
    }
}

/// Mode mass `M_n = 1 + sin(2 kd)/(2 kd) + 2 chi0 cos^2(kd)`.
pub fn mode_mass(kd: f64, chi0: f64) -> f64 {
    assert!(kd > 0.0, "mode_mass needs kd > 0");
    1.0 + (2.0 * kd).sin() / (2.0 * kd) + 2.0 * chi0 * kd.cos().powi(2)
}

/// One row of a `b0` scan: mode `n` (1-based) of the spectrum at `b0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub b0: f64,
    pub n: usize,
    pub k: f64,
    pub mass: f64,
    /// `k_{n+1} - k_n`; `None` for the last mode of each spectrum.
    pub gap: Option<f64>,
}

/// Solve the spectrum on a grid of `b0` values and tabulate eigenfrequencies,
/// masses, and consecutive gaps.
pub fn gap_profile(chi0: f64, b0_range: &[f64], n_modes: usize) -> Result<Vec<GapRow>> {
    if b0_range.is_empty() {
        return Err(Error::Config("empty b0 range".into()));
    }
    let mut rows = Vec::with_capacity(b0_range.len() * n_modes);
    for &b0 in b0_range {
        let sp = Spectrum::solve(chi0, b0, n_modes, DEFAULT_TOL).map_err(|e| match e {
            Error::Spectrum { mode, reason } => Error::Spectrum {
                mode,
                reason: format!("at b0={b0}: {reason}"),
            },
            other => other,
        })?;
        for n in 0..n_modes {
            rows.push(GapRow {
                b0,
                n: n + 1,
                k: sp.k[n],
                mass: sp.masses[n],
                gap: sp.gaps.get(n).copied(),
            });
        }
    }
    Ok(rows)
}

/// Sign of the `k_n +- k_m` combination of a pair resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSign {
    Sum,
    Difference,
}

/// A drive-frequency match against the spectrum. Mode indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resonance {
    /// `Omega ~ 2 k_n`.
    SelfMode(usize),
    /// `Omega ~ |k_n +- k_m|`, n < m.
    Pair(usize, usize, PairSign),
}

impl std::fmt::Display for Resonance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resonance::SelfMode(n) => write!(f, "self({n})"),
            Resonance::Pair(n, m, PairSign::Sum) => write!(f, "pair({n},{m},+)"),
            Resonance::Pair(n, m, PairSign::Difference) => write!(f, "pair({n},{m},-)"),
        }
    }
}

/// All resonance conditions matched by `omega_drive` within `match_tol`:
/// self-resonances `|Omega - 2 k_n| < tol` and pair resonances
/// `|Omega - |k_n +- k_m|| < tol`. An empty list is a valid result.
pub fn resonant_set(spectrum: &Spectrum, omega_drive: f64, match_tol: f64) -> Vec<Resonance> {
    assert!(match_tol > 0.0, "match_tol must be > 0");
    let mut out = Vec::new();
    let k = &spectrum.k;
    for (i, &kn) in k.iter().enumerate() {
        if (omega_drive - 2.0 * kn).abs() < match_tol {
            out.push(Resonance::SelfMode(i + 1));
        }
    }
    for i in 0..k.len() {
        for j in (i + 1)..k.len() {
            if (omega_drive - (k[j] - k[i])).abs() < match_tol {
                out.push(Resonance::Pair(i + 1, j + 1, PairSign::Difference));
            }
            if (omega_drive - (k[j] + k[i])).abs() < match_tol {
                out.push(Resonance::Pair(i + 1, j + 1, PairSign::Sum));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Frozen reference roots, high-precision evaluation of the boundary
    // condition (30-digit arithmetic).
    const K_B1_CHI005: [f64; 4] = [0.848830134237, 3.281359191, 6.14003497522, 9.09286225271];
    const K_B496_CHI001: [f64; 4] = [1.311447224, 4.015606639, 6.862470358, 9.811651531];

    #[test]
    fn reproduces_reference_spectra() {
        let sp = Spectrum::solve(0.05, 1.0, 4, 1e-10).unwrap();
        for (got, want) in sp.k.iter().zip(K_B1_CHI005) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-8);
        }
        let sp = Spectrum::solve(0.01, 4.96, 4, 1e-10).unwrap();
        for (got, want) in sp.k.iter().zip(K_B496_CHI001) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-8);
        }
        let sp = Spectrum::solve(1.0, 1.0, 1, 1e-10).unwrap();
        assert_abs_diff_eq!(sp.k[0], 0.676253150797, epsilon = 1e-8);
    }

    #[test]
    fn neumann_limit_is_n_pi() {
        let sp = Spectrum::solve(0.0, 0.0, 5, 1e-10).unwrap();
        for (n, k) in sp.k.iter().enumerate() {
            assert_abs_diff_eq!(k, &((n + 1) as f64 * PI), epsilon = 1e-9);
        }
        for g in &sp.gaps {
            assert_abs_diff_eq!(g, &PI, epsilon = 1e-9);
        }
    }

    #[test]
    fn negative_b0_moves_first_root_past_pi_over_2() {
        let sp = Spectrum::solve(0.05, -1.0, 3, 1e-8).unwrap();
        assert!(sp.k[0] > PI / 2.0);
        for k in &sp.k {
            assert!(bc_residual(*k, 0.05, -1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn masses_match_direct_evaluation() {
        // frozen via high-precision evaluation of the mass formula
        assert_abs_diff_eq!(mode_mass(0.8495, 0.05), 1.6273584854, epsilon = 2e-9);
        assert_abs_diff_eq!(mode_mass(3.2819, 0.05), 1.1402372595, epsilon = 2e-9);
        // kd = n pi: mass = 1 + 2 chi0 exactly
        assert_abs_diff_eq!(mode_mass(PI, 0.7), 2.4, epsilon = 1e-12);
        assert_abs_diff_eq!(mode_mass(2.0 * PI, 0.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gap_profile_tabulates_and_tags_errors() {
        let rows = gap_profile(0.05, &[0.0, 1.0], 3).unwrap();
        assert_eq!(rows.len(), 6);
        let d1 = rows
            .iter()
            .find(|r| r.b0 == 1.0 && r.n == 1)
            .and_then(|r| r.gap)
            .unwrap();
        assert_abs_diff_eq!(d1, K_B1_CHI005[1] - K_B1_CHI005[0], epsilon = 1e-8);
        assert!(gap_profile(0.05, &[], 3).is_err());
    }

    #[test]
    fn gaps_approach_pi_for_large_b0() {
        let sp = Spectrum::solve(0.05, 1000.0, 8, 1e-8).unwrap();
        for g in &sp.gaps {
            assert!((g - PI).abs() / PI < 0.01, "gap {g} far from pi");
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let a = Spectrum::solve(0.3, 7.7, 12, 1e-9).unwrap();
        let b = Spectrum::solve(0.3, 7.7, 12, 1e-9).unwrap();
        assert_eq!(a, b); // bit-identical
    }

    #[test]
    fn resonance_matching() {
        let sp = Spectrum::solve(0.05, 1.0, 4, 1e-9).unwrap();
        let rs = resonant_set(&sp, 2.0 * sp.k[0], 1e-2);
        assert_eq!(rs, vec![Resonance::SelfMode(1)]);

        // k2 - k1 sits 0.08 above 2 k1 here; both match at a loose tolerance
        let sp2 = Spectrum::solve(0.01, 4.96, 4, 1e-9).unwrap();
        let rs2 = resonant_set(&sp2, 2.0 * sp2.k[0], 0.1);
        assert!(rs2.contains(&Resonance::SelfMode(1)));
        assert!(rs2.contains(&Resonance::Pair(1, 2, PairSign::Difference)));

        assert!(resonant_set(&sp, 100.0, 1e-2).is_empty());
    }
}
