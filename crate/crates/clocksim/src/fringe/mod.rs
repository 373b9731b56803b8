//! Visibility extraction from density patterns and Monte Carlo shot
//! ensembles.
//!
//! The fringe model is a Gaussian envelope modulated by a sinusoid,
//! `rho(z) = A exp(-(z - z_c)^2 / 2 sigma^2) (1 + V sin(k z + chi)) + b`.
//! Seeding is spectral: envelope moments give `(A, z_c, sigma, b)`, the
//! dominant peak of the detrended residual spectrum gives `(k, chi, V)`, and
//! a damped least-squares polish does the rest.

mod lm;
mod shots;

pub use shots::{simulate_shots, visibility_stats, NoiseParams, ShotSet, VisibilityStats};
pub(crate) use shots::splitmix64;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::sim::FringeProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("profile has no usable fringe structure")]
    DegenerateInput,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("reference visibility {0} must lie in (0, 1]")]
    InvalidReference(f64),
    #[error("need at least 2 usable shots")]
    TooFewShots,
}

/// Converged parameters of the Gaussian-times-sinusoid model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    pub visibility: f64,
    pub wavenumber: f64,
    pub phase: f64,
    pub offset: f64,
    pub rms_residual: f64,
    pub converged: bool,
}

#[cfg(test)]
fn model_value(z: f64, p: &[f64]) -> f64 {
    let (a, zc, sigma, v, k, chi, b) = (p[0], p[1], p[2], p[3], p[4], p[5], p[6]);
    let arg = (z - zc) / sigma;
    a * (-0.5 * arg * arg).exp() * (1.0 + v * (k * z + chi).sin()) + b
}

/// Spectral seed: dominant discrete-frequency component of the detrended
/// fringe residual. Returns `(k, chi, v)`.
fn spectral_seed(z: &[f64], resid: &[f64]) -> (f64, f64, f64) {
    let n = z.len();
    let span = z[n - 1] - z[0];
    let n_used = resid.iter().filter(|r| **r != 0.0).count().max(1);
    let mut best = (0.0, Complex64::new(0.0, 0.0));
    for j in 1..=n / 2 {
        let k = 2.0 * std::f64::consts::PI * j as f64 / span;
        let f: Complex64 = z
            .iter()
            .zip(resid)
            .map(|(&zi, &ri)| Complex64::from_polar(ri, -k * zi))
            .sum();
        if f.norm_sqr() > best.1.norm_sqr() {
            best = (k, f);
        }
    }
    let (k, f) = best;
    // resid ~ v sin(k z + chi) => F(k) ~ (n v / 2) e^{i(chi - pi/2)}
    let v = (2.0 * f.norm() / n_used as f64).min(1.5);
    let chi = f.arg() + std::f64::consts::FRAC_PI_2;
    (k, chi, v)
}

/// Least-squares fit of the 7-parameter fringe model.
///
/// Non-convergence is reported through [`FitResult::converged`] with the
/// best parameters found; a flat profile (no envelope, no fringes) is a
/// [`FitError::DegenerateInput`] because its visibility is undefined.
pub fn fit_fringe(profile: &FringeProfile) -> Result<FitResult, FitError> {
    let z = profile.z();
    let d = profile.density();
    let n = z.len();
    if n < 32 {
        return Err(FitError::TooFewSamples { needed: 32, got: n });
    }
    let dmax = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dmax - dmin).is_finite() || dmax - dmin <= 1e-12 * dmax.abs().max(1e-300) {
        return Err(FitError::DegenerateInput);
    }

    // envelope moments over the baseline-subtracted profile
    let b0 = dmin;
    let weights: Vec<f64> = d.iter().map(|v| v - b0).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(FitError::DegenerateInput);
    }
    let zc0 = z.iter().zip(&weights).map(|(zi, w)| zi * w).sum::<f64>() / total;
    let var = z
        .iter()
        .zip(&weights)
        .map(|(zi, w)| (zi - zc0) * (zi - zc0) * w)
        .sum::<f64>()
        / total;
    let dz = (z[n - 1] - z[0]) / (n - 1) as f64;
    let sigma0 = var.max(dz * dz).sqrt();
    let area = crate::sim::trapezoid(z, &weights);
    let a0 = (area / ((2.0 * std::f64::consts::PI).sqrt() * sigma0)).max(1e-3 * (dmax - dmin));

    // detrended fringe residual where the envelope carries weight
    let resid: Vec<f64> = z
        .iter()
        .zip(d)
        .map(|(&zi, &di)| {
            let arg = (zi - zc0) / sigma0;
            let env = a0 * (-0.5 * arg * arg).exp();
            if env > 0.05 * a0 {
                (di - b0) / env - 1.0
            } else {
                0.0
            }
        })
        .collect();
    let (k0, chi0, v0) = spectral_seed(z, &resid);

    let p0 = [a0, zc0, sigma0, v0, k0, chi0, b0];
    let out = lm::levenberg_marquardt(&p0, n, |p, r, mut jac| {
        for i in 0..n {
            let (a, zc, sigma, v, k, chi) = (p[0], p[1], p[2], p[3], p[4], p[5]);
            let zi = z[i];
            let arg = (zi - zc) / sigma;
            let env = (-0.5 * arg * arg).exp();
            let s = (k * zi + chi).sin();
            let c = (k * zi + chi).cos();
            let fringe = 1.0 + v * s;
            r[i] = a * env * fringe + p[6] - d[i];
            if let Some(j) = jac.as_deref_mut() {
                let row = &mut j[i * 7..(i + 1) * 7];
                row[0] = env * fringe;
                row[1] = a * env * fringe * arg / sigma;
                row[2] = a * env * fringe * arg * arg / sigma;
                row[3] = a * env * s;
                row[4] = a * env * v * c * zi;
                row[5] = a * env * v * c;
                row[6] = 1.0;
            }
        }
    });

    let mut p = out.params;
    // canonical parameter signs: sigma > 0, k > 0, v in [0, 1]
    if p[2] < 0.0 {
        p[2] = -p[2];
    }
    if p[4] < 0.0 {
        p[4] = -p[4];
        p[5] = std::f64::consts::PI - p[5];
    }
    if p[3] < 0.0 {
        p[3] = -p[3];
        p[5] += std::f64::consts::PI;
    }
    Ok(FitResult {
        amplitude: p[0],
        center: p[1],
        sigma: p[2],
        visibility: p[3].clamp(0.0, 1.0),
        wavenumber: p[4],
        phase: crate::clock::wrap_phase(p[5]),
        offset: p[6],
        rms_residual: (out.cost / n as f64).sqrt(),
        converged: out.converged,
    })
}

/// Fitted rectified-cosine visibility curve `a |cos((omega t + phi0) / 2)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityCurveFit {
    pub amplitude: f64,
    pub omega: f64,
    pub phase_offset: f64,
    pub rms_residual: f64,
    pub converged: bool,
}

/// Fit `V(T_G) = a |cos((omega T_G + phi0) / 2)|`.
///
/// The squared data is linear in `cos(omega t)`, so `omega` is seeded by a
/// grid search with linear phasor regression, then polished with multi-start
/// over the phase offset.
pub fn fit_visibility_curve(t: &[f64], v: &[f64]) -> Result<VisibilityCurveFit, FitError> {
    let n = t.len();
    if n < 6 || v.len() != n {
        return Err(FitError::TooFewSamples { needed: 6, got: n.min(v.len()) });
    }
    let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if vmax - vmin < 1e-6 {
        return Err(FitError::DegenerateInput);
    }
    let span = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - t.iter().cloned().fold(f64::INFINITY, f64::min);
    if span <= 0.0 {
        return Err(FitError::DegenerateInput);
    }
    let mut min_dt = f64::INFINITY;
    let mut sorted: Vec<f64> = t.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in sorted.windows(2) {
        if w[1] - w[0] > 0.0 {
            min_dt = min_dt.min(w[1] - w[0]);
        }
    }

    // grid-search omega on V^2 = c + p cos(omega t) + q sin(omega t)
    let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
    let omega_lo = std::f64::consts::PI / span;
    let omega_hi = std::f64::consts::PI / min_dt;
    let mut best = (omega_lo, f64::INFINITY, 0.0, 0.0, 0.0);
    let steps = 600;
    for i in 0..=steps {
        let omega = omega_lo + (omega_hi - omega_lo) * i as f64 / steps as f64;
        // 3x3 normal equations for (c, p, q)
        let mut m = [0.0f64; 9];
        let mut rhs = [0.0f64; 3];
        for (&ti, &yi) in t.iter().zip(&v2) {
            let basis = [1.0, (omega * ti).cos(), (omega * ti).sin()];
            for r in 0..3 {
                rhs[r] += basis[r] * yi;
                for c in 0..3 {
                    m[r * 3 + c] += basis[r] * basis[c];
                }
            }
        }
        // solve by hand (symmetric 3x3, Cramer)
        let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6]);
        if det.abs() < 1e-300 {
            continue;
        }
        let solve_col = |col: usize| {
            let mut mm = m;
            for r in 0..3 {
                mm[r * 3 + col] = rhs[r];
            }
            (mm[0] * (mm[4] * mm[8] - mm[5] * mm[7]) - mm[1] * (mm[3] * mm[8] - mm[5] * mm[6])
                + mm[2] * (mm[3] * mm[7] - mm[4] * mm[6]))
                / det
        };
        let (c, p, q) = (solve_col(0), solve_col(1), solve_col(2));
        let sse: f64 = t
            .iter()
            .zip(&v2)
            .map(|(&ti, &yi)| {
                let fit = c + p * (omega * ti).cos() + q * (omega * ti).sin();
                (fit - yi) * (fit - yi)
            })
            .sum();
        if sse < best.1 {
            best = (omega, sse, c, p, q);
        }
    }
    let (omega0, _, c, p, q) = best;
    let amp0 = (c.max(0.0) + p.hypot(q)).sqrt().max(1e-6);
    let phi_seed = (-q).atan2(p);

    // multi-start polish on the rectified model
    let mut winner: Option<lm::LmOutcome> = None;
    for offset in [phi_seed, 0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI, 1.5 * std::f64::consts::PI] {
        let p0 = [amp0, omega0, offset];
        let out = lm::levenberg_marquardt(&p0, n, |par, r, mut jac| {
            for i in 0..n {
                let u = par[1] * t[i] + par[2];
                let half = 0.5 * u;
                let cosv = half.cos();
                let mag = cosv.abs();
                r[i] = par[0] * mag - v[i];
                if let Some(j) = jac.as_deref_mut() {
                    let row = &mut j[i * 3..(i + 1) * 3];
                    let dmag = -0.5 * cosv.signum() * half.sin();
                    row[0] = mag;
                    row[1] = par[0] * dmag * t[i];
                    row[2] = par[0] * dmag;
                }
            }
        });
        if winner.as_ref().map_or(true, |w| out.cost < w.cost) {
            winner = Some(out);
        }
    }
    let out = winner.unwrap();
    let mut pars = out.params;
    if pars[1] < 0.0 {
        pars[1] = -pars[1];
        pars[2] = -pars[2];
    }
    Ok(VisibilityCurveFit {
        amplitude: pars[0].abs(),
        omega: pars[1],
        phase_offset: pars[2].rem_euclid(2.0 * std::f64::consts::PI),
        rms_residual: (out.cost / n as f64).sqrt(),
        converged: out.converged,
    })
}

/// Normalize a visibility against a single-state reference,
/// `min(V / V_ref, 1)`.
pub fn normalize_visibility(v: f64, v_ref: f64) -> Result<f64, FitError> {
    if !(v_ref > 0.0 && v_ref <= 1.0) {
        return Err(FitError::InvalidReference(v_ref));
    }
    Ok((v / v_ref).min(1.0))
}

/// Ideal distinguishability from two single-state interferometer phases,
/// `|sin((phi2 - phi1) / 2)|`.
pub fn d_i_from_phases(phi2: f64, phi1: f64) -> f64 {
    (0.5 * (phi2 - phi1)).sin().abs()
}
