//! Closed-form two-level clock algebra on the Bloch sphere.
//!
//! A two-level clock state is parameterized by a polar angle `theta` (set by
//! the preparation pulse) and an azimuthal angle `phi` (accumulated by free
//! precession). All quantities here — overlap, distinguishability, clockness,
//! visibility — are exact functions of these angles, so this module serves as
//! the analytic reference for everything the pattern-synthesis and fitting
//! pipelines measure numerically.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("polar angle {0} outside [0, pi]")]
    ThetaOutOfRange(f64),
    #[error("occupation probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("{name} = {value} outside [0, 1]")]
    UnitInterval { name: &'static str, value: f64 },
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Pure two-level state `cos(theta/2)|1> + e^{i phi} sin(theta/2)|2>`.
///
/// Construction rejects `theta` outside `[0, pi]` (a folded angle at the call
/// site usually means a sign bug) and wraps `phi` into `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockState {
    theta: f64,
    phi: f64,
}

impl ClockState {
    pub fn new(theta: f64, phi: f64) -> Result<Self, ClockError> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(ClockError::ThetaOutOfRange(theta));
        }
        Ok(Self {
            theta,
            phi: wrap_phase(phi),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Amplitude pair `(cos(theta/2), e^{i phi} sin(theta/2))`; unit norm by
    /// construction.
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let half = 0.5 * self.theta;
        (
            Complex64::new(half.cos(), 0.0),
            Complex64::from_polar(half.sin(), self.phi),
        )
    }
}

/// Unit vector on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// `(sin t cos p, sin t sin p, cos t)` for the given state.
pub fn bloch_vector(state: ClockState) -> BlochVector {
    let (st, ct) = (state.theta.sin(), state.theta.cos());
    BlochVector {
        x: st * state.phi.cos(),
        y: st * state.phi.sin(),
        z: ct,
    }
}

/// `|<a|b>| = cos(alpha/2)` where `alpha` is the angle between the Bloch
/// vectors. Computed through the Bloch scalar product; the half-angle square
/// is clamped to `[0, 1]` before the root so orthogonal pairs cannot produce
/// a NaN from a -1e-16-scale negative.
pub fn overlap_mag(a: ClockState, b: ClockState) -> f64 {
    let dot = bloch_vector(a).dot(&bloch_vector(b));
    (0.5 * (1.0 + dot)).clamp(0.0, 1.0).sqrt()
}

/// `D = sqrt(1 - |<a|b>|^2) = sin(alpha/2)`.
pub fn distinguishability(a: ClockState, b: ClockState) -> f64 {
    let dot = bloch_vector(a).dot(&bloch_vector(b));
    (0.5 * (1.0 - dot)).clamp(0.0, 1.0).sqrt()
}

/// Distinguishability of an ideally prepared (equatorial) clock,
/// `|sin(delta_phi / 2)|`.
pub fn ideal_distinguishability(delta_phi: f64) -> f64 {
    (0.5 * delta_phi).sin().abs()
}

/// Clock preparation quality `C = 2 sqrt(P (1 - P))`, maximal at `P = 1/2`.
pub fn clockness_from_population(p: f64) -> Result<f64, ClockError> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(ClockError::ProbabilityOutOfRange(p));
    }
    Ok((2.0 * (p * (1.0 - p)).sqrt()).min(1.0))
}

/// Visibility of a pure-state clock interferometer,
/// `V = sqrt(1 - sin^2(theta) sin^2(delta_phi/2))`.
///
/// Equals `overlap_mag` of `(theta, phi)` and `(theta, phi + delta_phi)` for
/// any common `phi`.
pub fn visibility_pure(theta: f64, delta_phi: f64) -> f64 {
    let s = theta.sin() * (0.5 * delta_phi).sin();
    (1.0 - s * s).clamp(0.0, 1.0).sqrt()
}

/// One evaluation of the complementarity sum `V^2 + (C * D_I)^2`.
///
/// The sum is never clamped: overshoot above 1 is the diagnostic of interest
/// in the post-quantum toy mode and in noisy fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementarityRecord {
    pub visibility: f64,
    pub clockness: f64,
    pub ideal_distinguishability: f64,
    pub sum: f64,
    pub residual: f64,
}

pub fn complementarity_record(
    visibility: f64,
    clockness: f64,
    ideal_distinguishability: f64,
) -> Result<ComplementarityRecord, ClockError> {
    for (name, value) in [
        ("visibility", visibility),
        ("clockness", clockness),
        ("ideal_distinguishability", ideal_distinguishability),
    ] {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(ClockError::UnitInterval { name, value });
        }
    }
    let sum = visibility * visibility
        + (clockness * ideal_distinguishability) * (clockness * ideal_distinguishability);
    Ok(ComplementarityRecord {
        visibility,
        clockness,
        ideal_distinguishability,
        sum,
        residual: sum - 1.0,
    })
}
