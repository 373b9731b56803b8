//! Spin-S coherent-state clocks.
//!
//! A spin-S coherent state is the rotation of the extreme eigenstate
//! `m = S` to polar angle `theta`, azimuth `phi`. Its amplitude over the
//! eigenstates `m = -S..S` carries binomial weights, and the overlap of two
//! such states depends only on the angle between their Bloch vectors:
//! `cos^{2S}(alpha/2)`. The closed forms here are cross-checked against a
//! brute-force amplitude inner product (the oracle) in the test suite.
//!
//! Spin is stored doubled (`2S` as an integer) so half-integer labels are
//! exact.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("spin value {0} is not a positive half-integer")]
    InvalidSpin(f64),
    #[error("polar angle {0} outside [0, pi]")]
    ThetaOutOfRange(f64),
    #[error("spin mismatch: 2S = {0} vs 2S = {1}")]
    SpinMismatch(u32, u32),
}

/// Half-integer spin label, stored as `2S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HalfSpin(u32);

impl HalfSpin {
    /// From the doubled value; `two_s` must be positive.
    pub fn from_doubled(two_s: u32) -> Result<Self, SpinError> {
        if two_s == 0 {
            return Err(SpinError::InvalidSpin(0.0));
        }
        Ok(Self(two_s))
    }

    /// From a spin value like 0.5, 1.0, 8.0; rejects anything that is not a
    /// positive half-integer.
    pub fn from_value(s: f64) -> Result<Self, SpinError> {
        let doubled = 2.0 * s;
        if !doubled.is_finite() || doubled < 1.0 || (doubled - doubled.round()).abs() > 1e-9 {
            return Err(SpinError::InvalidSpin(s));
        }
        Ok(Self(doubled.round() as u32))
    }

    pub fn doubled(&self) -> u32 {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Number of levels, `2S + 1`.
    pub fn levels(&self) -> usize {
        self.0 as usize + 1
    }
}

/// ln C(n, k) via a running log-factorial table; exact enough through
/// n = 100 and immune to the overflow that direct factorials hit near S = 15.
fn ln_binomial(n: u32, k: u32) -> f64 {
    debug_assert!(k <= n);
    let mut lf = vec![0.0f64; n as usize + 1];
    for i in 1..=n as usize {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    lf[n as usize] - lf[k as usize] - lf[(n - k) as usize]
}

/// Spin-S coherent state `|theta, phi>` with amplitudes indexed
/// `m = +S .. -S` (index 0 is the extreme state `m = S`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinCoherentState {
    spin: HalfSpin,
    theta: f64,
    phi: f64,
    amplitudes: Vec<Complex64>,
}

impl SpinCoherentState {
    pub fn spin(&self) -> HalfSpin {
        self.spin
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// Build the coherent state: `a_m = cos^{S+m}(t/2) sin^{S-m}(t/2)
/// sqrt(C(2S, S+m)) e^{-i m phi}`, computed in log space.
pub fn spin_coherent_state(
    spin: HalfSpin,
    theta: f64,
    phi: f64,
) -> Result<SpinCoherentState, SpinError> {
    if !theta.is_finite() || !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(SpinError::ThetaOutOfRange(theta));
    }
    let two_s = spin.doubled();
    let c = (0.5 * theta).cos();
    let s = (0.5 * theta).sin();
    let mut amplitudes = Vec::with_capacity(spin.levels());
    for i in 0..=two_s {
        // index i runs from m = +S (i = 0) down to m = -S (i = 2S)
        let exp_c = two_s - i; // S + m
        let exp_s = i; // S - m
        let mag = if (exp_c > 0 && c == 0.0) || (exp_s > 0 && s == 0.0) {
            0.0
        } else {
            let mut ln_mag = 0.5 * ln_binomial(two_s, i);
            if exp_c > 0 {
                ln_mag += exp_c as f64 * c.ln();
            }
            if exp_s > 0 {
                ln_mag += exp_s as f64 * s.ln();
            }
            ln_mag.exp()
        };
        let m = (two_s as f64 - 2.0 * i as f64) / 2.0;
        amplitudes.push(Complex64::from_polar(mag, -m * phi));
    }
    Ok(SpinCoherentState {
        spin,
        theta,
        phi,
        amplitudes,
    })
}

/// Independent oracle for the closed-form overlap: the plain amplitude inner
/// product `|sum_m conj(a_m) b_m|`.
pub fn brute_force_overlap(
    a: &SpinCoherentState,
    b: &SpinCoherentState,
) -> Result<f64, SpinError> {
    if a.spin != b.spin {
        return Err(SpinError::SpinMismatch(a.spin.doubled(), b.spin.doubled()));
    }
    let sum: Complex64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(sum.norm().min(1.0))
}

/// Closed-form overlap `cos^{2S}(alpha/2)` for Bloch-vector angle `alpha`.
pub fn spin_overlap_closed(spin: HalfSpin, alpha: f64) -> f64 {
    (0.5 * alpha).cos().powi(spin.doubled() as i32).abs()
}

/// Angle between the Bloch vectors of `(theta_a, phi_a)` and
/// `(theta_b, phi_b)`.
pub fn bloch_angle(theta_a: f64, phi_a: f64, theta_b: f64, phi_b: f64) -> f64 {
    let dot = theta_a.sin() * theta_b.sin() * (phi_a - phi_b).cos()
        + theta_a.cos() * theta_b.cos();
    dot.clamp(-1.0, 1.0).acos()
}

/// `1 - [1 - x]^{2S}` evaluated stably for small `x` through
/// `log1p`/`expm1`.
fn one_minus_pow(two_s: u32, x: f64) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    (-f64::exp_m1(two_s as f64 * f64::ln_1p(-x))).clamp(0.0, 1.0)
}

/// Multilevel distinguishability for two coherent states at the same
/// latitude: `D^2 = 1 - [1 - sin^2(theta) sin^2(dphi/2)]^{2S}`.
pub fn multilevel_distinguishability(spin: HalfSpin, theta: f64, delta_phi: f64) -> f64 {
    let st = theta.sin();
    let sh = (0.5 * delta_phi).sin();
    one_minus_pow(spin.doubled(), st * st * sh * sh).sqrt()
}

/// Ideal (equatorial-preparation) distinguishability,
/// `D_I = sqrt(1 - cos^{4S}(dphi/2))`.
pub fn multilevel_ideal_distinguishability(spin: HalfSpin, delta_phi: f64) -> f64 {
    let sh = (0.5 * delta_phi).sin();
    one_minus_pow(spin.doubled(), sh * sh).sqrt()
}

/// Clockness `C = D / D_I` for a spin-S clock.
///
/// The ratio is 0/0 at `delta_phi = 0`; the analytic limit there is
/// `sin(theta)` for every spin, and the `log1p`/`expm1` route keeps the ratio
/// stable arbitrarily close to it.
pub fn multilevel_clockness(spin: HalfSpin, theta: f64, delta_phi: f64) -> f64 {
    let st = theta.sin();
    let sh = (0.5 * delta_phi).sin();
    let x = sh * sh;
    if x == 0.0 {
        return st.abs();
    }
    let d2 = one_minus_pow(spin.doubled(), st * st * x);
    let di2 = one_minus_pow(spin.doubled(), x);
    (d2 / di2).clamp(0.0, 1.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn spin(s: f64) -> HalfSpin {
        HalfSpin::from_value(s).unwrap()
    }

    #[test]
    fn spin_label_validation() {
        assert!(HalfSpin::from_value(0.5).is_ok());
        assert!(HalfSpin::from_value(8.0).is_ok());
        assert!(HalfSpin::from_value(0.0).is_err());
        assert!(HalfSpin::from_value(0.7).is_err());
        assert!(HalfSpin::from_value(-1.0).is_err());
        assert!(HalfSpin::from_doubled(0).is_err());
        assert_eq!(spin(1.5).doubled(), 3);
        assert_eq!(spin(1.5).levels(), 4);
    }

    #[test]
    fn coherent_state_examples() {
        // S = 1/2 at the north pole: extreme eigenstate.
        let st = spin_coherent_state(spin(0.5), 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(st.amplitudes()[0].norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.amplitudes()[1].norm(), 0.0, epsilon = 1e-15);

        // S = 1/2 equal superposition.
        let st = spin_coherent_state(spin(0.5), FRAC_PI_2, 0.0).unwrap();
        assert_abs_diff_eq!(st.amplitudes()[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(st.amplitudes()[1].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);

        // S = 1 on the equator: (0.5, 1/sqrt(2), 0.5) on m = (+1, 0, -1).
        let st = spin_coherent_state(spin(1.0), FRAC_PI_2, 0.0).unwrap();
        assert_abs_diff_eq!(st.amplitudes()[0].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(st.amplitudes()[1].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(st.amplitudes()[2].re, 0.5, epsilon = 1e-12);

        assert!(spin_coherent_state(spin(1.0), -0.1, 0.0).is_err());
    }

    #[test]
    fn brute_force_overlap_examples() {
        let a = spin_coherent_state(spin(0.5), FRAC_PI_2, 0.0).unwrap();
        assert_abs_diff_eq!(brute_force_overlap(&a, &a).unwrap(), 1.0, epsilon = 1e-12);

        let b = spin_coherent_state(spin(0.5), FRAC_PI_2, PI).unwrap();
        assert_abs_diff_eq!(brute_force_overlap(&a, &b).unwrap(), 0.0, epsilon = 1e-12);

        // S = 8 quarter-turn on the equator: cos^16(pi/4) = 2^-8.
        let u = spin_coherent_state(spin(8.0), FRAC_PI_2, 0.0).unwrap();
        let d = spin_coherent_state(spin(8.0), FRAC_PI_2, -FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(brute_force_overlap(&u, &d).unwrap(), 0.00390625, epsilon = 1e-10);

        let other = spin_coherent_state(spin(1.0), 0.2, 0.0).unwrap();
        assert!(brute_force_overlap(&a, &other).is_err());
    }

    #[test]
    fn closed_form_overlap_examples() {
        assert_abs_diff_eq!(spin_overlap_closed(spin(8.0), 0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spin_overlap_closed(spin(8.0), FRAC_PI_2), 0.00390625, epsilon = 1e-12);
        // S = 1/2 reduces to the two-level cos(alpha/2).
        for alpha in [0.0, 0.3, 1.1, 2.5, PI] {
            assert_abs_diff_eq!(
                spin_overlap_closed(spin(0.5), alpha),
                (0.5 * alpha).cos().abs(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn multilevel_distinguishability_examples() {
        // S = 1/2 agrees with the two-level formula.
        for (theta, dphi) in [(0.4, 0.9), (FRAC_PI_2, PI), (1.2, 0.1)] {
            let a = clock::ClockState::new(theta, 0.0).unwrap();
            let b = clock::ClockState::new(theta, dphi).unwrap();
            assert_abs_diff_eq!(
                multilevel_distinguishability(spin(0.5), theta, dphi),
                clock::distinguishability(a, b),
                epsilon = 1e-12
            );
        }
        assert_abs_diff_eq!(
            multilevel_distinguishability(spin(3.0), 0.7, 0.0),
            0.0,
            epsilon = 1e-15
        );
        // S = 8, equator, quarter turn: sqrt(1 - 2^-16).
        assert_abs_diff_eq!(
            multilevel_distinguishability(spin(8.0), FRAC_PI_2, FRAC_PI_2),
            (1.0 - 2f64.powi(-16)).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn multilevel_ideal_distinguishability_examples() {
        assert_abs_diff_eq!(
            multilevel_ideal_distinguishability(spin(8.0), 0.0),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            multilevel_ideal_distinguishability(spin(0.5), PI),
            1.0,
            epsilon = 1e-12
        );
        // S = 8, dphi = pi/4: check against the oracle built from equator states.
        let u = spin_coherent_state(spin(8.0), FRAC_PI_2, 0.0).unwrap();
        let d = spin_coherent_state(spin(8.0), FRAC_PI_2, FRAC_PI_4).unwrap();
        let ov = brute_force_overlap(&u, &d).unwrap();
        assert_abs_diff_eq!(
            multilevel_ideal_distinguishability(spin(8.0), FRAC_PI_4),
            (1.0 - ov * ov).sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn clockness_limit_and_ordering() {
        // dphi -> 0 limit is sin(theta) for every spin.
        for s in [0.5, 1.0, 2.5, 8.0] {
            for theta in [0.2, FRAC_PI_4, 1.2, FRAC_PI_2] {
                assert!(
                    (multilevel_clockness(spin(s), theta, 1e-4) - theta.sin()).abs() < 1e-6,
                    "S={s} theta={theta}"
                );
            }
        }
        // theta = pi/2: D = D_I identically, so C = 1 for every dphi != 0.
        for s in [0.5, 2.0, 8.0] {
            for dphi in [0.3, 1.5, PI] {
                assert_abs_diff_eq!(
                    multilevel_clockness(spin(s), FRAC_PI_2, dphi),
                    1.0,
                    epsilon = 1e-12
                );
            }
        }
        // Large-dphi ordering at theta = pi/4: clockness grows with spin.
        let c_half = multilevel_clockness(spin(0.5), FRAC_PI_4, 0.9 * PI);
        let c_two = multilevel_clockness(spin(2.0), FRAC_PI_4, 0.9 * PI);
        let c_eight = multilevel_clockness(spin(8.0), FRAC_PI_4, 0.9 * PI);
        assert!(c_half < c_two && c_two < c_eight, "{c_half} {c_two} {c_eight}");
    }

    #[test]
    fn normalization_up_to_s_50() {
        for two_s in [1u32, 2, 7, 16, 31, 64, 100] {
            let spin = HalfSpin::from_doubled(two_s).unwrap();
            for theta in [0.0, 0.3, FRAC_PI_2, 2.8, PI] {
                let st = spin_coherent_state(spin, theta, 0.77).unwrap();
                let norm: f64 = st.amplitudes().iter().map(|a| a.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12, "2S={two_s} theta={theta}: {norm}");
            }
        }
    }

    #[test]
    fn distinguishability_monotone_in_spin() {
        for theta in [0.3, FRAC_PI_4, 1.2] {
            for dphi in [0.2, 1.0, 2.8] {
                let mut prev = 0.0;
                for two_s in 1..=16 {
                    let d = multilevel_distinguishability(
                        HalfSpin::from_doubled(two_s).unwrap(),
                        theta,
                        dphi,
                    );
                    assert!(d >= prev - 1e-15, "2S={two_s}");
                    prev = d;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn oracle_matches_closed_form(
            two_s in 1u32..=16,
            ta in 0.0..PI, pa in -PI..PI,
            tb in 0.0..PI, pb in -PI..PI,
        ) {
            let spin = HalfSpin::from_doubled(two_s).unwrap();
            let a = spin_coherent_state(spin, ta, pa).unwrap();
            let b = spin_coherent_state(spin, tb, pb).unwrap();
            let oracle = brute_force_overlap(&a, &b).unwrap();
            let closed = spin_overlap_closed(spin, bloch_angle(ta, pa, tb, pb));
            prop_assert!((oracle - closed).abs() < 1e-10);
        }

        #[test]
        fn oracle_invariant_under_common_shift(
            two_s in 1u32..=16,
            ta in 0.0..PI, pa in -PI..PI,
            tb in 0.0..PI, pb in -PI..PI,
            shift in -PI..PI,
        ) {
            let spin = HalfSpin::from_doubled(two_s).unwrap();
            let before = brute_force_overlap(
                &spin_coherent_state(spin, ta, pa).unwrap(),
                &spin_coherent_state(spin, tb, pb).unwrap(),
            ).unwrap();
            let after = brute_force_overlap(
                &spin_coherent_state(spin, ta, pa + shift).unwrap(),
                &spin_coherent_state(spin, tb, pb + shift).unwrap(),
            ).unwrap();
            prop_assert!((before - after).abs() < 1e-12);
        }

        #[test]
        fn spin_half_reduces_to_two_level(theta in 0.0..PI, dphi in -PI..PI) {
            let s = spin(0.5);
            let a = clock::ClockState::new(theta, 0.0).unwrap();
            let b = clock::ClockState::new(theta, dphi).unwrap();
            // compare squares: the overlap route loses half its digits as
            // D -> 0, while D^2 stays accurate to machine precision
            let d_ml = multilevel_distinguishability(s, theta, dphi);
            let d_cl = clock::distinguishability(a, b);
            prop_assert!((d_ml * d_ml - d_cl * d_cl).abs() < 1e-12);
            let di_ml = multilevel_ideal_distinguishability(s, dphi);
            let di_cl = clock::ideal_distinguishability(dphi);
            prop_assert!((di_ml * di_ml - di_cl * di_cl).abs() < 1e-12);
        }
    }
}
