//! Physics of the simulated clock interferometer.
//!
//! Covers the state-preparation maps (Rabi rotation, Zeeman and gravitational
//! dephasing), free-expansion Gaussian wave packets, synthesis of the
//! entangled-clock and eigenstate-sum interference patterns, the
//! clock-breakup momentum bound, and the post-quantum toy record with the
//! visibility pinned to 1.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::clock::{complementarity_record, ClockError, ComplementarityRecord};

/// Fixed physical constants (SI; field gradients in gauss).
pub mod constants {
    /// Standard gravity, m/s^2.
    pub const G: f64 = 9.80665;
    /// Speed of light, m/s.
    pub const C: f64 = 2.997_924_58e8;
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Bohr magneton over hbar, rad/s per gauss.
    pub const MU_B_OVER_HBAR: f64 = 2.0 * std::f64::consts::PI * 1.399_624_5e6;
    /// Mass of 87Rb, kg.
    pub const RB87_MASS: f64 = 1.443_160_6e-25;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("wave packet parameter {name} = {value} out of range")]
    InvalidPacket { name: &'static str, value: f64 },
    #[error("spatial grid must be strictly increasing with >= 2 points")]
    InvalidGrid,
    #[error("populations must be non-negative and sum to 1 (got sum {0})")]
    UnnormalizedPopulations(f64),
    #[error(transparent)]
    Clock(#[from] ClockError),
}

/// Free-expansion Gaussian wave packet pair: half-separation `z0`, initial
/// width `delta`, particle mass, and expansion time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavePacketParams {
    pub z0: f64,
    pub delta: f64,
    pub mass: f64,
    pub t: f64,
}

impl WavePacketParams {
    pub fn new(z0: f64, delta: f64, mass: f64, t: f64) -> Result<Self, SimError> {
        let check = |name: &'static str, value: f64, strict: bool| {
            if !value.is_finite() || value < 0.0 || (strict && value == 0.0) {
                Err(SimError::InvalidPacket { name, value })
            } else {
                Ok(())
            }
        };
        check("z0", z0, false)?;
        check("delta", delta, true)?;
        check("mass", mass, true)?;
        check("t", t, false)?;
        Ok(Self { z0, delta, mass, t })
    }

    /// Envelope width after free expansion, `delta * sqrt(1 + u^2)` with
    /// `u = hbar t / (2 m delta^2)`.
    pub fn expanded_width(&self) -> f64 {
        let u = constants::HBAR * self.t / (2.0 * self.mass * self.delta * self.delta);
        self.delta * (1.0 + u * u).sqrt()
    }
}

/// Which arm of the interferometer a packet sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Upper,
    Lower,
}

/// Sampled one-dimensional atom-density pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeProfile {
    z: Vec<f64>,
    density: Vec<f64>,
}

impl FringeProfile {
    pub fn new(z: Vec<f64>, density: Vec<f64>) -> Result<Self, SimError> {
        if z.len() < 2 || z.len() != density.len() || z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidGrid);
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(SimError::InvalidGrid);
        }
        Ok(Self { z, density })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Trapezoid integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.z, &self.density)
    }
}

pub(crate) fn trapezoid(z: &[f64], y: &[f64]) -> f64 {
    z.windows(2)
        .zip(y.windows(2))
        .map(|(zw, yw)| 0.5 * (zw[1] - zw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Rabi preparation angle `theta = Omega_R * T_R`, reduced mod 2 pi and
/// reflected into `[0, pi]` so the population stays the physical
/// `sin^2(Omega_R T_R / 2)` under over-rotation.
pub fn rabi_theta(omega_r: f64, t_r: f64) -> f64 {
    let raw = (omega_r * t_r).rem_euclid(2.0 * std::f64::consts::PI);
    if raw > std::f64::consts::PI {
        2.0 * std::f64::consts::PI - raw
    } else {
        raw
    }
}

/// Differential Zeeman phase between two clock packets separated by `dz`
/// in a field gradient: `g_F * (mu_B / hbar) * dB/dz * dz * T_G`.
/// `db_dz` is in gauss per meter.
pub fn zeeman_dephase(g_f: f64, db_dz: f64, dz: f64, t_g: f64) -> f64 {
    g_f * constants::MU_B_OVER_HBAR * db_dz * dz * t_g
}

/// Gravitational red-shift phase `omega0 * g * dz * T / c^2` accumulated
/// while the packets are separated in height by `dz` for lab time `t`.
pub fn gravitational_dephase(omega0: f64, dz: f64, t: f64) -> f64 {
    omega0 * constants::G * dz * t / (constants::C * constants::C)
}

/// Freely expanded Gaussian packet centered at `+z0` (upper) or `-z0`
/// (lower): complex width `4 delta^2 + 2 i hbar t / m`, normalized so
/// the position density integrates to 1.
pub fn packet_amplitude(z: f64, arm: Arm, p: &WavePacketParams) -> Complex64 {
    let center = match arm {
        Arm::Upper => p.z0,
        Arm::Lower => -p.z0,
    };
    let width = Complex64::new(
        4.0 * p.delta * p.delta,
        2.0 * constants::HBAR * p.t / p.mass,
    );
    let dzc = z - center;
    let norm = Complex64::new(
        p.delta,
        constants::HBAR * p.t / (2.0 * p.mass * p.delta),
    );
    let prefactor = (2.0 * std::f64::consts::PI).powf(0.25) * norm.sqrt();
    (Complex64::new(-dzc * dzc, 0.0) / width).exp() / prefactor
}

/// One weighted two-path component: occupation weight and the fringe shift
/// its level carries.
#[derive(Debug, Clone, Copy)]
struct PatternComponent {
    weight: f64,
    shift: f64,
}

/// Weighted sum of per-level two-slit patterns, the shared synthesis core.
///
/// `v_max` scales only the cross (fringe) term, modeling a finite-resolution
/// visibility ceiling; 1.0 is the ideal detector. The result is normalized
/// to unit trapezoid integral.
fn eigenstate_sum_density(
    grid: &[f64],
    components: &[PatternComponent],
    v_max: f64,
    p: &WavePacketParams,
) -> Result<FringeProfile, SimError> {
    if grid.len() < 2 {
        return Err(SimError::InvalidGrid);
    }
    let mut density = Vec::with_capacity(grid.len());
    for &z in grid {
        let up = packet_amplitude(z, Arm::Upper, p);
        let dn = packet_amplitude(z, Arm::Lower, p);
        let direct = up.norm_sqr() + dn.norm_sqr();
        let cross = up * dn.conj();
        let mut rho = 0.0;
        for c in components {
            let interference = (cross * Complex64::from_polar(1.0, c.shift)).re;
            rho += c.weight * 0.5 * (direct + 2.0 * v_max * interference);
        }
        density.push(rho.max(0.0));
    }
    let norm = trapezoid(grid, &density);
    if norm > 0.0 {
        for d in &mut density {
            *d /= norm;
        }
    }
    FringeProfile::new(grid.to_vec(), density)
}

/// Interference pattern of the entangled clock state: the two internal
/// components carry fringe phases `+-delta_phi/2` and their densities add.
///
/// Evaluated at the amplitude level (superpose, then square) so it provides
/// an arithmetic route independent of [`pattern_eigenstate_sum`]. The common
/// preparation azimuth `phi` only multiplies one component by a global phase
/// and cannot change the density.
pub fn pattern_entangled(
    grid: &[f64],
    theta: f64,
    phi: f64,
    delta_phi: f64,
    p: &WavePacketParams,
) -> Result<FringeProfile, SimError> {
    if grid.len() < 2 {
        return Err(SimError::InvalidGrid);
    }
    let c1 = Complex64::new((0.5 * theta).cos(), 0.0);
    let c2 = Complex64::from_polar((0.5 * theta).sin(), phi);
    let half = Complex64::from_polar(1.0, 0.5 * delta_phi);
    let mut density = Vec::with_capacity(grid.len());
    for &z in grid {
        let up = packet_amplitude(z, Arm::Upper, p);
        let dn = packet_amplitude(z, Arm::Lower, p);
        // spinor amplitude per internal level, 1/sqrt(2) per arm
        let amp1 = c1 * (up + dn) * std::f64::consts::FRAC_1_SQRT_2;
        let amp2 = c2 * (up * half + dn * half.conj()) * std::f64::consts::FRAC_1_SQRT_2;
        density.push(amp1.norm_sqr() + amp2.norm_sqr());
    }
    let norm = trapezoid(grid, &density);
    if norm > 0.0 {
        for d in &mut density {
            *d /= norm;
        }
    }
    FringeProfile::new(grid.to_vec(), density)
}

/// No-clock route: a population-weighted sum of per-level two-slit patterns
/// with relative fringe shift `delta_phi` between adjacent levels. For
/// pure-state weights `(cos^2(theta/2), sin^2(theta/2))` this equals
/// [`pattern_entangled`] pointwise.
pub fn pattern_eigenstate_sum(
    grid: &[f64],
    populations: &[f64],
    delta_phi: f64,
    p: &WavePacketParams,
) -> Result<FringeProfile, SimError> {
    pattern_eigenstate_sum_limited(grid, populations, delta_phi, 1.0, p)
}

/// Same as [`pattern_eigenstate_sum`] with a fringe-contrast ceiling
/// `v_max` applied to the cross term.
pub fn pattern_eigenstate_sum_limited(
    grid: &[f64],
    populations: &[f64],
    delta_phi: f64,
    v_max: f64,
    p: &WavePacketParams,
) -> Result<FringeProfile, SimError> {
    let sum: f64 = populations.iter().sum();
    if populations.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(SimError::UnnormalizedPopulations(sum));
    }
    let components: Vec<PatternComponent> = populations
        .iter()
        .enumerate()
        .map(|(j, &weight)| PatternComponent {
            weight,
            shift: j as f64 * delta_phi,
        })
        .collect();
    eigenstate_sum_density(grid, &components, v_max, p)
}

/// Clock pattern with preparation angle `theta` under a visibility ceiling;
/// used by the sweep runner to model the finite optical resolution.
pub fn pattern_clock_limited(
    grid: &[f64],
    theta: f64,
    delta_phi: f64,
    v_max: f64,
    p: &WavePacketParams,
) -> Result<FringeProfile, SimError> {
    let half = 0.5 * theta;
    let components = [
        PatternComponent {
            weight: half.cos().powi(2),
            shift: 0.0,
        },
        PatternComponent {
            weight: half.sin().powi(2),
            shift: delta_phi,
        },
    ];
    eigenstate_sum_density(grid, &components, v_max, p)
}

/// Uniform grid of `points` samples spanning `+-half_widths` expanded
/// envelope widths around the midpoint between the packets.
pub fn default_grid(p: &WavePacketParams, points: usize, half_widths: f64) -> Vec<f64> {
    let hw = half_widths * p.expanded_width();
    let n = points.max(2);
    (0..n)
        .map(|i| -hw + 2.0 * hw * i as f64 / (n - 1) as f64)
        .collect()
}

/// Clock-breakup check: differential momentum kick between the two internal
/// levels compared to the packet momentum width `hbar / (2 delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakupCheck {
    pub ratio: f64,
    pub within_bound: bool,
}

/// Published validity bound on the breakup ratio.
pub const BREAKUP_BOUND: f64 = 0.02;

/// `ratio = |dp| / (hbar / 2 delta)` with
/// `dp = hbar (d omega_1/dz - d omega_2/dz) T_G`.
pub fn breakup_ratio(
    grad_omega_1: f64,
    grad_omega_2: f64,
    t_g: f64,
    p: &WavePacketParams,
) -> BreakupCheck {
    let ratio = 2.0 * p.delta * (grad_omega_1 - grad_omega_2).abs() * t_g;
    BreakupCheck {
        ratio,
        within_bound: ratio <= BREAKUP_BOUND,
    }
}

/// Post-quantum toy record: visibility pinned to 1 regardless of the clock,
/// so the sum `1 + (C * D_I)^2` exceeds 1 whenever `C * D_I > 0`.
pub fn toy_postquantum_visibility(
    clockness: f64,
    ideal_distinguishability: f64,
) -> Result<ComplementarityRecord, ClockError> {
    complementarity_record(1.0, clockness, ideal_distinguishability)
}
