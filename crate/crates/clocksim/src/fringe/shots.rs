//! Monte Carlo detection: finite atom number, shot-to-shot fringe phase
//! jitter, and readout noise on top of an ideal density profile.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{fit_fringe, FitError, FitResult};
use crate::sim::FringeProfile;

/// Detection noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// mean atom number per shot; Poisson statistics per bin
    pub atom_number: u64,
    /// std-dev of the shot-to-shot fringe phase, radians
    pub phase_jitter: f64,
    /// std-dev of additive readout noise, in counts per bin
    pub readout: f64,
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        NoiseParams {
            atom_number: 0,
            phase_jitter: 0.0,
            readout: 0.0,
        }
    }
}

/// A reproducible ensemble of simulated detection images.
#[derive(Debug, Clone)]
pub struct ShotSet {
    pub shots: Vec<FringeProfile>,
    pub seed: u64,
    pub noise: NoiseParams,
}

/// Aggregate visibility over a shot ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityStats {
    /// mean of per-shot fitted visibilities
    pub mean_single_shot: f64,
    /// standard error of that mean
    pub sem: f64,
    /// visibility fitted to the summed (ensemble-averaged) density
    pub combined: f64,
    pub n_shots: usize,
    pub n_failed: usize,
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(shot)))
}

fn resynth(fit: &FitResult, z: &[f64], chi: f64) -> Vec<f64> {
    z.iter()
        .map(|&zi| {
            let arg = (zi - fit.center) / fit.sigma;
            (fit.amplitude
                * (-0.5 * arg * arg).exp()
                * (1.0 + fit.visibility * (fit.wavenumber * zi + chi).sin())
                + fit.offset)
                .max(0.0)
        })
        .collect()
}

/// Generate `n_shots` noisy detection images from an ideal density profile.
///
/// The phase jitter needs the fringe phase as an explicit parameter, so the
/// profile is fitted once up front and each shot is resynthesized from the
/// fitted model at a jittered phase. If the profile has no fittable fringe
/// (e.g. zero visibility) the raw profile is used and only counting and
/// readout noise apply.
pub fn simulate_shots(
    profile: &FringeProfile,
    n_shots: usize,
    seed: u64,
    noise: &NoiseParams,
) -> Result<ShotSet, FitError> {
    let z = profile.z();
    let n = z.len();
    let dz = (z[n - 1] - z[0]) / (n - 1) as f64;

    let base_fit = if noise.phase_jitter > 0.0 {
        match fit_fringe(profile) {
            Ok(f) if f.converged => Some(f),
            _ => None,
        }
    } else {
        None
    };

    let jitter_dist = Normal::new(0.0, noise.phase_jitter.max(f64::MIN_POSITIVE)).unwrap();
    let readout_dist = Normal::new(0.0, noise.readout.max(f64::MIN_POSITIVE)).unwrap();

    let mut shots = Vec::with_capacity(n_shots);
    for s in 0..n_shots {
        let mut rng = shot_rng(seed, s as u64);

        let ideal: Vec<f64> = match &base_fit {
            Some(fit) if noise.phase_jitter > 0.0 => {
                let chi = fit.phase + jitter_dist.sample(&mut rng);
                resynth(fit, z, chi)
            }
            _ => profile.density().to_vec(),
        };

        let density: Vec<f64> = if noise.atom_number > 0 {
            let scale = noise.atom_number as f64 * dz;
            ideal
                .iter()
                .map(|&d| {
                    let lambda = d * scale;
                    let mut counts = if lambda > 0.0 {
                        Poisson::new(lambda).unwrap().sample(&mut rng)
                    } else {
                        0.0
                    };
                    if noise.readout > 0.0 {
                        counts += readout_dist.sample(&mut rng);
                    }
                    counts.max(0.0) / scale
                })
                .collect()
        } else if noise.readout > 0.0 {
            ideal
                .iter()
                .map(|&d| (d + readout_dist.sample(&mut rng)).max(0.0))
                .collect()
        } else {
            ideal
        };

        shots.push(FringeProfile::new(z.to_vec(), density).expect("grid already validated"));
    }

    Ok(ShotSet {
        shots,
        seed,
        noise: *noise,
    })
}

/// Fit every shot and the ensemble-summed density.
///
/// Shots whose individual fit fails or does not converge are excluded from
/// the single-shot mean and counted in `n_failed`; the combined fit always
/// uses all shots.
pub fn visibility_stats(set: &ShotSet) -> Result<VisibilityStats, FitError> {
    let mut vs = Vec::with_capacity(set.shots.len());
    let mut n_failed = 0usize;
    for shot in &set.shots {
        match fit_fringe(shot) {
            Ok(fit) if fit.converged => vs.push(fit.visibility),
            _ => n_failed += 1,
        }
    }
    if vs.len() < 2 {
        return Err(FitError::TooFewShots);
    }

    let n = vs.len() as f64;
    let mean = vs.iter().sum::<f64>() / n;
    let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sem = (var / n).sqrt();

    let z = set.shots[0].z().to_vec();
    let mut summed = vec![0.0; z.len()];
    for shot in &set.shots {
        for (acc, d) in summed.iter_mut().zip(shot.density()) {
            *acc += d;
        }
    }
    let combined_fit = fit_fringe(&FringeProfile::new(z, summed).expect("grid already validated"))?;

    Ok(VisibilityStats {
        mean_single_shot: mean,
        sem,
        combined: combined_fit.visibility,
        n_shots: set.shots.len(),
        n_failed,
    })
}
