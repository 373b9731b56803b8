//! Named experiment sweeps: each experiment produces one or more
//! [`ComplementarityReport`] tables, written as CSV plus a JSON sidecar
//! with the fully resolved config.
//!
//! The three measured quantities come from three separate pipelines —
//! pattern fit (V), population formula (C), phase difference (D_I) — and
//! are never derived from one another. The [`Pipelines`] trait makes that
//! separation testable: swapping one pipeline for a sentinel must change
//! only its own column.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::clock::{clockness_from_population, ClockError};
use crate::config::{RunConfig, SweepConfig};
use crate::fringe::{
    d_i_from_phases, fit_fringe, normalize_visibility, simulate_shots, visibility_stats, FitError,
    NoiseParams,
};
use crate::report::{ComplementarityReport, ComplementarityRow, Sidecar};
use crate::sim::{
    default_grid, pattern_clock_limited, pattern_eigenstate_sum_limited, rabi_theta, FringeProfile,
    SimError, WavePacketParams,
};
use crate::spin::{
    multilevel_clockness, multilevel_distinguishability, multilevel_ideal_distinguishability,
    HalfSpin, SpinError,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PopulationTransfer,
    Clockness,
    VisibilityVsTg,
    DIVsTg,
    ComplementarityGrid,
    MultilevelClockness,
    ToyPostquantum,
    SingleRun,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::PopulationTransfer,
        Experiment::Clockness,
        Experiment::VisibilityVsTg,
        Experiment::DIVsTg,
        Experiment::ComplementarityGrid,
        Experiment::MultilevelClockness,
        Experiment::ToyPostquantum,
        Experiment::SingleRun,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::PopulationTransfer => "population-transfer",
            Experiment::Clockness => "clockness",
            Experiment::VisibilityVsTg => "visibility-vs-tg",
            Experiment::DIVsTg => "d-i-vs-tg",
            Experiment::ComplementarityGrid => "complementarity-grid",
            Experiment::MultilevelClockness => "multilevel-clockness",
            Experiment::ToyPostquantum => "toy-postquantum",
            Experiment::SingleRun => "single-run",
        }
    }

    fn id(&self) -> u64 {
        Self::ALL.iter().position(|e| e == self).unwrap() as u64 + 1
    }
}

impl FromStr for Experiment {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Experiment::ALL
            .iter()
            .find(|e| e.name() == s)
            .copied()
            .ok_or_else(|| RunError::UnknownExperiment(s.to_string()))
    }
}

/// Per-row measurement context: grid, geometry, noise, and a row-specific
/// seed already salted by (experiment, row).
pub struct MeasureCtx<'a> {
    pub grid: &'a [f64],
    pub packet: &'a WavePacketParams,
    pub v_max: f64,
    pub noise: &'a NoiseParams,
    pub shots: usize,
    pub seed: u64,
    pub noiseless: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct MeasuredV {
    pub v: f64,
    pub sem: f64,
    pub converged: bool,
}

/// The three independent measurement routes.
pub trait Pipelines {
    /// Fringe-pattern route: synthesize the clock pattern and fit it (per
    /// shot under noise).
    fn measure_visibility(
        &self,
        ctx: &MeasureCtx,
        theta: f64,
        delta_phi: f64,
    ) -> Result<MeasuredV, RunError>;

    /// Population route: excited-level fraction, binomially sampled under
    /// noise.
    fn measure_population(&self, ctx: &MeasureCtx, theta: f64) -> Result<f64, RunError>;

    /// Phase route: fit the two single-level patterns and difference their
    /// fringe phases. Returns `(d_i, converged)`.
    fn measure_d_i(&self, ctx: &MeasureCtx, delta_phi: f64) -> Result<(f64, bool), RunError>;
}

fn mix(seed: u64, salt: u64) -> u64 {
    crate::fringe::splitmix64(seed ^ crate::fringe::splitmix64(salt))
}

/// Reference implementation of the three routes.
pub struct StandardPipelines;

impl StandardPipelines {
    fn fit_summed_shots(
        profile: &FringeProfile,
        ctx: &MeasureCtx,
        salt: u64,
    ) -> Result<(f64, bool), RunError> {
        // phase from the ensemble-summed density: jitter averages out
        let set = simulate_shots(profile, ctx.shots, mix(ctx.seed, salt), ctx.noise)?;
        let z = set.shots[0].z().to_vec();
        let mut summed = vec![0.0; z.len()];
        for shot in &set.shots {
            for (acc, d) in summed.iter_mut().zip(shot.density()) {
                *acc += d;
            }
        }
        let fit = fit_fringe(&FringeProfile::new(z, summed)?)?;
        Ok((fit.phase, fit.converged))
    }
}

impl Pipelines for StandardPipelines {
    fn measure_visibility(
        &self,
        ctx: &MeasureCtx,
        theta: f64,
        delta_phi: f64,
    ) -> Result<MeasuredV, RunError> {
        let pattern = pattern_clock_limited(ctx.grid, theta, delta_phi, ctx.v_max, ctx.packet)?;
        if ctx.noiseless {
            let fit = fit_fringe(&pattern)?;
            return Ok(MeasuredV {
                v: fit.visibility,
                sem: 0.0,
                converged: fit.converged,
            });
        }
        let set = simulate_shots(&pattern, ctx.shots, mix(ctx.seed, 0xB1), ctx.noise)?;
        let stats = visibility_stats(&set)?;
        Ok(MeasuredV {
            v: stats.mean_single_shot,
            sem: stats.sem,
            converged: stats.n_failed == 0,
        })
    }

    fn measure_population(&self, ctx: &MeasureCtx, theta: f64) -> Result<f64, RunError> {
        let p = (0.5 * theta).sin().powi(2);
        if ctx.noiseless || ctx.noise.atom_number == 0 {
            return Ok(p);
        }
        // every shot contributes its atoms to the level-population estimate
        let trials = ctx.noise.atom_number * ctx.shots as u64;
        if p <= 0.0 || p >= 1.0 {
            return Ok(p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(ctx.seed, 0xC0));
        let hits = Binomial::new(trials, p).expect("valid binomial").sample(&mut rng);
        Ok(hits as f64 / trials as f64)
    }

    fn measure_d_i(&self, ctx: &MeasureCtx, delta_phi: f64) -> Result<(f64, bool), RunError> {
        let lower =
            pattern_eigenstate_sum_limited(ctx.grid, &[1.0, 0.0], delta_phi, ctx.v_max, ctx.packet)?;
        let upper =
            pattern_eigenstate_sum_limited(ctx.grid, &[0.0, 1.0], delta_phi, ctx.v_max, ctx.packet)?;
        let ((phi1, ok1), (phi2, ok2)) = if ctx.noiseless {
            let f1 = fit_fringe(&lower)?;
            let f2 = fit_fringe(&upper)?;
            ((f1.phase, f1.converged), (f2.phase, f2.converged))
        } else {
            (
                Self::fit_summed_shots(&lower, ctx, 0xD1)?,
                Self::fit_summed_shots(&upper, ctx, 0xD2)?,
            )
        };
        Ok((d_i_from_phases(phi2, phi1), ok1 && ok2))
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub reports: Vec<ComplementarityReport>,
    pub files: Vec<PathBuf>,
    pub any_nonconverged: bool,
}

fn sweep_values(s: &SweepConfig) -> Vec<f64> {
    (0..s.steps)
        .map(|i| s.start + (s.stop - s.start) * i as f64 / (s.steps - 1) as f64)
        .collect()
}

fn default_sweep(exp: Experiment, cfg: &RunConfig) -> SweepConfig {
    use std::f64::consts::PI;
    match exp {
        Experiment::PopulationTransfer | Experiment::Clockness => SweepConfig {
            start: 0.0,
            stop: 110e-6,
            steps: 56,
        },
        Experiment::VisibilityVsTg | Experiment::DIVsTg => SweepConfig {
            start: 0.0,
            stop: 2.0 * PI / cfg.sequence.delta_omega.abs().max(1e-300),
            steps: 15,
        },
        Experiment::ComplementarityGrid => SweepConfig {
            start: 0.0,
            stop: PI,
            steps: 7,
        },
        Experiment::MultilevelClockness => SweepConfig {
            start: 0.0,
            stop: 2.0 * PI,
            steps: 25,
        },
        Experiment::ToyPostquantum => SweepConfig {
            start: 0.0,
            stop: 1.0,
            steps: 11,
        },
        Experiment::SingleRun => SweepConfig {
            start: 0.0,
            stop: 1.0,
            steps: 2,
        },
    }
}

struct Runner<'a, P: Pipelines> {
    cfg: &'a RunConfig,
    pipes: &'a P,
    packet: WavePacketParams,
    grid: Vec<f64>,
    noiseless: bool,
    any_nonconverged: bool,
}

impl<'a, P: Pipelines> Runner<'a, P> {
    fn ctx(&self, exp: Experiment, row: u64, block: u64) -> MeasureCtx<'_> {
        MeasureCtx {
            grid: &self.grid,
            packet: &self.packet,
            v_max: self.cfg.sequence.v_max,
            noise: &self.cfg.noise,
            shots: self.cfg.shots,
            seed: mix(self.cfg.seed, (exp.id() << 32) | (block << 16) | row),
            noiseless: self.noiseless,
        }
    }

    /// Visibility of the single-state reference pattern, used for the
    /// normalized-V column. Measured with extra shots: it is a calibration.
    fn reference_visibility(&mut self, exp: Experiment) -> Result<f64, RunError> {
        let mut ctx = self.ctx(exp, 0xFFFF, 0xFF);
        ctx.shots = (ctx.shots * 4).max(2);
        let m = self.pipes.measure_visibility(&ctx, 0.0, 0.0)?;
        self.any_nonconverged |= !m.converged;
        if m.v <= 0.0 {
            return Err(RunError::Fit(FitError::InvalidReference(m.v)));
        }
        Ok(m.v.min(1.0))
    }

    /// One fully measured row at preparation angle `theta` and clock phase
    /// `delta_phi`.
    fn measured_row(
        &mut self,
        exp: Experiment,
        block: u64,
        row: u64,
        sweep_value: f64,
        theta: f64,
        delta_phi: f64,
        v_ref: f64,
    ) -> Result<ComplementarityRow, RunError> {
        let ctx = self.ctx(exp, row, block);
        let vis = self.pipes.measure_visibility(&ctx, theta, delta_phi)?;
        let population = self.pipes.measure_population(&ctx, theta)?;
        let (d_i, d_ok) = self.pipes.measure_d_i(&ctx, delta_phi)?;
        self.any_nonconverged |= !vis.converged || !d_ok;
        let c = clockness_from_population(population.clamp(0.0, 1.0))?;
        let v_norm = normalize_visibility(vis.v, v_ref)?;
        // sem of the normalized column
        let sem = vis.sem / v_ref;
        Ok(ComplementarityRow::new(
            sweep_value,
            population,
            vis.v,
            v_norm,
            c,
            d_i,
            sem,
        ))
    }
}

/// Run an experiment with the standard pipelines.
pub fn run_sweep(
    cfg: &RunConfig,
    exp: Experiment,
    noiseless: bool,
    out_dir: Option<&Path>,
) -> Result<RunOutput, RunError> {
    run_sweep_with(cfg, exp, noiseless, out_dir, &StandardPipelines)
}

/// Run an experiment with caller-supplied measurement pipelines.
pub fn run_sweep_with<P: Pipelines>(
    cfg: &RunConfig,
    exp: Experiment,
    noiseless: bool,
    out_dir: Option<&Path>,
    pipes: &P,
) -> Result<RunOutput, RunError> {
    let packet = WavePacketParams::new(
        cfg.packet.z0,
        cfg.packet.delta,
        cfg.packet.mass,
        cfg.packet.t,
    )?;
    let grid = default_grid(&packet, cfg.grid.points, cfg.grid.half_widths);
    let mut runner = Runner {
        cfg,
        pipes,
        packet,
        grid,
        noiseless,
        any_nonconverged: false,
    };
    let sweep = cfg.sweep.clone().unwrap_or_else(|| default_sweep(exp, cfg));
    let values = sweep_values(&sweep);
    let delta_phi_default = cfg.sequence.delta_omega * cfg.sequence.t_g;

    let mut reports = Vec::new();
    let mut extra_files: Vec<(PathBuf, String)> = Vec::new();

    match exp {
        Experiment::PopulationTransfer | Experiment::Clockness => {
            let v_ref = runner.reference_visibility(exp)?;
            let mut rows = Vec::with_capacity(values.len());
            for (i, &t_r) in values.iter().enumerate() {
                let theta = rabi_theta(cfg.sequence.omega_r, t_r);
                rows.push(runner.measured_row(
                    exp,
                    0,
                    i as u64,
                    t_r,
                    theta,
                    delta_phi_default,
                    v_ref,
                )?);
            }
            reports.push(ComplementarityReport {
                experiment: exp.name().into(),
                rows,
            });
        }
        Experiment::VisibilityVsTg | Experiment::DIVsTg => {
            let v_ref = runner.reference_visibility(exp)?;
            let mut rows = Vec::with_capacity(values.len());
            for (i, &t_g) in values.iter().enumerate() {
                let delta_phi = cfg.sequence.delta_omega * t_g;
                rows.push(runner.measured_row(
                    exp,
                    0,
                    i as u64,
                    t_g,
                    cfg.theta,
                    delta_phi,
                    v_ref,
                )?);
            }
            reports.push(ComplementarityReport {
                experiment: exp.name().into(),
                rows,
            });
        }
        Experiment::ComplementarityGrid => {
            let v_ref = runner.reference_visibility(exp)?;
            for (bi, &c_target) in cfg.experiment.c_values.iter().enumerate() {
                let theta = c_target.clamp(0.0, 1.0).asin();
                let mut rows = Vec::with_capacity(values.len());
                for (i, &delta_phi) in values.iter().enumerate() {
                    rows.push(runner.measured_row(
                        exp,
                        bi as u64,
                        i as u64,
                        delta_phi,
                        theta,
                        delta_phi,
                        v_ref,
                    )?);
                }
                reports.push(ComplementarityReport {
                    experiment: format!("{}_c{}", exp.name(), bi),
                    rows,
                });
            }
        }
        Experiment::MultilevelClockness => {
            for (bi, &s) in cfg.experiment.s_values.iter().enumerate() {
                let spin = HalfSpin::from_value(s)?;
                let mut rows = Vec::with_capacity(values.len());
                for &delta_phi in &values {
                    let c = multilevel_clockness(spin, cfg.theta, delta_phi);
                    let d_i = multilevel_ideal_distinguishability(spin, delta_phi);
                    let d = multilevel_distinguishability(spin, cfg.theta, delta_phi);
                    let v = (1.0 - d * d).max(0.0).sqrt();
                    let population = (0.5 * cfg.theta).sin().powi(2);
                    rows.push(ComplementarityRow::new(
                        delta_phi, population, v, v, c, d_i, 0.0,
                    ));
                }
                reports.push(ComplementarityReport {
                    experiment: format!("{}_s{}", exp.name(), bi),
                    rows,
                });
            }
        }
        Experiment::ToyPostquantum => {
            for (bi, &c) in cfg.experiment.c_values.iter().enumerate() {
                let population = 0.5 * (1.0 - (1.0 - c * c).max(0.0).sqrt());
                let rows = values
                    .iter()
                    .map(|&d_i| {
                        let rec = crate::sim::toy_postquantum_visibility(c, d_i)
                            .expect("c_values validated");
                        ComplementarityRow {
                            sweep_value: d_i,
                            population,
                            v: rec.visibility,
                            v_normalized: rec.visibility,
                            c: rec.clockness,
                            d_i: rec.ideal_distinguishability,
                            sum: rec.sum,
                            residual: rec.residual,
                            sem: 0.0,
                        }
                    })
                    .collect();
                reports.push(ComplementarityReport {
                    experiment: format!("{}_c{}", exp.name(), bi),
                    rows,
                });
            }
        }
        Experiment::SingleRun => {
            let v_ref = runner.reference_visibility(exp)?;
            let row = runner.measured_row(
                exp,
                0,
                0,
                delta_phi_default,
                cfg.theta,
                delta_phi_default,
                v_ref,
            )?;
            reports.push(ComplementarityReport {
                experiment: exp.name().into(),
                rows: vec![row],
            });
            // also emit the synthesized pattern itself
            let pattern = pattern_clock_limited(
                &runner.grid,
                cfg.theta,
                delta_phi_default,
                cfg.sequence.v_max,
                &runner.packet,
            )?;
            let mut csv = String::from("z_m,density\n");
            for (z, d) in pattern.z().iter().zip(pattern.density()) {
                csv.push_str(&format!("{z:.12e},{d:.12e}\n"));
            }
            extra_files.push((PathBuf::from("single-run_pattern.csv"), csv));
        }
    }

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for report in &reports {
            let path = dir.join(format!("{}.csv", report.experiment));
            report.write_csv(&path)?;
            files.push(path);
        }
        for (name, contents) in &extra_files {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            files.push(path);
        }
        let sidecar_path = dir.join(format!("{}.json", exp.name()));
        crate::report::write_sidecar(
            &sidecar_path,
            &Sidecar {
                experiment: exp.name(),
                seed: cfg.seed,
                shots: cfg.shots,
                noiseless,
                config: cfg,
            },
        )?;
        files.push(sidecar_path);
    }

    Ok(RunOutput {
        reports,
        files,
        any_nonconverged: runner.any_nonconverged,
    })
}
