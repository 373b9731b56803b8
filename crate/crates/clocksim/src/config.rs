//! Run configuration: plain-text `key = value` files with `[section]`
//! headers, strict unknown-key handling, and unit suffixes converted to SI
//! on read.
//!
//! Accepted suffixes: `us`/`ms`/`s` (seconds), `um`/`mm`/`m` (meters),
//! `Hz`/`kHz`/`MHz` (converted to angular rad/s), `rad`, `G/m`. Bare numbers
//! are taken in the key's documented SI unit.

use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

use thiserror::Error;

use crate::fringe::NoiseParams;
use crate::sim::constants;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        key: String,
        section: String,
    },
    #[error("line {line}: unknown section `{0}`", .section)]
    UnknownSection { line: usize, section: String },
    #[error("key `{key}`: {msg}")]
    Range { key: String, msg: String },
}

/// Pulse-sequence timings and frequencies, all SI (seconds, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceConfig {
    /// RF pulse duration
    pub t_r: f64,
    /// Rabi angular frequency
    pub omega_r: f64,
    /// gradient pulse duration
    pub t_g: f64,
    /// differential level-splitting rate between the arms; when absent,
    /// derived from the Zeeman section
    pub delta_omega: f64,
    /// arm separation time used for the gravitational phase
    pub t_sep: f64,
    /// internal clock frequency
    pub omega0: f64,
    /// visibility ceiling of the imaging system
    pub v_max: f64,
}

/// Magnetic-gradient parameters (gauss/meter, meters, rad/(s·m)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeemanConfig {
    pub g_f: f64,
    pub db_dz: f64,
    /// arm separation while the gradient is on
    pub separation: f64,
    /// per-level frequency gradients for the breakup estimate
    pub grad_omega_1: f64,
    pub grad_omega_2: f64,
}

impl ZeemanConfig {
    /// Differential rate between the arms, `g_F (mu_B/hbar) dB/dz * dz`.
    pub fn delta_omega(&self) -> f64 {
        self.g_f * constants::MU_B_OVER_HBAR * self.db_dz * self.separation
    }
}

/// Wave-packet geometry (meters, kilograms, seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketConfig {
    pub z0: f64,
    pub delta: f64,
    pub mass: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    pub points: usize,
    /// grid half-span in units of the expanded envelope width
    pub half_widths: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

/// Per-experiment value lists (used by the grid and multilevel sweeps).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// clockness values for the complementarity grid
    pub c_values: Vec<f64>,
    /// spin quantum numbers for the multilevel sweep
    pub s_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub sequence: SequenceConfig,
    pub zeeman: ZeemanConfig,
    pub packet: PacketConfig,
    pub grid: GridConfig,
    pub noise: NoiseParams,
    /// explicit sweep range; experiments supply their own default when unset
    pub sweep: Option<SweepConfig>,
    pub experiment: ExperimentConfig,
    pub shots: usize,
    pub seed: u64,
    /// preparation polar angle for single-run, radians
    pub theta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let zeeman = ZeemanConfig {
            g_f: 0.5,
            db_dz: 1000.0,
            separation: 40e-6,
            grad_omega_1: 4.397e9,
            grad_omega_2: 8.794e9,
        };
        RunConfig {
            sequence: SequenceConfig {
                t_r: 10e-6,
                omega_r: PI / (2.0 * 10e-6),
                t_g: 17.9e-6,
                delta_omega: zeeman.delta_omega(),
                t_sep: 1e-3,
                omega0: 2.0 * PI * 25e6,
                v_max: 0.9,
            },
            zeeman,
            packet: PacketConfig {
                z0: 2e-6,
                delta: 0.1e-6,
                mass: constants::RB87_MASS,
                t: 16e-3,
            },
            grid: GridConfig {
                points: 512,
                half_widths: 6.0,
            },
            noise: NoiseParams {
                atom_number: 10_000,
                phase_jitter: 0.05,
                readout: 0.0,
            },
            sweep: None,
            experiment: ExperimentConfig {
                c_values: vec![0.0, 0.56, 0.81, 1.0],
                s_values: vec![0.5, 2.0, 8.0],
            },
            shots: 50,
            seed: 20260823,
            theta: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl RunConfig {
    /// Parse a config file on top of the documented defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut delta_omega_explicit = false;
        let mut section = String::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                    line: line_no,
                    msg: "unterminated section header".into(),
                })?;
                match name {
                    "sequence" | "zeeman" | "packet" | "grid" | "noise" | "sweep"
                    | "experiment" | "run" => section = name.to_string(),
                    _ => {
                        return Err(ConfigError::UnknownSection {
                            line: line_no,
                            section: name.to_string(),
                        })
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            apply_key(&mut cfg, &section, key, value, line_no, &mut delta_omega_explicit)?;
        }

        if !delta_omega_explicit {
            cfg.sequence.delta_omega = cfg.zeeman.delta_omega();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |key: &str, v: f64| -> Result<(), ConfigError> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Range {
                    key: key.into(),
                    msg: format!("must be positive, got {v}"),
                })
            }
        };
        let nonneg = |key: &str, v: f64| -> Result<(), ConfigError> {
            if v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Range {
                    key: key.into(),
                    msg: format!("must be non-negative, got {v}"),
                })
            }
        };
        nonneg("sequence.T_R", self.sequence.t_r)?;
        nonneg("sequence.Omega_R", self.sequence.omega_r)?;
        nonneg("sequence.T_G", self.sequence.t_g)?;
        nonneg("sequence.T_sep", self.sequence.t_sep)?;
        pos("sequence.omega0", self.sequence.omega0)?;
        if !(0.0..=1.0).contains(&self.sequence.v_max) {
            return Err(ConfigError::Range {
                key: "sequence.v_max".into(),
                msg: format!("must lie in [0, 1], got {}", self.sequence.v_max),
            });
        }
        pos("packet.delta", self.packet.delta)?;
        pos("packet.mass", self.packet.mass)?;
        nonneg("packet.t", self.packet.t)?;
        nonneg("packet.z0", self.packet.z0)?;
        if self.grid.points < 32 {
            return Err(ConfigError::Range {
                key: "grid.points".into(),
                msg: format!("need at least 32, got {}", self.grid.points),
            });
        }
        pos("grid.half_widths", self.grid.half_widths)?;
        nonneg("noise.phase_jitter", self.noise.phase_jitter)?;
        nonneg("noise.readout", self.noise.readout)?;
        if let Some(s) = &self.sweep {
            if s.steps < 2 {
                return Err(ConfigError::Range {
                    key: "sweep.steps".into(),
                    msg: format!("need at least 2, got {}", s.steps),
                });
            }
        }
        if self.shots < 2 {
            return Err(ConfigError::Range {
                key: "run.shots".into(),
                msg: format!("need at least 2, got {}", self.shots),
            });
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(ConfigError::Range {
                key: "run.theta".into(),
                msg: format!("must lie in [0, pi], got {}", self.theta),
            });
        }
        for (i, c) in self.experiment.c_values.iter().enumerate() {
            if !(0.0..=1.0).contains(c) {
                return Err(ConfigError::Range {
                    key: format!("experiment.c_values[{i}]"),
                    msg: format!("must lie in [0, 1], got {c}"),
                });
            }
        }
        for (i, s) in self.experiment.s_values.iter().enumerate() {
            if (2.0 * s - (2.0 * s).round()).abs() > 1e-9 || *s <= 0.0 {
                return Err(ConfigError::Range {
                    key: format!("experiment.s_values[{i}]"),
                    msg: format!("must be a positive half-integer, got {s}"),
                });
            }
        }
        Ok(())
    }
}

/// Parse a scalar with an optional unit suffix. Frequencies are converted to
/// angular rad/s.
fn parse_quantity(value: &str, line: usize) -> Result<f64, ConfigError> {
    const SUFFIXES: &[(&str, f64)] = &[
        ("MHz", 2.0 * PI * 1e6),
        ("kHz", 2.0 * PI * 1e3),
        ("Hz", 2.0 * PI),
        ("G/m", 1.0),
        ("rad", 1.0),
        ("us", 1e-6),
        ("ms", 1e-3),
        ("um", 1e-6),
        ("mm", 1e-3),
        ("s", 1.0),
        ("m", 1.0),
        ("kg", 1.0),
        ("G", 1.0),
    ];
    let value = value.trim();
    for (suffix, scale) in SUFFIXES {
        if let Some(num) = value.strip_suffix(suffix) {
            let num = num.trim();
            if let Ok(x) = num.parse::<f64>() {
                return Ok(x * scale);
            }
        }
    }
    value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("cannot parse `{value}` as a number (with optional unit suffix)"),
    })
}

fn parse_list(value: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|item| parse_quantity(item, line))
        .collect()
}

fn parse_int(value: &str, line: usize) -> Result<u64, ConfigError> {
    value.trim().parse::<u64>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("cannot parse `{value}` as an unsigned integer"),
    })
}

fn apply_key(
    cfg: &mut RunConfig,
    section: &str,
    key: &str,
    value: &str,
    line: usize,
    delta_omega_explicit: &mut bool,
) -> Result<(), ConfigError> {
    let unknown = || ConfigError::UnknownKey {
        line,
        key: key.to_string(),
        section: section.to_string(),
    };
    match section {
        "sequence" => match key {
            "T_R" => cfg.sequence.t_r = parse_quantity(value, line)?,
            "Omega_R" => cfg.sequence.omega_r = parse_quantity(value, line)?,
            "T_G" => cfg.sequence.t_g = parse_quantity(value, line)?,
            "delta_omega" => {
                cfg.sequence.delta_omega = parse_quantity(value, line)?;
                *delta_omega_explicit = true;
            }
            "T_sep" => cfg.sequence.t_sep = parse_quantity(value, line)?,
            "omega0" => cfg.sequence.omega0 = parse_quantity(value, line)?,
            "v_max" => cfg.sequence.v_max = parse_quantity(value, line)?,
            _ => return Err(unknown()),
        },
        "zeeman" => match key {
            "g_F" => cfg.zeeman.g_f = parse_quantity(value, line)?,
            "dB_dz" => cfg.zeeman.db_dz = parse_quantity(value, line)?,
            "separation" => cfg.zeeman.separation = parse_quantity(value, line)?,
            "grad_omega_1" => cfg.zeeman.grad_omega_1 = parse_quantity(value, line)?,
            "grad_omega_2" => cfg.zeeman.grad_omega_2 = parse_quantity(value, line)?,
            _ => return Err(unknown()),
        },
        "packet" => match key {
            "z0" => cfg.packet.z0 = parse_quantity(value, line)?,
            "delta" => cfg.packet.delta = parse_quantity(value, line)?,
            "mass" => cfg.packet.mass = parse_quantity(value, line)?,
            "t" => cfg.packet.t = parse_quantity(value, line)?,
            _ => return Err(unknown()),
        },
        "grid" => match key {
            "points" => cfg.grid.points = parse_int(value, line)? as usize,
            "half_widths" => cfg.grid.half_widths = parse_quantity(value, line)?,
            _ => return Err(unknown()),
        },
        "noise" => match key {
            "atoms" => cfg.noise.atom_number = parse_int(value, line)?,
            "phase_jitter" => cfg.noise.phase_jitter = parse_quantity(value, line)?,
            "readout" => cfg.noise.readout = parse_quantity(value, line)?,
            _ => return Err(unknown()),
        },
        "sweep" => {
            let sweep = cfg.sweep.get_or_insert(SweepConfig {
                start: 0.0,
                stop: PI,
                steps: 9,
            });
            match key {
                "start" => sweep.start = parse_quantity(value, line)?,
                "stop" => sweep.stop = parse_quantity(value, line)?,
                "steps" => sweep.steps = parse_int(value, line)? as usize,
                _ => return Err(unknown()),
            }
        }
        "experiment" => match key {
            "c_values" => cfg.experiment.c_values = parse_list(value, line)?,
            "s_values" => cfg.experiment.s_values = parse_list(value, line)?,
            _ => return Err(unknown()),
        },
        "run" => match key {
            "shots" => cfg.shots = parse_int(value, line)? as usize,
            "seed" => cfg.seed = parse_int(value, line)?,
            "theta" => cfg.theta = parse_quantity(value, line)?,
            _ => return Err(unknown()),
        },
        "" => {
            return Err(ConfigError::Parse {
                line,
                msg: format!("key `{key}` appears before any [section] header"),
            })
        }
        _ => unreachable!("sections validated on entry"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_str_contents("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_abs_diff_eq!(cfg.sequence.t_r, 1e-5, epsilon = 1e-20);
        assert_abs_diff_eq!(cfg.sequence.omega0, 2.0 * PI * 25e6, epsilon = 1.0);
    }

    #[test]
    fn unit_suffixes_convert_to_si() {
        let cfg = RunConfig::from_str_contents(
            "[sequence]\nT_R = 10us\nomega0 = 25MHz\n[packet]\nz0 = 2um\n[zeeman]\ndB_dz = 1000G/m\n",
        )
        .unwrap();
        assert_abs_diff_eq!(cfg.sequence.t_r, 1.0e-5, epsilon = 1e-20);
        assert_abs_diff_eq!(cfg.sequence.omega0, 2.0 * PI * 25e6, epsilon = 1e-3);
        assert_abs_diff_eq!(cfg.packet.z0, 2e-6, epsilon = 1e-20);
        assert_abs_diff_eq!(cfg.zeeman.db_dz, 1000.0, epsilon = 1e-12);
    }

    #[test]
    fn theta_out_of_range_names_the_key() {
        let err = RunConfig::from_str_contents("[run]\ntheta = 4.0\n").unwrap_err();
        match err {
            ConfigError::Range { key, .. } => assert_eq!(key, "run.theta"),
            other => panic!("expected range error, got {other}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::from_str_contents("[sequence]\n\nbogus = 1\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key, section } => {
                assert_eq!(line, 3);
                assert_eq!(key, "bogus");
                assert_eq!(section, "sequence");
            }
            other => panic!("expected unknown-key error, got {other}"),
        }
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(matches!(
            RunConfig::from_str_contents("[magic]\nx = 1\n"),
            Err(ConfigError::UnknownSection { line: 1, .. })
        ));
    }

    #[test]
    fn key_without_section_rejected() {
        assert!(matches!(
            RunConfig::from_str_contents("shots = 5\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn delta_omega_follows_zeeman_unless_overridden() {
        let derived = RunConfig::from_str_contents("[zeeman]\nseparation = 80um\n").unwrap();
        assert_abs_diff_eq!(
            derived.sequence.delta_omega,
            0.5 * crate::sim::constants::MU_B_OVER_HBAR * 1000.0 * 80e-6,
            epsilon = 1e-6
        );
        let explicit =
            RunConfig::from_str_contents("[sequence]\ndelta_omega = 2.0e5\n[zeeman]\nseparation = 80um\n")
                .unwrap();
        assert_abs_diff_eq!(explicit.sequence.delta_omega, 2.0e5, epsilon = 1e-9);
    }

    #[test]
    fn comments_and_lists_parse() {
        let cfg = RunConfig::from_str_contents(
            "# header comment\n[experiment]\nc_values = 0, 0.5, 1 # inline\ns_values = 0.5, 2, 8\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment.c_values, vec![0.0, 0.5, 1.0]);
        assert_eq!(cfg.experiment.s_values, vec![0.5, 2.0, 8.0]);
    }

    #[test]
    fn default_zeeman_phase_is_near_pi() {
        let cfg = RunConfig::default();
        let phase = cfg.sequence.delta_omega * cfg.sequence.t_g;
        assert!((phase - PI).abs() < 0.01 * PI, "{phase}");
    }
}
