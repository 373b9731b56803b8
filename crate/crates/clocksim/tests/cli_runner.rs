//! Integration tests for the CLI binary and the sweep runner: exit codes,
//! determinism of the emitted files, pipeline independence, and row
//! invariants.

use std::path::Path;
use std::process::Command;

use clocksim::config::RunConfig;
use clocksim::run::{
    run_sweep, run_sweep_with, Experiment, MeasureCtx, MeasuredV, Pipelines, RunError,
    StandardPipelines,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clocksim"))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn cli_reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let status = bin()
            .args(["single-run", "--shots", "8", "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success(), "exit {status}");
    }
    let a = read_dir_sorted(dir_a.path());
    let b = read_dir_sorted(dir_b.path());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn cli_seed_changes_noisy_output() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&dir_a, "1"), (&dir_b, "2")] {
        let status = bin()
            .args(["single-run", "--shots", "8", "--seed", seed, "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let csv_a = std::fs::read(dir_a.path().join("single-run.csv")).unwrap();
    let csv_b = std::fs::read(dir_b.path().join("single-run.csv")).unwrap();
    assert_ne!(csv_a, csv_b);
}

#[test]
fn cli_unknown_experiment_exits_2() {
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("frobnicate"), "{stderr}");
}

#[test]
fn cli_bad_config_exits_2_with_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    std::fs::write(&cfg_path, "[run]\ntheta = 4.0\n").unwrap();
    let out = bin()
        .args(["single-run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("run.theta"), "{stderr}");
}

#[test]
fn cli_config_units_flow_into_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "[sequence]\nT_R = 10us\n[run]\nseed = 777\nshots = 8\n",
    )
    .unwrap();
    let status = bin()
        .args(["single-run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("single-run.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["seed"], 777);
    let t_r = sidecar["config"]["sequence"]["t_r"].as_f64().unwrap();
    assert!((t_r - 1e-5).abs() < 1e-18);
}

#[test]
fn noiseless_flag_zeroes_sem() {
    let cfg = RunConfig::default();
    let out = run_sweep(&cfg, Experiment::SingleRun, true, None).unwrap();
    assert_eq!(out.reports[0].rows[0].sem, 0.0);
}

#[test]
fn population_and_clockness_periods() {
    // analytic rows: P has period 2 pi / Omega_R in T_R, C^2 half of that
    let cfg = RunConfig::default();
    let out = run_sweep(&cfg, Experiment::PopulationTransfer, true, None).unwrap();
    let rows = &out.reports[0].rows;
    assert_eq!(rows.len(), 56);
    let step = rows[1].sweep_value - rows[0].sweep_value;
    assert!((step - 2e-6).abs() < 1e-12);
    let p_period = 20; // 40 us / 2 us
    let c2_period = 10;
    for i in 0..rows.len() {
        if i + p_period < rows.len() {
            assert!(
                (rows[i].population - rows[i + p_period].population).abs() < 1e-9,
                "row {i}"
            );
        }
        if i + c2_period < rows.len() {
            let a = rows[i].c * rows[i].c;
            let b = rows[i + c2_period].c * rows[i + c2_period].c;
            assert!((a - b).abs() < 1e-9, "row {i}: {a} vs {b}");
        }
    }
    // and the population does oscillate through full transfer
    assert!(rows.iter().any(|r| r.population > 0.99));
    assert!(rows.iter().any(|r| r.population < 0.01));
}

#[test]
fn all_rows_within_unit_bounds() {
    let cfg = RunConfig::default();
    for exp in [
        Experiment::VisibilityVsTg,
        Experiment::DIVsTg,
        Experiment::MultilevelClockness,
        Experiment::SingleRun,
    ] {
        let out = run_sweep(&cfg, exp, true, None).unwrap();
        for report in &out.reports {
            for row in &report.rows {
                for (name, x) in [
                    ("v", row.v),
                    ("v_normalized", row.v_normalized),
                    ("c", row.c),
                    ("d_i", row.d_i),
                ] {
                    assert!(
                        (0.0..=1.0).contains(&x),
                        "{}: {name} = {x}",
                        report.experiment
                    );
                }
            }
        }
    }
}

#[test]
fn d_i_column_tracks_dephasing() {
    let cfg = RunConfig::default();
    let out = run_sweep(&cfg, Experiment::DIVsTg, true, None).unwrap();
    for row in &out.reports[0].rows {
        let dphi = cfg.sequence.delta_omega * row.sweep_value;
        let expected = (0.5 * dphi).sin().abs();
        assert!(
            (row.d_i - expected).abs() < 5e-3,
            "T_G={}: {} vs {expected}",
            row.sweep_value,
            row.d_i
        );
    }
}

/// Sentinel pipelines: each one can be frozen to a constant to show that no
/// other column depends on it.
struct SentinelPipelines {
    freeze_v: Option<f64>,
    freeze_p: Option<f64>,
    freeze_d: Option<f64>,
}

impl Pipelines for SentinelPipelines {
    fn measure_visibility(
        &self,
        ctx: &MeasureCtx,
        theta: f64,
        delta_phi: f64,
    ) -> Result<MeasuredV, RunError> {
        match self.freeze_v {
            Some(v) => Ok(MeasuredV {
                v,
                sem: 0.0,
                converged: true,
            }),
            None => StandardPipelines.measure_visibility(ctx, theta, delta_phi),
        }
    }

    fn measure_population(&self, ctx: &MeasureCtx, theta: f64) -> Result<f64, RunError> {
        match self.freeze_p {
            Some(p) => Ok(p),
            None => StandardPipelines.measure_population(ctx, theta),
        }
    }

    fn measure_d_i(&self, ctx: &MeasureCtx, delta_phi: f64) -> Result<(f64, bool), RunError> {
        match self.freeze_d {
            Some(d) => Ok((d, true)),
            None => StandardPipelines.measure_d_i(ctx, delta_phi),
        }
    }
}

#[test]
fn pipelines_are_independent() {
    let mut cfg = RunConfig::default();
    cfg.experiment.c_values = vec![0.81];
    cfg.sweep = Some(clocksim::config::SweepConfig {
        start: 0.3,
        stop: 2.8,
        steps: 4,
    });
    let exp = Experiment::ComplementarityGrid;

    let baseline = run_sweep_with(&cfg, exp, true, None, &StandardPipelines).unwrap();
    let frozen_v = run_sweep_with(
        &cfg,
        exp,
        true,
        None,
        &SentinelPipelines {
            freeze_v: Some(0.123),
            freeze_p: None,
            freeze_d: None,
        },
    )
    .unwrap();
    let frozen_p = run_sweep_with(
        &cfg,
        exp,
        true,
        None,
        &SentinelPipelines {
            freeze_v: None,
            freeze_p: Some(0.07),
            freeze_d: None,
        },
    )
    .unwrap();
    let frozen_d = run_sweep_with(
        &cfg,
        exp,
        true,
        None,
        &SentinelPipelines {
            freeze_v: None,
            freeze_p: None,
            freeze_d: Some(0.42),
        },
    )
    .unwrap();

    let base = &baseline.reports[0].rows;
    for (i, row) in frozen_v.reports[0].rows.iter().enumerate() {
        // visibility sentinel moves only the V-derived columns
        assert_ne!(row.v, base[i].v);
        assert_eq!(row.c, base[i].c);
        assert_eq!(row.d_i, base[i].d_i);
    }
    for (i, row) in frozen_p.reports[0].rows.iter().enumerate() {
        assert_ne!(row.c, base[i].c);
        assert_eq!(row.v, base[i].v);
        assert_eq!(row.d_i, base[i].d_i);
    }
    for (i, row) in frozen_d.reports[0].rows.iter().enumerate() {
        assert_ne!(row.d_i, base[i].d_i);
        assert_eq!(row.v, base[i].v);
        assert_eq!(row.c, base[i].c);
    }
}
