//! Report tables and their on-disk formats: a CSV with a fixed column order
//! and a JSON sidecar carrying the fully resolved configuration, so a result
//! file is reproducible from its sidecar alone.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;

/// One sweep point with the three independently measured quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementarityRow {
    pub sweep_value: f64,
    /// excited-level population from the preparation pipeline
    pub population: f64,
    /// raw fitted visibility
    pub v: f64,
    /// visibility normalized to the single-state reference
    pub v_normalized: f64,
    pub c: f64,
    pub d_i: f64,
    /// V_n^2 + (C D_I)^2
    pub sum: f64,
    pub residual: f64,
    /// standard error of the single-shot visibility mean (0 when noiseless)
    pub sem: f64,
}

impl ComplementarityRow {
    pub fn new(sweep_value: f64, population: f64, v: f64, v_normalized: f64, c: f64, d_i: f64, sem: f64) -> Self {
        let sum = v_normalized * v_normalized + (c * d_i) * (c * d_i);
        ComplementarityRow {
            sweep_value,
            population,
            v,
            v_normalized,
            c,
            d_i,
            sum,
            residual: sum - 1.0,
            sem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplementarityReport {
    pub experiment: String,
    pub rows: Vec<ComplementarityRow>,
}

pub const CSV_HEADER: &str = "sweep_value,population,v,v_normalized,c,d_i,sum,residual,sem";

impl ComplementarityReport {
    /// Fixed-format CSV; `{:.12e}` keeps reruns byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(128 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.sweep_value, r.population, r.v, r.v_normalized, r.c, r.d_i, r.sum, r.residual, r.sem
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }
}

/// Provenance sidecar: resolved config plus run identity.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub experiment: &'a str,
    pub seed: u64,
    pub shots: usize,
    pub noiseless: bool,
    pub config: &'a RunConfig,
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(sidecar).expect("config serializes");
    let mut f = std::fs::File::create(path)?;
    f.write_all(json.as_bytes())?;
    f.write_all(b"\n")
}
