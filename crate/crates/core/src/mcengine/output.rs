//! Result files. Everything is rendered in memory first and only written
//! once the whole run has succeeded.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{Check, ExperimentResult, RunResults};
use crate::error::Result;
use crate::stats::Histogram;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies a run. Wall-clock data lives in `timing.json` so that this file
/// stays byte-deterministic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<CriterionStatus>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionStatus {
    pub id: u32,
    pub pass: bool,
}

impl RunManifest {
    pub fn new(config_bytes: &[u8], seed: u64, pass: bool) -> Self {
        Self {
            tool: "rmt-lab",
            version: TOOL_VERSION,
            config_sha256: hex::encode(Sha256::digest(config_bytes)),
            seed,
            pass,
            criteria: Vec::new(),
        }
    }
}

/// Named files awaiting a write.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputBundle {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputBundle {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        let name = name.into();
        self.files.retain(|(n, _)| *n != name);
        self.files.push((name, bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file under `dir` via temporary names, renaming only after
    /// all writes succeeded.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, bytes) {
                for t in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(e.into());
            }
            staged.push(tmp);
        }
        for ((name, _), tmp) in self.files.iter().zip(&staged) {
            fs::rename(tmp, dir.join(name))?;
        }
        Ok(())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

const RESULT_HEADER: &[&str] = &[
    "name",
    "kind",
    "n",
    "N",
    "p",
    "law",
    "replicates",
    "stream",
    "i",
    "j",
    "scale",
    "count",
    "mean",
    "se_mean",
    "variance",
    "se_variance",
    "skewness",
    "se_skewness",
    "excess_kurtosis",
    "se_kurtosis",
    "ks",
    "target_mean",
    "mean_ratio",
    "target_variance",
    "variance_ratio",
    "exact_mean",
    "exact_variance",
    "leading_variance",
    "criterion",
    "exploratory",
    "pass",
];

fn result_row(e: &ExperimentResult) -> Vec<String> {
    let mut row = vec![
        e.name.clone(),
        e.kind.as_str().to_string(),
        e.n.to_string(),
        opt(e.big_n),
        e.p.to_string(),
        e.law.clone(),
        e.replicates.to_string(),
        e.stream.to_string(),
        e.i.to_string(),
        e.j.to_string(),
        e.scale.to_string(),
    ];
    match &e.summary {
        Some(s) => {
            let m = &s.moments;
            row.extend([
                m.count.to_string(),
                m.mean.to_string(),
                m.se_mean.to_string(),
                m.variance.to_string(),
                m.se_variance.to_string(),
                m.skewness.to_string(),
                m.se_skewness.to_string(),
                m.excess_kurtosis.to_string(),
                m.se_kurtosis.to_string(),
                opt(s.ks),
                opt(s.target_mean),
                opt(s.mean_ratio),
                opt(s.target_variance),
                opt(s.variance_ratio),
                opt(s.exact_mean.clone()),
                opt(s.exact_variance.clone()),
                opt(s.leading_variance.clone()),
            ]);
        }
        None => row.extend(std::iter::repeat_n(String::new(), 17)),
    }
    row.extend([
        opt(e.criterion),
        e.exploratory.to_string(),
        e.pass.to_string(),
    ]);
    row
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn check_row(experiment: &str, c: &Check) -> Vec<String> {
    vec![
        experiment.to_string(),
        c.name.clone(),
        c.value.to_string(),
        opt(c.lo),
        opt(c.hi),
        c.gating.to_string(),
        c.pass.to_string(),
    ]
}

fn histogram_bytes(h: &Histogram) -> Result<Vec<u8>> {
    let mut rows = Vec::with_capacity(h.counts.len() + 2);
    rows.push(vec![
        "underflow".to_string(),
        String::new(),
        h.edges[0].to_string(),
        h.underflow.to_string(),
    ]);
    for (k, c) in h.counts.iter().enumerate() {
        rows.push(vec![
            k.to_string(),
            h.edges[k].to_string(),
            h.edges[k + 1].to_string(),
            c.to_string(),
        ]);
    }
    rows.push(vec![
        "overflow".to_string(),
        h.edges[h.counts.len()].to_string(),
        String::new(),
        h.overflow.to_string(),
    ]);
    csv_bytes(&["bin", "lo", "hi", "count"], rows)
}

/// Renders `results.csv`, `checks.csv`, `results.json`, per-experiment
/// histogram and characteristic-function tables, and `manifest.json`.
pub fn render_run(
    results: &RunResults,
    config_bytes: &[u8],
) -> Result<(OutputBundle, RunManifest)> {
    let mut b = OutputBundle::default();
    b.add(
        "results.csv",
        csv_bytes(RESULT_HEADER, results.experiments.iter().map(result_row))?,
    );
    let checks = results
        .experiments
        .iter()
        .flat_map(|e| e.checks.iter().map(move |c| check_row(&e.name, c)));
    b.add(
        "checks.csv",
        csv_bytes(
            &["experiment", "check", "value", "lo", "hi", "gating", "pass"],
            checks,
        )?,
    );
    b.add_json("results.json", results)?;
    for e in &results.experiments {
        if let Some(h) = &e.histogram {
            b.add(format!("hist_{}.csv", e.name), histogram_bytes(h)?);
        }
        if let Some(cf) = &e.charfn {
            let rows = cf.rows.iter().map(|r| {
                vec![
                    r.index.to_string(),
                    r.theta_norm.to_string(),
                    r.phi_re.to_string(),
                    r.phi_im.to_string(),
                    r.phi_nu.to_string(),
                    r.phi_nu_alt.to_string(),
                    r.gap.to_string(),
                    r.gap_alt.to_string(),
                    r.mc_se.to_string(),
                    r.threshold.to_string(),
                    r.pass.to_string(),
                ]
            });
            let header = [
                "theta",
                "theta_norm",
                "phi_re",
                "phi_im",
                "phi_nu",
                "phi_nu_alt",
                "gap",
                "gap_alt",
                "mc_se",
                "threshold",
                "pass",
            ];
            b.add(format!("charfn_{}.csv", e.name), csv_bytes(&header, rows)?);
        }
    }
    let manifest = RunManifest::new(config_bytes, results.master_seed, results.pass);
    b.add_json("manifest.json", &manifest)?;
    Ok((b, manifest))
}

/// Wall-clock record kept apart from the deterministic outputs.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub started_unix: f64,
    pub finished_unix: f64,
    pub seconds: f64,
    pub workers: usize,
}

impl Timing {
    pub fn now_unix() -> f64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64())
    }
}
