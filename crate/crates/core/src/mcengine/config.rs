//! Experiment configuration: parsing, validation and the tolerance table.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::matgen::{EntryLaw, RandomSeed};

pub const MIN_REPLICATES: u64 = 100;
/// Eigenvector replicates each pool many entries, so fewer are allowed.
pub const MIN_EIGEN_REPLICATES: u64 = 20;
pub const MAX_N: usize = 4096;
pub const MAX_P: u32 = 64;
pub const MAX_CHARFN_N: usize = 60;
pub const MAX_EIGEN_N: usize = 256;
pub const DEFAULT_POOL: usize = 4000;
/// Rough floating-point operation budget for one experiment.
pub const WORK_BUDGET: f64 = 1e13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Trace,
    EntryDiag,
    EntryOffdiag,
    WishartTrace,
    CharfnProbe,
    Eigenvector,
}

impl ExperimentKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "trace" => Self::Trace,
            "entry_diag" => Self::EntryDiag,
            "entry_offdiag" => Self::EntryOffdiag,
            "wishart_trace" => Self::WishartTrace,
            "charfn_probe" => Self::CharfnProbe,
            "eigenvector" => Self::Eigenvector,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Trace => "trace",
            Self::EntryDiag => "entry_diag",
            Self::EntryOffdiag => "entry_offdiag",
            Self::WishartTrace => "wishart_trace",
            Self::CharfnProbe => "charfn_probe",
            Self::Eigenvector => "eigenvector",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaSettings {
    pub count: usize,
    pub norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramSpec {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Pass/fail thresholds shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Half-width of the band for mean ratios against leading-order targets.
    pub mean_ratio: f64,
    /// Half-width for variance ratios.
    pub variance_ratio: f64,
    /// Half-width for variance ratios when the centring is the leading mean.
    pub variance_ratio_centered: f64,
    /// Standard errors allowed between a MC mean and an exact value.
    pub se_multiple: f64,
    pub ks_max: f64,
    pub kurtosis_abs: f64,
    pub charfn_gap: f64,
    pub charfn_se_multiple: f64,
    pub eigen_ks: f64,
    pub eigen_ks_diff: f64,
    pub max_entry_bound: f64,
    pub max_entry_fraction: f64,
    /// KS of trace samples is computed only from this many replicates on.
    pub trace_ks_min_replicates: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mean_ratio: 0.05,
            variance_ratio: 0.10,
            variance_ratio_centered: 0.15,
            se_multiple: 4.0,
            ks_max: 0.05,
            kurtosis_abs: 0.3,
            charfn_gap: 0.05,
            charfn_se_multiple: 3.0,
            eigen_ks: 0.02,
            eigen_ks_diff: 0.01,
            max_entry_bound: 4.5,
            max_entry_fraction: 0.95,
            trace_ks_min_replicates: 10_000,
        }
    }
}

impl Tolerances {
    fn apply(&mut self, obj: &Map<String, Value>, errs: &mut Vec<String>) {
        for (k, v) in obj {
            let path = format!("tolerances.{k}");
            if k == "trace_ks_min_replicates" {
                match v.as_u64() {
                    Some(x) => self.trace_ks_min_replicates = x,
                    None => errs.push(format!("{path}: expected a nonnegative integer")),
                }
                continue;
            }
            let Some(x) = v.as_f64().filter(|x| x.is_finite() && *x >= 0.0) else {
                errs.push(format!("{path}: expected a nonnegative number"));
                continue;
            };
            let slot = match k.as_str() {
                "mean_ratio" => &mut self.mean_ratio,
                "variance_ratio" => &mut self.variance_ratio,
                "variance_ratio_centered" => &mut self.variance_ratio_centered,
                "se_multiple" => &mut self.se_multiple,
                "ks_max" => &mut self.ks_max,
                "kurtosis_abs" => &mut self.kurtosis_abs,
                "charfn_gap" => &mut self.charfn_gap,
                "charfn_se_multiple" => &mut self.charfn_se_multiple,
                "eigen_ks" => &mut self.eigen_ks,
                "eigen_ks_diff" => &mut self.eigen_ks_diff,
                "max_entry_bound" => &mut self.max_entry_bound,
                "max_entry_fraction" => &mut self.max_entry_fraction,
                _ => {
                    errs.push(format!("{path}: unknown tolerance"));
                    continue;
                }
            };
            *slot = x;
        }
    }
}

/// One Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub n: usize,
    pub big_n: Option<usize>,
    pub p: u32,
    pub law: EntryLaw,
    pub replicates: u64,
    pub seed: RandomSeed,
    pub i: usize,
    pub j: usize,
    pub theta: ThetaSettings,
    /// Compare against the exact enumeration oracle instead of the
    /// leading-order target.
    pub oracle: bool,
    /// Report only; no gating checks.
    pub exploratory: bool,
    /// Eigenvector entries pooled per replicate.
    pub pool: usize,
    /// Second law run alongside an eigenvector experiment.
    pub reference_law: Option<EntryLaw>,
    pub histogram: Option<HistogramSpec>,
    /// Acceptance criterion this experiment feeds, if any.
    pub criterion: Option<u32>,
}

impl ExperimentConfig {
    /// Estimated floating-point work, used by the resource guard.
    pub fn work(&self) -> f64 {
        let n = self.n as f64;
        let reps = self.replicates as f64;
        let products = 2.0 * (32 - self.p.leading_zeros()) as f64;
        let per_rep = match self.kind {
            ExperimentKind::Trace => n * n * n * products,
            ExperimentKind::WishartTrace => {
                let big_n = self.big_n.unwrap_or(0) as f64;
                n * n * big_n + n * n * n * products
            }
            ExperimentKind::EntryDiag | ExperimentKind::EntryOffdiag => {
                n * n * (self.p as f64 + 1.0)
            }
            ExperimentKind::CharfnProbe => {
                n * n * n * products + n * n * (self.theta.count as f64 + 1.0)
            }
            ExperimentKind::Eigenvector => {
                let runs = if self.reference_run().is_some() {
                    2.0
                } else {
                    1.0
                };
                runs * 8.0 * n * n * n * crate::spectral::MAX_SWEEPS as f64 / 3.0
            }
        };
        reps * per_rep
    }

    pub fn check_budget(&self) -> Result<()> {
        let w = self.work();
        if w > WORK_BUDGET {
            return Err(Error::ResourceGuard {
                what: "monte carlo work",
                required: w,
                cap: WORK_BUDGET,
            });
        }
        Ok(())
    }

    /// Law of the side-by-side reference run of an eigenvector experiment.
    pub fn reference_run(&self) -> Option<EntryLaw> {
        if self.kind != ExperimentKind::Eigenvector {
            return None;
        }
        let r = self.reference_law.clone().unwrap_or(EntryLaw::Gaussian);
        (r != self.law).then_some(r)
    }
}

/// A whole config document.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub tolerances: Tolerances,
    pub experiments: Vec<ExperimentConfig>,
}

impl RunConfig {
    /// Parses and validates; every problem found is reported at once.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(vec![format!("config is not valid JSON: {e}")]))?;
        let mut errs = Vec::new();
        let Some(obj) = root.as_object() else {
            return Err(Error::Config(vec!["config: expected a JSON object".into()]));
        };
        for k in obj.keys() {
            if !matches!(
                k.as_str(),
                "seed" | "tolerances" | "experiments" | "description"
            ) {
                errs.push(format!("{k}: unknown field"));
            }
        }
        let master_seed = match obj.get("seed") {
            Some(v) => match v.as_u64() {
                Some(s) => s,
                None => {
                    errs.push("seed: expected a nonnegative integer".into());
                    0
                }
            },
            None => {
                errs.push("seed: required".into());
                0
            }
        };
        let mut tolerances = Tolerances::default();
        match obj.get("tolerances") {
            None => {}
            Some(Value::Object(t)) => tolerances.apply(t, &mut errs),
            Some(_) => errs.push("tolerances: expected an object".into()),
        }
        let mut experiments = Vec::new();
        match obj.get("experiments") {
            Some(Value::Array(list)) if !list.is_empty() => {
                let mut names = BTreeSet::new();
                for (idx, e) in list.iter().enumerate() {
                    if let Some(cfg) = parse_experiment(e, idx, master_seed, &mut errs) {
                        if !names.insert(cfg.name.clone()) {
                            errs.push(format!(
                                "experiments[{idx}].name: duplicate name {:?}",
                                cfg.name
                            ));
                        }
                        experiments.push(cfg);
                    }
                }
            }
            Some(Value::Array(_)) => errs.push("experiments: must not be empty".into()),
            Some(_) => errs.push("experiments: expected an array".into()),
            None => errs.push("experiments: required".into()),
        }
        if errs.is_empty() {
            Ok(Self {
                master_seed,
                tolerances,
                experiments,
            })
        } else {
            Err(Error::Config(errs))
        }
    }
}

const EXPERIMENT_FIELDS: &[&str] = &[
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
    "theta",
    "oracle",
    "exploratory",
    "pool",
    "reference_law",
    "histogram",
    "criterion",
];

fn parse_experiment(
    v: &Value,
    idx: usize,
    master: u64,
    errs: &mut Vec<String>,
) -> Option<ExperimentConfig> {
    let at = |f: &str| format!("experiments[{idx}].{f}");
    let Some(obj) = v.as_object() else {
        errs.push(format!("experiments[{idx}]: expected an object"));
        return None;
    };
    let before = errs.len();
    for k in obj.keys() {
        if !EXPERIMENT_FIELDS.contains(&k.as_str()) {
            errs.push(format!("{}: unknown field", at(k)));
        }
    }
    let uint = |f: &str, errs: &mut Vec<String>| -> Option<u64> {
        match obj.get(f) {
            None => None,
            Some(v) => match v.as_u64() {
                Some(x) => Some(x),
                None => {
                    errs.push(format!("{}: expected a nonnegative integer", at(f)));
                    None
                }
            },
        }
    };
    let flag = |f: &str, errs: &mut Vec<String>| -> bool {
        match obj.get(f) {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                errs.push(format!("{}: expected true or false", at(f)));
                false
            }
        }
    };
    let name = match obj.get("name").and_then(Value::as_str) {
        Some(s)
            if !s.is_empty()
                && s.chars()
                    .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) =>
        {
            s.to_string()
        }
        Some(_) => {
            errs.push(format!(
                "{}: use letters, digits, '_', '-' or '.'",
                at("name")
            ));
            String::new()
        }
        None => {
            errs.push(format!("{}: required", at("name")));
            String::new()
        }
    };
    let kind = match obj.get("kind").and_then(Value::as_str) {
        Some(s) => match ExperimentKind::parse(s) {
            Some(k) => Some(k),
            None => {
                errs.push(format!(
                    "{}: unknown kind {s:?}; expected trace, entry_diag, entry_offdiag, wishart_trace, charfn_probe or eigenvector",
                    at("kind")
                ));
                None
            }
        },
        None => {
            errs.push(format!("{}: required", at("kind")));
            None
        }
    };
    let n = uint("n", errs);
    if n.is_none() && !obj.contains_key("n") {
        errs.push(format!("{}: required", at("n")));
    }
    let big_n = uint("N", errs);
    let p = uint("p", errs);
    if p.is_none() && !obj.contains_key("p") {
        errs.push(format!("{}: required", at("p")));
    }
    let law = match obj.get("law") {
        Some(l) => match EntryLaw::from_json(l, &at("law")) {
            Ok(l) => Some(l),
            Err(e) => {
                errs.extend(e);
                None
            }
        },
        None => {
            errs.push(format!("{}: required", at("law")));
            None
        }
    };
    let reference_law = match obj.get("reference_law") {
        Some(l) => match EntryLaw::from_json(l, &at("reference_law")) {
            Ok(l) => Some(l),
            Err(e) => {
                errs.extend(e);
                None
            }
        },
        None => None,
    };
    let replicates = uint("replicates", errs);
    let min_reps = if kind == Some(ExperimentKind::Eigenvector) {
        MIN_EIGEN_REPLICATES
    } else {
        MIN_REPLICATES
    };
    match replicates {
        Some(r) if r < min_reps => errs.push(format!(
            "{}: must be at least {min_reps}, got {r}",
            at("replicates")
        )),
        None if !obj.contains_key("replicates") => {
            errs.push(format!("{}: required", at("replicates")))
        }
        _ => {}
    }
    let stream = uint("stream", errs).unwrap_or(idx as u64);
    let oracle = flag("oracle", errs);
    let exploratory = flag("exploratory", errs);
    let criterion = uint("criterion", errs).map(|c| c as u32);
    let theta = match obj.get("theta") {
        None => ThetaSettings {
            count: 20,
            norm: 1.0,
        },
        Some(Value::Object(t)) => {
            let count = t.get("count").and_then(Value::as_u64);
            let norm = t.get("norm").and_then(Value::as_f64);
            if count.is_none() {
                errs.push(format!(
                    "{}: expected a nonnegative integer",
                    at("theta.count")
                ));
            }
            if !norm.is_some_and(|x| x.is_finite() && x >= 0.0) {
                errs.push(format!(
                    "{}: expected a nonnegative number",
                    at("theta.norm")
                ));
            }
            ThetaSettings {
                count: count.unwrap_or(0) as usize,
                norm: norm.unwrap_or(0.0),
            }
        }
        Some(_) => {
            errs.push(format!(
                "{}: expected an object with count and norm",
                at("theta")
            ));
            ThetaSettings {
                count: 0,
                norm: 0.0,
            }
        }
    };
    let histogram = match obj.get("histogram") {
        None => None,
        Some(Value::Object(h)) => {
            let bins = h.get("bins").and_then(Value::as_u64).filter(|&b| b >= 1);
            let lo = h.get("lo").and_then(Value::as_f64);
            let hi = h.get("hi").and_then(Value::as_f64);
            match (bins, lo, hi) {
                (Some(bins), Some(lo), Some(hi)) if lo < hi => Some(HistogramSpec {
                    bins: bins as usize,
                    lo,
                    hi,
                }),
                _ => {
                    errs.push(format!("{}: needs bins >= 1 and lo < hi", at("histogram")));
                    None
                }
            }
        }
        Some(_) => {
            errs.push(format!("{}: expected an object", at("histogram")));
            None
        }
    };

    let n = n.unwrap_or(0) as usize;
    let p = p.unwrap_or(0);
    if n < 2 && obj.contains_key("n") {
        errs.push(format!("{}: must be at least 2", at("n")));
    }
    if n > MAX_N {
        errs.push(format!("{}: at most {MAX_N}", at("n")));
    }
    if p < 1 && obj.contains_key("p") {
        errs.push(format!("{}: must be at least 1", at("p")));
    }
    if p > MAX_P as u64 {
        errs.push(format!("{}: at most {MAX_P}", at("p")));
    }
    let (default_i, default_j) = match kind {
        Some(ExperimentKind::EntryOffdiag) => (0, 1),
        _ => (0, 0),
    };
    let i = uint("i", errs).map_or(default_i, |x| x as usize);
    let j = uint("j", errs).map_or(default_j, |x| x as usize);
    let pool = uint("pool", errs).map_or(DEFAULT_POOL.min(n * n), |x| x as usize);
    if let Some(kind) = kind {
        match kind {
            ExperimentKind::WishartTrace => match big_n {
                Some(bn) if bn >= 2 && bn <= MAX_N as u64 => {}
                Some(_) => errs.push(format!("{}: must be between 2 and {MAX_N}", at("N"))),
                None => errs.push(format!("{}: required for wishart_trace", at("N"))),
            },
            _ if big_n.is_some() => errs.push(format!("{}: only used by wishart_trace", at("N"))),
            _ => {}
        }
        if matches!(
            kind,
            ExperimentKind::EntryDiag | ExperimentKind::EntryOffdiag
        ) {
            if i >= n || j >= n {
                errs.push(format!("{}: indices must be below n", at("i")));
            }
            if kind == ExperimentKind::EntryOffdiag && i == j {
                errs.push(format!("{}: must differ from i for entry_offdiag", at("j")));
            }
            if kind == ExperimentKind::EntryDiag && i != j {
                errs.push(format!("{}: must equal i for entry_diag", at("j")));
            }
            if kind == ExperimentKind::EntryDiag && p % 2 == 1 && !exploratory {
                errs.push(format!(
                    "{}: odd powers on the diagonal are only run with \"exploratory\": true",
                    at("p")
                ));
            }
        }
        if kind == ExperimentKind::CharfnProbe {
            if n > MAX_CHARFN_N {
                errs.push(format!(
                    "{}: at most {MAX_CHARFN_N} for charfn_probe",
                    at("n")
                ));
            }
            if p % 2 == 1 {
                errs.push(format!("{}: charfn_probe needs an even power", at("p")));
            }
            if theta.norm > (p as f64 / 2.0).sqrt() + 1e-12 {
                errs.push(format!("{}: must not exceed sqrt(p/2)", at("theta.norm")));
            }
            if theta.count == 0 {
                errs.push(format!("{}: must be positive", at("theta.count")));
            }
        }
        if kind == ExperimentKind::Eigenvector {
            if n > MAX_EIGEN_N {
                errs.push(format!(
                    "{}: at most {MAX_EIGEN_N} for eigenvector",
                    at("n")
                ));
            }
            if pool == 0 || pool > n * n {
                errs.push(format!("{}: must be between 1 and n^2", at("pool")));
            }
        }
        if oracle
            && !matches!(
                kind,
                ExperimentKind::Trace
                    | ExperimentKind::WishartTrace
                    | ExperimentKind::EntryDiag
                    | ExperimentKind::EntryOffdiag
            )
        {
            errs.push(format!("{}: no oracle for {}", at("oracle"), kind.as_str()));
        }
    }
    if errs.len() > before {
        return None;
    }
    Some(ExperimentConfig {
        name,
        kind: kind?,
        n,
        big_n: big_n.map(|b| b as usize),
        p: p as u32,
        law: law?,
        replicates: replicates?,
        seed: RandomSeed::new(master, stream),
        i,
        j,
        theta,
        oracle,
        exploratory,
        pool,
        reference_law,
        histogram,
        criterion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = RunConfig::from_json_str(
            r#"{"seed": 7, "experiments": [
                {"name": "t", "kind": "trace", "n": 10, "p": 4, "law": {"kind": "three_point", "b": 2.0}, "replicates": 200}
            ]}"#,
        )
        .unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.experiments[0].seed, RandomSeed::new(7, 0));
        assert_eq!(cfg.tolerances, Tolerances::default());
    }

    #[test]
    fn lists_every_problem() {
        let err = RunConfig::from_json_str(
            r#"{"seed": 1, "tolerances": {"ks_max": -1}, "experiments": [
                {"name": "a", "kind": "entry_offdiag", "n": 10, "p": 2, "i": 3, "j": 3,
                 "law": {"kind": "laplace"}, "replicates": 10, "colour": 1}
            ]}"#,
        )
        .unwrap_err();
        let Error::Config(list) = err else {
            panic!("expected a config error")
        };
        let text = list.join("\n");
        for needle in [
            "tolerances.ks_max",
            "experiments[0].law.kind",
            "experiments[0].replicates",
            "experiments[0].j",
            "experiments[0].colour",
        ] {
            assert!(text.contains(needle), "missing {needle} in\n{text}");
        }
    }

    #[test]
    fn kind_specific_rules() {
        let bad = |body: &str| {
            let text = format!(r#"{{"seed": 1, "experiments": [{body}]}}"#);
            RunConfig::from_json_str(&text).is_err()
        };
        assert!(bad(
            r#"{"name": "w", "kind": "wishart_trace", "n": 4, "p": 2, "law": "gaussian", "replicates": 100}"#
        ));
        assert!(bad(
            r#"{"name": "d", "kind": "entry_diag", "n": 4, "p": 3, "law": "gaussian", "replicates": 100}"#
        ));
        assert!(!bad(
            r#"{"name": "d", "kind": "entry_diag", "n": 4, "p": 3, "law": "gaussian", "replicates": 100, "exploratory": true}"#
        ));
        assert!(bad(
            r#"{"name": "c", "kind": "charfn_probe", "n": 80, "p": 2, "law": "gaussian", "replicates": 100}"#
        ));
        assert!(bad(
            r#"{"name": "c", "kind": "charfn_probe", "n": 8, "p": 2, "law": "gaussian", "replicates": 100, "theta": {"count": 3, "norm": 2.0}}"#
        ));
        assert!(bad(
            r#"{"name": "e", "kind": "eigenvector", "n": 300, "p": 1, "law": "gaussian", "replicates": 100}"#
        ));
    }
}
