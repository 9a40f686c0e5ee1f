//! The acceptance suite: exact identities, numerical checks, and the Monte
//! Carlo experiments of the shipped configuration.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::cycles::{classify_bipartite, enumerate_dominant, first_vertex_multiplicity_histogram};
use crate::error::Result;
use crate::exactnum::{
    beta_moment, beta_recurrence_check, catalan, catalan_composition_identity, f_count_formula,
    f_count_unchecked, narayana_count, rational_string, to_f64,
};
use crate::mcengine::{
    render_run, run_config, CriterionStatus, ExperimentKind, OutputBundle, RunConfig, RunResults,
    MIN_EIGEN_REPLICATES, MIN_REPLICATES,
};
use crate::spectral::{generating_eq_residual, mp_moment_quadrature, stieltjes_residual, MpParams};
use crate::variance::{a11, a12, a1_fullglory, a2_closed, a2_direct};

/// Monte Carlo half of the suite.
pub const VERIFY_CONFIG: &str = include_str!("../configs/verify.json");

pub const CRITERIA: u32 = 17;

/// `Full` runs the shipped replicate counts; `Quick` shrinks every Monte
/// Carlo experiment for smoke and determinism runs (its verdicts on the
/// statistical criteria are not meaningful).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Full,
    Quick,
}

impl Profile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::Full => "full",
            Profile::Quick => "quick",
        }
    }
}

pub const QUICK_MAX_N: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct VerifyReport {
    pub profile: Profile,
    pub config: RunConfig,
    pub criteria: Vec<CriterionOutcome>,
    pub mc: RunResults,
    pub files: OutputBundle,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    /// Re-renders the files after `criteria` changed.
    pub fn refresh_files(&mut self) -> Result<()> {
        self.files = render_verify(self.profile, &self.config, &self.criteria, &self.mc)?;
        Ok(())
    }
}

/// The shipped Monte Carlo config, shrunk for [`Profile::Quick`] and with an
/// optional master seed override.
pub fn verify_config(profile: Profile, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_json_str(VERIFY_CONFIG)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
        for e in cfg.experiments.iter_mut() {
            e.seed.master = s;
        }
    }
    if profile == Profile::Quick {
        for e in cfg.experiments.iter_mut() {
            let floor = if e.kind == ExperimentKind::Eigenvector {
                MIN_EIGEN_REPLICATES
            } else {
                MIN_REPLICATES
            };
            e.replicates = (e.replicates / 100).max(floor);
            if e.n > QUICK_MAX_N {
                let n = QUICK_MAX_N;
                e.big_n = e.big_n.map(|bn| (bn * n / e.n).max(2));
                e.pool = e.pool.min(n * n);
                e.n = n;
            }
        }
    }
    Ok(cfg)
}

fn outcome(
    id: u32,
    title: &'static str,
    failures: Vec<String>,
    summary: String,
) -> CriterionOutcome {
    let pass = failures.is_empty();
    let detail = if pass {
        summary
    } else {
        let shown: Vec<_> = failures.iter().take(4).cloned().collect();
        let more = failures.len().saturating_sub(shown.len());
        let mut d = shown.join("; ");
        if more > 0 {
            d.push_str(&format!("; {more} more"));
        }
        d
    };
    CriterionOutcome {
        id,
        title,
        pass,
        detail,
    }
}

fn err_text(e: crate::Error) -> String {
    e.to_string().replace('\n', " ")
}

fn c1() -> CriterionOutcome {
    let mut bad = Vec::new();
    for l in 1..=7u64 {
        match enumerate_dominant(l) {
            Ok(v) if BigInt::from(v.len()) == catalan(l) => {}
            Ok(v) => bad.push(format!("l={l}: {} classes vs C_l={}", v.len(), catalan(l))),
            Err(e) => bad.push(format!("l={l}: {}", err_text(e))),
        }
    }
    outcome(
        1,
        "dominant class sizes equal Catalan numbers",
        bad,
        "l = 1..7".into(),
    )
}

fn c2() -> CriterionOutcome {
    let mut bad = Vec::new();
    for l in 1..=12u64 {
        match catalan_composition_identity(l) {
            Ok(v) if v.is_zero() => {}
            Ok(v) => bad.push(format!("l={l}: residual {v}")),
            Err(e) => bad.push(format!("l={l}: {}", err_text(e))),
        }
    }
    outcome(2, "Catalan composition identity", bad, "l = 1..12".into())
}

fn c3() -> CriterionOutcome {
    let mut bad = Vec::new();
    let gammas =
        ["1/4", "1/2", "1", "2", "3"].map(|s| crate::exactnum::parse_rational(s).expect("literal"));
    for g in &gammas {
        for k in 2..=20u64 {
            match beta_recurrence_check(k, g) {
                Ok(v) if v.is_zero() => {}
                Ok(v) => bad.push(format!(
                    "k={k} gamma={}: residual {}",
                    rational_string(g),
                    rational_string(&v)
                )),
                Err(e) => bad.push(err_text(e)),
            }
        }
    }
    for k in 1..=20u64 {
        match beta_moment(k, &BigRational::one()) {
            Ok(v) if v == BigRational::from_integer(catalan(k)) => {}
            Ok(v) => bad.push(format!("beta({k},1) = {} vs C_k", rational_string(&v))),
            Err(e) => bad.push(err_text(e)),
        }
    }
    outcome(
        3,
        "moment recurrence and beta(k,1) = C_k",
        bad,
        "k <= 20, five gammas".into(),
    )
}

fn c4() -> CriterionOutcome {
    let mut bad = Vec::new();
    for l in 1..=7u64 {
        match classify_bipartite(l) {
            Ok(h) => {
                for (i, &c) in h.iter().enumerate() {
                    let want = narayana_count(l, i as u64).unwrap_or_default();
                    if BigInt::from(c) != want {
                        bad.push(format!("l={l} i={i}: {c} vs {want}"));
                    }
                }
            }
            Err(e) => bad.push(err_text(e)),
        }
    }
    for p in 1..=20u64 {
        let s = (0..p).fold(BigInt::zero(), |acc, i| {
            acc + narayana_count(p, i).unwrap_or_default()
        });
        if s != catalan(p) {
            bad.push(format!("p={p}: narayana sum {s} vs {}", catalan(p)));
        }
    }
    outcome(
        4,
        "bipartite classification matches Narayana counts",
        bad,
        "l <= 7; sums for p <= 20".into(),
    )
}

fn c5() -> CriterionOutcome {
    let mut bad = Vec::new();
    for p in (4..=20u64).step_by(2) {
        match (a2_direct(p), a2_closed(p)) {
            (Ok(d), Ok(c)) if BigRational::from_integer(d.clone()) == c => {}
            (Ok(d), Ok(c)) => bad.push(format!(
                "a2({p}): direct {d} vs closed {}",
                rational_string(&c)
            )),
            (Err(e), _) | (_, Err(e)) => bad.push(err_text(e)),
        }
    }
    // documented small-p divergence
    let two = (a2_direct(2), a2_closed(2));
    match two {
        (Ok(d), Ok(c)) if d == BigInt::one() && c == BigRational::new(3.into(), 4.into()) => {}
        _ => bad.push("a2(2) no longer 1 vs 3/4".into()),
    }
    let mut mismatches = Vec::new();
    for p in 2..=12u64 {
        let (Ok(x), Ok(y), Ok(full)) = (a11(p), a12(p), a1_fullglory(p)) else {
            bad.push(format!("p={p}: evaluation failed"));
            continue;
        };
        let direct = &x + &y;
        if full != direct {
            mismatches.push(format!("A1({p}): closed {full} vs direct {direct}"));
        }
        let cat = catalan(p - 1);
        let pw = |e: i64, m: u64| BigRational::new(BigInt::from(m), BigInt::one()) * pow2(e);
        let xr = BigRational::from_integer(x.clone());
        if x < cat {
            bad.push(format!("A11({p}) = {x} below C_(p-1) = {cat}"));
        }
        if xr > BigRational::from_integer(cat.clone()) + pw(p as i64 - 6, p * p + 12 * p + 19) {
            bad.push(format!("A11({p}) = {x} above its upper bound"));
        }
        if BigRational::from_integer(y.clone()) > pw(p as i64 - 5, p * p + 8 * p) {
            bad.push(format!("A12({p}) = {y} above its upper bound"));
        }
    }
    bad.extend(mismatches);
    outcome(
        5,
        "variance closed forms agree with direct sums",
        bad,
        "p = 2..20".into(),
    )
}

fn pow2(e: i64) -> BigRational {
    let two = BigRational::from_integer(2.into());
    if e >= 0 {
        num_traits::pow(two, e as usize)
    } else {
        num_traits::pow(two, (-e) as usize).recip()
    }
}

fn c6() -> CriterionOutcome {
    let mut bad = Vec::new();
    let mut shifted_ok = true;
    for l in 1..=7u64 {
        let h = match first_vertex_multiplicity_histogram(l) {
            Ok(h) => h,
            Err(e) => {
                bad.push(err_text(e));
                continue;
            }
        };
        if BigInt::from(h[1]) != catalan(l - 1) {
            bad.push(format!(
                "l={l}: hist[1] = {} vs C_(l-1) = {}",
                h[1],
                catalan(l - 1)
            ));
        }
        for m in 2..=l {
            let f = f_count_formula(l, m).unwrap_or_default();
            if BigInt::from(h[m as usize]) != f {
                bad.push(format!("l={l} m={m}: hist {} vs f(l,m) {f}", h[m as usize]));
            }
            if BigInt::from(h[m as usize]) != f_count_unchecked(l, m + 1) {
                shifted_ok = false;
            }
        }
    }
    let note = if shifted_ok {
        "hist[m] = f(l,m+1) holds throughout"
    } else {
        "shifted relation also fails"
    };
    let mut o = outcome(
        6,
        "first-vertex multiplicity histogram",
        bad,
        "l <= 7".into(),
    );
    o.detail = format!("{}; {note}", o.detail);
    o
}

fn c7() -> CriterionOutcome {
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for g in [0.25, 0.5, 1.0, 2.0] {
        let params = match MpParams::<f64>::new(g) {
            Ok(p) => p,
            Err(e) => {
                bad.push(err_text(e));
                continue;
            }
        };
        let gr = crate::exactnum::rational_from_f64(g, 64).expect("dyadic");
        for k in 1..=8u32 {
            let exact = to_f64(&beta_moment(k as u64, &gr).expect("k >= 1"));
            match mp_moment_quadrature(k, &params) {
                Ok(q) => {
                    let d = (q - exact).abs();
                    worst = worst.max(d);
                    if d > 1e-6 {
                        bad.push(format!("k={k} gamma={g}: |error| {d:.3e}"));
                    }
                }
                Err(e) => bad.push(err_text(e)),
            }
        }
    }
    outcome(
        7,
        "quadrature moments match beta(k, gamma)",
        bad,
        format!("max error {worst:.3e}"),
    )
}

fn c8() -> CriterionOutcome {
    let mut bad = Vec::new();
    let (mut ws, mut wg) = (0.0f64, 0.0f64);
    for g in [0.5, 1.0, 2.0] {
        let params = MpParams::<f64>::new(g).expect("positive gamma");
        for re in [1.0, 2.0, 3.0] {
            for im in [1.0, 2.0] {
                match stieltjes_residual(Complex::new(re, im), &params) {
                    Ok(r) => {
                        ws = ws.max(r);
                        if r > 1e-5 {
                            bad.push(format!("gamma={g} z={re}+{im}i: residual {r:.3e}"));
                        }
                    }
                    Err(e) => bad.push(err_text(e)),
                }
            }
        }
        match generating_eq_residual(0.1 / params.b, &params, 40) {
            Ok(r) => {
                wg = wg.max(r);
                if r > 1e-8 {
                    bad.push(format!("gamma={g}: generating residual {r:.3e}"));
                }
            }
            Err(e) => bad.push(err_text(e)),
        }
    }
    outcome(
        8,
        "Stieltjes and generating-function identities",
        bad,
        format!("max residuals {ws:.3e} / {wg:.3e}"),
    )
}

const MC_TITLES: [(u32, &str); 8] = [
    (9, "Wigner trace means match the exact oracle"),
    (10, "Wishart trace means match the exact oracle"),
    (11, "Wishart trace mean ratio to n beta(p, n/N)"),
    (12, "Wigner trace mean ratio to n C_(p/2)"),
    (13, "off-diagonal entry variance, KS and kurtosis"),
    (14, "diagonal entry variance against c^2(2p, m4)"),
    (15, "characteristic-function probe"),
    (16, "eigenvector delocalisation probe"),
];

fn mc_outcome(id: u32, title: &'static str, mc: &RunResults) -> CriterionOutcome {
    let tagged: Vec<_> = mc
        .experiments
        .iter()
        .filter(|e| e.criterion == Some(id))
        .collect();
    if tagged.is_empty() {
        return outcome(
            id,
            title,
            vec!["no experiment tagged".into()],
            String::new(),
        );
    }
    let mut bad = Vec::new();
    for e in &tagged {
        for c in e.checks.iter().filter(|c| c.gating && !c.pass) {
            let range = match (c.lo, c.hi) {
                (Some(l), Some(h)) => format!("[{l:.4}, {h:.4}]"),
                (Some(l), None) => format!(">= {l:.4}"),
                (None, Some(h)) => format!("<= {h:.4}"),
                (None, None) => String::new(),
            };
            bad.push(format!(
                "{} {} = {:.4} not in {range}",
                e.name, c.name, c.value
            ));
        }
    }
    let summary = format!("{} experiments", tagged.len());
    outcome(id, title, bad, summary)
}

/// Stand-in for criterion 17 until [`determinism_check`] replaces it.
fn c17_not_evaluated() -> CriterionOutcome {
    CriterionOutcome {
        id: 17,
        title: "byte-identical output across worker counts",
        pass: false,
        detail: "not evaluated in a single run".into(),
    }
}

/// Criteria 1 to 8, which need no sampling.
pub fn exact_criteria() -> Vec<CriterionOutcome> {
    vec![c1(), c2(), c3(), c4(), c5(), c6(), c7(), c8()]
}

/// Runs the whole suite and renders its output files (not written yet).
/// Criterion 17 is reported as failed (not evaluated) inside a single run.
pub fn run_verify(profile: Profile, workers: usize, seed: Option<u64>) -> Result<VerifyReport> {
    let cfg = verify_config(profile, seed)?;
    let mut criteria = exact_criteria();
    let mc = run_config(&cfg, workers)?;
    for (id, title) in MC_TITLES {
        criteria.push(mc_outcome(id, title, &mc));
    }
    criteria.push(c17_not_evaluated());
    let files = render_verify(profile, &cfg, &criteria, &mc)?;
    Ok(VerifyReport {
        profile,
        config: cfg,
        criteria,
        mc,
        files,
    })
}

fn render_verify(
    profile: Profile,
    cfg: &RunConfig,
    criteria: &[CriterionOutcome],
    mc: &RunResults,
) -> Result<OutputBundle> {
    let digest_input = format!(
        "{}\nprofile={}\nseed={}\n",
        VERIFY_CONFIG,
        profile.as_str(),
        cfg.master_seed
    );
    let (mut files, mut manifest) = render_run(mc, digest_input.as_bytes())?;
    manifest.pass = criteria.iter().all(|c| c.pass);
    manifest.criteria = criteria
        .iter()
        .map(|c| CriterionStatus {
            id: c.id,
            pass: c.pass,
        })
        .collect();
    files.add_json("manifest.json", &manifest)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "title", "pass", "detail"])?;
    for c in criteria {
        w.write_record([
            c.id.to_string(),
            c.title.to_string(),
            c.pass.to_string(),
            c.detail.clone(),
        ])?;
    }
    files.add("criteria.csv", w.into_inner().map_err(|e| e.into_error())?);
    Ok(files)
}

/// Runs the quick profile under each worker count and compares every
/// output file byte for byte.
pub fn determinism_check(worker_counts: &[usize], seed: Option<u64>) -> Result<CriterionOutcome> {
    let mut first: Option<(usize, OutputBundle)> = None;
    let mut bad = Vec::new();
    for &w in worker_counts {
        let rep = run_verify(Profile::Quick, w, seed)?;
        match &first {
            None => first = Some((w, rep.files)),
            Some((w0, f0)) => {
                let names: Vec<&str> = f0.names().collect();
                if names != rep.files.names().collect::<Vec<_>>() {
                    bad.push(format!("file lists differ between {w0} and {w} workers"));
                }
                for name in names {
                    if f0.get(name) != rep.files.get(name) {
                        bad.push(format!("{name} differs between {w0} and {w} workers"));
                    }
                }
            }
        }
    }
    let counts: Vec<String> = worker_counts.iter().map(|w| w.to_string()).collect();
    Ok(outcome(
        17,
        "byte-identical output across worker counts",
        bad,
        format!("quick profile, workers {}", counts.join(" and ")),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_parses() {
        let full = verify_config(Profile::Full, None).unwrap();
        let quick = verify_config(Profile::Quick, Some(5)).unwrap();
        assert_eq!(full.experiments.len(), quick.experiments.len());
        for id in 9..=16 {
            assert!(
                full.experiments.iter().any(|e| e.criterion == Some(id)),
                "criterion {id}"
            );
        }
        assert!(quick
            .experiments
            .iter()
            .all(|e| e.n <= QUICK_MAX_N && e.seed.master == 5));
        for e in &full.experiments {
            e.check_budget().unwrap();
        }
    }

    #[test]
    fn exact_part() {
        let out = exact_criteria();
        let pass: Vec<bool> = out.iter().map(|c| c.pass).collect();
        assert_eq!(pass, [true, true, true, true, false, false, true, true]);
        assert!(
            out[4].detail.contains("A1(4): closed 18 vs direct 17"),
            "{}",
            out[4].detail
        );
        assert!(out[5]
            .detail
            .contains("hist[m] = f(l,m+1) holds throughout"));
    }
}
