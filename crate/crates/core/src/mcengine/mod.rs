//! Seeded Monte Carlo experiments.
//!
//! Every replicate is a pure function of `(seed, replicate)`. Replicates run
//! on a rayon pool and are collected in index order; all reductions then run
//! sequentially in that order, so results do not depend on the worker count.

mod config;
mod output;

pub use config::{
    ExperimentConfig, ExperimentKind, HistogramSpec, RunConfig, ThetaSettings, Tolerances,
    DEFAULT_POOL, MAX_CHARFN_N, MAX_EIGEN_N, MAX_N, MAX_P, MIN_EIGEN_REPLICATES, MIN_REPLICATES,
    WORK_BUDGET,
};
pub use output::{render_run, CriterionStatus, OutputBundle, RunManifest, Timing, TOOL_VERSION};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::cycles::{
    entry_variance_leading, exact_wigner_entry_stats, exact_wigner_trace_mean,
    exact_wishart_trace_mean,
};
use crate::error::{Error, Result};
use crate::exactnum::{beta_moment, catalan, rational_string, to_f64};
use crate::matgen::{
    entry_powers, fill_entries, law_profile, matrix_power, sample_wigner, sample_wishart,
    trace_power, EntryLaw,
};
use crate::spectral::{jacobi_eigh, max_entry_statistic};
use crate::stats::{histogram, ks_statistic, Histogram, MomentAccumulator, Moments};
use crate::variance::{c_squared, offdiag_variance};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "RMT_LAB_THREADS";

/// Worker count: the explicit value, else `RMT_LAB_THREADS`, else the
/// machine's parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    if let Some(w) = explicit {
        if w == 0 {
            return Err(Error::Config(vec![
                "threads: must be a positive integer".into()
            ]));
        }
        return Ok(w);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(Error::Config(vec![format!(
                "{THREADS_ENV}: expected a positive integer, got {v:?}"
            )])),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Moments of one sample plus whatever targets apply.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatSummary {
    #[serde(flatten)]
    pub moments: Moments,
    pub ks: Option<f64>,
    pub target_mean: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub target_variance: Option<f64>,
    pub variance_ratio: Option<f64>,
    /// Exact rationals as `num/den` strings.
    pub exact_mean: Option<String>,
    pub exact_variance: Option<String>,
    pub leading_variance: Option<String>,
}

impl StatSummary {
    fn of(samples: &[f64]) -> Result<Self> {
        Ok(Self {
            moments: accumulate(samples).finalize()?,
            ks: None,
            target_mean: None,
            mean_ratio: None,
            target_variance: None,
            variance_ratio: None,
            exact_mean: None,
            exact_variance: None,
            leading_variance: None,
        })
    }
}

/// One pass/fail comparison. `gating` checks decide the experiment's verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub gating: bool,
    pub pass: bool,
}

impl Check {
    fn within(name: &str, value: f64, lo: Option<f64>, hi: Option<f64>, gating: bool) -> Self {
        let pass =
            value.is_finite() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Self {
            name: name.to_string(),
            value,
            lo,
            hi,
            gating,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharfnRow {
    pub index: usize,
    pub theta_norm: f64,
    pub phi_re: f64,
    pub phi_im: f64,
    pub phi_nu: f64,
    pub phi_nu_alt: f64,
    pub gap: f64,
    pub gap_alt: f64,
    pub mc_se: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharfnReport {
    /// Diagonal variance of the comparison Gaussian, `c^2(p, m4) / C_p`.
    pub diag_variance: f64,
    /// The same with `C_p - C_{p/2}^2` in the denominator.
    pub diag_variance_alt: f64,
    pub rows: Vec<CharfnRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRun {
    pub law: String,
    pub ks: f64,
    pub max_entry_mean: f64,
    pub max_entry_max: f64,
    pub max_entry_fraction: f64,
    pub max_sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenReport {
    pub pooled_per_replicate: usize,
    pub run: EigenRun,
    pub reference: Option<EigenRun>,
    pub ks_diff: Option<f64>,
}

/// Outcome of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub kind: ExperimentKind,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    pub p: u32,
    pub law: String,
    pub replicates: u64,
    pub stream: u64,
    pub i: usize,
    pub j: usize,
    /// `raw` or `standardized`: what the summary describes.
    pub scale: &'static str,
    pub criterion: Option<u32>,
    pub exploratory: bool,
    pub oracle: bool,
    pub summary: Option<StatSummary>,
    pub charfn: Option<CharfnReport>,
    pub eigen: Option<EigenReport>,
    pub histogram: Option<Histogram>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResults {
    pub master_seed: u64,
    pub tolerances: Tolerances,
    pub experiments: Vec<ExperimentResult>,
    pub pass: bool,
}

/// Runs every experiment of `cfg` on a pool of `workers` threads.
pub fn run_config(cfg: &RunConfig, workers: usize) -> Result<RunResults> {
    for e in &cfg.experiments {
        e.check_budget()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let experiments = pool.install(|| {
        cfg.experiments
            .iter()
            .map(|e| run_experiment(e, &cfg.tolerances))
            .collect::<Result<Vec<_>>>()
    })?;
    let pass = experiments.iter().all(|e| e.pass);
    Ok(RunResults {
        master_seed: cfg.master_seed,
        tolerances: cfg.tolerances.clone(),
        experiments,
        pass,
    })
}

/// Runs one experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig, tol: &Tolerances) -> Result<ExperimentResult> {
    cfg.check_budget()?;
    let mut out = ExperimentResult {
        name: cfg.name.clone(),
        kind: cfg.kind,
        n: cfg.n,
        big_n: cfg.big_n,
        p: cfg.p,
        law: cfg.law.to_string(),
        replicates: cfg.replicates,
        stream: cfg.seed.stream,
        i: cfg.i,
        j: cfg.j,
        scale: "raw",
        criterion: cfg.criterion,
        exploratory: cfg.exploratory,
        oracle: cfg.oracle,
        summary: None,
        charfn: None,
        eigen: None,
        histogram: None,
        checks: Vec::new(),
        pass: true,
    };
    let gate = !cfg.exploratory;
    let samples = match cfg.kind {
        ExperimentKind::Trace | ExperimentKind::WishartTrace => {
            run_trace(cfg, tol, gate, &mut out)?
        }
        ExperimentKind::EntryDiag | ExperimentKind::EntryOffdiag => {
            run_entry(cfg, tol, gate, &mut out)?
        }
        ExperimentKind::CharfnProbe => {
            run_charfn(cfg, tol, gate, &mut out)?;
            None
        }
        ExperimentKind::Eigenvector => Some(run_eigen(cfg, tol, gate, &mut out)?),
    };
    if let (Some(spec), Some(s)) = (cfg.histogram, samples.as_ref()) {
        out.histogram = Some(histogram(s, spec.bins, (spec.lo, spec.hi))?);
    }
    out.pass = out.checks.iter().filter(|c| c.gating).all(|c| c.pass);
    Ok(out)
}

fn per_replicate<V, F>(reps: u64, f: F) -> Result<Vec<V>>
where
    V: Send,
    F: Fn(u64) -> Result<V> + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

fn accumulate(xs: &[f64]) -> MomentAccumulator<f64> {
    let mut acc = MomentAccumulator::new();
    for &x in xs {
        acc.push(x);
    }
    acc
}

fn profile_for(law: &EntryLaw, p: u32) -> Result<crate::matgen::MomentProfile> {
    law_profile(law, (p as usize).max(2))
}

fn f(r: &BigRational) -> f64 {
    to_f64(r)
}

fn fi(r: &BigInt) -> f64 {
    to_f64(&BigRational::from_integer(r.clone()))
}

fn run_trace(
    cfg: &ExperimentConfig,
    tol: &Tolerances,
    gate: bool,
    out: &mut ExperimentResult,
) -> Result<Option<Vec<f64>>> {
    let (n, p) = (cfg.n, cfg.p);
    let wishart = cfg.kind == ExperimentKind::WishartTrace;
    let big_n = cfg.big_n.unwrap_or(0);
    let exact = if cfg.oracle {
        let mp = profile_for(&cfg.law, p)?;
        Some(if wishart {
            exact_wishart_trace_mean(n as u64, big_n as u64, p as u64, &mp)?
        } else {
            exact_wigner_trace_mean(n as u64, p as u64, &mp)?
        })
    } else {
        None
    };
    let samples = per_replicate(cfg.replicates, |r| {
        let a = if wishart {
            sample_wishart::<f64>(n, big_n, &cfg.law, cfg.seed, r)?
        } else {
            sample_wigner::<f64>(n, &cfg.law, cfg.seed, r)?
        };
        trace_power(&a, p)
    })?;
    let mut s = StatSummary::of(&samples)?;
    let m = s.moments;
    if let Some(exact) = &exact {
        let e = f(exact);
        s.exact_mean = Some(rational_string(exact));
        let k = tol.se_multiple;
        out.checks.push(Check::within(
            "mean_minus_exact",
            m.mean - e,
            Some(-k * m.se_mean),
            Some(k * m.se_mean),
            gate,
        ));
    }
    let target = if wishart {
        let gamma = BigRational::new(BigInt::from(n), BigInt::from(big_n));
        Some(BigRational::from_integer(BigInt::from(n)) * beta_moment(p as u64, &gamma)?)
    } else if p % 2 == 0 {
        Some(BigRational::from_integer(
            BigInt::from(n) * catalan(p as u64 / 2),
        ))
    } else {
        None
    };
    match &target {
        Some(t) => {
            let t = f(t);
            let ratio = m.mean / t;
            s.target_mean = Some(t);
            s.mean_ratio = Some(ratio);
            if exact.is_none() {
                let w = tol.mean_ratio;
                out.checks.push(Check::within(
                    "mean_ratio",
                    ratio,
                    Some(1.0 - w),
                    Some(1.0 + w),
                    gate,
                ));
            }
            if wishart {
                let scale = (p as f64).powi(2) / n as f64;
                out.checks
                    .push(Check::within("p2_over_n", scale, None, None, false));
            }
        }
        None => {
            s.target_mean = Some(0.0);
            if exact.is_none() {
                let k = tol.se_multiple;
                out.checks.push(Check::within(
                    "mean",
                    m.mean,
                    Some(-k * m.se_mean),
                    Some(k * m.se_mean),
                    gate,
                ));
            }
        }
    }
    if !wishart && cfg.replicates >= tol.trace_ks_min_replicates {
        let scale = 2f64.powi(p as i32) / std::f64::consts::PI.sqrt();
        let z: Vec<f64> = samples.iter().map(|x| (x - m.mean) / scale).collect();
        let ks = ks_statistic(&z)?;
        s.ks = Some(ks);
        out.checks
            .push(Check::within("ks", ks, None, Some(tol.ks_max), false));
    }
    out.summary = Some(s);
    Ok(Some(samples))
}

fn run_entry(
    cfg: &ExperimentConfig,
    tol: &Tolerances,
    gate: bool,
    out: &mut ExperimentResult,
) -> Result<Option<Vec<f64>>> {
    let (n, p, i, j) = (cfg.n, cfg.p, cfg.i, cfg.j);
    let diagonal = cfg.kind == ExperimentKind::EntryDiag;
    let mp = profile_for(&cfg.law, p)?;
    let raw = per_replicate(cfg.replicates, |r| {
        let a = sample_wigner::<f64>(n, &cfg.law, cfg.seed, r)?;
        Ok(entry_powers(&a, p, i, j)[p as usize - 1])
    })?;
    let k = tol.se_multiple;

    if cfg.oracle {
        let exact = exact_wigner_entry_stats(n as u64, p as u64, i as u64, j as u64, &mp)?;
        let mut s = StatSummary::of(&raw)?;
        let m = s.moments;
        s.exact_mean = Some(rational_string(&exact.mean));
        s.exact_variance = Some(rational_string(&exact.variance));
        s.target_mean = Some(f(&exact.mean));
        s.target_variance = Some(f(&exact.variance));
        if !exact.variance.eq(&BigRational::from_integer(0.into())) {
            s.variance_ratio = Some(m.variance / f(&exact.variance));
        }
        let dm = m.mean - f(&exact.mean);
        let dv = m.variance - f(&exact.variance);
        out.checks.push(Check::within(
            "mean_minus_exact",
            dm,
            Some(-k * m.se_mean),
            Some(k * m.se_mean),
            gate,
        ));
        out.checks.push(Check::within(
            "variance_minus_exact",
            dv,
            Some(-k * m.se_variance),
            Some(k * m.se_variance),
            gate,
        ));
        out.summary = Some(s);
        return Ok(Some(raw));
    }

    // Standardise: sqrt(n) (x - centre) / sigma.
    let even_diag = diagonal && p % 2 == 0;
    let centre = if even_diag {
        fi(&catalan(p as u64 / 2))
    } else {
        0.0
    };
    let sigma2: Option<BigRational> = if diagonal {
        if even_diag {
            Some(c_squared(p as u64, mp.fourth_moment()?)?)
        } else {
            None
        }
    } else {
        Some(BigRational::from_integer(offdiag_variance(p as u64)?))
    };
    let sigma = sigma2.as_ref().map_or(1.0, |v| f(v).sqrt());
    let rn = (n as f64).sqrt();
    let z: Vec<f64> = raw.iter().map(|x| rn * (x - centre) / sigma).collect();
    out.scale = "standardized";
    let mut s = StatSummary::of(&z)?;
    let m = s.moments;
    let leading = entry_variance_leading(p as u64, diagonal, &mp).ok();
    s.leading_variance = leading.as_ref().map(rational_string);
    let ks = ks_statistic(&z)?;
    s.ks = Some(ks);
    s.target_mean = Some(0.0);
    if let Some(v) = &sigma2 {
        s.target_variance = Some(1.0);
        s.variance_ratio = Some(m.variance);
        let w = if diagonal {
            tol.variance_ratio_centered
        } else {
            tol.variance_ratio
        };
        out.checks.push(Check::within(
            "variance_ratio",
            m.variance,
            Some(1.0 - w),
            Some(1.0 + w),
            gate,
        ));
        if let Some(l) = &leading {
            let lv = f(l);
            if lv > 0.0 {
                out.checks.push(Check::within(
                    "variance_over_leading",
                    m.variance * f(v) / lv,
                    None,
                    None,
                    false,
                ));
            }
        }
    }
    // Shape checks gate only the off-diagonal case, where the law is symmetric.
    let shape_gate = gate && !diagonal;
    out.checks
        .push(Check::within("ks", ks, None, Some(tol.ks_max), shape_gate));
    out.checks.push(Check::within(
        "excess_kurtosis",
        m.excess_kurtosis,
        Some(-tol.kurtosis_abs),
        Some(tol.kurtosis_abs),
        shape_gate,
    ));
    out.checks.push(Check::within(
        "skewness",
        m.skewness,
        Some(-k * m.se_skewness),
        Some(k * m.se_skewness),
        shape_gate,
    ));
    out.summary = Some(s);
    Ok(Some(z))
}

/// Random directions of norm `norm` in `dim` dimensions, with `theta = 0` first.
fn theta_directions(cfg: &ExperimentConfig, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = cfg.seed.replicate_rng(u64::MAX);
    let mut out = vec![vec![0.0; dim]];
    for _ in 0..cfg.theta.count {
        let mut v = vec![0.0; dim];
        fill_entries(&EntryLaw::Gaussian, &mut rng, &mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x *= cfg.theta.norm / norm;
        }
        out.push(v);
    }
    out
}

fn run_charfn(
    cfg: &ExperimentConfig,
    tol: &Tolerances,
    gate: bool,
    out: &mut ExperimentResult,
) -> Result<()> {
    let (n, p) = (cfg.n, cfg.p);
    let mp = profile_for(&cfg.law, p)?;
    let cp = fi(&catalan(p as u64));
    let half = fi(&catalan(p as u64 / 2));
    let norm_var = fi(&offdiag_variance(p as u64)?);
    let c2 = f(&c_squared(p as u64, mp.fourth_moment()?)?);
    let diag_variance = c2 / cp;
    let diag_variance_alt = c2 / norm_var;
    let scale = (n as f64 / norm_var).sqrt();
    let dim = n * (n + 1) / 2;
    let thetas = theta_directions(cfg, dim);

    let per_rep = per_replicate(cfg.replicates, |r| {
        let a = sample_wigner::<f64>(n, &cfg.law, cfg.seed, r)?;
        let ap = matrix_power(&a, p)?;
        let mut x = Vec::with_capacity(dim);
        for i in 0..n {
            for j in i..n {
                let c = if i == j { half } else { 0.0 };
                x.push(scale * (ap[[i, j]] - c));
            }
        }
        Ok(thetas
            .iter()
            .map(|t| {
                let dot: f64 = t.iter().zip(&x).map(|(a, b)| a * b).sum();
                dot.sin_cos()
            })
            .collect::<Vec<_>>())
    })?;

    let mut rows = Vec::with_capacity(thetas.len());
    for (idx, t) in thetas.iter().enumerate() {
        let mut cos_acc = MomentAccumulator::new();
        let mut sin_acc = MomentAccumulator::new();
        for rep in &per_rep {
            let (s, c) = rep[idx];
            cos_acc.push(c);
            sin_acc.push(s);
        }
        let mc = cos_acc.finalize()?;
        let ms = sin_acc.finalize()?;
        let (mut qd, mut qo) = (0.0, 0.0);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                if i == j {
                    qd += t[k] * t[k];
                } else {
                    qo += t[k] * t[k];
                }
                k += 1;
            }
        }
        let phi_nu = (-(qd * diag_variance + qo) / 2.0).exp();
        let phi_nu_alt = (-(qd * diag_variance_alt + qo) / 2.0).exp();
        let gap = (mc.mean - phi_nu).hypot(ms.mean);
        let gap_alt = (mc.mean - phi_nu_alt).hypot(ms.mean);
        let mc_se = ((mc.variance + ms.variance) / cfg.replicates as f64).sqrt();
        let threshold = tol.charfn_gap + tol.charfn_se_multiple * mc_se;
        rows.push(CharfnRow {
            index: idx,
            theta_norm: t.iter().map(|x| x * x).sum::<f64>().sqrt(),
            phi_re: mc.mean,
            phi_im: ms.mean,
            phi_nu,
            phi_nu_alt,
            gap,
            gap_alt,
            mc_se,
            threshold,
            pass: gap <= threshold,
        });
    }
    let worst = rows
        .iter()
        .map(|r| r.gap - r.threshold)
        .fold(f64::NEG_INFINITY, f64::max);
    out.checks.push(Check::within(
        "max_gap_minus_threshold",
        worst,
        None,
        Some(0.0),
        gate,
    ));
    let worst_alt = rows
        .iter()
        .map(|r| r.gap_alt - r.threshold)
        .fold(f64::NEG_INFINITY, f64::max);
    out.checks.push(Check::within(
        "max_gap_alt_minus_threshold",
        worst_alt,
        None,
        Some(0.0),
        false,
    ));
    out.charfn = Some(CharfnReport {
        diag_variance,
        diag_variance_alt,
        rows,
    });
    Ok(())
}

fn eigen_pass(
    cfg: &ExperimentConfig,
    law: &EntryLaw,
    picks: &[usize],
    bound: f64,
) -> Result<(Vec<f64>, EigenRun)> {
    let n = cfg.n;
    let rn = (n as f64).sqrt();
    let per_rep = per_replicate(cfg.replicates, |r| {
        let a = sample_wigner::<f64>(n, law, cfg.seed, r)?;
        let d = jacobi_eigh(&a)?;
        let u = &d.eigenvectors;
        let pooled: Vec<f64> = picks.iter().map(|&k| rn * u[[k / n, k % n]]).collect();
        Ok((pooled, max_entry_statistic(u)?, d.sweeps))
    })?;
    let mut pooled = Vec::with_capacity(picks.len() * per_rep.len());
    let mut below = 0u64;
    let (mut sum, mut max, mut sweeps) = (0.0, 0.0f64, 0);
    for (v, m, sw) in &per_rep {
        pooled.extend_from_slice(v);
        if *m <= bound {
            below += 1;
        }
        sum += m;
        max = max.max(*m);
        sweeps = sweeps.max(*sw);
    }
    let reps = per_rep.len() as f64;
    let run = EigenRun {
        law: law.to_string(),
        ks: ks_statistic(&pooled)?,
        max_entry_mean: sum / reps,
        max_entry_max: max,
        max_entry_fraction: below as f64 / reps,
        max_sweeps: sweeps,
    };
    Ok((pooled, run))
}

fn run_eigen(
    cfg: &ExperimentConfig,
    tol: &Tolerances,
    gate: bool,
    out: &mut ExperimentResult,
) -> Result<Vec<f64>> {
    let n = cfg.n;
    let mut rng = cfg.seed.replicate_rng(u64::MAX);
    let mut picks = index::sample(&mut rng, n * n, cfg.pool).into_vec();
    picks.sort_unstable();

    let (pooled, run) = eigen_pass(cfg, &cfg.law, &picks, tol.max_entry_bound)?;
    let reference = match cfg.reference_run() {
        Some(law) => Some(eigen_pass(cfg, &law, &picks, tol.max_entry_bound)?.1),
        None => None,
    };
    let ref_ks = reference.as_ref().map_or(run.ks, |r| r.ks);
    out.checks.push(Check::within(
        "reference_ks",
        ref_ks,
        None,
        Some(tol.eigen_ks),
        gate,
    ));
    let ks_diff = reference.as_ref().map(|r| (run.ks - r.ks).abs());
    if let Some(d) = ks_diff {
        out.checks.push(Check::within(
            "ks_diff",
            d,
            None,
            Some(tol.eigen_ks_diff),
            gate,
        ));
        out.checks
            .push(Check::within("ks", run.ks, None, None, false));
    }
    out.checks.push(Check::within(
        "max_entry_fraction",
        run.max_entry_fraction,
        Some(tol.max_entry_fraction),
        None,
        gate,
    ));
    if let Some(r) = &reference {
        out.checks.push(Check::within(
            "reference_max_entry_fraction",
            r.max_entry_fraction,
            Some(tol.max_entry_fraction),
            None,
            gate,
        ));
    }
    let mut s = StatSummary::of(&pooled)?;
    s.ks = Some(run.ks);
    s.target_mean = Some(0.0);
    s.target_variance = Some(1.0);
    s.variance_ratio = Some(s.moments.variance);
    out.scale = "standardized";
    out.summary = Some(s);
    out.eigen = Some(EigenReport {
        pooled_per_replicate: picks.len(),
        run,
        reference,
        ks_diff,
    });
    Ok(pooled)
}
