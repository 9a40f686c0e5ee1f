use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use rmtlab::cycles::{
    bipartite_split, enumerate_dominant, exact_wigner_entry_stats, exact_wigner_trace_mean,
    exact_wishart_trace_mean, first_vertex_multiplicity_histogram, mark_edges, to_dyck,
};
use rmtlab::exactnum::{
    beta_moment, catalan, f_count_formula, narayana_count, parse_rational, rational_decimal,
    rational_string, to_f64,
};
use rmtlab::matgen::{law_profile, EntryLaw};
use rmtlab::mcengine::{render_run, resolve_workers, run_config, RunConfig, Timing};
use rmtlab::spectral::{
    generating_eq_residual, mp_moment_quadrature, stieltjes_residual, MpParams,
};
use rmtlab::variance::VarianceReport;
use rmtlab::verify::{determinism_check, run_verify, Profile};
use rmtlab::{Error, Rational, Result};

use crate::{Command, OracleArgs, TableChoice};

const DIGITS: usize = 12;

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Tables(t) => emit(t.out.as_deref(), tables(&t.choice)?),
        Command::Enumerate { l, out } => emit(out.as_deref(), enumerate(l)?),
        Command::Oracle(o) => emit(o.out.as_deref(), oracle(&o)?),
        Command::Spectral { gamma, k, out } => emit(out.as_deref(), spectral(&gamma, k)?),
        Command::Mc {
            config,
            out,
            threads,
        } => mc(&config, &out, threads),
        Command::Verify {
            out,
            quick,
            seed,
            threads,
            skip_determinism,
        } => verify(&out, quick, seed, threads, skip_determinism),
    }
}

type Rows = (Vec<&'static str>, Vec<Vec<String>>);

fn emit(out: Option<&Path>, (header, rows): Rows) -> Result<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(0)
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(vec![msg.into()])
}

fn int_list(s: &str, what: &str, len: usize) -> Result<Vec<u64>> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(usage(format!(
            "{what}: expected {len} comma-separated integers, got {s:?}"
        )));
    }
    parts
        .iter()
        .map(|x| {
            x.parse::<u64>()
                .map_err(|_| usage(format!("{what}: {x:?} is not a nonnegative integer")))
        })
        .collect()
}

fn dec(r: &Rational) -> String {
    rational_decimal(r, DIGITS)
}

fn tables(c: &TableChoice) -> Result<Rows> {
    if let Some(n) = c.catalan {
        if n > 10_000 {
            return Err(Error::ResourceGuard {
                what: "catalan table size",
                required: n as f64,
                cap: 10_000.0,
            });
        }
        let rows = (0..=n)
            .map(|p| vec![p.to_string(), catalan(p).to_string()])
            .collect();
        return Ok((vec!["p", "catalan"], rows));
    }
    if let Some(spec) = &c.beta {
        let (g, k) = spec
            .split_once(',')
            .ok_or_else(|| usage(format!("--beta: expected GAMMA,K, got {spec:?}")))?;
        let gamma = parse_rational(g).map_err(|e| usage(format!("--beta gamma: {e}")))?;
        let k: u64 = k
            .trim()
            .parse()
            .map_err(|_| usage(format!("--beta K: {k:?} is not an integer")))?;
        let mut rows = Vec::new();
        for j in 1..=k {
            let b = beta_moment(j, &gamma)?;
            rows.push(vec![
                j.to_string(),
                rational_string(&gamma),
                rational_string(&b),
                dec(&b),
                catalan(j).to_string(),
            ]);
        }
        return Ok((vec!["k", "gamma", "beta", "beta_decimal", "catalan"], rows));
    }
    if let Some(pmax) = c.variance {
        if pmax < 2 {
            return Err(usage("--variance: P must be at least 2"));
        }
        let m4s = ["1", "9/5", "3"].map(|s| parse_rational(s).expect("literal"));
        let mut rows = Vec::new();
        for p in 2..=pmax {
            let r = VarianceReport::new(p)?;
            let o = |x: &Option<rmtlab::Integer>| {
                x.as_ref().map_or_else(String::new, |v| v.to_string())
            };
            let mut row = vec![
                p.to_string(),
                o(&r.a11),
                o(&r.a12),
                o(&r.a1),
                r.a1_fullglory.to_string(),
                r.a2_direct.to_string(),
                rational_string(&r.a2_closed),
                r.offdiag.to_string(),
            ];
            for m4 in &m4s {
                row.push(rational_string(&r.c_squared_at(m4)));
            }
            rows.push(row);
        }
        let header = vec![
            "p",
            "A11",
            "A12",
            "A1",
            "A1_closed",
            "A2_direct",
            "A2_closed",
            "offdiag_var",
            "c2_m4_1",
            "c2_m4_1.8",
            "c2_m4_3",
        ];
        return Ok((header, rows));
    }
    if let Some(p) = c.narayana {
        if p == 0 {
            return Err(usage("--narayana: P must be positive"));
        }
        let rows = (0..p)
            .map(|i| {
                Ok(vec![
                    p.to_string(),
                    i.to_string(),
                    narayana_count(p, i)?.to_string(),
                ])
            })
            .collect::<Result<_>>()?;
        return Ok((vec!["p", "i", "count"], rows));
    }
    if let Some(l) = c.fcount {
        let hist = first_vertex_multiplicity_histogram(l)?;
        let rows = (1..=l)
            .map(|t| {
                Ok(vec![
                    l.to_string(),
                    t.to_string(),
                    f_count_formula(l, t)?.to_string(),
                    hist[t as usize].to_string(),
                ])
            })
            .collect::<Result<_>>()?;
        return Ok((vec!["l", "t", "f_count", "first_vertex_histogram"], rows));
    }
    Err(usage("tables: choose one table"))
}

fn enumerate(l: u64) -> Result<Rows> {
    let mut rows = Vec::new();
    for c in enumerate_dominant(l)? {
        let dyck = to_dyck(&mark_edges(&c))?;
        let (even, _) = bipartite_split(&c);
        rows.push(vec![c.to_string(), dyck.word(), (even - 1).to_string()]);
    }
    Ok((vec!["cycle", "dyck", "bipartite_index"], rows))
}

fn oracle(o: &OracleArgs) -> Result<Rows> {
    let law = EntryLaw::parse_name(&o.law).map_err(|e| usage(format!("--law: {e}")))?;
    if let Some(spec) = &o.wigner {
        let v = int_list(spec, "--wigner", 2)?;
        let (n, p) = (v[0], v[1]);
        let mp = law_profile(&law, (p as usize).max(2))?;
        if let Some(e) = &o.entry {
            let ij = int_list(e, "--entry", 2)?;
            let s = exact_wigner_entry_stats(n, p, ij[0], ij[1], &mp)?;
            let rows = vec![vec![
                n.to_string(),
                p.to_string(),
                ij[0].to_string(),
                ij[1].to_string(),
                law.to_string(),
                rational_string(&s.mean),
                dec(&s.mean),
                rational_string(&s.variance),
                dec(&s.variance),
            ]];
            let header = vec![
                "n",
                "p",
                "i",
                "j",
                "law",
                "mean",
                "mean_decimal",
                "variance",
                "variance_decimal",
            ];
            return Ok((header, rows));
        }
        let m = exact_wigner_trace_mean(n, p, &mp)?;
        let rows = vec![vec![
            "wigner".into(),
            n.to_string(),
            String::new(),
            p.to_string(),
            law.to_string(),
            rational_string(&m),
            dec(&m),
        ]];
        return Ok((vec!["kind", "n", "N", "p", "law", "exact", "decimal"], rows));
    }
    if let Some(spec) = &o.wishart {
        let v = int_list(spec, "--wishart", 3)?;
        let mp = law_profile(&law, (v[2] as usize).max(2))?;
        let m = exact_wishart_trace_mean(v[0], v[1], v[2], &mp)?;
        let rows = vec![vec![
            "wishart".into(),
            v[0].to_string(),
            v[1].to_string(),
            v[2].to_string(),
            law.to_string(),
            rational_string(&m),
            dec(&m),
        ]];
        return Ok((vec!["kind", "n", "N", "p", "law", "exact", "decimal"], rows));
    }
    Err(usage("oracle: give --wigner n,p or --wishart n,N,p"))
}

fn spectral(gammas: &str, kmax: u32) -> Result<Rows> {
    let mut rows = Vec::new();
    for g in gammas.split(',') {
        let gamma = parse_rational(g.trim()).map_err(|e| usage(format!("--gamma: {e}")))?;
        let params = MpParams::<f64>::new(to_f64(&gamma))?;
        let gs = rational_string(&gamma);
        for k in 1..=kmax {
            let exact = to_f64(&beta_moment(k as u64, &gamma)?);
            let q = mp_moment_quadrature(k, &params)?;
            rows.push(vec![
                gs.clone(),
                "moment".into(),
                k.to_string(),
                q.to_string(),
                exact.to_string(),
                (q - exact).abs().to_string(),
            ]);
        }
        for re in [1.0, 2.0, 3.0] {
            for im in [1.0, 2.0] {
                let r = stieltjes_residual(Complex::new(re, im), &params)?;
                rows.push(vec![
                    gs.clone(),
                    "stieltjes".into(),
                    format!("{re}+{im}i"),
                    String::new(),
                    String::new(),
                    r.to_string(),
                ]);
            }
        }
        for frac in [0.1, 0.2, 0.5, 0.7] {
            for trunc in [20, 40] {
                let r = generating_eq_residual(frac / params.b, &params, trunc)?;
                rows.push(vec![
                    gs.clone(),
                    format!("generating_t{trunc}"),
                    format!("{frac}/b"),
                    String::new(),
                    String::new(),
                    r.to_string(),
                ]);
            }
        }
    }
    Ok((
        vec![
            "gamma",
            "check",
            "argument",
            "value",
            "reference",
            "residual",
        ],
        rows,
    ))
}

fn mc(config: &Path, out: &Path, threads: Option<usize>) -> Result<u8> {
    let bytes = fs::read(config).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| usage("config is not UTF-8"))?;
    let cfg = RunConfig::from_json_str(&text)?;
    let workers = resolve_workers(threads)?;
    let started = Timing::now_unix();
    let results = run_config(&cfg, workers)?;
    let (mut files, _) = render_run(&results, &bytes)?;
    add_timing(&mut files, started, workers)?;
    files.write_to(out)?;
    for e in &results.experiments {
        eprintln!("{:<40} {}", e.name, if e.pass { "pass" } else { "FAIL" });
    }
    Ok(if results.pass { 0 } else { 1 })
}

fn add_timing(
    files: &mut rmtlab::mcengine::OutputBundle,
    started: f64,
    workers: usize,
) -> Result<()> {
    let finished = Timing::now_unix();
    files.add_json(
        "timing.json",
        &Timing {
            started_unix: started,
            finished_unix: finished,
            seconds: finished - started,
            workers,
        },
    )
}

fn verify(
    out: &Path,
    quick: bool,
    seed: Option<u64>,
    threads: Option<usize>,
    skip_det: bool,
) -> Result<u8> {
    let workers = resolve_workers(threads)?;
    let profile = if quick { Profile::Quick } else { Profile::Full };
    let started = Timing::now_unix();
    let mut report = run_verify(profile, workers, seed)?;
    if !skip_det {
        let c17 = determinism_check(&[1, 8], seed)?;
        if let Some(slot) = report.criteria.iter_mut().find(|c| c.id == 17) {
            *slot = c17;
        }
        report.refresh_files()?;
    }
    add_timing(&mut report.files, started, workers)?;
    report.files.write_to(out)?;
    for c in &report.criteria {
        println!(
            "{:>2} {} {}: {}",
            c.id,
            if c.pass { "pass" } else { "FAIL" },
            c.title,
            c.detail
        );
    }
    Ok(if report.pass() { 0 } else { 1 })
}
