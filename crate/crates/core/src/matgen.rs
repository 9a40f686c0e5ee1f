//! Entry laws with exact moment profiles, seeded samplers and matrix powers.

use std::fmt;

use ndarray::{Array1, Array2};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactnum::{parse_rational, rational_from_f64, rational_string, to_f64};
use crate::scalar::Real;

/// Largest moment index a profile may be built to.
pub const MAX_PROFILE_K: usize = 16;

/// Even moments `E[a^{2k}]`, `k = 0..=k_max`, of a symmetric unit-variance law.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentProfile {
    even_moments: Vec<BigRational>,
}

impl MomentProfile {
    pub fn new(even_moments: Vec<BigRational>) -> Result<Self> {
        if even_moments.len() < 2 {
            return Err(Error::invalid("a moment profile needs E[a^0] and E[a^2]"));
        }
        if !even_moments[0].is_one() || !even_moments[1].is_one() {
            return Err(Error::invalid(
                "moment profile must start 1, 1 (unit variance)",
            ));
        }
        if even_moments.iter().any(|m| m.is_negative()) {
            return Err(Error::invalid("even moments must be nonnegative"));
        }
        Ok(Self { even_moments })
    }

    /// `E[a^{2k}]`.
    pub fn moment(&self, k: usize) -> Result<&BigRational> {
        self.even_moments.get(k).ok_or_else(|| {
            Error::invalid(format!(
                "moment index {k} beyond profile length {}",
                self.even_moments.len()
            ))
        })
    }

    pub fn fourth_moment(&self) -> Result<&BigRational> {
        self.moment(2)
    }

    pub fn k_max(&self) -> usize {
        self.even_moments.len() - 1
    }

    pub fn as_slice(&self) -> &[BigRational] {
        &self.even_moments
    }

    /// Lyapunov: `m_k^2 <= m_{k-1} m_{k+1}` for every interior `k`.
    pub fn is_log_convex(&self) -> bool {
        self.even_moments
            .windows(3)
            .all(|w| &w[1] * &w[1] <= &w[0] * &w[2])
    }
}

/// Symmetric unit-variance entry distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntryLaw {
    Rademacher,
    Gaussian,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformSymmetric,
    /// Mass `1/(2 b^2)` at each of `±b`, the rest at 0; parametrised by the
    /// exact value of `b^2 > 1`, which is also the fourth moment.
    ThreePoint {
        b_squared: BigRational,
    },
}

impl EntryLaw {
    pub fn three_point(b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 1.0) {
            return Err(Error::invalid(format!("three_point needs b > 1, got {b}")));
        }
        let b_squared = rational_from_f64(b * b, 1_000_000)?;
        Self::three_point_squared(b_squared)
    }

    pub fn three_point_squared(b_squared: BigRational) -> Result<Self> {
        if b_squared <= BigRational::one() {
            return Err(Error::invalid("three_point needs b^2 > 1"));
        }
        Ok(EntryLaw::ThreePoint { b_squared })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::UniformSymmetric => "uniform_symmetric",
            EntryLaw::ThreePoint { .. } => "three_point",
        }
    }

    /// Parses a CLI-style name: `rademacher`, `gaussian`, `uniform` or
    /// `uniform_symmetric`, `three_point:B` (b as a decimal) or
    /// `three_point:b2=R` (exact `b^2`).
    pub fn parse_name(name: &str) -> Result<Self> {
        match name.trim() {
            "rademacher" => Ok(EntryLaw::Rademacher),
            "gaussian" | "normal" => Ok(EntryLaw::Gaussian),
            "uniform" | "uniform_symmetric" => Ok(EntryLaw::UniformSymmetric),
            other => {
                let Some(arg) = other.strip_prefix("three_point:") else {
                    return Err(Error::invalid(format!(
                        "unknown law {other:?}; expected rademacher, gaussian, uniform_symmetric or three_point:B"
                    )));
                };
                if let Some(sq) = arg.strip_prefix("b2=") {
                    Self::three_point_squared(parse_rational(sq)?)
                } else {
                    let b: f64 = arg.parse().map_err(|_| {
                        Error::invalid(format!("bad three_point parameter {arg:?}"))
                    })?;
                    Self::three_point(b)
                }
            }
        }
    }

    /// Reads the config form `{"kind": "...", "b": 2.0}` (or `"b_squared": "3"`).
    /// Problems are reported with `field` as prefix.
    pub fn from_json(v: &Value, field: &str) -> std::result::Result<Self, Vec<String>> {
        let obj = match v {
            Value::Object(o) => o,
            Value::String(s) => {
                return Self::parse_name(s).map_err(|e| vec![format!("{field}: {e}")]);
            }
            _ => return Err(vec![format!("{field}: expected an object with \"kind\"")]),
        };
        let Some(kind) = obj.get("kind").and_then(Value::as_str) else {
            return Err(vec![format!("{field}.kind: missing or not a string")]);
        };
        let mut errs = Vec::new();
        for key in obj.keys() {
            if !matches!(key.as_str(), "kind" | "b" | "b_squared") {
                errs.push(format!("{field}.{key}: unknown field"));
            }
        }
        let law = match kind {
            "rademacher" => Ok(EntryLaw::Rademacher),
            "gaussian" => Ok(EntryLaw::Gaussian),
            "uniform_symmetric" | "uniform" => Ok(EntryLaw::UniformSymmetric),
            "three_point" => match (obj.get("b"), obj.get("b_squared")) {
                (Some(b), None) => match b.as_f64() {
                    Some(b) => EntryLaw::three_point(b).map_err(|e| format!("{field}.b: {e}")),
                    None => Err(format!("{field}.b: expected a number")),
                },
                (None, Some(sq)) => {
                    let text = match sq {
                        Value::String(s) => s.clone(),
                        Value::Number(n) => n.to_string(),
                        _ => String::new(),
                    };
                    parse_rational(&text)
                        .and_then(EntryLaw::three_point_squared)
                        .map_err(|e| format!("{field}.b_squared: {e}"))
                }
                (Some(_), Some(_)) => Err(format!("{field}: give only one of b, b_squared")),
                (None, None) => Err(format!("{field}.b: required for three_point")),
            },
            other => Err(format!(
                "{field}.kind: unknown law {other:?}; expected rademacher, gaussian, uniform_symmetric or three_point"
            )),
        };
        match law {
            Ok(l) if errs.is_empty() => Ok(l),
            Ok(_) => Err(errs),
            Err(e) => {
                errs.insert(0, e);
                Err(errs)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            EntryLaw::ThreePoint { b_squared } => {
                json!({"kind": "three_point", "b_squared": rational_string(b_squared)})
            }
            other => json!({"kind": other.kind()}),
        }
    }

    pub fn profile(&self, k_max: usize) -> Result<MomentProfile> {
        law_profile(self, k_max)
    }

    fn three_point_b(&self) -> f64 {
        match self {
            EntryLaw::ThreePoint { b_squared } => to_f64(b_squared).sqrt(),
            _ => 0.0,
        }
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryLaw::ThreePoint { b_squared } => {
                write!(f, "three_point(b^2={})", rational_string(b_squared))
            }
            other => f.write_str(other.kind()),
        }
    }
}

/// Exact even moments of `law` up to `E[a^{2 k_max}]`.
pub fn law_profile(law: &EntryLaw, k_max: usize) -> Result<MomentProfile> {
    if k_max > MAX_PROFILE_K {
        return Err(Error::invalid(format!(
            "k_max {k_max} exceeds {MAX_PROFILE_K}"
        )));
    }
    let k_max = k_max.max(2);
    let mut m = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let v = match law {
            EntryLaw::Rademacher => BigRational::one(),
            EntryLaw::Gaussian => {
                let df = (1..=k as u64).fold(BigInt::one(), |acc, j| acc * BigInt::from(2 * j - 1));
                BigRational::from_integer(df)
            }
            EntryLaw::UniformSymmetric => {
                BigRational::new(num_traits::pow(BigInt::from(3), k), BigInt::from(2 * k + 1))
            }
            EntryLaw::ThreePoint { b_squared } => {
                if k == 0 {
                    BigRational::one()
                } else {
                    num_traits::pow(b_squared.clone(), k - 1)
                }
            }
        };
        m.push(v);
    }
    MomentProfile::new(m)
}

/// Seed pair; with a replicate index it determines every sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSeed {
    pub master: u64,
    pub stream: u64,
}

impl RandomSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Independent generator for one replicate.
    pub fn replicate_rng(&self, replicate: u64) -> ChaCha8Rng {
        let mut state = mix64(self.master ^ mix64(self.stream ^ mix64(replicate)));
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_mut(8) {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}

/// splitmix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform on (0, 1].
fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fills `out` with i.i.d. draws. Gaussian values come in Box–Muller pairs,
/// two uniforms per pair; every other law uses one 64-bit word per value.
pub fn fill_entries<T: Real, R: RngCore>(law: &EntryLaw, rng: &mut R, out: &mut [T]) {
    match law {
        EntryLaw::Rademacher => {
            for x in out.iter_mut() {
                *x = if rng.next_u64() >> 63 == 0 {
                    T::one()
                } else {
                    -T::one()
                };
            }
        }
        EntryLaw::Gaussian => {
            let two_pi = 2.0 * std::f64::consts::PI;
            for pair in out.chunks_mut(2) {
                let r = (-2.0 * open_unit(rng).ln()).sqrt();
                let (s, c) = (two_pi * open_unit(rng)).sin_cos();
                pair[0] = T::lit(r * c);
                if pair.len() == 2 {
                    pair[1] = T::lit(r * s);
                }
            }
        }
        EntryLaw::UniformSymmetric => {
            let half = 3f64.sqrt();
            for x in out.iter_mut() {
                *x = T::lit((2.0 * open_unit(rng) - 1.0) * half);
            }
        }
        EntryLaw::ThreePoint { b_squared } => {
            let b = law.three_point_b();
            let q = 0.5 / to_f64(b_squared);
            for x in out.iter_mut() {
                let u: f64 = rng.gen();
                *x = if u < q {
                    T::lit(b)
                } else if u < 2.0 * q {
                    T::lit(-b)
                } else {
                    T::zero()
                };
            }
        }
    }
}

/// `A = (a_ij)/sqrt(n)` with the upper triangle (diagonal included) drawn
/// row by row and mirrored.
pub fn sample_wigner_with<T: Real, R: RngCore>(n: usize, law: &EntryLaw, rng: &mut R) -> Array2<T> {
    let mut upper = vec![T::zero(); n * (n + 1) / 2];
    fill_entries(law, rng, &mut upper);
    let scale = T::one() / T::lit(n as f64).sqrt();
    let mut a = Array2::zeros((n, n));
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            let v = upper[idx] * scale;
            a[[i, j]] = v;
            a[[j, i]] = v;
            idx += 1;
        }
    }
    a
}

pub fn sample_wigner<T: Real>(
    n: usize,
    law: &EntryLaw,
    seed: RandomSeed,
    replicate: u64,
) -> Result<Array2<T>> {
    if n < 2 {
        return Err(Error::invalid("sample_wigner needs n >= 2"));
    }
    Ok(sample_wigner_with(
        n,
        law,
        &mut seed.replicate_rng(replicate),
    ))
}

/// `A = X X^T / N` for `X` an `n x N` matrix drawn row-major.
pub fn sample_wishart_with<T: Real, R: RngCore>(
    n: usize,
    big_n: usize,
    law: &EntryLaw,
    rng: &mut R,
) -> Array2<T> {
    let mut raw = vec![T::zero(); n * big_n];
    fill_entries(law, rng, &mut raw);
    let x = Array2::from_shape_vec((n, big_n), raw).expect("shape matches buffer");
    let mut a = x.dot(&x.t()) / T::lit(big_n as f64);
    mirror_upper(&mut a);
    a
}

pub fn sample_wishart<T: Real>(
    n: usize,
    big_n: usize,
    law: &EntryLaw,
    seed: RandomSeed,
    replicate: u64,
) -> Result<Array2<T>> {
    if n < 2 || big_n < 2 {
        return Err(Error::invalid("sample_wishart needs n, N >= 2"));
    }
    Ok(sample_wishart_with(
        n,
        big_n,
        law,
        &mut seed.replicate_rng(replicate),
    ))
}

fn mirror_upper<T: Real>(a: &mut Array2<T>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            a[[j, i]] = a[[i, j]];
        }
    }
}

fn symmetrize<T: Real>(m: &mut Array2<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[[i, j]] + m[[j, i]]) * half;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

/// `A^p` by binary exponentiation, symmetrising after every product.
pub fn matrix_power<T: Real>(a: &Array2<T>, p: u32) -> Result<Array2<T>> {
    if p == 0 {
        return Err(Error::invalid("matrix_power needs p >= 1"));
    }
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("matrix_power needs a square matrix"));
    }
    let mut result: Option<Array2<T>> = None;
    let mut base = a.clone();
    let mut e = p;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => {
                    let mut m = r.dot(&base);
                    symmetrize(&mut m);
                    m
                }
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        let mut sq = base.dot(&base);
        symmetrize(&mut sq);
        base = sq;
    }
    Ok(result.expect("p >= 1"))
}

/// `tr(A^p)` for symmetric `A` via `||A^{p/2}||_F^2` or
/// `<A^{(p-1)/2}, A^{(p+1)/2}>`.
pub fn trace_power<T: Real>(a: &Array2<T>, p: u32) -> Result<T> {
    match p {
        0 => Ok(T::lit(a.nrows() as f64)),
        1 => Ok(a.diag().sum()),
        _ if p.is_multiple_of(2) => {
            let h = matrix_power(a, p / 2)?;
            Ok(h.iter().fold(T::zero(), |s, &x| s + x * x))
        }
        _ => {
            let lo = matrix_power(a, p / 2)?;
            let hi = lo.dot(a);
            Ok(lo
                .iter()
                .zip(hi.iter())
                .fold(T::zero(), |s, (&x, &y)| s + x * y))
        }
    }
}

/// `((A^k)_{ij})_{k=1..=p}` by repeated products with `e_j`.
pub fn entry_powers<T: Real>(a: &Array2<T>, p: u32, i: usize, j: usize) -> Vec<T> {
    let n = a.nrows();
    let mut v = Array1::<T>::zeros(n);
    v[j] = T::one();
    let mut out = Vec::with_capacity(p as usize);
    for _ in 0..p {
        v = a.dot(&v);
        out.push(v[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn profiles() {
        assert_eq!(
            *law_profile(&EntryLaw::Gaussian, 4)
                .unwrap()
                .moment(2)
                .unwrap(),
            q("3")
        );
        assert_eq!(
            *law_profile(&EntryLaw::Gaussian, 4)
                .unwrap()
                .moment(4)
                .unwrap(),
            q("105")
        );
        assert_eq!(
            *law_profile(&EntryLaw::UniformSymmetric, 4)
                .unwrap()
                .moment(2)
                .unwrap(),
            q("9/5")
        );
        let tp = EntryLaw::three_point(2.0).unwrap();
        assert_eq!(*law_profile(&tp, 4).unwrap().moment(2).unwrap(), q("4"));
        let root3 = EntryLaw::three_point(3f64.sqrt()).unwrap();
        assert_eq!(root3, EntryLaw::ThreePoint { b_squared: q("3") });
        for law in [
            EntryLaw::Rademacher,
            EntryLaw::Gaussian,
            EntryLaw::UniformSymmetric,
            tp,
        ] {
            let p = law_profile(&law, 16).unwrap();
            assert!(p.is_log_convex(), "{law}");
            assert_eq!(p.k_max(), 16);
        }
        assert!(law_profile(&EntryLaw::Gaussian, 17).is_err());
        assert!(EntryLaw::three_point(1.0).is_err());
    }

    #[test]
    fn law_json_round_trip() {
        let v: Value = serde_json::from_str(r#"{"kind": "three_point", "b": 2.0}"#).unwrap();
        let law = EntryLaw::from_json(&v, "law").unwrap();
        assert_eq!(law, EntryLaw::ThreePoint { b_squared: q("4") });
        assert_eq!(EntryLaw::from_json(&law.to_json(), "law").unwrap(), law);
        let bad: Value = serde_json::from_str(r#"{"kind": "cauchy"}"#).unwrap();
        let errs = EntryLaw::from_json(&bad, "law").unwrap_err();
        assert!(errs[0].starts_with("law.kind"));
        assert_eq!(EntryLaw::parse_name("three_point:b2=3").unwrap(), root3());
        assert!(EntryLaw::parse_name("laplace").is_err());
    }

    fn root3() -> EntryLaw {
        EntryLaw::ThreePoint { b_squared: q("3") }
    }

    #[test]
    fn empirical_moments_match_profiles() {
        let m = 1_000_000usize;
        for (idx, law) in [
            EntryLaw::Rademacher,
            EntryLaw::Gaussian,
            EntryLaw::UniformSymmetric,
            root3(),
        ]
        .iter()
        .enumerate()
        {
            let mut rng = RandomSeed::new(11, idx as u64).replicate_rng(0);
            let mut xs = vec![0f64; m];
            fill_entries(law, &mut rng, &mut xs);
            let prof = law_profile(law, 6).unwrap();
            for k in 1..=3usize {
                let pw: Vec<f64> = xs.iter().map(|x| x.powi(2 * k as i32)).collect();
                let mean = pw.iter().sum::<f64>() / m as f64;
                let var = pw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
                let se = (var / m as f64).sqrt().max(1e-12);
                let target = to_f64(prof.moment(k).unwrap());
                assert!(
                    (mean - target).abs() <= 4.0 * se,
                    "{law} k={k}: {mean} vs {target}"
                );
            }
        }
    }

    #[test]
    fn wigner_is_symmetric_and_seeded() {
        let s = RandomSeed::new(5, 1);
        let a: Array2<f64> = sample_wigner(30, &EntryLaw::Gaussian, s, 3).unwrap();
        assert_eq!(a, a.t());
        let b: Array2<f64> = sample_wigner(30, &EntryLaw::Gaussian, s, 3).unwrap();
        assert_eq!(a, b);
        let c: Array2<f64> = sample_wigner(30, &EntryLaw::Gaussian, s.with_stream(2), 3).unwrap();
        assert_ne!(a, c);
        let single: Array2<f32> = sample_wigner(4, &EntryLaw::Rademacher, s, 0).unwrap();
        assert!(single.iter().all(|x| (x.abs() - 0.5).abs() < 1e-7));
    }

    #[test]
    fn wishart_psd() {
        let a: Array2<f64> =
            sample_wishart(6, 10, &EntryLaw::UniformSymmetric, RandomSeed::new(1, 2), 0).unwrap();
        assert_eq!(a, a.t());
        let eig = crate::spectral::jacobi_eigh(&a).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
    }

    #[test]
    fn powers() {
        let s = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(matrix_power(&s, 2).unwrap(), Array2::<f64>::eye(2));
        assert_eq!(matrix_power(&s, 1).unwrap(), s);
        let d = Array2::from_diag(&array![0.5, -1.5, 2.0]);
        let d5 = matrix_power(&d, 5).unwrap();
        for (k, v) in [0.5f64, -1.5, 2.0].iter().enumerate() {
            assert!((d5[[k, k]] - v.powi(5)).abs() < 1e-12);
        }
        let a: Array2<f64> =
            sample_wigner(50, &EntryLaw::Gaussian, RandomSeed::new(9, 9), 0).unwrap();
        let lhs = matrix_power(&a, 7).unwrap();
        let rhs = matrix_power(&a, 3)
            .unwrap()
            .dot(&matrix_power(&a, 4).unwrap());
        let err = (&lhs - &rhs).mapv(|x| x * x).sum().sqrt() / lhs.mapv(|x| x * x).sum().sqrt();
        assert!(err < 1e-9);
        for p in 1..=6 {
            let direct = matrix_power(&a, p).unwrap().diag().sum();
            assert!((trace_power(&a, p).unwrap() - direct).abs() < 1e-9 * direct.abs().max(1.0));
            let e = entry_powers(&a, p, 0, 1);
            assert!((e[p as usize - 1] - matrix_power(&a, p).unwrap()[[0, 1]]).abs() < 1e-10);
        }
    }
}
