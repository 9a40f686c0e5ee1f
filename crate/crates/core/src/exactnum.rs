//! Exact evaluation of the closed-form counts: Catalan and Narayana numbers,
//! binomials (including the `binom(n, -1) = 1` convention), composition
//! counts, Marchenko–Pastur moments and the first-vertex counts `f(l, t)`.

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::ExactField;

/// `C_p = binom(2p, p) / (p + 1)`.
pub fn catalan(p: u64) -> BigInt {
    binomial(2 * p, p) / BigInt::from(p + 1)
}

/// Catalan numbers `C_0..=C_max` in one pass via `C_{k+1} = C_k * 2(2k+1)/(k+2)`.
pub fn catalan_table(max: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(max + 1);
    let mut c = BigInt::one();
    for k in 0..=max as u64 {
        out.push(c.clone());
        c = c * BigInt::from(2 * (2 * k + 1)) / BigInt::from(k + 2);
    }
    out
}

/// Standard binomial coefficient for nonnegative arguments.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Binomial with the extended convention used by the variance sums:
/// `binom(n, -1) = 1` for every integer `n`, `0` for `k < -1`, `k > n >= 0`
/// or `n < 0 <= k`.
pub fn binomial_ext(n: i64, k: i64) -> BigInt {
    if k == -1 {
        return BigInt::one();
    }
    if k < -1 || n < 0 || k > n {
        return BigInt::zero();
    }
    binomial(n as u64, k as u64)
}

/// Number of nonnegative integer `m`-tuples summing to `n`: `binom(m+n-1, m-1)`.
pub fn compositions_count(m: u64, n: u64) -> Result<BigInt> {
    if m == 0 {
        return Err(Error::invalid("compositions_count needs m >= 1"));
    }
    Ok(binomial(m + n - 1, m - 1))
}

/// `sum_{r=0}^{k-1} binom(k,r) binom(k-1,r) gamma^r / (r+1)` in any field.
///
/// The same code path gives the exact rational moment and the `f64` value
/// fed to the quadrature comparisons.
pub fn beta_moment_in<T: ExactField>(k: u64, gamma: &T) -> T {
    let mut sum = T::zero();
    let mut pow = T::one();
    for r in 0..k {
        let coeff = narayana_raw(k, r);
        let c = T::from_u128(coeff.to_u128().expect("narayana fits u128"))
            .expect("coefficient representable");
        sum = sum + c * pow.clone();
        pow = pow * gamma.clone();
    }
    sum
}

/// Exact Marchenko–Pastur moment `beta(k, gamma)` for rational `gamma > 0`.
pub fn beta_moment(k: u64, gamma: &BigRational) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::invalid("beta_moment needs k >= 1"));
    }
    if !gamma.is_positive() {
        return Err(Error::invalid(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let mut sum = BigRational::zero();
    let mut pow = BigRational::one();
    for r in 0..k {
        sum += BigRational::from_integer(narayana_raw(k, r)) * &pow;
        pow *= gamma;
    }
    Ok(sum)
}

/// Residual of the moment recurrence
/// `beta(k) = (1+g) beta(k-1) + g * sum_{a=1}^{k-2} beta(a) beta(k-a-1)`.
pub fn beta_recurrence_check(k: u64, gamma: &BigRational) -> Result<BigRational> {
    if k < 2 {
        return Err(Error::invalid("beta_recurrence_check needs k >= 2"));
    }
    let betas = (1..=k)
        .map(|j| beta_moment(j, gamma))
        .collect::<Result<Vec<_>>>()?;
    let beta = |j: u64| &betas[(j - 1) as usize];
    let one = BigRational::one();
    let mut conv = BigRational::zero();
    for a in 1..=k.saturating_sub(2) {
        conv += beta(a) * beta(k - a - 1);
    }
    Ok(beta(k) - (&one + gamma) * beta(k - 1) - gamma * conv)
}

fn narayana_raw(p: u64, i: u64) -> BigInt {
    binomial(p, i) * binomial(p - 1, i) / BigInt::from(i + 1)
}

/// `|C_i(p)| = binom(p,i) binom(p-1,i) / (i+1)`, the number of dominant
/// cycles of length `2p` with `i+1` distinct even-position vertices.
pub fn narayana_count(p: u64, i: u64) -> Result<BigInt> {
    if p == 0 || i >= p {
        return Err(Error::invalid(format!(
            "narayana_count needs 0 <= i <= p-1, got p={p}, i={i}"
        )));
    }
    Ok(narayana_raw(p, i))
}

/// `f(l, t) = binom(2l-t, l-1) - binom(2l-t, l)` for `1 <= t <= l`.
pub fn f_count_formula(l: u64, t: u64) -> Result<BigInt> {
    if l == 0 || t == 0 || t > l {
        return Err(Error::invalid(format!(
            "f_count_formula needs 1 <= t <= l, got l={l}, t={t}"
        )));
    }
    Ok(f_count_unchecked(l, t))
}

/// The same binomial difference without the range check; defined for any
/// `t <= 2l`.
pub fn f_count_unchecked(l: u64, t: u64) -> BigInt {
    let top = 2 * l - t;
    binomial(top, l - 1) - binomial(top, l)
}

/// `sum_{k=1}^{l} sum_{l_1+..+l_k = l-k} C_{l_1}...C_{l_k} - C_l`, evaluated by
/// enumerating every composition.
pub fn catalan_composition_identity(l: u64) -> Result<BigInt> {
    if l == 0 {
        return Err(Error::invalid("catalan_composition_identity needs l >= 1"));
    }
    let cat = catalan_table(l as usize);
    let mut total = BigInt::zero();
    for k in 1..=l {
        for_each_composition(l - k, k, &mut |parts| {
            total += parts
                .iter()
                .fold(BigInt::one(), |acc, &x| acc * &cat[x as usize]);
        });
    }
    Ok(total - &cat[l as usize])
}

/// Calls `f` on every nonnegative `parts`-tuple summing to `total`, in
/// lexicographic order.
pub fn for_each_composition(total: u64, parts: u64, f: &mut dyn FnMut(&[u64])) {
    fn rec(rem: u64, left: u64, buf: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
        if left == 1 {
            buf.push(rem);
            f(buf);
            buf.pop();
            return;
        }
        for x in 0..=rem {
            buf.push(x);
            rec(rem - x, left - 1, buf, f);
            buf.pop();
        }
    }
    if parts == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut buf = Vec::with_capacity(parts as usize);
    rec(total, parts, &mut buf, f);
}

/// Parses `"3"`, `"-2/7"` or a finite decimal such as `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("not an exact rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = int_part.abs() * &scale + frac_part;
        let num = if neg { -mag } else { mag };
        return Ok(BigRational::new(num, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// `"num/den"`, or just `"num"` for integers.
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal expansion rounded half away from zero to `digits` places.
pub fn rational_decimal(r: &BigRational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = r.numer().abs() * &scale;
    let (q, rem) = scaled.div_rem(r.denom());
    let q = if rem * 2 >= *r.denom() { q + 1 } else { q };
    let (int, frac) = q.div_rem(&scale);
    let sign = if r.is_negative() && !(int.is_zero() && frac.is_zero()) {
        "-"
    } else {
        ""
    };
    if digits == 0 {
        return format!("{sign}{int}");
    }
    format!("{sign}{int}.{:0>width$}", frac.to_string(), width = digits)
}

/// Lossy conversion used only at the float boundary.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rational with denominator at most `max_den` closest to `x` (continued
/// fractions); used to recover exact parameters such as `b^2 = 3` from `b = sqrt(3)`.
pub fn rational_from_f64(x: f64, max_den: u64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("non-finite value {x}")));
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den as u128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let f = v - a as f64;
        if f < 1e-12 {
            break;
        }
        v = 1.0 / f;
    }
    if q1 == 0 {
        return Err(Error::invalid(format!("cannot rationalize {x}")));
    }
    let num = BigInt::from(p1);
    let r = BigRational::new(if neg { -num } else { num }, BigInt::from(q1));
    Ok(r)
}
