//! Variance normalisers for diagonal and off-diagonal entries of `A^p`.
//!
//! `a11`/`a12` enumerate the defining sums directly (indicator form over
//! loop-length compositions); `a1_fullglory` is the binomial closed form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{binomial_ext, catalan, catalan_table, for_each_composition};

/// Largest `p` for the direct enumerations.
pub const MAX_DIRECT_P: u64 = 14;
/// Largest `p` for the closed forms.
pub const MAX_CLOSED_P: u64 = 30;

fn check_direct(p: u64) -> Result<()> {
    if p < 2 {
        return Err(Error::invalid("variance sums need p >= 2"));
    }
    if p > MAX_DIRECT_P {
        return Err(Error::ResourceGuard {
            what: "direct variance enumeration p",
            required: p as f64,
            cap: MAX_DIRECT_P as f64,
        });
    }
    Ok(())
}

fn check_closed(p: u64) -> Result<()> {
    if !(2..=MAX_CLOSED_P).contains(&p) {
        return Err(Error::invalid(format!(
            "closed forms need 2 <= p <= {MAX_CLOSED_P}"
        )));
    }
    Ok(())
}

/// Direct sum over `(k_1, k_2, l)` of `k_1 (k_2 + 1)`; zero for odd `p`.
pub fn a2_direct(p: u64) -> Result<BigInt> {
    if p < 2 {
        return Err(Error::invalid("a2_direct needs p >= 2"));
    }
    if p % 2 == 1 {
        return Ok(BigInt::zero());
    }
    let half = p / 2;
    let mut total = BigInt::zero();
    for k1 in 1..=half {
        // l_1..l_{k1} sum to half - k1
        let mut n1 = 0u64;
        for_each_composition(half - k1, k1, &mut |_| n1 += 1);
        for k2 in 0..half {
            let mut n2 = 0u64;
            for_each_composition(half - 1 - k2, k2, &mut |_| n2 += 1);
            total += BigInt::from(n1) * BigInt::from(n2) * BigInt::from(k1 * (k2 + 1));
        }
    }
    Ok(total)
}

/// `2^{p-7} (p+2)(p+4)` for even `p`, else 0.
pub fn a2_closed(p: u64) -> Result<BigRational> {
    if p < 2 {
        return Err(Error::invalid("a2_closed needs p >= 2"));
    }
    if p % 2 == 1 {
        return Ok(BigRational::zero());
    }
    let body = BigInt::from((p + 2) * (p + 4));
    Ok(pow2(p as i64 - 7) * BigRational::from_integer(body))
}

fn pow2(e: i64) -> BigRational {
    let m = num_traits::pow(BigInt::from(2), e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(m)
    } else {
        BigRational::new(BigInt::one(), m)
    }
}

/// Counts of the `(k, q, t, l)` tuples of the first family, split by
/// whether `(q, t) = (1, 0)`.
struct FamilyCounts {
    q1_t0: u64,
    rest: u64,
}

fn a11_counts(p: u64) -> FamilyCounts {
    let p = p as i64;
    let mut out = FamilyCounts { q1_t0: 0, rest: 0 };
    for k in 1..p {
        for_each_composition((p - 1 - k) as u64, k as u64, &mut |ls| {
            let ls: Vec<i64> = ls.iter().map(|&x| x as i64).collect();
            for q in 1..=k {
                let a: i64 = ls[..(q - 1) as usize].iter().sum();
                if 2 * a > p + 1 - 2 * q {
                    continue;
                }
                for t in 0..=(k - q) {
                    let lo = (q - 1) as usize;
                    let b: i64 = ls[lo..lo + t as usize].iter().sum();
                    if 2 * b <= p - 1 - 2 * t {
                        if q == 1 && t == 0 {
                            out.q1_t0 += 1;
                        } else {
                            out.rest += 1;
                        }
                    }
                }
            }
        });
    }
    out
}

/// First family, by direct enumeration.
///
/// A loop-length composition stands for every cycle with those loop lengths
/// only in the `(q, t) = (1, 0)` family, where each of the `C_{p-1}` dominant
/// cycles contributes once; all other tuples count once per composition.
pub fn a11(p: u64) -> Result<BigInt> {
    check_direct(p)?;
    let c = a11_counts(p);
    Ok(catalan(p - 1) + BigInt::from(c.rest))
}

/// First family with the `(1, 0)` tuples counted once per composition.
pub fn a11_unweighted(p: u64) -> Result<BigInt> {
    check_direct(p)?;
    let c = a11_counts(p);
    Ok(BigInt::from(c.q1_t0 + c.rest))
}

/// Second family, by direct enumeration.
pub fn a12(p: u64) -> Result<BigInt> {
    check_direct(p)?;
    let p = p as i64;
    let mut total = 0u64;
    for k in 2..p {
        for_each_composition((p - 1 - k) as u64, k as u64, &mut |ls| {
            let ls: Vec<i64> = ls.iter().map(|&x| x as i64).collect();
            for q in 1..=k {
                let a: i64 = ls[..(q - 1) as usize].iter().sum();
                if 2 * a > p - 2 * q {
                    continue;
                }
                for t in 0..=(k - q) {
                    let lo = (q - 1) as usize;
                    let b: i64 = ls[lo..=lo + t as usize].iter().sum();
                    let chi = i64::from(t > 0);
                    if 2 * b <= p - t - chi - 2 {
                        total += 1;
                    }
                }
            }
        });
    }
    Ok(BigInt::from(total))
}

/// The seven summands of the closed form, in order.
pub fn a1_fullglory_terms(p: u64) -> Result<[BigInt; 7]> {
    check_closed(p)?;
    let pi = p as i64;
    let b = binomial_ext;
    let mut t = [
        catalan(p - 1),
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
    ];
    // tuples of the first set: doubled bounds keep everything integral
    for k in 1..pi {
        for q in 1..=k {
            if 2 * q > pi + 1 {
                break;
            }
            for tt in 0..=(k - q) {
                if 2 * tt > pi - 1 {
                    break;
                }
                for a in 0..=(pi - 1 - k) {
                    if 2 * a > pi + 1 - 2 * q {
                        break;
                    }
                    for bb in 0..=(pi - 1 - k - a) {
                        if 2 * bb > pi - 1 - 2 * tt {
                            break;
                        }
                        if q == 1 && tt >= 1 && a == 0 {
                            t[1] += b(bb + tt - 1, tt - 1) * b(pi - bb - tt - 2, k - tt - 1);
                        }
                        if tt == 0 && q >= 2 && bb == 0 {
                            t[2] += b(a + q - 2, q - 2) * b(pi - a - q - 1, k - q);
                        }
                        if q >= 2 && tt >= 1 {
                            t[3] += b(a + q - 2, q - 2)
                                * b(bb + tt - 1, tt - 1)
                                * b(pi - a - bb - q - tt - 1, k - q - tt);
                        }
                    }
                }
            }
        }
    }
    for k in 2..pi {
        for l1 in 0..=(pi - 1 - k) {
            if 2 * l1 > pi - 2 {
                break;
            }
            t[4] += b(pi - l1 - 3, k - 2);
        }
        for tt in 1..=(k - 2) {
            for a in 0..=(pi - 1 - k) {
                if 2 * a > pi - tt - 1 {
                    break;
                }
                t[5] += b(a + tt, tt) * b(pi - a - tt - 3, k - tt - 2);
            }
        }
    }
    // tuples of the second set
    for k in 1..pi {
        for q in 2..=k {
            if 2 * q > pi {
                break;
            }
            for tt in 0..=(k - q) {
                if 2 * tt > pi {
                    break;
                }
                for a in 0..=(pi - 1 - k) {
                    if 2 * a > pi - 2 * q {
                        break;
                    }
                    for bb in 0..=(pi - 1 - k - a) {
                        if 2 * bb > pi - tt - 2 {
                            break;
                        }
                        t[6] += b(a + q - 2, q - 2)
                            * b(bb + tt, tt)
                            * b(pi - a - bb - q - tt - 2, k - q - tt - 1);
                    }
                }
            }
        }
    }
    Ok(t)
}

/// Closed-form first-order variance sum.
pub fn a1_fullglory(p: u64) -> Result<BigInt> {
    Ok(a1_fullglory_terms(p)?.iter().sum())
}

/// `2^{p-6} (p+2)(p+4)` for even `p`, else 0: the coefficient of
/// `E[a^4] - 2` in the diagonal variance.
pub fn c_squared_slope(p: u64) -> BigRational {
    if p % 2 == 1 {
        return BigRational::zero();
    }
    pow2(p as i64 - 6) * BigRational::from_integer(BigInt::from((p + 2) * (p + 4)))
}

/// `2 A_1(p) + 2^{p-6}(p+2)(p+4) chi(p even) (delta - 1)` with
/// `delta = E[a^4] - 1`.
pub fn c_squared(p: u64, fourth_moment: &BigRational) -> Result<BigRational> {
    if *fourth_moment < BigRational::one() {
        return Err(Error::invalid(format!(
            "fourth moment must be at least 1, got {fourth_moment}"
        )));
    }
    let base = BigRational::from_integer(a1_fullglory(p)? * 2);
    let delta = fourth_moment - BigRational::one();
    Ok(base + c_squared_slope(p) * (delta - BigRational::one()))
}

/// `C_p - C_{p/2}^2 chi(p even)`.
pub fn offdiag_variance(p: u64) -> Result<BigInt> {
    if p == 0 {
        return Err(Error::invalid("offdiag_variance needs p >= 1"));
    }
    let cat = catalan_table(p as usize);
    let mut v = cat[p as usize].clone();
    if p.is_multiple_of(2) {
        let h = &cat[p as usize / 2];
        v -= h * h;
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceReport {
    pub p: u64,
    /// Direct sums; absent beyond [`MAX_DIRECT_P`].
    pub a11: Option<BigInt>,
    pub a12: Option<BigInt>,
    pub a1: Option<BigInt>,
    pub a1_fullglory: BigInt,
    pub a2_direct: BigInt,
    pub a2_closed: BigRational,
    pub offdiag: BigInt,
    /// `c^2(p, m4) = c2_base + c2_slope * (m4 - 2)`.
    pub c2_base: BigInt,
    pub c2_slope: BigRational,
}

impl VarianceReport {
    pub fn new(p: u64) -> Result<Self> {
        check_closed(p)?;
        let (a11v, a12v) = if p <= MAX_DIRECT_P {
            (Some(a11(p)?), Some(a12(p)?))
        } else {
            (None, None)
        };
        let a1 = match (&a11v, &a12v) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        let fg = a1_fullglory(p)?;
        Ok(Self {
            p,
            a11: a11v,
            a12: a12v,
            a1,
            c2_base: &fg * 2,
            a1_fullglory: fg,
            a2_direct: a2_direct(p)?,
            a2_closed: a2_closed(p)?,
            offdiag: offdiag_variance(p)?,
            c2_slope: c_squared_slope(p),
        })
    }

    pub fn c_squared_at(&self, fourth_moment: &BigRational) -> BigRational {
        BigRational::from_integer(self.c2_base.clone())
            + &self.c2_slope * (fourth_moment - BigRational::from_integer(BigInt::from(2)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CBoundsRow {
    pub p: u64,
    pub delta: BigRational,
    pub c_squared: BigRational,
    pub c: f64,
    /// `c - sqrt(2 C_{p-1})`.
    pub residual: f64,
    /// `residual / (2^{p/2} p sqrt(delta))`; absent at `delta = 0`.
    pub ratio_sqrt_delta: Option<f64>,
    /// `residual / (2^{p/2} p (1 + sqrt(delta)))`.
    pub ratio_one_plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CBoundsReport {
    pub rows: Vec<CBoundsRow>,
    /// Every tabulated `c^2` is positive.
    pub positive: bool,
    /// `c^2` is nondecreasing in `delta` for every even `p`.
    pub monotone_even: bool,
    /// Smallest and largest finite `ratio_sqrt_delta`.
    pub envelope: Option<(f64, f64)>,
}

/// Tabulates `c(p, 1 + delta)` against `sqrt(2 C_{p-1})` for `2 <= p <= p_max`.
pub fn c_bounds_report(p_max: u64, delta_grid: &[BigRational]) -> Result<CBoundsReport> {
    check_closed(p_max)?;
    if delta_grid.iter().any(|d| d.is_negative()) {
        return Err(Error::invalid("delta must be nonnegative"));
    }
    let mut grid = delta_grid.to_vec();
    grid.sort();
    let mut rows = Vec::new();
    let mut positive = true;
    let mut monotone_even = true;
    let mut envelope: Option<(f64, f64)> = None;
    for p in 2..=p_max {
        let lead = (2.0 * catalan(p - 1).to_f64().unwrap_or(f64::NAN)).sqrt();
        let scale = 2f64.powf(p as f64 / 2.0) * p as f64;
        let mut prev: Option<BigRational> = None;
        for delta in &grid {
            let c2 = c_squared(p, &(delta + BigRational::one()))?;
            positive &= c2.is_positive();
            if p % 2 == 0 {
                if let Some(prev) = &prev {
                    monotone_even &= c2 >= *prev;
                }
            }
            prev = Some(c2.clone());
            let c = c2.to_f64().unwrap_or(f64::NAN).max(0.0).sqrt();
            let residual = c - lead;
            let sd = delta.to_f64().unwrap_or(f64::NAN).sqrt();
            let ratio_sqrt_delta = (sd > 0.0).then(|| residual / (scale * sd));
            if let Some(r) = ratio_sqrt_delta.filter(|r| r.is_finite()) {
                envelope = Some(match envelope {
                    None => (r, r),
                    Some((lo, hi)) => (lo.min(r), hi.max(r)),
                });
            }
            rows.push(CBoundsRow {
                p,
                delta: delta.clone(),
                c_squared: c2,
                c,
                residual,
                ratio_sqrt_delta,
                ratio_one_plus: residual / (scale * (1.0 + sd)),
            });
        }
    }
    Ok(CBoundsReport {
        rows,
        positive,
        monotone_even,
        envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::parse_rational;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn z(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn a2_values() {
        assert_eq!(a2_direct(3).unwrap(), z(0));
        assert_eq!(a2_direct(2).unwrap(), z(1));
        assert_eq!(a2_direct(4).unwrap(), z(6));
        assert_eq!(a2_closed(4).unwrap(), q("6"));
        assert_eq!(a2_closed(5).unwrap(), q("0"));
        assert_eq!(a2_closed(2).unwrap(), q("3/4"));
        for p in (4..=20).step_by(2) {
            assert_eq!(
                BigRational::from_integer(a2_direct(p).unwrap()),
                a2_closed(p).unwrap(),
                "p={p}"
            );
        }
    }

    // frozen from an independent enumeration
    const DIRECT: [(u64, i64, i64); 11] = [
        (2, 1, 0),
        (3, 4, 1),
        (4, 10, 7),
        (5, 36, 14),
        (6, 90, 54),
        (7, 292, 118),
        (8, 765, 363),
        (9, 2422, 804),
        (10, 6910, 2213),
        (11, 22428, 4874),
        (12, 70306, 12579),
    ];

    #[test]
    fn direct_sums() {
        for (p, x, y) in DIRECT {
            assert_eq!(a11(p).unwrap(), z(x), "a11({p})");
            assert_eq!(a12(p).unwrap(), z(y), "a12({p})");
        }
        assert_eq!(a11(13).unwrap() + a12(13).unwrap(), z(265660));
        assert_eq!(a11(14).unwrap() + a12(14).unwrap(), z(872257));
        assert!(matches!(a11(15), Err(Error::ResourceGuard { .. })));
        // every (q, t) = (1, 0) composition has all indicators satisfied
        for p in 2..=10u64 {
            let diff = a11(p).unwrap() - a11_unweighted(p).unwrap();
            assert_eq!(diff, catalan(p - 1) - z(1 << (p - 2)));
        }
    }

    #[test]
    fn closed_form_values() {
        let expect = [
            1, 5, 18, 57, 166, 466, 1269, 3526, 9838, 28746, 86231, 272152, 887142,
        ];
        for (i, v) in expect.iter().enumerate() {
            assert_eq!(a1_fullglory(i as u64 + 2).unwrap(), z(*v), "p={}", i + 2);
        }
        let parts = a1_fullglory_terms(4).unwrap();
        assert_eq!(parts.to_vec(), [5, 2, 2, 1, 3, 1, 4].map(z).to_vec());
        for p in 2..=30 {
            assert_eq!(a1_fullglory_terms(p).unwrap()[0], catalan(p - 1));
        }
        assert_eq!(a1_fullglory(2).unwrap(), a11(2).unwrap() + a12(2).unwrap());
        assert_eq!(a1_fullglory(3).unwrap(), a11(3).unwrap() + a12(3).unwrap());
        assert!(a1_fullglory(31).is_err());
    }

    #[test]
    fn c_squared_values() {
        for p in 2..=9 {
            let two_a1 = BigRational::from_integer(a1_fullglory(p).unwrap() * 2);
            assert_eq!(c_squared(p, &q("2")).unwrap(), two_a1);
        }
        let base = BigRational::from_integer(a1_fullglory(4).unwrap() * 2);
        assert_eq!(c_squared(4, &q("3")).unwrap() - base, q("12"));
        assert_eq!(
            c_squared(5, &q("1")).unwrap(),
            c_squared(5, &q("7")).unwrap()
        );
        assert!(c_squared(4, &q("1/2")).is_err());
        let rep = VarianceReport::new(4).unwrap();
        assert_eq!(
            rep.c_squared_at(&q("9/5")),
            c_squared(4, &q("9/5")).unwrap()
        );
        assert_eq!(rep.a1, Some(z(17)));
    }

    #[test]
    fn offdiag_values() {
        assert_eq!(offdiag_variance(2).unwrap(), z(1));
        assert_eq!(offdiag_variance(3).unwrap(), z(5));
        assert_eq!(offdiag_variance(4).unwrap(), z(10));
    }

    #[test]
    fn bounds_table() {
        let grid: Vec<_> = ["0", "1/2", "1", "2", "4"].iter().map(|s| q(s)).collect();
        let rep = c_bounds_report(12, &grid).unwrap();
        assert!(rep.positive && rep.monotone_even);
        let row = rep
            .rows
            .iter()
            .find(|r| r.p == 6 && r.delta.is_zero())
            .unwrap();
        let expect = row.c - (2.0f64 * 42.0).sqrt();
        assert_eq!(row.residual, expect);
        assert!(row.ratio_sqrt_delta.is_none());
        for r in rep.rows.iter().filter(|r| r.delta.is_positive()) {
            assert!(r.ratio_sqrt_delta.unwrap().is_finite());
        }
    }
}
