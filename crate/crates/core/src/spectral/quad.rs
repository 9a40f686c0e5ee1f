//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            rel_tol: T::epsilon() * T::lit(50.0),
            max_intervals: 4000,
        }
    }
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, lo: T, hi: T) -> (T, T) {
    let half = (hi - lo) * T::lit(0.5);
    let mid = (hi + lo) * T::lit(0.5);
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(mid - dx) + f(mid + dx);
        kron = kron + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over `[lo, hi]`, always bisecting the interval with the
/// largest error estimate, until the summed estimate meets
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    lo: T,
    hi: T,
    opts: &QuadOptions<T>,
) -> Result<Quadrature<T>> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("integration bounds must be finite"));
    }
    let (v, e) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    loop {
        let value = parts.iter().fold(T::zero(), |s, p| s + p.2);
        let error = parts.iter().fold(T::zero(), |s, p| s + p.3);
        if !value.is_finite() {
            return Err(Error::NoConvergence {
                what: "quadrature",
                detail: "integrand produced a non-finite value".into(),
            });
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error,
                intervals: parts.len(),
            });
        }
        if parts.len() >= opts.max_intervals {
            return Err(Error::NoConvergence {
                what: "quadrature",
                detail: format!("error estimate {error} after {} intervals", parts.len()),
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if p.3 > parts[best].3 { i } else { best });
        let (a, b, _, _) = parts.swap_remove(worst);
        let m = (a + b) * T::lit(0.5);
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        parts.push((a, m, v1, e1));
        parts.push((m, b, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_smooth() {
        let o = QuadOptions::<f64>::default();
        let r = integrate(|x: f64| x.powi(6), 0.0, 1.0, &o).unwrap();
        assert!((r.value - 1.0 / 7.0).abs() < 1e-14);
        let r = integrate(f64::sin, 0.0, std::f64::consts::PI, &o).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, &o).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
        let r32 = integrate(|x: f32| x * x, 0.0, 3.0, &QuadOptions::default()).unwrap();
        assert!((r32.value - 9.0).abs() < 1e-4);
    }

    #[test]
    fn reports_failure() {
        let o = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 0.0,
            max_intervals: 8,
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &o).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }
}
