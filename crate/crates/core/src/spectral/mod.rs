//! Marchenko–Pastur analytics, quadrature and the Jacobi eigensolver.

mod jacobi;
pub mod quad;

pub use jacobi::{jacobi_eigh, max_entry_statistic, EigenDecomposition, MAX_JACOBI_N, MAX_SWEEPS};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::exactnum::beta_moment_in;
use crate::scalar::Real;
use quad::{integrate, QuadOptions};

/// Aspect ratio `gamma` and support edges `(1 ∓ sqrt gamma)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpParams<T> {
    pub gamma: T,
    pub a: T,
    pub b: T,
}

impl<T: Real> MpParams<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma.is_finite() && gamma > T::zero()) {
            return Err(Error::invalid(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let r = gamma.sqrt();
        Ok(Self {
            gamma,
            a: (T::one() - r) * (T::one() - r),
            b: (T::one() + r) * (T::one() + r),
        })
    }

    /// Point mass at 0 carried by the law when `gamma > 1`.
    pub fn atom(&self) -> T {
        (T::one() - T::one() / self.gamma).max(T::zero())
    }
}

/// `sqrt((b-x)(x-a)) / (2 pi gamma x)` on `(a, b)`, zero elsewhere.
pub fn mp_density<T: Real>(x: T, params: &MpParams<T>) -> T {
    if x <= params.a || x >= params.b || x <= T::zero() {
        return T::zero();
    }
    ((params.b - x) * (x - params.a)).sqrt() / (T::lit(2.0) * T::PI() * params.gamma * x)
}

/// Integrand in `theta` after `x = a + (b-a) sin^2 theta`: both square-root
/// endpoints become smooth. Returns `(x, weight)` with `f(x) dx = weight dtheta`.
fn substituted<T: Real>(theta: T, params: &MpParams<T>) -> (T, T) {
    let (s, c) = theta.sin_cos();
    let w = params.b - params.a;
    let x = params.a + w * s * s;
    let weight = w * w * s * s * c * c / (T::PI() * params.gamma * x);
    (x, weight)
}

fn quad_opts<T: Real>() -> QuadOptions<T> {
    QuadOptions {
        abs_tol: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)),
        ..QuadOptions::default()
    }
}

/// `∫ x^k f(x) dx`; `k = 0` gives the absolutely continuous mass.
pub fn mp_moment_quadrature<T: Real>(k: u32, params: &MpParams<T>) -> Result<T> {
    if k > 12 {
        return Err(Error::invalid("mp_moment_quadrature needs k <= 12"));
    }
    let r = integrate(
        |th| {
            let (x, w) = substituted(th, params);
            w * x.powi(k as i32)
        },
        T::zero(),
        T::FRAC_PI_2(),
        &quad_opts(),
    )?;
    Ok(r.value)
}

/// Stieltjes transform `∫ dμ(x)/(x - z)` of the full law, including the atom
/// at 0 for `gamma > 1`.
pub fn stieltjes_transform<T: Real>(z: Complex<T>, params: &MpParams<T>) -> Result<Complex<T>> {
    if z.im < T::lit(0.05) {
        return Err(Error::invalid(format!(
            "stieltjes transform is only evaluated for Im z >= 0.05, got {}",
            z.im
        )));
    }
    let part = |imag: bool| {
        integrate(
            move |th| {
                let (x, w) = substituted(th, params);
                let dx = x - z.re;
                let d2 = dx * dx + z.im * z.im;
                if imag {
                    w * z.im / d2
                } else {
                    w * dx / d2
                }
            },
            T::zero(),
            T::FRAC_PI_2(),
            &quad_opts(),
        )
    };
    let m = Complex::new(part(false)?.value, part(true)?.value);
    Ok(m - Complex::new(params.atom(), T::zero()) / z)
}

/// `|gamma z m^2 - (1 - gamma - z) m + 1|` for the quadrature transform `m`.
pub fn stieltjes_residual<T: Real>(z: Complex<T>, params: &MpParams<T>) -> Result<T> {
    let m = stieltjes_transform(z, params)?;
    let g = Complex::new(params.gamma, T::zero());
    let one = Complex::new(T::one(), T::zero());
    Ok((g * z * m * m - (one - g - z) * m + one).norm())
}

/// `|gamma x S^2 + ((gamma+1) x - 1) S + x|` for the truncated series
/// `S(x) = sum_{k=1}^{truncation} beta(k, gamma) x^k`.
pub fn generating_eq_residual<T: Real>(x: T, params: &MpParams<T>, truncation: u32) -> Result<T> {
    if truncation == 0 {
        return Err(Error::invalid("truncation must be positive"));
    }
    if x.abs() > T::lit(0.8) / params.b {
        return Err(Error::invalid(format!(
            "|x| = {} exceeds 0.8/b = {}",
            x.abs(),
            T::lit(0.8) / params.b
        )));
    }
    let mut s = T::zero();
    let mut xp = T::one();
    for k in 1..=truncation {
        xp = xp * x;
        s = s + beta_moment_in(k as u64, &params.gamma) * xp;
    }
    let g = params.gamma;
    Ok((g * x * s * s + ((g + T::one()) * x - T::one()) * s + x).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{beta_moment, parse_rational, to_f64};

    fn mp(g: f64) -> MpParams<f64> {
        MpParams::new(g).unwrap()
    }

    #[test]
    fn params() {
        let p = mp(1.0);
        assert_eq!((p.a, p.b), (0.0, 4.0));
        assert!(MpParams::new(0.0).is_err());
        let q = mp(0.25);
        assert!((q.a - 0.25).abs() < 1e-15 && (q.b - 2.25).abs() < 1e-15);
    }

    #[test]
    fn density_values() {
        let p = mp(1.0);
        assert_eq!(mp_density(p.a - 1.0, &p), 0.0);
        assert_eq!(mp_density(0.0, &p), 0.0);
        // sqrt(2 * 2) / (2 pi * 2)
        assert!((mp_density(2.0, &p) - 0.5 / std::f64::consts::PI).abs() < 1e-15);
        let h = mp(0.5);
        let m = 1.5;
        let expect = ((h.b - m) * (m - h.a)).sqrt() / (2.0 * std::f64::consts::PI * 0.5 * m);
        assert_eq!(mp_density(m, &h), expect);
    }

    #[test]
    fn moments_match_exact() {
        for g in ["1/4", "1/2", "1", "2"] {
            let gq = parse_rational(g).unwrap();
            let p = mp(to_f64(&gq));
            for k in 1..=8u32 {
                let exact = to_f64(&beta_moment(k as u64, &gq).unwrap());
                let quad = mp_moment_quadrature(k, &p).unwrap();
                assert!((quad - exact).abs() <= 1e-6, "gamma={g} k={k}");
            }
            let mass = mp_moment_quadrature(0, &p).unwrap();
            let expect = if p.gamma <= 1.0 { 1.0 } else { 1.0 / p.gamma };
            assert!((mass - expect).abs() <= 1e-8, "gamma={g} mass={mass}");
        }
        assert!((mp_moment_quadrature(3, &mp(0.5)).unwrap() - 2.75).abs() < 1e-6);
        let p32 = MpParams::new(1.0f32).unwrap();
        assert!((mp_moment_quadrature(2, &p32).unwrap() - 2.0).abs() < 1e-4);
    }

    #[test]
    fn stieltjes_identity() {
        for g in [0.5, 1.0, 2.0] {
            let p = mp(g);
            for re in [1.0, 2.0, 3.0] {
                for im in [1.0, 2.0] {
                    let r = stieltjes_residual(Complex::new(re, im), &p).unwrap();
                    assert!(r <= 1e-5, "gamma={g} z={re}+{im}i residual={r}");
                }
            }
        }
        assert!(stieltjes_residual(Complex::new(1.0, 0.01), &mp(1.0)).is_err());
    }

    #[test]
    fn generating_equation() {
        for g in [0.5, 1.0, 2.0] {
            let p = mp(g);
            assert_eq!(generating_eq_residual(0.0, &p, 40).unwrap(), 0.0);
            assert!(generating_eq_residual(0.1 / p.b, &p, 40).unwrap() <= 1e-8);
            // at 0.2/b both truncations already sit at rounding level
            let x = 0.2 / p.b;
            assert!(generating_eq_residual(x, &p, 40).unwrap() <= 1e-15);
            let x = 0.7 / p.b;
            let r10 = generating_eq_residual(x, &p, 10).unwrap();
            let r20 = generating_eq_residual(x, &p, 20).unwrap();
            let r40 = generating_eq_residual(x, &p, 40).unwrap();
            assert!(r40 < r20 && r20 < r10, "{r10} {r20} {r40}");
        }
        assert!(generating_eq_residual(0.1, &mp(1.0), 40).unwrap() <= 1e-8);
        assert!(generating_eq_residual(0.5, &mp(1.0), 40).is_err());
    }
}
