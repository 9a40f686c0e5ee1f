//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_JACOBI_N: usize = 512;
pub const MAX_SWEEPS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition<T> {
    /// Descending.
    pub eigenvalues: Vec<T>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: Array2<T>,
    pub sweeps: usize,
}

impl<T: Real> EigenDecomposition<T> {
    /// `||A U - U Λ||_F / ||A||_F`.
    pub fn relative_residual(&self, a: &Array2<T>) -> T {
        let mut r = a.dot(&self.eigenvectors);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let mut col = r.column_mut(k);
            col.zip_mut_with(&self.eigenvectors.column(k), |x, &u| *x = *x - l * u);
        }
        frob(&r) / frob(a).max(T::min_positive_value())
    }

    /// `||U^T U - I||_F`.
    pub fn orthogonality_error(&self) -> T {
        let g = self.eigenvectors.t().dot(&self.eigenvectors);
        let n = g.nrows();
        frob(&(g - Array2::<T>::eye(n)))
    }
}

fn frob<T: Real>(m: &Array2<T>) -> T {
    m.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
}

/// Sweeps the upper triangle row by row until the off-diagonal Frobenius norm
/// falls below `tol * ||A||_F`, with `tol = max(1e-10, 64 eps)`.
pub fn jacobi_eigh<T: Real>(a: &Array2<T>) -> Result<EigenDecomposition<T>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid("jacobi_eigh needs a nonempty square matrix"));
    }
    if n > MAX_JACOBI_N {
        return Err(Error::ResourceGuard {
            what: "jacobi matrix size",
            required: n as f64,
            cap: MAX_JACOBI_N as f64,
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("jacobi_eigh: non-finite entry"));
    }
    let norm = frob(a);
    let asym = T::lit(1e-12) * norm.max(T::one());
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[[i, j]] - a[[j, i]]).abs() > asym {
                return Err(Error::invalid(format!(
                    "jacobi_eigh: matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0)) * norm;
    let mut m: Vec<T> = a.iter().copied().collect();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let off = |m: &[T]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                s = s + m[i * n + j] * m[i * n + j];
            }
        }
        (s + s).sqrt()
    };
    let mut sweeps = 0;
    while off(&m) > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "jacobi_eigh",
                detail: format!("off-diagonal norm {} after {MAX_SWEEPS} sweeps", off(&m)),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (x, y) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * x - s * y;
                    m[k * n + q] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * x - s * y;
                    m[q * n + k] = s * x + c * y;
                }
                m[p * n + q] = T::zero();
                m[q * n + p] = T::zero();
                for k in 0..n {
                    let (x, y) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * x - s * y;
                    v[k * n + q] = s * x + c * y;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .expect("finite eigenvalues")
    });
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let eigenvectors = Array2::from_shape_fn((n, n), |(r, k)| v[r * n + order[k]]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// `max |u_ij| / sqrt(ln n / n)`.
pub fn max_entry_statistic<T: Real>(u: &Array2<T>) -> Result<T> {
    let n = u.nrows();
    if n < 2 {
        return Err(Error::invalid("max_entry_statistic needs n >= 2"));
    }
    let nf = T::lit(n as f64);
    let max = u.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    Ok(max / (nf.ln() / nf).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgen::{sample_wigner, EntryLaw, RandomSeed};
    use ndarray::array;

    #[test]
    fn small_cases() {
        let d = jacobi_eigh(&Array2::from_diag(&array![3.0, 1.0, 2.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![3.0, 2.0, 1.0]);
        let x = jacobi_eigh(&array![[0.0f64, 1.0], [1.0, 0.0]]).unwrap();
        assert!((x.eigenvalues[0] - 1.0).abs() < 1e-15 && (x.eigenvalues[1] + 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x.eigenvectors[[0, 0]].abs() - h).abs() < 1e-15);
        assert!((x.eigenvectors[[0, 0]] - x.eigenvectors[[1, 0]]).abs() < 1e-15);
        assert!((x.eigenvectors[[0, 1]] + x.eigenvectors[[1, 1]]).abs() < 1e-15);
        assert!(jacobi_eigh(&array![[0.0, 1.0], [2.0, 0.0]]).is_err());
    }

    #[test]
    fn random_symmetric() {
        let a: Array2<f64> =
            sample_wigner(50, &EntryLaw::Gaussian, RandomSeed::new(3, 4), 0).unwrap();
        let e = jacobi_eigh(&a).unwrap();
        assert!(e.relative_residual(&a) <= 1e-8);
        assert!(e.orthogonality_error() <= 1e-8);
        let tr: f64 = a.diag().sum();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((e.eigenvalues.iter().sum::<f64>() - tr).abs() <= 1e-9 * norm);
        // permutation P A P^T keeps the spectrum
        let n = 50;
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let pa = Array2::from_shape_fn((n, n), |(i, j)| a[[perm[i], perm[j]]]);
        let pe = jacobi_eigh(&pa).unwrap();
        for (x, y) in e.eigenvalues.iter().zip(&pe.eigenvalues) {
            assert!((x - y).abs() <= 1e-9);
        }
        let a32 = a.mapv(|x| x as f32);
        let e32 = jacobi_eigh(&a32).unwrap();
        assert!(e32.relative_residual(&a32) <= 1e-5);
    }

    #[test]
    fn delocalisation_statistic() {
        let eye = Array2::<f64>::eye(16);
        let s = max_entry_statistic(&eye).unwrap();
        assert!((s - 1.0 / (16f64.ln() / 16.0).sqrt()).abs() < 1e-12);
        assert!((s - 2.402).abs() < 1e-3);
        let perm = Array2::from_shape_fn((16, 16), |(i, j)| f64::from(u8::from((i + 5) % 16 == j)));
        assert_eq!(max_entry_statistic(&perm).unwrap(), s);
    }
}
