//! Tridiagonal kernels: pivoted LU solves and Sturm-sequence bisection.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// LU factorization with partial pivoting of a general tridiagonal matrix.
///
/// Row `i` of the matrix is `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1]`.
#[derive(Debug, Clone)]
pub struct TridiagonalLu<T> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Real> TridiagonalLu<T> {
    /// Factors the matrix. A zero pivot is an error unless `perturb` is
    /// given, in which case it is replaced by that value (inverse iteration).
    pub fn factor(sub: &[T], diag: &[T], sup: &[T], perturb: Option<T>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() != n || sup.len() != n {
            return Err(Error::SizeMismatch {
                what: "tridiagonal bands",
                expected: n,
                found: sub.len().min(sup.len()),
            });
        }
        let mut dl: Vec<T> = sub[1..].to_vec();
        let mut d = diag.to_vec();
        let mut du: Vec<T> = sup[..n - 1].to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        let fix = |v: &mut T, i: usize| -> Result<()> {
            if *v == T::zero() {
                match perturb {
                    Some(p) => *v = p,
                    None => return Err(Error::Singular(format!("zero pivot in row {i}"))),
                }
            }
            Ok(())
        };

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                fix(&mut d[i], i)?;
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] = d[i + 1] - fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        fix(&mut d[n - 1], n - 1)?;
        if let Some(i) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("non-finite pivot in row {i}")));
        }
        Ok(Self {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let tmp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tmp - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        b[n - 1] = b[n - 1] / self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(diag, off)` below `x`.
pub fn sturm_count<T: Real>(diag: &[T], off: &[T], x: T, pivmin: T) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < T::zero() {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Gershgorin enclosure `[lo, hi]` of the spectrum.
pub fn gershgorin<T: Real>(diag: &[T], off: &[T]) -> (T, T) {
    let n = diag.len();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let mut r = T::zero();
        if i > 0 {
            r = r + off[i - 1].abs();
        }
        if i + 1 < n {
            r = r + off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `k` smallest eigenvalues, ascending, by bisection on Sturm counts.
pub fn smallest_eigenvalues<T: Real>(diag: &[T], off: &[T], k: usize) -> Vec<T> {
    let (glo, ghi) = gershgorin(diag, off);
    let norm = glo.abs().max(ghi.abs()).max(T::min_positive_value());
    let eps = T::epsilon();
    let pivmin = T::min_positive_value() * norm.max(T::one());
    let abs_tol = (eps + eps) * norm;
    let mut out = Vec::with_capacity(k);
    let mut floor = glo - abs_tol;
    for j in 0..k {
        let mut lo = floor;
        let mut hi = ghi + abs_tol;
        for _ in 0..400 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi || hi - lo <= abs_tol {
                break;
            }
            if sturm_count(diag, off, mid, pivmin) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lam = (lo + hi) * T::lit(0.5);
        out.push(lam);
        floor = lo;
    }
    out
}
