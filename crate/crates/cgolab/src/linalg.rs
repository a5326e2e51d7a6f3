//! Sparse CSR matrices and the iterative solvers used by the parabolic
//! stepper (BiCGSTAB with ILU(0)) and the transport collocation (conjugate
//! gradients on regularized normal equations).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix over a real or complex scalar.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut current_row = 0;
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                let idx = values.len() - 1;
                values[idx] += v;
                continue;
            }
            while current_row < r {
                row_offsets.push(col_indices.len());
                current_row += 1;
            }
            col_indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        while current_row < nrows {
            row_offsets.push(col_indices.len());
            current_row += 1;
        }
        Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    /// y = A x
    pub fn mul(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = T::ZERO;
            for idx in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[idx] * x[self.col_indices[idx]];
            }
            y[r] = acc;
        }
    }

    /// y = A^H x (conjugate transpose).
    pub fn mul_adjoint(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = T::ZERO);
        for r in 0..self.nrows {
            let xr = x[r];
            for idx in self.row_offsets[r]..self.row_offsets[r + 1] {
                y[self.col_indices[idx]] += self.values[idx].conj() * xr;
            }
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::ZERO, |acc, (&x, &y)| acc + x.conj() * y)
}

fn norm2<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
}

/// ILU(0): incomplete LU factorization on the sparsity pattern of A.
pub struct Ilu0<T> {
    factors: CsrMatrix<T>,
    diag_idx: Vec<usize>,
}

impl<T: Scalar> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("ILU(0) needs a square matrix".into()));
        }
        let n = a.nrows();
        let mut factors = a.clone();
        let mut diag_idx = vec![usize::MAX; n];
        for r in 0..n {
            for idx in factors.row_offsets[r]..factors.row_offsets[r + 1] {
                if factors.col_indices[idx] == r {
                    diag_idx[r] = idx;
                }
            }
            if diag_idx[r] == usize::MAX {
                return Err(Error::Numerical(format!("missing diagonal in row {r}")));
            }
        }
        // IKJ variant restricted to the existing pattern.
        for i in 1..n {
            let row_span = factors.row_offsets[i]..factors.row_offsets[i + 1];
            for idx in row_span.clone() {
                let k = factors.col_indices[idx];
                if k >= i {
                    break;
                }
                let pivot = factors.values[diag_idx[k]];
                if pivot.abs2() < 1e-300 {
                    return Err(Error::Numerical(format!("zero pivot at row {k}")));
                }
                let lik = factors.values[idx] / pivot;
                factors.values[idx] = lik;
                // Update remaining entries of row i against row k.
                let k_span = factors.row_offsets[k]..factors.row_offsets[k + 1];
                let mut i_idx = idx + 1;
                let mut k_idx = k_span.start;
                while i_idx < row_span.end && k_idx < k_span.end {
                    let ci = factors.col_indices[i_idx];
                    let ck = factors.col_indices[k_idx];
                    if ck <= k {
                        k_idx += 1;
                    } else if ci < ck {
                        i_idx += 1;
                    } else if ci > ck {
                        k_idx += 1;
                    } else {
                        let update = lik * factors.values[k_idx];
                        factors.values[i_idx] -= update;
                        i_idx += 1;
                        k_idx += 1;
                    }
                }
            }
        }
        Ok(Self { factors, diag_idx })
    }

    /// Solves M z = r with M = L U.
    pub fn apply(&self, r: &[T], z: &mut [T]) {
        let n = self.factors.nrows();
        z.copy_from_slice(r);
        // Forward: L has unit diagonal.
        for i in 0..n {
            let mut acc = z[i];
            for idx in self.factors.row_offsets[i]..self.factors.row_offsets[i + 1] {
                let c = self.factors.col_indices[idx];
                if c >= i {
                    break;
                }
                acc -= self.factors.values[idx] * z[c];
            }
            z[i] = acc;
        }
        // Backward: U.
        for i in (0..n).rev() {
            let mut acc = z[i];
            for idx in (self.factors.row_offsets[i]..self.factors.row_offsets[i + 1]).rev() {
                let c = self.factors.col_indices[idx];
                if c <= i {
                    break;
                }
                acc -= self.factors.values[idx] * z[c];
            }
            z[i] = acc / self.factors.values[self.diag_idx[i]];
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned BiCGSTAB; `x` carries the initial guess and the solution.
pub fn bicgstab<T: Scalar>(
    a: &CsrMatrix<T>,
    precond: Option<&Ilu0<T>>,
    b: &[T],
    x: &mut [T],
    rel_tol: f64,
    max_iter: usize,
    context: &str,
) -> Result<SolveStats> {
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = T::ZERO);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![T::ZERO; n];
    a.mul(x, &mut r);
    for (ri, (&bi, _)) in r.iter_mut().zip(b.iter().zip(0..)) {
        *ri = bi - *ri;
    }
    let r0 = r.clone();
    let mut rho = T::ONE;
    let mut alpha = T::ONE;
    let mut omega = T::ONE;
    let mut p = vec![T::ZERO; n];
    let mut v = vec![T::ZERO; n];
    let mut p_hat = vec![T::ZERO; n];
    let mut s_hat = vec![T::ZERO; n];
    let mut t = vec![T::ZERO; n];

    let mut residual = norm2(&r) / b_norm;
    if residual < rel_tol {
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: residual,
        });
    }

    for iter in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            return Err(Error::SolverStagnation {
                context: format!("{context}: BiCGSTAB breakdown (rho ~ 0)"),
                residual,
                iterations: iter,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        match precond {
            Some(m) => m.apply(&p, &mut p_hat),
            None => p_hat.copy_from_slice(&p),
        }
        a.mul(&p_hat, &mut v);
        alpha = rho_new / dot(&r0, &v);
        let mut s = r.clone();
        for i in 0..n {
            s[i] -= alpha * v[i];
        }
        let s_norm = norm2(&s) / b_norm;
        if s_norm < rel_tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(SolveStats {
                iterations: iter,
                relative_residual: s_norm,
            });
        }
        match precond {
            Some(m) => m.apply(&s, &mut s_hat),
            None => s_hat.copy_from_slice(&s),
        }
        a.mul(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt.abs() < 1e-300 {
            return Err(Error::SolverStagnation {
                context: format!("{context}: BiCGSTAB breakdown (t ~ 0)"),
                residual: s_norm,
                iterations: iter,
            });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        residual = norm2(&r) / b_norm;
        if residual < rel_tol {
            return Ok(SolveStats {
                iterations: iter,
                relative_residual: residual,
            });
        }
        rho = rho_new;
    }
    Err(Error::SolverStagnation {
        context: context.to_string(),
        residual,
        iterations: max_iter,
    })
}

/// Conjugate gradients on a Hermitian positive (semi)definite operator given
/// as a closure; used for the regularized normal equations of the transport
/// collocation.
pub fn cg_hermitian<T: Scalar>(
    apply: impl Fn(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    rel_tol: f64,
    max_iter: usize,
    context: &str,
) -> Result<SolveStats> {
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = T::ZERO);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![T::ZERO; n];
    apply(x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut ap = vec![T::ZERO; n];
    let mut rs_old = dot(&r, &r).re();
    let mut residual = rs_old.sqrt() / b_norm;
    for iter in 1..=max_iter {
        if residual < rel_tol {
            return Ok(SolveStats {
                iterations: iter - 1,
                relative_residual: residual,
            });
        }
        apply(&p, &mut ap);
        let denom = dot(&p, &ap).re();
        if denom.abs() < 1e-300 {
            break;
        }
        let alpha = rs_old / denom;
        for i in 0..n {
            x[i] += p[i].scale(alpha);
            r[i] -= ap[i].scale(alpha);
        }
        let rs_new = dot(&r, &r).re();
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + p[i].scale(beta);
        }
        rs_old = rs_new;
        residual = rs_old.sqrt() / b_norm;
    }
    if residual < rel_tol {
        Ok(SolveStats {
            iterations: max_iter,
            relative_residual: residual,
        })
    } else {
        Err(Error::SolverStagnation {
            context: context.to_string(),
            residual,
            iterations: max_iter,
        })
    }
}

/// Cholesky factorization of a small dense symmetric positive-definite
/// matrix (row-major); returns the lower factor or the failing pivot.
pub fn dense_cholesky(n: usize, a: &[f64]) -> std::result::Result<Vec<f64>, f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(sum);
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Least-squares line fit: returns (slope, intercept, r^2).
pub fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}
