//! One-sided Jacobi SVD.
//!
//! nalgebra's bidiagonal SVD returns wrong factors for many exactly
//! rank-deficient inputs (static video windows are the common case here), so
//! the decompositions used by the fitting code go through this routine. It
//! is accurate to working precision on small singular values and cheap at the
//! sketch sizes involved.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{DmdError, Result};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(sigma) V^H`, singular values descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd<T: ComplexField<RealField = f64>> {
    /// `m x k`, orthonormal columns.
    pub u: DMatrix<T>,
    pub singular_values: Vec<f64>,
    /// `n x k`, orthonormal columns.
    pub v: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64> + Copy> Svd<T> {
    pub fn new(a: &DMatrix<T>) -> Result<Self> {
        if a.iter().any(|z| !z.is_finite()) {
            return Err(DmdError::Numerical {
                message: "SVD input contains non-finite values".into(),
                operator: None,
            });
        }
        if a.nrows() >= a.ncols() {
            jacobi_tall(a)
        } else {
            let t = jacobi_tall(&a.adjoint())?;
            Ok(Self {
                u: t.v,
                singular_values: t.singular_values,
                v: t.u,
            })
        }
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn recompose(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

fn dotc<T: ComplexField<RealField = f64> + Copy>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&a, &b)| acc + a.conjugate() * b)
}

fn norm_sq<T: ComplexField<RealField = f64> + Copy>(x: &[T]) -> f64 {
    x.iter().map(|z| z.modulus_squared()).sum()
}

/// Rotates columns `p < q` of a column-major buffer with `rows` rows.
fn rotate<T: ComplexField<RealField = f64> + Copy>(
    data: &mut [T],
    rows: usize,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    phase: T,
) {
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *xp;
        let b = *xq * phase;
        *xp = a.scale(c) - b.scale(s);
        *xq = a.scale(s) + b.scale(c);
    }
}

fn jacobi_tall<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> Result<Svd<T>> {
    let (m, n) = a.shape();
    if n == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(m, 0),
            singular_values: Vec::new(),
            v: DMatrix::zeros(0, 0),
        });
    }
    let mut w: Vec<T> = a.as_slice().to_vec();
    let mut v: Vec<T> = DMatrix::<T>::identity(n, n).as_slice().to_vec();

    // Columns this small carry only rounding noise; rotating them never settles.
    let total: f64 = norm_sq(&w);
    let negligible = (f64::EPSILON * f64::EPSILON) * total;
    // Inner products of length-m columns carry about sqrt(m) ulps of rounding.
    let tol = f64::EPSILON * (m as f64).sqrt().max(1.0);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm_sq(&w[p * m..(p + 1) * m]);
                let beta = norm_sq(&w[q * m..(q + 1) * m]);
                let gamma = dotc(&w[p * m..(p + 1) * m], &w[q * m..(q + 1) * m]);
                let g = gamma.modulus();
                if g == 0.0
                    || alpha.min(beta) <= negligible
                    || g <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                // Turn the pair's inner product real, then a plain Jacobi rotation.
                let phase = gamma.conjugate().unscale(g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, m, p, q, c, s, phase);
                rotate(&mut v, n, p, q, c, s, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DmdError::Numerical {
            message: "Jacobi SVD did not converge".into(),
            operator: None,
        });
    }

    let norms: Vec<f64> = (0..n).map(|j| norm_sq(&w[j * m..(j + 1) * m]).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    // Columns the sweep skipped as negligible are not orthogonal; replace them.
    let floor = negligible.sqrt().max(f64::EPSILON * norms[order[0]]);
    let mut u = DMatrix::<T>::zeros(m, n);
    let mut vs = DMatrix::<T>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > floor {
            for i in 0..m {
                u[(i, k)] = w[j * m + i].unscale(s);
            }
        }
        for i in 0..n {
            vs[(i, k)] = v[j * n + i];
        }
    }
    let null: Vec<bool> = sigma.iter().map(|&s| s <= floor).collect();
    complete_basis(&mut u, &null);
    Ok(Svd {
        u,
        singular_values: sigma,
        v: vs,
    })
}

/// Fills the columns of `u` flagged in `null` with an orthonormal completion.
fn complete_basis<T: ComplexField<RealField = f64> + Copy>(u: &mut DMatrix<T>, null: &[bool]) {
    let m = u.nrows();
    let mut candidate = 0;
    for k in 0..null.len() {
        if !null[k] {
            continue;
        }
        while candidate < m {
            let mut e = nalgebra::DVector::<T>::zeros(m);
            e[candidate] = T::one();
            candidate += 1;
            // two passes of Gram-Schmidt for stability
            for _ in 0..2 {
                for (j, &is_null) in null.iter().enumerate().take(u.ncols()) {
                    if j == k || (j > k && is_null) {
                        continue;
                    }
                    let col = u.column(j).into_owned();
                    let proj = col.dotc(&e);
                    e -= col * proj;
                }
            }
            let norm = e.norm();
            if norm > 1e-8 {
                u.set_column(k, &e.unscale(norm));
                break;
            }
        }
    }
}
