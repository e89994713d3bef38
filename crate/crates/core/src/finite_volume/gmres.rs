//! Restarted GMRES with right preconditioning.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};

use super::krylov::{axpy, dotc, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    /// Target residual relative to `‖b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 60, tolerance: 1e-12, max_iterations: 3000 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub solution: Vec<C64>,
    /// True residual `‖b − A x‖ / ‖b‖`.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `A x = b` with `A = op` and right preconditioner `precond ≈ A⁻¹`.
///
/// # Errors
/// `NonConvergence` with the achieved relative residual.
pub fn gmres(
    op: impl Fn(&[C64], &mut [C64]),
    precond: impl Fn(&[C64], &mut [C64]),
    b: &[C64],
    x0: &[C64],
    options: GmresOptions,
) -> Result<GmresResult> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(GmresResult { solution: vec![ZERO; n], residual: 0.0, iterations: 0 });
    }
    let m = options.restart.max(1).min(n);
    let mut x = x0.to_vec();
    let mut r = vec![ZERO; n];
    let mut tmp = vec![ZERO; n];
    let mut basis = vec![ZERO; (m + 1) * n];
    let mut z = vec![ZERO; m * n];
    let mut iterations = 0;

    let residual = |x: &[C64], r: &mut [C64], tmp: &mut [C64]| {
        op(x, tmp);
        for ((ri, bi), ti) in r.iter_mut().zip(b).zip(tmp.iter()) {
            *ri = bi - ti;
        }
        norm2(r)
    };

    let mut rnorm = residual(&x, &mut r, &mut tmp);
    while rnorm > options.tolerance * bnorm {
        if iterations >= options.max_iterations {
            return Err(Error::NonConvergence { what: "gmres", residual: rnorm / bnorm });
        }
        for (v, ri) in basis[..n].iter_mut().zip(&r) {
            *v = ri / rnorm;
        }
        let mut h = CMatrix::zeros(m + 1, m);
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::new(rnorm, 0.0);
        let mut rotations: Vec<(f64, C64)> = Vec::with_capacity(m);
        let mut used = 0;
        for j in 0..m {
            iterations += 1;
            used = j + 1;
            precond(&basis[j * n..(j + 1) * n], &mut z[j * n..(j + 1) * n]);
            let (head, tail) = basis.split_at_mut((j + 1) * n);
            op(&z[j * n..(j + 1) * n], &mut tmp);
            for _ in 0..2 {
                for i in 0..=j {
                    let vi = &head[i * n..(i + 1) * n];
                    let hij = dotc(vi, &tmp);
                    axpy(-hij, vi, &mut tmp);
                    h[(i, j)] += hij;
                }
            }
            let s = norm2(&tmp);
            h[(j + 1, j)] = C64::new(s, 0.0);
            if s > 0.0 {
                for (v, t) in tail[..n].iter_mut().zip(&tmp) {
                    *v = t / s;
                }
            }
            for (i, &(cs, sn)) in rotations.iter().enumerate() {
                let (a, bb) = (h[(i, j)], h[(i + 1, j)]);
                h[(i, j)] = a * cs + sn * bb;
                h[(i + 1, j)] = -sn.conj() * a + bb * cs;
            }
            let (cs, sn) = givens(h[(j, j)], h[(j + 1, j)]);
            let (a, bb) = (h[(j, j)], h[(j + 1, j)]);
            h[(j, j)] = a * cs + sn * bb;
            h[(j + 1, j)] = ZERO;
            rotations.push((cs, sn));
            let gj = g[j];
            g[j] = gj * cs;
            g[j + 1] = -sn.conj() * gj;
            if g[j + 1].norm() <= options.tolerance * bnorm * 0.5 || s == 0.0 || iterations >= options.max_iterations {
                break;
            }
        }
        // Back substitution on the triangular Hessenberg factor.
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= h[(i, k)] * y[k];
            }
            y[i] = if h[(i, i)].norm() > 0.0 { acc / h[(i, i)] } else { ZERO };
        }
        for (k, yk) in y.iter().enumerate() {
            axpy(*yk, &z[k * n..(k + 1) * n], &mut x);
        }
        let previous = rnorm;
        rnorm = residual(&x, &mut r, &mut tmp);
        if rnorm >= previous * (1.0 - 1e-12) && rnorm > options.tolerance * bnorm {
            return Err(Error::NonConvergence { what: "gmres stagnation", residual: rnorm / bnorm });
        }
    }
    Ok(GmresResult { solution: x, residual: rnorm / bnorm, iterations })
}

/// Complex Givens rotation `(c, s)` zeroing `b` in `(a, b)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        (1.0, ZERO)
    } else if na == 0.0 {
        (0.0, b.conj() / nb)
    } else {
        let r = (na * na + nb * nb).sqrt();
        (na / r, (a / na) * b.conj() / r)
    }
}
