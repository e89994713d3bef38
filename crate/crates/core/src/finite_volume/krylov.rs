//! Action of the matrix exponential on a vector by restarted Arnoldi with
//! a-posteriori step control.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};

/// Stopping rules of [`expv`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Krylov subspace dimension per step, at most 60.
    pub dimension: usize,
    /// Target error relative to `‖v‖`.
    pub tolerance: f64,
    /// Accumulated error relative to `‖v‖` above which the result is rejected.
    pub certified: f64,
    pub max_steps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { dimension: 30, tolerance: 1e-10, certified: 1e-9, max_steps: 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovResult {
    pub vector: Vec<C64>,
    /// Accumulated local error estimate, absolute.
    pub error_estimate: f64,
    pub steps: usize,
}

const GAMMA: f64 = 0.9;
const DELTA: f64 = 1.2;
const MAX_REJECTIONS: usize = 20;

/// Computes `exp(t A) v` where `op(x, out)` writes `A x` into `out` and
/// `norm` bounds `‖A‖`.
///
/// # Errors
/// `NonConvergence` when the accumulated error exceeds the certified level
/// or the step controller stalls.
pub fn expv(
    t: f64,
    op: impl Fn(&[C64], &mut [C64]),
    v: &[C64],
    norm: f64,
    options: KrylovOptions,
) -> Result<KrylovResult> {
    let n = v.len();
    let beta0 = norm2(v);
    if t == 0.0 || beta0 == 0.0 || n == 0 {
        return Ok(KrylovResult { vector: v.to_vec(), error_estimate: 0.0, steps: 0 });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("negative evolution time".into()));
    }
    let anorm = norm.max(f64::MIN_POSITIVE);
    let m = options.dimension.clamp(1, 60).min(n);
    // Per unit time, so the accumulated error stays below tolerance · ‖v‖.
    let tol = options.tolerance * beta0 / t;
    let breakdown = 1e-13 * anorm.max(1.0);
    let rndoff = anorm * f64::EPSILON;
    let xm = 1.0 / m as f64;

    let mut w = v.to_vec();
    let mut beta = beta0;
    let mut t_now = 0.0;
    let mut s_error = 0.0;
    let mut steps = 0;
    let fact = ((m + 1) as f64 / core::f64::consts::E).powi(m as i32 + 1)
        * (2.0 * core::f64::consts::PI * (m + 1) as f64).sqrt();
    let mut t_new = round_step((1.0 / anorm) * ((fact * tol) / (4.0 * beta * anorm)).powf(xm));

    let mut basis = vec![ZERO; (m + 1) * n];
    let mut p = vec![ZERO; n];
    while t_now < t {
        steps += 1;
        if steps > options.max_steps {
            return Err(Error::NonConvergence { what: "krylov step count", residual: s_error });
        }
        let mut t_step = (t - t_now).min(t_new);
        let mut h = CMatrix::zeros(m + 2, m + 2);
        for (b, x) in basis[..n].iter_mut().zip(&w) {
            *b = x / beta;
        }
        let mut happy = false;
        let mut mb = m;
        for j in 0..m {
            let (head, tail) = basis.split_at_mut((j + 1) * n);
            op(&head[j * n..], &mut p);
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _ in 0..2 {
                for i in 0..=j {
                    let vi = &head[i * n..(i + 1) * n];
                    let hij = dotc(vi, &p);
                    axpy(-hij, vi, &mut p);
                    h[(i, j)] += hij;
                }
            }
            let s = norm2(&p);
            if s < breakdown {
                happy = true;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            h[(j + 1, j)] = C64::new(s, 0.0);
            for (b, x) in tail[..n].iter_mut().zip(&p) {
                *b = x / s;
            }
        }
        let mut avnorm = 0.0;
        if !happy {
            h[(m + 1, m)] = C64::new(1.0, 0.0);
            op(&basis[m * n..(m + 1) * n], &mut p);
            avnorm = norm2(&p);
        }

        let mut rejections = 0;
        let (f, err_loc) = loop {
            let mx = if happy { mb } else { m + 2 };
            let hm = h.view((0, 0), (mx, mx)) * C64::new(t_step, 0.0);
            let f = linalg::expm(&hm.into_owned());
            if happy {
                break (f, breakdown * t_step);
            }
            let p1 = f[(m, 0)].norm() * beta;
            let p2 = f[(m + 1, 0)].norm() * beta * avnorm;
            let err_loc = if p1 > 10.0 * p2 {
                p2
            } else if p1 > p2 {
                p1 * p2 / (p1 - p2)
            } else {
                p1
            };
            if err_loc <= DELTA * t_step * tol {
                break (f, err_loc);
            }
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(Error::NonConvergence { what: "krylov step size", residual: err_loc });
            }
            t_step = round_step(GAMMA * t_step * (t_step * tol / err_loc).powf(xm));
        };

        let mx = if happy { mb } else { m + 1 };
        w.iter_mut().for_each(|x| *x = ZERO);
        for i in 0..mx {
            axpy(f[(i, 0)] * beta, &basis[i * n..(i + 1) * n], &mut w);
        }
        beta = norm2(&w);
        t_now += t_step;
        t_new = if err_loc > 0.0 {
            round_step(GAMMA * t_step * (t_step * tol / err_loc).powf(xm))
        } else {
            10.0 * t_step
        };
        s_error += err_loc.max(rndoff);
        if beta == 0.0 {
            break;
        }
    }
    if s_error > options.certified * beta0 {
        return Err(Error::NonConvergence { what: "krylov exponential", residual: s_error / beta0 });
    }
    Ok(KrylovResult { vector: w, error_estimate: s_error, steps })
}

/// Rounds a step size to two significant digits.
fn round_step(t: f64) -> f64 {
    if !t.is_finite() || t <= 0.0 {
        return if t.is_finite() { f64::MIN_POSITIVE } else { f64::MAX };
    }
    let p = 10f64.powf((t.log10() - 0.1f64.sqrt()).round() - 1.0);
    ((t / p + 0.55).trunc() * p).max(f64::MIN_POSITIVE)
}

pub(crate) fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub(crate) fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
