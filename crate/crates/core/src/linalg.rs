//! Dense complex linear algebra helpers on top of `nalgebra`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() < m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    gram.symmetric_eigenvalues().iter().fold(0.0, |acc: f64, &s| acc.max(s)).max(0.0).sqrt()
}

/// Thin singular value decomposition `m = u · diag(values) · vᴴ`, values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub values: Vec<f64>,
    pub v: CMatrix,
}

const JACOBI_SWEEPS: usize = 60;

/// One-sided Jacobi SVD. Small singular values are computed to high
/// relative accuracy and rank-deficient inputs are handled exactly; `u` and
/// `v` are square unitaries.
pub fn svd(m: &CMatrix) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return Svd { u: t.v, values: t.values, v: t.u };
    }
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = CMatrix::identity(cols, cols);
    let eps = f64::EPSILON;
    let mut norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm_squared()).collect();
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut a, p, q, cs, sn, phase);
                rotate_columns(&mut v, p, q, cs, sn, phase);
                norms[p] = a.column(p).norm_squared();
                norms[q] = a.column(q).norm_squared();
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let values: Vec<f64> = order.iter().map(|&k| norms[k].sqrt()).collect();
    let v = CMatrix::from_fn(cols, cols, |i, j| v[(i, order[j])]);
    let mut u = CMatrix::zeros(rows, rows);
    let floor = values.first().copied().unwrap_or(0.0) * eps * (rows as f64);
    let mut filled = 0;
    for (j, &k) in order.iter().enumerate() {
        if values[j] > floor && values[j] > 0.0 {
            let col = a.column(k) / C64::new(values[j], 0.0);
            u.set_column(j, &col);
            filled = j + 1;
        } else {
            break;
        }
    }
    complete_unitary(&mut u, filled);
    Svd { u, values, v }
}

/// Applies `(x_p, x_q) ↦ (c x_p − s e^{-iφ} x_q, s e^{iφ} x_p + c x_q)`.
fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, cs: f64, sn: f64, phase: C64) {
    let down = phase.conj() * sn;
    let up = phase * sn;
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = x * cs - down * y;
        m[(i, q)] = up * x + y * cs;
    }
}

/// Extends the first `filled` orthonormal columns to a unitary by
/// Gram-Schmidt against the standard basis.
fn complete_unitary(u: &mut CMatrix, filled: usize) {
    let n = u.nrows();
    let mut next = filled;
    for e in 0..n {
        if next == n {
            break;
        }
        let mut cand = CVector::zeros(n);
        cand[e] = ONE;
        for _ in 0..2 {
            for j in 0..next {
                let proj = u.column(j).dotc(&cand);
                cand -= u.column(j) * proj;
            }
        }
        let norm = cand.norm();
        if norm > 0.5 {
            u.set_column(next, &(cand / C64::new(norm, 0.0)));
            next += 1;
        }
    }
}

/// Maximum absolute column sum.
pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// Unitary factor `W V*` of the polar decomposition `m = W Σ V*`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let s = svd(m);
    let k = m.nrows().min(m.ncols());
    s.u.columns(0, k) * s.v.columns(0, k).adjoint()
}

/// Top singular triple `(σ, u, v)` with `m v = σ u`.
pub fn top_singular_triple(m: &CMatrix) -> (f64, CVector, CVector) {
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    let k = argmax(eig.eigenvalues.as_slice());
    let right = eig.eigenvectors.column(k).into_owned();
    let image = m * &right;
    let sigma = image.norm();
    let left = if sigma > 0.0 { image / C64::new(sigma, 0.0) } else { unit_vector(m.nrows()) };
    (sigma, left, right)
}

fn unit_vector(n: usize) -> CVector {
    let mut e = CVector::zeros(n);
    e[0] = ONE;
    e
}

/// Singular values sorted ascending, with the matching right singular vectors.
pub fn ascending_right_singular(m: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let s = svd(m);
    let mut values = s.values;
    values.resize(m.ncols(), 0.0);
    values.reverse();
    let vectors = (0..m.ncols()).rev().map(|j| s.v.column(j).into_owned()).collect();
    (values, vectors)
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = k;
        }
    }
    best
}

/// Eigenvalues of a general complex square matrix, read from the
/// diagonal of its Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::EigensolverFailure("schur iteration did not converge"))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Minimum eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let h = hermitian_part(m);
    h.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * c(0.5f64.powi(s), 0.0);
    let id = CMatrix::identity(n, n);
    let b = |k: usize| c(PADE13[k], 0.0);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pi = core::f64::consts::PI;
    for i in 0..n {
        let mut x = (pi * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, p_prev) = legendre(n, x);
            dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, p_prev) = legendre(n, x);
        dp = if p.is_finite() { n as f64 * (x * p - p_prev) / (x * x - 1.0) } else { dp };
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let next = ((2 * k - 1) as f64 * x * p - (k - 1) as f64 * p_prev) / k as f64;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Pairwise (cascade) summation; the association order depends only on the length.
pub fn pairwise_sum(xs: &[C64]) -> C64 {
    if xs.len() <= 8 {
        return xs.iter().fold(ZERO, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Standard complex Gaussian sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let phase = 2.0 * core::f64::consts::PI * u2;
    c(r * phase.cos(), r * phase.sin()) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Unitary obtained from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    random_matrix(dim, dim, rng).qr().q()
}

/// Random density matrix `G G* / Tr(G G*)`.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = random_matrix(dim, dim, rng);
    let rho = &g * g.adjoint();
    let tr = trace(&rho);
    rho / tr
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svd_reconstructs_rank_deficient_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (rows, cols, rank) in [(16, 16, 1), (8, 16, 2), (16, 5, 3), (4, 4, 4), (64, 64, 2)] {
            let a = random_matrix(rows, rank, &mut rng) * random_matrix(rank, cols, &mut rng);
            let s = svd(&a);
            let k = rows.min(cols);
            let sigma = CMatrix::from_fn(k, k, |i, j| if i == j { c(s.values[i], 0.0) } else { ZERO });
            let back = s.u.columns(0, k) * sigma * s.v.columns(0, k).adjoint();
            assert!((back - &a).norm() <= 1e-13 * a.norm());
            assert!((s.u.adjoint() * &s.u - CMatrix::identity(rows, rows)).norm() < 1e-13);
            let err = (s.v.adjoint() * &s.v - CMatrix::identity(cols, cols)).norm();
            assert!(err < 1e-12, "{rows}x{cols}: {err}");
            assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
            assert!(s.values[rank..].iter().all(|&x| x <= 1e-13 * s.values[0]));
        }
    }

    #[test]
    fn svd_resolves_tiny_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (u, v) = (random_unitary(6, &mut rng), random_unitary(6, &mut rng));
        let want = [3.0, 1.0, 1e-3, 1e-6, 1e-9, 1e-12];
        let d = CMatrix::from_fn(6, 6, |i, j| if i == j { c(want[i], 0.0) } else { ZERO });
        let s = svd(&(&u * d * v.adjoint()));
        for (got, want) in s.values.iter().zip(want) {
            assert!((got - want).abs() <= 1e-14 * 3.0 + 1e-3 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn top_triple_and_polar_on_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_matrix(16, 1, &mut rng) * random_matrix(1, 16, &mut rng);
        let (sigma, u, v) = top_singular_triple(&a);
        assert!((sigma - a.norm()).abs() < 1e-12 * sigma);
        assert!((&a * &v - u * c(sigma, 0.0)).norm() < 1e-12 * sigma);
        let w = polar_unitary(&a);
        assert!((w.adjoint() * &w - CMatrix::identity(16, 16)).norm() < 1e-12);
        assert!((trace(&(w.adjoint() * &a)).re - sigma).abs() < 1e-12 * sigma);
    }

    #[test]
    fn expm_of_diagonal_matches_scalar_exponentials() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(-3.0, 1.0), c(0.5, 0.0), c(12.0, -7.0)]));
        let e = expm(&d);
        for k in 0..3 {
            let want = d[(k, k)].exp();
            assert!((e[(k, k)] - want).norm() <= 1e-13 * want.norm());
        }
    }

    #[test]
    fn expm_of_nilpotent_is_truncated_series() {
        let mut n = CMatrix::zeros(3, 3);
        n[(0, 1)] = ONE;
        n[(1, 2)] = ONE;
        let e = expm(&n);
        assert!((e[(0, 2)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((e[(0, 1)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn expm_semigroup_on_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(6, 6, &mut rng) * c(2.0, 0.0);
        let lhs = expm(&(&a * c(2.0, 0.0)));
        let e = expm(&a);
        let rhs = &e * &e;
        assert!((lhs - &rhs).norm() <= 1e-11 * rhs.norm());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((integral - 2.0 / 13.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let s: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(5.0, 0.0), ZERO, c(-2.0, 1.0)]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - c(-2.0, 1.0)).norm() < 1e-12);
        assert!((ev[1] - ONE).norm() < 1e-12);
    }
}
