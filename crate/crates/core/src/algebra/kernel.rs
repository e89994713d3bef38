//! Application of a small matrix to selected digits of a mixed-radix index.
//!
//! A vector of length `radix^n` is read as a tensor with `n` legs, digit 0
//! being the most significant. A `DigitKernel` applies a local matrix on
//! `k` of those legs and the identity on the rest.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{CMatrix, C64, ZERO};

#[derive(Debug, Clone)]
pub struct DigitKernel {
    matrix: CMatrix,
    offsets: Vec<usize>,
    bases: Vec<usize>,
    len: usize,
}

impl DigitKernel {
    /// `positions` lists the legs acted on, in the order matching the local
    /// matrix's own digit order (most significant first).
    pub fn new(matrix: CMatrix, radix: usize, n_digits: usize, positions: &[usize]) -> Self {
        let k = positions.len();
        let local = radix.pow(k as u32);
        assert_eq!(matrix.nrows(), local, "local matrix does not match the selected legs");
        assert_eq!(matrix.ncols(), local);
        assert!(positions.iter().all(|&p| p < n_digits));
        let len = radix.pow(n_digits as u32);
        let stride = |p: usize| radix.pow((n_digits - 1 - p) as u32);

        let offsets = (0..local)
            .map(|l| {
                let mut rem = l;
                let mut off = 0;
                for m in (0..k).rev() {
                    off += (rem % radix) * stride(positions[m]);
                    rem /= radix;
                }
                off
            })
            .collect();

        let mut selected = vec![false; n_digits];
        for &p in positions {
            selected[p] = true;
        }
        let free: Vec<usize> = (0..n_digits).filter(|&p| !selected[p]).collect();
        let n_bases = len / local;
        let bases = (0..n_bases)
            .map(|b| {
                let mut rem = b;
                let mut off = 0;
                for &p in free.iter().rev() {
                    off += (rem % radix) * stride(p);
                    rem /= radix;
                }
                off
            })
            .collect();

        DigitKernel { matrix, offsets, bases, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `out += (M ⊗ 1) x`.
    pub fn apply_add(&self, x: &[C64], out: &mut [C64]) {
        self.run(x, out, false);
    }

    /// `out += (M ⊗ 1)* x`.
    pub fn apply_adjoint_add(&self, x: &[C64], out: &mut [C64]) {
        self.run(x, out, true);
    }

    fn run(&self, x: &[C64], out: &mut [C64], adjoint: bool) {
        debug_assert_eq!(x.len(), self.len);
        debug_assert_eq!(out.len(), self.len);
        let l = self.offsets.len();
        let m = self.matrix.as_slice();
        let mut buf = vec![ZERO; l];
        let mut acc = vec![ZERO; l];
        for &base in &self.bases {
            let mut any = false;
            for (b, &off) in buf.iter_mut().zip(&self.offsets) {
                *b = x[base + off];
                any |= *b != ZERO;
            }
            if !any {
                continue;
            }
            acc.iter_mut().for_each(|a| *a = ZERO);
            if adjoint {
                for (col, a) in acc.iter_mut().enumerate() {
                    let column = &m[col * l..(col + 1) * l];
                    *a = column.iter().zip(&buf).map(|(mij, xi)| mij.conj() * xi).sum();
                }
            } else {
                for (col, &xc) in buf.iter().enumerate() {
                    if xc == ZERO {
                        continue;
                    }
                    let column = &m[col * l..(col + 1) * l];
                    for (a, mij) in acc.iter_mut().zip(column) {
                        *a += mij * xc;
                    }
                }
            }
            for (a, &off) in acc.iter().zip(&self.offsets) {
                out[base + off] += a;
            }
        }
    }

    /// The full `len × len` matrix of the embedded action.
    pub fn to_dense(&self) -> CMatrix {
        let l = self.offsets.len();
        let mut dense = CMatrix::zeros(self.len, self.len);
        for &base in &self.bases {
            for c in 0..l {
                for r in 0..l {
                    let v = self.matrix[(r, c)];
                    if v != ZERO {
                        dense[(base + self.offsets[r], base + self.offsets[c])] = v;
                    }
                }
            }
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, kron};

    #[test]
    fn kernel_matches_kronecker_products() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let id = CMatrix::identity(2, 2);
        let on_middle = DigitKernel::new(a.clone(), 2, 3, &[1]).to_dense();
        assert_eq!(on_middle, kron(&kron(&id, &a), &id));
        let on_last = DigitKernel::new(a.clone(), 2, 3, &[2]).to_dense();
        assert_eq!(on_last, kron(&kron(&id, &id), &a));
    }

    #[test]
    fn swapped_positions_permute_legs() {
        let a = CMatrix::from_fn(4, 4, |r, col| c((r * 4 + col) as f64, 0.0));
        let forward = DigitKernel::new(a.clone(), 2, 2, &[0, 1]).to_dense();
        assert_eq!(forward, a);
        let swap = CMatrix::from_fn(4, 4, |r, col| {
            let s = |i: usize| (i % 2) * 2 + i / 2;
            if s(r) == col { c(1.0, 0.0) } else { ZERO }
        });
        let backward = DigitKernel::new(a.clone(), 2, 2, &[1, 0]).to_dense();
        assert_eq!(backward, &swap * a * &swap);
    }

    #[test]
    fn apply_and_adjoint_agree_with_dense() {
        let a = CMatrix::from_fn(4, 4, |r, col| c(r as f64 - col as f64, (r * col) as f64));
        let k = DigitKernel::new(a, 2, 4, &[3, 1]);
        let dense = k.to_dense();
        let x: Vec<C64> = (0..16).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let mut y = vec![ZERO; 16];
        k.apply_add(&x, &mut y);
        let want = &dense * crate::linalg::CVector::from_vec(x.clone());
        assert!(y.iter().zip(want.iter()).all(|(a, b)| (a - b).norm() < 1e-12));
        let mut z = vec![ZERO; 16];
        k.apply_adjoint_add(&x, &mut z);
        let want = dense.adjoint() * crate::linalg::CVector::from_vec(x);
        assert!(z.iter().zip(want.iter()).all(|(a, b)| (a - b).norm() < 1e-12));
    }
}
