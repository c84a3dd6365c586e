//! Cyclic Jacobi eigen-solver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq`, then applies the
//! classical real symmetric rotation that zeroes it. Sweeps visit pairs in a
//! fixed `(p, q)` row order, so results are bit-reproducible.

use super::{c64, Operator, C64};
use crate::error::Result;

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

pub fn eigh(a: &Operator) -> Result<HermitianEigen> {
    a.require_hermitian()?;
    let n = a.dim();
    // symmetrize away sub-tolerance asymmetry
    let mut m = vec![C64::default(); n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = (a.entry(i, j) + a.entry(j, i).conj()) * 0.5;
        }
    }
    let mut v = vec![C64::default(); n * n];
    for i in 0..n {
        v[i * n + i] = c64(1.0, 0.0);
    }

    let scale = a.frobenius_norm().max(1.0);
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m, n) < OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].re.total_cmp(&m[j * n + j].re));
    let values = order.iter().map(|&i| m[i * n + i].re).collect();
    let vectors = order.iter().map(|&col| (0..n).map(|row| v[row * n + col]).collect()).collect();
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm(m: &[C64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[i * n + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn rotate(m: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let b = apq.norm();
    if b < f64::MIN_POSITIVE {
        return;
    }
    let phase = apq / b;
    let app = m[p * n + p].re;
    let aqq = m[q * n + q].re;
    let theta = (aqq - app) / (2.0 * b);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let e = phase.conj();
    let g_pp = c64(c, 0.0);
    let g_pq = c64(s, 0.0);
    let g_qp = e * (-s);
    let g_qq = e * c;

    for r in 0..n {
        let x = m[r * n + p];
        let y = m[r * n + q];
        m[r * n + p] = x * g_pp + y * g_qp;
        m[r * n + q] = x * g_pq + y * g_qq;
    }
    for r in 0..n {
        let x = m[p * n + r];
        let y = m[q * n + r];
        m[p * n + r] = g_pp.conj() * x + g_qp.conj() * y;
        m[q * n + r] = g_pq.conj() * x + g_qq.conj() * y;
    }
    for r in 0..n {
        let x = v[r * n + p];
        let y = v[r * n + q];
        v[r * n + p] = x * g_pp + y * g_qp;
        v[r * n + q] = x * g_pq + y * g_qq;
    }
    m[p * n + q] = C64::default();
    m[q * n + p] = C64::default();
    m[p * n + p] = c64(m[p * n + p].re, 0.0);
    m[q * n + q] = c64(m[q * n + q].re, 0.0);
}
