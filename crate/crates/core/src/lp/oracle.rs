//! Exact convex-hull membership over the rationals.
//!
//! The referee for the floating-point solver: a phase-1 simplex on
//! `Σ w_v v = target, Σ w_v = 1, w ≥ 0` in `BigRational`, with Bland's rule
//! so it terminates without any tolerance. Both answers come with a
//! certificate that is re-checked exactly before returning.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Largest vertex set the oracle accepts.
pub const MAX_VERTICES: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub enum HullMembership {
    /// `target = Σ weights[v] · vertices[v]` with nonnegative weights summing to 1.
    Inside { weights: Vec<BigRational> },
    /// `normal · v ≤ offset` for every vertex, `normal · target > offset`.
    Outside { normal: Vec<BigRational>, offset: BigRational },
}

impl HullMembership {
    pub fn is_inside(&self) -> bool {
        matches!(self, HullMembership::Inside { .. })
    }
}

/// Exact conversion of a finite double.
pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

pub fn rational_vec(xs: &[f64]) -> Vec<BigRational> {
    xs.iter().map(|&x| rational(x)).collect()
}

pub fn hull_membership_oracle(vertices: &[Vec<BigRational>], target: &[BigRational]) -> Result<HullMembership> {
    let d = target.len();
    if vertices.is_empty() || vertices.len() > MAX_VERTICES {
        return Err(Error::InvalidProblem { reason: format!("{} vertices", vertices.len()) });
    }
    if let Some(v) = vertices.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: v.len() });
    }

    let k = vertices.len();
    let rows = d + 1;
    let width = k + rows + 1;
    let zero = BigRational::zero();
    let one = BigRational::one();

    // rows 0..d: coordinates, row d: Σ w = 1; normalized to nonnegative rhs
    let mut cells = vec![vec![zero.clone(); width]; rows];
    let mut sign = vec![one.clone(); rows];
    for r in 0..rows {
        let rhs = if r < d { target[r].clone() } else { one.clone() };
        if rhs.is_negative() {
            sign[r] = -one.clone();
        }
        for (c, v) in vertices.iter().enumerate() {
            let a = if r < d { v[r].clone() } else { one.clone() };
            cells[r][c] = &a * &sign[r];
        }
        cells[r][k + r] = one.clone();
        cells[r][width - 1] = &rhs * &sign[r];
    }
    let mut cost = vec![zero.clone(); width];
    for row in &cells {
        for j in 0..k {
            cost[j] -= &row[j];
        }
        cost[width - 1] -= &row[width - 1];
    }
    let mut basis: Vec<usize> = (0..rows).map(|r| k + r).collect();

    while let Some(col) = (0..k).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for r in 0..rows {
            if !cells[r][col].is_positive() {
                continue;
            }
            let ratio = &cells[r][width - 1] / &cells[r][col];
            let better = match &leave {
                None => true,
                Some((best, best_ratio)) => ratio < *best_ratio || (ratio == *best_ratio && basis[r] < basis[*best]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        let (row, _) = leave.expect("phase-1 objective is bounded below");
        pivot(&mut cells, &mut cost, row, col);
        basis[row] = col;
    }

    let objective = -cost[width - 1].clone();
    if objective.is_zero() {
        let mut weights = vec![zero.clone(); k];
        for (r, &b) in basis.iter().enumerate() {
            if b < k {
                weights[b] = cells[r][width - 1].clone();
            }
        }
        check_inside(vertices, target, &weights)?;
        return Ok(HullMembership::Inside { weights });
    }

    // y_r = Σ over basic artificials of B⁻¹ entries; −y (unflipped) separates
    let mut y = vec![zero.clone(); rows];
    for (r, yr) in y.iter_mut().enumerate() {
        let col = k + r;
        for (i, &b) in basis.iter().enumerate() {
            if b >= k {
                *yr += &cells[i][col];
            }
        }
        *yr = &*yr * &sign[r];
    }
    // yᵀ(v, 1) ≤ 0 for every vertex and yᵀ(target, 1) > 0
    let normal: Vec<BigRational> = y[..d].to_vec();
    let offset = -y[d].clone();
    check_outside(vertices, target, &normal, &offset)?;
    Ok(HullMembership::Outside { normal, offset })
}

fn pivot(cells: &mut [Vec<BigRational>], cost: &mut [BigRational], row: usize, col: usize) {
    let p = cells[row][col].clone();
    for v in cells[row].iter_mut() {
        *v = &*v / &p;
    }
    let pivot_row = cells[row].clone();
    for (r, cells_r) in cells.iter_mut().enumerate() {
        if r == row || cells_r[col].is_zero() {
            continue;
        }
        let f = cells_r[col].clone();
        for (v, pv) in cells_r.iter_mut().zip(&pivot_row) {
            if !pv.is_zero() {
                *v -= &f * pv;
            }
        }
    }
    if !cost[col].is_zero() {
        let f = cost[col].clone();
        for (v, pv) in cost.iter_mut().zip(&pivot_row) {
            if !pv.is_zero() {
                *v -= &f * pv;
            }
        }
    }
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

fn check_inside(vertices: &[Vec<BigRational>], target: &[BigRational], weights: &[BigRational]) -> Result<()> {
    let total = weights.iter().fold(BigRational::zero(), |acc, w| acc + w);
    let ok = weights.iter().all(|w| !w.is_negative())
        && total.is_one()
        && (0..target.len()).all(|i| {
            let s = vertices.iter().zip(weights).fold(BigRational::zero(), |acc, (v, w)| acc + &v[i] * w);
            s == target[i]
        });
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidProblem { reason: "oracle produced an invalid convex combination".into() })
    }
}

fn check_outside(
    vertices: &[Vec<BigRational>],
    target: &[BigRational],
    normal: &[BigRational],
    offset: &BigRational,
) -> Result<()> {
    if vertices.iter().all(|v| dot(normal, v) <= *offset) && dot(normal, target) > *offset {
        Ok(())
    } else {
        Err(Error::InvalidProblem { reason: "oracle produced an invalid separating hyperplane".into() })
    }
}

/// Scales a hyperplane so its entries are coprime integers.
pub fn integer_normal(normal: &[BigRational], offset: &BigRational) -> (Vec<BigInt>, BigInt) {
    use num_integer::Integer;
    let mut all: Vec<BigRational> = normal.to_vec();
    all.push(offset.clone());
    let lcm = all.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = all.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let ints: Vec<BigInt> = if gcd.is_zero() { ints } else { ints.iter().map(|x| x / &gcd).collect() };
    let (last, head) = ints.split_last().expect("nonempty");
    (head.to_vec(), last.clone())
}
