//! Dense finite-dimensional operator algebra.
//!
//! Everything downstream (marginals, Bell expectations, entropies) consumes
//! the three validated wrappers defined here: [`Operator`], [`Projector`] and
//! [`DensityOperator`]. Matrices are stored row-major as `Complex64`; the
//! dimensions involved are tiny so no sparsity or blocking is attempted.

mod eigen;

pub use eigen::{eigh, HermitianEigen};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute max-norm tolerance used by every validation in the crate.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Eigenvalues closer than this are merged into one eigenprojector.
pub const DEGENERACY_GAP: f64 = 1e-8;

pub type C64 = Complex64;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>,
}

impl Operator {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::NotSquare { len: entries.len() });
        }
        if let Some(pos) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim, col: pos % dim });
        }
        Ok(Self { dim, entries })
    }

    /// Builds an operator from nested rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            let len = rows.iter().map(Vec::len).sum();
            return Err(Error::NotSquare { len });
        }
        Self::new(dim, rows.concat())
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| c64(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self { dim, entries: vec![C64::default(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut op = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            op.entries[i * op.dim + i] = c64(v, 0.0);
        }
        op
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).expect("static matrix")
    }

    pub fn pauli_y() -> Self {
        Self::new(2, vec![c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
            .expect("static matrix")
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, &[1.0, 0.0, 0.0, -1.0]).expect("static matrix")
    }

    /// `|ψ⟩⟨ψ|` for the given (not necessarily normalized) ket.
    pub fn outer(ket: &[C64]) -> Result<Self> {
        let dim = ket.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in ket {
            for b in ket {
                entries.push(a * b.conj());
            }
        }
        Self::new(dim, entries)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut out = vec![C64::default(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == C64::default() {
                    continue;
                }
                let row = &other.entries[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Operator { dim: n, entries: out })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(C64, C64) -> C64) -> Result<Operator> {
        self.check_dim(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(&a, &b)| f(a, b)).collect();
        Ok(Operator { dim: self.dim, entries })
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator { dim: self.dim, entries: self.entries.iter().map(|z| z * factor).collect() }
    }

    pub fn adjoint(&self) -> Operator {
        let n = self.dim;
        let mut entries = vec![C64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        Operator { dim: n, entries }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm distance to another operator of the same dimension.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `max |a_ij − conj(a_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() <= VALIDATION_TOL
    }

    pub(crate) fn require_hermitian(&self) -> Result<()> {
        let residual = self.hermitian_residual();
        if residual > VALIDATION_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`; the index of `a` is the most significant.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    let (n, m) = (a.dim, b.dim);
    let dim = n * m;
    let mut entries = vec![C64::default(); dim * dim];
    for i in 0..n {
        for j in 0..n {
            let aij = a.entries[i * n + j];
            for k in 0..m {
                for l in 0..m {
                    entries[(i * m + k) * dim + j * m + l] = aij * b.entries[k * m + l];
                }
            }
        }
    }
    Operator { dim, entries }
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a Operator>) -> Option<Operator> {
    factors.into_iter().fold(None, |acc, f| match acc {
        None => Some(f.clone()),
        Some(acc) => Some(tensor_product(&acc, f)),
    })
}

/// True iff `‖ab − ba‖_max ≤ 1e-9`.
pub fn commutes(a: &Operator, b: &Operator) -> Result<bool> {
    Ok(commutator_residual(a, b)? <= VALIDATION_TOL)
}

pub fn commutator_residual(a: &Operator, b: &Operator) -> Result<f64> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    ab.max_abs_diff(&ba)
}

/// A Hermitian idempotent operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(Operator);

pub fn validate_projector(op: Operator) -> Result<Projector> {
    op.require_hermitian()?;
    let residual = op.matmul(&op)?.max_abs_diff(&op)?;
    if residual > VALIDATION_TOL {
        return Err(Error::NotIdempotent { residual });
    }
    Ok(Projector(op))
}

impl Projector {
    pub fn new(op: Operator) -> Result<Self> {
        validate_projector(op)
    }

    /// Rank-one projector onto the normalized direction of `ket`.
    pub fn onto(ket: &[C64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::OutOfRange { value: 0.0 });
        }
        let unit: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        validate_projector(Operator::outer(&unit)?)
    }

    pub fn identity(dim: usize) -> Self {
        Projector(Operator::identity(dim))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// `I − P`.
    pub fn complement(&self) -> Projector {
        let id = Operator::identity(self.0.dim);
        Projector(id.sub(&self.0).expect("same dimension"))
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round().max(0.0) as usize
    }

    pub fn tensor(&self, other: &Projector) -> Projector {
        Projector(tensor_product(&self.0, &other.0))
    }
}

/// A unit-trace positive semidefinite Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(Operator);

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        op.require_hermitian()?;
        let residual = (op.trace().re - 1.0).abs();
        if residual > VALIDATION_TOL {
            return Err(Error::TraceNotUnit { residual });
        }
        let eig = eigh(&op)?;
        if let Some(&lowest) = eig.values.first() {
            if lowest < -VALIDATION_TOL {
                return Err(Error::NegativeEigenvalue { value: lowest });
            }
        }
        Ok(Self(op))
    }

    /// Normalized pure state `|ψ⟩⟨ψ|`.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let p = Projector::onto(ket)?;
        Ok(Self(p.into_operator()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Operator::identity(dim).scale(c64(1.0 / dim as f64, 0.0)))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator(tensor_product(&self.0, &other.0))
    }

    /// Convex combination `Σ w_i ρ_i`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::OutOfRange { value: 0.0 })?;
        let mut acc = Operator::zeros(first.1.dim());
        for (w, rho) in parts {
            if !(*w >= 0.0) {
                return Err(Error::OutOfRange { value: *w });
            }
            acc = acc.add(&rho.0.scale(c64(*w, 0.0)))?;
        }
        Self::new(acc)
    }
}

/// Eigenvalues (ascending, degeneracies merged) with their eigenprojectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenprojectors: Vec<Projector>,
}

impl SpectralDecomposition {
    /// `Σ λ_j P_j`.
    pub fn reconstruct(&self) -> Operator {
        let dim = self.eigenprojectors[0].dim();
        self.eigenvalues.iter().zip(&self.eigenprojectors).fold(Operator::zeros(dim), |acc, (l, p)| {
            acc.add(&p.op().scale(c64(*l, 0.0))).expect("same dimension")
        })
    }
}

pub fn spectral_decompose(a: &Operator) -> Result<SpectralDecomposition> {
    let eig = eigh(a)?;
    let mut eigenvalues = Vec::new();
    let mut eigenprojectors = Vec::new();
    let mut start = 0;
    while start < eig.values.len() {
        let mut end = start + 1;
        while end < eig.values.len() && eig.values[end] - eig.values[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        let mean = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let mut proj = Operator::zeros(a.dim());
        for v in &eig.vectors[start..end] {
            proj = proj.add(&Operator::outer(v)?)?;
        }
        eigenvalues.push(mean);
        eigenprojectors.push(validate_projector(proj)?);
        start = end;
    }
    Ok(SpectralDecomposition { eigenvalues, eigenprojectors })
}

/// Traces out factor `traced_index` of a tensor-product space whose factor
/// dimensions are `subsystem_dims` (first factor most significant).
pub fn partial_trace(rho: &DensityOperator, subsystem_dims: &[usize], traced_index: usize) -> Result<DensityOperator> {
    let reduced = partial_trace_op(rho.op(), subsystem_dims, traced_index)?;
    DensityOperator::new(reduced)
}

pub(crate) fn partial_trace_op(op: &Operator, subsystem_dims: &[usize], traced_index: usize) -> Result<Operator> {
    check_factorization(op.dim(), subsystem_dims)?;
    if traced_index >= subsystem_dims.len() {
        return Err(Error::BadIndex { index: traced_index, len: subsystem_dims.len() });
    }
    let left: usize = subsystem_dims[..traced_index].iter().product();
    let mid = subsystem_dims[traced_index];
    let right: usize = subsystem_dims[traced_index + 1..].iter().product();
    let out_dim = left * right;
    let n = op.dim();
    let mut entries = vec![C64::default(); out_dim * out_dim];
    for l1 in 0..left {
        for r1 in 0..right {
            let row = l1 * right + r1;
            for l2 in 0..left {
                for r2 in 0..right {
                    let col = l2 * right + r2;
                    let mut acc = C64::default();
                    for t in 0..mid {
                        let i = (l1 * mid + t) * right + r1;
                        let j = (l2 * mid + t) * right + r2;
                        acc += op.entries[i * n + j];
                    }
                    entries[row * out_dim + col] = acc;
                }
            }
        }
    }
    Operator::new(out_dim, entries)
}

/// Reduced state of the single factor `keep`, tracing out every other factor.
pub fn reduced_state(rho: &DensityOperator, subsystem_dims: &[usize], keep: usize) -> Result<DensityOperator> {
    check_factorization(rho.dim(), subsystem_dims)?;
    if keep >= subsystem_dims.len() {
        return Err(Error::BadIndex { index: keep, len: subsystem_dims.len() });
    }
    let mut dims = subsystem_dims.to_vec();
    let mut op = rho.op().clone();
    let mut target = keep;
    // trace from the back so earlier indices stay valid
    for idx in (0..dims.len()).rev() {
        if idx == target {
            continue;
        }
        op = partial_trace_op(&op, &dims, idx)?;
        dims.remove(idx);
        if idx < target {
            target -= 1;
        }
    }
    DensityOperator::new(op)
}

fn check_factorization(dim: usize, subsystem_dims: &[usize]) -> Result<()> {
    let product: usize = subsystem_dims.iter().product();
    if subsystem_dims.is_empty() || subsystem_dims.contains(&0) || product != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: product });
    }
    Ok(())
}

/// Real part of `Tr(ρ · F_1 F_2 … F_k)`; an empty factor list gives `Tr ρ`.
pub fn trace_product(rho: &DensityOperator, factors: &[&Operator]) -> Result<f64> {
    Ok(trace_product_complex(rho.op(), factors)?.re)
}

/// Like [`trace_product`] for mutually commuting projectors, where the
/// product is itself a projector and the trace must be real.
pub fn trace_commuting_projectors(rho: &DensityOperator, factors: &[&Projector]) -> Result<f64> {
    let ops: Vec<&Operator> = factors.iter().map(|p| p.op()).collect();
    let z = trace_product_complex(rho.op(), &ops)?;
    if z.im.abs() > VALIDATION_TOL {
        return Err(Error::NonRealResult { imag: z.im });
    }
    Ok(z.re)
}

fn trace_product_complex(rho: &Operator, factors: &[&Operator]) -> Result<C64> {
    let n = rho.dim();
    let Some((first, rest)) = factors.split_first() else {
        return Ok(rho.trace());
    };
    rho.check_dim(first)?;
    let mut prod = (*first).clone();
    for f in rest {
        prod = prod.matmul(f)?;
    }
    // Tr(ρM) = Σ_ij ρ_ij M_ji
    let mut acc = C64::default();
    for i in 0..n {
        for j in 0..n {
            acc += rho.entries[i * n + j] * prod.entries[j * n + i];
        }
    }
    Ok(acc)
}
