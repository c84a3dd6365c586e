//! Probabilities that a quantum state assigns to observables.
//!
//! For a finite-dimensional observable the characteristic-function form of
//! the distribution collapses to its spectral form: the weight of eigenvalue
//! `λ_j` is `Tr(ρ P_j)`. Commuting families get a genuine joint distribution
//! built from products of eigenprojectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::{
    c64, commutator_residual, eigh, spectral_decompose, trace_commuting_projectors, DensityOperator, Operator,
    Projector, DEGENERACY_GAP, VALIDATION_TOL, C64,
};

/// Values in `[-ROUNDING_FLOOR, 0)` are rounding noise and clamp to zero.
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// Seed for the random linear combination used by [`simultaneous_eigenbasis`].
pub const EIGENBASIS_SEED: u64 = 0x5eed_0b5e;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    /// Strictly ascending outcome values.
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn weight_of(&self, value: f64) -> f64 {
        self.support
            .iter()
            .position(|&s| (s - value).abs() < DEGENERACY_GAP)
            .map_or(0.0, |i| self.weights[i])
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(a, p)| a * p).sum()
    }
}

/// Joint distribution of mutually commuting observables.
///
/// Cell index is mixed-radix with variable 0 varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutingJoint {
    pub supports: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl CommutingJoint {
    pub fn n_vars(&self) -> usize {
        self.supports.len()
    }

    pub fn index_of(&self, outcome: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (o, s) in outcome.iter().zip(&self.supports) {
            idx += o * stride;
            stride *= s.len();
        }
        idx
    }

    pub fn outcome_of(&self, mut index: usize) -> Vec<usize> {
        self.supports
            .iter()
            .map(|s| {
                let o = index % s.len();
                index /= s.len();
                o
            })
            .collect()
    }

    /// Probability of one outcome index per variable.
    pub fn prob(&self, outcome: &[usize]) -> f64 {
        self.probs[self.index_of(outcome)]
    }

    pub fn marginal(&self, var: usize) -> DiscreteDistribution {
        let mut weights = vec![0.0; self.supports[var].len()];
        for (i, p) in self.probs.iter().enumerate() {
            weights[self.outcome_of(i)[var]] += p;
        }
        DiscreteDistribution { support: self.supports[var].clone(), weights }
    }
}

fn clamp_unit(value: f64) -> Result<f64> {
    if !(-VALIDATION_TOL..=1.0 + VALIDATION_TOL).contains(&value) {
        return Err(Error::OutOfRange { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

fn clamp_cell(value: f64) -> Result<f64> {
    if value < -ROUNDING_FLOOR {
        return Err(Error::NegativeProbability { value });
    }
    Ok(value.max(0.0))
}

fn check_dims(rho: &DensityOperator, dim: usize) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: dim });
    }
    Ok(())
}

pub fn observable_distribution(rho: &DensityOperator, a: &Operator) -> Result<DiscreteDistribution> {
    check_dims(rho, a.dim())?;
    let spectral = spectral_decompose(a)?;
    let weights = spectral
        .eigenprojectors
        .iter()
        .map(|p| trace_commuting_projectors(rho, &[p]).and_then(clamp_cell))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteDistribution { support: spectral.eigenvalues, weights })
}

/// `Tr(ρP)`, the probability that the projector takes the value 1.
pub fn projector_probability(rho: &DensityOperator, p: &Projector) -> Result<f64> {
    check_dims(rho, p.dim())?;
    clamp_unit(trace_commuting_projectors(rho, &[p])?)
}

fn require_commuting(ops: &[&Operator]) -> Result<()> {
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            if commutator_residual(ops[i], ops[j])? > VALIDATION_TOL {
                return Err(Error::NotCommuting { first: i, second: j });
            }
        }
    }
    Ok(())
}

pub fn commuting_joint(rho: &DensityOperator, observables: &[Operator]) -> Result<CommutingJoint> {
    for a in observables {
        check_dims(rho, a.dim())?;
        a.require_hermitian()?;
    }
    let refs: Vec<&Operator> = observables.iter().collect();
    require_commuting(&refs)?;
    let spectra = observables.iter().map(spectral_decompose).collect::<Result<Vec<_>>>()?;
    let supports: Vec<Vec<f64>> = spectra.iter().map(|s| s.eigenvalues.clone()).collect();
    let mut joint = CommutingJoint { probs: Vec::new(), supports };
    let cells: usize = joint.supports.iter().map(Vec::len).product();
    joint.probs = (0..cells)
        .map(|cell| {
            let outcome = joint.outcome_of(cell);
            let factors: Vec<&Projector> =
                outcome.iter().zip(&spectra).map(|(&o, s)| &s.eigenprojectors[o]).collect();
            trace_commuting_projectors(rho, &factors).and_then(clamp_cell)
        })
        .collect::<Result<_>>()?;
    Ok(joint)
}

/// Probability that every projector in `subset` takes the value 1.
pub fn marginal_probability(rho: &DensityOperator, projectors: &[Projector], subset: &[usize]) -> Result<f64> {
    let chosen = subset
        .iter()
        .map(|&i| projectors.get(i).ok_or(Error::BadIndex { index: i, len: projectors.len() }))
        .collect::<Result<Vec<_>>>()?;
    for p in &chosen {
        check_dims(rho, p.dim())?;
    }
    for i in 0..chosen.len() {
        for j in i + 1..chosen.len() {
            if commutator_residual(chosen[i].op(), chosen[j].op())? > VALIDATION_TOL {
                return Err(Error::NotCommuting { first: subset[i], second: subset[j] });
            }
        }
    }
    clamp_unit(trace_commuting_projectors(rho, &chosen)?)
}

/// A common eigenvector of a commuting family with its eigenvalue under each member.
#[derive(Debug, Clone)]
pub struct JointEigenvector {
    pub vector: Vec<C64>,
    pub eigenvalues: Vec<f64>,
}

/// Common eigenbasis of commuting Hermitian operators.
///
/// Diagonalizes a random real combination of the family (fixed seed), then
/// re-diagonalizes each operator inside any remaining degenerate block so
/// accidental degeneracies of the combination cannot mix joint eigenspaces.
pub fn simultaneous_eigenbasis(observables: &[Operator]) -> Result<Vec<JointEigenvector>> {
    let first = observables.first().ok_or(Error::OutOfRange { value: 0.0 })?;
    let dim = first.dim();
    for a in observables {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
        }
        a.require_hermitian()?;
    }
    let refs: Vec<&Operator> = observables.iter().collect();
    require_commuting(&refs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(EIGENBASIS_SEED);
    let mut combo = Operator::zeros(dim);
    for a in observables {
        let w: f64 = rng.random_range(0.5..1.5);
        combo = combo.add(&a.scale(c64(w, 0.0)))?;
    }
    let eig = eigh(&combo)?;

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && eig.values[end] - eig.values[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        let mut block: Vec<Vec<C64>> = eig.vectors[start..end].to_vec();
        for a in observables {
            block = refine_block(a, block)?;
        }
        basis.extend(block);
        start = end;
    }

    Ok(basis
        .into_iter()
        .map(|v| {
            let eigenvalues = observables.iter().map(|a| expectation(a, &v).re).collect();
            JointEigenvector { vector: v, eigenvalues }
        })
        .collect())
}

fn expectation(a: &Operator, v: &[C64]) -> C64 {
    let n = a.dim();
    let mut acc = C64::default();
    for i in 0..n {
        let row: C64 = (0..n).map(|j| a.entry(i, j) * v[j]).sum();
        acc += v[i].conj() * row;
    }
    acc
}

fn refine_block(a: &Operator, block: Vec<Vec<C64>>) -> Result<Vec<Vec<C64>>> {
    let k = block.len();
    if k == 1 {
        return Ok(block);
    }
    let n = a.dim();
    let av: Vec<Vec<C64>> =
        block.iter().map(|v| (0..n).map(|i| (0..n).map(|j| a.entry(i, j) * v[j]).sum()).collect()).collect();
    let mut restricted = Vec::with_capacity(k * k);
    for u in &block {
        for w in &av {
            restricted.push(u.iter().zip(w).map(|(x, y)| x.conj() * y).sum::<C64>());
        }
    }
    let restricted = Operator::new(k, restricted)?;
    let diag_spread = (0..k).map(|i| restricted.entry(i, i).re).fold(f64::NEG_INFINITY, f64::max)
        - (0..k).map(|i| restricted.entry(i, i).re).fold(f64::INFINITY, f64::min);
    let off = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| restricted.entry(i, j).norm())
        .fold(0.0, f64::max);
    if off <= VALIDATION_TOL && diag_spread <= VALIDATION_TOL {
        return Ok(block);
    }
    let small = eigh(&restricted)?;
    Ok(small
        .vectors
        .iter()
        .map(|coeffs| (0..n).map(|i| coeffs.iter().zip(&block).map(|(c, v)| c * v[i]).sum()).collect())
        .collect())
}

/// Joint distribution assembled from a common eigenbasis: each basis vector
/// `|φ_j⟩` contributes `⟨φ_j|ρ|φ_j⟩` to the cell of its eigenvalue tuple.
pub fn joint_from_eigenbasis(rho: &DensityOperator, observables: &[Operator]) -> Result<CommutingJoint> {
    let basis = simultaneous_eigenbasis(observables)?;
    let mut supports: Vec<Vec<f64>> = vec![Vec::new(); observables.len()];
    for jv in &basis {
        for (s, &l) in supports.iter_mut().zip(&jv.eigenvalues) {
            s.push(l);
        }
    }
    for s in &mut supports {
        s.sort_by(f64::total_cmp);
        s.dedup_by(|a, b| (*a - *b).abs() < DEGENERACY_GAP);
    }
    let mut joint = CommutingJoint { probs: Vec::new(), supports };
    let cells: usize = joint.supports.iter().map(Vec::len).product();
    joint.probs = vec![0.0; cells];
    for jv in &basis {
        let outcome: Vec<usize> = jv
            .eigenvalues
            .iter()
            .zip(&joint.supports)
            .map(|(l, s)| s.iter().position(|x| (x - l).abs() < DEGENERACY_GAP).expect("value in support"))
            .collect();
        let idx = joint.index_of(&outcome);
        joint.probs[idx] += expectation(rho.op(), &jv.vector).re;
    }
    Ok(joint)
}
