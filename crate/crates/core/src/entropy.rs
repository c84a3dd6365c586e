//! Von Neumann entropy and the information inequality `S_j ≤ S ≤ Σ_j S_j`.
//!
//! For Shannon entropies of a genuine joint distribution both sides always
//! hold. For quantum states the right side (subadditivity) still holds but
//! the left side can fail: the singlet has `S = 0` while each spin alone has
//! `S_j = ln 2`. Such a failure requires entanglement.

use crate::error::{Error, Result};
use crate::hilbert::{c64, eigh, reduced_state, DensityOperator, Operator, VALIDATION_TOL};

/// Eigenvalues below this are treated as exact zeros.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
/// Tolerance of the product-form probe.
pub const PRODUCT_TOL: f64 = 1e-6;

pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let eig = eigh(rho.op())?;
    let s: f64 = eig.values.iter().filter(|&&l| l > EIGENVALUE_FLOOR).map(|&l| -l * l.ln()).sum();
    Ok(s.max(0.0))
}

/// `(|↑↓⟩ − |↓↑⟩)/√2`.
pub fn make_singlet() -> DensityOperator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = c64(0.0, 0.0);
    DensityOperator::pure(&[zero, c64(h, 0.0), c64(-h, 0.0), zero]).expect("unit vector")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    /// `S` in nats.
    pub total: f64,
    /// `S_j` in nats, one per subsystem.
    pub subsystems: Vec<f64>,
    /// `min_j (S − S_j)`; negative exactly when the lower bound fails.
    pub lower_bound_slack: f64,
    /// `Σ_j S_j − S`.
    pub subadditivity_slack: f64,
    /// Some `S_j > S + 1e-9`.
    pub violation: bool,
}

pub fn information_inequality_report(rho: &DensityOperator, subsystem_dims: &[usize]) -> Result<EntropyReport> {
    let total = von_neumann_entropy(rho)?;
    let subsystems = (0..subsystem_dims.len())
        .map(|j| von_neumann_entropy(&reduced_state(rho, subsystem_dims, j)?))
        .collect::<Result<Vec<_>>>()?;
    let lower_bound_slack = subsystems.iter().map(|s| total - s).fold(f64::INFINITY, f64::min);
    let subadditivity_slack = subsystems.iter().sum::<f64>() - total;
    Ok(EntropyReport {
        total,
        subsystems,
        lower_bound_slack,
        subadditivity_slack,
        violation: lower_bound_slack < -VALIDATION_TOL,
    })
}

/// Nats to bits, for display.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Transposes the second factor of a bipartite operator.
pub fn partial_transpose(op: &Operator, dims: [usize; 2]) -> Result<Operator> {
    let [d1, d2] = dims;
    if d1 * d2 != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: d1 * d2 });
    }
    let n = op.dim();
    let mut out = vec![c64(0.0, 0.0); n * n];
    for i1 in 0..d1 {
        for i2 in 0..d2 {
            for j1 in 0..d1 {
                for j2 in 0..d2 {
                    out[(i1 * d2 + j2) * n + j1 * d2 + i2] = op.entry(i1 * d2 + i2, j1 * d2 + j2);
                }
            }
        }
    }
    Operator::new(n, out)
}

/// Outcome of the separability probe on a bipartite state.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityProbe {
    /// `max |ρ − ρ_1 ⊗ ρ_2|`; at most [`PRODUCT_TOL`] means the probe found
    /// the one-term decomposition `ρ_1 ⊗ ρ_2`.
    pub product_residual: f64,
    /// Smallest eigenvalue of the partial transpose. Negative beyond
    /// [`PRODUCT_TOL`] proves entanglement; for 2×2 and 2×3 systems the
    /// converse also holds.
    pub min_partial_transpose_eigenvalue: f64,
}

impl SeparabilityProbe {
    pub fn found_decomposition(&self) -> bool {
        self.product_residual <= PRODUCT_TOL
    }

    pub fn entangled(&self) -> bool {
        self.min_partial_transpose_eigenvalue < -PRODUCT_TOL
    }
}

pub fn separability_probe(rho: &DensityOperator, dims: [usize; 2]) -> Result<SeparabilityProbe> {
    let r1 = reduced_state(rho, &dims, 0)?;
    let r2 = reduced_state(rho, &dims, 1)?;
    let product_residual = rho.op().max_abs_diff(r1.tensor(&r2).op())?;
    let pt = partial_transpose(rho.op(), dims)?;
    let min_partial_transpose_eigenvalue = eigh(&pt)?.values[0];
    Ok(SeparabilityProbe { product_residual, min_partial_transpose_eigenvalue })
}
