//! Linear feasibility: does `{x ≥ 0 : |A x − b| ≤ band}` have a point?
//!
//! The production path is a dense two-phase primal simplex with Bland's
//! anti-cycling rule. Phase 1 minimizes the total band violation; phase 2
//! pivots any zero-level artificial variables out of the basis so the
//! returned point is a basic solution of the original system. When phase 1
//! ends strictly positive, the phase-1 duals give a Farkas certificate.
//!
//! [`oracle`] holds the exact rational referee used in tests.

pub mod oracle;

use crate::error::{Error, Result};

/// Phase-1 optimum at or below this means feasible, above it infeasible.
pub const FEASIBILITY_THRESHOLD: f64 = 1e-7;
/// Half-width of the band around the threshold reported as ambiguous.
pub const AMBIGUITY_HALF_WIDTH: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

/// Equality constraints with per-row tolerance bands over nonnegative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    num_vars: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    bands: Vec<f64>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::InvalidProblem { reason: "no variables".into() });
        }
        Ok(Self { num_vars, rows: Vec::new(), rhs: Vec::new(), bands: Vec::new() })
    }

    /// Adds `coeffs · x = rhs` relaxed to `|coeffs · x − rhs| ≤ band`.
    pub fn add_equality(&mut self, coeffs: Vec<f64>, rhs: f64, band: f64) -> Result<()> {
        if coeffs.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, found: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) || !rhs.is_finite() {
            return Err(Error::InvalidProblem { reason: "non-finite coefficient".into() });
        }
        if !(band >= 0.0) || !band.is_finite() {
            return Err(Error::InvalidProblem { reason: format!("band {band}") });
        }
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        self.bands.push(band);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> (&[f64], f64, f64) {
        (&self.rows[i], self.rhs[i], self.bands[i])
    }

    /// Largest amount by which `x` exceeds any constraint band.
    pub fn band_violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .zip(&self.bands)
            .map(|((row, b), band)| {
                let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
                ((lhs - b).abs() - band).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Farkas multipliers `y` (one per constraint, `max |y_i| = 1`) with
/// `yᵀA ≥ 0` and `yᵀb + Σ |y_i| band_i = −margin < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible { point: Vec<f64>, max_residual: f64, phase1_objective: f64 },
    Infeasible { certificate: FarkasCertificate, phase1_objective: f64 },
    Ambiguous { phase1_objective: f64 },
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, LpOutcome::Infeasible { .. })
    }

    pub fn phase1_objective(&self) -> f64 {
        match self {
            LpOutcome::Feasible { phase1_objective, .. }
            | LpOutcome::Infeasible { phase1_objective, .. }
            | LpOutcome::Ambiguous { phase1_objective } => *phase1_objective,
        }
    }
}

/// Checks a certificate against the problem and returns its margin.
///
/// Returns `None` if some column of `yᵀA` is negative beyond `1e-9`, in
/// which case the multipliers prove nothing.
pub fn verify_farkas(problem: &LpProblem, multipliers: &[f64]) -> Option<f64> {
    if multipliers.len() != problem.rows.len() {
        return None;
    }
    for col in 0..problem.num_vars {
        let ya: f64 = multipliers.iter().zip(&problem.rows).map(|(y, row)| y * row[col]).sum();
        if ya < -PIVOT_TOL {
            return None;
        }
    }
    let yb: f64 = multipliers.iter().zip(&problem.rhs).map(|(y, b)| y * b).sum();
    let slack: f64 = multipliers.iter().zip(&problem.bands).map(|(y, d)| y.abs() * d).sum();
    Some(-(yb + slack))
}

/// Decides feasibility of `problem`.
pub fn solve_feasibility(problem: &LpProblem) -> Result<LpOutcome> {
    if problem.rows.is_empty() {
        return Ok(LpOutcome::Feasible { point: vec![0.0; problem.num_vars], max_residual: 0.0, phase1_objective: 0.0 });
    }

    // all-zero rows: either vacuous or trivially infeasible
    let mut active = Vec::with_capacity(problem.rows.len());
    for (i, row) in problem.rows.iter().enumerate() {
        if row.iter().all(|&a| a == 0.0) {
            let excess = problem.rhs[i].abs() - problem.bands[i];
            if excess > 0.0 {
                let mut multipliers = vec![0.0; problem.rows.len()];
                multipliers[i] = -problem.rhs[i].signum();
                return Ok(LpOutcome::Infeasible {
                    certificate: FarkasCertificate { multipliers, margin: excess },
                    phase1_objective: excess,
                });
            }
        } else {
            active.push(i);
        }
    }

    let mut tableau = Tableau::build(problem, &active);
    tableau.run_phase1()?;
    let w = tableau.objective();

    if (w - FEASIBILITY_THRESHOLD).abs() <= AMBIGUITY_HALF_WIDTH {
        return Ok(LpOutcome::Ambiguous { phase1_objective: w });
    }
    if w < FEASIBILITY_THRESHOLD {
        tableau.purge_artificials();
        let mut point = tableau.primal(problem.num_vars);
        for v in &mut point {
            *v = v.max(0.0);
        }
        let max_residual = problem.band_violation(&point);
        return Ok(LpOutcome::Feasible { point, max_residual, phase1_objective: w });
    }

    let mut multipliers = vec![0.0; problem.rows.len()];
    for (std_row, &(orig, _)) in tableau.row_origin.iter().enumerate() {
        multipliers[orig] -= tableau.dual(std_row) * tableau.row_sign[std_row];
    }
    let scale = multipliers.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if scale > 0.0 {
        multipliers.iter_mut().for_each(|y| *y /= scale);
    }
    match verify_farkas(problem, &multipliers) {
        Some(margin) if margin > FEASIBILITY_THRESHOLD => Ok(LpOutcome::Infeasible {
            certificate: FarkasCertificate { multipliers, margin },
            phase1_objective: w,
        }),
        _ => Ok(LpOutcome::Ambiguous { phase1_objective: w }),
    }
}

/// Sparse coefficients, rhs, and (original row, sign).
type StdRow = (Vec<(usize, f64)>, f64, (usize, i8));

/// Dense tableau over `[x | slacks | artificials | rhs]`.
struct Tableau {
    cells: Vec<Vec<f64>>,
    /// reduced costs of the phase-1 objective, last entry is `−w`
    cost: Vec<f64>,
    basis: Vec<usize>,
    first_artificial: usize,
    /// (original constraint, +1 upper / -1 lower / 0 exact) per standard row
    row_origin: Vec<(usize, i8)>,
    /// ±1 applied to make the right-hand side nonnegative
    row_sign: Vec<f64>,
}

impl Tableau {
    fn build(problem: &LpProblem, active: &[usize]) -> Self {
        let n = problem.num_vars;
        let mut std_rows: Vec<StdRow> = Vec::new();
        let mut slack = n;
        for &i in active {
            let band = problem.bands[i];
            if band == 0.0 {
                std_rows.push((Vec::new(), problem.rhs[i], (i, 0)));
            } else {
                std_rows.push((vec![(slack, 1.0)], problem.rhs[i] + band, (i, 1)));
                std_rows.push((vec![(slack + 1, -1.0)], problem.rhs[i] - band, (i, -1)));
                slack += 2;
            }
        }
        let first_artificial = slack;
        let m = std_rows.len();
        let width = first_artificial + m + 1;
        let mut cells = vec![vec![0.0; width]; m];
        let mut row_origin = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (r, (extra, rhs, origin)) in std_rows.into_iter().enumerate() {
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            let coeffs = &problem.rows[origin.0];
            for j in 0..n {
                cells[r][j] = sign * coeffs[j];
            }
            for (j, v) in extra {
                cells[r][j] = sign * v;
            }
            cells[r][first_artificial + r] = 1.0;
            cells[r][width - 1] = sign * rhs;
            row_origin.push(origin);
            row_sign.push(sign);
        }
        let mut cost = vec![0.0; width];
        for row in &cells {
            for j in 0..first_artificial {
                cost[j] -= row[j];
            }
            cost[width - 1] -= row[width - 1];
        }
        let basis = (0..m).map(|r| first_artificial + r).collect();
        Self { cells, cost, basis, first_artificial, row_origin, row_sign }
    }

    fn width(&self) -> usize {
        self.cost.len()
    }

    fn objective(&self) -> f64 {
        -self.cost[self.width() - 1]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width();
        let p = self.cells[row][col];
        for v in &mut self.cells[row] {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (r, cells) in self.cells.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = cells[col];
            if f != 0.0 {
                for j in 0..width {
                    cells[j] -= f * pivot_row[j];
                }
                cells[col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (c, p) in self.cost.iter_mut().zip(&pivot_row).take(width) {
                *c -= f * p;
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    fn run_phase1(&mut self) -> Result<()> {
        let rhs = self.width() - 1;
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index improving column, artificials never re-enter
            let Some(col) = (0..self.first_artificial).find(|&j| self.cost[j] < -REDUCED_COST_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.cells.iter().enumerate() {
                let a = row[col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = row[rhs].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12 && self.basis[r] < self.basis[best])
                        {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            // the phase-1 objective is bounded below, so an improving column always has a pivot row
            let Some((row, _)) = leave else {
                return Err(Error::InvalidProblem { reason: "unbounded phase-1 ray".into() });
            };
            self.pivot(row, col);
        }
        Err(Error::NumericallyAmbiguous { objective: self.objective() })
    }

    fn purge_artificials(&mut self) {
        for r in 0..self.cells.len() {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            if let Some(col) = (0..self.first_artificial).find(|&j| self.cells[r][j].abs() > PIVOT_TOL) {
                self.pivot(r, col);
            }
        }
    }

    fn primal(&self, num_vars: usize) -> Vec<f64> {
        let rhs = self.width() - 1;
        let mut x = vec![0.0; num_vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < num_vars {
                x[b] = self.cells[r][rhs];
            }
        }
        x
    }

    /// Phase-1 dual `y_r = c_Bᵀ B⁻¹ e_r`, read off the artificial columns.
    fn dual(&self, std_row: usize) -> f64 {
        let col = self.first_artificial + std_row;
        self.cells
            .iter()
            .zip(&self.basis)
            .filter(|(_, &b)| b >= self.first_artificial)
            .map(|(row, _)| row[col])
            .sum()
    }
}
