//! Random-variables representations of a (projector set, state) pair.
//!
//! Each projector becomes a `{0,1}` variable. Quantum mechanics fixes the
//! probability that all variables of a mutually commuting subset equal 1,
//! `Tr(ρ P_j P_k … P_l)`; nothing is said about subsets containing a
//! noncommuting pair. The representation is complete when a single joint
//! distribution over all variables reproduces every fixed probability, which
//! is exactly the existence of a noncontextual hidden-variables model.
//!
//! Completeness is decided by linear feasibility over the `2^n` atoms of the
//! base variables (complements are bit negations, not separate atoms).
//! Quadrilateral inequalities over defined pairs are necessary conditions and
//! double as human-readable incompleteness certificates.

use std::collections::BTreeMap;

use crate::classical_prob::{quadrilateral_check, JointTable, PairMarginals};
use crate::error::{Error, Result};
use crate::hilbert::{commutes, trace_commuting_projectors, DensityOperator, Projector, VALIDATION_TOL};
use crate::lp::{self, LpOutcome, LpProblem};

/// Atom-count cap: at most this many base variables.
pub const MAX_BASE_VARIABLES: usize = 20;
/// Default cap on the size of commuting subsets whose probabilities are computed.
pub const DEFAULT_MAX_SUBSET: usize = 4;
/// Band around each quantum marginal in the feasibility program.
pub const MARGINAL_BAND: f64 = 1e-9;
/// A witness must reproduce every defined marginal to this accuracy.
pub const WITNESS_TOL: f64 = 1e-7;
/// Quadrilateral slacks below `-VIOLATION_TOL` count as violations.
pub const VIOLATION_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct LabeledProjector {
    pub label: String,
    pub projector: Projector,
}

impl LabeledProjector {
    pub fn new(label: impl Into<String>, projector: Projector) -> Self {
        Self { label: label.into(), projector }
    }
}

/// Symmetric commutation relation with every node adjacent to itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutationGraph {
    n: usize,
    adj: Vec<bool>,
}

impl CommutationGraph {
    pub fn build(projectors: &[&Projector]) -> Result<Self> {
        let n = projectors.len();
        let mut adj = vec![false; n * n];
        for i in 0..n {
            adj[i * n + i] = true;
            for j in i + 1..n {
                let c = commutes(projectors[i].op(), projectors[j].op())?;
                adj[i * n + j] = c;
                adj[j * n + i] = c;
            }
        }
        Ok(Self { n, adj })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn commute(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }
}

/// One random variable of the representation.
#[derive(Debug, Clone)]
pub struct Variable {
    pub label: String,
    pub projector: Projector,
    /// Index of the variable holding `I − P`.
    pub complement: usize,
    /// Base variable this one is expressed through.
    pub base: usize,
    /// True when this variable is the negation of its base variable.
    pub negated: bool,
}

#[derive(Debug, Clone)]
pub struct RvrModel {
    variables: Vec<Variable>,
    aliases: Vec<(String, usize)>,
    base: Vec<usize>,
    rho: DensityOperator,
    graph: CommutationGraph,
    defined: BTreeMap<Vec<usize>, f64>,
    max_subset: usize,
}

/// A quadrilateral `d(a1,b2) + d(b2,a2) + d(a2,b1) − d(a1,b1)` over variable indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrilateralSlack {
    /// `[a1, b1, b2, a2]`
    pub vars: [usize; 4],
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Quadrilateral(QuadrilateralSlack),
    /// Farkas multipliers per constraint; the empty subset is normalization.
    Farkas { terms: Vec<(Vec<usize>, f64)>, margin: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityResult {
    /// `witness` is a joint table over the base variables (bit `j` = base variable `j`).
    Complete { witness: JointTable, max_residual: f64 },
    Incomplete { certificate: Certificate },
}

impl FeasibilityResult {
    pub fn is_complete(&self) -> bool {
        matches!(self, FeasibilityResult::Complete { .. })
    }
}

fn same_projector(a: &Projector, b: &Projector) -> bool {
    a.op().max_abs_diff(b.op()).is_ok_and(|d| d <= VALIDATION_TOL)
}

pub fn build_rvr(projectors: Vec<LabeledProjector>, rho: &DensityOperator, max_subset: usize) -> Result<RvrModel> {
    if max_subset < 2 {
        return Err(Error::OutOfRange { value: max_subset as f64 });
    }
    for p in &projectors {
        if p.projector.dim() != rho.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), found: p.projector.dim() });
        }
    }

    let mut vars: Vec<(String, Projector)> = Vec::new();
    let mut aliases = Vec::new();
    for LabeledProjector { label, projector } in projectors {
        match vars.iter().position(|(_, q)| same_projector(q, &projector)) {
            Some(i) => aliases.push((label, i)),
            None => vars.push((label, projector)),
        }
    }
    let mut complement = vec![usize::MAX; vars.len()];
    let mut i = 0;
    while i < vars.len() {
        if complement[i] == usize::MAX {
            let comp = vars[i].1.complement();
            let j = match vars.iter().position(|(_, q)| same_projector(q, &comp)) {
                Some(j) => j,
                None => {
                    vars.push((format!("~{}", vars[i].0), comp));
                    complement.push(usize::MAX);
                    vars.len() - 1
                }
            };
            complement[i] = j;
            complement[j] = i;
        }
        i += 1;
    }

    let mut base = Vec::new();
    let mut base_of = vec![(usize::MAX, false); vars.len()];
    for i in 0..vars.len() {
        if base_of[i].0 == usize::MAX {
            base_of[i] = (base.len(), false);
            base_of[complement[i]] = (base.len(), true);
            base.push(i);
        }
    }

    let variables: Vec<Variable> = vars
        .into_iter()
        .enumerate()
        .map(|(i, (label, projector))| Variable {
            label,
            projector,
            complement: complement[i],
            base: base_of[i].0,
            negated: base_of[i].1,
        })
        .collect();

    let refs: Vec<&Projector> = variables.iter().map(|v| &v.projector).collect();
    let graph = CommutationGraph::build(&refs)?;

    let mut model = RvrModel {
        variables,
        aliases,
        base,
        rho: rho.clone(),
        graph,
        defined: BTreeMap::new(),
        max_subset,
    };
    let mut subsets = Vec::new();
    model.collect_subsets(&mut Vec::new(), 0, &mut subsets);
    for subset in subsets {
        let factors: Vec<&Projector> = subset.iter().map(|&i| &model.variables[i].projector).collect();
        let raw = trace_commuting_projectors(&model.rho, &factors)?;
        if !(-VALIDATION_TOL..=1.0 + VALIDATION_TOL).contains(&raw) {
            return Err(Error::OutOfRange { value: raw });
        }
        model.defined.insert(subset, raw.clamp(0.0, 1.0));
    }
    Ok(model)
}

impl RvrModel {
    /// Commuting subsets without complementary pairs (those are identically 0).
    fn collect_subsets(&self, current: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
        for v in start..self.variables.len() {
            let ok = current
                .iter()
                .all(|&u| self.graph.commute(u, v) && self.variables[u].complement != v);
            if !ok {
                continue;
            }
            current.push(v);
            out.push(current.clone());
            if current.len() < self.max_subset {
                self.collect_subsets(current, v + 1, out);
            }
            current.pop();
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn label(&self, var: usize) -> &str {
        &self.variables[var].label
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.variables
            .iter()
            .position(|v| v.label == label)
            .or_else(|| self.aliases.iter().find(|(l, _)| l == label).map(|&(_, i)| i))
    }

    /// Input labels merged into an earlier identical projector.
    pub fn aliases(&self) -> &[(String, usize)] {
        &self.aliases
    }

    pub fn num_base(&self) -> usize {
        self.base.len()
    }

    pub fn base_variables(&self) -> &[usize] {
        &self.base
    }

    pub fn graph(&self) -> &CommutationGraph {
        &self.graph
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn max_subset(&self) -> usize {
        self.max_subset
    }

    /// Sorted variable subsets with their quantum probabilities.
    pub fn defined(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.defined
    }

    /// Probability that every variable of `subset` is 1, if quantum mechanics defines it.
    pub fn probability(&self, subset: &[usize]) -> Option<f64> {
        let mut key = subset.to_vec();
        key.sort_unstable();
        key.dedup();
        if key.is_empty() {
            return Some(1.0);
        }
        self.defined.get(&key).copied()
    }

    /// Singles for every variable and the defined pairs.
    pub fn pair_marginals(&self) -> Result<PairMarginals> {
        let singles = (0..self.variables.len()).map(|i| self.defined[&vec![i]]).collect();
        let pairs = self.defined.iter().filter(|(k, _)| k.len() == 2).map(|(k, &p)| ((k[0], k[1]), p));
        PairMarginals::new(singles, pairs)
    }

    /// Worst violation of `p(S∖j) = p(S) + p(S∖j ∪ {j̄})` over defined subsets.
    pub fn marginal_consistency_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (subset, &p) in &self.defined {
            for (pos, &j) in subset.iter().enumerate() {
                let mut rest = subset.clone();
                rest.remove(pos);
                let mut swapped = rest.clone();
                swapped.push(self.variables[j].complement);
                let (Some(p_rest), Some(p_swapped)) = (self.probability(&rest), self.probability(&swapped)) else {
                    continue;
                };
                worst = worst.max((p_rest - p - p_swapped).abs());
            }
        }
        worst
    }

    fn atom_matches(&self, atom: usize, subset: &[usize]) -> bool {
        subset.iter().all(|&v| {
            let var = &self.variables[v];
            (atom >> var.base & 1 == 1) != var.negated
        })
    }

    /// Marginal of the base-variable table `table` on `subset` being all ones.
    pub fn table_probability(&self, table: &JointTable, subset: &[usize]) -> f64 {
        table
            .probs()
            .iter()
            .enumerate()
            .filter(|(atom, _)| self.atom_matches(*atom, subset))
            .map(|(_, p)| p)
            .sum()
    }

    /// Defined subsets made of base variables only. Every other defined
    /// marginal follows from these by inclusion-exclusion.
    pub fn base_subsets(&self) -> Vec<&[usize]> {
        self.defined.keys().filter(|s| s.iter().all(|&v| !self.variables[v].negated)).map(Vec::as_slice).collect()
    }

    /// Deterministic-assignment vertices and the marginal target in the
    /// coordinates of [`RvrModel::base_subsets`], for exact hull checks.
    ///
    /// Complement coordinates are left out on purpose: they tie the target
    /// to affine identities such as `p(a) + p(ā) = 1` that rounding breaks
    /// at the last bit, which an exact check would report as infeasible.
    pub fn marginal_polytope(&self) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        self.check_size(12)?;
        let subsets = self.base_subsets();
        let vertices = (0..1usize << self.base.len())
            .map(|atom| subsets.iter().map(|s| if self.atom_matches(atom, s) { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok((vertices, subsets.iter().map(|s| self.defined[*s]).collect()))
    }

    fn check_size(&self, limit: usize) -> Result<()> {
        if self.base.len() > limit {
            return Err(Error::TooManyVariables { count: self.base.len(), limit });
        }
        Ok(())
    }

    /// Feasibility program: atoms ≥ 0, Σ atoms = 1, one banded row per defined marginal.
    pub fn feasibility_problem(&self) -> Result<(LpProblem, Vec<Vec<usize>>)> {
        self.banded_problem(MARGINAL_BAND)
    }

    fn banded_problem(&self, band: f64) -> Result<(LpProblem, Vec<Vec<usize>>)> {
        self.check_size(MAX_BASE_VARIABLES)?;
        let atoms = 1usize << self.base.len();
        let mut problem = LpProblem::new(atoms)?;
        let mut keys = Vec::with_capacity(self.defined.len() + 1);
        problem.add_equality(vec![1.0; atoms], 1.0, band)?;
        keys.push(Vec::new());
        for (subset, &p) in &self.defined {
            let row = (0..atoms).map(|a| if self.atom_matches(a, subset) { 1.0 } else { 0.0 }).collect();
            problem.add_equality(row, p, band)?;
            keys.push(subset.clone());
        }
        Ok((problem, keys))
    }
}

pub fn completeness_lp(model: &RvrModel) -> Result<FeasibilityResult> {
    let (problem, keys) = model.feasibility_problem()?;
    match lp::solve_feasibility(&problem)? {
        LpOutcome::Feasible { point, .. } => {
            let residual = |w: &JointTable| {
                model.defined.iter().map(|(s, &p)| (model.table_probability(w, s) - p).abs()).fold(0.0, f64::max)
            };
            let mut witness = JointTable::normalized(model.num_base(), point)?;
            let mut max_residual = residual(&witness);
            // the banded vertex tends to sit on a band edge; an unbanded
            // re-solve usually lands on the exact marginals
            if let LpOutcome::Feasible { point, .. } = lp::solve_feasibility(&model.banded_problem(0.0)?.0)? {
                let exact = JointTable::normalized(model.num_base(), point)?;
                let r = residual(&exact);
                if r < max_residual {
                    witness = exact;
                    max_residual = r;
                }
            }
            if max_residual > WITNESS_TOL {
                return Err(Error::NumericallyAmbiguous { objective: max_residual });
            }
            Ok(FeasibilityResult::Complete { witness, max_residual })
        }
        LpOutcome::Infeasible { certificate, .. } => {
            if let Some(q) = kochen_specker_witness(model)? {
                return Ok(FeasibilityResult::Incomplete { certificate: Certificate::Quadrilateral(q) });
            }
            let terms = keys.into_iter().zip(certificate.multipliers).filter(|(_, y)| *y != 0.0).collect();
            Ok(FeasibilityResult::Incomplete { certificate: Certificate::Farkas { terms, margin: certificate.margin } })
        }
        LpOutcome::Ambiguous { phase1_objective } => Err(Error::NumericallyAmbiguous { objective: phase1_objective }),
    }
}

/// Every ordered quadruple of distinct variables whose four cycle pairs are
/// defined, sorted by ascending slack (ties by index order).
pub fn scan_quadrilaterals(model: &RvrModel) -> Result<Vec<QuadrilateralSlack>> {
    let m = model.pair_marginals()?;
    let n = model.variables.len();
    let mut neighbors = vec![Vec::new(); n];
    for (j, k) in m.declared_pairs() {
        neighbors[j].push(k);
        neighbors[k].push(j);
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    let mut out = Vec::new();
    for a1 in 0..n {
        for &b1 in &neighbors[a1] {
            for &b2 in &neighbors[a1] {
                if b2 == b1 {
                    continue;
                }
                for &a2 in &neighbors[b1] {
                    if a2 == a1 || a2 == b2 || !m.is_declared(b2, a2) {
                        continue;
                    }
                    let slack = quadrilateral_check(&m, a1, b1, b2, a2)?;
                    out.push(QuadrilateralSlack { vars: [a1, b1, b2, a2], slack });
                }
            }
        }
    }
    out.sort_by(|x, y| x.slack.total_cmp(&y.slack).then(x.vars.cmp(&y.vars)));
    Ok(out)
}

/// The most violated quadrilateral, if any slack is below `-1e-7`.
///
/// Such a certificate rules out every noncontextual hidden-variables model
/// for this state and projector set.
pub fn kochen_specker_witness(model: &RvrModel) -> Result<Option<QuadrilateralSlack>> {
    Ok(scan_quadrilaterals(model)?.into_iter().next().filter(|q| q.slack < -VIOLATION_TOL))
}
