//! Classical probability over `{0,1}`-valued variables.
//!
//! A [`JointTable`] stores the `2^n` atom probabilities; variable `j` is bit
//! `j` of the atom index (little-endian). [`PairMarginals`] holds only the
//! single and pairwise probabilities that are actually known, and every
//! distance-based inequality refuses to evaluate on an undeclared pair.
//!
//! Sign convention: every check returns a slack, and `slack >= 0` means the
//! inequality holds.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// Normalization tolerance of a joint table.
pub const TABLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    n: usize,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n >= usize::BITS as usize || probs.len() != 1usize << n {
            return Err(Error::InvalidTable { reason: format!("{} atoms for {n} variables", probs.len()) });
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidTable { reason: format!("atom probability {p}") });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TABLE_TOL {
            return Err(Error::InvalidTable { reason: format!("atoms sum to {total}") });
        }
        Ok(Self { n, probs })
    }

    /// Clamps tiny negatives and rescales to unit mass before validating.
    pub fn normalized(n: usize, mut probs: Vec<f64>) -> Result<Self> {
        for p in &mut probs {
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidTable { reason: "zero total mass".into() });
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(n, probs)
    }

    pub fn uniform(n: usize) -> Self {
        let atoms = 1usize << n;
        Self { n, probs: vec![1.0 / atoms as f64; atoms] }
    }

    pub fn point_mass(n: usize, atom: usize) -> Self {
        let mut probs = vec![0.0; 1usize << n];
        probs[atom] = 1.0;
        Self { n, probs }
    }

    /// Independent variables with `P(x_j = 1) = ones[j]`.
    pub fn independent(ones: &[f64]) -> Result<Self> {
        let n = ones.len();
        let probs = (0..1usize << n)
            .map(|atom| {
                ones.iter()
                    .enumerate()
                    .map(|(j, &p)| if atom >> j & 1 == 1 { p } else { 1.0 - p })
                    .product()
            })
            .collect();
        Self::normalized(n, probs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        for (i, &v) in subset.iter().enumerate() {
            if v >= self.n {
                return Err(Error::BadIndex { index: v, len: self.n });
            }
            if subset[..i].contains(&v) {
                return Err(Error::BadIndex { index: v, len: self.n });
            }
        }
        Ok(())
    }

    /// Total mass of atoms whose bits on `subset` equal `values`.
    pub fn marginal(&self, subset: &[usize], values: &[bool]) -> Result<f64> {
        self.check_subset(subset)?;
        if subset.len() != values.len() {
            return Err(Error::BadIndex { index: values.len(), len: subset.len() });
        }
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(atom, _)| subset.iter().zip(values).all(|(&v, &b)| (atom >> v & 1 == 1) == b))
            .map(|(_, p)| p)
            .sum())
    }

    /// Probability that every variable in `subset` equals 1.
    pub fn prob_ones(&self, subset: &[usize]) -> Result<f64> {
        self.marginal(subset, &vec![true; subset.len()])
    }

    /// Joint table of `subset`, renumbered in the order given.
    pub fn marginal_table(&self, subset: &[usize]) -> Result<JointTable> {
        self.check_subset(subset)?;
        let mut probs = vec![0.0; 1usize << subset.len()];
        for (atom, p) in self.probs.iter().enumerate() {
            let sub = subset.iter().enumerate().fold(0, |acc, (i, &v)| acc | (atom >> v & 1) << i);
            probs[sub] += p;
        }
        Ok(JointTable { n: subset.len(), probs })
    }

    /// Singles for every variable plus the listed pairs.
    pub fn pair_marginals(&self, pairs: &[(usize, usize)]) -> Result<PairMarginals> {
        let singles = (0..self.n).map(|j| self.prob_ones(&[j])).collect::<Result<Vec<_>>>()?;
        let mut declared = Vec::with_capacity(pairs.len());
        for &(j, k) in pairs {
            let p = if j == k { singles[j] } else { self.prob_ones(&[j, k])? };
            declared.push(((j, k), p));
        }
        PairMarginals::new(singles, declared)
    }

    /// Pair marginals with every pair declared.
    pub fn all_pair_marginals(&self) -> Result<PairMarginals> {
        let pairs: Vec<_> = (0..self.n).flat_map(|j| (j + 1..self.n).map(move |k| (j, k))).collect();
        self.pair_marginals(&pairs)
    }
}

/// Known single probabilities `p₁(a_j)` and a declared subset of pair probabilities `p₂(a_j a_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMarginals {
    singles: Vec<f64>,
    pairs: BTreeMap<(usize, usize), f64>,
}

impl PairMarginals {
    pub fn new(singles: Vec<f64>, pairs: impl IntoIterator<Item = ((usize, usize), f64)>) -> Result<Self> {
        let n = singles.len();
        if let Some(&p) = singles.iter().find(|p| !(-TABLE_TOL..=1.0 + TABLE_TOL).contains(*p)) {
            return Err(Error::OutOfRange { value: p });
        }
        let mut map = BTreeMap::new();
        for ((j, k), p) in pairs {
            for idx in [j, k] {
                if idx >= n {
                    return Err(Error::BadIndex { index: idx, len: n });
                }
            }
            if j == k {
                continue;
            }
            let (pj, pk) = (singles[j], singles[k]);
            let upper = pj.min(pk) + TABLE_TOL;
            let lower = pj + pk - 1.0 - TABLE_TOL;
            if !(p >= lower.max(-TABLE_TOL) && p <= upper) {
                return Err(Error::OutOfRange { value: p });
            }
            map.insert((j.min(k), j.max(k)), p);
        }
        Ok(Self { singles, pairs: map })
    }

    pub fn n(&self) -> usize {
        self.singles.len()
    }

    pub fn single(&self, j: usize) -> Result<f64> {
        self.singles.get(j).copied().ok_or(Error::BadIndex { index: j, len: self.singles.len() })
    }

    pub fn is_declared(&self, j: usize, k: usize) -> bool {
        j == k || self.pairs.contains_key(&(j.min(k), j.max(k)))
    }

    /// `p₂(a_j a_k)`; the diagonal `j == k` is always known and equals `p₁(a_j)`.
    pub fn pair(&self, j: usize, k: usize) -> Result<f64> {
        self.single(j)?;
        self.single(k)?;
        if j == k {
            return self.single(j);
        }
        self.pairs.get(&(j.min(k), j.max(k))).copied().ok_or(Error::UndeclaredPair(j, k))
    }

    pub fn declared_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.keys().copied()
    }
}

fn raw_distance(m: &PairMarginals, j: usize, k: usize) -> Result<f64> {
    Ok(m.single(j)? + m.single(k)? - 2.0 * m.pair(j, k)?)
}

/// `d(a_j, a_k) = p₁(a_j) + p₁(a_k) − 2 p₂(a_j a_k)`, the probability that the two variables differ.
pub fn distance(m: &PairMarginals, j: usize, k: usize) -> Result<f64> {
    Ok(raw_distance(m, j, k)?.clamp(0.0, 1.0))
}

/// `d(j,k) + d(k,l) − d(j,l)`.
pub fn triangle_check(m: &PairMarginals, j: usize, k: usize, l: usize) -> Result<f64> {
    Ok(raw_distance(m, j, k)? + raw_distance(m, k, l)? - raw_distance(m, j, l)?)
}

/// `d(a1,b2) + d(b2,a2) + d(a2,b1) − d(a1,b1)`.
///
/// Only the four cycle pairs must be declared; the diagonals `(a1,a2)` and
/// `(b1,b2)` are never consulted.
pub fn quadrilateral_check(m: &PairMarginals, a1: usize, b1: usize, b2: usize, a2: usize) -> Result<f64> {
    Ok(raw_distance(m, a1, b2)? + raw_distance(m, b2, a2)? + raw_distance(m, a2, b1)? - raw_distance(m, a1, b1)?)
}

/// Clauser–Horne slack `p(a1) + p(b1) − p(a1b1) − p(a2b1) − p(a1b2) + p(a2b2)`.
///
/// Equals half of `quadrilateral_check(m, a2, b2, b1, a1)`, the quadrilateral
/// whose long side is `(a2, b2)`.
pub fn ch_value(m: &PairMarginals, a1: usize, a2: usize, b1: usize, b2: usize) -> Result<f64> {
    Ok(m.single(a1)? + m.single(b1)? - m.pair(a1, b1)? - m.pair(a2, b1)? - m.pair(a1, b2)? + m.pair(a2, b2)?)
}

fn check_probability(p: f64) -> Result<f64> {
    if !(-TABLE_TOL..=1.0 + TABLE_TOL).contains(&p) {
        return Err(Error::OutOfRange { value: p });
    }
    Ok(p)
}

/// `⟨A⟩ = 2p(a) − 1` for `A = 2a − 1`.
pub fn pm_expectation(p_a: f64) -> Result<f64> {
    Ok(2.0 * check_probability(p_a)? - 1.0)
}

/// `⟨AB⟩ = 4p(ab) − 2p(a) − 2p(b) + 1` for `A = 2a − 1`, `B = 2b − 1`.
pub fn pm_product_expectation(p_a: f64, p_b: f64, p_ab: f64) -> Result<f64> {
    Ok(4.0 * check_probability(p_ab)? - 2.0 * check_probability(p_a)? - 2.0 * check_probability(p_b)? + 1.0)
}

/// The four `±1` product expectations entering CHSH.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshExpectations {
    pub a1b1: f64,
    pub a2b1: f64,
    pub a1b2: f64,
    pub a2b2: f64,
}

impl ChshExpectations {
    /// Expectations from `{0,1}` singles and pairs of a marginal set.
    pub fn from_marginals(m: &PairMarginals, a1: usize, a2: usize, b1: usize, b2: usize) -> Result<Self> {
        let e = |a: usize, b: usize| pm_product_expectation(m.single(a)?, m.single(b)?, m.pair(a, b)?);
        Ok(Self { a1b1: e(a1, b1)?, a2b1: e(a2, b1)?, a1b2: e(a1, b2)?, a2b2: e(a2, b2)? })
    }
}

/// `⟨A1B1⟩ + ⟨A2B1⟩ + ⟨A1B2⟩ − ⟨A2B2⟩`.
pub fn chsh_value(e: &ChshExpectations) -> Result<f64> {
    for v in [e.a1b1, e.a2b1, e.a1b2, e.a2b2] {
        if !(-1.0 - TABLE_TOL..=1.0 + TABLE_TOL).contains(&v) {
            return Err(Error::OutOfRange { value: v });
        }
    }
    Ok(e.a1b1 + e.a2b1 + e.a1b2 - e.a2b2)
}

/// First and second moments of a pair of random variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub a: f64,
    pub b: f64,
    pub a2: f64,
    pub b2: f64,
    pub ab: f64,
}

impl Moments {
    /// Moments of the `±1` versions of variables `j` and `k` of a table.
    pub fn pm_from_table(t: &JointTable, j: usize, k: usize) -> Result<Self> {
        let (pa, pb) = (t.prob_ones(&[j])?, t.prob_ones(&[k])?);
        let pab = if j == k { pa } else { t.prob_ones(&[j, k])? };
        Ok(Self {
            a: pm_expectation(pa)?,
            b: pm_expectation(pb)?,
            a2: 1.0,
            b2: 1.0,
            ab: pm_product_expectation(pa, pb, pab)?,
        })
    }
}

/// Pearson correlation `(⟨AB⟩ − ⟨A⟩⟨B⟩) / (σ_A σ_B)`.
pub fn correlation(m: &Moments) -> Result<f64> {
    let var_a = m.a2 - m.a * m.a;
    let var_b = m.b2 - m.b * m.b;
    if var_a <= 1e-15 || var_b <= 1e-15 {
        return Err(Error::ZeroVariance);
    }
    Ok(((m.ab - m.a * m.b) / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

/// CHSH combination with Pearson correlations in place of product expectations.
pub fn correlation_chsh(t: &JointTable, a1: usize, a2: usize, b1: usize, b2: usize) -> Result<f64> {
    let c = |a, b| Moments::pm_from_table(t, a, b).and_then(|m| correlation(&m));
    Ok(c(a1, b1)? + c(a2, b1)? + c(a1, b2)? - c(a2, b2)?)
}

/// A classical table whose correlation-substituted CHSH exceeds 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationViolation {
    pub table: JointTable,
    pub value: f64,
    pub sample_index: usize,
}

/// Draws `samples` four-variable tables (variables `a1, a2, b1, b2` = bits
/// 0..4) from a symmetric Dirichlet(0.3) with a ChaCha8 stream seeded by
/// `seed`, and returns the one maximizing [`correlation_chsh`] if it exceeds 2.
/// Sparse Dirichlet draws give the biased marginals the violation needs.
pub fn search_correlation_violation(seed: u64, samples: usize) -> Option<CorrelationViolation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(0.3, 1.0).expect("valid shape");
    let mut best: Option<CorrelationViolation> = None;
    for sample_index in 0..samples {
        let raw: Vec<f64> = (0..16).map(|_| gamma.sample(&mut rng)).collect();
        let Ok(table) = JointTable::normalized(4, raw) else { continue };
        let Ok(value) = correlation_chsh(&table, 0, 1, 2, 3) else { continue };
        if value > 2.0 && best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(CorrelationViolation { table, value, sample_index });
        }
    }
    best
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn shannon_entropy(table: &JointTable) -> f64 {
    table.probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}
