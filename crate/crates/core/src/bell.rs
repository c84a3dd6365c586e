//! Hidden-variable models, CHSH evaluation and settings search.
//!
//! An [`HvmModel`] is a finite set of ontic states `λ` with weights `f(λ)` and
//! deterministic `{0,1}` responses `a(λ, A)`. Expectations are weighted sums
//! over `λ`, so every model is noncontextual by construction: the response to
//! `A` does not depend on what else is measured. Models where a response may
//! depend on the distant setting (partially contextual, light-cone split
//! models) are not represented.
//!
//! Quantum CHSH values use rank-1 qubit projectors `½(I + n·σ)`; the search in
//! [`maximize_chsh`] runs a coarse grid followed by coordinate descent.

use std::f64::consts::TAU;

use crate::classical_prob::{chsh_value, pm_product_expectation, ChshExpectations};
use crate::error::{Error, Result};
use crate::rvr::LabeledProjector;
use crate::hilbert::{
    c64, commutes, tensor_product, trace_product, DensityOperator, Operator, Projector,
};

/// Tolerance on the total weight of an [`HvmModel`].
pub const WEIGHT_TOL: f64 = 1e-12;
/// Grid step of the x-z plane search.
pub const XZ_GRID_STEP_DEG: f64 = 5.0;
/// Grid step of the full-sphere search (Alice only; Bob answers exactly).
pub const SPHERE_GRID_STEP_DEG: f64 = 10.0;
/// Coordinate descent stops once the step falls below this many radians.
pub const REFINE_RESOLUTION: f64 = 1e-7;
/// Cap on coordinate-descent sweeps.
pub const REFINE_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HvmModel {
    ontic: Vec<String>,
    weights: Vec<f64>,
    observables: Vec<String>,
    /// `responses[λ][observable]`
    responses: Vec<Vec<u8>>,
}

impl HvmModel {
    pub fn new(ontic: Vec<String>, weights: Vec<f64>, observables: Vec<String>, responses: Vec<Vec<u8>>) -> Result<Self> {
        let invalid = |reason: String| Err(Error::InvalidModel { reason });
        if ontic.is_empty() {
            return invalid("no ontic states".into());
        }
        if weights.len() != ontic.len() || responses.len() != ontic.len() {
            return invalid(format!(
                "{} ontic states, {} weights, {} response rows",
                ontic.len(),
                weights.len(),
                responses.len()
            ));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return invalid(format!("weight {w} is not a probability"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return invalid(format!("weights sum to {total}"));
        }
        for (i, label) in observables.iter().enumerate() {
            if observables[..i].contains(label) {
                return invalid(format!("observable {label:?} listed twice"));
            }
        }
        for (lambda, row) in ontic.iter().zip(&responses) {
            if row.len() != observables.len() {
                return invalid(format!("ontic state {lambda:?} has {} responses", row.len()));
            }
            if row.iter().any(|&r| r > 1) {
                return invalid(format!("ontic state {lambda:?} has a response outside {{0,1}}"));
            }
        }
        Ok(Self { ontic, weights, observables, responses })
    }

    pub fn ontic_states(&self) -> &[String] {
        &self.ontic
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn observables(&self) -> &[String] {
        &self.observables
    }

    pub fn observable_index(&self, label: &str) -> Result<usize> {
        self.observables
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn response(&self, lambda: usize, observable: usize) -> u8 {
        self.responses[lambda][observable]
    }
}

/// `Σ_λ f(λ) Π a(λ, ·)` over the listed observables, in the `{0,1}` convention.
pub fn hvm_expectation(model: &HvmModel, observables: &[&str]) -> Result<f64> {
    let idx = observables.iter().map(|l| model.observable_index(l)).collect::<Result<Vec<_>>>()?;
    Ok(model
        .weights
        .iter()
        .zip(&model.responses)
        .filter(|(_, row)| idx.iter().all(|&i| row[i] == 1))
        .map(|(w, _)| w)
        .sum())
}

/// CHSH combination of the `±1` versions of four observables.
pub fn hvm_chsh(model: &HvmModel, a1: &str, a2: &str, b1: &str, b2: &str) -> Result<f64> {
    let e = |a: &str, b: &str| -> Result<f64> {
        pm_product_expectation(hvm_expectation(model, &[a])?, hvm_expectation(model, &[b])?, hvm_expectation(model, &[a, b])?)
    };
    chsh_value(&ChshExpectations { a1b1: e(a1, b1)?, a2b1: e(a2, b1)?, a1b2: e(a1, b2)?, a2b2: e(a2, b2)? })
}

/// Per-λ CHSH contributions, each exactly `±2`; their weighted sum is
/// [`hvm_chsh`], which is why no model exceeds 2.
pub fn hvm_chsh_terms(model: &HvmModel, a1: &str, a2: &str, b1: &str, b2: &str) -> Result<Vec<f64>> {
    let [a1, a2, b1, b2] = [a1, a2, b1, b2].map(|l| model.observable_index(l));
    let (a1, a2, b1, b2) = (a1?, a2?, b1?, b2?);
    let pm = |r: u8| 2.0 * f64::from(r) - 1.0;
    Ok(model
        .responses
        .iter()
        .map(|row| {
            let (x1, x2, y1, y2) = (pm(row[a1]), pm(row[a2]), pm(row[b1]), pm(row[b2]));
            x1 * y1 + x2 * y1 + x1 * y2 - x2 * y2
        })
        .collect())
}

/// Polar angle `theta` from +z and azimuth `phi` from +x, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn from_degrees(theta: f64, phi: f64) -> Self {
        Self { theta: theta.to_radians(), phi: phi.to_radians() }
    }

    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    fn from_direction(n: [f64; 3]) -> Self {
        Self { theta: n[2].clamp(-1.0, 1.0).acos(), phi: n[1].atan2(n[0]).rem_euclid(TAU) }
    }
}

/// `½(I + n·σ)` on one qubit.
pub fn spin_projector(angles: BlochAngles) -> Projector {
    let [x, y, z] = angles.direction();
    let op = Operator::from_rows(&[
        vec![c64((1.0 + z) / 2.0, 0.0), c64(x / 2.0, -y / 2.0)],
        vec![c64(x / 2.0, y / 2.0), c64((1.0 - z) / 2.0, 0.0)],
    ])
    .expect("2x2");
    Projector::new(op).expect("unit Bloch vector gives a projector")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub alice: [BlochAngles; 2],
    pub bob: [BlochAngles; 2],
}

impl ChshSettings {
    /// The Tsirelson-optimal x-z plane settings for the singlet:
    /// Alice at 0° and 90°, Bob at 225° and 135°.
    pub fn singlet_optimal() -> Self {
        Self {
            alice: [BlochAngles::from_degrees(0.0, 0.0), BlochAngles::from_degrees(90.0, 0.0)],
            bob: [BlochAngles::from_degrees(225.0, 0.0), BlochAngles::from_degrees(135.0, 0.0)],
        }
    }

    /// The four projectors `a1 = P⊗I`, `b1 = I⊗Q`, `a2`, `b2` on two qubits,
    /// in that order: each `a_j` commutes with each `b_k` while `a1, a2` and
    /// `b1, b2` generally do not.
    pub fn four_projectors(&self) -> Vec<LabeledProjector> {
        let id = Projector::identity(2);
        let a = |i: usize| spin_projector(self.alice[i]).tensor(&id);
        let b = |i: usize| id.tensor(&spin_projector(self.bob[i]));
        vec![
            LabeledProjector::new("a1", a(0)),
            LabeledProjector::new("b1", b(0)),
            LabeledProjector::new("a2", a(1)),
            LabeledProjector::new("b2", b(1)),
        ]
    }
}

/// Two-qubit state with Alice projectors `P⊗I` and Bob projectors `I⊗Q`.
#[derive(Debug, Clone)]
pub struct TwoQubitScenario {
    rho: DensityOperator,
    alice: [Projector; 2],
    bob: [Projector; 2],
}

impl TwoQubitScenario {
    pub fn new(rho: DensityOperator, alice: [Projector; 2], bob: [Projector; 2]) -> Result<Self> {
        let dims = std::iter::once(rho.dim()).chain(alice.iter().chain(&bob).map(Projector::dim));
        if let Some(d) = dims.into_iter().find(|&d| d != 4) {
            return Err(Error::DimensionMismatch { expected: 4, found: d });
        }
        for (j, a) in alice.iter().enumerate() {
            for (k, b) in bob.iter().enumerate() {
                if !commutes(a.op(), b.op())? {
                    return Err(Error::NotCommuting { first: j, second: 2 + k });
                }
            }
        }
        Ok(Self { rho, alice, bob })
    }

    /// Lifts single-qubit projectors to `P⊗I` and `I⊗Q`.
    pub fn from_local(rho: DensityOperator, alice: [&Projector; 2], bob: [&Projector; 2]) -> Result<Self> {
        let id = Projector::identity(2);
        for p in alice.iter().chain(&bob) {
            if p.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: p.dim() });
            }
        }
        Self::new(rho, alice.map(|p| p.tensor(&id)), bob.map(|q| id.tensor(q)))
    }

    pub fn from_settings(rho: DensityOperator, settings: &ChshSettings) -> Result<Self> {
        let [a1, a2] = settings.alice.map(spin_projector);
        let [b1, b2] = settings.bob.map(spin_projector);
        Self::from_local(rho, [&a1, &a2], [&b1, &b2])
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn alice(&self) -> &[Projector; 2] {
        &self.alice
    }

    pub fn bob(&self) -> &[Projector; 2] {
        &self.bob
    }

    /// `±1` expectations from the joint `{0,1}` probabilities.
    pub fn expectations(&self) -> Result<ChshExpectations> {
        let p = |ops: &[&Operator]| -> Result<f64> { Ok(trace_product(&self.rho, ops)?.clamp(0.0, 1.0)) };
        let e = |j: usize, k: usize| -> Result<f64> {
            let (a, b) = (self.alice[j].op(), self.bob[k].op());
            pm_product_expectation(p(&[a])?, p(&[b])?, p(&[a, b])?)
        };
        Ok(ChshExpectations { a1b1: e(0, 0)?, a2b1: e(1, 0)?, a1b2: e(0, 1)?, a2b2: e(1, 1)? })
    }
}

pub fn quantum_chsh(s: &TwoQubitScenario) -> Result<f64> {
    chsh_value(&s.expectations()?)
}

/// `T[i][j] = Tr(ρ σ_i⊗σ_j)`, so `⟨(a·σ)⊗(b·σ)⟩ = aᵀ T b`.
pub fn correlation_tensor(rho: &DensityOperator) -> Result<[[f64; 3]; 3]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let paulis = [Operator::pauli_x(), Operator::pauli_y(), Operator::pauli_z()];
    let mut t = [[0.0; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            t[i][j] = trace_product(rho, &[&tensor_product(si, sj)])?;
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Bloch vectors restricted to the x-z plane (`phi = 0`, `theta ∈ [0, 2π)`).
    XzPlane,
    FullSphere,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshOptimum {
    pub settings: ChshSettings,
    pub value: f64,
    /// Best value seen on the grid, before refinement.
    pub grid_value: f64,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn apply(t: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    [dot(t[0], b), dot(t[1], b), dot(t[2], b)]
}

fn apply_transpose(t: &[[f64; 3]; 3], a: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|j| a[0] * t[0][j] + a[1] * t[1][j] + a[2] * t[2][j])
}

fn add(a: [f64; 3], b: [f64; 3], sign: f64) -> [f64; 3] {
    [a[0] + sign * b[0], a[1] + sign * b[1], a[2] + sign * b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn chsh_from_directions(t: &[[f64; 3]; 3], a: [[f64; 3]; 2], b: [[f64; 3]; 2]) -> f64 {
    let tb1 = apply(t, b[0]);
    let tb2 = apply(t, b[1]);
    dot(a[0], tb1) + dot(a[1], tb1) + dot(a[0], tb2) - dot(a[1], tb2)
}

/// Angles `[a1, a2, b1, b2]`, each one or two parameters depending on the mode.
fn settings_from_params(mode: SearchMode, x: &[f64]) -> ChshSettings {
    let angles = |i: usize| match mode {
        SearchMode::XzPlane => BlochAngles::new(x[i], 0.0),
        SearchMode::FullSphere => BlochAngles::new(x[2 * i], x[2 * i + 1]),
    };
    ChshSettings { alice: [angles(0), angles(1)], bob: [angles(2), angles(3)] }
}

fn params_value(t: &[[f64; 3]; 3], mode: SearchMode, x: &[f64]) -> f64 {
    let s = settings_from_params(mode, x);
    chsh_from_directions(t, s.alice.map(|a| a.direction()), s.bob.map(|b| b.direction()))
}

fn xz_angle(v: [f64; 3]) -> f64 {
    v[0].atan2(v[2]).rem_euclid(TAU)
}

/// Exhaustive grid in the x-z plane. The objective separates into
/// `(a1 + a2)·T b1 + (a1 − a2)·T b2`, so Bob's two settings are maximized
/// independently for each Alice pair without changing the result.
fn xz_grid(t: &[[f64; 3]; 3]) -> (Vec<f64>, f64) {
    let steps = (360.0 / XZ_GRID_STEP_DEG).round() as usize;
    let angles: Vec<f64> = (0..steps).map(|i| (i as f64 * XZ_GRID_STEP_DEG).to_radians()).collect();
    let dirs: Vec<[f64; 3]> = angles.iter().map(|&th| BlochAngles::new(th, 0.0).direction()).collect();
    let tdirs: Vec<[f64; 3]> = dirs.iter().map(|&b| apply(t, b)).collect();
    let best_bob = |u: [f64; 3]| {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, tb) in tdirs.iter().enumerate() {
            let v = dot(u, *tb);
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; 4]);
    for (i, &a1) in dirs.iter().enumerate() {
        for (j, &a2) in dirs.iter().enumerate() {
            let (v1, k1) = best_bob(add(a1, a2, 1.0));
            let (v2, k2) = best_bob(add(a1, a2, -1.0));
            if v1 + v2 > best.0 {
                best = (v1 + v2, vec![angles[i], angles[j], angles[k1], angles[k2]]);
            }
        }
    }
    (best.1, best.0)
}

/// Alice on a polar grid; Bob's best reply to a fixed Alice pair is exact,
/// `b1 ∥ Tᵀ(a1 + a2)` and `b2 ∥ Tᵀ(a1 − a2)`.
fn sphere_grid(t: &[[f64; 3]; 3]) -> (Vec<f64>, f64) {
    let n_theta = (180.0 / SPHERE_GRID_STEP_DEG).round() as usize;
    let n_phi = (360.0 / SPHERE_GRID_STEP_DEG).round() as usize;
    let mut angles = Vec::new();
    for i in 0..=n_theta {
        for j in 0..n_phi {
            angles.push(BlochAngles::from_degrees(i as f64 * SPHERE_GRID_STEP_DEG, j as f64 * SPHERE_GRID_STEP_DEG));
            if i == 0 || i == n_theta {
                break;
            }
        }
    }
    let dirs: Vec<[f64; 3]> = angles.iter().map(|a| a.direction()).collect();
    let reply = |u: [f64; 3]| {
        let v = apply_transpose(t, u);
        let n = norm(v);
        if n > 0.0 {
            (n, BlochAngles::from_direction([v[0] / n, v[1] / n, v[2] / n]))
        } else {
            (0.0, BlochAngles::new(0.0, 0.0))
        }
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; 8]);
    for (i, &a1) in dirs.iter().enumerate() {
        for (j, &a2) in dirs.iter().enumerate() {
            let (v1, b1) = reply(add(a1, a2, 1.0));
            let (v2, b2) = reply(add(a1, a2, -1.0));
            if v1 + v2 > best.0 {
                let (x, y) = (angles[i], angles[j]);
                best = (v1 + v2, vec![x.theta, x.phi, y.theta, y.phi, b1.theta, b1.phi, b2.theta, b2.phi]);
            }
        }
    }
    (best.1, best.0)
}

/// Step-halving coordinate descent; only strict improvements are accepted.
fn refine(t: &[[f64; 3]; 3], mode: SearchMode, mut x: Vec<f64>, initial_step: f64) -> (Vec<f64>, f64) {
    let mut best = params_value(t, mode, &x);
    let mut step = initial_step;
    for _ in 0..REFINE_MAX_ITERS {
        if step < REFINE_RESOLUTION {
            break;
        }
        let mut improved = false;
        for i in 0..x.len() {
            for delta in [step, -step] {
                let old = x[i];
                x[i] = old + delta;
                let v = params_value(t, mode, &x);
                if v > best {
                    best = v;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (x, best)
}

fn canonical(mode: SearchMode, s: ChshSettings) -> ChshSettings {
    let fix = |a: BlochAngles| match mode {
        SearchMode::XzPlane => BlochAngles::new(xz_angle(a.direction()), 0.0),
        SearchMode::FullSphere => BlochAngles::from_direction(a.direction()),
    };
    ChshSettings { alice: s.alice.map(fix), bob: s.bob.map(fix) }
}

/// Best CHSH value over rank-1 spin settings, deterministic for a given state.
///
/// The returned value is recomputed from the projectors with
/// [`quantum_chsh`] and is never below the best grid value.
pub fn maximize_chsh(rho: &DensityOperator, mode: SearchMode) -> Result<ChshOptimum> {
    let t = correlation_tensor(rho)?;
    let (start, grid_value, step) = match mode {
        SearchMode::XzPlane => {
            let (x, v) = xz_grid(&t);
            (x, v, XZ_GRID_STEP_DEG.to_radians())
        }
        SearchMode::FullSphere => {
            let (x, v) = sphere_grid(&t);
            (x, v, SPHERE_GRID_STEP_DEG.to_radians())
        }
    };
    let (x, _) = refine(&t, mode, start, step);
    let settings = canonical(mode, settings_from_params(mode, &x));
    let value = quantum_chsh(&TwoQubitScenario::from_settings(rho.clone(), &settings)?)?;
    Ok(ChshOptimum { settings, value, grid_value })
}

/// Exact optimum for a pure state `cos η|↑↓⟩ − sin η|↓↑⟩`.
pub fn pure_state_chsh_optimum(eta: f64) -> f64 {
    2.0 * (1.0 + (2.0 * eta).sin().powi(2)).sqrt()
}

/// `cos η|↑↓⟩ − sin η|↓↑⟩` with `|↑⟩` the first basis vector.
pub fn anti_aligned_pure_state(eta: f64) -> DensityOperator {
    let (s, c) = eta.sin_cos();
    DensityOperator::pure(&[c64(0.0, 0.0), c64(c, 0.0), c64(-s, 0.0), c64(0.0, 0.0)]).expect("unit vector")
}

/// A local model reproducing every `⟨A_j B_k⟩` of a separable two-qubit
/// state `Σ_c w_c ρ_c^A ⊗ ρ_c^B`: for each component the four outcomes are
/// drawn independently with their quantum single-site probabilities.
///
/// Observables are labelled `a1`, `a2`, `b1`, `b2`; ontic states
/// `c{component}:{a1}{a2}{b1}{b2}`.
pub fn hvm_from_separable(
    components: &[(f64, DensityOperator, DensityOperator)],
    alice: [&Projector; 2],
    bob: [&Projector; 2],
) -> Result<HvmModel> {
    let mut ontic = Vec::new();
    let mut weights = Vec::new();
    let mut responses = Vec::new();
    for (c, (w, ra, rb)) in components.iter().enumerate() {
        let mut p = [0.0; 4];
        for (slot, (proj, rho)) in [(alice[0], ra), (alice[1], ra), (bob[0], rb), (bob[1], rb)].into_iter().enumerate() {
            if proj.dim() != 2 || rho.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: proj.dim().max(rho.dim()) });
            }
            p[slot] = trace_product(rho, &[proj.op()])?.clamp(0.0, 1.0);
        }
        for atom in 0..16u8 {
            let bits = [0, 1, 2, 3].map(|i| atom >> i & 1);
            let weight = bits.iter().zip(p).map(|(&b, q)| if b == 1 { q } else { 1.0 - q }).product::<f64>();
            ontic.push(format!("c{c}:{}{}{}{}", bits[0], bits[1], bits[2], bits[3]));
            weights.push(w * weight);
            responses.push(bits.to_vec());
        }
    }
    let labels = ["a1", "a2", "b1", "b2"].map(String::from).to_vec();
    HvmModel::new(ontic, weights, labels, responses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::make_singlet;

    fn fair_coin_model() -> HvmModel {
        HvmModel::new(
            vec!["0".into(), "1".into()],
            vec![0.5, 0.5],
            vec!["a".into(), "b".into()],
            vec![vec![0, 0], vec![1, 1]],
        )
        .unwrap()
    }

    fn tsirelson_settings() -> ChshSettings {
        ChshSettings::singlet_optimal()
    }

    #[test]
    fn shared_coin_expectations() {
        let m = fair_coin_model();
        assert!((hvm_expectation(&m, &["a", "b"]).unwrap() - 0.5).abs() < 1e-15);
        // twins: both features fixed by the same λ
        assert_eq!(hvm_expectation(&m, &["a", "b"]).unwrap(), hvm_expectation(&m, &["a"]).unwrap());
        assert!(matches!(hvm_expectation(&m, &["c"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn single_ontic_state_is_a_product() {
        let m = HvmModel::new(vec!["λ".into()], vec![1.0], vec!["a".into(), "b".into()], vec![vec![1, 0]]).unwrap();
        assert_eq!(hvm_expectation(&m, &["a"]).unwrap(), 1.0);
        assert_eq!(hvm_expectation(&m, &["a", "b"]).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_chsh_values() {
        let labels = ["a1", "a2", "b1", "b2"].map(String::from).to_vec();
        let all_ones = HvmModel::new(vec!["λ".into()], vec![1.0], labels.clone(), vec![vec![1; 4]]).unwrap();
        assert!((hvm_chsh(&all_ones, "a1", "a2", "b1", "b2").unwrap() - 2.0).abs() < 1e-12);
        // a1 = b1 = b2 = x, a2 = 1 − x
        let m = HvmModel::new(
            vec!["0".into(), "1".into()],
            vec![0.3, 0.7],
            labels,
            vec![vec![0, 1, 0, 0], vec![1, 0, 1, 1]],
        )
        .unwrap();
        assert!((hvm_chsh(&m, "a1", "a2", "b1", "b2").unwrap() - 2.0).abs() < 1e-12);
        let terms = hvm_chsh_terms(&m, "a1", "a2", "b1", "b2").unwrap();
        assert!(terms.iter().all(|t| t.abs() == 2.0));
    }

    #[test]
    fn model_validation() {
        let obs = vec!["a".to_string()];
        assert!(HvmModel::new(vec!["x".into()], vec![0.9], obs.clone(), vec![vec![1]]).is_err());
        assert!(HvmModel::new(vec!["x".into()], vec![1.0], obs.clone(), vec![vec![2]]).is_err());
        assert!(HvmModel::new(vec!["x".into()], vec![1.0], obs, vec![vec![]]).is_err());
    }

    #[test]
    fn singlet_reaches_tsirelson() {
        let s = TwoQubitScenario::from_settings(make_singlet(), &tsirelson_settings()).unwrap();
        assert!((quantum_chsh(&s).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn singlet_correlation_is_minus_cosine() {
        let singlet = make_singlet();
        for (ta, tb) in [(0.0, 0.0), (30.0, 100.0), (90.0, 225.0)] {
            let a = spin_projector(BlochAngles::from_degrees(ta, 0.0));
            let b = spin_projector(BlochAngles::from_degrees(tb, 0.0));
            let s = TwoQubitScenario::from_local(singlet.clone(), [&a, &a], [&b, &b]).unwrap();
            let e = s.expectations().unwrap();
            assert!((e.a1b1 + (ta - tb).to_radians().cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_settings_collapse() {
        let rho = anti_aligned_pure_state(0.3);
        let a = spin_projector(BlochAngles::from_degrees(20.0, 10.0));
        let b = spin_projector(BlochAngles::from_degrees(70.0, 40.0));
        let s = TwoQubitScenario::from_local(rho, [&a, &a], [&b, &b]).unwrap();
        let e = s.expectations().unwrap();
        assert!((quantum_chsh(&s).unwrap() - 2.0 * e.a1b1).abs() < 1e-12);
    }

    #[test]
    fn scenario_rejects_noncommuting_sides() {
        let a = spin_projector(BlochAngles::from_degrees(0.0, 0.0)).tensor(&Projector::identity(2));
        let b = spin_projector(BlochAngles::from_degrees(90.0, 0.0)).tensor(&Projector::identity(2));
        let err = TwoQubitScenario::new(make_singlet(), [a.clone(), a], [b.clone(), b]);
        assert!(matches!(err, Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn search_recovers_known_optima() {
        let singlet = maximize_chsh(&make_singlet(), SearchMode::XzPlane).unwrap();
        assert!(singlet.value >= 2.0 * 2f64.sqrt() - 1e-6);
        assert!(singlet.value >= singlet.grid_value - 1e-12);

        let up = DensityOperator::pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let product = up.tensor(&up);
        assert!((maximize_chsh(&product, SearchMode::XzPlane).unwrap().value - 2.0).abs() < 1e-6);

        let eta = 22.5f64.to_radians();
        let partial = maximize_chsh(&anti_aligned_pure_state(eta), SearchMode::FullSphere).unwrap();
        assert!((partial.value - pure_state_chsh_optimum(eta)).abs() < 1e-6);
        assert!(partial.value > 2.0);
    }

    #[test]
    fn separable_state_has_matching_local_model() {
        let up = DensityOperator::pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let plus = DensityOperator::pure(&[c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
        let mixed = DensityOperator::maximally_mixed(2);
        let parts = vec![(0.25, up.clone(), plus.clone()), (0.75, mixed.clone(), up.clone())];
        let rho = DensityOperator::mixture(&[(0.25, up.tensor(&plus)), (0.75, mixed.tensor(&up))]).unwrap();
        let settings = tsirelson_settings();
        let [a1, a2] = settings.alice.map(spin_projector);
        let [b1, b2] = settings.bob.map(spin_projector);
        let model = hvm_from_separable(&parts, [&a1, &a2], [&b1, &b2]).unwrap();
        let s = TwoQubitScenario::from_local(rho, [&a1, &a2], [&b1, &b2]).unwrap();
        let q = s.expectations().unwrap();
        let e = |a: &str, b: &str| {
            let p = |l: &[&str]| hvm_expectation(&model, l).unwrap();
            pm_product_expectation(p(&[a]), p(&[b]), p(&[a, b])).unwrap()
        };
        assert!((q.a1b1 - e("a1", "b1")).abs() < 1e-9);
        assert!((q.a2b1 - e("a2", "b1")).abs() < 1e-9);
        assert!((q.a1b2 - e("a1", "b2")).abs() < 1e-9);
        assert!((q.a2b2 - e("a2", "b2")).abs() < 1e-9);
        assert!(quantum_chsh(&s).unwrap().abs() <= 2.0 + 1e-9);
    }
}
