#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rvrcheck::bell::HvmModel;
use rvrcheck::classical_prob::{JointTable, PairMarginals};
use rvrcheck::hilbert::{c64, DensityOperator, Operator, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random table over `n` variables; roughly a third of the atoms are zeroed
/// so that boundary cases show up.
pub fn random_table(rng: &mut ChaCha8Rng, n: usize) -> JointTable {
    loop {
        let raw: Vec<f64> = (0..1usize << n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() })
            .collect();
        if let Ok(t) = JointTable::normalized(n, raw) {
            return t;
        }
    }
}

/// Singles and the four CHSH cross pairs `(a_j, b_k)` over variables
/// `a1 = 0, a2 = 1, b1 = 2, b2 = 3`, each pair drawn within its Fréchet bounds.
pub fn random_chsh_marginals(rng: &mut ChaCha8Rng) -> PairMarginals {
    let singles: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
    let mut pairs = Vec::new();
    for a in 0..2 {
        for b in 2..4 {
            let lo = (singles[a] + singles[b] - 1.0).max(0.0);
            let hi = singles[a].min(singles[b]);
            pairs.push(((a, b), lo + (hi - lo) * rng.random::<f64>()));
        }
    }
    PairMarginals::new(singles, pairs).expect("within Fréchet bounds")
}

pub fn random_hvm(rng: &mut ChaCha8Rng, max_states: usize) -> HvmModel {
    let k = rng.random_range(1..=max_states);
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let responses = (0..k).map(|_| (0..4).map(|_| rng.random_range(0..=1u8)).collect()).collect();
    HvmModel::new(
        (0..k).map(|i| format!("λ{i}")).collect(),
        weights,
        ["a1", "a2", "b1", "b2"].map(String::from).to_vec(),
        responses,
    )
    .expect("valid model")
}

pub fn random_ket(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Mixture of `rank` random pure states with random weights.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> DensityOperator {
    let raw: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 1e-2).collect();
    let total: f64 = raw.iter().sum();
    let parts: Vec<(f64, DensityOperator)> = raw
        .iter()
        .map(|w| (w / total, DensityOperator::pure(&random_ket(rng, dim)).expect("unit ket")))
        .collect();
    DensityOperator::mixture(&parts).expect("valid mixture")
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let mut entries = vec![c64(0.0, 0.0); dim * dim];
    for i in 0..dim {
        entries[i * dim + i] = c64(rng.random::<f64>() * 2.0 - 1.0, 0.0);
        for j in i + 1..dim {
            let z = c64(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
            entries[i * dim + j] = z;
            entries[j * dim + i] = z.conj();
        }
    }
    Operator::new(dim, entries).expect("square")
}
