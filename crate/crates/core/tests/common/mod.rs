#![allow(dead_code)]

use qig_core::models::StateModel;
use qig_core::rng::{gaussian_matrix, rng_from_seed};
use qig_core::C64;

/// A fixed interior point for each registry model.
pub fn reference_point(model: &StateModel) -> Vec<f64> {
    match model.name() {
        "pure_qubit" | "noisy_qubit" => vec![0.7, 0.3],
        "bloch_3p" => vec![0.2, 0.3, 0.1],
        "bloch_xz" => vec![0.3, 0.4],
        "classical_2p" => vec![0.2, 0.3],
        "classical_coin" => vec![0.3],
        "unitary_2p" => vec![0.3, -0.4],
        "unitary_qubit_1p" => vec![0.4],
        other => panic!("no reference point for {other}"),
    }
}

/// Unit vector drawn from the complex Gaussian.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = rng_from_seed(seed);
    let v = gaussian_matrix(&mut rng, dim, 1).column(0);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}
