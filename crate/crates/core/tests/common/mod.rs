#![allow(dead_code)]

use entshape::qstate::{ComplexMatrix, DensityMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `G G† / Tr` for a complex Ginibre matrix `G` of size `d × k`.
pub fn ginibre_state(rng: &mut ChaCha8Rng, d: usize, k: usize, dims: Vec<usize>) -> DensityMatrix {
    let entries: Vec<C64> = (0..d * k)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let g = ComplexMatrix::new(d, k, entries).unwrap();
    let m = &g * &g.dagger();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr), dims).unwrap()
}

pub fn random_pure(rng: &mut ChaCha8Rng, d: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Haar-ish single-qubit unitary from three Euler angles.
pub fn random_qubit_unitary(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    use entshape::qstate::gates;
    use rand::Rng;
    let (a, b, c): (f64, f64, f64) = (rng.gen::<f64>() * 6.3, rng.gen::<f64>() * 3.2, rng.gen::<f64>() * 6.3);
    &(&gates::rz(a) * &gates::ry(b)) * &gates::rz(c)
}
