#![allow(dead_code)]

use conedeflate::random::random_psd;
use conedeflate::strategies::{cyclic_basis_directions, random_sphere_directions, Greedy};
use conedeflate::{run_chain, DirectionSource, HermitianMatrix, ResidualChain, StopRule, ToleranceConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
pub enum Mode {
    Random,
    Cyclic,
    Greedy,
}

pub const MODES: [Mode; 3] = [Mode::Random, Mode::Cyclic, Mode::Greedy];

pub fn source(mode: Mode, dim: usize, seed: u64) -> Box<dyn DirectionSource> {
    match mode {
        Mode::Random => Box::new(random_sphere_directions(dim, seed).unwrap()),
        Mode::Cyclic => Box::new(cyclic_basis_directions(dim).unwrap()),
        Mode::Greedy => Box::new(Greedy),
    }
}

/// Random PSD instance with `dim` and `rank` drawn from `seed`, scaled by a
/// random factor so tolerances are exercised away from unit trace.
pub fn instance(dim: usize, rank: usize, seed: u64) -> HermitianMatrix {
    let mut r = rng(seed);
    let scale = 10f64.powf(rand::Rng::gen_range(&mut r, -2.0..2.0));
    random_psd(dim, rank, &mut r).scaled(scale)
}

pub fn chain(r0: &HermitianMatrix, mode: Mode, seed: u64, steps: usize) -> ResidualChain {
    let mut src = source(mode, r0.dim(), seed);
    run_chain(r0, &mut src, &StopRule::max_steps(steps), &ToleranceConfig::default()).unwrap()
}

pub fn rel_frob(a: &conedeflate::CMatrix, b: &conedeflate::CMatrix) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}
