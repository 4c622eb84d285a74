#![allow(dead_code)]

use filtra::feature::FeatureMap;
use filtra::filter::{FilterGrid, InterpolationMode};
use filtra::group::GroupSpec;
use filtra::harness::{kernel_families, KERNEL_TOLERANCE};
use filtra::kernel::SteerableKernel;
use filtra::repr::RepSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_filter(size: usize, rng: &mut ChaCha8Rng) -> FilterGrid {
    FilterGrid::new(
        size,
        (0..size * size).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

pub fn random_feature(rep: RepSpec, mult: usize, side: usize, rng: &mut ChaCha8Rng) -> FeatureMap {
    let len = rep.dim() * mult * side * side;
    FeatureMap::new(
        rep,
        mult,
        side,
        side,
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

pub fn families(
    group: &str,
    size: usize,
    mode: InterpolationMode,
    seed: u64,
) -> Vec<SteerableKernel> {
    let group: GroupSpec = group.parse().unwrap();
    kernel_families(group, size, mode, &mut rng(seed)).unwrap()
}

/// Largest steerability residual of `kernel` over every group element.
pub fn worst_kernel_residual(kernel: &SteerableKernel) -> f64 {
    kernel
        .group()
        .elements()
        .iter()
        .map(|g| {
            filtra::harness::check_kernel_equivariance(kernel, g)
                .unwrap()
                .abs
        })
        .fold(0.0, f64::max)
}

pub fn assert_all_families_exact(group: &str, size: usize, mode: InterpolationMode) {
    let kernels = families(group, size, mode, 11);
    assert!(!kernels.is_empty());
    for k in &kernels {
        let r = worst_kernel_residual(k);
        assert!(
            r <= KERNEL_TOLERANCE,
            "{} on {group} S={size} {mode}: {r:e}",
            k.label()
        );
    }
}
