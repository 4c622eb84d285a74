//! Kernel-level steerability: every family against `ρ_out(g) κ ρ_in(g)⁻¹`.

mod common;

use common::{assert_all_families_exact, families, random_filter, rng, worst_kernel_residual};
use filtra::filter::InterpolationMode::{Bilinear, Nearest};
use filtra::group::GroupSpec;
use filtra::harness::{check_kernel_equivariance, KERNEL_TOLERANCE};
use filtra::kernel::{kernel_orn, kernel_triv_to_reg_cn, SteerableKernel};
use filtra::repr::RepSpec;

#[test]
fn quarter_turn_groups_are_exact_for_bilinear() {
    for group in ["c4", "d4"] {
        for size in [3, 5, 9] {
            assert_all_families_exact(group, size, Bilinear);
        }
    }
}

#[test]
fn small_groups_are_exact_at_any_size() {
    for group in ["c1", "c2", "d1", "d2"] {
        for size in [1, 3, 5, 7] {
            for mode in [Bilinear, Nearest] {
                assert_all_families_exact(group, size, mode);
            }
        }
    }
}

#[test]
fn eighth_turns_are_exact_for_nearest_three_by_three() {
    assert_all_families_exact("c8", 3, Nearest);
    assert_all_families_exact("d8", 3, Nearest);
}

#[test]
fn one_by_one_filters_make_every_family_exact() {
    for n in 1..=12 {
        assert_all_families_exact(&format!("c{n}"), 1, Bilinear);
        assert_all_families_exact(&format!("d{n}"), 1, Bilinear);
    }
}

#[test]
fn family_list_covers_each_kind() {
    let labels: Vec<String> = families("c4", 3, Bilinear, 0)
        .iter()
        .map(|k| k.label())
        .collect();
    for want in [
        "triv2reg",
        "irrep2reg_j0_k1",
        "irrep2reg_conj_j0_k2",
        "reg2reg",
        "orn",
        "rev_triv2reg",
    ] {
        assert!(
            labels.iter().any(|l| l == want),
            "missing {want} in {labels:?}"
        );
    }
    let labels: Vec<String> = families("d4", 3, Bilinear, 0)
        .iter()
        .map(|k| k.label())
        .collect();
    assert!(labels.iter().any(|l| l == "irrep2reg_j1_k2"));
    assert!(!labels.iter().any(|l| l == "orn"));
}

#[test]
fn interpolated_angles_give_finite_nonzero_residuals() {
    let kernels = families("c8", 9, Bilinear, 5);
    let mut any_nonzero = false;
    for k in &kernels {
        let r = worst_kernel_residual(k);
        assert!(r.is_finite());
        any_nonzero |= r > KERNEL_TOLERANCE;
    }
    assert!(
        any_nonzero,
        "bilinear 45 degree rotation of a 9x9 random filter should not be exact"
    );
}

#[test]
fn plain_circulant_is_not_steerable_but_orn_kernel_is() {
    let base = random_filter(5, &mut rng(2));
    let orn = kernel_orn(&base, 4, Bilinear).unwrap();
    assert!(worst_kernel_residual(&orn) <= KERNEL_TOLERANCE);

    // circulant(K) with entries K[(i - j) mod N]
    let stack = kernel_triv_to_reg_cn(&base, 4, Bilinear).unwrap();
    let col: Vec<_> = stack.grids().grids().to_vec();
    let grids = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i + 4 - j) % 4))
        .map(|m| col[m].clone())
        .collect();
    let group = GroupSpec::cyclic(4).unwrap();
    let circ = SteerableKernel::new(
        RepSpec::regular(group),
        RepSpec::regular(group),
        filtra::kernel::FilterMatrix::new(4, 4, grids).unwrap(),
        Bilinear,
        orn.kind(),
    )
    .unwrap();
    let g = group.element(0, 1).unwrap();
    assert!(check_kernel_equivariance(&circ, &g).unwrap().abs > 1e-3);
}
