//! Group axioms, representation homomorphisms and the cosine-basis decomposition.

use filtra::group::GroupSpec;
use filtra::repr::{beta_rotation_check, decompose_regular, irreps, rho_regular, RepSpec};
use nalgebra::DMatrix;

fn all_groups(max_n: usize) -> Vec<GroupSpec> {
    (1..=max_n)
        .flat_map(|n| {
            [
                GroupSpec::cyclic(n).unwrap(),
                GroupSpec::dihedral(n).unwrap(),
            ]
        })
        .collect()
}

fn reps(group: GroupSpec) -> Vec<RepSpec> {
    let mut out = vec![RepSpec::trivial(group), RepSpec::regular(group)];
    out.extend(irreps(group));
    out
}

#[test]
fn composition_is_a_group_law() {
    for group in all_groups(12) {
        let elems = group.elements();
        let e = group.identity();
        for a in &elems {
            assert_eq!(a.compose(&e).unwrap(), *a);
            assert_eq!(a.compose(&a.inverse()).unwrap(), e);
            for b in &elems {
                let ab = a.compose(b).unwrap();
                for c in &elems {
                    assert_eq!(
                        ab.compose(c).unwrap(),
                        a.compose(&b.compose(c).unwrap()).unwrap()
                    );
                }
            }
        }
    }
}

#[test]
fn every_representation_is_an_orthogonal_homomorphism() {
    for group in all_groups(12) {
        for rep in reps(group) {
            let mats: Vec<DMatrix<f64>> = group
                .elements()
                .iter()
                .map(|g| rep.matrix(g).unwrap())
                .collect();
            let eye = DMatrix::<f64>::identity(rep.dim(), rep.dim());
            for (a, ma) in group.elements().iter().zip(&mats) {
                assert!(
                    (ma.transpose() * ma - &eye).amax() <= 1e-12,
                    "{rep} on {group} at {a}"
                );
                for (b, mb) in group.elements().iter().zip(&mats) {
                    let ab = a.compose(b).unwrap();
                    let r = (ma * mb - &mats[group.index_of(&ab)]).amax();
                    assert!(r <= 1e-12, "{rep} on {group}: {a}*{b} residual {r:e}");
                }
            }
        }
    }
}

#[test]
fn regular_representation_is_a_permutation_action() {
    for group in all_groups(8) {
        for g in group.elements() {
            let p = rho_regular(&g);
            for col in 0..p.ncols() {
                let column = p.column(col);
                assert_eq!(column.iter().filter(|&&v| v == 1.0).count(), 1);
                assert_eq!(column.iter().filter(|&&v| v == 0.0).count(), p.nrows() - 1);
            }
        }
    }
}

#[test]
fn cosine_basis_reconstructs_the_regular_representation() {
    for group in all_groups(12) {
        for g in group.elements() {
            let (basis, d) = decompose_regular(&g);
            let rebuilt = basis.matrix() * d * basis.inverse();
            let r = (rebuilt - rho_regular(&g)).amax();
            assert!(r <= 1e-10, "{group} at {g}: {r:e}");
            let n = basis.matrix().nrows();
            let back = basis.inverse() * basis.matrix();
            assert!((back - DMatrix::<f64>::identity(n, n)).amax() <= 1e-12);
        }
    }
}

#[test]
fn cosine_basis_columns_are_orthogonal() {
    for group in all_groups(12) {
        let (basis, _) = decompose_regular(&group.identity());
        let gram = basis.gram();
        for r in 0..gram.nrows() {
            for c in 0..gram.ncols() {
                if r != c {
                    assert!(
                        gram[(r, c)].abs() <= 1e-12,
                        "{group} gram[{r},{c}] = {}",
                        gram[(r, c)]
                    );
                }
            }
        }
    }
}

#[test]
fn beta_columns_intertwine_irreps_and_permutations() {
    for n in 1..=12 {
        let group = GroupSpec::dihedral(n).unwrap();
        for k in 0..=n / 2 {
            for g in group.elements() {
                let r = beta_rotation_check(n, k, &g).unwrap();
                assert!(r <= 1e-12, "N={n} k={k} g={g}: {r:e}");
            }
        }
    }
}
