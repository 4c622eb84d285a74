//! Numerical checks of the kernel constraint `κ(gx) = ρ_out(g)·κ(x)·ρ_in(g)⁻¹`,
//! of feature-level equivariance, and of the matrix identity chains behind
//! every kernel construction.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::feature::{act_on_feature, conv2d, FeatureMap};
use crate::filter::{is_grid_exact, transform_filter, FilterGrid, InterpolationMode};
use crate::group::{GroupElement, GroupSpec};
use crate::kernel::{
    kernel_irrep_to_reg_cn, kernel_irrep_to_reg_dn, kernel_orn, kernel_reg_to_reg_cn,
    kernel_reg_to_reg_dn, kernel_reverse, kernel_triv_to_reg_cn, kernel_triv_to_reg_dn,
    SteerableKernel,
};
use crate::repr::{
    basis_w, beta, block_diag, dct_basis_v, flip_b, irrep_unchecked, perm_p, rho_regular, RepSpec,
};

/// Kernel-level tolerance on grid-exact elements.
pub const KERNEL_TOLERANCE: f64 = 1e-12;
/// Feature-level tolerance on the interior crop.
pub const FEATURE_TOLERANCE: f64 = 1e-10;
/// Tolerance for the scalar identity chains.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Absolute and relative residual of one check.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Residual {
    pub abs: f64,
    pub rel: f64,
}

impl Residual {
    fn new(abs: f64, scale: f64) -> Self {
        let rel = if abs == 0.0 { 0.0 } else { abs / scale };
        Self { abs, rel }
    }
}

/// Compares `transform_filter` applied entry-wise against
/// `ρ_out(g)·grids·ρ_in(g)⁻¹`.
pub fn check_kernel_equivariance(kernel: &SteerableKernel, g: &GroupElement) -> Result<Residual> {
    let rho_out = kernel.rep_out().matrix(g)?;
    let rho_in_inv = kernel.rep_in().matrix(&g.inverse())?;
    let lhs = kernel
        .grids()
        .map(|f| transform_filter(f, g, kernel.mode()));
    let rhs = kernel.grids().left_mul(&rho_out).right_mul(&rho_in_inv);
    Ok(Residual::new(lhs.max_abs_diff(&rhs), rhs.max_abs()))
}

/// Compares `conv(κ, π_in(g)f)` with `π_out(g) conv(κ, f)` away from a
/// `⌊S/2⌋` border.
pub fn check_feature_equivariance(
    kernel: &SteerableKernel,
    f: &FeatureMap,
    g: &GroupElement,
) -> Result<Residual> {
    let mode = kernel.mode();
    let lhs = conv2d(kernel, &act_on_feature(g, f, mode)?)?;
    let rhs = act_on_feature(g, &conv2d(kernel, f)?, mode)?;
    let margin = kernel.filter_size() / 2;
    Ok(Residual::new(
        lhs.max_abs_diff_interior(&rhs, margin)?,
        rhs.max_abs_interior(margin),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub passed: bool,
}

/// Scalar placeholders standing in for the rotated filters: `κ^n` and `κ̄^n`
/// become independent random numbers, so every chain is an identity between
/// ordinary matrices.
struct Placeholders {
    k: DVector<f64>,
    kbar: DVector<f64>,
    /// One independent `K` per irrep block, for the regular→regular chains.
    per_block: Vec<DVector<f64>>,
    per_block_bar: Vec<DVector<f64>>,
}

fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

fn vstack2(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape())
        .copy_from(bottom);
    out
}

fn hstack(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts[0].nrows();
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((0, at), p.shape()).copy_from(p);
        at += p.ncols();
    }
    out
}

struct Tracker {
    checks: Vec<IdentityCheck>,
}

impl Tracker {
    fn record(&mut self, name: &'static str, a: &DMatrix<f64>, b: &DMatrix<f64>) {
        let r = (a - b).amax();
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) => c.residual = c.residual.max(r),
            None => self.checks.push(IdentityCheck {
                name,
                residual: r,
                passed: true,
            }),
        }
    }
}

/// Runs every identity chain for `C_N` / `D_N` with scalar placeholders and
/// returns the worst residual of each link, thresholded at
/// [`IDENTITY_TOLERANCE`].
pub fn verify_appendix_identities(n: usize) -> Result<Vec<IdentityCheck>> {
    let dn = GroupSpec::dihedral(n)?;
    let blocks = n / 2 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + n as u64);
    let mut rand_vec = || DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let ph = Placeholders {
        k: rand_vec(),
        kbar: rand_vec(),
        per_block: (0..blocks).map(|_| rand_vec()).collect(),
        per_block_bar: (0..blocks).map(|_| rand_vec()).collect(),
    };
    let betas: Vec<DMatrix<f64>> = (0..blocks).map(|k| beta(n, k)).collect::<Result<_>>()?;
    let v = dct_basis_v(n)?;
    let v_inv = v.inverse();
    let w = basis_w(n)?;
    let w_inv = w.inverse();
    let psi = |j: usize, k: usize, g: &GroupElement| irrep_unchecked(j, k, g);
    let psi_inv = |j: usize, k: usize, g: &GroupElement| irrep_unchecked(j, k, &g.inverse());
    let mut t = Tracker { checks: Vec::new() };

    for g in dn.elements() {
        let i1 = g.i1() as i64;
        let p = perm_p(n, i1)?;
        let p_inv = perm_p(n, -i1)?;
        let b = flip_b(n, i1)?;
        let rho_d = rho_regular(&g);

        // K(gx) as a permutation of the stacks
        let (k_moved, kbar_moved) = if g.is_reflection() {
            (&b * &ph.kbar, &b * &ph.k)
        } else {
            (&p * &ph.k, &p * &ph.kbar)
        };

        for (k, bk) in betas.iter().enumerate() {
            if !g.is_reflection() {
                // diag(P K) β_k = P diag(K) P⁻¹ β_k = ρ_reg K_{k→reg} ψ_{0,k}⁻¹
                for stack in [&ph.k, &ph.kbar] {
                    let l1 = diag(&(&p * stack)) * bk;
                    let l2 = &p * diag(stack) * &p_inv * bk;
                    let l3 = &p * (diag(stack) * bk) * psi_inv(0, k, &g);
                    t.record("cn_irrep_shift_diag", &l1, &l2);
                    t.record("cn_irrep_lemma", &l2, &l3);
                }
            } else {
                // diag(B K̄) β_k = B diag(K̄) B⁻¹ β_k = B diag(K̄) β_k ψ_{0,k}⁻¹
                //               = -B diag(K̄) β_k ψ_{1,k}⁻¹, and the same with K
                for (moved, stack) in [(&k_moved, &ph.kbar), (&kbar_moved, &ph.k)] {
                    let m1 = diag(moved) * bk;
                    let m2 = &b * diag(stack) * b.transpose() * bk;
                    let m3 = &b * (diag(stack) * bk) * psi_inv(0, k, &g);
                    let m4 = -(&b * (diag(stack) * bk) * psi_inv(1, k, &g));
                    t.record("reflect_exchange_diag", &m1, &m2);
                    t.record("reflect_exchange_psi0", &m2, &m3);
                    t.record("reflect_exchange_psi1", &m3, &m4);
                }
            }

            // dihedral irrep kernel: stacked form transforms by ρ_reg and ψ_{j,k}
            for j in 0..2 {
                let sign = if j == 0 { 1.0 } else { -1.0 };
                let kernel = vstack2(&(diag(&ph.k) * bk), &(diag(&ph.kbar) * bk * sign));
                let moved = vstack2(&(diag(&k_moved) * bk), &(diag(&kbar_moved) * bk * sign));
                let rhs = &rho_d * kernel * psi_inv(j, k, &g);
                t.record("dn_irrep_lemma", &moved, &rhs);
            }
        }

        // C_N regular→regular chain, rotations only
        if !g.is_reflection() {
            let cg = GroupSpec::cyclic(n)?.element(0, g.i1())?;
            let ks: Vec<_> = betas
                .iter()
                .zip(&ph.per_block)
                .map(|(bk, kv)| diag(kv) * bk)
                .collect();
            let c1 = hstack(
                &betas
                    .iter()
                    .zip(&ph.per_block)
                    .map(|(bk, kv)| diag(&(&p * kv)) * bk)
                    .collect::<Vec<_>>(),
            ) * &v_inv;
            let c2 = hstack(
                &ks.iter()
                    .enumerate()
                    .map(|(k, kk)| &p * kk * psi_inv(0, k, &cg))
                    .collect::<Vec<_>>(),
            ) * &v_inv;
            let d_inv = block_diag(&(0..blocks).map(|k| psi_inv(0, k, &cg)).collect::<Vec<_>>());
            let stacked = hstack(&ks);
            let c3 = &p * &stacked * &d_inv * &v_inv;
            let c4 = &p * &stacked * &v_inv * v.matrix() * &d_inv * &v_inv;
            let k_rr = &stacked * &v_inv;
            let c5 = &p * &k_rr * &p_inv;
            t.record("cn_reg_blockwise", &c1, &c2);
            t.record("cn_reg_factor_d", &c2, &c3);
            t.record("cn_reg_insert_basis", &c3, &c4);
            t.record("cn_reg_lemma", &c4, &c5);
        }

        // D_N regular→regular chain over every element
        let mut blocks_now = Vec::new();
        let mut blocks_moved = Vec::new();
        let mut d_inv_parts = Vec::new();
        for j in 0..2 {
            let sign = if j == 0 { 1.0 } else { -1.0 };
            for (k, bk) in betas.iter().enumerate() {
                let (kv, kbv) = (&ph.per_block[k], &ph.per_block_bar[k]);
                let (mv, mbv) = if g.is_reflection() {
                    (&b * kbv, &b * kv)
                } else {
                    (&p * kv, &p * kbv)
                };
                blocks_now.push(vstack2(&(diag(kv) * bk), &(diag(kbv) * bk * sign)));
                blocks_moved.push(vstack2(&(diag(&mv) * bk), &(diag(&mbv) * bk * sign)));
                d_inv_parts.push(psi(j, k, &g.inverse()));
            }
        }
        let stacked = hstack(&blocks_now);
        let moved = hstack(&blocks_moved) * &w_inv;
        let via_d = &rho_d * &stacked * block_diag(&d_inv_parts) * &w_inv;
        let k_rr = &stacked * &w_inv;
        let lemma = &rho_d * &k_rr * rho_regular(&g.inverse());
        t.record("dn_reg_blockwise", &moved, &via_d);
        t.record("dn_reg_lemma", &via_d, &lemma);
    }

    for c in &mut t.checks {
        c.passed = c.residual <= IDENTITY_TOLERANCE;
    }
    Ok(t.checks)
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub groups: Vec<GroupSpec>,
    pub sizes: Vec<usize>,
    pub modes: Vec<InterpolationMode>,
    pub seed: u64,
    /// Side length of the random feature maps.
    pub feature_size: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            groups: vec![
                GroupSpec::cyclic(4).expect("valid"),
                GroupSpec::dihedral(4).expect("valid"),
            ],
            sizes: vec![3],
            modes: vec![InterpolationMode::Bilinear],
            seed: 42,
            feature_size: 15,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementResidual {
    pub element: GroupElement,
    pub residual: Residual,
    /// Whether `element` acts exactly on the kernel grid.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceReport {
    pub kernel_kind: String,
    pub group: GroupSpec,
    pub size: usize,
    pub mode: InterpolationMode,
    pub per_element: Vec<ElementResidual>,
    pub exact_subgroup_max: f64,
    pub full_group_max: f64,
    /// Worst feature-level residual over elements that act exactly on the
    /// feature map grid.
    pub feature_exact_max: f64,
}

impl EquivarianceReport {
    pub fn rotation_order(&self) -> usize {
        self.group.rotation_order()
    }

    /// Kernel residuals on the exact subgroup and feature residuals on the
    /// exact quarter turns are within tolerance.
    pub fn passed(&self) -> bool {
        self.exact_subgroup_max <= KERNEL_TOLERANCE && self.feature_exact_max <= FEATURE_TOLERANCE
    }
}

/// Every kernel family for `group` built from seeded random bases.
pub fn kernel_families(
    group: GroupSpec,
    size: usize,
    mode: InterpolationMode,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SteerableKernel>> {
    let n = group.rotation_order();
    let mut base = || -> Result<FilterGrid> {
        FilterGrid::new(
            size,
            (0..size * size).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
    };
    let mut out = Vec::new();
    if group.is_dihedral() {
        out.push(kernel_triv_to_reg_dn(&base()?, n, mode)?);
        for j in 0..2 {
            for k in 0..=n / 2 {
                out.push(kernel_irrep_to_reg_dn(&base()?, n, j, k, mode)?);
            }
        }
        let bases = (0..2 * (n / 2 + 1))
            .map(|_| base())
            .collect::<Result<Vec<_>>>()?;
        out.push(kernel_reg_to_reg_dn(&bases, n, mode)?);
    } else {
        out.push(kernel_triv_to_reg_cn(&base()?, n, mode)?);
        for conjugate in [false, true] {
            for k in 0..=n / 2 {
                out.push(kernel_irrep_to_reg_cn(&base()?, n, k, mode, conjugate)?);
            }
        }
        let bases = (0..n / 2 + 1).map(|_| base()).collect::<Result<Vec<_>>>()?;
        out.push(kernel_reg_to_reg_cn(&bases, n, mode)?);
        out.push(kernel_orn(&base()?, n, mode)?);
    }
    let reversed: Vec<_> = out
        .iter()
        .filter(|k| k.rep_in() != k.rep_out())
        .map(kernel_reverse)
        .collect();
    out.extend(reversed);
    Ok(out)
}

fn random_feature(rep: RepSpec, side: usize, rng: &mut ChaCha8Rng) -> Result<FeatureMap> {
    let len = rep.dim() * side * side;
    FeatureMap::new(
        rep,
        1,
        side,
        side,
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

/// Evaluates one kernel over every group element, plus the feature-level
/// check on `feature` for elements exact on the feature grid.
pub fn evaluate_kernel(
    kernel: &SteerableKernel,
    feature: &FeatureMap,
) -> Result<EquivarianceReport> {
    let group = kernel.group();
    let size = kernel.filter_size();
    let mode = kernel.mode();
    let per_element = group
        .elements()
        .into_iter()
        .map(|g| {
            Ok(ElementResidual {
                element: g,
                residual: check_kernel_equivariance(kernel, &g)?,
                exact: is_grid_exact(&g, size, mode),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let side = feature.height();
    let mut feature_exact_max = 0.0f64;
    for g in group.elements() {
        if is_grid_exact(&g, side, mode) && is_grid_exact(&g, size, mode) {
            feature_exact_max =
                feature_exact_max.max(check_feature_equivariance(kernel, feature, &g)?.abs);
        }
    }
    let max_of = |exact_only: bool| {
        per_element
            .iter()
            .filter(|e| e.exact || !exact_only)
            .map(|e| e.residual.abs)
            .fold(0.0, f64::max)
    };
    Ok(EquivarianceReport {
        kernel_kind: kernel.label(),
        group,
        size,
        mode,
        exact_subgroup_max: max_of(true),
        full_group_max: max_of(false),
        per_element,
        feature_exact_max,
    })
}

/// Builds every kernel family for each `(group, S, mode)` and evaluates it.
/// Output order and values depend only on `config`.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<EquivarianceReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut jobs = Vec::new();
    for &group in &config.groups {
        for &size in &config.sizes {
            for &mode in &config.modes {
                let side = config.feature_size.max(size);
                for kernel in kernel_families(group, size, mode, &mut rng)? {
                    let feature = random_feature(kernel.rep_in(), side, &mut rng)?;
                    jobs.push((kernel, feature));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|(k, f)| evaluate_kernel(k, f))
        .collect()
}

/// CSV with one row per (kernel, element):
/// `kind,group,S,mode,i0,i1,abs_residual,rel_residual`.
pub fn write_report_csv<W: Write>(
    reports: &[EquivarianceReport],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "kind,group,S,mode,i0,i1,abs_residual,rel_residual")?;
    for r in reports {
        for e in &r.per_element {
            writeln!(
                out,
                "{},{},{},{},{},{},{:e},{:e}",
                r.kernel_kind,
                r.group,
                r.size,
                r.mode,
                e.element.i0(),
                e.element.i1(),
                e.residual.abs,
                e.residual.rel
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{FilterMatrix, KernelKind};

    use InterpolationMode::{Bilinear, Nearest};

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn random_grid(rng: &mut ChaCha8Rng, size: usize) -> FilterGrid {
        FilterGrid::new(
            size,
            (0..size * size).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_element_has_zero_residual() {
        let mut r = rng();
        for k in kernel_families(GroupSpec::dihedral(8).unwrap(), 9, Bilinear, &mut r).unwrap() {
            let res = check_kernel_equivariance(&k, &k.group().identity()).unwrap();
            assert_eq!(res, Residual::default());
        }
    }

    #[test]
    fn triv_to_reg_quarter_turn_is_bit_exact() {
        let mut r = rng();
        let k = kernel_triv_to_reg_cn(&random_grid(&mut r, 3), 4, Bilinear).unwrap();
        let g = k.group().element(0, 1).unwrap();
        assert_eq!(
            check_kernel_equivariance(&k, &g).unwrap(),
            Residual::default()
        );
    }

    #[test]
    fn interpolated_angles_leave_a_residual() {
        let mut r = rng();
        let k = kernel_irrep_to_reg_dn(&random_grid(&mut r, 9), 8, 1, 1, Bilinear).unwrap();
        let g = k.group().element(0, 1).unwrap();
        let res = check_kernel_equivariance(&k, &g).unwrap();
        assert!(res.abs > 1e-6 && res.abs.is_finite());
    }

    #[test]
    fn non_steerable_kernel_is_detected() {
        let c4 = GroupSpec::cyclic(4).unwrap();
        let mut r = rng();
        let grids =
            FilterMatrix::new(4, 1, (0..4).map(|_| random_grid(&mut r, 3)).collect()).unwrap();
        let k = SteerableKernel::new(
            RepSpec::trivial(c4),
            RepSpec::regular(c4),
            grids,
            Bilinear,
            KernelKind::TrivToReg,
        )
        .unwrap();
        let res = check_kernel_equivariance(&k, &c4.element(0, 1).unwrap()).unwrap();
        assert!(res.abs > 1e-3);
    }

    #[test]
    fn feature_equivariance_examples() {
        let mut r = rng();
        let c4 = GroupSpec::cyclic(4).unwrap();
        let k = kernel_triv_to_reg_cn(&random_grid(&mut r, 3), 4, Bilinear).unwrap();
        let f = random_feature(k.rep_in(), 15, &mut r).unwrap();
        assert_eq!(
            check_feature_equivariance(&k, &f, &c4.identity())
                .unwrap()
                .abs,
            0.0
        );
        assert!(
            check_feature_equivariance(&k, &f, &c4.element(0, 2).unwrap())
                .unwrap()
                .abs
                <= 1e-10
        );

        let d4 = GroupSpec::dihedral(4).unwrap();
        let bases: Vec<_> = (0..6).map(|_| random_grid(&mut r, 3)).collect();
        let k = kernel_reg_to_reg_dn(&bases, 4, Bilinear).unwrap();
        let f = random_feature(k.rep_in(), 15, &mut r).unwrap();
        assert!(
            check_feature_equivariance(&k, &f, &d4.element(1, 1).unwrap())
                .unwrap()
                .abs
                <= 1e-10
        );

        let wrong = random_feature(RepSpec::trivial(d4), 15, &mut r).unwrap();
        assert!(check_feature_equivariance(&k, &wrong, &d4.identity()).is_err());
    }

    #[test]
    fn appendix_identities_small_cases() {
        for n in [1, 4, 5] {
            let checks = verify_appendix_identities(n).unwrap();
            assert!(!checks.is_empty());
            for c in checks {
                assert!(c.passed, "N={n} {} residual {}", c.name, c.residual);
            }
        }
    }

    #[test]
    fn suite_on_trivial_group_is_zero() {
        let cfg = SuiteConfig {
            groups: vec![GroupSpec::cyclic(1).unwrap()],
            sizes: vec![3],
            ..SuiteConfig::default()
        };
        for r in run_suite(&cfg).unwrap() {
            assert_eq!(r.full_group_max, 0.0);
            assert_eq!(r.feature_exact_max, 0.0);
        }
    }

    #[test]
    fn suite_is_deterministic_and_well_formed() {
        let cfg = SuiteConfig {
            groups: vec![
                GroupSpec::cyclic(8).unwrap(),
                GroupSpec::dihedral(2).unwrap(),
            ],
            sizes: vec![3],
            modes: vec![Nearest],
            seed: 3,
            feature_size: 9,
        };
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert_eq!(r.per_element.len(), r.group.order());
            assert!(r.exact_subgroup_max <= r.full_group_max + 1e-15);
            assert!(r.passed(), "{} {}", r.kernel_kind, r.group);
        }
        let mut csv = Vec::new();
        write_report_csv(&a, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let rows: usize = a.iter().map(|r| r.per_element.len()).sum();
        assert_eq!(text.lines().count(), rows + 1);
        assert!(text.starts_with("kind,group,S,mode,i0,i1,abs_residual,rel_residual\n"));
    }
}
