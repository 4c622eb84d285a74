//! Trivial, regular and irreducible representations of `C_N` / `D_N`, and the
//! cosine bases `V` and `W` that block-diagonalise the regular representation.
//!
//! Regular-representation axes follow [`GroupSpec::elements`]. Irreps are
//! indexed by a reflection frequency `j ∈ {0, 1}` and a rotation frequency
//! `0 ≤ k ≤ ⌊N/2⌋`. Irreps with `k == 0` or `k == N/2` are one-dimensional.
//!
//! For `k == N/2` the rotation part is `(-1)^i1`. This is the only choice for
//! which `ρ_reg = V·D·V⁻¹` holds.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::group::{cos_sin_turns, GroupElement, GroupSpec};

/// Dense real representation matrix.
pub type RepMatrix = DMatrix<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepKind {
    Trivial,
    Irrep { j: usize, k: usize },
    Regular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RepSpec {
    kind: RepKind,
    spec: GroupSpec,
}

impl RepSpec {
    pub fn trivial(spec: GroupSpec) -> Self {
        Self {
            kind: RepKind::Trivial,
            spec,
        }
    }

    pub fn regular(spec: GroupSpec) -> Self {
        Self {
            kind: RepKind::Regular,
            spec,
        }
    }

    pub fn irrep(spec: GroupSpec, j: usize, k: usize) -> Result<Self> {
        let n = spec.rotation_order();
        if j > 1 || k > n / 2 || (j == 1 && !spec.is_dihedral()) {
            return Err(Error::IrrepOutOfRange {
                j,
                k,
                group: spec.to_string(),
            });
        }
        Ok(Self {
            kind: RepKind::Irrep { j, k },
            spec,
        })
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn group(&self) -> GroupSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            RepKind::Trivial => 1,
            RepKind::Irrep { k, .. } => irrep_dim(self.spec.rotation_order(), k),
            RepKind::Regular => self.spec.order(),
        }
    }

    /// `ρ(g)`.
    pub fn matrix(&self, g: &GroupElement) -> Result<RepMatrix> {
        self.spec.check_same(&g.spec())?;
        Ok(match self.kind {
            RepKind::Trivial => rho_trivial(g),
            RepKind::Irrep { j, k } => irrep_unchecked(j, k, g),
            RepKind::Regular => rho_regular(g),
        })
    }
}

impl fmt::Display for RepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RepKind::Trivial => write!(f, "trivial"),
            RepKind::Irrep { j, k } => write!(f, "irrep:{j}:{k}"),
            RepKind::Regular => write!(f, "regular"),
        }
    }
}

/// Dimension of `ψ_{j,k}` in a group with rotation order `n`.
pub fn irrep_dim(n: usize, k: usize) -> usize {
    if k == 0 || (n.is_multiple_of(2) && 2 * k == n) {
        1
    } else {
        2
    }
}

/// Every irrep `(j, k)` appearing in the regular representation, in the
/// column-block order of `V` (cyclic) or `W` (dihedral).
pub fn irreps(spec: GroupSpec) -> Vec<RepSpec> {
    let n = spec.rotation_order();
    (0..spec.reflection_order())
        .flat_map(|j| {
            (0..=n / 2).map(move |k| RepSpec {
                kind: RepKind::Irrep { j, k },
                spec,
            })
        })
        .collect()
}

/// `P(i1) = roll(I_N, i1, 0)`: rows of the identity rolled down by `i1`, so
/// `P·e_m = e_{m+i1}`.
pub fn perm_p(n: usize, i1: i64) -> Result<RepMatrix> {
    if n == 0 {
        return Err(Error::InvalidOrder(n));
    }
    let s = i1.rem_euclid(n as i64) as usize;
    Ok(DMatrix::from_fn(n, n, |r, c| {
        if c == (r + n - s) % n {
            1.0
        } else {
            0.0
        }
    }))
}

/// `B(i1) = flipud(P(-i1 - 1))`, which sends `e_m` to `e_{i1-m}`.
pub fn flip_b(n: usize, i1: i64) -> Result<RepMatrix> {
    let p = perm_p(n, -i1 - 1)?;
    Ok(DMatrix::from_fn(n, n, |r, c| p[(n - 1 - r, c)]))
}

pub fn rho_trivial(_g: &GroupElement) -> RepMatrix {
    DMatrix::from_element(1, 1, 1.0)
}

/// Regular representation as a permutation matrix.
pub fn rho_regular(g: &GroupElement) -> RepMatrix {
    let spec = g.spec();
    let n = spec.rotation_order();
    let i1 = g.i1() as i64;
    if !spec.is_dihedral() {
        return perm_p(n, i1).expect("n >= 1");
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    if g.i0() == 0 {
        let p = perm_p(n, i1).expect("n >= 1");
        out.view_mut((0, 0), (n, n)).copy_from(&p);
        out.view_mut((n, n), (n, n)).copy_from(&p);
    } else {
        let b = flip_b(n, i1).expect("n >= 1");
        out.view_mut((0, n), (n, n)).copy_from(&b);
        out.view_mut((n, 0), (n, n)).copy_from(&b);
    }
    out
}

/// `ψ_{j,k}(g)`.
pub fn irrep(spec: GroupSpec, j: usize, k: usize, g: &GroupElement) -> Result<RepMatrix> {
    RepSpec::irrep(spec, j, k)?.matrix(g)
}

/// `ψ_{j,k}` without range checks. `j == 1` is allowed for cyclic elements
/// (where `i0` is always 0, so it coincides with `j == 0`).
pub(crate) fn irrep_unchecked(j: usize, k: usize, g: &GroupElement) -> RepMatrix {
    let n = g.spec().rotation_order();
    let (i0, i1) = (g.i0(), g.i1());
    let reflect_sign = if j == 1 && i0 == 1 { -1.0 } else { 1.0 };
    if irrep_dim(n, k) == 1 {
        let rot = if k == 0 || i1 % 2 == 0 { 1.0 } else { -1.0 };
        return DMatrix::from_element(1, 1, rot * reflect_sign);
    }
    let (c, s) = cos_sin_turns((k * i1) as i64, n);
    let flip = if i0 == 1 { -1.0 } else { 1.0 };
    // Ψ_k(i1) · diag(1, (-1)^i0) · ((-1)^j)^i0
    DMatrix::from_row_slice(
        2,
        2,
        &[
            c * reflect_sign,
            -s * flip * reflect_sign,
            s * reflect_sign,
            c * flip * reflect_sign,
        ],
    )
}

/// Cosine basis block `β_k`: `N×1` for `k ∈ {0, N/2}`, otherwise `N×2` with
/// rows `[cos kθ_n, sin kθ_n]`.
pub fn beta(n: usize, k: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidOrder(n));
    }
    if k > n / 2 {
        return Err(Error::IrrepOutOfRange {
            j: 0,
            k,
            group: format!("c{n}"),
        });
    }
    let d = irrep_dim(n, k);
    Ok(DMatrix::from_fn(n, d, |row, col| {
        let (c, s) = cos_sin_turns((k * row) as i64, n);
        if col == 0 {
            c
        } else {
            s
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisBlock {
    pub j: usize,
    pub k: usize,
    pub columns: Range<usize>,
}

/// `V` (cyclic) or `W` (dihedral) with its column blocks.
#[derive(Clone, Debug)]
pub struct DctBasis {
    matrix: DMatrix<f64>,
    blocks: Vec<BasisBlock>,
    norms_sq: Vec<f64>,
}

impl DctBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn blocks(&self) -> &[BasisBlock] {
        &self.blocks
    }

    /// `M^⊤ M`, computed numerically.
    pub fn gram(&self) -> DMatrix<f64> {
        self.matrix.transpose() * &self.matrix
    }

    /// `Σ⁻¹ M^⊤`, with the diagonal `Σ = M^⊤ M` taken from its closed form.
    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.matrix.transpose();
        for (r, norm) in self.norms_sq.iter().enumerate() {
            inv.row_mut(r).scale_mut(1.0 / norm);
        }
        inv
    }
}

/// `V = [β_0 β_1 … β_⌊N/2⌋]`.
pub fn dct_basis_v(n: usize) -> Result<DctBasis> {
    if n == 0 {
        return Err(Error::InvalidOrder(n));
    }
    let mut matrix = DMatrix::zeros(n, n);
    let mut blocks = Vec::new();
    let mut norms_sq = Vec::with_capacity(n);
    let mut col = 0;
    for k in 0..=n / 2 {
        let b = beta(n, k)?;
        let d = b.ncols();
        matrix.view_mut((0, col), (n, d)).copy_from(&b);
        blocks.push(BasisBlock {
            j: 0,
            k,
            columns: col..col + d,
        });
        let norm = if d == 1 { n as f64 } else { n as f64 / 2.0 };
        norms_sq.extend(std::iter::repeat_n(norm, d));
        col += d;
    }
    debug_assert_eq!(col, n);
    Ok(DctBasis {
        matrix,
        blocks,
        norms_sq,
    })
}

/// `W = [[V, V], [V, -V]]`; column block `(j, k)` is `[β_k; (-1)^j β_k]`.
pub fn basis_w(n: usize) -> Result<DctBasis> {
    let v = dct_basis_v(n)?;
    let mut matrix = DMatrix::zeros(2 * n, 2 * n);
    matrix.view_mut((0, 0), (n, n)).copy_from(&v.matrix);
    matrix.view_mut((0, n), (n, n)).copy_from(&v.matrix);
    matrix.view_mut((n, 0), (n, n)).copy_from(&v.matrix);
    matrix.view_mut((n, n), (n, n)).copy_from(&(-&v.matrix));
    let blocks = (0..2)
        .flat_map(|j| {
            v.blocks.iter().map(move |b| BasisBlock {
                j,
                k: b.k,
                columns: b.columns.start + j * n..b.columns.end + j * n,
            })
        })
        .collect();
    let norms_sq = v
        .norms_sq
        .iter()
        .chain(&v.norms_sq)
        .map(|x| 2.0 * x)
        .collect();
    Ok(DctBasis {
        matrix,
        blocks,
        norms_sq,
    })
}

/// Direct sum of square blocks.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}

/// The basis (`V` or `W`) and `D(g) = ⊕ ψ_{j,k}(g)` with
/// `ρ_reg(g) = basis · D(g) · basis⁻¹`.
pub fn decompose_regular(g: &GroupElement) -> (DctBasis, DMatrix<f64>) {
    let spec = g.spec();
    let n = spec.rotation_order();
    let basis = if spec.is_dihedral() {
        basis_w(n)
    } else {
        dct_basis_v(n)
    }
    .expect("n >= 1");
    let d_blocks: Vec<_> = basis
        .blocks
        .iter()
        .map(|b| irrep_unchecked(b.j, b.k, g))
        .collect();
    (basis, block_diag(&d_blocks))
}

/// Max-abs residual of the identities relating `β_k` to `P` and `B`:
///
/// * rotation `(0, i1)`: `ψ_{j,k}(g) β_k^⊤ = β_k^⊤ P(i1)` for both `j`;
/// * reflection `(1, i1)`: `ψ_{0,k}(g) β_k^⊤ = β_k^⊤ B(i1)` and
///   `ψ_{1,k}(g) β_k^⊤ = -β_k^⊤ B(i1)`.
pub fn beta_rotation_check(n: usize, k: usize, g: &GroupElement) -> Result<f64> {
    if g.spec().rotation_order() != n {
        return Err(Error::Shape(format!(
            "element of {} used with N={n}",
            g.spec()
        )));
    }
    let bt = beta(n, k)?.transpose();
    let i1 = g.i1() as i64;
    let (target, signs) = if g.is_reflection() {
        (&bt * flip_b(n, i1)?, [1.0, -1.0])
    } else {
        (&bt * perm_p(n, i1)?, [1.0, 1.0])
    };
    let mut worst = 0.0f64;
    for (j, sign) in signs.into_iter().enumerate() {
        let lhs = irrep_unchecked(j, k, g) * &bt;
        let r = (lhs - &target * sign).amax();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `V·D(t)·V⁻¹` with the irreps evaluated at the real rotation index `t`,
/// i.e. at angle `2πt/N`. Agrees with `ρ_reg((0, t mod N))` at integer `t`.
pub fn regular_rep_continuous(n: usize, t: f64) -> Result<DMatrix<f64>> {
    let basis = dct_basis_v(n)?;
    let angle = TAU * t / n as f64;
    let blocks: Vec<_> = basis
        .blocks
        .iter()
        .map(|b| {
            let a = b.k as f64 * angle;
            if irrep_dim(n, b.k) == 1 {
                DMatrix::from_element(1, 1, a.cos())
            } else {
                DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()])
            }
        })
        .collect();
    Ok(basis.matrix() * block_diag(&blocks) * basis.inverse())
}
