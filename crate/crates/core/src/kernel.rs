//! Steerable kernels assembled from rotated and reflected copies of base
//! filters.
//!
//! A kernel is a `dim(ρ_out) × dim(ρ_in)` matrix whose entries are filter
//! grids. Scalar matrices act on it by linear combination of grids, which is
//! how `V⁻¹`, `W⁻¹` and the representation matrices are applied.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filter::{build_stack_k, build_stack_kbar, FilterGrid, InterpolationMode};
use crate::group::GroupSpec;
use crate::repr::{basis_w, beta, dct_basis_v, irreps, RepKind, RepSpec};

/// Dense matrix of equally sized filter grids, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterMatrix {
    rows: usize,
    cols: usize,
    size: usize,
    grids: Vec<FilterGrid>,
}

impl FilterMatrix {
    pub fn new(rows: usize, cols: usize, grids: Vec<FilterGrid>) -> Result<Self> {
        if grids.len() != rows * cols || grids.is_empty() {
            return Err(Error::Shape(format!(
                "{} grids for a {rows}x{cols} filter matrix",
                grids.len()
            )));
        }
        let size = grids[0].size();
        if grids.iter().any(|g| g.size() != size) {
            return Err(Error::Shape("filter matrix entries differ in size".into()));
        }
        Ok(Self {
            rows,
            cols,
            size,
            grids,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Spatial size `S` shared by every entry.
    pub fn filter_size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> &FilterGrid {
        &self.grids[row * self.cols + col]
    }

    pub fn grids(&self) -> &[FilterGrid] {
        &self.grids
    }

    pub fn map(&self, f: impl Fn(&FilterGrid) -> FilterGrid) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            size: self.size,
            grids: self.grids.iter().map(f).collect(),
        }
    }

    /// `self · m` for a scalar matrix `m`.
    pub fn right_mul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(self.cols, m.nrows(), "inner dimension mismatch");
        let cols = m.ncols();
        let grids = (0..self.rows)
            .flat_map(|r| {
                (0..cols).map(move |c| {
                    FilterGrid::linear_combination(
                        self.size,
                        (0..self.cols).map(|i| (m[(i, c)], self.get(r, i))),
                    )
                })
            })
            .collect();
        Self {
            rows: self.rows,
            cols,
            size: self.size,
            grids,
        }
    }

    /// `m · self` for a scalar matrix `m`.
    pub fn left_mul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.ncols(), self.rows, "inner dimension mismatch");
        let rows = m.nrows();
        let grids = (0..rows)
            .flat_map(|r| {
                (0..self.cols).map(move |c| {
                    FilterGrid::linear_combination(
                        self.size,
                        (0..self.rows).map(|i| (m[(r, i)], self.get(i, c))),
                    )
                })
            })
            .collect();
        Self {
            rows,
            cols: self.cols,
            size: self.size,
            grids,
        }
    }

    pub fn transpose(&self) -> Self {
        let grids = (0..self.cols)
            .flat_map(|c| (0..self.rows).map(move |r| self.get(r, c).clone()))
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            size: self.size,
            grids,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|g| g.scaled(a))
    }

    /// Side-by-side concatenation.
    pub fn hstack(parts: &[FilterMatrix]) -> Result<Self> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::Shape("hstack row counts differ".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let grids = (0..rows)
            .flat_map(|r| {
                parts
                    .iter()
                    .flat_map(move |p| (0..p.cols).map(move |c| p.get(r, c).clone()))
            })
            .collect();
        Self::new(rows, cols, grids)
    }

    /// Top-to-bottom concatenation.
    pub fn vstack(parts: &[FilterMatrix]) -> Result<Self> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if parts.iter().any(|p| p.cols != cols) {
            return Err(Error::Shape("vstack column counts differ".into()));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let grids = parts.iter().flat_map(|p| p.grids.iter().cloned()).collect();
        Self::new(rows, cols, grids)
    }

    pub fn max_abs_diff(&self, other: &FilterMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        self.grids
            .iter()
            .zip(&other.grids)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.grids
            .iter()
            .map(FilterGrid::max_abs)
            .fold(0.0, f64::max)
    }

    fn column(grids: Vec<FilterGrid>) -> Result<Self> {
        Self::new(grids.len(), 1, grids)
    }
}

/// Which construction produced a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    TrivToReg,
    IrrepToReg { j: usize, k: usize, conjugate: bool },
    RegToReg,
    Orn,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TrivToReg => f.write_str("triv2reg"),
            Self::IrrepToReg {
                j,
                k,
                conjugate: false,
            } => write!(f, "irrep2reg_j{j}_k{k}"),
            Self::IrrepToReg {
                j,
                k,
                conjugate: true,
            } => write!(f, "irrep2reg_conj_j{j}_k{k}"),
            Self::RegToReg => f.write_str("reg2reg"),
            Self::Orn => f.write_str("orn"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteerableKernel {
    group: GroupSpec,
    rep_in: RepSpec,
    rep_out: RepSpec,
    grids: FilterMatrix,
    mode: InterpolationMode,
    kind: KernelKind,
    reversed: bool,
}

impl SteerableKernel {
    /// Wraps an arbitrary filter matrix. Shapes and groups are checked, the
    /// steerability constraint is not.
    pub fn new(
        rep_in: RepSpec,
        rep_out: RepSpec,
        grids: FilterMatrix,
        mode: InterpolationMode,
        kind: KernelKind,
    ) -> Result<Self> {
        let group = rep_in.group();
        group.check_same(&rep_out.group())?;
        if grids.rows() != rep_out.dim() || grids.cols() != rep_in.dim() {
            return Err(Error::Shape(format!(
                "{}x{} grids for {rep_out} <- {rep_in}",
                grids.rows(),
                grids.cols()
            )));
        }
        Ok(Self {
            group,
            rep_in,
            rep_out,
            grids,
            mode,
            kind,
            reversed: false,
        })
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn rep_in(&self) -> RepSpec {
        self.rep_in
    }

    pub fn rep_out(&self) -> RepSpec {
        self.rep_out
    }

    pub fn grids(&self) -> &FilterMatrix {
        &self.grids
    }

    pub fn mode(&self) -> InterpolationMode {
        self.mode
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn filter_size(&self) -> usize {
        self.grids.filter_size()
    }

    /// Kind label including the reversal, e.g. `rev_triv2reg`.
    pub fn label(&self) -> String {
        if self.reversed {
            format!("rev_{}", self.kind)
        } else {
            self.kind.to_string()
        }
    }
}

/// `K^{C_N}_{0→reg} = K`.
pub fn kernel_triv_to_reg_cn(
    base: &FilterGrid,
    n: usize,
    mode: InterpolationMode,
) -> Result<SteerableKernel> {
    let group = GroupSpec::cyclic(n)?;
    let stack = build_stack_k(base, n, mode)?;
    SteerableKernel::new(
        RepSpec::trivial(group),
        RepSpec::regular(group),
        FilterMatrix::column(stack.into_entries())?,
        mode,
        KernelKind::TrivToReg,
    )
}

/// `K^{D_N}_{0→reg} = [K; K̄]`.
pub fn kernel_triv_to_reg_dn(
    base: &FilterGrid,
    n: usize,
    mode: InterpolationMode,
) -> Result<SteerableKernel> {
    let group = GroupSpec::dihedral(n)?;
    let mut grids = build_stack_k(base, n, mode)?.into_entries();
    grids.extend(build_stack_kbar(base, n, mode)?.into_entries());
    SteerableKernel::new(
        RepSpec::trivial(group),
        RepSpec::regular(group),
        FilterMatrix::column(grids)?,
        mode,
        KernelKind::TrivToReg,
    )
}

/// `diag(K)·β_k`, or `diag(K̄)·β_k` when `conjugate` is set.
pub fn kernel_irrep_to_reg_cn(
    base: &FilterGrid,
    n: usize,
    k: usize,
    mode: InterpolationMode,
    conjugate: bool,
) -> Result<SteerableKernel> {
    let group = GroupSpec::cyclic(n)?;
    let rep_in = RepSpec::irrep(group, 0, k)?;
    SteerableKernel::new(
        rep_in,
        RepSpec::regular(group),
        irrep_block(base, n, k, mode, conjugate)?,
        mode,
        KernelKind::IrrepToReg { j: 0, k, conjugate },
    )
}

fn irrep_block(
    base: &FilterGrid,
    n: usize,
    k: usize,
    mode: InterpolationMode,
    conjugate: bool,
) -> Result<FilterMatrix> {
    let b = beta(n, k)?;
    let stack = if conjugate {
        build_stack_kbar(base, n, mode)?
    } else {
        build_stack_k(base, n, mode)?
    };
    let d = b.ncols();
    let mut grids = Vec::with_capacity(n * d);
    for (row, f) in stack.entries().iter().enumerate() {
        grids.extend((0..d).map(|c| f.scaled(b[(row, c)])));
    }
    FilterMatrix::new(n, d, grids)
}

/// `K^{D_N}_{j,k→reg} = [K^{C_N}_{k→reg}; (-1)^j · K̄^{C_N}_{k→reg}]`.
pub fn kernel_irrep_to_reg_dn(
    base: &FilterGrid,
    n: usize,
    j: usize,
    k: usize,
    mode: InterpolationMode,
) -> Result<SteerableKernel> {
    let group = GroupSpec::dihedral(n)?;
    let rep_in = RepSpec::irrep(group, j, k)?;
    SteerableKernel::new(
        rep_in,
        RepSpec::regular(group),
        dihedral_irrep_block(base, n, j, k, mode)?,
        mode,
        KernelKind::IrrepToReg {
            j,
            k,
            conjugate: false,
        },
    )
}

fn dihedral_irrep_block(
    base: &FilterGrid,
    n: usize,
    j: usize,
    k: usize,
    mode: InterpolationMode,
) -> Result<FilterMatrix> {
    let top = irrep_block(base, n, k, mode, false)?;
    let mut bottom = irrep_block(base, n, k, mode, true)?;
    if j == 1 {
        bottom = bottom.scaled(-1.0);
    }
    FilterMatrix::vstack(&[top, bottom])
}

fn check_bases(bases: &[FilterGrid], expected: usize) -> Result<()> {
    if bases.len() != expected {
        return Err(Error::BaseCount {
            expected,
            got: bases.len(),
        });
    }
    let size = bases[0].size();
    if bases.iter().any(|b| b.size() != size) {
        return Err(Error::Shape("base filters differ in size".into()));
    }
    Ok(())
}

/// `[K_{0→reg} … K_{⌊N/2⌋→reg}]·V⁻¹`, one base filter per irrep block.
pub fn kernel_reg_to_reg_cn(
    bases: &[FilterGrid],
    n: usize,
    mode: InterpolationMode,
) -> Result<SteerableKernel> {
    let group = GroupSpec::cyclic(n)?;
    check_bases(bases, n / 2 + 1)?;
    let blocks = bases
        .iter()
        .enumerate()
        .map(|(k, base)| irrep_block(base, n, k, mode, false))
        .collect::<Result<Vec<_>>>()?;
    let v = dct_basis_v(n)?;
    let grids = FilterMatrix::hstack(&blocks)?.right_mul(&v.inverse());
    SteerableKernel::new(
        RepSpec::regular(group),
        RepSpec::regular(group),
        grids,
        mode,
        KernelKind::RegToReg,
    )
}

/// `[K_{0,0→reg} … K_{0,⌊N/2⌋→reg} K_{1,0→reg} … K_{1,⌊N/2⌋→reg}]·W⁻¹`.
/// `bases` follow the same `(j, k)` order.
pub fn kernel_reg_to_reg_dn(
    bases: &[FilterGrid],
    n: usize,
    mode: InterpolationMode,
) -> Result<SteerableKernel> {
    let group = GroupSpec::dihedral(n)?;
    check_bases(bases, 2 * (n / 2 + 1))?;
    let blocks = irreps(group)
        .iter()
        .zip(bases)
        .map(|(rep, base)| match rep.kind() {
            RepKind::Irrep { j, k } => dihedral_irrep_block(base, n, j, k, mode),
            _ => unreachable!("irreps() yields irreps"),
        })
        .collect::<Result<Vec<_>>>()?;
    let w = basis_w(n)?;
    let grids = FilterMatrix::hstack(&blocks)?.right_mul(&w.inverse());
    SteerableKernel::new(
        RepSpec::regular(group),
        RepSpec::regular(group),
        grids,
        mode,
        KernelKind::RegToReg,
    )
}

/// Transposed kernel, steerable from `ρ_out` to `ρ_in` (both orthogonal).
pub fn kernel_reverse(kernel: &SteerableKernel) -> SteerableKernel {
    SteerableKernel {
        rep_in: kernel.rep_out,
        rep_out: kernel.rep_in,
        grids: kernel.grids.transpose(),
        reversed: !kernel.reversed,
        ..kernel.clone()
    }
}

/// Rotating-filter (ORN-style) regular→regular kernel from one base filter.
///
/// Output orientation `i` sees the orientation-channel filter bank
/// `[κ^0, κ^{-1}, …, κ^{-(N-1)}]` (the first row of `circulant(K)`) rotated
/// by `θ_i` and cyclically shifted by `i`, so
/// `grids[i][j] = κ^{(2i - j) mod N}`. The plain `circulant(K)` with entries
/// `κ^{(i-j) mod N}` does not satisfy the kernel constraint for regular input
/// unless `κ` is rotation invariant.
pub fn kernel_orn(base: &FilterGrid, n: usize, mode: InterpolationMode) -> Result<SteerableKernel> {
    let group = GroupSpec::cyclic(n)?;
    let stack = build_stack_k(base, n, mode)?;
    let grids = (0..n)
        .flat_map(|i| (0..n).map(move |j| (2 * i + n - j) % n))
        .map(|idx| stack.entries()[idx].clone())
        .collect();
    SteerableKernel::new(
        RepSpec::regular(group),
        RepSpec::regular(group),
        FilterMatrix::new(n, n, grids)?,
        mode,
        KernelKind::Orn,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CapacityKind {
    FiltraRegReg,
    OrnRegReg,
}

impl fmt::Display for CapacityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FiltraRegReg => "filtra_reg2reg",
            Self::OrnRegReg => "orn_reg2reg",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapacityReport {
    pub kernel_kind: CapacityKind,
    /// Free scalars in the base filters.
    pub independent_weights: usize,
    /// Scalars in the materialised `N×N` filter matrix.
    pub stored_filter_scalars: usize,
    /// Distinct rotated filters the kernel is built from: `N` per base.
    pub rotated_filters: usize,
}

/// Weight accounting for the two `C_N` regular→regular constructions.
pub fn capacity_report(n: usize, size: usize, kind: CapacityKind) -> CapacityReport {
    let per_filter = size * size;
    let bases = match kind {
        CapacityKind::FiltraRegReg => n / 2 + 1,
        CapacityKind::OrnRegReg => 1,
    };
    CapacityReport {
        kernel_kind: kind,
        independent_weights: bases * per_filter,
        stored_filter_scalars: n * n * per_filter,
        rotated_filters: bases * n,
    }
}
