//! Square filter patches and their rotation / reflection resampling.
//!
//! A [`FilterGrid`] of odd size `S` is centred on its middle pixel. `x` grows
//! to the right, `y` grows upward, so row 0 is the top row (`y = (S-1)/2`).
//! Samples falling outside the grid read as zero.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::group::{cos_sin_turns, GroupElement, GroupSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum InterpolationMode {
    #[default]
    Bilinear,
    Nearest,
}

impl fmt::Display for InterpolationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bilinear => "bilinear",
            Self::Nearest => "nearest",
        })
    }
}

impl FromStr for InterpolationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bilinear" => Ok(Self::Bilinear),
            "nearest" => Ok(Self::Nearest),
            other => Err(Error::Parse(format!(
                "unknown interpolation mode {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterGrid {
    size: usize,
    values: Vec<f64>,
}

impl FilterGrid {
    /// Builds a grid from row-major values (top row first).
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::EvenFilterSize(size));
        }
        if values.len() != size * size {
            return Err(Error::Shape(format!(
                "{} values for a {size}x{size} filter",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter"));
        }
        Ok(Self { size, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Shape("filter rows must form a square".into()));
        }
        Self::new(size, rows.concat())
    }

    pub fn zeros(size: usize) -> Result<Self> {
        Self::new(size, vec![0.0; size * size])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, f64> {
        self.values.chunks(self.size)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            size: self.size,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, a: f64, other: &FilterGrid) {
        assert_eq!(self.size, other.size, "filter size mismatch");
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    /// `Σ_i coeffs[i] · grids[i]`, summed in index order. Zero coefficients
    /// are skipped.
    pub fn linear_combination<'a>(
        size: usize,
        terms: impl IntoIterator<Item = (f64, &'a FilterGrid)>,
    ) -> Self {
        let mut out = Self {
            size,
            values: vec![0.0; size * size],
        };
        for (a, g) in terms {
            if a != 0.0 {
                out.add_scaled(a, g);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &FilterGrid) -> f64 {
        assert_eq!(self.size, other.size, "filter size mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Maps every output pixel `x` of an `h×w` plane to the source point `m·x`
/// and samples `src` there. Both planes share the centred coordinate frame.
pub(crate) fn resample_plane(
    src: &[f64],
    h: usize,
    w: usize,
    m: [f64; 4],
    mode: InterpolationMode,
) -> Vec<f64> {
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let read = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
            0.0
        } else {
            src[r as usize * w + c as usize]
        }
    };
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        let y = cy - r as f64;
        for c in 0..w {
            let x = c as f64 - cx;
            let sx = m[0] * x + m[1] * y;
            let sy = m[2] * x + m[3] * y;
            let col = sx + cx;
            let row = cy - sy;
            let v = match mode {
                // ties go to the smaller index
                InterpolationMode::Nearest => {
                    read((row - 0.5).ceil() as i64, (col - 0.5).ceil() as i64)
                }
                InterpolationMode::Bilinear => {
                    let r0 = row.floor();
                    let c0 = col.floor();
                    let fr = row - r0;
                    let fc = col - c0;
                    let (r0, c0) = (r0 as i64, c0 as i64);
                    (1.0 - fr) * (1.0 - fc) * read(r0, c0)
                        + (1.0 - fr) * fc * read(r0, c0 + 1)
                        + fr * (1.0 - fc) * read(r0 + 1, c0)
                        + fr * fc * read(r0 + 1, c0 + 1)
                }
            };
            out.push(v);
        }
    }
    out
}

/// `(cos θ, sin θ)`. Angles within 1e-9 turns of a fraction `p/d` with
/// `d ≤ 64` are snapped to it, so that `θ` and `θ - 2π` give identical
/// results and quarter turns are exact.
pub(crate) fn snapped_cos_sin(theta: f64) -> (f64, f64) {
    let turns = theta / TAU;
    for d in 1..=64usize {
        let scaled = turns * d as f64;
        let p = scaled.round();
        if (scaled - p).abs() <= 1e-9 {
            return cos_sin_turns(p as i64, d);
        }
    }
    (theta.cos(), theta.sin())
}

/// Matrix sending a point `x` to `g·x`.
pub(crate) fn element_matrix(g: &GroupElement) -> [f64; 4] {
    let (c, s) = g.cos_sin();
    let flip = if g.is_reflection() { -1.0 } else { 1.0 };
    [c, -s * flip, s, c * flip]
}

/// Rotates the filter content counter-clockwise by `theta`:
/// `output(x) = f(R(-θ)·x)`.
pub fn resample_rotate(f: &FilterGrid, theta: f64, mode: InterpolationMode) -> FilterGrid {
    let (c, s) = snapped_cos_sin(theta);
    // R(-θ)
    let m = [c, s, -s, c];
    FilterGrid {
        size: f.size,
        values: resample_plane(&f.values, f.size, f.size, m, mode),
    }
}

/// `output(x, y) = f(x, -y)`: reverses the row order.
pub fn resample_reflect(f: &FilterGrid) -> FilterGrid {
    let values = f.rows().rev().flatten().copied().collect();
    FilterGrid {
        size: f.size,
        values,
    }
}

/// `output(x) = f(g·x)`.
///
/// Note that this is a right action: transforming by `h` and then by `g`
/// equals transforming once by `h ∘ g`.
pub fn transform_filter(f: &FilterGrid, g: &GroupElement, mode: InterpolationMode) -> FilterGrid {
    FilterGrid {
        size: f.size,
        values: resample_plane(&f.values, f.size, f.size, element_matrix(g), mode),
    }
}

/// Whether `g` maps the pixel lattice of an `S×S` grid onto itself under
/// `mode`, so that [`transform_filter`] is an exact pixel permutation.
///
/// Quarter-turn rotations and reflections composed with them are always
/// exact; `S = 1` is exact for every angle; with `Nearest` a 3×3 grid is also
/// exact at every eighth turn.
pub fn is_grid_exact(g: &GroupElement, size: usize, mode: InterpolationMode) -> bool {
    let n = g.spec().rotation_order();
    let i1 = g.i1();
    size == 1
        || (4 * i1).is_multiple_of(n)
        || (mode == InterpolationMode::Nearest && size == 3 && (8 * i1).is_multiple_of(n))
}

/// `K = [κ^0 … κ^{N-1}]` (`conjugate == false`) or
/// `K̄ = [κ̄^0 … κ̄^{N-1}]` (`conjugate == true`).
#[derive(Clone, Debug, PartialEq)]
pub struct FilterStack {
    group: GroupSpec,
    entries: Vec<FilterGrid>,
    conjugate: bool,
    mode: InterpolationMode,
}

impl FilterStack {
    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn entries(&self) -> &[FilterGrid] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<FilterGrid> {
        self.entries
    }

    pub fn is_conjugate(&self) -> bool {
        self.conjugate
    }

    pub fn mode(&self) -> InterpolationMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn rotated_copies(base: &FilterGrid, n: usize, mode: InterpolationMode) -> Vec<FilterGrid> {
    (0..n)
        .map(|i| {
            if i == 0 {
                base.clone()
            } else {
                let (c, s) = cos_sin_turns(i as i64, n);
                FilterGrid {
                    size: base.size,
                    values: resample_plane(&base.values, base.size, base.size, [c, s, -s, c], mode),
                }
            }
        })
        .collect()
}

/// `κ^n(φ) = κ(φ - θ_n)` for `n = 0..N`.
pub fn build_stack_k(base: &FilterGrid, n: usize, mode: InterpolationMode) -> Result<FilterStack> {
    let group = GroupSpec::cyclic(n)?;
    Ok(FilterStack {
        group,
        entries: rotated_copies(base, n, mode),
        conjugate: false,
        mode,
    })
}

/// `κ̄^n(φ) = κ(θ_n - φ)`: rotated copies of the reflected base.
pub fn build_stack_kbar(
    base: &FilterGrid,
    n: usize,
    mode: InterpolationMode,
) -> Result<FilterStack> {
    let group = GroupSpec::cyclic(n)?;
    Ok(FilterStack {
        group,
        entries: rotated_copies(&resample_reflect(base), n, mode),
        conjugate: true,
        mode,
    })
}
