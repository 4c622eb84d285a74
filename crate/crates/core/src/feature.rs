//! Vector-field feature maps, the group action on them, convolution against
//! steerable kernels, and the channel-wise layers that keep steerability.
//!
//! Channels are laid out multiplicity-major: `m` consecutive blocks of
//! `dim(ρ)` channels each.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{element_matrix, resample_plane, InterpolationMode};
use crate::group::{GroupElement, GroupSpec};
use crate::kernel::SteerableKernel;
use crate::repr::{RepKind, RepSpec};

/// `C×H×W` tensor whose channels carry `mult` copies of `rep`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    rep: RepSpec,
    mult: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(
        rep: RepSpec,
        mult: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if mult == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "feature map needs mult, H, W >= 1 (got {mult}, {height}, {width})"
            )));
        }
        let expected = mult * rep.dim() * height * width;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "{} values for a {}x{height}x{width} feature map",
                data.len(),
                mult * rep.dim()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(Self {
            rep,
            mult,
            height,
            width,
            data,
        })
    }

    pub fn zeros(rep: RepSpec, mult: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(
            rep,
            mult,
            height,
            width,
            vec![0.0; mult * rep.dim() * height * width],
        )
    }

    pub fn group(&self) -> GroupSpec {
        self.rep.group()
    }

    pub fn rep(&self) -> RepSpec {
        self.rep
    }

    pub fn multiplicity(&self) -> usize {
        self.mult
    }

    pub fn channels(&self) -> usize {
        self.mult * self.rep.dim()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn get(&self, c: usize, row: usize, col: usize) -> f64 {
        self.data[(c * self.height + row) * self.width + col]
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &FeatureMap, b: f64) -> Result<FeatureMap> {
        self.check_same_layout(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            data,
            ..self.clone()
        })
    }

    /// Max-abs difference over pixels at least `margin` away from the border.
    pub fn max_abs_diff_interior(&self, other: &FeatureMap, margin: usize) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(self
            .interior_values(margin)
            .zip(other.interior_values(margin))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        self.interior_values(margin)
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    fn interior_values(&self, margin: usize) -> impl Iterator<Item = f64> + '_ {
        let (h, w) = (self.height, self.width);
        (0..self.channels()).flat_map(move |c| {
            (margin..h.saturating_sub(margin)).flat_map(move |r| {
                (margin..w.saturating_sub(margin)).map(move |col| self.get(c, r, col))
            })
        })
    }

    fn check_same_layout(&self, other: &FeatureMap) -> Result<()> {
        if self.rep != other.rep
            || self.mult != other.mult
            || self.height != other.height
            || self.width != other.width
        {
            return Err(Error::Shape(format!(
                "feature layouts differ: {}x{} {}*{} vs {}x{} {}*{}",
                self.height,
                self.width,
                self.mult,
                self.rep,
                other.height,
                other.width,
                other.mult,
                other.rep
            )));
        }
        Ok(())
    }
}

/// Cross-correlation with zero padding and stride 1; the kernel is applied
/// to each multiplicity block independently.
///
/// Every output pixel is summed in a fixed order, so the result does not
/// depend on how rayon schedules the channels.
pub fn conv2d(kernel: &SteerableKernel, f: &FeatureMap) -> Result<FeatureMap> {
    if f.rep != kernel.rep_in() {
        return Err(Error::RepMismatch {
            expected: format!("{} over {}", kernel.rep_in(), kernel.group()),
            got: format!("{} over {}", f.rep, f.group()),
        });
    }
    let s = kernel.filter_size();
    let (h, w) = (f.height, f.width);
    if h < s || w < s {
        return Err(Error::SpatialTooSmall { h, w, s });
    }
    let grids = kernel.grids();
    let (d_out, d_in) = (grids.rows(), grids.cols());
    let half = (s / 2) as i64;
    let plane = h * w;

    let mut data = vec![0.0; f.mult * d_out * plane];
    data.par_chunks_mut(plane)
        .enumerate()
        .for_each(|(out_c, out)| {
            let (m, o) = (out_c / d_out, out_c % d_out);
            for i in 0..d_in {
                let src = f.channel(m * d_in + i);
                let g = grids.get(o, i).values();
                for r in 0..h {
                    for c in 0..w {
                        let mut acc = 0.0;
                        for gr in 0..s {
                            let sr = r as i64 + gr as i64 - half;
                            if sr < 0 || sr >= h as i64 {
                                continue;
                            }
                            let row = &src[sr as usize * w..(sr as usize + 1) * w];
                            for gc in 0..s {
                                let sc = c as i64 + gc as i64 - half;
                                if sc < 0 || sc >= w as i64 {
                                    continue;
                                }
                                acc += g[gr * s + gc] * row[sc as usize];
                            }
                        }
                        out[r * w + c] += acc;
                    }
                }
            }
        });
    FeatureMap::new(kernel.rep_out(), f.mult, h, w, data)
}

/// `π(g)f = ρ(g)·f(g⁻¹x)`: each channel is resampled at `g⁻¹x`, then every
/// multiplicity block is mixed by `ρ(g)`.
pub fn act_on_feature(
    g: &GroupElement,
    f: &FeatureMap,
    mode: InterpolationMode,
) -> Result<FeatureMap> {
    let rho = f.rep.matrix(g)?;
    let m = element_matrix(&g.inverse());
    let (h, w) = (f.height, f.width);
    let moved: Vec<Vec<f64>> = (0..f.channels())
        .into_par_iter()
        .map(|c| resample_plane(f.channel(c), h, w, m, mode))
        .collect();
    Ok(FeatureMap {
        data: mix_channels(&rho, &moved, f.mult),
        ..f.clone()
    })
}

/// Only the spatial part of the action, `f(g⁻¹x)`.
pub fn transform_spatial(g: &GroupElement, f: &FeatureMap, mode: InterpolationMode) -> FeatureMap {
    let m = element_matrix(&g.inverse());
    let (h, w) = (f.height, f.width);
    let data = (0..f.channels())
        .flat_map(|c| resample_plane(f.channel(c), h, w, m, mode))
        .collect();
    FeatureMap { data, ..f.clone() }
}

fn mix_channels(rho: &DMatrix<f64>, planes: &[Vec<f64>], mult: usize) -> Vec<f64> {
    let d = rho.nrows();
    let plane = planes.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(planes.len() * plane);
    for m in 0..mult {
        for o in 0..d {
            let mut acc = vec![0.0; plane];
            for i in 0..d {
                let a = rho[(o, i)];
                if a == 0.0 {
                    continue;
                }
                for (x, y) in acc.iter_mut().zip(&planes[m * d + i]) {
                    *x += a * y;
                }
            }
            out.extend(acc);
        }
    }
    out
}

/// Element-wise `max(0, v)`. Rejected for irrep features, whose channels
/// mix under the group and would lose steerability.
pub fn relu_channelwise(f: &FeatureMap) -> Result<FeatureMap> {
    if matches!(f.rep.kind(), RepKind::Irrep { .. }) {
        return Err(Error::Steerability {
            op: "channel-wise relu",
            rep: f.rep.to_string(),
        });
    }
    Ok(FeatureMap {
        data: f.data.iter().map(|v| v.max(0.0)).collect(),
        ..f.clone()
    })
}

/// Per block and pixel, the max over the `|G|` regular channels. The result
/// is a trivial-rep map with the same multiplicity.
pub fn group_pool(f: &FeatureMap) -> Result<FeatureMap> {
    if f.rep.kind() != RepKind::Regular {
        return Err(Error::Steerability {
            op: "group pooling",
            rep: f.rep.to_string(),
        });
    }
    let d = f.rep.dim();
    let plane = f.height * f.width;
    let mut data = Vec::with_capacity(f.mult * plane);
    for m in 0..f.mult {
        for p in 0..plane {
            let best = (0..d)
                .map(|i| f.data[(m * d + i) * plane + p])
                .fold(f64::NEG_INFINITY, f64::max);
            data.push(best);
        }
    }
    FeatureMap::new(RepSpec::trivial(f.group()), f.mult, f.height, f.width, data)
}

/// Channel-wise max pooling with a `k×k` window and the given stride.
///
/// The input is zero-padded by `⌊(k-1)/2⌋` on every side and the output has
/// `(H + 2·pad - k) / stride + 1` rows (likewise for columns).
pub fn pool_spatial(f: &FeatureMap, k: usize, stride: usize) -> Result<FeatureMap> {
    if k == 0 || stride == 0 {
        return Err(Error::Shape("pool window and stride must be >= 1".into()));
    }
    let pad = (k - 1) / 2;
    let (h, w) = (f.height, f.width);
    if h + 2 * pad < k || w + 2 * pad < k {
        return Err(Error::SpatialTooSmall { h, w, s: k });
    }
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let mut data = Vec::with_capacity(f.channels() * oh * ow);
    for c in 0..f.channels() {
        let src = f.channel(c);
        for orow in 0..oh {
            for ocol in 0..ow {
                let mut best = f64::NEG_INFINITY;
                for dr in 0..k {
                    for dc in 0..k {
                        let r = (orow * stride + dr) as i64 - pad as i64;
                        let col = (ocol * stride + dc) as i64 - pad as i64;
                        let v = if r < 0 || col < 0 || r >= h as i64 || col >= w as i64 {
                            0.0
                        } else {
                            src[r as usize * w + col as usize]
                        };
                        best = best.max(v);
                    }
                }
                data.push(best);
            }
        }
    }
    FeatureMap::new(f.rep, f.mult, oh, ow, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterGrid;
    use crate::kernel::{FilterMatrix, KernelKind};
    use crate::repr::rho_regular;

    use InterpolationMode::Bilinear;

    fn c4() -> GroupSpec {
        GroupSpec::cyclic(4).unwrap()
    }

    fn trivial_kernel(grid: FilterGrid) -> SteerableKernel {
        let t = RepSpec::trivial(c4());
        SteerableKernel::new(
            t,
            t,
            FilterMatrix::new(1, 1, vec![grid]).unwrap(),
            Bilinear,
            KernelKind::TrivToReg,
        )
        .unwrap()
    }

    fn ramp(rep: RepSpec, mult: usize, h: usize, w: usize) -> FeatureMap {
        let n = mult * rep.dim() * h * w;
        FeatureMap::new(
            rep,
            mult,
            h,
            w,
            (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect(),
        )
        .unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let k = trivial_kernel(FilterGrid::new(1, vec![1.0]).unwrap());
        let f = ramp(RepSpec::trivial(c4()), 2, 5, 6);
        assert_eq!(conv2d(&k, &f).unwrap(), f);
    }

    #[test]
    fn constant_input_gives_grid_sum_in_interior() {
        let grid =
            FilterGrid::new(3, vec![0.5, -1.0, 2.0, 0.25, 1.0, 0.0, -0.5, 3.0, 1.5]).unwrap();
        let sum = grid.sum();
        let k = trivial_kernel(grid);
        let f = FeatureMap::new(RepSpec::trivial(c4()), 1, 6, 6, vec![2.0; 36]).unwrap();
        let out = conv2d(&k, &f).unwrap();
        for r in 1..5 {
            for c in 1..5 {
                assert!((out.get(0, r, c) - 2.0 * sum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn box_filter_on_impulse() {
        let k = trivial_kernel(FilterGrid::new(3, vec![1.0 / 9.0; 9]).unwrap());
        let mut data = vec![0.0; 25];
        data[12] = 1.0;
        let f = FeatureMap::new(RepSpec::trivial(c4()), 1, 5, 5, data).unwrap();
        let out = conv2d(&k, &f).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let inside = (1..=3).contains(&r) && (1..=3).contains(&c);
                let expected = if inside { 1.0 / 9.0 } else { 0.0 };
                assert_eq!(out.get(0, r, c), expected);
            }
        }
    }

    #[test]
    fn conv_errors() {
        let k = trivial_kernel(FilterGrid::new(3, vec![1.0; 9]).unwrap());
        let reg = ramp(RepSpec::regular(c4()), 1, 5, 5);
        assert!(matches!(conv2d(&k, &reg), Err(Error::RepMismatch { .. })));
        let small = ramp(RepSpec::trivial(c4()), 1, 2, 5);
        assert!(matches!(
            conv2d(&k, &small),
            Err(Error::SpatialTooSmall { .. })
        ));
        let other_group = ramp(RepSpec::trivial(GroupSpec::cyclic(8).unwrap()), 1, 5, 5);
        assert!(conv2d(&k, &other_group).is_err());
    }

    #[test]
    fn act_identity_and_trivial_rotation() {
        let t = RepSpec::trivial(c4());
        let f = ramp(t, 3, 5, 5);
        assert_eq!(act_on_feature(&c4().identity(), &f, Bilinear).unwrap(), f);
        let g = c4().element(0, 1).unwrap();
        let out = act_on_feature(&g, &f, Bilinear).unwrap();
        // counter-clockwise quarter turn: output(r, c) = input(c, W-1-r)
        for ch in 0..3 {
            for r in 0..5 {
                for c in 0..5 {
                    assert_eq!(out.get(ch, r, c), f.get(ch, c, 4 - r));
                }
            }
        }
    }

    #[test]
    fn act_rotates_gradient_vectors() {
        let rep = RepSpec::irrep(c4(), 0, 1).unwrap();
        let f = ramp(rep, 1, 3, 3);
        let g = c4().element(0, 1).unwrap();
        let out = act_on_feature(&g, &f, Bilinear).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let (vx, vy) = (f.get(0, c, 2 - r), f.get(1, c, 2 - r));
                // [[0,-1],[1,0]]·(vx, vy)
                assert_eq!(out.get(0, r, c), -vy);
                assert_eq!(out.get(1, r, c), vx);
            }
        }
    }

    #[test]
    fn relu() {
        let t = RepSpec::trivial(c4());
        let f = FeatureMap::new(t, 1, 1, 2, vec![-1.0, 2.0]).unwrap();
        assert_eq!(relu_channelwise(&f).unwrap().data(), &[0.0, 2.0]);
        let neg = FeatureMap::new(t, 1, 2, 2, vec![-1.0, -2.0, -0.5, -3.0]).unwrap();
        assert!(relu_channelwise(&neg)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));
        let irr = ramp(RepSpec::irrep(c4(), 0, 1).unwrap(), 1, 2, 2);
        assert!(matches!(
            relu_channelwise(&irr),
            Err(Error::Steerability { .. })
        ));
    }

    #[test]
    fn relu_commutes_with_regular_permutation() {
        let f = ramp(RepSpec::regular(c4()), 2, 3, 3);
        for g in c4().elements() {
            let a = relu_channelwise(&act_on_feature(&g, &f, Bilinear).unwrap()).unwrap();
            let b = act_on_feature(&g, &relu_channelwise(&f).unwrap(), Bilinear).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn group_pool_examples() {
        let reg = RepSpec::regular(c4());
        let f = FeatureMap::new(reg, 1, 1, 1, vec![3.0, 1.0, 4.0, 1.0]).unwrap();
        let p = group_pool(&f).unwrap();
        assert_eq!(p.data(), &[4.0]);
        assert_eq!(p.rep().kind(), RepKind::Trivial);
        let two = FeatureMap::new(
            reg,
            2,
            1,
            1,
            vec![3.0, 1.0, 4.0, 1.0, -5.0, -9.0, -2.0, -6.0],
        )
        .unwrap();
        assert_eq!(group_pool(&two).unwrap().data(), &[4.0, -2.0]);
        for g in c4().elements() {
            let permuted = FeatureMap::new(
                reg,
                1,
                1,
                1,
                (rho_regular(&g) * nalgebra::DVector::from_vec(vec![3.0, 1.0, 4.0, 1.0]))
                    .as_slice()
                    .to_vec(),
            )
            .unwrap();
            assert_eq!(group_pool(&permuted).unwrap().data(), &[4.0]);
        }
        assert!(group_pool(&ramp(RepSpec::trivial(c4()), 1, 2, 2)).is_err());
    }

    #[test]
    fn spatial_pool_examples() {
        let t = RepSpec::trivial(c4());
        let f = ramp(t, 2, 4, 5);
        assert_eq!(pool_spatial(&f, 1, 1).unwrap(), f);
        let f = FeatureMap::new(t, 1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(pool_spatial(&f, 2, 2).unwrap().data(), &[4.0]);
        let f = ramp(t, 1, 15, 15);
        let p = pool_spatial(&f, 3, 2).unwrap();
        assert_eq!((p.height(), p.width()), (8, 8));
        assert!(pool_spatial(&f, 0, 1).is_err());
    }

    #[test]
    fn spatial_pool_commutes_with_regular_permutation() {
        let f = ramp(RepSpec::regular(c4()), 1, 4, 4);
        let g = c4().element(0, 3).unwrap();
        // channel permutation only: act with the rotation, then undo it spatially
        let permuted = transform_spatial(
            &g.inverse(),
            &act_on_feature(&g, &f, Bilinear).unwrap(),
            Bilinear,
        );
        let a = pool_spatial(&permuted, 2, 2).unwrap();
        let b = pool_spatial(&f, 2, 2).unwrap();
        let pb = transform_spatial(
            &g.inverse(),
            &act_on_feature(&g, &b, Bilinear).unwrap(),
            Bilinear,
        );
        assert_eq!(a, pb);
    }

    #[test]
    fn feature_map_validation() {
        let t = RepSpec::trivial(c4());
        assert!(FeatureMap::new(t, 1, 2, 2, vec![0.0; 3]).is_err());
        assert!(FeatureMap::new(t, 0, 2, 2, vec![]).is_err());
        assert!(FeatureMap::new(t, 1, 1, 1, vec![f64::INFINITY]).is_err());
    }
}
