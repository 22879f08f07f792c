//! Geometric transformations acting on the flattened first-level output tensor.
//!
//! Every operator acts identically on each channel, so it is stored as the
//! spatial factor `P_s` (side `H·W`) and the full matrix is `I_C ⊗ P_s`. The
//! penalty mask `D` zeroes exactly the output cells that no input cell feeds.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::Dims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    ShiftX,
    ShiftY,
    ZoomIn,
    ZoomOut,
    Rot90,
    Identity,
    Custom,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::ShiftX => "shift-x",
            OperatorKind::ShiftY => "shift-y",
            OperatorKind::ZoomIn => "zoom-in",
            OperatorKind::ZoomOut => "zoom-out",
            OperatorKind::Rot90 => "rot90",
            OperatorKind::Identity => "identity",
            OperatorKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// What a shift does with cells that leave the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Vacated cells have no source and are masked out.
    #[default]
    ZeroFill,
    /// Cells wrap around; the operator is a permutation.
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoomDirection {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OperatorParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quarter_turns: Option<i64>,
}

/// A transformation `P = I_C ⊗ P_s` and its mask `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    spatial: DMatrix<f64>,
    spatial_mask: DVector<f64>,
    dims: Dims,
    kind: OperatorKind,
    params: OperatorParams,
}

impl OperatorSpec {
    fn from_spatial(
        spatial: DMatrix<f64>,
        dims: Dims,
        kind: OperatorKind,
        params: OperatorParams,
    ) -> Self {
        let spatial_mask = derive_mask(&spatial);
        OperatorSpec {
            spatial,
            spatial_mask,
            dims,
            kind,
            params,
        }
    }

    /// Wraps an arbitrary spatial matrix of side `H·W`.
    pub fn custom(spatial: DMatrix<f64>, dims: Dims) -> Result<Self> {
        let side = dims.spatial_len();
        if spatial.shape() != (side, side) {
            return Err(Error::Operator(format!(
                "custom operator must be {side}x{side} for dims {dims}, got {}x{}",
                spatial.nrows(),
                spatial.ncols()
            )));
        }
        if let Some(i) = spatial.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                key: "custom operator".into(),
                index: i,
            });
        }
        Ok(OperatorSpec::from_spatial(
            spatial,
            dims,
            OperatorKind::Custom,
            OperatorParams::default(),
        ))
    }

    pub fn identity(dims: Dims) -> Self {
        let side = dims.spatial_len();
        OperatorSpec::from_spatial(
            DMatrix::identity(side, side),
            dims,
            OperatorKind::Identity,
            OperatorParams::default(),
        )
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    pub fn spatial(&self) -> &DMatrix<f64> {
        &self.spatial
    }

    /// Diagonal of the spatial mask, one 0/1 entry per cell.
    pub fn spatial_mask(&self) -> &DVector<f64> {
        &self.spatial_mask
    }

    /// Diagonal of the full mask `D = I_C ⊗ D_s`.
    pub fn mask(&self) -> DVector<f64> {
        let side = self.dims.spatial_len();
        DVector::from_fn(self.dims.len(), |i, _| self.spatial_mask[i % side])
    }

    /// Dense `I_C ⊗ P_s`. Quadratic in the tensor size; meant for small dims.
    pub fn materialize(&self) -> DMatrix<f64> {
        DMatrix::<f64>::identity(self.dims.channels, self.dims.channels).kronecker(&self.spatial)
    }

    /// `P x` for a flattened tensor.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.dims.len(), "tensor length must match operator dims");
        let side = self.dims.spatial_len();
        // channel-major flattening: column c of this view is channel c
        let planes = DMatrix::from_column_slice(side, self.dims.channels, x.as_slice());
        let out = &self.spatial * planes;
        DVector::from_column_slice(out.as_slice())
    }

    /// `P W`, applying the operator to every column.
    pub fn apply_columns(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(w.nrows(), self.dims.len(), "row count must match operator dims");
        let side = self.dims.spatial_len();
        let mut out = DMatrix::zeros(w.nrows(), w.ncols());
        for (j, col) in w.column_iter().enumerate() {
            let planes = DMatrix::from_iterator(side, self.dims.channels, col.iter().copied());
            let moved = &self.spatial * planes;
            out.column_mut(j).copy_from_slice(moved.as_slice());
        }
        out
    }

    pub(crate) fn check_dims(&self, dims: Dims) -> Result<()> {
        if self.dims != dims {
            return Err(Error::DimensionMismatch(format!(
                "operator built for {} but level output is {}",
                self.dims, dims
            )));
        }
        Ok(())
    }
}

/// `D_ii = 0` exactly when row `i` of `p` is all zeros.
pub fn derive_mask(p: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        p.nrows(),
        p.row_iter()
            .map(|row| if row.iter().all(|v| *v == 0.0) { 0.0 } else { 1.0 }),
    )
}

/// Translates the grid by `offset` cells along `axis`; positive moves content
/// right (x) or down (y).
pub fn make_shift(dims: Dims, axis: Axis, offset: i64, boundary: Boundary) -> Result<OperatorSpec> {
    let (h, w) = (dims.height, dims.width);
    let side_len = match axis {
        Axis::X => w,
        Axis::Y => h,
    } as i64;
    if offset.abs() >= side_len {
        return Err(Error::Operator(format!(
            "shift offset {offset} out of range for a grid side of {side_len}"
        )));
    }
    let mut p = DMatrix::zeros(h * w, h * w);
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let (mut sr, mut sc) = match axis {
                Axis::X => (r, c - offset),
                Axis::Y => (r - offset, c),
            };
            if boundary == Boundary::Cyclic {
                sr = sr.rem_euclid(h as i64);
                sc = sc.rem_euclid(w as i64);
            }
            if (0..h as i64).contains(&sr) && (0..w as i64).contains(&sc) {
                p[((r * w as i64 + c) as usize, (sr * w as i64 + sc) as usize)] = 1.0;
            }
        }
    }
    let kind = match axis {
        Axis::X => OperatorKind::ShiftX,
        Axis::Y => OperatorKind::ShiftY,
    };
    Ok(OperatorSpec::from_spatial(
        p,
        dims,
        kind,
        OperatorParams {
            offset: Some(offset),
            boundary: Some(boundary),
            ..Default::default()
        },
    ))
}

/// Nearest-neighbour 2x zoom.
///
/// `In` upsamples the central `H/2 × W/2` block to the full grid, so every cell
/// is sourced. `Out` places the stride-2 subsampled grid in the central block
/// and leaves the surrounding ring unsourced.
pub fn make_zoom(dims: Dims, direction: ZoomDirection) -> Result<OperatorSpec> {
    let (h, w) = (dims.height, dims.width);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Operator(format!(
            "zoom needs even grid sides, got {h}x{w}"
        )));
    }
    let mut p = DMatrix::zeros(h * w, h * w);
    match direction {
        ZoomDirection::In => {
            for i in 0..h {
                for j in 0..w {
                    let (si, sj) = (h / 4 + i / 2, w / 4 + j / 2);
                    p[(i * w + j, si * w + sj)] = 1.0;
                }
            }
        }
        ZoomDirection::Out => {
            for i in 0..h / 2 {
                for j in 0..w / 2 {
                    let (oi, oj) = (h / 4 + i, w / 4 + j);
                    p[(oi * w + oj, 2 * i * w + 2 * j)] = 1.0;
                }
            }
        }
    }
    let kind = match direction {
        ZoomDirection::In => OperatorKind::ZoomIn,
        ZoomDirection::Out => OperatorKind::ZoomOut,
    };
    Ok(OperatorSpec::from_spatial(
        p,
        dims,
        kind,
        OperatorParams {
            factor: Some(2),
            ..Default::default()
        },
    ))
}

/// Clockwise rotation by `quarter_turns · 90°` on a square grid.
pub fn make_rot90(dims: Dims, quarter_turns: i64) -> Result<OperatorSpec> {
    let n = dims.height;
    if dims.width != n {
        return Err(Error::Operator(format!(
            "rot90 needs a square grid, got {}x{}",
            dims.height, dims.width
        )));
    }
    let turns = quarter_turns.rem_euclid(4);
    let mut p = DMatrix::zeros(n * n, n * n);
    for r in 0..n {
        for c in 0..n {
            // walk the output cell back through `turns` clockwise quarter turns
            let (mut sr, mut sc) = (r, c);
            for _ in 0..turns {
                (sr, sc) = (n - 1 - sc, sr);
            }
            p[(r * n + c, sr * n + sc)] = 1.0;
        }
    }
    Ok(OperatorSpec::from_spatial(
        p,
        dims,
        OperatorKind::Rot90,
        OperatorParams {
            quarter_turns: Some(quarter_turns),
            ..Default::default()
        },
    ))
}

/// Reads a spatial operator of shape `(H·W, H·W)` from an NPY file.
pub fn load_custom_operator(path: impl AsRef<Path>, dims: Dims) -> Result<OperatorSpec> {
    let path = path.as_ref();
    let array = crate::npy::read_npy_file(path)?;
    let key = path.display().to_string();
    OperatorSpec::custom(array.to_matrix(&key)?, dims)
}
