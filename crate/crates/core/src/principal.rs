//! Principal latent directions: right singular vectors of a level's `W`.
//!
//! Columns come out ordered by decreasing singular value. Singular vectors are
//! only defined up to sign, so each column is flipped to make its
//! largest-magnitude entry positive (the first one on ties); equal singular
//! values keep the order the factorization produced them in.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::closed_form::RANK_CUTOFF;
use crate::error::{Error, Result};
use crate::walks::UnitVector;
use crate::weights::{LevelWeights, WeightBundle};

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalBasis {
    /// `d × r`, orthonormal columns.
    vectors: DMatrix<f64>,
    /// Non-increasing, length `r`.
    sigmas: DVector<f64>,
    /// 1-based level the basis belongs to.
    pub level: usize,
}

impl PrincipalBasis {
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn sigmas(&self) -> &DVector<f64> {
        &self.sigmas
    }

    pub fn rank_bound(&self) -> usize {
        self.sigmas.len()
    }

    /// `k`-th most significant direction, 1-based.
    pub fn direction(&self, k: usize) -> Result<UnitVector> {
        if k == 0 || k > self.vectors.ncols() {
            return Err(Error::InvalidArgument(format!(
                "principal direction {k} out of range 1..={}",
                self.vectors.ncols()
            )));
        }
        UnitVector::new(self.vectors.column(k - 1).into_owned())
    }

    /// Columns whose singular value is numerically zero (`≤ 1e-12·σ_max`).
    /// They span part of the null space and carry no steering effect.
    pub fn null_flags(&self) -> Vec<bool> {
        let cutoff = RANK_CUTOFF * self.sigmas.max();
        self.sigmas.iter().map(|&s| s <= cutoff).collect()
    }

    pub fn meta(&self) -> BasisMeta {
        let flags = self.null_flags();
        BasisMeta {
            level: self.level,
            latent_width: self.vectors.nrows(),
            directions: self.vectors.ncols(),
            sign_convention: "largest-magnitude entry of each column is positive".into(),
            numerically_null: flags
                .iter()
                .enumerate()
                .filter(|(_, f)| **f)
                .map(|(k, _)| k + 1)
                .collect(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|s| s.parse().ok()),
        }
    }
}

/// JSON sidecar for an exported basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisMeta {
    pub level: usize,
    pub latent_width: usize,
    pub directions: usize,
    pub sign_convention: String,
    /// 1-based indices of directions with zero singular value.
    pub numerically_null: Vec<usize>,
    /// Unix time taken from `SOURCE_DATE_EPOCH`, so exports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// Thin SVD right factor of `W`, ordered and sign-normalized.
pub fn principal_directions(level: &LevelWeights) -> Result<PrincipalBasis> {
    let w = level.w();
    if w.is_empty() {
        return Err(Error::InvalidArgument("weight matrix is empty".into()));
    }
    if let Some(i) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            key: "W".into(),
            index: i,
        });
    }
    let svd = w.clone().svd_unordered(false, true);
    let v_t = svd.v_t.expect("right factor requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let d = w.ncols();
    let mut vectors = DMatrix::zeros(d, order.len());
    for (k, &src) in order.iter().enumerate() {
        let mut col = v_t.row(src).transpose();
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(k, &col);
    }
    let sigmas = DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i]));
    Ok(PrincipalBasis {
        vectors,
        sigmas,
        level: 1,
    })
}

/// Principal basis of every level of a bundle, in level order.
pub fn bundle_bases(bundle: &WeightBundle) -> Result<Vec<PrincipalBasis>> {
    (1..=bundle.level_count())
        .map(|l| {
            let mut basis = principal_directions(bundle.level(l)?)?;
            basis.level = l;
            Ok(basis)
        })
        .collect()
}

/// The direction with the smallest singular value, the natural `v_ref` for
/// small-circle walks.
pub fn least_dominant(basis: &PrincipalBasis) -> Result<UnitVector> {
    let r = basis.vectors.ncols();
    if r < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two principal directions, basis has {r}"
        )));
    }
    basis.direction(r)
}

/// `|cos|` between every column of `a` and every column of `b`.
pub fn correlation_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "bases live in spaces of dimension {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let norms = |m: &DMatrix<f64>, name: &str| -> Result<Vec<f64>> {
        m.column_iter()
            .enumerate()
            .map(|(j, c)| {
                let n = c.norm();
                if n == 0.0 {
                    Err(Error::InvalidArgument(format!("column {} of {name} has zero norm", j + 1)))
                } else {
                    Ok(n)
                }
            })
            .collect()
    };
    let (na, nb) = (norms(a, "basis A")?, norms(b, "basis B")?);
    let gram = a.tr_mul(b);
    Ok(DMatrix::from_fn(a.ncols(), b.ncols(), |i, j| {
        (gram[(i, j)].abs() / (na[i] * nb[j])).min(1.0)
    }))
}
