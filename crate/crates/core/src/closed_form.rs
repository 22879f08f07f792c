//! Linear steering directions from first-layer weights.
//!
//! For a transformation `P` with mask `D`, the direction `q` minimizing the
//! expected masked mismatch between `W(z+q)+b` and `P(Wz+b)` over a centred
//! latent prior solves a weighted least-squares problem:
//!
//! ```text
//! q = (Wᵀ D² W)⁺ Wᵀ D² (P − I) b
//! ```
//!
//! The system is solved through a thin SVD of `D W` rather than by forming the
//! Gram matrix, which keeps the normal-equation residual at rounding level even
//! when `W` is badly conditioned. Singular values below `1e-12·σ_max` are
//! treated as zero and the least-norm minimizer is returned.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{OperatorKind, OperatorSpec};
use crate::weights::{LevelWeights, WeightBundle};

/// Relative singular-value cutoff of the pseudo-inverse.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Isotropic zero-mean latent prior `z ~ (0, σ_z² I)`.
///
/// There is deliberately no way to express a mean: the closed forms below
/// are only valid for centred latents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentPrior {
    sigma_z: f64,
}

impl Default for LatentPrior {
    fn default() -> Self {
        LatentPrior::standard()
    }
}

impl LatentPrior {
    pub const fn standard() -> Self {
        LatentPrior { sigma_z: 1.0 }
    }

    pub fn isotropic(sigma_z: f64) -> Result<Self> {
        if !(sigma_z.is_finite() && sigma_z > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma_z must be positive and finite, got {sigma_z}"
            )));
        }
        Ok(LatentPrior { sigma_z })
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma_z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum Provenance {
    UserOperator { kind: OperatorKind },
    Principal { index: usize },
}

/// Numerical diagnostics of a direction solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub rank: usize,
    pub columns: usize,
    /// `‖Wᵀ D² (W q + (I − P) b)‖ / ‖Wᵀ D² (I − P) b‖`, 0 when both vanish.
    pub relative_residual: f64,
}

impl SolveReport {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.columns
    }
}

/// A latent-space direction for one level's chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringDirection {
    #[serde(skip)]
    pub q: DVector<f64>,
    /// 1-based level.
    pub level: usize,
    pub provenance: Provenance,
    /// Cumulative scale applied to the solved direction.
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
}

impl SteeringDirection {
    pub fn new(q: DVector<f64>, level: usize, provenance: Provenance) -> Self {
        SteeringDirection {
            q,
            level,
            provenance,
            alpha: 1.0,
            solve: None,
        }
    }

    pub fn norm(&self) -> f64 {
        self.q.norm()
    }
}

fn masked(mask: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    mask.component_mul(v)
}

fn mask_rows(mask: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= mask[i];
    }
    out
}

/// `(P − I) b`
fn transformed_bias_gap(level: &LevelWeights, op: &OperatorSpec) -> DVector<f64> {
    op.apply(level.b()) - level.b()
}

/// Solves `min_q ‖D (W q − (P − I) b)‖²` with the operator's own mask,
/// returning the least-norm minimizer.
pub fn linear_direction(level: &LevelWeights, op: &OperatorSpec) -> Result<SteeringDirection> {
    linear_direction_weighted(level, op, &op.mask())
}

/// Like [`linear_direction`] but with an explicit diagonal `D` (any real
/// weights, not only 0/1).
pub fn linear_direction_weighted(
    level: &LevelWeights,
    op: &OperatorSpec,
    weights: &DVector<f64>,
) -> Result<SteeringDirection> {
    op.check_dims(level.dims())?;
    check_len(weights, level.dims().len(), "D diagonal")?;
    let a = mask_rows(weights, level.w());
    let y = masked(weights, &transformed_bias_gap(level, op));

    let d = level.latent_width();
    let svd = a.svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let cutoff = RANK_CUTOFF * svd.singular_values.max();
    let uty = u.transpose() * &y;
    let mut q = DVector::zeros(d);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            q += v_t.row(k).transpose() * (uty[k] / s);
        }
    }
    if rank < d {
        log::warn!(
            "Wᵀ D² W is rank deficient ({rank} of {d}); returning the least-norm direction"
        );
    }

    let (_, relative_residual) = residual_weighted(level, op, weights, &q);
    let mut dir = SteeringDirection::new(q, 1, Provenance::UserOperator { kind: op.kind() });
    dir.solve = Some(SolveReport {
        rank,
        columns: d,
        relative_residual,
    });
    Ok(dir)
}

/// [`linear_direction`] for a 1-based level of a bundle.
pub fn solve_direction(
    bundle: &WeightBundle,
    level: usize,
    op: &OperatorSpec,
) -> Result<SteeringDirection> {
    let mut dir = linear_direction(bundle.level(level)?, op)?;
    dir.level = level;
    Ok(dir)
}

/// Absolute and relative residual of the normal equations
/// `Wᵀ D² (W q + (I − P) b) = 0`, using the operator's mask.
pub fn normal_equation_residual(
    level: &LevelWeights,
    op: &OperatorSpec,
    q: &DVector<f64>,
) -> Result<(f64, f64)> {
    op.check_dims(level.dims())?;
    check_len(q, level.latent_width(), "q")?;
    Ok(residual_weighted(level, op, &op.mask(), q))
}

fn residual_weighted(
    level: &LevelWeights,
    op: &OperatorSpec,
    weights: &DVector<f64>,
    q: &DVector<f64>,
) -> (f64, f64) {
    let d2 = weights.component_mul(weights);
    let gap = transformed_bias_gap(level, op);
    let rhs = level.w().tr_mul(&masked(&d2, &gap));
    let resid = level.w().tr_mul(&masked(&d2, &(level.w() * q - &gap)));
    let (abs, scale) = (resid.norm(), rhs.norm());
    let rel = if scale > 0.0 {
        abs / scale
    } else if abs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    (abs, rel)
}

/// The two parts of the expected objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    /// `σ_z²‖D(W M − P W)‖_F²` (with `M = I` for linear walks); independent of `q`.
    pub irreducible: f64,
    /// `‖D(W q + (I − P) b)‖²`.
    pub steering: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.irreducible + self.steering
    }
}

fn check_len(v: &DVector<f64>, expected: usize, name: &str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{name} has length {} but the level chunk is {expected} wide",
            v.len()
        )));
    }
    Ok(())
}

/// Evaluates `E‖D(W(M z + q) + b − P(W z + b))‖²` split into its
/// `q`-independent and `q`-dependent parts. `m_diag = None` means `M = I`.
pub fn objective_value(
    level: &LevelWeights,
    op: &OperatorSpec,
    q: &DVector<f64>,
    m_diag: Option<&DVector<f64>>,
    prior: LatentPrior,
) -> Result<ObjectiveTerms> {
    op.check_dims(level.dims())?;
    check_len(q, level.latent_width(), "q")?;
    let w = level.w();
    let mut wm = w.clone();
    if let Some(m) = m_diag {
        check_len(m, level.latent_width(), "M diagonal")?;
        for (j, mut col) in wm.column_iter_mut().enumerate() {
            col *= m[j];
        }
    }
    let mask = op.mask();
    let diff = mask_rows(&mask, &(wm - op.apply_columns(w)));
    let irreducible = prior.sigma_z().powi(2) * diff.norm_squared();

    let gap = transformed_bias_gap(level, op);
    let steering = masked(&mask, &(w * q - gap)).norm_squared();
    Ok(ObjectiveTerms {
        irreducible,
        steering,
    })
}

/// Returns `alpha · q`, compounding the recorded scale.
pub fn scale_direction(dir: &SteeringDirection, alpha: f64) -> SteeringDirection {
    SteeringDirection {
        q: &dir.q * alpha,
        alpha: dir.alpha * alpha,
        ..dir.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_shift, make_zoom, Axis, Boundary, ZoomDirection};
    use crate::rng::{normal_matrix, normal_vector, seeded};
    use crate::weights::Dims;

    fn random_level(seed: u64, dims: Dims, d: usize) -> LevelWeights {
        let mut rng = seeded(seed);
        let w = normal_matrix(&mut rng, dims.len(), d);
        let b = normal_vector(&mut rng, dims.len());
        LevelWeights::new(w, b, dims)
    }

    #[test]
    fn identity_operator_gives_zero_direction() {
        let level = random_level(1, Dims::new(3, 2, 2), 4);
        let q = linear_direction(&level, &OperatorSpec::identity(level.dims())).unwrap();
        assert!(q.q.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_weights_recover_bias_gap() {
        let level = LevelWeights::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 2.0]),
            Dims::new(1, 1, 2),
        );
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let op = OperatorSpec::custom(p, level.dims()).unwrap();

        let unmasked = linear_direction_weighted(&level, &op, &DVector::from_element(2, 1.0)).unwrap();
        assert!((unmasked.q - DVector::from_vec(vec![-1.0, -1.0])).norm() < 1e-12);

        // the derived mask drops the unsourced row, leaving coordinate 0 free
        assert_eq!(op.mask().as_slice(), &[0.0, 1.0]);
        let masked = linear_direction(&level, &op).unwrap();
        assert!((masked.q - DVector::from_vec(vec![0.0, -1.0])).norm() < 1e-12);
        assert_eq!(masked.solve.unwrap().rank, 1);
    }

    #[test]
    fn rank_deficient_system_returns_least_norm() {
        // duplicate columns: only their sum is identifiable
        let mut w = DMatrix::zeros(4, 2);
        for i in 0..4 {
            w[(i, 0)] = (i + 1) as f64;
            w[(i, 1)] = (i + 1) as f64;
        }
        let level = LevelWeights::new(w, DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]), Dims::new(1, 2, 2));
        let op = make_shift(level.dims(), Axis::X, 1, Boundary::Cyclic).unwrap();
        let dir = linear_direction(&level, &op).unwrap();
        let report = dir.solve.unwrap();
        assert_eq!(report.rank, 1);
        assert!(report.rank_deficient());
        assert!((dir.q[0] - dir.q[1]).abs() < 1e-12);
        assert!(report.relative_residual < 1e-10);
    }

    #[test]
    fn normal_equations_hold_for_masked_shift() {
        let level = random_level(3, Dims::new(3, 2, 2), 4);
        let op = make_shift(level.dims(), Axis::X, 1, Boundary::ZeroFill).unwrap();
        let dir = linear_direction(&level, &op).unwrap();
        let (_, rel) = normal_equation_residual(&level, &op, &dir.q).unwrap();
        assert!(rel <= 1e-8, "{rel}");
    }

    #[test]
    fn homogeneous_in_bias() {
        let level = random_level(4, Dims::new(2, 4, 4), 5);
        let op = make_zoom(level.dims(), ZoomDirection::In).unwrap();
        let q = linear_direction(&level, &op).unwrap().q;
        let scaled = LevelWeights::new(level.w().clone(), level.b() * -2.5, level.dims());
        let q2 = linear_direction(&scaled, &op).unwrap().q;
        assert!((&q2 - &q * -2.5).norm() <= 1e-12 * q2.norm());
    }

    #[test]
    fn masked_bias_rows_have_no_influence() {
        let level = random_level(5, Dims::new(2, 4, 4), 6);
        let op = make_zoom(level.dims(), ZoomDirection::Out).unwrap();
        let q = linear_direction(&level, &op).unwrap().q;
        let mask = op.mask();
        // perturb only bias entries that are masked *and* feed no sourced cell
        let p = op.materialize();
        let mut b = level.b().clone();
        let mut touched = 0;
        for i in 0..b.len() {
            let feeds_sourced = (0..b.len()).any(|r| mask[r] == 1.0 && p[(r, i)] != 0.0);
            if mask[i] == 0.0 && !feeds_sourced {
                b[i] += 100.0;
                touched += 1;
            }
        }
        assert!(touched > 0);
        let moved = LevelWeights::new(level.w().clone(), b, level.dims());
        let q2 = linear_direction(&moved, &op).unwrap().q;
        assert!((q2 - q).norm() < 1e-9);
    }

    #[test]
    fn objective_vanishes_for_identity() {
        let level = random_level(6, Dims::new(1, 2, 2), 3);
        let terms = objective_value(
            &level,
            &OperatorSpec::identity(level.dims()),
            &DVector::zeros(3),
            Some(&DVector::from_element(3, 1.0)),
            LatentPrior::standard(),
        )
        .unwrap();
        assert_eq!((terms.irreducible, terms.steering), (0.0, 0.0));
    }

    #[test]
    fn steering_term_is_locally_minimal() {
        let level = random_level(7, Dims::new(2, 4, 4), 5);
        let op = make_shift(level.dims(), Axis::Y, -1, Boundary::ZeroFill).unwrap();
        let q = linear_direction(&level, &op).unwrap().q;
        let best = objective_value(&level, &op, &q, None, LatentPrior::standard()).unwrap();
        let mut rng = seeded(70);
        for _ in 0..50 {
            let delta = crate::rng::unit_vector(&mut rng, 5) * 0.01;
            let probe = objective_value(&level, &op, &(&q + delta), None, LatentPrior::standard()).unwrap();
            assert!(best.steering <= probe.steering);
            assert_eq!(best.irreducible, probe.irreducible);
        }
    }

    #[test]
    fn scaling_compounds() {
        let dir = SteeringDirection::new(
            DVector::from_vec(vec![-1.0, -1.0]),
            1,
            Provenance::Principal { index: 1 },
        );
        assert_eq!(scale_direction(&dir, 1.0), dir);
        assert!(scale_direction(&dir, 0.0).q.iter().all(|&v| v == 0.0));
        let doubled = scale_direction(&dir, 2.0);
        assert_eq!(doubled.q.as_slice(), &[-2.0, -2.0]);
        assert_eq!(scale_direction(&doubled, 0.5).alpha, 1.0);
    }

    #[test]
    fn prior_rejects_bad_sigma() {
        assert!(LatentPrior::isotropic(0.0).is_err());
        assert!(LatentPrior::isotropic(f64::NAN).is_err());
        assert_eq!(LatentPrior::isotropic(2.0).unwrap().sigma_z(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let level = random_level(8, Dims::new(1, 2, 2), 3);
        let op = OperatorSpec::identity(Dims::new(1, 4, 4));
        assert!(matches!(linear_direction(&level, &op), Err(Error::DimensionMismatch(_))));
    }
}
