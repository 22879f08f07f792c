//! Latent trajectories.
//!
//! All walks act on one level's chunk of a full latent vector and copy every
//! other coordinate through untouched, so each [`Trajectory`] point can be fed
//! straight to a generator.
//!
//! * Neumann walks iterate `z ← M z + q` with a diagonal `M`; when
//!   `max |M_ii| < 1` they converge to `(I − M)⁻¹ q`.
//! * Great circles stay on the sphere `‖z‖ = ‖z0‖` and head for `‖z0‖ v`.
//! * Small circles rotate only inside `span{v, v_ref}`, freezing the
//!   projection onto everything orthogonal to that plane.
//! * Linear walks add `α q` per step.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::closed_form::{linear_direction, LatentPrior};
use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::weights::{ChunkRange, LevelWeights};

/// Tolerance on `|⟨v, v_ref⟩|` for small circles.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Relative size below which a projection counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// A vector of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    /// Normalizes `v`; fails on zero or non-finite input.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize a vector of norm {n}"
            )));
        }
        Ok(UnitVector(v / n))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for UnitVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Diagonal Neumann walk `z ← M z + q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    #[serde(skip)]
    m_diag: DVector<f64>,
    #[serde(skip)]
    q: DVector<f64>,
    sigma_z: f64,
    /// How many times finer than the solved walk this one is.
    refinement: usize,
}

impl WalkParams {
    pub fn new(m_diag: DVector<f64>, q: DVector<f64>) -> Result<Self> {
        if m_diag.len() != q.len() {
            return Err(Error::DimensionMismatch(format!(
                "M diagonal has length {} but q has length {}",
                m_diag.len(),
                q.len()
            )));
        }
        if let Some(i) = m_diag.iter().chain(q.iter()).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                key: "walk parameters".into(),
                index: i,
            });
        }
        Ok(WalkParams {
            m_diag,
            q,
            sigma_z: 1.0,
            refinement: 1,
        })
    }

    pub fn with_prior(mut self, prior: LatentPrior) -> Self {
        self.sigma_z = prior.sigma_z();
        self
    }

    pub fn m_diag(&self) -> &DVector<f64> {
        &self.m_diag
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma_z
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Spectral norm of the diagonal `M`, i.e. `max |M_ii|`.
    pub fn spectral_norm(&self) -> f64 {
        self.m_diag.iter().fold(0.0, |acc: f64, m| acc.max(m.abs()))
    }
}

/// Optimal diagonal `M` and offset `q` for an operator:
/// `M_ii = (w_iᵀ D² P w_i) / (w_iᵀ D² w_i)`, `q` as for linear walks.
pub fn neumann_params(level: &LevelWeights, op: &OperatorSpec) -> Result<WalkParams> {
    op.check_dims(level.dims())?;
    let mask = op.mask();
    let d2 = mask.component_mul(&mask);
    let pw = op.apply_columns(level.w());
    let mut m = DVector::zeros(level.latent_width());
    for (i, (w_i, pw_i)) in level.w().column_iter().zip(pw.column_iter()).enumerate() {
        let den: f64 = w_i.iter().zip(d2.iter()).map(|(w, d)| d * w * w).sum();
        if den == 0.0 {
            return Err(Error::DegenerateColumn { column: i });
        }
        let num: f64 = w_i
            .iter()
            .zip(pw_i.iter())
            .zip(d2.iter())
            .map(|((w, pw), d)| d * w * pw)
            .sum();
        m[i] = num / den;
    }
    let q = linear_direction(level, op)?.q;
    WalkParams::new(m, q)
}

/// One step `M z + q`.
pub fn neumann_step(z: &DVector<f64>, params: &WalkParams) -> DVector<f64> {
    assert_eq!(z.len(), params.len(), "chunk length must match walk parameters");
    params.m_diag.component_mul(z) + &params.q
}

/// Parameters of a walk whose `n` steps equal one step of `params`:
/// `M̃ = M^{1/n}`, `q̃ = (Σ_{k<n} M^{k/n})⁻¹ q`.
pub fn refine(params: &WalkParams, n: usize) -> Result<WalkParams> {
    if n == 0 {
        return Err(Error::RefinementUndefined("refinement factor must be at least 1".into()));
    }
    if let Some((i, m)) = params.m_diag.iter().enumerate().find(|(_, m)| **m <= 0.0) {
        return Err(Error::RefinementUndefined(format!(
            "M_{i}{i} = {m} has no real positive root"
        )));
    }
    if n == 1 {
        return Ok(params.clone());
    }
    let inv_n = 1.0 / n as f64;
    let root = params.m_diag.map(|m| m.powf(inv_n));
    let q = DVector::from_iterator(
        params.len(),
        params.m_diag.iter().zip(params.q.iter()).map(|(&m, &q)| {
            let geometric: f64 = (0..n).map(|k| m.powf(k as f64 * inv_n)).sum();
            q / geometric
        }),
    );
    Ok(WalkParams {
        m_diag: root,
        q,
        sigma_z: params.sigma_z,
        refinement: params.refinement * n,
    })
}

/// Limit `(I − M)⁻¹ q` of the walk.
pub fn endpoint(params: &WalkParams) -> Result<DVector<f64>> {
    let norm = params.spectral_norm();
    if norm >= 1.0 {
        return Err(Error::NoEndpoint(norm));
    }
    Ok(DVector::from_iterator(
        params.len(),
        params.m_diag.iter().zip(params.q.iter()).map(|(m, q)| q / (1.0 - m)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkKind {
    Linear,
    Neumann,
    GreatCircle,
    SmallCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMeta {
    pub index: i64,
    /// Arc angle `nΔ + θ` for circle walks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

/// Ordered full latent vectors along a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<DVector<f64>>,
    pub kind: WalkKind,
    pub chunk: ChunkRange,
    pub steps: Vec<StepMeta>,
    /// Step size: `α` for linear walks, radians for circles, 1 for Neumann.
    pub delta: f64,
    /// Initial phase of a circle walk.
    pub theta: Option<f64>,
    /// Where the walk is heading, when defined (full latent).
    pub endpoint: Option<DVector<f64>>,
}

/// JSON sidecar for an exported trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub kind: WalkKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    pub chunk: ChunkRange,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<Vec<f64>>,
    pub steps: Vec<StepMeta>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `steps × latent_dim` row-major array.
    pub fn to_npy(&self) -> crate::npy::NpyArray {
        let dim = self.points.first().map_or(0, |p| p.len());
        let data = self.points.iter().flat_map(|p| p.iter().copied()).collect();
        crate::npy::NpyArray::new(vec![self.points.len(), dim], data)
    }

    pub fn meta(&self, level: Option<usize>) -> TrajectoryMeta {
        TrajectoryMeta {
            kind: self.kind,
            level,
            chunk: self.chunk,
            delta: self.delta,
            theta: self.theta,
            endpoint: self.endpoint.as_ref().map(|e| e.iter().copied().collect()),
            steps: self.steps.clone(),
        }
    }
}

fn chunk_of(z: &DVector<f64>, chunk: ChunkRange) -> Result<DVector<f64>> {
    if chunk.is_empty() || chunk.end > z.len() {
        return Err(Error::DimensionMismatch(format!(
            "chunk [{}, {}) does not fit a latent of length {}",
            chunk.start,
            chunk.end,
            z.len()
        )));
    }
    Ok(z.rows(chunk.start, chunk.len()).into_owned())
}

fn with_chunk(z: &DVector<f64>, chunk: ChunkRange, values: &DVector<f64>) -> DVector<f64> {
    let mut out = z.clone();
    out.rows_mut(chunk.start, chunk.len()).copy_from(values);
    out
}

fn check_direction(v: &DVector<f64>, chunk: ChunkRange, name: &str) -> Result<()> {
    if v.len() != chunk.len() {
        return Err(Error::DimensionMismatch(format!(
            "{name} has length {} but the chunk is {} wide",
            v.len(),
            chunk.len()
        )));
    }
    Ok(())
}

/// `z_n = z0 + n α q` on the chunk, for each `n` in `steps`.
pub fn linear_walk(
    z0: &DVector<f64>,
    chunk: ChunkRange,
    q: &DVector<f64>,
    alpha: f64,
    steps: impl IntoIterator<Item = i64>,
) -> Result<Trajectory> {
    let c0 = chunk_of(z0, chunk)?;
    check_direction(q, chunk, "q")?;
    let step = q * alpha;
    let (points, steps) = steps
        .into_iter()
        .map(|n| {
            let c = &c0 + &step * n as f64;
            (with_chunk(z0, chunk, &c), StepMeta { index: n, angle: None })
        })
        .unzip();
    Ok(Trajectory {
        points,
        kind: WalkKind::Linear,
        chunk,
        steps,
        delta: alpha,
        theta: None,
        endpoint: None,
    })
}

/// `count` points of the Neumann walk starting at `z0` (the first point is `z0`).
pub fn neumann_walk(
    z0: &DVector<f64>,
    chunk: ChunkRange,
    params: &WalkParams,
    count: usize,
) -> Result<Trajectory> {
    let mut c = chunk_of(z0, chunk)?;
    check_direction(&params.q, chunk, "walk parameters")?;
    let mut points = Vec::with_capacity(count);
    let mut steps = Vec::with_capacity(count);
    for n in 0..count {
        if n > 0 {
            c = neumann_step(&c, params);
        }
        points.push(with_chunk(z0, chunk, &c));
        steps.push(StepMeta {
            index: n as i64,
            angle: None,
        });
    }
    let endpoint = endpoint(params).ok().map(|e| with_chunk(z0, chunk, &e));
    Ok(Trajectory {
        points,
        kind: WalkKind::Neumann,
        chunk,
        steps,
        delta: 1.0 / params.refinement as f64,
        theta: None,
        endpoint,
    })
}

/// Circle through a chunk: `offset + radius (cos_axis cos φ + v sin φ)` with
/// `φ = nΔ + θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereWalk {
    /// Component left untouched by the walk (zero for great circles).
    pub offset: DVector<f64>,
    pub radius: f64,
    /// `u` for great circles, `v_ref` for small circles.
    pub cos_axis: DVector<f64>,
    pub v: DVector<f64>,
    pub theta: f64,
}

impl SphereWalk {
    /// Great circle through `c0` and `‖c0‖ v`.
    pub fn great(c0: &DVector<f64>, v: &UnitVector) -> Result<Self> {
        let norm = c0.norm();
        let along = c0.dot(v);
        let perp = c0 - v.as_vector() * along;
        let perp_norm = perp.norm();
        if norm == 0.0 || perp_norm <= DEGENERACY_TOL * norm {
            return Err(Error::DegenerateGeometry(
                "latent chunk is parallel to the walk direction".into(),
            ));
        }
        Ok(SphereWalk {
            offset: DVector::zeros(c0.len()),
            radius: norm,
            cos_axis: perp / perp_norm,
            v: v.as_vector().clone(),
            // arccos(‖P⊥ z0‖ / ‖z0‖) · sign⟨z0, v⟩
            theta: along.atan2(perp_norm),
        })
    }

    /// Small circle in the affine plane through `c0` parallel to `span{v, v_ref}`.
    pub fn small(c0: &DVector<f64>, v: &UnitVector, v_ref: &UnitVector) -> Result<Self> {
        let overlap = v.dot(v_ref.as_vector());
        if overlap.abs() > ORTHOGONALITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "v and v_ref must be orthogonal, ⟨v, v_ref⟩ = {overlap:e}"
            )));
        }
        let a = c0.dot(v);
        let b = c0.dot(v_ref);
        let in_plane = a.hypot(b);
        if in_plane == 0.0 || in_plane <= DEGENERACY_TOL * c0.norm() {
            return Err(Error::DegenerateGeometry(
                "latent chunk has no component in span{v, v_ref}".into(),
            ));
        }
        Ok(SphereWalk {
            offset: c0 - v.as_vector() * a - v_ref.as_vector() * b,
            radius: in_plane,
            cos_axis: v_ref.as_vector().clone(),
            v: v.as_vector().clone(),
            // arccos(⟨z0, v_ref⟩ / ‖P_V z0‖) · sign⟨z0, v⟩
            theta: a.atan2(b),
        })
    }

    pub fn angle(&self, n: i64, delta: f64) -> f64 {
        n as f64 * delta + self.theta
    }

    pub fn point(&self, angle: f64) -> DVector<f64> {
        let (s, c) = angle.sin_cos();
        &self.offset + (&self.cos_axis * c + &self.v * s) * self.radius
    }

    /// The point at angle π/2, evaluated exactly.
    pub fn endpoint(&self) -> DVector<f64> {
        &self.offset + &self.v * self.radius
    }
}

fn circle_trajectory(
    z0: &DVector<f64>,
    chunk: ChunkRange,
    walk: SphereWalk,
    kind: WalkKind,
    delta: f64,
    steps: impl IntoIterator<Item = i64>,
) -> Trajectory {
    let (points, steps) = steps
        .into_iter()
        .map(|n| {
            let angle = walk.angle(n, delta);
            // the start is z0 by construction; skip the trig round trip
            let point = if n == 0 { z0.clone() } else { with_chunk(z0, chunk, &walk.point(angle)) };
            (point, StepMeta { index: n, angle: Some(angle) })
        })
        .unzip();
    let endpoint = with_chunk(z0, chunk, &walk.endpoint());
    Trajectory {
        points,
        kind,
        chunk,
        steps,
        delta,
        theta: Some(walk.theta),
        endpoint: Some(endpoint),
    }
}

/// Great-circle walk from `z0` towards `‖z0_chunk‖ v`, one point per `n`.
///
/// The point at `n = 0` is `z0` itself; stepping past the endpoint (angle
/// π/2) is allowed and the cumulative angle is recorded per step.
pub fn great_circle(
    z0: &DVector<f64>,
    chunk: ChunkRange,
    v: &UnitVector,
    delta: f64,
    steps: impl IntoIterator<Item = i64>,
) -> Result<Trajectory> {
    let c0 = chunk_of(z0, chunk)?;
    check_direction(v, chunk, "v")?;
    let walk = SphereWalk::great(&c0, v)?;
    Ok(circle_trajectory(z0, chunk, walk, WalkKind::GreatCircle, delta, steps))
}

/// `z0` with its chunk replaced by `‖z0_chunk‖ v`.
pub fn great_circle_endpoint(
    z0: &DVector<f64>,
    chunk: ChunkRange,
    v: &UnitVector,
) -> Result<DVector<f64>> {
    let c0 = chunk_of(z0, chunk)?;
    check_direction(v, chunk, "v")?;
    Ok(with_chunk(z0, chunk, &(v.as_vector() * c0.norm())))
}

/// Small-circle walk that changes only the projections onto `v` and `v_ref`.
pub fn small_circle(
    z0: &DVector<f64>,
    chunk: ChunkRange,
    v: &UnitVector,
    v_ref: &UnitVector,
    delta: f64,
    steps: impl IntoIterator<Item = i64>,
) -> Result<Trajectory> {
    let c0 = chunk_of(z0, chunk)?;
    check_direction(v, chunk, "v")?;
    check_direction(v_ref, chunk, "v_ref")?;
    let walk = SphereWalk::small(&c0, v, v_ref)?;
    Ok(circle_trajectory(z0, chunk, walk, WalkKind::SmallCircle, delta, steps))
}

/// Angular step giving the same arc length per step as a linear step of
/// length `delta_linear`: `Δ_L / ‖z0‖` on the great circle, `Δ_L / ‖P_V z0‖`
/// on the small circle (when `v_ref` is given).
pub fn match_step_sizes(
    delta_linear: f64,
    z0: &DVector<f64>,
    chunk: ChunkRange,
    v: &UnitVector,
    v_ref: Option<&UnitVector>,
) -> Result<f64> {
    let c0 = chunk_of(z0, chunk)?;
    check_direction(v, chunk, "v")?;
    let radius = match v_ref {
        None => c0.norm(),
        Some(r) => {
            check_direction(r, chunk, "v_ref")?;
            c0.dot(v).hypot(c0.dot(r))
        }
    };
    if radius == 0.0 {
        return Err(Error::DegenerateGeometry("zero radius; step size undefined".into()));
    }
    Ok(delta_linear / radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorSpec;
    use crate::rng::{normal_matrix, normal_vector, seeded};
    use crate::weights::Dims;

    fn unit(v: &[f64]) -> UnitVector {
        UnitVector::new(DVector::from_column_slice(v)).unwrap()
    }

    fn whole(len: usize) -> ChunkRange {
        ChunkRange::new(0, len)
    }

    #[test]
    fn identity_operator_gives_identity_m() {
        let mut rng = seeded(1);
        let dims = Dims::new(2, 2, 2);
        let level = LevelWeights::new(normal_matrix(&mut rng, 8, 3), normal_vector(&mut rng, 8), dims);
        let params = neumann_params(&level, &OperatorSpec::identity(dims)).unwrap();
        assert!(params.m_diag().iter().all(|&m| (m - 1.0).abs() < 1e-15));

        let scaled = OperatorSpec::custom(nalgebra::DMatrix::identity(4, 4) * 0.3, dims).unwrap();
        let params = neumann_params(&level, &scaled).unwrap();
        assert!(params.m_diag().iter().all(|&m| (m - 0.3).abs() < 1e-15));
    }

    #[test]
    fn degenerate_column_is_named() {
        let dims = Dims::new(1, 2, 2);
        let mut w = nalgebra::DMatrix::from_element(4, 2, 1.0);
        w.column_mut(1).fill(0.0);
        let level = LevelWeights::new(w, DVector::zeros(4), dims);
        let err = neumann_params(&level, &OperatorSpec::identity(dims)).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn { column: 1 }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn step_examples() {
        let z = DVector::from_vec(vec![0.3, -1.0]);
        let fixed = WalkParams::new(DVector::from_element(2, 1.0), DVector::zeros(2)).unwrap();
        assert_eq!(neumann_step(&z, &fixed), z);
        let reset = WalkParams::new(DVector::zeros(2), DVector::from_vec(vec![4.0, 5.0])).unwrap();
        assert_eq!(neumann_step(&z, &reset).as_slice(), &[4.0, 5.0]);
        let half = WalkParams::new(DVector::from_element(2, 0.5), DVector::from_element(2, 1.0)).unwrap();
        assert_eq!(neumann_step(&DVector::zeros(2), &half).as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn refine_edge_cases() {
        let p = WalkParams::new(DVector::from_vec(vec![0.5, 0.9]), DVector::from_vec(vec![1.0, -2.0])).unwrap();
        assert_eq!(refine(&p, 1).unwrap(), p);
        assert!(matches!(refine(&p, 0), Err(Error::RefinementUndefined(_))));

        let ident = WalkParams::new(DVector::from_element(2, 1.0), DVector::from_vec(vec![3.0, 6.0])).unwrap();
        let fine = refine(&ident, 3).unwrap();
        assert!(fine.m_diag().iter().all(|&m| m == 1.0));
        assert!((fine.q() - DVector::from_vec(vec![1.0, 2.0])).norm() < 1e-15);
        assert_eq!(fine.refinement(), 3);

        let negative = WalkParams::new(DVector::from_vec(vec![0.5, -0.1]), DVector::zeros(2)).unwrap();
        assert!(matches!(refine(&negative, 2), Err(Error::RefinementUndefined(_))));
    }

    #[test]
    fn endpoint_examples() {
        let q = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let reset = WalkParams::new(DVector::zeros(3), q.clone()).unwrap();
        assert_eq!(endpoint(&reset).unwrap(), q);
        let still = WalkParams::new(DVector::from_element(3, -0.7), DVector::zeros(3)).unwrap();
        assert_eq!(endpoint(&still).unwrap(), DVector::zeros(3));
        let half = WalkParams::new(DVector::from_element(3, 0.5), DVector::from_element(3, 1.0)).unwrap();
        assert_eq!(endpoint(&half).unwrap(), DVector::from_element(3, 2.0));
        let divergent = WalkParams::new(DVector::from_vec(vec![0.2, 1.0]), DVector::zeros(2)).unwrap();
        assert!(matches!(endpoint(&divergent), Err(Error::NoEndpoint(n)) if n == 1.0));
    }

    #[test]
    fn great_circle_hand_example() {
        let z0 = DVector::from_vec(vec![3.0, 4.0, 0.0]);
        let v = unit(&[0.0, 0.0, 1.0]);
        let walk = SphereWalk::great(&z0, &v).unwrap();
        assert!((walk.radius - 5.0).abs() < 1e-15);
        assert!((walk.cos_axis.clone() - DVector::from_vec(vec![0.6, 0.8, 0.0])).norm() < 1e-15);
        assert_eq!(walk.theta, 0.0);

        let traj = great_circle(&z0, whole(3), &v, std::f64::consts::FRAC_PI_4, 0..3).unwrap();
        assert!((&traj.points[0] - &z0).norm() < 1e-14);
        assert!((&traj.points[2] - DVector::from_vec(vec![0.0, 0.0, 5.0])).norm() < 1e-14);
        assert_eq!(traj.endpoint.as_ref().unwrap(), &great_circle_endpoint(&z0, whole(3), &v).unwrap());
        let end = great_circle_endpoint(&z0, whole(3), &v).unwrap();
        assert_eq!(end.as_slice(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn great_circle_endpoint_of_aligned_chunk_is_unchanged() {
        let v = unit(&[1.0, 2.0, 2.0]);
        let z0 = v.as_vector() * 3.0;
        let end = great_circle_endpoint(&z0, whole(3), &v).unwrap();
        assert!((&end - &z0).norm() < 1e-15);
        assert!((end.norm() - z0.norm()).abs() < 1e-15);
        assert!(matches!(
            great_circle(&z0, whole(3), &v, 0.1, 0..2),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn negative_projection_gives_negative_phase() {
        let z0 = DVector::from_vec(vec![1.0, -1.0]);
        let walk = SphereWalk::great(&z0, &unit(&[0.0, 1.0])).unwrap();
        assert!((walk.theta + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((walk.point(walk.theta) - z0).norm() < 1e-15);
    }

    #[test]
    fn small_circle_hand_example() {
        let z0 = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let v = unit(&[1.0, 0.0, 0.0]);
        let v_ref = unit(&[0.0, 1.0, 0.0]);
        let walk = SphereWalk::small(&z0, &v, &v_ref).unwrap();
        assert_eq!(walk.offset.as_slice(), &[0.0, 0.0, 1.0]);
        assert!((walk.radius - 2f64.sqrt()).abs() < 1e-15);
        assert!((walk.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let top = walk.point(std::f64::consts::FRAC_PI_2);
        assert!((top - DVector::from_vec(vec![2f64.sqrt(), 0.0, 1.0])).norm() < 1e-15);

        let traj = small_circle(&z0, whole(3), &v, &v_ref, 0.1, 0..5).unwrap();
        assert!((&traj.points[0] - &z0).norm() < 1e-14);
        assert!(traj.points.iter().all(|p| p[2] == 1.0));

        let delta = match_step_sizes(0.2, &z0, whole(3), &v, Some(&v_ref)).unwrap();
        assert!((delta - 0.2 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn small_circle_rejects_bad_geometry() {
        let z0 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let v = unit(&[1.0, 0.0, 0.0]);
        let skew = unit(&[1.0, 1.0, 0.0]);
        assert!(matches!(
            small_circle(&z0, whole(3), &v, &skew, 0.1, 0..2),
            Err(Error::InvalidArgument(_))
        ));
        let v_ref = unit(&[0.0, 1.0, 0.0]);
        assert!(matches!(
            small_circle(&z0, whole(3), &v, &v_ref, 0.1, 0..2),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn step_matching_examples() {
        let z0 = DVector::from_vec(vec![0.6, 0.8]);
        let v = unit(&[1.0, 0.0]);
        assert!((match_step_sizes(0.3, &z0, whole(2), &v, None).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(match_step_sizes(0.0, &z0, whole(2), &v, None).unwrap(), 0.0);
        assert!(match_step_sizes(0.1, &DVector::zeros(2), whole(2), &v, None).is_err());
    }

    #[test]
    fn linear_walk_examples() {
        let z0 = DVector::from_vec(vec![9.0, 1.0, 2.0, 7.0]);
        let chunk = ChunkRange::new(1, 3);
        let q = DVector::from_vec(vec![0.5, -1.0]);
        let still = linear_walk(&z0, chunk, &q, 0.0, 0..4).unwrap();
        assert!(still.points.iter().all(|p| *p == z0));
        let one = linear_walk(&z0, chunk, &q, 1.0, [1]).unwrap();
        assert_eq!(one.points[0].as_slice(), &[9.0, 1.5, 1.0, 7.0]);
        let there = linear_walk(&z0, chunk, &q, 0.37, [5]).unwrap().points.remove(0);
        let back = linear_walk(&there, chunk, &q, 0.37, [-5]).unwrap().points.remove(0);
        assert!((back - &z0).norm() < 1e-14);
    }

    #[test]
    fn neumann_walk_keeps_other_chunks() {
        let z0 = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let params = WalkParams::new(DVector::from_element(2, 0.5), DVector::from_element(2, 1.0)).unwrap();
        let traj = neumann_walk(&z0, ChunkRange::new(2, 4), &params, 6).unwrap();
        assert_eq!(traj.len(), 6);
        assert_eq!(traj.points[0], z0);
        for p in &traj.points {
            assert_eq!((p[0], p[1]), (1.0, 2.0));
        }
        assert_eq!(traj.endpoint.unwrap().as_slice(), &[1.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn unit_vector_rejects_zero() {
        assert!(UnitVector::new(DVector::zeros(3)).is_err());
        assert!((unit(&[3.0, 4.0]).norm() - 1.0).abs() < 1e-15);
    }
}
