//! The acceptance suite, runnable from the library, the test harness and
//! `steer verify`.
//!
//! Each check draws its inputs from a seeded stream and compares the library
//! against the reference computations in [`oracle`].

pub mod oracle;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::closed_form::{linear_direction, objective_value, LatentPrior};
use crate::error::Result;
use crate::operators::{make_rot90, make_shift, make_zoom, Axis, Boundary, OperatorSpec, ZoomDirection};
use crate::principal::{bundle_bases, principal_directions, PrincipalBasis};
use crate::rng::{normal_matrix, normal_vector, seeded, SeededRng};
use crate::toygen::{build_toy_generator, Padding, ToyGenSpec};
use crate::transfer::{swap_chunks, TransferSchedule};
use crate::walks::{
    endpoint, great_circle, great_circle_endpoint, neumann_params, neumann_step, neumann_walk, refine,
    small_circle, UnitVector, WalkParams,
};
use crate::weights::{biggan128_level_shapes, synthesize_bundle, ChunkRange, Dims, LatentLayout, LevelWeights, WeightBundle};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(serialize_with = "as_millis")]
    pub elapsed: Duration,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.0} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64() * 1e3
        )
    }
}

/// Outcome of one check before timing is attached.
struct Outcome {
    passed: bool,
    detail: String,
}

fn timed(id: usize, name: &str, f: impl FnOnce() -> Result<Outcome>) -> CriterionResult {
    let start = Instant::now();
    let out = f().unwrap_or_else(|e| Outcome {
        passed: false,
        detail: format!("error: {e}"),
    });
    CriterionResult {
        id: id.to_string(),
        name: name.into(),
        passed: out.passed,
        detail: out.detail,
        elapsed: start.elapsed(),
    }
}

fn with_budget(mut r: CriterionResult, budget: Duration) -> CriterionResult {
    if r.elapsed >= budget {
        r.passed = false;
        r.detail.push_str(&format!("; over the {:.0} s budget", budget.as_secs_f64()));
    }
    r
}

/// A random level and operator with `16 ≤ rows ≤ max_rows` and
/// `4 ≤ cols ≤ max_cols`.
pub fn random_system(rng: &mut SeededRng, max_rows: usize, max_cols: usize) -> Result<(LevelWeights, OperatorSpec)> {
    let grids = [(4, 4), (2, 2), (2, 4), (4, 2)];
    let (h, w) = grids[rng.random_range(0..grids.len())];
    let s = h * w;
    let channels = rng.random_range(16usize.div_ceil(s)..=max_rows / s);
    let dims = Dims::new(channels, h, w);
    let cols = rng.random_range(4..=max_cols);
    let op = match rng.random_range(0..6) {
        0 | 1 => {
            let axis = if rng.random_bool(0.5) { Axis::X } else { Axis::Y };
            let side = if axis == Axis::X { w } else { h } as i64;
            let mut offset = rng.random_range(1..side);
            if rng.random_bool(0.5) {
                offset = -offset;
            }
            let boundary = if rng.random_bool(0.5) { Boundary::ZeroFill } else { Boundary::Cyclic };
            make_shift(dims, axis, offset, boundary)?
        }
        2 => make_zoom(dims, if rng.random_bool(0.5) { ZoomDirection::In } else { ZoomDirection::Out })?,
        3 if h == w => make_rot90(dims, rng.random_range(1..4))?,
        _ => {
            let mut p = normal_matrix(rng, s, s);
            let keep = rng.random_range(0..s);
            for i in 0..s {
                if i != keep && rng.random_bool(0.3) {
                    p.row_mut(i).fill(0.0);
                }
            }
            OperatorSpec::custom(p, dims)?
        }
    };
    let level = LevelWeights::new(
        normal_matrix(rng, dims.len(), cols),
        normal_vector(rng, dims.len()),
        dims,
    );
    Ok((level, op))
}

struct Dense {
    p: DMatrix<f64>,
    d: Vec<f64>,
}

fn dense(op: &OperatorSpec) -> Dense {
    let p = oracle::kron_identity(op.dims().channels, op.spatial());
    let d = oracle::row_support(&p);
    Dense { p, d }
}

/// Closed-form direction: normal-equation residual and local minimality.
pub fn criterion_1(seed: u64) -> CriterionResult {
    let r = timed(1, "closed-form optimality", || {
        let mut rng = seeded(seed ^ 0x01);
        let (mut worst_rel, mut worst_drop, mut probes_failed) = (0.0f64, f64::NEG_INFINITY, 0usize);
        for _ in 0..50 {
            let (level, op) = random_system(&mut rng, 256, 32)?;
            let q = linear_direction(&level, &op)?.q;
            let Dense { p, d } = dense(&op);
            let b = level.b().as_slice();
            let gap = oracle::bias_gap(&p, b);
            let rel = oracle::normal_equation_relative(level.w(), &gap, &d, q.as_slice());
            worst_rel = worst_rel.max(rel);
            let base = oracle::steering_term(level.w(), &gap, &d, q.as_slice());
            for _ in 0..1000 {
                let delta = oracle::unit_probe(&mut rng, q.len());
                let moved = &q + delta * 1e-3;
                let t = oracle::steering_term(level.w(), &gap, &d, moved.as_slice());
                // allowance for rounding only; the true difference is ε²‖DWδ‖² ≥ 0
                let drop = (base - t) / base.max(f64::MIN_POSITIVE);
                worst_drop = worst_drop.max(drop);
                if base > t + 1e-12 * base {
                    probes_failed += 1;
                }
            }
        }
        Ok(Outcome {
            passed: worst_rel <= 1e-8 && probes_failed == 0,
            detail: format!(
                "50 systems, max relative residual {worst_rel:.2e} (≤ 1e-8), {probes_failed}/50000 probes below the optimum, largest relative decrease {worst_drop:.1e}"
            ),
        })
    });
    with_budget(r, Duration::from_secs(10))
}

/// Diagonal `M` against a derivative-free per-column minimiser.
pub fn criterion_2(seed: u64) -> CriterionResult {
    let r = timed(2, "diagonal minimizer", || {
        let mut rng = seeded(seed ^ 0x02);
        let (mut worst, mut columns) = (0.0f64, 0usize);
        for _ in 0..20 {
            let (level, op) = random_system(&mut rng, 256, 32)?;
            let params = neumann_params(&level, &op)?;
            let Dense { p, d } = dense(&op);
            let w = level.w();
            let pw = &p * w;
            for j in 0..w.ncols() {
                let f = |m: f64| -> f64 {
                    (0..w.nrows()).map(|i| d[i] * (w[(i, j)] * m - pw[(i, j)]).powi(2)).sum()
                };
                let dw: f64 = (0..w.nrows()).map(|i| d[i] * w[(i, j)].powi(2)).sum();
                let dpw: f64 = (0..w.nrows()).map(|i| d[i] * pw[(i, j)].powi(2)).sum();
                let reach = (dpw / dw).sqrt() + 1.0;
                let m = oracle::golden_section(f, -reach, reach, 1e-12);
                worst = worst.max((m - params.m_diag()[j]).abs());
                columns += 1;
            }
        }
        Ok(Outcome {
            passed: worst <= 1e-6,
            detail: format!("20 systems, {columns} columns, max |M_ii − golden| = {worst:.2e} (≤ 1e-6)"),
        })
    });
    with_budget(r, Duration::from_secs(5))
}

fn random_walk_params(rng: &mut SeededRng, len: usize, lo: f64, hi: f64) -> Result<WalkParams> {
    let m = DVector::from_fn(len, |_, _| rng.random_range(lo..hi));
    WalkParams::new(m, normal_vector(rng, len))
}

/// `n` refined steps reproduce one original step.
pub fn criterion_3(seed: u64) -> CriterionResult {
    timed(3, "refinement composition", || {
        let mut rng = seeded(seed ^ 0x03);
        let mut worst = 0.0f64;
        for n in [2usize, 3, 4, 7, 16] {
            for _ in 0..20 {
                let len = rng.random_range(4..=32);
                let params = random_walk_params(&mut rng, len, 0.3, 0.99)?;
                let z = normal_vector(&mut rng, len);
                let once = DVector::from_fn(len, |i, _| params.m_diag()[i] * z[i] + params.q()[i]);
                let fine = refine(&params, n)?;
                let mut c = z.clone();
                for _ in 0..n {
                    c = neumann_step(&c, &fine);
                }
                worst = worst.max((&c - &once).norm() / once.norm());
            }
        }
        Ok(Outcome {
            passed: worst <= 1e-10,
            detail: format!("N ∈ {{2,3,4,7,16}}, 20 walks each, max relative error {worst:.2e} (≤ 1e-10)"),
        })
    })
}

/// Analytic endpoint against plain iteration, and the contraction rate.
pub fn criterion_4(seed: u64) -> CriterionResult {
    timed(4, "walk endpoint", || {
        let mut rng = seeded(seed ^ 0x04);
        let (mut worst_end, mut worst_ratio_excess, mut checked) = (0.0f64, f64::NEG_INFINITY, 0usize);
        let mut trajectory_gap = 0.0f64;
        for _ in 0..20 {
            let len = rng.random_range(4..=32);
            let params = random_walk_params(&mut rng, len, -0.85, 0.85)?;
            let end = endpoint(&params)?;
            let z0 = normal_vector(&mut rng, len) * 10.0;
            let (m, q) = (params.m_diag(), params.q());

            let mut z = z0.clone();
            for _ in 0..200 {
                z = DVector::from_fn(len, |i, _| m[i] * z[i] + q[i]);
            }
            let expected = DVector::from_fn(len, |i, _| q[i] / (1.0 - m[i]));
            worst_end = worst_end.max((&end - &expected).norm()).max((&z - &end).norm());

            let traj = neumann_walk(&z0, ChunkRange::new(0, len), &params, 201)?;
            trajectory_gap = trajectory_gap.max((&traj.points[200] - &z).norm());
            let rate = params.spectral_norm();
            for pair in traj.points.windows(2) {
                let (e0, e1) = ((&pair[0] - &end).norm(), (&pair[1] - &end).norm());
                // only where rounding cannot exceed the 1e-12 slack
                let rounding: f64 = (0..len)
                    .map(|i| (m[i] * pair[0][i]).abs() + q[i].abs() + end[i].abs())
                    .map(|v| (4.0 * f64::EPSILON * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if rounding < 1e-12 * e0 {
                    checked += 1;
                    worst_ratio_excess = worst_ratio_excess.max(e1 / e0 - rate);
                }
            }
        }
        Ok(Outcome {
            passed: worst_end <= 1e-10 && trajectory_gap <= 1e-10 && worst_ratio_excess <= 1e-12 && checked > 0,
            detail: format!(
                "max endpoint gap {worst_end:.2e} (≤ 1e-10), {checked} steps with contraction excess ≤ {worst_ratio_excess:.1e} (≤ 1e-12)"
            ),
        })
    })
}

/// Random latent of length 120 split into six chunks of 20, with a random chunk picked.
fn random_chunk(rng: &mut SeededRng) -> (DVector<f64>, ChunkRange) {
    let layout = LatentLayout::uniform(6, 20);
    let z0 = normal_vector(rng, layout.latent_dim);
    let level = rng.random_range(1..=6);
    (z0, layout.chunks[level - 1])
}

/// Great circle: norm preservation, start point and endpoint.
pub fn criterion_5(seed: u64) -> CriterionResult {
    timed(5, "great circle", || {
        let mut rng = seeded(seed ^ 0x05);
        let (mut norm_drift, mut start_gap, mut end_gap, mut untouched) = (0.0f64, 0.0f64, 0.0f64, true);
        for _ in 0..10 {
            let (z0, chunk) = random_chunk(&mut rng);
            let c0 = z0.rows(chunk.start, chunk.len()).into_owned();
            let v = UnitVector::new(oracle::unit_probe(&mut rng, chunk.len()))?;
            let delta = rng.random_range(1e-3..0.1);
            let traj = great_circle(&z0, chunk, &v, delta, 0..10_000)?;
            let r0 = c0.norm();
            for p in &traj.points {
                let c = p.rows(chunk.start, chunk.len());
                norm_drift = norm_drift.max((c.norm() - r0).abs() / r0);
                untouched &= (0..z0.len()).filter(|i| !chunk.range().contains(i)).all(|i| p[i] == z0[i]);
            }
            start_gap = start_gap.max((&traj.points[0] - &z0).norm());
            let expected = v.as_vector() * r0;
            let end = great_circle_endpoint(&z0, chunk, &v)?;
            end_gap = end_gap
                .max((end.rows(chunk.start, chunk.len()) - &expected).norm())
                .max((traj.endpoint.as_ref().unwrap().rows(chunk.start, chunk.len()) - &expected).norm());
        }
        Ok(Outcome {
            passed: norm_drift <= 1e-12 && start_gap <= 1e-10 && end_gap <= 1e-10 && untouched,
            detail: format!(
                "10 walks × 10⁴ steps, max relative norm drift {norm_drift:.1e} (≤ 1e-12), n=0 gap {start_gap:.1e}, endpoint gap {end_gap:.1e} (≤ 1e-10)"
            ),
        })
    })
}

/// Small circle: coordinates outside `span{v, v_ref}` stay put.
pub fn criterion_6(seed: u64) -> CriterionResult {
    timed(6, "small circle", || {
        let mut rng = seeded(seed ^ 0x06);
        let (mut drift, mut start_gap) = (0.0f64, 0.0f64);
        for _ in 0..5 {
            let (z0, chunk) = random_chunk(&mut rng);
            let len = chunk.len();
            let c0 = z0.rows(chunk.start, len).into_owned();
            let v = oracle::unit_probe(&mut rng, len);
            let raw = oracle::unit_probe(&mut rng, len);
            let v_ref = (&raw - &v * raw.dot(&v)).normalize();
            let delta = rng.random_range(1e-2..0.2);
            let steps = (std::f64::consts::TAU / delta).ceil() as i64;
            let traj = small_circle(&z0, chunk, &UnitVector::new(v.clone())?, &UnitVector::new(v_ref.clone())?, delta, 0..=steps)?;
            start_gap = start_gap.max((&traj.points[0] - &z0).norm());
            for _ in 0..100 {
                let raw = oracle::unit_probe(&mut rng, len);
                let probe = (&raw - &v * raw.dot(&v) - &v_ref * raw.dot(&v_ref)).normalize();
                let initial = c0.dot(&probe);
                for p in &traj.points {
                    drift = drift.max((p.rows(chunk.start, len).dot(&probe) - initial).abs());
                }
            }
        }
        Ok(Outcome {
            passed: drift <= 1e-10 && start_gap <= 1e-10,
            detail: format!("5 full circles × 100 probes, max drift {drift:.1e} (≤ 1e-10), n=0 gap {start_gap:.1e}"),
        })
    })
}

/// Orthonormality, gains and Gram eigenvalues of one basis.
pub fn check_basis(w: &DMatrix<f64>, basis: &PrincipalBasis) -> (f64, f64, f64) {
    let v = basis.vectors();
    let ortho = (v.tr_mul(v) - DMatrix::identity(v.ncols(), v.ncols())).amax();
    // relative comparisons are meaningless for numerically null directions
    let null = basis.null_flags();
    let mut gain = 0.0f64;
    for (k, col) in v.column_iter().enumerate().filter(|(k, _)| !null[*k]) {
        let s = basis.sigmas()[k];
        gain = gain.max(((w * col).norm() - s).abs() / s);
    }
    let cols = w.ncols();
    let mut gram = DMatrix::zeros(cols, cols);
    for i in 0..cols {
        for j in i..cols {
            let g: f64 = w.column(i).iter().zip(w.column(j).iter()).map(|(a, b)| a * b).sum();
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = oracle::jacobi_eigenvalues(&gram);
    let spectrum = basis
        .sigmas()
        .iter()
        .zip(&eig)
        .zip(&null)
        .filter(|(_, n)| !**n)
        .map(|((s, l), _)| (s * s - l).abs() / l.abs())
        .fold(0.0f64, f64::max);
    (ortho, gain, spectrum)
}

/// SVD basis against a Gram-matrix eigensolver.
pub fn criterion_7(seed: u64) -> CriterionResult {
    timed(7, "principal basis", || {
        let mut rng = seeded(seed ^ 0x07);
        let (mut ortho, mut gain, mut spectrum, mut variational) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let shapes = [(40, 4), (100, 10), (300, 20), (128, 32), (24576, 20)];
        for &(rows, cols) in &shapes {
            let w = normal_matrix(&mut rng, rows, cols) / (cols as f64).sqrt();
            let level = LevelWeights::new(w.clone(), DVector::zeros(rows), Dims::new(rows, 1, 1));
            let basis = principal_directions(&level)?;
            let (o, g, s) = check_basis(&w, &basis);
            ortho = ortho.max(o);
            gain = gain.max(g);
            spectrum = spectrum.max(s);
            let top = basis.sigmas()[0];
            for _ in 0..1000 {
                let x = oracle::unit_probe(&mut rng, cols);
                variational = variational.max((&w * x).norm() - top);
            }
        }
        Ok(Outcome {
            passed: ortho <= 1e-10 && gain <= 1e-8 && spectrum <= 1e-8 && variational <= 1e-10,
            detail: format!(
                "5 shapes incl. 24576×20, ‖VᵀV − I‖ {ortho:.1e} (≤ 1e-10), gain error {gain:.1e}, σ² vs eigenvalues {spectrum:.1e} (≤ 1e-8)"
            ),
        })
    })
}

/// Principal directions of all six synthetic BigGAN-128 levels within 5 s.
pub fn criterion_8(seed: u64) -> CriterionResult {
    let bundle = synthesize_bundle(&biggan128_level_shapes(), seed ^ 0x08);
    let r = timed(8, "principal extraction timing", || {
        let start = Instant::now();
        let bases = bundle_bases(&bundle)?;
        let took = start.elapsed();
        Ok(Outcome {
            passed: bases.len() == 6,
            detail: format!("{} levels in {:.0} ms (< 5000 ms)", bases.len(), took.as_secs_f64() * 1e3),
        })
    });
    with_budget(r, Duration::from_secs(5))
}

/// Largest difference between the transformed-pathway image and the rolled
/// reference image, over pixels where both the pixel and its source are at
/// least `border` away from every edge.
pub fn equivariance_gap(spec: &ToyGenSpec, z: &DVector<f64>, axis: Axis, offset: i64, border: usize) -> Result<f64> {
    let gen = build_toy_generator(spec)?;
    let op = make_shift(spec.first_dims(), axis, offset, Boundary::Cyclic)?;
    let moved = gen.apply_operator_at_first_layer(z, &op)?;
    let reference = gen.forward(z)?;
    let dims = reference.dims;
    let pixels = offset << spec.stages;
    let (dy, dx) = if axis == Axis::X { (0, pixels) } else { (pixels, 0) };
    let rolled = oracle::roll_image(&reference.data, dims.channels, dims.height, dims.width, dy, dx);
    let inside = |r: i64, c: i64| {
        let b = border as i64;
        r >= b && c >= b && r < dims.height as i64 - b && c < dims.width as i64 - b
    };
    let mut gap = 0.0f64;
    let mut compared = 0;
    for ch in 0..dims.channels {
        for r in 0..dims.height as i64 {
            for c in 0..dims.width as i64 {
                if border > 0 && !(inside(r, c) && inside(r - dy, c - dx)) {
                    continue;
                }
                let i = dims.flat_index(ch, r as usize, c as usize);
                gap = gap.max((moved.data[i] - rolled[i]).abs());
                compared += 1;
            }
        }
    }
    if compared == 0 {
        return Err(crate::Error::InvalidArgument("no interior pixels to compare".into()));
    }
    Ok(gap)
}

/// First-layer shift against a pixel roll of the output image.
pub fn criterion_9(seed: u64) -> CriterionResult {
    timed(9, "toy generator equivariance", || {
        let (mut cyclic, mut zero) = (0.0f64, 0.0f64);
        for k in 0..10u64 {
            let mut rng = seeded(seed ^ 0x09 ^ (k << 8));
            let axis = if k % 2 == 0 { Axis::X } else { Axis::Y };
            let spec = ToyGenSpec { seed: seed.wrapping_add(k), ..ToyGenSpec::default() };
            let z = normal_vector(&mut rng, spec.latent_width);
            cyclic = cyclic.max(equivariance_gap(&spec, &z, axis, 1, 0)?);
            let spec = ToyGenSpec { padding: Padding::Zero, ..spec };
            let border = build_toy_generator(&spec)?.boundary_reach();
            zero = zero.max(equivariance_gap(&spec, &z, axis, 1, border)?);
        }
        Ok(Outcome {
            passed: cyclic <= 1e-10 && zero <= 1e-8,
            detail: format!("10 seeds, circular padding gap {cyclic:.1e} (≤ 1e-10), zero padding interior gap {zero:.1e} (≤ 1e-8)"),
        })
    })
}

/// Analytic objective against a Monte-Carlo estimate.
pub fn criterion_10(seed: u64) -> CriterionResult {
    timed(10, "Monte-Carlo objective", || {
        let mut rng = seeded(seed ^ 0x0a);
        let mut worst = 0.0f64;
        let mut lines = Vec::new();
        for k in 0..5 {
            let (level, op) = random_system(&mut rng, 64, 12)?;
            let sigma = rng.random_range(0.5..2.0);
            let prior = LatentPrior::isotropic(sigma)?;
            let (m, q) = if k % 2 == 1 {
                let params = neumann_params(&level, &op)?;
                (Some(params.m_diag().clone()), params.q().clone())
            } else {
                (None, linear_direction(&level, &op)?.q)
            };
            let analytic = objective_value(&level, &op, &q, m.as_ref(), prior)?.total();
            let Dense { p, d } = dense(&op);
            let (mean, se) = oracle::monte_carlo_objective(
                &mut rng,
                level.w(),
                level.b().as_slice(),
                &p,
                &d,
                m.as_ref().map(|m| m.as_slice()),
                q.as_slice(),
                sigma,
                100_000,
            );
            let z = (mean - analytic).abs() / se;
            worst = worst.max(z);
            lines.push(format!("{z:.2}"));
        }
        Ok(Outcome {
            passed: worst <= 3.0,
            detail: format!("5 configurations × 10⁵ samples, |mean − analytic| / SE = [{}] (≤ 3)", lines.join(", ")),
        })
    })
}

/// Exhaustive chunk-swap algebra on a 120-dim latent with six chunks.
pub fn criterion_11(seed: u64) -> CriterionResult {
    timed(11, "transfer algebra", || {
        let mut rng = seeded(seed ^ 0x0b);
        let layout = LatentLayout::uniform(6, 20);
        let (s, t, u) = (normal_vector(&mut rng, 120), normal_vector(&mut rng, 120), normal_vector(&mut rng, 120));
        let subsets: Vec<BTreeSet<usize>> = (1u32..64)
            .map(|mask| (1..=6).filter(|l| mask & (1 << (l - 1)) != 0).collect())
            .collect();
        let mut failures = 0;
        let mut pairs = 0;
        let bits = |a: &DVector<f64>, b: &DVector<f64>| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
        for a in &subsets {
            let sa = TransferSchedule::custom(a.iter().copied())?;
            let out = swap_chunks(&s, &t, &sa, &layout)?;
            let expected = DVector::from_fn(120, |i, _| if a.contains(&(i / 20 + 1)) { t[i] } else { s[i] });
            failures += usize::from(!bits(&out, &expected));
            failures += usize::from(!bits(&swap_chunks(&s, &s, &sa, &layout)?, &s));
            failures += usize::from(!bits(&swap_chunks(&out, &t, &sa, &layout)?, &out));
            if a.len() == 6 {
                failures += usize::from(!bits(&out, &t));
            }
            for b in subsets.iter().filter(|b| a.is_disjoint(b)) {
                let sb = TransferSchedule::custom(b.iter().copied())?;
                let ab = swap_chunks(&out, &u, &sb, &layout)?;
                let ba = swap_chunks(&swap_chunks(&s, &u, &sb, &layout)?, &t, &sa, &layout)?;
                failures += usize::from(!bits(&ab, &ba));
                pairs += 1;
            }
        }
        Ok(Outcome {
            passed: failures == 0,
            detail: format!("63 schedules, {pairs} disjoint pairs, {failures} mismatches"),
        })
    })
}

pub fn run_criterion(id: usize, seed: u64) -> Option<CriterionResult> {
    Some(match id {
        1 => criterion_1(seed),
        2 => criterion_2(seed),
        3 => criterion_3(seed),
        4 => criterion_4(seed),
        5 => criterion_5(seed),
        6 => criterion_6(seed),
        7 => criterion_7(seed),
        8 => criterion_8(seed),
        9 => criterion_9(seed),
        10 => criterion_10(seed),
        11 => criterion_11(seed),
        _ => return None,
    })
}

pub const CRITERIA: std::ops::RangeInclusive<usize> = 1..=11;

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.filter_map(|id| run_criterion(id, seed)).collect()
}

/// Checks on a user-supplied bundle: validation, the principal basis of every
/// level and, where the grid allows a one-cell shift, the closed-form residual.
pub fn check_bundle(bundle: &WeightBundle) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let start = Instant::now();
    let report = bundle.validate();
    out.push(CriterionResult {
        id: "B0".into(),
        name: "bundle validation".into(),
        passed: report.all_passed(),
        detail: format!("{} checks, {} failed", report.checks.len(), report.failures().count()),
        elapsed: start.elapsed(),
    });
    if !report.all_passed() {
        return out;
    }
    for (i, level) in bundle.levels().iter().enumerate() {
        let start = Instant::now();
        let outcome = (|| -> Result<Outcome> {
            let basis = principal_directions(level)?;
            let (o, g, s) = check_basis(level.w(), &basis);
            let mut passed = o <= 1e-10 && g <= 1e-8 && s <= 1e-8;
            let mut detail = format!("basis ‖VᵀV − I‖ {o:.1e}, gain {g:.1e}, spectrum {s:.1e}");
            let dims = level.dims();
            if dims.width >= 2 {
                let op = make_shift(dims, Axis::X, 1, Boundary::ZeroFill)?;
                let q = linear_direction(level, &op)?.q;
                let channels = dims.channels;
                let b = level.b().as_slice();
                let gap: Vec<f64> = oracle::kron_apply(channels, op.spatial(), b)
                    .iter()
                    .zip(b)
                    .map(|(pb, b)| pb - b)
                    .collect();
                let d = oracle::kron_row_support(channels, op.spatial());
                let rel = oracle::normal_equation_relative(level.w(), &gap, &d, q.as_slice());
                passed &= rel <= 1e-8;
                detail.push_str(&format!(", shift-x residual {rel:.1e}"));
            }
            Ok(Outcome { passed, detail })
        })()
        .unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
        out.push(CriterionResult {
            id: format!("B{}", i + 1),
            name: format!("level {} ({}, width {})", i + 1, level.dims(), level.latent_width()),
            passed: outcome.passed,
            detail: outcome.detail,
            elapsed: start.elapsed(),
        });
    }
    out
}
