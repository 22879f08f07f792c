//! Reference computations used by the acceptance checks.
//!
//! These deliberately avoid the code paths they check: plain loops over dense
//! matrices, derivative-free minimisation, a Jacobi eigensolver and plain
//! sampling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// `I_C ⊗ P_s` built entry by entry.
pub fn kron_identity(channels: usize, spatial: &DMatrix<f64>) -> DMatrix<f64> {
    let s = spatial.nrows();
    let mut p = DMatrix::zeros(channels * s, channels * s);
    for c in 0..channels {
        for i in 0..s {
            for j in 0..s {
                p[(c * s + i, c * s + j)] = spatial[(i, j)];
            }
        }
    }
    p
}

/// 1 where the row of `p` has any nonzero entry.
pub fn row_support(p: &DMatrix<f64>) -> Vec<f64> {
    (0..p.nrows())
        .map(|i| if (0..p.ncols()).any(|j| p[(i, j)] != 0.0) { 1.0 } else { 0.0 })
        .collect()
}

/// `(I_C ⊗ P_s) x` block by block, without forming the full matrix.
pub fn kron_apply(channels: usize, spatial: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let s = spatial.nrows();
    let mut out = vec![0.0; channels * s];
    for c in 0..channels {
        for i in 0..s {
            out[c * s + i] = (0..s).map(|j| spatial[(i, j)] * x[c * s + j]).sum();
        }
    }
    out
}

/// Row support of `I_C ⊗ P_s`.
pub fn kron_row_support(channels: usize, spatial: &DMatrix<f64>) -> Vec<f64> {
    let block = row_support(spatial);
    (0..channels).flat_map(|_| block.iter().copied()).collect()
}

fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

/// `(P − I) b`
pub fn bias_gap(p: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    mat_vec(p, b).iter().zip(b).map(|(pb, b)| pb - b).collect()
}

fn masked_residual(w: &DMatrix<f64>, gap: &[f64], d: &[f64], q: &[f64]) -> Vec<f64> {
    let wq = mat_vec(w, q);
    (0..w.nrows()).map(|i| d[i] * (wq[i] - gap[i])).collect()
}

/// `‖D (W q − g)‖²` for a precomputed gap `g = (P − I) b`.
pub fn steering_term(w: &DMatrix<f64>, gap: &[f64], d: &[f64], q: &[f64]) -> f64 {
    masked_residual(w, gap, d, q).iter().map(|r| r * r).sum()
}

/// `‖Wᵀ D r‖ / ‖Wᵀ D² g‖` where `r` is the masked steering residual and
/// `g = (P − I) b`.
pub fn normal_equation_relative(w: &DMatrix<f64>, gap: &[f64], d: &[f64], q: &[f64]) -> f64 {
    let r = masked_residual(w, gap, d, q);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..w.ncols() {
        let g: f64 = (0..w.nrows()).map(|i| w[(i, j)] * d[i] * r[i]).sum();
        let h: f64 = (0..w.nrows()).map(|i| w[(i, j)] * d[i] * d[i] * gap[i]).sum();
        num += g * g;
        den += h * h;
    }
    if den == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (num / den).sqrt()
    }
}

/// Minimiser of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo + hi) / 2.0
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Sample mean and standard error of
/// `‖D(W(M z + q) + b − P(W z + b))‖²` over `z ~ N(0, σ² I)`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_objective<R: Rng>(
    rng: &mut R,
    w: &DMatrix<f64>,
    b: &[f64],
    p: &DMatrix<f64>,
    d: &[f64],
    m: Option<&[f64]>,
    q: &[f64],
    sigma: f64,
    samples: usize,
) -> (f64, f64) {
    let cols = w.ncols();
    let rows = w.nrows();
    // A = D(W M − P W), c = D(W q + b − P b)
    let pw = p * w;
    let mut a = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let mj = m.map_or(1.0, |m| m[j]);
            a[(i, j)] = d[i] * (w[(i, j)] * mj - pw[(i, j)]);
        }
    }
    let wq = mat_vec(w, q);
    let pb = mat_vec(p, b);
    let c: Vec<f64> = (0..rows).map(|i| d[i] * (wq[i] + b[i] - pb[i])).collect();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut z = vec![0.0; cols];
    for _ in 0..samples {
        for zj in z.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *zj = g * sigma;
        }
        let mut v = 0.0;
        for i in 0..rows {
            let mut e = c[i];
            for j in 0..cols {
                e += a[(i, j)] * z[j];
            }
            v += e * e;
        }
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    (mean, (var.max(0.0) / n).sqrt())
}

/// `out(ch, r, c) = img(ch, r − dy, c − dx)` with wrap-around, channel-major.
pub fn roll_image(img: &[f64], channels: usize, height: usize, width: usize, dy: i64, dx: i64) -> Vec<f64> {
    let mut out = vec![0.0; img.len()];
    for ch in 0..channels {
        for r in 0..height {
            for c in 0..width {
                let sr = (r as i64 - dy).rem_euclid(height as i64) as usize;
                let sc = (c as i64 - dx).rem_euclid(width as i64) as usize;
                out[(ch * height + r) * width + c] = img[(ch * height + sr) * width + sc];
            }
        }
    }
    out
}

pub fn unit_probe<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    let v = DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    v / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        // no constant offset: near the vertex it would swamp the O(δ²) change
        let x = golden_section(|x| (x - 0.3).powi(2), -5.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let ev = jacobi_eigenvalues(&a);
        for (got, want) in ev.iter().zip([5.0, 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn roll_wraps() {
        let img = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(roll_image(&img, 1, 2, 2, 0, 1), vec![2.0, 1.0, 4.0, 3.0]);
        assert_eq!(roll_image(&img, 1, 2, 2, 1, 0), vec![3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn kron_blocks() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let p = kron_identity(2, &s);
        assert_eq!(p[(2, 3)], 1.0);
        assert_eq!(row_support(&p), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(kron_row_support(2, &s), row_support(&p));
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kron_apply(2, &s, &x), mat_vec(&p, &x));
    }
}
