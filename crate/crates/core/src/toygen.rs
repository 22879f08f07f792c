//! A small seeded generator: dense first layer onto a 4×4 grid, then a stack
//! of nearest-neighbour upsampling and 3×3 convolutions.
//!
//! Only the first layer matters for steering; the rest exists so that the
//! effect of a first-layer operator can be checked on actual images. With
//! circular padding every stage commutes with cyclic shifts (the activation is
//! pointwise), so a one-cell shift on the 4×4 grid rolls the image by exactly
//! `2^L` pixels.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::closed_form::{linear_direction, objective_value, LatentPrior};
use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::rng::{normal_vector, seeded, unit_vector};
use crate::weights::{Dims, LatentLayout, LevelWeights, WeightBundle};

pub const GRID: usize = 4;
const LEAK: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    #[default]
    Circular,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyGenSpec {
    pub latent_width: usize,
    /// Channels of the first-layer tensor and of every hidden stage.
    pub channels: usize,
    pub stages: usize,
    pub kernel: usize,
    pub padding: Padding,
    pub out_channels: usize,
    pub seed: u64,
}

impl Default for ToyGenSpec {
    fn default() -> Self {
        ToyGenSpec {
            latent_width: 8,
            channels: 8,
            stages: 2,
            kernel: 3,
            padding: Padding::Circular,
            out_channels: 1,
            seed: 0,
        }
    }
}

impl ToyGenSpec {
    pub fn first_dims(&self) -> Dims {
        Dims::new(self.channels, GRID, GRID)
    }

    pub fn output_side(&self) -> usize {
        GRID << self.stages
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.latent_width == 0 || self.channels == 0 {
            return bad("latent width and channel count must be positive");
        }
        if self.kernel.is_multiple_of(2) {
            return bad("kernel size must be odd");
        }
        if self.stages > 6 {
            return bad("at most 6 upsampling stages");
        }
        if !matches!(self.out_channels, 1 | 3) {
            return bad("output channels must be 1 or 3");
        }
        Ok(())
    }
}

/// Channel-major image or feature map, indexed `c·H·W + r·W + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: Dims) -> Self {
        Tensor {
            dims,
            data: vec![0.0; dims.len()],
        }
    }

    pub fn from_vector(dims: Dims, v: &DVector<f64>) -> Result<Self> {
        if v.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} cannot be viewed as {dims}",
                v.len()
            )));
        }
        Ok(Tensor {
            dims,
            data: v.as_slice().to_vec(),
        })
    }

    pub fn get(&self, c: usize, r: usize, col: usize) -> f64 {
        self.data[self.dims.flat_index(c, r, col)]
    }

    /// Cyclic roll: `out(r, c) = self(r − dy, c − dx)`.
    pub fn roll(&self, dy: i64, dx: i64) -> Tensor {
        let Dims { channels, height, width } = self.dims;
        let mut out = Tensor::zeros(self.dims);
        for ch in 0..channels {
            for r in 0..height {
                let sr = (r as i64 - dy).rem_euclid(height as i64) as usize;
                for c in 0..width {
                    let sc = (c as i64 - dx).rem_euclid(width as i64) as usize;
                    out.data[self.dims.flat_index(ch, r, c)] = self.get(ch, sr, sc);
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn leaky(mut self) -> Self {
        for v in &mut self.data {
            if *v < 0.0 {
                *v *= LEAK;
            }
        }
        self
    }

    fn upsample(&self) -> Tensor {
        let Dims { channels, height, width } = self.dims;
        let dims = Dims::new(channels, height * 2, width * 2);
        let mut out = Tensor::zeros(dims);
        for ch in 0..channels {
            for r in 0..dims.height {
                for c in 0..dims.width {
                    out.data[dims.flat_index(ch, r, c)] = self.get(ch, r / 2, c / 2);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// `[out][in][ky][kx]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv {
    fn random<R: Rng>(rng: &mut R, cin: usize, cout: usize, k: usize) -> Conv {
        let scale = 1.0 / ((cin * k * k) as f64).sqrt();
        let weights = normal_vector(rng, cout * cin * k * k).as_slice().iter().map(|v| v * scale).collect();
        let bias = normal_vector(rng, cout).as_slice().iter().map(|v| v * scale).collect();
        Conv {
            in_channels: cin,
            out_channels: cout,
            kernel: k,
            weights,
            bias,
        }
    }

    fn apply(&self, x: &Tensor, padding: Padding) -> Tensor {
        let (h, w) = (x.dims.height as i64, x.dims.width as i64);
        let dims = Dims::new(self.out_channels, x.dims.height, x.dims.width);
        let half = (self.kernel / 2) as i64;
        let k = self.kernel;
        let mut out = Tensor::zeros(dims);
        for co in 0..self.out_channels {
            for r in 0..h {
                for c in 0..w {
                    let mut acc = self.bias[co];
                    for ci in 0..self.in_channels {
                        for ky in 0..k {
                            let mut sr = r + ky as i64 - half;
                            match padding {
                                Padding::Circular => sr = sr.rem_euclid(h),
                                Padding::Zero if !(0..h).contains(&sr) => continue,
                                Padding::Zero => {}
                            }
                            for kx in 0..k {
                                let mut sc = c + kx as i64 - half;
                                match padding {
                                    Padding::Circular => sc = sc.rem_euclid(w),
                                    Padding::Zero if !(0..w).contains(&sc) => continue,
                                    Padding::Zero => {}
                                }
                                let wi = ((co * self.in_channels + ci) * k + ky) * k + kx;
                                acc += self.weights[wi] * x.get(ci, sr as usize, sc as usize);
                            }
                        }
                    }
                    out.data[dims.flat_index(co, r as usize, c as usize)] = acc;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyGenerator {
    pub spec: ToyGenSpec,
    pub first: LevelWeights,
    pub stages: Vec<Conv>,
    pub head: Conv,
}

/// Deterministic in `spec`: every weight is a standard normal draw scaled by
/// `1/√fan_in`.
pub fn build_toy_generator(spec: &ToyGenSpec) -> Result<ToyGenerator> {
    spec.check()?;
    let mut rng = seeded(spec.seed);
    let dims = spec.first_dims();
    let d = spec.latent_width;
    let mut w = DMatrix::zeros(dims.len(), d);
    for mut row in w.row_iter_mut() {
        row.copy_from(&(normal_vector(&mut rng, d) / (d as f64).sqrt()).transpose());
    }
    let b = normal_vector(&mut rng, dims.len());
    let stages = (0..spec.stages)
        .map(|_| Conv::random(&mut rng, spec.channels, spec.channels, spec.kernel))
        .collect();
    let head = Conv::random(&mut rng, spec.channels, spec.out_channels, spec.kernel);
    Ok(ToyGenerator {
        spec: spec.clone(),
        first: LevelWeights::new(w, b, dims),
        stages,
        head,
    })
}

impl ToyGenerator {
    /// `W z + b` reshaped onto the grid, before the activation.
    pub fn first_layer(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if z.len() != self.spec.latent_width {
            return Err(Error::DimensionMismatch(format!(
                "latent chunk has length {}, generator expects {}",
                z.len(),
                self.spec.latent_width
            )));
        }
        Ok(self.first.w() * z + self.first.b())
    }

    /// Everything after the first dense layer.
    pub fn synthesize(&self, h: &DVector<f64>) -> Result<Tensor> {
        let mut x = Tensor::from_vector(self.spec.first_dims(), h)?.leaky();
        for conv in &self.stages {
            x = conv.apply(&x.upsample(), self.spec.padding).leaky();
        }
        Ok(self.head.apply(&x, self.spec.padding))
    }

    pub fn forward(&self, z: &DVector<f64>) -> Result<Tensor> {
        self.synthesize(&self.first_layer(z)?)
    }

    pub fn forward_batch(&self, zs: &[DVector<f64>]) -> Result<Vec<Tensor>> {
        zs.iter().map(|z| self.forward(z)).collect()
    }

    /// The image obtained by transforming the first-layer tensor with `op`.
    pub fn apply_operator_at_first_layer(&self, z: &DVector<f64>, op: &OperatorSpec) -> Result<Tensor> {
        if op.dims() != self.spec.first_dims() {
            return Err(Error::DimensionMismatch(format!(
                "operator acts on {}, first layer is {}",
                op.dims(),
                self.spec.first_dims()
            )));
        }
        self.synthesize(&op.apply(&self.first_layer(z)?))
    }

    /// Single-level bundle holding the first layer.
    pub fn export_bundle(&self) -> WeightBundle {
        WeightBundle::new(
            vec![self.first.clone()],
            LatentLayout::uniform(1, self.spec.latent_width),
        )
    }

    /// Width of the band near the image edge that zero padding can disturb:
    /// each convolution reaches `⌊k/2⌋` pixels at its own resolution.
    pub fn boundary_reach(&self) -> usize {
        (self.spec.kernel / 2) << self.spec.stages
    }
}

/// One candidate `q` in a fidelity report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateStat {
    pub label: String,
    pub norm: f64,
    pub empirical_mean: f64,
    pub standard_error: f64,
    pub analytic: f64,
    pub irreducible: f64,
    pub steering: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub samples: usize,
    pub sigma_z: f64,
    /// Closed-form, zero, then random directions of the same norm.
    pub candidates: Vec<CandidateStat>,
    /// The closed-form direction has the smallest analytic objective.
    pub closed_form_is_minimum: bool,
}

pub const RANDOM_CANDIDATES: usize = 10;

/// Monte-Carlo estimate of `E‖D(W(z + q) + b − P(W z + b))‖²` for the
/// closed-form `q`, for `q = 0` and for random `q` of the same norm, next to
/// the analytic value. All candidates share one set of samples.
pub fn steering_fidelity_report(
    gen: &ToyGenerator,
    op: &OperatorSpec,
    samples: usize,
    sigma_z: f64,
    seed: u64,
) -> Result<FidelityReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let prior = LatentPrior::isotropic(sigma_z)?;
    let level = &gen.first;
    let q_star = linear_direction(level, op)?.q;
    let d = q_star.len();
    let mut rng = seeded(seed);

    let mut candidates = vec![("closed-form".to_string(), q_star.clone()), ("zero".into(), DVector::zeros(d))];
    for k in 0..RANDOM_CANDIDATES {
        let q = unit_vector(&mut rng, d) * q_star.norm();
        candidates.push((format!("random-{}", k + 1), q));
    }

    let mask = op.mask();
    let w = level.w();
    // per-sample pieces that do not depend on q
    let mut base = Vec::with_capacity(samples);
    for _ in 0..samples {
        let z = normal_vector(&mut rng, d) * sigma_z;
        let h = w * &z + level.b();
        base.push(mask.component_mul(&(&h - op.apply(&h))));
    }
    let mut stats = Vec::with_capacity(candidates.len());
    for (label, q) in candidates {
        let shift = mask.component_mul(&(w * &q));
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for r in &base {
            let v = (r + &shift).norm_squared();
            sum += v;
            sum_sq += v * v;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        let terms = objective_value(level, op, &q, None, prior)?;
        stats.push(CandidateStat {
            label,
            norm: q.norm(),
            empirical_mean: mean,
            standard_error: (var / n).sqrt(),
            analytic: terms.total(),
            irreducible: terms.irreducible,
            steering: terms.steering,
        });
    }
    let best = stats[0].analytic;
    let closed_form_is_minimum = stats.iter().all(|s| best <= s.analytic * (1.0 + 1e-12) + 1e-300);
    Ok(FidelityReport {
        samples,
        sigma_z,
        candidates: stats,
        closed_form_is_minimum,
    })
}

/// Binary PGM (one channel) or PPM (three channels), with the value range
/// mapped affinely onto 0..=255.
pub fn encode_pnm(image: &Tensor) -> Result<Vec<u8>> {
    let Dims { channels, height, width } = image.dims;
    let magic = match channels {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::InvalidArgument(format!("cannot encode {c}-channel image"))),
    };
    let lo = image.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = image.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut out = Vec::with_capacity(20 + image.data.len());
    write!(out, "{magic}\n{width} {height}\n255\n").expect("write to Vec");
    for r in 0..height {
        for c in 0..width {
            for ch in 0..channels {
                out.push(((image.get(ch, r, c) - lo) * scale).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(out)
}

pub fn save_pnm(image: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), &encode_pnm(image)?)
}
