//! Weight bundles: the first dense layer of every hierarchy level of a generator.
//!
//! A bundle lives on disk as a zip archive holding one NPY array per tensor
//! (`level{i}.W.npy`, `level{i}.b.npy`, levels numbered from 1) and a
//! `meta.json` manifest with the latent layout and per-level output dims.
//! Because entries carry the `.npy` suffix the archive also opens as a numpy
//! `.npz` file.
//!
//! Rows of every `W` and entries of every `b` are flattened channel-major, then
//! row-major over space: `index = c·H·W + r·W + col` (see [`Dims::flat_index`]).

use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::npy::{self, Dtype, NpyArray};

/// Output tensor shape of a level: channels × height × width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Dims {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl From<[usize; 3]> for Dims {
    fn from([channels, height, width]: [usize; 3]) -> Self {
        Dims { channels, height, width }
    }
}

impl From<Dims> for [usize; 3] {
    fn from(d: Dims) -> Self {
        [d.channels, d.height, d.width]
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

impl Dims {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Dims { channels, height, width }
    }

    /// Cells of one spatial plane.
    pub fn spatial_len(&self) -> usize {
        self.height * self.width
    }

    /// Length of the flattened tensor.
    pub fn len(&self) -> usize {
        self.channels * self.spatial_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, channel: usize, row: usize, col: usize) -> usize {
        debug_assert!(channel < self.channels && row < self.height && col < self.width);
        channel * self.spatial_len() + row * self.width + col
    }

    /// Inverse of [`Dims::flat_index`].
    pub fn unflatten(&self, index: usize) -> (usize, usize, usize) {
        let plane = self.spatial_len();
        let (c, rem) = (index / plane, index % plane);
        (c, rem / self.width, rem % self.width)
    }
}

/// Half-open interval `[start, end)` of latent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct ChunkRange {
    pub start: usize,
    pub end: usize,
}

impl From<[usize; 2]> for ChunkRange {
    fn from([start, end]: [usize; 2]) -> Self {
        ChunkRange { start, end }
    }
}

impl From<ChunkRange> for [usize; 2] {
    fn from(c: ChunkRange) -> Self {
        [c.start, c.end]
    }
}

impl From<std::ops::Range<usize>> for ChunkRange {
    fn from(r: std::ops::Range<usize>) -> Self {
        ChunkRange { start: r.start, end: r.end }
    }
}

impl ChunkRange {
    pub const fn new(start: usize, end: usize) -> Self {
        ChunkRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// How a full latent vector is split into per-level chunks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentLayout {
    pub latent_dim: usize,
    pub chunks: Vec<ChunkRange>,
}

impl LatentLayout {
    /// `count` consecutive chunks of `width` coordinates each.
    pub fn uniform(count: usize, width: usize) -> Self {
        LatentLayout {
            latent_dim: count * width,
            chunks: (0..count).map(|i| ChunkRange::new(i * width, (i + 1) * width)).collect(),
        }
    }

    /// Checks the chunks are non-empty, sorted, disjoint and inside the latent.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.latent_dim == 0 {
            return Err("latent_dim must be positive".into());
        }
        for (i, c) in self.chunks.iter().enumerate() {
            if c.is_empty() {
                return Err(format!("chunk {} [{}, {}) is empty", i + 1, c.start, c.end));
            }
            if c.end > self.latent_dim {
                return Err(format!(
                    "chunk {} [{}, {}) exceeds latent_dim {}",
                    i + 1,
                    c.start,
                    c.end,
                    self.latent_dim
                ));
            }
        }
        for (i, pair) in self.chunks.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if b.start < a.end {
                return Err(format!(
                    "chunks {} [{}, {}) and {} [{}, {}) overlap or are out of order",
                    i + 1,
                    a.start,
                    a.end,
                    i + 2,
                    b.start,
                    b.end
                ));
            }
        }
        Ok(())
    }

    /// Chunk of a 1-based level.
    pub fn chunk(&self, level: usize) -> Result<ChunkRange> {
        level
            .checked_sub(1)
            .and_then(|i| self.chunks.get(i))
            .copied()
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "level {level} out of range 1..={}",
                    self.chunks.len()
                ))
            })
    }
}

/// First-layer weights of one level: `W` maps the level's latent chunk to its
/// flattened output tensor, `b` is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelWeights {
    w: DMatrix<f64>,
    b: DVector<f64>,
    dims: Dims,
}

impl LevelWeights {
    /// Assembles a level without checking; use [`LevelWeights::checked`] or
    /// [`WeightBundle::validate`] to enforce the shape invariants.
    pub fn new(w: DMatrix<f64>, b: DVector<f64>, dims: Dims) -> Self {
        LevelWeights { w, b, dims }
    }

    pub fn checked(w: DMatrix<f64>, b: DVector<f64>, dims: Dims) -> Result<Self> {
        let level = LevelWeights::new(w, b, dims);
        let checks = level_checks(1, &level, None);
        match checks.into_iter().find(|c| !c.passed) {
            Some(fail) => Err(fail.into_error()),
            None => Ok(level),
        }
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Width of the latent chunk this level consumes.
    pub fn latent_width(&self) -> usize {
        self.w.ncols()
    }
}

/// Every level of a generator plus its latent layout. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    levels: Vec<LevelWeights>,
    layout: LatentLayout,
    dtype: Dtype,
}

impl WeightBundle {
    /// Unchecked constructor, stored as float64.
    pub fn new(levels: Vec<LevelWeights>, layout: LatentLayout) -> Self {
        WeightBundle {
            levels,
            layout,
            dtype: Dtype::F64,
        }
    }

    /// Builds a bundle and fails on the first violated invariant.
    pub fn checked(levels: Vec<LevelWeights>, layout: LatentLayout) -> Result<Self> {
        let bundle = WeightBundle::new(levels, layout);
        bundle.validate().into_result()?;
        Ok(bundle)
    }

    /// Storage dtype used when saving. Set to the dtype found on load.
    pub fn with_dtype(mut self, dtype: Dtype) -> Self {
        self.dtype = dtype;
        self
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn levels(&self) -> &[LevelWeights] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// 1-based level access.
    pub fn level(&self, level: usize) -> Result<&LevelWeights> {
        level
            .checked_sub(1)
            .and_then(|i| self.levels.get(i))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "level {level} out of range 1..={}",
                    self.levels.len()
                ))
            })
    }

    pub fn layout(&self) -> &LatentLayout {
        &self.layout
    }

    pub fn latent_dim(&self) -> usize {
        self.layout.latent_dim
    }

    pub fn chunk(&self, level: usize) -> Result<ChunkRange> {
        self.layout.chunk(level)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_bundle(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Structure,
    Shape,
    NonFinite,
    Chunks,
}

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub key: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    index: Option<usize>,
}

impl Check {
    fn pass(name: impl Into<String>, key: impl Into<String>, kind: CheckKind) -> Self {
        Check {
            name: name.into(),
            key: key.into(),
            kind,
            passed: true,
            detail: String::new(),
            index: None,
        }
    }

    fn outcome(
        name: impl Into<String>,
        key: impl Into<String>,
        kind: CheckKind,
        failure: Option<String>,
    ) -> Self {
        let mut check = Check::pass(name, key, kind);
        if let Some(detail) = failure {
            check.passed = false;
            check.detail = detail;
        }
        check
    }

    fn into_error(self) -> Error {
        match self.kind {
            CheckKind::NonFinite => Error::NonFinite {
                key: self.key,
                index: self.index.unwrap_or_default(),
            },
            CheckKind::Shape => Error::ShapeMismatch {
                key: self.key,
                expected: self.name,
                found: self.detail,
            },
            CheckKind::Chunks => Error::ChunkRanges(self.detail),
            CheckKind::Structure => Error::Manifest(format!("{}: {}", self.key, self.detail)),
        }
    }
}

/// Pass/fail list for every bundle invariant.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// First failure as an error.
    pub fn into_result(self) -> Result<()> {
        match self.checks.into_iter().find(|c| !c.passed) {
            Some(c) => Err(c.into_error()),
            None => Ok(()),
        }
    }
}

fn first_non_finite<'a>(values: impl Iterator<Item = &'a f64>) -> Option<usize> {
    values.enumerate().find(|(_, v)| !v.is_finite()).map(|(i, _)| i)
}

fn level_checks(index: usize, level: &LevelWeights, chunk: Option<ChunkRange>) -> Vec<Check> {
    let wkey = format!("level{index}.W");
    let bkey = format!("level{index}.b");
    let dims = level.dims;
    let mut out = Vec::new();

    out.push(Check::outcome(
        "dims are positive",
        format!("level{index}.dims"),
        CheckKind::Shape,
        (dims.channels == 0 || dims.height == 0 || dims.width == 0)
            .then(|| format!("dims {dims} has a zero extent")),
    ));
    out.push(Check::outcome(
        format!("{} rows (C*H*W for dims {dims})", dims.len()),
        wkey.clone(),
        CheckKind::Shape,
        (level.w.nrows() != dims.len()).then(|| format!("{} rows", level.w.nrows())),
    ));
    out.push(Check::outcome(
        format!("length {} (rows of W)", level.w.nrows()),
        bkey.clone(),
        CheckKind::Shape,
        (level.b.len() != level.w.nrows()).then(|| format!("length {}", level.b.len())),
    ));
    out.push(Check::outcome(
        "at least one column",
        wkey.clone(),
        CheckKind::Shape,
        (level.w.ncols() == 0).then(|| "0 columns".to_string()),
    ));
    if let Some(chunk) = chunk {
        out.push(Check::outcome(
            format!("{} columns (chunk width)", chunk.len()),
            wkey.clone(),
            CheckKind::Shape,
            (level.w.ncols() != chunk.len()).then(|| format!("{} columns", level.w.ncols())),
        ));
    }

    // W is column-major in memory; report the row-major flat index the file uses.
    let bad_w = level
        .w
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite())
        .map(|(i, _)| {
            let (r, c) = (i % level.w.nrows(), i / level.w.nrows());
            r * level.w.ncols() + c
        });
    let mut check = Check::outcome(
        "all entries finite",
        wkey,
        CheckKind::NonFinite,
        bad_w.map(|i| format!("non-finite entry at flat index {i}")),
    );
    check.index = bad_w;
    out.push(check);

    let bad_b = first_non_finite(level.b.iter());
    let mut check = Check::outcome(
        "all entries finite",
        bkey,
        CheckKind::NonFinite,
        bad_b.map(|i| format!("non-finite entry at index {i}")),
    );
    check.index = bad_b;
    out.push(check);
    out
}

/// Runs every bundle invariant and reports each outcome. Never fails.
pub fn validate_bundle(bundle: &WeightBundle) -> ValidationReport {
    let mut checks = Vec::new();
    checks.push(Check::outcome(
        "at least one level",
        "levels",
        CheckKind::Structure,
        bundle.levels.is_empty().then(|| "bundle has no levels".to_string()),
    ));
    checks.push(Check::outcome(
        "one chunk range per level",
        "meta.json:chunk_ranges",
        CheckKind::Chunks,
        (bundle.layout.chunks.len() != bundle.levels.len()).then(|| {
            format!(
                "{} chunk ranges for {} levels",
                bundle.layout.chunks.len(),
                bundle.levels.len()
            )
        }),
    ));
    checks.push(Check::outcome(
        "chunk ranges non-empty, sorted, disjoint, inside latent_dim",
        "meta.json:chunk_ranges",
        CheckKind::Chunks,
        bundle.layout.check().err(),
    ));
    for (i, level) in bundle.levels.iter().enumerate() {
        checks.extend(level_checks(i + 1, level, bundle.layout.chunks.get(i).copied()));
    }
    ValidationReport { checks }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    latent_dim: usize,
    chunk_ranges: Vec<ChunkRange>,
    dims: Vec<Dims>,
}

pub fn w_key(level: usize) -> String {
    format!("level{level}.W")
}

pub fn b_key(level: usize) -> String {
    format!("level{level}.b")
}

fn entry_options() -> zip::write::SimpleFileOptions {
    zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Stored)
        .last_modified_time(zip::DateTime::default())
        .unix_permissions(0o644)
}

/// Serializes a bundle into container bytes. Output is canonical: fixed entry
/// order, stored entries, fixed timestamps.
pub fn bundle_to_bytes(bundle: &WeightBundle) -> Result<Vec<u8>> {
    let mut zip = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let manifest = Manifest {
        latent_dim: bundle.layout.latent_dim,
        chunk_ranges: bundle.layout.chunks.clone(),
        dims: bundle.levels.iter().map(|l| l.dims).collect(),
    };
    zip.start_file("meta.json", entry_options())?;
    let json = serde_json::to_vec_pretty(&manifest)?;
    zip.write_all(&json).map_err(|e| Error::io("meta.json", e))?;

    for (i, level) in bundle.levels.iter().enumerate() {
        let mut w = NpyArray::from_matrix(&level.w);
        w.dtype = bundle.dtype;
        let mut b = NpyArray::vector(level.b.as_slice().to_vec());
        b.dtype = bundle.dtype;
        for (key, array) in [(w_key(i + 1), w), (b_key(i + 1), b)] {
            zip.start_file(format!("{key}.npy"), entry_options())?;
            zip.write_all(&npy::to_bytes(&array)).map_err(|e| Error::io(key, e))?;
        }
    }
    Ok(zip.finish()?.into_inner())
}

/// Writes the container atomically (temp file + rename).
pub fn save_bundle(bundle: &WeightBundle, path: impl AsRef<Path>) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), &bundle_to_bytes(bundle)?)
}

fn read_entry<R: Read + Seek>(archive: &mut zip::ZipArchive<R>, key: &str) -> Result<Vec<u8>> {
    let name = if archive.index_for_name(&format!("{key}.npy")).is_some() {
        format!("{key}.npy")
    } else if archive.index_for_name(key).is_some() {
        key.to_string()
    } else {
        return Err(Error::MissingKey(key.to_string()));
    };
    let mut entry = archive.by_name(&name)?;
    let mut bytes = Vec::with_capacity(entry.size() as usize);
    entry.read_to_end(&mut bytes).map_err(|e| Error::io(&name, e))?;
    Ok(bytes)
}

/// Parses and validates container bytes.
pub fn bundle_from_bytes(bytes: &[u8]) -> Result<WeightBundle> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))?;
    let manifest: Manifest = serde_json::from_slice(&read_entry(&mut archive, "meta.json")?)?;
    if manifest.dims.is_empty() {
        return Err(Error::Manifest("meta.json declares no levels".into()));
    }

    let mut levels = Vec::with_capacity(manifest.dims.len());
    let mut dtype = None;
    for (i, dims) in manifest.dims.iter().enumerate() {
        let (wk, bk) = (w_key(i + 1), b_key(i + 1));
        let w = npy::read_npy(&mut read_entry(&mut archive, &wk)?.as_slice(), &wk)?;
        let b = npy::read_npy(&mut read_entry(&mut archive, &bk)?.as_slice(), &bk)?;
        for array in [&w, &b] {
            match dtype {
                None => dtype = Some(array.dtype),
                Some(d) if d != array.dtype => {
                    return Err(Error::Manifest("arrays mix float32 and float64".into()))
                }
                Some(_) => {}
            }
        }
        levels.push(LevelWeights::new(w.to_matrix(&wk)?, b.to_vector(&bk)?, *dims));
    }

    let bundle = WeightBundle::new(
        levels,
        LatentLayout {
            latent_dim: manifest.latent_dim,
            chunks: manifest.chunk_ranges,
        },
    )
    .with_dtype(dtype.unwrap_or_default());
    bundle.validate().into_result()?;
    Ok(bundle)
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<WeightBundle> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    bundle_from_bytes(&bytes)
}

/// Shape of one synthetic level: output dims and latent chunk width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelShape {
    pub dims: Dims,
    pub latent_width: usize,
}

/// BigGAN-128 shaped levels: a 4×4×1536 first layer and five class-conditional
/// batch-norm projections (gain and bias for both norms of each block), all
/// fed by 20-wide chunks of a 120-dim latent.
pub fn biggan128_level_shapes() -> Vec<LevelShape> {
    let mut shapes = vec![LevelShape {
        dims: Dims::new(1536, 4, 4),
        latent_width: 20,
    }];
    for (cin, cout) in [(1536, 1536), (1536, 768), (768, 384), (384, 192), (192, 96)] {
        shapes.push(LevelShape {
            dims: Dims::new(2 * (cin + cout), 1, 1),
            latent_width: 20,
        });
    }
    shapes
}

/// Random bundle with standard-normal weights scaled by `1/sqrt(width)` and
/// standard-normal biases, chunks laid out back to back.
pub fn synthesize_bundle(shapes: &[LevelShape], seed: u64) -> WeightBundle {
    let mut rng = crate::rng::seeded(seed);
    let mut chunks = Vec::with_capacity(shapes.len());
    let mut offset = 0;
    let levels = shapes
        .iter()
        .map(|shape| {
            chunks.push(ChunkRange::new(offset, offset + shape.latent_width));
            offset += shape.latent_width;
            let rows = shape.dims.len();
            let scale = 1.0 / (shape.latent_width as f64).sqrt();
            let w = crate::rng::normal_matrix(&mut rng, rows, shape.latent_width) * scale;
            let b = crate::rng::normal_vector(&mut rng, rows);
            LevelWeights::new(w, b, shape.dims)
        })
        .collect();
    WeightBundle::new(
        levels,
        LatentLayout {
            latent_dim: offset,
            chunks,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_bundle() -> WeightBundle {
        synthesize_bundle(
            &[
                LevelShape { dims: Dims::new(2, 2, 2), latent_width: 3 },
                LevelShape { dims: Dims::new(4, 1, 1), latent_width: 2 },
            ],
            7,
        )
    }

    #[test]
    fn flat_index_is_channel_major_row_major() {
        let d = Dims::new(3, 4, 5);
        assert_eq!(d.flat_index(0, 0, 1), 1);
        assert_eq!(d.flat_index(0, 1, 0), 5);
        assert_eq!(d.flat_index(1, 0, 0), 20);
        for i in 0..d.len() {
            let (c, r, col) = d.unflatten(i);
            assert_eq!(d.flat_index(c, r, col), i);
        }
    }

    #[test]
    fn synthesized_bundle_validates() {
        let report = small_bundle().validate();
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn bias_length_mismatch_is_shape_error() {
        let w = DMatrix::zeros(4, 2);
        let b = DVector::zeros(3);
        let err = LevelWeights::checked(w, b, Dims::new(1, 2, 2)).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { ref key, .. } if key == "level1.b"), "{err}");
    }

    #[test]
    fn nan_is_reported_with_level_and_index() {
        let mut w = DMatrix::from_element(4, 2, 1.0);
        w[(2, 1)] = f64::NAN;
        let bundle = WeightBundle::new(
            vec![LevelWeights::new(w, DVector::zeros(4), Dims::new(1, 2, 2))],
            LatentLayout::uniform(1, 2),
        );
        let report = bundle.validate();
        let fail: Vec<_> = report.failures().collect();
        assert_eq!(fail.len(), 1);
        assert_eq!(fail[0].key, "level1.W");
        assert!(fail[0].detail.contains("flat index 5"), "{}", fail[0].detail);
        assert!(matches!(
            report.into_result(),
            Err(Error::NonFinite { index: 5, .. })
        ));
    }

    #[test]
    fn overlapping_chunks_fail() {
        let layout = LatentLayout {
            latent_dim: 40,
            chunks: vec![ChunkRange::new(0, 20), ChunkRange::new(15, 40)],
        };
        assert!(layout.check().unwrap_err().contains("overlap"));
        let levels = vec![
            LevelWeights::new(DMatrix::zeros(1, 20), DVector::zeros(1), Dims::new(1, 1, 1)),
            LevelWeights::new(DMatrix::zeros(1, 25), DVector::zeros(1), Dims::new(1, 1, 1)),
        ];
        let report = WeightBundle::new(levels, layout).validate();
        assert!(report.failures().any(|c| c.kind == CheckKind::Chunks));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let bundle = small_bundle();
        let bytes = bundle_to_bytes(&bundle).unwrap();
        let back = bundle_from_bytes(&bytes).unwrap();
        assert_eq!(back, bundle);
        assert_eq!(bundle_to_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn float32_storage_survives_round_trip() {
        let bundle = small_bundle().with_dtype(Dtype::F32);
        let bytes = bundle_to_bytes(&bundle).unwrap();
        let back = bundle_from_bytes(&bytes).unwrap();
        assert_eq!(back.dtype(), Dtype::F32);
        assert_eq!(bundle_to_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn missing_key_is_named() {
        let bundle = small_bundle();
        let mut zip = zip::ZipWriter::new(Cursor::new(Vec::new()));
        zip.start_file("meta.json", entry_options()).unwrap();
        let manifest = Manifest {
            latent_dim: 5,
            chunk_ranges: bundle.layout.chunks.clone(),
            dims: bundle.levels.iter().map(|l| l.dims).collect(),
        };
        zip.write_all(&serde_json::to_vec(&manifest).unwrap()).unwrap();
        let bytes = zip.finish().unwrap().into_inner();
        let err = bundle_from_bytes(&bytes).unwrap_err();
        assert!(matches!(err, Error::MissingKey(ref k) if k == "level1.W"), "{err}");
    }

    #[test]
    fn biggan_first_level_shape() {
        let shapes = biggan128_level_shapes();
        assert_eq!(shapes.len(), 6);
        assert_eq!(shapes[0].dims.len(), 24576);
        assert_eq!(shapes.iter().map(|s| s.latent_width).sum::<usize>(), 120);
    }
}
