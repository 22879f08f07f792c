use std::io::{Cursor, Write};

use nalgebra::{DMatrix, DVector};
use steerlab::closed_form::linear_direction;
use steerlab::npy::{self, Dtype, NpyArray};
use steerlab::operators::{make_shift, make_zoom, Axis, Boundary, ZoomDirection};
use steerlab::principal::principal_directions;
use steerlab::toygen::{build_toy_generator, ToyGenSpec};
use steerlab::weights::{
    bundle_from_bytes, bundle_to_bytes, load_bundle, save_bundle, synthesize_bundle, Dims, LevelShape,
};
use steerlab::Error;

fn shapes() -> Vec<LevelShape> {
    vec![
        LevelShape { dims: Dims::new(4, 4, 4), latent_width: 6 },
        LevelShape { dims: Dims::new(10, 1, 1), latent_width: 3 },
    ]
}

#[test]
fn toy_first_layer_survives_the_container() {
    let gen = build_toy_generator(&ToyGenSpec { seed: 11, ..ToyGenSpec::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.zip");
    save_bundle(&gen.export_bundle(), &path).unwrap();
    let loaded = load_bundle(&path).unwrap();
    let level = loaded.level(1).unwrap();
    assert_eq!(level, &gen.first);

    for op in [
        make_shift(level.dims(), Axis::X, 1, Boundary::ZeroFill).unwrap(),
        make_zoom(level.dims(), ZoomDirection::Out).unwrap(),
    ] {
        let disk = linear_direction(level, &op).unwrap().q;
        let memory = linear_direction(&gen.first, &op).unwrap().q;
        assert!(disk.iter().zip(memory.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    assert_eq!(principal_directions(level).unwrap(), principal_directions(&gen.first).unwrap());
}

#[test]
fn saved_files_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    for dtype in [Dtype::F64, Dtype::F32] {
        let bundle = synthesize_bundle(&shapes(), 4).with_dtype(dtype);
        let (a, b) = (dir.path().join("a.zip"), dir.path().join("b.zip"));
        save_bundle(&bundle, &a).unwrap();
        save_bundle(&load_bundle(&a).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

/// Container written the way `numpy.savez_compressed` lays it out: deflated
/// entries, arbitrary order.
#[test]
fn reads_deflated_numpy_style_archives() {
    let bundle = synthesize_bundle(&shapes(), 5);
    let canonical = bundle_to_bytes(&bundle).unwrap();
    let mut source = zip::ZipArchive::new(Cursor::new(canonical)).unwrap();
    let names: Vec<String> = source.file_names().map(String::from).collect();

    let mut out = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let opts = zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Deflated);
    for name in names.iter().rev() {
        let mut bytes = Vec::new();
        std::io::copy(&mut source.by_name(name).unwrap(), &mut bytes).unwrap();
        // bare keys are accepted too
        let stored = if name.starts_with("level2") { name.trim_end_matches(".npy") } else { name };
        out.start_file(stored, opts).unwrap();
        out.write_all(&bytes).unwrap();
    }
    let bytes = out.finish().unwrap().into_inner();
    let back = bundle_from_bytes(&bytes).unwrap();
    assert_eq!(back, bundle);
}

#[test]
fn corrupt_containers_are_rejected() {
    assert!(matches!(bundle_from_bytes(b"PK nonsense"), Err(Error::Zip(_))));

    let mut w = DMatrix::from_element(4, 2, 1.0);
    w[(3, 0)] = f64::INFINITY;
    let bundle = steerlab::weights::WeightBundle::new(
        vec![steerlab::weights::LevelWeights::new(w, DVector::zeros(4), Dims::new(1, 2, 2))],
        steerlab::weights::LatentLayout::uniform(1, 2),
    );
    let bytes = bundle_to_bytes(&bundle).unwrap();
    assert!(matches!(bundle_from_bytes(&bytes), Err(Error::NonFinite { index: 6, .. })));
}

#[test]
fn npy_files_from_other_writers() {
    // a version 1.0 header padded to 16 bytes, as older numpy releases wrote
    let header = "{'descr': '<f8', 'fortran_order': False, 'shape': (2,), }";
    let mut bytes = b"\x93NUMPY\x01\x00".to_vec();
    let pad = (16 - (10 + header.len() + 1) % 16) % 16;
    let text = format!("{header}{}\n", " ".repeat(pad));
    bytes.extend((text.len() as u16).to_le_bytes());
    bytes.extend(text.as_bytes());
    for v in [1.5f64, -2.0] {
        bytes.extend(v.to_le_bytes());
    }
    let a = npy::read_npy(&mut bytes.as_slice(), "x").unwrap();
    assert_eq!(a, NpyArray::vector(vec![1.5, -2.0]));
}
