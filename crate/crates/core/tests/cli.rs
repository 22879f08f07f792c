use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use steerlab::npy::{read_npy_file, NpyArray};
use steerlab::operators::{make_shift, Axis, Boundary};
use steerlab::walks::neumann_params;
use steerlab::weights::{load_bundle, save_bundle, Dims, LatentLayout, LevelWeights, WeightBundle};

fn steer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steer"))
        .args(args)
        .env_remove("STEER_SEED")
        .output()
        .expect("spawn steer")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The machine-readable error line; log records may precede it.
fn error_line(o: &Output) -> String {
    let text = stderr(o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("E:")).collect();
    assert_eq!(lines.len(), 1, "{text}");
    lines[0].to_string()
}

/// Two-level bundle whose first-level columns vary slowly across the grid, so
/// a one-cell shift gives `0 < M_ii < 1` and Neumann refinement is defined.
fn smooth_bundle(dir: &Path) -> PathBuf {
    let dims = Dims::new(3, 4, 4);
    let width = 5;
    let w = DMatrix::from_fn(dims.len(), width, |i, j| {
        let (c, r, col) = dims.unflatten(i);
        1.0 + 0.1 * (j as f64 + 1.0) * (r as f64 + col as f64 * 0.5) + 0.05 * c as f64 + (j as f64).sin()
    });
    let b = DVector::from_fn(dims.len(), |i, _| (i as f64 * 0.7).cos());
    let second = LevelWeights::new(
        DMatrix::from_fn(6, width, |i, j| ((i * 7 + j * 3) as f64).sin()),
        DVector::from_element(6, 0.5),
        Dims::new(6, 1, 1),
    );
    let bundle = WeightBundle::new(vec![LevelWeights::new(w, b, dims), second], LatentLayout::uniform(2, width));
    let p = dir.join("smooth.zip");
    save_bundle(&bundle, &p).unwrap();
    p
}

#[test]
fn direction_writes_vector_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let m = smooth_bundle(dir.path());
    let out = path(dir.path(), "q.npy");
    let o = steer(&["direction", "--bundle", m.to_str().unwrap(), "--level", "1", "--op", "zoom-in", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let q = read_npy_file(Path::new(&out)).unwrap();
    assert_eq!(q.shape, vec![5]);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("q.json")).unwrap()).unwrap();
    assert_eq!(meta["level"], 1);
    assert_eq!(meta["provenance"]["kind"], "zoom-in");
    assert!(meta["solve"]["relative_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn refined_neumann_walk_composes_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let m = smooth_bundle(dir.path());
    let out = path(dir.path(), "walk.npy");
    let o = steer(&[
        "walk", "--bundle", m.to_str().unwrap(), "--kind", "neumann", "--steps", "10", "--refine", "4", "--op",
        "shift-x", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = read_npy_file(Path::new(&out)).unwrap();
    assert_eq!(traj.shape, vec![10, 10]);

    let bundle = load_bundle(&m).unwrap();
    let level = bundle.level(1).unwrap();
    let op = make_shift(level.dims(), Axis::X, 1, Boundary::ZeroFill).unwrap();
    let params = neumann_params(level, &op).unwrap();
    let row = |n: usize| DVector::from_column_slice(&traj.data[n * 10..n * 10 + 5]);
    for n in 0..6 {
        let (start, after) = (row(n), row(n + 4));
        let once = params.m_diag().component_mul(&start) + params.q();
        assert!((&after - &once).norm() <= 1e-10 * once.norm(), "step {n}");
    }
    // the second level's chunk is untouched
    for n in 0..10 {
        assert_eq!(&traj.data[n * 10 + 5..n * 10 + 10], &traj.data[5..10]);
    }
}

#[test]
fn outputs_are_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let m = smooth_bundle(dir.path());
    let run = |name: &str, seed: Option<&str>, env: Option<&str>| -> Vec<u8> {
        let out = path(dir.path(), name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_steer"));
        cmd.args(["walk", "--bundle", m.to_str().unwrap(), "--kind", "great-circle", "--direction", "1", "--steps", "6", "--out", &out]);
        cmd.env_remove("STEER_SEED");
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("STEER_SEED", e);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let mut bytes = std::fs::read(&out).unwrap();
        bytes.extend(std::fs::read(dir.path().join(name).with_extension("json")).unwrap());
        bytes
    };
    let a = run("a.npy", None, None);
    assert_eq!(a, run("b.npy", None, None));
    assert_eq!(a, run("c.npy", Some("0"), Some("7")));
    let from_env = run("d.npy", None, Some("7"));
    assert_ne!(a, from_env);
    assert_eq!(from_env, run("e.npy", Some("7"), None));
}

#[test]
fn exit_codes_and_error_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let m = smooth_bundle(dir.path());
    let m = m.to_str().unwrap();

    let o = steer(&["walk", "--kind", "sideways"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).starts_with("E:1:"));

    let o = steer(&["direction", "--bundle", &path(dir.path(), "missing.zip"), "--op", "shift-x", "--out", &path(dir.path(), "q.npy")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_line(&o).starts_with("E:2:"));

    std::fs::write(dir.path().join("junk.zip"), b"not a zip").unwrap();
    let o = steer(&["import", "--bundle", &path(dir.path(), "junk.zip")]);
    assert_eq!(o.status.code(), Some(2));

    // P = −I gives M = −I, which has no real fractional power
    let neg = path(dir.path(), "neg.npy");
    let p = DMatrix::<f64>::identity(16, 16) * -1.0;
    steerlab::io::write_npy_file(Path::new(&neg), &NpyArray::from_matrix(&p)).unwrap();
    let o = steer(&[
        "walk", "--bundle", m, "--kind", "neumann", "--op", "custom", "--operator-file", &neg, "--refine", "3", "--out",
        &path(dir.path(), "w.npy"),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(error_line(&o).starts_with("E:3:"));
    assert!(!dir.path().join("w.npy").exists());

    // without refinement the same walk is well defined
    let o = steer(&[
        "walk", "--bundle", m, "--kind", "neumann", "--op", "custom", "--operator-file", &neg, "--out",
        &path(dir.path(), "w.npy"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn transfer_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let src: Vec<f64> = (0..120).map(|i| i as f64).collect();
    let tgt: Vec<f64> = (0..120).map(|i| -(i as f64)).collect();
    let (s, t) = (path(dir.path(), "s.npy"), path(dir.path(), "t.npy"));
    steerlab::io::write_npy_file(Path::new(&s), &NpyArray::vector(src.clone())).unwrap();
    steerlab::io::write_npy_file(Path::new(&t), &NpyArray::vector(tgt.clone())).unwrap();

    let out = path(dir.path(), "c.npy");
    let o = steer(&["transfer", "--schedule", "pose", "--src", &s, "--tgt", &t, "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = read_npy_file(Path::new(&out)).unwrap().data;
    for i in 0..120 {
        assert_eq!(c[i], if i < 20 { tgt[i] } else { src[i] });
    }

    let out = path(dir.path(), "c.json");
    let o = steer(&["transfer", "--schedule", "custom", "--levels", "2,6", "--src", &s, "--tgt", &t, "--out", &out, "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["data"][25], -25.0);
    assert_eq!(v["data"][45], 45.0);
    assert_eq!(v["data"][119], -119.0);

    let o = steer(&["transfer", "--schedule", "lighting", "--src", &s, "--tgt", &t, "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn principal_exports_basis_and_sigmas() {
    let dir = tempfile::tempdir().unwrap();
    let m = smooth_bundle(dir.path());
    let out = path(dir.path(), "v.npy");
    let o = steer(&["principal", "--bundle", m.to_str().unwrap(), "--level", "1", "--correlate-with", "2", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_npy_file(Path::new(&out)).unwrap();
    assert_eq!(v.shape, vec![5, 5]);
    let sigmas = read_npy_file(&dir.path().join("v.sigmas.npy")).unwrap();
    assert!(sigmas.data.windows(2).all(|p| p[0] >= p[1]));
    let corr = read_npy_file(&dir.path().join("v.corr2.npy")).unwrap();
    assert_eq!(corr.shape, vec![5, 5]);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(meta["basis"]["level"], 1);
}

#[test]
fn toygen_round_trip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = path(dir.path(), "toy.zip");
    let image = path(dir.path(), "img.pgm");
    let moved = path(dir.path(), "moved.pgm");
    let report = path(dir.path(), "report.json");
    let o = steer(&[
        "toygen", "--seed", "3", "--export-bundle", &bundle, "--image", &image, "--op", "shift-x", "--boundary",
        "cyclic", "--transformed-image", &moved, "--report", &report, "--samples", "500",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read(&image).unwrap().starts_with(b"P5\n16 16\n255\n"));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["closed_form_is_minimum"], true);

    let o = steer(&["verify", "--bundle", &bundle, "--criterion", "3,11"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 4);
}

#[test]
fn verify_rejects_unknown_criterion() {
    let o = steer(&["verify", "--criterion", "12"]);
    assert_eq!(o.status.code(), Some(2));
}
