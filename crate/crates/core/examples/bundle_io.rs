//! Write a weight container, read it back, and run its validation checks.
use steerlab::weights::{biggan128_level_shapes, load_bundle, save_bundle, synthesize_bundle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("biggan128.zip");
    let bundle = synthesize_bundle(&biggan128_level_shapes(), 0);
    save_bundle(&bundle, &path)?;
    println!("wrote {} bytes", std::fs::metadata(&path)?.len());

    let loaded = load_bundle(&path)?;
    assert_eq!(loaded, bundle);
    let report = loaded.validate();
    for check in report.failures() {
        println!("FAIL {} {}: {}", check.key, check.name, check.detail);
    }
    println!("{} checks, all passed: {}", report.checks.len(), report.all_passed());
    Ok(())
}
