//! Solve closed-form steering directions for a few operators on a synthetic
//! BigGAN-shaped first level.
use steerlab::closed_form::linear_direction;
use steerlab::operators::{make_rot90, make_shift, make_zoom, Axis, Boundary, ZoomDirection};
use steerlab::weights::{biggan128_level_shapes, synthesize_bundle};

fn main() -> steerlab::Result<()> {
    let bundle = synthesize_bundle(&biggan128_level_shapes(), 0);
    let level = bundle.level(1)?;
    let dims = level.dims();
    let ops = [
        make_shift(dims, Axis::X, 1, Boundary::ZeroFill)?,
        make_shift(dims, Axis::Y, -1, Boundary::Cyclic)?,
        make_zoom(dims, ZoomDirection::In)?,
        make_rot90(dims, 1)?,
    ];
    for op in &ops {
        let dir = linear_direction(level, op)?;
        let solve = dir.solve.expect("solver fills the report");
        println!(
            "{:?}: ‖q‖ = {:.4}, rank {}/{}, relative residual {:.1e}",
            op.kind(),
            dir.norm(),
            solve.rank,
            solve.columns,
            solve.relative_residual
        );
    }
    Ok(())
}
