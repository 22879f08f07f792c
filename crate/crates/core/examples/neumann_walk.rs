//! A Neumann walk on a toy generator's first layer, its fixed point, and a
//! refined walk that takes four steps per original step.
use steerlab::operators::{make_zoom, ZoomDirection};
use steerlab::rng::{normal_vector, seeded};
use steerlab::toygen::{build_toy_generator, ToyGenSpec};
use steerlab::walks::{endpoint, neumann_params, neumann_walk, refine};
use steerlab::weights::ChunkRange;

fn main() -> steerlab::Result<()> {
    let gen = build_toy_generator(&ToyGenSpec { seed: 2, ..ToyGenSpec::default() })?;
    let op = make_zoom(gen.first.dims(), ZoomDirection::Out)?;
    let params = neumann_params(&gen.first, &op)?;
    println!("max |M_ii| = {:.4}", params.spectral_norm());

    let width = gen.first.latent_width();
    let z0 = normal_vector(&mut seeded(5), width);
    let chunk = ChunkRange::new(0, width);
    let walk = neumann_walk(&z0, chunk, &params, 40)?;
    if let Ok(limit) = endpoint(&params) {
        for n in [0, 1, 5, 20, 39] {
            println!("step {n:>2}: distance to fixed point {:.3e}", (&walk.points[n] - &limit).norm());
        }
    }

    match refine(&params, 4) {
        Ok(fine) => {
            let fine_walk = neumann_walk(&z0, chunk, &fine, 5)?;
            let gap = (&fine_walk.points[4] - &walk.points[1]).norm();
            println!("four refined steps vs one step: {gap:.2e}");
        }
        Err(e) => println!("refinement unavailable: {e}"),
    }
    Ok(())
}
