//! Great- and small-circle walks along principal directions; norms and the
//! untouched components stay fixed.
use steerlab::principal::{least_dominant, principal_directions};
use steerlab::rng::{normal_vector, seeded};
use steerlab::walks::{great_circle, match_step_sizes, small_circle};
use steerlab::weights::{biggan128_level_shapes, synthesize_bundle};

fn main() -> steerlab::Result<()> {
    let bundle = synthesize_bundle(&biggan128_level_shapes(), 1);
    let chunk = bundle.chunk(1)?;
    let basis = principal_directions(bundle.level(1)?)?;
    let v = basis.direction(1)?;
    let v_ref = least_dominant(&basis)?;
    let z0 = normal_vector(&mut seeded(3), bundle.latent_dim());

    let delta = match_step_sizes(0.5, &z0, chunk, &v, None)?;
    let great = great_circle(&z0, chunk, &v, delta, 0..=8)?;
    for (p, step) in great.points.iter().zip(&great.steps) {
        let c = p.rows(chunk.start, chunk.len());
        println!("great n={} angle {:+.3} ‖chunk‖ {:.6} ⟨chunk, v⟩ {:+.4}", step.index, step.angle.unwrap(), c.norm(), c.dot(v.as_vector()));
    }

    let small = small_circle(&z0, chunk, &v, &v_ref, 0.3, 0..=4)?;
    for p in &small.points {
        let c = p.rows(chunk.start, chunk.len());
        println!("small ⟨v⟩ {:+.4} ⟨v_ref⟩ {:+.4}", c.dot(v.as_vector()), c.dot(v_ref.as_vector()));
    }
    Ok(())
}
