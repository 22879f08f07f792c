//! Copy per-level latent chunks between two codes with the named presets.
use steerlab::rng::{normal_vector, seeded};
use steerlab::transfer::{preset_schedule, swap_chunks};
use steerlab::weights::LatentLayout;

fn main() -> steerlab::Result<()> {
    let layout = LatentLayout::uniform(6, 20);
    let mut rng = seeded(9);
    let src = normal_vector(&mut rng, layout.latent_dim);
    let tgt = normal_vector(&mut rng, layout.latent_dim);
    for name in ["pose", "color", "texture"] {
        let schedule = preset_schedule(name)?;
        let out = swap_chunks(&src, &tgt, &schedule, &layout)?;
        let from_target = (0..out.len()).filter(|&i| out[i] == tgt[i]).count();
        println!("{name:<8} levels {:?}: {from_target} of {} entries from the target", schedule.levels, out.len());
    }
    Ok(())
}
