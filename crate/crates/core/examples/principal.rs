//! Principal directions of every level, and how the first level's basis
//! lines up with the second's.
use steerlab::principal::{bundle_bases, correlation_matrix};
use steerlab::weights::{biggan128_level_shapes, synthesize_bundle};

fn main() -> steerlab::Result<()> {
    let bundle = synthesize_bundle(&biggan128_level_shapes(), 0);
    let bases = bundle_bases(&bundle)?;
    for basis in &bases {
        let s = basis.sigmas();
        println!("level {}: σ₁ = {:.3}, σ_min = {:.3}, rank bound {}", basis.level, s[0], s[s.len() - 1], basis.rank_bound());
    }
    let corr = correlation_matrix(bases[0].vectors(), bases[1].vectors())?;
    println!("|cos| between leading directions of levels 1 and 2: {:.3}", corr[(0, 0)]);
    Ok(())
}
