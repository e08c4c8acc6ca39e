//! Boxes, tori, regions and the named configurations used as boundaries.
use std::sync::Arc;

use gibbsflow::lattice::{Lattice, Region, SpecialConfig, Topology};

fn main() -> gibbsflow::Result<()> {
    let torus = Arc::new(Lattice::cube(2, 4, Topology::Torus)?);
    let centre = torus.center();
    println!(
        "4x4 torus: {} sites, centre {centre} at {:?}",
        torus.len(),
        torus.coords(centre)
    );
    println!("neighbours of 0 (wrapping): {:?}", torus.neighbors(0));

    let alt = SpecialConfig::Alternating.build(torus.clone())?;
    println!("alternating magnetization {}", alt.magnetization());
    let flipped = alt.flip(centre)?;
    println!("after flipping the centre: {}", flipped.magnetization());

    let open = Arc::new(Lattice::cube(2, 6, Topology::Open)?);
    let inner = Region::cube(&open, &[1, 1], 4)?;
    let outer = Region::all(&open);
    let collar = Region::annulus(&inner, &outer);
    println!(
        "6x6 box: inner cube {} sites, collar {} sites",
        inner.len(),
        collar.len()
    );

    let noisy = SpecialConfig::PerturbedAlternating { p: 0.25, seed: 3 }.build(open)?;
    println!(
        "perturbed alternating (p=0.25) magnetization {}",
        noisy.magnetization()
    );
    Ok(())
}
