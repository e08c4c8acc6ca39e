//! The single-flip Radon-Nikodym derivative of the evolved measure computed three ways,
//! and its sensitivity to far-away spins.
use std::sync::Arc;

use gibbsflow::analysis::{continuity_probe, rn_derivative_check};
use gibbsflow::dynamics::RateSpec;
use gibbsflow::gibbs::GibbsSpec;
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Lattice, Region, Topology};

fn main() -> gibbsflow::Result<()> {
    let lat = Arc::new(Lattice::new(vec![8], Topology::Open)?);
    let nu = GibbsSpec::torus(Interaction::ising(0.5, 0.0, 1)?, lat.clone())?;
    let rates = RateSpec::product(lat.clone(), Region::all(&lat), 0.0)?;
    let x = 4;
    for t in [0.01, 0.05] {
        for k in 1..=4 {
            let c = rn_derivative_check(&nu, &rates, t, x, Some(k))?;
            println!(
                "t {t} k {k}: |direct - weighted| {:.1e}, |direct - cluster| {:.1e}",
                c.max_ab,
                c.max_ac.unwrap_or(f64::NAN)
            );
        }
    }
    for row in continuity_probe(&nu, &rates, 0.05, x)? {
        println!("radius {}: sensitivity {:.3e}", row.radius, row.sensitivity);
    }
    Ok(())
}
