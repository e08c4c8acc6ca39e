//! Exact evolution by uniformization: the reversible measure stays put, others relax toward it.
use std::sync::Arc;

use gibbsflow::dynamics::{evolve_exact, rates_from_interaction};
use gibbsflow::gibbs::{exact_measure, total_variation, Boundary, GibbsSpec};
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Lattice, Region, Topology};

fn main() -> gibbsflow::Result<()> {
    let lat = Arc::new(Lattice::cube(2, 3, Topology::Open)?);
    let vol = Region::all(&lat);
    let u_mu = Interaction::ising(0.5, 0.1, 2)?;
    let rates = rates_from_interaction(&u_mu, lat.clone(), vol.clone(), Boundary::Free)?;

    let mu = exact_measure(
        &GibbsSpec::new(u_mu, lat.clone(), vol.clone(), Boundary::Free)?,
        12,
    )?;
    let drift = total_variation(&evolve_exact(mu.probs(), &rates, 5.0)?, mu.probs());
    println!("invariant law, TV drift after t=5: {drift:.2e}");

    let nu = exact_measure(
        &GibbsSpec::new(Interaction::ising(1.2, 0.0, 2)?, lat, vol, Boundary::Free)?,
        12,
    )?;
    for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let law = evolve_exact(nu.probs(), &rates, t)?;
        println!(
            "t {t}: TV to reversible law {:.6}",
            total_variation(&law, mu.probs())
        );
    }
    Ok(())
}
