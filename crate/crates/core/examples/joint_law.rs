//! The joint law of (σ_0, σ_t) from the two-layer Hamiltonian against kernel products.
use std::sync::Arc;

use gibbsflow::dynamics::{epsilon_from_delta, RateSpec};
use gibbsflow::gibbs::GibbsSpec;
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Lattice, Region, Topology};
use gibbsflow::twolayer::joint_consistency;

fn main() -> gibbsflow::Result<()> {
    let lat = Arc::new(Lattice::cube(2, 3, Topology::Torus)?);
    for (beta, delta) in [(0.4, 1.0), (1.0, 0.5)] {
        let nu = GibbsSpec::torus(Interaction::ising(beta, 0.0, 2)?, lat.clone())?;
        let rates = RateSpec::product(lat.clone(), Region::all(&lat), epsilon_from_delta(delta))?;
        for t in [0.1, 1.0, 5.0] {
            let c = joint_consistency(&nu, &rates, t)?;
            println!(
                "beta {beta} delta {delta} t {t}: TV {:.2e} over {} pairs",
                c.total_variation, c.pairs
            );
        }
    }
    Ok(())
}
