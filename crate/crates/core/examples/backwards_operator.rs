//! The backwards operator: E[f(σ_s) | σ_t] under the evolved law, for s between 0 and t.
use std::sync::Arc;

use gibbsflow::dynamics::{backwards_operator, RateSpec};
use gibbsflow::gibbs::{exact_measure, GibbsSpec, StateSpace};
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Lattice, Region, Topology};

fn main() -> gibbsflow::Result<()> {
    let lat = Arc::new(Lattice::new(vec![5], Topology::Open)?);
    let nu = exact_measure(
        &GibbsSpec::torus(Interaction::ising(0.9, 0.0, 1)?, lat.clone())?,
        12,
    )?;
    let rates = RateSpec::uniform(lat.clone(), Region::all(&lat), 0.5)?;
    let space: &StateSpace = nu.space();
    let x = lat.center();
    let pos = space.position(x).expect("centre is in the volume");
    // f = σ(x)
    let f: Vec<f64> = (0..space.n_states())
        .map(|s| StateSpace::spin(s, pos) as f64)
        .collect();
    let all_plus = 0;
    let t = 1.0;
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = backwards_operator(nu.probs(), &rates, s, t, &f)?;
        println!(
            "s {s:.2}: E[sigma_s(x) | sigma_t = all plus] = {:.6}",
            g[all_plus]
        );
    }
    Ok(())
}
