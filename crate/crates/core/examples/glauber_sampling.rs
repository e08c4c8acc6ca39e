//! Heat-bath Glauber sampling with replicas, checked against exact enumeration.
use std::sync::Arc;

use gibbsflow::gibbs::{exact_measure, glauber_sample, GibbsSpec, McParams, Observable};
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Lattice, Topology};

fn main() -> gibbsflow::Result<()> {
    let lat = Arc::new(Lattice::cube(2, 4, Topology::Torus)?);
    let spec = GibbsSpec::torus(Interaction::ising(0.3, 0.1, 2)?, lat)?;
    let exact = exact_measure(&spec, 16)?.magnetization();
    let params = McParams {
        sweeps: 20_000,
        burn_in: 500,
        replicas: 4,
        seed: 11,
        ..McParams::default()
    };
    let est = glauber_sample(&spec, &params, Observable::Magnetization)?;
    println!("exact magnetization {exact:.6}");
    println!(
        "sampled             {:.6} +- {:.6}",
        est.mean,
        est.conservative_stderr()
    );
    println!(
        "z-score {:.2}",
        (est.mean - exact) / est.conservative_stderr()
    );
    Ok(())
}
