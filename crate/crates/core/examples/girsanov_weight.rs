//! Path-flip weights of the interacting dynamics against independent flips.
use std::sync::Arc;

use gibbsflow::dynamics::{gillespie_replica, girsanov_bound, girsanov_log_weight, RateSpec};
use gibbsflow::gibbs::Boundary;
use gibbsflow::lattice::{Lattice, Region, SpecialConfig, Topology};

fn main() -> gibbsflow::Result<()> {
    let lat = Arc::new(Lattice::cube(2, 6, Topology::Torus)?);
    let rates = RateSpec::alignment(lat.clone(), Region::all(&lat), 0.5, Boundary::Free)?;
    let start = SpecialConfig::Alternating.build(lat.clone())?;
    let x = lat.center();
    for replica in 0..5 {
        let traj = gillespie_replica(&start, &rates, 1.0, 9, replica)?;
        let lw = girsanov_log_weight(&traj, &rates, x)?;
        println!(
            "replica {replica}: log weight {lw:+.5}, bound on weight {:.3e}",
            girsanov_bound(&traj, &rates, x)
        );
    }
    Ok(())
}
