//! Seeded Gillespie trajectories and their JSON-lines form.
use std::sync::Arc;

use gibbsflow::dynamics::{gillespie_replica, rates_from_interaction};
use gibbsflow::gibbs::Boundary;
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Lattice, Region, SpecialConfig, Topology};

fn main() -> gibbsflow::Result<()> {
    let lat = Arc::new(Lattice::cube(2, 16, Topology::Torus)?);
    let rates = rates_from_interaction(
        &Interaction::ising(0.6, 0.0, 2)?,
        lat.clone(),
        Region::all(&lat),
        Boundary::Free,
    )?;
    let start = SpecialConfig::AllPlus.build(lat)?;
    for replica in 0..4 {
        let traj = gillespie_replica(&start, &rates, 3.0, 42, replica)?;
        println!(
            "replica {replica}: {} flips, final magnetization {:.4}",
            traj.events.len(),
            traj.final_state().magnetization()
        );
    }
    let short = gillespie_replica(&start, &rates, 0.01, 42, 0)?;
    short.write_json_lines(std::io::stdout().lock())?;
    Ok(())
}
