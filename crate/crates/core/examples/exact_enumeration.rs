//! Exact finite-volume Gibbs measures: brute-force enumeration against the transfer matrix.
use std::sync::Arc;

use gibbsflow::gibbs::{exact_measure, transfer_matrix_1d, ChainBoundary, GibbsSpec};
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Lattice, Topology};

fn main() -> gibbsflow::Result<()> {
    let n = 10;
    let u = Interaction::ising(0.7, 0.2, 1)?;
    let lat = Arc::new(Lattice::new(vec![n], Topology::Torus)?);
    let m = exact_measure(&GibbsSpec::torus(u.clone(), lat)?, 16)?;
    let tm = transfer_matrix_1d(&u, n, ChainBoundary::Periodic)?;
    println!("log Z enumeration {:.12}", m.log_partition());
    println!("log Z transfer    {:.12}", tm.log_z);
    println!(
        "<sigma_0> enumeration {:.12}  transfer {:.12}",
        m.mean_spin(0)?,
        tm.mean_spins()[0]
    );
    Ok(())
}
