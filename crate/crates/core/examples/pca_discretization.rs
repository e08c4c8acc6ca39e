//! Discrete-time (parallel update) approximation converging at order 1/n.
use std::sync::Arc;

use gibbsflow::dynamics::{evolve_exact, pca_flip_probability, pca_kernel, RateSpec};
use gibbsflow::gibbs::{total_variation, Boundary};
use gibbsflow::lattice::{Lattice, Region, Topology};

fn main() -> gibbsflow::Result<()> {
    let t: f64 = 1.0;
    let limit = -0.5 * (-2.0 * t).exp_m1();
    let lat = Arc::new(Lattice::new(vec![4], Topology::Open)?);
    let rates = RateSpec::alignment(lat.clone(), Region::all(&lat), 0.5, Boundary::Free)?;
    let mut law = vec![0.0; 16];
    law[0] = 1.0;
    let exact = evolve_exact(&law, &rates, t)?;
    for n in [16.0, 32.0, 64.0, 128.0, 256.0] {
        let k = pca_kernel(&rates, n)?;
        let tv = total_variation(&k.evolve_law(&law, k.steps_for(t))?, &exact);
        let flip_err = (pca_flip_probability(n, t) - limit).abs();
        println!(
            "n {n:>3}: single-site error {flip_err:.2e} (< 2/n = {:.2e}), 4-site TV {tv:.2e}",
            2.0 / n
        );
    }
    Ok(())
}
