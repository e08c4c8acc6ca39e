//! Ising interactions, their Dobrushin norm and the energy-density constant.
use gibbsflow::interaction::{energy_density_constant, Interaction};

fn main() -> gibbsflow::Result<()> {
    for beta in [0.1, 0.2, 0.25, 0.3] {
        let u = Interaction::ising(beta, 0.0, 2)?;
        let r = u.dobrushin()?;
        println!("beta {beta}: norm {:.3} satisfied {}", r.norm, r.satisfied);
    }
    let u = Interaction::ising(1.0, 0.5, 2)?;
    // 2 sup |H|/|Λ| over small tori; for Ising this is 2(dβ + |h|)
    let c = energy_density_constant(&u, 16)?;
    println!("C(beta=1, h=0.5, d=2) = {c}");
    Ok(())
}
