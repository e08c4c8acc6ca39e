//! Small-time horizon below which the polymer expansion of the evolved measure converges.
use gibbsflow::analysis::{cluster_horizon, HorizonParams};
use gibbsflow::interaction::Interaction;

fn main() -> gibbsflow::Result<()> {
    let zero = Interaction::zero(2);
    for beta in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let hz = cluster_horizon(
            &Interaction::ising(beta, 0.0, 2)?,
            &zero,
            &HorizonParams::default(),
        )?;
        println!(
            "beta {beta}: C {:.3}, z {}, t0 {:.3e}",
            hz.c, hz.connectivity, hz.t0
        );
    }
    Ok(())
}
