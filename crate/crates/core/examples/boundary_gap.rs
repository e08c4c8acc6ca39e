//! Plus/minus boundary gap at the centre of nested cubes, exact for small cubes.
use gibbsflow::gibbs::{two_bc_gap, McParams};
use gibbsflow::interaction::Interaction;

fn main() -> gibbsflow::Result<()> {
    let params = McParams {
        sweeps: 2000,
        burn_in: 200,
        replicas: 4,
        seed: 5,
        ..McParams::default()
    };
    for beta in [0.2, 0.8] {
        let u = Interaction::ising(beta, 0.0, 2)?;
        let rows = two_bc_gap(2, &[3, 4, 8, 12], 1, |_| Ok(u.clone()), &params, 16)?;
        for r in rows {
            println!(
                "beta {beta} L {:>2}: gap {:.4} +- {:.4}{}",
                r.side,
                r.gap,
                r.stderr,
                if r.exact { " (exact)" } else { "" }
            );
        }
    }
    Ok(())
}
