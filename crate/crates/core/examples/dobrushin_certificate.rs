//! Dobrushin certification of the evolved measure under independent flips.
use gibbsflow::analysis::dobrushin_evolved;
use gibbsflow::interaction::Interaction;

fn main() -> gibbsflow::Result<()> {
    for beta in [0.1, 0.2, 0.3, 1.0] {
        let c = dobrushin_evolved(&Interaction::ising(beta, 0.0, 2)?, 1.0, 1.0)?;
        let verdict = if c.certified_for_all_t {
            "Gibbs at every t"
        } else {
            "inconclusive"
        };
        println!("beta {beta}: norm {:.3} -> {verdict}", c.report.norm);
    }
    Ok(())
}
