//! Fields of the two-layer Hamiltonian, the Kadanoff field and the compensation time.
use gibbsflow::twolayer::{compensation_time, fields, kadanoff_field, time_for_kadanoff_field};

fn main() -> gibbsflow::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10}", "t", "h1", "h2", "h12");
    for t in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let f = fields(t, 0.5)?;
        println!("{t:>6} {:>10.6} {:>10.6} {:>10.6}", f.h1, f.h2, f.h12);
    }
    for h in [0.05, 1.0, 3.0] {
        let t = time_for_kadanoff_field(h)?;
        println!(
            "Kadanoff field {h} at t = {t:.6} (check {:.6})",
            kadanoff_field(t)?
        );
    }
    // time at which h12 - h1 equals the initial field
    println!(
        "compensation time for h = 0.05, delta = 1: {:.6}",
        compensation_time(0.05, 1.0)?
    );
    Ok(())
}
